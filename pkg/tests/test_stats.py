import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cmetas import stats
from cmetas.curves import Curve


class TestKS:
    def test_self_test_rate(self):
        rng = np.random.default_rng(0)
        fails = sum(not stats.ks_statistic(np.sort(rng.random(100_000)), lambda x: x).passes(0.01)
                    for _ in range(100))
        assert fails <= 3

    def test_constant_samples(self):
        ks = stats.ks_statistic(np.full(100, 0.3), lambda x: x)
        assert ks.statistic == pytest.approx(0.7)

    def test_single_at_median(self):
        assert stats.ks_statistic([0.5], lambda x: x).statistic == pytest.approx(0.5)

    def test_rejects_bad_input(self):
        with pytest.raises(ValueError):
            stats.ks_statistic([], lambda x: x)
        with pytest.raises(ValueError):
            stats.ks_statistic([0.5, 0.1], lambda x: x)

    def test_other_levels(self):
        ks = stats.ks_statistic(np.linspace(0.001, 0.999, 1000), lambda x: x)
        assert ks.passes(0.05) and ks.passes(0.10)


class TestHistogram:
    def test_uniform(self):
        rng = np.random.default_rng(1)
        h = stats.histogram_density(rng.random(50_000), np.linspace(0, 1, 11))
        assert np.all(np.abs(h.values - 1.0) < 3 * h.se)

    def test_empty_bin(self):
        h = stats.histogram_density(np.array([0.05, 0.15]), np.linspace(0, 1, 11))
        assert h.values[5] == 0.0 and h.se[5] == 0.0

    def test_exponential_chi_square(self):
        rng = np.random.default_rng(2)
        edges = np.linspace(0, 4, 21)
        h = stats.histogram_density(rng.exponential(size=100_000), edges)
        expect = stats.bin_average(lambda x: np.exp(-x), edges)
        chi2 = np.sum(((h.values - expect) / h.se) ** 2)
        assert chi2 < 45.3  # 99.9% point of chi2(20)

    def test_geometric_centres(self):
        h = stats.histogram_density(np.array([0.5]), np.array([0.1, 1.0, 10.0]))
        np.testing.assert_allclose(h.grid, [np.sqrt(0.1), np.sqrt(10.0)])

    def test_bad_edges(self):
        with pytest.raises(ValueError):
            stats.histogram_density([1.0], [1.0, 1.0])


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=1, max_size=200))
def test_histogram_mass_is_in_range_fraction(xs):
    edges = np.linspace(-2, 2, 9)
    h = stats.histogram_density(np.array(xs), edges)
    inside = np.mean((np.array(xs) >= -2) & (np.array(xs) <= 2))
    assert np.sum(h.values * np.diff(edges)) == pytest.approx(inside, abs=1e-12)


class TestCompare:
    def test_identical(self):
        c = Curve([1, 2, 3], [1.0, 2.0, 3.0], se=[0.1, 0.1, 0.1])
        rep = stats.compare_curves(c, c)
        assert (rep.sup_abs_err, rep.l2_err, rep.n_beyond_3se) == (0.0, 0.0, 0)
        assert rep.ok

    def test_gaussian_noise(self):
        rng = np.random.default_rng(3)
        x = np.arange(1, 10001, dtype=float)
        truth = Curve(x, np.sin(x))
        emp = Curve(x, np.sin(x) + rng.normal(size=x.size), se=np.ones_like(x))
        rep = stats.compare_curves(emp, truth)
        assert rep.n_beyond_3se <= 0.01 * x.size

    def test_disjoint_grids(self):
        with pytest.raises(ValueError):
            stats.compare_curves(Curve([1, 2], [0, 0]), Curve([3, 4], [0, 0]))

    def test_zero_se_floor(self):
        emp = Curve([1, 2], [0.0, 0.0], se=[0.0, 0.0])
        ana = Curve([1, 2], [0.0, 1e-3])
        assert stats.compare_curves(emp, ana).max_abs_z == np.inf
        rep = stats.compare_curves(emp, ana, se_floor=stats.null_se_probability([0.5, 0.5], 100))
        assert np.isfinite(rep.max_abs_z) and rep.ok

    def test_report_text(self):
        c = Curve([1.0], [1.0], se=[1.0])
        assert "p.sup_abs_err: 0.0" in stats.compare_curves(c, c).to_text("p.")


def test_null_se_density():
    se = stats.null_se_density(np.array([1.0]), [0.0, 0.5], 100)
    assert se[0] == pytest.approx(np.sqrt(0.25 / 100) / 0.5)


class TestCurve:
    def test_roundtrip(self, tmp_path):
        c = Curve([0.1, 0.2], [1 / 3, 2 / 3], se=[1e-17, 0.5], x_name="tau", y_name="p")
        c.to_csv(tmp_path / "c.csv", {"a": 1})
        back = Curve.read_csv(tmp_path / "c.csv")
        assert np.array_equal(back.values, c.values) and np.array_equal(back.se, c.se)
        assert back.meta == {"a": "1"} and back.y_name == "p"

    def test_validation(self):
        with pytest.raises(ValueError):
            Curve([1, 1], [0, 0])
        with pytest.raises(ValueError):
            Curve([1, 2], [0])
        with pytest.raises(ValueError):
            Curve([1, 2], [0, 0], se=[1])
