"""Branching simulation of the correlated-magnitude ETAS process.

Catalogs are generated generation by generation with vectorised numpy draws
from a PCG64 stream. Replicas use independent child streams spawned from the
master seed, so results do not depend on how replicas are scheduled.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator

import numpy as np
from scipy.special import kolmogi

from . import laws
from .curves import Curve
from .params import ModelParams, ParameterError

# Residual Omori mass of parents older than the burn-in is a(burn_in) < 1e-4,
# unless that needs more than BURN_IN_CAP_C time constants.
BURN_IN_RESIDUAL = 1e-4
BURN_IN_CAP_C = 1e5
MAX_EVENTS = 20_000_000


def default_burn_in(p: ModelParams) -> float:
    """``c (10^(4/theta) - 1)``, capped at ``BURN_IN_CAP_C * c``."""
    exponent = -np.log10(BURN_IN_RESIDUAL) / p.theta
    if exponent > np.log10(BURN_IN_CAP_C + 1.0):
        return BURN_IN_CAP_C * p.c
    return p.c * (10.0**exponent - 1.0)


@dataclass(frozen=True)
class Event:
    id: int
    parent_id: int | None
    generation: int
    time: float
    magnitude: float


@dataclass
class Catalog:
    """Time-ordered catalog stored column-wise.

    ``parent_id`` is -1 for background events. Events before ``window_start``
    belong to the burn-in and are kept so that parent links stay resolvable.
    """

    id: np.ndarray
    parent_id: np.ndarray
    generation: np.ndarray
    time: np.ndarray
    magnitude: np.ndarray
    window_start: float
    window_end: float
    burn_in_start: float
    params_fingerprint: str
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return self.id.size

    @property
    def events(self) -> Iterator[Event]:
        for i in range(len(self)):
            pid = int(self.parent_id[i])
            yield Event(int(self.id[i]), None if pid < 0 else pid, int(self.generation[i]),
                        float(self.time[i]), float(self.magnitude[i]))

    def in_window(self) -> np.ndarray:
        return (self.time >= self.window_start) & (self.time <= self.window_end)

    def index_of(self) -> np.ndarray:
        """Map from event id to row index (ids are ``0..N-1``)."""
        pos = np.full(len(self), -1, dtype=np.int64)
        pos[self.id] = np.arange(len(self))
        return pos

    def to_csv(self, path=None, header: dict | None = None) -> str:
        buf = io.StringIO()
        hdr = dict(header or {})
        hdr.setdefault("window_start", repr(self.window_start))
        hdr.setdefault("window_end", repr(self.window_end))
        hdr.setdefault("burn_in_start", repr(self.burn_in_start))
        hdr.setdefault("params_fingerprint", self.params_fingerprint)
        for k, v in hdr.items():
            buf.write(f"# {k}: {v}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["id", "parent_id", "generation", "time", "magnitude"])
        for i in range(len(self)):
            pid = int(self.parent_id[i])
            w.writerow([int(self.id[i]), "" if pid < 0 else pid, int(self.generation[i]),
                        repr(float(self.time[i])), repr(float(self.magnitude[i]))])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text

    @classmethod
    def read_csv(cls, path) -> "Catalog":
        header, rows = {}, []
        with open(path) as fh:
            for line in fh:
                if line.startswith("#"):
                    k, _, v = line[1:].partition(":")
                    header[k.strip()] = v.strip()
                elif line.strip():
                    rows.append(line.strip())
        reader = csv.reader(rows)
        cols = next(reader)
        if cols != ["id", "parent_id", "generation", "time", "magnitude"]:
            raise ValueError(f"unexpected catalog columns {cols}")
        recs = list(reader)
        return cls(
            id=np.array([int(r[0]) for r in recs], dtype=np.int64),
            parent_id=np.array([int(r[1]) if r[1] else -1 for r in recs], dtype=np.int64),
            generation=np.array([int(r[2]) for r in recs], dtype=np.int64),
            time=np.array([float(r[3]) for r in recs]),
            magnitude=np.array([float(r[4]) for r in recs]),
            window_start=float(header.get("window_start", 0.0)),
            window_end=float(header["window_end"]),
            burn_in_start=float(header.get("burn_in_start", 0.0)),
            params_fingerprint=header.get("params_fingerprint", ""),
            meta=header,
        )


def _rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.PCG64(seed))


def replica_seeds(seed, replicas: int):
    """Independent child seed sequences, one per replica."""
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return ss.spawn(replicas)


def simulate_catalog(p: ModelParams, T: float, burn_in: float | None = None, seed=None,
                     max_events: int = MAX_EVENTS) -> Catalog:
    """Simulate the process on ``[-burn_in, T]`` and return the full catalog.

    Background events are Poisson of rate ``omega`` with GR magnitudes; an
    event of magnitude ``m'`` has ``Poisson(rho(m'))`` children at Omori
    delays with magnitudes drawn from ``cond_pdf(. | m')``. Children at or
    after ``T`` are discarded together with their would-be descendants.
    """
    if not T > 0:
        raise ValueError("T must be positive")
    if p.branching_ratio >= 1.0:
        raise ParameterError("supercritical parameters (n >= 1)")
    burn_in = default_burn_in(p) if burn_in is None else float(burn_in)
    if burn_in < 0:
        raise ValueError("burn_in must be nonnegative")
    rng = _rng(seed)

    n0 = rng.poisson(p.omega * (T + burn_in))
    t = -burn_in + (T + burn_in) * rng.random(n0)
    mag = np.asarray(laws.gr_sample(p, rng.random(n0)), dtype=float).reshape(-1)
    ids = np.arange(n0, dtype=np.int64)
    times, mags, parents, gens, idl = [t], [mag], [np.full(n0, -1, np.int64)], [np.zeros(n0, np.int64)], [ids]
    next_id, g, total = n0, 0, n0
    while t.size:
        counts = rng.poisson(np.asarray(laws.productivity(mag, p)).reshape(-1))
        nkids = int(counts.sum())
        if nkids == 0:
            break
        par = np.repeat(np.arange(t.size), counts)
        ct = t[par] + np.asarray(laws.omori_sample(p, rng.random(nkids))).reshape(-1)
        cm = np.asarray(laws.cond_sample(mag[par], p, rng.random(nkids))).reshape(-1)
        keep = ct < T
        cids = np.arange(next_id, next_id + nkids, dtype=np.int64)[keep]
        next_id += nkids
        g += 1
        t, mag = ct[keep], cm[keep]
        total += t.size
        if total > max_events:
            raise RuntimeError(f"catalog exceeded {max_events} events")
        times.append(t)
        mags.append(mag)
        parents.append(idl[-1][par[keep]])
        gens.append(np.full(t.size, g, np.int64))
        idl.append(cids)

    time = np.concatenate(times)
    # relabel ids densely in generation order, then sort by (time, id)
    raw = np.concatenate(idl)
    relabel = np.full(next_id, -1, dtype=np.int64)
    relabel[raw] = np.arange(raw.size)
    pid = np.concatenate(parents)
    pid = np.where(pid >= 0, relabel[np.maximum(pid, 0)], -1)
    newid = np.arange(raw.size, dtype=np.int64)
    order = np.lexsort((newid, time))
    return Catalog(
        id=newid[order],
        parent_id=pid[order],
        generation=np.concatenate(gens)[order],
        time=time[order],
        magnitude=np.concatenate(mags)[order],
        window_start=0.0,
        window_end=float(T),
        burn_in_start=-burn_in,
        params_fingerprint=p.fingerprint(),
        meta=dict(generations=g),
    )


def simulate_replicas(p: ModelParams, T: float, replicas: int, seed=None, burn_in=None):
    for ss in replica_seeds(seed, replicas):
        yield simulate_catalog(p, T, burn_in=burn_in, seed=ss)


def observable_times(cat: Catalog, p: ModelParams) -> np.ndarray:
    """Sorted times of in-window events with magnitude ``>= m``."""
    sel = cat.in_window() & (cat.magnitude >= p.m)
    return np.sort(cat.time[sel])


def interevent_samples(p: ModelParams, T: float, replicas: int, seed=None, burn_in=None) -> np.ndarray:
    """Consecutive gaps of observable events pooled over independent replicas."""
    if replicas < 1:
        raise ValueError("replicas must be >= 1")
    gaps = [np.diff(observable_times(cat, p))
            for cat in simulate_replicas(p, T, replicas, seed, burn_in)]
    return np.concatenate(gaps)


@dataclass
class RateEstimate:
    rate: float
    se: float
    predicted: float
    count: int
    total_time: float

    @property
    def z(self) -> float:
        return (self.rate - self.predicted) / self.se if self.se > 0 else np.inf


def estimate_lambda(p: ModelParams, T: float, replicas: int, seed=None, burn_in=None) -> RateEstimate:
    """Observable rate with replica-to-replica standard error.

    A single replica falls back to the Poisson error ``sqrt(count)/T``.
    """
    from .analytics import stationary_rate

    counts = np.array([observable_times(c, p).size
                       for c in simulate_replicas(p, T, replicas, seed, burn_in)], dtype=float)
    rate = counts.sum() / (T * replicas)
    if replicas > 1:
        se = counts.std(ddof=1) / T / np.sqrt(replicas)
    else:
        se = np.sqrt(max(counts[0], 1.0)) / T
    return RateEstimate(float(rate), float(se), stationary_rate(p), int(counts.sum()), T * replicas)


def _first_wait(times, starts):
    """Time from each start to the first event strictly after it (inf if none)."""
    idx = np.searchsorted(times, starts, side="right")
    out = np.full(starts.size, np.inf)
    ok = idx < times.size
    out[ok] = times[idx[ok]] - starts[ok]
    return out


def zero_event_probability(p: ModelParams, tau_grid, n_windows: int, seed=None, T: float | None = None,
                           replicas: int = 1, burn_in=None, batches: int = 50) -> Curve:
    """Fraction of random windows ``[x, x + tau]`` with no observable event.

    Offsets are uniform over ``[0, T - max(tau)]`` of each replica and shared by
    all ``tau`` values. The standard error is the larger of the binomial one
    and a batch-means estimate over contiguous blocks of offsets, which
    accounts for overlap between windows and for clustering.
    """
    tau = np.asarray(tau_grid, dtype=float)
    if np.any(tau <= 0):
        raise ValueError("tau values must be positive")
    if n_windows < 1000:
        raise ValueError("n_windows must be >= 1000")
    if T is None:
        T = max(50.0 * float(tau.max()), 20.0 * n_windows / replicas * float(tau.max()))
    span = T - float(tau.max())
    if span <= 0:
        raise ValueError("T must exceed the largest tau")
    seeds = replica_seeds(seed, replicas)
    per = np.full(replicas, n_windows // replicas)
    per[: n_windows % replicas] += 1
    waits = []
    for ss, nw in zip(seeds, per):
        sim_ss, off_ss = ss.spawn(2)
        cat = simulate_catalog(p, T, burn_in=burn_in, seed=sim_ss)
        times = observable_times(cat, p)
        x = np.sort(_rng(off_ss).random(nw) * span)
        waits.append(_first_wait(times, x))
    w = np.concatenate(waits)
    hits = w[:, None] > tau[None, :]
    phat = hits.mean(axis=0)
    se_bin = np.sqrt(phat * (1.0 - phat) / w.size)
    nb = min(batches, w.size // 20)
    blocks = np.array_split(hits, nb)
    bmeans = np.array([b.mean(axis=0) for b in blocks])
    se_batch = bmeans.std(axis=0, ddof=1) / np.sqrt(nb)
    return Curve(tau, phat, se=np.maximum(se_bin, se_batch), x_name="tau", y_name="p_zero",
                 meta=dict(n_windows=int(w.size), T=T, replicas=replicas))


# -- law checks on simulated catalogs ---------------------------------------------------

@dataclass
class LawCheck:
    name: str
    statistic: float
    threshold: float
    n: int
    detail: str = ""

    @property
    def passed(self) -> bool:
        return bool(self.statistic <= self.threshold)


def _pooled_pairs(catalogs):
    """Concatenate parent/child columns of every resolvable link."""
    cols = {k: [] for k in ("pt", "pm", "ct", "cm", "cgen")}
    for cat in catalogs:
        pos = cat.index_of()
        child = np.flatnonzero(cat.parent_id >= 0)
        par = pos[cat.parent_id[child]]
        cols["pt"].append(cat.time[par])
        cols["pm"].append(cat.magnitude[par])
        cols["ct"].append(cat.time[child])
        cols["cm"].append(cat.magnitude[child])
        cols["cgen"].append(cat.generation[child])
    return {k: np.concatenate(v) for k, v in cols.items()}


def law_checks(catalogs, p: ModelParams, lag_max: float | None = None, mag_bins=None,
               level: float = 0.01) -> list[LawCheck]:
    """Check the simulated laws against their analytic forms.

    Returns results for: pooled triggered magnitudes vs GR; first-generation
    child magnitudes per parent-magnitude bin vs ``cond_cdf`` at the bin
    centre; parent-child delays vs the Omori CDF; offspring dispersion per
    parent-magnitude bin, where the Poisson ratio 1 is shifted by the known
    spread of ``rho`` inside the bin. Delays and offspring counts only use parents with
    ``time <= T - lag_max`` and delays ``<= lag_max`` so that the pruning at
    ``T`` does not bias them. Bin-wise KS tests are Bonferroni-corrected.
    """
    from .stats import ks_statistic

    catalogs = list(catalogs)
    lag_max = 100.0 * p.c if lag_max is None else float(lag_max)
    if mag_bins is None:
        mag_bins = p.m0 + np.array([0.0, 0.25, 0.5, 0.75, 1.0, 1.5, 2.5])
    mag_bins = np.asarray(mag_bins, dtype=float)
    nb = mag_bins.size - 1
    pairs = _pooled_pairs(catalogs)
    out = []

    # (i) magnitudes of all triggered events
    trig = np.sort(pairs["cm"])
    ks = ks_statistic(trig, lambda x: laws.gr_cdf(x, p))
    out.append(LawCheck("triggered_magnitudes_gr", ks.statistic, kolmogi(level) / np.sqrt(ks.n), ks.n))

    # (ii) first-generation children by parent-magnitude bin
    g1 = pairs["cgen"] == 1
    worst, n_tot, details = -np.inf, 0, []
    for lo, hi in zip(mag_bins[:-1], mag_bins[1:]):
        sel = g1 & (pairs["pm"] >= lo) & (pairs["pm"] < hi)
        if sel.sum() < 50:
            continue
        centre = 0.5 * (lo + hi)
        ks = ks_statistic(np.sort(pairs["cm"][sel]), lambda x: laws.cond_cdf(x, centre, p))
        # the bin mixture's CDF is within |q(hi) - q(lo)| / 4 of the centre's
        spread = max(abs(laws.q_fun(hi, p) - laws.q_fun(centre, p)),
                     abs(laws.q_fun(centre, p) - laws.q_fun(lo, p))) / 4.0
        crit = kolmogi(level / nb) / np.sqrt(ks.n) + spread
        worst = max(worst, ks.statistic - crit)
        n_tot += ks.n
        details.append(f"[{lo:g},{hi:g}) D={ks.statistic:.4f} crit={crit:.4f} n={ks.n}")
    out.append(LawCheck("child_magnitudes_cond", worst, 0.0, n_tot, "; ".join(details)))

    # (iii) delays, truncated at lag_max
    T = min(c.window_end for c in catalogs)
    lag = pairs["ct"] - pairs["pt"]
    sel = (pairs["pt"] <= T - lag_max) & (lag <= lag_max)
    bmax = laws.kernel_b(lag_max, p)
    ks = ks_statistic(np.sort(lag[sel]), lambda x: np.asarray(laws.kernel_b(x, p)) / bmax)
    out.append(LawCheck("delays_omori", ks.statistic, kolmogi(level) / np.sqrt(ks.n), ks.n))

    # (iv) offspring dispersion per parent-magnitude bin
    worst, n_tot, details = -np.inf, 0, []
    counts_all, mags_all = [], []
    for cat in catalogs:
        pos = cat.index_of()
        eligible = cat.time <= cat.window_end - lag_max
        child = np.flatnonzero(cat.parent_id >= 0)
        par = pos[cat.parent_id[child]]
        ok = (cat.time[child] - cat.time[par]) <= lag_max
        k = np.bincount(par[ok], minlength=len(cat))
        counts_all.append(k[eligible])
        mags_all.append(cat.magnitude[eligible])
    K = np.concatenate(counts_all)
    M = np.concatenate(mags_all)
    for lo, hi in zip(mag_bins[:-1], mag_bins[1:]):
        sel = (M >= lo) & (M < hi)
        if sel.sum() < 50:
            continue
        kk = K[sel]
        mu = np.asarray(laws.productivity(M[sel], p)) * bmax
        if kk.mean() <= 0:
            continue
        ratio = kk.var(ddof=1) / kk.mean()
        # a Poisson mixture over the bin is overdispersed by var(mu) / mean(mu)
        expected = 1.0 + mu.var() / mu.mean()
        se = np.sqrt(2.0 / (kk.size - 1))
        z = abs(ratio - expected) / se
        worst = max(worst, z)
        n_tot += kk.size
        details.append(f"[{lo:g},{hi:g}) var/mean={ratio:.4f} expected={expected:.4f} se={se:.4f} n={kk.size}")
    out.append(LawCheck("offspring_dispersion", worst, 3.0, n_tot, "; ".join(details)))
    return out
