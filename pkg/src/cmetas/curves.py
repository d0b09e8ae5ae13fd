"""Sampled curves and their CSV form."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


@dataclass
class Curve:
    """A function sampled on a strictly increasing grid.

    ``se`` holds optional per-point standard errors (same length as ``values``).
    """

    grid: np.ndarray
    values: np.ndarray
    se: np.ndarray | None = None
    x_name: str = "t"
    y_name: str = "value"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.grid.ndim != 1 or self.grid.shape != self.values.shape:
            raise ValueError("grid and values must be 1-d arrays of equal length")
        if self.grid.size > 1 and np.any(np.diff(self.grid) <= 0):
            raise ValueError("grid must be strictly increasing")
        if self.se is not None:
            self.se = np.asarray(self.se, dtype=float)
            if self.se.shape != self.values.shape:
                raise ValueError("se must match values")

    def __len__(self):
        return self.grid.size

    def to_csv(self, path=None, header: dict | None = None) -> str:
        """Write ``x,y[,se]`` rows after a ``#`` comment header; returns the text."""
        buf = io.StringIO()
        for k, v in (header or {}).items():
            buf.write(f"# {k}: {v}\n")
        w = csv.writer(buf, lineterminator="\n")
        cols = [self.x_name, self.y_name] + (["se"] if self.se is not None else [])
        w.writerow(cols)
        for i in range(len(self)):
            row = [repr(float(self.grid[i])), repr(float(self.values[i]))]
            if self.se is not None:
                row.append(repr(float(self.se[i])))
            w.writerow(row)
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text

    @classmethod
    def read_csv(cls, path) -> "Curve":
        header = {}
        rows = []
        with open(path) as fh:
            for line in fh:
                if line.startswith("#"):
                    k, _, v = line[1:].partition(":")
                    header[k.strip()] = v.strip()
                elif line.strip():
                    rows.append(line.strip())
        reader = csv.reader(rows)
        cols = next(reader)
        data = np.array([[float(x) for x in r] for r in reader], dtype=float).reshape(-1, len(cols))
        se = data[:, 2] if len(cols) > 2 else None
        return cls(data[:, 0], data[:, 1], se=se, x_name=cols[0], y_name=cols[1], meta=header)
