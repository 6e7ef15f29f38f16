"""Uniformly sampled multivariate time series, the common currency between modules."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

__all__ = ["Trajectory"]


@dataclass(frozen=True)
class Trajectory:
    """T x D array of samples on a fixed time grid of spacing ``dt``.

    All entries are finite by construction: a diverged integration never
    becomes a Trajectory. ``transient_discarded`` counts the steps dropped
    ahead of ``data`` so that absolute time can be reconstructed.
    """

    data: np.ndarray
    dt: float
    transient_discarded: int = 0

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=float)
        if arr.ndim == 1:
            arr = arr[:, None]
        if arr.ndim != 2:
            raise ValueError(f"data must be 1-D or 2-D, got shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"data must be at least 1x1, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("trajectory data must be finite")
        if not (self.dt > 0):
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.transient_discarded < 0:
            raise ValueError("transient_discarded must be >= 0")
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)
        object.__setattr__(self, "dt", float(self.dt))
        object.__setattr__(self, "transient_discarded", int(self.transient_discarded))

    def __len__(self) -> int:
        return self.data.shape[0]

    @property
    def dim(self) -> int:
        return self.data.shape[1]

    @property
    def times(self) -> np.ndarray:
        """Sample times k*dt, starting at zero after any discarded transient."""
        return np.arange(len(self)) * self.dt

    def discard_transient(self, n: int) -> "Trajectory":
        """Drop the first ``n`` samples; the discard counter accumulates."""
        if n < 0:
            raise ValueError("n must be >= 0")
        if n >= len(self):
            raise ValueError(f"cannot discard {n} of {len(self)} samples")
        return Trajectory(self.data[n:], self.dt, self.transient_discarded + n)

    def window(self, start: int, length: int) -> "Trajectory":
        """Contiguous sub-trajectory of ``length`` samples starting at ``start``."""
        if start < 0 or length < 1 or start + length > len(self):
            raise ValueError(
                f"window [{start}, {start + length}) out of range for length {len(self)}"
            )
        return Trajectory(self.data[start : start + length], self.dt,
                          self.transient_discarded + start)

    def column(self, j: int) -> "Trajectory":
        """Single-coordinate trajectory (column ``j``)."""
        return Trajectory(self.data[:, j], self.dt, self.transient_discarded)

    def to_csv(self, path) -> None:
        """Write `t,x1,...,xD` rows at full double precision (round-trip repr)."""
        header = ["t"] + [f"x{j + 1}" for j in range(self.dim)]
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            for k in range(len(self)):
                row = [repr(k * self.dt)] + [repr(float(v)) for v in self.data[k]]
                writer.writerow(row)

    @classmethod
    def from_csv(cls, path) -> "Trajectory":
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if not header or header[0] != "t":
                raise ValueError(f"expected header starting with 't', got {header}")
            rows = [[float(v) for v in row] for row in reader if row]
        if len(rows) < 1:
            raise ValueError("empty trajectory file")
        arr = np.array(rows)
        times = arr[:, 0]
        dt = times[1] - times[0] if len(times) > 1 else 1.0
        return cls(arr[:, 1:], dt)
