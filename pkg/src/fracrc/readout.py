"""Ridge-regression readout training and closed-loop prediction.

Both reservoir flavors share this machinery: a machine only needs
``zero_state()``, ``step(state, x)``, ``generalize(state)`` /
``generalize_block(states)`` and an ``input_dim``. Training drives the
reservoir open-loop, discards a synchronization prefix, and solves
``W_out (G^T G + beta I) = Y^T G`` with a symmetric positive-definite
factorization (least-squares fallback if that fails). Prediction
synchronizes on a warmup trajectory and then feeds each output back in.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .trajectory import Trajectory

__all__ = ["Readout", "Prediction", "train", "predict"]


class TrainingError(ValueError):
    """Raised when reservoir states blow up during open-loop training."""


@dataclass(frozen=True)
class Readout:
    """Trained linear readout mapping generalized states to outputs."""

    w_out: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.w_out, dtype=float)
        if arr.ndim != 2:
            raise ValueError("w_out must be a 2-D matrix")
        if not np.all(np.isfinite(arr)):
            raise ValueError("w_out must be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "w_out", arr)

    def to_json_dict(self) -> dict:
        return {"shape": list(self.w_out.shape), "w_out": self.w_out.tolist()}

    @classmethod
    def from_json_dict(cls, d: dict) -> "Readout":
        arr = np.asarray(d["w_out"], dtype=float).reshape(d["shape"])
        return cls(arr)


@dataclass(frozen=True)
class Prediction:
    """Closed-loop prediction, possibly truncated at a divergence.

    ``values`` holds the finite prediction steps actually produced; when the
    loop hit a non-finite output, ``diverged`` is set and ``values`` stops
    just before the offending step.
    """

    values: np.ndarray
    dt: float
    diverged: bool = False

    def __len__(self) -> int:
        return self.values.shape[0]

    def to_trajectory(self) -> Trajectory:
        if len(self) < 1:
            raise ValueError("empty prediction has no trajectory form")
        return Trajectory(self.values, self.dt)


def _collect_states(machine, data: np.ndarray) -> np.ndarray:
    """Open-loop pass: row t holds r(t+1), driven by input x(t)."""
    n = data.shape[0] - 1
    states = np.empty((n, machine.state_dim))
    r = machine.zero_state()
    for t in range(n):
        r = machine.step(r, data[t])
        states[t] = r
    return states


def train(machine, traj: Trajectory, sync_len: int) -> Readout:
    """Fit the readout on ``traj``, pairing r(t+1) with target x(t+1) and
    discarding the first ``sync_len`` pairs as synchronization."""
    if sync_len < 0:
        raise ValueError("sync_len must be >= 0")
    if len(traj) < sync_len + 2:
        raise ValueError(
            f"trajectory length {len(traj)} too short for sync_len {sync_len}"
        )
    if traj.dim != machine.input_dim:
        raise ValueError(
            f"trajectory dimension {traj.dim} != machine input_dim {machine.input_dim}"
        )
    states = _collect_states(machine, traj.data)
    kept = states[sync_len:]
    bad = ~np.isfinite(kept).all(axis=1)
    if bad.any():
        step = sync_len + 1 + int(np.argmax(bad))
        raise TrainingError(f"non-finite reservoir state at training step {step}")
    with np.errstate(over="ignore"):
        G = machine.generalize_block(kept)
    bad = ~np.isfinite(G).all(axis=1)
    if bad.any():
        step = sync_len + 1 + int(np.argmax(bad))
        raise TrainingError(f"non-finite generalized state at training step {step}")
    Y = traj.data[sync_len + 1:]

    with np.errstate(over="ignore"):
        GtG = G.T @ G
    if not np.all(np.isfinite(GtG)):
        raise TrainingError("generalized states overflowed the normal equations")
    A = GtG + machine.config.ridge * np.eye(GtG.shape[0])
    B = G.T @ Y
    try:
        c = cho_factor(A)
        w_out = cho_solve(c, B).T
    except np.linalg.LinAlgError:
        w_out = np.linalg.lstsq(A, B, rcond=None)[0].T
    return Readout(w_out)


def predict(machine, readout: Readout, warmup: Trajectory, n_steps: int) -> Prediction:
    """Synchronize open-loop on ``warmup``, then predict ``n_steps`` points
    closed-loop, feeding each output back as the next input."""
    if len(warmup) < 1:
        raise ValueError("warmup must be non-empty")
    if n_steps < 0:
        raise ValueError("n_steps must be >= 0")
    r = machine.zero_state()
    for x in warmup.data:
        r = machine.step(r, x)
    values = np.empty((n_steps, machine.input_dim))
    diverged = False
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(n_steps):
            y = readout.w_out @ machine.generalize(r)
            if not np.all(np.isfinite(y)):
                values = values[:k]
                diverged = True
                break
            values[k] = y
            r = machine.step(r, y)
    return Prediction(values, warmup.dt, diverged)
