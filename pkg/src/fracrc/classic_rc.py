"""Classical echo-state reservoir computer with an optional fractional library.

The reservoir is a directed Erdos-Renyi graph with uniform weights, rescaled
to a target spectral radius; states evolve through tanh. The fractional
library generalizes the readout state with |r|**e blocks between the integer
powers, transferring the nonlinearity-matching idea to random reservoirs.
All randomness is a pure function of the config seed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import ArpackNoConvergence, eigs

from .fractional import FracExponent

__all__ = [
    "ClassicRCConfig",
    "ClassicRC",
    "build_classic",
    "fractional_library",
    "spectral_radius_estimate",
]

_DENSE_EIG_CUTOFF = 32  # ARPACK needs k < n - 1 with headroom; use dense below


def fractional_library(max_power: int = 3) -> tuple[FracExponent, ...]:
    """Library exponents {1, 54/50, 66/50, 78/50, 90/50, 2, ...} up to
    ``max_power``, repeating the four-point interior spacing in every integer
    gap and deduplicating the shared integer endpoints."""
    if max_power < 1:
        raise ValueError("max_power must be >= 1")
    numerators = [50]
    for base in range(max_power - 1):
        for offset in (4, 16, 28, 40):
            numerators.append(50 + base * 50 + offset)
        numerators.append(50 + (base + 1) * 50)
    return tuple(FracExponent(n, 50) for n in numerators)


def spectral_radius_estimate(matrix, seed: int = 0, tol: float = 1e-10) -> float:
    """Largest eigenvalue magnitude via iterative Arnoldi estimation
    (dense solve below the ARPACK size floor)."""
    n = matrix.shape[0]
    if n < _DENSE_EIG_CUTOFF:
        dense = matrix.toarray() if sparse.issparse(matrix) else np.asarray(matrix)
        return float(np.max(np.abs(np.linalg.eigvals(dense))))
    v0 = np.random.default_rng(seed).standard_normal(n)
    vals = eigs(matrix, k=1, which="LM", v0=v0, tol=tol,
                return_eigenvectors=False, maxiter=n * 100)
    return float(np.abs(vals[0]))


@dataclass(frozen=True)
class ClassicRCConfig:
    input_dim: int
    reservoir_dim: int = 100
    spectral_radius: float = 0.2
    ridge: float = 1e-4
    edge_probability: float = 0.1
    input_scale: float = 0.5
    library: tuple[FracExponent, ...] = ()
    seed: int = 0

    def __post_init__(self):
        if self.input_dim < 1:
            raise ValueError("input_dim must be >= 1")
        if self.reservoir_dim < 1:
            raise ValueError("reservoir_dim must be >= 1")
        if not (self.spectral_radius > 0):
            raise ValueError("spectral_radius must be > 0")
        if not (self.ridge > 0):
            raise ValueError("ridge must be > 0")
        if not (0 < self.edge_probability <= 1):
            raise ValueError("edge_probability must be in (0, 1]")
        lib = tuple(self.library)
        if lib:
            fracs = [e.as_fraction() for e in lib]
            if fracs[0] != 1:
                raise ValueError("library must start with exponent 1")
            if any(b <= a for a, b in zip(fracs, fracs[1:])):
                raise ValueError("library exponents must be strictly increasing")
        object.__setattr__(self, "library", lib)

    def to_json_dict(self) -> dict:
        return {
            "input_dim": self.input_dim,
            "reservoir_dim": self.reservoir_dim,
            "spectral_radius": self.spectral_radius,
            "ridge": self.ridge,
            "edge_probability": self.edge_probability,
            "input_scale": self.input_scale,
            "library": [
                {"numerator": e.numerator, "denominator": e.denominator}
                for e in self.library
            ],
            "seed": self.seed,
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "ClassicRCConfig":
        return cls(
            input_dim=d["input_dim"],
            reservoir_dim=d["reservoir_dim"],
            spectral_radius=d["spectral_radius"],
            ridge=d["ridge"],
            edge_probability=d["edge_probability"],
            input_scale=d["input_scale"],
            library=tuple(FracExponent(e["numerator"], e["denominator"])
                          for e in d["library"]),
            seed=d["seed"],
        )


class ClassicRC:
    """Random-network reservoir computer (build via :func:`build_classic`)."""

    def __init__(self, config: ClassicRCConfig, adjacency, w_in: np.ndarray):
        self.config = config
        self.adjacency = adjacency
        self.w_in = w_in
        # signed identity block first, |r|**e for the rest
        self._power_values = [e.value for e in config.library
                              if e.as_fraction() != 1]

    @property
    def state_dim(self) -> int:
        return self.config.reservoir_dim

    @property
    def generalized_dim(self) -> int:
        return max(1, len(self.config.library)) * self.state_dim

    @property
    def input_dim(self) -> int:
        return self.config.input_dim

    def zero_state(self) -> np.ndarray:
        return np.zeros(self.state_dim)

    def step(self, state: np.ndarray, x: np.ndarray) -> np.ndarray:
        return np.tanh(self.adjacency @ state + self.w_in @ x)

    def generalize(self, state: np.ndarray) -> np.ndarray:
        if not self._power_values:
            return state
        mag = np.abs(state)
        return np.concatenate([state] + [mag ** e for e in self._power_values])

    def generalize_block(self, states: np.ndarray) -> np.ndarray:
        if not self._power_values:
            return states
        mag = np.abs(states)
        return np.hstack([states] + [mag ** e for e in self._power_values])


def _sample_network(config: ClassicRCConfig, seed: int):
    rng = np.random.default_rng(seed)
    d = config.reservoir_dim
    mask = rng.random((d, d)) < config.edge_probability
    weights = rng.uniform(-1.0, 1.0, size=(d, d))
    adjacency = sparse.csr_matrix(np.where(mask, weights, 0.0))
    w_in = rng.uniform(-config.input_scale, config.input_scale,
                       size=(d, config.input_dim))
    return adjacency, w_in


def build_classic(config: ClassicRCConfig, max_retries: int = 5) -> ClassicRC:
    """Sample the network from the config seed and rescale to the target
    spectral radius. A degenerate draw (vanishing spectral radius or a
    non-converging eigenvalue estimate) is resampled with an incremented
    seed, up to ``max_retries`` times."""
    seed = config.seed
    for attempt in range(max_retries + 1):
        adjacency, w_in = _sample_network(config, seed + attempt)
        try:
            radius = spectral_radius_estimate(adjacency, seed=config.seed)
        except ArpackNoConvergence:
            continue
        if radius > 1e-12:
            adjacency = adjacency * (config.spectral_radius / radius)
            return ClassicRC(config, adjacency, w_in)
    raise RuntimeError(
        f"could not scale reservoir to spectral radius after {max_retries} retries"
    )
