"""Fully deterministic minimal reservoir computer.

Inputs are mapped through subset-sum features, each replicated ``b`` times
with a fixed decreasing weight vector. The reservoir is block-diagonal with
all-ones blocks scaled to an exact target spectral radius, the state evolves
purely linearly, and all nonlinearity lives in the generalized readout state
(element-wise fractional powers). Nothing here is random: identical configs
produce bit-identical machines.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .fractional import FracExponent

__all__ = ["MinRCConfig", "MinRC", "build", "subset_order", "weight_vector"]


@dataclass(frozen=True)
class MinRCConfig:
    """Construction parameters for a minimal RC.

    ``exponents`` lists the powers appended to the linear state in the
    generalized readout state: a single fractional entry is the reduced
    setup, integers 2..eta_max the classic one, and an empty list a purely
    linear model. Feature count grows as 2**input_dim - 1.
    """

    input_dim: int
    block_size: int = 3
    spectral_radius: float = 1e-3
    ridge: float = 1e-6
    exponents: tuple[FracExponent, ...] = ()

    def __post_init__(self):
        if self.input_dim < 1:
            raise ValueError("input_dim must be >= 1")
        if self.block_size < 2:
            raise ValueError("block_size must be >= 2 (weight vector divides by b-1)")
        if self.spectral_radius < 0:
            raise ValueError("spectral_radius must be >= 0")
        if not (self.ridge > 0):
            raise ValueError("ridge must be > 0")
        object.__setattr__(self, "exponents", tuple(self.exponents))

    def to_json_dict(self) -> dict:
        return {
            "input_dim": self.input_dim,
            "block_size": self.block_size,
            "spectral_radius": self.spectral_radius,
            "ridge": self.ridge,
            "exponents": [
                {"numerator": e.numerator, "denominator": e.denominator}
                for e in self.exponents
            ],
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "MinRCConfig":
        return cls(
            input_dim=d["input_dim"],
            block_size=d["block_size"],
            spectral_radius=d["spectral_radius"],
            ridge=d["ridge"],
            exponents=tuple(FracExponent(e["numerator"], e["denominator"])
                            for e in d["exponents"]),
        )


def subset_order(input_dim: int) -> list[tuple[int, ...]]:
    """Canonical feature order: all non-empty coordinate subsets, grouped by
    size (singletons, pairs, ...), lexicographic within each size."""
    subsets: list[tuple[int, ...]] = []
    for size in range(1, input_dim + 1):
        subsets.extend(combinations(range(input_dim), size))
    return subsets


def weight_vector(block_size: int) -> np.ndarray:
    """Copy weights (1, sqrt((b-2)/(b-1)), ..., sqrt(1/(b-1)), 0)."""
    b = block_size
    k = np.arange(b)
    return np.sqrt((b - 1 - k) / (b - 1))


class MinRC:
    """Deterministic minimal reservoir computer (build via :func:`build`)."""

    def __init__(self, config: MinRCConfig):
        self.config = config
        self.subsets = subset_order(config.input_dim)
        self.w = weight_vector(config.block_size)
        # subset indicator: feature f sums the coordinates in subsets[f]
        S = np.zeros((len(self.subsets), config.input_dim))
        for f, subset in enumerate(self.subsets):
            S[f, list(subset)] = 1.0
        self._S = S
        # A = (rho*/b) * blockdiag(J, ..., J); J (all ones, b x b) has spectral
        # radius b, so the represented A has spectral radius rho* exactly.
        self.block_scale = config.spectral_radius / config.block_size

    @property
    def n_features(self) -> int:
        return len(self.subsets)

    @property
    def state_dim(self) -> int:
        return self.n_features * self.config.block_size

    @property
    def generalized_dim(self) -> int:
        return (1 + len(self.config.exponents)) * self.state_dim

    @property
    def input_dim(self) -> int:
        return self.config.input_dim

    def zero_state(self) -> np.ndarray:
        return np.zeros(self.state_dim)

    def input_matrix(self) -> np.ndarray:
        """Materialized ((2^D - 1) * b) x D input matrix (tests, oracles)."""
        # block f, column j is w when j is in subset f, else zero
        return np.kron(self._S, self.w[:, None])

    def reservoir_matrix(self) -> np.ndarray:
        """Materialized dense reservoir matrix (tests, oracles)."""
        b = self.config.block_size
        J = np.ones((b, b))
        return self.block_scale * np.kron(np.eye(self.n_features), J)

    def step(self, state: np.ndarray, x: np.ndarray) -> np.ndarray:
        """r(t+1) = A r(t) + W_in x(t), using the block structure:
        within a block, (A r) is scale * (block sum) replicated."""
        b = self.config.block_size
        blocks = state.reshape(self.n_features, b)
        echo = self.block_scale * blocks.sum(axis=1)
        features = self._S @ x
        return (echo[:, None] + features[:, None] * self.w[None, :]).ravel()

    def generalize(self, state: np.ndarray) -> np.ndarray:
        """Generalized state: the linear state followed by |r|**eta blocks.

        Same |.|**e map as frac_pow, without its finiteness check; this runs
        once per closed-loop step and the caller checks the readout output.
        """
        if not self.config.exponents:
            return state
        mag = np.abs(state)
        return np.concatenate([state] +
                              [mag ** e.value for e in self.config.exponents])

    def generalize_block(self, states: np.ndarray) -> np.ndarray:
        """Row-wise :meth:`generalize` for an (n, state_dim) array."""
        if not self.config.exponents:
            return states
        mag = np.abs(states)
        return np.hstack([states] + [mag ** e.value for e in self.config.exponents])


def build(config: MinRCConfig) -> MinRC:
    return MinRC(config)
