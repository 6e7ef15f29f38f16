"""Chaotic flows (Lorenz, fractional Halvorsen, Thomas) and their integration.

Integration uses an explicit adaptive Runge-Kutta 5(4) pair (Dormand-Prince)
with dense output sampled on a fixed grid. A trajectory that leaves the
divergence bound, or that the step controller cannot continue, raises
:class:`Diverged`; callers doing grid searches catch it as a data point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy.integrate import solve_ivp

from .fractional import FracExponent
from .trajectory import Trajectory

__all__ = [
    "Lorenz",
    "FractionalHalvorsen",
    "Thomas",
    "SystemSpec",
    "IntegratorConfig",
    "Diverged",
    "rhs",
    "integrate",
    "discard_transient",
    "default_initial_condition",
]


class Diverged(Exception):
    """Raised when a trajectory escapes the divergence bound or the step
    controller underflows before the requested number of samples."""

    def __init__(self, message: str, t: float | None = None):
        super().__init__(message)
        self.t = t


def _require_finite(name: str, *values: float) -> None:
    for v in values:
        if not math.isfinite(v):
            raise ValueError(f"{name} parameters must be finite")


@dataclass(frozen=True)
class Lorenz:
    """Classic three-variable convection model; chaotic at the default parameters."""

    sigma: float = 10.0
    rho: float = 28.0
    beta: float = 8.0 / 3.0

    def __post_init__(self):
        _require_finite("Lorenz", self.sigma, self.rho, self.beta)

    def rhs(self, x: np.ndarray) -> np.ndarray:
        x1, x2, x3 = x
        return np.array([
            self.sigma * (x2 - x1),
            self.rho * x1 - x2 - x1 * x3,
            -self.beta * x3 + x1 * x2,
        ])


@dataclass(frozen=True)
class FractionalHalvorsen:
    """Cyclically symmetric flow whose per-equation nonlinear exponents are
    tunable rationals; classical Halvorsen is a=1.3 with all exponents 2."""

    a: float = 1.3
    xi1: FracExponent = FracExponent(100)
    xi2: FracExponent = FracExponent(100)
    xi3: FracExponent = FracExponent(100)

    def __post_init__(self):
        _require_finite("FractionalHalvorsen", self.a)
        for name, xi in (("xi1", self.xi1), ("xi2", self.xi2), ("xi3", self.xi3)):
            if xi.as_fraction() < 1:
                raise ValueError(f"{name} must be >= 1, got {xi}")
        # Cached float exponents; the rhs is the integrator's hot path.
        object.__setattr__(self, "_e", (self.xi1.value, self.xi2.value, self.xi3.value))

    @property
    def exponents(self) -> tuple[FracExponent, FracExponent, FracExponent]:
        return (self.xi1, self.xi2, self.xi3)

    def rhs(self, x: np.ndarray) -> np.ndarray:
        # abs(x)**e is frac_pow for even numerators, inlined for speed.
        x1, x2, x3 = x
        e1, e2, e3 = self._e
        return np.array([
            -self.a * x1 - 4.0 * x2 - 4.0 * x3 - abs(x2) ** e1,
            -self.a * x2 - 4.0 * x3 - 4.0 * x1 - abs(x3) ** e2,
            -self.a * x3 - 4.0 * x1 - 4.0 * x2 - abs(x1) ** e3,
        ])


@dataclass(frozen=True)
class Thomas:
    """Cyclically symmetric flow with sine nonlinearity; weakly chaotic at b=0.21."""

    b: float = 0.21

    def __post_init__(self):
        _require_finite("Thomas", self.b)

    def rhs(self, x: np.ndarray) -> np.ndarray:
        x1, x2, x3 = x
        return np.array([
            -self.b * x1 + math.sin(x2),
            -self.b * x2 + math.sin(x3),
            -self.b * x3 + math.sin(x1),
        ])


SystemSpec = Union[Lorenz, FractionalHalvorsen, Thomas]


@dataclass(frozen=True)
class IntegratorConfig:
    dt_sample: float = 0.01
    rel_tol: float = 1e-6
    abs_tol: float = 1e-9
    divergence_bound: float = 1e6

    def __post_init__(self):
        if not (self.dt_sample > 0):
            raise ValueError("dt_sample must be > 0")
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("tolerances must be > 0")
        if not (self.divergence_bound > 0):
            raise ValueError("divergence_bound must be > 0")


def rhs(spec: SystemSpec, x) -> np.ndarray:
    """Time derivative of the given system at state ``x``."""
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError("state must be finite")
    return spec.rhs(x)


def integrate(spec: SystemSpec, x0, n_steps: int,
              cfg: IntegratorConfig = IntegratorConfig()) -> Trajectory:
    """Integrate ``spec`` from ``x0`` and sample ``n_steps`` points at
    t = k*dt_sample, k = 0..n_steps-1 (the initial condition is sample 0).

    Raises :class:`Diverged` when the max-norm of the state crosses the
    divergence bound or the adaptive step size underflows.
    """
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (3,):
        raise ValueError(f"x0 must be a 3-vector, got shape {x0.shape}")
    if not np.all(np.isfinite(x0)):
        raise ValueError("x0 must be finite")
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    if n_steps == 1:
        return Trajectory(x0[None, :], cfg.dt_sample)

    bound = cfg.divergence_bound

    def fun(t, x):
        return spec.rhs(x)

    def escape(t, x):
        return bound - np.max(np.abs(x))

    escape.terminal = True
    escape.direction = -1

    t_end = (n_steps - 1) * cfg.dt_sample
    t_eval = np.arange(n_steps) * cfg.dt_sample
    sol = solve_ivp(fun, (0.0, t_end), x0, method="RK45", t_eval=t_eval,
                    rtol=cfg.rel_tol, atol=cfg.abs_tol, events=escape)
    if sol.status == 1:
        t_event = float(sol.t_events[0][0]) if len(sol.t_events[0]) else None
        raise Diverged(f"state norm exceeded {bound:g}", t=t_event)
    if not sol.success:
        raise Diverged(f"integration failed: {sol.message}", t=float(sol.t[-1]) if len(sol.t) else None)
    data = sol.y.T
    if data.shape[0] != n_steps or not np.all(np.isfinite(data)):
        raise Diverged("integration produced non-finite or truncated output")
    return Trajectory(data, cfg.dt_sample)


def discard_transient(traj: Trajectory, n: int) -> Trajectory:
    """Suffix of ``traj`` with the first ``n`` samples removed."""
    return traj.discard_transient(n)


def default_initial_condition(spec: SystemSpec, rng_seed: int) -> np.ndarray:
    """Paper-style initial conditions: Lorenz draws each coordinate uniformly
    from [-20, 20] with the given seed; Halvorsen and Thomas start from the
    fixed point-adjacent (0.1, 0, 0) for stability."""
    if isinstance(spec, Lorenz):
        rng = np.random.default_rng(rng_seed)
        return rng.uniform(-20.0, 20.0, size=3)
    return np.array([0.1, 0.0, 0.0])
