"""Fourier-transform surrogates: randomized phases, preserved amplitudes.

A surrogate keeps the linear structure of a series (its power spectrum, and
through it mean, variance and autocorrelation) while destroying nonlinear
structure. Comparing a measure on the original against its distribution over
many surrogates tells whether the measure responds to nonlinearity.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from .trajectory import Trajectory

__all__ = ["ft_surrogate", "surrogate_trajectory", "surrogate_background"]


def ft_surrogate(series: np.ndarray, seed) -> np.ndarray:
    """Phase-randomized copy of a 1-D series.

    The DC bin keeps the mean; for even lengths the Nyquist bin stays
    untouched (it must remain real); every other bin gets an i.i.d. uniform
    phase. The rfft/irfft pair enforces Hermitian symmetry, so the output is
    exactly real.
    """
    x = np.asarray(series, dtype=float).ravel()
    n = x.size
    if n < 4:
        raise ValueError("series must have at least 4 samples")
    if not np.all(np.isfinite(x)):
        raise ValueError("series must be finite")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    spectrum = np.fft.rfft(x)
    # randomize bins 1 .. ceil(n/2)-1; bin 0 and (even n) the Nyquist stay
    stop = (n + 1) // 2
    phases = rng.uniform(0.0, 2.0 * np.pi, size=stop - 1)
    spectrum[1:stop] = np.abs(spectrum[1:stop]) * np.exp(1j * phases)
    return np.fft.irfft(spectrum, n=n)


def surrogate_trajectory(traj: Trajectory, seed) -> Trajectory:
    """Per-coordinate independent phase randomization of a trajectory."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    cols = [ft_surrogate(traj.data[:, j], rng) for j in range(traj.dim)]
    return Trajectory(np.column_stack(cols), traj.dt)


def surrogate_background(traj: Trajectory, m: int,
                         measure: Callable[[Trajectory], float],
                         seed: int) -> tuple[float, float]:
    """Mean and sample standard deviation of ``measure`` over ``m`` surrogate
    realizations.

    Failing realizations are dropped; more than m/2 failures is an error.
    """
    if m < 2:
        raise ValueError("need at least 2 realizations for a standard deviation")
    seeds = np.random.SeedSequence(seed).spawn(m)
    values = []
    failures = 0
    for child in seeds:
        surrogate = surrogate_trajectory(traj, np.random.default_rng(child))
        try:
            value = float(measure(surrogate))
        except (ValueError, ArithmeticError):
            failures += 1
            continue
        if not np.isfinite(value):
            failures += 1
            continue
        values.append(value)
    if failures > m / 2:
        raise RuntimeError(f"surrogate measure failed on {failures} of {m} realizations")
    arr = np.array(values)
    return float(arr.mean()), float(arr.std(ddof=1))
