"""Prediction-quality metrics.

Short-term skill is the forecast horizon: how long the prediction error stays
below one standard deviation in every coordinate, reported in Lyapunov times.
Long-term 'climate' is summarized by the largest Lyapunov exponent (nearest
neighbor divergence rate) and the correlation dimension (log-log slope of the
correlation sum, counted with a k-d tree).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree
from scipy.spatial.distance import pdist

from .trajectory import Trajectory

__all__ = [
    "ForecastHorizon",
    "RosensteinConfig",
    "CorrDimConfig",
    "ClimateReport",
    "forecast_horizon",
    "lyapunov_rosenstein",
    "correlation_dimension",
    "climate_check",
    "mean_period",
]


@dataclass(frozen=True)
class ForecastHorizon:
    steps: int
    lyapunov_times: float  # nan when no positive exponent was supplied


def forecast_horizon(true: Trajectory, pred: Trajectory,
                     lyapunov: float = math.nan) -> ForecastHorizon:
    """Steps before the error first reaches the per-coordinate threshold
    sigma(true); the horizon is the minimum across coordinates."""
    if abs(true.dt - pred.dt) > 1e-12 * max(true.dt, pred.dt):
        raise ValueError(f"dt mismatch: {true.dt} vs {pred.dt}")
    if true.dim != pred.dim:
        raise ValueError(f"dimension mismatch: {true.dim} vs {pred.dim}")
    thresholds = true.data.std(axis=0)
    n = min(len(true), len(pred))
    err = np.abs(true.data[:n] - pred.data[:n])
    exceeded = err >= thresholds[None, :]
    steps = n
    for j in range(true.dim):
        hits = np.nonzero(exceeded[:, j])[0]
        if hits.size:
            steps = min(steps, int(hits[0]))
    lyap_times = steps * true.dt * lyapunov if lyapunov > 0 else math.nan
    return ForecastHorizon(steps=steps, lyapunov_times=lyap_times)


def mean_period(series: np.ndarray, dt: float = 1.0) -> float:
    """Mean oscillation period from the dominant FFT frequency, in the same
    units as ``dt`` (steps when dt=1)."""
    x = np.asarray(series, dtype=float)
    x = x - x.mean()
    n = x.size
    if n < 4:
        raise ValueError("series too short for a period estimate")
    power = np.abs(np.fft.rfft(x)) ** 2
    k = 1 + int(np.argmax(power[1:]))
    return n * dt / k


@dataclass(frozen=True)
class RosensteinConfig:
    """Settings for the nearest-neighbor divergence estimate.

    Multivariate input is used as-is (identity embedding); scalar input is
    delay-embedded. ``theiler`` and ``delay`` default to values derived from
    the mean period. The divergence curve is followed for ``follow_periods``
    mean periods; the slope is fit from ``fit_start_periods`` onward, which
    skips the steep neighbor-alignment transient at the start of the curve.
    """

    embedding_dim: int = 3
    delay: int | None = None
    theiler: int | None = None
    follow_periods: float = 3.0
    fit_start_periods: float = 1.0
    min_pairs: int = 10
    neighbor_batch: int = 40

    def __post_init__(self):
        if self.follow_periods <= 0:
            raise ValueError("follow_periods must be > 0")
        if not (0 <= self.fit_start_periods < self.follow_periods):
            raise ValueError("fit_start_periods must be in [0, follow_periods)")


def _embed(traj: Trajectory, cfg: RosensteinConfig) -> np.ndarray:
    if traj.dim > 1:
        return traj.data
    m = cfg.embedding_dim
    period = mean_period(traj.data[:, 0])
    tau = cfg.delay if cfg.delay is not None else max(1, int(round(period / 4)))
    n = len(traj) - (m - 1) * tau
    if n < cfg.min_pairs:
        raise ValueError("trajectory too short for the requested embedding")
    cols = [traj.data[i * tau : i * tau + n, 0] for i in range(m)]
    return np.column_stack(cols)


def _nearest_excluding(points: np.ndarray, theiler: int, batch: int) -> np.ndarray:
    """Index of each point's nearest neighbor outside the temporal exclusion
    window; -1 where none exists."""
    n = len(points)
    tree = cKDTree(points)
    neighbor = np.full(n, -1, dtype=int)
    k = min(n, batch)
    dist, idx = tree.query(points, k=k)
    ok = np.abs(idx - np.arange(n)[:, None]) > theiler
    first = np.argmax(ok, axis=1)
    found = ok[np.arange(n), first]
    neighbor[found] = idx[np.arange(n), first][found]
    # widen the search point-by-point for the stragglers
    for i in np.nonzero(~found)[0]:
        kk = k
        while kk < n:
            kk = min(n, kk * 4)
            d_i, j_i = tree.query(points[i], k=kk)
            valid = np.abs(np.atleast_1d(j_i) - i) > theiler
            if valid.any():
                neighbor[i] = np.atleast_1d(j_i)[valid][0]
                break
    return neighbor


def lyapunov_rosenstein(traj: Trajectory, cfg: RosensteinConfig = RosensteinConfig()) -> float:
    """Largest Lyapunov exponent (per time unit): average log divergence of
    nearest-neighbor pairs, slope-fit over the early part of the curve."""
    points = _embed(traj, cfg)
    # fastest dominant oscillation across coordinates; slow envelope modes
    # (e.g. lobe switching) would otherwise inflate the window estimates
    period_steps = min(mean_period(traj.data[:, j]) for j in range(traj.dim))
    n = len(points)
    # a degenerate period estimate (FFT peak in the lowest bin) must not
    # swallow the series: keep at least 3/4 of the points usable
    follow = int(round(cfg.follow_periods * period_steps))
    follow = max(2, min(follow, n // 4))
    theiler = cfg.theiler if cfg.theiler is not None else int(round(period_steps))
    theiler = min(theiler, (n - follow) // 4)
    usable = n - follow
    if usable < cfg.min_pairs:
        raise ValueError(f"only {usable} usable points for follow horizon {follow}")

    base = points[:usable]
    neighbor = _nearest_excluding(base, theiler, cfg.neighbor_batch)
    pairs = np.nonzero(neighbor >= 0)[0]
    if pairs.size < cfg.min_pairs:
        raise ValueError(f"only {pairs.size} neighbor pairs survive the "
                         f"temporal exclusion window {theiler}")
    i_idx = pairs
    j_idx = neighbor[pairs]

    mean_log = np.empty(follow + 1)
    with np.errstate(divide="ignore"):
        for k in range(follow + 1):
            d = np.linalg.norm(points[i_idx + k] - points[j_idx + k], axis=1)
            logs = np.log(d[d > 0])
            mean_log[k] = logs.mean() if logs.size else np.nan
    fit_start = min(int(round(cfg.fit_start_periods * period_steps)), follow // 2)
    ks = np.arange(fit_start, follow + 1)
    ys = mean_log[fit_start:]
    keep = np.isfinite(ys)
    if keep.sum() < 2:
        raise ValueError("divergence curve too short to fit")
    slope = np.polyfit(ks[keep] * traj.dt, ys[keep], 1)[0]
    return float(slope)


@dataclass(frozen=True)
class CorrDimConfig:
    """Settings for the correlation-sum slope estimate.

    Radii are log-spaced between two percentiles of the pairwise distances
    (estimated on a small subsample); the slope is fit on the central half of
    the radius grid. Point count is capped by strided subsampling.
    """

    n_radii: int = 24
    percentile_low: float = 0.1
    percentile_high: float = 10.0
    max_points: int = 20000
    min_points: int = 100
    fit_lo: float = 0.25
    fit_hi: float = 0.75

    def __post_init__(self):
        if self.n_radii < 4:
            raise ValueError("need at least 4 radii")
        if not (0 <= self.fit_lo < self.fit_hi <= 1):
            raise ValueError("fit window must satisfy 0 <= lo < hi <= 1")


def _subsample(data: np.ndarray, cap: int) -> np.ndarray:
    if len(data) <= cap:
        return data
    stride = int(math.ceil(len(data) / cap))
    return data[::stride]


def correlation_sum(points: np.ndarray, radii: np.ndarray) -> np.ndarray:
    """Fraction of distinct ordered pairs with distance <= r, per radius,
    counted with a k-d tree."""
    n = len(points)
    tree = cKDTree(points)
    counts = tree.count_neighbors(tree, radii)
    return (counts - n) / (n * (n - 1))


def correlation_dimension(traj: Trajectory | np.ndarray,
                          cfg: CorrDimConfig = CorrDimConfig()) -> float:
    """Correlation dimension: slope of log C(r) against log r over the
    scaling region."""
    data = traj.data if isinstance(traj, Trajectory) else np.asarray(traj, dtype=float)
    points = _subsample(data, cfg.max_points)
    if len(points) < cfg.min_points:
        raise ValueError(f"need at least {cfg.min_points} points, got {len(points)}")
    probe = _subsample(points, 1000)
    dists = pdist(probe)
    positive = dists[dists > 0]
    if positive.size == 0:
        raise ValueError("degenerate data: all points identical")
    r_lo = np.percentile(positive, cfg.percentile_low)
    r_hi = np.percentile(positive, cfg.percentile_high)
    if not (r_lo > 0) or r_hi <= r_lo:
        r_lo = positive.min()
        if r_hi <= r_lo:
            raise ValueError("cannot build a radius grid: distances collapse")
    radii = np.geomspace(r_lo, r_hi, cfg.n_radii)

    C = correlation_sum(points, radii)
    lo = int(cfg.fit_lo * cfg.n_radii)
    hi = int(math.ceil(cfg.fit_hi * cfg.n_radii))
    window = slice(lo, hi)
    r_fit = radii[window]
    c_fit = C[window]
    keep = c_fit > 0
    if keep.sum() < 2:
        raise ValueError("correlation sum vanishes over the scaling region")
    slope = np.polyfit(np.log(r_fit[keep]), np.log(c_fit[keep]), 1)[0]
    return float(slope)


@dataclass(frozen=True)
class ClimateReport:
    """Long-term attractor comparison: both metrics on both trajectories,
    successful when each reconstruction error is at most 0.1 (absolute)."""

    lyapunov_true: float
    lyapunov_pred: float
    correlation_dim_true: float
    correlation_dim_pred: float
    success: bool

    TOLERANCE = 0.1


def climate_check(true: Trajectory, pred: Trajectory,
                  lyap_cfg: RosensteinConfig = RosensteinConfig(),
                  cdim_cfg: CorrDimConfig = CorrDimConfig()) -> ClimateReport:
    lyap_true = lyapunov_rosenstein(true, lyap_cfg)
    lyap_pred = lyapunov_rosenstein(pred, lyap_cfg)
    cdim_true = correlation_dimension(true, cdim_cfg)
    cdim_pred = correlation_dimension(pred, cdim_cfg)
    success = (abs(lyap_pred - lyap_true) <= ClimateReport.TOLERANCE
               and abs(cdim_pred - cdim_true) <= ClimateReport.TOLERANCE)
    return ClimateReport(lyap_true, lyap_pred, cdim_true, cdim_pred, success)
