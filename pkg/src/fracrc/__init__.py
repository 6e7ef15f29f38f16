"""fracrc: reservoir computers with tunable fractional nonlinearity.

Generate chaotic trajectories whose nonlinear exponents are exact rationals,
train minimal (fully deterministic) and classical reservoir computers whose
generalized states carry fractional powers, measure forecast horizons and
attractor climate, and probe unknown series for their smallest nonlinearity.
"""

__version__ = "0.1.0"

from .classic_rc import ClassicRC, ClassicRCConfig, build_classic, fractional_library
from .dynamics import (Diverged, FractionalHalvorsen, IntegratorConfig, Lorenz,
                       Thomas, default_initial_condition, discard_transient,
                       integrate, rhs)
from .fractional import FracExponent, frac_pow
from .metrics import (ClimateReport, CorrDimConfig, ForecastHorizon,
                      RosensteinConfig, climate_check, correlation_dimension,
                      forecast_horizon, lyapunov_rosenstein)
from .minimal_rc import MinRC, MinRCConfig, build
from .probe import (ProbeConfig, ProbeReport, default_eta_grid, ingest_returns,
                    probe_smallest_nonlinearity)
from .readout import Prediction, Readout, predict, train
from .surrogates import ft_surrogate, surrogate_background, surrogate_trajectory
from .trajectory import Trajectory

__all__ = [
    "__version__",
    "FracExponent", "frac_pow", "Trajectory",
    "Lorenz", "FractionalHalvorsen", "Thomas", "IntegratorConfig", "Diverged",
    "rhs", "integrate", "discard_transient", "default_initial_condition",
    "MinRCConfig", "MinRC", "build",
    "ClassicRCConfig", "ClassicRC", "build_classic", "fractional_library",
    "Readout", "Prediction", "train", "predict",
    "ForecastHorizon", "RosensteinConfig", "CorrDimConfig", "ClimateReport",
    "forecast_horizon", "lyapunov_rosenstein", "correlation_dimension",
    "climate_check",
    "ft_surrogate", "surrogate_trajectory", "surrogate_background",
    "ProbeConfig", "ProbeReport", "default_eta_grid",
    "probe_smallest_nonlinearity", "ingest_returns",
]
