"""Once-reinforced random walk on the integers: exact laws, generating
functions, asymptotic range constants and Monte Carlo estimators."""

from orrw.errors import NonConvergenceError, ResourceError
from orrw.walk import (
    Params,
    Path,
    WalkState,
    hitting_times,
    martingale_drift,
    simulate_path,
    step_weights,
)

__version__ = "0.1.0"

__all__ = [
    "NonConvergenceError",
    "Params",
    "Path",
    "ResourceError",
    "WalkState",
    "__version__",
    "hitting_times",
    "martingale_drift",
    "simulate_path",
    "step_weights",
]
