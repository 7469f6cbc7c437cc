"""Maximum-likelihood path extraction for arbitrary TX switching schedules."""

from .estimate import EstimationResult, EstimatorSettings, detect_init, estimate, fit_gamma, lm_refine
from .grid import SearchGrid, correlation, correlation_grid_naive, correlation_grid_tensor, grid_argmax
from .model import CrlbResult, crlb, fim, jacobian, score

__all__ = [
    "CrlbResult",
    "EstimationResult",
    "EstimatorSettings",
    "SearchGrid",
    "correlation",
    "correlation_grid_naive",
    "correlation_grid_tensor",
    "crlb",
    "detect_init",
    "estimate",
    "fim",
    "fit_gamma",
    "grid_argmax",
    "jacobian",
    "lm_refine",
    "score",
]
