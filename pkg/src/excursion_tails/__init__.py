"""Tail constants for positively homogeneous functionals of Brownian excursion."""

from .exact_dist import cdf_max, log_mgf_max, log_tail_max, moment_max, quantile_max, tail_max
from .excursion_mc import (
    McConfig,
    estimate_mgf,
    estimate_moment,
    estimate_tail,
    functional_samples,
    sample_bridge,
    sample_excursion,
)
from .functionals import CATALOG, FunctionalId, FunctionalSpec, evaluate, functional, gradient
from .grid_path import GridPath, check_kex, make_path, symmetrize, unimodal_rearrange
from .variational import (
    GammaResult,
    SolverConfig,
    gamma_bounds,
    gamma_closed_form,
    gamma_max_direct,
    gamma_numeric,
)

__all__ = [
    "CATALOG", "FunctionalId", "FunctionalSpec", "GammaResult", "GridPath", "McConfig",
    "SolverConfig", "cdf_max", "check_kex", "estimate_mgf", "estimate_moment", "estimate_tail",
    "evaluate", "functional", "functional_samples", "gamma_bounds", "gamma_closed_form",
    "gamma_max_direct", "gamma_numeric", "gradient", "log_mgf_max", "log_tail_max", "make_path",
    "moment_max", "quantile_max", "sample_bridge", "sample_excursion", "symmetrize", "tail_max",
    "unimodal_rearrange",
]
