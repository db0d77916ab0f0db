"""warpmix: warped additive mixed models for non-Gaussian continuous data.

The response is passed through a learned stack of monotone transformations
and modeled with fixed effects plus basis-expanded random effects (Moran
eigenvectors for spatial terms, natural splines for covariate-dependent
terms, indicators for group intercepts), estimated by a fast restricted
maximum likelihood whose per-iteration cost is independent of N after a
one-time inner-product pre-conditioning pass.
"""

from . import basis, model, reml, simulate, warp
from .errors import DomainViolation, NumericalError, SpecificationError, WarpmixError

__all__ = [
    "basis",
    "model",
    "reml",
    "simulate",
    "warp",
    "WarpmixError",
    "DomainViolation",
    "SpecificationError",
    "NumericalError",
]

__version__ = "0.1.0"
