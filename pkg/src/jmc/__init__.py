"""Convex and concave relaxations of expected-value functions E[f(x, omega)]."""

from .dist import Beta, ProductDistribution, TruncatedGamma, TruncatedNormal, Uniform
from .errors import ConfigError, DimensionError, DomainError, JMCError, ParseError, ZeroProbabilityError
from .evrelax import ConvergentScheme, EVRelaxation, build, build_for_rv, point_bounds
from .expr import ExprGraph, compose, eval_real, parse
from .interval import Box, Interval, eval_interval
from .partition import IntervalPartition, refine_map_phi, uniform_partition, weights
from .relax import McCormickValue, RelaxationScheme, relax_at
from .rvtransform import FactorableRV, affine_transform, box_muller, covariance_transform, identity

__version__ = "0.1.0"

__all__ = [
    "Beta", "Box", "ConfigError", "ConvergentScheme", "DimensionError", "DomainError",
    "EVRelaxation", "ExprGraph", "FactorableRV", "Interval", "IntervalPartition", "JMCError",
    "McCormickValue", "ParseError", "ProductDistribution", "RelaxationScheme",
    "TruncatedGamma", "TruncatedNormal", "Uniform", "ZeroProbabilityError", "affine_transform",
    "box_muller", "build", "build_for_rv", "compose", "covariance_transform", "eval_interval",
    "eval_real", "identity", "parse", "point_bounds", "refine_map_phi", "relax_at",
    "uniform_partition", "weights",
]
