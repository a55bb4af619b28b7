"""Embedded feature selection with stochastic gates.

Gaussian-noise gates (STG), Hard-Concrete and deterministic gates on a small
numpy MLP, a proximal-gradient LASSO baseline, synthetic data generators,
selection metrics and a seeded experiment runner.
"""
from .errors import (ConfigError, DegenerateInputError, DivergenceError, DomainError, SchemaError,
                     ShapeError, StgError, UsageError)
from .ndcore import Rng, derive_seed

__version__ = "0.1.0"

__all__ = ["Rng", "derive_seed", "StgError", "DomainError", "ShapeError", "DegenerateInputError",
           "SchemaError", "ConfigError", "UsageError", "DivergenceError", "__version__"]
