"""Agent-based herding model of financial markets.

Submodules: :mod:`~herdsim.sde_engine` (macroscopic SDE paths),
:mod:`~herdsim.microsim` (finite-N event simulation),
:mod:`~herdsim.reduced_sde` (power-law SDE), :mod:`~herdsim.market_series`
(returns and ablation modes), :mod:`~herdsim.stats` (interval, density and
spectral estimators) and the command-line layer in :mod:`~herdsim.cli`.
"""

from .errors import (
    ConfigError,
    DataError,
    DomainError,
    HerdsimError,
    InsufficientDataError,
)
from .params import ModelParams

__version__ = "0.1.0"

__all__ = [
    "ModelParams",
    "HerdsimError",
    "ConfigError",
    "DataError",
    "DomainError",
    "InsufficientDataError",
]
