"""Empirical Gramians and Gramian-based model reduction for input-output systems."""

from .errors import (ConfigError, EmgramError, NumericalError, SolverDivergenceError)
from .gramian import (GramianConfig, GramianKind, GramianResult, empirical_gramian,
                      empirical_wc, empirical_wj, empirical_wi, empirical_wo, empirical_ws,
                      empirical_wx, empirical_wy, merge_partitions, scale_sequence)
from .integrate import TimeGrid, solve
from .model import LinearSystem, SystemModel, augment_parameters, augment_transpose
from .signals import InputSignal

__version__ = "0.1.0"

__all__ = [
    "ConfigError", "EmgramError", "NumericalError", "SolverDivergenceError",
    "GramianConfig", "GramianKind", "GramianResult", "empirical_gramian",
    "empirical_wc", "empirical_wo", "empirical_wx", "empirical_wy", "empirical_ws",
    "empirical_wi", "empirical_wj", "merge_partitions", "scale_sequence",
    "TimeGrid", "solve", "LinearSystem", "SystemModel", "augment_parameters",
    "augment_transpose", "InputSignal", "__version__",
]
