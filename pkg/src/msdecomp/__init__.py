"""Multi-scale seasonal-trend decomposition for series with two seasonalities.

The recent window is kept at full resolution while older history is stored
block-averaged; the decomposition combines a robust single-seasonality
decomposition of the coarse series with an ADMM solve at full resolution.
"""

from .admm import AdmmConfig, SingularSystem, SolveReport
from .core import (Decomposition, DecompositionError, LowResEstimates, MultiScaleSeries,
                   TimeSeries, ValidationError, reconstruct, validate_multiscale)
from .filters import BilateralParams, SeasonalFilterParams, bilateral_denoise
from .pipeline import PipelineConfig, StageError, decompose
from .synth import GroundTruth, SynthConfig, generate, split_series

__version__ = "0.1.0"

__all__ = [
    "AdmmConfig", "BilateralParams", "Decomposition", "DecompositionError", "GroundTruth",
    "LowResEstimates", "MultiScaleSeries", "PipelineConfig", "SeasonalFilterParams",
    "SingularSystem", "SolveReport", "StageError", "SynthConfig", "TimeSeries",
    "ValidationError", "bilateral_denoise", "decompose", "generate", "reconstruct",
    "split_series", "validate_multiscale",
]
