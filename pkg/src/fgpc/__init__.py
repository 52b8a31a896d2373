"""Fourier-Gegenbauer predictor-corrector for periodic chemostat control.

Submodules: :mod:`fourier` (interpolation and integration matrices),
:mod:`gegenbauer` (shifted Gauss rules and integration matrices),
:mod:`edges` (jump detection), :mod:`chemostat` (model),
:mod:`solver` (pipeline), :mod:`analysis` (error bounds and corpus),
:mod:`cli`.
"""

from .chemostat import D1, D2, DATASETS, ChemostatParams, equilibrium_sbar
from .edges import EdgeConfig, ReconstructedPiecewise, detect_edges, reconstruct
from .errors import (
    ConvergenceError,
    DetectionError,
    DomainError,
    FgpcError,
    GridError,
    StageError,
)
from .fourier import FourierInterpolant, PeriodicGrid, build_fim_direct, build_fim_fast
from .gegenbauer import MeshPartition, build_sgim, gg_nodes_weights, piecewise_integrate
from .solver import FgpcConfig, FgpcSolution, preset_config, run_fgpc

__version__ = "0.1.0"

__all__ = [
    "ChemostatParams", "D1", "D2", "DATASETS", "equilibrium_sbar",
    "EdgeConfig", "ReconstructedPiecewise", "detect_edges", "reconstruct",
    "ConvergenceError", "DetectionError", "DomainError", "FgpcError", "GridError", "StageError",
    "FourierInterpolant", "PeriodicGrid", "build_fim_direct", "build_fim_fast",
    "MeshPartition", "build_sgim", "gg_nodes_weights", "piecewise_integrate",
    "FgpcConfig", "FgpcSolution", "preset_config", "run_fgpc",
]
