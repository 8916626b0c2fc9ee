"""Sparse-feature SVDD anomaly detection.

One-class hypersphere models with an exact feature budget: a cutting-plane
loop discovers the masks that most tighten the sphere, a small multi-kernel
master problem weights them, and nonlinear kernels are handled by whitening
the empirical kernel map so selection stays a sorting problem.
"""

from .detector import (
    ImageCube,
    Rect,
    ScoreMap,
    build_scoremap,
    generate_synthetic,
    load_cube,
    select_bandwidth,
    write_cube,
    write_pgm,
)
from .embedding import KernelWhitener, build_whitener, embed, embed_matrix
from .errors import DataError, DetectorError, NumericalError, UsageError
from .kernels import FeatureMask, GramMatrix, KernelSpec, cross_kernel, gram, kernel_eval
from .master import ConstraintSet, MasterSolution, combined_gram, solve_restricted_master
from .model import FitReport, SparseSvddModel, fit_embedded, fit_linear
from .modelfile import parse_model, read_model_file, serialize_model, write_model_file
from .selection import FeatureScores, feature_scores, most_violated_mask
from .svdd import SolverConfig, SvddSolution, distance_sq_to_center, radius_squared, solve_svdd

__version__ = "0.1.0"

__all__ = [
    "ConstraintSet",
    "DataError",
    "DetectorError",
    "FeatureMask",
    "FeatureScores",
    "FitReport",
    "GramMatrix",
    "ImageCube",
    "KernelSpec",
    "KernelWhitener",
    "MasterSolution",
    "NumericalError",
    "Rect",
    "ScoreMap",
    "SolverConfig",
    "SparseSvddModel",
    "SvddSolution",
    "UsageError",
    "build_scoremap",
    "build_whitener",
    "combined_gram",
    "cross_kernel",
    "distance_sq_to_center",
    "embed",
    "embed_matrix",
    "feature_scores",
    "fit_embedded",
    "fit_linear",
    "generate_synthetic",
    "gram",
    "kernel_eval",
    "load_cube",
    "most_violated_mask",
    "parse_model",
    "radius_squared",
    "read_model_file",
    "select_bandwidth",
    "serialize_model",
    "solve_restricted_master",
    "solve_svdd",
    "write_cube",
    "write_model_file",
    "write_pgm",
]
