"""Dense RGB-D SLAM with sparse voxel priors and tri-plane features."""

from ._core import (
    DatasetError,
    InputError,
    NumericError,
    ate_rmse,
    bell_weight,
    bell_weight_derivative,
    describe_config,
    load_ply,
    mesh_metrics,
    run,
    synthesize,
)

__all__ = [
    "DatasetError",
    "InputError",
    "NumericError",
    "ate_rmse",
    "bell_weight",
    "bell_weight_derivative",
    "describe_config",
    "load_ply",
    "mesh_metrics",
    "run",
    "synthesize",
]
