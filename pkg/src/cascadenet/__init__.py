"""Cascade ensembles of small neural networks on PCA-compressed gridded fields.

A linear net is trained first; deeper tanh nets are then recruited one at a
time on the residual error and kept only if they lower the validation RMSE.
"""
from .cascade import Cascade, CascadeConfig, SweepResult, predict, residual_targets, sweep_pcs, train
from .dataset import (
    Dataset,
    GeneratorConfig,
    GridSample,
    Partition,
    generate,
    load_csv,
    partition_by_year,
    remove_sample_means,
    save_csv,
)
from .errors import (
    CascadeNetError,
    ConfigError,
    ConvergenceError,
    LoadError,
    NumericalError,
    ParameterError,
    ParseError,
    SchemaVersionError,
    ShapeError,
    TrainingError,
)
from .interpret import SensitivityMap, export_maps, unit_map
from .network import MlpSpec
from .pca import PcaModel
from .persistence import SCHEMA_VERSION, load, save
from .scg import ScgConfig, minimize

__version__ = "0.1.0"

__all__ = [
    "Cascade",
    "CascadeConfig",
    "CascadeNetError",
    "ConfigError",
    "ConvergenceError",
    "Dataset",
    "GeneratorConfig",
    "GridSample",
    "LoadError",
    "MlpSpec",
    "NumericalError",
    "ParameterError",
    "ParseError",
    "Partition",
    "PcaModel",
    "SCHEMA_VERSION",
    "SchemaVersionError",
    "ScgConfig",
    "SensitivityMap",
    "ShapeError",
    "SweepResult",
    "TrainingError",
    "export_maps",
    "generate",
    "load",
    "load_csv",
    "minimize",
    "partition_by_year",
    "predict",
    "remove_sample_means",
    "residual_targets",
    "save",
    "save_csv",
    "sweep_pcs",
    "train",
    "unit_map",
]
