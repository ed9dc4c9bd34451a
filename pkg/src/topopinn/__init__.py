"""Meshless topology optimization with physics-informed neural networks.

A small engine for recovering both a physical field and the placement of
circular topological features from sparse measurements. Two model
families are provided: one with explicit trainable circle-patch centers
(boundary conditions imposed on rings that ride on the patches) and a
density-channel baseline that blends the governing equation with a
boundary target through a learned indicator.
"""

from .errors import (CheckpointError, ConfigError, DivergenceError,
                     DomainError, NumericError, TopopinnError)
from .geometry import CirclePatch, Roi
from .network import MlpConfig, Normalizer
from .pde import PdeProblem
from .losses import (BoundaryCondition, LossBreakdown, LossContext,
                     LossWeights, TopologySpec)
from .sampling import Measurements, PeriodicPairs, SampleSet
from .training import (AdamConfig, TrainSetup, TrainState, checkpoint_load,
                       checkpoint_save, train)
from .config import (ExperimentConfig, default_config, load_config,
                     parse_config_text, prepare_run)
from .presets import make_preset, preset_names
from .estimators import DensityTopologyPinn, LagrangianTopologyPinn

__version__ = "0.1.0"

__all__ = [
    "TopopinnError", "DomainError", "NumericError", "ConfigError",
    "CheckpointError", "DivergenceError",
    "CirclePatch", "Roi",
    "MlpConfig", "Normalizer",
    "PdeProblem",
    "BoundaryCondition", "LossBreakdown", "LossContext", "LossWeights",
    "TopologySpec",
    "Measurements", "PeriodicPairs", "SampleSet",
    "AdamConfig", "TrainSetup", "TrainState",
    "checkpoint_load", "checkpoint_save", "train",
    "ExperimentConfig", "default_config", "load_config",
    "parse_config_text", "prepare_run",
    "make_preset", "preset_names",
    "LagrangianTopologyPinn", "DensityTopologyPinn",
    "__version__",
]
