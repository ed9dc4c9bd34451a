"""Shipped experiment presets.

Each preset is a complete, validated config. The named cases cover the
two comparison problems (elastic with fixed patch boundary, heat
conduction with prescribed patch flux), the flow reconstruction arrays
with distance-constrained patch layouts, the flow rearrangement task
with free overlapping patches, and the annulus recovery pair used by
the end-to-end checks. Sampling counts and epochs are sized for a
desktop CPU; weights, optimizer settings, ring layouts, and constraint
structure carry over unchanged to larger budgets via --set overrides.
"""

from __future__ import annotations

import math

from .config import ExperimentConfig, default_config, validate_config
from .errors import ConfigError

__all__ = ["PRESETS", "preset_names", "make_preset"]


def _elastic_common(cfg: ExperimentConfig) -> None:
    cfg.pde.kind = "elastic"
    cfg.network.hidden_layers = 5
    cfg.network.width = 64
    cfg.sampling.x_min, cfg.sampling.x_max = -1.0, 1.0
    cfg.sampling.y_min, cfg.sampling.y_max = -1.0, 1.0
    cfg.sampling.roi_pad = 1.0
    cfg.sampling.grid_nx = cfg.sampling.grid_ny = 30
    cfg.sampling.outside_core_data = True
    cfg.data.source = "manufactured"
    cfg.data.case = "uniaxial-stretch"
    cfg.data.placement = "exterior"
    cfg.data.n_points = 200
    cfg.weights.data = 1e4
    cfg.run.epochs = 2000


def elastic_lt() -> ExperimentConfig:
    cfg = default_config()
    cfg.run.name = "elastic-lt"
    _elastic_common(cfg)
    cfg.geometry.n_patches = 1
    cfg.geometry.ring_points = 128
    cfg.boundary.kind = "dirichlet"
    cfg.boundary.values = (0.0, 0.0)
    cfg.weights.pde = 2e3
    cfg.weights.boundary = 1e4
    return cfg


def elastic_dt() -> ExperimentConfig:
    cfg = default_config()
    cfg.run.name = "elastic-dt"
    cfg.run.mode = "dt"
    _elastic_common(cfg)
    cfg.geometry.n_patches = 0
    cfg.pde.density_bc = (0.0, 0.0)
    cfg.weights.pde = 2e2
    return cfg


def _laplace_common(cfg: ExperimentConfig) -> None:
    cfg.pde.kind = "laplace"
    cfg.network.hidden_layers = 5
    cfg.network.width = 64
    cfg.sampling.x_min, cfg.sampling.x_max = -1.0, 1.0
    cfg.sampling.y_min, cfg.sampling.y_max = -1.0, 1.0
    cfg.sampling.grid_nx = cfg.sampling.grid_ny = 30
    cfg.data.source = "manufactured"
    cfg.data.case = "saddle"
    cfg.data.placement = "interior"
    cfg.data.n_points = 300
    cfg.weights.pde = 1.0
    cfg.weights.data = 1e4
    cfg.run.epochs = 2000


def laplace_lt() -> ExperimentConfig:
    cfg = default_config()
    cfg.run.name = "laplace-lt"
    _laplace_common(cfg)
    cfg.geometry.n_patches = 1
    cfg.geometry.ring_points = 256
    cfg.boundary.kind = "neumann"
    cfg.boundary.flux = -0.5
    cfg.weights.boundary = 1.0
    return cfg


def laplace_dt() -> ExperimentConfig:
    cfg = default_config()
    cfg.run.name = "laplace-dt"
    cfg.run.mode = "dt"
    _laplace_common(cfg)
    cfg.geometry.n_patches = 0
    cfg.pde.density_bc = (0.0,)
    return cfg


def _annulus_common(cfg: ExperimentConfig) -> None:
    cfg.pde.kind = "laplace"
    cfg.network.hidden_layers = 3
    cfg.network.width = 32
    cfg.sampling.x_min, cfg.sampling.x_max = -1.1, 1.1
    cfg.sampling.y_min, cfg.sampling.y_max = -1.1, 1.1
    cfg.sampling.grid_nx = cfg.sampling.grid_ny = 24
    cfg.data.source = "annulus"
    cfg.data.n_points = 400
    cfg.data.annulus_flux = -0.5
    cfg.data.annulus_outer = 1.1
    cfg.data.annulus_band_lo = 0.7
    cfg.data.annulus_band_hi = 1.08
    cfg.weights.pde = 1.0
    cfg.weights.data = 100.0
    cfg.optimizer.learning_rate = 1e-3
    cfg.run.epochs = 16000
    cfg.run.log_interval = 500


def annulus_lt() -> ExperimentConfig:
    cfg = default_config()
    cfg.run.name = "annulus-lt"
    _annulus_common(cfg)
    cfg.geometry.n_patches = 1
    cfg.geometry.init_centers = ((0.21, -0.2),)
    cfg.geometry.ring_points = 64
    cfg.boundary.kind = "neumann"
    cfg.boundary.flux = -0.5
    cfg.weights.boundary = 1.0
    return cfg


def annulus_dt() -> ExperimentConfig:
    cfg = default_config()
    cfg.run.name = "annulus-dt"
    cfg.run.mode = "dt"
    _annulus_common(cfg)
    cfg.geometry.n_patches = 0
    cfg.pde.density_bc = (0.0,)
    return cfg


def _flow_common(cfg: ExperimentConfig) -> None:
    cfg.pde.kind = "steady_ns"
    cfg.pde.reynolds = 1.0
    cfg.network.hidden_layers = 5
    cfg.network.width = 64
    cfg.boundary.kind = "dirichlet"
    cfg.boundary.values = (0.0, 0.0, math.nan)
    cfg.weights.pde = 2e3
    cfg.weights.boundary = 1e4
    cfg.weights.data = 1e4
    cfg.run.epochs = 2000


def _flow_exterior_data(cfg: ExperimentConfig, n_points: int) -> None:
    cfg.sampling.roi_pad = 0.1
    cfg.sampling.outside_core_data = True
    cfg.data.source = "manufactured"
    cfg.data.case = "uniform-stream"
    cfg.data.placement = "exterior"
    cfg.data.n_points = n_points


def ns_2c() -> ExperimentConfig:
    cfg = default_config()
    cfg.run.name = "ns-2c"
    _flow_common(cfg)
    cfg.geometry.n_patches = 2
    cfg.geometry.ring_points = 128
    cfg.sampling.x_min, cfg.sampling.x_max = -2.25, 2.25
    cfg.sampling.y_min, cfg.sampling.y_max = -1.0, 1.0
    cfg.sampling.grid_nx, cfg.sampling.grid_ny = 26, 12
    _flow_exterior_data(cfg, 160)
    cfg.topology.pairs = ((0, 1, 2.5), (1, 0, 2.5))
    cfg.weights.topology = 1e4
    return cfg


def ns_3c() -> ExperimentConfig:
    cfg = default_config()
    cfg.run.name = "ns-3c"
    _flow_common(cfg)
    cfg.geometry.n_patches = 3
    cfg.geometry.ring_points = 128
    cfg.sampling.x_min, cfg.sampling.x_max = -2.25, 2.25
    cfg.sampling.y_min, cfg.sampling.y_max = -1.75, 2.45
    cfg.sampling.grid_nx, cfg.sampling.grid_ny = 24, 22
    _flow_exterior_data(cfg, 160)
    cfg.topology.pairs = tuple(
        (i, j, 2.5) for i in range(3) for j in range(3) if i != j)
    cfg.weights.topology = 1e4
    return cfg


def _ring_layout_8(cfg: ExperimentConfig) -> None:
    cfg.geometry.n_patches = 8
    cfg.geometry.ring_points = 128
    cfg.sampling.x_min, cfg.sampling.x_max = -3.5, 3.5
    cfg.sampling.y_min, cfg.sampling.y_max = -3.5, 3.5
    cfg.sampling.grid_nx = cfg.sampling.grid_ny = 24
    cfg.topology.anchors = tuple((i, (0.0, 0.0), 2.5) for i in range(8))
    cfg.topology.nonoverlap = True
    cfg.weights.topology = 1e2


def ns_8c() -> ExperimentConfig:
    cfg = default_config()
    cfg.run.name = "ns-8c"
    _flow_common(cfg)
    _ring_layout_8(cfg)
    _flow_exterior_data(cfg, 200)
    return cfg


def poisson_8c() -> ExperimentConfig:
    cfg = default_config()
    cfg.run.name = "poisson-8c"
    _flow_common(cfg)
    cfg.pde.kind = "pressure_poisson"
    _ring_layout_8(cfg)
    _flow_exterior_data(cfg, 200)
    cfg.data.case = "resting"
    return cfg


def _rearrange_common(cfg: ExperimentConfig) -> None:
    cfg.pde.kind = "steady_ns"
    cfg.pde.reynolds = 1.0
    cfg.boundary.kind = "dirichlet"
    cfg.boundary.values = (0.0, 0.0, math.nan)
    cfg.data.source = "profiles"
    cfg.data.inlet_velocity = 1.0
    cfg.data.target_amplitude = 1.0
    cfg.weights.pde = 2e3
    cfg.weights.boundary = 1e4
    cfg.weights.data = 1e4
    cfg.weights.topology = 0.0
    cfg.run.epochs = 2000


def rearrange_48() -> ExperimentConfig:
    cfg = default_config()
    cfg.run.name = "rearrange-48"
    _rearrange_common(cfg)
    cfg.network.hidden_layers = 5
    cfg.network.width = 64
    cfg.geometry.n_patches = 48
    cfg.geometry.ring_points = 32
    cfg.sampling.x_min, cfg.sampling.x_max = -12.5, 12.5
    cfg.sampling.y_min, cfg.sampling.y_max = -7.5, 7.5
    cfg.sampling.grid_nx, cfg.sampling.grid_ny = 50, 30
    cfg.data.n_points = 100
    cfg.data.n_periodic = 50
    return cfg


def rearrange_4() -> ExperimentConfig:
    cfg = default_config()
    cfg.run.name = "rearrange-4"
    _rearrange_common(cfg)
    cfg.network.hidden_layers = 4
    cfg.network.width = 32
    cfg.geometry.n_patches = 4
    cfg.geometry.ring_points = 32
    cfg.sampling.x_min, cfg.sampling.x_max = -2.5, 2.5
    cfg.sampling.y_min, cfg.sampling.y_max = -1.5, 1.5
    cfg.sampling.grid_nx, cfg.sampling.grid_ny = 20, 12
    cfg.data.n_points = 24
    cfg.data.n_periodic = 20
    return cfg


PRESETS = {
    "elastic-lt": elastic_lt,
    "elastic-dt": elastic_dt,
    "laplace-lt": laplace_lt,
    "laplace-dt": laplace_dt,
    "annulus-lt": annulus_lt,
    "annulus-dt": annulus_dt,
    "ns-2c": ns_2c,
    "ns-3c": ns_3c,
    "ns-8c": ns_8c,
    "poisson-8c": poisson_8c,
    "rearrange-48": rearrange_48,
    "rearrange-4": rearrange_4,
}


def preset_names() -> list[str]:
    return sorted(PRESETS)


def make_preset(name: str) -> ExperimentConfig:
    try:
        factory = PRESETS[name]
    except KeyError:
        raise ConfigError(
            f"unknown preset {name!r}; choices: {', '.join(preset_names())}")
    cfg = factory()
    validate_config(cfg)
    return cfg
