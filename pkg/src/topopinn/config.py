"""Experiment configuration: flat INI-style files and run assembly.

A config is a set of typed sections. ``config_to_text`` prints every
key with its current value, and ``parse_config_text`` accepts the same
format back, so a printed config is always a valid input. Builders at
the bottom turn a validated config into the objects a run needs.
"""

from __future__ import annotations

import configparser
import hashlib
import math
from dataclasses import dataclass, field, fields, replace

import numpy as np

from .errors import ConfigError
from .geometry import (CirclePatch, Roi, init_gamma, sample_rings)
from .losses import (BoundaryCondition, LossContext, LossWeights,
                     TopologySpec)
from .network import MlpConfig, Normalizer
from .pde import PdeProblem
from .reference import annulus_temperature, manufactured_suite, sample_field
from .sampling import (Measurements, PeriodicPairs, SampleSet, child_seeds,
                       load_measurements_csv, random_points, uniform_grid)
from .training import AdamConfig, TrainSetup, init_state

__all__ = [
    "ExperimentConfig",
    "default_config",
    "config_to_text",
    "parse_config_text",
    "load_config",
    "apply_override",
    "validate_config",
    "config_hash",
    "build_problem",
    "build_mlp",
    "build_regions",
    "build_context",
    "build_setup",
    "initial_centers",
    "build_samples",
    "prepare_run",
]


def _f(default, kind=None, **extra):
    meta = {}
    if kind is not None:
        meta["kind"] = kind
    meta.update(extra)
    return field(default=default, metadata=meta)


@dataclass
class RunSection:
    name: str = "run"
    mode: str = "lt"
    seed: int = 0
    epochs: int = 1000
    log_interval: int = 100
    early_stop_window: int = 10
    early_stop_tol: float = 0.0
    divergence_limit: float = 1e12
    output_dir: str = ""


@dataclass
class PdeSection:
    kind: str = "laplace"
    youngs_modulus: float = 1.0
    poisson_ratio: float = 0.33
    reynolds: float = 1.0
    density_sharpness: float = -10.0
    density_bc: tuple = _f((0.0,), "floats")


@dataclass
class NetworkSection:
    hidden_layers: int = 5
    width: int = 64
    normalize_inputs: bool = True


@dataclass
class GeometrySection:
    n_patches: int = 1
    init_centers: tuple = _f((), "centers")
    beta: float = 100.0
    delta_power: int = 1
    ring_radii: tuple = _f((0.5, 0.4, 0.3, 0.2), "floats")
    ring_points: int = 128


@dataclass
class SamplingSection:
    x_min: float = -1.0
    x_max: float = 1.0
    y_min: float = -1.0
    y_max: float = 1.0
    roi_pad: float = 0.0
    collocation: str = "grid"
    grid_nx: int = 30
    grid_ny: int = 30
    n_collocation: int = 900
    outside_core_data: bool = False
    chunk_size: int = 4096


@dataclass
class DataSection:
    source: str = "none"
    placement: str = "interior"
    n_points: int = 256
    path: str = ""
    case: str = ""
    components: tuple = _f((), "ints")
    annulus_flux: float = -0.5
    annulus_outer: float = 1.1
    annulus_band_lo: float = 0.55
    annulus_band_hi: float = 1.08
    inlet_velocity: float = 1.0
    target_amplitude: float = 1.0
    n_periodic: int = 0


@dataclass
class BoundarySection:
    kind: str = "none"
    values: tuple = _f((), "floats")
    flux: float = 0.0


@dataclass
class WeightsSection:
    pde: float = 1.0
    boundary: float = 0.0
    data: float = 0.0
    topology: float = 0.0


@dataclass
class TopologySection:
    pairs: tuple = _f((), "pairs")
    anchors: tuple = _f((), "anchors")
    nonoverlap: bool = False


@dataclass
class OptimizerSection:
    learning_rate: float = 1e-4
    center_learning_rate: float = _f(None, "opt_float")
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


@dataclass
class ExperimentConfig:
    run: RunSection = field(default_factory=RunSection)
    pde: PdeSection = field(default_factory=PdeSection)
    network: NetworkSection = field(default_factory=NetworkSection)
    geometry: GeometrySection = field(default_factory=GeometrySection)
    sampling: SamplingSection = field(default_factory=SamplingSection)
    data: DataSection = field(default_factory=DataSection)
    boundary: BoundarySection = field(default_factory=BoundarySection)
    weights: WeightsSection = field(default_factory=WeightsSection)
    topology: TopologySection = field(default_factory=TopologySection)
    optimizer: OptimizerSection = field(default_factory=OptimizerSection)

    def copy(self) -> "ExperimentConfig":
        return ExperimentConfig(**{
            f.name: replace(getattr(self, f.name)) for f in fields(self)})


def default_config() -> ExperimentConfig:
    return ExperimentConfig()


# ---------------------------------------------------------------------------
# value codecs


def _field_kind(f) -> str:
    kind = f.metadata.get("kind")
    if kind:
        return kind
    if f.type == "bool" or isinstance(f.default, bool):
        return "bool"
    if f.type == "int" or isinstance(f.default, int):
        return "int"
    if f.type == "float" or isinstance(f.default, float):
        return "float"
    return "str"


def _fmt_float(v: float) -> str:
    return repr(float(v))


def _format_value(kind: str, v) -> str:
    if kind == "bool":
        return "true" if v else "false"
    if kind == "int":
        return str(int(v))
    if kind == "float":
        return _fmt_float(v)
    if kind == "opt_float":
        return "" if v is None else _fmt_float(v)
    if kind == "str":
        return str(v)
    if kind == "floats":
        return ", ".join(_fmt_float(x) for x in v)
    if kind == "ints":
        return ", ".join(str(int(x)) for x in v)
    if kind == "centers":
        return "; ".join(f"{_fmt_float(x)}, {_fmt_float(y)}" for x, y in v)
    if kind == "pairs":
        return "; ".join(f"{int(i)} {int(j)} {_fmt_float(r)}" for i, j, r in v)
    if kind == "anchors":
        return "; ".join(
            f"{int(i)} {_fmt_float(x)} {_fmt_float(y)} {_fmt_float(r)}"
            for i, (x, y), r in v)
    raise ConfigError(f"unknown config value kind {kind!r}")


def _split_items(raw: str, sep: str):
    return [piece.strip() for piece in raw.split(sep) if piece.strip()]


def _parse_value(kind: str, raw: str):
    raw = raw.strip()
    if kind == "bool":
        low = raw.lower()
        if low in ("true", "1", "yes", "on"):
            return True
        if low in ("false", "0", "no", "off"):
            return False
        raise ValueError(raw)
    if kind == "int":
        return int(raw)
    if kind == "float":
        return float(raw)
    if kind == "opt_float":
        return None if raw == "" else float(raw)
    if kind == "str":
        return raw
    if kind == "floats":
        return tuple(float(x) for x in _split_items(raw, ","))
    if kind == "ints":
        return tuple(int(x) for x in _split_items(raw, ","))
    if kind == "centers":
        out = []
        for item in _split_items(raw, ";"):
            x, y = (float(p) for p in _split_items(item, ","))
            out.append((x, y))
        return tuple(out)
    if kind == "pairs":
        out = []
        for item in _split_items(raw, ";"):
            i, j, r = item.split()
            out.append((int(i), int(j), float(r)))
        return tuple(out)
    if kind == "anchors":
        out = []
        for item in _split_items(raw, ";"):
            i, x, y, r = item.split()
            out.append((int(i), (float(x), float(y)), float(r)))
        return tuple(out)
    raise ConfigError(f"unknown config value kind {kind!r}")


# ---------------------------------------------------------------------------
# text round trip


def config_to_text(cfg: ExperimentConfig) -> str:
    lines = []
    for sec_field in fields(cfg):
        section = getattr(cfg, sec_field.name)
        lines.append(f"[{sec_field.name}]")
        for f in fields(section):
            kind = _field_kind(f)
            lines.append(f"{f.name} = {_format_value(kind, getattr(section, f.name))}")
        lines.append("")
    return "\n".join(lines)


def parse_config_text(text: str) -> ExperimentConfig:
    cp = configparser.ConfigParser(interpolation=None)
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"config parse error: {exc}") from exc

    cfg = default_config()
    known = {f.name: getattr(cfg, f.name) for f in fields(cfg)}
    for sec_name in cp.sections():
        if sec_name not in known:
            raise ConfigError(f"unknown config section [{sec_name}]")
        section = known[sec_name]
        sec_fields = {f.name: f for f in fields(section)}
        for key, raw in cp.items(sec_name):
            if key not in sec_fields:
                raise ConfigError(f"unknown config key [{sec_name}] {key}")
            kind = _field_kind(sec_fields[key])
            try:
                value = _parse_value(kind, raw)
            except (ValueError, TypeError) as exc:
                raise ConfigError(
                    f"bad value for [{sec_name}] {key}: {raw!r} "
                    f"(expected {kind})") from exc
            setattr(section, key, value)
    return cfg


def load_config(path) -> ExperimentConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config_text(text)


def apply_override(cfg: ExperimentConfig, item: str) -> None:
    """Apply one ``section.key=value`` override in place."""
    if "=" not in item:
        raise ConfigError(f"override {item!r} is not section.key=value")
    target, raw = item.split("=", 1)
    if "." not in target:
        raise ConfigError(f"override {item!r} is not section.key=value")
    sec_name, key = target.strip().split(".", 1)
    sec_map = {f.name: getattr(cfg, f.name) for f in fields(cfg)}
    if sec_name not in sec_map:
        raise ConfigError(f"unknown config section [{sec_name}]")
    section = sec_map[sec_name]
    sec_fields = {f.name: f for f in fields(section)}
    key = key.strip()
    if key not in sec_fields:
        raise ConfigError(f"unknown config key [{sec_name}] {key}")
    kind = _field_kind(sec_fields[key])
    try:
        value = _parse_value(kind, raw)
    except (ValueError, TypeError) as exc:
        raise ConfigError(
            f"bad value for [{sec_name}] {key}: {raw!r} (expected {kind})") from exc
    setattr(section, key, value)


def config_hash(cfg: ExperimentConfig) -> str:
    return hashlib.sha256(config_to_text(cfg).encode("utf-8")).hexdigest()[:16]


# ---------------------------------------------------------------------------
# validation


_DATA_SOURCES = ("none", "csv", "annulus", "manufactured", "profiles")
_PLACEMENTS = ("interior", "exterior", "edges")


def validate_config(cfg: ExperimentConfig) -> None:
    run, pde, net = cfg.run, cfg.pde, cfg.network
    geo, samp, data = cfg.geometry, cfg.sampling, cfg.data
    bc, w, topo, opt = cfg.boundary, cfg.weights, cfg.topology, cfg.optimizer

    if run.mode not in ("lt", "dt"):
        raise ConfigError(f"[run] mode must be lt or dt, got {run.mode!r}")
    if run.epochs < 0:
        raise ConfigError("[run] epochs must be >= 0")
    if run.log_interval < 1:
        raise ConfigError("[run] log_interval must be >= 1")
    if run.early_stop_window < 2:
        raise ConfigError("[run] early_stop_window must be >= 2")
    if run.seed < 0:
        raise ConfigError("[run] seed must be >= 0")
    if run.divergence_limit <= 0:
        raise ConfigError("[run] divergence_limit must be positive")

    problem = build_problem(cfg)
    out_dim = problem.out_dim
    if run.mode == "dt" and len(pde.density_bc) != out_dim:
        raise ConfigError(
            f"[pde] density_bc needs {out_dim} values, got {len(pde.density_bc)}")

    if net.hidden_layers < 1:
        raise ConfigError("[network] hidden_layers must be >= 1")
    if net.width < 1:
        raise ConfigError("[network] width must be >= 1")

    if geo.n_patches < 0:
        raise ConfigError("[geometry] n_patches must be >= 0")
    if geo.init_centers and len(geo.init_centers) != geo.n_patches:
        raise ConfigError(
            f"[geometry] init_centers lists {len(geo.init_centers)} centers "
            f"for {geo.n_patches} patches")
    if geo.beta <= 0:
        raise ConfigError("[geometry] beta must be positive")
    if geo.delta_power < 1:
        raise ConfigError("[geometry] delta_power must be >= 1")
    if not geo.ring_radii or any(not 0.0 < r <= 0.5 for r in geo.ring_radii):
        raise ConfigError("[geometry] ring_radii must lie in (0, 0.5]")
    if geo.ring_points < 1:
        raise ConfigError("[geometry] ring_points must be >= 1")

    if not (samp.x_min < samp.x_max and samp.y_min < samp.y_max):
        raise ConfigError("[sampling] region bounds must satisfy min < max")
    if samp.roi_pad < 0:
        raise ConfigError("[sampling] roi_pad must be >= 0")
    if samp.collocation not in ("grid", "random"):
        raise ConfigError("[sampling] collocation must be grid or random")
    if samp.collocation == "grid" and (samp.grid_nx < 2 or samp.grid_ny < 2):
        raise ConfigError("[sampling] grid_nx and grid_ny must be >= 2")
    if samp.collocation == "random" and samp.n_collocation < 1:
        raise ConfigError("[sampling] n_collocation must be >= 1")
    if samp.chunk_size < 1:
        raise ConfigError("[sampling] chunk_size must be >= 1")

    if data.source not in _DATA_SOURCES:
        raise ConfigError(
            f"[data] source must be one of {', '.join(_DATA_SOURCES)}")
    if data.placement not in _PLACEMENTS:
        raise ConfigError(
            f"[data] placement must be one of {', '.join(_PLACEMENTS)}")
    if data.source == "csv" and not data.path:
        raise ConfigError("[data] csv source needs a path")
    if data.source in ("annulus", "manufactured", "profiles") and data.n_points < 1:
        raise ConfigError("[data] n_points must be >= 1")
    if data.source == "annulus":
        if out_dim != 1:
            raise ConfigError("[data] annulus source needs a single-field problem")
        if not 0.5 <= data.annulus_band_lo < data.annulus_band_hi <= data.annulus_outer:
            raise ConfigError(
                "[data] annulus band must satisfy 0.5 <= lo < hi <= outer")
    if data.source == "manufactured":
        names = [case.name for case in manufactured_suite(problem)]
        if data.case and data.case not in names:
            raise ConfigError(
                f"[data] unknown case {data.case!r}; choices: {', '.join(names)}")
    if data.source == "profiles":
        if out_dim < 2:
            raise ConfigError("[data] profiles source needs velocity components")
        if data.n_periodic < 0:
            raise ConfigError("[data] n_periodic must be >= 0")
    if data.placement == "exterior" and samp.roi_pad <= 0 and data.source in (
            "manufactured",):
        raise ConfigError("[data] exterior placement needs roi_pad > 0")
    if any(c < 0 or c >= out_dim for c in data.components):
        raise ConfigError("[data] components out of range for the problem")

    if bc.kind not in ("none", "dirichlet", "neumann"):
        raise ConfigError("[boundary] kind must be none, dirichlet, or neumann")
    if bc.kind == "dirichlet" and len(bc.values) != out_dim:
        raise ConfigError(
            f"[boundary] dirichlet needs {out_dim} values, got {len(bc.values)}")
    if bc.kind == "neumann" and out_dim != 1:
        raise ConfigError("[boundary] neumann constraints need a single field")

    for name in ("pde", "boundary", "data", "topology"):
        if getattr(w, name) < 0:
            raise ConfigError(f"[weights] {name} must be >= 0")

    for i, j, r in topo.pairs:
        if not (0 <= i < geo.n_patches and 0 <= j < geo.n_patches):
            raise ConfigError(f"[topology] pair ({i}, {j}) out of range")
        if i == j:
            raise ConfigError("[topology] pair joins a patch to itself")
        if r <= 0:
            raise ConfigError("[topology] target distances must be positive")
    for i, _anchor, r in topo.anchors:
        if not 0 <= i < geo.n_patches:
            raise ConfigError(f"[topology] anchor index {i} out of range")
        if r <= 0:
            raise ConfigError("[topology] target distances must be positive")

    if opt.learning_rate <= 0:
        raise ConfigError("[optimizer] learning_rate must be positive")
    if opt.center_learning_rate is not None and opt.center_learning_rate <= 0:
        raise ConfigError("[optimizer] center_learning_rate must be positive")
    if not (0.0 <= opt.beta1 < 1.0 and 0.0 <= opt.beta2 < 1.0):
        raise ConfigError("[optimizer] beta1 and beta2 must lie in [0, 1)")
    if opt.eps <= 0:
        raise ConfigError("[optimizer] eps must be positive")


# ---------------------------------------------------------------------------
# builders


def build_problem(cfg: ExperimentConfig) -> PdeProblem:
    return PdeProblem(
        kind=cfg.pde.kind,
        youngs_modulus=cfg.pde.youngs_modulus,
        poisson_ratio=cfg.pde.poisson_ratio,
        reynolds=cfg.pde.reynolds,
    )


def build_mlp(cfg: ExperimentConfig) -> MlpConfig:
    return MlpConfig(
        hidden_layers=cfg.network.hidden_layers,
        width=cfg.network.width,
        out_dim=build_problem(cfg).out_dim,
        density_channel=cfg.run.mode == "dt",
    )


def build_regions(cfg: ExperimentConfig) -> tuple[Roi, Roi]:
    """Return ``(roi, core)`` for the configured sampling region."""
    s = cfg.sampling
    core = Roi(s.x_min, s.x_max, s.y_min, s.y_max)
    roi = core.pad(s.roi_pad) if s.roi_pad > 0 else core
    return roi, core


def build_normalizer(cfg: ExperimentConfig) -> Normalizer:
    if not cfg.network.normalize_inputs:
        return Normalizer.identity()
    roi, _ = build_regions(cfg)
    return Normalizer.from_bounds(roi.x_min, roi.x_max, roi.y_min, roi.y_max)


def build_context(cfg: ExperimentConfig) -> LossContext:
    topo_pairs = tuple(cfg.topology.pairs) + tuple(cfg.topology.anchors)
    values = tuple(None if math.isnan(v) else float(v)
                   for v in cfg.boundary.values)
    return LossContext(
        problem=build_problem(cfg),
        weights=LossWeights(
            pde=cfg.weights.pde,
            boundary=cfg.weights.boundary,
            data=cfg.weights.data,
            topology=cfg.weights.topology,
        ),
        mode=cfg.run.mode,
        beta=cfg.geometry.beta,
        delta_power=cfg.geometry.delta_power,
        boundary=BoundaryCondition(
            kind=cfg.boundary.kind, values=values, flux=cfg.boundary.flux),
        topology=TopologySpec(
            pairs=topo_pairs, nonoverlap=cfg.topology.nonoverlap),
        dt_bc_values=tuple(cfg.pde.density_bc),
        dt_sharpness=cfg.pde.density_sharpness,
        chunk_size=cfg.sampling.chunk_size,
    )


def build_adam(cfg: ExperimentConfig) -> AdamConfig:
    o = cfg.optimizer
    return AdamConfig(
        learning_rate=o.learning_rate,
        beta1=o.beta1,
        beta2=o.beta2,
        eps=o.eps,
        center_learning_rate=o.center_learning_rate,
    )


def build_setup(cfg: ExperimentConfig) -> TrainSetup:
    return TrainSetup(
        mlp=build_mlp(cfg),
        normalizer=build_normalizer(cfg),
        ctx=build_context(cfg),
        adam=build_adam(cfg),
        epochs=cfg.run.epochs,
        log_interval=cfg.run.log_interval,
        early_stop_window=cfg.run.early_stop_window,
        early_stop_tol=cfg.run.early_stop_tol,
        divergence_limit=cfg.run.divergence_limit,
    )


def initial_centers(cfg: ExperimentConfig) -> np.ndarray:
    """Initial patch centers: fixed from config, else seeded in the core."""
    if cfg.run.mode == "dt" or cfg.geometry.n_patches == 0:
        return np.zeros((0, 2))
    if cfg.geometry.init_centers:
        return np.array(cfg.geometry.init_centers, dtype=np.float64)
    _, core = build_regions(cfg)
    seed = child_seeds(cfg.run.seed, 4)[1]
    return init_gamma(cfg.geometry.n_patches, core, seed)


def _edge_points(region: Roi, n: int) -> np.ndarray:
    per = max(n // 4, 2)
    xs = np.linspace(region.x_min, region.x_max, per)
    ys = np.linspace(region.y_min, region.y_max, per)
    top = np.column_stack([xs, np.full(per, region.y_max)])
    bottom = np.column_stack([xs, np.full(per, region.y_min)])
    left = np.column_stack([np.full(per, region.x_min), ys])
    right = np.column_stack([np.full(per, region.x_max), ys])
    return np.concatenate([left, right, bottom, top], axis=0)


def _exterior_points(roi: Roi, core: Roi, n: int, seed: int) -> np.ndarray:
    """Uniform points in the roi that fall outside the core."""
    rng = np.random.default_rng(np.random.PCG64(seed))
    out = []
    have = 0
    for _ in range(1000):
        cand = rng.random((max(4 * n, 64), 2))
        cand[:, 0] = roi.x_min + cand[:, 0] * roi.width
        cand[:, 1] = roi.y_min + cand[:, 1] * roi.height
        keep = cand[~core.contains(cand, tol=-1e-12)]
        if len(keep):
            out.append(keep)
            have += len(keep)
        if have >= n:
            break
    if have < n:
        raise ConfigError(
            "[data] exterior placement found too few points; is roi_pad > 0?")
    return np.concatenate(out, axis=0)[:n]


def _annulus_points(data: DataSection, n: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(np.random.PCG64(seed))
    lo, hi = data.annulus_band_lo, data.annulus_band_hi
    r = np.sqrt(lo * lo + (hi * hi - lo * lo) * rng.random(n))
    theta = 2.0 * np.pi * rng.random(n)
    return np.column_stack([r * np.cos(theta), r * np.sin(theta)])


def _data_points(cfg: ExperimentConfig, roi: Roi, core: Roi, seed: int) -> np.ndarray:
    placement = cfg.data.placement
    n = cfg.data.n_points
    if placement == "interior":
        return random_points(core, n, seed)
    if placement == "exterior":
        return _exterior_points(roi, core, n, seed)
    return _edge_points(core, n)


def _mask_components(values: np.ndarray, components: tuple) -> np.ndarray:
    if not components:
        return values
    out = np.full_like(values, np.nan)
    for c in components:
        out[:, c] = values[:, c]
    return out


def _profiles_measurements(cfg: ExperimentConfig, core: Roi,
                           out_dim: int) -> tuple[Measurements, PeriodicPairs | None]:
    """Inlet/outlet velocity profiles plus top-bottom periodic pairs.

    The left edge carries a uniform inlet velocity, the right edge a
    sinusoidal target for the first velocity component with one full
    period across the edge; pressure stays unconstrained.
    """
    data = cfg.data
    per = max(data.n_points // 2, 2)
    ys = np.linspace(core.y_min, core.y_max, per)
    left = np.column_stack([np.full(per, core.x_min), ys])
    right = np.column_stack([np.full(per, core.x_max), ys])

    values = np.full((2 * per, out_dim), np.nan)
    values[:per, 0] = data.inlet_velocity
    values[:per, 1] = 0.0
    values[per:, 0] = data.inlet_velocity + data.target_amplitude * np.sin(
        2.0 * np.pi * ys / core.height)
    measurements = Measurements(np.concatenate([left, right], axis=0), values)

    periodic = None
    if data.n_periodic > 0:
        xs = np.linspace(core.x_min, core.x_max, data.n_periodic)
        top = np.column_stack([xs, np.full(data.n_periodic, core.y_max)])
        bottom = np.column_stack([xs, np.full(data.n_periodic, core.y_min)])
        periodic = PeriodicPairs(top, bottom, components=(0, 1))
    return measurements, periodic


def build_samples(cfg: ExperimentConfig, centers: np.ndarray) -> SampleSet:
    roi, core = build_regions(cfg)
    s = cfg.sampling
    seeds = child_seeds(cfg.run.seed, 4)
    problem = build_problem(cfg)
    out_dim = problem.out_dim

    if s.collocation == "grid":
        collocation = uniform_grid(core, s.grid_nx, s.grid_ny)
    else:
        collocation = random_points(core, s.n_collocation, seeds[2])

    boundary = []
    if cfg.run.mode == "lt":
        for owner, (cx, cy) in enumerate(np.atleast_2d(centers)
                                         if len(centers) else []):
            boundary.extend(sample_rings(
                CirclePatch(float(cx), float(cy)),
                radii=cfg.geometry.ring_radii,
                n_per_ring=cfg.geometry.ring_points,
                owner=owner))

    periodic = None
    source = cfg.data.source
    if source == "none":
        measurements = Measurements.empty(out_dim)
    elif source == "csv":
        measurements = load_measurements_csv(cfg.data.path, out_dim)
    elif source == "annulus":
        points = _annulus_points(cfg.data, cfg.data.n_points, seeds[3])
        values = annulus_temperature(
            points, flux=cfg.data.annulus_flux,
            outer_radius=cfg.data.annulus_outer)[:, None]
        measurements = Measurements(points, values)
    elif source == "manufactured":
        cases = manufactured_suite(problem)
        case = cases[0]
        if cfg.data.case:
            case = next(c for c in cases if c.name == cfg.data.case)
        points = _data_points(cfg, roi, core, seeds[3])
        values = _mask_components(sample_field(case.fields, points),
                                  cfg.data.components)
        measurements = Measurements(points, values)
    else:
        measurements, periodic = _profiles_measurements(cfg, core, out_dim)

    return SampleSet(
        collocation=collocation,
        measurements=measurements,
        boundary=boundary,
        roi=roi,
        core=core,
        outside_core_data=cfg.sampling.outside_core_data,
        periodic=periodic,
    )


def prepare_run(cfg: ExperimentConfig):
    """Validate and assemble ``(state, samples, setup)`` for training."""
    validate_config(cfg)
    centers = initial_centers(cfg)
    samples = build_samples(cfg, centers)
    setup = build_setup(cfg)
    seeds = child_seeds(cfg.run.seed, 4)
    state = init_state(setup.mlp, centers, seeds[0])
    return state, samples, setup
