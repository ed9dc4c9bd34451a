"""Point sampling, sample-set assembly, and measurement CSV exchange.

Randomness policy: every random draw in the package comes from numpy's
PCG64 generator. A run has a single root seed; per-purpose seeds (grid
subsampling, center initialization, weight initialization, ...) are
derived from it with :func:`child_seeds`, which wraps numpy's
``SeedSequence`` spawning. PCG64 is a 64-bit counter-based generator
with a platform-independent stream, so sampled points are bit-for-bit
reproducible across machines for a fixed seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .geometry import BoundarySample, Roi

__all__ = [
    "child_seeds",
    "uniform_grid",
    "random_points",
    "subsample",
    "build_multi_patch_roi",
    "Measurements",
    "PeriodicPairs",
    "SampleSet",
    "save_measurements_csv",
    "save_sampleset_csv",
    "load_measurements_csv",
]


def child_seeds(root_seed: int, n: int) -> list[int]:
    """Derive ``n`` independent child seeds from one root seed."""
    ss = np.random.SeedSequence(root_seed)
    return [int(s) for s in ss.generate_state(n, dtype=np.uint64)]


def uniform_grid(region: Roi, nx: int, ny: int) -> np.ndarray:
    """Inclusive-corner uniform grid, row-major (y slowest, x fastest).

    Spacing along x is exactly width/(nx-1); corners are grid points.
    """
    if nx < 2 or ny < 2:
        raise ConfigError("uniform_grid: need at least 2 points per axis")
    xs = np.linspace(region.x_min, region.x_max, nx)
    ys = np.linspace(region.y_min, region.y_max, ny)
    X, Y = np.meshgrid(xs, ys)
    return np.stack([X.ravel(), Y.ravel()], axis=1)


def random_points(region: Roi, n: int, seed: int) -> np.ndarray:
    """Uniform iid points in the region from a PCG64 stream."""
    if n < 0:
        raise ConfigError("random_points: n must be >= 0")
    if n == 0:
        return np.zeros((0, 2))
    rng = np.random.Generator(np.random.PCG64(seed))
    u = rng.random((n, 2))
    u[:, 0] = region.x_min + u[:, 0] * region.width
    u[:, 1] = region.y_min + u[:, 1] * region.height
    return u


def subsample(points: np.ndarray, n: int, seed: int) -> np.ndarray:
    """Choose ``n`` rows without replacement; ``n == len`` permutes."""
    points = np.asarray(points)
    if n < 0 or n > len(points):
        raise ConfigError(f"subsample: cannot take {n} from {len(points)} points")
    rng = np.random.Generator(np.random.PCG64(seed))
    idx = rng.choice(len(points), size=n, replace=False)
    return points[idx]


def build_multi_patch_roi(extents: Roi, diameter: float = 1.0) -> tuple[Roi, Roi]:
    """Pad the patch-center extents into (roi, core) boxes.

    The core box extends one diameter beyond the extents on every side;
    the region of interest extends 1.1 diameters. Collocation lives in
    the core, measurements may use the margin between the two.
    """
    return extents.pad(1.1 * diameter), extents.pad(1.0 * diameter)


@dataclass
class Measurements:
    """Measured field values at scattered points.

    ``mask`` marks which components are actually constrained; NaN values
    in CSV exchange mean unconstrained.
    """

    points: np.ndarray
    values: np.ndarray
    mask: np.ndarray | None = None

    def __post_init__(self):
        self.points = np.atleast_2d(np.asarray(self.points, dtype=np.float64))
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim == 1:
            self.values = self.values[:, None]
        if self.mask is None:
            self.mask = np.isfinite(self.values)
        self.mask = np.asarray(self.mask, dtype=bool)
        if len(self.points) != len(self.values) or self.mask.shape != self.values.shape:
            raise ConfigError("Measurements: points/values/mask lengths disagree")
        if np.any(~np.isfinite(self.values) & self.mask):
            raise ConfigError("Measurements: non-finite value marked as constrained")

    def __len__(self):
        return len(self.points)

    @staticmethod
    def empty(out_dim: int) -> "Measurements":
        return Measurements(np.zeros((0, 2)), np.zeros((0, out_dim)))


@dataclass
class PeriodicPairs:
    """Paired points whose field values are tied together (edge protocol)."""

    points_a: np.ndarray
    points_b: np.ndarray
    components: tuple = (0,)

    def __post_init__(self):
        self.points_a = np.atleast_2d(np.asarray(self.points_a, dtype=np.float64))
        self.points_b = np.atleast_2d(np.asarray(self.points_b, dtype=np.float64))
        if self.points_a.shape != self.points_b.shape:
            raise ConfigError("PeriodicPairs: mismatched pair arrays")

    def __len__(self):
        return len(self.points_a)


@dataclass
class SampleSet:
    """Everything a training run samples: collocation, data, boundary.

    Invariants enforced at construction: all points inside the region of
    interest; collocation inside the core; measurements outside the core
    when the outside-core protocol is active.
    """

    collocation: np.ndarray
    measurements: Measurements
    boundary: list
    roi: Roi
    core: Roi
    outside_core_data: bool = False
    periodic: PeriodicPairs | None = None
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        self.collocation = np.atleast_2d(np.asarray(self.collocation, dtype=np.float64))
        if self.collocation.shape[1] != 2:
            raise ConfigError("SampleSet: collocation must be (N, 2)")
        if not np.all(self.roi.contains(self.collocation)):
            raise ConfigError("SampleSet: collocation points outside region of interest")
        if not np.all(self.core.contains(self.collocation)):
            raise ConfigError("SampleSet: collocation points outside core")
        if len(self.measurements):
            pts = self.measurements.points
            if not np.all(self.roi.contains(pts)):
                raise ConfigError("SampleSet: measurement points outside region of interest")
            if self.outside_core_data and np.any(self.core.contains(pts, tol=-1e-12)):
                raise ConfigError(
                    "SampleSet: outside-core protocol active but measurements fall in core")
        for s in self.boundary:
            if not isinstance(s, BoundarySample):
                raise ConfigError("SampleSet: boundary entries must be BoundarySample")

    @property
    def n_collocation(self) -> int:
        return len(self.collocation)

    @property
    def n_boundary(self) -> int:
        return len(self.boundary)


def save_measurements_csv(path, meas: Measurements, names=None):
    """Write measurements as ``x,y,<components>`` with NaN for unconstrained."""
    out_dim = meas.values.shape[1]
    names = names or [f"v{i}" for i in range(out_dim)]
    if len(names) != out_dim:
        raise ConfigError("save_measurements_csv: one column name per component")
    vals = np.where(meas.mask, meas.values, np.nan)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("x,y," + ",".join(names) + "\n")
        for p, row in zip(meas.points, vals):
            cells = [f"{p[0]:.17g}", f"{p[1]:.17g}"]
            cells += ["nan" if not np.isfinite(v) else f"{v:.17g}" for v in row]
            fh.write(",".join(cells) + "\n")


def save_sampleset_csv(path, samples: "SampleSet", names=None):
    """Write every point of a sample set as ``x,y,role,<components>``.

    Collocation and boundary rows carry NaN values; measurement rows
    carry their (masked) values. Meant for inspection; measurement
    injection goes through :func:`load_measurements_csv`.
    """
    out_dim = samples.measurements.values.shape[1] if len(samples.measurements) \
        else 1
    names = names or [f"v{i}" for i in range(out_dim)]
    nan_row = ",".join(["nan"] * out_dim)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("x,y,role," + ",".join(names) + "\n")
        for p in samples.collocation:
            fh.write(f"{p[0]:.17g},{p[1]:.17g},collocation,{nan_row}\n")
        for b in samples.boundary:
            x, y = b.position
            fh.write(f"{x:.17g},{y:.17g},boundary,{nan_row}\n")
        if len(samples.measurements):
            vals = np.where(samples.measurements.mask,
                            samples.measurements.values, np.nan)
            for p, row in zip(samples.measurements.points, vals):
                cells = ["nan" if not np.isfinite(v) else f"{v:.17g}"
                         for v in row]
                fh.write(f"{p[0]:.17g},{p[1]:.17g},measurement,"
                         + ",".join(cells) + "\n")


def load_measurements_csv(path, out_dim: int | None = None) -> Measurements:
    """Read measurements written by :func:`save_measurements_csv`."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            header = fh.readline().strip()
            rows = [line.strip() for line in fh if line.strip()]
    except OSError as exc:
        raise ConfigError(f"load_measurements_csv: cannot read {path}: {exc}") from exc
    cols = header.split(",")
    if len(cols) < 3 or cols[0] != "x" or cols[1] != "y":
        raise ConfigError(f"load_measurements_csv: bad header {header!r}")
    n_comp = len(cols) - 2
    if out_dim is not None and n_comp != out_dim:
        raise ConfigError(
            f"load_measurements_csv: file has {n_comp} components, expected {out_dim}")
    pts, vals = [], []
    for line in rows:
        cells = line.split(",")
        if len(cells) != len(cols):
            raise ConfigError(f"load_measurements_csv: ragged row {line!r}")
        pts.append([float(cells[0]), float(cells[1])])
        vals.append([float(c) for c in cells[2:]])
    values = np.array(vals, dtype=np.float64).reshape(len(rows), n_comp)
    return Measurements(np.array(pts, dtype=np.float64).reshape(len(rows), 2), values)
