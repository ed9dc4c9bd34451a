"""Loss terms tying the field, the equation, and the patch placement together.

The total objective is

    total = w_pde * pde + w_boundary * boundary + w_data * data
            + w_topology * (topo_fixed + topo_overlap)

where ``pde`` enforces the governing equation on collocation points
masked by the composite patch indicator, ``boundary`` imposes the
condition carried by rings that ride on the patches, ``data`` fits the
measurements, and the topology terms regularize patch-center distances.

Every term is built twice over: a value-level public function with the
documented normalization (used by tests and reporting), and a graph
generator (:func:`loss_terms`) the trainer consumes. Both share the same
expression builders, so the reported numbers are exactly what the
optimizer differentiates.

Normalizations: the equation term divides the per-point sum of squared
residual components by the number of collocation points; boundary and
data terms divide by points times constrained components; both topology
terms divide by the patch count, with pair lists written out explicitly
(ordered pairs appear twice when the symmetric convention is wanted).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import Var
from .errors import ConfigError, DomainError
from .pde import DEFAULT_DENSITY_SHARPNESS, PdeProblem, dt_density_residual
from .sampling import Measurements, PeriodicPairs, SampleSet

__all__ = [
    "LossWeights",
    "BoundaryCondition",
    "TopologySpec",
    "LossContext",
    "LossBreakdown",
    "delta_expr",
    "composite_delta_expr",
    "pde_loss",
    "dt_pde_loss",
    "dirichlet_loss",
    "neumann_loss",
    "data_loss",
    "topo_fixed_distance_loss",
    "topo_nonoverlap_loss",
    "total_loss",
    "loss_terms",
    "term_weight",
]


@dataclass(frozen=True)
class LossWeights:
    pde: float = 1.0
    boundary: float = 0.0
    data: float = 0.0
    topology: float = 0.0


@dataclass(frozen=True)
class BoundaryCondition:
    """Condition imposed on the patch rings.

    ``kind`` is ``dirichlet`` (targets per field component, ``None``
    leaves a component unconstrained), ``neumann`` (radial-derivative
    target for a scalar field), or ``none``.
    """

    kind: str = "none"
    values: tuple = ()
    flux: float = 0.0

    def __post_init__(self):
        if self.kind not in ("none", "dirichlet", "neumann"):
            raise ConfigError(f"BoundaryCondition: unknown kind {self.kind!r}")


@dataclass(frozen=True)
class TopologySpec:
    """Distance regularizers between patch centers.

    ``pairs`` entries are ``(i, j, r_star)`` where ``j`` is another patch
    index or a fixed ``(x, y)`` anchor point (for hub layouts). The
    nonoverlap flag adds the inverse-square repulsion over all ordered
    pairs.
    """

    pairs: tuple = ()
    nonoverlap: bool = False


@dataclass(frozen=True)
class LossContext:
    """Everything static the loss needs besides the state and samples."""

    problem: PdeProblem
    weights: LossWeights
    mode: str = "lt"
    beta: float = 100.0
    delta_power: float = 1.0
    boundary: BoundaryCondition = BoundaryCondition()
    topology: TopologySpec = TopologySpec()
    dt_bc_values: tuple = ()
    dt_sharpness: float = DEFAULT_DENSITY_SHARPNESS
    chunk_size: int = 4096

    def __post_init__(self):
        if self.mode not in ("lt", "dt"):
            raise ConfigError(f"LossContext: unknown mode {self.mode!r}")
        if self.mode == "dt" and len(self.dt_bc_values) != self.problem.out_dim:
            raise ConfigError("LossContext: dt mode needs one boundary value per field")
        if self.chunk_size < 1:
            raise ConfigError("LossContext: chunk_size must be positive")


@dataclass
class LossBreakdown:
    """Weighted components and their recombined total."""

    total: float = 0.0
    pde: float = 0.0
    boundary: float = 0.0
    data: float = 0.0
    topo_fixed: float = 0.0
    topo_overlap: float = 0.0

    FIELDS = ("total", "pde", "boundary", "data", "topo_fixed", "topo_overlap")

    def as_row(self) -> list[float]:
        return [getattr(self, f) for f in self.FIELDS]


def term_weight(name: str, weights: LossWeights) -> float:
    return {
        "pde": weights.pde,
        "boundary": weights.boundary,
        "data": weights.data,
        "topo_fixed": weights.topology,
        "topo_overlap": weights.topology,
    }[name]


# ---------------------------------------------------------------------------
# indicator expressions


def delta_expr(gx, gy, xs, ys, beta: float = 100.0):
    """Soft outside indicator of one patch as a tape expression."""
    r = ad.norm2(xs - gx, ys - gy)
    return ad.sigmoid((r - 0.5) * beta)


def composite_delta_expr(gvars, xs, ys, beta: float = 100.0, k: float = 1.0):
    """Product of per-patch indicators, each raised to ``k``; 1 with no patches."""
    out = None
    for gx, gy in gvars:
        d = delta_expr(gx, gy, xs, ys, beta)
        if k != 1.0:
            d = d ** k
        out = d if out is None else out * d
    return 1.0 if out is None else out


def _gvars_from_patches(patches) -> list:
    return [(Var(p.x), Var(p.y)) for p in patches]


def _scalar(expr) -> float:
    return float(expr.value) if isinstance(expr, Var) else float(expr)


# ---------------------------------------------------------------------------
# equation term


def _pde_chunk_sse(field, gvars, points, ctx: LossContext):
    xs = points[:, 0]
    ys = points[:, 1]
    X, Y = ad.spatial_jets(xs, ys, order=2)
    outs = field(X, Y)
    out_dim = ctx.problem.out_dim
    if ctx.mode == "dt":
        if len(outs) < out_dim + 1:
            raise ConfigError("dt mode requires a density output channel")
        residuals = dt_density_residual(outs[:out_dim], outs[out_dim], ctx.problem,
                                        ctx.dt_bc_values, ctx.dt_sharpness)
        mask = None
    else:
        residuals = ctx.problem.residual(outs[:out_dim])
        mask = composite_delta_expr(gvars, xs, ys, ctx.beta, ctx.delta_power) \
            if gvars else None
    sse = 0.0
    for r in residuals:
        if mask is not None and not (isinstance(mask, float) and mask == 1.0):
            r = mask * r
        if isinstance(r, Var):
            sse = sse + ad.sum_all(r * r)
        else:
            sse = sse + float(r) * float(r) * len(points)
    return sse


def pde_loss(field, patches, points: np.ndarray, problem: PdeProblem,
             beta: float = 100.0, delta_power: float = 1.0) -> float:
    """Mean over collocation points of the masked squared residual.

    Residual components are squared and summed per point; the composite
    indicator multiplies each component before squaring.
    """
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    ctx = LossContext(problem=problem, weights=LossWeights(), beta=beta,
                      delta_power=delta_power)
    sse = _pde_chunk_sse(field, _gvars_from_patches(patches), points, ctx)
    return _scalar(sse) / len(points)


def dt_pde_loss(field, points: np.ndarray, problem: PdeProblem, bc_values,
                sharpness: float = DEFAULT_DENSITY_SHARPNESS) -> float:
    """Mean squared density-blended residual (no patches, no mask)."""
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    ctx = LossContext(problem=problem, weights=LossWeights(), mode="dt",
                      dt_bc_values=tuple(bc_values), dt_sharpness=sharpness)
    sse = _pde_chunk_sse(field, [], points, ctx)
    return _scalar(sse) / len(points)


# ---------------------------------------------------------------------------
# boundary terms


def _boundary_geometry(samples, gvars):
    """Positions (as tape expressions when centers are live) plus normals.

    Samples are grouped by owner, each group keeping its original order;
    a ring's live position is the owner's current center plus the offset
    frozen at creation, so rings translate rigidly with their patch.
    """
    if not samples:
        raise ConfigError("boundary term: no boundary samples")
    owners = sorted({s.owner for s in samples})
    px_parts, py_parts, normals = [], [], []
    for owner in owners:
        group = [s for s in samples if s.owner == owner]
        offs = np.array([s.offset for s in group])
        normals.append(np.array([s.normal for s in group]))
        if gvars is None:
            pos = np.array([s.position for s in group])
            px_parts.append(pos[:, 0])
            py_parts.append(pos[:, 1])
        else:
            if owner < 0 or owner >= len(gvars):
                raise ConfigError(f"boundary sample owner {owner} out of range")
            gx, gy = gvars[owner]
            px_parts.append(gx + offs[:, 0])
            py_parts.append(gy + offs[:, 1])
    normals = np.concatenate(normals, axis=0)
    if gvars is None:
        return np.concatenate(px_parts), np.concatenate(py_parts), normals
    return ad.concat1d(px_parts), ad.concat1d(py_parts), normals


def _dirichlet_sse(field, samples, values, gvars):
    comps = [i for i, v in enumerate(values) if v is not None]
    if not comps:
        raise ConfigError("dirichlet boundary: all components unconstrained")
    px, py, _ = _boundary_geometry(samples, gvars)
    X, Y = ad.spatial_jets(px, py, order=0)
    outs = field(X, Y)
    sse = 0.0
    for i in comps:
        err = outs[i].f - float(values[i])
        sse = sse + ad.sum_all(err * err)
    return sse, len(samples) * len(comps)


def _neumann_sse(field, samples, flux, gvars, out_dim):
    if out_dim != 1:
        raise ConfigError("neumann boundary: only scalar fields supported")
    px, py, normals = _boundary_geometry(samples, gvars)
    X, Y = ad.spatial_jets(px, py, order=1)
    u = field(X, Y)[0]
    # structural-zero derivative components (constant probe fields)
    # contribute nothing to the directional derivative
    directional = Var(np.zeros(len(samples)))
    if u.fx is not None:
        directional = directional + u.fx * normals[:, 0]
    if u.fy is not None:
        directional = directional + u.fy * normals[:, 1]
    err = directional - float(flux)
    return ad.sum_all(err * err), len(samples)


def dirichlet_loss(field, samples, values) -> float:
    """Mean squared deviation from the targets over samples and components.

    Uses the stored sample positions; pass patch centers through
    :func:`total_loss` to evaluate with translated rings.
    """
    sse, count = _dirichlet_sse(field, samples, tuple(values), gvars=None)
    return _scalar(sse) / count


def neumann_loss(field, samples, flux: float) -> float:
    """Mean squared deviation of the radial derivative from ``flux``."""
    # out_dim 1 enforced inside; the field's first output is the scalar
    sse, count = _neumann_sse(field, samples, flux, gvars=None, out_dim=1)
    return _scalar(sse) / count


# ---------------------------------------------------------------------------
# data terms


def _data_sse(field, meas: Measurements):
    X, Y = ad.spatial_jets(meas.points[:, 0], meas.points[:, 1], order=0)
    outs = field(X, Y)
    sse = 0.0
    count = int(meas.mask.sum())
    if count == 0:
        raise ConfigError("data term: no constrained measurement entries")
    for c in range(meas.values.shape[1]):
        m = meas.mask[:, c]
        if not m.any():
            continue
        target = np.where(m, meas.values[:, c], 0.0)
        err = (outs[c].f - target) * m.astype(np.float64)
        sse = sse + ad.sum_all(err * err)
    return sse, count


def _periodic_sse(field, pairs: PeriodicPairs):
    Xa, Ya = ad.spatial_jets(pairs.points_a[:, 0], pairs.points_a[:, 1], order=0)
    Xb, Yb = ad.spatial_jets(pairs.points_b[:, 0], pairs.points_b[:, 1], order=0)
    outs_a = field(Xa, Ya)
    outs_b = field(Xb, Yb)
    sse = 0.0
    for c in pairs.components:
        err = outs_a[c].f - outs_b[c].f
        sse = sse + ad.sum_all(err * err)
    return sse, len(pairs) * len(pairs.components)


def data_loss(field, meas: Measurements) -> float:
    """Mean squared error over constrained measurement entries."""
    sse, count = _data_sse(field, meas)
    return _scalar(sse) / count


# ---------------------------------------------------------------------------
# topology terms


def _pair_distance_expr(gvars, i, j):
    gx_i, gy_i = gvars[i]
    if isinstance(j, (int, np.integer)):
        gx_j, gy_j = gvars[j]
        return ad.norm2(gx_i - gx_j, gy_i - gy_j)
    ax, ay = float(j[0]), float(j[1])
    return ad.norm2(gx_i - ax, gy_i - ay)


def _topo_fixed_sse(gvars, pairs):
    sse = 0.0
    for i, j, r_star in pairs:
        r = _pair_distance_expr(gvars, i, j)
        err = r - float(r_star)
        sse = sse + err * err
    return sse


def _topo_nonoverlap_sse(gvars):
    sse = 0.0
    n = len(gvars)
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            r = _pair_distance_expr(gvars, i, j)
            sse = sse + 1.0 / (r * r)
    return sse


def _check_pairs(pairs, n_patches):
    for entry in pairs:
        if len(entry) != 3:
            raise ConfigError(f"topology pair {entry!r} must be (i, j, r_star)")
        i, j, r_star = entry
        if not (0 <= int(i) < n_patches):
            raise ConfigError(f"topology pair index {i} out of range")
        if isinstance(j, (int, np.integer)):
            if not (0 <= int(j) < n_patches):
                raise ConfigError(f"topology pair index {j} out of range")
            if int(j) == int(i):
                raise ConfigError("topology pair joins a patch to itself")
        if float(r_star) <= 0.0:
            raise ConfigError("topology pair target distance must be positive")


def topo_fixed_distance_loss(patches, pairs) -> float:
    """Sum of squared distance deviations over the pair list, over patch count.

    The normalizer is the number of patches. Symmetric double counting is
    the caller's choice: list both ordered pairs to get it.
    """
    if not patches:
        raise ConfigError("topo_fixed_distance_loss: no patches")
    _check_pairs(pairs, len(patches))
    gvars = _gvars_from_patches(patches)
    return _scalar(_topo_fixed_sse(gvars, pairs)) / len(patches)


def topo_nonoverlap_loss(patches) -> float:
    """Inverse-square repulsion over all ordered pairs, over patch count."""
    if not patches:
        raise ConfigError("topo_nonoverlap_loss: no patches")
    for i, a in enumerate(patches):
        for b in patches[i + 1:]:
            if a.x == b.x and a.y == b.y:
                raise DomainError("topo_nonoverlap_loss", (a.x, a.y))
    gvars = _gvars_from_patches(patches)
    return _scalar(_topo_nonoverlap_sse(gvars)) / len(patches)


# ---------------------------------------------------------------------------
# assembly


def loss_terms(field, gvars, samples: SampleSet, ctx: LossContext):
    """Yield ``(name, scale, expression)`` graph pieces of the objective.

    ``scale * value(expression)`` summed per name gives the unweighted
    breakdown entries; terms with zero weight are skipped. The equation
    term is emitted in collocation chunks so the trainer can run one
    reverse pass per chunk and keep memory flat.
    """
    w = ctx.weights
    n = samples.n_collocation
    if w.pde != 0.0 and n:
        for lo in range(0, n, ctx.chunk_size):
            chunk = samples.collocation[lo:lo + ctx.chunk_size]
            yield "pde", 1.0 / n, _pde_chunk_sse(field, gvars, chunk, ctx)
    if ctx.mode == "lt" and w.boundary != 0.0 and ctx.boundary.kind != "none" \
            and samples.boundary:
        if ctx.boundary.kind == "dirichlet":
            sse, count = _dirichlet_sse(field, samples.boundary,
                                        ctx.boundary.values, gvars)
        else:
            sse, count = _neumann_sse(field, samples.boundary, ctx.boundary.flux,
                                      gvars, ctx.problem.out_dim)
        yield "boundary", 1.0 / count, sse
    if w.data != 0.0 and len(samples.measurements):
        sse, count = _data_sse(field, samples.measurements)
        yield "data", 1.0 / count, sse
    if w.data != 0.0 and samples.periodic is not None and len(samples.periodic):
        sse, count = _periodic_sse(field, samples.periodic)
        yield "data", 1.0 / count, sse
    if ctx.mode == "lt" and w.topology != 0.0 and gvars:
        if ctx.topology.pairs:
            _check_pairs(ctx.topology.pairs, len(gvars))
            yield "topo_fixed", 1.0 / len(gvars), _topo_fixed_sse(gvars, ctx.topology.pairs)
        if ctx.topology.nonoverlap and len(gvars) > 1:
            yield "topo_overlap", 1.0 / len(gvars), _topo_nonoverlap_sse(gvars)


def total_loss(field, patches, samples: SampleSet, ctx: LossContext) -> LossBreakdown:
    """Evaluate every term at the given state and recombine the total.

    Boundary rings are placed at the given patch centers plus their
    stored offsets, matching what the trainer differentiates.
    """
    gvars = _gvars_from_patches(patches)
    out = LossBreakdown()
    for name, scale, expr in loss_terms(field, gvars, samples, ctx):
        setattr(out, name, getattr(out, name) + scale * _scalar(expr))
    w = ctx.weights
    out.total = (w.pde * out.pde + w.boundary * out.boundary + w.data * out.data
                 + w.topology * (out.topo_fixed + out.topo_overlap))
    return out
