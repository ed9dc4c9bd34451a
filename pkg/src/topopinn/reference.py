"""Independent reference solutions for testing and data generation.

Nothing here goes through the network or the tape-based training path;
these are closed forms and a classical finite-difference solver, so they
can arbitrate whether the trained models and the residual operators are
right.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .autodiff import Jet
from .errors import ConfigError, DomainError, NumericError
from .geometry import Roi
from .pde import PdeProblem

__all__ = [
    "annulus_temperature",
    "annulus_temperature_gradient",
    "fd_poisson_dirichlet",
    "ManufacturedCase",
    "manufactured_suite",
    "sample_field",
]

ANNULUS_INNER = 0.5


def _annulus_radii(points, center) -> np.ndarray:
    p = np.atleast_2d(np.asarray(points, dtype=np.float64))
    return np.hypot(p[:, 0] - center[0], p[:, 1] - center[1])


def annulus_temperature(points, flux: float = -0.5, outer_radius: float = 1.1,
                        center=(0.0, 0.0), tol: float = 1e-9) -> np.ndarray:
    """Steady conduction between a flux-loaded inner circle and a cold outer one.

    The exact field is ``T(r) = 0.5 * flux * ln(r / outer_radius)``: it is
    harmonic in the annulus, vanishes on the outer circle, and its radial
    derivative on the inner circle (radius 0.5) is exactly ``flux``.
    """
    if outer_radius <= ANNULUS_INNER:
        raise ConfigError("annulus_temperature: outer radius must exceed 0.5")
    r = _annulus_radii(points, center)
    if np.any(r < ANNULUS_INNER - tol) or np.any(r > outer_radius + tol):
        bad = r[(r < ANNULUS_INNER - tol) | (r > outer_radius + tol)][0]
        raise DomainError("annulus_temperature", float(bad))
    return 0.5 * flux * np.log(np.maximum(r, ANNULUS_INNER - tol) / outer_radius)


def annulus_temperature_gradient(points, flux: float = -0.5,
                                 outer_radius: float = 1.1,
                                 center=(0.0, 0.0)) -> np.ndarray:
    """Exact (dT/dx, dT/dy) of the annulus solution."""
    p = np.atleast_2d(np.asarray(points, dtype=np.float64))
    dx = p[:, 0] - center[0]
    dy = p[:, 1] - center[1]
    r2 = dx * dx + dy * dy
    if np.any(r2 == 0.0):
        raise DomainError("annulus_temperature_gradient", 0.0)
    c = 0.5 * flux / r2
    return np.stack([c * dx, c * dy], axis=1)


def fd_poisson_dirichlet(region: Roi, nx: int, ny: int, source, boundary,
                         residual_tol: float = 1e-10):
    """Second-order 5-point solve of lap(u) = f with Dirichlet edges.

    ``source`` and ``boundary`` are callables of (x, y) arrays. Returns
    ``(xs, ys, U)`` with ``U`` shaped (ny, nx), rows indexed by y. The
    assembled system is solved directly and the residual is verified
    against ``residual_tol``.
    """
    if nx < 3 or ny < 3:
        raise ConfigError("fd_poisson_dirichlet: need at least a 3x3 grid")
    xs = np.linspace(region.x_min, region.x_max, nx)
    ys = np.linspace(region.y_min, region.y_max, ny)
    hx = xs[1] - xs[0]
    hy = ys[1] - ys[0]
    X, Y = np.meshgrid(xs, ys)
    U = np.zeros((ny, nx))
    edge = np.zeros((ny, nx), dtype=bool)
    edge[0, :] = edge[-1, :] = True
    edge[:, 0] = edge[:, -1] = True
    U[edge] = np.asarray(boundary(X[edge], Y[edge]), dtype=np.float64)

    interior = ~edge
    idx = -np.ones((ny, nx), dtype=np.int64)
    idx[interior] = np.arange(interior.sum())
    n = interior.sum()
    f = np.asarray(source(X, Y), dtype=np.float64)

    rows, cols, vals = [], [], []
    b = np.zeros(n)
    cx, cy = 1.0 / hx ** 2, 1.0 / hy ** 2
    jj, ii = np.nonzero(interior)  # jj: y index, ii: x index
    for j, i in zip(jj, ii):
        k = idx[j, i]
        rows.append(k)
        cols.append(k)
        vals.append(-2.0 * (cx + cy))
        b[k] = f[j, i]
        for dj, di, c in ((0, 1, cx), (0, -1, cx), (1, 0, cy), (-1, 0, cy)):
            nj, ni = j + dj, i + di
            if edge[nj, ni]:
                b[k] -= c * U[nj, ni]
            else:
                rows.append(k)
                cols.append(idx[nj, ni])
                vals.append(c)
    a = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
    u = spla.spsolve(a, b)
    resid = np.max(np.abs(a @ u - b)) if n else 0.0
    scale = max(1.0, np.max(np.abs(b)) if n else 0.0)
    if resid > residual_tol * scale:
        raise NumericError(f"fd_poisson_dirichlet: linear solve residual {resid:.3e}")
    U[interior] = u
    return xs, ys, U


@dataclass(frozen=True)
class ManufacturedCase:
    """A closed-form field with identically zero residual for its problem."""

    name: str
    problem: PdeProblem
    fields: object  # callable (X: Jet, Y: Jet) -> list[Jet]


def manufactured_suite(problem: PdeProblem) -> list[ManufacturedCase]:
    """Null fields of the governing equation, built from jet arithmetic.

    Every returned field satisfies the equation exactly, so the residual
    operators must evaluate to zero on them at any point.
    """
    kind = problem.kind
    cases = []
    if kind == "laplace":
        cases += [
            ManufacturedCase("linear", problem, lambda X, Y: [X]),
            ManufacturedCase("saddle", problem, lambda X, Y: [X * X - Y * Y]),
            ManufacturedCase("cubic-harmonic", problem,
                             lambda X, Y: [X * X * X - 3.0 * X * Y * Y]),
            ManufacturedCase("quartic-harmonic", problem,
                             lambda X, Y: [(X * X) * (X * X)
                                           - 6.0 * (X * X) * (Y * Y)
                                           + (Y * Y) * (Y * Y)]),
        ]
    elif kind == "elastic":
        nu = problem.poisson_ratio

        def rigid(X, Y):
            return [Jet(0.37, order=X.order), Jet(-0.81, order=X.order)]

        def uniaxial(X, Y, a=0.23):
            return [a * X, (-nu * a) * Y]

        cases += [
            ManufacturedCase("rigid-translation", problem, rigid),
            ManufacturedCase("uniaxial-stretch", problem, uniaxial),
        ]
    elif kind == "steady_ns":
        re = problem.reynolds
        cases += [
            ManufacturedCase("uniform-stream", problem,
                             lambda X, Y: [Jet(1.0, order=X.order),
                                           Jet(0.0, order=X.order),
                                           Jet(0.2, order=X.order)]),
            ManufacturedCase("plane-poiseuille", problem,
                             lambda X, Y: [1.0 - Y * Y,
                                           Jet(0.0, order=X.order),
                                           X * (-2.0 / re)]),
            ManufacturedCase("rigid-rotation", problem,
                             lambda X, Y: [-Y, X, (X * X + Y * Y) * 0.5]),
        ]
    elif kind == "pressure_poisson":
        cases += [
            ManufacturedCase("resting", problem,
                             lambda X, Y: [Jet(0.0, order=X.order),
                                           Jet(0.0, order=X.order),
                                           Jet(0.3, order=X.order)]),
            ManufacturedCase("hyperbolic-stream", problem,
                             lambda X, Y: [X, -Y, -(X * X + Y * Y) * 0.5]),
        ]
    else:
        raise ConfigError(f"manufactured_suite: unknown kind {kind!r}")
    return cases


def sample_field(fields, points: np.ndarray) -> np.ndarray:
    """Evaluate a field source at fixed points, values only.

    Returns an (N, out_dim) array. Used to generate measurement data
    from closed-form references.
    """
    from .autodiff import spatial_jets

    p = np.atleast_2d(np.asarray(points, dtype=np.float64))
    X, Y = spatial_jets(p[:, 0], p[:, 1], order=0)
    jets = fields(X, Y)
    cols = []
    for jet in jets:
        f = jet.f
        value = f.value if hasattr(f, "value") else np.asarray(f, dtype=np.float64)
        cols.append(np.broadcast_to(value, (p.shape[0],)))
    return np.stack(cols, axis=1)
