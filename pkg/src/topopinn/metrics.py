"""Evaluation metrics: error norms, boundary flux, pressure forces.

Flux and force integrals use equiangular samples on the patch circles;
for smooth integrands the closed-curve trapezoid rule converges
spectrally, so modest sample counts are already at quadrature accuracy.
"""

from __future__ import annotations

import numpy as np

from . import autodiff as ad
from .errors import ConfigError
from .geometry import RADIUS, signed_distance
from .sampling import uniform_grid

__all__ = [
    "relative_l2",
    "nmae",
    "boundary_flux",
    "lift_drag",
    "metric_grid",
]


def _paired(pred, ref):
    pred = np.asarray(pred, dtype=np.float64)
    ref = np.asarray(ref, dtype=np.float64)
    if pred.shape != ref.shape:
        raise ConfigError(f"metric: shape mismatch {pred.shape} vs {ref.shape}")
    if pred.size == 0:
        raise ConfigError("metric: empty arrays")
    return pred.ravel(), ref.ravel()


def relative_l2(pred, ref) -> float:
    """||pred - ref||_2 / ||ref||_2 over all entries."""
    p, r = _paired(pred, ref)
    denom = np.linalg.norm(r)
    if denom == 0.0:
        raise ConfigError("relative_l2: reference is identically zero")
    return float(np.linalg.norm(p - r) / denom)


def nmae(pred, ref) -> float:
    """Mean absolute error normalized by the reference value range.

    Range normalization (max - min of the reference) keeps the metric
    finite for references that pass through zero.
    """
    p, r = _paired(pred, ref)
    rng = float(r.max() - r.min())
    if rng == 0.0:
        raise ConfigError("nmae: reference range is zero")
    return float(np.mean(np.abs(p - r)) / rng)


def _ring(patch, n: int, radius: float = RADIUS):
    angles = 2.0 * np.pi * np.arange(n) / n
    nx = np.cos(angles)
    ny = np.sin(angles)
    px = patch.x + radius * nx
    py = patch.y + radius * ny
    return angles, px, py, nx, ny


def boundary_flux(field, patch, n_samples: int = 256):
    """Outward normal derivative of a scalar field on the patch circle.

    Returns ``(angles, fluxes)`` at equiangular points on the radius-0.5
    circle around the patch center.
    """
    if n_samples < 4:
        raise ConfigError("boundary_flux: need at least 4 samples")
    angles, px, py, nx, ny = _ring(patch, n_samples)
    X, Y = ad.spatial_jets(px, py, order=1)
    u = field(X, Y)[0]
    flux = ad.Var(np.zeros(n_samples))
    if u.fx is not None:
        flux = flux + u.fx * nx
    if u.fy is not None:
        flux = flux + u.fy * ny
    return angles, np.array(flux.value)


def lift_drag(pressure, patches, n_quad: int = 256):
    """Pressure force on the patch circles: F = -closed-integral of p n ds.

    ``pressure`` is a field source whose first output is the pressure.
    Returns ``(lift, drag)``: the y and x force components summed over
    patches, by closed-curve trapezoid quadrature with ``n_quad`` points
    per circle.
    """
    if n_quad < 16:
        raise ConfigError("lift_drag: need at least 16 quadrature points")
    fx = 0.0
    fy = 0.0
    ds = 2.0 * np.pi * RADIUS / n_quad
    for patch in patches:
        _, px, py, nx, ny = _ring(patch, n_quad)
        X, Y = ad.spatial_jets(px, py, order=0)
        p = np.array(pressure(X, Y)[0].f.value)
        fx -= float(np.sum(p * nx) * ds)
        fy -= float(np.sum(p * ny) * ds)
    return fy, fx


def metric_grid(region, patches, nx: int = 128, ny: int = 128):
    """Uniform evaluation grid with points inside any patch dropped.

    Returns ``(points, keep)`` where ``keep`` marks grid points outside
    every patch (boundary points stay); ``points`` is the full grid so
    callers can apply further masks of their own.
    """
    points = uniform_grid(region, nx, ny)
    keep = np.ones(len(points), dtype=bool)
    for patch in patches:
        keep &= signed_distance(patch, points) >= 0.0
    return points, keep
