"""Circle-patch geometry: signed distances, boundary rings, topology export.

Topological features are circles of fixed unit diameter whose centers are
the trainable placement parameters. A sharp sigmoid of the signed
distance acts as a soft inside/outside indicator; the product over
patches masks the governing-equation residual so it is only enforced
outside every feature.

All point arguments are ``(N, 2)`` float arrays. Norms are floored at
1e-12 so a point exactly on a center never produces a non-differentiable
zero (see :func:`topopinn.autodiff.norm2` for the matching tape-side
rule).
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DomainError

__all__ = [
    "DIAMETER",
    "CirclePatch",
    "Roi",
    "BoundarySample",
    "signed_distance",
    "delta",
    "composite_delta",
    "boundary_normal",
    "sample_rings",
    "init_gamma",
    "patch_pair_distance",
    "topology_dict",
    "render_svg",
]

DIAMETER = 1.0
RADIUS = DIAMETER / 2.0
_NORM_FLOOR = 1e-12
DEFAULT_RING_RADII = (0.5, 0.4, 0.3, 0.2)


@dataclass
class CirclePatch:
    """A unit-diameter circular feature at a movable center."""

    x: float
    y: float

    @property
    def center(self) -> np.ndarray:
        return np.array([self.x, self.y])

    @property
    def radius(self) -> float:
        return RADIUS


@dataclass(frozen=True)
class Roi:
    """Axis-aligned rectangular region."""

    x_min: float
    x_max: float
    y_min: float
    y_max: float

    def __post_init__(self):
        if not (self.x_max > self.x_min and self.y_max > self.y_min):
            raise ConfigError(f"Roi: degenerate bounds {self}")

    @property
    def width(self) -> float:
        return self.x_max - self.x_min

    @property
    def height(self) -> float:
        return self.y_max - self.y_min

    def contains(self, points: np.ndarray, tol: float = 1e-12) -> np.ndarray:
        p = np.atleast_2d(points)
        return ((p[:, 0] >= self.x_min - tol) & (p[:, 0] <= self.x_max + tol)
                & (p[:, 1] >= self.y_min - tol) & (p[:, 1] <= self.y_max + tol))

    def pad(self, margin: float) -> "Roi":
        return Roi(self.x_min - margin, self.x_max + margin,
                   self.y_min - margin, self.y_max + margin)

    def as_tuple(self) -> tuple:
        return (self.x_min, self.x_max, self.y_min, self.y_max)


@dataclass
class BoundarySample:
    """A boundary-condition point riding on a patch.

    ``offset`` is the displacement from the owner's center at creation;
    during training the live position is the current center plus this
    offset, so rings translate rigidly with the patch. ``normal`` is the
    outward radial direction, which is invariant under translation.
    """

    position: np.ndarray
    owner: int
    ring_radius: float
    offset: np.ndarray
    normal: np.ndarray


def _floored_norm(dx: np.ndarray, dy: np.ndarray) -> np.ndarray:
    return np.sqrt(np.maximum(dx * dx + dy * dy, _NORM_FLOOR * _NORM_FLOOR))


def signed_distance(patch: CirclePatch, points: np.ndarray) -> np.ndarray:
    """Distance to the circle boundary: negative inside, zero on it."""
    p = np.atleast_2d(np.asarray(points, dtype=np.float64))
    return _floored_norm(p[:, 0] - patch.x, p[:, 1] - patch.y) - RADIUS


def _sigmoid(x: np.ndarray) -> np.ndarray:
    z = np.exp(-np.abs(x))
    return np.where(x >= 0.0, 1.0 / (1.0 + z), z / (1.0 + z))


def delta(patch: CirclePatch, points: np.ndarray, beta: float = 100.0) -> np.ndarray:
    """Soft outside indicator: sigmoid(beta * signed_distance).

    Approaches 0 inside the patch, 1 outside, and is exactly 0.5 on the
    boundary.
    """
    return _sigmoid(beta * signed_distance(patch, points))


def composite_delta(patches, points: np.ndarray, beta: float = 100.0,
                    k: float = 1.0) -> np.ndarray:
    """Product of per-patch indicators, each raised to ``k``.

    Masks the governing-equation residual so it vanishes inside any
    patch. With no patches the mask is identically one.
    """
    p = np.atleast_2d(np.asarray(points, dtype=np.float64))
    out = np.ones(p.shape[0])
    for patch in patches:
        d = delta(patch, p, beta)
        out = out * (d if k == 1.0 else d ** k)
    return out


def boundary_normal(patch: CirclePatch, points: np.ndarray) -> np.ndarray:
    """Outward radial unit vector from the patch center to each point."""
    p = np.atleast_2d(np.asarray(points, dtype=np.float64))
    dx = p[:, 0] - patch.x
    dy = p[:, 1] - patch.y
    r = np.sqrt(dx * dx + dy * dy)
    if np.any(r <= _NORM_FLOOR):
        raise DomainError("boundary_normal", patch.center)
    return np.stack([dx / r, dy / r], axis=1)


def sample_rings(patch: CirclePatch, radii=DEFAULT_RING_RADII,
                 n_per_ring: int = 128, owner: int = 0) -> list[BoundarySample]:
    """Equiangular points on concentric rings inside the patch.

    Rings are laid out radius by radius in the given order; angles start
    at 0 and advance counterclockwise. Normals are the radial directions
    and do not change when the patch moves.
    """
    if n_per_ring < 1:
        raise ConfigError("sample_rings: n_per_ring must be positive")
    samples = []
    angles = 2.0 * np.pi * np.arange(n_per_ring) / n_per_ring
    for r in radii:
        if not (0.0 < r <= RADIUS):
            raise ConfigError(f"sample_rings: ring radius {r} outside (0, {RADIUS}]")
        for th in angles:
            n = np.array([np.cos(th), np.sin(th)])
            offset = r * n
            samples.append(BoundarySample(
                position=patch.center + offset,
                owner=owner,
                ring_radius=float(r),
                offset=offset,
                normal=n,
            ))
    return samples


def init_gamma(n: int, roi: Roi, seed: int) -> np.ndarray:
    """Random initial centers inside the region.

    Standard-normal draws are squashed through a sigmoid and mapped
    affinely into the box, so a raw draw of 0 lands on the box center.
    This squashing is applied once at initialization; training moves the
    centers without re-squashing.
    """
    if n < 1:
        raise ConfigError("init_gamma: need at least one patch")
    rng = np.random.Generator(np.random.PCG64(seed))
    raw = rng.standard_normal((n, 2))
    s = _sigmoid(raw)
    out = np.empty_like(s)
    out[:, 0] = roi.x_min + s[:, 0] * roi.width
    out[:, 1] = roi.y_min + s[:, 1] * roi.height
    return out


def patch_pair_distance(a: CirclePatch, b: CirclePatch) -> float:
    """Center-to-center distance with the shared norm floor."""
    return float(_floored_norm(np.asarray(a.x - b.x), np.asarray(a.y - b.y)))


def topology_dict(patches) -> dict:
    """Circle-list topology description used by export and the CLI."""
    return {
        "mode": "lt",
        "circles": [
            {"center": [float(p.x), float(p.y)], "diameter": DIAMETER}
            for p in patches
        ],
    }


def render_svg(patches, roi: Roi, width_px: int = 480) -> str:
    """Plain SVG rendering of the patches inside the region."""
    scale = width_px / roi.width
    height_px = roi.height * scale

    def sx(x):
        return (x - roi.x_min) * scale

    def sy(y):
        # SVG y axis points down
        return (roi.y_max - y) * scale

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width_px:.0f}" '
        f'height="{height_px:.0f}" viewBox="0 0 {width_px:.0f} {height_px:.0f}">',
        f'<rect x="0" y="0" width="{width_px:.0f}" height="{height_px:.0f}" '
        'fill="white" stroke="black"/>',
    ]
    for p in patches:
        parts.append(
            f'<circle cx="{sx(p.x):.3f}" cy="{sy(p.y):.3f}" '
            f'r="{RADIUS * scale:.3f}" fill="none" stroke="crimson" stroke-width="2"/>')
    parts.append("</svg>")
    return "\n".join(parts)


def topology_json(patches) -> str:
    return json.dumps(topology_dict(patches), indent=2)
