"""Topology extraction and export.

Explicit-patch runs export their circle list directly.  Density runs
need post-processing: the sharpened density is sampled on a grid,
thresholded, reduced to its largest connected component, and traced
with marching squares into polyline contours.
"""

from __future__ import annotations

import json

import numpy as np
from scipy import ndimage
from skimage import measure

from . import autodiff as ad
from .errors import ConfigError
from .geometry import Roi, render_svg, topology_dict
from .pde import DEFAULT_DENSITY_SHARPNESS
from .sampling import uniform_grid

__all__ = [
    "density_on_grid",
    "dt_topology",
    "lt_topology",
    "render_svg_contours",
    "write_topology",
]


def lt_topology(patches) -> dict:
    return topology_dict(patches)


def density_on_grid(source, region: Roi, nx: int = 128, ny: int = 128,
                    channel: int = -1,
                    sharpness: float = DEFAULT_DENSITY_SHARPNESS):
    """Sample the sharpened density sigmoid(c*rho) on a uniform grid.

    ``source`` is a field source; ``channel`` selects the raw density
    output (the last channel by default).  Returns ``(xs, ys, rho_hat)``
    with ``rho_hat`` shaped (ny, nx), rows indexed by y.
    """
    if nx < 2 or ny < 2:
        raise ConfigError("density_on_grid: need nx, ny >= 2")
    points = uniform_grid(region, nx, ny)
    X, Y = ad.spatial_jets(points[:, 0], points[:, 1], order=0)
    rho = source(X, Y)[channel]
    rho_hat = ad.sigmoid(rho.f * sharpness).value
    xs = np.linspace(region.x_min, region.x_max, nx)
    ys = np.linspace(region.y_min, region.y_max, ny)
    return xs, ys, np.asarray(rho_hat, dtype=np.float64).reshape(ny, nx)


def dt_topology(rho_hat, xs, ys, threshold: float = 0.5) -> dict:
    """Threshold a density grid and trace its largest component.

    Cells with ``rho_hat >= threshold`` count as patch material.  If no
    cell exceeds the threshold the result carries ``status: "empty"``
    and no contours.  Otherwise only the largest connected component is
    traced (marching squares at the threshold level) and each contour is
    emitted as an (x, y) polyline in physical coordinates.
    """
    rho_hat = np.asarray(rho_hat, dtype=np.float64)
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    if rho_hat.shape != (len(ys), len(xs)):
        raise ConfigError(
            f"dt_topology: grid shape {rho_hat.shape} does not match "
            f"axes ({len(ys)}, {len(xs)})")
    if not 0.0 < threshold < 1.0:
        raise ConfigError("dt_topology: threshold must lie in (0, 1)")

    out = {"mode": "dt", "threshold": float(threshold)}
    mask = rho_hat >= threshold
    if not mask.any():
        out["status"] = "empty"
        out["contours"] = []
        return out

    labels, n_labels = ndimage.label(mask)
    counts = np.bincount(labels.ravel())
    counts[0] = 0
    keep = labels == int(np.argmax(counts))

    # Contour the density restricted to the kept component so stray
    # smaller blobs cannot contribute polylines.
    comp = np.where(keep, rho_hat, 0.0)
    raw = measure.find_contours(comp, threshold)

    dx = (xs[-1] - xs[0]) / (len(xs) - 1)
    dy = (ys[-1] - ys[0]) / (len(ys) - 1)
    contours = []
    for arr in raw:
        # find_contours returns fractional (row, col) indices
        px = xs[0] + arr[:, 1] * dx
        py = ys[0] + arr[:, 0] * dy
        contours.append(np.column_stack([px, py]).tolist())

    out["status"] = "ok"
    out["n_components"] = int(n_labels)
    out["contours"] = contours
    return out


def render_svg_contours(topology: dict, region: Roi, width_px: int = 480) -> str:
    """SVG rendering of extracted density contours."""
    scale = width_px / region.width
    height_px = region.height * scale

    def sx(x):
        return (x - region.x_min) * scale

    def sy(y):
        return (region.y_max - y) * scale

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width_px:.0f}" '
        f'height="{height_px:.0f}" viewBox="0 0 {width_px:.0f} {height_px:.0f}">',
        f'<rect x="0" y="0" width="{width_px:.0f}" height="{height_px:.0f}" '
        'fill="white" stroke="black"/>',
    ]
    for contour in topology.get("contours", []):
        pts = " ".join(f"{sx(x):.3f},{sy(y):.3f}" for x, y in contour)
        parts.append(
            f'<polyline points="{pts}" fill="none" stroke="steelblue" '
            'stroke-width="2"/>')
    parts.append("</svg>")
    return "\n".join(parts)


def write_topology(path, topology: dict, svg_path=None, patches=None,
                   region: Roi | None = None) -> None:
    """Write topology JSON, plus an optional SVG rendering."""
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(topology, fh, indent=2)
        fh.write("\n")
    if svg_path is None:
        return
    if region is None:
        raise ConfigError("write_topology: SVG output needs a region")
    if topology.get("mode") == "lt":
        svg = render_svg(patches or [], region)
    else:
        svg = render_svg_contours(topology, region)
    with open(svg_path, "w", encoding="utf-8") as fh:
        fh.write(svg)
