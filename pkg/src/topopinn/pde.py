"""Strong-form PDE residual operators evaluated on spatial jets.

Each operator consumes the output jets of any twice-differentiable field
source (a network, a closed-form probe, an interpolant) and returns one
tape value per residual component. Structural-zero jet components are
treated as exact zeros, so closed-form test fields cost almost nothing.

Supported equations (2-D, steady):

- ``laplace``            scalar diffusion, residual T_xx + T_yy
- ``elastic``            plane-stress equilibrium, divergence of the
                         stress built from displacement gradients
- ``steady_ns``          incompressible Navier-Stokes (continuity plus
                         the two momentum components)
- ``pressure_poisson``   pressure Poisson form: lap(p) plus the double
                         divergence of the velocity self-advection
"""

from __future__ import annotations

from dataclasses import dataclass

from .autodiff import Jet, sigmoid, _as_var
from .errors import ConfigError

__all__ = [
    "PdeProblem",
    "residual_laplace",
    "residual_elastic",
    "residual_steady_ns",
    "residual_pressure_poisson",
    "dt_density_residual",
    "DEFAULT_DENSITY_SHARPNESS",
]

DEFAULT_DENSITY_SHARPNESS = -10.0

_FIELD_NAMES = {
    "laplace": ("T",),
    "elastic": ("u", "v"),
    "steady_ns": ("u", "v", "p"),
    "pressure_poisson": ("u", "v", "p"),
}


def _z(component):
    """Structural zero -> numeric zero."""
    return 0.0 if component is None else component


@dataclass(frozen=True)
class PdeProblem:
    """Equation selector plus physical constants."""

    kind: str
    youngs_modulus: float = 1.0
    poisson_ratio: float = 0.33
    reynolds: float = 1.0

    def __post_init__(self):
        if self.kind not in _FIELD_NAMES:
            raise ConfigError(f"PdeProblem: unknown kind {self.kind!r}")
        if self.kind == "elastic":
            if self.youngs_modulus <= 0.0:
                raise ConfigError("PdeProblem: Young's modulus must be positive")
            if abs(self.poisson_ratio) >= 1.0:
                raise ConfigError("PdeProblem: Poisson ratio must lie in (-1, 1)")
        if self.kind == "steady_ns" and self.reynolds <= 0.0:
            raise ConfigError("PdeProblem: Reynolds number must be positive")

    @property
    def field_names(self) -> tuple:
        return _FIELD_NAMES[self.kind]

    @property
    def out_dim(self) -> int:
        return len(self.field_names)

    def residual(self, fields: list[Jet]) -> list:
        if len(fields) != self.out_dim:
            raise ConfigError(
                f"PdeProblem: {self.kind} needs {self.out_dim} fields, got {len(fields)}")
        if self.kind == "laplace":
            return residual_laplace(fields)
        if self.kind == "elastic":
            return residual_elastic(fields, self.youngs_modulus, self.poisson_ratio)
        if self.kind == "steady_ns":
            return residual_steady_ns(fields, self.reynolds)
        return residual_pressure_poisson(fields)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "youngs_modulus": self.youngs_modulus,
            "poisson_ratio": self.poisson_ratio,
            "reynolds": self.reynolds,
        }

    @staticmethod
    def from_dict(d: dict) -> "PdeProblem":
        return PdeProblem(**d)


def residual_laplace(fields: list[Jet]) -> list:
    (T,) = fields
    return [_z(T.fxx) + _z(T.fyy)]


def residual_elastic(fields: list[Jet], youngs_modulus: float,
                     poisson_ratio: float) -> list:
    """Divergence of the plane-stress tensor.

    sigma_xx = E/(1-nu^2) (eps_xx + nu eps_yy), sigma_yy symmetric,
    sigma_xy = E/(1-nu) eps_xy with eps_xy the symmetrized shear. The
    divergence needs only second displacement derivatives, all present
    in the order-2 jets.
    """
    u, v = fields
    e, nu = youngs_modulus, poisson_ratio
    c_n = e / (1.0 - nu * nu)
    c_s = e / (1.0 - nu)
    u_xx, u_yy, u_xy = _z(u.fxx), _z(u.fyy), _z(u.fxy)
    v_xx, v_yy, v_xy = _z(v.fxx), _z(v.fyy), _z(v.fxy)
    # d(sigma_xx)/dx + d(sigma_xy)/dy
    rx = c_n * (u_xx + nu * v_xy) + c_s * 0.5 * (u_yy + v_xy)
    # d(sigma_xy)/dx + d(sigma_yy)/dy
    ry = c_s * 0.5 * (u_xy + v_xx) + c_n * (v_yy + nu * u_xy)
    return [rx, ry]


def residual_steady_ns(fields: list[Jet], reynolds: float) -> list:
    """Continuity and momentum residuals of steady incompressible flow."""
    u, v, p = fields
    inv_re = 1.0 / reynolds
    cont = _z(u.fx) + _z(v.fy)
    mom_x = (u.f * _z(u.fx) + v.f * _z(u.fy) + _z(p.fx)
             - inv_re * (_z(u.fxx) + _z(u.fyy)))
    mom_y = (u.f * _z(v.fx) + v.f * _z(v.fy) + _z(p.fy)
             - inv_re * (_z(v.fxx) + _z(v.fyy)))
    return [cont, mom_x, mom_y]


def residual_pressure_poisson(fields: list[Jet]) -> list:
    """lap(p) + d2(uu)/dx2 + 2 d2(uv)/dxdy + d2(vv)/dy2, expanded."""
    u, v, p = fields
    u_x, u_y, u_xx, u_xy = _z(u.fx), _z(u.fy), _z(u.fxx), _z(u.fxy)
    v_x, v_y, v_yy, v_xy = _z(v.fx), _z(v.fy), _z(v.fyy), _z(v.fxy)
    source = (2.0 * (u_x * u_x + u.f * u_xx)
              + 2.0 * (u_xy * v.f + u_x * v_y + u_y * v_x + u.f * v_xy)
              + 2.0 * (v_y * v_y + v.f * v_yy))
    return [_z(p.fxx) + _z(p.fyy) + source]


def dt_density_residual(fields: list[Jet], rho: Jet, problem: PdeProblem,
                        bc_values, c: float = DEFAULT_DENSITY_SHARPNESS) -> list:
    """Density-blended composite residual.

    The raw density channel is squashed to an indicator
    ``rho_hat = sigmoid(c * rho)``; each component blends the governing
    residual (where the indicator is low) with the deviation from the
    boundary target (where it is high). At raw density 0 the blend is an
    even split.
    """
    if len(bc_values) != problem.out_dim:
        raise ConfigError("dt_density_residual: one boundary value per field required")
    base = problem.residual(fields)
    rho_hat = sigmoid(_as_var(rho.f) * c)
    one_minus = 1.0 - rho_hat
    out = []
    for field, r, ub in zip(fields, base, bc_values):
        out.append(one_minus * r + rho_hat * (field.f - float(ub)))
    return out
