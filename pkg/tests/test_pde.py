"""Residual operators: manufactured null fields, non-null anchors, the
linearity of the elastic operator, and the density-blended residual."""

import numpy as np
import pytest

from topopinn import autodiff as ad
from topopinn.autodiff import Jet
from topopinn.errors import ConfigError
from topopinn.pde import (DEFAULT_DENSITY_SHARPNESS, PdeProblem,
                          dt_density_residual, residual_elastic,
                          residual_laplace, residual_pressure_poisson,
                          residual_steady_ns)
from topopinn.reference import manufactured_suite


def _resid_values(res):
    out = []
    for r in res:
        v = ad._as_var(r).value if not isinstance(r, float) else np.asarray(r)
        out.append(np.atleast_1d(np.asarray(v, dtype=np.float64)))
    return out


def _max_abs_residual(case, points):
    X, Y = ad.spatial_jets(points[:, 0], points[:, 1], order=2)
    res = case.problem.residual(case.fields(X, Y))
    return max(np.max(np.abs(v)) for v in _resid_values(res))


ALL_KINDS = ["laplace", "elastic", "steady_ns", "pressure_poisson"]


@pytest.mark.parametrize("kind", ALL_KINDS)
def test_manufactured_null_fields(kind, rng):
    problem = PdeProblem(kind=kind)
    points = rng.uniform(-1.0, 1.0, size=(50, 2))
    for case in manufactured_suite(problem):
        assert _max_abs_residual(case, points) < 1e-9, case.name


def test_laplacian_of_r_squared_is_four(rng):
    points = rng.uniform(-2.0, 2.0, size=(10, 2))
    X, Y = ad.spatial_jets(points[:, 0], points[:, 1], order=2)
    (res,) = residual_laplace([X * X + Y * Y])
    assert np.max(np.abs(ad._as_var(res).value - 4.0)) < 1e-12


def test_plane_stress_uniaxial_normal_stress():
    # eps_xx = 1, eps_yy = 0 under E = 1, nu = 0.33 gives
    # sigma_xx = E / (1 - nu^2); exercised through the divergence by the
    # quadratic displacement u = (x^2 / 2, 0): d(sigma_xx)/dx = E/(1-nu^2),
    # plus the shear term E/(1-nu) * u_yy / 2 = 0
    nu = 0.33
    X, Y = ad.spatial_jets(np.array([0.7]), np.array([-0.2]), order=2)
    res = residual_elastic([(X * X) * 0.5, Jet(0.0, order=2)], 1.0, nu)
    rx, ry = _resid_values(res)
    sigma_xx = 1.0 / (1.0 - nu * nu)
    assert abs(float(rx[0]) - sigma_xx) < 1e-9
    assert abs(float(ry[0])) < 1e-12


def test_elastic_rigid_translation_zero():
    X, Y = ad.spatial_jets(np.array([0.3]), np.array([0.9]), order=2)
    res = residual_elastic([Jet(1.7, order=2), Jet(-0.4, order=2)], 1.0, 0.33)
    assert all(np.max(np.abs(v)) == 0.0 for v in _resid_values(res))


def test_elastic_linearity(rng):
    points = rng.uniform(-1.0, 1.0, size=(20, 2))
    X, Y = ad.spatial_jets(points[:, 0], points[:, 1], order=2)

    def probe_a(X, Y):
        return [(X * X) * Y, X * (Y * Y) * 0.5]

    def probe_b(X, Y):
        return [X * Y * Y * 0.25, (X * X * X) * 0.1]

    ra = _resid_values(residual_elastic(probe_a(X, Y), 1.0, 0.33))
    rb = _resid_values(residual_elastic(probe_b(X, Y), 1.0, 0.33))
    fields_sum = [a + b for a, b in zip(probe_a(X, Y), probe_b(X, Y))]
    rsum = _resid_values(residual_elastic(fields_sum, 1.0, 0.33))
    for a, b, s in zip(ra, rb, rsum):
        assert np.max(np.abs(a + b - s)) < 1e-12


def test_ns_shear_flow_zero():
    X, Y = ad.spatial_jets(np.array([0.5]), np.array([1.5]), order=2)
    res = residual_steady_ns([Y, Jet(0.0, order=2), Jet(0.3, order=2)],
                             reynolds=7.0)
    assert all(np.max(np.abs(v)) < 1e-15 for v in _resid_values(res))


def test_ns_poiseuille_zero(rng):
    re = 40.0
    points = rng.uniform(-1.0, 1.0, size=(30, 2))
    X, Y = ad.spatial_jets(points[:, 0], points[:, 1], order=2)
    res = residual_steady_ns([1.0 - Y * Y, Jet(0.0, order=2), X * (-2.0 / re)],
                             reynolds=re)
    assert all(np.max(np.abs(v)) < 1e-9 for v in _resid_values(res))


def test_pressure_poisson_hyperbolic_stream(rng):
    points = rng.uniform(-1.0, 1.0, size=(30, 2))
    X, Y = ad.spatial_jets(points[:, 0], points[:, 1], order=2)
    (res,) = residual_pressure_poisson([X, -Y, -(X * X + Y * Y) * 0.5])
    assert np.max(np.abs(ad._as_var(res).value)) < 1e-12


def test_pressure_poisson_resting_quadratic():
    X, Y = ad.spatial_jets(np.array([0.2]), np.array([0.4]), order=2)
    res = residual_pressure_poisson([Jet(0.0, order=2), Jet(0.0, order=2),
                                     X * X + Y * Y])
    (vals,) = _resid_values(res)
    assert abs(float(vals[0]) - 4.0) < 1e-12


def test_dt_raw_density_zero_gives_even_blend():
    # at raw density 0 the indicator is exactly one half, so the
    # composite residual is the average of the equation and boundary
    # deviations
    problem = PdeProblem(kind="laplace")
    X, Y = ad.spatial_jets(np.array([0.1]), np.array([0.2]), order=2)
    T = X * X + Y * Y       # residual 4
    rho = Jet(0.0, order=2)
    (res,) = dt_density_residual([T], rho, problem, bc_values=(0.0,),
                                 c=DEFAULT_DENSITY_SHARPNESS)
    t_val = 0.1 ** 2 + 0.2 ** 2
    expect = 0.5 * 4.0 + 0.5 * (t_val - 0.0)
    assert abs(float(ad._as_var(res).value[0]) - expect) < 1e-12


def test_dt_saturated_density_pins_boundary_value():
    problem = PdeProblem(kind="laplace")
    X, Y = ad.spatial_jets(np.array([0.1]), np.array([0.2]), order=2)
    T = Jet(0.75, order=2)
    # c = -10 and raw density -10 squashes the indicator to ~1
    (res,) = dt_density_residual([T + (X * X)], Jet(-10.0, order=2), problem,
                                 bc_values=(0.76,))
    blended = float(ad._as_var(res).value[0])
    assert abs(blended - (0.75 + 0.01 - 0.76)) < 1e-10


def test_dt_vanishing_density_recovers_plain_residual():
    problem = PdeProblem(kind="laplace")
    X, Y = ad.spatial_jets(np.array([0.3]), np.array([-0.1]), order=2)
    T = X * X + Y * Y
    (plain,) = _resid_values(problem.residual([T]))
    (blended,) = _resid_values(dt_density_residual([T], Jet(10.0, order=2),
                                                   problem, bc_values=(0.0,)))
    assert abs(float(blended[0]) - float(plain[0])) < 1e-10


def test_dt_interpolation_identity(rng):
    problem = PdeProblem(kind="laplace")
    pts = rng.uniform(-1.0, 1.0, size=(10, 2))
    X, Y = ad.spatial_jets(pts[:, 0], pts[:, 1], order=2)
    T = X * X - 2.0 * Y * Y
    raw = 0.13
    (res,) = dt_density_residual([T], Jet(raw, order=2), problem,
                                 bc_values=(0.4,), c=-10.0)
    rho_hat = 1.0 / (1.0 + np.exp(10.0 * raw))
    (r_pde,) = _resid_values(problem.residual([T]))
    t_vals = np.asarray(T.f.value)
    expect = (1.0 - rho_hat) * r_pde + rho_hat * (t_vals - 0.4)
    assert np.max(np.abs(ad._as_var(res).value - expect)) < 1e-12


def test_problem_validation():
    with pytest.raises(ConfigError):
        PdeProblem(kind="heat")
    with pytest.raises(ConfigError):
        PdeProblem(kind="elastic", poisson_ratio=1.0)
    with pytest.raises(ConfigError):
        PdeProblem(kind="steady_ns", reynolds=0.0)
    with pytest.raises(ConfigError):
        PdeProblem(kind="elastic", youngs_modulus=-1.0)


def test_problem_field_arity():
    assert PdeProblem(kind="laplace").out_dim == 1
    assert PdeProblem(kind="elastic").out_dim == 2
    assert PdeProblem(kind="steady_ns").out_dim == 3
    assert PdeProblem(kind="pressure_poisson").out_dim == 3
    with pytest.raises(ConfigError):
        X, Y = ad.spatial_jets(np.array([0.0]), np.array([0.0]), order=2)
        PdeProblem(kind="elastic").residual([X])
