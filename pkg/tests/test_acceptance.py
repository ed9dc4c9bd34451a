"""Acceptance gate. Each test covers one shipped criterion at its stated
tolerance and prints a visible pass/fail verdict line."""

import math
import time
from types import SimpleNamespace

import numpy as np
import pytest

from topopinn import autodiff as ad
from topopinn.cli import main as cli_main
from topopinn.config import prepare_run
from topopinn.geometry import (CirclePatch, Roi, boundary_normal,
                               composite_delta, delta, init_gamma,
                               sample_rings, signed_distance)
from topopinn.losses import (BoundaryCondition, LossWeights, TopologySpec,
                             topo_nonoverlap_loss)
from topopinn.metrics import boundary_flux, lift_drag, relative_l2
from topopinn.network import (MlpConfig, Normalizer, as_field, forward,
                              he_init)
from topopinn.pde import PdeProblem, residual_elastic, residual_laplace
from topopinn.presets import make_preset
from topopinn.reference import (annulus_temperature, fd_poisson_dirichlet,
                                manufactured_suite)
from topopinn.sampling import Measurements, SampleSet, uniform_grid
from topopinn.training import TrainSetup, init_state, loss_and_grads, train

import conftest
from conftest import laplace_context, make_probe


def _verdict(num, title, ok, detail):
    line = f"criterion {num:2d} {title}: {'PASS' if ok else 'FAIL'} ({detail})"
    conftest.acceptance_verdicts.append(line)
    print(line)
    assert ok, line


def _predict_scalar(source, points):
    X, Y = ad.spatial_jets(points[:, 0], points[:, 1], order=0)
    return np.asarray(source(X, Y)[0].f.value, dtype=np.float64)


def _rvals(r):
    return np.atleast_1d(np.asarray(r.value if isinstance(r, ad.Var) else r))


# ---------------------------------------------------------------------------
# shared end-to-end runs (criteria 5, 6, 8 reuse these presets)


def _run_preset(name):
    cfg = make_preset(name)
    t0 = time.monotonic()
    state, samples, setup = prepare_run(cfg)
    state, history = train(state, samples, setup)
    seconds = time.monotonic() - t0
    source = as_field(state.params, setup.normalizer, setup.mlp)
    return SimpleNamespace(cfg=cfg, state=state, history=history,
                           setup=setup, source=source, seconds=seconds)


@pytest.fixture(scope="module")
def annulus_lt():
    return _run_preset("annulus-lt")


@pytest.fixture(scope="module")
def annulus_dt():
    return _run_preset("annulus-dt")


def _flux_error(source, center):
    _, flux = boundary_flux(source, CirclePatch(*center))
    return abs(float(np.mean(flux)) - (-0.5))


# ---------------------------------------------------------------------------
# 1: differentiation


def test_criterion_01_differentiation(rng):
    t0 = time.monotonic()
    worst = 0.0

    # random MLP, every parameter entry against central differences
    mlp = MlpConfig(hidden_layers=2, width=6, out_dim=1)
    params = he_init(mlp, seed=3)
    norm = Normalizer.identity()
    names = {}
    for layer, (w, b) in enumerate(params):
        names[f"w{layer}"] = w
        names[f"b{layer}"] = b

    def build_mlp(seeds):
        layered = [(seeds[f"w{i}"], seeds[f"b{i}"]) for i in range(len(params))]
        X, Y = ad.spatial_jets([0.31], [-0.62], order=0)
        return forward(layered, X, Y, norm, mlp)[0].f

    worst = max(worst, ad.check_against_finite_differences(
        build_mlp, names, step=1e-5))

    # sharpened distance against patch-center perturbations
    pts = rng.uniform(-1.5, 1.5, size=(40, 2))

    def build_delta(seeds):
        from topopinn.losses import delta_expr
        d = delta_expr(seeds["gx"], seeds["gy"], pts[:, 0], pts[:, 1])
        return ad.sum_all(d)

    worst = max(worst, ad.check_against_finite_differences(
        build_delta, {"gx": 0.2, "gy": -0.4}, step=1e-6))

    # assembled objective: theta and gamma entries on a small setup
    mlp2 = MlpConfig(hidden_layers=2, width=6, out_dim=1)
    gamma0 = np.array([[0.3, -0.2], [1.1, 0.8]])
    state = init_state(mlp2, gamma0, seed=8)
    rings = (sample_rings(CirclePatch(*gamma0[0]), (0.5, 0.3), 6, owner=0)
             + sample_rings(CirclePatch(*gamma0[1]), (0.5, 0.3), 6, owner=1))
    meas = Measurements(rng.uniform(-1.5, 1.5, size=(10, 2)),
                        rng.normal(size=(10, 1)))
    samples = SampleSet(collocation=rng.uniform(-1.5, 1.5, size=(40, 2)),
                        measurements=meas, boundary=rings,
                        roi=Roi(-2, 2, -2, 2), core=Roi(-1.6, 1.6, -1.6, 1.6))
    ctx = laplace_context(
        weights=LossWeights(pde=1.0, boundary=2.0, data=3.0, topology=0.5),
        boundary=BoundaryCondition(kind="dirichlet", values=(0.1,)),
        topology=TopologySpec(pairs=((0, 1, 1.5), (1, 0, 1.5)),
                              nonoverlap=True))
    setup = TrainSetup(mlp=mlp2, normalizer=Normalizer.from_bounds(-2, 2, -2, 2),
                       ctx=ctx, epochs=1)
    _, grads = loss_and_grads(state, samples, setup)

    def total_at(st):
        b, _ = loss_and_grads(st, samples, setup, want_grads=False)
        return b.total

    h = 1e-6
    leaves = state.leaves()
    for li, leaf in enumerate(leaves):
        flat = leaf.reshape(-1)
        idxs = (range(flat.size) if leaf is state.gamma
                else rng.choice(flat.size, size=min(3, flat.size),
                                replace=False))
        for idx in np.atleast_1d(np.asarray(idxs)):
            st_p, st_m = state.copy(), state.copy()
            st_p.leaves()[li].reshape(-1)[idx] += h
            st_m.leaves()[li].reshape(-1)[idx] -= h
            central = (total_at(st_p) - total_at(st_m)) / (2 * h)
            analytic = grads[li].reshape(-1)[idx]
            worst = max(worst, abs(analytic - central)
                        / max(abs(analytic), 1e-8))

    seconds = time.monotonic() - t0
    _verdict(1, "differentiation vs central differences",
             worst < 1e-4 and seconds < 60.0,
             f"max rel err {worst:.3e}, {seconds:.1f}s")


# ---------------------------------------------------------------------------
# 2: manufactured residuals


def test_criterion_02_manufactured_residuals(rng):
    t0 = time.monotonic()
    pts = rng.uniform(-0.9, 0.9, size=(60, 2))
    worst = 0.0
    for kind in ("laplace", "elastic", "steady_ns", "pressure_poisson"):
        problem = PdeProblem(kind)
        for case in manufactured_suite(problem):
            X, Y = ad.spatial_jets(pts[:, 0], pts[:, 1], order=2)
            comps = case.fields(X, Y)
            resids = problem.residual(comps)
            for r in resids:
                worst = max(worst, float(np.max(np.abs(_rvals(r)))))

    # non-null anchors
    X, Y = ad.spatial_jets(pts[:, 0], pts[:, 1], order=2)
    lap = residual_laplace((X * X + Y * Y,))[0]
    lap_err = float(np.max(np.abs(_rvals(lap) - 4.0)))

    # uniaxial strain eps_xx = 1 through the elastic operator: with
    # E = 1, nu = 0.33 the x-residual of u = (x^2/2, 0) is sigma_xx per
    # unit length, E / (1 - nu^2)
    U = X * X * 0.5
    V = X * 0.0
    rx, _ = residual_elastic((U, V), youngs_modulus=1.0, poisson_ratio=0.33)
    sigma = 1.0 / (1.0 - 0.33 ** 2)
    sig_err = float(np.max(np.abs(_rvals(rx) - sigma)))

    seconds = time.monotonic() - t0
    ok = worst < 1e-9 and lap_err < 1e-9 and sig_err < 1e-9 and seconds < 60.0
    _verdict(2, "manufactured residual suite", ok,
             f"null {worst:.2e}, lap {lap_err:.2e}, sigma {sig_err:.2e}, "
             f"{seconds:.1f}s")


# ---------------------------------------------------------------------------
# 3: geometry


def test_criterion_03_geometry():
    patch = CirclePatch(0.0, 0.0)
    sdf_err = abs(signed_distance(patch, np.array([[1.5, 0.0]]))[0] - 1.0)
    d_mid = delta(patch, np.array([[0.5, 0.0]]))[0]
    d_in = delta(patch, np.array([[0.4, 0.0]]))[0]
    d_in_ref = 1.0 / (1.0 + math.exp(10.0))
    comp = composite_delta([patch, CirclePatch(0.1, 0.0)],
                           np.array([[0.5, 0.0]]), k=2.0)
    nrm = boundary_normal(patch, np.array([[0.5, 0.0]]))[0]

    rings_small = sample_rings(patch, (0.5, 0.4, 0.3, 0.2), 128)
    rings_large = sample_rings(patch, (0.5, 0.4, 0.3, 0.2), 256)

    checks = {
        "sdf": sdf_err < 1e-15,
        "delta boundary 0.5": abs(d_mid - 0.5) < 1e-15,
        "delta interior": abs(d_in - d_in_ref) / d_in_ref < 1e-9,
        "composite": np.isfinite(comp[0]) and 0.0 <= comp[0] <= 1.0,
        "normal": abs(nrm[0] - 1.0) < 1e-12 and abs(nrm[1]) < 1e-12,
        "counts 512/1024": (len(rings_small) == 512
                            and len(rings_large) == 1024),
    }
    bad = [k for k, v in checks.items() if not v]
    _verdict(3, "geometry kernel examples", not bad,
             "all anchors exact" if not bad else f"failed: {bad}")


# ---------------------------------------------------------------------------
# 4: topology-loss dynamics


def test_criterion_04_topology_dynamics():
    t0 = time.monotonic()
    centers = np.array([[0.0, 0.0], [1.0, 0.0]])
    pairs = ((0, 1, 2.5), (1, 0, 2.5))
    lr = 0.05
    steps = 0
    gap = None
    for steps in range(1, 5001):
        gvars = [(ad.Var(np.array([c[0]])), ad.Var(np.array([c[1]])))
                 for c in centers]
        sse = 0.0
        for i, j, r_star in pairs:
            r = ad.norm2(gvars[i][0] - gvars[j][0], gvars[i][1] - gvars[j][1])
            e = r - float(r_star)
            sse = sse + e * e
        loss = sse * (1.0 / len(centers))
        leaves = [v for pair in gvars for v in pair]
        grads = ad.gradients(loss, leaves)
        for p in range(2):
            centers[p, 0] -= lr * grads[2 * p].item()
            centers[p, 1] -= lr * grads[2 * p + 1].item()
        gap = abs(np.hypot(*(centers[0] - centers[1])) - 2.5)
        if gap < 1e-3:
            break

    overlap = topo_nonoverlap_loss([CirclePatch(0.0, 0.0),
                                    CirclePatch(2.0, 0.0)])
    seconds = time.monotonic() - t0
    ok = gap < 1e-3 and steps <= 5000 and overlap == 0.25 and seconds < 10.0
    _verdict(4, "topology-loss dynamics", ok,
             f"gap {gap:.2e} in {steps} steps, overlap {overlap!r}, "
             f"{seconds:.1f}s")


# ---------------------------------------------------------------------------
# 5: end-to-end gamma recovery


def test_criterion_05_gamma_recovery(annulus_lt):
    run = annulus_lt
    gamma = run.state.gamma[0]
    gamma_err = float(np.hypot(gamma[0], gamma[1]))

    flux_err = _flux_error(run.source, gamma)

    pts = uniform_grid(Roi(-1.1, 1.1, -1.1, 1.1), 64, 64)
    r = np.hypot(pts[:, 0], pts[:, 1])
    sel = (r >= 0.55) & (r <= 1.05)
    pred = _predict_scalar(run.source, pts[sel])
    ref = annulus_temperature(pts[sel])
    rel = relative_l2(pred, ref)

    ok = (run.cfg.run.epochs <= 20000 and gamma_err < 0.05
          and flux_err < 0.05 and rel < 0.05 and run.seconds < 1800.0)
    _verdict(5, "annulus center recovery", ok,
             f"|gamma-gamma*| {gamma_err:.4f}, flux err {flux_err:.4f}, "
             f"rel L2 {rel:.4f}, {run.seconds:.0f}s/{run.cfg.run.epochs} epochs")


# ---------------------------------------------------------------------------
# 6: density-vs-patch directional comparison


def test_criterion_06_dt_vs_lt(annulus_lt, annulus_dt):
    lt_err = _flux_error(annulus_lt.source, annulus_lt.state.gamma[0])
    # the density run has no movable patch, so its flux is read on the
    # true inner circle
    dt_err = _flux_error(annulus_dt.source, (0.0, 0.0))
    combined = annulus_lt.seconds + annulus_dt.seconds
    ok = lt_err < dt_err and combined < 3600.0
    _verdict(6, "patch run beats density run on flux", ok,
             f"lt {lt_err:.4f} < dt {dt_err:.4f}, combined {combined:.0f}s")


# ---------------------------------------------------------------------------
# 7: lift/drag quadrature


def test_criterion_07_lift_drag():
    const = make_probe(lambda X, Y: [X * 0.0 + 3.0])
    lift0, drag0 = lift_drag(const, [CirclePatch(0.2, -0.1)], 256)
    linear = make_probe(lambda X, Y: [X])
    lift1, drag1 = lift_drag(linear, [CirclePatch(0.0, 0.0)], 256)
    ok = (abs(lift0) < 1e-10 and abs(drag0) < 1e-10
          and abs(drag1 - (-math.pi / 4)) < 1e-6 and abs(lift1) < 1e-10)
    _verdict(7, "pressure force quadrature", ok,
             f"const ({lift0:.1e}, {drag0:.1e}), "
             f"drag {drag1:.8f} vs {-math.pi / 4:.8f}")


# ---------------------------------------------------------------------------
# 8: determinism


def test_criterion_08_determinism(tmp_path):
    dirs = [tmp_path / "a", tmp_path / "b"]
    for d in dirs:
        code = cli_main(["train", "--preset", "annulus-lt",
                         "--output", str(d),
                         "--set", "run.epochs=50",
                         "--set", "run.log_interval=10"])
        assert code == 0
    same = all((dirs[0] / n).read_bytes() == (dirs[1] / n).read_bytes()
               for n in ("loss.csv", "gamma.csv"))
    _verdict(8, "seeded runs byte-identical", same,
             "loss.csv and gamma.csv match" if same else "files differ")


# ---------------------------------------------------------------------------
# 9: rearrange smoke


def test_criterion_09_rearrange_smoke():
    run = _run_preset("rearrange-4")
    first = run.history.breakdowns[0].total
    last = run.history.breakdowns[-1].total
    ok = (run.cfg.weights.topology == 0.0 and run.state.epoch == 2000
          and last < first and run.seconds < 300.0)
    _verdict(9, "four-patch flow rearrange", ok,
             f"loss {first:.4g} -> {last:.4g}, {run.seconds:.0f}s")


# ---------------------------------------------------------------------------
# 10: finite-difference oracle order


def test_criterion_10_fd_convergence():
    truth = lambda x, y: np.sin(np.pi * x) * np.sin(np.pi * y)
    src = lambda x, y: -2 * np.pi ** 2 * truth(x, y)
    errs = []
    for n in (17, 33, 65):
        xs, ys, U = fd_poisson_dirichlet(Roi(0, 1, 0, 1), n, n, src, truth)
        X, Y = np.meshgrid(xs, ys)
        errs.append(np.max(np.abs(U - truth(X, Y))))
    ratios = [a / b for a, b in zip(errs, errs[1:])]
    ok = all(3.0 < q < 5.0 for q in ratios)
    _verdict(10, "second-order Poisson solver", ok,
             "ratios " + ", ".join(f"{q:.2f}" for q in ratios))
