"""Shared fixtures and helpers for the test suite."""

import numpy as np
import pytest

from topopinn import autodiff as ad
from topopinn.geometry import Roi
from topopinn.losses import (BoundaryCondition, LossContext, LossWeights,
                             TopologySpec)
from topopinn.network import MlpConfig, Normalizer, as_field, he_init
from topopinn.pde import PdeProblem
from topopinn.sampling import Measurements, SampleSet


def make_probe(builder):
    """Field source from a closed-form jet expression builder."""

    def field(X, Y):
        out = builder(X, Y)
        return out if isinstance(out, list) else [out]

    return field


def tiny_network(hidden_layers=2, width=8, out_dim=1, seed=0,
                 density_channel=False):
    """Small random network plus its evaluation pieces."""
    cfg = MlpConfig(hidden_layers=hidden_layers, width=width, out_dim=out_dim,
                    density_channel=density_channel)
    params = he_init(cfg, seed)
    norm = Normalizer.identity()
    return cfg, params, norm, as_field(params, norm, cfg)


def laplace_sampleset(points, measurements=None, boundary=None, roi=None,
                      core=None):
    roi = roi or Roi(-2.0, 2.0, -2.0, 2.0)
    core = core or Roi(-1.5, 1.5, -1.5, 1.5)
    meas = measurements if measurements is not None else Measurements.empty(1)
    return SampleSet(collocation=points, measurements=meas,
                     boundary=boundary or [], roi=roi, core=core)


def laplace_context(**overrides):
    base = dict(problem=PdeProblem(kind="laplace"),
                weights=LossWeights(pde=1.0),
                mode="lt",
                boundary=BoundaryCondition(),
                topology=TopologySpec())
    base.update(overrides)
    return LossContext(**base)


def scalar_field_value(field, x, y):
    X, Y = ad.spatial_jets(np.asarray([x]), np.asarray([y]), order=0)
    return float(field(X, Y)[0].f.value[0])


@pytest.fixture
def rng():
    return np.random.Generator(np.random.PCG64(1234))


# Acceptance tests register one verdict line each; the summary hook
# echoes them into the terminal report, where capture cannot hide them.
acceptance_verdicts = []


def pytest_terminal_summary(terminalreporter):
    if not acceptance_verdicts:
        return
    terminalreporter.section("acceptance criteria")
    for line in acceptance_verdicts:
        terminalreporter.write_line(line)
