"""Estimator-style wrappers around the training engine.

These follow the scikit-learn conventions: constructor arguments are
stored verbatim, ``fit(X, y)`` learns from scattered measurements,
``predict(X)`` evaluates the learned field, and fitted state lives in
trailing-underscore attributes. NaN entries in ``y`` mark components a
measurement does not constrain.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .config import (build_samples, build_setup, default_config,
                     initial_centers, validate_config)
from .errors import ConfigError
from .sampling import Measurements, SampleSet
from .training import init_state, train
from . import autodiff as ad
from .network import as_field
from .sampling import child_seeds

__all__ = ["LagrangianTopologyPinn", "DensityTopologyPinn"]


class _TopologyPinn(BaseEstimator, RegressorMixin):
    """Shared fit/predict machinery for both topology descriptions."""

    _mode = "lt"

    def _config(self):
        cfg = default_config()
        cfg.run.mode = self._mode
        cfg.run.seed = self.seed
        cfg.run.epochs = self.epochs
        cfg.run.log_interval = max(self.epochs, 1)
        cfg.pde.kind = self.pde
        cfg.network.hidden_layers = self.hidden_layers
        cfg.network.width = self.width
        cfg.sampling.grid_nx = self.grid_nx
        cfg.sampling.grid_ny = self.grid_ny
        cfg.sampling.chunk_size = self.chunk_size
        cfg.weights.pde = self.weight_pde
        cfg.weights.data = self.weight_data
        cfg.optimizer.learning_rate = self.learning_rate
        cfg.data.source = "none"
        return cfg

    def _region(self, X):
        if self.region is not None:
            x_min, x_max, y_min, y_max = (float(v) for v in self.region)
        else:
            x_min, x_max = float(X[:, 0].min()), float(X[:, 0].max())
            y_min, y_max = float(X[:, 1].min()), float(X[:, 1].max())
        if not (x_min < x_max and y_min < y_max):
            raise ConfigError("estimator region is degenerate; pass region=")
        return x_min, x_max, y_min, y_max

    def fit(self, X, y):
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != 2:
            raise ValueError("X must have two columns (x and y positions)")
        y = check_array(y, dtype=np.float64, ensure_all_finite="allow-nan",
                        ensure_2d=False)
        if y.ndim == 1:
            y = y[:, None]
        if len(y) != len(X):
            raise ValueError("X and y have different lengths")

        cfg = self._config()
        (cfg.sampling.x_min, cfg.sampling.x_max,
         cfg.sampling.y_min, cfg.sampling.y_max) = self._region(X)
        validate_config(cfg)

        setup = build_setup(cfg)
        out_dim = setup.ctx.problem.out_dim
        if y.shape[1] != out_dim:
            raise ValueError(
                f"y has {y.shape[1]} components; {cfg.pde.kind} needs {out_dim}")

        centers = initial_centers(cfg)
        base = build_samples(cfg, centers)
        samples = SampleSet(
            collocation=base.collocation,
            measurements=Measurements(X, y),
            boundary=base.boundary,
            roi=base.roi,
            core=base.core,
        )
        state = init_state(setup.mlp, centers, child_seeds(cfg.run.seed, 4)[0])
        state, history = train(state, samples, setup)

        self.state_ = state
        self.params_ = state.params
        self.centers_ = state.gamma.copy()
        self.history_ = history
        self.n_iter_ = state.epoch
        self.loss_ = history.breakdowns[-1].total
        self._mlp = setup.mlp
        self._normalizer = setup.normalizer
        self._out_dim = out_dim
        return self

    def predict(self, X):
        check_is_fitted(self, "state_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != 2:
            raise ValueError("X must have two columns (x and y positions)")
        source = as_field(self.state_.params, self._normalizer, self._mlp)
        jx, jy = ad.spatial_jets(X[:, 0], X[:, 1], order=0)
        outs = source(jx, jy)[:self._out_dim]
        cols = [np.broadcast_to(np.asarray(o.f.value), (len(X),))
                for o in outs]
        pred = np.column_stack(cols)
        return pred[:, 0] if self._out_dim == 1 else pred


class LagrangianTopologyPinn(_TopologyPinn):
    """Field regression with movable circle patches.

    Patch centers are learned together with the network; after ``fit``
    they are available as ``centers_``. Patch boundary conditions are
    enforced on concentric sample rings when a boundary kind is set.
    """

    _mode = "lt"

    def __init__(self, pde="laplace", n_patches=1, hidden_layers=3, width=32,
                 epochs=500, learning_rate=1e-3, weight_pde=1.0,
                 weight_data=100.0, weight_boundary=0.0, boundary="none",
                 boundary_values=(), boundary_flux=0.0, init_centers=(),
                 grid_nx=20, grid_ny=20, region=None, seed=0,
                 chunk_size=4096):
        self.pde = pde
        self.n_patches = n_patches
        self.hidden_layers = hidden_layers
        self.width = width
        self.epochs = epochs
        self.learning_rate = learning_rate
        self.weight_pde = weight_pde
        self.weight_data = weight_data
        self.weight_boundary = weight_boundary
        self.boundary = boundary
        self.boundary_values = boundary_values
        self.boundary_flux = boundary_flux
        self.init_centers = init_centers
        self.grid_nx = grid_nx
        self.grid_ny = grid_ny
        self.region = region
        self.seed = seed
        self.chunk_size = chunk_size

    def _config(self):
        cfg = super()._config()
        cfg.geometry.n_patches = self.n_patches
        cfg.geometry.init_centers = tuple(
            (float(x), float(y)) for x, y in self.init_centers)
        cfg.boundary.kind = self.boundary
        cfg.boundary.values = tuple(float(v) for v in self.boundary_values)
        cfg.boundary.flux = self.boundary_flux
        cfg.weights.boundary = self.weight_boundary
        return cfg


class DensityTopologyPinn(_TopologyPinn):
    """Field regression with an extra density output channel.

    The sharpened density blends the equation residual with a boundary
    value misfit, so the topology is implicit; threshold the density to
    extract it.
    """

    _mode = "dt"

    def __init__(self, pde="laplace", hidden_layers=3, width=32, epochs=500,
                 learning_rate=1e-3, weight_pde=1.0, weight_data=100.0,
                 density_bc=(0.0,), density_sharpness=-10.0, grid_nx=20,
                 grid_ny=20, region=None, seed=0, chunk_size=4096):
        self.pde = pde
        self.hidden_layers = hidden_layers
        self.width = width
        self.epochs = epochs
        self.learning_rate = learning_rate
        self.weight_pde = weight_pde
        self.weight_data = weight_data
        self.density_bc = density_bc
        self.density_sharpness = density_sharpness
        self.grid_nx = grid_nx
        self.grid_ny = grid_ny
        self.region = region
        self.seed = seed
        self.chunk_size = chunk_size

    def _config(self):
        cfg = super()._config()
        cfg.geometry.n_patches = 0
        cfg.pde.density_bc = tuple(float(v) for v in self.density_bc)
        cfg.pde.density_sharpness = self.density_sharpness
        return cfg

    def predict_density(self, X):
        """Sharpened density in [0, 1] at the given points."""
        check_is_fitted(self, "state_")
        X = check_array(X, dtype=np.float64)
        source = as_field(self.state_.params, self._normalizer, self._mlp)
        jx, jy = ad.spatial_jets(X[:, 0], X[:, 1], order=0)
        rho = source(jx, jy)[-1]
        return np.asarray(
            ad.sigmoid(rho.f * self.density_sharpness).value)
