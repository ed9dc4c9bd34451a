"""Fully connected tanh networks evaluated through spatial jets.

The network maps a 2-D point to one or more output fields. Inputs are
normalized to [-1, 1]^2 by an affine map fixed at training time and
stored with the model, so checkpoints evaluate identically later.

The forward pass consumes :class:`~topopinn.autodiff.Jet` inputs; with
order-2 jets it produces every first and second spatial partial of each
output in one sweep, all of it still attached to the reverse-mode tape.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import Jet, Var, _nadd, _nmul
from .errors import ConfigError, NumericError

__all__ = ["MlpConfig", "Normalizer", "he_init", "forward", "as_field", "n_parameters"]

_ACTIVATIONS = ("tanh",)


@dataclass(frozen=True)
class MlpConfig:
    """Architecture description: sizes, activation, output layout."""

    hidden_layers: int
    width: int
    out_dim: int
    activation: str = "tanh"
    density_channel: bool = False
    in_dim: int = 2

    def __post_init__(self):
        if self.hidden_layers < 1 or self.width < 1 or self.out_dim < 1:
            raise ConfigError("MlpConfig: sizes must be positive")
        if self.activation not in _ACTIVATIONS:
            raise ConfigError(f"MlpConfig: unsupported activation {self.activation!r}")
        if self.in_dim != 2:
            raise ConfigError("MlpConfig: only 2-D spatial input is supported")

    @property
    def total_outputs(self) -> int:
        return self.out_dim + (1 if self.density_channel else 0)

    def layer_sizes(self) -> list[tuple[int, int]]:
        dims = [self.in_dim] + [self.width] * self.hidden_layers + [self.total_outputs]
        return list(zip(dims[:-1], dims[1:]))

    def to_dict(self) -> dict:
        return {
            "hidden_layers": self.hidden_layers,
            "width": self.width,
            "out_dim": self.out_dim,
            "activation": self.activation,
            "density_channel": self.density_channel,
            "in_dim": self.in_dim,
        }

    @staticmethod
    def from_dict(d: dict) -> "MlpConfig":
        return MlpConfig(**d)


@dataclass(frozen=True)
class Normalizer:
    """Affine map taking the region of interest onto [-1, 1]^2."""

    x_min: float
    x_max: float
    y_min: float
    y_max: float

    def __post_init__(self):
        if not (self.x_max > self.x_min and self.y_max > self.y_min):
            raise ConfigError("Normalizer: degenerate region")

    @staticmethod
    def identity() -> "Normalizer":
        return Normalizer(-1.0, 1.0, -1.0, 1.0)

    @staticmethod
    def from_bounds(x_min, x_max, y_min, y_max) -> "Normalizer":
        return Normalizer(float(x_min), float(x_max), float(y_min), float(y_max))

    def apply(self, X: Jet, Y: Jet) -> tuple[Jet, Jet]:
        sx = 2.0 / (self.x_max - self.x_min)
        sy = 2.0 / (self.y_max - self.y_min)
        return (X - self.x_min) * sx - 1.0, (Y - self.y_min) * sy - 1.0

    def to_dict(self) -> dict:
        return {"x_min": self.x_min, "x_max": self.x_max,
                "y_min": self.y_min, "y_max": self.y_max}

    @staticmethod
    def from_dict(d: dict) -> "Normalizer":
        return Normalizer(**d)


def he_init(config: MlpConfig, seed: int) -> list:
    """Gaussian weights with variance 2/fan_in, zero biases.

    Returns ``[(W, b), ...]`` as plain float64 arrays, deterministically
    from ``seed``.
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    params = []
    for fan_in, fan_out in config.layer_sizes():
        w = rng.normal(0.0, np.sqrt(2.0 / fan_in), size=(fan_in, fan_out))
        b = np.zeros(fan_out)
        params.append((w.astype(np.float64), np.zeros_like(b)))
    return params


def n_parameters(params: list) -> int:
    return sum(w.size + b.size for w, b in params)


def _check_finite(value: np.ndarray, layer: int):
    if not np.all(np.isfinite(value)):
        raise NumericError(f"non-finite activation in layer {layer}")


def _jet_affine(a: Jet, w: Var, b: Var) -> Jet:
    out = Jet(ad.matmul(a.f, w) + b, order=a.order)
    if a.order >= 1:
        out.fx = None if a.fx is None else ad.matmul(a.fx, w)
        out.fy = None if a.fy is None else ad.matmul(a.fy, w)
    if a.order >= 2:
        out.fxx = None if a.fxx is None else ad.matmul(a.fxx, w)
        out.fxy = None if a.fxy is None else ad.matmul(a.fxy, w)
        out.fyy = None if a.fyy is None else ad.matmul(a.fyy, w)
    return out


def _input_affine(X: Jet, Y: Jet, w: Var, b: Var) -> Jet:
    """First layer applied to the two coordinate jets directly.

    Coordinate jets carry scalar seeds (or None), so each derivative
    component is a combination of single weight rows; second-order
    components of an affine stage stay structurally zero.
    """
    order = min(X.order, Y.order)
    out = Jet(ad.matmul(ad.colstack(X.f, Y.f), w) + b, order=order)
    if order >= 1:
        row_x, row_y = ad.getrow(w, 0), ad.getrow(w, 1)
        out.fx = _nadd(_nmul(X.fx, row_x), _nmul(Y.fx, row_y))
        out.fy = _nadd(_nmul(X.fy, row_x), _nmul(Y.fy, row_y))
    if order >= 2:
        out.fxx = _nadd(_nmul(X.fxx, row_x), _nmul(Y.fxx, row_y))
        out.fxy = _nadd(_nmul(X.fxy, row_x), _nmul(Y.fxy, row_y))
        out.fyy = _nadd(_nmul(X.fyy, row_x), _nmul(Y.fyy, row_y))
    return out


def forward(params: list, X: Jet, Y: Jet, normalizer: Normalizer,
            config: MlpConfig) -> list[Jet]:
    """Evaluate the network on coordinate jets.

    ``params`` entries may be numpy arrays or tape ``Var``s; wrap them as
    ``Var`` leaves beforehand to differentiate with respect to weights.
    Returns one jet per output column (fields first, then the density
    channel when configured).
    """
    if len(params) != config.hidden_layers + 1:
        raise ConfigError("forward: parameter count does not match config")
    for (w, b), (fan_in, fan_out) in zip(params, config.layer_sizes()):
        wv = w.value if isinstance(w, Var) else w
        bv = b.value if isinstance(b, Var) else b
        if wv.shape != (fan_in, fan_out) or bv.shape != (fan_out,):
            raise ConfigError(
                f"forward: layer shape {wv.shape} does not match config {(fan_in, fan_out)}")
    Xn, Yn = normalizer.apply(X, Y)
    w0, b0 = params[0]
    z = _input_affine(Xn, Yn, ad._as_var(w0), ad._as_var(b0))
    _check_finite(z.f.value, 0)
    z = ad.jtanh(z)
    for i, (w, b) in enumerate(params[1:], start=1):
        z = _jet_affine(z, ad._as_var(w), ad._as_var(b))
        _check_finite(z.f.value, i)
        if i < len(params) - 1:
            z = ad.jtanh(z)
    outs = []
    for j in range(config.total_outputs):
        jet = Jet(ad.getcol(z.f, j), order=z.order)
        if z.order >= 1:
            jet.fx = None if z.fx is None else ad.getcol(z.fx, j)
            jet.fy = None if z.fy is None else ad.getcol(z.fy, j)
        if z.order >= 2:
            jet.fxx = None if z.fxx is None else ad.getcol(z.fxx, j)
            jet.fxy = None if z.fxy is None else ad.getcol(z.fxy, j)
            jet.fyy = None if z.fyy is None else ad.getcol(z.fyy, j)
        outs.append(jet)
    return outs


def as_field(params: list, normalizer: Normalizer, config: MlpConfig):
    """Close over fixed parameters, yielding a field source (X, Y) -> jets."""

    def field(X: Jet, Y: Jet) -> list[Jet]:
        return forward(params, X, Y, normalizer, config)

    return field
