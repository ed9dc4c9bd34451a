"""Full-batch Adam training of network weights and patch centers.

One epoch builds the loss graph term by term, runs a reverse pass per
term (equation chunks separately, so memory stays flat at large point
counts), and applies one Adam update to every leaf: all weight matrices
and biases, then the patch-center block. Weights and centers share one
optimizer; a separate center learning rate is exposed but defaults to
the shared one.

Checkpoints are little-endian binary: a magic tag, a format version, a
JSON header (architecture, normalizer, free-form metadata) and the raw
float64 payload (parameters, centers, both Adam moment sets). Loading
restores bit-identical state.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field as dc_field

import numpy as np

from . import autodiff as ad
from .autodiff import Var
from .errors import CheckpointError, ConfigError, DivergenceError
from .losses import (LossBreakdown, LossContext, loss_terms, term_weight)
from .network import MlpConfig, Normalizer, as_field, he_init
from .sampling import SampleSet

__all__ = [
    "AdamConfig",
    "TrainState",
    "TrainSetup",
    "History",
    "init_state",
    "adam_step",
    "loss_and_grads",
    "early_stop_check",
    "train",
    "checkpoint_save",
    "checkpoint_load",
    "write_loss_csv",
    "write_gamma_csv",
]

_MAGIC = b"TPCK"
_VERSION = 1


@dataclass(frozen=True)
class AdamConfig:
    learning_rate: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    center_learning_rate: float | None = None

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ConfigError("AdamConfig: learning rate must be positive")
        if not (0.0 <= self.beta1 < 1.0 and 0.0 <= self.beta2 < 1.0):
            raise ConfigError("AdamConfig: betas must lie in [0, 1)")

    @property
    def center_lr(self) -> float:
        return self.learning_rate if self.center_learning_rate is None \
            else self.center_learning_rate


@dataclass
class TrainState:
    """Trainable leaves plus optimizer moments and the epoch counter.

    Leaf order everywhere: W0, b0, W1, b1, ..., then the (P, 2) center
    block as a single leaf.
    """

    params: list
    gamma: np.ndarray
    m: list
    v: list
    epoch: int = 0

    def leaves(self) -> list:
        flat = []
        for w, b in self.params:
            flat.append(w)
            flat.append(b)
        flat.append(self.gamma)
        return flat

    @property
    def n_patches(self) -> int:
        return len(self.gamma)

    def copy(self) -> "TrainState":
        return TrainState(
            params=[(w.copy(), b.copy()) for w, b in self.params],
            gamma=self.gamma.copy(),
            m=[x.copy() for x in self.m],
            v=[x.copy() for x in self.v],
            epoch=self.epoch,
        )


@dataclass
class TrainSetup:
    """Static description of a run: model, objective, optimizer, schedule."""

    mlp: MlpConfig
    normalizer: Normalizer
    ctx: LossContext
    adam: AdamConfig = AdamConfig()
    epochs: int = 1000
    log_interval: int = 100
    early_stop_window: int = 10
    early_stop_tol: float = 0.0   # 0 disables
    divergence_limit: float = 1e12

    def __post_init__(self):
        if self.epochs < 0:
            raise ConfigError("TrainSetup: epochs must be non-negative")
        if self.log_interval < 1:
            raise ConfigError("TrainSetup: log_interval must be positive")
        if self.early_stop_window < 1:
            raise ConfigError("TrainSetup: early_stop_window must be positive")


@dataclass
class History:
    """Per-logged-epoch loss breakdowns and center snapshots."""

    epochs: list = dc_field(default_factory=list)
    breakdowns: list = dc_field(default_factory=list)
    gammas: list = dc_field(default_factory=list)

    def log(self, epoch: int, breakdown: LossBreakdown, gamma: np.ndarray):
        self.epochs.append(int(epoch))
        self.breakdowns.append(breakdown)
        self.gammas.append(np.array(gamma, dtype=np.float64))


def init_state(mlp: MlpConfig, gamma_init: np.ndarray, seed: int) -> TrainState:
    """Fresh state: He-initialized weights, given centers, zero moments."""
    gamma = np.atleast_2d(np.asarray(gamma_init, dtype=np.float64)).copy()
    if gamma.size and gamma.shape[1] != 2:
        raise ConfigError("init_state: gamma must be (P, 2)")
    params = he_init(mlp, seed)
    leaves = []
    for w, b in params:
        leaves.append(w)
        leaves.append(b)
    leaves.append(gamma)
    return TrainState(
        params=params,
        gamma=gamma,
        m=[np.zeros_like(x) for x in leaves],
        v=[np.zeros_like(x) for x in leaves],
        epoch=0,
    )


def adam_step(state: TrainState, grads: list, cfg: AdamConfig) -> TrainState:
    """One bias-corrected Adam update over all leaves; returns a new state.

    ``grads`` aligns with ``state.leaves()``. The last leaf (the center
    block) uses the center learning rate.
    """
    leaves = state.leaves()
    if len(grads) != len(leaves):
        raise ConfigError("adam_step: gradient count does not match leaves")
    t = state.epoch + 1
    c1 = 1.0 - cfg.beta1 ** t
    c2 = 1.0 - cfg.beta2 ** t
    new_leaves, new_m, new_v = [], [], []
    for i, (leaf, g) in enumerate(zip(leaves, grads)):
        lr = cfg.center_lr if i == len(leaves) - 1 else cfg.learning_rate
        m = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * g
        v = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * g * g
        step = lr * (m / c1) / (np.sqrt(v / c2) + cfg.eps)
        new_leaves.append(leaf - step)
        new_m.append(m)
        new_v.append(v)
    params = []
    for layer in range(len(state.params)):
        params.append((new_leaves[2 * layer], new_leaves[2 * layer + 1]))
    return TrainState(
        params=params,
        gamma=new_leaves[-1],
        m=new_m,
        v=new_v,
        epoch=state.epoch + 1,
    )


def loss_and_grads(state: TrainState, samples: SampleSet, setup: TrainSetup,
                   want_grads: bool = True):
    """Breakdown of the objective and, optionally, d(total)/d(leaf).

    Term expressions are consumed one at a time: each gets its own
    reverse pass and is then released, so peak memory is a single
    collocation chunk's graph.
    """
    var_params = [(Var(w), Var(b)) for w, b in state.params]
    gvars = [(Var(state.gamma[p, 0]), Var(state.gamma[p, 1]))
             for p in range(state.n_patches)]
    field = as_field(var_params, setup.normalizer, setup.mlp)
    leaf_vars = []
    for wv, bv in var_params:
        leaf_vars.append(wv)
        leaf_vars.append(bv)
    leaf_vars.extend(v for pair in gvars for v in pair)

    breakdown = LossBreakdown()
    grads = [np.zeros_like(x) for x in state.leaves()] if want_grads else None
    n_theta = 2 * len(state.params)
    for name, scale, expr in loss_terms(field, gvars, samples, setup.ctx):
        breakdown_value = scale * (float(expr.value) if isinstance(expr, Var)
                                   else float(expr))
        setattr(breakdown, name, getattr(breakdown, name) + breakdown_value)
        if not want_grads or not isinstance(expr, Var):
            continue
        coeff = term_weight(name, setup.ctx.weights) * scale
        if coeff == 0.0:
            continue
        term_grads = ad.gradients(expr, leaf_vars)
        for i in range(n_theta):
            grads[i] += coeff * term_grads[i]
        for p in range(state.n_patches):
            grads[-1][p, 0] += coeff * float(term_grads[n_theta + 2 * p])
            grads[-1][p, 1] += coeff * float(term_grads[n_theta + 2 * p + 1])
    w = setup.ctx.weights
    breakdown.total = (w.pde * breakdown.pde + w.boundary * breakdown.boundary
                       + w.data * breakdown.data
                       + w.topology * (breakdown.topo_fixed + breakdown.topo_overlap))
    return breakdown, grads


def early_stop_check(history: History, window: int, tol: float) -> bool:
    """True when the last ``window`` center snapshots each moved < tol (sup norm).

    Never triggers before ``window + 1`` snapshots exist, and a zero or
    negative tolerance disables the check.
    """
    if window < 1:
        raise ConfigError("early_stop_check: window must be positive")
    if tol <= 0.0:
        return False
    g = history.gammas
    if len(g) < window + 1:
        return False
    for a, b in zip(g[-window - 1:-1], g[-window:]):
        if a.size == 0:
            return False
        if np.max(np.abs(b - a)) >= tol:
            return False
    return True


def train(state: TrainState, samples: SampleSet, setup: TrainSetup):
    """Run the training loop; returns the final state and the history.

    Logs the breakdown and center snapshot at epoch 0, every
    ``log_interval`` epochs, and at the final epoch. Raises
    :class:`~topopinn.errors.DivergenceError` when the total exceeds the
    divergence limit or becomes non-finite. With ``epochs == 0`` the
    state is returned unchanged with its initial breakdown logged.
    """
    history = History()
    stopped = False
    for _ in range(setup.epochs):
        breakdown, grads = loss_and_grads(state, samples, setup)
        _guard(breakdown.total, state.epoch, setup.divergence_limit)
        if (state.epoch % setup.log_interval) == 0:
            history.log(state.epoch, breakdown, state.gamma)
            if early_stop_check(history, setup.early_stop_window, setup.early_stop_tol):
                stopped = True
                break
        state = adam_step(state, grads, setup.adam)
    if not stopped:
        breakdown, _ = loss_and_grads(state, samples, setup, want_grads=False)
        _guard(breakdown.total, state.epoch, setup.divergence_limit)
        history.log(state.epoch, breakdown, state.gamma)
    return state, history


def _guard(total: float, epoch: int, limit: float):
    if not np.isfinite(total) or total > limit:
        raise DivergenceError(epoch, total)


# ---------------------------------------------------------------------------
# checkpoints


def checkpoint_save(path, state: TrainState, mlp: MlpConfig,
                    normalizer: Normalizer, meta: dict | None = None):
    """Write a versioned little-endian checkpoint (see module docstring)."""
    header = {
        "format_version": _VERSION,
        "mlp": mlp.to_dict(),
        "normalizer": normalizer.to_dict(),
        "n_patches": int(state.n_patches),
        "epoch": int(state.epoch),
        "meta": meta or {},
    }
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    arrays = state.leaves() + state.m + state.v
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<IQ", _VERSION, len(blob)))
        fh.write(blob)
        for a in arrays:
            fh.write(np.ascontiguousarray(a, dtype="<f8").tobytes())


def checkpoint_load(path, expect_mlp: MlpConfig | None = None):
    """Read a checkpoint; returns (state, mlp, normalizer, meta).

    Raises :class:`~topopinn.errors.CheckpointError` on truncation, bad
    magic, unknown version, or (when ``expect_mlp`` is given) a config
    that does not match the stored one.
    """
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from exc
    if len(raw) < 16 or raw[:4] != _MAGIC:
        raise CheckpointError(f"{path}: not a checkpoint file")
    version, hlen = struct.unpack("<IQ", raw[4:16])
    if version != _VERSION:
        raise CheckpointError(f"{path}: unsupported format version {version}")
    if len(raw) < 16 + hlen:
        raise CheckpointError(f"{path}: truncated header")
    try:
        header = json.loads(raw[16:16 + hlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"{path}: corrupt header") from exc
    mlp = MlpConfig.from_dict(header["mlp"])
    if expect_mlp is not None and mlp != expect_mlp:
        raise CheckpointError(
            f"{path}: checkpoint architecture {mlp} does not match expected {expect_mlp}")
    normalizer = Normalizer.from_dict(header["normalizer"])
    n_patches = int(header["n_patches"])
    shapes = []
    for fan_in, fan_out in mlp.layer_sizes():
        shapes.append((fan_in, fan_out))
        shapes.append((fan_out,))
    shapes.append((n_patches, 2))
    shapes = shapes * 3  # leaves, then m, then v
    need = sum(int(np.prod(s)) for s in shapes) * 8
    payload = raw[16 + hlen:]
    if len(payload) != need:
        raise CheckpointError(
            f"{path}: payload has {len(payload)} bytes, expected {need} (truncated or corrupt)")
    arrays = []
    off = 0
    for s in shapes:
        count = int(np.prod(s))
        arrays.append(np.frombuffer(payload, dtype="<f8", count=count,
                                    offset=off).reshape(s).astype(np.float64))
        off += count * 8
    n_leaves = len(shapes) // 3
    leaves = arrays[:n_leaves]
    m = arrays[n_leaves:2 * n_leaves]
    v = arrays[2 * n_leaves:]
    params = []
    for layer in range(mlp.hidden_layers + 1):
        params.append((leaves[2 * layer], leaves[2 * layer + 1]))
    state = TrainState(params=params, gamma=leaves[-1], m=m, v=v,
                       epoch=int(header["epoch"]))
    return state, mlp, normalizer, header.get("meta", {})


# ---------------------------------------------------------------------------
# run logs


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def write_loss_csv(path, history: History):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("epoch,total,pde,bc,data,topo_fixed,topo_overlap\n")
        for epoch, bd in zip(history.epochs, history.breakdowns):
            fh.write(",".join([str(epoch)] + [_fmt(v) for v in bd.as_row()]) + "\n")


def write_gamma_csv(path, history: History):
    n = history.gammas[0].shape[0] if history.gammas else 0
    cols = [f"x{i},y{i}" for i in range(n)]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(["epoch"] + cols) + "\n")
        for epoch, g in zip(history.epochs, history.gammas):
            fh.write(",".join([str(epoch)] + [_fmt(v) for v in g.ravel()]) + "\n")
