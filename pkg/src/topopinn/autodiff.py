"""Reverse-mode automatic differentiation with second-order spatial jets.

The engine has two layers:

``Var``
    A node in a reverse-mode tape over float64 numpy arrays. Every
    primitive records its parents together with a vector-Jacobian
    callback, and :func:`gradients` replays the tape backwards from a
    scalar root. Values are arrays so a single expression evaluates a
    whole batch of collocation points at once; the tape length scales
    with the expression, not with the point count.

``Jet``
    A truncated second-order Taylor expansion in the two spatial
    coordinates. Each component (value, first and second partials) is a
    ``Var``, so spatial derivatives produced by forward jet propagation
    remain differentiable: the reverse pass through a jet component
    yields exact derivatives of PDE residuals with respect to network
    weights and patch centers.

Structural zeros in jets are stored as ``None`` and skipped, which keeps
affine stages (input normalization, first network layer) cheap.

Domain violations (division by zero, log of a non-positive value, sqrt of
a negative value, fractional powers of negative bases) raise
:class:`~topopinn.errors.DomainError` naming the primitive and operand.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError

__all__ = [
    "Var",
    "Jet",
    "constant",
    "gradients",
    "spatial_jets",
    "eval_with_derivatives",
    "check_against_finite_differences",
    "DerivativeReport",
    "exp",
    "log",
    "sqrt",
    "tanh",
    "sigmoid",
    "sqrt_floor",
    "smooth_abs",
    "norm2",
    "sum_all",
    "mean_all",
    "matmul",
    "concat1d",
    "colstack",
    "getcol",
    "getrow",
    "maximum_const",
    "jexp",
    "jlog",
    "jsqrt",
    "jtanh",
    "jsigmoid",
    "jnorm2",
]

_NORM_FLOOR = 1e-12


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    """Reduce ``grad`` back to ``shape`` after numpy broadcasting."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad


class Var:
    """A value on the reverse-mode tape.

    ``value`` is always a float64 numpy array (possibly 0-d). Leaf
    variables have no parents; interior nodes keep ``(parent, vjp)``
    pairs consumed by :func:`gradients`.
    """

    __slots__ = ("value", "_parents")

    # keep numpy from absorbing us into object arrays; reflected
    # operators must win so the tape sees every operation
    __array_ufunc__ = None

    def __init__(self, value, _parents=()):
        self.value = np.asarray(value, dtype=np.float64)
        self._parents = _parents

    # ------------------------------------------------------------------
    @property
    def shape(self):
        return self.value.shape

    def __repr__(self):
        return f"Var({self.value!r})"

    # -- arithmetic ----------------------------------------------------
    def __add__(self, other):
        other = _as_var(other)
        a, b = self, other
        out = Var(a.value + b.value, (
            (a, lambda g: _unbroadcast(g, a.value.shape)),
            (b, lambda g: _unbroadcast(g, b.value.shape)),
        ))
        return out

    __radd__ = __add__

    def __sub__(self, other):
        other = _as_var(other)
        a, b = self, other
        return Var(a.value - b.value, (
            (a, lambda g: _unbroadcast(g, a.value.shape)),
            (b, lambda g: _unbroadcast(-g, b.value.shape)),
        ))

    def __rsub__(self, other):
        return _as_var(other).__sub__(self)

    def __mul__(self, other):
        other = _as_var(other)
        a, b = self, other
        av, bv = a.value, b.value
        return Var(av * bv, (
            (a, lambda g: _unbroadcast(g * bv, av.shape)),
            (b, lambda g: _unbroadcast(g * av, bv.shape)),
        ))

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = _as_var(other)
        a, b = self, other
        av, bv = a.value, b.value
        if np.any(bv == 0.0):
            raise DomainError("div", _first_offender(bv, bv == 0.0))
        inv = 1.0 / bv
        return Var(av * inv, (
            (a, lambda g: _unbroadcast(g * inv, av.shape)),
            (b, lambda g: _unbroadcast(-g * av * inv * inv, bv.shape)),
        ))

    def __rtruediv__(self, other):
        return _as_var(other).__truediv__(self)

    def __neg__(self):
        a = self
        return Var(-a.value, ((a, lambda g: -g),))

    def __pow__(self, p):
        if isinstance(p, Var):
            raise TypeError("power exponent must be a python/numpy constant")
        p = float(p)
        a = self
        av = a.value
        if not p.is_integer():
            if np.any(av < 0.0):
                raise DomainError("power", _first_offender(av, av < 0.0))
        if p < 0 and np.any(av == 0.0):
            raise DomainError("power", 0.0)
        out = av ** p
        dav = p * av ** (p - 1.0) if p != 0.0 else np.zeros_like(av)
        return Var(out, ((a, lambda g: _unbroadcast(g * dav, av.shape)),))


def _as_var(x) -> Var:
    return x if isinstance(x, Var) else Var(x)


def constant(value) -> Var:
    """Wrap a value as a leaf on the tape."""
    return Var(value)


def _first_offender(values: np.ndarray, mask) -> float:
    return float(np.asarray(values)[mask].ravel()[0]) if np.ndim(values) else float(values)


# ---------------------------------------------------------------------------
# unary primitives


def exp(v: Var) -> Var:
    v = _as_var(v)
    out = np.exp(v.value)
    return Var(out, ((v, lambda g: _unbroadcast(g * out, v.value.shape)),))


def log(v: Var) -> Var:
    v = _as_var(v)
    if np.any(v.value <= 0.0):
        raise DomainError("log", _first_offender(v.value, v.value <= 0.0))
    inv = 1.0 / v.value
    return Var(np.log(v.value), ((v, lambda g: _unbroadcast(g * inv, v.value.shape)),))


def sqrt(v: Var) -> Var:
    v = _as_var(v)
    if np.any(v.value < 0.0):
        raise DomainError("sqrt", _first_offender(v.value, v.value < 0.0))
    out = np.sqrt(v.value)
    return Var(out, ((v, lambda g: _unbroadcast(g * 0.5 / out, v.value.shape)),))


def tanh(v: Var) -> Var:
    v = _as_var(v)
    out = np.tanh(v.value)
    sech2 = 1.0 - out * out
    return Var(out, ((v, lambda g: _unbroadcast(g * sech2, v.value.shape)),))


def _sigmoid_values(x: np.ndarray) -> np.ndarray:
    # exp(-|x|) never overflows; both branches share it
    z = np.exp(-np.abs(x))
    return np.where(x >= 0.0, 1.0 / (1.0 + z), z / (1.0 + z))


def sigmoid(v: Var) -> Var:
    v = _as_var(v)
    out = _sigmoid_values(v.value)
    d = out * (1.0 - out)
    return Var(out, ((v, lambda g: _unbroadcast(g * d, v.value.shape)),))


def maximum_const(v: Var, floor: float) -> Var:
    """Clamp below at a constant; zero subgradient inside the clamp."""
    v = _as_var(v)
    active = (v.value > floor).astype(np.float64)
    return Var(np.maximum(v.value, floor),
               ((v, lambda g: _unbroadcast(g * active, v.value.shape)),))


def sqrt_floor(v: Var, floor: float) -> Var:
    """sqrt of the input clamped below at ``floor``; safe at zero."""
    v = _as_var(v)
    out = np.sqrt(np.maximum(v.value, floor))
    active = (v.value > floor).astype(np.float64)
    d = active * 0.5 / out
    return Var(out, ((v, lambda g: _unbroadcast(g * d, v.value.shape)),))


def smooth_abs(v: Var, eps: float = 1e-12) -> Var:
    """Differentiable |x| via sqrt(x^2 + eps)."""
    v = _as_var(v)
    return sqrt(v * v + eps)


def norm2(dx: Var, dy: Var, floor: float = _NORM_FLOOR) -> Var:
    """Euclidean norm of (dx, dy), floored at ``floor`` near the origin."""
    s = _as_var(dx) * dx + _as_var(dy) * dy
    return sqrt_floor(s, floor * floor)


# ---------------------------------------------------------------------------
# reductions and shape primitives


def sum_all(v: Var) -> Var:
    v = _as_var(v)
    shape = v.value.shape
    return Var(v.value.sum(), ((v, lambda g: np.broadcast_to(g, shape)),))


def mean_all(v: Var) -> Var:
    v = _as_var(v)
    shape = v.value.shape
    n = v.value.size
    return Var(v.value.mean(), ((v, lambda g: np.broadcast_to(g / n, shape)),))


def matmul(a: Var, b: Var) -> Var:
    a, b = _as_var(a), _as_var(b)
    av, bv = a.value, b.value
    return Var(av @ bv, (
        (a, lambda g: g @ bv.T),
        (b, lambda g: av.T @ g),
    ))


def colstack(a: Var, b: Var) -> Var:
    """Stack two (N,) vectors into an (N, 2) matrix."""
    a, b = _as_var(a), _as_var(b)
    return Var(np.stack([a.value, b.value], axis=1), (
        (a, lambda g: g[:, 0]),
        (b, lambda g: g[:, 1]),
    ))


def concat1d(parts: list) -> Var:
    """Concatenate (N_i,) vectors into one long vector."""
    parts = [_as_var(p) for p in parts]
    sizes = [p.value.size for p in parts]
    offsets = np.cumsum([0] + sizes)

    def make_vjp(lo, hi, shape):
        return lambda g: g[lo:hi].reshape(shape)

    parents = tuple(
        (p, make_vjp(int(offsets[i]), int(offsets[i + 1]), p.value.shape))
        for i, p in enumerate(parts)
    )
    return Var(np.concatenate([p.value.reshape(-1) for p in parts]), parents)


def getcol(m: Var, j: int) -> Var:
    mv = m.value

    def vjp(g):
        out = np.zeros_like(mv)
        out[:, j] = g
        return out

    return Var(mv[:, j], ((m, vjp),))


def getrow(m: Var, i: int) -> Var:
    mv = m.value

    def vjp(g):
        out = np.zeros_like(mv)
        out[i, :] = _unbroadcast(g, (mv.shape[1],))
        return out

    return Var(mv[i, :], ((m, vjp),))


# ---------------------------------------------------------------------------
# reverse pass


def _topo_order(root: Var) -> list:
    order: list = []
    visited: set = set()
    stack: list = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        nid = id(node)
        if nid in visited:
            continue
        visited.add(nid)
        stack.append((node, True))
        for parent, _ in node._parents:
            if id(parent) not in visited:
                stack.append((parent, False))
    return order


def gradients(root: Var, leaves) -> list:
    """Derivatives of a scalar ``root`` with respect to each leaf.

    Returns one array per leaf, shaped like the leaf value. Leaves the
    root does not depend on get exact zeros. Intermediate adjoints are
    freed as soon as they have been consumed.
    """
    if root.value.size != 1:
        raise ValueError("gradients: root must be scalar")
    wanted: dict = {}
    for i, leaf in enumerate(leaves):
        wanted.setdefault(id(leaf), []).append(i)
    results: list = [None] * len(leaves)
    order = _topo_order(root)
    adjoint = {id(root): np.ones_like(root.value)}
    for node in reversed(order):
        nid = id(node)
        g = adjoint.pop(nid, None)
        if g is None:
            continue
        slots = wanted.get(nid)
        if slots is not None:
            for i in slots:
                results[i] = np.array(np.broadcast_to(g, node.value.shape))
        for parent, vjp in node._parents:
            pg = vjp(g)
            pid = id(parent)
            if pid in adjoint:
                adjoint[pid] = adjoint[pid] + pg
            else:
                adjoint[pid] = pg
    for i, leaf in enumerate(leaves):
        if results[i] is None:
            results[i] = np.zeros_like(leaf.value)
    return results


# ---------------------------------------------------------------------------
# jets


def _nadd(a, b):
    if a is None:
        return b
    if b is None:
        return a
    return a + b


def _nmul(a, b):
    if a is None or b is None:
        return None
    return a * b


def _nneg(a):
    return None if a is None else -a


class Jet:
    """Second-order Taylor data in the two spatial coordinates.

    ``order`` is 0 (value only), 1 (plus fx, fy) or 2 (plus fxx, fxy,
    fyy). ``None`` components are structural zeros.
    """

    __slots__ = ("f", "fx", "fy", "fxx", "fxy", "fyy", "order")

    __array_ufunc__ = None

    def __init__(self, f, fx=None, fy=None, fxx=None, fxy=None, fyy=None, order=2):
        self.f = f
        self.fx = fx
        self.fy = fy
        self.fxx = fxx
        self.fxy = fxy
        self.fyy = fyy
        self.order = order

    def __repr__(self):
        return f"Jet(order={self.order}, f={self.f!r})"

    # -- coercion -------------------------------------------------------
    @staticmethod
    def _lift(x, order):
        if isinstance(x, Jet):
            return x
        return Jet(x, order=order)

    def _pair(self, other):
        other = Jet._lift(other, self.order)
        order = min(self.order, other.order)
        return other, order

    # -- arithmetic -----------------------------------------------------
    def __add__(self, other):
        b, order = self._pair(other)
        a = self
        out = Jet(a.f + b.f, order=order)
        if order >= 1:
            out.fx = _nadd(a.fx, b.fx)
            out.fy = _nadd(a.fy, b.fy)
        if order >= 2:
            out.fxx = _nadd(a.fxx, b.fxx)
            out.fxy = _nadd(a.fxy, b.fxy)
            out.fyy = _nadd(a.fyy, b.fyy)
        return out

    __radd__ = __add__

    def __sub__(self, other):
        b, order = self._pair(other)
        a = self
        out = Jet(a.f - b.f, order=order)
        if order >= 1:
            out.fx = _nadd(a.fx, _nneg(b.fx))
            out.fy = _nadd(a.fy, _nneg(b.fy))
        if order >= 2:
            out.fxx = _nadd(a.fxx, _nneg(b.fxx))
            out.fxy = _nadd(a.fxy, _nneg(b.fxy))
            out.fyy = _nadd(a.fyy, _nneg(b.fyy))
        return out

    def __rsub__(self, other):
        return Jet._lift(other, self.order).__sub__(self)

    def __neg__(self):
        a = self
        out = Jet(-a.f, order=a.order)
        if a.order >= 1:
            out.fx = _nneg(a.fx)
            out.fy = _nneg(a.fy)
        if a.order >= 2:
            out.fxx = _nneg(a.fxx)
            out.fxy = _nneg(a.fxy)
            out.fyy = _nneg(a.fyy)
        return out

    def __mul__(self, other):
        b, order = self._pair(other)
        a = self
        out = Jet(a.f * b.f, order=order)
        if order >= 1:
            out.fx = _nadd(_nmul(a.fx, b.f), _nmul(a.f, b.fx))
            out.fy = _nadd(_nmul(a.fy, b.f), _nmul(a.f, b.fy))
        if order >= 2:
            out.fxx = _nadd(_nadd(_nmul(a.fxx, b.f), _nmul(a.f, b.fxx)),
                            _nmul(2.0, _nmul(a.fx, b.fx)))
            out.fxy = _nadd(_nadd(_nmul(a.fxy, b.f), _nmul(a.f, b.fxy)),
                            _nadd(_nmul(a.fx, b.fy), _nmul(a.fy, b.fx)))
            out.fyy = _nadd(_nadd(_nmul(a.fyy, b.f), _nmul(a.f, b.fyy)),
                            _nmul(2.0, _nmul(a.fy, b.fy)))
        return out

    __rmul__ = __mul__

    def __truediv__(self, other):
        b, _ = self._pair(other)
        return self * _jet_reciprocal(b)

    def __rtruediv__(self, other):
        return Jet._lift(other, self.order).__truediv__(self)

    def __pow__(self, p):
        p = float(p)
        f = self.f
        val = f ** p
        if self.order == 0:
            return Jet(val, order=0)
        d1 = p * f ** (p - 1.0)
        d2 = p * (p - 1.0) * f ** (p - 2.0) if self.order >= 2 else None
        return _compose(self, val, d1, d2)


def _compose(u: Jet, val, d1, d2) -> Jet:
    """Chain rule for a scalar function applied to jet ``u``."""
    order = u.order
    out = Jet(val, order=order)
    if order >= 1:
        out.fx = _nmul(d1, u.fx)
        out.fy = _nmul(d1, u.fy)
    if order >= 2:
        out.fxx = _nadd(_nmul(d2, _nmul(u.fx, u.fx)), _nmul(d1, u.fxx))
        out.fxy = _nadd(_nmul(d2, _nmul(u.fx, u.fy)), _nmul(d1, u.fxy))
        out.fyy = _nadd(_nmul(d2, _nmul(u.fy, u.fy)), _nmul(d1, u.fyy))
    return out


def _jet_reciprocal(b: Jet) -> Jet:
    inv = 1.0 / _as_var(b.f) if isinstance(b.f, Var) else 1.0 / b.f
    if b.order == 0:
        return Jet(inv, order=0)
    d1 = -(inv * inv)
    d2 = 2.0 * inv * inv * inv if b.order >= 2 else None
    return _compose(b, inv, d1, d2)


def jexp(u: Jet) -> Jet:
    e = exp(_as_var(u.f))
    return _compose(u, e, e, e if u.order >= 2 else None)


def jlog(u: Jet) -> Jet:
    f = _as_var(u.f)
    val = log(f)
    d1 = 1.0 / f
    d2 = -(d1 * d1) if u.order >= 2 else None
    return _compose(u, val, d1, d2)


def jsqrt(u: Jet) -> Jet:
    f = _as_var(u.f)
    s = sqrt(f)
    d1 = 0.5 / s
    d2 = -(0.25) / (s * f) if u.order >= 2 else None
    return _compose(u, s, d1, d2)


def jtanh(u: Jet) -> Jet:
    t = tanh(_as_var(u.f))
    sech2 = 1.0 - t * t
    d2 = -2.0 * t * sech2 if u.order >= 2 else None
    return _compose(u, t, sech2, d2)


def jsigmoid(u: Jet) -> Jet:
    s = sigmoid(_as_var(u.f))
    d1 = s * (1.0 - s)
    d2 = d1 * (1.0 - 2.0 * s) if u.order >= 2 else None
    return _compose(u, s, d1, d2)


def jnorm2(dx: Jet, dy: Jet, floor: float = _NORM_FLOOR) -> Jet:
    """Floored Euclidean norm of two jets (see :func:`norm2`)."""
    s = dx * dx + dy * dy
    sf = _as_var(s.f)
    r = sqrt_floor(sf, floor * floor)
    if s.order == 0:
        return Jet(r, order=0)
    active = Var((sf.value > floor * floor).astype(np.float64))
    d1 = active * (0.5 / r)
    d2 = active * (-0.25 / (r * r * r)) if s.order >= 2 else None
    return _compose(s, r, d1, d2)


def spatial_jets(x, y, order: int = 2) -> tuple:
    """Seed the two spatial coordinates as jets.

    ``x`` and ``y`` may be arrays (fixed evaluation points) or ``Var``
    expressions (points that move with trainable parameters, e.g.
    boundary rings riding on a patch center). The unit seeds mark which
    coordinate each jet differentiates against.
    """
    X = Jet(_as_var(x), order=order)
    Y = Jet(_as_var(y), order=order)
    if order >= 1:
        X.fx = 1.0
        Y.fy = 1.0
    return X, Y


# ---------------------------------------------------------------------------
# evaluation helpers


@dataclass
class DerivativeReport:
    """Value plus exact first/second partials of a scalar expression."""

    value: float
    first: dict = field(default_factory=dict)
    second: dict = field(default_factory=dict)


def _root_var(expr) -> Var:
    return _as_var(expr.f) if isinstance(expr, Jet) else _as_var(expr)


def eval_with_derivatives(expr, seeds: dict) -> DerivativeReport:
    """Evaluate a scalar expression with its registered seeds.

    ``seeds`` maps names to the leaf ``Var``s (or spatial ``Jet``s) the
    expression was built from. First partials cover every seed via the
    reverse pass; second partials cover the spatial pair when ``expr``
    is an order-2 jet built from two spatial seeds.
    """
    root = _root_var(expr)
    if root.value.size != 1:
        raise ValueError("eval_with_derivatives: expression must be scalar")
    names = list(seeds)
    leaves = [s.f if isinstance(s, Jet) else s for s in seeds.values()]
    for leaf in leaves:
        if not isinstance(leaf, Var):
            raise TypeError("seeds must be Var leaves or spatial Jets")
    grads = gradients(root, leaves)
    first = {}
    for name, g in zip(names, grads):
        first[name] = float(g) if g.ndim == 0 else g
    report = DerivativeReport(value=root.value.item(), first=first)
    if isinstance(expr, Jet) and expr.order >= 2:
        jet_names = [n for n, s in seeds.items() if isinstance(s, Jet)]
        if len(jet_names) == 2:
            sx, sy = (seeds[n] for n in jet_names)
            if sx.fx is None and sy.fx is not None:
                jet_names = jet_names[::-1]
            nx, ny = jet_names

            def comp(c):
                return 0.0 if c is None else float(_as_var(c).value)

            report.second = {
                (nx, nx): comp(expr.fxx),
                (nx, ny): comp(expr.fxy),
                (ny, ny): comp(expr.fyy),
            }
    return report


def check_against_finite_differences(build, at: dict, step: float = 1e-5,
                                     rel_floor: float = 1e-12) -> float:
    """Compare reverse-mode first partials against central differences.

    ``build`` maps a dict of named ``Var`` leaves to a scalar expression
    (``Var`` or ``Jet``); ``at`` holds the evaluation values. Array seeds
    are perturbed entry by entry. Returns the maximum over all seed
    entries of ``|analytic - central| / max(|analytic|, rel_floor)``.
    """
    base = {k: np.asarray(v, dtype=np.float64) for k, v in at.items()}
    seeds = {k: Var(v) for k, v in base.items()}
    root = _root_var(build(seeds))
    if root.value.size != 1:
        raise ValueError("check_against_finite_differences: expression must be scalar")
    grads = dict(zip(base, gradients(root, [seeds[k] for k in base])))

    def value_at(vals: dict) -> float:
        return _root_var(build({k: Var(v) for k, v in vals.items()})).value.item()

    worst = 0.0
    for name, v0 in base.items():
        g_an = grads[name]
        it = np.nditer(v0, flags=["multi_index"]) if v0.ndim else [None]
        for entry in it:
            idx = it.multi_index if v0.ndim else ()
            plus = dict(base)
            minus = dict(base)
            vp = v0.copy()
            vm = v0.copy()
            vp[idx] += step
            vm[idx] -= step
            plus[name] = vp
            minus[name] = vm
            central = (value_at(plus) - value_at(minus)) / (2.0 * step)
            analytic = float(g_an[idx])
            rel = abs(analytic - central) / max(abs(analytic), rel_floor)
            worst = max(worst, rel)
    return worst
