"""Small automatic-differentiation engine.

Two layers live here:

* ``Var`` / ``Tape``: reverse mode over numpy arrays.  Every operation on a
  ``Var`` appends a node to the owning tape, so the node list is in
  topological order by construction and the backward sweep is a single
  reverse pass.
* ``Jet2``: truncated second-order Taylor arithmetic (value, first and second
  directional derivative).  Jet fields may be floats, ndarrays or ``Var``s,
  which is how spatial derivatives of the PDE residual stay differentiable
  with respect to the network parameters.
"""

from __future__ import annotations

import math
from typing import Callable, Sequence

import numpy as np
import scipy.linalg
from scipy import special

__all__ = [
    "EvaluationError",
    "KinkError",
    "NanError",
    "Var",
    "Tape",
    "Jet2",
    "jet2_eval",
    "grad_params",
    "value_and_grad",
    "tanh",
    "exp",
    "erf",
    "sigmoid",
    "sqrt",
    "absolute",
    "lu_solve",
    "concatenate",
    "value_of",
]


class EvaluationError(ArithmeticError):
    """Raised when a primitive cannot be evaluated (e.g. division by zero)."""

    def __init__(self, message, node=None):
        super().__init__(message if node is None else f"{message} (node {node})")
        self.node = node


class KinkError(EvaluationError):
    """A derivative was requested exactly at the kink of ``|x|``."""


class NanError(EvaluationError):
    """A NaN appeared during the forward sweep."""


# ---------------------------------------------------------------------------
# reverse mode
# ---------------------------------------------------------------------------


def _unbroadcast(g, shape):
    if np.shape(g) == shape:
        return g
    g = np.asarray(g)
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for ax, n in enumerate(shape):
        if n == 1 and g.shape[ax] != 1:
            g = g.sum(axis=ax, keepdims=True)
    return g


class Tape:
    """Append-only node list.  Parents always precede their children."""

    def __init__(self):
        self.nodes: list[Var] = []
        self.inputs: dict[str, int] = {}

    def input(self, value, name="theta") -> "Var":
        v = Var(np.array(value, dtype=float), self, "input", (), None)
        self.inputs[name] = v.index
        return v

    def _first_nan(self, upto):
        for node in self.nodes[: upto + 1]:
            if np.isnan(node.value).any():
                return node
        return None

    def gradient(self, root: "Var", wrt: "Var | Sequence[Var]"):
        if root.tape is not self:
            raise ValueError("root does not belong to this tape")
        if np.size(root.value) != 1:
            raise ValueError("gradient requires a scalar root")
        if np.isnan(root.value).any():
            bad = self._first_nan(root.index)
            raise NanError(f"NaN produced by '{bad.op}'", node=bad.index)
        grads: list = [None] * (root.index + 1)
        grads[root.index] = np.ones_like(root.value)
        for i in range(root.index, -1, -1):
            g = grads[i]
            if g is None:
                continue
            node = self.nodes[i]
            if node.backward is None:
                continue
            for parent, pg in zip(node.parents, node.backward(g)):
                if pg is None:
                    continue
                j = parent.index
                grads[j] = pg if grads[j] is None else grads[j] + pg
        single = isinstance(wrt, Var)
        targets = [wrt] if single else list(wrt)
        out = []
        for t in targets:
            g = grads[t.index] if t.index < len(grads) else None
            out.append(np.zeros_like(t.value) if g is None else np.asarray(g, dtype=float))
        return out[0] if single else out


class Var:
    """An ndarray-valued node on a ``Tape``."""

    __slots__ = ("value", "tape", "op", "parents", "backward", "index")
    __array_ufunc__ = None

    def __init__(self, value, tape, op, parents, backward):
        self.value = value
        self.tape = tape
        self.op = op
        self.parents = parents
        self.backward = backward
        self.index = len(tape.nodes)
        tape.nodes.append(self)

    # -- helpers --------------------------------------------------------
    @property
    def shape(self):
        return np.shape(self.value)

    @property
    def ndim(self):
        return np.ndim(self.value)

    def __len__(self):
        return len(self.value)

    def __repr__(self):
        return f"Var(op={self.op}, shape={self.shape})"

    def _new(self, value, op, parents, backward):
        return Var(value, self.tape, op, parents, backward)

    # -- arithmetic -------------------------------------------------------
    def __add__(self, other):
        if isinstance(other, Var):
            sa, sb = self.shape, other.shape
            return self._new(
                self.value + other.value, "add", (self, other),
                lambda g: (_unbroadcast(g, sa), _unbroadcast(g, sb)),
            )
        sa = self.shape
        return self._new(self.value + other, "add", (self,), lambda g: (_unbroadcast(g, sa),))

    __radd__ = __add__

    def __neg__(self):
        return self._new(-self.value, "neg", (self,), lambda g: (-g,))

    def __sub__(self, other):
        if isinstance(other, Var):
            sa, sb = self.shape, other.shape
            return self._new(
                self.value - other.value, "sub", (self, other),
                lambda g: (_unbroadcast(g, sa), -_unbroadcast(g, sb)),
            )
        sa = self.shape
        return self._new(self.value - other, "sub", (self,), lambda g: (_unbroadcast(g, sa),))

    def __rsub__(self, other):
        sa = self.shape
        return self._new(other - self.value, "rsub", (self,), lambda g: (-_unbroadcast(g, sa),))

    def __mul__(self, other):
        if isinstance(other, Var):
            a, b = self.value, other.value
            return self._new(
                a * b, "mul", (self, other),
                lambda g: (_unbroadcast(g * b, np.shape(a)), _unbroadcast(g * a, np.shape(b))),
            )
        sa = self.shape
        return self._new(self.value * other, "mul", (self,), lambda g: (_unbroadcast(g * other, sa),))

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Var):
            if np.any(other.value == 0):
                raise EvaluationError("division by zero", node=other.index)
            a, b = self.value, other.value
            out = a / b
            return self._new(
                out, "div", (self, other),
                lambda g: (_unbroadcast(g / b, np.shape(a)), _unbroadcast(-g * out / b, np.shape(b))),
            )
        if np.any(np.asarray(other) == 0):
            raise EvaluationError("division by zero", node=self.index)
        sa = self.shape
        return self._new(self.value / other, "div", (self,), lambda g: (_unbroadcast(g / other, sa),))

    def __rtruediv__(self, other):
        if np.any(self.value == 0):
            raise EvaluationError("division by zero", node=self.index)
        out = other / self.value
        sa, b = self.shape, self.value
        return self._new(out, "rdiv", (self,), lambda g: (_unbroadcast(-g * out / b, sa),))

    def __pow__(self, p):
        if isinstance(p, Var):
            raise TypeError("only constant exponents are supported")
        a = self.value
        return self._new(a**p, "pow", (self,), lambda g: (g * p * a ** (p - 1),))

    def __matmul__(self, other):
        if isinstance(other, Var):
            a, b = self.value, other.value

            def back(g):
                ga = np.outer(g, b) if b.ndim == 1 else g @ b.T
                gb = a.T @ g if a.ndim == 2 else np.outer(a, g)
                return ga, gb

            return self._new(a @ b, "matmul", (self, other), back)
        a = self.value
        b = np.asarray(other)
        return self._new(a @ b, "matmul", (self,), lambda g: (np.outer(g, b) if b.ndim == 1 else g @ b.T,))

    def __rmatmul__(self, other):
        a = np.asarray(other)
        b = self.value
        return self._new(a @ b, "matmul", (self,), lambda g: (a.T @ g if a.ndim == 2 else np.outer(a, g),))

    # -- structure ----------------------------------------------------------
    @property
    def T(self):
        return self._new(self.value.T, "transpose", (self,), lambda g: (g.T,))

    def reshape(self, *shape):
        old = self.shape
        return self._new(self.value.reshape(*shape), "reshape", (self,), lambda g: (np.reshape(g, old),))

    def __getitem__(self, idx):
        old = self.shape

        def back(g):
            out = np.zeros(old)
            if isinstance(idx, slice):
                out[idx] = g  # plain slices never repeat an index
            else:
                np.add.at(out, idx, g)
            return (out,)

        return self._new(self.value[idx], "getitem", (self,), back)

    def sum(self, axis=None):
        old = self.shape
        if axis is None:
            return self._new(np.sum(self.value), "sum", (self,), lambda g: (np.full(old, g),))

        def back(g):
            return (np.broadcast_to(np.expand_dims(g, axis), old).copy(),)

        return self._new(np.sum(self.value, axis=axis), "sum", (self,), back)


def value_of(x):
    """Strip tape wrappers: the numeric value of a Var/Jet2 field."""
    return x.value if isinstance(x, Var) else x


def _unary(x, fwd, dfwd, op):
    if isinstance(x, Var):
        out = fwd(x.value)
        d = dfwd(x.value, out)
        return x._new(out, op, (x,), lambda g: (g * d,))
    return fwd(np.asarray(x, dtype=float)) if not np.isscalar(x) else fwd(x)


def tanh(x):
    return _unary(x, np.tanh, lambda a, t: 1.0 - t * t, "tanh")


def exp(x):
    return _unary(x, np.exp, lambda a, e: e, "exp")


def erf(x):
    return _unary(x, special.erf, lambda a, e: (2.0 / math.sqrt(math.pi)) * np.exp(-a * a), "erf")


def sigmoid(x):
    return _unary(x, special.expit, lambda a, s: s * (1.0 - s), "sigmoid")


def sqrt(x):
    if np.any(value_of(x) < 0):
        raise EvaluationError("sqrt of a negative number", node=getattr(x, "index", None))
    return _unary(x, np.sqrt, lambda a, s: 0.5 / s, "sqrt")


def absolute(x):
    if np.any(value_of(x) == 0):
        raise KinkError("|x| differentiated at its kink", node=getattr(x, "index", None))
    return _unary(x, np.abs, lambda a, s: np.sign(a), "abs")


def lu_solve(lu_piv, b):
    """Solve ``A c = b`` for a fixed, pre-factorized ``A``.

    ``A`` is treated as a constant, so only ``b`` receives a gradient
    (``A^{-T} g``).
    """
    if isinstance(b, Var):
        out = scipy.linalg.lu_solve(lu_piv, b.value)
        return b._new(out, "lu_solve", (b,), lambda g: (scipy.linalg.lu_solve(lu_piv, g, trans=1),))
    return scipy.linalg.lu_solve(lu_piv, np.asarray(b, dtype=float))


def concatenate(parts):
    """Concatenate 1-D pieces; any of them may be a Var."""
    owner = next((p for p in parts if isinstance(p, Var)), None)
    values = [np.atleast_1d(value_of(p)) for p in parts]
    out = np.concatenate(values)
    if owner is None:
        return out
    sizes = np.cumsum([len(v) for v in values])[:-1]
    var_parents = tuple(p for p in parts if isinstance(p, Var))
    is_var = [isinstance(p, Var) for p in parts]

    shapes = [np.shape(p.value) for p in var_parents]

    def back(g):
        pieces = [pc for pc, flag in zip(np.split(g, sizes), is_var) if flag]
        return tuple(pc.reshape(s) for pc, s in zip(pieces, shapes))

    return owner._new(out, "concat", var_parents, back)


# ---------------------------------------------------------------------------
# forward jets
# ---------------------------------------------------------------------------


def _zero(a):
    return isinstance(a, (int, float)) and a == 0


def _add(a, b):
    if _zero(a):
        return b
    if _zero(b):
        return a
    return a + b


def _sub(a, b):
    if _zero(b):
        return a
    if _zero(a):
        return -b
    return a - b


def _mul(a, b):
    if _zero(a) or _zero(b):
        return 0.0
    return a * b


class Jet2:
    """Value with first and second derivative along one direction."""

    __slots__ = ("value", "d1", "d2")
    __array_ufunc__ = None

    def __init__(self, value, d1=0.0, d2=0.0):
        self.value = value
        self.d1 = d1
        self.d2 = d2

    @classmethod
    def constant(cls, c):
        return cls(c, 0.0, 0.0)

    @classmethod
    def variable(cls, x):
        return cls(x, 1.0, 0.0)

    def __repr__(self):
        return f"Jet2({value_of(self.value)!r}, {value_of(self.d1)!r}, {value_of(self.d2)!r})"

    def numeric(self):
        """(value, d1, d2) as plain numbers/arrays."""
        return (value_of(self.value), value_of(self.d1), value_of(self.d2))

    # -- arithmetic -------------------------------------------------------
    def __add__(self, other):
        if isinstance(other, Jet2):
            return Jet2(_add(self.value, other.value), _add(self.d1, other.d1), _add(self.d2, other.d2))
        return Jet2(_add(self.value, other), self.d1, self.d2)

    __radd__ = __add__

    def __neg__(self):
        return Jet2(-self.value, _mul(-1.0, self.d1), _mul(-1.0, self.d2))

    def __sub__(self, other):
        if isinstance(other, Jet2):
            return Jet2(_sub(self.value, other.value), _sub(self.d1, other.d1), _sub(self.d2, other.d2))
        return Jet2(_sub(self.value, other), self.d1, self.d2)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Jet2):
            a, b = self, other
            d2 = _add(_add(_mul(a.d2, b.value), _mul(2.0, _mul(a.d1, b.d1))), _mul(a.value, b.d2))
            return Jet2(a.value * b.value, _add(_mul(a.d1, b.value), _mul(a.value, b.d1)), d2)
        return Jet2(self.value * other, _mul(self.d1, other), _mul(self.d2, other))

    __rmul__ = __mul__

    def reciprocal(self):
        v = self.value
        if np.any(value_of(v) == 0):
            raise EvaluationError("division by zero", node=getattr(v, "index", None))
        r = 1.0 / v
        r2 = r * r
        d1 = _mul(-1.0, _mul(self.d1, r2))
        d2 = _sub(_mul(2.0, _mul(_mul(self.d1, self.d1), r2 * r)), _mul(self.d2, r2))
        return Jet2(r, d1, d2)

    def __truediv__(self, other):
        if isinstance(other, Jet2):
            return self * other.reciprocal()
        if np.any(value_of(other) == 0):
            raise EvaluationError("division by zero")
        return self * (1.0 / other)

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __pow__(self, p):
        v = self.value
        if p == 0:
            return Jet2(v * 0.0 + 1.0)
        vp1 = v ** (p - 1) if p != 1 else 1.0
        vp2 = v ** (p - 2) if p not in (1, 2) else (1.0 if p == 2 else 0.0)
        d1 = _mul(_mul(p, vp1), self.d1)
        d2 = _add(_mul(_mul(p * (p - 1), vp2), _mul(self.d1, self.d1)), _mul(_mul(p, vp1), self.d2))
        return Jet2(v**p, d1, d2)

    def chain(self, f0, f1, f2):
        """Compose with a scalar function given its value/first/second derivative at self.value."""
        return Jet2(f0, _mul(f1, self.d1), _add(_mul(f2, _mul(self.d1, self.d1)), _mul(f1, self.d2)))

    # -- elementary functions -------------------------------------------
    def tanh(self):
        t = tanh(self.value)
        s = 1.0 - t * t
        return self.chain(t, s, -2.0 * t * s)

    def exp(self):
        e = exp(self.value)
        return self.chain(e, e, e)

    def erf(self):
        v = self.value
        g = (2.0 / math.sqrt(math.pi)) * exp(-(v * v))
        return self.chain(erf(v), g, -2.0 * v * g)

    def sigmoid(self):
        s = sigmoid(self.value)
        ds = s * (1.0 - s)
        return self.chain(s, ds, ds * (1.0 - 2.0 * s))

    def silu(self):
        s = sigmoid(self.value)
        ds = s * (1.0 - s)
        v = self.value
        return self.chain(v * s, s + v * ds, 2.0 * ds + v * ds * (1.0 - 2.0 * s))

    def sqrt(self):
        s = sqrt(self.value)
        if np.any(value_of(s) == 0):
            raise EvaluationError("sqrt differentiated at zero")
        return self.chain(s, 0.5 / s, -0.25 / (s * s * s))

    def __abs__(self):
        v = self.value
        vv = value_of(v)
        if np.any(vv == 0):
            raise KinkError("|x| jet requested at the kink x = 0", node=getattr(v, "index", None))
        sgn = np.sign(vv)
        return Jet2(absolute(v), _mul(sgn, self.d1), _mul(sgn, self.d2))


def jet_atan2(y: Jet2, x: Jet2) -> Jet2:
    """Polar angle with jets; inputs must not carry tape values."""
    yv, xv = np.asarray(y.value, float), np.asarray(x.value, float)
    r2 = xv * xv + yv * yv
    if np.any(r2 == 0):
        raise EvaluationError("atan2 differentiated at the origin")
    num = x.value * y.d1 - y.value * x.d1
    dnum = x.value * y.d2 - y.value * x.d2
    dr2 = 2.0 * (x.value * x.d1 + y.value * y.d1)
    d1 = num / r2
    d2 = (dnum * r2 - num * dr2) / (r2 * r2)
    return Jet2(np.arctan2(yv, xv), d1, d2)


def jet2_eval(f: Callable, x0, direction: int | None = None) -> Jet2:
    """Value, first and second derivative of ``f`` at ``x0`` along an axis.

    ``x0`` may be a scalar (``f`` receives one Jet2) or a sequence of
    coordinates (``f`` receives a list of Jet2, the ``direction`` entry
    being the active one).
    """
    if np.isscalar(x0):
        arg = Jet2.variable(float(x0))
    else:
        if direction is None:
            raise ValueError("direction is required for vector arguments")
        arg = [Jet2(float(v), 1.0 if i == direction else 0.0, 0.0) for i, v in enumerate(x0)]
    try:
        out = f(arg)
    except ZeroDivisionError as exc:
        raise EvaluationError(f"division by zero inside f: {exc}") from exc
    if not isinstance(out, Jet2):
        out = Jet2.constant(out)
    v, d1, d2 = out.numeric()
    return Jet2(float(v), float(d1), float(d2))


def value_and_grad(loss_builder: Callable[[Var], Var], theta):
    """Evaluate ``loss_builder`` on a fresh tape; return (loss, dloss/dtheta)."""
    tape = Tape()
    th = tape.input(theta)
    loss = loss_builder(th)
    if not isinstance(loss, Var):
        return float(loss), np.zeros_like(th.value)
    return float(loss.value), tape.gradient(loss, th)


def grad_params(loss_builder: Callable[[Var], Var], theta) -> np.ndarray:
    """Exact gradient of a scalar loss with respect to a flat parameter vector."""
    return value_and_grad(loss_builder, theta)[1]
