"""Polynomial window functions built from Hermite-type constraints.

Each family is defined on the normalized coordinate ``tau in [0, 1]`` by a
list of (point, derivative order, value) conditions.  The minimal-degree
polynomial meeting them is found by exact rational elimination, so any
vanishing order ``k`` is available.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .autodiff import Jet2, KinkError

INTERIOR = "interior"
DIRICHLET = "dirichlet"
NEUMANN = "neumann"
KINDS = (INTERIOR, DIRICHLET, NEUMANN)


class WindowConstructionError(ValueError):
    pass


class Polynomial:
    """Dense polynomial with ascending coefficients."""

    def __init__(self, coeffs):
        c = np.asarray(coeffs, dtype=float)
        if c.ndim != 1 or c.size == 0:
            raise ValueError("coefficients must be a non-empty vector")
        self.coeffs = c

    @property
    def degree(self):
        return self.coeffs.size - 1

    def derivative(self, order=1) -> "Polynomial":
        c = self.coeffs
        for _ in range(order):
            c = c[1:] * np.arange(1, c.size) if c.size > 1 else np.zeros(1)
        return Polynomial(c)

    def __call__(self, t):
        return np.polynomial.polynomial.polyval(t, self.coeffs)

    def eval2(self, t):
        """Value, first and second derivative at ``t``."""
        return self(t), self.derivative(1)(t), self.derivative(2)(t)

    def __repr__(self):
        return f"Polynomial({self.coeffs.tolist()})"


def constraint_table(kind: str, k: int):
    """Conditions ``(tau, derivative order, value)`` for a window family."""
    if kind not in KINDS:
        raise WindowConstructionError(f"unknown window kind {kind!r}")
    if int(k) != k or k < 1:
        raise WindowConstructionError("vanishing order k must be a positive integer")
    if kind == INTERIOR:
        rows = [(0, 0, 1)] + [(0, d, 0) for d in range(1, k + 1)] + [(1, 0, 0), (1, 1, 0)]
    elif kind == DIRICHLET:
        rows = [(0, 0, 1), (0, 1, 0)] + [(1, d, 0) for d in range(k + 1)]
    else:
        rows = [(0, 0, 0), (0, 1, 1)] + [(1, d, 0) for d in range(k + 1)]
    return rows


def _falling(j, d):
    out = 1
    for i in range(d):
        out *= j - i
    return out


def _solve_exact(a, b):
    """Gaussian elimination with partial pivoting over the rationals."""
    n = len(a)
    m = [row[:] + [rhs] for row, rhs in zip(a, b)]
    for col in range(n):
        piv = max(range(col, n), key=lambda r: abs(m[r][col]))
        if m[piv][col] == 0:
            raise WindowConstructionError("singular window constraint system")
        m[col], m[piv] = m[piv], m[col]
        for r in range(col + 1, n):
            f = m[r][col] / m[col][col]
            if f:
                m[r] = [x - f * y for x, y in zip(m[r], m[col])]
    x = [Fraction(0)] * n
    for r in range(n - 1, -1, -1):
        s = m[r][n] - sum(m[r][c] * x[c] for c in range(r + 1, n))
        x[r] = s / m[r][r]
    return x


@lru_cache(maxsize=None)
def window_coefficients(kind: str, k: int) -> tuple:
    """Exact rational coefficients of the window polynomial."""
    rows = constraint_table(kind, k)
    n = len(rows)
    a = [[Fraction(_falling(j, d)) * Fraction(t) ** (j - d) if j >= d else Fraction(0) for j in range(n)]
         for t, d, _ in rows]
    b = [Fraction(v) for _, _, v in rows]
    return tuple(_solve_exact(a, b))


def make_window(kind: str, k: int) -> Polynomial:
    return Polynomial([float(c) for c in window_coefficients(kind, int(k))])


@dataclass(frozen=True)
class WindowSpec:
    """A placed window.

    ``normal_sign`` is the sign of the outward normal for Neumann-type
    windows at a boundary.  ``normal_sign=0`` marks an interface window: the
    outward normal of whichever side contains ``x`` is used, which makes the
    window odd about its center with unit slope there.
    """

    kind: str
    k: int
    center: float
    half_width: float
    normal_sign: int = 1

    def __post_init__(self):
        if self.kind not in KINDS:
            raise WindowConstructionError(f"unknown window kind {self.kind!r}")
        if self.k < 1:
            raise WindowConstructionError("k must be >= 1")
        if not self.half_width > 0:
            raise WindowConstructionError("half_width must be positive")
        if self.normal_sign not in (-1, 0, 1):
            raise WindowConstructionError("normal_sign must be -1, 0 or +1")

    @property
    def poly(self) -> Polynomial:
        return make_window(self.kind, self.k)


def eval_window(spec: WindowSpec, x: Jet2, poly: Polynomial | None = None, side=None) -> Jet2:
    """Evaluate a placed window on a jet with numeric fields.

    Points exactly at the center need a side (``+1`` right, ``-1`` left)
    whenever the window is not smooth there; otherwise ``KinkError`` is
    raised.  Outside the support every field is exactly zero.
    """
    poly = poly or spec.poly
    xv = np.asarray(x.value, dtype=float)
    h = spec.half_width
    s = xv - spec.center
    sgn = np.sign(s)
    at_center = sgn == 0
    if np.any(at_center):
        if side is not None:
            sgn = np.where(at_center, np.broadcast_to(np.asarray(side, dtype=float), sgn.shape), sgn)
        else:
            d1 = poly.derivative(1)(0.0)
            if spec.kind == NEUMANN or d1 != 0:
                raise KinkError(f"{spec.kind} window requested exactly at its center {spec.center}")
            sgn = np.where(at_center, 1.0, sgn)
    tau = np.abs(s) / h
    p0, p1, p2 = poly.eval2(tau)
    dtau1 = sgn / h
    if spec.kind == NEUMANN:
        ns = -sgn if spec.normal_sign == 0 else spec.normal_sign
        scale = -ns * h
        p0, p1, p2 = scale * p0, scale * p1, scale * p2
    inside = tau < 1.0
    v = np.where(inside, p0, 0.0)
    w1 = np.where(inside, p1 * dtau1, 0.0)
    w2 = np.where(inside, p2 * dtau1 * dtau1, 0.0)
    # tau is affine in x on each side, so tau'' = 0 there
    d1 = 0.0 if _is_zero(x.d1) else w1 * x.d1
    d2 = _add0(0.0 if _is_zero(x.d2) else w1 * x.d2, 0.0 if _is_zero(x.d1) else w2 * x.d1 * x.d1)
    if np.ndim(v) == 0:
        v = float(v)
    return Jet2(v, d1, d2)


def _is_zero(a):
    return isinstance(a, (int, float)) and a == 0


def _add0(a, b):
    if _is_zero(a):
        return b
    if _is_zero(b):
        return a
    return a + b


def window_samples(kind: str, k: int, n: int = 101):
    """Rows ``(tau, w, dw, d2w)`` on a uniform grid over [0, 1]."""
    poly = make_window(kind, k)
    tau = np.linspace(0.0, 1.0, n)
    w, dw, d2w = poly.eval2(tau)
    return np.column_stack([tau, w, dw, d2w])


def window_samples_csv(kind: str, k: int, n: int = 101) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["tau", "w", "dw", "d2w"])
    for row in window_samples(kind, k, n):
        writer.writerow([repr(float(v)) for v in row])
    return buf.getvalue()
