"""Benchmark interface problems and their closed-form oracles.

All problems solve ``-div(kappa grad u) = f`` with piecewise-constant
``kappa``.  A point lying exactly on an interface belongs to the subdomain
on its right (1D) or to the lower-right subdomain (2D).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import special

DIRICHLET = "dirichlet"
NEUMANN = "neumann"
INTERFACE = "interface"


class MetricError(ValueError):
    pass


class DomainError(ValueError):
    pass


# ---------------------------------------------------------------------------
# 1D
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BoundaryCondition:
    """Condition at a 1D end point.  ``value`` is ``u`` (Dirichlet) or ``du/dx`` (Neumann)."""

    position: float
    kind: str
    value: float = 0.0


@dataclass
class ProblemSpec:
    """A 1D interface problem on ``[a, b]``."""

    name: str
    interfaces: tuple
    kappas: tuple
    left: BoundaryCondition
    right: BoundaryCondition
    source: Callable
    oracle: Callable | None = None
    dim: int = 1
    jumps: tuple = ()  # optional (h_d, h_n) per interface, windowing path only

    def __post_init__(self):
        self.interfaces = tuple(float(x) for x in self.interfaces)
        self.kappas = tuple(float(k) for k in self.kappas)
        if len(self.kappas) != len(self.interfaces) + 1:
            raise ValueError("need one kappa per subdomain")
        if any(k <= 0 for k in self.kappas):
            raise ValueError("kappa must be positive")
        nodes = (self.left.position,) + self.interfaces + (self.right.position,)
        if any(b <= a for a, b in zip(nodes[:-1], nodes[1:])):
            raise ValueError("interfaces must be strictly inside and increasing")

    @property
    def bounds(self):
        return self.left.position, self.right.position

    @property
    def n_subdomains(self):
        return len(self.kappas)

    @property
    def nodes(self):
        """Subdomain end points, left to right."""
        return (self.left.position,) + self.interfaces + (self.right.position,)

    def subdomain(self, x):
        x = np.asarray(x, dtype=float)
        a, b = self.bounds
        if np.any((x < a) | (x > b)):
            raise DomainError(f"point outside [{a}, {b}]")
        return np.searchsorted(np.asarray(self.interfaces), x, side="right")

    def kappa(self, x):
        return np.asarray(self.kappas)[self.subdomain(x)]

    def test_points(self, n=1001):
        a, b = self.bounds
        return np.linspace(a, b, n)


def _p1_coefficients(k1, k2, xi):
    a = np.array([
        [0.0, 1.0, 0.0, 0.0],
        [0.0, 0.0, 1.0 / k2, 1.0],
        [xi / k1, 1.0, -xi / k2, -1.0],
        [xi, 0.0, -xi, 0.0],
    ])
    b = np.array([0.0, 1.0 / (2 * k2), xi**2 / (2 * k1) - xi**2 / (2 * k2), 0.0])
    return np.linalg.solve(a, b)


def analytic_p1(x, k1=0.1, k2=1.0, x_itf=0.5):
    """Two-material bar, unit source, homogeneous Dirichlet ends."""
    c1, c2, c3, c4 = _p1_coefficients(k1, k2, x_itf)
    x = np.asarray(x, dtype=float)
    left = -(x**2) / (2 * k1) + c1 * x / k1 + c2
    right = -(x**2) / (2 * k2) + c3 * x / k2 + c4
    return np.where(x < x_itf, left, right)


def p2_coefficients(k1, k2, k3, k4):
    """Closed-form coefficients ``(K, c1, c3, c5, c7)`` for the three-interface bar."""
    big_k = k1 * k2 * k3 + k1 * k2 * k4 + k1 * k3 * k4 + k2 * k3 * k4
    c1 = 7 / 8 * k1 * k2 * k3 + 5 / 8 * k1 * k2 * k4 + 3 / 8 * k1 * k3 * k4 + 1 / 8 * k2 * k3 * k4
    c3 = (-3 / 16 * k1 * k2 * k3 - 1 / 8 * k1 * k2 * k4 - 1 / 16 * k1 * k3 * k4
          + 3 / 16 * k2**2 * k3 + 1 / 8 * k2**2 * k4 + 1 / 16 * k2 * k3 * k4)
    c5 = (-5 / 16 * k1 * k2 * k3 - 3 / 16 * k1 * k2 * k4 + 1 / 8 * k1 * k3**2
          + 3 / 16 * k2 * k3**2 + 3 / 16 * k2 * k3 * k4)
    c7 = -3 / 8 * k1 * k2 * k3 - 1 / 8 * k1 * k2 * k4 + 1 / 8 * k1 * k3 * k4 + 3 / 8 * k2 * k3 * k4
    return big_k, c1, c3, c5, c7


def analytic_p2(x, kappas=(0.1, 1.0, 0.1, 1.0)):
    """Four strips split at 0.25, 0.5, 0.75; unit source; zero Dirichlet ends."""
    k = [float(v) for v in kappas]
    big_k, c1, c3, c5, c7 = p2_coefficients(*k)
    x = np.asarray(x, dtype=float)
    m = np.searchsorted(np.array([0.25, 0.5, 0.75]), x, side="right")
    slope = np.array([c1, c1, c1, c1])[m]
    shift = np.array([0.0, c3, c5, c7])[m]
    km = np.asarray(k)[m]
    return -(x**2) / (2 * km) + slope * x / (big_k * km) + shift / (big_k * km)


@dataclass(frozen=True)
class P3Params:
    k1: float = 0.1
    k2: float = 1.0
    x_itf: float = 0.5
    f0: float = -0.05
    a: float = 1.0
    xc: float = 0.75
    w: float = 0.1


def p3_source(x, p: P3Params = P3Params()):
    x = np.asarray(x, dtype=float)
    return np.where(x < p.x_itf, p.f0, p.a * np.exp(-((x - p.xc) ** 2) / p.w**2))


def p3_F(x, p: P3Params = P3Params()):
    """Second antiderivative of the Gaussian source divided by ``k2``."""
    s = np.asarray(x, dtype=float) - p.xc
    return (p.a * p.w * math.sqrt(math.pi) / (2 * p.k2) * s * special.erf(s / p.w)
            + p.a * p.w**2 / (2 * p.k2) * np.exp(-(s**2) / p.w**2))


def p3_Fx(x, p: P3Params = P3Params()):
    s = np.asarray(x, dtype=float) - p.xc
    return p.a * p.w * math.sqrt(math.pi) / (2 * p.k2) * special.erf(s / p.w)


def p3_coefficients(p: P3Params = P3Params()):
    xi = p.x_itf
    a = np.array([
        [1.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 1.0 / p.k2, 1.0],
        [xi / p.k1, 1.0, -xi / p.k2, -1.0],
        [1.0, 0.0, -1.0, 0.0],
    ])
    b = np.array([
        0.0,
        float(p3_F(1.0, p)),
        p.f0 * xi**2 / (2 * p.k1) - float(p3_F(xi, p)),
        p.f0 * xi - p.k2 * float(p3_Fx(xi, p)),
    ])
    return np.linalg.solve(a, b)


def analytic_p3(x, p: P3Params = P3Params()):
    """Neumann-Dirichlet bar with a Gaussian source on the right half."""
    c1, c2, c3, c4 = p3_coefficients(p)
    x = np.asarray(x, dtype=float)
    left = -p.f0 * x**2 / (2 * p.k1) + c1 * x / p.k1 + c2
    right = -p3_F(x, p) + c3 * x / p.k2 + c4
    return np.where(x < p.x_itf, left, right)


def problem1(k1=0.1, k2=1.0):
    return ProblemSpec(
        "p1", (0.5,), (k1, k2),
        BoundaryCondition(0.0, DIRICHLET), BoundaryCondition(1.0, DIRICHLET),
        source=lambda x: np.ones_like(np.asarray(x, dtype=float)),
        oracle=lambda x: analytic_p1(x, k1, k2),
    )


def problem2(kappas=(0.1, 1.0, 0.1, 1.0)):
    kappas = tuple(kappas)
    return ProblemSpec(
        "p2", (0.25, 0.5, 0.75), kappas,
        BoundaryCondition(0.0, DIRICHLET), BoundaryCondition(1.0, DIRICHLET),
        source=lambda x: np.ones_like(np.asarray(x, dtype=float)),
        oracle=lambda x: analytic_p2(x, kappas),
    )


def problem3(k1=0.1, k2=1.0):
    p = P3Params(k1=k1, k2=k2)
    return ProblemSpec(
        "p3", (p.x_itf,), (k1, k2),
        BoundaryCondition(0.0, NEUMANN), BoundaryCondition(1.0, DIRICHLET),
        source=lambda x: p3_source(x, p),
        oracle=lambda x: analytic_p3(x, p),
    )


# ---------------------------------------------------------------------------
# 2D slanted-interface problem
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Segment:
    p0: tuple
    p1: tuple
    kind: str
    side: str  # "L", "R" or "LR" for the interface

    @property
    def length(self):
        return math.dist(self.p0, self.p1)

    @property
    def normal(self):
        """Unit normal: outward for boundary edges, L-to-R for the interface."""
        (x0, y0), (x1, y1) = self.p0, self.p1
        tx, ty = (x1 - x0) / self.length, (y1 - y0) / self.length
        # edges are stored counter-clockwise around their subdomain, and the
        # interface runs bottom to top, so the right-hand normal is the one we want
        return (ty, -tx)


@dataclass
class SlantedProblem:
    """Rectangle ``[0, 2] x [0, 1]`` split by the line ``x = xb + (xt - xb) y``."""

    kappa_left: float = 0.1
    kappa_right: float = 1.0
    xb: float = 0.8
    xt: float = 1.2
    centers: tuple = ((0.3, 0.6), (1.0, 0.2), (1.6, 0.7))
    radii: tuple = (0.08, 0.2, 0.1)
    amplitudes: tuple = (10.0, 20.0, 15.0)
    name: str = "p4"
    dim: int = 2
    oracle: Callable | None = field(default=None, repr=False)

    width: float = 2.0
    height: float = 1.0

    def level(self, x, y):
        """Signed distance to the interface, negative on the left (low-kappa) side."""
        return (np.asarray(x) - self.xb - (self.xt - self.xb) * np.asarray(y)) / self.interface_scale

    @property
    def interface_scale(self):
        return math.hypot(1.0, self.xt - self.xb)

    @property
    def interface_normal(self):
        """Unit normal pointing from the left subdomain into the right one."""
        s = self.interface_scale
        return (1.0 / s, -(self.xt - self.xb) / s)

    @property
    def interface_length(self):
        return math.hypot(self.xt - self.xb, self.height)

    def is_left(self, x, y):
        return self.level(x, y) < 0

    def subdomain(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        eps = 1e-12
        if np.any((x < -eps) | (x > self.width + eps) | (y < -eps) | (y > self.height + eps)):
            raise DomainError("point outside the rectangle")
        return np.where(self.is_left(x, y), 0, 1)

    def kappa(self, x, y):
        return np.where(self.is_left(x, y), self.kappa_left, self.kappa_right)

    @property
    def kappas(self):
        return (self.kappa_left, self.kappa_right)

    def source_terms(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        return [a * np.exp(-((x - cx) ** 2 + (y - cy) ** 2) / r**2)
                for (cx, cy), r, a in zip(self.centers, self.radii, self.amplitudes)]

    def source(self, x, y):
        return sum(self.source_terms(x, y))

    def segments(self):
        """Boundary and interface pieces; boundary edges counter-clockwise per side."""
        w, h, xb, xt = self.width, self.height, self.xb, self.xt
        return [
            Segment((0.0, 0.0), (xb, 0.0), NEUMANN, "L"),
            Segment((xt, h), (0.0, h), NEUMANN, "L"),
            Segment((0.0, h), (0.0, 0.0), NEUMANN, "L"),
            Segment((xb, 0.0), (w, 0.0), DIRICHLET, "R"),
            Segment((w, 0.0), (w, h), DIRICHLET, "R"),
            Segment((w, h), (xt, h), DIRICHLET, "R"),
            Segment((xb, 0.0), (xt, h), INTERFACE, "LR"),
        ]

    def boundary_kind(self, x, y):
        """Condition type at a boundary point (interface end points count as right)."""
        return np.where(self.is_left(x, y), NEUMANN, DIRICHLET)

    def interface_point(self, t):
        """Point at fraction ``t`` of the interface, bottom to top."""
        t = np.asarray(t, dtype=float)
        return self.xb + (self.xt - self.xb) * t, self.height * t

    def test_grid(self, n=101):
        xs = np.linspace(0.0, self.width, n)
        ys = np.linspace(0.0, self.height, n)
        gx, gy = np.meshgrid(xs, ys, indexing="ij")
        return gx.ravel(), gy.ravel()


def problem4(**kw):
    return SlantedProblem(**kw)


def get_problem(name: str, **kw):
    table = {"p1": problem1, "p2": problem2, "p3": problem3, "p4": problem4}
    if name not in table:
        raise ValueError(f"unknown problem {name!r}")
    return table[name](**kw)


def relative_l2(u_pred, u_ref) -> float:
    u_pred = np.asarray(u_pred, dtype=float)
    u_ref = np.asarray(u_ref, dtype=float)
    if u_pred.shape != u_ref.shape:
        raise MetricError("prediction and reference sample sets differ")
    denom = np.linalg.norm(u_ref)
    if denom == 0:
        raise MetricError("reference field has zero norm")
    return float(np.linalg.norm(u_pred - u_ref) / denom)
