"""Additive buffer ansatz: free subdomain networks plus solved corrections.

For every parameter vector the buffer DOFs are obtained from a linear
system whose matrix depends only on geometry.  It is LU-factorized once;
each evaluation only rebuilds the right-hand side, and reverse mode passes
through the solve as ``A^{-T} g``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .autodiff import Jet2, concatenate, lu_solve, value_of
from .base import (
    BoundAnsatz,
    StaleDofError,
    as_directions,
    as_points,
    jet_take,
    net_jet,
    scatter_groups,
    snapshot,
)
from .nn import ConfigurationError, InitScheme, Mlp, ParamPack
from .problems import DIRICHLET, INTERFACE, NEUMANN, ProblemSpec, SlantedProblem


class GeometryError(ValueError):
    pass


class ConditioningError(GeometryError):
    pass


def gauss_legendre_samples(p0, p1, n: int):
    """Gauss-Legendre nodes mapped onto the segment ``p0 -> p1``."""
    if not 1 <= n <= 16:
        raise ValueError("sample count must be in [1, 16]")
    p0 = np.atleast_1d(np.asarray(p0, dtype=float))
    p1 = np.atleast_1d(np.asarray(p1, dtype=float))
    if np.allclose(p0, p1):
        raise GeometryError("degenerate segment")
    t, _ = np.polynomial.legendre.leggauss(n)
    s = 0.5 * (t + 1.0)
    return p0[None, :] + s[:, None] * (p1 - p0)[None, :]


def _factor(a, what):
    cond = np.linalg.cond(a)
    if not np.isfinite(cond):
        raise GeometryError(f"singular {what} constraint matrix")
    lu = scipy.linalg.lu_factor(a)
    return lu, cond


# ---------------------------------------------------------------------------
# 1D
# ---------------------------------------------------------------------------


def _mono_rows(x, degree, order):
    """Row of d^order/dx^order of [1, x, ..., x^degree]."""
    row = np.zeros(degree + 1)
    for j in range(order, degree + 1):
        row[j] = math.perm(j, order) * x ** (j - order)
    return row


@dataclass
class BufferBasis1D:
    """Per-subdomain polynomial buffers and their factorized constraint matrices."""

    problem: ProblemSpec
    degrees: list = field(default_factory=list)
    matrices: list = field(default_factory=list)
    factors: list = field(default_factory=list)
    conds: list = field(default_factory=list)

    def __post_init__(self):
        p = self.problem
        m_count = p.n_subdomains
        nodes = p.nodes
        for m in range(m_count):
            rows = []
            a, b = nodes[m], nodes[m + 1]
            if m_count == 1:
                deg = 1
            elif m in (0, m_count - 1):
                deg = 2
            else:
                deg = 3
            k = p.kappas[m]
            if m == 0:
                rows.append(_mono_rows(a, deg, 0 if p.left.kind == DIRICHLET else 1))
            else:
                rows += [_mono_rows(a, deg, 0), k * _mono_rows(a, deg, 1)]
            if m == m_count - 1:
                rows.append(_mono_rows(b, deg, 0 if p.right.kind == DIRICHLET else 1))
            else:
                rows += [_mono_rows(b, deg, 0), k * _mono_rows(b, deg, 1)]
            a_m = np.array(rows)
            lu, cond = _factor(a_m, f"subdomain {m}")
            self.degrees.append(deg)
            self.matrices.append(a_m)
            self.factors.append(lu)
            self.conds.append(cond)

    def rhs(self, end_jets):
        """Right-hand sides from network traces.

        ``end_jets[m]`` is a Jet2 over the two end points of subdomain ``m``
        (value and d/dx).
        """
        p = self.problem
        mc = p.n_subdomains
        out = [[] for _ in range(mc)]
        for m in range(mc):
            left, right = jet_take(end_jets[m], 0), jet_take(end_jets[m], 1)
            if m == 0:
                bc = p.left
                out[m].append(bc.value - (left.value if bc.kind == DIRICHLET else left.d1))
            if m == mc - 1:
                bc = p.right
                last = bc.value - (right.value if bc.kind == DIRICHLET else right.d1)
            if m < mc - 1:
                nxt = jet_take(end_jets[m + 1], 0)
                ki, kj = p.kappas[m], p.kappas[m + 1]
                jump = right.value - nxt.value
                flux = ki * right.d1 - kj * nxt.d1
                out[m] += [-0.5 * jump, -0.5 * flux]
                out[m + 1] += [0.5 * jump, 0.5 * flux]
            if m == mc - 1:
                out[m].append(last)
        return out

    def solve(self, rhs_lists):
        coeffs = []
        for m, rows in enumerate(rhs_lists):
            b = concatenate(rows)
            coeffs.append(lu_solve(self.factors[m], b))
        return coeffs

    def design(self, m, x):
        """Value / first / second derivative design matrices at points x."""
        deg = self.degrees[m]
        x = np.asarray(x, dtype=float)
        v = np.stack([_mono_rows_vec(x, deg, o) for o in range(3)])
        return v[0], v[1], v[2]


def _mono_rows_vec(x, degree, order):
    out = np.zeros((x.size, degree + 1))
    for j in range(order, degree + 1):
        out[:, j] = math.perm(j, order) * x ** (j - order)
    return out


class BufferAnsatz1D:
    kind = "buffer"
    dim = 1

    def __init__(self, problem: ProblemSpec, widths=(1, 12, 12, 1), activation="tanh",
                 init: InitScheme | None = None, debug=True):
        if problem.dim != 1:
            raise ConfigurationError("1D buffer ansatz needs a 1D problem")
        if problem.jumps:
            raise ConfigurationError("prescribed interface jumps are only supported by the window ansatz")
        self.problem = problem
        self.init = init or InitScheme()
        self.nets = [Mlp(widths, activation, self.init) for _ in range(problem.n_subdomains)]
        self.pack = ParamPack()
        for m, net in enumerate(self.nets):
            self.pack.add(f"net{m}", net.n_params)
        self.basis = BufferBasis1D(problem)
        self.debug = debug

    @property
    def n_params(self):
        return self.pack.size

    def init_params(self, scheme: InitScheme | None = None):
        scheme = scheme or self.init
        parts = []
        for m, net in enumerate(self.nets):
            s = InitScheme(scheme.kind, scheme.seed + 7919 * m, scheme.scale, scheme.sigma)
            parts.append(net.initial_params(s))
        return np.concatenate(parts)

    def net_params(self, theta, m):
        return self.pack.get(theta, f"net{m}")

    def bind(self, theta) -> "BoundBuffer1D":
        return BoundBuffer1D(self, theta)


class BoundBuffer1D(BoundAnsatz):
    """Solve-then-evaluate view of a 1D buffer ansatz."""

    def __init__(self, ansatz: BufferAnsatz1D, theta):
        super().__init__(ansatz, theta)
        p = ansatz.problem
        nodes = p.nodes
        self.params = [ansatz.net_params(theta, m) for m in range(p.n_subdomains)]
        ends = []
        for m, net in enumerate(ansatz.nets):
            pts = np.array([[nodes[m]], [nodes[m + 1]]])
            ends.append(net_jet(net, self.params[m], pts, np.ones((2, 1))))
        self.end_jets = ends
        self.rhs = ansatz.basis.rhs(ends)
        self.coeffs = ansatz.basis.solve(self.rhs)
        self._snapshot = snapshot(theta) if ansatz.debug else None

    def check_fresh(self, theta):
        if self._snapshot is not None and not np.array_equal(self._snapshot, value_of(theta)):
            raise StaleDofError("buffer DOFs are stale; re-bind after changing the parameters")

    def buffer_jet(self, m, x):
        v, d1, d2 = self.ansatz.basis.design(m, x)
        c = self.coeffs[m]
        return Jet2(v @ c, d1 @ c, d2 @ c)

    def subdomain_jet(self, m, x):
        x = np.asarray(x, dtype=float).ravel()
        nn = net_jet(self.ansatz.nets[m], self.params[m], x[:, None], np.ones((x.size, 1)))
        g = self.buffer_jet(m, x)
        return nn + g

    def jet(self, pts, direction=0) -> Jet2:
        x = as_points(pts, 1)[:, 0]
        if direction not in (0, None) and not np.all(np.asarray(direction) == 1):
            raise ValueError("1D ansatz only supports the x direction")
        sub = self.ansatz.problem.subdomain(x)
        groups = []
        for m in range(self.ansatz.problem.n_subdomains):
            idx = np.nonzero(sub == m)[0]
            if idx.size:
                groups.append((idx, self.subdomain_jet(m, x[idx])))
        return scatter_groups(groups, x.size)

    def side_jet(self, m, x, direction=0):
        """Subdomain ``m``'s representation at ``x`` (d1 along +x)."""
        return self.subdomain_jet(m, np.atleast_1d(x))

    def constraint_residuals(self):
        """Residual ``A c - b`` of every subdomain system."""
        out = []
        for m, c in enumerate(self.coeffs):
            b = np.array([float(value_of(v)) for v in self.rhs[m]])
            out.append(self.ansatz.basis.matrices[m] @ np.asarray(value_of(c)) - b)
        return out


def eval_buffer_ansatz(ansatz, theta, x, direction=0) -> Jet2:
    return ansatz.bind(theta).jet(x, direction)


def solve_buffer_1d(ansatz: BufferAnsatz1D, theta):
    """Buffer coefficient vectors, one per subdomain."""
    return [np.asarray(value_of(c)) for c in ansatz.bind(theta).coeffs]


# ---------------------------------------------------------------------------
# 2D: Gaussian RBF buffers
# ---------------------------------------------------------------------------


@dataclass
class SampleSet:
    points: np.ndarray  # (S, 2)
    kinds: list
    normals: np.ndarray  # outward normals of the owning subdomain


@dataclass
class BufferBasis2D:
    """Gaussian RBF buffer of one subdomain."""

    samples: SampleSet
    kappa: float
    r0: float = 1.0 / 9.0
    max_cond: float = 1e12

    def __post_init__(self):
        if not self.r0 > 0:
            raise ConfigurationError("r0 must be positive")
        s = self.samples
        # basis functions: (center index, has_normal_factor)
        funcs = []
        for i, kind in enumerate(s.kinds):
            if kind == DIRICHLET:
                funcs.append((i, False))
            elif kind == NEUMANN:
                funcs.append((i, True))
            elif kind == INTERFACE:
                funcs += [(i, False), (i, True)]
            else:
                raise ConfigurationError(f"unknown sample kind {kind!r}")
        self.funcs = funcs
        self._cache = {}
        self.centers = s.points[[i for i, _ in funcs]]
        self.fnormals = s.normals[[i for i, _ in funcs]]
        self.has_n = np.array([h for _, h in funcs])
        rows = []
        for i, kind in enumerate(s.kinds):
            pt = s.points[i : i + 1]
            n = s.normals[i : i + 1]
            v, d1, _ = self.design(pt, n)
            if kind == DIRICHLET:
                rows.append(v[0])
            elif kind == NEUMANN:
                rows.append(d1[0])
            else:
                rows += [v[0], self.kappa * d1[0]]
        self.matrix = np.array(rows)
        if self.matrix.shape[0] != self.matrix.shape[1]:
            raise GeometryError("buffer system is not square")
        lu, cond = _factor(self.matrix, "RBF")
        if cond > self.max_cond:
            raise ConditioningError(
                f"RBF constraint matrix condition number {cond:.3e} exceeds {self.max_cond:.0e}; "
                "use a larger r0 or fewer samples")
        self.lu = lu
        self.cond = cond

    @property
    def n_dofs(self):
        return len(self.funcs)

    def design(self, pts, dirs):
        """Basis values and first/second derivatives along per-point directions.

        Results are memoised per point/direction set; collocation sets are
        fixed during training, so this saves re-evaluating the basis each step.
        """
        pts = np.ascontiguousarray(pts, dtype=float)
        dirs = np.ascontiguousarray(dirs, dtype=float)
        key = (pts.shape, pts.tobytes(), dirs.tobytes())
        hit = self._cache.get(key)
        if hit is None:
            hit = self._design(pts, dirs)
            if len(self._cache) >= 32:
                self._cache.pop(next(iter(self._cache)))
            self._cache[key] = hit
        return hit

    def _design(self, pts, dirs):
        d = pts[:, None, :] - self.centers[None, :, :]  # (N, F, 2)
        r2 = np.sum(d * d, axis=2)
        r02 = self.r0**2
        phi = np.exp(-r2 / r02)
        ed = np.einsum("nk,nfk->nf", dirs, d)
        ee = np.sum(dirs * dirs, axis=1)[:, None]
        phi1 = -2.0 * ed / r02 * phi
        phi2 = phi * ((2.0 * ed / r02) ** 2 - 2.0 * ee / r02)
        nd = np.einsum("fk,nfk->nf", self.fnormals, d)
        ne = dirs @ self.fnormals.T
        hn = self.has_n[None, :]
        v = np.where(hn, nd * phi, phi)
        v1 = np.where(hn, ne * phi + nd * phi1, phi1)
        v2 = np.where(hn, 2.0 * ne * phi1 + nd * phi2, phi2)
        for arr in (v, v1, v2):
            arr.setflags(write=False)
        return v, v1, v2


def p4_samples(problem: SlantedProblem, n_per_edge=8):
    """Gauss-Legendre samples on every edge of each subdomain (interface included)."""
    out = {}
    for side in ("L", "R"):
        pts, kinds, normals = [], [], []
        for seg in problem.segments():
            if side not in seg.side:
                continue
            xy = gauss_legendre_samples(seg.p0, seg.p1, n_per_edge)
            nrm = np.array(seg.normal)
            if seg.kind == INTERFACE and side == "R":
                nrm = -nrm
            pts.append(xy)
            kinds += [seg.kind] * len(xy)
            normals.append(np.tile(nrm, (len(xy), 1)))
        out[side] = SampleSet(np.vstack(pts), kinds, np.vstack(normals))
    return out


class BufferAnsatz2D:
    kind = "buffer"
    dim = 2

    def __init__(self, problem: SlantedProblem, widths=(2, 25, 25, 25, 1), activation="tanh",
                 init: InitScheme | None = None, r0=1.0 / 9.0, n_per_edge=8, debug=True):
        self.problem = problem
        self.init = init or InitScheme()
        self.nets = [Mlp(widths, activation, self.init) for _ in range(2)]
        self.pack = ParamPack()
        for m, net in enumerate(self.nets):
            self.pack.add(f"net{m}", net.n_params)
        self.samples = p4_samples(problem, n_per_edge)
        self.bases = [BufferBasis2D(self.samples["L"], problem.kappa_left, r0),
                      BufferBasis2D(self.samples["R"], problem.kappa_right, r0)]
        self.r0 = r0
        self.n_per_edge = n_per_edge
        self.debug = debug
        # interface samples appear in the same order in both sets
        self._itf = [np.array([k == INTERFACE for k in self.samples[s].kinds]) for s in ("L", "R")]

    @property
    def n_params(self):
        return self.pack.size

    init_params = BufferAnsatz1D.init_params
    net_params = BufferAnsatz1D.net_params

    def bind(self, theta) -> "BoundBuffer2D":
        return BoundBuffer2D(self, theta)


class BoundBuffer2D(BoundAnsatz):
    def __init__(self, ansatz: BufferAnsatz2D, theta):
        super().__init__(ansatz, theta)
        self.params = [ansatz.net_params(theta, m) for m in range(2)]
        traces = []
        for m, side in enumerate(("L", "R")):
            s = ansatz.samples[side]
            traces.append(net_jet(ansatz.nets[m], self.params[m], s.points, s.normals))
        self.traces = traces
        self.rhs = self._rhs(traces)
        self.coeffs = [lu_solve(b.lu, r) for b, r in zip(ansatz.bases, self.rhs)]
        self._snapshot = snapshot(theta) if ansatz.debug else None

    def _rhs(self, traces):
        a = self.ansatz
        kl, kr = a.problem.kappa_left, a.problem.kappa_right
        itf_l = np.nonzero(a._itf[0])[0]
        itf_r = np.nonzero(a._itf[1])[0]
        tl, tr = traces
        # normal derivative along the L->R normal: the L trace already uses it,
        # the R trace uses the opposite normal
        jump = jet_take(tl, itf_l).value - jet_take(tr, itf_r).value
        flux = kl * jet_take(tl, itf_l).d1 + kr * jet_take(tr, itf_r).d1
        out = []
        for m, (side, t) in enumerate(zip(("L", "R"), traces)):
            s = a.samples[side]
            rows = []
            k_itf = 0
            for i, kind in enumerate(s.kinds):
                if kind == DIRICHLET:
                    rows.append(-jet_take(t, i).value)  # homogeneous data
                elif kind == NEUMANN:
                    rows.append(-jet_take(t, i).d1)
                else:
                    sgn = -0.5 if m == 0 else 0.5
                    rows.append(sgn * jump[k_itf])
                    rows.append(-0.5 * flux[k_itf])
                    k_itf += 1
            out.append(concatenate(rows))
        return out

    def check_fresh(self, theta):
        if self._snapshot is not None and not np.array_equal(self._snapshot, value_of(theta)):
            raise StaleDofError("buffer DOFs are stale; re-bind after changing the parameters")

    def subdomain_jet(self, m, pts, dirs):
        nn = net_jet(self.ansatz.nets[m], self.params[m], pts, dirs)
        v, d1, d2 = self.ansatz.bases[m].design(pts, dirs)
        c = self.coeffs[m]
        return nn + Jet2(v @ c, d1 @ c, d2 @ c)

    def buffer_jet(self, m, pts, dirs):
        v, d1, d2 = self.ansatz.bases[m].design(pts, dirs)
        c = self.coeffs[m]
        return Jet2(v @ c, d1 @ c, d2 @ c)

    def jet(self, pts, direction=0) -> Jet2:
        pts = as_points(pts, 2)
        dirs = as_directions(direction, len(pts), 2)
        sub = self.ansatz.problem.subdomain(pts[:, 0], pts[:, 1])
        groups = []
        for m in range(2):
            idx = np.nonzero(sub == m)[0]
            if idx.size:
                groups.append((idx, self.subdomain_jet(m, pts[idx], dirs[idx])))
        return scatter_groups(groups, len(pts))

    def side_jet(self, m, pts, direction):
        pts = as_points(pts, 2)
        return self.subdomain_jet(m, pts, as_directions(direction, len(pts), 2))

    def constraint_residuals(self):
        out = []
        for basis, c, r in zip(self.ansatz.bases, self.coeffs, self.rhs):
            b = np.asarray(value_of(r))
            out.append(basis.matrix @ np.asarray(value_of(c)) - b)
        return out


def solve_buffer_2d(ansatz: BufferAnsatz2D, theta):
    return [np.asarray(value_of(c)) for c in ansatz.bind(theta).coeffs]
