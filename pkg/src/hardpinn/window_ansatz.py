"""Multiplicative window ansatz.

The solution is a sum of compactly supported products: interior networks
times interior windows, plus boundary and interface terms whose windows
pin either the trace or the normal derivative.  In 1D the boundary and
interface functions are scalars; in 2D they are networks of the
tangential coordinate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .autodiff import EvaluationError, Jet2, jet_atan2
from .base import BoundAnsatz, as_directions, as_points, jet_take, net_jet, scatter_groups
from .nn import ConfigurationError, InitScheme, Mlp, ParamPack
from .problems import DIRICHLET, INTERFACE, ProblemSpec, SlantedProblem
from .windows import DIRICHLET as W_D
from .windows import INTERIOR as W_INT
from .windows import NEUMANN as W_N
from .windows import WindowSpec, eval_window, make_window


class DomainError(ValueError):
    pass


# ---------------------------------------------------------------------------
# layouts
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class InteriorNode:
    center: float
    half_width: float
    k: int = 1


@dataclass(frozen=True)
class BoundaryNode:
    position: float
    kind: str
    value: float | None
    half_width: float
    normal_sign: int
    kd: int = 1
    kn: int = 1


@dataclass(frozen=True)
class InterfaceNode:
    position: float
    half_width: float
    kd: int = 1
    kn: int = 1
    jump_d: float = 0.0
    jump_n: float = 0.0


@dataclass
class WindowLayout1D:
    interior: list
    boundary: list
    interface: list
    beta: float = 2.0

    def __post_init__(self):
        if not 0 < self.beta <= 2:
            raise ConfigurationError("overlap factor beta must lie in (0, 2]")


def default_layout_1d(problem: ProblemSpec, beta=2.0, k_int=1, kd=1, kn=1) -> WindowLayout1D:
    """One interior window per subdomain; boundary/interface windows scaled by ``beta``."""
    nodes = problem.nodes
    half = [0.5 * (b - a) for a, b in zip(nodes[:-1], nodes[1:])]
    interior = [InteriorNode(0.5 * (a + b), h, k_int) for (a, b), h in zip(zip(nodes[:-1], nodes[1:]), half)]
    boundary = [
        BoundaryNode(problem.left.position, problem.left.kind, problem.left.value, beta * half[0], -1, kd, kn),
        BoundaryNode(problem.right.position, problem.right.kind, problem.right.value, beta * half[-1], 1, kd, kn),
    ]
    jumps = problem.jumps or [(0.0, 0.0)] * len(problem.interfaces)
    interface = [
        InterfaceNode(x, beta * min(half[i], half[i + 1]), kd, kn, float(jumps[i][0]), float(jumps[i][1]))
        for i, x in enumerate(problem.interfaces)
    ]
    return WindowLayout1D(interior, boundary, interface, beta)


# ---------------------------------------------------------------------------
# 1D ansatz
# ---------------------------------------------------------------------------


class WindowAnsatz1D:
    kind = "window"
    dim = 1

    def __init__(self, problem: ProblemSpec, layout: WindowLayout1D | None = None, widths=(1, 12, 12, 1),
                 activation="tanh", init: InitScheme | None = None):
        self.problem = problem
        self.layout = layout or default_layout_1d(problem)
        self.init = init or InitScheme()
        lay = self.layout
        for node in lay.boundary:
            if node.value is None:
                raise ConfigurationError(f"boundary node at {node.position} lacks prescribed data")
        kinds = {(b.position, b.kind) for b in lay.boundary}
        for bc in (problem.left, problem.right):
            if (bc.position, bc.kind) not in kinds:
                raise ConfigurationError(f"no {bc.kind} node covers the boundary at {bc.position}")
        self.nets = [Mlp(widths, activation, self.init) for _ in lay.interior]
        self.pack = ParamPack()
        for m, net in enumerate(self.nets):
            self.pack.add(f"net{m}", net.n_params)
        for b, node in enumerate(lay.boundary):
            self.pack.add(f"bnd{b}", 1)
        for i, node in enumerate(lay.interface):
            self.pack.add(f"itf{i}", 2)
        self.int_specs = [WindowSpec(W_INT, n.k, n.center, n.half_width) for n in lay.interior]
        self.bnd_specs = [
            (WindowSpec(W_D, n.kd, n.position, n.half_width), WindowSpec(W_N, n.kn, n.position, n.half_width, n.normal_sign))
            for n in lay.boundary
        ]
        self.itf_specs = [
            (WindowSpec(W_D, n.kd, n.position, n.half_width), WindowSpec(W_N, n.kn, n.position, n.half_width, 0))
            for n in lay.interface
        ]

    @property
    def n_params(self):
        return self.pack.size

    def init_params(self, scheme: InitScheme | None = None):
        scheme = scheme or self.init
        theta = np.zeros(self.n_params)
        for m, net in enumerate(self.nets):
            s = InitScheme(scheme.kind, scheme.seed + 7919 * m, scheme.scale, scheme.sigma)
            theta[self.pack.blocks[f"net{m}"]] = net.initial_params(s)
        return theta

    def bind(self, theta) -> "BoundWindow1D":
        return BoundWindow1D(self, theta)


class BoundWindow1D(BoundAnsatz):
    def jet(self, pts, direction=0, side=None) -> Jet2:
        """Ansatz jet at points; ``side`` (+1/-1) resolves points sitting on interfaces."""
        a: WindowAnsatz1D = self.ansatz
        p = a.problem
        x = as_points(pts, 1)[:, 0]
        n = x.size
        xj = Jet2(x, 1.0, 0.0)
        lo, hi = p.bounds
        if np.any((x < lo) | (x > hi)):
            raise DomainError("point outside the domain")
        if side is None:
            side = 1  # a point on an interface belongs to the subdomain on its right
        kappa = np.asarray(p.kappas)[np.searchsorted(np.asarray(p.interfaces), x, side="right" if side > 0 else "left")]
        total = Jet2(np.zeros(n))
        # interior terms, evaluated only inside their supports
        groups = []
        for m, (spec, net) in enumerate(zip(a.int_specs, a.nets)):
            idx = np.nonzero(np.abs(x - spec.center) < spec.half_width)[0]
            if idx.size == 0:
                continue
            w = eval_window(spec, jet_take(xj, idx), side=side)
            nn = net_jet(net, a.pack.get(self.theta, f"net{m}"), x[idx, None], np.ones((idx.size, 1)))
            groups.append((idx, w * nn))
        for idx, term in groups:
            total = total + _embed(term, idx, n)
        for b, (node, (sd, sn)) in enumerate(zip(a.layout.boundary, a.bnd_specs)):
            th = a.pack.get(self.theta, f"bnd{b}")[0]
            # the domain lies on the inner side of a boundary node
            wd = eval_window(sd, xj, side=-node.normal_sign)
            wn = eval_window(sn, xj, side=-node.normal_sign)
            if node.kind == DIRICHLET:
                total = total + wd * node.value + wn * th
            else:
                total = total + wd * th + wn * node.value
        for i, (node, (sd, sn)) in enumerate(zip(a.layout.interface, a.itf_specs)):
            th = a.pack.get(self.theta, f"itf{i}")
            wd = eval_window(sd, xj, side=side)
            wn = eval_window(sn, xj, side=side)
            gd, gn = th[0], th[1]
            if node.jump_d or node.jump_n:
                right = x > node.position if side < 0 else x >= node.position
                gd = gd + node.jump_d * right
                gn = gn + node.jump_n * right
            total = total + wd * gd + wn * (gn * (1.0 / kappa))
        return total


def _embed(term: Jet2, idx, n) -> Jet2:
    """Scatter a jet defined on a subset of points into a full-length jet."""
    if idx.size == n:
        return term
    out = []
    for f in (term.value, term.d1, term.d2):
        if isinstance(f, (int, float)) and f == 0:
            out.append(0.0)
            continue
        m = np.zeros((n, idx.size))
        m[idx, np.arange(idx.size)] = 1.0
        out.append(m @ f)
    return Jet2(*out)


def assemble_1d(problem: ProblemSpec, layout: WindowLayout1D | None = None, **kw) -> WindowAnsatz1D:
    return WindowAnsatz1D(problem, layout, **kw)


# ---------------------------------------------------------------------------
# 2D geometry helpers
# ---------------------------------------------------------------------------


def _coord_jets(pts, dirs):
    return Jet2(pts[:, 0], dirs[:, 0], 0.0), Jet2(pts[:, 1], dirs[:, 1], 0.0)


def reference_map(problem: SlantedProblem, side: str, x: Jet2, y: Jet2):
    """Map a physical subdomain onto the unit square (jets in, jets out)."""
    slope = problem.xt - problem.xb
    if side == "L":
        ell = y * slope + problem.xb
        xi1 = x / ell
    else:
        ell = y * (-slope) + (problem.width - problem.xb)
        xi1 = (x - problem.width) / ell + 1.0
    return xi1, y * (1.0 / problem.height)


def _interface_coords(problem: SlantedProblem, x: Jet2, y: Jet2):
    """Signed normal distance (L negative) and arclength fraction along the interface."""
    nx, ny = problem.interface_normal
    length = problem.interface_length
    tx, ty = (problem.xt - problem.xb) / length, problem.height / length
    s = (x - problem.xb) * nx + y * ny
    t = ((x - problem.xb) * tx + y * ty) * (1.0 / length)
    return s, t


@dataclass(frozen=True)
class EdgeWindow:
    """Outer-product window attached to one straight boundary/interface piece."""

    name: str
    segment: int  # index into problem.segments()
    center: tuple
    normal_size: float
    tangential_size: float


@dataclass(frozen=True)
class CornerWindow:
    """Polar window about ``apex``; ``edges`` are segment ids at the start/end angles."""

    name: str
    apex: tuple
    radius: float
    start_angle: float
    span: float
    edges: tuple
    side: str  # subdomain the sector lies in


@dataclass
class WindowLayout2D:
    mode: str
    k_int: int = 1
    kd: int = 1
    kn: int = 1
    interface_size: float = 1.2
    edges: list = field(default_factory=list)
    corners: list = field(default_factory=list)
    interior_half: float = 0.5


def interface_only_layout(interface_size=1.2, k_int=1, kd=1, kn=1) -> WindowLayout2D:
    return WindowLayout2D("interface_only", k_int, kd, kn, interface_size)


def _angle(v):
    return math.atan2(v[1], v[0]) % (2 * math.pi)


def full_hard_layout(problem: SlantedProblem | None = None, k=3, edges=None, corner_radii=None) -> WindowLayout2D:
    """Edge and corner placement for the fully constrained mode."""
    problem = problem or SlantedProblem()
    L = problem.interface_length
    if edges is None:
        # (segment id, centre, normal size, tangential size)
        edges = [
            EdgeWindow("left", 2, (0.0, 0.5), 0.5, 0.5),
            EdgeWindow("bottom_left", 0, (0.4, 0.0), 0.5, 0.4),
            EdgeWindow("top_left", 1, (0.54, 1.0), 0.3, 0.54),
            EdgeWindow("right", 4, (2.0, 0.5), 0.5, 0.5),
            EdgeWindow("bottom_right", 3, (1.46, 0.0), 0.3, 0.54),
            EdgeWindow("top_right", 5, (1.6, 1.0), 0.5, 0.4),
            EdgeWindow("interface", 6, (1.0, 0.5), 0.25 * L, 0.4 * L),
        ]
    radii = corner_radii or {"bl": 0.4, "tl": 0.5, "br": 0.5, "tr": 0.4, "bi": 0.4, "ti": 0.4}
    up = (problem.xt - problem.xb, problem.height)
    a_up = _angle(up)
    a_down = _angle((-up[0], -up[1]))
    corners = [
        CornerWindow("bl", (0.0, 0.0), radii["bl"], 0.0, math.pi / 2, (0, 2), "L"),
        CornerWindow("tl", (0.0, problem.height), radii["tl"], 1.5 * math.pi, math.pi / 2, (2, 1), "L"),
        CornerWindow("br", (problem.width, 0.0), radii["br"], math.pi / 2, math.pi / 2, (4, 3), "R"),
        CornerWindow("tr", (problem.width, problem.height), radii["tr"], math.pi, math.pi / 2, (5, 4), "R"),
        CornerWindow("bi_L", (problem.xb, 0.0), radii["bi"], a_up, math.pi - a_up, (6, 0), "L"),
        CornerWindow("bi_R", (problem.xb, 0.0), radii["bi"], 0.0, a_up, (3, 6), "R"),
        CornerWindow("ti_L", (problem.xt, problem.height), radii["ti"], math.pi, a_down - math.pi, (1, 6), "L"),
        CornerWindow("ti_R", (problem.xt, problem.height), radii["ti"], a_down, 2 * math.pi - a_down, (6, 5), "R"),
    ]
    lay = WindowLayout2D("full_hard", k, k, k, edges=list(edges), corners=corners)
    check_coverage(problem, lay)
    return lay


def _segment_frame(seg):
    (x0, y0), (x1, y1) = seg.p0, seg.p1
    length = seg.length
    return np.array([x0, y0]), np.array([(x1 - x0) / length, (y1 - y0) / length]), length


def check_coverage(problem: SlantedProblem, layout: WindowLayout2D):
    """Every boundary/interface point must sit strictly inside some window support."""
    segs = problem.segments()
    gaps = []
    for sid, seg in enumerate(segs):
        p0, t, length = _segment_frame(seg)
        intervals = []
        for e in layout.edges:
            if e.segment == sid:
                c = float(np.dot(np.asarray(e.center) - p0, t))
                intervals.append((c - e.tangential_size, c + e.tangential_size))
        for c in layout.corners:
            if sid in c.edges:
                apex = np.asarray(c.apex)
                s = float(np.dot(apex - p0, t))
                intervals.append((s - c.radius, s + c.radius))
        intervals.sort()
        reach = 0.0
        covered_start = any(a < 0.0 < b for a, b in intervals)
        if not covered_start:
            gaps.append((seg, 0.0, 0.0))
        for a, b in intervals:
            if a >= reach and reach < length and not (a < reach):
                if a > reach or not any(aa < reach < bb for aa, bb in intervals):
                    gaps.append((seg, reach, min(a, length)))
            reach = max(reach, b)
        if reach < length or not any(a < length < b for a, b in intervals):
            gaps.append((seg, reach, length))
    if gaps:
        desc = "; ".join(f"{g[0].kind} edge {g[0].p0}->{g[0].p1}: [{g[1]:.3f}, {g[2]:.3f}]" for g in gaps)
        raise ConfigurationError(f"uncovered boundary segments: {desc}")


# ---------------------------------------------------------------------------
# 2D ansatz
# ---------------------------------------------------------------------------


class WindowAnsatz2D:
    kind = "window"
    dim = 2

    def __init__(self, problem: SlantedProblem, layout: WindowLayout2D | None = None, widths=(2, 25, 25, 25, 1),
                 tangential_widths=(1, 25, 25, 25, 1), activation="tanh", init: InitScheme | None = None):
        self.problem = problem
        self.layout = layout or interface_only_layout()
        self.mode = self.layout.mode
        if self.mode not in ("interface_only", "full_hard"):
            raise ConfigurationError(f"unknown 2D window mode {self.mode!r}")
        self.init = init or InitScheme()
        self.segments = problem.segments()
        self.nets = {"L": Mlp(widths, activation, self.init), "R": Mlp(widths, activation, self.init)}
        self.tnets = {}
        lay = self.layout
        if self.mode == "interface_only":
            self.tnets["itf_d"] = Mlp(tangential_widths, activation, self.init)
            self.tnets["itf_n"] = Mlp(tangential_widths, activation, self.init)
        else:
            check_coverage(problem, lay)
            for e in lay.edges:
                seg = self.segments[e.segment]
                if seg.kind == INTERFACE:
                    self.tnets[f"{e.name}_d"] = Mlp(tangential_widths, activation, self.init)
                    self.tnets[f"{e.name}_n"] = Mlp(tangential_widths, activation, self.init)
                else:
                    self.tnets[e.name] = Mlp(tangential_widths, activation, self.init)
        self.pack = ParamPack()
        for name, net in list(self.nets.items()) + list(self.tnets.items()):
            self.pack.add(name, net.n_params)
        if self.mode == "full_hard":
            # one scalar per free corner function; interface corners share theirs
            for c in lay.corners:
                for sid in c.edges:
                    key = self._corner_key(c, sid)
                    if key not in self.pack.blocks:
                        self.pack.add(key, 1 if self.segments[sid].kind != INTERFACE else 2)
        self.w_int = make_window(W_INT, lay.k_int)

    def _corner_key(self, corner: CornerWindow, sid: int):
        apex = corner.name.split("_")[0]
        return f"corner_{apex}_{sid}"

    @property
    def n_params(self):
        return self.pack.size

    def init_params(self, scheme: InitScheme | None = None):
        scheme = scheme or self.init
        theta = np.zeros(self.n_params)
        for i, (name, net) in enumerate(list(self.nets.items()) + list(self.tnets.items())):
            s = InitScheme(scheme.kind, scheme.seed + 7919 * i, scheme.scale, scheme.sigma)
            theta[self.pack.blocks[name]] = net.initial_params(s)
        return theta

    def bind(self, theta) -> "BoundWindow2D":
        return BoundWindow2D(self, theta)


def _scalar_jet(tnet: Mlp, params, t: Jet2) -> Jet2:
    """Tangential network applied to a scalar coordinate jet with numeric fields."""
    tv = np.atleast_1d(np.asarray(t.value, dtype=float))
    d1 = np.broadcast_to(np.asarray(t.d1, dtype=float), tv.shape)
    out = net_jet(tnet, params, tv[:, None], d1[:, None])
    d2 = np.asarray(t.d2, dtype=float)
    if np.any(d2 != 0):
        raise EvaluationError("tangential coordinates must be affine along the jet direction")
    return out


class BoundWindow2D(BoundAnsatz):
    def jet(self, pts, direction=0, side=None) -> Jet2:
        """``side`` = "L"/"R" evaluates a one-sided trace for points on the interface."""
        a: WindowAnsatz2D = self.ansatz
        p = a.problem
        pts = as_points(pts, 2)
        n = len(pts)
        dirs = as_directions(direction, n, 2)
        sub = p.subdomain(pts[:, 0], pts[:, 1]) if side is None else np.full(n, 0 if side == "L" else 1)
        groups = []
        for m, name in enumerate(("L", "R")):
            idx = np.nonzero(sub == m)[0]
            if idx.size:
                groups.append((idx, self._side_jet(name, pts[idx], dirs[idx])))
        return scatter_groups(groups, n)

    def _side_jet(self, side, pts, dirs) -> Jet2:
        a: WindowAnsatz2D = self.ansatz
        p = a.problem
        kappa = p.kappa_left if side == "L" else p.kappa_right
        x, y = _coord_jets(pts, dirs)
        s, t = _interface_coords(p, x, y)
        sgn = -1.0 if side == "L" else 1.0
        lay = a.layout
        if a.mode == "interface_only":
            size = lay.interface_size
            depth = s * sgn  # distance into this subdomain
            w_in = eval_window(WindowSpec(W_INT, lay.k_int, 0.0, 1.0), 1.0 - depth * (1.0 / size), side=1)
            nn = net_jet(a.nets[side], a.pack.get(self.theta, side), pts, dirs)
            total = w_in * nn
            side_arr = np.full(len(pts), sgn)
            wd = eval_window(WindowSpec(W_D, lay.kd, 0.0, size), s, side=side_arr)
            wn = eval_window(WindowSpec(W_N, lay.kn, 0.0, size, 0), s, side=side_arr)
            gd = _scalar_jet(a.tnets["itf_d"], a.pack.get(self.theta, "itf_d"), t)
            gn = _scalar_jet(a.tnets["itf_n"], a.pack.get(self.theta, "itf_n"), t)
            return total + wd * gd + wn * gn * (1.0 / kappa)
        return self._full_hard(side, pts, dirs, x, y, s, t, kappa)

    # -- fully constrained mode ---------------------------------------------
    def _full_hard(self, side, pts, dirs, x, y, s, t, kappa):
        a: WindowAnsatz2D = self.ansatz
        p = a.problem
        lay = a.layout
        xi1, xi2 = reference_map(p, side, x, y)
        spec = WindowSpec(W_INT, lay.k_int, 0.5, lay.interior_half)
        w = eval_window(spec, xi1) * eval_window(spec, xi2)
        total = w * net_jet(a.nets[side], a.pack.get(self.theta, side), pts, dirs)
        sgn_side = np.full(len(pts), -1.0 if side == "L" else 1.0)
        for e in lay.edges:
            seg = a.segments[e.segment]
            if seg.kind != INTERFACE and seg.side != side:
                continue
            p0, tv, length = _segment_frame(seg)
            nrm = np.array(seg.normal)
            # normal coordinate (outward positive) and tangential position along the segment
            nu = (x - p0[0]) * nrm[0] + (y - p0[1]) * nrm[1]
            tau = (x - p0[0]) * tv[0] + (y - p0[1]) * tv[1]
            tc = float(np.dot(np.asarray(e.center) - p0, tv))
            in_t = np.abs(np.asarray(tau.value) - tc) < e.tangential_size
            in_n = np.abs(np.asarray(nu.value)) < e.normal_size
            if not np.any(in_t & in_n):
                continue
            wt = eval_window(WindowSpec(W_INT, lay.k_int, tc, e.tangential_size), tau)
            tnorm = tau * (1.0 / length)
            if seg.kind == INTERFACE:
                wd = eval_window(WindowSpec(W_D, lay.kd, 0.0, e.normal_size), nu, side=sgn_side)
                wn = eval_window(WindowSpec(W_N, lay.kn, 0.0, e.normal_size, 0), nu, side=sgn_side)
                gd = _scalar_jet(a.tnets[f"{e.name}_d"], a.pack.get(self.theta, f"{e.name}_d"), tnorm)
                gn = _scalar_jet(a.tnets[f"{e.name}_n"], a.pack.get(self.theta, f"{e.name}_n"), tnorm)
                total = total + wt * (wd * gd + wn * gn * (1.0 / kappa))
            else:
                # outward normal coordinate is <= 0 inside; the Neumann window has
                # unit slope along n, so its function is the outward derivative
                wd = eval_window(WindowSpec(W_D, lay.kd, 0.0, e.normal_size), nu, side=-1)
                wn = eval_window(WindowSpec(W_N, lay.kn, 0.0, e.normal_size, 1), nu, side=-1)
                g = _scalar_jet(a.tnets[e.name], a.pack.get(self.theta, e.name), tnorm)
                if seg.kind == DIRICHLET:
                    total = total + wt * wn * g  # prescribed value is zero
                else:
                    total = total + wt * wd * g  # prescribed flux is zero
        for c in lay.corners:
            if c.side != side:
                continue
            total = total + self.corner_term(c, x, y, kappa)
        return total

    def corner_term(self, corner: CornerWindow, x: Jet2, y: Jet2, kappa: float) -> Jet2:
        a: WindowAnsatz2D = self.ansatz
        lay = a.layout
        dx = x - corner.apex[0]
        dy = y - corner.apex[1]
        rv = np.hypot(np.asarray(dx.value), np.asarray(dy.value))
        inside = rv < corner.radius
        n = np.size(rv)
        if not np.any(inside):
            return Jet2(np.zeros(n))
        groups = []
        apex = np.nonzero(inside & (rv == 0))[0]
        if apex.size:
            # the angular factor has no limit at the apex; report the value along
            # the bisector and leave the derivatives undefined
            half = Jet2(np.full(apex.size, 0.5 * corner.span))
            v = self._corner_angular(corner, half, kappa).value
            nan = np.full(apex.size, np.nan)
            groups.append((apex, Jet2(v, nan, nan)))
        idx = np.nonzero(inside & (rv > 0))[0]
        if idx.size:
            dxi, dyi = jet_take(dx, idx), jet_take(dy, idx)
            r = (dxi * dxi + dyi * dyi).sqrt()
            ang = jet_atan2(dyi, dxi)
            rel = np.mod(np.asarray(ang.value) - corner.start_angle, 2 * math.pi)
            # points of this subdomain lie in the sector; clip roundoff at its edges
            rel = np.where(rel > corner.span + 0.5 * (2 * math.pi - corner.span), rel - 2 * math.pi, rel)
            rel = np.clip(rel, 0.0, corner.span)
            alpha = Jet2(rel, ang.d1, ang.d2)
            wr = eval_window(WindowSpec(W_INT, lay.k_int, 0.0, corner.radius), r)
            groups.append((idx, self._corner_angular(corner, alpha, kappa) * wr))
        out = Jet2(np.zeros(n))
        for g_idx, term in groups:
            out = out + _embed(term, g_idx, n)
        return out

    def _corner_angular(self, corner: CornerWindow, alpha: Jet2, kappa: float) -> Jet2:
        a: WindowAnsatz2D = self.ansatz
        lay = a.layout
        total = Jet2(np.zeros(np.size(alpha.value)))
        for pos, sid in enumerate(corner.edges):
            seg = a.segments[sid]
            th = a.pack.get(self.theta, a._corner_key(corner, sid))
            # start edge: azimuthal outward normal points to -alpha; end edge: +alpha
            centre = 0.0 if pos == 0 else corner.span
            ns = -1 if pos == 0 else 1
            wd = eval_window(WindowSpec(W_D, lay.kd, centre, corner.span), alpha, side=1 if pos == 0 else -1)
            wn = eval_window(WindowSpec(W_N, lay.kn, centre, corner.span, ns), alpha, side=1 if pos == 0 else -1)
            if seg.kind == INTERFACE:
                total = total + wd * th[0] + wn * th[1] * (1.0 / kappa)
            elif seg.kind == DIRICHLET:
                total = total + wn * th[0]
            else:
                total = total + wd * th[0]
        return total


def assemble_2d(problem: SlantedProblem, layout: WindowLayout2D | None = None, **kw) -> WindowAnsatz2D:
    return WindowAnsatz2D(problem, layout, **kw)


def corner_term(ansatz: WindowAnsatz2D, theta, corner: CornerWindow, pts, direction=0) -> Jet2:
    """Contribution of one corner window at the given points."""
    pts = as_points(pts, 2)
    dirs = as_directions(direction, len(pts), 2)
    x, y = _coord_jets(pts, dirs)
    p = ansatz.problem
    kappa = p.kappa_left if corner.side == "L" else p.kappa_right
    return BoundWindow2D(ansatz, theta).corner_term(corner, x, y, kappa)
