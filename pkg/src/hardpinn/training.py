"""Losses and the full-batch training loop."""

from __future__ import annotations

import csv
import functools
import json
import math
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .autodiff import EvaluationError, NanError, Var, value_and_grad, value_of
from .nn import AdamState, ConfigurationError, adam_step
from .problems import DIRICHLET, INTERFACE, NEUMANN, ProblemSpec, SlantedProblem, relative_l2

KINDS = ("window", "buffer", "soft_phi", "soft_multinet")
SOFT_TERMS = ("dbc", "nbc", "int", "fint")


class CollocationError(ValueError):
    pass


class TrainingDiverged(RuntimeError):
    """Raised on a non-finite loss; carries the last finite parameters and the partial report."""

    def __init__(self, message, theta, report):
        super().__init__(message)
        self.theta = theta
        self.report = report


# ---------------------------------------------------------------------------
# collocation
# ---------------------------------------------------------------------------


@dataclass
class PointBlock:
    """Points sharing a condition.  ``normals`` are outward (boundary) or low-to-high index (interface)."""

    points: np.ndarray
    normals: np.ndarray
    kind: str
    value: float = 0.0
    sides: tuple = ()  # (m_minus, m_plus) for interface blocks


@dataclass
class CollocationSet:
    interior: np.ndarray
    boundary: list = field(default_factory=list)
    interface: list = field(default_factory=list)

    @property
    def n_interior(self):
        return len(self.interior)


def _half_offset(lo, hi, n):
    h = (hi - lo) / n
    return lo + (np.arange(n) + 0.5) * h


def collocation_1d(problem: ProblemSpec, k=40, forbidden=()) -> CollocationSet:
    a, b = problem.bounds
    x = _half_offset(a, b, k)
    bad = list(problem.nodes) + [float(c) for c in forbidden]
    for c in bad:
        hit = np.abs(x - c) < 1e-12
        if np.any(hit):
            raise CollocationError(f"collocation point {x[hit][0]} sits on a node at {c}")
    boundary = []
    for bc, nrm in ((problem.left, -1.0), (problem.right, 1.0)):
        boundary.append(PointBlock(np.array([[bc.position]]), np.array([[nrm]]), bc.kind, bc.value))
    interface = [PointBlock(np.array([[xi]]), np.array([[1.0]]), INTERFACE, sides=(i, i + 1))
                 for i, xi in enumerate(problem.interfaces)]
    return CollocationSet(x[:, None], boundary, interface)


def collocation_2d(problem: SlantedProblem, nx=40, ny=20, n_edge=None, forbidden=()) -> CollocationSet:
    xs = _half_offset(0.0, problem.width, nx)
    ys = _half_offset(0.0, problem.height, ny)
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    pts = np.column_stack([gx.ravel(), gy.ravel()])
    if np.any(np.abs(problem.level(pts[:, 0], pts[:, 1])) < 1e-12):
        raise CollocationError("a collocation point lies on the interface")
    for c in forbidden:
        if np.any(np.hypot(pts[:, 0] - c[0], pts[:, 1] - c[1]) < 1e-12):
            raise CollocationError(f"a collocation point lies on the node {tuple(c)}")
    boundary, interface = [], []
    for seg in problem.segments():
        n = n_edge or max(int(round(seg.length * max(nx / problem.width, ny / problem.height))), 1)
        t = _half_offset(0.0, 1.0, n)
        p0, p1 = np.asarray(seg.p0), np.asarray(seg.p1)
        sp = p0 + t[:, None] * (p1 - p0)
        nrm = np.broadcast_to(np.asarray(seg.normal), sp.shape).copy()
        if seg.kind == INTERFACE:
            interface.append(PointBlock(sp, nrm, INTERFACE, sides=(0, 1)))
        else:
            boundary.append(PointBlock(sp, nrm, seg.kind, 0.0))
    return CollocationSet(pts, boundary, interface)


def make_collocation(problem, **kw) -> CollocationSet:
    if problem.dim == 1:
        return collocation_1d(problem, **{k: v for k, v in kw.items() if k in ("k", "forbidden")})
    return collocation_2d(problem, **{k: v for k, v in kw.items() if k in ("nx", "ny", "n_edge", "forbidden")})


# ---------------------------------------------------------------------------
# losses
# ---------------------------------------------------------------------------


def _sumsq(r):
    if isinstance(r, Var):
        return (r * r).sum()
    r = np.asarray(r, dtype=float)
    return float(np.sum(r * r))


def _kappa_at(problem, pts):
    if problem.dim == 1:
        return problem.kappa(pts[:, 0])
    return problem.kappa(pts[:, 0], pts[:, 1])


def _source_at(problem, pts):
    if problem.dim == 1:
        return np.asarray(problem.source(pts[:, 0]), dtype=float)
    return np.asarray(problem.source(pts[:, 0], pts[:, 1]), dtype=float)


def physics_residual(bound, points, problem):
    """Pointwise ``-div(kappa grad u) - f`` with the containing subdomain's kappa."""
    pts = np.asarray(points, dtype=float).reshape(len(points), problem.dim)
    if problem.dim == 1 and np.any(np.isin(pts[:, 0], problem.interfaces)):
        raise CollocationError("collocation point on an interface")
    if problem.dim == 2 and np.any(np.abs(problem.level(pts[:, 0], pts[:, 1])) < 1e-12):
        raise CollocationError("collocation point on the interface")
    kappa = _kappa_at(problem, pts)
    lap = 0.0
    for axis in range(problem.dim):
        lap = lap + bound.jet(pts, axis).d2
    return -kappa * lap - _source_at(problem, pts)


def physics_loss(bound, points, problem):
    return _sumsq(physics_residual(bound, points, problem))


def polar_residual(bound, points, apexes, problem):
    """Residual about the nearest corner apex, scaled by r^2.

    Radial and azimuthal derivatives come from directional jets along the
    local polar frame, so the corner windows are differentiated along the
    coordinates they are built in.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    apexes = np.asarray(apexes, dtype=float).reshape(-1, 2)
    d = pts[:, None, :] - apexes[None, :, :]
    dist = np.hypot(d[..., 0], d[..., 1])
    near = np.argmin(dist, axis=1)
    rel = d[np.arange(len(pts)), near]
    r = dist[np.arange(len(pts)), near]
    if np.any(r < 1e-12):
        raise CollocationError("collocation point at a corner apex")
    e_r = rel / r[:, None]
    e_a = np.column_stack([-e_r[:, 1], e_r[:, 0]])
    jr = bound.jet(pts, e_r)
    ja = bound.jet(pts, e_a)
    kappa = _kappa_at(problem, pts)
    f = _source_at(problem, pts)
    # d/dalpha u = r D_a u;  d2/dalpha2 u = r^2 D_aa u - r D_r u
    radial = r * jr.d1 + (r * r) * jr.d2
    angular = (r * r) * ja.d2 - r * jr.d1
    return -kappa * radial - kappa * angular - (r * r) * f


def polar_physics_loss(bound, points, apexes, problem):
    return _sumsq(polar_residual(bound, points, apexes, problem))


def _trace(bound, m, pts, normals):
    """One-sided jet of subdomain ``m`` along ``normals``."""
    if hasattr(bound, "side_jet"):
        return bound.side_jet(m, pts, normals)
    side = ("L", "R")[m] if pts.shape[1] == 2 else (1 if m > 0 else -1)
    return bound.jet(pts, normals, side=side)


def soft_losses(bound, colloc: CollocationSet, problem, terms=SOFT_TERMS):
    """(J_dbc, J_nbc, J_int, J_fint); terms not in ``terms`` are returned as 0."""
    j_dbc = j_nbc = j_int = j_fint = 0.0
    one_d = problem.dim == 1
    for blk in colloc.boundary:
        if blk.value is None:
            raise ConfigurationError("boundary block without prescribed data")
        if blk.kind == DIRICHLET and "dbc" in terms:
            j = bound.jet(blk.points, 0 if one_d else blk.normals)
            j_dbc = j_dbc + _sumsq(j.value - blk.value)
        elif blk.kind == NEUMANN and "nbc" in terms:
            kappa = _kappa_at(problem, blk.points)
            if one_d:
                # 1D data is du/dx, and 1D jets differentiate along +x
                j = bound.jet(blk.points, 0)
                j_nbc = j_nbc + _sumsq(kappa * (j.d1 - blk.value))
            else:
                j = bound.jet(blk.points, blk.normals)
                j_nbc = j_nbc + _sumsq(kappa * (j.d1 - blk.value))
    if "int" in terms or "fint" in terms:
        kap = problem.kappas
        for blk in colloc.interface:
            mi, mj = blk.sides
            dirs = 0 if one_d else blk.normals
            ti = _trace(bound, mi, blk.points, dirs)
            tj = _trace(bound, mj, blk.points, dirs)
            if "int" in terms:
                j_int = j_int + _sumsq(ti.value - tj.value)
            if "fint" in terms:
                j_fint = j_fint + _sumsq(kap[mi] * ti.d1 - kap[mj] * tj.d1)
    return j_dbc, j_nbc, j_int, j_fint


def required_soft_terms(ansatz):
    """Soft terms an ansatz still needs; empty for fully hard kinds."""
    if ansatz.kind in ("soft_phi", "soft_multinet"):
        return SOFT_TERMS
    if ansatz.kind == "window" and getattr(ansatz, "mode", None) == "interface_only":
        return ("dbc", "nbc")
    return ()


# ---------------------------------------------------------------------------
# configuration and reports
# ---------------------------------------------------------------------------


@dataclass
class TrainConfig:
    kind: str = "window"
    iterations: int = 30000
    learning_rate: float = 5e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    weights: dict | None = None
    seed: int = 0
    eval_every: int = 500
    physics: str = "cartesian"  # or "polar"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigurationError(f"kind: expected one of {KINDS}, got {self.kind!r}")
        if self.iterations < 0:
            raise ConfigurationError("iterations: must be non-negative")
        if self.eval_every <= 0:
            raise ConfigurationError("eval_every: must be positive")
        if not self.learning_rate > 0:
            raise ConfigurationError("learning_rate: must be positive")
        if self.physics not in ("cartesian", "polar"):
            raise ConfigurationError(f"physics: unknown form {self.physics!r}")
        if self.weights is not None:
            unknown = set(self.weights) - set(SOFT_TERMS)
            if unknown:
                raise ConfigurationError(f"weights: unknown term(s) {sorted(unknown)}")

    def resolved_weights(self, ansatz):
        need = required_soft_terms(ansatz)
        given = dict(self.weights or {})
        extra = set(given) - set(need)
        if extra:
            raise ConfigurationError(
                f"weights: {sorted(extra)} not allowed for a {ansatz.kind} ansatz (conditions are built in)")
        return {t: float(given.get(t, 1.0)) for t in need}

    def to_dict(self):
        return asdict(self)


@dataclass
class TrainReport:
    config: dict
    seed: int
    n_params: int
    loss_history: list
    metric_steps: list
    metric_history: list
    final_loss: float
    final_relative_l2: float
    wall_seconds: float
    theta: np.ndarray = field(repr=False, default=None)
    extra: dict = field(default_factory=dict)

    def to_json_dict(self):
        return {
            "config": self.config,
            "seed": self.seed,
            "n_params": self.n_params,
            "loss_history": [float(v) for v in self.loss_history],
            "metric_steps": list(self.metric_steps),
            "metric_history": [float(v) for v in self.metric_history],
            "final_loss": self.final_loss,
            "final_relative_l2": self.final_relative_l2,
            "wall_seconds": self.wall_seconds,
            **self.extra,
        }

    def write_json(self, path):
        Path(path).write_text(json.dumps(self.to_json_dict(), indent=1))

    def write_history_csv(self, path, header_lines=()):
        metric = dict(zip(self.metric_steps, self.metric_history))
        with open(path, "w", newline="") as fh:
            for line in header_lines:
                fh.write(f"# {line}\n")
            w = csv.writer(fh)
            w.writerow(["step", "loss", "relative_l2"])
            for step, loss in enumerate(self.loss_history):
                w.writerow([step, repr(float(loss)), repr(float(metric[step])) if step in metric else ""])
            if self.metric_steps and self.metric_steps[-1] == len(self.loss_history):
                w.writerow([len(self.loss_history), repr(self.final_loss), repr(self.metric_history[-1])])


def metric_steps(iterations, every):
    steps = list(range(0, iterations + 1, every))
    if steps[-1] != iterations:
        steps.append(iterations)
    return steps


# ---------------------------------------------------------------------------
# oracle sampling
# ---------------------------------------------------------------------------


@functools.lru_cache(maxsize=4)
def _p4_reference(kl, kr, xb, xt, nx, ny):
    from .fdref import reference_p4

    return reference_p4(SlantedProblem(kappa_left=kl, kappa_right=kr, xb=xb, xt=xt), nx=nx, ny=ny)


def p4_reference(problem: SlantedProblem, nx=512, ny=256):
    """Finite-volume reference field, cached per geometry."""
    return _p4_reference(problem.kappa_left, problem.kappa_right, problem.xb, problem.xt, nx, ny)


@dataclass
class MetricSampler:
    points: np.ndarray
    reference: np.ndarray

    def __call__(self, bound):
        return relative_l2(bound.value(self.points), self.reference)


def metric_sampler(problem, oracle=None, n=None) -> MetricSampler:
    if problem.dim == 1:
        x = problem.test_points(n or 1001)
        ref = (oracle or problem.oracle)(x)
        return MetricSampler(x[:, None], np.asarray(ref, dtype=float))
    gx, gy = problem.test_grid(n or 101)
    field_ = oracle or problem.oracle or p4_reference(problem)
    return MetricSampler(np.column_stack([gx, gy]), np.asarray(field_(gx, gy), dtype=float))


# ---------------------------------------------------------------------------
# loop
# ---------------------------------------------------------------------------


def corner_apexes(ansatz):
    layout = getattr(ansatz, "layout", None)
    corners = getattr(layout, "corners", None) or []
    return sorted({tuple(c.apex) for c in corners})


def build_loss(ansatz, colloc: CollocationSet, problem, config: TrainConfig):
    """Return ``loss(theta)`` plus the resolved soft weights."""
    weights = config.resolved_weights(ansatz)
    apexes = corner_apexes(ansatz) if config.physics == "polar" else []
    if config.physics == "polar" and not apexes:
        raise ConfigurationError("physics: polar form needs an ansatz with corner windows")

    def loss(theta):
        bound = ansatz.bind(theta)
        if apexes:
            total = polar_physics_loss(bound, colloc.interior, apexes, problem)
        else:
            total = physics_loss(bound, colloc.interior, problem)
        if weights:
            terms = soft_losses(bound, colloc, problem, terms=tuple(weights))
            for name, j in zip(SOFT_TERMS, terms):
                if name in weights:
                    total = total + weights[name] * j
        return total

    return loss, weights


def train(config: TrainConfig, ansatz, problem, colloc: CollocationSet | None = None, theta0=None,
          sampler: MetricSampler | None = None, progress=None) -> TrainReport:
    """Full-batch Adam on the composite loss.

    Buffer kinds re-solve their DOFs inside every ``bind``.  Raises
    :class:`TrainingDiverged` on a non-finite loss or gradient.
    """
    colloc = colloc or make_collocation(problem)
    sampler = sampler or metric_sampler(problem)
    loss_fn, _ = build_loss(ansatz, colloc, problem, config)
    theta = np.array(ansatz.init_params() if theta0 is None else theta0, dtype=float)
    state = AdamState(theta.size, config.learning_rate, config.beta1, config.beta2, config.epsilon)
    steps = metric_steps(config.iterations, config.eval_every)
    step_set = set(steps)
    losses, metrics = [], []
    t0 = time.perf_counter()

    def report(final_loss, th):
        return TrainReport(config.to_dict(), config.seed, int(theta.size), losses, steps[: len(metrics)], metrics,
                           final_loss, metrics[-1] if metrics else math.nan, time.perf_counter() - t0, th)

    last_good = theta.copy()
    for it in range(config.iterations + 1):
        if it in step_set:
            metrics.append(sampler(ansatz.bind(theta)))
        if it == config.iterations:
            break
        try:
            loss, grad = value_and_grad(loss_fn, theta)
            if not (math.isfinite(loss) and np.all(np.isfinite(grad))):
                raise NanError(f"non-finite loss at step {it}")
            theta = adam_step(state, theta, grad)
        except (NanError, EvaluationError, FloatingPointError) as exc:
            raise TrainingDiverged(f"training diverged at step {it}: {exc}", last_good, report(math.nan, last_good))
        last_good = theta
        losses.append(loss)
        if progress is not None:
            progress(it, loss)
    final = loss_fn(theta)
    return report(float(value_of(final)), theta)
