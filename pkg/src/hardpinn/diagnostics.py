"""Boundary and interface residual reports for trained (or fresh) ansatzes."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .autodiff import value_of
from .problems import DIRICHLET, INTERFACE, NEUMANN


@dataclass
class ResidualRow:
    condition: str  # dirichlet | neumann | jump | flux_jump
    location: str
    where: str  # "samples" (buffer collocation samples) or "dense"
    max_abs: float
    mean_abs: float
    n: int


def _num(a):
    return np.abs(np.asarray(value_of(a), dtype=float))


def _row(cond, loc, where, r):
    r = np.atleast_1d(r)
    return ResidualRow(cond, loc, where, float(r.max()), float(r.mean()), int(r.size))


def one_sided(bound, m, pts, dirs, problem):
    """Jet of subdomain ``m``'s representation, valid on interfaces."""
    if hasattr(bound, "side_jet"):
        return bound.side_jet(m, pts, dirs)
    if problem.dim == 1:
        x = float(np.asarray(pts).ravel()[0])
        side = -1 if m < int(np.searchsorted(problem.interfaces, x, side="right")) else 1
        return bound.jet(pts, 0, side=side)
    return bound.jet(pts, dirs, side=("L", "R")[m])


def residuals_1d(bound, problem):
    rows = []
    for bc in (problem.left, problem.right):
        j = bound.jet(np.array([bc.position]), 0)
        if bc.kind == DIRICHLET:
            rows.append(_row(DIRICHLET, f"x={bc.position:g}", "dense",
                             np.abs(np.asarray(value_of(j.value), dtype=float) - bc.value)))
        else:
            rows.append(_row(NEUMANN, f"x={bc.position:g}", "dense",
                             np.abs(np.asarray(value_of(j.d1), dtype=float) - bc.value)))
    for i, xi in enumerate(problem.interfaces):
        pts = np.array([[xi]])
        left = one_sided(bound, i, pts, 0, problem)
        right = one_sided(bound, i + 1, pts, 0, problem)
        jump = np.asarray(value_of(left.value), dtype=float) - np.asarray(value_of(right.value), dtype=float)
        kl, kr = problem.kappas[i], problem.kappas[i + 1]
        flux = kl * np.asarray(value_of(left.d1), dtype=float) - kr * np.asarray(value_of(right.d1), dtype=float)
        hd, hn = problem.jumps[i] if problem.jumps else (0.0, 0.0)
        rows.append(_row("jump", f"x={xi:g}", "dense", np.abs(jump + hd)))
        rows.append(_row("flux_jump", f"x={xi:g}", "dense", np.abs(flux + hn)))
    return rows


SEGMENT_NAMES = ("bottom_left", "top_left", "left", "bottom_right", "right", "top_right", "interface")


def edge_profile_2d(bound, problem, seg, n=200, t=None):
    """Pointwise residual of the condition carried by ``seg`` at fractions ``t``."""
    if t is None:
        t = (np.arange(n) + 0.5) / n
    p0, p1 = np.asarray(seg.p0), np.asarray(seg.p1)
    pts = p0 + np.asarray(t)[:, None] * (p1 - p0)
    nrm = np.broadcast_to(np.asarray(seg.normal), pts.shape).copy()
    if seg.kind == INTERFACE:
        tl = one_sided(bound, 0, pts, nrm, problem)
        tr = one_sided(bound, 1, pts, nrm, problem)
        jump = np.asarray(value_of(tl.value), dtype=float) - np.asarray(value_of(tr.value), dtype=float)
        flux = (problem.kappa_left * np.asarray(value_of(tl.d1), dtype=float)
                - problem.kappa_right * np.asarray(value_of(tr.d1), dtype=float))
        return pts, {"jump": np.abs(jump), "flux_jump": np.abs(flux)}
    m = 0 if seg.side == "L" else 1
    j = one_sided(bound, m, pts, nrm, problem)
    kappa = problem.kappa_left if m == 0 else problem.kappa_right
    if seg.kind == DIRICHLET:
        return pts, {DIRICHLET: _num(j.value)}
    return pts, {NEUMANN: kappa * _num(j.d1)}


def residuals_2d(bound, problem, n_dense=200):
    rows = []
    samples = getattr(bound.ansatz, "samples", None)
    for sid, seg in enumerate(problem.segments()):
        name = SEGMENT_NAMES[sid]
        _, res = edge_profile_2d(bound, problem, seg, n_dense)
        for cond, r in res.items():
            rows.append(_row(cond, name, "dense", r))
        if samples is not None:
            t = _sample_fractions(samples, seg)
            if t.size:
                _, res = edge_profile_2d(bound, problem, seg, t=t)
                for cond, r in res.items():
                    rows.append(_row(cond, name, "samples", r))
    return rows


def _sample_fractions(samples, seg):
    """Fractions along ``seg`` of the buffer samples lying on it."""
    side = "L" if seg.side in ("L", "LR") else "R"
    s = samples[side]
    p0, p1 = np.asarray(seg.p0), np.asarray(seg.p1)
    d = p1 - p0
    L2 = float(d @ d)
    rel = s.points - p0
    t = rel @ d / L2
    off = np.abs(rel[:, 0] * d[1] - rel[:, 1] * d[0]) / np.sqrt(L2)
    want = INTERFACE if seg.kind == INTERFACE else seg.kind
    mask = (off < 1e-12) & (t > 0) & (t < 1) & np.array([k == want for k in s.kinds])
    return np.sort(t[mask])


def constraint_rows(bound, problem):
    rows = residuals_1d(bound, problem) if problem.dim == 1 else residuals_2d(bound, problem)
    if hasattr(bound, "constraint_residuals"):
        res = bound.constraint_residuals()
        for m, r in enumerate(res):
            rows.append(_row("buffer_system", f"subdomain{m}", "samples", np.abs(np.asarray(r, dtype=float))))
    return rows


def write_rows(path, rows, header_lines=()):
    import csv

    with open(path, "w", newline="") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        w = csv.writer(fh)
        w.writerow(["condition", "location", "where", "max_abs", "mean_abs", "n"])
        for r in rows:
            w.writerow([r.condition, r.location, r.where, repr(r.max_abs), repr(r.mean_abs), r.n])
