"""Finite-volume reference solution for the slanted-interface problem.

Cell-centred five-point scheme on a uniform ``nx x ny`` grid.  Face
diffusivities use a harmonic mean weighted by the fraction of the
centre-to-centre segment lying on each side of the interface.  Dirichlet
faces use the half-cell distance to the wall; Neumann faces carry no flux.
"""

from __future__ import annotations

import csv
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pyamg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .problems import SlantedProblem


class SolverError(RuntimeError):
    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = history or []


@dataclass
class FaceCoefficients:
    """Face diffusivities on the grid (already divided by ``h**2``)."""

    ex: np.ndarray  # (nx+1, ny) faces normal to x; boundary rows hold wall terms
    ey: np.ndarray  # (nx, ny+1)
    h: float


def _kappa_face(problem: SlantedProblem, xa, ya, xb, yb):
    """Harmonic mean of kappa along the segment from a to b."""
    la = problem.level(xa, ya)
    lb = problem.level(xb, yb)
    ka = problem.kappa(xa, ya)
    kb = problem.kappa(xb, yb)
    cut = (la < 0) != (lb < 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(cut, la / (la - lb), 0.5)
    t = np.clip(t, 0.0, 1.0)
    return np.where(cut, 1.0 / (t / ka + (1.0 - t) / kb), ka)


def face_coefficients(problem: SlantedProblem, nx: int, ny: int, kappa_override=None) -> FaceCoefficients:
    h = problem.width / nx
    if not np.isclose(h, problem.height / ny):
        raise ValueError("grid must have square cells")
    xc = (np.arange(nx) + 0.5) * h
    yc = (np.arange(ny) + 0.5) * h
    X, Y = np.meshgrid(xc, yc, indexing="ij")

    def kface(xa, ya, xb, yb):
        if kappa_override is not None:
            return np.full(np.broadcast(xa, xb).shape, float(kappa_override))
        return _kappa_face(problem, xa, ya, xb, yb)

    ex = np.zeros((nx + 1, ny))
    ey = np.zeros((nx, ny + 1))
    ex[1:-1, :] = kface(X[:-1], Y[:-1], X[1:], Y[1:])
    ey[:, 1:-1] = kface(X[:, :-1], Y[:, :-1], X[:, 1:], Y[:, 1:])

    # wall faces: half cell from the centre to the wall
    def wall(xa, ya, xw, yw):
        kind_dirichlet = ~problem.is_left(xw, yw)
        k = kface(xa, ya, xw, yw)
        return np.where(kind_dirichlet, 2.0 * k, 0.0)

    ex[0, :] = wall(X[0], Y[0], 0.0 * Y[0], Y[0])
    ex[-1, :] = wall(X[-1], Y[-1], np.full(ny, problem.width), Y[-1])
    ey[:, 0] = wall(X[:, 0], Y[:, 0], X[:, 0], 0.0 * X[:, 0])
    ey[:, -1] = wall(X[:, -1], Y[:, -1], X[:, -1], np.full(nx, problem.height))
    return FaceCoefficients(ex / h**2, ey / h**2, h)


def assemble(fc: FaceCoefficients):
    """Sparse SPD matrix of the scheme (row-major over (i, j))."""
    ex, ey = fc.ex, fc.ey
    nx, ny = ey.shape[0], ex.shape[1]
    idx = np.arange(nx * ny).reshape(nx, ny)
    diag = ex[:-1, :] + ex[1:, :] + ey[:, :-1] + ey[:, 1:]
    rows = [idx.ravel()]
    cols = [idx.ravel()]
    vals = [diag.ravel()]
    for a, b, c in ((idx[:-1, :], idx[1:, :], ex[1:-1, :]), (idx[:, :-1], idx[:, 1:], ey[:, 1:-1])):
        rows += [a.ravel(), b.ravel()]
        cols += [b.ravel(), a.ravel()]
        vals += [-c.ravel(), -c.ravel()]
    return sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(nx * ny,) * 2)


def apply_stencil(fc: FaceCoefficients, u: np.ndarray) -> np.ndarray:
    """Matrix-free product with the same operator (``u`` shaped (nx, ny))."""
    ex, ey = fc.ex, fc.ey
    out = (ex[:-1, :] + ex[1:, :] + ey[:, :-1] + ey[:, 1:]) * u
    out[1:, :] -= ex[1:-1, :] * u[:-1, :]
    out[:-1, :] -= ex[1:-1, :] * u[1:, :]
    out[:, 1:] -= ey[:, 1:-1] * u[:, :-1]
    out[:, :-1] -= ey[:, 1:-1] * u[:, 1:]
    return out


def _cell_centres(problem, nx, ny):
    h = problem.width / nx
    xc = (np.arange(nx) + 0.5) * h
    yc = (np.arange(ny) + 0.5) * h
    return xc, yc


@dataclass
class OracleField:
    """Cell-centred grid field with bilinear interpolation."""

    values: np.ndarray  # (nx, ny)
    bounds: tuple  # (x0, x1, y0, y1)
    ghost: np.ndarray | None = None  # (nx+2, ny+2) padded array incl. wall values

    @property
    def shape(self):
        return self.values.shape

    def _padded(self):
        if self.ghost is not None:
            return self.ghost
        # linear extrapolation to the walls as a fallback
        v = self.values
        p = np.pad(v, 1, mode="edge")
        return p

    def __call__(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        x0, x1, y0, y1 = self.bounds
        nx, ny = self.values.shape
        hx = (x1 - x0) / nx
        hy = (y1 - y0) / ny
        # padded coordinates: wall, centres..., wall
        px = np.concatenate([[x0], x0 + (np.arange(nx) + 0.5) * hx, [x1]])
        py = np.concatenate([[y0], y0 + (np.arange(ny) + 0.5) * hy, [y1]])
        grid = self._padded()
        i = np.clip(np.searchsorted(px, x, side="right") - 1, 0, nx)
        j = np.clip(np.searchsorted(py, y, side="right") - 1, 0, ny)
        tx = (x - px[i]) / (px[i + 1] - px[i])
        ty = (y - py[j]) / (py[j + 1] - py[j])
        return ((1 - tx) * (1 - ty) * grid[i, j] + tx * (1 - ty) * grid[i + 1, j]
                + (1 - tx) * ty * grid[i, j + 1] + tx * ty * grid[i + 1, j + 1])


def _wall_values(problem: SlantedProblem, u: np.ndarray):
    """Ghost-padded array: Dirichlet walls hold 0, Neumann walls copy the cell."""
    nx, ny = u.shape
    h = problem.width / nx
    xc = (np.arange(nx) + 0.5) * h
    yc = (np.arange(ny) + 0.5) * h
    g = np.zeros((nx + 2, ny + 2))
    g[1:-1, 1:-1] = u

    def wall(cell, xw, yw):
        return np.where(problem.is_left(xw, yw), cell, 0.0)

    g[0, 1:-1] = wall(u[0, :], 0.0 * yc, yc)
    g[-1, 1:-1] = wall(u[-1, :], np.full(ny, problem.width), yc)
    g[1:-1, 0] = wall(u[:, 0], xc, 0.0 * xc)
    g[1:-1, -1] = wall(u[:, -1], xc, np.full(nx, problem.height))
    g[0, 0] = 0.5 * (g[1, 0] + g[0, 1])
    g[-1, 0] = 0.5 * (g[-2, 0] + g[-1, 1])
    g[0, -1] = 0.5 * (g[1, -1] + g[0, -2])
    g[-1, -1] = 0.5 * (g[-2, -1] + g[-1, -2])
    return g


def reference_p4(problem: SlantedProblem | None = None, nx: int = 256, ny: int | None = None,
                 tol: float = 1e-10, source=None, kappa_override=None, maxiter: int = 5000) -> OracleField:
    """Solve the finite-volume system with AMG-preconditioned CG."""
    problem = problem or SlantedProblem()
    ny = ny or nx // 2
    if nx < 64 or ny < 32:
        raise ValueError("resolution must be at least 64 x 32")
    fc = face_coefficients(problem, nx, ny, kappa_override)
    a = assemble(fc)
    xc, yc = _cell_centres(problem, nx, ny)
    X, Y = np.meshgrid(xc, yc, indexing="ij")
    f = (problem.source(X, Y) if source is None else source(X, Y)).ravel()
    history = []
    if not np.any(f):
        u = np.zeros_like(f)
    else:
        ml = pyamg.smoothed_aggregation_solver(a, symmetry="symmetric")
        m = ml.aspreconditioner(cycle="V")
        fnorm = np.linalg.norm(f)

        def record(xk):
            history.append(float(np.linalg.norm(f - a @ xk) / fnorm))

        u, info = spla.cg(a, f, rtol=tol, atol=0.0, M=m, maxiter=maxiter, callback=record)
        res = float(np.linalg.norm(f - a @ u) / fnorm)
        if info != 0 or res > tol * 10:
            raise SolverError(f"CG did not converge (info={info}, residual={res:.3e})", history)
    u = u.reshape(nx, ny)
    return OracleField(u, (0.0, problem.width, 0.0, problem.height), _wall_values(problem, u))


def reference_p4_matrix_free(problem: SlantedProblem | None = None, nx: int = 128, ny: int | None = None,
                             tol: float = 1e-10, source=None, kappa_override=None, maxiter: int = 200000):
    """Unpreconditioned CG on the stencil operator; an independent cross-check."""
    problem = problem or SlantedProblem()
    ny = ny or nx // 2
    fc = face_coefficients(problem, nx, ny, kappa_override)
    xc, yc = _cell_centres(problem, nx, ny)
    X, Y = np.meshgrid(xc, yc, indexing="ij")
    f = problem.source(X, Y) if source is None else source(X, Y)
    u = np.zeros_like(f)
    r = f.copy()
    p = r.copy()
    rr = float(np.sum(r * r))
    target = tol * np.sqrt(float(np.sum(f * f)))
    history = []
    for _ in range(maxiter):
        if np.sqrt(rr) <= target:
            break
        ap = apply_stencil(fc, p)
        alpha = rr / float(np.sum(p * ap))
        u += alpha * p
        r -= alpha * ap
        rr_new = float(np.sum(r * r))
        history.append(np.sqrt(rr_new))
        p = r + (rr_new / rr) * p
        rr = rr_new
    else:
        raise SolverError("matrix-free CG did not converge", history)
    return OracleField(u, (0.0, problem.width, 0.0, problem.height), _wall_values(problem, u))


# ---------------------------------------------------------------------------
# export
# ---------------------------------------------------------------------------

_MAGIC = b"HPGRID01"


def write_csv(field: OracleField, path):
    nx, ny = field.shape
    x0, x1, y0, y1 = field.bounds
    xs = x0 + (np.arange(nx) + 0.5) * (x1 - x0) / nx
    ys = y0 + (np.arange(ny) + 0.5) * (y1 - y0) / ny
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "y", "u"])
        for i in range(nx):
            for j in range(ny):
                w.writerow([repr(float(xs[i])), repr(float(ys[j])), repr(float(field.values[i, j]))])


def write_binary(field: OracleField, path):
    """Header: magic, nx, ny (uint32), bounds (4 x float64); then float64 values row-major in (i, j)."""
    nx, ny = field.shape
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<II4d", nx, ny, *field.bounds))
        fh.write(np.ascontiguousarray(field.values, dtype="<f8").tobytes())


def read_binary(path, problem: SlantedProblem | None = None) -> OracleField:
    data = Path(path).read_bytes()
    if data[:8] != _MAGIC:
        raise ValueError("not a reference grid file")
    nx, ny, *bounds = struct.unpack_from("<II4d", data, 8)
    off = 8 + struct.calcsize("<II4d")
    values = np.frombuffer(data, dtype="<f8", count=nx * ny, offset=off).reshape(nx, ny).copy()
    ghost = _wall_values(problem or SlantedProblem(), values)
    return OracleField(values, tuple(bounds), ghost)
