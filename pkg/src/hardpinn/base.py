"""Shared plumbing for the solution ansatzes."""

from __future__ import annotations

import numpy as np

from .autodiff import Jet2, Var, concatenate, value_of
from .nn import Mlp


class StaleDofError(RuntimeError):
    """Buffer DOFs were computed for a different parameter vector."""


def as_points(x, dim):
    x = np.asarray(x, dtype=float)
    if dim == 1 and x.ndim <= 1:
        x = x.reshape(-1, 1)
    if x.ndim != 2 or x.shape[1] != dim:
        raise ValueError(f"expected points of shape (N, {dim})")
    return x


def as_directions(direction, n, dim):
    """Per-point unit directions: an axis index, one vector, or an (N, dim) array."""
    if direction is None:
        direction = 0
    if np.isscalar(direction):
        d = np.zeros((n, dim))
        d[:, int(direction)] = 1.0
        return d
    d = np.asarray(direction, dtype=float)
    if d.ndim == 1:
        d = np.broadcast_to(d, (n, dim))
    return d


def net_jet(net: Mlp, params, pts, dirs) -> Jet2:
    """Network output with derivatives along per-point directions."""
    if len(pts) == 0:
        return Jet2(np.zeros(0), np.zeros(0), np.zeros(0))
    return net.forward(params, Jet2(pts, dirs, 0.0))


def take(a, idx):
    """Index a field that may be a float, an ndarray or a Var."""
    if isinstance(a, (int, float)):
        return a
    return a[idx]


def jet_take(j: Jet2, idx) -> Jet2:
    return Jet2(take(j.value, idx), take(j.d1, idx), take(j.d2, idx))


def _field_concat(parts, sizes):
    if all(isinstance(p, (int, float)) and p == 0 for p in parts):
        return 0.0
    full = []
    for p, n in zip(parts, sizes):
        if isinstance(p, (int, float)):
            full.append(np.full(n, float(p)))
        else:
            full.append(p)
    return concatenate(full)


def jet_concat(jets, sizes) -> Jet2:
    return Jet2(
        _field_concat([j.value for j in jets], sizes),
        _field_concat([j.d1 for j in jets], sizes),
        _field_concat([j.d2 for j in jets], sizes),
    )


def scatter_groups(groups, n):
    """Reassemble per-group jets into the original point order.

    ``groups`` is a list of ``(indices, jet)``.
    """
    groups = [(idx, j) for idx, j in groups if len(idx)]
    order = np.concatenate([idx for idx, _ in groups]) if groups else np.zeros(0, int)
    joined = jet_concat([j for _, j in groups], [len(idx) for idx, _ in groups])
    inverse = np.empty(n, dtype=int)
    inverse[order] = np.arange(n)
    if np.array_equal(inverse, np.arange(n)):
        return joined
    return jet_take(joined, inverse)


def snapshot(theta):
    return np.array(value_of(theta), dtype=float, copy=True)


class BoundAnsatz:
    """An ansatz with its parameters fixed; evaluation only."""

    def __init__(self, ansatz, theta):
        self.ansatz = ansatz
        self.theta = theta
        self.is_tape = isinstance(theta, Var)

    def jet(self, pts, direction=0) -> Jet2:
        raise NotImplementedError

    def value(self, pts):
        j = self.jet(pts, 0)
        return np.asarray(value_of(j.value), dtype=float)
