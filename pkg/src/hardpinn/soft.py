"""Soft-constrained baselines.

``phi``: one network whose extra input is a per-subdomain label fixed
before training.  ``multinet``: one network per subdomain.  Both rely on
penalty terms for boundary and interface conditions.
"""

from __future__ import annotations

import numpy as np

from .base import BoundAnsatz, as_directions, as_points, net_jet, scatter_groups
from .nn import InitScheme, Mlp, ParamPack


class SoftAnsatz:
    def __init__(self, problem, mode="multinet", widths=None, activation="tanh", init: InitScheme | None = None,
                 activations=None):
        if mode not in ("phi", "multinet"):
            raise ValueError(f"unknown soft baseline {mode!r}")
        self.problem = problem
        self.mode = mode
        self.kind = "soft_phi" if mode == "phi" else "soft_multinet"
        self.dim = problem.dim
        self.n_sub = problem.n_subdomains if self.dim == 1 else 2
        self.init = init or InitScheme()
        d = self.dim
        widths = list(widths or ([d, 12, 12, 1] if d == 1 else [d, 25, 25, 25, 1]))
        if mode == "phi":
            widths[0] = d + 1
            self.nets = [Mlp(widths, activation, self.init)]
        else:
            widths[0] = d
            acts = activations or [activation] * self.n_sub
            self.nets = [Mlp(widths, acts[m], self.init) for m in range(self.n_sub)]
        self.pack = ParamPack()
        for m, net in enumerate(self.nets):
            self.pack.add(f"net{m}", net.n_params)

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

    def label(self, m):
        return m / max(self.n_sub - 1, 1)

    def subdomain(self, pts):
        p = self.problem
        if self.dim == 1:
            return p.subdomain(pts[:, 0])
        return p.subdomain(pts[:, 0], pts[:, 1])

    def bind(self, theta):
        return BoundSoft(self, theta)


class BoundSoft(BoundAnsatz):
    def side_jet(self, m, pts, direction=0):
        """Representation of subdomain ``m`` at arbitrary points."""
        a: SoftAnsatz = self.ansatz
        pts = as_points(pts, a.dim)
        dirs = as_directions(direction, len(pts), a.dim)
        if a.mode == "phi":
            lab = np.full((len(pts), 1), a.label(m))
            inp = np.hstack([pts, lab])
            d = np.hstack([dirs, np.zeros((len(pts), 1))])
            return net_jet(a.nets[0], a.pack.get(self.theta, "net0"), inp, d)
        return net_jet(a.nets[m], a.pack.get(self.theta, f"net{m}"), pts, dirs)

    def jet(self, pts, direction=0):
        a: SoftAnsatz = self.ansatz
        pts = as_points(pts, a.dim)
        dirs = as_directions(direction, len(pts), a.dim)
        sub = a.subdomain(pts)
        groups = []
        for m in range(a.n_sub):
            idx = np.nonzero(sub == m)[0]
            if idx.size:
                groups.append((idx, self.side_jet(m, pts[idx], dirs[idx])))
        return scatter_groups(groups, len(pts))
