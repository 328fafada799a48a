"""Fully-connected networks, initialization schemes and the Adam optimizer.

Parameters are stored as one flat float64 vector per network.  The forward
pass accepts either that ndarray or a tape ``Var`` view of it, so the same
code path serves plain evaluation and reverse-mode training.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .autodiff import Jet2, NanError, Var, value_of

ACTIVATIONS = ("tanh", "sigmoid", "swish", "silu")
INIT_SCHEMES = ("glorot", "glorot_scaled", "normal")
CHECKPOINT_VERSION = 1


class ConfigurationError(ValueError):
    """Inconsistent configuration (shapes, schemes, missing data...)."""


@dataclass(frozen=True)
class InitScheme:
    """How to draw initial weights.

    ``kind`` is one of ``glorot``, ``glorot_scaled`` or ``normal``.  ``scale``
    multiplies the Glorot limit for ``glorot_scaled``; ``sigma`` is the normal
    standard deviation.  Random numbers come from numpy's PCG64 generator
    seeded with ``seed``.
    """

    kind: str = "glorot"
    seed: int = 0
    scale: float = 0.5
    sigma: float = 1.0

    def __post_init__(self):
        if self.kind not in INIT_SCHEMES:
            raise ConfigurationError(f"unknown init scheme {self.kind!r}")
        if self.kind == "glorot_scaled" and self.scale <= 0:
            raise ConfigurationError("glorot scale must be positive")
        if self.kind == "normal" and self.sigma < 0:
            raise ConfigurationError("normal sigma must be non-negative")

    def to_dict(self):
        return {"kind": self.kind, "seed": int(self.seed), "scale": float(self.scale), "sigma": float(self.sigma)}


class Mlp:
    """Multilayer perceptron with a linear output layer.

    The flat parameter layout is, layer by layer, the row-major weight matrix
    (``widths[l+1] x widths[l]``) followed by the bias vector.
    """

    def __init__(self, widths: Sequence[int], activation: str = "tanh", init: InitScheme | None = None):
        widths = [int(w) for w in widths]
        if len(widths) < 2 or any(w <= 0 for w in widths):
            raise ConfigurationError(f"invalid layer widths {widths}")
        if activation not in ACTIVATIONS:
            raise ConfigurationError(f"unknown activation {activation!r}")
        self.widths = widths
        self.activation = activation
        self.init = init or InitScheme()
        self._slices = []
        offset = 0
        for fan_in, fan_out in zip(widths[:-1], widths[1:]):
            w = slice(offset, offset + fan_in * fan_out)
            offset += fan_in * fan_out
            b = slice(offset, offset + fan_out)
            offset += fan_out
            self._slices.append((w, b, (fan_out, fan_in)))
        self.n_params = offset

    def __repr__(self):
        return f"Mlp({self.widths}, {self.activation})"

    @property
    def n_in(self):
        return self.widths[0]

    def unflatten(self, params):
        return [(params[w].reshape(shape), params[b]) for w, b, shape in self._slices]

    def initial_params(self, scheme: InitScheme | None = None) -> np.ndarray:
        scheme = scheme or self.init
        rng = np.random.default_rng(scheme.seed)
        theta = np.zeros(self.n_params)
        for w, _, (fan_out, fan_in) in self._slices:
            n = fan_in * fan_out
            if scheme.kind == "normal":
                theta[w] = rng.normal(0.0, scheme.sigma, n) if scheme.sigma > 0 else 0.0
            else:
                limit = np.sqrt(6.0 / (fan_in + fan_out))
                if scheme.kind == "glorot_scaled":
                    limit *= scheme.scale
                theta[w] = rng.uniform(-limit, limit, n)
        return theta

    def _activate(self, z: Jet2) -> Jet2:
        if self.activation == "tanh":
            return z.tanh()
        if self.activation == "sigmoid":
            return z.sigmoid()
        return z.silu()  # swish with unit slope is silu

    def forward(self, params, x: Jet2) -> Jet2:
        """Evaluate on a batch of jets.

        ``x`` fields have shape ``(N, widths[0])`` (d1/d2 may also be a
        broadcastable constant or 0); the result has fields of shape ``(N,)``.
        """
        xv = np.asarray(x.value)
        if xv.ndim != 2 or xv.shape[1] != self.widths[0]:
            raise ConfigurationError(f"input of shape {xv.shape} does not match width {self.widths[0]}")
        if np.shape(value_of(params)) != (self.n_params,):
            raise ConfigurationError("parameter vector has the wrong length")
        layers = self.unflatten(params)
        h = x
        for i, (w, b) in enumerate(layers):
            wt = w.T
            n = xv.shape[0]
            z = Jet2(h.value @ wt + b, _matmul(h.d1, wt, n), _matmul(h.d2, wt, n))
            h = self._activate(z) if i < len(layers) - 1 else z
        return Jet2(_column(h.value), _column(h.d1), _column(h.d2))

    def __call__(self, params, x):
        """Plain evaluation at points ``x`` of shape ``(N, d)``."""
        x = np.asarray(x, dtype=float)
        if x.ndim == 1:
            x = x[:, None]
        return np.asarray(self.forward(params, Jet2(x)).value)


def _matmul(a, wt, n):
    if isinstance(a, (int, float)):
        if a == 0:
            return 0.0
        a = np.full((n, wt.shape[0]), float(a))
    return a @ wt


def _column(a):
    if isinstance(a, (int, float)):
        return a
    return a[:, 0] if np.ndim(a.value if isinstance(a, Var) else a) == 2 else a


def init_mlp(widths, activation="tanh", scheme: InitScheme | None = None):
    """Build a network and its initial parameter vector."""
    net = Mlp(widths, activation, scheme)
    return net, net.initial_params()


def mlp_forward(net: Mlp, params, x: Jet2) -> Jet2:
    return net.forward(params, x)


# ---------------------------------------------------------------------------
# parameter packing
# ---------------------------------------------------------------------------


@dataclass
class ParamPack:
    """Named contiguous blocks inside one flat trainable vector."""

    blocks: dict = field(default_factory=dict)
    size: int = 0

    def add(self, name: str, n: int) -> slice:
        if name in self.blocks:
            raise ConfigurationError(f"duplicate parameter block {name!r}")
        sl = slice(self.size, self.size + n)
        self.blocks[name] = sl
        self.size += n
        return sl

    def get(self, theta, name):
        return theta[self.blocks[name]]

    def names(self):
        return list(self.blocks)


# ---------------------------------------------------------------------------
# Adam
# ---------------------------------------------------------------------------


@dataclass
class AdamState:
    n: int
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    step: int = 0
    m: np.ndarray = None
    v: np.ndarray = None

    def __post_init__(self):
        if self.m is None:
            self.m = np.zeros(self.n)
        if self.v is None:
            self.v = np.zeros(self.n)


def adam_step(state: AdamState, theta: np.ndarray, grad: np.ndarray) -> np.ndarray:
    """One bias-corrected Adam update; returns the new parameter vector."""
    grad = np.asarray(grad, dtype=float)
    if grad.shape != theta.shape:
        raise ConfigurationError("gradient and parameter lengths differ")
    if not np.all(np.isfinite(grad)):
        raise NanError("non-finite gradient passed to Adam")
    state.step += 1
    state.m = state.beta1 * state.m + (1.0 - state.beta1) * grad
    state.v = state.beta2 * state.v + (1.0 - state.beta2) * grad * grad
    mhat = state.m / (1.0 - state.beta1**state.step)
    vhat = state.v / (1.0 - state.beta2**state.step)
    return theta - state.learning_rate * mhat / (np.sqrt(vhat) + state.epsilon)


# ---------------------------------------------------------------------------
# checkpoints
# ---------------------------------------------------------------------------


def net_record(net: Mlp, params) -> dict:
    return {
        "widths": list(net.widths),
        "activation": net.activation,
        "init": net.init.to_dict(),
        "params": [float(v) for v in np.asarray(params)],
    }


def net_from_record(rec: dict):
    init = InitScheme(**rec["init"])
    net = Mlp(rec["widths"], rec["activation"], init)
    params = np.asarray(rec["params"], dtype=float)
    if params.size != net.n_params:
        raise ConfigurationError("checkpoint parameter count does not match widths")
    return net, params


def save_checkpoint(path, nets: dict, theta, extra: dict | None = None):
    """Write a JSON checkpoint.

    Fields: ``format_version``, ``nets`` (name -> widths/activation/init),
    ``theta`` (full flat vector), plus anything in ``extra``.
    """
    doc = {
        "format_version": CHECKPOINT_VERSION,
        "nets": {name: {k: v for k, v in net_record(net, np.zeros(net.n_params)).items() if k != "params"}
                 for name, net in nets.items()},
        "theta": [float(v) for v in np.asarray(theta)],
    }
    if extra:
        doc.update(extra)
    Path(path).write_text(json.dumps(doc, indent=1))
    return doc


def load_checkpoint(path) -> dict:
    doc = json.loads(Path(path).read_text())
    if doc.get("format_version") != CHECKPOINT_VERSION:
        raise ConfigurationError(f"unsupported checkpoint version {doc.get('format_version')}")
    doc["theta"] = np.asarray(doc["theta"], dtype=float)
    return doc
