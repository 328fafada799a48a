"""Experiment configuration files.

Configs are TOML.  Every section and key is checked against ``SCHEMA``;
anything unknown or of the wrong type raises :class:`ConfigError` naming
the key and, when it can be found, the line it sits on.
"""

from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import tomli
import tomli_w

from .nn import ConfigurationError, InitScheme
from .problems import get_problem
from .training import KINDS, SOFT_TERMS, TrainConfig, make_collocation

PROBLEMS = ("p1", "p2", "p3", "p4")

_NUM = (int, float)

# section -> key -> (type tag, default)
SCHEMA = {
    "experiment": {
        "name": ("str", None),
        "problem": ("str", None),
        "ansatz": ("str", None),
        "output": ("str", ""),
    },
    "problem": {
        "kappas": ("num_list", None),
    },
    "network": {
        "widths": ("int_list", None),
        "activation": ("str", "tanh"),
        "activations": ("str_list", None),
        "tangential_widths": ("int_list", None),
        "init": ("str", "glorot"),
        "init_scale": ("num", 0.5),
        "init_sigma": ("num", 1.0),
    },
    "window": {
        "beta": ("num", 2.0),
        "k_int": ("int", 1),
        "kd": ("int", 1),
        "kn": ("int", 1),
        "mode": ("str", "interface_only"),
        "interface_size": ("num", 1.2),
    },
    "buffer": {
        "r0": ("num", 1.0 / 9.0),
        "n_per_edge": ("int", 8),
    },
    "collocation": {
        "k": ("int", 40),
        "nx": ("int", 40),
        "ny": ("int", 20),
        "n_edge": ("int", None),
    },
    "train": {
        "iterations": ("int", 30000),
        "learning_rate": ("num", 5e-3),
        "beta1": ("num", 0.9),
        "beta2": ("num", 0.999),
        "epsilon": ("num", 1e-8),
        "seed": ("int", 0),
        "eval_every": ("int", 500),
        "physics": ("str", "cartesian"),
        "weights": ("weights", None),
    },
    "reference": {
        "nx": ("int", 512),
        "ny": ("int", 256),
    },
}

REQUIRED = {("experiment", "name"), ("experiment", "problem"), ("experiment", "ansatz")}


class ConfigError(ConfigurationError):
    """Invalid configuration; ``str()`` names the offending key."""


def _locate(text, section, key):
    """Best-effort 1-based line number of ``key`` inside ``[section]``."""
    if text is None:
        return None
    current = None
    for i, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if line.startswith("[") and line.endswith("]"):
            current = line.strip("[]").strip()
            if key is None and current == section:
                return i
            continue
        if current == section and key is not None:
            name = line.split("=", 1)[0].strip().strip('"')
            if name == key:
                return i
    return None


def _fail(msg, text=None, section=None, key=None):
    line = _locate(text, section, key) if section else None
    where = f"{section}.{key}" if key else section
    prefix = f"line {line}: " if line else ""
    raise ConfigError(f"{prefix}{where}: {msg}")


def _check_type(tag, value):
    if tag == "str":
        return isinstance(value, str)
    if tag == "int":
        return isinstance(value, int) and not isinstance(value, bool)
    if tag == "num":
        return isinstance(value, _NUM) and not isinstance(value, bool)
    if tag == "int_list":
        return isinstance(value, list) and all(isinstance(v, int) and not isinstance(v, bool) for v in value)
    if tag == "num_list":
        return isinstance(value, list) and all(isinstance(v, _NUM) and not isinstance(v, bool) for v in value)
    if tag == "str_list":
        return isinstance(value, list) and all(isinstance(v, str) for v in value)
    if tag == "weights":
        return isinstance(value, dict) and all(isinstance(v, _NUM) and not isinstance(v, bool) for v in value.values())
    raise AssertionError(tag)


@dataclass
class ExperimentConfig:
    """Validated experiment description.  ``sections`` holds every key with defaults filled in."""

    sections: dict
    source: str | None = field(default=None, repr=False, compare=False)

    # convenience accessors
    @property
    def name(self):
        return self.sections["experiment"]["name"]

    @property
    def problem_id(self):
        return self.sections["experiment"]["problem"]

    @property
    def ansatz_kind(self):
        return self.sections["experiment"]["ansatz"]

    def get(self, section, key):
        return self.sections[section][key]

    def to_dict(self):
        """Explicit (non-default-free) nested dict; ``None`` values are dropped."""
        return {s: {k: v for k, v in kv.items() if v is not None} for s, kv in self.sections.items()}

    def config_hash(self):
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:12]

    def with_overrides(self, **dotted):
        """Copy with ``section.key`` overrides, re-validated."""
        d = copy.deepcopy(self.to_dict())
        for path, value in dotted.items():
            section, key = path.split(".", 1)
            d.setdefault(section, {})[key] = value
        return from_dict(d)

    # builders -------------------------------------------------------------
    def train_config(self) -> TrainConfig:
        t = self.sections["train"]
        return TrainConfig(kind=self.ansatz_kind, iterations=t["iterations"], learning_rate=float(t["learning_rate"]),
                           beta1=float(t["beta1"]), beta2=float(t["beta2"]), epsilon=float(t["epsilon"]),
                           weights=t["weights"], seed=t["seed"], eval_every=t["eval_every"], physics=t["physics"])

    def init_scheme(self) -> InitScheme:
        n = self.sections["network"]
        return InitScheme(n["init"], self.sections["train"]["seed"], float(n["init_scale"]), float(n["init_sigma"]))

    def build_problem(self):
        kappas = self.sections["problem"]["kappas"]
        pid = self.problem_id
        if kappas is None:
            return get_problem(pid)
        if pid == "p4":
            return get_problem(pid, kappa_left=float(kappas[0]), kappa_right=float(kappas[1]))
        if pid == "p2":
            return get_problem(pid, kappas=tuple(float(k) for k in kappas))
        return get_problem(pid, k1=float(kappas[0]), k2=float(kappas[1]))

    def build_ansatz(self, problem=None):
        problem = problem or self.build_problem()
        net = self.sections["network"]
        init = self.init_scheme()
        kind = self.ansatz_kind
        dim = problem.dim
        widths = tuple(net["widths"]) if net["widths"] else ((1, 12, 12, 1) if dim == 1 else (2, 25, 25, 25, 1))
        act = net["activation"]
        if kind == "window":
            w = self.sections["window"]
            if dim == 1:
                from .window_ansatz import WindowAnsatz1D, default_layout_1d

                layout = default_layout_1d(problem, float(w["beta"]), w["k_int"], w["kd"], w["kn"])
                return WindowAnsatz1D(problem, layout, widths, act, init)
            from .window_ansatz import WindowAnsatz2D, full_hard_layout, interface_only_layout

            if w["mode"] == "full_hard":
                layout = full_hard_layout(problem, k=w["k_int"])
            else:
                layout = interface_only_layout(float(w["interface_size"]), w["k_int"], w["kd"], w["kn"])
            tw = tuple(net["tangential_widths"]) if net["tangential_widths"] else (1, 25, 25, 25, 1)
            return WindowAnsatz2D(problem, layout, widths, tw, act, init)
        if kind == "buffer":
            from .buffer import BufferAnsatz1D, BufferAnsatz2D

            if dim == 1:
                return BufferAnsatz1D(problem, widths, act, init)
            b = self.sections["buffer"]
            return BufferAnsatz2D(problem, widths, act, init, r0=float(b["r0"]), n_per_edge=b["n_per_edge"])
        from .soft import SoftAnsatz

        mode = "phi" if kind == "soft_phi" else "multinet"
        return SoftAnsatz(problem, mode, widths, act, init, activations=net["activations"])

    def build_collocation(self, problem=None):
        problem = problem or self.build_problem()
        c = self.sections["collocation"]
        if problem.dim == 1:
            return make_collocation(problem, k=c["k"])
        return make_collocation(problem, nx=c["nx"], ny=c["ny"], n_edge=c["n_edge"])


def from_dict(raw: dict, text: str | None = None) -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config must be a table")
    sections = {}
    for section, kv in raw.items():
        if section not in SCHEMA:
            _fail(f"unknown section (expected one of {sorted(SCHEMA)})", text, section)
        if not isinstance(kv, dict):
            _fail("must be a table", text, section)
        for key, value in kv.items():
            if key not in SCHEMA[section]:
                _fail(f"unknown key (expected one of {sorted(SCHEMA[section])})", text, section, key)
            tag = SCHEMA[section][key][0]
            if not _check_type(tag, value):
                _fail(f"expected {tag.replace('_', ' ')}, got {value!r}", text, section, key)
    for section, keys in SCHEMA.items():
        given = raw.get(section, {})
        sections[section] = {k: copy.deepcopy(given.get(k, default)) for k, (_, default) in keys.items()}
    for section, key in sorted(REQUIRED):
        if sections[section][key] is None:
            _fail("missing required key", text, section, key)
    e = sections["experiment"]
    if e["problem"] not in PROBLEMS:
        _fail(f"expected one of {PROBLEMS}, got {e['problem']!r}", text, "experiment", "problem")
    if e["ansatz"] not in KINDS:
        _fail(f"expected one of {KINDS}, got {e['ansatz']!r}", text, "experiment", "ansatz")
    w = sections["window"]
    if w["mode"] not in ("interface_only", "full_hard"):
        _fail("expected 'interface_only' or 'full_hard'", text, "window", "mode")
    if not 0 < float(w["beta"]) <= 2:
        _fail("must lie in (0, 2]", text, "window", "beta")
    for k in ("k_int", "kd", "kn"):
        if w[k] not in (1, 2, 3):
            _fail("window order must be 1, 2 or 3", text, "window", k)
    weights = sections["train"]["weights"]
    if weights is not None:
        bad = sorted(set(weights) - set(SOFT_TERMS))
        if bad:
            _fail(f"unknown loss term(s) {bad}", text, "train", "weights")
    for key in ("iterations", "eval_every"):
        if sections["train"][key] < (0 if key == "iterations" else 1):
            _fail("out of range", text, "train", key)
    if sections["network"]["init"] not in ("glorot", "glorot_scaled", "normal"):
        _fail("expected glorot, glorot_scaled or normal", text, "network", "init")
    cfg = ExperimentConfig(sections, text)
    try:
        cfg.train_config()
        cfg.init_scheme()
    except ConfigError:
        raise
    except ConfigurationError as exc:
        raise ConfigError(str(exc)) from None
    return cfg


def parse(text: str) -> ExperimentConfig:
    try:
        raw = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"syntax error: {exc}") from None
    return from_dict(raw, text)


def load(path) -> ExperimentConfig:
    p = Path(path)
    if not p.exists():
        preset = preset_path(str(path))
        if preset is None:
            raise ConfigError(f"config file {path} not found")
        p = preset
    return parse(p.read_text())


def serialize(cfg: ExperimentConfig) -> str:
    return tomli_w.dumps(cfg.to_dict())


def preset_names():
    root = resources.files("hardpinn") / "presets"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".toml"))


def preset_path(name):
    root = resources.files("hardpinn") / "presets"
    cand = root / (name if name.endswith(".toml") else name + ".toml")
    return Path(str(cand)) if cand.is_file() else None
