"""Command-line front end.

    hardpinn run <config>
    hardpinn sweep <config> --axis {window_k,beta,init_scheme,seed} --values 1,2,3
    hardpinn verify <config>
    hardpinn oracle <problem> --out <path>

``<config>`` is a TOML file or the name of a shipped preset.  Artifacts go
to ``$HARDPINN_OUTPUT_ROOT/<experiment.output or name>`` (default root:
``./runs``).  Exit codes: 0 success, 2 bad input, 3 training diverged.
"""

from __future__ import annotations

import argparse
import csv
import itertools
import json
import logging
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import config as cfgmod
from . import svg
from .autodiff import value_of
from .diagnostics import SEGMENT_NAMES, constraint_rows, edge_profile_2d, write_rows
from .nn import ConfigurationError, load_checkpoint, save_checkpoint
from .problems import relative_l2
from .training import MetricSampler, TrainingDiverged, metric_sampler, p4_reference, physics_residual, train

ENV_ROOT = "HARDPINN_OUTPUT_ROOT"
EXIT_OK, EXIT_INPUT, EXIT_DIVERGED = 0, 2, 3
AXES = ("window_k", "beta", "init_scheme", "seed")

log = logging.getLogger("hardpinn")


class UsageError(Exception):
    pass


def output_root():
    return Path(os.environ.get(ENV_ROOT, "runs"))


def run_dir(cfg, root=None):
    return Path(root or output_root()) / (cfg.get("experiment", "output") or cfg.name)


def _stamp(cfg):
    return [f"config_hash={cfg.config_hash()}", f"seed={cfg.get('train', 'seed')}", f"experiment={cfg.name}"]


def _sampler(cfg, problem):
    if problem.dim == 1:
        return metric_sampler(problem)
    r = cfg.sections["reference"]
    return metric_sampler(problem, oracle=p4_reference(problem, r["nx"], r["ny"]))


def _write_csv(path, header, rows, stamp):
    with open(path, "w", newline="") as fh:
        for line in stamp:
            fh.write(f"# {line}\n")
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])


def _svg(path, text, stamp):
    Path(path).write_text(text.replace(">", f">\n<!-- {'; '.join(stamp)} -->", 1))


def write_artifacts(cfg, problem, ansatz, theta, out: Path, sampler: MetricSampler):
    """Post-processing shared by ``run`` and ``verify``; never feeds back into training."""
    stamp = _stamp(cfg)
    bound = ansatz.bind(theta)
    u = bound.value(sampler.points)
    err = np.abs(u - sampler.reference)
    if problem.dim == 1:
        x = sampler.points[:, 0]
        _write_csv(out / "profile.csv", ["x", "u_pred", "u_ref", "abs_err"], zip(x, u, sampler.reference, err), stamp)
        _svg(out / "solution.svg", svg.line_chart(
            [("reference", x, sampler.reference), ("prediction", x, u, True)],
            title=f"{cfg.name}: solution", ylabel="u"), stamp)
        xs = np.linspace(*problem.bounds, 801)
        xs = xs[~np.isin(xs, problem.interfaces)]
        lhs = np.asarray(value_of(physics_residual(bound, xs[:, None], problem)), dtype=float) + problem.source(xs)
        _svg(out / "lhs_rhs.svg", svg.line_chart(
            [("-(k u')'", xs, lhs), ("f", xs, problem.source(xs), True)], title=f"{cfg.name}: operator vs source"),
            stamp)
    else:
        _write_csv(out / "profile.csv", ["x", "y", "u_pred", "u_ref", "abs_err"],
                   zip(sampler.points[:, 0], sampler.points[:, 1], u, sampler.reference, err), stamp)
        nx = len(np.unique(sampler.points[:, 0]))
        ny = len(np.unique(sampler.points[:, 1]))
        grid = u.reshape(nx, ny)
        _svg(out / "solution.svg", svg.heatmap(grid, (0, problem.width, 0, problem.height),
                                               title=f"{cfg.name}: prediction"), stamp)
        _svg(out / "error.svg", svg.heatmap(err.reshape(nx, ny), (0, problem.width, 0, problem.height),
                                            title=f"{cfg.name}: |u - u_ref|"), stamp)
        ys = np.full(401, 0.5)
        xs = np.linspace(0.0, problem.width, 401)
        keep = np.abs(problem.level(xs, ys)) > 1e-9
        pts = np.column_stack([xs[keep], ys[keep]])
        f = problem.source(pts[:, 0], pts[:, 1])
        lhs = np.asarray(value_of(physics_residual(bound, pts, problem)), dtype=float) + f
        _svg(out / "lhs_rhs.svg", svg.line_chart(
            [("-div(k grad u)", pts[:, 0], lhs), ("f", pts[:, 0], f, True)],
            title=f"{cfg.name}: operator vs source along y=0.5"), stamp)
        prof = []
        for sid, seg in enumerate(problem.segments()):
            t = (np.arange(200) + 0.5) / 200
            p, res = edge_profile_2d(bound, problem, seg, t=t)
            for cond, r in res.items():
                prof += [(SEGMENT_NAMES[sid], cond, ti, pi[0], pi[1], ri) for ti, pi, ri in zip(t, p, r)]
        _write_csv(out / "edge_profiles.csv", ["edge", "condition", "t", "x", "y", "abs_residual"], prof, stamp)
    rows = constraint_rows(bound, problem)
    write_rows(out / "constraints.csv", rows, stamp)
    _svg(out / "constraints.svg", svg.bar_chart(
        [f"{r.condition}@{r.location}/{r.where}" for r in rows], [max(r.max_abs, 1e-300) for r in rows],
        title=f"{cfg.name}: max |constraint residual|", ylabel="log10"), stamp)
    return rows, relative_l2(u, sampler.reference)


def run_experiment(cfg, root=None, quiet=True):
    """Train, write artifacts and a checkpoint; returns (report, out_dir)."""
    out = run_dir(cfg, root)
    out.mkdir(parents=True, exist_ok=True)
    problem = cfg.build_problem()
    ansatz = cfg.build_ansatz(problem)
    colloc = cfg.build_collocation(problem)
    tc = cfg.train_config()
    sampler = _sampler(cfg, problem)
    theta0 = ansatz.init_params(cfg.init_scheme())
    stamp = _stamp(cfg)

    def log_progress(it, loss):
        if it % max(tc.eval_every, 1) == 0:
            log.info("step %d loss %.4e", it, loss)

    progress = None if quiet else log_progress
    try:
        report = train(tc, ansatz, problem, colloc, theta0=theta0, sampler=sampler, progress=progress)
    except TrainingDiverged as exc:
        exc.report.extra.update(config_hash=cfg.config_hash(), experiment=cfg.name, status="diverged")
        exc.report.write_json(out / "report.json")
        raise
    nets = {f"net{i}": n for i, n in enumerate(ansatz.nets)} if isinstance(ansatz.nets, list) else dict(ansatz.nets)
    nets.update(getattr(ansatz, "tnets", {}) or {})
    save_checkpoint(out / "checkpoint.json", nets, report.theta,
                    {"config_hash": cfg.config_hash(), "seed": tc.seed, "experiment": cfg.name})
    rows, _ = write_artifacts(cfg, problem, ansatz, report.theta, out, sampler)
    report.extra.update(config_hash=cfg.config_hash(), experiment=cfg.name, status="ok",
                        constraints=[r.__dict__ for r in rows])
    report.write_json(out / "report.json")
    report.write_history_csv(out / "history.csv", stamp)
    (out / "config.toml").write_text(cfgmod.serialize(cfg))
    return report, out


def verify_experiment(cfg, root=None):
    out = run_dir(cfg, root)
    ck = out / "checkpoint.json"
    if not ck.exists():
        raise UsageError(f"no checkpoint at {ck}; run the experiment first")
    doc = load_checkpoint(ck)
    if doc.get("config_hash") != cfg.config_hash():
        log.warning("checkpoint was written for config %s, current config is %s",
                    doc.get("config_hash"), cfg.config_hash())
    problem = cfg.build_problem()
    ansatz = cfg.build_ansatz(problem)
    theta = doc["theta"]
    if theta.size != ansatz.n_params:
        raise UsageError("checkpoint does not match the configured ansatz")
    vdir = out / "verify"
    vdir.mkdir(exist_ok=True)
    rows, rel = write_artifacts(cfg, problem, ansatz, theta, vdir, _sampler(cfg, problem))
    return rows, rel, vdir


def _parse_values(axis, text):
    items = [v.strip() for v in text.split(",") if v.strip()]
    if not items:
        raise UsageError("--values is empty")
    try:
        if axis in ("window_k", "seed"):
            return [int(v) for v in items]
        if axis == "beta":
            return [float(v) for v in items]
    except ValueError:
        raise UsageError(f"--values: cannot parse {text!r} for axis {axis}") from None
    return items


def sweep_points(cfg, axis, values):
    """Expand an axis into (label, overrides) pairs."""
    if axis not in AXES:
        raise cfgmod.ConfigError(f"sweep axis {axis!r} unknown (expected one of {AXES})")
    if axis in ("window_k", "beta") and cfg.ansatz_kind != "window":
        raise cfgmod.ConfigError(f"sweep axis {axis} needs a window ansatz, config has {cfg.ansatz_kind}")
    if axis == "window_k":
        # interior order crossed with paired boundary/interface orders
        return [(f"k_int={ki};kd=kn={kb}", {"window.k_int": ki, "window.kd": kb, "window.kn": kb})
                for ki, kb in itertools.product(values, values)]
    if axis == "beta":
        return [(f"{v:g}", {"window.beta": float(v)}) for v in values]
    if axis == "init_scheme":
        return [(v, {"network.init": v}) for v in values]
    return [(str(v), {"train.seed": int(v)}) for v in values]


def sweep_experiment(cfg, axis, values, root=None):
    base = run_dir(cfg, root)
    rows = []
    for label, over in sweep_points(cfg, axis, values):
        tag = label.replace(";", "_").replace("=", "").replace(",", "_")
        sub = cfg.with_overrides(**over, **{"experiment.output": str(Path(base.name) / f"{axis}_{tag}")})
        t0 = time.perf_counter()
        report, _ = run_experiment(sub, root=base.parent)
        rows.append((label, report.final_relative_l2, time.perf_counter() - t0, sub.get("train", "seed"),
                     sub.config_hash()))
    base.mkdir(parents=True, exist_ok=True)
    _write_csv(base / f"sweep_{axis}.csv", ["axis_value", "final_relative_l2", "wall_seconds", "seed", "config_hash"],
               rows, [f"base_config_hash={cfg.config_hash()}", f"axis={axis}"])
    _svg(base / f"sweep_{axis}.svg", svg.bar_chart([r[0] for r in rows], [r[1] for r in rows],
                                                   title=f"{cfg.name}: relative L2 by {axis}", ylabel="log10"),
         [f"base_config_hash={cfg.config_hash()}"])
    return rows


def oracle_command(problem_id, out, nx=256, ny=None, fmt=None, windows=True):
    from .fdref import reference_p4, write_binary, write_csv
    from .problems import get_problem
    from .windows import DIRICHLET, INTERIOR, NEUMANN, window_samples_csv

    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    problem = get_problem(problem_id)
    if problem.dim == 1:
        x = problem.test_points(1001)
        _write_csv(out, ["x", "u_ref"], zip(x, problem.oracle(x)), [f"problem={problem_id}", "source=analytic"])
    else:
        field_ = reference_p4(problem, nx=nx, ny=ny)
        if (fmt or out.suffix.lstrip(".")) in ("bin", "grid"):
            write_binary(field_, out)
        else:
            write_csv(field_, out)
    if windows:
        for kind in (INTERIOR, DIRICHLET, NEUMANN):
            for k in (1, 2, 3):
                (out.parent / f"window_{kind}_k{k}.csv").write_text(window_samples_csv(kind, k))
    return out


def build_parser():
    p = argparse.ArgumentParser(prog="hardpinn", description=__doc__,
                                formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("-v", "--verbose", action="store_true", help="log training progress")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="train one configuration and write its artifacts")
    r.add_argument("config", help="TOML file or preset name")
    r.add_argument("--out", help=f"output root (overrides ${ENV_ROOT})")
    r.add_argument("--iterations", type=int, help="override train.iterations")
    s = sub.add_parser("sweep", help="run one configuration per axis value and tabulate the errors")
    s.add_argument("config")
    s.add_argument("--axis", required=True, choices=AXES)
    s.add_argument("--values", required=True, help="comma-separated list")
    s.add_argument("--out", help=f"output root (overrides ${ENV_ROOT})")
    s.add_argument("--iterations", type=int, help="override train.iterations")
    v = sub.add_parser("verify", help="re-evaluate constraint residuals from a saved checkpoint")
    v.add_argument("config")
    v.add_argument("--out", help=f"output root (overrides ${ENV_ROOT})")
    o = sub.add_parser("oracle", help="write the reference solution of a problem")
    o.add_argument("problem", choices=cfgmod.PROBLEMS)
    o.add_argument("--out", required=True, help="output file (.csv, or .bin for the binary grid)")
    o.add_argument("--nx", type=int, default=256, help="finite-volume cells along x (p4)")
    o.add_argument("--ny", type=int, default=None, help="cells along y (p4; default nx/2)")
    o.add_argument("--no-windows", action="store_true", help="skip the window-function sample tables")
    sub.add_parser("presets", help="list shipped configurations")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        if args.command == "presets":
            print("\n".join(cfgmod.preset_names()))
            return EXIT_OK
        if args.command == "oracle":
            path = oracle_command(args.problem, args.out, args.nx, args.ny, windows=not args.no_windows)
            print(path)
            return EXIT_OK
        cfg = cfgmod.load(args.config)
        if getattr(args, "iterations", None) is not None:
            cfg = cfg.with_overrides(**{"train.iterations": args.iterations})
        if args.command == "run":
            report, out = run_experiment(cfg, args.out, quiet=not args.verbose)
            print(json.dumps({"out": str(out), "final_relative_l2": report.final_relative_l2,
                              "wall_seconds": report.wall_seconds}))
        elif args.command == "sweep":
            rows = sweep_experiment(cfg, args.axis, _parse_values(args.axis, args.values), args.out)
            for r in rows:
                print(f"{r[0]}\t{r[1]:.3e}\t{r[2]:.1f}s")
        else:
            rows, rel, vdir = verify_experiment(cfg, args.out)
            for r in rows:
                print(f"{r.condition:>14} {r.location:>12} {r.where:>8} max {r.max_abs:.3e} mean {r.mean_abs:.3e}")
            print(f"relative_l2 {rel:.4e}  ({vdir})")
    except (cfgmod.ConfigError, ConfigurationError, UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except TrainingDiverged as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
