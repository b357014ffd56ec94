"""Command-line driver: ``subspace-scaling <command> --config FILE [--set key=value ...]``.

Config files are YAML. Experiment commands read an ``experiment`` section
(fields of :class:`ExperimentConfig`); sweep commands read their own section.
Every output is named ``<command>-<experiment_id>`` where the id hashes the
fully resolved config, which is also echoed into the JSON summary.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np
import yaml

from . import harness, output, theory
from .fast_petrels import DyadicMask
from .harness import ConfigError, ExperimentConfig, config_hash

DEFAULT_SEED = 42
EXIT_OK, EXIT_RUNTIME, EXIT_USAGE = 0, 1, 2

REQUIRED_EXPERIMENT = ("algo", "n", "d", "lambdas", "sigma", "alpha", "q0", "T", "n_trials")
REQUIRED_BY_ALGO = {"oja": ("tau",), "grouse": ("tau",), "petrels": ("mu", "delta")}
CROSS_CHECK_TOL = 1e-6


class UsageError(Exception):
    """Bad command line or config; maps to exit code 2."""


def parse_override(text: str) -> tuple[list[str], object]:
    key, sep, raw = text.partition("=")
    if not sep or not key:
        raise UsageError(f"--set expects key=value, got {text!r}")
    try:
        value = yaml.safe_load(raw)
    except yaml.YAMLError as exc:
        raise UsageError(f"cannot parse value in {text!r}: {exc}") from exc
    return key.split("."), value


def apply_overrides(raw: dict, overrides) -> dict:
    for item in overrides or []:
        path, value = parse_override(item)
        node = raw
        for part in path[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise UsageError(f"--set {item!r} descends into a non-mapping")
        node[path[-1]] = value
    return raw


def load_config(path, overrides=()) -> dict:
    if path is None:
        raw = {}
    else:
        p = Path(path)
        if not p.is_file():
            raise UsageError(f"config file not found: {p}")
        try:
            raw = yaml.safe_load(p.read_text()) or {}
        except yaml.YAMLError as exc:
            raise UsageError(f"invalid YAML in {p}: {exc}") from exc
        if not isinstance(raw, dict):
            raise UsageError("config must be a mapping")
    return apply_overrides(raw, overrides)


def _section(raw: dict, name: str) -> dict:
    sec = raw.get(name)
    if not isinstance(sec, dict):
        raise UsageError(f"config needs a '{name}' section")
    return dict(sec)


def _require(sec: dict, keys, where: str) -> None:
    missing = [k for k in keys if k not in sec]
    if missing:
        raise UsageError(f"'{where}' is missing required keys: {missing}")


def _apply_seed(sec: dict, seed) -> dict:
    if seed is not None:
        sec["seed"] = seed
    sec.setdefault("seed", DEFAULT_SEED)
    return sec


def experiment_from(raw: dict, seed=None) -> ExperimentConfig:
    sec = _apply_seed(_section(raw, "experiment"), seed)
    _require(sec, REQUIRED_EXPERIMENT, "experiment")
    _require(sec, REQUIRED_BY_ALGO.get(sec["algo"], ()), "experiment")
    if "record_times" not in sec and "record_dt" not in sec:
        raise UsageError("'experiment' needs record_times or record_dt")
    return ExperimentConfig.from_dict(sec)


def _stem(out: Path, command: str, experiment_id: str) -> Path:
    return out / f"{command}-{experiment_id}"


def _ode_params(sec: dict) -> theory.OdeParams:
    return theory.OdeParams(
        lambdas=np.atleast_1d(np.asarray(sec["lambdas"], dtype=float)),
        sigma=float(sec["sigma"]), alpha=float(sec["alpha"]), mu=float(sec["mu"]),
    )


# Each command returns a "plan" (validated inputs) and a runner; validation
# errors are usage errors, failures while running are runtime errors.


def plan_simulate(raw, args):
    cfg = experiment_from(raw, args.seed)

    def run(out: Path) -> dict:
        rec = harness.run_experiment(cfg, workers=args.workers)
        eid = cfg.experiment_id
        stem = _stem(out, "simulate", eid)
        output.write_trajectory_csv(f"{stem}.csv", eid, rec.times, mean=rec.mean, std=rec.std)
        output.write_trials_csv(f"{stem}-trials.csv", eid, rec.times, rec.cosines)
        summary = {
            "command": "simulate", "experiment_id": eid, "config": cfg.to_dict(),
            "seed": cfg.seed, "steps": cfg.steps, "skips": rec.skips,
            "final_mean": rec.mean[-1],
        }
        output.write_json(f"{stem}.json", summary)
        return summary

    return run


def _predict_methods(cfg: ExperimentConfig) -> tuple[str, str]:
    if cfg.algo == "petrels":
        return "full", "reduced"
    constant = cfg.ode_params().constant_tau is not None
    return ("closed" if constant else "general"), "rk4"


def plan_predict(raw, args):
    cfg = experiment_from(raw, args.seed)

    def run(out: Path) -> dict:
        eid = cfg.experiment_id
        stem = _stem(out, "predict", eid)
        curves = {}
        for method in _predict_methods(cfg):
            curves[method] = harness.predict_for(cfg, method=method)
            output.write_trajectory_csv(f"{stem}-{method}.csv", eid, cfg.record_times, theory=curves[method])
        a, b = curves.values()
        diff = float(np.max(np.abs(a - b)))
        summary = {
            "command": "predict", "experiment_id": eid, "config": cfg.to_dict(),
            "methods": list(curves), "max_method_difference": diff,
            "methods_agree": diff <= CROSS_CHECK_TOL, "tolerance": CROSS_CHECK_TOL,
        }
        output.write_json(f"{stem}.json", summary)
        return summary

    return run


def plan_compare(raw, args):
    cfg = experiment_from(raw, args.seed)

    def run(out: Path) -> dict:
        eid = cfg.experiment_id
        stem = _stem(out, "compare", eid)
        rec = harness.run_experiment(cfg, workers=args.workers)
        pred = harness.predict_for(cfg)
        report = harness.compare_to_theory(rec, pred)
        output.write_trajectory_csv(f"{stem}.csv", eid, rec.times, mean=rec.mean, std=rec.std,
                                    theory=pred, abs_err=report.abs_err)
        output.write_trials_csv(f"{stem}-trials.csv", eid, rec.times, rec.cosines)
        summary = {
            "command": "compare", "experiment_id": eid, "config": cfg.to_dict(),
            **report.summary(),
            "within_floor_0.03_or_2sem": bool(np.all(report.within(0.03))),
            "skips": rec.skips,
        }
        output.write_json(f"{stem}.json", summary)
        return summary

    return run


def plan_rate(raw, args):
    cfg = experiment_from(raw, args.seed)
    sec = _section(raw, "rate")
    _require(sec, ("n_list", "t_star"), "rate")
    n_list = [int(n) for n in sec["n_list"]]
    t_star = float(sec["t_star"])
    if len(n_list) < 2:
        raise UsageError("rate: a slope needs at least two values of n")
    if any(b <= a for a, b in zip(n_list, n_list[1:])):
        raise UsageError("rate: n_list must be strictly increasing")
    if not 0 <= t_star <= cfg.T:
        raise UsageError("rate: t_star must lie in [0, T]")
    resolved = {"experiment": cfg.to_dict(), "rate": {"n_list": n_list, "t_star": t_star}}
    eid = config_hash(resolved)

    def run(out: Path) -> dict:
        stem = _stem(out, "rate", eid)
        fit = harness.finite_sample_sweep(cfg, n_list, t_star, workers=args.workers)
        output.write_rows(
            f"{stem}.csv", ("experiment_id", "n", "statistic", "value"),
            [(eid, n, s, v) for n, e, se in zip(n_list, fit.errors, fit.error_sem)
             for s, v in (("mean_err", e), ("sem", se))],
        )
        output.write_rows(
            f"{stem}-trials.csv", ("experiment_id", "n", "trial", "error"),
            [(eid, n, i, v) for n, errs in zip(n_list, fit.per_trial) for i, v in enumerate(errs)],
        )
        summary = {
            "command": "rate", "experiment_id": eid, "config": resolved,
            "slope": fit.slope, "intercept": fit.intercept, "degenerate": fit.degenerate,
            "mean_errors": fit.errors,
        }
        output.write_json(f"{stem}.json", summary)
        return summary

    return run


def plan_phase_portrait(raw, args):
    sec = _section(raw, "portrait")
    _require(sec, ("lambdas", "sigma", "alpha", "mu", "starts", "t_end"), "portrait")
    try:
        p = _ode_params(sec)
        starts = [(float(q2), float(G)) for q2, G in sec["starts"]]
    except (TypeError, ValueError) as exc:
        raise UsageError(f"portrait: {exc}") from exc
    if p.d != 1:
        raise UsageError("portrait: phase portraits need a single lambda")
    h = float(sec.get("h", 1e-3))
    sample_dt = float(sec.get("sample_dt", 0.05))
    g_max = sec.get("g_max")
    resolved = {"portrait": {**sec, "starts": starts, "h": h, "sample_dt": sample_dt, "g_max": g_max}}
    eid = config_hash(resolved)

    def run(out: Path) -> dict:
        stem = _stem(out, "phase-portrait", eid)
        grid = None if g_max is None else np.linspace(float(g_max) / 400, float(g_max), 400)
        pp = harness.phase_portrait(p, starts, float(sec["t_end"]), h=h, sample_dt=sample_dt, G_grid=grid)
        output.write_rows(
            f"{stem}-trajectories.csv", ("experiment_id", "start", "t", "q2", "G"),
            [(eid, i, *row) for i, tr in enumerate(pp.trajectories) for row in tr],
        )
        output.write_rows(
            f"{stem}-nullclines.csv", ("experiment_id", "G", "f", "h"),
            [(eid, g, f, hh) for g, f, hh in zip(pp.G_grid, pp.f, pp.h)],
        )
        fp = pp.fixed_point
        summary = {
            "command": "phase-portrait", "experiment_id": eid, "config": resolved,
            "fixed_point": {"kind": type(fp).__name__, "q2": fp.q2, "G": fp.G},
            "critical_mu": theory.petrels_critical_mu(p),
            "endpoints": [tr[-1, 1:] for tr in pp.trajectories],
        }
        output.write_json(f"{stem}.json", summary)
        return summary

    return run


PHASE_MAP_DEFAULTS = {"alpha": 0.5, "sigma": 1.0, "delta": 10.0, "q0": 0.5, "engine": "fast"}


def plan_phase_map(raw, args):
    sec = _apply_seed(_section(raw, "phase_map"), args.seed)
    _require(sec, ("mu_grid", "snr_grid", "n", "t_end", "trials"), "phase_map")
    sec = {**PHASE_MAP_DEFAULTS, **sec}
    unknown = set(sec) - set(PHASE_MAP_DEFAULTS) - {"mu_grid", "snr_grid", "n", "t_end", "trials", "seed"}
    if unknown:
        raise UsageError(f"phase_map: unknown keys {sorted(unknown)}")
    if sec["engine"] not in ("fast", "reference"):
        raise UsageError("phase_map: engine must be 'fast' or 'reference'")
    if sec["engine"] == "fast":
        try:
            DyadicMask.from_alpha(float(sec["alpha"]))
        except ValueError as exc:
            raise UsageError(f"phase_map: {exc}") from exc
    if not float(max(sec["mu_grid"])) < int(sec["n"]):
        raise UsageError("phase_map: every mu must be below n")
    eid = config_hash({"phase_map": sec})

    def run(out: Path) -> dict:
        stem = _stem(out, "phase-map", eid)
        kwargs = {k: sec[k] for k in ("alpha", "sigma", "delta", "q0", "seed", "engine")}
        hm = harness.phase_heatmap(sec["mu_grid"], sec["snr_grid"], n=int(sec["n"]), t_end=float(sec["t_end"]),
                                   trials=int(sec["trials"]), workers=args.workers, **kwargs)
        output.write_rows(
            f"{stem}.csv", ("experiment_id", "snr", "mu", "mean_q2", "sem_q2", "critical_mu"),
            [(eid, s, m, hm.mean[i, j], hm.sem[i, j], hm.critical_mu[i])
             for i, s in enumerate(hm.snr_grid) for j, m in enumerate(hm.mu_grid)],
        )
        output.write_rows(
            f"{stem}-trials.csv", ("experiment_id", "snr", "mu", "trial", "q2", "skips"),
            [(eid, s, m, t, hm.q2[i, j, t], hm.skips[i, j, t])
             for i, s in enumerate(hm.snr_grid) for j, m in enumerate(hm.mu_grid) for t in range(hm.q2.shape[2])],
        )
        snr, crit = hm.boundary_curve()
        output.write_rows(f"{stem}-boundary.csv", ("experiment_id", "snr", "critical_mu"),
                          [(eid, s, c) for s, c in zip(snr, crit)])
        summary = {"command": "phase-map", "experiment_id": eid, "config": {"phase_map": sec},
                   "mean_q2": hm.mean, "critical_mu": hm.critical_mu}
        output.write_json(f"{stem}.json", summary)
        return summary

    return run


DEMO_DEFAULTS = {"q0": 1.0, "trials": 1000, "record_dt": 0.1, "noise": True}


def plan_demo_scaling(raw, args):
    sec = _apply_seed(_section(raw, "demo"), args.seed)
    _require(sec, ("tau", "delta_exp", "n_list", "t_end"), "demo")
    sec = {**DEMO_DEFAULTS, **sec}
    if not float(sec["delta_exp"]) > 0:
        raise UsageError("demo: delta_exp must be positive")
    eid = config_hash({"demo": sec})

    def run(out: Path) -> dict:
        stem = _stem(out, "demo-scaling", eid)
        runs = harness.toy_scaling_demo(
            float(sec["tau"]), float(sec["delta_exp"]), sec["n_list"], float(sec["t_end"]),
            q0=float(sec["q0"]), trials=int(sec["trials"]), record_dt=float(sec["record_dt"]),
            seed=int(sec["seed"]), noise=bool(sec["noise"]),
        )
        output.write_rows(
            f"{stem}.csv", ("experiment_id", "n", "t", "mean", "std", "limit"),
            [(eid, r.n, t, m, s, lim) for r in runs for t, m, s, lim in zip(r.times, r.mean, r.std, r.limit)],
        )
        summary = {"command": "demo-scaling", "experiment_id": eid, "config": {"demo": sec},
                   "max_deviation": {str(r.n): r.max_deviation for r in runs},
                   "final_std": {str(r.n): float(r.std[-1]) for r in runs}}
        output.write_json(f"{stem}.json", summary)
        return summary

    return run


COMMANDS = {
    "simulate": (plan_simulate, "run Monte Carlo trials and write cosine trajectories"),
    "predict": (plan_predict, "write theory curves from two independent solvers"),
    "compare": (plan_compare, "simulate and compare against theory"),
    "rate": (plan_rate, "finite-sample error against n and its log-log slope"),
    "phase-portrait": (plan_phase_portrait, "one-dimensional PETRELS trajectories and nullclines"),
    "phase-map": (plan_phase_map, "steady-state PETRELS cosines over a (snr, mu) grid"),
    "demo-scaling": (plan_demo_scaling, "toy one-dimensional recursion against its limit"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="subspace-scaling", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="YAML config file")
        p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                       help="override a config entry; dotted keys reach nested sections")
        p.add_argument("--out", default="results", help="output directory (default: results)")
        p.add_argument("--seed", type=int, default=None,
                       help=f"master seed; the config value or {DEFAULT_SEED} when omitted")
        p.add_argument("--workers", type=int, default=1, help="parallel worker processes")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.seed is not None and not 0 <= args.seed < 2**64:
        print("error: --seed must be an unsigned 64-bit integer", file=sys.stderr)
        return EXIT_USAGE
    if args.workers < 1:
        print("error: --workers must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    plan, _ = COMMANDS[args.command]
    try:
        raw = load_config(args.config, args.overrides)
        run = plan(raw, args)
    except (UsageError, ConfigError, ValueError, TypeError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        summary = run(Path(args.out))
    except Exception as exc:  # noqa: BLE001 - any failure while running is a runtime error
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    print(f"{args.command}: wrote {Path(args.out) / (args.command + '-' + summary['experiment_id'])}*")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
