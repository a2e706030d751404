"""Command-line entry point: ``circletag {single,batch,bounds,verify-rings}``.

Settings come from built-in defaults, then an optional JSON config file,
then command-line flags (last one wins).  Every CSV written starts with a
``#`` preamble echoing the effective configuration.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .bounds import (competitive_report, loglog_slope, rows_to_csv, verify_ring_expectations,
                     MIN_TRIALS)
from .deployment import (DeploymentParseError, load_deployment, trial_seed, uniform_disk,
                         worst_case_path)
from .engine import PROP1_TOL, SimOptions, SimulationInvariantError, export_trace, simulate
from .spanning_tree import build_mst

EXIT_OK, EXIT_USAGE, EXIT_INVARIANT = 0, 2, 3

DEFAULTS = {
    "seed": 0,
    "out": "circletag_out",
    "trace": False,
    "trace_dt": 0.5,
    "generator": "uniform_disk",
    "file": None,
    "n": 50,
    "L": 10.0,
    "M": 2.0,
    "r": 1.0,
    "offline": None,
    "n_list": [50, 100, 200, 500],
    "trials": 100,
    "jobs": 1,
}
MODE_DEFAULTS = {"verify-rings": {"n": 10000, "trials": 200}}


class ConfigError(Exception):
    pass


# ------------------------------------------------------------ config

def _n_list(text):
    try:
        values = [int(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    return values


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--seed", type=int, help="base seed (unsigned 64-bit)")
    common.add_argument("--out", help="output directory")
    common.add_argument("--config", help="JSON file with option values")
    common.add_argument("--trace", action="store_true", help="write a sampled trace CSV")
    common.add_argument("--trace-dt", dest="trace_dt", type=float, help="trace sampling interval")

    source = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    source.add_argument("--generator", choices=["uniform_disk", "worst_case_path"])
    source.add_argument("--file", help="deployment file (overrides --generator)")
    source.add_argument("--n", type=int, help="number of robots")
    source.add_argument("--L", type=float, help="deployment disk radius")
    source.add_argument("--M", type=float, help="spacing for worst_case_path")
    source.add_argument("--r", type=float, help="communication range")

    p = argparse.ArgumentParser(prog="circletag", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"circletag {__version__}")
    sub = p.add_subparsers(dest="mode", required=True)

    single = sub.add_parser("single", parents=[common, source], help="simulate one deployment",
                            argument_default=argparse.SUPPRESS)
    single.add_argument("--offline", choices=["greedy", "exact"], help="also compute an offline reference")

    batch = sub.add_parser("batch", parents=[common], help="seeded uniform-disk experiment",
                           argument_default=argparse.SUPPRESS)
    batch.add_argument("--n-list", dest="n_list", type=_n_list, help="e.g. 50,100,200,500")
    batch.add_argument("--L", type=float)
    batch.add_argument("--trials", type=int)
    batch.add_argument("--jobs", type=int, help="worker processes")

    sub.add_parser("bounds", parents=[common, source], help="closed-form bounds without simulating")

    rings = sub.add_parser("verify-rings", parents=[common], help="Monte Carlo ring-count check",
                           argument_default=argparse.SUPPRESS)
    rings.add_argument("--n", type=int)
    rings.add_argument("--L", type=float)
    rings.add_argument("--M", type=float)
    rings.add_argument("--trials", type=int)
    return p


def resolve_config(args: argparse.Namespace) -> dict:
    cfg = dict(DEFAULTS)
    cfg.update(MODE_DEFAULTS.get(args.mode, {}))
    flags = vars(args).copy()
    mode = flags.pop("mode")
    path = flags.pop("config", None)
    if path is not None:
        try:
            with open(path, encoding="utf-8") as fh:
                loaded = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
        if not isinstance(loaded, dict):
            raise ConfigError(f"config {path} must hold a JSON object")
        unknown = sorted(set(loaded) - set(DEFAULTS))
        if unknown:
            raise ConfigError(f"unknown config keys in {path}: {', '.join(unknown)}")
        cfg.update(loaded)
    cfg.update(flags)
    cfg["mode"] = mode
    if isinstance(cfg["n_list"], str):
        cfg["n_list"] = _n_list(cfg["n_list"])
    _validate(cfg)
    return cfg


def _validate(cfg: dict) -> None:
    mode = cfg["mode"]
    if not 0 <= int(cfg["seed"]) < 2**64:
        raise ConfigError("seed must be an unsigned 64-bit integer")
    if cfg["trace_dt"] is None or not cfg["trace_dt"] > 0:
        raise ConfigError("--trace-dt must be positive")
    if not cfg["r"] > 0:
        raise ConfigError("--r must be positive")
    if mode == "batch":
        if cfg["trials"] < 1:
            raise ConfigError("batch needs at least one trial")
        if not cfg["n_list"] or min(cfg["n_list"]) < 1:
            raise ConfigError("batch needs a non-empty list of positive n")
        if not cfg["L"] > 0:
            raise ConfigError("--L must be positive")
        if cfg["jobs"] < 1:
            raise ConfigError("--jobs must be at least 1")
    if mode == "verify-rings":
        if cfg["trials"] < MIN_TRIALS:
            raise ConfigError(f"verify-rings needs at least {MIN_TRIALS} trials, got {cfg['trials']}")
        if cfg["n"] < 2 or not cfg["L"] > 0 or not cfg["M"] > 0:
            raise ConfigError("verify-rings needs n >= 2 and positive L and M")
    if mode in ("single", "bounds") and cfg["file"] is None:
        if cfg["n"] < 1:
            raise ConfigError("--n must be at least 1")
        if cfg["generator"] == "uniform_disk" and not cfg["L"] > 0:
            raise ConfigError("--L must be positive")
        if cfg["generator"] == "worst_case_path" and not cfg["M"] > 0:
            raise ConfigError("--M must be positive")


# ------------------------------------------------------------ output

def prepare_out(path) -> Path:
    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
        with tempfile.TemporaryFile(dir=out):
            pass
    except OSError as exc:
        raise ConfigError(f"output directory {out} is not writable: {exc.strerror}") from None
    return out


def preamble(cfg: dict) -> str:
    # where files go and how many workers ran cannot change any number
    echo = {k: v for k, v in cfg.items() if k not in ("out", "jobs")}
    return (f"# circletag {__version__}\n"
            f"# command: {cfg['mode']}\n"
            f"# config: {json.dumps(echo, sort_keys=True)}\n"
            f"# base_seed: {cfg['seed']}\n")


def write_csv(path: Path, cfg: dict, rows) -> None:
    path.write_text(preamble(cfg) + rows_to_csv(list(rows)), encoding="utf-8", newline="\n")


def load_source(cfg: dict):
    if cfg["file"] is not None:
        try:
            data = Path(cfg["file"]).read_bytes()
        except OSError as exc:
            raise ConfigError(f"cannot read deployment file {cfg['file']}: {exc.strerror}") from None
        try:
            return load_deployment(data, r=cfg["r"])
        except DeploymentParseError as exc:
            raise ConfigError(f"{cfg['file']}: {exc}") from None
    if cfg["generator"] == "worst_case_path":
        return worst_case_path(cfg["n"], cfg["M"], cfg["r"])
    return uniform_disk(cfg["n"], cfg["L"], cfg["seed"], cfg["r"])


def prop1_counts(result):
    viol = raw = 0
    for rl in result.rounds:
        tol = PROP1_TOL * max(1.0, rl.duration)
        s = rl.prop1_slack(allowance=True)
        if s is not None and s < -tol:
            viol += 1
        s = rl.prop1_slack(allowance=False)
        if s is not None and s < -tol:
            raw += 1
    return viol, raw


# ------------------------------------------------------------ modes

def run_single(cfg: dict) -> int:
    out = prepare_out(cfg["out"])
    d = load_source(cfg)
    opts = SimOptions(offline_variant=cfg["offline"])
    result = simulate(d, opts)
    tree = build_mst(d)
    report = competitive_report(result, tree, d)
    viol, raw = prop1_counts(result)
    row = report.as_row()
    row.update(rounds=len(result.rounds), offline_reference=result.offline_reference,
               prop1_violations=viol, prop1_raw_violations=raw)
    write_csv(out / "summary.csv", cfg, [row])
    write_csv(out / "rounds.csv", cfg, (
        {"round": rl.round_index, "k": rl.k, "R_prev": rl.R_prev, "R_next": rl.R_next,
         "start_time": rl.start_time, "end_time": rl.end_time,
         "leader_travel_time": rl.leader_travel_time, "block_cover_time": rl.block_cover_time,
         "tags": len(rl.tags)} for rl in result.rounds))
    write_csv(out / "robots.csv", cfg, (
        {"robot": i, "x": float(result.positions[i, 0]), "y": float(result.positions[i, 1]),
         "tag_time": float(result.tag_times[i]), "tagger": int(result.taggers[i]),
         "tag_round": int(result.tag_rounds[i])} for i in range(result.n)))
    (out / "report.txt").write_text(report.to_text(), encoding="utf-8")
    if cfg["trace"]:
        (out / "trace.csv").write_bytes(preamble(cfg).encode() + export_trace(result, cfg["trace_dt"]))
    ratio = "absent" if report.ratio_vs_lower is None else f"{report.ratio_vs_lower:.6g}"
    print(f"makespan {result.makespan:.6g}  ratio_vs_lower {ratio}  robots {result.n}  rounds {len(result.rounds)}")
    return EXIT_OK


def run_trial(n: int, L: float, trial: int, base_seed: int) -> dict:
    seed = trial_seed(trial_seed(base_seed, n), trial)
    d = uniform_disk(n, L, seed)
    result = simulate(d)
    report = competitive_report(result, build_mst(d), d)
    viol, raw = prop1_counts(result)
    return {"n": n, "trial": trial, "seed": seed, "makespan": result.makespan,
            "M": report.M, "H": report.H, "D": report.D,
            "M2H": report.M ** 2 * report.H,
            "eq1": report.eq1_bound, "eq2": report.eq2_bound,
            "lower_bound": report.lower_bound, "ratio_vs_lower": report.ratio_vs_lower,
            "rounds": len(result.rounds),
            "prop1_violations": viol, "prop1_raw_violations": raw}


def _mean(values):
    vals = [v for v in values if v is not None]
    return float(np.mean(vals)) if vals else None


def summarize(records) -> list:
    """Per-n aggregates; independent of the order in which trials finished."""
    records = sorted(records, key=lambda r: (r["n"], r["trial"]))
    rows = []
    for n in sorted({r["n"] for r in records}):
        group = [r for r in records if r["n"] == n]
        ms = np.array([r["makespan"] for r in group])
        se = float(ms.std(ddof=1) / math.sqrt(len(ms))) if len(ms) > 1 else 0.0
        m2h = np.array([r["M2H"] for r in group])
        rows.append({
            "n": n, "trials": len(group),
            "mean_makespan": float(ms.mean()), "stderr_makespan": se,
            "mean_M": _mean(r["M"] for r in group), "mean_H": _mean(r["H"] for r in group),
            "mean_M2H": float(m2h.mean()), "mean_eq1": _mean(r["eq1"] for r in group),
            "eq2": group[0]["eq2"], "mean_ratio_vs_lower": _mean(r["ratio_vs_lower"] for r in group),
            "min_margin_over_lower": float(min(r["makespan"] - r["lower_bound"] for r in group)),
            "prop1_violations": sum(r["prop1_violations"] for r in group),
            "prop1_raw_violations": sum(r["prop1_raw_violations"] for r in group),
        })
    return rows


def run_batch(cfg: dict) -> int:
    out = prepare_out(cfg["out"])
    jobs = [(n, float(cfg["L"]), t, int(cfg["seed"])) for n in cfg["n_list"] for t in range(cfg["trials"])]
    if cfg["jobs"] > 1:
        with ProcessPoolExecutor(cfg["jobs"]) as pool:
            records = list(pool.map(run_trial, *zip(*jobs)))
    else:
        records = [run_trial(*j) for j in jobs]
    records.sort(key=lambda r: (r["n"], r["trial"]))
    summary = summarize(records)
    write_csv(out / "results.csv", cfg, records)
    write_csv(out / "summary.csv", cfg, summary)
    slope = loglog_slope([r["n"] for r in summary], [r["mean_makespan"] for r in summary])
    lines = [f"{'n':>6} {'mean':>10} {'stderr':>8} {'mean M2H':>10} {'eq2':>10} {'prop1 raw':>9}"]
    for r in summary:
        lines.append(f"{r['n']:>6} {r['mean_makespan']:>10.4g} {r['stderr_makespan']:>8.3g} "
                     f"{r['mean_M2H']:>10.4g} {r['eq2']:>10.4g} {r['prop1_raw_violations']:>9}")
    lines.append(f"log-log slope of mean makespan vs n: {'absent' if slope is None else f'{slope:.4f}'}")
    text = "\n".join(lines) + "\n"
    (out / "summary.txt").write_text(text, encoding="utf-8")
    sys.stdout.write(text)
    return EXIT_OK


def run_bounds(cfg: dict) -> int:
    out = prepare_out(cfg["out"])
    d = load_source(cfg)
    report = competitive_report(None, build_mst(d), d)
    write_csv(out / "bounds.csv", cfg, [report.as_row()])
    text = report.to_text()
    (out / "bounds.txt").write_text(text, encoding="utf-8")
    sys.stdout.write(text)
    return EXIT_OK


def run_verify_rings(cfg: dict) -> int:
    out = prepare_out(cfg["out"])
    rep = verify_ring_expectations(cfg["n"], cfg["L"], cfg["M"], cfg["trials"], cfg["seed"])
    (out / "rings.csv").write_text(preamble(cfg) + rep.to_csv(), encoding="utf-8", newline="\n")
    for row in rep.rows:
        mark = "FLAG" if row.flagged else "ok"
        print(f"ring {row.ring:>3}: S {row.mean_S:.4g}±{row.stderr_S:.2g} (bound {row.bound_S:.4g})  "
              f"cum {row.mean_cum:.4g}±{row.stderr_cum:.2g} (bound {row.bound_cum:.4g})  {mark}")
    print(f"flags: {rep.flags}")
    return EXIT_OK if rep.flags == 0 else 1


MODES = {"single": run_single, "batch": run_batch, "bounds": run_bounds,
         "verify-rings": run_verify_rings}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
        return MODES[cfg["mode"]](cfg)
    except ConfigError as exc:
        print(f"circletag: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SimulationInvariantError as exc:
        print(f"circletag: internal invariant violated: {exc}", file=sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
