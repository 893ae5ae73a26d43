"""Command line front end.

    tomolab run <config.json> [--threads N]
    tomolab report <dir>
    tomolab list

Exit codes: 0 all assertions pass, 1 an assertion failed (or the run
raised), 2 usage / schema / input error.
"""
import argparse
import csv
import hashlib
import json
import platform
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

import jsonschema
import numpy as np
import scipy

from . import __version__, io
from .errors import TomolabError
from .experiments import ACCEPTANCE_ORDER, REGISTRY, run_experiment
from .parallel import get_workers, set_workers

SUITE = "reproduce-all"

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["experiment", "output_dir"],
    "properties": {
        "experiment": {"type": "string", "enum": sorted(REGISTRY) + [SUITE]},
        "seed": {"type": "integer", "minimum": 0},
        "grid": {
            "type": "object",
            "additionalProperties": False,
            "required": ["n_per_axis"],
            "properties": {"n_per_axis": {"type": "integer", "minimum": 8}},
        },
        "params": {"type": "object"},
        "output_dir": {"type": "string", "minLength": 1},
    },
}


class UsageError(Exception):
    pass


def _digest(obj):
    return hashlib.sha256(json.dumps(obj, sort_keys=True).encode()).hexdigest()


def _file_digest(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def versions():
    return {"tomolab": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
            "python": platform.python_version()}


def load_config(path):
    try:
        cfg = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise UsageError(f"cannot read config {path}: {e}") from None
    try:
        jsonschema.validate(cfg, CONFIG_SCHEMA)
    except jsonschema.ValidationError as e:
        raise UsageError(f"config schema violation: {e.message}") from None
    return cfg


def _plan(cfg):
    """(name, params) pairs with parameter keys checked before anything runs."""
    params = cfg.get("params", {})
    grid = cfg.get("grid")
    if cfg["experiment"] == SUITE:
        unknown = set(params) - set(ACCEPTANCE_ORDER)
        if unknown:
            raise UsageError(f"unknown experiments in params: {sorted(unknown)}")
        if grid is not None:
            raise UsageError("grid overrides are not accepted for the full suite")
        jobs = [(n, dict(params.get(n, {}))) for n in ACCEPTANCE_ORDER]
    else:
        jobs = [(cfg["experiment"], dict(params))]
        if grid is not None:
            if "n" not in REGISTRY[cfg["experiment"]]["defaults"]:
                raise UsageError(f"experiment {cfg['experiment']!r} has no single grid size to override")
            jobs[0][1]["n"] = grid["n_per_axis"]
    for name, p in jobs:
        if not isinstance(p, dict):
            raise UsageError(f"params for {name!r} must be an object")
        bad = set(p) - set(REGISTRY[name]["defaults"])
        if bad:
            raise UsageError(f"unknown parameters for {name!r}: {sorted(bad)}")
    return jobs


def _run_one(name, params, seed, out):
    started = datetime.now(timezone.utc).isoformat()
    t0 = time.perf_counter()
    error = None
    try:
        res = run_experiment(name, params, seed, out)
        checks = [c.to_dict() for c in res.checks]
        metrics, outputs, passed = res.metrics, res.outputs, res.passed
    except (TomolabError, ArithmeticError) as e:
        checks, metrics, outputs, passed = [], {"params": params}, [], False
        error = f"{type(e).__name__}: {e}"
    man = {
        "kind": "experiment",
        "experiment": name,
        "criterion": REGISTRY[name]["criterion"],
        "seed": seed,
        "threads": get_workers(),
        "inputs_digest": _digest({"experiment": name, "params": metrics.get("params", params), "seed": seed}),
        "versions": versions(),
        "metrics": metrics,
        "assertions": checks,
        "failures": [c["name"] for c in checks if not c["passed"]] + ([error] if error else []),
        "passed": bool(passed),
        "outputs": [{"file": f, "sha256": _file_digest(Path(out) / f)} for f in outputs],
        "timing": {"started": started, "wall_time_s": time.perf_counter() - t0},
    }
    if error:
        man["error"] = error
    io.write_json(Path(out) / "manifest.json", man)
    return man


def cmd_run(args):
    cfg = load_config(args.config)
    jobs = _plan(cfg)
    out = Path(cfg["output_dir"])
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise UsageError(f"cannot create output_dir: {e}") from None
    seed = int(cfg.get("seed", 0))
    if cfg["experiment"] != SUITE:
        name, p = jobs[0]
        man = _run_one(name, p, seed, out)
        _print_manifest(man)
        return 0 if man["passed"] else 1
    t0 = time.perf_counter()
    started = datetime.now(timezone.utc).isoformat()
    subs = {}
    for name, p in jobs:
        man = _run_one(name, p, seed, out / name)
        _print_manifest(man)
        subs[name] = {k: man[k] for k in ("criterion", "inputs_digest", "metrics", "assertions", "failures",
                                          "passed", "outputs")}
    top = {
        "kind": "suite",
        "experiment": SUITE,
        "seed": seed,
        "threads": get_workers(),
        "inputs_digest": _digest(cfg | {"output_dir": None}),
        "versions": versions(),
        "experiments": subs,
        "passed": all(s["passed"] for s in subs.values()),
        "timing": {"started": started, "wall_time_s": time.perf_counter() - t0},
    }
    io.write_json(out / "manifest.json", top)
    return 0 if top["passed"] else 1


def _print_manifest(man):
    status = "PASS" if man["passed"] else "FAIL"
    print(f"{man['experiment']:<20s} {status}  ({man['timing']['wall_time_s']:.1f} s)")
    for c in man["assertions"]:
        mark = "ok " if c["passed"] else "BAD"
        print(f"    {mark} {c['name']:<36s} {c['value']:.4g} {c['op']} {c['bound']:.4g}")
    if man.get("error"):
        print(f"    error: {man['error']}")


def _render(path, out_dir):
    """PGM renderings of one raw field or sinogram CSV; returns pgm names."""
    path = Path(path)
    made = []
    if path.suffix == ".raw":
        f = io.read_field(path)
        arrays = [("", np.real(f.values))] if not hasattr(f, "components") else \
            [(f"_{k}", c) for k, c in enumerate(f.components)]
    elif path.suffix == ".csv" and Path(str(path) + ".json").exists():
        _, vals = io.read_csv_matrix(path)
        arrays = [("", vals)]
    else:
        return made
    for suffix, a in arrays:
        name = f"{path.parent.name}_{path.stem}{suffix}.pgm"
        info = io.write_pgm(out_dir / name, a)
        info["source"] = str(path.relative_to(out_dir)) if out_dir in path.parents else str(path)
        io.write_json(out_dir / (name + ".json"), info)
        made.append(name)
    return made


def cmd_report(args):
    root = Path(args.dir)
    if not root.is_dir():
        raise UsageError(f"{root} is not a directory")
    manifests = sorted(p for p in root.rglob("manifest.json"))
    runs = []
    for p in manifests:
        try:
            m = json.loads(p.read_text())
        except json.JSONDecodeError:
            continue
        if m.get("kind") == "experiment":
            runs.append((p, m))
    if not runs:
        raise UsageError(f"no experiment manifests under {root}")
    rows = []
    plots = []
    for p, m in runs:
        key = m["assertions"][0] if m["assertions"] else {"name": "error", "value": float("nan")}
        rows.append([m["experiment"], key["name"], repr(float(key["value"])), "pass" if m["passed"] else "fail"])
        for o in m.get("outputs", []):
            plots += _render(p.parent / o["file"], root)
    with open(root / "summary.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["experiment", "key_metric", "value", "status"])
        w.writerows(rows)
    print(f"summary.csv: {len(rows)} rows, {len(plots)} plots")
    return 0


def cmd_list(args):
    for name in ACCEPTANCE_ORDER:
        e = REGISTRY[name]
        print(f"{name:<20s} [{e['criterion']:>2d}] {e['doc'].splitlines()[0] if e['doc'] else ''}")
    print(f"{SUITE:<20s}      every experiment above, one subdirectory each")
    return 0


def build_parser():
    # --threads is accepted before or after the subcommand; the subparser
    # writes a separate dest so it cannot clobber the top-level value
    ap = argparse.ArgumentParser(prog="tomolab")
    ap.add_argument("--threads", type=int, default=None,
                    help="worker threads (default: $TOMOLAB_THREADS or 1)")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--threads", dest="sub_threads", type=int, default=None, help=argparse.SUPPRESS)
    sub = ap.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", parents=[common], help="run an experiment config")
    r.add_argument("config")
    r.set_defaults(func=cmd_run)
    rp = sub.add_parser("report", parents=[common], help="summarize manifests under a directory")
    rp.add_argument("dir")
    rp.set_defaults(func=cmd_report)
    ls = sub.add_parser("list", parents=[common], help="list experiment names")
    ls.set_defaults(func=cmd_list)
    return ap


def main(argv=None):
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return 2 if e.code else 0
    try:
        threads = args.sub_threads if args.sub_threads is not None else args.threads
        if threads is not None:
            if threads < 1:
                raise UsageError("--threads must be >= 1")
            set_workers(threads)
        return args.func(args)
    except UsageError as e:
        print(f"tomolab: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
