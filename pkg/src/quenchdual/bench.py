"""Benchmark sweeps: a JSON grid of cells, one CSV row per cell.

Config format::

    {
      "task": "solve" | "quench" | "extremes",
      "grid":  {"epsilon": [1.0, 0.5], "n": [16]},   # cartesian product
      "fixed": {"kind": "antiferromagnet"},          # shared by all cells
      "trials": 200,
      "seed": 0                                       # optional, else --seed
    }

Completed cells are appended to ``<out>.manifest`` (one JSON line per
cell) so an interrupted sweep resumes where it stopped.  Failed cells are
reported in the CSV with their error message and retried on the next run.
"""
from __future__ import annotations

import itertools
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .classical import RunConfig, random_baseline, run_amplified
from .errors import InputError, QuenchDualError
from .instance import Instance, gen_antiferromagnet, gen_cluster_antiferromagnet, gen_random_regular
from .oracle import random_model_extremes
from .output import dumps_csv, dumps_json, meta
from .quench.trace import QuenchConfig, run_quench

log = logging.getLogger(__name__)

TASKS = ("solve", "quench", "extremes")
PARAM_COLUMNS = ("kind", "n", "k", "d", "m", "instance_seed", "variant", "epsilon", "p", "grid_points",
                 "alpha", "t_final", "samples", "trials", "seed")
METRIC_COLUMNS = ("N_T", "instance", "branch_B_fraction", "very_bad_fraction", "hz_u_min", "hz_u_mean",
                  "C_mean", "best_energy", "baseline_best", "X_final", "HZ_final", "duality_final",
                  "max_energy_drift", "max_energy_balance", "min_hvar_slack", "q50", "q90", "q99",
                  "max_normalized")
HEADER = ("cell", "task", "status", "error") + PARAM_COLUMNS + METRIC_COLUMNS
KNOWN = set(PARAM_COLUMNS)


def load_config(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except FileNotFoundError:
        raise InputError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: line {exc.lineno}: invalid JSON: {exc.msg}") from None
    if not isinstance(raw, dict):
        raise InputError(f"{path}: config must be a JSON object")
    task = raw.get("task", "solve")
    if task not in TASKS:
        raise InputError(f"{path}: unknown task {task!r}; expected one of {TASKS}")
    grid = raw.get("grid", {}) or {}
    fixed = raw.get("fixed", {}) or {}
    if not isinstance(grid, dict) or not all(isinstance(v, list) for v in grid.values()):
        raise InputError(f"{path}: grid must map parameter names to lists")
    unknown = (set(grid) | set(fixed)) - KNOWN
    if unknown:
        raise InputError(f"{path}: unknown parameters {sorted(unknown)}")
    return {"task": task, "grid": grid, "fixed": fixed, "trials": raw.get("trials"), "seed": raw.get("seed")}


def expand_cells(config: dict, seed: int) -> list[dict]:
    grid = config["grid"]
    if not grid or any(len(v) == 0 for v in grid.values()):
        return []
    names = sorted(grid)
    cells = []
    for values in itertools.product(*(grid[k] for k in names)):
        cell = {"task": config["task"], "seed": seed, **config["fixed"], **dict(zip(names, values))}
        if config["trials"] is not None and "trials" not in cell:
            cell["trials"] = config["trials"]
        cells.append(cell)
    return cells


def cell_key(cell: dict) -> str:
    return json.dumps(cell, sort_keys=True, separators=(",", ":"))


def build_instance(cell: dict) -> Instance:
    kind = cell.get("kind", "regular")
    if kind == "antiferromagnet":
        return gen_antiferromagnet(int(cell["n"]))
    if kind == "cluster":
        return gen_cluster_antiferromagnet(int(cell["m"]), int(cell["d"]))
    if kind == "regular":
        return gen_random_regular(int(cell["n"]), int(cell["k"]), int(cell["d"]),
                                  cell.get("instance_seed", cell.get("seed", 0)))
    raise InputError(f"unknown instance kind {kind!r}")


def _solve_metrics(cell: dict) -> dict:
    inst = build_instance(cell)
    trials = int(cell.get("trials", 100))
    config = RunConfig(variant=cell.get("variant", "greedy"), epsilon=float(cell.get("epsilon", 1.0)),
                       p=float(cell.get("p", 1.0)), repetitions=trials,
                       grid_points=int(cell.get("grid_points", 10_000)), seed=int(cell.get("seed", 0)))
    res = run_amplified(inst, config)
    hz_u = np.array([r.hz_u for r in res.reports])
    return {
        "N_T": inst.num_terms, "instance": inst.digest(),
        "branch_B_fraction": res.summary["branch_B_fraction"],
        "very_bad_fraction": float(np.mean(hz_u <= -0.5 * inst.num_terms)),
        "hz_u_min": float(hz_u.min()), "hz_u_mean": float(hz_u.mean()),
        "C_mean": res.summary["C"]["mean"],
        "best_energy": res.best.normalized_energy,
        "baseline_best": random_baseline(inst, trials, np.random.SeedSequence(config.seed, spawn_key=(2 ** 31,))),
    }


def _quench_metrics(cell: dict) -> dict:
    inst = build_instance(cell)
    t_final = float(cell.get("t_final", 1.0))
    samples = int(cell.get("samples", 32))
    config = QuenchConfig(alpha=float(cell["alpha"]), t_final=t_final,
                          sample_times=[float(t) for t in np.linspace(0.0, t_final, samples)],
                          seed=int(cell.get("seed", 0)))
    trace = run_quench(inst, config)
    last = trace.points[-1]
    return {
        "N_T": inst.num_terms, "instance": inst.digest(),
        "X_final": last.X, "HZ_final": last.HZ, "duality_final": last.duality_obs,
        "max_energy_drift": float(np.max(np.abs(trace.column("H") - inst.n))),
        "max_energy_balance": float(np.max(np.abs(trace.column("energy_balance")))),
        "min_hvar_slack": float(np.min(trace.column("hvar_rhs") - trace.column("hvar_lhs"))),
    }


def _extremes_metrics(cell: dict) -> dict:
    stats = random_model_extremes(int(cell["n"]), int(cell["k"]), int(cell["d"]), int(cell.get("trials", 100)),
                                  cell.get("seed", 0))
    q = stats.quantiles
    return {"q50": q["q50"], "q90": q["q90"], "q99": q["q99"], "max_normalized": q["max"]}


RUNNERS = {"solve": _solve_metrics, "quench": _quench_metrics, "extremes": _extremes_metrics}


def run_cell(cell: dict) -> dict:
    """One row; errors are caught and recorded instead of raised."""
    row = {"cell": cell_key(cell), "task": cell["task"], "status": "ok", "error": None}
    row.update({c: cell.get(c) for c in PARAM_COLUMNS})
    try:
        row.update(RUNNERS[cell["task"]](cell))
    except (QuenchDualError, KeyError, ValueError, TypeError) as exc:
        row["status"] = "error"
        row["error"] = f"{type(exc).__name__}: {exc}"
    return row


def _read_manifest(path: Path) -> dict[str, dict]:
    done: dict[str, dict] = {}
    if not path.exists():
        return done
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            try:
                entry = json.loads(line)
            except json.JSONDecodeError:
                continue  # a torn final line from an interrupted write
            done[entry["cell"]] = entry["row"]
    return done


def _rows_to_csv(rows: list[dict], info: dict) -> str:
    return dumps_csv(HEADER, [[r.get(c) for c in HEADER] for r in rows], info)


def run_bench(config_path, out, fmt: str = "csv", workers: int = 1, seed: int = 0) -> int:
    config = load_config(config_path)
    seed = config["seed"] if config["seed"] is not None else seed
    cells = expand_cells(config, seed)
    info = meta("bench", {"config": Path(config_path).name, "task": config["task"], "grid": config["grid"],
                          "fixed": config["fixed"], "trials": config["trials"]}, seed)
    manifest = Path(str(out) + ".manifest") if out else None
    done = _read_manifest(manifest) if manifest else {}
    keys = [cell_key(c) for c in cells]
    todo = [c for c, k in zip(cells, keys) if k not in done]
    if len(todo) < len(cells):
        log.warning("resuming: %d of %d cells already complete", len(cells) - len(todo), len(cells))
    results: dict[str, dict] = dict(done)
    if manifest:
        manifest.parent.mkdir(parents=True, exist_ok=True)
    fh = open(manifest, "a", encoding="utf-8") if manifest else None
    try:
        if workers > 1 and len(todo) > 1:
            pool = ProcessPoolExecutor(max_workers=workers)
            rows = pool.map(run_cell, todo)
        else:
            pool = None
            rows = map(run_cell, todo)
        for row in rows:
            results[row["cell"]] = row
            print(f"cell {row['cell']} {row['status']}" + (f" {row['error']}" if row["error"] else ""),
                  file=sys.stderr)
            if fh and row["status"] == "ok":
                fh.write(json.dumps({"cell": row["cell"], "row": row}, sort_keys=True) + "\n")
                fh.flush()
        if pool:
            pool.shutdown()
    finally:
        if fh:
            fh.close()
    ordered = [results[k] for k in keys]
    text = _rows_to_csv(ordered, info) if fmt == "csv" else dumps_json({"meta": info, "rows": ordered})
    if out:
        with open(out, "w", encoding="utf-8", newline="\n") as f:
            f.write(text)
    else:
        sys.stdout.write(text)
    failed = sum(r["status"] != "ok" for r in ordered)
    if failed:
        print(f"{failed} of {len(ordered)} cells failed", file=sys.stderr)
        return 1
    return 0
