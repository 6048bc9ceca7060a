"""Command-line front end.

Subcommands: gen, solve, quench, oracle, bench.  Exit codes: 0 success,
1 internal error, 2 input error, 3 resource-limit refusal.  Outputs carry
the tool version, instance digest, parameters and seed, and never a
timestamp, so identical invocations write identical bytes.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .bench import run_bench
from .classical import RunConfig, run_amplified
from .errors import (ContractError, DegenerateInputError, GenerationError, InputError, PropagationError,
                     ResourceLimitError)
from .instance import (Instance, dumps_instance, gen_antiferromagnet, gen_cluster_antiferromagnet,
                       gen_random_regular, load_instance, save_instance)
from .output import dumps_csv, dumps_json, jsonable, meta
from .oracle import brute_force_optimum, force_moment_stats, random_model_extremes
from .polycombine import DEFAULT_GRID
from .quench.trace import DEFAULT_SAMPLE_COUNT, QuenchConfig, run_quench

log = logging.getLogger("quenchdual")

EXIT_OK, EXIT_INTERNAL, EXIT_INPUT, EXIT_LIMIT = 0, 1, 2, 3

REPORT_COLUMNS = ("repetition", "branch", "C", "hz_w2", "hz_u", "rounded_energy", "normalized_energy",
                  "flipped", "s_size", "improvement_ratio", "guarantee", "x", "witness_index", "resamples")


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def emit(args, json_obj, csv_text: str) -> None:
    """Write <out>.json and <out>.csv, or print the chosen format."""
    if args.out is None:
        sys.stdout.write(dumps_json(json_obj) if args.format == "json" else csv_text)
        return
    stem = Path(args.out)
    if stem.suffix in (".json", ".csv"):
        stem = stem.with_suffix("")
    _write(stem.with_suffix(".json"), dumps_json(json_obj))
    _write(stem.with_suffix(".csv"), csv_text)


def _load(path) -> Instance:
    try:
        return load_instance(path)
    except FileNotFoundError:
        raise InputError(f"instance file not found: {path}") from None
    except InputError as exc:
        raise InputError(f"{path}: {exc}") from None


# --------------------------------------------------------------------------
# gen


def cmd_gen(args) -> int:
    if args.format != "json":
        raise InputError("gen writes instance JSON only")
    if args.kind == "antiferromagnet":
        params = {"kind": "antiferromagnet", "n": args.n}
        inst = gen_antiferromagnet(_need(args.n, "--n"))
    elif args.kind == "cluster":
        params = {"kind": "cluster", "m": args.m, "d": args.d}
        inst = gen_cluster_antiferromagnet(_need(args.m, "--m"), _need(args.d, "--d"))
    else:
        params = {"kind": "regular", "n": args.n, "k": args.k, "d": args.d}
        inst = gen_random_regular(_need(args.n, "--n"), _need(args.k, "--k"), _need(args.d, "--d"), args.seed)
    info = meta("gen", params, args.seed, inst)
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        save_instance(inst, args.out, info)
    else:
        sys.stdout.write(dumps_instance(inst, info))
    print(f"n={inst.n} k={inst.k} d={inst.d} N_T={inst.num_terms} digest={inst.digest()}", file=sys.stderr)
    return EXIT_OK


def _need(value, flag: str):
    if value is None:
        raise InputError(f"{flag} is required for this generator")
    return value


# --------------------------------------------------------------------------
# solve


def cmd_solve(args) -> int:
    inst = _load(args.instance)
    config = RunConfig(variant=args.variant, epsilon=args.epsilon, p=args.p, repetitions=args.repetitions,
                       grid_points=args.grid_points, seed=args.seed)
    params = {"instance_path": Path(args.instance).name, "variant": config.variant, "epsilon": config.epsilon,
              "p": config.p, "repetitions": config.repetitions, "grid_points": config.grid_points}
    log.info("solve instance=%s epsilon=%g seed=%d", inst.digest(), config.epsilon, config.seed)
    result = run_amplified(inst, config, workers=args.workers)
    info = meta("solve", params, args.seed, inst)
    out = {"meta": info, "best": result.best.to_dict(), "summary": result.summary}
    rows = [[getattr(r, c) for c in REPORT_COLUMNS] for r in result.reports]
    emit(args, out, dumps_csv(REPORT_COLUMNS, rows, info))
    s = result.summary
    print(f"repetitions={s['repetitions']} branch_B_fraction={s['branch_B_fraction']:.4f} "
          f"best_energy={result.best.normalized_energy} improvement_ratio={result.best.improvement_ratio:.6g}",
          file=sys.stderr)
    return EXIT_OK


# --------------------------------------------------------------------------
# quench


def cmd_quench(args) -> int:
    inst = _load(args.instance)
    times = [float(t) for t in np.linspace(0.0, args.t_final, args.samples)] if args.samples > 0 else []
    config = QuenchConfig(alpha=args.alpha, t_final=args.t_final, sample_times=times, tolerance=args.tolerance,
                          seed=args.seed, shots=args.shots)
    params = {"instance_path": Path(args.instance).name, "alpha": args.alpha, "t_final": args.t_final,
              "samples": args.samples, "shots": args.shots, "tolerance": args.tolerance}
    trace = run_quench(inst, config)
    info = meta("quench", params, args.seed, inst)
    drift = float(np.max(np.abs(trace.column("H") - inst.n))) if trace.points else 0.0
    balance = float(np.max(np.abs(trace.column("energy_balance")))) if trace.points else 0.0
    out = {"meta": info, "trace": trace.to_dict(), "max_energy_drift": drift, "max_energy_balance": balance}
    csv_text = "# " + json.dumps(jsonable(info), sort_keys=True) + "\n" + trace.to_csv()
    emit(args, out, csv_text)
    print(f"max |<H> - n| = {drift:.3e} ({drift / inst.n:.3e} n); "
          f"max energy-balance residual = {balance:.3e}", file=sys.stderr)
    return EXIT_OK


# --------------------------------------------------------------------------
# oracle


def cmd_oracle(args) -> int:
    if args.task == "extremes":
        inst = _load(args.instance) if args.instance else None
        n, k, d = (inst.n, inst.k, inst.d) if inst else (_need(args.n, "--n"), _need(args.k, "--k"),
                                                         _need(args.d, "--d"))
        params = {"task": "extremes", "n": n, "k": k, "d": d, "trials": args.trials}
        stats = random_model_extremes(n, k, d, args.trials, args.seed, inst=inst)
        info = meta("oracle", params, args.seed, inst)
        out = {"meta": info, **stats.to_dict()}
        rows = [[r, int(v), float(x)] for r, (v, x) in enumerate(zip(stats.values, stats.normalized))]
        emit(args, out, dumps_csv(("trial", "max_abs", "normalized"), rows, info))
        print(" ".join(f"{k}={v:.4f}" for k, v in stats.quantiles.items()), file=sys.stderr)
        return EXIT_OK
    if not args.instance:
        raise InputError(f"oracle {args.task} needs an instance path")
    inst = _load(args.instance)
    if args.task == "optimum":
        params = {"task": "optimum", "instance_path": Path(args.instance).name}
        summary = brute_force_optimum(inst)
        info = meta("oracle", params, args.seed, inst)
        out = {"meta": info, **summary.to_dict()}
        rows = sorted(summary.histogram.items())
        emit(args, out, dumps_csv(("energy", "count"), rows, info))
        print(f"max={summary.max_energy} min={summary.min_energy}", file=sys.stderr)
        return EXIT_OK
    params = {"task": "forces", "instance_path": Path(args.instance).name, "spin": args.spin,
              "mode": args.mode, "trials": args.trials if args.mode == "sampled" else None}
    stats = force_moment_stats(inst, args.spin, args.mode, trials=args.trials, seed=args.seed)
    info = meta("oracle", params, args.seed, inst)
    out = {"meta": info, **stats.to_dict(), "reference_mean_sq": inst.d / 2 ** (inst.k - 1)}
    emit(args, out, dumps_csv(("t", "probability"), stats.tail_table, info))
    print(f"E[F^2]={stats.mean_sq:.12g} (d/2^(k-1) = {inst.d / 2 ** (inst.k - 1):.12g})", file=sys.stderr)
    return EXIT_OK


# --------------------------------------------------------------------------
# bench


def cmd_bench(args) -> int:
    return run_bench(args.config, args.out, args.format, args.workers, args.seed)


# --------------------------------------------------------------------------


def _common(p: argparse.ArgumentParser, fmt_default: str = "json") -> None:
    p.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
    p.add_argument("--out", default=None, help="output path; solve/quench/oracle write <out>.json and <out>.csv")
    p.add_argument("--format", choices=("json", "csv"), default=fmt_default, help="stdout format without --out")
    p.add_argument("--workers", type=int, default=1, help="worker processes")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="quenchdual", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"quenchdual {__version__}")
    parser.add_argument("--log-level", default="WARNING", help="logging level (default WARNING)")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate an instance")
    g.add_argument("kind", choices=("regular", "antiferromagnet", "cluster"))
    g.add_argument("--n", type=int)
    g.add_argument("--k", type=int)
    g.add_argument("--d", type=int)
    g.add_argument("--m", type=int, help="cluster size for the cluster antiferromagnet")
    _common(g)
    g.set_defaults(func=cmd_gen)

    s = sub.add_parser("solve", help="run the classical algorithm with amplification")
    s.add_argument("instance")
    s.add_argument("--variant", choices=("greedy", "scaled"), default="greedy")
    s.add_argument("--epsilon", type=float, default=1.0)
    s.add_argument("--p", type=float, default=1.0)
    s.add_argument("--repetitions", type=int, default=None, help="default ceil(d^2), capped at 10^4")
    s.add_argument("--grid-points", type=int, default=DEFAULT_GRID)
    _common(s)
    s.set_defaults(func=cmd_solve)

    q = sub.add_parser("quench", help="simulate the quench from psi_+")
    q.add_argument("instance")
    q.add_argument("--alpha", type=float, required=True)
    q.add_argument("--t-final", type=float, required=True)
    q.add_argument("--samples", type=int, default=DEFAULT_SAMPLE_COUNT, help="number of uniform sample times")
    q.add_argument("--shots", type=int, default=0, help="measurements at t_final")
    q.add_argument("--tolerance", type=float, default=1e-10)
    _common(q)
    q.set_defaults(func=cmd_quench)

    o = sub.add_parser("oracle", help="brute-force and probabilistic checks")
    o.add_argument("task", choices=("optimum", "forces", "extremes"))
    o.add_argument("instance", nargs="?")
    o.add_argument("--spin", type=int, default=0)
    o.add_argument("--mode", choices=("exact", "sampled"), default="exact")
    o.add_argument("--trials", type=int, default=200)
    o.add_argument("--n", type=int)
    o.add_argument("--k", type=int)
    o.add_argument("--d", type=int)
    _common(o)
    o.set_defaults(func=cmd_oracle)

    b = sub.add_parser("bench", help="run a benchmark sweep from a JSON config")
    b.add_argument("config")
    _common(b, fmt_default="csv")
    b.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=getattr(logging, str(args.log_level).upper(), logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    if getattr(args, "workers", 1) < 1:
        print("error: --workers must be at least 1", file=sys.stderr)
        return EXIT_INPUT
    try:
        return args.func(args)
    except ResourceLimitError as exc:
        print(f"error: resource limit: {exc}", file=sys.stderr)
        return EXIT_LIMIT
    except (InputError, ContractError, GenerationError, DegenerateInputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except PropagationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except Exception as exc:  # noqa: BLE001
        log.exception("internal error")
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
