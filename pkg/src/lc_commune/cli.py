"""Command-line interface: ``lc-commune {generate,cluster,evaluate,simulate,rates}``.

Every command is deterministic given ``--seed``. Worker processes run with
single-threaded BLAS, so results do not depend on ``--threads`` either.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from .genmodel import (PRESET_VARIANTS, LatentModelSpec, derive_seed, draw_model,
                       preset_spec, write_draw)
from .graph_io import degree_stats, read_edge_list, read_labels, write_labels
from .pipeline import initialize
from .provable import provable_run
from .refine import refine
from .theory import RateConfig, bayes_risk, misclustering_loss, rate_bounds

log = logging.getLogger("lc_commune")

THREADS_ENV = "LC_COMMUNE_THREADS"


@dataclass
class RunReport:
    command: list
    seed: int
    records: list = field(default_factory=list)
    aggregates: dict = field(default_factory=dict)
    outputs: list = field(default_factory=list)

    def write(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(asdict(self), fh, indent=2, sort_keys=True)
            fh.write("\n")


def mean_sd(values) -> tuple[float, float | None]:
    """Mean and sample standard deviation; the sd is ``None`` for one value."""
    vals = [float(v) for v in values]
    mean = math.fsum(vals) / len(vals)
    if len(vals) < 2:
        return mean, None
    var = math.fsum((v - mean) ** 2 for v in vals) / (len(vals) - 1)
    return mean, math.sqrt(var)


# --- argument helpers ----------------------------------------------------------

def _epsilon(text: str) -> float:
    v = float(text)
    if not 0 <= v < 0.5:
        raise argparse.ArgumentTypeError(f"epsilon must lie in [0, 0.5), got {v}")
    return v


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {v}")
    return v


def _int_list(text: str) -> list[int]:
    try:
        out = [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not out or min(out) < 0:
        raise argparse.ArgumentTypeError("rounds must be nonnegative integers")
    return out


def resolve_threads(value: int | None) -> int:
    if value is not None:
        return value
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            n = int(env)
        except ValueError:
            raise SystemExit(f"{THREADS_ENV} must be an integer, got {env!r}")
        if n < 1:
            raise SystemExit(f"{THREADS_ENV} must be positive")
        return n
    return 1


def _model_args(p: argparse.ArgumentParser, preset_default: str | None = "spec1") -> None:
    g = p.add_mutually_exclusive_group()
    g.add_argument("--preset", choices=sorted(PRESET_VARIANTS), default=preset_default)
    g.add_argument("--spec", type=Path, help="model description as JSON")
    p.add_argument("--tau", type=float, default=None)
    p.add_argument("--alpha-bar", type=float, default=None)
    p.add_argument("--n", type=_positive, default=None)
    p.add_argument("--normalize-h", action="store_true",
                   help="rescale H to unit spectral norm")


def _spec_from_args(args) -> LatentModelSpec:
    if args.spec is not None:
        spec = LatentModelSpec.from_json(args.spec)
        changes = {}
        if args.tau is not None:
            changes["tau"] = args.tau
        if args.alpha_bar is not None:
            changes["alpha_bar"] = args.alpha_bar
        if args.n is not None:
            changes["n"] = args.n
            changes["sizes"] = (args.n // 2, args.n - args.n // 2)
        if changes:
            spec = spec.replace(**changes)
    else:
        spec = preset_spec(args.preset,
                           tau=0.5 if args.tau is None else args.tau,
                           alpha_bar=-2.49 if args.alpha_bar is None else args.alpha_bar,
                           n=1000 if args.n is None else args.n)
    if args.normalize_h:
        spec = spec.replace(normalize_h=True)
    return spec


# --- generate ----------------------------------------------------------------

def cmd_generate(args) -> int:
    spec = _spec_from_args(args)
    with threadpool_limits(1):
        draw = draw_model(spec, args.seed)
    paths = write_draw(draw, args.out, latents=not args.no_latents)
    stats = degree_stats(draw.A)
    report = RunReport(sys.argv[1:] if args.argv is None else args.argv, args.seed,
                       aggregates={"avg_degree": stats.avg_degree, "n_edges": draw.A.n_edges,
                                   "spec": spec.to_dict()},
                       outputs=paths)
    report.write(f"{args.out}.report.json")
    print(f"n={spec.n} edges={draw.A.n_edges} avg_degree={stats.avg_degree:.2f}")
    for p in paths:
        print(p)
    return 0


# --- cluster -----------------------------------------------------------------

def cmd_cluster(args) -> int:
    A = read_edge_list(args.edges)
    threads = resolve_threads(args.threads)
    out = args.out or str(Path(args.edges).with_suffix(".est.labels"))
    records = []
    with threadpool_limits(1):
        if args.method == "speclore":
            t0 = time.perf_counter()
            init = initialize(A, args.k, seed=args.seed)
            t1 = time.perf_counter()
            labels = refine(A, init, args.k, rounds=args.rounds)
            t2 = time.perf_counter()
            records.append({"init_seconds": t1 - t0, "refine_seconds": t2 - t1,
                            "total_seconds": t2 - t0})
        else:
            if threads > 1:
                with ProcessPoolExecutor(threads, initializer=_single_thread_blas) as pool:
                    res = provable_run(A, args.k, seed=args.seed,
                                       map_fn=lambda f, it: pool.map(f, it, chunksize=16))
            else:
                res = provable_run(A, args.k, seed=args.seed)
            labels = res.labels
            records.append({"total_seconds": res.seconds,
                            "node_seconds": res.node_seconds.tolist()})
    write_labels(labels, out)
    agg = {"n": A.n, "k": args.k, "method": args.method, "rounds": args.rounds,
           "unassigned": int(np.sum(labels == 0))}
    if args.truth:
        agg["loss"] = misclustering_loss(read_labels(args.truth), labels)
        print(f"loss={agg['loss']:.6f}")
    report = RunReport(sys.argv[1:] if args.argv is None else args.argv, args.seed,
                       records=records, aggregates=agg, outputs=[out])
    report.write(args.report or f"{out}.report.json")
    print(out)
    return 0


# --- evaluate ----------------------------------------------------------------

def cmd_evaluate(args) -> int:
    truth = read_labels(args.truth)
    est = read_labels(args.estimate)
    if args.k is not None:
        top = max(int(truth.max(initial=0)), int(est.max(initial=0)))
        if top > args.k:
            raise SystemExit(f"labels exceed k={args.k}")
    loss = misclustering_loss(truth, est)
    if args.json:
        print(json.dumps({"loss": loss, "n": int(truth.size)}))
    else:
        print(f"{loss:.6f}")
    return 0


# --- simulate ----------------------------------------------------------------

CSV_COLUMNS = ["preset", "variant", "tau", "alpha_bar", "method", "rounds", "reps",
               "avg_degree", "bayes_risk", "error_mean", "error_sd"]


@dataclass(frozen=True)
class _Rep:
    spec: LatentModelSpec
    variant: int
    rep: int
    seed: int
    rounds: tuple
    provable: bool
    k: int


def _single_thread_blas() -> None:
    threadpool_limits(1)


def _run_rep(task: _Rep) -> dict:
    with threadpool_limits(1):
        draw_seed = derive_seed(task.seed, 0, task.variant, task.rep)
        algo_seed = derive_seed(task.seed, 1, task.variant, task.rep)
        draw = draw_model(task.spec, draw_seed)
        A = draw.A
        t0 = time.perf_counter()
        init = initialize(A, task.k, seed=algo_seed)
        t_init = time.perf_counter() - t0
        errors = {"initial": misclustering_loss(draw.truth, init)}
        times = {"initial": t_init}
        labels, done, t_ref = init, 0, 0.0
        for R in sorted(task.rounds):
            t0 = time.perf_counter()
            labels = refine(A, labels, task.k, rounds=R - done)
            t_ref += time.perf_counter() - t0
            done = R
            errors[f"speclore_R{R}"] = misclustering_loss(draw.truth, labels)
            # initialization time counts toward the pipeline
            times[f"speclore_R{R}"] = t_init + t_ref
        if task.provable:
            res = provable_run(A, task.k, seed=algo_seed)
            errors["provable"] = misclustering_loss(draw.truth, res.labels)
            times["provable"] = res.seconds
    return {"variant": task.variant, "rep": task.rep, "avg_degree": degree_stats(A).avg_degree,
            "errors": errors, "seconds": times}


def run_simulation(preset: str, reps: int, rounds=(1, 10), seed: int = 0, threads: int = 1,
                   provable: bool = False, n: int = 1000, variants=None,
                   normalize_h: bool = False) -> tuple[list[dict], list[dict]]:
    """Repeated draws for each variant of ``preset``.

    Returns ``(rows, records)``: one summary row per (variant, method,
    rounds) and one record per repetition. The rows contain no timings.
    """
    grid = PRESET_VARIANTS[preset]
    chosen = range(len(grid)) if variants is None else variants
    tasks = []
    specs = {}
    for v in chosen:
        tau, abar = grid[v]
        spec = preset_spec(preset, tau=tau, alpha_bar=abar, n=n)
        if normalize_h:
            spec = spec.replace(normalize_h=True)
        specs[v] = spec
        tasks += [_Rep(spec, v, r, seed, tuple(rounds), provable, spec.k) for r in range(reps)]
    if threads > 1:
        with ProcessPoolExecutor(threads, initializer=_single_thread_blas) as pool:
            records = list(pool.map(_run_rep, tasks))
    else:
        records = [_run_rep(t) for t in tasks]
    records.sort(key=lambda r: (r["variant"], r["rep"]))

    rows = []
    for v in chosen:
        recs = [r for r in records if r["variant"] == v]
        spec = specs[v]
        deg, _ = mean_sd(r["avg_degree"] for r in recs)
        risk = bayes_risk(spec.mu, spec.tau)
        methods = [("initial", 0)] + [(f"speclore_R{R}", R) for R in sorted(rounds)]
        if provable:
            methods.append(("provable", 1))
        for key, R in methods:
            m, s = mean_sd(r["errors"][key] for r in recs)
            rows.append({"preset": preset, "variant": v, "tau": spec.tau,
                         "alpha_bar": spec.alpha_bar, "method": key.split("_")[0],
                         "rounds": R, "reps": len(recs), "avg_degree": deg,
                         "bayes_risk": risk, "error_mean": m, "error_sd": s})
    return rows, records


def format_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for row in rows:
        w.writerow(["" if row[c] is None else (repr(row[c]) if isinstance(row[c], float) else row[c])
                    for c in CSV_COLUMNS])
    return buf.getvalue()


def cmd_simulate(args) -> int:
    threads = resolve_threads(args.threads)
    rows, records = run_simulation(args.preset, args.reps, rounds=args.rounds, seed=args.seed,
                                   threads=threads, provable=args.method == "provable",
                                   n=args.n or 1000, normalize_h=args.normalize_h)
    text = format_csv(rows)
    out = args.out or f"{args.preset}.csv"
    with open(out, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    agg = {}
    for row in rows:
        key = f"{row['variant']}/{row['method']}/R{row['rounds']}"
        agg[key] = {"error_mean": row["error_mean"], "error_sd": row["error_sd"]}
    report = RunReport(sys.argv[1:] if args.argv is None else args.argv, args.seed,
                       records=records, aggregates=agg, outputs=[out])
    report.write(args.report or f"{out}.report.json")
    print_table(rows)
    return 0


def print_table(rows) -> None:
    print(f"{'tau':>6} {'alpha':>7} {'method':>9} {'R':>3} {'degree':>8} {'bayes%':>9} {'error%':>8}")
    for r in rows:
        print(f"{r['tau']:6.2f} {r['alpha_bar']:7.2f} {r['method']:>9} {r['rounds']:3d} "
              f"{r['avg_degree']:8.2f} {100 * r['bayes_risk']:9.3g} {100 * r['error_mean']:8.2f}")


# --- rates -------------------------------------------------------------------

def cmd_rates(args) -> int:
    spec = _spec_from_args(args)
    cfg = RateConfig(args.epsilon, args.n or spec.n, outer_samples=args.outer_samples,
                     inner_samples=args.inner_samples)
    with threadpool_limits(1):
        est = rate_bounds(spec, cfg, seed=args.seed)
    text = json.dumps(est.to_dict(), indent=2, sort_keys=True)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    print(text)
    return 0


# --- entry point -------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lc-commune", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="draw a network from the latent model")
    _model_args(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="draw", help="output prefix")
    p.add_argument("--no-latents", action="store_true")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("cluster", help="detect communities in an edge list")
    p.add_argument("edges")
    p.add_argument("--k", type=_positive, default=2)
    p.add_argument("--rounds", type=int, default=10)
    p.add_argument("--method", choices=["speclore", "provable"], default="speclore",
                   help="'provable' is the leave-one-out reference variant")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=_positive, default=None)
    p.add_argument("--truth", help="true labels, to report the loss")
    p.add_argument("--out")
    p.add_argument("--report")
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("evaluate", help="misclustering proportion of an estimate")
    p.add_argument("truth")
    p.add_argument("estimate")
    p.add_argument("--k", type=_positive, default=None)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("simulate", help="repeat draws of a preset and tabulate errors")
    p.add_argument("--preset", choices=sorted(PRESET_VARIANTS), default="spec1")
    p.add_argument("--reps", type=_positive, default=50)
    p.add_argument("--rounds", type=_int_list, default=[1, 10])
    p.add_argument("--method", choices=["speclore", "provable"], default="speclore",
                   help="'provable' adds the leave-one-out variant (slow)")
    p.add_argument("--n", type=_positive, default=None)
    p.add_argument("--normalize-h", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=_positive, default=None)
    p.add_argument("--out")
    p.add_argument("--report")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("rates", help="Monte-Carlo error envelopes")
    _model_args(p)
    p.add_argument("--epsilon", type=_epsilon, default=0.1)
    p.add_argument("--outer-samples", type=_positive, default=20000)
    p.add_argument("--inner-samples", type=_positive, default=512)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_rates)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    args.argv = list(argv) if argv is not None else None
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (OSError, ValueError) as exc:
        print(f"lc-commune: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
