"""Command-line front end.

Subcommands: generate | solve | export | bench | hull.  Exit codes: 0 on
success, 1 for file problems, 2 for usage errors (argparse), 3 for solver
failures, 4 when the time limit is hit, 5 when a hull description is asked
for above the dimension guard.  HULLKIT_THREADS caps bench parallelism.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .errors import DimensionTooLarge, HullkitError, ParseError
from .formulations import (
    build_milo,
    milo_incumbent_hook,
    natural_bound_heuristic,
    perspective_delta,
    relax,
    write_lp_file,
)
from .instance_io import read_instance, write_instance
from .model import (
    FactorizedInstance,
    MiqoInstance,
    SupportFamily,
    brute_force_solve,
    brute_force_solve_factorized,
    gen_best_subset,
    gen_gmrf,
)
from .polytope import (
    check_technical_condition,
    dimension_estimate,
    enumerate_vertices,
    enumerate_vertices_factorized,
    verify_trace_equalities,
)
from .solver import (
    branch_and_bound,
    gap_report,
    natural_relaxation_bound,
    perspective_relaxation_bound,
    simplex_solve,
)

EXIT_OK, EXIT_FILE, EXIT_USAGE, EXIT_SOLVER, EXIT_TIME, EXIT_DIM = 0, 1, 2, 3, 4, 5


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("HULLKIT_THREADS", "1")))
    except ValueError:
        return 1


def _sample_gmrf_signal(rows: int, cols: int, sigma: float, seed: int) -> np.ndarray:
    """Blockwise-sparse signal plus noise: a few 2x2 active patches per grid."""
    rng = np.random.default_rng(seed)
    x = np.zeros((rows, cols))
    n_blocks = max(1, round(3 * rows * cols / 100))
    for _ in range(n_blocks):
        r0 = int(rng.integers(0, max(rows - 1, 1)))
        c0 = int(rng.integers(0, max(cols - 1, 1)))
        x[r0 : r0 + 2, c0 : c0 + 2] = rng.standard_normal((min(2, rows - r0),
                                                           min(2, cols - c0)))
    y = x + sigma * rng.standard_normal((rows, cols))
    return y.reshape(-1)


def _generate_instance(args, seed: int) -> MiqoInstance:
    if args.gmrf:
        rows, cols = (int(v) for v in args.gmrf.lower().split("x"))
        y = _sample_gmrf_signal(rows, cols, args.sigma, seed)
        return gen_gmrf(rows, cols, args.sigma, args.k, y)
    rng = np.random.default_rng(seed)
    m, n = args.m, args.n
    F = rng.standard_normal((m, n))
    w = np.zeros(n)
    support_size = max(1, math.ceil(args.k * n))
    active = rng.choice(n, size=support_size, replace=False)
    w[active] = rng.uniform(0.5, 1.5, support_size) * rng.choice([-1, 1], support_size)
    beta = F @ w + 0.1 * rng.standard_normal(m)
    return gen_best_subset(F, beta, args.k)


def cmd_generate(args) -> int:
    inst = _generate_instance(args, args.seed)
    write_instance(inst, args.out)
    print(f"wrote {args.out}: n={inst.n}, support={inst.support.describe()}")
    return EXIT_OK


def _solve_once(inst: MiqoInstance, method: str, time_limit: float):
    """Returns (value, info dict).  Raises HullkitError subclasses on failure."""
    t0 = time.perf_counter()
    info: dict = {"method": method}
    if method == "brute":
        res = brute_force_solve(inst)
        info.update(value=res.value, support=res.support, nodes=res.n_supports,
                    status="optimal")
    elif method == "milo":
        bnb = branch_and_bound(build_milo(inst), time_limit=time_limit,
                               incumbent_hook=milo_incumbent_hook(inst))
        rep = gap_report(bnb.value, bnb.root_bound, "milo-root")
        info.update(value=bnb.value, nodes=bnb.nodes, status=bnb.status,
                    root_bound=bnb.root_bound, root_gap_percent=rep.gap_percent)
    elif method == "milo-lp":
        sol = simplex_solve(relax(build_milo(inst)))
        info.update(value=sol.value, status=sol.status, nodes=sol.iterations)
    elif method == "perspective":
        res = perspective_relaxation_bound(inst, perspective_delta(inst.Q))
        # the convexity certificate is valid even short of stationarity
        info.update(value=res.certified, status="optimal" if res.converged
                    else "certified", nodes=res.iterations, bound_gap=res.gap)
    elif method == "natural":
        bounds = natural_bound_heuristic(inst)
        if not np.any(bounds > 0.0):
            info.update(value=inst.offset, status="degenerate", nodes=0,
                        note="a = 0 gives zero box bounds; relaxation is trivial")
        else:
            res = natural_relaxation_bound(inst, bounds)
            info.update(value=res.certified, status="optimal" if res.converged
                        else "certified", nodes=res.iterations, bound_gap=res.gap)
    else:
        raise ValueError(f"unknown method {method}")
    info["wall_time_seconds"] = time.perf_counter() - t0
    return info


def cmd_solve(args) -> int:
    inst = read_instance(args.instance)
    if isinstance(inst, FactorizedInstance):
        inst = inst.to_canonical()
    info = _solve_once(inst, args.method, args.time_limit)
    for key in ("method", "status", "value", "support", "nodes", "root_bound",
                "root_gap_percent", "note"):
        if key in info and info[key] is not None:
            print(f"{key}: {info[key]}")
    if args.method == "milo" and inst.support.count(inst.n) <= (1 << 14):
        ref = brute_force_solve(inst)
        agree = abs(ref.value - info["value"]) <= 1e-6 * (1 + abs(ref.value))
        print(f"consistency: brute={ref.value:.12g} agree={'yes' if agree else 'no'}")
    print(f"wall_time_seconds: {info['wall_time_seconds']:.3f}")
    if info["status"] == "time_limit":
        return EXIT_TIME
    ok = ("optimal", "certified", "degenerate")
    return EXIT_OK if info["status"] in ok else EXIT_SOLVER


def cmd_export(args) -> int:
    inst = read_instance(args.instance)
    if isinstance(inst, FactorizedInstance):
        inst = inst.to_canonical()
    model = build_milo(inst)
    if args.formulation == "milo-lp":
        model = relax(model)
    write_lp_file(model, args.out)
    print(f"wrote {args.out}: {model.n_vars} variables, {len(model.rows)} rows")
    return EXIT_OK


_BENCH_METHODS = ("brute", "milo", "milo-lp", "perspective", "natural")


def _bench_cell(args, sigma: float, k: float, seeds: list[int], time_limit: float):
    per_method: dict[str, list[dict]] = {m: [] for m in _BENCH_METHODS}
    for seed in seeds:
        cell_args = argparse.Namespace(gmrf=args.gmrf, sigma=sigma, k=k,
                                       m=getattr(args, "m", 40),
                                       n=getattr(args, "n", 8))
        inst = _generate_instance(cell_args, seed)
        opt = None
        for method in _BENCH_METHODS:
            try:
                info = _solve_once(inst, method, time_limit)
            except HullkitError as exc:
                per_method[method].append({"status": f"failed:{type(exc).__name__}",
                                           "value": math.nan, "nodes": 0,
                                           "wall_time_seconds": math.nan})
                continue
            if method == "brute":
                opt = info["value"]
            if opt is not None and method != "brute":
                rep = gap_report(opt, info["value"], method)
                info["gap_percent"] = rep.gap_percent
            elif method == "brute":
                info["gap_percent"] = 0.0
            per_method[method].append(info)
    rows = []
    for method in _BENCH_METHODS:
        runs = per_method[method]
        ok = [r for r in runs if not str(r.get("status", "")).startswith("failed")]
        status = "ok" if len(ok) == len(runs) else f"{len(runs) - len(ok)}_failed"
        if any(r.get("status") == "time_limit" for r in runs):
            status = "time_limit"
        def avg(key):
            vals = [r.get(key, math.nan) for r in ok]
            return float(np.mean(vals)) if vals else math.nan
        rows.append({
            "family": "gmrf" if args.gmrf else "best-subset",
            "sigma": sigma if args.gmrf else "",
            "k": k,
            "method": method,
            "gap_percent": round(avg("gap_percent"), 6),
            "nodes": round(avg("nodes"), 2),
            "status": status,
            "wall_time_seconds": round(avg("wall_time_seconds"), 4),
        })
    return rows


def cmd_bench(args) -> int:
    sigmas = [float(v) for v in args.sigma.split(",")] if args.gmrf else [0.0]
    ks = [float(v) for v in args.k.split(",")]
    seeds = [int(v) for v in args.seeds.split(",")]
    if not sigmas or not ks or not seeds:
        print("empty grid", file=sys.stderr)
        return EXIT_USAGE
    cells = [(s, k) for s in sigmas for k in ks]
    workers = min(_threads(), len(cells))
    results: list[list[dict]] = [None] * len(cells)  # type: ignore[list-item]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = {
                pool.submit(_bench_cell, args, s, k, seeds, args.time_limit): i
                for i, (s, k) in enumerate(cells)
            }
            for fut, i in futures.items():
                results[i] = fut.result()
    else:
        for i, (s, k) in enumerate(cells):
            results[i] = _bench_cell(args, s, k, seeds, args.time_limit)
    fields = ["family", "sigma", "k", "method", "gap_percent", "nodes", "status",
              "wall_time_seconds"]
    with open(args.out, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields)
        writer.writeheader()
        for block in results:
            for row in block:
                writer.writerow(row)
    md_path = os.path.splitext(args.out)[0] + ".md"
    with open(md_path, "w") as fh:
        fh.write("| " + " | ".join(fields) + " |\n")
        fh.write("|" + "---|" * len(fields) + "\n")
        for block in results:
            for row in block:
                fh.write("| " + " | ".join(str(row[f]) for f in fields) + " |\n")
    print(f"wrote {args.out} and {md_path} ({sum(len(b) for b in results)} rows)")
    return EXIT_OK


def _detect_structure(inst) -> str:
    if isinstance(inst, FactorizedInstance) and inst.k == 1:
        return "rank-one"
    if inst.support.kind == "choose_one":
        return "choose-one"
    if inst.n == 2:
        return "two-by-two"
    return "generic"


def cmd_hull(args) -> int:
    inst = read_instance(args.instance)
    structure = args.structure
    if structure == "auto":
        structure = _detect_structure(inst)
    n_vertices = inst.support.count(inst.n)
    if n_vertices > 4096:
        raise DimensionTooLarge(
            f"{n_vertices} admissible supports; hull inspection is capped at 4096")
    payload: dict = {"structure": structure, "n": inst.n}
    if isinstance(inst, FactorizedInstance):
        vs = enumerate_vertices_factorized(inst)
        cond = check_technical_condition(inst) if inst.has_full_column_rank() else None
        payload["technical_condition"] = cond
        print(f"factorized instance, k={inst.k}")
        print(f"technical condition (column-space intersection): {cond}")
    else:
        vs = enumerate_vertices(inst)
        rep = verify_trace_equalities(inst.Q, vs)
        payload["trace_equalities_pass"] = bool(rep.passed)
        print(f"trace equalities: max violation {rep.max_violation:.2e} "
              f"({'pass' if rep.passed else 'FAIL'})")
    dim = dimension_estimate(vs)
    payload["vertices"] = len(vs)
    payload["affine_dimension"] = dim
    print(f"{len(vs)} vertices, affine dimension {dim}")
    show = vs.vertices if len(vs) <= 64 else vs.vertices[:8]
    for v in show:
        print(f"  z={v.z.astype(int).tolist()} W={np.round(v.W, 9).tolist()}")
    if len(vs) > 64:
        print(f"  ... {len(vs) - 8} more")
    from .hulls import facets_from_vertices, hull_2x2_facets

    if structure == "two-by-two":
        Q = inst.Q
        if abs(Q[0, 1] + 1.0) > 1e-9:
            print("note: closed form expects unit coupling (Q01 = -1); "
                  "printing the enumerated description instead")
        else:
            fs = hull_2x2_facets(Q[0, 0], Q[1, 1])
            print("closed-form facet system (inequalities first):")
            _print_facets(fs)
    fs = facets_from_vertices(vs)  # raises DimensionTooLarge past the guard
    print("facet system from vertex enumeration:")
    _print_facets(fs)
    payload["facets"] = {
        "m1": fs.m1,
        "rows": [
            {"gamma": fs.gammas[i].tolist(), "gvec": fs.gvecs[i].tolist(),
             "beta": fs.betas[i], "relation": "<=" if i < fs.m1 else "="}
            for i in range(fs.m)
        ],
    }
    if structure == "rank-one":
        print("hull bound: t >= (h'x)^2 / min(1, sum z)")
    elif structure == "choose-one":
        print("hull bound: t >= sum_i Q_ii x_i^2 / z_i with sum z <= 1")
    print("--- machine readable ---")
    print(json.dumps(payload, sort_keys=True))
    return EXIT_OK


def _print_facets(fs) -> None:
    for i in range(fs.m):
        rel = "<=" if i < fs.m1 else "="
        print(f"  <{np.round(fs.gammas[i], 9).tolist()}, W> "
              f"- {np.round(fs.gvecs[i], 9).tolist()}'z {rel} {fs.betas[i]:g}")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hullkit",
                                description="convex-hull machinery for "
                                            "quadratic minimization with indicators")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a synthetic instance file")
    fam = g.add_mutually_exclusive_group(required=True)
    fam.add_argument("--gmrf", metavar="RxC", help="grid denoising family, e.g. 5x5")
    fam.add_argument("--best-subset", action="store_true",
                     help="sparse regression family")
    g.add_argument("--sigma", type=float, default=0.3, help="noise level (gmrf)")
    g.add_argument("--k", type=float, required=True, help="sparsity fraction (0, 1]")
    g.add_argument("--n", type=int, default=8, help="columns (best-subset)")
    g.add_argument("--m", type=int, default=40, help="rows (best-subset)")
    g.add_argument("--seed", type=int, required=True)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_generate)

    s = sub.add_parser("solve", help="solve an instance file")
    s.add_argument("instance")
    s.add_argument("--method", required=True,
                   choices=["brute", "milo", "milo-lp", "perspective", "natural"])
    s.add_argument("--time-limit", type=float, default=60.0)
    s.set_defaults(func=cmd_solve)

    e = sub.add_parser("export", help="write the explicit model as an LP file")
    e.add_argument("instance")
    e.add_argument("--formulation", required=True, choices=["milo", "milo-lp"])
    e.add_argument("--out", required=True)
    e.set_defaults(func=cmd_export)

    b = sub.add_parser("bench", help="gap/node/time table over a parameter grid")
    famb = b.add_mutually_exclusive_group(required=True)
    famb.add_argument("--gmrf", metavar="RxC")
    famb.add_argument("--best-subset", action="store_true")
    b.add_argument("--sigma", default="0.3", help="comma list (gmrf)")
    b.add_argument("--k", required=True, help="comma list")
    b.add_argument("--seeds", required=True, help="comma list")
    b.add_argument("--n", type=int, default=8)
    b.add_argument("--m", type=int, default=40)
    b.add_argument("--time-limit", type=float, default=60.0)
    b.add_argument("--out", required=True)
    b.set_defaults(func=cmd_bench)

    h = sub.add_parser("hull", help="print vertex sets and facet systems")
    h.add_argument("instance")
    h.add_argument("--structure", default="auto",
                   choices=["auto", "rank-one", "choose-one", "two-by-two"])
    h.set_defaults(func=cmd_hull)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DimensionTooLarge as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIM
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FILE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FILE
    except HullkitError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
