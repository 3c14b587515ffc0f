"""Command-line interface.

Exit codes: 0 success / verdict optimal, 1 usage or input error (a JSON
error object is written to stderr), 2 numerical failure or a residual
check that did not pass (results are still written).
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__
from .closedform import (
    RotationExampleParams,
    closed_form_povm,
    closed_form_pe,
    closed_form_xtilde,
)
from .config import DEFAULT, DIMENSION_CAP
from .ensemble import ensemble_from_json, ensemble_to_json, rotation_ensemble
from .errors import ProblemTooLarge, SolverError, SymDiscError
from .operators import eigenstructure, matrix_from_json, matrix_to_json
from .povm import (
    POVM,
    VERIFY_TOL,
    expand_povm,
    recover_reference_povm,
    srm_povm,
    success_probability,
    verify_optimality,
)
from .sdp import BlockSpec, count_variables, lift, solve_dp1, solve_dp3

CSV_HEADER = ["N", "M", "method", "d", "Ce", "Ci", "pe", "gap", "wall_time_s"]

EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL = 0, 1, 2


class UsageError(SymDiscError):
    code = "usage"


def _emit_error(exc):
    doc = {"error": getattr(exc, "code", "error"), "type": type(exc).__name__, "message": str(exc)}
    print(json.dumps(doc), file=sys.stderr)


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"cannot serialize {type(o).__name__}")


def _dumps(doc):
    return json.dumps(doc, indent=2, default=_json_default)


def _write(text, path):
    if path in (None, "-"):
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _json_vector(text):
    """Parse ``[[re, im], ...]`` or a plain real list given on the command line."""
    data = json.loads(text)
    arr = np.array(data, dtype=float)
    if arr.ndim == 1:
        return arr.astype(np.complex128)
    if arr.ndim == 2 and arr.shape[1] == 2:
        return arr[:, 0] + 1j * arr[:, 1]
    raise UsageError("vectors must be a list of reals or of [re, im] pairs")


def _ensemble_doc(args):
    if args.input:
        with open(args.input) as fh:
            return json.load(fh)
    gen = args.generator
    if gen is None:
        raise UsageError("give --input FILE or --generator {rotation,ppm,random}")
    if args.M is None:
        raise UsageError("--M is required with --generator")
    if gen == "rotation":
        return {"generator": "rotation", "M": args.M, "alpha": args.alpha, "beta": args.beta}
    if gen == "ppm":
        doc = {"generator": "ppm", "n": args.n, "M": args.M}
        pulse, idle = _ppm_vectors(args)
        if pulse is not None:
            doc["pulse"] = [[float(z.real), float(z.imag)] for z in pulse]
        if idle is not None:
            doc["idle"] = [[float(z.real), float(z.imag)] for z in idle]
        return doc
    if gen == "random":
        if args.N is None:
            raise UsageError("--N is required with --generator random")
        return {"generator": "random", "N": args.N, "M": args.M, "seed": args.seed, "rank": args.rank}
    raise UsageError(f"unknown generator {gen!r}")


def _ppm_vectors(args):
    pulse = _json_vector(args.pulse) if args.pulse else None
    idle = _json_vector(args.idle) if args.idle else None
    if args.theta is not None:
        if pulse is not None:
            raise UsageError("--theta and --pulse are mutually exclusive")
        pulse = np.zeros(args.n, dtype=np.complex128)
        pulse[0], pulse[1] = math.cos(args.theta), math.sin(args.theta)
        if idle is None:
            idle = np.eye(args.n, dtype=np.complex128)[0]
    return pulse, idle


def _load_ensemble(args):
    doc = _ensemble_doc(args)
    tol = DEFAULT.with_(solver=args.tol)
    e = ensemble_from_json(doc, tol, args.dim_cap)
    if getattr(args, "save_ensemble", None):
        with open(args.save_ensemble, "w") as fh:
            json.dump(ensemble_to_json(e), fh)
    return e


def _csv_text(rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in rows:
        w.writerow([r[k] for k in CSV_HEADER])
    return buf.getvalue()


def _row(N, M, method, counts, pe, gap, wall):
    d, ce, ci = counts
    return {"N": N, "M": M, "method": method, "d": d, "Ce": ce, "Ci": ci,
            "pe": pe, "gap": gap, "wall_time_s": wall}


# ---------------------------------------------------------------------------
# solve


def cmd_solve(args):
    e = _load_ensemble(args)
    tol = args.tol
    out = {"N": e.dim, "M": e.M, "method": args.method}
    rows = []
    status = EXIT_OK
    X = None
    try:
        if args.method in ("dp3", "both"):
            t0 = time.perf_counter()
            eig = eigenstructure(e.S)
            Xt, rep3 = solve_dp3(e, eig, tol)
            X = lift(Xt, eig)
            out["report"] = rep3.to_dict()
            rows.append(_row(e.dim, e.M, "dp3", (rep3.d, 0, 1), rep3.p_error, rep3.duality_gap,
                             time.perf_counter() - t0))
        if args.method in ("dp1", "both"):
            X1, rep1 = solve_dp1(e.states, e.priors, tol)
            key = "dp1_report" if args.method == "both" else "report"
            out[key] = rep1.to_dict()
            rows.append(_row(e.dim, e.M, "dp1", (rep1.d, 0, e.M), rep1.p_error, rep1.duality_gap,
                             rep1.wall_time))
            if X is None:
                X = X1
            else:
                diff = abs(rep1.optimal_value - out["report"]["optimal_value"])
                out["cross_solver_difference"] = diff
                if diff > 2 * tol:
                    status = EXIT_NUMERICAL
    except SolverError as exc:
        _emit_error(exc)
        out["error"] = {"type": type(exc).__name__, "message": str(exc)}
        _finish_solve(args, out, rows)
        return EXIT_NUMERICAL

    pc = float(np.trace(X).real)
    out["P_c"] = min(1.0, max(0.0, pc))
    out["P_c_raw"] = pc
    out["P_e"] = 1.0 - out["P_c"]
    srm = srm_povm(e.states, e.priors)
    out["srm_P_e"] = 1.0 - success_probability(e.states, e.priors, srm)

    if not args.no_povm:
        try:
            pi0 = recover_reference_povm(e, X)
            povm = expand_povm(pi0, e.S, e.M)
            ver = verify_optimality(e, povm, X, args.verify_tol)
            out["Pi0"] = matrix_to_json(pi0)
            out["POVM"] = [matrix_to_json(P) for P in povm.operators]
            out["residuals"] = ver.to_dict()
            out["verdict"] = "optimal" if ver.optimal else "not_optimal"
            if not ver.optimal:
                status = EXIT_NUMERICAL
        except SymDiscError as exc:
            _emit_error(exc)
            out["verdict"] = "recovery_failed"
            out["error"] = {"type": type(exc).__name__, "message": str(exc)}
            status = EXIT_NUMERICAL
    _finish_solve(args, out, rows)
    return status


def _finish_solve(args, out, rows):
    if args.format == "csv":
        _write(_csv_text(rows), args.output)
    else:
        _write(_dumps(out), args.output)


# ---------------------------------------------------------------------------
# verify


def _load_povm(path):
    with open(path) as fh:
        doc = json.load(fh)
    if isinstance(doc, dict):
        doc = doc.get("POVM")
    if not isinstance(doc, list) or not doc:
        raise UsageError("POVM file must hold a JSON array of matrices or a solve report")
    return POVM(tuple(matrix_from_json(m) for m in doc))


def cmd_verify(args):
    e = _load_ensemble(args)
    povm = _load_povm(args.povm)
    if args.x:
        with open(args.x) as fh:
            X = matrix_from_json(json.load(fh))
    else:
        eig = eigenstructure(e.S)
        Xt, _ = solve_dp3(e, eig, args.tol)
        X = lift(Xt, eig)
    ver = verify_optimality(e, povm, X, args.verify_tol)
    doc = ver.to_dict()
    doc["verdict"] = "optimal" if ver.optimal else "not_optimal"
    _write(_dumps(doc), args.output)
    return EXIT_OK if ver.optimal else EXIT_NUMERICAL


# ---------------------------------------------------------------------------
# example2d


def cmd_example2d(args):
    p = RotationExampleParams(args.M, args.alpha, args.beta)
    pe = closed_form_pe(p)
    xt = closed_form_xtilde(p)
    pi_cf = closed_form_povm(p)
    e = rotation_ensemble(p.M, p.alpha, p.beta)
    eig = eigenstructure(e.S)
    Xt, rep = solve_dp3(e, eig, args.tol)
    X = lift(Xt, eig)
    pi0 = recover_reference_povm(e, X, eig=eig)
    ver = verify_optimality(e, expand_povm(pi0, e.S, e.M), X, args.verify_tol)
    doc = {
        "M": p.M, "alpha": p.alpha, "beta": p.beta,
        "closed_form": {
            "P_e": pe,
            "xtilde": [float(b[0, 0].real) for b in xt.blocks],
            "Pi0": None if pi_cf is None else matrix_to_json(pi_cf),
        },
        "numerical": {
            "P_e": rep.p_error,
            "abs_difference": abs(rep.p_error - pe),
            "duality_gap": rep.duality_gap,
            "Pi0": matrix_to_json(pi0),
            "Pi0_frobenius_difference": None if pi_cf is None else float(np.linalg.norm(pi0 - pi_cf)),
            "verdict": "optimal" if ver.optimal else "not_optimal",
        },
    }
    _write(_dumps(doc), args.output)
    ok = abs(rep.p_error - pe) <= 1e-6 and ver.optimal
    return EXIT_OK if ok else EXIT_NUMERICAL


# ---------------------------------------------------------------------------
# benchmark


def _bench_instance(task):
    """Solve one benchmark instance; returns a list of CSV rows."""
    doc, methods, tol, dp1_cutoff, dim_cap = task
    e = ensemble_from_json(doc, DEFAULT, dim_cap)
    N, M = e.dim, e.M
    rows = []
    if "dp3" in methods:
        t0 = time.perf_counter()
        eig = eigenstructure(e.S)
        counts = count_variables("DP3", N, M, BlockSpec(eig.multiplicities))
        try:
            _, rep = solve_dp3(e, eig, tol)
            rows.append(_row(N, M, "dp3", counts, rep.p_error, rep.duality_gap,
                             time.perf_counter() - t0))
        except (ProblemTooLarge, SolverError) as exc:
            print(f"dp3 N={N} M={M}: {exc}", file=sys.stderr)
            rows.append(_row(N, M, "dp3", counts, "failed", "failed", "failed"))
    if "dp1" in methods:
        counts = count_variables("DP1", N, M)
        if N > dp1_cutoff:
            rows.append(_row(N, M, "dp1", counts, "skipped", "skipped", "skipped"))
        else:
            try:
                _, rep = solve_dp1(e.states, e.priors, tol)
                rows.append(_row(N, M, "dp1", counts, rep.p_error, rep.duality_gap, rep.wall_time))
            except ProblemTooLarge as exc:
                print(f"dp1 N={N} M={M} skipped: {exc}", file=sys.stderr)
                rows.append(_row(N, M, "dp1", counts, "skipped", "skipped", "skipped"))
            except SolverError as exc:
                print(f"dp1 N={N} M={M}: {exc}", file=sys.stderr)
                rows.append(_row(N, M, "dp1", counts, "failed", "failed", "failed"))
    return rows


def _bench_docs(args):
    Ms = args.M_values or list(range(args.M_min, args.M_max + 1))
    docs = []
    for M in Ms:
        if args.generator == "ppm":
            doc = {"generator": "ppm", "n": args.n, "M": M}
            pulse, idle = _ppm_vectors(args)
            if pulse is not None:
                doc["pulse"] = [[float(z.real), float(z.imag)] for z in pulse]
            if idle is not None:
                doc["idle"] = [[float(z.real), float(z.imag)] for z in idle]
        elif args.generator == "rotation":
            doc = {"generator": "rotation", "M": M, "alpha": args.alpha, "beta": args.beta}
        elif args.generator == "random":
            if args.N is None:
                raise UsageError("--N is required with --generator random")
            doc = {"generator": "random", "N": args.N, "M": M, "seed": args.seed}
        else:
            raise UsageError("benchmark needs --generator {ppm,rotation,random}")
        docs.append(doc)
    return docs


def run_benchmark(docs, methods=("dp1", "dp3"), tol=DEFAULT.solver, dp1_cutoff=512,
                  dim_cap=DIMENSION_CAP, workers=1):
    tasks = [(doc, tuple(methods), tol, dp1_cutoff, dim_cap) for doc in docs]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_bench_instance, tasks))
    else:
        results = [_bench_instance(t) for t in tasks]
    return [row for rows in results for row in rows]


def cmd_benchmark(args):
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    if not methods or any(m not in ("dp1", "dp3") for m in methods):
        raise UsageError("--methods must be a comma list drawn from dp1,dp3")
    rows = run_benchmark(_bench_docs(args), methods, args.tol, args.dp1_cutoff,
                         args.dim_cap, args.workers)
    if args.format == "json":
        _write(_dumps(rows), args.output)
    else:
        _write(_csv_text(rows), args.output)
    return EXIT_OK


# ---------------------------------------------------------------------------
# count


def cmd_count(args):
    e = _load_ensemble(args)
    spec = BlockSpec(eigenstructure(e.S).multiplicities)
    rows = []
    for kind in ("PP1", "PP2", "DP1", "DP2", "DP3"):
        d, ce, ci = count_variables(kind, e.dim, e.M, spec)
        rows.append({"kind": kind, "d": d, "Ce": ce, "Ci": ci})
    if args.format == "csv":
        buf = io.StringIO()
        w = csv.DictWriter(buf, ["kind", "d", "Ce", "Ci"], lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
        _write(buf.getvalue(), args.output)
    else:
        _write(_dumps({"N": e.dim, "M": e.M, "blocks": list(spec.sizes), "table": rows}),
               args.output)
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def _add_ensemble_args(p):
    g = p.add_argument_group("ensemble")
    g.add_argument("--input", help="ensemble JSON document")
    g.add_argument("--generator", choices=["rotation", "ppm", "random"])
    g.add_argument("--M", type=int, help="number of states")
    g.add_argument("--alpha", type=float, default=1.0)
    g.add_argument("--beta", type=float, default=0.0)
    g.add_argument("--n", type=int, default=2, help="PPM slot dimension")
    g.add_argument("--pulse", help="PPM pulse vector as JSON")
    g.add_argument("--idle", help="PPM idle vector as JSON")
    g.add_argument("--theta", type=float, help="PPM pulse (cos, sin, 0...) with idle e_0")
    g.add_argument("--N", type=int, help="dimension for --generator random")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--rank", type=int, help="rank of the random reference state")
    g.add_argument("--dim-cap", type=int, default=DIMENSION_CAP)
    g.add_argument("--save-ensemble", help="write the materialized ensemble JSON here")


def build_parser():
    ap = argparse.ArgumentParser(prog="symdisc", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, fmt=("json", "csv")):
        p.add_argument("--tol", type=float, default=DEFAULT.solver, help="duality-gap tolerance")
        p.add_argument("--format", choices=fmt, default=fmt[0])
        p.add_argument("--output", "-o", help="output path (default stdout)")

    p = sub.add_parser("solve", help="solve for the optimal measurement")
    _add_ensemble_args(p)
    common(p)
    p.add_argument("--method", choices=["dp1", "dp3", "both"], default="dp3")
    p.add_argument("--verify-tol", type=float, default=VERIFY_TOL)
    p.add_argument("--no-povm", action="store_true", help="skip measurement recovery")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("verify", help="check optimality conditions for a given POVM")
    _add_ensemble_args(p)
    common(p, ("json",))
    p.add_argument("--povm", required=True, help="JSON array of matrices or a solve report")
    p.add_argument("--x", help="dual optimum X as a matrix JSON (default: solve DP3)")
    p.add_argument("--verify-tol", type=float, default=VERIFY_TOL)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("example2d", help="rotation example: closed form against the solver")
    p.add_argument("--M", type=int, required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--beta", type=float, required=True)
    common(p, ("json",))
    p.add_argument("--verify-tol", type=float, default=VERIFY_TOL)
    p.set_defaults(func=cmd_example2d)

    p = sub.add_parser("benchmark", help="DP1 against DP3 over a size sweep")
    _add_ensemble_args(p)
    common(p, ("csv", "json"))
    p.add_argument("--M-min", type=int, default=2)
    p.add_argument("--M-max", type=int, default=8)
    p.add_argument("--M-values", type=int, nargs="+", help="explicit list of M (overrides range)")
    p.add_argument("--methods", default="dp1,dp3")
    p.add_argument("--dp1-cutoff", type=int, default=512, help="skip DP1 above this dimension")
    p.add_argument("--workers", type=int, default=1, help="parallel instances (timings get noisier)")
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("count", help="variable and constraint counts for each formulation")
    _add_ensemble_args(p)
    common(p)
    p.set_defaults(func=cmd_count)
    return ap


def main(argv=None):
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        return args.func(args)
    except SolverError as exc:
        _emit_error(exc)
        return EXIT_NUMERICAL
    except (SymDiscError, OSError, json.JSONDecodeError) as exc:
        _emit_error(exc)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
