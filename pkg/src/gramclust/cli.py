"""Batch front end: ingest A and B, run the pipeline, emit a JSON report.

Subcommands: cluster, analyze-b, oracle, selftest.  Exit codes: 0 ok,
2 parse/validation error, 3 numerical failure, 4 selftest failure.
Reports are deterministic for fixed inputs and seed except the timestamp
field.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time

import numpy as np
import scipy

from . import __version__
from .acceptance import run_suite
from .ball import min_enclosing_ball
from .conic import SearchConfig, search_cb
from .errors import DegenerateB, GramclustError, NotCentered, NotPSD, ParseError
from .hardness import build_mu, dictatorship_objective
from .matrixcore import SymMatrix, gram_factorize, validate_centered, validate_psd
from .oracle import brute_force_c3, brute_force_clust
from .rounding import estimate_expectation, round_best_of
from .sdp import SdpConfig, ascend_from, solve_sdp

ASYMMETRY_CUTOFF = 1e-9


def _require_finite(arr: np.ndarray, name: str) -> None:
    if not np.all(np.isfinite(arr)):
        raise ParseError(f"matrix {name} contains NaN or Inf entries")


def _ingest(raw, name: str) -> SymMatrix:
    arr = np.asarray(raw, dtype=float)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ParseError(f"matrix {name} must be square, got shape {arr.shape}")
    _require_finite(arr, name)
    cutoff = ASYMMETRY_CUTOFF * max(1.0, float(np.max(np.abs(arr))))
    asym = float(np.max(np.abs(arr - arr.T)))
    if asym > cutoff:
        raise ParseError(
            f"matrix {name} asymmetry {asym:.3e} exceeds the {cutoff:.3e} cutoff"
        )
    return SymMatrix(arr)


def _load_csv(path: str, name: str) -> np.ndarray:
    try:
        return np.loadtxt(path, delimiter=",", dtype=float, ndmin=2)
    except (OSError, ValueError) as exc:
        raise ParseError(f"could not read {name} from {path}: {exc}") from None


def _load_inputs(args, need_a: bool = True):
    """A and B from a JSON document or a pair of CSV files."""
    if args.input is not None:
        try:
            with open(args.input) as fh:
                doc = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ParseError(f"could not parse {args.input}: {exc}") from None
        if "B" not in doc or (need_a and "A" not in doc):
            raise ParseError('input JSON must contain "A" and "B" matrices')
        a = _ingest(doc["A"], "A") if need_a and "A" in doc else None
        b = _ingest(doc["B"], "B")
        raw = json.dumps(doc, sort_keys=True).encode()
    else:
        if args.b is None or (need_a and args.a is None):
            raise ParseError("provide a JSON input file or --a/--b CSV paths")
        a = _ingest(_load_csv(args.a, "A"), "A") if need_a else None
        b = _ingest(_load_csv(args.b, "B"), "B")
        raw = b"".join(
            open(p, "rb").read() for p in ([args.a, args.b] if need_a else [args.b])
        )
    return a, b, hashlib.sha256(raw).hexdigest()


def _search_config(args) -> SearchConfig:
    return SearchConfig(
        epsilon=args.epsilon,
        net_delta_override=args.net_delta_override,
        mc_samples=args.mc_samples,
        fp_tol=args.fp_tol,
        max_iters=args.max_iters,
        seed=args.seed,
    )


def _sdp_config(args) -> SdpConfig:
    return SdpConfig(
        rank0=args.sdp_rank0,
        grad_tol=args.sdp_grad_tol,
        max_iters=args.sdp_max_iters,
        restarts=args.sdp_restarts,
    )


def _emit(report: dict, args) -> None:
    text = json.dumps(report, sort_keys=True, indent=2)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _base_report(args, digest: str, a: SymMatrix | None, b: SymMatrix) -> dict:
    return {
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
        "versions": {
            "gramclust": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
        },
        "seed": args.seed,
        "inputs": {
            "n": a.dim if a is not None else None,
            "k": b.dim,
            "sha256": digest,
            "symmetrization_applied": bool(
                (a is not None and a.asymmetry > 0) or b.asymmetry > 0
            ),
            "max_asymmetry": max(a.asymmetry if a is not None else 0.0, b.asymmetry),
        },
    }


def run_cluster(args) -> dict:
    a, b, digest = _load_inputs(args)
    if not validate_psd(a):
        raise NotPSD("A is not positive semidefinite (within 1e-9)")
    if not validate_centered(a):
        raise NotCentered("A is not centered: entries must sum to zero")
    if not validate_psd(b):
        raise NotPSD("B is not positive semidefinite (within 1e-9)")

    report = _base_report(args, digest, a, b)
    gf = gram_factorize(b)
    ball = min_enclosing_ball(gf)
    r2 = ball.radius ** 2
    report["ball"] = {
        "r2": r2,
        "center": ball.center.tolist(),
        "support": list(ball.support),
        "weights": ball.weights.tolist(),
        # non-unique when the support is affinely dependent
        "weights_rule": "minimum-norm",
    }

    try:
        c_est, partition, value = search_cb(b, _search_config(args))
    except DegenerateB:
        # all Gram vectors coincide: every clustering of a centered matrix
        # has value 0, so report the trivial certified answer
        sigma = [0] * a.dim
        report["degenerate"] = True
        report["rounding"] = {"best_value": 0.0, "sigma": sigma, "trials": 0}
        report["certified_interval"] = [0.0, 0.0]
        return report

    report["degenerate"] = False
    report["cb"] = {
        "c_estimate": c_est,
        "active": list(partition.active),
        "directions": partition.directions.tolist(),
        "heuristic": value.heuristic,
        "mc_stderr": value.mc_stderr,
    }

    sol = solve_sdp(a, _sdp_config(args), rng=args.seed, threads=args.threads)
    best, trial_values = round_best_of(
        a, b, sol.vectors, partition, trials=args.trials, seed=args.seed,
        threads=args.threads,
    )
    # lower-bound chain: the Gram system of the rounded clustering is
    # feasible, so ascending from it can only tighten the SDP value and
    # keeps the certified interval nonempty
    if ball.radius > 0:
        seed_vectors = (gf.vectors[best.sigma] - ball.center) / ball.radius
        polished = ascend_from(a, seed_vectors, _sdp_config(args))
        if polished.value > sol.value:
            sol = polished
    mean, stderr = (
        estimate_expectation(trial_values) if len(trial_values) > 1 else (best.value, 0.0)
    )

    report["sdp"] = {
        "value": sol.value,
        "rank": sol.rank,
        "stationarity_residual": sol.stationarity_residual,
        "iterations": sol.iterations,
        "converged": sol.converged,
        "dual_upper": sol.dual_upper,
    }
    report["rounding"] = {
        "best_value": best.value,
        "sigma": best.sigma.tolist(),
        "trial_index": best.trial_index,
        "trials": args.trials,
        "trial_mean": mean,
        "trial_stderr": stderr,
    }
    interval = [best.value, r2 * sol.value]
    if interval[0] > interval[1] * (1.0 + 1e-6) + 1e-12:
        raise GramclustError(
            f"certified interval is empty: {interval}; SDP polish failed"
        )
    report["certified_interval"] = interval
    report["approx_ratio"] = r2 / c_est if c_est > 0 else None
    if args.with_hardness:
        report["hardness"] = _hardness_block(b, ball, args.mu_epsilon)
    return report


def _hardness_block(b: SymMatrix, ball, epsilon: float) -> dict:
    dist = build_mu(ball, epsilon)
    return {
        "epsilon": epsilon,
        "beta": dist.beta,
        "p": dist.p.tolist(),
        "mu": dist.mu.tolist(),
        "dictatorship_objective": dictatorship_objective(b, dist),
    }


def run_analyze_b(args) -> dict:
    _, b, digest = _load_inputs(args, need_a=False)
    if not validate_psd(b):
        raise NotPSD("B is not positive semidefinite (within 1e-9)")
    report = _base_report(args, digest, None, b)
    gf = gram_factorize(b)
    ball = min_enclosing_ball(gf)
    r2 = ball.radius ** 2
    report["r2"] = r2
    try:
        c_est, partition, value = search_cb(b, _search_config(args))
    except DegenerateB:
        report["degenerate"] = True
        report["c_estimate"] = 0.0
        report["ratio"] = None
        return report
    report["degenerate"] = False
    report["c_estimate"] = c_est
    report["ratio"] = r2 / c_est if c_est > 0 else None
    report["partition"] = {
        "active": list(partition.active),
        "directions": partition.directions.tolist(),
        "heuristic": value.heuristic,
        "mc_stderr": value.mc_stderr,
    }
    report["hardness"] = _hardness_block(b, ball, args.mu_epsilon)
    return report


def run_oracle(args) -> dict:
    a, b, digest = _load_inputs(args)
    report = _base_report(args, digest, a, b)
    value, sigma = brute_force_clust(a, b, max_states=args.max_states)
    report["clust_value"] = value
    report["sigma"] = sigma.tolist()
    if b.dim == 3:
        report["c3_grid"] = brute_force_c3(b, grid=args.grid)
    return report


def run_selftest(args) -> int:
    results = run_suite(quick=args.quick)
    width = max(len(r.name) for r in results)
    print(f"{'criterion':<{width}}  status  elapsed")
    print("-" * (width + 18))
    failed = False
    for res in results:
        status = "PASS" if res.passed else "FAIL"
        print(f"{res.name:<{width}}  {status}    {res.elapsed:6.1f}s")
        for row in res.rows:
            mark = "ok" if row.get("ok") else "FAIL"
            print(f"    [{mark:>4}] {row['check']}: measured={row['measured']}"
                  f" expected={row['expected']}")
        for warning in res.warnings:
            print(f"    [warn] {warning}")
        failed |= not res.passed
    print("-" * (width + 18))
    print("result:", "FAIL" if failed else "PASS")
    return 4 if failed else 0


def _add_common(p: argparse.ArgumentParser, with_a: bool = True) -> None:
    p.add_argument("input", nargs="?", help="JSON file with matrices A and B")
    if with_a:
        p.add_argument("--a", help="CSV file with matrix A")
    p.add_argument("--b", help="CSV file with matrix B")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mc-samples", type=int, default=200_000)
    p.add_argument("--epsilon", type=float, default=None,
                   help="target accuracy for C(B) (default 1e-3 * R^2)")
    p.add_argument("--net-delta-override", type=float, default=None)
    p.add_argument("--fp-tol", type=float, default=1e-6)
    p.add_argument("--max-iters", type=int, default=200,
                   help="fixed-point iteration cap in the C(B) search")
    p.add_argument("--threads", type=int,
                   default=int(os.environ.get("GRAMCLUST_THREADS", "1")))
    p.add_argument("--out", help="write the JSON report here instead of stdout")
    p.add_argument("--format", choices=["json"], default="json")
    p.add_argument("--mu-epsilon", type=float, default=1e-4,
                   help="epsilon for the perturbed support distribution")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gramclust",
        description="Kernel clustering: certified SDP relaxation and rounding.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    cluster = sub.add_parser("cluster", help="full pipeline on (A, B)")
    _add_common(cluster)
    cluster.add_argument("--trials", type=int, default=100)
    cluster.add_argument("--sdp-rank0", type=int, default=None)
    cluster.add_argument("--sdp-grad-tol", type=float, default=None)
    cluster.add_argument("--sdp-max-iters", type=int, default=50_000)
    cluster.add_argument("--sdp-restarts", type=int, default=4)
    cluster.add_argument("--with-hardness", action="store_true",
                         help="include the hardness gadget block")
    cluster.set_defaults(fn=lambda a: (_emit(run_cluster(a), a), 0)[1])

    analyze = sub.add_parser("analyze-b", help="per-B constants and gadgets")
    _add_common(analyze, with_a=False)
    analyze.set_defaults(fn=lambda a: (_emit(run_analyze_b(a), a), 0)[1])

    oracle = sub.add_parser("oracle", help="exact desk-scale ground truth")
    _add_common(oracle)
    oracle.add_argument("--grid", type=int, default=360)
    oracle.add_argument("--max-states", type=int, default=50_000_000)
    oracle.set_defaults(fn=lambda a: (_emit(run_oracle(a), a), 0)[1])

    selftest = sub.add_parser("selftest", help="run the acceptance suite")
    selftest.add_argument("--quick", action="store_true",
                          help="formula and oracle subset only")
    selftest.set_defaults(fn=run_selftest)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (ParseError, NotPSD, NotCentered) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except GramclustError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
