"""Low-rank solver for the relaxation SDP(A|B) = max sum a_ij <x_i, x_j>.

The feasible set is a product of unit spheres and the objective is convex
(A is PSD), so the norm constraints bind at the optimum and we can ascend
directly on the spheres: the conditional-gradient step x_i <- normalize of
(A X)_i never decreases a convex objective.  First-order stationary points
are screened with the dual matrix S = diag(lambda) - A; S >= 0 certifies
global optimality, and a negative eigenvector of S gives a curvilinear
ascent direction into a fresh coordinate after rank escalation.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import NotConvergedWarning, NotPSD
from .matrixcore import SymMatrix, validate_psd


@dataclass(frozen=True)
class SdpConfig:
    """Solver knobs; None picks the scale-aware default."""

    rank0: int | None = None  # min(n, ceil(sqrt(2n)) + 1)
    grad_tol: float | None = None  # 1e-7 * ||A||_F
    value_tol: float | None = None  # 1e-8 * ||A||_F
    max_iters: int = 50_000
    restarts: int = 4


@dataclass(frozen=True)
class SdpSolution:
    value: float
    rank: int
    vectors: np.ndarray = field(repr=False)  # (n, rank), unit rows
    stationarity_residual: float = 0.0
    iterations: int = 0
    converged: bool = True
    dual_upper: float = math.inf  # certified upper bound on SDP(A|B)
    restart_index: int = 0


def _objective(a: np.ndarray, x: np.ndarray) -> float:
    return float(np.sum((a @ x) * x))


def _residual(a: np.ndarray, x: np.ndarray) -> float:
    m = a @ x
    lam = np.sum(m * x, axis=1, keepdims=True)
    return float(np.linalg.norm(2.0 * (m - lam * x)))


def _normalize_rows(x: np.ndarray) -> np.ndarray:
    x = np.array(x, dtype=float)
    norms = np.linalg.norm(x, axis=1)
    zero = norms == 0.0
    if np.any(zero):  # zero rows only occur when the matching row of A is 0
        x[zero, :] = 0.0
        x[zero, 0] = 1.0
        norms[zero] = 1.0
    return x / norms[:, None]


def _ascend(a, x, grad_tol, max_iters):
    """Conditional-gradient ascent to a first-order stationary point.

    Each step replaces every row by the feasible point maximizing the
    linearization, which never decreases a convex objective.  Rows where
    the gradient vanishes are free in the linearization; rows with a_ii > 0
    are flipped (a strict local improvement there), rows with a_ii = 0 do
    not enter the objective at all and are left alone.
    """
    iters = 0
    diag = np.diag(a)
    tiny = 1e-14 * max(1.0, float(np.max(np.abs(a))) if a.size else 0.0)
    for _ in range(max_iters):
        iters += 1
        m = a @ x
        norms = np.linalg.norm(m, axis=1)
        dead = norms <= tiny
        x_new = np.empty_like(x)
        live = ~dead
        x_new[live] = m[live] / norms[live][:, None]
        x_new[dead] = x[dead]
        for i in np.where(dead & (diag > tiny))[0]:
            r = np.linalg.norm(x[i])
            if r > 0:
                x_new[i] = -x[i] / r
            else:
                x_new[i] = 0.0
                x_new[i, 0] = 1.0
        moved = float(np.max(np.linalg.norm(x_new - x, axis=1)))
        x = x_new
        if moved < 1e-16 or _residual(a, x) <= grad_tol:
            break
    return x, iters


def _certificate(a, x):
    """(min eigval of S, its eigvector, sum of lambda) at a stationary X."""
    lam = np.sum((a @ x) * x, axis=1)
    s = np.diag(lam) - a
    eigs, vecs = np.linalg.eigh(s)
    return float(eigs[0]), vecs[:, 0], float(np.sum(lam))


def _curvilinear_kick(a, x, u):
    """Second-order escape along x_i(t) = cos(u_i t) x_i + sin(u_i t) e_new.

    Requires a fresh zero coordinate appended to every row; f''(0) =
    -2 u^T S u > 0 so some small t improves the objective.
    """
    base = _objective(a, x)
    x_aug = np.hstack([x, np.zeros((len(x), 1))])
    best = x_aug
    best_val = base
    for t in [2.0 ** (-j) for j in range(0, 22)]:
        c = np.cos(u * t)[:, None]
        s = np.sin(u * t)[:, None]
        cand = np.hstack([c * x, s * np.ones((len(x), 1))])
        val = _objective(a, cand)
        if val > best_val:
            best_val, best = val, cand
    return best, best_val > base


def _solve_single(a, x0, cfg, grad_tol, value_tol, n):
    x = _normalize_rows(x0)
    iters_total = 0
    value_prev = -math.inf
    cert_gap = math.inf
    while True:
        x, iters = _ascend(a, x, grad_tol, cfg.max_iters - iters_total)
        iters_total += iters
        value = _objective(a, x)
        mu_min, u, lam_sum = _certificate(a, x)
        scale = max(1.0, float(np.linalg.norm(a)))
        cert_gap = max(0.0, lam_sum - value) + n * max(0.0, -mu_min)
        certified = mu_min >= -1e-9 * scale
        out_of_budget = iters_total >= cfg.max_iters
        if certified or out_of_budget:
            break
        if x.shape[1] >= n:
            break
        # escalate rank by two and kick off the saddle along u
        x_kicked, improved = _curvilinear_kick(a, x, u)
        x = np.hstack([x_kicked, np.zeros((len(x), 1))])
        x = _normalize_rows(x)
        if not improved and value - value_prev <= value_tol:
            break
        value_prev = value
    return x, _objective(a, x), iters_total, cert_gap


def solve_sdp(
    a: SymMatrix,
    cfg: SdpConfig = SdpConfig(),
    rng: np.random.Generator | int = 0,
    threads: int = 1,
) -> SdpSolution:
    """First-order stationary point of the sphere-constrained relaxation.

    Restarts run independently (optionally on a thread pool) and reduce by
    (value, restart_index) lexicographic max, so the result does not depend
    on thread count.  If the iteration cap is hit with the Riemannian
    gradient above tolerance the result is returned flagged (converged
    False) and a NotConvergedWarning is emitted.
    """
    if not validate_psd(a):
        raise NotPSD("data matrix is not PSD")
    if isinstance(rng, (int, np.integer)):
        rng = np.random.default_rng(int(rng))
    n = a.dim
    mat = a.mat
    fro = float(np.linalg.norm(mat))
    grad_tol = cfg.grad_tol if cfg.grad_tol is not None else 1e-7 * max(fro, 1e-30)
    value_tol = cfg.value_tol if cfg.value_tol is not None else 1e-8 * max(fro, 1e-30)
    rank0 = cfg.rank0 if cfg.rank0 is not None else min(n, math.isqrt(2 * n - 1) + 2)

    starts = [rng.standard_normal((n, rank0)) for _ in range(max(cfg.restarts, 1))]

    def run_restart(ridx: int) -> SdpSolution:
        x, value, iters, gap = _solve_single(
            mat, starts[ridx], cfg, grad_tol, value_tol, n
        )
        return SdpSolution(
            value=value,
            rank=x.shape[1],
            vectors=x,
            stationarity_residual=_residual(mat, x),
            iterations=iters,
            converged=True,
            dual_upper=value + gap,
            restart_index=ridx,
        )

    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            solutions = list(pool.map(run_restart, range(len(starts))))
    else:
        solutions = [run_restart(r) for r in range(len(starts))]
    best = max(solutions, key=lambda s: (s.value, s.restart_index))

    # the identity Gram is feasible with value tr(A); fall back to ascending
    # from it if every restart somehow landed below that floor
    trace = float(np.trace(mat))
    if best.value < trace - 1e-9 * max(1.0, fro):
        x, value, iters, gap = _solve_single(
            mat, np.eye(n), cfg, grad_tol, value_tol, n
        )
        if value > best.value:
            best = SdpSolution(
                value=value,
                rank=x.shape[1],
                vectors=x,
                stationarity_residual=_residual(mat, x),
                iterations=iters,
                converged=True,
                dual_upper=value + gap,
                restart_index=len(starts),
            )

    x = _normalize_rows(best.vectors)
    value = _objective(mat, x)
    residual = _residual(mat, x)
    converged = residual <= grad_tol or fro == 0.0
    if not converged:
        warnings.warn(
            f"SDP ascent stopped at residual {residual:.3e} > {grad_tol:.3e}",
            NotConvergedWarning,
        )
    return SdpSolution(
        value=value,
        rank=x.shape[1],
        vectors=x,
        stationarity_residual=residual,
        iterations=best.iterations,
        converged=converged,
        dual_upper=best.dual_upper,
        restart_index=best.restart_index,
    )


def ascend_from(a: SymMatrix, vectors: np.ndarray, cfg: SdpConfig = SdpConfig()) -> SdpSolution:
    """Polish an explicit feasible configuration (norms <= 1 allowed).

    Used for the lower-bound chain: the Gram system of any clustering,
    (v_sigma(i) - w(B)) / R(B), is feasible, and ascending from it can only
    increase the value.
    """
    mat = a.mat
    fro = float(np.linalg.norm(mat))
    grad_tol = cfg.grad_tol if cfg.grad_tol is not None else 1e-7 * max(fro, 1e-30)
    # do not pre-normalize: the first ascent step from the interior point
    # already lands on the spheres without decreasing the value
    x = np.asarray(vectors, dtype=float).copy()
    x, iters = _ascend(mat, x, grad_tol, cfg.max_iters)
    x = _normalize_rows(x)  # only a_ii = 0 rows can still be interior
    mu_min, _, lam_sum = _certificate(mat, x)
    value = _objective(mat, x)
    gap = max(0.0, lam_sum - value) + a.dim * max(0.0, -mu_min)
    residual = _residual(mat, x)
    return SdpSolution(
        value=value,
        rank=x.shape[1],
        vectors=x,
        stationarity_residual=residual,
        iterations=iters,
        converged=residual <= grad_tol,
        dual_upper=value + gap,
    )


def certify_sandwich(
    sdp: SdpSolution,
    clust_exact: float,
    r2: float,
    c_of_b: float,
    tol: float = 1e-4,
) -> dict:
    """Check Clust/R^2 <= SDP <= Clust/C against an exact oracle value.

    The tolerance is ``tol`` plus the solver's certified relative duality
    gap.  Comparisons are in product form so degenerate zeros pass.
    """
    gap = max(0.0, sdp.dual_upper - sdp.value)
    allow = tol + gap / max(abs(sdp.value), 1e-30)
    floor = tol * max(1.0, abs(clust_exact), r2 * abs(sdp.value))
    left_ok = clust_exact <= r2 * sdp.value * (1.0 + allow) + floor
    right_ok = c_of_b * sdp.value <= clust_exact * (1.0 + allow) + floor
    return {
        "left_ok": bool(left_ok),
        "right_ok": bool(right_ok),
        "passed": bool(left_ok and right_ok),
        "clust_over_r2": clust_exact / r2 if r2 > 0 else 0.0,
        "sdp_value": sdp.value,
        "clust_over_c": clust_exact / c_of_b if c_of_b > 0 else 0.0,
        "tolerance": allow,
    }
