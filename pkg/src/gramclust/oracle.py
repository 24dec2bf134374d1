"""Exact ground truth at desk scale.

brute_force_clust enumerates every assignment in mixed-radix Gray-code
order, updating cluster masses incrementally so each step costs O(n + k)
instead of O(n^2).  brute_force_c3 grid-searches three-ray planar
partitions with its own closed-form moment arithmetic, deliberately not
sharing code with the conic module so the two routes stay independent.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from .ball import radius_squared
from .conic import SearchConfig, formula_bc, search_cb
from .errors import NotPSD, TooLarge
from .matrixcore import SymMatrix, validate_psd
from .rounding import clustering_value

STATE_CAP = 50_000_000


def brute_force_clust(
    a: SymMatrix, b: SymMatrix, max_states: int = STATE_CAP
) -> tuple[float, np.ndarray]:
    """Exact max of sum a_ij b_{sigma(i) sigma(j)} over all k^n assignments."""
    n = a.dim
    k = b.dim
    states = k ** n
    if states > max_states:
        raise TooLarge(f"{k}^{n} = {states} assignments exceed the cap {max_states}")
    if k == 1:
        sigma = np.zeros(n, dtype=int)
        return clustering_value(a, b, sigma), sigma

    amat = a.mat.tolist()
    bmat = b.mat.tolist()
    sigma = [0] * n
    # row masses: r[j][s] = sum of a_jl over l currently assigned label s
    row = [[sum(amat[j]), *([0.0] * (k - 1))] for j in range(n)]
    value = clustering_value(a, b, np.zeros(n, dtype=int))
    best_value = value
    best_sigma = list(sigma)

    # Knuth 7.2.1.1 Algorithm H: loopless reflected mixed-radix Gray code;
    # each step moves exactly one digit by +-1
    focus = list(range(n + 1))
    direction = [1] * n
    while True:
        j = focus[0]
        focus[0] = 0
        if j == n:
            break
        p = sigma[j]
        q = p + direction[j]
        # incremental value update for the single flip j: p -> q
        rj = row[j]
        bq = bmat[q]
        bp = bmat[p]
        delta = 0.0
        for s in range(k):
            delta += (bq[s] - bp[s]) * rj[s]
        ajj = amat[j][j]
        value += 2.0 * delta + ajj * (bp[p] - 2.0 * bq[p] + bq[q])
        sigma[j] = q
        col = amat[j]
        for i in range(n):
            row[i][p] -= col[i]
            row[i][q] += col[i]
        if value > best_value:
            best_value = value
            best_sigma = list(sigma)
        if q == 0 or q == k - 1:
            direction[j] = -direction[j]
            focus[j] = focus[j + 1]
            focus[j + 1] = j + 1

    sigma_arr = np.asarray(best_sigma, dtype=int)
    # recompute exactly: the incremental walk accumulates rounding drift
    return clustering_value(a, b, sigma_arr), sigma_arr


def _three_ray_psi(bmat: np.ndarray, a1, a2, perm) -> np.ndarray:
    """psi of the planar partition with cell apertures (a1, a2, 2pi-a1-a2).

    Slot s gets label perm[s]; cell moments point along slot bisectors
    with magnitude sin(aperture/2)/sqrt(2 pi).
    """
    a3 = 2.0 * math.pi - a1 - a2
    betas = [a1 / 2.0, a1 + a2 / 2.0, a1 + a2 + a3 / 2.0]
    mags = [
        np.sin(ap / 2.0) / math.sqrt(2.0 * math.pi) for ap in (a1, a2, a3)
    ]
    psi = 0.0
    for s in range(3):
        for t in range(3):
            psi += (
                bmat[perm[s], perm[t]]
                * mags[s]
                * mags[t]
                * np.cos(betas[s] - betas[t])
            )
    return psi


def brute_force_c3(b: SymMatrix, grid: int = 360) -> float:
    """Dense-grid maximum of psi over three-ray planar partitions (k = 3).

    Ray angles rather than cell angles are searched (all six label-to-slot
    assignments), so non-diagonal B is covered; two-cell optima appear as a
    vanishing aperture.  One pattern-search refinement pass follows the
    grid.
    """
    if b.dim != 3:
        raise ValueError("the planar oracle is specific to k = 3")
    if grid < 180:
        raise ValueError("grid must be at least 180")
    if not validate_psd(b):
        raise NotPSD("hypothesis matrix is not PSD")
    bmat = b.mat

    steps = np.linspace(0.0, 2.0 * math.pi, grid + 1)
    a1g, a2g = np.meshgrid(steps, steps, indexing="ij")
    valid = a1g + a2g <= 2.0 * math.pi + 1e-12
    best_val = -np.inf
    best = (0.0, 0.0, (0, 1, 2))
    for perm in itertools.permutations(range(3)):
        psi = np.where(valid, _three_ray_psi(bmat, a1g, a2g, perm), -np.inf)
        idx = np.unravel_index(int(np.argmax(psi)), psi.shape)
        if psi[idx] > best_val:
            best_val = float(psi[idx])
            best = (float(a1g[idx]), float(a2g[idx]), perm)

    # local refinement: shrinking coordinate pattern search
    a1, a2, perm = best
    step = 2.0 * math.pi / grid
    while step > 1e-9:
        improved = False
        for d1, d2 in ((step, 0), (-step, 0), (0, step), (0, -step)):
            c1 = min(max(a1 + d1, 0.0), 2.0 * math.pi)
            c2 = min(max(a2 + d2, 0.0), 2.0 * math.pi - c1)
            val = float(_three_ray_psi(bmat, c1, c2, perm))
            if val > best_val:
                best_val, a1, a2 = val, c1, c2
                improved = True
        if not improved:
            step /= 2.0
    return best_val


def verify_example_section6(
    c_list, cfg: SearchConfig = SearchConfig(), rel_tol: float = 0.01
) -> dict:
    """Compare pipeline R^2, C, and ratio against the diag(1,1,c) closed
    forms for each c; pass iff every relative error is within rel_tol."""
    rows = []
    all_ok = True
    for c in c_list:
        if c <= 0:
            raise ValueError("c must be positive")
        b = SymMatrix.from_array(np.diag([1.0, 1.0, float(c)]))
        r2_ref, c_ref, ratio_ref = formula_bc(float(c))
        r2 = radius_squared(b)
        c_est, _, _ = search_cb(b, cfg)
        ratio = r2 / c_est
        errs = (
            abs(r2 - r2_ref) / r2_ref,
            abs(c_est - c_ref) / c_ref,
            abs(ratio - ratio_ref) / ratio_ref,
        )
        ok = max(errs) <= rel_tol
        all_ok &= ok
        rows.append(
            {
                "c": float(c),
                "r2": r2,
                "r2_expected": r2_ref,
                "c_of_b": c_est,
                "c_expected": c_ref,
                "ratio": ratio,
                "ratio_expected": ratio_ref,
                "max_rel_err": max(errs),
                "ok": ok,
            }
        )
    return {"passed": bool(all_ok), "rows": rows}
