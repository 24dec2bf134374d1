"""Conical partitions of R^{l-1}, Gaussian moments, and the search for C(B).

A partition is given by distinct direction vectors w_j; cell j is the cone
where <x, w_j> is maximal.  Its quality is the quadratic form
psi = sum_{ij} b_ij <z_i, z_j> over the cells' Gaussian first moments z_j,
and C(B) is the supremum of psi over all measurable partitions, attained
by such conical ones.  The search below is exact for k <= 3 (closed-form
moments in dimensions 0..2) and seeded-net/fixed-point based above that.

Labels are 0-based throughout.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtri
from scipy.stats import qmc

from .ball import radius_squared
from .errors import DegenerateB, DimensionMismatch, NotPSD
from .matrixcore import SymMatrix, validate_psd

TWO_PI = 2.0 * math.pi
HALFLINE_MOMENT = 1.0 / math.sqrt(TWO_PI)  # int_0^inf x dgamma_1
ARC_CONST = 1.0 / (2.0 * math.sqrt(TWO_PI))
EMPTY_CELL_MASS = 1e-6
DEFAULT_MC_SAMPLES = 200_000


@dataclass(frozen=True)
class SearchConfig:
    """Tunables for search_cb; all exposed as CLI flags."""

    epsilon: float | None = None  # default 1e-3 * R(B)^2, resolved at run time
    net_delta_override: float | None = None
    mc_samples: int = DEFAULT_MC_SAMPLES
    fp_tol: float = 1e-6
    max_iters: int = 200
    seed: int = 0

    def fingerprint(self) -> tuple:
        return (
            self.epsilon,
            self.net_delta_override,
            self.mc_samples,
            self.fp_tol,
            self.max_iters,
            self.seed,
        )


@dataclass(frozen=True)
class ConicalPartition:
    """Simplicial conical partition with l active labels out of k.

    ``directions`` has one row per active label (sorted ascending), each in
    R^{l-1}; the cones live in R^{l-1} x R^{k-l} with the trailing factor
    free.  For l = 1 the single cell is the whole space.
    """

    k: int
    active: tuple[int, ...]
    directions: np.ndarray = field(repr=False)  # shape (l, l-1)

    def __post_init__(self):
        w = np.asarray(self.directions, dtype=float)
        ell = len(self.active)
        labels = [int(a) for a in self.active]
        if ell == 0 or labels != sorted(set(labels)) or not (
            0 <= labels[0] and labels[-1] < self.k
        ):
            raise DimensionMismatch(
                f"active labels {self.active} must be strictly increasing in [0, {self.k})"
            )
        if w.shape != (ell, max(ell - 1, 0)):
            raise DimensionMismatch(
                f"directions shape {w.shape} does not match {ell} active labels"
            )
        if ell > 1:
            scale = max(1.0, float(np.max(np.abs(w))))
            for i in range(ell):
                for j in range(i + 1, ell):
                    if np.max(np.abs(w[i] - w[j])) <= 1e-12 * scale:
                        raise DimensionMismatch("direction vectors must be distinct")
        w = w.copy()
        w.flags.writeable = False
        object.__setattr__(self, "directions", w)
        object.__setattr__(self, "active", tuple(int(a) for a in self.active))

    @property
    def ell(self) -> int:
        return len(self.active)

    @property
    def cone_dim(self) -> int:
        return max(self.ell - 1, 0)


@dataclass(frozen=True)
class PartitionValue:
    """Gaussian moments of a partition's cells and the value psi.

    mc_stderr is 0 for closed-form moments; heuristic marks values with no
    optimality claim (k >= 4 searches).
    """

    moments: np.ndarray = field(repr=False)  # shape (l, l-1)
    psi: float = 0.0
    mc_stderr: float = 0.0
    heuristic: bool = False


def classify(x, partition: ConicalPartition) -> int:
    """Active label whose direction maximizes <x_{1..l-1}, w_j>.

    Ties go to the smallest active label (a measure-zero event).
    """
    if partition.ell == 1:
        return partition.active[0]
    x = np.asarray(x, dtype=float).ravel()
    if x.size < partition.cone_dim:
        raise DimensionMismatch(
            f"point has {x.size} coordinates, partition reads {partition.cone_dim}"
        )
    scores = partition.directions @ x[: partition.cone_dim]
    return partition.active[int(np.argmax(scores))]


def classify_batch(points: np.ndarray, partition: ConicalPartition) -> np.ndarray:
    """Vectorized classify; rows of ``points`` are sample points."""
    if partition.ell == 1:
        return np.full(len(points), partition.active[0], dtype=int)
    scores = points[:, : partition.cone_dim] @ partition.directions.T
    idx = np.argmax(scores, axis=1)  # argmax picks first max = smallest label
    return np.asarray(partition.active, dtype=int)[idx]


def cone_moment_closed_2d(alpha: float, bisector) -> np.ndarray:
    """Exact Gaussian moment of the planar cone of opening alpha.

    The moment points along the bisector with |z|^2 = sin^2(alpha/2)/(2 pi).
    """
    if not 0.0 <= alpha <= TWO_PI + 1e-12:
        raise ValueError("opening angle must lie in [0, 2pi]")
    u = np.asarray(bisector, dtype=float)
    norm = np.linalg.norm(u)
    if norm == 0.0:
        raise ValueError("bisector must be a nonzero vector")
    return (math.sin(min(alpha, TWO_PI) / 2.0) * HALFLINE_MOMENT) * (u / norm)


def psi_value(b: SymMatrix, moments, active: tuple[int, ...] | None = None) -> float:
    """Quadratic form sum_{i,j in J} b_ij <z_i, z_j>.

    Nonnegative for PSD B: it equals || sum_i v_i (x) z_i ||^2.
    """
    z = np.asarray(moments, dtype=float)
    if z.ndim != 2:
        z = np.atleast_2d(z)
    if active is None:
        active = tuple(range(b.dim))
    if len(active) != z.shape[0]:
        raise DimensionMismatch(
            f"{len(active)} active labels but {z.shape[0]} moment vectors"
        )
    sub = b.mat[np.ix_(active, active)]
    return float(np.sum(sub * (z @ z.T)))


# ---------------------------------------------------------------------------
# fixed-seed low-discrepancy Gaussian streams


_POOL_CACHE: dict[tuple[int, int, int], np.ndarray] = {}


def gaussian_pool(dim: int, count: int, seed: int) -> np.ndarray:
    """Scrambled-Sobol Gaussian sample pool, cached for regression determinism."""
    key = (dim, count, seed)
    pool = _POOL_CACHE.get(key)
    if pool is None:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")  # Sobol balance warning for non-2^m counts
            u = qmc.Sobol(d=dim, scramble=True, seed=seed).random(count)
        pool = ndtri(np.clip(u, 1e-15, 1.0 - 1e-15))
        pool.flags.writeable = False
        _POOL_CACHE[key] = pool
    return pool


def partition_moments_mc(
    partition: ConicalPartition,
    b: SymMatrix,
    samples: int = DEFAULT_MC_SAMPLES,
    seed: int = 0,
) -> PartitionValue:
    """Monte-Carlo cell moments z_j and the induced psi.

    Per-coordinate standard errors are aggregated conservatively: the
    reported mc_stderr is the largest per-cell Euclidean aggregate.
    """
    if samples < 1_000:
        raise ValueError("need at least 1e3 samples")
    dim = partition.cone_dim
    ell = partition.ell
    if dim == 0:
        return PartitionValue(moments=np.zeros((1, 0)), psi=0.0, mc_stderr=0.0)
    pool = gaussian_pool(dim, samples, seed)
    labels = classify_batch(pool, partition)
    moments = np.zeros((ell, dim))
    stderr = 0.0
    for row, lab in enumerate(partition.active):
        contrib = pool * (labels == lab)[:, None]
        moments[row] = contrib.mean(axis=0)
        var = contrib.var(axis=0)
        stderr = max(stderr, float(np.sqrt(np.sum(var / samples))))
    psi = psi_value(b, moments, partition.active)
    return PartitionValue(moments=moments, psi=psi, mc_stderr=stderr)


# ---------------------------------------------------------------------------
# closed-form moments for cone dimension <= 2


def _planar_arcs(w: np.ndarray) -> list[tuple[int, float, float]]:
    """Angular arcs (row, theta_a, theta_b) of each direction's dominance cone.

    Breakpoints can only occur where two scores tie, i.e. perpendicular to
    some difference w_i - w_j; winners are decided at arc midpoints.
    """
    m = len(w)
    if m == 1:
        return [(0, 0.0, TWO_PI)]
    cuts = set()
    for i in range(m):
        for j in range(i + 1, m):
            d = w[i] - w[j]
            phi = math.atan2(d[1], d[0])
            cuts.add((phi + math.pi / 2.0) % TWO_PI)
            cuts.add((phi - math.pi / 2.0) % TWO_PI)
    angles = sorted(cuts)
    arcs = []
    for a, bnd in zip(angles, angles[1:] + [angles[0] + TWO_PI]):
        mid = (a + bnd) / 2.0
        u = np.array([math.cos(mid), math.sin(mid)])
        winner = int(np.argmax(w @ u))
        arcs.append((winner, a, bnd))
    # merge adjacent arcs with the same winner, including the wrap-around
    merged: list[tuple[int, float, float]] = []
    for winner, a, bnd in arcs:
        if merged and merged[-1][0] == winner and abs(merged[-1][2] - a) < 1e-15:
            merged[-1] = (winner, merged[-1][1], bnd)
        else:
            merged.append((winner, a, bnd))
    if len(merged) > 1 and merged[0][0] == merged[-1][0]:
        w0, a0, b0 = merged.pop(0)
        wl, al, bl = merged.pop()
        merged.append((wl, al, bl + (b0 - a0)))
    return merged


def _arc_moment(theta_a: float, theta_b: float) -> np.ndarray:
    return ARC_CONST * np.array(
        [math.sin(theta_b) - math.sin(theta_a), math.cos(theta_a) - math.cos(theta_b)]
    )


def _closed_form_cells(w: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(moments, masses) of the partition induced by directions w.

    Exact for cone dimension 0, 1 (half-lines) and 2 (planar arcs).
    """
    m, dim = w.shape
    if dim == 0:
        return np.zeros((1, 0)), np.ones(1)
    if dim == 1:
        scores = w[:, 0]
        pos = int(np.argmax(scores))
        neg = int(np.argmax(-scores))
        moments = np.zeros((m, 1))
        masses = np.zeros(m)
        moments[pos, 0] += HALFLINE_MOMENT
        moments[neg, 0] -= HALFLINE_MOMENT
        masses[pos] += 0.5
        masses[neg] += 0.5
        return moments, masses
    if dim == 2:
        moments = np.zeros((m, 2))
        masses = np.zeros(m)
        for row, a, bnd in _planar_arcs(w):
            moments[row] += _arc_moment(a, bnd)
            masses[row] += (bnd - a) / TWO_PI
        return moments, masses
    raise DimensionMismatch("closed forms only exist for cone dimension <= 2")


def _pool_cells(w: np.ndarray, pool: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    idx = np.argmax(pool @ w.T, axis=1)
    m = len(w)
    moments = np.zeros((m, w.shape[1]))
    masses = np.zeros(m)
    n = len(pool)
    for row in range(m):
        mask = idx == row
        masses[row] = mask.mean()
        if masses[row] > 0:
            moments[row] = pool[mask].sum(axis=0) / n
    return moments, masses


def _directions_distinct(w: np.ndarray) -> bool:
    scale = max(1.0, float(np.max(np.abs(w))) if w.size else 0.0)
    m = len(w)
    for i in range(m):
        for j in range(i + 1, m):
            if np.max(np.abs(w[i] - w[j])) <= 1e-13 * scale:
                return False
    return True


# ---------------------------------------------------------------------------
# fixed-point iteration z -> moments(P(B z))


def _fixed_point(
    b_sub: np.ndarray,
    z0: np.ndarray,
    fp_tol: float,
    max_iters: int,
    pool: np.ndarray | None = None,
) -> tuple[np.ndarray, float, float, bool]:
    """Iterate the self-consistency map, keeping the best live state.

    Returns (moments, psi, residual, alive).  The map is the
    conditional-gradient step for the convex functional psi, so psi is
    non-increasing only under sampling noise; a state is live while every
    cell keeps Gaussian mass >= EMPTY_CELL_MASS.  alive=False means the
    candidate degenerated to fewer cells (covered by a smaller subset).
    """

    def step(z):
        w = b_sub @ z
        if not _directions_distinct(w):
            return None
        if pool is None:
            return _closed_form_cells(w)
        return _pool_cells(w, pool)

    def value(z):
        return float(np.sum(b_sub * (z @ z.T)))

    z = z0
    best_z, best_psi = None, -np.inf
    residual = np.inf
    for _ in range(max_iters):
        out = step(z)
        if out is None:
            break
        z_new, masses = out
        residual = float(np.max(np.linalg.norm(z_new - z, axis=1)))
        z = z_new
        if np.min(masses) < EMPTY_CELL_MASS:
            break
        psi = value(z)
        if psi > best_psi:
            best_psi, best_z = psi, z.copy()
        if residual < fp_tol:
            break
    if best_z is None:
        return z0, value(z0), residual, False
    return best_z, best_psi, residual, True


def _fp_residual(b_sub: np.ndarray, z: np.ndarray, pool: np.ndarray | None) -> float:
    w = b_sub @ z
    if not _directions_distinct(w):
        return np.inf
    cells = _closed_form_cells(w) if pool is None else _pool_cells(w, pool)
    return float(np.max(np.linalg.norm(cells[0] - z, axis=1)))


# pool seed offset shared by the quad search path and the residual check
_FINAL_POOL_OFFSET = 103


def fixed_point_residual(
    b: SymMatrix,
    partition: ConicalPartition,
    value: PartitionValue,
    cfg: SearchConfig = SearchConfig(),
) -> float:
    """Self-consistency residual of a reported optimum.

    Recomputes the directions from the reported moments, measures the cell
    moments of the induced partition (closed form up to the planar case,
    the search's final Monte-Carlo pool above), and returns the largest
    per-cell displacement.  At a true optimum this vanishes.
    """
    if partition.ell <= 1:
        return 0.0
    sub = b.mat[np.ix_(partition.active, partition.active)]
    if partition.cone_dim <= 2:
        pool = None
    else:
        pool = gaussian_pool(
            partition.cone_dim, cfg.mc_samples, cfg.seed + _FINAL_POOL_OFFSET
        )
    return _fp_residual(sub, value.moments, pool)


# ---------------------------------------------------------------------------
# closed forms for B_c = diag(1, 1, c)


def formula_bc(c: float) -> tuple[float, float, float]:
    """(R^2, C, R^2/C) for the diagonal hypothesis diag(1, 1, c).

    C switches branch at c = 1/2, where the optimal partition degenerates
    from three cones to two half-planes.
    """
    if c <= 0:
        raise ValueError("c must be positive")
    r2 = (1.0 + c) ** 2 / (2.0 + 4.0 * c)
    if c >= 0.5:
        c_of_b = (2.0 * c + 1.0) ** 2 / (8.0 * math.pi * c)
    else:
        c_of_b = 1.0 / math.pi
    return r2, c_of_b, r2 / c_of_b


# ---------------------------------------------------------------------------
# the search


_SEARCH_CACHE: dict = {}


def clear_search_cache() -> None:
    _SEARCH_CACHE.clear()


def _canonical_label_order(b: np.ndarray) -> np.ndarray:
    """Deterministic label order invariant under simultaneous permutation."""
    keys = [
        (b[i, i], float(b[i].sum()), float(np.sum(b[i] ** 2)), i)
        for i in range(len(b))
    ]
    return np.array([i for *_, i in sorted(keys)], dtype=int)


def _angle_grid_candidates(b_sub: np.ndarray, grid: int, top: int) -> list[np.ndarray]:
    """Best three-ray planar configurations on an aperture grid.

    Cells are parametrized by apertures (a1, a2, 2pi - a1 - a2) in cyclic
    order; all 6 assignments of the three labels to the slots are scanned.
    Returns moment tuples for the ``top`` best configurations.
    """
    steps = np.linspace(0.0, TWO_PI, grid + 1)
    a1, a2 = np.meshgrid(steps, steps, indexing="ij")
    a3 = TWO_PI - a1 - a2
    valid = a3 >= -1e-12
    beta = np.stack([a1 / 2.0, a1 + a2 / 2.0, a1 + a2 + a3 / 2.0])
    mag = np.sin(np.stack([a1, a2, a3]) / 2.0) * HALFLINE_MOMENT
    scored: list[tuple[float, int, np.ndarray]] = []
    order = 0
    for perm in itertools.permutations(range(3)):
        # label perm[s] occupies slot s
        psi = np.zeros_like(a1)
        for s in range(3):
            for t in range(3):
                psi += (
                    b_sub[perm[s], perm[t]]
                    * mag[s]
                    * mag[t]
                    * np.cos(beta[s] - beta[t])
                )
        psi = np.where(valid, psi, -np.inf)
        flat = np.argpartition(psi.ravel(), -top)[-top:]
        for f in flat:
            i, j = np.unravel_index(f, psi.shape)
            if not np.isfinite(psi[i, j]):
                continue
            z = np.zeros((3, 2))
            for s in range(3):
                z[perm[s]] = mag[s][i, j] * np.array(
                    [math.cos(beta[s][i, j]), math.sin(beta[s][i, j])]
                )
            scored.append((float(psi[i, j]), order, z))
            order += 1
    scored.sort(key=lambda t: (t[0], t[1]), reverse=True)
    return [z for _, _, z in scored[:top]]


def _sobol_moment_seeds(
    ell: int, count: int, scale: float, seed: int
) -> list[np.ndarray]:
    """Low-discrepancy seed tuples (z_1..z_ell) with sum z = 0."""
    dim = (ell - 1) * (ell - 1)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        u = qmc.Sobol(d=dim, scramble=True, seed=seed).random(count)
    seeds = []
    for row in u:
        free = (2.0 * row - 1.0).reshape(ell - 1, ell - 1) * scale
        z = np.vstack([free, -free.sum(axis=0)])
        seeds.append(z)
    return seeds


def _structured_seeds(b_sub: np.ndarray) -> list[np.ndarray]:
    """Seeds from the Gram geometry: centered label vectors embedded in the
    cone dimension, at a few moment-scale radii."""
    ell = len(b_sub)
    ones = np.ones(ell) / ell
    centered = b_sub - np.outer(ones @ b_sub, np.ones(ell))
    centered = centered - np.outer(np.ones(ell), b_sub @ ones) + (ones @ b_sub @ ones)
    eigs, vecs = np.linalg.eigh((centered + centered.T) / 2.0)
    idx = np.argsort(eigs)[::-1][: ell - 1]
    coords = vecs[:, idx] * np.sqrt(np.clip(eigs[idx], 0.0, None))
    norm = float(np.max(np.linalg.norm(coords, axis=1)))
    if norm < 1e-12:
        return []
    base = coords / norm
    return [base * s for s in (0.12, 0.25, 0.4)]


@dataclass
class _Candidate:
    psi: float
    index: int
    active: tuple[int, ...]
    moments: np.ndarray
    residual: float
    mc_stderr: float


def search_cb(
    b: SymMatrix, cfg: SearchConfig = SearchConfig()
) -> tuple[float, ConicalPartition, PartitionValue]:
    """Estimate C(B) and the partition attaining it.

    Exhausts active subsets by size: pairs are closed-form, triples use the
    exact planar-angle parametrization plus net-seeded fixed-point
    refinement, and quadruples use Monte-Carlo moments with net and
    geometry seeds.  For k <= 3 the returned psi is within cfg.epsilon of
    C(B); for k >= 4 it is a lower bound with no optimality claim
    (heuristic flag set).  Candidates reduce by (psi, index) lexicographic
    max, so the result is deterministic for a fixed seed.
    """
    if not validate_psd(b):
        raise NotPSD("hypothesis matrix is not PSD")
    k = b.dim
    if k < 2:
        raise ValueError("search_cb requires k >= 2")
    r2 = radius_squared(b)
    epsilon = cfg.epsilon if cfg.epsilon is not None else 1e-3 * max(r2, 1e-12)
    if r2 < 1e-12:
        raise DegenerateB(
            "all Gram vectors coincide; every clustering of a centered matrix "
            "has value 0"
        )

    cache_key = (b.mat.round(12).tobytes(), k, cfg.fingerprint())
    cached = _SEARCH_CACHE.get(cache_key)
    if cached is not None:
        return cached

    # net resolution per the error chain delta = eps / (8 sqrt(k) |B|_1); the
    # implied candidate counts are capped (see decisions ledger) because the
    # fixed-point refinement, not raw net density, does the fine work.
    b_l1 = float(np.sum(np.abs(b.mat)))
    delta = (
        cfg.net_delta_override
        if cfg.net_delta_override is not None
        else epsilon / (8.0 * math.sqrt(k) * max(b_l1, 1e-12))
    )
    net_points = int(min(512, max(64, 4.0 / max(delta, 1e-3))))
    angle_grid = int(min(720, max(240, TWO_PI / math.sqrt(max(delta, 1e-6)))))

    perm = _canonical_label_order(b.mat)
    bc = b.mat[np.ix_(perm, perm)]

    candidates: list[_Candidate] = []
    counter = itertools.count()

    # l = 1: the whole space, psi = 0.  Baseline for degenerate instances.
    candidates.append(
        _Candidate(0.0, next(counter), (0,), np.zeros((1, 0)), 0.0, 0.0)
    )

    # l = 2: two half-lines; max over measurable 2-cell partitions is exact.
    for i, j in itertools.combinations(range(k), 2):
        gap = bc[i, i] - 2.0 * bc[i, j] + bc[j, j]  # ||v_i - v_j||^2
        if gap <= 1e-14:
            continue
        z = np.array([[HALFLINE_MOMENT], [-HALFLINE_MOMENT]])
        candidates.append(
            _Candidate(gap / TWO_PI, next(counter), (i, j), z, 0.0, 0.0)
        )

    # l = 3: exact planar machinery
    polish_iters = max(cfg.max_iters, 2000)
    for triple in itertools.combinations(range(k), 3):
        b_sub = bc[np.ix_(triple, triple)]
        seeds = _angle_grid_candidates(b_sub, grid=angle_grid, top=6)
        seeds += _structured_seeds(b_sub)
        seeds += _sobol_moment_seeds(3, min(net_points, 128), 0.45, cfg.seed + 11)
        local_best: _Candidate | None = None
        for z0 in seeds:
            z, psi, _, alive = _fixed_point(b_sub, z0, cfg.fp_tol, cfg.max_iters)
            if not alive:
                continue
            if local_best is None or psi > local_best.psi:
                local_best = _Candidate(psi, 0, triple, z, np.inf, 0.0)
        if local_best is not None:
            z, psi, res, alive = _fixed_point(
                b_sub, local_best.moments, cfg.fp_tol, polish_iters
            )
            if alive:
                candidates.append(
                    _Candidate(psi, next(counter), triple, z, res, 0.0)
                )

    # l >= 4: Monte-Carlo moments; net + geometry + random seeds
    if k >= 4:
        coarse = gaussian_pool(3, 4096, cfg.seed + 101)
        medium = gaussian_pool(3, 32768, cfg.seed + 102)
        final_pool_n = max(cfg.mc_samples, 1000)
        for quad in itertools.combinations(range(k), 4):
            b_sub = bc[np.ix_(quad, quad)]
            seeds = _structured_seeds(b_sub)
            seeds += _sobol_moment_seeds(4, net_points, 0.4, cfg.seed + 13)
            rng = np.random.default_rng(cfg.seed + 17)
            for _ in range(24):
                free = rng.normal(scale=0.2, size=(3, 3))
                seeds.append(np.vstack([free, -free.sum(axis=0)]))
            scored = []
            for z0 in seeds:
                z, psi, _, alive = _fixed_point(
                    b_sub, z0, max(cfg.fp_tol, 2e-3), 25, pool=coarse
                )
                if alive:
                    scored.append((psi, z))
            scored.sort(key=lambda t: t[0], reverse=True)
            refined = []
            for psi, z in scored[:8]:
                z, psi, _, alive = _fixed_point(
                    b_sub, z, max(cfg.fp_tol, 5e-4), cfg.max_iters, pool=medium
                )
                if alive:
                    refined.append((psi, z))
            refined.sort(key=lambda t: t[0], reverse=True)
            final_pool = gaussian_pool(3, final_pool_n, cfg.seed + _FINAL_POOL_OFFSET)
            for psi, z in refined[:2]:
                if not _directions_distinct(b_sub @ z):
                    continue
                part = ConicalPartition(
                    k=k, active=tuple(range(4)), directions=b_sub @ z
                )
                pv = partition_moments_mc(
                    part, SymMatrix(b_sub), final_pool_n, cfg.seed + _FINAL_POOL_OFFSET
                )
                masses = _pool_cells(b_sub @ z, final_pool)[1]
                if np.min(masses) < EMPTY_CELL_MASS:
                    continue
                res = _fp_residual(b_sub, pv.moments, final_pool)
                candidates.append(
                    _Candidate(
                        pv.psi, next(counter), quad, pv.moments, res, pv.mc_stderr
                    )
                )

    best = max(candidates, key=lambda c: (c.psi, c.index))

    # map canonical labels back to the caller's ordering
    active_orig = sorted(int(perm[a]) for a in best.active)
    reorder = np.argsort([int(perm[a]) for a in best.active])
    moments = best.moments[reorder]
    b_sub_orig = b.mat[np.ix_(active_orig, active_orig)]
    ell = len(active_orig)
    if ell == 1:
        directions = np.zeros((1, 0))
    else:
        directions = b_sub_orig @ moments
    partition = ConicalPartition(k=k, active=tuple(active_orig), directions=directions)
    value = PartitionValue(
        moments=moments,
        psi=best.psi,
        mc_stderr=best.mc_stderr,
        heuristic=k >= 4,
    )
    result = (best.psi, partition, value)
    _SEARCH_CACHE[cache_key] = result
    return result
