"""Sensitivity sampling: importance scores, sample sizes and the non-uniform sampler.

A point's sensitivity is its worst-case share of the total clustering cost.
Upper bounds on sensitivities drive a non-uniform sample in which
high-influence points are kept deterministically and the rest are drawn
i.i.d. with probabilities proportional to their (renormalized) bounds.  The
resulting weighted set is an unbiased cost estimator whose size is governed
by the VC-dimension sample bound.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .coreset import Coreset
from .errors import InvalidArgument, InvalidInput
from .linalg import PointSet, _as_readonly

DEFAULT_C_S = 8.0
DEFAULT_C_TOT = 64.0
DEFAULT_C_VC = 1.0
DEFAULT_C_DIM = 1.0
DEFAULT_BETA = 2


@dataclass(frozen=True)
class SensitivityProfile:
    """Per-point sensitivity upper bounds and their sum."""

    sigma: np.ndarray
    total: float

    def __post_init__(self):
        sigma = np.asarray(self.sigma, dtype=np.float64).reshape(-1)
        if np.any(sigma <= 0) or not np.all(np.isfinite(sigma)):
            raise InvalidInput("sensitivity bounds must be positive and finite")
        total = float(np.sum(sigma))
        if abs(total - self.total) > 1e-9 * max(total, 1.0):
            raise InvalidInput("profile total does not match the sum of bounds")
        object.__setattr__(self, "sigma", _as_readonly(sigma))
        object.__setattr__(self, "total", total)

    @property
    def n(self) -> int:
        return self.sigma.shape[0]


@dataclass(frozen=True)
class BicriteriaSolution:
    """beta*k centers with per-cluster assignment, weighted costs and sizes."""

    centers: np.ndarray
    assignment: np.ndarray
    cluster_costs: np.ndarray
    cluster_sizes: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "centers", _as_readonly(self.centers))
        assignment = np.asarray(self.assignment, dtype=np.int64)
        assignment.setflags(write=False)
        object.__setattr__(self, "assignment", assignment)
        object.__setattr__(self, "cluster_costs", _as_readonly(self.cluster_costs))
        object.__setattr__(self, "cluster_sizes", _as_readonly(self.cluster_sizes))

    @property
    def total_cost(self) -> float:
        return float(np.sum(self.cluster_costs))


def _nearest(rows: np.ndarray, centers: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Nearest listed center per row (lowest index wins ties) and its squared distance."""
    sq = (
        np.sum(rows * rows, axis=1)[:, None]
        - 2.0 * rows @ centers.T
        + np.sum(centers * centers, axis=1)[None, :]
    )
    np.maximum(sq, 0.0, out=sq)
    idx = np.argmin(sq, axis=1)
    return idx, sq[np.arange(rows.shape[0]), idx]


def d2_seed(rows: np.ndarray, weights: np.ndarray, count: int, rng: np.random.Generator) -> np.ndarray:
    """Squared-distance seeding: draw `count` rows, each proportional to its
    weighted squared distance from the rows already chosen."""
    n = rows.shape[0]
    chosen = np.empty(count, dtype=np.int64)
    p = weights / weights.sum()
    chosen[0] = rng.choice(n, p=p)
    best = np.sum((rows - rows[chosen[0]]) ** 2, axis=1)
    for i in range(1, count):
        scores = weights * best
        total = scores.sum()
        if total <= 0:
            chosen[i:] = chosen[0]
            break
        chosen[i] = rng.choice(n, p=scores / total)
        cand = np.sum((rows - rows[chosen[i]]) ** 2, axis=1)
        np.minimum(best, cand, out=best)
    return rows[chosen]


def bicriteria_kmeans(
    points: PointSet, k: int, delta: float, seed: int, beta: int = DEFAULT_BETA
) -> BicriteriaSolution:
    """Constant-factor solution with beta*k centers via squared-distance seeding.

    Runs ceil(log2(1/delta)) independently seeded attempts, refines each with
    one weighted mean update, and keeps the cheapest.
    """
    if k < 1:
        raise InvalidArgument("k must be >= 1")
    if k > points.n:
        raise InvalidArgument(f"k={k} exceeds the number of points {points.n}")
    if not 0 < delta < 1:
        raise InvalidArgument("delta must lie in (0, 1)")
    rows = np.asarray(points.rows)
    w = points.effective_weights()
    count = min(points.n, beta * k)
    restarts = max(1, math.ceil(math.log2(1.0 / delta)))
    rng = np.random.default_rng(seed)
    best = None
    for _ in range(restarts):
        centers = d2_seed(rows, w, count, rng)
        idx, _ = _nearest(rows, centers)
        centers = _mean_update(rows, w, idx, centers)
        idx, sq = _nearest(rows, centers)
        cost = float(np.sum(w * sq))
        if best is None or cost < best[0]:
            best = (cost, centers, idx, sq)
    _, centers, idx, sq = best
    costs = np.bincount(idx, weights=w * sq, minlength=centers.shape[0])
    sizes = np.bincount(idx, weights=w, minlength=centers.shape[0])
    return BicriteriaSolution(
        centers=centers, assignment=idx, cluster_costs=costs, cluster_sizes=sizes
    )


def _mean_update(
    rows: np.ndarray, weights: np.ndarray, idx: np.ndarray, centers: np.ndarray
) -> np.ndarray:
    out = centers.copy()
    k = centers.shape[0]
    sizes = np.bincount(idx, weights=weights, minlength=k)
    for col in range(rows.shape[1]):
        sums = np.bincount(idx, weights=weights * rows[:, col], minlength=k)
        occupied = sizes > 0
        out[occupied, col] = sums[occupied] / sizes[occupied]
    return out


def kmeans_sensitivities(
    points: PointSet, bic: BicriteriaSolution, c_s: float = DEFAULT_C_S
) -> SensitivityProfile:
    """Sensitivity upper bounds from a bicriteria solution.

    sigma_i = c_s * (w_i / |J_i|_w + w_i * dist2(p_i, C') / cost(A, C')); when
    the total cost vanishes only the cluster-share term remains.
    """
    if bic.assignment.shape[0] != points.n:
        raise InvalidInput("bicriteria assignment does not match the point set")
    rows = np.asarray(points.rows)
    w = points.effective_weights()
    idx = np.asarray(bic.assignment)
    _, sq = _nearest(rows, np.asarray(bic.centers))
    cluster_w = np.asarray(bic.cluster_sizes)[idx]
    if np.any(cluster_w <= 0):
        raise InvalidInput("bicriteria solution contains an empty assigned cluster")
    total_cost = bic.total_cost
    share = w / cluster_w
    if total_cost > 0:
        share = share + w * sq / total_cost
    sigma = c_s * share
    sigma = np.maximum(sigma, 1.0 / points.n)
    return SensitivityProfile(sigma=sigma, total=float(np.sum(sigma)))


def movement_sensitivities(
    points_a: PointSet,
    points_b: PointSet,
    profile_b: SensitivityProfile,
    opt_cost: float,
    alpha: float,
) -> SensitivityProfile:
    """Transfer sensitivity bounds from a moved copy of the input.

    Valid when the weighted movement sum is at most alpha times the optimal
    cost; each bound becomes (4 + 4*alpha) * (sigma_b + w * move / opt_cost).
    """
    if not opt_cost > 0:
        raise InvalidInput("optimal cost must be positive")
    if points_a.rows.shape != points_b.rows.shape:
        raise InvalidArgument("point sets must have identical shape")
    if profile_b.n != points_a.n:
        raise InvalidArgument("profile length does not match the point sets")
    w = points_a.effective_weights()
    move = np.sum((np.asarray(points_a.rows) - np.asarray(points_b.rows)) ** 2, axis=1)
    budget = float(np.sum(w * move))
    if budget > alpha * opt_cost * (1 + 1e-9):
        raise InvalidInput(
            f"movement {budget:.3e} exceeds the allowed alpha * opt = {alpha * opt_cost:.3e}"
        )
    factor = 4.0 + 4.0 * alpha
    sigma = factor * (np.asarray(profile_b.sigma) + w * move / opt_cost)
    return SensitivityProfile(sigma=sigma, total=float(np.sum(sigma)))


def vc_sample_size(
    total_sensitivity: float,
    dim_bound: int,
    eps: float,
    delta: float,
    c_vc: float = DEFAULT_C_VC,
) -> int:
    """Sample size ceil(c_vc * S/eps^2 * (dim * log2(max(S, 2)) + log2(1/delta)))."""
    if total_sensitivity <= 0 or dim_bound <= 0:
        raise InvalidArgument("total sensitivity and dimension bound must be positive")
    if not 0 < eps < 1 or not 0 < delta < 1:
        raise InvalidArgument("eps and delta must lie in (0, 1)")
    s = total_sensitivity
    raw = c_vc * s / eps**2 * (dim_bound * math.log2(max(s, 2.0)) + math.log2(1.0 / delta))
    return max(1, math.ceil(raw))


def center_query_dimension(d: int, k: int, c_dim: float = DEFAULT_C_DIM) -> int:
    """VC-dimension bound for ranges induced by k point centers in d dimensions."""
    return max(1, math.ceil(c_dim * d * k * math.log2(k + 1)))


def renormalize_bounds(sigma: np.ndarray, total: float, s: int) -> np.ndarray:
    """Raise the remaining bounds to sum back to `total` without passing total/s.

    Solves for sigma1 = min(t * sigma, total/s) with t >= 1 chosen so the sum
    is exact; this is the fixpoint of distributing the removed mass
    proportionally and clipping.
    """
    cap = total / s
    if np.any(sigma > cap * (1 + 1e-12)):
        raise InvalidInput("renormalization input still contains high-sensitivity points")
    current = float(np.sum(sigma))
    if current >= total * (1 - 1e-15):
        return sigma.copy()
    if sigma.shape[0] * cap < total * (1 - 1e-12):
        raise InvalidInput("not enough remaining points to absorb the removed mass")
    # Water-fill over the breakpoints t_i = cap / sigma_i in increasing order.
    order = np.argsort(cap / sigma)
    sorted_sigma = sigma[order]
    breakpoints = cap / sorted_sigma
    suffix = np.concatenate([np.cumsum(sorted_sigma[::-1])[::-1], [0.0]])
    out = np.empty_like(sigma)
    clipped_mass = 0.0
    for i, t_i in enumerate(breakpoints):
        # with the first i entries clipped, the sum at multiplier t is
        # clipped_mass + t * suffix[i]
        t = (total - clipped_mass) / suffix[i]
        if t <= t_i:
            out[order[:i]] = cap
            out[order[i:]] = np.minimum(t * sorted_sigma[i:], cap)
            return out
        clipped_mass += cap
    out[:] = cap
    return out


class AliasTable:
    """Vose alias method: O(n) build, O(1) categorical draws."""

    def __init__(self, probabilities: np.ndarray):
        p = np.asarray(probabilities, dtype=np.float64)
        if np.any(p < 0) or p.sum() <= 0:
            raise InvalidInput("alias table needs non-negative probabilities with positive sum")
        n = p.shape[0]
        scaled = p * n / p.sum()
        prob = np.ones(n)
        alias = np.arange(n)
        small = [i for i in range(n) if scaled[i] < 1.0]
        large = [i for i in range(n) if scaled[i] >= 1.0]
        while small and large:
            lo = small.pop()
            hi = large.pop()
            prob[lo] = scaled[lo]
            alias[lo] = hi
            scaled[hi] -= 1.0 - scaled[lo]
            (small if scaled[hi] < 1.0 else large).append(hi)
        self._prob = prob
        self._alias = alias

    def draw(self, rng: np.random.Generator, count: int) -> np.ndarray:
        slots = rng.integers(0, self._prob.shape[0], size=count)
        accept = rng.random(count) < self._prob[slots]
        return np.where(accept, slots, self._alias[slots])


def sensitivity_sample(points: PointSet, profile: SensitivityProfile, s: int, seed: int) -> Coreset:
    """Draw an s-point weighted sample; points above the 1/s share are kept outright.

    Every output weight is at least the corresponding input weight, and the
    sample is an unbiased estimator of the weighted cost of any fixed shape.
    """
    if s < 1:
        raise InvalidArgument("sample size must be >= 1")
    if profile.n != points.n:
        raise InvalidArgument("profile length does not match the point set")
    if not profile.total > 0:
        raise InvalidInput("degenerate sensitivity profile")
    sigma = np.asarray(profile.sigma)
    total = profile.total
    rows = np.asarray(points.rows)
    w = points.effective_weights()

    high = sigma / total > 1.0 / s
    rest = ~high
    n_rest = int(np.sum(rest))
    if n_rest < s:
        # Too few low-sensitivity points to renormalize against: keep everything.
        return Coreset(points=rows.copy(), weights=w.copy(), delta=0.0)

    renorm = renormalize_bounds(sigma[rest], total, s)
    table = AliasTable(renorm / total)
    rng = np.random.default_rng(seed)
    drawn = table.draw(rng, s)
    rest_idx = np.where(rest)[0]
    sampled_idx = rest_idx[drawn]
    # the cap renorm <= total/s makes each factor >= 1; guard the last ulp
    sampled_w = np.maximum(w[sampled_idx] * total / (s * renorm[drawn]), w[sampled_idx])

    pts = np.vstack([rows[high], rows[sampled_idx]]) if np.any(high) else rows[sampled_idx]
    wts = np.concatenate([w[high], sampled_w]) if np.any(high) else sampled_w
    return Coreset(points=pts, weights=wts, delta=0.0)
