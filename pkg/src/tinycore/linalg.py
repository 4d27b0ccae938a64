"""Dense matrix kernel: exact SVD, low-rank approximation and squared-distance evaluation.

Everything downstream (subspace coresets, dimensionality reduction, the
streaming summaries) is built on the thin SVD computed here.  The
factorization is computed by a one-sided Jacobi iteration with a
round-robin pairing schedule so that all rotations of a round are applied
as one vectorized update.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .errors import InvalidArgument, InvalidInput

TOL_ORTH = 1e-8
TOL_RECON = 1e-8

_JACOBI_SWEEPS = 60
_JACOBI_OFF_TOL = 1e-14


def _as_readonly(a: np.ndarray) -> np.ndarray:
    out = np.array(a, dtype=np.float64, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class PointSet:
    """n x d matrix of row points with optional non-negative multiplicities."""

    rows: np.ndarray
    weights: Optional[np.ndarray] = None

    def __post_init__(self):
        rows = np.atleast_2d(np.asarray(self.rows, dtype=np.float64))
        if rows.ndim != 2 or rows.shape[0] < 1 or rows.shape[1] < 1:
            raise InvalidInput("point set must be a non-empty n x d matrix")
        if not np.all(np.isfinite(rows)):
            raise InvalidInput("point set contains non-finite entries")
        object.__setattr__(self, "rows", _as_readonly(rows))
        if self.weights is not None:
            w = np.asarray(self.weights, dtype=np.float64).reshape(-1)
            if w.shape[0] != rows.shape[0]:
                raise InvalidInput("weight vector length does not match row count")
            if not np.all(np.isfinite(w)) or np.any(w < 0):
                raise InvalidInput("weights must be finite and non-negative")
            object.__setattr__(self, "weights", _as_readonly(w))

    @property
    def n(self) -> int:
        return self.rows.shape[0]

    @property
    def d(self) -> int:
        return self.rows.shape[1]

    def effective_weights(self) -> np.ndarray:
        """Weights with the unweighted case materialized as all ones."""
        if self.weights is None:
            return np.ones(self.n)
        return np.asarray(self.weights)

    def total_weight(self) -> float:
        return float(np.sum(self.effective_weights()))


@dataclass(frozen=True)
class SvdFactors:
    """Thin SVD A = U diag(sigma) V^T with sigma sorted non-increasingly."""

    u: np.ndarray
    sigma: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "u", _as_readonly(self.u))
        object.__setattr__(self, "sigma", _as_readonly(self.sigma))
        object.__setattr__(self, "v", _as_readonly(self.v))

    @property
    def rank_bound(self) -> int:
        return self.sigma.shape[0]

    def reconstruct(self) -> np.ndarray:
        return (self.u * self.sigma) @ self.v.T


@dataclass(frozen=True)
class Subspace:
    """Linear or affine subspace given by an orthonormal d x j basis and optional offset."""

    basis: np.ndarray
    offset: Optional[np.ndarray] = None

    def __post_init__(self):
        basis = np.atleast_2d(np.asarray(self.basis, dtype=np.float64))
        if basis.ndim != 2 or basis.shape[1] < 1:
            raise InvalidArgument("subspace basis must be a d x j matrix")
        d, j = basis.shape
        if not 1 <= j <= d - 1:
            raise InvalidArgument(f"subspace dimension {j} out of range for ambient {d}")
        gram_err = np.max(np.abs(basis.T @ basis - np.eye(j)))
        if gram_err > TOL_ORTH:
            raise InvalidArgument(f"basis columns are not orthonormal (err={gram_err:.2e})")
        object.__setattr__(self, "basis", _as_readonly(basis))
        if self.offset is not None:
            off = np.asarray(self.offset, dtype=np.float64).reshape(-1)
            if off.shape[0] != d:
                raise InvalidArgument("offset dimension does not match basis")
            object.__setattr__(self, "offset", _as_readonly(off))

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    @property
    def is_affine(self) -> bool:
        return self.offset is not None


@dataclass(frozen=True)
class CenterSet:
    """A finite set of k candidate centers, one per row."""

    centers: np.ndarray

    def __post_init__(self):
        centers = np.atleast_2d(np.asarray(self.centers, dtype=np.float64))
        if centers.ndim != 2 or centers.shape[0] < 1:
            raise InvalidArgument("center set must contain at least one center")
        if not np.all(np.isfinite(centers)):
            raise InvalidArgument("center set contains non-finite entries")
        object.__setattr__(self, "centers", _as_readonly(centers))

    @property
    def k(self) -> int:
        return self.centers.shape[0]

    @property
    def d(self) -> int:
        return self.centers.shape[1]


QueryShape = Union[CenterSet, Subspace]


def _pair_schedule(d: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Round-robin tournament pairing of d column indices (disjoint per round)."""
    cols = list(range(d))
    if d % 2 == 1:
        cols.append(-1)  # bye slot
    m = len(cols)
    rounds = []
    order = cols[:]
    for _ in range(m - 1):
        p_idx, q_idx = [], []
        for i in range(m // 2):
            a, b = order[i], order[m - 1 - i]
            if a >= 0 and b >= 0:
                p_idx.append(a)
                q_idx.append(b)
        rounds.append((np.array(p_idx), np.array(q_idx)))
        order = [order[0]] + [order[-1]] + order[1:-1]
    return rounds


def _complete_orthonormal(u: np.ndarray, missing: np.ndarray) -> None:
    """Fill the columns listed in `missing` with vectors orthonormal to the rest."""
    n = u.shape[0]
    filled = [i for i in range(u.shape[1]) if i not in set(missing.tolist())]
    basis = [u[:, i] for i in filled]
    cand = 0
    for col in missing:
        while True:
            if cand >= n:
                raise InvalidInput("cannot complete orthonormal basis")
            v = np.zeros(n)
            v[cand] = 1.0
            cand += 1
            for b in basis:  # two Gram-Schmidt passes for stability
                v -= (b @ v) * b
            for b in basis:
                v -= (b @ v) * b
            norm = np.linalg.norm(v)
            if norm > 0.5:
                v /= norm
                u[:, col] = v
                basis.append(v)
                break


def _jacobi_svd_tall(a: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """One-sided Jacobi SVD of a tall matrix (n >= d). Returns thin (U, sigma, V)."""
    n, d = a.shape
    w = a.copy()
    v = np.eye(d)
    if d > 1:
        schedule = _pair_schedule(d)
        for _ in range(_JACOBI_SWEEPS):
            off_max = 0.0
            for p_idx, q_idx in schedule:
                wp = w[:, p_idx]
                wq = w[:, q_idx]
                alpha = np.sum(wp * wp, axis=0)
                beta = np.sum(wq * wq, axis=0)
                gamma = np.sum(wp * wq, axis=0)
                denom = np.sqrt(alpha * beta)
                active = denom > 0
                rel = np.zeros_like(gamma)
                rel[active] = np.abs(gamma[active]) / denom[active]
                off_max = max(off_max, float(rel.max(initial=0.0)))
                rotate = rel > _JACOBI_OFF_TOL
                if not np.any(rotate):
                    continue
                pr = p_idx[rotate]
                qr = q_idx[rotate]
                g = gamma[rotate]
                zeta = (beta[rotate] - alpha[rotate]) / (2.0 * g)
                t = np.sign(zeta) / (np.abs(zeta) + np.sqrt(1.0 + zeta * zeta))
                t[zeta == 0] = 1.0
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = c * t
                wp, wq = w[:, pr].copy(), w[:, qr].copy()
                w[:, pr] = c * wp - s * wq
                w[:, qr] = s * wp + c * wq
                vp, vq = v[:, pr].copy(), v[:, qr].copy()
                v[:, pr] = c * vp - s * vq
                v[:, qr] = s * vp + c * vq
            if off_max <= _JACOBI_OFF_TOL:
                break
    sigma = np.linalg.norm(w, axis=0)
    order = np.argsort(-sigma, kind="stable")
    sigma = sigma[order]
    w = w[:, order]
    v = v[:, order]
    u = np.zeros((n, d))
    cutoff = max(n, d) * np.finfo(np.float64).eps * (sigma[0] if sigma[0] > 0 else 1.0)
    nonzero = sigma > cutoff
    u[:, nonzero] = w[:, nonzero] / sigma[nonzero]
    missing = np.where(~nonzero)[0]
    if missing.size:
        sigma = sigma.copy()
        sigma[missing] = 0.0
        _complete_orthonormal(u, missing)
    return u, sigma, v


def svd(points: PointSet) -> SvdFactors:
    """Exact thin SVD of the point matrix.

    Weighted inputs must be folded through :func:`weighted_fold` first; the
    factorization itself is weight-agnostic.
    """
    a = np.asarray(points.rows)
    n, d = a.shape
    if n >= d:
        u, s, v = _jacobi_svd_tall(a)
    else:
        v, s, u = _jacobi_svd_tall(a.T)
    factors = SvdFactors(u=u, sigma=s, v=v)
    _check_factors(a, factors)
    return factors


def _check_factors(a: np.ndarray, f: SvdFactors) -> None:
    r = f.rank_bound
    orth_u = np.max(np.abs(f.u.T @ f.u - np.eye(r)))
    orth_v = np.max(np.abs(f.v.T @ f.v - np.eye(r)))
    if orth_u > TOL_ORTH or orth_v > TOL_ORTH:
        raise InvalidInput(f"SVD factors lost orthonormality (u={orth_u:.2e}, v={orth_v:.2e})")
    norm_a = np.linalg.norm(a)
    recon_err = np.linalg.norm(f.reconstruct() - a)
    if recon_err > TOL_RECON * max(norm_a, 1.0):
        raise InvalidInput(f"SVD reconstruction error {recon_err:.2e} exceeds tolerance")
    if np.any(np.diff(f.sigma) > 1e-12 * max(f.sigma[0], 1.0)):
        raise InvalidInput("singular values are not sorted non-increasingly")


def low_rank_approx(factors: SvdFactors, m: int) -> np.ndarray:
    """The m-rank approximation: keep the top m singular values, zero the rest."""
    r = factors.rank_bound
    if not 1 <= m <= r:
        raise InvalidArgument(f"rank {m} out of range [1, {r}]")
    return (factors.u[:, :m] * factors.sigma[:m]) @ factors.v[:, :m].T


def tail_energy(factors: SvdFactors, m: int) -> float:
    """Sum of squared singular values past index m, i.e. ||A - A^(m)||_F^2."""
    if not 0 <= m <= factors.rank_bound:
        raise InvalidArgument(f"rank {m} out of range [0, {factors.rank_bound}]")
    return float(np.sum(factors.sigma[m:] ** 2))


def weighted_fold(points: PointSet) -> np.ndarray:
    """Scale row i by sqrt(w_i) so unweighted subspace costs match the weighted ones."""
    if points.weights is None:
        raise InvalidInput("weighted_fold requires explicit weights")
    return np.asarray(points.rows) * np.sqrt(points.effective_weights())[:, None]


def _dist2_centers(rows: np.ndarray, centers: np.ndarray) -> np.ndarray:
    """Per-row squared distance to the nearest center."""
    sq = (
        np.sum(rows * rows, axis=1)[:, None]
        - 2.0 * rows @ centers.T
        + np.sum(centers * centers, axis=1)[None, :]
    )
    return np.maximum(sq, 0.0).min(axis=1)


def _dist2_subspace(rows: np.ndarray, shape: Subspace) -> np.ndarray:
    pts = rows if shape.offset is None else rows - shape.offset[None, :]
    # Pythagoras: ||p||^2 - ||p X||^2, never materializing the complement.
    proj = pts @ shape.basis
    out = np.sum(pts * pts, axis=1) - np.sum(proj * proj, axis=1)
    return np.maximum(out, 0.0)


def dist2_rows(rows: np.ndarray, shape: QueryShape) -> np.ndarray:
    """Per-row squared distance to a query shape."""
    rows = np.atleast_2d(rows)
    if isinstance(shape, CenterSet):
        if shape.d != rows.shape[1]:
            raise InvalidArgument("center set dimension does not match points")
        return _dist2_centers(rows, np.asarray(shape.centers))
    if isinstance(shape, Subspace):
        if shape.basis.shape[0] != rows.shape[1]:
            raise InvalidArgument("subspace dimension does not match points")
        return _dist2_subspace(rows, shape)
    raise InvalidArgument(f"unsupported query shape {type(shape).__name__}")


def dist2(points: PointSet, shape: QueryShape) -> float:
    """Weighted sum of squared distances from the points to the shape."""
    per_row = dist2_rows(np.asarray(points.rows), shape)
    if points.weights is None:
        return float(np.sum(per_row))
    return float(np.sum(points.effective_weights() * per_row))
