"""Merge-and-reduce streaming summaries for subspace and k-means coresets.

Incoming points fill a buffer; a full buffer is compressed to a level
coreset and cascaded through a binary counter of buckets, re-compressing on
every carry and summing the offsets.  Epochs double in length; at the end
of epoch h the surviving buckets are folded into one per-epoch summary and
the working precision tightens to eps / (10 * (h + 1)), which keeps the
total multiplicative error of a point that passes through every level
within (1 + eps).  Randomized reduces spend failure budget delta / j^2 on
the j-th construction, so the whole stream stays within delta.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .coreset import (
    Coreset,
    affine_subspace_coreset_weighted,
    coreset_size_linear,
    linear_subspace_coreset,
)
from .clustering import kmeans_coreset
from .errors import EmptyState, InvalidArgument, InvalidInput
from .linalg import PointSet

STREAM_KINDS = ("subspace", "affine", "kmeans")
DEFAULT_C_STREAM = 1.0
MEMORY_FACTOR = 3.0


@dataclass(frozen=True)
class StreamConfig:
    """Problem kind and parameters fixed for the lifetime of a stream."""

    kind: str
    eps: float
    j: Optional[int] = None
    k: Optional[int] = None
    delta: float = 0.1
    seed: int = 0
    c_stream: float = DEFAULT_C_STREAM

    def __post_init__(self):
        if self.kind not in STREAM_KINDS:
            raise InvalidArgument(f"kind must be one of {STREAM_KINDS}")
        if not 0 < self.eps <= 1:
            raise InvalidArgument("eps must lie in (0, 1]")
        if self.kind in ("subspace", "affine"):
            if self.j is None or self.j < 1:
                raise InvalidArgument("subspace streams need j >= 1")
        else:
            if self.k is None or self.k < 1:
                raise InvalidArgument("k-means streams need k >= 1")
            if not 0 < self.delta < 1:
                raise InvalidArgument("delta must lie in (0, 1)")


@dataclass
class _Bucket:
    points: np.ndarray
    weights: np.ndarray
    delta: float

    @property
    def size(self) -> int:
        return self.points.shape[0]


class CoresetStream:
    """Single-writer merge-and-reduce state machine.

    Queries take a consistent snapshot and do not mutate the state, so the
    same stream prefix always yields byte-identical summaries.
    """

    def __init__(self, config: StreamConfig):
        self.config = config
        self._d: Optional[int] = None
        self._buffer: list[np.ndarray] = []
        self._buckets: list[Optional[_Bucket]] = []
        self._summaries: list[_Bucket] = []
        self._epoch = 1
        self._epoch_seen = 0
        self._constructions = 2  # failure budget schedule starts at delta/4
        self._points_seen = 0
        self.reduce_count = 0
        self.peak_live_points = 0

    # -- sizing ---------------------------------------------------------

    @property
    def epoch(self) -> int:
        return self._epoch

    @property
    def points_seen(self) -> int:
        return self._points_seen

    def gamma(self, epoch: Optional[int] = None) -> float:
        h = self._epoch if epoch is None else epoch
        return self.config.eps / (10.0 * h)

    def level_size(self, epoch: Optional[int] = None) -> int:
        """Target coreset size for one reduce at the given epoch's precision."""
        gamma = self.gamma(epoch)
        cfg = self.config
        if cfg.kind == "subspace":
            return coreset_size_linear(cfg.j, gamma)
        if cfg.kind == "affine":
            return 2 * coreset_size_linear(cfg.j, gamma)
        return max(2 * cfg.k + 2, math.ceil(cfg.c_stream * cfg.k / gamma))

    def live_points(self) -> int:
        total = len(self._buffer)
        total += sum(b.size for b in self._buckets if b is not None)
        total += sum(b.size for b in self._summaries)
        return total

    def memory_bound(self) -> float:
        """Instrumented ceiling: live points stay below c * level_size * epoch."""
        return MEMORY_FACTOR * max(self._epoch, 1) * self.level_size() + 2 * self.level_size()

    # -- reduction ------------------------------------------------------

    def _next_seed(self) -> int:
        mix = np.random.SeedSequence([self.config.seed, self._constructions])
        return int(mix.generate_state(1)[0])

    def _reduce(self, pts: np.ndarray, wts: np.ndarray, delta_in: float, eps: float) -> _Bucket:
        cfg = self.config
        self.reduce_count += 1
        if cfg.kind == "subspace":
            # level inputs carry unit weights throughout the linear stream
            summary = linear_subspace_coreset(PointSet(pts), cfg.j, eps)
        elif cfg.kind == "affine":
            summary = affine_subspace_coreset_weighted(PointSet(pts, wts), cfg.j, eps)
        else:
            budget = cfg.delta / self._constructions**2
            seed = self._next_seed()
            self._constructions += 1
            summary = kmeans_coreset(
                PointSet(pts, wts),
                cfg.k,
                eps,
                budget,
                seed,
                sample_size=self.level_size(),
            )
        return _Bucket(
            points=np.asarray(summary.points).copy(),
            weights=np.asarray(summary.weights).copy(),
            delta=summary.delta + delta_in,
        )

    def _flush_buffer(self) -> None:
        pts = np.vstack(self._buffer)
        self._buffer = []
        carry = self._reduce(pts, np.ones(pts.shape[0]), 0.0, self.gamma())
        level = 0
        while True:
            if level == len(self._buckets):
                self._buckets.append(carry)
                break
            if self._buckets[level] is None:
                self._buckets[level] = carry
                break
            other = self._buckets[level]
            self._buckets[level] = None
            merged_pts = np.vstack([carry.points, other.points])
            merged_w = np.concatenate([carry.weights, other.weights])
            carry = self._reduce(merged_pts, merged_w, carry.delta + other.delta, self.gamma())
            level += 1

    def _roll_epoch(self) -> None:
        occupied = [b for b in self._buckets if b is not None]
        self._buckets = []
        if len(occupied) == 1:
            self._summaries.append(occupied[0])
        elif len(occupied) > 1:
            pts = np.vstack([b.points for b in occupied])
            wts = np.concatenate([b.weights for b in occupied])
            delta = float(sum(b.delta for b in occupied))
            self._summaries.append(self._reduce(pts, wts, delta, self.gamma()))
        self._epoch += 1
        self._epoch_seen = 0

    # -- public API -----------------------------------------------------

    def insert(self, point: np.ndarray) -> None:
        point = np.asarray(point, dtype=np.float64).reshape(-1)
        if not np.all(np.isfinite(point)):
            raise InvalidInput("stream point contains non-finite entries")
        if self._d is None:
            self._d = point.shape[0]
        elif point.shape[0] != self._d:
            raise InvalidInput(f"point dimension {point.shape[0]} != stream dimension {self._d}")
        self._buffer.append(point)
        self._points_seen += 1
        self._epoch_seen += 1
        if len(self._buffer) >= 2 * self.level_size():
            self._flush_buffer()
        if self._epoch_seen >= 2**self._epoch:
            self._roll_epoch()
        self.peak_live_points = max(self.peak_live_points, self.live_points())

    def extend(self, points: np.ndarray) -> None:
        for row in np.atleast_2d(np.asarray(points, dtype=np.float64)):
            self.insert(row)

    def query(self) -> Coreset:
        """Compress everything seen so far into one coreset at full precision."""
        if self._points_seen == 0:
            raise EmptyState("no points have been inserted")
        parts_pts: list[np.ndarray] = []
        parts_w: list[np.ndarray] = []
        delta = 0.0
        for bucket in self._summaries + [b for b in self._buckets if b is not None]:
            parts_pts.append(bucket.points)
            parts_w.append(bucket.weights)
            delta += bucket.delta
        if self._buffer:
            buf = np.vstack(self._buffer)
            parts_pts.append(buf)
            parts_w.append(np.ones(buf.shape[0]))
        pts = np.vstack(parts_pts)
        wts = np.concatenate(parts_w)
        cfg = self.config
        if cfg.kind == "subspace":
            final = linear_subspace_coreset(PointSet(pts), cfg.j, cfg.eps)
        elif cfg.kind == "affine":
            final = affine_subspace_coreset_weighted(PointSet(pts, wts), cfg.j, cfg.eps)
        else:
            budget = cfg.delta / self._constructions**2
            mix = np.random.SeedSequence([cfg.seed, self._constructions, self._points_seen])
            final = kmeans_coreset(
                PointSet(pts, wts),
                cfg.k,
                min(cfg.eps, 0.999),  # the config admits eps = 1, the sampler does not
                budget,
                int(mix.generate_state(1)[0]),
                sample_size=self.level_size(),
            )
        return Coreset(points=final.points, weights=final.weights, delta=final.delta + delta)

    def occupied_levels(self) -> list[int]:
        return [i for i, b in enumerate(self._buckets) if b is not None]


def stream_insert(state: CoresetStream, point: np.ndarray) -> CoresetStream:
    """Functional alias for :meth:`CoresetStream.insert`; returns the state."""
    state.insert(point)
    return state


def stream_query(state: CoresetStream) -> Coreset:
    """Functional alias for :meth:`CoresetStream.query`."""
    return state.query()
