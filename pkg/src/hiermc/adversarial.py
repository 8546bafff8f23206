"""Failure constructions used as likelihood stress tests.

Three candidate families: replacing one ground-truth column of cluster 1 with
the nearest distinct codeword (distance exactly g-r+1), swapping two users
whose groups achieve the minimum intra-cluster distance, and swapping across
clusters at the minimum inter-cluster distance. A converse check counts how
often candidates beat (or tie) the ground truth in likelihood; ties count as
estimator failure.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Optional

import numpy as np

from . import mds
from .likelihood import neg_log_likelihood
from .modelgen import (
    Graph,
    ModelParams,
    Observation,
    Partition,
    RatingMatrix,
    RatingVectorSet,
)

INTRA_CLUSTER = "intra_cluster"
INTER_CLUSTER = "inter_cluster"

__all__ = [
    "ColumnCandidate",
    "SwapCandidate",
    "column_candidates",
    "swap_candidates",
    "edge_free_subsets",
    "converse_check",
    "INTRA_CLUSTER",
    "INTER_CLUSTER",
]


@dataclass(frozen=True)
class ColumnCandidate:
    """Ground truth with one column of cluster 1 replaced by codeword w."""

    base: RatingMatrix
    column: int
    codeword: np.ndarray  # length g

    def matrix(self) -> RatingMatrix:
        z = self.base.partition
        entries = self.base.entries.copy()
        first_cluster = z.cluster == 0
        entries[first_cluster, self.column] = self.codeword[z.group[first_cluster]]
        return RatingMatrix(entries, self.base.q)

    def partition(self) -> Partition:
        return self.base.partition


@dataclass(frozen=True)
class SwapCandidate:
    """Ground truth with the rows of users a and b exchanged."""

    base: RatingMatrix
    a: int
    b: int
    kind: str

    def matrix(self) -> RatingMatrix:
        entries = self.base.entries.copy()
        entries[[self.a, self.b]] = entries[[self.b, self.a]]
        return RatingMatrix(entries, self.base.q)

    def partition(self) -> Partition:
        z = self.base.partition
        cluster = z.cluster.copy()
        group = z.group.copy()
        cluster[[self.a, self.b]] = cluster[[self.b, self.a]]
        group[[self.a, self.b]] = group[[self.b, self.a]]
        return Partition(cluster, group, z.c, z.g)


def _require_provenance(m0: RatingMatrix) -> Partition:
    if m0.partition is None:
        raise ValueError("candidate construction needs the ground-truth partition")
    return m0.partition


def _sections(vectors: RatingVectorSet) -> dict[tuple, np.ndarray]:
    """Columns grouped by their stacked basis pattern across all clusters."""
    stacked = vectors.basis.reshape(-1, vectors.m)
    keys = [tuple(int(v) for v in stacked[:, t]) for t in range(vectors.m)]
    out: dict[tuple, list[int]] = {}
    for t, key in enumerate(keys):
        out.setdefault(key, []).append(t)
    return {k: np.asarray(v, dtype=np.int64) for k, v in out.items()}


def column_candidates(
    m0: RatingMatrix,
    vectors: RatingVectorSet,
    code: mds.MdsCode,
    max_count: Optional[int] = None,
) -> list[ColumnCandidate]:
    """Candidates over the largest column section, one per column.

    The replacement is the lexicographically first codeword at distance
    exactly g-r+1 from the true cluster-1 column; existence is guaranteed by
    the code's minimum distance.
    """
    _require_provenance(m0)
    sections = _sections(vectors)
    largest = max(sections.values(), key=lambda cols: (len(cols), -cols[0]))
    words = mds.all_codewords(code)
    target = code.g - code.r + 1
    out = []
    columns = largest if max_count is None else largest[:max_count]
    for k in columns:
        true_col = vectors.vectors[0][:, k]
        dists = np.count_nonzero(words != true_col[None, :], axis=1)
        idx = np.flatnonzero(dists == target)
        if idx.size == 0:  # cannot happen for a valid MDS code
            raise RuntimeError("no codeword at the minimum distance")
        out.append(ColumnCandidate(m0, int(k), words[idx[0]].copy()))
    return out


def _min_distance_pair(vectors: RatingVectorSet, kind: str) -> tuple[tuple[int, int], tuple[int, int]]:
    """Lexicographically first group pair achieving tau1 (intra) or tau2 (inter)."""
    flat = vectors.flat()
    cg = flat.shape[0]
    g = vectors.g
    dist = (flat[:, None, :] != flat[None, :, :]).sum(axis=2)
    best = None
    for a in range(cg):
        for b in range(a + 1, cg):
            same_cluster = a // g == b // g
            if (kind == INTRA_CLUSTER) != same_cluster:
                continue
            if best is None or dist[a, b] < dist[best[0], best[1]]:
                best = (a, b)
    if best is None:
        raise ValueError(f"no {kind} pair exists (g < 2 or c < 2)")
    a, b = best
    return (a // g, a % g), (b // g, b % g)


def swap_candidates(
    m0: RatingMatrix,
    z0: Partition,
    vectors: RatingVectorSet,
    kind: str,
) -> Iterator[SwapCandidate]:
    """Lazily yield user swaps between the minimum-distance group pair.

    Swaps of users with identical rating vectors would reproduce the ground
    truth and are not emitted.
    """
    if kind not in (INTRA_CLUSTER, INTER_CLUSTER):
        raise ValueError(f"unknown swap kind: {kind}")
    (x1, i1), (x2, i2) = _min_distance_pair(vectors, kind)
    if np.array_equal(vectors.vectors[x1][i1], vectors.vectors[x2][i2]):
        return
    for a in z0.users_in(x1, i1):
        for b in z0.users_in(x2, i2):
            yield SwapCandidate(m0, int(a), int(b), kind)


def edge_free_subsets(
    graph: Graph,
    cell_i: np.ndarray,
    cell_j: np.ndarray,
    target: int,
    seed,
) -> Optional[tuple[np.ndarray, np.ndarray]]:
    """Extract edge-free subsets of size >= target from two disjoint cells.

    Sample 2*target vertices per cell, then scan the internal edges in
    canonical order removing both endpoints of any edge still present.
    Returns None when pruning leaves fewer than target survivors on a side.
    """
    cell_i = np.asarray(cell_i, dtype=np.int64)
    cell_j = np.asarray(cell_j, dtype=np.int64)
    if np.intersect1d(cell_i, cell_j).size:
        raise ValueError("cells must be disjoint")
    if target < 1:
        raise ValueError("target must be positive")
    if len(cell_i) < 2 * target or len(cell_j) < 2 * target:
        raise ValueError("cells must hold at least 2*target users")
    rng = np.random.default_rng(seed)
    pick_i = np.sort(rng.choice(cell_i, size=2 * target, replace=False))
    pick_j = np.sort(rng.choice(cell_j, size=2 * target, replace=False))
    present = set(pick_i.tolist()) | set(pick_j.tolist())
    adj = graph.adjacency()
    union = np.asarray(sorted(present), dtype=np.int64)
    sub = adj[np.ix_(union, union)]
    for ai in range(len(union)):
        if union[ai] not in present:
            continue
        for bi in range(ai + 1, len(union)):
            if sub[ai, bi] and union[ai] in present and union[bi] in present:
                present.discard(int(union[ai]))
                present.discard(int(union[bi]))
                break
    surv_i = np.asarray([u for u in pick_i if u in present], dtype=np.int64)
    surv_j = np.asarray([u for u in pick_j if u in present], dtype=np.int64)
    if len(surv_i) < target or len(surv_j) < target:
        return None
    return surv_i[:target], surv_j[:target]


def converse_check(
    y: Observation,
    graph: Graph,
    m0: RatingMatrix,
    candidates,
    params: ModelParams,
) -> float:
    """Fraction of candidates whose likelihood is at least as good as the
    ground truth's (ties count against the ground truth)."""
    z0 = _require_provenance(m0)
    base_score = neg_log_likelihood(y, graph, m0, z0, params)
    total = 0
    beaten = 0
    tol = 1e-9 * max(1.0, abs(base_score) if np.isfinite(base_score) else 1.0)
    for cand in candidates:
        total += 1
        score = neg_log_likelihood(y, graph, cand.matrix(), cand.partition(), params)
        if score <= base_score + tol:
            beaten += 1
    if total == 0:
        raise ValueError("no candidates supplied")
    return beaten / total
