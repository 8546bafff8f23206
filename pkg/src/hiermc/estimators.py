"""Exact and practical estimators for the hierarchical completion problem.

exact_ml enumerates every equal-cell labeled partition (desk scale only) and
solves the rating assignment per partition in closed form: given the
partition, the likelihood decomposes over columns and clusters, so the best
candidate picks the best codeword per (cluster, column).

practical_estimate is a staged pipeline: spectral embedding -> balanced
k-means into cells -> cell merging into clusters by edge density ->
within-cluster profile refinement -> per-column codeword decoding -> local
refinement by single-user moves scored with each user's exact likelihood
contribution. Every stage keeps cells at exactly n/(gc) users and draws any
randomness from the per-call seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg
import scipy.sparse
import scipy.sparse.linalg

from . import mds
from .likelihood import neg_log_likelihood
from .modelgen import (
    ERASED,
    Graph,
    ModelParams,
    Observation,
    Partition,
    RatingMatrix,
    RatingVectorSet,
)

__all__ = [
    "EstimatorConfig",
    "Estimate",
    "SearchBudgetError",
    "per_column_ml",
    "exact_ml",
    "practical_estimate",
    "is_success",
]

_EPS = 1e-12


class SearchBudgetError(RuntimeError):
    """Exhaustive search refused; carries the computed search-space size."""

    def __init__(self, size: int, budget: int):
        super().__init__(
            f"exact search space has {size} labeled partitions, over budget {budget}"
        )
        self.size = size
        self.budget = budget


@dataclass
class EstimatorConfig:
    """Stage toggles and thresholds for the practical estimator."""

    spectral_dim: Optional[int] = None  # embedding dimension, default g*c
    kmeans_iters: int = 60
    profile_rounds: int = 10
    max_iters: int = 30  # joint refinement iterations
    enum_budget: int = 10**6  # exact_ml labeled-partition cap
    merge_enum_cap: int = 100_000  # cell-merge exact enumeration cap
    use_spectral: bool = True
    use_profile_stage: bool = True
    use_refinement: bool = True

    @staticmethod
    def from_dict(d: dict) -> "EstimatorConfig":
        cfg = EstimatorConfig()
        for key, val in d.items():
            if not hasattr(cfg, key):
                raise ValueError(f"unknown estimator config key: {key}")
            setattr(cfg, key, val)
        return cfg


@dataclass
class Estimate:
    matrix: RatingMatrix
    partition: Partition
    vectors: RatingVectorSet
    score: float
    diagnostics: dict = field(default_factory=dict)


def is_success(est: Estimate, m0: RatingMatrix) -> bool:
    """Entrywise matrix equality; label permutations cannot matter."""
    if (est.matrix.n, est.matrix.m) != (m0.n, m0.m):
        raise ValueError("shape mismatch between estimate and ground truth")
    return np.array_equal(est.matrix.entries, m0.entries)


# -- per-column codeword decoding --------------------------------------------


def _symbol_match_counts(y: Observation, z: Partition, q: int) -> np.ndarray:
    """counts[x, i, s, t]: observed entries in cell (x, i), column t equal to s."""
    c, g = z.c, z.g
    counts = np.zeros((c * g, q, y.m), dtype=np.int64)
    cell = z.cell
    for s in range(q):
        hits = (y.entries == s).astype(np.int64)
        np.add.at(counts[:, s, :], cell, hits)
    return counts.reshape(c, g, q, y.m)


def per_column_ml(
    code: mds.MdsCode,
    y: Observation,
    z: Partition,
    params: ModelParams,
) -> tuple[RatingMatrix, RatingVectorSet]:
    """Optimal rating completion for a fixed partition.

    The graph terms of the likelihood are fixed by the partition, so the
    optimum decomposes: per cluster and column, pick the best codeword under
    the weights log(1-theta) per match and log(theta/(q-1)) per mismatch.
    Because match + mismatch is fixed per column, that score is affine in the
    total match count with positive slope, so the argmax is computed over
    integer match counts: ties are exact and break to the lexicographically
    smallest codeword. theta = 0 additionally rules out any codeword that
    contradicts an observation.
    """
    counts = _symbol_match_counts(y, z, params.q)  # (c, g, q, m)
    words = mds.all_codewords(code)  # (N, g) lexicographic
    g = code.g
    vectors = np.empty((z.c, g, y.m), dtype=np.int64)
    for x in range(z.c):
        # totals[w, t] = total match count of codeword w at column t
        totals = counts[x][np.arange(g)[None, :], words, :].sum(axis=1)
        if params.theta == 0.0:
            observed = counts[x].sum(axis=1)  # (g, m)
            mismatches = (observed[None, :, :] - counts[x][np.arange(g)[None, :], words, :]).sum(axis=1)
            totals = np.where(mismatches > 0, -1, totals)
        choice = np.argmax(totals, axis=0)  # first maximizer = lex smallest
        vectors[x] = words[choice].T
    basis = vectors[:, : code.r, :]  # systematic: first r rows are the basis
    vset = RatingVectorSet(vectors, basis, code)
    matrix = RatingMatrix.from_structure(vset, z, params.q)
    return matrix, vset


# -- exact maximum likelihood -------------------------------------------------


def _count_equal_partitions(n: int, k: int) -> int:
    size = n // k
    total = math.factorial(n)
    return total // (math.factorial(size) ** k)


def _equal_label_vectors(n: int, k: int):
    """All label vectors with each label in [0, k) appearing exactly n/k times,
    in lexicographic order."""
    size = n // k
    counts = [size] * k
    labels = [0] * n

    def rec(pos: int):
        if pos == n:
            yield labels.copy()
            return
        for lab in range(k):
            if counts[lab]:
                counts[lab] -= 1
                labels[pos] = lab
                yield from rec(pos + 1)
                counts[lab] += 1

    yield from rec(0)


def exact_ml(
    y: Observation,
    graph: Graph,
    params: ModelParams,
    budget: int = 10**6,
) -> Estimate:
    """Global likelihood minimizer over all equal-cell partitions and
    codeword-consistent completions.

    Ties break lexicographically: smallest cell-label vector first, then the
    per-column codeword choice (already lexicographic inside per_column_ml).
    Refuses with the computed search-space size when over budget.
    """
    k = params.c * params.g
    space = _count_equal_partitions(params.n, k)
    if space > budget:
        raise SearchBudgetError(space, budget)
    code = mds.build_code(params.g, params.r, params.q)
    best: Optional[tuple[float, Estimate]] = None
    tol = 1e-9  # scores within tol are ties; the first (lex-smallest) candidate wins
    for labels in _equal_label_vectors(params.n, k):
        cell = np.asarray(labels, dtype=np.int64)
        z = Partition(cell // params.g, cell % params.g, params.c, params.g)
        matrix, vset = per_column_ml(code, y, z, params)
        score = neg_log_likelihood(y, graph, matrix, z, params)
        if best is None or score < best[0] - tol:
            best = (score, Estimate(matrix, z, vset, score))
    assert best is not None
    est = best[1]
    est.diagnostics = {"search_space": space}
    return est


# -- staged practical estimator ----------------------------------------------


def _spectral_embedding(graph: Graph, k: int, rng: np.random.Generator) -> np.ndarray:
    """Rows of the top-k eigenvectors of D^{-1/2} A D^{-1/2}, row-normalized."""
    n = graph.n
    if graph.edge_count == 0:
        return np.zeros((n, k))
    edges = graph.edges
    deg = np.bincount(edges.ravel(), minlength=n).astype(float)
    scale = 1.0 / np.sqrt(np.maximum(deg, 1.0))
    k_eff = min(k, n - 1)
    if n <= 200:
        norm = graph.adjacency() * scale[:, None] * scale[None, :]
        vals, vecs = scipy.linalg.eigh(norm)
        emb = vecs[:, np.argsort(vals)[::-1][:k_eff]]
    else:
        rows = np.concatenate([edges[:, 0], edges[:, 1]])
        cols = np.concatenate([edges[:, 1], edges[:, 0]])
        data = scale[rows] * scale[cols]
        norm = scipy.sparse.csr_matrix((data, (rows, cols)), shape=(n, n))
        v0 = rng.standard_normal(n)  # fixed start vector keeps ARPACK deterministic
        vals, vecs = scipy.sparse.linalg.eigsh(norm, k=k_eff, which="LA", v0=v0)
        emb = vecs[:, np.argsort(vals)[::-1]]
    norms = np.linalg.norm(emb, axis=1)
    emb = emb / np.maximum(norms, _EPS)[:, None]
    return emb


def _balanced_assign(scores: np.ndarray, capacity: int) -> np.ndarray:
    """Capacity-constrained assignment: lower score is better.

    Users are processed in descending margin (gap between their two best
    cells) so confident users claim their cells first; each takes its best
    cell with remaining capacity. Ties prefer the lower cell index.
    """
    n, k = scores.shape
    finite = np.nan_to_num(scores, posinf=1e300, neginf=-1e300)
    prefs = np.argsort(finite, axis=1, kind="stable")
    ranked = np.take_along_axis(finite, prefs, axis=1)
    margin = ranked[:, 1] - ranked[:, 0] if k > 1 else np.zeros(n)
    order = np.argsort(-margin, kind="stable")
    pref_lists = prefs.tolist()
    remaining = [capacity] * k
    labels = np.empty(n, dtype=np.int64)
    for u in order:
        for cellidx in pref_lists[u]:
            if remaining[cellidx] > 0:
                labels[u] = cellidx
                remaining[cellidx] -= 1
                break
    return labels


def _balanced_kmeans(
    points: np.ndarray, k: int, rng: np.random.Generator, iters: int
) -> np.ndarray:
    """Deterministic balanced k-means with farthest-first initialization."""
    n = points.shape[0]
    capacity = n // k
    norms = np.linalg.norm(points, axis=1)
    centers = [points[int(np.argmax(norms))]]
    dist = np.linalg.norm(points - centers[0], axis=1)
    for _ in range(1, k):
        centers.append(points[int(np.argmax(dist))])
        dist = np.minimum(dist, np.linalg.norm(points - centers[-1], axis=1))
    centers = np.stack(centers)
    labels = None
    for _ in range(iters):
        d2 = ((points[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        new_labels = _balanced_assign(d2, capacity)
        if labels is not None and np.array_equal(new_labels, labels):
            break
        labels = new_labels
        for j in range(k):
            members = points[labels == j]
            if members.size:
                centers[j] = members.mean(axis=0)
    return labels


def _cell_densities(graph: Graph, cells: np.ndarray, k: int) -> np.ndarray:
    sizes = np.bincount(cells, minlength=k).astype(float)
    counts = np.zeros((k, k))
    if graph.edge_count:
        ca = cells[graph.edges[:, 0]]
        cb = cells[graph.edges[:, 1]]
        np.add.at(counts, (ca, cb), 1.0)
        np.add.at(counts, (cb, ca), 1.0)
    pairs = np.outer(sizes, sizes)
    np.fill_diagonal(pairs, np.maximum(sizes * (sizes - 1), 1.0))
    return counts / np.maximum(pairs, 1.0)


def _equal_block_partitions(k: int, c: int, g: int):
    """Unordered partitions of [k] into c blocks of size g, anchored canonically."""
    items = list(range(k))

    def rec(remaining: list[int]):
        if not remaining:
            yield []
            return
        head = remaining[0]
        rest = remaining[1:]
        from itertools import combinations

        for combo in combinations(rest, g - 1):
            block = [head, *combo]
            left = [x for x in rest if x not in combo]
            for tail in rec(left):
                yield [block, *tail]

    yield from rec(items)


def _count_block_partitions(k: int, c: int, g: int) -> int:
    total = math.factorial(k)
    return total // (math.factorial(g) ** c * math.factorial(c))


def _merge_cells(
    graph: Graph, cells: np.ndarray, c: int, g: int, enum_cap: int
) -> np.ndarray:
    """Group the g*c cells into c clusters by inter-cell edge density.

    Exact enumeration over block partitions when small; otherwise seed the c
    clusters with mutually sparse cells and grow greedily.
    """
    k = c * g
    if c == 1:
        return np.zeros(k, dtype=np.int64)
    dens = _cell_densities(graph, cells, k)
    if _count_block_partitions(k, c, g) <= enum_cap:
        best_score = -math.inf
        best_blocks = None
        for blocks in _equal_block_partitions(k, c, g):
            score = sum(
                dens[a, b] for block in blocks for ai, a in enumerate(block) for b in block[ai + 1 :]
            )
            if score > best_score + _EPS:
                best_score = score
                best_blocks = blocks
        blocks = best_blocks
    else:
        blocks = _greedy_blocks(dens, c, g)
    cluster_of_cell = np.empty(k, dtype=np.int64)
    for x, block in enumerate(blocks):
        for cellidx in block:
            cluster_of_cell[cellidx] = x
    return cluster_of_cell


def _greedy_blocks(dens: np.ndarray, c: int, g: int) -> list[list[int]]:
    k = c * g
    seeds = [0]
    while len(seeds) < c:
        # next seed: cell with minimal max-density to existing seeds
        cand = [i for i in range(k) if i not in seeds]
        scores = [max(dens[i, s] for s in seeds) for i in cand]
        seeds.append(cand[int(np.argmin(scores))])
    blocks = [[s] for s in seeds]
    rest = [i for i in range(k) if i not in seeds]
    # attach each remaining cell to its densest unfilled block, densest first
    while rest:
        best = None
        for i in rest:
            for bi, block in enumerate(blocks):
                if len(block) >= g:
                    continue
                score = float(np.mean([dens[i, j] for j in block]))
                if best is None or score > best[0]:
                    best = (score, i, bi)
        _, i, bi = best
        blocks[bi].append(i)
        rest.remove(i)
    return [sorted(block) for block in blocks]


def _cells_to_partition(cells: np.ndarray, cluster_of_cell: np.ndarray, c: int, g: int) -> Partition:
    """Relabel merged cells: cluster = merge label, groups ordered by cell id."""
    group_of_cell = np.empty_like(cluster_of_cell)
    for x in range(c):
        members = np.flatnonzero(cluster_of_cell == x)
        for i, cellidx in enumerate(sorted(members)):
            group_of_cell[cellidx] = i
    return Partition(cluster_of_cell[cells], group_of_cell[cells], c, g)


def _log_edge_terms(params: ModelParams) -> tuple[np.ndarray, np.ndarray, bool]:
    """(-log mu, -log(1-mu)) per pair class, clipped for scoring robustness."""
    probs = np.clip(np.asarray(params.edge_probs()), _EPS, 1.0 - _EPS)
    return -np.log(probs), -np.log1p(-probs), bool(
        (probs <= _EPS).any() or (probs >= 1.0 - _EPS).any()
    )


def _neighbor_counts(graph: Graph, cell: np.ndarray, k: int) -> np.ndarray:
    nbr = np.zeros((graph.n, k))
    if graph.edge_count:
        a = graph.edges[:, 0]
        b = graph.edges[:, 1]
        np.add.at(nbr, (a, cell[b]), 1.0)
        np.add.at(nbr, (b, cell[a]), 1.0)
    return nbr


def _class_matrix(c: int, g: int) -> np.ndarray:
    """class[k1, k2] in {0: same cell, 1: same cluster, 2: across clusters}."""
    k = c * g
    cl = np.arange(k) // g
    out = np.full((k, k), 2, dtype=np.int64)
    same_cluster = cl[:, None] == cl[None, :]
    out[same_cluster] = 1
    np.fill_diagonal(out, 0)
    return out


def _graph_move_scores(
    graph: Graph, cell: np.ndarray, params: ModelParams
) -> np.ndarray:
    """score[u, k]: -log P[user u's incident pairs | u placed in cell k],
    holding every other user fixed. Lower is better."""
    c, g = params.c, params.g
    k = c * g
    neglog_mu, neglog_1mu, _ = _log_edge_terms(params)
    classes = _class_matrix(c, g)
    lmu = neglog_mu[classes]  # (k, k)
    l1mu = neglog_1mu[classes]
    nbr = _neighbor_counts(graph, cell, k)  # (n, k)
    sizes = np.bincount(cell, minlength=k).astype(float)
    others = sizes[None, :] - np.eye(k)[cell]  # cell sizes excluding u itself
    non_nbr = others - nbr
    return nbr @ lmu.T + non_nbr @ l1mu.T


def _rating_move_scores(
    y: Observation, vectors: np.ndarray, params: ModelParams
) -> np.ndarray:
    """score[u, k]: rating term of -log P for user u's row = vectors[k]."""
    flat = vectors.reshape(-1, y.m)
    mism = ((y.entries[None, :, :] != flat[:, None, :]) & y.mask[None, :, :]).sum(axis=2)
    mism = mism.T.astype(float)  # (n, k)
    if params.theta > 0.0:
        coeff = math.log((params.q - 1) * (1.0 - params.theta) / params.theta)
        return coeff * mism
    out = np.zeros_like(mism)
    out[mism > 0] = math.inf
    return out


def _profile_refine(
    y: Observation,
    graph: Graph,
    z: Partition,
    params: ModelParams,
    rounds: int,
) -> tuple[Partition, dict]:
    """Within-cluster group refinement against cell-wise majority profiles."""
    c, g, q = z.c, z.g, params.q
    size = z.group_size
    cell = z.cell.copy()
    coeff = (
        math.log((q - 1) * (1.0 - params.theta) / params.theta)
        if params.theta > 0.0
        else math.log((q - 1) * (1.0 - 1e-6) / 1e-6)
    )
    diag = {"rounds": 0, "converged": False, "tie_fraction": 0.0}
    for _ in range(rounds):
        profiles = _majority_profiles(y, cell, c * g, q)
        graph_scores = _graph_move_scores(graph, cell, params)
        defined = profiles != ERASED
        mism = (
            (y.entries[None, :, :] != profiles[:, None, :])
            & y.mask[None, :, :]
            & defined[:, None, :]
        ).sum(axis=2).T.astype(float)
        scores = coeff * mism + graph_scores
        new_cell = cell.copy()
        ties = 0
        for x in range(c):
            members = np.flatnonzero(cell // g == x)
            cols = x * g + np.arange(g)
            sub = scores[np.ix_(members, cols)]
            labels = _balanced_assign(sub, size)
            new_cell[members] = x * g + labels
            if g > 1:
                part = np.sort(sub, axis=1)
                ties += int((part[:, 1] - part[:, 0] == 0).sum())
        diag["rounds"] += 1
        diag["tie_fraction"] = ties / max(z.n, 1)
        if np.array_equal(new_cell, cell):
            diag["converged"] = True
            break
        cell = new_cell
    return Partition(cell // g, cell % g, c, g), diag


def _majority_profiles(y: Observation, cell: np.ndarray, k: int, q: int) -> np.ndarray:
    """Per-cell, per-column modal observed symbol; ERASED where nothing observed.
    Ties take the smallest symbol."""
    counts = np.zeros((k, q, y.m), dtype=np.int64)
    for s in range(q):
        hits = (y.entries == s).astype(np.int64)
        np.add.at(counts[:, s, :], cell, hits)
    top = counts.argmax(axis=1)  # first max = smallest symbol on ties
    observed = counts.sum(axis=1) > 0
    return np.where(observed, top, ERASED)


def _refine(
    y: Observation,
    graph: Graph,
    z: Partition,
    params: ModelParams,
    code: mds.MdsCode,
    cfg: EstimatorConfig,
) -> tuple[Partition, RatingMatrix, RatingVectorSet, float, dict]:
    """Joint local refinement: move users by their exact likelihood contribution,
    re-decode, keep going while the full likelihood does not increase."""
    c, g = params.c, params.g
    size = z.group_size
    matrix, vset = per_column_ml(code, y, z, params)
    score = neg_log_likelihood(y, graph, matrix, z, params)
    diag = {"iterations": 0, "converged": False, "reverted": False, "trace": [score]}
    cell = z.cell.copy()
    for _ in range(cfg.max_iters):
        scores = _rating_move_scores(y, vset.vectors, params) + _graph_move_scores(
            graph, cell, params
        )
        new_cell = _balanced_assign(scores, size)
        if np.array_equal(new_cell, cell):
            diag["converged"] = True
            break
        z_new = Partition(new_cell // g, new_cell % g, c, g)
        matrix_new, vset_new = per_column_ml(code, y, z_new, params)
        score_new = neg_log_likelihood(y, graph, matrix_new, z_new, params)
        diag["iterations"] += 1
        if score_new >= score:
            diag["reverted"] = score_new > score
            break
        cell, matrix, vset, score = new_cell, matrix_new, vset_new, score_new
        diag["trace"].append(score)
    z_out = Partition(cell // g, cell % g, c, g)
    return z_out, matrix, vset, score, diag


def practical_estimate(
    y: Observation,
    graph: Graph,
    params: ModelParams,
    config: Optional[EstimatorConfig] = None,
    seed=0,
) -> Estimate:
    """Staged estimator; always returns a well-formed Estimate.

    Stages: (1) spectral embedding + balanced k-means into g*c cells, merged
    into clusters by edge density; (2) within-cluster profile refinement using
    ratings and graph evidence; (3) per-column codeword decoding; (4) joint
    local refinement. Diagnostics record each stage's outcome.
    """
    cfg = config or EstimatorConfig()
    rng = np.random.default_rng(seed)
    c, g = params.c, params.g
    k = c * g
    code = mds.build_code(params.g, params.r, params.q)
    diagnostics: dict = {}

    if cfg.use_spectral and graph.edge_count > 0:
        emb = _spectral_embedding(graph, cfg.spectral_dim or k, rng)
        cells = _balanced_kmeans(emb, k, rng, cfg.kmeans_iters)
        diagnostics["stage1"] = {"spectral": True}
    else:
        # No usable graph signal: deterministic contiguous seed cells.
        cells = np.repeat(np.arange(k, dtype=np.int64), params.n // k)
        diagnostics["stage1"] = {"spectral": False}
    cluster_of_cell = _merge_cells(graph, cells, c, g, cfg.merge_enum_cap)
    z = _cells_to_partition(cells, cluster_of_cell, c, g)

    if cfg.use_profile_stage:
        z, profile_diag = _profile_refine(y, graph, z, params, cfg.profile_rounds)
        diagnostics["stage2"] = profile_diag

    if cfg.use_refinement:
        z, matrix, vset, score, refine_diag = _refine(y, graph, z, params, code, cfg)
        diagnostics["refinement"] = refine_diag
    else:
        matrix, vset = per_column_ml(code, y, z, params)
        score = neg_log_likelihood(y, graph, matrix, z, params)

    return Estimate(matrix, z, vset, score, diagnostics)
