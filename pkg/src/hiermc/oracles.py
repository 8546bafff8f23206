"""Brute-force reference computations for cross-checking the fast paths.

Everything here is computed straight from the generative model definition
(per-entry observation probabilities, per-pair edge probabilities), never
through the closed-form likelihood, so these routines can serve as an
independent side of a dual-route check. Desk scale only.
"""

from __future__ import annotations

import math
from itertools import product

import numpy as np

from . import mds
from .estimators import _equal_label_vectors
from .modelgen import ERASED, Graph, ModelParams, Observation

__all__ = [
    "brute_neg_log_prob",
    "model_constant",
    "oracle_exact_ml",
]


def _nlog(p: float) -> float:
    if p <= 0.0:
        return math.inf
    return -math.log(p)


def brute_neg_log_prob(
    y: Observation,
    graph: Graph,
    entries: np.ndarray,
    cell: np.ndarray,
    params: ModelParams,
) -> float:
    """-log P[(Y, G) | X] computed entry by entry and pair by pair."""
    n, m, q = y.n, y.m, params.q
    theta, p = params.theta, params.p
    total = 0.0
    for u in range(n):
        for t in range(m):
            obs = y.entries[u, t]
            if obs == ERASED:
                total += _nlog(1.0 - p)
            elif obs == entries[u, t]:
                total += _nlog(p * (1.0 - theta))
            else:
                total += _nlog(p * theta / (q - 1))
            if math.isinf(total):
                return total
    alpha_e, beta_e, gamma_e = params.edge_probs()
    adj = graph.adjacency()
    g = params.g
    for u in range(n):
        for v in range(u + 1, n):
            if cell[u] == cell[v]:
                mu = alpha_e
            elif cell[u] // g == cell[v] // g:
                mu = beta_e
            else:
                mu = gamma_e
            total += _nlog(mu) if adj[u, v] else _nlog(1.0 - mu)
            if math.isinf(total):
                return total
    return total


def model_constant(y: Observation, params: ModelParams) -> float:
    """The candidate-independent part of -log P[(Y, G) | X]: the observation
    pattern and one -log(1-theta) per observed cell."""
    n_obs = int(y.mask.sum())
    n_erased = y.n * y.m - n_obs
    total = 0.0
    if n_obs:
        total += n_obs * _nlog(params.p)
        total += n_obs * _nlog(1.0 - params.theta)
    if n_erased:
        total += n_erased * _nlog(1.0 - params.p)
    return total


def oracle_exact_ml(
    y: Observation,
    graph: Graph,
    params: ModelParams,
    tol: float = 1e-9,
) -> tuple[np.ndarray, np.ndarray, float]:
    """Global minimizer of the brute-force score over every (partition,
    codeword-consistent matrix) pair, enumerated exhaustively.

    Candidates are visited in lexicographic order (cell-label vector, then
    codeword index per (cluster, column)); among scores within tol of the
    minimum the first visited wins. Returns (entries, cell labels, score with
    the candidate-independent constant removed).
    """
    code = mds.build_code(params.g, params.r, params.q)
    words = mds.all_codewords(code)
    n_words = words.shape[0]
    c, g, m = params.c, params.g, params.m
    const = model_constant(y, params)
    best: tuple[float, np.ndarray, np.ndarray] | None = None
    for labels in _equal_label_vectors(params.n, c * g):
        cell = np.asarray(labels, dtype=np.int64)
        for combo in product(range(n_words), repeat=c * m):
            vectors = np.empty((c, g, m), dtype=np.int64)
            for x in range(c):
                for t in range(m):
                    vectors[x][:, t] = words[combo[x * m + t]]
            entries = vectors.reshape(c * g, m)[cell]
            score = brute_neg_log_prob(y, graph, entries, cell, params)
            if best is None or score < best[0] - tol:
                best = (score, entries, cell.copy())
    assert best is not None
    score, entries, cell = best
    return entries, cell, score - const
