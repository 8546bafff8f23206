"""Exact negative log-likelihood of a candidate completion, plus its counts.

Everything is computed in log space; the additive constant that does not
depend on the candidate (the observation-pattern factor) is dropped, so only
likelihood *differences* are meaningful. Degenerate parameters (theta = 0,
edge probabilities clamped to 0 or 1) produce +inf exactly when the observed
data is impossible under the candidate, via explicit sentinel handling rather
than floating-point overflow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .modelgen import Graph, ModelParams, Observation, Partition, RatingMatrix

__all__ = [
    "PairClassCounts",
    "pair_set_sizes",
    "edge_counts",
    "rating_mismatch",
    "neg_log_likelihood",
]


@dataclass(frozen=True)
class PairClassCounts:
    """Edge counts and pair-set sizes for the three pair classes."""

    e_alpha: int
    e_beta: int
    e_gamma: int
    p_alpha: int
    p_beta: int
    p_gamma: int

    @property
    def total_edges(self) -> int:
        return self.e_alpha + self.e_beta + self.e_gamma


def pair_set_sizes(n: int, c: int, g: int) -> tuple[int, int, int]:
    """Closed-form class sizes; they depend only on (n, c, g), not the labels."""
    if n % (c * g) != 0:
        raise ValueError(f"n = {n} not divisible by c*g = {c * g}")
    s = n // (c * g)
    p_alpha = g * c * (s * (s - 1) // 2)
    p_beta = c * (g * (g - 1) // 2) * s * s
    p_gamma = (c * (c - 1) // 2) * (n // c) * (n // c)
    return p_alpha, p_beta, p_gamma


def edge_counts(graph: Graph, z: Partition) -> PairClassCounts:
    """Classify every edge by its endpoints' relation under the partition."""
    if graph.n != z.n:
        raise ValueError(f"graph has {graph.n} vertices, partition has {z.n}")
    p_alpha, p_beta, p_gamma = pair_set_sizes(z.n, z.c, z.g)
    if graph.edge_count == 0:
        return PairClassCounts(0, 0, 0, p_alpha, p_beta, p_gamma)
    a = graph.edges[:, 0]
    b = graph.edges[:, 1]
    same_cluster = z.cluster[a] == z.cluster[b]
    same_cell = same_cluster & (z.group[a] == z.group[b])
    e_alpha = int(same_cell.sum())
    e_beta = int((same_cluster & ~same_cell).sum())
    e_gamma = int((~same_cluster).sum())
    return PairClassCounts(e_alpha, e_beta, e_gamma, p_alpha, p_beta, p_gamma)


def rating_mismatch(y: Observation, x: RatingMatrix) -> int:
    """Observed cells where the candidate disagrees; erased cells never mismatch."""
    if (y.n, y.m) != (x.n, x.m):
        raise ValueError(f"shape mismatch: {(y.n, y.m)} vs {(x.n, x.m)}")
    return int(((y.entries != x.entries) & y.mask).sum())


def _safe_term(coeff: float, count: float) -> float:
    """coeff * count with the 0 * inf -> 0 convention for impossible-event sentinels."""
    if count == 0:
        return 0.0
    if math.isinf(coeff):
        return math.inf if coeff > 0 else -math.inf
    return coeff * count


def _edge_class_term(mu: float, e: int, pairs: int) -> float:
    """-e log(mu) - (pairs - e) log(1 - mu), the class contribution to -log P[G|X]."""
    if mu <= 0.0:
        return math.inf if e > 0 else 0.0
    if mu >= 1.0:
        return math.inf if e < pairs else 0.0
    return -e * math.log(mu) - (pairs - e) * math.log(1.0 - mu)


def neg_log_likelihood(
    y: Observation,
    graph: Graph,
    x: RatingMatrix,
    z: Partition,
    params: ModelParams,
) -> float:
    """Exact -log P[(Y, G) | X] up to the candidate-independent constant.

    Equals log((q-1)(1-theta)/theta) * mismatches plus, per edge class,
    log((1-mu)/mu) * edges - log(1-mu) * pairs. theta = 0 with a mismatch
    yields +inf (the observation is impossible under the candidate), as do
    clamped edge probabilities with incompatible counts.
    """
    q, theta = params.q, params.theta
    mism = rating_mismatch(y, x)
    if theta == 0.0:
        total = math.inf if mism > 0 else 0.0
    else:
        total = _safe_term(math.log((q - 1) * (1.0 - theta) / theta), mism)
    if math.isinf(total):
        return total
    counts = edge_counts(graph, z)
    for mu, e, pairs in zip(
        params.edge_probs(),
        (counts.e_alpha, counts.e_beta, counts.e_gamma),
        (counts.p_alpha, counts.p_beta, counts.p_gamma),
    ):
        total += _edge_class_term(mu, e, pairs)
        if math.isinf(total):
            return total
    return total
