"""Ground-truth instances, HSBM similarity graphs, noisy partial observations.

A ground truth is a triple (rating matrix, rating vectors, partition): users
split into c clusters of g equal groups each, every group carrying one rating
vector over GF(q), and the g vectors of a cluster forming columns of a (g, r)
MDS code applied to an r x m basis. The observation channel erases each entry
independently with probability 1-p and flips an observed entry to each wrong
symbol with probability theta/(q-1).
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import mds
from .ffield import gf_rank, is_prime

logger = logging.getLogger(__name__)

ERASED = -1
SECTION_CAP = 10**6
_CLAMP_WARNED: set = set()  # one warning per distinct raw probability triple

__all__ = [
    "ERASED",
    "ModelParams",
    "Partition",
    "RatingVectorSet",
    "RatingMatrix",
    "Graph",
    "Observation",
    "DeltaPair",
    "GroundTruthConfig",
    "Instance",
    "build_ground_truth",
    "sample_graph",
    "sample_observation",
    "compute_delta",
    "is_model_member",
    "instance_to_json",
    "instance_from_json",
    "matrix_to_csv",
    "matrix_from_csv",
]


@dataclass(frozen=True)
class ModelParams:
    """All scalar problem parameters."""

    n: int
    m: int
    c: int
    g: int
    r: int
    q: int
    theta: float
    p: float
    alpha: float
    beta: float
    gamma: float

    def __post_init__(self):
        if min(self.n, self.m, self.c, self.g) < 1:
            raise ValueError("n, m, c, g must be positive")
        if self.n % (self.c * self.g) != 0:
            raise ValueError(f"n = {self.n} not divisible by c*g = {self.c * self.g}")
        if not 1 <= self.r <= self.g:
            raise ValueError(f"need 1 <= r <= g, got r = {self.r}")
        if not is_prime(self.q):
            raise ValueError(f"q must be prime, got {self.q}")
        if not 0 <= self.theta < (self.q - 1) / self.q:
            raise ValueError(f"theta must be in [0, (q-1)/q), got {self.theta}")
        if not 0 <= self.p <= 1:
            raise ValueError(f"p must be in [0, 1], got {self.p}")
        if not self.alpha >= self.beta >= self.gamma > 0:
            raise ValueError("need alpha >= beta >= gamma > 0")
        scale = math.log(self.n) / self.n if self.n > 1 else 0.0
        raw = (self.alpha * scale, self.beta * scale, self.gamma * scale)
        clamped = tuple(min(max(v, 0.0), 1.0) for v in raw)
        if clamped != raw and raw not in _CLAMP_WARNED:
            _CLAMP_WARNED.add(raw)
            logger.warning(
                "edge probabilities clamped to [0, 1]: raw=(%.4g, %.4g, %.4g)", *raw
            )
        object.__setattr__(self, "_edge_probs", clamped)
        object.__setattr__(self, "_edge_probs_clamped", clamped != raw)

    @property
    def group_size(self) -> int:
        return self.n // (self.c * self.g)

    def edge_probs(self) -> tuple[float, float, float]:
        """(alpha_e, beta_e, gamma_e) = const * log(n)/n, clamped into [0, 1].

        Clamping happens at desk-scale n with paper-scale constants; it is
        logged once at construction.
        """
        return self._edge_probs

    @property
    def edge_probs_clamped(self) -> bool:
        return self._edge_probs_clamped

    def replace(self, **kwargs) -> "ModelParams":
        vals = {k: getattr(self, k) for k in self.__dataclass_fields__}
        vals.update(kwargs)
        return ModelParams(**vals)


class Partition:
    """Per-user (cluster, group) labels with exact equal cell sizes."""

    __slots__ = ("cluster", "group", "c", "g")

    def __init__(self, cluster, group, c: int, g: int):
        cluster = np.asarray(cluster, dtype=np.int64)
        group = np.asarray(group, dtype=np.int64)
        if cluster.shape != group.shape or cluster.ndim != 1:
            raise ValueError("cluster and group must be equal-length 1-d arrays")
        n = cluster.size
        if n % (c * g) != 0:
            raise ValueError("n not divisible by c*g")
        size = n // (c * g)
        counts = np.bincount(cluster * g + group, minlength=c * g)
        if counts.size != c * g or (counts != size).any():
            raise ValueError("every (cluster, group) cell must have exactly n/(c*g) users")
        self.cluster = cluster
        self.group = group
        self.c = c
        self.g = g

    @property
    def n(self) -> int:
        return self.cluster.size

    @property
    def group_size(self) -> int:
        return self.n // (self.c * self.g)

    @property
    def cell(self) -> np.ndarray:
        """Flat cell label cluster*g + group per user."""
        return self.cluster * self.g + self.group

    def users_in(self, x: int, i: int) -> np.ndarray:
        return np.flatnonzero((self.cluster == x) & (self.group == i))

    @staticmethod
    def contiguous(n: int, c: int, g: int) -> "Partition":
        """Block partition: users k..k+n/(cg)-1 form group i of cluster x."""
        size = n // (c * g)
        cell = np.repeat(np.arange(c * g, dtype=np.int64), size)
        return Partition(cell // g, cell % g, c, g)

    def relabeled(self, perm: np.ndarray) -> "Partition":
        """Partition for users re-indexed as new_index = perm[old_index]."""
        inv = np.empty_like(perm)
        inv[perm] = np.arange(perm.size)
        return Partition(self.cluster[inv], self.group[inv], self.c, self.g)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Partition):
            return NotImplemented
        return (
            self.c == other.c
            and self.g == other.g
            and np.array_equal(self.cluster, other.cluster)
            and np.array_equal(self.group, other.group)
        )


class RatingVectorSet:
    """The c x g rating vectors, their per-cluster bases, and the coupling code."""

    __slots__ = ("vectors", "basis", "code")

    def __init__(self, vectors: np.ndarray, basis: np.ndarray, code: mds.MdsCode):
        vectors = np.asarray(vectors, dtype=np.int64)
        basis = np.asarray(basis, dtype=np.int64)
        c, g, m = vectors.shape
        if basis.shape != (c, code.r, m):
            raise ValueError("basis must be c x r x m")
        if g != code.g:
            raise ValueError("vectors second axis must equal code length g")
        for x in range(c):
            if not np.array_equal(vectors[x], mds.encode_matrix(code, basis[x])):
                raise ValueError(f"cluster {x} vectors do not equal generator @ basis")
        self.vectors = vectors
        self.basis = basis
        self.code = code

    @property
    def c(self) -> int:
        return self.vectors.shape[0]

    @property
    def g(self) -> int:
        return self.vectors.shape[1]

    @property
    def m(self) -> int:
        return self.vectors.shape[2]

    def flat(self) -> np.ndarray:
        """(c*g) x m stack in (cluster, group) order."""
        return self.vectors.reshape(self.c * self.g, self.m)


class RatingMatrix:
    """Dense n x m rating matrix over GF(q), optionally with its provenance."""

    __slots__ = ("entries", "q", "vectors", "partition")

    def __init__(
        self,
        entries: np.ndarray,
        q: int,
        vectors: Optional[RatingVectorSet] = None,
        partition: Optional[Partition] = None,
    ):
        entries = np.asarray(entries, dtype=np.int64)
        if entries.ndim != 2:
            raise ValueError("entries must be 2-d")
        if ((entries < 0) | (entries >= q)).any():
            raise ValueError("entries outside GF(q)")
        self.entries = entries
        self.q = q
        self.vectors = vectors
        self.partition = partition

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    @property
    def m(self) -> int:
        return self.entries.shape[1]

    @staticmethod
    def from_structure(vectors: RatingVectorSet, partition: Partition, q: int) -> "RatingMatrix":
        flat = vectors.flat()
        entries = flat[partition.cell]
        return RatingMatrix(entries, q, vectors=vectors, partition=partition)

    def __eq__(self, other) -> bool:
        if not isinstance(other, RatingMatrix):
            return NotImplemented
        return self.q == other.q and np.array_equal(self.entries, other.entries)


class Graph:
    """Simple undirected graph on [n]; edges stored as canonically sorted pairs."""

    __slots__ = ("n", "edges", "_adj")

    def __init__(self, n: int, edges: np.ndarray):
        edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        if edges.size:
            if (edges < 0).any() or (edges >= n).any():
                raise ValueError("vertex out of range")
            lo = edges.min(axis=1)
            hi = edges.max(axis=1)
            if (lo == hi).any():
                raise ValueError("self-loops not allowed")
            edges = np.stack([lo, hi], axis=1)
            order = np.lexsort((edges[:, 1], edges[:, 0]))
            edges = edges[order]
            if len(edges) > 1 and (np.diff(edges, axis=0) == 0).all(axis=1).any():
                raise ValueError("duplicate edges")
        self.n = n
        self.edges = edges
        self._adj = None

    @property
    def edge_count(self) -> int:
        return self.edges.shape[0]

    def adjacency(self) -> np.ndarray:
        """Dense symmetric boolean adjacency matrix (cached)."""
        if self._adj is None:
            adj = np.zeros((self.n, self.n), dtype=bool)
            if self.edges.size:
                adj[self.edges[:, 0], self.edges[:, 1]] = True
                adj[self.edges[:, 1], self.edges[:, 0]] = True
            self._adj = adj
        return self._adj

    def permuted(self, perm: np.ndarray) -> "Graph":
        """Graph with vertices re-indexed as new_index = perm[old_index]."""
        if self.edges.size == 0:
            return Graph(self.n, self.edges.copy())
        return Graph(self.n, perm[self.edges])


class Observation:
    """Noisy partial observation: GF(q) symbols with ERASED (-1) markers."""

    __slots__ = ("entries", "q")

    def __init__(self, entries: np.ndarray, q: int):
        entries = np.asarray(entries, dtype=np.int64)
        if entries.ndim != 2:
            raise ValueError("entries must be 2-d")
        if ((entries < ERASED) | (entries >= q)).any():
            raise ValueError("entries must be in GF(q) or ERASED")
        self.entries = entries
        self.q = q

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    @property
    def m(self) -> int:
        return self.entries.shape[1]

    @property
    def mask(self) -> np.ndarray:
        """Boolean mask of observed cells."""
        return self.entries != ERASED

    def permuted(self, perm: np.ndarray) -> "Observation":
        """Observation with rows re-indexed as new_index = perm[old_index]."""
        out = np.empty_like(self.entries)
        out[perm] = self.entries
        return Observation(out, self.q)


@dataclass(frozen=True)
class DeltaPair:
    """Minimum normalized Hamming distances within / across clusters.

    None marks an undefined side (g < 2 for tau1, c < 2 for tau2).
    """

    tau1: Optional[float]
    tau2: Optional[float]

    def __post_init__(self):
        for tau in (self.tau1, self.tau2):
            if tau is not None and not 0 <= tau <= 1:
                raise ValueError("tau values must lie in [0, 1]")


@dataclass
class GroundTruthConfig:
    """How the per-cluster bases are synthesized.

    mode:
      random            uniform full-rank r x m draws
      sections          canonical normalization (first basis row of cluster 1
                        all-ones) with explicit per-pattern column fractions,
                        laid out contiguously in lexicographic pattern order
      balanced_sections near-uniform integer section sizes (remainder goes to
                        the lexicographically first patterns), columns shuffled
                        by the seed
      tau_target        rejection-sample random bases until compute_delta
                        matches tau_target exactly
    """

    mode: str = "random"
    section_fractions: Optional[list[float]] = None
    shuffle_columns: bool = True
    tau_target: Optional[tuple[float, float]] = None
    max_retries: int = 1000
    basis: Optional[np.ndarray] = None  # explicit c x r x m basis, overrides mode

    @staticmethod
    def from_dict(d: dict) -> "GroundTruthConfig":
        cfg = GroundTruthConfig()
        for key, val in d.items():
            if not hasattr(cfg, key):
                raise ValueError(f"unknown ground-truth config key: {key}")
            if key == "tau_target" and val is not None:
                val = tuple(val)
            setattr(cfg, key, val)
        return cfg


@dataclass
class Instance:
    """A generated problem instance (ground truth plus optional realizations)."""

    params: ModelParams
    seed: Optional[int]
    matrix: RatingMatrix
    vectors: RatingVectorSet
    partition: Partition
    graph: Optional[Graph] = None
    observation: Optional[Observation] = None
    delta: Optional[DeltaPair] = None


def _random_full_rank_basis(rng: np.random.Generator, r: int, m: int, q: int) -> np.ndarray:
    while True:
        basis = rng.integers(0, q, size=(r, m), dtype=np.int64)
        if gf_rank(basis, q) == r:
            return basis


def _pattern_table(count: int, digits: int, q: int) -> np.ndarray:
    """All q^digits digit tuples in lexicographic order (count = q**digits)."""
    if digits == 0:
        return np.zeros((1, 0), dtype=np.int64)
    grids = np.meshgrid(*[np.arange(q, dtype=np.int64)] * digits, indexing="ij")
    return np.stack([grid.ravel() for grid in grids], axis=1)


def _section_basis(
    params: ModelParams,
    counts: np.ndarray,
    rng: Optional[np.random.Generator],
    shuffle: bool,
) -> np.ndarray:
    """Stacked basis from section counts: column pattern (1, l_1, ..., l_{cr-1})."""
    c, r, m, q = params.c, params.r, params.m, params.q
    digits = c * r - 1
    patterns = _pattern_table(q**digits, digits, q)
    if counts.sum() != m:
        raise ValueError("section counts must sum to m")
    stacked = np.empty((c * r, m), dtype=np.int64)
    stacked[0] = 1
    if digits:
        stacked[1:] = np.repeat(patterns, counts, axis=0).T
    if shuffle:
        if rng is None:
            raise ValueError("shuffle requires an RNG")
        stacked = stacked[:, rng.permutation(m)]
    basis = stacked.reshape(c, r, m)
    for x in range(c):
        if gf_rank(basis[x], q) != r:
            raise ValueError(
                f"section layout gives a rank-deficient basis for cluster {x}"
            )
    return basis


def _balanced_counts(m: int, npat: int) -> np.ndarray:
    counts = np.full(npat, m // npat, dtype=np.int64)
    counts[: m % npat] += 1
    return counts


def build_ground_truth(
    params: ModelParams,
    seed,
    config: Optional[GroundTruthConfig] = None,
) -> tuple[RatingMatrix, RatingVectorSet, Partition]:
    """Construct a ground-truth instance with a contiguous-block partition.

    The partition is the canonical block layout; estimators must not rely on
    that (checked by permutation tests). The basis draw is controlled by
    GroundTruthConfig; see its docstring.
    """
    config = config or GroundTruthConfig()
    rng = np.random.default_rng(seed)
    code = mds.build_code(params.g, params.r, params.q)
    c, r, m, q = params.c, params.r, params.m, params.q

    if config.basis is not None:
        basis = np.asarray(config.basis, dtype=np.int64) % q
        if basis.shape != (c, r, m):
            raise ValueError(f"explicit basis must have shape {(c, r, m)}")
    elif config.mode == "random":
        basis = np.stack([_random_full_rank_basis(rng, r, m, q) for _ in range(c)])
    elif config.mode in ("sections", "balanced_sections"):
        npat = q ** (c * r - 1)
        if npat > SECTION_CAP:
            raise ValueError(f"q^(cr-1) = {npat} exceeds section cap {SECTION_CAP}")
        if config.mode == "sections":
            if config.section_fractions is None:
                raise ValueError("sections mode requires section_fractions")
            fracs = np.asarray(config.section_fractions, dtype=float)
            if fracs.size != npat or fracs.min() < 0:
                raise ValueError(f"need {npat} non-negative fractions")
            counts = np.rint(fracs * m).astype(np.int64)
            if counts.sum() != m or not np.allclose(fracs * m, counts):
                raise ValueError("section fractions must give integer column counts")
            shuffle = False  # explicit sections keep the canonical contiguous layout
        else:
            counts = _balanced_counts(m, npat)
            shuffle = config.shuffle_columns
        basis = _section_basis(params, counts, rng, shuffle)
    elif config.mode == "tau_target":
        if config.tau_target is None:
            raise ValueError("tau_target mode requires tau_target")
        basis = None
        for _ in range(config.max_retries):
            cand = np.stack([_random_full_rank_basis(rng, r, m, q) for _ in range(c)])
            vecs = np.stack([mds.encode_matrix(code, cand[x]) for x in range(c)])
            delta = compute_delta(RatingVectorSet(vecs, cand, code))
            if _delta_matches(delta, config.tau_target, m):
                basis = cand
                break
        if basis is None:
            raise ValueError(
                f"could not hit tau target {config.tau_target} in "
                f"{config.max_retries} draws; target may be infeasible at m={m}"
            )
    else:
        raise ValueError(f"unknown ground-truth mode: {config.mode}")

    vectors_arr = np.stack([mds.encode_matrix(code, basis[x]) for x in range(c)])
    vectors = RatingVectorSet(vectors_arr, basis, code)
    partition = Partition.contiguous(params.n, params.c, params.g)
    matrix = RatingMatrix.from_structure(vectors, partition, q)
    return matrix, vectors, partition


def _delta_matches(delta: DeltaPair, target: tuple[float, float], m: int) -> bool:
    for got, want in ((delta.tau1, target[0]), (delta.tau2, target[1])):
        if want is None:
            continue
        if got is None or round(got * m) != round(want * m):
            return False
    return True


def sample_graph(params: ModelParams, z: Partition, seed) -> Graph:
    """HSBM sample: each pair is an independent Bernoulli with the class rate."""
    rng = np.random.default_rng(seed)
    n = params.n
    alpha_e, beta_e, gamma_e = params.edge_probs()
    same_cluster = z.cluster[:, None] == z.cluster[None, :]
    same_cell = same_cluster & (z.group[:, None] == z.group[None, :])
    prob = np.where(same_cell, alpha_e, np.where(same_cluster, beta_e, gamma_e))
    draw = rng.random((n, n))
    upper = np.triu(np.ones((n, n), dtype=bool), k=1)
    a, b = np.nonzero(upper & (draw < prob))
    return Graph(n, np.stack([a, b], axis=1))


def sample_observation(m0: RatingMatrix, params: ModelParams, seed) -> Observation:
    """Erase entries w.p. 1-p; flip an observed entry to each wrong symbol w.p. theta/(q-1)."""
    rng = np.random.default_rng(seed)
    n, m, q = m0.n, m0.m, params.q
    observed = rng.random((n, m)) < params.p
    flip = rng.random((n, m)) < params.theta
    offset = rng.integers(1, q, size=(n, m), dtype=np.int64)
    noisy = np.where(flip, (m0.entries + offset) % q, m0.entries)
    return Observation(np.where(observed, noisy, ERASED), q)


def is_model_member(matrix: RatingMatrix, z: Partition, code: mds.MdsCode) -> bool:
    """Whether a dense matrix is realizable as (vectors, partition) under the code:
    users of a cell share one row, and each cluster's stacked group rows are
    codewords column by column."""
    if matrix.n != z.n:
        return False
    words = {tuple(w) for w in mds.all_codewords(code)}
    for x in range(z.c):
        rows = []
        for i in range(z.g):
            users = z.users_in(x, i)
            first = matrix.entries[users[0]]
            if not (matrix.entries[users] == first).all():
                return False
            rows.append(first)
        stack = np.stack(rows)
        for t in range(matrix.m):
            if tuple(stack[:, t]) not in words:
                return False
    return True


def compute_delta(v: RatingVectorSet) -> DeltaPair:
    """Minimum normalized Hamming distances over group-vector pairs."""
    flat = v.flat()
    cg, m = flat.shape
    dist = (flat[:, None, :] != flat[None, :, :]).sum(axis=2)
    cluster_id = np.repeat(np.arange(v.c), v.g)
    same_cluster = cluster_id[:, None] == cluster_id[None, :]
    off_diag = ~np.eye(cg, dtype=bool)
    tau1 = None
    tau2 = None
    if v.g >= 2:
        tau1 = float(dist[same_cluster & off_diag].min()) / m
    if v.c >= 2:
        tau2 = float(dist[~same_cluster].min()) / m
    return DeltaPair(tau1, tau2)


# -- serialization -----------------------------------------------------------


def instance_to_json(
    inst: Instance,
    include_matrix: bool = True,
    include_graph: bool = True,
    include_observation: bool = True,
) -> str:
    doc = {
        "params": {k: getattr(inst.params, k) for k in inst.params.__dataclass_fields__},
        "seed": inst.seed,
        "partition": {
            "cluster": inst.partition.cluster.tolist(),
            "group": inst.partition.group.tolist(),
        },
        "basis": inst.vectors.basis.tolist(),
    }
    if include_matrix:
        doc["matrix"] = inst.matrix.entries.tolist()
    if include_graph and inst.graph is not None:
        doc["edges"] = inst.graph.edges.tolist()
        doc["graph_n"] = inst.graph.n
    if include_observation and inst.observation is not None:
        doc["observation"] = inst.observation.entries.tolist()
    if inst.delta is not None:
        doc["delta"] = {"tau1": inst.delta.tau1, "tau2": inst.delta.tau2}
    return json.dumps(doc)


def instance_from_json(text: str) -> Instance:
    doc = json.loads(text)
    params = ModelParams(**doc["params"])
    code = mds.build_code(params.g, params.r, params.q)
    basis = np.asarray(doc["basis"], dtype=np.int64)
    vectors_arr = np.stack([mds.encode_matrix(code, basis[x]) for x in range(params.c)])
    vectors = RatingVectorSet(vectors_arr, basis, code)
    partition = Partition(
        doc["partition"]["cluster"], doc["partition"]["group"], params.c, params.g
    )
    if "matrix" in doc:
        matrix = RatingMatrix(
            np.asarray(doc["matrix"], dtype=np.int64),
            params.q,
            vectors=vectors,
            partition=partition,
        )
    else:
        matrix = RatingMatrix.from_structure(vectors, partition, params.q)
    graph = None
    if "edges" in doc:
        graph = Graph(doc.get("graph_n", params.n), np.asarray(doc["edges"], dtype=np.int64))
    observation = None
    if "observation" in doc:
        observation = Observation(np.asarray(doc["observation"], dtype=np.int64), params.q)
    delta = None
    if "delta" in doc:
        delta = DeltaPair(doc["delta"]["tau1"], doc["delta"]["tau2"])
    return Instance(
        params=params,
        seed=doc.get("seed"),
        matrix=matrix,
        vectors=vectors,
        partition=partition,
        graph=graph,
        observation=observation,
        delta=delta,
    )


def matrix_to_csv(entries: np.ndarray, path, erased_marker: str = "*") -> None:
    """Dense CSV export; ERASED cells are written as the marker."""
    entries = np.asarray(entries)
    with open(path, "w", encoding="utf-8") as fh:
        for row in entries:
            fh.write(
                ",".join(erased_marker if v == ERASED else str(int(v)) for v in row)
            )
            fh.write("\n")


def matrix_from_csv(path, erased_marker: str = "*") -> np.ndarray:
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            rows.append(
                [ERASED if tok == erased_marker else int(tok) for tok in line.split(",")]
            )
    return np.asarray(rows, dtype=np.int64)
