import numpy as np
import pytest

from hiermc import mds
from hiermc.adversarial import (
    INTER_CLUSTER,
    INTRA_CLUSTER,
    column_candidates,
    converse_check,
    edge_free_subsets,
    swap_candidates,
)
from hiermc.experiments import generate_instance, trial_seed_sequence
from hiermc.likelihood import neg_log_likelihood
from hiermc.modelgen import (
    GroundTruthConfig,
    Graph,
    ModelParams,
    Observation,
    Partition,
    build_ground_truth,
    compute_delta,
    sample_graph,
    sample_observation,
)


def gt_2322(n=24, m=16, **kw):
    base = dict(
        n=n, m=m, c=2, g=3, r=2, q=2, theta=0.1, p=0.5,
        alpha=8.0, beta=3.0, gamma=0.5,
    )
    base.update(kw)
    params = ModelParams(**base)
    cfg = GroundTruthConfig(mode="sections", section_fractions=[1 / 8] * 8)
    matrix, vectors, z = build_ground_truth(params, 0, cfg)
    return params, matrix, vectors, z


def test_column_candidate_distance_two_lexicographic():
    # parity code, true column (0,0,0): the distance-2 codewords are
    # {011, 101, 110}; lexicographically first is 011
    code = mds.build_code(3, 2, 2)
    words = mds.all_codewords(code)
    true_col = np.array([0, 0, 0])
    dists = np.count_nonzero(words != true_col[None, :], axis=1)
    at_min = words[dists == 2]
    assert at_min[0].tolist() == [0, 1, 1]


def test_column_candidates_invariants():
    params, matrix, vectors, z = gt_2322()
    code = vectors.code
    cands = column_candidates(matrix, vectors, code, max_count=4)
    assert cands
    expected_diff = (params.n // (params.g * params.c)) * (code.g - code.r + 1)
    for cand in cands:
        true_col = vectors.vectors[0][:, cand.column]
        assert int((cand.codeword != true_col).sum()) == code.g - code.r + 1
        diff = (cand.matrix().entries != matrix.entries).sum()
        assert diff == expected_diff
        assert cand.partition() == z


def test_column_candidates_r_equals_g():
    params = ModelParams(
        n=8, m=6, c=2, g=2, r=2, q=2, theta=0.1, p=0.5,
        alpha=4.0, beta=2.0, gamma=1.0,
    )
    matrix, vectors, z = build_ground_truth(params, 1)
    cands = column_candidates(matrix, vectors, vectors.code, max_count=2)
    for cand in cands:
        true_col = vectors.vectors[0][:, cand.column]
        assert int((cand.codeword != true_col).sum()) == 1  # min distance 1


def test_swap_candidates_intra_and_inter():
    params, matrix, vectors, z = gt_2322()
    delta = compute_delta(vectors)
    for kind, tau in ((INTRA_CLUSTER, delta.tau1), (INTER_CLUSTER, delta.tau2)):
        cands = list(swap_candidates(matrix, z, vectors, kind))
        assert len(cands) == (params.n // 6) ** 2
        cand = cands[0]
        swapped = cand.matrix()
        diff = (swapped.entries != matrix.entries).sum()
        assert diff == 2 * round(tau * params.m)
        z_new = cand.partition()  # still a valid equal-size partition
        assert z_new.group_size == z.group_size
        assert z_new.cluster[cand.a] == z.cluster[cand.b]


def test_swap_candidates_skip_identical_vectors():
    # one cluster duplicated: the minimum inter-cluster pair has distance 0
    params = ModelParams(
        n=8, m=8, c=2, g=1, r=1, q=2, theta=0.1, p=0.5,
        alpha=4.0, beta=2.0, gamma=1.0,
    )
    code = mds.build_code(1, 1, 2)
    basis = np.zeros((2, 1, 8), dtype=np.int64)
    basis[:, 0, :4] = 1
    from hiermc.modelgen import RatingMatrix, RatingVectorSet

    vectors = RatingVectorSet(
        np.stack([mds.encode_matrix(code, basis[x]) for x in range(2)]), basis, code
    )
    z = Partition.contiguous(8, 2, 1)
    matrix = RatingMatrix.from_structure(vectors, z, 2)
    assert list(swap_candidates(matrix, z, vectors, INTER_CLUSTER)) == []


def test_edge_free_subsets_empty_graph():
    graph = Graph(20, np.empty((0, 2), dtype=np.int64))
    cell_i = np.arange(0, 10)
    cell_j = np.arange(10, 20)
    result = edge_free_subsets(graph, cell_i, cell_j, target=3, seed=0)
    assert result is not None
    sub_i, sub_j = result
    assert len(sub_i) == len(sub_j) == 3
    assert set(sub_i) <= set(cell_i.tolist())
    assert set(sub_j) <= set(cell_j.tolist())
    # deterministic given the seed
    again = edge_free_subsets(graph, cell_i, cell_j, target=3, seed=0)
    assert np.array_equal(again[0], sub_i) and np.array_equal(again[1], sub_j)


def test_edge_free_subsets_complete_bipartite_fails():
    cell_i = np.arange(0, 6)
    cell_j = np.arange(6, 12)
    edges = np.array([(a, b) for a in cell_i for b in cell_j])
    graph = Graph(12, edges)
    assert edge_free_subsets(graph, cell_i, cell_j, target=1, seed=0) is None


def test_edge_free_subsets_output_is_edge_free():
    params = ModelParams(
        n=200, m=4, c=2, g=1, r=1, q=2, theta=0.1, p=0.5,
        alpha=0.5, beta=0.4, gamma=0.2,
    )
    z = Partition.contiguous(params.n, params.c, params.g)
    graph = sample_graph(params, z, 3)
    result = edge_free_subsets(graph, z.users_in(0, 0), z.users_in(1, 0), target=10, seed=4)
    assert result is not None
    union = np.concatenate(result)
    adj = graph.adjacency()
    assert not adj[np.ix_(union, union)].any()


def test_edge_free_subsets_monte_carlo_success_rate():
    # desk-scale check of the with-high-probability extraction claim
    params = ModelParams(
        n=600, m=4, c=2, g=3, r=2, q=2, theta=0.1, p=0.5,
        alpha=1.0, beta=0.7, gamma=0.2,
    )
    z = Partition.contiguous(params.n, params.c, params.g)
    target = max(1, int(params.n / np.log(params.n) ** 3))
    wins = 0
    for seed in range(100):
        graph = sample_graph(params, z, seed)
        if edge_free_subsets(graph, z.users_in(0, 0), z.users_in(0, 1), target, seed) is not None:
            wins += 1
    assert wins >= 95


def test_edge_free_subsets_precondition_checks():
    graph = Graph(10, np.empty((0, 2), dtype=np.int64))
    with pytest.raises(ValueError):
        edge_free_subsets(graph, np.arange(5), np.arange(4, 8), 2, 0)  # overlap
    with pytest.raises(ValueError):
        edge_free_subsets(graph, np.arange(3), np.arange(5, 10), 2, 0)  # too small


def test_converse_check_counts_ties():
    params, matrix, vectors, z = gt_2322()
    y = sample_observation(matrix, params, 1)
    graph = sample_graph(params, z, 2)

    class Identity:
        def matrix(self):
            return matrix

        def partition(self):
            return z

    assert converse_check(y, graph, matrix, [Identity()], params) == 1.0


def test_converse_check_zero_when_truth_dominates():
    params, matrix, vectors, z = gt_2322(p=1.0, theta=0.1, alpha=20.0, beta=5.0, gamma=0.5)
    y = Observation(matrix.entries.copy(), params.q)
    graph = sample_graph(params, z, 7)
    cands = list(swap_candidates(matrix, z, vectors, INTRA_CLUSTER))[:20]
    assert converse_check(y, graph, matrix, cands, params) == 0.0


def test_converse_check_more_failures_at_lower_p():
    params, matrix, vectors, z = gt_2322(n=120, m=40, alpha=40.0, beta=10.0, gamma=0.5)
    code = vectors.code
    lows, highs = [], []
    for seed in range(30):
        graph = sample_graph(params, z, seed)
        y_low = sample_observation(matrix, params.replace(p=0.05), seed + 1000)
        y_high = sample_observation(matrix, params.replace(p=0.6), seed + 2000)
        cands = column_candidates(matrix, vectors, code, max_count=16)
        lows.append(converse_check(y_low, graph, matrix, cands, params.replace(p=0.05)))
        highs.append(converse_check(y_high, graph, matrix, cands, params.replace(p=0.6)))
    assert np.mean(lows) > np.mean(highs)
