import math
from itertools import product

import numpy as np
import pytest

from hiermc import mds
from hiermc.estimators import (
    EstimatorConfig,
    SearchBudgetError,
    exact_ml,
    is_success,
    per_column_ml,
    practical_estimate,
)
from hiermc.experiments import generate_instance, trial_seed_sequence
from hiermc.likelihood import neg_log_likelihood
from hiermc.modelgen import (
    ERASED,
    GroundTruthConfig,
    Graph,
    ModelParams,
    Observation,
    Partition,
    build_ground_truth,
    sample_graph,
    sample_observation,
)
from hiermc.oracles import brute_neg_log_prob, model_constant, oracle_exact_ml


def tiny_params(**kw):
    base = dict(
        n=6, m=3, c=2, g=1, r=1, q=2, theta=0.2, p=0.7,
        alpha=2.5, beta=1.5, gamma=0.8,
    )
    base.update(kw)
    return ModelParams(**base)


def medium_params(**kw):
    base = dict(
        n=48, m=24, c=2, g=2, r=2, q=2, theta=0.1, p=0.8,
        alpha=8.0, beta=3.0, gamma=0.5,
    )
    base.update(kw)
    return ModelParams(**base)


# -- per-column decoding -------------------------------------------------------


def test_per_column_ml_recovers_noiseless_truth():
    params = medium_params(p=1.0, theta=0.0)
    matrix, vectors, z = build_ground_truth(params, 0)
    y = Observation(matrix.entries.copy(), params.q)
    est_matrix, est_vectors = per_column_ml(vectors.code, y, z, params)
    assert np.array_equal(est_matrix.entries, matrix.entries)


def test_per_column_ml_empty_column_takes_zero_codeword():
    params = medium_params()
    matrix, vectors, z = build_ground_truth(params, 0)
    entries = matrix.entries.copy()
    entries[:, 0] = ERASED
    y = Observation(entries, params.q)
    _, est_vectors = per_column_ml(vectors.code, y, z, params)
    assert (est_vectors.vectors[:, :, 0] == 0).all()


def test_per_column_ml_matches_exhaustive_column_search():
    params = ModelParams(
        n=12, m=4, c=2, g=3, r=2, q=2, theta=0.15, p=0.6,
        alpha=4.0, beta=2.0, gamma=1.0,
    )
    code = mds.build_code(params.g, params.r, params.q)
    words = mds.all_codewords(code)
    for seed in range(10):
        matrix, vectors, z = build_ground_truth(params, seed)
        y = sample_observation(matrix, params, seed + 50)
        _, est_vectors = per_column_ml(code, y, z, params)
        for x in range(params.c):
            users = [z.users_in(x, i) for i in range(params.g)]
            for t in range(params.m):
                # integer match counts: exact ties, lex-first codeword wins
                matches = []
                for w in words:
                    total = 0
                    for i in range(params.g):
                        col = y.entries[users[i], t]
                        obs = col != ERASED
                        total += int((col[obs] == w[i]).sum())
                    matches.append(total)
                best = matches.index(max(matches))
                assert np.array_equal(est_vectors.vectors[x][:, t], words[best])


# -- exact maximum likelihood --------------------------------------------------


def test_exact_ml_recovers_truth_noiseless():
    params = tiny_params(p=1.0, theta=0.1, alpha=8.0, beta=2.0, gamma=0.5)
    # theta > 0 keeps the likelihood finite; full observation pins the matrix
    matrix, vectors, z = build_ground_truth(params, 1)
    graph = sample_graph(params, z, 2)
    y = Observation(matrix.entries.copy(), params.q)
    est = exact_ml(y, graph, params)
    assert np.array_equal(est.matrix.entries, matrix.entries)


def test_exact_ml_total_tie_returns_lexicographic_minimum():
    params = tiny_params(alpha=2.0, beta=2.0, gamma=2.0, theta=0.25)
    y = Observation(np.full((params.n, params.m), ERASED), params.q)
    graph = Graph(params.n, np.empty((0, 2), dtype=np.int64))
    est = exact_ml(y, graph, params)
    assert (est.matrix.entries == 0).all()
    assert est.partition.cell.tolist() == [0, 0, 0, 1, 1, 1]


def test_exact_ml_budget_refusal():
    params = ModelParams(
        n=16, m=2, c=2, g=2, r=1, q=2, theta=0.1, p=0.5,
        alpha=2.0, beta=1.0, gamma=0.5,
    )
    y = Observation(np.full((16, 2), ERASED), params.q)
    graph = Graph(16, np.empty((0, 2), dtype=np.int64))
    with pytest.raises(SearchBudgetError) as err:
        exact_ml(y, graph, params, budget=1000)
    assert err.value.size == math.factorial(16) // math.factorial(4) ** 4


@pytest.mark.parametrize(
    "params_kw",
    [
        dict(),  # (2, 1) clusters over GF(2)
        dict(c=1, g=3, r=2, q=2, n=6, m=2),
        dict(c=2, g=1, r=1, q=3, n=4, m=2, theta=0.25),
    ],
)
def test_exact_ml_matches_oracle(params_kw):
    params = tiny_params(**params_kw)
    for seed in range(7):
        inst = generate_instance(params, GroundTruthConfig(), trial_seed_sequence(99, 0, seed))
        est = exact_ml(inst.observation, inst.graph, params)
        entries, cell, score = oracle_exact_ml(inst.observation, inst.graph, params)
        assert np.array_equal(est.matrix.entries, entries)
        assert est.partition.cell.tolist() == cell.tolist()
        assert est.score == pytest.approx(score, abs=1e-9)


def test_exact_ml_never_scores_worse_than_truth():
    params = tiny_params(theta=0.3, p=0.4)
    for seed in range(10):
        inst = generate_instance(params, GroundTruthConfig(), trial_seed_sequence(5, 1, seed))
        est = exact_ml(inst.observation, inst.graph, params)
        truth_score = neg_log_likelihood(
            inst.observation, inst.graph, inst.matrix, inst.partition, params
        )
        assert est.score <= truth_score + 1e-9


# -- practical estimator -------------------------------------------------------


def test_practical_recovers_noiseless_instance():
    params = medium_params(p=1.0, theta=0.0)
    matrix, vectors, z = build_ground_truth(params, 3)
    graph = sample_graph(params, z, 4)
    y = Observation(matrix.entries.copy(), params.q)
    est = practical_estimate(y, graph, params, seed=0)
    assert is_success(est, matrix)


def test_practical_degenerate_inputs_stay_well_formed():
    params = medium_params(p=0.0, alpha=1e-9, beta=1e-9, gamma=1e-9, theta=0.3)
    matrix, vectors, z = build_ground_truth(params, 3)
    graph = Graph(params.n, np.empty((0, 2), dtype=np.int64))
    y = Observation(np.full((params.n, params.m), ERASED), params.q)
    est = practical_estimate(y, graph, params, seed=0)
    # a full partition with exact cell sizes and a codeword-consistent matrix
    assert est.partition.cell.size == params.n
    assert est.matrix.entries.shape == (params.n, params.m)
    assert est.diagnostics["stage1"]["spectral"] is False
    assert math.isfinite(est.score)


def test_practical_refinement_trace_is_monotone():
    params = medium_params(p=0.35, theta=0.15)
    for seed in range(8):
        inst = generate_instance(params, GroundTruthConfig(), trial_seed_sequence(17, 0, seed))
        est = practical_estimate(inst.observation, inst.graph, params, seed=seed)
        trace = est.diagnostics["refinement"]["trace"]
        assert all(b <= a + 1e-9 for a, b in zip(trace, trace[1:]))
        # reported score matches an independent evaluation of the returned candidate
        check = neg_log_likelihood(
            inst.observation, inst.graph, est.matrix, est.partition, params
        )
        assert est.score == pytest.approx(check, rel=1e-12)


def test_practical_permutation_equivariance():
    params = medium_params(p=0.9, theta=0.05)
    rng = np.random.default_rng(0)
    for seed in range(6):
        inst = generate_instance(params, GroundTruthConfig(), trial_seed_sequence(23, 0, seed))
        est = practical_estimate(inst.observation, inst.graph, params, seed=seed)
        perm = rng.permutation(params.n)
        y_perm = inst.observation.permuted(perm)
        graph_perm = inst.graph.permuted(perm)
        est_perm = practical_estimate(y_perm, graph_perm, params, seed=seed)
        m0_perm_entries = np.empty_like(inst.matrix.entries)
        m0_perm_entries[perm] = inst.matrix.entries
        ok_orig = np.array_equal(est.matrix.entries, inst.matrix.entries)
        ok_perm = np.array_equal(est_perm.matrix.entries, m0_perm_entries)
        assert ok_orig == ok_perm


def test_is_success_cases():
    params = medium_params()
    matrix, vectors, z = build_ground_truth(params, 0)
    y = Observation(matrix.entries.copy(), params.q)
    graph = sample_graph(params.replace(p=1.0, theta=0.0), z, 1)
    est = practical_estimate(y, graph, params.replace(p=1.0, theta=0.0), seed=0)
    assert is_success(est, matrix)
    # a single differing entry breaks success
    altered = matrix.entries.copy()
    altered[0, 0] = (altered[0, 0] + 1) % params.q
    from hiermc.modelgen import RatingMatrix

    assert not is_success(est, RatingMatrix(altered, params.q))
    with pytest.raises(ValueError):
        is_success(est, RatingMatrix(np.zeros((2, 2), dtype=np.int64), params.q))


def test_estimator_config_from_dict_rejects_unknown_keys():
    with pytest.raises(ValueError):
        EstimatorConfig.from_dict({"bogus": 1})
