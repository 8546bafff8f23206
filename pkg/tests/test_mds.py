from itertools import combinations, product

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hiermc import mds
from hiermc.ffield import SymbolVector


def pairwise_min_distance(words: np.ndarray) -> int:
    """Independent oracle: brute-force minimum over all codeword pairs."""
    best = words.shape[1]
    for i, j in combinations(range(words.shape[0]), 2):
        d = int(np.count_nonzero(words[i] != words[j]))
        best = min(best, d)
    return best


def test_parity_code_structure():
    code = mds.build_code(3, 2, 2)
    words = {tuple(w) for w in mds.all_codewords(code)}
    assert words == {(0, 0, 0), (0, 1, 1), (1, 0, 1), (1, 1, 0)}
    # systematic [I; A] with the third row summing the two basis rows
    assert np.array_equal(code.generator[:2], np.eye(2, dtype=int))
    assert code.generator[2].tolist() == [1, 1]


def test_identity_code():
    code = mds.build_code(4, 4, 5)
    assert np.array_equal(code.generator, np.eye(4, dtype=int))
    assert mds.min_distance(code) == 1


def test_existence_rejections():
    with pytest.raises(mds.CodeExistenceError):
        mds.build_code(5, 2, 2)
    with pytest.raises(mds.CodeExistenceError):
        mds.build_code(9, 4, 7)
    with pytest.raises(mds.CodeExistenceError):
        mds.build_code(3, 4, 5)  # r > g
    # trivial dimensions always exist
    assert mds.build_code(9, 1, 2).g == 9
    assert mds.build_code(9, 9, 2).r == 9
    # the even-q exception admits the (4, 3) single parity check over GF(2)
    spc = mds.build_code(4, 3, 2)
    assert mds.min_distance(spc) == 2


def test_encode_examples():
    code = mds.build_code(3, 2, 2)
    out = mds.encode(code, SymbolVector([1, 0], 2))
    assert out.entries.tolist() == [1, 0, 1]
    zero = mds.encode(code, SymbolVector([0, 0], 2))
    assert zero.entries.tolist() == [0, 0, 0]


def test_encode_matches_naive_multiply():
    code = mds.build_code(4, 2, 5)
    msg = [2, 3]
    out = mds.encode(code, SymbolVector(msg, 5))
    expected = []
    for i in range(4):
        acc = 0
        for j in range(2):
            acc += int(code.generator[i, j]) * msg[j]
        expected.append(acc % 5)
    assert out.entries.tolist() == expected


def test_encode_length_check():
    code = mds.build_code(3, 2, 2)
    with pytest.raises(ValueError):
        mds.encode(code, SymbolVector([1, 0, 1], 2))


def test_all_codewords_count_and_closure():
    code = mds.build_code(4, 2, 5)
    words = mds.all_codewords(code)
    assert words.shape == (25, 4)
    asset = {tuple(w) for w in words}
    assert len(asset) == 25
    # closed under addition
    for i, j in product(range(25), repeat=2):
        assert tuple((words[i] + words[j]) % 5) in asset
    assert pairwise_min_distance(words) >= 3


def test_all_codewords_repetition():
    code = mds.build_code(5, 1, 3)
    words = mds.all_codewords(code)
    assert words.shape == (3, 5)
    for w in words:
        assert len(set(w.tolist())) == 1


def test_enumeration_cap():
    code = mds.build_code(6, 4, 7)
    with pytest.raises(mds.EnumerationCapError):
        mds.all_codewords(code, cap=100)


@pytest.mark.parametrize(
    "g,r,q",
    [(3, 2, 2), (3, 2, 5), (4, 2, 5), (5, 3, 5), (6, 4, 7), (8, 7, 7), (4, 3, 3)],
)
def test_min_distance_meets_singleton_bound(g, r, q):
    code = mds.build_code(g, r, q)
    assert mds.min_distance(code) == g - r + 1
    # cross-check against the brute-force pairwise oracle when small
    words = mds.all_codewords(code)
    if words.shape[0] <= 700:
        assert pairwise_min_distance(words) == g - r + 1


def test_best_codeword_total_tie_is_lexicographic():
    code = mds.build_code(3, 2, 2)
    scores = np.zeros((3, 2))
    assert mds.best_codeword(code, scores).tolist() == [0, 0, 0]


def test_best_codeword_dominant_scores():
    code = mds.build_code(3, 2, 2)
    scores = np.full((3, 2), -10.0)
    for i, s in enumerate([1, 0, 1]):
        scores[i, s] = 10.0
    assert mds.best_codeword(code, scores).tolist() == [1, 0, 1]


def test_best_codeword_matches_exhaustive_argmax():
    rng = np.random.default_rng(7)
    code = mds.build_code(4, 2, 5)
    words = mds.all_codewords(code)
    for _ in range(50):
        scores = rng.standard_normal((4, 5))
        chosen = mds.best_codeword(code, scores)
        totals = np.array([scores[np.arange(4), w].sum() for w in words])
        assert np.isclose(scores[np.arange(4), chosen].sum(), totals.max())


@settings(max_examples=60)
@given(
    grq=st.sampled_from([(3, 2, 2), (4, 2, 5), (5, 3, 5), (4, 3, 3)]),
    data=st.data(),
)
def test_linearity_and_systematic_property(grq, data):
    g, r, q = grq
    code = mds.build_code(g, r, q)
    m1 = data.draw(st.lists(st.integers(0, q - 1), min_size=r, max_size=r))
    m2 = data.draw(st.lists(st.integers(0, q - 1), min_size=r, max_size=r))
    w1 = mds.encode(code, SymbolVector(m1, q)).entries
    w2 = mds.encode(code, SymbolVector(m2, q)).entries
    wsum = mds.encode(code, SymbolVector((np.array(m1) + np.array(m2)) % q, q)).entries
    assert np.array_equal((w1 + w2) % q, wsum)
    assert w1[:r].tolist() == list(m1)
