"""(g, r) MDS codes over GF(q): construction, encoding, enumeration, decoding.

The code couples the g group rating vectors of a cluster through r basis
vectors. Construction is generalized Reed-Solomon with fixed evaluation
points 0, 1, ..., then row reduction to the systematic form [I; A], so
identical parameters always produce the identical generator. Decoding is
enumeration-based: g, r, q are small constants in this problem, so the
q^r codeword table is tiny.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .ffield import SymbolVector, _check_prime, gf_inv_matrix, gf_rank

__all__ = [
    "CodeExistenceError",
    "EnumerationCapError",
    "MdsCode",
    "build_code",
    "encode",
    "all_codewords",
    "min_distance",
    "best_codeword",
]

DEFAULT_ENUM_CAP = 10**6


class CodeExistenceError(ValueError):
    """Requested (g, r, q) violates the MDS existence conditions."""


class EnumerationCapError(RuntimeError):
    """q^r exceeds the configured enumeration cap."""


@dataclass(frozen=True)
class MdsCode:
    """A (g, r) MDS code over GF(q) with systematic generator [I; A]."""

    g: int
    r: int
    q: int
    generator: np.ndarray  # g x r, canonical residues

    def __post_init__(self):
        if self.generator.shape != (self.g, self.r):
            raise ValueError("generator shape must be (g, r)")
        self.generator.setflags(write=False)

    def __eq__(self, other) -> bool:
        if not isinstance(other, MdsCode):
            return NotImplemented
        return (
            (self.g, self.r, self.q) == (other.g, other.r, other.q)
            and np.array_equal(self.generator, other.generator)
        )


def _grs_generator(g: int, r: int, q: int) -> np.ndarray:
    """Evaluation-point generator: rows are (x^0, ..., x^(r-1)) for x = 0, 1, ...

    For g = q + 1 the last row is the point at infinity (leading-coefficient
    row), giving the extended Reed-Solomon code which is MDS as well.
    """
    points = min(g, q)
    gen = np.zeros((g, r), dtype=np.int64)
    for i in range(points):
        for j in range(r):
            gen[i, j] = pow(i, j, q) if not (i == 0 and j == 0) else 1
    if g == q + 1:
        gen[q, r - 1] = 1
    return gen


def _spc_generator(g: int, r: int) -> np.ndarray:
    """Single-parity-check generator [I; 1...1] for r = g - 1."""
    gen = np.zeros((g, r), dtype=np.int64)
    gen[:r] = np.eye(r, dtype=np.int64)
    gen[r] = 1
    return gen


def build_code(g: int, r: int, q: int) -> MdsCode:
    """Build the deterministic systematic (g, r) MDS generator over GF(q).

    Existence: r = 1 (repetition) and r = g (identity) always exist; for
    intermediate r the (extended) GRS construction needs g <= q + 1, with
    the stated even-q exception for r in {3, q-1} allowing g <= q + 2
    (among primes only q = 2 is even, where it admits the (4, 3) code).
    """
    _check_prime(q)
    if not 1 <= r <= g:
        raise CodeExistenceError(f"need 1 <= r <= g, got (g, r) = ({g}, {r})")

    if r == g:
        gen = np.eye(g, dtype=np.int64)
    elif r == 1:
        gen = np.ones((g, 1), dtype=np.int64)
    elif g <= q + 1:
        gen = _grs_generator(g, r, q)
        # Right-multiply by the inverse of the top r x r block: the column
        # space (the code) is unchanged and the result is systematic.
        gen = (gen @ gf_inv_matrix(gen[:r], q)) % q
    elif g == q + 2 and q % 2 == 0 and r in (3, q - 1):
        gen = _spc_generator(g, r)
    else:
        raise CodeExistenceError(
            f"no (g, r) = ({g}, {r}) MDS code over GF({q}): requires g <= {q + 1}"
        )

    code = MdsCode(g=g, r=r, q=q, generator=gen)
    _verify_mds(code)
    return code


def _verify_mds(code: MdsCode) -> None:
    """Every r rows of the generator must be linearly independent."""
    for rows in combinations(range(code.g), code.r):
        if gf_rank(code.generator[list(rows)], code.q) != code.r:
            raise CodeExistenceError(
                f"construction failed MDS check on rows {rows} for "
                f"(g, r, q) = ({code.g}, {code.r}, {code.q})"
            )


def encode(code: MdsCode, message: SymbolVector) -> SymbolVector:
    """Generator-matrix encoding; the first r output symbols equal the message."""
    if message.q != code.q:
        raise ValueError(f"modulus mismatch: {message.q} != {code.q}")
    if len(message) != code.r:
        raise ValueError(f"message length {len(message)} != r = {code.r}")
    word = (code.generator @ message.entries) % code.q
    return SymbolVector(word, code.q)


def encode_matrix(code: MdsCode, basis: np.ndarray) -> np.ndarray:
    """Column-wise encoding of an r x m basis into the g x m vector stack."""
    basis = np.asarray(basis, dtype=np.int64)
    if basis.shape[0] != code.r:
        raise ValueError(f"basis must have r = {code.r} rows")
    return (code.generator @ basis) % code.q


def message_table(r: int, q: int) -> np.ndarray:
    """All q^r messages in lexicographic order, one per row."""
    grids = np.meshgrid(*[np.arange(q, dtype=np.int64)] * r, indexing="ij")
    return np.stack([grid.ravel() for grid in grids], axis=1)


def all_codewords(code: MdsCode, cap: int = DEFAULT_ENUM_CAP) -> np.ndarray:
    """All q^r codewords, one per row, in lexicographic codeword order.

    Lexicographic message order equals lexicographic codeword order because
    the generator is systematic (the first r symbols are the message).
    """
    count = code.q**code.r
    if count > cap:
        raise EnumerationCapError(f"q^r = {count} exceeds enumeration cap {cap}")
    msgs = message_table(code.r, code.q)
    return (msgs @ code.generator.T) % code.q


def min_distance(code: MdsCode, cap: int = DEFAULT_ENUM_CAP) -> int:
    """Minimum pairwise Hamming distance, computed exhaustively over the code.

    For a linear code the set of pairwise differences is the code itself, so
    the minimum pairwise distance is the minimum nonzero codeword weight.
    """
    words = all_codewords(code, cap=cap)
    weights = np.count_nonzero(words, axis=1)
    return int(weights[weights > 0].min())


def best_codeword(code: MdsCode, scores: np.ndarray, cap: int = DEFAULT_ENUM_CAP) -> np.ndarray:
    """Codeword w maximizing sum_i scores[i, w[i]]; ties take the lexicographically
    smallest codeword. scores[i, s] is the value of assigning symbol s to row i;
    -inf entries are allowed and mark impossible assignments.
    """
    scores = np.asarray(scores, dtype=float)
    if scores.shape != (code.g, code.q):
        raise ValueError(f"scores must be {code.g} x {code.q}")
    if np.isnan(scores).any():
        raise ValueError("scores must not contain NaN")
    words = all_codewords(code, cap=cap)
    totals = scores[np.arange(code.g), words].sum(axis=1)
    # argmax returns the first maximizer; rows are in lexicographic order.
    return words[int(np.argmax(totals))]
