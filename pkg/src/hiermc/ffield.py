"""Arithmetic over prime fields GF(q) and Hamming-distance utilities.

Elements are stored as canonical residues in [0, q-1]; every operation
re-normalizes, so results are bit-identical across platforms. Only prime
moduli are accepted (the rating-vector model lives in a prime field, and
the generalized Reed-Solomon construction below only needs prime-field
arithmetic).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "is_prime",
    "FieldElem",
    "SymbolVector",
    "add",
    "sub",
    "mul",
    "inv",
    "hamming_distance",
    "gf_rank",
    "gf_inv_matrix",
]


def is_prime(q: int) -> bool:
    if q < 2:
        return False
    if q < 4:
        return True
    if q % 2 == 0:
        return False
    d = 3
    while d * d <= q:
        if q % d == 0:
            return False
        d += 2
    return True


def _check_prime(q: int) -> None:
    if not is_prime(q):
        raise ValueError(f"field order must be prime, got q={q}")


@dataclass(frozen=True)
class FieldElem:
    """A canonical residue in GF(q)."""

    value: int
    q: int

    def __post_init__(self):
        _check_prime(self.q)
        if not 0 <= self.value < self.q:
            raise ValueError(f"value {self.value} outside [0, {self.q - 1}]")

    def __add__(self, other: "FieldElem") -> "FieldElem":
        return add(self, other)

    def __mul__(self, other: "FieldElem") -> "FieldElem":
        return mul(self, other)

    def __neg__(self) -> "FieldElem":
        return FieldElem((-self.value) % self.q, self.q)

    def __sub__(self, other: "FieldElem") -> "FieldElem":
        return sub(self, other)


def _check_same_modulus(a: FieldElem, b: FieldElem) -> None:
    if a.q != b.q:
        raise ValueError(f"modulus mismatch: {a.q} != {b.q}")


def add(a: FieldElem, b: FieldElem) -> FieldElem:
    _check_same_modulus(a, b)
    return FieldElem((a.value + b.value) % a.q, a.q)


def sub(a: FieldElem, b: FieldElem) -> FieldElem:
    _check_same_modulus(a, b)
    return FieldElem((a.value - b.value) % a.q, a.q)


def mul(a: FieldElem, b: FieldElem) -> FieldElem:
    _check_same_modulus(a, b)
    return FieldElem((a.value * b.value) % a.q, a.q)


def inv(a: FieldElem) -> FieldElem:
    """Multiplicative inverse via Fermat: a^(q-2) mod q."""
    if a.value == 0:
        raise ZeroDivisionError("0 has no multiplicative inverse")
    return FieldElem(pow(a.value, a.q - 2, a.q), a.q)


class SymbolVector:
    """A vector of GF(q) symbols sharing one modulus."""

    __slots__ = ("entries", "q")

    def __init__(self, entries, q: int):
        _check_prime(q)
        arr = np.asarray(entries, dtype=np.int64)
        if arr.ndim != 1:
            raise ValueError("entries must be one-dimensional")
        if arr.size == 0:
            raise ValueError("length must be positive")
        if ((arr < 0) | (arr >= q)).any():
            raise ValueError(f"entries outside [0, {q - 1}]")
        self.entries = arr
        self.q = q

    def __len__(self) -> int:
        return self.entries.size

    def __eq__(self, other) -> bool:
        if not isinstance(other, SymbolVector):
            return NotImplemented
        return self.q == other.q and np.array_equal(self.entries, other.entries)

    def __repr__(self) -> str:
        return f"SymbolVector({self.entries.tolist()}, q={self.q})"


def hamming_distance(u: SymbolVector, v: SymbolVector) -> int:
    """Number of coordinates where u and v differ."""
    if u.q != v.q:
        raise ValueError(f"modulus mismatch: {u.q} != {v.q}")
    if len(u) != len(v):
        raise ValueError(f"length mismatch: {len(u)} != {len(v)}")
    return int(np.count_nonzero(u.entries != v.entries))


def _row_reduce(mat: np.ndarray, q: int) -> tuple[np.ndarray, list[int]]:
    """Gauss-Jordan elimination mod q; returns (rref, pivot columns)."""
    a = np.array(mat, dtype=np.int64) % q
    rows, cols = a.shape
    pivots: list[int] = []
    rank = 0
    for col in range(cols):
        piv = None
        for row in range(rank, rows):
            if a[row, col] % q != 0:
                piv = row
                break
        if piv is None:
            continue
        if piv != rank:
            a[[rank, piv]] = a[[piv, rank]]
        a[rank] = (a[rank] * pow(int(a[rank, col]), q - 2, q)) % q
        for row in range(rows):
            if row != rank and a[row, col] % q != 0:
                a[row] = (a[row] - a[row, col] * a[rank]) % q
        pivots.append(col)
        rank += 1
        if rank == rows:
            break
    return a, pivots


def gf_rank(mat: np.ndarray, q: int) -> int:
    _check_prime(q)
    if mat.size == 0:
        return 0
    _, pivots = _row_reduce(mat, q)
    return len(pivots)


def gf_inv_matrix(mat: np.ndarray, q: int) -> np.ndarray:
    """Inverse of a square matrix over GF(q)."""
    _check_prime(q)
    mat = np.asarray(mat, dtype=np.int64) % q
    k = mat.shape[0]
    if mat.shape != (k, k):
        raise ValueError("matrix must be square")
    aug = np.concatenate([mat, np.eye(k, dtype=np.int64)], axis=1)
    rref, pivots = _row_reduce(aug, q)
    if pivots[:k] != list(range(k)):
        raise ValueError("matrix is singular over GF(q)")
    return rref[:, k:]
