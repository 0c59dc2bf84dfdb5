"""Bit-packed 0/1 and 0/+-1 square matrices with digraph vocabulary.

Rows are stored as 64-bit blocks (``uint64``), least significant bit first
inside each block.  Indices are 0-based throughout the API; text and JSON
reports print 1-based indices.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "Matrix01",
    "SignedMatrix",
    "RegularityWitness",
    "MatrixFormatError",
    "neighborhood",
    "set_neighborhood",
    "co_ex_sets",
    "edge_count",
    "complement",
    "hadamard",
    "format_matrix",
    "parse_matrix",
    "format_signed",
    "parse_signed",
]

WORD = 64


class MatrixFormatError(ValueError):
    """Raised when a text matrix cannot be parsed or violates its header."""


def _words(n: int) -> int:
    return max(1, (n + WORD - 1) // WORD)


def _pack(dense: np.ndarray) -> np.ndarray:
    n, m = dense.shape
    w = _words(m)
    padded = np.zeros((n, w * WORD), dtype=np.uint8)
    padded[:, :m] = dense
    packed = np.packbits(padded, axis=1, bitorder="little")
    return packed.view(np.uint64).reshape(n, w).copy()


def _unpack(bits: np.ndarray, m: int) -> np.ndarray:
    n = bits.shape[0]
    raw = np.ascontiguousarray(bits).view(np.uint8).reshape(n, -1)
    return np.unpackbits(raw, axis=1, bitorder="little")[:, :m]


def _check_index(i: int, n: int) -> int:
    if not 0 <= i < n:
        raise IndexError(f"index {i} out of range for dimension {n}")
    return int(i)


@dataclass(frozen=True)
class RegularityWitness:
    d: int
    holds: bool


class Matrix01:
    """An n x n matrix with entries in {0, 1}.

    Row and column sums are cached and kept coherent by :meth:`flip`, the
    only mutating operation.
    """

    __slots__ = ("n", "bits", "row_sums", "col_sums")

    def __init__(self, n: int, bits: np.ndarray, row_sums: np.ndarray, col_sums: np.ndarray):
        self.n = n
        self.bits = bits
        self.row_sums = row_sums
        self.col_sums = col_sums

    # -- construction -----------------------------------------------------
    @classmethod
    def from_dense(cls, dense) -> "Matrix01":
        arr = np.asarray(dense)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ValueError(f"expected a square matrix, got shape {arr.shape}")
        if not np.isin(arr, (0, 1)).all():
            raise ValueError("entries must be 0 or 1")
        arr = arr.astype(np.uint8)
        n = arr.shape[0]
        return cls(
            n,
            _pack(arr),
            arr.sum(axis=1, dtype=np.int64),
            arr.sum(axis=0, dtype=np.int64),
        )

    @classmethod
    def from_bits(cls, n: int, bits: np.ndarray) -> "Matrix01":
        return cls.from_dense(_unpack(bits, n))

    @classmethod
    def from_row_sets(cls, n: int, rows: Sequence[Iterable[int]]) -> "Matrix01":
        dense = np.zeros((n, n), dtype=np.uint8)
        for i, cols in enumerate(rows):
            for j in cols:
                dense[i, _check_index(j, n)] = 1
        return cls.from_dense(dense)

    @classmethod
    def from_permutation(cls, perm: Sequence[int]) -> "Matrix01":
        """Permutation matrix with a one at (i, perm[i])."""
        n = len(perm)
        dense = np.zeros((n, n), dtype=np.uint8)
        dense[np.arange(n), np.asarray(perm, dtype=np.int64)] = 1
        return cls.from_dense(dense)

    @classmethod
    def identity(cls, n: int) -> "Matrix01":
        return cls.from_dense(np.eye(n, dtype=np.uint8))

    @classmethod
    def ones(cls, n: int) -> "Matrix01":
        return cls.from_dense(np.ones((n, n), dtype=np.uint8))

    @classmethod
    def zeros(cls, n: int) -> "Matrix01":
        return cls.from_dense(np.zeros((n, n), dtype=np.uint8))

    @classmethod
    def circulant(cls, n: int, d: int) -> "Matrix01":
        """Canonical d-regular matrix: row i has ones at columns i, ..., i+d-1 (mod n)."""
        if not 0 <= d <= n:
            raise ValueError(f"need 0 <= d <= n, got n={n}, d={d}")
        dense = np.zeros((n, n), dtype=np.uint8)
        for i in range(n):
            dense[i, [(i + k) % n for k in range(d)]] = 1
        return cls.from_dense(dense)

    # -- access -----------------------------------------------------------
    def entry(self, i: int, j: int) -> int:
        _check_index(i, self.n)
        _check_index(j, self.n)
        return int((int(self.bits[i, j >> 6]) >> (j & 63)) & 1)

    def row_int(self, i: int) -> int:
        """Row i as a Python integer bitmask (bit j set iff entry (i, j) is 1)."""
        out = 0
        for w, block in enumerate(self.bits[_check_index(i, self.n)]):
            out |= int(block) << (WORD * w)
        return out

    def to_dense(self) -> np.ndarray:
        return _unpack(self.bits, self.n)

    def neighborhood(self, i: int) -> frozenset[int]:
        return neighborhood(self, i)

    def degree(self) -> int | None:
        """Common row/column sum if the matrix is regular, else None."""
        if self.n == 0:
            return 0
        d = int(self.row_sums[0])
        if (self.row_sums == d).all() and (self.col_sums == d).all():
            return d
        return None

    def regularity(self, d: int) -> RegularityWitness:
        holds = bool((self.row_sums == d).all() and (self.col_sums == d).all())
        return RegularityWitness(d=d, holds=holds)

    def cache_coherent(self) -> bool:
        dense = self.to_dense()
        return bool(
            (dense.sum(axis=1) == self.row_sums).all()
            and (dense.sum(axis=0) == self.col_sums).all()
        )

    # -- derived matrices -------------------------------------------------
    def copy(self) -> "Matrix01":
        return Matrix01(self.n, self.bits.copy(), self.row_sums.copy(), self.col_sums.copy())

    def transpose(self) -> "Matrix01":
        return Matrix01.from_dense(self.to_dense().T)

    def minor(self, rows: Sequence[int], cols: Sequence[int]) -> np.ndarray:
        """The |rows| x |cols| minor in the caller's index order (need not be square)."""
        dense = self.to_dense()
        return dense[np.ix_(np.asarray(rows, dtype=np.int64), np.asarray(cols, dtype=np.int64))].copy()

    # -- mutation ---------------------------------------------------------
    def flip(self, i: int, j: int) -> None:
        """Toggle entry (i, j), updating the cached sums."""
        _check_index(i, self.n)
        _check_index(j, self.n)
        mask = np.uint64(1) << np.uint64(j & 63)
        was_set = bool(self.bits[i, j >> 6] & mask)
        self.bits[i, j >> 6] ^= mask
        delta = -1 if was_set else 1
        self.row_sums[i] += delta
        self.col_sums[j] += delta

    # -- comparison -------------------------------------------------------
    def key(self) -> bytes:
        return self.bits.tobytes()

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Matrix01):
            return NotImplemented
        return self.n == other.n and np.array_equal(self.bits, other.bits)

    __hash__ = None  # mutable through flip()

    def __repr__(self) -> str:
        d = self.degree()
        tag = f"d={d}" if d is not None else "irregular"
        return f"Matrix01(n={self.n}, {tag})"


class SignedMatrix:
    """An n x n matrix with entries in {-1, 0, +1}: a 0/1 support times a sign pattern."""

    __slots__ = ("support", "signs")

    def __init__(self, support: Matrix01, signs: np.ndarray):
        signs = np.asarray(signs, dtype=np.int8)
        if signs.shape != (support.n, support.n):
            raise ValueError(f"sign matrix shape {signs.shape} does not match n={support.n}")
        if not np.isin(signs, (-1, 1)).all():
            raise ValueError("signs must be +1 or -1")
        self.support = support
        self.signs = signs

    @property
    def n(self) -> int:
        return self.support.n

    def entry(self, i: int, j: int) -> int:
        return self.support.entry(i, j) * int(self.signs[i, j])

    def to_dense(self) -> np.ndarray:
        return self.support.to_dense().astype(np.int8) * self.signs

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SignedMatrix):
            return NotImplemented
        return np.array_equal(self.to_dense(), other.to_dense())

    __hash__ = None

    def __repr__(self) -> str:
        return f"SignedMatrix(n={self.n}, support={self.support!r})"


# -- digraph vocabulary ----------------------------------------------------

def neighborhood(M: Matrix01, i: int) -> frozenset[int]:
    """Out-neighborhood of row i: the columns j with M(i, j) = 1."""
    row = M.row_int(i)
    out = []
    while row:
        low = row & -row
        out.append(low.bit_length() - 1)
        row ^= low
    return frozenset(out)


def set_neighborhood(M: Matrix01, S: Iterable[int]) -> frozenset[int]:
    acc = 0
    for i in S:
        acc |= M.row_int(i)
    out = []
    while acc:
        low = acc & -acc
        out.append(low.bit_length() - 1)
        acc ^= low
    return frozenset(out)


def co_ex_sets(M: Matrix01, i1: int, i2: int) -> tuple[frozenset[int], frozenset[int], frozenset[int]]:
    """Common neighbors of rows i1, i2 and the two exclusive neighborhoods.

    Returns ``(Co, Ex12, Ex21)`` with ``Ex12 = N(i1) - N(i2)``.
    """
    if i1 == i2:
        raise ValueError("co_ex_sets needs two distinct rows")
    a, b = neighborhood(M, i1), neighborhood(M, i2)
    return a & b, a - b, b - a


def edge_count(M: Matrix01, A: Iterable[int], B: Iterable[int]) -> int:
    """Number of ones of M in the rows A and columns B."""
    rows = sorted(set(A))
    cols = sorted(set(B))
    if not rows or not cols:
        return 0
    for i in rows:
        _check_index(i, M.n)
    for j in cols:
        _check_index(j, M.n)
    dense = M.to_dense()
    return int(dense[np.ix_(rows, cols)].sum())


def complement(M: Matrix01) -> Matrix01:
    return Matrix01.from_dense(1 - M.to_dense())


def hadamard(support: Matrix01, signs) -> SignedMatrix:
    signs = np.asarray(signs)
    if signs.shape != (support.n, support.n):
        raise ValueError(f"dimension mismatch: support n={support.n}, signs {signs.shape}")
    return SignedMatrix(support, signs)


# -- text format -------------------------------------------------------------
#
# first line "n d" (d = 0 means unconstrained), then n lines of n characters.

def format_matrix(M: Matrix01, d: int | None = None) -> str:
    if d is None:
        d = M.degree() or 0
    dense = M.to_dense()
    lines = [f"{M.n} {d}"]
    lines += ["".join("1" if v else "0" for v in row) for row in dense]
    return "\n".join(lines) + "\n"


def _parse_header(lines: list[str]) -> tuple[int, int, list[str]]:
    lines = [ln.strip() for ln in lines if ln.strip()]
    if not lines:
        raise MatrixFormatError("empty matrix text")
    head = lines[0].split()
    if len(head) != 2:
        raise MatrixFormatError(f"header must be 'n d', got {lines[0]!r}")
    try:
        n, d = int(head[0]), int(head[1])
    except ValueError as exc:
        raise MatrixFormatError(f"bad header {lines[0]!r}") from exc
    body = lines[1:]
    if len(body) != n:
        raise MatrixFormatError(f"expected {n} rows, found {len(body)}")
    for k, row in enumerate(body, start=1):
        if len(row) != n:
            raise MatrixFormatError(f"row {k} has length {len(row)}, expected {n}")
    return n, d, body


def parse_matrix(text: str) -> tuple[Matrix01, int]:
    """Parse the 0/1 text format, returning the matrix and the header degree."""
    n, d, body = _parse_header(text.splitlines())
    table = {"0": 0, "1": 1}
    try:
        dense = np.array([[table[c] for c in row] for row in body], dtype=np.uint8).reshape(n, n)
    except KeyError as exc:
        raise MatrixFormatError(f"unexpected character {exc.args[0]!r}") from exc
    M = Matrix01.from_dense(dense)
    if d and not M.regularity(d).holds:
        raise MatrixFormatError(f"matrix is not {d}-regular")
    return M, d


def format_signed(H: SignedMatrix, d: int | None = None) -> str:
    if d is None:
        d = H.support.degree() or 0
    chars = {-1: "-", 0: "0", 1: "+"}
    lines = [f"{H.n} {d}"]
    lines += ["".join(chars[int(v)] for v in row) for row in H.to_dense()]
    return "\n".join(lines) + "\n"


def parse_signed(text: str) -> tuple[SignedMatrix, int]:
    n, d, body = _parse_header(text.splitlines())
    table = {"-": -1, "0": 0, "+": 1}
    try:
        dense = np.array([[table[c] for c in row] for row in body], dtype=np.int8).reshape(n, n)
    except KeyError as exc:
        raise MatrixFormatError(f"unexpected character {exc.args[0]!r}") from exc
    support = Matrix01.from_dense((dense != 0).astype(np.uint8))
    signs = np.where(dense < 0, -1, 1).astype(np.int8)
    if d and not support.regularity(d).holds:
        raise MatrixFormatError(f"support is not {d}-regular")
    return SignedMatrix(support, signs), d
