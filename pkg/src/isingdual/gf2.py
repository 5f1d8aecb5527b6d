"""Bit-packed linear algebra over GF(2).

Rows are stored as Python integers: bit ``j`` of a row is the entry in
column ``j``.  Row XOR is then a single big-int operation, which keeps the
elimination routines short and fast enough for the matrix sizes used here
(up to a few thousand columns).  Word-packed numpy views are available for
the vectorized enumeration kernels.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigError, InfeasibleSizeError

__all__ = [
    "BitVector",
    "BinMatrix",
    "rank",
    "nullspace_basis",
    "dual_matrix",
    "in_rowspace",
    "Echelon",
    "coset_min_weights",
    "pack_words",
    "read_matrix",
    "write_matrix",
]


def _support(x: int) -> list[int]:
    out = []
    while x:
        low = x & -x
        out.append(low.bit_length() - 1)
        x ^= low
    return out


@dataclass(frozen=True)
class BitVector:
    """Binary vector of fixed length; ``bits`` holds the packed payload."""

    bits: int
    length: int

    def __post_init__(self):
        if self.length < 0:
            raise ValueError("negative length")
        if self.bits < 0 or self.bits >> self.length:
            raise ValueError("payload does not fit in length")

    @classmethod
    def zeros(cls, length: int) -> "BitVector":
        return cls(0, length)

    @classmethod
    def ones(cls, length: int) -> "BitVector":
        return cls((1 << length) - 1, length)

    @classmethod
    def from_indices(cls, indices: Iterable[int], length: int) -> "BitVector":
        bits = 0
        for i in indices:
            if not 0 <= i < length:
                raise ValueError(f"index {i} out of range for length {length}")
            bits ^= 1 << i
        return cls(bits, length)

    @classmethod
    def from_array(cls, arr) -> "BitVector":
        a = np.asarray(arr).astype(bool).ravel()
        return cls.from_indices(np.flatnonzero(a).tolist(), a.size)

    def to_array(self, dtype=np.uint8) -> np.ndarray:
        out = np.zeros(self.length, dtype=dtype)
        out[self.support()] = 1
        return out

    def support(self) -> list[int]:
        return _support(self.bits)

    def weight(self) -> int:
        return self.bits.bit_count()

    def __getitem__(self, i: int) -> int:
        if not 0 <= i < self.length:
            raise IndexError(i)
        return (self.bits >> i) & 1

    def __add__(self, other: "BitVector") -> "BitVector":
        if self.length != other.length:
            raise ValueError(f"length mismatch: {self.length} vs {other.length}")
        return BitVector(self.bits ^ other.bits, self.length)

    __xor__ = __add__

    def dot(self, other: "BitVector") -> int:
        if self.length != other.length:
            raise ValueError(f"length mismatch: {self.length} vs {other.length}")
        return (self.bits & other.bits).bit_count() & 1

    def __bool__(self) -> bool:
        return self.bits != 0

    def __len__(self) -> int:
        return self.length

    def __repr__(self) -> str:
        return f"BitVector({self.support()}, length={self.length})"


@dataclass(frozen=True)
class BinMatrix:
    """Dense binary matrix stored as a tuple of packed rows."""

    rows: tuple[int, ...]
    ncols: int

    def __post_init__(self):
        object.__setattr__(self, "rows", tuple(int(r) for r in self.rows))
        for i, r in enumerate(self.rows):
            if r < 0 or r >> self.ncols:
                raise ValueError(f"row {i} has entries beyond column {self.ncols - 1}")

    @property
    def nrows(self) -> int:
        return len(self.rows)

    @property
    def shape(self) -> tuple[int, int]:
        return (len(self.rows), self.ncols)

    @classmethod
    def zeros(cls, nrows: int, ncols: int) -> "BinMatrix":
        return cls((0,) * nrows, ncols)

    @classmethod
    def identity(cls, n: int) -> "BinMatrix":
        return cls(tuple(1 << i for i in range(n)), n)

    @classmethod
    def from_array(cls, arr) -> "BinMatrix":
        a = np.asarray(arr)
        if a.ndim == 1:
            a = a[None, :]
        a = a.astype(bool)
        return cls.from_supports((np.flatnonzero(row).tolist() for row in a), a.shape[1])

    @classmethod
    def from_supports(cls, supports: Iterable[Iterable[int]], ncols: int) -> "BinMatrix":
        return cls(tuple(BitVector.from_indices(s, ncols).bits for s in supports), ncols)

    @classmethod
    def from_vectors(cls, vectors: Sequence[BitVector], ncols: int | None = None) -> "BinMatrix":
        if ncols is None:
            if not vectors:
                raise ValueError("ncols required for an empty vector list")
            ncols = vectors[0].length
        for v in vectors:
            if v.length != ncols:
                raise ValueError("vector length mismatch")
        return cls(tuple(v.bits for v in vectors), ncols)

    def to_array(self, dtype=np.uint8) -> np.ndarray:
        out = np.zeros((self.nrows, self.ncols), dtype=dtype)
        for i, r in enumerate(self.rows):
            out[i, _support(r)] = 1
        return out

    def row(self, i: int) -> BitVector:
        return BitVector(self.rows[i], self.ncols)

    def row_supports(self) -> list[list[int]]:
        return [_support(r) for r in self.rows]

    def column_supports(self) -> list[list[int]]:
        cols: list[list[int]] = [[] for _ in range(self.ncols)]
        for i, r in enumerate(self.rows):
            for j in _support(r):
                cols[j].append(i)
        return cols

    def row_weights(self) -> list[int]:
        return [r.bit_count() for r in self.rows]

    def column_weights(self) -> list[int]:
        return [len(c) for c in self.column_supports()]

    def transpose(self) -> "BinMatrix":
        return BinMatrix.from_supports(self.column_supports(), self.nrows)

    @property
    def T(self) -> "BinMatrix":
        return self.transpose()

    def vstack(self, other: "BinMatrix") -> "BinMatrix":
        if other.ncols != self.ncols:
            raise ValueError("column count mismatch")
        return BinMatrix(self.rows + other.rows, self.ncols)

    def mul_vec(self, v: BitVector) -> BitVector:
        """Return ``M v^T`` as a vector of length ``nrows``."""
        if v.length != self.ncols:
            raise ValueError(f"length mismatch: {v.length} vs {self.ncols}")
        bits = 0
        for i, r in enumerate(self.rows):
            if (r & v.bits).bit_count() & 1:
                bits |= 1 << i
        return BitVector(bits, self.nrows)

    def vec_mul(self, alpha: BitVector) -> BitVector:
        """Return ``alpha M`` (sum of the rows selected by ``alpha``)."""
        if alpha.length != self.nrows:
            raise ValueError(f"length mismatch: {alpha.length} vs {self.nrows}")
        acc = 0
        for i in _support(alpha.bits):
            acc ^= self.rows[i]
        return BitVector(acc, self.ncols)

    def mul_T(self, other: "BinMatrix") -> "BinMatrix":
        """Return ``self @ other.T`` over GF(2)."""
        if other.ncols != self.ncols:
            raise ValueError("column count mismatch")
        rows = []
        for r in self.rows:
            bits = 0
            for j, s in enumerate(other.rows):
                if (r & s).bit_count() & 1:
                    bits |= 1 << j
            rows.append(bits)
        return BinMatrix(tuple(rows), other.nrows)

    def is_zero(self) -> bool:
        return not any(self.rows)

    def words(self) -> np.ndarray:
        return pack_words(self.rows, self.ncols)

    def __repr__(self) -> str:
        return f"BinMatrix({self.nrows}x{self.ncols}, rows={self.row_supports()})"


class Echelon:
    """Reduced row echelon basis grown one vector at a time.

    Pivots are the lowest set bit of each stored row, and every pivot column
    is cleared from all other stored rows, so reduction by the basis is order
    independent.
    """

    def __init__(self, ncols: int):
        self.ncols = ncols
        self.rows: list[int] = []
        self.pivots: list[int] = []  # pivot bit mask per row

    def reduce(self, v: int) -> int:
        for p, r in zip(self.pivots, self.rows):
            if v & p:
                v ^= r
        return v

    def add(self, v: int) -> bool:
        """Insert ``v``; return False if it was already in the span."""
        v = self.reduce(v)
        if not v:
            return False
        p = v & -v
        for i, r in enumerate(self.rows):
            if r & p:
                self.rows[i] = r ^ v
        self.rows.append(v)
        self.pivots.append(p)
        return True

    def __len__(self) -> int:
        return len(self.rows)

    def contains(self, v: int) -> bool:
        return self.reduce(v) == 0


def _rref(rows: Sequence[int], ncols: int) -> tuple[list[int], list[int]]:
    """Deterministic RREF: pivot = first nonzero column left to right, taken
    from the first available row top-down.  Returns (rows, pivot_columns)."""
    work = list(rows)
    out_rows: list[int] = []
    pivcols: list[int] = []
    start = 0
    for col in range(ncols):
        bit = 1 << col
        piv = None
        for i in range(start, len(work)):
            if work[i] & bit:
                piv = i
                break
        if piv is None:
            continue
        work[start], work[piv] = work[piv], work[start]
        prow = work[start]
        for i in range(len(work)):
            if i != start and work[i] & bit:
                work[i] ^= prow
        pivcols.append(col)
        start += 1
        if start == len(work):
            break
    out_rows = work[:start]
    return out_rows, pivcols


def rank(M: BinMatrix) -> int:
    """GF(2) rank."""
    e = Echelon(M.ncols)
    for r in M.rows:
        e.add(r)
    return len(e)


def nullspace_basis(M: BinMatrix) -> BinMatrix:
    """Basis of ``{x : M x^T = 0}``, one row per free column (ascending)."""
    n = M.ncols
    red, pivcols = _rref(M.rows, n)
    pivset = set(pivcols)
    basis = []
    for f in range(n):
        if f in pivset:
            continue
        x = 1 << f
        for prow, pc in zip(red, pivcols):
            if (prow >> f) & 1:
                x |= 1 << pc
        basis.append(x)
    return BinMatrix(tuple(basis), n)


def dual_matrix(M: BinMatrix) -> BinMatrix:
    """Exact dual ``D``: ``D M^T = 0`` and ``rank M + rank D = ncols``."""
    return nullspace_basis(M)


def in_rowspace(v: BitVector, M: BinMatrix) -> bool:
    if v.length != M.ncols:
        raise ValueError(f"length mismatch: {v.length} vs {M.ncols}")
    e = Echelon(M.ncols)
    for r in M.rows:
        e.add(r)
    return e.contains(v.bits)


def row_basis(M: BinMatrix) -> list[int]:
    """Echelon basis rows of the rowspace of ``M``."""
    e = Echelon(M.ncols)
    for r in M.rows:
        e.add(r)
    return list(e.rows)


# ---------------------------------------------------------------------------
# word-packed enumeration

def pack_words(rows: Sequence[int], ncols: int) -> np.ndarray:
    """Pack integer rows into a ``(len(rows), ceil(ncols/64))`` uint64 array."""
    nw = max(1, (ncols + 63) // 64)
    out = np.zeros((len(rows), nw), dtype=np.uint64)
    mask = (1 << 64) - 1
    for i, r in enumerate(rows):
        for w in range(nw):
            out[i, w] = (r >> (64 * w)) & mask
    return out


MAX_ENUM_RANK = 28
_TABLE_BITS = 16


def coset_min_weights(offsets: Sequence[int], basis: Sequence[int], ncols: int,
                      max_rank: int = MAX_ENUM_RANK) -> np.ndarray:
    """Minimum Hamming weight over ``offset + span(basis)`` for each offset.

    ``basis`` must be linearly independent.  The low part of the basis is
    expanded into a lookup table of all combinations; the high part is walked
    in Gray-code order so each step costs one table XOR.
    """
    basis = list(basis)
    if len(basis) > max_rank:
        raise InfeasibleSizeError(
            f"coset enumeration over 2^{len(basis)} elements exceeds cap 2^{max_rank}")
    lo, hi = basis[:_TABLE_BITS], basis[_TABLE_BITS:]
    table = np.zeros((1, max(1, (ncols + 63) // 64)), dtype=np.uint64)
    for w in pack_words(lo, ncols):
        table = np.concatenate([table, table ^ w], axis=0)
    hi_w = pack_words(hi, ncols)
    off_w = pack_words(list(offsets), ncols)
    best = np.full(len(offsets), np.iinfo(np.int64).max, dtype=np.int64)
    chunk = max(1, (1 << 22) // table.shape[0])
    cur = np.zeros(table.shape[1], dtype=np.uint64)
    for step in range(1 << len(hi)):
        if step:
            j = (step & -step).bit_length() - 1
            cur = cur ^ hi_w[j]
        for s in range(0, len(offsets), chunk):
            shifted = off_w[s:s + chunk] ^ cur
            wts = np.bitwise_count(table[None, :, :] ^ shifted[:, None, :]).sum(axis=2, dtype=np.int64)
            np.minimum(best[s:s + chunk], wts.min(axis=1), out=best[s:s + chunk])
    return best


# ---------------------------------------------------------------------------
# text format: "rows cols" then one line of sorted column indices per row

def write_matrix(M: BinMatrix, path) -> None:
    lines = [f"{M.nrows} {M.ncols}"]
    for supp in M.row_supports():
        lines.append(" ".join(str(j) for j in supp))
    Path(path).write_text("\n".join(lines) + "\n")


def format_matrix(M: BinMatrix) -> str:
    lines = [f"{M.nrows} {M.ncols}"]
    lines += [" ".join(str(j) for j in s) for s in M.row_supports()]
    return "\n".join(lines) + "\n"


def parse_matrix(text: str) -> BinMatrix:
    lines = text.split("\n")
    try:
        nrows, ncols = (int(x) for x in lines[0].split())
    except (ValueError, IndexError) as exc:
        raise ConfigError(f"bad matrix header: {lines[:1]!r}") from exc
    body = lines[1:1 + nrows]
    if len(body) < nrows:
        raise ConfigError(f"expected {nrows} rows, found {len(body)}")
    supports = []
    for i, line in enumerate(body):
        try:
            idx = [int(x) for x in line.split()]
        except ValueError as exc:
            raise ConfigError(f"row {i}: non-integer entry") from exc
        if any(j < 0 or j >= ncols for j in idx):
            raise ConfigError(f"row {i}: column index out of range")
        if idx != sorted(set(idx)):
            raise ConfigError(f"row {i}: indices must be sorted and distinct")
        supports.append(idx)
    return BinMatrix.from_supports(supports, ncols)


def read_matrix(path) -> BinMatrix:
    return parse_matrix(Path(path).read_text())
