"""Bit-packed linear algebra over GF(2).

Rows are stored as little-endian 64-bit words: bit ``j`` of a row lives in
word ``j >> 6`` at position ``j & 63``.  Padding bits past ``cols`` are always
zero.  Matrices and vectors are immutable once built.

The elimination kernels are compiled with numba; everything else is plain
numpy.
"""

from __future__ import annotations

from collections.abc import Iterable, Sequence
from dataclasses import dataclass

import numba
import numpy as np
import numpy.typing as npt

WORD = 64

__all__ = [
    "BitMatrix",
    "BitVec",
    "EchelonForm",
    "RowspaceTester",
    "as_bits",
    "echelonize",
    "in_rowspace",
    "nullspace",
    "rank",
    "row_basis",
    "solve",
]


def _nwords(cols: int) -> int:
    return (cols + WORD - 1) // WORD


def _pack_rows(dense: npt.NDArray[np.uint8]) -> npt.NDArray[np.uint64]:
    rows, cols = dense.shape
    words = _nwords(cols)
    padded = np.zeros((rows, words * WORD), dtype=np.uint8)
    padded[:, :cols] = dense
    packed = np.packbits(padded, axis=1, bitorder="little")
    return np.ascontiguousarray(packed).view("<u8").astype(np.uint64, copy=False)


def _unpack_rows(data: npt.NDArray[np.uint64], cols: int) -> npt.NDArray[np.uint8]:
    if data.shape[0] == 0 or cols == 0:
        return np.zeros((data.shape[0], cols), dtype=np.uint8)
    raw = np.ascontiguousarray(data).view(np.uint8)
    return np.unpackbits(raw, axis=1, bitorder="little")[:, :cols].copy()


def as_bits(v: BitVec | npt.ArrayLike) -> npt.NDArray[np.uint8]:
    """Coerce a BitVec or any 0/1 array-like into a 1-D uint8 array."""
    if isinstance(v, BitVec):
        return v.to_dense()
    arr = np.asarray(v)
    if arr.ndim != 1:
        raise ValueError(f"expected a 1-D bit vector, got shape {arr.shape}")
    if arr.dtype == np.bool_:
        return arr.astype(np.uint8)
    if arr.size and (arr.min() < 0 or arr.max() > 1):
        raise ValueError("bit vectors may only contain 0 and 1")
    return arr.astype(np.uint8, copy=False)


class BitVec:
    """Packed bit vector."""

    __slots__ = ("_len", "_data")

    def __init__(self, length: int, data: npt.NDArray[np.uint64] | None = None) -> None:
        if length < 0:
            raise ValueError("length must be non-negative")
        if data is None:
            data = np.zeros(_nwords(length), dtype=np.uint64)
        elif data.shape != (_nwords(length),):
            raise ValueError("packed data has the wrong number of words")
        data = np.array(data, dtype=np.uint64)
        data.flags.writeable = False
        self._len = length
        self._data = data

    @classmethod
    def from_dense(cls, bits: npt.ArrayLike) -> BitVec:
        arr = as_bits(bits)
        return cls(arr.size, _pack_rows(arr[None, :])[0])

    @classmethod
    def from_indices(cls, length: int, indices: Iterable[int]) -> BitVec:
        arr = np.zeros(length, dtype=np.uint8)
        idx = np.fromiter(indices, dtype=np.int64)
        if idx.size and (idx.min() < 0 or idx.max() >= length):
            raise IndexError("bit index out of range")
        arr[idx] ^= 1
        return cls.from_dense(arr)

    @classmethod
    def zeros(cls, length: int) -> BitVec:
        return cls(length)

    def __len__(self) -> int:
        return self._len

    @property
    def data(self) -> npt.NDArray[np.uint64]:
        return self._data

    def to_dense(self) -> npt.NDArray[np.uint8]:
        return _unpack_rows(self._data[None, :], self._len)[0]

    def support(self) -> list[int]:
        return np.flatnonzero(self.to_dense()).tolist()

    def weight(self) -> int:
        return int(np.bitwise_count(self._data).sum())

    def any(self) -> bool:
        return bool(self._data.any())

    def __getitem__(self, i: int) -> int:
        if not -self._len <= i < self._len:
            raise IndexError(i)
        i %= self._len
        return int((int(self._data[i >> 6]) >> (i & 63)) & 1)

    def __xor__(self, other: BitVec) -> BitVec:
        if len(other) != self._len:
            raise ValueError("length mismatch")
        return BitVec(self._len, self._data ^ other._data)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BitVec):
            return NotImplemented
        return self._len == other._len and bool(np.array_equal(self._data, other._data))

    def __hash__(self) -> int:
        return hash((self._len, self._data.tobytes()))

    def __repr__(self) -> str:
        return f"BitVec({''.join(map(str, self.to_dense()))!r})"


class BitMatrix:
    """Dense bit-packed matrix over GF(2).

    Build one with :meth:`from_dense`, :meth:`from_supports`, :meth:`zeros` or
    :meth:`identity`.  The packed words are exposed read-only via ``data``.
    """

    __slots__ = ("_rows", "_cols", "_data")

    def __init__(self, rows: int, cols: int, data: npt.NDArray[np.uint64] | None = None) -> None:
        if rows < 0 or cols < 0:
            raise ValueError("matrix dimensions must be non-negative")
        if data is None:
            data = np.zeros((rows, _nwords(cols)), dtype=np.uint64)
        elif data.shape != (rows, _nwords(cols)):
            raise ValueError("packed data has the wrong shape")
        data = np.array(data, dtype=np.uint64)
        if cols % WORD and rows:
            mask = np.uint64((1 << (cols % WORD)) - 1)
            if (data[:, -1] & ~mask).any():
                raise ValueError("padding bits beyond the last column must be zero")
        data.flags.writeable = False
        self._rows = rows
        self._cols = cols
        self._data = data

    # construction

    @classmethod
    def from_dense(cls, dense: npt.ArrayLike) -> BitMatrix:
        arr = np.asarray(dense)
        if arr.ndim != 2:
            if arr.size == 0:
                arr = arr.reshape(0, 0)
            else:
                raise ValueError(f"expected a 2-D array, got shape {arr.shape}")
        arr = (arr.astype(np.int64) & 1).astype(np.uint8)
        return cls(arr.shape[0], arr.shape[1], _pack_rows(arr))

    @classmethod
    def from_supports(cls, supports: Iterable[Iterable[int]], cols: int) -> BitMatrix:
        """Build a matrix from per-row lists of column indices."""
        rows = [list(r) for r in supports]
        dense = np.zeros((len(rows), cols), dtype=np.uint8)
        for i, row in enumerate(rows):
            for j in row:
                if not 0 <= j < cols:
                    raise IndexError(f"column {j} out of range in row {i}")
                dense[i, j] ^= 1
        return cls.from_dense(dense)

    @classmethod
    def zeros(cls, rows: int, cols: int) -> BitMatrix:
        return cls(rows, cols)

    @classmethod
    def identity(cls, n: int) -> BitMatrix:
        return cls.from_dense(np.eye(n, dtype=np.uint8))

    @classmethod
    def vstack(cls, mats: Sequence[BitMatrix]) -> BitMatrix:
        if not mats:
            raise ValueError("nothing to stack")
        cols = mats[0].cols
        if any(m.cols != cols for m in mats):
            raise ValueError("column counts differ")
        data = np.concatenate([m.data for m in mats], axis=0)
        return cls(data.shape[0], cols, data)

    # accessors

    @property
    def rows(self) -> int:
        return self._rows

    @property
    def cols(self) -> int:
        return self._cols

    @property
    def shape(self) -> tuple[int, int]:
        return (self._rows, self._cols)

    @property
    def data(self) -> npt.NDArray[np.uint64]:
        return self._data

    def to_dense(self) -> npt.NDArray[np.uint8]:
        return _unpack_rows(self._data, self._cols)

    def row(self, i: int) -> BitVec:
        return BitVec(self._cols, self._data[i])

    def row_support(self, i: int) -> list[int]:
        return np.flatnonzero(self.to_dense()[i]).tolist()

    def supports(self) -> list[list[int]]:
        dense = self.to_dense()
        return [np.flatnonzero(r).tolist() for r in dense]

    def row_weights(self) -> npt.NDArray[np.int64]:
        return np.bitwise_count(self._data).sum(axis=1).astype(np.int64)

    def col_weights(self) -> npt.NDArray[np.int64]:
        return self.to_dense().sum(axis=0, dtype=np.int64)

    @property
    def T(self) -> BitMatrix:
        return BitMatrix.from_dense(self.to_dense().T)

    def take_rows(self, indices: Sequence[int]) -> BitMatrix:
        idx = np.asarray(indices, dtype=np.int64)
        return BitMatrix(idx.size, self._cols, self._data[idx])

    def take_cols(self, indices: Sequence[int]) -> BitMatrix:
        idx = np.asarray(indices, dtype=np.int64)
        return BitMatrix.from_dense(self.to_dense()[:, idx])

    # arithmetic

    def __matmul__(self, other):
        if isinstance(other, BitMatrix):
            if self._cols != other.rows:
                raise ValueError(f"shape mismatch {self.shape} @ {other.shape}")
            prod = self.to_dense().astype(np.int64) @ other.to_dense().astype(np.int64)
            return BitMatrix.from_dense(prod & 1)
        if isinstance(other, BitVec):
            if len(other) != self._cols:
                raise ValueError(f"length mismatch: {self.shape} @ {len(other)}")
            parity = np.bitwise_count(self._data & other.data).sum(axis=1) & 1
            return BitVec.from_dense(parity)
        vec = as_bits(other)
        if vec.size != self._cols:
            raise ValueError(f"length mismatch: {self.shape} @ {vec.size}")
        return self.mul_dense(vec)

    def mul_dense(self, vec: npt.NDArray[np.uint8]) -> npt.NDArray[np.uint8]:
        """Matrix-vector product for an unpacked 0/1 vector; returns unpacked."""
        packed = _pack_rows(np.asarray(vec, dtype=np.uint8)[None, :])[0]
        parity = np.bitwise_count(self._data & packed).sum(axis=1) & 1
        return parity.astype(np.uint8)

    def __add__(self, other: BitMatrix) -> BitMatrix:
        if other.shape != self.shape:
            raise ValueError("shape mismatch")
        return BitMatrix(self._rows, self._cols, self._data ^ other.data)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BitMatrix):
            return NotImplemented
        return self.shape == other.shape and bool(np.array_equal(self._data, other.data))

    def __hash__(self) -> int:
        return hash((self.shape, self._data.tobytes()))

    def __repr__(self) -> str:
        if self._rows * self._cols <= 400:
            body = ", ".join("".join(map(str, r)) for r in self.to_dense())
            return f"BitMatrix({self._rows}x{self._cols}: [{body}])"
        return f"BitMatrix({self._rows}x{self._cols})"


# --------------------------------------------------------------------------
# kernels


@numba.njit(cache=True, nogil=True)
def _rref_inplace(data, order):
    """Gauss-Jordan elimination visiting columns in ``order``.

    Returns pivot columns in echelon-row order; pivot row ``r`` is row ``r``.
    """
    nrows = data.shape[0]
    nw = data.shape[1]
    pivots = np.empty(min(nrows, order.size), dtype=np.int64)
    rank = 0
    one = np.uint64(1)
    for k in range(order.size):
        if rank == nrows:
            break
        col = order[k]
        w = col >> 6
        bit = one << np.uint64(col & 63)
        piv = -1
        for i in range(rank, nrows):
            if data[i, w] & bit:
                piv = i
                break
        if piv < 0:
            continue
        if piv != rank:
            for j in range(nw):
                tmp = data[piv, j]
                data[piv, j] = data[rank, j]
                data[rank, j] = tmp
        for i in range(nrows):
            if i != rank and (data[i, w] & bit):
                for j in range(nw):
                    data[i, j] ^= data[rank, j]
        pivots[rank] = col
        rank += 1
    return pivots[:rank]


@numba.njit(cache=True, nogil=True)
def _reduce_against(rref, pivots, vec):
    """Reduce a packed vector by an RREF basis; returns True if it vanishes."""
    nw = vec.size
    one = np.uint64(1)
    for r in range(pivots.size):
        col = pivots[r]
        if vec[col >> 6] & (one << np.uint64(col & 63)):
            for j in range(nw):
                vec[j] ^= rref[r, j]
    for j in range(nw):
        if vec[j] != 0:
            return False
    return True


def _as_matrix(m: BitMatrix | npt.ArrayLike) -> BitMatrix:
    return m if isinstance(m, BitMatrix) else BitMatrix.from_dense(m)


@dataclass(frozen=True)
class EchelonForm:
    """Result of :func:`echelonize`: reduced matrix, pivots in row order, rank."""

    transformed: BitMatrix
    pivot_cols: tuple[int, ...]
    rank: int


def rank(m: BitMatrix | npt.ArrayLike) -> int:
    """GF(2) row rank."""
    m = _as_matrix(m)
    if m.rows == 0 or m.cols == 0:
        return 0
    work = np.array(m.data, copy=True)
    return int(_rref_inplace(work, np.arange(m.cols, dtype=np.int64)).size)


def echelonize(m: BitMatrix | npt.ArrayLike, col_order: Sequence[int] | None = None) -> EchelonForm:
    """Reduced row echelon form, choosing pivots by scanning ``col_order``."""
    m = _as_matrix(m)
    if col_order is None:
        order = np.arange(m.cols, dtype=np.int64)
    else:
        order = np.asarray(col_order, dtype=np.int64)
        if order.shape != (m.cols,) or not np.array_equal(np.sort(order), np.arange(m.cols)):
            raise ValueError("col_order must be a permutation of range(cols)")
    work = np.array(m.data, copy=True)
    pivots = _rref_inplace(work, order) if m.rows and m.cols else np.zeros(0, dtype=np.int64)
    return EchelonForm(BitMatrix(m.rows, m.cols, work), tuple(int(c) for c in pivots), int(pivots.size))


def solve(m: BitMatrix | npt.ArrayLike, s: BitVec | npt.ArrayLike) -> npt.NDArray[np.uint8] | None:
    """Return some ``x`` with ``m @ x == s``, or ``None`` if no solution exists."""
    m = _as_matrix(m)
    s = as_bits(s)
    if s.size != m.rows:
        raise ValueError(f"syndrome length {s.size} does not match {m.rows} rows")
    if m.rows == 0:
        return np.zeros(m.cols, dtype=np.uint8)
    aug = np.concatenate([m.to_dense(), s[:, None]], axis=1)
    work = _pack_rows(aug)
    pivots = _rref_inplace(work, np.arange(m.cols, dtype=np.int64))
    rref = _unpack_rows(work, m.cols + 1)
    if rref[pivots.size:, m.cols].any():
        return None
    x = np.zeros(m.cols, dtype=np.uint8)
    x[pivots] = rref[: pivots.size, m.cols]
    return x


class RowspaceTester:
    """Precomputed RREF of ``m`` for repeated row-space membership queries."""

    def __init__(self, m: BitMatrix | npt.ArrayLike) -> None:
        m = _as_matrix(m)
        self.cols = m.cols
        self._rref = np.array(m.data, copy=True)
        if m.rows and m.cols:
            self._pivots = _rref_inplace(self._rref, np.arange(m.cols, dtype=np.int64))
        else:
            self._pivots = np.zeros(0, dtype=np.int64)
        self.rank = int(self._pivots.size)

    def __contains__(self, v: BitVec | npt.ArrayLike) -> bool:
        if isinstance(v, BitVec):
            if len(v) != self.cols:
                raise ValueError("length mismatch")
            packed = np.array(v.data, copy=True)
        else:
            bits = as_bits(v)
            if bits.size != self.cols:
                raise ValueError(f"vector length {bits.size} does not match {self.cols} columns")
            packed = _pack_rows(bits[None, :])[0].copy()
        return bool(_reduce_against(self._rref, self._pivots, packed))


def in_rowspace(m: BitMatrix | npt.ArrayLike, v: BitVec | npt.ArrayLike) -> bool:
    """True iff ``v`` is a GF(2) combination of the rows of ``m``."""
    return v in RowspaceTester(m)


def nullspace(m: BitMatrix | npt.ArrayLike) -> BitMatrix:
    """Basis of ``{x : m @ x = 0}``, one row per free column in increasing order."""
    m = _as_matrix(m)
    if m.rows == 0:
        return BitMatrix.identity(m.cols)
    ech = echelonize(m)
    rref = ech.transformed.to_dense()
    pivots = list(ech.pivot_cols)
    free = [c for c in range(m.cols) if c not in set(pivots)]
    basis = np.zeros((len(free), m.cols), dtype=np.uint8)
    for i, f in enumerate(free):
        basis[i, f] = 1
        for r, pc in enumerate(pivots):
            basis[i, pc] = rref[r, f]
    return BitMatrix.from_dense(basis.reshape(len(free), m.cols))


def row_basis(m: BitMatrix | npt.ArrayLike) -> BitMatrix:
    """Reduced basis of the row space of ``m``."""
    m = _as_matrix(m)
    ech = echelonize(m)
    return ech.transformed.take_rows(range(ech.rank))
