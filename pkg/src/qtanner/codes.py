"""Classical component codes: builtins, duals and tensor products."""

from __future__ import annotations

import itertools
from collections.abc import Iterator
from dataclasses import dataclass

import numpy as np
import numpy.typing as npt

from qtanner.gf2 import BitMatrix, nullspace, rank, row_basis

__all__ = ["BUILTIN_CODES", "LinearCode", "builtin", "dual", "tensor"]


@dataclass(frozen=True)
class LinearCode:
    """Binary linear code given by a parity-check matrix and a generator basis.

    ``check`` may carry redundant rows; ``gen`` is always a basis.
    """

    check: BitMatrix
    gen: BitMatrix
    name: str = ""

    def __post_init__(self) -> None:
        if self.check.cols != self.gen.cols:
            raise ValueError("check and generator matrices have different lengths")
        if (self.check @ self.gen.T).to_dense().any():
            raise ValueError("generator rows violate the parity checks")
        if rank(self.gen) != self.gen.rows:
            raise ValueError("generator rows are not linearly independent")
        if self.gen.rows != self.n - rank(self.check):
            raise ValueError("generator does not span the full null space of the checks")

    @classmethod
    def from_check(cls, check: BitMatrix | npt.ArrayLike, name: str = "") -> LinearCode:
        check = check if isinstance(check, BitMatrix) else BitMatrix.from_dense(check)
        return cls(check, nullspace(check), name)

    @classmethod
    def from_generator(cls, gen: BitMatrix | npt.ArrayLike, name: str = "") -> LinearCode:
        gen = gen if isinstance(gen, BitMatrix) else BitMatrix.from_dense(gen)
        return cls(nullspace(gen), row_basis(gen), name)

    @property
    def n(self) -> int:
        return self.check.cols

    @property
    def k(self) -> int:
        return self.gen.rows

    def codewords(self) -> Iterator[npt.NDArray[np.uint8]]:
        """Enumerate all 2^k codewords (only sensible for small k)."""
        gen = self.gen.to_dense().astype(np.int64)
        for coeffs in itertools.product((0, 1), repeat=self.k):
            yield (np.asarray(coeffs, dtype=np.int64) @ gen % 2).astype(np.uint8)

    def contains(self, word: npt.ArrayLike) -> bool:
        return not (self.check @ np.asarray(word)).any()

    def min_distance(self) -> int:
        weights = [int(w.sum()) for w in self.codewords() if w.any()]
        return min(weights) if weights else 0

    def __repr__(self) -> str:
        label = f"{self.name} " if self.name else ""
        return f"LinearCode({label}[{self.n},{self.k}])"


def dual(c: LinearCode) -> LinearCode:
    """Dual code: checks become generators and vice versa."""
    name = f"dual({c.name})" if c.name else ""
    return LinearCode(check=c.gen, gen=row_basis(c.check), name=name)


def tensor(ca: LinearCode, cb: LinearCode) -> LinearCode:
    """Tensor product code on ``ca.n * cb.n`` bits.

    Position ``(i, j)`` maps to index ``i * cb.n + j``, so a codeword reshaped
    to ``(ca.n, cb.n)`` has columns in ``ca`` and rows in ``cb``.
    """
    ga = ca.gen.to_dense()
    gb = cb.gen.to_dense()
    rows = [np.kron(a, b) for a in ga for b in gb]
    gen = np.array(rows, dtype=np.uint8).reshape(len(rows), ca.n * cb.n)
    name = f"{ca.name}*{cb.name}" if ca.name and cb.name else ""
    return LinearCode(nullspace(gen), BitMatrix.from_dense(gen), name)


def _cyclic_generator(n: int, poly: list[int]) -> npt.NDArray[np.uint8]:
    deg = len(poly) - 1
    gen = np.zeros((n - deg, n), dtype=np.uint8)
    for i in range(n - deg):
        gen[i, i : i + deg + 1] = poly
    return gen


def _rep3() -> LinearCode:
    return LinearCode(BitMatrix.from_dense([[1, 1, 0], [0, 1, 1]]), BitMatrix.from_dense([[1, 1, 1]]), "rep3")


def _hamming74() -> LinearCode:
    # column j is the binary expansion of j + 1
    check = [[((j + 1) >> b) & 1 for j in range(7)] for b in range(3)]
    return LinearCode.from_check(check, "hamming74")


def _bch74() -> LinearCode:
    # cyclic code with generator polynomial 1 + x + x^3
    return LinearCode.from_generator(_cyclic_generator(7, [1, 1, 0, 1]), "bch74")


def _rand_eq6() -> LinearCode:
    check = [
        [1, 1, 0, 1, 0, 0],
        [0, 1, 1, 0, 1, 0],
        [1, 0, 1, 0, 0, 1],
    ]
    return LinearCode.from_check(check, "rand_eq6")


BUILTIN_CODES = {
    "rep3": _rep3,
    "hamming74": _hamming74,
    "bch74": _bch74,
    "rand_eq6": _rand_eq6,
}


def builtin(name: str) -> LinearCode:
    """Look up a named component code."""
    try:
        return BUILTIN_CODES[name]()
    except KeyError:
        raise ValueError(f"unknown code {name!r}; choose from {sorted(BUILTIN_CODES)}") from None
