"""Depolarizing noise, syndromes and residual classification for CSS trials."""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np
import numpy.typing as npt

from qtanner.complex import TannerCode
from qtanner.gf2 import BitMatrix, RowspaceTester, as_bits

__all__ = [
    "DECODE_FAILURE",
    "LOGICAL_FAILURE",
    "SUCCESS",
    "Classifier",
    "PauliError",
    "TrialVerdict",
    "classify_residual",
    "sample_depolarizing",
    "syndrome",
    "trial_rng",
]

SUCCESS = "success"
LOGICAL_FAILURE = "logical_failure"
DECODE_FAILURE = "decode_failure"


@dataclass(frozen=True)
class PauliError:
    """X and Z supports of a Pauli operator; a Y sets both bits."""

    ex: npt.NDArray[np.uint8]
    ez: npt.NDArray[np.uint8]

    def __post_init__(self) -> None:
        if self.ex.shape != self.ez.shape:
            raise ValueError("X and Z components differ in length")

    @property
    def n(self) -> int:
        return self.ex.size

    def weight(self) -> int:
        return int(np.count_nonzero(self.ex | self.ez))


def trial_rng(master_seed: int, p: float, trial: int) -> np.random.Generator:
    """Independent counter-based stream for one trial.

    Keyed by (seed, exact bits of p, trial index), so a trial's error never
    depends on which worker runs it or in what order.
    """
    (p_bits,) = struct.unpack("<Q", struct.pack("<d", float(p)))
    seq = np.random.SeedSequence([int(master_seed) & (2**64 - 1), p_bits, int(trial)])
    return np.random.Generator(np.random.Philox(seq))


def sample_depolarizing(n: int, p: float, rng: np.random.Generator) -> PauliError:
    """I.i.d. depolarizing noise: X, Y, Z each with probability ``p/3``."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    u = rng.random(n)
    # [0, p/3) -> X, [p/3, 2p/3) -> Y, [2p/3, p) -> Z
    ex = (u < 2.0 * p / 3.0).astype(np.uint8)
    ez = ((u >= p / 3.0) & (u < p)).astype(np.uint8)
    return PauliError(ex, ez)


def syndrome(code: TannerCode, err: PauliError) -> tuple[npt.NDArray[np.uint8], npt.NDArray[np.uint8]]:
    """``(hx·ez, hz·ex)``: Z errors trip X checks and vice versa."""
    if err.n != code.n:
        raise ValueError(f"error has length {err.n}, code has {code.n} qubits")
    return code.hx.mul_dense(err.ez), code.hz.mul_dense(err.ex)


@dataclass(frozen=True)
class TrialVerdict:
    x: str
    z: str
    x_weight: int = 0
    z_weight: int = 0

    @property
    def failed(self) -> bool:
        return self.x != SUCCESS or self.z != SUCCESS


def _same_and_opposite(code: TannerCode, side: str) -> tuple[BitMatrix, BitMatrix]:
    # Z residuals live in the Z-stabilizer group (hz) and are detected by hx
    if side == "z":
        return code.hz, code.hx
    if side == "x":
        return code.hx, code.hz
    raise ValueError(f"side must be 'x' or 'z', got {side!r}")


def classify_residual(code: TannerCode, side: str, residual: npt.ArrayLike) -> str:
    """Success, logical failure or decode failure for one residual component."""
    same, opposite = _same_and_opposite(code, side)
    r = as_bits(residual)
    if opposite.mul_dense(r).any():
        return DECODE_FAILURE
    return SUCCESS if r in RowspaceTester(same) else LOGICAL_FAILURE


class Classifier:
    """Cached version of :func:`classify_residual` for repeated trials."""

    def __init__(self, code: TannerCode) -> None:
        self.code = code
        self._testers = {"z": RowspaceTester(code.hz), "x": RowspaceTester(code.hx)}

    def classify(self, side: str, residual: npt.ArrayLike) -> str:
        _, opposite = _same_and_opposite(self.code, side)
        r = as_bits(residual)
        if opposite.mul_dense(r).any():
            return DECODE_FAILURE
        return SUCCESS if r in self._testers[side] else LOGICAL_FAILURE
