"""Local-estimate aggregation decoding (LEAD).

Three phases per syndrome:

1. decode every local view (H_v, s_v) independently and boost the bits a
   successful local decode flipped;
2. average the local soft estimates per qubit, scale by ``alpha`` and clamp;
3. run the global decoder with the aggregated vector as its prior.
"""

from __future__ import annotations

import logging
from collections.abc import Callable, Sequence
from concurrent.futures import Executor
from dataclasses import dataclass, field
from typing import Any, Protocol

import numpy as np
import numpy.typing as npt

from qtanner.complex import TannerCode, ViewCover, extract_view
from qtanner.decode import DecodeOutcome, Decoder, DecoderConfig, Prior
from qtanner.gf2 import BitMatrix, as_bits

__all__ = [
    "PRESETS",
    "LeadConfig",
    "LeadDecoder",
    "LeadTrace",
    "aggregate",
    "boost_confidence",
    "lead_decode",
    "normalized_iterations",
    "preset",
]

log = logging.getLogger(__name__)

_BP_OSD = DecoderConfig(post="osd_cs", order=3)
_BP_LSD = DecoderConfig(post="lsd_cs", order=3)

# preset name -> (local decoder, global decoder)
PRESETS: dict[str, tuple[DecoderConfig, DecoderConfig]] = {
    "lead-bl-bo": (_BP_LSD, _BP_OSD),
    "lead-bo-bo": (_BP_OSD, _BP_OSD),
    "lead-bl-bl": (_BP_LSD, _BP_LSD),
    "lead-bo-bl": (_BP_OSD, _BP_LSD),
}


@dataclass(frozen=True)
class LeadConfig:
    alpha: float = 1.0
    local: DecoderConfig = _BP_LSD
    global_cfg: DecoderConfig = _BP_OSD
    boost_floor: float = 0.5
    clamp_eps: float = 1e-9

    def __post_init__(self) -> None:
        if not 0 < self.alpha <= 1:
            raise ValueError("alpha must lie in (0, 1]")
        if not 0 < self.boost_floor < 1:
            raise ValueError("boost_floor must lie in (0, 1)")
        if not 0 < self.clamp_eps < 0.5:
            raise ValueError("clamp_eps must lie in (0, 0.5)")

    def to_dict(self) -> dict[str, Any]:
        return {
            "alpha": self.alpha,
            "local": self.local.to_dict(),
            "global_cfg": self.global_cfg.to_dict(),
            "boost_floor": self.boost_floor,
            "clamp_eps": self.clamp_eps,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> LeadConfig:
        data = dict(data)
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown LEAD config keys: {sorted(unknown)}")
        for key in ("local", "global_cfg"):
            if key in data and isinstance(data[key], dict):
                data[key] = DecoderConfig.from_dict(data[key])
        return cls(**data)


def preset(name: str, alpha: float = 1.0, **kwargs: Any) -> LeadConfig:
    """LEAD configuration for a named (local, global) decoder pairing."""
    try:
        local, glob = PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown LEAD preset {name!r}; choose from {sorted(PRESETS)}") from None
    return LeadConfig(alpha=alpha, local=local, global_cfg=glob, **kwargs)


def boost_confidence(
    pv: npt.ArrayLike, ev: npt.ArrayLike, local_success: bool, floor: float = 0.5
) -> npt.NDArray[np.float64]:
    """Raise the probability of every flipped bit to at least ``floor``.

    Only applied when the local decode matched its syndrome.
    """
    pv = np.array(pv, dtype=np.float64)
    ev = as_bits(ev)
    if pv.shape != ev.shape:
        raise ValueError(f"length mismatch: {pv.size} probabilities, {ev.size} bits")
    if local_success:
        flipped = ev == 1
        pv[flipped] = np.maximum(pv[flipped], floor)
    return pv


def aggregate(
    views: Sequence[tuple[npt.ArrayLike, npt.ArrayLike]],
    n: int,
    alpha: float,
    clamp_eps: float = 1e-9,
    fallback: npt.ArrayLike | None = None,
) -> Prior:
    """Average the view estimates per qubit, scale by ``alpha`` and clamp.

    ``views`` holds ``(col_map, estimates)`` pairs.  Qubits no view covers keep
    ``fallback`` (normally the channel prior); without a fallback they are an
    error.
    """
    if not 0 < alpha <= 1:
        raise ValueError("alpha must lie in (0, 1]")
    sums = np.zeros(n, dtype=np.float64)
    counts = np.zeros(n, dtype=np.int64)
    for col_map, est in views:
        idx = np.asarray(col_map, dtype=np.int64)
        vals = np.asarray(est, dtype=np.float64)
        if idx.shape != vals.shape:
            raise ValueError("view column map and estimate differ in length")
        np.add.at(sums, idx, vals)
        np.add.at(counts, idx, 1)
    covered = counts > 0
    p_hat = np.empty(n, dtype=np.float64)
    p_hat[covered] = alpha * (sums[covered] / counts[covered])
    if not covered.all():
        if fallback is None:
            raise ValueError(f"{int((~covered).sum())} qubits are not covered by any view")
        log.warning("%d qubits lie in no view; keeping their channel prior", int((~covered).sum()))
        p_hat[~covered] = np.asarray(fallback, dtype=np.float64)[~covered]
    return Prior(np.clip(p_hat, clamp_eps, 1.0 - clamp_eps), clamp_eps)


@dataclass
class LeadTrace:
    """Per-call record of the three phases."""

    view_ids: list[str]
    local_converged: npt.NDArray[np.bool_]
    local_iterations: npt.NDArray[np.int64]
    local_estimates: list[npt.NDArray[np.uint8]]
    p_hat: npt.NDArray[np.float64]
    global_outcome: DecodeOutcome
    m_l: float
    m_g: int
    col_maps: list[npt.NDArray[np.int64]] = field(default_factory=list, repr=False)

    @property
    def I_g(self) -> int:
        return self.global_outcome.iterations

    @property
    def I_l_total(self) -> int:
        return int(self.local_iterations.sum())

    @property
    def I_l_max(self) -> int:
        """Longest single local decode (the wall-clock view of parallel Phase 1)."""
        return int(self.local_iterations.max()) if self.local_iterations.size else 0


def normalized_iterations(trace: LeadTrace | None = None, *, I_g=None, I_l_total=None, m_l=None, m_g=None) -> float:
    """Global iterations plus local iterations weighted by ``m_l / m_g``.

    Accepts a trace or the four quantities as keywords.
    """
    if trace is not None:
        I_g, I_l_total, m_l, m_g = trace.I_g, trace.I_l_total, trace.m_l, trace.m_g
    if m_g is None or m_g <= 0:
        raise ValueError("m_g must be positive")
    return I_g + I_l_total * (m_l / m_g)


class _LocalDecoder(Protocol):
    def decode(self, s: npt.ArrayLike, prior: Prior) -> DecodeOutcome: ...


@dataclass(frozen=True)
class _View:
    vertex_id: str
    hv: BitMatrix
    col_map: npt.NDArray[np.int64]
    rows: npt.NDArray[np.int64]


class LeadDecoder:
    """LEAD bound to one check matrix and its view cover.

    ``local_factory`` builds the per-view decoder from ``(hv, cfg)``; it exists
    so tests can substitute stubbed local outputs.  ``executor`` (optional)
    runs Phase 1 concurrently; results are always reduced in view order.
    Not safe for concurrent calls: decoders hold scratch buffers.
    """

    def __init__(
        self,
        h: BitMatrix,
        cover: ViewCover,
        cfg: LeadConfig | None = None,
        *,
        local_factory: Callable[[BitMatrix, DecoderConfig], _LocalDecoder] | None = None,
        executor: Executor | None = None,
    ) -> None:
        self.cfg = cfg or LeadConfig()
        self.h = h
        self.cover = cover
        factory = local_factory or Decoder
        self.views: list[_View] = []
        self.locals: list[_LocalDecoder] = []
        for i, group in enumerate(cover.groups):
            hv, col_map = extract_view(h, cover, i)
            self.views.append(
                _View(group.vertex_id, hv, np.asarray(col_map, dtype=np.int64), np.asarray(group.rows, dtype=np.int64))
            )
            self.locals.append(factory(hv, self.cfg.local))
        self.global_decoder = Decoder(h, self.cfg.global_cfg)
        self.m_g = h.rows
        self.m_l = float(np.mean([v.hv.rows for v in self.views])) if self.views else 0.0
        self.executor = executor

    def _local(self, i: int, s: npt.NDArray[np.uint8], probs: npt.NDArray[np.float64]):
        view = self.views[i]
        sv = s[view.rows]
        prior = Prior(probs[view.col_map], self.cfg.clamp_eps)
        out = self.locals[i].decode(sv, prior)
        boosted = boost_confidence(out.posterior, out.estimate, out.converged, self.cfg.boost_floor)
        return out, boosted

    def decode(self, s: npt.ArrayLike, channel_prior: Prior | npt.ArrayLike | float) -> tuple[DecodeOutcome, LeadTrace]:
        s = as_bits(s)
        n = self.h.cols
        if s.size != self.h.rows:
            raise ValueError(f"syndrome has length {s.size}, matrix has {self.h.rows} rows")
        if np.isscalar(channel_prior):
            probs = np.full(n, float(channel_prior))
        else:
            probs = np.asarray(channel_prior.probs if isinstance(channel_prior, Prior) else channel_prior, dtype=np.float64)
        if probs.size != n:
            raise ValueError(f"prior has length {probs.size}, expected {n}")

        # Phase 1
        idx = range(len(self.views))
        if self.executor is not None:
            results = list(self.executor.map(lambda i: self._local(i, s, probs), idx))
        else:
            results = [self._local(i, s, probs) for i in idx]

        # Phase 2
        p_hat = aggregate(
            [(v.col_map, boosted) for v, (_, boosted) in zip(self.views, results)],
            n,
            self.cfg.alpha,
            self.cfg.clamp_eps,
            fallback=probs,
        )

        # Phase 3
        outcome = self.global_decoder.decode(s, p_hat)
        trace = LeadTrace(
            view_ids=[v.vertex_id for v in self.views],
            local_converged=np.array([o.converged for o, _ in results], dtype=bool),
            local_iterations=np.array([o.iterations for o, _ in results], dtype=np.int64),
            local_estimates=[o.estimate for o, _ in results],
            p_hat=p_hat.probs,
            global_outcome=outcome,
            m_l=self.m_l,
            m_g=self.m_g,
            col_maps=[v.col_map for v in self.views],
        )
        return outcome, trace


def lead_decode(
    code: TannerCode,
    side: str,
    s: npt.ArrayLike,
    channel_prior: Prior | npt.ArrayLike | float,
    cfg: LeadConfig | None = None,
) -> tuple[DecodeOutcome, LeadTrace]:
    """One-shot LEAD decode of a Z-error (``side="z"``) or X-error syndrome."""
    h, cover = code.checks(side)
    return LeadDecoder(h, cover, cfg).decode(s, channel_prior)
