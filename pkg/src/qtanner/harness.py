"""Monte Carlo logical-error-rate experiments.

Trials are grouped in fixed-size batches.  Batch ``b`` always holds trials
``b*B .. (b+1)*B - 1`` and each trial draws its error from its own seeded
stream, so the early-stop decision (taken after whole batches, in batch order)
and every statistic are independent of the number of workers.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import os
import time
from collections.abc import Callable, Iterable, Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any

import numpy as np
import numpy.typing as npt

from qtanner.channel import (
    DECODE_FAILURE,
    LOGICAL_FAILURE,
    SUCCESS,
    Classifier,
    sample_depolarizing,
    trial_rng,
)
from qtanner.codes import LinearCode, builtin, dual
from qtanner.complex import TannerCode, construct, parse_group
from qtanner.decode import Decoder, DecoderConfig, Prior
from qtanner.lead import PRESETS, LeadConfig, LeadDecoder, LeadTrace, normalized_iterations, preset

__all__ = [
    "BASELINES",
    "CSV_COLUMNS",
    "ExperimentSpec",
    "GainRecord",
    "ResultStore",
    "RunRecord",
    "RunResult",
    "TrialRunner",
    "delta_log",
    "delta_log_value",
    "load_code",
    "monotonicity_report",
    "run_point",
    "subcode_fer",
    "sweep",
    "view_frame_errors",
    "wilson",
]

log = logging.getLogger(__name__)

Z95 = 1.959963984540054

BASELINES = {
    "bp-osd": DecoderConfig(post="osd_cs", order=3),
    "bp-lsd": DecoderConfig(post="lsd_cs", order=3),
}

CSV_COLUMNS = ("code", "decoder", "p", "trials", "failures", "ler", "ci_lo", "ci_hi", "iters", "subcode_fer")


# --------------------------------------------------------------------------
# statistics


def wilson(failures: int, trials: int, z: float = Z95) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if trials <= 0:
        return 0.0, 1.0
    if not 0 <= failures <= trials:
        raise ValueError("failures must lie in [0, trials]")
    phat = failures / trials
    z2 = z * z
    denom = 1.0 + z2 / trials
    centre = (phat + z2 / (2 * trials)) / denom
    half = z * math.sqrt(phat * (1 - phat) / trials + z2 / (4 * trials * trials)) / denom
    lo = 0.0 if failures == 0 else max(0.0, centre - half)
    hi = 1.0 if failures == trials else min(1.0, centre + half)
    return lo, hi


def delta_log_value(baseline_ler: float, lead_ler: float) -> float | None:
    """``log10(baseline) - log10(lead)``; None when either rate is zero."""
    if baseline_ler <= 0 or lead_ler <= 0:
        return None
    return math.log10(baseline_ler) - math.log10(lead_ler)


# --------------------------------------------------------------------------
# specs and records


@dataclass(frozen=True)
class ExperimentSpec:
    """One experiment: a code, a decoder and a grid of error rates.

    ``code`` is either ``{"path": "file.qtc"}`` or construction parameters
    ``{"group": "cyclic:4", "ca": "rep3", "cb": null, "mode": "tuple",
    "seed": 7, "A": [...], "B": [...]}`` (``cb`` defaults to the dual of
    ``ca``; ``A``/``B`` are sampled from ``seed`` when absent).
    ``decoder`` is ``bp-osd``, ``bp-lsd`` or a LEAD preset name; ``lead``
    optionally overrides the full LEAD config.
    """

    code: dict[str, Any]
    decoder: str = "lead-bl-bo"
    p_grid: tuple[float, ...] = (0.01,)
    max_trials: int = 10_000
    min_failures: int = 100
    master_seed: int = 0
    workers: int = 1
    alpha: float = 1.0
    lead: dict[str, Any] | None = None
    batch_size: int = 200
    code_id: str | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "p_grid", tuple(float(p) for p in self.p_grid))
        if not self.p_grid:
            raise ValueError("p_grid must not be empty")
        for p in self.p_grid:
            if not 0.0 <= p < 1.0:
                raise ValueError(f"p_grid entries must lie in [0, 1), got {p}")
        if self.max_trials < 1:
            raise ValueError("max_trials must be at least 1")
        if self.min_failures < 1:
            raise ValueError("min_failures must be at least 1")
        if self.workers < 1:
            raise ValueError("workers must be at least 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be at least 1")
        if self.decoder not in BASELINES and self.decoder not in PRESETS:
            raise ValueError(f"unknown decoder {self.decoder!r}; choose from {sorted(BASELINES) + sorted(PRESETS)}")
        if not isinstance(self.code, dict) or not ("path" in self.code or "group" in self.code):
            raise ValueError("code must give either 'path' or construction parameters with 'group'")
        self.lead_config()  # validate

    @property
    def is_lead(self) -> bool:
        return self.decoder in PRESETS

    def lead_config(self) -> LeadConfig | None:
        if not self.is_lead:
            return None
        if self.lead is not None:
            return LeadConfig.from_dict(self.lead)
        return preset(self.decoder, alpha=self.alpha)

    @property
    def label(self) -> str:
        if self.code_id:
            return self.code_id
        if "path" in self.code:
            return Path(self.code["path"]).stem
        c = self.code
        return f"{c['group']}-{c.get('ca', 'rep3')}-{c.get('mode', 'tuple')}-s{c.get('seed', 0)}"

    @property
    def decoder_label(self) -> str:
        if not self.is_lead:
            return self.decoder
        return f"{self.decoder}@alpha={self.lead_config().alpha!r}"

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["p_grid"] = list(self.p_grid)
        return d

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> ExperimentSpec:
        unknown = set(data) - {f.name for f in fields(cls)}
        if unknown:
            raise ValueError(f"unknown experiment keys: {sorted(unknown)}")
        return cls(**data)


@dataclass
class RunRecord:
    """Statistics for one (code, decoder, p) point."""

    code: str
    decoder: str
    p: float
    seed: int
    trials: int
    failures: int
    failures_x: int
    failures_z: int
    logical_x: int
    logical_z: int
    decode_fail_x: int
    decode_fail_z: int
    ler: float
    ci_lo: float
    ci_hi: float
    avg_normalized_iterations: float
    avg_global_iterations: float
    subcode_fer: float | None
    max_trials: int
    min_failures: int
    wall_time: float = field(default=0.0, compare=False)

    def key(self) -> tuple:
        return (self.code, self.decoder, self.p, self.seed, self.max_trials, self.min_failures)

    def to_json(self) -> str:
        d = asdict(self)
        d.pop("wall_time")
        return json.dumps(d, sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> RunRecord:
        d = dict(d)
        d.setdefault("wall_time", 0.0)
        return cls(**{f.name: d[f.name] for f in fields(cls)})

    def csv_row(self) -> list[str]:
        sub = "" if self.subcode_fer is None else repr(self.subcode_fer)
        return [
            self.code,
            self.decoder,
            repr(self.p),
            str(self.trials),
            str(self.failures),
            repr(self.ler),
            repr(self.ci_lo),
            repr(self.ci_hi),
            repr(self.avg_normalized_iterations),
            sub,
        ]


@dataclass
class RunResult:
    records: list[RunRecord] = field(default_factory=list)
    errors: list[tuple[float, str]] = field(default_factory=list)

    def by_p(self) -> dict[float, RunRecord]:
        return {r.p: r for r in self.records}

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in self.records:
            w.writerow(r.csv_row())
        return buf.getvalue()


@dataclass(frozen=True)
class GainRecord:
    code: str
    p: float
    baseline_ler: float
    lead_ler: float
    delta_log: float | None
    subcode_fer: float | None = None

    @property
    def flagged(self) -> bool:
        """Zero-failure point: the gain is unbounded and not extrapolated."""
        return self.delta_log is None


# --------------------------------------------------------------------------
# code loading and trial execution


def _component(name: str) -> LinearCode:
    if name.startswith("file:"):
        from qtanner.qtcfile import import_code

        _, path, key = name.split(":", 2) if name.count(":") >= 2 else (*name.split(":", 1), "ca")
        mats = import_code(path).classical
        if key not in mats:
            raise ValueError(f"{path} has no CLASSICAL entry {key!r}")
        return LinearCode.from_check(mats[key], key)
    return builtin(name)


def load_code(code_spec: dict[str, Any]) -> TannerCode:
    """Build or read the code described by an experiment's ``code`` entry."""
    if "path" in code_spec:
        from qtanner.qtcfile import import_code

        return import_code(code_spec["path"])
    ca = _component(code_spec.get("ca", "rep3"))
    cb = _component(code_spec["cb"]) if code_spec.get("cb") else dual(ca)
    return construct(
        parse_group(code_spec["group"]),
        ca,
        cb,
        mode=code_spec.get("mode", "tuple"),
        seed=code_spec.get("seed", 0),
        a_set=code_spec.get("A"),
        b_set=code_spec.get("B"),
    )


@dataclass
class _TrialStats:
    verdict_x: str
    verdict_z: str
    norm_iters: float
    global_iters: float
    view_errors: int
    views: int


def view_frame_errors(trace: LeadTrace, e: npt.NDArray[np.uint8]) -> tuple[int, int]:
    """Views whose local estimate differs from the true error restricted to the view.

    Returns ``(frame_errors, views)``.  Matching the local syndrome is not
    enough: a wrong local codeword offset still counts as an error.
    """
    bad = sum(not np.array_equal(est, e[cmap]) for cmap, est in zip(trace.col_maps, trace.local_estimates))
    return int(bad), len(trace.local_estimates)


class TrialRunner:
    """Decoders for both error components of one code, reused across trials."""

    def __init__(self, code: TannerCode, spec: ExperimentSpec) -> None:
        self.code = code
        self.spec = spec
        self.classifier = Classifier(code)
        lead_cfg = spec.lead_config()
        self.decoders: dict[str, Any] = {}
        for side in ("x", "z"):
            h, cover = code.checks(side)
            if lead_cfg is not None:
                self.decoders[side] = LeadDecoder(h, cover, lead_cfg)
            else:
                self.decoders[side] = Decoder(h, BASELINES[spec.decoder])

    def run(self, p: float, trial: int) -> _TrialStats:
        n = self.code.n
        err = sample_depolarizing(n, p, trial_rng(self.spec.master_seed, p, trial))
        prior = Prior.uniform(n, 2.0 * p / 3.0)
        verdicts = {}
        norm = glob = 0.0
        view_errors = views = 0
        for side, e in (("x", err.ex), ("z", err.ez)):
            h, _ = self.code.checks(side)
            s = h.mul_dense(e)
            dec = self.decoders[side]
            if isinstance(dec, LeadDecoder):
                out, trace = dec.decode(s, prior)
                norm += normalized_iterations(trace)
                bad, total = view_frame_errors(trace, e)
                view_errors += bad
                views += total
            else:
                out = dec.decode(s, prior)
                norm += out.iterations
            glob += out.iterations
            verdict = self.classifier.classify(side, out.estimate ^ e)
            if out.converged and verdict == DECODE_FAILURE:
                raise AssertionError("converged estimate left a nonzero syndrome")
            verdicts[side] = verdict
        return _TrialStats(verdicts["x"], verdicts["z"], norm / 2.0, glob / 2.0, view_errors, views)

    def run_batch(self, p: float, batch: int, size: int, limit: int) -> list[_TrialStats]:
        start = batch * size
        return [self.run(p, t) for t in range(start, min(start + size, limit))]


_WORKER: TrialRunner | None = None


def _init_worker(spec_dict: dict[str, Any]) -> None:
    global _WORKER
    spec = ExperimentSpec.from_dict(spec_dict)
    _WORKER = TrialRunner(load_code(spec.code), spec)


def _worker_batch(p: float, batch: int, size: int, limit: int) -> list[_TrialStats]:
    assert _WORKER is not None
    return _WORKER.run_batch(p, batch, size, limit)


def _summarize(spec: ExperimentSpec, p: float, stats: list[_TrialStats], wall: float) -> RunRecord:
    trials = len(stats)
    fx = sum(t.verdict_x != SUCCESS for t in stats)
    fz = sum(t.verdict_z != SUCCESS for t in stats)
    failures = sum(t.verdict_x != SUCCESS or t.verdict_z != SUCCESS for t in stats)
    lo, hi = wilson(failures, trials)
    views = sum(t.views for t in stats)
    sub = (sum(t.view_errors for t in stats) / views if views else 0.0) if spec.is_lead else None
    return RunRecord(
        code=spec.label,
        decoder=spec.decoder_label,
        p=p,
        seed=spec.master_seed,
        trials=trials,
        failures=failures,
        failures_x=fx,
        failures_z=fz,
        logical_x=sum(t.verdict_x == LOGICAL_FAILURE for t in stats),
        logical_z=sum(t.verdict_z == LOGICAL_FAILURE for t in stats),
        decode_fail_x=sum(t.verdict_x == DECODE_FAILURE for t in stats),
        decode_fail_z=sum(t.verdict_z == DECODE_FAILURE for t in stats),
        ler=failures / trials,
        ci_lo=lo,
        ci_hi=hi,
        avg_normalized_iterations=math.fsum(t.norm_iters for t in stats) / trials,
        avg_global_iterations=math.fsum(t.global_iters for t in stats) / trials,
        subcode_fer=sub,
        max_trials=spec.max_trials,
        min_failures=spec.min_failures,
        wall_time=wall,
    )


def _batches(spec: ExperimentSpec) -> int:
    return -(-spec.max_trials // spec.batch_size)


def _collect(spec: ExperimentSpec, p: float, batch_iter: Iterable[list[_TrialStats]]) -> list[_TrialStats]:
    stats: list[_TrialStats] = []
    failures = 0
    for batch in batch_iter:
        stats.extend(batch)
        failures += sum(t.verdict_x != SUCCESS or t.verdict_z != SUCCESS for t in batch)
        if failures >= spec.min_failures:
            break
    return stats


def _run_point_with(spec: ExperimentSpec, p: float, runner: TrialRunner | None, pool: ProcessPoolExecutor | None) -> RunRecord:
    t0 = time.perf_counter()
    nb = _batches(spec)
    size = spec.batch_size
    if pool is None:
        assert runner is not None
        batch_iter = (runner.run_batch(p, b, size, spec.max_trials) for b in range(nb))
        stats = _collect(spec, p, batch_iter)
    else:
        stats = _collect(spec, p, _pool_batches(pool, spec, p, nb))
    return _summarize(spec, p, stats, time.perf_counter() - t0)


def _pool_batches(pool: ProcessPoolExecutor, spec: ExperimentSpec, p: float, nb: int):
    # keep a bounded window of batches in flight and yield them in order
    window = 2 * spec.workers
    pending = {}
    nxt = 0
    try:
        for b in range(nb):
            while nxt < nb and nxt < b + window:
                pending[nxt] = pool.submit(_worker_batch, p, nxt, spec.batch_size, spec.max_trials)
                nxt += 1
            yield pending.pop(b).result()
    finally:
        for fut in pending.values():
            fut.cancel()


def run_point(spec: ExperimentSpec, p: float) -> RunRecord:
    """Run trials at one error rate until ``max_trials`` or ``min_failures``."""
    result = sweep(spec, p_grid=(p,))
    if result.errors:
        raise RuntimeError(result.errors[0][1])
    return result.records[0]


def subcode_fer(spec: ExperimentSpec, p: float) -> float:
    """Fraction of local views whose estimate differs from the true restricted error."""
    if not spec.is_lead:
        raise ValueError("subcode FER is only defined for LEAD decoders")
    rec = run_point(spec, p)
    assert rec.subcode_fer is not None
    return rec.subcode_fer


# --------------------------------------------------------------------------
# persistence


class ResultStore:
    """Append-only JSONL results with CSV export and a wall-time sidecar.

    Wall times live in ``<stem>.timing.jsonl`` so the main files stay
    byte-identical between equal-seed runs.
    """

    def __init__(self, out_dir: str | os.PathLike, stem: str = "results") -> None:
        self.dir = Path(out_dir)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.jsonl = self.dir / f"{stem}.jsonl"
        self.csv = self.dir / f"{stem}.csv"
        self.timing = self.dir / f"{stem}.timing.jsonl"

    def load(self) -> list[RunRecord]:
        return read_jsonl(self.jsonl) if self.jsonl.exists() else []

    def completed(self) -> set[tuple]:
        return {r.key() for r in self.load()}

    def append(self, rec: RunRecord) -> None:
        with open(self.jsonl, "a", encoding="utf-8", newline="\n") as fh:
            fh.write(rec.to_json() + "\n")
        with open(self.timing, "a", encoding="utf-8", newline="\n") as fh:
            fh.write(json.dumps({"code": rec.code, "decoder": rec.decoder, "p": rec.p, "wall_time": rec.wall_time}) + "\n")

    def write_csv(self) -> None:
        self.csv.write_text(RunResult(self.load()).to_csv(), encoding="utf-8")


def read_jsonl(path: str | os.PathLike) -> list[RunRecord]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                out.append(RunRecord.from_dict(json.loads(line)))
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise ValueError(f"{path}:{lineno}: bad result record ({exc})") from None
    return out


# --------------------------------------------------------------------------
# sweeps and analysis


def sweep(
    spec: ExperimentSpec,
    *,
    store: ResultStore | None = None,
    force: bool = False,
    p_grid: Sequence[float] | None = None,
    progress: Callable[[RunRecord], None] | None = None,
) -> RunResult:
    """Run every grid point, streaming records to ``store`` as they finish.

    Points already in the store are skipped (and returned) unless ``force``.
    A failing point is logged in ``RunResult.errors`` and the sweep goes on.
    """
    grid = tuple(float(p) for p in (p_grid if p_grid is not None else spec.p_grid))
    result = RunResult()
    existing = {r.key(): r for r in store.load()} if store is not None and not force else {}
    todo = []
    for p in grid:
        key = (spec.label, spec.decoder_label, p, spec.master_seed, spec.max_trials, spec.min_failures)
        if key in existing:
            log.info("skipping completed point p=%r", p)
        todo.append((p, existing.get(key)))

    pool = None
    runner = None
    if any(rec is None for _, rec in todo):
        if spec.workers > 1:
            pool = ProcessPoolExecutor(spec.workers, initializer=_init_worker, initargs=(spec.to_dict(),))
        else:
            runner = TrialRunner(load_code(spec.code), spec)
    try:
        for p, rec in todo:
            if rec is None:
                try:
                    rec = _run_point_with(spec, p, runner, pool)
                except Exception as exc:  # noqa: BLE001 - keep the sweep going
                    log.error("point p=%r failed: %s", p, exc)
                    result.errors.append((p, str(exc)))
                    continue
                if store is not None:
                    store.append(rec)
            result.records.append(rec)
            if progress is not None:
                progress(rec)
    finally:
        if pool is not None:
            pool.shutdown(cancel_futures=True)
    if store is not None:
        store.write_csv()
    return result


def monotonicity_report(records: Sequence[RunRecord]) -> list[str]:
    """Flag grid steps where LER drops as p grows by more than the CIs allow."""
    ordered = sorted(records, key=lambda r: r.p)
    notes = []
    for lo, hi in zip(ordered, ordered[1:]):
        if hi.ci_hi < lo.ci_lo:
            notes.append(
                f"LER decreases from p={lo.p!r} ({lo.ler:.3g}) to p={hi.p!r} ({hi.ler:.3g}) beyond CI overlap"
            )
    return notes


def delta_log(baseline: RunResult | Sequence[RunRecord], lead: RunResult | Sequence[RunRecord]) -> list[GainRecord]:
    """Per-p decimal-log gains of ``lead`` over ``baseline``."""
    base = baseline.records if isinstance(baseline, RunResult) else list(baseline)
    ld = lead.records if isinstance(lead, RunResult) else list(lead)
    base_p = sorted(r.p for r in base)
    lead_p = sorted(r.p for r in ld)
    if base_p != lead_p:
        raise ValueError(f"p grids differ: {base_p} vs {lead_p}")
    codes = {r.code for r in base} | {r.code for r in ld}
    if len(codes) > 1:
        raise ValueError(f"results mix codes: {sorted(codes)}")
    lead_by_p = {r.p: r for r in ld}
    out = []
    for b in sorted(base, key=lambda r: r.p):
        l_rec = lead_by_p[b.p]
        out.append(GainRecord(b.code, b.p, b.ler, l_rec.ler, delta_log_value(b.ler, l_rec.ler), l_rec.subcode_fer))
    return out
