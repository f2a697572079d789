"""Command-line front end.

Exit codes: 0 success, 1 runtime error, 2 construction error, 3 analysis
mismatch, 4 configuration or argument error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path
from typing import Any

import numpy as np

from qtanner.codes import BUILTIN_CODES
from qtanner.complex import ConstructionError, parse_group, validate
from qtanner.decode import Decoder, DecoderConfig
from qtanner.harness import (
    BASELINES,
    ExperimentSpec,
    ResultStore,
    _component,
    delta_log,
    load_code,
    monotonicity_report,
    read_jsonl,
    sweep,
)
from qtanner.lead import PRESETS, LeadDecoder, preset
from qtanner.qtcfile import CodeFileError, export_code, import_code

EXIT_OK, EXIT_RUNTIME, EXIT_CONSTRUCTION, EXIT_MISMATCH, EXIT_CONFIG = 0, 1, 2, 3, 4

log = logging.getLogger("qtanner")


class ConfigError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # argparse exits with 2 by default
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _int_list(text: str) -> list[int]:
    return [int(t) for t in text.split(",") if t.strip()]


def _float_list(text: str) -> list[float]:
    return [float(t) for t in text.split(",") if t.strip()]


# --------------------------------------------------------------------------
# construct / validate / import


def cmd_construct(args: argparse.Namespace) -> int:
    from qtanner.codes import dual
    from qtanner.complex import construct

    try:
        group = parse_group(args.group)
        ca = _component(args.ca)
        cb = _component(args.cb) if args.cb else dual(ca)
    except (ValueError, OSError) as exc:
        raise ConfigError(str(exc)) from None
    if args.delta is not None and args.delta != ca.n:
        raise ConfigError(f"--delta {args.delta} does not match the component length {ca.n}")
    code = construct(group, ca, cb, mode=args.mode, seed=args.seed, a_set=args.A, b_set=args.B)
    report = validate(code)
    if not report.css_ok:
        print("\n".join(report.lines()), file=sys.stderr)
        return EXIT_CONSTRUCTION
    out = args.out or f"{args.group.replace(':', '')}_{args.ca}_{args.mode}_s{args.seed}.qtc"
    export_code(code, out)
    weights = np.concatenate([code.hx.row_weights(), code.hz.row_weights()])
    print(f"wrote {out}")
    print(f"n={code.n} k={report.k} A={code.meta['A']} B={code.meta['B']}")
    print(f"row weights: min={weights.min()} max={weights.max()} mean={weights.mean():.2f}")
    return EXIT_OK


def cmd_validate(args: argparse.Namespace) -> int:
    code = import_code(args.code)
    report = validate(code)
    print("\n".join(report.lines()))
    return EXIT_OK if report.css_ok else EXIT_CONSTRUCTION


def cmd_import(args: argparse.Namespace) -> int:
    code = import_code(args.src)
    report = validate(code)
    if not report.css_ok:
        print("\n".join(report.lines()), file=sys.stderr)
        return EXIT_CONSTRUCTION
    out = args.out or str(Path(args.src).with_suffix(".qtc"))
    export_code(code, out)
    print(f"wrote {out} (n={code.n} k={report.k}, {len(code.cover_x)} X views, {len(code.cover_z)} Z views)")
    return EXIT_OK


# --------------------------------------------------------------------------
# experiments


def _spec_from_args(args: argparse.Namespace) -> ExperimentSpec:
    data: dict[str, Any] = {}
    if args.config:
        try:
            data = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
    if "workers" not in data and os.environ.get("QTANNER_WORKERS"):
        try:
            data["workers"] = int(os.environ["QTANNER_WORKERS"])
        except ValueError:
            raise ConfigError("QTANNER_WORKERS must be an integer") from None
    overrides = {
        "p_grid": args.p,
        "master_seed": args.seed,
        "workers": args.workers,
        "decoder": args.decoder,
        "alpha": args.alpha,
        "max_trials": args.max_trials,
        "min_failures": args.min_failures,
        "batch_size": args.batch_size,
        "code_id": args.code_id,
    }
    data.update({k: v for k, v in overrides.items() if v is not None})
    if args.code:
        data["code"] = {"path": args.code}
    if "code" not in data:
        raise ConfigError("no code given (use --code or a config file with a 'code' entry)")
    try:
        return ExperimentSpec.from_dict(data)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def _print_table(records) -> None:
    print(f"{'p':>8} {'trials':>8} {'fail':>6} {'LER':>10} {'95% CI':>23} {'iters':>8} {'subFER':>8}")
    for r in records:
        sub = "-" if r.subcode_fer is None else f"{r.subcode_fer:.4f}"
        print(
            f"{r.p:>8.4g} {r.trials:>8d} {r.failures:>6d} {r.ler:>10.3e} "
            f"[{r.ci_lo:.3e}, {r.ci_hi:.3e}] {r.avg_normalized_iterations:>8.2f} {sub:>8}"
        )


def cmd_simulate(args: argparse.Namespace) -> int:
    spec = _spec_from_args(args)
    if args.dump_config:
        print(json.dumps(spec.to_dict(), indent=2, sort_keys=True))
        return EXIT_OK
    try:
        load_code(spec.code)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot load code: {exc}") from None
    stem = args.stem or f"{spec.label}_{spec.decoder}"
    store = ResultStore(args.out, stem)
    result = sweep(spec, store=store, force=args.force)
    _print_table(result.records)
    print(f"results: {store.jsonl} {store.csv}")
    if args.command == "sweep":
        for note in monotonicity_report(result.records):
            print(f"sanity: {note}")
    for p, msg in result.errors:
        print(f"point p={p!r} failed: {msg}", file=sys.stderr)
    return EXIT_RUNTIME if result.errors else EXIT_OK


def cmd_analyze(args: argparse.Namespace) -> int:
    try:
        base = read_jsonl(args.baseline)
        lead = read_jsonl(args.lead)
    except (OSError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    try:
        gains = delta_log(base, lead)
    except ValueError as exc:
        print(f"analysis mismatch: {exc}", file=sys.stderr)
        return EXIT_MISMATCH
    lines = ["p,delta_log,subcode_fer"]
    for g in gains:
        dl = "inf?" if g.flagged else repr(g.delta_log)
        sub = "" if g.subcode_fer is None else repr(g.subcode_fer)
        lines.append(f"{g.p!r},{dl},{sub}")
        if g.flagged:
            verdict = "zero failures on one side; gain not extrapolated"
        elif g.delta_log > 0:
            verdict = "LEAD better"
        elif g.delta_log < 0:
            verdict = "LEAD worse"
        else:
            verdict = "no change"
        print(f"p={g.p:g}: delta_log={dl if g.flagged else f'{g.delta_log:+.4f}'} ({verdict})")
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _read_bits(path: str) -> np.ndarray:
    text = Path(path).read_text(encoding="utf-8")
    bits = [c for c in text if c in "01"]
    if any(c not in "01, \t\r\n" for c in text):
        raise ConfigError(f"{path}: syndrome file may only contain 0/1 digits and separators")
    return np.array([int(b) for b in bits], dtype=np.uint8)


def cmd_decode_one(args: argparse.Namespace) -> int:
    code = import_code(args.code)
    h, cover = code.checks(args.side)
    s = _read_bits(args.syndrome)
    if s.size != h.rows:
        raise ConfigError(f"syndrome has {s.size} bits, the {args.side} checks have {h.rows} rows")
    prior = 2.0 * args.p / 3.0
    if args.decoder in PRESETS:
        out, trace = LeadDecoder(h, cover, preset(args.decoder, alpha=args.alpha)).decode(s, prior)
        print(f"local views converged: {int(trace.local_converged.sum())}/{trace.local_converged.size}")
    else:
        out = Decoder(h, BASELINES[args.decoder]).decode(s, prior)
    print(f"converged: {out.converged} iterations: {out.iterations}")
    print("estimate:", " ".join(str(i) for i in np.flatnonzero(out.estimate)) or "-")
    return EXIT_OK if out.converged else EXIT_RUNTIME


# --------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="qtanner", description="Quantum Tanner code construction and LEAD decoding.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("construct", help="build a code from a group and component codes")
    p.add_argument("--group", required=True, help="cyclic:N, dihedral:N or table:PATH")
    p.add_argument("--delta", type=int, help="generator set size (must match the component length)")
    p.add_argument("--ca", default="rep3", help=f"builtin ({', '.join(BUILTIN_CODES)}) or file:PATH:NAME")
    p.add_argument("--cb", help="defaults to the dual of --ca")
    p.add_argument("--mode", choices=("tuple", "quotient"), default="tuple")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--A", type=_int_list, help="comma-separated element indices (sampled if absent)")
    p.add_argument("--B", type=_int_list)
    p.add_argument("--out", help="output .qtc path")
    p.set_defaults(func=cmd_construct)

    p = sub.add_parser("validate", help="check a code file and print its parameters")
    p.add_argument("code")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("import", help="read a code file and write it back canonically")
    p.add_argument("src")
    p.add_argument("--out")
    p.set_defaults(func=cmd_import)

    for name in ("simulate", "sweep"):
        p = sub.add_parser(name, help="Monte Carlo LER over a p grid" + (" with a sanity report" if name == "sweep" else ""))
        p.add_argument("--config", help="JSON experiment file")
        p.add_argument("--code", help=".qtc file (overrides the config's code entry)")
        p.add_argument("--code-id")
        p.add_argument("--p", type=_float_list, help="comma-separated error rates")
        p.add_argument("--seed", type=int)
        p.add_argument("--workers", type=int)
        p.add_argument("--decoder", choices=sorted(BASELINES) + sorted(PRESETS))
        p.add_argument("--alpha", type=float)
        p.add_argument("--max-trials", type=int)
        p.add_argument("--min-failures", type=int)
        p.add_argument("--batch-size", type=int)
        p.add_argument("--out", default="results", help="output directory")
        p.add_argument("--stem", help="result file name stem")
        p.add_argument("--force", action="store_true", help="rerun points already in the results file")
        p.add_argument("--dump-config", action="store_true", help="print the merged config and exit")
        p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("analyze", help="delta_log gains of a LEAD run over a baseline run")
    p.add_argument("baseline")
    p.add_argument("lead")
    p.add_argument("--out", help="write the gain CSV here instead of stdout")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("decode-one", help="decode a single syndrome read from a file")
    p.add_argument("--code", required=True)
    p.add_argument("--syndrome", required=True, help="file of 0/1 digits")
    p.add_argument("--side", choices=("x", "z"), default="z", help="error type to decode")
    p.add_argument("--p", type=float, default=0.01)
    p.add_argument("--decoder", choices=sorted(BASELINES) + sorted(PRESETS), default="lead-bl-bo")
    p.add_argument("--alpha", type=float, default=1.0)
    p.set_defaults(func=cmd_decode_one)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CodeFileError as exc:
        print(f"code file error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConstructionError as exc:
        print(f"construction error: {exc}", file=sys.stderr)
        return EXIT_CONSTRUCTION
    except (OSError, RuntimeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
