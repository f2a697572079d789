"""Plain-text ``.qtc`` code files.

Layout (UTF-8, ``#`` starts a comment line, blank lines ignored)::

    META
    key=value            one per line; ``n`` is required
    HX
    0 5 17               one check row per line, sorted column indices; ``-`` = empty row
    HZ
    ...
    COVER_X
    vertex_id : 0 1      row indices owned by the vertex
    COVER_Z
    ...
    CLASSICAL            optional component-code parity checks
    ca n=3 : 0 1 | 1 2   rows separated by ``|``

A missing COVER section falls back to one group per row, with a warning.
Export is canonical: sections in the order above, META keys sorted.
"""

from __future__ import annotations

import logging
import os
from collections.abc import Iterable

from qtanner.complex import TannerCode, ViewCover
from qtanner.gf2 import BitMatrix

__all__ = ["CodeFileError", "dumps", "export_code", "import_code", "loads"]

log = logging.getLogger(__name__)

HEADER = "# qtanner code file v1"
_SECTIONS = ("META", "HX", "HZ", "COVER_X", "COVER_Z", "CLASSICAL")


class CodeFileError(ValueError):
    """Malformed code file; the message carries the offending line number."""

    def __init__(self, lineno: int | None, msg: str) -> None:
        self.lineno = lineno
        super().__init__(f"line {lineno}: {msg}" if lineno is not None else msg)


def _fmt_row(idx: Iterable[int]) -> str:
    text = " ".join(str(i) for i in idx)
    return text or "-"


def dumps(code: TannerCode) -> str:
    lines = [HEADER, "META"]
    meta = dict(code.meta)
    meta["n"] = str(code.n)
    for key in sorted(meta):
        value = str(meta[key])
        if "\n" in value or "=" in key or not key.strip():
            raise ValueError(f"meta entry {key!r} cannot be written")
        lines.append(f"{key}={value}")
    for name, h in (("HX", code.hx), ("HZ", code.hz)):
        lines.append(name)
        lines.extend(_fmt_row(r) for r in h.supports())
    for name, cover in (("COVER_X", code.cover_x), ("COVER_Z", code.cover_z)):
        lines.append(name)
        for grp in cover:
            lines.append(f"{grp.vertex_id} : {_fmt_row(grp.rows)}")
    if code.classical:
        lines.append("CLASSICAL")
        for name in sorted(code.classical):
            h = code.classical[name]
            rows = " | ".join(_fmt_row(r) for r in h.supports())
            lines.append(f"{name} n={h.cols} : {rows}")
    return "\n".join(lines) + "\n"


def export_code(code: TannerCode, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps(code))


def _parse_indices(text: str, lineno: int, limit: int | None, what: str) -> list[int]:
    text = text.strip()
    if text == "-" or not text:
        return []
    try:
        idx = [int(tok) for tok in text.split()]
    except ValueError:
        raise CodeFileError(lineno, f"non-integer entry in {what}") from None
    if len(set(idx)) != len(idx):
        raise CodeFileError(lineno, f"duplicate index in {what}")
    for i in idx:
        if i < 0 or (limit is not None and i >= limit):
            raise CodeFileError(lineno, f"index {i} out of range in {what}")
    return idx


def loads(text: str) -> TannerCode:
    sections: dict[str, list[tuple[int, str]]] = {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line in _SECTIONS:
            if line in sections:
                raise CodeFileError(lineno, f"section {line} appears twice")
            current = line
            sections[current] = []
            continue
        if current is None:
            raise CodeFileError(lineno, "content before the first section header")
        sections[current].append((lineno, line))

    if "META" not in sections:
        raise CodeFileError(None, "missing META section")
    meta: dict[str, str] = {}
    for lineno, line in sections["META"]:
        key, sep, value = line.partition("=")
        if not sep or not key.strip():
            raise CodeFileError(lineno, "expected key=value")
        meta[key.strip()] = value.strip()
    try:
        n = int(meta.pop("n"))
    except KeyError:
        raise CodeFileError(None, "META lacks n") from None
    except ValueError:
        raise CodeFileError(None, "META n is not an integer") from None
    if n < 0:
        raise CodeFileError(None, "META n is negative")

    mats = {}
    for name in ("HX", "HZ"):
        rows = [_parse_indices(line, lineno, n, name) for lineno, line in sections.get(name, [])]
        mats[name] = BitMatrix.from_supports(rows, n)

    covers = {}
    for name, h in (("COVER_X", mats["HX"]), ("COVER_Z", mats["HZ"])):
        if name not in sections:
            log.warning("%s missing; using one group per row", name)
            covers[name] = ViewCover.singletons(h)
            continue
        groups = []
        for lineno, line in sections[name]:
            vid, sep, rest = line.partition(":")
            if not sep or not vid.strip():
                raise CodeFileError(lineno, "expected 'vertex_id : rows'")
            groups.append((vid.strip(), _parse_indices(rest, lineno, h.rows, name), lineno))
        try:
            covers[name] = ViewCover.from_rows(h, [(v, r) for v, r, _ in groups])
        except ValueError as exc:
            raise CodeFileError(groups[-1][2] if groups else None, f"{name}: {exc}") from None

    classical = {}
    for lineno, line in sections.get("CLASSICAL", []):
        head, sep, body = line.partition(":")
        parts = head.split()
        if not sep or len(parts) != 2 or not parts[1].startswith("n="):
            raise CodeFileError(lineno, "expected 'name n=N : row | row ...'")
        try:
            width = int(parts[1][2:])
        except ValueError:
            raise CodeFileError(lineno, "classical length is not an integer") from None
        rows = [_parse_indices(r, lineno, width, "CLASSICAL") for r in body.split("|")]
        classical[parts[0]] = BitMatrix.from_supports(rows, width)

    return TannerCode(mats["HX"], mats["HZ"], covers["COVER_X"], covers["COVER_Z"], meta, classical)


def import_code(path: str | os.PathLike) -> TannerCode:
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read())
