"""Left-right Cayley complexes and quantum Tanner code assembly.

A face ``(g, a, b)`` has corners ``(g,0), (ag,1), (gb,1), (agb,0)``.  Every
corner sees the face at a cell of its local ``Δ×Δ`` array: writing the face as
``{v, a'v, vb', a'vb'}`` for the corner vertex ``v`` gives the cell
``(a', b')``.  Concretely the four corner roles map to

    g   -> (a,    b)
    ag  -> (a^-1, b)
    gb  -> (a,    b^-1)
    agb -> (a^-1, b^-1)

Two face sets are supported.  ``tuple`` keeps all ``|G|Δ²`` triples as
distinct qubits; each vertex then carries two local views, one per corner role
on its side.  ``quotient`` identifies ``(g,a,b)`` with ``(agb, a^-1, b^-1)``
(requires TNC) and gives ``|G|Δ²/2`` qubits with one view per vertex.
"""

from __future__ import annotations

import random
from collections import Counter
from collections.abc import Sequence
from dataclasses import dataclass, field
from math import comb

import numpy as np
import numpy.typing as npt

from qtanner.codes import LinearCode, dual, tensor
from qtanner.gf2 import BitMatrix, as_bits, rank

__all__ = [
    "CayleyComplex",
    "ConstructionError",
    "FiniteGroup",
    "GeneratorSets",
    "TannerCode",
    "ValidationReport",
    "ViewCover",
    "ViewGroup",
    "assemble_css",
    "build_complex",
    "check_tnc",
    "construct",
    "extract_view",
    "local_syndrome",
    "parse_group",
    "sample_symmetric_subset",
    "validate",
]

ROLE_NAMES = ("g", "ag", "gb", "agb")
# corner roles owned by each side, in view order
SIDE_ROLES = {0: (0, 3), 1: (1, 2)}


class ConstructionError(Exception):
    """Raised when a complex or code cannot be built as requested."""


@dataclass(frozen=True)
class FiniteGroup:
    """Finite group given by its multiplication table (``mul[x, y] = xy``)."""

    mul: npt.NDArray[np.int64]
    names: tuple[str, ...] | None = None
    label: str = ""

    def __post_init__(self) -> None:
        mul = np.asarray(self.mul, dtype=np.int64)
        order = mul.shape[0]
        if mul.shape != (order, order) or order == 0:
            raise ValueError("multiplication table must be a non-empty square")
        full = np.arange(order)
        for line in (*mul, *mul.T):
            if not np.array_equal(np.sort(line), full):
                raise ValueError("multiplication table is not a Latin square")
        ident = [e for e in range(order) if np.array_equal(mul[e], full)]
        if not ident or not np.array_equal(mul[:, ident[0]], full):
            raise ValueError("multiplication table has no two-sided identity")
        if order <= 64:
            # associativity is only checked exhaustively for small tables
            left = mul[mul[:, :, None], np.arange(order)[None, None, :]]
            right = mul[np.arange(order)[:, None, None], mul[None, :, :]]
            if not np.array_equal(left, right):
                raise ValueError("multiplication table is not associative")
        mul.flags.writeable = False
        object.__setattr__(self, "mul", mul)
        if self.names is not None and len(self.names) != order:
            raise ValueError("names must label every element")

    @property
    def order(self) -> int:
        return self.mul.shape[0]

    @property
    def identity(self) -> int:
        full = np.arange(self.order)
        return next(e for e in range(self.order) if np.array_equal(self.mul[e], full))

    @property
    def inverse(self) -> npt.NDArray[np.int64]:
        e = self.identity
        return np.argmax(self.mul == e, axis=1)

    def is_abelian(self) -> bool:
        return bool(np.array_equal(self.mul, self.mul.T))

    @classmethod
    def cyclic(cls, m: int) -> FiniteGroup:
        idx = np.arange(m)
        return cls((idx[:, None] + idx[None, :]) % m, label=f"cyclic:{m}")

    @classmethod
    def dihedral(cls, m: int) -> FiniteGroup:
        """Dihedral group of order ``2m``; element ``s*m + k`` is ``r^k s^s``."""
        order = 2 * m
        mul = np.empty((order, order), dtype=np.int64)
        for x in range(order):
            sx, kx = divmod(x, m)
            for y in range(order):
                sy, ky = divmod(y, m)
                # r^kx s^sx r^ky s^sy = r^(kx ± ky) s^(sx+sy)
                k = (kx + (-ky if sx else ky)) % m
                mul[x, y] = ((sx + sy) % 2) * m + k
        return cls(mul, label=f"dihedral:{m}")

    @classmethod
    def from_table_file(cls, path: str) -> FiniteGroup:
        rows = []
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                line = line.split("#", 1)[0].strip()
                if line:
                    rows.append([int(tok) for tok in line.split()])
        return cls(np.array(rows, dtype=np.int64), label=f"table:{path}")


def parse_group(spec: str) -> FiniteGroup:
    """Parse ``cyclic:N``, ``dihedral:N`` or ``table:PATH``."""
    kind, _, arg = spec.partition(":")
    if kind == "cyclic":
        return FiniteGroup.cyclic(int(arg))
    if kind == "dihedral":
        return FiniteGroup.dihedral(int(arg))
    if kind == "table":
        return FiniteGroup.from_table_file(arg)
    raise ValueError(f"unknown group specification {spec!r}")


@dataclass(frozen=True)
class GeneratorSets:
    """Symmetric generating sets ``A`` and ``B`` of equal size Δ."""

    a_set: tuple[int, ...]
    b_set: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "a_set", tuple(int(x) for x in self.a_set))
        object.__setattr__(self, "b_set", tuple(int(x) for x in self.b_set))
        if len(self.a_set) != len(self.b_set):
            raise ValueError("|A| and |B| must be equal")
        for s in (self.a_set, self.b_set):
            if len(set(s)) != len(s):
                raise ValueError("generating sets must not repeat elements")

    @property
    def delta(self) -> int:
        return len(self.a_set)

    def check_against(self, group: FiniteGroup) -> None:
        inv = group.inverse
        for label, s in (("A", self.a_set), ("B", self.b_set)):
            if any(not 0 <= x < group.order for x in s):
                raise ValueError(f"{label} contains an element outside the group")
            if {int(inv[x]) for x in s} != set(s):
                raise ValueError(f"{label} is not closed under inverses")


def sample_symmetric_subset(group: FiniteGroup, size: int, rng: random.Random) -> tuple[int, ...]:
    """Uniformly pick a symmetric subset of the given size, as sorted indices.

    Inverse pairs are sampled as units; self-inverse elements count once.
    """
    inv = group.inverse
    singles = [x for x in range(group.order) if inv[x] == x]
    pairs = [(x, int(inv[x])) for x in range(group.order) if x < inv[x]]
    options = [s for s in range(0, len(singles) + 1) if (size - s) % 2 == 0 and 0 <= (size - s) // 2 <= len(pairs)]
    if not options:
        raise ConstructionError(f"no symmetric subset of size {size} in a group of order {group.order}")
    # weight the split by how many subsets realise it, so the draw is uniform
    weights = [comb(len(singles), s) * comb(len(pairs), (size - s) // 2) for s in options]
    n_single = rng.choices(options, weights=weights)[0]
    chosen = rng.sample(singles, n_single)
    for x, y in rng.sample(pairs, (size - n_single) // 2):
        chosen.extend((x, y))
    return tuple(sorted(chosen))


def check_tnc(group: FiniteGroup, gens: GeneratorSets, cap: int = 10) -> tuple[bool, list[tuple[int, int, int]]]:
    """Total no-conjugacy: ``ag != gb`` for all g, a, b.

    Returns ``(holds, witnesses)`` with at most ``cap`` witnesses ``(g, a, b)``.
    """
    mul = group.mul
    witnesses: list[tuple[int, int, int]] = []
    holds = True
    for g in range(group.order):
        for a in gens.a_set:
            for b in gens.b_set:
                if mul[a, g] == mul[g, b]:
                    holds = False
                    if len(witnesses) < cap:
                        witnesses.append((g, a, b))
    return holds, witnesses


@dataclass(frozen=True)
class LocalView:
    """Faces seen by one (vertex, role) corner, listed in cell order ``i*Δ + j``."""

    vertex_id: str
    side: int
    faces: npt.NDArray[np.int64]


@dataclass(frozen=True)
class CayleyComplex:
    group: FiniteGroup
    gens: GeneratorSets
    mode: str
    faces: npt.NDArray[np.int64]  # (F, 3): g, position of a in A, position of b in B
    views: dict[int, tuple[LocalView, ...]]

    @property
    def delta(self) -> int:
        return self.gens.delta

    @property
    def num_faces(self) -> int:
        return int(self.faces.shape[0])

    def corners(self, face: int) -> list[tuple[int, int]]:
        g, ai, bi = (int(x) for x in self.faces[face])
        a = self.gens.a_set[ai]
        b = self.gens.b_set[bi]
        mul = self.group.mul
        return [(g, 0), (int(mul[a, g]), 1), (int(mul[g, b]), 1), (int(mul[mul[a, g], b]), 0)]

    def vertex_faces(self, vertex: tuple[int, int]) -> list[tuple[int, str]]:
        """Faces incident to ``(g, side)`` with the corner role they occupy."""
        out = []
        for f in range(self.num_faces):
            for role, corner in enumerate(self.corners(f)):
                if corner == vertex:
                    out.append((f, ROLE_NAMES[role]))
        return out


def _orbit_partner(group: FiniteGroup, gens: GeneratorSets, g: int, ai: int, bi: int) -> tuple[int, int, int]:
    inv = group.inverse
    mul = group.mul
    a = gens.a_set[ai]
    b = gens.b_set[bi]
    apos = {x: i for i, x in enumerate(gens.a_set)}
    bpos = {x: i for i, x in enumerate(gens.b_set)}
    return int(mul[mul[a, g], b]), apos[int(inv[a])], bpos[int(inv[b])]


def build_complex(group: FiniteGroup, gens: GeneratorSets, mode: str = "tuple") -> CayleyComplex:
    """Enumerate faces and per-corner local views."""
    gens.check_against(group)
    if mode not in ("tuple", "quotient"):
        raise ValueError(f"unknown face mode {mode!r}")
    delta = gens.delta
    mul = group.mul
    inv = group.inverse
    apos = {x: i for i, x in enumerate(gens.a_set)}
    bpos = {x: i for i, x in enumerate(gens.b_set)}
    a_inv = np.array([apos[int(inv[a])] for a in gens.a_set])
    b_inv = np.array([bpos[int(inv[b])] for b in gens.b_set])

    if mode == "quotient":
        holds, witnesses = check_tnc(group, gens)
        if not holds:
            g, a, b = witnesses[0]
            raise ConstructionError(f"TNC violated: a={a}, g={g}, b={b} gives ag == gb")

    triples = [(g, ai, bi) for g in range(group.order) for ai in range(delta) for bi in range(delta)]
    if mode == "quotient":
        triples = [t for t in triples if t < _orbit_partner(group, gens, *t)]
    faces = np.array(triples, dtype=np.int64).reshape(len(triples), 3)

    # key -> cell array of face indices
    slots: dict[tuple[int, int, int], npt.NDArray[np.int64]] = {}

    def place(side: int, vertex: int, role_slot: int, cell: tuple[int, int], f: int) -> None:
        key = (side, vertex, role_slot)
        arr = slots.setdefault(key, np.full(delta * delta, -1, dtype=np.int64))
        idx = cell[0] * delta + cell[1]
        if arr[idx] != -1:
            raise ConstructionError(f"two faces claim cell {cell} at vertex {vertex} on side {side}")
        arr[idx] = f

    for f, (g, ai, bi) in enumerate(triples):
        a = gens.a_set[ai]
        b = gens.b_set[bi]
        ag = int(mul[a, g])
        gb = int(mul[g, b])
        agb = int(mul[ag, b])
        cells = [(ai, bi), (a_inv[ai], bi), (ai, b_inv[bi]), (a_inv[ai], b_inv[bi])]
        verts = [g, ag, gb, agb]
        for role in range(4):
            side = 0 if role in SIDE_ROLES[0] else 1
            slot = SIDE_ROLES[side].index(role) if mode == "tuple" else 0
            place(side, verts[role], slot, (int(cells[role][0]), int(cells[role][1])), f)

    views: dict[int, tuple[LocalView, ...]] = {}
    for side in (0, 1):
        lst = []
        for key in sorted(k for k in slots if k[0] == side):
            arr = slots[key]
            if (arr < 0).any():
                raise ConstructionError(f"incomplete local view at {key}")
            _, vertex, slot = key
            vid = f"{side}.{vertex}.{slot}" if mode == "tuple" else f"{side}.{vertex}"
            arr.flags.writeable = False
            lst.append(LocalView(vid, side, arr))
        views[side] = tuple(lst)
    faces.flags.writeable = False
    return CayleyComplex(group, gens, mode, faces, views)


@dataclass(frozen=True)
class ViewGroup:
    vertex_id: str
    rows: tuple[int, ...]
    support: tuple[int, ...]


@dataclass(frozen=True)
class ViewCover:
    """Partition of the check rows into vertex-owned groups."""

    groups: tuple[ViewGroup, ...]

    def __len__(self) -> int:
        return len(self.groups)

    def __getitem__(self, v: int) -> ViewGroup:
        return self.groups[v]

    def __iter__(self):
        return iter(self.groups)

    @classmethod
    def from_rows(cls, h: BitMatrix, groups: Sequence[tuple[str, Sequence[int]]]) -> ViewCover:
        """Build a cover from ``(vertex_id, rows)`` pairs, checking the partition."""
        seen: dict[int, str] = {}
        out = []
        dense = h.to_dense()
        ids = set()
        for vid, rows in groups:
            if vid in ids:
                raise ValueError(f"duplicate vertex id {vid!r}")
            ids.add(vid)
            for r in rows:
                if not 0 <= r < h.rows:
                    raise ValueError(f"row {r} out of range for group {vid!r}")
                if r in seen:
                    raise ValueError(f"row {r} appears in groups {seen[r]!r} and {vid!r}")
                seen[r] = vid
            support = np.flatnonzero(dense[list(rows)].any(axis=0)) if rows else np.zeros(0, dtype=np.int64)
            out.append(ViewGroup(vid, tuple(int(r) for r in rows), tuple(int(c) for c in support)))
        if len(seen) != h.rows:
            missing = sorted(set(range(h.rows)) - set(seen))
            raise ValueError(f"rows {missing[:10]} are not assigned to any group")
        return cls(tuple(out))

    @classmethod
    def singletons(cls, h: BitMatrix) -> ViewCover:
        return cls.from_rows(h, [(f"r{i}", (i,)) for i in range(h.rows)])

    def multiplicity(self, n: int) -> npt.NDArray[np.int64]:
        """How many groups contain each qubit in their column support."""
        count = np.zeros(n, dtype=np.int64)
        for grp in self.groups:
            count[list(grp.support)] += 1
        return count


@dataclass(frozen=True)
class TannerCode:
    """CSS code with per-vertex groupings of both check matrices."""

    hx: BitMatrix
    hz: BitMatrix
    cover_x: ViewCover
    cover_z: ViewCover
    meta: dict[str, str] = field(default_factory=dict)
    # parity checks of the component codes, when known (keys "ca", "cb")
    classical: dict[str, BitMatrix] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.hx.cols != self.hz.cols:
            raise ValueError("hx and hz act on different numbers of qubits")

    @property
    def n(self) -> int:
        return self.hx.cols

    @property
    def k(self) -> int:
        return self.n - rank(self.hx) - rank(self.hz)

    def checks(self, side: str) -> tuple[BitMatrix, ViewCover]:
        """Matrix and cover that detect errors of the given Pauli type.

        ``side="z"`` (Z errors) is detected by ``hx``; ``side="x"`` by ``hz``.
        """
        if side == "z":
            return self.hx, self.cover_x
        if side == "x":
            return self.hz, self.cover_z
        raise ValueError(f"side must be 'x' or 'z', got {side!r}")


def assemble_css(cx: CayleyComplex, ca: LinearCode, cb: LinearCode, meta: dict[str, str] | None = None) -> TannerCode:
    """Embed ``C_A⊗C_B`` at side-0 views (Z checks) and ``C_A^⊥⊗C_B^⊥`` at side-1 views (X checks)."""
    delta = cx.delta
    if ca.n != delta or cb.n != delta:
        raise ValueError(f"component codes must have length Δ={delta}, got {ca.n} and {cb.n}")
    local = {0: tensor(ca, cb).gen.to_dense(), 1: tensor(dual(ca), dual(cb)).gen.to_dense()}
    mats = {}
    covers = {}
    n = cx.num_faces
    for side in (0, 1):
        gen = local[side]
        supports = []
        groups = []
        for view in cx.views[side]:
            start = len(supports)
            for word in gen:
                supports.append(sorted(int(f) for f in view.faces[np.flatnonzero(word)]))
            groups.append((view.vertex_id, tuple(range(start, len(supports)))))
        h = BitMatrix.from_supports(supports, n)
        mats[side] = h
        covers[side] = ViewCover.from_rows(h, groups)
    hz, hx = mats[0], mats[1]
    overlap = (hx @ hz.T).to_dense()
    if overlap.any():
        i, j = (int(t) for t in np.argwhere(overlap)[0])
        raise ConstructionError(f"CSS condition violated: hx row {i} and hz row {j} anticommute")
    info = {
        "group": cx.group.label,
        "A": ",".join(map(str, cx.gens.a_set)),
        "B": ",".join(map(str, cx.gens.b_set)),
        "ca": ca.name,
        "cb": cb.name,
        "mode": cx.mode,
    }
    info.update(meta or {})
    return TannerCode(hx, hz, covers[1], covers[0], info, {"ca": ca.check, "cb": cb.check})


def construct(
    group: FiniteGroup,
    ca: LinearCode,
    cb: LinearCode | None = None,
    *,
    mode: str = "tuple",
    seed: int | None = 0,
    a_set: Sequence[int] | None = None,
    b_set: Sequence[int] | None = None,
) -> TannerCode:
    """One-shot construction; missing generator sets are drawn with ``seed``."""
    cb = dual(ca) if cb is None else cb
    rng = random.Random(seed)
    delta = ca.n
    a = tuple(a_set) if a_set is not None else sample_symmetric_subset(group, delta, rng)
    b = tuple(b_set) if b_set is not None else sample_symmetric_subset(group, delta, rng)
    gens = GeneratorSets(a, b)
    cx = build_complex(group, gens, mode)
    return assemble_css(cx, ca, cb, {"seed": "" if seed is None else str(seed)})


@dataclass(frozen=True)
class ValidationReport:
    css_ok: bool
    offending: list[tuple[int, int]]
    n: int
    k: int
    rank_hx: int
    rank_hz: int
    max_row_weight: int
    max_col_weight: int
    multiplicity_x: dict[int, int]
    multiplicity_z: dict[int, int]

    def lines(self) -> list[str]:
        status = "pass" if self.css_ok else f"FAIL (anticommuting rows, e.g. {self.offending[:3]})"
        return [
            f"CSS check: {status}",
            f"n={self.n} k={self.k} rank(hx)={self.rank_hx} rank(hz)={self.rank_hz}",
            f"max row weight={self.max_row_weight} max column weight={self.max_col_weight}",
            f"views per qubit (X cover): {dict(sorted(self.multiplicity_x.items()))}",
            f"views per qubit (Z cover): {dict(sorted(self.multiplicity_z.items()))}",
        ]


def validate(code: TannerCode) -> ValidationReport:
    overlap = (code.hx @ code.hz.T).to_dense()
    bad = [(int(i), int(j)) for i, j in np.argwhere(overlap)[:10]]
    rx, rz = rank(code.hx), rank(code.hz)
    row_w = max([int(h.row_weights().max()) for h in (code.hx, code.hz) if h.rows], default=0)
    col_w = max([int(h.col_weights().max()) for h in (code.hx, code.hz) if h.rows], default=0)
    return ValidationReport(
        css_ok=not bad,
        offending=bad,
        n=code.n,
        k=code.n - rx - rz,
        rank_hx=rx,
        rank_hz=rz,
        max_row_weight=row_w,
        max_col_weight=col_w,
        multiplicity_x=dict(Counter(code.cover_x.multiplicity(code.n).tolist())),
        multiplicity_z=dict(Counter(code.cover_z.multiplicity(code.n).tolist())),
    )


def extract_view(h: BitMatrix, cover: ViewCover, v: int) -> tuple[BitMatrix, npt.NDArray[np.int64]]:
    """Rows of group ``v`` restricted to their column support, plus local->global map."""
    if not 0 <= v < len(cover):
        raise IndexError(f"view index {v} out of range (cover has {len(cover)} groups)")
    grp = cover[v]
    col_map = np.asarray(grp.support, dtype=np.int64)
    dense = h.to_dense()[np.asarray(grp.rows, dtype=np.int64)][:, col_map]
    return BitMatrix.from_dense(dense.reshape(len(grp.rows), col_map.size)), col_map


def local_syndrome(s, cover: ViewCover, v: int) -> npt.NDArray[np.uint8]:
    s = as_bits(s)
    total = sum(len(g.rows) for g in cover)
    if s.size != total:
        raise ValueError(f"syndrome length {s.size} does not match {total} cover rows")
    if not 0 <= v < len(cover):
        raise IndexError(f"view index {v} out of range")
    return s[np.asarray(cover[v].rows, dtype=np.int64)]
