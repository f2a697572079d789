"""Syndrome decoders with soft output.

Belief propagation (min-sum or product-sum, flooding or serial) followed by an
optional post-processor: ordered-statistics (OSD) or localized-statistics
(LSD) cluster decoding.

LLR convention: ``L = ln((1-p)/p)``; positive ``L`` favours "no error".
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Any

import numba
import numpy as np
import numpy.typing as npt

from qtanner.gf2 import BitMatrix, _rref_inplace, as_bits

__all__ = [
    "BpDecoder",
    "DecodeOutcome",
    "Decoder",
    "DecoderConfig",
    "DecodingFailure",
    "Prior",
    "TannerGraph",
    "bp_decode",
    "decode",
    "lsd_postprocess",
    "osd_postprocess",
    "reliability_order",
]

LLR_CLIP = 50.0
_COST_EPS = 1e-15

POST_MODES = ("none", "osd_0", "osd_cs", "osd_e", "lsd_cs")
_OSD_MODE = {"osd_0": 0, "osd_cs": 1, "osd_e": 2}


class DecodingFailure(Exception):
    """Post-processing could not produce a syndrome-matching estimate."""


@dataclass(frozen=True)
class Prior:
    """Per-qubit error probabilities, clamped to ``[eps, 1 - eps]``."""

    probs: npt.NDArray[np.float64]
    eps: float = 1e-9

    def __post_init__(self) -> None:
        if not 0 < self.eps < 0.5:
            raise ValueError("eps must lie in (0, 0.5)")
        p = np.clip(np.asarray(self.probs, dtype=np.float64), self.eps, 1.0 - self.eps)
        if p.ndim != 1 or np.isnan(p).any():
            raise ValueError("prior must be a 1-D vector of probabilities")
        p.flags.writeable = False
        object.__setattr__(self, "probs", p)

    @classmethod
    def uniform(cls, n: int, p: float, eps: float = 1e-9) -> Prior:
        return cls(np.full(n, p, dtype=np.float64), eps)

    def __len__(self) -> int:
        return self.probs.size

    def llr(self) -> npt.NDArray[np.float64]:
        p = self.probs
        return np.clip(np.log1p(-p) - np.log(p), -LLR_CLIP, LLR_CLIP)


def _as_prior(prior: Prior | npt.ArrayLike | float, n: int) -> Prior:
    if isinstance(prior, Prior):
        out = prior
    elif np.isscalar(prior):
        out = Prior.uniform(n, float(prior))
    else:
        out = Prior(np.asarray(prior, dtype=np.float64))
    if len(out) != n:
        raise ValueError(f"prior has length {len(out)}, expected {n}")
    return out


@dataclass(frozen=True)
class DecoderConfig:
    """BP plus post-processing settings.

    ``max_iter="auto"`` means one iteration per column of the decoded matrix.
    ``order`` is the OSD/LSD search order.
    """

    bp_variant: str = "min-sum"
    ms_scale: float = 1.0
    max_iter: int | str = "auto"
    post: str = "osd_cs"
    order: int = 3
    schedule: str = "flooding"

    def __post_init__(self) -> None:
        if self.bp_variant not in ("min-sum", "product-sum"):
            raise ValueError(f"unknown BP variant {self.bp_variant!r}")
        if not 0 < self.ms_scale <= 1:
            raise ValueError("ms_scale must lie in (0, 1]")
        if self.max_iter != "auto" and (not isinstance(self.max_iter, int) or self.max_iter < 0):
            raise ValueError("max_iter must be 'auto' or a non-negative integer")
        if self.post not in POST_MODES:
            raise ValueError(f"unknown post-processor {self.post!r}; choose from {POST_MODES}")
        if not isinstance(self.order, int) or self.order < 0:
            raise ValueError("order must be a non-negative integer")
        if self.schedule not in ("flooding", "serial"):
            raise ValueError(f"unknown schedule {self.schedule!r}")

    def iterations_for(self, ncols: int) -> int:
        return ncols if self.max_iter == "auto" else int(self.max_iter)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> DecoderConfig:
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown decoder config keys: {sorted(unknown)}")
        return cls(**data)


@dataclass(frozen=True)
class DecodeOutcome:
    estimate: npt.NDArray[np.uint8]
    posterior: npt.NDArray[np.float64]
    iterations: int
    converged: bool


class TannerGraph:
    """Check-major edge lists of a parity-check matrix.

    Edge ``e`` in ``chk_ptr[c]:chk_ptr[c+1]`` joins check ``c`` to variable
    ``chk_var[e]``; ``var_edge[var_ptr[v]:var_ptr[v+1]]`` lists the edges of ``v``.
    """

    def __init__(self, h: BitMatrix | npt.ArrayLike) -> None:
        h = h if isinstance(h, BitMatrix) else BitMatrix.from_dense(h)
        dense = h.to_dense()
        self.m, self.n = dense.shape
        rows, cols = np.nonzero(dense)
        self.chk_ptr = np.zeros(self.m + 1, dtype=np.int64)
        np.cumsum(np.bincount(rows, minlength=self.m), out=self.chk_ptr[1:])
        self.chk_var = cols.astype(np.int64)
        self.edge_chk = rows.astype(np.int64)
        by_var = np.argsort(cols, kind="stable")
        self.var_edge = by_var.astype(np.int64)
        self.var_ptr = np.zeros(self.n + 1, dtype=np.int64)
        np.cumsum(np.bincount(cols, minlength=self.n), out=self.var_ptr[1:])
        self.matrix = h

    def syndrome(self, e: npt.NDArray[np.uint8]) -> npt.NDArray[np.uint8]:
        return _csr_syndrome(self.chk_ptr, self.chk_var, np.asarray(e, dtype=np.uint8))


# --------------------------------------------------------------------------
# kernels


@numba.njit(cache=True, nogil=True)
def _csr_syndrome(chk_ptr, chk_var, e):
    m = chk_ptr.size - 1
    out = np.zeros(m, dtype=np.uint8)
    for c in range(m):
        acc = 0
        for k in range(chk_ptr[c], chk_ptr[c + 1]):
            acc ^= e[chk_var[k]]
        out[c] = acc
    return out


@numba.njit(cache=True, nogil=True)
def _check_update(v2c, c2v, start, stop, syn_bit, scale, product_sum, clip):
    if product_sum:
        for e in range(start, stop):
            prod = 1.0 if syn_bit == 0 else -1.0
            for f in range(start, stop):
                if f != e:
                    prod *= np.tanh(0.5 * v2c[f])
            if stop - start == 1:
                prod = 1.0 if syn_bit == 0 else -1.0
            lim = 1.0 - 1e-15
            if prod > lim:
                prod = lim
            elif prod < -lim:
                prod = -lim
            val = 2.0 * np.arctanh(prod)
            if val > clip:
                val = clip
            elif val < -clip:
                val = -clip
            c2v[e] = val
        return
    sgn = -1.0 if syn_bit else 1.0
    min1 = clip
    min2 = clip
    arg = -1
    for e in range(start, stop):
        x = v2c[e]
        if x < 0:
            sgn = -sgn
            x = -x
        if x < min1:
            min2 = min1
            min1 = x
            arg = e
        elif x < min2:
            min2 = x
    for e in range(start, stop):
        mag = min2 if e == arg else min1
        s = -sgn if v2c[e] < 0 else sgn
        c2v[e] = s * scale * mag


@numba.njit(cache=True, nogil=True)
def _bp_kernel(chk_ptr, chk_var, var_ptr, var_edge, syn, llr0, max_iter, scale, product_sum, serial, early_stop, post, hard):
    m = chk_ptr.size - 1
    n = llr0.size
    n_edges = chk_var.size
    clip = 50.0
    v2c = np.empty(n_edges)
    c2v = np.zeros(n_edges)
    for e in range(n_edges):
        v2c[e] = llr0[chk_var[e]]
    for v in range(n):
        post[v] = llr0[v]
        hard[v] = 1 if llr0[v] < 0 else 0
    for it in range(1, max_iter + 1):
        if serial:
            for c in range(m):
                a = chk_ptr[c]
                b = chk_ptr[c + 1]
                for e in range(a, b):
                    v2c[e] = post[chk_var[e]] - c2v[e]
                _check_update(v2c, c2v, a, b, syn[c], scale, product_sum, clip)
                for e in range(a, b):
                    x = v2c[e] + c2v[e]
                    if x > clip:
                        x = clip
                    elif x < -clip:
                        x = -clip
                    post[chk_var[e]] = x
        else:
            for c in range(m):
                _check_update(v2c, c2v, chk_ptr[c], chk_ptr[c + 1], syn[c], scale, product_sum, clip)
            for v in range(n):
                total = llr0[v]
                for k in range(var_ptr[v], var_ptr[v + 1]):
                    total += c2v[var_edge[k]]
                if total > clip:
                    total = clip
                elif total < -clip:
                    total = -clip
                post[v] = total
                for k in range(var_ptr[v], var_ptr[v + 1]):
                    e = var_edge[k]
                    x = total - c2v[e]
                    if x > clip:
                        x = clip
                    elif x < -clip:
                        x = -clip
                    v2c[e] = x
        for v in range(n):
            hard[v] = 1 if post[v] < 0 else 0
        if not early_stop:
            continue
        ok = True
        for c in range(m):
            acc = 0
            for k in range(chk_ptr[c], chk_ptr[c + 1]):
                acc ^= hard[chk_var[k]]
            if acc != syn[c]:
                ok = False
                break
        if ok:
            return it, True
    # final check covers max_iter == 0 and runs without early stopping
    ok = True
    for c in range(m):
        acc = 0
        for k in range(chk_ptr[c], chk_ptr[c + 1]):
            acc ^= hard[chk_var[k]]
        if acc != syn[c]:
            ok = False
            break
    return max_iter, ok


@numba.njit(cache=True, nogil=True)
def _osd_kernel(chk_ptr, chk_var, n, order, syn, cost, mode, lam, out):
    """Reliability-ordered elimination plus candidate search.

    ``order[k]`` is the column at reliability position ``k``.  Returns False if
    the syndrome lies outside the column space.
    """
    m = chk_ptr.size - 1
    nw = (n + 1 + 63) >> 6
    one = np.uint64(1)
    pos = np.empty(n, dtype=np.int64)
    for k in range(n):
        pos[order[k]] = k
    data = np.zeros((m, nw), dtype=np.uint64)
    sw = n >> 6
    sb = one << np.uint64(n & 63)
    for c in range(m):
        for k in range(chk_ptr[c], chk_ptr[c + 1]):
            p = pos[chk_var[k]]
            data[c, p >> 6] ^= one << np.uint64(p & 63)
        if syn[c]:
            data[c, sw] |= sb
    pivots = _rref_inplace(data, np.arange(n))
    rank = pivots.size
    for r in range(rank, m):
        if data[r, sw] & sb:
            return False
    is_piv = np.zeros(n, dtype=np.bool_)
    for r in range(rank):
        is_piv[pivots[r]] = True
    nt = n - rank
    tpos = np.empty(nt, dtype=np.int64)
    j = 0
    for p in range(n):
        if not is_piv[p]:
            tpos[j] = p
            j += 1
    s_piv = np.empty(rank, dtype=np.uint8)
    w_piv = np.empty(rank)
    for r in range(rank):
        s_piv[r] = 1 if data[r, sw] & sb else 0
        w_piv[r] = cost[order[pivots[r]]]
    w_t = np.empty(nt)
    for j in range(nt):
        w_t[j] = cost[order[tpos[j]]]

    # flipped[r, j]: bit of reduced row r at non-pivot position j
    flipped = np.zeros((rank, nt), dtype=np.uint8)
    for r in range(rank):
        for j in range(nt):
            p = tpos[j]
            if data[r, p >> 6] & (one << np.uint64(p & 63)):
                flipped[r, j] = 1

    base = 0.0
    for r in range(rank):
        if s_piv[r]:
            base += w_piv[r]
    best = base
    best_pattern = np.zeros(nt, dtype=np.uint8)
    pattern = np.zeros(nt, dtype=np.uint8)

    if mode == 1:
        delta = np.empty(rank)
        for r in range(rank):
            delta[r] = -w_piv[r] if s_piv[r] else w_piv[r]
        best_j = -1
        for j in range(nt):
            c = base + w_t[j]
            for r in range(rank):
                if flipped[r, j]:
                    c += delta[r]
            if c < best:
                best = c
                best_j = j
        best_j1 = -1
        best_j2 = -1
        top = min(lam, nt)
        for j1 in range(top):
            for j2 in range(j1 + 1, top):
                c = w_t[j1] + w_t[j2]
                for r in range(rank):
                    if s_piv[r] ^ flipped[r, j1] ^ flipped[r, j2]:
                        c += w_piv[r]
                if c < best:
                    best = c
                    best_j1 = j1
                    best_j2 = j2
        if best_j1 >= 0:
            best_pattern[best_j1] = 1
            best_pattern[best_j2] = 1
        elif best_j >= 0:
            best_pattern[best_j] = 1
    elif mode == 2:
        top = min(lam, nt)
        for mask in range(1, 1 << top):
            c = 0.0
            for j in range(top):
                pattern[j] = (mask >> j) & 1
                if pattern[j]:
                    c += w_t[j]
            for r in range(rank):
                bit = s_piv[r]
                for j in range(top):
                    if pattern[j]:
                        bit ^= flipped[r, j]
                if bit:
                    c += w_piv[r]
            if c < best:
                best = c
                for j in range(nt):
                    best_pattern[j] = pattern[j] if j < top else 0

    for k in range(n):
        out[k] = 0
    for j in range(nt):
        if best_pattern[j]:
            out[order[tpos[j]]] = 1
    for r in range(rank):
        bit = s_piv[r]
        for j in range(nt):
            if best_pattern[j]:
                bit ^= flipped[r, j]
        out[order[pivots[r]]] = bit
    return True


# --------------------------------------------------------------------------
# post-processors


def reliability_order(posterior: npt.ArrayLike) -> npt.NDArray[np.int64]:
    """Columns sorted by decreasing error probability, ties to the lower index."""
    p = np.asarray(posterior, dtype=np.float64)
    return np.lexsort((np.arange(p.size), -p)).astype(np.int64)


def _soft_cost(posterior: npt.NDArray[np.float64]) -> npt.NDArray[np.float64]:
    p = np.clip(posterior, _COST_EPS, 1.0 - _COST_EPS)
    return np.log1p(-p) - np.log(p)


def _osd_graph(h, graph: TannerGraph | None, s, posterior, order: int, mode: str) -> npt.NDArray[np.uint8]:
    if mode not in _OSD_MODE:
        raise ValueError(f"unknown OSD mode {mode!r}")
    if graph is None:
        graph = TannerGraph(h)
    s = as_bits(s)
    p = np.asarray(posterior, dtype=np.float64)
    if s.size != graph.m or p.size != graph.n:
        raise ValueError("syndrome/posterior length does not match the matrix")
    out = np.zeros(graph.n, dtype=np.uint8)
    ok = _osd_kernel(
        graph.chk_ptr,
        graph.chk_var,
        graph.n,
        reliability_order(p),
        s,
        _soft_cost(p),
        _OSD_MODE[mode],
        int(order),
        out,
    )
    if not ok:
        raise DecodingFailure("syndrome is not in the column space")
    return out


def osd_postprocess(
    h: BitMatrix | npt.ArrayLike,
    s: npt.ArrayLike,
    posterior: npt.ArrayLike,
    order: int = 3,
    mode: str = "osd_cs",
) -> npt.NDArray[np.uint8]:
    """Ordered-statistics decoding.

    Columns are ranked by decreasing posterior and eliminated in that order.
    Candidate patterns on the non-pivot set ``T`` (kept in reliability order):

    * ``osd_0``: only the zero pattern
    * ``osd_cs``: zero, every weight-1 pattern on ``T``, and every weight-2
      pattern inside the first ``order`` entries of ``T``
    * ``osd_e``: every pattern on the first ``order`` entries of ``T``

    The candidate with the lowest soft cost ``sum ln((1-p)/p)`` over its
    support wins; earlier candidates win ties.

    Raises:
        DecodingFailure: ``s`` is not in the column space of ``h``.
    """
    return _osd_graph(h, None, s, posterior, order, mode)


@numba.njit(cache=True, nogil=True)
def _find(parent, x):
    while parent[x] != x:
        parent[x] = parent[parent[x]]
        x = parent[x]
    return x


@numba.njit(cache=True, nogil=True)
def _cluster_members(root, parent, chk_owner, var_owner):
    m = chk_owner.size
    n = var_owner.size
    nc = 0
    nv = 0
    rows = np.empty(m, dtype=np.int64)
    cols = np.empty(n, dtype=np.int64)
    for c in range(m):
        if chk_owner[c] >= 0 and _find(parent, chk_owner[c]) == root:
            rows[nc] = c
            nc += 1
    for v in range(n):
        if var_owner[v] >= 0 and _find(parent, var_owner[v]) == root:
            cols[nv] = v
            nv += 1
    return rows[:nc], cols[:nv]


@numba.njit(cache=True, nogil=True)
def _sub_csr(chk_ptr, chk_var, rows, local_col):
    # local_col[v] is the cluster-local index of v, or -1
    ptr = np.zeros(rows.size + 1, dtype=np.int64)
    tmp = np.empty(chk_var.size, dtype=np.int64)
    k = 0
    for i in range(rows.size):
        c = rows[i]
        for e in range(chk_ptr[c], chk_ptr[c + 1]):
            j = local_col[chk_var[e]]
            if j >= 0:
                tmp[k] = j
                k += 1
        ptr[i + 1] = k
    return ptr, tmp[:k].copy()


@numba.njit(cache=True, nogil=True)
def _cluster_valid(chk_ptr, chk_var, syn, rows, cols, local_col):
    """True iff the cluster syndrome lies in the column space of its submatrix."""
    nv = cols.size
    for j in range(nv):
        local_col[cols[j]] = j
    nw = (nv + 1 + 63) >> 6
    one = np.uint64(1)
    data = np.zeros((rows.size, nw), dtype=np.uint64)
    for i in range(rows.size):
        c = rows[i]
        for e in range(chk_ptr[c], chk_ptr[c + 1]):
            j = local_col[chk_var[e]]
            if j >= 0:
                data[i, j >> 6] ^= one << np.uint64(j & 63)
        if syn[c]:
            data[i, nv >> 6] |= one << np.uint64(nv & 63)
    for j in range(nv):
        local_col[cols[j]] = -1
    pivots = _rref_inplace(data, np.arange(nv))
    sb = one << np.uint64(nv & 63)
    for r in range(pivots.size, rows.size):
        if data[r, nv >> 6] & sb:
            return False
    return True


@numba.njit(cache=True, nogil=True)
def _lsd_kernel(chk_ptr, chk_var, var_ptr, var_edge, edge_chk, syn, posterior, cost, lam, out):
    m = chk_ptr.size - 1
    n = var_ptr.size - 1
    for v in range(n):
        out[v] = 0
    chk_owner = np.full(m, -1, dtype=np.int64)
    var_owner = np.full(n, -1, dtype=np.int64)
    parent = np.arange(m, dtype=np.int64)  # cluster ids are seed check indices
    valid = np.ones(m, dtype=np.bool_)
    n_invalid = 0
    for c in range(m):
        if syn[c]:
            chk_owner[c] = c
            valid[c] = False
            n_invalid += 1
    local_col = np.full(n, -1, dtype=np.int64)

    while n_invalid > 0:
        # most likely unowned qubit next to a check of an invalid cluster
        best = -1
        for c in range(m):
            if chk_owner[c] < 0 or valid[_find(parent, chk_owner[c])]:
                continue
            for e in range(chk_ptr[c], chk_ptr[c + 1]):
                v = chk_var[e]
                if var_owner[v] >= 0:
                    continue
                if best < 0 or posterior[v] > posterior[best] or (posterior[v] == posterior[best] and v < best):
                    best = v
        if best < 0:
            return False
        root = -1
        for k in range(var_ptr[best], var_ptr[best + 1]):
            c = edge_chk[var_edge[k]]
            if chk_owner[c] >= 0:
                r = _find(parent, chk_owner[c])
                if not valid[r]:
                    root = r
                    break
        var_owner[best] = root
        for k in range(var_ptr[best], var_ptr[best + 1]):
            c = edge_chk[var_edge[k]]
            if chk_owner[c] < 0:
                chk_owner[c] = root
            else:
                r = _find(parent, chk_owner[c])
                if r != root:
                    if not valid[r]:
                        n_invalid -= 1
                    parent[r] = root
        rows, cols = _cluster_members(root, parent, chk_owner, var_owner)
        ok = _cluster_valid(chk_ptr, chk_var, syn, rows, cols, local_col)
        if ok:
            valid[root] = True
            n_invalid -= 1

    # solve every cluster on its own submatrix
    for c in range(m):
        if chk_owner[c] < 0 or _find(parent, chk_owner[c]) != c:
            continue
        if parent[c] != c:
            continue
        rows, cols = _cluster_members(c, parent, chk_owner, var_owner)
        if cols.size == 0:
            continue
        for j in range(cols.size):
            local_col[cols[j]] = j
        sub_ptr, sub_var = _sub_csr(chk_ptr, chk_var, rows, local_col)
        for j in range(cols.size):
            local_col[cols[j]] = -1
        sub_p = np.empty(cols.size)
        sub_cost = np.empty(cols.size)
        for j in range(cols.size):
            sub_p[j] = -posterior[cols[j]]
            sub_cost[j] = cost[cols[j]]
        order = np.argsort(sub_p, kind="mergesort")
        sub_syn = np.empty(rows.size, dtype=np.uint8)
        for i in range(rows.size):
            sub_syn[i] = syn[rows[i]]
        sub_out = np.zeros(cols.size, dtype=np.uint8)
        if not _osd_kernel(sub_ptr, sub_var, cols.size, order, sub_syn, sub_cost, 1, lam, sub_out):
            return False
        for j in range(cols.size):
            out[cols[j]] = sub_out[j]
    return True


def _lsd_graph(graph: TannerGraph, s, posterior, order: int) -> npt.NDArray[np.uint8]:
    s = as_bits(s)
    p = np.asarray(posterior, dtype=np.float64)
    if s.size != graph.m or p.size != graph.n:
        raise ValueError("syndrome/posterior length does not match the matrix")
    out = np.zeros(graph.n, dtype=np.uint8)
    if not s.any():
        return out
    ok = _lsd_kernel(
        graph.chk_ptr, graph.chk_var, graph.var_ptr, graph.var_edge, graph.edge_chk, s, p, _soft_cost(p), int(order), out
    )
    if not ok:
        raise DecodingFailure("cluster growth exhausted without a valid cluster")
    return out


def lsd_postprocess(
    h: BitMatrix | npt.ArrayLike,
    s: npt.ArrayLike,
    posterior: npt.ArrayLike,
    order: int = 3,
) -> npt.NDArray[np.uint8]:
    """Localized-statistics decoding by cluster growth.

    Every unsatisfied check seeds a cluster.  While some cluster is invalid
    (its syndrome is outside its column space), the most likely qubit on the
    frontier of an invalid cluster is absorbed together with every check
    touching it; clusters that end up sharing a check merge.  Validity is
    recomputed from scratch after each growth step.  Each valid cluster is
    then solved on its own submatrix with ``osd_cs`` at the given order.

    Raises:
        DecodingFailure: a cluster cannot grow further and is still invalid.
    """
    return _lsd_graph(TannerGraph(h), s, posterior, order)


# --------------------------------------------------------------------------
# decoder objects


class BpDecoder:
    """Reusable BP decoder bound to one parity-check matrix.

    Holds scratch buffers, so an instance must not be shared between threads.
    """

    def __init__(
        self, h: BitMatrix | npt.ArrayLike, cfg: DecoderConfig | None = None, *, early_stop: bool = True
    ) -> None:
        self.cfg = cfg or DecoderConfig()
        self.early_stop = early_stop
        self.graph = TannerGraph(h)
        self.max_iter = self.cfg.iterations_for(self.graph.n)
        self._post = np.empty(self.graph.n)
        self._hard = np.empty(self.graph.n, dtype=np.uint8)

    def decode(self, s: npt.ArrayLike, prior: Prior | npt.ArrayLike | float) -> DecodeOutcome:
        s = as_bits(s)
        if s.size != self.graph.m:
            raise ValueError(f"syndrome has length {s.size}, matrix has {self.graph.m} rows")
        pr = _as_prior(prior, self.graph.n)
        g = self.graph
        iters, ok = _bp_kernel(
            g.chk_ptr,
            g.chk_var,
            g.var_ptr,
            g.var_edge,
            s,
            pr.llr(),
            self.max_iter,
            float(self.cfg.ms_scale),
            self.cfg.bp_variant == "product-sum",
            self.cfg.schedule == "serial",
            self.early_stop,
            self._post,
            self._hard,
        )
        posterior = 1.0 / (1.0 + np.exp(self._post))
        return DecodeOutcome(self._hard.copy(), posterior, int(iters), bool(ok))


class Decoder:
    """BP followed by the configured post-processor when BP does not converge."""

    def __init__(self, h: BitMatrix | npt.ArrayLike, cfg: DecoderConfig | None = None) -> None:
        self.cfg = cfg or DecoderConfig()
        self.h = h if isinstance(h, BitMatrix) else BitMatrix.from_dense(h)
        self.bp = BpDecoder(self.h, self.cfg)
        self.graph = self.bp.graph

    def decode(self, s: npt.ArrayLike, prior: Prior | npt.ArrayLike | float) -> DecodeOutcome:
        s = as_bits(s)
        out = self.bp.decode(s, prior)
        if out.converged or self.cfg.post == "none":
            return out
        try:
            if self.cfg.post == "lsd_cs":
                est = _lsd_graph(self.graph, s, out.posterior, self.cfg.order)
            else:
                est = _osd_graph(self.h, self.graph, s, out.posterior, self.cfg.order, self.cfg.post)
        except DecodingFailure:
            return out
        matched = bool(np.array_equal(self.graph.syndrome(est), s))
        return DecodeOutcome(est, out.posterior, out.iterations, matched)


def bp_decode(h, s, prior, cfg: DecoderConfig | None = None) -> DecodeOutcome:
    return BpDecoder(h, cfg).decode(s, prior)


def decode(h, s, prior, cfg: DecoderConfig | None = None) -> DecodeOutcome:
    return Decoder(h, cfg).decode(s, prior)
