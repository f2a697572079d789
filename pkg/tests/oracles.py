"""Independent brute-force references used by the tests.

Everything here works on plain 0/1 numpy arrays with integer arithmetic and
exhaustive enumeration, sharing no code with the packed kernels under test
(except where noted).
"""

from __future__ import annotations

import decimal
import itertools

import numpy as np


def gf2_matvec(h, x):
    return (np.asarray(h, dtype=np.int64) @ np.asarray(x, dtype=np.int64)) % 2


def span(rows):
    """Every GF(2) combination of ``rows`` (2^len(rows) vectors)."""
    rows = np.asarray(rows, dtype=np.int64)
    if rows.shape[0] == 0:
        return {tuple([0] * (rows.shape[1] if rows.ndim == 2 else 0))}
    out = set()
    for coeffs in itertools.product((0, 1), repeat=rows.shape[0]):
        out.add(tuple((np.asarray(coeffs) @ rows) % 2))
    return out


def rank_by_enumeration(rows) -> int:
    rows = np.asarray(rows)
    size = len(span(rows)) if rows.shape[0] else 1
    return int(size).bit_length() - 1


def all_words(n):
    for bits in itertools.product((0, 1), repeat=n):
        yield np.array(bits, dtype=np.uint8)


def coset(h, s):
    """All x with h x = s."""
    h = np.asarray(h)
    s = np.asarray(s) % 2
    return [x for x in all_words(h.shape[1]) if np.array_equal(gf2_matvec(h, x), s)]


def soft_cost(posterior):
    p = np.clip(np.asarray(posterior, dtype=np.float64), 1e-15, 1 - 1e-15)
    return np.log1p(-p) - np.log(p)


def min_cost_coset_element(h, s, posterior):
    """Exhaustive minimum of sum ln((1-p)/p) over the coset; None if empty."""
    w = soft_cost(posterior)
    best = None
    for x in coset(h, s):
        c = float(w[x == 1].sum())
        if best is None or c < best[0]:
            best = (c, x)
    return best


def exact_marginals(h, s, prior):
    """P(e_i = 1 | h e = s) under independent priors, by enumeration."""
    prior = np.asarray(prior, dtype=np.float64)
    num = np.zeros(prior.size)
    den = 0.0
    for x in coset(h, s):
        w = float(np.prod(np.where(x == 1, prior, 1 - prior)))
        den += w
        num += w * x
    return num / den


def wilson_reference(k: int, n: int, z: float = 1.959963984540054):
    """Wilson score interval from the textbook quadratic, in 50-digit decimals."""
    if n == 0:
        return 0.0, 1.0
    with decimal.localcontext() as ctx:
        ctx.prec = 50
        # roots in p of (p - phat)^2 = z^2 p (1-p) / n
        zz = decimal.Decimal(z) ** 2
        nn = decimal.Decimal(n)
        phat = decimal.Decimal(k) / nn
        a = 1 + zz / nn
        b = -(2 * phat + zz / nn)
        c = phat * phat
        disc = max(b * b - 4 * a * c, decimal.Decimal(0)).sqrt()
        r1 = (-b - disc) / (2 * a)
        r2 = (-b + disc) / (2 * a)
        return max(0.0, float(r1)), min(1.0, float(r2))


def lsd_reference(h, s, posterior, order, osd):
    """Set-based cluster growth, solving clusters with the supplied ``osd``."""
    h = np.asarray(h, dtype=np.uint8)
    s = np.asarray(s, dtype=np.uint8)
    p = np.asarray(posterior, dtype=np.float64)
    out = np.zeros(h.shape[1], dtype=np.uint8)
    if not s.any():
        return out
    chk_vars = [np.flatnonzero(r).tolist() for r in h]
    var_chks = [np.flatnonzero(c).tolist() for c in h.T]
    clusters = [{"checks": {c}, "qubits": set(), "valid": False} for c in np.flatnonzero(s)]

    def owner(c):
        for cl in clusters:
            if c in cl["checks"]:
                return cl
        return None

    def valid(cl):
        rows, cols = sorted(cl["checks"]), sorted(cl["qubits"])
        target = s[rows]
        if not target.any():
            return True
        if not cols:
            return False
        return bool(coset(h[np.ix_(rows, cols)], target))

    while True:
        best = None
        for cl in clusters:
            if cl["valid"]:
                continue
            for c in cl["checks"]:
                for q in chk_vars[c]:
                    if q in cl["qubits"]:
                        continue
                    key = (-p[q], q)
                    if best is None or key < best[0]:
                        best = (key, cl, q)
        if best is None:
            if all(cl["valid"] for cl in clusters):
                break
            return None
        _, cl, q = best
        for c in var_chks[q]:
            other = owner(c)
            if other is not None and other is not cl:
                cl["checks"] |= other["checks"]
                cl["qubits"] |= other["qubits"]
                clusters.remove(other)
        cl["qubits"].add(q)
        cl["checks"].update(var_chks[q])
        cl["valid"] = valid(cl)
    for cl in clusters:
        rows, cols = sorted(cl["checks"]), sorted(cl["qubits"])
        out[cols] = osd(h[np.ix_(rows, cols)], s[rows], p[cols], order)
    return out


def classify_by_enumeration(same, opposite, residual, stabilizers=None):
    """Verdict for one residual: syndrome test plus membership in the enumerated stabilizer group."""
    r = np.asarray(residual, dtype=np.int64)
    if gf2_matvec(opposite, r).any():
        return "decode_failure"
    stabilizers = span(same) if stabilizers is None else stabilizers
    return "success" if tuple(r) in stabilizers else "logical_failure"


def residual_mix(rng, same, opposite, logicals, count):
    """Residuals spread over the three verdicts: stabilizers, stabilizer+logical, and random words."""
    same = np.asarray(same, dtype=np.int64)
    logicals = np.asarray(logicals, dtype=np.int64)
    n = same.shape[1]
    out = []
    for i in range(count):
        stab = (rng.integers(0, 2, same.shape[0]) @ same) % 2
        kind = i % 3
        if kind == 0:
            r = stab
        elif kind == 1 and logicals.shape[0]:
            coeffs = rng.integers(0, 2, logicals.shape[0])
            r = (stab + coeffs @ logicals) % 2
        else:
            r = rng.integers(0, 2, n)
        out.append(r.astype(np.uint8))
    return out
