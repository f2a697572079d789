import logging
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction

import numpy as np
import pytest

from oracles import gf2_matvec, span
from qtanner.codes import builtin
from qtanner.complex import FiniteGroup, ViewCover, construct
from qtanner.decode import DecodeOutcome, DecoderConfig
from qtanner.gf2 import BitMatrix
from qtanner.lead import (
    PRESETS,
    LeadConfig,
    LeadDecoder,
    aggregate,
    boost_confidence,
    lead_decode,
    normalized_iterations,
    preset,
)

# stubbed local posteriors of the worked example (1-based qubit labels)
V1_COLS = [1, 2, 3, 4, 5, 6, 7, 8, 9]
V1_P = [0.21, 0.12, 0.04, 0.50, 0.12, 0.04, 0.21, 0.12, 0.04]
V2_COLS = [1, 6, 8, 10, 11, 12, 13, 14, 15]
V2_P = [0.25, 0.10, 0.10, 0.25, 0.10, 0.10, 0.50, 0.10, 0.10]


@pytest.fixture(scope="module")
def code():
    return construct(FiniteGroup.cyclic(4), builtin("rep3"), seed=7)


class TestBoost:
    def test_flipped_bits_raised_to_floor(self):
        out = boost_confidence([0.2, 0.6, 0.1], [1, 0, 0], True)
        assert out.tolist() == [0.5, 0.6, 0.1]

    def test_zero_estimate_unchanged(self):
        assert boost_confidence([0.2, 0.6, 0.1], [0, 0, 0], True).tolist() == [0.2, 0.6, 0.1]

    def test_failure_unchanged(self):
        assert boost_confidence([0.2, 0.6, 0.1], [1, 1, 1], False).tolist() == [0.2, 0.6, 0.1]

    def test_max_rule_on_random_cases(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            pv = rng.random(9)
            ev = rng.integers(0, 2, 9)
            ok = bool(rng.integers(0, 2))
            expected = [max(p, 0.5) if ok and e else p for p, e in zip(pv, ev)]
            assert boost_confidence(pv, ev, ok).tolist() == expected

    def test_input_not_modified(self):
        pv = np.array([0.2, 0.3])
        boost_confidence(pv, [1, 1], True)
        assert pv.tolist() == [0.2, 0.3]

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            boost_confidence([0.1, 0.2], [1], True)


class TestAggregate:
    def test_worked_example_mean(self):
        views = [(np.array(V1_COLS) - 1, V1_P), (np.array(V2_COLS) - 1, V2_P)]
        p = aggregate(views, 15, 1.0).probs
        # the average of the two doubles, rounded once
        exact = (Fraction(0.21) + Fraction(0.25)) / 2
        assert Fraction(p[0]) == Fraction(float(exact))
        assert abs(p[0] - 0.23) <= np.spacing(0.23)
        assert p[5] == (0.04 + 0.10) / 2 and p[3] == 0.50 and p[12] == 0.50

    def test_alpha_scales(self):
        p = aggregate([(np.array([0]), [0.23])], 1, 0.01).probs
        assert p[0] == 0.01 * 0.23

    def test_identical_views(self):
        rng = np.random.default_rng(1)
        vec = rng.random(6) * 0.5
        p = aggregate([(np.arange(6), vec)] * 3, 6, 0.3).probs
        np.testing.assert_allclose(p, np.clip(0.3 * vec, 1e-9, 1 - 1e-9), rtol=1e-15)

    def test_clamp(self):
        p = aggregate([(np.array([0, 1]), [0.0, 1.0])], 2, 1.0).probs
        assert p.tolist() == [1e-9, 1 - 1e-9]

    def test_argsort_invariant_under_alpha(self):
        rng = np.random.default_rng(2)
        for _ in range(1000):
            n = int(rng.integers(2, 20))
            views = [(rng.choice(n, size=int(rng.integers(1, n + 1)), replace=False), rng.random(n)) for _ in range(3)]
            views = [(c, v[: c.size]) for c, v in views]
            fb = rng.random(n)
            a = aggregate(views, n, 1.0, fallback=fb).probs
            b = aggregate(views, n, float(rng.uniform(0.01, 1.0)), fallback=fb).probs
            covered = np.zeros(n, dtype=bool)
            for c, _ in views:
                covered[c] = True
            idx = np.flatnonzero(covered)
            np.testing.assert_array_equal(np.argsort(a[idx], kind="stable"), np.argsort(b[idx], kind="stable"))

    def test_uncovered_qubits(self, caplog):
        with pytest.raises(ValueError):
            aggregate([(np.array([0]), [0.2])], 2, 1.0)
        with caplog.at_level(logging.WARNING):
            p = aggregate([(np.array([0]), [0.2])], 2, 1.0, fallback=[0.1, 0.07]).probs
        assert p.tolist() == [0.2, 0.07]
        assert "no view" in caplog.text

    def test_bad_alpha(self):
        with pytest.raises(ValueError):
            aggregate([], 0, 0.0)


class TestIterations:
    def test_examples(self):
        assert normalized_iterations(I_g=1, I_l_total=10, m_l=2, m_g=8) == 3.5
        assert normalized_iterations(I_g=7, I_l_total=0, m_l=2, m_g=8) == 7
        assert normalized_iterations(I_g=2, I_l_total=12, m_l=2, m_g=8) == 5.0

    def test_invalid_m_g(self):
        with pytest.raises(ValueError):
            normalized_iterations(I_g=1, I_l_total=1, m_l=1, m_g=0)


class _Stub:
    """Local decoder that always reports the same posterior and no estimate."""

    def __init__(self, post):
        self.post = np.asarray(post, dtype=np.float64)

    def decode(self, s, prior):
        return DecodeOutcome(np.zeros(self.post.size, dtype=np.uint8), self.post.copy(), 1, False)


def test_worked_example_through_the_decoder():
    # two groups whose supports match the example's views; qubit 0 is shared
    n = 15
    v1 = np.array(V1_COLS) - 1
    v2 = np.array(V2_COLS) - 1
    rows = []
    for cols in (v1, v2):
        for k in range(0, 9, 3):
            rows.append(cols[k : k + 3].tolist() + ([cols[(k + 3) % 9]] if k else []))
    h = BitMatrix.from_supports(rows, n)
    cover = ViewCover.from_rows(h, [("v1", (0, 1, 2)), ("v2", (3, 4, 5))])
    stubs = iter([_Stub(V1_P), _Stub(V2_P)])
    dec = LeadDecoder(h, cover, LeadConfig(alpha=1.0), local_factory=lambda hv, cfg: next(stubs))
    e = np.zeros(n, dtype=np.uint8)
    e[0] = 1
    s = gf2_matvec(h.to_dense(), e).astype(np.uint8)
    out, trace = dec.decode(s, 0.05)
    assert Fraction(trace.p_hat[0]) == Fraction(float((Fraction(0.21) + Fraction(0.25)) / 2))
    assert abs(trace.p_hat[0] - 0.23) <= np.spacing(0.23)
    assert trace.p_hat[3] == 0.50 and trace.p_hat[12] == 0.50
    assert out.converged
    np.testing.assert_array_equal(gf2_matvec(h.to_dense(), out.estimate), s)


class TestLeadDecoder:
    def test_zero_syndrome(self, code):
        s = np.zeros(code.hx.rows, dtype=np.uint8)
        out, trace = lead_decode(code, "z", s, 0.02)
        assert out.converged and not out.estimate.any()
        assert trace.local_converged.all()
        assert (trace.p_hat <= 0.02 + 1e-12).all()

    def test_single_errors_are_corrected_up_to_stabilizers(self, code):
        for side, same in (("z", code.hz), ("x", code.hx)):
            h, cover = code.checks(side)
            dec = LeadDecoder(h, cover, preset("lead-bl-bo"))
            stabs = span(same.to_dense())
            for q in range(code.n):
                e = np.zeros(code.n, dtype=np.uint8)
                e[q] = 1
                s = gf2_matvec(h.to_dense(), e).astype(np.uint8)
                out, trace = dec.decode(s, 0.02)
                assert out.converged
                residual = (out.estimate ^ e).astype(np.int64)
                assert tuple(residual) in stabs
                assert normalized_iterations(trace) >= trace.I_g

    def test_threaded_phase1_matches_serial(self, code):
        rng = np.random.default_rng(3)
        h, cover = code.checks("z")
        serial = LeadDecoder(h, cover, preset("lead-bl-bo"))
        with ThreadPoolExecutor(4) as pool:
            threaded = LeadDecoder(h, cover, preset("lead-bl-bo"), executor=pool)
            for _ in range(30):
                e = (rng.random(code.n) < 0.06).astype(np.uint8)
                s = gf2_matvec(h.to_dense(), e).astype(np.uint8)
                a, ta = serial.decode(s, 0.04)
                b, tb = threaded.decode(s, 0.04)
                np.testing.assert_array_equal(a.estimate, b.estimate)
                np.testing.assert_array_equal(ta.p_hat, tb.p_hat)
                np.testing.assert_array_equal(ta.local_iterations, tb.local_iterations)

    def test_trace_counts(self, code):
        h, cover = code.checks("x")
        dec = LeadDecoder(h, cover)
        assert dec.m_g == h.rows and dec.m_l == 2.0
        out, trace = dec.decode(np.zeros(h.rows, dtype=np.uint8), 0.01)
        assert len(trace.view_ids) == len(cover) and trace.I_l_max <= trace.I_l_total

    def test_syndrome_length_checked(self, code):
        with pytest.raises(ValueError):
            lead_decode(code, "z", np.zeros(3, dtype=np.uint8), 0.01)


class TestConfig:
    def test_presets(self):
        assert set(PRESETS) == {"lead-bl-bo", "lead-bo-bo", "lead-bl-bl", "lead-bo-bl"}
        cfg = preset("lead-bl-bo", alpha=0.01)
        assert cfg.local.post == "lsd_cs" and cfg.global_cfg.post == "osd_cs" and cfg.alpha == 0.01
        assert preset("lead-bo-bl").global_cfg.post == "lsd_cs"
        with pytest.raises(ValueError):
            preset("lead-xx")

    def test_round_trip(self):
        cfg = LeadConfig(alpha=0.3, local=DecoderConfig(ms_scale=0.5), boost_floor=0.4)
        assert LeadConfig.from_dict(cfg.to_dict()) == cfg

    def test_invalid_alpha(self):
        with pytest.raises(ValueError):
            LeadConfig(alpha=1.5)
