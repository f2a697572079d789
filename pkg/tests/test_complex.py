import itertools
import random

import numpy as np
import pytest

from oracles import gf2_matvec, span
from qtanner.codes import builtin
from qtanner.complex import (
    ConstructionError,
    FiniteGroup,
    GeneratorSets,
    TannerCode,
    ViewCover,
    _orbit_partner,
    build_complex,
    check_tnc,
    construct,
    extract_view,
    local_syndrome,
    parse_group,
    sample_symmetric_subset,
    validate,
)
from qtanner.gf2 import BitMatrix, rank

Z4 = FiniteGroup.cyclic(4)


@pytest.fixture(scope="module")
def appendix():
    return construct(Z4, builtin("rep3"), seed=7)


class TestGroups:
    def test_cyclic_and_dihedral_tables(self):
        assert Z4.order == 4 and Z4.identity == 0 and Z4.is_abelian()
        d4 = FiniteGroup.dihedral(4)
        assert d4.order == 8 and not d4.is_abelian()
        inv = d4.inverse
        assert all(d4.mul[x, inv[x]] == d4.identity for x in range(8))

    def test_bad_tables_rejected(self):
        with pytest.raises(ValueError):
            FiniteGroup(np.array([[0, 1], [0, 1]]))
        with pytest.raises(ValueError):
            FiniteGroup(np.array([[0, 2, 1], [2, 1, 0], [1, 0, 2]]))  # x*y = -x-y has no identity

    def test_table_file(self, tmp_path):
        path = tmp_path / "z3.txt"
        path.write_text("# Z3\n0 1 2\n1 2 0\n2 0 1\n")
        g = parse_group(f"table:{path}")
        assert g.order == 3 and g.is_abelian()
        with pytest.raises(ValueError):
            parse_group("free:2")

    def test_generator_sets_must_be_symmetric(self):
        with pytest.raises(ValueError):
            GeneratorSets((1, 2), (1,))
        with pytest.raises(ValueError):
            GeneratorSets((1,), (3,)).check_against(Z4)  # 1^-1 = 3 missing
        GeneratorSets((1, 3), (0, 2)).check_against(Z4)

    def test_symmetric_sampling(self):
        rng = random.Random(5)
        g = FiniteGroup.cyclic(8)
        inv = g.inverse
        for size in range(1, 8):
            s = sample_symmetric_subset(g, size, rng)
            assert len(s) == size and {int(inv[x]) for x in s} == set(s)
        with pytest.raises(ConstructionError):
            sample_symmetric_subset(Z4, 5, rng)


class TestTnc:
    def test_disjoint_sets_in_abelian_group_hold(self):
        gens = GeneratorSets((1, 3), (0, 2))
        holds, wit = check_tnc(Z4, gens)
        # oracle: enumerate every (g, a, b)
        expected = not any(Z4.mul[a, g] == Z4.mul[g, b] for g in range(4) for a in (1, 3) for b in (0, 2))
        assert holds and expected and wit == []

    def test_abelian_overlap_gives_witness_a_equals_b(self):
        holds, wit = check_tnc(Z4, GeneratorSets((1, 3), (1, 3)))
        assert not holds and wit
        assert all(a == b for _, a, b in wit)

    def test_pigeonhole_z8(self):
        holds, wit = check_tnc(FiniteGroup.cyclic(8), GeneratorSets((1, 2, 3, 4, 5, 6, 7), (0, 1, 2, 3, 5, 6, 7)))
        assert not holds and 0 < len(wit) <= 10

    def test_quotient_mode_reports_witness(self):
        with pytest.raises(ConstructionError, match="TNC violated"):
            build_complex(Z4, GeneratorSets((1, 3), (1, 3)), mode="quotient")


class TestComplex:
    def test_face_corners(self):
        cx = build_complex(Z4, GeneratorSets((0, 2), (1, 3)))
        f = next(i for i, (g, ai, bi) in enumerate(cx.faces) if g == 1 and cx.gens.a_set[ai] == 2 and cx.gens.b_set[bi] == 3)
        assert set(cx.corners(f)) == {(1, 0), (3, 1), (0, 1), (2, 0)}
        roles = dict(cx.vertex_faces((3, 1)))
        assert roles[f] == "ag"

    def test_faces_in_lexicographic_order(self):
        cx = build_complex(Z4, GeneratorSets((0, 1, 3), (0, 1, 3)))
        assert cx.num_faces == 36
        assert [tuple(r) for r in cx.faces] == sorted(tuple(r) for r in cx.faces)

    def test_z8_delta7_face_count(self):
        gens = GeneratorSets((1, 2, 3, 4, 5, 6, 7), (1, 2, 3, 4, 5, 6, 7))
        assert build_complex(FiniteGroup.cyclic(8), gens).num_faces == 392

    def test_quotient_face_count_and_views(self):
        g = FiniteGroup.cyclic(8)
        gens = GeneratorSets((1, 7), (2, 6))
        cx = build_complex(g, gens, mode="quotient")
        assert cx.num_faces == g.order * gens.delta**2 // 2
        for side in (0, 1):
            assert len(cx.views[side]) == g.order

    @pytest.mark.parametrize("m", [4, 6, 8])
    def test_orbit_map_is_fixed_point_free_involution_under_tnc(self, m):
        g = FiniteGroup.cyclic(m)
        gens = GeneratorSets((1, m - 1), (2, m - 2)) if m != 4 else GeneratorSets((1, 3), (0, 2))
        holds, _ = check_tnc(g, gens)
        for t in itertools.product(range(m), range(gens.delta), range(gens.delta)):
            partner = _orbit_partner(g, gens, *t)
            assert _orbit_partner(g, gens, *partner) == t
            if holds:
                assert partner != t

    def test_quotient_matches_dihedral_css(self):
        g = FiniteGroup.dihedral(5)
        rng = random.Random(1)
        for _ in range(20):
            a = sample_symmetric_subset(g, 3, rng)
            b = sample_symmetric_subset(g, 3, rng)
            if check_tnc(g, GeneratorSets(a, b))[0]:
                code = construct(g, builtin("rep3"), mode="quotient", a_set=a, b_set=b)
                assert code.n == g.order * 9 // 2 and validate(code).css_ok
                return
        pytest.skip("no TNC pair found")


class TestAssemble:
    def test_appendix_parameters(self, appendix):
        assert (appendix.n, appendix.k) == (36, 8)
        rep = validate(appendix)
        assert rep.css_ok and rep.n == 36
        assert rep.k == appendix.n - rank(appendix.hx) - rank(appendix.hz)
        assert rep.max_row_weight <= 9

    def test_appendix_view_block(self, appendix):
        hv, cmap = extract_view(appendix.hx, appendix.cover_x, 0)
        assert hv.shape == (2, 9) and rank(hv) == 2
        cx = build_complex(Z4, GeneratorSets((0, 1, 3), (0, 1, 3)))
        faces = cx.views[1][0].faces
        # read cells column-major: rows then match the worked example exactly
        cells = [faces[i * 3 + j] for j in range(3) for i in range(3)]
        block = hv.to_dense()[:, [list(cmap).index(f) for f in cells]]
        expected = [[1, 0, 1, 1, 0, 1, 1, 0, 1], [0, 1, 1, 0, 1, 1, 0, 1, 1]]
        np.testing.assert_array_equal(block, expected)

    def test_z7_rand_eq6(self):
        code = construct(FiniteGroup.cyclic(7), builtin("rand_eq6"), seed=7)
        assert (code.n, code.k) == (252, 8)

    def test_z8_hamming(self):
        code = construct(FiniteGroup.cyclic(8), builtin("hamming74"), seed=0)
        assert (code.n, code.k) == (392, 48)

    def test_deterministic(self):
        a = construct(FiniteGroup.cyclic(5), builtin("rep3"), seed=3)
        b = construct(FiniteGroup.cyclic(5), builtin("rep3"), seed=3)
        assert a.hx == b.hx and a.hz == b.hz and a.cover_x == b.cover_x

    def test_delta_mismatch(self):
        cx = build_complex(Z4, GeneratorSets((0, 1, 3), (0, 1, 3)))
        from qtanner.complex import assemble_css

        with pytest.raises(ValueError):
            assemble_css(cx, builtin("hamming74"), builtin("rep3"))

    def test_each_row_inside_one_group(self, appendix):
        for h, cover in ((appendix.hx, appendix.cover_x), (appendix.hz, appendix.cover_z)):
            for grp in cover:
                for r in grp.rows:
                    assert set(h.supports()[r]) <= set(grp.support)
            np.testing.assert_array_equal(cover.multiplicity(appendix.n), 2)

    def test_corrupted_row_flagged(self, appendix):
        dense = appendix.hx.to_dense().copy()
        dense[0, :] = 0
        dense[0, 0] = 1
        hx = BitMatrix.from_dense(dense)
        bad = TannerCode(hx, appendix.hz, ViewCover.singletons(hx), appendix.cover_z)
        rep = validate(bad)
        assert not rep.css_ok
        assert all(i == 0 for i, _ in rep.offending)
        assert "FAIL" in rep.lines()[0]


class TestViews:
    def test_round_trip_reassembles_h(self, appendix):
        h = appendix.hz
        out = np.zeros((h.rows, h.cols), dtype=np.uint8)
        for v, grp in enumerate(appendix.cover_z):
            hv, cmap = extract_view(h, appendix.cover_z, v)
            assert hv.col_weights().min() > 0
            out[np.ix_(list(grp.rows), cmap)] = hv.to_dense()
        np.testing.assert_array_equal(out, h.to_dense())

    def test_single_row_group(self):
        h = BitMatrix.from_dense([[1, 0, 1, 1], [0, 1, 1, 0]])
        hv, cmap = extract_view(h, ViewCover.singletons(h), 0)
        assert hv.shape == (1, 3) and cmap.tolist() == [0, 2, 3]
        with pytest.raises(IndexError):
            extract_view(h, ViewCover.singletons(h), 2)

    def test_local_syndromes_partition(self, appendix):
        rng = np.random.default_rng(0)
        e = rng.integers(0, 2, appendix.n, dtype=np.uint8)
        s = gf2_matvec(appendix.hx.to_dense(), e)
        parts = [local_syndrome(s, appendix.cover_x, v) for v in range(len(appendix.cover_x))]
        assert sorted(np.concatenate(parts).tolist()) == sorted(s.tolist())
        assert not local_syndrome(np.zeros_like(s), appendix.cover_x, 0).any()
        with pytest.raises(ValueError):
            local_syndrome(s[:-1], appendix.cover_x, 0)

    def test_single_unsatisfied_check(self, appendix):
        s = np.zeros(appendix.hx.rows, dtype=np.uint8)
        s[appendix.cover_x[3].rows[1]] = 1
        assert local_syndrome(s, appendix.cover_x, 3).sum() == 1

    def test_cover_rejects_overlap_and_gaps(self):
        h = BitMatrix.from_dense([[1, 1], [0, 1]])
        with pytest.raises(ValueError):
            ViewCover.from_rows(h, [("a", (0, 1)), ("b", (1,))])
        with pytest.raises(ValueError):
            ViewCover.from_rows(h, [("a", (0,))])


def test_view_block_spans_tensor_code(appendix):
    # local rows span exactly the dual tensor code used for X checks
    hv, _ = extract_view(appendix.hx, appendix.cover_x, 5)
    assert len(span(hv.to_dense())) == 4
