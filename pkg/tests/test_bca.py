"""Higher-page Bott-Chern/Aeppli groups, comparison maps, verdicts, inequality."""

import pytest

from bigraded.bca import (bca_dims, canonical_maps, closed_pure,
                          ddbar_closed_space, ddbar_exact_space, exact_pure,
                          im_both, inequality_check, page_ddbar_verdict)
from bigraded.bicomplex import direct_sum
from bigraded.linalg import (Matrix, Subspace, kernel_basis,
                             subspace_intersection, subspace_sum)
from bigraded.models import (ZigzagShape, build_square, build_zigzag,
                             dot_shape, example_calabi_eckmann)
from bigraded.spectral import TowerKind, Workspace


def classical_bc_a_dims(c, p, q):
    """Independent first-page oracle: the textbook kernel/image formulas.

    bc = dim(ker d1 ∩ ker d2) - rank(d1 d2),
    a  = dim ker(d1 d2) - dim(im d1 + im d2),
    computed with plain rank arithmetic, not with the tower machinery.
    """
    both = subspace_intersection(kernel_basis(c.d1_at(p, q)),
                                 kernel_basis(c.d2_at(p, q)))
    dd_in = c.d1_at(p - 1, q) * c.d2_at(p - 1, q - 1)
    bc = both.dim - dd_in.rank()
    dd_out = c.d1_at(p, q + 1) * c.d2_at(p, q)
    imboth = subspace_sum(c.d1_at(p - 1, q).image(), c.d2_at(p, q - 1).image())
    a = (c.dim(p, q) - dd_out.rank()) - imboth.dim
    return bc, a


def test_first_page_equals_classical_oracle(random_suite):
    for seed, c, ws in random_suite[:10]:
        table = bca_dims(c, 1, ws)
        for (p, q) in c.support():
            bc, a = classical_bc_a_dims(c, p, q)
            assert table.bc_dim(1, p, q) == bc, (seed, p, q)
            assert table.a_dim(1, p, q) == a, (seed, p, q)


def test_ddbar_spaces_first_page():
    sq = build_square(0, 0)
    assert ddbar_closed_space(sq, 1, 0, 0) == Subspace.zero(1)  # d1 d2 a != 0
    assert ddbar_exact_space(sq, 1, 1, 1).dim == 1              # the corner


def test_ddbar_closed_monotone(random_suite):
    for _, c, ws in random_suite[:6]:
        for (p, q) in c.support():
            prev = None
            for r in (1, 2, 3, 4):
                cur = ddbar_closed_space(c, r, p, q, ws)
                if prev is not None:
                    assert prev.contains_subspace(cur)
                prev = cur


def test_ddbar_closed_full_on_dot():
    dot = build_zigzag(dot_shape(0, 0))
    for r in (1, 2, 3):
        assert ddbar_closed_space(dot, r, 0, 0) == Subspace.full(1)


def test_ddbar_exact_one_way_inclusions(random_suite):
    # page-r ddbar-exact elements are page-exact, conjugate-page-exact,
    # d-closed and d-exact, unconditionally
    for _, c, ws in random_suite[:6]:
        for (p, q) in c.support():
            for r in (1, 2, 3):
                d = ddbar_exact_space(c, r, p, q, ws)
                assert ws.space(TowerKind.PAGE_EXACT, r, p, q).contains_subspace(d)
                assert ws.space(TowerKind.CONJ_PAGE_EXACT, r, p, q).contains_subspace(d)
                assert closed_pure(ws, p, q).contains_subspace(d)
                assert exact_pure(ws, p, q).contains_subspace(d)


def test_exact_sum_identity(random_suite):
    # C_r + conjugate C_r = im d1 + im d2, for every r
    for _, c, ws in random_suite[:6]:
        for (p, q) in c.support():
            target = im_both(ws, p, q)
            for r in (1, 2, 3):
                s = subspace_sum(ws.space(TowerKind.PAGE_EXACT, r, p, q),
                                 ws.space(TowerKind.CONJ_PAGE_EXACT, r, p, q))
                assert s == target


def test_bca_monotone(random_suite):
    for _, c, ws in random_suite[:8]:
        table = bca_dims(c, 4, ws)
        for (p, q) in c.support():
            for r in (1, 2, 3):
                assert table.bc_dim(r + 1, p, q) <= table.bc_dim(r, p, q)
                assert table.a_dim(r + 1, p, q) <= table.a_dim(r, p, q)


# ---------------------------------------------------------------------------
# zigzag closed forms (first-principles values)


@pytest.mark.parametrize("gens,bf,bl,r,bc,a", [
    # dot
    (1, False, False, 1, 1, 1), (1, False, False, 3, 1, 1),
    # length 3 with both outer arrows: bc = gens+1, a = max(gens-2(r-1), 0)
    (1, True, True, 1, 2, 1), (1, True, True, 2, 2, 0),
    # length 5, r = 2
    (2, True, True, 2, 3, 0),
    # even length 4: bc = a = max(gens - r + 1, 0)
    (2, False, True, 2, 1, 1), (2, False, True, 3, 0, 0),
    (2, True, False, 2, 1, 1),
    # even length 6, r = 2 and 3
    (3, False, True, 2, 2, 2), (3, False, True, 3, 1, 1),
])
def test_zigzag_totals(gens, bf, bl, r, bc, a):
    z = build_zigzag(ZigzagShape(tuple((i, 3 - i) for i in range(gens)), bf, bl))
    table = bca_dims(z, r, Workspace(z))
    assert table.bc_total(r) == bc
    assert table.a_total(r) == a


def test_square_zero_for_all_pages():
    sq = build_square(1, 1)
    table = bca_dims(sq, 4, Workspace(sq))
    for r in (1, 2, 3, 4):
        assert table.bc_total(r) == 0 and table.a_total(r) == 0


# ---------------------------------------------------------------------------
# canonical maps


def test_canonical_maps_dot():
    dot = build_zigzag(dot_shape(1, 1))
    maps = canonical_maps(dot, 2)
    one = Matrix.identity(1)
    for table in (maps.bc_to_page, maps.bc_to_a, maps.page_to_a,
                  maps.bc_to_de_rham, maps.de_rham_to_a):
        assert table[(1, 1)] == one
    assert maps.commutes and maps.bc_surjective and maps.a_injective


def test_canonical_maps_all_iso_on_dots_and_squares():
    c = direct_sum(direct_sum(build_zigzag(dot_shape(0, 1), grid=(2, 2)),
                              build_square(0, 0, grid=(2, 2))),
                   build_zigzag(dot_shape(2, 2), grid=(2, 2)))
    ws = Workspace(c)
    for r in (1, 2, 3):
        maps = canonical_maps(c, r, ws)
        assert maps.commutes and maps.bc_surjective and maps.a_injective
        for (p, q) in c.support():
            m = maps.bc_to_a[(p, q)]
            assert m.rows == m.cols and m.rank() == m.rows


def test_canonical_maps_zero_between_unequal_dims():
    # length-3 zigzag with both outer arrows at page 2: Bott-Chern has
    # dimension 2, Aeppli dimension 0, so the comparison map is forced zero
    z = build_zigzag(ZigzagShape(((0, 1),), True, True))
    ws = Workspace(z)
    maps = canonical_maps(z, 2, ws)
    total_bc = sum(m.cols for m in maps.bc_to_a.values())
    total_a = sum(m.rows for m in maps.bc_to_a.values())
    assert total_bc == 2 and total_a == 0
    assert maps.commutes and maps.bc_surjective and maps.a_injective


def test_canonical_maps_properties_random(random_suite):
    for seed, c, ws in random_suite[:6]:
        for r in (1, 2, 3):
            maps = canonical_maps(c, r, ws)
            assert maps.commutes, (seed, r)
            assert maps.bc_surjective, (seed, r)
            assert maps.a_injective, (seed, r)


# ---------------------------------------------------------------------------
# verdicts


def test_verdict_dots_and_squares_true():
    c = direct_sum(build_zigzag(dot_shape(0, 0), grid=(2, 2)),
                   build_square(1, 1, grid=(2, 2)))
    ws = Workspace(c)
    for r in (1, 2, 3):
        assert page_ddbar_verdict(c, r, ws).verdict is True


def test_verdict_length_four_zigzag():
    z = build_zigzag(ZigzagShape(((0, 1), (1, 0)), False, True))
    ws = Workspace(z)
    assert page_ddbar_verdict(z, 2, ws).verdict is False
    assert page_ddbar_verdict(z, 3, ws).verdict is True


def test_verdict_odd_zigzag_false_forever():
    z = build_zigzag(ZigzagShape(((0, 1),), True, True))
    ws = Workspace(z)
    for r in (1, 2, 3, 4):
        assert page_ddbar_verdict(z, r, ws).verdict is False


def test_verdict_criteria_agree_random(random_suite):
    # (B), (F), structure agreement and the (D) == (E), verdict => (C) ^ (D)
    # relations are enforced inside the call; here we additionally pin down
    # the reported shape of the result
    for seed, c, ws in random_suite:
        for r in (1, 2, 3, 4):
            v = page_ddbar_verdict(c, r, ws, use_structure=True)
            decided = {k for k, val in v.criteria.items() if val is not None}
            assert {"B", "C", "D", "E", "F"} <= decided, (seed, r)
            assert v.criteria["B"] == v.criteria["F"] == v.verdict
            if v.criteria.get("structure") is not None:
                assert v.criteria["structure"] == v.verdict
            assert v.criteria["D"] == v.criteria["E"]
            if v.verdict:
                assert v.criteria["C"] and v.criteria["D"]
            assert v.duality_gap == ((v.criteria["C"] or v.criteria["D"])
                                     and not v.verdict)


def test_duality_gap_on_inward_odd_zigzag():
    # odd zigzag with both outer arrows missing: injectivity (D) and the
    # exactness equivalence (E) hold from r = 2 on although the property
    # fails; this is exactly the gap that Serre-type duality closes on
    # manifolds
    z = build_zigzag(ZigzagShape(((0, 1), (1, 0)), False, False))
    ws = Workspace(z)
    v = page_ddbar_verdict(z, 2, ws)
    assert v.verdict is False
    assert v.criteria["D"] is True and v.criteria["E"] is True
    assert v.duality_gap


def test_duality_gap_on_antidiagonal_cancellation():
    # a type-L zigzag plus a type-M zigzag one degree up, placed so the
    # generators of the latter sit on the upper cells of the former: at r=2
    # every bidegree has equal Bott-Chern and Aeppli dimensions, yet the
    # comparison map vanishes, so (C) holds while the property fails
    from bigraded.bicomplex import direct_sum
    L5 = build_zigzag(ZigzagShape(((2, 3), (3, 2)), True, True), grid=(4, 4))
    M5 = build_zigzag(ZigzagShape(((2, 4), (3, 3), (4, 2)), False, False), grid=(4, 4))
    s = direct_sum(L5, M5)
    ws = Workspace(s)
    v = page_ddbar_verdict(s, 2, ws)
    assert v.verdict is False
    assert v.criteria["C"] is True
    assert v.duality_gap
    table = bca_dims(s, 2, ws)
    for (p, q) in s.support():
        assert table.bc_dim(2, p, q) == table.a_dim(2, p, q)


def test_verdict_explain_witness():
    z = build_zigzag(ZigzagShape(((0, 0),), False, True))  # length-2, fails at r=1
    v = page_ddbar_verdict(z, 1, Workspace(z), use_structure=False, explain=True)
    assert v.verdict is False
    assert v.witness is not None
    assert v.witness["memberships"]["ddbar_exact"] is False


def test_calabi_eckmann_never_page_ddbar():
    ce = example_calabi_eckmann(1, 1)
    ws = Workspace(ce)
    v = page_ddbar_verdict(ce, 2, ws, use_structure=False, explain=True)
    assert v.verdict is False
    # the witness is a concrete form exhibiting the failure: here criterion
    # (E) holds (a duality gap), so the witness comes from the subspace
    # identities of (F)
    assert v.witness is not None
    assert v.duality_gap


# ---------------------------------------------------------------------------
# the dimension inequality


def test_inequality_length_three_zigzag_equality_without_property():
    z = build_zigzag(ZigzagShape(((0, 1),), True, True))
    ws = Workspace(z)
    rep = inequality_check(z, 2, ws)
    assert (rep.bca_total, rep.page_total, rep.betti_doubled) == (2, 2, 2)
    assert rep.chain_ok
    assert rep.verdict is False  # equality does not force the property


def test_inequality_square():
    rep = inequality_check(build_square(0, 0), 2)
    assert (rep.bca_total, rep.page_total, rep.betti_doubled) == (0, 0, 0)


def test_inequality_random(random_suite):
    for seed, c, ws in random_suite:
        for r in (1, 2, 3, 4):
            rep = inequality_check(c, r, ws)
            assert rep.chain_ok, (seed, r)
            if rep.verdict:
                assert rep.equality_ok, (seed, r)


def test_hopf_model_never_page_ddbar():
    # the Hopf-surface model degenerates at page 1 yet is not a page-r
    # del-delbar complex for any r: its decomposition keeps odd non-dot
    # zigzags
    ce = example_calabi_eckmann(0, 1)
    ws = Workspace(ce)
    for r in (1, 2, 3):
        assert page_ddbar_verdict(ce, r, ws, use_structure=False).verdict is False
