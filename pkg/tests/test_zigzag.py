"""Shape enumeration, closed-form invariants, multiplicity recovery, certificates."""

from bigraded.bca import bca_dims
from bigraded.bicomplex import de_rham_dims, direct_sum, validate
from bigraded.linalg import Matrix
from bigraded.models import (Square, ZigzagShape, build_shape, build_zigzag,
                             dot_shape, shape_length)
from bigraded.spectral import Workspace, page_dims
from bigraded.zigzag import (DecompositionCertificate, enumerate_shapes,
                             hom_dim, multiplicity_solve,
                             predicted_invariants, structure_verdict,
                             verify_certificate)


def test_enumerate_1x1_grid():
    shapes = enumerate_shapes((0, 0))
    assert shapes == [dot_shape(0, 0)]


def test_enumerate_2x2_grid_hand_count():
    shapes = enumerate_shapes((1, 1))
    squares = [s for s in shapes if isinstance(s, Square)]
    assert squares == [Square(0, 0)]
    dots = [s for s in shapes if isinstance(s, ZigzagShape) and s.is_dot()]
    assert len(dots) == 4
    # single-generator non-dots: vertical pairs at q=0 cells, horizontal
    # pairs at p=0 cells, the full corner shape at (0,0)
    one_gen = [s for s in shapes if isinstance(s, ZigzagShape)
               and s.gen_count == 1 and not s.is_dot()]
    assert len(one_gen) == 5
    # two-generator staircases: gens ((0,1),(1,0)), no room for outer arrows
    two_gen = [s for s in shapes if isinstance(s, ZigzagShape) and s.gen_count == 2]
    assert len(two_gen) == 1 and not two_gen[0].d2_out_first and not two_gen[0].d1_out_last
    assert len(shapes) == 11


def test_every_enumerated_shape_builds_valid():
    for shape in enumerate_shapes((2, 2)):
        c = build_shape(shape, (2, 2))
        assert validate(c).ok
        assert c.total_dim() == shape_length(shape)


def test_predictions_match_direct_computation_all_shapes():
    """The central oracle: closed forms against full tower computation.

    Covers every shape of length <= 8 on a 4x4 grid (both even
    orientations, both odd types) and r = 1..4, per bidegree.
    """
    shapes = [s for s in enumerate_shapes((3, 3)) if shape_length(s) <= 8]
    assert len(shapes) > 40
    for shape in shapes:
        c = build_shape(shape, (3, 3))
        ws = Workspace(c)
        pages = page_dims(c, 4, ws)
        bca = bca_dims(c, 4, ws)
        betti = {k: v for k, v in de_rham_dims(ws.total).items() if v}
        pred = predicted_invariants(shape, 4)
        assert pred.e == pages.e, shape
        assert pred.ebar == pages.ebar, shape
        assert pred.bc == bca.bc, shape
        assert pred.a == bca.a, shape
        assert pred.b == betti, shape
        assert pred.dims == dict(c.dims), shape


def test_hom_dim_end_of_indecomposable_is_one():
    # endomorphisms of dots and squares are scalars
    for shape in (dot_shape(1, 1), Square(0, 0)):
        c = build_shape(shape)
        assert hom_dim(c, c) == 1


def test_hom_dim_additive():
    z = build_zigzag(ZigzagShape(((0, 1), (1, 0)), False, True), grid=(2, 2))
    d = build_zigzag(dot_shape(0, 1), grid=(2, 2))
    s = direct_sum(z, d)
    assert hom_dim(z, s) == hom_dim(z, z) + hom_dim(z, d)


def test_multiplicity_square_alone():
    c = build_shape(Square(0, 0))
    res = multiplicity_solve(c)
    assert res.status == "unique"
    assert res.inventory == {Square(0, 0): 1}


def test_multiplicity_double_dot():
    dot = build_zigzag(dot_shape(1, 1))
    c = direct_sum(dot, dot)
    res = multiplicity_solve(c)
    assert res.inventory == {dot_shape(1, 1): 2}


def test_multiplicity_roundtrip(structured_suite):
    for seed, c, inventory, _ in structured_suite:
        res = multiplicity_solve(c)
        assert res.status == "unique", (seed, res.kernel_dim)
        assert res.inventory == inventory, seed


def test_multiplicity_resolves_overlapping_odd_zigzags():
    # dimension-type invariants alone cannot tell these two sums apart; the
    # Hom features must
    a1 = direct_sum(
        build_zigzag(ZigzagShape(((0, 3), (1, 2), (2, 1)), True, True), (4, 4)),
        build_zigzag(ZigzagShape(((1, 2), (2, 1), (3, 0)), True, True), (4, 4)))
    a2 = direct_sum(
        build_zigzag(ZigzagShape(((0, 3), (1, 2), (2, 1), (3, 0)), True, True), (4, 4)),
        build_zigzag(ZigzagShape(((1, 2), (2, 1)), True, True), (4, 4)))
    r1 = multiplicity_solve(a1)
    r2 = multiplicity_solve(a2)
    assert r1.status == r2.status == "unique"
    assert r1.inventory != r2.inventory
    assert sum(r1.inventory.values()) == 2 and sum(r2.inventory.values()) == 2


def test_structure_verdict_from_inventory():
    assert structure_verdict({dot_shape(0, 0): 3, Square(1, 1): 2}, 1) is True
    z4 = ZigzagShape(((0, 1), (1, 0)), False, True)
    assert structure_verdict({z4: 1}, 2) is False
    assert structure_verdict({z4: 1}, 3) is True
    z3 = ZigzagShape(((0, 1),), True, True)
    for r in (1, 2, 3, 4):
        assert structure_verdict({z3: 1}, r) is False


def test_structure_verdict_agrees_with_criteria(random_suite):
    from bigraded.bca import page_ddbar_verdict
    for seed, c, ws in random_suite[:8]:
        res = multiplicity_solve(c, ws=ws)
        assert res.status == "unique"
        for r in (1, 2, 3):
            v = page_ddbar_verdict(c, r, ws, use_structure=False)
            assert structure_verdict(res.inventory, r) == v.verdict, (seed, r)


def test_certificate_identity_transform_accepted():
    dot = build_zigzag(dot_shape(0, 1), grid=(2, 2))
    sq = Square(0, 0)
    c = direct_sum(dot, build_shape(sq, (2, 2)))
    cert = DecompositionCertificate(
        transforms={},
        blocks=[(dot_shape(0, 1), {(0, 1): (0,)}),
                (sq, {(0, 0): (0,), (1, 0): (0,), (0, 1): (1,), (1, 1): (0,)})])
    assert verify_certificate(c, cert).ok


def test_certificate_wrong_label_rejected():
    dot = build_zigzag(dot_shape(0, 1), grid=(2, 2))
    sq = Square(0, 0)
    c = direct_sum(dot, build_shape(sq, (2, 2)))
    # swap the two indices at (0,1): the square block then claims the dot's
    # basis vector, which has no d2 arrow into (1,1)
    cert = DecompositionCertificate(
        transforms={},
        blocks=[(dot_shape(0, 1), {(0, 1): (1,)}),
                (sq, {(0, 0): (0,), (1, 0): (0,), (0, 1): (0,), (1, 1): (0,)})])
    report = verify_certificate(c, cert)
    assert not report.ok


def test_certificate_roundtrip_scrambled(structured_suite):
    for seed, c, inventory, cert in structured_suite:
        report = verify_certificate(c, cert)
        assert report.ok, (seed, report.reason)
        claimed = {}
        for shape, _ in cert.blocks:
            claimed[shape] = claimed.get(shape, 0) + 1
        assert claimed == inventory, seed


def test_certificate_singular_transform_rejected():
    dot = build_zigzag(dot_shape(0, 0))
    cert = DecompositionCertificate(
        transforms={(0, 0): Matrix.from_rows([[0]])},
        blocks=[(dot_shape(0, 0), {(0, 0): (0,)})])
    report = verify_certificate(dot, cert)
    assert not report.ok and "invertible" in report.reason


def test_certificate_unassigned_index_rejected():
    dot = build_zigzag(dot_shape(0, 0))
    two = direct_sum(dot, dot)
    cert = DecompositionCertificate(
        transforms={}, blocks=[(dot_shape(0, 0), {(0, 0): (0,)})])
    report = verify_certificate(two, cert)
    assert not report.ok and "unassigned" in report.reason


def test_certificate_json_roundtrip(structured_suite):
    import json
    from bigraded.zigzag import certificate_from_dict, certificate_to_dict
    for seed, c, _, cert in structured_suite[:4]:
        obj = json.loads(json.dumps(certificate_to_dict(cert)))
        back = certificate_from_dict(obj)
        assert back.transforms == cert.transforms
        assert back.blocks == cert.blocks
        assert verify_certificate(c, back).ok
