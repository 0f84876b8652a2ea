"""Structure theory: indecomposable shapes, their invariants, multiplicity recovery.

Every bounded double complex is a direct sum of squares and zigzags.  Each
shape contributes closed-form amounts to every invariant this package
computes (page dimensions, conjugate page dimensions, Bott-Chern and Aeppli
dimensions, Betti numbers), so the multiset of indecomposable summands can
be recovered by solving one exact linear system

    sum over shapes  mult(s) * predicted(s)  =  measured(c)

over all per-bidegree invariants at once.  Uniqueness of the solution is an
empirical per-input fact; when the system has a kernel the result is
reported as ambiguous, never guessed.

A decomposition claim can also be certified: a certificate carries a basis
change and an assignment of the new basis vectors to shape instances, and
`verify_certificate` checks block-diagonality plus per-block shape
isomorphism.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from bigraded.bca import bca_dims
from bigraded.bicomplex import DoubleComplex, change_of_basis, de_rham_dims
from bigraded.linalg import LinalgError, Matrix, kernel_basis
from bigraded.models import (Square, ZigzagShape, shape_arrows, shape_cells,
                             shape_length)
from bigraded.spectral import ConsistencyError, Workspace, page_dims

__all__ = [
    "enumerate_shapes",
    "ShapePrediction",
    "predicted_invariants",
    "measured_invariants",
    "hom_dim",
    "MultiplicityResult",
    "multiplicity_solve",
    "structure_verdict",
    "DecompositionCertificate",
    "CertificateReport",
    "verify_certificate",
    "certificate_to_dict",
    "certificate_from_dict",
]


def enumerate_shapes(grid):
    """All squares and zigzag shapes fitting the grid, deterministically ordered."""
    pmax, qmax = grid
    shapes = []
    for p in range(pmax):
        for q in range(qmax):
            shapes.append(Square(p, q))
    max_gens = min(pmax, qmax) + 1
    for g in range(1, max_gens + 1):
        for p0 in range(pmax - g + 2):
            if p0 + g - 1 > pmax:
                continue
            for q0 in range(g - 1, qmax + 1):
                gens = tuple((p0 + i, q0 - i) for i in range(g))
                for bf in (False, True):
                    if bf and q0 + 1 > qmax:
                        continue
                    for bl in (False, True):
                        if bl and p0 + g > pmax:
                            continue
                        shapes.append(ZigzagShape(gens, bf, bl))
    return sorted(shapes, key=_shape_key)


def _shape_key(shape):
    if isinstance(shape, Square):
        return (0, shape.p, shape.q, 0, 0)
    return (1, shape.generators, int(shape.d2_out_first), int(shape.d1_out_last))


@dataclass
class ShapePrediction:
    """Closed-form invariant tables of one shape, keyed like the measured ones."""

    shape: object
    dims: dict = field(default_factory=dict)   # (p,q) -> component dimension
    e: dict = field(default_factory=dict)      # (r,p,q) -> page dimension
    ebar: dict = field(default_factory=dict)   # conjugate pages
    bc: dict = field(default_factory=dict)     # Bott-Chern
    a: dict = field(default_factory=dict)      # Aeppli
    b: dict = field(default_factory=dict)      # k -> Betti number


def predicted_invariants(shape, r_max) -> ShapePrediction:
    """Invariant tables of a shape without building it.

    Squares contribute dimensions only.  For zigzags the page contributions
    sit at the free ends, Bott-Chern classes live on the upper antidiagonal
    and Aeppli classes on the lower one, with r-1 classes trimmed from each
    end that carries an outgoing arrow.
    """
    pred = ShapePrediction(shape)
    for cell in shape_cells(shape):
        pred.dims[cell] = pred.dims.get(cell, 0) + 1
    if isinstance(shape, Square):
        return pred

    gens = shape.generators
    g = len(gens)
    bf, bl = shape.d2_out_first, shape.d1_out_last
    corners = [(p + 1, q) for (p, q) in gens[:-1]]
    top = (gens[0][0], gens[0][1] + 1)
    right = (gens[-1][0] + 1, gens[-1][1])
    k = gens[0][0] + gens[0][1]

    if not bf and not bl:
        pred.b[k] = 1
    elif bf and bl:
        pred.b[k + 1] = 1

    for r in range(1, r_max + 1):
        if not bf and not bl:
            pred.e[(r,) + gens[0]] = 1
            pred.ebar[(r,) + gens[-1]] = 1
            for cell in gens:
                pred.a[(r,) + cell] = 1
            if g == 1:
                pred.bc[(r,) + gens[0]] = 1
            else:
                for j in range(r, g - r + 1):
                    pred.bc[(r,) + corners[j - 1]] = 1
        elif bf and bl:
            pred.e[(r,) + right] = 1
            pred.ebar[(r,) + top] = 1
            for cell in [top] + corners + [right]:
                pred.bc[(r,) + cell] = 1
            for j in range(r, g - r + 2):
                pred.a[(r,) + gens[j - 1]] = 1
        elif bl:
            if r <= g:
                pred.e[(r,) + gens[0]] = 1
                pred.e[(r,) + right] = 1
            for j in range(r, g + 1):
                cell = right if j == g else corners[j - 1]
                pred.bc[(r,) + cell] = 1
            for j in range(1, g - r + 2):
                pred.a[(r,) + gens[j - 1]] = 1
        else:
            if r <= g:
                pred.ebar[(r,) + top] = 1
                pred.ebar[(r,) + gens[-1]] = 1
            for j in range(1, g - r + 2):
                cell = top if j == 1 else corners[j - 2]
                pred.bc[(r,) + cell] = 1
            for j in range(r, g + 1):
                pred.a[(r,) + gens[j - 1]] = 1
    return pred


def measured_invariants(c: DoubleComplex, r_max, ws: Workspace | None = None) -> ShapePrediction:
    """The same invariant tables, computed from the complex itself."""
    ws = ws or Workspace(c)
    out = ShapePrediction(None)
    out.dims = dict(ws.c.dims)
    pages = page_dims(ws.c, r_max, ws)
    out.e = dict(pages.e)
    out.ebar = dict(pages.ebar)
    table = bca_dims(ws.c, r_max, ws)
    out.bc = dict(table.bc)
    out.a = dict(table.a)
    out.b = {k: v for k, v in de_rham_dims(ws.total).items() if v}
    return out


def hom_dim(a: DoubleComplex, b: DoubleComplex) -> int:
    """Dimension of the space of bidegree-(0,0) chain maps a -> b.

    A chain map is a family f(p,q): a^{p,q} -> b^{p,q} with
    d1 f = f d1 and d2 f = f d2.  The dimension is additive in b and
    invariant under basis changes, which makes Hom counts against a panel of
    test shapes a sharp fingerprint of the summands of b: dimension-type
    invariants alone cannot always separate overlapping odd zigzags.
    """
    cells = [cell for cell in a.support() if b.dim(*cell) > 0]
    offsets = {}
    total = 0
    for cell in cells:
        offsets[cell] = total
        total += a.dim(*cell) * b.dim(*cell)
    if total == 0:
        return 0
    rows = []

    def block(cell):
        # column indices of the vectorised unknown f(cell), row-major in
        # (b-index, a-index)
        return offsets.get(cell)

    for (p, q) in a.support():
        for da, db, tgt in ((a.d1_at(p, q), b.d1_at(p, q), (p + 1, q)),
                            (a.d2_at(p, q), b.d2_at(p, q), (p, q + 1))):
            nb_t = b.dim(*tgt)
            if nb_t == 0:
                continue
            na_s, nb_s = a.dim(p, q), b.dim(p, q)
            na_t = a.dim(*tgt)
            src_off = block((p, q))
            tgt_off = block(tgt)
            for i in range(nb_t):
                for j in range(na_s):
                    row = [0] * total
                    if src_off is not None:
                        for k in range(nb_s):
                            if db.data[i][k]:
                                row[src_off + k * na_s + j] += db.data[i][k]
                    if tgt_off is not None:
                        for l in range(na_t):
                            if da.data[l][j]:
                                row[tgt_off + i * na_t + l] -= da.data[l][j]
                    if any(row):
                        rows.append(row)
    if not rows:
        return total
    return total - Matrix(len(rows), total, rows).rank()


_SHAPE_HOM_CACHE = {}


def _shape_hom(test_shape, target_shape):
    key = (test_shape, target_shape)
    hit = _SHAPE_HOM_CACHE.get(key)
    if hit is None:
        from bigraded.models import build_shape
        hit = hom_dim(build_shape(test_shape), build_shape(target_shape))
        _SHAPE_HOM_CACHE[key] = hit
    return hit


@dataclass
class MultiplicityResult:
    status: str                 # "unique" or "ambiguous"
    inventory: dict | None      # shape -> multiplicity (status "unique" only)
    kernel_dim: int
    r_max: int

    def __bool__(self):
        return self.status == "unique"


def multiplicity_solve(c: DoubleComplex, r_max=None, ws: Workspace | None = None) -> MultiplicityResult:
    """Recover the multiset of indecomposable summands from invariants alone.

    Only shapes supported inside the complex's support can occur (component
    dimensions are additive and nonnegative), so the system is restricted to
    those.  An infeasible system falsifies the implementation, since a
    decomposition into squares and zigzags always exists.
    """
    ws = ws or Workspace(c)
    c = ws.c
    if r_max is None:
        r_max = max(c.pmax, c.qmax) + 1
    support = set(c.dims)
    shapes = [s for s in enumerate_shapes((c.pmax, c.qmax))
              if all(cell in support for cell in shape_cells(s))]
    if not shapes:
        return MultiplicityResult("unique", {}, 0, r_max)
    measured = measured_invariants(c, r_max, ws)
    preds = [predicted_invariants(s, r_max) for s in shapes]

    features = set()
    for tables in [measured] + preds:
        for tag in ("dims", "e", "ebar", "bc", "a", "b"):
            for key in getattr(tables, tag):
                features.add((tag, key))
    features = sorted(features, key=repr)

    rows = []
    rhs = []
    for tag, key in features:
        rows.append([getattr(p, tag).get(key, 0) for p in preds])
        rhs.append([getattr(measured, tag).get(key, 0)])
    from bigraded.models import build_shape
    for test in shapes:
        test_complex = build_shape(test)
        rows.append([_shape_hom(test, s) for s in shapes])
        rhs.append([hom_dim(test_complex, c)])
    system = Matrix(len(rows), len(shapes), rows)
    sol = system.solve(Matrix(len(rows), 1, rhs))
    if sol is None:
        raise ConsistencyError(
            f"no shape inventory matches the invariants of {c.name!r}; "
            "the implementation is at fault")
    kdim = kernel_basis(system).dim
    if kdim:
        return MultiplicityResult("ambiguous", None, kdim, r_max)
    inventory = {}
    for shape, value in zip(shapes, sol.column(0)):
        if value == 0:
            continue
        if value.denominator != 1 or value < 0:
            raise ConsistencyError(
                f"unique inventory solution is not a nonnegative integer vector "
                f"({shape} -> {value})")
        inventory[shape] = int(value)
    return MultiplicityResult("unique", inventory, 0, r_max)


def structure_verdict(inventory, r) -> bool:
    """Page-(r-1) del-delbar property read off a shape inventory.

    Holds iff there is no odd zigzag other than dots and no even zigzag
    longer than 2(r-1).  Accepts an inventory dict or a complex (which is
    then decomposed first; ambiguity raises).
    """
    if isinstance(inventory, DoubleComplex):
        result = multiplicity_solve(inventory)
        if result.status != "unique":
            raise LinalgError("structure verdict unavailable: ambiguous inventory")
        inventory = result.inventory
    for shape, mult in inventory.items():
        if not mult or isinstance(shape, Square):
            continue
        length = shape_length(shape)
        if length % 2 == 1 and length >= 3:
            return False
        if length % 2 == 0 and length > 2 * (r - 1):
            return False
    return True


# ---------------------------------------------------------------------------
# certificates


@dataclass
class DecompositionCertificate:
    """Checkable decomposition: a basis change plus a block assignment.

    `transforms[(p,q)]` columns are the new basis in current coordinates;
    `blocks` lists ``(shape, {cell: (new-basis indices...)})`` and must
    partition every component's index set.
    """

    transforms: dict
    blocks: list


@dataclass
class CertificateReport:
    ok: bool
    reason: str | None = None
    failing_block: int | None = None

    def __bool__(self):
        return self.ok


def _shape_to_dict(shape):
    if isinstance(shape, Square):
        return {"kind": "square", "at": [shape.p, shape.q]}
    return {"kind": "zigzag", "generators": [list(g) for g in shape.generators],
            "d2_out_first": shape.d2_out_first, "d1_out_last": shape.d1_out_last}


def _shape_from_dict(obj):
    if obj["kind"] == "square":
        return Square(*obj["at"])
    return ZigzagShape(tuple(tuple(g) for g in obj["generators"]),
                       bool(obj["d2_out_first"]), bool(obj["d1_out_last"]))


def certificate_to_dict(cert: DecompositionCertificate):
    """JSON form: transforms as rational-string matrices, blocks with cells."""
    out = {"transforms": {}, "blocks": []}
    for (p, q), m in sorted(cert.transforms.items()):
        out["transforms"][f"{p},{q}"] = [
            [str(x) if x.denominator != 1 else str(x.numerator) for x in row]
            for row in m.data]
    for shape, cells in cert.blocks:
        out["blocks"].append({
            "shape": _shape_to_dict(shape),
            "cells": {f"{p},{q}": list(ix) for (p, q), ix in sorted(cells.items())},
        })
    return out


def certificate_from_dict(obj) -> DecompositionCertificate:
    from fractions import Fraction
    transforms = {}
    for key, rows in obj.get("transforms", {}).items():
        p, q = (int(x) for x in key.split(","))
        transforms[(p, q)] = Matrix(
            len(rows), len(rows[0]) if rows else 0,
            [[Fraction(str(x)) for x in row] for row in rows])
    blocks = []
    for item in obj.get("blocks", []):
        cells = {}
        for key, ix in item["cells"].items():
            p, q = (int(x) for x in key.split(","))
            cells[(p, q)] = tuple(ix)
        blocks.append((_shape_from_dict(item["shape"]), cells))
    return DecompositionCertificate(transforms, blocks)


def verify_certificate(c: DoubleComplex, cert: DecompositionCertificate) -> CertificateReport:
    """Accept iff the transformed complex is block-diagonal with the claimed shapes."""
    owner = {}
    for bi, (shape, cells) in enumerate(cert.blocks):
        claimed = set(shape_cells(shape))
        if claimed != set(cells):
            return CertificateReport(False, f"block {bi} cells do not match its shape", bi)
        for cell, indices in cells.items():
            if len(indices) != 1:
                return CertificateReport(False, f"block {bi} must own exactly one index per cell", bi)
            for i in indices:
                if (cell, i) in owner:
                    return CertificateReport(False, f"index {i} at {cell} assigned twice", bi)
                owner[(cell, i)] = bi
    for (p, q) in c.support():
        for i in range(c.dim(p, q)):
            if ((p, q), i) not in owner:
                return CertificateReport(False, f"index {i} at {(p, q)} unassigned", None)
    try:
        transformed = change_of_basis(c, cert.transforms)
    except LinalgError as exc:
        return CertificateReport(False, f"transform not invertible: {exc}", None)

    for (p, q) in c.support():
        for which, m, tgt in (("d1", transformed.d1_at(p, q), (p + 1, q)),
                              ("d2", transformed.d2_at(p, q), (p, q + 1))):
            for i in range(m.rows):
                for j in range(m.cols):
                    if m.data[i][j] != 0 and owner[(tgt, i)] != owner[((p, q), j)]:
                        return CertificateReport(
                            False,
                            f"{which} at {(p, q)} couples block {owner[((p, q), j)]} "
                            f"to block {owner[(tgt, i)]}", owner[((p, q), j)])
    for bi, (shape, cells) in enumerate(cert.blocks):
        for (src, which, dst) in shape_arrows(shape):
            m = transformed.d1_at(*src) if which == "d1" else transformed.d2_at(*src)
            i = cells[dst][0]
            j = cells[src][0]
            if m.data[i][j] == 0:
                return CertificateReport(
                    False, f"block {bi}: expected nonzero {which} arrow {src} -> {dst}", bi)
    return CertificateReport(True)
