"""Bounded double complexes over Q: data model, validation, constructions.

A double complex here is a bigraded rational vector space supported on a
finite grid ``0..pmax x 0..qmax`` with two square-zero differentials d1 of
bidegree (1,0) and d2 of bidegree (0,1) that anticommute:

    d1 d1 = 0,   d2 d2 = 0,   d1 d2 + d2 d1 = 0.

Components outside the grid are zero, and maps leaving the grid are zero;
this keeps the boundary bookkeeping of the tower solvers uniform.

Input files may carry commuting-convention data (d1 d2 = d2 d1); ingestion
twists d2 by (-1)^p, which converts losslessly to the anticommuting
convention used everywhere internally.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from fractions import Fraction

from bigraded.linalg import LinalgError, Matrix

Q = Fraction

__all__ = [
    "DoubleComplex",
    "TotalComplex",
    "ValidationReport",
    "validate",
    "direct_sum",
    "change_of_basis",
    "swap_complex",
    "total_complex",
    "de_rham_dims",
    "euler_characteristic",
    "random_complex",
    "random_invertible",
    "complex_to_dict",
    "complex_from_dict",
    "load_complex",
    "dump_complex",
]


class DoubleComplex:
    """Bounded bigraded space with differentials d1: (p,q)->(p+1,q), d2: (p,q)->(p,q+1)."""

    __slots__ = ("name", "pmax", "qmax", "dims", "d1", "d2", "labels", "meta")

    def __init__(self, name, pmax, qmax, dims, d1, d2, labels=None, meta=None):
        self.name = name
        self.pmax = pmax
        self.qmax = qmax
        self.dims = {k: v for k, v in dims.items() if v}
        self.d1 = {}
        self.d2 = {}
        for (p, q), m in d1.items():
            if m.rows != self.dim(p + 1, q) or m.cols != self.dim(p, q):
                raise LinalgError(f"d1 at {(p, q)} has shape {m.rows}x{m.cols}, "
                                  f"expected {self.dim(p + 1, q)}x{self.dim(p, q)}")
            if not m.is_zero():
                self.d1[(p, q)] = m
        for (p, q), m in d2.items():
            if m.rows != self.dim(p, q + 1) or m.cols != self.dim(p, q):
                raise LinalgError(f"d2 at {(p, q)} has shape {m.rows}x{m.cols}, "
                                  f"expected {self.dim(p, q + 1)}x{self.dim(p, q)}")
            if not m.is_zero():
                self.d2[(p, q)] = m
        self.labels = labels or {}
        self.meta = meta or {}

    def dim(self, p, q):
        if p < 0 or q < 0 or p > self.pmax or q > self.qmax:
            return 0
        return self.dims.get((p, q), 0)

    def d1_at(self, p, q):
        m = self.d1.get((p, q))
        if m is None:
            return Matrix.zero(self.dim(p + 1, q), self.dim(p, q))
        return m

    def d2_at(self, p, q):
        m = self.d2.get((p, q))
        if m is None:
            return Matrix.zero(self.dim(p, q + 1), self.dim(p, q))
        return m

    def cells(self):
        """All in-grid bidegrees, lexicographic; includes zero-dimensional ones."""
        return [(p, q) for p in range(self.pmax + 1) for q in range(self.qmax + 1)]

    def support(self):
        return sorted(self.dims)

    def total_dim(self):
        return sum(self.dims.values())

    def grid_diameter(self):
        return max(self.pmax, self.qmax) + 1

    def __repr__(self):
        return (f"DoubleComplex({self.name!r}, grid {self.pmax}x{self.qmax}, "
                f"total dim {self.total_dim()})")


@dataclass
class ValidationReport:
    ok: bool
    violations: list

    def __bool__(self):
        return self.ok

    def describe(self):
        if self.ok:
            return "valid double complex"
        lines = []
        for kind, p, q, prod in self.violations:
            lines.append(f"{kind} fails at ({p},{q}): product = {prod!r}")
        return "\n".join(lines)


def validate(c: DoubleComplex) -> ValidationReport:
    """Check d1^2 = 0, d2^2 = 0 and anticommutation on every bidegree."""
    violations = []
    for p in range(-1, c.pmax + 1):
        for q in range(-1, c.qmax + 1):
            m = c.d1_at(p + 1, q) * c.d1_at(p, q)
            if not m.is_zero():
                violations.append(("d1∘d1", p, q, m))
            m = c.d2_at(p, q + 1) * c.d2_at(p, q)
            if not m.is_zero():
                violations.append(("d2∘d2", p, q, m))
            m = c.d1_at(p, q + 1) * c.d2_at(p, q) + c.d2_at(p + 1, q) * c.d1_at(p, q)
            if not m.is_zero():
                violations.append(("anticommutation", p, q, m))
    return ValidationReport(not violations, violations)


def require_valid(c: DoubleComplex):
    report = validate(c)
    if not report.ok:
        raise LinalgError("invalid double complex:\n" + report.describe())


def direct_sum(a: DoubleComplex, b: DoubleComplex, name=None) -> DoubleComplex:
    """Block-diagonal sum; every invariant computed downstream is additive."""
    pmax = max(a.pmax, b.pmax)
    qmax = max(a.qmax, b.qmax)
    dims = {}
    for (p, q) in set(a.dims) | set(b.dims):
        dims[(p, q)] = a.dim(p, q) + b.dim(p, q)
    d1 = {}
    d2 = {}
    for p in range(pmax + 1):
        for q in range(qmax + 1):
            d1[(p, q)] = _block_diag(a.d1_at(p, q), b.d1_at(p, q))
            d2[(p, q)] = _block_diag(a.d2_at(p, q), b.d2_at(p, q))
    return DoubleComplex(name or f"{a.name}+{b.name}", pmax, qmax, dims, d1, d2)


def _block_diag(m1: Matrix, m2: Matrix) -> Matrix:
    rows = m1.rows + m2.rows
    cols = m1.cols + m2.cols
    out = [[Q(0)] * cols for _ in range(rows)]
    for i in range(m1.rows):
        for j in range(m1.cols):
            out[i][j] = m1.data[i][j]
    for i in range(m2.rows):
        for j in range(m2.cols):
            out[m1.rows + i][m1.cols + j] = m2.data[i][j]
    return Matrix(rows, cols, out)


def change_of_basis(c: DoubleComplex, transforms) -> DoubleComplex:
    """Rewrite the complex in new bases.

    ``transforms[(p,q)]`` has the new basis vectors as columns, expressed in
    the current coordinates; cells not mentioned keep their basis.  All
    downstream dimension tables are unchanged.
    """
    t = {}
    tinv = {}
    for (p, q) in c.cells():
        n = c.dim(p, q)
        m = transforms.get((p, q))
        if m is None:
            m = Matrix.identity(n)
        if m.rows != n or m.cols != n:
            raise LinalgError(f"transform at {(p, q)} must be {n}x{n}")
        t[(p, q)] = m
        tinv[(p, q)] = m.inverse()
    d1 = {}
    d2 = {}
    for (p, q) in c.cells():
        if c.dim(p, q) == 0:
            continue
        if c.dim(p + 1, q):
            d1[(p, q)] = tinv[(p + 1, q)] * c.d1_at(p, q) * t[(p, q)]
        if c.dim(p, q + 1):
            d2[(p, q)] = tinv[(p, q + 1)] * c.d2_at(p, q) * t[(p, q)]
    return DoubleComplex(c.name, c.pmax, c.qmax, dict(c.dims), d1, d2)


def swap_complex(c: DoubleComplex) -> DoubleComplex:
    """Exchange the two differentials, transposing the grid.

    The swapped complex at (p,q) is the original component at (q,p); pages of
    its column filtration are the conjugate pages of the original.
    """
    dims = {(q, p): n for (p, q), n in c.dims.items()}
    d1 = {}
    d2 = {}
    for (p, q), m in c.d2.items():
        d1[(q, p)] = m
    for (p, q), m in c.d1.items():
        d2[(q, p)] = m
    return DoubleComplex(c.name + ".swap", c.qmax, c.pmax, dims, d1, d2)


class TotalComplex:
    """Total complex of a double complex: T^k = sum of A^{p,q} with p+q=k."""

    __slots__ = ("kmax", "degree_dims", "layout", "differentials")

    def __init__(self, kmax, degree_dims, layout, differentials):
        self.kmax = kmax
        self.degree_dims = degree_dims
        self.layout = layout
        self.differentials = differentials

    def dim(self, k):
        return self.degree_dims.get(k, 0)

    def differential(self, k):
        m = self.differentials.get(k)
        if m is None:
            return Matrix.zero(self.dim(k + 1), self.dim(k))
        return m

    def block_offset(self, k, p, q):
        for (pp, qq, off, d) in self.layout.get(k, []):
            if (pp, qq) == (p, q):
                return off, d
        return None

    def inject(self, p, q, vec):
        """Embed a component vector into its total-degree coordinate block."""
        k = p + q
        out = [Q(0)] * self.dim(k)
        found = self.block_offset(k, p, q)
        if found is None:
            if any(x != 0 for x in vec):
                raise LinalgError("inject: component not present in total complex")
            return tuple(out)
        off, d = found
        if len(vec) != d:
            raise LinalgError("inject: wrong component dimension")
        for i, x in enumerate(vec):
            out[off + i] = x
        return tuple(out)

    def project(self, k, p, q, vec):
        found = self.block_offset(k, p, q)
        if found is None:
            return ()
        off, d = found
        return tuple(vec[off: off + d])


def total_complex(c: DoubleComplex) -> TotalComplex:
    """Assemble the total differential D = d1 + d2, blocks ordered lex in (p,q)."""
    kmax = c.pmax + c.qmax
    layout = {}
    degree_dims = {}
    for k in range(kmax + 1):
        off = 0
        blocks = []
        for p in range(c.pmax + 1):
            q = k - p
            d = c.dim(p, q)
            if d:
                blocks.append((p, q, off, d))
                off += d
        layout[k] = blocks
        degree_dims[k] = off
    differentials = {}
    for k in range(kmax + 1):
        rows = degree_dims.get(k + 1, 0)
        cols = degree_dims.get(k, 0)
        data = [[Q(0)] * cols for _ in range(rows)]
        for (p, q, off, d) in layout[k]:
            for m, tp, tq in ((c.d1_at(p, q), p + 1, q), (c.d2_at(p, q), p, q + 1)):
                target = None
                for (pp, qq, toff, td) in layout.get(k + 1, []):
                    if (pp, qq) == (tp, tq):
                        target = (toff, td)
                        break
                if target is None:
                    continue
                toff, _ = target
                for i in range(m.rows):
                    for j in range(m.cols):
                        data[toff + i][off + j] = m.data[i][j]
        differentials[k] = Matrix(rows, cols, data)
    t = TotalComplex(kmax, degree_dims, layout, differentials)
    for k in range(kmax):
        if not (t.differential(k + 1) * t.differential(k)).is_zero():
            raise LinalgError(f"total differential does not square to zero at degree {k}")
    return t


def de_rham_dims(t: TotalComplex):
    """Betti numbers of the total complex: b_k = dim ker D_k - rank D_{k-1}."""
    betti = {}
    for k in range(t.kmax + 1):
        ker = t.dim(k) - t.differential(k).rank()
        im = t.differential(k - 1).rank() if k > 0 else 0
        betti[k] = ker - im
    return betti


def euler_characteristic(c: DoubleComplex):
    return sum(((-1) ** (p + q)) * n for (p, q), n in c.dims.items())


def random_invertible(n, rng, spread=2):
    """Random invertible integer matrix: unit triangular factors and sign flips."""
    lower = [[Q(0)] * n for _ in range(n)]
    upper = [[Q(0)] * n for _ in range(n)]
    for i in range(n):
        lower[i][i] = Q(rng.choice((1, -1)))
        upper[i][i] = Q(1)
        for j in range(i):
            lower[i][j] = Q(rng.randint(-spread, spread))
            upper[j][i] = Q(rng.randint(-spread, spread))
    return Matrix(n, n, lower) * Matrix(n, n, upper)


def random_complex(grid, max_dim, seed, structure=False, max_shapes=None):
    """Deterministic random complex: a scrambled direct sum of known shapes.

    Builds a random direct sum of squares, zigzags and dots placed on the
    grid (per-cell dimension capped by `max_dim`, summand count capped by
    `max_shapes` when given), then hides it behind a random change of basis.
    Validity is guaranteed by construction and the hidden decomposition
    doubles as a ground truth for round-trip tests.

    With ``structure=True`` returns ``(complex, inventory, certificate)``
    where the certificate's transforms undo the scramble.
    """
    from bigraded import models
    from bigraded.zigzag import DecompositionCertificate

    pmax, qmax = grid
    rng = random.Random(seed)
    budget = {(p, q): max_dim for p in range(pmax + 1) for q in range(qmax + 1)}
    shapes = []
    if max_dim > 0:
        n_attempts = rng.randint(2, 4 + 2 * (pmax + qmax))
        if max_shapes is not None:
            n_attempts = min(n_attempts, max_shapes)
        for _ in range(n_attempts):
            shape = _random_shape(rng, pmax, qmax)
            cells = models.shape_cells(shape)
            if all(budget[c] >= 1 for c in cells):
                for cell in cells:
                    budget[cell] -= 1
                shapes.append(shape)
    summands = [models.build_shape(s, (pmax, qmax)) for s in shapes]
    acc = DoubleComplex(f"random-{seed}", pmax, qmax, {}, {}, {})
    blocks = []
    for s, piece in zip(shapes, summands):
        offsets = {cell: acc.dim(*cell) for cell in models.shape_cells(s)}
        acc = direct_sum(acc, piece, name=f"random-{seed}")
        blocks.append((s, offsets))
    transforms = {}
    for (p, q) in acc.cells():
        n = acc.dim(p, q)
        if n:
            transforms[(p, q)] = random_invertible(n, rng)
    scrambled = change_of_basis(acc, transforms)
    scrambled.meta["seed"] = seed
    if not structure:
        return scrambled
    inventory = {}
    for s in shapes:
        key = s if not isinstance(s, tuple) else s
        inventory[key] = inventory.get(key, 0) + 1
    cert_blocks = []
    for s, offsets in blocks:
        cells = {}
        for cell in models.shape_cells(s):
            cells[cell] = (offsets[cell],)
        cert_blocks.append((s, cells))
    cert = DecompositionCertificate(
        transforms={cell: m.inverse() for cell, m in transforms.items()},
        blocks=cert_blocks,
    )
    return scrambled, inventory, cert


def _random_shape(rng, pmax, qmax):
    from bigraded.models import Square, ZigzagShape

    kind = rng.random()
    if kind < 0.3 and pmax >= 1 and qmax >= 1:
        p = rng.randint(0, pmax - 1)
        q = rng.randint(0, qmax - 1)
        return Square(p, q)
    if kind < 0.55:
        return ZigzagShape(((rng.randint(0, pmax), rng.randint(0, qmax)),), False, False)
    # staircase of generators heading down-right
    max_gens = min(pmax + 1, qmax + 1, 4)
    g = rng.randint(1, max_gens)
    p0 = rng.randint(0, max(0, pmax - (g - 1)))
    q0 = rng.randint(min(g - 1, qmax), qmax)
    gens = tuple((p0 + i, q0 - i) for i in range(g))
    d2_first = rng.random() < 0.5 and q0 + 1 <= qmax
    d1_last = rng.random() < 0.5 and p0 + g <= pmax
    return ZigzagShape(gens, d2_first, d1_last)


# ---------------------------------------------------------------------------
# JSON interchange


def _parse_rational(s):
    if isinstance(s, int):
        return Q(s)
    return Q(str(s))


def _rational_str(x: Fraction):
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def _key(p, q):
    return f"{p},{q}"


def _unkey(s):
    p, q = s.split(",")
    return int(p), int(q)


def complex_to_dict(c: DoubleComplex):
    out = {
        "name": c.name,
        "convention": "anticommute",
        "grid": [c.pmax, c.qmax],
        "dims": {_key(p, q): n for (p, q), n in sorted(c.dims.items())},
        "d1": {},
        "d2": {},
    }
    if c.meta:
        out["meta"] = {k: v for k, v in sorted(c.meta.items())}
    for (p, q), m in sorted(c.d1.items()):
        out["d1"][_key(p, q)] = [[_rational_str(x) for x in row] for row in m.data]
    for (p, q), m in sorted(c.d2.items()):
        out["d2"][_key(p, q)] = [[_rational_str(x) for x in row] for row in m.data]
    return out


def complex_from_dict(obj) -> DoubleComplex:
    """Read the matrix-form complex format.

    Matrices act on column vectors; column j is the image of the j-th basis
    vector.  Omitted maps are zero.  ``convention: "commute"`` twists d2 by
    (-1)^p on input.
    """
    try:
        pmax, qmax = obj["grid"]
        convention = obj.get("convention", "anticommute")
        if convention not in ("anticommute", "commute"):
            raise LinalgError(f"unknown convention {convention!r}")
        dims = {_unkey(k): int(v) for k, v in obj.get("dims", {}).items()}
        name = obj.get("name", "unnamed")
    except (KeyError, TypeError, ValueError) as exc:
        raise LinalgError(f"malformed complex file: {exc}") from exc

    def read_maps(table, rows_of, cols_of):
        out = {}
        for k, rows in table.items():
            p, q = _unkey(k)
            data = [[_parse_rational(x) for x in row] for row in rows]
            nr, nc = rows_of(p, q), cols_of(p, q)
            if len(data) != nr or any(len(r) != nc for r in data):
                raise LinalgError(
                    f"map at {k} has shape {len(data)}x{len(data[0]) if data else 0}, "
                    f"expected {nr}x{nc}")
            out[(p, q)] = Matrix(nr, nc, data)
        return out

    def dim(p, q):
        if p < 0 or q < 0 or p > pmax or q > qmax:
            return 0
        return dims.get((p, q), 0)

    d1 = read_maps(obj.get("d1", {}), lambda p, q: dim(p + 1, q), dim)
    d2 = read_maps(obj.get("d2", {}), lambda p, q: dim(p, q + 1), dim)
    if convention == "commute":
        d2 = {(p, q): m.scale((-1) ** p) for (p, q), m in d2.items()}
    return DoubleComplex(name, pmax, qmax, dims, d1, d2,
                         meta=dict(obj.get("meta", {})))


def load_complex(path) -> DoubleComplex:
    with open(path) as fh:
        return complex_from_dict(json.load(fh))


def dump_complex(c: DoubleComplex, path):
    with open(path, "w") as fh:
        json.dump(complex_to_dict(c), fh, indent=1, sort_keys=True)
        fh.write("\n")
