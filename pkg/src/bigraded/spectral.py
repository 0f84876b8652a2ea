"""Spectral sequence of the column filtration, computed by exact tower solves.

For a bounded double complex the page-r space at (p,q) is Z_r/C_r, where

* Z_r collects the elements killed by d2 whose d1-image can be continued
  through r-1 alternating lifts (d1 x = d2 u_1, d1 u_1 = d2 u_2, ...), and
* C_r = im d2 + d1(elements whose d2-image reaches zero in at most r-1
  alternating steps).

Both are solved as block kernel systems over Q.  The page differential d_r
sends the class of x to the class of d1 u_{r-1} for any choice of lifts; the
class is independent of all choices, which the test suite also verifies.

A second, independent route to the page dimensions iterates cohomology:
compute the first page directly, then repeatedly take kernels modulo images
of the page differentials.  `page_dims` and `iterated_pages_oracle` must
agree on every input.

Everything here is orientation-symmetric: the conjugate pages (row
filtration) are obtained by running the same constructions on the swapped
complex.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

from bigraded.bicomplex import (DoubleComplex, de_rham_dims, require_valid,
                                swap_complex, total_complex)
from bigraded.linalg import (Matrix, Subspace, class_coordinates, extend_basis,
                             image_basis, kernel_basis, map_subspace,
                             quotient_dim, solve_tower, subspace_sum)

__all__ = [
    "TowerKind",
    "ConsistencyError",
    "Workspace",
    "tower_space",
    "PageTable",
    "page_dims",
    "dr_matrix",
    "iterated_pages_oracle",
    "degeneration_page",
    "einfty_check",
]


class ConsistencyError(RuntimeError):
    """Two provably-equal computations disagreed; the implementation is at fault."""


class TowerKind(Enum):
    PAGE_CLOSED = "page_closed"            # Z_r
    PAGE_EXACT = "page_exact"              # C_r
    CONJ_PAGE_CLOSED = "conj_page_closed"  # same with d1 and d2 exchanged
    CONJ_PAGE_EXACT = "conj_page_exact"
    REACHES_ZERO = "reaches_zero"          # d2-image reaches 0 in <= s steps
    REACHES_ZERO_SWAPPED = "reaches_zero_swapped"
    RUNS = "runs"                          # d1-image continues through s lifts
    RUNS_SWAPPED = "runs_swapped"


_SWAPPED = {
    TowerKind.CONJ_PAGE_CLOSED: TowerKind.PAGE_CLOSED,
    TowerKind.CONJ_PAGE_EXACT: TowerKind.PAGE_EXACT,
    TowerKind.REACHES_ZERO_SWAPPED: TowerKind.REACHES_ZERO,
    TowerKind.RUNS_SWAPPED: TowerKind.RUNS,
}


class Workspace:
    """Per-complex cache of tower spaces, page representatives and differentials.

    The complex is validated once on entry; all cached values are pure
    functions of it, so the workspace can be shared freely.
    """

    def __init__(self, c: DoubleComplex, checked=False):
        if not checked:
            require_valid(c)
        self.c = c
        self.spaces = {}
        self.reps = {}
        self.dr = {}
        self.memo = {}  # scratch cache for the higher modules, keyed by tag
        self._swapped = None
        self._total = None
        self._total_image = {}

    @property
    def swapped(self):
        if self._swapped is None:
            self._swapped = Workspace(swap_complex(self.c), checked=True)
        return self._swapped

    @property
    def total(self):
        if self._total is None:
            self._total = total_complex(self.c)
        return self._total

    def space(self, kind: TowerKind, r, p, q) -> Subspace:
        key = (kind, r, p, q)
        hit = self.spaces.get(key)
        if hit is None:
            swapped_kind = _SWAPPED.get(kind)
            if swapped_kind is not None:
                hit = self.swapped.space(swapped_kind, r, q, p)
            else:
                hit = _build_space(self.c, kind, r, p, q)
            self.spaces[key] = hit
        return hit

    def page_reps(self, r, p, q):
        """Deterministic representatives of a complement of C_r inside Z_r."""
        key = (r, p, q)
        hit = self.reps.get(key)
        if hit is None:
            z = self.space(TowerKind.PAGE_CLOSED, r, p, q)
            cc = self.space(TowerKind.PAGE_EXACT, r, p, q)
            hit = extend_basis(cc, z)
            self.reps[key] = hit
        return hit

    def dr_matrix(self, r, p, q) -> Matrix:
        key = (r, p, q)
        hit = self.dr.get(key)
        if hit is None:
            hit = _dr_matrix(self, r, p, q)
            self.dr[key] = hit
        return hit

    def total_image(self, k) -> Subspace:
        """Image of the total differential landing in degree k."""
        hit = self._total_image.get(k)
        if hit is None:
            hit = image_basis(self.total.differential(k - 1))
            self._total_image[k] = hit
        return hit


def _build_space(c, kind, r, p, q):
    if kind is TowerKind.PAGE_CLOSED:
        return _page_closed(c, r, p, q)
    if kind is TowerKind.PAGE_EXACT:
        return _page_exact(c, r, p, q)
    if kind is TowerKind.REACHES_ZERO:
        return _reaches_zero(c, r, p, q)
    if kind is TowerKind.RUNS:
        return _runs(c, r, p, q)
    raise ValueError(f"unhandled tower kind {kind}")


def _page_closed(c, r, p, q):
    """Z_r at (p,q): d2 x = 0, d1 x = d2 u_1, d1 u_i = d2 u_{i+1} (r-1 lifts)."""
    if r < 1:
        raise ValueError("page index must be >= 1")
    n = c.dim(p, q)
    if n == 0:
        return Subspace.zero(0)
    if r == 1:
        return kernel_basis(c.d2_at(p, q))
    blocks = [(p + i, q - i) for i in range(r)]
    dims = [c.dim(*bd) for bd in blocks]
    eqs = [[(0, c.d2_at(p, q))]]
    for i in range(r - 1):
        bp, bq = blocks[i]
        eqs.append([(i, c.d1_at(bp, bq)), (i + 1, -c.d2_at(*blocks[i + 1]))])
    return solve_tower(dims, eqs, 0)


def _reaches_zero(c, s, a, b):
    """Elements whose d2-image reaches 0 in at most s alternating steps.

    The tower is d2 z = d1 v_{s-2}, d2 v_j = d1 v_{j-1}, ..., d2 v_0 = 0 with
    v_j living one step up-left of its predecessor; s = 1 is just ker d2.
    """
    if s < 1:
        raise ValueError("step count must be >= 1")
    n = c.dim(a, b)
    if n == 0:
        return Subspace.zero(0)
    if s == 1:
        return kernel_basis(c.d2_at(a, b))
    blocks = [(a, b)] + [(a - 1 - i, b + 1 + i) for i in range(s - 1)]
    dims = [c.dim(*bd) for bd in blocks]
    eqs = [[(0, c.d2_at(a, b)), (1, -c.d1_at(*blocks[1]))]]
    for i in range(1, s - 1):
        eqs.append([(i, c.d2_at(*blocks[i])), (i + 1, -c.d1_at(*blocks[i + 1]))])
    eqs.append([(s - 1, c.d2_at(*blocks[s - 1]))])
    return solve_tower(dims, eqs, 0)


def _runs(c, s, p, q):
    """Elements whose d1-image continues through s alternating lifts; s = 0 is everything."""
    if s < 0:
        raise ValueError("lift count must be >= 0")
    n = c.dim(p, q)
    if n == 0:
        return Subspace.zero(0)
    if s == 0:
        return Subspace.full(n)
    blocks = [(p + i, q - i) for i in range(s + 1)]
    dims = [c.dim(*bd) for bd in blocks]
    eqs = [[(0, c.d1_at(p, q)), (1, -c.d2_at(*blocks[1]))]]
    for i in range(1, s):
        eqs.append([(i, c.d1_at(*blocks[i])), (i + 1, -c.d2_at(*blocks[i + 1]))])
    return solve_tower(dims, eqs, 0)


def _page_exact(c, r, p, q):
    """C_r at (p,q) = im d2 + d1(reaches-zero space in r-1 steps)."""
    if r < 1:
        raise ValueError("page index must be >= 1")
    n = c.dim(p, q)
    if n == 0:
        return Subspace.zero(0)
    im2 = image_basis(c.d2_at(p, q - 1))
    if r == 1:
        return im2
    if c.dim(p - 1, q) == 0:
        return im2
    e = _reaches_zero(c, r - 1, p - 1, q)
    return subspace_sum(im2, map_subspace(c.d1_at(p - 1, q), e))


def tower_space(c: DoubleComplex, kind: TowerKind, r, p, q, ws: Workspace | None = None) -> Subspace:
    """Public entry: any of the tower-defined subspaces of the (p,q) component."""
    ws = ws or Workspace(c)
    return ws.space(kind, r, p, q)


@dataclass
class PageTable:
    """Per-page dimensions (and conjugate-page dimensions) over the grid."""

    r_max: int
    e: dict = field(default_factory=dict)      # (r, p, q) -> dim of page r at (p,q)
    ebar: dict = field(default_factory=dict)   # same, row filtration

    def dim(self, r, p, q):
        return self.e.get((r, p, q), 0)

    def dim_bar(self, r, p, q):
        return self.ebar.get((r, p, q), 0)

    def total(self, r):
        return sum(v for (rr, _, _), v in self.e.items() if rr == r)

    def total_bar(self, r):
        return sum(v for (rr, _, _), v in self.ebar.items() if rr == r)

    def antidiagonal(self, r, k):
        return sum(v for (rr, p, q), v in self.e.items() if rr == r and p + q == k)


def page_dims(c: DoubleComplex, r_max, ws: Workspace | None = None, conjugate=True) -> PageTable:
    """Dimensions e_r^{p,q} = dim Z_r - dim C_r for r = 1..r_max, plus conjugates."""
    ws = ws or Workspace(c)
    table = PageTable(r_max)
    for (p, q) in ws.c.support():
        for r in range(1, r_max + 1):
            z = ws.space(TowerKind.PAGE_CLOSED, r, p, q)
            cc = ws.space(TowerKind.PAGE_EXACT, r, p, q)
            d = quotient_dim(z, cc)
            if d:
                table.e[(r, p, q)] = d
            if conjugate:
                zb = ws.space(TowerKind.CONJ_PAGE_CLOSED, r, p, q)
                cb = ws.space(TowerKind.CONJ_PAGE_EXACT, r, p, q)
                db = quotient_dim(zb, cb)
                if db:
                    table.ebar[(r, p, q)] = db
    return table


def _dr_matrix(ws: Workspace, r, p, q) -> Matrix:
    """Matrix of d_r from the page basis at (p,q) to the one at (p+r, q-r+1)."""
    c = ws.c
    src = ws.page_reps(r, p, q)
    tp, tq = p + r, q - r + 1
    dst = ws.page_reps(r, tp, tq)
    if not src or not dst:
        return Matrix.zero(len(dst), len(src))
    cc_dst = ws.space(TowerKind.PAGE_EXACT, r, tp, tq)
    cols = []
    for alpha in src:
        v = _dr_image(c, r, p, q, alpha)
        cols.append(class_coordinates(cc_dst, dst, v))
    return Matrix.from_columns(cols, len(dst))


def _dr_image(c, r, p, q, alpha):
    """d1 of the last lift in any tower solution for alpha; r = 1 is d1 alpha."""
    if r == 1:
        return c.d1_at(p, q).apply(alpha)
    blocks = [(p + i, q - i) for i in range(1, r)]
    dims = [c.dim(*bd) for bd in blocks]
    offsets = []
    total = 0
    for d in dims:
        offsets.append(total)
        total += d
    rows = []
    rhs = []
    first = c.d2_at(*blocks[0])
    target0 = c.d1_at(p, q).apply(alpha)
    for i in range(first.rows):
        row = [0] * total
        for j in range(first.cols):
            row[j] = first.data[i][j]
        rows.append(row)
        rhs.append([target0[i]])
    for i in range(len(blocks) - 1):
        bp, bq = blocks[i]
        m1 = c.d1_at(bp, bq)
        m2 = c.d2_at(*blocks[i + 1])
        for rr in range(m1.rows):
            row = [0] * total
            for j in range(m1.cols):
                row[offsets[i] + j] = m1.data[rr][j]
            for j in range(m2.cols):
                row[offsets[i + 1] + j] -= m2.data[rr][j]
            rows.append(row)
            rhs.append([0])
    if not rows:
        u_last = (0,) * dims[-1]
    else:
        system = Matrix(len(rows), total, rows)
        sol = system.solve(Matrix(len(rows), 1, rhs))
        if sol is None:
            raise ConsistencyError(
                f"lift tower unsolvable for a page-{r} representative at {(p, q)}")
        u_last = sol.column(0)[offsets[-1]:]
    last_block = blocks[-1]
    return c.d1_at(*last_block).apply(u_last)


def dr_matrix(c: DoubleComplex, r, p, q, ws: Workspace | None = None) -> Matrix:
    ws = ws or Workspace(c)
    return ws.dr_matrix(r, p, q)


def effective_page_bound(c: DoubleComplex):
    """Past this page index every differential vanishes for bidegree reasons."""
    return max(1, min(c.pmax, c.qmax + 1))


def iterated_pages_oracle(c: DoubleComplex, r_max, ws: Workspace | None = None) -> PageTable:
    """Second engine: first page from d2 cohomology, then rank-nullity of d_r.

    e_{r+1} = e_r - rank(d_r out) - rank(d_r in), starting from
    e_1 = dim ker d2 - rank d2.  Returns dimensions only.
    """
    ws = ws or Workspace(c)
    c = ws.c
    table = PageTable(r_max)
    current = {}
    for (p, q) in c.support():
        e1 = (c.dim(p, q) - c.d2_at(p, q).rank()) - c.d2_at(p, q - 1).rank()
        if e1:
            current[(p, q)] = e1
    bound = effective_page_bound(c)
    for r in range(1, r_max + 1):
        for (p, q), v in current.items():
            if v:
                table.e[(r, p, q)] = v
        if r >= r_max:
            break
        nxt = {}
        for (p, q), v in current.items():
            drop = 0
            if r <= bound:
                drop += ws.dr_matrix(r, p, q).rank()
                drop += ws.dr_matrix(r, p - r, q + r - 1).rank()
            if v - drop:
                nxt[(p, q)] = v - drop
        current = nxt
    return table


def degeneration_page(c: DoubleComplex, ws: Workspace | None = None):
    """Smallest r with all page differentials d_s, s >= r, identically zero.

    Bounded complexes stabilise no later than min(pmax, qmax+1)+1; page
    totals are strictly decreasing exactly while some d_s is nonzero.
    """
    ws = ws or Workspace(c)
    bound = effective_page_bound(ws.c)
    table = page_dims(ws.c, bound + 1, ws, conjugate=False)
    last_drop = 0
    for r in range(1, bound + 1):
        if table.total(r) != table.total(r + 1):
            last_drop = r
    return last_drop + 1


@dataclass
class ConvergenceReport:
    ok: bool
    per_degree: dict  # k -> (sum of stable page dims on the antidiagonal, betti number)

    def __bool__(self):
        return self.ok


def einfty_check(c: DoubleComplex, ws: Workspace | None = None) -> ConvergenceReport:
    """Stable page dimensions summed along antidiagonals must be the Betti numbers.

    This holds unconditionally for bounded complexes, so a failure here
    means the implementation (not the input) is broken.
    """
    ws = ws or Workspace(c)
    bound = effective_page_bound(ws.c)
    table = page_dims(ws.c, bound + 1, ws, conjugate=False)
    betti = de_rham_dims(ws.total)
    per_degree = {}
    ok = True
    for k in range(ws.c.pmax + ws.c.qmax + 1):
        stable = table.antidiagonal(bound + 1, k)
        b = betti.get(k, 0)
        per_degree[k] = (stable, b)
        if stable != b:
            ok = False
    return ConvergenceReport(ok, per_degree)
