"""Complexity measures behind the lower bounds: coefficient matrices and
their rank, evaluation dimension over grids, and leading/trailing diagonals.

Ranks are exact: Gaussian elimination over F_p, fraction-free Bareiss over
Q (after clearing denominators) and over polynomial entries (for partitions
with a residual block, where the rank is taken over the rational-function
field).
"""

from __future__ import annotations

from fractions import Fraction
from math import gcd
from typing import Iterable, Sequence

from .fields import FieldElement, FieldSpec, Raw
from .poly import (
    GRLEX,
    MonomialOrder,
    SparsePoly,
    VarLayout,
    poly_exact_divide,
)

EVAL_DIM_MAX_POINTS = 1 << 16


class PartitionSpec:
    """Ordered split of variables into (u | v) or (u | v | w)."""

    __slots__ = ("u", "v", "w")

    def __init__(self, u: Sequence[int], v: Sequence[int], w: Sequence[int] = ()):
        self.u = tuple(u)
        self.v = tuple(v)
        self.w = tuple(w)
        combined = self.u + self.v + self.w
        if len(set(combined)) != len(combined):
            raise ValueError("partition blocks overlap")

    def covers(self, f: SparsePoly) -> bool:
        allowed = set(self.u) | set(self.v) | set(self.w)
        return f.used_vars() <= allowed

    def swapped(self) -> "PartitionSpec":
        return PartitionSpec(self.v, self.u, self.w)

    def __repr__(self):
        tail = f" | w={self.w}" if self.w else ""
        return f"PartitionSpec(u={self.u} | v={self.v}{tail})"


def parse_partition(text: str, layout: VarLayout) -> PartitionSpec:
    """Parse partition text: family form `x|y` or explicit `x1,x3|x2,x4[|rest]`."""
    blocks = [b.strip() for b in text.split("|")]
    if len(blocks) not in (2, 3):
        raise ValueError(f"partition must have 2 or 3 blocks: {text!r}")

    def expand(block: str) -> list[int]:
        if block == "":
            return []
        out = []
        for piece in block.split(","):
            piece = piece.strip()
            if piece in ("x", "y", "z"):
                count = {"x": layout.nx, "y": layout.ny, "z": layout.nz}[piece]
                out.extend(layout.index(piece, k) for k in range(1, count + 1))
            else:
                fam, num = piece[0], piece[1:]
                out.append(layout.index(fam, int(num)))
        return out

    parts = [expand(b) for b in blocks]
    if len(parts) == 2:
        parts.append([])
    return PartitionSpec(*parts)


# ---------------------------------------------------------------------------
# rank kernels
# ---------------------------------------------------------------------------

def _rank_mod_p(rows: list[list[int]], p: int) -> int:
    m = [list(r) for r in rows]
    nrow = len(m)
    ncol = len(m[0]) if nrow else 0
    rank = 0
    for col in range(ncol):
        pivot = next((r for r in range(rank, nrow) if m[r][col] % p), None)
        if pivot is None:
            continue
        m[rank], m[pivot] = m[pivot], m[rank]
        inv = pow(m[rank][col], -1, p)
        m[rank] = [(x * inv) % p for x in m[rank]]
        for r in range(nrow):
            if r != rank and m[r][col] % p:
                factor = m[r][col]
                m[r] = [(a - factor * b) % p for a, b in zip(m[r], m[rank])]
        rank += 1
        if rank == nrow:
            break
    return rank


def _rank_bareiss_int(rows: list[list[int]]) -> int:
    """Fraction-free Bareiss elimination over Z; rank equals rank over Q."""
    m = [list(r) for r in rows]
    nrow = len(m)
    ncol = len(m[0]) if nrow else 0
    rank = 0
    prev = 1
    for col in range(ncol):
        pivot = next((r for r in range(rank, nrow) if m[r][col]), None)
        if pivot is None:
            continue
        m[rank], m[pivot] = m[pivot], m[rank]
        pv = m[rank][col]
        for r in range(rank + 1, nrow):
            mr = m[r]
            mk = m[rank]
            f = mr[col]
            for c in range(col, ncol):
                mr[c] = (pv * mr[c] - f * mk[c]) // prev
        prev = pv
        rank += 1
        if rank == nrow:
            break
    return rank


def rank_matrix(rows: Sequence[Sequence[Raw]], spec: FieldSpec) -> int:
    """Exact rank of a matrix of raw field values."""
    rows = [list(r) for r in rows]
    if not rows or not rows[0]:
        return 0
    if spec.is_prime:
        return _rank_mod_p([[int(x) % spec.p for x in r] for r in rows], spec.p)
    cleared = []
    for r in rows:
        fr = [Fraction(x) for x in r]
        den = 1
        for x in fr:
            den = den * x.denominator // gcd(den, x.denominator)
        cleared.append([int(x * den) for x in fr])
    return _rank_bareiss_int(cleared)


def rank_matrix_poly(rows: Sequence[Sequence[SparsePoly]]) -> int:
    """Rank over the rational-function field of a matrix of polynomial entries,
    by fraction-free Bareiss (every division is exact in F[w])."""
    m = [list(r) for r in rows]
    nrow = len(m)
    ncol = len(m[0]) if nrow else 0
    if not nrow or not ncol:
        return 0
    spec = m[0][0].spec
    nv = m[0][0].nvars
    one = SparsePoly.const(spec, nv, spec.one())
    rank = 0
    prev = one
    for col in range(ncol):
        pivot = next((r for r in range(rank, nrow) if not m[r][col].is_zero()), None)
        if pivot is None:
            continue
        m[rank], m[pivot] = m[pivot], m[rank]
        pv = m[rank][col]
        for r in range(rank + 1, nrow):
            f = m[r][col]
            for c in range(col, ncol):
                num = pv * m[r][c] - f * m[rank][c]
                m[r][c] = poly_exact_divide(num, prev) if not num.is_zero() else num
        prev = pv
        rank += 1
        if rank == nrow:
            break
    return rank


# ---------------------------------------------------------------------------
# coefficient matrix and dimensions
# ---------------------------------------------------------------------------

class CoefficientMatrix:
    """Matrix of coefficients of f indexed by (u-monomial, v-monomial).

    Entries are raw field values when the residual block w is empty, else
    SparsePoly over the w variables.  Indices are restricted to monomials
    actually occurring in f.
    """

    __slots__ = ("spec", "row_index", "col_index", "entries", "poly_entries")

    def __init__(self, spec, row_index, col_index, entries, poly_entries):
        self.spec = spec
        self.row_index = row_index
        self.col_index = col_index
        self.entries = entries
        self.poly_entries = poly_entries

    @property
    def shape(self) -> tuple[int, int]:
        return (len(self.row_index), len(self.col_index))

    def rank(self) -> int:
        if not self.row_index or not self.col_index:
            return 0
        if self.poly_entries:
            return rank_matrix_poly(self.entries)
        return rank_matrix(self.entries, self.spec)


def coefficient_matrix(f: SparsePoly, part: PartitionSpec) -> CoefficientMatrix:
    if not part.covers(f):
        raise ValueError("partition does not cover the polynomial's variables")
    upos = {v: i for i, v in enumerate(part.u)}
    vpos = {v: i for i, v in enumerate(part.v)}
    wset = set(part.w)
    cells: dict = {}
    for e, c in f.terms.items():
        ue = [0] * len(part.u)
        ve = [0] * len(part.v)
        we = [0] * f.nvars
        for i, x in enumerate(e):
            if not x:
                continue
            if i in upos:
                ue[upos[i]] = x
            elif i in vpos:
                ve[vpos[i]] = x
            elif i in wset:
                we[i] = x
            else:
                raise ValueError("partition does not cover the polynomial's variables")
        key = (tuple(ue), tuple(ve))
        cells.setdefault(key, {})[tuple(we)] = c
    rows = sorted({k[0] for k in cells})
    cols = sorted({k[1] for k in cells})
    rpos = {m: i for i, m in enumerate(rows)}
    cpos = {m: i for i, m in enumerate(cols)}
    if part.w:
        zerop = SparsePoly.zero(f.spec, f.nvars)
        entries = [[zerop] * len(cols) for _ in rows]
        for (ue, ve), wterms in cells.items():
            entries[rpos[ue]][cpos[ve]] = SparsePoly(f.spec, f.nvars, wterms)
        return CoefficientMatrix(f.spec, rows, cols, entries, True)
    z = f.spec.zero()
    entries = [[z] * len(cols) for _ in rows]
    for (ue, ve), wterms in cells.items():
        entries[rpos[ue]][cpos[ve]] = wterms[(0,) * f.nvars]
    return CoefficientMatrix(f.spec, rows, cols, entries, False)


def coeff_dim(f: SparsePoly, part: PartitionSpec) -> int:
    """Rank of the coefficient matrix; over F(w) when w is nonempty."""
    return coefficient_matrix(f, part).rank()


def eval_dim(f: SparsePoly, part: PartitionSpec, grid: Sequence) -> int:
    """Dimension of span{ f(u, beta) : beta in S^|v| }.

    Always <= coeff_dim; equal once |S| exceeds the individual degree.
    """
    if part.w:
        raise ValueError("evaluation dimension requires an empty residual block")
    if not part.covers(f):
        raise ValueError("partition does not cover the polynomial's variables")
    sp = f.spec
    grid_raw = [v.value if isinstance(v, FieldElement) else v for v in grid]
    npoints = len(grid_raw) ** len(part.v)
    if npoints > EVAL_DIM_MAX_POINTS:
        raise ValueError(f"grid enumeration of {npoints} points exceeds budget")
    upos = {v: i for i, v in enumerate(part.u)}
    vlist = list(part.v)
    # precompute per-term split: (u-monomial, v-exponents)
    split = []
    for e, c in f.terms.items():
        ue = [0] * len(part.u)
        vexp = []
        for i, x in enumerate(e):
            if not x:
                continue
            if i in upos:
                ue[upos[i]] = x
            else:
                vexp.append((vlist.index(i), x))
        split.append((tuple(ue), vexp, c))
    umonos = sorted({s[0] for s in split})
    upos_idx = {m: i for i, m in enumerate(umonos)}
    rows = []
    assignment = [grid_raw[0]] * len(vlist) if vlist else []

    def rec(k: int):
        if k == len(vlist):
            row = [sp.zero()] * len(umonos)
            for ue, vexp, c in split:
                t = c
                for vi, x in vexp:
                    t = sp.rmul(t, sp.rpow(assignment[vi], x))
                if t:
                    row[upos_idx[ue]] = sp.radd(row[upos_idx[ue]], t)
            rows.append(row)
            return
        for val in grid_raw:
            assignment[k] = val
            rec(k + 1)

    rec(0)
    if not umonos:
        return 0
    return rank_matrix(rows, sp)


# ---------------------------------------------------------------------------
# leading / trailing diagonals
# ---------------------------------------------------------------------------

def _diagonal(f: SparsePoly, part: PartitionSpec, order: MonomialOrder, leading: bool) -> SparsePoly:
    """Extremal coefficient of f(u o z, v o z) in F[u,v][z], pairing u_i <-> v_i."""
    if f.is_zero():
        raise ValueError("zero polynomial has no diagonal")
    if part.w or len(part.u) != len(part.v):
        raise ValueError("diagonals require a paired (u|v) partition of equal halves")
    if not part.covers(f):
        raise ValueError("partition does not cover the polynomial's variables")
    pairpos = {}
    for k, (ui, vi) in enumerate(zip(part.u, part.v)):
        pairpos[ui] = k
        pairpos[vi] = k
    groups: dict = {}
    for e, c in f.terms.items():
        zexp = [0] * len(part.u)
        for i, x in enumerate(e):
            if x:
                zexp[pairpos[i]] += x
        groups.setdefault(tuple(zexp), {})[e] = c
    extremal = (order.max if leading else order.min)(groups.keys())
    return SparsePoly(f.spec, f.nvars, groups[extremal])


def leading_diagonal(f: SparsePoly, part: PartitionSpec, order: MonomialOrder = GRLEX) -> SparsePoly:
    return _diagonal(f, part, order, leading=True)


def trailing_diagonal(f: SparsePoly, part: PartitionSpec, order: MonomialOrder = GRLEX) -> SparsePoly:
    return _diagonal(f, part, order, leading=False)
