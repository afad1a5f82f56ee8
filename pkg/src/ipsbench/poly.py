"""Canonical sparse multivariate polynomials, monomial orders, multilinearization.

A polynomial is a map from exponent vectors (tuples of small non-negative
ints, one slot per ambient variable) to nonzero raw coefficients.  The zero
polynomial has an empty term map, so equality of term maps is equality of
polynomials.
"""

from __future__ import annotations

import random
import re
from fractions import Fraction
from itertools import combinations
from typing import Callable, Iterable, Mapping

from .fields import FieldElement, FieldMismatchError, FieldSpec, Raw

INTERPOLATION_MAX_VARS = 24


class Monomial:
    """Exponent vector of a single monomial; trailing zeros permitted."""

    __slots__ = ("exponents",)

    def __init__(self, exponents: Iterable[int]):
        exps = tuple(int(e) for e in exponents)
        if any(e < 0 for e in exps):
            raise ValueError("negative exponent")
        self.exponents = exps

    def degree(self) -> int:
        return sum(self.exponents)

    def individual_degree(self) -> int:
        return max(self.exponents, default=0)

    def support_size(self) -> int:
        return sum(1 for e in self.exponents if e)

    def support(self) -> frozenset:
        return frozenset(i for i, e in enumerate(self.exponents) if e)

    def __mul__(self, other: "Monomial") -> "Monomial":
        a, b = self.exponents, other.exponents
        if len(a) < len(b):
            a = a + (0,) * (len(b) - len(a))
        elif len(b) < len(a):
            b = b + (0,) * (len(a) - len(b))
        return Monomial(x + y for x, y in zip(a, b))

    def __eq__(self, other):
        if not isinstance(other, Monomial):
            return NotImplemented
        a, b = self.exponents, other.exponents
        if len(a) != len(b):
            n = max(len(a), len(b))
            a = a + (0,) * (n - len(a))
            b = b + (0,) * (n - len(b))
        return a == b

    def __hash__(self):
        exps = self.exponents
        while exps and exps[-1] == 0:
            exps = exps[:-1]
        return hash(exps)

    def __repr__(self):
        return "Monomial" + repr(self.exponents)


class MonomialOrder:
    """Total monomial order: lex or graded-lex over a variable permutation.

    `perm` lists variable indices from most to least significant; identity
    when omitted.  Both kinds satisfy 1 < x^a and invariance under common
    multiplication.
    """

    __slots__ = ("kind", "perm")

    def __init__(self, kind: str = "grlex", perm: tuple | None = None):
        if kind not in ("lex", "grlex"):
            raise ValueError(f"unknown order kind {kind!r}")
        self.kind = kind
        self.perm = tuple(perm) if perm is not None else None

    def key(self, exps: tuple) -> tuple:
        """Sort key; ascending sort puts the order-smallest monomial first."""
        perm = self.perm if self.perm is not None else range(len(exps))
        proj = tuple(exps[v] if v < len(exps) else 0 for v in perm)
        if self.kind == "lex":
            return proj
        return (sum(exps), proj)

    def greater(self, a: tuple, b: tuple) -> bool:
        return self.key(a) > self.key(b)

    def max(self, exps_iter):
        return max(exps_iter, key=self.key)

    def min(self, exps_iter):
        return min(exps_iter, key=self.key)

    def __repr__(self):
        return f"MonomialOrder({self.kind}, perm={self.perm})"


GRLEX = MonomialOrder("grlex")
LEX = MonomialOrder("lex")


def _pad(e: tuple, n: int) -> tuple:
    return e if len(e) == n else e + (0,) * (n - len(e))


class SparsePoly:
    """Sparse multivariate polynomial over a fixed FieldSpec.

    Immutable by convention: no method mutates `terms` after construction.
    Coefficients are stored raw (int residue / Fraction).
    """

    __slots__ = ("spec", "nvars", "terms")

    def __init__(self, spec: FieldSpec, nvars: int, terms: Mapping[tuple, Raw] | None = None):
        self.spec = spec
        self.nvars = nvars
        pruned = {}
        if terms:
            for e, c in terms.items():
                if c:
                    pruned[_pad(tuple(e), nvars)] = c
        self.terms = pruned

    # constructors

    @staticmethod
    def zero(spec: FieldSpec, nvars: int) -> "SparsePoly":
        return SparsePoly(spec, nvars)

    @staticmethod
    def const(spec: FieldSpec, nvars: int, c) -> "SparsePoly":
        c = c.value if isinstance(c, FieldElement) else c
        if spec.kind == "prime":
            c = int(c) % spec.p
        else:
            c = Fraction(c)
        return SparsePoly(spec, nvars, {(0,) * nvars: c})

    @staticmethod
    def variable(spec: FieldSpec, nvars: int, i: int) -> "SparsePoly":
        e = [0] * nvars
        e[i] = 1
        return SparsePoly(spec, nvars, {tuple(e): spec.one()})

    @staticmethod
    def monomial(spec: FieldSpec, nvars: int, exps: Iterable[int], c=None) -> "SparsePoly":
        c = spec.one() if c is None else (c.value if isinstance(c, FieldElement) else c)
        return SparsePoly(spec, nvars, {_pad(tuple(exps), nvars): c})

    # ring structure

    def _check(self, other: "SparsePoly") -> None:
        if self.spec != other.spec:
            raise FieldMismatchError(f"mixed field specs: {self.spec} vs {other.spec}")
        if self.nvars != other.nvars:
            raise ValueError(f"ambient variable counts differ: {self.nvars} vs {other.nvars}")

    def __add__(self, other: "SparsePoly") -> "SparsePoly":
        self._check(other)
        sp = self.spec
        out = dict(self.terms)
        for e, c in other.terms.items():
            s = sp.radd(out.get(e, 0), c) if e in out else c
            if s:
                out[e] = s
            else:
                out.pop(e, None)
        return SparsePoly(self.spec, self.nvars, out)

    def __neg__(self) -> "SparsePoly":
        sp = self.spec
        return SparsePoly(self.spec, self.nvars, {e: sp.rneg(c) for e, c in self.terms.items()})

    def __sub__(self, other: "SparsePoly") -> "SparsePoly":
        return self + (-other)

    def __mul__(self, other: "SparsePoly") -> "SparsePoly":
        self._check(other)
        out: dict = {}
        if self.spec.kind == "prime":
            p = self.spec.p
            for ea, ca in self.terms.items():
                for eb, cb in other.terms.items():
                    e = tuple(x + y for x, y in zip(ea, eb))
                    out[e] = (out.get(e, 0) + ca * cb) % p
        else:
            for ea, ca in self.terms.items():
                for eb, cb in other.terms.items():
                    e = tuple(x + y for x, y in zip(ea, eb))
                    out[e] = out.get(e, 0) + ca * cb
        return SparsePoly(self.spec, self.nvars, out)

    def scale(self, c) -> "SparsePoly":
        c = c.value if isinstance(c, FieldElement) else c
        if not c:
            return SparsePoly.zero(self.spec, self.nvars)
        sp = self.spec
        return SparsePoly(self.spec, self.nvars, {e: sp.rmul(v, c) for e, v in self.terms.items()})

    def __pow__(self, k: int) -> "SparsePoly":
        if k < 0:
            raise ValueError("negative power of a polynomial")
        result = SparsePoly.const(self.spec, self.nvars, self.spec.one())
        base = self
        while k:
            if k & 1:
                result = result * base
            base_needed = k >> 1
            if base_needed:
                base = base * base
            k >>= 1
        return result

    def __eq__(self, other):
        return (
            isinstance(other, SparsePoly)
            and self.spec == other.spec
            and self.terms == other.terms
        )

    def __hash__(self):
        return hash((self.spec, frozenset(self.terms.items())))

    def is_zero(self) -> bool:
        return not self.terms

    # measures

    def degree(self) -> int:
        """Total degree; -1 for the zero polynomial."""
        return max((sum(e) for e in self.terms), default=-1)

    def individual_degree(self) -> int:
        return max((max(e) for e in self.terms), default=0)

    def sparsity(self) -> int:
        return len(self.terms)

    def used_vars(self) -> frozenset:
        out = set()
        for e in self.terms:
            for i, x in enumerate(e):
                if x:
                    out.add(i)
        return frozenset(out)

    def is_multilinear(self) -> bool:
        return self.individual_degree() <= 1

    def coefficient(self, exps: Iterable[int]) -> FieldElement:
        return FieldElement(self.spec, self.terms.get(_pad(tuple(exps), self.nvars), self.spec.zero()))

    # evaluation / substitution

    def evaluate(self, point) -> FieldElement:
        """Evaluate at a point given as FieldElements or raw values."""
        vals = [v.value if isinstance(v, FieldElement) else v for v in point]
        if len(vals) != self.nvars:
            raise ValueError("point length != nvars")
        sp = self.spec
        acc = sp.zero()
        for e, c in self.terms.items():
            t = c
            for i, ex in enumerate(e):
                if ex:
                    t = sp.rmul(t, sp.rpow(vals[i], ex))
            acc = sp.radd(acc, t)
        return FieldElement(sp, acc)

    def substitute(self, mapping: Mapping[int, "SparsePoly | Raw | FieldElement"]) -> "SparsePoly":
        """Substitute polynomials (or constants) for a subset of the variables."""
        subs: dict[int, SparsePoly] = {}
        for i, v in mapping.items():
            if isinstance(v, SparsePoly):
                self._check(v)
                subs[i] = v
            else:
                subs[i] = SparsePoly.const(self.spec, self.nvars, v)
        out = SparsePoly.zero(self.spec, self.nvars)
        pow_cache: dict[tuple, SparsePoly] = {}
        for e, c in self.terms.items():
            keep = [0] * self.nvars
            factors = []
            for i, ex in enumerate(e):
                if not ex:
                    continue
                if i in subs:
                    key = (i, ex)
                    if key not in pow_cache:
                        pow_cache[key] = subs[i] ** ex
                    factors.append(pow_cache[key])
                else:
                    keep[i] = ex
            t = SparsePoly.monomial(self.spec, self.nvars, keep, c)
            for f in factors:
                t = t * f
            out = out + t
        return out

    # multilinearization: the unique multilinear polynomial agreeing on {0,1}^n

    def multilinearize(self) -> "SparsePoly":
        sp = self.spec
        out: dict = {}
        for e, c in self.terms.items():
            m = tuple(1 if x else 0 for x in e)
            s = sp.radd(out.get(m, sp.zero()), c) if m in out else c
            if s:
                out[m] = s
            else:
                out.pop(m, None)
        return SparsePoly(self.spec, self.nvars, out)

    # extremal terms

    def leading_monomial(self, order: MonomialOrder = GRLEX) -> Monomial:
        if not self.terms:
            raise ValueError("zero polynomial has no extremal monomial")
        return Monomial(order.max(self.terms.keys()))

    def trailing_monomial(self, order: MonomialOrder = GRLEX) -> Monomial:
        if not self.terms:
            raise ValueError("zero polynomial has no extremal monomial")
        return Monomial(order.min(self.terms.keys()))

    def leading_coeff(self, order: MonomialOrder = GRLEX) -> FieldElement:
        return FieldElement(self.spec, self.terms[order.max(self.terms.keys())])

    def trailing_coeff(self, order: MonomialOrder = GRLEX) -> FieldElement:
        return FieldElement(self.spec, self.terms[order.min(self.terms.keys())])

    def sorted_terms(self, order: MonomialOrder = GRLEX, descending: bool = True):
        return sorted(self.terms.items(), key=lambda kv: order.key(kv[0]), reverse=descending)

    def __repr__(self):
        if not self.terms:
            return "SparsePoly(0)"
        parts = []
        for e, c in self.sorted_terms():
            mono = "*".join(f"v{i}^{x}" if x > 1 else f"v{i}" for i, x in enumerate(e) if x)
            parts.append(f"{self.spec.format_raw(c)}" + (f"*{mono}" if mono else ""))
        return "SparsePoly(" + " + ".join(parts) + ")"


def monomial_divides(a: tuple, b: tuple) -> bool:
    return all(x <= y for x, y in zip(a, b))


def poly_divmod(f: SparsePoly, g: SparsePoly, order: MonomialOrder = GRLEX):
    """Long division by a single divisor: f = q*g + r, with no monomial of r
    divisible by LM(g).  For one divisor, r == 0 iff g divides f exactly."""
    f._check(g)
    if g.is_zero():
        raise ZeroDivisionError("division by the zero polynomial")
    sp = f.spec
    glm = order.max(g.terms.keys())
    glc = g.terms[glm]
    q: dict = {}
    r: dict = {}
    cur = dict(f.terms)
    while cur:
        lm = order.max(cur.keys())
        lc = cur.pop(lm)
        if monomial_divides(glm, lm):
            qe = tuple(x - y for x, y in zip(lm, glm))
            qc = sp.rdiv(lc, glc)
            q[qe] = sp.radd(q.get(qe, sp.zero()), qc) if qe in q else qc
            for e, c in g.terms.items():
                if e == glm:
                    continue
                te = tuple(x + y for x, y in zip(qe, e))
                s = sp.rsub(cur.get(te, sp.zero()), sp.rmul(qc, c))
                if s:
                    cur[te] = s
                else:
                    cur.pop(te, None)
        else:
            r[lm] = lc
    return SparsePoly(f.spec, f.nvars, q), SparsePoly(f.spec, f.nvars, r)


def poly_exact_divide(f: SparsePoly, g: SparsePoly, order: MonomialOrder = GRLEX) -> SparsePoly:
    q, r = poly_divmod(f, g, order)
    if not r.is_zero():
        raise ValueError("division is not exact")
    return q


def coeff_in_subring(f: SparsePoly, yvars: Iterable[int], b: Monomial | Iterable[int]) -> SparsePoly:
    """Coefficient of y^b when f is read in F[x][y], x = complement of yvars.

    The result is a polynomial in the same ambient ring supported off `yvars`.
    """
    yset = frozenset(yvars)
    bexp = b.exponents if isinstance(b, Monomial) else tuple(b)
    bexp = _pad(bexp, f.nvars)
    if any(bexp[i] and i not in yset for i in range(f.nvars)):
        raise ValueError("target monomial not supported on the given variables")
    out = {}
    for e, c in f.terms.items():
        if all((e[i] == bexp[i]) if i in yset else True for i in range(f.nvars)):
            reduced = tuple(0 if i in yset else x for i, x in enumerate(e))
            out[reduced] = c
    return SparsePoly(f.spec, f.nvars, out)


def elementary_symmetric(n: int, k: int, spec: FieldSpec, nvars: int | None = None,
                         vars_: Iterable[int] | None = None) -> SparsePoly:
    """S_{n,k} = sum over k-subsets of products, all coefficients 1."""
    if not 0 <= k <= n:
        raise ValueError(f"k={k} out of range for n={n}")
    vs = list(vars_) if vars_ is not None else list(range(n))
    if len(vs) != n:
        raise ValueError("variable list length != n")
    nv = nvars if nvars is not None else n
    one = spec.one()
    terms = {}
    for subset in combinations(vs, k):
        e = [0] * nv
        for i in subset:
            e[i] = 1
        terms[tuple(e)] = one
    return SparsePoly(spec, nv, terms)


def interpolate_multilinear(spec: FieldSpec, n: int, values) -> SparsePoly:
    """The unique multilinear polynomial matching a full {0,1}^n table.

    `values` is a list of 2^n raw/FieldElement values indexed by bitmask
    (bit i = value of x_i), or a mapping from 0/1-tuples.  Uses the
    superset Moebius transform: coeff(S) = sum_{T subseteq S} (-1)^{|S|-|T|} f(1_T).
    """
    if n > INTERPOLATION_MAX_VARS:
        raise ValueError(f"interpolation limited to {INTERPOLATION_MAX_VARS} variables")
    size = 1 << n
    if isinstance(values, Mapping):
        table = [None] * size
        for key, v in values.items():
            mask = 0
            for i, bit in enumerate(key):
                if bit:
                    mask |= 1 << i
            table[mask] = v
        if any(v is None for v in table):
            raise ValueError("incomplete evaluation table")
    else:
        table = list(values)
        if len(table) != size:
            raise ValueError(f"expected {size} values, got {len(table)}")
    sp = spec
    coeffs = [v.value if isinstance(v, FieldElement) else v for v in table]
    for i in range(n):
        bit = 1 << i
        for mask in range(size):
            if mask & bit:
                coeffs[mask] = sp.rsub(coeffs[mask], coeffs[mask ^ bit])
    terms = {}
    for mask in range(size):
        if coeffs[mask]:
            terms[tuple((mask >> i) & 1 for i in range(n))] = coeffs[mask]
    return SparsePoly(spec, n, terms)


def random_restriction(f: SparsePoly, keep_num: int, keep_den: int, seed: int):
    """Independently zero each variable with probability 1 - keep_num/keep_den.

    Deterministic given the seed; returns (restricted polynomial, kept set).
    """
    rng = random.Random(seed)
    kept = frozenset(i for i in range(f.nvars) if rng.randrange(keep_den) < keep_num)
    out = {}
    sp = f.spec
    for e, c in f.terms.items():
        if all(i in kept for i, x in enumerate(e) if x):
            out[e] = sp.radd(out.get(e, sp.zero()), c) if e in out else c
    return SparsePoly(f.spec, f.nvars, out), kept


# ---------------------------------------------------------------------------
# text grammar
#
#   poly   := term (('+'|'-') term)*
#   term   := coeff ('*' factor)* | factor ('*' factor)*
#   factor := var ('^' uint)?
#   var    := 'x' uint | 'y' uint | 'z' uint
#
# Variables live in three families; a VarLayout fixes how family/index pairs
# map onto ambient variable slots: x1..x_nx, then y1..y_ny, then z1..z_nz.
# ---------------------------------------------------------------------------

_VAR_RE = re.compile(r"^([xyz])([0-9]+)$")


class VarLayout:
    __slots__ = ("nx", "ny", "nz")

    def __init__(self, nx: int, ny: int = 0, nz: int = 0):
        self.nx, self.ny, self.nz = nx, ny, nz

    @property
    def total(self) -> int:
        return self.nx + self.ny + self.nz

    def index(self, family: str, k: int) -> int:
        if k < 1:
            raise ValueError("variable indices are 1-based")
        if family == "x":
            if k > self.nx:
                raise ValueError(f"x{k} outside layout (nx={self.nx})")
            return k - 1
        if family == "y":
            if k > self.ny:
                raise ValueError(f"y{k} outside layout (ny={self.ny})")
            return self.nx + k - 1
        if family == "z":
            if k > self.nz:
                raise ValueError(f"z{k} outside layout (nz={self.nz})")
            return self.nx + self.ny + k - 1
        raise ValueError(f"unknown variable family {family!r}")

    def name(self, i: int) -> str:
        if i < self.nx:
            return f"x{i + 1}"
        if i < self.nx + self.ny:
            return f"y{i - self.nx + 1}"
        if i < self.total:
            return f"z{i - self.nx - self.ny + 1}"
        raise ValueError(f"variable slot {i} outside layout")

    def __eq__(self, other):
        return (
            isinstance(other, VarLayout)
            and (self.nx, self.ny, self.nz) == (other.nx, other.ny, other.nz)
        )

    def __repr__(self):
        return f"VarLayout(nx={self.nx}, ny={self.ny}, nz={self.nz})"


class PolyParseError(ValueError):
    pass


def _split_terms(text: str):
    """Split on top-level +/- signs, yielding (sign, chunk)."""
    text = text.replace(" ", "").replace("\t", "")
    if not text:
        raise PolyParseError("empty polynomial text")
    chunks = []
    sign = 1
    cur = ""
    i = 0
    if text[0] in "+-":
        sign = -1 if text[0] == "-" else 1
        i = 1
    while i < len(text):
        ch = text[i]
        if ch in "+-":
            if not cur:
                raise PolyParseError(f"dangling sign in {text!r}")
            chunks.append((sign, cur))
            sign = -1 if ch == "-" else 1
            cur = ""
        else:
            cur += ch
        i += 1
    if not cur:
        raise PolyParseError(f"trailing sign in {text!r}")
    chunks.append((sign, cur))
    return chunks


def infer_layout(text: str) -> VarLayout:
    """Smallest layout covering every variable mentioned in the text."""
    nx = ny = nz = 0
    for fam, num in re.findall(r"([xyz])([0-9]+)", text.replace(" ", "")):
        k = int(num)
        if fam == "x":
            nx = max(nx, k)
        elif fam == "y":
            ny = max(ny, k)
        else:
            nz = max(nz, k)
    return VarLayout(nx, ny, nz)


def parse_poly(text: str, spec: FieldSpec, layout: VarLayout) -> SparsePoly:
    n = layout.total
    terms: dict = {}
    sp = spec
    for sign, chunk in _split_terms(text):
        coeff = sp.one()
        exps = [0] * n
        for piece in chunk.split("*"):
            if not piece:
                raise PolyParseError(f"empty factor in {chunk!r}")
            m = _VAR_RE.match(piece.split("^")[0])
            if m:
                fam, num = m.group(1), int(m.group(2))
                power = 1
                if "^" in piece:
                    base, _, exp_txt = piece.partition("^")
                    if not exp_txt.isdigit():
                        raise PolyParseError(f"bad exponent in {piece!r}")
                    power = int(exp_txt)
                try:
                    idx = layout.index(fam, num)
                except ValueError as exc:
                    raise PolyParseError(str(exc)) from exc
                exps[idx] += power
            else:
                try:
                    coeff = sp.rmul(coeff, sp.parse_raw(piece))
                except (ValueError, ZeroDivisionError) as exc:
                    raise PolyParseError(f"bad coefficient {piece!r}") from exc
        if sign < 0:
            coeff = sp.rneg(coeff)
        e = tuple(exps)
        s = sp.radd(terms.get(e, sp.zero()), coeff) if e in terms else coeff
        if s:
            terms[e] = s
        else:
            terms.pop(e, None)
    return SparsePoly(spec, n, terms)


def parse_poly_auto(text: str, spec: FieldSpec):
    layout = infer_layout(text)
    return parse_poly(text, spec, layout), layout


def format_monomial(e: tuple, layout: VarLayout) -> str:
    parts = [
        layout.name(i) + (f"^{x}" if x > 1 else "")
        for i, x in enumerate(e)
        if x
    ]
    return "*".join(parts)


def emit_poly(f: SparsePoly, layout: VarLayout, order: MonomialOrder = GRLEX) -> str:
    """Canonical text, terms sorted descending by the active order."""
    if f.nvars != layout.total:
        raise ValueError("layout does not match ambient variable count")
    if not f.terms:
        return "0"
    sp = f.spec
    out = []
    for e, c in f.sorted_terms(order, descending=True):
        neg = sp.kind == "rational" and c < 0
        mag = -c if neg else c
        mono = format_monomial(e, layout)
        if mono and mag == sp.one():
            body = mono
        elif mono:
            body = f"{sp.format_raw(mag)}*{mono}"
        else:
            body = sp.format_raw(mag)
        if not out:
            out.append(("-" if neg else "") + body)
        else:
            out.append(("-" if neg else "+") + body)
    return "".join(out)
