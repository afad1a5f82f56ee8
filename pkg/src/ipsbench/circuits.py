"""Restricted algebraic circuit classes: general DAGs, depth-3 powering
formulas, powers of low-degree polynomials, roABPs in matrix-product normal
form, and multilinear formulas.

Every class supports exact evaluation and expansion to a SparsePoly (the
semantic ground truth), plus the structural transformations used by the
refutation constructions: duality decomposition of powers of linear forms,
powering-formula-to-roABP conversion, roABP closure operations, and the two
division-by-a-variable constructions.
"""

from __future__ import annotations

from fractions import Fraction
from math import comb, factorial
from typing import Iterable, Mapping, Sequence

from .fields import FieldElement, FieldSpec, Raw
from .poly import SparsePoly

DEFAULT_EXPAND_BUDGET = 1 << 22


class BudgetExceededError(RuntimeError):
    """Expansion would exceed the configured monomial-operation budget."""


def _raw(spec: FieldSpec, c) -> Raw:
    c = c.value if isinstance(c, FieldElement) else c
    return int(c) % spec.p if spec.is_prime else Fraction(c)


# ---------------------------------------------------------------------------
# general circuit DAGs
# ---------------------------------------------------------------------------

class CircuitDag:
    """Topologically ordered DAG with weighted adds and fan-in-2 muls.

    Node forms: ('input', var), ('const', raw),
    ('add', ((weight, child), ...)), ('mul', a, b).
    Size is counted in wires; add gates keep weighted fan-in.
    """

    __slots__ = ("spec", "nvars", "nodes", "outputs")

    def __init__(self, spec: FieldSpec, nvars: int, nodes: list, outputs: Sequence[int] | None = None):
        self.spec = spec
        self.nvars = nvars
        self.nodes = nodes
        self.outputs = tuple(outputs) if outputs is not None else (len(nodes) - 1,)
        for i, node in enumerate(nodes):
            kind = node[0]
            if kind == "add":
                for _, ch in node[1]:
                    if ch >= i:
                        raise ValueError("child does not precede parent")
            elif kind == "mul":
                if node[1] >= i or node[2] >= i:
                    raise ValueError("child does not precede parent")

    @property
    def output(self) -> int:
        return self.outputs[0]

    def wires(self) -> int:
        total = 0
        for node in self.nodes:
            if node[0] == "add":
                total += len(node[1])
            elif node[0] == "mul":
                total += 2
        return total

    def degree_bound(self, var_degrees: Mapping[int, int] | None = None) -> int:
        degs = []
        for node in self.nodes:
            kind = node[0]
            if kind == "input":
                d = var_degrees.get(node[1], 1) if var_degrees else 1
            elif kind == "const":
                d = 0
            elif kind == "add":
                d = max((degs[ch] for _, ch in node[1]), default=0)
            else:
                d = degs[node[1]] + degs[node[2]]
            degs.append(d)
        return max((degs[o] for o in self.outputs), default=0)

    def eval(self, point) -> list[FieldElement]:
        sp = self.spec
        vals = [v.value if isinstance(v, FieldElement) else v for v in point]
        out: list[Raw] = []
        for node in self.nodes:
            kind = node[0]
            if kind == "input":
                out.append(vals[node[1]])
            elif kind == "const":
                out.append(node[1])
            elif kind == "add":
                acc = sp.zero()
                for w, ch in node[1]:
                    acc = sp.radd(acc, sp.rmul(w, out[ch]))
                out.append(acc)
            else:
                out.append(sp.rmul(out[node[1]], out[node[2]]))
        return [FieldElement(sp, out[o]) for o in self.outputs]

    def expand(self, budget: int = DEFAULT_EXPAND_BUDGET) -> list[SparsePoly]:
        sp = self.spec
        cost = 0
        polys: list[SparsePoly] = []
        for node in self.nodes:
            kind = node[0]
            if kind == "input":
                polys.append(SparsePoly.variable(sp, self.nvars, node[1]))
            elif kind == "const":
                polys.append(SparsePoly.const(sp, self.nvars, node[1]))
            elif kind == "add":
                acc = SparsePoly.zero(sp, self.nvars)
                for w, ch in node[1]:
                    cost += polys[ch].sparsity()
                    acc = acc + polys[ch].scale(w)
                polys.append(acc)
            else:
                a, b = polys[node[1]], polys[node[2]]
                cost += a.sparsity() * b.sparsity()
                polys.append(a * b)
            if cost > budget:
                raise BudgetExceededError(f"expansion cost {cost} exceeds budget {budget}")
        return [polys[o] for o in self.outputs]

    def substitute_const(self, var: int, value) -> "CircuitDag":
        value = _raw(self.spec, value)
        nodes = [
            ("const", value) if node[0] == "input" and node[1] == var else node
            for node in self.nodes
        ]
        return CircuitDag(self.spec, self.nvars, nodes, self.outputs)


class DagBuilder:
    """Incremental CircuitDag construction with shared constant/input nodes."""

    def __init__(self, spec: FieldSpec, nvars: int):
        self.spec = spec
        self.nvars = nvars
        self.nodes: list = []
        self._const_cache: dict = {}
        self._input_cache: dict = {}

    def const(self, c) -> int:
        c = _raw(self.spec, c)
        if c not in self._const_cache:
            self.nodes.append(("const", c))
            self._const_cache[c] = len(self.nodes) - 1
        return self._const_cache[c]

    def inp(self, var: int) -> int:
        if var not in self._input_cache:
            self.nodes.append(("input", var))
            self._input_cache[var] = len(self.nodes) - 1
        return self._input_cache[var]

    def _is_const(self, idx: int):
        node = self.nodes[idx]
        return node[1] if node[0] == "const" else None

    def add(self, weighted_children: Iterable[tuple]) -> int:
        wc = []
        const_acc = self.spec.zero()
        for w, ch in weighted_children:
            w = _raw(self.spec, w)
            if not w:
                continue
            cv = self._is_const(ch)
            if cv is not None:
                const_acc = self.spec.radd(const_acc, self.spec.rmul(w, cv))
            else:
                wc.append((w, ch))
        if const_acc:
            wc.append((self.spec.one(), self.const(const_acc)))
        if not wc:
            return self.const(0)
        if len(wc) == 1 and wc[0][0] == self.spec.one():
            return wc[0][1]
        self.nodes.append(("add", tuple(wc)))
        return len(self.nodes) - 1

    def mul(self, a: int, b: int) -> int:
        ca, cb = self._is_const(a), self._is_const(b)
        if ca is not None and not ca:
            return a
        if cb is not None and not cb:
            return b
        if ca is not None and ca == self.spec.one():
            return b
        if cb is not None and cb == self.spec.one():
            return a
        if ca is not None and cb is not None:
            return self.const(self.spec.rmul(ca, cb))
        self.nodes.append(("mul", a, b))
        return len(self.nodes) - 1

    def pow(self, a: int, k: int) -> int:
        if k == 0:
            return self.const(1)
        result = None
        base = a
        while k:
            if k & 1:
                result = base if result is None else self.mul(result, base)
            k >>= 1
            if k:
                base = self.mul(base, base)
        return result

    def scale(self, c, a: int) -> int:
        return self.add([(c, a)])

    def build(self, outputs: Sequence[int] | None = None) -> CircuitDag:
        return CircuitDag(self.spec, self.nvars, self.nodes, outputs)


def dag_from_poly(f: SparsePoly) -> CircuitDag:
    """Depth-2 DAG (weighted add of monomial products) for a sparse polynomial."""
    b = DagBuilder(f.spec, f.nvars)
    weighted = []
    for e, c in sorted(f.terms.items()):
        factors = []
        for i, x in enumerate(e):
            if x:
                factors.append(b.pow(b.inp(i), x))
        if factors:
            node = factors[0]
            for g in factors[1:]:
                node = b.mul(node, g)
        else:
            node = b.const(1)
        weighted.append((c, node))
    if not weighted:
        weighted = [(f.spec.zero(), b.const(0))]
    b.add(weighted)
    return b.build()


# ---------------------------------------------------------------------------
# depth-3 powering formulas and powers of low-degree polynomials
# ---------------------------------------------------------------------------

class PoweringFormula:
    """Weighted sum of powers of affine linear forms.

    Term i computes coeff_i * (const_i + sum_j lin_i[j] x_j)^(d_i); size is
    n * sum(d_i + 1) and the degree is max d_i.
    """

    __slots__ = ("spec", "nvars", "terms")

    def __init__(self, spec: FieldSpec, nvars: int, terms: Sequence[tuple]):
        # terms: (coeff, const, lin coefficient tuple, exponent)
        self.spec = spec
        self.nvars = nvars
        norm = []
        for coeff, const, lin, d in terms:
            lin = tuple(_raw(spec, c) for c in lin)
            if len(lin) != nvars:
                raise ValueError("linear form length != nvars")
            if d < 0:
                raise ValueError("negative exponent")
            norm.append((_raw(spec, coeff), _raw(spec, const), lin, int(d)))
        self.terms = norm

    def size(self) -> int:
        return self.nvars * sum(d + 1 for *_, d in self.terms)

    def degree(self) -> int:
        return max((d for *_, d in self.terms), default=0)

    def scale(self, c) -> "PoweringFormula":
        c = _raw(self.spec, c)
        return PoweringFormula(
            self.spec, self.nvars,
            [(self.spec.rmul(coeff, c), c0, lin, d) for coeff, c0, lin, d in self.terms],
        )

    def expand(self, budget: int = DEFAULT_EXPAND_BUDGET) -> SparsePoly:
        sp = self.spec
        out = SparsePoly.zero(sp, self.nvars)
        cost = 0
        for coeff, c0, lin, d in self.terms:
            form = SparsePoly(sp, self.nvars, {(0,) * self.nvars: c0})
            for i, c in enumerate(lin):
                if c:
                    e = [0] * self.nvars
                    e[i] = 1
                    form = form + SparsePoly.monomial(sp, self.nvars, e, c)
            powed = form ** d
            cost += powed.sparsity()
            if cost > budget:
                raise BudgetExceededError(f"expansion cost {cost} exceeds budget {budget}")
            out = out + powed.scale(coeff)
        return out

    def eval(self, point) -> FieldElement:
        sp = self.spec
        vals = [v.value if isinstance(v, FieldElement) else v for v in point]
        acc = sp.zero()
        for coeff, c0, lin, d in self.terms:
            s = c0
            for c, v in zip(lin, vals):
                s = sp.radd(s, sp.rmul(c, v))
            acc = sp.radd(acc, sp.rmul(coeff, sp.rpow(s, d)))
        return FieldElement(sp, acc)


class LowDegPoweringFormula:
    """Weighted sum of powers of degree-<=t sparse polynomials."""

    __slots__ = ("spec", "nvars", "t", "terms")

    def __init__(self, spec: FieldSpec, nvars: int, t: int, terms: Sequence[tuple]):
        # terms: (coeff, base SparsePoly, exponent)
        self.spec = spec
        self.nvars = nvars
        self.t = t
        norm = []
        for coeff, base, d in terms:
            if base.spec != spec or base.nvars != nvars:
                raise ValueError("base polynomial ring mismatch")
            if base.degree() > t:
                raise ValueError(f"base degree {base.degree()} exceeds t={t}")
            norm.append((_raw(spec, coeff), base, int(d)))
        self.terms = norm

    def size(self) -> int:
        return comb(self.nvars + self.t, self.t) * sum(d + 1 for *_, d in self.terms)

    def degree(self) -> int:
        return max((base.degree() * d for _, base, d in self.terms), default=0)

    def expand(self, budget: int = DEFAULT_EXPAND_BUDGET) -> SparsePoly:
        out = SparsePoly.zero(self.spec, self.nvars)
        cost = 0
        for coeff, base, d in self.terms:
            powed = base ** d
            cost += powed.sparsity()
            if cost > budget:
                raise BudgetExceededError(f"expansion cost {cost} exceeds budget {budget}")
            out = out + powed.scale(coeff)
        return out

    def eval(self, point) -> FieldElement:
        sp = self.spec
        acc = sp.zero()
        for coeff, base, d in self.terms:
            acc = sp.radd(acc, sp.rmul(coeff, sp.rpow(base.evaluate(point).value, d)))
        return FieldElement(sp, acc)


# ---------------------------------------------------------------------------
# roABPs in matrix-product normal form
# ---------------------------------------------------------------------------
#
# A layer holds one square matrix of univariate entries in that layer's
# variable.  Entries are coefficient tuples (low to high); () is zero.  The
# computed value is entry (1,1) of the layer product.

Entry = tuple


def _e_trim(t: Sequence[Raw]) -> Entry:
    t = tuple(t)
    while t and not t[-1]:
        t = t[:-1]
    return t


def _e_add(sp: FieldSpec, a: Entry, b: Entry) -> Entry:
    if len(a) < len(b):
        a, b = b, a
    out = list(a)
    for i, c in enumerate(b):
        out[i] = sp.radd(out[i], c)
    return _e_trim(out)


def _e_mul(sp: FieldSpec, a: Entry, b: Entry) -> Entry:
    if not a or not b:
        return ()
    out = [sp.zero()] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if not x:
            continue
        for j, y in enumerate(b):
            if y:
                out[i + j] = sp.radd(out[i + j], sp.rmul(x, y))
    return _e_trim(out)


def _e_scale(sp: FieldSpec, a: Entry, c: Raw) -> Entry:
    if not c:
        return ()
    return _e_trim(tuple(sp.rmul(x, c) for x in a))


def _e_eval(sp: FieldSpec, a: Entry, v: Raw) -> Raw:
    acc = sp.zero()
    for c in reversed(a):
        acc = sp.radd(sp.rmul(acc, v), c)
    return acc


def _e_poly(sp: FieldSpec, a: Entry, var: int, nvars: int) -> SparsePoly:
    terms = {}
    for k, c in enumerate(a):
        if c:
            e = [0] * nvars
            e[var] = k
            terms[tuple(e)] = c
    return SparsePoly(sp, nvars, terms)


class Roabp:
    """Read-once oblivious ABP: value = (prod_i A_i(x_{order[i]}))_{1,1}."""

    __slots__ = ("spec", "nvars", "order", "width", "layers")

    def __init__(self, spec: FieldSpec, nvars: int, order: Sequence[int], width: int,
                 layers: Sequence[Sequence[Sequence[Entry]]]):
        self.spec = spec
        self.nvars = nvars
        self.order = tuple(order)
        if len(set(self.order)) != len(self.order):
            raise ValueError("variable repeated in roABP order")
        self.width = width
        if len(layers) != len(self.order):
            raise ValueError("layer count != order length")
        self.layers = [
            [[_e_trim(e) for e in row] for row in mat] for mat in layers
        ]
        for mat in self.layers:
            if len(mat) != width or any(len(row) != width for row in mat):
                raise ValueError("non-square layer matrix")

    def entry_degree(self) -> int:
        d = 0
        for mat in self.layers:
            for row in mat:
                for e in row:
                    if e:
                        d = max(d, len(e) - 1)
        return d

    def size_product(self) -> int:
        """n * r * d * D accounting (D = number of layers)."""
        return self.nvars * self.width * max(self.entry_degree(), 1) * len(self.layers)

    def nnz(self) -> int:
        return sum(1 for mat in self.layers for row in mat for e in row if e)

    def eval(self, point) -> FieldElement:
        sp = self.spec
        vals = [v.value if isinstance(v, FieldElement) else v for v in point]
        row = None
        for mat, var in zip(self.layers, self.order):
            v = vals[var]
            if row is None:
                row = [_e_eval(sp, e, v) for e in mat[0]]
                continue
            new = [sp.zero()] * self.width
            for k, rv in enumerate(row):
                if not rv:
                    continue
                for j, e in enumerate(mat[k]):
                    if e:
                        new[j] = sp.radd(new[j], sp.rmul(rv, _e_eval(sp, e, v)))
            row = new
        return FieldElement(sp, row[0] if row is not None else sp.zero())

    def expand(self, budget: int = DEFAULT_EXPAND_BUDGET) -> SparsePoly:
        sp = self.spec
        cost = 0
        row: list[SparsePoly] | None = None
        for mat, var in zip(self.layers, self.order):
            if row is None:
                row = [_e_poly(sp, e, var, self.nvars) for e in mat[0]]
                continue
            new = [SparsePoly.zero(sp, self.nvars)] * self.width
            for k, rp in enumerate(row):
                if rp.is_zero():
                    continue
                for j, e in enumerate(mat[k]):
                    if e:
                        cost += rp.sparsity() * len(e)
                        if cost > budget:
                            raise BudgetExceededError(
                                f"expansion cost {cost} exceeds budget {budget}")
                        new[j] = new[j] + rp * _e_poly(sp, e, var, self.nvars)
            row = new
        if row is None:
            return SparsePoly.zero(sp, self.nvars)
        return row[0]

    # closure operations

    def _check_same_order(self, other: "Roabp") -> None:
        if self.spec != other.spec or self.nvars != other.nvars:
            raise ValueError("roABP ring mismatch")
        if self.order != other.order:
            raise ValueError("roABP variable orders differ")

    def add(self, other: "Roabp") -> "Roabp":
        """Width r+s sum: first-layer rows and last-layer columns merged."""
        self._check_same_order(other)
        sp = self.spec
        r, s = self.width, other.width
        w = r + s
        zero_row = [()] * w
        L = len(self.order)
        layers = []
        if L == 1:
            mat = [[() for _ in range(w)] for _ in range(w)]
            mat[0][0] = _e_add(sp, self.layers[0][0][0], other.layers[0][0][0])
            return Roabp(sp, self.nvars, self.order, w, [mat])
        for i in range(L):
            a, b = self.layers[i], other.layers[i]
            if i == 0:
                mat = [list(a[0]) + list(b[0])] + [list(zero_row) for _ in range(w - 1)]
            elif i == L - 1:
                mat = [[() for _ in range(w)] for _ in range(w)]
                for k in range(r):
                    mat[k][0] = a[k][0]
                for k in range(s):
                    mat[r + k][0] = b[k][0]
            else:
                mat = [[() for _ in range(w)] for _ in range(w)]
                for k in range(r):
                    for j in range(r):
                        mat[k][j] = a[k][j]
                for k in range(s):
                    for j in range(s):
                        mat[r + k][r + j] = b[k][j]
            layers.append(mat)
        return Roabp(sp, self.nvars, self.order, w, layers)

    def mul(self, other: "Roabp") -> "Roabp":
        """Width r*s product: layer-wise Kronecker product."""
        self._check_same_order(other)
        sp = self.spec
        r, s = self.width, other.width
        w = r * s
        layers = []
        for a, b in zip(self.layers, other.layers):
            mat = [[() for _ in range(w)] for _ in range(w)]
            for i in range(r):
                for j in range(r):
                    e1 = a[i][j]
                    if not e1:
                        continue
                    for k in range(s):
                        for m in range(s):
                            e2 = b[k][m]
                            if e2:
                                mat[i * s + k][j * s + m] = _e_mul(sp, e1, e2)
            layers.append(mat)
        return Roabp(sp, self.nvars, self.order, w, layers)

    def scale(self, c) -> "Roabp":
        c = _raw(self.spec, c)
        layers = [[list(row) for row in mat] for mat in self.layers]
        layers[0] = [[_e_scale(self.spec, e, c) for e in row] for row in self.layers[0]]
        return Roabp(self.spec, self.nvars, self.order, self.width, layers)

    def partial_eval(self, assignment: Mapping[int, Raw | FieldElement]) -> "Roabp":
        """Substitute constants for a subset of variables; width unchanged,
        induced order on the survivors."""
        sp = self.spec
        assign = {v: _raw(sp, val) for v, val in assignment.items()}
        # evaluate assigned layers to constant matrices, then fold each into
        # the nearest surviving neighbour (or accumulate globally if none).
        mats = []
        for mat, var in zip(self.layers, self.order):
            if var in assign:
                val = assign[var]
                cmat = [[_e_eval(sp, e, val) for e in row] for row in mat]
                mats.append(("const", cmat))
            else:
                mats.append(("layer", var, mat))
        # fold constants left-to-right into the next surviving layer
        pending: list | None = None

        def mat_mul_const_layer(c, mat):
            w = self.width
            out = [[() for _ in range(w)] for _ in range(w)]
            for i in range(w):
                for j in range(w):
                    acc: Entry = ()
                    for k in range(w):
                        if c[i][k]:
                            acc = _e_add(sp, acc, _e_scale(sp, mat[k][j], c[i][k]))
                    out[i][j] = acc
            return out

        def const_mul(a, b):
            w = self.width
            return [
                [sum((sp.rmul(a[i][k], b[k][j]) for k in range(w)), start=sp.zero())
                 if sp.kind == "rational" else
                 sum(sp.rmul(a[i][k], b[k][j]) for k in range(w)) % sp.p
                 for j in range(w)]
                for i in range(w)
            ]

        new_order: list[int] = []
        new_layers: list = []
        for item in mats:
            if item[0] == "const":
                pending = item[1] if pending is None else const_mul(pending, item[1])
            else:
                _, var, mat = item
                if pending is not None:
                    mat = mat_mul_const_layer(pending, mat)
                    pending = None
                new_order.append(var)
                new_layers.append(mat)
        if not new_order:
            # fully evaluated: keep a single constant layer on a dummy variable
            raise ValueError("partial evaluation removed every variable; use eval")
        if pending is not None:
            # trailing constants fold into the last surviving layer from the right
            last = new_layers[-1]
            w = self.width
            out = [[() for _ in range(w)] for _ in range(w)]
            for i in range(w):
                for j in range(w):
                    acc: Entry = ()
                    for k in range(w):
                        if pending[k][j]:
                            acc = _e_add(sp, acc, _e_scale(sp, last[i][k], pending[k][j]))
                    out[i][j] = acc
            new_layers[-1] = out
        return Roabp(sp, self.nvars, new_order, self.width, new_layers)

    def hadamard_substitute(self, var_pairs: Mapping[int, tuple]) -> "Roabp":
        """Substitute z_i <- x_i * y_i for every layer variable.

        `var_pairs` maps each original variable to its (x, y) replacement
        pair in the (possibly larger) ambient ring.  The output order
        interleaves each x immediately before its y; width becomes
        r * (max entry degree + 1).
        """
        sp = self.spec
        r = self.width
        d = self.entry_degree()
        w = r * (d + 1)
        new_order: list[int] = []
        new_layers: list = []
        for mat, var in zip(self.layers, self.order):
            xv, yv = var_pairs[var]
            xmat = [[() for _ in range(w)] for _ in range(w)]
            ymat = [[() for _ in range(w)] for _ in range(w)]
            # top block rows of xmat: [x^0 I | x^1 I | ... | x^d I]
            one = sp.one()
            for q in range(d + 1):
                for k in range(r):
                    ent = [sp.zero()] * (q + 1)
                    ent[q] = one
                    xmat[k][q * r + k] = _e_trim(ent)
            # left block columns of ymat: stacked coefficient matrices C_q * y^q
            for q in range(d + 1):
                for k in range(r):
                    for m in range(r):
                        e = mat[k][m]
                        if len(e) > q and e[q]:
                            ent = [sp.zero()] * (q + 1)
                            ent[q] = e[q]
                            ymat[q * r + k][m] = _e_trim(ent)
            new_order.extend((xv, yv))
            new_layers.append(xmat)
            new_layers.append(ymat)
        return Roabp(sp, self.nvars, new_order, w, new_layers)


def roabp_const(spec: FieldSpec, nvars: int, order: Sequence[int], c) -> Roabp:
    """Width-1 roABP computing a constant."""
    c = _raw(spec, c)
    layers = []
    for i in range(len(order)):
        layers.append([[(c,) if i == 0 else (spec.one(),)]])
    return Roabp(spec, nvars, order, 1, layers)


def powering_to_roabp(p: PoweringFormula, order: Sequence[int]) -> Roabp:
    """Width sum(d_i+1) roABP for a powering formula, in any variable order.

    Per term, the state after the first k layers is the vector of powers of
    the processed affine prefix; transitions are binomial and work over any
    field.
    """
    sp = p.spec
    order = tuple(order)
    if sorted(order) != list(range(p.nvars)):
        raise ValueError("order must be a permutation of the formula's variables")
    parts = []
    for coeff, c0, lin, d in p.terms:
        w = d + 1
        L = len(order)
        layers = []
        for pos, var in enumerate(order):
            alpha = lin[var]
            mat = [[() for _ in range(w)] for _ in range(w)]
            for k in range(w):
                for m in range(k, w):
                    # coefficient of prefix^k * (alpha x)^(m-k) in prefix_next^m
                    ent = [sp.zero()] * (m - k + 1)
                    ent[m - k] = sp.rmul(sp.from_int(comb(m, k)), sp.rpow(alpha, m - k)) \
                        if m > k else sp.from_int(comb(m, k))
                    mat[k][m] = _e_trim(ent)
            if pos == 0:
                # fold the start vector (powers of the affine constant) into row 0
                start = [sp.rpow(c0, k) for k in range(w)]
                row0 = []
                for m in range(w):
                    acc: Entry = ()
                    for k in range(w):
                        if start[k] and mat[k][m]:
                            acc = _e_add(sp, acc, _e_scale(sp, mat[k][m], start[k]))
                    row0.append(acc)
                mat = [row0] + [[()] * w for _ in range(w - 1)]
            if pos == L - 1:
                # select the d-th power, scaled by the term coefficient
                sel = [[() for _ in range(w)] for _ in range(w)]
                for k in range(w):
                    sel[k][0] = _e_scale(sp, mat[k][d], coeff)
                mat = sel
            layers.append(mat)
        parts.append(Roabp(sp, p.nvars, order, w, layers))
    if not parts:
        zero_layers = [[[()]] for _ in order]
        return Roabp(sp, p.nvars, order, 1, zero_layers)
    out = parts[0]
    for part in parts[1:]:
        out = out.add(part)
    return out


# ---------------------------------------------------------------------------
# duality: (x_1 + ... + x_n)^d as a sum of products of univariates
# ---------------------------------------------------------------------------

def duality_decompose(n: int, d: int, spec: FieldSpec) -> list[tuple[SparsePoly, ...]]:
    """Exactly (nd+1)(d+1) tuples of degree-<=d univariates whose products
    sum to (x_1 + ... + x_n)^d.  Requires |F| >= nd+1.

    Double interpolation: for integer r, the coefficient of t^d in
    prod_j sum_k C(k+r-1,k) (x_j t)^k is the r-fold-repetition homogeneous
    sum h_d^(r)(x), a degree-d polynomial in r whose leading coefficient is
    (x_1+...+x_n)^d / d!.
    """
    if spec.is_prime and spec.p < n * d + 1:
        raise ValueError(f"field too small: need at least {n * d + 1} elements")
    sp = spec
    if d == 0:
        one = SparsePoly.const(sp, n, 1)
        return [tuple(one for _ in range(n))]
    taus = [sp.from_int(t) for t in range(n * d + 1)]
    # lambda: extract the t^d coefficient from evaluations at the taus
    lam = _coeff_extraction_weights(sp, taus, d)
    # mu: extract the r^d (leading) coefficient from evaluations at r = 0..d
    mu = []
    for ell in range(d + 1):
        denom = sp.one()
        for m in range(d + 1):
            if m != ell:
                denom = sp.rmul(denom, sp.from_int(ell - m))
        mu.append(sp.rinv(denom))
    dfact = sp.from_int(factorial(d))
    out = []
    for r in range(d + 1):
        # multiset count C(k+r-1, k); for r = 0 only the empty choice remains
        binoms = [sp.from_int(comb(k + r - 1, k) if r else (1 if k == 0 else 0))
                  for k in range(d + 1)]
        for ell, tau in enumerate(taus):
            scalar = sp.rmul(dfact, sp.rmul(mu[r], lam[ell]))
            tuple_polys = []
            for j in range(n):
                terms = {}
                tk = sp.one()
                for k in range(d + 1):
                    c = sp.rmul(binoms[k], tk)
                    if j == 0:
                        c = sp.rmul(c, scalar)
                    if c:
                        e = [0] * n
                        e[j] = k
                        terms[tuple(e)] = c
                    tk = sp.rmul(tk, tau)
                tuple_polys.append(SparsePoly(sp, n, terms))
            out.append(tuple(tuple_polys))
    return out


def _coeff_extraction_weights(sp: FieldSpec, points: list, target: int) -> list:
    """Weights w with sum_l w_l * q(points[l]) = coeff of t^target in q,
    for every polynomial q of degree < len(points)."""
    npts = len(points)
    weights = []
    for ell in range(npts):
        # numerator polynomial prod_{m != ell} (t - tau_m), coefficients low-to-high
        num = [sp.one()]
        for m in range(npts):
            if m == ell:
                continue
            new = [sp.zero()] * (len(num) + 1)
            for i, c in enumerate(num):
                new[i + 1] = sp.radd(new[i + 1], c)
                new[i] = sp.rsub(new[i], sp.rmul(c, points[m]))
            num = new
        denom = sp.one()
        for m in range(npts):
            if m != ell:
                denom = sp.rmul(denom, sp.rsub(points[ell], points[m]))
        weights.append(sp.rdiv(num[target], denom))
    return weights


# ---------------------------------------------------------------------------
# division by a designated variable
# ---------------------------------------------------------------------------

def divide_by_var_formula(c: CircuitDag, var: int, a: int, d: int,
                          check_divisible: bool = True,
                          budget: int = DEFAULT_EXPAND_BUDGET) -> CircuitDag:
    """Interpolation-based quotient sum_{i>=a} f_i(x) y^{i-a} for f of
    degree <= d in y; requires |F| >= d+1."""
    sp = c.spec
    if sp.is_prime and sp.p < d + 1:
        raise ValueError(f"field too small: need {d + 1} interpolation points")
    if check_divisible:
        f = c.expand(budget)[0]
        if any(e[var] < a for e in f.terms):
            raise ValueError(f"input is not divisible by variable {var}^{a}")
    betas = [sp.from_int(t) for t in range(d + 1)]
    # alpha[i][j]: f_i = sum_j alpha[i][j] f(x, beta_j)
    alphas = [_coeff_extraction_weights(sp, betas, i) for i in range(d + 1)]
    b = DagBuilder(sp, c.nvars)
    # one shared copy of the circuit per evaluation point
    eval_nodes = []
    for beta in betas:
        sub = c.substitute_const(var, beta)
        offset = len(b.nodes)
        for node in sub.nodes:
            if node[0] == "add":
                b.nodes.append(("add", tuple((w, ch + offset) for w, ch in node[1])))
            elif node[0] == "mul":
                b.nodes.append(("mul", node[1] + offset, node[2] + offset))
            else:
                b.nodes.append(node)
        eval_nodes.append(offset + sub.output)
    y = b.inp(var)
    top = []
    for i in range(a, d + 1):
        inner = b.add([(alphas[i][j], eval_nodes[j]) for j in range(d + 1)])
        if i > a:
            inner = b.mul(inner, b.pow(y, i - a))
        top.append((sp.one(), inner))
    b.add(top)
    return b.build()


def divide_by_var_circuit(c: CircuitDag, var: int, a: int) -> CircuitDag:
    """Gate-splitting construction: a+1 outputs holding the coefficients of
    y^0..y^(a-1) and the tail sum_{i>=a} f_i y^{i-a}.  Size O(a^2 s)."""
    if a < 1:
        raise ValueError("power must be >= 1")
    sp = c.spec
    b = DagBuilder(sp, c.nvars)
    zero = b.const(0)
    one_raw = sp.one()
    ypow: dict[int, int] = {}

    def ypower(k: int) -> int:
        if k not in ypow:
            ypow[k] = b.pow(b.inp(var), k)
        return ypow[k]

    slots: list[list[int]] = []
    for node in c.nodes:
        kind = node[0]
        if kind == "const":
            b.nodes.append(node)
            slots.append([len(b.nodes) - 1] + [zero] * a)
        elif kind == "input":
            if node[1] == var:
                slots.append([zero, b.const(1)] + [zero] * (a - 1))
            else:
                b.nodes.append(node)
                slots.append([len(b.nodes) - 1] + [zero] * a)
        elif kind == "add":
            out = []
            for i in range(a + 1):
                out.append(b.add([(w, slots[ch][i]) for w, ch in node[1]]))
            slots.append(out)
        else:
            u, w_ = slots[node[1]], slots[node[2]]
            prod: dict[tuple, int] = {}

            def pmul(i: int, j: int) -> int:
                if (i, j) not in prod:
                    if u[i] == zero or w_[j] == zero:
                        prod[(i, j)] = zero
                    else:
                        prod[(i, j)] = b.mul(u[i], w_[j])
                return prod[(i, j)]

            out = []
            for i in range(a):
                out.append(b.add([(one_raw, pmul(j, i - j)) for j in range(i + 1)]))
            # slot a: group the overflow pairs by their explicit y power
            by_power: dict[int, list] = {}
            for i in range(a):
                for j in range(a):
                    if i + j >= a:
                        by_power.setdefault(i + j - a, []).append((one_raw, pmul(i, j)))
            for i in range(a):
                by_power.setdefault(i, []).append((one_raw, pmul(i, a)))
                by_power.setdefault(i, []).append((one_raw, pmul(a, i)))
            by_power.setdefault(a, []).append((one_raw, pmul(a, a)))
            top = []
            for k, parts in sorted(by_power.items()):
                g = b.add(parts)
                if k > 0:
                    g = b.mul(g, ypower(k))
                top.append((one_raw, g))
            out.append(b.add(top))
            slots.append(out)
    return b.build(slots[c.output])


# ---------------------------------------------------------------------------
# multilinear formulas
# ---------------------------------------------------------------------------

class MlfNode:
    """Formula tree node: 'var', 'const', weighted 'add', or 'mul'."""

    __slots__ = ("kind", "var", "const", "children", "weights", "_support")

    def __init__(self, kind, var=None, const=None, children=(), weights=()):
        self.kind = kind
        self.var = var
        self.const = const
        self.children = tuple(children)
        self.weights = tuple(weights)
        self._support = None

    def support(self) -> frozenset:
        if self._support is None:
            if self.kind == "var":
                self._support = frozenset((self.var,))
            elif self.kind == "const":
                self._support = frozenset()
            else:
                s: set = set()
                for ch in self.children:
                    s |= ch.support()
                self._support = frozenset(s)
        return self._support


def mlf_var(v: int) -> MlfNode:
    return MlfNode("var", var=v)


def mlf_const(c: Raw) -> MlfNode:
    return MlfNode("const", const=c)


def mlf_add(children: Sequence[MlfNode], weights: Sequence[Raw] | None = None) -> MlfNode:
    weights = tuple(weights) if weights is not None else tuple(1 for _ in children)
    return MlfNode("add", children=children, weights=weights)


def mlf_mul(children: Sequence[MlfNode]) -> MlfNode:
    return MlfNode("mul", children=children)


class MultilinearFormula:
    """Formula whose every mul node has variable-disjoint children."""

    __slots__ = ("spec", "nvars", "root")

    def __init__(self, spec: FieldSpec, nvars: int, root: MlfNode):
        self.spec = spec
        self.nvars = nvars
        self.root = root

    def check(self):
        """(True, None) if every mul node's children are pairwise
        variable-disjoint, else (False, path to the offending node)."""

        def walk(node, path):
            if node.kind == "mul":
                seen: set = set()
                for ch in node.children:
                    s = ch.support()
                    if seen & s:
                        return False, path
                    seen |= s
            for i, ch in enumerate(node.children):
                ok, bad = walk(ch, path + [i])
                if not ok:
                    return False, bad
            return True, None

        return walk(self.root, [])

    def product_depth(self) -> int:
        def walk(node):
            inner = max((walk(ch) for ch in node.children), default=0)
            return inner + (1 if node.kind == "mul" else 0)

        return walk(self.root)

    def wires(self) -> int:
        def walk(node):
            return len(node.children) + sum(walk(ch) for ch in node.children)

        return walk(self.root)

    def eval(self, point) -> FieldElement:
        sp = self.spec
        vals = [v.value if isinstance(v, FieldElement) else v for v in point]

        def walk(node):
            if node.kind == "var":
                return vals[node.var]
            if node.kind == "const":
                return node.const
            if node.kind == "add":
                acc = sp.zero()
                for w, ch in zip(node.weights, node.children):
                    acc = sp.radd(acc, sp.rmul(_raw(sp, w), walk(ch)))
                return acc
            acc = sp.one()
            for ch in node.children:
                acc = sp.rmul(acc, walk(ch))
            return acc

        return FieldElement(sp, walk(self.root))

    def expand(self, budget: int = DEFAULT_EXPAND_BUDGET) -> SparsePoly:
        sp = self.spec
        cost = [0]

        def walk(node):
            if node.kind == "var":
                return SparsePoly.variable(sp, self.nvars, node.var)
            if node.kind == "const":
                return SparsePoly.const(sp, self.nvars, node.const)
            if node.kind == "add":
                acc = SparsePoly.zero(sp, self.nvars)
                for w, ch in zip(node.weights, node.children):
                    acc = acc + walk(ch).scale(_raw(sp, w))
                return acc
            acc = SparsePoly.const(sp, self.nvars, 1)
            for ch in node.children:
                rhs = walk(ch)
                cost[0] += acc.sparsity() * rhs.sparsity()
                if cost[0] > budget:
                    raise BudgetExceededError(f"expansion cost {cost[0]} exceeds budget {budget}")
                acc = acc * rhs
            return acc

        return walk(self.root)


def multilinear_formula_check(t: MultilinearFormula):
    return t.check()
