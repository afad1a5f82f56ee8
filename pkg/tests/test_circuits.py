import random
from fractions import Fraction
from itertools import permutations

import pytest

from ipsbench.circuits import (
    BudgetExceededError,
    CircuitDag,
    DagBuilder,
    MultilinearFormula,
    PoweringFormula,
    Roabp,
    dag_from_poly,
    divide_by_var_circuit,
    divide_by_var_formula,
    duality_decompose,
    mlf_add,
    mlf_const,
    mlf_mul,
    mlf_var,
    powering_to_roabp,
    roabp_const,
)
from ipsbench.fields import FieldSpec
from ipsbench.poly import SparsePoly

from tests.helpers import (
    rand_dag,
    rand_lowdeg_powering,
    rand_mlf,
    rand_multilinear_formula,
    rand_point,
    rand_poly,
    rand_powering,
    rand_roabp,
)

Q = FieldSpec.rational()
F101 = FieldSpec.prime(101)


def test_roabp_expand_xy():
    # single 1x1 matrices [x], [y] -> xy
    r = Roabp(Q, 2, (0, 1), 1, [[[(0, 1)]], [[(0, 1)]]])
    x, y = SparsePoly.variable(Q, 2, 0), SparsePoly.variable(Q, 2, 1)
    assert r.expand() == x * y
    spec7 = FieldSpec.prime(7)
    r7 = Roabp(spec7, 2, (0, 1), 1, [[[(0, 1)]], [[(0, 1)]]])
    assert r7.eval([3, 4]).value == 5


def test_powering_formula_expand():
    # (x1+x2)^2 = x1^2 + 2 x1 x2 + x2^2
    p = PoweringFormula(Q, 2, [(1, 0, (1, 1), 2)])
    x1, x2 = SparsePoly.variable(Q, 2, 0), SparsePoly.variable(Q, 2, 1)
    assert p.expand() == (x1 + x2) ** 2
    assert p.eval([1, 2]).value == 9
    assert p.size() == 2 * 3
    empty = PoweringFormula(Q, 2, [])
    assert empty.expand().is_zero()
    assert empty.eval([5, 7]).value == 0


def test_multilinear_formula_expand_and_check():
    one = mlf_const(Fraction(1))
    f = MultilinearFormula(
        Q, 2, mlf_mul([mlf_add([mlf_var(0), one]), mlf_add([mlf_var(1), mlf_const(Fraction(1))])])
    )
    x1, x2 = SparsePoly.variable(Q, 2, 0), SparsePoly.variable(Q, 2, 1)
    i = SparsePoly.const(Q, 2, 1)
    assert f.expand() == (x1 + i) * (x2 + i)
    ok, _ = f.check()
    assert ok
    bad = MultilinearFormula(Q, 1, mlf_mul([mlf_var(0), mlf_var(0)]))
    ok, path = bad.check()
    assert not ok and path == []
    good = MultilinearFormula(Q, 3, mlf_mul([mlf_add([mlf_var(0), mlf_var(1)]), mlf_var(2)]))
    assert good.check()[0]


def test_deep_random_disjoint_trees_pass_check():
    rng = random.Random(0)
    for _ in range(50):
        f = rand_multilinear_formula(rng, F101, 6, depth=4)
        assert f.check()[0]
        assert f.expand().individual_degree() <= 1


def test_eval_matches_expand_all_classes():
    rng = random.Random(1)
    for _ in range(25):
        for make in (
            lambda: rand_dag(rng, F101, 3, 6),
            lambda: rand_powering(rng, F101, 3, 3),
            lambda: rand_lowdeg_powering(rng, F101, 3, 3),
            lambda: rand_roabp(rng, F101, 3, 2),
            lambda: rand_multilinear_formula(rng, F101, 4),
        ):
            c = make()
            f = c.expand() if not isinstance(c, CircuitDag) else c.expand()[0]
            for _ in range(4):
                pt = rand_point(rng, F101, f.nvars)
                got = c.eval(pt)
                got = got[0] if isinstance(got, list) else got
                assert got == f.evaluate(pt)


def test_duality_trivial_and_small():
    # d = 0: single all-ones tuple
    tuples = duality_decompose(3, 0, Q)
    assert len(tuples) == 1
    total = SparsePoly.zero(Q, 3)
    for tup in tuples:
        prod = SparsePoly.const(Q, 3, 1)
        for f in tup:
            prod = prod * f
        total = total + prod
    assert total == SparsePoly.const(Q, 3, 1)


@pytest.mark.parametrize("n,d,spec", [
    (2, 1, Q),
    (3, 2, FieldSpec.prime(101)),
    (2, 3, Q),
    (4, 2, FieldSpec.prime(10007)),
])
def test_duality_identity(n, d, spec):
    tuples = duality_decompose(n, d, spec)
    assert len(tuples) == (n * d + 1) * (d + 1)
    total = SparsePoly.zero(spec, n)
    for tup in tuples:
        assert len(tup) == n
        prod = SparsePoly.const(spec, n, 1)
        for j, f in enumerate(tup):
            assert f.degree() <= d
            assert f.used_vars() <= {j}
            prod = prod * f
        total = total + prod
    lin = SparsePoly(spec, n, {tuple(1 if i == j else 0 for i in range(n)): spec.one() for j in range(n)})
    assert total == lin ** d


def test_duality_field_too_small():
    with pytest.raises(ValueError):
        duality_decompose(3, 2, FieldSpec.prime(5))


def test_powering_to_roabp_examples():
    # single term x1^3 -> width 4
    p = PoweringFormula(Q, 1, [(1, 0, (1,), 3)])
    r = powering_to_roabp(p, (0,))
    assert r.width == 4
    assert r.expand() == p.expand()
    # (x1+x2)^2 in order (x2, x1) -> width 3
    p = PoweringFormula(Q, 2, [(1, 0, (1, 1), 2)])
    r = powering_to_roabp(p, (1, 0))
    assert r.width == 3
    assert r.expand() == p.expand()
    # zero-term formula -> width 1 computing 0
    r = powering_to_roabp(PoweringFormula(Q, 2, []), (0, 1))
    assert r.width == 1
    assert r.expand().is_zero()


def test_powering_to_roabp_all_orders_exhaustive():
    rng = random.Random(2)
    for n in (2, 3, 4):
        p = rand_powering(rng, F101, n, 2, maxdeg=3)
        truth = p.expand()
        for order in permutations(range(n)):
            assert powering_to_roabp(p, order).expand() == truth


def test_roabp_add_mul_widths_and_semantics():
    rng = random.Random(3)
    for _ in range(20):
        a = rand_roabp(rng, F101, 3, 2)
        b = rand_roabp(rng, F101, 3, 2)
        s = a.add(b)
        m = a.mul(b)
        assert s.width == 4 and m.width == 4
        assert s.expand() == a.expand() + b.expand()
        assert m.expand() == a.expand() * b.expand()
    # width-1 sum and product
    c1 = roabp_const(Q, 2, (0, 1), 2)
    c2 = roabp_const(Q, 2, (0, 1), 3)
    assert c1.add(c2).expand() == SparsePoly.const(Q, 2, 5)
    xy = Roabp(Q, 2, (0, 1), 1, [[[(0, 1)]], [[(0, 1)]]])
    sq = xy.mul(xy)
    assert sq.width == 1
    x, y = SparsePoly.variable(Q, 2, 0), SparsePoly.variable(Q, 2, 1)
    assert sq.expand() == x * x * y * y


def test_roabp_partial_eval():
    rng = random.Random(4)
    for _ in range(20):
        a = rand_roabp(rng, F101, 3, 2)
        val = rng.randrange(101)
        var = rng.randrange(3)
        b = a.partial_eval({var: val})
        assert b.width == a.width
        assert b.order == tuple(v for v in a.order if v != var)
        assert b.expand() == a.expand().substitute({var: val})
    # evaluating the first and last layers exercises the folding edges
    a = rand_roabp(rng, F101, 3, 2)
    assert a.partial_eval({0: 5}).expand() == a.expand().substitute({0: 5})
    assert a.partial_eval({2: 7}).expand() == a.expand().substitute({2: 7})
    assert a.partial_eval({0: 1, 2: 2}).expand() == a.expand().substitute({0: 1, 2: 2})


def test_roabp_hadamard_substitute():
    # z1 -> x1 y1 keeps width for individual degree 1
    z = Roabp(Q, 1, (0,), 1, [[[(0, 1)]]])
    # ambient after substitution: vars 0..1 (x1, y1); rebuild in a 2-var ring
    z = Roabp(Q, 2, (0,), 1, [[[(0, 1)]]])
    h = z.hadamard_substitute({0: (0, 1)})
    assert h.order == (0, 1)
    x, y = SparsePoly.variable(Q, 2, 0), SparsePoly.variable(Q, 2, 1)
    assert h.expand() == x * y
    # z1 + z2 -> x1 y1 + x2 y2 (ambient 4 vars: z-slots reused as x, new y)
    rng = random.Random(5)
    for _ in range(10):
        a = rand_roabp(rng, F101, 2, 2, maxdeg=2)
        lifted = Roabp(F101, 4, a.order, a.width, a.layers)
        h = lifted.hadamard_substitute({0: (0, 1), 1: (2, 3)})
        truth = SparsePoly(F101, 4, a.expand().terms).substitute({
            0: SparsePoly.variable(F101, 4, 0) * SparsePoly.variable(F101, 4, 1),
            1: SparsePoly.variable(F101, 4, 2) * SparsePoly.variable(F101, 4, 3),
        })
        assert h.expand() == truth


def test_divide_by_var_formula():
    # c = y * x, a=1 -> x   (variable layout: 0 = x, 1 = y)
    b = DagBuilder(Q, 2)
    b.mul(b.inp(1), b.inp(0))
    c = b.build()
    q = divide_by_var_formula(c, 1, 1, 2)
    assert q.expand()[0] == SparsePoly.variable(Q, 2, 0)
    # c = y^2 (x+1), a=2 -> x+1
    b = DagBuilder(Q, 2)
    y2 = b.pow(b.inp(1), 2)
    xp1 = b.add([(1, b.inp(0)), (1, b.const(1))])
    b.mul(y2, xp1)
    c = b.build()
    q = divide_by_var_formula(c, 1, 2, 3)
    x = SparsePoly.variable(Q, 2, 0)
    assert q.expand()[0] == x + SparsePoly.const(Q, 2, 1)
    # random f(x) * y^3, a=3 -> f(x)
    rng = random.Random(6)
    for _ in range(10):
        f = rand_poly(rng, F101, 2, 3, maxdeg=2)
        fl = SparsePoly(F101, 3, {e + (0,): c for e, c in f.terms.items()})
        b = DagBuilder(F101, 3)
        fnode_dag = dag_from_poly(fl)
        off = len(b.nodes)
        b.nodes.extend(_shift(fnode_dag.nodes, off))
        prod = b.mul(off + fnode_dag.output, b.pow(b.inp(2), 3))
        c = b.build([prod])
        d = c.degree_bound()
        q = divide_by_var_formula(c, 2, 3, d)
        assert q.expand()[0] == fl
    # non-divisible input is rejected
    b = DagBuilder(Q, 2)
    b.add([(1, b.inp(0)), (1, b.inp(1))])
    with pytest.raises(ValueError):
        divide_by_var_formula(b.build(), 1, 1, 1)


def _shift(nodes, off):
    out = []
    for node in nodes:
        if node[0] == "add":
            out.append(("add", tuple((w, ch + off) for w, ch in node[1])))
        elif node[0] == "mul":
            out.append(("mul", node[1] + off, node[2] + off))
        else:
            out.append(node)
    return out


def test_divide_by_var_circuit_examples():
    # c = y^2 + x y, a=1 -> outputs (0, y + x); layout: 0 = x, 1 = y
    b = DagBuilder(Q, 2)
    y = b.inp(1)
    x = b.inp(0)
    b.add([(1, b.mul(y, y)), (1, b.mul(x, y))])
    c = b.build()
    out = divide_by_var_circuit(c, 1, 1)
    polys = out.expand()
    assert polys[0].is_zero()
    assert polys[1] == SparsePoly.variable(Q, 2, 1) + SparsePoly.variable(Q, 2, 0)
    # c = (y+1)(y+x), a=2 -> (x, x+1, 1)
    b = DagBuilder(Q, 2)
    c = b.build([b.mul(b.add([(1, b.inp(1)), (1, b.const(1))]),
                       b.add([(1, b.inp(1)), (1, b.inp(0))]))])
    polys = divide_by_var_circuit(c, 1, 2).expand()
    xs = SparsePoly.variable(Q, 2, 0)
    one = SparsePoly.const(Q, 2, 1)
    assert polys == [xs, xs + one, one]


def test_divide_by_var_circuit_reconstruction_random():
    rng = random.Random(7)
    for _ in range(40):
        c = rand_dag(rng, F101, 3, rng.randrange(3, 10))
        a = rng.randrange(1, 4)
        out = divide_by_var_circuit(c, 2, a)
        polys = out.expand()
        assert len(polys) == a + 1
        y = SparsePoly.variable(F101, 3, 2)
        recon = SparsePoly.zero(F101, 3)
        for i in range(a):
            recon = recon + polys[i] * (y ** i)
        recon = recon + polys[a] * (y ** a)
        assert recon == c.expand()[0]
        # coefficient slices are y-free
        for i in range(a):
            assert all(e[2] == 0 for e in polys[i].terms)


def test_divide_by_var_circuit_size_bound():
    rng = random.Random(8)
    ratios = []
    for _ in range(50):
        c = rand_dag(rng, F101, 3, rng.randrange(4, 12), mul_bias=0.5)
        a = rng.randrange(1, 5)
        out = divide_by_var_circuit(c, 2, a)
        ratios.append(out.wires() / (a * a * max(c.wires(), 1)))
    assert max(ratios) <= 4.0


def test_expand_budget_guard():
    b = DagBuilder(Q, 1)
    x = b.inp(0)
    node = x
    for _ in range(5):
        node = b.mul(node, node)
    c = b.build([node])
    with pytest.raises(BudgetExceededError):
        c.expand(budget=3)


def test_dag_from_poly_roundtrip():
    rng = random.Random(9)
    for _ in range(20):
        f = rand_poly(rng, Q, 3, 4, maxdeg=3)
        assert dag_from_poly(f).expand()[0] == f
