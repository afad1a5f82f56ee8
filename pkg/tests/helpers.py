"""Shared generators for randomized tests."""

from fractions import Fraction

from ipsbench.circuits import (
    DagBuilder,
    LowDegPoweringFormula,
    MlfNode,
    MultilinearFormula,
    PoweringFormula,
    Roabp,
    mlf_add,
    mlf_const,
    mlf_mul,
    mlf_var,
)
from ipsbench.fields import FieldSpec
from ipsbench.poly import SparsePoly


def rand_raw(rng, spec, nonzero=False):
    if spec.is_prime:
        return rng.randrange(1 if nonzero else 0, spec.p)
    v = rng.randrange(-4, 5)
    if nonzero and v == 0:
        v = 1
    return Fraction(v)


def rand_poly(rng, spec, nvars, nterms, maxdeg=2):
    terms = {}
    for _ in range(nterms):
        e = tuple(rng.randrange(maxdeg + 1) for _ in range(nvars))
        terms[e] = rand_raw(rng, spec, nonzero=True)
    return SparsePoly(spec, nvars, terms)


def rand_dag(rng, spec, nvars, n_ops, mul_bias=0.5):
    """Random circuit DAG mixing weighted adds and muls over all inputs."""
    b = DagBuilder(spec, nvars)
    pool = [b.inp(i) for i in range(nvars)]
    pool.append(b.const(rand_raw(rng, spec)))
    for _ in range(n_ops):
        if rng.random() < mul_bias and len(pool) >= 2:
            x, y = rng.choice(pool), rng.choice(pool)
            pool.append(b.mul(x, y))
        else:
            k = rng.randrange(2, 4)
            children = [(rand_raw(rng, spec), rng.choice(pool)) for _ in range(k)]
            pool.append(b.add(children))
    return b.build([pool[-1]])


def rand_powering(rng, spec, nvars, nterms, maxdeg=3):
    terms = []
    for _ in range(nterms):
        coeff = rand_raw(rng, spec, nonzero=True)
        const = rand_raw(rng, spec)
        lin = tuple(rand_raw(rng, spec) for _ in range(nvars))
        terms.append((coeff, const, lin, rng.randrange(maxdeg + 1)))
    return PoweringFormula(spec, nvars, terms)


def rand_lowdeg_powering(rng, spec, nvars, nterms, t=2, maxexp=2):
    terms = []
    for _ in range(nterms):
        base = rand_poly(rng, spec, nvars, rng.randrange(1, 4), maxdeg=1)
        while base.degree() > t:
            base = rand_poly(rng, spec, nvars, 2, maxdeg=1)
        terms.append((rand_raw(rng, spec, nonzero=True), base, rng.randrange(maxexp + 1)))
    return LowDegPoweringFormula(spec, nvars, t, terms)


def rand_roabp(rng, spec, nvars, width, maxdeg=2, order=None):
    order = tuple(order) if order is not None else tuple(range(nvars))
    layers = []
    for _ in order:
        mat = []
        for _ in range(width):
            row = []
            for _ in range(width):
                ent = tuple(rand_raw(rng, spec) for _ in range(rng.randrange(1, maxdeg + 2)))
                row.append(ent)
            mat.append(row)
        layers.append(mat)
    return Roabp(spec, nvars, order, width, layers)


def rand_mlf(rng, spec, vars_avail, depth=3) -> MlfNode:
    """Random multilinear formula node over a disjoint-use variable pool."""
    if depth == 0 or len(vars_avail) == 0:
        if vars_avail and rng.random() < 0.7:
            return mlf_var(rng.choice(list(vars_avail)))
        return mlf_const(rand_raw(rng, spec, nonzero=True))
    if rng.random() < 0.5:
        k = rng.randrange(2, 4)
        return mlf_add(
            [rand_mlf(rng, spec, vars_avail, depth - 1) for _ in range(k)],
            [rand_raw(rng, spec) for _ in range(k)],
        )
    # split the pool so mul children are variable-disjoint by construction
    pool = list(vars_avail)
    rng.shuffle(pool)
    cut = rng.randrange(len(pool) + 1)
    left, right = frozenset(pool[:cut]), frozenset(pool[cut:])
    return mlf_mul([
        rand_mlf(rng, spec, left, depth - 1),
        rand_mlf(rng, spec, right, depth - 1),
    ])


def rand_multilinear_formula(rng, spec, nvars, depth=3) -> MultilinearFormula:
    return MultilinearFormula(spec, nvars, rand_mlf(rng, spec, frozenset(range(nvars)), depth))


def rand_point(rng, spec, nvars):
    return [rand_raw(rng, spec) for _ in range(nvars)]
