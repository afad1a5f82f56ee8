import random
from fractions import Fraction

import pytest

from ipsbench.circuits import MultilinearFormula, Roabp, mlf_mul, mlf_var
from ipsbench.fields import FieldElement, FieldSpec
from ipsbench.ips import (
    AxiomSystem,
    GuardError,
    IpsCertificate,
    SatisfiableSystemError,
    appendix_inverse_poly,
    build_mlformula_refutation,
    build_roabp_refutation,
    ips_to_linear,
    linearity_of,
    monomial_square_witness,
    multilinearize_roabp,
    reachable_sums,
    simulate_sparse_linips,
    sparse_times_formula_witness,
    subset_sum_axiom,
    subset_sum_witness,
    verify_exact,
    verify_pit,
)
from ipsbench.poly import SparsePoly, interpolate_multilinear

from tests.helpers import rand_roabp

Q = FieldSpec.rational()
F101 = FieldSpec.prime(101)


def lift(f: SparsePoly, total: int) -> SparsePoly:
    return SparsePoly(f.spec, total, {e + (0,) * (total - f.nvars): c for e, c in f.terms.items()})


def xy_system(spec) -> AxiomSystem:
    # axioms {x1 x2 + 1} plus booleans, over two variables
    axiom = SparsePoly(spec, 2, {(1, 1): spec.one(), (0, 0): spec.one()})
    return AxiomSystem(spec, 2, [axiom], include_boolean=True)


def xy_certificate(spec) -> IpsCertificate:
    # C = (1 - x1 x2 / 2) y1 + (x2^2 / 2) z1 + (x1 / 2) z2
    sys_ = xy_system(spec)
    total = sys_.layout().total  # x1 x2 y1 z1 z2
    half = spec.rdiv(spec.one(), spec.from_int(2))
    terms = {
        (0, 0, 1, 0, 0): spec.one(),
        (1, 1, 1, 0, 0): spec.rneg(half),
        (0, 2, 0, 1, 0): half,
        (1, 0, 0, 0, 1): half,
    }
    return IpsCertificate(sys_, SparsePoly(spec, total, terms), "lin_yz")


def test_verify_exact_trivial_system():
    sys_ = AxiomSystem(Q, 1, [SparsePoly.const(Q, 1, 1)], include_boolean=False)
    proof = SparsePoly.variable(Q, 2, 1)  # y1
    assert verify_exact(IpsCertificate(sys_, proof)).ok


def test_verify_exact_xy_certificate():
    for spec in (Q, F101):
        cert = xy_certificate(spec)
        assert verify_exact(cert).ok
    # same system, proof y1 alone fails the one-condition
    sys_ = xy_system(Q)
    bad = IpsCertificate(sys_, SparsePoly.variable(Q, 5, 2))
    res = verify_exact(bad)
    assert res.status == "fails-one-condition"


def test_verify_exact_zero_condition():
    sys_ = AxiomSystem(Q, 1, [SparsePoly.const(Q, 1, 1)], include_boolean=False)
    # C = y1 + 1 violates C(x,0) = 0
    proof = SparsePoly(Q, 2, {(0, 1): Fraction(1), (0, 0): Fraction(1)})
    assert verify_exact(IpsCertificate(sys_, proof)).status == "fails-zero-condition"


def test_verify_pit():
    spec = FieldSpec.prime(10007)
    cert = xy_certificate(spec)
    res = verify_pit(cert, trials=50, seed=1)
    assert res.ok
    assert res.per_trial_error_bound <= 5 / 10007
    # corrupted: perturb one coefficient
    bad_terms = dict(cert.proof.terms)
    bad_terms[(1, 1, 1, 0, 0)] = spec.radd(bad_terms[(1, 1, 1, 0, 0)], spec.one())
    bad = IpsCertificate(cert.system, SparsePoly(spec, 5, bad_terms), "lin_yz")
    res = verify_pit(bad, trials=200, seed=1)
    assert res.status == "invalid"
    assert res.witness is not None
    # zero trials: vacuous accept with bound 1
    assert verify_pit(cert, trials=0).per_trial_error_bound == 1.0


def test_reachable_sums():
    assert reachable_sums(Q, [1, 1]) == {Fraction(0), Fraction(1), Fraction(2)}
    assert reachable_sums(Q, [1, 1, 1]) == {Fraction(k) for k in range(4)}
    assert reachable_sums(Q, [1, 2, 4]) == {Fraction(k) for k in range(8)}


def test_subset_sum_witness_n2():
    g, scale, f_ml = subset_sum_witness(Q, [1, 1], 3)
    # p(t) = t(t-1)(t-2) = t^3 - 3t^2 + 2t, p(3) = 6, g = (x1+x2)^2 + 2
    assert scale == FieldElement(Q, -6)
    x1, x2 = SparsePoly.variable(Q, 2, 0), SparsePoly.variable(Q, 2, 1)
    two = SparsePoly.const(Q, 2, 2)
    assert g.expand() == (x1 + x2) ** 2 + two
    expect = SparsePoly(Q, 2, {
        (0, 0): Fraction(-2, 6), (1, 0): Fraction(-1, 6),
        (0, 1): Fraction(-1, 6), (1, 1): Fraction(-2, 6),
    })
    assert f_ml == expect
    assert f_ml.evaluate([0, 0]).value == Fraction(-1, 3)


def test_subset_sum_witness_n1_matches_interpolation():
    _, _, f_ml = subset_sum_witness(Q, [1], 2)
    oracle = interpolate_multilinear(Q, 1, [Fraction(-1, 2), Fraction(-1)])
    assert f_ml == oracle


def test_subset_sum_witness_satisfiable_rejected():
    with pytest.raises(SatisfiableSystemError):
        subset_sum_witness(Q, [1, 1], 1)


def test_multilinearize_roabp_examples():
    # a computes x^2: ml = x, h_1 = 1
    a = Roabp(Q, 1, (0,), 1, [[[(0, 0, 1)]]])
    ml, hs = multilinearize_roabp(a)
    x = SparsePoly.variable(Q, 1, 0)
    assert ml.expand() == x
    assert hs[0].expand() == SparsePoly.const(Q, 1, 1)
    # a computes x^2 y: ml = xy and the telescoping identity holds
    a = Roabp(Q, 2, (0, 1), 1, [[[(0, 0, 1)]], [[(0, 1)]]])
    ml, hs = multilinearize_roabp(a)
    y = SparsePoly.variable(Q, 2, 1)
    x = SparsePoly.variable(Q, 2, 0)
    assert ml.expand() == x * y
    recon = ml.expand()
    for j, h in enumerate(hs):
        v = SparsePoly.variable(Q, 2, a.order[j])
        recon = recon + h.expand() * (v * v - v)
    assert recon == a.expand()


def test_multilinearize_roabp_random():
    rng = random.Random(0)
    for _ in range(15):
        n = rng.randrange(2, 5)
        a = rand_roabp(rng, F101, n, rng.randrange(1, 4), maxdeg=3)
        ml, hs = multilinearize_roabp(a)
        assert ml.width == a.width and all(h.width == a.width for h in hs)
        truth = a.expand()
        assert ml.expand() == truth.multilinearize()
        assert ml.expand().individual_degree() <= 1
        recon = ml.expand()
        for j, h in enumerate(hs):
            assert h.expand().individual_degree() <= truth.individual_degree()
            v = SparsePoly.variable(F101, n, a.order[j])
            recon = recon + h.expand() * (v * v - v)
        assert recon == truth


def test_build_roabp_refutation_small():
    cert = build_roabp_refutation(Q, [1, 1], 3)
    assert verify_exact(cert).ok
    assert cert.meta["width"] > 0
    assert linearity_of(cert) == "lin_yz"
    # individual degree <= 2
    assert cert.proof.expand().individual_degree() <= 2


def test_build_roabp_refutation_orders_and_fields():
    spec = FieldSpec.prime(11)
    cert = build_roabp_refutation(spec, [1, 1, 1], 4)
    assert verify_exact(cert).ok
    rev = build_roabp_refutation(spec, [1, 1, 1], 4, order=(2, 1, 0))
    assert verify_exact(rev).ok
    with pytest.raises(SatisfiableSystemError):
        build_roabp_refutation(Q, [1, 1], 2)


def test_build_mlformula_refutation_n1_hand_identity():
    cert = build_mlformula_refutation(Q, [1], 2)
    assert verify_exact(cert).ok
    # C = f_ml(x) y - h(x) z with f_ml = -1/2 - x/2 and h = -1/2:
    # (-1/2 - x/2)(x - 2) + (1/2)(x^2 - x) = 1
    expanded = cert.proof.expand()
    expect = SparsePoly(Q, 3, {
        (0, 1, 0): Fraction(-1, 2), (1, 1, 0): Fraction(-1, 2),
        (0, 0, 1): Fraction(1, 2),
    })
    assert expanded == expect


def test_build_mlformula_refutation_shape():
    cert = build_mlformula_refutation(F101, [1, 1], 3)
    assert verify_exact(cert).ok
    ok, _ = cert.proof.check()
    assert ok
    assert cert.proof.product_depth() == 1
    assert linearity_of(cert) == "lin_yz"
    cert = build_mlformula_refutation(Q, [1, 1, 1, 1], 5)
    assert verify_exact(cert).ok


def test_build_mlformula_guard():
    with pytest.raises(GuardError):
        # needs (2*3+1)(3+1) = 28 field elements
        build_mlformula_refutation(FieldSpec.prime(23), [1, 1], 3)


def test_monomial_square_witness():
    for d in (1, 2, 3):
        sum_form, formula = monomial_square_witness(Q, d)
        assert sum_form.sparsity() == 2 ** d - 1
        assert formula.expand() == sum_form
        # C(x, 0) = 0
        zeroed = sum_form.substitute({d + i: Fraction(0) for i in range(d)})
        assert zeroed.is_zero()
        # (x1...xd)^2 - x1...xd = C(x, x^2 - x)
        subs = {}
        for i in range(d):
            xi = SparsePoly.variable(Q, 2 * d, i)
            subs[d + i] = xi * xi - xi
        lhs = sum_form.substitute(subs)
        mono = SparsePoly.monomial(Q, 2 * d, [1] * d)
        assert lhs == mono * mono - mono
    # d = 2 explicit: C = z1 z2 + z1 x2 + x1 z2
    sum_form, _ = monomial_square_witness(Q, 2)
    assert sum_form == SparsePoly(Q, 4, {
        (0, 0, 1, 1): Fraction(1), (0, 1, 1, 0): Fraction(1), (1, 0, 0, 1): Fraction(1),
    })


def test_sparse_times_formula_witness():
    # g = x, f = x: C = z
    g = SparsePoly.variable(Q, 1, 0)
    c = sparse_times_formula_witness(g, g)
    assert c == SparsePoly(Q, 2, {(0, 1): Fraction(1)})
    rng = random.Random(1)
    for _ in range(25):
        n = rng.randrange(1, 4)
        gt = {tuple(rng.randrange(2) for _ in range(n)): Fraction(rng.randrange(-3, 4) or 1)
              for _ in range(rng.randrange(1, 5))}
        ft = {tuple(rng.randrange(2) for _ in range(n)): Fraction(rng.randrange(-3, 4) or 1)
              for _ in range(rng.randrange(1, 4))}
        g = SparsePoly(Q, n, gt)
        f = SparsePoly(Q, n, ft)
        c = sparse_times_formula_witness(g, f)
        # C(x, 0) = 0
        assert c.substitute({n + i: Fraction(0) for i in range(n)}).is_zero()
        subs = {}
        for i in range(n):
            xi = SparsePoly.variable(Q, 2 * n, i)
            subs[n + i] = xi * xi - xi
        lhs = c.substitute(subs)
        gf = lift(g, 2 * n) * lift(f, 2 * n)
        assert lhs == gf - gf.multilinearize()


def test_simulate_sparse_linips_xy_example():
    sys_ = xy_system(Q)
    half = Fraction(1, 2)
    g = SparsePoly(Q, 2, {(0, 0): Fraction(1), (1, 1): -half})
    cert = simulate_sparse_linips(sys_, [g])
    assert verify_exact(cert).ok
    assert cert.linearity == "lin_y"
    assert linearity_of(cert) in ("lin_y", "lin_yz")
    ok, _ = cert.proof.check()
    assert ok
    # trivial system {1} with witness 1: certificate y1
    sys1 = AxiomSystem(Q, 1, [SparsePoly.const(Q, 1, 1)], include_boolean=True)
    cert1 = simulate_sparse_linips(sys1, [SparsePoly.const(Q, 1, 1)])
    assert verify_exact(cert1).ok
    assert cert1.proof.expand() == SparsePoly.variable(Q, 3, 1)


def test_simulate_sparse_linips_subset_sum():
    _, _, f_ml = subset_sum_witness(Q, [1, 1], 3)
    sys_ = AxiomSystem(Q, 2, [subset_sum_axiom(Q, [1, 1], 3)], include_boolean=True)
    cert = simulate_sparse_linips(sys_, [f_ml])
    assert verify_exact(cert).ok


def test_ips_to_linear_already_linear():
    cert = xy_certificate(Q)
    out = ips_to_linear(cert)
    assert verify_exact(out).ok
    assert linearity_of(out) == "lin_yz"


def test_ips_to_linear_quadratic_toy():
    # system {1}: C = y1^2 + y1(1 - y1) = y1 is a valid non-linear-looking proof
    sys_ = AxiomSystem(Q, 1, [SparsePoly.const(Q, 1, 1)], include_boolean=False)
    proof = SparsePoly(Q, 2, {(0, 1): Fraction(1)})
    quad = SparsePoly(Q, 2, {(0, 2): Fraction(1)})
    proof = proof + quad - quad
    cert = IpsCertificate(sys_, proof)
    out = ips_to_linear(cert)
    assert verify_exact(out).ok
    assert linearity_of(out) == "lin_yz"


def rand_valid_nonlinear_cert(rng, spec, n, rdeg=2):
    """System {1 + sum r_i (x_i^2 - x_i)} + booleans with a planted linear
    certificate, made non-linear by adding M y1 (y1 - f1)."""
    rs = []
    for i in range(n):
        terms = {tuple(rng.randrange(rdeg + 1) for _ in range(n)):
                 spec.from_int(rng.randrange(-3, 4) or 1) for _ in range(rng.randrange(1, 3))}
        rs.append(SparsePoly(spec, n, terms))
    f1 = SparsePoly.const(spec, n, 1)
    for i, r in enumerate(rs):
        xi = SparsePoly.variable(spec, n, i)
        f1 = f1 + r * (xi * xi - xi)
    sys_ = AxiomSystem(spec, n, [f1], include_boolean=True)
    total = sys_.layout().total
    y1 = SparsePoly.variable(spec, total, n)
    c0 = y1
    for i, r in enumerate(rs):
        zi = SparsePoly.variable(spec, total, n + 1 + i)
        c0 = c0 - lift(r, total) * zi
    mterms = {tuple(rng.randrange(2) for _ in range(total)):
              spec.from_int(rng.randrange(-2, 3) or 1) for _ in range(rng.randrange(1, 3))}
    m = SparsePoly(spec, total, mterms)
    proof = c0 + m * y1 * (y1 - lift(f1, total))
    return IpsCertificate(sys_, proof)


def test_ips_to_linear_random_nonlinear():
    rng = random.Random(2)
    for _ in range(10):
        n = rng.randrange(1, 4)
        cert = rand_valid_nonlinear_cert(rng, Q, n)
        assert verify_exact(cert).ok
        out = ips_to_linear(cert)
        assert verify_exact(out).ok
        # linear in every placeholder
        assert linearity_of(out) == "lin_yz"


def test_linearity_of_tags():
    cert = xy_certificate(Q)
    assert linearity_of(cert) == "lin_yz"
    # the simulated certificate is linear in y but not a placeholder-linear form
    sys_ = xy_system(Q)
    g = SparsePoly(Q, 2, {(0, 0): Fraction(1), (1, 1): Fraction(-1, 2)})
    sim = simulate_sparse_linips(sys_, [g])
    assert linearity_of(sim) == "lin_y"


def test_appendix_inverse_poly():
    f = appendix_inverse_poly(Q, 1, 2)
    assert f == SparsePoly(Q, 1, {(0,): Fraction(-1, 2), (1,): Fraction(-1, 2)})
    _, _, f_ml = subset_sum_witness(Q, [1, 1], 3)
    assert appendix_inverse_poly(Q, 2, 3) == f_ml
    # n=3, beta=5 against the interpolation oracle
    vals = [Fraction(1, bin(m).count("1") - 5) for m in range(8)]
    assert appendix_inverse_poly(Q, 3, 5) == interpolate_multilinear(Q, 3, vals)
    with pytest.raises(GuardError):
        appendix_inverse_poly(Q, 2, 1)
    with pytest.raises(GuardError):
        appendix_inverse_poly(FieldSpec.prime(5), 7, 6)


def test_every_built_cert_passes_pit():
    spec = FieldSpec.prime(10007)
    certs = [
        build_roabp_refutation(spec, [1, 1], 3),
        build_mlformula_refutation(spec, [1, 1], 3),
        xy_certificate(spec),
    ]
    for cert in certs:
        assert verify_exact(cert).ok
        assert verify_pit(cert, trials=100, seed=3).ok
