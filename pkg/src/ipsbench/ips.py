"""IPS certificates: representation, exact and probabilistic verification,
the IPS-to-linear-IPS transformation, and explicit refutations of the
subset-sum axiom over roABPs and depth-3 multilinear formulas.

A certificate for axioms f_1..f_m (plus optional boolean axioms) is a
circuit C over x_1..x_n, placeholder variables y_1..y_m for the axioms and
z_1..z_n for the boolean axioms, valid iff C(x,0,0) = 0 and
C(x, f, x^2-x) = 1.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from math import factorial
from typing import Sequence

from .circuits import (
    DEFAULT_EXPAND_BUDGET,
    BudgetExceededError,
    CircuitDag,
    DagBuilder,
    MlfNode,
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
    _e_add,
    _e_scale,
    _e_trim,
)
from .fields import FieldElement, FieldSpec, Raw, characteristic_guard
from .poly import SparsePoly, VarLayout, elementary_symmetric

FORMULA_DIVISION_MAX_DEGREE = 64


class SatisfiableSystemError(ValueError):
    """The target value is reachable, so the system is satisfiable."""


class GuardError(ValueError):
    """A field-size or characteristic precondition failed."""


def _raw(spec: FieldSpec, c) -> Raw:
    c = c.value if isinstance(c, FieldElement) else c
    return int(c) % spec.p if spec.is_prime else Fraction(c)


# ---------------------------------------------------------------------------
# axiom systems and certificates
# ---------------------------------------------------------------------------

class AxiomSystem:
    """Axioms f_1..f_m over x_1..x_n, optionally extended by x_i^2 - x_i."""

    __slots__ = ("spec", "nvars", "axioms", "include_boolean")

    def __init__(self, spec: FieldSpec, nvars: int, axioms: Sequence[SparsePoly],
                 include_boolean: bool = True):
        self.spec = spec
        self.nvars = nvars
        for f in axioms:
            if f.spec != spec:
                raise ValueError("axiom field spec mismatch")
            if any(any(e[i] for i in range(nvars, f.nvars)) for e in f.terms):
                raise ValueError("axiom uses variables outside x_1..x_n")
        self.axioms = list(axioms)
        self.include_boolean = include_boolean

    @property
    def num_axioms(self) -> int:
        return len(self.axioms)

    def layout(self) -> VarLayout:
        return VarLayout(self.nvars, len(self.axioms), self.nvars if self.include_boolean else 0)

    def lifted_axioms(self) -> list[SparsePoly]:
        """Axioms embedded in the certificate's ambient ring."""
        total = self.layout().total
        out = []
        for f in self.axioms:
            out.append(SparsePoly(self.spec, total,
                                  {e[:self.nvars] + (0,) * (total - self.nvars): c
                                   for e, c in f.terms.items()}))
        return out

    def boolean_axioms(self) -> list[SparsePoly]:
        total = self.layout().total
        out = []
        for i in range(self.nvars if self.include_boolean else 0):
            e2 = [0] * total
            e1 = [0] * total
            e2[i] = 2
            e1[i] = 1
            out.append(SparsePoly(self.spec, total,
                                  {tuple(e2): self.spec.one(), tuple(e1): self.spec.rneg(self.spec.one())}))
        return out


def expand_proof(proof, budget: int = DEFAULT_EXPAND_BUDGET) -> SparsePoly:
    if isinstance(proof, SparsePoly):
        return proof
    if isinstance(proof, CircuitDag):
        return proof.expand(budget)[0]
    return proof.expand(budget)


def eval_proof(proof, point) -> Raw:
    if isinstance(proof, SparsePoly):
        return proof.evaluate(point).value
    out = proof.eval(point)
    if isinstance(out, list):
        return out[0].value
    return out.value


def proof_degree_bound(proof, var_degrees: dict) -> int:
    """Syntactic upper bound on deg of the proof composed with substitutions
    of the given degrees."""
    if isinstance(proof, SparsePoly):
        return max((sum(x * var_degrees.get(i, 1) for i, x in enumerate(e))
                    for e in proof.terms), default=0)
    if isinstance(proof, CircuitDag):
        return proof.degree_bound(var_degrees)
    if isinstance(proof, Roabp):
        total = 0
        for mat, var in zip(proof.layers, proof.order):
            d = 0
            for row in mat:
                for ent in row:
                    if ent:
                        d = max(d, len(ent) - 1)
            total += d * var_degrees.get(var, 1)
        return total
    if isinstance(proof, PoweringFormula):
        best = 0
        for _, _, lin, d in proof.terms:
            vdeg = max((var_degrees.get(i, 1) for i, c in enumerate(lin) if c), default=0)
            best = max(best, d * vdeg)
        return best
    if isinstance(proof, MultilinearFormula):
        def walk(node: MlfNode) -> int:
            if node.kind == "var":
                return var_degrees.get(node.var, 1)
            if node.kind == "const":
                return 0
            if node.kind == "add":
                return max((walk(ch) for ch in node.children), default=0)
            return sum(walk(ch) for ch in node.children)
        return walk(proof.root)
    raise TypeError(f"unsupported proof type {type(proof)!r}")


def proof_size(proof) -> dict:
    """Size statistics appropriate to the proof's representation."""
    if isinstance(proof, SparsePoly):
        return {"kind": "sparse", "terms": proof.sparsity()}
    if isinstance(proof, CircuitDag):
        return {"kind": "dag", "wires": proof.wires(), "nodes": len(proof.nodes)}
    if isinstance(proof, Roabp):
        return {"kind": "roabp", "width": proof.width,
                "size_product": proof.size_product(), "nonzero_entries": proof.nnz()}
    if isinstance(proof, PoweringFormula):
        return {"kind": "powering", "size": proof.size(), "degree": proof.degree()}
    if isinstance(proof, MultilinearFormula):
        return {"kind": "mlformula", "wires": proof.wires(),
                "product_depth": proof.product_depth()}
    return {"kind": "unknown"}


@dataclass
class IpsCertificate:
    system: AxiomSystem
    proof: object
    linearity: str = "general"  # general | lin_yz | lin_y
    meta: dict = field(default_factory=dict)

    def layout(self) -> VarLayout:
        return self.system.layout()


@dataclass
class VerifyResult:
    status: str  # valid | fails-zero-condition | fails-one-condition
    residual: SparsePoly | None = None

    @property
    def ok(self) -> bool:
        return self.status == "valid"


@dataclass
class PitResult:
    status: str  # probably-valid | invalid
    trials: int
    per_trial_error_bound: float
    condition: str | None = None
    witness: list | None = None

    @property
    def ok(self) -> bool:
        return self.status == "probably-valid"


def verify_exact(cert: IpsCertificate, budget: int = DEFAULT_EXPAND_BUDGET) -> VerifyResult:
    """Substitute placeholders and compare with 0 and 1 exactly."""
    sys_ = cert.system
    layout = cert.layout()
    total = layout.total
    sp = sys_.spec
    proof_poly = expand_proof(cert.proof, budget)
    if proof_poly.nvars != total:
        raise ValueError("proof ambient ring does not match the system layout")
    placeholders = list(range(sys_.nvars, total))
    zero_sub = proof_poly.substitute({i: sp.zero() for i in placeholders})
    if not zero_sub.is_zero():
        return VerifyResult("fails-zero-condition", zero_sub)
    subs: dict = {}
    for j, f in enumerate(sys_.lifted_axioms()):
        subs[layout.index("y", j + 1)] = f
    for i, bpoly in enumerate(sys_.boolean_axioms()):
        subs[layout.index("z", i + 1)] = bpoly
    one_sub = proof_poly.substitute(subs)
    if one_sub != SparsePoly.const(sp, total, 1):
        return VerifyResult("fails-one-condition", one_sub)
    return VerifyResult("valid")


def verify_pit(cert: IpsCertificate, trials: int, seed: int = 0) -> PitResult:
    """Schwartz-Zippel spot checks of both defining identities at random
    points; any nonzero residual is a concrete invalidity witness."""
    sys_ = cert.system
    layout = cert.layout()
    sp = sys_.spec
    var_degrees = {i: 1 for i in range(layout.total)}
    for j, f in enumerate(sys_.axioms):
        var_degrees[layout.index("y", j + 1)] = max(f.degree(), 0)
    for i in range(layout.nz):
        var_degrees[layout.index("z", i + 1)] = 2
    dbound = max(proof_degree_bound(cert.proof, var_degrees), 1)
    if sp.is_prime:
        if sp.p <= dbound:
            raise GuardError(f"field of size {sp.p} too small for degree bound {dbound}")
        sample_size = sp.p
        def draw(rng):
            return rng.randrange(sp.p)
    else:
        sample_size = 2 * dbound + 1
        def draw(rng):
            return Fraction(rng.randrange(sample_size))
    bound = min(1.0, dbound / sample_size)
    rng = random.Random(seed)
    lifted = sys_.lifted_axioms()
    for _ in range(trials):
        x = [draw(rng) for _ in range(sys_.nvars)]
        full_zero = list(x) + [sp.zero()] * (layout.ny + layout.nz)
        if eval_proof(cert.proof, full_zero):
            return PitResult("invalid", trials, bound, "fails-zero-condition", x)
        point = list(x)
        pad = [sp.zero()] * (layout.total - sys_.nvars)
        for j, f in enumerate(lifted):
            pad[layout.index("y", j + 1) - sys_.nvars] = f.evaluate(point + [sp.zero()] * (layout.total - sys_.nvars)).value
        for i in range(layout.nz):
            xi = x[i]
            pad[layout.index("z", i + 1) - sys_.nvars] = sp.rsub(sp.rmul(xi, xi), xi)
        val = eval_proof(cert.proof, point + pad)
        if val != sp.one():
            return PitResult("invalid", trials, bound, "fails-one-condition", x)
    return PitResult("probably-valid", trials, bound if trials else 1.0)


def linearity_of(cert: IpsCertificate, budget: int = DEFAULT_EXPAND_BUDGET) -> str:
    """Strongest linearity tag of the expanded proof.

    lin_yz: a placeholder-linear form sum_j g_j(x) y_j + sum_i h_i(x) z_i;
    lin_y: linear form in the y's with y-free coefficients.
    """
    layout = cert.layout()
    n = cert.system.nvars
    f = expand_proof(cert.proof, budget)
    yz = list(range(n, layout.total))
    ys = [layout.index("y", j + 1) for j in range(layout.ny)]
    if all(sum(e[i] for i in yz) == 1 for e in f.terms):
        return "lin_yz"
    if all(sum(e[i] for i in ys) <= 1 for e in f.terms):
        return "lin_y"
    return "general"


# ---------------------------------------------------------------------------
# IPS -> linear-IPS
# ---------------------------------------------------------------------------

def _proof_to_dag(proof, budget: int) -> CircuitDag:
    if isinstance(proof, CircuitDag):
        return proof
    return dag_from_poly(expand_proof(proof, budget))


def _dag_splice(builder: DagBuilder, dag: CircuitDag) -> int:
    offset = len(builder.nodes)
    for node in dag.nodes:
        if node[0] == "add":
            builder.nodes.append(("add", tuple((w, ch + offset) for w, ch in node[1])))
        elif node[0] == "mul":
            builder.nodes.append(("mul", node[1] + offset, node[2] + offset))
        else:
            builder.nodes.append(node)
    return offset + dag.output


def _dag_substitute_inputs(dag: CircuitDag, mapping: dict[int, CircuitDag]) -> CircuitDag:
    b = DagBuilder(dag.spec, dag.nvars)
    sub_nodes = {var: _dag_splice(b, sub) for var, sub in mapping.items()}
    remap: list[int] = []
    for node in dag.nodes:
        if node[0] == "input" and node[1] in sub_nodes:
            remap.append(sub_nodes[node[1]])
        elif node[0] == "add":
            remap.append(b.add([(w, remap[ch]) for w, ch in node[1]]))
        elif node[0] == "mul":
            remap.append(b.mul(remap[node[1]], remap[node[2]]))
        elif node[0] == "input":
            remap.append(b.inp(node[1]))
        else:
            remap.append(b.const(node[1]))
    return b.build([remap[o] for o in dag.outputs])


def ips_to_linear(cert: IpsCertificate, budget: int = DEFAULT_EXPAND_BUDGET) -> IpsCertificate:
    """Transform a valid IPS refutation into a placeholder-linear one.

    C' = sum_k C_k(x, F(x)) p_k where C_k p_k = C(x,0..0,p_k,p_{>k}) -
    C(x,0..0,0,p_{>k}); the division by p_k uses the interpolation route for
    small degree bounds and the gate-splitting route otherwise.
    """
    check = verify_exact(cert, budget)
    if not check.ok:
        raise ValueError(f"input certificate invalid: {check.status}")
    sys_ = cert.system
    sp = sys_.spec
    layout = cert.layout()
    total = layout.total
    dag = _proof_to_dag(cert.proof, budget)
    placeholders = list(range(sys_.nvars, total))
    axiom_dags = {layout.index("y", j + 1): dag_from_poly(f)
                  for j, f in enumerate(sys_.lifted_axioms())}
    for i, bpoly in enumerate(sys_.boolean_axioms()):
        axiom_dags[layout.index("z", i + 1)] = dag_from_poly(bpoly)

    top = DagBuilder(sp, total)
    summands = []
    prefixed = dag
    for k, pk in enumerate(placeholders):
        with_pk = prefixed
        without_pk = prefixed.substitute_const(pk, sp.zero())
        b = DagBuilder(sp, total)
        o1 = _dag_splice(b, with_pk)
        o2 = _dag_splice(b, without_pk)
        diff = b.add([(sp.one(), o1), (sp.rneg(sp.one()), o2)])
        diff_dag = b.build([diff])
        var_degrees = {i: 1 for i in range(total)}
        dbound = diff_dag.degree_bound(var_degrees)
        if dbound <= FORMULA_DIVISION_MAX_DEGREE and (not sp.is_prime or sp.p >= dbound + 1):
            ck = divide_by_var_formula(diff_dag, pk, 1, dbound, check_divisible=False)
        else:
            whole = divide_by_var_circuit(diff_dag, pk, 1)
            ck = CircuitDag(whole.spec, whole.nvars, whole.nodes, [whole.outputs[1]])
        ck_sub = _dag_substitute_inputs(ck, axiom_dags)
        out = _dag_splice(top, ck_sub)
        summands.append((sp.one(), top.mul(out, top.inp(pk))))
        prefixed = prefixed.substitute_const(pk, sp.zero())
    top.add(summands)
    out_dag = top.build()
    return IpsCertificate(sys_, out_dag, "lin_yz", {"wires": out_dag.wires()})


# ---------------------------------------------------------------------------
# subset-sum refutations
# ---------------------------------------------------------------------------

def reachable_sums(spec: FieldSpec, alpha: Sequence) -> set:
    """All subset sums of alpha, via A_{j+1} = A_j union (A_j + alpha_{j+1})."""
    acc = {spec.zero()}
    for a in alpha:
        a = _raw(spec, a)
        acc = acc | {spec.radd(s, a) for s in acc}
    return acc


def subset_sum_axiom(spec: FieldSpec, alpha: Sequence, beta) -> SparsePoly:
    n = len(alpha)
    terms = {}
    for i, a in enumerate(alpha):
        a = _raw(spec, a)
        if a:
            e = [0] * n
            e[i] = 1
            terms[tuple(e)] = a
    b = _raw(spec, beta)
    if b:
        terms[(0,) * n] = spec.rneg(b)
    return SparsePoly(spec, n, terms)


def subset_sum_witness(spec: FieldSpec, alpha: Sequence, beta):
    """The quotient g = (p(sum a_i x_i) - p(beta)) / (sum a_i x_i - beta) for
    p = prod_{a in A}(t - a), as a powering formula, together with the scalar
    -p(beta) and the multilinear witness ml(g / -p(beta))."""
    sp = spec
    alpha = [_raw(sp, a) for a in alpha]
    beta = _raw(sp, beta)
    n = len(alpha)
    A = reachable_sums(sp, alpha)
    if beta in A:
        raise SatisfiableSystemError("beta is a reachable subset sum; system is satisfiable")
    # p(t) = prod_{a in A} (t - a), coefficients low-to-high
    gamma = [sp.one()]
    for a in sorted(A):
        new = [sp.zero()] * (len(gamma) + 1)
        for i, c in enumerate(gamma):
            new[i + 1] = sp.radd(new[i + 1], c)
            new[i] = sp.rsub(new[i], sp.rmul(c, a))
        gamma = new
    dA = len(A)
    p_beta = sp.zero()
    bk = sp.one()
    for c in gamma:
        p_beta = sp.radd(p_beta, sp.rmul(c, bk))
        bk = sp.rmul(bk, beta)
    scale = sp.rneg(p_beta)
    # c_j = sum_{k > j} gamma_k beta^(k-1-j)
    terms = []
    for j in range(dA):
        cj = sp.zero()
        bpow = sp.one()
        for k in range(j + 1, dA + 1):
            cj = sp.radd(cj, sp.rmul(gamma[k], bpow))
            bpow = sp.rmul(bpow, beta)
        if cj:
            terms.append((cj, sp.zero(), tuple(alpha), j))
    g = PoweringFormula(sp, n, terms)
    f_ml = g.expand().scale(sp.rinv(scale)).multilinearize()
    check = (f_ml * subset_sum_axiom(sp, alpha, beta)).multilinearize()
    assert check == SparsePoly.const(sp, n, 1), "witness identity failed"
    return g, FieldElement(sp, scale), f_ml


# ---------------------------------------------------------------------------
# roABP multilinearization and the roABP-IPS_LIN refutation
# ---------------------------------------------------------------------------

def _entry_ml(sp: FieldSpec, ent) -> tuple:
    if len(ent) <= 1:
        return _e_trim(ent)
    tail = sp.zero()
    for c in ent[1:]:
        tail = sp.radd(tail, c)
    return _e_trim((ent[0], tail))


def _entry_divide_boolean(sp: FieldSpec, ent) -> tuple:
    """Exact division of a univariate by x^2 - x (entry must be divisible)."""
    rem = list(ent)
    q = [sp.zero()] * max(len(rem) - 2, 0)
    for k in range(len(rem) - 1, 1, -1):
        c = rem[k]
        if c:
            q[k - 2] = sp.radd(q[k - 2], c)
            rem[k] = sp.zero()
            rem[k - 1] = sp.radd(rem[k - 1], c)
    if any(rem[:2] if len(rem) >= 2 else rem):
        raise ValueError("entry not divisible by x^2 - x")
    return _e_trim(q)


def multilinearize_roabp(a: Roabp):
    """(ml roABP, per-position remainder roABPs h) with
    expand(a) = expand(ml) + sum_j expand(h_j) * (x_j^2 - x_j),
    h_j indexed by position j of a's variable order; all widths = width(a)."""
    sp = a.spec
    ml_layers = []
    b_layers = []
    for mat in a.layers:
        ml_mat = [[_entry_ml(sp, e) for e in row] for row in mat]
        b_mat = []
        for row_a, row_m in zip(mat, ml_mat):
            b_row = []
            for ea, em in zip(row_a, row_m):
                diff = _e_add(sp, ea, _e_scale(sp, em, sp.rneg(sp.one())))
                b_row.append(_entry_divide_boolean(sp, diff))
            b_mat.append(b_row)
        ml_layers.append(ml_mat)
        b_layers.append(b_mat)
    ml_a = Roabp(sp, a.nvars, a.order, a.width, ml_layers)
    hs = []
    for j in range(len(a.order)):
        layers = []
        for i in range(len(a.order)):
            if i < j:
                layers.append(ml_layers[i])
            elif i == j:
                layers.append(b_layers[i])
            else:
                layers.append(a.layers[i])
        hs.append(Roabp(sp, a.nvars, a.order, a.width, layers))
    return ml_a, hs


def boolean_remainder_roabp(p: Roabp, z_of: dict[int, int], ambient: int) -> Roabp:
    """Width-3r roABP computing sum_j h_j * z_{(j)} over the interleaved
    order x_1 < z_1 < ... < x_n < z_n, where the h_j are the telescoping
    remainders of multilinearizing p.

    Three blocks: multilinearized prefix / switched awaiting its z / tail.
    """
    sp = p.spec
    r = p.width
    w = 3 * r
    L = len(p.order)
    if L == 0:
        raise ValueError("empty roABP")
    new_order: list[int] = []
    layers = []
    for pos, (mat, var) in enumerate(zip(p.layers, p.order)):
        ml_mat = [[_entry_ml(sp, e) for e in row] for row in mat]
        b_mat = [[_entry_divide_boolean(
            sp, _e_add(sp, ea, _e_scale(sp, em, sp.rneg(sp.one()))))
            for ea, em in zip(ra, rm)] for ra, rm in zip(mat, ml_mat)]
        xmat = [[() for _ in range(w)] for _ in range(w)]
        for i in range(r):
            for j in range(r):
                xmat[i][j] = ml_mat[i][j]          # top -> top: ml prefix
                xmat[i][r + j] = b_mat[i][j]       # top -> mid: switch via B
                xmat[2 * r + i][2 * r + j] = mat[i][j]  # bottom -> bottom: tail
        zmat = [[() for _ in range(w)] for _ in range(w)]
        zvar = z_of[var]
        one = (sp.one(),)
        zent = (sp.zero(), sp.one())
        if pos < L - 1:
            for i in range(r):
                zmat[i][i] = one                       # top unchanged
                zmat[r + i][2 * r + i] = zent          # mid -> bottom, times z
                zmat[2 * r + i][2 * r + i] = one       # bottom unchanged
        else:
            zmat[r][0] = zent      # mid[0] -> output, times z
            zmat[2 * r][0] = one   # bottom[0] -> output
        new_order.extend((var, zvar))
        layers.append(xmat)
        layers.append(zmat)
    return Roabp(sp, ambient, new_order, w, layers)


def roabp_embed(r: Roabp, ambient: int, full_order: Sequence[int],
                multipliers: Sequence[int] = ()) -> Roabp:
    """Lift an roABP to a longer variable order; inserted layers are the
    identity, or v * I for variables listed in `multipliers`."""
    sp = r.spec
    mult = set(multipliers)
    own = set(r.order)
    layers = []
    it = iter(zip(r.layers, r.order))
    pending = next(it, None)
    one = (sp.one(),)
    zent = (sp.zero(), sp.one())
    for var in full_order:
        if var in own:
            mat, v = pending
            if v != var:
                raise ValueError("full order is not consistent with the roABP order")
            layers.append(mat)
            pending = next(it, None)
        else:
            diag = zent if var in mult else one
            layers.append([[diag if i == j else () for j in range(r.width)]
                           for i in range(r.width)])
    if pending is not None:
        raise ValueError("full order does not contain the roABP order")
    return Roabp(sp, ambient, full_order, r.width, layers)


def build_roabp_refutation(spec: FieldSpec, alpha: Sequence, beta,
                           order: Sequence[int] | None = None) -> IpsCertificate:
    """roABP-IPS_LIN refutation of sum a_i x_i - beta, x^2 - x of individual
    degree <= 2, in any requested order on the x's."""
    sp = spec
    n = len(alpha)
    order = tuple(order) if order is not None else tuple(range(n))
    if sorted(order) != list(range(n)):
        raise ValueError("order must be a permutation of the x variables")
    g, scale, f_ml = subset_sum_witness(sp, alpha, beta)
    g1 = g.scale(sp.rinv(scale.value))
    G = powering_to_roabp(g1, order)
    Gml, _ = multilinearize_roabp(G)
    axiom_pf = PoweringFormula(sp, n, [(sp.one(), sp.rneg(_raw(sp, beta)),
                                        tuple(_raw(sp, a) for a in alpha), 1)])
    F = powering_to_roabp(axiom_pf, order)
    P = Gml.mul(F)

    axiom = subset_sum_axiom(sp, alpha, beta)
    system = AxiomSystem(sp, n, [axiom], include_boolean=True)
    layout = system.layout()
    total = layout.total
    yvar = layout.index("y", 1)
    z_of = {i: layout.index("z", i + 1) for i in range(n)}

    # lift the x-parts into the certificate's ambient ring
    Gml_l = Roabp(sp, total, Gml.order, Gml.width, Gml.layers)
    P_l = Roabp(sp, total, P.order, P.width, P.layers)
    full_order = []
    for v in order:
        full_order.extend((v, z_of[v]))
    full_order.append(yvar)
    branch_y = roabp_embed(Gml_l, total, tuple(full_order), multipliers=(yvar,))
    remainder = boolean_remainder_roabp(P_l, z_of, total)
    branch_z = roabp_embed(remainder, total, tuple(full_order)).scale(sp.rneg(sp.one()))
    proof = branch_y.add(branch_z)
    return IpsCertificate(system, proof, "lin_yz", {
        "width": proof.width,
        "witness_width": G.width,
        "order": list(order),
        "reachable": len(reachable_sums(sp, alpha)),
    })


# ---------------------------------------------------------------------------
# depth-3 multilinear-formula refutation
# ---------------------------------------------------------------------------

def _linear_univariate_node(sp: FieldSpec, c0, c1, var: int) -> MlfNode:
    if not c1:
        return mlf_const(c0)
    if not c0 and c1 == sp.one():
        return mlf_var(var)
    return mlf_add([mlf_const(sp.one()), mlf_var(var)], [c0, c1])


def build_mlformula_refutation(spec: FieldSpec, alpha: Sequence, beta) -> IpsCertificate:
    """Depth-3 multilinear-formula IPS_LIN refutation of the subset-sum axiom.

    The witness is expressed by duality as a sum of products of linear
    univariates; multiplying by the axiom uses p(x)*x = p(1)x +
    (p(1)-p(0))(x^2-x) per factor to split off the boolean remainders.
    """
    sp = spec
    alpha = [_raw(sp, a) for a in alpha]
    beta = _raw(sp, beta)
    n = len(alpha)
    A = reachable_sums(sp, alpha)
    if beta in A:
        raise SatisfiableSystemError("beta is a reachable subset sum; system is satisfiable")
    dA = len(A)
    if sp.is_prime and sp.p < (n * dA + 1) * (dA + 1):
        raise GuardError(f"field of size {sp.p} below the duality requirement "
                         f"{(n * dA + 1) * (dA + 1)}")
    g, scale, f_ml = subset_sum_witness(sp, alpha, beta)
    s_inv = sp.rinv(scale.value)
    # tuples of linear univariates for ml(g / -p(beta)): decompose each power,
    # substitute x_k <- alpha_k x_k, multilinearize factor-wise
    tuples: list[list[tuple]] = []  # per tuple: list of (c0, c1) per position
    for coeff, _c0, _lin, j in g.terms:
        w = sp.rmul(coeff, s_inv)
        for tup in duality_decompose(n, j, sp):
            lin_tup = []
            for k, f in enumerate(tup):
                c0 = sp.zero()
                c1 = sp.zero()
                for e, c in f.terms.items():
                    deg = e[k]
                    c = sp.rmul(c, sp.rpow(alpha[k], deg))
                    if deg == 0:
                        c0 = sp.radd(c0, c)
                    else:
                        c1 = sp.radd(c1, c)  # ml(x^k) = x for k >= 1
                lin_tup.append((c0, c1))
            c0, c1 = lin_tup[0]
            lin_tup[0] = (sp.rmul(c0, w), sp.rmul(c1, w))
            tuples.append(lin_tup)

    system = AxiomSystem(sp, n, [subset_sum_axiom(sp, alpha, beta)], include_boolean=True)
    layout = system.layout()
    total = layout.total
    yvar = layout.index("y", 1)

    children = []
    weights = []
    for tup in tuples:
        children.append(mlf_mul([_linear_univariate_node(sp, c0, c1, k)
                                 for k, (c0, c1) in enumerate(tup)] + [mlf_var(yvar)]))
        weights.append(sp.one())
        for j in range(n):
            if not alpha[j]:
                continue
            c0, c1 = tup[j]
            delta = c1  # f(1) - f(0)
            w = sp.rmul(alpha[j], delta)
            if not w:
                continue
            factors = [_linear_univariate_node(sp, c0k, c1k, k)
                       for k, (c0k, c1k) in enumerate(tup) if k != j]
            factors.append(mlf_var(layout.index("z", j + 1)))
            children.append(mlf_mul(factors))
            weights.append(sp.rneg(w))
    root = mlf_add(children, weights)
    proof = MultilinearFormula(sp, total, root)
    return IpsCertificate(system, proof, "lin_yz", {
        "tuples": len(tuples),
        "product_depth": proof.product_depth(),
        "reachable": dA,
    })


# ---------------------------------------------------------------------------
# multilinearization witnesses for sparse / multilinear-formula proofs
# ---------------------------------------------------------------------------

def monomial_square_witness(spec: FieldSpec, d: int):
    """C(x,z) with (x_1...x_d)^2 - x_1...x_d = C(x, x^2-x) and C(x,0) = 0.

    Returns the 2^d-term sparse sum form and the two-product formula form
    prod(z_i + x_i) - prod(x_i).
    """
    sp = spec
    total = 2 * d
    terms = {}
    for mask in range(1, 1 << d):
        e = [0] * total
        for i in range(d):
            if (mask >> i) & 1:
                e[d + i] = 1  # z_i
            else:
                e[i] = 1      # x_i
        terms[tuple(e)] = sp.one()
    sum_form = SparsePoly(sp, total, terms)
    prod1 = mlf_mul([mlf_add([mlf_var(d + i), mlf_var(i)]) for i in range(d)]) \
        if d else mlf_const(sp.one())
    prod2 = mlf_mul([mlf_var(i) for i in range(d)]) if d else mlf_const(sp.one())
    formula = MultilinearFormula(sp, total, mlf_add([prod1, prod2],
                                                    [sp.one(), sp.rneg(sp.one())]))
    return sum_form, formula


def sparse_times_formula_witness(g: SparsePoly, f: SparsePoly,
                                 budget: int = DEFAULT_EXPAND_BUDGET) -> SparsePoly:
    """C(x,z) with g*f - ml(g*f) = C(x, x^2-x) and C(x,0) = 0, for
    multilinear g and f.  Ambient ring doubles: x_1..x_n, z_1..z_n."""
    if g.spec != f.spec or g.nvars != f.nvars:
        raise ValueError("operand ring mismatch")
    if not (g.is_multilinear() and f.is_multilinear()):
        raise ValueError("operands must be multilinear")
    sp = g.spec
    n = g.nvars
    total = 2 * n
    out: dict = {}
    cost = 0
    for eu, cu in g.terms.items():
        for ev, cv in f.terms.items():
            shared = [i for i in range(n) if eu[i] and ev[i]]
            cost += 1 << len(shared)
            if cost > budget:
                raise BudgetExceededError("witness term budget exceeded")
            c = sp.rmul(cu, cv)
            if not c:
                continue
            base = [0] * total
            for i in range(n):
                if (eu[i] or ev[i]) and i not in shared:
                    base[i] = 1
            for mask in range(1, 1 << len(shared)):
                e = list(base)
                for t, i in enumerate(shared):
                    if (mask >> t) & 1:
                        e[n + i] = 1
                    else:
                        e[i] = 1
                key = tuple(e)
                s = sp.radd(out.get(key, sp.zero()), c) if key in out else c
                if s:
                    out[key] = s
                else:
                    out.pop(key, None)
    return SparsePoly(sp, total, out)


def simulate_sparse_linips(system: AxiomSystem, witnesses: Sequence[SparsePoly],
                           budget: int = DEFAULT_EXPAND_BUDGET) -> IpsCertificate:
    """Depth-2 multilinear-formula IPS_LIN' certificate from sparse witnesses
    g_j with sum_j ml(g_j) f_j = 1 mod x^2-x."""
    sp = system.spec
    n = system.nvars
    if len(witnesses) != system.num_axioms:
        raise ValueError("one witness per non-boolean axiom required")
    if not system.include_boolean:
        raise ValueError("the simulation targets systems with boolean axioms")
    mls = [g.multilinearize() for g in witnesses]
    acc = SparsePoly.zero(sp, n)
    for gml, f in zip(mls, system.axioms):
        if f.nvars != n:
            f = SparsePoly(sp, n, {e[:n]: c for e, c in f.terms.items()})
        acc = acc + gml * f
    if acc.multilinearize() != SparsePoly.const(sp, n, 1):
        raise ValueError("witness identity sum ml(g_j) f_j != 1 mod booleans fails")
    layout = system.layout()
    total = layout.total
    children = []
    weights = []
    for j, gml in enumerate(mls):
        yv = layout.index("y", j + 1)
        for e, c in gml.sorted_terms():
            factors = [mlf_var(i) for i in range(n) if e[i]]
            children.append(mlf_mul(factors + [mlf_var(yv)]) if factors else mlf_var(yv))
            weights.append(c)
        fx = system.axioms[j]
        if fx.nvars != n:
            fx = SparsePoly(sp, n, {e[:n]: c for e, c in fx.terms.items()})
        cj = sparse_times_formula_witness(gml, fx, budget)
        for e, c in cj.sorted_terms():
            factors = [mlf_var(i) for i in range(n) if e[i]]
            factors += [mlf_var(layout.index("z", i + 1)) for i in range(n) if e[n + i]]
            children.append(mlf_mul(factors) if factors else mlf_const(sp.one()))
            weights.append(sp.rneg(c))
    proof = MultilinearFormula(sp, total, mlf_add(children, weights))
    return IpsCertificate(system, proof, "lin_y", {"terms": len(children)})


# ---------------------------------------------------------------------------
# the explicit multilinear inverse of the subset-sum axiom
# ---------------------------------------------------------------------------

def appendix_inverse_poly(spec: FieldSpec, n: int, beta) -> SparsePoly:
    """The unique multilinear f with f = 1/(sum x_i - beta) on {0,1}^n:
    f = -sum_k k!/prod_{j=0..k}(beta - j) * S_{n,k}."""
    sp = spec
    if not characteristic_guard(sp, n):
        raise GuardError(f"characteristic must be 0 or > {n}")
    beta = _raw(sp, beta)
    for j in range(n + 1):
        if beta == sp.from_int(j):
            raise GuardError("beta must avoid {0,...,n}")
    out = SparsePoly.zero(sp, n)
    denom = sp.rsub(beta, sp.zero())
    for k in range(n + 1):
        if k:
            denom = sp.rmul(denom, sp.rsub(beta, sp.from_int(k)))
        coeff = sp.rneg(sp.rdiv(sp.from_int(factorial(k)), denom))
        out = out + elementary_symmetric(n, k, sp).scale(coeff)
    return out
