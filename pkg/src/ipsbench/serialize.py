"""Text formats: the prefix circuit grammar, roABP serialization, and the
line-oriented certificate file format.

Circuit grammar (whitespace-separated s-expressions):

    expr          := '(+' weighted-expr+ ')' | '(*' expr expr+ ')'
                     | '(pow' expr uint ')' | var | field-element
    weighted-expr := expr | '(scale' field-element expr ')'

Variables are x<k>, y<k>, z<k> per the ambient layout.  Emission always
produces binary '(* e e)' products; parsing accepts wider products.

roABP serialization:

    roabp order=<var,var,...> width=<r>
    layer <var>
    <row>   (entries are univariate polynomial text, separated by ' | ')

Certificate files:

    FIELD prime <p> | FIELD rational
    NVARS <n>
    AXIOM <poly text>      (one per line; y_j binds in order)
    BOOLEAN on|off
    LINEARITY general|lin_yz|lin_y
    PROOF <expr>           (or the roABP block, starting 'roabp ...')
"""

from __future__ import annotations

import re

from .circuits import (
    CircuitDag,
    DagBuilder,
    MlfNode,
    MultilinearFormula,
    Roabp,
    mlf_add,
    mlf_const,
    mlf_mul,
    mlf_var,
)
from .fields import FieldSpec
from .ips import AxiomSystem, IpsCertificate
from .poly import SparsePoly, VarLayout, parse_poly

EMIT_NODE_LIMIT = 200_000

_VAR_RE = re.compile(r"^([xyz])([0-9]+)$")


class CircuitParseError(ValueError):
    pass


def _tokenize(text: str) -> list[str]:
    return text.replace("(", " ( ").replace(")", " ) ").split()


def _read_sexpr(tokens: list[str], pos: int):
    if pos >= len(tokens):
        raise CircuitParseError("unexpected end of input")
    tok = tokens[pos]
    if tok == ")":
        raise CircuitParseError("unexpected ')'")
    if tok != "(":
        return tok, pos + 1
    out = []
    pos += 1
    while pos < len(tokens) and tokens[pos] != ")":
        node, pos = _read_sexpr(tokens, pos)
        out.append(node)
    if pos >= len(tokens):
        raise CircuitParseError("missing ')'")
    return out, pos + 1


def parse_circuit(text: str, spec: FieldSpec, layout: VarLayout) -> CircuitDag:
    tokens = _tokenize(text)
    tree, pos = _read_sexpr(tokens, 0)
    if pos != len(tokens):
        raise CircuitParseError("trailing input after circuit expression")
    b = DagBuilder(spec, layout.total)

    def build(node) -> int:
        if isinstance(node, str):
            m = _VAR_RE.match(node)
            if m:
                try:
                    return b.inp(layout.index(m.group(1), int(m.group(2))))
                except ValueError as exc:
                    raise CircuitParseError(str(exc)) from exc
            try:
                return b.const(spec.parse_raw(node))
            except (ValueError, ZeroDivisionError) as exc:
                raise CircuitParseError(f"bad atom {node!r}") from exc
        if not node:
            raise CircuitParseError("empty expression")
        head = node[0]
        if head == "+":
            children = []
            for sub in node[1:]:
                if isinstance(sub, list) and sub and sub[0] == "scale":
                    if len(sub) != 3:
                        raise CircuitParseError("scale takes a constant and an expression")
                    children.append((spec.parse_raw(sub[1]), build(sub[2])))
                else:
                    children.append((spec.one(), build(sub)))
            if not children:
                raise CircuitParseError("empty sum")
            return b.add(children)
        if head == "*":
            if len(node) < 3:
                raise CircuitParseError("product needs at least two factors")
            out = build(node[1])
            for sub in node[2:]:
                out = b.mul(out, build(sub))
            return out
        if head == "pow":
            if len(node) != 3 or not isinstance(node[2], str) or not node[2].isdigit():
                raise CircuitParseError("pow takes an expression and an unsigned exponent")
            return b.pow(build(node[1]), int(node[2]))
        raise CircuitParseError(f"unknown operator {head!r}")

    return b.build([build(tree)])


def parse_formula(text: str, spec: FieldSpec, layout: VarLayout) -> MultilinearFormula:
    """Parse the same grammar into a formula tree (for multilinear proofs)."""
    tokens = _tokenize(text)
    tree, pos = _read_sexpr(tokens, 0)
    if pos != len(tokens):
        raise CircuitParseError("trailing input after circuit expression")

    def build(node) -> MlfNode:
        if isinstance(node, str):
            m = _VAR_RE.match(node)
            if m:
                return mlf_var(layout.index(m.group(1), int(m.group(2))))
            return mlf_const(spec.parse_raw(node))
        head = node[0]
        if head == "+":
            children, weights = [], []
            for sub in node[1:]:
                if isinstance(sub, list) and sub and sub[0] == "scale":
                    weights.append(spec.parse_raw(sub[1]))
                    children.append(build(sub[2]))
                else:
                    weights.append(spec.one())
                    children.append(build(sub))
            return mlf_add(children, weights)
        if head == "*":
            return mlf_mul([build(sub) for sub in node[1:]])
        if head == "pow":
            k = int(node[2])
            if k == 0:
                return mlf_const(spec.one())
            base = build(node[1])
            return base if k == 1 else mlf_mul([build(node[1]) for _ in range(k)])
        raise CircuitParseError(f"unknown operator {head!r}")

    return MultilinearFormula(spec, layout.total, build(tree))


def emit_circuit(c, layout: VarLayout) -> str:
    """Emit a DAG, formula, or sparse polynomial in the prefix grammar."""
    spec = c.spec
    if isinstance(c, SparsePoly):
        return _emit_sparse(c, layout)
    if isinstance(c, MultilinearFormula):
        return _emit_mlf(c.root, spec, layout)
    if isinstance(c, CircuitDag):
        return _emit_dag(c, layout)
    raise TypeError(f"cannot emit {type(c)!r} in the circuit grammar")


def _emit_sparse(f: SparsePoly, layout: VarLayout) -> str:
    if not f.terms:
        return "0"
    parts = []
    for e, c in f.sorted_terms():
        factors = []
        for i, x in enumerate(e):
            name = layout.name(i)
            if x == 1:
                factors.append(name)
            elif x > 1:
                factors.append(f"(pow {name} {x})")
        if not factors:
            parts.append(f.spec.format_raw(c))
        else:
            body = factors[0] if len(factors) == 1 else _nest_mul(factors)
            if c == f.spec.one():
                parts.append(body)
            else:
                parts.append(f"(scale {f.spec.format_raw(c)} {body})")
    if len(parts) == 1:
        return _wrap_scaled(parts[0])
    return "(+ " + " ".join(parts) + ")"


def _wrap_scaled(part: str) -> str:
    """A scaled item is only grammatical inside a sum."""
    return f"(+ {part})" if part.startswith("(scale") else part


def _nest_mul(factors: list[str]) -> str:
    out = factors[-1]
    for f in reversed(factors[:-1]):
        out = f"(* {f} {out})"
    return out


def _emit_mlf(node: MlfNode, spec: FieldSpec, layout: VarLayout) -> str:
    if node.kind == "var":
        return layout.name(node.var)
    if node.kind == "const":
        return spec.format_raw(node.const)
    if node.kind == "add":
        parts = []
        for w, ch in zip(node.weights, node.children):
            body = _emit_mlf(ch, spec, layout)
            w = w if not hasattr(w, "value") else w.value
            if w == spec.one():
                parts.append(body)
            else:
                parts.append(f"(scale {spec.format_raw(w)} {body})")
        if not parts:
            return "0"
        if len(parts) == 1:
            return _wrap_scaled(parts[0])
        return "(+ " + " ".join(parts) + ")"
    return _nest_mul([_emit_mlf(ch, spec, layout) for ch in node.children])


def _emit_dag(c: CircuitDag, layout: VarLayout) -> str:
    if len(c.outputs) != 1:
        raise ValueError("only single-output circuits can be emitted")
    spec = c.spec
    counter = [0]

    def walk(idx: int) -> str:
        counter[0] += 1
        if counter[0] > EMIT_NODE_LIMIT:
            raise ValueError("circuit too entangled for tree emission")
        node = c.nodes[idx]
        if node[0] == "input":
            return layout.name(node[1])
        if node[0] == "const":
            return spec.format_raw(node[1])
        if node[0] == "add":
            parts = []
            for w, ch in node[1]:
                body = walk(ch)
                if w == spec.one():
                    parts.append(body)
                else:
                    parts.append(f"(scale {spec.format_raw(w)} {body})")
            if len(parts) == 1:
                return _wrap_scaled(parts[0])
            return "(+ " + " ".join(parts) + ")"
        return f"(* {walk(node[1])} {walk(node[2])})"

    return walk(c.output)


# ---------------------------------------------------------------------------
# roABP serialization
# ---------------------------------------------------------------------------

def emit_roabp(r: Roabp, layout: VarLayout) -> str:
    spec = r.spec
    lines = [f"roabp order={','.join(layout.name(v) for v in r.order)} width={r.width}"]
    for mat, var in zip(r.layers, r.order):
        name = layout.name(var)
        lines.append(f"layer {name}")
        for row in mat:
            cells = []
            for ent in row:
                if not ent:
                    cells.append("0")
                    continue
                parts = []
                for k, c in enumerate(ent):
                    if not c:
                        continue
                    if k == 0:
                        parts.append(spec.format_raw(c))
                    elif c == spec.one():
                        parts.append(name if k == 1 else f"{name}^{k}")
                    else:
                        parts.append(f"{spec.format_raw(c)}*{name}" + (f"^{k}" if k > 1 else ""))
                cells.append("+".join(parts).replace("+-", "-") or "0")
            lines.append(" | ".join(cells))
    return "\n".join(lines)


def parse_roabp(text: str, spec: FieldSpec, layout: VarLayout) -> Roabp:
    lines = [ln for ln in text.strip().splitlines()]
    header = lines[0].split()
    if not header or header[0] != "roabp":
        raise CircuitParseError("missing roabp header")
    opts = dict(part.split("=", 1) for part in header[1:])
    order = []
    for name in opts["order"].split(","):
        m = _VAR_RE.match(name.strip())
        if not m:
            raise CircuitParseError(f"bad variable {name!r} in order")
        order.append(layout.index(m.group(1), int(m.group(2))))
    width = int(opts["width"])
    layers = []
    i = 1
    for var in order:
        if i >= len(lines) or not lines[i].startswith("layer"):
            raise CircuitParseError("missing layer header")
        i += 1
        mat = []
        for _ in range(width):
            cells = lines[i].split(" | ")
            if len(cells) != width:
                raise CircuitParseError("row width mismatch")
            row = []
            for cell in cells:
                row.append(_parse_entry(cell.strip(), spec, layout, var))
            mat.append(row)
            i += 1
        layers.append(mat)
    return Roabp(spec, layout.total, order, width, layers)


def _parse_entry(text: str, spec: FieldSpec, layout: VarLayout, var: int) -> tuple:
    f = parse_poly(text, spec, layout)
    coeffs: list = []
    for e, c in f.terms.items():
        k = e[var]
        if sum(e) != k:
            raise CircuitParseError(f"entry {text!r} is not univariate in its layer variable")
        while len(coeffs) <= k:
            coeffs.append(spec.zero())
        coeffs[k] = c
    return tuple(coeffs)


# ---------------------------------------------------------------------------
# certificate files
# ---------------------------------------------------------------------------

def emit_certificate(cert: IpsCertificate) -> str:
    sys_ = cert.system
    spec = sys_.spec
    layout = cert.layout()
    xlayout = VarLayout(sys_.nvars, 0, 0)
    lines = []
    lines.append(f"FIELD prime {spec.p}" if spec.is_prime else "FIELD rational")
    lines.append(f"NVARS {sys_.nvars}")
    from .poly import emit_poly
    for f in sys_.axioms:
        fx = SparsePoly(spec, sys_.nvars, {e[:sys_.nvars]: c for e, c in f.terms.items()})
        lines.append("AXIOM " + emit_poly(fx, xlayout))
    lines.append("BOOLEAN " + ("on" if sys_.include_boolean else "off"))
    lines.append("LINEARITY " + cert.linearity)
    if isinstance(cert.proof, Roabp):
        lines.append("PROOF")
        lines.append(emit_roabp(cert.proof, layout))
    else:
        lines.append("PROOF " + emit_circuit(cert.proof, layout))
    return "\n".join(lines) + "\n"


class CertificateParseError(ValueError):
    pass


def parse_certificate(text: str) -> IpsCertificate:
    lines = text.splitlines()
    spec = None
    nvars = None
    axioms_text: list[str] = []
    boolean = True
    linearity = "general"
    proof_lines: list[str] | None = None
    i = 0
    try:
        while i < len(lines):
            line = lines[i].strip()
            i += 1
            if not line:
                continue
            if line.startswith("FIELD"):
                parts = line.split()
                if parts[1] == "prime":
                    spec = FieldSpec.prime(int(parts[2]))
                elif parts[1] == "rational":
                    spec = FieldSpec.rational()
                else:
                    raise CertificateParseError(f"unknown field kind {parts[1]!r}")
            elif line.startswith("NVARS"):
                nvars = int(line.split()[1])
            elif line.startswith("AXIOM"):
                axioms_text.append(line[len("AXIOM"):].strip())
            elif line.startswith("BOOLEAN"):
                boolean = line.split()[1] == "on"
            elif line.startswith("LINEARITY"):
                linearity = line.split()[1]
                if linearity not in ("general", "lin_yz", "lin_y"):
                    raise CertificateParseError(f"unknown linearity {linearity!r}")
            elif line.startswith("PROOF"):
                rest = line[len("PROOF"):].strip()
                proof_lines = [rest] if rest else []
                proof_lines.extend(lines[i:])
                i = len(lines)
            else:
                raise CertificateParseError(f"unrecognized line {line!r}")
    except (IndexError, ValueError) as exc:
        if isinstance(exc, CertificateParseError):
            raise
        raise CertificateParseError(str(exc)) from exc
    if spec is None or nvars is None or proof_lines is None:
        raise CertificateParseError("certificate missing FIELD, NVARS, or PROOF")
    xlayout = VarLayout(nvars, 0, 0)
    axioms = []
    for t in axioms_text:
        try:
            axioms.append(parse_poly(t, spec, xlayout))
        except ValueError as exc:
            raise CertificateParseError(f"bad axiom {t!r}: {exc}") from exc
    system = AxiomSystem(spec, nvars, axioms, include_boolean=boolean)
    layout = system.layout()
    body = "\n".join(proof_lines).strip()
    if not body:
        raise CertificateParseError("empty proof")
    try:
        if body.startswith("roabp"):
            proof = parse_roabp(body, spec, layout)
        else:
            proof = parse_circuit(body, spec, layout)
    except (CircuitParseError, ValueError) as exc:
        raise CertificateParseError(f"bad proof: {exc}") from exc
    return IpsCertificate(system, proof, linearity)
