"""Exact coefficient arithmetic: prime fields F_p and arbitrary-precision rationals.

Coefficients throughout the package are stored in *raw* canonical form
(int residue in [0, p) for F_p, ``fractions.Fraction`` for Q) together with a
shared :class:`FieldSpec`; :class:`FieldElement` wraps a raw value for the
public API.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Union

MAX_PRIME = 1 << 62  # word-size moduli only

Raw = Union[int, Fraction]


class FieldMismatchError(ValueError):
    """Raised when arithmetic mixes elements of different field specs."""


def is_prime(n: int) -> bool:
    """Deterministic Miller-Rabin, valid for all n < 3.3 * 10^24."""
    if n < 2:
        return False
    for p in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        if n % p == 0:
            return n == p
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


class FieldSpec:
    """The coefficient domain: F_p for a word-size prime p, or Q."""

    __slots__ = ("kind", "p")

    def __init__(self, kind: str, p: int | None = None):
        if kind == "prime":
            if p is None or not (2 <= p < MAX_PRIME):
                raise ValueError(f"prime modulus out of range: {p}")
            if not is_prime(p):
                raise ValueError(f"{p} is not prime")
        elif kind != "rational":
            raise ValueError(f"unknown field kind {kind!r}")
        self.kind = kind
        self.p = p

    @staticmethod
    def prime(p: int) -> "FieldSpec":
        return FieldSpec("prime", p)

    @staticmethod
    def rational() -> "FieldSpec":
        return FieldSpec("rational")

    @property
    def is_prime(self) -> bool:
        return self.kind == "prime"

    def characteristic(self) -> int:
        return self.p if self.kind == "prime" else 0

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, FieldSpec)
            and self.kind == other.kind
            and self.p == other.p
        )

    def __hash__(self):
        return hash((self.kind, self.p))

    def __repr__(self):
        return f"F_{self.p}" if self.kind == "prime" else "Q"

    # raw-value helpers used by the hot loops in poly/measure code

    def zero(self) -> Raw:
        return 0 if self.kind == "prime" else Fraction(0)

    def one(self) -> Raw:
        return 1 if self.kind == "prime" else Fraction(1)

    def from_int(self, n: int) -> Raw:
        return n % self.p if self.kind == "prime" else Fraction(n)

    def radd(self, a: Raw, b: Raw) -> Raw:
        return (a + b) % self.p if self.kind == "prime" else a + b

    def rsub(self, a: Raw, b: Raw) -> Raw:
        return (a - b) % self.p if self.kind == "prime" else a - b

    def rmul(self, a: Raw, b: Raw) -> Raw:
        return (a * b) % self.p if self.kind == "prime" else a * b

    def rneg(self, a: Raw) -> Raw:
        return (-a) % self.p if self.kind == "prime" else -a

    def rinv(self, a: Raw) -> Raw:
        if not a:
            raise ZeroDivisionError("inverse of zero field element")
        return pow(a, -1, self.p) if self.kind == "prime" else 1 / Fraction(a)

    def rdiv(self, a: Raw, b: Raw) -> Raw:
        return self.rmul(a, self.rinv(b))

    def rpow(self, a: Raw, e: int) -> Raw:
        if e < 0:
            return self.rpow(self.rinv(a), -e)
        return pow(a, e, self.p) if self.kind == "prime" else Fraction(a) ** e

    def parse_raw(self, text: str) -> Raw:
        """Parse `a/b` or `a` (decimal residue for prime fields)."""
        text = text.strip()
        if self.kind == "prime":
            if "/" in text:
                num, den = text.split("/", 1)
                return self.rdiv(int(num) % self.p, int(den) % self.p)
            return int(text) % self.p
        return Fraction(text)

    def format_raw(self, a: Raw) -> str:
        if self.kind == "prime":
            return str(a % self.p)
        f = Fraction(a)
        return str(f.numerator) if f.denominator == 1 else f"{f.numerator}/{f.denominator}"


class FieldElement:
    """Immutable element of a FieldSpec, in unique canonical form."""

    __slots__ = ("spec", "value")

    def __init__(self, spec: FieldSpec, value: Raw):
        self.spec = spec
        if spec.kind == "prime":
            self.value = int(value) % spec.p
        else:
            self.value = Fraction(value)

    def _check(self, other: "FieldElement") -> None:
        if not isinstance(other, FieldElement) or other.spec != self.spec:
            raise FieldMismatchError(f"mixed field specs: {self.spec} vs {getattr(other, 'spec', other)}")

    def __add__(self, other):
        self._check(other)
        return FieldElement(self.spec, self.spec.radd(self.value, other.value))

    def __sub__(self, other):
        self._check(other)
        return FieldElement(self.spec, self.spec.rsub(self.value, other.value))

    def __mul__(self, other):
        self._check(other)
        return FieldElement(self.spec, self.spec.rmul(self.value, other.value))

    def __truediv__(self, other):
        self._check(other)
        return FieldElement(self.spec, self.spec.rdiv(self.value, other.value))

    def __neg__(self):
        return FieldElement(self.spec, self.spec.rneg(self.value))

    def __pow__(self, e: int):
        return FieldElement(self.spec, self.spec.rpow(self.value, e))

    def inv(self) -> "FieldElement":
        return FieldElement(self.spec, self.spec.rinv(self.value))

    def is_zero(self) -> bool:
        return not self.value

    def __bool__(self):
        return bool(self.value)

    def __eq__(self, other):
        return (
            isinstance(other, FieldElement)
            and self.spec == other.spec
            and self.value == other.value
        )

    def __hash__(self):
        return hash((self.spec, self.value))

    def __repr__(self):
        return self.spec.format_raw(self.value)


def characteristic_guard(spec: FieldSpec, bound: int) -> bool:
    """True iff the characteristic is 0 or exceeds `bound`."""
    ch = spec.characteristic()
    return ch == 0 or ch > bound
