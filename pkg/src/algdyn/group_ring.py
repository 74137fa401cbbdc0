"""
Exact arithmetic in the integral group ring Z[Z^d] of Laurent polynomials.

Text grammar (whitespace insignificant):
  - a polynomial is a signed sum of terms, e.g. ``3 - u1 - u2`` or ``1 + u1^-1*u2``
  - a term is a product of factors joined by ``*``
  - a factor is an integer or a variable ``u<i>`` with optional ``^<exponent>``
  - variables are numbered from 1; ``u<i>`` with i > d is an error when d is fixed
"""

import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

from algdyn.errors import DimensionMismatch, NotLopsided, PolyParseError

log = logging.getLogger(__name__)

Exponent = Tuple[int, ...]
Number = Union[int, Fraction]


# ---------------------------------------------------------------------------
# Laurent polynomials
# ---------------------------------------------------------------------------

def _add_exp(a: Exponent, b: Exponent) -> Exponent:
    return tuple(x + y for x, y in zip(a, b))


def _convolve(a: Mapping[Exponent, Number], b: Mapping[Exponent, Number]) -> Dict[Exponent, Number]:
    """Convolution of two finitely supported coefficient maps; zero coefficients are dropped."""
    out: Dict[Exponent, Number] = {}
    for ea, ca in a.items():
        for eb, cb in b.items():
            key = _add_exp(ea, eb)
            out[key] = out.get(key, 0) + ca * cb
    return {e: c for e, c in out.items() if c != 0}


@dataclass(frozen=True)
class LaurentPoly:
    """Element of Z[Z^d]: sorted (exponent, coefficient) pairs with no zero coefficient."""

    dim: int
    terms: Tuple[Tuple[Exponent, int], ...] = ()

    def __post_init__(self):
        if self.dim < 1:
            raise DimensionMismatch(f"dimension must be positive, got {self.dim}")
        previous = None
        for exp, coef in self.terms:
            if len(exp) != self.dim:
                raise DimensionMismatch(f"exponent {exp} does not have length {self.dim}")
            if coef == 0:
                raise ValueError(f"zero coefficient stored at {exp}")
            if previous is not None and exp <= previous:
                raise ValueError("terms must be strictly increasing in lexicographic order")
            previous = exp

    @classmethod
    def from_dict(cls, dim: int, mapping: Mapping[Sequence[int], int]) -> 'LaurentPoly':
        merged: Dict[Exponent, int] = {}
        for exp, coef in mapping.items():
            key = tuple(int(e) for e in exp)
            merged[key] = merged.get(key, 0) + int(coef)
        return cls(dim, tuple(sorted((e, c) for e, c in merged.items() if c != 0)))

    @classmethod
    def zero(cls, dim: int) -> 'LaurentPoly':
        return cls(dim)

    @classmethod
    def constant(cls, dim: int, value: int) -> 'LaurentPoly':
        return cls.from_dict(dim, {(0,) * dim: value})

    @classmethod
    def monomial(cls, exponent: Sequence[int], coef: int = 1) -> 'LaurentPoly':
        return cls.from_dict(len(exponent), {tuple(exponent): coef})

    @classmethod
    def variable(cls, dim: int, index: int) -> 'LaurentPoly':
        """The generator u_index (1-based)."""
        exp = [0] * dim
        exp[index - 1] = 1
        return cls.monomial(exp)

    def as_dict(self) -> Dict[Exponent, int]:
        return dict(self.terms)

    @property
    def support(self) -> Tuple[Exponent, ...]:
        return tuple(e for e, _ in self.terms)

    @property
    def is_zero(self) -> bool:
        return not self.terms

    def coefficient(self, exp: Sequence[int]) -> int:
        return self.as_dict().get(tuple(exp), 0)

    def l1_norm(self) -> int:
        return sum(abs(c) for _, c in self.terms)

    def _coerce(self, other) -> 'LaurentPoly':
        if isinstance(other, int):
            return LaurentPoly.constant(self.dim, other)
        if not isinstance(other, LaurentPoly):
            return NotImplemented
        if other.dim != self.dim:
            raise DimensionMismatch(f"cannot combine polynomials of dimension {self.dim} and {other.dim}")
        return other

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        merged = self.as_dict()
        for e, c in other.terms:
            merged[e] = merged.get(e, 0) + c
        return LaurentPoly.from_dict(self.dim, merged)

    __radd__ = __add__

    def __neg__(self):
        return LaurentPoly(self.dim, tuple((e, -c) for e, c in self.terms))

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return mul(self, other)

    __rmul__ = __mul__

    def __pow__(self, k: int) -> 'LaurentPoly':
        if k < 0:
            raise ValueError("negative powers are only defined for monomials; use translate")
        result = LaurentPoly.constant(self.dim, 1)
        for _ in range(k):
            result = mul(result, self)
        return result

    def translate(self, shift: Sequence[int]) -> 'LaurentPoly':
        """Multiply by the monomial u^shift."""
        shift = tuple(shift)
        if len(shift) != self.dim:
            raise DimensionMismatch(f"shift {shift} does not have length {self.dim}")
        return LaurentPoly(self.dim, tuple((_add_exp(e, shift), c) for e, c in self.terms))

    def evaluate(self, point: Sequence[complex]) -> complex:
        """Value at a point of (C^*)^d, usually a point of the torus."""
        total = 0j
        for exp, coef in self.terms:
            value = complex(coef)
            for z, e in zip(point, exp):
                value *= z ** e
            total += value
        return total

    def __str__(self) -> str:
        return format_poly(self)


def mul(f: LaurentPoly, g: LaurentPoly) -> LaurentPoly:
    """Convolution product in Z[Z^d]."""
    if f.dim != g.dim:
        raise DimensionMismatch(f"cannot multiply polynomials of dimension {f.dim} and {g.dim}")
    return LaurentPoly.from_dict(f.dim, _convolve(f.as_dict(), g.as_dict()))


# ---------------------------------------------------------------------------
# Lopsidedness and l1 inverses
# ---------------------------------------------------------------------------

def is_lopsided(f: LaurentPoly) -> Optional[Exponent]:
    """Return the exponent whose coefficient dominates the l1 mass of all the others."""
    if f.is_zero:
        return None
    total = f.l1_norm()
    exp, coef = max(f.terms, key=lambda t: abs(t[1]))
    if 2 * abs(coef) > total:
        return exp
    return None


@dataclass(frozen=True)
class L1InverseApprox:
    """Truncated Neumann series for the l1 inverse of a lopsided polynomial.

    ``tail_bound`` bounds both the residual ||f * poly - 1||_1 and the l1 distance
    from ``poly`` to the true inverse.
    """

    dim: int
    poly: Tuple[Tuple[Exponent, Fraction], ...]
    tail_bound: Fraction
    order: int
    dominant: Exponent
    ratio: Fraction

    def as_dict(self) -> Dict[Exponent, Fraction]:
        return dict(self.poly)

    def coefficient(self, exp: Sequence[int]) -> Fraction:
        return self.as_dict().get(tuple(exp), Fraction(0))


def _series_order(ratio: Fraction, lead: int, eps: Fraction) -> Tuple[int, Fraction]:
    """Smallest K whose tail bound is at most eps, together with that bound."""
    if ratio == 0:
        return 0, Fraction(0)
    scale = max(Fraction(1), 1 / (abs(lead) * (1 - ratio)))
    k = 0
    power = ratio
    while power * scale > eps:
        k += 1
        power *= ratio
    return k, power * scale


def l1_inverse_approx(f: LaurentPoly, eps: Fraction) -> L1InverseApprox:
    """Certified approximate inverse of f in l1(Z^d).

    Writes f = c * u^g0 * (1 - r) with ||r||_1 < 1 and truncates
    (1/c) * u^-g0 * sum_k r^k once the geometric tail drops below eps.
    """
    eps = Fraction(eps)
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}")
    g0 = is_lopsided(f)
    if g0 is None:
        raise NotLopsided(f"{format_poly(f)} has no dominating coefficient")
    lead = f.coefficient(g0)
    rest = f - LaurentPoly.monomial(g0, lead)
    ratio = Fraction(rest.l1_norm(), abs(lead))
    order, bound = _series_order(ratio, lead, eps)

    # Integer Horner scheme: T_K = sum_k r'^k c^(K-k) with r' = c * r shifted to the origin.
    origin = tuple(-e for e in g0)
    shifted = (-rest).translate(origin)
    acc = LaurentPoly.constant(f.dim, 1)
    for j in range(order):
        acc = mul(shifted, acc) + lead ** (j + 1)
    denominator = lead ** (order + 1)
    poly = tuple((e, Fraction(c, denominator)) for e, c in acc.translate(origin).terms)
    log.debug("l1 inverse of %s: order %d, ratio %s, tail bound %s", f, order, ratio, bound)
    return L1InverseApprox(f.dim, poly, bound, order, g0, ratio)


def l1_residual(f: LaurentPoly, approx: L1InverseApprox) -> Fraction:
    """Exact ||f * approx.poly - delta_0||_1."""
    product = _convolve(f.as_dict(), approx.as_dict())
    identity = (0,) * f.dim
    product[identity] = product.get(identity, 0) - 1
    return sum((abs(Fraction(c)) for c in product.values()), Fraction(0))


# ---------------------------------------------------------------------------
# Parser and formatter
# ---------------------------------------------------------------------------

def _tokenize(text: str) -> List[Tuple[str, str, int]]:
    """Split text into (kind, value, position) tokens, skipping whitespace."""
    tokens = []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch.isspace():
            i += 1
        elif ch.isdigit():
            j = i
            while j < len(text) and text[j].isdigit():
                j += 1
            tokens.append(('int', text[i:j], i))
            i = j
        elif ch == 'u':
            j = i + 1
            while j < len(text) and text[j].isdigit():
                j += 1
            if j == i + 1:
                raise PolyParseError("variable 'u' needs an index", text, i)
            tokens.append(('var', text[i + 1:j], i))
            i = j
        elif ch in '+-*^':
            tokens.append((ch, ch, i))
            i += 1
        else:
            raise PolyParseError(f"unexpected character {ch!r}", text, i)
    return tokens


class _PolyParser:

    def __init__(self, text: str, dim: Optional[int]):
        self.text = text
        self.tokens = _tokenize(text)
        self.pos = 0
        self.dim = dim

    def peek(self) -> Optional[Tuple[str, str, int]]:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def where(self) -> int:
        tok = self.peek()
        return tok[2] if tok else len(self.text)

    def take(self, kind: str) -> Tuple[str, str, int]:
        tok = self.peek()
        if tok is None or tok[0] != kind:
            found = repr(tok[1]) if tok else 'end of input'
            raise PolyParseError(f"expected {kind!r}, found {found}", self.text, self.where())
        self.pos += 1
        return tok

    def parse(self) -> Tuple[List[Tuple[Dict[int, int], int]], int]:
        if not self.tokens:
            raise PolyParseError("empty polynomial", self.text, 0)
        terms = []
        sign = 1
        tok = self.peek()
        if tok[0] in '+-':
            sign = -1 if tok[0] == '-' else 1
            self.pos += 1
        terms.append(self.term(sign))
        while self.peek() is not None:
            tok = self.peek()
            if tok[0] not in '+-':
                raise PolyParseError(f"expected '+' or '-', found {tok[1]!r}", self.text, tok[2])
            self.pos += 1
            terms.append(self.term(-1 if tok[0] == '-' else 1))
        max_index = max((i for exps, _ in terms for i in exps), default=1)
        return terms, max_index

    def term(self, sign: int) -> Tuple[Dict[int, int], int]:
        exps: Dict[int, int] = {}
        coef_box = [sign]
        self.factor(exps, coef_box)
        while self.peek() is not None and self.peek()[0] == '*':
            self.pos += 1
            self.factor(exps, coef_box)
        return exps, coef_box[0]

    def factor(self, exps: Dict[int, int], coef_box: List[int]) -> None:
        tok = self.peek()
        if tok is None:
            raise PolyParseError("expected a term, found end of input", self.text, len(self.text))
        if tok[0] == 'int':
            self.pos += 1
            coef_box[0] *= int(tok[1])
            return
        if tok[0] != 'var':
            raise PolyParseError(f"expected a term, found {tok[1]!r}", self.text, tok[2])
        self.pos += 1
        index = int(tok[1])
        if index < 1:
            raise PolyParseError("variables are numbered from u1", self.text, tok[2])
        if self.dim is not None and index > self.dim:
            raise PolyParseError(f"variable u{index} exceeds dimension {self.dim}", self.text, tok[2])
        power = 1
        if self.peek() is not None and self.peek()[0] == '^':
            self.pos += 1
            esign = 1
            if self.peek() is not None and self.peek()[0] in '+-':
                esign = -1 if self.peek()[0] == '-' else 1
                self.pos += 1
            power = esign * int(self.take('int')[1])
        exps[index] = exps.get(index, 0) + power


def parse_poly(text: str, dim: Optional[int] = None) -> LaurentPoly:
    """Parse the polynomial grammar; the dimension defaults to the largest variable index."""
    terms, max_index = _PolyParser(text, dim).parse()
    d = dim if dim is not None else max_index
    mapping: Dict[Exponent, int] = {}
    for exps, coef in terms:
        key = [0] * d
        for index, power in exps.items():
            key[index - 1] += power
        mapping[tuple(key)] = mapping.get(tuple(key), 0) + coef
    return LaurentPoly.from_dict(d, mapping)


def _format_monomial(exp: Exponent) -> str:
    parts = []
    for i, e in enumerate(exp, start=1):
        if e == 1:
            parts.append(f"u{i}")
        elif e != 0:
            parts.append(f"u{i}^{e}")
    return '*'.join(parts)


def _format_term(exp: Exponent, magnitude: int) -> str:
    mono = _format_monomial(exp)
    if not mono:
        return str(magnitude)
    if magnitude == 1:
        return mono
    return f"{magnitude}*{mono}"


def format_poly(f: LaurentPoly) -> str:
    """Canonical text form: lexicographic exponent order, explicit signs between terms."""
    if f.is_zero:
        return '0'
    out = []
    for k, (exp, coef) in enumerate(f.terms):
        body = _format_term(exp, abs(coef))
        if k == 0:
            out.append(f"-{body}" if coef < 0 else body)
        else:
            out.append(f"{'-' if coef < 0 else '+'} {body}")
    return ' '.join(out)


def format_exponent(exp: Iterable[int]) -> str:
    return '(' + ','.join(str(e) for e in exp) + ')'
