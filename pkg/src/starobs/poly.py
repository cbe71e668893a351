"""Exact multivariate polynomial arithmetic over the rationals.

A polynomial in ``m`` variables is stored as a map from exponent tuples
(one non-negative integer per variable) to nonzero ``Fraction``
coefficients.  The zero polynomial has an empty term map.  All values are
immutable after construction, so they can be shared freely.

The module also provides ``TruncatedSeries``, a fixed-order formal power
series in a single deformation parameter, with payloads in any abelian
group (polynomials, operators, ...).  Arithmetic silently discards terms
beyond the truncation order.
"""

from __future__ import annotations

import itertools
from fractions import Fraction
from typing import Callable, Mapping, Sequence

Exponents = tuple[int, ...]


def zero_exponents(dim: int) -> Exponents:
    return (0,) * dim


def unit_exponents(dim: int, i: int) -> Exponents:
    e = [0] * dim
    e[i] = 1
    return tuple(e)


def add_exponents(a: Exponents, b: Exponents) -> Exponents:
    return tuple(x + y for x, y in zip(a, b))


def exponents_upto(dim: int, max_total: int) -> list[Exponents]:
    """All exponent tuples with total degree <= max_total, in lex order."""
    out = [
        e
        for e in itertools.product(range(max_total + 1), repeat=dim)
        if sum(e) <= max_total
    ]
    out.sort()
    return out


class Polynomial:
    """Immutable sparse polynomial with Fraction coefficients."""

    __slots__ = ("dim", "terms", "_hash")

    def __init__(self, dim: int, terms: Mapping[Exponents, Fraction | int] | None = None):
        if dim < 1:
            raise ValueError("polynomial needs at least one variable")
        clean: dict[Exponents, Fraction] = {}
        if terms:
            for exps, coeff in terms.items():
                exps = tuple(exps)
                if len(exps) != dim:
                    raise ValueError(f"exponent tuple {exps} has wrong length for dim {dim}")
                if any(e < 0 for e in exps):
                    raise ValueError(f"negative exponent in {exps}")
                c = Fraction(coeff)
                if c:
                    clean[exps] = clean.get(exps, Fraction(0)) + c
                    if not clean[exps]:
                        del clean[exps]
        object.__setattr__(self, "dim", dim)
        object.__setattr__(self, "terms", clean)
        object.__setattr__(self, "_hash", None)

    def __setattr__(self, name, value):
        raise AttributeError("Polynomial is immutable")

    # -- constructors ------------------------------------------------------

    @classmethod
    def zero(cls, dim: int) -> Polynomial:
        return cls(dim, {})

    @classmethod
    def constant(cls, dim: int, value: Fraction | int) -> Polynomial:
        return cls(dim, {zero_exponents(dim): Fraction(value)})

    @classmethod
    def one(cls, dim: int) -> Polynomial:
        return cls.constant(dim, 1)

    @classmethod
    def variable(cls, dim: int, i: int) -> Polynomial:
        if not 0 <= i < dim:
            raise IndexError(f"variable index {i} out of range for dim {dim}")
        return cls(dim, {unit_exponents(dim, i): Fraction(1)})

    @classmethod
    def monomial(cls, dim: int, exps: Exponents, coeff: Fraction | int = 1) -> Polynomial:
        return cls(dim, {tuple(exps): Fraction(coeff)})

    # -- ring structure ----------------------------------------------------

    def _coerce(self, other) -> Polynomial | None:
        if isinstance(other, Polynomial):
            if other.dim != self.dim:
                raise ValueError(f"dimension mismatch: {self.dim} vs {other.dim}")
            return other
        if isinstance(other, (int, Fraction)):
            return Polynomial.constant(self.dim, other)
        return None

    def __add__(self, other) -> Polynomial:
        q = self._coerce(other)
        if q is None:
            return NotImplemented
        terms = dict(self.terms)
        for exps, c in q.terms.items():
            terms[exps] = terms.get(exps, Fraction(0)) + c
        return Polynomial(self.dim, terms)

    __radd__ = __add__

    def __neg__(self) -> Polynomial:
        return Polynomial(self.dim, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other) -> Polynomial:
        q = self._coerce(other)
        if q is None:
            return NotImplemented
        return self + (-q)

    def __rsub__(self, other) -> Polynomial:
        q = self._coerce(other)
        if q is None:
            return NotImplemented
        return q + (-self)

    def __mul__(self, other) -> Polynomial:
        if isinstance(other, (int, Fraction)):
            c = Fraction(other)
            return Polynomial(self.dim, {e: k * c for e, k in self.terms.items()})
        q = self._coerce(other)
        if q is None:
            return NotImplemented
        terms: dict[Exponents, Fraction] = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in q.terms.items():
                e = add_exponents(e1, e2)
                terms[e] = terms.get(e, Fraction(0)) + c1 * c2
        return Polynomial(self.dim, terms)

    __rmul__ = __mul__

    def __pow__(self, n: int) -> Polynomial:
        if n < 0:
            raise ValueError("negative powers are not polynomials")
        result = Polynomial.one(self.dim)
        for _ in range(n):
            result = result * self
        return result

    def __bool__(self) -> bool:
        return bool(self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, Fraction)):
            other = Polynomial.constant(self.dim, other)
        if not isinstance(other, Polynomial):
            return NotImplemented
        return self.dim == other.dim and self.terms == other.terms

    def __hash__(self):
        h = object.__getattribute__(self, "_hash")
        if h is None:
            h = hash((self.dim, frozenset(self.terms.items())))
            object.__setattr__(self, "_hash", h)
        return h

    # -- calculus ----------------------------------------------------------

    def partial(self, i: int) -> Polynomial:
        """Formal partial derivative with respect to variable i."""
        if not 0 <= i < self.dim:
            raise IndexError(f"variable index {i} out of range for dim {self.dim}")
        terms: dict[Exponents, Fraction] = {}
        for exps, c in self.terms.items():
            if exps[i] == 0:
                continue
            e = list(exps)
            e[i] -= 1
            terms[tuple(e)] = terms.get(tuple(e), Fraction(0)) + c * exps[i]
        return Polynomial(self.dim, terms)

    def partial_multi(self, alpha: Exponents) -> Polynomial:
        """Iterated partial derivative with multi-index alpha."""
        p = self
        for i, k in enumerate(alpha):
            for _ in range(k):
                p = p.partial(i)
                if p.is_zero():
                    return p
        return p

    def degree(self) -> int:
        """Total degree; the zero polynomial reports 0."""
        if not self.terms:
            return 0
        return max(sum(e) for e in self.terms)

    def coefficient(self, exps: Exponents) -> Fraction:
        return self.terms.get(tuple(exps), Fraction(0))

    def constant_term(self) -> Fraction:
        return self.terms.get(zero_exponents(self.dim), Fraction(0))

    def is_constant(self) -> bool:
        return all(sum(e) == 0 for e in self.terms)

    def evaluate(self, point: Sequence[Fraction | int]) -> Fraction:
        if len(point) != self.dim:
            raise ValueError("point has wrong length")
        vals = [Fraction(v) for v in point]
        total = Fraction(0)
        for exps, c in self.terms.items():
            term = c
            for v, k in zip(vals, exps):
                if k:
                    term *= v**k
            total += term
        return total

    # -- display -----------------------------------------------------------

    def sorted_terms(self) -> list[tuple[Exponents, Fraction]]:
        """Terms ordered lexicographically on exponent tuples."""
        return sorted(self.terms.items())

    def to_string(self, names: Sequence[str] | None = None) -> str:
        if names is None:
            names = [f"x{i}" for i in range(self.dim)]
        if len(names) != self.dim:
            raise ValueError("wrong number of variable names")
        if not self.terms:
            return "0"
        parts: list[str] = []
        for exps, coeff in self.sorted_terms():
            factors = [
                names[i] if k == 1 else f"{names[i]}^{k}"
                for i, k in enumerate(exps)
                if k
            ]
            mag = abs(coeff)
            if not factors:
                body = str(mag)
            elif mag == 1:
                body = "*".join(factors)
            else:
                body = "*".join([str(mag)] + factors)
            if not parts:
                parts.append(body if coeff > 0 else f"-{body}")
            else:
                parts.append(f"+ {body}" if coeff > 0 else f"- {body}")
        return " ".join(parts)

    def __repr__(self):
        return f"Polynomial({self.dim}, {self.to_string()})"


def format_fraction(c: Fraction) -> str:
    """Render n/1 as "n", everything else as "n/d"."""
    c = Fraction(c)
    return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"


# -- parsing ---------------------------------------------------------------


class PolynomialParseError(ValueError):
    def __init__(self, text: str, pos: int, message: str):
        self.pos = pos
        super().__init__(f"at position {pos} in {text!r}: {message}")


class _Parser:
    """Recursive-descent parser for polynomial expressions.

    Grammar: sums and differences of terms, terms are '*'-separated
    factors, factors are integers, rationals like 3/4, declared variable
    names, parenthesised expressions, optionally raised with '^' to a
    non-negative integer power.  Multiplication must be explicit.
    """

    def __init__(self, text: str, names: Sequence[str]):
        self.text = text
        self.pos = 0
        self.names = list(names)
        self.dim = len(self.names)

    def error(self, message: str):
        raise PolynomialParseError(self.text, self.pos, message)

    def skip_ws(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self) -> str:
        self.skip_ws()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def take(self, ch: str) -> bool:
        if self.peek() == ch:
            self.pos += 1
            return True
        return False

    def parse(self) -> Polynomial:
        p = self.expr()
        self.skip_ws()
        if self.pos != len(self.text):
            self.error("unexpected trailing input")
        return p

    def expr(self) -> Polynomial:
        sign = 1
        while True:
            if self.take("-"):
                sign = -sign
            elif self.take("+"):
                pass
            else:
                break
        result = self.term() * sign
        while True:
            if self.take("+"):
                result = result + self.term()
            elif self.take("-"):
                result = result - self.term()
            else:
                return result

    def term(self) -> Polynomial:
        result = self.factor()
        while self.take("*"):
            result = result * self.factor()
        return result

    def factor(self) -> Polynomial:
        base = self.atom()
        if self.take("^"):
            expo = self.integer("exponent")
            if expo < 0:
                self.error("negative exponent")
            return base**expo
        return base

    def atom(self) -> Polynomial:
        ch = self.peek()
        if ch == "(":
            self.take("(")
            p = self.expr()
            if not self.take(")"):
                self.error("expected ')'")
            return p
        if ch.isdigit():
            num = self.integer("number")
            if self.take("/"):
                den = self.integer("denominator")
                if den == 0:
                    self.error("zero denominator")
                return Polynomial.constant(self.dim, Fraction(num, den))
            return Polynomial.constant(self.dim, num)
        if ch.isalpha() or ch == "_":
            name = self.name()
            if name not in self.names:
                self.error(f"unknown variable {name!r} (declared: {', '.join(self.names)})")
            return Polynomial.variable(self.dim, self.names.index(name))
        self.error("expected a number, variable or '('")

    def integer(self, what: str) -> int:
        self.skip_ws()
        start = self.pos
        while self.pos < len(self.text) and self.text[self.pos].isdigit():
            self.pos += 1
        if start == self.pos:
            self.error(f"expected {what}")
        return int(self.text[start : self.pos])

    def name(self) -> str:
        self.skip_ws()
        start = self.pos
        while self.pos < len(self.text) and (
            self.text[self.pos].isalnum() or self.text[self.pos] == "_"
        ):
            self.pos += 1
        return self.text[start : self.pos]


def parse_polynomial(text: str, names: Sequence[str]) -> Polynomial:
    """Parse a polynomial string with the given variable binding."""
    return _Parser(text, names).parse()


# -- truncated formal series ------------------------------------------------


class TruncatedSeries:
    """Formal power series in one parameter, truncated at a fixed order.

    Coefficient k is the payload at parameter power k.  Payloads must
    support ``+``; ``combine`` takes any bilinear map of payloads.
    """

    __slots__ = ("order", "coefficients")

    def __init__(self, order: int, coefficients: Sequence):
        if order < 0:
            raise ValueError("order must be non-negative")
        coeffs = tuple(coefficients)
        if len(coeffs) != order + 1:
            raise ValueError(f"need {order + 1} coefficients, got {len(coeffs)}")
        object.__setattr__(self, "order", order)
        object.__setattr__(self, "coefficients", coeffs)

    def __setattr__(self, name, value):
        raise AttributeError("TruncatedSeries is immutable")

    def coefficient(self, k: int):
        return self.coefficients[k]

    def __eq__(self, other):
        if not isinstance(other, TruncatedSeries):
            return NotImplemented
        return self.order == other.order and self.coefficients == other.coefficients

    def __add__(self, other: TruncatedSeries) -> TruncatedSeries:
        self._check_order(other)
        return TruncatedSeries(
            self.order, [a + b for a, b in zip(self.coefficients, other.coefficients)]
        )

    def __sub__(self, other: TruncatedSeries) -> TruncatedSeries:
        self._check_order(other)
        return TruncatedSeries(
            self.order, [a - b for a, b in zip(self.coefficients, other.coefficients)]
        )

    def map(self, f: Callable) -> TruncatedSeries:
        return TruncatedSeries(self.order, [f(c) for c in self.coefficients])

    def _check_order(self, other: TruncatedSeries):
        if self.order != other.order:
            raise ValueError(f"order mismatch: {self.order} vs {other.order}")

    def combine(self, other: TruncatedSeries, combiner: Callable) -> TruncatedSeries:
        """Cauchy product with a bilinear payload map.

        Coefficient n of the result is sum over k+l = n of
        combiner(self[k], other[l]); indices past the truncation order
        are dropped.
        """
        self._check_order(other)
        out = []
        for n in range(self.order + 1):
            acc = None
            for k in range(n + 1):
                v = combiner(self.coefficients[k], other.coefficients[n - k])
                acc = v if acc is None else acc + v
            out.append(acc)
        return TruncatedSeries(self.order, out)

    def __repr__(self):
        return f"TruncatedSeries(order={self.order}, {list(self.coefficients)!r})"
