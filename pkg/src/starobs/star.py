"""Truncated star products and formal diffeomorphisms.

A star product of order N is the tuple of its correction operators
B_1..B_N (bidifferential, arity 2) on top of the implicit commutative
product B_0 = m.  Associativity is not assumed: it is measured per order
by ``assoc_residual`` and the largest verified prefix is cached as the
product's certificate.

A formal diffeomorphism is id + sum_k h^k D_k with unary operators D_k;
it acts on star products by conjugation, order by order.  The formal
parameter is real: with the built-in constant-coefficient product the
antisymmetric part of B_1 is half the Poisson bracket, so commutators
expand as h*{a,b} + O(h^3).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .linsolve import solve_sparse
from .multivec import Polyvector
from .poly import Exponents, Polynomial, TruncatedSeries, exponents_upto
from .polydiff import DerivKey, PolyDiffOp, hochschild_d


class StarProduct:
    """Truncated deformation of the commutative product."""

    __slots__ = ("dim", "order", "corrections", "_certified")

    def __init__(self, dim: int, order: int, corrections: Sequence[PolyDiffOp]):
        if order < 0:
            raise ValueError("order must be non-negative")
        corr = tuple(corrections)
        if len(corr) != order:
            raise ValueError(f"need {order} correction operators, got {len(corr)}")
        for op in corr:
            if op.dim != dim:
                raise ValueError("correction dimension mismatch")
            if op.arity != 2:
                raise ValueError("corrections must have arity 2")
        object.__setattr__(self, "dim", dim)
        object.__setattr__(self, "order", order)
        object.__setattr__(self, "corrections", corr)
        object.__setattr__(self, "_certified", None)

    def __setattr__(self, name, value):
        raise AttributeError("StarProduct is immutable")

    @classmethod
    def trivial(cls, dim: int, order: int) -> StarProduct:
        return cls(dim, order, [PolyDiffOp.zero(dim, 2)] * order)

    def term(self, k: int) -> PolyDiffOp:
        """B_k; B_0 is the multiplication cochain."""
        if k == 0:
            return PolyDiffOp.multiplication(self.dim)
        return self.corrections[k - 1]

    def with_term(self, k: int, op: PolyDiffOp) -> StarProduct:
        """Copy of this product with B_k replaced."""
        if not 1 <= k <= self.order:
            raise IndexError(f"order {k} out of range")
        corr = list(self.corrections)
        corr[k - 1] = op
        return StarProduct(self.dim, self.order, corr)

    def plus_term(self, k: int, op: PolyDiffOp) -> StarProduct:
        return self.with_term(k, self.term(k) + op)

    def __eq__(self, other):
        if not isinstance(other, StarProduct):
            return NotImplemented
        return (
            self.dim == other.dim
            and self.order == other.order
            and self.corrections == other.corrections
        )

    def __repr__(self):
        return f"StarProduct(dim={self.dim}, order={self.order})"

    # -- evaluation ----------------------------------------------------------

    def eval(self, a: Polynomial, b: Polynomial) -> TruncatedSeries:
        """a * b as a truncated series; coefficient k is B_k(a, b)."""
        if a.dim != self.dim or b.dim != self.dim:
            raise ValueError("dimension mismatch")
        return TruncatedSeries(
            self.order, [self.term(k).apply([a, b]) for k in range(self.order + 1)]
        )

    def commutator(self, a: Polynomial, b: Polynomial) -> TruncatedSeries:
        """a * b - b * a; coefficient 0 always vanishes."""
        return self.eval(a, b) - self.eval(b, a)

    # -- associativity -------------------------------------------------------

    def assoc_residual(self, n: int) -> PolyDiffOp:
        """Order-n associator: sum_{k+l=n} B_k(B_l(.,.),.) - B_k(., B_l(.,.)).

        The product is associative at order n iff this arity-3 operator
        is zero in canonical form.
        """
        if not 0 <= n <= self.order:
            raise IndexError(f"order {n} out of range (product order {self.order})")
        total = PolyDiffOp.zero(self.dim, 3)
        for k in range(n + 1):
            outer = self.term(k)
            inner = self.term(n - k)
            total = total + outer.compose_at(0, inner) - outer.compose_at(1, inner)
        return total

    def certified_order(self) -> int:
        """Largest n such that all residuals at orders <= n vanish."""
        cached = object.__getattribute__(self, "_certified")
        if cached is not None:
            return cached
        n = 0
        while n < self.order and self.assoc_residual(n + 1).is_zero():
            n += 1
        object.__setattr__(self, "_certified", n)
        return n

    def _inherit_certificate(self, value: int | None):
        if value is not None:
            object.__setattr__(self, "_certified", min(value, self.order))


def moyal_star(pi: Polyvector, order: int) -> StarProduct:
    """Constant-coefficient exponential star product of a bivector.

    B_k = 1/(2^k k!) sum pi^(i1 j1)...pi^(ik jk) d_{i1..ik} tensor d_{j1..jk};
    requires a constant bivector (for which the Jacobi identity is
    automatic), and is associative at every order.
    """
    if pi.degree != 2:
        raise ValueError("need a degree-2 polyvector")
    if not pi.is_constant():
        raise ValueError("this construction requires a constant bivector")
    dim = pi.dim
    entries: list[tuple[int, int, Fraction]] = []
    for (i, j), poly in pi.components.items():
        c = poly.constant_term()
        entries.append((i, j, c))
        entries.append((j, i, -c))
    corrections = []
    fact = 1
    for k in range(1, order + 1):
        fact *= k
        norm = Fraction(1, 2**k * fact)
        terms: dict[DerivKey, Polynomial] = {}
        for combo in itertools.product(entries, repeat=k):
            alpha = [0] * dim
            beta = [0] * dim
            coeff = norm
            for i, j, c in combo:
                alpha[i] += 1
                beta[j] += 1
                coeff *= c
            if not coeff:
                continue
            key = (tuple(alpha), tuple(beta))
            prev = terms.get(key)
            acc = (prev if prev is not None else Polynomial.zero(dim)) + Polynomial.constant(dim, coeff)
            if acc.is_zero():
                terms.pop(key, None)
            else:
                terms[key] = acc
        corrections.append(PolyDiffOp(dim, 2, terms))
    star = StarProduct(dim, order, corrections)
    return star


# -- formal diffeomorphisms ----------------------------------------------------


class FormalDiffeo:
    """id + h D_1 + h^2 D_2 + ... with unary polydifferential D_k."""

    __slots__ = ("dim", "order", "terms")

    def __init__(self, dim: int, order: int, terms: Sequence[PolyDiffOp]):
        t = tuple(terms)
        if len(t) != order:
            raise ValueError(f"need {order} operators, got {len(t)}")
        for op in t:
            if op.dim != dim:
                raise ValueError("term dimension mismatch")
            if op.arity != 1:
                raise ValueError("terms must have arity 1")
        object.__setattr__(self, "dim", dim)
        object.__setattr__(self, "order", order)
        object.__setattr__(self, "terms", t)

    def __setattr__(self, name, value):
        raise AttributeError("FormalDiffeo is immutable")

    @classmethod
    def identity(cls, dim: int, order: int) -> FormalDiffeo:
        return cls(dim, order, [PolyDiffOp.zero(dim, 1)] * order)

    @classmethod
    def from_parts(cls, dim: int, order: int, parts: dict[int, PolyDiffOp]) -> FormalDiffeo:
        terms = [PolyDiffOp.zero(dim, 1)] * order
        for k, op in parts.items():
            if not 1 <= k <= order:
                raise IndexError(f"order {k} out of range")
            terms[k - 1] = op
        return cls(dim, order, terms)

    def term(self, k: int) -> PolyDiffOp:
        """D_k; D_0 is the identity operator."""
        if k == 0:
            return PolyDiffOp.identity(self.dim)
        return self.terms[k - 1]

    def is_identity(self) -> bool:
        return all(op.is_zero() for op in self.terms)

    def __eq__(self, other):
        if not isinstance(other, FormalDiffeo):
            return NotImplemented
        return (
            self.dim == other.dim and self.order == other.order and self.terms == other.terms
        )

    def __repr__(self):
        return f"FormalDiffeo(dim={self.dim}, order={self.order})"

    def apply(self, a: Polynomial) -> TruncatedSeries:
        return TruncatedSeries(
            self.order, [self.term(k).apply([a]) for k in range(self.order + 1)]
        )

    def apply_series(self, series: TruncatedSeries) -> TruncatedSeries:
        if series.order != self.order:
            raise ValueError("order mismatch")
        out = []
        for n in range(self.order + 1):
            acc = Polynomial.zero(self.dim)
            for k in range(n + 1):
                acc = acc + self.term(k).apply([series.coefficient(n - k)])
            out.append(acc)
        return TruncatedSeries(self.order, out)


def compose_diffeo(D: FormalDiffeo, E: FormalDiffeo) -> FormalDiffeo:
    """(D o E)(a) = D(E(a)), truncated at the common order."""
    if D.dim != E.dim or D.order != E.order:
        raise ValueError("dimension/order mismatch")
    terms = []
    for n in range(1, D.order + 1):
        acc = PolyDiffOp.zero(D.dim, 1)
        for k in range(n + 1):
            acc = acc + D.term(k).compose_at(0, E.term(n - k))
        terms.append(acc)
    return FormalDiffeo(D.dim, D.order, terms)


def invert_diffeo(D: FormalDiffeo) -> FormalDiffeo:
    """Formal inverse: D o D^-1 = D^-1 o D = id up to the truncation order."""
    inverse: list[PolyDiffOp] = []

    def inv_term(n: int) -> PolyDiffOp:
        return inverse[n - 1] if n else PolyDiffOp.identity(D.dim)

    for n in range(1, D.order + 1):
        acc = PolyDiffOp.zero(D.dim, 1)
        for k in range(1, n + 1):
            acc = acc + D.term(k).compose_at(0, inv_term(n - k))
        inverse.append(-acc)
    return FormalDiffeo(D.dim, D.order, inverse)


def gauge_transform(s: StarProduct, D: FormalDiffeo) -> StarProduct:
    """Conjugated product a *' b = D^-1(D(a) * D(b)) as canonical operators.

    Associativity certificates carry over: conjugating an associative-
    to-order-n product yields an associative-to-order-n product.
    """
    if s.dim != D.dim:
        raise ValueError("dimension mismatch")
    if s.order != D.order:
        raise ValueError(f"order mismatch: star {s.order} vs diffeo {D.order}")
    E = invert_diffeo(D)
    # T_r = sum_{i+j+k=r} B_i(D_j ., D_k .)
    inner: list[PolyDiffOp] = []
    for r in range(s.order + 1):
        acc = PolyDiffOp.zero(s.dim, 2)
        for i in range(r + 1):
            for j in range(r - i + 1):
                k = r - i - j
                acc = acc + s.term(i).compose_at(0, D.term(j)).compose_at(1, D.term(k))
        inner.append(acc)
    corrections = []
    for n in range(s.order + 1):
        acc = PolyDiffOp.zero(s.dim, 2)
        for r in range(n + 1):
            acc = acc + E.term(r).compose_at(0, inner[n - r])
        if n == 0:
            if acc != PolyDiffOp.multiplication(s.dim):
                raise AssertionError("gauge transform lost the leading product")
        else:
            corrections.append(acc)
    result = StarProduct(s.dim, s.order, corrections)
    result._inherit_certificate(object.__getattribute__(s, "_certified"))
    return result


# -- one-order associative extension -------------------------------------------


@dataclass
class ExtensionResult:
    """Outcome of solving the order-(n+1) associativity constraint."""

    status: str  # "solved" or "undecided"
    new_order: int
    coefficient_degree: int
    operator_order: int
    particular: PolyDiffOp | None = None
    freedom: list[PolyDiffOp] = field(default_factory=list)
    extended: StarProduct | None = None

    @property
    def solved(self) -> bool:
        return self.status == "solved"


def bidiff_basis(
    dim: int, coefficient_degree: int, operator_order: int, arity: int = 2
) -> list[tuple[Exponents, DerivKey]]:
    """Deterministic ansatz basis: (coefficient monomial, derivative key)."""
    alphas = exponents_upto(dim, operator_order)
    emons = exponents_upto(dim, coefficient_degree)
    basis = []
    for key in itertools.product(alphas, repeat=arity):
        for e in emons:
            basis.append((e, key))
    return basis


def _op_coordinates(op: PolyDiffOp) -> dict[tuple[DerivKey, Exponents], Fraction]:
    coords = {}
    for key, poly in op.terms.items():
        for emon, c in poly.terms.items():
            coords[(key, emon)] = c
    return coords


def extend_one_order(
    s: StarProduct, coefficient_degree: int, operator_order: int
) -> ExtensionResult:
    """Solve the next-order associativity constraint within an ansatz.

    Finds B_{n+1} with hochschild_d(B_{n+1}) equal to the lower-order
    associator sum, for n the product's order.  Returns one particular
    solution plus a basis of the cocycle freedom inside the ansatz, or
    an "undecided" report when the ansatz is too small (never a claim
    that no extension exists).
    """
    n = s.order
    if s.certified_order() < n:
        raise ValueError(f"product is only associative to order {s.certified_order()}, not {n}")
    dim = s.dim
    target = PolyDiffOp.zero(dim, 3)
    for k in range(1, n + 1):
        l = n + 1 - k
        if l < 1 or l > n:
            continue
        outer = s.term(k)
        inner = s.term(l)
        target = target + outer.compose_at(0, inner) - outer.compose_at(1, inner)

    basis = bidiff_basis(dim, coefficient_degree, operator_order)
    columns = []
    row_index: dict[tuple[DerivKey, Exponents], int] = {}

    def row_of(coord) -> int:
        if coord not in row_index:
            row_index[coord] = len(row_index)
        return row_index[coord]

    col_coords = []
    for emon, key in basis:
        op = PolyDiffOp.single(dim, key, Polynomial.monomial(dim, emon))
        coords = _op_coordinates(hochschild_d(op))
        col_coords.append(coords)
        for coord in coords:
            row_of(coord)
    target_coords = _op_coordinates(target)
    for coord in target_coords:
        row_of(coord)

    nrows = len(row_index)
    rows: list[dict[int, Fraction]] = [dict() for _ in range(nrows)]
    for ci, coords in enumerate(col_coords):
        for coord, v in coords.items():
            rows[row_index[coord]][ci] = v
    rhs = [Fraction(0)] * nrows
    for coord, v in target_coords.items():
        rhs[row_index[coord]] = v

    result = solve_sparse(rows, rhs, len(basis), want_nullspace=True)
    if not result.solved:
        return ExtensionResult(
            status="undecided",
            new_order=n + 1,
            coefficient_degree=coefficient_degree,
            operator_order=operator_order,
        )

    def op_from_vector(vec: dict[int, Fraction]) -> PolyDiffOp:
        acc = PolyDiffOp.zero(dim, 2)
        for ci, v in vec.items():
            emon, key = basis[ci]
            acc = acc + PolyDiffOp.single(dim, key, Polynomial.monomial(dim, emon, v))
        return acc

    particular = op_from_vector(result.solution)
    freedom = [op_from_vector(vec) for vec in result.nullspace]
    extended = StarProduct(dim, n + 1, list(s.corrections) + [particular])
    if not extended.assoc_residual(n + 1).is_zero():
        raise AssertionError("extension failed its built-in residual post-check")
    extended._inherit_certificate(n + 1)
    return ExtensionResult(
        status="solved",
        new_order=n + 1,
        coefficient_degree=coefficient_degree,
        operator_order=operator_order,
        particular=particular,
        freedom=freedom,
        extended=extended,
    )
