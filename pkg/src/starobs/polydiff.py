"""Hochschild cochains as polydifferential operators.

An arity-k operator is a finite sum of terms

    c(x) * d^(a_1) tensor ... tensor d^(a_k)

stored as a map from k-tuples of derivative multi-indices to polynomial
coefficients.  Terms with equal multi-index tuples are merged and zero
coefficients pruned, so operator equality is decidable syntactically.

Composition pushes outer derivatives through an inserted operator's
output with the generalized Leibniz rule, which keeps everything in
canonical form.  The insertion sum of the Gerstenhaber circle product
runs over every slot l = 0..i-1 with sign (-1)^(l*(j-1)); together with
the bracket sign (-1)^((i-1)(j-1)) this makes the Hochschild
differential equal to -[., m] for the multiplication cochain m,
uniformly in arity.
"""

from __future__ import annotations

import itertools
import math
from fractions import Fraction
from typing import TYPE_CHECKING, Mapping, Sequence

from .multivec import Polyvector
from .poly import Exponents, Polynomial, add_exponents, exponents_upto, zero_exponents

if TYPE_CHECKING:  # pragma: no cover
    from .obstruction import IntegrableSystem

DerivKey = tuple[Exponents, ...]


def _binom_multi(alpha: Exponents, beta: Exponents) -> int:
    """Product of per-coordinate binomial coefficients."""
    out = 1
    for a, b in zip(alpha, beta):
        out *= math.comb(a, b)
    return out


def _sub_multi_indices(alpha: Exponents) -> list[Exponents]:
    """All beta with 0 <= beta <= alpha componentwise."""
    return [tuple(b) for b in itertools.product(*(range(a + 1) for a in alpha))]


def _splittings(alpha: Exponents, parts: int) -> list[tuple[tuple[Exponents, ...], int]]:
    """Ways to write alpha as an ordered sum of `parts` multi-indices.

    Returns (split, multinomial coefficient) pairs; the coefficient is the
    product over coordinates of multinomials, i.e. the Leibniz weight of
    distributing d^alpha over `parts` factors.
    """
    if parts == 0:
        return [((), 1)] if all(a == 0 for a in alpha) else []
    if parts == 1:
        return [((alpha,), 1)]
    out = []
    for beta in _sub_multi_indices(alpha):
        remainder = tuple(a - b for a, b in zip(alpha, beta))
        weight = _binom_multi(alpha, beta)
        for rest, w in _splittings(remainder, parts - 1):
            out.append(((beta,) + rest, weight * w))
    return out


class PolyDiffOp:
    """Immutable polydifferential operator of fixed arity."""

    __slots__ = ("dim", "arity", "terms")

    def __init__(
        self,
        dim: int,
        arity: int,
        terms: Mapping[DerivKey, Polynomial] | None = None,
    ):
        if arity < 0:
            raise ValueError("arity must be non-negative")
        clean: dict[DerivKey, Polynomial] = {}
        if terms:
            for key, coeff in terms.items():
                key = tuple(tuple(a) for a in key)
                if len(key) != arity:
                    raise ValueError(f"derivative tuple {key} has wrong length for arity {arity}")
                for a in key:
                    if len(a) != dim or any(e < 0 for e in a):
                        raise ValueError(f"bad multi-index {a} for dim {dim}")
                if coeff.dim != dim:
                    raise ValueError("coefficient dimension mismatch")
                if coeff.is_zero():
                    continue
                acc = clean.get(key, Polynomial.zero(dim)) + coeff
                if acc.is_zero():
                    clean.pop(key, None)
                else:
                    clean[key] = acc
        object.__setattr__(self, "dim", dim)
        object.__setattr__(self, "arity", arity)
        object.__setattr__(self, "terms", clean)

    def __setattr__(self, name, value):
        raise AttributeError("PolyDiffOp is immutable")

    # -- constructors ------------------------------------------------------

    @classmethod
    def zero(cls, dim: int, arity: int) -> PolyDiffOp:
        return cls(dim, arity, {})

    @classmethod
    def from_polynomial(cls, p: Polynomial) -> PolyDiffOp:
        return cls(p.dim, 0, {(): p})

    @classmethod
    def multiplication(cls, dim: int) -> PolyDiffOp:
        """The product cochain m(a, b) = ab."""
        z = zero_exponents(dim)
        return cls(dim, 2, {(z, z): Polynomial.one(dim)})

    @classmethod
    def identity(cls, dim: int) -> PolyDiffOp:
        return cls(dim, 1, {(zero_exponents(dim),): Polynomial.one(dim)})

    @classmethod
    def single(
        cls,
        dim: int,
        derivs: Sequence[Exponents],
        coeff: Polynomial | Fraction | int = 1,
    ) -> PolyDiffOp:
        poly = coeff if isinstance(coeff, Polynomial) else Polynomial.constant(dim, coeff)
        return cls(dim, len(derivs), {tuple(tuple(a) for a in derivs): poly})

    # -- structure ----------------------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    def order(self) -> int:
        """Max total derivative degree taken in any one slot."""
        best = 0
        for key in self.terms:
            for a in key:
                best = max(best, sum(a))
        return best

    def coefficient_degree(self) -> int:
        return max((p.degree() for p in self.terms.values()), default=0)

    def __eq__(self, other):
        if not isinstance(other, PolyDiffOp):
            return NotImplemented
        return (
            self.dim == other.dim
            and self.arity == other.arity
            and self.terms == other.terms
        )

    def __hash__(self):
        return hash((self.dim, self.arity, frozenset(self.terms.items())))

    def __add__(self, other: PolyDiffOp) -> PolyDiffOp:
        self._check_compatible(other)
        terms = dict(self.terms)
        for key, c in other.terms.items():
            terms[key] = terms.get(key, Polynomial.zero(self.dim)) + c
        return PolyDiffOp(self.dim, self.arity, terms)

    def __sub__(self, other: PolyDiffOp) -> PolyDiffOp:
        return self + (-other)

    def __neg__(self) -> PolyDiffOp:
        return PolyDiffOp(self.dim, self.arity, {k: -c for k, c in self.terms.items()})

    def scaled(self, factor: Polynomial | Fraction | int) -> PolyDiffOp:
        return PolyDiffOp(self.dim, self.arity, {k: c * factor for k, c in self.terms.items()})

    def _check_compatible(self, other: PolyDiffOp):
        if self.dim != other.dim:
            raise ValueError(f"dimension mismatch: {self.dim} vs {other.dim}")
        if self.arity != other.arity:
            raise ValueError(f"arity mismatch: {self.arity} vs {other.arity}")

    # -- action -------------------------------------------------------------

    def apply(self, args: Sequence[Polynomial]) -> Polynomial:
        """Evaluate on a tuple of polynomials; multilinear and exact."""
        if len(args) != self.arity:
            raise ValueError(f"arity {self.arity} operator applied to {len(args)} arguments")
        for a in args:
            if a.dim != self.dim:
                raise ValueError("argument dimension mismatch")
        total = Polynomial.zero(self.dim)
        for key, coeff in self.terms.items():
            value = coeff
            for alpha, arg in zip(key, args):
                value = value * arg.partial_multi(alpha)
                if value.is_zero():
                    break
            total = total + value
        return total

    def compose_at(self, slot: int, inner: PolyDiffOp) -> PolyDiffOp:
        """Insert `inner` into argument slot `slot` (0-based), no sign.

        The slot's derivatives are pushed through the inner operator's
        output by the generalized Leibniz rule, distributing over the
        inner coefficient and the inner slots; the result is canonical.
        """
        if not 0 <= slot < self.arity:
            raise IndexError(f"slot {slot} out of range for arity {self.arity}")
        if inner.dim != self.dim:
            raise ValueError("dimension mismatch")
        j = inner.arity
        out_terms: dict[DerivKey, Polynomial] = {}
        for key, c_out in self.terms.items():
            alpha = key[slot]
            for in_key, c_in in inner.terms.items():
                for split, weight in _splittings(alpha, j + 1):
                    gamma0, gammas = split[0], split[1:]
                    coeff = c_out * c_in.partial_multi(gamma0)
                    if coeff.is_zero():
                        continue
                    if weight != 1:
                        coeff = coeff * weight
                    inserted = tuple(
                        add_exponents(b, g) for b, g in zip(in_key, gammas)
                    )
                    new_key = key[:slot] + inserted + key[slot + 1 :]
                    acc = out_terms.get(new_key, Polynomial.zero(self.dim)) + coeff
                    if acc.is_zero():
                        out_terms.pop(new_key, None)
                    else:
                        out_terms[new_key] = acc
        return PolyDiffOp(self.dim, self.arity + j - 1, out_terms)

    def sorted_terms(self) -> list[tuple[DerivKey, Polynomial]]:
        return sorted(self.terms.items())

    def __repr__(self):
        body = "; ".join(f"{key} <- {c.to_string()}" for key, c in self.sorted_terms())
        return f"PolyDiffOp(dim={self.dim}, arity={self.arity}, [{body}])"


# -- complex structure --------------------------------------------------------


def hochschild_d(op: PolyDiffOp) -> PolyDiffOp:
    """Hochschild differential, arity k -> k+1.

    d phi (f_1..f_{k+1}) = f_1 phi(f_2..) + sum_j (-1)^j phi(.., f_j f_{j+1}, ..)
                          + (-1)^(k+1) phi(..) f_{k+1}.
    """
    k = op.arity
    dim = op.dim
    z = zero_exponents(dim)
    terms: dict[DerivKey, Polynomial] = {}

    def put(key: DerivKey, coeff: Polynomial):
        if coeff.is_zero():
            return
        acc = terms.get(key, Polynomial.zero(dim)) + coeff
        if acc.is_zero():
            terms.pop(key, None)
        else:
            terms[key] = acc

    sign_last = -1 if (k + 1) % 2 else 1
    for key, c in op.terms.items():
        put((z,) + key, c)
        put(key + (z,), c * sign_last)
        for j in range(1, k + 1):
            alpha = key[j - 1]
            sign = -1 if j % 2 else 1
            for beta in _sub_multi_indices(alpha):
                rest = tuple(a - b for a, b in zip(alpha, beta))
                weight = _binom_multi(alpha, beta) * sign
                new_key = key[: j - 1] + (beta, rest) + key[j:]
                put(new_key, c * weight)
    return PolyDiffOp(dim, k + 1, terms)


def cup(phi: PolyDiffOp, psi: PolyDiffOp) -> PolyDiffOp:
    """Cup product with sign (-1)^(ij):  (phi u psi) = (-1)^(ij) phi(..)psi(..)."""
    if phi.dim != psi.dim:
        raise ValueError("dimension mismatch")
    sign = -1 if (phi.arity * psi.arity) % 2 else 1
    terms: dict[DerivKey, Polynomial] = {}
    for k1, c1 in phi.terms.items():
        for k2, c2 in psi.terms.items():
            key = k1 + k2
            coeff = c1 * c2 * sign
            acc = terms.get(key, Polynomial.zero(phi.dim)) + coeff
            if acc.is_zero():
                terms.pop(key, None)
            else:
                terms[key] = acc
    return PolyDiffOp(phi.dim, phi.arity + psi.arity, terms)


def _circ(phi: PolyDiffOp, psi: PolyDiffOp) -> PolyDiffOp:
    """Insertion sum over all slots; empty (zero) for arity-0 phi."""
    i, j = phi.arity, psi.arity
    result = PolyDiffOp.zero(phi.dim, max(i + j - 1, 0))
    for l in range(i):
        piece = phi.compose_at(l, psi)
        if (l * (j - 1)) % 2:
            piece = -piece
        result = result + piece
    return result


def gerst_circ(phi: PolyDiffOp, psi: PolyDiffOp) -> PolyDiffOp:
    """Gerstenhaber circle product: signed insertion of psi into phi."""
    if phi.dim != psi.dim:
        raise ValueError("dimension mismatch")
    if phi.arity == 0:
        raise ValueError("cannot insert into an arity-0 operator")
    return _circ(phi, psi)


def gerst_bracket(phi: PolyDiffOp, psi: PolyDiffOp) -> PolyDiffOp:
    """[phi, psi] = phi o psi - (-1)^((i-1)(j-1)) psi o phi."""
    if phi.dim != psi.dim:
        raise ValueError("dimension mismatch")
    i, j = phi.arity, psi.arity
    sign = -1 if ((i - 1) * (j - 1)) % 2 else 1
    second = _circ(psi, phi)
    if sign == 1:
        return _circ(phi, psi) - second
    return _circ(phi, psi) + second


def hkr_to_cochain(P: Polyvector) -> PolyDiffOp:
    """Antisymmetrized first-order cochain of a polyvector field.

    Degree k maps to the arity-k operator
    (1/k!) sum_sigma sgn(sigma) X_1(g_sigma(1)) ... X_k(g_sigma(k)),
    expanded on the coordinate decomposition of P.
    """
    dim = P.dim
    k = P.degree
    if k == 0:
        return PolyDiffOp.from_polynomial(P.as_polynomial())
    terms: dict[DerivKey, Polynomial] = {}
    norm = Fraction(1, math.factorial(k))
    units = [tuple(1 if t == s else 0 for t in range(dim)) for s in range(dim)]
    for idx, c in P.components.items():
        for sigma in itertools.permutations(range(k)):
            sign = _perm_sign(sigma)
            derivs: list[Exponents] = [zero_exponents(dim)] * k
            for a in range(k):
                derivs[sigma[a]] = units[idx[a]]
            key = tuple(derivs)
            coeff = c * (norm * sign)
            acc = terms.get(key, Polynomial.zero(dim)) + coeff
            if acc.is_zero():
                terms.pop(key, None)
            else:
                terms[key] = acc
    return PolyDiffOp(dim, k, terms)


def _perm_sign(sigma: Sequence[int]) -> int:
    sign = 1
    for a in range(len(sigma)):
        for b in range(a + 1, len(sigma)):
            if sigma[a] > sigma[b]:
                sign = -sign
    return sign


# -- restriction to the generated subalgebra ----------------------------------


def generator_monomials(
    system: "IntegrableSystem", max_degree: int
) -> list[tuple[Exponents, Polynomial]]:
    """Monomials in the generators up to the given total degree.

    Returns (exponent tuple over generators, expanded polynomial) pairs,
    in lex order on the exponents; includes the constant 1.
    """
    gens = list(system.generators)
    n = len(gens)
    powers = []
    for g in gens:
        row = [Polynomial.one(g.dim)]
        for _ in range(max_degree):
            row.append(row[-1] * g)
        powers.append(row)
    out = []
    for exps in exponents_upto(n, max_degree):
        poly = Polynomial.one(gens[0].dim)
        for i, e in enumerate(exps):
            if e:
                poly = poly * powers[i][e]
        out.append((exps, poly))
    return out


def restricted_values(
    op: PolyDiffOp, system: "IntegrableSystem", slot_degree: int
) -> dict[tuple[Exponents, ...], Polynomial]:
    """Values of op on all tuples of generator monomials up to slot_degree.

    The table keyed by per-slot generator exponents; "vanishes on the
    subalgebra" is the table being all zero at slot_degree order(op)+1.
    """
    mons = generator_monomials(system, slot_degree)
    table: dict[tuple[Exponents, ...], Polynomial] = {}
    for combo in itertools.product(mons, repeat=op.arity):
        key = tuple(e for e, _ in combo)
        table[key] = op.apply([p for _, p in combo])
    return table


def vanishes_on_generators(op: PolyDiffOp, system: "IntegrableSystem") -> bool:
    """Whether op restricts to zero on the subalgebra the generators span.

    Decided on the finite monomial table with slot degree order(op)+1,
    which determines the restriction of an operator of that order.
    """
    table = restricted_values(op, system, op.order() + 1)
    return all(p.is_zero() for p in table.values())
