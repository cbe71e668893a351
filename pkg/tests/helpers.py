"""Shared builders for the test suite: parsing shortcuts, random element
generators and the three reference scenarios used across modules."""

from __future__ import annotations

import itertools
import random
from fractions import Fraction

from starobs import (
    IntegrableSystem,
    PolyDiffOp,
    Polynomial,
    Polyvector,
    moyal_star,
    parse_polynomial,
)

R2 = ["x", "p"]
R3 = ["x", "y", "z"]
R4 = ["x1", "x2", "p1", "p2"]
R4ZW = ["x", "y", "z", "w"]


def p2(text):
    return parse_polynomial(text, R2)


def p3(text):
    return parse_polynomial(text, R3)


def p4(text):
    return parse_polynomial(text, R4)


def pzw(text):
    return parse_polynomial(text, R4ZW)


def canonical_pi2() -> Polyvector:
    return Polyvector.bivector(2, {(0, 1): 1})


def canonical_pi4() -> Polyvector:
    return Polyvector.bivector(4, {(0, 2): 1, (1, 3): 1})


def so3_pi() -> Polyvector:
    return Polyvector(
        3,
        2,
        {
            (0, 1): p3("z"),
            (1, 2): p3("x"),
            (0, 2): p3("-y"),
        },
    )


def non_poisson_pi() -> Polyvector:
    return Polyvector(3, 2, {(0, 1): p3("z"), (1, 2): p3("y")})


def plane_pi3() -> Polyvector:
    """Constant rank-2 bivector on three coordinates (z is a Casimir)."""
    return Polyvector.bivector(3, {(0, 1): 1})


def plane_pi4() -> Polyvector:
    """Constant rank-2 bivector on four coordinates (z, w are Casimirs)."""
    return Polyvector.bivector(4, {(0, 1): 1})


def flat_scenario(order: int = 4):
    """Star commutative on the subalgebra: nothing to eliminate."""
    star = moyal_star(plane_pi3(), order)
    system = IntegrableSystem(plane_pi3(), [p3("y"), p3("z")])
    return star, system


def removable_scenario():
    """Nonzero order-2 class that a gauge can remove."""
    extra = PolyDiffOp.single(3, [(0, 1, 0), (0, 0, 1)]) - PolyDiffOp.single(
        3, [(0, 0, 1), (0, 1, 0)]
    )
    star = moyal_star(plane_pi3(), 2).plus_term(2, extra)
    system = IntegrableSystem(plane_pi3(), [p3("y"), p3("z")])
    return star, system


def obstructed_scenario():
    """Nonzero order-2 class on Casimir generators: removable by nothing."""
    extra = PolyDiffOp.single(4, [(0, 0, 1, 0), (0, 0, 0, 1)]) - PolyDiffOp.single(
        4, [(0, 0, 0, 1), (0, 0, 1, 0)]
    )
    star = moyal_star(plane_pi4(), 2).plus_term(2, extra)
    system = IntegrableSystem(plane_pi4(), [pzw("z"), pzw("w")])
    return star, system


# -- random element generators ---------------------------------------------------


def rand_fraction(rng: random.Random) -> Fraction:
    value = Fraction(rng.randint(-4, 4), rng.randint(1, 3))
    return value if value else Fraction(1)


def rand_poly(rng: random.Random, dim: int, degree: int = 2, terms: int = 2) -> Polynomial:
    out = {}
    for _ in range(terms):
        exps = [0] * dim
        for _ in range(rng.randint(0, degree)):
            exps[rng.randrange(dim)] += 1
        out[tuple(exps)] = rand_fraction(rng)
    return Polynomial(dim, out)


def rand_multi_index(rng: random.Random, dim: int, order: int) -> tuple[int, ...]:
    exps = [0] * dim
    for _ in range(rng.randint(0, order)):
        exps[rng.randrange(dim)] += 1
    return tuple(exps)


def rand_op(
    rng: random.Random,
    dim: int,
    arity: int,
    order: int = 2,
    coeff_degree: int = 1,
    terms: int = 2,
) -> PolyDiffOp:
    acc = PolyDiffOp.zero(dim, arity)
    for _ in range(terms):
        key = tuple(rand_multi_index(rng, dim, order) for _ in range(arity))
        acc = acc + PolyDiffOp.single(
            dim, key, rand_poly(rng, dim, coeff_degree, terms=1)
        )
    return acc


def rand_polyvector(rng: random.Random, dim: int, degree: int) -> Polyvector:
    comps = {
        idx: rand_poly(rng, dim) for idx in itertools.combinations(range(dim), degree)
    }
    return Polyvector(dim, degree, comps)


def rand_vector_field(rng: random.Random, dim: int, degree: int = 1) -> Polyvector:
    return Polyvector(
        dim, 1, {(i,): rand_poly(rng, dim, degree) for i in range(dim)}
    )


# -- degree-tolerant polyvector comparison (zero brackets may clamp degree) -------


def pv_equal(a: Polyvector, b: Polyvector) -> bool:
    if a.degree != b.degree:
        return a.is_zero() and b.is_zero()
    return (a - b).is_zero()


def pv_add(a: Polyvector, b: Polyvector) -> Polyvector:
    if a.degree != b.degree:
        if a.is_zero():
            return b
        if b.is_zero():
            return a
        raise AssertionError("incompatible degrees on nonzero polyvectors")
    return a + b


def sign(exponent: int) -> int:
    return -1 if exponent % 2 else 1


# -- arity-tolerant operator comparison (brackets of two arity-0 operators
# -- clamp their formal arity -1 to 0, so zero results may disagree in arity)


def op_equal(a: PolyDiffOp, b: PolyDiffOp) -> bool:
    if a.arity != b.arity:
        return a.is_zero() and b.is_zero()
    return (a - b).is_zero()


def op_add(a: PolyDiffOp, b: PolyDiffOp) -> PolyDiffOp:
    if a.arity != b.arity:
        if a.is_zero():
            return b
        if b.is_zero():
            return a
        raise AssertionError("incompatible arities on nonzero operators")
    return a + b
