import random
from fractions import Fraction

import pytest
from helpers import (
    canonical_pi2,
    canonical_pi4,
    p2,
    p4,
    plane_pi3,
    rand_op,
    rand_poly,
    so3_pi,
)

from starobs import (
    FormalDiffeo,
    PolyDiffOp,
    Polynomial,
    StarProduct,
    compose_diffeo,
    extend_one_order,
    gauge_transform,
    hochschild_d,
    invert_diffeo,
    moyal_star,
    parse_polynomial,
    poisson_bracket,
)

P1 = lambda t: parse_polynomial(t, ["x"])


def h_energy():
    return p2("x^2 + p^2") * Fraction(1, 2)


# -- the constant-coefficient product ---------------------------------------------


def test_first_order_asymmetry():
    star = moyal_star(canonical_pi2(), 2)
    assert star.eval(p2("x"), p2("p")).coefficients[:2] == (p2("x*p"), Polynomial.constant(2, Fraction(1, 2)))
    assert star.eval(p2("p"), p2("x")).coefficients[:2] == (p2("x*p"), Polynomial.constant(2, Fraction(-1, 2)))


def test_energy_square():
    star = moyal_star(canonical_pi2(), 2)
    H = h_energy()
    series = star.eval(H, H)
    assert series.coefficient(0) == H * H
    assert series.coefficient(1).is_zero()
    assert series.coefficient(2) == Polynomial.constant(2, Fraction(1, 4))


def test_unit_is_transparent():
    star = moyal_star(canonical_pi2(), 4)
    f = p2("x^2*p - 3*x")
    series = star.eval(f, Polynomial.one(2))
    assert series.coefficient(0) == f
    assert all(series.coefficient(k).is_zero() for k in range(1, 5))


def test_requires_constant_bivector():
    with pytest.raises(ValueError):
        moyal_star(so3_pi(), 2)


def test_associative_to_full_order():
    assert moyal_star(canonical_pi2(), 4).certified_order() == 4
    assert moyal_star(canonical_pi4(), 4).certified_order() == 4


def test_momentum_subalgebra_is_transparent():
    star = moyal_star(canonical_pi4(), 3)
    series = star.eval(p4("p1^2"), p4("p2^3"))
    assert series.coefficient(0) == p4("p1^2*p2^3")
    assert all(series.coefficient(k).is_zero() for k in range(1, 4))


def test_trivial_star_multiplies():
    star = StarProduct.trivial(2, 3)
    f, g = p2("x*p"), p2("x - p^2")
    series = star.eval(f, g)
    assert series.coefficient(0) == f * g
    assert all(series.coefficient(k).is_zero() for k in range(1, 4))


# -- associativity residuals --------------------------------------------------------


def bad_star():
    return StarProduct(1, 2, [PolyDiffOp.single(1, [(1,), (1,)]), PolyDiffOp.zero(1, 2)])


def test_residuals_of_bad_star():
    star = bad_star()
    assert star.assoc_residual(1).is_zero()
    r2 = star.assoc_residual(2)
    assert r2.apply([P1("x"), P1("x^2"), P1("x^3")]) == P1("-12*x^2")
    assert star.certified_order() == 1


def test_trivial_star_residuals_vanish():
    star = StarProduct.trivial(3, 3)
    assert all(star.assoc_residual(n).is_zero() for n in range(4))


def test_residual_order_range():
    with pytest.raises(IndexError):
        bad_star().assoc_residual(3)


# -- commutators ----------------------------------------------------------------------


def test_canonical_commutator():
    star = moyal_star(canonical_pi2(), 3)
    series = star.commutator(p2("x"), p2("p"))
    assert series.coefficient(0).is_zero()
    assert series.coefficient(1) == Polynomial.one(2)
    assert series.coefficient(2).is_zero()
    assert series.coefficient(3).is_zero()


def test_self_commutator_vanishes():
    star = moyal_star(canonical_pi2(), 3)
    H = h_energy()
    series = star.commutator(H, H)
    assert all(c.is_zero() for c in series.coefficients)


def test_momentum_commutators_vanish():
    star = moyal_star(canonical_pi4(), 3)
    series = star.commutator(p4("p1^2"), p4("p2^3"))
    assert all(c.is_zero() for c in series.coefficients)


def test_first_commutator_coefficient_is_poisson_bracket():
    rng = random.Random(31)
    star = moyal_star(canonical_pi4(), 2)
    for _ in range(25):
        f, g = rand_poly(rng, 4), rand_poly(rng, 4)
        assert star.commutator(f, g).coefficient(1) == poisson_bracket(
            canonical_pi4(), f, g
        )


# -- formal diffeomorphisms -------------------------------------------------------------


def test_geometric_series_inverse():
    D1 = PolyDiffOp.single(1, [(1,)], P1("x"))
    D = FormalDiffeo.from_parts(1, 3, {1: D1})
    E = invert_diffeo(D)
    assert E.term(1) == -D1
    assert E.term(2) == D1.compose_at(0, D1)
    assert compose_diffeo(D, E).is_identity()
    assert compose_diffeo(E, D).is_identity()


def test_second_order_inverse_coefficient():
    D1 = PolyDiffOp.single(1, [(1,)], P1("x"))
    D2 = PolyDiffOp.single(1, [(2,)], Fraction(1, 3))
    E = invert_diffeo(FormalDiffeo(1, 2, [D1, D2]))
    assert E.term(2) == D1.compose_at(0, D1) - D2


def test_identity_inverse():
    D = FormalDiffeo.identity(2, 3)
    assert invert_diffeo(D) == D


def test_inverse_random_two_sided():
    rng = random.Random(32)
    for _ in range(15):
        dim = rng.choice([1, 2])
        D = FormalDiffeo(dim, 3, [rand_op(rng, dim, 1, order=2) for _ in range(3)])
        E = invert_diffeo(D)
        assert compose_diffeo(D, E).is_identity()
        assert compose_diffeo(E, D).is_identity()


# -- gauge action -------------------------------------------------------------------------


def test_gauge_of_trivial_by_second_derivative():
    D = FormalDiffeo.from_parts(1, 2, {1: PolyDiffOp.single(1, [(2,)], Fraction(1, 2))})
    out = gauge_transform(StarProduct.trivial(1, 2), D)
    assert out.term(1) == -PolyDiffOp.single(1, [(1,), (1,)])
    series = out.eval(P1("x"), P1("x"))
    assert series.coefficient(0) == P1("x^2")
    assert series.coefficient(1) == Polynomial.constant(1, -1)


def test_gauge_of_trivial_by_derivation():
    D = FormalDiffeo.from_parts(1, 2, {1: PolyDiffOp.single(1, [(1,)])})
    out = gauge_transform(StarProduct.trivial(1, 2), D)
    assert out.term(1).is_zero()
    assert out.term(2) == PolyDiffOp.single(1, [(1,), (1,)])


def test_identity_gauge_is_noop():
    star = moyal_star(canonical_pi2(), 3)
    assert gauge_transform(star, FormalDiffeo.identity(2, 3)) == star


def test_gauge_round_trip_random():
    rng = random.Random(33)
    star = moyal_star(canonical_pi2(), 3)
    for _ in range(8):
        D = FormalDiffeo(2, 3, [rand_op(rng, 2, 1, order=2) for _ in range(3)])
        there = gauge_transform(star, D)
        back = gauge_transform(there, invert_diffeo(D))
        assert back == star


def test_gauge_preserves_associativity_order():
    rng = random.Random(34)
    for base in (moyal_star(canonical_pi2(), 3), StarProduct.trivial(2, 3)):
        D = FormalDiffeo(2, 3, [rand_op(rng, 2, 1, order=2) for _ in range(3)])
        out = gauge_transform(base, D)
        # recompute residuals from scratch rather than trusting the cache
        fresh = StarProduct(out.dim, out.order, out.corrections)
        assert fresh.certified_order() == 3


def test_gauge_order_mismatch():
    with pytest.raises(ValueError):
        gauge_transform(moyal_star(canonical_pi2(), 2), FormalDiffeo.identity(2, 3))


# -- one-order extension --------------------------------------------------------------------


def test_extending_trivial_star():
    result = extend_one_order(StarProduct.trivial(2, 2), 1, 1)
    assert result.solved
    assert result.particular.is_zero()
    assert result.extended.certified_order() == 3


def test_extending_truncated_exponential_product():
    full = moyal_star(canonical_pi2(), 2)
    result = extend_one_order(moyal_star(canonical_pi2(), 1), 0, 2)
    assert result.solved
    # the found candidate differs from the canonical continuation by a cocycle
    diff = result.particular - full.term(2)
    assert hochschild_d(diff).is_zero()
    # and the canonical continuation itself satisfies the constraint
    assert StarProduct(2, 2, [full.term(1), full.term(2)]).assoc_residual(2).is_zero()


def test_extension_freedom_contains_commuting_derivation_pair():
    star = moyal_star(plane_pi3(), 1)
    result = extend_one_order(star, 0, 2)
    assert result.solved
    cocycle = PolyDiffOp.single(3, [(0, 1, 0), (0, 0, 1)]) - PolyDiffOp.single(
        3, [(0, 0, 1), (0, 1, 0)]
    )
    assert hochschild_d(cocycle).is_zero()
    shifted = StarProduct(3, 2, [star.term(1), result.particular + cocycle])
    assert shifted.assoc_residual(2).is_zero()


def test_extension_post_check_property():
    # every solved extension already passed its built-in residual check;
    # verify independently for a couple of bases
    for base in (moyal_star(canonical_pi2(), 1), StarProduct.trivial(3, 1)):
        result = extend_one_order(base, 1, 2)
        if result.solved:
            fresh = StarProduct(
                result.extended.dim, result.extended.order, result.extended.corrections
            )
            assert fresh.assoc_residual(result.new_order).is_zero()


def test_extension_undecided_when_ansatz_too_small():
    # the truncated exponential product needs order-2 operators at the
    # next order; an order-1 ansatz must report undecided, not failure
    result = extend_one_order(moyal_star(canonical_pi2(), 1), 0, 1)
    assert result.status == "undecided"
    assert result.particular is None


def test_extension_cocycle_lies_in_reported_freedom_span():
    # the commuting-derivation cocycle must be expressible in the
    # nullspace basis the solver reports alongside the particular solution
    from starobs.linsolve import solve_sparse

    star = moyal_star(plane_pi3(), 1)
    result = extend_one_order(star, 0, 2)
    assert result.solved
    cocycle = PolyDiffOp.single(3, [(0, 1, 0), (0, 0, 1)]) - PolyDiffOp.single(
        3, [(0, 0, 1), (0, 1, 0)]
    )

    def coords(op):
        out = {}
        for key, poly in op.terms.items():
            for mono, c in poly.terms.items():
                out[(key, mono)] = c
        return out

    target = coords(cocycle)
    basis_coords = [coords(op) for op in result.freedom]
    row_keys = sorted(set(target) | {k for b in basis_coords for k in b})
    row_index = {k: r for r, k in enumerate(row_keys)}
    rows = [dict() for _ in row_keys]
    for ci, b in enumerate(basis_coords):
        for k, v in b.items():
            rows[row_index[k]][ci] = v
    rhs = [target.get(k, Fraction(0)) for k in row_keys]
    solution = solve_sparse(rows, rhs, len(basis_coords))
    assert solution.solved


def test_star_rejects_wrong_arity_corrections():
    with pytest.raises(ValueError):
        StarProduct(2, 1, [PolyDiffOp.single(2, [(1, 0)])])


def test_diffeo_rejects_wrong_arity_terms():
    with pytest.raises(ValueError):
        FormalDiffeo(2, 1, [PolyDiffOp.single(2, [(1, 0), (0, 1)])])


def test_diffeo_apply_series_cauchy():
    D = FormalDiffeo.from_parts(1, 2, {1: PolyDiffOp.single(1, [(1,)])})
    from starobs import TruncatedSeries

    series = TruncatedSeries(2, [P1("x^2"), P1("x"), P1("1")])
    out = D.apply_series(series)
    assert out.coefficient(0) == P1("x^2")
    assert out.coefficient(1) == P1("x") + P1("2*x")
    assert out.coefficient(2) == P1("1") + P1("1")


def test_gauge_transform_matches_value_level_oracle():
    # the operator-level conjugation against a brute-force series
    # computation of D^-1(D(a) * D(b)) on random arguments
    rng = random.Random(35)
    star = moyal_star(canonical_pi2(), 3)
    for _ in range(6):
        D = FormalDiffeo(2, 3, [rand_op(rng, 2, 1, order=2) for _ in range(3)])
        gauged = gauge_transform(star, D)
        E = invert_diffeo(D)
        for _ in range(3):
            a, b = rand_poly(rng, 2), rand_poly(rng, 2)
            da, db = D.apply(a), D.apply(b)
            product = []
            for n in range(4):
                acc = Polynomial.zero(2)
                for i in range(n + 1):
                    for j in range(n - i + 1):
                        k = n - i - j
                        acc = acc + star.term(i).apply(
                            [da.coefficient(j), db.coefficient(k)]
                        )
                product.append(acc)
            from starobs import TruncatedSeries

            expected = E.apply_series(TruncatedSeries(3, product))
            assert gauged.eval(a, b) == expected
