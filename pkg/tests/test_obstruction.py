import random
from fractions import Fraction

import pytest
from helpers import (
    canonical_pi2,
    canonical_pi4,
    flat_scenario,
    obstructed_scenario,
    p2,
    p3,
    p4,
    pzw,
    rand_poly,
    removable_scenario,
)

from starobs import (
    OBSTRUCTED,
    TRIVIALIZED,
    UNDECIDED,
    Bounds,
    FormalDiffeo,
    IntegrableSystem,
    PolyDiffOp,
    Polynomial,
    Polyvector,
    RelativeClass,
    StarProduct,
    cocycle_cascade_check,
    d_hor,
    eliminate_to_order,
    exactness_solve,
    gauge_step,
    gauge_transform,
    hkr_to_cochain,
    lift_witness,
    moyal_star,
    obstruction_class,
    restricted_values,
    validate_system,
    vanishes_on_generators,
)

BOUNDS = Bounds(degree=2, op_order=2)


def two_e12(dim: int) -> RelativeClass:
    return RelativeClass(dim, 2, 2, {(0, 1): Polynomial.constant(dim, 2)})


# -- validation -----------------------------------------------------------------


def test_canonical_momenta_validate():
    system = IntegrableSystem(canonical_pi4(), [p4("p1"), p4("p2")])
    assert validate_system(system).ok


def test_dependent_generators_rejected():
    system = IntegrableSystem(canonical_pi2(), [p2("x"), p2("x^2")])
    report = validate_system(system)
    assert not report.ok and not report.independent


def test_noncommuting_generators_rejected():
    system = IntegrableSystem(canonical_pi2(), [p2("x"), p2("p")])
    report = validate_system(system)
    assert not report.ok
    (i, j, bracket), = report.commuting_failures
    assert (i, j) == (0, 1) and bracket == Polynomial.one(2)


def test_non_poisson_bivector_rejected():
    pi = Polyvector(3, 2, {(0, 1): p3("z"), (1, 2): p3("y")})
    report = validate_system(IntegrableSystem(pi, [p3("z")]))
    assert not report.ok and not report.jacobi_ok


def test_validation_witness_point_recorded():
    system = IntegrableSystem(canonical_pi4(), [p4("p1"), p4("p2")])
    report = validate_system(system, random.Random(3))
    assert report.witness_minor is not None
    assert report.witness_point is not None


# -- obstruction classes ----------------------------------------------------------


def test_flat_scenario_class_vanishes():
    star, system = flat_scenario(order=2)
    assert obstruction_class(star, system, 2).is_zero()


def test_removable_scenario_class():
    star, system = removable_scenario()
    assert obstruction_class(star, system, 2) == two_e12(3)


def test_obstructed_scenario_class():
    star, system = obstructed_scenario()
    assert obstruction_class(star, system, 2) == two_e12(4)


def test_class_requires_certificate():
    # adding a symmetric junk term at order 1 breaks associativity at
    # order 2, so the certificate check must refuse
    star, system = removable_scenario()
    broken = star.plus_term(1, PolyDiffOp.single(3, [(0, 1, 0), (0, 1, 0)]))
    with pytest.raises(ValueError):
        obstruction_class(broken, system, 2)


def test_class_requires_lower_orders_flat():
    # a symmetric first-order term that survives on the subalgebra
    D = FormalDiffeo.from_parts(2, 2, {1: PolyDiffOp.single(2, [(2, 0)], Fraction(-1, 2))})
    star = gauge_transform(StarProduct.trivial(2, 2), D)
    system = IntegrableSystem(canonical_pi2(), [p2("x")])
    assert not vanishes_on_generators(star.term(1), system)
    with pytest.raises(ValueError, match="order 1"):
        obstruction_class(star, system, 2)


def test_class_matches_commutator_coefficients():
    # independent evaluation path: the truncated commutator series
    for star, system in (removable_scenario(), obstructed_scenario()):
        chi = obstruction_class(star, system, 2)
        gens = system.generators
        for i in range(len(gens)):
            for j in range(i + 1, len(gens)):
                series = star.commutator(gens[i], gens[j])
                assert series.coefficient(1).is_zero()
                assert series.coefficient(2) == chi.component((i, j))


# -- closedness -------------------------------------------------------------------


def test_cascade_flat():
    star, system = flat_scenario(order=2)
    report = cocycle_cascade_check(star, system, 2)
    assert report.ok


def test_cascade_removable():
    star, system = removable_scenario()
    report = cocycle_cascade_check(star, system, 2)
    assert report.cochain_closed and report.class_closed


def test_cascade_obstructed():
    star, system = obstructed_scenario()
    report = cocycle_cascade_check(star, system, 2)
    assert report.ok


# -- exactness ---------------------------------------------------------------------


def test_zero_class_solves_trivially():
    _, system = removable_scenario()
    result = exactness_solve(system, RelativeClass.zero(3, 2, 2), 2)
    assert result.solved and result.witness.is_zero()


def test_removable_class_is_exact():
    _, system = removable_scenario()
    result = exactness_solve(system, two_e12(3), 2)
    assert result.solved
    assert d_hor(system, result.witness) == two_e12(3)


def test_obstructed_class_zero_image_certificate():
    _, system = obstructed_scenario()
    for bound in (1, 2, 4):
        result = exactness_solve(system, two_e12(4), bound)
        assert not result.solved
        assert result.certificate == "zero_image"


def test_rank_infeasibility_at_tiny_bound():
    # constant components have zero bracket with everything, so the
    # degree-0 ansatz cannot hit a nonzero class; this is bound-limited
    _, system = removable_scenario()
    result = exactness_solve(system, two_e12(3), 0)
    assert not result.solved
    assert result.certificate == "rank_at_bound"


def test_unclosed_class_rejected():
    # with only two generators every degree-2 class sits in top degree;
    # a third generator leaves room for d_hor to see non-closedness
    pi = Polyvector.bivector(4, {(0, 1): 1})
    system = IntegrableSystem(pi, [pzw("y"), pzw("z"), pzw("w")])
    assert validate_system(system).ok
    bad = RelativeClass(4, 3, 2, {(1, 2): pzw("x")})
    assert not d_hor(system, bad).is_zero()
    with pytest.raises(ValueError):
        exactness_solve(system, bad, 2)


# -- lifting -----------------------------------------------------------------------


def test_coordinate_lift_closed_form():
    _, system = removable_scenario()
    Y = RelativeClass(3, 2, 1, {(1,): p3("-2*x")})
    lifted = lift_witness(system, Y, 2)
    assert lifted == Polyvector(3, 1, {(2,): p3("-2*x")})


def test_generic_lift_by_linear_solve():
    pi = canonical_pi4()
    system = IntegrableSystem(pi, [p4("p1"), p4("p2 + p1^2")])
    assert validate_system(system).ok
    Y = RelativeClass(4, 2, 1, {(0,): p4("x1"), (1,): p4("p1")})
    lifted = lift_witness(system, Y, 2)
    assert lifted is not None
    op = hkr_to_cochain(lifted)
    for j, g in enumerate(system.generators):
        assert op.apply([g]) == Y.component((j,))


def test_lift_zero_class():
    _, system = removable_scenario()
    assert lift_witness(system, RelativeClass.zero(3, 2, 1), 2).is_zero()


# -- gauge step --------------------------------------------------------------------


def test_gauge_step_removable_post_condition():
    star, system = removable_scenario()
    exact = exactness_solve(system, obstruction_class(star, system, 2), 2)
    step = gauge_step(star, system, 2, exact.witness, BOUNDS)
    assert step.solved
    transformed = gauge_transform(star, step.diffeo)
    assert vanishes_on_generators(transformed.term(2), system)
    assert vanishes_on_generators(transformed.term(1), system)


def test_gauge_step_zero_witness_is_symmetric_cleanup():
    star, system = flat_scenario(order=2)
    step = gauge_step(star, system, 2, RelativeClass.zero(3, 2, 1), BOUNDS)
    assert step.solved
    assert step.diffeo.is_identity()


def test_gauge_step_identity_on_momentum_subalgebra():
    star = moyal_star(canonical_pi4(), 3)
    system = IntegrableSystem(canonical_pi4(), [p4("p1"), p4("p2")])
    for n in (2, 3):
        step = gauge_step(star, system, n, RelativeClass.zero(4, 2, 1), BOUNDS)
        assert step.solved
        assert step.diffeo.is_identity()


# -- elimination --------------------------------------------------------------------


def test_eliminate_flat():
    star, system = flat_scenario(order=4)
    report = eliminate_to_order(star, system, 4, BOUNDS)
    assert report.status == TRIVIALIZED
    assert report.gauge.is_identity()
    assert all(c.is_zero() for c in report.classes)


def test_eliminate_removable():
    star, system = removable_scenario()
    report = eliminate_to_order(star, system, 2, BOUNDS)
    assert report.status == TRIVIALIZED
    assert not report.gauge.is_identity()
    assert report.classes[1] == two_e12(3)
    # independent audit of the reported product
    for k in (1, 2):
        op = report.star.term(k)
        table = restricted_values(op, system, op.order() + 1)
        assert all(v.is_zero() for v in table.values())
    # the reported gauge reproduces the reported product
    assert gauge_transform(star, report.gauge) == report.star


def test_eliminate_obstructed():
    star, system = obstructed_scenario()
    report = eliminate_to_order(star, system, 2, BOUNDS)
    assert report.status == OBSTRUCTED
    assert report.order_reached == 2
    assert report.classes[1] == two_e12(4)
    assert report.records[1].exactness.certificate == "zero_image"


def test_eliminate_undecided_when_bounds_exhausted():
    star, system = removable_scenario()
    report = eliminate_to_order(star, system, 2, Bounds(degree=0, op_order=2))
    assert report.status == UNDECIDED
    assert report.records[1].exactness.certificate == "rank_at_bound"


def test_eliminate_normalizes_first_order():
    # push a symmetric first-order term onto the subalgebra, then remove
    # it; the second-order cleanup needs fourth-order operators (the
    # inverse gauge squares the second derivative), hence the wide bound
    D = FormalDiffeo.from_parts(2, 2, {1: PolyDiffOp.single(2, [(2, 0)], Fraction(-1, 2))})
    star = gauge_transform(StarProduct.trivial(2, 2), D)
    system = IntegrableSystem(canonical_pi2(), [p2("x")])
    assert not vanishes_on_generators(star.term(1), system)
    report = eliminate_to_order(star, system, 2, Bounds(degree=2, op_order=4))
    assert report.status == TRIVIALIZED
    assert vanishes_on_generators(report.star.term(1), system)


def test_eliminate_rejects_invalid_system():
    star = moyal_star(canonical_pi2(), 2)
    system = IntegrableSystem(canonical_pi2(), [p2("x"), p2("p")])
    with pytest.raises(ValueError):
        eliminate_to_order(star, system, 2, BOUNDS)


def test_eliminate_requires_certificate():
    bad = StarProduct(
        3, 2, [PolyDiffOp.single(3, [(1, 0, 0), (1, 0, 0)]), PolyDiffOp.zero(3, 2)]
    )
    _, system = removable_scenario()
    with pytest.raises(ValueError):
        eliminate_to_order(bad, system, 2, BOUNDS)


def test_obstructed_is_monotone_in_bounds():
    star, system = obstructed_scenario()
    for bounds in (Bounds(1, 1), Bounds(2, 2), Bounds(3, 2)):
        report = eliminate_to_order(star, system, 2, bounds)
        assert report.status == OBSTRUCTED


# -- gauge covariance of the classes ---------------------------------------------------


def test_class_shift_is_exact_for_derivation_gauges():
    # a first-order derivation gauge shifts the order-2 class by the
    # horizontal differential of the generator values of the field
    rng = random.Random(41)
    star, system = removable_scenario()
    chi = obstruction_class(star, system, 2)
    for _ in range(10):
        field = Polyvector(
            3, 1, {(i,): rand_poly(rng, 3, degree=1) for i in range(3)}
        )
        D = FormalDiffeo.from_parts(3, 2, {1: hkr_to_cochain(field)})
        moved = gauge_transform(star, D)
        values = RelativeClass(
            3,
            2,
            1,
            {
                (j,): hkr_to_cochain(field).apply([g])
                for j, g in enumerate(system.generators)
            },
        )
        shifted = obstruction_class(moved, system, 2)
        assert shifted == chi + d_hor(system, values)


def test_commutative_star_stays_flat_under_admissible_gauges():
    rng = random.Random(42)
    star, system = flat_scenario(order=3)
    for _ in range(5):
        # every term carries a transverse derivative, so each D_k kills
        # the subalgebra and the commutator table must stay flat
        parts = {}
        for k in (1, 2):
            alpha = [rng.randint(1, 2), rng.randint(0, 1), rng.randint(0, 1)]
            parts[k] = PolyDiffOp.single(3, [tuple(alpha)], rand_poly(rng, 3, 1, terms=1))
        D = FormalDiffeo.from_parts(3, 3, parts)
        moved = gauge_transform(star, D)
        gens = system.generators
        for i in range(len(gens)):
            for j in range(i + 1, len(gens)):
                series = moved.commutator(gens[i], gens[j])
                assert all(c.is_zero() for c in series.coefficients)


def test_eliminate_removes_third_order_class():
    # same removable geometry, planted one order higher: exercises the
    # higher-order branch where the witness rides at slot n-1 = 2
    extra = PolyDiffOp.single(3, [(0, 1, 0), (0, 0, 1)]) - PolyDiffOp.single(
        3, [(0, 0, 1), (0, 1, 0)]
    )
    pi = Polyvector.bivector(3, {(0, 1): 1})
    star = moyal_star(pi, 3).plus_term(3, extra)
    system = IntegrableSystem(pi, [p3("y"), p3("z")])
    assert star.certified_order() == 3
    chi = obstruction_class(star, system, 3)
    assert chi == two_e12(3)
    report = eliminate_to_order(star, system, 3, BOUNDS)
    assert report.status == TRIVIALIZED
    assert not report.gauge.is_identity()
    # the gauge rides at orders 2 and 3, never at order 1
    assert report.gauge.term(1).is_zero()
    for k in (1, 2, 3):
        op = report.star.term(k)
        table = restricted_values(op, system, op.order() + 1)
        assert all(v.is_zero() for v in table.values())


def test_lift_infeasible_within_degree_bound():
    pi = canonical_pi4()
    system = IntegrableSystem(pi, [p4("p1"), p4("p2 + p1^2")])
    # the second constraint forces a component of degree 6
    Y = RelativeClass(4, 2, 1, {(0,): p4("x1^5")})
    assert lift_witness(system, Y, 1) is None
    assert lift_witness(system, Y, 6) is not None


def test_first_order_commutator_obstruction_is_rigid():
    # an antisymmetric first-order term on generator pairs cannot be
    # gauged away: coboundaries of unary operators are symmetric there
    pi = Polyvector.bivector(3, {(0, 1): 1})
    extra = PolyDiffOp.single(3, [(0, 1, 0), (0, 0, 1)]) - PolyDiffOp.single(
        3, [(0, 0, 1), (0, 1, 0)]
    )
    star = moyal_star(pi, 1).plus_term(1, extra)
    assert star.certified_order() == 1
    system = IntegrableSystem(pi, [p3("y"), p3("z")])
    report = eliminate_to_order(star, system, 1, BOUNDS)
    assert report.status == OBSTRUCTED
    assert report.order_reached == 1
    assert report.classes[0] == two_e12(3)
    assert "gauge-invariant" in report.detail


def test_eliminate_recovers_from_messy_gauge():
    # construct-and-recover: hide the flat product behind a three-order
    # diffeo (a derivation, a symmetric second-order term and a mixed
    # term); the loop must undo all of it and pass the final audit
    pi = Polyvector.bivector(3, {(0, 1): 1})
    star = moyal_star(pi, 3)
    system = IntegrableSystem(pi, [p3("y"), p3("z")])
    D = FormalDiffeo(
        3,
        3,
        [
            PolyDiffOp.single(3, [(0, 0, 1)], p3("x")),
            PolyDiffOp.single(3, [(0, 0, 2)], p3("z")),
            PolyDiffOp.single(3, [(0, 1, 1)]),
        ],
    )
    dirty = gauge_transform(star, D)
    assert not vanishes_on_generators(dirty.term(2), system)
    assert not vanishes_on_generators(dirty.term(3), system)
    report = eliminate_to_order(dirty, system, 3, Bounds(degree=3, op_order=3))
    assert report.status == TRIVIALIZED
    # the planted derivation shifts the order-2 class by an exact term
    assert report.classes[1] == RelativeClass(
        3, 2, 2, {(0, 1): Polynomial.constant(3, -1)}
    )
    for k in (1, 2, 3):
        op = report.star.term(k)
        table = restricted_values(op, system, op.order() + 1)
        assert all(v.is_zero() for v in table.values())
    assert gauge_transform(dirty, report.gauge) == report.star
