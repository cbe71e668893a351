"""Integrable systems, obstruction classes and the elimination loop.

Given a star product and a Poisson-commutative generating set, the
pipeline walks the deformation order by order: measure the restricted
correction table, read off the antisymmetrized commutator class on
generator pairs, check closedness, solve for an exactness witness in
the relative complex, lift it to a gauge and transform the product.

Outcomes are honest about truncation: OBSTRUCTED is only reported with
a bound-independent certificate (the horizontal differential having
identically zero image, or the gauge-invariant first-order commutator
being nonzero); running out of ansatz room yields UNDECIDED.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from fractions import Fraction

from .linsolve import solve_sparse
from .multivec import (
    Polyvector,
    RelativeClass,
    d_hor,
    hamiltonian_field,
    jacobi_check,
    poisson_bracket,
)
from .poly import Exponents, Polynomial, exponents_upto
from .polydiff import (
    PolyDiffOp,
    generator_monomials,
    hkr_to_cochain,
    hochschild_d,
    restricted_values,
    vanishes_on_generators,
)
from .star import FormalDiffeo, StarProduct, compose_diffeo, gauge_transform

TRIVIALIZED = "TRIVIALIZED"
OBSTRUCTED = "OBSTRUCTED"
UNDECIDED = "UNDECIDED"


@dataclass(frozen=True)
class Bounds:
    """Ansatz caps for the linear solvers."""

    degree: int = 3
    op_order: int = 3


class IntegrableSystem:
    """A Poisson bivector with a commuting, independent generating set."""

    __slots__ = ("dim", "pi", "generators")

    def __init__(self, pi: Polyvector, generators: list[Polynomial] | tuple[Polynomial, ...]):
        if pi.degree != 2:
            raise ValueError("need a degree-2 polyvector")
        gens = tuple(generators)
        if not gens:
            raise ValueError("need at least one generator")
        for g in gens:
            if g.dim != pi.dim:
                raise ValueError("generator dimension mismatch")
        object.__setattr__(self, "dim", pi.dim)
        object.__setattr__(self, "pi", pi)
        object.__setattr__(self, "generators", gens)

    def __setattr__(self, name, value):
        raise AttributeError("IntegrableSystem is immutable")

    @property
    def size(self) -> int:
        return len(self.generators)

    def __repr__(self):
        return f"IntegrableSystem(dim={self.dim}, n={self.size})"


@dataclass
class ValidationReport:
    ok: bool
    jacobi_ok: bool
    jacobi_witness: Polyvector | None
    commuting_ok: bool
    commuting_failures: list[tuple[int, int, Polynomial]]
    independent: bool
    witness_minor: tuple[int, ...] | None
    witness_point: list[Fraction] | None

    def failure_messages(self, names: list[str] | None = None) -> list[str]:
        msgs = []
        if not self.jacobi_ok:
            msgs.append("bivector fails the Jacobi identity")
        for i, j, br in self.commuting_failures:
            msgs.append(
                f"generators {i + 1} and {j + 1} do not commute: "
                f"bracket = {br.to_string(names)}"
            )
        if not self.independent:
            msgs.append("generators are functionally dependent (all maximal Jacobian minors vanish)")
        return msgs


def _poly_det(matrix: list[list[Polynomial]]) -> Polynomial:
    n = len(matrix)
    dim = matrix[0][0].dim
    if n == 1:
        return matrix[0][0]
    total = Polynomial.zero(dim)
    for c in range(n):
        entry = matrix[0][c]
        if entry.is_zero():
            continue
        minor = [row[:c] + row[c + 1 :] for row in matrix[1:]]
        term = entry * _poly_det(minor)
        total = total + (term if c % 2 == 0 else -term)
    return total


def validate_system(system: IntegrableSystem, rng: random.Random | None = None) -> ValidationReport:
    """Jacobi, pairwise commutativity and functional independence checks.

    Independence is decided symbolically (some maximal Jacobian minor is
    a nonzero polynomial); a random rational point where that minor is
    nonzero is recorded as a cross-check when one is found.
    """
    rng = rng or random.Random(0)
    jac_ok, witness = jacobi_check(system.pi)
    failures = []
    gens = system.generators
    for i in range(len(gens)):
        for j in range(i + 1, len(gens)):
            br = poisson_bracket(system.pi, gens[i], gens[j])
            if not br.is_zero():
                failures.append((i, j, br))
    n, m = len(gens), system.dim
    independent = False
    witness_minor: tuple[int, ...] | None = None
    witness_point: list[Fraction] | None = None
    if n <= m:
        jacobian = [[g.partial(k) for k in range(m)] for g in gens]
        for cols in itertools.combinations(range(m), n):
            det = _poly_det([[jacobian[i][k] for k in cols] for i in range(n)])
            if det.is_zero():
                continue
            independent = True
            witness_minor = cols
            for _ in range(25):
                point = [Fraction(rng.randint(-9, 9), rng.randint(1, 3)) for _ in range(m)]
                if det.evaluate(point):
                    witness_point = point
                    break
            break
    ok = jac_ok and not failures and independent
    return ValidationReport(
        ok=ok,
        jacobi_ok=jac_ok,
        jacobi_witness=None if jac_ok else witness,
        commuting_ok=not failures,
        commuting_failures=failures,
        independent=independent,
        witness_minor=witness_minor,
        witness_point=witness_point,
    )


# -- obstruction classes -------------------------------------------------------


def _require_certified(s: StarProduct, n: int):
    if s.order < n:
        raise ValueError(f"star product is truncated below order {n}")
    if s.certified_order() < n:
        raise ValueError(
            f"star product is only associative to order {s.certified_order()}, "
            f"needed {n}"
        )


def _require_lower_orders_flat(s: StarProduct, system: IntegrableSystem, n: int):
    for k in range(1, n):
        if not vanishes_on_generators(s.term(k), system):
            raise ValueError(f"correction at order {k} does not vanish on the subalgebra")


def obstruction_class(s: StarProduct, system: IntegrableSystem, n: int) -> RelativeClass:
    """Antisymmetrized order-n commutator coefficients on generator pairs.

    With all lower corrections vanishing on the subalgebra this is the
    degree-2 representative sum_{i<j} (B_n(f_i,f_j) - B_n(f_j,f_i)) e_i^e_j.
    """
    _require_certified(s, n)
    _require_lower_orders_flat(s, system, n)
    return _raw_class(s, system, n)


def _raw_class(s: StarProduct, system: IntegrableSystem, n: int) -> RelativeClass:
    op = s.term(n)
    comps = {}
    gens = system.generators
    for i in range(len(gens)):
        for j in range(i + 1, len(gens)):
            value = op.apply([gens[i], gens[j]]) - op.apply([gens[j], gens[i]])
            if not value.is_zero():
                comps[(i, j)] = value
    return RelativeClass(system.dim, len(gens), 2, comps)


@dataclass
class CascadeReport:
    order: int
    cochain_closed: bool
    cochain_witness: tuple[Exponents, ...] | None
    class_closed: bool
    class_witness: tuple[int, ...] | None

    @property
    def ok(self) -> bool:
        return self.cochain_closed and self.class_closed


def cocycle_cascade_check(s: StarProduct, system: IntegrableSystem, n: int) -> CascadeReport:
    """Closedness of the order-n data.

    (a) the Hochschild differential of B_n restricts to zero on the
    subalgebra (checked on the full monomial table), and (b) the class
    is closed for the horizontal differential.
    """
    _require_certified(s, n)
    _require_lower_orders_flat(s, system, n)
    dop = hochschild_d(s.term(n))
    table = restricted_values(dop, system, dop.order() + 1)
    cochain_witness = None
    for key in sorted(table):
        if not table[key].is_zero():
            cochain_witness = key
            break
    chi = _raw_class(s, system, n)
    image = d_hor(system, chi)
    class_witness = None if image.is_zero() else min(image.components)
    return CascadeReport(
        order=n,
        cochain_closed=cochain_witness is None,
        cochain_witness=cochain_witness,
        class_closed=image.is_zero(),
        class_witness=class_witness,
    )


# -- exactness in the relative complex -----------------------------------------


@dataclass
class ExactnessResult:
    status: str  # "solved" | "infeasible"
    degree_bound: int
    witness: RelativeClass | None = None
    certificate: str | None = None  # "zero_image" | "rank_at_bound"

    @property
    def solved(self) -> bool:
        return self.status == "solved"


def exactness_solve(
    system: IntegrableSystem, c: RelativeClass, degree_bound: int
) -> ExactnessResult:
    """Solve d_hor(Y) = c with polynomial components of bounded degree.

    Returns a witness (post-checked exactly), or an infeasibility
    certificate: "zero_image" when every generator is a Casimir (then
    the image is {0} at every degree, so a nonzero class is obstructed
    outright), "rank_at_bound" when only the bounded system is ruled out.
    """
    if c.degree != 2 or c.system_size != system.size:
        raise ValueError("need a degree-2 class for this system")
    if not d_hor(system, c).is_zero():
        raise ValueError("class is not closed for the horizontal differential")
    n = system.size
    dim = system.dim
    if c.is_zero():
        return ExactnessResult(
            status="solved",
            degree_bound=degree_bound,
            witness=RelativeClass.zero(dim, n, 1),
        )
    if all(hamiltonian_field(system.pi, g).is_zero() for g in system.generators):
        return ExactnessResult(
            status="infeasible", degree_bound=degree_bound, certificate="zero_image"
        )

    emons = exponents_upto(dim, degree_bound)
    columns = [(j, e) for j in range(n) for e in emons]
    col_index = {col: ci for ci, col in enumerate(columns)}
    brackets: dict[tuple[int, Exponents], Polynomial] = {}
    for i, g in enumerate(system.generators):
        for e in emons:
            brackets[(i, e)] = poisson_bracket(system.pi, g, Polynomial.monomial(dim, e))

    row_index: dict[tuple[tuple[int, int], Exponents], int] = {}
    rows: list[dict[int, Fraction]] = []
    rhs: list[Fraction] = []

    def row_of(pair, mono) -> int:
        key = (pair, mono)
        if key not in row_index:
            row_index[key] = len(rows)
            rows.append({})
            rhs.append(Fraction(0))
        return row_index[key]

    for i in range(n):
        for j in range(i + 1, n):
            # {f_i, g_j} - {f_j, g_i} = c_ij
            for e in emons:
                for mono, v in brackets[(i, e)].terms.items():
                    rows[row_of((i, j), mono)][col_index[(j, e)]] = (
                        rows[row_of((i, j), mono)].get(col_index[(j, e)], Fraction(0)) + v
                    )
                for mono, v in brackets[(j, e)].terms.items():
                    rows[row_of((i, j), mono)][col_index[(i, e)]] = (
                        rows[row_of((i, j), mono)].get(col_index[(i, e)], Fraction(0)) - v
                    )
            for mono, v in c.component((i, j)).terms.items():
                rhs[row_of((i, j), mono)] = v

    result = solve_sparse(rows, rhs, len(columns))
    if not result.solved:
        return ExactnessResult(
            status="infeasible", degree_bound=degree_bound, certificate="rank_at_bound"
        )
    comps: dict[tuple[int, ...], Polynomial] = {}
    for ci, v in result.solution.items():
        j, e = columns[ci]
        comps[(j,)] = comps.get((j,), Polynomial.zero(dim)) + Polynomial.monomial(dim, e, v)
    witness = RelativeClass(dim, n, 1, comps)
    if d_hor(system, witness) != c:
        raise AssertionError("exactness witness failed its built-in post-check")
    return ExactnessResult(status="solved", degree_bound=degree_bound, witness=witness)


# -- lifting and gauge construction ---------------------------------------------


def lift_witness(
    system: IntegrableSystem, Y: RelativeClass, degree_bound: int
) -> Polyvector | None:
    """Vector field V with V(f_j) = Y_j for every generator.

    When the generators are distinct plain coordinates the lift is
    written down directly; otherwise the componentwise linear system is
    solved over a bounded-degree ansatz.  Returns None when the ansatz
    is exhausted.
    """
    if Y.degree != 1 or Y.system_size != system.size:
        raise ValueError("need a degree-1 class for this system")
    dim = system.dim
    if Y.is_zero():
        return Polyvector.zero(dim, 1)

    coords = []
    for g in system.generators:
        if len(g.terms) == 1:
            (exps, coeff), = g.terms.items()
            if coeff == 1 and sum(exps) == 1:
                coords.append(exps.index(1))
                continue
        coords = None
        break
    if coords is not None and len(set(coords)) == len(coords):
        comps = {}
        for j, k in enumerate(coords):
            yj = Y.component((j,))
            if not yj.is_zero():
                comps[(k,)] = yj
        return Polyvector(dim, 1, comps)

    emons = exponents_upto(dim, degree_bound)
    columns = [(k, e) for k in range(dim) for e in emons]
    col_index = {col: ci for ci, col in enumerate(columns)}
    row_index: dict[tuple[int, Exponents], int] = {}
    rows: list[dict[int, Fraction]] = []
    rhs: list[Fraction] = []

    def row_of(j, mono) -> int:
        key = (j, mono)
        if key not in row_index:
            row_index[key] = len(rows)
            rows.append({})
            rhs.append(Fraction(0))
        return row_index[key]

    for j, g in enumerate(system.generators):
        partials = [g.partial(k) for k in range(dim)]
        for k in range(dim):
            for e in emons:
                prod = Polynomial.monomial(dim, e) * partials[k]
                for mono, v in prod.terms.items():
                    r = row_of(j, mono)
                    rows[r][col_index[(k, e)]] = rows[r].get(col_index[(k, e)], Fraction(0)) + v
        for mono, v in Y.component((j,)).terms.items():
            rhs[row_of(j, mono)] = v

    result = solve_sparse(rows, rhs, len(columns))
    if not result.solved:
        return None
    comps: dict[tuple[int, ...], Polynomial] = {}
    for ci, v in result.solution.items():
        k, e = columns[ci]
        comps[(k,)] = comps.get((k,), Polynomial.zero(dim)) + Polynomial.monomial(dim, e, v)
    field_ = Polyvector(dim, 1, comps)
    for j, g in enumerate(system.generators):
        if hkr_to_cochain(field_).apply([g]) != Y.component((j,)):
            raise AssertionError("vector field lift failed its post-check")
    return field_


def _solve_unary_correction(
    s: StarProduct, system: IntegrableSystem, n: int, bounds: Bounds
) -> PolyDiffOp | None:
    """Find D with d(D) cancelling B_n on the subalgebra table.

    The returned unary operator satisfies (B_n + dD)(u, v) = 0 for all
    monomials u, v in the generators up to the deciding slot degree, or
    None when the bounded ansatz has no solution.
    """
    target = s.term(n)
    slot_degree = max(target.order(), bounds.op_order) + 1
    mons = generator_monomials(system, slot_degree)
    alphas = exponents_upto(system.dim, bounds.op_order)
    emons = exponents_upto(system.dim, bounds.degree)
    basis = [(e, a) for a in alphas for e in emons]
    dim = system.dim

    # value tables of d(basis op) on monomial pairs, assembled per row
    row_index: dict[tuple[tuple[Exponents, Exponents], Exponents], int] = {}
    rows: list[dict[int, Fraction]] = []
    rhs: list[Fraction] = []

    def row_of(pair_key, mono) -> int:
        key = (pair_key, mono)
        if key not in row_index:
            row_index[key] = len(rows)
            rows.append({})
            rhs.append(Fraction(0))
        return row_index[key]

    basis_ops = [
        PolyDiffOp.single(dim, (a,), Polynomial.monomial(dim, e)) for e, a in basis
    ]
    for (ue, u), (ve, v) in itertools.product(mons, repeat=2):
        pair_key = (ue, ve)
        uv = u * v
        for ci, op in enumerate(basis_ops):
            # d(op)(u, v) = u op(v) - op(uv) + op(u) v
            value = u * op.apply([v]) - op.apply([uv]) + op.apply([u]) * v
            for mono, c in value.terms.items():
                r = row_of(pair_key, mono)
                rows[r][ci] = rows[r].get(ci, Fraction(0)) + c
        for mono, c in target.apply([u, v]).terms.items():
            rhs[row_of(pair_key, mono)] = -c

    result = solve_sparse(rows, rhs, len(basis))
    if not result.solved:
        return None
    acc = PolyDiffOp.zero(dim, 1)
    for ci, v in result.solution.items():
        e, a = basis[ci]
        acc = acc + PolyDiffOp.single(dim, (a,), Polynomial.monomial(dim, e, v))
    return acc


@dataclass
class GaugeStepResult:
    status: str  # "solved" | "undecided"
    order: int
    diffeo: FormalDiffeo | None = None
    lift: Polyvector | None = None
    bounds: Bounds | None = None

    @property
    def solved(self) -> bool:
        return self.status == "solved"


def gauge_step(
    s: StarProduct,
    system: IntegrableSystem,
    n: int,
    Y: RelativeClass,
    bounds: Bounds,
) -> GaugeStepResult:
    """Build the order-n gauge from an exactness witness.

    Lifts Y to a vector field V with V(f_j) = Y_j, places -V at order
    n-1 of the diffeomorphism (the sign that cancels the class), then
    solves the bounded linear system for the order-n operator killing
    the remaining symmetric part on the subalgebra.  The result is
    post-checked: the transformed product's order-n correction must
    vanish on the full restricted table.
    """
    if n < 2:
        raise ValueError("gauge steps start at order 2")
    _require_certified(s, n)
    lifted = lift_witness(system, Y, bounds.degree)
    if lifted is None:
        return GaugeStepResult(status="undecided", order=n, bounds=bounds)
    partial_parts: dict[int, PolyDiffOp] = {}
    if not lifted.is_zero():
        partial_parts[n - 1] = -hkr_to_cochain(lifted)
    partial = FormalDiffeo.from_parts(s.dim, s.order, partial_parts)
    staged = gauge_transform(s, partial) if partial_parts else s
    correction = _solve_unary_correction(staged, system, n, bounds)
    if correction is None:
        return GaugeStepResult(status="undecided", order=n, lift=lifted, bounds=bounds)
    parts = dict(partial_parts)
    if not correction.is_zero():
        parts[n] = correction
    diffeo = FormalDiffeo.from_parts(s.dim, s.order, parts)
    transformed = gauge_transform(s, diffeo)
    if not vanishes_on_generators(transformed.term(n), system):
        raise AssertionError("gauge step failed its built-in restriction post-check")
    return GaugeStepResult(
        status="solved", order=n, diffeo=diffeo, lift=lifted, bounds=bounds
    )


# -- the elimination loop --------------------------------------------------------


@dataclass
class OrderRecord:
    order: int
    table_zero: bool
    obstruction: RelativeClass
    cascade: CascadeReport | None = None
    exactness: ExactnessResult | None = None
    step: GaugeStepResult | None = None


@dataclass
class ObstructionReport:
    status: str
    order_reached: int
    classes: list[RelativeClass]
    gauge: FormalDiffeo
    star: StarProduct
    records: list[OrderRecord]
    bounds: Bounds
    detail: str = ""


def _normalize_first_order(
    s: StarProduct, system: IntegrableSystem, bounds: Bounds
) -> tuple[str, StarProduct, FormalDiffeo | None, OrderRecord]:
    """Make B_1 vanish on the subalgebra, if it does not already.

    The antisymmetric part on generator pairs is gauge-invariant at
    first order, so a nonzero order-1 class is a hard obstruction; the
    symmetric part is removed by a plain unary gauge.
    """
    record = OrderRecord(
        order=1,
        table_zero=vanishes_on_generators(s.term(1), system),
        obstruction=_raw_class(s, system, 1),
    )
    if record.table_zero:
        return "ok", s, None, record
    if not record.obstruction.is_zero():
        return OBSTRUCTED, s, None, record
    correction = _solve_unary_correction(s, system, 1, bounds)
    if correction is None:
        return UNDECIDED, s, None, record
    diffeo = FormalDiffeo.from_parts(s.dim, s.order, {1: correction})
    transformed = gauge_transform(s, diffeo)
    if not vanishes_on_generators(transformed.term(1), system):
        raise AssertionError("first-order normalization failed its post-check")
    record.step = GaugeStepResult(status="solved", order=1, diffeo=diffeo, bounds=bounds)
    return "ok", transformed, diffeo, record


def eliminate_to_order(
    s: StarProduct,
    system: IntegrableSystem,
    order: int,
    bounds: Bounds,
    rng: random.Random | None = None,
) -> ObstructionReport:
    """Iteratively trivialize the product on the subalgebra up to `order`.

    Per order: restricted table, obstruction class, closedness checks,
    exactness solve, gauge step, transform.  Stops with OBSTRUCTED on a
    certified nonzero class, UNDECIDED when solver bounds run out, and
    TRIVIALIZED after an independent final audit of all restricted
    tables.
    """
    if order < 1:
        raise ValueError("order must be at least 1")
    validation = validate_system(system, rng)
    if not validation.ok:
        raise ValueError("; ".join(validation.failure_messages()))
    _require_certified(s, order)

    current = s
    gauge = FormalDiffeo.identity(s.dim, s.order)
    records: list[OrderRecord] = []
    classes: list[RelativeClass] = []

    status, current, diffeo, record = _normalize_first_order(current, system, bounds)
    records.append(record)
    classes.append(record.obstruction)
    if diffeo is not None:
        gauge = compose_diffeo(gauge, diffeo)
    if status == OBSTRUCTED:
        return ObstructionReport(
            status=OBSTRUCTED,
            order_reached=1,
            classes=classes,
            gauge=gauge,
            star=current,
            records=records,
            bounds=bounds,
            detail="nonzero first-order commutator on generators (gauge-invariant)",
        )
    if status == UNDECIDED:
        return ObstructionReport(
            status=UNDECIDED,
            order_reached=1,
            classes=classes,
            gauge=gauge,
            star=current,
            records=records,
            bounds=bounds,
            detail="first-order normalization exhausted the ansatz bounds",
        )

    for n in range(2, order + 1):
        if vanishes_on_generators(current.term(n), system):
            record = OrderRecord(
                order=n, table_zero=True, obstruction=RelativeClass.zero(s.dim, system.size, 2)
            )
            records.append(record)
            classes.append(record.obstruction)
            continue
        chi = obstruction_class(current, system, n)
        cascade = cocycle_cascade_check(current, system, n)
        record = OrderRecord(order=n, table_zero=False, obstruction=chi, cascade=cascade)
        records.append(record)
        classes.append(chi)
        if not cascade.ok:
            raise AssertionError(
                f"order-{n} closedness check failed; the certificate is inconsistent"
            )
        exact = exactness_solve(system, chi, bounds.degree)
        record.exactness = exact
        if not exact.solved:
            if exact.certificate == "zero_image":
                return ObstructionReport(
                    status=OBSTRUCTED,
                    order_reached=n,
                    classes=classes,
                    gauge=gauge,
                    star=current,
                    records=records,
                    bounds=bounds,
                    detail=(
                        "the horizontal differential has identically zero image "
                        "(all generators are Casimirs), so the nonzero class is "
                        "exact at no degree"
                    ),
                )
            return ObstructionReport(
                status=UNDECIDED,
                order_reached=n,
                classes=classes,
                gauge=gauge,
                star=current,
                records=records,
                bounds=bounds,
                detail=f"exactness solve infeasible at degree bound {bounds.degree}",
            )
        step = gauge_step(current, system, n, exact.witness, bounds)
        record.step = step
        if not step.solved:
            return ObstructionReport(
                status=UNDECIDED,
                order_reached=n,
                classes=classes,
                gauge=gauge,
                star=current,
                records=records,
                bounds=bounds,
                detail=f"gauge step at order {n} exhausted the ansatz bounds",
            )
        current = gauge_transform(current, step.diffeo)
        gauge = compose_diffeo(gauge, step.diffeo)

    for k in range(1, order + 1):
        if not vanishes_on_generators(current.term(k), system):
            raise AssertionError(f"final audit failed at order {k}")
    return ObstructionReport(
        status=TRIVIALIZED,
        order_reached=order,
        classes=classes,
        gauge=gauge,
        star=current,
        records=records,
        bounds=bounds,
        detail="all restricted correction tables vanish after the accumulated gauge",
    )
