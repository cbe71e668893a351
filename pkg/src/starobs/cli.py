"""Problem-file loading, command dispatch and report serialization.

Problems are JSON: a coordinate frame, a bivector given on index pairs,
an optional star product (the built-in constant-coefficient one or
explicit term lists), optional generators, and solver bounds.  Reports
are JSON with canonical polynomial strings, "p/q" rationals and sorted
keys, so identical inputs and seeds produce byte-identical output.
"""

from __future__ import annotations

import argparse
import json
import random
import sys
from typing import Any

from .multivec import Polyvector, RelativeClass, jacobi_check
from .obstruction import (
    Bounds,
    IntegrableSystem,
    ObstructionReport,
    cocycle_cascade_check,
    eliminate_to_order,
    exactness_solve,
    obstruction_class,
    validate_system,
)
from .poly import Polynomial, PolynomialParseError, exponents_upto, parse_polynomial
from .polydiff import PolyDiffOp
from .star import FormalDiffeo, StarProduct, extend_one_order, moyal_star

COMMANDS = (
    "check-poisson",
    "assoc-check",
    "commutator-table",
    "obstruction",
    "eliminate",
    "extend-star",
)

CONVENTIONS = {
    "parameter": "real formal parameter; no imaginary unit in coefficients",
    "commutator": (
        "for the built-in product the antisymmetric part of the first "
        "correction is half the Poisson bracket, so commutators open as "
        "h*{a,b} plus higher order"
    ),
}


class ProblemError(ValueError):
    """Invalid problem file or unsatisfied command precondition."""


class Problem:
    def __init__(
        self,
        dim: int,
        names: list[str],
        pi: Polyvector,
        star: StarProduct | None,
        generators: list[Polynomial],
        bounds: Bounds,
        command: str | None,
        order: int | None,
        seed: int,
        star_spec: dict | None,
    ):
        self.dim = dim
        self.names = names
        self.pi = pi
        self.star = star
        self.generators = generators
        self.bounds = bounds
        self.command = command
        self.order = order
        self.seed = seed
        self.star_spec = star_spec

    def system(self) -> IntegrableSystem:
        if not self.generators:
            raise ProblemError("this command needs a 'generators' list in the problem file")
        return IntegrableSystem(self.pi, self.generators)


# -- serialization helpers -----------------------------------------------------


def poly_payload(p: Polynomial, names: list[str]) -> str:
    return p.to_string(names)


def op_payload(op: PolyDiffOp, names: list[str]) -> list[dict]:
    out = []
    for key, coeff in op.sorted_terms():
        out.append({"coeff": poly_payload(coeff, names), "derivs": [list(a) for a in key]})
    return out


def op_from_payload(dim: int, arity: int, payload: list[dict], names: list[str]) -> PolyDiffOp:
    acc = PolyDiffOp.zero(dim, arity)
    for i, term in enumerate(payload):
        try:
            coeff = parse_polynomial(term["coeff"], names)
            derivs = [tuple(int(v) for v in a) for a in term["derivs"]]
        except (KeyError, TypeError, PolynomialParseError) as exc:
            raise ProblemError(f"bad operator term #{i}: {exc}") from exc
        if len(derivs) != arity:
            raise ProblemError(f"bad operator term #{i}: expected {arity} derivative slots")
        acc = acc + PolyDiffOp.single(dim, derivs, coeff)
    return acc


def relclass_payload(c: RelativeClass, names: list[str]) -> dict:
    out = {}
    for idx, p in sorted(c.components.items()):
        key = "(" + ",".join(str(i + 1) for i in idx) + ")"
        out[key] = poly_payload(p, names)
    return out


def star_payload(s: StarProduct, names: list[str]) -> dict:
    return {
        "order": s.order,
        "terms": {str(k): op_payload(s.term(k), names) for k in range(1, s.order + 1)},
    }


def diffeo_payload(D: FormalDiffeo, names: list[str]) -> dict:
    return {
        "order": D.order,
        "terms": {str(k): op_payload(D.term(k), names) for k in range(1, D.order + 1)},
    }


def diffeo_from_payload(dim: int, payload: dict, names: list[str]) -> FormalDiffeo:
    order = int(payload["order"])
    terms = {}
    for k_str, ops in payload.get("terms", {}).items():
        k = int(k_str)
        terms[k] = op_from_payload(dim, 1, ops, names)
    return FormalDiffeo.from_parts(dim, order, terms)


def polyvector_payload(v: Polyvector, names: list[str]) -> dict:
    out = {}
    for idx, p in sorted(v.components.items()):
        key = "(" + ",".join(str(i + 1) for i in idx) + ")"
        out[key] = poly_payload(p, names)
    return out


def problem_payload(problem: Problem) -> dict:
    poisson = []
    for (i, j), coeff in sorted(problem.pi.components.items()):
        poisson.append([i + 1, j + 1, poly_payload(coeff, problem.names)])
    payload: dict[str, Any] = {
        "dimension": problem.dim,
        "coordinates": list(problem.names),
        "poisson": poisson,
        "generators": [poly_payload(g, problem.names) for g in problem.generators],
        "bounds": {"degree": problem.bounds.degree, "op_order": problem.bounds.op_order},
        "seed": problem.seed,
    }
    if problem.star_spec is not None:
        if problem.star_spec.get("type") == "moyal":
            payload["star"] = {"type": "moyal", "order": problem.star.order}
        else:
            payload["star"] = {
                "type": "terms",
                "order": problem.star.order,
                "terms": star_payload(problem.star, problem.names)["terms"],
            }
    if problem.command is not None:
        payload["command"] = problem.command
    if problem.order is not None:
        payload["order"] = problem.order
    return payload


# -- problem loading -------------------------------------------------------------


def _parse_poly_field(text: Any, names: list[str], where: str) -> Polynomial:
    if not isinstance(text, str):
        raise ProblemError(f"{where}: expected a polynomial string, got {type(text).__name__}")
    try:
        return parse_polynomial(text, names)
    except PolynomialParseError as exc:
        raise ProblemError(f"{where}: {exc}") from exc


def load_problem_data(data: dict) -> Problem:
    if not isinstance(data, dict):
        raise ProblemError("problem file must contain a JSON object")
    try:
        dim = int(data["dimension"])
        names = list(data["coordinates"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ProblemError(f"missing or bad 'dimension'/'coordinates': {exc}") from exc
    if dim < 1 or len(names) != dim:
        raise ProblemError(f"'coordinates' must list exactly {dim} names")
    if len(set(names)) != dim:
        raise ProblemError("coordinate names must be distinct")

    entries = data.get("poisson", [])
    comps = {}
    for k, entry in enumerate(entries):
        where = f"poisson[{k}]"
        try:
            i, j, coeff_text = entry
            i, j = int(i), int(j)
        except (TypeError, ValueError) as exc:
            raise ProblemError(f"{where}: expected [i, j, coefficient]: {exc}") from exc
        if not 1 <= i <= dim or not 1 <= j <= dim:
            raise ProblemError(f"{where}: index out of range 1..{dim}: ({i}, {j})")
        if i == j:
            raise ProblemError(f"{where}: repeated index {i}")
        coeff = _parse_poly_field(coeff_text, names, where)
        comps[(i - 1, j - 1)] = coeff
    pi = Polyvector(dim, 2, comps)

    star = None
    star_spec = data.get("star")
    if star_spec is not None:
        if not isinstance(star_spec, dict) or "type" not in star_spec:
            raise ProblemError("'star' must be an object with a 'type'")
        order = int(star_spec.get("order", 0))
        if order < 1:
            raise ProblemError("'star.order' must be at least 1")
        if star_spec["type"] == "moyal":
            if not pi.is_constant():
                raise ProblemError(
                    "the built-in exponential star product needs a constant bivector"
                )
            star = moyal_star(pi, order)
        elif star_spec["type"] == "terms":
            corrections = []
            terms_map = star_spec.get("terms", {})
            for k in range(1, order + 1):
                payload = terms_map.get(str(k), [])
                corrections.append(op_from_payload(dim, 2, payload, names))
            for key in terms_map:
                if not key.isdigit() or not 1 <= int(key) <= order:
                    raise ProblemError(f"star.terms has an out-of-range order key {key!r}")
            star = StarProduct(dim, order, corrections)
        else:
            raise ProblemError(f"unknown star type {star_spec['type']!r}")

    generators = [
        _parse_poly_field(g, names, f"generators[{k}]")
        for k, g in enumerate(data.get("generators", []))
    ]

    bounds_data = data.get("bounds", {})
    bounds = Bounds(
        degree=int(bounds_data.get("degree", 3)),
        op_order=int(bounds_data.get("op_order", 3)),
    )
    command = data.get("command")
    if command is not None and command not in COMMANDS:
        raise ProblemError(f"unknown command {command!r}; expected one of {', '.join(COMMANDS)}")
    order = int(data["order"]) if "order" in data else None
    seed = int(data.get("seed", 0))

    problem = Problem(
        dim=dim,
        names=names,
        pi=pi,
        star=star,
        generators=generators,
        bounds=bounds,
        command=command,
        order=order,
        seed=seed,
        star_spec=star_spec,
    )
    if generators:
        report = validate_system(problem.system(), random.Random(seed))
        if not report.ok:
            raise ProblemError("; ".join(report.failure_messages(names)))
    return problem


def load_problem(path: str) -> Problem:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ProblemError(f"cannot read problem file: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ProblemError(f"problem file is not valid JSON: {exc}") from exc
    return load_problem_data(data)


# -- commands ---------------------------------------------------------------------


def _require_star(problem: Problem) -> StarProduct:
    if problem.star is None:
        raise ProblemError("this command needs a 'star' entry in the problem file")
    return problem.star


def _residual_witness(res: PolyDiffOp, names: list[str]) -> dict | None:
    """A small monomial triple on which a nonzero residual evaluates nonzero.

    Triples are scanned in order of combined degree, so practical
    witnesses surface immediately; the scan is capped (a nonzero
    canonical operator is already a proof, the witness is a courtesy).
    """
    if res.is_zero():
        return None
    dim = res.dim
    max_degree = res.order() + 1
    by_degree: dict[int, list] = {d: [] for d in range(max_degree + 1)}
    for e in exponents_upto(dim, max_degree):
        by_degree[sum(e)].append(e)
    polys = {
        e: Polynomial.monomial(dim, e) for d in by_degree for e in by_degree[d]
    }
    budget = 200000
    for total in range(3 * max_degree + 1):
        for da in range(min(total, max_degree) + 1):
            for db in range(min(total - da, max_degree) + 1):
                dc = total - da - db
                if dc > max_degree:
                    continue
                for ea in by_degree[da]:
                    for eb in by_degree[db]:
                        for ec in by_degree[dc]:
                            value = res.apply([polys[ea], polys[eb], polys[ec]])
                            budget -= 1
                            if not value.is_zero():
                                return {
                                    "args": [
                                        poly_payload(polys[e], names)
                                        for e in (ea, eb, ec)
                                    ],
                                    "value": poly_payload(value, names),
                                }
                            if budget <= 0:
                                return None
    return None


def cmd_check_poisson(problem: Problem, order: int | None) -> dict:
    ok, witness = jacobi_check(problem.pi)
    return {
        "poisson": ok,
        "witness": polyvector_payload(witness, problem.names),
    }


def cmd_assoc_check(problem: Problem, order: int | None) -> dict:
    star = _require_star(problem)
    upto = min(order, star.order) if order is not None else star.order
    residuals = []
    for n in range(1, upto + 1):
        res = star.assoc_residual(n)
        residuals.append(
            {
                "order": n,
                "zero": res.is_zero(),
                "witness": _residual_witness(res, problem.names),
            }
        )
    certified = 0
    for r in residuals:
        if not r["zero"]:
            break
        certified = r["order"]
    return {
        "max_order_checked": upto,
        "certified_order": certified,
        "residuals": residuals,
    }


def cmd_commutator_table(problem: Problem, order: int | None) -> dict:
    star = _require_star(problem)
    system = problem.system()
    table = []
    gens = system.generators
    for i in range(len(gens)):
        for j in range(i + 1, len(gens)):
            series = star.commutator(gens[i], gens[j])
            table.append(
                {
                    "pair": f"({i + 1},{j + 1})",
                    "series": [poly_payload(c, problem.names) for c in series.coefficients],
                }
            )
    return {"order": star.order, "commutators": table}


def cmd_obstruction(problem: Problem, order: int | None) -> dict:
    star = _require_star(problem)
    system = problem.system()
    n = order if order is not None else 2
    chi = obstruction_class(star, system, n)
    cascade = cocycle_cascade_check(star, system, n)
    payload = {
        "order": n,
        "class": relclass_payload(chi, problem.names),
        "class_zero": chi.is_zero(),
        "closed_on_subalgebra": cascade.cochain_closed,
        "class_closed": cascade.class_closed,
        "exactness": None,
    }
    if cascade.class_closed:
        exact = exactness_solve(system, chi, problem.bounds.degree)
        payload["exactness"] = {
            "status": exact.status,
            "certificate": exact.certificate,
            "degree_bound": exact.degree_bound,
            "witness": relclass_payload(exact.witness, problem.names)
            if exact.witness is not None
            else None,
        }
    return payload


def _report_payload(report: ObstructionReport, names: list[str]) -> dict:
    records = []
    for rec in report.records:
        entry: dict[str, Any] = {
            "order": rec.order,
            "table_zero": rec.table_zero,
            "class": relclass_payload(rec.obstruction, names),
        }
        if rec.cascade is not None:
            entry["closed_on_subalgebra"] = rec.cascade.cochain_closed
            entry["class_closed"] = rec.cascade.class_closed
        if rec.exactness is not None:
            entry["exactness"] = {
                "status": rec.exactness.status,
                "certificate": rec.exactness.certificate,
                "degree_bound": rec.exactness.degree_bound,
                "witness": relclass_payload(rec.exactness.witness, names)
                if rec.exactness.witness is not None
                else None,
            }
        if rec.step is not None:
            entry["gauge_step"] = {
                "status": rec.step.status,
                "diffeo": diffeo_payload(rec.step.diffeo, names)
                if rec.step.diffeo is not None
                else None,
            }
        records.append(entry)
    return {
        "status": report.status,
        "order_reached": report.order_reached,
        "detail": report.detail,
        "classes": [relclass_payload(c, names) for c in report.classes],
        "gauge": diffeo_payload(report.gauge, names),
        "star": star_payload(report.star, names),
        "records": records,
        "bounds": {"degree": report.bounds.degree, "op_order": report.bounds.op_order},
    }


def cmd_eliminate(problem: Problem, order: int | None) -> dict:
    star = _require_star(problem)
    system = problem.system()
    n = order if order is not None else star.order
    report = eliminate_to_order(star, system, n, problem.bounds, random.Random(problem.seed))
    return _report_payload(report, problem.names)


def cmd_extend_star(problem: Problem, order: int | None) -> dict:
    star = _require_star(problem)
    result = extend_one_order(star, problem.bounds.degree, problem.bounds.op_order)
    payload: dict[str, Any] = {
        "status": result.status,
        "new_order": result.new_order,
        "bounds": {
            "degree": result.coefficient_degree,
            "op_order": result.operator_order,
        },
    }
    if result.solved:
        payload["candidate"] = op_payload(result.particular, problem.names)
        payload["freedom_rank"] = len(result.freedom)
        payload["freedom"] = [op_payload(op, problem.names) for op in result.freedom]
    return payload


DISPATCH = {
    "check-poisson": cmd_check_poisson,
    "assoc-check": cmd_assoc_check,
    "commutator-table": cmd_commutator_table,
    "obstruction": cmd_obstruction,
    "eliminate": cmd_eliminate,
    "extend-star": cmd_extend_star,
}


def run_command(problem: Problem, command: str, order: int | None) -> dict:
    if command not in DISPATCH:
        raise ProblemError(f"unknown command {command!r}; expected one of {', '.join(COMMANDS)}")
    result = DISPATCH[command](problem, order)
    return {
        "command": command,
        "conventions": CONVENTIONS,
        "problem": problem_payload(problem),
        "seed": problem.seed,
        "result": result,
    }


def render_report(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True) + "\n"


def emit_report(report: dict, path: str):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(render_report(report))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="starobs",
        description=(
            "Exact workbench for truncated star products: associativity "
            "checks, commutator tables, obstruction classes and the "
            "order-by-order trivialization of a commutative subalgebra."
        ),
    )
    parser.add_argument("--problem", required=True, help="path to the JSON problem file")
    parser.add_argument("--command", help="command to run (overrides the problem file)")
    parser.add_argument("--order", type=int, help="target order for order-aware commands")
    parser.add_argument("--degree-bound", type=int, help="polynomial degree cap for solvers")
    parser.add_argument("--op-order-bound", type=int, help="operator order cap for solvers")
    parser.add_argument("--seed", type=int, help="seed recorded in the report")
    parser.add_argument("--out", help="write the JSON report here instead of stdout")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        problem = load_problem(args.problem)
        if args.seed is not None:
            problem.seed = args.seed
        if args.degree_bound is not None or args.op_order_bound is not None:
            problem.bounds = Bounds(
                degree=args.degree_bound if args.degree_bound is not None else problem.bounds.degree,
                op_order=args.op_order_bound
                if args.op_order_bound is not None
                else problem.bounds.op_order,
            )
        command = args.command or problem.command
        if command is None:
            raise ProblemError("no command given (use --command or a 'command' problem entry)")
        order = args.order if args.order is not None else problem.order
        report = run_command(problem, command, order)
    except ProblemError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except AssertionError as exc:
        print(f"internal check failure: {exc}", file=sys.stderr)
        return 2
    if args.out:
        try:
            emit_report(report, args.out)
        except OSError as exc:
            print(f"error: cannot write report: {exc}", file=sys.stderr)
            return 1
        summary = report["result"].get("status", "done") if isinstance(report["result"], dict) else "done"
        print(f"{command}: {summary} -> {args.out}")
    else:
        sys.stdout.write(render_report(report))
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
