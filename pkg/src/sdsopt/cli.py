"""Command-line front door.

Exit codes: 0 certified/solved, 1 refuted/infeasible/unbounded, 2
inconclusive or solver limit, 3 usage or file/schema errors. Schema problems
print ``file:line: message`` diagnostics. ``--report`` writes a JSON envelope
whose ``result`` payload is byte-identical across identical runs; wall times
and the timestamp live under ``meta``.
"""

from __future__ import annotations

import argparse
import sys
from typing import Optional, Sequence, Tuple

from . import jsonio
from .certify import certify_first_order_convex, certify_sdsos
from .jsonio import SchemaError, check_version, parse_matrix, parse_polynomial
from .matrixcones import certify_sdd
from .oracle import GridSpec, UnsupportedSet, grid_minimize
from .relax import solve_program
from .robust import solve_robust
from .semialg import Inconclusive
from .socp import SolverError, SolverSettings


class UsageError(Exception):
    pass


class FileError(Exception):
    """Already formatted as path:line: message."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _positive_float(text: str) -> float:
    try:
        val = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")
    if val <= 0:
        raise argparse.ArgumentTypeError("must be positive")
    return val


def _positive_int(text: str) -> int:
    try:
        val = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    if val <= 0:
        raise argparse.ArgumentTypeError("must be positive")
    return val


def _build_parser() -> _Parser:
    common = _Parser(add_help=False)
    common.add_argument("--tol", type=_positive_float, default=None,
                        help="feasibility/gap/infeasibility tolerance")
    common.add_argument("--max-iter", type=_positive_int, default=None)
    common.add_argument("--backend", default=None,
                        help="embedded (default) or external:<name>")
    common.add_argument("--report", default=None, metavar="OUT.json",
                        help="write a JSON report")
    common.add_argument("--seed", type=int, default=0)

    top = _Parser(prog="sdsopt", description=__doc__.splitlines()[0])
    sub = top.add_subparsers(dest="command", required=True)

    cert = sub.add_parser("certify", parents=[common],
                          help="certify a polynomial property")
    cert.add_argument("kind", choices=("sdsos", "foc"),
                      help="sdsos membership or first-order convexity")
    cert.add_argument("path")
    cert.add_argument("--full-basis", action="store_true",
                      help="skip monomial-basis pruning")
    cert.set_defaults(func=cmd_certify)

    sdd = sub.add_parser("check-sdd", parents=[common],
                         help="test scaled diagonal dominance of a matrix")
    sdd.add_argument("path")
    sdd.set_defaults(func=cmd_check_sdd)

    slv = sub.add_parser("solve", parents=[common],
                         help="run the dual/moment relaxation pair")
    slv.add_argument("path")
    slv.add_argument("--degree", type=int, default=None,
                     help="relaxation degree 2d (even)")
    slv.set_defaults(func=cmd_solve)

    rob = sub.add_parser("solve-robust", parents=[common],
                         help="reformulate and solve a robust program")
    rob.add_argument("path")
    rob.add_argument("--degree", type=int, default=None)
    rob.set_defaults(func=cmd_solve_robust)

    # common flags live on the leaf only: a repeated parent would reset
    # already-parsed values to their defaults during the inner parse
    orc = sub.add_parser("oracle", help="brute-force cross-checks")
    osub = orc.add_subparsers(dest="oracle_command", required=True)
    grid = osub.add_parser("grid", parents=[common],
                           help="grid-minimize a program")
    grid.add_argument("path")
    grid.add_argument("--box", required=True,
                      help="per-axis ranges, e.g. -1:1,-1:1")
    grid.add_argument("--res", type=_positive_int, required=True,
                      help="points per axis")
    grid.set_defaults(func=cmd_oracle_grid)

    mom = sub.add_parser("moments", parents=[common],
                         help="solve and dump the moment vector")
    mom.add_argument("path")
    mom.add_argument("--degree", type=int, default=None)
    mom.set_defaults(func=cmd_moments)
    return top


def _settings(args) -> SolverSettings:
    kw = {}
    if args.tol is not None:
        kw.update(tol_feas=args.tol, tol_gap=args.tol, tol_infeas=args.tol)
    if args.max_iter is not None:
        kw["max_iter"] = args.max_iter
    if args.backend is not None:
        name = args.backend
        if name != "embedded" and not name.startswith("external:"):
            raise UsageError(f"unknown backend {name!r}")
        kw["backend"] = name
    return SolverSettings(**kw)


def _read(path: str, parse):
    try:
        return jsonio.read_document(path, parse)
    except OSError as exc:
        raise FileError(f"{path}: {exc.strerror or exc}") from exc
    except SchemaError as exc:
        raise FileError(f"{path}:{exc.line or 1}: {exc.message}") from exc


def _check_degree_flag(two_d: Optional[int]) -> Optional[int]:
    if two_d is not None and (two_d < 2 or two_d % 2):
        raise UsageError("--degree must be a positive even integer")
    return two_d


def _write_report(args, command: str, result, timings=None) -> None:
    if args.report:
        jsonio.write_document(
            args.report, jsonio.report_envelope(command, result, timings))


_STATUS_EXIT = {
    "certified": 0,
    "OPTIMAL": 0,
    "refuted": 1,
    "PRIMAL_INFEASIBLE": 1,
    "DUAL_INFEASIBLE": 1,
    "inconclusive": 2,
    "NUMERICAL_LIMIT": 2,
}


def _poly_doc(obj):
    check_version(obj, "polynomial")
    return parse_polynomial(obj)


def _matrix_doc(obj):
    check_version(obj, "matrix")
    return parse_matrix(obj)


def cmd_certify(args) -> int:
    poly = _read(args.path, _poly_doc)
    st = _settings(args)
    if args.kind == "sdsos":
        res = certify_sdsos(poly, settings=st, full_basis=args.full_basis)
    else:
        res = certify_first_order_convex(poly, settings=st,
                                         full_basis=args.full_basis)
    obj = jsonio.certify_result_obj(res)
    print(f"{args.kind}: {res.status}" + (f" ({res.detail})" if res.detail else ""))
    if res.status == "certified":
        print(jsonio.dumps(obj), end="")
    _write_report(args, f"certify {args.kind}", obj)
    return _STATUS_EXIT[res.status]


def cmd_check_sdd(args) -> int:
    mat = _read(args.path, _matrix_doc)
    res = certify_sdd(mat, settings=_settings(args))
    obj = jsonio.sdd_result_obj(res)
    print(f"sdd: {res.status}")
    if res.status == "certified":
        print(jsonio.dumps(obj), end="")
    _write_report(args, "check-sdd", obj)
    return _STATUS_EXIT[res.status]


def _print_solution(rep) -> None:
    for w in rep.warnings:
        print(f"warning: {w}", file=sys.stderr)
    print(f"status: dual={rep.statuses['dual']} moment={rep.statuses['moment']}")
    if rep.moment_value is not None or rep.dual_value is not None:
        print(f"value: {rep.value:.6f}")
    if rep.gap is not None:
        print(f"gap: {rep.gap:.2e}" + ("  (exact)" if rep.exact else ""))
    if rep.recovered_x is not None:
        coords = ", ".join(f"{v:.6f}" for v in rep.recovered_x)
        print(f"x: ({coords})")


def _solution_exit(rep) -> int:
    code = max(_STATUS_EXIT[s] for s in rep.statuses.values())
    if code == 0 and not rep.exact:
        return 2
    return code


def cmd_solve(args) -> int:
    prog = _read(args.path, jsonio.parse_program)
    two_d = _check_degree_flag(args.degree)
    try:
        rep = solve_program(prog, two_d=two_d, settings=_settings(args),
                            seed=args.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    _print_solution(rep)
    _write_report(args, "solve", jsonio.relaxation_report_obj(rep), rep.timings)
    return _solution_exit(rep)


def cmd_solve_robust(args) -> int:
    rp = _read(args.path, jsonio.parse_robust)
    two_d = _check_degree_flag(args.degree)
    try:
        rep = solve_robust(rp, two_d=two_d, settings=_settings(args),
                           seed=args.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    _print_solution(rep)
    _write_report(args, "solve-robust", jsonio.relaxation_report_obj(rep),
                  rep.timings)
    return _solution_exit(rep)


def _parse_box(text: str, n: int) -> Tuple[Tuple[float, float], ...]:
    out = []
    for part in text.split(","):
        pieces = part.split(":")
        if len(pieces) != 2:
            raise UsageError(f"bad --box range {part!r}, expected lo:hi")
        try:
            lo, hi = float(pieces[0]), float(pieces[1])
        except ValueError:
            raise UsageError(f"bad --box range {part!r}, expected numbers")
        if lo >= hi:
            raise UsageError(f"bad --box range {part!r}, need lo < hi")
        out.append((lo, hi))
    if len(out) != n:
        raise UsageError(f"--box has {len(out)} axes, program has {n} variables")
    return tuple(out)


def cmd_oracle_grid(args) -> int:
    prog = _read(args.path, jsonio.parse_program)
    spec = GridSpec(_parse_box(args.box, prog.n), args.res)
    try:
        res = grid_minimize(prog, spec)
    except UnsupportedSet as exc:
        print(f"inconclusive: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return 1
    coords = ", ".join(f"{v:.6f}" for v in res.argmin)
    print(f"value: {res.value:.6f}")
    print(f"x: ({coords})")
    print(f"error-bound: {res.error_bound:.3e}")
    obj = {
        "value": res.value,
        "argmin": [float(v) for v in res.argmin],
        "error_bound": res.error_bound,
        "feasible_count": res.feasible_count,
    }
    _write_report(args, "oracle grid", obj)
    return 0


def cmd_moments(args) -> int:
    prog = _read(args.path, jsonio.parse_program)
    two_d = _check_degree_flag(args.degree)
    try:
        rep = solve_program(prog, two_d=two_d, settings=_settings(args),
                            seed=args.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    for w in rep.warnings:
        print(f"warning: {w}", file=sys.stderr)
    if rep.moments is None:
        print(f"no moment vector: {rep.statuses['moment']}", file=sys.stderr)
        return _solution_exit(rep)
    obj = jsonio.moments_obj(rep.moments)
    print(jsonio.dumps(obj), end="")
    _write_report(args, "moments", obj, rep.timings)
    return _solution_exit(rep)


def run(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 3
    except FileError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (Inconclusive, SolverError) as exc:
        print(f"inconclusive: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run(argv=None))


if __name__ == "__main__":
    main()
