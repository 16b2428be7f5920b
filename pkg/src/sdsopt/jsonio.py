"""Versioned JSON schemas for problems, certificates and reports.

Every document carries a single top-level ``"version"`` field (currently 1);
unknown versions are rejected rather than guessed. Parse errors raise
SchemaError with a best-effort line number so callers can print
``file:line: message`` diagnostics. Reports split run-dependent data
(timestamps, wall times) into a ``meta`` object so the ``result`` payload is
byte-identical across runs with the same inputs and flags.
"""

from __future__ import annotations

import json
from datetime import datetime, timezone
from typing import Any, Dict, List, Optional

import numpy as np

from .certify import CertifyResult
from .matrixcones import SddCertificate, SddResult, SymMatrix
from .poly import Polynomial
from .relax import MomentVector, RelaxationReport
from .robust import RobustProgram, UncertaintySet
from .semialg import Program, SemiAlgebraicFunction, SocpSet

SCHEMA_VERSION = 1


class SchemaError(ValueError):
    def __init__(self, message: str, token: Optional[str] = None,
                 line: Optional[int] = None):
        super().__init__(message)
        self.message = message
        self.token = token
        self.line = line


def _line_of(text: str, token: Optional[str]) -> int:
    if token:
        for k, row in enumerate(text.splitlines(), start=1):
            if token in row:
                return k
    return 1


def loads(text: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON: {exc.msg}", line=exc.lineno) from exc


def _require(obj: Any, key: str, kind, where: str):
    if not isinstance(obj, dict):
        raise SchemaError(f"{where} must be an object", token=where)
    if key not in obj:
        raise SchemaError(f"{where} is missing required key \"{key}\"",
                          token=where)
    val = obj[key]
    if kind is float:
        if isinstance(val, bool) or not isinstance(val, (int, float)):
            raise SchemaError(f"{where}.{key} must be a number", token=f'"{key}"')
        return float(val)
    if kind is int and (isinstance(val, bool) or not isinstance(val, int)):
        raise SchemaError(f"{where}.{key} must be an integer", token=f'"{key}"')
    if kind is list and not isinstance(val, list):
        raise SchemaError(f"{where}.{key} must be an array", token=f'"{key}"')
    if kind is dict and not isinstance(val, dict):
        raise SchemaError(f"{where}.{key} must be an object", token=f'"{key}"')
    return val


def check_version(obj: Any, where: str = "document") -> None:
    ver = _require(obj, "version", int, where)
    if ver != SCHEMA_VERSION:
        raise SchemaError(
            f"unsupported schema version {ver} (expected {SCHEMA_VERSION})",
            token='"version"')


# -- problem data in ------------------------------------------------------------


def parse_polynomial(obj: Any, where: str = "polynomial") -> Polynomial:
    n = _require(obj, "n", int, where)
    if n < 1:
        raise SchemaError(f"{where}.n must be positive", token='"n"')
    terms = _require(obj, "terms", list, where)
    coefs: Dict[tuple, float] = {}
    for k, t in enumerate(terms):
        spot = f"{where}.terms[{k}]"
        exp = _require(t, "exp", list, spot)
        coef = _require(t, "coef", float, spot)
        if len(exp) != n or not all(isinstance(e, int) and not isinstance(e, bool)
                                    and e >= 0 for e in exp):
            raise SchemaError(
                f"{spot}.exp must hold {n} nonnegative integers", token='"exp"')
        key = tuple(exp)
        if key in coefs:
            raise SchemaError(f"{spot} repeats exponent {list(key)}",
                              token=json.dumps(exp))
        coefs[key] = coef
    return Polynomial(n, coefs)


def _parse_rows(rows: Any, q: int, where: str) -> SymMatrix:
    if (not isinstance(rows, list) or len(rows) != q
            or any(not isinstance(r, list) or len(r) != q for r in rows)):
        raise SchemaError(f"{where} must be a {q}x{q} array of numbers",
                          token='"rows"')
    try:
        return SymMatrix(np.asarray(rows, dtype=float))
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"{where}: {exc}", token='"rows"') from exc


def parse_matrix(obj: Any, where: str = "matrix") -> SymMatrix:
    q = _require(obj, "q", int, where)
    if q < 1:
        raise SchemaError(f"{where}.q must be positive", token='"q"')
    return _parse_rows(_require(obj, "rows", list, where), q, f"{where}.rows")


def parse_omega(obj: Any, where: str = "omega") -> SocpSet:
    q = _require(obj, "q", int, where)
    if q < 1:
        raise SchemaError(f"{where}.q must be positive", token='"q"')
    amats = _require(obj, "A", list, where)
    if not amats:
        raise SchemaError(f"{where}.A needs at least the constant matrix",
                          token='"A"')
    bmats = obj.get("B", [])
    if not isinstance(bmats, list):
        raise SchemaError(f"{where}.B must be an array", token='"B"')
    a = [_parse_rows(r, q, f"{where}.A[{k}]") for k, r in enumerate(amats)]
    b = [_parse_rows(r, q, f"{where}.B[{k}]") for k, r in enumerate(bmats)]
    try:
        return SocpSet(a, b)
    except ValueError as exc:
        raise SchemaError(f"{where}: {exc}", token='"A"') from exc


def parse_function(obj: Any, where: str = "function") -> SemiAlgebraicFunction:
    h0 = parse_polynomial(_require(obj, "h0", dict, where), f"{where}.h0")
    hs_objs = _require(obj, "hs", list, where)
    hs = [parse_polynomial(t, f"{where}.hs[{k}]") for k, t in enumerate(hs_objs)]
    omega = parse_omega(_require(obj, "omega", dict, where), f"{where}.omega")
    try:
        return SemiAlgebraicFunction(h0, hs, omega)
    except ValueError as exc:
        raise SchemaError(f"{where}: {exc}", token='"omega"') from exc


def parse_program(obj: Any) -> Program:
    check_version(obj, "program")
    objective = parse_function(_require(obj, "objective", dict, "program"),
                               "objective")
    cons = _require(obj, "constraints", list, "program")
    fs = [parse_function(c, f"constraints[{k}]") for k, c in enumerate(cons)]
    try:
        return Program(objective, fs)
    except ValueError as exc:
        raise SchemaError(str(exc), token='"constraints"') from exc


def parse_robust(obj: Any) -> RobustProgram:
    check_version(obj, "robust program")
    objective = parse_polynomial(_require(obj, "objective", dict, "robust program"),
                                 "objective")
    fams = _require(obj, "families", list, "robust program")
    pairs = []
    for k, fam in enumerate(fams):
        spot = f"families[{k}]"
        gs_objs = _require(fam, "gs", list, spot)
        gs = [parse_polynomial(t, f"{spot}.gs[{j}]") for j, t in enumerate(gs_objs)]
        uobj = _require(fam, "uncertainty", dict, spot)
        q = _require(uobj, "q", int, f"{spot}.uncertainty")
        t = _require(uobj, "t", int, f"{spot}.uncertainty")
        amats = _require(uobj, "A", list, f"{spot}.uncertainty")
        mats = [_parse_rows(r, q, f"{spot}.uncertainty.A[{j}]")
                for j, r in enumerate(amats)]
        try:
            pairs.append((gs, UncertaintySet(mats, t)))
        except ValueError as exc:
            raise SchemaError(f"{spot}: {exc}", token='"uncertainty"') from exc
    try:
        return RobustProgram(objective, pairs)
    except ValueError as exc:
        raise SchemaError(str(exc), token='"families"') from exc


def read_document(path: str, parse) -> Any:
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    try:
        return parse(loads(text))
    except SchemaError as exc:
        if exc.line is None:
            exc.line = _line_of(text, exc.token)
        raise


# -- problem data out ------------------------------------------------------------


def polynomial_obj(p: Polynomial) -> Dict[str, Any]:
    terms = [{"exp": list(e), "coef": c}
             for e, c in sorted(p.terms.items())]
    return {"n": p.n, "terms": terms}


def matrix_obj(m: SymMatrix) -> Dict[str, Any]:
    return {"q": m.q, "rows": [[float(v) for v in row] for row in m.mat]}


def function_obj(f: SemiAlgebraicFunction) -> Dict[str, Any]:
    return {
        "h0": polynomial_obj(f.h0),
        "hs": [polynomial_obj(h) for h in f.hs],
        "omega": {
            "q": f.omega.q,
            "A": [matrix_obj(m)["rows"] for m in f.omega.A],
            "B": [matrix_obj(m)["rows"] for m in f.omega.B],
        },
    }


def program_obj(p: Program) -> Dict[str, Any]:
    return {
        "version": SCHEMA_VERSION,
        "objective": function_obj(p.objective),
        "constraints": [function_obj(f) for f in p.constraints],
    }


def robust_obj(rp: RobustProgram) -> Dict[str, Any]:
    return {
        "version": SCHEMA_VERSION,
        "objective": polynomial_obj(rp.objective),
        "families": [
            {
                "gs": [polynomial_obj(g) for g in gs],
                "uncertainty": {
                    "q": u.q,
                    "t": u.t,
                    "A": [matrix_obj(m)["rows"] for m in u.A],
                },
            }
            for gs, u in rp.families
        ],
    }


def dumps(obj: Any) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def write_document(path: str, obj: Dict[str, Any]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(obj))


# -- results out -----------------------------------------------------------------


def _floats(seq) -> Optional[List[float]]:
    return None if seq is None else [float(v) for v in seq]


def sdd_certificate_obj(cert: SddCertificate) -> Dict[str, Any]:
    return {
        "q": cert.q,
        "blocks": [{"i": i, "j": j, "entries": [mii, mij, mjj]}
                   for (i, j, mii, mij, mjj) in cert.blocks],
        "diag": _floats(cert.diag) or [],
    }


def sdd_result_obj(res: SddResult) -> Dict[str, Any]:
    out: Dict[str, Any] = {"status": res.status}
    if res.certificate is not None:
        out["certificate"] = sdd_certificate_obj(res.certificate)
    if res.scaling is not None:
        out["scaling"] = _floats(res.scaling.diag)
    if res.refutation is not None:
        out["refutation"] = {
            "dual_matrix": matrix_obj(res.refutation.dual_matrix)["rows"],
            "inner": float(res.refutation.inner),
            "min_minor_eig": float(res.refutation.min_minor_eig),
        }
    return out


def certify_result_obj(res: CertifyResult) -> Dict[str, Any]:
    out: Dict[str, Any] = {"status": res.status, "detail": res.detail}
    if res.certificate is not None:
        out["certificate"] = {
            "basis": [list(e) for e in res.certificate.basis.exponents],
            "gram": sdd_certificate_obj(res.certificate.gram),
        }
    if res.refutation is not None:
        ref: Dict[str, Any] = {
            "basis": [list(e) for e in res.refutation.basis.exponents],
            "reason": res.refutation.reason,
        }
        if res.refutation.dual_moments is not None:
            ref["dual_moments"] = [
                {"exp": list(e), "weight": float(v)}
                for e, v in sorted(res.refutation.dual_moments.items())
            ]
        if res.refutation.inner is not None:
            ref["inner"] = float(res.refutation.inner)
        out["refutation"] = ref
    return out


def moments_obj(mom: MomentVector) -> Dict[str, Any]:
    return {
        "n": mom.n,
        "degree": 2 * mom.d,
        "basis": [list(e) for e in mom.basis().exponents],
        "w": _floats(mom.w),
    }


def slater_obj(rep) -> Optional[Dict[str, Any]]:
    if rep is None:
        return None
    return {
        "found": rep.found,
        "point": _floats(rep.point),
        "margin": float(rep.margin),
        "evaluations": rep.evaluations,
    }


def a2_obj(rep) -> Optional[Dict[str, Any]]:
    if rep is None:
        return None
    return {
        "ok": rep.ok,
        "entries": [
            {
                "index": e.index,
                "certified": e.certified,
                "margin": float(e.margin),
                "y": _floats(e.y),
                "z": _floats(e.z),
                "method": e.method,
            }
            for e in rep.entries
        ],
    }


def relaxation_report_obj(rep: RelaxationReport) -> Dict[str, Any]:
    return {
        "two_d": rep.two_d,
        "dual_value": rep.dual_value,
        "moment_value": rep.moment_value,
        "gap": rep.gap,
        "exact": rep.exact,
        "recovered_x": _floats(rep.recovered_x),
        "objective_at_x": rep.objective_at_x,
        "feasibility_residuals": _floats(rep.feasibility_residuals),
        "statuses": dict(rep.statuses),
        "iterations": dict(rep.iterations),
        "warnings": list(rep.warnings),
        "degenerate": list(rep.degenerate),
        "moments": None if rep.moments is None else moments_obj(rep.moments),
        "z_blocks": None if rep.z_blocks is None else
        [matrix_obj(z)["rows"] for z in rep.z_blocks],
        "lambdas": None if rep.lambdas is None else
        [{"lam0": float(l0), "lam": _floats(lj)} for l0, lj in rep.lambdas],
        "slater": slater_obj(rep.slater),
        "a2": a2_obj(rep.a2),
    }


def report_envelope(command: str, result: Dict[str, Any],
                    timings: Optional[Dict[str, float]] = None) -> Dict[str, Any]:
    """Deterministic result payload; run-dependent data confined to meta."""
    return {
        "version": SCHEMA_VERSION,
        "command": command,
        "result": result,
        "meta": {
            "timestamp": datetime.now(timezone.utc).isoformat(),
            "timings": {} if timings is None else
            {k: float(v) for k, v in timings.items()},
        },
    }
