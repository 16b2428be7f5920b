"""Exact SOCP relaxation pair for programs with sup-representable convex data.

Two sides are built from one Program. The multiplier side maximizes gamma
subject to sum_i (lam_0^i h_0^i + sum_j lam_j^i h_j^i) - gamma having an sdd
Gram matrix and each multiplier-weighted parameter matrix staying sdd. The
moment side minimizes the objective's pseudo-expectation over vectors w whose
moment matrix passes every 2x2 principal-minor second-order cone test, with
one auxiliary matrix Z_i per function dual to its parameter set. Both are
plain second-order cone programs; under a Slater point and a uniform
diagonal-dominance margin they close the gap and the degree-1 moments of the
moment solution solve the original program.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .certify import reduce_basis
from .matrixcones import SymMatrix, add_sdd_membership, is_dd
from .poly import (
    MonomialBasis,
    Polynomial,
    gradient,
    grlex_key,
    monomial_basis,
    poly_eval,
)
from .semialg import Program, SemiAlgebraicFunction, SocpSet
from .socp import (
    ConicProgram,
    LinExpr,
    ProgramBuilder,
    SolveStatus,
    SolverSettings,
    solve,
)

W0_TOL = 1e-9
GAP_TOL = 1e-5
FEAS_TOL = 1e-5
LAMBDA_ZERO = 1e-9
LAMBDA_RESIDUAL = 1e-6


@dataclass(frozen=True)
class MomentVector:
    """Pseudo-expectation values w_a over all monomials of degree <= 2d."""

    n: int
    d: int
    w: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.w, dtype=float).copy()
        basis = monomial_basis(self.n, 2 * self.d)
        if w.shape != (len(basis),):
            raise ValueError(
                f"expected {len(basis)} moments for n={self.n}, 2d={2 * self.d}"
            )
        w.setflags(write=False)
        object.__setattr__(self, "w", w)

    def basis(self) -> MonomialBasis:
        return monomial_basis(self.n, 2 * self.d)

    def value(self, exp) -> float:
        return float(self.w[self.basis().index(tuple(exp))])

    def lin_functional(self, f: Polynomial) -> float:
        if f.n != self.n:
            raise ValueError("variable count mismatch")
        if f.degree > 2 * self.d:
            raise ValueError(f"degree {f.degree} exceeds moment degree {2 * self.d}")
        basis = self.basis()
        return float(sum(c * self.w[basis.index(e)] for e, c in f.terms.items()))

    def moment_matrix(self) -> SymMatrix:
        half = monomial_basis(self.n, self.d)
        full = self.basis()
        size = len(half)
        out = np.empty((size, size))
        for a in range(size):
            ea = half.exponents[a]
            for b in range(a, size):
                eb = half.exponents[b]
                v = self.w[full.index(tuple(x + y for x, y in zip(ea, eb)))]
                out[a, b] = out[b, a] = v
        return SymMatrix(out)

    def recover(self) -> np.ndarray:
        """Degree-1 moments, in variable order."""
        basis = self.basis()
        exps = [tuple(1 if j == i else 0 for j in range(self.n)) for i in range(self.n)]
        return np.array([self.w[basis.index(e)] for e in exps])

    def minor_violation(self) -> float:
        """Worst violation of the 2x2 second-order cone tests on M_d(w)."""
        m = self.moment_matrix().mat
        worst = 0.0
        for a in range(m.shape[0]):
            for b in range(a + 1, m.shape[0]):
                lhs = float(np.hypot(2.0 * m[a, b], m[a, a] - m[b, b]))
                worst = max(worst, lhs - (m[a, a] + m[b, b]))
        return worst


def lin_functional(w: MomentVector, f: Polynomial) -> float:
    return w.lin_functional(f)


def recover(w: MomentVector) -> np.ndarray:
    return w.recover()


def default_degree(p: Program) -> int:
    """Smallest even degree covering every representation polynomial."""
    deg = 0
    for f in p.functions():
        for h in (f.h0, *f.hs):
            deg = max(deg, h.degree)
    deg = max(deg, 2)
    return deg + (deg % 2)


def _check_degree(p: Program, two_d: int) -> None:
    if two_d % 2 or two_d < 2:
        raise ValueError("relaxation degree must be a positive even integer")
    needed = max(
        h.degree for f in p.functions() for h in (f.h0, *f.hs)
    )
    if two_d < needed:
        raise ValueError(f"degree {two_d} too small: data has degree {needed}")


def _gram_basis(p: Program, d: int) -> MonomialBasis:
    """Pruned Gram basis from the aggregate support of all representation polys."""
    support = {tuple([0] * p.n)}
    for f in p.functions():
        for h in (f.h0, *f.hs):
            support.update(h.terms)
    agg = Polynomial(p.n, {e: 1.0 for e in support})
    return reduce_basis(agg, d)


@dataclass(frozen=True)
class DualIndex:
    gamma: int
    lam0: Dict[int, int]          # i >= 1
    lam: Dict[int, Tuple[int, ...]]
    z: Dict[int, Tuple[int, ...]]
    gram: Dict[Tuple[int, int], int]
    basis: MonomialBasis


def _build_dual(p: Program, two_d: int) -> Tuple[ConicProgram, DualIndex]:
    _check_degree(p, two_d)
    funcs = p.functions()
    basis = _gram_basis(p, two_d // 2)
    exps = basis.exponents
    nb = len(exps)

    builder = ProgramBuilder()
    gamma = builder.new_var()
    lam0: Dict[int, int] = {}
    lam: Dict[int, Tuple[int, ...]] = {}
    zvars: Dict[int, Tuple[int, ...]] = {}
    for i, f in enumerate(funcs):
        if i >= 1:
            lam0[i] = builder.new_var()
        lam[i] = tuple(builder.new_vars(f.omega.s))
        zvars[i] = tuple(builder.new_vars(f.omega.p))
    gram = {
        (a, b): builder.new_var() for a in range(nb) for b in range(a, nb)
    }

    products: Dict[Tuple[int, ...], List[Tuple[int, int]]] = {}
    for a in range(nb):
        for b in range(a, nb):
            key = tuple(x + y for x, y in zip(exps[a], exps[b]))
            products.setdefault(key, []).append((a, b))
    keys = set(products)
    for f in funcs:
        for h in (f.h0, *f.hs):
            keys.update(h.terms)
    zero = tuple([0] * p.n)
    keys.add(zero)

    # coefficient match: multiplier combination - gamma = Gram polynomial
    for key in sorted(keys, key=grlex_key):
        expr = LinExpr()
        for i, f in enumerate(funcs):
            c0 = f.h0.coefficient(key)
            if i == 0:
                expr = expr.plus(LinExpr.const_of(c0))
            elif c0:
                expr.add_term(lam0[i], c0)
            for j, h in enumerate(f.hs):
                cj = h.coefficient(key)
                if cj:
                    expr.add_term(lam[i][j], cj)
        if key == zero:
            expr.add_term(gamma, -1.0)
        for (a, b) in products.get(key, ()):
            expr.add_term(gram[(a, b)], -(1.0 if a == b else 2.0))
        builder.add_eq(expr, 0.0)

    # multiplier-weighted parameter matrices stay sdd
    for i, f in enumerate(funcs):
        om = f.omega
        entries = {}
        for r in range(om.q):
            for c in range(r, om.q):
                e = LinExpr()
                a0 = om.A[0][r, c]
                if i == 0:
                    e = e.plus(LinExpr.const_of(a0))
                elif a0:
                    e.add_term(lam0[i], a0)
                for j in range(om.s):
                    co = om.A[j + 1][r, c]
                    if co:
                        e.add_term(lam[i][j], co)
                for l in range(om.p):
                    co = om.B[l][r, c]
                    if co:
                        e.add_term(zvars[i][l], co)
                entries[(r, c)] = e
        add_sdd_membership(builder, entries, om.q)

    entries_gram = {pos: LinExpr.of(col) for pos, col in gram.items()}
    add_sdd_membership(builder, entries_gram, nb)

    for i in sorted(lam0):
        builder.add_ge(LinExpr.of(lam0[i]), 0.0)
    builder.add_objective_term(gamma, -1.0)
    return builder.build(), DualIndex(gamma, lam0, lam, zvars, gram, basis)


def build_dual(p: Program, two_d: int) -> ConicProgram:
    return _build_dual(p, two_d)[0]


@dataclass(frozen=True)
class MomentIndex:
    w: Tuple[int, ...]
    zmat: Dict[int, Dict[Tuple[int, int], int]]
    basis2d: MonomialBasis
    basisd: MonomialBasis


def _build_moment(p: Program, two_d: int) -> Tuple[ConicProgram, MomentIndex]:
    _check_degree(p, two_d)
    funcs = p.functions()
    n = p.n
    basis2d = monomial_basis(n, two_d)
    basisd = monomial_basis(n, two_d // 2)

    builder = ProgramBuilder()
    w_cols = tuple(builder.new_vars(len(basis2d)))
    zmat: Dict[int, Dict[Tuple[int, int], int]] = {}
    for i, f in enumerate(funcs):
        q = f.omega.q
        zmat[i] = {
            (r, c): builder.new_var() for r in range(q) for c in range(r, q)
        }

    def lw(h: Polynomial) -> LinExpr:
        e = LinExpr()
        for exp, coef in h.terms.items():
            e.add_term(w_cols[basis2d.index(exp)], coef)
        return e

    def inner(i: int, m: SymMatrix) -> LinExpr:
        e = LinExpr()
        for (r, c), col in zmat[i].items():
            coef = m[r, c] * (1.0 if r == c else 2.0)
            if coef:
                e.add_term(col, coef)
        return e

    obj = lw(funcs[0].h0).plus(inner(0, funcs[0].omega.A[0]))
    for col, coef in obj.coefs.items():
        builder.add_objective_term(col, coef)

    zero = tuple([0] * n)
    builder.add_eq(LinExpr.of(w_cols[basis2d.index(zero)]), 1.0)
    for i, f in enumerate(funcs):
        om = f.omega
        if i >= 1:
            builder.add_le(lw(f.h0).plus(inner(i, om.A[0])), 0.0)
        for j, h in enumerate(f.hs):
            builder.add_eq(lw(h).plus(inner(i, om.A[j + 1])), 0.0)
        for l in range(om.p):
            builder.add_eq(inner(i, om.B[l]), 0.0)

    def zexpr(i: int, r: int, c: int) -> LinExpr:
        return LinExpr.of(zmat[i][(min(r, c), max(r, c))])

    for i, f in enumerate(funcs):
        q = f.omega.q
        if q == 1:
            builder.add_ge(zexpr(i, 0, 0), 0.0)
            continue
        for r in range(q):
            for c in range(r + 1, q):
                builder.add_soc([
                    zexpr(i, r, r).plus(zexpr(i, c, c)),
                    zexpr(i, r, c).times(2.0),
                    zexpr(i, r, r).minus(zexpr(i, c, c)),
                ])

    def mexpr(a: int, b: int) -> LinExpr:
        ea, eb = basisd.exponents[a], basisd.exponents[b]
        key = tuple(x + y for x, y in zip(ea, eb))
        return LinExpr.of(w_cols[basis2d.index(key)])

    for a in range(len(basisd)):
        for b in range(a + 1, len(basisd)):
            builder.add_soc([
                mexpr(a, a).plus(mexpr(b, b)),
                mexpr(a, b).times(2.0),
                mexpr(a, a).minus(mexpr(b, b)),
            ])

    return builder.build(), MomentIndex(w_cols, zmat, basis2d, basisd)


def build_moment(p: Program, two_d: int) -> ConicProgram:
    return _build_moment(p, two_d)[0]


# -- assumption checks ------------------------------------------------------------


@dataclass(frozen=True)
class SlaterReport:
    found: bool
    point: Optional[np.ndarray]
    margin: float
    evaluations: int


def check_slater(p: Program, starts: int = 20, seed: int = 0,
                 settings: SolverSettings | None = None,
                 target: float = -1e-3, max_steps: int = 40,
                 budget: int = 1500) -> SlaterReport:
    """Multistart subgradient descent on max_i f_i, looking for a strict point."""
    if p.m == 0:
        return SlaterReport(True, None, -np.inf, 0)
    n = p.n
    grads = [
        ([gradient(f.h0)[k] for k in range(n)],
         [[gradient(h)[k] for k in range(n)] for h in f.hs])
        for f in p.constraints
    ]
    evals = 0

    def worst(x):
        nonlocal evals
        best_val, best_i, best_y = -np.inf, 0, None
        for i, f in enumerate(p.constraints):
            v, y = f.eval(x, settings)
            evals += 1
            if v > best_val:
                best_val, best_i, best_y = v, i, y
        g0, gj = grads[best_i]
        sub = np.array([
            poly_eval(g0[k], x)
            + sum(best_y[j] * poly_eval(gj[j][k], x) for j in range(len(gj)))
            for k in range(n)
        ])
        return best_val, sub

    rng = np.random.default_rng(seed)
    best_margin, best_point = np.inf, None
    for start in range(starts):
        x = np.zeros(n) if start == 0 else rng.standard_normal(n)
        for step in range(max_steps):
            val, sub = worst(x)
            if val < best_margin:
                best_margin, best_point = val, x.copy()
            if best_margin < target or evals >= budget:
                return SlaterReport(best_margin < 0, best_point, best_margin, evals)
            norm = np.linalg.norm(sub)
            if norm < 1e-12:
                break
            x = x - (0.5 / np.sqrt(step + 1.0)) * sub / norm
    return SlaterReport(best_margin < 0, best_point, best_margin, evals)


@dataclass(frozen=True)
class A2Entry:
    index: int
    certified: bool
    margin: float
    y: Tuple[float, ...]
    z: Tuple[float, ...]
    method: str


@dataclass(frozen=True)
class A2Report:
    entries: Tuple[A2Entry, ...]

    @property
    def ok(self) -> bool:
        return all(e.certified for e in self.entries)


def _a2_lp(om: SocpSet, settings, cap: float) -> Tuple[float, np.ndarray, np.ndarray]:
    """max t with identity scaling: every row's dominance slack >= t, vars capped."""
    builder = ProgramBuilder()
    y_cols = tuple(builder.new_vars(om.s))
    z_cols = tuple(builder.new_vars(om.p))
    t = builder.new_var()

    def entry(r, c):
        e = LinExpr.const_of(om.A[0][r, c])
        for j in range(om.s):
            e.add_term(y_cols[j], om.A[j + 1][r, c])
        for l in range(om.p):
            e.add_term(z_cols[l], om.B[l][r, c])
        return e

    g_cols = {}
    for r in range(om.q):
        for c in range(r + 1, om.q):
            g = builder.new_var()
            g_cols[(r, c)] = g
            off = entry(r, c)
            builder.add_le(off.minus(LinExpr.of(g)), 0.0)
            builder.add_le(off.times(-1.0).minus(LinExpr.of(g)), 0.0)
    for r in range(om.q):
        row = LinExpr.of(t)
        for c in range(om.q):
            if c != r:
                row = row.plus(LinExpr.of(g_cols[(min(r, c), max(r, c))]))
        builder.add_le(row.minus(entry(r, r)), 0.0)
    for col in (*y_cols, *z_cols, t):
        builder.add_le(LinExpr.of(col), cap)
        builder.add_ge(LinExpr.of(col), -cap)
    builder.add_objective_term(t, -1.0)

    sol = solve(builder.build(), settings)
    if sol.status != SolveStatus.OPTIMAL:
        return -np.inf, np.zeros(om.s), np.zeros(om.p)
    return -sol.objective, sol.x[list(y_cols)], sol.x[list(z_cols)]


def check_a2(p: Program, trials: Optional[Dict[int, tuple]] = None,
             settings: SolverSettings | None = None, cap: float = 1e3) -> A2Report:
    """Per function, search a parameter point whose matrix is strictly dominant.

    The identity-scaling search is a linear program over the row-wise
    absolute-value epigraph; a user trial (y, z, diag) is checked directly.
    """
    entries = []
    for i, f in enumerate(p.functions()):
        om = f.omega
        if trials and i in trials:
            yhat, zhat, diag = trials[i]
            m = om.A[0].mat.copy()
            for j in range(om.s):
                m = m + float(yhat[j]) * om.A[j + 1].mat
            for l in range(om.p):
                m = m + float(zhat[l]) * om.B[l].mat
            dvec = np.asarray(diag, dtype=float)
            scaled = dvec[:, None] * m * dvec[None, :]
            _, margin = is_dd(SymMatrix(scaled))
            entries.append(A2Entry(i, margin > 0, margin,
                                   tuple(map(float, yhat)), tuple(map(float, zhat)),
                                   "trial"))
            continue
        margin, yhat, zhat = _a2_lp(om, settings, cap)
        entries.append(A2Entry(i, margin > 1e-7, margin,
                               tuple(map(float, yhat)), tuple(map(float, zhat)), "lp"))
    return A2Report(tuple(entries))


# -- end-to-end solve -------------------------------------------------------------


@dataclass(frozen=True)
class RelaxationReport:
    dual_value: Optional[float]
    moment_value: Optional[float]
    gap: Optional[float]
    exact: Optional[bool]
    recovered_x: Optional[np.ndarray]
    objective_at_x: Optional[float]
    feasibility_residuals: Optional[Tuple[float, ...]]
    statuses: Dict[str, str]
    timings: Dict[str, float]
    warnings: Tuple[str, ...]
    moments: Optional[MomentVector]
    z_blocks: Optional[Tuple[SymMatrix, ...]]
    lambdas: Optional[Tuple[Tuple[float, Tuple[float, ...]], ...]]
    degenerate: Tuple[int, ...]
    slater: Optional[SlaterReport]
    a2: Optional[A2Report]
    iterations: Dict[str, int] = field(default_factory=dict)
    two_d: int = 0

    @property
    def value(self) -> Optional[float]:
        return self.moment_value if self.moment_value is not None else self.dual_value


def solve_program(p: Program, two_d: Optional[int] = None,
                  settings: SolverSettings | None = None,
                  seed: int = 0, run_checks: bool = True) -> RelaxationReport:
    settings = settings or SolverSettings()
    if two_d is None:
        two_d = default_degree(p)
    _check_degree(p, two_d)
    warnings: List[str] = []
    timings: Dict[str, float] = {}

    t0 = time.perf_counter()
    slater = a2 = None
    if run_checks:
        if p.m:
            slater = check_slater(p, seed=seed, settings=settings)
            if not slater.found:
                warnings.append(
                    "no strictly feasible point found; strong duality unverified"
                )
        a2 = check_a2(p, settings=settings)
        if not a2.ok:
            warnings.append(
                "no strict diagonal-dominance margin with identity scaling; "
                "recovery guarantees unverified"
            )
    timings["checks"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    dual_prog, didx = _build_dual(p, two_d)
    timings["dual_build"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    dsol = solve(dual_prog, settings)
    timings["dual_solve"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    moment_prog, midx = _build_moment(p, two_d)
    timings["moment_build"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    msol = solve(moment_prog, settings)
    timings["moment_solve"] = time.perf_counter() - t0

    statuses = {"dual": dsol.status.name, "moment": msol.status.name}
    iterations = {"dual": dsol.iterations, "moment": msol.iterations}

    dual_value = -dsol.objective if dsol.status == SolveStatus.OPTIMAL else None
    lambdas = None
    degenerate: List[int] = []
    if dsol.status == SolveStatus.OPTIMAL:
        lams = []
        for i in range(len(p.functions())):
            l0 = 1.0 if i == 0 else float(dsol.x[didx.lam0[i]])
            lj = tuple(float(dsol.x[c]) for c in didx.lam[i])
            lams.append((l0, lj))
            if i >= 1 and l0 <= LAMBDA_ZERO:
                if np.linalg.norm(lj) > LAMBDA_RESIDUAL:
                    degenerate.append(i)
        lambdas = tuple(lams)
        if degenerate:
            warnings.append(
                "vanishing base multiplier with nonvanishing coefficients at "
                f"constraints {degenerate}; dual structure suspect"
            )

    moment_value = None
    moments = None
    recovered = None
    residuals = None
    obj_at_x = None
    z_blocks = None
    if msol.status == SolveStatus.OPTIMAL:
        moment_value = msol.objective
        w = msol.x[list(midx.w)]
        w0 = float(w[0])
        # the solver meets w_0 = 1 only to its feasibility tolerance; warn
        # just when the miss exceeds what the solve could explain
        if abs(w0 - 1.0) > 10.0 * settings.tol_feas:
            warnings.append(f"moment normalization off by {abs(w0 - 1.0):.2e}")
        if w0 > 0.5:
            w = w / w0
        moments = MomentVector(p.n, two_d // 2, w)
        recovered = moments.recover()
        z_blocks = tuple(
            _z_matrix(msol.x, midx.zmat[i], f.omega.q)
            for i, f in enumerate(p.functions())
        )
        residuals = tuple(
            float(f.eval(recovered, settings)[0]) for f in p.constraints
        )
        obj_at_x = float(p.objective.eval(recovered, settings)[0])
        scale = 1.0 + abs(moment_value)
        if residuals and max(residuals) > FEAS_TOL * scale:
            warnings.append(
                f"recovered point violates a constraint by {max(residuals):.2e}"
            )

    gap = None
    exact = None
    if dual_value is not None and moment_value is not None:
        gap = moment_value - dual_value
        scale = 1.0 + max(abs(dual_value), abs(moment_value))
        exact = abs(gap) <= GAP_TOL * scale
        if not exact:
            warnings.append(
                f"relative duality gap {abs(gap) / scale:.2e} exceeds {GAP_TOL:.0e}; "
                "assumption failure suspected (A1/A2)"
            )
        if obj_at_x is not None and abs(obj_at_x - moment_value) > 1e-4 * scale:
            warnings.append(
                "objective at recovered point deviates from relaxation value by "
                f"{abs(obj_at_x - moment_value):.2e}"
            )

    return RelaxationReport(
        dual_value=dual_value,
        moment_value=moment_value,
        gap=gap,
        exact=exact,
        recovered_x=recovered,
        objective_at_x=obj_at_x,
        feasibility_residuals=residuals,
        statuses=statuses,
        timings=timings,
        warnings=tuple(warnings),
        moments=moments,
        z_blocks=z_blocks,
        lambdas=lambdas,
        degenerate=tuple(degenerate),
        slater=slater,
        a2=a2,
        iterations=iterations,
        two_d=two_d,
    )


def _z_matrix(x: np.ndarray, cols: Dict[Tuple[int, int], int], q: int) -> SymMatrix:
    out = np.zeros((q, q))
    for (r, c), col in cols.items():
        out[r, c] = out[c, r] = x[col]
    return SymMatrix(out)
