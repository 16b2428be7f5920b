"""Sup-representable convex functions over SOCP-representable parameter sets.

A function here is f(x) = sup over y in Omega of h0(x) + sum_j y_j h_j(x),
where Omega = {y : exists z with A_0 + sum y_j A_j + sum z_l B_l sdd} is
nonempty and compact. Every evaluation is one small second-order cone
maximization; sums of two such functions live on the product parameter set
with block-diagonal matrix data.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from .matrixcones import SymMatrix, add_sdd_membership, certify_sdd
from .poly import Polynomial, poly_combine, poly_eval
from .socp import (
    LinExpr,
    ProgramBuilder,
    SolveStatus,
    SolverSettings,
    feasibility,
    solve,
)

BOUND_CAP = 1e8


class Inconclusive(Exception):
    """Solver breakdown while deciding a set-membership or evaluation query."""


class Unbounded(Exception):
    """Parameter set failed the compactness heuristic and a sup diverged."""


class SocpSet:
    """Parameter set {y : exists z, A_0 + sum y_j A_j + sum z_l B_l sdd}.

    Nonemptiness is verified once at construction; a per-coordinate bound
    probe (maximize each +-y_j, cap 1e8) records whether the set looks
    compact. Instances are immutable afterwards.
    """

    __slots__ = ("s", "p", "q", "A", "B", "bounded", "bounds", "_witness", "_components")

    def __init__(self, A: Sequence, B: Sequence = (), settings: SolverSettings | None = None):
        mats = tuple(m if isinstance(m, SymMatrix) else SymMatrix(m) for m in A)
        if not mats:
            raise ValueError("need at least the constant matrix A_0")
        q = mats[0].q
        bmats = tuple(m if isinstance(m, SymMatrix) else SymMatrix(m) for m in B)
        for m in mats + bmats:
            if m.q != q:
                raise ValueError("all matrices must share one size")
        object.__setattr__(self, "A", mats)
        object.__setattr__(self, "B", bmats)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "s", len(mats) - 1)
        object.__setattr__(self, "p", len(bmats))
        object.__setattr__(self, "_components", self._structure_components())

        witness = self._check_nonempty(settings)
        object.__setattr__(self, "_witness", witness)
        bounded, bounds = self._probe_bounds(settings)
        object.__setattr__(self, "bounded", bounded)
        object.__setattr__(self, "bounds", bounds)

    def __setattr__(self, name, value):
        raise AttributeError("SocpSet is immutable")

    def _check_nonempty(self, settings) -> np.ndarray:
        if self.s == 0 and self.p == 0:
            res = certify_sdd(self.A[0])
            if res.status == "refuted":
                raise ValueError("parameter set is empty: A_0 is not sdd")
            if res.status == "inconclusive":
                raise Inconclusive("could not decide nonemptiness")
            return np.zeros(0)
        builder = ProgramBuilder()
        y_cols, _ = self._membership(builder)
        res = feasibility(builder.build(), settings)
        if res.status == "infeasible":
            raise ValueError("parameter set is empty")
        if res.status != "feasible":
            raise Inconclusive("could not decide nonemptiness")
        return res.witness[list(y_cols)] if self.s else np.zeros(0)

    def _probe_bounds(self, settings) -> Tuple[bool, Tuple[Tuple[float, float], ...]]:
        bounded = True
        bounds = []
        for j in range(self.s):
            c = np.zeros(self.s)
            c[j] = 1.0
            try:
                hi, _, ok_hi = self._support(c, settings)
                lo, _, ok_lo = self._support(-c, settings)
            except Inconclusive:
                # an undecided probe is flagged, not fatal: the set may be fine
                bounded = False
                bounds.append((-np.inf, np.inf))
                continue
            if not (ok_hi and ok_lo) or max(abs(hi), abs(lo)) > BOUND_CAP:
                bounded = False
            bounds.append((-lo, hi))
        return bounded, tuple(bounds)

    def _structure_components(self):
        """Connected components of the union sparsity pattern over A and B.

        When every matrix is block diagonal on the same partition, sdd
        membership decouples blockwise; emitting one system per component
        avoids redundant cross-block 2x2 variables whose degenerate freedom
        stalls the splitting solver.
        """
        adj = np.zeros((self.q, self.q), dtype=bool)
        for m in self.A + self.B:
            adj |= m.mat != 0.0
        seen = [False] * self.q
        comps = []
        for start in range(self.q):
            if seen[start]:
                continue
            seen[start] = True
            stack, comp = [start], [start]
            while stack:
                i = stack.pop()
                for j in range(self.q):
                    if j != i and adj[i, j] and not seen[j]:
                        seen[j] = True
                        stack.append(j)
                        comp.append(j)
            comps.append(tuple(sorted(comp)))
        return tuple(comps)

    def _membership(self, builder: ProgramBuilder, y_fixed=None, margin=None):
        """Emit the sdd membership system; returns (y columns, z columns)."""
        if y_fixed is None:
            y_cols = builder.new_vars(self.s)
        else:
            y_cols = ()
        z_cols = builder.new_vars(self.p)
        entries = {}
        for r in range(self.q):
            for c in range(r, self.q):
                e = LinExpr.const_of(self.A[0][r, c])
                for j in range(self.s):
                    coef = self.A[j + 1][r, c]
                    if y_fixed is None:
                        e.add_term(y_cols[j], coef)
                    else:
                        e = e.plus(LinExpr.const_of(coef * float(y_fixed[j])))
                for l in range(self.p):
                    e.add_term(z_cols[l], self.B[l][r, c])
                entries[(r, c)] = e
        for comp in self._components:
            local = {
                (a, b): entries[(comp[a], comp[b])]
                for a in range(len(comp))
                for b in range(a, len(comp))
            }
            add_sdd_membership(builder, local, len(comp), margin=margin)
        return y_cols, z_cols

    def _support(self, c: np.ndarray, settings) -> Tuple[float, np.ndarray, bool]:
        """max c'y over the set; returns (value, argmax, solved_ok)."""
        if self.s == 0:
            return 0.0, np.zeros(0), True
        builder = ProgramBuilder()
        y_cols, _ = self._membership(builder)
        for j, cj in enumerate(c):
            builder.add_objective_term(y_cols[j], -float(cj))
        sol = solve(builder.build(), settings)
        if sol.status == SolveStatus.OPTIMAL:
            return -sol.objective, sol.x[list(y_cols)], True
        if sol.status == SolveStatus.DUAL_INFEASIBLE:
            return np.inf, np.zeros(self.s), False
        raise Inconclusive(f"support solve ended with {sol.status.name}")

    def support(self, c: Sequence[float], settings: SolverSettings | None = None):
        value, y, ok = self._support(np.asarray(c, dtype=float), settings)
        if not ok:
            raise Unbounded(
                f"sup of a linear functional diverged (bounded probe said {self.bounded})"
            )
        return value, y

    def contains(self, y: Sequence[float], settings: SolverSettings | None = None) -> bool:
        y = np.asarray(y, dtype=float)
        if y.shape != (self.s,):
            raise ValueError(f"expected a parameter vector of length {self.s}")
        if self.p == 0:
            m = self.A[0].mat + sum(y[j] * self.A[j + 1].mat for j in range(self.s))
            res = certify_sdd(SymMatrix(m))
            if res.status == "inconclusive":
                raise Inconclusive("membership solve hit its limit")
            return res.status == "certified"
        # maximize the decomposition slack: its sign decides membership and
        # the solve stays conditioned for y near the boundary of the set
        builder = ProgramBuilder()
        slack = builder.new_var()
        self._membership(builder, y_fixed=y, margin=LinExpr.of(slack))
        builder.add_objective_term(slack, -1.0)
        cfg = settings or SolverSettings()
        sol = solve(builder.build(), cfg)
        if sol.status == SolveStatus.DUAL_INFEASIBLE:
            return True  # slack unbounded above: strictly interior
        if sol.status != SolveStatus.OPTIMAL:
            raise Inconclusive("membership solve hit its limit")
        scale = 1.0 + max(float(np.max(np.abs(m.mat))) for m in self.A + self.B)
        return -sol.objective >= -10.0 * cfg.tol_gap * scale

    def sample(self, count: int, seed: int = 0, settings: SolverSettings | None = None):
        """Boundary points from support directions, then pairwise midpoints."""
        if self.s == 0:
            return [np.zeros(0)] * min(count, 1)
        rng = np.random.default_rng(seed)
        points: list = []
        seen = set()

        def push(y):
            key = tuple(np.round(y, 9))
            if key not in seen:
                seen.add(key)
                points.append(np.asarray(y, dtype=float))

        directions = [row for j in range(self.s) for row in (np.eye(self.s)[j], -np.eye(self.s)[j])]
        attempts = 0
        while len(points) < count and attempts < 4 * count + 8:
            attempts += 1
            if directions:
                c = directions.pop(0)
            else:
                c = rng.standard_normal(self.s)
                norm = np.linalg.norm(c)
                if norm < 1e-12:
                    continue
                c /= norm
            _, y, ok = self._support(c, settings)
            if ok:
                push(y)
            if len(points) >= count:
                break
            # midpoints stay inside by convexity and probe the interior
            base = len(points)
            for a in range(base):
                for b in range(a + 1, base):
                    if len(points) >= count:
                        break
                    push(0.5 * (points[a] + points[b]))
        return points[:count]

    def product(self, other: "SocpSet") -> "SocpSet":
        q1, q2 = self.q, other.q

        def embed(m: Optional[SymMatrix], top: bool) -> np.ndarray:
            out = np.zeros((q1 + q2, q1 + q2))
            if m is not None:
                if top:
                    out[:q1, :q1] = m.mat
                else:
                    out[q1:, q1:] = m.mat
            return out

        a0 = embed(self.A[0], True) + embed(other.A[0], False)
        a_list = [a0]
        a_list += [embed(m, True) for m in self.A[1:]]
        a_list += [embed(m, False) for m in other.A[1:]]
        b_list = [embed(m, True) for m in self.B]
        b_list += [embed(m, False) for m in other.B]
        return SocpSet(a_list, b_list)

    def __repr__(self) -> str:
        return f"SocpSet(s={self.s}, p={self.p}, q={self.q}, bounded={self.bounded})"


def omega_contains(sset: SocpSet, y, settings: SolverSettings | None = None) -> bool:
    return sset.contains(y, settings)


@dataclass(frozen=True)
class ValidationReport:
    """Spot-check evidence that every sampled parameter instance certifies.

    Sampling is necessary, never sufficient: certified samples do not prove
    the property for the whole parameter set.
    """

    samples: Tuple[Tuple[float, ...], ...]
    failures: Tuple[Tuple[Tuple[float, ...], str], ...]
    inconclusive: Tuple[Tuple[float, ...], ...]

    @property
    def passed(self) -> bool:
        return not self.failures

    @property
    def clean(self) -> bool:
        return not self.failures and not self.inconclusive


class SemiAlgebraicFunction:
    """f(x) = sup over y in omega of h0(x) + sum_j y_j h_j(x)."""

    __slots__ = ("h0", "hs", "omega", "validation")

    def __init__(self, h0: Polynomial, hs: Sequence[Polynomial], omega: SocpSet):
        hs = tuple(hs)
        if any(h.n != h0.n for h in hs):
            raise ValueError("all polynomials must share one variable count")
        if len(hs) != omega.s:
            raise ValueError(
                f"parameter count mismatch: {len(hs)} polynomials vs s={omega.s}"
            )
        self.h0 = h0
        self.hs = hs
        self.omega = omega
        self.validation: Optional[ValidationReport] = None

    @property
    def n(self) -> int:
        return self.h0.n

    def instance(self, y: Sequence[float]) -> Polynomial:
        """The polynomial h0 + sum_j y_j h_j at a fixed parameter."""
        return poly_combine((1.0, *map(float, y)), (self.h0, *self.hs))

    def eval(self, x, settings: SolverSettings | None = None):
        """Returns (f(x), maximizing y)."""
        x = np.asarray(x, dtype=float)
        base = poly_eval(self.h0, x)
        if self.omega.s == 0:
            return base, np.zeros(0)
        c = np.array([poly_eval(h, x) for h in self.hs])
        value, y = self.omega.support(c, settings)
        return base + value, y

    def __call__(self, x, settings: SolverSettings | None = None) -> float:
        return self.eval(x, settings)[0]

    def plus(self, other: "SemiAlgebraicFunction") -> "SemiAlgebraicFunction":
        if other.n != self.n:
            raise ValueError("variable counts differ")
        return SemiAlgebraicFunction(
            self.h0 + other.h0, self.hs + other.hs, self.omega.product(other.omega)
        )

    def validate(self, samples: int = 10, seed: int = 0,
                 settings: SolverSettings | None = None) -> ValidationReport:
        from .certify import certify_first_order_convex

        if self.omega.s == 0:
            draws = [np.zeros(0)]
        else:
            draws = self.omega.sample(samples, seed, settings)
        checked, failures, inconclusive = [], [], []
        for y in draws:
            key = tuple(float(v) for v in y)
            checked.append(key)
            res = certify_first_order_convex(self.instance(y), settings)
            if res.status == "refuted":
                reason = res.refutation.reason if res.refutation else "refuted"
                failures.append((key, reason))
            elif res.status == "inconclusive":
                inconclusive.append(key)
        report = ValidationReport(tuple(checked), tuple(failures), tuple(inconclusive))
        self.validation = report
        return report


def add(f1: SemiAlgebraicFunction, f2: SemiAlgebraicFunction) -> SemiAlgebraicFunction:
    return f1.plus(f2)


def validate(f: SemiAlgebraicFunction, samples: int = 10, seed: int = 0,
             settings: SolverSettings | None = None) -> ValidationReport:
    return f.validate(samples, seed, settings)


class Program:
    """min f0(x) subject to f_i(x) <= 0 with sup-representable data."""

    __slots__ = ("objective", "constraints")

    def __init__(self, objective: SemiAlgebraicFunction,
                 constraints: Sequence[SemiAlgebraicFunction] = ()):
        constraints = tuple(constraints)
        for f in constraints:
            if f.n != objective.n:
                raise ValueError("objective and constraints must share variables")
        self.objective = objective
        self.constraints = constraints

    @property
    def n(self) -> int:
        return self.objective.n

    @property
    def m(self) -> int:
        return len(self.constraints)

    def functions(self) -> Tuple[SemiAlgebraicFunction, ...]:
        return (self.objective,) + self.constraints


# -- canonical constructions -----------------------------------------------------


def trivial_set() -> SocpSet:
    """One-point set with no parameters; 1x1 constant matrix [1]."""
    return SocpSet([np.array([[1.0]])])


def from_polynomial(p: Polynomial) -> SemiAlgebraicFunction:
    """Wrap a plain polynomial as a sup over the trivial set."""
    return SemiAlgebraicFunction(p, (), trivial_set())


def unit_ball_set(s: int) -> SocpSet:
    """Euclidean unit ball via the (s+1)x(s+1) arrow matrix.

    M(y) puts 1 on the diagonal and y in the first row/column; scaling by
    diag(1, |y_1|, ..., |y_s|) makes M(y) diagonally dominant exactly when
    ||y|| <= 1, so the sdd region is the closed unit ball.
    """
    if s < 1:
        raise ValueError("need at least one parameter")
    a0 = np.eye(s + 1)
    mats = [a0]
    for j in range(s):
        aj = np.zeros((s + 1, s + 1))
        aj[0, j + 1] = aj[j + 1, 0] = 1.0
        mats.append(aj)
    return SocpSet(mats)


def box_set(s: int) -> SocpSet:
    """Unit box [-1,1]^s as 2x2 blocks [[1, y_j], [y_j, 1]] on the diagonal."""
    if s < 1:
        raise ValueError("need at least one parameter")
    a0 = np.eye(2 * s)
    mats = [a0]
    for j in range(s):
        aj = np.zeros((2 * s, 2 * s))
        aj[2 * j, 2 * j + 1] = aj[2 * j + 1, 2 * j] = 1.0
        mats.append(aj)
    return SocpSet(mats)


def norm2_function(n: int, weight: float = 1.0) -> SemiAlgebraicFunction:
    """weight * ||x||_2 as sup of <y, weight*x> over the unit ball."""
    hs = [Polynomial.variable(n, i) * float(weight) for i in range(n)]
    return SemiAlgebraicFunction(Polynomial.zero(n), hs, unit_ball_set(n))


def norm1_function(n: int, weight: float = 1.0) -> SemiAlgebraicFunction:
    """weight * ||x||_1 as sup of <y, weight*x> over the unit box."""
    hs = [Polynomial.variable(n, i) * float(weight) for i in range(n)]
    return SemiAlgebraicFunction(Polynomial.zero(n), hs, box_set(n))
