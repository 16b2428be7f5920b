"""Brute-force cross-checks kept independent of the conic machinery.

Grid minimization evaluates sup-representable functions through closed-form
support functions recognized from the parameter-set matrix pattern (trivial,
ellipsoidal arrow, per-coordinate box blocks, one-parameter diagonal), never
through a cone solve. Instance generation emits programs in exactly those
patterns with a recorded strictly feasible anchor, so everything it produces
is both solvable by the relaxation and checkable by the grid.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from .poly import Polynomial, monomial_basis, poly_eval
from .relax import MomentVector
from .semialg import (
    Program,
    SemiAlgebraicFunction,
    SocpSet,
    box_set,
    from_polynomial,
    unit_ball_set,
)

MAX_GRID_VARS = 4


class UnsupportedSet(Exception):
    """Parameter set has no recognized closed-form support function."""


@dataclass(frozen=True)
class GridSpec:
    box: Tuple[Tuple[float, float], ...]
    resolution: int

    def __post_init__(self):
        if self.resolution < 2:
            raise ValueError("resolution must be at least 2")
        box = tuple((float(lo), float(hi)) for lo, hi in self.box)
        if any(lo >= hi for lo, hi in box):
            raise ValueError("each axis needs lo < hi")
        object.__setattr__(self, "box", box)


@dataclass(frozen=True)
class GridResult:
    value: float
    argmin: np.ndarray
    error_bound: float
    feasible_count: int


def support_form(om: SocpSet) -> Optional[Callable[[np.ndarray], np.ndarray]]:
    """Closed-form sup of c'y over the set, batched over the last axis of c."""
    if om.s == 0:
        return lambda c: np.zeros(c.shape[:-1])
    if om.p:
        return None
    s, q = om.s, om.q
    a0 = om.A[0].mat
    ajs = [m.mat for m in om.A[1:]]

    # arrow pattern: identity diagonal, parameter j couples a distinct spoke
    # index to one shared hub; membership reduces to || t * y || <= 1
    if q == s + 1 and np.array_equal(a0, np.eye(q)):
        pairs = []
        for m in ajs:
            nz = np.argwhere(np.triu(m, 1) != 0)
            if len(nz) != 1:
                pairs = []
                break
            r, c = int(nz[0][0]), int(nz[0][1])
            v = float(m[r, c])
            expect = np.zeros((q, q))
            expect[r, c] = expect[c, r] = v
            if v <= 0 or not np.array_equal(m, expect):
                pairs = []
                break
            pairs.append((r, c, v))
        for hub in ({i for rc in pairs[:1] for i in rc[:2]}
                    if pairs else set()):
            spokes = [r if c == hub else c for r, c, _ in pairs
                      if hub in (r, c)]
            if len(spokes) == s and len(set(spokes)) == s and hub not in spokes:
                t = np.array([v for _, _, v in pairs])
                return lambda c: np.linalg.norm(c / t, axis=-1)

    # box pattern: 2x2 identity blocks, parameter j scaled into block j
    if q == 2 * s and np.array_equal(a0, np.eye(q)):
        t = np.zeros(s)
        for j, m in enumerate(ajs):
            tj = m[2 * j, 2 * j + 1]
            expect = np.zeros((q, q))
            expect[2 * j, 2 * j + 1] = expect[2 * j + 1, 2 * j] = tj
            if tj <= 0 or not np.array_equal(m, expect):
                break
            t[j] = tj
        else:
            return lambda c: np.sum(np.abs(c) / t, axis=-1)

    # one-parameter diagonal family: the set is an interval
    if s == 1 and all(np.count_nonzero(m - np.diag(np.diag(m))) == 0
                      for m in (a0, ajs[0])):
        d0, d1 = np.diag(a0), np.diag(ajs[0])
        lo, hi = -np.inf, np.inf
        for k in range(q):
            if d1[k] > 0:
                lo = max(lo, -d0[k] / d1[k])
            elif d1[k] < 0:
                hi = min(hi, -d0[k] / d1[k])
        if np.isfinite(lo) and np.isfinite(hi):
            return lambda c: np.maximum(c[..., 0] * lo, c[..., 0] * hi)

    return None


def evaluator(f: SemiAlgebraicFunction) -> Callable[[np.ndarray], np.ndarray]:
    """Vectorized x -> f(x) over arrays of shape (..., n)."""
    form = support_form(f.omega)
    if form is None:
        raise UnsupportedSet(
            "grid oracle needs a trivial, arrow, box-block or one-parameter "
            "diagonal parameter set"
        )
    h0, hs = f.h0, f.hs

    def ev(x: np.ndarray) -> np.ndarray:
        base = poly_eval(h0, x)
        if not hs:
            return np.asarray(base, dtype=float)
        c = np.stack([poly_eval(h, x) for h in hs], axis=-1)
        return base + form(c)

    return ev


def grid_minimize(p: Program, g: GridSpec) -> GridResult:
    if p.n > MAX_GRID_VARS:
        raise ValueError(f"grid search limited to {MAX_GRID_VARS} variables")
    if len(g.box) != p.n:
        raise ValueError(f"box has {len(g.box)} axes for {p.n} variables")
    ev0 = evaluator(p.objective)
    evs = [evaluator(f) for f in p.constraints]
    axes = [np.linspace(lo, hi, g.resolution) for lo, hi in g.box]

    # deterministic feasibility tolerances from a coarse pre-pass
    coarse = np.stack(
        np.meshgrid(*[np.linspace(lo, hi, min(g.resolution, 11)) for lo, hi in g.box],
                    indexing="ij"),
        axis=-1,
    ).reshape(-1, p.n)
    tols = [1e-9 * (1.0 + float(np.max(np.abs(e(coarse))))) for e in evs]

    best_val = np.inf
    best_x: Optional[np.ndarray] = None
    feasible = 0
    chunk = max(1, int(2e6 // max(1, g.resolution ** (p.n - 1))))
    for lo_idx in range(0, g.resolution, chunk):
        part = axes[0][lo_idx:lo_idx + chunk]
        mesh = np.meshgrid(part, *axes[1:], indexing="ij")
        pts = np.stack(mesh, axis=-1).reshape(-1, p.n)
        mask = np.ones(len(pts), dtype=bool)
        for e, tol in zip(evs, tols):
            mask &= e(pts) <= tol
        if not mask.any():
            continue
        feasible += int(mask.sum())
        vals = ev0(pts[mask])
        k = int(np.argmin(vals))
        if vals[k] < best_val:
            best_val = float(vals[k])
            best_x = pts[mask][k].copy()
    if best_x is None:
        raise ValueError("no feasible grid point found")

    spacing = np.array([(hi - lo) / (g.resolution - 1) for lo, hi in g.box])
    bound = 0.5 * _slope_estimate(ev0, coarse, evs, tols, best_x, spacing) \
        * float(np.linalg.norm(spacing))
    return GridResult(best_val, best_x, bound + 1e-9, feasible)


def _slope_estimate(ev0, coarse, evs, tols, best_x, spacing) -> float:
    """Largest sampled finite-difference gradient norm of the objective."""
    mask = np.ones(len(coarse), dtype=bool)
    for e, tol in zip(evs, tols):
        mask &= e(coarse) <= tol
    pts = coarse[mask]
    if len(pts) > 200:
        pts = pts[:: len(pts) // 200 + 1]
    pts = np.vstack([pts, best_x[None, :]]) if len(pts) else best_x[None, :]
    worst = 0.0
    for k in range(pts.shape[1]):
        step = max(spacing[k] / 4.0, 1e-7)
        shift = np.zeros(pts.shape[1])
        shift[k] = step
        gk = (ev0(pts + shift) - ev0(pts - shift)) / (2.0 * step)
        worst = max(worst, float(np.max(np.abs(gk))))
    return worst


def lift_point(x: Sequence[float], two_d: int) -> MomentVector:
    """Moment vector of the point mass at x: w_a = x^a."""
    if two_d % 2 or two_d < 2:
        raise ValueError("lifting degree must be a positive even integer")
    x = np.asarray(x, dtype=float)
    basis = monomial_basis(len(x), two_d)
    w = np.array([float(np.prod(x ** np.array(e))) for e in basis.exponents])
    return MomentVector(len(x), two_d // 2, w)


# -- instance generation ----------------------------------------------------------


def _diag_objective(rng: np.random.Generator, n: int) -> Polynomial:
    terms = {}
    a = rng.uniform(0.2, 1.5, n)
    b = rng.uniform(-1.0, 1.0, n)
    quartic = rng.random(n) < 0.3
    c = rng.uniform(0.1, 0.5, n)
    for i in range(n):
        e2 = tuple(2 if j == i else 0 for j in range(n))
        e1 = tuple(1 if j == i else 0 for j in range(n))
        terms[e2] = float(a[i])
        if b[i]:
            terms[e1] = float(b[i])
        if quartic[i]:
            e4 = tuple(4 if j == i else 0 for j in range(n))
            terms[e4] = float(c[i])
    return Polynomial(n, terms)


def _shifted_ball_poly(n: int, x0: np.ndarray, r: float) -> Polynomial:
    terms = {tuple([0] * n): float(np.dot(x0, x0) - r * r)}
    for i in range(n):
        e2 = tuple(2 if j == i else 0 for j in range(n))
        e1 = tuple(1 if j == i else 0 for j in range(n))
        terms[e2] = 1.0
        val = -2.0 * float(x0[i])
        if val:
            terms[e1] = val
    return Polynomial(n, terms)


def gen_instance_detail(seed: int, n: int, m: int
                        ) -> Tuple[Program, GridSpec, np.ndarray]:
    """Seeded program plus a covering grid box and its strict anchor point."""
    if not 1 <= n <= 4:
        raise ValueError("generator supports 1..4 variables")
    if not 0 <= m <= 4:
        raise ValueError("generator supports 0..4 constraints")
    rng = np.random.default_rng(seed)
    x0 = rng.uniform(-0.3, 0.3, n)
    objective = from_polynomial(_diag_objective(rng, n))

    constraints: List[SemiAlgebraicFunction] = []
    reach = 0.0
    kinds = ["ball", "sup_ball", "box_affine"]
    for k in range(m):
        kind = kinds[k % len(kinds)]
        if kind == "ball":
            r = float(rng.uniform(0.6, 1.2))
            constraints.append(from_polynomial(_shifted_ball_poly(n, x0, r)))
            reach = max(reach, r)
        elif kind == "sup_ball":
            r = float(rng.uniform(0.7, 1.3))
            rho = float(rng.uniform(0.2, 0.6))
            h0 = _shifted_ball_poly(n, x0, r)
            hs = []
            for i in range(n):
                hi = Polynomial.variable(n, i) * (2.0 * rho)
                hi = hi + Polynomial.constant(n, -2.0 * rho * float(x0[i]))
                hs.append(hi)
            constraints.append(SemiAlgebraicFunction(h0, hs, unit_ball_set(n)))
            reach = max(reach, r + rho)
        else:
            a = rng.uniform(-1.0, 1.0, n)
            d = rng.uniform(0.1, 0.4, n)
            margin = float(rng.uniform(0.2, 0.6))
            const = float(np.dot(a, x0) + np.dot(d, np.abs(x0)) + margin)
            terms = {tuple([0] * n): -const}
            for i in range(n):
                if a[i]:
                    terms[tuple(1 if j == i else 0 for j in range(n))] = float(a[i])
            h0 = Polynomial(n, terms)
            hs = [Polynomial.variable(n, i) * float(d[i]) for i in range(n)]
            constraints.append(SemiAlgebraicFunction(h0, hs, box_set(n)))

    if m:
        half = reach + 0.2
        box = tuple((float(x0[i] - half), float(x0[i] + half)) for i in range(n))
    else:
        # coercive diagonal objective: per-axis stationary bound
        f0 = objective.h0
        half = 2.0
        for i in range(n):
            e1 = tuple(1 if j == i else 0 for j in range(n))
            e2 = tuple(2 if j == i else 0 for j in range(n))
            b = abs(f0.coefficient(e1))
            a = f0.coefficient(e2)
            half = max(half, b / (2.0 * a) + 1.0)
        box = tuple((-half, half) for _ in range(n))
    res = {1: 601, 2: 241, 3: 61, 4: 31}[n]
    return Program(objective, constraints), GridSpec(box, res), x0


def gen_instance(seed: int, n: int, m: int) -> Program:
    return gen_instance_detail(seed, n, m)[0]
