"""Standard-form conic programs and an embedded second-order cone solver.

Programs are stored as

    minimize    c'x
    subject to  Ax + s = b,   s in K,

where K is an ordered product of zero cones (equalities), nonnegative cones
(inequalities) and second-order cones (first coordinate is the scalar bound).
The embedded solver runs operator splitting on the homogeneous self-dual
embedding: it alternates a projection onto the affine subspace (one sparse LU
factorization, reused every iteration) with a projection onto the cone
product, with over-relaxation and periodic residual-based restarts. The same
fixed point yields either an optimal primal-dual pair or an infeasibility
certificate, which is why this method was chosen over a plain primal scheme.
Safeguarded Anderson acceleration speeds up the tail: plain splitting slows
down without bound on nearly tangential cone/subspace intersections (support
directions almost aligned with a facet), and the safeguard never accepts an
accelerated iterate whose residual exceeds the best accepted one, so the
method cannot do worse than unaccelerated splitting.

Everything is deterministic: fixed iteration schedule, no randomized pivoting,
so identical inputs and settings reproduce identical outputs bit for bit.
"""

from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

ZERO = "zero"
NONNEG = "nonneg"
SOC = "soc"
_KINDS = (ZERO, NONNEG, SOC)

# Anderson depth: enough history to model the slow tail modes, small enough
# that the per-iteration least squares stays negligible next to the LU solve
_AA_MEMORY = 10


class SolverError(Exception):
    """Malformed program or solver misconfiguration."""


@dataclass(frozen=True)
class Cone:
    kind: str
    dim: int

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise SolverError(f"unknown cone kind {self.kind!r}")
        if self.dim < 1:
            raise SolverError("cone sizes must be positive")


@dataclass(frozen=True)
class ConicProgram:
    c: np.ndarray
    A: sp.csc_matrix
    b: np.ndarray
    cones: Tuple[Cone, ...]

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float).ravel()
        b = np.asarray(self.b, dtype=float).ravel()
        A = sp.csc_matrix(self.A, dtype=float)
        if A.shape != (b.size, c.size):
            raise SolverError(f"A is {A.shape}, expected ({b.size}, {c.size})")
        if c.size < 1:
            raise SolverError("program has no variables")
        if sum(k.dim for k in self.cones) != b.size:
            raise SolverError("cone sizes do not sum to the row count")
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "cones", tuple(self.cones))

    @property
    def num_rows(self) -> int:
        return self.b.size

    @property
    def num_cols(self) -> int:
        return self.c.size


class SolveStatus(enum.Enum):
    OPTIMAL = "optimal"
    PRIMAL_INFEASIBLE = "primal_infeasible"
    DUAL_INFEASIBLE = "dual_infeasible"
    NUMERICAL_LIMIT = "numerical_limit"


@dataclass(frozen=True)
class Residuals:
    primal: float
    dual: float
    gap: float


@dataclass(frozen=True)
class ConicSolution:
    status: SolveStatus
    x: np.ndarray
    y: np.ndarray
    s: np.ndarray
    objective: float
    residuals: Residuals
    iterations: int


def dual_objective(prog: ConicProgram, sol: ConicSolution) -> float:
    """-b'y, the dual objective under the minimization convention."""
    return float(-prog.b @ sol.y)


@dataclass(frozen=True)
class SolverSettings:
    tol_feas: float = 1e-7
    tol_gap: float = 1e-7
    tol_infeas: float = 1e-7
    max_iter: int = 200_000
    alpha: float = 1.5  # over-relaxation weight
    check_every: int = 50
    restart_after: int = 20  # stalled checks before restarting from the best iterate
    backend: str = "embedded"

    def __post_init__(self):
        if not (self.tol_feas > 0 and self.tol_gap > 0 and self.tol_infeas > 0):
            raise SolverError("tolerances must be positive")
        if self.max_iter < 1:
            raise SolverError("max_iter must be positive")
        if not 0.0 < self.alpha < 2.0:
            raise SolverError("over-relaxation weight must lie in (0, 2)")

    def tightened(self, cap: float = 1e-9) -> "SolverSettings":
        """Copy with tolerances capped at ``cap``.

        Certification solves run tighter than the acceptance threshold so a
        feasible witness survives verification with margin to spare.
        """
        return replace(
            self,
            tol_feas=min(self.tol_feas, cap),
            tol_gap=min(self.tol_gap, cap),
            tol_infeas=min(self.tol_infeas, cap),
        )


# -- cone projections --------------------------------------------------------


def project_soc(v: np.ndarray) -> np.ndarray:
    """Closed-form projection onto {(t, y) : ||y|| <= t}, boundary ties kept."""
    t = v[0]
    y = v[1:]
    ny = float(np.linalg.norm(y))
    if ny <= t:
        return v.copy()
    if ny <= -t:
        return np.zeros_like(v)
    a = 0.5 * (ny + t)
    out = np.empty_like(v)
    out[0] = a
    out[1:] = (a / ny) * y
    return out


def project_cone(v: np.ndarray, cones: Sequence[Cone], dual: bool) -> np.ndarray:
    """Project onto K (dual=False) or onto K* (dual=True), blockwise."""
    out = np.empty_like(v)
    at = 0
    for cone in cones:
        blk = v[at : at + cone.dim]
        if cone.kind == ZERO:
            # dual of the zero cone is the free cone
            out[at : at + cone.dim] = blk if dual else 0.0
        elif cone.kind == NONNEG:
            out[at : at + cone.dim] = np.maximum(blk, 0.0)
        else:
            out[at : at + cone.dim] = project_soc(blk)
        at += cone.dim
    return out


# -- termination bookkeeping --------------------------------------------------


@dataclass
class _Candidate:
    kind: str  # "optimal" | "primal_infeasible" | "dual_infeasible" | "none"
    metric: float
    x: np.ndarray
    y: np.ndarray
    s: np.ndarray
    residuals: Residuals
    objective: float


def _extract(prog: ConicProgram, settings: SolverSettings, u, v) -> _Candidate:
    nv = prog.num_cols
    tau = u[-1]
    x_u, y_u, s_v = u[:nv], u[nv:-1], v[nv:-1]
    norm_b = float(np.linalg.norm(prog.b))
    norm_c = float(np.linalg.norm(prog.c))

    best = _Candidate(
        "none", np.inf, x_u, y_u, s_v, Residuals(np.inf, np.inf, np.inf), np.nan
    )
    if tau > 1e-12:
        x, y, s = x_u / tau, y_u / tau, s_v / tau
        pres = float(np.linalg.norm(prog.A @ x + s - prog.b)) / (1.0 + norm_b)
        dres = float(np.linalg.norm(prog.A.T @ y + prog.c)) / (1.0 + norm_c)
        pobj = float(prog.c @ x)
        dobj = float(-prog.b @ y)
        gap = abs(pobj - dobj) / (1.0 + abs(pobj) + abs(dobj))
        res = Residuals(pres, dres, gap)
        metric = max(pres, dres, gap)
        best = _Candidate("none", metric, x, y, s, res, pobj)
        if pres <= settings.tol_feas and dres <= settings.tol_feas and gap <= settings.tol_gap:
            best.kind = "optimal"
            return best

    # certificate checks on the unscaled iterate, SCS-style normalization
    bty = float(prog.b @ y_u)
    if norm_b > 0.0 and bty < -1e-12:
        res = float(np.linalg.norm(prog.A.T @ y_u)) * norm_b
        if res <= -settings.tol_infeas * bty:
            y_cert = y_u / (-bty)
            cand = _Candidate(
                "primal_infeasible",
                res / (-bty),
                np.full(prog.num_cols, np.nan),
                y_cert,
                np.full(prog.num_rows, np.nan),
                Residuals(np.inf, res / (-bty), np.inf),
                np.nan,
            )
            return cand
    ctx = float(prog.c @ x_u)
    if norm_c > 0.0 and ctx < -1e-12:
        res = float(np.linalg.norm(prog.A @ x_u + s_v)) * norm_c
        if res <= -settings.tol_infeas * ctx:
            scale = -ctx
            cand = _Candidate(
                "dual_infeasible",
                res / scale,
                x_u / scale,
                np.full(prog.num_rows, np.nan),
                s_v / scale,
                Residuals(res / scale, np.inf, np.inf),
                np.nan,
            )
            return cand
    return best


def _presolve_certificate(prog: ConicProgram) -> Optional[np.ndarray]:
    """Farkas ray for cone blocks whose rows are all structurally empty."""
    nnz_per_row = np.diff(sp.csr_matrix(prog.A).indptr)
    y = np.zeros(prog.num_rows)
    at = 0
    for cone in prog.cones:
        rows = slice(at, at + cone.dim)
        at += cone.dim
        if nnz_per_row[rows].any():
            continue
        blk = -prog.b[rows]
        if cone.kind == ZERO:
            ray = blk  # free dual
        elif cone.kind == NONNEG:
            ray = np.maximum(blk, 0.0)
        else:
            ray = project_soc(blk)
        if float(ray @ prog.b[rows]) < -1e-14:
            y[rows] = ray
            return y / max(1e-300, -float(y @ prog.b))
    return None


def _min_correction(
    J: sp.spmatrix, r: np.ndarray
) -> Optional[np.ndarray]:
    """Minimum-norm least-squares solve of J d = r, dense at desk scale."""
    if J.shape[0] * J.shape[1] <= 4_000_000:
        d = np.linalg.lstsq(J.toarray(), r, rcond=None)[0]
    else:
        d = spla.lsqr(J, r, atol=1e-14, btol=1e-14,
                      iter_lim=8 * (J.shape[0] + J.shape[1]))[0]
    return d if np.all(np.isfinite(d)) else None


def _polish(
    prog: ConicProgram,
    settings: SolverSettings,
    x: np.ndarray,
    y: np.ndarray,
    s: np.ndarray,
) -> Optional[Tuple[np.ndarray, np.ndarray, np.ndarray, Residuals, float]]:
    """Active-support refinement of a near-optimal candidate.

    Splitting crawls once an active second-order cone face meets the affine
    subspace nearly tangentially, but the support pattern (which slack and
    dual components vanish) is readable off the candidate long before the
    iterates settle. Each side then satisfies a linear system on that
    support, so solve both for the minimal correction of the candidate and
    accept only a refined point that passes the standard tolerance checks.
    A wrong support guess fails the checks and returns nothing, so
    refinement never fabricates an answer.
    """
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        return None
    nv, m = prog.num_cols, prog.num_rows
    A = sp.csr_matrix(prog.A)

    s_free: List[int] = []  # slack components allowed to move off the candidate
    y_free: List[int] = []  # dual components allowed to be nonzero
    at = 0
    for cone in prog.cones:
        rows = list(range(at, at + cone.dim))
        at += cone.dim
        if cone.kind == ZERO:
            y_free.extend(rows)  # slack pinned to zero, multiplier free
        elif cone.kind == NONNEG:
            for r in rows:
                if s[r] <= y[r]:  # complementary pair: the smaller one is 0
                    y_free.append(r)
                else:
                    s_free.append(r)
        else:
            ns = float(np.linalg.norm(s[rows]))
            ny = float(np.linalg.norm(y[rows]))
            if ns >= 10.0 * ny:
                s_free.extend(rows)  # slack interior, dual block zero
            elif ny >= 10.0 * ns:
                y_free.extend(rows)  # slack block zero, dual on the cone
            else:
                s_free.extend(rows)  # both sit on boundary rays; let the
                y_free.extend(rows)  # verification enforce the cones

    # primal: A(x+dx) + (s+ds) = b with ds supported on s_free, minimal move
    ident = sp.identity(m, format="csr")
    Jp = sp.hstack([A, ident[:, s_free]], format="csr")
    dp = _min_correction(Jp, prog.b - A @ x - s)
    if dp is None:
        return None
    x_new = x + dp[:nv]
    s_new = s.copy()
    s_new[s_free] += dp[nv:]
    s_new = project_cone(s_new, prog.cones, dual=False)

    # dual: A'(y+dy) + c = 0 with y+dy supported on y_free, minimal move
    At = sp.csc_matrix(prog.A.T)
    Jd = At[:, y_free]
    y_base = np.zeros(m)
    y_base[y_free] = y[y_free]
    dd = _min_correction(Jd, -prog.c - At @ y_base)
    if dd is None:
        return None
    y_new = y_base
    y_new[y_free] += dd
    y_new = project_cone(y_new, prog.cones, dual=True)

    pres = float(np.linalg.norm(A @ x_new + s_new - prog.b)) / (
        1.0 + float(np.linalg.norm(prog.b))
    )
    dres = float(np.linalg.norm(At @ y_new + prog.c)) / (
        1.0 + float(np.linalg.norm(prog.c))
    )
    pobj = float(prog.c @ x_new)
    dobj = float(-prog.b @ y_new)
    gap = abs(pobj - dobj) / (1.0 + abs(pobj) + abs(dobj))
    if pres <= settings.tol_feas and dres <= settings.tol_feas and gap <= settings.tol_gap:
        return x_new, y_new, s_new, Residuals(pres, dres, gap), pobj
    return None


# -- the embedded solver -------------------------------------------------------


def _solve_embedded(prog: ConicProgram, settings: SolverSettings) -> ConicSolution:
    nv, m = prog.num_cols, prog.num_rows
    N = nv + m + 1

    y_pre = _presolve_certificate(prog)
    if y_pre is not None:
        return ConicSolution(
            status=SolveStatus.PRIMAL_INFEASIBLE,
            x=np.full(nv, np.nan),
            y=y_pre,
            s=np.full(m, np.nan),
            objective=np.nan,
            residuals=Residuals(np.inf, 0.0, np.inf),
            iterations=0,
        )

    c = sp.csc_matrix(prog.c.reshape(-1, 1))
    b = sp.csc_matrix(prog.b.reshape(-1, 1))
    Q = sp.bmat(
        [
            [None, prog.A.T, c],
            [-prog.A, None, b],
            [-c.T, -b.T, None],
        ],
        format="csc",
    )
    lu = spla.splu((sp.identity(N, format="csc") + Q).tocsc())

    # single splitting variable: t determines the Moreau pair u = P(t),
    # v = u - t (orthogonal by construction), and one relaxed step is
    # t <- t + alpha * ((I+Q)^{-1}(2u - t) - u)
    t = np.zeros(N)
    t[-1] = 1.0

    alpha = settings.alpha
    best_metric = np.inf
    best_t = t.copy()
    stalled = 0
    iterations = 0
    polish_tries = 0

    # Anderson acceleration state. A candidate is accepted only if its
    # fixed-point residual does not exceed the smallest accepted one; on
    # rejection the plain successor is restored, which by nonexpansiveness
    # always passes, so rejection cannot cascade.
    dts: deque = deque(maxlen=_AA_MEMORY)
    dfs: deque = deque(maxlen=_AA_MEMORY)
    prev_t: Optional[np.ndarray] = None
    prev_f: Optional[np.ndarray] = None
    fallback: Optional[np.ndarray] = None
    res_ref = np.inf
    aa_on = True

    def cone_step(w: np.ndarray) -> np.ndarray:
        out = w.copy()
        out[nv:-1] = project_cone(w[nv:-1], prog.cones, dual=True)
        out[-1] = max(w[-1], 0.0)
        return out

    def clear_accel() -> None:
        nonlocal prev_t, prev_f, fallback, res_ref
        dts.clear()
        dfs.clear()
        prev_t = prev_f = fallback = None
        res_ref = np.inf

    while iterations < settings.max_iter:
        steps = min(settings.check_every, settings.max_iter - iterations)
        for step in range(steps):
            u = cone_step(t)
            ut = lu.solve(2.0 * u - t)
            f = alpha * (ut - u)
            fn = float(np.linalg.norm(f))
            if fallback is not None and fn > res_ref:
                # the accelerated iterate lost ground: resume from the plain
                # successor it displaced and rebuild the history
                t = fallback
                clear_accel()
                continue
            res_ref = min(res_ref, fn)
            if prev_t is not None:
                dts.append(t - prev_t)
                dfs.append(f - prev_f)
            prev_t, prev_f = t, f
            plain = t + f
            accel = None
            # acceleration is off at the residual noise floor (the history is
            # pure roundoff there) and on the step feeding a convergence
            # check, so checks only ever see safeguard-validated iterates
            at_floor = fn <= 1e-13 * (1.0 + float(np.linalg.norm(t)))
            if aa_on and dts and not at_floor and step != steps - 1:
                df = np.stack(dfs, axis=1)
                gamma = np.linalg.lstsq(df, f, rcond=None)[0]
                cand_t = plain - (np.stack(dts, axis=1) + df) @ gamma
                # a near-singular history produces wild extrapolations, and
                # the map is positively homogeneous, so zero is a spurious
                # fixed point whose residual the safeguard would accept; skip
                # both up front instead of burning an iteration on rejection
                ok = np.all(np.isfinite(cand_t))
                ok = ok and float(np.linalg.norm(gamma)) < 1e6
                ok = ok and float(np.linalg.norm(cand_t)) > 1e-8 * float(
                    np.linalg.norm(plain)
                )
                if ok:
                    accel = cand_t
            if accel is None:
                t, fallback = plain, None
            else:
                t, fallback = accel, plain
        iterations += steps

        u = cone_step(t)
        v = u - t
        cand = _extract(prog, settings, u, v)
        if cand.kind == "none" and aa_on and fn <= 1e-13 * (
            1.0 + float(np.linalg.norm(t))
        ):
            # acceleration can land on a degenerate fixed point of the
            # embedding (tau and kappa both vanish) that carries no
            # primal-dual information and from which nothing ever moves;
            # rerun the plain iteration, which avoids such points from the
            # canonical start. One-shot by construction: acceleration stays
            # off for the remainder of this solve.
            t = np.zeros(N)
            t[-1] = 1.0
            aa_on = False
            clear_accel()
            stalled = 0
            continue
        if cand.kind == "optimal":
            return ConicSolution(
                SolveStatus.OPTIMAL, cand.x, cand.y, cand.s, cand.objective,
                cand.residuals, iterations,
            )
        if cand.kind == "primal_infeasible":
            return ConicSolution(
                SolveStatus.PRIMAL_INFEASIBLE, cand.x, cand.y, cand.s, np.nan,
                cand.residuals, iterations,
            )
        if cand.kind == "dual_infeasible":
            return ConicSolution(
                SolveStatus.DUAL_INFEASIBLE, cand.x, cand.y, cand.s, np.nan,
                cand.residuals, iterations,
            )

        # near-miss or stall: read the active faces off the candidate and try
        # to finish the crawl directly (bounded attempts; failures just let
        # the iteration continue). Stalls far from the target would waste the
        # attempt budget on hopeless support guesses, hence the metric gate.
        near_miss = cand.metric <= 50.0 * settings.tol_feas
        stall_pol = (
            stalled + 1 >= settings.restart_after
            and cand.metric <= 1e4 * settings.tol_feas
        )
        if (near_miss or stall_pol) and polish_tries < 8:
            polish_tries += 1
            pol = _polish(prog, settings, cand.x, cand.y, cand.s)
            if pol is not None:
                px, py, ps, pr, pobj = pol
                return ConicSolution(
                    SolveStatus.OPTIMAL, px, py, ps, pobj, pr, iterations
                )

        if cand.metric < best_metric:
            # a 10% drop counts as progress for stall detection, but the best
            # iterate is kept current so the limit report is never stale
            stalled = 0 if cand.metric < 0.9 * best_metric else stalled + 1
            best_metric = cand.metric
            best_t = t.copy()
        else:
            stalled += 1
        if stalled >= settings.restart_after:
            # residual-based restart: strengthen over-relaxation toward its
            # stable ceiling (the tail rate on nearly tangential cone/subspace
            # intersections improves with alpha, which must stay below 2) and
            # renormalize around tau. Rescaling t is an exact invariance of
            # the iteration, so neither step can push the trajectory backward
            # (a rewind to a stored iterate can livelock when the tail
            # converges slower than the stall window). The acceleration
            # history is stale under either change and is dropped.
            alpha = alpha + 0.5 * (1.9 - alpha)
            scale = u[-1] if u[-1] > 1e-8 else float(np.linalg.norm(t))
            if scale > 0.0:
                t /= scale
            clear_accel()
            stalled = 0

        nrm = float(np.linalg.norm(t))
        if nrm > 1e10 or (0.0 < nrm < 1e-10):
            t /= nrm
            clear_accel()

    t = best_t
    u = cone_step(t)
    cand = _extract(prog, settings, u, u - t)
    return ConicSolution(
        SolveStatus.NUMERICAL_LIMIT, cand.x, cand.y, cand.s, cand.objective,
        cand.residuals, iterations,
    )


# -- backend seam --------------------------------------------------------------

Backend = Callable[[ConicProgram, SolverSettings], ConicSolution]
_BACKENDS: Dict[str, Backend] = {}


def register_backend(name: str, fn: Backend) -> None:
    """Expose an external conic solver under --backend external:<name>."""
    _BACKENDS[name] = fn


def solve(prog: ConicProgram, settings: SolverSettings | None = None) -> ConicSolution:
    settings = settings or SolverSettings()
    if settings.backend == "embedded":
        return _solve_embedded(prog, settings)
    if settings.backend.startswith("external:"):
        name = settings.backend.split(":", 1)[1]
        try:
            fn = _BACKENDS[name]
        except KeyError:
            raise SolverError(
                f"no external backend {name!r} registered; "
                f"known: {sorted(_BACKENDS) or 'none'}"
            ) from None
        return fn(prog, settings)
    raise SolverError(f"unknown backend {settings.backend!r}")


# -- feasibility wrapper --------------------------------------------------------


@dataclass(frozen=True)
class FeasibilityResult:
    status: str  # "feasible" | "infeasible" | "inconclusive"
    witness: Optional[np.ndarray]
    certificate: Optional[np.ndarray]
    iterations: int

    def __bool__(self) -> bool:
        return self.status == "feasible"


def feasibility(prog: ConicProgram, settings: SolverSettings | None = None) -> FeasibilityResult:
    """Decide Ax + s = b, s in K with a zero-objective solve."""
    zeroed = ConicProgram(np.zeros(prog.num_cols), prog.A, prog.b, prog.cones)
    sol = solve(zeroed, settings)
    if sol.status == SolveStatus.OPTIMAL:
        return FeasibilityResult("feasible", sol.x, None, sol.iterations)
    if sol.status == SolveStatus.PRIMAL_INFEASIBLE:
        return FeasibilityResult("infeasible", None, sol.y, sol.iterations)
    return FeasibilityResult("inconclusive", None, None, sol.iterations)


# -- incremental construction ----------------------------------------------------


class LinExpr:
    """Affine expression sum(coefs[j] * x_j) + const over builder columns."""

    __slots__ = ("coefs", "const")

    def __init__(self, coefs: Dict[int, float] | None = None, const: float = 0.0):
        self.coefs = dict(coefs or {})
        self.const = float(const)

    @staticmethod
    def of(col: int, coef: float = 1.0) -> "LinExpr":
        return LinExpr({int(col): float(coef)})

    @staticmethod
    def const_of(value: float) -> "LinExpr":
        return LinExpr({}, value)

    def plus(self, other: "LinExpr") -> "LinExpr":
        out = dict(self.coefs)
        for j, cf in other.coefs.items():
            out[j] = out.get(j, 0.0) + cf
        return LinExpr(out, self.const + other.const)

    def minus(self, other: "LinExpr") -> "LinExpr":
        return self.plus(other.times(-1.0))

    def times(self, k: float) -> "LinExpr":
        k = float(k)
        return LinExpr({j: k * cf for j, cf in self.coefs.items()}, k * self.const)

    def add_term(self, col: int, coef: float) -> None:
        if coef:
            self.coefs[col] = self.coefs.get(col, 0.0) + float(coef)


class ProgramBuilder:
    """Accumulates columns, rows and cones, then emits a ConicProgram.

    Rows are grouped at build time in the order: equalities, inequalities,
    second-order cone triples, matching the documented cone layout.
    """

    def __init__(self):
        self._ncols = 0
        self._obj: Dict[int, float] = {}
        self._eq: List[Tuple[Dict[int, float], float]] = []
        self._ineq: List[Tuple[Dict[int, float], float]] = []
        self._socs: List[List[Tuple[Dict[int, float], float]]] = []

    def new_vars(self, count: int) -> range:
        base = self._ncols
        self._ncols += count
        return range(base, base + count)

    def new_var(self) -> int:
        return self.new_vars(1)[0]

    def add_objective_term(self, col: int, coef: float) -> None:
        if coef:
            self._obj[col] = self._obj.get(col, 0.0) + float(coef)

    def add_eq(self, expr: LinExpr, rhs: float = 0.0) -> None:
        """expr == rhs."""
        self._eq.append((dict(expr.coefs), float(rhs) - expr.const))

    def add_le(self, expr: LinExpr, rhs: float = 0.0) -> None:
        """expr <= rhs."""
        self._ineq.append((dict(expr.coefs), float(rhs) - expr.const))

    def add_ge(self, expr: LinExpr, rhs: float = 0.0) -> None:
        self.add_le(expr.times(-1.0), -float(rhs))

    def add_soc(self, exprs: Sequence[LinExpr]) -> None:
        """(e_0, e_1, ..., e_k) in a second-order cone: e_0 >= ||(e_1..e_k)||."""
        if len(exprs) < 1:
            raise SolverError("empty second-order cone")
        self._socs.append([(dict(e.coefs), e.const) for e in exprs])

    @property
    def num_cols(self) -> int:
        return self._ncols

    def build(self) -> ConicProgram:
        rows: List[Dict[int, float]] = []
        b: List[float] = []
        cones: List[Cone] = []

        if self._eq:
            for coefs, rhs in self._eq:
                rows.append(coefs)
                b.append(rhs)
            cones.append(Cone(ZERO, len(self._eq)))
        if self._ineq:
            # expr <= rhs  becomes  s = rhs - expr >= 0, i.e. A row = coefs
            for coefs, rhs in self._ineq:
                rows.append(coefs)
                b.append(rhs)
            cones.append(Cone(NONNEG, len(self._ineq)))
        for soc in self._socs:
            # s_k = const + expr_k, so A row = -coefs, b = const
            for coefs, const in soc:
                rows.append({j: -cf for j, cf in coefs.items()})
                b.append(const)
            cones.append(Cone(SOC, len(soc)))

        m = len(rows)
        data, ri, ci = [], [], []
        for r, coefs in enumerate(rows):
            for j, cf in coefs.items():
                if cf:
                    ri.append(r)
                    ci.append(j)
                    data.append(cf)
        A = sp.csc_matrix((data, (ri, ci)), shape=(m, self._ncols))
        c = np.zeros(self._ncols)
        for j, cf in self._obj.items():
            c[j] = cf
        return ConicProgram(c, A, np.array(b, dtype=float), tuple(cones))
