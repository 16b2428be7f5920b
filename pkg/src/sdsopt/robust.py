"""Robust convex constraints under sign-restricted sdd-spectrahedron uncertainty.

An uncertainty set is {u : A^0 + sum_j u_j A^j sdd, u_1..u_t >= 0}. Appending
a t x t corner block (zeros for A^0 and the affine directions, diag(e_j) for
the sign-restricted ones) absorbs the sign constraints into one sdd
membership, so each robust constraint becomes a sup-representable function and
the whole problem reduces to the relaxation pipeline.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from .certify import certify_first_order_convex
from .matrixcones import SymMatrix, certify_sdd
from .poly import Polynomial
from .relax import RelaxationReport, solve_program
from .semialg import Program, SemiAlgebraicFunction, SocpSet, from_polynomial
from .socp import SolverSettings


class UncertaintySet:
    """Parameters u with A^0 + sum u_j A^j sdd and the first t coordinates >= 0."""

    __slots__ = ("s", "t", "q", "A")

    def __init__(self, A: Sequence, t: int = 0):
        mats = tuple(m if isinstance(m, SymMatrix) else SymMatrix(m) for m in A)
        if not mats:
            raise ValueError("need at least the constant matrix A^0")
        q = mats[0].q
        if any(m.q != q for m in mats):
            raise ValueError("all matrices must share one size")
        s = len(mats) - 1
        if not 0 <= t <= s:
            raise ValueError(f"sign-restricted count t={t} outside [0, {s}]")
        object.__setattr__(self, "A", mats)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "t", t)

    def __setattr__(self, name, value):
        raise AttributeError("UncertaintySet is immutable")

    def contains(self, u: Sequence[float], tol: float = 1e-9) -> bool:
        """Direct check: sign pattern plus an sdd certificate for A(u)."""
        u = np.asarray(u, dtype=float)
        if u.shape != (self.s,):
            raise ValueError(f"expected {self.s} parameters")
        if any(u[j] < -tol for j in range(self.t)):
            return False
        m = self.A[0].mat + sum(u[j] * self.A[j + 1].mat for j in range(self.s))
        return certify_sdd(SymMatrix(m)).status == "certified"

    def enlarged(self, slack: float) -> "UncertaintySet":
        """Superset obtained by adding slack to the diagonal of A^0."""
        if slack < 0:
            raise ValueError("slack must be nonnegative")
        a0 = self.A[0].mat + slack * np.eye(self.q)
        return UncertaintySet([a0, *(m.mat for m in self.A[1:])], self.t)

    def __repr__(self) -> str:
        return f"UncertaintySet(s={self.s}, t={self.t}, q={self.q})"


def lift_uncertainty(u: UncertaintySet) -> SocpSet:
    """Fold the sign restrictions into a corner block; no auxiliary variables."""
    qt = u.t + u.q
    mats = []
    for j, m in enumerate(u.A):
        out = np.zeros((qt, qt))
        out[u.t:, u.t:] = m.mat
        if 1 <= j <= u.t:
            out[j - 1, j - 1] = 1.0
        mats.append(out)
    return SocpSet(mats)


class RobustProgram:
    """min f0 s.t. g^0(x) + sum_j u_j g^j(x) <= 0 for every u in its set.

    The objective and every g^j multiplied by a sign-restricted u_j must
    certify as first-order convex (their nonnegative combinations then stay in
    the cone); the remaining g^j must be affine so sign flips are harmless.
    """

    __slots__ = ("objective", "families")

    def __init__(self, objective: Polynomial,
                 families: Sequence[Tuple[Sequence[Polynomial], UncertaintySet]],
                 settings: SolverSettings | None = None, check: bool = True):
        fams = []
        for gs, uset in families:
            gs = tuple(gs)
            if len(gs) != uset.s + 1:
                raise ValueError(
                    f"family needs {uset.s + 1} polynomials, got {len(gs)}"
                )
            if any(g.n != objective.n for g in gs):
                raise ValueError("all polynomials must share one variable count")
            fams.append((gs, uset))
        if check:
            if not certify_first_order_convex(objective, settings):
                raise ValueError("objective failed first-order convexity certification")
            for k, (gs, uset) in enumerate(fams):
                for j in range(uset.t + 1):
                    if not certify_first_order_convex(gs[j], settings):
                        raise ValueError(
                            f"constraint {k}: g^{j} failed first-order convexity "
                            "certification"
                        )
                for j in range(uset.t + 1, uset.s + 1):
                    if gs[j].degree > 1:
                        raise ValueError(
                            f"constraint {k}: g^{j} must be affine "
                            f"(degree {gs[j].degree})"
                        )
        self.objective = objective
        self.families = tuple(fams)

    @property
    def n(self) -> int:
        return self.objective.n

    @property
    def m(self) -> int:
        return len(self.families)


def reformulate(rp: RobustProgram) -> Program:
    """Each family becomes sup over its lifted set; objective gets the trivial set."""
    constraints = [
        SemiAlgebraicFunction(gs[0], gs[1:], lift_uncertainty(uset))
        for gs, uset in rp.families
    ]
    return Program(from_polynomial(rp.objective), constraints)


def solve_robust(rp: RobustProgram, two_d: Optional[int] = None,
                 settings: SolverSettings | None = None,
                 seed: int = 0, run_checks: bool = True) -> RelaxationReport:
    """Relaxation pipeline on the reformulated program.

    The report's dominance check runs on the lifted corner-block matrices, so
    its margin is exactly the recovery premise for the robust problem.
    """
    prog = reformulate(rp)
    return solve_program(prog, two_d, settings, seed=seed, run_checks=run_checks)
