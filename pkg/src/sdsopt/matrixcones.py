"""Diagonally dominant and scaled diagonally dominant matrix cones.

An sdd matrix is one that some positive diagonal scaling makes diagonally
dominant; equivalently it splits into a sum of 2x2 PSD principal blocks, each
of which is a single three-dimensional second-order cone constraint

    ||(2 m_ij, m_ii - m_jj)|| <= m_ii + m_jj.

Membership of a numeric matrix is decided constructively through that block
decomposition, not by searching for a scaling. The decomposition SOCP is
solved in maximal-slack form (maximize the uniform cone slack of the blocks):
its optimal value is a signed distance to the cone boundary, so the solve
stays well conditioned even when the matrix sits near the boundary, where a
plain feasibility formulation has a razor-thin feasible set and crawls.
A ScalingCertificate is attached only when a diagonal is recoverable cheaply
(the dd fast path uses D = I).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .socp import (
    LinExpr,
    ProgramBuilder,
    SolverSettings,
    SolveStatus,
    solve,
)

TOL_DD = 1e-9
TOL_FEAS = 1e-7


class SymMatrix:
    """Dense symmetric matrix; the constructor symmetrizes tiny asymmetry."""

    __slots__ = ("q", "mat")

    def __init__(self, mat, tol_asym: float = 1e-12):
        a = np.asarray(mat, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError(f"expected a square matrix, got shape {a.shape}")
        asym = float(np.max(np.abs(a - a.T))) if a.size else 0.0
        if asym > tol_asym:
            raise ValueError(f"matrix asymmetry {asym:g} exceeds {tol_asym:g}")
        sym = 0.5 * (a + a.T)
        sym.setflags(write=False)
        object.__setattr__(self, "mat", sym)
        object.__setattr__(self, "q", a.shape[0])

    def __setattr__(self, name, value):
        raise AttributeError("SymMatrix is immutable")

    def __getitem__(self, idx) -> float:
        return float(self.mat[idx])

    def inner(self, other: "SymMatrix") -> float:
        return float(np.sum(self.mat * other.mat))

    def __repr__(self) -> str:
        return f"SymMatrix({self.mat.tolist()})"


def is_dd(M: SymMatrix, tol_dd: float = TOL_DD) -> Tuple[bool, float]:
    """Margin = min_i (M_ii - sum_{j != i} |M_ij|); dd iff margin >= -tol_dd."""
    a = M.mat
    if M.q == 0:
        return True, np.inf
    offsums = np.sum(np.abs(a), axis=1) - np.abs(np.diag(a))
    margin = float(np.min(np.diag(a) - offsums))
    return margin >= -tol_dd, margin


@dataclass(frozen=True)
class SddCertificate:
    """Q = sum of embedded 2x2 PSD blocks plus nonnegative diagonal remainders.

    blocks hold (i, j, m_ii, m_ij, m_jj) with 0 <= i < j < q; diag holds an
    optional rank-one e_i e_i' remainder per index (zero for solver output,
    used by the q = 1 and diagonally dominant fast paths).
    """

    q: int
    blocks: Tuple[Tuple[int, int, float, float, float], ...]
    diag: Tuple[float, ...] = ()

    def __post_init__(self):
        for (i, j, *_rest) in self.blocks:
            if not 0 <= i < j < self.q:
                raise ValueError(f"block index pair ({i},{j}) invalid for q={self.q}")
        if self.diag and len(self.diag) != self.q:
            raise ValueError("diagonal remainder length must equal q")

    def block_violation(self) -> float:
        """Worst violation of the per-block second-order cone condition."""
        worst = 0.0
        for (_i, _j, mii, mij, mjj) in self.blocks:
            lhs = float(np.hypot(2.0 * mij, mii - mjj))
            worst = max(worst, lhs - (mii + mjj))
        for d in self.diag:
            worst = max(worst, -d)
        return worst


def assemble_blocks(cert: SddCertificate) -> SymMatrix:
    """Entrywise sum of the embedded blocks; empty certificate gives zero."""
    out = np.zeros((cert.q, cert.q))
    for (i, j, mii, mij, mjj) in cert.blocks:
        out[i, i] += mii
        out[j, j] += mjj
        out[i, j] += mij
        out[j, i] += mij
    if cert.diag:
        out[np.diag_indices(cert.q)] += np.asarray(cert.diag)
    return SymMatrix(out)


def verify_certificate(cert: SddCertificate, M: SymMatrix, tol: float = TOL_FEAS) -> Tuple[bool, float, float]:
    """Check both certificate invariants; returns (ok, block_viol, assembly_err)."""
    scale = 1.0 + float(np.max(np.abs(M.mat))) if M.q else 1.0
    block_viol = cert.block_violation()
    assembly_err = float(np.max(np.abs(assemble_blocks(cert).mat - M.mat))) if M.q else 0.0
    ok = block_viol <= tol * scale and assembly_err <= tol * scale
    return ok, block_viol, assembly_err


@dataclass(frozen=True)
class ScalingCertificate:
    """Positive diagonal D with D M D diagonally dominant."""

    diag: Tuple[float, ...]

    def __post_init__(self):
        if any(d <= 0 for d in self.diag):
            raise ValueError("scaling entries must be strictly positive")

    def check(self, M: SymMatrix, tol_dd: float = TOL_DD) -> Tuple[bool, float]:
        d = np.asarray(self.diag)
        return is_dd(SymMatrix(d[:, None] * M.mat * d[None, :]), tol_dd)


@dataclass(frozen=True)
class SddRefutation:
    """Farkas evidence that the block-decomposition system is infeasible.

    dual_matrix W collects the dual ray on the assembly equalities: it
    satisfies <W, M> < 0 while every 2x2 principal submatrix of W is PSD
    (so <W, X> >= 0 for every sdd X), which is auditable without the solver.
    """

    dual_matrix: SymMatrix
    inner: float
    min_minor_eig: float


@dataclass(frozen=True)
class SddResult:
    status: str  # "certified" | "refuted" | "inconclusive"
    certificate: Optional[SddCertificate] = None
    scaling: Optional[ScalingCertificate] = None
    refutation: Optional[SddRefutation] = None

    def __bool__(self) -> bool:
        return self.status == "certified"


def soc_rows_for_block(i: int, j: int, q: int) -> np.ndarray:
    """Stencil T mapping block unknowns (m_ii, m_ij, m_jj) to the cone triple.

    The second-order cone rows of block (i, j) are T @ (m_ii, m_ij, m_jj) in
    the solver's (t, y1, y2) convention: t = m_ii + m_jj bounds the norm of
    (2 m_ij, m_ii - m_jj).
    """
    if not 1 <= i < j <= q:
        raise ValueError(f"need 1 <= i < j <= q, got ({i}, {j}) with q={q}")
    return np.array(
        [
            [1.0, 0.0, 1.0],
            [0.0, 2.0, 0.0],
            [1.0, 0.0, -1.0],
        ]
    )


def _dd_certificate(M: SymMatrix) -> SddCertificate:
    """Direct block construction for a diagonally dominant matrix (D = I)."""
    q = M.q
    a = M.mat
    if q == 1:
        return SddCertificate(1, (), (float(a[0, 0]),))
    offsums = np.sum(np.abs(a), axis=1) - np.abs(np.diag(a))
    slack = np.diag(a) - offsums
    blocks = []
    for i in range(q):
        for j in range(i + 1, q):
            # apportion |M_ij| plus an equal share of each diagonal's slack
            blocks.append(
                (
                    i,
                    j,
                    float(abs(a[i, j]) + slack[i] / (q - 1)),
                    float(a[i, j]),
                    float(abs(a[i, j]) + slack[j] / (q - 1)),
                )
            )
    return SddCertificate(q, tuple(blocks))


def add_sdd_membership(
    builder: ProgramBuilder,
    entries: Dict[Tuple[int, int], LinExpr],
    q: int,
    margin: Optional[LinExpr] = None,
) -> Dict[Tuple[int, int], range]:
    """Constrain the symmetric matrix given by affine `entries` to be sdd.

    Introduces one 2x2 block per index pair (three unknowns each), equates the
    blockwise sums with the entry expressions, and adds one second-order cone
    row triple per block. q = 1 degenerates to a single nonnegativity row.
    Returns the block variable ranges keyed by pair.

    `margin`, when given, is subtracted from every cone row's slack side, so
    the blocks must satisfy their cones with that much room (negative values
    relax). Maximizing a margin variable turns membership into a signed
    distance query that stays well conditioned near the cone boundary.
    """
    if q < 1:
        raise ValueError("matrix size must be positive")
    if q == 1:
        lhs = entries[(0, 0)]
        if margin is not None:
            lhs = lhs.minus(margin)
        builder.add_ge(lhs, 0.0)
        return {}

    block_vars: Dict[Tuple[int, int], range] = {}
    for i in range(q):
        for j in range(i + 1, q):
            block_vars[(i, j)] = builder.new_vars(3)  # (m_ii, m_ij, m_jj)

    for i in range(q):
        diag_sum = LinExpr()
        for j in range(q):
            if j == i:
                continue
            lo, hi = min(i, j), max(i, j)
            cols = block_vars[(lo, hi)]
            diag_sum.add_term(cols[0] if i == lo else cols[2], 1.0)
        builder.add_eq(diag_sum.minus(entries[(i, i)]))
    for (i, j), cols in block_vars.items():
        off = entries.get((i, j))
        if off is None:
            off = entries.get((j, i))
        if off is None:
            off = LinExpr()
        builder.add_eq(LinExpr.of(cols[1]).minus(off))

    for (i, j), cols in block_vars.items():
        mii, mij, mjj = (LinExpr.of(c) for c in cols)
        top = mii.plus(mjj)
        if margin is not None:
            top = top.minus(margin)
        builder.add_soc([top, mij.times(2.0), mii.minus(mjj)])
    return block_vars


def matrix_entry_exprs(M: SymMatrix) -> Dict[Tuple[int, int], LinExpr]:
    """Constant entry expressions for a numeric matrix."""
    out: Dict[Tuple[int, int], LinExpr] = {}
    for i in range(M.q):
        for j in range(i, M.q):
            out[(i, j)] = LinExpr.const_of(M.mat[i, j])
    return out


def certify_sdd(
    M: SymMatrix,
    tol_dd: float = TOL_DD,
    settings: SolverSettings | None = None,
) -> SddResult:
    """Decide sdd membership constructively via the block decomposition.

    The solver path maximizes the uniform cone slack of the decomposition;
    the sign of the optimum decides membership, the optimal blocks are the
    certificate, and the dual solution assembles the separating matrix when
    the slack is negative. Queries within the slack estimate's resolution of
    the boundary come back inconclusive unless the witness verifies anyway.
    """
    q = M.q
    if q == 1:
        entry = M.mat[0, 0]
        if entry >= -tol_dd:
            cert = SddCertificate(1, (), (float(entry),))
            return SddResult("certified", cert, ScalingCertificate((1.0,)))
        w = SymMatrix(np.array([[1.0]]))
        return SddResult(
            "refuted", refutation=SddRefutation(w, float(entry), 0.0)
        )

    dd, _margin = is_dd(M, tol_dd)
    if dd:
        return SddResult(
            "certified", _dd_certificate(M), ScalingCertificate((1.0,) * q)
        )

    scale = 1.0 + float(np.max(np.abs(M.mat)))
    dg = np.diag(M.mat)
    i_min = int(np.argmin(dg))
    if dg[i_min] < -tol_dd * scale:
        # sdd matrices are PSD, so a negative diagonal refutes outright
        w = np.zeros((q, q))
        w[i_min, i_min] = 1.0
        W = SymMatrix(w)
        return SddResult(
            "refuted",
            refutation=SddRefutation(W, float(dg[i_min]), _min_minor_eig(W)),
        )

    # sdd is invariant under positive diagonal congruence; renormalizing to a
    # unit diagonal conditions the solve, whose splitting slows down roughly
    # with the diagonal spread
    if np.all(dg > 1e-8 * scale):
        d = 1.0 / np.sqrt(dg)
    else:
        d = np.ones(q)  # a vanishing diagonal entry: solve unscaled
    Mn = SymMatrix(d[:, None] * M.mat * d[None, :])

    builder = ProgramBuilder()
    slack = builder.new_var()
    block_vars = add_sdd_membership(
        builder, matrix_entry_exprs(Mn), q, margin=LinExpr.of(slack)
    )
    builder.add_objective_term(slack, -1.0)
    tight = (settings or SolverSettings()).tightened()
    sol = solve(builder.build(), tight)
    if sol.status != SolveStatus.OPTIMAL:
        return SddResult("inconclusive")

    scale_n = 1.0 + float(np.max(np.abs(Mn.mat)))
    band = 10.0 * tight.tol_gap * scale_n  # resolution of the slack estimate
    best = -sol.objective
    if best >= -band:
        x = sol.x
        blocks = tuple(
            (
                i,
                j,
                float(x[cols[0]] / (d[i] * d[i])),
                float(x[cols[1]] / (d[i] * d[j])),
                float(x[cols[2]] / (d[j] * d[j])),
            )
            for (i, j), cols in sorted(block_vars.items())
        )
        cert = SddCertificate(q, blocks)
        ok, _, _ = verify_certificate(cert, M)
        if ok:
            return SddResult("certified", cert)
        return SddResult("inconclusive")

    # equality rows come first: q diagonal assembly rows, then the
    # q(q-1)/2 off-diagonal rows in pair order; congruence maps the
    # separator back (minors stay PSD, the inner product stays negative)
    y = sol.y
    w = np.zeros((q, q))
    for i in range(q):
        w[i, i] = y[i] * d[i] * d[i]
    for k, (i, j) in enumerate(sorted(block_vars)):
        w[i, j] = w[j, i] = 0.5 * y[q + k] * d[i] * d[j]
    W = SymMatrix(w)
    # dual feasibility makes every 2x2 minor of W PSD (up to solver accuracy)
    # while <W, M> = b'y equals the negative optimal slack, so W separates
    inner = W.inner(M)
    min_eig = _min_minor_eig(W)
    if inner < 0.0 and min_eig >= -1e-6 * scale:
        return SddResult("refuted", refutation=SddRefutation(W, inner, min_eig))
    return SddResult("inconclusive")


def _min_minor_eig(W: SymMatrix) -> float:
    """Smallest eigenvalue over all 2x2 principal submatrices of W."""
    worst = np.inf
    a = W.mat
    for i in range(W.q):
        for j in range(i + 1, W.q):
            tr = a[i, i] + a[j, j]
            det = a[i, i] * a[j, j] - a[i, j] ** 2
            disc = max(0.0, 0.25 * tr * tr - det)
            worst = min(worst, 0.5 * tr - float(np.sqrt(disc)))
    return float(worst) if W.q > 1 else float(a[0, 0])
