"""SDSOS membership and first-order SDSOS-convexity certification.

A polynomial is SDSOS when it admits a Gram matrix, over some monomial basis,
that lies in the sdd cone; each such Gram splits into 2x2 PSD blocks, so the
whole decision is one second-order cone feasibility problem. First-order
SDSOS-convexity of f is SDSOS membership of the gap polynomial
h_f(x, z) = f(x) - f(z) - <grad f(z), x - z>.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np

from .matrixcones import (
    SddCertificate,
    SymMatrix,
    add_sdd_membership,
    assemble_blocks,
    verify_certificate,
)
from .poly import (
    Exponent,
    MonomialBasis,
    Polynomial,
    first_order_gap,
    grlex_key,
    monomial_basis,
)
from .socp import LinExpr, ProgramBuilder, SolverSettings, feasibility

COEF_TOL = 1e-7


@dataclass(frozen=True)
class SdsosCertificate:
    """Monomial basis plus an sdd certificate for the Gram matrix over it."""

    basis: MonomialBasis
    gram: SddCertificate

    def gram_matrix(self) -> SymMatrix:
        return assemble_blocks(self.gram)

    def polynomial(self) -> Polynomial:
        """Reconstruct <m(x) m(x)', Q> from the certified blocks."""
        n = self.basis.n
        q = self.gram_matrix()
        exps = self.basis.exponents
        terms: Dict[Exponent, float] = {}
        for a in range(len(exps)):
            for b in range(len(exps)):
                key = tuple(ea + eb for ea, eb in zip(exps[a], exps[b]))
                terms[key] = terms.get(key, 0.0) + q[a, b]
        return Polynomial(n, {e: c for e, c in terms.items() if c != 0.0})


@dataclass(frozen=True)
class SdsosRefutation:
    """Basis-relative refutation with the solver's separating dual ray.

    dual_moments assigns a weight to every matched exponent; the induced
    pseudo-moment matrix has PSD 2x2 minors while <dual_moments, f> < 0,
    so no sdd Gram over this basis can reproduce f.
    """

    basis: MonomialBasis
    reason: str
    dual_moments: Optional[Dict[Exponent, float]] = None
    inner: Optional[float] = None


@dataclass(frozen=True)
class CertifyResult:
    status: str  # "certified" | "refuted" | "inconclusive"
    certificate: Optional[SdsosCertificate] = None
    refutation: Optional[SdsosRefutation] = None
    detail: str = ""

    def __bool__(self) -> bool:
        return self.status == "certified"


def reduce_basis(f: Polynomial, d: Optional[int] = None, full: bool = False) -> MonomialBasis:
    """Gram basis candidates for f: monomials of degree <= d surviving pruning.

    An exponent β is kept iff |β| <= d, 2β clears the lower corner of the
    exponentwise bounding box of f's support, and β itself clears the upper
    corner; for homogeneous f only exactly-degree-d monomials survive. Sound
    because any square appearing in an SOS (hence SDSOS) decomposition has
    support inside half the Newton polytope, so 2β stays inside the box
    (making β <= hi a strictly weaker, never-over-pruning upper check).
    full=True disables all pruning.
    """
    if d is None:
        if f.degree % 2:
            raise ValueError("the Gram degree is half of an even total degree")
        d = f.degree // 2
    base = monomial_basis(f.n, d)
    if full:
        return base
    if f.is_zero():
        return MonomialBasis(f.n, d, ())
    support = list(f.terms)
    lo = [min(e[i] for e in support) for i in range(f.n)]
    hi = [max(e[i] for e in support) for i in range(f.n)]
    homogeneous = f.is_homogeneous()
    keep: List[Exponent] = []
    for exp in base.exponents:
        deg = sum(exp)
        if homogeneous and deg != d:
            continue
        if all(lo[i] <= 2 * e and e <= hi[i] for i, e in enumerate(exp)):
            keep.append(exp)
    return MonomialBasis(f.n, d, tuple(keep))


def certify_sdsos(
    f: Polynomial,
    basis: Optional[MonomialBasis] = None,
    settings: SolverSettings | None = None,
    full_basis: bool = False,
) -> CertifyResult:
    """Decide membership of f in the SDSOS cone over the given (or default) basis."""
    if f.is_zero():
        empty = MonomialBasis(f.n, 0, ())
        return CertifyResult(
            "certified", SdsosCertificate(empty, SddCertificate(0, ())),
            detail="zero polynomial",
        )
    if f.degree % 2:
        return CertifyResult(
            "refuted",
            refutation=SdsosRefutation(
                basis or MonomialBasis(f.n, 0, ()), "odd total degree"
            ),
        )
    if basis is None:
        basis = reduce_basis(f, full=full_basis)

    exps = basis.exponents
    nb = len(exps)
    # products representable by the basis, with their (a, b) index pairs
    products: Dict[Exponent, List[Tuple[int, int]]] = {}
    for a in range(nb):
        for b in range(a, nb):
            key = tuple(ea + eb for ea, eb in zip(exps[a], exps[b]))
            products.setdefault(key, []).append((a, b))

    unmatched = [e for e in f.terms if e not in products]
    if unmatched:
        worst = sorted(unmatched, key=grlex_key)[0]
        return CertifyResult(
            "refuted",
            refutation=SdsosRefutation(
                basis, f"monomial {worst} not representable over the basis"
            ),
        )

    if nb == 1:
        # 1x1 Gram: f must be c * x^(2*beta) with c >= 0
        coef = f.coefficient(tuple(2 * e for e in exps[0]))
        if coef >= 0 and len(f.terms) == 1:
            cert = SdsosCertificate(basis, SddCertificate(1, (), (float(coef),)))
            return CertifyResult("certified", cert)
        return CertifyResult(
            "refuted",
            refutation=SdsosRefutation(basis, "negative weight on a single square"),
        )

    builder = ProgramBuilder()
    gram_vars = {
        (a, b): builder.new_var() for a in range(nb) for b in range(a, nb)
    }
    match_keys = sorted(products, key=grlex_key)
    for key in match_keys:
        expr = LinExpr()
        for (a, b) in products[key]:
            expr.add_term(gram_vars[(a, b)], 1.0 if a == b else 2.0)
        builder.add_eq(expr, f.coefficient(key))
    entries = {
        (a, b): LinExpr.of(col) for (a, b), col in gram_vars.items()
    }
    add_sdd_membership(builder, entries, nb)
    res = feasibility(builder.build(), (settings or SolverSettings()).tightened())

    if res.status == "feasible":
        x = res.witness
        blocks = []
        # block variables were appended after the Gram entries in pair order
        base = len(gram_vars)
        k = 0
        for a in range(nb):
            for b in range(a + 1, nb):
                cols = (base + 3 * k, base + 3 * k + 1, base + 3 * k + 2)
                blocks.append(
                    (a, b, float(x[cols[0]]), float(x[cols[1]]), float(x[cols[2]]))
                )
                k += 1
        cert = SdsosCertificate(basis, SddCertificate(nb, tuple(blocks)))
        ok = _certificate_matches(cert, f)
        if ok:
            return CertifyResult("certified", cert)
        return CertifyResult("inconclusive", detail="certificate residual too large")
    if res.status == "infeasible":
        y = res.certificate
        duals = {key: float(y[r]) for r, key in enumerate(match_keys)}
        inner = sum(duals.get(e, 0.0) * c for e, c in f.terms.items())
        return CertifyResult(
            "refuted",
            refutation=SdsosRefutation(
                basis, "no sdd Gram matrix over this basis", duals, inner
            ),
        )
    return CertifyResult("inconclusive", detail="solver hit its iteration limit")


def _certificate_matches(cert: SdsosCertificate, f: Polynomial, tol: float = COEF_TOL) -> bool:
    recon = cert.polynomial()
    scale = 1.0 + max((abs(c) for c in f.terms.values()), default=0.0)
    diff = recon - f
    err = max((abs(c) for c in diff.terms.values()), default=0.0)
    return err <= tol * scale


def certificate_residual(cert: SdsosCertificate, f: Polynomial) -> float:
    diff = cert.polynomial() - f
    return max((abs(c) for c in diff.terms.values()), default=0.0)


def certify_first_order_convex(
    f: Polynomial,
    settings: SolverSettings | None = None,
    full_basis: bool = False,
) -> CertifyResult:
    """Certify f first-order SDSOS-convex by certifying its gap polynomial."""
    if f.degree <= 1:
        empty = MonomialBasis(2 * f.n, 0, ())
        return CertifyResult(
            "certified",
            SdsosCertificate(empty, SddCertificate(0, ())),
            detail="affine polynomial, gap vanishes identically",
        )
    gap = first_order_gap(f)
    return certify_sdsos(gap, settings=settings, full_basis=full_basis)
