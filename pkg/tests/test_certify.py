import numpy as np
import pytest

from sdsopt.certify import (
    CertifyResult,
    SdsosCertificate,
    certificate_residual,
    certify_first_order_convex,
    certify_sdsos,
    reduce_basis,
)
from sdsopt.matrixcones import SymMatrix, is_dd
from sdsopt.poly import Polynomial, first_order_gap, monomial_basis, poly_eval

from conftest import coupled_quadratic


def random_sdd_matrix(rng: np.random.Generator, q: int) -> np.ndarray:
    r = rng.normal(size=(q, q))
    r = 0.5 * (r + r.T)
    off = np.sum(np.abs(r), axis=1) - np.abs(np.diag(r))
    r[np.diag_indices(q)] = off + rng.random(q)
    d = rng.uniform(0.5, 1.5, size=q)
    return d[:, None] * r * d[None, :]


def homogeneous_quartic(rng: np.random.Generator) -> Polynomial:
    """<m m', Q> over m = (x^2, xz, z^2) with Q sdd, so SDSOS by construction."""
    mono = ((2, 0), (1, 1), (0, 2))
    q = random_sdd_matrix(rng, 3)
    terms = {}
    for a in range(3):
        for b in range(3):
            key = tuple(mono[a][i] + mono[b][i] for i in range(2))
            terms[key] = terms.get(key, 0.0) + q[a, b]
    return Polynomial(2, terms)


def assert_sound(res: CertifyResult, f: Polynomial):
    assert res.status == "certified" and bool(res)
    cert = res.certificate
    scale = 1.0 + max((abs(c) for c in f.terms.values()), default=0.0)
    assert certificate_residual(cert, f) <= 1e-7 * scale
    assert cert.gram.block_violation() <= 1e-7 * scale


class TestReduceBasis:
    def test_quartic_objective_support(self):
        # aggregate support of the degree-4 program data in two variables
        f = Polynomial(
            2,
            {(4, 0): 1.0, (0, 1): -1.0, (2, 0): 1.0, (0, 2): 1.0, (0, 0): -1.0, (1, 0): 1.0},
        )
        b = reduce_basis(f)
        assert b.exponents == ((0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2))

    def test_pure_quartic_prunes_to_square(self):
        b = reduce_basis(Polynomial(1, {(4,): 1.0}))
        assert b.exponents == ((2,),)

    def test_dense_keeps_full(self):
        full = monomial_basis(2, 2)
        dense = Polynomial(2, {tuple(np.add(a, b)): 1.0 for a in full for b in full})
        assert reduce_basis(dense).exponents == full.exponents

    def test_full_flag_disables_pruning(self):
        f = Polynomial(1, {(4,): 1.0})
        assert reduce_basis(f, full=True).exponents == monomial_basis(1, 2).exponents

    def test_odd_degree_rejected(self):
        with pytest.raises(ValueError):
            reduce_basis(Polynomial(1, {(3,): 1.0}))


class TestCertifySdsos:
    def test_binomial_square(self):
        f = coupled_quadratic(y=1.0) - Polynomial(2, {(0, 2): 1.0})  # (x1 + x2)^2
        assert f == Polynomial(2, {(2, 0): 1.0, (1, 1): 2.0, (0, 2): 1.0})
        res = certify_sdsos(f)
        assert_sound(res, f)
        assert len(res.certificate.gram.blocks) == 1

    def test_gap_at_one_refuted(self):
        gap = first_order_gap(coupled_quadratic(1.0))
        res = certify_sdsos(gap)
        assert res.status == "refuted" and not bool(res)
        ref = res.refutation
        assert ref.inner is not None and ref.inner < -1e-9
        # the dual weights really do separate: <duals, gap> < 0
        recomputed = sum(ref.dual_moments.get(e, 0.0) * c for e, c in gap.terms.items())
        assert recomputed == pytest.approx(ref.inner)

    def test_exhibited_dd_gram_instance(self):
        # x^4 - 4x z^3 + 3 z^4 carries the dd Gram
        # [[1,0,-1],[0,2,-2],[-1,-2,3]] over (x^2, xz, z^2)
        exhibited = SymMatrix([[1.0, 0.0, -1.0], [0.0, 2.0, -2.0], [-1.0, -2.0, 3.0]])
        assert is_dd(exhibited)[0]
        f = Polynomial(2, {(4, 0): 1.0, (1, 3): -4.0, (0, 4): 3.0})
        res = certify_sdsos(f)
        assert_sound(res, f)
        assert res.certificate.basis.exponents == ((2, 0), (1, 1), (0, 2))

    def test_zero_polynomial(self):
        res = certify_sdsos(Polynomial.zero(2))
        assert res.status == "certified"
        assert res.certificate.polynomial().is_zero()

    def test_odd_degree_refuted(self):
        res = certify_sdsos(Polynomial(1, {(3,): 1.0}))
        assert res.status == "refuted"
        assert "odd" in res.refutation.reason

    def test_unrepresentable_monomial_refuted(self):
        # basis (x^2) cannot reach the x^2 coefficient of x^4 + x^2... with a
        # homogeneous input the pruned basis misses mixed support
        f = Polynomial(1, {(4,): 1.0, (1,): 1.0})
        res = certify_sdsos(f)
        assert res.status == "refuted"
        assert "not representable" in res.refutation.reason

    def test_negative_single_square(self):
        res = certify_sdsos(Polynomial(1, {(4,): -2.0}))
        assert res.status == "refuted"

    def test_scalar_basis_accepts(self):
        res = certify_sdsos(Polynomial(1, {(4,): 2.0}))
        assert_sound(res, Polynomial(1, {(4,): 2.0}))

    def test_negative_constant_refuted(self):
        res = certify_sdsos(Polynomial.constant(2, -1.0))
        assert res.status == "refuted"


class TestFirstOrderConvex:
    def test_affine_always(self):
        f = Polynomial(2, {(1, 0): 3.0, (0, 1): -1.0, (0, 0): 9.0})
        res = certify_first_order_convex(f)
        assert res.status == "certified"
        assert "affine" in res.detail

    def test_coupled_quadratic_refuted_at_one(self):
        res = certify_first_order_convex(coupled_quadratic(1.0))
        assert res.status == "refuted"

    def test_quadratic_needs_diagonal_coupling(self):
        # the gap of x' M x is the quadratic form (M, -M; -M, M), whose rows
        # can never be scaled dominant once M has an off-diagonal entry
        assert certify_first_order_convex(coupled_quadratic(0.5)).status == "refuted"
        diag = coupled_quadratic(0.0)
        res = certify_first_order_convex(diag)
        assert res.status == "certified"
        assert_sound(res, first_order_gap(diag))

    def test_pure_quartic(self):
        res = certify_first_order_convex(Polynomial(1, {(4,): 1.0}))
        assert res.status == "certified"

    def test_separable_quartic_two_vars(self):
        f = Polynomial(2, {(4, 0): 0.6, (0, 4): 0.3, (2, 0): 0.2, (0, 2): 0.5, (1, 0): -0.1})
        res = certify_first_order_convex(f)
        assert res.status == "certified"
        assert_sound(res, first_order_gap(f))


class TestInvariants:
    def test_certified_nonnegative_at_random_points(self):
        rng = np.random.default_rng(1)
        f = homogeneous_quartic(rng)
        res = certify_sdsos(f)
        assert res.status == "certified"
        pts = rng.uniform(-3, 3, size=(10_000, 2))
        assert float(np.min(poly_eval(f, pts))) >= -1e-6

    def test_nonnegative_within_convex_family_certifies(self):
        # first-order-convex univariate quartics, shifted to stay nonnegative
        # near the sampled minimum with a strict margin
        rng = np.random.default_rng(9)
        for k in range(100):
            f = Polynomial(
                1,
                {
                    (4,): float(rng.uniform(0.1, 1.0)),
                    (2,): float(rng.uniform(0.0, 1.0)),
                    (1,): float(rng.uniform(-0.5, 0.5)),
                    (0,): float(rng.uniform(-1.0, 1.0)),
                },
            )
            assert certify_first_order_convex(f).status == "certified", f"instance {k}"
            pts = rng.uniform(-2, 2, size=(2000, 1))
            m = float(np.min(poly_eval(f, pts)))
            shifted = f - Polynomial.constant(1, m - 0.1 * (1.0 + abs(m)))
            res = certify_sdsos(shifted)
            assert_sound(res, shifted)

    def test_reduced_basis_success_implies_full(self):
        rng = np.random.default_rng(3)
        for k in range(50):
            f = homogeneous_quartic(rng)
            reduced = certify_sdsos(f)
            assert reduced.status == "certified", f"instance {k} reduced"
            assert len(reduced.certificate.basis) == 3
            full = certify_sdsos(f, full_basis=True)
            assert full.status == "certified", f"instance {k} full"
            assert_sound(full, f)

    def test_certificates_round_trip_through_gram(self):
        f = homogeneous_quartic(np.random.default_rng(21))
        cert = certify_sdsos(f).certificate
        gram = cert.gram_matrix()
        # reconstructing through the dense Gram agrees with the block path
        rebuilt = SdsosCertificate(cert.basis, cert.gram).polynomial()
        assert certificate_residual(cert, rebuilt) <= 1e-12
        assert gram.q == len(cert.basis)
