import numpy as np
import pytest

from sdsopt.poly import Polynomial, poly_eval
from sdsopt.semialg import (
    Program,
    SemiAlgebraicFunction,
    SocpSet,
    Unbounded,
    add,
    box_set,
    from_polynomial,
    norm1_function,
    norm2_function,
    omega_contains,
    trivial_set,
    unit_ball_set,
    validate,
)

from conftest import disc_constraint, disc_set


def interval_family() -> SemiAlgebraicFunction:
    """sup over y in [0,1] of x1^2 + 2 x2^2 + y * 2 x1 x2."""
    omega = SocpSet([np.diag([0.0, 1.0]), np.diag([1.0, -1.0])])
    h0 = Polynomial(2, {(2, 0): 1.0, (0, 2): 2.0})
    return SemiAlgebraicFunction(h0, [Polynomial(2, {(1, 1): 2.0})], omega)


class TestSocpSet:
    def test_empty_set_rejected(self):
        with pytest.raises(ValueError, match="empty"):
            SocpSet([np.array([[-1.0]])])

    def test_size_mismatch_rejected(self):
        with pytest.raises(ValueError, match="share one size"):
            SocpSet([np.eye(2), np.eye(3)])

    def test_needs_constant_matrix(self):
        with pytest.raises(ValueError):
            SocpSet([])

    def test_immutable(self):
        s = trivial_set()
        with pytest.raises(AttributeError):
            s.q = 9

    def test_interval_membership_sweep(self):
        omega = SocpSet([np.diag([0.0, 1.0]), np.diag([1.0, -1.0])])
        for y, member in [(-0.1, False), (0.0, True), (0.25, True), (0.5, True), (1.0, True), (1.1, False)]:
            assert omega_contains(omega, [y]) == member, y

    def test_ball_membership(self):
        ball = unit_ball_set(2)
        assert ball.contains((0.0, 0.0))
        assert not ball.contains((0.85, 0.85))  # norm 1.2

    def test_membership_length_check(self):
        with pytest.raises(ValueError):
            unit_ball_set(2).contains((0.1,))

    def test_ball_support_is_norm(self):
        value, y = unit_ball_set(2).support((3.0, 4.0))
        assert value == pytest.approx(5.0, abs=1e-5)
        assert y == pytest.approx([0.6, 0.8], abs=1e-5)

    def test_interval_bounds_recorded(self):
        omega = SocpSet([np.diag([0.0, 1.0]), np.diag([1.0, -1.0])])
        assert omega.bounded
        lo, hi = omega.bounds[0]
        assert lo == pytest.approx(0.0, abs=1e-5)
        assert hi == pytest.approx(1.0, abs=1e-5)

    def test_unbounded_direction_flagged(self):
        free = SocpSet([np.eye(2), np.zeros((2, 2))])
        assert not free.bounded
        with pytest.raises(Unbounded):
            free.support((1.0,))

    def test_sample_stays_inside(self):
        ball = unit_ball_set(2)
        pts = ball.sample(8, seed=3)
        assert len(pts) == 8
        for y in pts:
            assert np.linalg.norm(y) <= 1.0 + 1e-5

    def test_product_evaluates_blockwise(self):
        prod = unit_ball_set(1).product(box_set(1))
        assert (prod.s, prod.q) == (2, 4)
        # coordinates stay independent: support of (1,1) splits into 1 + 1
        value, _ = prod.support((1.0, 1.0))
        assert value == pytest.approx(2.0, abs=1e-5)


class TestEval:
    def test_euclidean_norm(self):
        value, y = norm2_function(2).eval((3.0, 4.0))
        assert value == pytest.approx(5.0, abs=1e-5)
        assert y == pytest.approx([0.6, 0.8], abs=1e-5)

    def test_one_norm(self):
        value, y = norm1_function(2).eval((1.0, -2.0))
        assert value == pytest.approx(3.0, abs=1e-5)
        assert y == pytest.approx([1.0, -1.0], abs=1e-4)

    def test_interval_family_at_ones(self):
        value, y = interval_family().eval((1.0, 1.0))
        assert value == pytest.approx(5.0, abs=1e-5)
        assert y[0] == pytest.approx(1.0, abs=1e-5)

    def test_trivial_wrapper_matches_polynomial(self):
        p = Polynomial(2, {(2, 0): 1.0, (0, 1): -3.0})
        f = from_polynomial(p)
        rng = np.random.default_rng(0)
        for _ in range(10):
            x = rng.normal(size=2)
            value, y = f.eval(x)
            assert value == pytest.approx(poly_eval(p, x))
            assert y.size == 0

    def test_argmax_lies_in_omega(self):
        f = norm2_function(2)
        rng = np.random.default_rng(8)
        for _ in range(10):
            x = rng.normal(size=2) * 3
            _, y = f.eval(x)
            # shrink a hair toward the center before the membership query so
            # the boundary argmax is not rejected for solver roundoff
            assert f.omega.contains(y * (1.0 - 1e-7))

    def test_wrong_length_rejected(self):
        with pytest.raises(ValueError):
            norm2_function(2).eval((1.0, 2.0, 3.0))

    def test_callable_returns_value(self):
        assert norm2_function(2)((3.0, 4.0)) == pytest.approx(5.0, abs=1e-5)


class TestAdd:
    def test_zero_is_identity(self):
        f = norm2_function(2)
        zero = from_polynomial(Polynomial.zero(2))
        g = add(f, zero)
        rng = np.random.default_rng(4)
        for _ in range(20):
            x = rng.normal(size=2) * 2
            assert g(x) == pytest.approx(f(x), abs=1e-5)

    def test_norm_sum(self):
        g = add(norm2_function(2), norm1_function(2))
        assert g((3.0, 4.0)) == pytest.approx(12.0, abs=1e-4)

    def test_least_squares_plus_weighted_one_norm(self):
        # ||Ax - b||^2 with diagonal A, plus mu * ||x||_1
        a1, a2, b1, b2, mu = 1.0, 2.0, 1.0, -1.0, 0.3
        lsq = from_polynomial(
            Polynomial(
                2,
                {
                    (2, 0): a1 * a1,
                    (0, 2): a2 * a2,
                    (1, 0): -2 * a1 * b1,
                    (0, 1): -2 * a2 * b2,
                    (0, 0): b1 * b1 + b2 * b2,
                },
            )
        )
        g = add(lsq, norm1_function(2, weight=mu))
        rng = np.random.default_rng(12)
        for _ in range(10):
            x = rng.normal(size=2)
            want = (a1 * x[0] - b1) ** 2 + (a2 * x[1] - b2) ** 2 + mu * np.sum(np.abs(x))
            assert g(x) == pytest.approx(want, abs=1e-5)

    def test_variable_count_checked(self):
        with pytest.raises(ValueError):
            add(norm2_function(2), norm2_function(3))


class TestValidate:
    def test_interval_family_fails_at_endpoint(self):
        rep = validate(interval_family(), samples=6, seed=0)
        assert not rep.passed
        assert any(abs(y[0] - 1.0) < 1e-5 for y, _reason in rep.failures)

    def test_constant_family_passes(self):
        f = from_polynomial(Polynomial(2, {(2, 0): 1.0, (0, 2): 1.0}))
        rep = f.validate(samples=5)
        assert rep.passed and rep.clean
        assert f.validation is rep

    def test_disc_constraint_passes(self):
        rep = validate(disc_constraint(), samples=25, seed=1)
        assert rep.passed
        assert len(rep.samples) == 25


class TestProgram:
    def test_counts(self, golden_program):
        assert golden_program.n == 2
        assert golden_program.m == 1
        fs = golden_program.functions()
        assert fs[0] is golden_program.objective
        assert fs[1] is golden_program.constraints[0]

    def test_mixed_dimensions_rejected(self):
        with pytest.raises(ValueError):
            Program(norm2_function(2), [norm2_function(3)])


class TestInvariants:
    def test_eval_convex_along_segments(self):
        f = add(norm2_function(2), norm1_function(2, weight=0.5))
        g = disc_constraint()
        rng = np.random.default_rng(19)
        for _ in range(100):
            x1 = rng.normal(size=2) * 2
            x2 = rng.normal(size=2) * 2
            lam = float(rng.random())
            mid = lam * x1 + (1 - lam) * x2
            for fn in (f, g):
                assert fn(mid) <= lam * fn(x1) + (1 - lam) * fn(x2) + 1e-6

    def test_add_matches_sum_pointwise(self):
        f1, f2 = norm2_function(2), interval_family()
        g = add(f1, f2)
        rng = np.random.default_rng(23)
        for _ in range(100):
            x = rng.normal(size=2) * 1.5
            assert g(x) == pytest.approx(f1(x) + f2(x), abs=1e-6 * (1 + abs(f1(x) + f2(x))))

    def test_instance_combines_parameters(self):
        f = disc_constraint()
        inst = f.instance((0.25, -0.5))
        want = f.h0 + 0.25 * f.hs[0] + (-0.5) * f.hs[1]
        assert inst == want


class TestCanonicalSets:
    def test_trivial(self):
        t = trivial_set()
        assert (t.s, t.p, t.q) == (0, 0, 1)

    def test_disc_set_is_unit_disc(self):
        om = disc_set()
        assert om.contains((0.6, 0.6))
        assert not om.contains((0.8, 0.8))

    def test_size_validation(self):
        with pytest.raises(ValueError):
            unit_ball_set(0)
        with pytest.raises(ValueError):
            box_set(0)
