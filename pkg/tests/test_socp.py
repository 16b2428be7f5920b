import numpy as np
import pytest
import scipy.sparse as sp

from sdsopt.matrixcones import add_sdd_membership, matrix_entry_exprs
from sdsopt.socp import (
    Cone,
    ConicProgram,
    LinExpr,
    ProgramBuilder,
    SolverError,
    SolverSettings,
    SolveStatus,
    dual_objective,
    feasibility,
    project_soc,
    register_backend,
    solve,
)

from test_matrixcones import gap_gram


def assert_weak_duality(prog, sol, tol=1e-6):
    if sol.status == SolveStatus.OPTIMAL:
        assert sol.objective >= dual_objective(prog, sol) - tol


class TestValidation:
    def test_cone_kind(self):
        with pytest.raises(SolverError):
            Cone("exotic", 3)
        with pytest.raises(SolverError):
            Cone("soc", 0)

    def test_program_shapes(self):
        a = sp.csc_matrix(np.ones((2, 1)))
        with pytest.raises(SolverError):
            ConicProgram(np.ones(2), a, np.ones(2), (Cone("nonneg", 2),))
        with pytest.raises(SolverError):
            ConicProgram(np.ones(1), a, np.ones(2), (Cone("nonneg", 1),))
        with pytest.raises(SolverError):
            ConicProgram(np.zeros(0), sp.csc_matrix((0, 0)), np.zeros(0), ())

    def test_settings(self):
        with pytest.raises(SolverError):
            SolverSettings(tol_feas=0.0)
        with pytest.raises(SolverError):
            SolverSettings(max_iter=0)
        with pytest.raises(SolverError):
            SolverSettings(alpha=2.0)

    def test_tightened_caps(self):
        s = SolverSettings(tol_feas=1e-5, max_iter=777)
        t = s.tightened()
        assert t.tol_feas == t.tol_gap == t.tol_infeas == 1e-9
        assert t.max_iter == 777
        loose = SolverSettings(tol_feas=1e-12).tightened()
        assert loose.tol_feas == 1e-12


class TestProjection:
    def test_interior_fixed(self):
        v = np.array([5.0, 3.0, 0.0])
        assert np.array_equal(project_soc(v), v)

    def test_polar_to_zero(self):
        v = np.array([-5.0, 3.0, 0.0])
        assert np.array_equal(project_soc(v), np.zeros(3))

    def test_boundary_formula(self):
        v = np.array([1.0, 3.0, 4.0])
        got = project_soc(v)
        # ((t + ||y||)/2, same * y/||y||)
        assert got[0] == pytest.approx(3.0)
        assert got[1:] == pytest.approx([3.0 * 0.6, 3.0 * 0.8])
        assert got[0] == pytest.approx(np.linalg.norm(got[1:]))

    def test_idempotent(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            v = rng.normal(size=rng.integers(1, 6))
            p = project_soc(v)
            assert np.allclose(project_soc(p), p, atol=1e-12)
            assert p[0] >= np.linalg.norm(p[1:]) - 1e-12


class TestSolve:
    def test_lower_bound(self):
        b = ProgramBuilder()
        x = b.new_var()
        b.add_objective_term(x, 1.0)
        b.add_ge(LinExpr.of(x), 1.0)
        prog = b.build()
        sol = solve(prog)
        assert sol.status == SolveStatus.OPTIMAL
        assert sol.objective == pytest.approx(1.0, abs=1e-6)
        assert_weak_duality(prog, sol)

    def test_euclidean_norm(self):
        b = ProgramBuilder()
        t, u, v = b.new_var(), b.new_var(), b.new_var()
        b.add_objective_term(t, -1.0)
        b.add_soc([LinExpr.of(t), LinExpr.of(u), LinExpr.of(v)])
        b.add_eq(LinExpr.of(u), 3.0)
        b.add_eq(LinExpr.of(v), 4.0)
        b.add_le(LinExpr.of(t), 5.0)  # keeps -t bounded; inactive at the optimum? no: tight
        sol = solve(b.build())
        assert sol.status == SolveStatus.OPTIMAL
        assert sol.x[t] == pytest.approx(5.0, abs=1e-5)

    def test_norm_as_minimum(self):
        b = ProgramBuilder()
        t, u, v = b.new_var(), b.new_var(), b.new_var()
        b.add_objective_term(t, 1.0)
        b.add_soc([LinExpr.of(t), LinExpr.of(u), LinExpr.of(v)])
        b.add_eq(LinExpr.of(u), 3.0)
        b.add_eq(LinExpr.of(v), 4.0)
        prog = b.build()
        sol = solve(prog)
        assert sol.status == SolveStatus.OPTIMAL
        assert sol.objective == pytest.approx(5.0, abs=1e-5)
        assert_weak_duality(prog, sol)

    def test_unbounded_reports_dual_infeasible(self):
        b = ProgramBuilder()
        x = b.new_var()
        b.add_objective_term(x, -1.0)
        b.add_ge(LinExpr.of(x), 0.0)
        assert solve(b.build()).status == SolveStatus.DUAL_INFEASIBLE

    def test_iteration_budget(self):
        b = ProgramBuilder()
        x = b.new_var()
        b.add_objective_term(x, 1.0)
        b.add_ge(LinExpr.of(x), 1.0)
        sol = solve(b.build(), SolverSettings(max_iter=1))
        assert sol.status == SolveStatus.NUMERICAL_LIMIT
        assert sol.iterations == 1

    def test_deterministic_replay(self):
        b = ProgramBuilder()
        t, u, v = b.new_var(), b.new_var(), b.new_var()
        b.add_objective_term(t, 1.0)
        b.add_soc([LinExpr.of(t), LinExpr.of(u), LinExpr.of(v)])
        b.add_ge(LinExpr.of(u), 1.0)
        b.add_ge(LinExpr.of(v), 2.0)
        prog = b.build()
        a, bb = solve(prog), solve(prog)
        assert a.iterations == bb.iterations
        assert np.array_equal(a.x, bb.x)
        assert np.array_equal(a.y, bb.y)


class TestFeasibility:
    def test_unconstrained(self):
        b = ProgramBuilder()
        b.new_var()
        res = feasibility(b.build())
        assert res.status == "feasible" and bool(res)
        assert np.array_equal(res.witness, [0.0])

    def test_contradictory_bounds(self):
        b = ProgramBuilder()
        x = b.new_var()
        b.add_ge(LinExpr.of(x), 1.0)
        b.add_le(LinExpr.of(x), 0.0)
        res = feasibility(b.build())
        assert res.status == "infeasible" and not bool(res)
        assert res.certificate is not None

    def test_gap_gram_blocks_infeasible(self):
        b = ProgramBuilder()
        add_sdd_membership(b, matrix_entry_exprs(gap_gram(1.0)), 4)
        assert feasibility(b.build()).status == "infeasible"


class TestBackendSeam:
    def test_unknown_backend_rejected(self):
        b = ProgramBuilder()
        x = b.new_var()
        b.add_ge(LinExpr.of(x), 0.0)
        with pytest.raises(SolverError):
            solve(b.build(), SolverSettings(backend="simplex"))
        with pytest.raises(SolverError):
            solve(b.build(), SolverSettings(backend="external:missing"))

    def test_registered_backend_routes(self):
        seen = {}

        def fake(prog, settings):
            seen["called"] = True
            return solve(prog, SolverSettings(max_iter=settings.max_iter))

        register_backend("fake", fake)
        b = ProgramBuilder()
        x = b.new_var()
        b.add_objective_term(x, 1.0)
        b.add_ge(LinExpr.of(x), 2.0)
        sol = solve(b.build(), SolverSettings(backend="external:fake"))
        assert seen.get("called") and sol.objective == pytest.approx(2.0, abs=1e-6)


class TestExpressions:
    def test_algebra(self):
        e = LinExpr.of(0, 2.0).plus(LinExpr.const_of(1.0)).times(3.0).minus(LinExpr.of(1))
        assert e.coefs == {0: 6.0, 1: -1.0}
        assert e.const == 3.0

    def test_add_term_merges(self):
        e = LinExpr.of(2, 1.5)
        e.add_term(2, 0.5)
        assert e.coefs == {2: 2.0}

    def test_builder_columns(self):
        b = ProgramBuilder()
        assert b.new_var() == 0
        assert list(b.new_vars(3)) == [1, 2, 3]
        assert b.num_cols == 4


class TestConstructedOptima:
    """Random programs whose optimal value is known by construction."""

    def test_lp_duality_batch(self):
        rng = np.random.default_rng(2024)
        for k in range(100):
            nvar = int(rng.integers(2, 6))
            nrow = nvar + int(rng.integers(1, 4))
            # exactly nvar well-conditioned tight rows make x* a unique vertex
            while True:
                a = rng.normal(size=(nrow, nvar))
                if np.linalg.cond(a[:nvar]) < 50.0:
                    break
            xstar = rng.normal(size=nvar)
            mu = np.zeros(nrow)
            mu[:nvar] = rng.uniform(0.1, 2.0, nvar)
            c = a.T @ mu
            slack = np.where(mu > 0, 0.0, rng.uniform(0.1, 1.0, nrow))
            rhs = a @ xstar - slack
            b = ProgramBuilder()
            cols = b.new_vars(nvar)
            for j, cj in zip(cols, c):
                b.add_objective_term(j, float(cj))
            for i in range(nrow):
                expr = LinExpr()
                for j, aij in zip(cols, a[i]):
                    expr.add_term(j, float(aij))
                b.add_ge(expr, float(rhs[i]))
            prog = b.build()
            sol = solve(prog)
            assert sol.status == SolveStatus.OPTIMAL, f"instance {k}: {sol.status}"
            assert sol.objective == pytest.approx(float(c @ xstar), abs=1e-5 * (1 + abs(c @ xstar)))
            assert_weak_duality(prog, sol)

    def test_distance_batch(self):
        rng = np.random.default_rng(77)
        for k in range(100):
            dim = int(rng.integers(1, 5))
            p = rng.normal(size=dim)
            q = rng.normal(size=dim)
            b = ProgramBuilder()
            t = b.new_var()
            xs = b.new_vars(dim)
            b.add_objective_term(t, 1.0)
            exprs = [LinExpr.of(t)]
            for j, pj in zip(xs, p):
                exprs.append(LinExpr.of(j).minus(LinExpr.const_of(float(pj))))
            b.add_soc(exprs)
            for j, qj in zip(xs, q):
                b.add_eq(LinExpr.of(j), float(qj))
            prog = b.build()
            sol = solve(prog)
            want = float(np.linalg.norm(q - p))
            assert sol.status == SolveStatus.OPTIMAL, f"instance {k}: {sol.status}"
            assert sol.objective == pytest.approx(want, abs=1e-5 * (1 + want))
            assert_weak_duality(prog, sol)
