"""Built-in conic interior-point solver: closed forms, random feasible and
infeasible instances, with the independent residual checker as trust anchor."""

import numpy as np
import pytest
import scipy.sparse as sp

from spcabeam.cones import ConicProgram, ProgramBuilder, add_hyperbolic
from spcabeam.errors import SolverError
from spcabeam import ipm
from spcabeam.ipm import SolverSettings, residuals, solve
from helpers import (
    primal_infeasible_program,
    random_feasible_program,
    unbounded_program,
)


def tight_settings():
    return SolverSettings(feas_tol=1e-9, gap_tol=1e-9)


class TestClosedForms:
    def test_min_soc_norm(self):
        # minimize t s.t. ||(1,1)|| <= t  ->  t* = sqrt(2)
        bld = ProgramBuilder()
        t = bld.add_scalar(("t",))
        bld.add_soc([([t], [1.0], 0.0), ([], [], 1.0), ([], [], 1.0)])
        bld.minimize([t], [1.0])
        sol = solve(bld.build(), tight_settings())
        assert sol.status == ipm.OPTIMAL
        assert sol.x[0] == pytest.approx(np.sqrt(2), abs=1e-8)

    def test_lp_corner(self):
        # maximize x s.t. x <= 3, x >= 0  ->  x* = 3
        bld = ProgramBuilder()
        x = bld.add_scalar(("x",))
        bld.add_nonneg([x], [-1.0], 3.0)
        bld.add_nonneg([x], [1.0], 0.0)
        bld.maximize([x], [1.0])
        sol = solve(bld.build(), tight_settings())
        assert sol.status == ipm.OPTIMAL
        assert sol.x[0] == pytest.approx(3.0, abs=1e-8)

    def test_am_gm_symmetry(self):
        # maximize w s.t. w^2 <= x*y, x + y <= 2  ->  x* = y* = 1, w* = 1
        bld = ProgramBuilder()
        w = bld.add_scalar(("w",))
        x = bld.add_scalar(("x",))
        y = bld.add_scalar(("y",))
        add_hyperbolic(bld, [w], x, y)
        bld.add_nonneg([x, y], [-1.0, -1.0], 2.0)
        bld.maximize([w], [1.0])
        sol = solve(bld.build(), tight_settings())
        assert sol.status == ipm.OPTIMAL
        assert sol.x[w] == pytest.approx(1.0, abs=1e-7)
        assert sol.x[x] == pytest.approx(1.0, abs=1e-6)
        assert sol.x[y] == pytest.approx(1.0, abs=1e-6)

    def test_equality_block(self):
        # minimize x1 + x2 s.t. x1 + x2 + x3 = 4, x >= 0, sensible corner
        bld = ProgramBuilder()
        xs = bld.add_block(("x",), 3)
        bld.add_zero(list(xs), [1.0, 1.0, 1.0], -4.0)
        for j in xs:
            bld.add_nonneg([j], [1.0], 0.0)
        bld.minimize(list(xs), [1.0, 1.0, 0.0])
        sol = solve(bld.build(), tight_settings())
        assert sol.status == ipm.OPTIMAL
        assert sol.primal_objective == pytest.approx(0.0, abs=1e-7)
        assert sol.x[2] == pytest.approx(4.0, abs=1e-6)


class TestRandomFeasible:
    def test_hundred_random_socps(self):
        rng = np.random.default_rng(2024)
        for k in range(100):
            prog = random_feasible_program(rng)
            sol = solve(prog, SolverSettings())
            assert sol.status == ipm.OPTIMAL, f"instance {k}: {sol.status}"
            rep = residuals(prog, sol)
            assert rep.max_residual() <= 1e-6, f"instance {k}"
            assert rep.complementarity <= 1e-6 * max(
                1.0, abs(rep.primal_objective)
            ), f"instance {k}"

    def test_objective_scaling_invariance(self):
        rng = np.random.default_rng(11)
        prog = random_feasible_program(rng)
        sol1 = solve(prog, tight_settings())
        scaled = ConicProgram(c=prog.c * 37.0, A=prog.A, b=prog.b,
                              cones=prog.cones)
        sol2 = solve(scaled, tight_settings())
        assert np.max(np.abs(sol1.x - sol2.x)) <= 1e-6 * (
            1 + np.max(np.abs(sol1.x))
        )

    def test_self_duality_gap(self):
        # solve the explicit dual as a conic program; optimal values agree
        rng = np.random.default_rng(5)
        prog = random_feasible_program(rng)
        psol = solve(prog, SolverSettings())
        A = prog.A.toarray()
        m, n = A.shape
        # dual: min b'y s.t. A'y + c = 0 (zero rows), y in K*
        bld = ProgramBuilder()
        yvars = bld.add_block(("y",), m)
        for j in range(n):
            cols = list(yvars)
            bld.add_zero(cols, A[:, j], prog.c[j])
        for kind, dim_range in prog.cone_ranges():
            rows = [yvars[i] for i in dim_range]
            if kind == "zero":
                continue
            if kind == "nonneg":
                for r in rows:
                    bld.add_nonneg([r], [1.0], 0.0)
            else:
                bld.add_soc([([r], [1.0], 0.0) for r in rows])
        bld.minimize(list(yvars), prog.b)
        dsol = solve(bld.build(), SolverSettings())
        assert dsol.status == ipm.OPTIMAL
        # dual optimum of the dual = primal optimum (strong duality)
        assert -dsol.primal_objective == pytest.approx(
            psol.primal_objective, abs=1e-6
        )


class TestInfeasibility:
    def test_primal_infeasible_certified(self):
        rng = np.random.default_rng(77)
        for k in range(10):
            prog = primal_infeasible_program(rng)
            sol = solve(prog, SolverSettings())
            assert sol.status == ipm.PRIMAL_INFEASIBLE, f"instance {k}: {sol.status}"
            rep = residuals(prog, sol)
            assert rep.certificate_value < 0
            assert rep.certificate_residual <= 1e-6 * max(
                1.0, -rep.certificate_value
            )
            assert rep.cone_violation_y <= 1e-7

    def test_unbounded_certified(self):
        rng = np.random.default_rng(78)
        for k in range(10):
            prog = unbounded_program(rng)
            sol = solve(prog, SolverSettings())
            assert sol.status == ipm.DUAL_INFEASIBLE, f"instance {k}: {sol.status}"
            rep = residuals(prog, sol)
            assert rep.certificate_value < 0
            assert rep.certificate_residual <= 1e-6 * max(
                1.0, -rep.certificate_value
            )
            assert rep.cone_violation_s <= 1e-7


class TestResidualChecker:
    def exact_lp(self):
        # min -x s.t. x <= 1 (nonneg slack); x* = 1, y* = 1
        bld = ProgramBuilder()
        x = bld.add_scalar(("x",))
        bld.add_nonneg([x], [-1.0], 1.0)
        bld.minimize([x], [-1.0])
        return bld.build()

    def test_hand_solution_zero_residuals(self):
        prog = self.exact_lp()
        sol = ipm.Solution(
            x=np.array([1.0]), y=np.array([1.0]), s=np.array([0.0]),
            status=ipm.OPTIMAL)
        rep = residuals(prog, sol)
        assert rep.primal_residual == 0.0
        assert rep.dual_residual == 0.0
        assert rep.complementarity == 0.0

    def test_perturbed_solution_scales_linearly(self):
        prog = self.exact_lp()
        sol = ipm.Solution(
            x=np.array([1.0 + 1e-3]), y=np.array([1.0]), s=np.array([0.0]),
            status=ipm.OPTIMAL)
        rep = residuals(prog, sol)
        # ||A (x + e) + s - b|| = |A| * 1e-3, normalized by 1 + ||b||
        assert rep.primal_residual == pytest.approx(1e-3 / 2.0, rel=1e-9)

    def test_certificate_signs_verified(self):
        rng = np.random.default_rng(3)
        prog = primal_infeasible_program(rng)
        sol = solve(prog, SolverSettings())
        rep = residuals(prog, sol)
        assert rep.status == ipm.PRIMAL_INFEASIBLE
        assert rep.certificate_value == pytest.approx(-1.0, rel=1e-6)


class TestSettingsAndAdapters:
    def test_bad_settings_rejected(self):
        with pytest.raises(ValueError):
            SolverSettings(feas_tol=0.0).check()
        with pytest.raises(ValueError):
            SolverSettings(max_iterations=-1).check()

    def test_max_iterations_status(self):
        rng = np.random.default_rng(1)
        prog = random_feasible_program(rng)
        sol = solve(prog, SolverSettings(max_iterations=1))
        assert sol.status == ipm.MAX_ITERATIONS

    def test_adapter_registry(self):
        assert ipm.get_solver("ipm") is solve
        with pytest.raises(SolverError):
            ipm.get_solver("missing")

    def test_no_cone_rows_rejected(self):
        bld = ProgramBuilder()
        x = bld.add_scalar(("x",))
        bld.add_zero([x], [1.0], -1.0)
        bld.minimize([x], [1.0])
        with pytest.raises(SolverError):
            solve(bld.build(), SolverSettings())
