"""Tests for projected gradient descent over the charging polytope."""

import itertools

import numpy as np
import pytest

from v2gopt.exceptions import ConfigError
from v2gopt.feasible import FeasibleSet
from v2gopt.icnn import PicnnArch, init_picnn, picnn_forward_batch
from v2gopt.objectives import (
    ChargingProblem,
    PackParams,
    TariffProfile,
    TempForecast,
    objective_terms,
    total_objective,
)
from v2gopt.solver import (
    SCHEDULE_HEADER,
    Schedule,
    SolveConfig,
    initial_point,
    solve,
)


def symmetric_bowl_net():
    """Network computing softplus(y) + softplus(-y): strictly convex in
    the C-rate, minimized at zero, independent of the context inputs."""
    arch = PicnnArch(
        n_x=2,
        n_y=1,
        z_widths=(2, 1),
        u_widths=(2,),
        g_names=("softplus", "identity"),
        g_tilde_names=("tanh",),
    )
    w = init_picnn(arch, seed=0)
    for i in range(arch.k):
        w.W_y[i][:] = 0.0
        w.W_u[i][:] = 0.0
        w.b[i][:] = 0.0
        w.W_yu[i][:] = 0.0
        w.b_y[i][:] = 0.0
        if i > 0:
            w.W_z[i][:] = 0.0
            w.W_zu[i][:] = 0.0
            w.b_z[i][:] = 0.0
    for t in range(arch.k - 1):
        w.Wt[t][:] = 0.0
        w.bt[t][:] = 0.0
    w.W_y[0][0, 0] = 1.0
    w.W_y[0][1, 0] = -1.0
    w.b_y[0][:] = 1.0
    w.W_z[1][:] = 1.0
    w.b_z[1][:] = 1.0
    w.scaler = None
    return w


def toy_pack():
    """Small pack whose constraint bounds all sit on the 0.25 kW grid,
    so the pure-price optimum lands exactly on a grid vertex."""
    return PackParams(
        capacity_kwh=1.0,
        eta_avg=1.0,
        e0=0.0,
        e_lo=0.0,
        e_hi=1.0,
        e_des=0.5,
        epsilon=0.0625,
        p_max=2.0,
        dt=0.25,
    )


def toy_problem(rho, alpha=(0.40, 0.10, 0.30, 0.20)):
    alpha = np.asarray(alpha, dtype=float)
    temps = TempForecast(temps_c=np.full(alpha.size, 20.0))
    return ChargingProblem(pack=toy_pack(), tariff=TariffProfile(alpha=alpha),
                           temps=temps, rho=rho)


def grid_search_minimum(problem):
    """Exhaustive sweep of 0.25 kW grid schedules inside the polytope."""
    pack = problem.pack
    T = problem.horizon
    vals = np.arange(-8, 9) * 0.25
    grids = np.array(list(itertools.product(vals, repeat=T)))
    feas = FeasibleSet.from_pack(pack, T)
    energy = pack.e0 + (pack.eta_avg * pack.dt / pack.capacity_kwh) * np.cumsum(
        grids, axis=1)
    tol = 1e-12
    ok = (np.all(energy >= pack.e_lo - tol, axis=1)
          & np.all(energy <= pack.e_hi + tol, axis=1)
          & (energy[:, -1] >= pack.e_des - pack.epsilon - tol)
          & (energy[:, -1] <= pack.e_des + pack.epsilon + tol))
    candidates = grids[ok]
    assert candidates.size > 0
    assert all(feas.is_feasible(c, 1e-9) for c in candidates[:50])
    costs = candidates @ problem.tariff.alpha * pack.dt
    best = int(np.argmin(costs))
    return candidates[best], float(costs[best])


class TestSolveConfig:
    def test_defaults(self):
        cfg = SolveConfig()
        assert cfg.step_size == "auto"
        assert cfg.max_iters == 5000
        assert cfg.stop_tol == 1e-7
        assert cfg.backtracking is False

    def test_invalid_fields_rejected(self):
        with pytest.raises(ConfigError) as err:
            SolveConfig(step_size="fast")
        assert err.value.field == "step_size"
        with pytest.raises(ConfigError):
            SolveConfig(step_size=0.0)
        with pytest.raises(ConfigError):
            SolveConfig(step_size=-2.0)
        with pytest.raises(ConfigError):
            SolveConfig(max_iters=0)
        with pytest.raises(ConfigError):
            SolveConfig(stop_tol=0.0)

    def test_frozen(self):
        cfg = SolveConfig()
        with pytest.raises(Exception):
            cfg.max_iters = 10


class TestInitialPoint:
    def test_zero_when_already_at_target(self):
        pack = PackParams(e0=0.7)
        feas = FeasibleSet.from_pack(pack, 8)
        u0 = initial_point(feas)
        assert np.max(np.abs(u0)) <= 1e-9

    def test_net_energy_matches_bookkeeping(self):
        # Net grid energy must lift e0=0.2 into the terminal band
        # around e_des=0.7: sum(u)*dt = (e_des - e0) * C / eta up to
        # the band half-width.
        pack = PackParams(e0=0.2, e_des=0.7)
        feas = FeasibleSet.from_pack(pack, 48)
        u0 = initial_point(feas)
        assert np.sum(u0) > 0.0
        stored = pack.e0 + pack.eta_avg * pack.dt * np.sum(u0) / pack.capacity_kwh
        assert abs(stored - pack.e_des) <= pack.epsilon + 1e-9
        nominal = (pack.e_des - pack.e0) * pack.capacity_kwh / pack.eta_avg
        band = pack.epsilon * pack.capacity_kwh / pack.eta_avg
        assert abs(np.sum(u0) * pack.dt - nominal) <= band + 1e-9

    def test_deterministic(self):
        feas = FeasibleSet.from_pack(PackParams(), 24)
        assert np.array_equal(initial_point(feas), initial_point(feas))


class TestSolve:
    def test_pure_price_toy_matches_grid_search(self):
        problem = toy_problem(rho=1.0)
        _, best_cost = grid_search_minimum(problem)
        sched = solve(problem, symmetric_bowl_net())
        assert sched.converged
        assert abs(sched.j_value - best_cost) <= 1e-6

    def test_pure_degradation_returns_minimum_norm_schedule(self):
        # The bowl network is minimized at zero C-rate, so at rho=0 the
        # optimizer must land on the projection of the zero profile.
        pack = PackParams(e0=0.3, e_des=0.7, e_lo=0.0, e_hi=1.0)
        rng = np.random.default_rng(5)
        T = 6
        problem = ChargingProblem(
            pack=pack,
            tariff=TariffProfile(alpha=rng.uniform(0.05, 0.4, size=T)),
            temps=TempForecast(temps_c=np.full(T, 20.0)),
            rho=0.0,
        )
        sched = solve(problem, symmetric_bowl_net())
        p0 = initial_point(FeasibleSet.from_pack(pack, T))
        assert sched.converged
        assert np.max(np.abs(sched.u - p0)) <= 1e-5

    def test_schedule_invariants(self):
        problem = toy_problem(rho=0.5)
        w = symmetric_bowl_net()
        sched = solve(problem, w)
        feas = FeasibleSet.from_pack(problem.pack, problem.horizon)
        assert feas.is_feasible(sched.u, 1e-8).ok
        assert np.array_equal(sched.energy_pu, feas.energy_trajectory(sched.u))
        assert abs(sched.energy_pu[-1] - problem.pack.e_des) <= (
            problem.pack.epsilon + 1e-8)
        t1, t2 = objective_terms(sched.u, problem, w)
        assert abs(sched.theta1_value - t1) <= 1e-10
        assert abs(sched.theta2_value - t2) <= 1e-10
        assert abs(sched.j_value
                   - (problem.rho * t1 + (1 - problem.rho) * t2)) <= 1e-10
        assert np.array_equal(sched.alpha, problem.tariff.alpha)

    def test_monotone_descent_with_auto_step(self):
        # Prefix runs share every iterate with the full run (the solver
        # is deterministic), so capping max_iters exposes the whole
        # accepted-iterate trajectory through the public API.
        problem = toy_problem(rho=0.5)
        w = symmetric_bowl_net()
        full = solve(problem, w)
        js = [total_objective(initial_point(
            FeasibleSet.from_pack(problem.pack, problem.horizon)), problem, w)]
        for m in range(1, min(full.iterations, 12) + 1):
            part = solve(problem, w, SolveConfig(max_iters=m))
            js.append(total_objective(part.u, problem, w))
        for earlier, later in zip(js, js[1:]):
            assert later <= earlier + 1e-9

    def test_identical_runs_identical_schedules(self):
        problem = toy_problem(rho=0.5)
        w = symmetric_bowl_net()
        a = solve(problem, w, SolveConfig(seed=3))
        b = solve(problem, w, SolveConfig(seed=3))
        assert np.array_equal(a.u, b.u)
        assert a.to_json() == b.to_json()

    def test_max_iters_exhaustion_reports_not_converged(self):
        problem = toy_problem(rho=0.5)
        sched = solve(problem, symmetric_bowl_net(),
                      SolveConfig(max_iters=1),
                      start=np.full(4, 2.0))
        assert sched.converged is False
        assert sched.iterations == 1
        feas = FeasibleSet.from_pack(problem.pack, problem.horizon)
        assert feas.is_feasible(sched.u, 1e-8).ok

    def test_fixed_point_certificate(self):
        problem = toy_problem(rho=0.5)
        w = symmetric_bowl_net()
        cfg = SolveConfig()
        sched = solve(problem, w, cfg)
        assert sched.converged
        feas = FeasibleSet.from_pack(problem.pack, problem.horizon)
        from v2gopt.objectives import objective_gradient
        g = objective_gradient(sched.u, problem, w)
        residual = np.max(np.abs(
            feas.project(sched.u - sched.step_size * g) - sched.u))
        assert residual <= 10.0 * cfg.stop_tol

    def test_explicit_step_size_is_used(self):
        # Curvature here is about zeta * f''/C^2 ~ 1e4, so 1e-4 is a
        # stable explicit step.
        problem = toy_problem(rho=0.5)
        sched = solve(problem, symmetric_bowl_net(),
                      SolveConfig(step_size=1e-4))
        assert sched.step_size == 1e-4
        assert sched.converged

    def test_infeasible_start_is_projected(self):
        problem = toy_problem(rho=0.5)
        sched = solve(problem, symmetric_bowl_net(),
                      start=np.full(4, 100.0))
        feas = FeasibleSet.from_pack(problem.pack, problem.horizon)
        assert feas.is_feasible(sched.u, 1e-8).ok
        assert sched.converged

    def test_start_point_cannot_change_the_optimum(self):
        problem = toy_problem(rho=0.5)
        w = symmetric_bowl_net()
        cold = solve(problem, w)
        rng = np.random.default_rng(9)
        feas = FeasibleSet.from_pack(problem.pack, problem.horizon)
        for u_start in feas.sample_feasible(rng, 3):
            warm = solve(problem, w, start=u_start)
            assert warm.converged
            assert np.max(np.abs(warm.u - cold.u)) <= 1e-5


class TestScheduleSerialization:
    def make_schedule(self):
        problem = toy_problem(rho=0.5)
        return solve(problem, symmetric_bowl_net())

    def test_json_round_trip(self):
        sched = self.make_schedule()
        back = Schedule.from_json(sched.to_json())
        assert np.array_equal(back.u, sched.u)
        assert np.array_equal(back.energy_pu, sched.energy_pu)
        assert np.array_equal(back.alpha, sched.alpha)
        assert back.theta1_value == sched.theta1_value
        assert back.theta2_value == sched.theta2_value
        assert back.j_value == sched.j_value
        assert back.rho == sched.rho
        assert back.iterations == sched.iterations
        assert back.converged == sched.converged
        assert back.step_size == sched.step_size

    def test_csv_layout(self, tmp_path):
        sched = self.make_schedule()
        path = tmp_path / "schedule.csv"
        sched.to_csv(path)
        lines = path.read_text().strip().split("\n")
        assert lines[0] == ",".join(SCHEDULE_HEADER)
        assert len(lines) == 1 + len(sched.u)
        for t, line in enumerate(lines[1:]):
            cols = line.split(",")
            assert int(cols[0]) == t
            assert float(cols[1]) == sched.u[t]
            assert float(cols[2]) == sched.energy_pu[t]
            assert float(cols[3]) == sched.alpha[t]
