import math

import numpy as np
import pytest

from frade.errors import (
    GridError,
    HypothesisViolationError,
    ParameterError,
)
from frade.geometry import build_d
from frade.grids import Domain, GridFunction, SpaceTimeGrid, TimeGrid, TimeSeries, sample
from frade.inverse import (
    CauchyData,
    TargetRegion,
    add_noise,
    assemble_flux_map,
    cauchy_schedule,
    fit_holder,
    lateral_cauchy_solve,
    reconstruct_source,
    relative_l2_error,
    target_error,
)
from frade.solver import FadeProblem, boundary_flux, solve_fade

DOM = Domain(0.0, 1.0, ("right",))


class TestContainers:
    def test_cauchy_data_shape_mismatch(self):
        with pytest.raises(GridError):
            CauchyData(face="right", g0=np.zeros(5), g1=np.zeros(6))

    def test_cauchy_data_coerces_float(self):
        d = CauchyData(face="right", g0=[0, 1, 2], g1=[0, 0, 0])
        assert d.g0.dtype == float and d.g0.shape == (3,)

    def test_target_region_validation(self):
        with pytest.raises(ParameterError):
            TargetRegion(omega0_level=0.5, window="late")
        with pytest.raises(ParameterError):
            TargetRegion(omega0_level=0.0)
        TargetRegion(omega0_level=0.5, window="interior", eps=0.1)


class TestReconstructSource:
    @staticmethod
    def setup_problem(nx=65, nt=257, horizon=0.5):
        grid = SpaceTimeGrid(DOM, nx, TimeGrid(horizon, nt))
        src = lambda x, t: t * np.sin(2.0 * np.pi * x)
        problem = FadeProblem(grid, 1.0, source=src,
                              frac_terms=((1.0, 0.75),))
        u = solve_fade(problem)
        R = sample(grid, lambda x, t: t + 0.0 * x)
        return grid, problem, u, R

    def test_zero_history_zero_source(self):
        grid, problem, _, R = self.setup_problem()
        zero = GridFunction(grid, np.zeros(grid.shape))
        rec = reconstruct_source(zero, R, problem, 0.5, 0.05)
        assert np.all(rec.values[rec.mask] == 0.0)
        assert np.all(np.isnan(rec.values[~rec.mask]))

    def test_mask_is_interior_level_set(self):
        grid, problem, u, R = self.setup_problem()
        eps = 0.05
        rec = reconstruct_source(u, R, problem, 0.5, eps)
        d = build_d(DOM)
        expected = grid.interior_space_mask() & (d.sample(grid) > 4.0 * eps)
        assert np.array_equal(rec.mask, expected)

    def test_scaling_linearity(self):
        grid, problem, u, R = self.setup_problem()
        rec1 = reconstruct_source(u, R, problem, 0.5, 0.05)
        rec3 = reconstruct_source(u.with_values(3.0 * u.values), R,
                                  problem, 0.5, 0.05)
        assert np.allclose(rec3.values[rec3.mask], 3.0 * rec1.values[rec1.mask],
                           rtol=1e-12)

    def test_small_modulation_rejected(self):
        grid, problem, u, _ = self.setup_problem()
        tiny = GridFunction(grid, np.full(grid.shape, 1e-12))
        with pytest.raises(HypothesisViolationError):
            reconstruct_source(u, tiny, problem, 0.5, 0.05)

    def test_early_time_rejected(self):
        grid, problem, u, R = self.setup_problem()
        with pytest.raises(GridError):
            reconstruct_source(u, R, problem, grid.time.nodes[1], 0.05)

    def test_parameter_validation(self):
        grid, problem, u, R = self.setup_problem(nx=17, nt=17)
        with pytest.raises(ParameterError):
            reconstruct_source(u, R, problem, 0.5, 0.0)
        with pytest.raises(ParameterError):
            reconstruct_source(u, R, problem, 0.5, 0.05, r0=0.0)

    def test_closed_loop_accuracy_and_refinement(self):
        # forward data from the same discretization: the identity is
        # near-exact and the defect shrinks under joint refinement
        errs = []
        for nx, nt in ((101, 513), (201, 1025)):
            grid, problem, u, R = self.setup_problem(nx, nt)
            rec = reconstruct_source(u, R, problem, 0.5, 0.05)
            errs.append(relative_l2_error(rec, np.sin(2.0 * np.pi * grid.x)))
        assert errs[0] < 1e-5
        assert errs[0] / errs[1] > 1.6

    def test_relative_error_needs_nonzero_reference(self):
        grid, problem, u, R = self.setup_problem(nx=33, nt=65)
        rec = reconstruct_source(u, R, problem, 0.5, 0.05)
        with pytest.raises(ParameterError):
            relative_l2_error(rec, np.zeros(grid.space_shape))


class TestCauchySchedule:
    def test_level_count_and_window(self):
        grid = SpaceTimeGrid(DOM, 17, TimeGrid(1.0, 17))
        d = build_d(DOM)
        n, m, eps = cauchy_schedule(d, grid, 0.5, 0.33)
        assert n == max(5, math.ceil(4.0 * 1.1 / 0.5) + 1) == 10
        assert m == pytest.approx(10.0 ** (1.0 / 1.34), rel=1e-12)
        assert eps == pytest.approx(1.0 / (2.0 * m), rel=1e-12)

    def test_floor_of_five_levels(self):
        grid = SpaceTimeGrid(DOM, 17, TimeGrid(1.0, 17))
        d = build_d(DOM)
        n, _, _ = cauchy_schedule(d, grid, 4.0, 0.25)
        assert n == 5


@pytest.fixture(scope="module")
def cauchy_fixture():
    grid = SpaceTimeGrid(DOM, 65, TimeGrid(1.0, 257))
    problem = FadeProblem(grid, 1.0, frac_terms=((1.0, 0.25),),
                          boundary=lambda x, t: t * (1.0 - x), source=1.0)
    truth = solve_fade(problem)
    fmap = assemble_flux_map(problem, "right")
    data = CauchyData(face="right", g0=truth.values[-1, :],
                      g1=boundary_flux(problem, truth, "right").values)
    target = TargetRegion(omega0_level=0.5, window="early")
    return grid, problem, truth, fmap, data, target


class TestLateralCauchy:
    def test_input_validation(self, cauchy_fixture):
        grid, problem, truth, fmap, data, target = cauchy_fixture
        with pytest.raises(ParameterError):
            lateral_cauchy_solve(data, problem, target, 0.0, flux_map=fmap)
        short = CauchyData(face="right", g0=np.zeros(5), g1=np.zeros(5))
        with pytest.raises(GridError):
            lateral_cauchy_solve(short, problem, target, 1e-4, flux_map=fmap)
        with pytest.raises(GridError):
            lateral_cauchy_solve(data, problem, target, 1e-4,
                                 flux_map=fmap[:, :-1])

    def test_flux_map_shape(self, cauchy_fixture):
        grid, _, _, fmap, _, _ = cauchy_fixture
        assert fmap.shape == (grid.time.n, grid.time.n - 1)

    def test_regularization_ladder(self, cauchy_fixture):
        grid, problem, truth, fmap, data, target = cauchy_fixture
        errs, misfits = [], []
        for reg in (1e-2, 1e-4, 1e-6):
            res = lateral_cauchy_solve(data, problem, target, reg,
                                       flux_map=fmap)
            assert res.trace_misfit == 0.0
            assert res.reg == reg
            errs.append(target_error(res, truth.values))
            misfits.append(res.flux_misfit)
        assert all(b < a for a, b in zip(errs, errs[1:]))
        assert all(b < a for a, b in zip(misfits, misfits[1:]))
        assert errs[-1] < 1e-4

    def test_schedule_reported(self, cauchy_fixture):
        grid, problem, truth, fmap, data, target = cauchy_fixture
        res = lateral_cauchy_solve(data, problem, target, 1e-4, flux_map=fmap)
        d = build_d(DOM)
        n, m, eps = cauchy_schedule(d, grid, target.omega0_level,
                                    problem.alpha1)
        assert res.n_levels == n
        assert res.m_value == pytest.approx(m)
        assert res.eps == pytest.approx(eps)
        t_nodes = grid.time.nodes
        d_vals = d.sample(grid)
        expected = ((d_vals > target.omega0_level)[:, None]
                    & (t_nodes < res.eps)[None, :])
        assert np.array_equal(res.target_mask, expected)

    def test_explicit_eps_interior_window(self, cauchy_fixture):
        grid, problem, truth, fmap, data, _ = cauchy_fixture
        target = TargetRegion(omega0_level=0.5, window="interior", eps=0.25)
        res = lateral_cauchy_solve(data, problem, target, 1e-4, flux_map=fmap)
        assert res.eps == 0.25
        t_nodes = grid.time.nodes
        inside = (t_nodes > 0.25) & (t_nodes < 0.75)
        # x = 0.25 sits below the level threshold d > 0.5
        assert not np.any(res.target_mask[16, :])
        assert np.array_equal(np.any(res.target_mask, axis=0), inside)

    def test_noise_degrades_monotonically(self, cauchy_fixture):
        grid, problem, truth, fmap, data, target = cauchy_fixture
        means = []
        for delta in (1e-3, 1e-2, 1e-1):
            errs = []
            for seed in range(5):
                noisy = add_noise(data, delta, (seed, 0))
                res = lateral_cauchy_solve(noisy, problem, target, 1e-4,
                                           flux_map=fmap)
                errs.append(target_error(res, truth.values))
            means.append(float(np.mean(errs)))
        assert all(b >= a for a, b in zip(means, means[1:]))


class TestAddNoise:
    def test_zero_level_is_identity(self):
        arr = np.linspace(0.0, 1.0, 7)
        assert add_noise(arr, 0.0, 3) is arr

    def test_negative_level_rejected(self):
        with pytest.raises(ParameterError):
            add_noise(np.ones(3), -0.1, 0)

    def test_reproducible_and_bounded(self):
        arr = np.sin(np.linspace(0.0, 3.0, 101))
        n1 = add_noise(arr, 0.01, 42)
        n2 = add_noise(arr, 0.01, 42)
        n3 = add_noise(arr, 0.01, 43)
        assert np.array_equal(n1, n2)
        assert not np.array_equal(n1, n3)
        assert np.max(np.abs(n1 - arr)) <= 0.01 * np.max(np.abs(arr))

    def test_tuple_seed(self):
        arr = np.ones(9)
        a = add_noise(arr, 0.1, (3, 1))
        b = add_noise(arr, 0.1, (3, 2))
        assert not np.array_equal(a, b)

    def test_cauchy_components_use_distinct_streams(self):
        data = CauchyData(face="right", g0=np.ones(33), g1=np.ones(33))
        noisy = add_noise(data, 0.1, 7)
        assert isinstance(noisy, CauchyData)
        assert not np.array_equal(noisy.g0, noisy.g1)
        assert not np.array_equal(noisy.g0, data.g0)

    def test_wrapped_types(self):
        tg = TimeGrid(1.0, 9)
        ts = TimeSeries(tg, np.ones(9))
        out = add_noise(ts, 0.05, 1)
        assert isinstance(out, TimeSeries)
        assert np.max(np.abs(out.values - 1.0)) <= 0.05
        grid = SpaceTimeGrid(DOM, 5, tg)
        gf = GridFunction(grid, np.ones(grid.shape))
        out2 = add_noise(gf, 0.05, 1)
        assert isinstance(out2, GridFunction)
        assert out2.values.shape == grid.shape


class TestFitHolder:
    def test_exact_square_root_law(self):
        deltas = np.array([1e-4, 1e-3, 1e-2, 1e-1])
        fit = fit_holder(deltas, np.sqrt(deltas))
        assert fit.theta_hat == pytest.approx(0.5, rel=1e-12)
        assert fit.c_hat == pytest.approx(1.0, rel=1e-12)
        assert fit.residual < 1e-14
        assert fit.holder_consistent

    def test_exact_linear_law_with_constant(self):
        deltas = np.array([1e-4, 1e-3, 1e-2, 1e-1])
        fit = fit_holder(deltas, 3.0 * deltas)
        assert fit.theta_hat == pytest.approx(1.0, rel=1e-12)
        assert fit.c_hat == pytest.approx(3.0, rel=1e-12)
        assert fit.log_c_hat == pytest.approx(math.log(3.0), rel=1e-12)

    def test_consistency_window(self):
        deltas = np.array([1e-4, 1e-3, 1e-2, 1e-1])
        assert fit_holder(deltas, deltas**1.04).holder_consistent
        assert not fit_holder(deltas, deltas**1.2).holder_consistent
        assert not fit_holder(deltas, deltas**-0.5).holder_consistent

    def test_validation(self):
        with pytest.raises(ParameterError):
            fit_holder([1e-3, 1e-2, 1e-1], [1, 1, 1])
        with pytest.raises(ParameterError):
            fit_holder([1e-3, 1e-2, 1e-2, 1e-1], [1, 1, 1, 1])
        with pytest.raises(ParameterError):
            fit_holder([1e-3, 1e-2, 1e-1, 1.0], [1, 1, 0, 1])
        with pytest.raises(ParameterError):
            fit_holder([0.0, 1e-2, 1e-1, 1.0], [1, 1, 1, 1])
        with pytest.raises(ParameterError):
            fit_holder(np.ones((2, 2)), np.ones((2, 2)))
