import math

import numpy as np
import pytest

from frade.errors import FamilyMismatchError, ParameterError
from frade.geometry import (
    BetaRule,
    WeightFamily,
    WeightParams,
    build_d,
    choose_beta,
    cutoff,
    dpsi_dt,
    level_values,
    phi1,
    phi2,
    psi1,
    psi2,
    regular_params,
    smoothstep,
    smoothstep_d1,
    smoothstep_d2,
    time_cutoff_eta,
    weight_field,
)
from frade.grids import Domain, SpaceTimeGrid, TimeGrid


def sub_params(lam=1.0, s=1.0, beta=1.0, horizon=1.0, alpha1=0.25):
    return WeightParams(WeightFamily.SUB, lam, s, beta, horizon, alpha1=alpha1)


class TestBuildD:
    def test_right_face_is_identity(self):
        d = build_d(Domain(0.0, 1.0, ("right",)))
        x = np.linspace(0.0, 1.0, 11)
        assert np.allclose(d(x), x)
        assert np.allclose(d.gradient(x)[0], 1.0)
        assert d(0.0) == 0.0  # vanishes on the unobserved face

    def test_left_face_mirrors(self):
        d = build_d(Domain(0.0, 1.0, ("left",)))
        assert d(1.0) == pytest.approx(0.0, abs=1e-15)
        assert d(0.5) == pytest.approx(0.5)
        assert d(0.0) == pytest.approx(1.0)

    def test_sup_norm_covers_dilated_box(self):
        # the enclosing box stretches the unit interval by 1.2 about its center
        d = build_d(Domain(0.0, 1.0, ("right",)))
        assert d.sup_norm() == pytest.approx(1.1, abs=1e-12)

    def test_full_boundary_paraboloid_2d(self):
        dom = Domain(0.0, 1.0, ("left", "right", "bottom", "top"),
                     y_lo=0.0, y_hi=1.0)
        d = build_d(dom, x0=(-1.0, 0.5))
        xs = np.linspace(0.0, 1.0, 21)
        xm, ym = np.meshgrid(xs, xs, indexing="ij")
        gnorm = d.gradient_norm(xm, ym)
        assert float(np.min(gnorm)) == pytest.approx(2.0, abs=1e-12)
        assert np.all(d(xm[1:-1, 1:-1], ym[1:-1, 1:-1]) > 0.0)

    def test_interior_center_rejected(self):
        dom = Domain(0.0, 1.0, ("left", "right", "bottom", "top"),
                     y_lo=0.0, y_hi=1.0)
        with pytest.raises(ParameterError):
            build_d(dom, x0=(0.5, 0.5))


class TestWeightParams:
    def test_validation(self):
        with pytest.raises(ParameterError):
            sub_params(lam=0.5)
        with pytest.raises(ParameterError):
            sub_params(s=0.0)
        with pytest.raises(ParameterError):
            sub_params(beta=0.0)
        with pytest.raises(FamilyMismatchError):
            sub_params(alpha1=0.5)
        with pytest.raises(FamilyMismatchError):
            WeightParams(WeightFamily.REGULAR, 1.0, 1.0, 1.0, 1.0, t0=0.5, c0=0.3)

    def test_regular_params_c0(self):
        p = regular_params(1.0, 1.0, 2.0, 1.0, 0.3)
        assert p.c0 == pytest.approx(max(2.0 * 0.09, 2.0 * 0.49), abs=1e-12)

    def test_with_s(self):
        p = sub_params().with_s(16.0)
        assert p.s == 16.0 and p.lam == 1.0


class TestPhases:
    def test_phi1_at_zero_time(self):
        p = sub_params(lam=3.0, beta=2.0)
        assert phi1(0.4, 0.0, p) == pytest.approx(math.exp(3.0 * 0.4))

    def test_phi1_example_value(self):
        p = sub_params(lam=2.0, beta=1.0, alpha1=0.25)
        # psi1 = 0.5 - 1 * 1^{1.5} = -0.5, phi1 = e^{-1}
        assert phi1(0.5, 1.0, p) == pytest.approx(math.exp(-1.0), rel=1e-12)

    def test_phi1_strictly_decreasing_in_time(self):
        p = sub_params()
        t = np.linspace(0.0, 1.0, 50)
        vals = phi1(0.7, t, p)
        assert np.all(np.diff(vals) < 0.0)

    def test_phi2_example_values(self):
        p = regular_params(1.0, 1.0, 2.0, 1.0, 0.5)
        assert p.c0 == pytest.approx(0.5)
        # psi2(0.3, 0.75) = 0.3 - 2 * 0.0625 + 0.5 = 0.675
        assert phi2(0.3, 0.75, p) == pytest.approx(math.exp(0.675), rel=1e-12)
        # at d = 0, t = 0 the slack beta*t0^2 = c0 makes the phase vanish
        assert phi2(0.0, 0.0, p) == pytest.approx(1.0, rel=1e-14)

    def test_phi2_peaks_at_t0_and_stays_above_one(self):
        p = regular_params(1.0, 1.0, 2.0, 1.0, 0.4)
        t = np.linspace(0.0, 1.0, 81)
        vals = phi2(0.25, t, p)
        assert np.argmax(vals) == np.argmin(np.abs(t - 0.4))
        assert np.all(vals[(t >= 0) & (t <= 1)] >= 1.0 - 1e-14)

    def test_family_mismatch(self):
        with pytest.raises(FamilyMismatchError):
            psi2(0.1, 0.1, sub_params())
        with pytest.raises(FamilyMismatchError):
            psi1(0.1, 0.1, regular_params(1.0, 1.0, 1.0, 1.0, 0.5))

    def test_dpsi_dt_formula(self):
        p = sub_params(beta=2.0, alpha1=0.25)
        t = np.array([0.2, 0.5, 0.9])
        assert np.allclose(dpsi_dt(0.3, t, p), -2.0 * 1.5 * t**0.5, rtol=1e-13)
        pr = regular_params(1.0, 1.0, 2.0, 1.0, 0.5)
        assert np.allclose(dpsi_dt(0.3, t, pr), -4.0 * (t - 0.5), rtol=1e-13)


class TestChooseBeta:
    def test_sub_cauchy_midpoint(self):
        beta = choose_beta(BetaRule.SUB_CAUCHY, 1.0, 1.0, alpha1=0.25)
        lo, hi = 1.0, 1.0 / 0.5**1.5
        assert beta == pytest.approx(0.5 * (lo + hi), rel=1e-14)
        assert beta == pytest.approx(1.914213562373095, abs=1e-12)
        # admissibility window is strict on both sides
        assert lo < beta < hi

    def test_eps_rule(self):
        beta = choose_beta(BetaRule.EPS, 1.0, 1.0, eps=0.5)
        assert beta == pytest.approx(8.0 / 3.0, rel=1e-14)
        assert beta * 0.5**2 == pytest.approx(2.0 / 3.0, rel=1e-14)

    def test_isp_rule(self):
        beta = choose_beta(BetaRule.ISP, 1.0, 1.0, t0=0.5)
        assert beta == pytest.approx(4.0, rel=1e-14)

    def test_missing_auxiliary_parameters(self):
        with pytest.raises(ParameterError):
            choose_beta(BetaRule.SUB_CAUCHY, 1.0, 1.0)
        with pytest.raises(ParameterError):
            choose_beta(BetaRule.EPS, 1.0, 1.0)
        with pytest.raises(ParameterError):
            choose_beta(BetaRule.ISP, 1.0, 1.0)

    def test_sub_cauchy_needs_subdiffusive_order(self):
        with pytest.raises(ParameterError):
            choose_beta(BetaRule.SUB_CAUCHY, 1.0, 1.0, alpha1=0.6)

    def test_isp_t0_at_either_end(self):
        assert choose_beta(BetaRule.ISP, 1.0, 1.0, t0=0.2) == pytest.approx(25.0)
        assert choose_beta(BetaRule.ISP, 1.0, 1.0, t0=0.8) == pytest.approx(25.0)

    def test_isp_phase_bounded_by_c0_at_time_ends(self):
        # beta = ||d|| / delta^2 forces psi2(x, 0) <= c0 and psi2(x, T) <= c0
        d_norm, horizon, t0 = 1.1, 1.0, 0.4
        beta = choose_beta(BetaRule.ISP, d_norm, horizon, t0=t0)
        p = regular_params(1.0, 1.0, beta, horizon, t0)
        d_vals = np.linspace(0.0, d_norm, 31)
        assert np.all(psi2(d_vals, 0.0, p) <= p.c0 + 1e-12)
        assert np.all(psi2(d_vals, horizon, p) <= p.c0 + 1e-12)


class TestLevelValues:
    def test_ladder_example(self):
        # lam=1, ||d||=1, beta (T/2)^{2-2a1} = 0.5, N=10: mu_k = e^{(k-0.5)/10}
        p = sub_params(beta=math.sqrt(2.0), alpha1=0.25)
        spec = level_values(p, 1.0, n_levels=4, n_total=10)
        for k in (1, 2, 3, 4):
            assert spec.mu[k - 1] == pytest.approx(
                math.exp((k - 0.5) / 10.0), rel=1e-12
            )

    def test_small_ladder_rejected(self):
        p = sub_params()
        with pytest.raises(ParameterError):
            level_values(p, 1.0, n_levels=4, n_total=4)

    def test_levels_increase_and_regions_nest(self):
        p = sub_params(beta=math.sqrt(2.0), alpha1=0.25)
        spec = level_values(p, 1.0, n_levels=4, n_total=10)
        assert all(a < b for a, b in zip(spec.mu, spec.mu[1:]))
        d_vals = np.linspace(0.0, 1.0, 41)[:, None]
        t = np.linspace(0.0, 1.0, 33)[None, :]
        vals = phi1(d_vals, t, p)
        masks = [spec.region_mask(vals, k) for k in (1, 2, 3)]
        assert np.all(masks[2] <= masks[1]) and np.all(masks[1] <= masks[0])

    def test_membership_is_strict(self):
        p = sub_params(beta=math.sqrt(2.0), alpha1=0.25)
        spec = level_values(p, 1.0, n_levels=2, n_total=10)
        exactly_mu = np.array([spec.mu[0]])
        assert not spec.region_mask(exactly_mu, 1)[0]
        assert spec.region_mask(exactly_mu * (1 + 1e-12), 1)[0]

    def test_regular_needs_eps(self):
        p = regular_params(1.0, 1.0, 2.0, 1.0, 0.5)
        with pytest.raises(ParameterError):
            level_values(p, 1.0, n_levels=2, n_total=10)
        spec = level_values(p, 1.0, n_levels=2, n_total=10, eps=0.1)
        assert spec.mu[0] > 0.0

    def test_eps_window_inside_double_level(self):
        # points with d > 3 eps and |t - t0| < sqrt(eps/beta) stay inside
        # the region where d - beta (t-t0)^2 > 2 eps
        eps, d_norm, horizon, t0 = 0.1, 1.1, 1.0, 0.5
        beta = choose_beta(BetaRule.EPS, d_norm, horizon, eps=eps)
        delta_eps = math.sqrt(eps / beta)
        d_vals = np.linspace(0.0, d_norm, 101)[:, None]
        t = np.linspace(0.0, horizon, 201)[None, :]
        p = regular_params(1.0, 1.0, beta, horizon, t0)
        inner = (d_vals > 3.0 * eps) & (np.abs(t - t0) < delta_eps)
        q2 = (psi2(d_vals, t, p) - p.c0) > 2.0 * eps
        assert np.all(q2[inner])


class TestSmoothstepCutoff:
    def test_smoothstep_values(self):
        assert smoothstep(0.0) == 0.0
        assert smoothstep(1.0) == 1.0
        assert smoothstep(0.5) == pytest.approx(0.5, abs=1e-15)
        assert smoothstep(-2.0) == 0.0 and smoothstep(3.0) == 1.0
        r = np.linspace(0, 1, 101)
        assert np.all(np.diff(smoothstep(r)) >= 0.0)
        assert smoothstep_d1(0.0) == 0.0 and smoothstep_d1(1.0) == 0.0
        assert smoothstep_d2(0.0) == 0.0 and smoothstep_d2(1.0) == 0.0

    def test_cutoff_extremes(self):
        x = np.linspace(0.0, 1.0, 33)
        phi_vals = 2.0 + x
        hi = cutoff(phi_vals, 0.5, 1.0, (x[1] - x[0],))
        assert np.all(hi.chi == 1.0)
        assert np.all(hi.derivative(0) == 0.0)
        lo = cutoff(phi_vals, 5.0, 9.0, (x[1] - x[0],))
        assert np.all(lo.chi == 0.0)
        assert np.all(lo.derivative(0) == 0.0)

    def test_cutoff_ordering_rejected(self):
        with pytest.raises(ParameterError):
            cutoff(np.ones(8), 1.0, 1.0, (0.1,))
        with pytest.raises(ParameterError):
            cutoff(np.ones(8), 2.0, 1.0, (0.1,))

    def test_second_difference_bound(self):
        # |d2 chi| <= max|S''| (max|grad phi| / dmu)^2
        #           + max|S'| max|d2 phi| / dmu, within 10% when resolved
        r = np.linspace(0.0, 1.0, 20001)
        s1_max = float(np.max(np.abs(smoothstep_d1(r))))
        s2_max = float(np.max(np.abs(smoothstep_d2(r))))
        for n in (2049, 4097):
            x = np.linspace(0.0, 1.0, n)
            h = x[1] - x[0]
            phi_vals = np.exp(2.0 * x)
            mu_lo, mu_hi = math.exp(0.8), math.exp(1.6)
            field = cutoff(phi_vals, mu_lo, mu_hi, (h,))
            d2chi = np.gradient(np.gradient(field.chi, h, edge_order=2),
                                h, edge_order=2)
            span = mu_hi - mu_lo
            grad_max = float(np.max(np.abs(2.0 * phi_vals)))
            hess_max = float(np.max(np.abs(4.0 * phi_vals)))
            bound = s2_max * (grad_max / span) ** 2 + s1_max * hess_max / span
            assert float(np.max(np.abs(d2chi))) <= 1.1 * bound

    def test_chain_rule_matches_discrete(self):
        x = np.linspace(0.0, 1.0, 4097)
        h = x[1] - x[0]
        phi_vals = np.exp(2.0 * x)
        field = cutoff(phi_vals, math.exp(0.8), math.exp(1.6), (h,))
        analytic = field.derivative(0)
        discrete = np.gradient(field.chi, h, edge_order=2)
        assert np.max(np.abs(analytic - discrete)) <= 5e-3 * np.max(np.abs(analytic))


class TestTimeCutoffEta:
    def test_plateau_and_shoulders(self):
        t0, delta, horizon = 0.5, 0.2, 1.0
        t = np.array([0.0, t0 - delta, t0 - 0.75 * delta, t0 - 0.5 * delta,
                      t0, t0 + 0.5 * delta, t0 + 0.75 * delta, t0 + delta, 1.0])
        eta = time_cutoff_eta(t, t0, delta, horizon)
        assert eta[0] == 0.0 and eta[-1] == 0.0
        assert eta[1] == 0.0 and eta[-2] == 0.0
        assert eta[2] == pytest.approx(0.5, abs=1e-14)
        assert eta[3] == pytest.approx(1.0, abs=1e-12)
        assert eta[4] == 1.0
        assert eta[5] == pytest.approx(1.0, abs=1e-12)
        assert eta[6] == pytest.approx(0.5, abs=1e-14)

    def test_delta_too_large(self):
        with pytest.raises(ParameterError):
            time_cutoff_eta(np.linspace(0, 1, 5), 0.3, 0.31, 1.0)
        with pytest.raises(ParameterError):
            time_cutoff_eta(np.linspace(0, 1, 5), 0.5, 0.0, 1.0)


class TestWeightField:
    def test_sampled_weight_matches_pointwise(self):
        dom = Domain(0.0, 1.0, ("right",))
        grid = SpaceTimeGrid(dom, 17, TimeGrid(1.0, 33))
        d = build_d(dom)
        p = sub_params()
        ps, ph = weight_field(grid, d, p)
        assert ps.values.shape == grid.shape
        assert np.allclose(ph.values, np.exp(p.lam * ps.values), rtol=1e-14)
        x3, t3 = grid.x[3], grid.time.nodes[5]
        assert ps.values[3, 5] == pytest.approx(float(psi1(d(x3), t3, p)), rel=1e-14)
