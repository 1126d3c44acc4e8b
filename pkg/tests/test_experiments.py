import math

import numpy as np
import pytest

from frade.errors import ConfigError
from frade.experiments import (
    caputo_monomial,
    fitted_order,
    function_family,
    rel_l2_q,
)
from frade.frac_calc import gamma_fn
from frade.grids import Domain, GridFunction, SpaceTimeGrid, TimeGrid


class TestFunctionFamily:
    def test_twenty_members(self, family):
        assert len(family) == 20

    def test_unique_names(self, family):
        names = [name for name, _ in family]
        assert len(set(names)) == 20

    def test_all_vanish_at_zero(self, family):
        for name, fn in family:
            assert abs(float(np.asarray(fn(np.array([0.0])))[0])) < 1e-15, name

    def test_vectorized(self, family):
        t = np.linspace(0.0, 1.0, 33)
        for _, fn in family:
            assert np.shape(fn(t)) == t.shape


class TestCaputoMonomial:
    def test_matches_gamma_formula(self):
        t = np.linspace(0.0, 1.0, 11)
        for power in (1.0, 2.0, 3.5):
            for alpha in (0.25, 0.5, 0.75):
                got = caputo_monomial(power, alpha, t)
                coeff = gamma_fn(power + 1.0) / gamma_fn(power + 1.0 - alpha)
                assert np.allclose(got, coeff * t ** (power - alpha))

    def test_linear_case(self):
        t = np.array([0.0, 0.25, 1.0])
        got = caputo_monomial(1.0, 0.5, t)
        assert np.allclose(got, t**0.5 / gamma_fn(1.5))


class TestFittedOrder:
    def test_recovers_synthetic_slope(self):
        ns = [65, 129, 257, 513]
        hs = 1.0 / (np.asarray(ns) - 1.0)
        for p in (1.0, 1.75, 2.0):
            errs = 0.37 * hs**p
            assert fitted_order(ns, errs) == pytest.approx(p, rel=1e-10)

    def test_exact_scheme_returns_none(self):
        assert fitted_order([65, 129, 257], [1e-15, 1e-14, 1e-13]) is None

    def test_partial_floor_uses_remaining_points(self):
        ns = [65, 129, 257, 513]
        hs = 1.0 / (np.asarray(ns) - 1.0)
        errs = 1.0 * hs**2
        errs[-1] = 1e-15
        assert fitted_order(ns, errs) == pytest.approx(2.0, rel=1e-8)

    def test_single_point_above_floor(self):
        assert fitted_order([65, 129], [1e-3, 1e-15]) is None


class TestRelL2Q:
    def test_known_ratio(self):
        grid = SpaceTimeGrid(Domain(0.0, 1.0, ("right",)), 33, TimeGrid(1.0, 33))
        ref = GridFunction(grid, np.ones(grid.shape))
        u = GridFunction(grid, 1.5 * np.ones(grid.shape))
        assert rel_l2_q(u, ref) == pytest.approx(0.5, rel=1e-12)

    def test_zero_reference_rejected(self):
        grid = SpaceTimeGrid(Domain(0.0, 1.0, ("right",)), 9, TimeGrid(1.0, 9))
        zero = GridFunction(grid, np.zeros(grid.shape))
        with pytest.raises(ConfigError):
            rel_l2_q(zero, zero)
