import math

import numpy as np
import pytest

from frade.errors import ConfigError
from frade.expressions import compile_expression


class TestCompile:
    def test_polynomial_and_trig(self):
        f = compile_expression("t*sin(pi*x)", 1)
        x = np.linspace(0.0, 1.0, 5)
        assert np.allclose(f(x, 0.5), 0.5 * np.sin(np.pi * x))

    def test_constants(self):
        f = compile_expression("pi + e", 1, time_dependent=False)
        assert float(f(np.zeros(3))) == pytest.approx(math.pi + math.e, rel=1e-15)

    def test_pos_builds_compact_bump(self):
        f = compile_expression("pos((x-0.2)*(0.8-x))**3", 1, time_dependent=False)
        x = np.linspace(0.0, 1.0, 101)
        vals = f(x)
        assert np.all(vals[(x < 0.2) | (x > 0.8)] == 0.0)
        assert np.all(vals[(x > 0.25) & (x < 0.75)] > 0.0)

    def test_two_dimensional(self):
        f = compile_expression("x*y + t", 2)
        xm, ym = np.meshgrid([0.0, 1.0], [2.0, 3.0], indexing="ij")
        assert np.allclose(f(xm, ym, 0.25), xm * ym + 0.25)

    def test_broadcasting(self):
        f = compile_expression("x + t", 1)
        out = f(np.linspace(0, 1, 4)[:, None], np.linspace(0, 1, 3)[None, :])
        assert out.shape == (4, 3)

    def test_source_attribute(self):
        assert compile_expression("x", 1, time_dependent=False).source == "x"


class TestRejection:
    def test_unknown_name(self):
        with pytest.raises(ConfigError):
            compile_expression("x + z", 1)

    def test_time_name_needs_flag(self):
        with pytest.raises(ConfigError):
            compile_expression("t", 1, time_dependent=False)

    def test_y_needs_dim_two(self):
        with pytest.raises(ConfigError):
            compile_expression("y", 1)

    def test_imports_blocked(self):
        with pytest.raises(ConfigError):
            compile_expression("__import__('os')", 1)

    def test_attribute_access_blocked(self):
        with pytest.raises(ConfigError):
            compile_expression("x.__class__", 1)

    def test_unknown_function(self):
        with pytest.raises(ConfigError):
            compile_expression("open(x)", 1)

    def test_keyword_arguments_blocked(self):
        with pytest.raises(ConfigError):
            compile_expression("sin(x, out=x)", 1)

    def test_syntax_error(self):
        with pytest.raises(ConfigError):
            compile_expression("x +", 1)

    def test_string_constant(self):
        with pytest.raises(ConfigError):
            compile_expression("'abc'", 1)

    def test_comparison_blocked(self):
        with pytest.raises(ConfigError):
            compile_expression("x < 1", 1)

    def test_bad_dim(self):
        with pytest.raises(ConfigError):
            compile_expression("x", 3)

    def test_wrong_arity_at_call_time(self):
        f = compile_expression("x + t", 1)
        with pytest.raises(ConfigError):
            f(np.zeros(3))
