import glob
import math
import os

import numpy as np
import pytest

from frade.dataio import (
    atomic_write_text,
    format_number,
    read_solution_binary,
    write_csv,
    write_fit_json,
    write_json,
    write_noise_csv,
    write_solution_binary,
    write_sweep_csv,
)
from frade.errors import ParameterError
from frade.grids import Domain, GridFunction, SpaceTimeGrid, TimeGrid
from frade.inverse import fit_holder

DOM = Domain(0.0, 1.0, ("right",))


class TestFormatNumber:
    def test_floats_round_trip(self):
        for v in (0.1, 1.0 / 3.0, 1e-17, math.pi, 1e308, -0.0):
            assert float(format_number(v)) == v

    def test_shortest_form(self):
        assert format_number(0.5) == "0.5"
        assert format_number(1.0) == "1.0"

    def test_integers_stay_integral(self):
        assert format_number(7) == "7"
        assert format_number(np.int64(-3)) == "-3"


class TestAtomicWrite:
    def test_no_temp_files_left(self, tmp_path):
        target = tmp_path / "out.txt"
        atomic_write_text(str(target), "hello\n")
        assert target.read_text() == "hello\n"
        leftovers = glob.glob(str(tmp_path / ".tmp-*"))
        assert leftovers == []

    def test_overwrite_replaces_content(self, tmp_path):
        target = tmp_path / "out.txt"
        atomic_write_text(str(target), "first\n")
        atomic_write_text(str(target), "second\n")
        assert target.read_text() == "second\n"

    def test_creates_directories(self, tmp_path):
        target = tmp_path / "a" / "b" / "out.txt"
        atomic_write_text(str(target), "x")
        assert target.read_text() == "x"


class TestCsvJson:
    def test_csv_layout(self, tmp_path):
        path = tmp_path / "t.csv"
        write_csv(str(path), ("a", "b"), [(1, 0.5), (2, 0.25)])
        assert path.read_text() == "a,b\n1,0.5\n2,0.25\n"

    def test_csv_passes_strings_through(self, tmp_path):
        path = tmp_path / "t.csv"
        write_csv(str(path), ("name", "v"), [("lhs_u", 2.0)])
        assert "lhs_u,2.0" in path.read_text()

    def test_json_sorted_and_deterministic(self, tmp_path):
        p1, p2 = tmp_path / "a.json", tmp_path / "b.json"
        write_json(str(p1), {"b": 1, "a": [1.5, None]})
        write_json(str(p2), {"a": [1.5, None], "b": 1})
        b1, b2 = p1.read_bytes(), p2.read_bytes()
        assert b1 == b2
        assert b1.index(b'"a"') < b1.index(b'"b"')

    def test_noise_csv_header(self, tmp_path):
        path = tmp_path / "noise.csv"
        write_noise_csv(str(path), [(1e-3, 0, 0.01)])
        lines = path.read_text().splitlines()
        assert lines[0] == "delta,seed,error"
        assert lines[1] == "0.001,0,0.01"

    def test_fit_json_fields(self, tmp_path):
        fit = fit_holder([1e-3, 1e-2, 1e-1, 1.0],
                         [2e-3, 2e-2, 2e-1, 2.0])
        path = tmp_path / "fit.json"
        write_fit_json(str(path), fit)
        text = path.read_text()
        for key in ("theta_hat", "c_hat", "log_c_hat", "residual",
                    "holder_consistent", "deltas", "errors"):
            assert f'"{key}"' in text


class TestSweepCsv:
    def test_header_and_nan_ratio(self, tmp_path):
        class Rep:
            def __init__(self, s, ratio):
                self.s = s
                self.lam = 1.0
                self.lhs_names = ("lhs_u",)
                self.rhs_names = ("rhs_source",)
                self.boundary_names = ("rhs_bdy",)
                from frade.carleman import TermValue
                self.terms = {
                    "lhs_u": TermValue(2.0, math.log(2.0)),
                    "rhs_source": TermValue(1.0, 0.0),
                    "rhs_bdy": TermValue(0.0, -math.inf),
                }
                self.ratio = ratio

        class Sweep:
            reports = (Rep(2.0, 2.0), Rep(4.0, None))

        path = tmp_path / "sweep.csv"
        write_sweep_csv(str(path), Sweep())
        lines = path.read_text().splitlines()
        assert lines[0] == "s,lambda,term_name,value,ratio"
        assert lines[1] == "2.0,1.0,lhs_u,2.0,2.0"
        # undefined ratios are written as nan
        assert lines[4].startswith("4.0,1.0,lhs_u,")
        assert lines[4].endswith(",nan")
        assert len(lines) == 7


class TestSolutionBinary:
    def test_round_trip_1d(self, tmp_path):
        grid = SpaceTimeGrid(DOM, 9, TimeGrid(0.5, 17))
        rng = np.random.default_rng(3)
        u = GridFunction(grid, rng.standard_normal(grid.shape))
        path = tmp_path / "u.bin"
        write_solution_binary(str(path), u)
        back = read_solution_binary(str(path))
        assert back.grid.shape == grid.shape
        assert back.grid.domain.x_lo == 0.0 and back.grid.domain.x_hi == 1.0
        assert back.grid.time.horizon == 0.5
        assert np.array_equal(back.values, u.values)

    def test_round_trip_2d(self, tmp_path):
        dom = Domain(0.0, 2.0, ("left",), y_lo=-1.0, y_hi=1.0)
        grid = SpaceTimeGrid(dom, 5, TimeGrid(1.0, 7), ny=6)
        u = GridFunction(grid, np.arange(5 * 6 * 7, dtype=float).reshape(5, 6, 7))
        path = tmp_path / "u2.bin"
        write_solution_binary(str(path), u)
        back = read_solution_binary(str(path), gamma=("left",))
        assert back.grid.shape == (5, 6, 7)
        assert back.grid.domain.y_lo == -1.0
        assert np.array_equal(back.values, u.values)

    def test_bad_magic_rejected(self, tmp_path):
        path = tmp_path / "junk.bin"
        path.write_bytes(b"NOTMAGIC" + b"\x00" * 64)
        with pytest.raises(ParameterError):
            read_solution_binary(str(path))

    def test_byte_identical_rewrites(self, tmp_path):
        grid = SpaceTimeGrid(DOM, 9, TimeGrid(0.5, 17))
        u = GridFunction(grid, np.full(grid.shape, 0.1))
        p1, p2 = tmp_path / "a.bin", tmp_path / "b.bin"
        write_solution_binary(str(p1), u)
        write_solution_binary(str(p2), u)
        assert p1.read_bytes() == p2.read_bytes()
