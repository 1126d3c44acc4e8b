"""Artifact writers: CSV, JSON and a compact binary field dump.

All writers are atomic (temp file in the destination directory, then
os.replace) and all numbers are formatted with repr, the shortest
round-trip decimal form, so identical inputs produce byte-identical
files.

Frozen column orders (the test surface for golden-file checks):
  time series        t, value
  weight fields      x[, y], t, psi, phi, chi
  solutions          x[, y], t, u
  sweeps             s, lambda, term_name, value, ratio
  noise studies      delta, seed, error
  reconstructions    x[, y], f_hat, f_true, abs_err

Binary dump layout (little-endian): magic b"FRADEU01"; int64 dim;
float64 extents x_lo, x_hi[, y_lo, y_hi], horizon; int64 counts
nx[, ny], nt; then the field values as row-major float64 with the time
axis last.
"""

from __future__ import annotations

import json
import os
import struct
import tempfile
from typing import Iterable, Sequence

import numpy as np

from .errors import ParameterError
from .grids import Domain, GridFunction, SpaceTimeGrid, TimeGrid, TimeSeries

_MAGIC = b"FRADEU01"


def format_number(v) -> str:
    """Shortest round-trip decimal of a float (ints stay integral)."""
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return repr(float(v))


def atomic_write_bytes(path: str, payload: bytes) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-frade-")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path: str, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))


def write_csv(path: str, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(format_number(v) if not isinstance(v, str) else v
                              for v in row))
    atomic_write_text(path, "\n".join(lines) + "\n")


def write_json(path: str, obj) -> None:
    atomic_write_text(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def write_timeseries_csv(path: str, series: TimeSeries) -> None:
    write_csv(path, ("t", "value"), series.rows())


def write_solution_csv(path: str, u: GridFunction) -> None:
    header = ("x", "t", "u") if u.grid.dim == 1 else ("x", "y", "t", "u")
    write_csv(path, header, u.rows())


def write_weights_csv(path: str, psi: GridFunction, phi: GridFunction,
                      chi: np.ndarray | None = None) -> None:
    grid = psi.grid
    if chi is None:
        chi = np.ones(grid.shape)
    header = (("x", "t", "psi", "phi", "chi") if grid.dim == 1
              else ("x", "y", "t", "psi", "phi", "chi"))

    def rows():
        for coords_psi, coords_phi, c in zip(psi.rows(), phi.rows(),
                                             np.ravel(chi, order="C")):
            yield (*coords_psi, coords_phi[-1], c)

    write_csv(path, header, rows())


def write_solution_binary(path: str, u: GridFunction) -> None:
    grid = u.grid
    head = [_MAGIC, struct.pack("<q", grid.dim)]
    extents = [grid.domain.x_lo, grid.domain.x_hi]
    counts = [grid.nx]
    if grid.dim == 2:
        extents += [grid.domain.y_lo, grid.domain.y_hi]
        counts.append(grid.ny)
    extents.append(grid.time.horizon)
    counts.append(grid.time.n)
    head.append(struct.pack(f"<{len(extents)}d", *extents))
    head.append(struct.pack(f"<{len(counts)}q", *counts))
    payload = b"".join(head) + np.ascontiguousarray(u.values, dtype="<f8").tobytes()
    atomic_write_bytes(path, payload)


def read_solution_binary(path: str, gamma: tuple[str, ...] = ("right",)) -> GridFunction:
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:8] != _MAGIC:
        raise ParameterError(f"{path} is not a field dump (bad magic)")
    off = 8
    (dim,) = struct.unpack_from("<q", raw, off)
    off += 8
    n_ext = 3 if dim == 1 else 5
    extents = struct.unpack_from(f"<{n_ext}d", raw, off)
    off += 8 * n_ext
    n_cnt = dim + 1
    counts = struct.unpack_from(f"<{n_cnt}q", raw, off)
    off += 8 * n_cnt
    if dim == 1:
        domain = Domain(extents[0], extents[1], gamma)
        grid = SpaceTimeGrid(domain, counts[0], TimeGrid(extents[2], counts[1]))
    else:
        domain = Domain(extents[0], extents[1], gamma, extents[2], extents[3])
        grid = SpaceTimeGrid(domain, counts[0], TimeGrid(extents[4], counts[2]),
                             ny=counts[1])
    values = np.frombuffer(raw, dtype="<f8", offset=off).reshape(grid.shape)
    return GridFunction(grid, values.copy())


def write_sweep_csv(path: str, sweep) -> None:
    rows = []
    for rep in sweep.reports:
        ratio = rep.ratio if rep.ratio is not None else float("nan")
        for name in (*rep.lhs_names, *rep.rhs_names, *rep.boundary_names):
            rows.append((rep.s, rep.lam, name, rep.terms[name].value, ratio))
    write_csv(path, ("s", "lambda", "term_name", "value", "ratio"), rows)


def write_sweep_summary_json(path: str, sweep, grid_meta: dict) -> None:
    write_json(path, {
        "c_hat": sweep.c_hat,
        "growth": sweep.growth,
        "s_values": list(sweep.s_values),
        "ratios": [r if r is not None else None for r in sweep.ratios],
        "grid": grid_meta,
    })


def write_noise_csv(path: str, rows: Iterable[tuple[float, int, float]]) -> None:
    write_csv(path, ("delta", "seed", "error"), rows)


def write_fit_json(path: str, fit) -> None:
    write_json(path, {
        "deltas": list(fit.deltas),
        "errors": list(fit.errors),
        "theta_hat": fit.theta_hat,
        "c_hat": fit.c_hat,
        "log_c_hat": fit.log_c_hat,
        "residual": fit.residual,
        "holder_consistent": fit.holder_consistent,
    })


def write_reconstruction_csv(path: str, recon, f_true: np.ndarray) -> None:
    grid = recon.grid
    f_true = np.asarray(f_true, dtype=float)
    rows = []
    if grid.dim == 1:
        header = ("x", "f_hat", "f_true", "abs_err")
        for ix, xv in enumerate(grid.x):
            if recon.mask[ix]:
                fh, ft = recon.values[ix], f_true[ix]
                rows.append((xv, fh, ft, abs(fh - ft)))
    else:
        header = ("x", "y", "f_hat", "f_true", "abs_err")
        for ix, xv in enumerate(grid.x):
            for iy, yv in enumerate(grid.y):
                if recon.mask[ix, iy]:
                    fh, ft = recon.values[ix, iy], f_true[ix, iy]
                    rows.append((xv, yv, fh, ft, abs(fh - ft)))
    write_csv(path, header, rows)
