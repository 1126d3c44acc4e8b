"""Forward solver and discrete operator for the time-fractional
advection-diffusion equation

    Lu = du/dt + sum_j q_j(x,t) d^{a_j}u/dt^{a_j}
         - sum_{i,l} a_il(x,t) d_i d_l u + b(x,t).grad u + c(x,t) u = F,

with 0 < a_m < ... < a_1 < 1 (Caputo derivatives) and Dirichlet data on
the whole lateral boundary.  Time stepping is implicit backward Euler
with the L1 fractional history moved to the right-hand side; space is
second-order central differences (tridiagonal in 1-D, sparse 9-point in
2-D once the mixed a_12 term is present).  The history term is
recomputed per step, O(n_t^2) in total, which is the documented desk
trade-off.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.linalg import solve_banded

from .errors import GridError, NumericalFailureError, ParameterError
from .frac_calc import caputo_l1_array, l1_scale, l1_weights
from .grids import GridFunction, SpaceTimeGrid, TimeSeries, as_order_value


def _coef(grid: SpaceTimeGrid, f) -> np.ndarray:
    """Normalize scalar / callable / array coefficients to grid.shape."""
    if callable(f):
        vals = np.asarray(f(*grid.meshes()), dtype=float)
    else:
        vals = np.asarray(f, dtype=float)
    out = np.broadcast_to(vals, grid.shape).astype(float, copy=True)
    if not np.all(np.isfinite(out)):
        raise ParameterError("coefficient contains non-finite values")
    return out


def _space_field(grid: SpaceTimeGrid, f) -> np.ndarray:
    if callable(f):
        vals = np.asarray(f(*grid.space_meshes()), dtype=float)
    else:
        vals = np.asarray(f, dtype=float)
    out = np.broadcast_to(vals, grid.space_shape).astype(float, copy=True)
    if not np.all(np.isfinite(out)):
        raise ParameterError("initial values contain non-finite entries")
    return out


@dataclass
class FadeProblem:
    """Grid-sampled problem data; coefficients may be scalars, callables
    over the grid coordinates, or broadcastable arrays.

    diffusion: a (1-D) or (a11, a22[, a12]) (2-D).
    drift:     b (1-D) or (b1, b2) (2-D); zero if omitted.
    frac_terms: sequence of (q, alpha) with orders strictly decreasing
    inside (0, 1).
    boundary:  Dirichlet datum g as one callable/array over the full
    grid; only its boundary traces are used.
    """

    grid: SpaceTimeGrid
    diffusion: object
    source: object = 0.0
    drift: object = None
    reaction: object = 0.0
    frac_terms: tuple = ()
    initial: object = 0.0
    boundary: object = 0.0

    a11: np.ndarray = field(init=False, repr=False)
    a22: Optional[np.ndarray] = field(init=False, repr=False, default=None)
    a12: Optional[np.ndarray] = field(init=False, repr=False, default=None)
    b1: np.ndarray = field(init=False, repr=False)
    b2: Optional[np.ndarray] = field(init=False, repr=False, default=None)
    c: np.ndarray = field(init=False, repr=False)
    f: np.ndarray = field(init=False, repr=False)
    qs: tuple = field(init=False, repr=False)
    alphas: tuple = field(init=False)
    u0: np.ndarray = field(init=False, repr=False)
    g: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        grid = self.grid
        dim = grid.dim
        diff = self.diffusion
        if dim == 1:
            if isinstance(diff, (tuple, list)):
                raise ParameterError("1-D diffusion is a single coefficient")
            self.a11 = _coef(grid, diff)
            if np.any(self.a11 <= 0):
                raise ParameterError("diffusion coefficient must be positive")
        else:
            if not isinstance(diff, (tuple, list)) or len(diff) not in (2, 3):
                raise ParameterError("2-D diffusion needs (a11, a22[, a12])")
            self.a11 = _coef(grid, diff[0])
            self.a22 = _coef(grid, diff[1])
            self.a12 = _coef(grid, diff[2] if len(diff) == 3 else 0.0)
            det = self.a11 * self.a22 - self.a12**2
            if np.any(self.a11 <= 0) or np.any(det <= 0):
                raise ParameterError("diffusion matrix must be uniformly elliptic")
        drift = self.drift
        if dim == 1:
            self.b1 = _coef(grid, 0.0 if drift is None else drift)
        else:
            if drift is None:
                drift = (0.0, 0.0)
            if not isinstance(drift, (tuple, list)) or len(drift) != 2:
                raise ParameterError("2-D drift needs (b1, b2)")
            self.b1 = _coef(grid, drift[0])
            self.b2 = _coef(grid, drift[1])
        self.c = _coef(grid, self.reaction)
        self.f = _coef(grid, self.source)
        qs, alphas = [], []
        for q, alpha in self.frac_terms:
            a = as_order_value(alpha)
            if not 0.0 < a < 1.0:
                raise ParameterError(f"fractional order must lie in (0,1), got {a}")
            qs.append(_coef(grid, q))
            alphas.append(a)
        if any(a2 >= a1 for a1, a2 in zip(alphas, alphas[1:])):
            raise ParameterError(f"fractional orders must strictly decrease, got {alphas}")
        self.qs = tuple(qs)
        self.alphas = tuple(alphas)
        self.u0 = _space_field(grid, self.initial)
        self.g = _coef(grid, self.boundary)

    @property
    def alpha1(self) -> Optional[float]:
        return self.alphas[0] if self.alphas else None

    def without_fractional(self) -> "FadeProblem":
        clone = FadeProblem.__new__(FadeProblem)
        clone.__dict__.update(self.__dict__)
        clone.qs, clone.alphas, clone.frac_terms = (), (), ()
        return clone


# -- discrete operator ---------------------------------------------------------

def _space_terms(p: FadeProblem, u: np.ndarray) -> np.ndarray:
    """-sum a_il d_i d_l u + b.grad u + c u with central stencils;
    valid on interior space nodes, zero on the space boundary."""
    grid = p.grid
    out = np.zeros_like(u)
    if grid.dim == 1:
        dx = grid.dx
        uxx = (u[2:, :] - 2.0 * u[1:-1, :] + u[:-2, :]) / dx**2
        ux = (u[2:, :] - u[:-2, :]) / (2.0 * dx)
        out[1:-1, :] = (-p.a11[1:-1, :] * uxx + p.b1[1:-1, :] * ux
                        + p.c[1:-1, :] * u[1:-1, :])
        return out
    dx, dy = grid.dx, grid.dy
    I = np.s_[1:-1, 1:-1, :]
    uxx = (u[2:, 1:-1, :] - 2.0 * u[1:-1, 1:-1, :] + u[:-2, 1:-1, :]) / dx**2
    uyy = (u[1:-1, 2:, :] - 2.0 * u[1:-1, 1:-1, :] + u[1:-1, :-2, :]) / dy**2
    uxy = (u[2:, 2:, :] - u[2:, :-2, :] - u[:-2, 2:, :] + u[:-2, :-2, :]) / (4.0 * dx * dy)
    ux = (u[2:, 1:-1, :] - u[:-2, 1:-1, :]) / (2.0 * dx)
    uy = (u[1:-1, 2:, :] - u[1:-1, :-2, :]) / (2.0 * dy)
    out[I] = (-p.a11[I] * uxx - p.a22[I] * uyy - 2.0 * p.a12[I] * uxy
              + p.b1[I] * ux + p.b2[I] * uy + p.c[I] * u[I])
    return out


def apply_L(problem: FadeProblem, u) -> GridFunction:
    """Discrete Lu: backward-difference du/dt, L1 Caputo terms, central
    space stencils.  Defined on interior space nodes at time levels
    i >= 1; entries outside that window are zero."""
    grid = problem.grid
    vals = u.values if isinstance(u, GridFunction) else np.asarray(u, dtype=float)
    if vals.shape != grid.shape:
        raise GridError(f"u shape {vals.shape} does not match grid {grid.shape}")
    dt = grid.time.dt
    out = _space_terms(problem, vals)
    dudt = np.zeros_like(vals)
    dudt[..., 1:] = np.diff(vals, axis=-1) / dt
    out += dudt
    for q, alpha in zip(problem.qs, problem.alphas):
        out += q * caputo_l1_array(vals, alpha, dt)
    interior = grid.interior_space_mask()
    out[~interior, :] = 0.0
    out[..., 0] = 0.0
    return GridFunction(grid, out)


def apply_L_tilde(problem: FadeProblem, u) -> GridFunction:
    """Discrete Lu with the fractional memory terms stripped."""
    return apply_L(problem.without_fractional(), u)


# -- time stepping --------------------------------------------------------------

def _history(du: np.ndarray, w: np.ndarray, i: int) -> np.ndarray:
    """sum_{r=1}^{i-1} w_r (u^{i-r} - u^{i-r-1}) for step i."""
    if i < 2:
        return 0.0
    return du[..., 1:i] @ w[1:i][::-1]


def _check_finite(u: np.ndarray, step: int) -> None:
    if not np.all(np.isfinite(u)):
        raise NumericalFailureError(f"non-finite solution values at time step {step}")


def solve_fade(problem: FadeProblem) -> GridFunction:
    """March the implicit scheme over all time levels."""
    return _solve_1d(problem) if problem.grid.dim == 1 else _solve_2d(problem)


def _solve_1d(problem: FadeProblem) -> GridFunction:
    grid = problem.grid
    nx, nt = grid.nx, grid.time.n
    dt, dx = grid.time.dt, grid.dx
    u = np.empty((nx, nt))
    u[:, 0] = problem.u0
    u[0, :] = problem.g[0, :]
    u[-1, :] = problem.g[-1, :]
    scales = [l1_scale(a, dt) for a in problem.alphas]
    weights = [l1_weights(a, nt - 1) for a in problem.alphas]
    du = np.zeros((nx, nt))
    ab = np.zeros((3, nx))
    for i in range(1, nt):
        a_i = problem.a11[:, i]
        b_i = problem.b1[:, i]
        diag = 1.0 / dt + 2.0 * a_i / dx**2 + problem.c[:, i]
        rhs = problem.f[:, i] + u[:, i - 1] / dt
        for q, kappa, w in zip(problem.qs, scales, weights):
            q_i = q[:, i]
            diag = diag + q_i * kappa
            rhs = rhs + q_i * kappa * (u[:, i - 1] - _history(du, w, i))
        upper = -a_i / dx**2 + b_i / (2.0 * dx)
        lower = -a_i / dx**2 - b_i / (2.0 * dx)
        # Dirichlet closure on both endpoints.
        ab[0, 2:] = upper[1:-1]
        ab[0, 1] = 0.0
        ab[1, 1:-1] = diag[1:-1]
        ab[1, 0] = ab[1, -1] = 1.0
        ab[2, :-2] = lower[1:-1]
        ab[2, -2] = 0.0
        rhs[0] = problem.g[0, i]
        rhs[-1] = problem.g[-1, i]
        try:
            u[:, i] = solve_banded((1, 1), ab, rhs)
        except np.linalg.LinAlgError as exc:  # pragma: no cover - defensive
            raise NumericalFailureError(f"banded solve failed at step {i}: {exc}")
        _check_finite(u[:, i], i)
        du[:, i] = u[:, i] - u[:, i - 1]
    return GridFunction(grid, u)


def _time_constant(arr: np.ndarray) -> bool:
    return bool(np.all(arr == arr[..., :1]))


def _assemble_2d(problem: FadeProblem, i: int, kappa_q_diag: np.ndarray):
    grid = problem.grid
    nx, ny = grid.nx, grid.ny
    dx, dy = grid.dx, grid.dy
    dt = grid.time.dt
    n = nx * ny

    def k(ix, iy):
        return ix * ny + iy

    rows, cols, vals = [], [], []
    boundary = np.ones((nx, ny), dtype=bool)
    boundary[1:-1, 1:-1] = False
    for ix in range(nx):
        for iy in range(ny):
            kk = k(ix, iy)
            if boundary[ix, iy]:
                rows.append(kk); cols.append(kk); vals.append(1.0)
                continue
            a11 = problem.a11[ix, iy, i]
            a22 = problem.a22[ix, iy, i]
            a12 = problem.a12[ix, iy, i]
            b1 = problem.b1[ix, iy, i]
            b2 = problem.b2[ix, iy, i]
            c = problem.c[ix, iy, i]
            center = 1.0 / dt + kappa_q_diag[ix, iy] + 2.0 * a11 / dx**2 \
                + 2.0 * a22 / dy**2 + c
            rows.append(kk); cols.append(kk); vals.append(center)
            rows.append(kk); cols.append(k(ix + 1, iy)); vals.append(-a11 / dx**2 + b1 / (2 * dx))
            rows.append(kk); cols.append(k(ix - 1, iy)); vals.append(-a11 / dx**2 - b1 / (2 * dx))
            rows.append(kk); cols.append(k(ix, iy + 1)); vals.append(-a22 / dy**2 + b2 / (2 * dy))
            rows.append(kk); cols.append(k(ix, iy - 1)); vals.append(-a22 / dy**2 - b2 / (2 * dy))
            if a12 != 0.0:
                m = 2.0 * a12 / (4.0 * dx * dy)
                rows.append(kk); cols.append(k(ix + 1, iy + 1)); vals.append(-m)
                rows.append(kk); cols.append(k(ix - 1, iy - 1)); vals.append(-m)
                rows.append(kk); cols.append(k(ix + 1, iy - 1)); vals.append(m)
                rows.append(kk); cols.append(k(ix - 1, iy + 1)); vals.append(m)
    return sp.csc_matrix((vals, (rows, cols)), shape=(n, n))


def _solve_2d(problem: FadeProblem) -> GridFunction:
    grid = problem.grid
    nx, ny, nt = grid.nx, grid.ny, grid.time.n
    dt = grid.time.dt
    boundary = np.ones((nx, ny), dtype=bool)
    boundary[1:-1, 1:-1] = False
    u = np.empty((nx, ny, nt))
    u[..., 0] = problem.u0
    scales = [l1_scale(a, dt) for a in problem.alphas]
    weights = [l1_weights(a, nt - 1) for a in problem.alphas]
    du = np.zeros((nx, ny, nt))
    coeffs_fixed = all(
        _time_constant(arr) for arr in
        (problem.a11, problem.a22, problem.a12, problem.b1, problem.b2, problem.c)
    ) and all(_time_constant(q) for q in problem.qs)
    lu = None
    for i in range(1, nt):
        kappa_q = sum(q[..., i] * kap for q, kap in zip(problem.qs, scales))
        kappa_q = np.zeros((nx, ny)) + kappa_q
        if lu is None or not coeffs_fixed:
            mat = _assemble_2d(problem, i, kappa_q)
            try:
                lu = spla.splu(mat)
            except RuntimeError as exc:
                raise NumericalFailureError(f"sparse factorization failed at step {i}: {exc}")
        rhs = problem.f[..., i] + u[..., i - 1] / dt
        for q, kappa, w in zip(problem.qs, scales, weights):
            rhs = rhs + q[..., i] * kappa * (u[..., i - 1] - _history(du, w, i))
        rhs = np.where(boundary, problem.g[..., i], rhs)
        sol = lu.solve(rhs.ravel())
        u[..., i] = sol.reshape(nx, ny)
        _check_finite(u[..., i], i)
        du[..., i] = u[..., i] - u[..., i - 1]
    return GridFunction(grid, u)


# -- conormal boundary flux ------------------------------------------------------

def _one_sided(u: np.ndarray, h: float, axis: int, at_start: bool) -> np.ndarray:
    """Second-order one-sided first derivative on the given face."""
    sl = [slice(None)] * u.ndim

    def take(idx):
        s = list(sl)
        s[axis] = idx
        return u[tuple(s)]

    if at_start:
        return (-3.0 * take(0) + 4.0 * take(1) - take(2)) / (2.0 * h)
    return (3.0 * take(-1) - 4.0 * take(-2) + take(-3)) / (2.0 * h)


def boundary_flux(problem: FadeProblem, u, face: str):
    """Conormal flux sum a_il nu_i d_l u on a boundary face.

    Returns a TimeSeries in 1-D, an (n_face_nodes, n_t) array in 2-D.
    """
    grid = problem.grid
    vals = u.values if isinstance(u, GridFunction) else np.asarray(u, dtype=float)
    if vals.shape != grid.shape:
        raise GridError(f"u shape {vals.shape} does not match grid {grid.shape}")
    if face not in grid.domain.faces:
        raise ParameterError(f"unknown face {face!r} for dim={grid.dim}")
    if grid.dim == 1:
        if grid.nx < 3:
            raise GridError("need at least 3 x nodes for a one-sided flux stencil")
        at_start = face == "left"
        nu = -1.0 if at_start else 1.0
        ux = _one_sided(vals, grid.dx, 0, at_start)
        a = problem.a11[0 if at_start else -1, :]
        return TimeSeries(grid.time, nu * a * ux)
    if grid.nx < 3 or grid.ny < 3:
        raise GridError("need at least 3 nodes per axis for a one-sided flux stencil")
    if face in ("left", "right"):
        at_start = face == "left"
        nu = -1.0 if at_start else 1.0
        idx = 0 if at_start else -1
        ux = _one_sided(vals, grid.dx, 0, at_start)
        uy = np.gradient(vals[idx, :, :], grid.dy, axis=0, edge_order=2)
        return nu * (problem.a11[idx, :, :] * ux + problem.a12[idx, :, :] * uy)
    at_start = face == "bottom"
    nu = -1.0 if at_start else 1.0
    idx = 0 if at_start else -1
    uy = _one_sided(vals, grid.dy, 1, at_start)
    ux = np.gradient(vals[:, idx, :], grid.dx, axis=0, edge_order=2)
    return nu * (problem.a22[:, idx, :] * uy + problem.a12[:, idx, :] * ux)
