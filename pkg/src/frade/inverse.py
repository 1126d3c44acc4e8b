"""Inverse problems: source reconstruction and lateral Cauchy continuation.

reconstruct_source divides the discrete operator applied to the solution
history at one time level by the known modulation R there, on the level
set where the observation geometry leaves room ({d > 4 eps}).

lateral_cauchy_solve recovers the field inside the cylinder from
Dirichlet trace and conormal flux on one observed boundary face: the
complementary boundary values are the unknowns, the unknown-to-flux map
is affine (assembled column by column from unit forward solves), and a
Tikhonov functional with a discrete H1 penalty picks the reconstruction.

add_noise and fit_holder provide the noise studies: seeded uniform
perturbations scaled to the sup norm, and log-log least squares for the
empirical stability exponent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional, Union

import numpy as np

from .errors import (
    GeometryError,
    GridError,
    HypothesisViolationError,
    NumericalFailureError,
    ParameterError,
)
from .frac_calc import caputo_l1_array
from .geometry import PseudoconvexField, build_d
from .grids import GridFunction, SpaceTimeGrid, TimeSeries
from .solver import FadeProblem, _space_terms, boundary_flux, solve_fade


# -- data containers --------------------------------------------------------------

@dataclass(frozen=True)
class CauchyData:
    """Trace and conormal flux observed on one boundary face.

    face names the observed sub-boundary; g0 and g1 are the Dirichlet
    trace and the conormal flux there, one value per time node.  initial
    and source, when given, override the problem's own fields in the
    closed-loop forward solves.
    """

    face: str
    g0: np.ndarray
    g1: np.ndarray
    initial: Optional[np.ndarray] = None
    source: Optional[np.ndarray] = None

    def __post_init__(self):
        g0 = np.asarray(self.g0, dtype=float)
        g1 = np.asarray(self.g1, dtype=float)
        if g0.shape != g1.shape:
            raise GridError(f"trace shape {g0.shape} != flux shape {g1.shape}")
        object.__setattr__(self, "g0", g0)
        object.__setattr__(self, "g1", g1)


@dataclass(frozen=True)
class SpaceField:
    """Space-only nodal field defined on a masked subset of the grid."""

    grid: SpaceTimeGrid
    values: np.ndarray
    mask: np.ndarray

    def masked(self) -> np.ndarray:
        return self.values[self.mask]


@dataclass(frozen=True)
class StabilityFit:
    """Power-law fit e ~ C * delta^theta from a noise ladder.

    holder_consistent flags theta_hat in (0, 1.05]; values above mark a
    better-than-expected (near-Lipschitz) regime, reported not failed.
    """

    deltas: tuple[float, ...]
    errors: tuple[float, ...]
    theta_hat: float
    c_hat: float
    log_c_hat: float
    residual: float

    @property
    def holder_consistent(self) -> bool:
        return 0.0 < self.theta_hat <= 1.05


@dataclass(frozen=True)
class TargetRegion:
    """Where a continued field is judged: {d > omega0_level} in space,
    an early window (0, eps) or interior window (eps, T - eps) in time.
    eps = None defers to the schedule eps = T / (2 M) reported by the
    solver."""

    omega0_level: float
    window: str = "early"
    eps: Optional[float] = None

    def __post_init__(self):
        if self.window not in ("early", "interior"):
            raise ParameterError(f"window must be 'early' or 'interior', got {self.window!r}")
        if self.omega0_level <= 0:
            raise ParameterError("omega0_level must be positive")


@dataclass(frozen=True)
class CauchyResult:
    """Continued field plus the regularization and schedule report."""

    u_hat: GridFunction
    h_hat: np.ndarray
    target_mask: np.ndarray
    eps: float
    n_levels: int
    m_value: float
    reg: float
    flux_misfit: float
    trace_misfit: float


# -- inverse source ----------------------------------------------------------------

def reconstruct_source(u_hist: GridFunction, R: GridFunction,
                       problem: FadeProblem, t0: float, eps: float,
                       d: Optional[PseudoconvexField] = None,
                       r0: float = 1e-8) -> SpaceField:
    """Recover the space factor of a separated source R(x,t) f(x).

    f_hat = (du/dt + sum_j q_j d^{alpha_j} u - div(a grad u) + b.grad u
    + c u)(x, t0) / R(x, t0) on interior nodes with d(x) > 4 eps.  The
    time derivative uses the three-point backward stencil at t0, the
    fractional history the same L1 weights as the forward solver, space
    derivatives central differences.
    """
    grid = u_hist.grid
    if grid.shape != problem.grid.shape or R.values.shape != u_hist.values.shape:
        raise GridError("u_hist, R and problem must share one grid")
    if eps <= 0:
        raise ParameterError("eps must be positive")
    if r0 <= 0:
        raise ParameterError("r0 must be positive")
    i0 = grid.time.index_of(t0)
    if i0 < 2:
        raise GridError(f"t0 = {t0} leaves no room for the backward stencil")

    dt = grid.time.dt
    u = u_hist.values
    dt_u = (3.0 * u[..., i0] - 4.0 * u[..., i0 - 1] + u[..., i0 - 2]) / (2.0 * dt)

    numer = dt_u
    for q, alpha in zip(problem.qs, problem.alphas):
        frac = caputo_l1_array(u[..., :i0 + 1], alpha, dt)[..., -1]
        numer = numer + q[..., i0] * frac
    numer = numer + _space_terms(problem, u)[..., i0]

    if d is None:
        d = build_d(grid.domain)
    d_space = d.sample(grid)
    mask = grid.interior_space_mask() & (d_space > 4.0 * eps)
    if not np.any(mask):
        raise GridError(f"no interior nodes with d > {4.0 * eps}")

    r_t0 = R.values[..., i0]
    small = np.abs(r_t0[mask]) < r0
    if np.any(small):
        raise HypothesisViolationError(
            f"|R(., t0)| < {r0} on {int(np.sum(small))} target nodes; "
            "the reconstruction identity degenerates"
        )

    f_hat = np.full(grid.space_shape, np.nan)
    f_hat[mask] = numer[mask] / r_t0[mask]
    return SpaceField(grid, f_hat, mask)


def relative_l2_error(recon: SpaceField, f_true: np.ndarray) -> float:
    """Relative L2 error of a reconstruction over its own mask."""
    f_true = np.asarray(f_true, dtype=float)
    diff = recon.values[recon.mask] - f_true[recon.mask]
    denom = float(np.sqrt(np.sum(f_true[recon.mask] ** 2)))
    if denom == 0.0:
        raise ParameterError("reference field vanishes on the target set")
    return float(np.sqrt(np.sum(diff**2))) / denom


# -- lateral Cauchy continuation ------------------------------------------------------

def _complementary_face(grid: SpaceTimeGrid, face: str) -> str:
    if grid.dim != 1:
        raise GridError("lateral Cauchy continuation is implemented in one space dimension")
    if face not in ("left", "right"):
        raise GeometryError(f"unknown 1-D face {face!r}")
    return "right" if face == "left" else "left"


def _with_boundary(problem: FadeProblem, g: np.ndarray,
                   u0: np.ndarray, f: np.ndarray) -> FadeProblem:
    clone = FadeProblem.__new__(FadeProblem)
    clone.__dict__.update(problem.__dict__)
    clone.g = g
    clone.u0 = u0
    clone.f = f
    return clone


def _boundary_array(grid: SpaceTimeGrid, face: str, values: np.ndarray) -> np.ndarray:
    g = np.zeros(grid.shape)
    idx = 0 if face == "left" else -1
    g[idx, :] = values
    return g


def cauchy_schedule(d: PseudoconvexField, grid: SpaceTimeGrid,
                    omega0_level: float, alpha1: float) -> tuple[int, float, float]:
    """Level count N, exponent root M and time window eps = T / (2 M)
    for a continuation target {d > omega0_level}."""
    d_norm = d.sup_norm()
    n_levels = max(5, math.ceil(4.0 * d_norm / omega0_level) + 1)
    m_value = n_levels ** (1.0 / (2.0 - 2.0 * alpha1))
    eps = grid.time.horizon / (2.0 * m_value)
    return n_levels, m_value, eps


def assemble_flux_map(problem: FadeProblem, face: str) -> np.ndarray:
    """Columns of the linear map from complementary boundary values
    (time nodes >= 1) to the conormal flux on the observed face, built
    from unit-impulse forward solves with homogeneous data.  The map
    depends only on the problem, so noise studies assemble it once."""
    grid = problem.grid
    comp = _complementary_face(grid, face)
    nt = grid.time.n
    zeros_u0 = np.zeros(grid.space_shape)
    zeros_f = np.zeros(grid.shape)
    a_mat = np.empty((nt, nt - 1))
    comp_idx = 0 if comp == "left" else -1
    for j in range(1, nt):
        g_col = np.zeros(grid.shape)
        g_col[comp_idx, j] = 1.0
        sol = solve_fade(_with_boundary(problem, g_col, zeros_u0, zeros_f))
        a_mat[:, j - 1] = boundary_flux(problem, sol.values, face).values
    return a_mat


def lateral_cauchy_solve(data: CauchyData, problem: FadeProblem,
                         target: TargetRegion, reg: float,
                         d: Optional[PseudoconvexField] = None,
                         flux_map: Optional[np.ndarray] = None) -> CauchyResult:
    """Continue a solution from one-sided Cauchy data by Tikhonov least
    squares over the complementary boundary values.

    The observed trace is imposed exactly (so the trace misfit vanishes
    by construction) and the flux misfit is minimized: with the affine
    map h -> flux = A h + b assembled from unit forward solves,
    h_hat solves (A' W A + reg (M + D'D)) h = A' W (g1 - b) with
    trapezoid weights W and a discrete H1 penalty M + D'D.  Pass a
    precomputed flux_map (see assemble_flux_map) to amortize the unit
    solves across repeated calls.
    """
    if reg <= 0:
        raise ParameterError("reg must be positive")
    grid = problem.grid
    comp = _complementary_face(grid, data.face)
    nt = grid.time.n
    if data.g0.shape != (nt,):
        raise GridError(f"data needs one value per time node, got {data.g0.shape}")

    u0 = data.initial if data.initial is not None else problem.u0
    f = data.source if data.source is not None else problem.f
    if data.initial is not None and data.initial.shape != grid.space_shape:
        raise GridError("initial trace shape mismatch")

    g_obs = _boundary_array(grid, data.face, data.g0)
    g_obs[0 if comp == "left" else -1, 0] = u0[0 if comp == "left" else -1]

    # affine part: full data, zero unknown
    base = solve_fade(_with_boundary(problem, g_obs, u0, f))
    b_flux = boundary_flux(problem, base.values, data.face).values

    a_mat = flux_map if flux_map is not None else assemble_flux_map(problem, data.face)
    n_unknown = nt - 1
    if a_mat.shape != (nt, n_unknown):
        raise GridError(f"flux_map shape {a_mat.shape} does not match grid")

    dt = grid.time.dt
    w = np.full(nt, dt)
    w[0] = w[-1] = 0.5 * dt
    awa = a_mat.T @ (w[:, None] * a_mat)
    mass = dt * np.eye(n_unknown)
    diff = (np.eye(n_unknown) - np.eye(n_unknown, k=-1)) / dt
    penalty = mass + dt * (diff.T @ diff)
    rhs = a_mat.T @ (w * (data.g1 - b_flux))
    try:
        h_hat = np.linalg.solve(awa + reg * penalty, rhs)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailureError(
            f"normal equations not solvable (rank deficiency): {exc}"
        ) from exc
    if not np.all(np.isfinite(h_hat)):
        raise NumericalFailureError("normal equations produced non-finite unknowns")

    g_full = g_obs.copy()
    comp_idx = 0 if comp == "left" else -1
    g_full[comp_idx, 1:] = h_hat
    u_hat = solve_fade(_with_boundary(problem, g_full, u0, f))
    flux_hat = boundary_flux(problem, u_hat.values, data.face).values
    misfit = float(np.sqrt(np.sum(w * (flux_hat - data.g1) ** 2)))

    if d is None:
        d = build_d(grid.domain)
    alpha1 = problem.alpha1 if problem.alphas else 0.5
    n_levels, m_value, eps_sched = cauchy_schedule(d, grid, target.omega0_level, alpha1)
    eps = target.eps if target.eps is not None else eps_sched

    d_space = d.sample(grid)
    t = grid.time.nodes
    horizon = grid.time.horizon
    if target.window == "early":
        t_mask = t < eps
    else:
        t_mask = (t > eps) & (t < horizon - eps)
    if not np.any(t_mask):
        raise GridError(f"time window {target.window} with eps = {eps} holds no nodes")
    mask = (d_space > target.omega0_level)[:, None] & t_mask[None, :]
    if not np.any(mask):
        raise GridError("target region contains no grid nodes")

    return CauchyResult(
        u_hat=u_hat, h_hat=h_hat, target_mask=mask, eps=eps,
        n_levels=n_levels, m_value=m_value, reg=reg,
        flux_misfit=misfit, trace_misfit=0.0,
    )


def target_error(result: CauchyResult, u_true: np.ndarray) -> float:
    """Relative L2 error of the continued field over the target region."""
    mask = result.target_mask
    diff = result.u_hat.values[mask] - u_true[mask]
    denom = float(np.sqrt(np.sum(u_true[mask] ** 2)))
    if denom == 0.0:
        raise ParameterError("reference solution vanishes on the target region")
    return float(np.sqrt(np.sum(diff**2))) / denom


# -- noise and fitting -------------------------------------------------------------

Noisable = Union[np.ndarray, TimeSeries, GridFunction, CauchyData]


def _perturb(values: np.ndarray, delta: float, seed, tag: int) -> np.ndarray:
    key = tuple(int(v) for v in seed) if isinstance(seed, (tuple, list)) \
        else (int(seed),)
    rng = np.random.default_rng(key + (tag,))
    amp = delta * float(np.max(np.abs(values))) if values.size else 0.0
    return values + amp * rng.uniform(-1.0, 1.0, size=values.shape)


def add_noise(data: Noisable, delta: float, seed: int) -> Noisable:
    """Uniform perturbation scaled to delta * sup norm, per component.

    Deterministic per (seed, component); delta = 0 returns the data
    unchanged.  For Cauchy data only the measured pair (g0, g1) is
    perturbed; initial trace and source are regarded as known exactly.
    """
    if delta < 0:
        raise ParameterError("noise level must be >= 0")
    if delta == 0:
        return data
    if isinstance(data, CauchyData):
        return replace(data,
                       g0=_perturb(data.g0, delta, seed, 0),
                       g1=_perturb(data.g1, delta, seed, 1))
    if isinstance(data, (TimeSeries, GridFunction)):
        return data.with_values(_perturb(data.values, delta, seed, 0))
    return _perturb(np.asarray(data, dtype=float), delta, seed, 0)


def fit_holder(deltas, errors) -> StabilityFit:
    """Least-squares power law through (delta, error) pairs in log-log.

    Needs at least four strictly positive pairs with increasing deltas;
    returns the exponent theta_hat, the constant c_hat and the RMS
    residual of the fit on the log scale.
    """
    deltas = np.asarray(deltas, dtype=float)
    errors = np.asarray(errors, dtype=float)
    if deltas.shape != errors.shape or deltas.ndim != 1:
        raise ParameterError("deltas and errors must be 1-D of equal length")
    if deltas.size < 4:
        raise ParameterError("need at least 4 noise levels for a stable fit")
    if np.any(deltas <= 0) or np.any(errors <= 0):
        raise ParameterError("all deltas and errors must be positive")
    if np.any(np.diff(deltas) <= 0):
        raise ParameterError("deltas must be strictly increasing")

    x = np.log(deltas)
    y = np.log(errors)
    theta, log_c = np.polyfit(x, y, 1)
    resid = y - (theta * x + log_c)
    rms = float(np.sqrt(np.mean(resid**2)))
    return StabilityFit(
        deltas=tuple(float(v) for v in deltas),
        errors=tuple(float(v) for v in errors),
        theta_hat=float(theta), c_hat=float(math.exp(log_c)),
        log_c_hat=float(log_c), residual=rms,
    )
