"""Quadrature evaluation of the Carleman-weighted inequalities.

Each evaluator computes the named volume integrals by cell-wise midpoint
quadrature (nodal fields averaged to cell centers, the weight evaluated
analytically at the centers) and boundary integrals by trapezoid rule on
face nodes.  Weighted terms are accumulated per term in log space via
log-sum-exp over cells, so every term and every ratio stays finite even
when e^{2s*phi} under- or overflows the double range (raw values past
1e308 are reported as inf).

Boundary terms of the inequalities carry an unseparable constant
C(lam)*e^{C(lam)*s}; they are reported raw (no exponential factor) and
never enter the ratio.  Fixtures with compact support make them vanish.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import (
    FamilyMismatchError,
    GridError,
    HypothesisViolationError,
    ParameterError,
)
from .frac_calc import caputo_l1_array, rl_derivative_array, rl_integral_array
from .geometry import (
    CutoffField,
    PseudoconvexField,
    WeightFamily,
    WeightParams,
    cutoff,
    phi as phi_of,
)
from .grids import GridFunction, SpaceTimeGrid
from .solver import FadeProblem, apply_L, apply_L_tilde

_LOG_MAX = math.log(1e308)


def thread_pool_size(n_tasks: int) -> int:
    env = os.environ.get("FRADE_THREADS")
    if env:
        try:
            cap = int(env)
        except ValueError:
            raise ParameterError(f"FRADE_THREADS must be an integer, got {env!r}")
        if cap < 1:
            raise ParameterError("FRADE_THREADS must be >= 1")
    else:
        cap = min(4, os.cpu_count() or 1)
    return max(1, min(cap, n_tasks))


# -- report types ----------------------------------------------------------------

@dataclass(frozen=True)
class TermValue:
    """One named integral: raw value (inf past float range) plus its log."""

    value: float
    log_value: float


@dataclass(frozen=True)
class CarlemanReport:
    """All named terms of one inequality evaluation at fixed (s, lam).

    ratio = (sum of lhs terms) / (sum of rhs terms), computed in shifted
    space; None when the denominator vanishes (e.g. u = 0).  Boundary
    terms are carried separately and never enter the ratio.
    """

    s: float
    lam: float
    beta: float
    family: str
    terms: dict[str, TermValue]
    lhs_names: tuple[str, ...]
    rhs_names: tuple[str, ...]
    boundary_names: tuple[str, ...]
    ratio: Optional[float]
    meta: dict

    def term(self, name: str) -> TermValue:
        return self.terms[name]

    @property
    def lhs_log_total(self) -> float:
        return _log_sum(self.terms[n].log_value for n in self.lhs_names)

    @property
    def rhs_log_total(self) -> float:
        return _log_sum(self.terms[n].log_value for n in self.rhs_names)


def _log_sum(logs) -> float:
    logs = [v for v in logs if v > -math.inf]
    if not logs:
        return -math.inf
    m = max(logs)
    return m + math.log(sum(math.exp(v - m) for v in logs))


def _term_from_log(log_value: float) -> TermValue:
    if log_value == -math.inf:
        return TermValue(0.0, -math.inf)
    value = math.exp(log_value) if log_value < _LOG_MAX else math.inf
    return TermValue(value, log_value)


def _raw_term(value: float) -> TermValue:
    return TermValue(value, math.log(value) if value > 0 else -math.inf)


# -- quadrature helpers ------------------------------------------------------------

def _centers(arr: np.ndarray) -> np.ndarray:
    """Average nodal values onto cell centers (all axes)."""
    for ax in range(arr.ndim):
        lo = [slice(None)] * arr.ndim
        hi = [slice(None)] * arr.ndim
        lo[ax] = slice(None, -1)
        hi[ax] = slice(1, None)
        arr = 0.5 * (arr[tuple(lo)] + arr[tuple(hi)])
    return arr


def _axis_centers(nodes: np.ndarray) -> np.ndarray:
    return 0.5 * (nodes[:-1] + nodes[1:])


def _space_gradients(vals: np.ndarray, grid: SpaceTimeGrid) -> list[np.ndarray]:
    return [np.gradient(vals, h, axis=a, edge_order=2)
            for a, h in enumerate(grid.space_spacings)]


def _time_gradient(vals: np.ndarray, grid: SpaceTimeGrid) -> np.ndarray:
    return np.gradient(vals, grid.time.dt, axis=-1, edge_order=2)


def _second_gradients(vals: np.ndarray, grid: SpaceTimeGrid) -> list[np.ndarray]:
    """All distinct d_i d_l u fields (i <= l), via repeated gradients."""
    firsts = _space_gradients(vals, grid)
    out = []
    for i, gi in enumerate(firsts):
        for l, h in enumerate(grid.space_spacings):
            if l < i:
                continue
            out.append(np.gradient(gi, h, axis=l, edge_order=2))
    return out


def _sq_sum(fields: Sequence[np.ndarray]) -> np.ndarray:
    out = np.zeros_like(fields[0])
    for f in fields:
        out += f * f
    return out


def _phi_at_centers(grid: SpaceTimeGrid, d: PseudoconvexField,
                    params: WeightParams) -> np.ndarray:
    xc = tuple(_axis_centers(n) for n in
               ((grid.x,) if grid.dim == 1 else (grid.x, grid.y)))
    tc = _axis_centers(grid.time.nodes)
    if grid.dim == 1:
        d_c = d(xc[0])[:, None]
        return phi_of(d_c, tc[None, :], params)
    xm, ym = np.meshgrid(xc[0], xc[1], indexing="ij")
    d_c = d(xm, ym)[:, :, None]
    return phi_of(d_c, tc[None, None, :], params)


def _phi_at_nodes(grid: SpaceTimeGrid, d: PseudoconvexField,
                  params: WeightParams) -> np.ndarray:
    d_n = d.sample(grid)[..., None]
    return phi_of(d_n, grid.time.nodes, params)


def _cell_volume(grid: SpaceTimeGrid) -> float:
    v = grid.time.dt
    for h in grid.space_spacings:
        v *= h
    return v


class _WeightedAccumulator:
    """Per-term log-sum-exp quadrature of weighted volume integrals.

    Every summand is poly * e^{exponent} * cell_vol with poly >= 0; each
    term keeps its own shift, so a term whose mass sits far below the
    region's max exponent still comes out exact instead of underflowing.
    """

    def __init__(self, exponent: np.ndarray, mask: np.ndarray, cell_vol: float):
        self._mask = mask
        if not np.any(mask):
            raise GridError("quadrature region contains no cells")
        self._exponent = exponent[mask]
        self._log_shift = float(np.max(self._exponent))
        self._log_vol = math.log(cell_vol)
        self.log_values: dict[str, float] = {}

    @property
    def log_shift(self) -> float:
        return self._log_shift

    def add(self, name: str, poly: np.ndarray) -> None:
        p = poly[self._mask]
        logs = np.log(p, out=np.full(p.shape, -np.inf), where=p > 0.0)
        logs += self._exponent
        m = float(np.max(logs))
        if m == -math.inf:
            self.log_values[name] = -math.inf
            return
        total = float(np.sum(np.exp(logs - m)))
        self.log_values[name] = m + math.log(total) + self._log_vol

    def terms(self) -> dict[str, TermValue]:
        return {k: _term_from_log(v) for k, v in self.log_values.items()}

    def ratio(self, lhs_names, rhs_names) -> Optional[float]:
        den = _log_sum(self.log_values[n] for n in rhs_names)
        if den == -math.inf:
            return None
        num = _log_sum(self.log_values[n] for n in lhs_names)
        if num == -math.inf:
            return 0.0
        r = num - den
        return math.exp(r) if r < _LOG_MAX else math.inf


def _face_integral(field: np.ndarray, window: tuple[slice, ...],
                   spacings: tuple[float, ...], axis: int, at_start: bool) -> float:
    """Trapezoid integral of a nodal field over one face of a node window."""
    sl = list(window)
    w = window[axis]
    sl[axis] = w.start if at_start else (w.stop - 1)
    face = field[tuple(sl)]
    rem = [h for a, h in enumerate(spacings) if a != axis]
    for h in rem:
        face = np.trapezoid(face, dx=h, axis=0)
    return float(face)


# -- box regions (observation windows) ----------------------------------------------------------

@dataclass(frozen=True)
class BoxRegion:
    """Axis-aligned space-time box snapped to grid nodes."""

    x_lo: float
    x_hi: float
    t_lo: float
    t_hi: float
    y_lo: Optional[float] = None
    y_hi: Optional[float] = None

    def node_window(self, grid: SpaceTimeGrid) -> tuple[slice, ...]:
        def snap(nodes, lo, hi):
            i0 = int(np.argmin(np.abs(nodes - lo)))
            i1 = int(np.argmin(np.abs(nodes - hi)))
            if i1 <= i0:
                raise GridError(f"box [{lo}, {hi}] spans no grid cell")
            return slice(i0, i1 + 1)

        sx = snap(grid.x, self.x_lo, self.x_hi)
        st = snap(grid.time.nodes, self.t_lo, self.t_hi)
        if grid.dim == 1:
            if self.y_lo is not None:
                raise GridError("1-D grid but box has y extents")
            return (sx, st)
        if self.y_lo is None or self.y_hi is None:
            raise GridError("2-D grid needs y extents on the box")
        sy = snap(grid.y, self.y_lo, self.y_hi)
        return (sx, sy, st)


def _window_cells_mask(grid: SpaceTimeGrid, window: tuple[slice, ...],
                       need_operator: bool) -> np.ndarray:
    """Cell mask (center-lattice shape) for cells inside a node window.

    need_operator restricts to cells whose corners carry defined values
    of the discrete operator (interior space nodes, time level >= 1).
    """
    shape = tuple(n - 1 for n in grid.shape)
    mask = np.zeros(shape, dtype=bool)
    sel = []
    for a, w in enumerate(window):
        lo, hi = w.start, w.stop - 1  # node span -> cells lo..hi-1
        if need_operator:
            if a < len(window) - 1:
                lo = max(lo, 1)
                hi = min(hi, grid.shape[a] - 2)
            else:
                lo = max(lo, 1)
        if hi <= lo:
            raise GridError("region does not cover any cell with defined operator values")
        sel.append(slice(lo, hi))
    mask[tuple(sel)] = True
    return mask


def evaluate_thm11(problem: FadeProblem, u, region: BoxRegion,
                   d: PseudoconvexField, params: WeightParams) -> CarlemanReport:
    """Sub-diffusion Carleman inequality on a box D.

    lhs_dt, lhs_grad, lhs_u carry the weight e^{2 s phi1}; rhs_source is
    the weighted square of the non-fractional part of the operator;
    rhs_bdy and rhs_bdy_dt are raw face integrals (the time derivative
    one excludes the t = 0 face).  ratio = lhs total / rhs_source.
    """
    if params.family is not WeightFamily.SUB:
        raise FamilyMismatchError("evaluate_thm11 needs the SUB weight family")
    grid = _grid_of(u)
    vals = _values_of(u, grid)
    window = region.node_window(grid)
    mask = _window_cells_mask(grid, window, need_operator=True)

    lt = apply_L_tilde(problem, vals).values
    dt_u = _time_gradient(vals, grid)
    grads = _space_gradients(vals, grid)

    phi_c = _phi_at_centers(grid, d, params)
    s, lam = params.s, params.lam
    acc = _WeightedAccumulator(2.0 * s * phi_c, mask, _cell_volume(grid))
    acc.add("lhs_dt", _centers(dt_u) ** 2 / (s * phi_c))
    acc.add("lhs_grad", s * lam**2 * phi_c * _centers(_sq_sum(grads)))
    acc.add("lhs_u", s**3 * lam**4 * phi_c**3 * _centers(vals) ** 2)
    acc.add("rhs_source", _centers(lt) ** 2)

    spacings = grid.space_spacings + (grid.time.dt,)
    grad_sq = _sq_sum(grads) + vals * vals
    dt_sq = dt_u * dt_u
    bdy = 0.0
    bdy_dt = 0.0
    t_axis = grid.dim
    for axis in range(grid.dim + 1):
        for at_start in (True, False):
            bdy += _face_integral(grad_sq, window, spacings, axis, at_start)
            on_sigma0 = (axis == t_axis and at_start
                         and window[t_axis].start == 0)
            if not on_sigma0:
                bdy_dt += _face_integral(dt_sq, window, spacings, axis, at_start)

    terms = acc.terms()
    terms["rhs_bdy"] = _raw_term(bdy)
    terms["rhs_bdy_dt"] = _raw_term(bdy_dt)
    lhs = ("lhs_dt", "lhs_grad", "lhs_u")
    return CarlemanReport(
        s=s, lam=lam, beta=params.beta, family=params.family.value, terms=terms,
        lhs_names=lhs, rhs_names=("rhs_source",),
        boundary_names=("rhs_bdy", "rhs_bdy_dt"),
        ratio=acc.ratio(lhs, ("rhs_source",)),
        meta={"region": (region.x_lo, region.x_hi, region.t_lo, region.t_hi),
              "log_shift": acc.log_shift},
    )


# -- single-term mixed-order estimate (evaluate_lemma21) -----------------------------------------------------------------------

def check_weight_time_monotone(phi_nodes: np.ndarray) -> bool:
    """Exact nodewise check that the weight never increases in time."""
    return bool(np.all(np.diff(phi_nodes, axis=-1) <= 0.0))


def evaluate_lemma21(u, alpha: float, d: PseudoconvexField,
                     params: WeightParams, c1: float, c2: float) -> CarlemanReport:
    """Fractional-vs-classical derivative absorption estimate.

    lhs = int_{phi1 > c1} |d^alpha u|^2 e^{2 s phi1},
    rhs = int_{phi1 > c2} (s lam phi1)^{-1} |du/dt|^2 e^{2 s phi1},
    with c2 < c1 (so the lhs region is the smaller one) and
    0 < alpha <= alpha1 < 1/2 enforced as the lemma's hypothesis.
    """
    if params.family is not WeightFamily.SUB:
        raise FamilyMismatchError("evaluate_lemma21 needs the SUB weight family")
    if not c2 < c1:
        raise ParameterError(f"need c2 < c1, got c2={c2}, c1={c1}")
    if not 0.0 < alpha <= params.alpha1:
        raise HypothesisViolationError(
            f"evaluate_lemma21 needs 0 < alpha <= alpha1 = {params.alpha1}, got {alpha}"
        )
    grid = _grid_of(u)
    vals = _values_of(u, grid)
    if not check_weight_time_monotone(_phi_at_nodes(grid, d, params)):
        raise HypothesisViolationError("weight must be nonincreasing in time")

    dt_u = _time_gradient(vals, grid)
    frac_u = caputo_l1_array(vals, alpha, grid.time.dt)
    phi_c = _phi_at_centers(grid, d, params)
    s, lam = params.s, params.lam

    shape = tuple(n - 1 for n in grid.shape)
    c2_mask = phi_c > c2
    if not np.any(c2_mask):
        raise GridError("outer level region contains no cells")
    acc = _WeightedAccumulator(2.0 * s * phi_c, c2_mask, _cell_volume(grid))
    frac_sq = _centers(frac_u) ** 2
    acc.add("lhs", np.where(phi_c > c1, frac_sq, 0.0))
    acc.add("rhs", _centers(dt_u) ** 2 / (s * lam * phi_c))

    lhs, rhs = ("lhs",), ("rhs",)
    return CarlemanReport(
        s=s, lam=lam, beta=params.beta, family=params.family.value, terms=acc.terms(),
        lhs_names=lhs, rhs_names=rhs, boundary_names=(),
        ratio=acc.ratio(lhs, rhs),
        meta={"alpha": alpha, "c1": c1, "c2": c2, "log_shift": acc.log_shift},
    )


# -- tau-weighted parabolic estimate (evaluate_lemma31) --------------------------------------

def evaluate_lemma31(problem: FadeProblem, u, d: PseudoconvexField,
                     params: WeightParams, tau: float) -> CarlemanReport:
    """Parabolic Carleman estimate with the s-power ladder shifted by tau.

    Volume quadrature runs over cells where the discrete operator is
    defined (one cell ring inside the cylinder); rhs_bdy is the raw face
    integral s^tau int_{dQ} (|grad_{x,t} u|^2 + u^2).
    """
    if params.family is not WeightFamily.REGULAR:
        raise FamilyMismatchError("evaluate_lemma31 needs the REGULAR weight family")
    if tau != int(tau) or not -4 <= tau <= 0:
        raise ParameterError(f"tau must be an integer in [-4, 0], got {tau}")
    grid = _grid_of(u)
    vals = _values_of(u, grid)
    full = tuple(slice(0, n) for n in grid.shape)
    mask = _window_cells_mask(grid, full, need_operator=True)

    lt = apply_L_tilde(problem, vals).values
    dt_u = _time_gradient(vals, grid)
    grads = _space_gradients(vals, grid)
    hess = _second_gradients(vals, grid)

    phi_c = _phi_at_centers(grid, d, params)
    s, lam = params.s, params.lam
    acc = _WeightedAccumulator(2.0 * s * phi_c, mask, _cell_volume(grid))
    w_low = s ** (tau - 1.0) * lam**tau * phi_c ** (tau - 1.0)
    acc.add("lhs_dt", w_low * _centers(dt_u) ** 2)
    acc.add("lhs_hess", w_low * _centers(_sq_sum(hess)))
    acc.add("lhs_grad", s ** (tau + 1.0) * lam ** (tau + 2.0)
            * phi_c ** (tau + 1.0) * _centers(_sq_sum(grads)))
    acc.add("lhs_u", s ** (tau + 3.0) * lam ** (tau + 4.0)
            * phi_c ** (tau + 3.0) * _centers(vals) ** 2)
    acc.add("rhs_source", (s * lam * phi_c) ** tau * _centers(lt) ** 2)

    spacings = grid.space_spacings + (grid.time.dt,)
    full_grad_sq = _sq_sum(grads) + dt_u * dt_u + vals * vals
    bdy = 0.0
    for axis in range(grid.dim + 1):
        for at_start in (True, False):
            bdy += _face_integral(full_grad_sq, full, spacings, axis, at_start)
    terms = acc.terms()
    terms["rhs_bdy"] = _raw_term(s**tau * bdy)

    lhs = ("lhs_dt", "lhs_hess", "lhs_grad", "lhs_u")
    return CarlemanReport(
        s=s, lam=lam, beta=params.beta, family=params.family.value, terms=terms,
        lhs_names=lhs, rhs_names=("rhs_source",), boundary_names=("rhs_bdy",),
        ratio=acc.ratio(lhs, ("rhs_source",)),
        meta={"tau": tau, "log_shift": acc.log_shift},
    )


# -- rational-order ladder (evaluate_thm13) ----------------------------------------------------------------

@dataclass(frozen=True)
class ExponentLadder:
    """Index set and s-power table of the rational-order estimate.

    j runs over j1..j1+2k-1 on the left (orders j/k), j1..j1+k-1 on the
    right; weights are powers of (s phi2).  j1 = -(k-1)/2 for odd k and
    1 - k/2 for even k.
    """

    k: int
    m: int
    j1: int
    lhs_js: tuple[int, ...]
    rhs_js: tuple[int, ...]
    lhs_exponents: tuple[Fraction, ...]
    rhs_exponents: tuple[Fraction, ...]
    grad_exponent: Fraction
    hess_exponent: Fraction

    @property
    def alpha(self) -> Fraction:
        return Fraction(self.m, self.k)


def exponent_ladder(k: int, m: int) -> ExponentLadder:
    """Build the (j, weight) table for order m/k; requires m/k <= 3/4 in
    lowest terms (order-out-of-range otherwise)."""
    if k < 2 or m < 1:
        raise ParameterError(f"need k >= 2 and m >= 1, got k={k}, m={m}")
    if math.gcd(m, k) != 1:
        raise ParameterError(f"order {m}/{k} must be in lowest terms")
    if Fraction(m, k) > Fraction(3, 4):
        raise HypothesisViolationError(
            f"rational order {m}/{k} violates the hypothesis m/k <= 3/4"
        )
    j1 = -((k - 1) // 2) if k % 2 else 1 - k // 2
    lhs_js = tuple(range(j1, j1 + 2 * k))
    rhs_js = tuple(range(j1, j1 + k))
    lhs_exp = tuple(Fraction(-4 * (j - j1), k) + 3 for j in lhs_js)
    rhs_exp = tuple(Fraction(-4 * (j - j1), k) for j in rhs_js)
    grad = Fraction(4 * j1, k) + 1
    hess = Fraction(4 * j1, k) - 1
    return ExponentLadder(k, m, j1, lhs_js, rhs_js, lhs_exp, rhs_exp, grad, hess)


def _fractional_field(vals: np.ndarray, j: int, k: int, dt: float,
                      cache: dict) -> np.ndarray:
    """D_t^{j/k} of a field under zero initial values.

    Negative j: product-trapezoid R-L integral; 0 < j < k: R-L
    derivative; j >= k: classical time derivative of the j-k field
    (legitimate because the data vanish at t = 0).
    """
    if j in cache:
        return cache[j]
    if j == 0:
        out = vals
    elif j < 0:
        out = rl_integral_array(vals, -j / k, dt)
    elif j < k:
        out = rl_derivative_array(vals, j / k, dt)
    else:
        base = _fractional_field(vals, j - k, k, dt, cache)
        out = np.gradient(base, dt, axis=-1, edge_order=2)
    cache[j] = out
    return out


def evaluate_thm13(problem: FadeProblem, u, d: PseudoconvexField,
                   params: WeightParams, ladder: ExponentLadder,
                   mu_low: float, mu_high: float) -> CarlemanReport:
    """Rational-order estimate: fractional-derivative ladder on the left,
    source ladder plus cut-off leak term on the right.

    The cut-off chi0 is the smoothstep in phi2 between mu_low and
    mu_high; the leak term low_term = s * int |Dchi0|^2-type factors
    times sum_j (|grad_{x,t} u_j|^2 + u_j^2) e^{2 s phi2} enters the
    ratio denominator, while bdy_term stays raw and excluded.
    """
    if params.family is not WeightFamily.REGULAR:
        raise FamilyMismatchError("evaluate_thm13 needs the REGULAR weight family")
    grid = _grid_of(u)
    vals = _values_of(u, grid)
    if len(problem.alphas) != 1 or abs(problem.alphas[0] - ladder.m / ladder.k) > 1e-12:
        raise ParameterError(
            f"problem must carry the single fractional order {ladder.m}/{ladder.k}"
        )
    scale = float(np.max(np.abs(vals))) or 1.0
    if float(np.max(np.abs(vals[..., 0]))) > 1e-10 * scale:
        raise HypothesisViolationError("evaluate_thm13 requires u(., 0) = 0")

    dt = grid.time.dt
    cache: dict[int, np.ndarray] = {}
    u_fields = {j: _fractional_field(vals, j, ladder.k, dt, cache)
                for j in ladder.lhs_js}
    f_vals = apply_L(problem, vals).values
    f_cache: dict[int, np.ndarray] = {}
    f_fields = {j: _fractional_field(f_vals, j, ladder.k, dt, f_cache)
                for j in ladder.rhs_js}

    grads = _space_gradients(vals, grid)
    hess = _second_gradients(vals, grid)

    full = tuple(slice(0, n) for n in grid.shape)
    mask = _window_cells_mask(grid, full, need_operator=True)
    phi_c = _phi_at_centers(grid, d, params)
    s = params.s
    sphi = s * phi_c
    spacings = grid.space_spacings + (grid.time.dt,)
    chi_c = cutoff(phi_c, mu_low, mu_high, spacings)

    acc = _WeightedAccumulator(2.0 * s * phi_c, mask, _cell_volume(grid))
    chi_sq = chi_c.chi**2
    lhs_names = []
    for j, e in zip(ladder.lhs_js, ladder.lhs_exponents):
        name = f"lhs_dt_{j}"
        acc.add(name, chi_sq * sphi ** float(e) * _centers(u_fields[j]) ** 2)
        lhs_names.append(name)
    acc.add("lhs_grad", chi_sq * sphi ** float(ladder.grad_exponent)
            * _centers(_sq_sum(grads)))
    acc.add("lhs_hess", chi_sq * sphi ** float(ladder.hess_exponent)
            * _centers(_sq_sum(hess)))
    lhs_names += ["lhs_grad", "lhs_hess"]

    rhs_names = []
    for j, e in zip(ladder.rhs_js, ladder.rhs_exponents):
        name = f"rhs_F_{j}"
        acc.add(name, chi_sq * sphi ** float(e) * _centers(f_fields[j]) ** 2)
        rhs_names.append(name)

    n_ax = grid.dim + 1
    dchi_sq = _sq_sum([chi_c.derivative(a) for a in range(n_ax)])
    d2chi = []
    for a in range(n_ax):
        d2phi = np.gradient(
            np.gradient(phi_c, spacings[a], axis=a, edge_order=2),
            spacings[a], axis=a, edge_order=2)
        d2chi.append(chi_c.second_derivative(a, a, d2phi))
    leak_factor = dchi_sq + _sq_sum(d2chi)
    u_energy_c = np.zeros_like(phi_c)
    for j in ladder.lhs_js:
        uj = u_fields[j]
        u_energy_c += (_centers(_sq_sum(_space_gradients(uj, grid)))
                       + _centers(_time_gradient(uj, grid)) ** 2
                       + _centers(uj) ** 2)
    acc.add("low_term", s * leak_factor * u_energy_c)
    rhs_names.append("low_term")

    chi_n = cutoff(_phi_at_nodes(grid, d, params), mu_low, mu_high, spacings)
    u_energy_n = np.zeros(grid.shape)
    for j in ladder.lhs_js:
        uj = u_fields[j]
        u_energy_n += (_sq_sum(_space_gradients(uj, grid))
                       + _time_gradient(uj, grid) ** 2 + uj * uj)
    bdy_field = chi_n.chi**2 * u_energy_n
    bdy = 0.0
    for axis in range(n_ax):
        for at_start in (True, False):
            bdy += _face_integral(bdy_field, full, spacings, axis, at_start)

    terms = acc.terms()
    terms["bdy_term"] = _raw_term(bdy)
    return CarlemanReport(
        s=s, lam=params.lam, beta=params.beta, family=params.family.value, terms=terms,
        lhs_names=tuple(lhs_names), rhs_names=tuple(rhs_names),
        boundary_names=("bdy_term",),
        ratio=acc.ratio(lhs_names, rhs_names),
        meta={"k": ladder.k, "m": ladder.m, "j1": ladder.j1,
              "mu_low": mu_low, "mu_high": mu_high, "log_shift": acc.log_shift},
    )


# -- sweeps ------------------------------------------------------------------------

@dataclass(frozen=True)
class SweepResult:
    """Reports over an s-sweep plus the empirical constant C_hat = max
    ratio and the growth diagnostic last/first; both None when every
    ratio is undefined (zero data)."""

    s_values: tuple[float, ...]
    reports: tuple[CarlemanReport, ...]
    ratios: tuple[Optional[float], ...]
    c_hat: Optional[float]
    growth: Optional[float]


def sweep_s(evaluator: Callable[[float], CarlemanReport],
            s_values: Sequence[float]) -> SweepResult:
    """Evaluate an inequality over increasing s, in a thread pool sized
    by FRADE_THREADS; result order follows s_values regardless of
    scheduling."""
    s_values = tuple(float(s) for s in s_values)
    if not s_values:
        raise ParameterError("sweep needs at least one s value")
    if s_values[0] < 1.0:
        raise ParameterError("sweep s values must all be >= 1")
    if any(s2 <= s1 for s1, s2 in zip(s_values, s_values[1:])):
        raise ParameterError("s values must be strictly increasing")
    workers = thread_pool_size(len(s_values))
    if workers == 1:
        reports = [evaluator(s) for s in s_values]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            reports = list(pool.map(evaluator, s_values))
    ratios = tuple(r.ratio for r in reports)
    defined = [r for r in ratios if r is not None]
    c_hat = max(defined) if defined else None
    growth = None
    if ratios[0] is not None and ratios[-1] is not None and ratios[0] > 0:
        growth = ratios[-1] / ratios[0]
    return SweepResult(s_values, tuple(reports), ratios, c_hat, growth)


def _grid_of(u) -> SpaceTimeGrid:
    if isinstance(u, GridFunction):
        return u.grid
    raise ParameterError("u must be a GridFunction")


def _values_of(u, grid: SpaceTimeGrid) -> np.ndarray:
    return u.values
