"""Pseudoconvexity functions, Carleman weight families, level sets, cut-offs.

Two weight families are supported, both of the form phi = e^{lam * psi}:

* SUB (valid only for leading order alpha1 < 1/2):
      psi1(x, t) = d(x) - beta * t^{2 - 2*alpha1},
  strictly decreasing in t, which is what lets fractional derivatives be
  absorbed into classical ones inside sub-level regions.

* REGULAR:
      psi2(x, t) = d(x) - beta * (t - t0)^2 + c0,
  with c0 = max(beta*t0^2, beta*(T-t0)^2) so that psi2 >= 0 and phi2 >= 1
  everywhere on Omega x [0, T]; the time maximum sits at t = t0.

The pseudoconvexity function d is positive in Omega, has a nonvanishing
gradient on the closure, and vanishes on the unobserved part of the
boundary.  Explicit constructions only: linear d for 1-D one-sided
observation, shifted paraboloid |x - x0|^2 - rho0 (x0 outside) when the
whole boundary is observed.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .errors import (
    FamilyMismatchError,
    GeometryError,
    GridError,
    ParameterError,
)
from .grids import Domain, GridFunction, SpaceTimeGrid


class WeightFamily(enum.Enum):
    SUB = "sub"
    REGULAR = "regular"


class BetaRule(enum.Enum):
    SUB_CAUCHY = "sub_cauchy"
    EPS = "eps"
    ISP = "isp"


# -- pseudoconvexity function -------------------------------------------------

class PseudoconvexField:
    """Callable d with analytic gradient/hessian and grid sampling.

    kind 'linear': d = sign * (x - offset); kind 'paraboloid':
    d = |x - x0|^2 - rho0.
    """

    def __init__(self, domain: Domain, kind: str, *, sign=0.0, offset=0.0,
                 x0=None, rho0=0.0):
        self.domain = domain
        self.kind = kind
        self._sign = sign
        self._offset = offset
        self._x0 = None if x0 is None else np.asarray(x0, dtype=float)
        self._rho0 = rho0

    def __call__(self, *coords):
        coords = [np.asarray(c, dtype=float) for c in coords]
        if len(coords) != self.domain.dim:
            raise GeometryError(f"expected {self.domain.dim} coordinate arrays")
        if self.kind == "linear":
            return self._sign * (coords[0] - self._offset)
        sq = sum((c - x0c) ** 2 for c, x0c in zip(coords, self._x0))
        return sq - self._rho0

    def gradient(self, *coords):
        coords = [np.asarray(c, dtype=float) for c in coords]
        if self.kind == "linear":
            return (np.broadcast_to(self._sign, coords[0].shape).copy(),)
        return tuple(2.0 * (c - x0c) for c, x0c in zip(coords, self._x0))

    def gradient_norm(self, *coords):
        return np.sqrt(sum(g * g for g in self.gradient(*coords)))

    def hessian(self, i: int, j: int, *coords):
        shape = np.asarray(coords[0], dtype=float).shape
        if self.kind == "linear":
            return np.zeros(shape)
        return np.full(shape, 2.0) if i == j else np.zeros(shape)

    def sample(self, grid: SpaceTimeGrid) -> np.ndarray:
        """d on the grid's space nodes (shape = grid.space_shape)."""
        if grid.domain != self.domain:
            raise GeometryError("grid domain differs from the field's domain")
        return np.broadcast_to(self(*grid.space_meshes()), grid.space_shape).copy()

    def sup_norm(self, n: int = 2001) -> float:
        """Grid max of |d| over the closure of Omega_1."""
        ext = self.domain.omega1_extents()
        if self.domain.dim == 1:
            xs = np.linspace(ext[0], ext[1], n)
            return float(np.max(np.abs(self(xs))))
        side = max(64, int(math.isqrt(n)))
        xs = np.linspace(ext[0], ext[1], side)
        ys = np.linspace(ext[2], ext[3], side)
        xm, ym = np.meshgrid(xs, ys, indexing="ij")
        return float(np.max(np.abs(self(xm, ym))))


def build_d(domain: Domain, x0=None) -> PseudoconvexField:
    """Explicit pseudoconvexity function for the supported geometries.

    1-D with Gamma one endpoint: linear, growing toward Gamma.  Full
    observed boundary: d = |x - x0|^2 - rho0 with x0 outside the closure
    (default: shifted left of the domain by one width) and rho0 = half
    the squared distance from x0, keeping d strictly positive on the
    closure.  A proper sub-boundary in 2-D is not constructible here.
    """
    if domain.dim == 2 and not domain.gamma_is_full_boundary:
        raise GeometryError("2-D proper observation sub-boundary is unsupported")
    if domain.dim == 1 and not domain.gamma_is_full_boundary:
        if domain.gamma == ("right",):
            d = PseudoconvexField(domain, "linear", sign=1.0, offset=domain.x_lo)
        elif domain.gamma == ("left",):
            d = PseudoconvexField(domain, "linear", sign=-1.0, offset=domain.x_hi)
        else:  # pragma: no cover - Domain validation leaves no other case
            raise GeometryError(f"unsupported gamma {domain.gamma}")
    else:
        if x0 is None:
            pairs = domain.extent_pairs()
            x0 = [pairs[0][0] - (pairs[0][1] - pairs[0][0])]
            x0 += [0.5 * (lo + hi) for lo, hi in pairs[1:]]
        x0 = np.atleast_1d(np.asarray(x0, dtype=float))
        if len(x0) != domain.dim:
            raise GeometryError(f"x0 must have {domain.dim} components")
        dist2 = 0.0
        for c, (lo, hi) in zip(x0, domain.extent_pairs()):
            dist2 += min(abs(c - lo), abs(c - hi)) ** 2 if not lo <= c <= hi else 0.0
        inside = all(lo <= c <= hi for c, (lo, hi) in zip(x0, domain.extent_pairs()))
        if inside or dist2 <= 0.0:
            raise GeometryError("x0 must lie strictly outside the domain closure")
        d = PseudoconvexField(domain, "paraboloid", x0=x0, rho0=0.5 * dist2)
    _check_d(domain, d)
    return d


def _check_d(domain: Domain, d: PseudoconvexField, n: int = 65) -> None:
    """Verify d > 0 in Omega, |grad d| > 0 on the closure, d = 0 off Gamma."""
    if domain.dim == 1:
        xs = np.linspace(domain.x_lo, domain.x_hi, n)
        interior = (xs[1:-1],)
        closure = (xs,)
        face_points = {"left": (np.array([domain.x_lo]),),
                       "right": (np.array([domain.x_hi]),)}
    else:
        xs = np.linspace(domain.x_lo, domain.x_hi, n)
        ys = np.linspace(domain.y_lo, domain.y_hi, n)
        xm, ym = np.meshgrid(xs, ys, indexing="ij")
        interior = (xm[1:-1, 1:-1], ym[1:-1, 1:-1])
        closure = (xm, ym)
        face_points = {
            "left": (np.full(n, domain.x_lo), ys),
            "right": (np.full(n, domain.x_hi), ys),
            "bottom": (xs, np.full(n, domain.y_lo)),
            "top": (xs, np.full(n, domain.y_hi)),
        }
    if not np.all(d(*interior) > 0):
        raise GeometryError("d must be positive inside the domain")
    if not np.all(d.gradient_norm(*closure) > 0):
        raise GeometryError("grad d must not vanish on the closure")
    for face in domain.faces:
        if face not in domain.gamma:
            if not np.allclose(d(*face_points[face]), 0.0, atol=1e-12):
                raise GeometryError(f"d must vanish on unobserved face {face!r}")


# -- weight parameters and evaluation ------------------------------------------

@dataclass(frozen=True)
class WeightParams:
    """Parameters of a Carleman weight e^{lam * psi}.

    c0 is only meaningful for the REGULAR family and must equal
    max(beta*t0^2, beta*(T-t0)^2); alpha1 (leading fractional order) is
    only meaningful for SUB and must satisfy alpha1 < 1/2 there.
    """

    family: WeightFamily
    lam: float
    s: float
    beta: float
    horizon: float
    alpha1: Optional[float] = None
    t0: Optional[float] = None
    c0: Optional[float] = None

    def __post_init__(self):
        if self.lam < 1.0:
            raise ParameterError(f"lambda must be >= 1, got {self.lam}")
        if self.s < 1.0:
            raise ParameterError(f"s must be >= 1, got {self.s}")
        if self.beta <= 0.0:
            raise ParameterError(f"beta must be positive, got {self.beta}")
        if self.horizon <= 0.0:
            raise ParameterError(f"horizon must be positive, got {self.horizon}")
        if self.family is WeightFamily.SUB:
            if self.alpha1 is None or not 0.0 < self.alpha1 < 0.5:
                raise FamilyMismatchError(
                    f"SUB family needs leading order in (0, 1/2), got {self.alpha1}"
                )
        else:
            if self.t0 is None or not 0.0 < self.t0 < self.horizon:
                raise FamilyMismatchError(
                    f"REGULAR family needs t0 inside (0, horizon), got {self.t0}"
                )
            want = max(self.beta * self.t0**2, self.beta * (self.horizon - self.t0) ** 2)
            if self.c0 is None or not math.isclose(self.c0, want, rel_tol=1e-12):
                raise FamilyMismatchError(
                    f"c0 must equal max(beta*t0^2, beta*(T-t0)^2) = {want}, got {self.c0}"
                )

    def with_s(self, s: float) -> "WeightParams":
        return replace(self, s=s)


def regular_params(lam: float, s: float, beta: float, horizon: float,
                   t0: float) -> WeightParams:
    """REGULAR-family params with c0 filled in from its defining formula."""
    c0 = max(beta * t0**2, beta * (horizon - t0) ** 2)
    return WeightParams(WeightFamily.REGULAR, lam, s, beta, horizon, t0=t0, c0=c0)


def psi1(d_val, t, params: WeightParams):
    """Sub-diffusion phase d(x) - beta * t^{2-2*alpha1}."""
    if params.family is not WeightFamily.SUB:
        raise FamilyMismatchError("psi1 needs SUB-family parameters")
    d_val = np.asarray(d_val, dtype=float)
    t = np.asarray(t, dtype=float)
    return d_val - params.beta * t ** (2.0 - 2.0 * params.alpha1)

def phi1(d_val, t, params: WeightParams):
    """Sub-diffusion weight e^{lam * psi1}."""
    return np.exp(params.lam * psi1(d_val, t, params))


def psi2(d_val, t, params: WeightParams):
    """Regular phase d(x) - beta * (t - t0)^2 + c0 (nonnegative)."""
    if params.family is not WeightFamily.REGULAR:
        raise FamilyMismatchError("psi2 needs REGULAR-family parameters")
    d_val = np.asarray(d_val, dtype=float)
    t = np.asarray(t, dtype=float)
    return d_val - params.beta * (t - params.t0) ** 2 + params.c0


def phi2(d_val, t, params: WeightParams):
    """Regular weight e^{lam * psi2}, >= 1 wherever d >= 0."""
    return np.exp(params.lam * psi2(d_val, t, params))


def psi(d_val, t, params: WeightParams):
    return psi1(d_val, t, params) if params.family is WeightFamily.SUB \
        else psi2(d_val, t, params)


def phi(d_val, t, params: WeightParams):
    return np.exp(params.lam * psi(d_val, t, params))


def dpsi_dt(d_val, t, params: WeightParams):
    """Time derivative of the phase (independent of d)."""
    t = np.asarray(t, dtype=float)
    if params.family is WeightFamily.SUB:
        e = 2.0 - 2.0 * params.alpha1
        return np.broadcast_to(-params.beta * e * t ** (e - 1.0),
                               np.broadcast(np.asarray(d_val), t).shape).copy()
    return np.broadcast_to(-2.0 * params.beta * (t - params.t0),
                           np.broadcast(np.asarray(d_val), t).shape).copy()


# -- beta selection -------------------------------------------------------------

def choose_beta(rule: BetaRule, d_norm: float, horizon: float, *,
                alpha1: Optional[float] = None, eps: Optional[float] = None,
                t0: Optional[float] = None) -> float:
    """Slope beta satisfying the family's admissibility window.

    SUB_CAUCHY: midpoint of the open interval
        (||d|| / T^{2-2a1},  ||d|| / (T/2)^{2-2a1})
    so that beta*(T/2)^{2-2a1} < ||d|| < beta*T^{2-2a1}.
    EPS: midpoint in 1/beta of [eps^2/||d||, 2eps^2/||d||], i.e.
        beta = ||d|| / (1.5 eps^2), giving beta*eps^2 <= ||d|| <= 2*beta*eps^2.
    ISP: beta = ||d|| / delta^2 with delta = min(t0, T - t0).
    """
    if d_norm <= 0 or horizon <= 0:
        raise ParameterError("need positive ||d|| and horizon")
    if rule is BetaRule.SUB_CAUCHY:
        if alpha1 is None or not 0.0 < alpha1 < 0.5:
            raise ParameterError(f"SUB_CAUCHY needs alpha1 in (0, 1/2), got {alpha1}")
        e = 2.0 - 2.0 * alpha1
        lo = d_norm / horizon**e
        hi = d_norm / (0.5 * horizon) ** e
        return 0.5 * (lo + hi)
    if rule is BetaRule.EPS:
        if eps is None or not 0.0 < eps:
            raise ParameterError(f"EPS rule needs eps > 0, got {eps}")
        return d_norm / (1.5 * eps**2)
    if rule is BetaRule.ISP:
        if t0 is None or not 0.0 < t0 < horizon:
            raise ParameterError(f"ISP rule needs t0 in (0, horizon), got {t0}")
        delta = min(t0, horizon - t0)
        return d_norm / delta**2
    raise ParameterError(f"unknown beta rule {rule!r}")


# -- level sets -----------------------------------------------------------------

@dataclass(frozen=True)
class LevelSetSpec:
    """Increasing weight thresholds mu_1 < ... derived from (lam, ||d||, N).

    SUB:     mu_k = exp(lam * ((k/N)||d|| - beta*(T/2)^{2-2a1}/N))
    REGULAR: mu_k = exp(lam * ((k/N)||d|| - beta*eps^2/N + c0))

    Membership is by strict comparison: the k-th super-level region is
    {phi > mu_k}, so regions shrink as k grows.
    """

    family: WeightFamily
    n_levels: int
    mu: tuple[float, ...]

    def region_mask(self, phi_values: np.ndarray, k: int) -> np.ndarray:
        if not 1 <= k <= len(self.mu):
            raise ParameterError(f"level index {k} outside 1..{len(self.mu)}")
        return np.asarray(phi_values) > self.mu[k - 1]


def level_values(params: WeightParams, d_norm: float, n_levels: int = 4, *,
                 n_total: Optional[int] = None,
                 eps: Optional[float] = None) -> LevelSetSpec:
    """First n_levels thresholds mu_k of the N-step level ladder.

    n_total is the ladder length N (defaults to n_levels); requiring
    N > 4 guards against degenerate ladders.
    """
    N = n_levels if n_total is None else n_total
    if N <= 4:
        raise ParameterError(f"need N > 4 levels, got {N}")
    if not 1 <= n_levels <= N:
        raise ParameterError(f"n_levels must lie in 1..{N}")
    if d_norm <= 0:
        raise ParameterError("need positive ||d||")
    ks = np.arange(1, n_levels + 1, dtype=float)
    if params.family is WeightFamily.SUB:
        drop = params.beta * (0.5 * params.horizon) ** (2.0 - 2.0 * params.alpha1) / N
        mu = np.exp(params.lam * (ks / N * d_norm - drop))
    else:
        if eps is None or eps <= 0:
            raise ParameterError("REGULAR level values need eps > 0")
        mu = np.exp(params.lam * (ks / N * d_norm - params.beta * eps**2 / N + params.c0))
    return LevelSetSpec(params.family, n_levels, tuple(float(m) for m in mu))


# -- smoothstep cut-offs ---------------------------------------------------------

def smoothstep(r):
    """C^2 quintic ramp 6r^5 - 15r^4 + 10r^3 clipped to [0, 1]."""
    r = np.clip(np.asarray(r, dtype=float), 0.0, 1.0)
    return r**3 * (r * (6.0 * r - 15.0) + 10.0)


def smoothstep_d1(r):
    r = np.asarray(r, dtype=float)
    out = 30.0 * r**2 * (r - 1.0) ** 2
    return np.where((r <= 0.0) | (r >= 1.0), 0.0, out)


def smoothstep_d2(r):
    r = np.asarray(r, dtype=float)
    out = 60.0 * r * (r - 1.0) * (2.0 * r - 1.0)
    return np.where((r <= 0.0) | (r >= 1.0), 0.0, out)


@dataclass(frozen=True)
class CutoffField:
    """Cut-off chi(phi) with chain-rule derivatives on a sampled lattice.

    chi = S((phi - mu_low)/(mu_high - mu_low)); first and second
    derivatives combine the analytic smoothstep derivatives with the
    supplied discrete derivatives of phi along each axis.
    """

    chi: np.ndarray
    _s1: np.ndarray
    _s2: np.ndarray
    _dphi: tuple[np.ndarray, ...]
    _span: float

    def derivative(self, axis: int) -> np.ndarray:
        return self._s1 * self._dphi[axis] / self._span

    def second_derivative(self, axis_i: int, axis_j: int,
                          d2phi: np.ndarray) -> np.ndarray:
        return (self._s2 * self._dphi[axis_i] * self._dphi[axis_j] / self._span**2
                + self._s1 * d2phi / self._span)


def cutoff(phi_values: np.ndarray, mu_low: float, mu_high: float,
           spacings: tuple[float, ...]) -> CutoffField:
    """Smoothstep cut-off in the weight: 1 where phi >= mu_high, 0 where
    phi <= mu_low; phi-derivatives are discrete (second-order gradient)."""
    if not mu_high > mu_low:
        raise ParameterError(f"need mu_low < mu_high, got {mu_low} >= {mu_high}")
    phi_values = np.asarray(phi_values, dtype=float)
    if phi_values.ndim != len(spacings):
        raise GridError("spacings must list one spacing per axis")
    r = (phi_values - mu_low) / (mu_high - mu_low)
    dphi = tuple(np.gradient(phi_values, h, axis=a, edge_order=2)
                 for a, h in enumerate(spacings))
    return CutoffField(smoothstep(r), smoothstep_d1(r), smoothstep_d2(r),
                       dphi, mu_high - mu_low)


def time_cutoff_eta(t, t0: float, delta: float, horizon: float):
    """Quintic time plateau: 1 on [t0-delta/2, t0+delta/2], 0 outside
    [t0-delta, t0+delta], smoothstep shoulders in between."""
    if not 0.0 < delta < min(t0, horizon - t0):
        raise ParameterError(
            f"need 0 < delta < min(t0, T - t0) = {min(t0, horizon - t0)}, got {delta}"
        )
    t = np.asarray(t, dtype=float)
    up = smoothstep((t - (t0 - delta)) / (0.5 * delta))
    down = smoothstep(((t0 + delta) - t) / (0.5 * delta))
    return np.minimum(up, down)


def weight_field(grid: SpaceTimeGrid, d: PseudoconvexField,
                 params: WeightParams) -> tuple[GridFunction, GridFunction]:
    """(psi, phi) sampled on a space-time grid."""
    d_vals = d.sample(grid)[..., None]
    t = grid.time.nodes
    ps = psi(d_vals, t, params)
    return GridFunction(grid, ps), GridFunction(grid, np.exp(params.lam * ps))
