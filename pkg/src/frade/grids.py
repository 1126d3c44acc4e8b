"""Grids, domains and grid-sampled fields.

Everything downstream works on uniform tensor grids: a :class:`TimeGrid`
over [0, T] and a :class:`SpaceTimeGrid` coupling it with a 1-D interval
or a 2-D rectangle.  Fields are stored as plain ndarrays with the time
axis last, wrapped in :class:`TimeSeries` / :class:`GridFunction` for
shape checking and CSV export.  Instances are treated as immutable after
construction; operations return new objects.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd
from typing import Optional

import numpy as np

from .errors import GridError, ParameterError

FACES_1D = ("left", "right")
FACES_2D = ("left", "right", "bottom", "top")


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid 0 = t_0 < ... < t_{n-1} = horizon."""

    horizon: float
    n: int

    def __post_init__(self):
        if not (self.horizon > 0 and np.isfinite(self.horizon)):
            raise GridError(f"horizon must be positive and finite, got {self.horizon}")
        if self.n < 2:
            raise GridError(f"need at least 2 time nodes, got {self.n}")

    @property
    def dt(self) -> float:
        return self.horizon / (self.n - 1)

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(0.0, self.horizon, self.n)

    def index_of(self, t: float, tol: float = 1e-9) -> int:
        """Index of the node closest to t; error if t is not a node."""
        i = int(round(t / self.dt))
        if i < 0 or i >= self.n or abs(i * self.dt - t) > tol * max(1.0, self.horizon):
            raise GridError(f"t={t} is not a grid node (dt={self.dt})")
        return i

    def refined(self, factor: int = 2) -> "TimeGrid":
        return TimeGrid(self.horizon, (self.n - 1) * factor + 1)


@dataclass(frozen=True)
class FractionalOrder:
    """Fractional differentiation order, optionally a rational m/k.

    The rational form is required by the exponent-ladder machinery, which
    needs the exact denominator; plain floats are fine everywhere else.
    """

    value: float
    rational: Optional[tuple[int, int]] = None

    def __post_init__(self):
        if not np.isfinite(self.value):
            raise ParameterError("order must be finite")
        if self.rational is not None:
            m, k = self.rational
            if k <= 0 or m == 0:
                raise ParameterError(f"rational order needs k > 0 and m != 0, got {m}/{k}")
            if gcd(abs(m), k) != 1:
                raise ParameterError(f"rational order {m}/{k} must be in lowest terms")
            if abs(m / k - self.value) > 1e-12:
                raise ParameterError(f"value {self.value} does not match {m}/{k}")

    @classmethod
    def from_rational(cls, m: int, k: int) -> "FractionalOrder":
        g = gcd(abs(m), k)
        if g > 1:
            raise ParameterError(f"rational order {m}/{k} must be in lowest terms")
        return cls(m / k, (m, k))

    def as_fraction(self) -> Fraction:
        if self.rational is None:
            raise ParameterError("order has no exact rational form")
        return Fraction(*self.rational)


def as_order_value(alpha) -> float:
    """Accept a float or FractionalOrder and return the float value."""
    if isinstance(alpha, FractionalOrder):
        return alpha.value
    return float(alpha)


@dataclass(frozen=True)
class Domain:
    """Interval (dim=1) or axis-aligned rectangle (dim=2) with a tagged
    observation sub-boundary Gamma and an enlarged hold-all Omega_1.

    gamma lists boundary faces ("left", "right" and for dim=2 "bottom",
    "top").  omega1 stores the enlarged extents used for the sup norm of
    the pseudoconvexity function; by default Omega is dilated about its
    center by `omega1_dilation`.
    """

    x_lo: float
    x_hi: float
    gamma: tuple[str, ...]
    y_lo: Optional[float] = None
    y_hi: Optional[float] = None
    omega1: Optional[tuple[float, ...]] = None
    omega1_dilation: float = 1.2

    def __post_init__(self):
        if not self.x_hi > self.x_lo:
            raise GridError(f"empty x extent [{self.x_lo}, {self.x_hi}]")
        if (self.y_lo is None) != (self.y_hi is None):
            raise GridError("y_lo and y_hi must be given together")
        if self.y_lo is not None and not self.y_hi > self.y_lo:
            raise GridError(f"empty y extent [{self.y_lo}, {self.y_hi}]")
        faces = FACES_2D if self.dim == 2 else FACES_1D
        if not self.gamma:
            raise GridError("gamma must name at least one boundary face")
        for f in self.gamma:
            if f not in faces:
                raise GridError(f"unknown boundary face {f!r} for dim={self.dim}")
        if len(set(self.gamma)) != len(self.gamma):
            raise GridError("duplicate faces in gamma")
        if self.omega1 is not None:
            ext = self.omega1
            if len(ext) != 2 * self.dim:
                raise GridError("omega1 extents must match the dimension")
            if not (ext[0] <= self.x_lo and ext[1] >= self.x_hi):
                raise GridError("omega1 must contain the domain")
            if self.dim == 2 and not (ext[2] <= self.y_lo and ext[3] >= self.y_hi):
                raise GridError("omega1 must contain the domain")
        if self.omega1_dilation <= 1.0:
            raise GridError("omega1_dilation must exceed 1")

    @property
    def dim(self) -> int:
        return 1 if self.y_lo is None else 2

    @property
    def faces(self) -> tuple[str, ...]:
        return FACES_2D if self.dim == 2 else FACES_1D

    @property
    def gamma_is_full_boundary(self) -> bool:
        return set(self.gamma) == set(self.faces)

    def omega1_extents(self) -> tuple[float, ...]:
        """Extents of the enlarged domain Omega_1 (contains Omega strictly)."""
        if self.omega1 is not None:
            return self.omega1
        out = []
        for lo, hi in self.extent_pairs():
            c, h = 0.5 * (lo + hi), 0.5 * (hi - lo)
            out += [c - self.omega1_dilation * h, c + self.omega1_dilation * h]
        return tuple(out)

    def extent_pairs(self) -> list[tuple[float, float]]:
        pairs = [(self.x_lo, self.x_hi)]
        if self.dim == 2:
            pairs.append((self.y_lo, self.y_hi))
        return pairs


@dataclass(frozen=True)
class SpaceTimeGrid:
    """Tensor grid over Domain x [0, T]."""

    domain: Domain
    nx: int
    time: TimeGrid
    ny: Optional[int] = None

    def __post_init__(self):
        if self.nx < 2:
            raise GridError(f"need at least 2 x nodes, got {self.nx}")
        if (self.ny is None) != (self.domain.dim == 1):
            raise GridError("ny must be given exactly when the domain is 2-D")
        if self.ny is not None and self.ny < 2:
            raise GridError(f"need at least 2 y nodes, got {self.ny}")

    @property
    def dim(self) -> int:
        return self.domain.dim

    @property
    def dx(self) -> float:
        return (self.domain.x_hi - self.domain.x_lo) / (self.nx - 1)

    @property
    def dy(self) -> float:
        if self.ny is None:
            raise GridError("1-D grid has no dy")
        return (self.domain.y_hi - self.domain.y_lo) / (self.ny - 1)

    @property
    def x(self) -> np.ndarray:
        return np.linspace(self.domain.x_lo, self.domain.x_hi, self.nx)

    @property
    def y(self) -> np.ndarray:
        if self.ny is None:
            raise GridError("1-D grid has no y nodes")
        return np.linspace(self.domain.y_lo, self.domain.y_hi, self.ny)

    @property
    def space_shape(self) -> tuple[int, ...]:
        return (self.nx,) if self.dim == 1 else (self.nx, self.ny)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.space_shape + (self.time.n,)

    @property
    def space_spacings(self) -> tuple[float, ...]:
        return (self.dx,) if self.dim == 1 else (self.dx, self.dy)

    def space_meshes(self) -> tuple[np.ndarray, ...]:
        """Coordinate arrays broadcastable to space_shape."""
        if self.dim == 1:
            return (self.x,)
        return np.meshgrid(self.x, self.y, indexing="ij")

    def meshes(self) -> tuple[np.ndarray, ...]:
        """Coordinate arrays broadcastable to shape (space..., time)."""
        t = self.time.nodes
        if self.dim == 1:
            return (self.x[:, None], t[None, :])
        xm, ym = self.space_meshes()
        return (xm[:, :, None], ym[:, :, None], t[None, None, :])

    def interior_space_mask(self) -> np.ndarray:
        m = np.zeros(self.space_shape, dtype=bool)
        if self.dim == 1:
            m[1:-1] = True
        else:
            m[1:-1, 1:-1] = True
        return m

    def refined(self, factor: int = 2) -> "SpaceTimeGrid":
        return SpaceTimeGrid(
            self.domain,
            (self.nx - 1) * factor + 1,
            self.time.refined(factor),
            None if self.ny is None else (self.ny - 1) * factor + 1,
        )


def _check_values(values: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    if values.shape != shape:
        raise GridError(f"values shape {values.shape} does not match grid {shape}")
    if not np.all(np.isfinite(values)):
        raise GridError("values contain non-finite entries")
    return values


@dataclass(frozen=True)
class TimeSeries:
    """Real samples on a TimeGrid."""

    grid: TimeGrid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "values", _check_values(self.values, (self.grid.n,)))

    def with_values(self, values: np.ndarray) -> "TimeSeries":
        return TimeSeries(self.grid, values)

    def rows(self):
        for t, v in zip(self.grid.nodes, self.values):
            yield (t, v)


@dataclass(frozen=True)
class GridFunction:
    """Real samples on a SpaceTimeGrid, axes (x[, y], t)."""

    grid: SpaceTimeGrid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "values", _check_values(self.values, self.grid.shape))

    def with_values(self, values: np.ndarray) -> "GridFunction":
        return GridFunction(self.grid, values)

    def time_slice(self, i: int) -> np.ndarray:
        return self.values[..., i]

    def rows(self):
        t = self.grid.time.nodes
        if self.grid.dim == 1:
            for ix, xv in enumerate(self.grid.x):
                for it, tv in enumerate(t):
                    yield (xv, tv, self.values[ix, it])
        else:
            for ix, xv in enumerate(self.grid.x):
                for iy, yv in enumerate(self.grid.y):
                    for it, tv in enumerate(t):
                        yield (xv, yv, tv, self.values[ix, iy, it])


def sample(grid: SpaceTimeGrid, fn) -> GridFunction:
    """Sample a callable fn(x[, y], t) on the grid (numpy-broadcastable)."""
    return GridFunction(grid, np.broadcast_to(fn(*grid.meshes()), grid.shape).copy())
