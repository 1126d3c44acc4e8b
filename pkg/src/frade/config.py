"""Experiment configuration: flat INI-style sections of key = value.

Schema (sections and keys; commas separate list entries, and field
values may be expressions over x[, y], t per :mod:`frade.expressions`):

[experiment]
  kind    forward | caputo-check | carleman-thm11 | carleman-lemma21 |
          carleman-lemma31 | carleman-thm13 | cauchy | isp | holder-fit
  seed    integer, default 0
  out     output directory, default "frade-out" (CLI --out overrides)

[domain]
  x_lo, x_hi        interval extents
  y_lo, y_hi        present only for 2-D runs
  gamma             observed faces, comma list of left/right[/bottom/top]

[grid]
  nx [, ny], nt     node counts, each >= 16
  horizon           final time T

[coefficients]
  diffusion         expression; 2-D: comma list a11, a22[, a12]
  drift             expression; 2-D: comma list b1, b2
  reaction          expression
  source            expression
  initial           expression over x[, y]
  boundary          expression
  frac_orders       comma list of orders in (0,1), strictly decreasing
  frac_coeffs       comma list of expressions, same length

[weights]           (carleman-* kinds)
  family            sub | regular
  lam               >= 1
  alpha1            leading order (sub family)
  t0                weight vertex time (regular family)
  beta              explicit slope, or
  beta_rule         sub-cauchy | eps | isp  (+ eps = ... when needed)
  s_values          comma list, increasing, >= 1

[carleman]          (kind-specific keys)
  fixture           expression for the test function u
  region            thm11 box: x_lo, x_hi, t_lo, t_hi
  alpha, c1, c2     lemma21
  tau               lemma31
  k, m              thm13 rational order m/k
  mu_low, mu_high   thm13 cutoff levels (defaults: phi-range quantiles)

[caputo]            (caputo-check)
  variant           l1 | semigroup | equivalence
  alphas            comma list of orders
  grids             comma list of node counts
  power             monomial exponent for the l1 variant (default 2)

[isp]
  t0, eps, r0       reconstruction time, level margin, R floor
  r_expr, f_expr    modulation R(x,t) and true factor f(x)
  deltas            noise ladder (comma list)
  n_seeds           seeds per noise level

[cauchy]
  face              observed face
  omega0_level      target region {d > level}
  window            early | interior
  reg               Tikhonov weight
  deltas, n_seeds   noise study

[fit]               (holder-fit)
  deltas, errors    comma lists to fit directly

Malformed files raise ConfigError with a line-numbered diagnostic; the
CLI maps that to exit code 1.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from typing import Optional

from .errors import ConfigError
from .expressions import compile_expression
from .grids import Domain, SpaceTimeGrid, TimeGrid

KINDS = (
    "forward",
    "caputo-check",
    "carleman-thm11",
    "carleman-lemma21",
    "carleman-lemma31",
    "carleman-thm13",
    "cauchy",
    "isp",
    "holder-fit",
)

_REQUIRED = object()


@dataclass
class ExperimentConfig:
    """Parsed, lightly validated experiment description."""

    kind: str
    seed: int
    out_dir: str
    sections: dict = field(repr=False)
    origin: str = "<config>"

    # -- typed access ------------------------------------------------------

    def has(self, section: str, key: str) -> bool:
        return key in self.sections.get(section, {})

    def get(self, section: str, key: str, default=_REQUIRED) -> str:
        sec = self.sections.get(section)
        if sec is None or key not in sec:
            if default is not _REQUIRED:
                return default
            raise ConfigError(f"{self.origin}: missing [{section}] {key}")
        return sec[key]

    def get_float(self, section, key, default=_REQUIRED) -> float:
        raw = self.get(section, key, default)
        if not isinstance(raw, str):
            return raw
        try:
            return float(raw)
        except ValueError:
            raise ConfigError(f"{self.origin}: [{section}] {key} = {raw!r} is not a number")

    def get_int(self, section, key, default=_REQUIRED) -> int:
        raw = self.get(section, key, default)
        if not isinstance(raw, str):
            return raw
        try:
            return int(raw)
        except ValueError:
            raise ConfigError(f"{self.origin}: [{section}] {key} = {raw!r} is not an integer")

    def get_list(self, section, key, default=_REQUIRED) -> list[str]:
        raw = self.get(section, key, default)
        if not isinstance(raw, str):
            return raw
        items = [part.strip() for part in raw.split(",")]
        if any(not part for part in items):
            raise ConfigError(f"{self.origin}: [{section}] {key} has an empty list entry")
        return items

    def get_floats(self, section, key, default=_REQUIRED) -> list[float]:
        items = self.get_list(section, key, default)
        if not items or not isinstance(items[0], str):
            return items
        try:
            return [float(part) for part in items]
        except ValueError:
            raise ConfigError(f"{self.origin}: [{section}] {key} must be a comma list of numbers")

    def get_ints(self, section, key, default=_REQUIRED) -> list[int]:
        items = self.get_list(section, key, default)
        if not items or not isinstance(items[0], str):
            return items
        try:
            return [int(part) for part in items]
        except ValueError:
            raise ConfigError(f"{self.origin}: [{section}] {key} must be a comma list of integers")

    def expression(self, section, key, dim, time_dependent=True, default=_REQUIRED):
        raw = self.get(section, key, default)
        if not isinstance(raw, str):
            return raw
        try:
            return compile_expression(raw, dim, time_dependent)
        except ConfigError as exc:
            raise ConfigError(f"{self.origin}: [{section}] {key}: {exc}") from exc

    # -- structured builders ------------------------------------------------

    @property
    def dim(self) -> int:
        return 2 if self.has("domain", "y_lo") else 1

    def build_domain(self) -> Domain:
        gamma = tuple(self.get_list("domain", "gamma"))
        if self.dim == 1:
            return Domain(self.get_float("domain", "x_lo"),
                          self.get_float("domain", "x_hi"), gamma)
        return Domain(self.get_float("domain", "x_lo"),
                      self.get_float("domain", "x_hi"), gamma,
                      self.get_float("domain", "y_lo"),
                      self.get_float("domain", "y_hi"))

    def build_grid(self) -> SpaceTimeGrid:
        domain = self.build_domain()
        nt = self.get_int("grid", "nt")
        nx = self.get_int("grid", "nx")
        ny = self.get_int("grid", "ny") if domain.dim == 2 else None
        for name, n in (("nx", nx), ("ny", ny), ("nt", nt)):
            if n is not None and n < 16:
                raise ConfigError(
                    f"{self.origin}: [grid] {name} = {n} is below the quadrature minimum 16"
                )
        time = TimeGrid(self.get_float("grid", "horizon"), nt)
        return SpaceTimeGrid(domain, nx, time, ny=ny)

    def build_problem(self, grid: SpaceTimeGrid):
        from .solver import FadeProblem

        dim = grid.dim
        expr = lambda key, default: self.expression("coefficients", key, dim,
                                                    default=default)
        if dim == 1:
            diffusion = expr("diffusion", "1.0")
            drift = expr("drift", "0.0")
        else:
            d_items = self.get_list("coefficients", "diffusion", ["1.0", "1.0"])
            if len(d_items) not in (2, 3):
                raise ConfigError(f"{self.origin}: 2-D diffusion needs 2 or 3 entries")
            diffusion = tuple(self._compile(e, dim) for e in d_items)
            b_items = self.get_list("coefficients", "drift", ["0.0", "0.0"])
            if len(b_items) != 2:
                raise ConfigError(f"{self.origin}: 2-D drift needs 2 entries")
            drift = tuple(self._compile(e, dim) for e in b_items)

        orders = self.get_floats("coefficients", "frac_orders", [])
        coeff_items = self.get_list("coefficients", "frac_coeffs",
                                    ["1.0"] * len(orders))
        if len(coeff_items) != len(orders):
            raise ConfigError(
                f"{self.origin}: frac_coeffs and frac_orders lengths differ"
            )
        frac_terms = tuple(
            (self._compile(q, dim) if isinstance(q, str) else q, a)
            for q, a in zip(coeff_items, orders)
        )
        return FadeProblem(
            grid,
            diffusion=diffusion,
            source=expr("source", "0.0"),
            drift=drift,
            reaction=expr("reaction", "0.0"),
            frac_terms=frac_terms,
            initial=self.expression("coefficients", "initial", dim,
                                    time_dependent=False, default="0.0"),
            boundary=expr("boundary", "0.0"),
        )

    def _compile(self, src: str, dim: int):
        try:
            return compile_expression(src, dim)
        except ConfigError as exc:
            raise ConfigError(f"{self.origin}: {exc}") from exc


def _parse_sections(text: str, origin: str) -> dict:
    parser = configparser.ConfigParser(interpolation=None, delimiters=("=",),
                                       comment_prefixes=("#", ";"))
    try:
        parser.read_string(text, source=origin)
    except configparser.ParsingError as exc:
        lines = ", ".join(str(lineno) for lineno, _ in exc.errors)
        raise ConfigError(f"{origin}: malformed config at line(s) {lines}") from exc
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError(
            f"{origin}: line {exc.lineno}: key outside any [section]"
        ) from exc
    except configparser.DuplicateOptionError as exc:
        raise ConfigError(
            f"{origin}: line {exc.lineno}: duplicate key {exc.option!r}"
        ) from exc
    except configparser.DuplicateSectionError as exc:
        raise ConfigError(
            f"{origin}: line {exc.lineno}: duplicate section {exc.section!r}"
        ) from exc
    except configparser.Error as exc:
        raise ConfigError(f"{origin}: malformed config: {exc}") from exc
    return {name: dict(parser.items(name)) for name in parser.sections()}


def config_from_text(text: str, origin: str = "<config>") -> ExperimentConfig:
    sections = _parse_sections(text, origin)
    if "experiment" not in sections:
        raise ConfigError(f"{origin}: missing [experiment] section")
    exp = sections["experiment"]
    kind = exp.get("kind")
    if kind not in KINDS:
        raise ConfigError(
            f"{origin}: [experiment] kind must be one of {', '.join(KINDS)}, got {kind!r}"
        )
    try:
        seed = int(exp.get("seed", "0"))
    except ValueError:
        raise ConfigError(f"{origin}: [experiment] seed must be an integer")
    out_dir = exp.get("out", "frade-out")
    return ExperimentConfig(kind=kind, seed=seed, out_dir=out_dir,
                            sections=sections, origin=origin)


def load_config(path: str) -> ExperimentConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return config_from_text(text, origin=path)
