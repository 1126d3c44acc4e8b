"""Ready-to-run experiment configurations.

Each preset is a complete config text (round-trips through the parser)
plus a one-line description of what it exercises.  Numeric constants
that come from closed forms (gamma-function factors, level values) are
embedded in full repr precision so manufactured solutions stay exact.
"""

from __future__ import annotations

import math

from .dataio import format_number as _n

_G125 = _n(1.0 / math.gamma(1.25))   # Caputo^{3/4} t = t^{1/4} / Gamma(5/4)
_G160 = _n(1.0 / math.gamma(1.60))   # Caputo^{2/5} t = t^{3/5} / Gamma(8/5)
_G180 = _n(1.0 / math.gamma(1.80))   # Caputo^{1/5} t = t^{4/5} / Gamma(9/5)
_E05 = _n(math.exp(0.5))
_E02 = _n(math.exp(0.2))
_E06 = _n(math.exp(0.6))
_E09 = _n(math.exp(0.9))
_TWO_THIRDS = _n(2.0 / 3.0)

_BUMP_X = "pos((x - 0.3) * (0.7 - x))**3"
_BUMP_T = "pos((t - 0.2) * (0.5 - t))**3"


PRESETS: dict[str, tuple[str, str]] = {}


def _add(name: str, description: str, text: str) -> None:
    PRESETS[name] = (description, text)


_add("caputo-check", "L1 fractional derivative of monomials against the closed form", """\
[experiment]
kind = caputo-check
seed = 7
out = frade-out/caputo-check

[caputo]
variant = l1
alphas = 0.25, 0.33, 0.5, 0.75
grids = 257, 513, 1025, 2049
power = 2.0
""")

_add("rl-semigroup", "composition defect of fractional integrals over the function family", """\
[experiment]
kind = caputo-check
seed = 7
out = frade-out/rl-semigroup

[caputo]
variant = semigroup
p1 = 0.3
p2 = 0.45
grids = 257, 513, 1025, 2049
""")

_add("caputo-rl-equivalence", "two independent fractional-derivative routes on vanishing data", """\
[experiment]
kind = caputo-check
seed = 7
out = frade-out/caputo-rl-equivalence

[caputo]
variant = equivalence
alphas = 0.33, 0.75
grids = 257, 513, 1025
""")

_add("forward-mms", "single-order forward solve against a manufactured solution", f"""\
[experiment]
kind = forward
seed = 7
out = frade-out/forward-mms

[domain]
x_lo = 0.0
x_hi = 1.0
gamma = left, right

[grid]
nx = 101
nt = 257
horizon = 1.0

[coefficients]
diffusion = 1.0
frac_orders = 0.75
frac_coeffs = 1.0
source = sin(pi*x) * (1.0 + {_G125} * t**0.25 + pi*pi * t)
initial = 0.0
boundary = 0.0

[forward]
exact = t * sin(pi*x)
refinements = 2
""")

_add("forward-two-term", "two-order forward solve against a manufactured solution", f"""\
[experiment]
kind = forward
seed = 7
out = frade-out/forward-two-term

[domain]
x_lo = 0.0
x_hi = 1.0
gamma = left, right

[grid]
nx = 101
nt = 257
horizon = 1.0

[coefficients]
diffusion = 1.0
frac_orders = 0.4, 0.2
frac_coeffs = 1.0, 1.0
source = sin(pi*x) * (1.0 + {_G160} * t**0.6 + {_G180} * t**0.8 + pi*pi * t)
initial = 0.0
boundary = 0.0

[forward]
exact = t * sin(pi*x)
refinements = 2
""")

_add("thm11-sweep", "compactly supported field under the sub-diffusive box estimate", f"""\
[experiment]
kind = carleman-thm11
seed = 7
out = frade-out/thm11-sweep

[domain]
x_lo = 0.0
x_hi = 1.0
gamma = right

[grid]
nx = 513
nt = 513
horizon = 1.0

[coefficients]
diffusion = 1.0
frac_orders = 0.25
frac_coeffs = 1.0

[weights]
family = sub
lam = 1.0
alpha1 = 0.25
beta_rule = sub-cauchy
s_values = 8, 16, 32, 64

[carleman]
fixture = {_BUMP_X} * {_BUMP_T}
region = 0.2, 0.8, 0.1, 0.6
""")

_add("lemma21-sweep", "fractional-vs-classical derivative absorption over level sets", f"""\
[experiment]
kind = carleman-lemma21
seed = 7
out = frade-out/lemma21-sweep

[domain]
x_lo = 0.0
x_hi = 1.0
gamma = right

[grid]
nx = 257
nt = 2049
horizon = 1.0

[weights]
family = sub
lam = 1.0
alpha1 = 0.4
beta_rule = sub-cauchy
s_values = 8, 16, 32, 64

[carleman]
alpha = 0.2
c1 = {_E05}
c2 = {_E02}
fixture = t**2 * pos((x - 0.2) * (0.8 - x))**3
""")

_add("lemma31-sweep", "tau-shifted parabolic weighted estimate on a compact bump", """\
[experiment]
kind = carleman-lemma31
seed = 7
out = frade-out/lemma31-sweep

[domain]
x_lo = 0.0
x_hi = 1.0
gamma = right

[grid]
nx = 1025
nt = 513
horizon = 1.0

[coefficients]
diffusion = 1.0

[weights]
family = regular
lam = 1.0
t0 = 0.5
beta = 2.0
s_values = 8, 16, 32, 64

[carleman]
tau = -2
fixture = pos((x - 0.2) * (0.8 - x))**3 * pos((t - 0.1) * (0.9 - t))**3
""")


def _thm13_text(k: int, m: int, alpha_repr: str) -> str:
    return f"""\
[experiment]
kind = carleman-thm13
seed = 7
out = frade-out/thm13-k{k}-sweep

[domain]
x_lo = 0.0
x_hi = 1.0
gamma = right

[grid]
nx = 1025
nt = 257
horizon = 1.0

[coefficients]
diffusion = 1.0
frac_orders = {alpha_repr}
frac_coeffs = 1.0

[weights]
family = regular
lam = 1.0
t0 = 0.5
beta = 2.0
s_values = 8, 16, 32, 64

[carleman]
k = {k}
m = {m}
mu_low = {_E06}
mu_high = {_E09}
fixture = t**3 * (1 - t)**2 * pos((x - 0.15) * (0.85 - x))**3
"""


_add("thm13-k2-sweep", "rational-order 1/2 derivative ladder with cut-off leak term",
     _thm13_text(2, 1, "0.5"))
_add("thm13-k3-sweep", "rational-order 2/3 derivative ladder with cut-off leak term",
     _thm13_text(3, 2, _TWO_THIRDS))
_add("thm13-k4-sweep", "rational-order 3/4 derivative ladder with cut-off leak term",
     _thm13_text(4, 3, "0.75"))

_add("cauchy-sub", "one-sided continuation of a sub-diffusive field, early window", """\
[experiment]
kind = cauchy
seed = 7
out = frade-out/cauchy-sub

[domain]
x_lo = 0.0
x_hi = 1.0
gamma = right

[grid]
nx = 65
nt = 257
horizon = 1.0

[coefficients]
diffusion = 1.0
frac_orders = 0.33
frac_coeffs = 1.0
boundary = t * (1 - x)
initial = 0.0

[cauchy]
face = right
omega0_level = 0.5
window = early
reg = 1e-8
deltas = 1e-4, 1e-3, 1e-2, 1e-1
n_seeds = 5
""")

_add("cauchy-interior", "one-sided continuation judged on the interior time window", """\
[experiment]
kind = cauchy
seed = 7
out = frade-out/cauchy-interior

[domain]
x_lo = 0.0
x_hi = 1.0
gamma = right

[grid]
nx = 65
nt = 257
horizon = 1.0

[coefficients]
diffusion = 1.0
frac_orders = 0.6
frac_coeffs = 1.0
boundary = t * (1 - x)
initial = 0.0

[cauchy]
face = right
omega0_level = 0.5
window = interior
reg = 1e-8
deltas = 1e-4, 1e-3, 1e-2, 1e-1
n_seeds = 5
""")

_add("isp-closed-loop", "source factor recovery from a forward solve plus noise ladder", """\
[experiment]
kind = isp
seed = 7
out = frade-out/isp-closed-loop

[domain]
x_lo = 0.0
x_hi = 1.0
gamma = right

[grid]
nx = 401
nt = 2049
horizon = 0.5

[coefficients]
diffusion = 1.0
frac_orders = 0.75
frac_coeffs = 1.0
initial = 0.0
boundary = 0.0

[isp]
t0 = 0.5
eps = 0.05
r0 = 1e-8
r_expr = t
f_expr = sin(2*pi*x)
deltas = 1e-4, 1e-3, 1e-2, 1e-1
n_seeds = 5
""")

_add("holder-fit-demo", "power-law stability fit on a synthetic error ladder", f"""\
[experiment]
kind = holder-fit
seed = 7
out = frade-out/holder-fit-demo

[fit]
deltas = 1e-4, 1e-3, 1e-2, 1e-1
errors = {_n(3.0 * 1e-2)}, {_n(3.0 * 10 ** -1.5)}, {_n(3.0 * 1e-1)}, {_n(3.0 * 10 ** -0.5)}
""")


def preset_names() -> tuple[str, ...]:
    return tuple(sorted(PRESETS))


def preset_text(name: str) -> str:
    if name not in PRESETS:
        raise KeyError(name)
    return PRESETS[name][1]


def preset_description(name: str) -> str:
    if name not in PRESETS:
        raise KeyError(name)
    return PRESETS[name][0]
