"""Command line front end.

Exit codes: 0 success, 1 malformed config or invalid parameters (with
the offending line or key named), 2 violated hypothesis of the estimate
being exercised, 3 numerical failure (non-finite solve or singular
normal equations).
"""

from __future__ import annotations

import sys

import click

from .config import config_from_text, load_config
from .errors import (
    ConfigError,
    HypothesisViolationError,
    NumericalFailureError,
    ParameterError,
)
from .experiments import run_experiment
from .presets import PRESETS, preset_text


@click.group()
def main() -> None:
    """Fractional-order diffusion experiments: forward solves, weighted
    energy estimates and inverse reconstructions."""


@main.command()
@click.argument("config", required=False,
                type=click.Path(exists=True, dir_okay=False))
@click.option("--preset", "preset_name", default=None,
              help="Run a named built-in configuration instead of a file.")
@click.option("--out", default=None, help="Override the output directory.")
@click.option("--seed", default=None, type=int, help="Override the seed.")
def run(config: str | None, preset_name: str | None,
        out: str | None, seed: int | None) -> None:
    """Execute the experiment described by CONFIG or --preset NAME."""
    try:
        if (config is None) == (preset_name is None):
            raise ConfigError("pass exactly one of CONFIG or --preset NAME")
        if preset_name is not None:
            if preset_name not in PRESETS:
                known = ", ".join(sorted(PRESETS))
                raise ConfigError(f"unknown preset {preset_name!r}; known: {known}")
            cfg = config_from_text(preset_text(preset_name),
                                   origin=f"<preset {preset_name}>")
        else:
            cfg = load_config(config)
        run_experiment(cfg, out_dir=out, seed=seed)
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(1)
    except HypothesisViolationError as exc:
        click.echo(f"hypothesis violation: {exc}", err=True)
        sys.exit(2)
    except NumericalFailureError as exc:
        click.echo(f"numerical failure: {exc}", err=True)
        sys.exit(3)
    except ParameterError as exc:
        click.echo(f"invalid parameter: {exc}", err=True)
        sys.exit(1)


@main.command()
def presets() -> None:
    """List the built-in experiment configurations."""
    width = max(len(name) for name in PRESETS)
    for name in sorted(PRESETS):
        click.echo(f"{name:<{width}}  {PRESETS[name][0]}")


if __name__ == "__main__":
    main()
