from __future__ import annotations

import json
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, List, Optional, TypeVar

import click
import typer

from . import orchestrator
from .config import RunConfig, configure_logging, load_config
from .costsim import estimate_cost, resolve_cost_params
from .errors import DmdSwitcherError
from .reports import render_markdown

app = typer.Typer(help="Dual-model distillation switcher pipeline", no_args_is_help=True)

DEFAULT_CONFIG = Path("config/pipeline.yaml")
T = TypeVar("T")


@dataclass
class CliState:
    config_path: Path
    seed: Optional[int] = None
    out: Optional[Path] = None

    def load(self) -> RunConfig:
        return load_config(self.config_path, {"seed": self.seed, "output_dir": self.out})


def _guarded(action: Callable[[], T]) -> T:
    """Run a command body, turning package errors into a message and the family's exit code."""
    try:
        return action()
    except DmdSwitcherError as exc:
        typer.echo(f"Error: {exc}", err=True)
        raise typer.Exit(code=exc.exit_code) from exc


@app.callback()
def root(
    ctx: typer.Context,
    config: Path = typer.Option(DEFAULT_CONFIG, "--config", "-c", help="Pipeline YAML config"),
    seed: Optional[int] = typer.Option(None, "--seed", min=0, max=2**64 - 1, help="Master seed override"),
    out: Optional[Path] = typer.Option(None, "--out", help="Output directory override"),
    log_level: Optional[str] = typer.Option(None, "--log-level", help="DEBUG, INFO, WARNING or ERROR"),
):
    """Global options shared by every subcommand."""
    configure_logging(log_level)
    ctx.obj = CliState(config_path=config, seed=seed, out=out)


@app.command()
def generate(ctx: typer.Context):
    """Label every manifest split by teacher agreement and write the DMD files."""
    state: CliState = ctx.obj
    paths = _guarded(lambda: orchestrator.run_generate(state.load()))
    for split, path in paths.items():
        typer.echo(f"{split}: {path}")


@app.command()
def train(ctx: typer.Context):
    """Train the switcher on the train/validation DMD files."""
    state: CliState = ctx.obj
    model_path, report_path = _guarded(lambda: orchestrator.run_train(state.load()))
    typer.echo(f"Model written to {model_path}")
    typer.echo(f"Training report written to {report_path}")


@app.command()
def calibrate(ctx: typer.Context):
    """Pick the deferral fraction on the train split and write the policy."""
    state: CliState = ctx.obj
    policy_path, curve_path = _guarded(lambda: orchestrator.run_calibrate(state.load()))
    typer.echo(f"Policy written to {policy_path}")
    typer.echo(f"Curve written to {curve_path}")


@app.command()
def evaluate(ctx: typer.Context):
    """Compare small-only, large-only, uncertainty and switcher routing on the test split."""
    state: CliState = ctx.obj
    table = _guarded(lambda: orchestrator.run_evaluate(state.load()))
    typer.echo(render_markdown([table]))


@app.command()
def cost(
    ctx: typer.Context,
    fraction: Optional[float] = typer.Option(None, min=0.0, max=1.0, help="Print one estimate instead of the curve"),
):
    """Write the modeled time/energy curve for the configured cost preset."""
    state: CliState = ctx.obj

    def _run() -> None:
        config = state.load()
        if fraction is not None:
            report = estimate_cost(resolve_cost_params(config.cost_preset), fraction)
            typer.echo(json.dumps(report.model_dump(), indent=2))
            return
        typer.echo(f"Cost curve written to {orchestrator.run_cost(config)}")

    _guarded(_run)


@app.command()
def serve(ctx: typer.Context):
    """Run the routing service (POST /classify, GET /status, GET /health)."""
    state: CliState = ctx.obj
    _guarded(lambda: orchestrator.serve(state.load()))


@app.command("serve-teacher")
def serve_teacher(
    ctx: typer.Context,
    role: str = typer.Option("large", help="Which configured teacher to expose: small or large"),
    host: str = typer.Option("127.0.0.1"),
    port: int = typer.Option(8090),
):
    """Expose a configured teacher over the remote prediction protocol."""
    if role not in ("small", "large"):
        raise typer.BadParameter("role must be 'small' or 'large'", param_hint="--role")
    state: CliState = ctx.obj
    _guarded(lambda: orchestrator.serve_teacher(state.load(), role, host, port))


def main(argv: Optional[List[str]] = None) -> int:
    """Console entry point; usage errors exit 1 rather than click's default 2."""
    try:
        result = app(args=argv, standalone_mode=False)
    except click.UsageError as exc:
        exc.show()
        return 1
    except click.Abort:
        typer.echo("Aborted!", err=True)
        return 1
    return result if isinstance(result, int) else 0


if __name__ == "__main__":
    sys.exit(main())
