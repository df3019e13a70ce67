"""Command-line client: one subcommand per experiment, artifacts to disk.

The CLI is a thin client of the service: it loads and validates the JSON
config, posts the request (in-process by default, --url for a remote
instance), writes the JSON summary plus CSV artifacts under the output
directory, and echoes the effective configuration next to them.

Exit codes: 0 ok, 1 hard assertion failure in the numerics (domain,
solver or internal-consistency error), 2 usage or configuration error.
"""

import os
import sys

import click

from .client import ServiceClient, ServiceError
from .config import effective_config, load_config
from .errors import ConfigError
from .reports import dumps_json

EXPERIMENTS = ("check-hypothesis", "solve-shrinker", "simulate-flow",
               "deviation-decay", "verify-carleman", "all")


def _write_outputs(out_dir, name, report, cfg):
    os.makedirs(out_dir, exist_ok=True)
    summary_path = os.path.join(out_dir, f"{name}-summary.json")
    with open(summary_path, "w") as fh:
        fh.write(dumps_json(report["summary"]))
    with open(os.path.join(out_dir, "effective-config.json"), "w") as fh:
        fh.write(dumps_json(effective_config(cfg)))
    for art in report["artifacts"]:
        path = os.path.join(out_dir, name, art["path"])
        os.makedirs(os.path.dirname(path), exist_ok=True)
        with open(path, "w") as fh:
            fh.write(art["content"])
    return summary_path


def _run(name, config_path, output, seed, url):
    try:
        overrides = {}
        if output is not None:
            overrides["output_dir"] = output
        if seed is not None:
            overrides["seed"] = seed
        cfg = load_config(config_path, overrides)
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(2)

    try:
        with ServiceClient(base_url=url) as client:
            report = client.run(name, effective_config(cfg))
    except ServiceError as exc:
        click.echo(f"{exc.kind} error ({exc.type_name}): {exc}", err=True)
        sys.exit(2 if exc.kind == "usage" else 1)

    summary_path = _write_outputs(cfg.output_dir, name, report, cfg)
    click.echo(f"wrote {summary_path}")
    sys.exit(0)


@click.group()
def main():
    """Numerical laboratory for self-shrinkers of degree-one curvature flows."""


def _add_experiment_command(name):
    @main.command(name=name)
    @click.option("--config", "config_path", type=click.Path(), default=None,
                  help="JSON run configuration (defaults apply when omitted).")
    @click.option("--output", type=click.Path(), default=None,
                  help="Output directory (overrides config and OUTPUT_DIR).")
    @click.option("--seed", type=int, default=None,
                  help="Seed for randomized property draws.")
    @click.option("--url", type=str, default=None,
                  help="Base URL of a running service (in-process if omitted).")
    def _cmd(config_path, output, seed, url, _name=name):
        _run(_name, config_path, output, seed, url)

    _cmd.__doc__ = f"Run the {name} experiment and write its artifacts."
    return _cmd


for _name in EXPERIMENTS:
    _add_experiment_command(_name)


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8787, show_default=True)
def serve(host, port):
    """Serve the experiment API over HTTP (requires uvicorn)."""
    try:
        import uvicorn
    except ImportError:
        click.echo("uvicorn is not installed (pip install shrinkerlab[serve])",
                   err=True)
        sys.exit(2)
    from .service import app
    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()
