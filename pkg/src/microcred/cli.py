"""Operator command line: run a node, bootstrap a consortium, run scenarios,
audit chains and stores.

Exit codes: 0 success, 1 validation/authorization problems, 2 integrity
violations (audits, tampered data), 3 consensus failures.
"""

from __future__ import annotations

import functools
import json
import sys
import tempfile
from pathlib import Path
from typing import Any, Callable, Dict, Optional

import click

from .consensus import SimulationScenario, run_simulation
from .errors import PlatformError, ValidationError
from .identity import PermissionedNetwork
from .ledger import PublicLedger, validate_blocks
from .node import NodeConfig, Platform
from .node import consortium_init as init_consortium
from .scenario import WorkflowScenario, run_workflow
from .store import OffchainStore

EXIT_VALIDATION = 1
EXIT_INTEGRITY = 2
EXIT_CONSENSUS = 3


def platform_errors(fn: Callable[..., Any]) -> Callable[..., Any]:
    """Map domain errors onto the documented exit-code table."""

    @functools.wraps(fn)
    def wrapper(*args: Any, **kwargs: Any) -> Any:
        try:
            return fn(*args, **kwargs)
        except PlatformError as err:
            click.echo(f"error {err.code}: {err}", err=True)
            sys.exit(err.exit_code)
        except (OSError, json.JSONDecodeError) as err:
            click.echo(f"error io_error: {err}", err=True)
            sys.exit(EXIT_VALIDATION)

    return wrapper


def _load_json(path: Path) -> Dict[str, Any]:
    return json.loads(Path(path).read_text(encoding="utf-8"))


@click.group()
def main() -> None:
    """Micro-credential consortium platform."""


# -- node ------------------------------------------------------------------


@main.group()
def node() -> None:
    """Run a gateway/authority node."""


@node.command("run")
@click.option(
    "--config",
    "config_path",
    required=True,
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    help="Node configuration file (JSON).",
)
@platform_errors
def node_run(config_path: Path) -> None:
    """Serve the HTTP gateway over the configured data directory."""
    import uvicorn

    from .gateway import create_app

    config = NodeConfig.from_file(config_path)
    platform = Platform(config)
    app = create_app(platform)
    click.echo(f"serving on http://{config.host}:{config.port}")
    uvicorn.run(app, host=config.host, port=config.port, log_level="warning")


# -- consortium --------------------------------------------------------------


@main.group()
def consortium() -> None:
    """Consortium bootstrap."""


@consortium.command("init")
@click.option(
    "--institutions",
    required=True,
    help="Comma-separated institution names, e.g. a,b,c,d.",
)
@click.option(
    "--data-dir",
    default="consortium",
    type=click.Path(path_type=Path),
    show_default=True,
)
@click.option("--seed", default=0, show_default=True, help="Key-derivation seed.")
@platform_errors
def consortium_init_cmd(institutions: str, data_dir: Path, seed: int) -> None:
    """Create membership, node keys and admin identities for a consortium."""
    network = init_consortium(data_dir, institutions.split(","), seed=seed)
    click.echo(f"consortium initialized at {data_dir}")
    click.echo("institutions: " + ", ".join(network.institutions()))
    click.echo(f"members: {len(network.members)}")
    click.echo(f"quorum: {network.quorum}")


# -- scenario -----------------------------------------------------------------


@main.group()
def scenario() -> None:
    """Scripted end-to-end and fault-simulation scenarios."""


@scenario.command("run")
@click.argument(
    "scenario_file", type=click.Path(exists=True, dir_okay=False, path_type=Path)
)
@click.option(
    "--data-dir",
    default=None,
    type=click.Path(path_type=Path),
    help="Keep workflow state here (default: throwaway directory).",
)
@platform_errors
def scenario_run(scenario_file: Path, data_dir: Optional[Path]) -> None:
    """Execute a scenario file; exit 0 iff every assertion holds."""
    data = _load_json(scenario_file)
    if "actions" in data:
        _run_workflow_scenario(data, data_dir)
    elif "transactions" in data:
        _run_consensus_scenario(data)
    else:
        raise ValidationError(
            "scenario file needs either an 'actions' or a 'transactions' list"
        )


def _run_workflow_scenario(data: Dict[str, Any], data_dir: Optional[Path]) -> None:
    workflow = WorkflowScenario.from_json(data)
    if data_dir is None:
        with tempfile.TemporaryDirectory(prefix="microcred-scenario-") as tmp:
            result = run_workflow(workflow, Path(tmp))
    else:
        result = run_workflow(workflow, data_dir)
    for line in result.lines:
        click.echo(line)
    if result.ok:
        click.echo(f"scenario ok ({len(result.lines)} actions)")
    else:
        click.echo(f"scenario failed: {result.failure}", err=True)
        sys.exit(result.exit_code)


def _run_consensus_scenario(data: Dict[str, Any]) -> None:
    sim = SimulationScenario.from_json(data)
    trace = run_simulation(sim)
    click.echo(trace.to_jsonl(), nl=False)
    approved = sum(1 for outcome in trace.outcomes if outcome.approved)
    divergences = trace.divergences()
    if divergences:
        height, node_a, node_b = divergences[0]
        click.echo(
            f"simulation failed: divergent commits at height {height} "
            f"({node_a} vs {node_b})",
            err=True,
        )
        sys.exit(EXIT_CONSENSUS)
    click.echo(
        f"simulation ok: {approved}/{len(trace.outcomes)} approved, divergences 0"
    )


# -- audits --------------------------------------------------------------------


@main.group()
def chain() -> None:
    """Public-chain tooling."""


@chain.command("audit")
@click.argument(
    "export_file", type=click.Path(exists=True, dir_okay=False, path_type=Path)
)
@click.option(
    "--membership",
    "membership_file",
    default=None,
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    help="Verify quorum certificates against this membership file.",
)
@platform_errors
def chain_audit(export_file: Path, membership_file: Optional[Path]) -> None:
    """Validate an exported chain; print the first violation or 'valid'."""
    blocks = PublicLedger.import_blocks(export_file)
    membership = None
    if membership_file is not None:
        membership = PermissionedNetwork.from_json(_load_json(membership_file))
    report = validate_blocks(blocks, membership)
    click.echo(report.describe())
    if not report.valid:
        sys.exit(EXIT_INTEGRITY)


@main.group()
def store() -> None:
    """Off-chain store tooling."""


@store.command("audit")
@click.argument(
    "store_dir", type=click.Path(exists=True, file_okay=False, path_type=Path)
)
@platform_errors
def store_audit(store_dir: Path) -> None:
    """Re-hash every stored object; print the first violation or 'valid'."""
    problems = OffchainStore(store_dir).audit()
    if problems:
        address, problem = problems[0]
        click.echo(f"invalid object {address}: {problem}")
        sys.exit(EXIT_INTEGRITY)
    click.echo("valid")


if __name__ == "__main__":
    main()
