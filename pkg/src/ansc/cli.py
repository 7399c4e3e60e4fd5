"""Command-line pipeline: generate, score, calibrate, simulate, audit, serve.

Every subcommand is reproducible: identical flags and seeds produce
byte-identical outputs (timestamps derive from the simulation epoch, never
the wall clock).  Exit codes: 0 success, 1 validation/processing failure,
2 usage error.  ``--format json`` switches error reporting to a single JSON
object on stderr.
"""

from __future__ import annotations

import functools
import json
import sys
from dataclasses import replace
from datetime import timedelta
from pathlib import Path

import click

from .calibration import BudgetConfig, calibrate
from .errors import AnscError, SchemaError
from .scoring import Scope
from .simulator import (
    SIM_EPOCH,
    FleetGenSpec,
    ScenarioConfig,
    export_heatmap,
    generate_fleet,
    generate_history,
    heatmap_to_csv,
    heatmap_to_json,
    scenario_spec_from_dict,
)
from . import storage
from .service import ServiceController, build_state, create_app, state_from_engine
from .whatif import action_from_dict, evaluate


def _fail(message: str, fmt: str) -> None:
    if fmt == "json":
        click.echo(json.dumps({"error": message}), err=True)
    else:
        click.echo(f"error: {message}", err=True)
    sys.exit(1)


def handle_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        fmt = kwargs.get("fmt") or "text"
        try:
            return fn(*args, **kwargs)
        except AnscError as exc:
            _fail(str(exc), fmt)

    return wrapper


def _echo_config(verbose: bool, **settings: object) -> None:
    if verbose:
        click.echo(f"config: {json.dumps(settings, sort_keys=True, default=str)}", err=True)


format_option = click.option(
    "--format", "fmt", type=click.Choice(["json", "csv"]), default=None,
    help="Machine-readable output/error format.",
)
seed_option = click.option(
    "--seed", type=int, envvar="ANSC_SEED", default=42, show_default=True,
    help="Deterministic seed (falls back to ANSC_SEED).",
)
verbose_option = click.option("--verbose", is_flag=True, help="Print the effective config to stderr.")


@click.group()
@click.version_option(package_name="ansc")
def main() -> None:
    """Capacity-health scoring for Clos fabric fleets."""


@main.command("gen-fleet")
@click.option("--dcs", type=int, default=400, show_default=True, help="Number of datacenters.")
@click.option("--regions", type=int, default=60, show_default=True, help="Number of regions.")
@seed_option
@click.option("--out", type=click.Path(dir_okay=False), required=True, help="Fleet JSON output path.")
@format_option
@verbose_option
@handle_errors
def gen_fleet(dcs: int, regions: int, seed: int, out: str, fmt: str | None, verbose: bool) -> None:
    """Generate a synthetic fleet."""
    _echo_config(verbose, dcs=dcs, regions=regions, seed=seed, out=out)
    spec = FleetGenSpec(seed=seed, n_regions=regions, n_datacenters=dcs)
    storage.save_fleet(generate_fleet(spec), out)
    click.echo(f"wrote {out}")


@main.command("gen-history")
@click.option("--fleet", "fleet_path", type=click.Path(dir_okay=False), required=True)
@click.option("--days", type=int, default=730, show_default=True, help="History window ending at the epoch.")
@seed_option
@click.option("--out", type=click.Path(dir_okay=False), required=True, help="Incident NDJSON output path.")
@format_option
@verbose_option
@handle_errors
def gen_history(fleet_path: str, days: int, seed: int, out: str, fmt: str | None, verbose: bool) -> None:
    """Generate a seeded incident history for a fleet."""
    _echo_config(verbose, fleet=fleet_path, days=days, seed=seed, out=out)
    fleet = storage.load_fleet(fleet_path)
    config = ScenarioConfig(duration_days=days)
    storage.save_incidents(generate_history(fleet, config, seed), out)
    click.echo(f"wrote {out}")


@main.command("score")
@click.option("--fleet", "fleet_path", type=click.Path(dir_okay=False), required=True)
@click.option("--incidents", "incidents_path", type=click.Path(dir_okay=False), required=True)
@click.option("--budget", "budget_path", type=click.Path(dir_okay=False), default=None)
@click.option("--at", "at_text", default=None, help="Scoring time (RFC 3339); defaults to the epoch.")
@click.option("--out", type=click.Path(dir_okay=False), required=True, help="Scorecard JSON output path.")
@format_option
@verbose_option
@handle_errors
def score(
    fleet_path: str, incidents_path: str, budget_path: str | None,
    at_text: str | None, out: str, fmt: str | None, verbose: bool,
) -> None:
    """Score a fleet snapshot against its incident history."""
    _echo_config(verbose, fleet=fleet_path, incidents=incidents_path, budget=budget_path, out=out)
    fleet = storage.load_fleet(fleet_path)
    incidents = storage.load_incidents(incidents_path)
    budget = storage.load_budget(budget_path) if budget_path else BudgetConfig()
    at = storage.parse_timestamp(at_text) if at_text else SIM_EPOCH
    state = build_state(fleet, incidents, budget, at=at)
    storage.save_scorecards(state.cards, out)
    click.echo(f"wrote {out}")


@main.command("calibrate")
@click.option("--scores", "scores_path", type=click.Path(dir_okay=False), required=True)
@click.option("--budget", "budget_path", type=click.Path(dir_okay=False), default=None)
@click.option(
    "--population", type=click.Choice(["datacenter", "region"]), default="datacenter",
    show_default=True,
)
@click.option("--out", type=click.Path(dir_okay=False), required=True, help="Thresholds JSON output path.")
@format_option
@verbose_option
@handle_errors
def calibrate_cmd(
    scores_path: str, budget_path: str | None, population: str, out: str,
    fmt: str | None, verbose: bool,
) -> None:
    """Calibrate color thresholds from a scorecard snapshot."""
    _echo_config(verbose, scores=scores_path, budget=budget_path, population=population, out=out)
    cards = storage.load_scorecards(scores_path)
    budget = storage.load_budget(budget_path) if budget_path else BudgetConfig()
    scope = Scope(population)
    population_cards = [c for c in cards if c.scope is scope]
    if not population_cards:
        raise SchemaError(f"no {population} cards in {scores_path}", scores_path)
    at = max(c.at for c in population_cards)
    thresholds = calibrate(
        [(c.scope_id, c.persisted) for c in population_cards],
        budget, population=scope, at=at,
    )
    storage.save_thresholds(thresholds, out)
    click.echo(f"wrote {out}")


@main.command("simulate")
@click.option("--spec", "spec_path", type=click.Path(dir_okay=False), required=True)
@click.option("--out-dir", type=click.Path(file_okay=False), required=True)
@format_option
@verbose_option
@handle_errors
def simulate(spec_path: str, out_dir: str, fmt: str | None, verbose: bool) -> None:
    """Run a full scenario and write every artifact into a directory."""
    from .simulator import ScenarioEngine

    _echo_config(verbose, spec=spec_path, out_dir=out_dir)
    spec = scenario_spec_from_dict(storage._read_json(spec_path))
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    fleet = generate_fleet(spec.fleet)
    window = replace(spec.scenario, duration_days=spec.preroll_days + spec.scenario.duration_days)
    history = generate_history(
        fleet, window, spec.history_seed,
        end=SIM_EPOCH + timedelta(days=spec.scenario.duration_days),
    )
    storage.save_fleet(fleet, out / "fleet.json")
    storage.save_incidents(history, out / "incidents.ndjson")

    engine = ScenarioEngine(fleet, history, spec.scenario)
    assignments: list = []
    with storage.HistoryStore(out / "history") as store:
        for k in range(engine.n_ticks):
            tick = engine.advance()
            store.append_scores(tick.cards)
            if k % 30 == 29:
                store.flush()
            day = tick.at.date()
            for card in tick.cards:
                if card.scope is not Scope.LAYER:
                    assignments.append((card.scope_id, day, card.color))

    final = engine.current
    assert final is not None
    storage.save_scorecards(final.cards, out / "scores.json")
    storage.save_thresholds(final.thresholds_dc, out / "thresholds.json")
    storage.save_thresholds(final.thresholds_region, out / "thresholds-region.json")
    storage.save_assignments(assignments, out / "assignments.ndjson")
    (out / "heatmap.csv").write_text(
        heatmap_to_csv(export_heatmap(list(final.cards))), encoding="utf-8"
    )
    click.echo(f"wrote scenario artifacts to {out_dir}")


@main.command("audit")
@click.option("--assignments", "assignments_path", type=click.Path(dir_okay=False), required=True)
@click.option("--budget", "budget_path", type=click.Path(dir_okay=False), default=None)
@format_option
@verbose_option
@handle_errors
def audit_cmd(assignments_path: str, budget_path: str | None, fmt: str | None, verbose: bool) -> None:
    """Check annual color-assignment fractions against the budget; exit 1 when non-compliant."""
    from .calibration import audit

    _echo_config(verbose, assignments=assignments_path, budget=budget_path)
    assignments = storage.load_assignments(assignments_path)
    budget = storage.load_budget(budget_path) if budget_path else BudgetConfig()
    report = audit(assignments, budget)
    if fmt == "json":
        click.echo(json.dumps(
            {
                "total_scope_days": report.total_scope_days,
                "compliant": report.compliant,
                "results": [
                    {
                        "color": r.color.value, "scope_days": r.scope_days,
                        "fraction": r.fraction, "cap": r.cap, "limit": r.limit,
                        "compliant": r.compliant,
                    }
                    for r in report.results
                ],
            },
            sort_keys=True,
        ))
    else:
        for r in report.results:
            status = "ok" if r.compliant else "OVER"
            click.echo(
                f"{r.color.value:>6}: {r.fraction:.2%} of {report.total_scope_days} scope-days"
                f" (limit {r.limit:.2%}) {status}"
            )
        click.echo("compliant" if report.compliant else "non-compliant")
    if not report.compliant:
        sys.exit(1)


@main.command("heatmap")
@click.option("--scores", "scores_path", type=click.Path(dir_okay=False), required=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@format_option
@verbose_option
@handle_errors
def heatmap_cmd(scores_path: str, out: str, fmt: str | None, verbose: bool) -> None:
    """Export the regional heatmap from a scorecard snapshot."""
    _echo_config(verbose, scores=scores_path, out=out)
    cards = storage.load_scorecards(scores_path)
    rows = export_heatmap(cards)
    use_json = fmt == "json" or (fmt is None and out.endswith(".json"))
    path = Path(out)
    path.parent.mkdir(parents=True, exist_ok=True)
    if use_json:
        path.write_text(json.dumps(heatmap_to_json(rows), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    else:
        path.write_text(heatmap_to_csv(rows), encoding="utf-8")
    click.echo(f"wrote {out}")


@main.command("whatif")
@click.option("--fleet", "fleet_path", type=click.Path(dir_okay=False), required=True)
@click.option("--thresholds", "thresholds_path", type=click.Path(dir_okay=False), required=True)
@click.option("--actions", "actions_path", type=click.Path(dir_okay=False), required=True)
@click.option("--incidents", "incidents_path", type=click.Path(dir_okay=False), default=None,
              help="Incident history for hazard estimation (defaults to the rate floor).")
@click.option("--budget", "budget_path", type=click.Path(dir_okay=False), default=None)
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="Write the result JSON here instead of stdout.")
@format_option
@verbose_option
@handle_errors
def whatif_cmd(
    fleet_path: str, thresholds_path: str, actions_path: str,
    incidents_path: str | None, budget_path: str | None, out: str | None,
    fmt: str | None, verbose: bool,
) -> None:
    """Evaluate remediation actions against a fleet snapshot."""
    _echo_config(
        verbose, fleet=fleet_path, thresholds=thresholds_path, actions=actions_path,
        incidents=incidents_path, budget=budget_path,
    )
    fleet = storage.load_fleet(fleet_path)
    thresholds = storage.load_thresholds(thresholds_path)
    budget = storage.load_budget(budget_path) if budget_path else BudgetConfig()
    incidents = storage.load_incidents(incidents_path) if incidents_path else []
    state = build_state(fleet, incidents, budget, thresholds=thresholds)

    doc = storage._read_json(actions_path)
    if not isinstance(doc, list):
        raise SchemaError("actions file must be a JSON array", actions_path)
    actions = [action_from_dict(item, f"/{i}") for i, item in enumerate(doc)]
    result = evaluate(
        state.fleet, state.hazards, thresholds, actions,
        budget=budget, persistence=state.persistence, at=state.at,
    )
    payload = json.dumps(
        {
            "before": [storage.scorecard_to_dict(c) for c in result.before],
            "after": [storage.scorecard_to_dict(c) for c in result.after],
            "safe_to_remove": result.safe_to_remove,
        },
        indent=2, sort_keys=True,
    )
    if out:
        Path(out).write_text(payload + "\n", encoding="utf-8")
        click.echo(f"wrote {out}")
    else:
        click.echo(payload)


@main.command("serve")
@click.option("--mode", type=click.Choice(["file", "demo"]), default="file", show_default=True)
@click.option("--listen", default="127.0.0.1:8080", show_default=True, help="host:port to bind.")
@click.option("--fleet", "fleet_path", type=click.Path(dir_okay=False), default=None)
@click.option("--incidents", "incidents_path", type=click.Path(dir_okay=False), default=None)
@click.option("--budget", "budget_path", type=click.Path(dir_okay=False), default=None)
@click.option("--thresholds", "thresholds_path", type=click.Path(dir_okay=False), default=None)
@click.option("--spec", "spec_path", type=click.Path(dir_okay=False), default=None,
              help="Scenario spec for demo mode (defaults to the standard scenario).")
@click.option("--history-dir", type=click.Path(file_okay=False), default=None)
@click.option("--cors-origin", default=None, help="Allowed CORS origin for the console.")
@format_option
@verbose_option
@handle_errors
def serve(
    mode: str, listen: str, fleet_path: str | None, incidents_path: str | None,
    budget_path: str | None, thresholds_path: str | None, spec_path: str | None,
    history_dir: str | None, cors_origin: str | None, fmt: str | None, verbose: bool,
) -> None:
    """Serve the scoring API (file mode: static snapshot; demo mode: simulator-backed)."""
    import uvicorn

    _echo_config(verbose, mode=mode, listen=listen, fleet=fleet_path, spec=spec_path)
    controller = build_controller(
        mode,
        fleet_path=fleet_path, incidents_path=incidents_path, budget_path=budget_path,
        thresholds_path=thresholds_path, spec_path=spec_path, history_dir=history_dir,
    )
    app = create_app(controller, cors_origin=cors_origin)
    host, _, port_text = listen.rpartition(":")
    if not host or not port_text.isdigit():
        raise SchemaError("listen must be host:port", listen)
    uvicorn.run(app, host=host, port=int(port_text), log_level="warning")


def build_controller(
    mode: str,
    *,
    fleet_path: str | None = None,
    incidents_path: str | None = None,
    budget_path: str | None = None,
    thresholds_path: str | None = None,
    spec_path: str | None = None,
    history_dir: str | None = None,
) -> ServiceController:
    """Assemble the service controller for ``serve`` (shared with tests)."""
    from .simulator import ScenarioEngine, ScenarioSpec, generate_fleet as gen

    budget = storage.load_budget(budget_path) if budget_path else BudgetConfig()
    # demo mode keeps history in memory even without a directory, so the
    # console's posture/movement chart has data to show
    if history_dir:
        history = storage.HistoryStore(history_dir)
    else:
        history = storage.HistoryStore(None) if mode == "demo" else None

    if mode == "file":
        if not fleet_path or not incidents_path:
            raise SchemaError("file mode requires --fleet and --incidents", "serve")
        fleet = storage.load_fleet(fleet_path)
        incidents = storage.load_incidents(incidents_path)
        thresholds = storage.load_thresholds(thresholds_path) if thresholds_path else None
        state = build_state(fleet, incidents, budget, thresholds=thresholds)
        return ServiceController(state, history=history)

    if spec_path:
        spec = scenario_spec_from_dict(storage._read_json(spec_path))
    else:
        spec = _default_demo_spec(budget)
    fleet = gen(spec.fleet)
    window = replace(spec.scenario, duration_days=spec.preroll_days + spec.scenario.duration_days)
    incidents = generate_history(
        fleet, window, spec.history_seed,
        end=SIM_EPOCH + timedelta(days=spec.scenario.duration_days),
    )
    engine = ScenarioEngine(fleet, incidents, spec.scenario)
    tick = engine.advance()
    state = state_from_engine(engine, tick, spec.scenario.budget, state_weights())
    return ServiceController(state, engine=engine, history=history)


def state_weights():
    from .hazard import ConditionWeights

    return ConditionWeights()


def _default_demo_spec(budget: BudgetConfig):
    from .simulator import ScenarioSpec

    return ScenarioSpec(
        fleet=FleetGenSpec(seed=42, n_regions=6, n_datacenters=24),
        scenario=ScenarioConfig(duration_days=365, budget=budget),
        history_seed=4242,
        preroll_days=730,
    )


if __name__ == "__main__":
    main()
