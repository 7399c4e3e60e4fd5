from __future__ import annotations

import json
import subprocess
import sys
from pathlib import Path

import pytest

from ansc.cli import main
from ansc import storage


def run_cli(*args: str, cwd: Path | None = None) -> subprocess.CompletedProcess:
    return subprocess.run(
        [sys.executable, "-m", "ansc", *args],
        capture_output=True, text=True, cwd=cwd,
    )


@pytest.fixture(scope="module")
def pipeline_dir(tmp_path_factory) -> Path:
    """gen-fleet -> gen-history -> score -> calibrate -> heatmap, seed 42."""
    root = tmp_path_factory.mktemp("pipeline")
    steps = [
        ["gen-fleet", "--dcs", "8", "--regions", "2", "--seed", "42", "--out", "fleet.json"],
        ["gen-history", "--fleet", "fleet.json", "--days", "730", "--seed", "42",
         "--out", "incidents.ndjson"],
        ["score", "--fleet", "fleet.json", "--incidents", "incidents.ndjson",
         "--out", "scores.json"],
        ["calibrate", "--scores", "scores.json", "--out", "thresholds.json"],
        ["heatmap", "--scores", "scores.json", "--out", "heatmap.csv"],
    ]
    for step in steps:
        result = run_cli(*step, cwd=root)
        assert result.returncode == 0, f"{step}: {result.stderr}"
    return root


class TestPipeline:
    def test_artifacts_round_trip(self, pipeline_dir):
        fleet = storage.load_fleet(pipeline_dir / "fleet.json")
        incidents = storage.load_incidents(pipeline_dir / "incidents.ndjson")
        cards = storage.load_scorecards(pipeline_dir / "scores.json")
        thresholds = storage.load_thresholds(pipeline_dir / "thresholds.json")
        assert len(fleet.datacenters) == 8
        assert incidents
        assert {c.scope.value for c in cards} == {"layer", "datacenter", "region"}
        assert thresholds.t_amber <= thresholds.t_orange <= thresholds.t_red
        header = (pipeline_dir / "heatmap.csv").read_text().splitlines()[0]
        assert header == "region,dc,persisted,color"

    def test_reproducible_outputs(self, pipeline_dir, tmp_path):
        result = run_cli(
            "gen-fleet", "--dcs", "8", "--regions", "2", "--seed", "42",
            "--out", str(tmp_path / "fleet.json"),
        )
        assert result.returncode == 0
        assert (tmp_path / "fleet.json").read_bytes() == (pipeline_dir / "fleet.json").read_bytes()

    def test_missing_fleet_exits_one_naming_path(self, tmp_path):
        result = run_cli(
            "score", "--fleet", "missing.json", "--incidents", "x.ndjson",
            "--out", "scores.json", cwd=tmp_path,
        )
        assert result.returncode == 1
        assert "missing.json" in result.stderr

    def test_json_error_format(self, tmp_path):
        result = run_cli(
            "score", "--fleet", "missing.json", "--incidents", "x.ndjson",
            "--out", "scores.json", "--format", "json", cwd=tmp_path,
        )
        assert result.returncode == 1
        payload = json.loads(result.stderr.strip())
        assert "missing.json" in payload["error"]

    def test_usage_error_exits_two(self):
        result = run_cli("score", "--no-such-flag")
        assert result.returncode == 2


@pytest.fixture(scope="module")
def run_dir(tmp_path_factory) -> Path:
    root = tmp_path_factory.mktemp("sim")
    spec = {
        "fleet": {"seed": 7, "n_regions": 2, "n_datacenters": 6, "elements_per_layer": [3, 6]},
        "scenario": {"duration_days": 20},
        "history_seed": 7,
        "preroll_days": 365,
    }
    (root / "scenario.json").write_text(json.dumps(spec))
    result = run_cli("simulate", "--spec", "scenario.json", "--out-dir", "run1", cwd=root)
    assert result.returncode == 0, result.stderr
    return root / "run1"


class TestSimulateAndAudit:

    def test_simulate_writes_artifacts(self, run_dir):
        for name in (
            "fleet.json", "incidents.ndjson", "scores.json", "thresholds.json",
            "thresholds-region.json", "assignments.ndjson", "heatmap.csv",
        ):
            assert (run_dir / name).exists(), name
        store = storage.HistoryStore(run_dir / "history")
        scope_ids = store.scope_ids()
        assert scope_ids
        series = store.read_series(scope_ids[0])
        assert len(series.points) == 20

    def test_audit_on_simulated_assignments(self, run_dir):
        result = run_cli("audit", "--assignments", str(run_dir / "assignments.ndjson"))
        assert result.returncode in (0, 1)
        assert "red" in result.stdout

    def test_audit_non_compliant_exits_one(self, tmp_path):
        from datetime import date, timedelta
        from ansc.scoring import Color

        rows = []
        for d in range(365):
            day = date(2025, 1, 1) + timedelta(days=d)
            for i in range(400):
                color = Color.RED if i < 44 else Color.GREEN
                rows.append((f"dc{i:03d}", day, color))
        storage.save_assignments(rows, tmp_path / "assignments.ndjson")
        result = run_cli(
            "audit", "--assignments", str(tmp_path / "assignments.ndjson"), "--format", "json",
        )
        assert result.returncode == 1
        payload = json.loads(result.stdout)
        red = next(r for r in payload["results"] if r["color"] == "red")
        assert red["fraction"] == pytest.approx(0.11)
        assert red["limit"] == pytest.approx(0.10)
        assert not payload["compliant"]

    def test_whatif_command(self, pipeline_dir, tmp_path):
        fleet = storage.load_fleet(pipeline_dir / "fleet.json")
        eid = fleet.datacenters[0].layers[0].elements[0].id
        actions = [{"kind": "drain_element", "element_id": eid}]
        (tmp_path / "actions.json").write_text(json.dumps(actions))
        result = run_cli(
            "whatif",
            "--fleet", str(pipeline_dir / "fleet.json"),
            "--thresholds", str(pipeline_dir / "thresholds.json"),
            "--incidents", str(pipeline_dir / "incidents.ndjson"),
            "--actions", str(tmp_path / "actions.json"),
        )
        assert result.returncode == 0, result.stderr
        payload = json.loads(result.stdout)
        assert payload["safe_to_remove"] in (True, False)
        assert payload["before"] and payload["after"]


class TestHelp:
    def test_every_subcommand_has_help(self):
        for name in main.commands:
            result = run_cli(name, "--help")
            assert result.returncode == 0, name
            assert "--help" in result.stdout or "Usage" in result.stdout

    def test_seed_env_fallback(self, tmp_path):
        import os
        import subprocess as sp

        env = dict(os.environ, ANSC_SEED="42")
        result = sp.run(
            [sys.executable, "-m", "ansc", "gen-fleet", "--dcs", "4", "--regions", "2",
             "--out", str(tmp_path / "a.json")],
            capture_output=True, text=True, env=env,
        )
        assert result.returncode == 0, result.stderr
        again = run_cli(
            "gen-fleet", "--dcs", "4", "--regions", "2", "--seed", "42",
            "--out", str(tmp_path / "b.json"),
        )
        assert again.returncode == 0
        assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()
