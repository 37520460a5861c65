"""Tests for tetraweights/baselines.py and the committed job baselines."""

import importlib.util
import json
import sys
from pathlib import Path
from unittest.mock import patch

import pytest

sys.path.insert(0, str(Path(__file__).parent.parent))

from tetraweights import cli  # noqa: E402
from tetraweights.baselines import (  # noqa: E402
    Baseline,
    BaselineEntry,
    baseline_from_rows,
    ceiling_for,
    compare,
    load_baseline,
    write_baseline,
)
from tetraweights.errors import ConfigError  # noqa: E402
from tetraweights.reports import SuiteRow, read_csv  # noqa: E402

ROOT = Path(__file__).parent.parent
BASELINES = Path(__file__).parent / "baselines"
SCRIPT = ROOT / "scripts" / "update-baselines.py"

spec = importlib.util.spec_from_file_location("update_baselines", str(SCRIPT))
if spec and spec.loader:
    update_baselines = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(update_baselines)
else:
    raise ImportError("Failed to load update-baselines module")


def row(command="verify-te6", grid="circle:M=4096", rel=1e-9, seed=5, digest="a"):
    return SuiteRow(command, "3dindex(q=0.3)", digest, rel, rel, grid, seed, 0, 1e-6)


class TestCeiling:
    """Test residual ceilings."""

    def test_two_decades_above_observed(self):
        """Test that the ceiling is the next power of ten above 100x."""
        assert ceiling_for(3e-12, 1e-6) == pytest.approx(1e-9)
        assert ceiling_for(4e-11, 1e-6) == pytest.approx(1e-8)

    def test_capped_by_threshold(self):
        """Test that the ceiling never exceeds the acceptance threshold."""
        assert ceiling_for(5e-7, 1e-6) == 1e-6

    def test_zero_residual(self):
        """Test that exact agreement still gives a positive ceiling."""
        assert 0.0 < ceiling_for(0.0, 0.5) <= 1e-13


class TestCompare:
    """Test run-versus-baseline comparison."""

    def baseline(self):
        entries = (BaselineEntry("verify-te6", "circle:M=*", 2, 1e-8),)
        return Baseline("te6.json", 5, entries)

    def test_matching_run(self):
        """Test that agreeing rows give no problems."""
        rows = [row(digest="a"), row(digest="b", rel=2e-9)]
        assert compare(rows, self.baseline()) == []

    def test_residual_above_ceiling(self):
        """Test that a regression past the ceiling is reported."""
        rows = [row(digest="a"), row(digest="b", rel=1e-7)]
        problems = compare(rows, self.baseline())
        assert len(problems) == 1
        assert "above baseline ceiling" in problems[0]

    def test_missing_and_unexpected_rows(self):
        """Test row counts and rows no entry covers."""
        rows = [row(digest="a"), row(grid="line:X=8,panels=4,order=16")]
        problems = compare(rows, self.baseline())
        assert any("1 rows, expected 2" in p for p in problems)
        assert any("unexpected row" in p for p in problems)

    def test_seed_mismatch(self):
        """Test that rows from another seed are reported."""
        rows = [row(digest="a", seed=6), row(digest="b", seed=6)]
        problems = compare(rows, self.baseline())
        assert len(problems) == 2
        assert all("seed 6" in p for p in problems)

    def test_nan_residual_fails(self):
        """Test that a non-finite residual never passes the ceiling."""
        rows = [row(digest="a"), row(digest="b", rel=float("nan"))]
        assert compare(rows, self.baseline())


class TestBaselineFiles:
    """Test baseline recording and file handling."""

    def test_round_trip(self, tmp_path):
        """Test that recorded baselines load back unchanged."""
        rows = [row(digest="a", rel=3e-12), row(digest="b", rel=1e-12)]
        baseline = baseline_from_rows("te6.json", rows)
        assert baseline.entries == (
            BaselineEntry("verify-te6", "circle:M=4096", 2, pytest.approx(1e-9)),
        )
        path = write_baseline(baseline, tmp_path / "te6.json")
        assert load_baseline(path) == baseline
        assert compare(rows, load_baseline(path)) == []

    def test_mixed_seeds_rejected(self):
        """Test that a baseline comes from a single seed."""
        with pytest.raises(ConfigError, match="mix seeds"):
            baseline_from_rows("te6.json", [row(seed=1), row(seed=2)])

    @pytest.mark.parametrize(
        "content, message",
        [
            ("{", "te6.json:1:2"),
            ('{"schema": 2}', "unsupported baseline schema"),
            ('{"schema": 1, "job": "x", "seed": 1, "entries": []}', "entries"),
            ('{"schema": 1, "job": "x", "seed": 1, "entries": [{}]}', "malformed"),
        ],
    )
    def test_invalid_files(self, tmp_path, content, message):
        """Test that broken baseline files raise ConfigError."""
        path = tmp_path / "te6.json"
        path.write_text(content)
        with pytest.raises(ConfigError, match=message):
            load_baseline(path)

    @pytest.mark.parametrize("path", sorted(BASELINES.glob("*.json")), ids=str)
    def test_committed_baselines_load(self, path):
        """Test that every committed baseline names an existing job and seed."""
        baseline = load_baseline(path)
        job = cli.load_job(ROOT / "jobs" / baseline.job)
        assert baseline.seed == job.seed
        for entry in baseline.entries:
            assert entry.count >= 1
            assert entry.max_rel_residual <= max(job.threshold, 0.5)


class TestShippedJobs:
    """Test the shipped jobs against their committed baselines."""

    @pytest.mark.parametrize(
        "name",
        [
            "pentagon",
            "commute",
            pytest.param("pentagon-klv", marks=pytest.mark.slow),
            pytest.param("te6", marks=pytest.mark.slow),
            pytest.param("te6-klv", marks=pytest.mark.slow),
            pytest.param("sweep-eps", marks=pytest.mark.slow),
        ],
    )
    def test_job_matches_baseline(self, tmp_path, name):
        """Test the job's rows, grids and residual ceilings against the baseline."""
        job = ROOT / "jobs" / f"{name}.json"
        argv = ["--job", str(job), "--out", str(tmp_path), "--no-timing"]
        with patch("builtins.print"):
            assert cli.main(argv) == 0
        csv_name = cli.load_job(job).outputs["csv"]
        rows = read_csv(tmp_path / csv_name)
        assert compare(rows, load_baseline(BASELINES / f"{name}.json")) == []


class TestUpdateBaselines:
    """Test scripts/update-baselines.py."""

    def test_default_jobs_have_baselines(self):
        """Test that every default job has a committed baseline file."""
        for job in update_baselines.default_jobs():
            assert job.exists()
            assert (BASELINES / job.name).exists()

    def test_records_commute_job(self, tmp_path):
        """Test that recording the commute job writes a baseline its run matches."""
        job = ROOT / "jobs" / "commute.json"
        with patch("builtins.print"):
            assert update_baselines.main([str(job), "--out", str(tmp_path)]) == 0
        recorded = load_baseline(tmp_path / "commute.json")
        assert recorded.job == "commute.json"
        assert {e.grid for e in recorded.entries} == {
            "circle:M=8",
            "circle:M=16",
            "circle:M=32",
        }
        committed = load_baseline(BASELINES / "commute.json")
        assert sorted(e.count for e in recorded.entries) == sorted(
            e.count for e in committed.entries
        )

    def test_failing_job_is_not_recorded(self, tmp_path):
        """Test that a failing job leaves no baseline behind."""
        job = {
            "schema": 1,
            "command": "verify-pentagon",
            "instance": {"instances": 1},
            "grid": {"nodes": 256},
            "threshold": 1e-30,
        }
        path = tmp_path / "tight.json"
        path.write_text(json.dumps(job))
        with patch("builtins.print"):
            assert update_baselines.main([str(path), "--out", str(tmp_path)]) == 1
        assert sorted(p.name for p in tmp_path.iterdir()) == ["tight.json"]
