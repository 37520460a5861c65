"""Tests for tetraweights/cli.py job runner."""

import csv
import json
import sys
from collections import Counter
from pathlib import Path
from unittest.mock import patch

import pytest

sys.path.insert(0, str(Path(__file__).parent.parent))

from tetraweights import cli  # noqa: E402
from tetraweights.console import get_verbosity, set_verbosity  # noqa: E402
from tetraweights.errors import ConfigError  # noqa: E402

PENTAGON_JOB = {
    "schema": 1,
    "command": "verify-pentagon",
    "model": {"model": "3dindex", "q": 0.3},
    "instance": {"instances": 2},
    "grid": {"nodes": 256},
    "seed": 7,
    "threshold": 1e-6,
}
LATTICE = {"L": 1, "M": 2, "N": 2, "s": [0.125], "t": [0.5, 0.75], "u": [1.0, 1.25]}
LATTICE_ROWS = {
    "selftest:partition-1x1x2": 1,
    "selftest:partition-1x2x2": 1,
    "selftest:gauge-shift": 1,
    "selftest:commutator-1x1": 3,
    "selftest:commutator-1x1:monotone": 1,
    "selftest:commutator-1x2": 3,
}
QUICK_SELFTEST_ROWS = Counter(
    {
        "selftest:psi-inversion[b=1]": 1,
        "selftest:gq-inversion[q=0.3]": 1,
        "selftest:symmetry-3dindex": 1,
        "selftest:symmetry-klv": 1,
        "selftest:pentagon-3dindex": 1,
        "selftest:pentagon-klv": 1,
        "selftest:te6-3dindex": 1,
        **LATTICE_ROWS,
    }
)
FULL_SELFTEST_ROWS = Counter(
    {
        **{f"selftest:psi-inversion[b={b}]": 1 for b in ("0.8", "1", "1.3")},
        **{f"selftest:gq-inversion[q={q}]": 1 for q in ("0.2", "0.3", "0.5")},
        "selftest:symmetry-3dindex": 1,
        "selftest:symmetry-klv": 1,
        "selftest:pentagon-3dindex": 10,
        "selftest:pentagon-klv": 10,
        "selftest:pentagon-transpose-3dindex": 10,
        "selftest:pentagon-transpose-klv": 10,
        "selftest:te6-3dindex": 20,
        "selftest:te6-klv": 20,
        "selftest:sweep-eps": 4,
        "selftest:sweep-eps:stability": 1,
        "selftest:falsification-pentagon-3dindex": 1,
        "selftest:falsification-te6-3dindex": 1,
        **LATTICE_ROWS,
    }
)


@pytest.fixture(autouse=True)
def restore_verbosity():
    level = get_verbosity()
    yield
    set_verbosity(level)


def write_job(tmp_path, job, name="job.json"):
    path = tmp_path / name
    path.write_text(json.dumps(job))
    return path


def read_rows(path):
    with open(path, newline="") as handle:
        return list(csv.DictReader(handle))


def run_main(args):
    with patch("builtins.print"):
        return cli.main([str(a) for a in args])


class TestLoadJob:
    """Test job parsing and validation."""

    def test_defaults(self, tmp_path):
        """Test that optional fields take their defaults."""
        job = cli.load_job(write_job(tmp_path, {"schema": 1, "command": "partition"}))
        assert job.seed == cli.DEFAULT_SEED
        assert job.threshold == cli.DEFAULT_THRESHOLD
        assert job.outputs == {"csv": "report.csv", "json": "report.json"}
        assert job.model == {"model": "3dindex", "q": 0.3}

    def test_syntax_error_reports_position(self, tmp_path):
        """Test that JSON syntax errors name line and column."""
        path = tmp_path / "broken.json"
        path.write_text('{\n  "schema": 1,\n  "command" "partition"\n}')
        with pytest.raises(ConfigError, match=r"broken.json:3:\d+"):
            cli.load_job(path)

    def test_missing_file(self, tmp_path):
        """Test that an unreadable job raises ConfigError."""
        with pytest.raises(ConfigError, match="cannot read"):
            cli.load_job(tmp_path / "absent.json")

    @pytest.mark.parametrize(
        "changes, message",
        [
            ({"schema": 2}, "unsupported schema"),
            ({"command": "verify-everything"}, "unknown command"),
            ({"seed": -1}, "seed"),
            ({"seed": True}, "seed"),
            ({"threshold": 0}, "threshold"),
            ({"grid": [256]}, "grid must be"),
            ({"threshold": True}, "threshold"),
            ({"outputs": {"csv": 3}}, "outputs.csv"),
        ],
    )
    def test_invalid_fields(self, changes, message):
        """Test field validation."""
        with pytest.raises(ConfigError, match=message):
            cli.parse_job(dict(PENTAGON_JOB, **changes))

    def test_not_an_object(self):
        """Test that the top level must be an object."""
        with pytest.raises(ConfigError):
            cli.parse_job([1, 2])


class TestBuildGrid:
    """Test grid selection for jobs."""

    def test_circle_override(self):
        """Test that --nodes sets the circle size."""
        w = cli.weight_from_config({"model": "3dindex", "q": 0.3})
        assert cli.build_grid(w, {"nodes": 128}, 0.3, 64).describe() == "circle:M=64"
        assert cli.build_grid(w, {"nodes": 128}, 0.3).describe() == "circle:M=128"

    def test_line_override(self):
        """Test that --nodes turns into panels of the line grid."""
        w = cli.weight_from_config({"model": "klv", "b": 1.0})
        grid = cli.build_grid(w, {}, 0.3, 512)
        assert grid.describe() == "line:X=8,panels=32,order=16"

    def test_bad_grid_block(self):
        """Test that malformed grid values raise ConfigError."""
        w = cli.weight_from_config({"model": "klv", "b": 1.0})
        with pytest.raises(ConfigError):
            cli.build_grid(w, {"x_max": "far"}, 0.3)


class TestMain:
    """Test the command-line entry point."""

    def test_pentagon_job_passes(self, tmp_path):
        """Test the pinned 3D-index pentagon job at threshold 1e-6."""
        job = write_job(tmp_path, PENTAGON_JOB)
        assert run_main(["--job", job, "--out", tmp_path]) == 0
        rows = read_rows(tmp_path / "report.csv")
        assert len(rows) == 2
        assert {r["grid"] for r in rows} == {"circle:M=256"}
        assert all(float(r["rel_residual"]) < 1e-8 for r in rows)
        report = json.loads((tmp_path / "report.json").read_text())
        assert report["job"]["seed"] == 7

    def test_threshold_failure(self, tmp_path, capsys):
        """Test exit code 1 and the failure listing on stderr."""
        job = write_job(tmp_path, PENTAGON_JOB)
        argv = ["--job", str(job), "--out", str(tmp_path), "--threshold", "1e-30"]
        assert cli.main(argv) == 1
        err = capsys.readouterr().err
        assert "2 of 2 checks failed" in err
        assert "verify-pentagon" in err

    def test_invalid_json_exits_2(self, tmp_path, capsys):
        """Test exit code 2 with line and column of the syntax error."""
        path = tmp_path / "bad.json"
        path.write_text('{"schema": 1,,}')
        assert cli.main(["--job", str(path)]) == 2
        assert "bad.json:1:" in capsys.readouterr().err

    def test_numerical_precondition_exits_2(self, tmp_path):
        """Test that a point outside D is an error, not a failure."""
        job = dict(
            PENTAGON_JOB,
            command="verify-te6",
            instance={"rho": [0.0, 0.3, 0.2, 0.6, 0.65, 0.7]},
        )
        assert run_main(["--job", write_job(tmp_path, job), "--out", tmp_path]) == 2
        assert not (tmp_path / "report.csv").exists()

    @pytest.mark.parametrize(
        "changes, message",
        [
            ({"command": "verify-te4", "instance": {"eps": "abc"}}, "eps"),
            ({"instance": {"alpha2_1": [1]}}, "alpha2_1"),
            ({"instance": {"alpha0": [0.5, 2.0]}}, "alpha0"),
            ({"instance": {"variant": "mirror"}}, "variant"),
            ({"command": "verify-te6", "instance": {"rho": 3}}, "rho"),
            ({"command": "sweep-eps", "instance": {"deltas": [0.02, None]}}, "deltas"),
            ({"model": {"model": "3dindex", "q": [0.3]}}, "q as a list"),
            ({"model": {"model": "klv", "b": "one"}}, "b must be"),
            (
                {"command": "transfer-commute", "instance": {"nodes": ["x"]}},
                "nodes",
            ),
            ({"command": "transfer-commute", "instance": {"nodes": 1}}, "nodes"),
            ({"command": "partition", "instance": {"lattice": [1, 1, 2]}}, "lattice"),
            ({"command": "selftest", "instance": {"mode": "fast"}}, "mode"),
        ],
    )
    def test_malformed_field_exits_2(self, tmp_path, capsys, changes, message):
        """Test that a malformed job field is a ConfigError with exit code 2."""
        job = write_job(tmp_path, dict(PENTAGON_JOB, **changes))
        assert cli.main(["--job", str(job), "--out", str(tmp_path)]) == 2
        assert "Traceback" not in capsys.readouterr().err
        assert not (tmp_path / "report.csv").exists()
        with pytest.raises(ConfigError, match=message):
            cli.plan(cli.load_job(job))

    def test_invalid_override_exits_2(self, tmp_path):
        """Test that a non-positive --threshold is rejected."""
        job = write_job(tmp_path, PENTAGON_JOB)
        assert run_main(["--job", job, "--threshold", "0"]) == 2

    def test_no_timing_is_byte_stable(self, tmp_path):
        """Test identical CSV bytes across runs and worker counts."""
        job = write_job(tmp_path, PENTAGON_JOB)
        run_main(["--job", job, "--out", tmp_path / "a", "--no-timing"])
        run_main(
            ["--job", job, "--out", tmp_path / "b", "--no-timing", "--workers", "2"]
        )
        first = (tmp_path / "a" / "report.csv").read_bytes()
        assert first == (tmp_path / "b" / "report.csv").read_bytes()

    def test_seed_override(self, tmp_path):
        """Test that --seed changes the sampled instances."""
        job = write_job(tmp_path, PENTAGON_JOB)
        run_main(["--job", job, "--out", tmp_path / "a", "--no-timing"])
        run_main(["--job", job, "--out", tmp_path / "b", "--no-timing", "--seed", "8"])
        rows_a = read_rows(tmp_path / "a" / "report.csv")
        digests_a = {r["param_digest"] for r in rows_a}
        rows_b = read_rows(tmp_path / "b" / "report.csv")
        assert digests_a.isdisjoint({r["param_digest"] for r in rows_b})
        assert {r["seed"] for r in rows_b} == {"8"}

    def test_falsification_job_fails(self, tmp_path):
        """Test that a detuned pentagon job exits 1."""
        job = dict(PENTAGON_JOB, instance={"instances": 1, "perturbation": 0.05})
        assert run_main(["--job", write_job(tmp_path, job), "--out", tmp_path]) == 1

    def test_te6_job(self, tmp_path):
        """Test a tetrahedron-equation job at the wide point."""
        job = dict(
            PENTAGON_JOB,
            command="verify-te6",
            instance={"rho": [0.0, 0.6, 1.2, 1.2, 1.5, 1.8], "instances": 1},
        )
        assert run_main(["--job", write_job(tmp_path, job), "--out", tmp_path]) == 0

    def test_te4_and_sweep_jobs(self, tmp_path):
        """Test the four-parameter equation and its flat-limit sweep."""
        base = dict(PENTAGON_JOB, grid={}, threshold=1e-5)
        instance = {"r": [0.0, 0.1, 0.3, 0.6], "instances": 1}
        te4 = dict(base, command="verify-te4", instance=instance)
        te4_job = write_job(tmp_path, te4)
        assert run_main(["--job", te4_job, "--out", tmp_path / "te4"]) == 0
        sweep = dict(base, command="sweep-eps", instance={"deltas": [0.04, 0.02]})
        sweep_job = write_job(tmp_path, sweep)
        assert run_main(["--job", sweep_job, "--out", tmp_path / "sweep"]) == 0
        commands = [r["command"] for r in read_rows(tmp_path / "sweep" / "report.csv")]
        assert commands.count("sweep-eps") == 2
        assert "sweep-eps:stability" in commands

    def test_te4_precondition_exits_2(self, tmp_path):
        """Test that eps <= delta is rejected before any work."""
        instance = {"eps": 0.01, "delta": 0.01}
        job = dict(PENTAGON_JOB, command="verify-te4", instance=instance)
        assert run_main(["--job", write_job(tmp_path, job), "--out", tmp_path]) == 2

    @pytest.mark.parametrize(
        "command", ["partition", "gauge-probe", "transfer-commute"]
    )
    def test_lattice_jobs(self, tmp_path, command):
        """Test the lattice commands on a 1x2x2 torus."""
        job = {
            "schema": 1,
            "command": command,
            "model": {"model": "3dindex", "q": 0.3},
            "instance": {"lattice": LATTICE, "nodes": [4, 8]},
            "threshold": 1e-9,
        }
        if command == "transfer-commute":
            job["instance"]["lattice"] = dict(LATTICE, M=1, t=[0.5])
        assert run_main(["--job", write_job(tmp_path, job), "--out", tmp_path]) == 0
        assert read_rows(tmp_path / "report.csv")

    def test_verbose_flag(self, tmp_path):
        """Test that -vv raises verbosity to debug."""
        job = write_job(tmp_path, dict(PENTAGON_JOB, instance={"instances": 1}))
        run_main(["--job", job, "--out", tmp_path, "-vv"])
        assert get_verbosity() == "debug"

    def test_lattice_rows_carry_reports(self, tmp_path):
        """Test that partition rows write their residual report to JSON."""
        job = {
            "schema": 1,
            "command": "partition",
            "instance": {"lattice": LATTICE},
            "grid": {"nodes": 8},
            "threshold": 1e-9,
        }
        assert run_main(["--job", write_job(tmp_path, job), "--out", tmp_path]) == 0
        row = json.loads((tmp_path / "report.json").read_text())["rows"][0]
        assert row["report"]["inputs_digest"]["inputs"]["kind"] == "partition"
        assert row["report"]["inputs_digest"]["digest"] == row["param_digest"]
        assert row["report"]["quad_meta"]["label"] == "circle:M=8"

    def test_selftest_quick(self, tmp_path):
        """Test the quick selftest and the row set it emits."""
        job = {"schema": 1, "command": "selftest", "instance": {"mode": "quick"}}
        assert run_main(["--job", write_job(tmp_path, job), "--out", tmp_path]) == 0
        counts = Counter(r["command"] for r in read_rows(tmp_path / "report.csv"))
        assert counts == QUICK_SELFTEST_ROWS

    @pytest.mark.slow
    def test_selftest(self, tmp_path):
        """Test the full invariant suite and the row set it emits."""
        job = write_job(tmp_path, {"schema": 1, "command": "selftest"})
        assert run_main(["--job", job, "--out", tmp_path]) == 0
        counts = Counter(r["command"] for r in read_rows(tmp_path / "report.csv"))
        assert counts == FULL_SELFTEST_ROWS
        assert sum(counts.values()) == 105
