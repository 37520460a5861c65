#!/usr/bin/env python3
"""Record regression baselines for the shipped jobs.

Runs each job on its own grid, refuses to record anything unless every
row passes, and writes ``tests/baselines/<job>.json`` with per-row-key
counts and residual ceilings.

Usage:
    python3 scripts/update-baselines.py [jobs/pentagon.json ...]

Example:
    python3 scripts/update-baselines.py jobs/commute.json
"""

import argparse
import sys
from pathlib import Path
from typing import List, Optional, Sequence

PROJECT_ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(PROJECT_ROOT))

from tetraweights.baselines import baseline_from_rows, write_baseline  # noqa: E402
from tetraweights.cli import EXIT_PASS, execute, load_job, plan, summarize  # noqa: E402
from tetraweights.console import print_error, print_info, print_success  # noqa: E402
from tetraweights.errors import TetraError  # noqa: E402

BASELINE_JOBS = (
    "pentagon.json",
    "pentagon-klv.json",
    "te6.json",
    "te6-klv.json",
    "sweep-eps.json",
    "commute.json",
)


def default_jobs() -> List[Path]:
    """Job files that have a committed baseline.

    Returns:
        List of Path objects under jobs/
    """
    return [PROJECT_ROOT / "jobs" / name for name in BASELINE_JOBS]


def record(job_path: Path, out_dir: Path, workers: int = 1) -> bool:
    """Run one job and write its baseline.

    Args:
        job_path: Job file to run
        out_dir: Directory receiving ``<job stem>.json``
        workers: Threads for independent instances

    Returns:
        True if the baseline was written, False if the job failed
    """
    try:
        job = load_job(job_path)
        rows = execute(plan(job), workers)
    except TetraError as exc:
        print_error(f"{job_path.name}: {type(exc).__name__}: {exc}")
        return False
    if summarize(rows) != EXIT_PASS:
        print_error(f"{job_path.name}: not every row passes; baseline unchanged")
        return False
    baseline = baseline_from_rows(job_path.name, rows)
    path = write_baseline(baseline, out_dir / f"{job_path.stem}.json")
    print_success(f"Wrote {path} ({len(baseline.entries)} entries)")
    return True


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Main entry point."""
    parser = argparse.ArgumentParser(
        description="Record regression baselines for the shipped jobs",
        epilog="Example: %(prog)s jobs/commute.json",
    )
    parser.add_argument(
        "jobs", nargs="*", type=Path, help="Job files (default: every baselined job)"
    )
    parser.add_argument(
        "--out",
        type=Path,
        default=PROJECT_ROOT / "tests" / "baselines",
        help="Baseline directory (default: tests/baselines)",
    )
    parser.add_argument(
        "--workers", type=int, default=1, help="Threads for independent instances"
    )
    args = parser.parse_args(argv)

    jobs = args.jobs or default_jobs()
    print_info(f"Recording {len(jobs)} baseline(s)")
    written = [record(path, args.out, max(1, args.workers)) for path in jobs]
    return 0 if all(written) else 1


if __name__ == "__main__":
    sys.exit(main())
