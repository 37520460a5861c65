"""Committed regression baselines for the shipped jobs.

A baseline lists, per row key (command plus a grid label pattern), how
many rows a job emits and a ceiling on their ``rel_residual``. Exact
residual digits move with the platform's floating point, so ceilings sit
two decades above the largest residual observed when the baseline was
recorded, and never above the job's acceptance threshold.
"""

from __future__ import annotations

import json
import math
from collections import defaultdict
from dataclasses import dataclass
from fnmatch import fnmatchcase
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

from .errors import ConfigError
from .reports import SuiteRow

BASELINE_SCHEMA = 1
MARGIN = 100.0


@dataclass(frozen=True)
class BaselineEntry:
    """Expected rows of one command on grids matching ``grid``."""

    command: str
    grid: str
    count: int
    max_rel_residual: float

    def matches(self, row: SuiteRow) -> bool:
        return row.command == self.command and fnmatchcase(row.grid, self.grid)

    def to_dict(self) -> dict[str, Any]:
        return {
            "command": self.command,
            "grid": self.grid,
            "count": self.count,
            "max_rel_residual": self.max_rel_residual,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "BaselineEntry":
        try:
            return cls(
                str(data["command"]),
                str(data["grid"]),
                int(data["count"]),
                float(data["max_rel_residual"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"malformed baseline entry {dict(data)}: {exc}") from exc


@dataclass(frozen=True)
class Baseline:
    """Row expectations for one job file at one seed."""

    job: str
    seed: int
    entries: tuple[BaselineEntry, ...]

    def to_dict(self) -> dict[str, Any]:
        return {
            "schema": BASELINE_SCHEMA,
            "job": self.job,
            "seed": self.seed,
            "entries": [entry.to_dict() for entry in self.entries],
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "Baseline":
        if data.get("schema") != BASELINE_SCHEMA:
            raise ConfigError(
                f"unsupported baseline schema {data.get('schema')!r}; "
                f"expected {BASELINE_SCHEMA}"
            )
        entries = data.get("entries")
        if not isinstance(entries, list) or not entries:
            raise ConfigError("baseline needs a non-empty entries list")
        try:
            job, seed = str(data["job"]), int(data["seed"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"baseline needs job and seed: {exc}") from exc
        return cls(job, seed, tuple(BaselineEntry.from_dict(e) for e in entries))


def load_baseline(path: Path) -> Baseline:
    """Read a baseline file.

    Raises:
        ConfigError: Unreadable file, invalid JSON or schema violation
    """
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read baseline {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"baseline {path} must be a JSON object")
    return Baseline.from_dict(data)


def write_baseline(baseline: Baseline, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(baseline.to_dict(), handle, indent=2)
        handle.write("\n")
    return path


def ceiling_for(observed: float, threshold: float) -> float:
    """Next power of ten above ``MARGIN`` times the observed residual, capped."""
    exponent = math.ceil(math.log10(max(observed, 1e-16) * MARGIN))
    return min(threshold, 10.0**exponent)


def baseline_from_rows(job: str, rows: Sequence[SuiteRow]) -> Baseline:
    """Record the rows of a passing run as a baseline.

    Raises:
        ConfigError: If the rows are empty or mix seeds
    """
    if not rows:
        raise ConfigError("cannot record a baseline from zero rows")
    seeds = {row.seed for row in rows}
    if len(seeds) != 1:
        raise ConfigError(f"rows mix seeds {sorted(seeds)}")
    groups: dict[tuple[str, str], list[SuiteRow]] = defaultdict(list)
    for row in rows:
        groups[(row.command, row.grid)].append(row)
    entries = tuple(
        BaselineEntry(
            command,
            grid,
            len(members),
            ceiling_for(
                max(row.rel_residual for row in members),
                max(row.threshold for row in members),
            ),
        )
        for (command, grid), members in sorted(groups.items())
    )
    return Baseline(job, seeds.pop(), entries)


def compare(rows: Iterable[SuiteRow], baseline: Baseline) -> list[str]:
    """Every difference between a run and its baseline; empty when they agree."""
    rows = list(rows)
    problems = []
    for row in rows:
        if row.seed != baseline.seed:
            problems.append(
                f"{row.command} {row.param_digest}: seed {row.seed}, "
                f"baseline has {baseline.seed}"
            )
        if not any(entry.matches(row) for entry in baseline.entries):
            problems.append(f"unexpected row {row.command} on {row.grid}")
    for entry in baseline.entries:
        matched = [row for row in rows if entry.matches(row)]
        if len(matched) != entry.count:
            problems.append(
                f"{entry.command} on {entry.grid}: {len(matched)} rows, "
                f"expected {entry.count}"
            )
        over = [
            row.rel_residual
            for row in matched
            if not row.rel_residual <= entry.max_rel_residual
        ]
        if over:
            problems.append(
                f"{entry.command} on {entry.grid}: rel_residual {over[0]:.3e} "
                f"above baseline ceiling {entry.max_rel_residual:g}"
            )
    return problems
