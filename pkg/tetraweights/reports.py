"""Residual reports and their CSV/JSON serialisation."""

from __future__ import annotations

import csv
import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping, Optional

import numpy as np

from .errors import DegenerateInstance

SCHEMA_VERSION = 1
UNDERFLOW = 1e-300
CSV_COLUMNS = (
    "command",
    "model",
    "param_digest",
    "rel_residual",
    "abs_residual",
    "grid",
    "seed",
    "wall_ms",
)


def to_jsonable(value: Any) -> Any:
    """Convert complex numbers, numpy scalars/arrays and tuples for json.dumps."""
    if isinstance(value, Mapping):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, (complex, np.complexfloating)):
        return {"re": float(value.real), "im": float(value.imag)}
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    return value


def canonical_json(record: Any) -> str:
    return json.dumps(to_jsonable(record), sort_keys=True, separators=(",", ":"))


def param_digest(record: Any) -> str:
    """Short stable hash of a parameter record."""
    return hashlib.sha256(canonical_json(record).encode("utf-8")).hexdigest()[:16]


@dataclass(frozen=True)
class ResidualReport:
    """Both sides of a verified identity and their residuals.

    ``inputs_digest`` holds the seed and the full parameter record under
    "inputs" plus its hash under "digest"; re-running the verifier on those
    inputs reproduces the report.
    """

    lhs: complex
    rhs: complex
    abs_residual: float
    rel_residual: float
    quad_meta: dict = field(default_factory=dict)
    inputs_digest: dict = field(default_factory=dict)

    @classmethod
    def from_sides(
        cls,
        lhs: complex,
        rhs: complex,
        quad_meta: Optional[Mapping[str, Any]] = None,
        inputs: Optional[Mapping[str, Any]] = None,
    ) -> "ResidualReport":
        """Build a report, rejecting instances where both sides underflow.

        Raises:
            DegenerateInstance: If |lhs| and |rhs| are both below 1e-300
        """
        lhs, rhs = complex(lhs), complex(rhs)
        scale = abs(lhs) + abs(rhs)
        if abs(lhs) < UNDERFLOW and abs(rhs) < UNDERFLOW:
            raise DegenerateInstance(f"both sides underflow (|lhs|={abs(lhs):.1e})")
        difference = abs(lhs - rhs)
        relative = min(1.0, difference / scale) if math.isfinite(scale) else 1.0
        inputs = dict(inputs or {})
        digest = {
            "seed": inputs.get("seed"),
            "inputs": inputs,
            "digest": param_digest(inputs),
        }
        return cls(lhs, rhs, difference, relative, dict(quad_meta or {}), digest)

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "ResidualReport":
        """Rebuild a report written by :meth:`to_dict`."""

        def number(value: Any) -> complex:
            if isinstance(value, Mapping):
                return complex(value["re"], value["im"])
            return complex(value)

        return cls(
            lhs=number(data["lhs"]),
            rhs=number(data["rhs"]),
            abs_residual=float(data["abs_residual"]),
            rel_residual=float(data["rel_residual"]),
            quad_meta=dict(data.get("quad_meta", {})),
            inputs_digest=dict(data.get("inputs_digest", {})),
        )

    @property
    def digest(self) -> str:
        return self.inputs_digest.get("digest", "")

    def to_dict(self) -> dict[str, Any]:
        return to_jsonable(
            {
                "lhs": self.lhs,
                "rhs": self.rhs,
                "abs_residual": self.abs_residual,
                "rel_residual": self.rel_residual,
                "quad_meta": self.quad_meta,
                "inputs_digest": self.inputs_digest,
            }
        )


@dataclass(frozen=True)
class SuiteRow:
    """One CSV row: an instance result checked against a threshold."""

    command: str
    model: str
    param_digest: str
    rel_residual: float
    abs_residual: float
    grid: str
    seed: int
    wall_ms: int = 0
    threshold: float = 0.0
    detail: dict = field(default_factory=dict, compare=False)
    report: Optional[ResidualReport] = field(default=None, compare=False)

    @property
    def passed(self) -> bool:
        return math.isfinite(self.rel_residual) and self.rel_residual < self.threshold

    def sort_key(self) -> tuple:
        return (self.command, self.param_digest, self.seed, self.grid)

    def csv_fields(self, timing: bool = True) -> list[str]:
        return [
            self.command,
            self.model,
            self.param_digest,
            f"{self.rel_residual:.17g}",
            f"{self.abs_residual:.17g}",
            self.grid,
            str(self.seed),
            str(self.wall_ms if timing else 0),
        ]

    def to_dict(self) -> dict[str, Any]:
        record = {name: getattr(self, name) for name in CSV_COLUMNS}
        record.update(
            {
                "threshold": self.threshold,
                "passed": self.passed,
                "detail": self.detail,
                "report": self.report.to_dict() if self.report else None,
            }
        )
        return to_jsonable(record)


def sorted_rows(rows: Iterable[SuiteRow]) -> list[SuiteRow]:
    return sorted(rows, key=SuiteRow.sort_key)


def write_csv(rows: Iterable[SuiteRow], path: Path, timing: bool = True) -> Path:
    """Write rows sorted by their stable key; identical rows give identical bytes."""
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for row in sorted_rows(rows):
            writer.writerow(row.csv_fields(timing))
    return path


def read_csv(path: Path) -> list[SuiteRow]:
    """Read rows back from a report written by :func:`write_csv`.

    Thresholds are not part of the CSV, so read rows carry threshold 0.
    """
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(handle)
        return [
            SuiteRow(
                command=record["command"],
                model=record["model"],
                param_digest=record["param_digest"],
                rel_residual=float(record["rel_residual"]),
                abs_residual=float(record["abs_residual"]),
                grid=record["grid"],
                seed=int(record["seed"]),
                wall_ms=int(record["wall_ms"]),
            )
            for record in reader
        ]


def write_json(rows: Iterable[SuiteRow], path: Path, job: Mapping[str, Any]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = {
        "schema": SCHEMA_VERSION,
        "job": to_jsonable(job),
        "rows": [row.to_dict() for row in sorted_rows(rows)],
    }
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(payload, handle, indent=2, sort_keys=True)
        handle.write("\n")
    return path
