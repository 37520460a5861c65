"""Batch front-end: run a JSON job, write CSV/JSON reports, exit 0/1/2.

Every job is validated and planned into independent tasks before any
numerical work starts; tasks may run on a thread pool and their rows are
sorted by a stable key before writing.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Callable, Mapping, Optional, Sequence

import numpy as np

from .console import (
    Colors,
    print_colored,
    print_error,
    print_info,
    print_success,
    set_verbosity,
)
from .errors import ConfigError, OrderingViolated, PreconditionError, TetraError
from .identities import (
    DEFAULT_SEED,
    SWEEP_DELTAS,
    TE6_EXTERNALS,
    falsification_probe,
    run_resampled,
    sample_externals,
    sample_pentagon_instance,
    sample_te6_instance,
    sweep_eps,
    sweep_is_stable,
    verify_pentagon,
    verify_pentagon_bar,
    verify_pentagon_transpose,
    verify_te4,
    verify_te6,
)
from .lattice import (
    LatticeSpec,
    build_layer_transfer,
    commutator_norm,
    gauge_probe,
    partition_bruteforce,
    partition_trace,
)
from .quadrature import AdaptiveLine, GridLike, StateSpace, circle_grid, line_grid
from .reports import (
    SCHEMA_VERSION,
    ResidualReport,
    SuiteRow,
    param_digest,
    write_csv,
    write_json,
)
from .shapes import (
    AngleTriple,
    GaugeField,
    RhoSix,
    SpectralQuad,
    pentagon_angles,
    rho_regularized,
    spectral_ordered,
    te6_angles,
)
from .specfun import BParam, QParam, g_q, psi_b
from .weights import (
    EdgeStates,
    KLVWeight,
    TetWeight,
    ThreeDIndexWeight,
    eval_T,
    rotate_z2,
    rotate_z3,
    transpose_T,
    weight_from_config,
)

COMMANDS = (
    "verify-pentagon",
    "verify-te6",
    "verify-te4",
    "sweep-eps",
    "transfer-commute",
    "partition",
    "gauge-probe",
    "selftest",
)
DEFAULT_THRESHOLD = 1e-6
DEFAULT_OUTPUTS = {"csv": "report.csv", "json": "report.json"}
EXIT_PASS, EXIT_FAIL, EXIT_ERROR = 0, 1, 2

# pinned instances
PINNED_ALPHA0 = (math.pi / 6, 2 * math.pi / 3, math.pi / 6)
PINNED_ALPHA4 = PINNED_ALPHA0
PINNED_ALPHA2_1 = math.pi / 12
PINNED_RHO = (0.0, 0.1, 0.2, 0.6, 0.65, 0.7)
WIDE_RHO = (0.0, 0.6, 1.2, 1.2, 1.5, 1.8)
PINNED_R = (0.0, 0.1, 0.3, 0.6)
PINNED_LATTICE = {"L": 1, "M": 1, "N": 2, "s": [0.125], "t": [0.5], "u": [1.0, 1.25]}
STRIP_LATTICE = {
    "L": 1,
    "M": 2,
    "N": 2,
    "s": [0.125],
    "t": [0.5, 0.75],
    "u": [1.0, 1.25],
}
COMMUTE_NODES = (8, 16, 32)
FALSIFICATION_SHIFT = 0.05
# on-manifold over detuned residual; below 1e-2 means a 100x jump
FALSIFICATION_RATIO = 1e-2

Task = Callable[[], list[SuiteRow]]


@dataclass(frozen=True)
class Job:
    """A validated job description."""

    command: str
    model: dict
    instance: dict = field(default_factory=dict)
    grid: dict = field(default_factory=dict)
    seed: int = DEFAULT_SEED
    threshold: float = DEFAULT_THRESHOLD
    outputs: dict = field(default_factory=lambda: dict(DEFAULT_OUTPUTS))

    def to_dict(self) -> dict[str, Any]:
        return {
            "schema": SCHEMA_VERSION,
            "command": self.command,
            "model": self.model,
            "instance": self.instance,
            "grid": self.grid,
            "seed": self.seed,
            "threshold": self.threshold,
            "outputs": self.outputs,
        }


def parse_job(data: Any) -> Job:
    """Validate a decoded job document.

    Raises:
        ConfigError: On any schema violation
    """
    if not isinstance(data, dict):
        raise ConfigError("job must be a JSON object")
    if data.get("schema") != SCHEMA_VERSION:
        raise ConfigError(
            f"unsupported schema {data.get('schema')!r}; expected {SCHEMA_VERSION}"
        )
    command = data.get("command")
    if command not in COMMANDS:
        raise ConfigError(
            f"unknown command {command!r}; expected one of {', '.join(COMMANDS)}"
        )
    model = data.get("model", {"model": "3dindex", "q": 0.3})
    for name in ("model", "instance", "grid", "outputs"):
        if name in data and not isinstance(data[name], dict):
            raise ConfigError(f"{name} must be a JSON object")
    seed = data.get("seed", DEFAULT_SEED)
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        raise ConfigError(f"seed must be a non-negative integer, got {seed!r}")
    threshold = data.get("threshold", DEFAULT_THRESHOLD)
    valid = isinstance(threshold, (int, float)) and not isinstance(threshold, bool)
    if not valid or not threshold > 0:
        raise ConfigError(f"threshold must be a positive number, got {threshold!r}")
    outputs = dict(DEFAULT_OUTPUTS, **data.get("outputs", {}))
    for name, value in outputs.items():
        if not isinstance(value, str) or not value:
            raise ConfigError(f"outputs.{name} must be a file name, got {value!r}")
    return Job(
        command=command,
        model=dict(model),
        instance=dict(data.get("instance", {})),
        grid=dict(data.get("grid", {})),
        seed=seed,
        threshold=float(threshold),
        outputs=outputs,
    )


def load_job(path: Path) -> Job:
    """Read and validate a job file; JSON syntax errors report line and column."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read job file {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    return parse_job(data)


def _model_label(w: TetWeight) -> str:
    params = ",".join(f"{k}={v}" for k, v in w.describe().items() if k != "model")
    return f"{w.name}({params})"


def build_grid(
    w: TetWeight,
    spec: Mapping[str, Any],
    alpha_min: float,
    nodes: Optional[int] = None,
) -> GridLike:
    """Grid from the --nodes override, the job's grid block or the model default."""
    try:
        if w.state_space is StateSpace.UNIT_CIRCLE:
            count = nodes or spec.get("nodes")
            return circle_grid(int(count)) if count else w.suggest_grid(alpha_min)
        order = int(spec.get("order", 16))
        x_max = float(spec.get("x_max", 8.0))
        if nodes:
            return line_grid(x_max, max(2, int(nodes) // order), order)
        if not spec:
            return w.suggest_grid(alpha_min)
        panel_width = float(spec.get("panel_width", 0.25))
        return AdaptiveLine(x_max=x_max, panel_width=panel_width, order=order)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid grid block {dict(spec)}: {exc}") from exc


def _as_number(value: Any, name: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{name} must be a number, got {value!r}")
    if not math.isfinite(value):
        raise ConfigError(f"{name} must be finite, got {value!r}")
    return float(value)


def _number(inst: Mapping[str, Any], name: str, default: float) -> float:
    return _as_number(inst.get(name, default), name)


def _numbers(
    inst: Mapping[str, Any],
    name: str,
    default: Sequence[float],
    size: Optional[int] = None,
) -> tuple[float, ...]:
    """A list field of numbers, optionally of fixed length.

    Raises:
        ConfigError: Naming the field if it is not a list of finite numbers
    """
    value = inst.get(name, default)
    if not isinstance(value, (list, tuple)):
        raise ConfigError(f"{name} must be a list of numbers, got {value!r}")
    if size is not None and len(value) != size:
        raise ConfigError(f"{name} needs {size} numbers, got {len(value)}")
    return tuple(_as_number(v, name) for v in value)


def _choice(inst: Mapping[str, Any], name: str, default: str, options) -> str:
    value = inst.get(name, default)
    if not isinstance(value, str) or value not in options:
        raise ConfigError(f"{name} must be one of {sorted(options)}, got {value!r}")
    return value


def _triple(
    inst: Mapping[str, Any], name: str, default: Sequence[float]
) -> AngleTriple:
    first, _, third = _numbers(inst, name, default, 3)
    return AngleTriple.from_outer(first, third)


def _count(instance: Mapping[str, Any], default: int) -> int:
    count = instance.get("instances", default)
    if isinstance(count, bool) or not isinstance(count, int) or count < 1:
        raise ConfigError(f"instances must be a positive integer, got {count!r}")
    return count


def _node_counts(instance: Mapping[str, Any]) -> list[int]:
    sizes = instance.get("nodes", list(COMMUTE_NODES))
    valid = isinstance(sizes, list) and sizes
    if not valid or any(
        isinstance(n, bool) or not isinstance(n, int) or n < 2 for n in sizes
    ):
        raise ConfigError(f"nodes must be a list of integers >= 2, got {sizes!r}")
    return list(sizes)


def _report_row(
    command: str,
    w: TetWeight,
    report: ResidualReport,
    job: Job,
    wall_ms: int,
    threshold: Optional[float] = None,
) -> SuiteRow:
    return SuiteRow(
        command=command,
        model=_model_label(w),
        param_digest=report.digest,
        rel_residual=report.rel_residual,
        abs_residual=report.abs_residual,
        grid=str(report.quad_meta.get("label", "")),
        seed=job.seed,
        wall_ms=wall_ms,
        threshold=job.threshold if threshold is None else threshold,
        detail={
            "lhs": report.lhs,
            "rhs": report.rhs,
            "err_est": report.quad_meta.get("err_est"),
        },
        report=report,
    )


def _relative(a: complex, b: complex) -> tuple[float, float]:
    diff = abs(a - b)
    scale = abs(a) + abs(b)
    return diff, (diff / scale if scale else 0.0)


def _timed(fn: Callable[[], Any]) -> tuple[Any, int]:
    start = time.perf_counter()
    value = fn()
    return value, int(round(1000 * (time.perf_counter() - start)))


def _plan_pentagon(job: Job, w: TetWeight, nodes: Optional[int]) -> list[Task]:
    inst = job.instance
    angles = pentagon_angles(
        _triple(inst, "alpha0", PINNED_ALPHA0),
        _triple(inst, "alpha4", PINNED_ALPHA4),
        _number(inst, "alpha2_1", PINNED_ALPHA2_1),
    )
    verifiers = {
        "T": verify_pentagon,
        "transpose": verify_pentagon_transpose,
        "bar": verify_pentagon_bar,
    }
    variant = _choice(inst, "variant", "T", verifiers)
    perturbation = _number(inst, "perturbation", 0.0)
    grid = build_grid(w, job.grid, angles.smallest, nodes)
    verifier = verifiers[variant]

    def task(index: int) -> list[SuiteRow]:
        def make(rng, attempt):
            instance = sample_pentagon_instance(w, angles, rng, seed=job.seed)
            if perturbation:
                return falsification_probe(w, instance, grid, perturbation)
            return verifier(w, instance, grid)

        rng = np.random.default_rng([job.seed, index])
        report, wall = _timed(lambda: run_resampled(make, rng))
        return [_report_row(job.command, w, report, job, wall)]

    return [lambda i=i: task(i) for i in range(_count(inst, 10))]


def _rho(inst: Mapping[str, Any], default: Sequence[float]) -> RhoSix:
    value = inst.get("rho", default)
    if isinstance(value, dict):
        return RhoSix.from_dict(value)
    return RhoSix(*_numbers(inst, "rho", default, 6))


def _smallest_te_angle(rho: RhoSix) -> float:
    return min(a.smallest for a in te6_angles(rho).as_tuple()[1:])


def _te_grid(job: Job, w: TetWeight, rho: RhoSix, nodes: Optional[int]) -> GridLike:
    return build_grid(w, job.grid, _smallest_te_angle(rho), nodes)


def _plan_te6(job: Job, w: TetWeight, nodes: Optional[int]) -> list[Task]:
    inst = job.instance
    rho = _rho(inst, PINNED_RHO)
    grid = _te_grid(job, w, rho, nodes)
    perturbation = _number(inst, "perturbation", 0.0)

    def task(index: int) -> list[SuiteRow]:
        def make(rng, attempt):
            instance = sample_te6_instance(w, rho, rng, seed=job.seed)
            if perturbation:
                return falsification_probe(w, instance, grid, perturbation)
            return verify_te6(w, instance, grid)

        rng = np.random.default_rng([job.seed, index])
        report, wall = _timed(lambda: run_resampled(make, rng))
        return [_report_row(job.command, w, report, job, wall)]

    return [lambda i=i: task(i) for i in range(_count(inst, 20))]


def _spectral(inst: Mapping[str, Any]) -> SpectralQuad:
    value = inst.get("r", PINNED_R)
    if isinstance(value, dict):
        return SpectralQuad.from_dict(value)
    return SpectralQuad(*_numbers(inst, "r", PINNED_R, 4))


def _plan_te4(job: Job, w: TetWeight, nodes: Optional[int]) -> list[Task]:
    inst = job.instance
    r = _spectral(inst)
    eps, delta = _number(inst, "eps", 0.02), _number(inst, "delta", 0.01)
    if not eps > delta > 0.0:
        raise PreconditionError(f"need eps > delta > 0, got eps={eps}, delta={delta}")
    if not spectral_ordered(r, eps):
        raise OrderingViolated(f"spectral parameters {r.to_dict()} are not ordered")
    grid = _te_grid(job, w, rho_regularized(r, eps, delta), nodes)

    def task(index: int) -> list[SuiteRow]:
        def make(rng, attempt):
            externals = sample_externals(w, TE6_EXTERNALS, rng)
            return verify_te4(w, r, externals, grid, eps, delta, seed=job.seed)

        rng = np.random.default_rng([job.seed, index])
        report, wall = _timed(lambda: run_resampled(make, rng))
        return [_report_row(job.command, w, report, job, wall)]

    return [lambda i=i: task(i) for i in range(_count(inst, 5))]


def _plan_sweep(job: Job, w: TetWeight, nodes: Optional[int]) -> list[Task]:
    inst = job.instance
    r = _spectral(inst)
    deltas = _numbers(inst, "deltas", SWEEP_DELTAS)
    if not deltas or min(deltas) <= 0:
        raise ConfigError("deltas must be a non-empty list of positive numbers")
    grid = _te_grid(job, w, rho_regularized(r, 2 * min(deltas), min(deltas)), nodes)

    def task(index: int) -> list[SuiteRow]:
        rng = np.random.default_rng([job.seed, index])
        externals = sample_externals(w, TE6_EXTERNALS, rng)
        reports, wall = _timed(
            lambda: sweep_eps(w, r, externals, grid, deltas, seed=job.seed)
        )
        share = wall // len(reports)
        rows = [_report_row(job.command, w, rep, job, share) for rep in reports]
        stable = sweep_is_stable(reports, job.threshold)
        verdict = SuiteRow(
            command=f"{job.command}:stability",
            model=_model_label(w),
            param_digest=param_digest([rep.digest for rep in reports]),
            rel_residual=0.0 if stable else 1.0,
            abs_residual=max(rep.rel_residual for rep in reports),
            grid=rows[0].grid,
            seed=job.seed,
            threshold=0.5,
        )
        return rows + [verdict]

    return [lambda i=i: task(i) for i in range(_count(inst, 1))]


def _lattice(inst: Mapping[str, Any]) -> LatticeSpec:
    data = inst.get("lattice", PINNED_LATTICE)
    if not isinstance(data, dict):
        raise ConfigError(f"lattice must be a JSON object, got {data!r}")
    return LatticeSpec.from_dict(data)


def _plan_commute(job: Job, w: TetWeight, nodes: Optional[int]) -> list[Task]:
    inst = job.instance
    spec = _lattice(inst)
    pair = _numbers(inst, "u_pair", spec.u[:2], 2)
    sizes = [nodes] if nodes else _node_counts(inst)

    def task() -> list[SuiteRow]:
        rows, norms = [], []
        for count in sizes:
            grid = build_grid(w, job.grid, 0.0, count)

            def measure():
                return commutator_norm(
                    build_layer_transfer(w, spec, pair[0], grid),
                    build_layer_transfer(w, spec, pair[1], grid),
                )

            norm, wall = _timed(measure)
            norms.append(norm)
            record = {
                "lattice": spec.to_dict(),
                "u_pair": list(pair),
                "nodes": count,
                "model": w.describe(),
            }
            rows.append(
                SuiteRow(
                    command=job.command,
                    model=_model_label(w),
                    param_digest=param_digest(record),
                    rel_residual=norm,
                    abs_residual=norm,
                    grid=grid.describe(),
                    seed=job.seed,
                    wall_ms=wall,
                    threshold=job.threshold,
                    detail={"inputs": record},
                )
            )
        monotone = all(b <= a + 1e-14 for a, b in zip(norms, norms[1:]))
        record = {"norms_for": sizes, "lattice": spec.to_dict()}
        rows.append(
            SuiteRow(
                command=f"{job.command}:monotone",
                model=_model_label(w),
                param_digest=param_digest(record),
                rel_residual=0.0 if monotone else 1.0,
                abs_residual=norms[-1],
                grid=rows[-1].grid,
                seed=job.seed,
                threshold=0.5,
                detail={"inputs": record, "norms": norms},
            )
        )
        return rows

    return [task]


def _plan_partition(job: Job, w: TetWeight, nodes: Optional[int]) -> list[Task]:
    spec = _lattice(job.instance)
    grid = build_grid(w, job.grid, 0.0, nodes or (None if job.grid else 16))

    def task() -> list[SuiteRow]:
        (z_trace, z_brute), wall = _timed(
            lambda: (
                partition_trace(w, spec, grid),
                partition_bruteforce(w, spec, grid),
            )
        )
        record = {
            "kind": "partition",
            "lattice": spec.to_dict(),
            "grid": grid.describe(),
            "model": w.describe(),
        }
        meta = {"label": grid.describe(), "lhs": "trace", "rhs": "bruteforce"}
        report = ResidualReport.from_sides(z_trace, z_brute, meta, record)
        return [_report_row(job.command, w, report, job, wall)]

    return [task]


def _plan_gauge(job: Job, w: TetWeight, nodes: Optional[int]) -> list[Task]:
    inst = job.instance
    spec = _lattice(inst)
    shift = _number(inst, "shift", 0.17)
    grid = build_grid(w, job.grid, 0.0, nodes or (None if job.grid else 16))
    scale = _number(inst, "gauge_scale", 0.1)
    theta = GaugeField.random(spec.dims, np.random.default_rng(job.seed), scale)

    def task() -> list[SuiteRow]:
        (z0, z1), wall = _timed(lambda: gauge_probe(w, spec, grid, theta, shift))
        record = {
            "kind": "gauge",
            "lattice": spec.to_dict(),
            "shift": shift,
            "gauge_scale": scale,
            "model": w.describe(),
            "seed": job.seed,
        }
        meta = {"label": grid.describe(), "lhs": "Z(r)", "rhs": "Z(r + c)"}
        report = ResidualReport.from_sides(z0, z1, meta, record)
        return [_report_row(job.command, w, report, job, wall)]

    return [task]


def _symmetry_deviation(w: TetWeight, rng: np.random.Generator, samples: int) -> float:
    """Largest relative deviation of T under Z2, Z3 and transposition."""
    worst = 0.0
    for _ in range(samples):
        first = rng.uniform(0.3, 1.2)
        third = rng.uniform(0.3, 1.2)
        alpha = AngleTriple.from_outer(first, third)
        x = EdgeStates(*w.state_space.sample(rng, 6))
        base = eval_T(w, alpha, x)
        z3_alpha, z3_x = rotate_z3(alpha, x)
        others = (
            eval_T(w, alpha, rotate_z2(x)),
            eval_T(w, z3_alpha, z3_x),
            transpose_T(w, alpha, x),
        )
        for other in others:
            worst = max(worst, abs(other - base) / abs(base))
    return worst


def _check_row(
    name: str,
    value: float,
    threshold: float,
    seed: int,
    wall: int,
    grid: str = "-",
    inputs: Optional[Mapping[str, Any]] = None,
) -> SuiteRow:
    record = dict(inputs or {}, check=name, seed=seed)
    return SuiteRow(
        command=f"selftest:{name}",
        model="-",
        param_digest=param_digest(record),
        rel_residual=value,
        abs_residual=value,
        grid=grid,
        seed=seed,
        wall_ms=wall,
        threshold=threshold,
        detail={"inputs": record},
    )


@dataclass(frozen=True)
class SelftestPlan:
    """Sample counts of one selftest mode."""

    inversion_points: int
    b_values: tuple[float, ...]
    q_values: tuple[float, ...]
    symmetry_samples: int
    pentagon_instances: int
    pentagon_variants: tuple[str, ...]
    te6_instances: int
    te6_rho: tuple[float, ...]
    te6_models: tuple[str, ...]
    sweep: bool
    falsification: bool


SELFTEST_PLANS = {
    "full": SelftestPlan(
        inversion_points=50,
        b_values=(0.8, 1.0, 1.3),
        q_values=(0.2, 0.3, 0.5),
        symmetry_samples=100,
        pentagon_instances=10,
        pentagon_variants=("T", "transpose"),
        te6_instances=20,
        te6_rho=PINNED_RHO,
        te6_models=("3dindex", "klv"),
        sweep=True,
        falsification=True,
    ),
    "quick": SelftestPlan(
        inversion_points=8,
        b_values=(1.0,),
        q_values=(0.3,),
        symmetry_samples=10,
        pentagon_instances=1,
        pentagon_variants=("T",),
        te6_instances=1,
        te6_rho=WIDE_RHO,
        te6_models=("3dindex",),
        sweep=False,
        falsification=False,
    ),
}
SELFTEST_THRESHOLDS = {
    "pentagon": {"3dindex": 1e-8, "klv": 1e-6},
    "te6": {"3dindex": 1e-6, "klv": 1e-5},
}


def _plan_selftest(job: Job, w: TetWeight, nodes: Optional[int]) -> list[Task]:
    """Fixed invariant suite; ``instance.mode`` picks "full" or "quick" counts."""
    seed = job.seed
    mode = _choice(job.instance, "mode", "full", SELFTEST_PLANS)
    counts = SELFTEST_PLANS[mode]
    models: dict[str, TetWeight] = {
        "3dindex": ThreeDIndexWeight(QParam(0.3)),
        "klv": KLVWeight(BParam(1.0)),
    }
    index = models["3dindex"]
    angles = pentagon_angles(
        AngleTriple(*PINNED_ALPHA0), AngleTriple(*PINNED_ALPHA4), PINNED_ALPHA2_1
    )
    pentagon_grids: dict[str, Optional[GridLike]] = {
        "3dindex": circle_grid(256),
        "klv": None,
    }
    verifiers = {"T": verify_pentagon, "transpose": verify_pentagon_transpose}
    te6_rho = RhoSix(*counts.te6_rho)
    te6_grids = {
        name: models[name].suggest_grid(_smallest_te_angle(te6_rho))
        for name in counts.te6_models
    }
    tasks: list[Task] = []

    def psi_inversion(b_value: float) -> list[SuiteRow]:
        xs = np.random.default_rng(seed).uniform(-3.0, 3.0, counts.inversion_points)
        b = BParam(b_value)

        def deviation() -> float:
            product = psi_b(xs, b).value * psi_b(-xs, b).value
            return float(np.max(np.abs(product - 1.0)))

        value, wall = _timed(deviation)
        name = f"psi-inversion[b={b_value:g}]"
        return [_check_row(name, value, 1e-9, seed, wall, inputs={"b": b_value})]

    def gq_inversion(q_value: float) -> list[SuiteRow]:
        rng = np.random.default_rng(seed)
        size = counts.inversion_points
        zs = rng.uniform(0.6, 0.9, size) * np.exp(2j * np.pi * rng.uniform(0, 1, size))
        q = QParam(q_value)

        def deviation() -> float:
            product = g_q(zs, q).value * g_q(-q_value / zs, q).value
            return float(np.max(np.abs(product - 1.0)))

        value, wall = _timed(deviation)
        name = f"gq-inversion[q={q_value:g}]"
        return [_check_row(name, value, 1e-10, seed, wall, inputs={"q": q_value})]

    def symmetry(name: str) -> list[SuiteRow]:
        rng = np.random.default_rng(seed)
        samples = counts.symmetry_samples
        value, wall = _timed(lambda: _symmetry_deviation(models[name], rng, samples))
        inputs = {"samples": samples}
        return [_check_row(f"symmetry-{name}", value, 1e-12, seed, wall, inputs=inputs)]

    def pentagon(name: str, variant: str, i: int) -> list[SuiteRow]:
        model, grid = models[name], pentagon_grids[name]

        def make(rng, attempt):
            inst = sample_pentagon_instance(model, angles, rng, seed)
            return verifiers[variant](model, inst, grid)

        rng = np.random.default_rng([seed, i])
        report, wall = _timed(lambda: run_resampled(make, rng))
        label = "pentagon" if variant == "T" else f"pentagon-{variant}"
        threshold = SELFTEST_THRESHOLDS["pentagon"][name]
        command = f"selftest:{label}-{name}"
        return [_report_row(command, model, report, job, wall, threshold)]

    def tetrahedron(name: str, i: int) -> list[SuiteRow]:
        model, grid = models[name], te6_grids[name]

        def make(rng, attempt):
            inst = sample_te6_instance(model, te6_rho, rng, seed)
            return verify_te6(model, inst, grid)

        rng = np.random.default_rng([seed, i])
        report, wall = _timed(lambda: run_resampled(make, rng))
        threshold = SELFTEST_THRESHOLDS["te6"][name]
        command = f"selftest:te6-{name}"
        return [_report_row(command, model, report, job, wall, threshold)]

    def sweep() -> list[SuiteRow]:
        r = SpectralQuad(*PINNED_R)
        smallest = min(SWEEP_DELTAS)
        regularized = rho_regularized(r, 2 * smallest, smallest)
        grid = index.suggest_grid(_smallest_te_angle(regularized))
        externals = sample_externals(index, TE6_EXTERNALS, np.random.default_rng(seed))
        reports, wall = _timed(
            lambda: sweep_eps(index, r, externals, grid, SWEEP_DELTAS, seed=seed)
        )
        share = wall // len(reports)
        rows = [
            _report_row("selftest:sweep-eps", index, rep, job, share, 1e-5)
            for rep in reports
        ]
        stable = sweep_is_stable(reports, 1e-5)
        inputs = {"deltas": list(SWEEP_DELTAS), "r": list(PINNED_R)}
        rows.append(
            _check_row(
                "sweep-eps:stability",
                0.0 if stable else 1.0,
                0.5,
                seed,
                0,
                rows[0].grid,
                inputs,
            )
        )
        return rows

    def falsification(kind: str) -> list[SuiteRow]:
        rng = np.random.default_rng(seed)
        if kind == "pentagon":
            inst: Any = sample_pentagon_instance(index, angles, rng, seed)
            grid: GridLike = circle_grid(256)
            on = verify_pentagon(index, inst, grid)
        else:
            inst = sample_te6_instance(index, RhoSix(*WIDE_RHO), rng, seed)
            grid = circle_grid(1024)
            on = verify_te6(index, inst, grid)
        off, wall = _timed(
            lambda: falsification_probe(index, inst, grid, FALSIFICATION_SHIFT)
        )
        ratio = on.rel_residual / max(off.rel_residual, 1e-300)
        inputs = {
            "on_manifold": on.rel_residual,
            "detuned": off.rel_residual,
            "shift": FALSIFICATION_SHIFT,
        }
        name = f"falsification-{kind}-3dindex"
        return [
            _check_row(
                name, ratio, FALSIFICATION_RATIO, seed, wall, grid.describe(), inputs
            )
        ]

    def lattices() -> list[SuiteRow]:
        small = LatticeSpec.from_dict(PINNED_LATTICE)
        strip = LatticeSpec.from_dict(STRIP_LATTICE)
        grid = circle_grid(16)
        label = grid.describe()
        rows = []
        for name, spec in (("1x1x2", small), ("1x2x2", strip)):
            (z_trace, z_brute), wall = _timed(
                lambda: (
                    partition_trace(index, spec, grid),
                    partition_bruteforce(index, spec, grid),
                )
            )
            rows.append(
                _check_row(
                    f"partition-{name}",
                    _relative(z_trace, z_brute)[1],
                    1e-10,
                    seed,
                    wall,
                    label,
                    {"lattice": spec.to_dict()},
                )
            )
        theta = GaugeField.random(small.dims, np.random.default_rng(seed))
        (z0, z1), wall = _timed(lambda: gauge_probe(index, small, grid, theta, 0.17))
        inputs = {"lattice": small.to_dict(), "shift": 0.17}
        rows.append(
            _check_row(
                "gauge-shift", _relative(z0, z1)[1], 1e-12, seed, wall, label, inputs
            )
        )
        for name, spec, threshold in (
            ("1x1", small, 1e-6),
            ("1x2", strip, 1e-12),
        ):
            norms = []
            for count in COMMUTE_NODES:
                commute_grid = circle_grid(count)
                norm, wall = _timed(
                    lambda: commutator_norm(
                        build_layer_transfer(index, spec, spec.u[0], commute_grid),
                        build_layer_transfer(index, spec, spec.u[1], commute_grid),
                    )
                )
                norms.append(norm)
                rows.append(
                    _check_row(
                        f"commutator-{name}",
                        norm,
                        threshold,
                        seed,
                        wall,
                        commute_grid.describe(),
                        {"lattice": spec.to_dict(), "nodes": count},
                    )
                )
            if name == "1x1":
                monotone = all(b <= a + 1e-14 for a, b in zip(norms, norms[1:]))
                rows.append(
                    _check_row(
                        "commutator-1x1:monotone",
                        0.0 if monotone else 1.0,
                        0.5,
                        seed,
                        0,
                        rows[-1].grid,
                        {"norms": norms},
                    )
                )
        return rows

    tasks += [lambda b=b: psi_inversion(b) for b in counts.b_values]
    tasks += [lambda q=q: gq_inversion(q) for q in counts.q_values]
    tasks += [lambda name=name: symmetry(name) for name in models]
    tasks += [
        lambda name=name, variant=variant, i=i: pentagon(name, variant, i)
        for name in models
        for variant in counts.pentagon_variants
        for i in range(counts.pentagon_instances)
    ]
    tasks += [
        lambda name=name, i=i: tetrahedron(name, i)
        for name in counts.te6_models
        for i in range(counts.te6_instances)
    ]
    if counts.sweep:
        tasks.append(sweep)
    if counts.falsification:
        tasks += [lambda kind=kind: falsification(kind) for kind in ("pentagon", "te6")]
    tasks.append(lattices)
    return tasks


PLANNERS: dict[str, Callable[[Job, TetWeight, Optional[int]], list[Task]]] = {
    "verify-pentagon": _plan_pentagon,
    "verify-te6": _plan_te6,
    "verify-te4": _plan_te4,
    "sweep-eps": _plan_sweep,
    "transfer-commute": _plan_commute,
    "partition": _plan_partition,
    "gauge-probe": _plan_gauge,
    "selftest": _plan_selftest,
}


def plan(job: Job, nodes: Optional[int] = None) -> list[Task]:
    """Validate every parameter of the job and return its independent tasks.

    Raises:
        TetraError: ConfigError for malformed fields, or a precondition error
    """
    try:
        w = weight_from_config(job.model)
        return PLANNERS[job.command](job, w, nodes)
    except TetraError:
        raise
    except (TypeError, ValueError, IndexError, KeyError) as exc:
        raise ConfigError(f"invalid {job.command} job: {exc}") from exc


def execute(tasks: Sequence[Task], workers: int = 1) -> list[SuiteRow]:
    if workers <= 1:
        rows = [row for task in tasks for row in task()]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = [row for chunk in pool.map(lambda t: t(), tasks) for row in chunk]
    return rows


def summarize(rows: Sequence[SuiteRow]) -> int:
    """Print per-row status and return the exit code for the row set."""
    failures = [row for row in rows if not row.passed]
    for row in rows:
        if row.passed:
            print_success(
                f"{row.command} {row.param_digest} "
                f"rel={row.rel_residual:.3e} (< {row.threshold:g})"
            )
    print("=" * 54)
    if not failures:
        print_success(f"All {len(rows)} checks passed")
        return EXIT_PASS
    for row in failures:
        print_error(
            f"{row.command} {row.param_digest}: rel_residual "
            f"{row.rel_residual:.3e} >= threshold {row.threshold:g}"
        )
    print_error(f"{len(failures)} of {len(rows)} checks failed")
    return EXIT_FAIL


def run(
    job: Job,
    out_dir: Path = Path("."),
    nodes: Optional[int] = None,
    workers: int = 1,
    timing: bool = True,
) -> int:
    """Execute a job, write its reports and return the exit code.

    Returns:
        0 if every row is below its threshold, 1 otherwise, 2 on errors
    """
    try:
        tasks = plan(job, nodes)
        print_info(f"Running {job.command}: {len(tasks)} task(s)")
        rows = execute(tasks, workers)
    except TetraError as exc:
        print_error(f"{type(exc).__name__}: {exc}")
        return EXIT_ERROR
    out_dir = Path(out_dir)
    csv_path = write_csv(rows, out_dir / job.outputs["csv"], timing)
    json_path = write_json(rows, out_dir / job.outputs["json"], job.to_dict())
    code = summarize(rows)
    print_colored(f"Reports: {csv_path}, {json_path}", Colors.BLUE)
    return code


def create_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description=(
            "Verify pentagon/tetrahedron identities and lattice properties "
            "from a JSON job."
        ),
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  # Run the pinned invariant suite
  run-suite.py --job jobs/selftest.json --out out/

  # Tighter threshold and finer circle grid
  run-suite.py --job jobs/pentagon.json --threshold 1e-9 --nodes 512
        """,
    )
    parser.add_argument(
        "--job", required=True, type=Path, help="Path to the JSON job file"
    )
    parser.add_argument(
        "--out", default=Path("."), type=Path, help="Output directory (default: .)"
    )
    parser.add_argument(
        "--threshold", type=float, help="Override the job's residual threshold"
    )
    parser.add_argument("--seed", type=int, help="Override the job's seed")
    parser.add_argument("--nodes", type=int, help="Override the grid size")
    parser.add_argument(
        "--workers", type=int, default=1, help="Threads for independent instances"
    )
    parser.add_argument(
        "--no-timing",
        action="store_true",
        help="Write wall_ms as 0 for byte-stable CSV",
    )
    parser.add_argument(
        "--verbose", "-v", action="count", default=0, help="More library messages"
    )
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = create_parser().parse_args(argv)
    set_verbosity({0: "warning", 1: "info"}.get(args.verbose, "debug"))
    try:
        job = load_job(args.job)
        if args.threshold is not None:
            if not args.threshold > 0:
                raise ConfigError("--threshold must be positive")
            job = replace(job, threshold=args.threshold)
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigError("--seed must be non-negative")
            job = replace(job, seed=args.seed)
        if args.nodes is not None and args.nodes < 2:
            raise ConfigError("--nodes must be at least 2")
    except ConfigError as exc:
        print_error(str(exc))
        return EXIT_ERROR
    return run(job, args.out, args.nodes, max(1, args.workers), not args.no_timing)


if __name__ == "__main__":
    sys.exit(main())
