"""Numerical verification of the shaped pentagon identity and the tetrahedron equation.

Every verifier evaluates both sides of an identity on one integration grid
and returns a ``ResidualReport``. Slot wirings are kept as data tables so the
same driver serves T, its transpose and the negative-tetrahedron weight.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable, Mapping, Optional, Sequence, Union

import numpy as np

from .console import log
from .errors import (
    DegenerateInstance,
    EvaluationError,
    InputValidationError,
    NotInDomain,
    OrderingViolated,
    PreconditionError,
    TetraError,
)
from .quadrature import GridLike, integrate, resolve_grid
from .reports import ResidualReport
from .shapes import (
    AngleTriple,
    PentagonAngles,
    RhoSix,
    SpectralQuad,
    in_domain_D,
    rho_regularized,
    spectral_ordered,
    te6_angles,
)
from .weights import EdgeStates, TetWeight, eval_T, eval_T_bar, transpose_T

DEFAULT_SEED = 0xA11CE
SWEEP_DELTAS = (0.04, 0.02, 0.01, 0.005)
SWEEP_CEILING = 1e-5
RESAMPLE_ATTEMPTS = 5

PENTAGON_EXTERNALS = ("01", "02", "03", "04", "12", "14", "23", "24", "34")
TE6_EXTERNALS = (
    "a1", "a2", "a3", "a4",
    "b1", "b2", "b3", "b4",
    "c1", "c2", "c3", "c4", "c5", "c6",
)  # fmt: skip

Evaluator = Callable[[TetWeight, AngleTriple, EdgeStates], Any]
# (angle name, six state labels x1 x2 x3 x1' x2' x3')
Factor = tuple[str, tuple[str, ...]]

PENTAGON_LHS: tuple[Factor, ...] = (
    ("alpha1", ("02", "03", "04", "34", "24", "23")),
    ("alpha3", ("01", "02", "04", "24", "14", "12")),
)
PENTAGON_RHS: tuple[Factor, ...] = (
    ("alpha0", ("12", "13", "14", "34", "24", "23")),
    ("alpha2", ("01", "03", "04", "34", "14", "13")),
    ("alpha4", ("01", "02", "03", "23", "13", "12")),
)
PENTAGON_SYMBOL = "13"

# IRC factors of the tetrahedron equation: (rho pair labels, corners a..h)
IrcFactor = tuple[tuple[str, str, str], tuple[str, ...]]

TE6_LHS: tuple[IrcFactor, ...] = (
    (("12", "13", "23"), ("a4", "c2", "c3", "c1", "d", "b1", "b2", "b3")),
    (("12", "14", "24"), ("c1", "b2", "b1", "a3", "b4", "c4", "c6", "d")),
    (("13", "14", "34"), ("b1", "d", "c3", "c4", "c5", "a2", "b4", "b3")),
    (("23", "24", "34"), ("d", "b2", "b3", "b4", "a1", "c5", "c6", "c2")),
)
TE6_RHS: tuple[IrcFactor, ...] = (
    (("23", "24", "34"), ("b1", "c1", "c3", "c4", "d", "a2", "a3", "a4")),
    (("13", "14", "34"), ("c1", "b2", "a4", "a3", "a1", "d", "c6", "c2")),
    (("12", "14", "24"), ("a4", "c2", "c3", "d", "c5", "a2", "a1", "b3")),
    (("12", "13", "23"), ("d", "a1", "a2", "a3", "b4", "c4", "c6", "c5")),
)
TE6_SYMBOL = "d"


def _check_externals(externals: Mapping[str, complex], names: Sequence[str]) -> None:
    missing = sorted(set(names) - set(externals))
    if missing:
        raise InputValidationError(f"missing external states {missing}")


def _jsonable_states(externals: Mapping[str, complex]) -> dict[str, list[float]]:
    return {k: [complex(v).real, complex(v).imag] for k, v in sorted(externals.items())}


@dataclass(frozen=True)
class PentagonInstance:
    """Angles, the nine external states and the coefficient C of a pentagon check."""

    angles: PentagonAngles
    externals: Mapping[str, complex]
    coefficient: complex = 1.0
    seed: Optional[int] = None

    def __post_init__(self):
        _check_externals(self.externals, PENTAGON_EXTERNALS)

    def record(self, w: TetWeight) -> dict[str, Any]:
        coefficient = complex(self.coefficient)
        return {
            "kind": "pentagon",
            "model": w.describe(),
            "angles": self.angles.to_dict(),
            "externals": _jsonable_states(self.externals),
            "coefficient": [coefficient.real, coefficient.imag],
            "seed": self.seed,
        }


@dataclass(frozen=True)
class TE6Instance:
    """A point of D and the fourteen external states of the tetrahedron equation."""

    rho: RhoSix
    externals: Mapping[str, complex]
    seed: Optional[int] = None

    def __post_init__(self):
        if not in_domain_D(self.rho):
            raise NotInDomain(f"rho {self.rho.to_dict()} is outside the domain D")
        _check_externals(self.externals, TE6_EXTERNALS)

    def record(self, w: TetWeight) -> dict[str, Any]:
        return {
            "kind": "te6",
            "model": w.describe(),
            "rho": self.rho.to_dict(),
            "externals": _jsonable_states(self.externals),
            "seed": self.seed,
        }


def sample_externals(
    w: TetWeight, names: Sequence[str], rng: np.random.Generator
) -> dict[str, complex]:
    """Draw one state per name from the model's state space."""
    draws = w.state_space.sample(rng, len(names))
    return {name: complex(v) for name, v in zip(names, draws)}


def sample_pentagon_instance(
    w: TetWeight,
    angles: PentagonAngles,
    rng: np.random.Generator,
    seed: Optional[int] = None,
) -> PentagonInstance:
    externals = sample_externals(w, PENTAGON_EXTERNALS, rng)
    return PentagonInstance(angles, externals, 1.0, seed)


def sample_te6_instance(
    w: TetWeight, rho: RhoSix, rng: np.random.Generator, seed: Optional[int] = None
) -> TE6Instance:
    return TE6Instance(rho, sample_externals(w, TE6_EXTERNALS, rng), seed)


def _product(
    w: TetWeight,
    evaluator: Evaluator,
    factors: Sequence[Factor],
    angles: Mapping[str, AngleTriple],
    values: Mapping[str, Any],
    side: str,
):
    result: Any = 1.0
    for index, (angle_name, labels) in enumerate(factors, start=1):
        x = EdgeStates(*(values[label] for label in labels))
        try:
            result = result * evaluator(w, angles[angle_name], x)
        except InputValidationError:
            raise
        except TetraError as exc:
            location = f"{side} factor {index} ({angle_name})"
            raise EvaluationError(str(exc), location=location) from exc
    return result


def _pentagon_report(
    w: TetWeight,
    angles: Mapping[str, AngleTriple],
    inst: PentagonInstance,
    grid: GridLike,
    evaluator: Evaluator,
    record: dict[str, Any],
) -> ResidualReport:
    externals = dict(inst.externals)
    lhs = _product(w, evaluator, PENTAGON_LHS, angles, externals, "lhs")

    def integrand(nodes):
        values = dict(externals, **{PENTAGON_SYMBOL: nodes})
        return _product(w, evaluator, PENTAGON_RHS, angles, values, "rhs")

    result = integrate(integrand, grid)
    rhs = inst.coefficient * result.value
    meta = dict(result.meta, err_est=abs(inst.coefficient) * result.error)
    return ResidualReport.from_sides(lhs, rhs, meta, record)


def _angle_map(angles: PentagonAngles) -> dict[str, AngleTriple]:
    return {f"alpha{i}": a for i, a in enumerate(angles.as_tuple())}


def _pentagon_grid(
    w: TetWeight, inst: PentagonInstance, grid: Optional[GridLike]
) -> GridLike:
    return grid if grid is not None else w.suggest_grid(inst.angles.smallest)


def verify_pentagon(
    w: TetWeight, inst: PentagonInstance, grid: Optional[GridLike] = None
) -> ResidualReport:
    """Shaped pentagon identity T(1) T(3) = C * int dmu(x13) T(0) T(2) T(4).

    Args:
        w: Weight model
        inst: Angles, externals and coefficient
        grid: Grid or adaptive policy for x13 (default: the model's suggestion)

    Returns:
        ResidualReport of the two sides
    """
    record = dict(inst.record(w), variant="T")
    grid = _pentagon_grid(w, inst, grid)
    return _pentagon_report(w, _angle_map(inst.angles), inst, grid, eval_T, record)


def verify_pentagon_transpose(
    w: TetWeight, inst: PentagonInstance, grid: Optional[GridLike] = None
) -> ResidualReport:
    """Pentagon identity for the transposed weight, same coefficient."""
    record = dict(inst.record(w), variant="transpose")
    grid = _pentagon_grid(w, inst, grid)
    angles = _angle_map(inst.angles)
    return _pentagon_report(w, angles, inst, grid, transpose_T, record)


def verify_pentagon_bar(
    w: TetWeight, inst: PentagonInstance, grid: Optional[GridLike] = None
) -> ResidualReport:
    """Pentagon identity for negative tetrahedra, the coefficient read as C-bar."""
    record = dict(inst.record(w), variant="bar")
    grid = _pentagon_grid(w, inst, grid)
    angles = _angle_map(inst.angles)
    return _pentagon_report(w, angles, inst, grid, eval_T_bar, record)


def _irc_factors(
    rho: RhoSix, factors: Sequence[IrcFactor], symbol: str
) -> tuple[dict[str, AngleTriple], tuple[Factor, ...]]:
    """IRC factors as tetrahedral ones through the slot map (f, a, h | b, e, d)."""
    angles = {}
    translated = []
    for index, (pairs, corners) in enumerate(factors):
        name = f"w{index}"
        angles[name] = rho.triple(pairs)
        a, b, _, d, e, f, _, h = (symbol if c == TE6_SYMBOL else c for c in corners)
        translated.append((name, (f, a, h, b, e, d)))
    return angles, tuple(translated)


def _te6_side(
    w: TetWeight,
    rho: RhoSix,
    factors: Sequence[IrcFactor],
    externals: Mapping[str, complex],
    grid: GridLike,
    side: str,
    symbol: str = TE6_SYMBOL,
):
    angles, tet_factors = _irc_factors(rho, factors, symbol)

    def integrand(nodes):
        values = dict(externals, **{symbol: nodes})
        return _product(w, eval_T, tet_factors, angles, values, side)

    return integrate(integrand, grid)


def _te6_grid(w: TetWeight, rho: RhoSix, grid: Optional[GridLike]) -> GridLike:
    if grid is not None:
        return grid
    angles = te6_angles(rho)
    smallest = min(a.smallest for a in angles.as_tuple()[1:])
    return w.suggest_grid(smallest)


def _te6_report(
    w: TetWeight,
    inst: TE6Instance,
    grid: Optional[GridLike],
    lhs_rho: RhoSix,
    record: dict[str, Any],
    symbol: str = TE6_SYMBOL,
) -> ResidualReport:
    grid = _te6_grid(w, inst.rho, grid)
    lhs = _te6_side(w, lhs_rho, TE6_LHS, inst.externals, grid, "lhs", symbol)
    rhs = _te6_side(w, inst.rho, TE6_RHS, inst.externals, grid, "rhs", symbol)
    meta = dict(rhs.meta, err_est=lhs.error + rhs.error)
    return ResidualReport.from_sides(lhs.value, rhs.value, meta, record)


def verify_te6(
    w: TetWeight,
    inst: TE6Instance,
    grid: Optional[GridLike] = None,
    symbol: str = TE6_SYMBOL,
) -> ResidualReport:
    """Six-parameter tetrahedron equation with IRC weights built from rho.

    Both sides are single integrals over the internal state ``symbol`` of
    four IRC weights.

    Raises:
        NotInDomain: If rho is outside D
    """
    if not in_domain_D(inst.rho):
        raise NotInDomain(f"rho {inst.rho.to_dict()} is outside the domain D")
    return _te6_report(w, inst, grid, inst.rho, inst.record(w), symbol)


def te6_proof_chain(
    w: TetWeight, inst: TE6Instance, grid: Optional[GridLike] = None
) -> tuple[complex, ...]:
    """The five successive expressions turning the left side into the right side.

    Steps one and five are the two sides; steps two and three are double
    integrals after substituting the pentagon identity (before and after
    exchanging the integration order and rewriting in transposes); step four
    follows from the transposed pentagon identity.
    """
    angles = _angle_map(te6_angles(inst.rho))
    concrete = resolve_grid(grid if grid is not None else _te6_grid(w, inst.rho, None))
    ext = dict(inst.externals)
    nodes, weights = concrete.nodes, concrete.weights

    def tet(name, labels, values, evaluator=eval_T):
        return evaluator(w, angles[name], EdgeStates(*(values[k] for k in labels)))

    def single(build):
        return complex(np.sum(weights * build(dict(ext, t=nodes))))

    def double(build):
        # t runs along rows, s along columns
        values = dict(ext, t=nodes[:, None], s=nodes[None, :])
        return complex(np.sum(weights[:, None] * weights[None, :] * build(values)))

    step1 = single(
        lambda v: tet("alpha1", ("b1", "a4", "b3", "c2", "t", "c1"), v)
        * tet("alpha2", ("c4", "c1", "t", "b2", "b4", "a3"), v)
        * tet("alpha3", ("a2", "b1", "b3", "t", "c5", "c4"), v)
        * tet("alpha4", ("c5", "t", "c2", "b2", "a1", "b4"), v)
    )
    step2 = double(
        lambda v: tet("alpha2", ("c4", "c1", "t", "b2", "b4", "a3"), v)
        * tet("alpha4", ("c5", "t", "c2", "b2", "a1", "b4"), v)
        * tet("alpha0", ("c4", "s", "c5", "c2", "t", "c1"), v)
        * tet("alpha2", ("a2", "a4", "b3", "c2", "c5", "s"), v)
        * tet("alpha4", ("a2", "b1", "a4", "c1", "s", "c4"), v)
    )
    step3 = double(
        lambda v: tet("alpha2", ("a2", "a4", "b3", "c2", "c5", "s"), v)
        * tet("alpha4", ("a2", "b1", "a4", "c1", "s", "c4"), v)
        * tet("alpha0", ("c2", "t", "c1", "c4", "s", "c5"), v, transpose_T)
        * tet("alpha2", ("b2", "b4", "a3", "c4", "c1", "t"), v, transpose_T)
        * tet("alpha4", ("b2", "a1", "b4", "c5", "t", "c2"), v, transpose_T)
    )
    step4 = single(
        lambda v: tet("alpha2", ("a2", "a4", "b3", "c2", "c5", "t"), v)
        * tet("alpha4", ("a2", "b1", "a4", "c1", "t", "c4"), v)
        * tet("alpha1", ("a1", "b4", "a3", "c4", "t", "c5"), v, transpose_T)
        * tet("alpha3", ("b2", "a1", "a3", "t", "c1", "c2"), v, transpose_T)
    )
    step5 = single(
        lambda v: tet("alpha4", ("a2", "b1", "a4", "c1", "t", "c4"), v)
        * tet("alpha3", ("t", "c1", "c2", "b2", "a1", "a3"), v)
        * tet("alpha2", ("a2", "a4", "b3", "c2", "c5", "t"), v)
        * tet("alpha1", ("c4", "t", "c5", "a1", "b4", "a3"), v)
    )
    return step1, step2, step3, step4, step5


def verify_te4(
    w: TetWeight,
    r: SpectralQuad,
    externals: Mapping[str, complex],
    grid: Optional[GridLike],
    eps: float,
    delta: float,
    seed: Optional[int] = None,
) -> ResidualReport:
    """Four-parameter tetrahedron equation through the regularised point of D.

    Raises:
        OrderingViolated: Unless r1 < r2 < r3 < r4 < pi + r1 - eps
        PreconditionError: Unless eps > delta > 0
    """
    if not eps > delta > 0.0:
        raise PreconditionError(f"need eps > delta > 0, got eps={eps}, delta={delta}")
    if not spectral_ordered(r, eps):
        raise OrderingViolated(
            f"spectral parameters {r.to_dict()} are not ordered "
            "within (r1, pi + r1 - eps)"
        )
    inst = TE6Instance(rho_regularized(r, eps, delta), externals, seed)
    record = dict(inst.record(w), kind="te4", r=r.to_dict(), eps=eps, delta=delta)
    return _te6_report(w, inst, grid, inst.rho, record)


def sweep_eps(
    w: TetWeight,
    r: SpectralQuad,
    externals: Mapping[str, complex],
    grid: Optional[GridLike] = None,
    deltas: Sequence[float] = SWEEP_DELTAS,
    seed: Optional[int] = None,
) -> list[ResidualReport]:
    """Tetrahedron-equation residuals along eps = 2 delta towards the flat limit."""
    reports = []
    for delta in deltas:
        report = verify_te4(w, r, externals, grid, 2.0 * delta, delta, seed)
        log(f"sweep delta={delta:g}: rel_residual={report.rel_residual:.3e}", "debug")
        reports.append(report)
    return reports


def sweep_is_stable(
    reports: Sequence[ResidualReport], ceiling: float = SWEEP_CEILING
) -> bool:
    """All residuals below ceiling and no strictly growing run past 100x its start."""
    residuals = [rep.rel_residual for rep in reports]
    if not residuals or max(residuals) >= ceiling:
        return False
    growing = all(b > a for a, b in zip(residuals, residuals[1:]))
    blown_up = residuals[-1] > 100.0 * max(residuals[0], 1e-16)
    return not (growing and len(residuals) > 1 and blown_up)


def _detuned_alpha2(
    angles: PentagonAngles, perturbation: float
) -> dict[str, AngleTriple]:
    a2 = angles.alpha2
    detuned = _angle_map(angles)
    detuned["alpha2"] = AngleTriple(a2.a1 + perturbation, a2.a2 - perturbation, a2.a3)
    return detuned


def falsification_probe(
    w: TetWeight,
    inst: Union[PentagonInstance, TE6Instance],
    grid: Optional[GridLike],
    perturbation: float,
) -> ResidualReport:
    """Re-run a verifier off the compatibility manifold.

    Pentagon instances shift alpha2_1 by ``perturbation`` (taken from the
    middle angle) while every other triple stays put. Tetrahedron-equation
    instances shift rho34 on the left side only.
    """
    if isinstance(inst, PentagonInstance):
        record = dict(inst.record(w), variant="T", perturbation=perturbation)
        angles = _detuned_alpha2(inst.angles, perturbation)
        grid = _pentagon_grid(w, inst, grid)
        return _pentagon_report(w, angles, inst, grid, eval_T, record)
    if isinstance(inst, TE6Instance):
        shifted = inst.rho.replace(rho34=inst.rho.rho34 + perturbation)
        if not in_domain_D(shifted):
            raise NotInDomain(f"detuned rho34={shifted.rho34:g} leaves the domain D")
        record = dict(inst.record(w), perturbation=perturbation)
        return _te6_report(w, inst, grid, shifted, record)
    raise InputValidationError(f"cannot probe {type(inst).__name__}")


def run_resampled(
    make_report: Callable[[np.random.Generator, int], ResidualReport],
    rng: np.random.Generator,
    attempts: int = RESAMPLE_ATTEMPTS,
) -> ResidualReport:
    """Call ``make_report`` until an instance does not underflow on both sides."""
    for attempt in range(attempts):
        try:
            return make_report(rng, attempt)
        except DegenerateInstance as exc:
            log(f"resampling degenerate instance ({exc})", "warning")
    raise DegenerateInstance(f"{attempts} consecutive instances underflowed")
