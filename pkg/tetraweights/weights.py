"""Tetrahedral weights T(alpha; x1, x2, x3 | x1', x2', x3').

Two models share the ``TetWeight`` interface: the meromorphic 3D index on the
unit circle, built from G_q, and the Kashaev-Luo-Vartanov weight on the real
line, built from Psi_b. A third model only has to implement ``evaluate``,
``conjugate`` and ``suggest_grid``.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Mapping, Union

import numpy as np

from .errors import ConfigError, EvaluationError, InputValidationError, NotInA, PoleHit
from .quadrature import (
    AdaptiveLine,
    ContourConfig,
    Grid,
    GridLike,
    StateSpace,
    circle_grid,
)
from .shapes import AngleTriple, alpha_from_rho, alpha_from_spectral
from .specfun import (
    DEFAULT_CONTOUR,
    DEFAULT_POLICY,
    BParam,
    QParam,
    TruncationPolicy,
    g_q_values,
    log_psi_b,
    q_pochhammer,
)

KLV_MARGIN = 0.05
SUGGEST_TOL = 1e-14
MIN_CIRCLE_NODES = 64
MAX_PANEL_WIDTH = 0.25

State = Union[complex, np.ndarray]


@dataclass(frozen=True)
class EdgeStates:
    """State variables x_v on edge 0v and x'_v on the opposite edge.

    Entries may be numpy arrays; they broadcast against each other so a single
    evaluation covers every node of an integration grid.
    """

    x1: State
    x2: State
    x3: State
    xp1: State
    xp2: State
    xp3: State

    def slot(self, v: int) -> tuple[State, State]:
        """(x_v, x'_v) with v taken mod 3 in 1..3."""
        v = (v - 1) % 3 + 1
        return getattr(self, f"x{v}"), getattr(self, f"xp{v}")

    def values(self) -> tuple[State, ...]:
        return (self.x1, self.x2, self.x3, self.xp1, self.xp2, self.xp3)

    def transposed(self) -> "EdgeStates":
        return EdgeStates(self.xp1, self.xp2, self.xp3, self.x1, self.x2, self.x3)

    def conjugate(self) -> "EdgeStates":
        return EdgeStates(*(np.conj(v) for v in self.values()))


@dataclass(frozen=True)
class IrcCorners:
    """Corner states a..h of a cube, labelled as in the IRC weight."""

    a: State
    b: State
    c: State
    d: State
    e: State
    f: State
    g: State
    h: State

    def edge_states(self) -> EdgeStates:
        """Slot map x = (f, a, h), x' = (b, e, d); corners c and g do not enter."""
        return EdgeStates(self.f, self.a, self.h, self.b, self.e, self.d)

    @classmethod
    def uniform(cls, value: State) -> "IrcCorners":
        return cls(*([value] * 8))


class TetWeight(ABC):
    """A tetrahedral weight model with its state space."""

    state_space: StateSpace
    name: str

    @abstractmethod
    def evaluate(self, alpha: AngleTriple, x: EdgeStates) -> State:
        """T(alpha; x) for broadcastable state arrays."""

    @abstractmethod
    def conjugate(self) -> "TetWeight":
        """The model at complex-conjugated parameters."""

    @abstractmethod
    def suggest_grid(self, alpha_min: float) -> GridLike:
        """Integration grid resolving integrands whose smallest angle is alpha_min."""

    @abstractmethod
    def describe(self) -> dict[str, Any]:
        """JSON model record, e.g. {"model": "3dindex", "q": 0.3}."""

    def check_angles(self, alpha: AngleTriple) -> None:
        if not isinstance(alpha, AngleTriple):
            raise NotInA(f"expected an AngleTriple, got {type(alpha).__name__}")


@dataclass(frozen=True)
class ThreeDIndexWeight(TetWeight):
    """Meromorphic 3D-index weight.

    T = (q;q)^2/(q^2;q^2) * prod_v G_q((-q)^{alpha_v/pi} r_v) with the state ratio
    r_v = x_{v-1}x'_{v-1}/(x_{v+1}x'_{v+1}), indices mod 3.
    """

    q: QParam
    policy: TruncationPolicy = DEFAULT_POLICY
    state_space: StateSpace = field(default=StateSpace.UNIT_CIRCLE, init=False)
    name: str = field(default="3dindex", init=False)

    def __post_init__(self):
        if not isinstance(self.q, QParam):
            object.__setattr__(self, "q", QParam(self.q))

    @cached_property
    def prefactor(self) -> complex:
        q = self.q.q
        qq = q_pochhammer(q, self.q, self.policy).value
        q2 = q_pochhammer(q * q, QParam(q * q), self.policy).value
        return qq * qq / q2

    def shift(self, angle: float) -> complex:
        """(-q)^{angle/pi} on the principal branch of log q."""
        return complex(np.exp((angle / math.pi) * (np.log(self.q.q) + 1j * math.pi)))

    def evaluate(self, alpha: AngleTriple, x: EdgeStates) -> State:
        self.check_angles(alpha)
        value: State = self.prefactor
        for v in (1, 2, 3):
            before, before_p = x.slot(v - 1)
            after, after_p = x.slot(v + 1)
            ratio = (before * before_p) / (after * after_p)
            argument = self.shift(alpha[v - 1]) * ratio
            try:
                value = value * g_q_values(argument, self.q.q, self.policy)
            except PoleHit as exc:
                raise EvaluationError(str(exc), location=f"G_q factor v={v}") from exc
        return complex(value) if np.ndim(value) == 0 else value

    def conjugate(self) -> "ThreeDIndexWeight":
        return ThreeDIndexWeight(self.q.conjugate(), self.policy)

    def suggested_nodes(self, alpha_min: float, tol: float = SUGGEST_TOL) -> int:
        """Power-of-two circle size, at least twice the M with |q|^(M a/pi) < tol."""
        decay = (alpha_min / math.pi) * -math.log(abs(self.q.q))
        if not decay > 0:
            raise InputValidationError(
                "alpha_min and q must give a positive annulus width"
            )
        needed = 2 * math.ceil(-math.log(tol) / decay)
        return max(MIN_CIRCLE_NODES, 1 << (needed - 1).bit_length())

    def suggest_grid(self, alpha_min: float) -> Grid:
        return circle_grid(self.suggested_nodes(alpha_min))

    def describe(self) -> dict[str, Any]:
        q = self.q.q
        return {"model": self.name, "q": q.real if q.imag == 0 else [q.real, q.imag]}


@dataclass(frozen=True)
class KLVWeight(TetWeight):
    """Kashaev-Luo-Vartanov weight.

    T = prod_v Psi_b(s_{v+1} - s_{v-1} + i(b + 1/b)(1/2 - alpha_v/pi)) with the
    edge sums s_v = x_v + x'_v, indices mod 3.

    Angles must keep a distance ``margin`` from 0 and pi so every Psi_b
    argument stays inside the strip where the contour integral converges.
    """

    b: BParam
    contour: ContourConfig = DEFAULT_CONTOUR
    margin: float = KLV_MARGIN
    state_space: StateSpace = field(default=StateSpace.REAL_LINE, init=False)
    name: str = field(default="klv", init=False)

    def __post_init__(self):
        if not isinstance(self.b, BParam):
            object.__setattr__(self, "b", BParam(self.b))

    def check_angles(self, alpha: AngleTriple) -> None:
        super().check_angles(alpha)
        low = self.margin - 1e-12
        if min(alpha) < low or max(alpha) > math.pi - low:
            raise NotInA(
                f"KLV angles {alpha.to_list()} leave the margin "
                f"[{self.margin}, pi - {self.margin}]"
            )

    def evaluate(self, alpha: AngleTriple, x: EdgeStates) -> State:
        self.check_angles(alpha)
        q_sum = self.b.q_sum
        log_value: State = 0.0
        for v in (1, 2, 3):
            after, after_p = x.slot(v + 1)
            before, before_p = x.slot(v - 1)
            shift = 1j * q_sum * (0.5 - alpha[v - 1] / math.pi)
            difference = (after + after_p) - (before + before_p)
            argument = np.asarray(difference, dtype=complex) + shift
            log_value = log_value + log_psi_b(argument, self.b.b, self.contour)
        result = np.exp(log_value)
        return complex(result) if np.ndim(result) == 0 else result

    def conjugate(self) -> "KLVWeight":
        return self

    def strip_width(self, alpha_min: float) -> float:
        """Distance from the real axis to the nearest pole of the integrand."""
        return self.b.q_sum * alpha_min / math.pi

    def suggest_grid(self, alpha_min: float) -> AdaptiveLine:
        width = min(MAX_PANEL_WIDTH, self.strip_width(alpha_min))
        return AdaptiveLine(x_max=8.0, panel_width=width)

    def describe(self) -> dict[str, Any]:
        return {"model": self.name, "b": self.b.b}


def weight_from_config(data: Mapping[str, Any]) -> TetWeight:
    """Build a model from its JSON record.

    Raises:
        ConfigError: Unknown model or missing/invalid parameter
    """
    model = data.get("model")
    try:
        if model == "3dindex":
            q = data["q"]
            if isinstance(q, (list, tuple)):
                if len(q) != 2:
                    raise ConfigError(f"q as a list needs [re, im], got {q!r}")
                q = complex(float(q[0]), float(q[1]))
            elif isinstance(q, (int, float)) and not isinstance(q, bool):
                q = complex(q)
            else:
                raise ConfigError(f"q must be a number or [re, im], got {q!r}")
            return ThreeDIndexWeight(QParam(q))
        if model == "klv":
            b = data["b"]
            if isinstance(b, bool) or not isinstance(b, (int, float)):
                raise ConfigError(f"b must be a number, got {b!r}")
            return KLVWeight(BParam(float(b)))
    except ConfigError:
        raise
    except (KeyError, IndexError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid {model} parameters: {exc}") from exc
    raise ConfigError(f"unknown model {model!r}; expected '3dindex' or 'klv'")


def _check_states(w: TetWeight, x: EdgeStates) -> None:
    for name, value in zip(("x1", "x2", "x3", "xp1", "xp2", "xp3"), x.values()):
        if not w.state_space.contains(value):
            raise InputValidationError(f"state {name} is not in {w.state_space.value}")


def eval_T(w: TetWeight, alpha: AngleTriple, x: EdgeStates) -> State:
    """Weight of a positive tetrahedron with angles alpha and states x."""
    _check_states(w, x)
    return w.evaluate(alpha, x)


def eval_T_bar(w: TetWeight, alpha: AngleTriple, x: EdgeStates) -> State:
    """Weight of a negative tetrahedron: conj(T) at conjugated parameters and states."""
    _check_states(w, x)
    return np.conj(w.conjugate().evaluate(alpha, x.conjugate()))


def transpose_T(w: TetWeight, alpha: AngleTriple, x: EdgeStates) -> State:
    """T with the triples (x1, x2, x3) and (x1', x2', x3') exchanged."""
    return eval_T(w, alpha, x.transposed())


def rotate_z2(x: EdgeStates) -> EdgeStates:
    """Swap (x2, x3) with (x2', x3'), keeping x1 and x1'."""
    return EdgeStates(x.x1, x.xp2, x.xp3, x.xp1, x.x2, x.x3)


def rotate_z3(alpha: AngleTriple, x: EdgeStates) -> tuple[AngleTriple, EdgeStates]:
    """Cyclic shift of angles and states by one position."""
    rotated = AngleTriple(alpha.a2, alpha.a3, alpha.a1)
    return rotated, EdgeStates(x.x2, x.x3, x.x1, x.xp2, x.xp3, x.xp1)


def irc_weight(
    w: TetWeight, rho_ij: float, rho_ik: float, rho_jk: float, c: IrcCorners
) -> State:
    """IRC Boltzmann weight of a cube with six-parameter data rho."""
    return eval_T(w, alpha_from_rho(rho_ij, rho_ik, rho_jk), c.edge_states())


def spectral_weight(
    w: TetWeight, ri: float, rj: float, rk: float, c: IrcCorners
) -> State:
    """IRC weight with angles taken directly from spectral differences."""
    return eval_T(w, alpha_from_spectral(ri, rj, rk), c.edge_states())
