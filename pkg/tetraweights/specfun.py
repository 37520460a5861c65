"""Quantum dilogarithms.

Truncated q-Pochhammer products and the 3D-index building block G_q for
|q| < 1, and Faddeev's non-compact quantum dilogarithm Phi_b with its
normalised variant Psi_b for real b.

Phi_b(z) = exp( int_C e^{-2ixz} / (4 sinh(xb) sinh(x/b)) dx/x ) is evaluated
on a contour made of a small semicircle above the origin and the two real
half-lines. The half-lines are folded onto [r0, X] with a non-cancelling
integrand, and the part beyond X is integrated in closed form through the
complex exponential integral E1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple, Union

import numpy as np
from scipy.special import exp1

from .errors import (
    InputValidationError,
    NonConvergent,
    OutOfStrip,
    PoleHit,
    QuadratureFailure,
)
from .quadrature import ContourConfig, composite_gauss

B_MIN = 0.25
B_MAX = 4.0
DEFAULT_TOL = 1e-14
DEFAULT_MAX_TERMS = 10_000
DEFAULT_POLE_GUARD = 1e-8
# rows of z evaluated per block of the contour sum
_CHUNK = 256

ArrayLike = Union[complex, float, np.ndarray]


@dataclass(frozen=True)
class QParam:
    """Nome of the 3D-index model, 0 < |q| < 1."""

    q: complex

    def __post_init__(self):
        q = complex(self.q)
        if not abs(q) < 1.0 or not math.isfinite(abs(q)):
            raise InputValidationError(f"|q| must be < 1, got q = {self.q}")
        object.__setattr__(self, "q", q)

    def conjugate(self) -> "QParam":
        return QParam(self.q.conjugate())


@dataclass(frozen=True)
class BParam:
    """Real Planck parameter b of the KLV model, restricted to [1/4, 4]."""

    b: float

    def __post_init__(self):
        if isinstance(self.b, complex):
            raise InputValidationError(f"b must be real, got {self.b}")
        b = float(self.b)
        if not B_MIN <= b <= B_MAX:
            raise InputValidationError(f"b must lie in [{B_MIN}, {B_MAX}], got {b}")
        object.__setattr__(self, "b", b)

    @property
    def q_sum(self) -> float:
        """b + 1/b, the full width of the Phi_b strip."""
        return self.b + 1.0 / self.b

    def dual(self) -> "BParam":
        return BParam(1.0 / self.b)


@dataclass(frozen=True)
class TruncationPolicy:
    """Stopping rule for truncated infinite products."""

    tol: float = DEFAULT_TOL
    max_terms: int = DEFAULT_MAX_TERMS
    pole_guard: float = DEFAULT_POLE_GUARD

    def __post_init__(self):
        if not 0 < self.tol < 1:
            raise InputValidationError(f"tol must lie in (0, 1), got {self.tol}")
        if self.max_terms < 1:
            raise InputValidationError("max_terms must be positive")
        if self.pole_guard < 0:
            raise InputValidationError("pole_guard must be non-negative")


DEFAULT_POLICY = TruncationPolicy()
DEFAULT_CONTOUR = ContourConfig()


class Evaluated(NamedTuple):
    """A special-function value with its error estimate."""

    value: ArrayLike
    error: ArrayLike


def _as_output(arr: np.ndarray, scalar: bool):
    if scalar:
        return complex(arr.reshape(()))
    return arr


def _out_real(arr: np.ndarray, scalar: bool):
    if scalar:
        return float(arr.reshape(()))
    return arr


def _pochhammer(z, q: complex, policy: TruncationPolicy, guard: bool = False):
    """Vectorised (z; q)_inf with an absolute tail bound per entry."""
    z = np.asarray(z, dtype=complex)
    result = np.ones_like(z)
    term = z.copy()
    decay = 1.0 - abs(q)
    for index in range(policy.max_terms):
        factor = 1.0 - term
        if guard and np.any(np.abs(factor) < policy.pole_guard):
            raise PoleHit(
                f"1 - q^{index} z within {policy.pole_guard:g} of zero", index=index
            )
        result = result * factor
        term = term * q
        tail = float(np.max(np.abs(term), initial=0.0)) / decay
        if tail < policy.tol:
            return result, np.abs(result) * math.expm1(tail)
    raise NonConvergent(
        f"(z; q)_inf not within tol={policy.tol:g} after {policy.max_terms} "
        f"factors (|q| = {abs(q):.6g})"
    )


def q_pochhammer(
    z: ArrayLike, q: QParam, policy: TruncationPolicy = DEFAULT_POLICY
) -> Evaluated:
    """Truncated q-Pochhammer product (z; q)_inf.

    Multiplies factors (1 - q^i z) until |q^n z| / (1 - |q|), which bounds
    the logarithm of the remaining tail, drops below ``policy.tol``.

    Args:
        z: Complex scalar or array
        q: Nome with |q| < 1
        policy: Truncation tolerance and term cap

    Returns:
        Evaluated(value, error) with an absolute tail bound as error

    Raises:
        NonConvergent: If ``policy.max_terms`` factors are not enough

    Example:
        >>> q_pochhammer(0.5, QParam(0.5)).value
        (0.2887880950866...+0j)
    """
    scalar = np.ndim(z) == 0
    value, error = _pochhammer(z, q.q, policy)
    return Evaluated(_as_output(value, scalar), _out_real(error, scalar))


def _g_q(z, q: complex, policy: TruncationPolicy):
    z = np.asarray(z, dtype=complex)
    if np.any(z == 0):
        raise InputValidationError("G_q is singular at z = 0")
    numerator, num_err = _pochhammer(-q / z, q, policy)
    denominator, den_err = _pochhammer(z, q, policy, guard=True)
    value = numerator / denominator
    with np.errstate(divide="ignore", invalid="ignore"):
        rel = num_err / np.maximum(np.abs(numerator), 1e-300)
        rel = rel + den_err / np.abs(denominator)
    return value, np.abs(value) * rel


def g_q_values(z, q: complex, policy: TruncationPolicy = DEFAULT_POLICY) -> np.ndarray:
    """Array form of G_q without error bookkeeping, for weight evaluation."""
    return _g_q(z, q, policy)[0]


def g_q(
    z: ArrayLike, q: QParam, policy: TruncationPolicy = DEFAULT_POLICY
) -> Evaluated:
    """G_q(z) = (-q/z; q)_inf / (z; q)_inf.

    Raises:
        InputValidationError: If z = 0
        PoleHit: If some 1 - q^i z falls within ``policy.pole_guard`` of 0
    """
    scalar = np.ndim(z) == 0
    value, error = _g_q(z, q.q, policy)
    return Evaluated(_as_output(value, scalar), _out_real(error, scalar))


@dataclass(frozen=True)
class _ContourRule:
    arc_x: np.ndarray
    arc_c: np.ndarray
    line_x: np.ndarray
    line_c: np.ndarray
    line_base: np.ndarray
    q_sum: float
    x_cut: float
    tail_decay: float


@lru_cache(maxsize=64)
def _contour_rule(b: float, config: ContourConfig) -> _ContourRule:
    q_sum = b + 1.0 / b
    slow = min(b, 1.0 / b)
    if config.r0 >= math.pi * slow:
        raise QuadratureFailure(
            f"semicircle radius {config.r0} reaches the first pole at i*pi*{slow:.4g}"
        )
    if config.x_max is None:
        x_cut = max(config.r0 + 2.0, math.log(100.0 / config.tol) / (2.0 * slow))
    else:
        x_cut = float(config.x_max)

    # semicircle x = r0 e^{i theta}, theta from pi down to 0; dx/x = i dtheta
    theta, w_theta = composite_gauss(
        np.linspace(0.0, math.pi, config.panels + 1), config.order
    )
    arc_x = config.r0 * np.exp(1j * theta)
    arc_c = -1j * w_theta / (4.0 * np.sinh(b * arc_x) * np.sinh(arc_x / b))

    panels = max(2, math.ceil(config.panels * (x_cut - config.r0)))
    line_x, w_line = composite_gauss(
        np.linspace(config.r0, x_cut, panels + 1), config.order
    )
    denominator = np.expm1(-2.0 * b * line_x) * np.expm1(-2.0 * line_x / b)
    line_c = w_line / (line_x * denominator)
    return _ContourRule(
        arc_x=arc_x,
        arc_c=arc_c,
        line_x=line_x,
        line_c=line_c,
        line_base=-q_sum * line_x,
        q_sum=q_sum,
        x_cut=x_cut,
        tail_decay=2.0 * slow,
    )


def _log_phi_block(z: np.ndarray, rule: _ContourRule, tol: float) -> np.ndarray:
    arc = np.exp(-2j * np.outer(z, rule.arc_x)) @ rule.arc_c
    phase = -2j * np.outer(z, rule.line_x)
    line = (
        np.exp(phase + rule.line_base) - np.exp(-phase + rule.line_base)
    ) @ rule.line_c
    upper = exp1((rule.q_sum + 2j * z) * rule.x_cut)
    lower = exp1((rule.q_sum - 2j * z) * rule.x_cut)
    ratio = math.exp(-rule.tail_decay * rule.x_cut)
    remainder = 2.0 * ratio / (1.0 - ratio) * (np.abs(upper) + np.abs(lower))
    if np.any(remainder > tol):
        raise QuadratureFailure(
            f"Phi_b tail beyond X={rule.x_cut:g} bounded by "
            f"{float(np.max(remainder)):.2e} > tol={tol:g}"
        )
    return arc + line + upper - lower


def log_phi_b(z: ArrayLike, b: float, quad: ContourConfig = DEFAULT_CONTOUR):
    """log Phi_b(z) on the strip |Im z| < (b + 1/b)/2, vectorised over z."""
    z_arr = np.asarray(z, dtype=complex)
    q_sum = b + 1.0 / b
    if np.any(np.abs(z_arr.imag) >= q_sum / 2.0):
        worst = float(np.max(np.abs(z_arr.imag)))
        raise OutOfStrip(
            f"|Im z| = {worst:.6g} outside the strip of half-width {q_sum / 2:.6g}"
        )
    rule = _contour_rule(float(b), quad)
    flat = z_arr.ravel()
    out = np.empty(flat.shape, dtype=complex)
    for start in range(0, flat.size, _CHUNK):
        out[start : start + _CHUNK] = _log_phi_block(
            flat[start : start + _CHUNK], rule, quad.tol
        )
    if z_arr.ndim == 0:
        return complex(out[0])
    return out.reshape(z_arr.shape)


@lru_cache(maxsize=64)
def _log_phi_zero(b: float, quad: ContourConfig) -> complex:
    return complex(log_phi_b(0.0, b, quad))


def log_psi_b(x: ArrayLike, b: float, quad: ContourConfig = DEFAULT_CONTOUR):
    """log Psi_b(x) = -i pi x^2/2 + log Phi_b(x) - log Phi_b(0)."""
    x_arr = np.asarray(x, dtype=complex)
    gaussian = -0.5j * np.pi * x_arr * x_arr
    return gaussian + log_phi_b(x_arr, b, quad) - _log_phi_zero(b, quad)


def phi_b(z: ArrayLike, b: BParam, quad: ContourConfig = DEFAULT_CONTOUR) -> Evaluated:
    """Faddeev's quantum dilogarithm Phi_b(z).

    Args:
        z: Complex scalar or array with |Im z| < (b + 1/b)/2
        b: Real parameter in [1/4, 4]
        quad: Contour quadrature settings

    Returns:
        Evaluated(value, error); the error is the change under node doubling

    Raises:
        OutOfStrip: If an argument leaves the strip
        QuadratureFailure: If the tail bound exceeds ``quad.tol``
    """
    scalar = np.ndim(z) == 0
    value = np.exp(np.asarray(log_phi_b(z, b.b, quad)))
    refined = np.exp(np.asarray(log_phi_b(z, b.b, quad.refined())))
    error = _out_real(np.abs(refined - value), scalar)
    return Evaluated(_as_output(value, scalar), error)


def psi_b(x: ArrayLike, b: BParam, quad: ContourConfig = DEFAULT_CONTOUR) -> Evaluated:
    """Psi_b(x) = exp(-i pi x^2/2) Phi_b(x) / Phi_b(0), with Psi_b(0) = 1."""
    scalar = np.ndim(x) == 0
    value = np.exp(np.asarray(log_psi_b(x, b.b, quad)))
    refined = np.exp(np.asarray(log_psi_b(x, b.b, quad.refined())))
    error = _out_real(np.abs(refined - value), scalar)
    return Evaluated(_as_output(value, scalar), error)
