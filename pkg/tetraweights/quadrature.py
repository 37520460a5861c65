"""State spaces, node/weight grids and the fixed-grid integration driver.

Three state spaces carry the spin variables of the weights: the unit circle
with the Haar measure dz/(2 pi i z) (3D index), the real line with Lebesgue
measure (KLV) and the unit interval (reserved for a positive-angle model).
A ``Grid`` is an immutable node/weight pair for one of them; ``integrate``
sums an integrand over a grid and estimates the error by re-summing on the
half-resolution grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import Callable, Optional, Union

import numpy as np

from .console import log
from .errors import ConfigError, QuadratureFailure

STATE_TOL = 1e-12
DEFAULT_ORDER = 16
ADAPTIVE_RETRIES = 3
BOUNDARY_RATIO = 1e-12
GROWTH_FACTOR = 1.5

Integrand = Callable[[np.ndarray], np.ndarray]


class StateSpace(Enum):
    """Spin variable space of a tetrahedral weight."""

    UNIT_CIRCLE = "unit_circle"
    REAL_LINE = "real_line"
    UNIT_INTERVAL = "unit_interval"

    def contains(self, values, tol: float = STATE_TOL) -> bool:
        """Check that every entry of ``values`` lies in this space."""
        arr = np.asarray(values, dtype=complex)
        if self is StateSpace.UNIT_CIRCLE:
            return bool(np.all(np.abs(np.abs(arr) - 1.0) <= tol))
        real = bool(np.all(np.abs(arr.imag) <= tol))
        if self is StateSpace.REAL_LINE:
            return real and bool(np.all(np.isfinite(arr.real)))
        return real and bool(np.all((arr.real >= -tol) & (arr.real <= 1.0 + tol)))

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """Draw ``size`` states: uniform phases, uniform on [-1, 1] or on [0, 1]."""
        if self is StateSpace.UNIT_CIRCLE:
            return np.exp(2j * np.pi * rng.uniform(0.0, 1.0, size))
        if self is StateSpace.REAL_LINE:
            return rng.uniform(-1.0, 1.0, size).astype(complex)
        return rng.uniform(0.0, 1.0, size).astype(complex)


@dataclass(frozen=True)
class Grid:
    """Quadrature nodes and weights on one state space.

    ``meta`` records how the grid was built (kind, sizes) and is copied into
    every residual report. ``parent_index``, when set, selects this grid's
    nodes out of a finer grid so integrand values can be reused.
    """

    space: StateSpace
    nodes: np.ndarray
    weights: np.ndarray
    meta: dict = field(default_factory=dict, compare=False)
    parent_index: Optional[np.ndarray] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=complex)
        weights = np.asarray(self.weights, dtype=float)
        if nodes.ndim != 1 or nodes.shape != weights.shape:
            raise ConfigError("grid nodes and weights must be 1-d arrays of equal size")
        if nodes.size < 2:
            raise ConfigError("a grid needs at least two nodes")
        nodes.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)

    @property
    def size(self) -> int:
        return int(self.nodes.size)

    def describe(self) -> str:
        """Short label used in CSV rows, e.g. ``circle:M=256``."""
        meta = self.meta
        kind = meta.get("kind")
        if kind == "circle":
            return f"circle:M={meta.get('nodes', self.size)}"
        if kind in ("line", "interval") and "panels" in meta and "order" in meta:
            cut = f"X={meta['x_max']:g}," if kind == "line" else ""
            return f"{kind}:{cut}panels={meta['panels']},order={meta['order']}"
        return f"{kind or self.space.value}:n={self.size}"

    def coarsened(self) -> "Grid":
        """Half-resolution companion grid used for the error estimate.

        A single panel halves its order instead; grids without build
        metadata keep every other node with weights rescaled to the same
        total measure.
        """
        meta = self.meta
        kind = meta.get("kind")
        if kind == "circle":
            count = int(meta.get("nodes", self.size))
            if count % 2 == 0 and count >= 4:
                half = circle_grid(count // 2)
                return Grid(
                    half.space,
                    half.nodes,
                    half.weights,
                    half.meta,
                    parent_index=np.arange(0, count, 2),
                )
            return circle_grid(max(2, count // 2))
        if kind in ("line", "interval") and "panels" in meta and "order" in meta:
            panels, order = int(meta["panels"]), int(meta["order"])
            if panels == 1:
                order = max(2, order // 2)
            else:
                panels //= 2
            if kind == "line":
                return line_grid(meta["x_max"], panels, order)
            return interval_grid(panels, order)
        return self._every_other()

    def _every_other(self) -> "Grid":
        if self.size < 4:
            return self
        index = np.arange(0, self.size, 2)
        weights = self.weights[index]
        weights = weights * (np.sum(self.weights) / np.sum(weights))
        return Grid(self.space, self.nodes[index], weights, {}, parent_index=index)


@lru_cache(maxsize=32)
def gauss_legendre(order: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre rule on [-1, 1], symmetrised so x[k] == -x[-k-1] exactly."""
    if order < 2:
        raise ConfigError(f"Gauss-Legendre order must be >= 2, got {order}")
    x, w = np.polynomial.legendre.leggauss(order)
    x = 0.5 * (x - x[::-1])
    w = 0.5 * (w + w[::-1])
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def composite_gauss(
    edges: np.ndarray, order: int
) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre nodes/weights over consecutive panel ``edges``."""
    x, w = gauss_legendre(order)
    edges = np.asarray(edges, dtype=float)
    left, right = edges[:-1], edges[1:]
    half = 0.5 * (right - left)
    center = 0.5 * (right + left)
    nodes = (center[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def circle_grid(count: int) -> Grid:
    """Trapezoidal grid on the unit circle for the Haar measure dz/(2 pi i z).

    Args:
        count: Number of equally spaced nodes M >= 2

    Returns:
        Grid with nodes exp(2 pi i k/M) and weights 1/M
    """
    if count < 2:
        raise ConfigError(f"circle grid needs M >= 2 nodes, got {count}")
    nodes = np.exp(2j * np.pi * np.arange(count) / count)
    weights = np.full(count, 1.0 / count)
    return Grid(
        StateSpace.UNIT_CIRCLE, nodes, weights, {"kind": "circle", "nodes": count}
    )


def line_grid(x_max: float, panels: int, order: int = DEFAULT_ORDER) -> Grid:
    """Composite Gauss-Legendre grid on [-X, X], mirror-symmetric about 0."""
    if not x_max > 0:
        raise ConfigError(f"line grid cut-off must be positive, got {x_max}")
    if panels < 1 or order < 2:
        raise ConfigError("line grid needs panels >= 1 and order >= 2")
    edges = x_max * np.linspace(-1.0, 1.0, panels + 1)
    edges = 0.5 * (edges - edges[::-1])
    nodes, weights = composite_gauss(edges, order)
    meta = {"kind": "line", "x_max": float(x_max), "panels": panels, "order": order}
    return Grid(StateSpace.REAL_LINE, nodes, weights, meta)


def interval_grid(panels: int, order: int = DEFAULT_ORDER) -> Grid:
    """Composite Gauss-Legendre grid on [0, 1]."""
    if panels < 1 or order < 2:
        raise ConfigError("interval grid needs panels >= 1 and order >= 2")
    nodes, weights = composite_gauss(np.linspace(0.0, 1.0, panels + 1), order)
    meta = {"kind": "interval", "panels": panels, "order": order}
    return Grid(StateSpace.UNIT_INTERVAL, nodes, weights, meta)


@dataclass(frozen=True)
class AdaptiveLine:
    """Line grid policy whose cut-off grows until the integrand has decayed.

    The integrand magnitude on the outermost panels must fall below
    ``boundary_ratio`` times its interior maximum; otherwise X is multiplied
    by ``growth`` and the integral recomputed, at most ``retries`` times.
    """

    x_max: float = 8.0
    panel_width: float = 0.25
    order: int = DEFAULT_ORDER
    retries: int = ADAPTIVE_RETRIES
    boundary_ratio: float = BOUNDARY_RATIO
    growth: float = GROWTH_FACTOR

    def __post_init__(self):
        if not (self.x_max > 0 and self.panel_width > 0):
            raise ConfigError("adaptive line needs positive x_max and panel_width")
        if self.order < 2 or self.retries < 0 or self.growth <= 1.0:
            raise ConfigError(
                "adaptive line needs order >= 2, retries >= 0, growth > 1"
            )

    @property
    def space(self) -> StateSpace:
        return StateSpace.REAL_LINE

    def grid_for(self, x_max: float) -> Grid:
        panels = max(2, 2 * math.ceil(x_max / self.panel_width))
        return line_grid(x_max, panels, self.order)

    def describe(self) -> str:
        return (
            f"line:adaptive,X0={self.x_max:g},"
            f"h={self.panel_width:g},order={self.order}"
        )


GridLike = Union[Grid, AdaptiveLine]


@dataclass(frozen=True)
class IntegrationResult:
    """Integral value, half-resolution error estimate and grid metadata."""

    value: complex
    error: float
    meta: dict


@dataclass(frozen=True)
class ContourConfig:
    """Quadrature settings for the contour integral defining Phi_b.

    Attributes:
        r0: Radius of the semicircle that passes above the origin
        x_max: Real cut-off; None picks it from ``tol`` and b
        panels: Gauss-Legendre panels per unit length on the real segment
        order: Gauss-Legendre order per panel
        tol: Accepted bound on the neglected tail remainder
    """

    r0: float = 0.25
    x_max: Optional[float] = None
    panels: int = 4
    order: int = DEFAULT_ORDER
    tol: float = 1e-14

    def __post_init__(self):
        if not self.r0 > 0:
            raise ConfigError(f"contour radius must be positive, got {self.r0}")
        if self.x_max is not None and not self.x_max > self.r0:
            raise ConfigError("contour cut-off must exceed the semicircle radius")
        if self.panels < 2 or self.order < 4:
            raise ConfigError("contour needs panels >= 2 and order >= 4")
        if not 0 < self.tol < 1:
            raise ConfigError(f"contour tol must lie in (0, 1), got {self.tol}")

    def refined(self) -> "ContourConfig":
        """Same contour with twice the panel density (node doubling)."""
        return ContourConfig(self.r0, self.x_max, 2 * self.panels, self.order, self.tol)


def _sum(grid: Grid, values: np.ndarray) -> complex:
    return complex(np.sum(grid.weights * values))


def _evaluate(f: Integrand, grid: Grid) -> np.ndarray:
    values = np.asarray(f(grid.nodes), dtype=complex)
    if values.shape != grid.nodes.shape:
        raise QuadratureFailure(
            f"integrand returned shape {values.shape}, expected {grid.nodes.shape}"
        )
    if not np.all(np.isfinite(values)):
        raise QuadratureFailure(f"integrand is not finite on {grid.describe()}")
    return values


def _fixed(f: Integrand, grid: Grid, values: Optional[np.ndarray] = None):
    if values is None:
        values = _evaluate(f, grid)
    value = _sum(grid, values)
    coarse = grid.coarsened()
    if coarse.parent_index is not None:
        coarse_values = values[coarse.parent_index]
    else:
        coarse_values = _evaluate(f, coarse)
    error = abs(value - _sum(coarse, coarse_values))
    meta = dict(grid.meta)
    meta["label"] = grid.describe()
    return IntegrationResult(value, error, meta)


def _adaptive(f: Integrand, policy: AdaptiveLine) -> IntegrationResult:
    x_max = policy.x_max
    for attempt in range(policy.retries + 1):
        grid = policy.grid_for(x_max)
        values = _evaluate(f, grid)
        magnitude = np.abs(values)
        edge = np.concatenate([magnitude[: policy.order], magnitude[-policy.order :]])
        peak = float(np.max(magnitude))
        if peak == 0.0 or float(np.max(edge)) < policy.boundary_ratio * peak:
            result = _fixed(f, grid, values)
            result.meta["retries"] = attempt
            return result
        log(
            f"integrand not decayed at X={x_max:g} "
            f"(edge/peak={float(np.max(edge)) / peak:.2e}); enlarging cut-off",
            "warning",
        )
        x_max *= policy.growth
    raise QuadratureFailure(
        f"integrand still above {policy.boundary_ratio:g} of its peak at "
        f"X={x_max / policy.growth:g} after {policy.retries} retries"
    )


def integrate(f: Integrand, grid: GridLike) -> IntegrationResult:
    """Integrate a vectorised integrand over a grid or adaptive line policy.

    Args:
        f: Callable mapping a 1-d node array to integrand values of equal shape
        grid: Fixed ``Grid`` or ``AdaptiveLine`` policy

    Returns:
        IntegrationResult with the weighted sum and |sum - half-resolution sum|

    Raises:
        QuadratureFailure: Integrand not finite, wrong shape, or not decayed
    """
    if isinstance(grid, AdaptiveLine):
        return _adaptive(f, grid)
    return _fixed(f, grid)


def resolve_grid(grid: GridLike) -> Grid:
    """Concrete grid for a policy (its starting grid) or the grid itself."""
    if isinstance(grid, AdaptiveLine):
        return grid.grid_for(grid.x_max)
    return grid
