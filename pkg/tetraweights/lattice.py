"""Layer transfer matrices and partition functions of IRC models on small tori.

A vertex layer of an L x M torus holds L*M state variables; with a grid of
n nodes a layer configuration is a multi-index in [0, n)^{LM}, the first
lattice direction varying slowest. Cube (l, m, n) reads its bottom corners
from layer n - 1/2 and its top corners from layer n + 1/2; the coordinate
l - 1/2 maps to vertex index l - 1 and l + 1/2 to l, both mod L.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Any, Mapping, Optional

import numpy as np

from .console import log
from .errors import AngleDomainViolated, ConfigError, DimMismatch, NotInA, TooLarge
from .quadrature import Grid, GridLike, resolve_grid
from .shapes import AngleTriple, GaugeField, alpha_from_spectral, gauge_layer_sums
from .weights import IrcCorners, TetWeight, eval_T

MAX_DIM = 4096
MAX_CONFIGS = 10_000_000
GAUGE_TOL = 1e-12
# transfer-matrix rows assembled per weight call
_ROW_BLOCK = 64


@dataclass(frozen=True)
class LatticeSpec:
    """Torus dimensions and the spectral parameters of its planes."""

    L: int
    M: int
    N: int
    s: tuple[float, ...]
    t: tuple[float, ...]
    u: tuple[float, ...]

    def __post_init__(self):
        for name in ("L", "M", "N"):
            if int(getattr(self, name)) < 1:
                raise ConfigError(f"{name} must be a positive integer")
        for name, size in (("s", self.L), ("t", self.M), ("u", self.N)):
            values = tuple(float(v) for v in getattr(self, name))
            if len(values) != size:
                raise ConfigError(f"{name} needs {size} values, got {len(values)}")
            object.__setattr__(self, name, values)

    @property
    def dims(self) -> tuple[int, int, int]:
        return (self.L, self.M, self.N)

    @property
    def sites(self) -> int:
        return self.L * self.M

    def shifted(self, c: float) -> "LatticeSpec":
        """All spectral parameters moved by c."""
        return replace(
            self,
            s=tuple(v + c for v in self.s),
            t=tuple(v + c for v in self.t),
            u=tuple(v + c for v in self.u),
        )

    def rotated_layers(self, k: int = 1) -> "LatticeSpec":
        """Layers relabelled cyclically, u_n -> u_{n+k mod N}."""
        k %= self.N
        return replace(self, u=self.u[k:] + self.u[:k])

    def to_dict(self) -> dict[str, Any]:
        return {
            "L": self.L,
            "M": self.M,
            "N": self.N,
            "s": list(self.s),
            "t": list(self.t),
            "u": list(self.u),
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "LatticeSpec":
        try:
            sizes = (int(data["L"]), int(data["M"]), int(data["N"]))
            return cls(*sizes, tuple(data["s"]), tuple(data["t"]), tuple(data["u"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"lattice needs L, M, N, s, t, u: {exc}") from exc


@dataclass(frozen=True)
class TransferMatrix:
    """Discretised layer transfer matrix, rows = top layer, columns = bottom layer.

    Entries carry sqrt(mu) of both the row and the column configuration, so
    products and traces contract with the quadrature measure applied once.
    """

    dim: int
    entries: np.ndarray
    mu_weights: np.ndarray
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.entries.shape != (self.dim, self.dim):
            raise DimMismatch(
                f"entries shape {self.entries.shape} does not match dim {self.dim}"
            )
        if not np.all(np.isfinite(self.entries)):
            raise ConfigError("transfer matrix has non-finite entries")


def _layer_states(grid: Grid, sites: int) -> tuple[np.ndarray, np.ndarray]:
    """Every layer configuration as (dim, sites) node values, with its measure."""
    n = grid.size
    digits = np.indices((n,) * sites).reshape(sites, -1).T
    return grid.nodes[digits], np.prod(grid.weights[digits], axis=1)


def check_cube_angles(
    spec: LatticeSpec, u: float
) -> dict[tuple[int, int], AngleTriple]:
    """Angle triple of every cube of a layer.

    Raises:
        AngleDomainViolated: If s_l < t_m < u < pi + s_l fails for some (l, m)
    """
    angles = {}
    for l, s in enumerate(spec.s):
        for m, t in enumerate(spec.t):
            if not (s < t < u < math.pi + s):
                raise AngleDomainViolated(
                    f"cube (l={l}, m={m}) needs s < t < u < pi + s, "
                    f"got s={s}, t={t}, u={u}",
                    cube=(l, m),
                )
            try:
                angles[(l, m)] = alpha_from_spectral(s, t, u)
            except NotInA as exc:
                raise AngleDomainViolated(str(exc), cube=(l, m)) from exc
    return angles


def _cube_corners(
    bottom: np.ndarray, top: np.ndarray, spec: LatticeSpec, l: int, m: int
) -> IrcCorners:
    """Corners of cube (l, m) from (..., L, M) bottom/top layer arrays."""
    lo_l, hi_l = (l - 1) % spec.L, l
    lo_m, hi_m = (m - 1) % spec.M, m
    return IrcCorners(
        a=bottom[..., lo_l, lo_m],
        b=bottom[..., hi_l, lo_m],
        c=bottom[..., lo_l, hi_m],
        d=top[..., lo_l, lo_m],
        e=top[..., hi_l, hi_m],
        f=top[..., lo_l, hi_m],
        g=top[..., hi_l, lo_m],
        h=bottom[..., hi_l, hi_m],
    )


def _layer_weight(
    w: TetWeight,
    angles: Mapping[tuple[int, int], AngleTriple],
    bottom: np.ndarray,
    top: np.ndarray,
    spec: LatticeSpec,
) -> np.ndarray:
    value: Any = 1.0
    for (l, m), alpha in angles.items():
        corners = _cube_corners(bottom, top, spec, l, m)
        value = value * eval_T(w, alpha, corners.edge_states())
    return np.asarray(value)


def _check_dim(grid: Grid, spec: LatticeSpec) -> int:
    dim = grid.size**spec.sites
    if dim > MAX_DIM:
        raise TooLarge(
            f"transfer matrix dimension {grid.size}^{spec.sites} = {dim} "
            f"exceeds {MAX_DIM}"
        )
    return dim


def build_layer_transfer(
    w: TetWeight, spec: LatticeSpec, layer_u: float, grid: GridLike
) -> TransferMatrix:
    """Layer transfer matrix tau(u) on the discretised layer state space.

    Args:
        w: Weight model
        spec: Lattice dimensions and in-plane spectral parameters s, t
        layer_u: Spectral parameter of the layer
        grid: State grid (an adaptive line policy contributes its start grid)

    Returns:
        TransferMatrix with entries sqrt(mu_top) * prod W * sqrt(mu_bottom)

    Raises:
        AngleDomainViolated: If a cube's angles leave the positive simplex
        TooLarge: If nodes^{LM} exceeds the matrix cap
    """
    grid = resolve_grid(grid)
    angles = check_cube_angles(spec, layer_u)
    dim = _check_dim(grid, spec)
    states, mu = _layer_states(grid, spec.sites)
    layer = states.reshape(dim, spec.L, spec.M)
    root = np.sqrt(mu)
    entries = np.empty((dim, dim), dtype=complex)
    for start in range(0, dim, _ROW_BLOCK):
        top = layer[start : start + _ROW_BLOCK, None, :, :]
        block = _layer_weight(w, angles, layer[None, :, :, :], top, spec)
        rows = top.shape[0]
        entries[start : start + rows] = np.broadcast_to(block, (rows, dim))
    entries *= root[:, None] * root[None, :]
    meta = {
        "u": layer_u,
        "s": spec.s,
        "t": spec.t,
        "grid": grid.describe(),
        "model": w.describe(),
    }
    return TransferMatrix(dim, entries, mu, meta)


def commutator_norm(t1: TransferMatrix, t2: TransferMatrix) -> float:
    """||[t1, t2]||_F / (||t1||_F ||t2||_F).

    Raises:
        DimMismatch: Different dimensions, grids or in-plane parameters
    """
    if t1.dim != t2.dim:
        raise DimMismatch(f"dimensions differ: {t1.dim} vs {t2.dim}")
    for key in ("s", "t", "grid", "model"):
        if key in t1.meta and key in t2.meta and t1.meta[key] != t2.meta[key]:
            raise DimMismatch(f"transfer matrices differ in {key}")
    a, b = t1.entries, t2.entries
    scale = np.linalg.norm(a) * np.linalg.norm(b)
    if scale == 0.0:
        return 0.0
    return float(np.linalg.norm(a @ b - b @ a) / scale)


def partition_trace(w: TetWeight, spec: LatticeSpec, grid: GridLike) -> complex:
    """Z = Tr(tau(u_N) ... tau(u_1)) with a fixed left-to-right contraction order."""
    product: Optional[np.ndarray] = None
    for u in spec.u:
        tau = build_layer_transfer(w, spec, u, grid).entries
        product = tau if product is None else tau @ product
    assert product is not None
    return complex(np.trace(product))


def partition_bruteforce(w: TetWeight, spec: LatticeSpec, grid: GridLike) -> complex:
    """Z as the direct sum over every discretised configuration of the torus.

    Raises:
        TooLarge: If nodes^{LMN} exceeds the enumeration cap
    """
    grid = resolve_grid(grid)
    total_sites = spec.sites * spec.N
    count = grid.size**total_sites
    if count > MAX_CONFIGS:
        raise TooLarge(
            f"{grid.size}^{total_sites} = {count} configurations exceed {MAX_CONFIGS}"
        )
    layer_angles = [check_cube_angles(spec, u) for u in spec.u]
    states, mu = _layer_states(grid, total_sites)
    # (configs, N, L, M), layer index slowest within a configuration
    config = states.reshape(count, spec.N, spec.L, spec.M)
    value: Any = mu
    for n, angles in enumerate(layer_angles):
        bottom = config[:, (n - 1) % spec.N]
        top = config[:, n]
        value = value * _layer_weight(w, angles, bottom, top, spec)
    log(f"brute-force sum over {count} configurations", "debug")
    return complex(np.sum(value))


def gauge_probe(
    w: TetWeight,
    spec: LatticeSpec,
    grid: GridLike,
    theta: GaugeField,
    shift: float,
) -> tuple[complex, complex]:
    """Partition function before and after a uniform spectral shift.

    The gauge field's invariant layer sums are checked first; the shift c then
    moves every spectral parameter, which leaves the cube angles unchanged.

    Raises:
        ConfigError: If theta's layer sums do not vanish
    """
    sums = gauge_layer_sums(theta, spec.dims)
    worst = max(float(np.max(np.abs(v))) for v in sums.values())
    if worst > GAUGE_TOL:
        raise ConfigError(f"gauge field changes invariant layer sums by {worst:.2e}")
    return partition_trace(w, spec, grid), partition_trace(w, spec.shifted(shift), grid)


def constant_transfer(
    grid: Grid, spec: LatticeSpec, value: complex = 1.0
) -> TransferMatrix:
    """Transfer matrix of the constant weight, used as a normalisation check."""
    dim = _check_dim(grid, spec)
    _, mu = _layer_states(grid, spec.sites)
    root = np.sqrt(mu)
    entries = value * root[:, None] * root[None, :]
    return TransferMatrix(dim, entries.astype(complex), mu, {"grid": grid.describe()})
