"""Dihedral-angle bookkeeping.

Angle triples of ideal tetrahedra, the pentagon compatibility quintuple, the
six-parameter domain D with its angle maps, spectral-parameter reductions and
shape gauge transformations on a cubic lattice.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterator, Mapping, Optional, Sequence

import numpy as np

from .errors import ConfigError, Incompatible, MissingEdge, NotInA, NotInDomain

ANGLE_TOL = 1e-12
PAIRS = ("12", "13", "14", "23", "24", "34")
# bounding box for rejection sampling of D
_SAMPLE_SPAN = 2.5


@dataclass(frozen=True)
class AngleTriple:
    """Dihedral angles (a1, a2, a3) of an ideal tetrahedron, all positive, sum pi."""

    a1: float
    a2: float
    a3: float

    def __post_init__(self):
        values = (float(self.a1), float(self.a2), float(self.a3))
        if not all(math.isfinite(v) for v in values):
            raise NotInA(f"angles must be finite, got {values}")
        if abs(sum(values) - math.pi) > ANGLE_TOL:
            raise NotInA(f"angles {values} do not sum to pi")
        if min(values) <= 0.0:
            raise NotInA(f"angles {values} are not all positive")
        object.__setattr__(self, "a1", values[0])
        object.__setattr__(self, "a2", values[1])
        object.__setattr__(self, "a3", values[2])

    @classmethod
    def from_outer(cls, a1: float, a3: float) -> "AngleTriple":
        """Triple with the middle angle recomputed as pi - a1 - a3."""
        return cls(a1, math.pi - a1 - a3, a3)

    def __iter__(self) -> Iterator[float]:
        return iter((self.a1, self.a2, self.a3))

    def __getitem__(self, index: int) -> float:
        return (self.a1, self.a2, self.a3)[index]

    @property
    def smallest(self) -> float:
        return min(self.a1, self.a2, self.a3)

    def to_list(self) -> list[float]:
        return [self.a1, self.a2, self.a3]


def alpha_from_rho(rij: float, rik: float, rjk: float) -> AngleTriple:
    """Angles (rho_jk - rho_ik, pi + rho_ij - rho_jk, rho_ik - rho_ij).

    Raises:
        NotInA: If an entry is not positive
    """
    return AngleTriple.from_outer(rjk - rik, rik - rij)


def alpha_from_spectral(ri: float, rj: float, rk: float) -> AngleTriple:
    """Angles (r_j - r_i, pi + r_i - r_k, r_k - r_j) of a cube with spectral data."""
    return AngleTriple.from_outer(rj - ri, rk - rj)


@dataclass(frozen=True)
class RhoSix:
    """The six parameters rho_ij, 1 <= i < j <= 4."""

    rho12: float
    rho13: float
    rho14: float
    rho23: float
    rho24: float
    rho34: float

    def __post_init__(self):
        for name in PAIRS:
            value = float(getattr(self, f"rho{name}"))
            if not math.isfinite(value):
                raise ConfigError(f"rho{name} must be finite")
            object.__setattr__(self, f"rho{name}", value)

    def pair(self, ij: str) -> float:
        return getattr(self, f"rho{ij}")

    def triple(self, pairs: Sequence[str]) -> AngleTriple:
        """alpha_from_rho over three pair labels, e.g. ("12", "13", "23")."""
        return alpha_from_rho(*(self.pair(p) for p in pairs))

    def replace(self, **changes: float) -> "RhoSix":
        values = self.to_dict()
        values.update(changes)
        return RhoSix(**values)

    def to_dict(self) -> dict[str, float]:
        return {f"rho{p}": self.pair(p) for p in PAIRS}

    @classmethod
    def from_dict(cls, data: Mapping[str, float]) -> "RhoSix":
        try:
            return cls(**{f"rho{p}": float(data[f"rho{p}"]) for p in PAIRS})
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"rho needs keys rho12..rho34 as numbers: {exc}") from exc

    @classmethod
    def from_sequence(cls, values: Sequence[float]) -> "RhoSix":
        if len(values) != 6:
            raise ConfigError(f"rho needs six values, got {len(values)}")
        return cls(*values)


@dataclass(frozen=True)
class SpectralQuad:
    """Four spectral parameters r1..r4."""

    r1: float
    r2: float
    r3: float
    r4: float

    def __getitem__(self, index: int) -> float:
        return (self.r1, self.r2, self.r3, self.r4)[index]

    def shifted(self, c: float) -> "SpectralQuad":
        return SpectralQuad(self.r1 + c, self.r2 + c, self.r3 + c, self.r4 + c)

    def to_dict(self) -> dict[str, float]:
        return {"r1": self.r1, "r2": self.r2, "r3": self.r3, "r4": self.r4}

    @classmethod
    def from_dict(cls, data: Mapping[str, float]) -> "SpectralQuad":
        try:
            return cls(*(float(data[f"r{i}"]) for i in range(1, 5)))
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(
                f"spectral data needs keys r1..r4 as numbers: {exc}"
            ) from exc


@dataclass(frozen=True)
class PentagonAngles:
    """Five angle triples satisfying the pentagon compatibility relations."""

    alpha0: AngleTriple
    alpha1: AngleTriple
    alpha2: AngleTriple
    alpha3: AngleTriple
    alpha4: AngleTriple

    def __post_init__(self):
        a0, a1, a2, a3, a4 = self.as_tuple()
        relations = {
            "alpha1_1 = alpha0_1 + alpha2_1": a1.a1 - (a0.a1 + a2.a1),
            "alpha1_3 = alpha0_3 + alpha4_1": a1.a3 - (a0.a3 + a4.a1),
            "alpha3_1 = alpha2_1 + alpha4_1": a3.a1 - (a2.a1 + a4.a1),
            "alpha3_3 = alpha0_1 + alpha4_3": a3.a3 - (a0.a1 + a4.a3),
            "alpha2_3 = alpha1_3 + alpha3_3": a2.a3 - (a1.a3 + a3.a3),
        }
        for name, gap in relations.items():
            if abs(gap) > ANGLE_TOL:
                raise Incompatible(f"relation {name} off by {gap:.3e}")

    def as_tuple(self) -> tuple[AngleTriple, ...]:
        return (self.alpha0, self.alpha1, self.alpha2, self.alpha3, self.alpha4)

    @property
    def smallest(self) -> float:
        return min(a.smallest for a in self.as_tuple())

    def to_dict(self) -> dict[str, list[float]]:
        return {f"alpha{i}": a.to_list() for i, a in enumerate(self.as_tuple())}


def pentagon_angles(
    alpha0: AngleTriple, alpha4: AngleTriple, alpha2_1: float
) -> PentagonAngles:
    """Complete (alpha0, alpha4, alpha2_1) to a compatible quintuple.

    The third angle of alpha2 follows from the relations as
    alpha2_3 = (alpha0_1 + alpha0_3) + (alpha4_1 + alpha4_3), and the two
    remaining triples from their first and third entries.

    Args:
        alpha0: Triple of the tetrahedron (1234)
        alpha4: Triple of the tetrahedron (0123)
        alpha2_1: First angle of the tetrahedron (0134)

    Returns:
        PentagonAngles with every relation checked

    Raises:
        Incompatible: If a derived angle is not positive

    Example:
        >>> third = AngleTriple(math.pi / 6, 2 * math.pi / 3, math.pi / 6)
        >>> pentagon_angles(third, third, math.pi / 12).alpha2.a3
        2.0943951023931953
    """
    if not alpha2_1 > 0:
        raise Incompatible(f"alpha2_1 must be positive, got {alpha2_1}")
    alpha2_3 = (alpha0.a1 + alpha0.a3) + (alpha4.a1 + alpha4.a3)
    outer = {
        "alpha1": (alpha0.a1 + alpha2_1, alpha0.a3 + alpha4.a1),
        "alpha2": (alpha2_1, alpha2_3),
        "alpha3": (alpha2_1 + alpha4.a1, alpha0.a1 + alpha4.a3),
    }
    triples = {}
    for name, (first, third) in outer.items():
        if math.pi - first - third <= 0.0:
            raise Incompatible(
                f"{name} middle angle pi - {first:.6g} - {third:.6g} is not positive"
            )
        triples[name] = AngleTriple.from_outer(first, third)
    return PentagonAngles(
        alpha0, triples["alpha1"], triples["alpha2"], triples["alpha3"], alpha4
    )


def in_domain_D(rho: RhoSix) -> bool:
    """Strict inequalities of the admissible six-parameter domain D."""
    r = rho
    low, high = min(r.rho14, r.rho23), max(r.rho14, r.rho23)
    return (
        r.rho12 < r.rho13 < low
        and high < r.rho24 < r.rho34
        and r.rho24 < math.pi + r.rho12
        and r.rho34 < math.pi + r.rho13
        and r.rho12 + r.rho34 < r.rho13 + r.rho24 < r.rho14 + r.rho23
    )


def alpha0_from_rho(rho: RhoSix) -> AngleTriple:
    """Angles of the fifth tetrahedron attached to a point of D.

    Raises:
        NotInDomain: If rho is outside D
    """
    if not in_domain_D(rho):
        raise NotInDomain(f"rho {rho.to_dict()} is outside the domain D")
    r = rho
    return AngleTriple.from_outer(
        (r.rho14 + r.rho23) - (r.rho13 + r.rho24),
        (r.rho13 + r.rho24) - (r.rho12 + r.rho34),
    )


# alpha1..alpha4 of the tetrahedron equation, as pair labels for alpha_from_rho
TE6_TRIPLES = {
    "alpha1": ("12", "13", "23"),
    "alpha2": ("12", "14", "24"),
    "alpha3": ("13", "14", "34"),
    "alpha4": ("23", "24", "34"),
}


def te6_angles(rho: RhoSix) -> PentagonAngles:
    """The five triples a point of D assigns to the tetrahedron equation."""
    alpha0 = alpha0_from_rho(rho)
    rest = {name: rho.triple(pairs) for name, pairs in TE6_TRIPLES.items()}
    return PentagonAngles(alpha0=alpha0, **rest)


def rho_from_pairs(r: SpectralQuad, pair_fn: Callable[[float, float], float]) -> RhoSix:
    """rho_ij = pair_fn(r_i, r_j) for every pair i < j."""
    values = {f"rho{p}": pair_fn(r[int(p[0]) - 1], r[int(p[1]) - 1]) for p in PAIRS}
    return RhoSix(**values)


def rho_from_spectral(r: SpectralQuad) -> RhoSix:
    return rho_from_pairs(r, lambda a, b: a + b)


def spectral_ordered(r: SpectralQuad, eps: float = 0.0) -> bool:
    """r1 < r2 < r3 < r4 < pi + r1 - eps."""
    return r.r1 < r.r2 < r.r3 < r.r4 < math.pi + r.r1 - eps


def rho_regularized(r: SpectralQuad, eps: float, delta: float) -> RhoSix:
    """Spectral reduction moved into D by lowering rho12 by eps and rho13 by delta.

    eps = delta = 0 is accepted and gives ``rho_from_spectral``.
    """
    if not (eps >= delta >= 0.0):
        raise ConfigError(f"need eps >= delta >= 0, got eps={eps}, delta={delta}")
    rho = rho_from_spectral(r)
    return rho.replace(rho12=rho.rho12 - eps, rho13=rho.rho13 - delta)


def rho_from_thetas(thetas: Sequence[float]) -> RhoSix:
    """Map the six angles of Zamolodchikov's parametrisation to rho."""
    if len(thetas) != 6:
        raise ConfigError(f"need six angles, got {len(thetas)}")
    t1, t2, t3, t4, t5, t6 = (float(t) for t in thetas)
    return RhoSix(t1, math.pi - t3, t2, t4, math.pi - t6, t5)


def thetas_from_rho(rho: RhoSix) -> tuple[float, ...]:
    return (
        rho.rho12,
        rho.rho14,
        math.pi - rho.rho13,
        rho.rho23,
        rho.rho34,
        math.pi - rho.rho24,
    )


def sample_domain_D(
    rng: np.random.Generator, count: int, max_draws: int = 1_000_000
) -> list[RhoSix]:
    """Rejection-sample ``count`` points of D from a bounding box.

    rho12 is pinned to 0 (D is invariant under a common shift of
    rho12, rho13, rho24, rho34 with rho14, rho23) and the rest are drawn
    sorted from [0, SPAN].
    """
    found: list[RhoSix] = []
    for _ in range(max_draws):
        if len(found) == count:
            break
        r13, a, b, r24, r34 = np.sort(rng.uniform(0.0, _SAMPLE_SPAN, 5))
        r14, r23 = (a, b) if rng.uniform() < 0.5 else (b, a)
        rho = RhoSix(0.0, r13, r14, r23, r24, r34)
        if in_domain_D(rho):
            found.append(rho)
    if len(found) < count:
        raise ConfigError(f"found only {len(found)} of {count} points of D")
    return found


Edge = tuple[int, int, int]


@dataclass(frozen=True)
class GaugeField:
    """Gauge parameters theta on lattice edges.

    Keys are doubled coordinates, so the edge at (l + 1/2, m - 1/2, n + 1/2)
    is stored under (2l + 1, 2m - 1, 2n + 1). With ``periodic`` set to
    (L, M, N) lookups wrap around the torus.
    """

    values: Mapping[Edge, float]
    periodic: Optional[tuple[int, int, int]] = None
    _frozen: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        table = {}
        for key, value in self.values.items():
            table[self._wrap(tuple(int(k) for k in key))] = float(value)
        object.__setattr__(self, "_frozen", table)

    def _wrap(self, key: Edge) -> Edge:
        if self.periodic is None:
            return key
        wrapped = tuple(k % (2 * size) for k, size in zip(key, self.periodic))
        return wrapped  # type: ignore[return-value]

    def __call__(self, x2: int, y2: int, z2: int) -> float:
        key = self._wrap((x2, y2, z2))
        try:
            return self._frozen[key]
        except KeyError:
            edge = tuple(k / 2 for k in key)
            raise MissingEdge(f"no gauge parameter on edge {edge}") from None

    @staticmethod
    def edges(dims: tuple[int, int, int]) -> list[Edge]:
        """All half-integer edge keys of a periodic L x M x N lattice."""
        L, M, N = dims
        return [
            (2 * i + 1, 2 * j + 1, 2 * k + 1)
            for i in range(L)
            for j in range(M)
            for k in range(N)
        ]

    @classmethod
    def constant(cls, dims: tuple[int, int, int], value: float) -> "GaugeField":
        return cls({edge: value for edge in cls.edges(dims)}, periodic=dims)

    @classmethod
    def random(
        cls, dims: tuple[int, int, int], rng: np.random.Generator, scale: float = 0.1
    ) -> "GaugeField":
        edges = cls.edges(dims)
        draws = rng.uniform(-scale, scale, len(edges))
        return cls(dict(zip(edges, draws)), periodic=dims)


def gauge_delta_alpha(
    theta: GaugeField, cube: tuple[int, int, int]
) -> tuple[float, float, float]:
    """Change of the cube's angle triple under the gauge parameters theta.

    Raises:
        MissingEdge: If theta lacks one of the eight referenced edges
    """
    l2, m2, n2 = (2 * c for c in cube)
    d1 = d2 = d3 = 0.0
    for sigma in (1, -1):
        for e in (1, -1):  # e = 2 eta
            d1 += sigma * theta(l2 - e, m2 - e, n2 + sigma * e)
            d2 += sigma * theta(l2 - e, m2 + sigma * e, n2 + e)
            d3 += sigma * theta(l2 + sigma * e, m2 + e, n2 + e)
    return d1, d2, d3


def gauge_layer_sums(
    theta: GaugeField, dims: tuple[int, int, int]
) -> dict[str, np.ndarray]:
    """Gauge-invariant combinations of the angle changes.

    Returns arrays of sum_n d1 over (l, m), sum_m d2 over (l, n) and
    sum_l d3 over (m, n).
    """
    L, M, N = dims
    delta = np.array(
        [
            [[gauge_delta_alpha(theta, (l, m, n)) for n in range(N)] for m in range(M)]
            for l in range(L)
        ]
    )
    return {
        "d1_over_n": delta[..., 0].sum(axis=2),
        "d2_over_m": delta[..., 1].sum(axis=1),
        "d3_over_l": delta[..., 2].sum(axis=0),
    }
