"""Tests for tetraweights/shapes.py angle bookkeeping."""

import math
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent.parent))

from tetraweights.errors import (  # noqa: E402
    ConfigError,
    Incompatible,
    MissingEdge,
    NotInA,
    NotInDomain,
)
from tetraweights.shapes import (  # noqa: E402
    AngleTriple,
    GaugeField,
    PentagonAngles,
    RhoSix,
    SpectralQuad,
    alpha0_from_rho,
    alpha_from_rho,
    alpha_from_spectral,
    gauge_delta_alpha,
    gauge_layer_sums,
    in_domain_D,
    pentagon_angles,
    rho_from_pairs,
    rho_from_spectral,
    rho_from_thetas,
    rho_regularized,
    sample_domain_D,
    spectral_ordered,
    te6_angles,
    thetas_from_rho,
)

PI = math.pi
PINNED = AngleTriple(PI / 6, 2 * PI / 3, PI / 6)
NARROW_RHO = RhoSix(0.0, 0.1, 0.2, 0.6, 0.65, 0.7)
WIDE_RHO = RhoSix(0.0, 0.6, 1.2, 1.2, 1.5, 1.8)


def assert_triple(triple, expected):
    assert triple.to_list() == pytest.approx(list(expected), abs=1e-12)


class TestAngleTriple:
    """Test the positive angle simplex."""

    def test_valid_triple(self):
        """Test that a positive triple summing to pi is accepted."""
        triple = AngleTriple.from_outer(0.5, 0.7)
        assert triple.a2 == pytest.approx(PI - 1.2)
        assert triple.smallest == pytest.approx(0.5)
        assert list(triple) == triple.to_list()

    def test_wrong_sum(self):
        """Test that a triple not summing to pi raises NotInA."""
        with pytest.raises(NotInA, match="sum to pi"):
            AngleTriple(1.0, 1.0, 1.0)

    def test_zero_angle(self):
        """Test that a boundary triple raises NotInA."""
        with pytest.raises(NotInA, match="positive"):
            AngleTriple(0.0, PI / 2, PI / 2)

    def test_alpha_from_rho(self):
        """Test (rho_jk - rho_ik, pi + rho_ij - rho_jk, rho_ik - rho_ij)."""
        assert_triple(alpha_from_rho(0.0, 0.1, 0.6), (0.5, PI - 0.6, 0.1))

    def test_alpha_from_spectral(self):
        """Test (r_j - r_i, pi + r_i - r_k, r_k - r_j)."""
        assert_triple(alpha_from_spectral(0.125, 0.5, 1.0), (0.375, PI - 0.875, 0.5))


class TestPentagonAngles:
    """Test completion of pentagon quintuples."""

    def test_pinned_quintuple(self):
        """Test the quintuple with alpha0 = alpha4 = (pi/6, 2pi/3, pi/6)."""
        angles = pentagon_angles(PINNED, PINNED, PI / 12)
        assert_triple(angles.alpha2, (PI / 12, PI / 4, 2 * PI / 3))
        assert_triple(angles.alpha1, (PI / 4, 5 * PI / 12, PI / 3))
        assert_triple(angles.alpha3, (PI / 4, 5 * PI / 12, PI / 3))
        assert angles.smallest == pytest.approx(PI / 12)

    def test_equilateral_is_incompatible(self):
        """Test that equilateral alpha0 and alpha4 leave no room for alpha2."""
        third = AngleTriple(PI / 3, PI / 3, PI / 3)
        with pytest.raises(Incompatible):
            pentagon_angles(third, third, 0.1)

    def test_non_positive_alpha2_1(self):
        """Test that alpha2_1 must be positive."""
        with pytest.raises(Incompatible):
            pentagon_angles(PINNED, PINNED, 0.0)

    def test_relation_check(self):
        """Test that a quintuple breaking a relation is rejected."""
        angles = pentagon_angles(PINNED, PINNED, PI / 12)
        with pytest.raises(Incompatible, match="alpha1_1"):
            PentagonAngles(
                angles.alpha0,
                AngleTriple.from_outer(PI / 4 + 0.01, PI / 3),
                angles.alpha2,
                angles.alpha3,
                angles.alpha4,
            )


class TestDomainD:
    """Test the six-parameter domain and its angle maps."""

    def test_narrow_point(self):
        """Test the point (0, .1, .2, .6, .65, .7) and its fifth triple."""
        assert in_domain_D(NARROW_RHO)
        assert_triple(alpha0_from_rho(NARROW_RHO), (0.05, PI - 0.1, 0.05))

    def test_wide_point_angles(self):
        """Test the five triples of the wide point."""
        angles = te6_angles(WIDE_RHO)
        assert_triple(angles.alpha0, (0.3, PI - 0.6, 0.3))
        assert_triple(angles.alpha1, (0.6, PI - 1.2, 0.6))
        assert_triple(angles.alpha2, (0.3, PI - 1.5, 1.2))
        assert_triple(angles.alpha3, (0.6, PI - 1.2, 0.6))
        assert_triple(angles.alpha4, (0.3, PI - 0.6, 0.3))

    def test_outside_domain(self):
        """Test that violating an inequality raises NotInDomain."""
        rho = NARROW_RHO.replace(rho13=0.3)
        assert not in_domain_D(rho)
        with pytest.raises(NotInDomain):
            te6_angles(rho)

    def test_sampled_points_lie_in_domain(self):
        """Test that rejection sampling only returns points of D."""
        points = sample_domain_D(np.random.default_rng(3), 5)
        assert len(points) == 5
        assert all(in_domain_D(p) for p in points)
        for point in points:
            te6_angles(point)

    def test_from_dict_requires_all_keys(self):
        """Test that a missing rho key raises ConfigError."""
        with pytest.raises(ConfigError):
            RhoSix.from_dict({"rho12": 0.0})

    def test_thetas_inverse(self):
        """Test that the angle parametrisation inverts rho_from_thetas."""
        back = rho_from_thetas(thetas_from_rho(WIDE_RHO))
        expected = list(WIDE_RHO.to_dict().values())
        assert list(back.to_dict().values()) == pytest.approx(expected)


class TestSpectralReduction:
    """Test the four-parameter reduction and its regularisation."""

    def test_regularized_point(self):
        """Test r = (0, .1, .3, .6) with eps = .02, delta = .01."""
        r = SpectralQuad(0.0, 0.1, 0.3, 0.6)
        rho = rho_regularized(r, 0.02, 0.01)
        expected = [0.08, 0.29, 0.6, 0.4, 0.7, 0.9]
        assert list(rho.to_dict().values()) == pytest.approx(expected)
        assert in_domain_D(rho)
        assert_triple(alpha0_from_rho(rho), (0.01, PI - 0.02, 0.01))

    def test_flat_limit_sits_on_boundary(self):
        """Test that eps = delta = 0 gives the unregularised point outside D."""
        r = SpectralQuad(0.0, 0.25, 0.5, 1.0)
        assert rho_regularized(r, 0.0, 0.0) == rho_from_spectral(r)
        assert not in_domain_D(rho_from_spectral(r))

    def test_custom_pair_function(self):
        """Test that the pair reduction applies the function to r_i, r_j with i < j."""
        rho = rho_from_pairs(SpectralQuad(1.0, 2.0, 3.0, 4.0), lambda a, b: b - a)
        assert rho == RhoSix(1.0, 2.0, 3.0, 1.0, 2.0, 1.0)

    def test_eps_below_delta(self):
        """Test that eps < delta raises ConfigError."""
        with pytest.raises(ConfigError):
            rho_regularized(SpectralQuad(0.0, 0.1, 0.3, 0.6), 0.01, 0.02)

    def test_ordering(self):
        """Test the window r1 < r2 < r3 < r4 < pi + r1 - eps."""
        assert spectral_ordered(SpectralQuad(0.0, 0.1, 0.3, 0.6), 0.02)
        assert not spectral_ordered(SpectralQuad(0.0, 0.3, 0.1, 0.6))
        assert not spectral_ordered(SpectralQuad(0.0, 0.1, 0.3, 3.13), 0.02)


class TestGauge:
    """Test gauge fields on periodic lattices."""

    def test_missing_edge(self):
        """Test that a lookup off a sparse field raises MissingEdge."""
        theta = GaugeField({(1, 1, 1): 0.5})
        assert theta(1, 1, 1) == 0.5
        with pytest.raises(MissingEdge):
            theta(3, 1, 1)
        with pytest.raises(KeyError):
            theta(1, 3, 1)

    def test_periodic_wrap(self):
        """Test that periodic lookups wrap modulo twice the size."""
        theta = GaugeField.constant((2, 1, 1), 0.25)
        assert theta(-1, 1, 1) == 0.25
        assert theta(5, 3, -1) == 0.25

    def test_constant_field_changes_nothing(self):
        """Test that a constant field leaves every triple unchanged."""
        theta = GaugeField.constant((2, 2, 2), 0.3)
        assert gauge_delta_alpha(theta, (1, 0, 1)) == pytest.approx((0.0, 0.0, 0.0))

    def test_layer_sums_vanish(self):
        """Test the invariant layer sums for a random periodic field."""
        dims = (2, 3, 2)
        theta = GaugeField.random(dims, np.random.default_rng(5))
        sums = gauge_layer_sums(theta, dims)
        assert sums["d1_over_n"].shape == (2, 3)
        for values in sums.values():
            assert np.max(np.abs(values)) < 1e-15

    def test_random_field_moves_single_cubes(self):
        """Test that a random field does change individual triples."""
        theta = GaugeField.random((2, 2, 2), np.random.default_rng(5))
        assert max(abs(d) for d in gauge_delta_alpha(theta, (0, 0, 0))) > 1e-6
