"""Tests for tetraweights/errors.py exception hierarchy."""

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent.parent))

from tetraweights import errors  # noqa: E402


class TestHierarchy:
    """Test how library errors map onto built-in exception types."""

    @pytest.mark.parametrize(
        "cls",
        [
            errors.ConfigError,
            errors.OutOfStrip,
            errors.NotInA,
            errors.NotInDomain,
            errors.Incompatible,
            errors.OrderingViolated,
            errors.DimMismatch,
            errors.TooLarge,
            errors.PreconditionError,
        ],
    )
    def test_contract_violations_are_value_errors(self, cls):
        """Test that domain errors are ValueError and TetraError."""
        assert issubclass(cls, ValueError)
        assert issubclass(cls, errors.TetraError)

    @pytest.mark.parametrize(
        "cls",
        [
            errors.NonConvergent,
            errors.PoleHit,
            errors.QuadratureFailure,
            errors.EvaluationError,
        ],
    )
    def test_numerical_failures_are_arithmetic_errors(self, cls):
        """Test that numerical failures are ArithmeticError."""
        assert issubclass(cls, ArithmeticError)

    def test_missing_edge_message(self):
        """Test that MissingEdge is a KeyError with a readable message."""
        exc = errors.MissingEdge("no gauge parameter on edge (0.5, 0.5, 0.5)")
        assert isinstance(exc, KeyError)
        assert str(exc) == "no gauge parameter on edge (0.5, 0.5, 0.5)"

    def test_evaluation_error_location(self):
        """Test that the failing factor prefixes the message."""
        exc = errors.EvaluationError("pole", location="rhs factor 2 (alpha2)")
        assert str(exc) == "rhs factor 2 (alpha2): pole"
        assert exc.location == "rhs factor 2 (alpha2)"

    def test_angle_domain_violation_records_cube(self):
        """Test that AngleDomainViolated carries the cube index."""
        assert errors.AngleDomainViolated("bad", cube=(1, 0)).cube == (1, 0)
