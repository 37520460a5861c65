"""Tests for tetraweights/console.py output helpers."""

import sys
from pathlib import Path
from unittest.mock import patch

import pytest

sys.path.insert(0, str(Path(__file__).parent.parent))

from tetraweights.console import (  # noqa: E402
    Colors,
    get_verbosity,
    log,
    print_colored,
    print_error,
    print_success,
    print_warning,
    set_verbosity,
)


@pytest.fixture(autouse=True)
def restore_verbosity():
    level = get_verbosity()
    yield
    set_verbosity(level)


class TestColors:
    """Test Colors class constants."""

    def test_colors_defined(self):
        """Test that all color constants are defined."""
        for name in ("RED", "GREEN", "YELLOW", "BLUE", "CYAN", "NC"):
            assert hasattr(Colors, name)

    def test_color_values(self):
        """Test that colors are ANSI escape codes."""
        assert Colors.RED.startswith("\033[")
        assert Colors.NC == "\033[0m"


class TestPrintFunctions:
    """Test colored print functions."""

    @patch("builtins.print")
    def test_print_colored(self, mock_print):
        """Test print_colored wraps the message in color codes."""
        print_colored("Test message", Colors.GREEN)
        mock_print.assert_called_once()
        args = mock_print.call_args[0][0]
        assert "Test message" in args
        assert Colors.GREEN in args
        assert args.endswith(Colors.NC)

    @patch("builtins.print")
    def test_print_success(self, mock_print):
        """Test print_success includes checkmark."""
        print_success("Success message")
        args = mock_print.call_args[0][0]
        assert "✓" in args
        assert "Success message" in args

    @patch("builtins.print")
    def test_print_error_goes_to_stderr(self, mock_print):
        """Test print_error includes X mark and targets stderr."""
        print_error("Error message")
        args = mock_print.call_args[0][0]
        assert "✗" in args
        assert mock_print.call_args[1]["file"] is sys.stderr

    @patch("builtins.print")
    def test_print_warning(self, mock_print):
        """Test print_warning includes exclamation."""
        print_warning("Warning message")
        args = mock_print.call_args[0][0]
        assert "!" in args
        assert "Warning message" in args


class TestLog:
    """Test the leveled log helper."""

    @patch("builtins.print")
    def test_default_level_hides_info(self, mock_print):
        """Test that info messages are dropped at the default warning level."""
        set_verbosity("warning")
        assert log("details", "info") is False
        mock_print.assert_not_called()

    @patch("builtins.print")
    def test_warning_passes(self, mock_print):
        """Test that warnings are printed with the warning marker."""
        set_verbosity("warning")
        assert log("cut-off enlarged", "warning") is True
        assert "! cut-off enlarged" in mock_print.call_args[0][0]

    @patch("builtins.print")
    def test_debug_level_shows_everything(self, mock_print):
        """Test that debug verbosity lets debug messages through."""
        set_verbosity("debug")
        assert log("inner loop", "debug") is True
        assert Colors.BLUE in mock_print.call_args[0][0]

    @patch("builtins.print")
    def test_quiet_suppresses_errors(self, mock_print):
        """Test that quiet hides even error messages."""
        set_verbosity("quiet")
        assert log("boom", "error") is False
        mock_print.assert_not_called()

    def test_unknown_level_rejected(self):
        """Test that set_verbosity rejects unknown names."""
        with pytest.raises(ValueError, match="unknown log level"):
            set_verbosity("loud")

    def test_get_verbosity_round_trip(self):
        """Test that get_verbosity reports the level just set."""
        set_verbosity("info")
        assert get_verbosity() == "info"
