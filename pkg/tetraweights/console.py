"""Console output shared by the library and the suite runner.

Colored status lines for humans plus a small leveled ``log`` helper; library
code only reports through ``log`` so the CLI can raise or lower verbosity.
"""

import sys
from typing import Optional, TextIO


class Colors:
    """ANSI color codes for terminal output."""

    RED = "\033[0;31m"
    GREEN = "\033[0;32m"
    YELLOW = "\033[1;33m"
    BLUE = "\033[0;34m"
    MAGENTA = "\033[0;35m"
    CYAN = "\033[0;36m"
    NC = "\033[0m"  # No Color


LEVELS = {"debug": 10, "info": 20, "warning": 30, "error": 40, "quiet": 100}
DEFAULT_LEVEL = "warning"

_state = {"threshold": LEVELS[DEFAULT_LEVEL]}


def print_colored(
    message: str, color: str = Colors.NC, stream: Optional[TextIO] = None
):
    """Print colored message to console.

    Args:
        message: The message to print
        color: ANSI color code (default: no color)
        stream: Target stream (default: standard output)
    """
    print(f"{color}{message}{Colors.NC}", file=stream or sys.stdout)


def print_success(message: str):
    """Print success message in green with checkmark."""
    print_colored(f"✓ {message}", Colors.GREEN)


def print_error(message: str):
    """Print error message in red with X mark, on standard error."""
    print_colored(f"✗ {message}", Colors.RED, stream=sys.stderr)


def print_warning(message: str):
    """Print warning message in yellow with exclamation."""
    print_colored(f"! {message}", Colors.YELLOW)


def print_info(message: str):
    print_colored(message, Colors.CYAN)


def set_verbosity(level: str) -> None:
    """Set the lowest level that ``log`` lets through.

    Args:
        level: One of debug, info, warning, error, quiet

    Raises:
        ValueError: If the level name is unknown
    """
    if level not in LEVELS:
        raise ValueError(
            f"unknown log level {level!r}; expected one of {sorted(LEVELS)}"
        )
    _state["threshold"] = LEVELS[level]


def get_verbosity() -> str:
    for name, value in LEVELS.items():
        if value == _state["threshold"]:
            return name
    return DEFAULT_LEVEL


def log(message: str, level: str = "info") -> bool:
    """Emit a library message if its level passes the verbosity threshold.

    Args:
        message: Text to print
        level: debug, info, warning or error

    Returns:
        True if the message was printed

    Example:
        >>> log("enlarging line cut-off to 12.0", "warning")
    """
    if LEVELS.get(level, LEVELS["info"]) < _state["threshold"]:
        return False
    if level == "error":
        print_error(message)
    elif level == "warning":
        print_warning(message)
    elif level == "debug":
        print_colored(f"  {message}", Colors.BLUE)
    else:
        print_info(message)
    return True
