"""Exception types shared across the simulator.

Every error that can cross the CLI boundary maps to a distinct exit code
(see asyncsa.cli); library callers catch the types directly.
"""

from __future__ import annotations


class ConfigError(ValueError):
    """A config file or programmatic config value is invalid or unknown."""


class DivergenceError(RuntimeError):
    """An iterate became non-finite during a run.

    Carries the tick index and the first offending component; when raised
    out of ``run`` the partial trace recorded so far is attached as
    ``trace`` so the blow-up can be inspected.
    """

    def __init__(self, n: int, component: int, message: str | None = None):
        self.n = int(n)
        self.component = int(component)
        self.trace = None
        super().__init__(
            message
            or f"iterate diverged at tick {self.n}, component {self.component}"
        )


class HistoryWindowError(RuntimeError):
    """A delayed read reached past the retained history window."""


class InsufficientActivationError(RuntimeError):
    """A per-agent statistic was requested for an agent that never updated."""


class FixedPointError(RuntimeError):
    """The fixed-point solver hit its iteration cap before its tolerance."""
