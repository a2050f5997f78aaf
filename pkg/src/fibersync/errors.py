"""Exception types shared across the package."""

from __future__ import annotations


class FiberSyncError(Exception):
    """Base class for all package errors."""


class SignalError(FiberSyncError, ValueError):
    """Invalid signal data or out-of-contract signal operation."""


class GridError(SignalError):
    """Invalid time-grid parameters or mismatched grids."""


class ConfigError(FiberSyncError, ValueError):
    """Scenario or component configuration violates an invariant."""


class SaturationError(FiberSyncError):
    """An actuator stage was driven past its range.

    Attributes:
        events: list of SaturationEvent describing each overflow.
    """

    def __init__(self, message: str, events=None):
        super().__init__(message)
        self.events = list(events or [])


class SimulationError(FiberSyncError):
    """Simulation could not proceed (diverged, NaN input, persistent saturation)."""
