"""Exception types raised across the package.

The CLI maps these onto exit codes: :class:`ConfigError` -> 2,
:class:`DataError` (and :class:`ParseError`) -> 3, anything else -> 4.
"""


class QaeError(Exception):
    """Base class for package errors."""


class SizeError(QaeError, ValueError):
    """Qubit count or problem size out of the supported range."""


class ArityError(QaeError, ValueError):
    """Wrong number of angles or wires for a gate."""


class PartitionError(QaeError, ValueError):
    """Invalid latent/trash split."""


class CompositionError(QaeError, ValueError):
    """Circuits that cannot be stitched together."""


class StateError(QaeError, ValueError):
    """State vector is not normalized."""


class UnsupportedGateError(QaeError, ValueError):
    """Parameterized gate has no two-point shift rule."""


class ConsistencyError(QaeError, RuntimeError):
    """A forward cache no longer matches the model it came from."""


class DataError(QaeError, ValueError):
    """Input data violates a precondition (scaling, capacity, shape)."""


class CapacityError(DataError):
    """Not enough rows to build the requested folds."""


class ParseError(DataError):
    """Malformed CSV input."""

    def __init__(self, message: str, row: int | None = None, column: str | None = None):
        loc = []
        if row is not None:
            loc.append(f"row {row}")
        if column is not None:
            loc.append(f"column {column!r}")
        super().__init__(f"{message} ({', '.join(loc)})" if loc else message)
        self.row = row
        self.column = column


class ConfigError(QaeError, ValueError):
    """Invalid experiment or CLI configuration."""
