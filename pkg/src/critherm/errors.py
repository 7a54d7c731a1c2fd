"""Exception types shared across the simulator."""


class ThermoError(Exception):
    """Base class for all physics / configuration errors raised here."""


class DomainError(ThermoError):
    """An input is outside the physically meaningful domain (T <= 0, C >= 1, ...)."""


class GeometryError(ThermoError):
    """Invalid sensor geometry (overlapping particles, observer inside a particle)."""


class SolverError(ThermoError):
    """A self-consistent solver failed to converge; carries the last bracket."""

    def __init__(self, message, bracket=None):
        super().__init__(message)
        self.bracket = bracket


class LabelingAmbiguityError(ThermoError):
    """Two eigenvectors have equal overlap with |m_s=0>, so the 0-like level
    cannot be identified."""


class UnmeasurableError(ThermoError):
    """The requested sensitivity is infinite (zero signal slope)."""


class EstimationError(ThermoError):
    """A protocol window could not be converted into a temperature estimate."""


class SchemaError(ThermoError):
    """Scenario configuration violates the schema; message carries the field path."""
