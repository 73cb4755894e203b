"""Exception types shared across the package."""


class SpikebenchError(Exception):
    """Base class for all package errors."""


class ConfigError(SpikebenchError, ValueError):
    """A configuration value is out of range or inconsistent."""


class EncodeError(SpikebenchError, ValueError):
    """A spike field does not fit the wire format."""


class FramingError(SpikebenchError, ValueError):
    """A received byte buffer is not a whole number of spike records."""


class ProtocolError(SpikebenchError):
    """A peer violated the exchange protocol (bad count, step, or frame)."""


class ExchangeError(SpikebenchError):
    """Transport-level failure while talking to a peer."""


class BarrierError(SpikebenchError):
    """A rank failed to reach the step barrier in time."""


class TraceError(SpikebenchError, ValueError):
    """A power trace file is malformed or an analysis window is invalid."""
