"""Exception hierarchy shared across the package."""


class SpikeColError(Exception):
    """Base class for every error raised by spikecol."""


class ConfigurationError(SpikeColError, ValueError):
    """Inconsistent network, encoder or run configuration."""


class DomainError(SpikeColError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class CapacityError(SpikeColError, ValueError):
    """Input does not fit the configured neuron space or codebook."""


class InputValidationError(SpikeColError, ValueError):
    """Malformed input data (pixel values, empty horizons, ...)."""


class SimulationFault(SpikeColError, FloatingPointError):
    """Non-finite state encountered while stepping the network."""

    def __init__(self, message, step):
        super().__init__(f"{message} (step {step})")
        self.step = step


class DataFormatError(SpikeColError, ValueError):
    """A data file could not be parsed."""

    def __init__(self, message, path=None, line=None):
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        elif line is not None:
            where = f"line {line}: "
        super().__init__(where + message)
        self.path = path
        self.line = line


class PGMFormatError(DataFormatError):
    """Unsupported magic number (only P2 and P5 are accepted)."""


class PGMMaxvalError(DataFormatError):
    """Maximum gray value other than 255."""


class PGMTruncatedError(DataFormatError):
    """Pixel payload shorter than width x height."""
