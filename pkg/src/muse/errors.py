"""Exception types shared across the package."""


class MuseError(Exception):
    """Base class for all package errors."""


class ShapeError(MuseError):
    """Tensor shapes are incompatible for the requested operation."""


class ConfigError(MuseError):
    """Invalid configuration value."""


class DataError(MuseError):
    """Malformed or inconsistent input data."""


class LabelError(MuseError):
    """Label id outside the valid class range."""


class NumericError(MuseError):
    """Non-finite value where a finite one is required."""


class GraphError(MuseError):
    """Backward called on a node that is not part of a recorded graph."""


class AlignmentError(MuseError):
    """Word boundaries inconsistent with the frame sequence."""


class LengthError(MuseError):
    """Sequence longer than the configured maximum."""


class ModeError(MuseError):
    """Operation requested in an incompatible model mode."""


class TrainingError(MuseError):
    """Training diverged or otherwise failed; message names the step."""


class ParseError(MuseError):
    """File contents do not match the expected format."""
