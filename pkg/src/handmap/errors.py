"""Exception hierarchy.

Two branches matter for the CLI exit-code convention: ``ConfigError``
(usage/configuration problems, exit code 2) and ``DataError`` (malformed or
unusable input data, exit code 1).
"""


class HandmapError(Exception):
    """Base class for all package errors."""


class ConfigError(HandmapError):
    """Configuration or usage problem."""


class DataError(HandmapError):
    """Input data cannot be processed."""


# --- geometry / kinematics ---

class DegenerateFrame(DataError):
    """Frame construction vectors are zero-length or (near-)parallel."""


class MissingJointValue(ConfigError):
    """Forward kinematics was asked to run without a value for a revolute joint."""


# --- optimization ---

class NonFiniteObjective(DataError):
    """The objective returned NaN or infinity."""


# --- motion-capture parsing ---

class MalformedHeader(DataError):
    pass


class UnknownMarkerLabel(DataError):
    pass


class RowArityMismatch(DataError):
    pass


class NonMonotoneTimestamps(DataError):
    pass


class MissingHandMarkers(DataError):
    """A back-of-hand marker needed for pose estimation is absent."""


# --- record mapping ---

class NoPoseAvailable(DataError):
    """Hand markers missing and no previous state to carry over."""


class EmptyUsableSequence(DataError):
    """No frame of the sequence produced a usable state."""


class EmptyInput(DataError):
    pass


# --- robot hand configs ---

class SchemaError(ConfigError):
    pass


class DanglingReference(ConfigError):
    """A config entry references an undefined link or joint."""


class CouplingCycle(ConfigError):
    """Coupling rules form a dependency cycle."""


# --- meshes / metrics ---

class DegenerateTriangle(DataError):
    pass


class EmptyMesh(DataError):
    pass


class NonPositiveDuration(DataError):
    pass
