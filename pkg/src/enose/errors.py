"""Exception types shared across the package."""


class EnoseError(Exception):
    """Base class for every error this package raises on purpose."""


# -- corpus / session file errors ---------------------------------------

class SchemaError(EnoseError):
    """Input document does not match the corpus schema (missing field, wrong arity, bad type)."""


class RangeError(EnoseError):
    """A sensor value is outside its physical range (humidity, resistance, pressure)."""


class DuplicateSessionId(EnoseError):
    """Two sessions in one corpus share a session_id."""


class EmptyCorpus(EnoseError):
    """No sessions were supplied where at least one is required."""


class UnknownLabel(EnoseError):
    """A class/label/freshness string does not belong to the taxonomy."""


# -- preprocessing errors ------------------------------------------------

class DegenerateData(EnoseError):
    """All rows identical; no variance to decompose."""


class SingularScatter(EnoseError):
    """Within-class scatter is not invertible even after regularization."""


class BetweenScatterZero(EnoseError):
    """Class means coincide; no discriminating direction exists."""


class DimensionMismatch(EnoseError):
    """Input vector width differs from what the model was fitted on."""


# -- classifier errors ---------------------------------------------------

class SingleClassData(EnoseError):
    """Training data contains fewer than two classes."""


class InvalidHyperparameter(EnoseError):
    """An algorithm spec or hyperparameter value is not usable."""


# -- model persistence errors ---------------------------------------------

class VersionMismatch(EnoseError):
    """Serialized model carries an unknown format version."""


class CorruptModel(EnoseError):
    """Serialized model bytes cannot be decoded."""


# -- hierarchy errors ------------------------------------------------------

class MissingBranch(EnoseError):
    """Prediction routed to a class or label the model was never trained on."""


class InsufficientClasses(EnoseError):
    """Corpus does not contain enough general classes to train the cascade."""


# -- evaluation errors ------------------------------------------------------

class LengthMismatch(EnoseError):
    """Actual and predicted label lists differ in length."""


class TooFewSessions(EnoseError):
    """Leave-one-session-out needs at least two distinct sessions."""


# -- synthesis errors --------------------------------------------------------

class InvalidConfig(EnoseError):
    """Synthetic corpus configuration violates its own constraints."""
