"""Exception types shared across the package."""


class SimStudentError(Exception):
    """Base class for package-specific errors."""


class UntrainedClassifier(SimStudentError):
    """Classifier used before weights were fitted or loaded."""


class DegenerateCorpus(SimStudentError):
    """Training corpus too small or missing a label."""


class ModelFormatError(SimStudentError):
    """Serialized model file has the wrong magic, version, or shape."""


class NotADistribution(SimStudentError):
    """Vector is not a probability simplex within tolerance."""


class EmptyEvaluation(SimStudentError):
    """Evaluation requested on an empty set of predictions."""


class AnnotationMismatch(SimStudentError):
    """Entity annotation does not belong to the given text."""


class NonPositiveValue(SimStudentError):
    """Dimensions must be strictly positive."""


class UnspecifiedFigure(SimStudentError):
    """Operation needs a concrete figure reference."""


class WrongPhase(SimStudentError):
    """Session is not in the phase this operation requires."""


class SessionClosed(SimStudentError):
    """Session already closed."""


class UnknownTicket(SimStudentError):
    """Ticket id does not name an actionable ticket."""


class DuplicateTicket(SimStudentError):
    """Session already has an unresolved ticket."""


class AlreadyClaimed(SimStudentError):
    """Ticket was claimed by another supervisor first."""


class NotClaimant(SimStudentError):
    """Only the claiming supervisor may resolve a claimed ticket."""


class EmptyReply(SimStudentError):
    """Supervisor replies must contain text."""


class TemplateValidationError(SimStudentError):
    """Response template failed guard parsing or slot analysis."""


class ConfigError(SimStudentError):
    """Configuration file is malformed."""
