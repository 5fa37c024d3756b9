"""Exception hierarchy shared by every module."""


class StegoError(Exception):
    """Base class for all errors raised by this package."""


# bit codec
class BitCountOverflow(StegoError):
    pass


class PayloadTooLong(StegoError):
    pass


class TruncatedFrame(StegoError):
    pass


class WidthOverflow(StegoError):
    pass


class ValueOverflow(StegoError):
    pass


class BadSegmentSpec(StegoError):
    pass


# prompt table
class BadArity(StegoError):
    pass


class NotPowerOfTwo(StegoError):
    pass


class DuplicatePrompt(StegoError):
    pass


class DuplicateToken(StegoError):
    pass


class UnknownToken(StegoError):
    pass


class IndexOutOfRange(StegoError):
    pass


class PromptNotFound(StegoError):
    pass


class AmbiguousPrompt(StegoError):
    pass


class TableTooSmall(StegoError):
    pass


# diffusion
class BadSteps(StegoError):
    pass


class ShapeMismatch(StegoError):
    pass


class StepOutOfRange(StegoError):
    pass


class DegenerateAlpha(StegoError):
    pass


class BadStepSequence(StegoError):
    pass


class EmptyCorpus(StegoError):
    pass


class LengthOverflow(StegoError):
    pass


class EmptySentence(StegoError):
    pass


class ModelFormatError(StegoError):
    pass


# codec
class BadRange(StegoError):
    pass


class CollisionDetected(StegoError):
    def __init__(self, segment: int, index: int, duplicate_of: int):
        super().__init__(
            f"segment {segment}: candidate {index} duplicates lower candidate {duplicate_of}"
        )
        self.segment = segment
        self.index = index
        self.duplicate_of = duplicate_of


class TableMismatch(StegoError):
    pass


class ModelMissing(StegoError):
    pass


class LengthMismatch(StegoError):
    pass


class SentenceError(StegoError):
    """Extraction failure for one stego sentence; carries its ordinal."""

    def __init__(self, ordinal: int, cause: Exception):
        super().__init__(f"sentence {ordinal}: {type(cause).__name__}: {cause}")
        self.ordinal = ordinal
        self.cause = cause


class SessionFileError(StegoError):
    pass


# metrics
class NotEnoughPositions(StegoError):
    pass


class BadCounts(StegoError):
    pass


class EmptySet(StegoError):
    pass


class DegenerateVariance(StegoError):
    pass
