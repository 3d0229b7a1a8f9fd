"""Exception types shared across the package."""


class ZscatError(Exception):
    """Base class for all errors raised by this package."""


class EmptySentence(ZscatError):
    """A sentence produced no tokens."""


class MalformedEmbeddingFile(ZscatError):
    """An embedding file could not be parsed (bad float, dim mismatch, truncation)."""


class AllWordsOutOfVocabulary(ZscatError):
    """No word of a tag phrase is present in the embedding store."""


class ShapeMismatch(ZscatError):
    """Array arguments have incompatible shapes."""


class StaleCache(ZscatError):
    """A forward cache was produced by a different parameter version."""


class CorruptCheckpoint(ZscatError):
    """A checkpoint stream failed validation (magic, truncation, shapes)."""


class DegenerateVocabulary(ZscatError):
    """A record's tag set equals the full corpus vocabulary; no negatives exist."""


class NonFiniteLoss(ZscatError):
    """Training produced a NaN or infinite loss."""

    def __init__(self, epoch: int, batch_index: int):
        super().__init__(f"non-finite loss at epoch {epoch}, batch {batch_index}")
        self.epoch = epoch
        self.batch_index = batch_index


class EmptyEvaluationSet(ZscatError):
    """Evaluation was requested on zero pairs."""


class UnknownLabel(ZscatError):
    """A dataset label does not name any class of the category tree."""


class DegenerateSplit(ZscatError):
    """A corpus split left one side empty."""


class DataFormatError(ZscatError):
    """Parse error in a data file, carrying the 1-based line number."""

    def __init__(self, line_number: int, message: str):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


class MalformedRecord(DataFormatError):
    pass


class MalformedTreeLine(DataFormatError):
    pass


class DuplicateClass(DataFormatError):
    pass


class EmptyTagList(DataFormatError):
    pass


class UnknownCategoryCode(DataFormatError):
    pass
