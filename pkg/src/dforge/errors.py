"""Shared exception hierarchy. The CLI maps the three branches to exit codes."""


class DforgeError(Exception):
    """Base class for all toolkit errors."""


class UsageError(DforgeError):
    """Bad invocation, unknown config key, or inconsistent options (exit code 1)."""


class DataError(DforgeError):
    """Invalid, malformed, or insufficient input data (exit code 2)."""


class NumericsError(DforgeError):
    """Numerical failure during training or evaluation (exit code 3)."""


class EmptyCorpus(DataError):
    """A corpus stream yielded no sentences."""


class InsufficientNgrams(DataError):
    """The n-gram index is missing a bucket for some span length."""


class DegenerateDelete(DataError):
    """A deletion would leave an empty sentence; the caller should skip or resample."""


class InsufficientCorpus(DataError):
    """The corpus ran out before the requested number of examples was produced."""


class AlignmentError(DataError):
    """Predicted and gold sequences do not line up."""


class VocabMismatch(DataError):
    """A checkpoint was produced with a different vocabulary than the one supplied."""


class CorruptCheckpoint(DataError):
    """Checkpoint file is truncated or has a bad magic number."""


class VersionMismatch(DataError):
    """Checkpoint format version differs from the one this build writes."""


class VocabRangeError(DataError):
    """A token id exceeds the embedding table it indexes."""


class LayoutError(DataError):
    """A batch with the wrong input layout was fed to a task head."""


class ShapeError(NumericsError):
    """Tensor shapes are incompatible for the requested operation."""


class MaskedEverything(NumericsError):
    """A loss was requested but every position is masked out."""
