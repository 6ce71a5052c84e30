"""Exception hierarchy shared across the toolkit.

Every error raised on a documented failure path derives from
:class:`ProtoshotError`, so callers (and the CLI) can catch one type and
map it to a nonzero exit code.
"""


class ProtoshotError(Exception):
    """Base class for all toolkit errors."""


class FormatError(ProtoshotError):
    """A binary or sidecar file does not conform to its declared format."""


class TruncationError(FormatError):
    """A binary payload is shorter or longer than its header declares."""


class DataError(ProtoshotError):
    """Numeric payload violates a hard invariant (e.g. NaN/Inf values)."""


class ManifestError(ProtoshotError):
    """A manifest line is malformed. Carries the 1-based line number."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class BindError(ProtoshotError):
    """Embedding matrix and manifest cannot be joined into a dataset."""


class EmptyClassError(ProtoshotError):
    """A class has no candidate rows to sample a support set from."""


class DegenerateEmbeddingError(ProtoshotError):
    """A zero-norm vector reached a norm-dependent computation."""


class NotEnoughClassesError(ProtoshotError):
    """An operation requiring at least two classes saw fewer."""


class UndefinedApError(ProtoshotError):
    """Average precision is undefined (no relevant items)."""


class MissingFoldError(ProtoshotError):
    """A cross-validation run was requested on records without folds."""


class ConfigError(ProtoshotError):
    """Run configuration fields are inconsistent with each other."""
