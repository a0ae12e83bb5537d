"""Exception hierarchy. The CLI maps these onto exit codes."""


class DesmineError(Exception):
    """Base class for all errors raised by this package."""


class DataError(DesmineError, ValueError):
    """Bad input data: malformed files, invalid labels, degenerate datasets."""


class ProtocolError(DataError):
    """Invalid protocol specification."""


class StageError(DataError):
    """A pipeline stage failed; carries the stage name and optional fold/cell."""

    def __init__(self, stage, cause, where=None):
        self.stage = stage
        self.cause = cause
        self.where = where
        loc = f" ({where})" if where else ""
        super().__init__(f"stage '{stage}'{loc} failed: {cause}")
