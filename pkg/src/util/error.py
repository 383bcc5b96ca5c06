class TTGPError(Exception):
    reason: str

    def __init__(self, reason: str, *args):
        self.reason = reason
        super().__init__(reason, *args)


class InvalidArgumentError(TTGPError):
    pass


class ShapeMismatchError(InvalidArgumentError):
    pass


class DecompositionError(TTGPError):
    dimension: int | None

    def __init__(self, reason: str, dimension: int | None = None, *args):
        self.dimension = dimension
        super().__init__(reason, *args)


class ResourceLimitError(TTGPError):
    pass


class ConfigurationError(TTGPError):
    pass


class NumericError(TTGPError):
    pass


class DataLoadError(TTGPError):
    path: str | None
    line: int | None

    def __init__(self, reason: str, path: str | None = None, line: int | None = None, *args):
        self.path = path
        self.line = line
        super().__init__(reason, *args)


class CheckpointError(TTGPError):
    pass


class CheckpointVersionError(CheckpointError):
    pass


class CheckpointTruncatedError(CheckpointError):
    pass


class CheckpointChecksumError(CheckpointError):
    pass
