"""Exception types raised across the package."""


class BlockSvdError(Exception):
    """Base class for all package errors."""


class InvalidPartitionError(BlockSvdError, ValueError):
    pass


class ParameterError(BlockSvdError, ValueError):
    pass


class ShapeError(BlockSvdError, ValueError):
    pass


class SizeLimitError(BlockSvdError, ValueError):
    """Raised when a dense conversion would exceed the configured cap."""


class MatrixMarketError(BlockSvdError, ValueError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class NumericError(BlockSvdError, ValueError):
    pass


class ConvergenceError(BlockSvdError, RuntimeError):
    def __init__(self, message, residual):
        self.residual = residual
        super().__init__(f"{message} (residual {residual:.3e})")


class CorruptRecordError(BlockSvdError, ValueError):
    pass


class BlockTaskError(BlockSvdError, RuntimeError):
    def __init__(self, block, cause):
        self.block = block
        super().__init__(f"block {block} failed: {cause}")
