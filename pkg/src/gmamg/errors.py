"""Exception types raised across the package."""


class ContractError(ValueError):
    """An operation was called with arguments violating its preconditions."""


class OracleCapError(ContractError):
    """A dense mirror was requested for a matrix above the size cap."""


class PivotBreakdown(ArithmeticError):
    """A (near) zero pivot was met during incomplete factorization."""

    def __init__(self, row, pivot, stage=None):
        self.row = row
        self.pivot = pivot
        self.stage = stage
        where = f"{stage}: " if stage else ""
        super().__init__(f"{where}pivot breakdown at row {row} (|u_ii| = {abs(pivot):.3e})")


class FactorizationFailure(ArithmeticError):
    """Threshold factorization still broke down after every diagonal shift."""

    def __init__(self, message, stage=None):
        self.stage = stage
        super().__init__(f"{stage}: {message}" if stage else message)


class MatrixMarketError(ValueError):
    """Malformed or unsupported Matrix Market input; ``line`` is 1-based."""

    def __init__(self, line, message):
        self.line = line
        super().__init__(f"line {line}: {message}")
