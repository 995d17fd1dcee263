"""
    errors.py
    ~~~~~~~~~

    Exceptions raised by gsppbe. Each one also derives from the closest
    builtin so callers catching ``ValueError`` keep working.

    :copyright: (c) 2026 by the gsppbe authors.
    :license: see LICENSE for more details.
"""


class GsppError(Exception):
    """Base class of every gsppbe error"""


class DimensionError(GsppError, ValueError):
    """Block, vector or layout sizes do not agree"""


class StructureError(GsppError, ValueError):
    """A Hermitian, symmetric, skew or H = F constraint is violated"""


class WeightError(GsppError, ValueError):
    """Weights are invalid for the case, or an Excluded block is nonzero"""


class NumericalError(GsppError, ArithmeticError):
    """Base class of failures that come from the numbers, not the input shape"""


class RankDeficiencyError(NumericalError):
    """The assembled constraint matrix is not of full row rank"""


class InfeasibleError(NumericalError):
    """Excluded weights leave a nonzero residual row with no admissible column"""


class SingularMatrixError(NumericalError):
    """Elimination met a pivot below the singularity floor"""


class UndefinedBackwardError(NumericalError):
    """The normwise backward error denominator vanishes"""


class MatrixMarketError(GsppError, ValueError):
    """A Matrix Market file could not be parsed"""

    def __init__(self, path, line_number, message):
        self.path = str(path)
        self.line_number = line_number
        self.message = message
        where = f'{self.path}:{line_number}' if line_number else self.path
        super().__init__(f'{where}: {message}')
