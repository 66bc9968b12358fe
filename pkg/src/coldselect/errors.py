"""Exception hierarchy for the selection engine.

ValidationError subclasses map to CLI exit code 2, ComputationError to 3.
"""


class EngineError(Exception):
    """Base class for all engine errors."""


class ValidationError(EngineError):
    """Bad inputs: files, shapes, parameters."""


class ComputationError(EngineError):
    """Numerically degenerate state reached during computation."""


class MissingFile(ValidationError):
    pass


class ManifestInvalid(ValidationError):
    pass


class SizeMismatch(ValidationError):
    pass


class ProbRowInvalid(ValidationError):
    def __init__(self, row: int, reason: str):
        self.row = row
        super().__init__(f"row {row}: {reason}")


class LabelsInvalid(ValidationError):
    pass


class ParamsInvalid(ValidationError):
    pass


class DuplicateIndex(ValidationError):
    pass


class BudgetExceedsPool(ValidationError):
    pass


class LabeledPoolInvalid(ValidationError):
    pass


class MissingLabels(ValidationError):
    pass


class IoFailure(EngineError):
    pass


class DegenerateRow(ComputationError):
    def __init__(self, row: int):
        self.row = row
        super().__init__(f"row {row}: calibration denominator underflowed to zero")


class ZeroVector(ComputationError):
    pass
