from typing import Optional


class ExpressionSyntaxError(ValueError):
    def __init__(self, message: str, text: str, offset: int):
        self.text = text
        self.offset = offset
        super().__init__(f"{message} at offset {offset} in {text!r}")


class UnknownIdentifierError(ExpressionSyntaxError):
    pass


class VariableIndexError(ExpressionSyntaxError):
    pass


class ExpressionDomainError(ValueError):
    def __init__(self, message: str, offset: Optional[int] = None):
        self.offset = offset
        where = f" (source offset {offset})" if offset is not None else ""
        super().__init__(f"{message}{where}")


class DegenerateMetricError(ValueError):
    pass


class NotPositiveDefiniteError(DegenerateMetricError):
    pass


class EnvelopeError(ValueError):
    pass


class NonFiniteStateError(ValueError):
    def __init__(self, step: int):
        self.step = step
        super().__init__(f"Non-finite geodesic state at step {step}")


class NonAbelianGroupError(ValueError):
    pass


class CochainError(ValueError):
    pass


class PartitionOfUnityError(ValueError):
    pass


class FormDegreeError(ValueError):
    pass


class ConfigurationError(ValueError):
    pass
