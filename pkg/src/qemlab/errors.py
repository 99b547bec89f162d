"""Exception hierarchy shared by every qemlab module."""


class QemlabError(Exception):
    """Base class for all errors raised by qemlab."""


class DomainError(QemlabError, ValueError):
    """A point or parameter lies outside the domain where a field is defined."""


class NumericError(QemlabError, ArithmeticError):
    """A computation produced a non-finite value."""


class MetricSignatureError(QemlabError, ValueError):
    """The metric matrix at a point is not positive definite."""


class DimensionError(QemlabError, ValueError):
    """The operation is undefined in the manifold dimension at hand."""


class ShapeError(QemlabError, ValueError):
    """Tensor operands have incompatible shapes."""


class ParamError(QemlabError, ValueError):
    """Invalid builder or table parameters."""


class InconsistencyError(QemlabError, RuntimeError):
    """Two independent decision routes disagree (indicates a kernel bug)."""


class NotApplicable(QemlabError):
    """An analysis was requested on input that violates its hypotheses."""
