"""Exception hierarchy shared by all qdl modules."""


class QdlError(Exception):
    """Base class for qdl errors."""


class ParseError(QdlError):
    """Malformed problem file, scalar literal, or CLI input (exit code 64)."""


class DimensionError(QdlError):
    """Operands have incompatible shapes."""


class DomainMismatchError(QdlError):
    """Scalars from different quadratic extensions were mixed."""


class NotRepresentableError(QdlError):
    """A product of scaled matrices left the representable class."""


class HypothesisViolation(QdlError):
    """An operation's mathematical hypothesis does not hold (exit code 2)."""

    def __init__(self, condition: str, detail: str = ""):
        self.condition = condition
        self.detail = detail
        msg = f"hypothesis failed: {condition}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


class InvariantBreach(QdlError):
    """An exact internal check that must never fail did fail (exit code 70)."""
