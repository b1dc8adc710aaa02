"""Exception hierarchy."""


class ConfinvError(Exception):
    """Base class for all errors raised by the package."""


class ExpressionSyntaxError(ConfinvError):
    def __init__(self, message: str, position: int, text: str = ""):
        self.position = position
        self.text = text
        super().__init__(f"{message} at position {position}")


class UnknownIdentifierError(ConfinvError):
    def __init__(self, name: str, position: int | None = None):
        self.name = name
        self.position = position
        where = "" if position is None else f" at position {position}"
        super().__init__(f"unknown identifier {name!r}{where}")


class StructuralError(ConfinvError):
    """Malformed complete contraction (bad pairing, sort mismatch)."""


class EvaluationError(ConfinvError):
    """A term cannot be evaluated on the supplied frame."""


class ImmersionError(ConfinvError):
    """Rank-deficient differential or degenerate normal complement."""

    def __init__(self, message: str, node=None):
        self.node = node
        if node is not None:
            message = f"{message} (chart point {list(map(float, node))})"
        super().__init__(message)


class MobiusError(ConfinvError):
    def __init__(self, message: str, node=None):
        self.node = node
        if node is not None:
            message = f"{message} (chart point {list(map(float, node))})"
        super().__init__(message)


class WeightMismatchError(ConfinvError):
    pass


class QuadratureError(ConfinvError):
    pass
