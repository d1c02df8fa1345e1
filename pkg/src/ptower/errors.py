"""Exception hierarchy shared by every ptower module."""


class PTowerError(Exception):
    """Base class for all library errors."""


class ParameterMismatch(PTowerError):
    """Operands live over different (p, N) rings; we never coerce silently."""


class NonUnitError(PTowerError):
    """Inversion requested for an element divisible by p."""


class PrecisionExhausted(PTowerError):
    """The answer is not determined at the working precision."""


class InfiniteQuotientError(PTowerError):
    """A quotient that should be finite is zero to full working precision."""


class WellDefinednessViolation(PTowerError):
    """An action matrix does not respect the cyclic-factor moduli."""


class NotAutomorphism(PTowerError):
    """The generator action is not surjective on the module."""


class OrderNotPPower(PTowerError):
    """sigma^(p^k) never reaches the identity within the allowed bound."""


class ValidationError(PTowerError):
    """A structural invariant of an instance failed to hold."""


class SchemaError(ValidationError):
    """An instance file does not match its JSON schema."""


class LevelOutOfRange(PTowerError):
    """A layer index beyond the tower length was requested."""


class TheoremViolation(PTowerError):
    """A proved implication failed on concrete data: implementation bug."""


class NoStableFit(PTowerError):
    """No suffix of the exponent sequence admits an exact growth fit."""


class InvalidGroupTable(PTowerError):
    """A multiplication table fails the group axioms."""


class ActionNotHomomorphism(PTowerError):
    """Declared group actions are not compatible homomorphisms."""


class BudgetExceeded(PTowerError):
    """An enumeration grew past the configured element budget."""


class GenerationFailed(PTowerError):
    """Random instance sampling exhausted its retry budget."""


class RamHypNotAsserted(PTowerError):
    """Inference refused: the ramification hypothesis was not asserted."""


class MissingLevels(PTowerError):
    """Inference needs observations at levels 0 and 1."""
