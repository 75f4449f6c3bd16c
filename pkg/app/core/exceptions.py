"""Custom exception classes for the lab."""

from typing import Any, ClassVar

from app.core.context import run_id_var


class GrokLabError(Exception):
    """Base exception for lab errors."""

    default_message: ClassVar[str] = "Unexpected error"
    default_exit_code: ClassVar[int] = 1

    def __init__(
        self,
        message: str | None = None,
        exit_code: int | None = None,
        details: dict[str, Any] | None = None,
    ) -> None:
        self.message = message or self.default_message
        self.exit_code = exit_code or self.default_exit_code
        self.details = details or {}
        super().__init__(self.message)

    def to_payload(self) -> dict[str, Any]:
        """Machine-readable form printed by the CLI on failure."""
        return {
            "error": type(self).__name__,
            "message": self.message,
            "details": self.details,
            "run_id": run_id_var.get() or None,
        }


# Configuration and files


class ConfigError(GrokLabError):
    """Raised when a configuration is invalid."""

    default_message = "Invalid configuration"
    default_exit_code = 2


class ConfigParseError(ConfigError):
    """Raised when a config file cannot be parsed or validated."""

    default_message = "Config file could not be parsed"


class ConfigMismatchError(ConfigError):
    """Raised when two model configs must agree but do not."""

    default_message = "Model configurations do not match"


class FileError(GrokLabError):
    """Raised when a required file is missing or unreadable."""

    default_message = "File not found"
    default_exit_code = 3


# Modular arithmetic


class GroupError(GrokLabError):
    """Base for modular arithmetic errors."""

    default_message = "Invalid modular arithmetic request"


class NotPrimeError(GroupError):
    """Raised when a modulus is not prime."""

    default_message = "Modulus is not prime"


class OperandOutOfRangeError(GroupError):
    """Raised when an operand is not a residue in [0, p)."""

    default_message = "Operand out of range"


class DivisionByZeroError(GroupError):
    """Raised when dividing by the zero residue."""

    default_message = "Division by zero"


class NotAGroupError(GroupError):
    """Raised when group structure is requested from a non-group operation."""

    default_message = "Operation does not form a group"


class NonAssociativeOpError(NotAGroupError):
    """Raised when an n-ary composition is requested for a non-associative op."""

    default_message = "Operation is not associative"


class NoInverseError(GroupError):
    """Raised when an element has no inverse."""

    default_message = "Element has no inverse"


class NotInGroupError(GroupError):
    """Raised when an element lies outside the group carrier."""

    default_message = "Element is not in the group carrier"


# Representations


class GcdViolationError(GroupError):
    """Raised when a twist is not coprime with the cyclic order."""

    default_message = "Twist is not coprime with the group order"


class NonIntegerDecodingError(GrokLabError):
    """Raised when an embedding sum does not decode to an integer."""

    default_message = "Embedding sum does not decode to an integer"


# Tensors and models


class ShapeMismatchError(GrokLabError):
    """Raised when tensor shapes are incompatible."""

    default_message = "Tensor shapes are incompatible"


class IndexOutOfRangeError(GrokLabError):
    """Raised when a token or class id is out of range."""

    default_message = "Index out of range"


class NotScalarError(GrokLabError):
    """Raised when backward is called on a non-scalar tensor."""

    default_message = "Backward requires a scalar loss"


class UnknownPrefixError(GrokLabError):
    """Raised when no parameter name matches a prefix."""

    default_message = "No parameter matches the prefix"


class VocabMismatchError(GrokLabError):
    """Raised when two vocabularies cannot be reconciled."""

    default_message = "Vocabularies are incompatible"


# Datasets


class DatasetError(GrokLabError):
    """Raised when a dataset is invalid."""

    default_message = "Dataset is invalid"


class TooFewPairsError(DatasetError):
    """Raised when more examples are requested than exist."""

    default_message = "Not enough distinct examples"


class NotCommutativeError(DatasetError):
    """Raised when commutative augmentation meets a non-commutative op."""

    default_message = "Operation is not commutative"


class EmptyAfterFilterError(DatasetError):
    """Raised when filtering leaves no training examples."""

    default_message = "No training examples left after filtering"


class SwapClosedError(DatasetError):
    """Raised when a commutative training set already holds every swapped twin."""

    default_message = "Training set is closed under operand swap"


# Analysis


class DegenerateDataError(GrokLabError):
    """Raised when data has no variance to analyse."""

    default_message = "Data has zero variance"


class EmptyGroupError(GrokLabError):
    """Raised when there are no run records to aggregate."""

    default_message = "No run records to aggregate"
