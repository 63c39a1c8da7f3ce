"""
Error types raised across photon_audit
"""

from typing import Iterable, Optional, Sequence


class PhotonAuditError(ValueError):
    """Base class for every domain error"""


class ConfigurationMismatchError(PhotonAuditError):
    """A basis configuration or mode list does not fit the state's mode set"""


class LabelCollisionError(PhotonAuditError):
    """Two mode sets that must be disjoint share a label"""


class MultiPhotonUnsupportedError(PhotonAuditError):
    """A beam splitter would see both of its ports occupied"""


class UndefinedStateError(PhotonAuditError):
    """Operation needs a state with nonzero norm"""


class AncillaNotFreshError(PhotonAuditError):
    """Pointer ancilla is already excited in some term"""


class EmptyPostselectionError(PhotonAuditError):
    """Post-selection or projection kept nothing"""


class CausalityViolationError(PhotonAuditError):
    """A step reads a record that does not exist yet"""


class ConditioningOnNullError(PhotonAuditError):
    """Conditioning event has probability zero"""


class AuditPreconditionError(PhotonAuditError):
    """The inputs of an audit do not satisfy its precondition"""


class SettingsError(PhotonAuditError):
    """Invalid configuration value"""


class ScenarioSyntaxError(PhotonAuditError):
    """Scenario text does not match the grammar"""

    def __init__(self, message: str, line: int, column: int, expected: Sequence[str] = ()):
        self.line = line
        self.column = column
        self.expected = tuple(expected)
        self.detail = message
        text = f"{line}:{column}: {message}"
        if self.expected:
            text += f" (expected {', '.join(self.expected)})"
        super().__init__(text)


class ScenarioSemanticError(PhotonAuditError):
    """Scenario parses but describes an invalid protocol"""

    def __init__(self, message: str, lines: Iterable[int] = ()):
        self.lines = tuple(lines)
        self.detail = message
        where = ", ".join(f"line {n}" for n in self.lines)
        super().__init__(f"{message} ({where})" if where else message)


class UnknownScenarioError(PhotonAuditError):
    """Requested built-in scenario does not exist"""

    def __init__(self, name: str, available: Sequence[str], hint: Optional[str] = None):
        self.name = name
        self.available = tuple(available)
        message = f"unknown scenario '{name}'; available: {', '.join(self.available)}"
        if hint:
            message += f" ({hint})"
        super().__init__(message)
