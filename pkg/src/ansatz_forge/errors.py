from __future__ import annotations

from typing import Sequence


class AnsatzForgeError(Exception):
    """Base class for every error raised by ansatz-forge."""


class SizeError(AnsatzForgeError, ValueError):
    pass


class BindingError(AnsatzForgeError, ValueError):
    pass


class TargetError(AnsatzForgeError, ValueError):
    pass


class OrderingError(AnsatzForgeError, ValueError):
    pass


class UnsupportedError(AnsatzForgeError):
    pass


class UnsupportedGateError(UnsupportedError):
    pass


class ExportError(AnsatzForgeError):
    pass


class HamiltonianError(AnsatzForgeError, ValueError):
    pass


class GraphError(AnsatzForgeError, ValueError):
    pass


class DimensionError(AnsatzForgeError, ValueError):
    pass


class ValidationFailure(AnsatzForgeError, ValueError):
    """User-supplied input (manifest, config, file) failed validation."""

    def __init__(self, message: str, field_path: str | None = None) -> None:
        super().__init__(message)
        self.field_path = field_path


class CatalogLookupError(AnsatzForgeError, KeyError):
    def __init__(self, family: str, valid: Sequence[str]) -> None:
        super().__init__(family)
        self.family = family
        self.valid = list(valid)

    def __str__(self) -> str:
        return f"Unknown ansatz family '{self.family}'. Valid families: {', '.join(self.valid)}"


class NumericalError(AnsatzForgeError):
    """A variational run produced a non-finite value; `trace` holds what was accepted so far."""

    def __init__(self, message: str, trace: Sequence[float] = ()) -> None:
        super().__init__(message)
        self.trace = list(trace)
