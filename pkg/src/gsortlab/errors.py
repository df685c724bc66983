from __future__ import annotations


class LabError(Exception):
    """Raíz de los errores del laboratorio."""


class InvalidArgument(LabError, ValueError):
    pass


class ForbiddenComparison(LabError, ValueError):
    """El par consultado no es una arista del grafo."""


class DegenerateParameter(LabError, ValueError):
    """p = 0 o p = 1 en una rutina que necesita 0 < p < 1."""


class CapacityError(LabError, ValueError):
    """n supera el límite de enumeración exacta."""


class InconsistencyError(LabError, RuntimeError):
    """Una arista dirigida cerraría un ciclo en el conocimiento acumulado."""


class InternalInvariantError(LabError, RuntimeError):
    pass


class AuditFailure(LabError, RuntimeError):
    """Fallo de auditoría; `step` es el índice del paso que falló (o None)."""

    def __init__(self, message: str, step: int | None = None):
        super().__init__(message if step is None else f"paso {step}: {message}")
        self.step = step
