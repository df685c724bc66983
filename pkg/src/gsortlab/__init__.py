"""Laboratorio de ordenación generalizada (consultas de aristas, cotas y auditoría)."""
__version__ = "0.2.0"
