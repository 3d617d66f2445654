"""Exact Lie point symmetry analysis of nu*u_xx = u_t + g(u)*u_x.

Modules: ``symcore`` (expressions), ``prolong`` (vector fields and their
second prolongation), ``deteq`` (determining equations, verification,
discovery), ``liealg`` (brackets, structure constants, identification),
``catalog`` (classification fixtures and driver), ``numlab`` (numerical
cross-checks) and ``cli``.
"""
from .catalog import CATALOG, run_classification
from .deteq import (
    PDESpec,
    discover_symmetries,
    equivalent_systems,
    extract_determining,
    reference_system,
    verify_symmetry,
)
from .liealg import AlgebraLabel, StructureConstants, bracket, change_of_basis, identify, structure_constants
from .prolong import VectorField, parse_vector_field, prolong2
from .symcore import parse_expr, to_text

__version__ = "0.1.0"

__all__ = [
    "CATALOG", "run_classification", "PDESpec", "discover_symmetries", "equivalent_systems",
    "extract_determining", "reference_system", "verify_symmetry", "AlgebraLabel", "StructureConstants",
    "bracket", "change_of_basis", "identify", "structure_constants", "VectorField",
    "parse_vector_field", "prolong2", "parse_expr", "to_text",
]
