"""Emitters for NuSMV and Graphviz."""
from .dot import emit_dot, emit_system_dot
from .nusmv import EmitWarning, NusmvProgram, emit_nusmv, smv_valuation

__all__ = ["EmitWarning", "NusmvProgram", "emit_dot", "emit_nusmv", "emit_system_dot", "smv_valuation"]
