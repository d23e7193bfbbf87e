"""Algebraic time evolution and Otto-cycle analysis for two coupled qubits."""

__version__ = "0.1.0"
