"""
lambda-forge

Exact symbolic lambda-bracket engine: normal ordering in vertex algebras
freely generated by non-linear Lie conformal algebras, Zhu algebras,
W-algebras by quantum Hamiltonian reduction and Poisson vertex algebras,
with a command-line interface and an MCP server.
"""

__version__ = "0.1.0"
__author__ = "lambda-forge developers"
__license__ = "MIT"

from .server import main

__all__ = ["main"]
