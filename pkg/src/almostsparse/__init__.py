"""Sampling, LP-relaxation and rounding solvers for dense polynomial integer programs."""

from .csp import CnfFormula, CspInstance, arithmetize, count_satisfied, parse_dimacs_cnf
from .errors import ConfigurationError, InputError, SolverError
from .graph import Graph, parse_graph
from .poly import SmoothPolynomial, certify, decompose, evaluate, from_graph_kdense, from_graph_maxcut
from .scheme import (
    RunReport,
    SchemeConfig,
    approximate_kcsp,
    approximate_kdense,
    approximate_maxcut,
    eps_split,
    maximize_smooth,
)

__all__ = [
    "CnfFormula",
    "ConfigurationError",
    "CspInstance",
    "Graph",
    "InputError",
    "RunReport",
    "SchemeConfig",
    "SmoothPolynomial",
    "SolverError",
    "approximate_kcsp",
    "approximate_kdense",
    "approximate_maxcut",
    "arithmetize",
    "certify",
    "count_satisfied",
    "decompose",
    "eps_split",
    "evaluate",
    "from_graph_kdense",
    "from_graph_maxcut",
    "maximize_smooth",
    "parse_dimacs_cnf",
    "parse_graph",
]
