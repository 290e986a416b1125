"""Distributed join algorithm, its framework, and bound checks."""

from .algorithm import JoinAlgorithmError, SolveResult, solve_join
from .framework import FrameworkError, Layout, ReducedQuery, layout, semijoin_reduce
from .stats import (AllocationPlan, Histogram, allocate_machines, build_histogram, choose_lambda,
                    step3_constant, step3_demand)

__all__ = [
    "AllocationPlan", "FrameworkError", "Histogram", "JoinAlgorithmError", "Layout",
    "ReducedQuery", "SolveResult", "allocate_machines", "build_histogram", "choose_lambda",
    "layout", "semijoin_reduce", "solve_join", "step3_constant", "step3_demand",
]
