"""Penalized least squares estimation of Gaussian DAG models."""
from .linalg import Permutation, sample_gaussian, sigma_of
from .penalties import PenaltySpec
from .equivalence import class_summary, dag_for_permutation, min_trace_permutation
from .search import global_minimizer_dp, restricted_minimizer

__all__ = [
    "Permutation",
    "PenaltySpec",
    "class_summary",
    "dag_for_permutation",
    "global_minimizer_dp",
    "min_trace_permutation",
    "restricted_minimizer",
    "sample_gaussian",
    "sigma_of",
]
