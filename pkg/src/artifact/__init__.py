"""Finite-cutoff Grosse-Wulkenhaar matrix model: direct and intermediate-field
evaluation, perturbation series, multi-scale slicing, slice-testing amplitudes,
forest combinatorics and Borel-Padé resummation."""

from .model_core import Coupling, Cutoff, DomainError, RangeError

__all__ = ["Coupling", "Cutoff", "DomainError", "RangeError"]
__version__ = "0.1.0"
