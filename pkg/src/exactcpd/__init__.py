"""Exact CP decomposition search over GF(p) and GF(p)[x]/(x^H)."""

from .algebra import BorderRingSpec, FieldSpec, as_field, border_reduce, kernel_basis, matrix_rank, rref
from .border_search import border_rank, border_search_rank_le
from .cpd_search import SearchConfig, SearchOutcome, rank_exact, search_rank_le
from .errors import CPDError
from .estimator import BorderCPD, ExactCPD, check_tensor
from .maxrank import maxrank_exhaustive, shape_bounds
from .oracle import brute_rank, verify_cpd
from .tensor import Cpd, cpd_eval, generate, make_concise, mm_tensor

__all__ = [
    "BorderCPD",
    "BorderRingSpec",
    "CPDError",
    "Cpd",
    "ExactCPD",
    "FieldSpec",
    "SearchConfig",
    "SearchOutcome",
    "as_field",
    "border_rank",
    "border_reduce",
    "border_search_rank_le",
    "brute_rank",
    "check_tensor",
    "cpd_eval",
    "generate",
    "kernel_basis",
    "make_concise",
    "matrix_rank",
    "maxrank_exhaustive",
    "mm_tensor",
    "rank_exact",
    "rref",
    "search_rank_le",
    "shape_bounds",
    "verify_cpd",
]
