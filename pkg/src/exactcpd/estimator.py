"""Scikit-learn style wrappers around the exact searches.

``fit`` finds a minimum-rank CPD; ``transform`` returns the factor matrices.
There is no incremental fitting: every ``fit`` is a full exact search, so
``partial_fit`` is deliberately absent.
"""

from __future__ import annotations

from typing import Optional

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .algebra import BorderRingSpec, as_field
from .border_search import DEFAULT_BUDGET_LOG2, border_search_rank_le, embed
from .cpd_search import SearchConfig, rank_exact, search_rank_le
from .errors import InvalidShape
from .pruners import DEFAULT_PRUNERS
from .tensor import cpd_eval

__all__ = ["ExactCPD", "BorderCPD", "check_tensor"]


def check_tensor(T, field=2, min_ndim: int = 2, border_H: Optional[int] = None) -> np.ndarray:
    """Integer array reduced mod p, rejecting non-integral or badly shaped input."""
    p = as_field(field).p
    A = np.asarray(T)
    if A.dtype.kind == "f":
        if not np.all(np.isfinite(A)) or not np.array_equal(A, np.round(A)):
            raise ValueError("tensor entries must be integers")
    elif A.dtype.kind not in "iub":
        raise ValueError(f"tensor entries must be integers, got dtype {A.dtype}")
    A = A.astype(np.int64) % p
    ndim = A.ndim - (border_H is not None)
    if ndim < min_ndim or 0 in A.shape:
        raise InvalidShape(f"need at least {min_ndim} nonempty axes, got shape {A.shape}")
    if border_H is not None and A.shape[-1] != border_H:
        raise InvalidShape(f"border tensor needs a trailing axis of length {border_H}")
    return A


class ExactCPD(BaseEstimator):
    """Minimum-rank CPD over GF(p).

    With ``rank`` set, fit only decides whether a CPD of at most that many
    terms exists (``found_`` is False when none does).
    """

    def __init__(self, field: int = 2, rank: Optional[int] = None, pruners=tuple(sorted(DEFAULT_PRUNERS)),
                 branch: str = "auto", threads: int = 1):
        self.field = field
        self.rank = rank
        self.pruners = pruners
        self.branch = branch
        self.threads = threads

    def _config(self) -> SearchConfig:
        return SearchConfig(pruners=frozenset(self.pruners), branch=self.branch,
                            deterministic=self.threads == 1, threads=self.threads)

    def fit(self, X, y=None):
        T = check_tensor(X, self.field)
        self.shape_ = T.shape
        if self.rank is None:
            self.rank_, self.cpd_ = rank_exact(T, self._config(), self.field)
            self.found_ = True
        else:
            out = search_rank_le(T, self.rank, self._config(), self.field)
            self.found_ = out.found
            self.cpd_ = out.witness
            self.rank_ = None if out.witness is None else out.witness.rank
        return self

    def transform(self, X=None):
        check_is_fitted(self, "cpd_")
        return None if self.cpd_ is None else [A.copy() for A in self.cpd_.factors]

    def fit_transform(self, X, y=None):
        return self.fit(X).transform()

    def reconstruct(self) -> np.ndarray:
        check_is_fitted(self, "cpd_")
        return cpd_eval(self.cpd_, self.shape_, self.field)


class BorderCPD(BaseEstimator):
    """Minimum-rank CPD of ``x^(H-1) T`` over GF(p)[x]/(x^H)."""

    def __init__(self, H: int = 2, field: int = 2, rank: Optional[int] = None,
                 budget_log2: float = DEFAULT_BUDGET_LOG2, force: bool = False):
        self.H = H
        self.field = field
        self.rank = rank
        self.budget_log2 = budget_log2
        self.force = force

    def fit(self, X, y=None):
        if self.H < 1:
            raise ValueError("H must be at least 1")
        T = check_tensor(X, self.field)
        ring = BorderRingSpec(as_field(self.field), self.H)
        Xb = embed(T, self.H)
        self.shape_ = T.shape

        def attempt(R):
            return border_search_rank_le(Xb, R, ring, self.budget_log2, self.force)

        if self.rank is None:
            R = 0
            while not (out := attempt(R)).found:
                R += 1
        else:
            out = attempt(self.rank)
        self.found_ = out.found
        self.cpd_ = out.witness
        self.rank_ = None if out.witness is None else out.witness.rank
        self.ring_ = ring
        return self

    def transform(self, X=None):
        check_is_fitted(self, "cpd_")
        return None if self.cpd_ is None else [A.copy() for A in self.cpd_.factors]

    def fit_transform(self, X, y=None):
        return self.fit(X).transform()
