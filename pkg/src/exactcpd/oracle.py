"""Slow, independent baselines for differential testing.

Nothing here touches the search modules: tensors are encoded as base-p
integers and ranks come from breadth-first distances over sums of rank-1
tensors.
"""

from __future__ import annotations

from functools import lru_cache
from itertools import product

import numpy as np

from .algebra import BorderRingSpec, as_field, poly_mul
from .errors import BudgetExceeded, ShapeMismatch

__all__ = ["brute_rank", "enumerate_all_tensors", "verify_cpd", "rank_table"]

BFS_LIMIT = 2**20
DFS_BUDGET = 2**28


def _weights(N: int, p: int) -> np.ndarray:
    return np.array([p ** (N - 1 - i) for i in range(N)], dtype=np.int64)


def _encode(T: np.ndarray, p: int) -> int:
    code = 0
    for x in T.ravel():
        code = code * p + int(x) % p
    return code


@lru_cache(maxsize=None)
def _rank_one_digits(shape: tuple, p: int) -> np.ndarray:
    """Digit rows of every distinct nonzero rank-1 tensor of ``shape``."""
    seen = set()
    rows = []
    nonzero = [[u for u in product(range(p), repeat=n) if any(u)] for n in shape]
    for us in product(*nonzero):
        t = np.array(1, dtype=np.int64)
        for u in us:
            t = np.multiply.outer(t, np.array(u, dtype=np.int64)) % p
        for lam in range(1, p):
            key = tuple(((lam * t) % p).ravel())
            if key not in seen:
                seen.add(key)
                rows.append(key)
    return np.array(rows, dtype=np.int64).reshape(len(rows), int(np.prod(shape)))


@lru_cache(maxsize=8)
def rank_table(shape: tuple, p: int) -> np.ndarray:
    """Rank of every tensor of ``shape`` over GF(p), indexed by base-p code."""
    N = int(np.prod(shape))
    size = p**N
    if size > BFS_LIMIT:
        raise BudgetExceeded(f"{size} tensors is too many for a full table")
    w = _weights(N, p)
    gens = _rank_one_digits(shape, p)
    dist = np.full(size, -1, dtype=np.int64)
    dist[0] = 0
    frontier = np.array([0], dtype=np.int64)
    level = 0
    while frontier.size:
        level += 1
        digits = (frontier[:, None] // w) % p
        nxt = []
        for g in gens:
            codes = ((digits + g) % p) @ w
            fresh = codes[dist[codes] < 0]
            if fresh.size:
                fresh = np.unique(fresh)
                dist[fresh] = level
                nxt.append(fresh)
        frontier = np.unique(np.concatenate(nxt)) if nxt else np.array([], dtype=np.int64)
    return dist


def _dfs_rank_le(digits: np.ndarray, R: int, gens: np.ndarray, p: int, budget: list) -> bool:
    if not digits.any():
        return True
    if R == 0:
        return False
    for g in gens:
        budget[0] -= 1
        if budget[0] < 0:
            raise BudgetExceeded("oracle search budget exhausted")
        if _dfs_rank_le((digits - g) % p, R - 1, gens, p, budget):
            return True
    return False


def brute_rank(T, field=2, budget: int = DFS_BUDGET) -> int:
    """Exact rank over GF(p) by exhaustive rank-1 subtraction."""
    p = as_field(field).p
    T = np.asarray(T, dtype=np.int64) % p
    shape = tuple(T.shape)
    N = int(np.prod(shape))
    if N == 0 or not T.any():
        return 0
    if p**N <= BFS_LIMIT:
        return int(rank_table(shape, p)[_encode(T, p)])
    gens = _rank_one_digits(shape, p)
    left = [budget]
    flat = T.ravel()
    R = 1
    while not _dfs_rank_le(flat, R, gens, p, left):
        R += 1
    return R


def enumerate_all_tensors(shape, field=2, limit: int = 2**24):
    """Every tensor of ``shape`` over GF(p) in lexicographic (row-major) order."""
    p = as_field(field).p
    shape = tuple(int(n) for n in shape)
    N = int(np.prod(shape))
    if p**N > limit:
        raise BudgetExceeded(f"{p}^{N} tensors exceeds the limit {limit}")
    for digits in product(range(p), repeat=N):
        yield np.array(digits, dtype=np.int64).reshape(shape)


def verify_cpd(T, cpd, ring=2) -> bool:
    """Entrywise (coefficientwise over a border ring) check that ``cpd`` evaluates to ``T``."""
    factors = [np.asarray(A, dtype=np.int64) for A in getattr(cpd, "factors", cpd)]
    T = np.asarray(T, dtype=np.int64)
    border = isinstance(ring, BorderRingSpec)
    p = ring.p if border else as_field(ring).p
    shape = T.shape[:-1] if border else T.shape
    if len(factors) != len(shape) or any(A.shape[0] != n for A, n in zip(factors, shape)):
        raise ShapeMismatch(f"factor rows {[A.shape[0] for A in factors]} do not match shape {shape}")
    if len({A.shape[1] for A in factors}) > 1:
        raise ShapeMismatch("factor matrices disagree on column count")
    total = np.zeros(T.shape, dtype=np.int64)
    R = factors[0].shape[1] if factors else 0
    for r in range(R):
        if border:
            term = factors[0][:, r, :]
            for A in factors[1:]:
                term = poly_mul(term[..., None, :], A[:, r, :], p)
        else:
            term = np.array(1, dtype=np.int64)
            for A in factors:
                term = np.multiply.outer(term, A[:, r]) % p
        total = (total + term) % p
    return bool(np.array_equal(total, T % p))
