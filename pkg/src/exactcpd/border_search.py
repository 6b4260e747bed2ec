"""Rank-at-most-R CPD search over a border ring GF(p)[x]/(x^H).

Each node makes its tensor concise with border row reduction on every axis,
then subtracts every rank-1 tensor over the reduced shape and recurses with
one fewer term. There are no pruners here.

Border tensors are ``int64`` arrays with a trailing coefficient axis of
length ``H``.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field as dc_field
from itertools import product
from typing import Optional

import numpy as np

from .algebra import BorderRingSpec, FieldSpec, as_field, border_matmul, border_reduce, poly_mul
from .errors import BudgetExceeded, InternalInconsistency, ShapeMismatch
from .tensor import Cpd, cpd_eval

__all__ = [
    "DEFAULT_BUDGET_LOG2",
    "BorderConcise",
    "BorderSearchStats",
    "BorderSearchOutcome",
    "as_border_ring",
    "embed",
    "border_concise",
    "border_search_rank_le",
    "border_rank",
    "brute_rank_via_border",
    "border_cost_log2",
]

DEFAULT_BUDGET_LOG2 = 36


def as_border_ring(ring, H: Optional[int] = None) -> BorderRingSpec:
    if isinstance(ring, BorderRingSpec):
        if H is not None and H != ring.H:
            raise ValueError(f"ring has H={ring.H} but H={H} was requested")
        return ring
    return BorderRingSpec(as_field(ring), 1 if H is None else H)


def embed(T, H: int, power: Optional[int] = None) -> np.ndarray:
    """Place a field tensor at coefficient ``x^power`` (default ``x^(H-1)``)."""
    T = np.asarray(T, dtype=np.int64)
    power = H - 1 if power is None else power
    if not 0 <= power < H:
        raise ValueError(f"power must lie in [0, {H})")
    out = np.zeros(T.shape + (H,), dtype=np.int64)
    out[..., power] = T
    return out


# ---------------------------------------------------------------------------
# conciseness
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BorderConcise:
    """``T_target = E_0 x_0 (... (E_{D-1} x_{D-1} Tc))`` with ``E_d = Q_inv[d][:, :ranks[d]]``."""

    Tc: np.ndarray
    Q_inv: tuple
    ranks: tuple

    def embedding(self, d: int) -> np.ndarray:
        return self.Q_inv[d][:, : self.ranks[d]]


def _unfold(T, d):
    rest = int(np.prod(T.shape[:d] + T.shape[d + 1 : -1], dtype=np.int64))
    return np.moveaxis(T, d, 0).reshape(T.shape[d], rest, T.shape[-1])


def _fold(U, d, shape):
    shape = list(shape)
    moved = [shape[d]] + shape[:d] + shape[d + 1 :]
    return np.moveaxis(U.reshape(moved + [U.shape[-1]]), 0, d)


def border_concise(T, ring) -> BorderConcise:
    """Row-reduce every axis unfolding over the border ring and keep the nonzero rows."""
    ring = as_border_ring(ring)
    p, H = ring.p, ring.H
    cur = np.asarray(T, dtype=np.int64) % p
    if cur.shape[-1] != H:
        raise ShapeMismatch(f"border tensor needs a trailing axis of length {H}, got {cur.shape}")
    Q_invs, ranks = [], []
    for d in range(cur.ndim - 1):
        U = _unfold(cur, d)
        red = border_reduce(U, ring)
        QU = border_matmul(red.Q, U, ring)
        if QU[red.rank :].any():
            raise InternalInconsistency("border reduction left nonzero rows below its rank")
        shape = list(cur.shape[:-1])
        shape[d] = red.rank
        cur = _fold(QU[: red.rank], d, shape)
        Q_invs.append(red.Q_inv)
        ranks.append(red.rank)
    return BorderConcise(np.ascontiguousarray(cur), tuple(Q_invs), tuple(ranks))


# ---------------------------------------------------------------------------
# search
# ---------------------------------------------------------------------------


@dataclass
class BorderSearchStats:
    nodes: dict = dc_field(default_factory=dict)
    terminations: dict = dc_field(default_factory=dict)
    max_children: dict = dc_field(default_factory=dict)
    wall_time: float = 0.0

    def visit(self, depth: int):
        self.nodes[depth] = self.nodes.get(depth, 0) + 1

    def end(self, reason: str):
        self.terminations[reason] = self.terminations.get(reason, 0) + 1


@dataclass
class BorderSearchOutcome:
    witness: Optional[Cpd]
    exhausted: bool
    R: int
    ring: BorderRingSpec
    stats: BorderSearchStats = dc_field(default_factory=BorderSearchStats)

    @property
    def found(self) -> bool:
        return self.witness is not None


def border_cost_log2(shape, R: int, ring) -> float:
    """log2 of ``p^(H sum_{1<=r<=R} sum_d min(r, n_d))``."""
    ring = as_border_ring(ring)
    e = ring.H * sum(min(r, n) for r in range(1, R + 1) for n in shape)
    return e * math.log2(ring.p)


def _outer(us, p):
    acc = us[0]
    for u in us[1:]:
        acc = poly_mul(acc[..., None, :], u, p)
    return acc


def _ring_vectors(n: int, ring: BorderRingSpec) -> list[np.ndarray]:
    """All of ring^n in lexicographic order of the coefficient string."""
    p, H = ring.p, ring.H
    return [np.array(c, dtype=np.int64).reshape(n, H) for c in product(range(p), repeat=n * H)]


class _BorderDFS:
    def __init__(self, ring: BorderRingSpec, shape: tuple):
        self.ring = ring
        self.shape = shape
        self.stats = BorderSearchStats()
        self._vectors: dict[int, list] = {}

    def vectors(self, n: int):
        v = self._vectors.get(n)
        if v is None:
            v = self._vectors[n] = _ring_vectors(n, self.ring)
        return v

    def empty(self, shape):
        return [np.zeros((n, 0, self.ring.H), dtype=np.int64) for n in shape]

    def dfs(self, T: np.ndarray, R: int, depth: int):
        ring, p, H = self.ring, self.ring.p, self.ring.H
        self.stats.visit(depth)
        shape = T.shape[:-1]
        bc = border_concise(T, ring)
        r = bc.ranks
        if any(x > R for x in r):
            self.stats.end("too_long")
            return None
        if any(x == 0 for x in r):
            self.stats.end("zero")
            return self.empty(shape)
        Tc = bc.Tc
        if all(x == 1 for x in r):
            # a 1 x ... x 1 tensor is its own rank-1 term
            self.stats.end("rank1")
            one = np.zeros((1, 1, H), dtype=np.int64)
            one[0, 0, 0] = 1
            us = [Tc.reshape(1, 1, H)] + [one] * (len(r) - 1)
            return [border_matmul(bc.embedding(d), us[d], ring) for d in range(len(r))]
        children = 0
        for us in product(*(self.vectors(n) for n in r)):
            children += 1
            child = (Tc - _outer(list(us), p)) % p
            A = self.dfs(child, R - 1, depth + 1)
            if A is not None:
                self._note_children(depth, children, r)
                return [
                    border_matmul(bc.embedding(d), np.concatenate([A[d], us[d][:, None, :]], axis=1), ring)
                    for d in range(len(r))
                ]
        self._note_children(depth, children, r)
        self.stats.end("exhausted")
        return None

    def _note_children(self, depth, children, r):
        cap = self.ring.p ** (self.ring.H * sum(r))
        if children > cap:
            raise InternalInconsistency(f"node at depth {depth} spawned {children} > {cap} children")
        self.stats.max_children[depth] = max(self.stats.max_children.get(depth, 0), children)


def border_search_rank_le(
    T,
    R: int,
    ring,
    budget_log2: float = DEFAULT_BUDGET_LOG2,
    force: bool = False,
) -> BorderSearchOutcome:
    """Find a border-ring CPD of ``T`` with at most ``R`` terms, or prove none exists."""
    ring = as_border_ring(ring)
    p, H = ring.p, ring.H
    T = np.asarray(T, dtype=np.int64) % p
    if T.ndim < 2 or T.shape[-1] != H:
        raise ShapeMismatch(f"border tensor needs a trailing axis of length {H}, got {T.shape}")
    t0 = time.perf_counter()
    shape = T.shape[:-1]
    if R < 0:
        return BorderSearchOutcome(None, True, R, ring)
    if not force:
        cost = border_cost_log2(border_concise(T, ring).ranks, R, ring)
        if cost > budget_log2:
            raise BudgetExceeded(f"estimated 2^{cost:.1f} steps exceeds the budget 2^{budget_log2}; pass force=True")
    eng = _BorderDFS(ring, shape)
    A = eng.dfs(T, R, 0)
    eng.stats.wall_time = time.perf_counter() - t0
    if A is None:
        return BorderSearchOutcome(None, True, R, ring, eng.stats)
    cpd = Cpd(A)
    if cpd.rank > R or not np.array_equal(cpd_eval(cpd, shape, ring), T):
        raise InternalInconsistency("border witness does not evaluate to the input tensor")
    return BorderSearchOutcome(cpd, False, R, ring, eng.stats)


def border_rank(T, H: int, field=2, budget_log2: float = DEFAULT_BUDGET_LOG2, force: bool = False) -> int:
    """Least ``R`` such that ``x^(H-1) T`` has a rank-``R`` CPD over GF(p)[x]/(x^H)."""
    ring = BorderRingSpec(as_field(field), H)
    X = embed(np.asarray(T, dtype=np.int64) % ring.p, H)
    R = 0
    while True:
        if border_search_rank_le(X, R, ring, budget_log2, force).found:
            return R
        R += 1


def brute_rank_via_border(T, R: int, field=2, force: bool = True) -> bool:
    """Decide ``rk(T) <= R`` over the field by exhaustive rank-1 subtraction."""
    F = field if isinstance(field, FieldSpec) else as_field(field)
    ring = BorderRingSpec(F, 1)
    return border_search_rank_le(embed(T, 1), R, ring, force=force).found
