"""Feasibility tests for partial search states of three-axis tensors.

``rref_prune`` and ``lask_prune`` are negative: a ``False`` answer proves no
rank-``R`` CPD extends the fixed trailing columns. ``rref_heuristic`` is
positive and may return a CPD outright. ``kth_order_rref_prune`` and
``frequency_prune`` only look at the root state and are off by default.
"""

from __future__ import annotations

from itertools import combinations

import numpy as np

from ._augmented import AugmentedTensor, FlatView
from ._vec import digit_table, ops_for
from .algebra import as_field, invert, matmul_mod, rref
from .errors import UnsupportedD, UnsupportedK
from .tensor import Cpd

__all__ = [
    "PRUNER_NAMES",
    "DEFAULT_PRUNERS",
    "rref_prune",
    "lask_prune",
    "rref_heuristic",
    "kth_order_rref_prune",
    "frequency_prune",
]

PRUNER_NAMES = ("rref", "lask", "heuristic", "rref-k", "frequency")
DEFAULT_PRUNERS = frozenset({"rref", "lask", "heuristic"})


def _require_3d(ndim: int):
    if ndim != 3:
        raise UnsupportedD(f"pruners are implemented for three-axis tensors only (got {ndim})")


def _check_aug(aug: AugmentedTensor, r):
    _require_3d(aug.base.ndim)
    if r is not None and r != aug.r:
        raise ValueError(f"state has r={aug.r}, caller passed r={r}")


def _size(dims) -> int:
    return int(np.prod(dims, dtype=np.int64))


# ---------------------------------------------------------------------------
# cores on flat views (called from the search loop)
# ---------------------------------------------------------------------------


def _rref_feasible(fv: FlatView, R: int) -> bool:
    ops, n0 = fv.ops, fv.n0
    n1, n2 = fv.dims
    t = R - fv.r + 1
    if t < 0:
        return n0 == 0
    if t >= min(n1, n2):
        return True
    N = n1 * n2
    pre = ops.combos(fv.slices, N)
    suf = ops.combos(fv.negterms, N)
    digits = digit_table(n0, fv.p)
    basis = ops.basis()
    for i in range(1, len(pre)):
        key = ops.from_digits(digits[i])
        if basis.contains(key):
            continue
        a = pre[i]
        for s in suf:
            if ops.rank(ops.add(a, s), n1, n2) <= t:
                basis.add(key)
                break
        if basis.rank == n0:
            return True
    return basis.rank == n0


def _lask_feasible(fv: FlatView, R: int) -> bool:
    ops, n0, p = fv.ops, fv.n0, fv.p
    n1, n2 = fv.dims
    left = R - len(fv.negterms)
    if n0 == 0:
        return left >= 0
    bound = left * (p**n0 - p ** (n0 - 1))
    if bound < 0:
        return False
    if p**n0 * min(n1, n2) <= bound:
        return True
    N = n1 * n2
    pre = ops.combos(fv.slices, N)
    suf = ops.combos(fv.negterms, N)
    total = 0
    for a in pre[1:]:
        best = min(n1, n2)
        for s in suf:
            k = ops.rank(ops.add(a, s), n1, n2)
            if k < best:
                best = k
                if k == 0:
                    break
        total += best
        if total > bound:
            return False
    return True


def _rank_factor(M: np.ndarray, p: int):
    """``M = B1 @ B2.T`` with ``rank(M)`` columns."""
    Rm, Q, k = rref(M, p)
    Qi = invert(Q, p) if Q.size else Q
    return Qi[:, :k], Rm[:k].T.copy(), k


def _heuristic(fv: FlatView, R: int):
    ops, n0, p = fv.ops, fv.n0, fv.p
    n1, n2 = fv.dims
    m = len(fv.negterms)
    N = n1 * n2
    pre = ops.combos(fv.slices, N)
    suf = ops.combos(fv.negterms, N)
    ns = len(suf)
    scored = []
    for i, a in enumerate(pre):
        for j, s in enumerate(suf):
            scored.append((ops.rank(ops.add(a, s), n1, n2), i * ns + j))
    scored.sort()
    pre_digits = digit_table(n0, p)
    suf_digits = digit_table(m, p)
    basis = ops.basis()
    rows = []
    budget = R - m
    used = 0
    for k, idx in scored:
        i, j = divmod(idx, ns)
        key = ops.from_digits(pre_digits[i])
        if basis.contains(key):
            continue
        basis.add(key)
        used += k
        if used > budget:
            return None
        rows.append((i, j, k))
        if len(rows) == n0:
            break
    if len(rows) < n0:
        return None
    Q = np.array([pre_digits[i] for i, _, _ in rows], dtype=np.int64).reshape(n0, n0)
    C = np.array([suf_digits[j] for _, j, _ in rows], dtype=np.int64).reshape(n0, m)
    Qi = invert(Q, p)
    cols0, cols1, cols2 = [], [], []
    for row, (i, j, k) in enumerate(rows):
        if k == 0:
            continue
        M = ops.to_array(ops.add(pre[i], suf[j]), (n1, n2))
        B1, B2, _ = _rank_factor(M, p)
        cols0.append(np.repeat(Qi[:, row : row + 1], k, axis=1))
        cols1.append(B1)
        cols2.append(B2)
    Y1, Y2 = fv.Y
    cols0.append(matmul_mod(Qi, C, p) if m else np.zeros((n0, 0), dtype=np.int64))
    cols1.append(Y1)
    cols2.append(Y2)
    return Cpd([np.concatenate(cols0, axis=1), np.concatenate(cols1, axis=1), np.concatenate(cols2, axis=1)])


# ---------------------------------------------------------------------------
# public entry points
# ---------------------------------------------------------------------------


def rref_prune(aug: AugmentedTensor, r: int | None = None, R: int = 0) -> bool:
    """``False`` when no ``n0`` low-rank contractions have independent prefixes."""
    _check_aug(aug, r)
    return _rref_feasible(aug.flat, R)


def lask_prune(aug: AugmentedTensor, r: int | None = None, R: int = 0) -> bool:
    """``False`` when the summed minimal contraction ranks exceed ``(R - (r - n0)) (p^n0 - p^(n0-1))``."""
    _check_aug(aug, r)
    return _lask_feasible(aug.flat, R)


def rref_heuristic(aug: AugmentedTensor, r: int | None = None, R: int = 0):
    """A CPD of ``aug.base`` with at most ``R`` terms, or ``None``.

    Rows of the transform are picked greedily from all ``v`` sorted by the
    rank of ``v x_0 T'`` (ties by base-p index); each picked contraction is
    split by a matrix rank factorization.
    """
    _check_aug(aug, r)
    return _heuristic(aug.flat, R)


def _contraction_rank_table(T: np.ndarray, p: int) -> list[int]:
    ops = ops_for(p)
    n0, n1, n2 = T.shape
    pre = ops.combos([ops.from_array(s) for s in T], n1 * n2)
    return [ops.rank(a, n1, n2) for a in pre]


def frequency_prune(T, R: int, field=2) -> bool:
    """Check ``#{v : rk(v x_0 T) <= R - n0 + k} >= p^k`` for every ``1 <= k <= n0``."""
    p = as_field(field).p
    T = np.asarray(T, dtype=np.int64) % p
    _require_3d(T.ndim)
    n0 = T.shape[0]
    ranks = _contraction_rank_table(T, p)
    for k in range(1, n0 + 1):
        t = R - n0 + k
        if sum(1 for x in ranks if x <= t) < p**k:
            return False
    return True


def _det_mod(M: list[list[int]], p: int) -> int:
    M = [row[:] for row in M]
    n = len(M)
    det = 1
    for c in range(n):
        piv = next((i for i in range(c, n) if M[i][c] % p), None)
        if piv is None:
            return 0
        if piv != c:
            M[c], M[piv] = M[piv], M[c]
            det = -det
        det = det * M[c][c] % p
        inv = pow(M[c][c], p - 2, p)
        for i in range(c + 1, n):
            f = M[i][c] * inv % p
            if f:
                M[i] = [(a - f * b) % p for a, b in zip(M[i], M[c])]
    return det % p


def _plucker(rows: list[tuple], p: int) -> tuple:
    n0 = len(rows[0])
    k = len(rows)
    return tuple(_det_mod([[r[j] for j in J] for r in rows], p) for J in combinations(range(n0), k))


def kth_order_rref_prune(T, k: int, R: int, field=2) -> bool:
    """Wedge-product spanning test at the root state.

    The wedge of ``v_0..v_{k-1}`` is represented by its Plücker coordinates
    (the ``k x k`` minors), which span a space of dimension ``C(n0, k)``.
    A tuple qualifies when the ``k``-slice tensor it selects has rank at most
    ``R - n0 + k``.
    """
    p = as_field(field).p
    T = np.asarray(T, dtype=np.int64) % p
    _require_3d(T.ndim)
    n0 = T.shape[0]
    if not 1 <= k <= n0:
        raise UnsupportedK(f"k must lie in [1, {n0}], got {k}")
    t = R - n0 + k
    if t < 0:
        return False
    from .cpd_search import SearchConfig, search_rank_le

    ops = ops_for(p)
    target = len(list(combinations(range(n0), k)))
    basis = ops.basis()
    vecs = digit_table(n0, p)[1:]
    cfg = SearchConfig(pruners=frozenset(), deterministic=True)
    cache: dict[bytes, bool] = {}
    for idx in combinations(range(len(vecs)), k):
        rows = [vecs[i] for i in idx]
        pl = _plucker(rows, p)
        if not any(pl):
            continue
        key = ops.from_digits(pl)
        if basis.contains(key):
            continue
        sub = np.tensordot(np.array(rows, dtype=np.int64), T, axes=(1, 0)) % p
        h = sub.tobytes()
        ok = cache.get(h)
        if ok is None:
            ok = search_rank_le(sub, t, cfg, field=p).witness is not None
            cache[h] = ok
        if ok:
            basis.add(key)
            if basis.rank == target:
                return True
    return basis.rank == target
