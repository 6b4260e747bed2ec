"""Maximum-rank bounds and the exhaustive max-rank search over GF(2).

The search walks one representative per orbit of the action
``T_i -> P T_i Q^T`` (on axes 1 and 2) among tensors whose slice 0 is
``[[I_r, 0], [0, 0]]``. Slices are handled one at a time: slice ``i`` is kept
only if it is the lexicographic minimum of its orbit under the pairs that
fix all earlier slices, and those pairs are then narrowed to the ones that
also fix slice ``i``.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field as dc_field
from functools import lru_cache
from itertools import permutations, product
from typing import Iterator, Optional

import numpy as np

from .algebra import as_field
from .cpd_search import SearchConfig, search_rank_le
from .errors import InvalidShape, TooLarge
from .tensor import Cpd

__all__ = [
    "ShapeBounds",
    "MaxRankReport",
    "bound_counting",
    "bound_trivial_upper",
    "bound_howell_upper",
    "bound_nn2",
    "bound_skinny_lower",
    "bound_improved_nnn",
    "shape_bounds",
    "stabilizer_of_identity_block",
    "canonical_stream",
    "count_canonical",
    "maxrank_exhaustive",
    "char_matrix",
    "STREAM_LIMIT",
]

# ---------------------------------------------------------------------------
# bounds
# ---------------------------------------------------------------------------


def bound_counting(shape) -> int:
    shape = [int(n) for n in shape]
    s = sum(shape)
    if s == 0:
        return 0
    return -(-math.prod(shape) // s)


def bound_trivial_upper(shape) -> int:
    shape = [int(n) for n in shape]
    if len(shape) == 1:
        return 1 if shape[0] else 0
    return min(math.prod(shape[:d] + shape[d + 1 :]) for d in range(len(shape)))


@lru_cache(maxsize=None)
def _howell(shape: tuple) -> int:
    if min(shape) == 0:
        return 0
    best = bound_trivial_upper(shape)
    for keep in range(3):
        rest = tuple(n - 1 if d != keep else n for d, n in enumerate(shape))
        best = min(best, _howell(tuple(sorted(rest))) + shape[keep])
    return best


def bound_howell_upper(shape) -> int:
    """Memoized minimum over repeated Howell reductions and the trivial bound."""
    shape = tuple(int(n) for n in shape)
    if len(shape) != 3:
        raise InvalidShape("the Howell bound is for three-axis shapes")
    return _howell(tuple(sorted(shape)))


def _is_gf2(field) -> bool:
    return field is not None and as_field(field).p == 2


def bound_nn2(m: int, n: int, field=2) -> int:
    """Exact ``R(m, n, 2)`` for ``m >= n >= 2``.

    ``field=None`` gives the larger of the two formulas, which bounds every
    finite field from above.
    """
    if not (m >= n >= 2):
        raise InvalidShape(f"need m >= n >= 2, got m={m}, n={n}")
    if field is None:
        return max(bound_nn2(m, n, 2), bound_nn2(m, n, 3))
    if _is_gf2(field):
        if m <= 2 * n - 2:
            return n + -(-m // 2)
        if m == 2 * n - 1:
            return 2 * n - 1
        return 2 * n
    if m <= 2 * n - 1:
        return n + m // 2
    return 2 * n


def bound_skinny_lower(m: int, n: int, k: int) -> int:
    """Lower bound on ``R(m, n, mn - k)`` from padding an ``r x s x (rs - k)`` block."""
    if not 0 <= k <= m * n:
        raise InvalidShape(f"need 0 <= k <= mn, got k={k}")
    best = 0
    for r in range(1, m + 1):
        for s in range(1, n + 1):
            if r * s >= k:
                best = max(best, bound_counting((r, s, r * s - k)) + m * n - r * s)
    return best


def _slabbed(m: int, n: int, p: int) -> int:
    """Upper bound on ``R(m, n, p)`` from splitting axis 2 into ``m x n x 2`` slabs."""
    if n <= 1 or p == 0:
        return min(n, p) if m else 0
    a, b = max(m, n), min(m, n)
    return (p // 2) * bound_nn2(a, b, None) + (p % 2) * b


def bound_improved_nnn(n: int) -> int:
    """``min_k R(n, n-k, n-k) + kn`` over ``k <= n/2`` with slabbed ``n x 2`` pieces."""
    if n < 1:
        raise InvalidShape("n must be positive")
    return min(_slabbed(n, n - k, n - k) + k * n for k in range(0, n // 2 + 1))


@dataclass
class ShapeBounds:
    shape: tuple
    lower: dict = dc_field(default_factory=dict)
    upper: dict = dc_field(default_factory=dict)

    @property
    def best_lower(self) -> tuple:
        tag = max(self.lower, key=lambda k: self.lower[k])
        return self.lower[tag], tag

    @property
    def best_upper(self) -> tuple:
        tag = min(self.upper, key=lambda k: self.upper[k])
        return self.upper[tag], tag


def shape_bounds(shape, field=2) -> ShapeBounds:
    """All applicable bounds for a three-axis shape."""
    shape = tuple(int(n) for n in shape)
    if len(shape) != 3 or min(shape) < 1:
        raise InvalidShape(f"bounds need a three-axis shape with positive sides, got {shape}")
    out = ShapeBounds(shape)
    out.lower["counting"] = bound_counting(shape)
    out.upper["trivial"] = bound_trivial_upper(shape)
    out.upper["howell"] = bound_howell_upper(shape)
    for a, b, c in set(permutations(shape)):
        k = a * b - c
        if 0 <= k:
            out.lower["skinny"] = max(out.lower.get("skinny", 0), bound_skinny_lower(a, b, k))
    s = sorted(shape, reverse=True)
    if s[2] == 2 and s[1] >= 2:
        v = bound_nn2(s[0], s[1], field)
        out.lower["nn2"] = out.upper["nn2"] = v
    elif s[2] == 1:
        out.lower["matrix"] = out.upper["matrix"] = s[1]
    if shape[0] == shape[1] == shape[2]:
        out.upper["improved-nnn"] = bound_improved_nnn(shape[0])
    if out.best_lower[0] > out.best_upper[0]:
        raise AssertionError(f"inconsistent bounds for {shape}: {out.lower} vs {out.upper}")
    return out


# ---------------------------------------------------------------------------
# canonical stream
# ---------------------------------------------------------------------------

STREAM_LIMIT = 2**22


def _gl(n: int) -> np.ndarray:
    """All invertible ``n x n`` matrices over GF(2)."""
    if n == 0:
        return np.zeros((1, 0, 0), dtype=np.int64)
    from ._vec import gf2_rank

    mats = []
    for bits in product((0, 1), repeat=n * n):
        M = np.array(bits, dtype=np.int64).reshape(n, n)
        rows = [int("".join(map(str, row)), 2) for row in M]
        if gf2_rank(rows) == n:
            mats.append(M)
    return np.array(mats, dtype=np.int64)


def _all_mats(rows: int, cols: int) -> np.ndarray:
    if rows * cols == 0:
        return np.zeros((1, rows, cols), dtype=np.int64)
    return np.array(list(product((0, 1), repeat=rows * cols)), dtype=np.int64).reshape(-1, rows, cols)


def _gf2_inv_batch(S: np.ndarray) -> np.ndarray:
    """Inverse of each matrix in a stack over GF(2) by Gauss-Jordan on the batch."""
    k, n, _ = S.shape
    A = np.concatenate([S % 2, np.broadcast_to(np.eye(n, dtype=np.int64), (k, n, n))], axis=2).copy()
    idx = np.arange(k)
    for c in range(n):
        piv = np.argmax(A[:, c:, c], axis=1) + c
        A[idx, [c] * k], A[idx, piv] = A[idx, piv].copy(), A[idx, [c] * k].copy()
        col = A[:, :, c].copy()
        col[:, c] = 0
        A ^= col[:, :, None] * A[:, c : c + 1, :]
    return A[:, :, n:]


def stabilizer_of_identity_block(n: int, p: int, r: int, limit: int = 10**6):
    """All ``(P, Q^T)`` over GF(2) with ``P T0 Q^T = T0`` for ``T0 = [[I_r, 0], [0, 0]]``.

    They are ``P = [[A, B], [0, D]]`` and ``Q^T = S^{-1}`` with
    ``S = [[A, 0], [C, E]]``, for invertible ``A, D, E`` and arbitrary ``B, C``.
    """
    GA, GD, GE = _gl(r), _gl(n - r), _gl(p - r)
    Bs, Cs = _all_mats(r, n - r), _all_mats(p - r, r)
    size = len(GA) * len(GD) * len(GE) * len(Bs) * len(Cs)
    if size > limit:
        raise TooLarge(f"stabilizer has {size} elements, above the limit {limit}")
    Ps, Ss = [], []
    for A in GA:
        for D in GD:
            for B in Bs:
                P = np.zeros((n, n), dtype=np.int64)
                P[:r, :r], P[:r, r:], P[r:, r:] = A, B, D
                Ps.append(P)
    for A in GA:
        for E in GE:
            for C in Cs:
                S = np.zeros((p, p), dtype=np.int64)
                S[:r, :r], S[r:, :r], S[r:, r:] = A, C, E
                Ss.append(S)
    # pair up P and S sharing the same A block
    per_a_p = len(GD) * len(Bs)
    per_a_s = len(GE) * len(Cs)
    Ps = np.array(Ps).reshape(len(GA), per_a_p, n, n)
    Ss = np.array(Ss).reshape(len(GA), per_a_s, p, p)
    P_all = np.broadcast_to(Ps[:, :, None], (len(GA), per_a_p, per_a_s, n, n)).reshape(-1, n, n)
    S_all = np.broadcast_to(Ss[:, None, :], (len(GA), per_a_p, per_a_s, p, p)).reshape(-1, p, p)
    Qt = _gf2_inv_batch(S_all) if p else S_all
    return np.ascontiguousarray(P_all), np.ascontiguousarray(Qt)


def _weights(n: int, p: int) -> np.ndarray:
    return (1 << np.arange(n * p - 1, -1, -1, dtype=np.int64)).reshape(n, p)


def _decode(code: int, n: int, p: int) -> np.ndarray:
    bits = [(code >> (n * p - 1 - i)) & 1 for i in range(n * p)]
    return np.array(bits, dtype=np.int64).reshape(n, p)


def _orbit_codes(M: np.ndarray, P: np.ndarray, Qt: np.ndarray, w: np.ndarray) -> np.ndarray:
    img = np.matmul(np.matmul(P, M), Qt) & 1
    return np.einsum("kij,ij->k", img, w)


def canonical_stream(shape, r0: int = 0, field=2, limit: int = STREAM_LIMIT) -> Iterator[np.ndarray]:
    """One tensor per orbit, slice 0 fixed to an identity block of rank ``>= r0``."""
    if as_field(field).p != 2:
        raise ValueError("the canonical stream is implemented over GF(2) only")
    m, n, p = (int(x) for x in shape)
    if min(m, n, p) < 1:
        raise InvalidShape(f"shape must be positive, got {shape}")
    if 2 ** (n * p) > limit:
        raise TooLarge(f"slices of size {n}x{p} are too many to enumerate")
    w = _weights(n, p)
    total = 1 << (n * p)
    for r in range(max(r0, 0), min(n, p) + 1):
        T0 = np.zeros((n, p), dtype=np.int64)
        T0[np.arange(r), np.arange(r)] = 1
        P, Qt = stabilizer_of_identity_block(n, p, r)
        yield from _extend([T0], m, P, Qt, w, n, p, total)


def _extend(prefix, m, P, Qt, w, n, p, total):
    if len(prefix) == m:
        yield np.array(prefix, dtype=np.int64)
        return
    seen = np.zeros(total, dtype=bool)
    for code in range(total):
        if seen[code]:
            continue
        M = _decode(code, n, p)
        codes = _orbit_codes(M, P, Qt, w)
        seen[codes] = True
        keep = codes == code
        yield from _extend(prefix + [M], m, P[keep], Qt[keep], w, n, p, total)


def count_canonical(shape, r0: int = 0, field=2) -> int:
    return sum(1 for _ in canonical_stream(shape, r0, field))


# ---------------------------------------------------------------------------
# exhaustive search
# ---------------------------------------------------------------------------


def char_matrix(T, names: str = "v") -> list[list[str]]:
    """Cells of ``v x_0 T`` as strings such as ``v0+2*v1``."""
    T = np.asarray(T, dtype=np.int64)
    m, n, p = T.shape
    out = []
    for j in range(n):
        row = []
        for k in range(p):
            terms = []
            for i in range(m):
                c = int(T[i, j, k])
                if c:
                    terms.append(f"{names}{i}" if c == 1 else f"{c}*{names}{i}")
            row.append("+".join(terms) if terms else "0")
        out.append(row)
    return out


@dataclass
class MaxRankReport:
    shape: tuple
    field: int
    R0: int
    r0: int
    tensors_searched: int
    max_rank: int
    witness: Optional[np.ndarray]
    witness_cpd: Optional[Cpd] = None
    wall_time: float = 0.0
    rank_histogram: dict = dc_field(default_factory=dict)

    def table_row(self) -> str:
        m, n, p = self.shape
        cm = "" if self.witness is None else "; ".join(", ".join(r) for r in char_matrix(self.witness))
        return (
            f"{m:>2} {n:>2} {p:>2} | R0={self.R0:<3} r0={self.r0:<2} | "
            f"tensors={self.tensors_searched:<8} time={self.wall_time:8.2f}s | "
            f"max rank={self.max_rank} | witness: {cm}"
        )

    def to_dict(self) -> dict:
        return {
            "shape": list(self.shape),
            "field": self.field,
            "R0": self.R0,
            "r0": self.r0,
            "tensors_searched": self.tensors_searched,
            "max_rank": self.max_rank,
            "witness": None if self.witness is None else self.witness.tolist(),
            "witness_char_matrix": None if self.witness is None else char_matrix(self.witness),
            "witness_cpd": None if self.witness_cpd is None else [A.tolist() for A in self.witness_cpd.factors],
            "wall_time": self.wall_time,
            "rank_histogram": {str(k): v for k, v in sorted(self.rank_histogram.items())},
        }


def _classify(args):
    T, cur, cfg = args
    out = search_rank_le(T, cur, cfg)
    if out.found:
        return None
    R = cur + 1
    while True:
        out = search_rank_le(T, R, cfg)
        if out.found:
            return R, out.witness
        R += 1


def maxrank_exhaustive(
    shape,
    field=2,
    R0: int = 0,
    cfg: SearchConfig | None = None,
    r0: Optional[int] = None,
    progress=None,
) -> MaxRankReport:
    """Largest rank over the canonical stream, given a known lower bound ``R0``.

    Each tensor is first checked against the current maximum; only tensors
    above it get their exact rank. When nothing beats ``R0`` the first stream
    tensor of rank exactly ``R0`` becomes the witness.
    """
    t0 = time.perf_counter()
    cfg = cfg or SearchConfig()
    m, n, p = (int(x) for x in shape)
    r0 = R0 // m + 1 if r0 is None else r0
    best, witness, wcpd = R0, None, None
    count = 0
    for T in canonical_stream((m, n, p), r0, field):
        count += 1
        got = _classify((T, best, cfg))
        if got is not None:
            best, cpd = got
            witness, wcpd = T, cpd
        if progress is not None and count % 1000 == 0:
            progress(count, best)
    if witness is None and R0 > 0:
        for T in canonical_stream((m, n, p), r0, field):
            if not search_rank_le(T, R0 - 1, cfg).found:
                out = search_rank_le(T, R0, cfg)
                if out.found:
                    witness, wcpd = T, out.witness
                    break
    return MaxRankReport(
        shape=(m, n, p),
        field=as_field(field).p,
        R0=R0,
        r0=r0,
        tensors_searched=count,
        max_rank=best,
        witness=witness,
        witness_cpd=wcpd,
        wall_time=time.perf_counter() - t0,
    )
