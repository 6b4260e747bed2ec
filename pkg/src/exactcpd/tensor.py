"""Dense tensors over GF(p) and border rings, CPDs, conciseness and generators.

Tensors are numpy ``int64`` arrays of residues. Over a border ring the array
carries one extra trailing coefficient axis of length ``H``; the tensor's own
shape is then ``arr.shape[:-1]``.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Sequence

import numpy as np

from .algebra import (
    BorderRingSpec,
    FieldSpec,
    as_field,
    invert,
    matmul_mod,
    poly_mul,
    rref,
)
from .errors import CertificateMismatch, ShapeMismatch, UnknownFamily

__all__ = [
    "Cpd",
    "ConcisenessCertificate",
    "contract",
    "cpd_eval",
    "unfold",
    "fold",
    "make_concise",
    "expand_cpd",
    "rank1_decompose",
    "is_concise",
    "mm_tensor",
    "kron",
    "generate",
    "FAMILIES",
]


def _is_border(ring) -> bool:
    return isinstance(ring, BorderRingSpec)


@dataclass(frozen=True)
class Cpd:
    """Factor matrices ``A_d`` of shape ``(n_d, R)`` (``(n_d, R, H)`` over a border ring)."""

    factors: tuple

    def __init__(self, factors):
        object.__setattr__(self, "factors", tuple(np.asarray(A, dtype=np.int64) for A in factors))
        ranks = {A.shape[1] for A in self.factors}
        if len(ranks) > 1:
            raise ShapeMismatch(f"factor matrices disagree on column count: {sorted(ranks)}")

    @property
    def rank(self) -> int:
        return self.factors[0].shape[1] if self.factors else 0

    @property
    def shape(self) -> tuple:
        return tuple(A.shape[0] for A in self.factors)

    def nonzero_columns(self) -> "Cpd":
        """Drop terms whose rank-1 product vanishes (some factor column is zero)."""
        if not self.factors:
            return self
        keep = np.ones(self.rank, dtype=bool)
        for A in self.factors:
            col_nz = A.reshape(A.shape[0], A.shape[1], -1).any(axis=(0, 2))
            keep &= col_nz
        return Cpd([A[:, keep] for A in self.factors])

    def __eq__(self, other):
        if not isinstance(other, Cpd) or len(self.factors) != len(other.factors):
            return NotImplemented
        return all(np.array_equal(a, b) for a, b in zip(self.factors, other.factors))

    def __hash__(self):
        return hash(tuple(A.tobytes() for A in self.factors))


# ---------------------------------------------------------------------------
# basic operations
# ---------------------------------------------------------------------------


def unfold(T, d: int) -> np.ndarray:
    """Rows are the axis-``d`` slices flattened row-major over the other axes."""
    T = np.asarray(T)
    rest = int(np.prod(T.shape[:d] + T.shape[d + 1 :], dtype=np.int64))
    return np.moveaxis(T, d, 0).reshape(T.shape[d], rest)


def fold(U, d: int, shape: Sequence[int]) -> np.ndarray:
    shape = list(shape)
    moved = [shape[d]] + shape[:d] + shape[d + 1 :]
    return np.moveaxis(np.asarray(U).reshape(moved), 0, d)


def contract(M, d: int, T, ring=2) -> np.ndarray:
    """Axis-``d`` contraction ``M x_d T``."""
    M = np.asarray(M, dtype=np.int64)
    T = np.asarray(T, dtype=np.int64)
    border = _is_border(ring)
    D = T.ndim - 1 if border else T.ndim
    if not 0 <= d < D:
        raise ShapeMismatch(f"axis {d} out of range for a {D}-dimensional tensor")
    if M.shape[1] != T.shape[d]:
        raise ShapeMismatch(f"matrix has {M.shape[1]} columns but axis {d} has length {T.shape[d]}")
    p = ring.p if border else as_field(ring).p
    if not border:
        out = matmul_mod(M, unfold(T, d), p)
        shape = list(T.shape)
        shape[d] = M.shape[0]
        return fold(out, d, shape)
    H = ring.H
    shape = list(T.shape[:-1])
    U = np.moveaxis(T, d, 0).reshape(T.shape[d], -1, H)
    out = np.zeros((M.shape[0], U.shape[1], H), dtype=np.int64)
    for a in range(H):
        if not M[..., a].any():
            continue
        for b in range(H - a):
            out[..., a + b] += matmul_mod(M[..., a], U[..., b], p)
    out %= p
    shape[d] = M.shape[0]
    moved = [shape[d]] + shape[:d] + shape[d + 1 :] + [H]
    return np.moveaxis(out.reshape(moved), 0, d)


def cpd_eval(cpd, shape=None, ring=2) -> np.ndarray:
    """Evaluate ``sum_r (A_0)_{:,r} x ... x (A_{D-1})_{:,r}``."""
    factors = cpd.factors if isinstance(cpd, Cpd) else tuple(np.asarray(A, dtype=np.int64) for A in cpd)
    rows = tuple(A.shape[0] for A in factors)
    if shape is not None and tuple(shape) != rows:
        raise ShapeMismatch(f"factor row counts {rows} do not match shape {tuple(shape)}")
    if len({A.shape[1] for A in factors}) > 1:
        raise ShapeMismatch("factor matrices disagree on column count")
    border = _is_border(ring)
    p = ring.p if border else as_field(ring).p
    if not border:
        big = p >= 2**20
        acc = factors[0].astype(object if big else np.int64) % p
        for A in factors[1:]:
            A = A.astype(object if big else np.int64) % p
            acc = (acc[..., None, :] * A) % p
        return np.asarray(acc.sum(axis=-1) % p, dtype=np.int64)
    H = ring.H
    acc = factors[0] % p  # (n0, R, H)
    for A in factors[1:]:
        acc = poly_mul(acc[..., None, :, :], A % p, p)
    return (acc.sum(axis=-2) % p).astype(np.int64)


# ---------------------------------------------------------------------------
# conciseness
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConcisenessCertificate:
    """How a concise tensor sits inside the original one.

    ``Q_inv[d]`` is the inverse of the row transform used on axis ``d`` and
    ``ranks[d]`` the number of retained slices, so the original tensor equals
    ``E_0 x_0 (... (E_{D-1} x_{D-1} Tc))`` with ``E_d = Q_inv[d][:, :ranks[d]]``.
    ``axis_order[i]`` is the original axis that concise axis ``i`` came from.
    """

    original_shape: tuple
    Q_inv: tuple
    ranks: tuple
    axis_order: tuple
    ring: object = dc_field(default=2)

    def embedding(self, d: int) -> np.ndarray:
        Qi = self.Q_inv[d]
        return Qi[:, : self.ranks[d]]

    @property
    def concise_shape(self) -> tuple:
        return tuple(self.ranks[a] for a in self.axis_order)

    def is_identity(self) -> bool:
        return self.axis_order == tuple(range(len(self.ranks))) and all(
            r == n and np.array_equal(Q, np.eye(n, dtype=np.int64))
            for Q, r, n in zip(self.Q_inv, self.ranks, self.original_shape)
        )


def make_concise(T, field=2, sort_axes: bool = False):
    """Row-reduce every unfolding and drop zero slices.

    Returns ``(Tc, cert)``. With ``sort_axes`` the concise axes are permuted so
    their lengths are nonincreasing (stable), which is the orientation the
    search engine works in.
    """
    F = as_field(field)
    p = F.p
    T = np.asarray(T, dtype=np.int64) % p
    shape = T.shape
    cur = T
    Q_invs, ranks = [], []
    for d in range(T.ndim):
        U = unfold(cur, d)
        R, Q, r = rref(U, p)
        Q_invs.append(invert(Q, p) if Q.size else Q)
        ranks.append(r)
        new_shape = list(cur.shape)
        new_shape[d] = r
        cur = fold(R[:r], d, new_shape)
    order = tuple(range(T.ndim))
    if sort_axes:
        order = tuple(sorted(range(T.ndim), key=lambda a: -ranks[a]))
        cur = np.transpose(cur, order)
    cert = ConcisenessCertificate(
        original_shape=tuple(shape), Q_inv=tuple(Q_invs), ranks=tuple(ranks), axis_order=order, ring=F
    )
    return np.ascontiguousarray(cur), cert


def is_concise(T, field=2) -> bool:
    from .algebra import matrix_rank

    T = np.asarray(T)
    return all(matrix_rank(unfold(T, d), field) == T.shape[d] for d in range(T.ndim))


def expand_cpd(cert: ConcisenessCertificate, cpd: Cpd) -> Cpd:
    """Map a CPD of the concise tensor back to a CPD of the original tensor."""
    factors = cpd.factors if isinstance(cpd, Cpd) else tuple(cpd)
    if len(factors) != len(cert.ranks):
        raise CertificateMismatch(f"expected {len(cert.ranks)} factors, got {len(factors)}")
    got = tuple(A.shape[0] for A in factors)
    if got != cert.concise_shape:
        raise CertificateMismatch(f"factor rows {got} do not match concise shape {cert.concise_shape}")
    p = as_field(cert.ring).p
    R = factors[0].shape[1] if factors else 0
    out = [None] * len(factors)
    for i, A in enumerate(factors):
        a = cert.axis_order[i]
        E = cert.embedding(a)
        if E.shape[1] == 0:
            out[a] = np.zeros((cert.original_shape[a], R), dtype=np.int64)
        else:
            out[a] = matmul_mod(E, A, p)
    return Cpd(out)


def rank1_decompose(T, field=2):
    """A rank-1 CPD of ``T``, or ``None`` when ``T`` is zero or has rank > 1."""
    F = as_field(field)
    T = np.asarray(T, dtype=np.int64) % F.p
    if not T.any():
        return None
    Tc, cert = make_concise(T, F)
    if any(r != 1 for r in cert.ranks):
        return None
    s = int(Tc.reshape(-1)[0])
    factors = [np.array([[s if d == 0 else 1]], dtype=np.int64) for d in range(T.ndim)]
    return expand_cpd(cert, Cpd(factors))


# ---------------------------------------------------------------------------
# generators
# ---------------------------------------------------------------------------


def mm_tensor(m: int, k: int, n: int) -> np.ndarray:
    """The ``<m,k,n>`` matrix multiplication tensor with transposed output axis.

    Entry ``((i,j), (j,l), (l,i))`` is 1; pairs are flattened row-major.
    """
    if min(m, k, n) < 1:
        raise ValueError("matrix multiplication dimensions must be positive")
    T = np.zeros((m * k, k * n, n * m), dtype=np.int64)
    for i in range(m):
        for j in range(k):
            for l in range(n):
                T[i * k + j, j * n + l, l * m + i] = 1
    return T


def kron(A, B) -> np.ndarray:
    """Kronecker product of two tensors with the same number of axes."""
    A = np.asarray(A, dtype=np.int64)
    B = np.asarray(B, dtype=np.int64)
    if A.ndim != B.ndim:
        raise ShapeMismatch("kron needs tensors with the same number of axes")
    out = np.multiply.outer(A, B)
    D = A.ndim
    perm = [x for d in range(D) for x in (d, D + d)]
    return out.transpose(perm).reshape([a * b for a, b in zip(A.shape, B.shape)])


def _antidiagonal_slices(num: int, size: int) -> np.ndarray:
    """Slice ``k`` holds ones at ``(i, j)`` with ``i + j == k``."""
    T = np.zeros((num, size, size), dtype=np.int64)
    for k in range(num):
        for i in range(size):
            j = k - i
            if 0 <= j < size:
                T[k, i, j] = 1
    return T


def _wstate():
    return np.array([[[1, 0], [0, 0]], [[0, 1], [1, 0]]], dtype=np.int64)


def _addmod2():
    return np.array([[[0, 1], [1, 0]], [[1, 0], [0, 1]]], dtype=np.int64)


def _polymul(n: int):
    return _antidiagonal_slices(2 * n - 1, n)


def _diagshift(n: int):
    return _antidiagonal_slices(n, n)


def _lm2(k: int):
    # slice 0 is e_00; slice i >= 1 is the anti-diagonal of the leading 2^i x 2^i block
    size = 2**k
    T = np.zeros((k + 1, size, size), dtype=np.int64)
    T[0, 0, 0] = 1
    for i in range(1, k + 1):
        b = 2**i
        for a in range(b):
            T[i, a, b - 1 - a] = 1
    return T


def _lm3(k: int):
    size = 2**k
    T = np.zeros((size, size, size), dtype=np.int64)
    T[: k + 1] = _lm2(k)
    for i in range(k + 1, size):
        T[i, size - 1, size - 1 - (i - k)] = 1
    return T


def _counterexample3():
    return np.array(
        [
            [[1, 1, 0], [0, 1, 0], [0, 0, 0]],
            [[0, 0, 0], [0, 1, 1], [0, 0, 1]],
            [[1, 0, 0], [0, 0, 0], [1, 0, 1]],
        ],
        dtype=np.int64,
    )


def _pruner_t1():
    return np.array(
        [
            [[1, 0, 0], [0, 0, 0], [0, 0, 0]],
            [[1, 1, 0], [0, 0, 0], [0, 0, 0]],
            [[0, 0, 1], [0, 1, 0], [1, 0, 0]],
        ],
        dtype=np.int64,
    )


def _pruner_t2():
    return np.array(
        [
            [[1, 0, 0], [0, 0, 0], [0, 0, 0]],
            [[1, 0, 0], [0, 1, 0], [0, 0, 1]],
            [[0, 0, 1], [0, 0, 1], [1, 1, 0]],
        ],
        dtype=np.int64,
    )


def _wstate_sq():
    return kron(_wstate(), _wstate())


FAMILIES = {
    "wstate": (_wstate, 0),
    "addmod2": (_addmod2, 0),
    "polymul": (_polymul, 1),
    "diagshift": (_diagshift, 1),
    "lm2": (_lm2, 1),
    "lm3": (_lm3, 1),
    "counterexample3": (_counterexample3, 0),
    "t1": (_pruner_t1, 0),
    "t2": (_pruner_t2, 0),
    "wstate_sq": (_wstate_sq, 0),
    "mm": (mm_tensor, 3),
}


def generate(family: str, *params: int) -> np.ndarray:
    """Build a named tensor family.

    ``family`` may also carry its parameters inline, as in ``"mm:2,2,2"`` or
    ``"polymul:3"``.
    """
    if ":" in family:
        family, _, rest = family.partition(":")
        params = tuple(int(x) for x in rest.split(",") if x.strip()) + tuple(params)
    try:
        builder, arity = FAMILIES[family]
    except KeyError:
        raise UnknownFamily(f"unknown tensor family {family!r}; known: {sorted(FAMILIES)}") from None
    if len(params) != arity:
        raise ValueError(f"family {family!r} takes {arity} parameter(s), got {len(params)}")
    return builder(*params)
