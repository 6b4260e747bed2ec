"""Exact arithmetic over GF(p) and the truncated polynomial rings GF(p)[x]/(x^H).

Matrices are numpy ``int64`` arrays. A field matrix is 2-D; a border-ring
matrix carries a trailing coefficient axis of length ``H`` (coefficient of
``x^h`` at index ``h``), so an ``m x n`` border matrix has shape ``(m, n, H)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .errors import NotInvertible, Singular, ZeroInverse

__all__ = [
    "FieldSpec",
    "BorderRingSpec",
    "Ring",
    "is_prime",
    "as_field",
    "field_inverse",
    "border_mul",
    "border_inverse",
    "poly_mul",
    "matmul_mod",
    "border_matmul",
    "rref",
    "matrix_rank",
    "kernel_basis",
    "BorderReduction",
    "border_reduce",
    "invert",
    "identity",
]


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True


@dataclass(frozen=True)
class FieldSpec:
    """The prime field GF(p)."""

    p: int

    def __post_init__(self):
        if not isinstance(self.p, (int, np.integer)) or not 2 <= self.p <= 2**31:
            raise ValueError(f"field modulus must be an integer in [2, 2^31], got {self.p!r}")
        if not is_prime(int(self.p)):
            raise ValueError(f"field modulus {self.p} is not prime")

    @property
    def H(self) -> int:
        return 1

    def __str__(self):
        return f"GF({self.p})"


@dataclass(frozen=True)
class BorderRingSpec:
    """The border ring GF(p)[x]/(x^H); ``H`` is the exponent threshold."""

    base: FieldSpec
    H: int

    def __post_init__(self):
        if isinstance(self.base, int):
            object.__setattr__(self, "base", FieldSpec(self.base))
        if not isinstance(self.H, (int, np.integer)) or self.H < 1:
            raise ValueError(f"exponent threshold H must be >= 1, got {self.H!r}")

    @property
    def p(self) -> int:
        return self.base.p

    def __str__(self):
        return f"GF({self.p})[x]/(x^{self.H})"


Ring = Union[FieldSpec, BorderRingSpec]


def as_field(field) -> FieldSpec:
    """Accept an int modulus or a ``FieldSpec``."""
    if isinstance(field, FieldSpec):
        return field
    if isinstance(field, BorderRingSpec):
        return field.base
    return FieldSpec(int(field))


def _mod(field) -> int:
    return as_field(field).p


# ---------------------------------------------------------------------------
# scalars
# ---------------------------------------------------------------------------


def field_inverse(a: int, spec) -> int:
    p = _mod(spec)
    a = int(a) % p
    if a == 0:
        raise ZeroInverse("0 has no multiplicative inverse")
    return pow(a, p - 2, p)


def poly_mul(a: np.ndarray, b: np.ndarray, p: int) -> np.ndarray:
    """Truncated product of coefficient arrays along the last axis (broadcasting)."""
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    H = a.shape[-1]
    out = np.zeros(np.broadcast_shapes(a.shape, b.shape), dtype=np.int64)
    for i in range(H):
        ai = a[..., i : i + 1]
        if not ai.any():
            continue
        out[..., i:] += ai * b[..., : H - i]
        out %= p
    return out


def border_mul(a: Sequence[int], b: Sequence[int], spec: BorderRingSpec) -> tuple:
    return tuple(int(c) for c in poly_mul(np.asarray(a), np.asarray(b), spec.p))


def border_inverse(a: Sequence[int], spec: BorderRingSpec) -> tuple:
    """Inverse in GF(p)[x]/(x^H) by the coefficient recurrence; O(H^2)."""
    p, H = spec.p, spec.H
    alpha = [int(c) % p for c in a]
    if len(alpha) != H:
        raise ValueError(f"expected {H} coefficients, got {len(alpha)}")
    if alpha[0] == 0:
        raise NotInvertible("element is a multiple of x")
    inv0 = pow(alpha[0], p - 2, p)
    beta = [inv0]
    for h in range(1, H):
        acc = sum(alpha[h - j] * beta[j] for j in range(h))
        beta.append((-inv0 * acc) % p)
    return tuple(beta)


# ---------------------------------------------------------------------------
# field matrices
# ---------------------------------------------------------------------------


def identity(n: int, ring=None) -> np.ndarray:
    if isinstance(ring, BorderRingSpec):
        out = np.zeros((n, n, ring.H), dtype=np.int64)
        out[np.arange(n), np.arange(n), 0] = 1
        return out
    return np.eye(n, dtype=np.int64)


def matmul_mod(A, B, p: int) -> np.ndarray:
    A = np.asarray(A, dtype=np.int64) % p
    B = np.asarray(B, dtype=np.int64) % p
    k = A.shape[-1]
    if p < 2**26 and k < 2**11:
        return (A @ B) % p
    out = A.astype(object) @ B.astype(object)
    return (out % p).astype(np.int64)


def rref(M, field) -> tuple[np.ndarray, np.ndarray, int]:
    """Reduced row-echelon form ``R = Q @ M`` with ``Q`` invertible.

    Pivots are taken as the first nonzero entry scanning columns left to right
    and rows top to bottom.
    """
    p = _mod(field)
    M = np.asarray(M, dtype=np.int64) % p
    m, n = M.shape
    R = [[int(x) for x in row] for row in M]
    Q = [[int(i == j) for j in range(m)] for i in range(m)]
    rank = 0
    for col in range(n):
        if rank == m:
            break
        piv = next((i for i in range(rank, m) if R[i][col]), None)
        if piv is None:
            continue
        R[rank], R[piv] = R[piv], R[rank]
        Q[rank], Q[piv] = Q[piv], Q[rank]
        inv = pow(R[rank][col], p - 2, p)
        if inv != 1:
            R[rank] = [x * inv % p for x in R[rank]]
            Q[rank] = [x * inv % p for x in Q[rank]]
        prow, qrow = R[rank], Q[rank]
        for i in range(m):
            f = R[i][col]
            if i != rank and f:
                R[i] = [(a - f * b) % p for a, b in zip(R[i], prow)]
                Q[i] = [(a - f * b) % p for a, b in zip(Q[i], qrow)]
        rank += 1
    R_arr = np.array(R, dtype=np.int64).reshape(m, n)
    Q_arr = np.array(Q, dtype=np.int64).reshape(m, m)
    return R_arr, Q_arr, rank


def matrix_rank(M, field) -> int:
    p = _mod(field)
    M = np.asarray(M, dtype=np.int64) % p
    if M.size == 0:
        return 0
    if p == 2:
        from ._vec import gf2_rank, pack_rows

        return gf2_rank(pack_rows(M))
    return rref(M, p)[2]


def _pivot_columns(R: np.ndarray, rank: int) -> list[int]:
    return [int(np.flatnonzero(R[i])[0]) for i in range(rank)]


def kernel_basis(M, field) -> np.ndarray:
    """Rows spanning ``{v : M @ v = 0}``; ``cols - rank`` rows."""
    p = _mod(field)
    M = np.asarray(M, dtype=np.int64) % p
    n = M.shape[1]
    R, _, rank = rref(M, p)
    pivots = _pivot_columns(R, rank)
    free = [j for j in range(n) if j not in set(pivots)]
    basis = np.zeros((len(free), n), dtype=np.int64)
    for k, f in enumerate(free):
        basis[k, f] = 1
        for i, pc in enumerate(pivots):
            basis[k, pc] = (-R[i, f]) % p
    return basis


# ---------------------------------------------------------------------------
# border-ring matrices
# ---------------------------------------------------------------------------


def border_matmul(A, B, ring: BorderRingSpec) -> np.ndarray:
    p, H = ring.p, ring.H
    A = np.asarray(A, dtype=np.int64) % p
    B = np.asarray(B, dtype=np.int64) % p
    out = np.zeros((A.shape[0], B.shape[1], H), dtype=np.int64)
    for a in range(H):
        if not A[..., a].any():
            continue
        for b in range(H - a):
            out[..., a + b] += matmul_mod(A[..., a], B[..., b], p)
    return out % p


@dataclass(frozen=True)
class BorderReduction:
    """``Q @ M @ P == reduced`` with ``reduced = [U | V]`` stacked over zero rows.

    ``U`` is upper triangular with diagonal ``x^diag_powers[i]``. ``Q_inv`` is
    kept alongside ``Q`` because callers need it to map reduced objects back.
    """

    Q: np.ndarray
    Q_inv: np.ndarray
    P: np.ndarray
    perm: tuple
    reduced: np.ndarray
    rank: int
    diag_powers: tuple


def _valuations(block: np.ndarray, H: int) -> np.ndarray:
    nz = block != 0
    return np.where(nz.any(axis=-1), nz.argmax(axis=-1), H)


def border_reduce(M, ring: BorderRingSpec) -> BorderReduction:
    """Border analogue of row echelon form via row operations and column swaps.

    At each step the pivot is the first entry (row-major, smallest (row, col))
    of least x-adic valuation in the remaining block; when no unit is left the
    power of x is factored out implicitly by pivoting on the next valuation.
    """
    p, H = ring.p, ring.H
    W = np.array(M, dtype=np.int64) % p
    if W.ndim != 3 or W.shape[2] != H:
        raise ValueError(f"border matrix must have shape (m, n, {H}), got {W.shape}")
    m, n = W.shape[:2]
    Q = identity(m, ring)
    Q_inv = identity(m, ring)
    perm = list(range(n))
    powers: list[int] = []
    k = 0
    while k < min(m, n):
        val = _valuations(W[k:, k:], H)
        s = int(val.min())
        if s == H:
            break
        flat = int(np.flatnonzero(val == s)[0])
        i0, j0 = divmod(flat, n - k)
        i0 += k
        j0 += k
        if i0 != k:
            W[[k, i0]] = W[[i0, k]]
            Q[[k, i0]] = Q[[i0, k]]
            Q_inv[:, [k, i0]] = Q_inv[:, [i0, k]]
        if j0 != k:
            W[:, [k, j0]] = W[:, [j0, k]]
            perm[k], perm[j0] = perm[j0], perm[k]
        unit = np.zeros(H, dtype=np.int64)
        unit[: H - s] = W[k, k, s:]
        unit_inv = np.array(border_inverse(unit, ring), dtype=np.int64)
        W[k] = poly_mul(W[k], unit_inv, p)
        Q[k] = poly_mul(Q[k], unit_inv, p)
        Q_inv[:, k] = poly_mul(Q_inv[:, k], unit, p)
        for i in range(k + 1, m):
            if not W[i, k].any():
                continue
            w = np.zeros(H, dtype=np.int64)
            w[: H - s] = W[i, k, s:]
            W[i] = (W[i] - poly_mul(w, W[k], p)) % p
            Q[i] = (Q[i] - poly_mul(w, Q[k], p)) % p
            Q_inv[:, k] = (Q_inv[:, k] + poly_mul(Q_inv[:, i], w, p)) % p
        powers.append(s)
        k += 1
    P = np.zeros((n, n, H), dtype=np.int64)
    P[perm, np.arange(n), 0] = 1
    return BorderReduction(
        Q=Q, Q_inv=Q_inv, P=P, perm=tuple(perm), reduced=W, rank=k, diag_powers=tuple(powers)
    )


def invert(M, ring) -> np.ndarray:
    """Inverse of a square matrix over GF(p) (2-D input) or a border ring (3-D input)."""
    M = np.asarray(M, dtype=np.int64)
    if isinstance(ring, BorderRingSpec):
        if M.ndim != 3 or M.shape[0] != M.shape[1]:
            raise ValueError("invert expects a square border matrix")
        n = M.shape[0]
        red = border_reduce(M, ring)
        if red.rank < n or any(red.diag_powers):
            raise Singular("matrix is not invertible over the border ring")
        p = ring.p
        U = red.reduced
        X = identity(n, ring)
        for i in range(n - 1, -1, -1):
            for j in range(i + 1, n):
                if U[i, j].any():
                    X[i] = (X[i] - poly_mul(U[i, j], X[j], p)) % p
        PX = np.empty_like(X)
        PX[list(red.perm)] = X
        return border_matmul(PX, red.Q, ring)
    p = _mod(ring)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("invert expects a square matrix")
    _, Q, rank = rref(M, p)
    if rank < M.shape[0]:
        raise Singular("matrix is singular")
    return Q
