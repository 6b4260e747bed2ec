"""Flat-vector backends used by the search hot loops.

A tensor slice is flattened row-major into a vector. ``GF2Ops`` packs such
vectors into Python ints (flat index 0 is the most significant bit, so integer
order equals lexicographic order); ``GFpOps`` keeps tuples of residues. Both
expose the same small surface so the search code is written once.
"""

from __future__ import annotations

from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

# ---------------------------------------------------------------------------
# GF(2) packed helpers
# ---------------------------------------------------------------------------


def pack_bits(arr) -> int:
    v = 0
    for x in np.asarray(arr).ravel():
        v = (v << 1) | (int(x) & 1)
    return v


def unpack_bits(v: int, n: int) -> np.ndarray:
    return np.array([(v >> (n - 1 - i)) & 1 for i in range(n)], dtype=np.int64)


def pack_rows(M) -> list[int]:
    return [pack_bits(row) for row in np.asarray(M)]


def gf2_rank(rows: Iterable[int]) -> int:
    basis: dict[int, int] = {}
    for x in rows:
        while x:
            h = x.bit_length()
            b = basis.get(h)
            if b is None:
                basis[h] = x
                break
            x ^= b
    return len(basis)


def split_rows(v: int, rows: int, cols: int) -> list[int]:
    mask = (1 << cols) - 1
    return [(v >> ((rows - 1 - i) * cols)) & mask for i in range(rows)]


@lru_cache(maxsize=None)
def digit_table(k: int, p: int) -> tuple:
    """All vectors of F_p^k as digit tuples, in base-p (most significant first) order."""
    out: list[tuple] = [()]
    for _ in range(k):
        out = [t + (d,) for t in out for d in range(p)]
    return tuple(out)


def digits_of(idx: int, k: int, p: int) -> tuple:
    ds = []
    for _ in range(k):
        idx, d = divmod(idx, p)
        ds.append(d)
    return tuple(reversed(ds))


class GF2Basis:
    """Incremental span over GF(2) of packed vectors."""

    __slots__ = ("_basis",)

    def __init__(self):
        self._basis: dict[int, int] = {}

    def reduce(self, x: int) -> int:
        basis = self._basis
        while x:
            b = basis.get(x.bit_length())
            if b is None:
                return x
            x ^= b
        return 0

    def add(self, x: int) -> bool:
        x = self.reduce(x)
        if x:
            self._basis[x.bit_length()] = x
            return True
        return False

    def contains(self, x: int) -> bool:
        return self.reduce(x) == 0

    @property
    def rank(self) -> int:
        return len(self._basis)


class GF2Ops:
    p = 2

    @staticmethod
    def zeros(n: int) -> int:
        return 0

    @staticmethod
    def from_array(arr) -> int:
        return pack_bits(np.asarray(arr) % 2)

    @staticmethod
    def to_array(v: int, shape) -> np.ndarray:
        n = int(np.prod(shape, dtype=np.int64))
        return unpack_bits(v, n).reshape(shape)

    @staticmethod
    def from_digits(ds: Sequence[int]) -> int:
        v = 0
        for d in ds:
            v = (v << 1) | (d & 1)
        return v

    @staticmethod
    def add(a: int, b: int) -> int:
        return a ^ b

    sub = add

    @staticmethod
    def neg(a: int) -> int:
        return a

    @staticmethod
    def scale(s: int, a: int) -> int:
        return a if s & 1 else 0

    @staticmethod
    def is_zero(a: int) -> bool:
        return a == 0

    @staticmethod
    def combos(vecs: Sequence[int], n: int = 0) -> list[int]:
        out = [0]
        for v in vecs:
            out = [x for y in out for x in (y, y ^ v)]
        return out

    @staticmethod
    def outer(vecs: Sequence[int], dims: Sequence[int]) -> int:
        acc, length = 1, 1
        for u, n in zip(vecs, dims):
            new = 0
            for i in range(length):
                if (acc >> (length - 1 - i)) & 1:
                    new |= u << ((length - 1 - i) * n)
            acc, length = new, length * n
        return acc

    @staticmethod
    def rank(v: int, rows: int, cols: int) -> int:
        return gf2_rank(split_rows(v, rows, cols))

    @staticmethod
    def rank_le1(v: int, dims: Sequence[int]) -> bool:
        if len(dims) <= 1 or v == 0:
            return True
        if len(dims) == 2:
            ref = 0
            for r in split_rows(v, dims[0], dims[1]):
                if r:
                    if ref and r != ref:
                        return False
                    ref = r
            return True
        return _rank_le1_generic(GF2Ops.to_array(v, dims), 2)

    @staticmethod
    def basis() -> GF2Basis:
        return GF2Basis()

    @staticmethod
    def left_kernel(images: Sequence[int]) -> list[tuple]:
        """Basis of ``{x : sum_i x_i images[i] = 0}`` as digit tuples."""
        k = len(images)
        basis: dict[int, tuple] = {}
        kernel = []
        for i, img in enumerate(images):
            v, t = img, 1 << (k - 1 - i)
            while v:
                h = v.bit_length()
                b = basis.get(h)
                if b is None:
                    basis[h] = (v, t)
                    break
                v ^= b[0]
                t ^= b[1]
            else:
                kernel.append(t)
        return [tuple((t >> (k - 1 - j)) & 1 for j in range(k)) for t in kernel]


# ---------------------------------------------------------------------------
# GF(p) tuples
# ---------------------------------------------------------------------------


def _rank_rows(rows: list[list[int]], p: int) -> int:
    rows = [r[:] for r in rows if any(r)]
    rank = 0
    ncols = len(rows[0]) if rows else 0
    for col in range(ncols):
        piv = next((i for i in range(rank, len(rows)) if rows[i][col]), None)
        if piv is None:
            continue
        rows[rank], rows[piv] = rows[piv], rows[rank]
        inv = pow(rows[rank][col], p - 2, p)
        prow = rows[rank]
        for i in range(rank + 1, len(rows)):
            f = rows[i][col]
            if f:
                f = f * inv % p
                rows[i] = [(a - f * b) % p for a, b in zip(rows[i], prow)]
        rank += 1
        if rank == len(rows):
            break
    return rank


def _rank_le1_generic(arr: np.ndarray, p: int) -> bool:
    from .algebra import matrix_rank

    for d in range(arr.ndim):
        unf = np.moveaxis(arr, d, 0).reshape(arr.shape[d], -1)
        if matrix_rank(unf, p) > 1:
            return False
    return True


class GFpBasis:
    """Incremental span over GF(p) of tuple vectors (echelon rows keyed by pivot)."""

    __slots__ = ("p", "_rows")

    def __init__(self, p: int):
        self.p = p
        self._rows: dict[int, list[int]] = {}

    def reduce(self, v) -> list[int]:
        p = self.p
        x = list(v)
        for j in range(len(x)):
            if x[j]:
                row = self._rows.get(j)
                if row is None:
                    continue
                f = x[j]
                x = [(a - f * b) % p for a, b in zip(x, row)]
        return x

    def add(self, v) -> bool:
        x = self.reduce(v)
        for j, a in enumerate(x):
            if a:
                inv = pow(a, self.p - 2, self.p)
                self._rows[j] = [b * inv % self.p for b in x]
                return True
        return False

    def contains(self, v) -> bool:
        return not any(self.reduce(v))

    @property
    def rank(self) -> int:
        return len(self._rows)


class GFpOps:
    def __init__(self, p: int):
        self.p = p

    def zeros(self, n: int) -> tuple:
        return (0,) * n

    def from_array(self, arr) -> tuple:
        return tuple(int(x) % self.p for x in np.asarray(arr).ravel())

    def to_array(self, v, shape) -> np.ndarray:
        return np.array(v, dtype=np.int64).reshape(shape)

    def from_digits(self, ds) -> tuple:
        return tuple(int(d) % self.p for d in ds)

    def add(self, a, b):
        p = self.p
        return tuple((x + y) % p for x, y in zip(a, b))

    def sub(self, a, b):
        p = self.p
        return tuple((x - y) % p for x, y in zip(a, b))

    def neg(self, a):
        p = self.p
        return tuple((-x) % p for x in a)

    def scale(self, s, a):
        p = self.p
        return tuple(s * x % p for x in a)

    @staticmethod
    def is_zero(a) -> bool:
        return not any(a)

    def combos(self, vecs, n: int = 0) -> list:
        p = self.p
        out = [self.zeros(len(vecs[0]) if vecs else n)]
        for v in vecs:
            out = [tuple((a + d * b) % p for a, b in zip(y, v)) for y in out for d in range(p)]
        return out

    def outer(self, vecs, dims) -> tuple:
        p = self.p
        acc = (1,)
        for u in vecs:
            acc = tuple(a * b % p for a in acc for b in u)
        return acc

    def rank(self, v, rows: int, cols: int) -> int:
        return _rank_rows([list(v[i * cols : (i + 1) * cols]) for i in range(rows)], self.p)

    def rank_le1(self, v, dims) -> bool:
        if len(dims) <= 1 or not any(v):
            return True
        if len(dims) == 2:
            return self.rank(v, dims[0], dims[1]) <= 1
        return _rank_le1_generic(self.to_array(v, dims), self.p)

    def basis(self) -> GFpBasis:
        return GFpBasis(self.p)

    def left_kernel(self, images) -> list[tuple]:
        p = self.p
        k = len(images)
        if k == 0:
            return []
        n = len(images[0])
        # eliminate [image | identity] on the image columns
        rows = [list(img) + [int(i == j) for j in range(k)] for i, img in enumerate(images)]
        rank = 0
        for col in range(n):
            piv = next((i for i in range(rank, k) if rows[i][col]), None)
            if piv is None:
                continue
            rows[rank], rows[piv] = rows[piv], rows[rank]
            inv = pow(rows[rank][col], p - 2, p)
            rows[rank] = [x * inv % p for x in rows[rank]]
            prow = rows[rank]
            for i in range(rank + 1, k):
                f = rows[i][col]
                if f:
                    rows[i] = [(a - f * b) % p for a, b in zip(rows[i], prow)]
            rank += 1
        return [tuple(r[n:]) for r in rows[rank:]]


def ops_for(p: int):
    return GF2Ops() if p == 2 else GFpOps(p)
