"""The augmented tensor shared by the field search and its pruners."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from ._vec import ops_for
from .errors import ShapeMismatch


@dataclass(frozen=True)
class AugmentedTensor:
    """A concise tensor together with the trailing columns fixed so far.

    ``Y[d-1]`` holds ``(A_d)_{:, n0:r}`` for axes ``d >= 1``. The materialized
    tensor has axis-0 length ``r``: its first ``n0`` slices are ``base`` and
    slice ``n0 + j`` is ``-(Y_1[:, j] x ... x Y_{D-1}[:, j])``.
    """

    base: np.ndarray
    Y: tuple
    p: int = 2

    def __post_init__(self):
        base = np.asarray(self.base, dtype=np.int64) % self.p
        object.__setattr__(self, "base", base)
        if base.ndim < 2:
            raise ShapeMismatch("an augmented tensor needs at least two axes")
        Y = tuple(np.asarray(y, dtype=np.int64).reshape(base.shape[d + 1], -1) % self.p for d, y in enumerate(self.Y))
        if len(Y) != base.ndim - 1:
            raise ShapeMismatch(f"expected {base.ndim - 1} trailing blocks, got {len(Y)}")
        if len({y.shape[1] for y in Y}) > 1:
            raise ShapeMismatch("trailing blocks disagree on column count")
        object.__setattr__(self, "Y", Y)

    @classmethod
    def empty(cls, base, p: int = 2) -> "AugmentedTensor":
        base = np.asarray(base)
        return cls(base, tuple(np.zeros((n, 0), dtype=np.int64) for n in base.shape[1:]), p)

    @property
    def n0(self) -> int:
        return self.base.shape[0]

    @property
    def fixed(self) -> int:
        return self.Y[0].shape[1]

    @property
    def r(self) -> int:
        return self.n0 + self.fixed

    @property
    def dims(self) -> tuple:
        return tuple(self.base.shape[1:])

    def column(self, j: int) -> tuple:
        return tuple(y[:, j] for y in self.Y)

    def term(self, j: int) -> np.ndarray:
        """``Y_1[:, j] x ... x Y_{D-1}[:, j]`` as a dense array."""
        out = np.array(1, dtype=np.int64)
        for u in self.column(j):
            out = np.multiply.outer(out, u) % self.p
        return out

    def materialize(self) -> np.ndarray:
        T = np.zeros((self.r,) + self.dims, dtype=np.int64)
        T[: self.n0] = self.base
        for j in range(self.fixed):
            T[self.n0 + j] = (-self.term(j)) % self.p
        return T

    def extend(self, cols) -> "AugmentedTensor":
        """Append one trailing column per axis ``d >= 1``."""
        Y = tuple(np.concatenate([y, np.asarray(c, dtype=np.int64).reshape(-1, 1)], axis=1) for y, c in zip(self.Y, cols))
        return AugmentedTensor(self.base, Y, self.p)

    @cached_property
    def flat(self) -> "FlatView":
        ops = ops_for(self.p)
        slices = [ops.from_array(s) for s in self.base]
        negterms = [ops.from_array((-self.term(j)) % self.p) for j in range(self.fixed)]
        return FlatView(ops, self.p, self.n0, self.dims, slices, negterms, self.Y)


@dataclass
class FlatView:
    """Slices and negated trailing terms as backend vectors."""

    ops: object
    p: int
    n0: int
    dims: tuple
    slices: list
    negterms: list
    Y: tuple

    @property
    def r(self) -> int:
        return self.n0 + len(self.negterms)
