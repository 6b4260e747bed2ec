"""Exact rank-at-most-R CPD search over a prime field.

The tensor is made concise with axes sorted by decreasing length. The search
then fixes the trailing columns ``((A_d)_{:, r})_{d >= 1}`` one level at a
time for ``r = n0 .. R-1``, in nondecreasing order of their base-p index, and
at each leaf solves for the remaining factors by linear algebra.

Trailing columns are restricted to tuples whose vectors are all nonzero with
leading entry 1. This loses nothing: a scale moves into ``A_0``, and a term
that vanishes can be replaced by any normalized tuple with a zero ``A_0``
column.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field as dc_field, replace
from typing import Callable, Iterator, Optional

import numpy as np

from ._augmented import AugmentedTensor, FlatView
from ._vec import digit_table, ops_for
from .algebra import BorderRingSpec, as_field, invert, matmul_mod
from .errors import BorderRingUnsupported, InternalInconsistency, UnsupportedD
from .pruners import (
    DEFAULT_PRUNERS,
    PRUNER_NAMES,
    _heuristic,
    _lask_feasible,
    _rref_feasible,
    frequency_prune,
    kth_order_rref_prune,
)
from .tensor import Cpd, cpd_eval, expand_cpd, make_concise, rank1_decompose

__all__ = [
    "SearchConfig",
    "SearchStats",
    "SearchOutcome",
    "AugmentedTensor",
    "search_rank_le",
    "test_assignment",
    "good_pairs",
    "rank_exact",
    "search_cost_log2",
    "choose_branch",
]

BRANCHES = ("auto", "enumerate-v", "kernel")


@dataclass(frozen=True)
class SearchConfig:
    """Knobs for :func:`search_rank_le`.

    ``progress`` is called as ``progress(level, done, total, pruner_hits)``
    from the top level at most once every ``progress_interval`` seconds.
    """

    pruners: frozenset = DEFAULT_PRUNERS
    branch: str = "auto"
    deterministic: bool = True
    threads: int = 1
    progress: Optional[Callable] = None
    progress_interval: float = 5.0

    def __post_init__(self):
        pr = frozenset(self.pruners)
        unknown = pr - set(PRUNER_NAMES)
        if unknown:
            raise ValueError(f"unknown pruner(s) {sorted(unknown)}; choose from {PRUNER_NAMES}")
        object.__setattr__(self, "pruners", pr)
        if self.branch not in BRANCHES:
            raise ValueError(f"branch must be one of {BRANCHES}, got {self.branch!r}")
        if self.threads < 1:
            raise ValueError("threads must be positive")


@dataclass
class SearchStats:
    nodes: dict = dc_field(default_factory=dict)
    leaves: int = 0
    pruner_hits: dict = dc_field(default_factory=dict)
    heuristic_hits: int = 0
    wall_time: float = 0.0

    def visit(self, r: int):
        self.nodes[r] = self.nodes.get(r, 0) + 1

    def hit(self, name: str):
        self.pruner_hits[name] = self.pruner_hits.get(name, 0) + 1

    def merge(self, other: "SearchStats"):
        for k, v in other.nodes.items():
            self.nodes[k] = self.nodes.get(k, 0) + v
        for k, v in other.pruner_hits.items():
            self.pruner_hits[k] = self.pruner_hits.get(k, 0) + v
        self.leaves += other.leaves
        self.heuristic_hits += other.heuristic_hits

    @property
    def total_nodes(self) -> int:
        return sum(self.nodes.values())


@dataclass
class SearchOutcome:
    witness: Optional[Cpd]
    exhausted: bool
    R: int
    stats: SearchStats = dc_field(default_factory=SearchStats)

    @property
    def found(self) -> bool:
        return self.witness is not None


def choose_branch(R: int, dims, branch: str = "auto") -> str:
    """``enumerate-v`` when ``R <= sum_{d>=2} n_d`` (ties included), else ``kernel``."""
    if branch != "auto":
        return branch
    return "enumerate-v" if R <= sum(dims[2:]) else "kernel"


def search_cost_log2(shape, R: int, p: int) -> float:
    """log2 of the step estimate ``p^((R-n0) sum_{d>=1} n_d + min(R, sum_{d>=2} n_d))``.

    ``shape`` should be the concise shape sorted by decreasing length.
    """
    shape = sorted(shape, reverse=True)
    if not shape or R < shape[0]:
        return 0.0
    e = (R - shape[0]) * sum(shape[1:]) + min(R, sum(shape[2:]))
    return e * math.log2(p)


# ---------------------------------------------------------------------------
# normalized vectors and trailing tuples
# ---------------------------------------------------------------------------


def _normalized(n: int, p: int) -> list[tuple]:
    """Nonzero vectors of F_p^n whose first nonzero entry is 1, in base-p order."""
    return [t for t in digit_table(n, p) if any(t) and t[next(i for i, x in enumerate(t) if x)] == 1]


class _Engine:
    """Search state for one concise, axis-sorted tensor of three or more axes."""

    def __init__(self, Tc: np.ndarray, p: int, cfg: SearchConfig):
        self.T = Tc
        self.p = p
        self.cfg = cfg
        self.ops = ops = ops_for(p)
        self.n0 = Tc.shape[0]
        self.dims = tuple(Tc.shape[1:])
        self.N = int(np.prod(self.dims))
        self.D = Tc.ndim
        self.slices = [ops.from_array(s) for s in Tc]
        self.slice_combos = ops.combos(self.slices, self.N)
        self.v_digits = digit_table(self.n0, p)
        self.v_keys = [ops.from_digits(d) for d in self.v_digits]
        # candidate trailing tuples in increasing base-p order of the concatenation
        per_axis = [_normalized(n, p) for n in self.dims]
        cands = [()]
        for opts in per_axis:
            cands = [c + (u,) for c in cands for u in opts]
        self.cands = []
        for cols in cands:
            arrs = tuple(np.array(u, dtype=np.int64) for u in cols)
            term = ops.outer([ops.from_digits(u) for u in cols], self.dims)
            self.cands.append((arrs, ops.neg(term)))
        # images of u1 -> -(u1 x u2 x ...) for every normalized (u_2, ...)
        self.kernel_images = []
        if self.D >= 3:
            rest = [()]
            for n in self.dims[1:]:
                rest = [c + (u,) for c in rest for u in _normalized(n, p)]
            n1 = self.dims[0]
            for us in rest:
                tail = [ops.from_digits(u) for u in us]
                imgs = []
                for k in range(n1):
                    e = tuple(int(i == k) for i in range(n1))
                    imgs.append(ops.neg(ops.outer([ops.from_digits(e)] + tail, self.dims)))
                self.kernel_images.append(imgs)
        self.use_pruners = self.D == 3
        self.stats = SearchStats()
        self._last_progress = time.monotonic()

    # -- leaf -------------------------------------------------------------

    def pairs_enumerate(self, negterms) -> Iterator[tuple]:
        ops = self.ops
        c_combos = ops.combos(negterms, self.N)
        c_digits = digit_table(len(negterms), self.p)
        for vi, a in enumerate(self.slice_combos):
            for ci, s in enumerate(c_combos):
                if ops.rank_le1(ops.add(a, s), self.dims):
                    yield self.v_digits[vi], c_digits[ci]

    def pairs_kernel(self, negterms) -> Iterator[tuple]:
        ops, n0, m = self.ops, self.n0, len(negterms)
        head = list(self.slices) + list(negterms)
        for imgs in self.kernel_images:
            for vec in ops.left_kernel(head + imgs):
                yield tuple(vec[:n0]), tuple(vec[n0 : n0 + m])

    def test(self, negterms, branch: str):
        """Greedy row accumulation; returns ``(Q rows, C rows)`` or ``None``."""
        ops, n0 = self.ops, self.n0
        basis = ops.basis()
        rows = []
        if branch == "enumerate-v":
            # same greedy result as scanning the full stream: a v already in
            # the span can never be added, so its c loop is skipped
            c_combos = ops.combos(negterms, self.N)
            c_digits = digit_table(len(negterms), self.p)
            for vi in range(1, len(self.slice_combos)):
                key = self.v_keys[vi]
                if basis.contains(key):
                    continue
                a = self.slice_combos[vi]
                for ci, s in enumerate(c_combos):
                    if ops.rank_le1(ops.add(a, s), self.dims):
                        basis.add(key)
                        rows.append((self.v_digits[vi], c_digits[ci]))
                        break
                if len(rows) == n0:
                    return rows
            return None
        for v, c in self.pairs_kernel(negterms):
            if basis.add(ops.from_digits(v)):
                rows.append((v, c))
                if len(rows) == n0:
                    return rows
        return None

    def assemble(self, rows, tuples) -> Cpd:
        ops, p, n0 = self.ops, self.p, self.n0
        m = len(tuples)
        negterms = [t[1] for t in tuples]
        Q = np.array([v for v, _ in rows], dtype=np.int64).reshape(n0, n0)
        C = np.array([c for _, c in rows], dtype=np.int64).reshape(n0, m)
        X = [np.zeros((n, n0), dtype=np.int64) for n in self.dims]
        for i, (v, c) in enumerate(rows):
            acc = ops.zeros(self.N)
            for coef, s in zip(v, self.slices):
                if coef:
                    acc = ops.add(acc, ops.scale(coef, s))
            for coef, s in zip(c, negterms):
                if coef:
                    acc = ops.add(acc, ops.scale(coef, s))
            if ops.is_zero(acc):
                continue
            one = rank1_decompose(ops.to_array(acc, self.dims), p)
            if one is None:
                raise InternalInconsistency(f"corrected slice {i} is not rank one although its row was accepted")
            for d, A in enumerate(one.factors):
                X[d][:, i] = A[:, 0]
        Qi = invert(Q, p)
        A0 = matmul_mod(Qi, np.concatenate([np.eye(n0, dtype=np.int64), C], axis=1), p)
        factors = [A0]
        for d in range(self.D - 1):
            Y = np.array([t[0][d] for t in tuples], dtype=np.int64).reshape(m, self.dims[d]).T
            factors.append(np.concatenate([X[d], Y], axis=1))
        return Cpd(factors)

    # -- internal levels ---------------------------------------------------

    def flat(self, tuples) -> FlatView:
        Y = tuple(
            np.array([t[0][d] for t in tuples], dtype=np.int64).reshape(len(tuples), self.dims[d]).T
            for d in range(self.D - 1)
        )
        return FlatView(self.ops, self.p, self.n0, self.dims, self.slices, [t[1] for t in tuples], Y)

    def prune(self, tuples, R: int):
        """``(feasible, cpd)`` after the enabled pruners at an internal node."""
        if not self.use_pruners or not self.cfg.pruners:
            return True, None
        fv = self.flat(tuples)
        pr = self.cfg.pruners
        if "rref" in pr and not _rref_feasible(fv, R):
            self.stats.hit("rref")
            return False, None
        if "lask" in pr and not _lask_feasible(fv, R):
            self.stats.hit("lask")
            return False, None
        if "heuristic" in pr:
            cpd = _heuristic(fv, R)
            if cpd is not None:
                self.stats.heuristic_hits += 1
                return True, cpd
        return True, None

    def run(self, R: int, top: Optional[range] = None):
        """Depth-first search; returns a CPD of the concise tensor or ``None``."""
        m_total = R - self.n0
        branch = choose_branch(R, (self.n0,) + self.dims, self.cfg.branch)
        cands = self.cands
        tuples: list = []

        def rec(start: int, stop: int, level: int):
            r = self.n0 + len(tuples)
            self.stats.visit(r)
            if len(tuples) == m_total:
                self.stats.leaves += 1
                rows = self.test([t[1] for t in tuples], branch)
                return None if rows is None else self.assemble(rows, list(tuples))
            ok, cpd = self.prune(tuples, R)
            if not ok:
                return None
            if cpd is not None:
                return cpd
            for i in range(start, stop):
                tuples.append(cands[i])
                got = rec(i, len(cands), level + 1)
                tuples.pop()
                if got is not None:
                    return got
                if level == 0:
                    self._report(r, i - start + 1, stop - start)
            return None

        if m_total == 0:
            return rec(0, 0, 0)
        span = top if top is not None else range(len(cands))
        return rec(span.start, span.stop, 0)

    def _report(self, level, done, total):
        cb = self.cfg.progress
        if cb is None:
            return
        now = time.monotonic()
        if now - self._last_progress >= self.cfg.progress_interval or done == total:
            self._last_progress = now
            cb(level, done, total, dict(self.stats.pruner_hits))


# ---------------------------------------------------------------------------
# low-dimensional cases
# ---------------------------------------------------------------------------


def _small_d(Tc: np.ndarray, R: int, p: int):
    """Direct answer for one- and two-axis concise tensors."""
    n = Tc.shape[0]
    if R < n:
        return None
    if Tc.ndim == 1:
        return Cpd([Tc.reshape(n, n)])
    return Cpd([np.eye(n, dtype=np.int64), Tc.T.copy()])


# ---------------------------------------------------------------------------
# public API
# ---------------------------------------------------------------------------


def _prepare(T, field):
    if isinstance(field, BorderRingSpec) and field.H > 1:
        raise BorderRingUnsupported("field search needs H = 1; use the border search instead")
    F = as_field(field)
    T = np.asarray(T, dtype=np.int64) % F.p
    if T.ndim < 1:
        raise UnsupportedD("tensor needs at least one axis")
    Tc, cert = make_concise(T, F, sort_axes=True)
    return F, T, Tc, cert


def _finish(T, cert, cpd_c: Optional[Cpd], R: int, p: int, stats: SearchStats, t0: float) -> SearchOutcome:
    stats.wall_time = time.perf_counter() - t0
    if cpd_c is None:
        return SearchOutcome(None, True, R, stats)
    if any(n > cpd_c.rank for n in cpd_c.shape):
        raise InternalInconsistency("concise side length exceeds the rank of an emitted CPD")
    witness = expand_cpd(cert, cpd_c)
    if witness.rank > R or not np.array_equal(cpd_eval(witness, T.shape, p), T):
        raise InternalInconsistency("emitted witness does not evaluate to the input tensor")
    return SearchOutcome(witness, False, R, stats)


def _root_diagnostics(Tc, R: int, p: int, cfg: SearchConfig, stats: SearchStats) -> bool:
    """The optional root-only pruners (``frequency`` and second-order ``rref-k``)."""
    if Tc.ndim != 3:
        return True
    if "frequency" in cfg.pruners and not frequency_prune(Tc, R, p):
        stats.hit("frequency")
        return False
    if "rref-k" in cfg.pruners and Tc.shape[0] >= 2 and not kth_order_rref_prune(Tc, 2, R, p):
        stats.hit("rref-k")
        return False
    return True


def _partition_worker(Tc, p, cfg, R, lo, hi):
    eng = _Engine(Tc, p, replace(cfg, progress=None, threads=1))
    cpd = eng.run(R, range(lo, hi))
    return (None if cpd is None else [A.tolist() for A in cpd.factors]), eng.stats


def search_rank_le(T, R: int, cfg: SearchConfig | None = None, field=2) -> SearchOutcome:
    """Find a CPD of ``T`` with at most ``R`` terms, or prove none exists."""
    cfg = cfg or SearchConfig()
    t0 = time.perf_counter()
    F, T, Tc, cert = _prepare(T, field)
    p = F.p
    stats = SearchStats()
    if R < 0:
        return _finish(T, cert, None, R, p, stats, t0)
    if any(n == 0 for n in Tc.shape):
        return _finish(T, cert, Cpd([np.zeros((n, 0), dtype=np.int64) for n in Tc.shape]), R, p, stats, t0)
    if Tc.ndim <= 2:
        stats.visit(Tc.shape[0])
        return _finish(T, cert, _small_d(Tc, R, p), R, p, stats, t0)
    if R < Tc.shape[0]:
        return _finish(T, cert, None, R, p, stats, t0)
    if not _root_diagnostics(Tc, R, p, cfg, stats):
        return _finish(T, cert, None, R, p, stats, t0)
    eng = _Engine(Tc, p, cfg)
    m = R - Tc.shape[0]
    if cfg.deterministic or cfg.threads == 1 or m == 0:
        cpd = eng.run(R)
        return _finish(T, cert, cpd, R, p, eng.stats, t0)
    # root pruners once, then fan out the first trailing column
    ok, cpd = eng.prune([], R)
    eng.stats.visit(Tc.shape[0])
    if not ok or cpd is not None:
        return _finish(T, cert, cpd, R, p, eng.stats, t0)
    stats = eng.stats
    total = len(eng.cands)
    chunks = max(1, min(total, cfg.threads * 4))
    bounds = [total * k // chunks for k in range(chunks + 1)]
    found = None
    with ProcessPoolExecutor(max_workers=cfg.threads) as pool:
        futs = [pool.submit(_partition_worker, Tc, p, cfg, R, bounds[k], bounds[k + 1]) for k in range(chunks)]
        for k, fut in enumerate(futs):
            res, st = fut.result()
            stats.merge(st)
            if cfg.progress is not None:
                cfg.progress(Tc.shape[0], bounds[k + 1], total, dict(stats.pruner_hits))
            if res is not None:
                found = Cpd(res)
                for f in futs[k + 1 :]:
                    f.cancel()
                break
    return _finish(T, cert, found, R, p, stats, t0)


def _aug_engine(aug: AugmentedTensor) -> _Engine:
    if aug.base.ndim < 3:
        raise UnsupportedD("leaf solving needs at least three axes")
    return _Engine(aug.base, aug.p, SearchConfig(pruners=frozenset()))


def _aug_tuples(eng: _Engine, aug: AugmentedTensor) -> list:
    ops = eng.ops
    out = []
    for j in range(aug.fixed):
        cols = aug.column(j)
        term = ops.outer([ops.from_digits(tuple(int(x) for x in u)) for u in cols], eng.dims)
        out.append((tuple(np.asarray(u, dtype=np.int64) for u in cols), ops.neg(term)))
    return out


def good_pairs(aug: AugmentedTensor, R: int | None = None, cfg: SearchConfig | None = None) -> Iterator[tuple]:
    """Stream ``(v, c)`` pairs for a leaf state (all trailing columns fixed).

    The enumerate-v branch yields every pair with
    ``rank(v x_0 T - <<c, Y_1, ...>>) <= 1``; the kernel branch yields kernel
    bases whose ``v`` parts span the same space.
    """
    cfg = cfg or SearchConfig()
    R = aug.r if R is None else R
    if R != aug.r:
        raise ValueError(f"good pairs need a leaf state (r = R); got r={aug.r}, R={R}")
    eng = _aug_engine(aug)
    negterms = [t[1] for t in _aug_tuples(eng, aug)]
    branch = choose_branch(R, aug.base.shape, cfg.branch)
    if branch == "enumerate-v":
        yield from eng.pairs_enumerate(negterms)
    else:
        yield from eng.pairs_kernel(negterms)


def test_assignment(aug: AugmentedTensor, R: int | None = None, cfg: SearchConfig | None = None) -> Optional[Cpd]:
    """Solve the leaf state for the leading columns; ``None`` when infeasible."""
    cfg = cfg or SearchConfig()
    R = aug.r if R is None else R
    if R != aug.r:
        raise ValueError(f"leaf test needs r = R; got r={aug.r}, R={R}")
    eng = _aug_engine(aug)
    tuples = _aug_tuples(eng, aug)
    rows = eng.test([t[1] for t in tuples], choose_branch(R, aug.base.shape, cfg.branch))
    if rows is None:
        return None
    cpd = eng.assemble(rows, tuples)
    if not np.array_equal(cpd_eval(cpd, aug.base.shape, aug.p), aug.base):
        raise InternalInconsistency("leaf CPD does not evaluate to the base tensor")
    return cpd


def rank_exact(T, cfg: SearchConfig | None = None, field=2) -> tuple[int, Cpd]:
    """Least ``R`` with a witness, scanning upward from the concise lower bound."""
    cfg = cfg or SearchConfig()
    F = as_field(field)
    T = np.asarray(T, dtype=np.int64) % F.p
    Tc, _ = make_concise(T, F)
    shape = Tc.shape
    if any(n == 0 for n in shape):
        return 0, Cpd([np.zeros((n, 0), dtype=np.int64) for n in T.shape])
    lo = max(shape)
    hi = min(int(np.prod(shape)) // n for n in shape) if len(shape) > 1 else 1
    for R in range(lo, max(lo, hi) + 1):
        out = search_rank_le(T, R, cfg, F)
        if out.witness is not None:
            if out.witness.rank != R:
                raise InternalInconsistency(f"witness at R={R} has {out.witness.rank} columns")
            return R, out.witness
    raise InternalInconsistency(f"no witness up to the trivial upper bound {hi}")
