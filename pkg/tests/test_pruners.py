import itertools

import numpy as np
import pytest

from exactcpd._augmented import AugmentedTensor
from exactcpd.errors import UnsupportedD, UnsupportedK
from exactcpd.oracle import enumerate_all_tensors, rank_table
from exactcpd.pruners import (
    frequency_prune,
    kth_order_rref_prune,
    lask_prune,
    rref_heuristic,
    rref_prune,
)
from exactcpd.tensor import cpd_eval, generate, make_concise


def root(T, p=2):
    return AugmentedTensor.empty(make_concise(T, p)[0], p)


def test_rref_examples():
    assert not rref_prune(root(generate("t1")), 3, 4)
    assert not rref_prune(root(generate("diagshift:3")), 3, 4)
    assert rref_prune(root(generate("t2")), 3, 4)


def test_lask_examples():
    assert not lask_prune(root(generate("t2")), 3, 4)
    assert not lask_prune(root(generate("t1")), 3, 3)
    assert lask_prune(root(generate("t1")), 3, 4)


@pytest.mark.parametrize("name", ["wstate", "t1", "t2", "counterexample3", "diagshift:3", "polymul:2"])
def test_generous_thresholds_always_feasible(name):
    a = root(generate(name))
    n0, n1 = a.n0, a.dims[0]
    assert rref_prune(a, n0, n0 + n1)
    assert lask_prune(a, n0, 2 * max(a.dims))


def test_heuristic_examples():
    cpd = rref_heuristic(root(generate("polymul:2")), 3, 3)
    assert cpd is not None and cpd.rank == 3
    W = root(generate("wstate"))
    cpd = rref_heuristic(W, 2, 3)
    assert cpd is not None and cpd.rank <= 3
    assert np.array_equal(cpd_eval(cpd, ring=2), W.base)
    assert rref_heuristic(root(generate("counterexample3")), 3, 4) is None


def test_pruners_need_three_axes():
    a = AugmentedTensor.empty(np.ones((2, 2, 2, 2), dtype=np.int64))
    with pytest.raises(UnsupportedD):
        rref_prune(a, R=3)
    with pytest.raises(UnsupportedD):
        frequency_prune(np.zeros((2, 2)), 3)


def test_kth_order_bad_k():
    with pytest.raises(UnsupportedK):
        kth_order_rref_prune(generate("wstate"), 3, 3)


def test_blindness_on_counterexample():
    T = generate("counterexample3")
    for perm in itertools.permutations(range(3)):
        Tp = np.transpose(T, perm)
        a = root(Tp)
        assert rref_prune(a, 3, 4) and lask_prune(a, 3, 4)
        assert kth_order_rref_prune(Tp, 2, 4)


def test_root_soundness_on_full_sweep():
    """A root-level infeasible verdict never contradicts the true rank."""
    table = rank_table((2, 2, 2), 2)
    for code, T in enumerate(enumerate_all_tensors((2, 2, 2))):
        rk = table[code]
        Tc, _ = make_concise(T, 2, sort_axes=True)
        if Tc.ndim != 3 or 0 in Tc.shape:
            continue
        a = AugmentedTensor.empty(Tc)
        for R in range(a.n0, 5):
            if not rref_prune(a, R=R) or not lask_prune(a, R=R) or not frequency_prune(Tc, R):
                assert rk > R
            for k in range(1, a.n0 + 1):
                if not kth_order_rref_prune(Tc, k, R):
                    assert rk > R
            h = rref_heuristic(a, R=R)
            if h is not None:
                assert h.rank <= R and rk <= R
                assert np.array_equal(cpd_eval(h, ring=2), Tc)


def test_heuristic_with_trailing_columns(rng):
    T = make_concise(generate("t1"), 2)[0]
    a = AugmentedTensor.empty(T)
    for _ in range(20):
        cols = [rng.integers(0, 2, 3), rng.integers(0, 2, 3)]
        b = a.extend(cols)
        h = rref_heuristic(b, R=6)
        if h is not None:
            assert h.rank <= 6
            assert np.array_equal(cpd_eval(h, ring=2), T)
