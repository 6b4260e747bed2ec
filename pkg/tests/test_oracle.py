import collections

import numpy as np
import pytest

from exactcpd.algebra import BorderRingSpec, as_field
from exactcpd.errors import BudgetExceeded, ShapeMismatch
from exactcpd.oracle import brute_rank, enumerate_all_tensors, rank_table, verify_cpd
from exactcpd.tensor import Cpd, generate

# Rank histograms from the full breadth-first tables.
HISTOGRAMS = {
    ((2, 2, 2), 2): {0: 1, 1: 27, 2: 162, 3: 66},
    ((2, 2, 2), 3): {0: 1, 1: 128, 2: 4032, 3: 2400},
    ((2, 2, 3), 2): {0: 1, 1: 63, 2: 1050, 3: 2982},
}


@pytest.mark.parametrize("key", list(HISTOGRAMS))
def test_rank_histograms(key):
    shape, p = key
    hist = collections.Counter(rank_table(shape, p).tolist())
    assert dict(hist) == HISTOGRAMS[key]


def test_rank_one_count_formula():
    # nonzero rank-1 tensors: prod(p^n - 1) / (p - 1)^(D-1)
    for shape, p in HISTOGRAMS:
        expect = int(np.prod([p**n - 1 for n in shape])) // (p - 1) ** 2
        assert HISTOGRAMS[(shape, p)][1] == expect


def test_brute_rank_examples():
    assert brute_rank(generate("wstate")) == 3
    assert brute_rank(generate("addmod2")) == 3
    assert brute_rank(generate("addmod2"), 3) == 2
    assert brute_rank(np.zeros((2, 2))) == 0


def test_brute_rank_dfs_path():
    T = np.zeros((3, 3, 3), dtype=np.int64)
    for i in range(3):
        T[i, i, i] = 1
    assert brute_rank(T) == 3


def test_brute_rank_budget():
    with pytest.raises(BudgetExceeded):
        brute_rank(generate("t1"), budget=100)


def test_enumerate_all_tensors():
    ts = list(enumerate_all_tensors((1, 2), 3))
    assert len(ts) == 9 and ts[1].tolist() == [[0, 1]]
    with pytest.raises(BudgetExceeded):
        next(enumerate_all_tensors((5, 5), 2, limit=2**10))


def test_verify_cpd_field_and_border():
    A = np.array([[1, 0], [0, 1]])
    T = np.zeros((2, 2, 2), dtype=np.int64)
    T[0, 0, 0] = T[1, 1, 1] = 1
    assert verify_cpd(T, Cpd([A, A, A]), 2)
    assert not verify_cpd(T, Cpd([A, A, A[:, ::-1]]), 2)
    with pytest.raises(ShapeMismatch):
        verify_cpd(T, Cpd([A, A]), 2)
    ring = BorderRingSpec(as_field(2), 2)
    B = np.zeros((2, 1, 2), dtype=np.int64)
    B[0, 0, 1] = 1
    one = np.zeros((1, 1, 2), dtype=np.int64)
    one[0, 0, 0] = 1
    X = np.zeros((2, 1, 2), dtype=np.int64)
    X[0, 0, 1] = 1
    assert verify_cpd(X, Cpd([B, one]), ring)
