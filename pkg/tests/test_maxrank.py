import math

import numpy as np
import pytest

from exactcpd.errors import InvalidShape, TooLarge
from exactcpd.maxrank import (
    bound_counting,
    bound_howell_upper,
    bound_improved_nnn,
    bound_nn2,
    bound_skinny_lower,
    bound_trivial_upper,
    canonical_stream,
    char_matrix,
    count_canonical,
    maxrank_exhaustive,
    shape_bounds,
    stabilizer_of_identity_block,
)
from exactcpd.oracle import rank_table
from exactcpd.tensor import generate


def test_counting_and_trivial():
    assert bound_counting((3, 3, 3)) == 3
    assert bound_counting((2, 2, 2)) == 2
    assert bound_trivial_upper((3, 3, 3)) == 9
    assert bound_trivial_upper((4, 2, 2)) == 4


@pytest.mark.parametrize("n", range(1, 9))
def test_howell_matches_closed_form(n):
    assert bound_howell_upper((n, n, n)) == math.ceil(3 * n * n / 4)


def test_nn2_formulas():
    assert bound_nn2(2, 2, 2) == 3
    assert bound_nn2(3, 2, 2) == 3
    assert bound_nn2(3, 3, 2) == 5
    assert bound_nn2(4, 2, 2) == 4
    assert bound_nn2(3, 3, 3) == 4
    assert bound_nn2(3, 3, None) == 5
    with pytest.raises(InvalidShape):
        bound_nn2(2, 3)


@pytest.mark.parametrize("shape,m,n", [((2, 2, 3), 3, 2), ((2, 2, 2), 2, 2), ((2, 3, 3), 3, 3)])
def test_nn2_matches_exhaustive_table(shape, m, n):
    assert int(rank_table(shape, 2).max()) == bound_nn2(m, n, 2)


def test_skinny_and_improved():
    assert bound_skinny_lower(4, 4, 1) == 15
    assert [bound_improved_nnn(n) for n in (1, 2, 32)] == [1, 3, 736]


def test_shape_bounds_sandwich():
    b = shape_bounds((3, 3, 3))
    assert b.lower["counting"] == 3
    assert b.upper["howell"] == 7
    assert b.upper["trivial"] == 9
    lo, _ = b.best_lower
    hi, _ = b.best_upper
    assert lo <= 6 <= hi
    b = shape_bounds((4, 2, 2), 2)
    assert b.lower["nn2"] == b.upper["nn2"] == 4
    with pytest.raises(InvalidShape):
        shape_bounds((2, 2))


@pytest.mark.parametrize("n,p,r,size", [(3, 4, 3, 1344), (4, 4, 3, 10752), (2, 2, 2, 6)])
def test_stabilizer_sizes(n, p, r, size):
    P, Qt = stabilizer_of_identity_block(n, p, r)
    assert len(P) == size
    T0 = np.zeros((n, p), dtype=np.int64)
    T0[np.arange(r), np.arange(r)] = 1
    assert ((P @ T0 @ Qt) % 2 == T0).all()


def test_stabilizer_limit():
    with pytest.raises(TooLarge):
        stabilizer_of_identity_block(4, 4, 2, limit=10)


def test_canonical_stream_covers_all_ranks_222():
    # every 2x2x2 tensor with a rank-2 slice 0 has a representative of equal rank
    table = rank_table((2, 2, 2), 2)
    reps = list(canonical_stream((2, 2, 2), 2))
    w = 2 ** np.arange(7, -1, -1)
    got = {int(table[int(T.ravel() @ w)]) for T in reps}
    assert got == {2, 3}
    assert count_canonical((2, 2, 2), 1) == 13


def test_canonical_stream_limits():
    with pytest.raises(TooLarge):
        next(canonical_stream((5, 5, 5)))
    with pytest.raises(ValueError):
        next(canonical_stream((2, 2, 2), field=3))


def test_char_matrix():
    assert char_matrix(generate("wstate")) == [["v0", "v1"], ["v1", "0"]]
    T = np.zeros((2, 1, 1), dtype=np.int64)
    T[:, 0, 0] = (1, 2)
    assert char_matrix(T) == [["v0+2*v1"]]


@pytest.mark.parametrize("shape,R0,expect", [((2, 2, 2), 2, 3), ((2, 2, 3), 2, 3), ((3, 2, 2), 2, 3), ((2, 3, 3), 3, 5)])
def test_small_maxrank(shape, R0, expect):
    rep = maxrank_exhaustive(shape, 2, R0)
    assert rep.max_rank == expect
    assert bound_counting(shape) <= rep.max_rank <= bound_trivial_upper(shape)
    assert rep.witness is not None
    d = rep.to_dict()
    assert d["max_rank"] == expect and "witness: " in rep.table_row()


def test_maxrank_permutation_invariance():
    assert maxrank_exhaustive((2, 2, 3), 2, 0).max_rank == maxrank_exhaustive((3, 2, 2), 2, 0).max_rank
