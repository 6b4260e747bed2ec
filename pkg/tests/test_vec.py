import numpy as np
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from exactcpd._vec import GFpOps, digit_table, gf2_rank, ops_for, pack_rows
from exactcpd.algebra import matrix_rank


@given(arrays(np.int64, (3, 4), elements=st.integers(0, 1)))
def test_gf2_rank_matches_dense(M):
    assert gf2_rank(pack_rows(M)) == matrix_rank(M, 2)


@given(arrays(np.int64, (3, 2, 2), elements=st.integers(0, 1)))
def test_bitpacked_ops_agree_with_generic(T):
    fast, slow = ops_for(2), GFpOps(2)
    for ops in (fast, slow):
        vs = [ops.from_array(s) for s in T]
        combos = ops.combos(vs, 4)
        assert len(combos) == 8
        ranks = [ops.rank(c, 2, 2) for c in combos]
        le1 = [ops.rank_le1(c, (2, 2)) for c in combos]
        assert le1 == [r <= 1 for r in ranks]
        dense = [ops.to_array(c, (2, 2)) for c in combos]
        assert ranks == [matrix_rank(d, 2) for d in dense]


@given(st.lists(st.integers(0, 2), min_size=2, max_size=2), st.lists(st.integers(0, 2), min_size=3, max_size=3))
def test_outer_gfp(u, w):
    ops = ops_for(3)
    v = ops.outer([ops.from_digits(u), ops.from_digits(w)], (2, 3))
    assert np.array_equal(ops.to_array(v, (2, 3)), np.multiply.outer(u, w) % 3)


def test_digit_table_order():
    t = digit_table(2, 3)
    assert tuple(t[0]) == (0, 0) and tuple(t[1]) == (0, 1) and tuple(t[3]) == (1, 0)


def test_left_kernel_gf2():
    ops = ops_for(2)
    imgs = [ops.from_array(np.array([1, 0, 1])), ops.from_array(np.array([1, 0, 1])), ops.from_array(np.array([0, 1, 0]))]
    ker = ops.left_kernel(imgs)
    assert len(ker) == 1
    c = ker[0]
    acc = ops.zeros(3)
    for ci, im in zip(c, imgs):
        acc = ops.add(acc, ops.scale(ci, im))
    assert ops.is_zero(acc)
