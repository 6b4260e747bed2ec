import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from exactcpd.algebra import BorderRingSpec, as_field
from exactcpd.border_search import (
    as_border_ring,
    border_concise,
    border_cost_log2,
    border_rank,
    border_search_rank_le,
    brute_rank_via_border,
    embed,
)
from exactcpd.errors import BudgetExceeded, ShapeMismatch
from exactcpd.oracle import brute_rank, verify_cpd
from exactcpd.tensor import contract, generate

RING2 = BorderRingSpec(as_field(2), 2)


def test_embed():
    X = embed(np.ones((2, 2)), 3)
    assert X.shape == (2, 2, 3) and X[..., 2].all() and not X[..., :2].any()
    with pytest.raises(ValueError):
        embed(np.ones((2, 2)), 2, power=2)


def test_as_border_ring():
    assert as_border_ring(3, 2).p == 3
    with pytest.raises(ValueError):
        as_border_ring(RING2, 3)


def test_border_concise_reembeds(rng):
    for _ in range(30):
        X = rng.integers(0, 2, (2, 3, 2, 2))
        bc = border_concise(X, RING2)
        back = bc.Tc
        for d in range(3):
            back = contract(bc.embedding(d), d, back, RING2)
        assert np.array_equal(back, X)


def test_motivating_tensor():
    W = generate("wstate")
    assert border_rank(W, 2) == 2
    assert border_rank(W, 1) == 3
    out = border_search_rank_le(embed(W, 2), 2, RING2)
    assert out.found and verify_cpd(embed(W, 2), out.witness, RING2)


def test_x_identity_needs_two():
    X = np.zeros((2, 2, 2, 2), dtype=np.int64)
    X[0, 0, 0, 1] = X[1, 1, 1, 1] = 1
    assert not border_search_rank_le(X, 1, RING2).found
    out = border_search_rank_le(X, 2, RING2)
    assert out.found and out.witness.rank == 2


def test_stats_and_child_cap():
    out = border_search_rank_le(embed(generate("wstate"), 2), 2, RING2)
    st_ = out.stats
    assert st_.nodes[0] == 1
    assert set(st_.terminations) <= {"too_long", "zero", "rank1", "exhausted"}
    for depth, c in st_.max_children.items():
        assert c <= 2 ** (2 * 6)


def test_budget_guard():
    X = embed(generate("mm:2,2,2"), 2)
    with pytest.raises(BudgetExceeded):
        border_search_rank_le(X, 6, RING2, budget_log2=20)
    assert border_cost_log2((4, 4, 4), 2, RING2) == 2 * (3 + 6)


def test_shape_checks():
    with pytest.raises(ShapeMismatch):
        border_search_rank_le(np.zeros((2, 2, 2, 3), dtype=np.int64), 1, RING2)


def test_zero_and_negative():
    z = np.zeros((2, 2, 2, 2), dtype=np.int64)
    assert border_search_rank_le(z, 0, RING2).found
    assert not border_search_rank_le(embed(generate("wstate"), 2), -1, RING2).found


@given(arrays(np.int64, (2, 2, 2), elements=st.integers(0, 1)))
def test_h1_matches_field_rank(T):
    r = brute_rank(T)
    assert brute_rank_via_border(T, r)
    assert r == 0 or not brute_rank_via_border(T, r - 1)


def test_border_rank_at_most_rank():
    for name in ("wstate", "addmod2"):
        T = generate(name)
        assert border_rank(T, 2) <= border_rank(T, 1) == brute_rank(T)
