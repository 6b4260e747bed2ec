import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from exactcpd.algebra import BorderRingSpec, as_field, matmul_mod
from exactcpd.errors import CertificateMismatch, ShapeMismatch, UnknownFamily
from exactcpd.tensor import (
    FAMILIES,
    Cpd,
    contract,
    cpd_eval,
    expand_cpd,
    fold,
    generate,
    is_concise,
    kron,
    make_concise,
    mm_tensor,
    rank1_decompose,
    unfold,
)

shapes3 = st.tuples(st.integers(1, 3), st.integers(1, 3), st.integers(1, 3))


def tensors(p=2, shape=shapes3):
    return shape.flatmap(lambda s: arrays(np.int64, s, elements=st.integers(0, p - 1)))


@given(tensors())
def test_fold_unfold_roundtrip(T):
    for d in range(T.ndim):
        assert np.array_equal(fold(unfold(T, d), d, T.shape), T)


@given(tensors(3), st.data())
def test_contract_matches_einsum(T, data):
    M = data.draw(arrays(np.int64, (2, T.shape[1]), elements=st.integers(0, 2)))
    assert np.array_equal(contract(M, 1, T, 3), np.einsum("aj,ijk->iak", M, T) % 3)


def test_contract_shape_errors():
    with pytest.raises(ShapeMismatch):
        contract(np.eye(2, dtype=int), 0, np.zeros((3, 2, 2)), 2)
    with pytest.raises(ShapeMismatch):
        contract(np.eye(2, dtype=int), 3, np.zeros((2, 2, 2)), 2)


def test_border_contract_multiplies_polynomials():
    ring = BorderRingSpec(as_field(2), 2)
    T = np.zeros((1, 1, 2), dtype=np.int64)
    T[0, 0] = (1, 1)
    M = np.array([[[0, 1]]])
    assert contract(M, 0, T, ring)[0, 0].tolist() == [0, 1]


def test_cpd_eval_and_mismatch():
    A = np.array([[1], [1]])
    assert np.array_equal(cpd_eval(Cpd([A, A, A])), np.ones((2, 2, 2)))
    with pytest.raises(ShapeMismatch):
        Cpd([np.zeros((2, 1)), np.zeros((2, 2))])
    with pytest.raises(ShapeMismatch):
        cpd_eval(Cpd([A, A]), (3, 2))


@pytest.mark.parametrize("p", [2, 3])
@given(data=st.data())
def test_conciseness_certificate_roundtrip(p, data):
    T = data.draw(tensors(p))
    sort = data.draw(st.booleans())
    Tc, cert = make_concise(T, p, sort_axes=sort)
    assert is_concise(Tc, p) or Tc.size == 0
    assert Tc.shape == cert.concise_shape
    # re-embed: E_0 x_0 ... E_{D-1} x_{D-1} Tc = T
    back = np.transpose(Tc, np.argsort(cert.axis_order))
    for d in range(T.ndim):
        E = cert.embedding(d)
        if E.shape[1] == 0:
            back = np.zeros(T.shape, dtype=np.int64)
            break
        back = contract(E, d, back, p)
    assert np.array_equal(back, T % p)


def test_expand_cpd_maps_witness():
    T = generate("wstate")
    Tc, cert = make_concise(np.pad(T, ((0, 1), (0, 0), (0, 0))), 2, sort_axes=True)
    # a CPD of the concise tensor lifts to one of the padded tensor
    a = rank1_decompose(Tc[:1])
    assert a is not None
    with pytest.raises(CertificateMismatch):
        expand_cpd(cert, Cpd([np.zeros((1, 1))] * 3))


@given(st.lists(st.lists(st.integers(0, 2), min_size=2, max_size=3), min_size=3, max_size=3))
def test_rank1_decompose(vecs):
    us = [np.array(v) for v in vecs]
    T = np.multiply.outer(np.multiply.outer(us[0], us[1]), us[2]) % 3
    cpd = rank1_decompose(T, 3)
    if not T.any():
        assert cpd is None
    else:
        assert cpd.rank == 1
        assert np.array_equal(cpd_eval(cpd, ring=3), T)


def test_rank1_decompose_rejects_rank2():
    assert rank1_decompose(generate("wstate")) is None


def test_mm_tensor_strassen():
    # Strassen's seven products; output axis indexes C transposed
    A = [[1, 0, 1, 0, 1, -1, 0], [0, 0, 0, 0, 1, 0, 1], [0, 1, 0, 0, 0, 1, 0], [1, 1, 0, 1, 0, 0, -1]]
    B = [[1, 1, 0, -1, 0, 1, 0], [0, 0, 1, 0, 0, 1, 0], [0, 0, 0, 1, 0, 0, 1], [1, 0, -1, 0, 1, 0, 1]]
    C = [[1, 0, 0, 1, -1, 0, 1], [0, 1, 0, 1, 0, 0, 0], [0, 0, 1, 0, 1, 0, 0], [1, -1, 1, 0, 0, 1, 0]]
    for p in (2, 3, 5):
        cpd = Cpd([np.array(A) % p, np.array(B) % p, np.array(C) % p])
        assert np.array_equal(cpd_eval(cpd, ring=p), mm_tensor(2, 2, 2))


def test_mm_tensor_shape_and_count():
    T = mm_tensor(2, 3, 4)
    assert T.shape == (6, 12, 8) and T.sum() == 24


def test_kron_matches_outer_of_cpds():
    W = generate("wstate")
    K = kron(W, W)
    assert K.shape == (4, 4, 4) and K.sum() == 9
    A = np.array([[1, 0], [0, 1]])
    I = Cpd([A, A, A])
    assert np.array_equal(kron(cpd_eval(I), cpd_eval(I)), cpd_eval(Cpd([np.kron(A, A)] * 3)))


def test_families_generate():
    for name, (_, arity) in FAMILIES.items():
        T = generate(name, *([2] * arity))
        assert T.ndim == 3 and set(np.unique(T)) <= {0, 1}
    assert np.array_equal(generate("mm:2,2,2"), mm_tensor(2, 2, 2))
    assert generate("polymul:3").shape == (5, 3, 3)
    assert generate("diagshift:3").shape == (3, 3, 3)
    assert np.array_equal(generate("lm2:1"), generate("wstate"))
    with pytest.raises(UnknownFamily):
        generate("nope")
    with pytest.raises(ValueError):
        generate("polymul")


def test_wstate_sq_is_kron():
    assert np.array_equal(generate("wstate_sq"), kron(generate("wstate"), generate("wstate")))
