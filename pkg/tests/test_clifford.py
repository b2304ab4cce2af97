import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from periodic_dirac.clifford import (
    SIGMA,
    build_clifford,
    check_relations,
    class_membership,
    matrix_rows,
    opnorm,
    projection_pair,
)
from periodic_dirac.errors import PreconditionError


def orthonormal_triple(rng, d=3):
    q, _ = np.linalg.qr(rng.standard_normal((d, d)))
    return q[:, 0], q[:, 1], q[:, 2]


@pytest.mark.parametrize("d", range(2, 9))
def test_relations_and_size(d):
    c = build_clifford(d)
    assert c.dim == d
    assert c.size == 2 ** ((d + 1) // 2)
    assert check_relations(c) < 1e-12 * c.size


def test_dimension_three_explicit_form():
    c = build_clifford(3)
    zero = np.zeros((2, 2))
    for a, s in zip(c.alphas, SIGMA):
        assert np.array_equal(a, np.block([[zero, s], [s, zero]]))
    assert np.array_equal(c.beta, np.diag([1, 1, -1, -1]))


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 6))
def test_dot_squares_to_norm(seed, d):
    rng = np.random.default_rng(seed)
    c = build_clifford(d)
    p = rng.standard_normal(d) * 10
    a = c.dot(p)
    assert opnorm(a @ a - (p @ p) * c.identity()) < 1e-12 * max(1.0, p @ p)


def test_class_membership():
    c = build_clifford(3)
    assert class_membership(c.identity(), 0, c)
    assert class_membership(c.beta, 1, c)
    assert not class_membership(c.beta, 0, c)
    assert class_membership(np.kron(SIGMA[0], np.eye(2)), 0, c)
    with pytest.raises(PreconditionError):
        class_membership(np.eye(3), 0, c)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_projection_distance(seed):
    rng = np.random.default_rng(seed)
    c = build_clifford(3)
    e, a, b = orthonormal_triple(rng)
    th = rng.uniform(0, 2 * np.pi)
    b = np.cos(th) * a + np.sin(th) * b
    for s in (1, -1):
        got = opnorm(projection_pair(e, a, s, c) - projection_pair(e, b, s, c))
        assert got == pytest.approx(0.5 * np.linalg.norm(a - b), abs=1e-10)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 5))
def test_projection_is_orthogonal_projector(seed, d):
    rng = np.random.default_rng(seed)
    c = build_clifford(d)
    e, et = orthonormal_triple(rng, d)[:2] if d > 2 else (np.array([1.0, 0.0]), np.array([0.0, 1.0]))
    pp = projection_pair(e, et, 1, c)
    pm = projection_pair(e, et, -1, c)
    eye = c.identity()
    assert opnorm(pp + pm - eye) < 1e-13
    assert opnorm(pp @ pp - pp) < 1e-13
    assert opnorm(pp - pp.conj().T) < 1e-13
    assert opnorm(pp @ pm) < 1e-13
    assert np.trace(pp).real == pytest.approx(c.size / 2)


def test_projection_rejects_bad_frames():
    c = build_clifford(3)
    with pytest.raises(PreconditionError):
        projection_pair([1, 0, 0], [1, 0, 0], 1, c)
    with pytest.raises(PreconditionError):
        projection_pair([2, 0, 0], [0, 1, 0], 1, c)


def test_matrix_rows_interleaves():
    m = np.array([[1 + 2j, 3 - 4j]])
    assert matrix_rows(m).tolist() == [[1, 2, 3, -4]]


def test_dimension_one_rejected():
    with pytest.raises(PreconditionError):
        build_clifford(1)
