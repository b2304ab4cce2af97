import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from periodic_dirac.clifford import build_clifford, opnorm
from periodic_dirac.errors import PreconditionError
from periodic_dirac.fiber import (
    BlockDiagonal,
    FiberPoint,
    assemble,
    eigenvalues,
    free_blocks,
    g_power,
    level,
    min_singular_value,
    outer_basis,
    projections,
    theta,
    theta_lprime,
    theta_multiplier,
    verify_identities,
    weights,
)
from periodic_dirac.lattice import TWO_PI, Lattice, enumerate_box
from periodic_dirac.potential import matrix_potential, random_trig_polynomial

C3 = build_clifford(3)


def oblique():
    return Lattice(np.array([[1.0, 0.0, 0.0], [0.4, 1.1, 0.0], [0.1, -0.3, 0.9]]))


def random_W(lat, rng, n=1):
    V = random_trig_polynomial(lat, rng, n, (), density=0.6, zero_mean=False, scale=0.3)
    A = random_trig_polynomial(lat, rng, n, (3,), density=0.6, scale=0.3)
    return matrix_potential(C3, V=V, A=A)


def apply_by_loops(fp, W, lat, basis, phi, M):
    """(D + W) phi by explicit convolution; output keyed by index tuple."""
    out = {}
    coeffs = W.as_dict()
    for i, n in enumerate(map(tuple, basis)):
        v = phi[i * M:(i + 1) * M]
        p = fp.k + TWO_PI * lat.dual_points(n) + 1j * fp.kappa * fp.e
        out[n] = out.get(n, 0) + C3.dot(p) @ v
        for m, w in coeffs.items():
            key = tuple(a + b for a, b in zip(n, m))
            out[key] = out.get(key, 0) + w @ v
    return out


def test_free_blocks_formula():
    lat = oblique()
    fp = FiberPoint.from_gamma([0.3, -0.1, 0.2], 2.5, lat.lattice_vector((0, 0, 1)))
    basis = enumerate_box(1, 3)
    blocks = free_blocks(fp, lat, basis, C3)
    i = 7
    p = fp.k + TWO_PI * lat.dual_points(basis[i]) + 2.5j * fp.e
    assert np.allclose(blocks[i], sum(p[j] * C3.alphas[j] for j in range(3)))


def test_assemble_matches_loop_convolution():
    rng = np.random.default_rng(0)
    lat = oblique()
    W = random_W(lat, rng)
    fp = FiberPoint.from_gamma([0.2, 0.1, -0.4], 1.5, lat.lattice_vector((1, 0, 1)))
    basis = enumerate_box(1, 3)
    rows = outer_basis(basis, W)
    mat = assemble(fp, W, lat, basis, C3, rows=rows).matrix
    phi = rng.standard_normal(len(basis) * 4) + 1j * rng.standard_normal(len(basis) * 4)
    ref = apply_by_loops(fp, W, lat, basis, phi, 4)
    got = mat @ phi
    assert set(ref) <= set(map(tuple, rows))
    for r, key in enumerate(map(tuple, rows)):
        assert np.allclose(got[4 * r:4 * r + 4], ref.get(key, 0), atol=1e-12)


def test_square_assembly_is_truncation_of_rectangular():
    rng = np.random.default_rng(1)
    lat = oblique()
    W = random_W(lat, rng)
    fp = FiberPoint.from_gamma([0.2, 0.1, -0.4], 0.0, lat.lattice_vector((0, 0, 1)))
    basis = enumerate_box(1, 3)
    rows = outer_basis(basis, W)
    rect = assemble(fp, W, lat, basis, C3, rows=rows)
    sq = assemble(fp, W, lat, basis, C3)
    pos = [i for i, r in enumerate(map(tuple, rows)) if r in set(map(tuple, basis))]
    sel = np.concatenate([np.arange(4 * i, 4 * i + 4) for i in pos])
    assert np.array_equal(rect.matrix[sel], sq.matrix)


def test_block_convolution_structure():
    rng = np.random.default_rng(2)
    lat = oblique()
    W = random_W(lat, rng)
    fp = FiberPoint.from_gamma([0.1, 0.2, 0.3], 1.0, lat.lattice_vector((0, 0, 1)))
    basis = enumerate_box(2, 3)
    op = assemble(fp, W, lat, basis, C3)
    seen = {}
    for _ in range(200):
        i, j = rng.integers(len(basis), size=2)
        if i == j:
            continue
        key = tuple(basis[i] - basis[j])
        blk = op.block(i, j)
        if key in seen:
            assert np.array_equal(blk, seen[key])
        seen[key] = blk
        assert np.array_equal(blk, W.coeff(key) if np.any(W.coeff(key)) else np.zeros((4, 4)))


def test_hermitian_at_zero_kappa():
    rng = np.random.default_rng(3)
    lat = oblique()
    W = random_W(lat, rng)
    fp = FiberPoint(np.array([0.3, 0.2, 0.1]), 0.0, np.array([1.0, 0.0, 0.0]))
    op = assemble(fp, W, lat, enumerate_box(1, 3), C3)
    assert opnorm(op.matrix - op.matrix.conj().T) < 1e-13
    ev = eigenvalues(op)
    assert np.all(np.diff(ev) >= 0)
    with pytest.raises(PreconditionError):
        eigenvalues(np.array([[0.0, 1.0], [0.0, 0.0]]))


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_free_identities(seed):
    rng = np.random.default_rng(seed)
    lat = oblique()
    fp = FiberPoint.from_gamma(rng.standard_normal(3), float(rng.uniform(0.1, 10)), rng.standard_normal(3))
    rep = verify_identities(fp, lat, enumerate_box(1, 3), C3, trials=10, rng=rng)
    assert rep.worst() < 1e-10


def test_free_sigma_min_of_full_matrix():
    lat = Lattice.cubic(3)
    fp = FiberPoint.from_gamma([0.4, -0.2, np.pi], 3.0, [0, 0, 1])
    basis = enumerate_box(2, 3)
    op = assemble(fp, None, lat, basis, C3)
    w = weights(fp, lat, basis)
    assert min_singular_value(op) == pytest.approx(w.g_minus.min(), abs=1e-10)
    assert scipy.linalg.svdvals(op.matrix)[-1] == pytest.approx(w.g_minus.min(), abs=1e-10)


def test_min_singular_value_paths():
    rng = np.random.default_rng(4)
    a = rng.standard_normal((30, 30)) + 1j * rng.standard_normal((30, 30))
    assert min_singular_value(a) == pytest.approx(scipy.linalg.svdvals(a)[-1], rel=1e-10)
    u, s, vh = np.linalg.svd(a)
    s[-1] = 1e-12
    b = (u * s) @ vh
    assert min_singular_value(b) == pytest.approx(1e-12, rel=1e-2)
    tall = rng.standard_normal((40, 30))
    assert min_singular_value(tall) == pytest.approx(scipy.linalg.svdvals(tall)[-1], rel=1e-10)


def test_degenerate_projection_convention():
    lat = Lattice.cubic(3)
    # k_perp = 0, so the N = 0 mode has no transverse direction
    fp = FiberPoint.from_gamma([0.0, 0.0, 0.5], 2.0, [0, 0, 1])
    basis = enumerate_box(1, 3)
    pr = projections(fp, lat, basis, C3)
    i0 = int(np.nonzero(np.all(basis == 0, axis=1))[0][0])
    assert pr.degenerate[i0] and pr.degenerate.sum() == 3
    eye = np.eye(4)
    assert np.array_equal(pr.plus.blocks[i0], np.zeros((4, 4)))
    assert np.array_equal(pr.minus.blocks[i0], eye)
    assert np.array_equal(pr.plus_star.blocks[i0], eye)
    assert np.array_equal(pr.minus_star.blocks[i0], np.zeros((4, 4)))
    # on a degenerate mode G- = G+ = |(p_par, kappa)| and the star identities still hold
    rep = verify_identities(fp, lat, basis, C3, trials=5)
    assert rep.worst() < 1e-10


def test_projection_blocks_sum_to_identity():
    lat = oblique()
    fp = FiberPoint.from_gamma([0.3, 0.2, 0.1], 1.0, [1, 1, 0])
    pr = projections(fp, lat, enumerate_box(1, 3), C3)
    assert np.allclose(pr.plus.blocks + pr.minus.blocks, np.eye(4))
    assert np.allclose(pr.plus_star.blocks + pr.minus_star.blocks, np.eye(4))
    v = np.arange(27 * 4, dtype=complex)
    assert np.allclose(pr.plus @ v + pr.minus @ v, v)
    assert np.allclose(BlockDiagonal(pr.plus.blocks).dense() @ v, pr.plus @ v)


def test_g_power():
    lat = Lattice.cubic(3)
    fp = FiberPoint.from_gamma([0.1, 0.2, 0.3], 2.0, [0, 0, 1])
    w = weights(fp, lat, enumerate_box(1, 3))
    assert np.allclose(g_power(w, 0.5, -1, 4), np.repeat(np.sqrt(w.g_minus), 4))
    assert np.allclose(g_power(w, 0.5j, 1, 2), np.repeat(w.g_plus ** 0.5j, 2))
    assert np.all(g_power(w, 0, 1, 1) == 1)


def test_theta_cutoffs():
    h = 64.0
    assert level(h, 2 * h**2) == 2
    assert level(h, 2 * h**2 - 1) == 1
    assert level(h, 1.0) == 0
    t = np.array([1.0, h, 1.5 * h, 2 * h, 3 * h])
    assert theta(t, h, 2).tolist() == [1.0, 1.0, 0.5, 0.0, 0.0]
    l1 = 1  # l = 3, l' = 2
    low = h ** (l1 + 1)
    vals = theta_lprime(np.array([0.25 * low, 0.5 * low, 0.75 * low, low, 2 * h**2, 3 * h**2]), h, 3, 2)
    assert vals.tolist() == [0.0, 0.0, 0.5, 1.0, 0.0, 0.0]


def test_theta_multiplier_preconditions():
    lat = Lattice.cubic(3)
    basis = enumerate_box(1, 3)
    fp = FiberPoint.from_gamma([0.1, 0.2, np.pi], 2 * 64.0**2, [0, 0, 1])
    vals = theta_multiplier(fp, lat, basis, 64.0, M=4)
    w = weights(fp, lat, basis)
    assert np.array_equal(vals, np.repeat(theta(w.g_minus, 64.0, 2), 4))
    with pytest.raises(PreconditionError):
        theta_multiplier(FiberPoint.from_gamma([0, 0, 1], 10.0, [0, 0, 1]), lat, basis, 64.0)
    with pytest.raises(PreconditionError):
        theta_multiplier(fp, lat, basis, 64.0, l_prime=2)


def test_fiber_point_validation():
    with pytest.raises(PreconditionError):
        FiberPoint(np.zeros(3), 1.0, np.array([1.0, 1.0, 0.0]))
    fp = FiberPoint.from_gamma([0.0, 0.0, np.pi / 2], 1.0, [0, 0, 2])
    assert fp.on_thomas_line()
    assert not FiberPoint.from_gamma([0.0, 0.0, 1.0], 1.0, [0, 0, 2]).on_thomas_line()
