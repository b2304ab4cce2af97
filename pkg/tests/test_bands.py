import numpy as np
import pytest

from periodic_dirac.bands import (
    compute_bands,
    convergence_study,
    flat_band_scan,
    free_band_values,
    k_grid,
    spectrum_union,
    window_indices,
)
from periodic_dirac.clifford import build_clifford
from periodic_dirac.lattice import TWO_PI, Lattice, enumerate_box
from periodic_dirac.potential import constant, matrix_potential, random_trig_polynomial

C3 = build_clifford(3)
C2 = build_clifford(2)


def test_k_grid_covers_zone():
    lat = Lattice(np.array([[1.0, 0.0], [0.5, 1.0]]))
    ks = k_grid(lat, 4)
    assert ks.shape == (16, 2)
    frac = ks @ lat.basis.T / TWO_PI
    assert np.all((frac >= -1e-12) & (frac < 1))


def test_free_bands_closed_form():
    lat = Lattice(np.array([[1.0, 0.0, 0.0], [0.3, 1.2, 0.0], [0.0, 0.2, 0.8]]))
    bs = compute_bands(None, lat, C3, 1, 2)
    for k, vals in zip(bs.k_points, bs.eigenvalues):
        assert np.allclose(vals, free_band_values(lat, C3, 1, k), atol=1e-12)


def test_mass_bands_closed_form():
    lat = Lattice.cubic(3)
    m = 0.7
    W = matrix_potential(C3, V=constant(lat, m * C3.beta))
    bs = compute_bands(W, lat, C3, 1, 2)
    for k, vals in zip(bs.k_points, bs.eigenvalues):
        r = np.linalg.norm(k + TWO_PI * lat.dual_points(enumerate_box(1, 3)), axis=1)
        e = np.sqrt(r**2 + m * m)
        ref = np.sort(np.concatenate([np.repeat(e, 2), -np.repeat(e, 2)]))
        assert np.allclose(vals, ref, atol=1e-12)
    union = spectrum_union(bs)
    # k = 0 is on the grid, so the gap edges are attained exactly
    assert all(hi <= -m + 1e-12 or lo >= m - 1e-12 for lo, hi in union)
    assert any(hi == pytest.approx(-m, abs=1e-12) for _, hi in union)
    assert any(lo == pytest.approx(m, abs=1e-12) for lo, _ in union)


def test_constant_scalar_shifts_spectrum():
    lat = Lattice.cubic(2)
    W = matrix_potential(C2, V=constant(lat, 0.25))
    a = compute_bands(None, lat, C2, 2, 3)
    b = compute_bands(W, lat, C2, 2, 3)
    assert np.allclose(b.eigenvalues, a.eigenvalues + 0.25, atol=1e-12)


def test_threads_do_not_change_results():
    rng = np.random.default_rng(0)
    lat = Lattice.cubic(3)
    W = matrix_potential(C3, V=random_trig_polynomial(lat, rng, 1, (), density=0.5, scale=0.2))
    a = compute_bands(W, lat, C3, 1, 2, threads=1)
    b = compute_bands(W, lat, C3, 1, 2, threads=3)
    assert np.array_equal(a.eigenvalues, b.eigenvalues)


def test_window_and_flat_scan():
    assert window_indices(100, 0.3) == (30, 70)
    lat = Lattice.cubic(2)
    bs = compute_bands(None, lat, C2, 1, 4)
    rep = flat_band_scan(bs, 1e-3)
    assert rep.flagged == []
    assert len(rep.spreads) == bs.band_count
    # a constant matrix field in d = 2 makes every band flat: fake it with one k-point
    single = compute_bands(None, lat, C2, 1, 1)
    assert flat_band_scan(single, 1e-3).flagged == list(range(single.band_count))


def test_spectrum_union_merges():
    lat = Lattice.cubic(2)
    bs = compute_bands(None, lat, C2, 1, 4)
    union = spectrum_union(bs)
    lows = [a for a, _ in union]
    assert lows == sorted(lows)
    for (a, b), (c, d) in zip(union, union[1:]):
        assert b < c


def test_convergence_free_central_bands():
    lat = Lattice.cubic(2)
    diffs = convergence_study(None, lat, C2, [1, 2, 3], 3, count=4)
    assert max(diffs) < 1e-12
