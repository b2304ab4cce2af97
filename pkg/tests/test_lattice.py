import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from periodic_dirac.errors import DegenerateLatticeError, IncompleteEnumerationError, PreconditionError
from periodic_dirac.lattice import (
    TWO_PI,
    Lattice,
    count_points_K,
    count_S,
    dual_basis,
    enumerate_box,
    enumerate_region,
    growth_ratio,
    lex_sort,
    set_C_eps,
    shells_K,
    spectral_weights,
    split,
)


def random_lattice(rng, d, scale=1.0):
    b = scale * (np.eye(d) + 0.3 * rng.standard_normal((d, d)))
    return Lattice(b)


def brute_region(lattice, k, e, par_max, perp_lo, perp_hi):
    """Full box scan, box from the circumscribed ball."""
    radius = (np.hypot(par_max, perp_hi) + np.linalg.norm(k)) / TWO_PI
    m = int(np.max(lattice.index_bound(radius))) + 1
    n = enumerate_box(m, lattice.dim)
    p = k + TWO_PI * lattice.dual_points(n)
    par = p @ e
    perp = np.linalg.norm(p - np.outer(par, e), axis=1)
    keep = (np.abs(par) <= par_max) & (perp >= perp_lo) & (perp <= perp_hi)
    return lex_sort(n[keep])


def test_dual_basis_biorthogonal_oblique():
    b = np.array([[1.0, 0.0, 0.0], [0.5, np.sqrt(3) / 2, 0.0], [0.2, 0.1, 1.3]])
    d = dual_basis(b)
    assert np.allclose(b @ d.T, np.eye(3), atol=1e-14)


def test_dual_of_cubic():
    lat = Lattice.cubic(3, 2.0)
    assert np.allclose(lat.dual_basis, 0.5 * np.eye(3))
    assert lat.cell_volume == pytest.approx(8.0)
    assert lat.dual_cell_volume == pytest.approx(1 / 8)


def test_degenerate_basis_rejected():
    with pytest.raises(DegenerateLatticeError):
        Lattice(np.array([[1.0, 2.0], [2.0, 4.0]]))
    with pytest.raises(PreconditionError):
        Lattice(np.eye(1))


def test_dual_diameter_square():
    # vertices of the unit square: diameter sqrt(2)
    assert Lattice.cubic(2).dual_diameter == pytest.approx(np.sqrt(2))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([2, 3, 4]))
def test_dual_basis_property(seed, d):
    rng = np.random.default_rng(seed)
    lat = random_lattice(rng, d)
    assert np.allclose(lat.basis @ lat.dual_basis.T, np.eye(d), atol=1e-10)
    x = rng.standard_normal(d)
    assert np.allclose(lat.lattice_vector(lat.fractional(x)), x)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_split_orthogonal(seed):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((5, 3))
    e = rng.standard_normal(3)
    e /= np.linalg.norm(e)
    par, perp = split(x, e)
    assert np.allclose(par + perp, x)
    assert np.allclose(perp @ e, 0, atol=1e-12)


def test_enumerate_box_order():
    n = enumerate_box(1, 2)
    assert len(n) == 9
    assert n[0].tolist() == [-1, -1] and n[-1].tolist() == [1, 1]
    assert np.array_equal(lex_sort(n[::-1]), n)


def test_spectral_weights_values():
    e = np.array([0.0, 0.0, 1.0])
    p = np.array([[3.0, 4.0, 1.0]])
    gm, gp = spectral_weights(p, 2.0, e)
    assert gm[0] == pytest.approx(np.sqrt(1 + 9))
    assert gp[0] == pytest.approx(np.sqrt(1 + 49))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([2, 3]))
def test_enumerate_region_matches_box_scan(seed, d):
    rng = np.random.default_rng(seed)
    lat = random_lattice(rng, d)
    e = rng.standard_normal(d)
    e /= np.linalg.norm(e)
    k = rng.standard_normal(d)
    kappa = rng.uniform(5, 40)
    b = rng.uniform(1, 15)
    got = enumerate_region(lat, k, e, b, max(kappa - b, 0.0), kappa + b)
    ref = brute_region(lat, k, e, b, max(kappa - b, 0.0), kappa + b)
    assert np.array_equal(got, ref)


def test_count_points_K_matches_definition():
    rng = np.random.default_rng(3)
    lat = random_lattice(rng, 3)
    e = np.array([0.0, 0.6, 0.8])
    k = np.array([0.1, -0.2, 0.3])
    got = count_points_K(lat, k, 25.0, e, 8.0)
    box = enumerate_box(12, 3)
    gm, _ = spectral_weights(k + TWO_PI * lat.dual_points(box), 25.0, e)
    assert np.array_equal(got, lex_sort(box[gm <= 8.0]))


def test_growth_ratio_near_volume_estimate():
    # {G- <= b} is a solid torus of volume 2 pi^2 kappa b^2 in p-space, and p = 2 pi N
    # has density 1 / ((2 pi)^3 v(K*)), so #K(b) ~ kappa b^2 / (4 pi v(K*))
    lat = Lattice.cubic(3, 1.0)
    e = np.array([0.0, 0.0, 1.0])
    r = growth_ratio(lat, np.zeros(3), 200.0, e, 20.0)
    assert 4 * np.pi * r == pytest.approx(1.0, rel=0.05)


def test_set_C_eps_annulus_and_guard():
    lat = Lattice.cubic(3, 1.0)
    e = np.array([0.0, 0.0, 1.0])
    k = np.array([0.1, 0.2, np.pi])
    n = set_C_eps(lat, k, 10.0, 0.5, e, search_bound=3)
    p = k + TWO_PI * lat.dual_points(n)
    perp = np.hypot(p[:, 0], p[:, 1])
    assert np.all(np.abs(10.0 - perp) < 5.0)
    box = enumerate_box(3, 3)
    pb = k + TWO_PI * lat.dual_points(box)
    inside = np.abs(10.0 - np.hypot(pb[:, 0], pb[:, 1])) < 5.0
    assert len(n) == int(inside.sum())
    with pytest.raises(IncompleteEnumerationError):
        set_C_eps(lat, k, 100.0, 0.5, e, search_bound=3)


def brute_shells(lat, k, kappa, e, h, l, m_par):
    """Independent shell construction from a direct box scan."""
    bound = lat.index_bound((kappa + h**l + np.linalg.norm(k)) / TWO_PI + 1)
    axes = [np.arange(-b, b + 1) for b in bound]
    axes[-1] = np.arange(-m_par, m_par + 1)  # e is the last axis
    n = np.array(list(itertools.product(*axes)), dtype=np.int64)
    gm, _ = spectral_weights(k + TWO_PI * lat.dual_points(n), kappa, e)
    out = []
    for mu in range(1, l + 1):
        lo = -np.inf if mu == 1 else h ** (mu - 1)
        out.append({tuple(r) for r in n[(gm > lo) & (gm <= h**mu)]})
    return out


def test_shells_and_count_S_small_oracle():
    lat = Lattice.cubic(2, TWO_PI / 36)  # 2 pi |E*| = 36
    e = np.array([0.0, 1.0])
    k = np.array([0.3, 0.4])
    h, l = 64.0, 2
    kappa = 2 * h**2
    sh = shells_K(lat, k, kappa, e, h, l)
    ref = brute_shells(lat, k, kappa, e, h, l, m_par=int(h**l / 36) + 2)
    for mu in (1, 2):
        assert {tuple(r) for r in sh.shell(mu)} == ref[mu - 1]
    rng = np.random.default_rng(0)
    for _ in range(10):
        mu, nu = rng.integers(1, 3, size=2)
        src = sh.shell(mu)
        n = src[rng.integers(len(src))] - sh.shell(nu)[rng.integers(len(sh.shell(nu)))]
        # outer loop over K_mu, hashed inner loop over K_nu
        expect = sum(1 for a in ref[mu - 1] if tuple(np.subtract(a, n)) in ref[nu - 1])
        assert count_S(mu, nu, n, sh) == expect
    # literal pairwise double loop where one shell is small (|K_1| = 22 here)
    for mu, nu in ((1, 1), (1, 2), (2, 1)):
        a_rows, b_rows = sh.shell(mu), sh.shell(nu)
        for _ in range(5):
            n = a_rows[rng.integers(len(a_rows))] - b_rows[rng.integers(len(b_rows))]
            pairs = 0
            for a in a_rows:
                pairs += int(np.count_nonzero(np.all(a - b_rows == n, axis=1)))
            assert count_S(mu, nu, n, sh) == pairs


def test_shells_preconditions():
    lat = Lattice.cubic(3, 1.0)  # 2 pi d(K*) = 2 pi sqrt 3 < 64
    e = np.array([0.0, 0.0, 1.0])
    with pytest.raises(PreconditionError):
        shells_K(lat, np.zeros(3), 100.0, e, 32.0, 1)
    with pytest.raises(PreconditionError):
        shells_K(lat, np.zeros(3), 100.0, e, 64.0, 1)
    coarse = Lattice.cubic(3, 0.05)  # 2 pi d(K*) > 64
    with pytest.raises(PreconditionError):
        shells_K(coarse, np.zeros(3), 1000.0, e, 64.0, 1)


def test_count_S_zero_shift_is_shell_size():
    lat = Lattice.cubic(3, 1.0)
    e = np.array([0.0, 0.0, 1.0])
    sh = shells_K(lat, np.array([0.1, 0.1, 0.2]), 130.0, e, 64.0, 1)
    assert count_S(1, 1, (0, 0, 0), sh) == len(sh.shell(1))
    assert count_S(1, 1, (10**6, 0, 0), sh) == 0
