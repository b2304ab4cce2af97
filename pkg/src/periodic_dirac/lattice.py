"""Period lattice, reciprocal lattice and the index sets built on them.

Dual-lattice points are stored as integer coordinate arrays ``n`` of shape
``(count, d)``; the Cartesian point is ``N = n @ dual_basis``.  Every
enumeration returns its rows in lexicographic order of ``n``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import DegenerateLatticeError, IncompleteEnumerationError, PreconditionError

TWO_PI = 2.0 * np.pi


class LatticeIndex(NamedTuple):
    n: tuple
    point: np.ndarray


class SplitVector(NamedTuple):
    parallel: np.ndarray
    perpendicular: np.ndarray


def dual_basis(basis):
    """Return the biorthogonal basis ``E*`` with ``(E_j, E*_l) = delta_jl``.

    Rows of ``basis`` are the vectors ``E_j``.
    """
    b = np.asarray(basis, dtype=float)
    if b.ndim != 2 or b.shape[0] != b.shape[1]:
        raise DegenerateLatticeError(f"basis must be a square array, got shape {b.shape}")
    gram = b @ b.T
    det = np.linalg.det(gram)
    scale = np.prod(np.sum(b * b, axis=1))
    if not np.isfinite(det) or scale == 0.0 or abs(det) <= 1e-24 * scale:
        raise DegenerateLatticeError("lattice basis vectors are linearly dependent")
    # B @ D.T = I  =>  D = inv(B).T
    return np.linalg.inv(b).T


def split(x, e):
    """Split ``x`` into the parts parallel and perpendicular to the unit vector ``e``."""
    x = np.asarray(x, dtype=float)
    par = (x @ e)[..., None] * e
    return SplitVector(par, x - par)


def lex_sort(n):
    """Sort integer index rows lexicographically (first column most significant)."""
    n = np.asarray(n, dtype=np.int64)
    if len(n) == 0:
        return n.reshape(0, n.shape[-1] if n.ndim == 2 else 0)
    order = np.lexsort(n.T[::-1])
    return n[order]


def enumerate_box(n_max, d):
    """All integer d-tuples with ``|n_j| <= n_max`` in lexicographic order."""
    if n_max < 0:
        raise PreconditionError("n_max must be non-negative")
    rng = range(-n_max, n_max + 1)
    return np.array(list(itertools.product(rng, repeat=d)), dtype=np.int64).reshape(-1, d)


@dataclass(frozen=True)
class Lattice:
    """A Bravais lattice given by the rows of ``basis``."""

    basis: np.ndarray
    dual_basis: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        b = np.array(self.basis, dtype=float)
        if b.ndim != 2 or b.shape[0] < 2:
            raise PreconditionError("lattice dimension must be at least 2")
        b.setflags(write=False)
        dual = dual_basis(b)
        dual.setflags(write=False)
        object.__setattr__(self, "basis", b)
        object.__setattr__(self, "dual_basis", dual)

    @classmethod
    def cubic(cls, d, a=1.0):
        return cls(a * np.eye(d))

    @property
    def dim(self):
        return self.basis.shape[0]

    @property
    def cell_volume(self):
        return float(abs(np.linalg.det(self.basis)))

    @property
    def dual_cell_volume(self):
        return float(abs(np.linalg.det(self.dual_basis)))

    @property
    def dual_diameter(self):
        """Diameter of the dual fundamental domain ``K*`` (attained at vertices)."""
        best = 0.0
        for c in itertools.product((-1, 0, 1), repeat=self.dim):
            best = max(best, float(np.linalg.norm(np.asarray(c) @ self.dual_basis)))
        return best

    def dual_points(self, n):
        """Cartesian points ``N = sum n_j E*_j`` for integer rows ``n``."""
        return np.asarray(n, dtype=float) @ self.dual_basis

    def index(self, n):
        """Wrap one integer row as a :class:`LatticeIndex`."""
        n = tuple(int(v) for v in n)
        return LatticeIndex(n, np.asarray(n, dtype=float) @ self.dual_basis)

    def lattice_vector(self, m):
        """Cartesian lattice vector ``sum m_j E_j`` for integer coordinates ``m``."""
        return np.asarray(m, dtype=float) @ self.basis

    def fractional(self, x):
        """Coordinates of Cartesian ``x`` relative to the lattice basis."""
        return np.asarray(x, dtype=float) @ self.dual_basis.T

    def index_bound(self, radius):
        """Per-axis bound on ``|n_j|`` for every dual point with ``|N| <= radius``.

        Uses ``n_j = (N, E_j)``, so ``|n_j| <= radius * |E_j|`` exactly.
        """
        return np.floor(radius * np.linalg.norm(self.basis, axis=1) + 1e-9).astype(np.int64)

    def inscribed_radius(self, search_bound):
        """Largest radius whose dual ball is contained in the box ``|n_j| <= search_bound``."""
        return search_bound / float(np.max(np.linalg.norm(self.basis, axis=1)))


def spectral_weights(p, kappa, e):
    """Return ``(G-, G+)`` for shifted momenta ``p = k + 2 pi N`` (rows)."""
    p = np.atleast_2d(np.asarray(p, dtype=float))
    p_par = p @ e
    p_perp = np.linalg.norm(p - p_par[:, None] * e, axis=1)
    g_minus = np.sqrt(p_par**2 + (kappa - p_perp) ** 2)
    g_plus = np.sqrt(p_par**2 + (kappa + p_perp) ** 2)
    return g_minus, g_plus


def _interval_to_ints(lo, hi):
    a = np.ceil(lo - 1e-9)
    b = np.floor(hi + 1e-9)
    return a, b


def enumerate_region(lattice, k, e, par_max, perp_lo, perp_hi):
    """Dual indices with ``|p_par| <= par_max`` and ``perp_lo <= |p_perp| <= perp_hi``.

    Here ``p = k + 2 pi N``.  The scan fixes all coordinates but the last
    and solves the linear/quadratic constraints for the remaining one, so
    the cost is proportional to the number of slices plus the output size.
    """
    k = np.asarray(k, dtype=float)
    e = np.asarray(e, dtype=float)
    d = lattice.dim
    radius = (np.hypot(par_max, perp_hi) + np.linalg.norm(k)) / TWO_PI
    bound = lattice.index_bound(radius)
    ranges = [np.arange(-bound[j], bound[j] + 1) for j in range(d - 1)]
    if d > 1:
        grids = np.meshgrid(*ranges, indexing="ij")
        heads = np.stack([g.ravel() for g in grids], axis=1)
    else:
        heads = np.zeros((1, 0), dtype=np.int64)
    step = TWO_PI * lattice.dual_basis[-1]
    q = k + TWO_PI * heads @ lattice.dual_basis[: d - 1]
    q_par = q @ e
    q_perp = q - q_par[:, None] * e
    s_par = float(step @ e)
    s_perp = step - s_par * e

    tmin = np.full(len(heads), -float(bound[-1]))
    tmax = np.full(len(heads), float(bound[-1]))
    if abs(s_par) > 1e-14:
        lo = (-par_max - q_par) / s_par
        hi = (par_max - q_par) / s_par
        tmin = np.maximum(tmin, np.minimum(lo, hi))
        tmax = np.minimum(tmax, np.maximum(lo, hi))
    else:
        dead = np.abs(q_par) > par_max + 1e-9
        tmax[dead] = tmin[dead] - 1.0

    aa = float(s_perp @ s_perp)
    bb = 2.0 * (q_perp @ s_perp)
    cc = np.sum(q_perp * q_perp, axis=1)
    pieces = []
    if aa > 1e-14:
        disc = bb * bb - 4.0 * aa * (cc - perp_hi**2)
        ok = disc >= 0
        root = np.sqrt(np.where(ok, disc, 0.0))
        outer_lo = (-bb - root) / (2 * aa)
        outer_hi = (-bb + root) / (2 * aa)
        lo_all = np.maximum(tmin, outer_lo)
        hi_all = np.minimum(tmax, outer_hi)
        hi_all[~ok] = lo_all[~ok] - 1.0
        disc_in = bb * bb - 4.0 * aa * (cc - perp_lo**2)
        has_hole = (disc_in > 0) & (perp_lo > 0)
        rin = np.sqrt(np.where(has_hole, disc_in, 0.0))
        hole_lo = np.where(has_hole, (-bb - rin) / (2 * aa), np.inf)
        hole_hi = np.where(has_hole, (-bb + rin) / (2 * aa), np.inf)
        # left piece [lo_all, min(hi_all, hole_lo)], right piece [max(lo_all, hole_hi), hi_all];
        # one ulp-scale unit of slack on each side, the exact filter below decides.
        pieces.append((lo_all, np.minimum(hi_all, hole_lo + 1.0)))
        right_lo = np.where(has_hole, np.maximum(lo_all, hole_hi - 1.0), np.inf)
        pieces.append((right_lo, hi_all))
    else:
        inside = (cc <= perp_hi**2 + 1e-9) & (cc >= perp_lo**2 - 1e-9)
        hi_all = np.where(inside, tmax, tmin - 1.0)
        pieces.append((tmin, hi_all))

    rows = []
    for lo, hi in pieces:
        a, b = _interval_to_ints(lo, hi)
        valid = np.isfinite(a) & np.isfinite(b) & (b >= a)
        if not np.any(valid):
            continue
        a = a[valid].astype(np.int64)
        counts = (b[valid].astype(np.int64) - a) + 1
        owner = np.repeat(np.nonzero(valid)[0], counts)
        offsets = np.arange(counts.sum()) - np.repeat(np.cumsum(counts) - counts, counts)
        t = np.repeat(a, counts) + offsets
        rows.append(np.column_stack([heads[owner], t]))
    if not rows:
        return np.zeros((0, d), dtype=np.int64)
    cand = np.unique(np.concatenate(rows).astype(np.int64), axis=0)
    p = k + TWO_PI * lattice.dual_points(cand)
    p_par = p @ e
    p_perp = np.linalg.norm(p - p_par[:, None] * e, axis=1)
    keep = (np.abs(p_par) <= par_max) & (p_perp >= perp_lo) & (p_perp <= perp_hi)
    return lex_sort(cand[keep])


def set_C_eps(lattice, k, kappa, eps, e, search_bound):
    """Indices in the box ``|n_j| <= search_bound`` with ``|kappa - |k_perp + 2 pi N_perp|| < eps*kappa``.

    The annulus condition leaves the component along ``e`` free, so the
    set is truncated to the search box.  The box must contain the whole
    transverse disk of radius ``(1+eps)*kappa``; otherwise
    :class:`IncompleteEnumerationError` is raised.
    """
    if kappa <= 0:
        raise PreconditionError("kappa must be positive")
    if not 0 < eps < 1:
        raise PreconditionError("eps must lie in (0, 1)")
    k = np.asarray(k, dtype=float)
    needed = ((1 + eps) * kappa + np.linalg.norm(k)) / TWO_PI
    if lattice.inscribed_radius(search_bound) < needed:
        raise IncompleteEnumerationError(
            f"search_bound={search_bound} does not cover the transverse radius {(1 + eps) * kappa:.6g}"
        )
    n = enumerate_box(search_bound, lattice.dim)
    p = k + TWO_PI * lattice.dual_points(n)
    _, p_perp = split(p, e)
    keep = np.abs(kappa - np.linalg.norm(p_perp, axis=1)) < eps * kappa
    return n[keep]


@dataclass(frozen=True)
class Shells:
    """The partition ``K_1, ..., K_l`` of ``K(h^l)`` by the weight ``G-``."""

    lattice: Lattice
    k: np.ndarray
    kappa: float
    e: np.ndarray
    h: float
    l: int
    shells: tuple
    _keys: tuple = field(repr=False, default=())

    def __len__(self):
        return self.l

    def shell(self, mu):
        """Indices of the 1-based shell ``K_mu``."""
        return self.shells[mu - 1]

    @property
    def union(self):
        return lex_sort(np.concatenate(self.shells)) if self.shells else np.zeros((0, self.lattice.dim))

    def bounds(self, mu):
        """Half-open ``(lower, upper]`` range of ``G-`` for shell ``mu`` (``K_1`` has lower -inf)."""
        lower = -np.inf if mu == 1 else self.h ** (mu - 1)
        return lower, self.h**mu


def _encode(n, offset, radix):
    n = np.asarray(n, dtype=np.int64) + offset
    key = np.zeros(len(n), dtype=np.int64)
    for j in range(n.shape[1]):
        key = key * radix + n[:, j]
    return key


def count_points_K(lattice, k, kappa, e, b):
    """``K(b) = {N : G-_N <= b}`` as lexicographically sorted index rows."""
    cand = enumerate_region(lattice, k, e, b, max(kappa - b, 0.0), kappa + b)
    g_minus, _ = spectral_weights(np.asarray(k) + TWO_PI * lattice.dual_points(cand), kappa, e)
    return cand[g_minus <= b]


def shells_K(lattice, k, kappa, e, h, l):
    """Partition ``K(h^l)`` into the shells ``K_1 = K(h)`` and ``h^(mu-1) < G- <= h^mu``."""
    if h < 64 or h <= TWO_PI * lattice.dual_diameter:
        raise PreconditionError("need h >= 64 and h > 2 pi d(K*)")
    if l < 1 or 2 * h**l > kappa:
        raise PreconditionError("need l >= 1 and 2 h^l <= kappa")
    k = np.asarray(k, dtype=float)
    e = np.asarray(e, dtype=float)
    full = count_points_K(lattice, k, kappa, e, float(h) ** l)
    g_minus, _ = spectral_weights(k + TWO_PI * lattice.dual_points(full), kappa, e)
    parts = []
    for mu in range(1, l + 1):
        lower = -np.inf if mu == 1 else float(h) ** (mu - 1)
        sel = (g_minus > lower) & (g_minus <= float(h) ** mu)
        parts.append(full[sel])
    span = int(np.max(np.abs(full))) if len(full) else 0
    offset = 2 * span + 1
    radix = 4 * span + 3
    keys = tuple(np.sort(_encode(s, offset, radix)) for s in parts)
    return Shells(lattice, k, float(kappa), e, float(h), int(l), tuple(parts),
                  _keys=(offset, radix, keys))


def count_S(mu, nu, n, shells):
    """Number of ``N`` in ``K_mu`` with ``N - n`` in ``K_nu``."""
    offset, radix, keys = shells._keys
    src = shells.shell(mu)
    if len(src) == 0 or len(shells.shell(nu)) == 0:
        return 0
    shifted = src - np.asarray(n, dtype=np.int64)
    # shifted points may leave the encodable range; those cannot be shell members
    span = offset
    inside = np.all(np.abs(shifted) < span, axis=1)
    if not np.any(inside):
        return 0
    q = _encode(shifted[inside], offset, radix)
    target = keys[nu - 1]
    pos = np.searchsorted(target, q)
    pos = np.minimum(pos, len(target) - 1)
    return int(np.count_nonzero(target[pos] == q))


def growth_ratio(lattice, k, kappa, e, b):
    """Measured ``#K(b) / (v(K*)^-1 kappa b^2)``, the empirical constant of the counting bound."""
    count = len(count_points_K(lattice, k, kappa, e, b))
    return count / (kappa * b * b / lattice.dual_cell_volume)


def index_table(lattice, n, k, kappa, e):
    """Rows ``(n_1..n_d, N_1..N_d, G-, G+)`` for export."""
    pts = lattice.dual_points(n)
    gm, gp = spectral_weights(np.asarray(k) + TWO_PI * pts, kappa, e)
    return np.column_stack([np.asarray(n, dtype=float), pts, gm, gp])
