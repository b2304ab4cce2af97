"""Galerkin matrices of the complexified fiber operator and the diagonal objects around it.

A vector on a truncated basis ``{N_1, ..., N_K}`` is stored block-major:
entry ``i * M + a`` is component ``a`` of the coefficient at ``N_i``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import PreconditionError
from .lattice import TWO_PI, spectral_weights

DEGENERATE_TOL = 1e-12


@dataclass(frozen=True)
class FiberPoint:
    """Quasi-momentum ``k`` continued by ``i kappa e``, ``e = gamma / |gamma|``."""

    k: np.ndarray
    kappa: float
    e: np.ndarray
    gamma: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "k", np.asarray(self.k, dtype=float))
        e = np.asarray(self.e, dtype=float)
        if abs(np.linalg.norm(e) - 1.0) > 1e-12:
            raise PreconditionError("e must be a unit vector")
        object.__setattr__(self, "e", e)
        if self.gamma is not None:
            object.__setattr__(self, "gamma", np.asarray(self.gamma, dtype=float))

    @classmethod
    def from_gamma(cls, k, kappa, gamma):
        g = np.asarray(gamma, dtype=float)
        return cls(k, kappa, g / np.linalg.norm(g), g)

    def on_thomas_line(self, tol=1e-10):
        return self.gamma is not None and abs(abs(self.k @ self.gamma) - math.pi) <= tol

    def momenta(self, lattice, basis):
        """Rows ``k + 2 pi N`` for the basis indices."""
        return self.k + TWO_PI * lattice.dual_points(basis)


@dataclass(frozen=True)
class SpectralWeights:
    g_minus: np.ndarray
    g_plus: np.ndarray


def weights(fp, lattice, basis):
    gm, gp = spectral_weights(fp.momenta(lattice, basis), fp.kappa, fp.e)
    return SpectralWeights(gm, gp)


def free_blocks(fp, lattice, basis, clifford):
    """Stack of ``D_N = sum_j (k_j + 2 pi N_j + i kappa e_j) alpha_j``, shape ``(K, M, M)``."""
    p = fp.momenta(lattice, basis) + 1j * fp.kappa * fp.e
    return np.einsum("kj,jab->kab", p, np.stack(clifford.alphas))


def _lookup(W, diffs):
    """Coefficients of ``W`` at integer rows ``diffs`` (zero when absent)."""
    out = np.zeros((len(diffs),) + W.value_shape, dtype=complex)
    if not len(W.n):
        return out
    span = int(max(np.max(np.abs(W.n)), np.max(np.abs(diffs)))) + 1
    radix = 2 * span + 1

    def enc(rows):
        key = np.zeros(len(rows), dtype=np.int64)
        for j in range(rows.shape[1]):
            key = key * radix + (rows[:, j] + span)
        return key

    wk = enc(W.n)
    order = np.argsort(wk)
    wk = wk[order]
    q = enc(diffs)
    pos = np.clip(np.searchsorted(wk, q), 0, len(wk) - 1)
    hit = wk[pos] == q
    out[hit] = W.values[order][pos[hit]]
    return out


@dataclass(frozen=True)
class FiberOperatorMatrix:
    basis: np.ndarray
    matrix: np.ndarray
    k: np.ndarray
    kappa: float
    size: int

    def block(self, i, j):
        M = self.size
        return self.matrix[i * M:(i + 1) * M, j * M:(j + 1) * M]


def assemble(fp, W, lattice, basis, clifford, rows=None):
    """Dense Galerkin matrix of ``D(k + i kappa e) + W`` on ``basis``.

    ``W`` is matrix valued (see :func:`matrix_potential`) or ``None``.
    Block ``(N, N')`` is ``delta_{NN'} D_N + W_{N - N'}``.  With ``rows``
    given, the result maps the span of ``basis`` into the span of ``rows``
    (a rectangular block matrix); ``rows`` must contain ``basis``.
    """
    basis = np.asarray(basis, dtype=np.int64)
    rows = basis if rows is None else np.asarray(rows, dtype=np.int64)
    K, R, M = len(basis), len(rows), clifford.size
    blocks = np.zeros((R, K, M, M), dtype=complex)
    if W is not None and len(W.n):
        if W.value_shape != (M, M):
            raise PreconditionError(f"potential values have shape {W.value_shape}, expected {(M, M)}")
        diffs = (rows[:, None, :] - basis[None, :, :]).reshape(-1, lattice.dim)
        blocks += _lookup(W, diffs).reshape(R, K, M, M)
    if rows is basis:
        r_idx = np.arange(K)
    else:
        r_idx = _positions(rows, basis)
    blocks[r_idx, np.arange(K)] += free_blocks(fp, lattice, basis, clifford)
    mat = blocks.transpose(0, 2, 1, 3).reshape(R * M, K * M)
    return FiberOperatorMatrix(basis, mat, fp.k, fp.kappa, M)


def _positions(rows, basis):
    table = {tuple(r): i for i, r in enumerate(rows.tolist())}
    try:
        return np.array([table[tuple(b)] for b in basis.tolist()], dtype=np.int64)
    except KeyError as exc:
        raise PreconditionError("row basis must contain the column basis") from exc


def outer_basis(basis, W):
    """Sorted union of ``basis`` and ``basis + supp W``: the range of ``D + W`` on ``basis``."""
    basis = np.asarray(basis, dtype=np.int64)
    if W is None or not len(W.n):
        return basis
    shifted = (basis[:, None, :] + W.n[None, :, :]).reshape(-1, basis.shape[1])
    return np.unique(np.concatenate([basis, shifted]), axis=0)


@dataclass(frozen=True)
class BlockDiagonal:
    """Block-diagonal operator stored as a ``(K, M, M)`` stack."""

    blocks: np.ndarray

    def dense(self):
        return scipy.linalg.block_diag(*self.blocks)

    def __matmul__(self, v):
        K, M, _ = self.blocks.shape
        v = np.asarray(v)
        if v.ndim == 1:
            return np.einsum("kab,kb->ka", self.blocks, v.reshape(K, M)).ravel()
        return np.einsum("kab,kbc->kac", self.blocks, v.reshape(K, M, -1)).reshape(K * M, -1)


@dataclass(frozen=True)
class Projections:
    plus: BlockDiagonal
    minus: BlockDiagonal
    plus_star: BlockDiagonal
    minus_star: BlockDiagonal
    degenerate: np.ndarray


def projections(fp, lattice, basis, clifford):
    """Per-mode half-spin projections; degenerate modes (``k_perp + 2 pi N_perp = 0``) use the starred rule."""
    p = fp.momenta(lattice, basis)
    perp = p - np.outer(p @ fp.e, fp.e)
    plen = np.linalg.norm(perp, axis=1)
    degenerate = plen <= DEGENERATE_TOL * np.maximum(1.0, np.linalg.norm(p, axis=1))
    M = clifford.size
    eye = np.eye(M, dtype=complex)
    ea = clifford.dot(fp.e)
    K = len(basis)
    plus = np.zeros((K, M, M), dtype=complex)
    minus = np.zeros((K, M, M), dtype=complex)
    safe = np.where(degenerate, 1.0, plen)
    et = perp / safe[:, None]
    prods = np.einsum("ab,kbc->kac", ea, np.einsum("kj,jab->kab", et, np.stack(clifford.alphas)))
    nd = ~degenerate
    plus[nd] = 0.5 * (eye - 1j * prods[nd])
    minus[nd] = 0.5 * (eye + 1j * prods[nd])
    minus[degenerate] = eye
    plus_star = plus.copy()
    minus_star = minus.copy()
    plus_star[degenerate] = eye
    minus_star[degenerate] = 0.0
    return Projections(BlockDiagonal(plus), BlockDiagonal(minus), BlockDiagonal(plus_star),
                       BlockDiagonal(minus_star), degenerate)


def g_power(w, zeta, sign, M):
    """Diagonal of ``G_sign^zeta`` repeated over the ``M`` spinor components."""
    g = w.g_minus if sign < 0 else w.g_plus
    if np.any(g == 0) and complex(zeta).real < 0:
        raise PreconditionError("zero weight raised to a power with negative real part")
    if zeta == 0:
        vals = np.ones_like(g)
    else:
        vals = np.power(g.astype(complex) if np.iscomplexobj(zeta) else g, zeta)
    return np.repeat(vals, M)


def level(h, kappa):
    """Largest integer ``l`` with ``2 h^l <= kappa`` (0 if none)."""
    l = 0
    while 2.0 * h ** (l + 1) <= kappa:
        l += 1
    return l


def theta(t, h, l):
    """Cutoff equal to 1 up to ``h^(l-1)``, linear down to 0 at ``2 h^(l-1)``."""
    t = np.asarray(t, dtype=float)
    top = float(h) ** (l - 1)
    return np.clip(2.0 - t / top, 0.0, 1.0)


def theta_lprime(t, h, l, l_prime):
    """Band cutoff supported on ``(h^(l1+1)/2, 2 h^(l-1)]`` with ``l1 = l - l_prime``."""
    t = np.asarray(t, dtype=float)
    l1 = l - l_prime
    low = float(h) ** (l1 + 1)
    rise = np.clip(-1.0 + 2.0 * t / low, 0.0, 1.0)
    return np.minimum(rise, theta(t, h, l))


def theta_multiplier(fp, lattice, basis, h, l=None, l_prime=None, M=1):
    """Diagonal multiplier ``Theta(G-_N)`` (or the ``l_prime`` band variant)."""
    kappa = fp.kappa
    if l is None:
        l = level(h, kappa)
    if l_prime is None:
        if l < 1 or 2.0 * h**l > kappa:
            raise PreconditionError("need 2 h^l <= kappa with l >= 1")
    else:
        if l_prime < 2 or kappa < 2.0 * h ** (l_prime + 1):
            raise PreconditionError("need l' >= 2 and kappa >= 2 h^(l'+1)")
        l = level(h, kappa)
    gm = weights(fp, lattice, basis).g_minus
    vals = theta(gm, h, l) if l_prime is None else theta_lprime(gm, h, l, l_prime)
    return np.repeat(vals, M)


def min_singular_value(mat):
    """Smallest singular value.

    Uses the lowest eigenvalue of the Gram matrix, which is cheaper than a
    full SVD and accurate to about ``eps * ||A||^2 / sigma_min``; nearly
    singular inputs fall back to the SVD.
    """
    m = mat.matrix if isinstance(mat, FiberOperatorMatrix) else np.asarray(mat)
    if m.shape[0] < m.shape[1]:
        m = m.conj().T
    gram = m.conj().T @ m
    low = float(scipy.linalg.eigh(gram, eigvals_only=True, subset_by_index=[0, 0])[0])
    top = float(np.max(np.sum(np.abs(m) ** 2, axis=0)))
    if low < 1e-8 * top:
        return float(scipy.linalg.svdvals(m)[-1])
    return math.sqrt(low)


def eigenvalues(mat, tol=1e-10):
    """Ascending eigenvalues of a Hermitian matrix."""
    m = mat.matrix if isinstance(mat, FiberOperatorMatrix) else np.asarray(mat)
    scale = max(1.0, float(np.max(np.abs(m)))) if m.size else 1.0
    if np.max(np.abs(m - m.conj().T), initial=0.0) > tol * scale:
        raise PreconditionError("matrix is not Hermitian")
    return scipy.linalg.eigvalsh(m)


@dataclass(frozen=True)
class IdentityReport:
    sandwich: float
    block_singular: float
    norm_split: float
    norm_split_star: float
    sigma_min: float
    bounds: float

    def worst(self):
        return max(self.sandwich, self.block_singular, self.norm_split, self.norm_split_star,
                   self.sigma_min, self.bounds)


def verify_identities(fp, lattice, basis, clifford, trials=100, rng=None):
    """Residuals of the free-operator identities on ``basis``.

    sandwich
        ``max ||P(+-) D_N P(+-)||`` over non-degenerate blocks.
    block_singular
        singular values of each ``D_N`` against ``{G-, G+}`` (each ``M/2`` times).
    norm_split
        relative defect of ``||D phi||^2 = ||G- P- phi||^2 + ||G+ P+ phi||^2``.
    norm_split_star
        relative defects of ``||P+_* D phi|| = ||G- P- phi||`` and ``||P-_* D phi|| = ||G+ P+ phi||``.
    sigma_min
        ``|sigma_min(D) - min G-|``.
    bounds
        violation of ``||G- P- phi|| <= ||D phi|| <= ||G+ phi||`` (relative).
    """
    rng = np.random.default_rng(0) if rng is None else rng
    M = clifford.size
    w = weights(fp, lattice, basis)
    blocks = free_blocks(fp, lattice, basis, clifford)
    pr = projections(fp, lattice, basis, clifford)
    P = pr.plus.blocks
    Q = pr.minus.blocks
    nd = ~pr.degenerate
    sandwich = 0.0
    if np.any(nd):
        sandwich = max(float(np.max(np.abs(P[nd] @ blocks[nd] @ P[nd]))),
                       float(np.max(np.abs(Q[nd] @ blocks[nd] @ Q[nd]))))
    sv = np.linalg.svd(blocks, compute_uv=False)
    expect = np.sort(np.column_stack([np.repeat(w.g_minus[:, None], M // 2, 1),
                                      np.repeat(w.g_plus[:, None], M // 2, 1)]), axis=1)[:, ::-1]
    block_sv = float(np.max(np.abs(sv - expect)))
    D = BlockDiagonal(blocks)
    gm = np.repeat(w.g_minus, M)
    gp = np.repeat(w.g_plus, M)
    split = star = bound = 0.0
    for _ in range(trials):
        phi = rng.standard_normal(len(basis) * M) + 1j * rng.standard_normal(len(basis) * M)
        phi /= np.linalg.norm(phi)
        dphi = D @ phi
        a = np.linalg.norm(gm * (pr.minus @ phi))
        b = np.linalg.norm(gp * (pr.plus @ phi))
        total = np.linalg.norm(dphi)
        split = max(split, abs(total**2 - a**2 - b**2) / total**2)
        s1 = np.linalg.norm(pr.plus_star @ dphi)
        s2 = np.linalg.norm(pr.minus_star @ dphi)
        star = max(star, abs(s1 - a) / total, abs(s2 - b) / total)
        upper = np.linalg.norm(gp * phi)
        bound = max(bound, (a - total) / total, (total - upper) / total)
    smin = float(np.min(sv))
    return IdentityReport(sandwich, block_sv, split, star, abs(smin - float(np.min(w.g_minus))),
                          max(bound, 0.0))
