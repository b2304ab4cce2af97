"""Desk-scale checks of the lower bounds for the complexified fiber operator.

Every check works on a truncated index box.  ``D + W`` maps the span of an
inner basis exactly into the span of the outer basis ``inner + supp W``,
so the left-hand sides below are computed without truncation error for
vectors in the inner span.  Quadratic-form ratios are reported both as
exact extremes (generalized eigenvalues / singular values) and as
statistics over seeded random test vectors.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import PreconditionError
from .fiber import (
    FiberPoint,
    assemble,
    min_singular_value,
    outer_basis,
    projections,
    weights,
)
from .lattice import TWO_PI, enumerate_box


def thomas_line(lattice, gamma, count):
    """``count`` momenta ``k = (pi/|gamma|) e + k_perp`` with ``k_perp`` spread over one transverse period."""
    g = lattice.lattice_vector(gamma)
    glen = float(np.linalg.norm(g))
    e = g / glen
    w = None
    for v in lattice.dual_basis:
        cand = v - (v @ e) * e
        if np.linalg.norm(cand) > 1e-8:
            w = TWO_PI * cand
            break
    ts = (np.arange(count) - (count - 1) / 2.0) / count
    return (math.pi / glen) * e + ts[:, None] * w


@dataclass(frozen=True)
class ThomasScanConfig:
    lattice: object
    clifford: object
    gamma: tuple
    k_points: np.ndarray
    kappas: tuple
    W: object = None
    n_max: int = 3
    c1: float = 0.0
    threads: int = 1
    seed: int = 0

    @property
    def gamma_vector(self):
        return self.lattice.lattice_vector(self.gamma)

    def points(self):
        out = []
        for k in self.k_points:
            for kap in self.kappas:
                fp = FiberPoint.from_gamma(k, float(kap), self.gamma_vector)
                if not fp.on_thomas_line():
                    raise PreconditionError("k samples must satisfy |(k, gamma)| = pi")
                out.append(fp)
        return out

    def basis(self):
        return enumerate_box(self.n_max, self.lattice.dim)


def _pmap(fn, items, threads):
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


@dataclass(frozen=True)
class ScanRow:
    k: np.ndarray
    kappa: float
    sigma_min: float
    min_g_minus: float
    c1: float

    @property
    def passed(self):
        return self.sigma_min >= self.c1


@dataclass(frozen=True)
class ThomasScanReport:
    rows: list

    @property
    def all_passed(self):
        return all(r.passed for r in self.rows)

    def onset(self):
        """Smallest scanned kappa from which every row passes (``None`` if never)."""
        kappas = sorted({r.kappa for r in self.rows})
        for i, kap in enumerate(kappas):
            if all(r.passed for r in self.rows if r.kappa >= kap):
                return kap
        return None


def thomas_scan(cfg):
    """Smallest singular value of the truncated ``D(k + i kappa e) + W`` over the scan grid."""
    basis = cfg.basis()

    def one(fp):
        mat = assemble(fp, cfg.W, cfg.lattice, basis, cfg.clifford)
        gm = weights(fp, cfg.lattice, basis).g_minus
        return ScanRow(fp.k, fp.kappa, min_singular_value(mat), float(gm.min()), cfg.c1)

    return ThomasScanReport(_pmap(one, cfg.points(), cfg.threads))


# -- quadratic-form checks ----------------------------------------------------

def _blocks_dense(bd, scale=None):
    blocks = bd.blocks if scale is None else bd.blocks * scale[:, None, None]
    return scipy.linalg.block_diag(*blocks)


def _pd_solve_min(lhs, rhs):
    """Smallest ``phi* lhs phi / phi* rhs phi`` with ``rhs`` positive definite."""
    return float(scipy.linalg.eigh(lhs, rhs, eigvals_only=True, subset_by_index=[0, 0])[0])


def _trial_ratios(lhs, rhs, rng, trials):
    n = lhs.shape[0]
    phi = rng.standard_normal((n, trials)) + 1j * rng.standard_normal((n, trials))
    phi /= np.linalg.norm(phi, axis=0)
    num = np.real(np.einsum("it,ij,jt->t", phi.conj(), lhs, phi))
    den = np.real(np.einsum("it,ij,jt->t", phi.conj(), rhs, phi))
    return num / den


@dataclass
class FormRow:
    k: np.ndarray
    kappa: float
    size: int
    exact: float
    trial_min: float
    trial_mean: float
    target: float
    extra: dict = field(default_factory=dict)

    @property
    def passed(self):
        return self.exact >= self.target


@dataclass(frozen=True)
class FormReport:
    rows: list
    skipped: list

    @property
    def all_passed(self):
        return all(r.passed for r in self.rows)


def _annulus(fp, lattice, basis, eps=0.5):
    p = fp.momenta(lattice, basis)
    perp = np.linalg.norm(p - np.outer(p @ fp.e, fp.e), axis=1)
    return basis[np.abs(fp.kappa - perp) < eps * fp.kappa]


def restricted_bound_check(cfg, delta, c2, a_values=None, trials=32):
    """Restricted lower bound on ``H(C(1/2))``.

    For each ``a`` in ``a_values`` (default: 13 log-spaced values in
    ``(0, C2]``) the exact minimum over the inner span of

        (||P+ (D+W) phi||^2 + a^2 ||P- (D+W) phi||^2)
        / (C2^2 ||G- P- phi||^2 + a^2 ||G+ P+ phi||^2)

    is computed; the row keeps the best ``a``.  A row passes when that
    minimum is at least ``1 - delta``.
    """
    if not 0 < delta < 1:
        raise PreconditionError("delta must lie in (0, 1)")
    if a_values is None:
        a_values = c2 * np.geomspace(1e-3, 1.0, 13)
    a_values = np.asarray(a_values, dtype=float)
    if np.any(a_values <= 0) or np.any(a_values > c2 * (1 + 1e-12)):
        raise PreconditionError("a must lie in (0, C2]")
    box = cfg.basis()
    rng = np.random.default_rng(cfg.seed)
    rows, skipped = [], []
    for fp in cfg.points():
        inner = _annulus(fp, cfg.lattice, box)
        if not len(inner):
            skipped.append((fp.k, fp.kappa))
            continue
        outer = outer_basis(inner, cfg.W)
        mat = assemble(fp, cfg.W, cfg.lattice, inner, cfg.clifford, rows=outer).matrix
        po = projections(fp, cfg.lattice, outer, cfg.clifford)
        pi = projections(fp, cfg.lattice, inner, cfg.clifford)
        w = weights(fp, cfg.lattice, inner)
        up = _blocks_dense(po.plus) @ mat
        dn = _blocks_dense(po.minus) @ mat
        hp, hm = up.conj().T @ up, dn.conj().T @ dn
        bm = _blocks_dense(pi.minus, w.g_minus**2)
        bp = _blocks_dense(pi.plus, w.g_plus**2)
        best = (-np.inf, None)
        for a in a_values:
            val = _pd_solve_min(hp + a * a * hm, c2 * c2 * bm + a * a * bp)
            if val > best[0]:
                best = (val, a)
        a = best[1]
        ratios = _trial_ratios(hp + a * a * hm, c2 * c2 * bm + a * a * bp, rng, trials)
        rows.append(FormRow(fp.k, fp.kappa, len(inner), best[0], float(ratios.min()),
                            float(ratios.mean()), 1.0 - delta, {"a": float(a)}))
    return FormReport(rows, skipped)


def _inverse_sqrt(g):
    if np.any(g <= 0):
        raise PreconditionError("a spectral weight vanishes on the outer basis")
    return g**-0.5


def weighted_bound_check(cfg, delta, c2, trials=32):
    """Weighted lower bound on the full truncation box.

    Exact minimum over the inner span of

        (C2^-1 ||G-^-1/2 P+_* (D+W) phi||^2 + ||G+^-1/2 P-_* (D+W) phi||^2)
        / (C2 ||G-^1/2 P- phi||^2 + ||G+^1/2 P+ phi||^2),

    passing when it is at least ``1 - delta``.
    """
    if not 0 < delta < 1:
        raise PreconditionError("delta must lie in (0, 1)")
    box = cfg.basis()
    rng = np.random.default_rng(cfg.seed)
    rows = []
    for fp in cfg.points():
        outer = outer_basis(box, cfg.W)
        mat = assemble(fp, cfg.W, cfg.lattice, box, cfg.clifford, rows=outer).matrix
        po = projections(fp, cfg.lattice, outer, cfg.clifford)
        pi = projections(fp, cfg.lattice, box, cfg.clifford)
        wo = weights(fp, cfg.lattice, outer)
        wi = weights(fp, cfg.lattice, box)
        left = (_blocks_dense(po.plus_star, _inverse_sqrt(wo.g_minus)) / math.sqrt(c2)
                + _blocks_dense(po.minus_star, _inverse_sqrt(wo.g_plus))) @ mat
        lhs = left.conj().T @ left
        rhs = c2 * _blocks_dense(pi.minus, wi.g_minus) + _blocks_dense(pi.plus, wi.g_plus)
        exact = _pd_solve_min(lhs, rhs)
        ratios = _trial_ratios(lhs, rhs, rng, trials)
        rows.append(FormRow(fp.k, fp.kappa, len(box), exact, float(ratios.min()),
                            float(ratios.mean()), 1.0 - delta))
    return FormReport(rows, [])


@dataclass
class SmallnessRow:
    k: np.ndarray
    kappa: float
    eps_exact: float
    eps_trials: float
    target: float

    @property
    def passed(self):
        return self.eps_exact <= self.target


def smallness_check_V(cfg, V, eps_target, trials=32):
    """Best ``eps'`` with

        ||G-^-1/2 P+_* V phi||^2 + ||G+^-1/2 P-_* V phi||^2
        <= eps'^2 (||G+^1/2 P+ phi||^2 + ||G-^1/2 P- phi||^2)

    on the truncation box: ``eps' = sigma_max(B C^-1)`` with ``B`` the
    left operator and ``C = G+^1/2 P+ + G-^1/2 P-``.  ``V`` is matrix valued.
    """
    box = cfg.basis()
    rng = np.random.default_rng(cfg.seed)
    rows = []
    for fp in cfg.points():
        outer = outer_basis(box, V)
        vmat = (assemble(fp, V, cfg.lattice, box, cfg.clifford, rows=outer).matrix
                - assemble(fp, None, cfg.lattice, box, cfg.clifford, rows=outer).matrix)
        po = projections(fp, cfg.lattice, outer, cfg.clifford)
        pi = projections(fp, cfg.lattice, box, cfg.clifford)
        wo = weights(fp, cfg.lattice, outer)
        wi = weights(fp, cfg.lattice, box)
        B = (_blocks_dense(po.plus_star, _inverse_sqrt(wo.g_minus))
             + _blocks_dense(po.minus_star, _inverse_sqrt(wo.g_plus))) @ vmat
        C = _blocks_dense(pi.plus, np.sqrt(wi.g_plus)) + _blocks_dense(pi.minus, np.sqrt(wi.g_minus))
        BC = scipy.linalg.solve(C.T, B.T).T
        exact = float(scipy.linalg.svdvals(BC)[0]) if BC.size else 0.0
        lhs = B.conj().T @ B
        rhs = C.conj().T @ C
        ratios = _trial_ratios(lhs, rhs, rng, trials)
        rows.append(SmallnessRow(fp.k, fp.kappa, exact, float(np.sqrt(max(ratios.max(), 0.0))),
                                 eps_target))
    return FormReport(rows, [])
