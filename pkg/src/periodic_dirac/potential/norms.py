"""Level-set and coefficient functionals of periodic fields.

Grid-based quantities are Riemann-sum estimates: each sample stands for a
cell of volume ``v(K) / #samples``.  Suprema over ``x`` are taken over the
samples and are therefore lower bounds of the true essential suprema.
"""

from __future__ import annotations

import numpy as np

from ..errors import PreconditionError
from ..lattice import TWO_PI
from .fields import SampledField, analyze, grid_points


def _sorted_desc(values):
    return np.sort(np.ravel(values))[::-1]


def _level_profile(w_desc, cell, d):
    # t * vol({|W| > t})^(1/d) approached from below at t = w_(j)
    j = np.arange(1, len(w_desc) + 1)
    return w_desc * (j * cell) ** (1.0 / d)


def weak_Ld_norm(field, d=None):
    """``sup_t t * vol({||W(x)|| > t})^(1/d)`` estimated on the samples."""
    d = field.lattice.dim if d is None else d
    if d < 2:
        raise PreconditionError("d must be at least 2")
    w = _sorted_desc(field.pointwise_norm())
    return float(np.max(_level_profile(w, field.cell_measure, d)))


def _tail(w_desc, cell, d, t_min, min_cells):
    prof = _level_profile(w_desc, cell, d)
    j = np.arange(1, len(w_desc) + 1)
    ok = (w_desc >= t_min) & (j >= min_cells)
    return float(np.max(prof[ok])) if np.any(ok) else 0.0


def _default_cells(size):
    return max(64, size // 1000)


def norm_inf(field, d=None, t_min=None, min_cells=None):
    """Tail weak-``L^d`` norm: the level profile restricted to ``t >= t_min``.

    ``min_cells`` discards level sets resolved by fewer samples, so that the
    estimate reflects the singular behaviour rather than single grid cells
    (default: 0.1% of the samples, at least 64).  ``t_min`` defaults to ten
    times the field's median norm.
    """
    d = field.lattice.dim if d is None else d
    w = _sorted_desc(field.pointwise_norm())
    if t_min is None:
        t_min = 10.0 * float(np.median(w))
    if min_cells is None:
        min_cells = _default_cells(w.size)
    return _tail(w, field.cell_measure, d, t_min, min_cells)


def norm_inf_loc(field, r, d=None, t_min=None, min_cells=None, max_centres=32):
    """Localized tail norm at the fixed ball radius ``r``.

    Balls (periodic distance) are centred at the largest samples above
    ``t_min``; the value is the largest tail norm of the field restricted
    to one of them, a lower bound for the sup over all centres.
    """
    d = field.lattice.dim if d is None else d
    norms = field.pointwise_norm().ravel()
    if t_min is None:
        t_min = 10.0 * float(np.median(norms))
    if min_cells is None:
        min_cells = _default_cells(norms.size)
    hot = np.nonzero(norms > t_min)[0]
    if not len(hot):
        return 0.0
    hot = hot[np.argsort(-norms[hot], kind="stable")]
    step = max(1, len(hot) // max_centres)
    centres = hot[::step][:max_centres]
    pts = field.fractional_points()
    basis = field.lattice.basis
    best = 0.0
    for c in centres:
        diff = pts - pts[c]
        diff -= np.round(diff)
        mask = np.linalg.norm(diff @ basis, axis=1) <= r
        w = _sorted_desc(norms[mask])
        best = max(best, _tail(w, field.cell_measure, d, t_min, min_cells))
    return best


def directional_norm(pot, gamma, samples=8, line_points=None):
    """``max_x (int_0^1 ||W(x - xi gamma)||^2 dxi)^(1/2)`` with ``x`` on a ``samples^d`` grid.

    ``gamma`` is given by integer lattice coordinates.  For scalar and
    vector fields the integrand is a trigonometric polynomial in ``xi`` and
    the uniform rule with enough points is exact.
    """
    if isinstance(pot, SampledField):
        pot = analyze(pot)
    m = np.asarray(gamma, dtype=np.int64)
    if not np.any(m):
        raise PreconditionError("gamma must be a nonzero lattice vector")
    if not len(pot.n):
        return 0.0
    freq = int(np.max(np.abs(pot.n @ m)))
    if line_points is None:
        line_points = 2 * freq + 1
        if len(pot.value_shape) == 2:
            line_points = max(8 * freq + 1, 64)
    xs = grid_points((samples,) * pot.lattice.dim)
    xi = np.arange(line_points) / line_points
    pts = (xs[:, None, :] - xi[None, :, None] * m[None, None, :]).reshape(-1, pot.lattice.dim)
    vals = pot.evaluate(pts)
    if len(pot.value_shape) == 0:
        sq = np.abs(vals) ** 2
    elif len(pot.value_shape) == 1:
        sq = np.sum(np.abs(vals) ** 2, axis=-1)
    else:
        sq = np.linalg.norm(vals, ord=2, axis=(-2, -1)) ** 2
    line = sq.reshape(len(xs), line_points).mean(axis=1)
    return float(np.sqrt(np.max(line)))


def coefficient_norms(pot):
    vals = pot.values.reshape(len(pot.n), *pot.value_shape)
    if len(pot.value_shape) == 0:
        return np.abs(vals)
    if len(pot.value_shape) == 1:
        return np.linalg.norm(vals, axis=1)
    return np.linalg.norm(vals, ord=2, axis=(-2, -1))


def beta_sigma(pot, gamma, sigma, R=0.0):
    """``v(K) sup (2 pi |N_perp|)^(2-sigma) (2 pi |N|)^sigma ||W_N||`` over ``2 pi |N_perp| >= R``.

    ``gamma`` is Cartesian; ``N_perp`` is taken relative to ``gamma/|gamma|``.
    """
    if not 0 < sigma <= 2:
        raise PreconditionError("sigma must lie in (0, 2]")
    if not len(pot.n):
        return 0.0
    e = np.asarray(gamma, dtype=float)
    e = e / np.linalg.norm(e)
    pts = pot.points()
    perp = TWO_PI * np.linalg.norm(pts - np.outer(pts @ e, e), axis=1)
    full = TWO_PI * np.linalg.norm(pts, axis=1)
    sel = perp >= R
    if not np.any(sel):
        return 0.0
    # 0**0 == 1 in numpy, matching the convention at sigma = 2
    vals = perp[sel] ** (2 - sigma) * full[sel] ** sigma * coefficient_norms(pot)[sel]
    return float(pot.lattice.cell_volume * np.max(vals))


def zygmund_tail(field, delta, a):
    """``int_{||W|| >= a} ||W||^3 ln^(1+delta) ||W|| dx`` as a Riemann sum."""
    if a < 2:
        raise PreconditionError("a must be at least 2")
    if delta <= 0:
        raise PreconditionError("delta must be positive")
    w = field.pointwise_norm()
    w = w[w >= a]
    return float(np.sum(w**3 * np.log(w) ** (1 + delta)) * field.cell_measure)


def hard_truncate(field, a):
    """Keep ``W(x)`` where ``||W(x)|| >= a`` and set it to zero elsewhere."""
    keep = field.pointwise_norm() >= a
    shape = keep.shape + (1,) * len(field.value_shape)
    return SampledField(field.lattice, np.where(keep.reshape(shape), field.values, 0), field.offset)

