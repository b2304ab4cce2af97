"""Fourier-multiplier mollifiers with a compactly supported plateau profile."""

from __future__ import annotations

import numpy as np

from ..errors import PreconditionError
from ..lattice import TWO_PI


def smoothstep(s):
    """Quintic ``C^2`` step: 0 for ``s <= 0``, 1 for ``s >= 1``."""
    s = np.clip(np.asarray(s, dtype=float), 0.0, 1.0)
    return s**3 * (10.0 - 15.0 * s + 6.0 * s * s)


def plateau(p):
    """Radial profile: 1 on ``|p| <= 1/2``, exactly 0 on ``|p| >= 1``."""
    p = np.abs(np.asarray(p, dtype=float))
    out = 1.0 - smoothstep(2.0 * p - 1.0)
    return np.where(p >= 1.0, 0.0, out)


def mollify_transverse(pot, R, e):
    """Multiply ``W_N`` by ``plateau(2 pi |N_perp| / R)``, with ``N_perp`` orthogonal to ``e``."""
    if R <= 0:
        raise PreconditionError("R must be positive")
    e = np.asarray(e, dtype=float)
    pts = pot.points()
    perp = np.linalg.norm(pts - np.outer(pts @ e, e), axis=1)
    return pot.multiply(plateau(TWO_PI * perp / R))


def mollify_full(pot, r):
    """Multiply ``A_N`` by ``plateau(2 pi |N| / r)``."""
    if r <= 0:
        raise PreconditionError("r must be positive")
    return pot.multiply(plateau(TWO_PI * np.linalg.norm(pot.points(), axis=1) / r))
