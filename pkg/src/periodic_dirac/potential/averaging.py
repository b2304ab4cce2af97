"""Averaging measures, the averaged magnetic potential and the conditions built on it."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy import integrate

from ..errors import PreconditionError
from ..lattice import TWO_PI
from .fields import grid_points
from .norms import directional_norm


@dataclass(frozen=True)
class AveragingMeasure:
    """A probability-type measure on the line described by its Fourier transform.

    ``fourier_transform(p) = int exp(i p t) dmu(t)`` equals 1 for ``|p| < h``.
    """

    kind: str
    h: float
    fourier_transform: Callable
    total_variation_bound: float


def dirac():
    """Point mass at 0."""
    return AveragingMeasure("dirac", math.inf, lambda p: np.ones_like(np.asarray(p, dtype=float)), 1.0)


def _vp_density(t):
    # inverse transform of clip(2 - |p|, 0, 1): (4 sinc^2(t) - sinc^2(t/2)) / (2 pi)
    s1 = np.sinc(t / np.pi)
    s2 = np.sinc(t / (2 * np.pi))
    return (4.0 * s1 * s1 - s2 * s2) / TWO_PI


@lru_cache(maxsize=1)
def vallee_poussin_norm():
    """Total variation of the h = 1 de la Vallee Poussin measure (scale invariant)."""
    T = 400.0 * np.pi
    edges = np.arange(0.0, T + 1e-9, np.pi / 2)
    body = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        val, _ = integrate.quad(lambda t: abs(_vp_density(t)), a, b, limit=100)
        body += val
    # past T the density is (2/(pi t^2)) |sin^2 t - sin^2(t/2)| up to O(t^-3);
    # replace the oscillating factor by its mean over a 4 pi period
    mean, _ = integrate.quad(lambda t: abs(np.sin(t) ** 2 - np.sin(t / 2) ** 2), 0.0, 4 * np.pi, limit=200)
    tail = (2.0 / np.pi) * (mean / (4 * np.pi)) / T
    return 2.0 * (body + tail)


def vallee_poussin(h):
    """Measure with transform 1 on ``[-h, h]`` decreasing linearly to 0 at ``2h``."""
    if h <= 0:
        raise PreconditionError("h must be positive")
    h = float(h)

    def ft(p):
        return np.clip(2.0 - np.abs(np.asarray(p, dtype=float)) / h, 0.0, 1.0)

    return AveragingMeasure("vallee_poussin", h, ft, vallee_poussin_norm())


def _check_transverse(lattice, gamma, et):
    g = lattice.lattice_vector(gamma)
    et = np.asarray(et, dtype=float)
    if abs(np.linalg.norm(et) - 1) > 1e-10:
        raise PreconditionError("et must be a unit vector")
    if abs(et @ g) > 1e-10 * np.linalg.norm(g):
        raise PreconditionError("et must be orthogonal to gamma")
    return g, et


def averaged_multiplier(pot, gamma, mu, et):
    """Per-coefficient factor ``mu_hat(2 pi (N, et))`` on ``(N, gamma) = 0``, zero elsewhere."""
    m = np.asarray(gamma, dtype=np.int64)
    _check_transverse(pot.lattice, m, et)
    on_line = (pot.n @ m) == 0
    fac = np.asarray(mu.fourier_transform(TWO_PI * (pot.points() @ np.asarray(et, dtype=float))), dtype=float)
    return np.where(on_line, fac, 0.0)


def averaged_potential(A, gamma, mu, et):
    """Average of ``A`` along ``gamma`` (integer lattice coordinates) and over ``mu`` along ``et``."""
    return A.multiply(averaged_multiplier(A, gamma, mu, et))


def line_average(A, gamma):
    """Plain average of ``A`` over the closed line ``x - xi gamma``, ``xi`` in ``[0, 1]``."""
    m = np.asarray(gamma, dtype=np.int64)
    return A.multiply(((A.n @ m) == 0).astype(float))


def transverse_directions(lattice, gamma, count=8):
    """Deterministic unit vectors sampling the sphere orthogonal to ``gamma``."""
    g = lattice.lattice_vector(gamma)
    e = g / np.linalg.norm(g)
    d = lattice.dim
    # orthonormal complement via QR on [e, I]
    q, _ = np.linalg.qr(np.column_stack([e, np.eye(d)]))
    comp = q[:, 1:d].T
    if d == 2:
        return np.array([comp[0], -comp[0]])
    out = []
    for a in range(d - 1):
        for b in range(a + 1, d - 1):
            for th in np.arange(count) * TWO_PI / count:
                out.append(np.cos(th) * comp[a] + np.sin(th) * comp[b])
    return np.array(out)


@dataclass(frozen=True)
class A2Report:
    passed: bool
    theta_estimate: float
    max_modulus: float
    fourier_bound: float


def check_A2(A, gamma, mu, samples=12, directions=8):
    """Grid estimate of ``theta = |gamma| / pi * max_{x, et} |A_tilde(et; x)|``.

    Passes when the estimate is below 1.  ``fourier_bound`` is the
    coefficient sum over ``(N, gamma) = 0``, which dominates the maximum.
    """
    zero = A.coeff((0,) * A.lattice.dim)
    if np.max(np.abs(zero)) > 1e-12:
        raise PreconditionError("the magnetic potential must have zero mean")
    g = A.lattice.lattice_vector(gamma)
    glen = float(np.linalg.norm(g))
    xs = grid_points((samples,) * A.lattice.dim)
    worst = 0.0
    for et in transverse_directions(A.lattice, gamma, directions):
        At = averaged_potential(A, gamma, mu, et)
        if len(At.n):
            vals = At.evaluate(xs)
            worst = max(worst, float(np.max(np.linalg.norm(vals, axis=-1))))
    on_line = (A.n @ np.asarray(gamma)) == 0
    fb = float(np.sum(np.linalg.norm(A.values[on_line], axis=-1)))
    theta = worst * glen / np.pi
    return A2Report(theta < 1.0, theta, worst, fb * glen / np.pi)


def c_star_bound(A, gamma, samples=8):
    """``4 sqrt(pi) (ceil(2/|gamma|) |gamma|)^(1/2) |||A|||_gamma`` by line quadrature."""
    g = A.lattice.lattice_vector(gamma)
    glen = float(np.linalg.norm(g))
    if glen == 0:
        raise PreconditionError("gamma must be nonzero")
    line = directional_norm(A, gamma, samples)
    return 4.0 * math.sqrt(math.pi) * math.sqrt(math.ceil(2.0 / glen) * glen) * line
