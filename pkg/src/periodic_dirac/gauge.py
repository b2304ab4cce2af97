"""Gauge fields that remove the oscillating part of the magnetic potential in a rotated frame.

In the frame ``E_1 = et``, ``E_2 = e`` the fields ``Phi1``, ``Phi2`` solve

    d1 Phi1 - d2 Phi2 = A_1 - At_1,    d2 Phi1 + d1 Phi2 = A_2 - At_2,

where ``At`` is the averaged potential, and they conjugate the planar part
of the Dirac operator with potential ``A`` into the one with ``At``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import PreconditionError
from .lattice import TWO_PI, enumerate_box
from .potential.averaging import averaged_potential
from .potential.fields import FourierPotential, grid_points
from .potential.mollify import smoothstep


@dataclass(frozen=True)
class Frame:
    """Orthonormal rows ``E_1 = et``, ``E_2 = e``, then completion vectors."""

    vectors: np.ndarray

    @property
    def et(self):
        return self.vectors[0]

    @property
    def e(self):
        return self.vectors[1]

    def rotation(self):
        """``T`` with ``A^(frame)_j = sum_l T_lj A_l``."""
        return self.vectors.T


def frame_from(et, e):
    """Complete ``(et, e)`` by Gram-Schmidt on the canonical basis vectors, in order."""
    et = np.asarray(et, dtype=float)
    e = np.asarray(e, dtype=float)
    if abs(np.linalg.norm(et) - 1) > 1e-10 or abs(np.linalg.norm(e) - 1) > 1e-10:
        raise PreconditionError("frame vectors must be unit vectors")
    if abs(et @ e) > 1e-10:
        raise PreconditionError("et and e must be orthogonal")
    vecs = [et, e]
    for c in np.eye(len(e)):
        if len(vecs) == len(e):
            break
        v = c - sum((c @ u) * u for u in vecs)
        n = np.linalg.norm(v)
        if n > 1e-8:
            vecs.append(v / n)
    return Frame(np.array(vecs))


def eta(s):
    """Smooth step: 0 below ``pi``, 1 above ``2 pi``."""
    return smoothstep((np.asarray(s, dtype=float) - np.pi) / np.pi)


def eta_prime(s):
    u = np.clip((np.asarray(s, dtype=float) - np.pi) / np.pi, 0.0, 1.0)
    return 30.0 * u * u * (1.0 - u) ** 2 / np.pi


_GL_X, _GL_W = np.polynomial.legendre.leggauss(16)


def _bessel_moment(rho):
    """``int_pi^{2 pi} eta'(s) J0(s rho) ds`` by composite Gauss-Legendre."""
    panels = 2 + int(np.ceil(rho / 4.0))
    edges = np.linspace(np.pi, TWO_PI, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    s = (mid[:, None] + half[:, None] * _GL_X[None, :]).ravel()
    w = (half[:, None] * _GL_W[None, :]).ravel()
    return float(np.sum(w * eta_prime(s) * special.j0(s * rho)))


def kernel_G(xi1, xi2):
    """``G(xi1, xi2) = xi1 / rho^2 * int eta'(s) J0(s rho) ds`` with ``rho = |xi|``."""
    xi1 = np.asarray(xi1, dtype=float)
    xi2 = np.asarray(xi2, dtype=float)
    rho = np.hypot(xi1, xi2)
    if np.any(rho == 0):
        raise PreconditionError("kernel is singular at the origin")
    flat = rho.ravel()
    mom = np.array([_bessel_moment(r) for r in flat]).reshape(rho.shape)
    out = xi1 / rho**2 * mom
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class GaugeFields:
    phi1: FourierPotential
    phi2: FourierPotential
    frame: Frame
    averaged: FourierPotential


def frame_components(pot, frame, j):
    """Scalar field ``(A, E_j)``."""
    return pot.project(frame.vectors[j])


def phi_fields(A, frame, mu, gamma):
    """Fourier coefficients of ``Phi1``, ``Phi2`` for the vector potential ``A``.

    ``gamma`` is in integer lattice coordinates and must be parallel to ``frame.e``.
    """
    lattice = A.lattice
    g = lattice.lattice_vector(gamma)
    if np.linalg.norm(g - (g @ frame.e) * frame.e) > 1e-10 * np.linalg.norm(g):
        raise PreconditionError("frame.e must be the direction of gamma")
    At = averaged_potential(A, gamma, mu, frame.et)
    diff = A + At.scaled(-1.0)
    pts = diff.points()
    n1 = pts @ frame.et
    n2 = pts @ frame.e
    b1 = diff.values @ frame.et
    b2 = diff.values @ frame.e
    r2 = n1 * n1 + n2 * n2
    scale = np.maximum(1.0, np.sum(pts * pts, axis=1))
    live = r2 > 1e-24 * scale
    den = np.where(live, TWO_PI * 1j * r2, 1.0)
    c1 = np.where(live, (n1 * b1 + n2 * b2) / den, 0.0)
    c2 = np.where(live, -(n2 * b1 - n1 * b2) / den, 0.0)
    herm = A.hermitian_field
    p1 = FourierPotential(lattice, diff.n, c1, herm).pruned()
    p2 = FourierPotential(lattice, diff.n, c2, herm).pruned()
    return GaugeFields(p1, p2, frame, At)


def _derivative(pot, direction):
    """Directional derivative of a scalar trigonometric polynomial."""
    fac = TWO_PI * 1j * (pot.points() @ np.asarray(direction, dtype=float))
    return FourierPotential(pot.lattice, pot.n, pot.values * fac, pot.hermitian_field)


def relation_residuals(A, gauge):
    """Coefficientwise defects of the divergence and curl relations."""
    et, e = gauge.frame.et, gauge.frame.e
    target = A + gauge.averaged.scaled(-1.0)
    div = _derivative(gauge.phi1, et) + _derivative(gauge.phi2, e).scaled(-1.0)
    curl = _derivative(gauge.phi1, e) + _derivative(gauge.phi2, et)
    r_div = div + target.project(et).scaled(-1.0)
    r_curl = curl + target.project(e).scaled(-1.0)
    scale = max(1.0, float(np.max(np.abs(target.values), initial=0.0)))
    worst_div = float(np.max(np.abs(r_div.values), initial=0.0)) / scale
    worst_curl = float(np.max(np.abs(r_curl.values), initial=0.0)) / scale
    return worst_div, worst_curl


@dataclass(frozen=True)
class SupBoundReport:
    sup_phi1: float
    sup_phi2: float
    coefficient_sum1: float
    coefficient_sum2: float
    bound: float
    passed: bool


def phi_sup_bound_check(gauge, mu_norm, c_star_h, samples=16):
    """Grid sup of ``|Phi_s|`` against ``||mu|| C*(h) / 4``."""
    xs = grid_points((samples,) * gauge.phi1.lattice.dim)
    s1 = float(np.max(np.abs(gauge.phi1.evaluate(xs)), initial=0.0))
    s2 = float(np.max(np.abs(gauge.phi2.evaluate(xs)), initial=0.0))
    bound = 0.25 * mu_norm * c_star_h
    return SupBoundReport(s1, s2, float(np.sum(np.abs(gauge.phi1.values))),
                          float(np.sum(np.abs(gauge.phi2.values))), bound, max(s1, s2) <= bound)


def kernel_scale(mu, gamma_len):
    """Frequency scale of the gauge kernel: plateau half-width over ``2 pi``, capped at ``1/|gamma|``."""
    return min(mu.h / TWO_PI, 1.0 / gamma_len)


def c_star_h(A, frames, scale, samples=6, radial=96, angular=48, rho_max=40.0):
    """Computed surrogate of ``C*(h)``.

    ``8/pi * max_{x, frame, s} int |G_s(1/scale; xi)| |A(x - xi1 et - xi2 e)| dxi``
    with ``G_1(t; xi) = G(xi/t)/t`` and ``G_2`` the argument swap.  The
    substitution ``u = scale * xi`` turns the integral into
    ``scale^-1 int |G(u)| |A(x - (u1 et + u2 e)/scale)| du``, evaluated on a
    polar Gauss grid truncated at ``|u| = rho_max``.  Maxima over ``x`` are
    taken on a ``samples^d`` grid (a lower bound).
    """
    edges = np.concatenate([[0.0], np.geomspace(0.05, rho_max, 24)])
    rx, rw = [], []
    per = max(2, radial // 24)
    gx, gw = np.polynomial.legendre.leggauss(per)
    for a, b in zip(edges[:-1], edges[1:]):
        rx.append(0.5 * (a + b) + 0.5 * (b - a) * gx)
        rw.append(0.5 * (b - a) * gw)
    rho = np.concatenate(rx)
    wr = np.concatenate(rw)
    phi = (np.arange(angular) + 0.5) * TWO_PI / angular
    wphi = TWO_PI / angular
    moments = np.array([_bessel_moment(r) for r in rho])
    c, s = np.cos(phi), np.sin(phi)
    # |G(u)| with u = rho (cos, sin): |cos| / rho * |moment|; jacobian rho
    weight1 = np.abs(c)[None, :] * np.abs(moments)[:, None] * wr[:, None] * wphi
    weight2 = np.abs(s)[None, :] * np.abs(moments)[:, None] * wr[:, None] * wphi
    u1 = (rho[:, None] * c[None, :]).ravel()
    u2 = (rho[:, None] * s[None, :]).ravel()
    lattice = A.lattice
    xs = grid_points((samples,) * lattice.dim) @ lattice.basis
    best = 0.0
    for fr in frames:
        shift = (np.outer(u1, fr.et) + np.outer(u2, fr.e)) / scale
        for x in xs:
            vals = np.linalg.norm(A.evaluate_cartesian(x - shift), axis=-1)
            vals = vals.reshape(len(rho), len(phi))
            best = max(best, float(np.sum(weight1 * vals)), float(np.sum(weight2 * vals)))
    return 8.0 / np.pi * best / scale


def _spectral_grid(lattice, n):
    res = (n,) * lattice.dim
    freqs = [np.rint(np.fft.fftfreq(n) * n) for _ in res]
    mesh = np.meshgrid(*freqs, indexing="ij")
    nvec = np.stack([m for m in mesh], axis=-1)
    return res, nvec @ lattice.dual_basis


def _apply_planar(psi, res, Npts, alphas, frame, k, kappa, a1, a2):
    """``(k1 - i d1 - a1) al1 psi + (k2 + i kappa - i d2 - a2) al2 psi`` on a grid.

    ``psi`` has shape ``(*res, M)``; ``a1``, ``a2`` are grid arrays.
    """
    d = len(res)
    axes = tuple(range(d))
    spec = np.fft.fftn(psi, axes=axes)
    out = 0.0
    for j, (al, shift, a) in enumerate(((alphas[0], 0.0, a1), (alphas[1], kappa, a2))):
        v = frame.vectors[j]
        deriv = np.fft.ifftn(spec * (TWO_PI * 1j * (Npts @ v))[..., None], axes=axes)
        term = (k @ v + 1j * shift) * psi - 1j * deriv - a[..., None] * psi
        out = out + term @ al.T
    return out


@dataclass(frozen=True)
class GaugeIdentityReport:
    grids: tuple
    residuals: tuple
    commutation: float

    @property
    def ratios(self):
        r = self.residuals
        return tuple(r[i] / r[i + 1] if r[i + 1] > 0 else np.inf for i in range(len(r) - 1))

    def monotone(self, factor=2.0):
        return all(q >= factor for q in self.ratios)


def verify_gauge_identity(fp, A, gauge, clifford, grids=(6, 8, 12, 16), modes=1, rng=None):
    """Pseudospectral residual of the gauge conjugation identity on refined grids.

    Both sides act on a fixed random spinor trigonometric polynomial with
    ``|n_j| <= modes``; derivatives are FFT derivatives.  The residual is
    ``max|LHS - RHS| / max|LHS|`` per grid.  ``commutation`` is the largest
    defect of ``D P+ = P- D`` (and vice versa) over the grids.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    lattice = A.lattice
    frame = gauge.frame
    M = clifford.size
    al1 = clifford.dot(frame.et)
    al2 = clifford.dot(frame.e)
    J = 1j * al1 @ al2
    eye = np.eye(M)
    box = enumerate_box(modes, lattice.dim)
    amp = rng.standard_normal((len(box), M)) + 1j * rng.standard_normal((len(box), M))
    psi_pot = FourierPotential(lattice, box, amp, False)
    A1 = frame_components(A, frame, 0)
    A2 = frame_components(A, frame, 1)
    T1 = frame_components(gauge.averaged, frame, 0)
    T2 = frame_components(gauge.averaged, frame, 1)
    residuals = []
    comm = 0.0
    plus = 0.5 * (eye + 1j * al1 @ al2)
    minus = 0.5 * (eye - 1j * al1 @ al2)
    for n in grids:
        res, Npts = _spectral_grid(lattice, n)
        xs = grid_points(res)

        def ev(p):
            return p.evaluate(xs).reshape(res + p.value_shape)

        psi = ev(psi_pot)
        a1, a2, t1, t2 = (ev(p).real for p in (A1, A2, T1, T2))
        f1 = ev(gauge.phi1).real
        f2 = ev(gauge.phi2).real
        lhs = _apply_planar(psi, res, Npts, (al1, al2), frame, fp.k, fp.kappa, a1, a2)

        def hyper(v, sign):
            # exp(-sign J f2) = cosh(f2) I - sign sinh(f2) J
            return np.cosh(f2)[..., None] * v - sign * np.sinh(f2)[..., None] * (v @ J.T)

        u = hyper(np.exp(-1j * f1)[..., None] * psi, 1.0)
        du = _apply_planar(u, res, Npts, (al1, al2), frame, fp.k, fp.kappa, t1, t2)
        rhs = hyper(np.exp(1j * f1)[..., None] * du, 1.0)
        residuals.append(float(np.max(np.abs(lhs - rhs)) / np.max(np.abs(lhs))))
        for P, Q in ((plus, minus), (minus, plus)):
            left = _apply_planar(psi @ P.T, res, Npts, (al1, al2), frame, fp.k, fp.kappa, a1, a2)
            comm = max(comm, float(np.max(np.abs(left - lhs @ Q.T)) / np.max(np.abs(lhs))))
    return GaugeIdentityReport(tuple(grids), tuple(residuals), comm)
