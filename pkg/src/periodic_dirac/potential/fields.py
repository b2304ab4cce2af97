"""Periodic fields as finite Fourier series and as grid samples.

A field is ``W(x) = sum_N W_N exp(2 pi i (N, x))`` with ``N`` in the dual
lattice.  Writing ``x = sum xi_j E_j`` gives ``(N, x) = n . xi``, so all
evaluation is done in fractional coordinates ``xi``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from ..errors import AliasingWarning, PreconditionError
from ..lattice import TWO_PI, enumerate_box


@dataclass(frozen=True)
class FourierPotential:
    """Finitely many Fourier coefficients of a periodic field.

    Parameters
    ----------
    lattice : Lattice
    n : ndarray of int, shape (K, d)
        Dual-lattice coordinates, lexicographically sorted and unique.
    values : ndarray, shape (K, *value_shape)
        Coefficient of each mode; ``value_shape`` is ``()``, ``(d,)`` or ``(M, M)``.
    hermitian_field : bool
        Whether the field is real (scalar/vector) or Hermitian (matrix) valued.
    """

    lattice: object
    n: np.ndarray
    values: np.ndarray
    hermitian_field: bool = True

    @classmethod
    def from_modes(cls, lattice, modes, value_shape=(), hermitian_field=True):
        """Build from an iterable of ``(index_tuple, value)``; repeated indices are summed."""
        acc = {}
        for idx, val in modes:
            key = tuple(int(v) for v in idx)
            if len(key) != lattice.dim:
                raise PreconditionError(f"index {key} has wrong length for d={lattice.dim}")
            val = np.asarray(val, dtype=complex)
            if val.shape != tuple(value_shape):
                raise PreconditionError(f"coefficient shape {val.shape} != {tuple(value_shape)}")
            acc[key] = acc.get(key, 0) + val
        return cls._from_dict(lattice, acc, tuple(value_shape), hermitian_field)

    @classmethod
    def _from_dict(cls, lattice, acc, value_shape, hermitian_field):
        keys = sorted(acc)
        d = lattice.dim
        n = np.array(keys, dtype=np.int64).reshape(-1, d)
        vals = np.array([acc[k] for k in keys], dtype=complex).reshape((len(keys),) + value_shape)
        return cls(lattice, n, vals, hermitian_field)

    @classmethod
    def zero(cls, lattice, value_shape=()):
        return cls(lattice, np.zeros((0, lattice.dim), dtype=np.int64),
                   np.zeros((0,) + tuple(value_shape), dtype=complex))

    @property
    def value_shape(self):
        return self.values.shape[1:]

    def __len__(self):
        return len(self.n)

    def as_dict(self):
        return {tuple(int(v) for v in row): val for row, val in zip(self.n, self.values)}

    def coeff(self, idx):
        """Coefficient at dual index ``idx`` (zero when not stored)."""
        hit = np.nonzero(np.all(self.n == np.asarray(idx, dtype=np.int64), axis=1))[0]
        return self.values[hit[0]] if len(hit) else np.zeros(self.value_shape, dtype=complex)

    def max_index(self):
        return int(np.max(np.abs(self.n))) if len(self.n) else 0

    def points(self):
        return self.lattice.dual_points(self.n)

    def pruned(self, tol=0.0):
        """Drop coefficients whose norm is at most ``tol``."""
        if not len(self.n):
            return self
        mags = np.sqrt(np.sum(np.abs(self.values.reshape(len(self.n), -1)) ** 2, axis=1))
        keep = mags > tol
        return FourierPotential(self.lattice, self.n[keep], self.values[keep], self.hermitian_field)

    def multiply(self, factors):
        """Multiply coefficient ``N`` by ``factors[N]``; exact zeros are removed."""
        factors = np.asarray(factors)
        vals = self.values * factors.reshape((-1,) + (1,) * len(self.value_shape))
        keep = factors != 0
        return FourierPotential(self.lattice, self.n[keep], vals[keep], self.hermitian_field)

    def __add__(self, other):
        if self.value_shape != other.value_shape:
            raise PreconditionError("cannot add fields of different value shape")
        acc = self.as_dict()
        for k, v in other.as_dict().items():
            acc[k] = acc.get(k, 0) + v
        return FourierPotential._from_dict(self.lattice, acc, self.value_shape,
                                           self.hermitian_field and other.hermitian_field)

    def scaled(self, c):
        herm = self.hermitian_field and np.isreal(c)
        return FourierPotential(self.lattice, self.n, self.values * c, bool(herm))

    def symmetry_defect(self):
        """Largest ``|W_{-N} - W_N^*|`` (adjoint for matrices) over stored modes."""
        table = self.as_dict()
        worst = 0.0
        for k, v in table.items():
            mirror = table.get(tuple(-x for x in k), np.zeros_like(v))
            adj = np.conj(v.T) if v.ndim == 2 else np.conj(v)
            worst = max(worst, float(np.max(np.abs(mirror - adj))) if v.size else 0.0)
        return worst

    def evaluate(self, xi):
        """Field values at fractional coordinates ``xi`` of shape ``(P, d)``."""
        xi = np.atleast_2d(np.asarray(xi, dtype=float))
        if not len(self.n):
            return np.zeros((len(xi),) + self.value_shape, dtype=complex)
        phase = np.exp(1j * TWO_PI * (xi @ self.n.T.astype(float)))
        flat = phase @ self.values.reshape(len(self.n), -1)
        return flat.reshape((len(xi),) + self.value_shape)

    def evaluate_cartesian(self, x):
        return self.evaluate(self.lattice.fractional(x))

    def component(self, j):
        """Scalar field of the ``j``-th vector component."""
        return FourierPotential(self.lattice, self.n, self.values[:, j], self.hermitian_field)

    def project(self, direction):
        """Scalar field ``(A, direction)`` of a vector field."""
        vals = self.values @ np.asarray(direction, dtype=float)
        return FourierPotential(self.lattice, self.n, vals, self.hermitian_field)

    def rows(self):
        """Coefficient table rows: index tuple then real/imag parts of the flattened value."""
        flat = self.values.reshape(len(self.n), -1)
        parts = np.empty((len(self.n), 2 * flat.shape[1]))
        parts[:, 0::2] = flat.real
        parts[:, 1::2] = flat.imag
        return np.column_stack([self.n.astype(float), parts])


def matrix_potential(clifford, V=None, A=None):
    """``W = V - sum_j A_j alpha_j`` as a matrix-valued :class:`FourierPotential`.

    ``V`` may be scalar (multiplied by the identity) or matrix valued.
    """
    M = clifford.size
    acc = {}
    lattice = None
    herm = True
    if V is not None:
        lattice = V.lattice
        herm &= V.hermitian_field
        for k, v in V.as_dict().items():
            block = v * np.eye(M) if v.ndim == 0 else v
            acc[k] = acc.get(k, 0) + block
    if A is not None:
        lattice = A.lattice
        herm &= A.hermitian_field
        for k, v in A.as_dict().items():
            acc[k] = acc.get(k, 0) - clifford.dot(v)
    if lattice is None:
        raise PreconditionError("need at least one of V and A")
    return FourierPotential._from_dict(lattice, acc, (M, M), herm)


@dataclass(frozen=True)
class SampledField:
    """Values on the uniform grid ``xi_j = (i_j + offset) / res_j`` over the cell.

    ``values`` has shape ``(*res, *value_shape)``.
    """

    lattice: object
    values: np.ndarray
    offset: float = 0.0

    def __post_init__(self):
        if any(r < 2 for r in self.resolution):
            raise PreconditionError("grid sizes must be at least 2 per axis")

    @property
    def resolution(self):
        return self.values.shape[: self.lattice.dim]

    @property
    def value_shape(self):
        return self.values.shape[self.lattice.dim:]

    @property
    def cell_measure(self):
        return self.lattice.cell_volume / float(np.prod(self.resolution))

    def fractional_points(self):
        return grid_points(self.resolution, self.offset)

    def pointwise_norm(self):
        """Pointwise modulus / Euclidean norm / spectral norm, shape ``res``."""
        v = self.values
        k = len(self.value_shape)
        if k == 0:
            return np.abs(v)
        if k == 1:
            return np.sqrt(np.sum(np.abs(v) ** 2, axis=-1))
        return np.linalg.norm(v, ord=2, axis=(-2, -1))


def grid_points(res, offset=0.0):
    """Fractional coordinates of a uniform grid, C order, shape ``(prod(res), d)``."""
    axes = [(np.arange(r) + offset) / r for r in res]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def _fft_frequencies(res):
    return [np.rint(np.fft.fftfreq(r) * r).astype(np.int64) for r in res]


def analyze(field, tol=1e-13):
    """Fourier coefficients of a sampled field (discrete transform over the grid).

    Coefficients below ``tol`` times the largest one are dropped.  A warning
    is issued when significant content sits on an even-size Nyquist plane.
    """
    d = field.lattice.dim
    res = field.resolution
    axes = tuple(range(d))
    spec = np.fft.fftn(field.values, axes=axes) / float(np.prod(res))
    freqs = _fft_frequencies(res)
    if field.offset:
        for j, f in enumerate(freqs):
            shape = [1] * spec.ndim
            shape[j] = res[j]
            spec = spec * np.exp(-1j * TWO_PI * f * field.offset / res[j]).reshape(shape)
    mesh = np.meshgrid(*freqs, indexing="ij")
    n = np.stack([m.ravel() for m in mesh], axis=1)
    vals = spec.reshape((-1,) + field.value_shape)
    mags = np.sqrt(np.sum(np.abs(vals.reshape(len(n), -1)) ** 2, axis=1))
    cut = tol * (mags.max() if mags.size else 0.0)
    keep = mags > cut
    nyq = np.zeros(len(n), dtype=bool)
    for j, r in enumerate(res):
        if r % 2 == 0:
            nyq |= np.abs(n[:, j]) == r // 2
    if np.any(keep & nyq):
        warnings.warn("field has Fourier content on the Nyquist boundary", AliasingWarning, stacklevel=2)
    n, vals = n[keep], vals[keep]
    order = np.lexsort(n.T[::-1])
    real_like = np.isrealobj(field.values)
    return FourierPotential(field.lattice, n[order], vals[order], hermitian_field=bool(real_like))


def synthesize(pot, res, offset=0.0):
    """Sample ``pot`` on the grid ``res`` (inverse discrete transform)."""
    d = pot.lattice.dim
    res = tuple(int(r) for r in res)
    if len(res) != d:
        raise PreconditionError("grid resolution must have one entry per dimension")
    lim = np.array(res) / 2.0
    if len(pot.n) and np.any(np.abs(pot.n) >= lim):
        warnings.warn("coefficients reach the grid Nyquist range; samples alias", AliasingWarning, stacklevel=2)
    spec = np.zeros(res + pot.value_shape, dtype=complex)
    idx = tuple((pot.n % np.array(res)).T)
    vals = pot.values
    if offset and len(pot.n):
        phase = np.exp(1j * TWO_PI * offset * np.sum(pot.n / np.array(res), axis=1))
        vals = vals * phase.reshape((-1,) + (1,) * len(pot.value_shape))
    np.add.at(spec, idx, vals)
    out = np.fft.ifftn(spec, axes=tuple(range(d))) * float(np.prod(res))
    if pot.hermitian_field and len(pot.value_shape) < 2:
        out = out.real
    return SampledField(pot.lattice, out, offset)


# -- presets -----------------------------------------------------------------

def constant(lattice, value):
    """The constant field ``value`` (scalar, vector or matrix)."""
    v = np.asarray(value, dtype=complex)
    herm = bool(np.allclose(v, v.conj().T)) if v.ndim == 2 else bool(np.all(v.imag == 0))
    return FourierPotential(lattice, np.zeros((1, lattice.dim), dtype=np.int64), v[None], herm)


def single_mode(lattice, n0, amplitude):
    """Real field ``amplitude * cos(2 pi (N0, x))``; ``amplitude`` may be a vector or Hermitian matrix."""
    a = np.asarray(amplitude, dtype=complex)
    n0 = tuple(int(v) for v in n0)
    if not any(n0):
        return constant(lattice, a)
    minus = tuple(-v for v in n0)
    return FourierPotential.from_modes(lattice, [(n0, a / 2), (minus, a / 2)], a.shape)


def plane_wave(lattice, n0, amplitude):
    """Complex field ``amplitude * exp(2 pi i (N0, x))``."""
    a = np.asarray(amplitude, dtype=complex)
    return FourierPotential.from_modes(lattice, [(n0, a)], a.shape, hermitian_field=False)


def cutoff_profile(r, r1, r2):
    """1 on ``[0, r1]``, quintic smoothstep descent to 0 at ``r2``."""
    r = np.asarray(r, dtype=float)
    s = np.clip((r - r1) / (r2 - r1), 0.0, 1.0)
    return 1.0 - s**3 * (10.0 - 15.0 * s + 6.0 * s * s)


def coulomb_sampled(lattice, res, center, charge=1.0, r1=0.25, r2=0.45, offset=0.5):
    """Samples of ``Q chi(|x - x0|) / |x - x0|`` on a grid (nearest periodic image).

    ``center`` is fractional.  ``charge`` may be a scalar or a matrix ``Q``;
    for a matrix the samples are matrix valued.  With the default
    cell-centred grid and a center at a cell vertex or the cube centre, no
    sample hits the singularity.
    """
    pts = grid_points(res, offset)
    diff = pts - np.asarray(center, dtype=float)
    diff -= np.round(diff)
    dist = np.linalg.norm(diff @ lattice.basis, axis=1)
    if np.any(dist == 0):
        raise PreconditionError("a grid point coincides with the singularity")
    radial = cutoff_profile(dist, r1, r2) / dist
    q = np.asarray(charge, dtype=complex if np.iscomplexobj(charge) else float)
    if q.ndim == 0:
        vals = radial.reshape(tuple(res)) * q
    else:
        vals = radial.reshape(tuple(res) + (1, 1)) * q
    return SampledField(lattice, vals, offset)


def coulomb_radial_transform(q, r1, r2):
    """``4 pi int chi(r) sin(q r)/q dr`` (``4 pi int chi(r) r dr`` at ``q = 0``)."""
    q = float(q)
    # chi is 1 on [0, r1]: closed form there, quadrature on the ramp
    if q == 0.0:
        tail, _ = integrate.quad(lambda r: cutoff_profile(r, r1, r2) * r, r1, r2, limit=200)
        return 4.0 * np.pi * (0.5 * r1 * r1 + tail)
    head = (1.0 - np.cos(q * r1)) / q
    tail, _ = integrate.quad(lambda r: cutoff_profile(r, r1, r2) * np.sin(q * r), r1, r2,
                             limit=400)
    return 4.0 * np.pi * (head + tail) / q


def coulomb_series(lattice, n_max, center, charge=1.0, r1=0.25, r2=0.45):
    """Truncated Fourier series of the cut-off Coulomb field (``d = 3``).

    ``W_N = v(K)^-1 exp(-2 pi i (N, x0)) Q hat_chi(2 pi |N|)`` for ``|n_j| <= n_max``.
    """
    if lattice.dim != 3:
        raise PreconditionError("the Coulomb series is defined for d = 3")
    n = enumerate_box(n_max, 3)
    pts = lattice.dual_points(n)
    q = TWO_PI * np.linalg.norm(pts, axis=1)
    cache = {}
    radial = np.empty(len(n))
    for i, qi in enumerate(np.round(q, 12)):
        if qi not in cache:
            cache[qi] = coulomb_radial_transform(qi, r1, r2)
        radial[i] = cache[qi]
    phase = np.exp(-1j * TWO_PI * (n @ np.asarray(center, dtype=float)))
    scal = radial * phase / lattice.cell_volume
    Q = np.asarray(charge, dtype=complex)
    vals = scal * Q if Q.ndim == 0 else scal[:, None, None] * Q
    return FourierPotential(lattice, n, vals, True)


def random_trig_polynomial(lattice, rng, n_max, value_shape=(), density=0.6, zero_mean=True,
                           scale=1.0):
    """Random real (or Hermitian) trigonometric polynomial with ``|n_j| <= n_max``."""
    box = enumerate_box(n_max, lattice.dim)
    acc = {}
    shape = tuple(value_shape)
    for row in box:
        key = tuple(int(v) for v in row)
        neg = tuple(-v for v in key)
        if key in acc or (zero_mean and not any(key)):
            continue
        if rng.random() > density:
            continue
        c = scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))
        if key == neg:
            c = (c + (c.conj().T if len(shape) == 2 else c.conj())) / 2
            acc[key] = c
        else:
            acc[key] = c
            acc[neg] = c.conj().T if len(shape) == 2 else c.conj()
    return FourierPotential._from_dict(lattice, acc, shape, True)


def from_table(lattice, rows, value_shape):
    """Build from rows ``(n_1..n_d, re_1, im_1, re_2, im_2, ...)``."""
    d = lattice.dim
    size = int(np.prod(value_shape)) if value_shape else 1
    modes = []
    for row in rows:
        row = np.asarray(row, dtype=float)
        if len(row) != d + 2 * size:
            raise PreconditionError(f"coefficient row has {len(row)} entries, expected {d + 2 * size}")
        val = (row[d::2] + 1j * row[d + 1::2]).reshape(value_shape)
        modes.append((row[:d].astype(np.int64), val))
    pot = FourierPotential.from_modes(lattice, modes, value_shape, hermitian_field=True)
    if pot.symmetry_defect() > 1e-12:
        pot = FourierPotential(lattice, pot.n, pot.values, False)
    return pot
