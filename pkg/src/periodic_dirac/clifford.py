"""Dirac matrices, commutant classes and the vector-pair projections."""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce

import numpy as np

from .errors import PreconditionError

SIGMA = (
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)
I2 = np.eye(2, dtype=complex)


def opnorm(a):
    """Spectral norm."""
    return float(np.linalg.norm(a, 2)) if np.size(a) else 0.0


@dataclass(frozen=True)
class CliffordSystem:
    """Hermitian ``alphas`` with ``a_j a_l + a_l a_j = 2 delta_jl`` and an anticommuting ``beta``."""

    alphas: tuple
    beta: np.ndarray | None

    @property
    def dim(self):
        return len(self.alphas)

    @property
    def size(self):
        return self.alphas[0].shape[0]

    def dot(self, p):
        """``sum_j p_j alpha_j`` for a (possibly complex) vector ``p``."""
        return np.tensordot(np.asarray(p), np.stack(self.alphas), axes=(0, 0))

    def identity(self):
        return np.eye(self.size, dtype=complex)


def _kron(*ms):
    return reduce(np.kron, ms)


def build_clifford(d):
    """Return a Clifford system for ``R^d`` of minimal size ``2^ceil(d/2)``.

    ``d = 3`` gives the block matrices with Pauli off-diagonal blocks and
    ``beta = diag(I, -I)``; ``d = 2`` gives the Pauli matrices.  Other
    dimensions use a Jordan-Wigner tensor product construction.
    """
    if d < 2:
        raise PreconditionError("dimension must be at least 2")
    if d == 2:
        return CliffordSystem(tuple(s.copy() for s in SIGMA[:2]), SIGMA[2].copy())
    if d == 3:
        alphas = tuple(_kron(SIGMA[0], s) for s in SIGMA)
        return CliffordSystem(alphas, _kron(SIGMA[2], I2))
    n = (d + 1) // 2
    gammas = []
    for j in range(n):
        head = [SIGMA[2]] * j
        tail = [I2] * (n - j - 1)
        gammas.append(_kron(*head, SIGMA[0], *tail))
        gammas.append(_kron(*head, SIGMA[1], *tail))
    gammas.append(_kron(*([SIGMA[2]] * n)))
    # 2n+1 mutually anticommuting generators; d <= 2n so beta always exists
    return CliffordSystem(tuple(gammas[:d]), gammas[d])


def class_membership(L, s, system, tol=1e-12):
    """True iff ``L alpha_j = (-1)^s alpha_j L`` for every ``j``."""
    L = np.asarray(L)
    if L.shape != (system.size, system.size):
        raise PreconditionError(f"matrix shape {L.shape} does not match size {system.size}")
    sign = -1.0 if s else 1.0
    scale = tol * system.size * max(1.0, opnorm(L))
    return all(opnorm(L @ a - sign * a @ L) <= scale for a in system.alphas)


def projection_pair(e, et, sign, system):
    """``(I -+ i (e.alpha)(et.alpha)) / 2`` for ``sign = +1`` / ``-1``."""
    e = np.asarray(e, dtype=float)
    et = np.asarray(et, dtype=float)
    if abs(np.linalg.norm(e) - 1) > 1e-10 or abs(np.linalg.norm(et) - 1) > 1e-10:
        raise PreconditionError("e and et must be unit vectors")
    if abs(e @ et) > 1e-10:
        raise PreconditionError("e and et must be orthogonal")
    prod = system.dot(e) @ system.dot(et)
    return 0.5 * (system.identity() - sign * 1j * prod)


def check_relations(system, tol=1e-12):
    """Largest violation of the Clifford relations (zero up to rounding)."""
    eye = system.identity()
    worst = 0.0
    mats = list(system.alphas)
    for j, a in enumerate(mats):
        worst = max(worst, opnorm(a - a.conj().T))
        for l, b in enumerate(mats):
            worst = max(worst, opnorm(a @ b + b @ a - 2.0 * (j == l) * eye))
    if system.beta is not None:
        b = system.beta
        worst = max(worst, opnorm(b - b.conj().T), opnorm(b @ b - eye))
        for a in mats:
            worst = max(worst, opnorm(b @ a + a @ b))
    return worst


def matrix_rows(m):
    """Interleaved real/imag rows for CSV export."""
    m = np.asarray(m)
    out = np.empty((m.shape[0], 2 * m.shape[1]))
    out[:, 0::2] = m.real
    out[:, 1::2] = m.imag
    return out
