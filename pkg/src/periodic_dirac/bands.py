"""Band functions over the Brillouin zone and the spectrum they sweep out."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .fiber import FiberPoint, assemble, eigenvalues
from .lattice import TWO_PI, enumerate_box


def k_grid(lattice, res):
    """Points ``2 pi sum (i_j / res) E*_j``, ``0 <= i_j < res``, in C order."""
    axes = [np.arange(res) / res for _ in range(lattice.dim)]
    mesh = np.meshgrid(*axes, indexing="ij")
    frac = np.stack([m.ravel() for m in mesh], axis=1)
    return TWO_PI * frac @ lattice.dual_basis


@dataclass(frozen=True)
class BandStructure:
    k_points: np.ndarray
    eigenvalues: np.ndarray
    window: tuple
    n_max: int

    @property
    def bands(self):
        lo, hi = self.window
        return self.eigenvalues[:, lo:hi]

    @property
    def band_count(self):
        return self.window[1] - self.window[0]


def window_indices(total, margin=0.3):
    """Central bands after dropping ``margin`` of the spectrum at each edge."""
    lo = int(np.floor(margin * total))
    hi = total - lo
    return lo, hi


def _parallel_map(fn, items, threads):
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def compute_bands(W, lattice, clifford, n_max, grid_res, margin=0.3, threads=1):
    """Eigenvalues of the fiber matrices at ``kappa = 0`` on a ``grid_res^d`` zone grid."""
    basis = enumerate_box(n_max, lattice.dim)
    ks = k_grid(lattice, grid_res)
    e = np.eye(lattice.dim)[0]

    def one(k):
        return eigenvalues(assemble(FiberPoint(k, 0.0, e), W, lattice, basis, clifford))

    vals = np.array(_parallel_map(one, list(ks), threads))
    return BandStructure(ks, vals, window_indices(vals.shape[1], margin), n_max)


def free_band_values(lattice, clifford, n_max, k):
    """Closed-form free spectrum ``+-|k + 2 pi N|``, each ``M/2`` times, ascending."""
    basis = enumerate_box(n_max, lattice.dim)
    r = np.linalg.norm(k + TWO_PI * lattice.dual_points(basis), axis=1)
    half = clifford.size // 2
    return np.sort(np.concatenate([np.repeat(r, half), -np.repeat(r, half)]))


@dataclass(frozen=True)
class FlatBandReport:
    spreads: np.ndarray
    flags: np.ndarray
    min_gaps: np.ndarray

    @property
    def flagged(self):
        return [int(i) for i in np.nonzero(self.flags)[0]]


def flat_band_scan(bs, tol=1e-3):
    """Per retained band the oscillation ``max - min`` over the grid; bands below ``tol`` are flagged.

    ``min_gaps[i]`` is the smallest separation of bands ``i`` and ``i + 1``
    over the grid, a crossing indicator for the ascending labelling.
    """
    b = bs.bands
    spreads = b.max(axis=0) - b.min(axis=0)
    gaps = np.diff(b, axis=1).min(axis=0) if b.shape[1] > 1 else np.zeros(0)
    return FlatBandReport(spreads, spreads < tol, gaps)


def spectrum_union(bs, tol=0.0):
    """Maximal intervals covered by the retained bands."""
    b = bs.bands
    spans = sorted(zip(b.min(axis=0), b.max(axis=0)))
    out = []
    for lo, hi in spans:
        if out and lo <= out[-1][1] + tol:
            out[-1][1] = float(max(out[-1][1], hi))
        else:
            out.append([float(lo), float(hi)])
    return [tuple(iv) for iv in out]


def convergence_study(W, lattice, clifford, n_values, grid_res, count=None, threads=1):
    """Largest change of the ``count`` bands nearest zero between successive truncations."""
    results = [compute_bands(W, lattice, clifford, n, grid_res, threads=threads) for n in n_values]
    if count is None:
        count = min(r.band_count for r in results)
    diffs = []
    for a, b in zip(results[:-1], results[1:]):
        diffs.append(float(np.max(np.abs(_central(a.eigenvalues, count) - _central(b.eigenvalues, count)))))
    return diffs


def _central(vals, count):
    mid = vals.shape[1] // 2
    return vals[:, mid - count // 2: mid - count // 2 + count]
