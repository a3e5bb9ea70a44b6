"""Fourier standing-wave bases on the torus and the coefficient/grid bridge.

Axis ``k`` of a rank-m coefficient tensor indexes the modes
``phi_a(x) = exp(i q_a x) / sqrt(2 pi)`` on ``[0, 2 pi)`` with integer
frequencies ordered ``0, 1, -1, 2, -2, ...``. A product of two modes has
frequency at most ``2 max|q|``, so the uniform ``n``-point rule integrates it
exactly once ``n >= 2 max|q| + 1``; the default grid is that smallest size.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import UsageError
from .freeflow import SpectralDiagonal
from .tensor import check_dims, mask_partition, _check_mask, stack_agents
from .diagnostics import pairwise_gram


def fourier_frequencies(count: int) -> np.ndarray:
    """The first ``count`` integers in the order 0, 1, -1, 2, -2, ..."""
    if count < 1:
        raise UsageError("an axis needs at least one mode")
    j = np.arange(count)
    return np.where(j % 2 == 1, (j + 1) // 2, -(j // 2)).astype(int)


def min_grid_points(frequencies) -> int:
    m = int(np.max(np.abs(frequencies)))
    return 2 * m + 1


@dataclass(frozen=True, eq=False)
class SpectralBasis:
    frequencies: tuple
    eigenvalues: tuple
    grid_points: tuple

    def __init__(self, frequencies, eigenvalues=None, grid_points=None):
        freqs = tuple(np.asarray(q, dtype=int).ravel() for q in frequencies)
        check_dims(tuple(q.size for q in freqs))
        if eigenvalues is None:
            eigs = tuple(0.5 * q.astype(float) ** 2 for q in freqs)
        else:
            eigs = tuple(np.asarray(e, dtype=float).ravel() for e in eigenvalues)
            if len(eigs) != len(freqs) or any(e.size != q.size for e, q in zip(eigs, freqs)):
                raise UsageError("need one eigenvalue per mode on every axis")
            if not all(np.all(np.isfinite(e)) for e in eigs):
                raise UsageError("eigenvalues must be finite")
        need = tuple(min_grid_points(q) for q in freqs)
        if grid_points is None:
            grid = need
        elif np.isscalar(grid_points):
            grid = (int(grid_points),) * len(freqs)
        else:
            grid = tuple(int(g) for g in grid_points)
        if len(grid) != len(freqs):
            raise UsageError("need one grid size per axis")
        for k, (g, n) in enumerate(zip(grid, need)):
            if g < n:
                raise UsageError(f"axis {k + 1}: {g} grid points cannot resolve its modes "
                                 f"exactly (need at least {n})")
        for arr in freqs + eigs:
            arr.setflags(write=False)
        object.__setattr__(self, "frequencies", freqs)
        object.__setattr__(self, "eigenvalues", eigs)
        object.__setattr__(self, "grid_points", grid)

    @property
    def dims(self) -> tuple:
        return tuple(q.size for q in self.frequencies)

    @property
    def rank(self) -> int:
        return len(self.frequencies)

    def free_flow(self) -> SpectralDiagonal:
        return SpectralDiagonal(self.eigenvalues)

    def nodes(self, axis: int) -> np.ndarray:
        n = self.grid_points[axis]
        return 2 * np.pi * np.arange(n) / n

    def weights(self) -> tuple:
        return tuple(2 * np.pi / n for n in self.grid_points)

    def axis_matrix(self, axis: int, time: float = 0.0) -> np.ndarray:
        """``(n_grid, d)`` samples of the standing waves of one axis at ``time``."""
        x = self.nodes(axis)
        q = self.frequencies[axis]
        phase = np.exp(-1j * self.eigenvalues[axis] * time)
        return np.exp(1j * np.outer(x, q)) / np.sqrt(2 * np.pi) * phase


def fourier_basis(dims, grid_points=None, eigenvalues=None) -> SpectralBasis:
    """Free Fourier basis with ``dims[k]`` modes on axis ``k`` (eigenvalues q^2/2)."""
    dims = check_dims(dims)
    return SpectralBasis([fourier_frequencies(d) for d in dims], eigenvalues, grid_points)


@dataclass
class GridField:
    counts: tuple
    samples: np.ndarray

    def __post_init__(self):
        self.counts = tuple(int(c) for c in self.counts)
        samples = np.asarray(self.samples, dtype=np.complex128)
        if samples.size != int(np.prod(self.counts)):
            raise UsageError(f"{samples.size} samples do not fill a grid of {self.counts}")
        self.samples = samples.reshape(self.counts)

    @property
    def cell_volume(self) -> float:
        return float(np.prod([2 * np.pi / c for c in self.counts]))


def _check_coeffs(coeffs: np.ndarray, basis: SpectralBasis, batched: bool):
    dims = coeffs.shape[1:] if batched else coeffs.shape
    if tuple(dims) != basis.dims:
        raise UsageError(f"coefficients have dims {tuple(dims)}, basis has {basis.dims}")


def _synthesize(coeffs: np.ndarray, basis: SpectralBasis, time: float, batched: bool):
    off = 1 if batched else 0
    out = coeffs
    for k in range(basis.rank):
        out = np.moveaxis(np.tensordot(basis.axis_matrix(k, time), out, axes=([1], [k + off])),
                          0, k + off)
    return out


def reconstruct(coeffs, basis: SpectralBasis, time: float = 0.0) -> GridField:
    """Sample sum_a T[a] prod_k exp(-i E_a t) phi_a(x_k) on the product grid."""
    coeffs = np.asarray(coeffs, dtype=np.complex128)
    _check_coeffs(coeffs, basis, batched=False)
    return GridField(basis.grid_points, _synthesize(coeffs, basis, time, batched=False))


def reconstruct_all(coeffs, basis: SpectralBasis, time: float = 0.0) -> np.ndarray:
    """Grid samples of every agent, shape ``(N, *grid_points)``."""
    arr = stack_agents(coeffs)
    _check_coeffs(arr, basis, batched=True)
    return _synthesize(arr, basis, time, batched=True)


def quadrature_inner(a: GridField, b: GridField) -> complex:
    """Uniform-grid rule for the L^2 inner product, conjugate-linear in ``a``."""
    if a.counts != b.counts:
        raise UsageError(f"grid mismatch: {a.counts} vs {b.counts}")
    return complex(np.vdot(a.samples, b.samples) * a.cell_volume)


def bridge_residual(coeffs, basis: SpectralBasis, time: float = 0.0) -> float:
    """max_{k,j} |<psi_k, psi_j>_grid - <T_k, T_j>_F|."""
    arr = stack_agents(coeffs)
    fields = reconstruct_all(arr, basis, time)
    flat = fields.reshape(arr.shape[0], -1)
    volume = float(np.prod(basis.weights()))
    grid_gram = np.conj(flat) @ flat.T * volume
    return float(np.max(np.abs(grid_gram - pairwise_gram(arr))))


def flux_quadrature_oracle(coeffs, basis: SpectralBasis, mask, time: float = 0.0) -> float:
    """Aggregation flux of one mask evaluated on the grid.

    With A the axes where the mask is 0 and B the rest,
    ``K_j(a, a') = int (conj(psi_c(a, b)) psi_j(a', b) - conj(psi_j(a, b)) psi_c(a', b)) db``
    and the flux is ``sum_j int int |K_j|^2 da da'``.
    """
    arr = stack_agents(coeffs)
    mask = _check_mask(mask, arr.ndim - 1)
    fields = reconstruct_all(arr, basis, time)
    centre = reconstruct(arr.mean(axis=0), basis, time).samples
    zeros, ones = mask_partition(mask)
    grid = basis.grid_points
    na = int(np.prod([grid[k] for k in zeros]))
    nb = int(np.prod([grid[k] for k in ones]))
    w = basis.weights()
    wa = float(np.prod([w[k] for k in zeros]))
    wb = float(np.prod([w[k] for k in ones]))
    perm = zeros + ones
    c = centre.transpose(perm).reshape(na, nb)
    total = 0.0
    for field in fields:
        f = field.transpose(perm).reshape(na, nb)
        kernel = (np.conj(c) @ f.T - np.conj(f) @ c.T) * wb
        total += float(np.sum(np.abs(kernel) ** 2)) * wa * wa
    return total


# -- plain-text export ------------------------------------------------------

def save_grid_field(path, field: GridField) -> None:
    lines = ["axes=" + ",".join(str(c) for c in field.counts)]
    lines += [f"{z.real:.17g},{z.imag:.17g}" for z in field.samples.ravel()]
    Path(path).write_text("\n".join(lines) + "\n")


def load_grid_field(path) -> GridField:
    lines = Path(path).read_text().splitlines()
    if not lines or not lines[0].startswith("axes="):
        raise UsageError(f"{path}:1: expected header 'axes=<counts>'")
    try:
        counts = tuple(int(c) for c in lines[0][5:].split(","))
    except ValueError:
        raise UsageError(f"{path}:1: bad axis counts {lines[0][5:]!r}") from None
    values = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        try:
            re_, im_ = line.split(",")
            values.append(complex(float(re_), float(im_)))
        except ValueError:
            raise UsageError(f"{path}:{lineno}: bad sample {line!r}, expected re,im") from None
    return GridField(counts, np.array(values))
