"""Slow, independently coded reference formulas used as oracles.

Nothing here calls the matricized kernels of :mod:`lohe.tensor` or the master
right-hand side of :mod:`lohe.models`; each routine spells out its formula.
"""

from __future__ import annotations

import itertools

import numpy as np


def naive_contraction(first, conj_middle, last, mask) -> np.ndarray:
    """Explicit (2m)-fold loop for sum_{a1} X[a_i] conj(Y[a1]) Z[a_(1-i)]."""
    x = np.asarray(first, dtype=complex)
    y = np.asarray(conj_middle, dtype=complex)
    z = np.asarray(last, dtype=complex)
    bits = [int(c) for c in mask] if isinstance(mask, str) else [int(b) for b in mask]
    dims = x.shape
    out = np.zeros(dims, dtype=complex)
    ranges = [range(d) for d in dims]
    for a0 in itertools.product(*ranges):
        acc = 0j
        for a1 in itertools.product(*ranges):
            ix = tuple(a1[k] if bits[k] else a0[k] for k in range(len(dims)))
            iz = tuple(a0[k] if bits[k] else a1[k] for k in range(len(dims)))
            acc += x[ix] * np.conj(y[a1]) * z[iz]
        out[a0] = acc
    return out


def _inner(a, b) -> complex:
    return complex(np.sum(np.conj(a) * b))


def sphere_rhs(vectors, kappa0: float, kappa1: float, omega=None) -> np.ndarray:
    """Complex Lohe sphere: Omega v + k0 (v_c<v,v> - <v_c,v> v) + k1 (<v,v_c> - <v_c,v>) v."""
    v = np.asarray(vectors, dtype=complex)
    vc = v.mean(axis=0)
    out = np.empty_like(v)
    for j, vj in enumerate(v):
        term = kappa0 * (vc * _inner(vj, vj) - _inner(vc, vj) * vj)
        term += kappa1 * (_inner(vj, vc) - _inner(vc, vj)) * vj
        if omega is not None:
            term += np.asarray(omega) @ vj
        out[j] = term
    return out


def matrix_rhs(matrices, kappa0: float, kappa1: float, generator=None) -> np.ndarray:
    """Lohe matrix: k0 (A_c A^H A - A A_c^H A) + k1 (A A^H A_c - A A_c^H A) plus G vec(A)."""
    a = np.asarray(matrices, dtype=complex)
    ac = a.mean(axis=0)
    out = np.empty_like(a)
    for j, aj in enumerate(a):
        h = aj.conj().T
        hc = ac.conj().T
        term = kappa0 * (ac @ h @ aj - aj @ hc @ aj) + kappa1 * (aj @ h @ ac - aj @ hc @ aj)
        if generator is not None:
            term += (np.asarray(generator) @ aj.ravel()).reshape(aj.shape)
        out[j] = term
    return out


def rotational_phase_velocity(agents, kappa: float) -> np.ndarray:
    """Coupling part of the rotational rank-1 flow written as i theta_j' v_j.

    On a phase family v_j = exp(i theta_j) v the coupling contributes
    ``theta_j' = (2 kappa / N) sum_k sin(theta_k - theta_j)`` times ``i v_j``.
    """
    v = np.asarray(agents, dtype=complex)
    n = v.shape[0]
    theta = np.angle(np.array([_inner(v[0], vj) for vj in v]))
    rates = np.array([(2 * kappa / n) * sum(np.sin(tk - tj) for tk in theta) for tj in theta])
    return 1j * rates.reshape((-1,) + (1,) * (v.ndim - 1)) * v


def reconstruct_pointwise(coeffs, frequencies, eigenvalues, grid_points, time: float):
    """Direct multi-sum for samples of sum_a T[a] prod_k exp(-i E t) exp(i q x)/sqrt(2 pi)."""
    t = np.asarray(coeffs, dtype=complex)
    nodes = [2 * np.pi * np.arange(n) / n for n in grid_points]
    out = np.zeros(tuple(grid_points), dtype=complex)
    for x_idx in itertools.product(*[range(n) for n in grid_points]):
        acc = 0j
        for a in itertools.product(*[range(d) for d in t.shape]):
            term = t[a]
            for k, ak in enumerate(a):
                x = nodes[k][x_idx[k]]
                term *= np.exp(-1j * eigenvalues[k][ak] * time) * np.exp(1j * frequencies[k][ak] * x)
                term /= np.sqrt(2 * np.pi)
            acc += term
        out[x_idx] = acc
    return out
