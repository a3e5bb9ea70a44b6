"""Dense complex tensors, Frobenius geometry and the doubled-index contraction.

A single agent is an ``ndarray`` of shape ``(d_1, ..., d_m)``; an ensemble of
``N`` agents is stacked along a leading axis, shape ``(N, d_1, ..., d_m)``.

The coupling contraction

    R[a*] = sum_{b*} X[a*_i] conj(Y[b*]) Z[a*_(1-i)]

(one index slot per axis chosen by a bitmask ``i``) is evaluated by
matricizing every factor with rows over the axes where ``i_k = 0`` and
columns over the axes where ``i_k = 1``; it then reduces to ``X @ Y^H @ Z``.
"""

from __future__ import annotations

from functools import lru_cache
from typing import Tuple

import numpy as np

from .errors import UsageError

MAX_RANK = 3
MAX_ELEMENTS = 4096

Mask = Tuple[int, ...]


def check_dims(dims) -> tuple:
    dims = tuple(int(d) for d in dims)
    if not 1 <= len(dims) <= MAX_RANK:
        raise UsageError(f"rank must be between 1 and {MAX_RANK}, got {len(dims)}")
    if any(d < 1 for d in dims):
        raise UsageError(f"every dimension must be positive, got {dims}")
    if int(np.prod(dims)) > MAX_ELEMENTS:
        raise UsageError(
            f"tensor of shape {dims} exceeds the element budget {MAX_ELEMENTS}")
    return dims


def as_tensor(x) -> np.ndarray:
    """Validate and convert one agent to a complex128 array."""
    arr = np.asarray(x, dtype=np.complex128)
    check_dims(arr.shape)
    if not np.all(np.isfinite(arr)):
        raise UsageError("tensor entries must be finite")
    return arr


def stack_agents(tensors) -> np.ndarray:
    """Stack a nonempty sequence of equal-shape agents into ``(N, *dims)``."""
    if isinstance(tensors, np.ndarray) and tensors.ndim >= 2:
        arr = np.asarray(tensors, dtype=np.complex128)
    else:
        tensors = list(tensors)
        if not tensors:
            raise UsageError("ensemble must contain at least one tensor")
        shapes = {np.shape(t) for t in tensors}
        if len(shapes) != 1:
            raise UsageError(f"agent shapes differ: {sorted(shapes)}")
        arr = np.stack([np.asarray(t, dtype=np.complex128) for t in tensors])
    if arr.shape[0] == 0:
        raise UsageError("ensemble must contain at least one tensor")
    check_dims(arr.shape[1:])
    if not np.all(np.isfinite(arr)):
        raise UsageError("tensor entries must be finite")
    return arr


# -- bitmasks ---------------------------------------------------------------

def parse_mask(mask) -> Mask:
    """Accept ``"01"``, ``(0, 1)`` or ``[0, 1]``; leftmost entry is axis 1."""
    if isinstance(mask, str):
        if not mask or any(c not in "01" for c in mask):
            raise UsageError(f"bitmask string must consist of 0/1, got {mask!r}")
        return tuple(int(c) for c in mask)
    bits = tuple(int(b) for b in mask)
    if not bits or any(b not in (0, 1) for b in bits):
        raise UsageError(f"bitmask entries must be 0 or 1, got {mask!r}")
    return bits


def mask_str(mask) -> str:
    return "".join(str(b) for b in parse_mask(mask))


def mask_partition(mask) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """Return the axis index sets ``(I0, I1)`` (0-based) of a bitmask."""
    mask = parse_mask(mask)
    zeros = tuple(k for k, b in enumerate(mask) if b == 0)
    ones = tuple(k for k, b in enumerate(mask) if b == 1)
    return zeros, ones


def all_masks(rank: int) -> list[Mask]:
    """All ``2**rank`` bitmasks ordered by binary value."""
    return [tuple(int(c) for c in format(v, f"0{rank}b")) for v in range(2**rank)]


def _check_mask(mask, rank: int) -> Mask:
    mask = parse_mask(mask)
    if len(mask) != rank:
        raise UsageError(f"bitmask {mask_str(mask)} has length {len(mask)}, rank is {rank}")
    return mask


@lru_cache(maxsize=1024)
def _plan(mask, dims: tuple):
    """Axis order, matrix shape and inverse order for one (mask, dims) pair."""
    zeros, ones = mask_partition(_check_mask(mask, len(dims)))
    order = zeros + ones
    d0 = int(np.prod([dims[k] for k in zeros]))
    d1 = int(np.prod([dims[k] for k in ones]))
    inverse = tuple(int(k) for k in np.argsort(order))
    return order, d0, d1, inverse, tuple(dims[k] for k in order)


def _hashable(mask):
    return mask if isinstance(mask, (str, tuple)) else tuple(mask)


def matricize(arr: np.ndarray, mask, batched: bool = False) -> np.ndarray:
    """Reshape to a matrix with rows over ``I0`` axes and columns over ``I1``.

    With ``batched=True`` the leading axis is kept, giving ``(N, D0, D1)``.
    """
    off = 1 if batched else 0
    order, d0, d1, _, _ = _plan(_hashable(mask), arr.shape[off:])
    perm = tuple(range(off)) + tuple(k + off for k in order)
    return arr.transpose(perm).reshape(arr.shape[:off] + (d0, d1))


def unmatricize(mat: np.ndarray, mask, dims, batched: bool = False) -> np.ndarray:
    """Inverse of :func:`matricize`."""
    _, _, _, inverse, permuted = _plan(_hashable(mask), tuple(dims))
    lead = mat.shape[:1] if batched else ()
    off = len(lead)
    return mat.reshape(lead + permuted).transpose(
        tuple(range(off)) + tuple(k + off for k in inverse))


# -- geometry ---------------------------------------------------------------

def frobenius_inner(a, b) -> complex:
    """<a, b>_F = sum conj(a) * b."""
    a = np.asarray(a, dtype=np.complex128)
    b = np.asarray(b, dtype=np.complex128)
    if a.shape != b.shape:
        raise UsageError(f"shape mismatch: {a.shape} vs {b.shape}")
    return complex(np.vdot(a, b))


def frobenius_norm(a) -> float:
    return float(np.linalg.norm(np.asarray(a).ravel()))


def centroid(tensors) -> np.ndarray:
    """Entrywise arithmetic mean of the ensemble."""
    return stack_agents(tensors).mean(axis=0)


def ensemble_diameter(tensors) -> float:
    """max_{i,j} ||T_i - T_j||_F."""
    arr = stack_agents(tensors)
    n = arr.shape[0]
    flat = arr.reshape(n, -1)
    if n == 1:
        return 0.0
    # direct differences; the Gram-matrix shortcut loses precision near 0
    diff = flat[:, None, :] - flat[None, :, :]
    return float(np.sqrt(np.max(np.sum(np.abs(diff) ** 2, axis=-1))))


def diameter_sum(tensors) -> float:
    """sum_{i,j} ||T_i - T_j||_F^2 over ordered pairs."""
    arr = stack_agents(tensors)
    n = arr.shape[0]
    flat = arr.reshape(n, -1)
    sq = np.sum(np.abs(flat) ** 2)
    total = flat.sum(axis=0)
    return float(2 * n * sq - 2 * np.vdot(total, total).real)


# -- contraction ------------------------------------------------------------

def contract(first, conj_middle, last, mask) -> np.ndarray:
    """sum_{a*_1} first[a*_i] conj(conj_middle[a*_1]) last[a*_(1-i)].

    All three arguments share one shape; a leading batch axis is allowed when
    every argument carries it (or broadcasts against it).
    """
    first = np.asarray(first, dtype=np.complex128)
    conj_middle = np.asarray(conj_middle, dtype=np.complex128)
    last = np.asarray(last, dtype=np.complex128)
    rank = len(parse_mask(mask))
    dims = first.shape[-rank:]
    if conj_middle.shape[-rank:] != dims or last.shape[-rank:] != dims:
        raise UsageError("contraction factors must share one shape")

    def mat(x):
        return matricize(x, mask, batched=x.ndim > rank)

    out = mat(first) @ np.conj(np.swapaxes(mat(conj_middle), -1, -2)) @ mat(last)
    return unmatricize(out, mask, dims, batched=out.ndim > 2)


def coupling_term(tc, tj, mask) -> np.ndarray:
    """One signed half of the Lohe tensor coupling: tc in the first slot,
    tj in the conjugated and the complementary slots."""
    tc = as_tensor(tc)
    tj = as_tensor(tj)
    if tc.shape != tj.shape:
        raise UsageError(f"shape mismatch: {tc.shape} vs {tj.shape}")
    _check_mask(mask, tc.ndim)
    return contract(tc, tj, tj, mask)
