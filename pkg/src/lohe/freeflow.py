"""Linear free flow ``dT/dt = F T`` acting on one or many agents.

Three forms are supported:

* :data:`ABSENT` -- ``F = 0``.
* :class:`SpectralDiagonal` -- ``F = -i diag(sum_k E^k_{a_k})`` from per-axis
  real eigenvalue lists; the coefficient form of ``exp(-iHt)`` for a
  separable Hamiltonian.
* :class:`DenseGenerator` -- a skew-Hermitian matrix on the flattened state.
"""

from __future__ import annotations

import itertools
import string
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import UsageError
from .tensor import mask_str, parse_mask

SKEW_TOL = 1e-12
VALIDATE_TOL = 1e-9
VALIDATE_TIMES = (0.1, 0.5, 1.0)


class Absent:
    kind = "none"

    def __eq__(self, other):
        return isinstance(other, Absent)

    def __hash__(self):
        return hash("none")

    def __repr__(self):
        return "ABSENT"


ABSENT = Absent()


@dataclass(frozen=True, eq=False)
class SpectralDiagonal:
    eigenvalues: tuple

    kind = "spectral"

    def __init__(self, eigenvalues):
        lists = tuple(np.asarray(e, dtype=float).ravel() for e in eigenvalues)
        if not lists:
            raise UsageError("spectral free flow needs at least one axis")
        for k, e in enumerate(lists):
            if e.size == 0 or not np.all(np.isfinite(e)):
                raise UsageError(f"eigenvalues of axis {k + 1} must be finite and nonempty")
            e.setflags(write=False)
        object.__setattr__(self, "eigenvalues", lists)
        total = np.zeros(tuple(e.size for e in lists))
        for k, e in enumerate(lists):
            shape = [1] * len(lists)
            shape[k] = e.size
            total = total + e.reshape(shape)
        total.setflags(write=False)
        object.__setattr__(self, "_energy", total)

    @property
    def dims(self) -> tuple:
        return tuple(e.size for e in self.eigenvalues)

    def energy(self) -> np.ndarray:
        """Total eigenvalue sum_k E^k_{a_k} on the full index grid."""
        return self._energy

    def __eq__(self, other):
        return (isinstance(other, SpectralDiagonal) and self.dims == other.dims
                and all(np.array_equal(a, b) for a, b in zip(self.eigenvalues, other.eigenvalues)))

    def __hash__(self):
        return hash(tuple(tuple(e) for e in self.eigenvalues))


@dataclass(frozen=True, eq=False)
class DenseGenerator:
    matrix: np.ndarray
    dims: tuple

    kind = "dense"

    def __init__(self, matrix, dims=None, tol: float = SKEW_TOL):
        g = np.array(matrix, dtype=np.complex128)
        if g.ndim != 2 or g.shape[0] != g.shape[1]:
            raise UsageError(f"dense generator must be square, got shape {g.shape}")
        dims = (g.shape[0],) if dims is None else tuple(int(d) for d in dims)
        if int(np.prod(dims)) != g.shape[0]:
            raise UsageError(f"generator side {g.shape[0]} does not match dims {dims}")
        if not np.all(np.isfinite(g)):
            raise UsageError("dense generator entries must be finite")
        dev = float(np.max(np.abs(g + g.conj().T))) if g.size else 0.0
        if dev > tol:
            raise UsageError(f"generator is not skew-Hermitian (max |G + G^H| = {dev:.3e})")
        g.setflags(write=False)
        object.__setattr__(self, "matrix", g)
        object.__setattr__(self, "dims", dims)

    def __eq__(self, other):
        return (isinstance(other, DenseGenerator) and self.dims == other.dims
                and np.array_equal(self.matrix, other.matrix))

    def __hash__(self):
        return hash((self.dims, self.matrix.tobytes()))


def kronecker_sum(*blocks) -> np.ndarray:
    """G = sum_k I x .. x Omega_k x .. x I for per-axis generators ``Omega_k``."""
    blocks = [np.asarray(b, dtype=np.complex128) for b in blocks]
    sizes = [b.shape[0] for b in blocks]
    total = np.zeros((int(np.prod(sizes)),) * 2, dtype=np.complex128)
    for k, b in enumerate(blocks):
        term = np.ones((1, 1), dtype=np.complex128)
        for j, s in enumerate(sizes):
            term = np.kron(term, b if j == k else np.eye(s))
        total += term
    return total


def random_skew_hermitian(size: int, rng, scale: float = 1.0) -> np.ndarray:
    a = rng.standard_normal((size, size)) + 1j * rng.standard_normal((size, size))
    return scale * 0.5 * (a - a.conj().T)


# -- matrix exponential -----------------------------------------------------

# diagonal [6/6] Pade coefficients
_PADE6 = (1.0, 1 / 2, 5 / 44, 1 / 66, 1 / 792, 1 / 15840, 1 / 665280)
_PADE_THETA = 0.5


def expm(a) -> np.ndarray:
    """Matrix exponential by scaling and squaring with a [6/6] Pade approximant.

    The argument is scaled so its 1-norm is at most 1/2; the truncation error
    of the approximant is then below double-precision rounding.
    """
    a = np.asarray(a, dtype=np.complex128)
    n = a.shape[0]
    if a.shape != (n, n):
        raise UsageError(f"expm needs a square matrix, got {a.shape}")
    if n == 0:
        return a.copy()
    norm = float(np.max(np.sum(np.abs(a), axis=0)))
    s = 0 if norm <= _PADE_THETA else int(np.ceil(np.log2(norm / _PADE_THETA)))
    x = a / 2.0**s
    ident = np.eye(n, dtype=np.complex128)
    x2 = x @ x
    x4 = x2 @ x2
    x6 = x4 @ x2
    c = _PADE6
    even = c[0] * ident + c[2] * x2 + c[4] * x4 + c[6] * x6
    odd = x @ (c[1] * ident + c[3] * x2 + c[5] * x4)
    r = np.linalg.solve(even - odd, even + odd)
    for _ in range(s):
        r = r @ r
    return r


# -- application ------------------------------------------------------------

def _check_shape(spec, arr: np.ndarray, batched: bool) -> tuple:
    dims = arr.shape[1:] if batched else arr.shape
    if spec.kind != "none" and tuple(dims) != tuple(spec.dims):
        raise UsageError(f"free flow acts on dims {spec.dims}, tensor has {tuple(dims)}")
    return dims


def apply_generator(spec, t, batched: bool = False) -> np.ndarray:
    """F T for one agent (or each agent when ``batched``)."""
    arr = np.asarray(t, dtype=np.complex128)
    _check_shape(spec, arr, batched)
    if spec.kind == "none":
        return np.zeros_like(arr)
    if spec.kind == "spectral":
        return -1j * spec.energy() * arr
    lead = arr.shape[:1] if batched else ()
    flat = arr.reshape(lead + (-1,))
    return (flat @ spec.matrix.T).reshape(arr.shape)


def propagator(spec, time: float) -> np.ndarray:
    """Dense matrix of exp(time F) on the flattened space."""
    if spec.kind == "none":
        raise UsageError("absent free flow has no dimension information")
    if spec.kind == "spectral":
        return np.diag(np.exp(-1j * time * spec.energy()).ravel())
    return expm(time * spec.matrix)


def apply_exp(spec, time: float, t, batched: bool = False) -> np.ndarray:
    """exp(time F) T; exact phases in the spectral case."""
    arr = np.asarray(t, dtype=np.complex128)
    _check_shape(spec, arr, batched)
    if spec.kind == "none" or time == 0:
        return arr.copy()
    if spec.kind == "spectral":
        return np.exp(-1j * time * spec.energy()) * arr
    lead = arr.shape[:1] if batched else ()
    flat = arr.reshape(lead + (-1,))
    return (flat @ expm(time * spec.matrix).T).reshape(arr.shape)


# -- structural condition ---------------------------------------------------

@dataclass
class GeneratorCheck:
    mask: str
    time: float
    deviation: float
    passed: bool


@dataclass
class ValidationReport:
    checks: list
    tol: float

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def max_deviation(self) -> float:
        return max((c.deviation for c in self.checks), default=0.0)


def compatibility_deviation(spec, mask, time: float) -> float:
    """Max deviation of the four-propagator identity from the doubled identity.

    Contracts exp(-Ft)[a0,b0] exp(Ft)[b_i,g_i] exp(-Ft)[a1,b1] exp(Ft)[b_(1-i),g_(1-i)]
    over b0, b1 and compares against delta(a0,g0) delta(g1,a1).
    """
    mask = parse_mask(mask)
    dims = tuple(spec.dims)
    m = len(dims)
    if len(mask) != m:
        raise UsageError(f"bitmask {mask_str(mask)} does not match rank {m}")
    if time == 0:
        return 0.0
    fwd = propagator(spec, time).reshape(dims + dims)
    bwd = propagator(spec, -time).reshape(dims + dims)

    letters = iter(string.ascii_letters)
    a = [[next(letters) for _ in range(m)] for _ in range(2)]
    g = [[next(letters) for _ in range(m)] for _ in range(2)]
    b = [[next(letters) for _ in range(m)] for _ in range(2)]

    def pick(idx, select):
        return "".join(idx[select[k]][k] for k in range(m))

    flip = tuple(1 - s for s in mask)
    zero, one = (0,) * m, (1,) * m
    subs = ",".join([
        pick(a, zero) + pick(b, zero),
        pick(b, mask) + pick(g, mask),
        pick(a, one) + pick(b, one),
        pick(b, flip) + pick(g, flip),
    ])
    out = pick(a, zero) + pick(a, one) + pick(g, zero) + pick(g, one)
    got = np.einsum(f"{subs}->{out}", bwd, fwd, bwd, fwd, optimize=True)
    size = int(np.prod(dims))
    eye = np.eye(size)
    want = np.einsum("ac,bd->abcd", eye, eye)
    return float(np.max(np.abs(got.reshape((size,) * 4) - want)))


def validate_generator(spec, masks, time_samples=VALIDATE_TIMES,
                       tol: float = VALIDATE_TOL) -> ValidationReport:
    """Numerically check the compatibility identity for each active mask."""
    if spec.kind == "none":
        raise UsageError("validate_generator needs a spectral or dense free flow")
    checks = []
    for mask, time in itertools.product(masks, time_samples):
        dev = compatibility_deviation(spec, mask, float(time))
        checks.append(GeneratorCheck(mask_str(mask), float(time), dev, dev < tol))
    return ValidationReport(checks, tol)


# -- file format ------------------------------------------------------------

def load_generator(path, dims=None, tol: float = 1e-9) -> DenseGenerator:
    """Read a complex matrix written as one row per line of ``re,im`` pairs."""
    rows = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        row = []
        for token in line.split():
            try:
                re_, im_ = token.split(",")
                row.append(complex(float(re_), float(im_)))
            except ValueError:
                raise UsageError(f"{path}:{lineno}: bad entry {token!r}, expected re,im") from None
        rows.append(row)
    if not rows or any(len(r) != len(rows) for r in rows):
        raise UsageError(f"{path}: generator must be a nonempty square matrix")
    g = np.array(rows, dtype=np.complex128)
    # symmetrize away the rounding of the text representation
    dev = float(np.max(np.abs(g + g.conj().T)))
    if dev > tol:
        raise UsageError(f"{path}: generator is not skew-Hermitian (max |G + G^H| = {dev:.3e})")
    return DenseGenerator(0.5 * (g - g.conj().T), dims)


def save_generator(path, matrix) -> None:
    g = np.asarray(matrix, dtype=np.complex128)
    lines = [" ".join(f"{z.real:.17g},{z.imag:.17g}" for z in row) for row in g]
    Path(path).write_text("\n".join(lines) + "\n")
