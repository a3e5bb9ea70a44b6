"""Ensembles and right-hand sides for the Lohe hierarchy.

Every model is evaluated through one master equation, the rank-m Lohe tensor
flow

    dT_j/dt = F T_j + sum_i kappa_i ( C(T_c, T_j, T_j; i) - C(T_j, T_c, T_j; i) )

where ``C(X, Y, Z; i)`` is :func:`lohe.tensor.contract`. The named families
only fix the rank, the active bitmasks and the free flow:

============== ====== ======================================== ============
family          rank   couplings                                free flow
============== ====== ======================================== ============
lohe_sphere     1      ``0``: kappa0, ``1``: kappa1             none/dense
lohe_matrix     2      ``01``: kappa0, ``10``: kappa1           none/dense
sl              1      ``0``: kappa                             spectral
rotational_sl   1      ``1``: kappa                             spectral
slm             2      ``01``: kappa0, ``10``: kappa1           spectral
slt             m      any                                      spectral
lohe_tensor     m      any                                      any
============== ====== ======================================== ============
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from . import freeflow
from .errors import NumericError, UsageError
from .tensor import (
    check_dims, frobenius_norm, mask_str, matricize, parse_mask, stack_agents,
    unmatricize,
)

FAMILIES = (
    "lohe_sphere", "lohe_matrix", "sl", "rotational_sl", "slm", "slt", "lohe_tensor",
)
LIFTINGS = ("sl", "rotational_sl", "slm", "slt")
NORM_TOL = 1e-12


class CouplingMap(Mapping):
    """Nonnegative coupling strengths keyed by bitmask; absent masks are zero."""

    def __init__(self, entries=None):
        data = {}
        rank = None
        for key, value in dict(entries or {}).items():
            mask = parse_mask(key)
            if rank is None:
                rank = len(mask)
            elif len(mask) != rank:
                raise UsageError("all coupling bitmasks must share one length")
            kappa = float(value)
            if not np.isfinite(kappa) or kappa < 0:
                raise UsageError(f"coupling strength for mask {mask_str(mask)} must be "
                                 f"a nonnegative number, got {value!r}")
            data[mask] = kappa
        self._data = dict(sorted(data.items(), key=lambda kv: int(mask_str(kv[0]), 2)))
        self.rank = rank

    def __getitem__(self, key):
        return self._data.get(parse_mask(key), 0.0)

    def __iter__(self):
        return iter(self._data)

    def __len__(self):
        return len(self._data)

    def __repr__(self):
        body = ", ".join(f"{mask_str(k)!r}: {v}" for k, v in self._data.items())
        return f"CouplingMap({{{body}}})"

    def __eq__(self, other):
        if isinstance(other, CouplingMap):
            return self._data == other._data
        return NotImplemented

    def active(self):
        """(mask, kappa) pairs with kappa > 0, in binary order of the mask."""
        return [(m, k) for m, k in self._data.items() if k > 0]

    def as_strings(self) -> dict:
        return {mask_str(m): k for m, k in self._data.items()}


@dataclass
class Ensemble:
    agents: np.ndarray
    couplings: CouplingMap
    free_flow: object = freeflow.ABSENT
    family: str = "lohe_tensor"

    def __post_init__(self):
        self.agents = stack_agents(self.agents)
        if not isinstance(self.couplings, CouplingMap):
            self.couplings = CouplingMap(self.couplings)
        rank = self.agents.ndim - 1
        if self.couplings.rank is not None and self.couplings.rank != rank:
            raise UsageError(f"coupling masks have length {self.couplings.rank}, "
                             f"agents have rank {rank}")
        ff = self.free_flow
        if ff.kind != "none" and tuple(ff.dims) != self.dims:
            raise UsageError(f"free flow dims {tuple(ff.dims)} do not match agent dims {self.dims}")
        if self.family in LIFTINGS:
            norms = np.linalg.norm(self.agents.reshape(self.n_agents, -1), axis=1)
            if np.max(np.abs(norms - 1)) > NORM_TOL:
                raise UsageError(f"{self.family} agents must have unit norm")

    @property
    def n_agents(self) -> int:
        return self.agents.shape[0]

    @property
    def dims(self) -> tuple:
        return self.agents.shape[1:]

    @property
    def rank(self) -> int:
        return self.agents.ndim - 1

    def with_agents(self, agents) -> "Ensemble":
        return Ensemble(agents, self.couplings, self.free_flow, self.family)


# -- right-hand side --------------------------------------------------------

def coupling_rhs(state: np.ndarray, couplings: CouplingMap) -> np.ndarray:
    """Nonlinear part of the master equation for all agents at once."""
    dims = state.shape[1:]
    total = np.zeros_like(state)
    tc = state.mean(axis=0)
    for mask, kappa in couplings.active():
        mj = matricize(state, mask, batched=True)
        mc = matricize(tc, mask)
        # C(Tc,Tj,Tj) - C(Tj,Tc,Tj) = (Mc Mj^H - Mj Mc^H) Mj
        x = mc @ np.conj(np.swapaxes(mj, -1, -2))
        bracket = (x - np.conj(np.swapaxes(x, -1, -2))) @ mj
        total += kappa * unmatricize(bracket, mask, dims, batched=True)
    return total


def lt_rhs(state, couplings, free_flow=freeflow.ABSENT) -> np.ndarray:
    """Time derivative of every agent under the Lohe tensor flow.

    Args:
        state: agents stacked as ``(N, d_1, ..., d_m)`` (or a list of tensors).
        couplings: :class:`CouplingMap` or a plain ``{mask: kappa}`` dict.
        free_flow: free-flow spec from :mod:`lohe.freeflow`.
    """
    state = np.asarray(state, dtype=np.complex128) if isinstance(state, np.ndarray) \
        else stack_agents(state)
    if not isinstance(couplings, CouplingMap):
        couplings = CouplingMap(couplings)
    if couplings.rank is not None and couplings.rank != state.ndim - 1:
        raise UsageError(f"coupling masks have length {couplings.rank}, "
                         f"agents have rank {state.ndim - 1}")
    if not np.all(np.isfinite(state)):
        raise NumericError("non-finite state passed to lt_rhs")
    out = coupling_rhs(state, couplings)
    if free_flow.kind != "none":
        out += freeflow.apply_generator(free_flow, state, batched=True)
    return out


def ensemble_rhs(ensemble: Ensemble):
    """Closure ``f(state) -> dstate/dt`` for the ensemble's model."""
    couplings, ff = ensemble.couplings, ensemble.free_flow
    phases = -1j * ff.energy() if ff.kind == "spectral" else None

    def rhs(state):
        out = coupling_rhs(state, couplings)
        if phases is not None:
            out += phases * state
        elif ff.kind == "dense":
            out += freeflow.apply_generator(ff, state, batched=True)
        return out

    return rhs


# -- initial data -----------------------------------------------------------

def random_unit_agents(n_agents: int, dims, seed=None, rng=None, normalize=True) -> np.ndarray:
    """Complex standard normal entries, each agent scaled to unit Frobenius norm."""
    dims = check_dims(dims)
    if n_agents < 1:
        raise UsageError("need at least one agent")
    rng = np.random.default_rng(seed) if rng is None else rng
    shape = (n_agents,) + dims
    z = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    if normalize:
        z /= np.linalg.norm(z.reshape(n_agents, -1), axis=1).reshape((-1,) + (1,) * len(dims))
    return z


def bipolar_agents(n_agents: int, n_negative: int, base) -> np.ndarray:
    """``N - n`` copies of ``base`` followed by ``n`` copies of ``-base``."""
    base = np.asarray(base, dtype=np.complex128)
    if not 1 <= n_negative <= n_agents - 1:
        raise UsageError(f"bipolar split needs 1 <= n <= N-1, got n={n_negative}, N={n_agents}")
    signs = np.ones(n_agents)
    signs[n_agents - n_negative:] = -1
    return signs.reshape((-1,) + (1,) * base.ndim) * base


def phase_family_agents(base, phases) -> np.ndarray:
    """Agents ``exp(i theta_j) * base``."""
    base = np.asarray(base, dtype=np.complex128)
    phases = np.asarray(phases, dtype=float)
    return np.exp(1j * phases).reshape((-1,) + (1,) * base.ndim) * base


# -- family table -----------------------------------------------------------

def family_couplings(family: str, rank: int, kappa=None, kappa0=0.0, kappa1=0.0) -> CouplingMap:
    if family == "lohe_sphere":
        return CouplingMap({"0": kappa0, "1": kappa1})
    if family in ("lohe_matrix", "slm"):
        return CouplingMap({"01": kappa0, "10": kappa1})
    if family == "sl":
        return CouplingMap({"0": kappa})
    if family == "rotational_sl":
        return CouplingMap({"1": kappa})
    if family in ("slt", "lohe_tensor"):
        if not isinstance(kappa, Mapping):
            raise UsageError(f"{family} needs a mapping of bitmask -> kappa")
        cmap = CouplingMap(kappa)
        if cmap.rank not in (None, rank):
            raise UsageError(f"coupling masks have length {cmap.rank}, rank is {rank}")
        return cmap
    raise UsageError(f"unknown model family {family!r}; expected one of {', '.join(FAMILIES)}")


FAMILY_RANK = {"lohe_sphere": 1, "lohe_matrix": 2, "sl": 1, "rotational_sl": 1, "slm": 2}


def build_model(family: str, dims, n_agents: int | None = None, *, kappa=None,
                kappa0: float = 0.0, kappa1: float = 0.0, free_flow=None,
                agents=None, seed=None) -> Ensemble:
    """Build an :class:`Ensemble` for one member of the hierarchy.

    ``agents`` overrides the default seeded random unit initial data. For the
    Schrodinger-Lohe liftings ``free_flow`` must be spectral (or omitted, which
    selects the free Fourier spectrum, see :func:`lohe.spectral.fourier_basis`).
    """
    if family not in FAMILIES:
        raise UsageError(f"unknown model family {family!r}; expected one of {', '.join(FAMILIES)}")
    dims = check_dims(dims)
    rank = len(dims)
    if family in FAMILY_RANK and rank != FAMILY_RANK[family]:
        raise UsageError(f"{family} has rank {FAMILY_RANK[family]}, got dims {dims}")
    for name, value in (("kappa0", kappa0), ("kappa1", kappa1)):
        if value < 0:
            raise UsageError(f"{name} must be nonnegative, got {value}")
    if family in ("sl", "rotational_sl"):
        if kappa is None or float(kappa) < 0:
            raise UsageError(f"{family} needs a nonnegative kappa, got {kappa!r}")
    couplings = family_couplings(family, rank, kappa, kappa0, kappa1)

    if free_flow is None:
        if family in LIFTINGS:
            from .spectral import fourier_basis
            free_flow = fourier_basis(dims).free_flow()
        else:
            free_flow = freeflow.ABSENT
    if family in LIFTINGS and free_flow.kind != "spectral":
        raise UsageError(f"{family} requires a spectral (separable) free flow")

    if agents is None:
        if n_agents is None:
            raise UsageError("give either n_agents or explicit agents")
        agents = random_unit_agents(n_agents, dims, seed=seed)
    agents = stack_agents(agents)
    if agents.shape[1:] != dims:
        raise UsageError(f"agents have dims {agents.shape[1:]}, model dims are {dims}")
    return Ensemble(agents, couplings, free_flow, family)


# -- Kuramoto reduction -----------------------------------------------------

@dataclass
class PhaseState:
    phases: np.ndarray
    coupling: float

    def __post_init__(self):
        self.phases = np.asarray(self.phases, dtype=float)
        if not np.all(np.isfinite(self.phases)):
            raise NumericError("phases must be finite")
        if self.coupling < 0:
            raise UsageError("coupling must be nonnegative")


def kuramoto_rhs(state: PhaseState) -> np.ndarray:
    """theta_j' = (2 kappa / N) sum_k sin(theta_k - theta_j).

    ``state.coupling`` is the rotational Schrodinger-Lohe strength; in the usual
    Kuramoto normalization ``K/N sum sin`` this is ``K = 2 kappa``.
    """
    theta = state.phases
    n = theta.size
    if n < 1:
        raise UsageError("need at least one oscillator")
    diff = theta[None, :] - theta[:, None]
    return (2.0 * state.coupling / n) * np.sin(diff).sum(axis=1)


def phase_family_check(agents, base, free_flow=freeflow.ABSENT, time: float = 0.0,
                       tol: float = 1e-8):
    """Extract phases of agents assumed to equal ``exp(i theta_j) exp(tF) base``.

    Returns ``(phases, residuals)`` with ``residual_j = ||T_j - e^{i theta_j} base(t)||``.
    At ``time == 0`` a residual above ``tol`` raises :class:`UsageError`.
    """
    agents = stack_agents(agents)
    base = np.asarray(base, dtype=np.complex128)
    if agents.shape[1:] != base.shape:
        raise UsageError("base tensor shape must match agent shape")
    nb = frobenius_norm(base)
    if abs(nb - 1) > 1e-10:
        raise UsageError("base tensor must have unit norm")
    evolved = freeflow.apply_exp(free_flow, time, base)
    overlaps = np.tensordot(agents, np.conj(evolved), axes=base.ndim)
    phases = np.angle(overlaps)
    fitted = phase_family_agents(evolved, phases)
    residuals = np.linalg.norm((agents - fitted).reshape(len(agents), -1), axis=1)
    if time == 0 and np.max(residuals) > tol:
        raise UsageError(f"initial data is not a phase family (residual {np.max(residuals):.3e})")
    return phases, residuals
