"""Observables of aggregation: order parameter, fluxes, J-functionals, classifier."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import UsageError
from .tensor import (
    _check_mask, ensemble_diameter, diameter_sum, mask_str, matricize, stack_agents,
)

AGG_THRESHOLD = 1e-6
ALIGN_THRESHOLD = 1e-4
R_TOL = 1e-6


def order_parameter(agents) -> float:
    """R = ||T_c||_F."""
    arr = stack_agents(agents)
    return float(np.linalg.norm(arr.mean(axis=0).ravel()))


def pairwise_gram(agents) -> np.ndarray:
    """G[i, j] = <T_i, T_j>_F."""
    arr = stack_agents(agents)
    flat = arr.reshape(arr.shape[0], -1)
    return np.conj(flat) @ flat.T


def _flux_terms(arr: np.ndarray, mask) -> np.ndarray:
    mask = _check_mask(mask, arr.ndim - 1)
    mj = matricize(arr, mask, batched=True)
    mc = matricize(arr.mean(axis=0), mask)
    x = mc @ np.conj(np.swapaxes(mj, -1, -2))
    return np.sum(np.abs(x - np.conj(np.swapaxes(x, -1, -2))) ** 2, axis=(-2, -1))


def aggregation_flux(agents, mask) -> float:
    """sum_j ||M_c M_j^H - M_j M_c^H||_F^2 with rows over I0 and columns over I1."""
    return float(np.sum(_flux_terms(stack_agents(agents), mask)))


@dataclass
class FluxReport:
    per_mask: dict
    total: float


def flux_report(agents, couplings) -> FluxReport:
    """Per-mask fluxes of the active couplings and the predicted dR^2/dt."""
    arr = stack_agents(agents)
    n = arr.shape[0]
    per_mask, total = {}, 0.0
    for mask, kappa in couplings.active():
        f = aggregation_flux(arr, mask)
        per_mask[mask_str(mask)] = f
        total += kappa / n * f
    return FluxReport(per_mask, total)


def j_functional(agents, cycle) -> complex:
    """<T_i1, T_i2> <T_i2, T_i3> ... <T_ik, T_i1>."""
    arr = stack_agents(agents)
    cycle = [int(i) for i in cycle]
    if len(cycle) < 2:
        raise UsageError("a cycle needs at least two indices")
    n = arr.shape[0]
    if any(not 0 <= i < n for i in cycle):
        raise UsageError(f"cycle indices must lie in [0, {n - 1}], got {cycle}")
    g = pairwise_gram(arr)
    value = 1.0 + 0.0j
    for a, b in zip(cycle, cycle[1:] + cycle[:1]):
        value *= g[a, b]
    return complex(value)


# -- series recorded along trajectories -------------------------------------

OBSERVERS = ("R", "diameter", "diameter_sum", "norm_drift_max", "flux", "gram")


def flux_column(mask) -> str:
    return f"flux_{mask_str(mask)}"


def observe(state, couplings, observers, norms0=None) -> dict:
    """Evaluate the named observables on one snapshot.

    ``flux`` expands to one ``flux_<mask>`` entry per active coupling.
    """
    arr = stack_agents(state)
    out = {}
    for name in observers:
        if name == "R":
            out["R"] = order_parameter(arr)
        elif name == "diameter":
            out["diameter"] = ensemble_diameter(arr)
        elif name == "diameter_sum":
            out["diameter_sum"] = diameter_sum(arr)
        elif name == "norm_drift_max":
            norms = np.linalg.norm(arr.reshape(arr.shape[0], -1), axis=1)
            ref = np.ones_like(norms) if norms0 is None else norms0
            out["norm_drift_max"] = float(np.max(np.abs(norms - ref)))
        elif name == "flux":
            for mask, _ in couplings.active():
                out[flux_column(mask)] = aggregation_flux(arr, mask)
        elif name == "gram":
            out["gram"] = pairwise_gram(arr)
        else:
            raise UsageError(f"unknown observer {name!r}; expected one of {', '.join(OBSERVERS)}")
    return out


def flux_identity_residual(trajectory, couplings, n_agents: int | None = None) -> float:
    """Compare central-difference d(R^2)/dt with sum (kappa/N) flux at interior records.

    Returns ``max |fd - predicted| / max |predicted|`` over interior points with
    uniform spacing (an off-stride final record is skipped); 0 when both vanish.
    """
    times = np.asarray(trajectory.times, dtype=float)
    if times.size < 3:
        raise UsageError("flux identity needs at least three records")
    r2 = np.asarray(trajectory.series("R"), dtype=float) ** 2
    if n_agents is None:
        if trajectory.states is None:
            raise UsageError("give n_agents when the trajectory has no states")
        n_agents = trajectory.states.shape[1]
    predicted = np.zeros_like(times)
    for mask, kappa in couplings.active():
        predicted += kappa / n_agents * np.asarray(trajectory.series(flux_column(mask)))
    h_left = times[1:-1] - times[:-2]
    h_right = times[2:] - times[1:-1]
    uniform = np.abs(h_left - h_right) <= 1e-9 * np.maximum(h_left, h_right)
    if not np.any(uniform):
        raise UsageError("flux identity needs uniformly spaced records")
    fd = (r2[2:] - r2[:-2]) / (h_left + h_right)
    pred = predicted[1:-1]
    err = np.abs(fd - pred)[uniform]
    scale = float(np.max(np.abs(pred[uniform])))
    worst = float(np.max(err))
    if scale == 0.0:
        return worst
    return worst / scale


# -- asymptotic classifier --------------------------------------------------

@dataclass(frozen=True)
class Thresholds:
    agg: float = AGG_THRESHOLD
    align: float = ALIGN_THRESHOLD
    r_tol: float = R_TOL


@dataclass
class AsymptoticState:
    verdict: str
    n: int | None
    diameter: float
    R: float
    signs: tuple

    @property
    def label(self) -> str:
        return f"BiPolar({self.n})" if self.verdict == "BiPolar" else self.verdict


def classify_state(snapshots, thresholds: Thresholds = Thresholds()) -> AsymptoticState:
    """Classify the last snapshot as Aggregated, BiPolar(n) or Undecided.

    ``snapshots`` is a single ensemble array ``(N, *dims)``, a sequence of such
    arrays, or a :class:`~lohe.integrate.TrajectoryRecord` with states.
    """
    if getattr(snapshots, "states", None) is not None:
        snapshots = snapshots.states[-1]
    if isinstance(snapshots, np.ndarray):
        last = snapshots
    else:
        snapshots = list(snapshots)
        if not snapshots:
            raise UsageError("classifier needs at least one snapshot")
        last = snapshots[-1]
    last = stack_agents(last)
    n_agents = last.shape[0]
    flat = last.reshape(n_agents, -1)
    diam = ensemble_diameter(last)
    r = order_parameter(last)
    plus = np.linalg.norm(flat - flat[0], axis=1)
    minus = np.linalg.norm(flat + flat[0], axis=1)
    signs = tuple(1 if p <= m else -1 for p, m in zip(plus, minus))
    if diam < thresholds.agg:
        return AsymptoticState("Aggregated", None, diam, r, signs)
    if np.all(np.minimum(plus, minus) < thresholds.align):
        n_minus = signs.count(-1)
        n = min(n_minus, n_agents - n_minus)
        if n >= 1 and abs(r - abs(1 - 2 * n / n_agents)) <= thresholds.r_tol:
            return AsymptoticState("BiPolar", n, diam, r, signs)
    return AsymptoticState("Undecided", None, diam, r, signs)

