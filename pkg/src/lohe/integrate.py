"""Fixed-step RK4 integration, trajectory recording and the split-flow path."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import diagnostics, freeflow
from .errors import NumericError, UsageError
from .models import Ensemble, PhaseState, coupling_rhs, ensemble_rhs, kuramoto_rhs

DEFAULT_DT = 1e-3
DEFAULT_CONSERVATION_TOL = 1e-6
DEFAULT_OBSERVERS = ("R", "diameter", "norm_drift_max", "flux")


@dataclass(frozen=True)
class SimConfig:
    dt: float = DEFAULT_DT
    t_end: float = 1.0
    record_stride: int = 1
    conservation_tol: float = DEFAULT_CONSERVATION_TOL
    seed: int = 0

    def __post_init__(self):
        for name in ("dt", "t_end", "conservation_tol"):
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
                raise UsageError(f"{name} must be a positive number, got {value!r}")
        if self.dt > self.t_end:
            raise UsageError(f"dt={self.dt} exceeds t_end={self.t_end}")
        if int(self.record_stride) != self.record_stride or self.record_stride < 1:
            raise UsageError(f"record_stride must be a positive integer, got {self.record_stride!r}")
        object.__setattr__(self, "record_stride", int(self.record_stride))
        self.n_steps  # validates commensurability

    @property
    def n_steps(self) -> int:
        n = int(round(self.t_end / self.dt))
        if n < 1 or abs(n * self.dt - self.t_end) > 1e-9 * self.t_end:
            raise UsageError(f"t_end={self.t_end} is not an integer multiple of dt={self.dt}")
        return n

    def record_steps(self) -> list:
        n = self.n_steps
        steps = list(range(0, n + 1, self.record_stride))
        if steps[-1] != n:
            steps.append(n)
        return steps


@dataclass
class TrajectoryRecord:
    """Recorded times, optional snapshots ``(n_records, N, *dims)`` and named series."""

    times: np.ndarray
    states: np.ndarray | None = None
    diagnostics: dict = field(default_factory=dict)
    final_state: np.ndarray | None = None

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        if self.times.size > 1 and np.any(np.diff(self.times) <= 0):
            raise UsageError("record times must be strictly increasing")
        n = self.times.size
        if self.states is not None and len(self.states) != n:
            raise UsageError("states and times differ in length")
        for name, series in self.diagnostics.items():
            if len(series) != n:
                raise UsageError(f"series {name!r} has {len(series)} entries, expected {n}")

    def __len__(self):
        return self.times.size

    def series(self, name: str) -> np.ndarray:
        try:
            return self.diagnostics[name]
        except KeyError:
            raise UsageError(f"trajectory did not record {name!r}") from None


def rk4_step(state, rhs, dt: float):
    """One classical Runge-Kutta step; raises :class:`NumericError` naming a bad stage."""
    if not dt > 0:
        raise UsageError(f"dt must be positive, got {dt}")

    def stage(k, name):
        if not np.all(np.isfinite(k)):
            raise NumericError(f"non-finite derivative in RK4 stage {name}")
        return k

    k1 = stage(rhs(state), "k1")
    k2 = stage(rhs(state + (0.5 * dt) * k1), "k2")
    k3 = stage(rhs(state + (0.5 * dt) * k2), "k3")
    k4 = stage(rhs(state + dt * k3), "k4")
    out = state + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(out)):
        raise NumericError("non-finite state after RK4 update")
    return out


def _norms(state: np.ndarray) -> np.ndarray:
    return np.linalg.norm(state.reshape(state.shape[0], -1), axis=1)


def _run(initial: np.ndarray, rhs, config: SimConfig, recorder, drift_check=True):
    """Shared stepping loop; ``recorder(step, t, state)`` is called on record steps."""
    state = np.array(initial)
    norms0 = _norms(state) if drift_check else None
    record_at = set(config.record_steps())
    n = config.n_steps
    recorder(0, 0.0, state)
    for step in range(1, n + 1):
        t = step * config.dt
        try:
            state = rk4_step(state, rhs, config.dt)
        except NumericError as exc:
            raise NumericError(f"{exc} at t={t:.6g}", time=t) from None
        if drift_check:
            drift = float(np.max(np.abs(_norms(state) - norms0)))
            if drift > config.conservation_tol * (1.0 + t):
                raise NumericError(
                    f"agent norm drifted by {drift:.3e} at t={t:.6g} "
                    f"(limit {config.conservation_tol * (1.0 + t):.3e}); reduce dt", time=t)
        if step in record_at:
            recorder(step, t, state)
    return state


class _Recorder:
    def __init__(self, ensemble, observers, keep_states, transform=None, on_record=None):
        self.couplings = ensemble.couplings
        self.observers = tuple(observers)
        self.keep_states = keep_states
        self.transform = transform
        self.on_record = on_record
        self.last = None
        self.norms0 = _norms(ensemble.agents)
        self.times, self.states, self.rows = [], [], []

    def __call__(self, step, t, state):
        if self.transform is not None:
            state = self.transform(t, state)
        self.times.append(t)
        self.last = np.array(state)
        if self.keep_states:
            self.states.append(self.last)
        self.rows.append(diagnostics.observe(state, self.couplings, self.observers, self.norms0))
        if self.on_record is not None:
            self.on_record(len(self.times) - 1, t, self.last)

    def record(self) -> TrajectoryRecord:
        names = self.rows[0].keys() if self.rows else ()
        series = {name: np.array([row[name] for row in self.rows]) for name in names}
        states = np.stack(self.states) if self.keep_states else None
        return TrajectoryRecord(np.array(self.times), states, series, self.last)


def integrate(ensemble: Ensemble, config: SimConfig, observers=DEFAULT_OBSERVERS,
              keep_states: bool = True, on_record=None) -> TrajectoryRecord:
    """Advance the full model (free flow plus coupling) from 0 to ``config.t_end``.

    ``observers`` selects the recorded series (see :func:`lohe.diagnostics.observe`);
    ``on_record(index, t, state)`` is called at every record.
    """
    rec = _Recorder(ensemble, observers, keep_states, on_record=on_record)
    _run(ensemble.agents, ensemble_rhs(ensemble), config, rec)
    return rec.record()


def split_integrate(ensemble: Ensemble, config: SimConfig, observers=DEFAULT_OBSERVERS,
                    keep_states: bool = True, on_record=None) -> TrajectoryRecord:
    """Integrate the coupling-only system, then apply the free flow at record times."""
    ff = ensemble.free_flow
    if ff.kind == "dense":
        report = freeflow.validate_generator(ff, [m for m, _ in ensemble.couplings.active()])
        if not report.passed:
            raise UsageError(
                "dense free flow fails the compatibility identity "
                f"(max deviation {report.max_deviation:.3e}); splitting does not apply")
    couplings = ensemble.couplings

    def rhs(state):
        return coupling_rhs(state, couplings)

    def transform(t, state):
        return freeflow.apply_exp(ff, t, state, batched=True)

    rec = _Recorder(ensemble, observers, keep_states, transform, on_record)
    _run(ensemble.agents, rhs, config, rec)
    return rec.record()


def integrate_phases(state: PhaseState, config: SimConfig) -> TrajectoryRecord:
    """RK4 integration of the Kuramoto phase system; records ``phases`` per time."""
    coupling = state.coupling

    def rhs(theta):
        return kuramoto_rhs(PhaseState(theta, coupling))

    times, phases = [], []

    def recorder(step, t, theta):
        times.append(t)
        phases.append(np.array(theta))

    _run(state.phases, rhs, config, recorder, drift_check=False)
    return TrajectoryRecord(np.array(times), None, {"phases": np.array(phases)})
