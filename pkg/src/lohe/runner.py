"""Config-driven runs: ensemble construction, output files, sweeps, classification.

Output layout of one run directory::

    series.csv        t, R, diameter, [diameter_sum,] norm_drift_max, flux_<mask>...
    summary.json      final R and diameter, verdict, wall time, config echo
    final_state.txt   last state in the snapshot format
    snapshots/        optional snapshot_XXXXXX.txt files

Snapshot format: ``t=<time>``, ``agents=<N>`` and ``dims=<d1,...>`` header
lines, then one ``re,im`` entry per line in row-major ``(N, *dims)`` order.
"""

from __future__ import annotations

import json
import math
import os
import time as _time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import diagnostics, freeflow, models
from .config import RunConfig
from .errors import NumericError, UsageError
from .integrate import SimConfig, integrate, split_integrate
from .spectral import fourier_basis

THREADS_ENV = "LOHE_NUM_THREADS"
SERIES_ORDER = ("R", "diameter", "diameter_sum", "norm_drift_max")


# -- snapshot files ---------------------------------------------------------

def save_snapshot(path, agents, t: float = 0.0) -> None:
    arr = np.asarray(agents, dtype=np.complex128)
    lines = [f"t={t:.17g}", f"agents={arr.shape[0]}",
             "dims=" + ",".join(str(d) for d in arr.shape[1:])]
    lines += [f"{z.real:.17g},{z.imag:.17g}" for z in arr.ravel()]
    Path(path).write_text("\n".join(lines) + "\n")


def load_snapshot(path) -> tuple:
    """Return ``(t, agents)`` from a snapshot file."""
    path = Path(path)
    try:
        lines = path.read_text().splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read snapshot {path}: {exc.strerror}") from None
    header = {}
    for lineno, key in enumerate(("t", "agents", "dims"), start=1):
        if len(lines) < lineno or not lines[lineno - 1].startswith(key + "="):
            raise UsageError(f"{path}:{lineno}: expected '{key}=' header line")
        header[key] = lines[lineno - 1][len(key) + 1:]
    try:
        t = float(header["t"])
        n = int(header["agents"])
        dims = tuple(int(d) for d in header["dims"].split(","))
    except ValueError:
        raise UsageError(f"{path}: malformed header") from None
    values = []
    for lineno, line in enumerate(lines[3:], start=4):
        if not line.strip():
            continue
        try:
            re_, im_ = line.split(",")
            values.append(complex(float(re_), float(im_)))
        except ValueError:
            raise UsageError(f"{path}:{lineno}: bad entry {line!r}, expected re,im") from None
    if len(values) != n * int(np.prod(dims)):
        raise UsageError(f"{path}: {len(values)} entries do not fill {n} agents of dims {dims}")
    return t, np.array(values).reshape((n,) + dims)


# -- ensembles from configs -------------------------------------------------

def build_free_flow(cfg: RunConfig):
    ff = cfg.free_flow
    if ff.kind == "none":
        return freeflow.ABSENT
    if ff.kind == "spectral":
        if ff.eigenvalues is None:
            return fourier_basis(cfg.model.dims).free_flow()
        return freeflow.SpectralDiagonal(ff.eigenvalues)
    return freeflow.load_generator(ff.generator, dims=cfg.model.dims)


def initial_agents(cfg: RunConfig) -> np.ndarray:
    m, init = cfg.model, cfg.initial
    rng = np.random.default_rng(init.seed)
    if init.kind == "random":
        return models.random_unit_agents(m.agents, m.dims, rng=rng, normalize=init.normalize)
    if init.kind == "bipolar":
        base = models.random_unit_agents(1, m.dims, rng=rng)[0]
        return models.bipolar_agents(m.agents, init.n, base)
    if init.kind == "phase_family":
        base = models.random_unit_agents(1, m.dims, rng=rng)[0]
        phases = init.phases
        if phases is None:
            phases = rng.uniform(-np.pi, np.pi, m.agents)
        return models.phase_family_agents(base, phases)
    _, agents = load_snapshot(init.path)
    if agents.shape != (m.agents,) + tuple(m.dims):
        raise UsageError(f"{init.path}: snapshot has shape {agents.shape[0]} x {agents.shape[1:]}, "
                         f"config expects {m.agents} x {tuple(m.dims)}")
    return agents


def build_ensemble(cfg: RunConfig) -> models.Ensemble:
    m = cfg.model
    return models.build_model(m.family, m.dims, kappa=m.kappa, kappa0=m.kappa0, kappa1=m.kappa1,
                              free_flow=build_free_flow(cfg), agents=initial_agents(cfg))


def sim_config(cfg: RunConfig) -> SimConfig:
    i = cfg.integrate
    return SimConfig(i.dt, i.t_end, i.record_stride, i.conservation_tol, cfg.initial.seed)


# -- single runs ------------------------------------------------------------

@dataclass
class RunResult:
    trajectory: object
    summary: dict
    columns: list


def series_columns(cfg: RunConfig, ensemble) -> list:
    wanted = cfg.outputs.diagnostics
    cols = ["t"] + [name for name in SERIES_ORDER if name in wanted]
    if "flux" in wanted:
        cols += [diagnostics.flux_column(mask) for mask, _ in ensemble.couplings.active()]
    return cols


def execute(cfg: RunConfig, on_record=None) -> RunResult:
    """Build the ensemble, integrate it and classify the final state."""
    ensemble = build_ensemble(cfg)
    observers = list(cfg.outputs.diagnostics)
    start = _time.perf_counter()
    run = split_integrate if cfg.integrate.method == "split" else integrate
    traj = run(ensemble, sim_config(cfg), observers=observers, keep_states=False,
               on_record=on_record)
    wall = _time.perf_counter() - start
    final = traj.final_state
    verdict = diagnostics.classify_state(final)
    summary = {
        "initial_R": diagnostics.order_parameter(ensemble.agents),
        "final_R": diagnostics.order_parameter(final),
        "final_diameter": float(verdict.diameter),
        "verdict": verdict.label,
        "t_end": float(traj.times[-1]),
        "records": len(traj),
        "wall_time_s": wall,
        "config": cfg.to_dict(),
    }
    return RunResult(traj, summary, series_columns(cfg, ensemble))


def write_series(path, traj, columns) -> None:
    data = [traj.times] + [traj.series(c) for c in columns[1:]]
    rows = np.column_stack(data) if data else np.empty((0, 0))
    with open(path, "w") as fh:
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")


def read_series(path) -> dict:
    path = Path(path)
    lines = path.read_text().splitlines()
    if not lines:
        raise UsageError(f"{path}: empty series file")
    names = lines[0].split(",")
    values = np.array([[float(v) for v in line.split(",")] for line in lines[1:] if line.strip()])
    values = values.reshape(-1, len(names))
    return {name: values[:, k] for k, name in enumerate(names)}


def run_simulate(cfg: RunConfig, out_dir) -> dict:
    """Run one configuration and write its output directory; returns the summary."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stride = cfg.outputs.snapshot_stride
    on_record = None
    if stride:
        snap_dir = out / "snapshots"
        snap_dir.mkdir(exist_ok=True)

        def on_record(index, t, state):
            if index % stride == 0:
                save_snapshot(snap_dir / f"snapshot_{index:06d}.txt", state, t)

    result = execute(cfg, on_record)
    write_series(out / "series.csv", result.trajectory, result.columns)
    save_snapshot(out / "final_state.txt", result.trajectory.final_state,
                  float(result.trajectory.times[-1]))
    (out / "summary.json").write_text(json.dumps(result.summary, indent=2) + "\n")
    return result.summary


# -- sweeps -----------------------------------------------------------------

def thread_count(default=None) -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw is None:
        return default or os.cpu_count() or 1
    try:
        value = int(raw)
    except ValueError:
        raise UsageError(f"{THREADS_ENV} must be a positive integer, got {raw!r}") from None
    if value < 1:
        raise UsageError(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
    return value


def sweep_values(start: float, stop: float, steps: int) -> np.ndarray:
    if steps < 1:
        raise UsageError("--steps must be at least 1")
    if not (math.isfinite(start) and math.isfinite(stop)):
        raise UsageError("sweep bounds must be finite")
    return np.array([start]) if steps == 1 else np.linspace(start, stop, steps)


def run_sweep(cfg: RunConfig, param: str, start: float, stop: float, steps: int,
              out_dir, threads: int | None = None) -> list:
    """One run per grid value of ``param``; writes ``sweep.csv`` and returns its rows."""
    values = sweep_values(start, stop, steps)
    configs = [cfg.replace_path(param, v) for v in values]

    def one(c):
        try:
            s = execute(c).summary
            return s["final_R"], s["final_diameter"], s["verdict"]
        except NumericError as exc:
            return math.nan, math.nan, f"Aborted(t={exc.time:.6g})"

    with ThreadPoolExecutor(max_workers=threads or thread_count()) as pool:
        results = list(pool.map(one, configs))
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = [(float(v),) + r for v, r in zip(values, results)]
    with open(out / "sweep.csv", "w") as fh:
        fh.write(f"{param},final_R,final_diameter,verdict\n")
        for v, r, d, verdict in rows:
            fh.write(f"{v:.17g},{r:.17g},{d:.17g},{verdict}\n")
    return rows


# -- classification of a finished run ---------------------------------------

def classify_directory(run_dir) -> dict:
    run_dir = Path(run_dir)
    state_path = run_dir / "final_state.txt"
    if not state_path.exists():
        raise UsageError(f"{run_dir}: no final_state.txt; is this a simulate output directory?")
    t, agents = load_snapshot(state_path)
    verdict = diagnostics.classify_state(agents)
    report = {"t": t, "verdict": verdict.label, "final_R": verdict.R,
              "final_diameter": verdict.diameter, "signs": list(verdict.signs)}
    series_path = run_dir / "series.csv"
    if series_path.exists():
        series = read_series(series_path)
        if "R" in series and series["R"].size > 1:
            r = series["R"]
            report["min_R_increment"] = float(np.min(np.diff(r)))
    return report
