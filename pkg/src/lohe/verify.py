"""Built-in, seeded verification suites run by ``lohe verify``.

Each suite returns a list of :class:`Check`; a tolerance override replaces the
tolerance of every check in the selected suites.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import diagnostics, freeflow, models, reference, spectral
from .errors import UsageError
from .integrate import SimConfig, integrate, integrate_phases, split_integrate
from .tensor import all_masks, coupling_term


@dataclass
class Check:
    name: str
    passed: bool
    value: float
    tol: float


@dataclass
class VerifyReport:
    checks: list

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def table(self) -> str:
        width = max([len(c.name) for c in self.checks] + [5])
        lines = [f"{'check':<{width}}  {'result':<6}  {'measured':>12}  {'tolerance':>10}"]
        for c in self.checks:
            lines.append(f"{c.name:<{width}}  {'pass' if c.passed else 'FAIL':<6}  "
                         f"{c.value:>12.3e}  {c.tol:>10.1e}")
        lines.append(f"overall: {'pass' if self.passed else 'FAIL'}")
        return "\n".join(lines)


def _below(name, value, tol, override):
    tol = tol if override is None else override
    return Check(name, bool(value < tol), float(value), tol)


def _sup_gap(a, b) -> float:
    return float(np.max(np.abs(a.states - b.states)))


def _family_models(seed=0):
    rng = np.random.default_rng(seed)
    omega = freeflow.DenseGenerator(freeflow.random_skew_hermitian(4, rng, 0.5))
    bmat = freeflow.DenseGenerator(freeflow.random_skew_hermitian(9, rng, 0.5), dims=(3, 3))
    return {
        "lohe_sphere": models.build_model("lohe_sphere", (4,), 4, kappa0=1.0, kappa1=0.5,
                                          free_flow=omega, seed=seed),
        "lohe_matrix": models.build_model("lohe_matrix", (3, 3), 4, kappa0=1.0, kappa1=0.5,
                                          free_flow=bmat, seed=seed),
        "sl": models.build_model("sl", (6,), 4, kappa=1.0, seed=seed),
        "rotational_sl": models.build_model("rotational_sl", (6,), 4, kappa=1.0, seed=seed),
        "slm": models.build_model("slm", (3, 3), 4, kappa0=1.0, kappa1=0.5, seed=seed),
        "slt": models.build_model("slt", (2, 3, 2), 4,
                                  kappa={"000": 1.0, "011": 0.5, "101": 0.3}, seed=seed),
        "lohe_tensor": models.build_model("lohe_tensor", (2, 2, 2), 4,
                                          kappa={"010": 0.8, "111": 0.4}, seed=seed),
    }


def suite_conservation(tol=None):
    cfg = SimConfig(dt=1e-3, t_end=10.0, record_stride=100)
    checks = []
    for name, ens in _family_models().items():
        tr = integrate(ens, cfg, observers=("norm_drift_max",), keep_states=False)
        checks.append(_below(f"conservation/{name}", np.max(tr.series("norm_drift_max")), 1e-8, tol))
    return checks


def suite_splitting(tol=None):
    cfg = SimConfig(dt=1e-3, t_end=5.0, record_stride=50)
    cases = {
        "sl": models.build_model("sl", (6,), 4, kappa=1.0, seed=1),
        "slm": models.build_model("slm", (3, 3), 4, kappa0=1.0, kappa1=0.5, seed=1),
        "slt": models.build_model("slt", (2, 2, 3), 4, kappa={"000": 1.0, "110": 0.5}, seed=1),
    }
    checks = []
    for name, ens in cases.items():
        full = integrate(ens, cfg, observers=())
        split = split_integrate(ens, cfg, observers=())
        checks.append(_below(f"splitting/{name}", _sup_gap(full, split), 1e-6, tol))
    return checks


def suite_kuramoto(tol=None):
    kappa = 0.8
    base = models.random_unit_agents(1, (5,), seed=2)[0]
    theta0 = np.array([0.4, -1.1, 2.0])
    ens = models.build_model("rotational_sl", (5,), kappa=kappa,
                             agents=models.phase_family_agents(base, theta0))
    cfg = SimConfig(dt=1e-3, t_end=5.0, record_stride=10)
    tr = integrate(ens, cfg, observers=())
    phases, resid = [], 0.0
    for t, state in zip(tr.times, tr.states):
        p, r = models.phase_family_check(state, base, ens.free_flow, t)
        phases.append(p)
        resid = max(resid, float(np.max(r)))
    phases = np.unwrap(np.array(phases), axis=0)
    direct = integrate_phases(models.PhaseState(theta0, kappa), cfg).series("phases")
    two = integrate_phases(models.PhaseState([1.0, 0.0], 1.0), SimConfig(dt=1e-3, t_end=1.0))
    delta = two.series("phases")[-1]
    closed = 2 * np.arctan(np.tan(0.5) * np.exp(-2.0))
    return [
        _below("kuramoto/family_residual", resid, 1e-8, tol),
        _below("kuramoto/phase_match", float(np.max(np.abs(phases - direct))), 1e-6, tol),
        _below("kuramoto/two_oscillator", abs(delta[0] - delta[1] - closed), 1e-6, tol),
    ]


def suite_flux(tol=None):
    cfg = SimConfig(dt=1e-3, t_end=5.0, record_stride=10)
    cases = [
        ("rank1", models.build_model("sl", (6,), 4, kappa=1.0, seed=3), 1e-4),
        ("rank2", models.build_model("slm", (3, 3), 4, kappa0=1.0, kappa1=0.5, seed=3), 1e-4),
        ("rank3", models.build_model("slt", (2, 2, 2), 4,
                                     kappa={"000": 1.0, "011": 0.5, "101": 0.7}, seed=3), 1e-3),
    ]
    checks = []
    for name, ens, limit in cases:
        tr = integrate(ens, cfg, observers=("R", "flux"), keep_states=False)
        res = diagnostics.flux_identity_residual(tr, ens.couplings, ens.n_agents)
        checks.append(_below(f"flux/{name}", res, limit, tol))
    return checks


def suite_monotone(tol=None):
    cfg = SimConfig(dt=1e-3, t_end=5.0, record_stride=10)
    checks = []
    for name in ("sl", "slm", "slt", "lohe_tensor"):
        ens = _family_models(4)[name]
        r = integrate(ens, cfg, observers=("R",), keep_states=False).series("R")
        worst = max(0.0, float(-np.min(np.diff(r))), float(r[0] - np.min(r)))
        checks.append(_below(f"monotone/{name}", worst, 1e-10, tol))
    return checks


def suite_rotational(tol=None):
    kappa = 1.0
    ens = models.build_model("rotational_sl", (6,), 5, kappa=kappa, seed=5)
    cfg = SimConfig(dt=1e-2, t_end=100.0 / kappa, record_stride=1)
    tr = integrate(ens, cfg, observers=("diameter_sum", "flux"), keep_states=False)
    rise = max(0.0, float(np.max(np.diff(tr.series("diameter_sum")))))
    return [
        _below("rotational/diameter_sum_increase", rise, 1e-10, tol),
        _below("rotational/final_flux", float(tr.series("flux_1")[-1]), 1e-8, tol),
    ]


def suite_jfunctional(tol=None):
    ens = models.build_model("rotational_sl", (6,), 5, kappa=1.0, seed=6)
    tr = integrate(ens, SimConfig(dt=1e-3, t_end=10.0, record_stride=50), observers=("gram",),
                   keep_states=False)
    g = tr.series("gram")
    pair = np.abs(g[:, 0, 1]) ** 2
    cyc = g[:, 0, 1] * g[:, 1, 2] * g[:, 2, 0]
    return [
        _below("jfunctional/pair", float(np.max(np.abs(pair - pair[0]))), 1e-8, tol),
        _below("jfunctional/three_cycle", float(np.max(np.abs(cyc - cyc[0]))), 1e-8, tol),
    ]


def suite_bipolar(tol=None):
    worst, misses = 0.0, 0
    for n_agents in range(2, 9):
        base = models.random_unit_agents(1, (3,), seed=n_agents)[0]
        for n in range(1, n_agents):
            arr = models.bipolar_agents(n_agents, n, base)
            worst = max(worst, abs(diagnostics.order_parameter(arr) - abs(1 - 2 * n / n_agents)))
            state = diagnostics.classify_state(arr)
            misses += state.label != f"BiPolar({min(n, n_agents - n)})"
    return [_below("bipolar/order_parameter", worst, 1e-12, tol),
            _below("bipolar/misclassified", float(misses), 0.5, None)]


def suite_aggregation(tol=None, seeds_per_case: int = 3):
    kappa = 1.0
    cfg = SimConfig(dt=0.05, t_end=200.0 / kappa, record_stride=4000)
    checks = []
    for dims in ((4,), (2, 2), (2, 2, 2)):
        worst, misses, used, seed = 0.0, 0, 0, 0
        n_agents = 4
        while used < seeds_per_case:
            agents = models.random_unit_agents(n_agents, dims, seed=seed)
            seed += 1
            if diagnostics.order_parameter(agents) <= 1 - 2 / n_agents:
                continue
            used += 1
            ens = models.build_model("lohe_tensor", dims, kappa={"0" * len(dims): kappa}, agents=agents)
            tr = integrate(ens, cfg, observers=("diameter",), keep_states=False)
            worst = max(worst, float(tr.series("diameter")[-1]))
            misses += diagnostics.classify_state(tr.final_state).verdict != "Aggregated"
        checks.append(_below(f"aggregation/rank{len(dims)}", worst, 1e-6, tol))
        checks.append(_below(f"aggregation/rank{len(dims)}_not_aggregated", float(misses), 0.5, None))
    return checks


def suite_bridge(tol=None):
    checks = []
    for dims in ((8,), (3, 4)):
        basis = spectral.fourier_basis(dims)
        coeffs = models.random_unit_agents(4, dims, seed=7)
        checks.append(_below(f"bridge/rank{len(dims)}", spectral.bridge_residual(coeffs, basis, 0.7),
                             1e-10, tol))
        gap = max(abs(spectral.flux_quadrature_oracle(coeffs, basis, m, 0.7)
                      - diagnostics.aggregation_flux(coeffs, m)) for m in all_masks(len(dims)))
        checks.append(_below(f"bridge/flux_rank{len(dims)}", gap, 1e-8, tol))
    return checks


def suite_specialization(tol=None):
    rng = np.random.default_rng(8)
    omega = freeflow.random_skew_hermitian(4, rng)
    bmat = freeflow.random_skew_hermitian(9, rng)
    v = models.random_unit_agents(5, (4,), rng=rng)
    a = models.random_unit_agents(5, (3, 3), rng=rng)
    sphere = models.lt_rhs(v, {"0": 0.7, "1": 0.4}, freeflow.DenseGenerator(omega))
    matrix = models.lt_rhs(a, {"01": 0.7, "10": 0.4}, freeflow.DenseGenerator(bmat, (3, 3)))
    base = models.random_unit_agents(1, (4,), rng=rng)[0]
    fam = models.phase_family_agents(base, rng.uniform(-np.pi, np.pi, 4))
    rot = models.lt_rhs(fam, {"1": 0.9})
    return [
        _below("specialization/sphere", float(np.max(np.abs(sphere - reference.sphere_rhs(v, 0.7, 0.4, omega)))), 1e-12, tol),
        _below("specialization/matrix", float(np.max(np.abs(matrix - reference.matrix_rhs(a, 0.7, 0.4, bmat)))), 1e-12, tol),
        _below("specialization/kuramoto", float(np.max(np.abs(rot - reference.rotational_phase_velocity(fam, 0.9)))), 1e-12, tol),
    ]


def suite_contraction(tol=None, cases: int = 60):
    rng = np.random.default_rng(9)
    worst = 0.0
    for _ in range(cases):
        rank = int(rng.integers(1, 4))
        dims = tuple(int(d) for d in rng.integers(1, 4, size=rank))
        mask = tuple(int(b) for b in rng.integers(0, 2, size=rank))
        tc, tj = (rng.standard_normal((2,) + dims) + 1j * rng.standard_normal((2,) + dims))
        got = coupling_term(tc, tj, mask)
        want = reference.naive_contraction(tc, tj, tj, mask)
        worst = max(worst, float(np.max(np.abs(got - want)) / max(np.max(np.abs(want)), 1e-300)))
    return [_below("contraction/relative", worst, 1e-12, tol)]


SUITES = {
    "conservation": suite_conservation,
    "splitting": suite_splitting,
    "kuramoto": suite_kuramoto,
    "flux": suite_flux,
    "monotone": suite_monotone,
    "rotational": suite_rotational,
    "jfunctional": suite_jfunctional,
    "bipolar": suite_bipolar,
    "aggregation": suite_aggregation,
    "bridge": suite_bridge,
    "specialization": suite_specialization,
    "contraction": suite_contraction,
}


def run_verify(suite: str = "all", tol: float | None = None) -> VerifyReport:
    names = list(SUITES) if suite == "all" else [suite]
    for name in names:
        if name not in SUITES:
            raise UsageError(f"unknown suite {name!r}; expected one of all, {', '.join(SUITES)}")
    if tol is not None and not tol > 0:
        raise UsageError("--tol must be positive")
    checks = []
    for name in names:
        checks.extend(SUITES[name](tol))
    return VerifyReport(checks)
