"""Acceptance suite: twelve end-to-end criteria at full parameters.

Each test prints one ``PASS`` or ``FAIL`` line (visible with ``pytest -s`` or
in the terminal summary when run with ``-rA``) before asserting.
"""

import itertools

import numpy as np
import pytest

from lohe import diagnostics, freeflow, models, reference, spectral
from lohe.integrate import SimConfig, integrate, integrate_phases, split_integrate
from lohe.tensor import all_masks, coupling_term

from oracles import random_complex


@pytest.fixture
def verdict(capsys):
    def report(label, worst, limit, ok=None):
        ok = worst < limit if ok is None else ok
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'}  {label}: worst={worst:.3e} limit={limit:.1e}")
        assert ok, f"{label}: {worst:.3e} >= {limit:.1e}"
    return report


def family_cases(seed):
    rng = np.random.default_rng(seed)
    omega = freeflow.DenseGenerator(freeflow.random_skew_hermitian(5, rng))
    bmat = freeflow.DenseGenerator(freeflow.random_skew_hermitian(9, rng), (3, 3))
    hmat = freeflow.DenseGenerator(freeflow.random_skew_hermitian(8, rng), (2, 2, 2))
    return {
        "lohe_sphere": models.build_model("lohe_sphere", (5,), 6, kappa0=1.0, kappa1=0.4,
                                          free_flow=omega, seed=seed),
        "lohe_matrix": models.build_model("lohe_matrix", (3, 3), 5, kappa0=0.8, kappa1=0.6,
                                          free_flow=bmat, seed=seed),
        "sl": models.build_model("sl", (7,), 6, kappa=1.2, seed=seed),
        "rotational_sl": models.build_model("rotational_sl", (7,), 6, kappa=1.2, seed=seed),
        "slm": models.build_model("slm", (3, 4), 5, kappa0=1.0, kappa1=0.5, seed=seed),
        "slt": models.build_model("slt", (2, 3, 2), 4,
                                  kappa={"000": 1.0, "011": 0.5, "101": 0.3}, seed=seed),
        "lohe_tensor": models.build_model("lohe_tensor", (2, 2, 2), 4,
                                          kappa={"010": 0.8, "111": 0.4}, free_flow=hmat, seed=seed),
    }


def test_c01_conservation(verdict):
    cfg = SimConfig(dt=1e-3, t_end=10.0, record_stride=100)
    worst = {}
    for name, ens in family_cases(101).items():
        tr = integrate(ens, cfg, observers=(), keep_states=True)
        norms = np.linalg.norm(tr.states.reshape(len(tr), ens.n_agents, -1), axis=2)
        norms0 = np.linalg.norm(ens.agents.reshape(ens.n_agents, -1), axis=1)
        worst[name] = float(np.max(np.abs(norms - norms0)))
    verdict(f"C1 conservation over {len(worst)} families", max(worst.values()), 1e-8)


def test_c02_solution_splitting(verdict):
    cfg = SimConfig(dt=1e-3, t_end=5.0, record_stride=50)
    cases = [
        models.build_model("sl", (6,), 5, kappa=1.0, seed=11),
        models.build_model("slm", (3, 3), 4, kappa0=1.0, kappa1=0.5, seed=12),
        models.build_model("slt", (2, 2, 3), 4, kappa={"000": 1.0, "110": 0.5, "011": 0.2}, seed=13),
    ]
    worst = 0.0
    for ens in cases:
        full = integrate(ens, cfg, observers=())
        split = split_integrate(ens, cfg, observers=())
        np.testing.assert_allclose(full.times, split.times, rtol=0, atol=1e-12)
        worst = max(worst, float(np.max(np.abs(full.states - split.states))))
    verdict("C2 integrate vs split_integrate, ranks 1-3", worst, 1e-6)


def test_c03_kuramoto_reduction(verdict):
    kappa = 0.7
    base = models.random_unit_agents(1, (5,), seed=21)[0]
    theta0 = np.random.default_rng(22).uniform(-np.pi, np.pi, 6)
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
    gap = float(np.max(np.abs(phases - direct)))

    closed_gap = 0.0
    for delta0, k in ((1.0, 1.0), (2.5, 0.4), (-0.8, 1.7)):
        pair = models.phase_family_agents(base, [delta0, 0.0])
        ens2 = models.build_model("rotational_sl", (5,), kappa=k, agents=pair)
        two = integrate(ens2, SimConfig(dt=1e-3, t_end=1.0), observers=())
        p, _ = models.phase_family_check(two.final_state, base, ens2.free_flow, 1.0)
        delta = np.angle(np.exp(1j * (p[0] - p[1])))
        closed = 2 * np.arctan(np.tan(delta0 / 2) * np.exp(-2 * k))
        closed_gap = max(closed_gap, abs(delta - closed))

    ok = resid < 1e-8 and gap < 1e-6 and closed_gap < 1e-6
    verdict(f"C3 Kuramoto: family residual {resid:.1e}, phase gap {gap:.1e}, N=2 closed form",
            closed_gap, 1e-6, ok)


def test_c04_flux_identity(verdict):
    cfg = SimConfig(dt=1e-3, t_end=5.0, record_stride=10)
    cases = []
    for seed in (31, 32):
        cases += [
            (models.build_model("sl", (6,), 4, kappa=1.0, seed=seed), 1e-4),
            (models.build_model("lohe_sphere", (4,), 5, kappa0=1.0, kappa1=0.3, seed=seed), 1e-4),
            (models.build_model("slm", (3, 3), 4, kappa0=1.0, kappa1=0.5, seed=seed), 1e-4),
            (models.build_model("slt", (2, 2, 2), 4,
                                kappa={"000": 1.0, "011": 0.5, "101": 0.7}, seed=seed), 1e-3),
        ]
    ratio, worst = 0.0, 0.0
    for ens, limit in cases:
        tr = integrate(ens, cfg, observers=("R", "flux"), keep_states=False)
        res = diagnostics.flux_identity_residual(tr, ens.couplings, ens.n_agents)
        worst = max(worst, res)
        ratio = max(ratio, res / limit)
    verdict(f"C4 flux identity, residual/limit ratio (worst residual {worst:.2e})", ratio, 1.0)


def test_c05_monotone_order_parameter(verdict):
    cfg = SimConfig(dt=1e-3, t_end=5.0, record_stride=10)
    rng = np.random.default_rng(41)
    cases = [models.build_model("sl", (6,), 5, kappa=k, seed=41) for k in (0.0, 0.3, 2.0)]
    cases += [models.build_model("slm", (3, 3), 4, kappa0=k0, kappa1=k1, seed=42)
              for k0, k1 in ((0.0, 1.0), (1.0, 0.0), (0.7, 0.7))]
    cases += [models.build_model("lohe_sphere", (4,), 5, kappa0=1.0, kappa1=0.5,
                                 free_flow=freeflow.DenseGenerator(freeflow.random_skew_hermitian(4, rng)),
                                 seed=43)]
    for seed in range(3):
        kappa = {"".join(map(str, m)): float(rng.uniform(0, 1.5))
                 for m in all_masks(3) if rng.random() < 0.5} or {"000": 1.0}
        cases.append(models.build_model("slt", (2, 2, 2), 4, kappa=kappa, seed=44 + seed))
    worst = 0.0
    for ens in cases:
        r = integrate(ens, cfg, observers=("R",), keep_states=False).series("R")
        worst = max(worst, float(-np.min(np.diff(r))), float(r[0] - np.min(r)))
    verdict(f"C5 R non-decreasing over {len(cases)} configurations", max(worst, 0.0), 1e-10)


def test_c06_rotational_diameter_decay(verdict):
    worst_rise, worst_flux = 0.0, 0.0
    for kappa, seed in ((1.0, 51), (2.0, 52)):
        ens = models.build_model("rotational_sl", (6,), 5, kappa=kappa, seed=seed)
        cfg = SimConfig(dt=1e-2 / kappa, t_end=100.0 / kappa, record_stride=1)
        tr = integrate(ens, cfg, observers=("diameter_sum", "flux"), keep_states=False)
        worst_rise = max(worst_rise, float(np.max(np.diff(tr.series("diameter_sum")))))
        worst_flux = max(worst_flux, float(tr.series("flux_1")[-1]))
    ok = worst_rise < 1e-10 and worst_flux < 1e-8
    verdict(f"C6 rotational diameter sum (max rise {worst_rise:.1e}), flux at t=100/kappa",
            worst_flux, 1e-8, ok)


def test_c07_conserved_j_functionals(verdict):
    ens = models.build_model("rotational_sl", (6,), 5, kappa=1.0, seed=61)
    tr = integrate(ens, SimConfig(dt=1e-3, t_end=10.0, record_stride=50), observers=())
    worst = 0.0
    first = tr.states[0].reshape(ens.n_agents, -1)
    g0 = np.conj(first) @ first.T
    for state in tr.states:
        flat = state.reshape(ens.n_agents, -1)
        g = np.conj(flat) @ flat.T
        worst = max(worst, float(np.max(np.abs(np.abs(g) ** 2 - np.abs(g0) ** 2))))
    for cycle in ((0, 1, 2), (1, 3, 4), (0, 4, 2)):
        j = np.array([diagnostics.j_functional(s, cycle) for s in tr.states])
        worst = max(worst, float(np.max(np.abs(j - j[0]))))
    verdict("C7 pair moduli and 3-cycle J drift", worst, 1e-8)


def test_c08_bipolar_signature(verdict):
    worst, misses = 0.0, 0
    for n_agents in range(2, 9):
        base = models.random_unit_agents(1, (3, 2), seed=80 + n_agents)[0]
        for n in range(1, n_agents):
            arr = models.bipolar_agents(n_agents, n, base)
            worst = max(worst, abs(diagnostics.order_parameter(arr) - abs(1 - 2 * n / n_agents)))
            misses += diagnostics.classify_state(arr).label != f"BiPolar({min(n, n_agents - n)})"
    verdict(f"C8 bi-polar R and labels ({misses} misclassified)", worst, 1e-12, worst < 1e-12 and not misses)


def test_c09_aggregation_criterion(verdict):
    kappa = 1.0
    cfg = SimConfig(dt=0.05, t_end=200.0 / kappa, record_stride=4000)
    n_agents, worst, failures = 4, 0.0, 0
    for dims in ((4,), (2, 2), (2, 2, 2)):
        used, seed = 0, 0
        while used < 20:
            agents = models.random_unit_agents(n_agents, dims, seed=9000 + seed)
            seed += 1
            if diagnostics.order_parameter(agents) <= 1 - 2 / n_agents:
                continue
            used += 1
            ens = models.build_model("lohe_tensor", dims, kappa={"0" * len(dims): kappa}, agents=agents)
            tr = integrate(ens, cfg, observers=("diameter",), keep_states=False)
            d = float(tr.series("diameter")[-1])
            worst = max(worst, d)
            failures += d >= 1e-6 or diagnostics.classify_state(tr.final_state).verdict != "Aggregated"
    verdict(f"C9 aggregation, 60 filtered seeds ({failures} failures)", worst, 1e-6, failures == 0)


def test_c10_spectral_bridge(verdict):
    bridge, flux_gap = 0.0, 0.0
    for dims, seed in (((8,), 101), ((5,), 102), ((3, 4), 103), ((4, 4), 104)):
        basis = spectral.fourier_basis(dims)
        rng = np.random.default_rng(seed)
        raw = random_complex(rng, (4,) + dims)
        coeffs = raw / np.linalg.norm(raw.reshape(4, -1), axis=1).reshape((4,) + (1,) * len(dims))
        for t in (0.0, 0.7, 3.1):
            bridge = max(bridge, spectral.bridge_residual(coeffs, basis, t))
            for mask in all_masks(len(dims)):
                flux_gap = max(flux_gap, abs(spectral.flux_quadrature_oracle(coeffs, basis, mask, t)
                                             - diagnostics.aggregation_flux(coeffs, mask)))
    verdict(f"C10 bridge residual {bridge:.1e}, flux quadrature gap", flux_gap, 1e-8,
            bridge < 1e-10 and flux_gap < 1e-8)


def test_c11_specialization_equivalence(verdict):
    rng = np.random.default_rng(111)
    worst = 0.0
    for _ in range(10):
        d = int(rng.integers(2, 6))
        omega = freeflow.random_skew_hermitian(d, rng)
        v = random_complex(rng, (5, d))
        k0, k1 = rng.uniform(0, 2, 2)
        got = models.lt_rhs(v, {"0": k0, "1": k1}, freeflow.DenseGenerator(omega))
        worst = max(worst, float(np.max(np.abs(got - reference.sphere_rhs(v, k0, k1, omega)))))

        p, q = (int(x) for x in rng.integers(2, 4, 2))
        bmat = freeflow.random_skew_hermitian(p * q, rng)
        a = random_complex(rng, (4, p, q))
        got = models.lt_rhs(a, {"01": k0, "10": k1}, freeflow.DenseGenerator(bmat, (p, q)))
        worst = max(worst, float(np.max(np.abs(got - reference.matrix_rhs(a, k0, k1, bmat)))))

        base = models.random_unit_agents(1, (d,), rng=rng)[0]
        fam = models.phase_family_agents(base, rng.uniform(-np.pi, np.pi, 4))
        got = models.lt_rhs(fam, {"1": k0})
        worst = max(worst, float(np.max(np.abs(got - reference.rotational_phase_velocity(fam, k0)))))
    verdict("C11 master RHS vs closed-form sphere, matrix and Kuramoto forms", worst, 1e-12)


def test_c12_contraction_oracle(verdict):
    rng = np.random.default_rng(121)
    worst = 0.0
    ranks = itertools.cycle((1, 2, 3))
    for _ in range(200):
        rank = next(ranks)
        dims = tuple(int(d) for d in rng.integers(1, 5, size=rank))
        mask = tuple(int(b) for b in rng.integers(0, 2, size=rank))
        tc, tj = random_complex(rng, (2,) + dims)
        got = coupling_term(tc, tj, mask)
        want = reference.naive_contraction(tc, tj, tj, mask)
        worst = max(worst, float(np.max(np.abs(got - want)) / np.max(np.abs(want))))
    verdict("C12 coupling_term vs nested-loop oracle, 200 cases", worst, 1e-12)
