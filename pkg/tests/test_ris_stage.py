import numpy as np
import pytest
from scipy.optimize import minimize

from conftest import feasible_instance, make_cs, toy_scenario
from riswipt.fp import AuxVars, eval_fc, stationary_aux
from riswipt.model import (ReflectionVector, TxDesign, all_harvested, evaluate,
                           ris_power)
from riswipt.ris_stage import (build_ris, energy_eigenbeams, ris_objective,
                               solve_ris, solve_ris_repair)
from riswipt.scenario import Budget


def reflection(u):
    return ReflectionVector(gains=np.asarray(u, dtype=complex))


def test_signal_free_limit(rng):
    s, cs, design, u, budget, aux = feasible_instance(rng, k_e=2)
    silent = TxDesign(beams=np.zeros_like(design.beams),
                      energy_cov=np.zeros_like(design.energy_cov))
    data = build_ris(s, cs, aux, silent, budget, reflection(u))
    np.testing.assert_allclose(data.e, np.zeros_like(data.e), atol=1e-15)
    for i in range(s.n_er):
        expected = s.ris_noise_eff * np.diag(np.abs(cs.ris_er[i]) ** 2)
        np.testing.assert_allclose(data.er_quads[i], expected, atol=1e-15)
        np.testing.assert_allclose(data.er_lins[i], 0.0, atol=1e-15)


def test_scalar_hand_expansion():
    # L = N = K_I = K_E = 1 with every quantity written out longhand
    s = toy_scenario(n=1, l=1, k_i=1, k_e=1, noise_ris=0.5, noise_ir=1.0,
                     noise_er=1.0, eta=(0.8,), weights=(1.0,),
                     p_thresholds=(0.1,))
    q = 1.5 + 0.5j
    g_d, g_r = 0.7 - 0.2j, 0.9 + 0.4j
    h_d, h_r = -0.3 + 0.6j, 0.8 - 0.1j
    w = 1.1 - 0.3j
    v = 0.4
    cs = make_cs(bs_ris=[[q]], bs_ir=[[g_d]], bs_er=[[h_d]],
                 ris_ir=[[g_r]], ris_er=[[h_r]])
    design = TxDesign(beams=np.array([[w]]), energy_cov=np.array([[v]], dtype=complex))
    gamma_t, rho = 1.7, 0.6 + 0.2j
    aux = AuxVars(gamma_tilde=np.array([gamma_t]), rho=np.array([rho]))
    anchor_u = 0.3 + 0.1j
    data = build_ris(s, cs, aux, design, Budget(2.0, 2.0), reflection([anchor_u]))

    mix = abs(w) ** 2 + v
    e_expected = (2 * np.sqrt(1.0 * (1 + gamma_t)) * np.conj(rho) * np.conj(g_r) * q * w
                  - 2 * abs(rho) ** 2 * np.conj(g_r) * q * mix * g_d)
    f_expected = abs(rho) ** 2 * (abs(g_r) ** 2 * abs(q) ** 2 * mix
                                  + 0.5 * abs(g_r) ** 2)
    j_expected = abs(q) ** 2 * abs(w) ** 2 + abs(q) ** 2 * v + 0.5
    r_quad_expected = abs(h_r) ** 2 * abs(q) ** 2 * mix + 0.5 * abs(h_r) ** 2
    r_lin_expected = np.conj(h_r) * q * mix * h_d
    p_adj_expected = 0.1 / 0.8 - (abs(w * h_d) ** 2 + v * abs(h_d) ** 2)

    assert data.e[0] == pytest.approx(e_expected, rel=1e-10)
    assert data.f_mat[0, 0] == pytest.approx(f_expected, rel=1e-10)
    assert data.j_mat[0, 0] == pytest.approx(j_expected, rel=1e-10)
    assert data.er_quads[0, 0, 0] == pytest.approx(r_quad_expected, rel=1e-10)
    assert data.er_lins[0, 0] == pytest.approx(r_lin_expected, rel=1e-10)
    assert data.er_thresholds_adj[0] == pytest.approx(p_adj_expected, rel=1e-10)
    phi_t = np.conj(anchor_u)
    assert data.er_thresholds_lin[0] == pytest.approx(
        p_adj_expected + abs(phi_t) ** 2 * r_quad_expected, rel=1e-10)


def test_rank_one_energy_factors(rng):
    vec = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    factors = energy_eigenbeams(np.outer(vec, vec.conj()))
    assert factors.shape == (1, 4)
    phase = np.vdot(factors[0], vec)
    np.testing.assert_allclose(factors[0] * phase / abs(phase), vec, rtol=1e-10)


def test_radiated_power_matches_quadratic_form(rng):
    for _ in range(5):
        s, cs, design, u, budget, aux = feasible_instance(rng)
        data = build_ris(s, cs, aux, design, budget, reflection(u))
        phi = np.conj(u)
        quad = float(np.real(phi.conj() @ data.j_mat @ phi))
        assert quad == pytest.approx(ris_power(s, cs, design, u), rel=1e-9)
        assert np.linalg.eigvalsh(data.j_mat).min() >= s.ris_noise_eff - 1e-9


def test_harvest_matches_quadratic_expansion(rng):
    for _ in range(5):
        s, cs, design, u, budget, aux = feasible_instance(rng, k_e=3)
        data = build_ris(s, cs, aux, design, budget, reflection(u))
        phi = np.conj(u)
        rebuilt = s.eta_array() * np.array([
            np.real(phi.conj() @ data.er_quads[i] @ phi)
            + 2 * np.real(np.vdot(phi, data.er_lins[i]))
            + data.er_direct_power[i]
            for i in range(s.n_er)])
        np.testing.assert_allclose(rebuilt, all_harvested(s, cs, design, u), rtol=1e-9)


def test_objective_matches_surrogate_up_to_constant(rng):
    for _ in range(5):
        s, cs, design, u, budget, aux = feasible_instance(rng)
        data = build_ris(s, cs, aux, design, budget, reflection(u))
        consts = []
        for _ in range(4):
            cand = rng.standard_normal(len(u)) + 1j * rng.standard_normal(len(u))
            consts.append(eval_fc(s, cs, design, cand, aux)
                          - ris_objective(data, reflection(cand)))
        assert np.ptp(consts) <= 1e-9 * max(1.0, abs(consts[0]))


def test_sca_linearization_lower_bounds_quadratic(rng):
    s, cs, design, u, budget, aux = feasible_instance(rng, k_e=2)
    data = build_ris(s, cs, aux, design, budget, reflection(u))
    for _ in range(20):
        phi = rng.standard_normal(len(u)) + 1j * rng.standard_normal(len(u))
        for i in range(s.n_er):
            quad = float(np.real(phi.conj() @ data.er_quads[i] @ phi))
            lin = (2 * np.real(phi.conj() @ (data.er_quads[i] @ data.anchor_phi))
                   - data.er_anchor_quads[i])
            assert quad >= lin - 1e-9


def test_scalar_closed_form_solution():
    # single element, no harvesters: amplitude caps at min(|e|/(2F), sqrt(P/J))
    s = toy_scenario(n=1, l=1, k_i=1, k_e=0, noise_ris=0.2)
    q = 1.0 + 0.5j
    cs = make_cs(bs_ris=[[q]], bs_ir=[[0.8 - 0.1j]], ris_ir=[[0.6 + 0.9j]])
    design = TxDesign(beams=np.array([[1.2 + 0.1j]]),
                      energy_cov=np.array([[0.2]], dtype=complex))
    aux = stationary_aux(s, cs, design, np.array([0.4 + 0.2j]))
    for p_ris in (0.05, 50.0):
        budget = Budget(p_bs=5.0, p_ris=p_ris)
        data = build_ris(s, cs, aux, design, budget, reflection([0.4 + 0.2j]))
        out = solve_ris(data, s, budget)
        e0, f0 = data.e[0], data.f_mat[0, 0].real
        j0 = data.j_mat[0, 0].real
        expected_amp = min(abs(e0) / (2 * f0), np.sqrt(p_ris / j0))
        assert abs(out.gains[0]) == pytest.approx(expected_amp, rel=1e-5)
        # gains are the conjugated subproblem variable: phase flips
        assert np.angle(out.gains[0]) == pytest.approx(-np.angle(e0), abs=1e-5)
        achieved = ris_objective(data, out)
        closed_form = (abs(e0) * expected_amp - f0 * expected_amp ** 2) / np.log(2)
        assert achieved == pytest.approx(closed_form, rel=1e-6)


def test_zero_linear_term_stays_dark(rng):
    # silent transmitter with nonzero multipliers: pure penalty, gains collapse
    s, cs, design, u, budget, _ = feasible_instance(rng, k_e=0)
    silent = TxDesign(beams=np.zeros_like(design.beams),
                      energy_cov=np.zeros_like(design.energy_cov))
    aux = AuxVars(gamma_tilde=np.ones(s.n_ir),
                  rho=np.ones(s.n_ir, dtype=complex))
    data = build_ris(s, cs, aux, silent, budget, reflection(np.zeros_like(u)))
    out = solve_ris(data, s, budget)
    np.testing.assert_allclose(np.abs(out.gains), 0.0, atol=1e-5)


def test_solution_feasible_and_ascending(rng):
    for trial in range(10):
        scheme = ("active", "passive")[trial % 2]
        s, cs, design, u, budget, aux = feasible_instance(rng, scheme=scheme)
        data = build_ris(s, cs, aux, design, budget, reflection(u))
        out = solve_ris(data, s, budget)
        metrics = evaluate(s, cs, design, out.gains, budget)
        assert metrics.feasible, (scheme, metrics)
        assert eval_fc(s, cs, design, out.gains, aux) >= \
            eval_fc(s, cs, design, u, aux) - 1e-6
        if scheme == "passive":
            assert np.abs(out.gains).max() <= 1.0 + 1e-7


@pytest.mark.slow
def test_two_element_matches_direct_search(rng):
    # L=2 with one harvester: SLSQP over amplitudes and phases from many starts
    s, cs, design, u, budget, aux = feasible_instance(rng, n=2, l=2, k_i=2, k_e=1)
    data = build_ris(s, cs, aux, design, budget, reflection(u))
    out = solve_ris(data, s, budget)
    conic_obj = ris_objective(data, out)

    def params_to_phi(p):
        return np.array([p[0] * np.exp(1j * p[1]), p[2] * np.exp(1j * p[3])])

    def neg_obj(p):
        phi = params_to_phi(p)
        return -(np.real(np.vdot(phi, data.e))
                 - np.real(phi.conj() @ data.f_mat @ phi)) / np.log(2)

    def power_slack(p):
        phi = params_to_phi(p)
        return budget.p_ris - np.real(phi.conj() @ data.j_mat @ phi)

    def er_slack(p):
        phi = params_to_phi(p)
        lin = 2 * np.real(phi.conj() @ (data.er_lins[0]
                                        + data.er_quads[0] @ data.anchor_phi))
        return lin - data.er_thresholds_lin[0]

    constraints = [{"type": "ineq", "fun": power_slack},
                   {"type": "ineq", "fun": er_slack}]
    best = np.inf
    anchor_p = np.array([abs(data.anchor_phi[0]), np.angle(data.anchor_phi[0]),
                         abs(data.anchor_phi[1]), np.angle(data.anchor_phi[1])])
    starts = [anchor_p]
    for amp in (0.3, 1.0):
        for t1 in np.linspace(0, 2 * np.pi, 4, endpoint=False):
            starts.append(np.array([amp, t1, amp, -t1]))
    for p0 in starts:
        res = minimize(neg_obj, p0, method="SLSQP", constraints=constraints,
                       options={"maxiter": 500, "ftol": 1e-12})
        if res.success:
            best = min(best, res.fun)
    assert conic_obj == pytest.approx(-best, abs=1e-3)


def test_repair_raises_minimum_harvest(rng):
    for trial in range(5):
        s, cs, design, u, budget, aux = feasible_instance(rng, k_e=2)
        harvested = all_harvested(s, cs, design, u)
        s = s.replace(p_thresholds=tuple(2.0 * harvested))
        data = build_ris(s, cs, stationary_aux(s, cs, design, u), design, budget,
                         reflection(u))
        out = solve_ris_repair(data, s, budget)
        new_harvest = all_harvested(s, cs, design, out.gains)
        old = (harvested / s.threshold_array()).min()
        new = (new_harvest / s.threshold_array()).min()
        assert new >= old - 1e-9
        assert ris_power(s, cs, design, out.gains) <= budget.p_ris * (1 + 1e-6)
