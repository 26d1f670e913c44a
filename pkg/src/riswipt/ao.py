"""Alternating optimization driver.

One outer iteration updates the two auxiliary blocks in closed form, then
solves the transmit and reflection subproblems in turn.  Every block update
maximizes the same surrogate over a set containing the previous iterate, so
the weighted sum rate never decreases (up to solver tolerance), and the
linearized harvest constraints keep every iterate feasible for the original
problem.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .bf_stage import build_bf, solve_bf, solve_bf_repair
from .channel import ChannelSet
from .errors import InfeasibleBudget, InfeasibleStart, SolverFailure
from .fp import eval_fc, stationary_aux
from .model import (Metrics, ReflectionVector, TxDesign, all_harvested,
                    effective_ir_channels, evaluate, ris_power)
from .ris_stage import build_ris, solve_ris, solve_ris_repair
from .scenario import Budget, Scenario, split_budget

CONVERGED = "converged"
MAX_ITERS = "max_iters"
INFEASIBLE_START = "infeasible_start"
SOLVER_FAILURE = "solver_failure"

REPAIR_ROUNDS = 20
INIT_RIS_FILLS = (0.9, 0.3, 0.05)  # candidate fractions of the amplification cap


def noise_normalized(s: Scenario, cs: ChannelSet) -> tuple[Scenario, ChannelSet]:
    """Change of units putting the IR noise floor at one.

    Receiver-side channels are divided by sqrt(noise_ir); receiver noise
    powers and harvest thresholds by noise_ir.  The forward matrix, the
    element gains, the element noise and all power budgets are untouched, so
    SINRs, rates, surrogate values, consumed powers and every feasibility
    margin are invariant.  The conic subproblem data then spans far fewer
    orders of magnitude, which both solver engines repay with accuracy.
    """
    sigma2 = s.noise_ir
    if sigma2 == 1.0:
        return s, cs
    sigma = np.sqrt(sigma2)
    scaled = ChannelSet(
        bs_ris=cs.bs_ris.copy(),
        bs_ir=cs.bs_ir / sigma, bs_er=cs.bs_er / sigma,
        ris_ir=cs.ris_ir / sigma, ris_er=cs.ris_er / sigma,
        ir_pos=cs.ir_pos.copy(), er_pos=cs.er_pos.copy())
    adjusted = s.replace(
        noise_ir=1.0, noise_er=s.noise_er / sigma2,
        p_thresholds=tuple(p / sigma2 for p in s.p_thresholds))
    return adjusted, scaled


@dataclass(frozen=True)
class IterRecord:
    wsr: float         # bits/s/Hz after the iteration
    surrogate: float   # quadratic-transform surrogate at the iteration's auxiliaries
    feasible: bool
    bf_status: str
    ris_status: str
    wall_ms: float


@dataclass(frozen=True)
class AoTrace:
    status: str
    records: tuple          # one IterRecord per completed outer iteration
    design: TxDesign | None
    reflect: ReflectionVector | None
    metrics: Metrics | None

    @property
    def iterations(self) -> int:
        return len(self.records)

    @property
    def wsr(self) -> float:
        return self.metrics.wsr if self.metrics is not None else 0.0


def _aligned_phases(s: Scenario, cs: ChannelSet) -> np.ndarray:
    """Unit gains making every element's cascade add to the strongest IR's
    direct path."""
    k_star = int(np.argmax(s.weight_array()))
    g_d = cs.bs_ir[k_star]
    z = cs.ris_ir[k_star] * (np.conj(cs.bs_ris) @ np.conj(g_d))
    return np.exp(1j * np.angle(np.where(z == 0, 1.0, z)))


def _complete_start(s: Scenario, cs: ChannelSet, budget: Budget,
                    u: np.ndarray, fill: float) -> tuple[TxDesign, ReflectionVector]:
    """Matched beams and identity covariance at the half/half power split,
    then the gain amplitude sized to the requested fraction of the cap."""
    g_eff = effective_ir_channels(cs, u)
    norms = np.linalg.norm(g_eff, axis=1)
    norms = np.where(norms > 0, norms, 1.0)
    beams = np.sqrt(0.5 * budget.p_bs / s.n_ir) * (g_eff / norms[:, None])
    v = (0.5 * budget.p_bs / s.n_antennas) * np.eye(s.n_antennas, dtype=complex)
    design = TxDesign(beams=beams, energy_cov=v)
    if s.scheme == "active" and len(u) > 0:
        base = ris_power(s, cs, design, u)
        if base > 0:
            u = u * np.sqrt(fill * budget.p_ris / base)
    return design, ReflectionVector(gains=u)


def _start_candidates(s: Scenario, cs: ChannelSet, budget: Budget,
                      rng: np.random.Generator) -> list:
    """Deterministic family of start points.

    One random phase profile (exploration) and one cascade-aligned profile
    (a lone random draw can strand the alternation in a poor basin), each
    at several amplification fills: starting hard against the cap amplifies
    so much element noise at large budgets that the loop cannot climb out.
    """
    l = s.n_elements
    if s.scheme == "none" or l == 0:
        return [_complete_start(s, cs, budget, np.zeros(l, dtype=complex), 0.0)]
    profiles = [np.exp(1j * rng.uniform(0.0, 2.0 * np.pi, size=l)),
                _aligned_phases(s, cs)]
    fills = INIT_RIS_FILLS if s.scheme == "active" else (1.0,)
    return [_complete_start(s, cs, budget, u, fill)
            for u in profiles for fill in fills]


def _ao_step(s: Scenario, cs: ChannelSet, budget: Budget, design: TxDesign,
             reflect: ReflectionVector, engine: str | None
             ) -> tuple[TxDesign, ReflectionVector, str]:
    """One full outer iteration with the ascent safeguard.

    Raises SolverFailure when a stage cannot produce a usable point; a stage
    whose solve merely fails to improve the surrogate keeps its anchor.
    """
    aux = stationary_aux(s, cs, design, reflect.gains)
    data = build_bf(s, cs, aux, reflect.gains, budget, design)
    candidate = solve_bf(data, s, budget, engine=engine)
    if (eval_fc(s, cs, candidate, reflect.gains, aux)
            >= eval_fc(s, cs, design, reflect.gains, aux)):
        design = candidate
    ris_status = "skipped"
    if s.scheme != "none" and s.n_elements > 0:
        rdata = build_ris(s, cs, aux, design, budget, reflect)
        r_candidate = solve_ris(rdata, s, budget, engine=engine)
        if (eval_fc(s, cs, design, r_candidate.gains, aux)
                >= eval_fc(s, cs, design, reflect.gains, aux)):
            reflect = r_candidate
        ris_status = "optimal"
    return design, reflect, ris_status


def initialize(s: Scenario, cs: ChannelSet, budget: Budget,
               rng: np.random.Generator, engine: str | None = None
               ) -> tuple[TxDesign, ReflectionVector]:
    """Feasible starting point, repaired toward the harvest thresholds.

    Candidates already inside the harvest region are screened by one outer
    iteration and the best continues; otherwise the first candidate is walked
    into the region by the max-min repair.  Raises InfeasibleStart when the
    repair cannot reach every threshold.
    """
    candidates = _start_candidates(s, cs, budget, rng)
    thresholds = s.threshold_array()

    def met(d, r):
        if s.n_er == 0 or not np.any(thresholds > 0):
            return True
        return bool(np.all(all_harvested(s, cs, d, r.gains) >= thresholds))

    viable = [(d, r) for d, r in candidates if met(d, r)]
    if viable:
        best = None
        best_wsr = -np.inf
        for d, r in viable:
            try:
                stepped = _ao_step(s, cs, budget, d, r, engine)
            except SolverFailure:
                continue
            d2, r2, _ = stepped
            if not met(d2, r2):
                continue
            value = evaluate(s, cs, d2, r2.gains, budget).wsr
            if value > best_wsr:
                best_wsr = value
                best = (d2, r2)
        if best is not None:
            return best
        # screening failed everywhere; fall back to the repair path below

    design, reflect = candidates[0]
    try:
        for _ in range(REPAIR_ROUNDS):
            aux = stationary_aux(s, cs, design, reflect.gains)
            data = build_bf(s, cs, aux, reflect.gains, budget, design)
            design = solve_bf_repair(data, s, budget, engine=engine)
            if met(design, reflect):
                return design, reflect
            if s.scheme != "none" and s.n_elements > 0:
                rdata = build_ris(s, cs, aux, design, budget, reflect)
                reflect = solve_ris_repair(rdata, s, budget, engine=engine)
                if met(design, reflect):
                    return design, reflect
    except SolverFailure as ex:
        raise InfeasibleStart(f"repair subproblem failed: {ex}") from ex
    raise InfeasibleStart("harvest thresholds unreachable after repair")


def run(s: Scenario, cs: ChannelSet, seed: int = 0, engine: str | None = None,
        clock=time.perf_counter) -> AoTrace:
    """Full alternating optimization on one channel realization."""
    budget = split_budget(s)
    rng = np.random.default_rng([seed, 0x5157])
    s_orig, cs_orig = s, cs
    s, cs = noise_normalized(s, cs)
    try:
        design, reflect = initialize(s, cs, budget, rng, engine=engine)
    except (InfeasibleStart, InfeasibleBudget, SolverFailure):
        return AoTrace(status=INFEASIBLE_START, records=(), design=None,
                       reflect=None, metrics=None)

    records = []
    metrics = evaluate(s, cs, design, reflect.gains, budget)
    wsr_prev = metrics.wsr
    status = MAX_ITERS
    for _ in range(s.t_max):
        tic = clock()
        try:
            design, reflect, ris_status = _ao_step(s, cs, budget, design,
                                                   reflect, engine)
        except SolverFailure as ex:
            status = SOLVER_FAILURE
            records.append(IterRecord(
                wsr=wsr_prev, surrogate=float("nan"), feasible=True,
                bf_status=str(ex.status), ris_status="aborted",
                wall_ms=(clock() - tic) * 1e3))
            break
        metrics = evaluate(s, cs, design, reflect.gains, budget)
        aux = stationary_aux(s, cs, design, reflect.gains)
        records.append(IterRecord(
            wsr=metrics.wsr,
            surrogate=eval_fc(s, cs, design, reflect.gains, aux),
            feasible=metrics.feasible,
            bf_status="optimal", ris_status=ris_status,
            wall_ms=(clock() - tic) * 1e3))
        if abs(metrics.wsr - wsr_prev) / max(metrics.wsr, 1e-300) < s.epsilon:
            status = CONVERGED
            wsr_prev = metrics.wsr
            break
        wsr_prev = metrics.wsr
    # metrics reported in the caller's physical units
    metrics = evaluate(s_orig, cs_orig, design, reflect.gains, budget)
    return AoTrace(status=status, records=tuple(records), design=design,
                   reflect=reflect, metrics=metrics)


def complexity_probe(sizes, seed: int = 0, engine: str | None = None,
                     clock=time.perf_counter) -> list[dict]:
    """Per-size wall time of one transmit solve and one reflection solve."""
    from .scenario import default_scenario

    rows = []
    for idx, (n, l, k_i) in enumerate(sizes):
        s = default_scenario().replace(
            n_antennas=n, n_elements=max(l, 1), n_ir=k_i, n_er=0,
            weights=(1.0,) * k_i, eta=(), p_thresholds=(),
            scheme="active" if l > 0 else "none")
        from .channel import synth_channels
        cs = synth_channels(s, seed=seed + idx)
        budget = split_budget(s)
        s, cs = noise_normalized(s, cs)
        rng = np.random.default_rng([seed, idx])
        design, reflect = initialize(s, cs, budget, rng, engine=engine)
        aux = stationary_aux(s, cs, design, reflect.gains)

        tic = clock()
        data = build_bf(s, cs, aux, reflect.gains, budget, design)
        design = solve_bf(data, s, budget, engine=engine)
        bf_ms = (clock() - tic) * 1e3

        ris_ms = float("nan")
        if s.scheme != "none":
            tic = clock()
            rdata = build_ris(s, cs, aux, design, budget, reflect)
            solve_ris(rdata, s, budget, engine=engine)
            ris_ms = (clock() - tic) * 1e3
        rows.append({"n_antennas": n, "n_elements": l, "n_ir": k_i,
                     "bf_ms": bf_ms, "ris_ms": ris_ms})
    return rows
