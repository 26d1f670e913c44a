"""Transmit-side subproblem: beams and energy covariance for fixed reflection.

For fixed auxiliaries and surface gains the surrogate is a concave quadratic
in the stacked beams plus a linear term in the covariance, subject to the
transmit power cap, the amplification power cap (after subtracting what the
surface spends amplifying its own noise), linearized harvest constraints and
the PSD cone.  The linearization bounds each harvest quadratic from below, so
any solution also satisfies the original constraints.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelSet
from .conic import ProgramBuilder, quad_epigraph_soc, solve
from .creal import HermitianBasis, clin_coeffs, creal_rows, psd_factor, unpack_cvec
from .errors import InfeasibleBudget
from .fp import LN2, AuxVars
from .model import TxDesign, effective_er_channels, effective_ir_channels
from .scenario import Budget, Scenario


@dataclass(frozen=True)
class BfSubproblemData:
    """Assembled quadratic/linear pieces of the transmit subproblem."""

    b: np.ndarray                  # (K_I*N,) stacked linear term
    a1_block: np.ndarray           # (N, N) shared quadratic block of the objective
    b_block: np.ndarray            # (N, N) shared block of the surface-power form
    p_ris_adj: float               # amplification cap minus amplified-noise spend
    er_blocks: np.ndarray          # (K_E, N, N) effective h_i h_i^H
    er_thresholds_adj: np.ndarray  # (K_E,) thresholds after efficiency and noise harvest
    er_thresholds_lin: np.ndarray  # (K_E,) right side of the linearized constraint
    er_anchor_quads: np.ndarray    # (K_E,) anchor value of the harvest quadratic
    er_noise_harvest: np.ndarray   # (K_E,) surface-noise contribution to each ER
    anchor: TxDesign               # expansion point of the linearization


def build_bf(s: Scenario, cs: ChannelSet, aux: AuxVars, u: np.ndarray,
             budget: Budget, anchor: TxDesign) -> BfSubproblemData:
    g_eff = effective_ir_channels(cs, u)
    h_eff = effective_er_channels(cs, u)
    alpha = s.weight_array()
    coef = 2.0 * np.sqrt(alpha * (1.0 + aux.gamma_tilde)) * aux.rho
    b = (coef[:, None] * g_eff).ravel()
    rho_sq = np.abs(aux.rho) ** 2
    a1_block = (rho_sq[:, None] * g_eff).T @ g_eff.conj()
    a1_block = (a1_block + a1_block.conj().T) / 2.0

    delta_r2 = s.ris_noise_eff
    b_block = (np.abs(u[:, None]) ** 2 * cs.bs_ris.conj()).T @ cs.bs_ris
    b_block = (b_block + b_block.conj().T) / 2.0
    p_ris_adj = budget.p_ris - delta_r2 * float((np.abs(u) ** 2).sum())
    if s.scheme == "active" and p_ris_adj < 0:
        raise InfeasibleBudget(
            f"surface noise spend exceeds amplification cap by {-p_ris_adj:.3g} W")

    er_blocks = np.einsum("in,im->inm", h_eff, h_eff.conj())
    noise_harvest = delta_r2 * (np.abs(cs.ris_er) ** 2 @ np.abs(u) ** 2)
    thresholds_adj = s.threshold_array() / s.eta_array() - noise_harvest
    anchor_quads = (np.abs(h_eff.conj() @ anchor.beams.T) ** 2).sum(axis=1)
    thresholds_lin = thresholds_adj + anchor_quads
    return BfSubproblemData(
        b=b, a1_block=a1_block, b_block=b_block, p_ris_adj=float(p_ris_adj),
        er_blocks=er_blocks, er_thresholds_adj=thresholds_adj,
        er_thresholds_lin=thresholds_lin, er_anchor_quads=anchor_quads,
        er_noise_harvest=noise_harvest, anchor=anchor)


def bf_objective(data: BfSubproblemData, design: TxDesign) -> float:
    """Surrogate objective (bits) restricted to its transmit-dependent part."""
    w_stack = design.beams.ravel()
    lin = float(np.real(np.vdot(data.b, w_stack)))
    quad = float(np.real(np.einsum("kn,nm,km->", design.beams.conj(),
                                   data.a1_block, design.beams)))
    v_term = float(np.trace(data.a1_block @ design.energy_cov).real)
    return (lin - quad - v_term) / LN2


class _BfProgram:
    """Conic assembly shared by the surrogate and the repair objectives.

    The conic variables hold the beams divided by sqrt(p_bs) and the
    covariance divided by p_bs, which keeps them order one regardless of the
    physical budget; `unpack` restores physical units.
    """

    def __init__(self, data: BfSubproblemData, s: Scenario, budget: Budget,
                 extra_vars: tuple[str, int] = ()):
        self.data = data
        self.s = s
        self.budget = budget
        self.k_i = s.n_ir
        self.n = s.n_antennas
        self.beam_scale = np.sqrt(budget.p_bs)
        self.cov_scale = budget.p_bs
        self.basis = HermitianBasis(self.n)
        self.builder = ProgramBuilder()
        self.w_slice = self.builder.add_vars("w", 2 * self.n * self.k_i)
        self.v_slice = self.builder.add_vars("v", self.basis.n_params)
        if extra_vars:
            name, count = extra_vars
            self.extra = self.builder.add_vars(name, count)
        self.width = self.builder.n_vars

    def _beam_cols(self, k: int) -> slice:
        start = self.w_slice.start + 2 * self.n * k
        return slice(start, start + 2 * self.n)

    def beam_rows(self, mat: np.ndarray, k: int) -> np.ndarray:
        """Real rows applying a complex matrix to beam k inside the full layout."""
        block = self.beam_scale * creal_rows(mat)
        rows = np.zeros((block.shape[0], self.width))
        rows[:, self._beam_cols(k)] = block
        return rows

    def beam_lin(self, v: np.ndarray, k: int) -> np.ndarray:
        """Coefficients of Re(v^H w_k)."""
        row = np.zeros(self.width)
        row[self._beam_cols(k)] = self.beam_scale * clin_coeffs(v)
        return row

    def stack_lin(self, b: np.ndarray) -> np.ndarray:
        """Coefficients of Re(b^H W) over the w block only."""
        return self.beam_scale * np.concatenate(
            [clin_coeffs(b[self.n * k:self.n * (k + 1)]) for k in range(self.k_i)])

    def v_lin(self, mat: np.ndarray) -> np.ndarray:
        """Coefficients of Tr(mat V)."""
        row = np.zeros(self.width)
        row[self.v_slice] = self.cov_scale * self.basis.trace_coeffs(mat)
        return row

    def stacked_quad(self, block: np.ndarray) -> np.ndarray:
        """Rows F with ||F x||^2 = sum_k w_k^H block w_k."""
        factor = psd_factor(block)
        if factor.shape[0] == 0:
            return np.zeros((0, self.width))
        return np.vstack([self.beam_rows(factor, k) for k in range(self.k_i)])

    def add_power_constraints(self):
        data, s = self.data, self.s
        if s.scheme == "active":
            f_rows = self.stacked_quad(data.b_block)
            self.builder.add_soc(*quad_epigraph_soc(
                f_rows, np.zeros(f_rows.shape[0]),
                -self.v_lin(data.b_block), data.p_ris_adj))
        ident = np.vstack([self.beam_rows(np.eye(self.n), k)
                           for k in range(self.k_i)])
        self.builder.add_soc(*quad_epigraph_soc(
            ident, np.zeros(ident.shape[0]),
            -self.v_lin(np.eye(self.n)), self.budget.p_bs))

    def er_linear_row(self, i: int) -> np.ndarray:
        """Coefficients of 2 Re{W(t)^H D_i W} + Tr(h h^H V)."""
        data = self.data
        row = np.zeros(self.width)
        for k in range(self.k_i):
            v = data.er_blocks[i] @ data.anchor.beams[k]
            row += self.beam_lin(2.0 * v, k)
        row += self.v_lin(data.er_blocks[i])
        return row

    def add_psd(self):
        side = 2 * self.n
        cols = self.basis.psd_embedding_columns()
        a_rows = np.zeros((cols.shape[0], self.width))
        a_rows[:, self.v_slice] = -cols
        self.builder.add_psd(a_rows, np.zeros(cols.shape[0]), side)

    def unpack(self, x: np.ndarray) -> TxDesign:
        beams = self.beam_scale * np.array(
            [unpack_cvec(x[self._beam_cols(k)]) for k in range(self.k_i)])
        v = self.cov_scale * self.basis.matrix(x[self.v_slice])
        vals, vecs = np.linalg.eigh((v + v.conj().T) / 2.0)
        v = (vecs * np.clip(vals, 0.0, None)) @ vecs.conj().T
        return TxDesign(beams=beams, energy_cov=v)


def solve_bf(data: BfSubproblemData, s: Scenario, budget: Budget,
             engine: str | None = None, tol: float = 1e-7) -> TxDesign:
    """Maximize the surrogate over beams and covariance; raises on failure.

    The conic objective is normalized to order one (the ratio targets inject
    arbitrarily large multipliers otherwise); the maximizer is unaffected.
    """
    prog = _BfProgram(data, s, budget, extra_vars=("t_obj", 1))
    t_obj = prog.extra

    lin_w = prog.stack_lin(data.b)
    lin_v = prog.cov_scale * prog.basis.trace_coeffs(data.a1_block)
    obj_scale = 1.0 + max(float(np.abs(lin_w).max(initial=0.0)),
                          float(np.abs(lin_v).max(initial=0.0)))
    prog.builder.add_objective(prog.w_slice, -lin_w / obj_scale)
    prog.builder.add_objective(t_obj, [1.0])
    prog.builder.add_objective(prog.v_slice, lin_v / obj_scale)

    lin_t = np.zeros(prog.width)
    lin_t[t_obj] = [1.0]
    f_rows = prog.stacked_quad(data.a1_block) / np.sqrt(obj_scale)
    prog.builder.add_soc(*quad_epigraph_soc(
        f_rows, np.zeros(f_rows.shape[0]), lin_t, 0.0))
    prog.add_power_constraints()
    for i in range(s.n_er):
        row = prog.er_linear_row(i)
        prog.builder.add_nonneg([-row], [-data.er_thresholds_lin[i]])
    prog.add_psd()

    sol = solve(prog.builder.build(), tol=tol, engine=engine).require_optimal()
    return prog.unpack(sol.x)


def solve_bf_repair(data: BfSubproblemData, s: Scenario, budget: Budget,
                    engine: str | None = None, tol: float = 1e-7,
                    margin_cap: float = 2.0) -> TxDesign:
    """Maximize the smallest threshold-normalized linearized harvest.

    Used by the initializer to walk an infeasible starting point into the
    harvest region while honoring both power caps.  The margin is capped so
    the program stays bounded when thresholds are loose.  A best-effort point
    from a solver that stalled short of full accuracy is still accepted; the
    caller judges success on the true harvested powers.
    """
    prog = _BfProgram(data, s, budget, extra_vars=("tau", 1))
    tau = prog.extra
    prog.builder.add_objective(tau, [-1.0])

    eta = s.eta_array()
    thresholds = s.threshold_array()
    for i in range(s.n_er):
        row = prog.er_linear_row(i)
        const = data.er_noise_harvest[i] - data.er_anchor_quads[i]
        if thresholds[i] > 0:
            row[tau] = [-thresholds[i] / eta[i]]
        # eta_i * (row . x + const) >= tau * threshold_i
        prog.builder.add_nonneg([-row], [const])
    cap_row = np.zeros(prog.width)
    cap_row[tau] = [1.0]
    prog.builder.add_nonneg([cap_row], [margin_cap])
    prog.add_power_constraints()
    prog.add_psd()

    sol = solve(prog.builder.build(), tol=tol, engine=engine)
    if sol.status != "numerical_limit" or sol.x is None:
        sol.require_optimal()
    return prog.unpack(sol.x)
