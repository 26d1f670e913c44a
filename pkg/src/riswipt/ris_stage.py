"""Reflection-vector subproblem for fixed auxiliaries, beams and covariance.

The surrogate restricted to the conjugated gain vector is a concave quadratic
with a diagonal radiated-power form (built from the beams and the eigenvectors
of the energy covariance) and harvest quadratics that are linearized from
below around the previous gains.  Amplifying surfaces carry one aggregate
radiated-power cap; purely reflective ones carry per-element unit-modulus caps
instead and inject no thermal noise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelSet
from .conic import ProgramBuilder, quad_epigraph_soc, solve
from .creal import clin_coeffs, creal_rows, psd_factor, unpack_cvec
from .errors import DimensionError
from .fp import LN2, AuxVars
from .model import ReflectionVector, TxDesign
from .scenario import Budget, Scenario

EVD_REL_CUTOFF = 1e-10  # eigenvalues of V below this fraction of its trace are dropped


@dataclass(frozen=True)
class RisSubproblemData:
    """Assembled pieces of the reflection subproblem (conjugate-gain variable)."""

    e: np.ndarray                  # (L,) linear objective term
    f_mat: np.ndarray              # (L, L) objective quadratic form
    j_mat: np.ndarray              # (L, L) radiated-power form (diagonal + noise floor)
    er_quads: np.ndarray           # (K_E, L, L) harvest quadratic forms
    er_lins: np.ndarray            # (K_E, L) harvest linear terms
    er_thresholds_adj: np.ndarray  # (K_E,) thresholds minus the gain-free harvest
    er_thresholds_lin: np.ndarray  # (K_E,) right side of the linearized constraint
    er_anchor_quads: np.ndarray    # (K_E,) anchor value of each harvest quadratic
    er_direct_power: np.ndarray    # (K_E,) gain-free harvested part (before efficiency)
    energy_factors: np.ndarray     # (r, N) rank factors of the energy covariance
    anchor_phi: np.ndarray         # (L,) conjugated anchor gains


def energy_eigenbeams(v: np.ndarray) -> np.ndarray:
    """Rank factors v_m with V = sum_m v_m v_m^H, small eigenvalues dropped."""
    vals, vecs = np.linalg.eigh((v + v.conj().T) / 2.0)
    cutoff = EVD_REL_CUTOFF * max(float(np.trace(v).real), 0.0)
    keep = vals > cutoff
    return np.sqrt(vals[keep])[:, None] * vecs[:, keep].T


def build_ris(s: Scenario, cs: ChannelSet, aux: AuxVars, design: TxDesign,
              budget: Budget, anchor: ReflectionVector) -> RisSubproblemData:
    l = s.n_elements
    if cs.n_elements != l or anchor.gains.shape != (l,):
        raise DimensionError("channel set or anchor does not match the element count")
    q = cs.bs_ris
    w = design.beams
    v = design.energy_cov
    delta_r2 = s.ris_noise_eff
    alpha = s.weight_array()
    rho_sq = np.abs(aux.rho) ** 2
    sum_ww = w.T @ w.conj()  # sum_k w_k w_k^H
    mix = sum_ww + v

    qw = q @ w.T  # (L, K_I) columns are Q w_k
    coef = 2.0 * np.sqrt(alpha * (1.0 + aux.gamma_tilde)) * np.conj(aux.rho)
    e = np.zeros(l, dtype=complex)
    for k in range(s.n_ir):
        d_k = cs.ris_ir[k].conj()
        e += coef[k] * d_k * qw[:, k]
        e -= 2.0 * rho_sq[k] * d_k * (q @ (mix @ cs.bs_ir[k]))

    f_mat = np.zeros((l, l), dtype=complex)
    q_mix_qh = q @ mix @ q.conj().T
    for k in range(s.n_ir):
        d_k = cs.ris_ir[k].conj()
        f_mat += rho_sq[k] * (d_k[:, None] * q_mix_qh * d_k.conj()[None, :])
        f_mat += rho_sq[k] * delta_r2 * np.diag(np.abs(cs.ris_ir[k]) ** 2)
    f_mat = (f_mat + f_mat.conj().T) / 2.0

    factors = energy_eigenbeams(v)
    j_diag = (np.abs(qw) ** 2).sum(axis=1) + delta_r2
    if factors.size:
        j_diag = j_diag + (np.abs(q @ factors.T) ** 2).sum(axis=1)
    j_mat = np.diag(j_diag)

    k_e = s.n_er
    er_quads = np.zeros((k_e, l, l), dtype=complex)
    er_lins = np.zeros((k_e, l), dtype=complex)
    direct = np.zeros(k_e)
    for i in range(k_e):
        d_i = cs.ris_er[i].conj()
        quad = d_i[:, None] * q_mix_qh * d_i.conj()[None, :]
        quad = quad + delta_r2 * np.diag(np.abs(cs.ris_er[i]) ** 2)
        er_quads[i] = (quad + quad.conj().T) / 2.0
        er_lins[i] = d_i * (q @ (mix @ cs.bs_er[i]))
        direct[i] = float((np.abs(cs.bs_er[i].conj() @ w.T) ** 2).sum()
                          + np.real(cs.bs_er[i].conj() @ v @ cs.bs_er[i]))

    anchor_phi = np.conj(anchor.gains)
    anchor_quads = np.array([float(np.real(anchor_phi.conj() @ er_quads[i] @ anchor_phi))
                             for i in range(k_e)])
    thresholds_adj = s.threshold_array() / s.eta_array() - direct
    return RisSubproblemData(
        e=e, f_mat=f_mat, j_mat=j_mat, er_quads=er_quads, er_lins=er_lins,
        er_thresholds_adj=thresholds_adj,
        er_thresholds_lin=thresholds_adj + anchor_quads,
        er_anchor_quads=anchor_quads, er_direct_power=direct,
        energy_factors=factors, anchor_phi=anchor_phi)


def ris_objective(data: RisSubproblemData, reflect: ReflectionVector) -> float:
    """Surrogate objective (bits) restricted to its gain-dependent part."""
    phi = np.conj(reflect.gains)
    lin = float(np.real(np.vdot(phi, data.e)))
    quad = float(np.real(phi.conj() @ data.f_mat @ phi))
    return (lin - quad) / LN2


class _RisProgram:
    """Conic assembly over gains divided by their typical amplitude.

    Amplifying surfaces run at amplitudes around sqrt(cap / captured power);
    scaling the conic variable by that amount keeps it order one.  Reflective
    surfaces are already unit-bounded.
    """

    def __init__(self, data: RisSubproblemData, s: Scenario, budget: Budget,
                 extra_vars: tuple[str, int]):
        self.data = data
        self.s = s
        self.budget = budget
        self.l = len(data.e)
        if s.scheme == "active":
            captured = float(np.trace(data.j_mat).real) / max(self.l, 1)
            self.gain_scale = float(np.sqrt(budget.p_ris / captured)) \
                if captured > 0 and budget.p_ris > 0 else 1.0
        else:
            self.gain_scale = 1.0
        self.builder = ProgramBuilder()
        self.phi_slice = self.builder.add_vars("phi", 2 * self.l)
        name, count = extra_vars
        self.extra = self.builder.add_vars(name, count)
        self.width = self.builder.n_vars

    def phi_rows(self, mat: np.ndarray) -> np.ndarray:
        rows = self.gain_scale * creal_rows(mat)
        out = np.zeros((rows.shape[0], self.width))
        out[:, self.phi_slice] = rows
        return out

    def phi_lin(self, vec: np.ndarray) -> np.ndarray:
        """Coefficients of Re(vec^H phi)."""
        row = np.zeros(self.width)
        row[self.phi_slice] = self.gain_scale * clin_coeffs(vec)
        return row

    def add_gain_constraints(self):
        """Aggregate radiated cap (amplifying) or unit-modulus caps (reflective)."""
        if self.s.scheme == "active":
            f_rows = self.phi_rows(psd_factor(self.data.j_mat))
            self.builder.add_soc(*quad_epigraph_soc(
                f_rows, np.zeros(f_rows.shape[0]),
                np.zeros(self.width), self.budget.p_ris))
        else:
            for idx in range(self.l):
                rows = np.zeros((3, self.width))
                rows[1, self.phi_slice.start + idx] = -self.gain_scale
                rows[2, self.phi_slice.start + self.l + idx] = -self.gain_scale
                self.builder.add_soc(rows, np.array([1.0, 0.0, 0.0]))

    def er_linear_row(self, i: int) -> np.ndarray:
        """Coefficients of 2 Re{phi^H (r_i + R_i phi_anchor)}."""
        vec = self.data.er_lins[i] + self.data.er_quads[i] @ self.data.anchor_phi
        return self.phi_lin(2.0 * vec)

    def unpack(self, x: np.ndarray) -> ReflectionVector:
        phi = self.gain_scale * unpack_cvec(x[self.phi_slice])
        return ReflectionVector(gains=np.conj(phi))


def solve_ris(data: RisSubproblemData, s: Scenario, budget: Budget,
              engine: str | None = None, tol: float = 1e-7) -> ReflectionVector:
    """Maximize the surrogate over the surface gains; raises on failure.

    As in the transmit stage, the objective block is normalized to order one;
    the maximizer is unaffected.
    """
    prog = _RisProgram(data, s, budget, extra_vars=("t_obj", 1))
    t_obj = prog.extra
    lin_phi = prog.gain_scale * clin_coeffs(data.e)
    obj_scale = 1.0 + float(np.abs(lin_phi).max(initial=0.0))
    prog.builder.add_objective(prog.phi_slice, -lin_phi / obj_scale)
    prog.builder.add_objective(t_obj, [1.0])

    lin_t = np.zeros(prog.width)
    lin_t[t_obj] = [1.0]
    f_rows = prog.phi_rows(psd_factor(data.f_mat)) / np.sqrt(obj_scale)
    prog.builder.add_soc(*quad_epigraph_soc(
        f_rows, np.zeros(f_rows.shape[0]), lin_t, 0.0))
    prog.add_gain_constraints()
    for i in range(s.n_er):
        row = prog.er_linear_row(i)
        prog.builder.add_nonneg([-row], [-data.er_thresholds_lin[i]])

    sol = solve(prog.builder.build(), tol=tol, engine=engine).require_optimal()
    return prog.unpack(sol.x)


def solve_ris_repair(data: RisSubproblemData, s: Scenario, budget: Budget,
                     engine: str | None = None, tol: float = 1e-7,
                     margin_cap: float = 2.0) -> ReflectionVector:
    """Maximize the smallest threshold-normalized linearized harvest over gains.

    Accepts a best-effort point from a stalled solve; the caller judges
    success on the true harvested powers.
    """
    prog = _RisProgram(data, s, budget, extra_vars=("tau", 1))
    tau = prog.extra
    prog.builder.add_objective(tau, [-1.0])

    eta = s.eta_array()
    thresholds = s.threshold_array()
    for i in range(s.n_er):
        row = prog.er_linear_row(i)
        const = data.er_direct_power[i] - data.er_anchor_quads[i]
        if thresholds[i] > 0:
            row[tau] = [-thresholds[i] / eta[i]]
        prog.builder.add_nonneg([-row], [const])
    cap_row = np.zeros(prog.width)
    cap_row[tau] = [1.0]
    prog.builder.add_nonneg([cap_row], [margin_cap])
    prog.add_gain_constraints()

    sol = solve(prog.builder.build(), tol=tol, engine=engine)
    if sol.status != "numerical_limit" or sol.x is None:
        sol.require_optimal()
    return prog.unpack(sol.x)
