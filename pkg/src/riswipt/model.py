"""Link-level metrics for a candidate transmit design.

Everything here is a pure function of (scenario, channels, design, reflection
gains): effective channels, per-receiver SINR and rate, weighted sum rate,
harvested power, consumed powers and constraint residuals.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelSet
from .errors import DimensionError, DomainError
from .scenario import Budget, Scenario

FEAS_RTOL = 1e-6          # relative slack when declaring a design feasible
PASSIVE_GAIN_TOL = 1e-9   # per-element unit-modulus slack for passive surfaces


@dataclass(frozen=True)
class TxDesign:
    """Information beams (one row per IR) and the energy covariance."""

    beams: np.ndarray       # (K_I, N) complex rows w_k
    energy_cov: np.ndarray  # (N, N) complex Hermitian PSD

    def __post_init__(self):
        w, v = self.beams, self.energy_cov
        if w.ndim != 2 or v.shape != (w.shape[1], w.shape[1]):
            raise DimensionError(f"beams {w.shape} incompatible with covariance {v.shape}")
        if not np.all(np.isfinite(w.view(float))) or not np.all(np.isfinite(v.view(float))):
            raise DomainError("design contains non-finite entries")
        scale = max(1.0, float(np.abs(v).max(initial=0.0)))
        if np.abs(v - v.conj().T).max(initial=0.0) > 1e-10 * scale:
            raise DomainError("energy covariance is not Hermitian")
        if float(np.linalg.eigvalsh((v + v.conj().T) / 2.0).min()) < -1e-8:
            raise DomainError("energy covariance has a significantly negative eigenvalue")
        w.setflags(write=False)
        v.setflags(write=False)


@dataclass(frozen=True)
class ReflectionVector:
    """Per-element complex gains u_l = a_l * exp(j*phi_l) of the surface."""

    gains: np.ndarray  # (L,) complex

    def __post_init__(self):
        if self.gains.ndim != 1:
            raise DimensionError("gains must be a vector")
        if not np.all(np.isfinite(self.gains.view(float))):
            raise DomainError("gains contain non-finite entries")
        self.gains.setflags(write=False)

    @property
    def as_matrix(self) -> np.ndarray:
        return np.diag(self.gains)


def zero_reflection(n_elements: int) -> ReflectionVector:
    return ReflectionVector(np.zeros(n_elements, dtype=complex))


@dataclass(frozen=True)
class Metrics:
    """Snapshot of every physical quantity evaluated on one design."""

    sinr: np.ndarray          # (K_I,)
    rates: np.ndarray         # (K_I,) bits/s/Hz
    wsr: float                # bits/s/Hz
    harvested: np.ndarray     # (K_E,) watts
    bs_power: float           # watts
    ris_power: float          # watts
    bs_residual: float        # positive = transmit cap violated
    ris_residual: float       # scheme-dependent surface residual, positive = violated
    er_residuals: np.ndarray  # (K_E,) positive = threshold missed
    v_min_eig: float
    feasible: bool


def effective_ir_channels(cs: ChannelSet, u: np.ndarray) -> np.ndarray:
    """All IR effective channels g_k = g_dk + Q^H diag(u)^H g_rk, stacked as rows."""
    return cs.bs_ir + (np.conj(u) * cs.ris_ir) @ np.conj(cs.bs_ris)


def effective_er_channels(cs: ChannelSet, u: np.ndarray) -> np.ndarray:
    return cs.bs_er + (np.conj(u) * cs.ris_er) @ np.conj(cs.bs_ris)


def effective_channel(cs: ChannelSet, u: np.ndarray, receiver: str, index: int) -> np.ndarray:
    """Effective channel of one receiver ("ir" or "er") under reflection gains u."""
    if receiver == "ir":
        return effective_ir_channels(cs, u)[index]
    if receiver == "er":
        return effective_er_channels(cs, u)[index]
    raise DomainError(f"receiver must be 'ir' or 'er', got {receiver!r}")


def _beam_powers(eff: np.ndarray, beams: np.ndarray) -> np.ndarray:
    """|g_k^H w_i|^2 for every receiver row k and beam i."""
    return np.abs(eff.conj() @ beams.T) ** 2


def _quad_form(eff: np.ndarray, v: np.ndarray) -> np.ndarray:
    """g_k^H V g_k per receiver row."""
    return np.einsum("kn,nm,km->k", eff.conj(), v, eff).real


def _surface_noise(side_rows: np.ndarray, u: np.ndarray, delta_r2: float) -> np.ndarray:
    """delta_r^2 * ||g_r^H diag(u)||^2 per receiver row."""
    return delta_r2 * (np.abs(side_rows) ** 2 @ np.abs(u) ** 2)


def sinr_denominators(s: Scenario, cs: ChannelSet, design: TxDesign,
                      u: np.ndarray, include_own: bool) -> np.ndarray:
    """Interference-plus-noise at every IR, optionally counting the own beam."""
    eff = effective_ir_channels(cs, u)
    powers = _beam_powers(eff, design.beams)
    total = powers.sum(axis=1)
    if not include_own:
        total = total - np.diag(powers)
    return (total + _quad_form(eff, design.energy_cov)
            + _surface_noise(cs.ris_ir, u, s.ris_noise_eff) + s.noise_ir)


def all_sinr(s: Scenario, cs: ChannelSet, design: TxDesign, u: np.ndarray) -> np.ndarray:
    eff = effective_ir_channels(cs, u)
    powers = _beam_powers(eff, design.beams)
    return np.diag(powers) / sinr_denominators(s, cs, design, u, include_own=False)


def sinr(s: Scenario, cs: ChannelSet, design: TxDesign, u: np.ndarray, k: int) -> float:
    return float(all_sinr(s, cs, design, u)[k])


def rate(s: Scenario, cs: ChannelSet, design: TxDesign, u: np.ndarray, k: int) -> float:
    return float(np.log2(1.0 + sinr(s, cs, design, u, k)))


def wsr(s: Scenario, cs: ChannelSet, design: TxDesign, u: np.ndarray) -> float:
    rates = np.log2(1.0 + all_sinr(s, cs, design, u))
    return float(s.weight_array() @ rates)


def all_harvested(s: Scenario, cs: ChannelSet, design: TxDesign, u: np.ndarray) -> np.ndarray:
    """Harvested watts at every ER; receiver AWGN does not contribute."""
    eff = effective_er_channels(cs, u)
    collected = (_beam_powers(eff, design.beams).sum(axis=1)
                 + _quad_form(eff, design.energy_cov)
                 + _surface_noise(cs.ris_er, u, s.ris_noise_eff))
    return s.eta_array() * collected


def harvested_power(s: Scenario, cs: ChannelSet, design: TxDesign,
                    u: np.ndarray, i: int) -> float:
    return float(all_harvested(s, cs, design, u)[i])


def ris_power(s: Scenario, cs: ChannelSet, design: TxDesign, u: np.ndarray) -> float:
    """Expected radiated power of the surface: signal, energy and amplified noise."""
    beam_part = float((np.abs((u[:, None] * cs.bs_ris) @ design.beams.T) ** 2).sum())
    q_v_qh = cs.bs_ris @ design.energy_cov @ cs.bs_ris.conj().T
    cov_part = float((np.abs(u) ** 2 * np.diag(q_v_qh).real).sum())
    noise_part = s.ris_noise_eff * float((np.abs(u) ** 2).sum())
    return beam_part + cov_part + noise_part


def bs_power(design: TxDesign) -> float:
    return float((np.abs(design.beams) ** 2).sum() + np.trace(design.energy_cov).real)


def validate_reflection(s: Scenario, u: np.ndarray) -> float:
    """Scheme-specific surface residual (positive means the gains are invalid)."""
    if s.scheme == "passive":
        return float(np.abs(u).max(initial=0.0) - 1.0 - PASSIVE_GAIN_TOL)
    if s.scheme == "none":
        return float(np.abs(u).max(initial=0.0))
    return float("-inf")  # amplifying gains only limited through ris_power


def evaluate(s: Scenario, cs: ChannelSet, design: TxDesign, u: np.ndarray,
             budget: Budget) -> Metrics:
    """Pack all metrics and constraint residuals for one design."""
    gammas = all_sinr(s, cs, design, u)
    rates = np.log2(1.0 + gammas)
    weighted = float(s.weight_array() @ rates)
    harvested = all_harvested(s, cs, design, u)
    p_bs_used = bs_power(design)
    p_ris_used = ris_power(s, cs, design, u)

    bs_resid = p_bs_used - budget.p_bs
    if s.scheme == "active":
        ris_resid = p_ris_used - budget.p_ris
        ris_ok = p_ris_used <= budget.p_ris * (1.0 + FEAS_RTOL)
    else:
        ris_resid = validate_reflection(s, u)
        ris_ok = ris_resid <= 0.0
    er_resid = s.threshold_array() - harvested

    v_eigs = np.linalg.eigvalsh((design.energy_cov + design.energy_cov.conj().T) / 2.0)
    v_min = float(v_eigs.min()) if v_eigs.size else 0.0
    v_scale = max(1.0, float(v_eigs.max())) if v_eigs.size else 1.0

    feasible = (
        p_bs_used <= budget.p_bs * (1.0 + FEAS_RTOL)
        and ris_ok
        and bool(np.all(harvested >= s.threshold_array() * (1.0 - FEAS_RTOL)))
        and v_min >= -FEAS_RTOL * v_scale
    )
    return Metrics(sinr=gammas, rates=rates, wsr=weighted, harvested=harvested,
                   bs_power=p_bs_used, ris_power=p_ris_used,
                   bs_residual=float(bs_resid), ris_residual=float(ris_resid),
                   er_residuals=er_resid, v_min_eig=v_min, feasible=feasible)
