"""Fractional-programming surrogate chain and its closed-form updates.

The weighted sum rate is decoupled twice: first the log is detached from the
SINR ratio through per-user ratio targets (f_a), then each remaining ratio is
expanded by the quadratic transform (f_c).  Both auxiliary updates are exact
maximizers, which is what makes the outer alternating loop monotone.

All surrogate values carry a 1/ln2 factor so they are expressed in bits and,
at the stationary auxiliaries, coincide with the weighted sum rate itself.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelSet
from .errors import DimensionError, DomainError
from .model import TxDesign, effective_ir_channels, sinr_denominators
from .scenario import Scenario

LN2 = float(np.log(2.0))


@dataclass(frozen=True)
class AuxVars:
    gamma_tilde: np.ndarray  # (K_I,) nonnegative ratio targets
    rho: np.ndarray          # (K_I,) complex quadratic-transform multipliers

    def __post_init__(self):
        if self.gamma_tilde.shape != self.rho.shape:
            raise DimensionError("gamma_tilde and rho must have matching length")
        if np.any(self.gamma_tilde < 0) or not np.all(np.isfinite(self.gamma_tilde)):
            raise DomainError("gamma_tilde must be finite and nonnegative")
        if not np.all(np.isfinite(self.rho.view(float))):
            raise DomainError("rho must be finite")
        self.gamma_tilde.setflags(write=False)
        self.rho.setflags(write=False)


def _own_beam_gains(cs: ChannelSet, design: TxDesign, u: np.ndarray) -> np.ndarray:
    """g_k^H w_k for every IR."""
    eff = effective_ir_channels(cs, u)
    return np.einsum("kn,kn->k", eff.conj(), design.beams)


def update_gamma(s: Scenario, cs: ChannelSet, design: TxDesign,
                 u: np.ndarray) -> np.ndarray:
    """Stationary ratio targets: the current per-user SINRs."""
    own = np.abs(_own_beam_gains(cs, design, u)) ** 2
    interf = sinr_denominators(s, cs, design, u, include_own=False)
    return own / interf


def update_rho(s: Scenario, cs: ChannelSet, design: TxDesign, u: np.ndarray,
               gamma_tilde: np.ndarray) -> np.ndarray:
    """Stationary quadratic-transform multipliers.

    The denominator is the full received power including the own beam, unlike
    the SINR denominator.
    """
    own = _own_beam_gains(cs, design, u)
    den = sinr_denominators(s, cs, design, u, include_own=True)
    return np.sqrt(s.weight_array() * (1.0 + gamma_tilde)) * own / den


def eval_fb(s: Scenario, cs: ChannelSet, design: TxDesign, u: np.ndarray,
            gamma_tilde: np.ndarray) -> float:
    """Sum of weighted ratios with detached targets, in bits."""
    own = np.abs(_own_beam_gains(cs, design, u)) ** 2
    den = sinr_denominators(s, cs, design, u, include_own=True)
    return float((s.weight_array() * (1.0 + gamma_tilde) * own / den).sum()) / LN2


def eval_fa(s: Scenario, cs: ChannelSet, design: TxDesign, u: np.ndarray,
            gamma_tilde: np.ndarray) -> float:
    """First-stage surrogate in bits; equals the WSR at gamma_tilde = SINR."""
    alpha = s.weight_array()
    logs = float((alpha * np.log2(1.0 + gamma_tilde)).sum())
    linear = float((alpha * gamma_tilde).sum()) / LN2
    return logs - linear + eval_fb(s, cs, design, u, gamma_tilde)


def eval_fc(s: Scenario, cs: ChannelSet, design: TxDesign, u: np.ndarray,
            aux: AuxVars) -> float:
    """Quadratic-transform surrogate in bits; equals f_b at the optimal rho."""
    own = _own_beam_gains(cs, design, u)
    den = sinr_denominators(s, cs, design, u, include_own=True)
    cross = np.sqrt(s.weight_array() * (1.0 + aux.gamma_tilde)) * (np.conj(aux.rho) * own).real
    return float((2.0 * cross - np.abs(aux.rho) ** 2 * den).sum()) / LN2


def stationary_aux(s: Scenario, cs: ChannelSet, design: TxDesign,
                   u: np.ndarray) -> AuxVars:
    """Both closed-form updates applied in sequence."""
    gamma = update_gamma(s, cs, design, u)
    rho = update_rho(s, cs, design, u, gamma)
    return AuxVars(gamma_tilde=gamma, rho=rho)
