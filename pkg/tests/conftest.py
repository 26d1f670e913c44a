"""Shared helpers for building toy and random problem instances."""

import numpy as np
import pytest

from riswipt.channel import ChannelSet
from riswipt.model import TxDesign
from riswipt.scenario import Scenario, default_scenario


def toy_scenario(n=1, l=1, k_i=1, k_e=0, **overrides) -> Scenario:
    """Small scenario with O(1) noise so hand values stay readable."""
    base = dict(
        n_antennas=n, n_elements=l, n_ir=k_i, n_er=k_e,
        noise_ir=1.0, noise_er=1.0, noise_ris=1.0,
        weights=(1.0,) * k_i, eta=(1.0,) * k_e, p_thresholds=(1e-6,) * k_e,
        p_total=1.0,
    )
    base.update(overrides)
    return default_scenario().replace(**base)


def make_cs(bs_ris, bs_ir, bs_er=None, ris_ir=None, ris_er=None) -> ChannelSet:
    bs_ris = np.atleast_2d(np.asarray(bs_ris, dtype=complex))
    bs_ir = np.atleast_2d(np.asarray(bs_ir, dtype=complex))
    l, n = bs_ris.shape
    k_i = bs_ir.shape[0]
    if bs_er is None:
        bs_er = np.zeros((0, n))
    bs_er = np.atleast_2d(np.asarray(bs_er, dtype=complex)).reshape(-1, n)
    k_e = bs_er.shape[0]
    if ris_ir is None:
        ris_ir = np.zeros((k_i, l))
    if ris_er is None:
        ris_er = np.zeros((k_e, l))
    return ChannelSet(
        bs_ris=bs_ris,
        bs_ir=bs_ir,
        bs_er=np.asarray(bs_er, dtype=complex).reshape(k_e, n),
        ris_ir=np.asarray(ris_ir, dtype=complex).reshape(k_i, l),
        ris_er=np.asarray(ris_er, dtype=complex).reshape(k_e, l),
        ir_pos=np.zeros((k_i, 2)),
        er_pos=np.zeros((k_e, 2)),
    )


def random_instance(rng, n=None, l=None, k_i=None, k_e=None, scale=1.0,
                    noise=1.0, scheme="active"):
    """Random well-scaled instance: scenario, channels, design, gains."""
    n = n or int(rng.integers(1, 5))
    l = l if l is not None else int(rng.integers(1, 9))
    k_i = k_i or int(rng.integers(1, 4))
    k_e = k_e if k_e is not None else int(rng.integers(0, 4))
    s = toy_scenario(n=n, l=l, k_i=k_i, k_e=k_e, scheme=scheme,
                     noise_ir=noise, noise_er=noise, noise_ris=noise,
                     weights=tuple(rng.uniform(0.5, 2.0, size=k_i)),
                     eta=tuple(rng.uniform(0.4, 1.0, size=k_e)))

    def cplx(*shape):
        return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))

    cs = make_cs(cplx(l, n), cplx(k_i, n), cplx(k_e, n), cplx(k_i, l), cplx(k_e, l))
    a = cplx(n, n)
    design = TxDesign(beams=cplx(k_i, n), energy_cov=a @ a.conj().T / n)
    u = cplx(l).ravel() * 0.5
    return s, cs, design, u


def feasible_instance(rng, scheme="active", n=None, l=None, k_i=None, k_e=None,
                      tighten=0.7):
    """Random instance plus a strictly feasible anchor and matching budget.

    Thresholds are set to a fraction of the anchor's harvest and the budget to
    a multiple of its spend, so the anchor sits strictly inside while the
    constraints stay active enough to matter.
    """
    from riswipt.fp import stationary_aux
    from riswipt.model import all_harvested, bs_power, ris_power
    from riswipt.scenario import Budget

    s, cs, design, u = random_instance(rng, n=n, l=l, k_i=k_i, k_e=k_e,
                                       scheme=scheme)
    if scheme == "passive":
        u = u / np.maximum(np.abs(u), 1e-9) * rng.uniform(0.2, 0.9, size=len(u))
    elif scheme == "none":
        u = np.zeros_like(u)
    harvested = all_harvested(s, cs, design, u)
    s = s.replace(p_thresholds=tuple(tighten * harvested))
    budget = Budget(p_bs=1.3 * bs_power(design),
                    p_ris=max(1.3 * ris_power(s, cs, design, u), 1e-9))
    aux = stationary_aux(s, cs, design, u)
    return s, cs, design, u, budget, aux


@pytest.fixture
def rng():
    return np.random.default_rng(2024)
