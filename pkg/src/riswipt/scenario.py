"""Experiment configuration: geometry, power budgeting and seeding.

All powers are stored in watts; `dbm_to_watt` / `watt_to_dbm` convert at the
edges.  A `Scenario` is immutable after construction, so it can be shared
freely across parallel workers.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, FormatError, InfeasibleBudget

SCHEMES = ("active", "passive", "none")


def dbm_to_watt(dbm: float) -> float:
    """P[W] = 10^((dBm - 30)/10)."""
    return 10.0 ** ((dbm - 30.0) / 10.0)


def watt_to_dbm(watt: float) -> float:
    if watt <= 0:
        raise DomainError(f"power must be positive, got {watt}")
    return 10.0 * math.log10(watt) + 30.0


@dataclass(frozen=True)
class Scenario:
    """Full experiment description for one run.

    Geometry is a 2-D plane in meters.  Receiver clusters are disks; actual
    receiver positions are drawn per channel realization.
    """

    n_antennas: int = 4           # transmit antennas at the BS
    n_elements: int = 20          # reflecting elements at the surface
    n_ir: int = 4                 # information receivers
    n_er: int = 4                 # energy receivers
    bs_pos: tuple[float, float] = (0.0, 0.0)
    ris_pos: tuple[float, float] = (10.0, 10.0)
    ir_center: tuple[float, float] = (30.0, 0.0)
    ir_radius: float = 5.0
    er_center: tuple[float, float] = (20.0, 0.0)
    er_radius: float = 5.0
    # path-loss exponents per link class
    alpha_bs_ris: float = 2.3
    alpha_ris_er: float = 2.3
    alpha_ris_ir: float = 2.5
    alpha_bs_ir: float = 3.2
    alpha_bs_er: float = 2.8
    rician_kappa: float = 5.0     # linear ratio, not dB
    noise_ris: float = 1e-11     # thermal noise injected per element [W]
    noise_ir: float = 1e-11      # receiver noise at each IR [W]
    noise_er: float = 1e-11      # receiver noise at each ER [W]
    eta: tuple[float, ...] = (0.8, 0.8, 0.8, 0.8)           # harvest efficiency per ER
    weights: tuple[float, ...] = (1.0, 1.0, 1.0, 1.0)       # rate weight per IR
    p_thresholds: tuple[float, ...] = (1e-6,) * 4           # min harvested power per ER [W]
    p_total: float = 1.0          # total system power budget [W]
    p_c: float = 1e-4             # switch/control power per element [W]
    p_dc: float = dbm_to_watt(-5.0)   # DC bias per amplifying element [W]
    p_t: float = dbm_to_watt(10.0)    # dissipated power per relay antenna [W]
    epsilon: float = 1e-3         # relative objective change stopping tolerance
    t_max: int = 100              # outer iteration cap
    scheme: str = "active"        # one of SCHEMES

    def __post_init__(self):
        if self.n_antennas < 1 or self.n_ir < 1 or self.n_elements < 0 or self.n_er < 0:
            raise DomainError("need n_antennas >= 1, n_ir >= 1, n_elements >= 0, n_er >= 0")
        if self.scheme not in SCHEMES:
            raise DomainError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if not 0.0 < self.epsilon < 1.0:
            raise DomainError("epsilon must lie in (0, 1)")
        if self.t_max < 1:
            raise DomainError("t_max must be >= 1")
        positive = {
            "ir_radius": self.ir_radius, "er_radius": self.er_radius,
            "alpha_bs_ris": self.alpha_bs_ris, "alpha_ris_er": self.alpha_ris_er,
            "alpha_ris_ir": self.alpha_ris_ir, "alpha_bs_ir": self.alpha_bs_ir,
            "alpha_bs_er": self.alpha_bs_er, "rician_kappa": self.rician_kappa,
            "noise_ris": self.noise_ris, "noise_ir": self.noise_ir,
            "noise_er": self.noise_er, "p_total": self.p_total,
            "p_c": self.p_c, "p_dc": self.p_dc, "p_t": self.p_t,
        }
        for name, value in positive.items():
            if not value > 0.0:
                raise DomainError(f"{name} must be strictly positive, got {value}")
        if len(self.eta) != self.n_er or any(not e > 0 for e in self.eta):
            raise DomainError("eta needs one strictly positive entry per ER")
        if len(self.weights) != self.n_ir or any(not w > 0 for w in self.weights):
            raise DomainError("weights needs one strictly positive entry per IR")
        if len(self.p_thresholds) != self.n_er or any(p < 0 for p in self.p_thresholds):
            raise DomainError("p_thresholds needs one nonnegative entry per ER")

    @property
    def ris_noise_eff(self) -> float:
        """Element noise power as seen by the link model.

        Only amplifying elements inject thermal noise; purely reflective and
        absent surfaces contribute none.
        """
        return self.noise_ris if self.scheme == "active" else 0.0

    def weight_array(self) -> np.ndarray:
        return np.asarray(self.weights, dtype=float)

    def eta_array(self) -> np.ndarray:
        return np.asarray(self.eta, dtype=float)

    def threshold_array(self) -> np.ndarray:
        return np.asarray(self.p_thresholds, dtype=float)

    def replace(self, **changes) -> "Scenario":
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True)
class Budget:
    """Power split between transmitter and surface for one scheme."""

    p_bs: float   # BS transmit power cap [W]
    p_ris: float  # surface amplification output cap [W]; 0 for passive/none

    def __post_init__(self):
        if not self.p_bs > 0:
            raise DomainError(f"p_bs must be positive, got {self.p_bs}")
        if self.p_ris < 0:
            raise DomainError(f"p_ris must be nonnegative, got {self.p_ris}")


def default_scenario() -> Scenario:
    """The reference setup used throughout the experiments."""
    return Scenario()


def split_budget(s: Scenario) -> Budget:
    """Divide the total budget into transmit and amplification caps.

    active:  p_bs = p_ris = (p_total - L*(p_c + p_dc)) / 2
    passive: p_bs = p_total - L*p_c, no amplification power
    none:    p_bs = p_total
    """
    if s.scheme == "active":
        overhead = s.n_elements * (s.p_c + s.p_dc)
        if overhead >= s.p_total:
            raise InfeasibleBudget(
                f"element overhead {overhead:.6g} W >= total budget {s.p_total:.6g} W")
        half = (s.p_total - overhead) / 2.0
        return Budget(p_bs=half, p_ris=half)
    if s.scheme == "passive":
        overhead = s.n_elements * s.p_c
        if overhead >= s.p_total:
            raise InfeasibleBudget(
                f"element overhead {overhead:.6g} W >= total budget {s.p_total:.6g} W")
        return Budget(p_bs=s.p_total - overhead, p_ris=0.0)
    return Budget(p_bs=s.p_total, p_ris=0.0)


def total_power(budget: Budget, s: Scenario) -> float:
    """Recombine a budget into total consumed power under the scheme's model."""
    if s.scheme == "active":
        return budget.p_bs + budget.p_ris + s.n_elements * (s.p_c + s.p_dc)
    if s.scheme == "passive":
        return budget.p_bs + s.n_elements * s.p_c
    return budget.p_bs


def af_relay_total_power(p_bs: float, p_relay: float, n_relay_antennas: int,
                         p_t: float = dbm_to_watt(10.0)) -> float:
    """Accounting identity for the amplify-and-forward relay baseline.

    Only the consumption model is provided; no relay optimizer exists in this
    package.
    """
    if p_bs < 0 or p_relay < 0 or n_relay_antennas < 0 or p_t < 0:
        raise DomainError("all relay power terms must be nonnegative")
    return p_bs + p_relay + n_relay_antennas * p_t


def trial_seed(master_seed: int, trial_index: int) -> int:
    """Deterministic, collision-free seed for one Monte-Carlo trial.

    Uses the SeedSequence hash of the (master, trial) pair, so parallel
    workers can derive independent streams without coordination.
    """
    if trial_index < 0:
        raise DomainError("trial_index must be nonnegative")
    state = np.random.SeedSequence(entropy=[int(master_seed), int(trial_index)])
    words = state.generate_state(4, dtype=np.uint32)
    value = 0
    for w in words:
        value = (value << 32) | int(w)
    return value


# --- flat config file -------------------------------------------------------
#
# One `key = value` pair per line, '#' starts a comment.  Keys are exactly the
# Scenario field names; pair fields are comma-separated, tuple fields are
# comma-separated lists.  All powers in watts, lengths in meters.  Unknown
# keys are rejected.

_PAIR_FIELDS = {"bs_pos", "ris_pos", "ir_center", "er_center"}
_TUPLE_FIELDS = {"eta", "weights", "p_thresholds"}
_INT_FIELDS = {"n_antennas", "n_elements", "n_ir", "n_er", "t_max"}
_STR_FIELDS = {"scheme"}


def save_config(s: Scenario, path) -> None:
    lines = ["# riswipt scenario config v1"]
    for field in dataclasses.fields(Scenario):
        value = getattr(s, field.name)
        if field.name in _PAIR_FIELDS or field.name in _TUPLE_FIELDS:
            text = ", ".join(repr(v) for v in value)
        else:
            text = repr(value)
        lines.append(f"{field.name} = {text}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_config(path) -> Scenario:
    known = {f.name for f in dataclasses.fields(Scenario)}
    values = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise FormatError(f"line {lineno}: expected 'key = value', got {raw!r}")
            key, _, text = line.partition("=")
            key = key.strip()
            text = text.strip()
            if key not in known:
                raise FormatError(f"line {lineno}: unknown key {key!r}")
            if key in values:
                raise FormatError(f"line {lineno}: duplicate key {key!r}")
            try:
                if key in _STR_FIELDS:
                    values[key] = text.strip("'\"")
                elif key in _PAIR_FIELDS:
                    parts = [float(p) for p in text.split(",")]
                    if len(parts) != 2:
                        raise ValueError("need exactly two coordinates")
                    values[key] = (parts[0], parts[1])
                elif key in _TUPLE_FIELDS:
                    values[key] = tuple(float(p) for p in text.split(",") if p.strip())
                elif key in _INT_FIELDS:
                    values[key] = int(text)
                else:
                    values[key] = float(text)
            except ValueError as ex:
                raise FormatError(f"line {lineno}: bad value for {key!r}: {ex}") from ex
    try:
        return Scenario(**values)
    except DomainError as ex:
        raise FormatError(f"config violates scenario invariants: {ex}") from ex
