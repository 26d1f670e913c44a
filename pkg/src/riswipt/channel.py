"""Channel synthesis and persistence.

Each realization combines distance path loss with Rician small-scale fading.
Line-of-sight components are deterministic functions of geometry: both arrays
are half-wavelength uniform linear arrays laid along the x-axis, and each link
carries a unit-modulus phase set by its length.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass, fields

import numpy as np

from .errors import DimensionError, DomainError, FormatError
from .scenario import Scenario

# Carrier wavelength [m]; only sets the deterministic line-of-sight phases.
WAVELENGTH = 0.1

_MAGIC = b"RWCH"
_VERSION = 1


@dataclass(frozen=True)
class ChannelSet:
    """One realization of the five channel groups plus receiver drops.

    Row k of a receiver-side matrix is that receiver's channel vector; the
    received scalar is row @ conj(transmit vector) after the usual Hermitian
    pairing (y = g^H t).
    """

    bs_ris: np.ndarray   # (L, N) complex
    bs_ir: np.ndarray    # (K_I, N) complex
    bs_er: np.ndarray    # (K_E, N) complex
    ris_ir: np.ndarray   # (K_I, L) complex
    ris_er: np.ndarray   # (K_E, L) complex
    ir_pos: np.ndarray   # (K_I, 2) meters
    er_pos: np.ndarray   # (K_E, 2) meters

    def __post_init__(self):
        l, n = self.bs_ris.shape
        k_i = self.bs_ir.shape[0]
        k_e = self.bs_er.shape[0]
        expected = {
            "bs_ir": (k_i, n), "bs_er": (k_e, n),
            "ris_ir": (k_i, l), "ris_er": (k_e, l),
            "ir_pos": (k_i, 2), "er_pos": (k_e, 2),
        }
        for name, shape in expected.items():
            if getattr(self, name).shape != shape:
                raise DimensionError(f"{name} has shape {getattr(self, name).shape}, want {shape}")
        for f in fields(self):
            arr = getattr(self, f.name)
            if not np.all(np.isfinite(arr.view(float))):
                raise DomainError(f"{f.name} contains non-finite entries")
            arr.setflags(write=False)

    @property
    def n_antennas(self) -> int:
        return self.bs_ris.shape[1]

    @property
    def n_elements(self) -> int:
        return self.bs_ris.shape[0]


def path_loss(d: float, alpha: float) -> float:
    """Linear power gain 10^((-30 - 10*alpha*log10(d))/10) for distance d [m]."""
    if d <= 0:
        raise DomainError(f"distance must be positive, got {d}")
    return 1e-3 * d ** (-alpha)


def _ula(n: int, cos_x: float) -> np.ndarray:
    """Half-wavelength ULA response along the x-axis for direction cosine cos_x."""
    return np.exp(1j * np.pi * np.arange(n) * cos_x)


def _direction_cosine(src: np.ndarray, dst: np.ndarray) -> float:
    diff = dst - src
    return float(diff[0] / np.linalg.norm(diff))


def _link_phase(d: float) -> complex:
    return np.exp(-2j * np.pi * d / WAVELENGTH)


def _rician(pl: float, los: np.ndarray, kappa: float, rng: np.random.Generator) -> np.ndarray:
    shape = los.shape
    nlos = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)
    mix = np.sqrt(kappa / (1.0 + kappa)) * los + np.sqrt(1.0 / (1.0 + kappa)) * nlos
    return np.sqrt(pl) * mix


def _draw_in_disk(center, radius: float, count: int, rng: np.random.Generator) -> np.ndarray:
    r = radius * np.sqrt(rng.uniform(size=count))
    theta = rng.uniform(0.0, 2.0 * np.pi, size=count)
    return np.column_stack([center[0] + r * np.cos(theta), center[1] + r * np.sin(theta)])


def synth_channels(s: Scenario, seed: int) -> ChannelSet:
    """Draw receiver positions and all five channel groups for one trial."""
    rng = np.random.default_rng(seed)
    bs = np.asarray(s.bs_pos, dtype=float)
    ris = np.asarray(s.ris_pos, dtype=float)
    ir_pos = _draw_in_disk(s.ir_center, s.ir_radius, s.n_ir, rng)
    er_pos = _draw_in_disk(s.er_center, s.er_radius, s.n_er, rng)

    d_bs_ris = float(np.linalg.norm(ris - bs))
    los_q = (_link_phase(d_bs_ris)
             * np.outer(_ula(s.n_elements, _direction_cosine(ris, bs)),
                        _ula(s.n_antennas, _direction_cosine(bs, ris)).conj()))
    bs_ris = _rician(path_loss(d_bs_ris, s.alpha_bs_ris), los_q, s.rician_kappa, rng)

    def from_array(array_pos, n_elem, alpha, targets):
        rows = []
        for p in targets:
            d = float(np.linalg.norm(p - array_pos))
            los = _link_phase(d) * _ula(n_elem, _direction_cosine(array_pos, p))
            rows.append(_rician(path_loss(d, alpha), los, s.rician_kappa, rng))
        return np.array(rows).reshape(len(targets), n_elem)

    bs_ir = from_array(bs, s.n_antennas, s.alpha_bs_ir, ir_pos)
    bs_er = from_array(bs, s.n_antennas, s.alpha_bs_er, er_pos)
    ris_ir = from_array(ris, s.n_elements, s.alpha_ris_ir, ir_pos)
    ris_er = from_array(ris, s.n_elements, s.alpha_ris_er, er_pos)
    return ChannelSet(bs_ris=bs_ris, bs_ir=bs_ir, bs_er=bs_er,
                      ris_ir=ris_ir, ris_er=ris_er, ir_pos=ir_pos, er_pos=er_pos)


# --- persistence -------------------------------------------------------------
#
# Binary layout (little endian):
#   magic "RWCH" | u16 version | u16 pad | u32 N, L, K_I, K_E
#   ir_pos, er_pos as f64 rows
#   bs_ris, bs_ir, bs_er, ris_ir, ris_er as interleaved (re, im) f64 pairs

def _serialize(cs: ChannelSet) -> bytes:
    l, n = cs.bs_ris.shape
    k_i, k_e = cs.bs_ir.shape[0], cs.bs_er.shape[0]
    parts = [_MAGIC, struct.pack("<HHIIII", _VERSION, 0, n, l, k_i, k_e)]
    parts.append(np.ascontiguousarray(cs.ir_pos, dtype="<f8").tobytes())
    parts.append(np.ascontiguousarray(cs.er_pos, dtype="<f8").tobytes())
    for name in ("bs_ris", "bs_ir", "bs_er", "ris_ir", "ris_er"):
        arr = getattr(cs, name)
        flat = np.empty(arr.size * 2, dtype="<f8")
        flat[0::2] = arr.real.ravel()
        flat[1::2] = arr.imag.ravel()
        parts.append(flat.tobytes())
    return b"".join(parts)


def save_channels(cs: ChannelSet, path) -> None:
    with open(path, "wb") as fh:
        fh.write(_serialize(cs))


def load_channels(path) -> ChannelSet:
    with open(path, "rb") as fh:
        blob = fh.read()
    header = struct.calcsize("<HHIIII")
    if len(blob) < 4 + header:
        raise FormatError("file too short for header")
    if blob[:4] != _MAGIC:
        raise FormatError(f"bad magic {blob[:4]!r}")
    version, _, n, l, k_i, k_e = struct.unpack_from("<HHIIII", blob, 4)
    if version != _VERSION:
        raise FormatError(f"unsupported version {version}")
    offset = 4 + header

    def take(count: int) -> np.ndarray:
        nonlocal offset
        nbytes = count * 8
        if offset + nbytes > len(blob):
            raise FormatError("file truncated")
        out = np.frombuffer(blob, dtype="<f8", count=count, offset=offset).copy()
        offset += nbytes
        return out

    ir_pos = take(k_i * 2).reshape(k_i, 2)
    er_pos = take(k_e * 2).reshape(k_e, 2)

    def take_complex(rows: int, cols: int) -> np.ndarray:
        flat = take(rows * cols * 2)
        return (flat[0::2] + 1j * flat[1::2]).reshape(rows, cols)

    bs_ris = take_complex(l, n)
    bs_ir = take_complex(k_i, n)
    bs_er = take_complex(k_e, n)
    ris_ir = take_complex(k_i, l)
    ris_er = take_complex(k_e, l)
    if offset != len(blob):
        raise FormatError(f"{len(blob) - offset} unexpected trailing bytes")
    return ChannelSet(bs_ris=bs_ris, bs_ir=bs_ir, bs_er=bs_er,
                      ris_ir=ris_ir, ris_er=ris_er, ir_pos=ir_pos, er_pos=er_pos)


def channel_hash(cs: ChannelSet) -> str:
    """Content hash of a realization; equal hashes mean bit-equal channels."""
    return hashlib.sha256(_serialize(cs)).hexdigest()
