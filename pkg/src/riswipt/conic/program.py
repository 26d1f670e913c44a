"""Real-valued conic program intermediate representation.

Programs are stated as

    minimize    c' x
    subject to  b - A x  in  K

with K a product of zero, nonnegative, second-order and PSD cones, stacked in
that order.  PSD slices hold the matrix in scaled-triangle (svec) form: upper
triangle read column by column with off-diagonal entries multiplied by
sqrt(2), so that inner products of svec vectors equal trace inner products.

Complex Hermitian data enters through the standard real embedding
[[Re, -Im], [Im, Re]], which preserves semidefiniteness and doubles traces.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import DimensionError, DomainError

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
NUMERICAL_LIMIT = "numerical_limit"


def svec_dim(side: int) -> int:
    return side * (side + 1) // 2


def _tri_indices(side: int):
    rows, cols = np.tril_indices(side)
    return cols, rows  # upper triangle, column-major


def svec(mat: np.ndarray) -> np.ndarray:
    """Scaled upper-triangle vectorization of a symmetric matrix."""
    side = mat.shape[0]
    if mat.shape != (side, side):
        raise DimensionError("svec needs a square matrix")
    i, j = _tri_indices(side)
    out = mat[i, j].astype(float).copy()
    out[i != j] *= math.sqrt(2.0)
    return out


def smat(vec: np.ndarray) -> np.ndarray:
    """Inverse of svec."""
    dim = len(vec)
    side = int(round((math.sqrt(8 * dim + 1) - 1) / 2))
    if svec_dim(side) != dim:
        raise DimensionError(f"length {dim} is not a triangular number")
    i, j = _tri_indices(side)
    out = np.zeros((side, side))
    vals = np.asarray(vec, dtype=float).copy()
    off = i != j
    vals[off] /= math.sqrt(2.0)
    out[i, j] = vals
    out[j, i] = vals
    return out


def embed_hermitian(h: np.ndarray) -> np.ndarray:
    """Real symmetric embedding [[Re, -Im], [Im, Re]] of a Hermitian matrix."""
    h = np.asarray(h)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise DimensionError("embedding needs a square matrix")
    scale = max(1.0, float(np.abs(h).max(initial=0.0)))
    if np.abs(h - h.conj().T).max(initial=0.0) > 1e-12 * scale:
        raise DomainError("matrix is not Hermitian")
    re, im = h.real, h.imag
    return np.block([[re, -im], [im, re]])


@dataclass(frozen=True)
class ConeDims:
    zero: int = 0
    nonneg: int = 0
    soc: tuple[int, ...] = ()
    psd: tuple[int, ...] = ()

    def __post_init__(self):
        if self.zero < 0 or self.nonneg < 0:
            raise DomainError("cone dimensions must be nonnegative")
        if any(q < 2 for q in self.soc):
            raise DomainError("second-order cones need dimension >= 2")
        if any(p < 1 for p in self.psd):
            raise DomainError("PSD cones need side >= 1")

    @property
    def rows(self) -> int:
        return (self.zero + self.nonneg + sum(self.soc)
                + sum(svec_dim(p) for p in self.psd))

    @property
    def degree(self) -> int:
        """Total barrier degree (Jordan rank) of the nontrivial cones."""
        return self.nonneg + 2 * len(self.soc) + sum(self.psd)


@dataclass(frozen=True)
class ConicProgram:
    c: np.ndarray
    A: np.ndarray
    b: np.ndarray
    cones: ConeDims
    blocks: dict = field(default_factory=dict)  # name -> variable slice

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float)
        a = np.asarray(self.A, dtype=float)
        b = np.asarray(self.b, dtype=float)
        if a.ndim != 2 or c.ndim != 1 or b.ndim != 1:
            raise DimensionError("A must be a matrix, b and c vectors")
        if a.shape != (len(b), len(c)):
            raise DimensionError(f"A has shape {a.shape}, want ({len(b)}, {len(c)})")
        if self.cones.rows != len(b):
            raise DimensionError(
                f"cones cover {self.cones.rows} rows but b has {len(b)}")
        if len(c) == 0 or len(b) == 0:
            raise DomainError("program needs at least one variable and one row")
        for arr in (c, a, b):
            if not np.all(np.isfinite(arr)):
                raise DomainError("program data must be finite")
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "A", a)
        object.__setattr__(self, "b", b)

    @property
    def n_vars(self) -> int:
        return len(self.c)

    @property
    def n_rows(self) -> int:
        return len(self.b)


@dataclass(frozen=True)
class ConicSolution:
    status: str
    x: np.ndarray | None
    objective: float
    pres: float
    dres: float
    gap: float
    iterations: int

    def require_optimal(self):
        from ..errors import InfeasibleSubproblem, SolverFailure
        if self.status == OPTIMAL:
            return self
        if self.status == INFEASIBLE:
            raise InfeasibleSubproblem("subproblem infeasible", status=self.status)
        raise SolverFailure(f"solver returned {self.status}", status=self.status)


class ProgramBuilder:
    """Incremental assembly keeping the canonical cone ordering."""

    def __init__(self):
        self._n = 0
        self.blocks: dict[str, slice] = {}
        self._c_parts: list[tuple[slice, np.ndarray]] = []
        self._rows = {"zero": [], "nonneg": [], "soc": [], "psd": []}
        self._soc_dims: list[int] = []
        self._psd_sides: list[int] = []

    def add_vars(self, name: str, count: int) -> slice:
        if count < 1:
            raise DomainError("variable blocks need at least one entry")
        if name in self.blocks:
            raise DomainError(f"duplicate variable block {name!r}")
        block = slice(self._n, self._n + count)
        self.blocks[name] = block
        self._n += count
        return block

    @property
    def n_vars(self) -> int:
        return self._n

    def add_objective(self, block: slice, coeffs) -> None:
        self._c_parts.append((block, np.asarray(coeffs, dtype=float)))

    def _check(self, a_rows: np.ndarray, b_rows: np.ndarray):
        a_rows = np.atleast_2d(np.asarray(a_rows, dtype=float))
        b_rows = np.atleast_1d(np.asarray(b_rows, dtype=float))
        if a_rows.shape != (len(b_rows), self._n):
            raise DimensionError(
                f"rows have shape {a_rows.shape}, want ({len(b_rows)}, {self._n})")
        return a_rows, b_rows

    def add_zero(self, a_rows, b_rows) -> None:
        self._rows["zero"].append(self._check(a_rows, b_rows))

    def add_nonneg(self, a_rows, b_rows) -> None:
        self._rows["nonneg"].append(self._check(a_rows, b_rows))

    def add_soc(self, a_rows, b_rows) -> None:
        a_rows, b_rows = self._check(a_rows, b_rows)
        if len(b_rows) < 2:
            raise DimensionError("second-order cone needs dimension >= 2")
        self._rows["soc"].append((a_rows, b_rows))
        self._soc_dims.append(len(b_rows))

    def add_psd(self, a_rows, b_rows, side: int) -> None:
        a_rows, b_rows = self._check(a_rows, b_rows)
        if len(b_rows) != svec_dim(side):
            raise DimensionError("PSD block rows must match svec dimension")
        self._rows["psd"].append((a_rows, b_rows))
        self._psd_sides.append(side)

    def build(self, **extra_blocks) -> ConicProgram:
        c = np.zeros(self._n)
        for block, coeffs in self._c_parts:
            c[block] += coeffs
        stacks_a, stacks_b = [], []
        for kind in ("zero", "nonneg", "soc", "psd"):
            for a_rows, b_rows in self._rows[kind]:
                stacks_a.append(a_rows)
                stacks_b.append(b_rows)
        a = np.vstack(stacks_a) if stacks_a else np.zeros((0, self._n))
        b = np.concatenate(stacks_b) if stacks_b else np.zeros(0)
        dims = ConeDims(
            zero=sum(len(rb) for _, rb in self._rows["zero"]),
            nonneg=sum(len(rb) for _, rb in self._rows["nonneg"]),
            soc=tuple(self._soc_dims),
            psd=tuple(self._psd_sides),
        )
        blocks = dict(self.blocks)
        blocks.update(extra_blocks)
        return ConicProgram(c=c, A=a, b=b, cones=dims, blocks=blocks)


def quad_epigraph_soc(f_rows: np.ndarray, g: np.ndarray, lin_row: np.ndarray,
                      lin_const: float):
    """Rows encoding  ||F x + g||^2 <= h' x + d  as a second-order cone.

    Uses the rotated-cone identity ||z||^2 <= t  iff  ||(2z, t-1)|| <= t + 1.
    Returns (A_block, b_block) for ProgramBuilder.add_soc.
    """
    f_rows = np.atleast_2d(f_rows)
    g = np.atleast_1d(g)
    k, n = f_rows.shape
    a_block = np.zeros((k + 2, n))
    b_block = np.zeros(k + 2)
    a_block[0] = -lin_row
    b_block[0] = lin_const + 1.0
    a_block[1:k + 1] = -2.0 * f_rows
    b_block[1:k + 1] = 2.0 * g
    a_block[k + 1] = -lin_row
    b_block[k + 1] = lin_const - 1.0
    return a_block, b_block


def dump_triplets(prog: ConicProgram, fh) -> None:
    """Sparse triplet text dump: header, then `c i v`, `A i j v`, `b i v` lines."""
    close = False
    if isinstance(fh, (str, bytes)):
        fh = open(fh, "w", encoding="utf-8")
        close = True
    try:
        fh.write("conicprogram v1\n")
        fh.write(f"vars {prog.n_vars}\n")
        soc = ",".join(str(q) for q in prog.cones.soc)
        psd = ",".join(str(p) for p in prog.cones.psd)
        fh.write(f"cones zero={prog.cones.zero} nonneg={prog.cones.nonneg} "
                 f"soc=[{soc}] psd=[{psd}]\n")
        for i, v in enumerate(prog.c):
            if v != 0.0:
                fh.write(f"c {i} {float(v)!r}\n")
        rows, cols = np.nonzero(prog.A)
        for i, j in zip(rows, cols):
            fh.write(f"A {i} {j} {float(prog.A[i, j])!r}\n")
        for i, v in enumerate(prog.b):
            if v != 0.0:
                fh.write(f"b {i} {float(v)!r}\n")
    finally:
        if close:
            fh.close()
