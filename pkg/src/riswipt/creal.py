"""Real reductions of complex linear algebra for the conic builders.

Complex vectors enter conic programs as stacked [Re, Im] blocks.  Hermitian
matrix variables are parametrized by a real basis (diagonal entries, real and
imaginary off-diagonal parts) whose trace pairings stay exactly real.
"""

from __future__ import annotations

import numpy as np

from .conic import embed_hermitian, svec
from .errors import DimensionError


def creal_rows(mat: np.ndarray) -> np.ndarray:
    """Real (2r, 2n) block computing [Re(Mx); Im(Mx)] from [Re x; Im x]."""
    mat = np.atleast_2d(mat)
    re, im = mat.real, mat.imag
    return np.block([[re, -im], [im, re]])


def clin_coeffs(v: np.ndarray) -> np.ndarray:
    """Coefficients of x -> Re(v^H x) over the [Re x; Im x] layout."""
    return np.concatenate([v.real, v.imag])


def unpack_cvec(x: np.ndarray) -> np.ndarray:
    half = len(x) // 2
    if len(x) != 2 * half:
        raise DimensionError("real vector length must be even")
    return x[:half] + 1j * x[half:]


def psd_factor(mat: np.ndarray, rel_cutoff: float = 1e-13) -> np.ndarray:
    """Rows C with C^H C = mat for Hermitian PSD mat; rank-deficient friendly.

    Eigenvalues below rel_cutoff * max(eig) are treated as zero; slightly
    negative ones (solver noise) are clipped.
    """
    mat = (mat + mat.conj().T) / 2.0
    vals, vecs = np.linalg.eigh(mat)
    top = float(vals.max(initial=0.0))
    keep = vals > max(top, 1.0) * rel_cutoff if top > 0 else vals > np.inf
    vals = np.clip(vals[keep], 0.0, None)
    return (np.sqrt(vals)[:, None] * vecs[:, keep].conj().T)


class HermitianBasis:
    """Real parametrization of n x n Hermitian matrices (n^2 parameters)."""

    def __init__(self, n: int):
        self.n = n
        basis = []
        for i in range(n):
            e = np.zeros((n, n), dtype=complex)
            e[i, i] = 1.0
            basis.append(e)
        for i in range(n):
            for j in range(i + 1, n):
                e = np.zeros((n, n), dtype=complex)
                e[i, j] = e[j, i] = 1.0
                basis.append(e)
                e = np.zeros((n, n), dtype=complex)
                e[i, j] = 1.0j
                e[j, i] = -1.0j
                basis.append(e)
        self.basis = basis
        self.n_params = len(basis)  # == n^2

    def matrix(self, theta: np.ndarray) -> np.ndarray:
        out = np.zeros((self.n, self.n), dtype=complex)
        for t, e in zip(theta, self.basis):
            out += t * e
        return out

    def parameters(self, mat: np.ndarray) -> np.ndarray:
        """Inverse of `matrix` for Hermitian input."""
        theta = []
        for i in range(self.n):
            theta.append(mat[i, i].real)
        for i in range(self.n):
            for j in range(i + 1, self.n):
                theta.append(mat[i, j].real)
                theta.append(mat[i, j].imag)
        return np.array(theta)

    def trace_coeffs(self, a: np.ndarray) -> np.ndarray:
        """Coefficients t_p with Tr(A V(theta)) = sum_p t_p theta_p (A Hermitian)."""
        return np.array([np.trace(a @ e).real for e in self.basis])

    def psd_embedding_columns(self) -> np.ndarray:
        """svec(embed(E_p)) stacked as columns; V >= 0 iff the sum is PSD."""
        cols = [svec(embed_hermitian(e)) for e in self.basis]
        return np.column_stack(cols)
