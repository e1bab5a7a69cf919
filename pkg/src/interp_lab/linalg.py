"""Dense linear-algebra kernel: Gram matrices, pseudo-inverses, quadratic forms.

Matrices are plain float64 numpy arrays.  The only on-disk format is the
binary fixture layout used by the golden tests::

    u64 rows | u64 cols | rows*cols f64 values, column-major, little-endian
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DimMismatch, NonFinite


def as_matrix(a, name="matrix"):
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2:
        raise DimMismatch(f"{name} must be 2-D, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise NonFinite(f"{name} contains non-finite entries")
    return a


def gram(X) -> np.ndarray:
    """Return ``X.T @ X`` with the lower triangle mirrored from the upper one."""
    X = as_matrix(X, "X")
    G = X.T @ X
    upper = np.triu(G)
    return upper + np.triu(G, 1).T


@dataclass(frozen=True)
class PseudoInverse:
    """Moore-Penrose inverse of a symmetric matrix, kept in factored form.

    ``M+ = V diag(inv_eigvals) V^T`` where eigenvalues under the cutoff have
    been zeroed.
    """

    eigvecs: np.ndarray
    inv_eigvals: np.ndarray
    rank: int
    sigma_max: float

    @property
    def n(self) -> int:
        return self.eigvecs.shape[0]

    def apply(self, b) -> np.ndarray:
        b = np.asarray(b, dtype=np.float64)
        if b.shape[0] != self.n:
            raise DimMismatch(f"expected leading dimension {self.n}, got {b.shape}")
        coef = self.eigvecs.T @ b
        if coef.ndim == 1:
            coef = coef * self.inv_eigvals
        else:
            coef = coef * self.inv_eigvals[:, None]
        return self.eigvecs @ coef

    def matrix(self) -> np.ndarray:
        P = (self.eigvecs * self.inv_eigvals) @ self.eigvecs.T
        return 0.5 * (P + P.T)


def pinv(M, rel_tol: float | None = None) -> PseudoInverse:
    """Pseudo-inverse of a symmetric (PSD) matrix via eigendecomposition.

    Eigenvalues with ``|lambda| <= rel_tol * sigma_max`` are treated as zero.
    The default ``rel_tol`` is ``1e-12 * n``.
    """
    M = as_matrix(M, "M")
    n, m = M.shape
    if n != m:
        raise DimMismatch(f"pinv needs a square matrix, got {M.shape}")
    if rel_tol is None:
        rel_tol = 1e-12 * n
    evals, evecs = np.linalg.eigh(0.5 * (M + M.T))
    sigma_max = float(np.max(np.abs(evals))) if n else 0.0
    keep = np.abs(evals) > rel_tol * sigma_max
    inv = np.zeros_like(evals)
    inv[keep] = 1.0 / evals[keep]
    return PseudoInverse(evecs, inv, int(keep.sum()), sigma_max)


def quad_form(M_inv: PseudoInverse, a, b) -> float:
    """``a^T M+ b``."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != (M_inv.n,) or b.shape != (M_inv.n,):
        raise DimMismatch(
            f"quad_form vectors must have shape ({M_inv.n},), got {a.shape} and {b.shape}"
        )
    return float((M_inv.eigvecs.T @ a) @ (M_inv.inv_eigvals * (M_inv.eigvecs.T @ b)))


def spectral_norm_estimate(M, iters: int = 100, seed: int = 0) -> float:
    """Power-iteration estimate of the largest eigenvalue of a PSD matrix."""
    M = np.asarray(M, dtype=np.float64)
    n = M.shape[0]
    if n == 0:
        return 0.0
    v = np.random.default_rng(seed).standard_normal(n)
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(iters):
        w = M @ v
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        v = w / nw
        if abs(nw - lam) <= 1e-12 * nw:
            lam = nw
            break
        lam = nw
    # power iteration underestimates; pad slightly so 1/L stays a safe step
    return float(lam) * 1.01


def write_matrix_bin(path, M) -> None:
    M = np.asarray(M, dtype=np.float64)
    if M.ndim == 1:
        M = M[:, None]
    rows, cols = M.shape
    with open(path, "wb") as fh:
        fh.write(struct.pack("<QQ", rows, cols))
        fh.write(np.asarray(M, dtype="<f8").tobytes(order="F"))


def read_matrix_bin(path) -> np.ndarray:
    data = Path(path).read_bytes()
    rows, cols = struct.unpack("<QQ", data[:16])
    values = np.frombuffer(data, dtype="<f8", offset=16)
    if values.size != rows * cols:
        raise DimMismatch(f"fixture {path}: header says {rows}x{cols}, found {values.size} values")
    return values.reshape((rows, cols), order="F").astype(np.float64)
