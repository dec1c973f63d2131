"""Covariance matrices, the symplectic form and the quantities built on them.

Conventions: quadratures are ordered (q1, p1, q2, p2, ...) and the vacuum has
covariance matrix equal to the identity, so a state is physical when
``sigma + i*Omega >= 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .errors import DegeneracyError, DimensionError, DomainError, InvariantError, SingularBlockError

PSD_TOL = 1e-9
SYM_TOL = 1e-10
PAIR_TOL = 1e-7
INV_TOL = 1e-12

_OMEGA1 = np.array([[0.0, 1.0], [-1.0, 0.0]])
_Z = np.diag([1.0, -1.0])


def symplectic_form(n: int) -> np.ndarray:
    """Return the n-mode symplectic form, a direct sum of n copies of [[0, 1], [-1, 0]]."""
    if int(n) != n or n < 1:
        raise DimensionError(f"number of modes must be a positive integer, got {n!r}")
    return np.kron(np.eye(int(n)), _OMEGA1)


def _check_symmetric(m: np.ndarray, tol: float = SYM_TOL) -> None:
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {m.shape}")
    skew = np.max(np.abs(m - m.T)) if m.size else 0.0
    if skew > tol * max(1.0, np.max(np.abs(m))):
        raise InvariantError(f"matrix is not symmetric (max skew {skew:.3e})")


@dataclass(frozen=True)
class Bipartition:
    """Alice owns the first ``n_a`` modes, Bob the trailing ``n_b``."""

    n_a: int
    n_b: int

    def __post_init__(self):
        if self.n_a < 1 or self.n_b < 1:
            raise DomainError(f"both parties need at least one mode, got {self.n_a}|{self.n_b}")

    @property
    def modes(self) -> int:
        return self.n_a + self.n_b


class CovarianceMatrix:
    """Real symmetric 2n x 2n covariance matrix of an n-mode Gaussian state.

    The stored array is a read-only copy, so instances can be shared freely.
    Construction only checks shape and symmetry; physicality is tested with
    :func:`is_physical` (the state constructors below guarantee it).
    """

    __slots__ = ("_data",)

    def __init__(self, data):
        arr = np.array(data, dtype=float)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] % 2:
            raise DimensionError(f"covariance matrix must be 2n x 2n, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise InvariantError("covariance matrix has non-finite entries")
        _check_symmetric(arr)
        arr = 0.5 * (arr + arr.T)
        arr.setflags(write=False)
        self._data = arr

    @property
    def data(self) -> np.ndarray:
        return self._data

    @property
    def modes(self) -> int:
        return self._data.shape[0] // 2

    def blocks(self, part: Bipartition) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Return the (A, B, C) blocks: Alice's, Bob's and the correlation block."""
        if part.modes != self.modes:
            raise DimensionError(f"bipartition {part.n_a}|{part.n_b} does not match {self.modes} modes")
        k = 2 * part.n_a
        return self._data[:k, :k], self._data[k:, k:], self._data[:k, k:]

    def __eq__(self, other):
        if not isinstance(other, CovarianceMatrix):
            return NotImplemented
        return np.array_equal(self._data, other._data)

    def __hash__(self):
        return hash(self._data.tobytes())

    def __repr__(self):
        return f"CovarianceMatrix(modes={self.modes})"


def _as_array(cov) -> np.ndarray:
    if isinstance(cov, CovarianceMatrix):
        return cov.data
    arr = np.asarray(cov, dtype=float)
    _check_symmetric(arr)
    return arr


def is_physical(cov, tol: float = PSD_TOL) -> bool:
    """True iff ``cov + i*Omega`` is positive semidefinite up to ``tol``."""
    s = _as_array(cov)
    if s.shape[0] % 2:
        raise DimensionError(f"covariance matrix must be 2n x 2n, got shape {s.shape}")
    omega = symplectic_form(s.shape[0] // 2)
    return bool(np.linalg.eigvalsh(s + 1j * omega)[0] >= -tol)


def _check_squeezing(r: float) -> float:
    if not math.isfinite(r) or r < 0:
        raise DomainError(f"squeezing must be finite and non-negative, got {r!r}")
    return float(r)


def two_mode_squeezed(r: float) -> CovarianceMatrix:
    """Two-mode squeezed vacuum with squeezing ``r`` (r=0 is the two-mode vacuum)."""
    r = _check_squeezing(r)
    c, s = math.cosh(2 * r), math.sinh(2 * r)
    eye = np.eye(2)
    return CovarianceMatrix(np.block([[c * eye, s * _Z], [s * _Z, c * eye]]))


def ghz_w_state(r: float) -> CovarianceMatrix:
    """Permutation-symmetric three-mode GHZ/W state with equal squeezings ``r``."""
    r = _check_squeezing(r)
    e2, em2 = math.exp(2 * r), math.exp(-2 * r)
    diag = np.diag([(e2 + 2 * em2) / 3, (em2 + 2 * e2) / 3])
    off = (2.0 / 3.0) * math.sinh(2 * r) * _Z
    return CovarianceMatrix(np.block([[diag, off, off], [off, diag, off], [off, off, diag]]))


def schur_complement(cov: CovarianceMatrix, part: Bipartition, side: Literal["B", "A"] = "B") -> np.ndarray:
    """Schur complement used by the steering criterion.

    ``side="B"`` returns ``M_B = B - C^T A^{-1} C`` (A->B steering),
    ``side="A"`` returns ``M_A = A - C B^{-1} C^T`` (B->A steering).
    """
    a, b, c = cov.blocks(part)
    if side == "B":
        keep, inv, corr = b, a, c
    elif side == "A":
        keep, inv, corr = a, b, c.T
    else:
        raise DomainError(f"side must be 'A' or 'B', got {side!r}")
    if not corr.any():
        return keep.copy()
    svals = np.linalg.svd(inv, compute_uv=False)
    if svals[-1] <= INV_TOL * svals[0]:
        raise SingularBlockError(f"block to invert for M_{side} is singular", float(svals[-1]))
    m = keep - corr.T @ np.linalg.solve(inv, corr)
    return 0.5 * (m + m.T)


def symplectic_eigenvalues(m, pair_tol: float = PAIR_TOL) -> np.ndarray:
    """Symplectic eigenvalues of a symmetric 2m x 2m matrix, sorted ascending.

    They are the moduli of the eigenvalues of ``i*Omega*M``, which come in
    +/- pairs; each pair is collapsed to its mean.
    """
    mat = np.asarray(m, dtype=float)
    _check_symmetric(mat)
    if mat.shape[0] % 2 or mat.shape[0] == 0:
        raise DimensionError(f"expected a 2m x 2m matrix, got shape {mat.shape}")
    ev = np.sort(np.abs(np.linalg.eigvals(1j * symplectic_form(mat.shape[0] // 2) @ mat)))
    lo, hi = ev[0::2], ev[1::2]
    gap = np.abs(hi - lo)
    if np.any(gap > pair_tol * np.maximum(1.0, hi)):
        raise DegeneracyError(f"could not pair eigenvalues of i*Omega*M: {ev}")
    return 0.5 * (lo + hi)
