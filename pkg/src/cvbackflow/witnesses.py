"""Correlation quantifiers and backflow detection on sampled time series."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np

from .errors import InsufficientDataError, InvariantError, UnsupportedPartitionError
from .symplectic import Bipartition, CovarianceMatrix, schur_complement, symplectic_eigenvalues, symplectic_form

BACKFLOW_REL_TOL = 1e-9


def steerability(cov: CovarianceMatrix, part: Bipartition, direction: Literal["A->B", "B->A"] = "A->B") -> float:
    """Gaussian steerability in nats, ``max(0, -sum_{nu<1} ln nu)``.

    The symplectic eigenvalues are those of the Schur complement of the
    steered party's block: ``M_B`` for A->B, ``M_A`` for B->A.
    """
    if direction == "A->B":
        m = schur_complement(cov, part, "B")
    elif direction == "B->A":
        m = schur_complement(cov, part, "A")
    else:
        raise ValueError(f"direction must be 'A->B' or 'B->A', got {direction!r}")
    nu = symplectic_eigenvalues(m)
    return max(0.0, -float(np.sum(np.log(nu[nu < 1.0]))))


def _pt_form(part: Bipartition) -> np.ndarray:
    k = 2 * part.n_a
    om = np.zeros((2 * part.modes, 2 * part.modes))
    om[:k, :k] = symplectic_form(part.n_a)
    om[k:, k:] = symplectic_form(part.n_b).T
    return om


def entanglement_ppt(cov: CovarianceMatrix, part: Bipartition) -> float:
    """PPT entanglement: minus the sum of the negative eigenvalues of
    ``sigma + i (Omega_A (+) Omega_B^T)``.
    """
    if part.n_a > 1 and part.n_b > 1:
        raise UnsupportedPartitionError(
            f"PPT is not sufficient for a {part.n_a}|{part.n_b} split; one party must hold a single mode")
    if part.modes != cov.modes:
        raise UnsupportedPartitionError(f"bipartition {part.n_a}|{part.n_b} does not match {cov.modes} modes")
    mu = np.linalg.eigvalsh(cov.data + 1j * _pt_form(part))
    return max(0.0, -float(np.sum(mu[mu < 0.0])))


@dataclass(frozen=True)
class WitnessTrace:
    """Witness values sampled on a strictly increasing time grid."""

    times: tuple[float, ...]
    values: tuple[float, ...]
    label: str = ""

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if t.shape != v.shape or t.ndim != 1:
            raise InvariantError(f"times and values must be 1-D of equal length ({t.shape} vs {v.shape})")
        if t.size > 1 and np.any(np.diff(t) <= 0):
            raise InvariantError("times must be strictly increasing")
        if not np.all(np.isfinite(v)) or np.any(v < 0):
            raise InvariantError("witness values must be finite and non-negative")
        object.__setattr__(self, "times", tuple(map(float, t)))
        object.__setattr__(self, "values", tuple(map(float, v)))

    def __len__(self):
        return len(self.times)


@dataclass(frozen=True)
class BackflowReport:
    intervals: tuple[tuple[float, float], ...]
    max_rise: float
    tolerance: float
    # runs of rising steps as half-open ranges [a, b); the run covers the interval (t_a, t_b)
    index_ranges: tuple[tuple[int, int], ...] = ()

    @property
    def has_backflow(self) -> bool:
        return bool(self.intervals)


def mask_runs(mask: Sequence[bool]) -> list[tuple[int, int]]:
    """Maximal runs of True as half-open index ranges [start, stop)."""
    m = np.asarray(mask, dtype=bool)
    if m.size == 0:
        return []
    edges = np.diff(np.concatenate(([0], m.astype(np.int8), [0])))
    starts = np.flatnonzero(edges == 1)
    stops = np.flatnonzero(edges == -1)
    return list(zip(starts.tolist(), stops.tolist()))


def detect_backflows(trace: WitnessTrace, rel_tol: float = BACKFLOW_REL_TOL) -> BackflowReport:
    """Find every maximal time interval over which the trace keeps rising.

    A step ``i -> i+1`` rises when the increase exceeds
    ``rel_tol * max(1, max(values))``. A run of rising steps ``i..j`` is
    reported as the interval ``(t_i, t_{j+1})``.
    """
    if len(trace) < 2:
        raise InsufficientDataError("a trace needs at least two samples to detect backflows")
    t = np.asarray(trace.times)
    v = np.asarray(trace.values)
    thr = rel_tol * max(1.0, float(v.max()))
    dv = np.diff(v)
    rising = dv > thr
    runs = mask_runs(rising)
    intervals = tuple((float(t[a]), float(t[b])) for a, b in runs)
    max_rise = float(dv[rising].max()) if rising.any() else 0.0
    return BackflowReport(intervals, max_rise, thr, tuple(runs))


def overlaps(a: tuple[float, float], b: tuple[float, float]) -> bool:
    """True when two closed intervals share a segment of positive length."""
    return min(a[1], b[1]) - max(a[0], b[0]) > 0.0


def backflows_inside(report: BackflowReport, windows: Sequence[tuple[float, float]]) -> list[bool]:
    """For each window, whether some backflow interval overlaps it."""
    return [any(overlaps(w, b) for b in report.intervals) for w in windows]
