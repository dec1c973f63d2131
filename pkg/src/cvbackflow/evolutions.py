"""Time-parametrised single-mode channel families and their Markovianity tests.

Lossy-form evolutions have dynamical maps (tau(t) I, eta(t) I); classical
noise is the special case tau = 1. Derivatives are always supplied
analytically by the caller.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Literal, Sequence

import numpy as np

from .channels import GaussianChannel
from .errors import DegenerateEvolutionError, DomainError, InvariantError, UnsupportedFormError
from .symplectic import symplectic_form
from .witnesses import mask_runs

CP_TOL = 1e-9

Scalar = Callable[[float], float]
# t -> (T, dT/dt, N, dN/dt), each a 2x2 array
MatrixForm = Callable[[float], tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]]


def _one(t: float) -> float:
    return 1.0


def _zero(t: float) -> float:
    return 0.0


@dataclass(frozen=True)
class Evolution:
    """Immutable bundle of the functions describing a dynamical-map family.

    ``kind`` is ``"classical_noise"``, ``"lossy"`` or ``"custom"``. Lossy-form
    kinds carry ``tau``, ``tau_dot``, ``eta`` and ``eta_dot``; a custom
    evolution carries ``matrices`` returning (T, T_dot, N, N_dot) at time t.
    """

    kind: Literal["classical_noise", "lossy", "custom"]
    tau: Scalar | None = None
    tau_dot: Scalar | None = None
    eta: Scalar | None = None
    eta_dot: Scalar | None = None
    t_max: float = math.inf
    matrices: MatrixForm | None = None
    name: str = ""

    def __post_init__(self):
        if self.kind not in ("classical_noise", "lossy", "custom"):
            raise InvariantError(f"unknown evolution kind {self.kind!r}")
        if not self.t_max > 0:
            raise InvariantError(f"t_max must be positive, got {self.t_max}")
        if self.kind == "classical_noise":
            object.__setattr__(self, "tau", _one)
            object.__setattr__(self, "tau_dot", _zero)
        if self.is_lossy_form:
            if None in (self.tau, self.tau_dot, self.eta, self.eta_dot):
                raise InvariantError(f"{self.kind} evolution needs tau, tau_dot, eta and eta_dot")
            if abs(self.tau(0.0) - 1.0) > 1e-12 or abs(self.eta(0.0)) > 1e-12:
                raise InvariantError("a dynamical map must be the identity channel at t=0")
        elif self.matrices is None:
            raise InvariantError("a custom evolution needs either tau/eta functions or a matrix form")

    @property
    def is_lossy_form(self) -> bool:
        return self.kind != "custom" or self.tau is not None

    def check_time(self, t: float) -> None:
        if not (0.0 <= t <= self.t_max):
            raise DomainError(f"t={t} outside the evolution domain [0, {self.t_max}]")

    def matrices_at(self, t: float) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """(T, T_dot, N, N_dot) at time t for any kind of evolution."""
        self.check_time(t)
        if self.is_lossy_form:
            eye = np.eye(2)
            return self.tau(t) * eye, self.tau_dot(t) * eye, self.eta(t) * eye, self.eta_dot(t) * eye
        return tuple(np.asarray(m, dtype=float) for m in self.matrices(t))


def classical_noise(eta: Scalar, eta_dot: Scalar, t_max: float = math.inf, name: str = "") -> Evolution:
    return Evolution("classical_noise", eta=eta, eta_dot=eta_dot, t_max=t_max, name=name)


def lossy(tau: Scalar, tau_dot: Scalar, eta: Scalar, eta_dot: Scalar, t_max: float = math.inf,
          name: str = "") -> Evolution:
    return Evolution("lossy", tau=tau, tau_dot=tau_dot, eta=eta, eta_dot=eta_dot, t_max=t_max, name=name)


def channel_at(ev: Evolution, t: float) -> GaussianChannel:
    """Single-mode dynamical map at time t."""
    T, _, N, _ = ev.matrices_at(t)
    return GaussianChannel(T, N)


def noise_profile_rational() -> Evolution:
    """eta(t) = t^2 / (t^2 - 2t + 2): rises to 2 at t=2, then relaxes to 1."""

    def eta(t):
        return t * t / (t * t - 2 * t + 2)

    def eta_dot(t):
        den = t * t - 2 * t + 2
        return 2 * t * (2 - t) / (den * den)

    return classical_noise(eta, eta_dot, name="rational")


def noise_profile_rational_scaled() -> Evolution:
    """Twice the rational profile, so the EB level eta=2 is crossed at t=1."""
    base = noise_profile_rational()
    return classical_noise(lambda t: 2 * base.eta(t), lambda t: 2 * base.eta_dot(t), name="rational_scaled")


def noise_profile_oscillating(eta0: float) -> Evolution:
    """eta(t) = eta0 (1 - cos 2 pi t) / 2."""
    if not (math.isfinite(eta0) and eta0 >= 0):
        raise DomainError(f"eta0 must be finite and non-negative, got {eta0!r}")
    return classical_noise(
        lambda t: eta0 * (1 - math.cos(2 * math.pi * t)) / 2,
        lambda t: eta0 * math.pi * math.sin(2 * math.pi * t),
        name=f"oscillating(eta0={eta0:g})",
    )


@dataclass(frozen=True)
class NmVerdict:
    """CP-divisibility verdict at a single time.

    For lossy-form evolutions ``lambda_plus``/``lambda_minus`` are the two
    eigenvalues ``eta_dot - 2 (eta +/- 1) tau_dot / tau``; for custom ones
    they are the largest and smallest eigenvalue of the general criterion
    matrix.
    """

    t: float
    lambda_plus: float
    lambda_minus: float
    markovian_at_t: bool


def cp_divisibility_matrix(T, T_dot, N, N_dot) -> np.ndarray:
    """Hermitian matrix ``N_dot - (T_dot T^-1 (i Omega + N) + (i Omega + N) T^-T T_dot^T)``.

    The evolution is infinitesimally CP-divisible at t iff it is PSD.
    """
    T = np.asarray(T, dtype=float)
    omega = symplectic_form(T.shape[0] // 2)
    gen = np.linalg.solve(T.T, np.asarray(T_dot, dtype=float).T).T  # T_dot T^-1
    x = 1j * omega + np.asarray(N, dtype=float)
    m = np.asarray(N_dot, dtype=float) - (gen @ x + x @ gen.T)
    return 0.5 * (m + m.conj().T)


def _lossy_values(ev: Evolution, t: float) -> tuple[float, float, float, float]:
    ev.check_time(t)
    tau = ev.tau(t)
    if not tau > 0:
        raise DegenerateEvolutionError(f"tau({t}) = {tau} is not positive")
    return tau, ev.tau_dot(t), ev.eta(t), ev.eta_dot(t)


def is_markovian_at(ev: Evolution, t: float, cp_tol: float = CP_TOL,
                    method: Literal["auto", "general"] = "auto") -> NmVerdict:
    """Infinitesimal CP-divisibility test at time t.

    Lossy-form evolutions use the closed-form eigenvalues unless
    ``method="general"`` forces the matrix criterion.
    """
    if ev.is_lossy_form and method == "auto":
        tau, tau_dot, eta, eta_dot = _lossy_values(ev, t)
        rate = tau_dot / tau
        lp = eta_dot - 2 * (eta + 1) * rate
        lm = eta_dot - 2 * (eta - 1) * rate
        return NmVerdict(t, float(lp), float(lm), bool(min(lp, lm) >= -cp_tol))
    T, T_dot, N, N_dot = ev.matrices_at(t)
    if ev.is_lossy_form and not T[0, 0] > 0:
        raise DegenerateEvolutionError(f"tau({t}) = {T[0, 0]} is not positive")
    ev_ = np.linalg.eigvalsh(cp_divisibility_matrix(T, T_dot, N, N_dot))
    if ev.is_lossy_form:
        # eigenvalues of the lossy matrix are lambda_- <= lambda_+ when tau_dot <= 0 and swapped otherwise
        tau, tau_dot = T[0, 0], T_dot[0, 0]
        lp, lm = (ev_[0], ev_[-1]) if tau_dot / tau > 0 else (ev_[-1], ev_[0])
    else:
        lp, lm = ev_[-1], ev_[0]
    return NmVerdict(t, float(lp), float(lm), bool(ev_[0] >= -cp_tol))


def _require_lossy(ev: Evolution) -> None:
    if not ev.is_lossy_form:
        raise UnsupportedFormError("backflow predicates need a lossy-form evolution (tau I, eta I)")


def steering_backflow_predicate(ev: Evolution, t: float, setup: Literal["two_mode", "three_mode"]) -> bool:
    """Sign condition for an increase of A->B steerability at time t.

    Three-mode GHZ/W: ``eta_dot - 2 eta tau_dot/tau < 0``. The two-mode
    squeezed state additionally needs the map not to be incompatibility
    breaking, ``eta < tau^2``.
    """
    _require_lossy(ev)
    tau, tau_dot, eta, eta_dot = _lossy_values(ev, t)
    decreasing = bool(eta_dot - 2 * eta * tau_dot / tau < 0)
    if setup == "three_mode":
        return decreasing
    if setup == "two_mode":
        return decreasing and bool(eta < tau * tau)
    raise ValueError(f"setup must be 'two_mode' or 'three_mode', got {setup!r}")


def entanglement_backflow_predicate_2mode(ev: Evolution, t: float) -> bool:
    """Small-squeezing sign condition for a rise of two-mode PPT entanglement."""
    _require_lossy(ev)
    tau, tau_dot, eta, eta_dot = _lossy_values(ev, t)
    return bool(eta - tau * tau - 1 < 0 and eta_dot - 2 * (eta - 1) * tau_dot / tau < 0)


def sample_intervals(times: Sequence[float], mask: Sequence[bool]) -> list[tuple[float, float]]:
    """Turn a per-sample flag into intervals anchored at sample points.

    A run of flagged samples ``a..b-1`` becomes ``(t_a, t_b)``, or
    ``(t_a, t_last)`` when the run reaches the end of the grid.
    """
    t = np.asarray(times, dtype=float)
    last = len(t) - 1
    return [(float(t[a]), float(t[min(b, last)])) for a, b in mask_runs(mask)]


def nm_mask(ev: Evolution, times: Sequence[float], cp_tol: float = CP_TOL) -> np.ndarray:
    return np.array([not is_markovian_at(ev, float(t), cp_tol).markovian_at_t for t in times])


def nm_intervals(ev: Evolution, times: Sequence[float], cp_tol: float = CP_TOL) -> list[tuple[float, float]]:
    return sample_intervals(times, nm_mask(ev, times, cp_tol))


def central_difference(f: Scalar, t: float) -> float:
    """Central finite difference with step 1e-6 * max(1, t); for tests only."""
    h = 1e-6 * max(1.0, abs(t))
    return (f(t + h) - f(t - h)) / (2 * h)
