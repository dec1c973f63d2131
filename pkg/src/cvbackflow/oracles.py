"""Closed-form symplectic eigenvalues and steerability asymptotics.

Both setups put isotropic noise on the first mode only. In the two-mode
setup Alice holds mode 1 and Bob mode 2; in the three-mode GHZ/W setup
Alice holds modes 1 and 2 and Bob mode 3. ``eta_eff`` is the noise of a
classical-noise channel, or ``eta / tau**2`` for a lossy channel (tau I, eta I),
since rescaling Alice's first mode by 1/tau leaves the A->B quantities unchanged.
"""

from __future__ import annotations

import math

from .errors import DomainError


def _check(r: float, eta_eff: float, r_min: float = 0.0) -> None:
    if not (math.isfinite(r) and r > r_min):
        raise DomainError(f"squeezing must be finite and > {r_min}, got {r!r}")
    if not (math.isfinite(eta_eff) and eta_eff >= 0):
        raise DomainError(f"effective noise must be finite and non-negative, got {eta_eff!r}")


def effective_noise(tau: float, eta: float) -> float:
    """Map a lossy channel (tau I, eta I) to the equivalent classical noise level."""
    if tau == 0:
        raise DomainError("tau must be non-zero")
    return eta / (tau * tau)


def nu_minus_2mode(r: float, eta_eff: float) -> float:
    """Smallest symplectic eigenvalue of M_B for the noisy two-mode squeezed state."""
    _check(r, eta_eff)
    c = math.cosh(2 * r)
    return (eta_eff * c + 1) / (eta_eff + c)


def nu_minus_2mode_deta(r: float, eta_eff: float) -> float:
    _check(r, eta_eff)
    c = math.cosh(2 * r)
    return (c * c - 1) / (eta_eff + c) ** 2


def _three_mode_parts(r: float, eta: float) -> tuple[float, float, float, float]:
    e = math.exp(2 * r)
    num = e * ((e * e + 2) * eta + 3 * e) * (e * (2 * e * eta + 3) + eta)
    d1 = (e * e + 2) * e * eta + 2 * e * e + 1
    d2 = e * (e * e + 2 * e * eta + 2) + eta
    return e, num, d1, d2


def nu_minus_3mode(r: float, eta_eff: float) -> float:
    """Symplectic eigenvalue of M_B for the GHZ/W state with noise on mode 1."""
    _check(r, eta_eff)
    _, num, d1, d2 = _three_mode_parts(r, eta_eff)
    return math.sqrt(num / (d1 * d2))


def nu_minus_3mode_gap(r: float, eta_eff: float) -> float:
    """Denominator minus numerator under the square root; positive for r > 0."""
    _check(r, eta_eff)
    e = math.exp(2 * r)
    return (e * e - 1) ** 2 * (eta_eff + e * (2 + e * eta_eff))


def nu_minus_3mode_deta(r: float, eta_eff: float) -> float:
    """Analytic derivative of :func:`nu_minus_3mode` with respect to the noise."""
    _check(r, eta_eff)
    e, num, d1, d2 = _three_mode_parts(r, eta_eff)
    e2, e4, e6 = e * e, e ** 4, e ** 6
    eta = eta_eff
    top = e * (e2 - 1) ** 2 * (4 * e * (2 * e4 + 5 * e2 + 2) * eta + 9 * (e4 + e2)
                               + (2 * e6 + 7 * e4 + 7 * e2 + 2) * eta * eta)
    return top / (2 * d1 * d1 * math.sqrt(num / (d1 * d2)) * d2 * d2)


def steerability_from_nu(nu: float) -> float:
    """Single-mode steered party: ``max(0, -ln nu)``."""
    return max(0.0, -math.log(nu))


def steerability_2mode(r: float, eta_eff: float) -> float:
    return steerability_from_nu(nu_minus_2mode(r, eta_eff))


def steerability_3mode(r: float, eta_eff: float) -> float:
    return steerability_from_nu(nu_minus_3mode(r, eta_eff))


def nu_minus_2mode_small_r(r: float, eta_eff: float) -> float:
    """Second-order expansion around r = 0."""
    _check(r, eta_eff)
    return 1 - 2 * (1 - eta_eff) / (1 + eta_eff) * r * r


def nu_minus_3mode_small_r(r: float, eta_eff: float) -> float:
    _check(r, eta_eff)
    return 1 - 16 * r * r / (9 * (eta_eff + 1))


def steerability_large_r_3mode(r: float, eta_eff: float) -> float:
    """Leading large-squeezing form ``ln(e^{2r} / (2 eta)) / 2``; remainder O(e^{-2r})."""
    _check(r, eta_eff)
    if eta_eff == 0:
        raise DomainError("the large-r form diverges at zero noise")
    return 0.5 * math.log(math.exp(2 * r) / (2 * eta_eff))


def steerability_large_r_2mode(r: float, eta_eff: float) -> float:
    """``max(0, ln(1/eta))``, the r -> infinity limit of the two-mode steerability."""
    _check(r, eta_eff)
    if eta_eff == 0:
        raise DomainError("the large-r form diverges at zero noise")
    return max(0.0, -math.log(eta_eff))
