"""Quantum Brownian motion of one oscillator mode coupled to a thermal bath.

Units: hbar = k_B = 1, frequencies and temperature share one unit and time
is measured in its inverse.

The damping and diffusion coefficients are

    gamma(t) = alpha^2 int_0^t ds int_0^inf dw J(w) sin(w s) sin(w0 s)
    Delta(t) = alpha^2 int_0^t ds int_0^inf dw J(w) coth(w / 2T) cos(w s) cos(w0 s)

The s-integral is elementary, which leaves for each t one oscillatory
w-integral against the kernels (sin((w - w0) t)/(w - w0) -/+ sin((w + w0) t)/(w + w0)) / 2.
It is evaluated adaptively on [0, w_max]: plain Gauss-Kronrod on [0, a] around
the resonance and Fourier-weighted quadrature (QAWO) on [a, w_max].
"""

from __future__ import annotations

import functools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.integrate import quad, solve_ivp
from scipy.interpolate import CubicSpline

from .errors import AccuracyError, ConsistencyError, DomainError, IntegrationError, InvariantError
from .evolutions import Evolution, lossy
from .symplectic import CovarianceMatrix

_GL_X, _GL_W = np.polynomial.legendre.leggauss(8)


@dataclass(frozen=True)
class QbmParams:
    alpha: float
    omega0: float = 7.0
    omega_c: float = 1.0
    s: float = 1.0
    temperature: float = 100.0
    quad_rel_tol: float = 1e-8
    ode_rel_tol: float = 1e-9
    omega_max_factor: float = 50.0
    cross_tol: float = 1e-6

    def __post_init__(self):
        bad = [name for name in ("alpha", "omega0", "omega_c", "s", "temperature", "quad_rel_tol",
                                 "ode_rel_tol", "omega_max_factor", "cross_tol")
               if not (math.isfinite(getattr(self, name)) and getattr(self, name) > 0)]
        if bad:
            raise InvariantError(f"QBM parameters must be positive and finite: {', '.join(bad)}")

    @property
    def omega_max(self) -> float:
        """Upper cut of the frequency integrals."""
        return self.omega_max_factor * max(self.omega_c, self.omega0, self.temperature)

    @property
    def regime(self) -> str:
        return "sub-Ohmic" if self.s < 1 else "Ohmic" if self.s == 1 else "super-Ohmic"


def spectral_density(omega, p: QbmParams):
    """Lorentz-Drude spectral density ``(2 w^s / pi) w_c^(3-s) / (w_c^2 + w^2)``."""
    w = np.asarray(omega, dtype=float)
    if np.any(w < 0):
        raise DomainError("spectral density is defined for omega >= 0")
    out = 2.0 * w ** p.s / math.pi * p.omega_c ** (3 - p.s) / (p.omega_c ** 2 + w * w)
    return float(out) if out.ndim == 0 else out


def _damping_weight(w: float, s: float, wc: float) -> float:
    return 2.0 * w ** s / math.pi * wc ** (3 - s) / (wc * wc + w * w)


def _diffusion_weight(w: float, s: float, wc: float, temp: float) -> float:
    """J(w) coth(w / 2T), with the small-w expansion of coth near the origin."""
    x = w / (2.0 * temp)
    pref = 2.0 / math.pi * wc ** (3 - s) / (wc * wc + w * w)
    if x < 1e-4:
        return pref * (2.0 * temp * w ** (s - 1) + w ** (s + 1) / (6.0 * temp))
    return pref * w ** s / math.tanh(x)


def _sinc_kernel(x: float, t: float) -> float:
    # sin(x t) / x, finite at x = 0
    return t * float(np.sinc(x * t / math.pi))


def _checked_quad(func, a, b, rel_tol, what, **kw) -> tuple[float, float]:
    res = quad(func, a, b, epsrel=rel_tol, epsabs=1e-14, limit=1000, full_output=1, **kw)
    val, err = res[0], res[1]
    if len(res) > 3 and err > max(100 * rel_tol * abs(val), 1e-11):
        raise AccuracyError(f"quadrature for {what} did not converge", val, err)
    return val, err


def _unit_coefficients_at(t: float, omega0: float, omega_c: float, s: float, temp: float,
                          rel_tol: float, omega_max: float) -> tuple[float, float, float, float]:
    """gamma/alpha^2, Delta/alpha^2 and their error bounds at a single time."""
    if t == 0.0:
        return 0.0, 0.0, 0.0, 0.0
    split = min(omega_max, max(2.0 * omega0, omega0 + 5.0 * omega_c))
    out = []
    for weight, sign, what in ((lambda w: _damping_weight(w, s, omega_c), -1.0, "gamma"),
                               (lambda w: _diffusion_weight(w, s, omega_c, temp), 1.0, "Delta")):
        near, e_near = _checked_quad(
            lambda w: weight(w) * 0.5 * (_sinc_kernel(w - omega0, t) + sign * _sinc_kernel(w + omega0, t)),
            0.0, split, rel_tol, what, points=[omega0] if omega0 < split else None)
        total, err = near, e_near
        if omega_max > split:
            # sin((w -+ w0) t) expanded in sin(w t), cos(w t) so the Fourier weight is a single frequency
            fs, e_s = _checked_quad(lambda w: weight(w) * (1 / (w - omega0) + sign / (w + omega0)),
                                    split, omega_max, rel_tol, what, weight="sin", wvar=t)
            fc, e_c = _checked_quad(lambda w: weight(w) * (-1 / (w - omega0) + sign / (w + omega0)),
                                    split, omega_max, rel_tol, what, weight="cos", wvar=t)
            total += 0.5 * (math.cos(omega0 * t) * fs + math.sin(omega0 * t) * fc)
            err += 0.5 * (e_s + e_c)
        out.append((total, err))
    (g, ge), (d, de) = out
    return g, d, ge, de


_UNIT_CACHE: dict[tuple, np.ndarray] = {}
_UNIT_CACHE_SIZE = 32


def _unit_coefficients(grid: tuple[float, ...], omega0, omega_c, s, temp, rel_tol, omega_max,
                       threads: int = 1) -> np.ndarray:
    # keyed on everything but the thread count: results do not depend on it
    key = (grid, omega0, omega_c, s, temp, rel_tol, omega_max)
    if key in _UNIT_CACHE:
        return _UNIT_CACHE[key]
    worker = functools.partial(_unit_coefficients_at, omega0=omega0, omega_c=omega_c, s=s, temp=temp,
                               rel_tol=rel_tol, omega_max=omega_max)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(worker, grid))
    else:
        rows = [worker(t) for t in grid]
    arr = np.array(rows, dtype=float)
    arr.setflags(write=False)
    if len(_UNIT_CACHE) >= _UNIT_CACHE_SIZE:
        _UNIT_CACHE.pop(next(iter(_UNIT_CACHE)))
    _UNIT_CACHE[key] = arr
    return arr


def _check_grid(grid: Sequence[float]) -> np.ndarray:
    g = np.asarray(grid, dtype=float)
    if g.ndim != 1 or g.size < 2 or g[0] != 0.0 or np.any(np.diff(g) <= 0):
        raise DomainError("the time grid must start at 0 and be strictly increasing with >= 2 samples")
    return g


@dataclass(frozen=True, eq=False)
class QbmCoefficients:
    """Damping/diffusion samples on a grid together with the derived tau, eta.

    gamma and Delta are interpolated with cubic splines between samples;
    tau follows exactly from the spline antiderivative and eta from an
    8-point Gauss-Legendre rule per grid cell.
    """

    grid: np.ndarray
    gamma: np.ndarray
    delta: np.ndarray
    gamma_err: np.ndarray
    delta_err: np.ndarray
    tau: np.ndarray = field(init=False)
    eta: np.ndarray = field(init=False)

    def __post_init__(self):
        for name in ("grid", "gamma", "delta", "gamma_err", "delta_err"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if not (np.all(np.isfinite(self.gamma)) and np.all(np.isfinite(self.delta))):
            raise InvariantError("non-finite QBM coefficients")
        g_spl = CubicSpline(self.grid, self.gamma)
        d_spl = CubicSpline(self.grid, self.delta)
        object.__setattr__(self, "_gamma_spline", g_spl)
        object.__setattr__(self, "_delta_spline", d_spl)
        object.__setattr__(self, "_gamma_integral", g_spl.antiderivative())
        # E(t) = int_0^t Delta / tau^2 accumulated cell by cell
        cells = [0.0]
        for a, b in zip(self.grid[:-1], self.grid[1:]):
            cells.append(self._cell_integral(a, b))
        cum = np.cumsum(cells)
        object.__setattr__(self, "_cum", cum)
        tau = np.exp(-0.5 * self._gamma_integral(self.grid))
        tau[0] = 1.0
        eta = tau ** 2 * cum
        for arr in (tau, eta):
            arr.setflags(write=False)
        object.__setattr__(self, "tau", tau)
        object.__setattr__(self, "eta", eta)

    def _cell_integral(self, a: float, b: float) -> float:
        x = 0.5 * (b - a) * _GL_X + 0.5 * (a + b)
        return 0.5 * (b - a) * float(np.sum(_GL_W * self._delta_spline(x) * np.exp(self._gamma_integral(x))))

    def _check(self, t: float) -> None:
        if not (self.grid[0] <= t <= self.grid[-1]):
            raise DomainError(f"t={t} outside the coefficient grid [0, {self.grid[-1]}]")

    def gamma_at(self, t: float) -> float:
        self._check(t)
        return float(self._gamma_spline(t))

    def delta_at(self, t: float) -> float:
        self._check(t)
        return float(self._delta_spline(t))

    def tau_at(self, t: float) -> float:
        self._check(t)
        return math.exp(-0.5 * float(self._gamma_integral(t)))

    def eta_at(self, t: float) -> float:
        self._check(t)
        k = int(np.searchsorted(self.grid, t, side="right")) - 1
        k = min(k, len(self.grid) - 1)
        extra = self._cell_integral(self.grid[k], t) if t > self.grid[k] else 0.0
        return self.tau_at(t) ** 2 * (float(self._cum[k]) + extra)


def coefficients(p: QbmParams, grid: Sequence[float], threads: int = 1) -> QbmCoefficients:
    """gamma(t), Delta(t), tau(t), eta(t) sampled on ``grid`` (which must start at 0).

    Both coefficients scale as alpha^2, so the frequency integrals are
    computed once per bath and grid and cached.
    """
    g = _check_grid(grid)
    unit = _unit_coefficients(tuple(g.tolist()), p.omega0, p.omega_c, p.s, p.temperature,
                              p.quad_rel_tol, p.omega_max, max(1, int(threads)))
    a2 = p.alpha ** 2
    return QbmCoefficients(g, a2 * unit[:, 0], a2 * unit[:, 1], a2 * unit[:, 2], a2 * unit[:, 3])


def as_evolution(coeffs: QbmCoefficients) -> Evolution:
    """Lossy-form view with tau_dot = -gamma tau / 2 and eta_dot = Delta - gamma eta."""

    def tau_dot(t):
        return -0.5 * coeffs.gamma_at(t) * coeffs.tau_at(t)

    def eta_dot(t):
        return coeffs.delta_at(t) - coeffs.gamma_at(t) * coeffs.eta_at(t)

    return lossy(coeffs.tau_at, tau_dot, coeffs.eta_at, eta_dot, t_max=float(coeffs.grid[-1]), name="qbm")


def integrated_covariance(sigma0: CovarianceMatrix, coeffs: QbmCoefficients, target_mode: int = 1) -> list[CovarianceMatrix]:
    """Closed lossy-channel form ``(tau I (+) I) sigma0 (tau I (+) I)^T + eta I (+) 0`` on the grid."""
    k = _target_slice(sigma0, target_mode)
    out = []
    for tau, eta in zip(coeffs.tau, coeffs.eta):
        tm = np.eye(sigma0.data.shape[0])
        tm[k, k] *= tau
        s = tm @ sigma0.data @ tm.T
        s[k, k] += eta * np.eye(2)
        out.append(CovarianceMatrix(0.5 * (s + s.T)))
    return out


def _target_slice(sigma0: CovarianceMatrix, target_mode: int) -> slice:
    if not 1 <= target_mode <= sigma0.modes:
        raise IndexError(f"target mode {target_mode} outside 1..{sigma0.modes}")
    return slice(2 * (target_mode - 1), 2 * target_mode)


def evolve_covariance(sigma0: CovarianceMatrix, p: QbmParams, grid: Sequence[float], target_mode: int = 1,
                      coeffs: QbmCoefficients | None = None, threads: int = 1) -> list[CovarianceMatrix]:
    """Integrate ``d sigma/dt = A sigma + sigma A^T + D`` with A = -gamma/2 and D = Delta on the target mode.

    The result is cross-checked sample by sample against
    :func:`integrated_covariance`; a discrepancy above ``p.cross_tol`` raises
    :class:`ConsistencyError`.
    """
    g = _check_grid(grid)
    if coeffs is None:
        coeffs = coefficients(p, g, threads)
    elif not np.array_equal(coeffs.grid, g):
        raise DomainError("coefficients were computed on a different grid")
    k = _target_slice(sigma0, target_mode)
    dim = sigma0.data.shape[0]
    g_spl, d_spl = coeffs._gamma_spline, coeffs._delta_spline

    def rhs(t, y):
        s = y.reshape(dim, dim)
        ds = np.zeros_like(s)
        half = -0.5 * float(g_spl(t))
        ds[k, :] += half * s[k, :]
        ds[:, k] += half * s[:, k]
        ds[k, k] += float(d_spl(t)) * np.eye(2)
        return ds.ravel()

    sol = solve_ivp(rhs, (g[0], g[-1]), sigma0.data.ravel(), method="DOP853", t_eval=g,
                    rtol=p.ode_rel_tol, atol=p.ode_rel_tol * 1e-3, max_step=float(np.min(np.diff(g))))
    if not sol.success:
        raise IntegrationError(f"ODE integration failed: {sol.message}")
    states = [CovarianceMatrix(0.5 * (m + m.T)) for m in (col.reshape(dim, dim) for col in sol.y.T)]
    reference = integrated_covariance(sigma0, coeffs, target_mode)
    worst = max(float(np.max(np.abs(a.data - b.data))) for a, b in zip(states, reference))
    if worst > p.cross_tol:
        raise ConsistencyError(f"ODE and integrated lossy form differ by {worst:.3e} > {p.cross_tol:.1e}")
    return states
