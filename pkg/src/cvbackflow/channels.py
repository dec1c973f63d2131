"""Gaussian channels acting on covariance matrices as sigma -> T sigma T^T + N."""

from __future__ import annotations

import numpy as np

from .errors import DimensionError, DomainError, InvariantError, NonInvertibleEvolutionError, UnsupportedChannelError
from .symplectic import INV_TOL, SYM_TOL, Bipartition, CovarianceMatrix, symplectic_form, two_mode_squeezed
from .witnesses import entanglement_ppt

CPTP_TOL = 1e-9
GIB_TOL = 1e-9
EB_TOL = 1e-8
R_PROBE = 10.0


class GaussianChannel:
    """The pair (T, N) of real 2n x 2n matrices; N must be symmetric."""

    __slots__ = ("_t", "_n")

    def __init__(self, T, N):
        t = np.array(T, dtype=float)
        n = np.array(N, dtype=float)
        if t.ndim != 2 or t.shape[0] != t.shape[1] or t.shape[0] % 2 or t.shape != n.shape:
            raise DimensionError(f"T and N must both be 2n x 2n, got {t.shape} and {n.shape}")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(n))):
            raise InvariantError("channel matrices have non-finite entries")
        if np.max(np.abs(n - n.T)) > SYM_TOL * max(1.0, np.max(np.abs(n))):
            raise InvariantError("N must be symmetric")
        n = 0.5 * (n + n.T)
        t.setflags(write=False)
        n.setflags(write=False)
        self._t, self._n = t, n

    @classmethod
    def identity(cls, modes: int = 1) -> "GaussianChannel":
        return cls(np.eye(2 * modes), np.zeros((2 * modes, 2 * modes)))

    @classmethod
    def isotropic(cls, tau: float, eta: float) -> "GaussianChannel":
        """Single-mode lossy-form channel (tau*I, eta*I)."""
        return cls(tau * np.eye(2), eta * np.eye(2))

    @property
    def T(self) -> np.ndarray:
        return self._t

    @property
    def N(self) -> np.ndarray:
        return self._n

    @property
    def modes(self) -> int:
        return self._t.shape[0] // 2

    def __repr__(self):
        return f"GaussianChannel(modes={self.modes})"


def apply(ch: GaussianChannel, cov: CovarianceMatrix) -> CovarianceMatrix:
    if ch.modes != cov.modes:
        raise DimensionError(f"{ch.modes}-mode channel applied to {cov.modes}-mode state")
    out = ch.T @ cov.data @ ch.T.T + ch.N
    return CovarianceMatrix(0.5 * (out + out.T))


def compose(later: GaussianChannel, earlier: GaussianChannel) -> GaussianChannel:
    """Channel equal to applying ``earlier`` first and then ``later``."""
    if later.modes != earlier.modes:
        raise DimensionError(f"cannot compose {later.modes}-mode and {earlier.modes}-mode channels")
    t = later.T @ earlier.T
    n = later.T @ earlier.N @ later.T.T + later.N
    return GaussianChannel(t, 0.5 * (n + n.T))


def is_cptp(ch: GaussianChannel, tol: float = CPTP_TOL) -> bool:
    """True iff ``N - i T Omega T^T + i Omega >= 0`` up to ``tol``."""
    omega = symplectic_form(ch.modes)
    m = ch.N - 1j * ch.T @ omega @ ch.T.T + 1j * omega
    return bool(np.linalg.eigvalsh(m)[0] >= -tol)


def is_cptp_single_mode(ch: GaussianChannel, tol: float = CPTP_TOL) -> bool:
    """Single-mode form of the CPTP test: N >= 0 and det N >= (det T - 1)^2."""
    if ch.modes != 1:
        raise UnsupportedChannelError("the two-condition CPTP test applies to single-mode channels only")
    psd = np.linalg.eigvalsh(ch.N)[0] >= -tol
    return bool(psd and np.linalg.det(ch.N) >= (np.linalg.det(ch.T) - 1.0) ** 2 - tol)


def embed_local(ch: GaussianChannel, total_modes: int, target: int = 1) -> GaussianChannel:
    """Embed a single-mode channel on mode ``target`` (1-based) of ``total_modes`` modes.

    Every other mode gets the identity channel.
    """
    if ch.modes != 1:
        raise UnsupportedChannelError("only single-mode channels can be embedded")
    if not 1 <= target <= total_modes:
        raise IndexError(f"target mode {target} outside 1..{total_modes}")
    t = np.eye(2 * total_modes)
    n = np.zeros((2 * total_modes, 2 * total_modes))
    k = 2 * (target - 1)
    t[k:k + 2, k:k + 2] = ch.T
    n[k:k + 2, k:k + 2] = ch.N
    return GaussianChannel(t, n)


def intermediate_map(later: GaussianChannel, earlier: GaussianChannel) -> GaussianChannel:
    """Bridge map (T_ts, N_ts) with ``compose(bridge, earlier) == later``."""
    if later.modes != earlier.modes:
        raise DimensionError(f"mode mismatch: {later.modes} vs {earlier.modes}")
    svals = np.linalg.svd(earlier.T, compute_uv=False)
    if svals[-1] <= INV_TOL * max(1.0, svals[0]):
        raise NonInvertibleEvolutionError("earlier dynamical map is not invertible", float(svals[-1]))
    t = np.linalg.solve(earlier.T.T, later.T.T).T
    n = later.N - t @ earlier.N @ t.T
    return GaussianChannel(t, 0.5 * (n + n.T))


def is_gib(ch: GaussianChannel, tol: float = GIB_TOL) -> bool:
    """Gaussian incompatibility breaking: ``N - i T Omega T^T >= 0``."""
    omega = symplectic_form(ch.modes)
    return bool(np.linalg.eigvalsh(ch.N - 1j * ch.T @ omega @ ch.T.T)[0] >= -tol)


def _untouched_mode(ch: GaussianChannel) -> bool:
    # A mode whose block of T is the identity, N is zero, and which is decoupled from the rest.
    t, n = ch.T, ch.N
    for m in range(ch.modes):
        sl = slice(2 * m, 2 * m + 2)
        rest = np.ones(2 * ch.modes, dtype=bool)
        rest[sl] = False
        if (np.array_equal(t[sl, sl], np.eye(2)) and not n[sl, :].any()
                and not t[sl, rest].any() and not t[rest, sl].any()):
            return True
    return False


def is_eb(ch: GaussianChannel, *, proxy: bool = False, r_probe: float = R_PROBE, eb_tol: float = EB_TOL) -> bool:
    """Entanglement-breaking test.

    Isotropic single-mode channels (tau*I, eta*I) use the closed form
    ``eta >= tau^2 + 1``. Other single-mode channels need ``proxy=True``:
    the channel is applied to a two-mode squeezed probe with squeezing
    ``r_probe`` and declared EB when the resulting PPT entanglement is at
    most ``eb_tol`` (or the round-off floor of the probe, if larger).
    A multimode channel that leaves one mode untouched is never EB; any
    other multimode channel is rejected.
    """
    if ch.modes != 1:
        if _untouched_mode(ch):
            return False
        raise UnsupportedChannelError("EB test is only available for single-mode channels")
    t, n = ch.T, ch.N
    tau, eta = t[0, 0], n[0, 0]
    isotropic = np.allclose(t, tau * np.eye(2), rtol=0, atol=1e-14) and np.allclose(n, eta * np.eye(2), rtol=0, atol=1e-14)
    if isotropic and not proxy:
        return bool(eta >= tau * tau + 1.0)
    if not proxy:
        raise UnsupportedChannelError("non-isotropic channel: pass proxy=True for the PPT probe test")
    if r_probe <= 0:
        raise DomainError(f"probe squeezing must be positive, got {r_probe}")
    out = apply(embed_local(ch, 2, 1), two_mode_squeezed(r_probe))
    # entries grow like cosh(2 r_probe), so round-off in the eigenvalues scales with them
    floor = 64 * np.finfo(float).eps * float(np.max(np.abs(out.data)))
    return bool(entanglement_ppt(out, Bipartition(1, 1)) <= max(eb_tol, floor))
