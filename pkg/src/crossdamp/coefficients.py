"""Coarse-grained damping and shift coefficients.

All rates are angular frequencies in rad/s; dipoles enter in e*a0 and are
converted to SI here.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import constants as sc
from scipy import integrate, special

from .hydrogen import DIPOLE_UNIT, Transition, spherical_to_cartesian

__all__ = [
    "CoarseGrainConfig",
    "GammaMatrix",
    "fc",
    "thermal_n",
    "gamma_cg",
    "gamma_ficek",
    "gamma_matrix",
    "cross_shift",
    "principal_value",
    "mean_field_term",
    "dipole_overlap",
    "RATE_PREFACTOR",
]

# omega^3 |d|^2 / (3 pi eps0 hbar c^3), with d in e*a0
RATE_PREFACTOR = DIPOLE_UNIT**2 / (3 * math.pi * sc.epsilon_0 * sc.hbar * sc.c**3)
# d.d / (6 pi^2 eps0 hbar c^3) in front of the shift integrals
SHIFT_PREFACTOR = DIPOLE_UNIT**2 / (6 * math.pi**2 * sc.epsilon_0 * sc.hbar * sc.c**3)
ELECTRON_CUTOFF = sc.m_e * sc.c**2 / sc.hbar


@dataclass(frozen=True)
class CoarseGrainConfig:
    tau_c: float = 1e-12                  # s
    temperature: float = 300.0            # K
    omega_cut: float = ELECTRON_CUTOFF    # rad/s
    atomic_time: Optional[float] = None   # tau_A; when given, tau_c << tau_A is checked

    def __post_init__(self):
        if not (self.tau_c > 0 and math.isfinite(self.tau_c)):
            raise ValueError(f"tau_c must be positive, got {self.tau_c}")
        if self.temperature < 0:
            raise ValueError(f"temperature must be >= 0, got {self.temperature}")
        if not self.omega_cut > 0:
            raise ValueError(f"omega_cut must be positive, got {self.omega_cut}")
        if self.tau_c <= self.reservoir_time:
            warnings.warn(f"tau_c={self.tau_c:g} s is not long compared to the reservoir "
                          f"correlation time {self.reservoir_time:g} s", stacklevel=2)
        if self.atomic_time is not None and self.tau_c >= self.atomic_time:
            warnings.warn(f"tau_c={self.tau_c:g} s is not short compared to the atomic "
                          f"relaxation time {self.atomic_time:g} s", stacklevel=2)

    @property
    def reservoir_time(self) -> float:
        """Thermal correlation time hbar / (k_B T); zero at T = 0."""
        if self.temperature == 0:
            return 0.0
        return sc.hbar / (sc.k * self.temperature)


# --- kernel -------------------------------------------------------------------

_DAWSON_SPLIT = 50.0


def _dawson_integral(y: float) -> float:
    """int_0^y dawsn(v) dv for y >= 0."""
    if y <= _DAWSON_SPLIT:
        val, _ = integrate.quad(special.dawsn, 0.0, y, epsabs=0.0, epsrel=1e-13, limit=200)
        return val
    head, _ = integrate.quad(special.dawsn, 0.0, _DAWSON_SPLIT, epsabs=0.0, epsrel=1e-13, limit=200)
    # asymptotic dawsn(v) = 1/(2v) + 1/(4v^3) + 3/(8v^5) + 15/(16v^7) + 105/(32v^9) + ...
    def antiderivative(v):
        return 0.5 * math.log(v) - 1 / (8 * v**2) - 3 / (32 * v**4) - 5 / (32 * v**6) - 105 / (256 * v**8)
    return head + antiderivative(y) - antiderivative(_DAWSON_SPLIT)


@lru_cache(maxsize=4096)
def _fc_scaled(x: float) -> complex:
    if x == 0.0:
        return 1.0 + 0.0j
    ax = abs(x)
    if ax < 1e-4:
        re = 1 - ax * ax / 12 + ax**4 / 160
        im = ax / (2 * math.sqrt(math.pi)) * (1 - ax * ax / 12)
    else:
        re = math.sqrt(math.pi) * math.erf(ax / 2) / ax
        im = 4 / (math.sqrt(math.pi) * ax) * _dawson_integral(ax / 2)
    return complex(re, im if x > 0 else -im)


def fc(delta_omega: float, tau_c: float) -> complex:
    """Gaussian-averaged coarse-graining kernel at frequency mismatch ``delta_omega``.

    Average of ``(exp(i dw t) - 1) / (i dw t)`` over ``t >= 0`` with a
    half-Gaussian weight of width ``tau_c``.  Equals 1 at zero mismatch and
    decays to 0 as ``|dw| tau_c`` grows.
    """
    if not tau_c > 0:
        raise ValueError(f"tau_c must be positive, got {tau_c}")
    return _fc_scaled(float(delta_omega) * float(tau_c))


def thermal_n(omega: float, temperature: float) -> float:
    """Bose-Einstein occupation of a mode at angular frequency ``omega``."""
    if not omega > 0:
        raise ValueError(f"omega must be positive, got {omega}")
    if temperature == 0:
        return 0.0
    x = sc.hbar * omega / (sc.k * temperature)
    if x > 700:
        return math.exp(-x)          # expm1 would overflow; 1/(e^x - 1) = e^-x to double precision
    return 1.0 / math.expm1(x)


# --- damping --------------------------------------------------------------------

def dipole_overlap(t_i: Transition, t_j: Transition) -> complex:
    """``d_i^* . d_j`` in (e*a0)^2."""
    return complex(np.vdot(t_i.dipole, t_j.dipole))


def gamma_cg(t_i: Transition, t_j: Transition, cfg: CoarseGrainConfig, thermal: bool = False) -> complex:
    """Coarse-grained cross-damping rate between two decay channels (rad/s).

    Uses the mean transition frequency cubed and the kernel at the frequency
    mismatch.  With ``thermal=True`` the stimulated-emission factor
    ``1 + n`` at the mean frequency is included.
    """
    overlap = dipole_overlap(t_i, t_j)
    if overlap == 0:
        return 0j
    w_mean = 0.5 * (t_i.omega + t_j.omega)
    value = RATE_PREFACTOR * overlap * fc(t_i.omega - t_j.omega, cfg.tau_c) * w_mean**3
    if thermal:
        value *= 1 + thermal_n(w_mean, cfg.temperature)
    return value


def gamma_ficek(t_i: Transition, t_j: Transition) -> complex:
    """Asymmetric rate built from the second channel's frequency alone; for comparison only."""
    return RATE_PREFACTOR * dipole_overlap(t_i, t_j) * t_j.omega**3


@dataclass(frozen=True, eq=False)
class GammaMatrix:
    """Damping coefficients indexed by decay channel.

    ``values`` holds the bare rates, and ``occupation[i, j]`` the thermal
    occupation at the mean frequency of the pair.
    """

    values: np.ndarray
    occupation: np.ndarray
    labels: tuple
    tau_c: float = 0.0
    cross_damping: bool = True

    def __len__(self) -> int:
        return self.values.shape[0]

    @property
    def emission(self) -> np.ndarray:
        """Rates weighted by (1 + n)."""
        return self.values * (1 + self.occupation)

    @property
    def absorption(self) -> np.ndarray:
        """Thermal absorption rates n * gamma^*."""
        return self.occupation * self.values.conj()

    def hermiticity_error(self) -> float:
        if self.values.size == 0:
            return 0.0
        scale = np.max(np.abs(self.values))
        return float(np.max(np.abs(self.values - self.values.conj().T)) / scale)

    def eigenvalue_range(self) -> tuple[float, float]:
        if self.values.size == 0:
            return 0.0, 0.0
        herm = 0.5 * (self.values + self.values.conj().T)
        w = np.linalg.eigvalsh(herm)
        return float(w[0]), float(w[-1])

    def is_psd(self, tol: float = 1e-8) -> bool:
        lo, hi = self.eigenvalue_range()
        return lo >= -tol * hi

    def check(self, tol: float = 1e-8) -> None:
        """Raise ``ValueError`` if the matrix is not Hermitian or not PSD within ``tol``."""
        if self.hermiticity_error() > 1e-12:
            raise ValueError(f"gamma matrix not Hermitian (error {self.hermiticity_error():.3g})")
        lo, hi = self.eigenvalue_range()
        if lo < -tol * hi:
            raise ValueError(f"gamma matrix not positive semidefinite: min eigenvalue {lo:.6g}, "
                             f"max {hi:.6g}")


def _pair_matrices(transitions: Sequence[Transition], metric: Optional[np.ndarray], tau_c: float):
    cart = np.array([spherical_to_cartesian(t.dipole) for t in transitions]).reshape(-1, 3)
    if metric is None:
        overlap = cart.conj() @ cart.T
    else:
        overlap = cart.conj() @ metric @ cart.T
    omega = np.array([t.omega for t in transitions])
    w_mean = 0.5 * (omega[:, None] + omega[None, :])
    diff = omega[:, None] - omega[None, :]
    kernel = np.ones_like(overlap)
    nz = np.nonzero(overlap)
    kernel[nz] = [fc(d, tau_c) for d in diff[nz]]
    return overlap, kernel, w_mean


def gamma_matrix(transitions: Sequence[Transition], cfg: CoarseGrainConfig,
                 cross_damping: bool = True, metric: Optional[np.ndarray] = None) -> GammaMatrix:
    """Full damping matrix over ``transitions``.

    ``metric`` is an optional 3x3 Cartesian weight inserted between the two
    dipoles (a detection matrix); the identity gives the 4 pi rates.
    With ``cross_damping=False`` every off-diagonal entry is zeroed.
    """
    overlap, kernel, w_mean = _pair_matrices(transitions, metric, cfg.tau_c)
    values = RATE_PREFACTOR * overlap * kernel * w_mean**3
    values[overlap == 0] = 0
    if not cross_damping:
        values = np.diag(np.diag(values))
    occ = np.vectorize(lambda w: thermal_n(w, cfg.temperature), otypes=[float])(w_mean)
    labels = tuple(t.label for t in transitions)
    return GammaMatrix(values, occ, labels, cfg.tau_c, cross_damping)


# --- shifts ---------------------------------------------------------------------

def principal_value(f: Callable[[float], float], pole: float, lower: float, upper: float,
                    eps: Optional[float] = None, levels: int = 4) -> float:
    """Cauchy principal value of ``int f(w) / (w - pole) dw`` over ``[lower, upper]``.

    The pole is excised symmetrically with half-width ``eps``; the result is
    extrapolated to ``eps -> 0`` with a Richardson table.  The excision error
    is odd in ``eps``, so the table eliminates eps, eps^3, eps^5, ...
    """
    if not lower < pole < upper:
        raise ValueError(f"pole {pole!r} must lie strictly inside ({lower!r}, {upper!r})")
    if eps is None:
        eps = 0.25 * min(pole - lower, upper - pole)

    def integrand(w):
        return f(w) / (w - pole)

    def piece(a, b):
        val, _ = integrate.quad(integrand, a, b, epsabs=0.0, epsrel=1e-12, limit=400)
        return val

    outer_lo = piece(lower, pole - eps) if pole - eps > lower else 0.0
    outer_hi = piece(pole + eps, upper) if pole + eps < upper else 0.0
    base = outer_lo + outer_hi
    # excised integrals at eps, eps/2, eps/4, ... share the outer pieces
    estimates = []
    h = eps
    inner = 0.0
    for k in range(levels):
        estimates.append(base + inner)
        inner += piece(pole - h, pole - h / 2) + piece(pole + h / 2, pole + h)
        h /= 2
    table = [estimates]
    for order in range(1, levels):
        prev = table[-1]
        factor = 2.0 ** (2 * order - 1)
        table.append([(factor * prev[k + 1] - prev[k]) / (factor - 1) for k in range(len(prev) - 1)])
    return table[-1][0]


@lru_cache(maxsize=1024)
def _shift_integral(pole: float, sign: int, cfg: CoarseGrainConfig, thermal: bool) -> float:
    cut = cfg.omega_cut
    if pole <= 0 or pole >= cut:
        raise ValueError(f"pole {pole!r} must lie strictly inside (0, omega_cut)")
    if thermal:
        if cfg.temperature == 0:
            return 0.0

        def numerator(w):
            return w**3 * thermal_n(w, cfg.temperature) if w > 0 else 0.0
        # occupation dies beyond a few hundred k_B T / hbar
        top = min(cut, max(2 * pole, 800 * sc.k * cfg.temperature / sc.hbar))
    else:
        # w^3/(w -+ p) = w^2 +- p w + p^2 +- p^3/(w -+ p): elementary antiderivative
        p, top = pole, cut
        poly = top**3 / 3 + p * p * top
        if sign > 0:
            return poly - p * top**2 / 2 - p**3 * math.log1p(top / p)
        return poly + p * top**2 / 2 + p**3 * math.log((top - p) / p)
    if sign > 0:
        total = 0.0
        for a, b in [(0.0, pole), (pole, top)]:
            val, _ = integrate.quad(lambda w: numerator(w) / (w + pole), a, b,
                                    epsabs=0.0, epsrel=1e-12, limit=400)
            total += val
        return total
    mid = min(2 * pole, 0.5 * (pole + top))
    near = principal_value(numerator, pole, 0.0, mid)
    if top > mid:
        # the tail can be hundreds of orders below the bulk; ask only for what matters
        far, _ = integrate.quad(lambda w: numerator(w) / (w - pole), mid, top,
                                epsabs=1e-14 * abs(near), epsrel=1e-12, limit=400)
    else:
        far = 0.0
    return near + far


def cross_shift(t_i: Transition, t_j: Transition, cfg: CoarseGrainConfig,
                sign: int = -1, thermal: bool = False) -> float:
    """Lowest-order cutoff shift between two channels (rad/s).

    ``sign=-1`` selects the resonant (pole) integral, ``sign=+1`` the
    counter-rotating one; ``thermal=True`` weights the integrand by the
    mode occupation.
    """
    if sign not in (-1, 1):
        raise ValueError("sign must be +1 or -1")
    overlap = dipole_overlap(t_i, t_j)
    if overlap == 0:
        return 0.0
    w_mean = 0.5 * (t_i.omega + t_j.omega)
    value = SHIFT_PREFACTOR * overlap * fc(t_i.omega - t_j.omega, cfg.tau_c) \
        * _shift_integral(w_mean, sign, cfg, thermal)
    return float(value.real) if abs(value.imag) <= 1e-12 * abs(value) else value


# --- reservoir mean field -------------------------------------------------------

def mean_field_term(temperature: float = 300.0, omega: float = 1e15, dim: int = 2,
                    fock_cutoff: int = 60) -> np.ndarray:
    """First-order reservoir term: zero, because a thermal field has no mean amplitude.

    The mean amplitude is computed on a truncated Fock space and asserted to
    vanish before the zero operator on the ``dim``-level atom is returned.
    """
    n = thermal_n(omega, temperature) if temperature > 0 else 0.0
    k = np.arange(fock_cutoff)
    weights = (n / (1 + n)) ** k if n > 0 else (k == 0).astype(float)
    rho_field = np.diag(weights / weights.sum())
    annihilate = np.diag(np.sqrt(k[1:].astype(float)), 1)
    mean_a = np.trace(rho_field @ annihilate)
    assert mean_a == 0, f"thermal field has nonzero mean amplitude {mean_a}"
    return np.zeros((dim, dim), dtype=complex)
