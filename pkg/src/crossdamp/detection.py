"""Detection geometries and angle-resolved photon count rates.

For a detector covering a set of directions k, the emitted power weight of
two dipoles is ``d_i^dagger D d_j`` with

    D = 3/(8 pi) * int (1 - k k^T) dOmega,

so ``D = 1`` over the full sphere.  Every region here has a closed form for
``int k k^T dOmega``; the code never integrates numerically.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Union

import numpy as np

from .coefficients import RATE_PREFACTOR, CoarseGrainConfig, fc, thermal_n
from .hydrogen import LevelScheme, Transition, spherical_to_cartesian

__all__ = [
    "Full4Pi",
    "ConeAboutY",
    "DoubleConeZ",
    "InvertedDoubleConeZ",
    "StripeTheta",
    "DetectionRegion",
    "detection_matrix",
    "gamma_omega",
    "EmissionTensor",
    "emission_tensor",
    "photon_count_rate",
    "region_from_dict",
    "region_to_dict",
    "NegativeRateError",
    "MAGIC_ANGLE",
]

MAGIC_ANGLE = math.atan(math.sqrt(2.0))
DEFAULT_STRIPE_WIDTH = 0.01
_X, _Y, _Z = np.eye(3)


class NegativeRateError(ValueError):
    """A count rate came out negative beyond roundoff."""


def _band_moments(axis: np.ndarray, c_hi: float, c_lo: float) -> tuple[float, np.ndarray]:
    """Solid angle and int k k^T over directions with c_lo <= k.axis <= c_hi."""
    solid = 2 * math.pi * (c_hi - c_lo)
    along = 2 * math.pi * (c_hi**3 - c_lo**3) / 3
    across = 0.5 * (solid - along)
    nn = np.outer(axis, axis)
    return solid, along * nn + across * (np.eye(3) - nn)


@dataclass(frozen=True)
class Full4Pi:
    def moments(self):
        return 4 * math.pi, 4 * math.pi / 3 * np.eye(3)


@dataclass(frozen=True)
class ConeAboutY:
    """Single cone of half-opening ``theta`` around +y."""

    theta: float

    def __post_init__(self):
        _check_angle(self.theta, 0, math.pi, "theta")

    @classmethod
    def from_solid_angle(cls, solid: float) -> "ConeAboutY":
        _check_solid(solid, 4 * math.pi)
        return cls(math.acos(1 - solid / (2 * math.pi)))

    def moments(self):
        return _band_moments(_Y, 1.0, math.cos(self.theta))


@dataclass(frozen=True)
class DoubleConeZ:
    """Two cones of half-opening ``theta`` around +z and -z."""

    theta: float

    def __post_init__(self):
        _check_angle(self.theta, 0, math.pi / 2, "theta")

    @classmethod
    def from_solid_angle(cls, solid: float) -> "DoubleConeZ":
        _check_solid(solid, 4 * math.pi)
        return cls(math.acos(1 - solid / (4 * math.pi)))

    def moments(self):
        c = math.cos(self.theta)
        solid, m = _band_moments(_Z, 1.0, c)
        return 2 * solid, 2 * m


@dataclass(frozen=True)
class InvertedDoubleConeZ:
    """Everything outside the double cone of half-opening ``theta`` about z."""

    theta: float

    def __post_init__(self):
        _check_angle(self.theta, 0, math.pi / 2, "theta")

    @classmethod
    def from_solid_angle(cls, solid: float) -> "InvertedDoubleConeZ":
        _check_solid(solid, 4 * math.pi)
        return cls(math.acos(solid / (4 * math.pi)))

    def moments(self):
        c = math.cos(self.theta)
        return _band_moments(_Z, c, -c)


@dataclass(frozen=True)
class StripeTheta:
    """Band of polar angles ``[theta - width/2, theta + width/2]`` about z, clipped to [0, pi]."""

    theta: float
    width: float = DEFAULT_STRIPE_WIDTH

    def __post_init__(self):
        _check_angle(self.theta, 0, math.pi, "theta")
        if not self.width > 0:
            raise ValueError(f"width must be positive, got {self.width}")

    @property
    def bounds(self) -> tuple[float, float]:
        return max(0.0, self.theta - 0.5 * self.width), min(math.pi, self.theta + 0.5 * self.width)

    def moments(self):
        lo, hi = self.bounds
        return _band_moments(_Z, math.cos(lo), math.cos(hi))


DetectionRegion = Union[Full4Pi, ConeAboutY, DoubleConeZ, InvertedDoubleConeZ, StripeTheta]

_KINDS = {
    "full4pi": Full4Pi,
    "cone_y": ConeAboutY,
    "double_cone_z": DoubleConeZ,
    "inverted_double_cone_z": InvertedDoubleConeZ,
    "stripe": StripeTheta,
}


def _check_angle(value, lo, hi, name):
    if not lo <= value <= hi:
        raise ValueError(f"{name}={value!r} outside [{lo}, {hi}]")


def _check_solid(value, top):
    if not 0 < value <= top:
        raise ValueError(f"solid angle {value!r} outside (0, {top}]")


def solid_angle(region: DetectionRegion) -> float:
    return region.moments()[0]


@lru_cache(maxsize=1024)
def _detection_matrix_cached(region) -> np.ndarray:
    solid, second = region.moments()
    d = 3 / (8 * math.pi) * (solid * np.eye(3) - second)
    d = 0.5 * (d + d.T)
    d.setflags(write=False)
    return d


def detection_matrix(region: DetectionRegion) -> np.ndarray:
    """3x3 Cartesian detection matrix for ``region`` (read-only, cached)."""
    if isinstance(region, Full4Pi):
        return np.eye(3)
    return _detection_matrix_cached(region)


def region_from_dict(spec: dict) -> DetectionRegion:
    """Build a region from ``{"kind": ..., "theta_rad": ..., "width_rad": ..., "solid_angle_sr": ...}``."""
    kind = spec.get("kind")
    if kind not in _KINDS:
        raise ValueError(f"unknown region kind {kind!r}; expected one of {sorted(_KINDS)}")
    cls = _KINDS[kind]
    if cls is Full4Pi:
        return Full4Pi()
    if "solid_angle_sr" in spec:
        if cls is StripeTheta:
            raise ValueError("a stripe is given by theta_rad and width_rad")
        return cls.from_solid_angle(float(spec["solid_angle_sr"]))
    if "theta_rad" not in spec:
        raise ValueError(f"region {kind!r} needs theta_rad")
    if cls is StripeTheta:
        return StripeTheta(float(spec["theta_rad"]), float(spec.get("width_rad", DEFAULT_STRIPE_WIDTH)))
    return cls(float(spec["theta_rad"]))


def region_to_dict(region: DetectionRegion) -> dict:
    kind = next(k for k, v in _KINDS.items() if isinstance(region, v))
    out = {"kind": kind}
    if isinstance(region, StripeTheta):
        out.update(theta_rad=region.theta, width_rad=region.width)
    elif not isinstance(region, Full4Pi):
        out["theta_rad"] = region.theta
    return out


# --- rates ----------------------------------------------------------------------

def gamma_omega(t_i: Transition, t_j: Transition, region: DetectionRegion, cfg: CoarseGrainConfig) -> complex:
    """Cross-damping rate restricted to photons reaching ``region`` (rad/s)."""
    d = detection_matrix(region)
    ci = spherical_to_cartesian(t_i.dipole)
    cj = spherical_to_cartesian(t_j.dipole)
    overlap = complex(ci.conj() @ d @ cj)
    if overlap == 0:
        return 0j
    w_mean = 0.5 * (t_i.omega + t_j.omega)
    return RATE_PREFACTOR * overlap * fc(t_i.omega - t_j.omega, cfg.tau_c) * w_mean**3


@dataclass(frozen=True, eq=False)
class EmissionTensor:
    """Per-geometry emission operator factory.

    ``tensor[a, b, e, e']`` sums over decay channels that share a lower
    state, so that ``G = einsum("ab,abxy->xy", D, tensor)`` is the emission
    operator over the excited states listed in ``excited``.
    """

    tensor: np.ndarray
    excited: tuple
    cross_damping: bool

    def operator(self, region: DetectionRegion) -> np.ndarray:
        return np.einsum("ab,abxy->xy", detection_matrix(region), self.tensor)

    def rates(self, region: DetectionRegion, excited_blocks: np.ndarray) -> np.ndarray:
        """Count rates Tr(G rho) for a stack of excited-block density matrices (..., k, k)."""
        g = self.operator(region)
        return np.einsum("xy,...yx->...", g, excited_blocks).real


def emission_tensor(scheme: LevelScheme, cfg: CoarseGrainConfig, cross_damping: bool = True) -> EmissionTensor:
    """Emission tensor over the excited states of ``scheme``, including (1 + n) stimulated emission."""
    excited = tuple(scheme.excited_indices)
    pos = {e: k for k, e in enumerate(excited)}
    k = len(excited)
    tensor = np.zeros((3, 3, k, k), dtype=complex)
    by_lower: dict[int, list[Transition]] = {}
    for t in scheme.decays:
        by_lower.setdefault(t.lower_index, []).append(t)
    for group in by_lower.values():
        for ti in group:
            ci = spherical_to_cartesian(ti.dipole).conj()
            for tj in group:
                if not cross_damping and ti is not tj:
                    continue
                cj = spherical_to_cartesian(tj.dipole)
                w_mean = 0.5 * (ti.omega + tj.omega)
                weight = RATE_PREFACTOR * fc(ti.omega - tj.omega, cfg.tau_c) * w_mean**3 \
                    * (1 + thermal_n(w_mean, cfg.temperature))
                tensor[:, :, pos[ti.upper_index], pos[tj.upper_index]] += weight * np.outer(ci, cj)
    return EmissionTensor(tensor, excited, cross_damping)


def photon_count_rate(rho, region: DetectionRegion, scheme: LevelScheme, cfg: CoarseGrainConfig,
                      cross_damping: bool = True, tensor: EmissionTensor | None = None) -> float:
    """Photons per second emitted into ``region`` by the state ``rho``.

    Raises :class:`NegativeRateError` if the result is negative beyond
    roundoff, which would signal a damping matrix that is not PSD.
    """
    from .liouvillian import DensityMatrix
    data = rho.data if isinstance(rho, DensityMatrix) else np.asarray(rho)
    tensor = tensor if tensor is not None else emission_tensor(scheme, cfg, cross_damping)
    idx = list(tensor.excited)
    block = data[np.ix_(idx, idx)]
    rate = float(tensor.rates(region, block))
    g = tensor.operator(region)
    scale = float(np.abs(g).max() * np.abs(block).sum()) if block.size else 0.0
    if rate < -1e-12 * scale:
        raise NegativeRateError(f"negative count rate {rate:.6g} 1/s")
    return rate
