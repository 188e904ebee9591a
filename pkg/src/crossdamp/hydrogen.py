"""Hydrogen 2S-4P level scheme with hyperfine-resolved dipole moments.

The driven state is 2S1/2 F=0 M_F=0.  The 4P manifold is fully resolved in
(J, F, M_F).  The lower manifolds reached by 4P decay (1S, 2S, 3S, 3D) are
absorbing sinks: they are resolved in (F, M_F) for the dipole bookkeeping but
carry the hyperfine-unresolved fine-structure energy, so every member of a
lower (n, L, J) multiplet sees the same emission frequency.  Population that
decays to 2S lands in a sink copy of the 2S multiplet and never returns to the
driven state.

Units: energies and frequencies in rad/s, dipoles in e*a0.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, fields
from fractions import Fraction
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np
from scipy import constants as sc

from .angular import HalfInt, clebsch_gordan, projections, twice, wigner3j

__all__ = [
    "AtomicState",
    "Transition",
    "LevelScheme",
    "ModelConfig",
    "ConfigError",
    "radial_integral",
    "dipole_matrix_element",
    "build_level_scheme",
    "restrict",
    "dfrak",
    "einstein_a",
    "dirac_energy_hz",
    "hyperfine_a_hz",
    "parse_manifold",
    "DIPOLE_UNIT",
    "Q_VALUES",
]

NUCLEAR_SPIN = HalfInt(1)
ELECTRON_SPIN = HalfInt(1)
Q_VALUES = (-1, 0, 1)
DIPOLE_UNIT = sc.e * sc.physical_constants["Bohr radius"][0]   # C m
_L_LETTERS = "SPDFGH"

ALPHA = sc.alpha
M_E = sc.m_e
M_P = sc.m_p
M_RED = M_E * M_P / (M_E + M_P)
RYDBERG_HZ = sc.Rydberg * sc.c
G_PROTON = sc.physical_constants["proton g factor"][0]
A_ELECTRON = sc.physical_constants["electron mag. mom. anomaly"][0]

SINK_MANIFOLDS = {
    "1S": [(1, 0, HalfInt(1))],
    "2S": [(2, 0, HalfInt(1))],
    "3S": [(3, 0, HalfInt(1))],
    "3D": [(3, 2, HalfInt(3)), (3, 2, HalfInt(5))],
}


class ConfigError(ValueError):
    """Invalid or incomplete model configuration; ``field`` names the offending entry."""

    def __init__(self, message: str, field: str = ""):
        super().__init__(message)
        self.field = field


# --- energies -------------------------------------------------------------

def dirac_energy_hz(n: int, j) -> float:
    """Dirac bound-state energy (binding part, Hz) with the reduced-mass scaling."""
    jj = float(j)
    k = jj + 0.5
    x = ALPHA / (n - k + math.sqrt(k * k - ALPHA**2))
    # f - 1 computed without cancellation
    f_minus_1 = math.expm1(-0.5 * math.log1p(x * x))
    return M_RED * sc.c**2 / sc.h * f_minus_1


def hyperfine_a_hz(n: int, l: int, j) -> float:
    """Magnetic-dipole hyperfine constant A (Hz) for hydrogen, E(F) = A/2 [F(F+1)-I(I+1)-J(J+1)]."""
    jj = float(j)
    k = ALPHA**2 * G_PROTON * (M_E / M_P) * RYDBERG_HZ * (1 + A_ELECTRON) * (M_RED / M_E) ** 3
    return 2 * k / n**3 / (jj * (jj + 1) * (2 * l + 1))


def _hfs_offset(a_hz: float, j, f) -> float:
    jj, ff, ii = float(j), float(f), float(NUCLEAR_SPIN)
    return 0.5 * a_hz * (ff * (ff + 1) - ii * (ii + 1) - jj * (jj + 1))


def _default_fs_4p() -> float:
    return dirac_energy_hz(4, 1.5) - dirac_energy_hz(4, 0.5)


def _split(n, l, j) -> float:
    # splitting between F = J + 1/2 and F = J - 1/2 is A (J + 1/2)
    return hyperfine_a_hz(n, l, j) * (float(j) + 0.5)


@dataclass
class ModelConfig:
    """Level-structure inputs; every splitting may be overridden with a measured value."""

    fine_structure_4p_hz: Optional[float] = field(default_factory=_default_fs_4p)
    hyperfine_4p12_hz: Optional[float] = field(default_factory=lambda: _split(4, 1, 0.5))
    hyperfine_4p32_hz: Optional[float] = field(default_factory=lambda: _split(4, 1, 1.5))
    hyperfine_2s_hz: Optional[float] = field(default_factory=lambda: _split(2, 0, 0.5))
    gamma_scale: float = 1.0
    sink_manifolds: tuple = ("1S", "2S", "3S", "3D")

    def validate(self) -> None:
        for f in fields(self):
            value = getattr(self, f.name)
            if value is None:
                raise ConfigError(f"model.{f.name} is required", f"model.{f.name}")
        for name in ("fine_structure_4p_hz", "hyperfine_4p12_hz", "hyperfine_4p32_hz", "hyperfine_2s_hz"):
            value = float(getattr(self, name))
            if not math.isfinite(value) or value <= 0:
                raise ConfigError(f"model.{name} must be a positive finite frequency", f"model.{name}")
        if not self.gamma_scale > 0:
            raise ConfigError("model.gamma_scale must be positive", "model.gamma_scale")
        unknown = set(self.sink_manifolds) - set(SINK_MANIFOLDS)
        if unknown:
            raise ConfigError(f"unknown sink manifolds {sorted(unknown)}", "model.sink_manifolds")
        if not self.sink_manifolds:
            raise ConfigError("at least one sink manifold is needed", "model.sink_manifolds")


# --- states and transitions ----------------------------------------------

@dataclass(frozen=True)
class AtomicState:
    n: int
    L: int
    J: HalfInt
    F: HalfInt
    M_F: HalfInt
    energy: float            # rad/s above the 1S1/2 centroid
    role: str = "sink"       # "driven", "excited" or "sink"
    copy: bool = False       # decay-target copy of a multiplet that also holds the driven state

    def __post_init__(self):
        tj, tf, tm = self.J.twice_value, self.F.twice_value, self.M_F.twice_value
        if not abs(2 * self.L - 1) <= tj <= 2 * self.L + 1:
            raise ValueError(f"J={self.J} incompatible with L={self.L}")
        ti = NUCLEAR_SPIN.twice_value
        if not abs(tj - ti) <= tf <= tj + ti:
            raise ValueError(f"F={self.F} incompatible with J={self.J}")
        if abs(tm) > tf or (tf - tm) % 2:
            raise ValueError(f"M_F={self.M_F} incompatible with F={self.F}")

    @property
    def manifold(self) -> str:
        return f"{self.n}{_L_LETTERS[self.L]}{self.J}"

    @property
    def label(self) -> str:
        star = "*" if self.copy else ""
        return f"{self.manifold}{star} F={self.F} M={self.M_F}"


@dataclass(frozen=True, eq=False)
class Transition:
    """Dipole-coupled pair; ``dipole[k]`` is ``<lower| d_q |upper>`` for q = Q_VALUES[k]."""

    lower: AtomicState
    upper: AtomicState
    dipole: np.ndarray
    lower_index: int = -1
    upper_index: int = -1

    @property
    def omega(self) -> float:
        return self.upper.energy - self.lower.energy

    @property
    def label(self) -> str:
        return f"{self.upper.label} -> {self.lower.label}"

    def cartesian(self) -> np.ndarray:
        """The same dipole vector in the lab (x, y, z) basis."""
        return spherical_to_cartesian(self.dipole)


def spherical_to_cartesian(d: np.ndarray) -> np.ndarray:
    """Map components (d_-1, d_0, d_+1) of ``d = sum_q d_q e_q^*`` to (x, y, z)."""
    dm, d0, dp = d[..., 0], d[..., 1], d[..., 2]
    s = 1 / math.sqrt(2)
    return np.stack([s * (dm - dp), 1j * s * (dm + dp), d0 + 0j], axis=-1)


@dataclass(frozen=True, eq=False)
class LevelScheme:
    states: tuple
    decays: tuple            # excited -> sink transitions (dissipator channels)
    probes: tuple            # driven -> excited transitions (laser couplings)
    gamma_tot: float         # rad/s
    driven_index: int
    reference_index: int     # excited state that defines zero detuning
    config: Optional[ModelConfig] = None

    @property
    def transitions(self) -> tuple:
        return self.decays

    @property
    def dim(self) -> int:
        return len(self.states)

    def indices(self, role: str) -> list[int]:
        return [i for i, s in enumerate(self.states) if s.role == role]

    @property
    def excited_indices(self) -> list[int]:
        return self.indices("excited")

    @property
    def sink_indices(self) -> list[int]:
        return self.indices("sink")

    @property
    def active_indices(self) -> list[int]:
        return [i for i, s in enumerate(self.states) if s.role != "sink"]

    def index(self, label: str) -> int:
        for i, s in enumerate(self.states):
            if s.label == label:
                return i
        raise KeyError(label)

    def state(self, label: str) -> AtomicState:
        return self.states[self.index(label)]

    def reference_frequency(self) -> float:
        """Laser frequency (rad/s) that is resonant at zero detuning."""
        return self.states[self.reference_index].energy - self.states[self.driven_index].energy

    def total_decay_rates(self) -> np.ndarray:
        """Sum of Einstein A coefficients out of every state (0 for states that do not decay)."""
        out = np.zeros(self.dim)
        for t in self.decays:
            out[t.upper_index] += einstein_a(t)
        return out


# --- radial integrals -------------------------------------------------------

@lru_cache(maxsize=None)
def _radial_poly(n: int, l: int):
    """R_nl(r) = sqrt(norm2) * sum_k c_k r^k * exp(-r/n) with rational c_k and norm2."""
    if not 0 <= l < n:
        raise ValueError(f"no bound state n={n}, l={l}")
    k = n - l - 1
    alpha = 2 * l + 1
    # associated Laguerre L_k^alpha(x) = sum_i (-1)^i C(k+alpha, k-i) x^i / i!
    lag = [Fraction((-1) ** i * math.comb(k + alpha, k - i), math.factorial(i)) for i in range(k + 1)]
    scale = Fraction(2, n)
    # (2r/n)^l * L(2r/n) as a polynomial in r
    coeffs = {}
    for i, c in enumerate(lag):
        coeffs[l + i] = coeffs.get(l + i, 0) + c * scale ** (l + i)
    norm2 = scale**3 * Fraction(math.factorial(k), 2 * n * math.factorial(n + l))
    return coeffs, norm2


def radial_integral(n1: int, l1: int, n2: int, l2: int) -> float:
    """``<R_{n1 l1}| r |R_{n2 l2}>`` in Bohr radii for nonrelativistic hydrogen.

    Evaluated exactly in rational arithmetic; only the final square root is
    rounded.  Raises ``ValueError`` unless ``l2 = l1 +- 1``.
    """
    if abs(l1 - l2) != 1:
        raise ValueError(f"dipole radial integral needs l2 = l1 +- 1, got l1={l1}, l2={l2}")
    return _radial_integral(n1, l1, n2, l2)


@lru_cache(maxsize=None)
def _radial_integral(n1, l1, n2, l2) -> float:
    c1, nn1 = _radial_poly(n1, l1)
    c2, nn2 = _radial_poly(n2, l2)
    beta = Fraction(1, n1) + Fraction(1, n2)
    total = Fraction(0)
    for p1, a1 in c1.items():
        for p2, a2 in c2.items():
            power = p1 + p2 + 3      # r^2 dr measure and the dipole r
            total += a1 * a2 * Fraction(math.factorial(power)) / beta ** (power + 1)
    return math.sqrt(nn1 * nn2) * float(total)


# --- dipole matrix elements --------------------------------------------------

def _orbital_element(l1: int, m1: int, l2: int, m2: int, q: int) -> float:
    """<l1 m1| C^1_q |l2 m2> (unit-rank spherical tensor)."""
    w = wigner3j(l1, 1, l2, -m1, q, m2)
    if w == 0.0:
        return 0.0
    sign = -1.0 if m1 % 2 else 1.0
    return sign * math.sqrt((2 * l1 + 1) * (2 * l2 + 1)) * w * wigner3j(l1, 1, l2, 0, 0, 0)


def _fine_element(L1, J1, mJ1, L2, J2, mJ2, q) -> float:
    """<L1 S J1 mJ1| C^1_q |L2 S J2 mJ2> through the |L mL>|ms> expansion."""
    total = 0.0
    for ms in projections(ELECTRON_SPIN):
        mL1 = mJ1 - ms
        mL2 = mJ2 - ms
        if not (mL1.is_integer and mL2.is_integer):
            continue
        m1, m2 = mL1.twice_value // 2, mL2.twice_value // 2
        if abs(m1) > L1 or abs(m2) > L2:
            continue
        c1 = clebsch_gordan(L1, m1, ELECTRON_SPIN, ms, J1, mJ1)
        c2 = clebsch_gordan(L2, m2, ELECTRON_SPIN, ms, J2, mJ2)
        if c1 and c2:
            total += c1 * c2 * _orbital_element(L1, m1, L2, m2, q)
    return total


def _selection_allowed(a: AtomicState, b: AtomicState) -> bool:
    if abs(a.L - b.L) != 1:
        return False
    tfa, tfb = a.F.twice_value, b.F.twice_value
    if abs(tfa - tfb) > 2 or (tfa == 0 and tfb == 0):
        return False
    if abs(a.J.twice_value - b.J.twice_value) > 2:
        return False
    return True


@lru_cache(maxsize=None)
def _hyperfine_element(n1, L1, tJ1, tF1, tM1, n2, L2, tJ2, tF2, tM2, q) -> float:
    J1, F1, M1 = HalfInt(tJ1), HalfInt(tF1), HalfInt(tM1)
    J2, F2, M2 = HalfInt(tJ2), HalfInt(tF2), HalfInt(tM2)
    if tM1 != tM2 + 2 * q:
        return 0.0
    angular = 0.0
    for mI in projections(NUCLEAR_SPIN):
        mJ1, mJ2 = M1 - mI, M2 - mI
        if abs(mJ1.twice_value) > tJ1 or abs(mJ2.twice_value) > tJ2:
            continue
        c1 = clebsch_gordan(J1, mJ1, NUCLEAR_SPIN, mI, F1, M1)
        c2 = clebsch_gordan(J2, mJ2, NUCLEAR_SPIN, mI, F2, M2)
        if c1 and c2:
            angular += c1 * c2 * _fine_element(L1, J1, mJ1, L2, J2, mJ2, q)
    return angular * radial_integral(n1, L1, n2, L2)


def dipole_matrix_element(lower: AtomicState, upper: AtomicState) -> np.ndarray:
    """Spherical components ``<lower| d_q |upper>`` (q = -1, 0, +1) in e*a0.

    Nonzero only for electric-dipole allowed pairs; component q requires
    ``M_lower = M_upper + q``.  All components are real.
    """
    out = np.zeros(3, dtype=complex)
    if not _selection_allowed(lower, upper):
        return out
    key_l = (lower.n, lower.L, lower.J.twice_value, lower.F.twice_value, lower.M_F.twice_value)
    key_u = (upper.n, upper.L, upper.J.twice_value, upper.F.twice_value, upper.M_F.twice_value)
    for k, q in enumerate(Q_VALUES):
        out[k] = _hyperfine_element(*key_l, *key_u, q)
    return out


def einstein_a(t: Transition) -> float:
    """Spontaneous emission rate (1/s) of one transition: omega^3 |d|^2 / (3 pi eps0 hbar c^3)."""
    d2 = float(np.vdot(t.dipole, t.dipole).real) * DIPOLE_UNIT**2
    return t.omega**3 * d2 / (3 * math.pi * sc.epsilon_0 * sc.hbar * sc.c**3)


# --- scheme assembly ----------------------------------------------------------

def parse_manifold(manifold: str) -> tuple[int, int, HalfInt]:
    """``"3D5/2"`` -> (3, 2, HalfInt(5))."""
    n = int(manifold[0])
    L = _L_LETTERS.index(manifold[1])
    num, den = manifold[2:].rstrip("*").split("/")
    return n, L, HalfInt(twice(Fraction(int(num), int(den))))


def _multiplet(n, L, J, energy_of_f, role, copy=False) -> list[AtomicState]:
    out = []
    tj, ti = J.twice_value, NUCLEAR_SPIN.twice_value
    for tf in range(abs(tj - ti), tj + ti + 1, 2):
        F = HalfInt(tf)
        for M in projections(F):
            out.append(AtomicState(n, L, J, F, M, energy_of_f(F), role, copy))
    return out


def build_level_scheme(config: Optional[ModelConfig] = None) -> LevelScheme:
    """Assemble states, decay channels and probe couplings for the 2S-4P system."""
    config = config if config is not None else ModelConfig()
    config.validate()
    two_pi = 2 * math.pi
    e1s = dirac_energy_hz(1, 0.5)

    def centroid(n, j):
        return two_pi * (dirac_energy_hz(n, j) - e1s)

    a_2s = config.hyperfine_2s_hz
    a_4p12 = config.hyperfine_4p12_hz                 # splitting / (J + 1/2), J = 1/2
    a_4p32 = config.hyperfine_4p32_hz / 2.0           # J = 3/2
    e_4p12 = centroid(4, 0.5)
    e_4p32 = e_4p12 + two_pi * config.fine_structure_4p_hz

    states: list[AtomicState] = []
    e_2s = centroid(2, 0.5)
    states.append(AtomicState(2, 0, HalfInt(1), HalfInt(0), HalfInt(0),
                              e_2s + two_pi * _hfs_offset(a_2s, 0.5, 0), role="driven"))
    states += _multiplet(4, 1, HalfInt(1), lambda F: e_4p12 + two_pi * _hfs_offset(a_4p12, 0.5, F), "excited")
    states += _multiplet(4, 1, HalfInt(3), lambda F: e_4p32 + two_pi * _hfs_offset(a_4p32, 1.5, F), "excited")
    for name in config.sink_manifolds:
        for n, L, J in SINK_MANIFOLDS[name]:
            e = centroid(n, float(J))
            states += _multiplet(n, L, J, lambda F, e=e: e, "sink", copy=(name == "2S"))

    driven = 0
    excited = [i for i, s in enumerate(states) if s.role == "excited"]
    sinks = [i for i, s in enumerate(states) if s.role == "sink"]
    decay_amp = math.sqrt(config.gamma_scale)
    decays = []
    for ie in excited:
        for ig in sinks:
            d = dipole_matrix_element(states[ig], states[ie])
            if np.any(d != 0):
                decays.append(Transition(states[ig], states[ie], decay_amp * d, ig, ie))
    probes = []
    for ie in excited:
        d = dipole_matrix_element(states[driven], states[ie])
        if np.any(d != 0):
            probes.append(Transition(states[driven], states[ie], d, driven, ie))

    reference = next(i for i in excited
                     if states[i].J == HalfInt(1) and states[i].F == HalfInt(2) and states[i].M_F == HalfInt(0))
    partial = LevelScheme(tuple(states), tuple(decays), tuple(probes), 0.0, driven, reference, config)
    gamma_tot = float(partial.total_decay_rates()[reference])
    return LevelScheme(tuple(states), tuple(decays), tuple(probes), gamma_tot, driven, reference, config)


def restrict(scheme: LevelScheme, labels: Sequence[str]) -> LevelScheme:
    """Sub-scheme on the named states, keeping only transitions among them.

    The driven and reference states must be included.  ``gamma_tot`` keeps
    the value of the parent scheme so drive strengths stay comparable.
    """
    keep = [scheme.index(label) for label in labels]
    if len(set(keep)) != len(keep):
        raise ValueError("duplicate state labels")
    if scheme.driven_index not in keep or scheme.reference_index not in keep:
        raise ValueError("the driven and reference states must be kept")
    new = {old: k for k, old in enumerate(keep)}

    def remap(transitions):
        return tuple(Transition(t.lower, t.upper, t.dipole, new[t.lower_index], new[t.upper_index])
                     for t in transitions if t.lower_index in new and t.upper_index in new)

    return LevelScheme(tuple(scheme.states[i] for i in keep), remap(scheme.decays), remap(scheme.probes),
                       scheme.gamma_tot, new[scheme.driven_index], new[scheme.reference_index], scheme.config)


def dfrak(e: AtomicState, e2: AtomicState, ground_manifold: str) -> float:
    """Sum over the lower multiplet ``ground_manifold`` of ``d_ge^* . d_ge'``.

    The sum runs over every hyperfine sublevel (F, M_F) of the lower
    fine-structure level, e.g. ``"1S1/2"`` or ``"3D3/2"``.
    """
    n, L, J = parse_manifold(ground_manifold)
    lower = _multiplet(n, L, J, lambda F: 0.0, "sink")
    terms = []
    for g in lower:
        terms.extend(np.conj(dipole_matrix_element(g, e)) * dipole_matrix_element(g, e2))
    return math.fsum(np.real(terms))
