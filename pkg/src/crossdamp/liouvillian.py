"""Rotating-frame generator: laser drive plus the coarse-grained dissipator.

Density matrices are vectorized row-major, ``vec(rho)[a * N + b] = rho[a, b]``,
so ``A rho B`` becomes ``kron(A, B.T)``.  Hamiltonians are stored as H/hbar
in rad/s.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import cached_property
from typing import Optional, Sequence

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
from scipy.integrate import solve_ivp

from .coefficients import CoarseGrainConfig, GammaMatrix, cross_shift, gamma_matrix
from .hydrogen import LevelScheme, spherical_to_cartesian

__all__ = [
    "DriveConfig",
    "DensityMatrix",
    "Liouvillian",
    "EvolutionError",
    "build_hamiltonian",
    "build_dissipator",
    "build_liouvillian",
    "evolve",
    "quasi_steady_state",
    "steady_state",
    "drive_couplings",
    "OBSERVATION_TIME",
    "ActiveBlockPropagator",
    "QuasiSteadyResult",
    "quasi_steady",
]

OBSERVATION_TIME = 500.0      # in units of 1/gamma_tot


class EvolutionError(RuntimeError):
    """Time evolution or steady-state solve failed; ``details`` carries diagnostics."""

    def __init__(self, message: str, **details):
        super().__init__(message)
        self.details = details


def _unit(v, name) -> np.ndarray:
    arr = np.asarray(v, dtype=complex)
    if arr.shape != (3,):
        raise ValueError(f"{name} must be a 3-vector")
    norm = np.linalg.norm(arr)
    if norm == 0:
        raise ValueError(f"{name} must be nonzero")
    return arr / norm


@dataclass(frozen=True)
class DriveConfig:
    detuning: float = 0.0                       # rad/s, relative to 2S F=0 -> 4P1/2 F=1 M=0
    rabi_scale: float = 1e-3                    # peak Rabi frequency / gamma_tot
    polarization: tuple = (0.0, 0.0, 1.0)
    propagation: tuple = (1.0, 0.0, 0.0)

    def __post_init__(self):
        object.__setattr__(self, "polarization", tuple(self.polarization))
        object.__setattr__(self, "propagation", tuple(self.propagation))
        pol = _unit(self.polarization, "polarization")
        prop = _unit(self.propagation, "propagation")
        if abs(np.vdot(prop, pol)) > 1e-12:
            raise ValueError("polarization must be perpendicular to propagation")
        if self.rabi_scale < 0 or not math.isfinite(self.rabi_scale):
            raise ValueError(f"rabi_scale must be finite and >= 0, got {self.rabi_scale}")
        if self.rabi_scale > 1e-2:
            warnings.warn(f"rabi_scale={self.rabi_scale:g} leaves the weak-drive regime", stacklevel=2)

    @property
    def polarization_vector(self) -> np.ndarray:
        return _unit(self.polarization, "polarization")

    def with_detuning(self, detuning: float) -> "DriveConfig":
        return DriveConfig(float(detuning), self.rabi_scale, self.polarization, self.propagation)


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    data: np.ndarray

    @classmethod
    def pure(cls, index: int, dim: int) -> "DensityMatrix":
        rho = np.zeros((dim, dim), dtype=complex)
        rho[index, index] = 1.0
        return cls(rho)

    @classmethod
    def maximally_mixed(cls, dim: int) -> "DensityMatrix":
        return cls(np.eye(dim, dtype=complex) / dim)

    @property
    def dim(self) -> int:
        return self.data.shape[0]

    @property
    def populations(self) -> np.ndarray:
        return self.data.diagonal().real.copy()

    def trace(self) -> complex:
        return complex(np.trace(self.data))

    def hermiticity_error(self) -> float:
        return float(np.max(np.abs(self.data - self.data.conj().T)))

    def min_eigenvalue(self) -> float:
        herm = 0.5 * (self.data + self.data.conj().T)
        return float(np.linalg.eigvalsh(herm)[0])

    def validate(self, hermitian_tol=1e-12, trace_tol=1e-10, positivity_tol=1e-10) -> None:
        if self.hermiticity_error() > hermitian_tol:
            raise ValueError(f"density matrix not Hermitian ({self.hermiticity_error():.3g})")
        if abs(self.trace() - 1) > trace_tol:
            raise ValueError(f"density matrix trace {self.trace()} differs from 1")
        if self.min_eigenvalue() < -positivity_tol:
            raise ValueError(f"density matrix has negative eigenvalue {self.min_eigenvalue():.3g}")

    def vec(self) -> np.ndarray:
        return self.data.reshape(-1)


# --- Hamiltonian -------------------------------------------------------------------

def drive_couplings(scheme: LevelScheme, drive: DriveConfig) -> dict[int, complex]:
    """Rabi frequency (rad/s) for each probed excited state, largest magnitude = rabi_scale * gamma_tot."""
    pol = drive.polarization_vector
    raw = {}
    for t in scheme.probes:
        # <e| d.eps |g> = conj(<g|d|e>) . eps
        raw[t.upper_index] = complex(np.dot(spherical_to_cartesian(t.dipole).conj(), pol))
    peak = max((abs(v) for v in raw.values()), default=0.0)
    if peak == 0:
        return {k: 0j for k in raw}
    scale = drive.rabi_scale * scheme.gamma_tot / peak
    return {k: v * scale for k, v in raw.items() if v != 0}


def build_hamiltonian(scheme: LevelScheme, drive: DriveConfig) -> np.ndarray:
    """RWA Hamiltonian in the frame rotating at the laser frequency (rad/s).

    Excited states sit at their offset from the reference excited state minus
    the detuning; the driven state and the sinks sit at zero.
    """
    n = scheme.dim
    h = np.zeros((n, n), dtype=complex)
    e_ref = scheme.states[scheme.reference_index].energy
    for i in scheme.excited_indices:
        h[i, i] = scheme.states[i].energy - e_ref - drive.detuning
    g = scheme.driven_index
    for e, rabi in drive_couplings(scheme, drive).items():
        h[e, g] += -0.5 * rabi
        h[g, e] += -0.5 * np.conj(rabi)
    return h


# --- dissipator ------------------------------------------------------------------

def _commutator_super(h: np.ndarray) -> sp.csr_matrix:
    """Superoperator of rho -> -i (K rho - rho K^dagger) for a general K."""
    n = h.shape[0]
    eye = sp.identity(n, format="csr", dtype=complex)
    return (-1j * (sp.kron(sp.csr_matrix(h), eye) - sp.kron(eye, sp.csr_matrix(h.conj())))).tocsr()


def _jump_super(n: int, decays, coeffs: np.ndarray, reverse: bool = False) -> sp.csr_matrix:
    """Sum_ij c_ij sigma_j rho sigma_i^dagger, or sigma_j^dagger rho sigma_i with ``reverse``."""
    rows, cols, vals = [], [], []
    nz_i, nz_j = np.nonzero(coeffs)
    for i, j in zip(nz_i, nz_j):
        ti, tj = decays[i], decays[j]
        if reverse:
            rows.append(tj.upper_index * n + ti.upper_index)
            cols.append(tj.lower_index * n + ti.lower_index)
        else:
            rows.append(tj.lower_index * n + ti.lower_index)
            cols.append(tj.upper_index * n + ti.upper_index)
        vals.append(coeffs[i, j])
    return sp.csr_matrix((vals, (rows, cols)), shape=(n * n, n * n), dtype=complex)


def _loss_matrix(n: int, decays, coeffs: np.ndarray, reverse: bool = False) -> np.ndarray:
    """Sum_ij c_ij sigma_i^dagger sigma_j (or sigma_i sigma_j^dagger with ``reverse``)."""
    out = np.zeros((n, n), dtype=complex)
    nz_i, nz_j = np.nonzero(coeffs)
    for i, j in zip(nz_i, nz_j):
        ti, tj = decays[i], decays[j]
        if reverse:
            if ti.upper_index == tj.upper_index:
                out[ti.lower_index, tj.lower_index] += coeffs[i, j]
        elif ti.lower_index == tj.lower_index:
            out[ti.upper_index, tj.upper_index] += coeffs[i, j]
    return out


@dataclass(frozen=True, eq=False)
class Liouvillian:
    """Generator d(vec rho)/dt = matrix @ vec rho, with its building blocks."""

    scheme: LevelScheme
    matrix: sp.csr_matrix
    hamiltonian: np.ndarray
    loss: np.ndarray                 # anti-Hermitian part: K = H - (i/2) loss
    jumps: sp.csr_matrix
    gamma: GammaMatrix
    cfg: CoarseGrainConfig
    cross_damping: bool = True
    cross_shift: bool = False
    drive: Optional[DriveConfig] = None

    @property
    def dim(self) -> int:
        return self.scheme.dim

    @property
    def effective_hamiltonian(self) -> np.ndarray:
        return self.hamiltonian - 0.5j * self.loss

    @cached_property
    def dissipator(self) -> sp.csr_matrix:
        return (self.jumps + _commutator_super(-0.5j * self.loss)).tocsr()

    def apply(self, rho: np.ndarray) -> np.ndarray:
        n = self.dim
        return (self.matrix @ np.asarray(rho).reshape(-1)).reshape(n, n)

    def with_drive(self, drive: DriveConfig) -> "Liouvillian":
        """Same dissipator, new laser settings."""
        h = build_hamiltonian(self.scheme, drive) + self._shift_block()
        matrix = (_commutator_super(h - 0.5j * self.loss) + self.jumps).tocsr()
        return Liouvillian(self.scheme, matrix, h, self.loss, self.jumps, self.gamma, self.cfg,
                           self.cross_damping, self.cross_shift, drive)

    def _shift_block(self) -> np.ndarray:
        if not self.cross_shift:
            return np.zeros((self.dim, self.dim), dtype=complex)
        return cross_shift_hamiltonian(self.scheme, self.cfg)


def cross_shift_hamiltonian(scheme: LevelScheme, cfg: CoarseGrainConfig, rel_tol: float = 1e-12) -> np.ndarray:
    """Off-diagonal upper-manifold shifts -sum_g (Delta^- + Delta^T-) |e><e'| for e != e'.

    Terms sharing a lower multiplet and pair frequency are summed before the
    divergent integral is applied; sums below ``rel_tol`` of their absolute
    sum are exact angular zeros and are dropped.
    """
    n = scheme.dim
    h = np.zeros((n, n), dtype=complex)
    groups: dict = {}
    for ti in scheme.decays:
        for tj in scheme.decays:
            if ti.lower_index != tj.lower_index or ti.upper_index == tj.upper_index:
                continue
            overlap = complex(np.vdot(ti.dipole, tj.dipole))
            if overlap == 0:
                continue
            key = (ti.upper_index, tj.upper_index, ti.lower.manifold, ti.omega, tj.omega)
            entry = groups.setdefault(key, [ti, tj, [], 0.0])
            entry[2].append(overlap)
            entry[3] += abs(overlap)
    for (e, e2, *_), (ti, tj, overlaps, weight) in groups.items():
        total = complex(math.fsum(o.real for o in overlaps), math.fsum(o.imag for o in overlaps))
        if abs(total) <= rel_tol * weight:
            continue
        scale = total / complex(np.vdot(ti.dipole, tj.dipole))
        shift = cross_shift(ti, tj, cfg, -1) + cross_shift(ti, tj, cfg, -1, thermal=True)
        h[e, e2] += -scale * shift
    return h


def build_dissipator(scheme: LevelScheme, cfg: CoarseGrainConfig, cross_damping: bool = True,
                     gamma: Optional[GammaMatrix] = None, psd_tol: float = 1e-8):
    """Jump superoperator and loss matrix for the coarse-grained dissipator.

    Returns ``(jumps, loss, gamma)``.  Raises ``ValueError`` when the damping
    matrix is not positive semidefinite within ``psd_tol``.
    """
    if gamma is None:
        gamma = gamma_matrix(scheme.decays, cfg, cross_damping=cross_damping)
    gamma.check(psd_tol)
    n = scheme.dim
    emit, absorb = gamma.emission, gamma.absorption
    jumps = _jump_super(n, scheme.decays, emit)
    loss = _loss_matrix(n, scheme.decays, emit)
    if np.any(absorb != 0):
        jumps = jumps + _jump_super(n, scheme.decays, absorb, reverse=True)
        loss = loss + _loss_matrix(n, scheme.decays, absorb, reverse=True)
    return jumps.tocsr(), loss, gamma


def build_liouvillian(scheme: LevelScheme, cfg: CoarseGrainConfig, drive: Optional[DriveConfig] = None,
                      cross_damping: bool = True, cross_shift: bool = False) -> Liouvillian:
    """Full generator for one drive setting and one pair of toggles."""
    drive = drive if drive is not None else DriveConfig()
    jumps, loss, gamma = build_dissipator(scheme, cfg, cross_damping)
    empty = sp.csr_matrix((scheme.dim**2, scheme.dim**2), dtype=complex)
    base = Liouvillian(scheme, empty, np.zeros((scheme.dim,) * 2, complex), loss, jumps, gamma, cfg,
                       cross_damping, cross_shift)
    return base.with_drive(drive)


# --- time evolution ------------------------------------------------------------------

def _check_state(rho: np.ndarray, t: float, trace_tol: float, positivity_tol: float) -> None:
    tr = np.trace(rho)
    if abs(tr - 1) > trace_tol:
        raise EvolutionError(f"trace drifted to {tr} at t={t:g} s", time=t, trace=tr)
    herm = 0.5 * (rho + rho.conj().T)
    lo = np.linalg.eigvalsh(herm)[0]
    if lo < -positivity_tol:
        raise EvolutionError(f"negative eigenvalue {lo:.3g} at t={t:g} s", time=t, eigenvalue=lo)


def evolve(L: Liouvillian, rho0: DensityMatrix, t: float, t_eval: Optional[Sequence[float]] = None,
           rtol: float = 1e-10, atol: float = 1e-13, check: bool = True):
    """Integrate d rho/dt = L rho with an adaptive 8th-order Runge-Kutta scheme.

    Returns the state at ``t``; with ``t_eval`` a list of states at those times.
    Trace and positivity are checked at every returned time (tolerance 1e-9).
    """
    if t < 0:
        raise ValueError("t must be >= 0")
    n = L.dim
    if t == 0:
        return DensityMatrix(rho0.data.copy()) if t_eval is None else [DensityMatrix(rho0.data.copy())]
    matrix = L.matrix
    times = np.asarray(t_eval if t_eval is not None else [t], dtype=float)
    sol = solve_ivp(lambda _t, y: matrix @ y, (0.0, t), rho0.vec().astype(complex), method="DOP853",
                    t_eval=times, rtol=rtol, atol=atol)
    if not sol.success:
        raise EvolutionError(f"integrator failed: {sol.message}", t_reached=float(sol.t[-1]) if sol.t.size else 0.0,
                             nfev=sol.nfev)
    states = []
    for k, tk in enumerate(sol.t):
        rho = sol.y[:, k].reshape(n, n)
        rho = 0.5 * (rho + rho.conj().T)
        if check:
            _check_state(rho, tk, 1e-9, 1e-9)
        states.append(DensityMatrix(rho))
    return states[-1] if t_eval is None else states


def steady_state(L: Liouvillian) -> DensityMatrix:
    """Unique trace-one null vector of a closed (non-leaking) generator."""
    n = L.dim
    m = L.matrix.toarray()
    trace_row = np.zeros(n * n, dtype=complex)
    trace_row[:: n + 1] = 1.0
    scale = np.max(np.abs(m))
    a = np.vstack([m / scale, trace_row])
    b = np.zeros(n * n + 1, dtype=complex)
    b[-1] = 1.0
    x, *_ = np.linalg.lstsq(a, b, rcond=None)
    residual = np.linalg.norm(a @ x - b)
    if residual > 1e-8:
        raise EvolutionError(f"no steady state (residual {residual:.3g})", residual=residual)
    rho = x.reshape(n, n)
    return DensityMatrix(0.5 * (rho + rho.conj().T))


# --- quasi-steady state ---------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class QuasiSteadyResult:
    rho: DensityMatrix
    active_block: np.ndarray     # density matrix over scheme.active_indices at the observation time
    slow_rate: complex           # slowest eigenvalue of the restricted generator (rad/s)
    mismatch: float              # relative excited-block difference to the slow-mode solution


FEEDBACK_TOL = 1e-9   # relative to gamma_tot


def _closed_active_block(L: Liouvillian) -> bool:
    """True when no jump or thermal term feeds the non-sink block beyond FEEDBACK_TOL * gamma_tot.

    Blackbody absorption out of the n=3 sinks is ~1e-11 gamma_tot at room
    temperature; over the observation window it moves a fraction ~1e-12 of
    the population and is neglected on this path.
    """
    n = L.dim
    active = np.array(L.scheme.active_indices)
    sinks = np.array(L.scheme.sink_indices)
    if sinks.size == 0:
        return False
    pairs_active = (active[:, None] * n + active[None, :]).ravel()
    jumps = L.jumps.tocsr()[pairs_active, :]
    tiny = FEEDBACK_TOL * L.scheme.gamma_tot
    if jumps.nnz and np.max(np.abs(jumps.data)) > tiny:
        return False
    sink_loss = L.loss[np.ix_(sinks, sinks)]
    return not np.any(np.abs(sink_loss) > tiny)


def _integral_weights(lam: np.ndarray, t: float) -> np.ndarray:
    """int_0^t exp(-i (lam_k - conj(lam_l)) s) ds for all k, l."""
    z = 1j * (lam[:, None] - lam.conj()[None, :])
    zt = z * t
    out = np.empty_like(z)
    small = np.abs(zt) < 1e-8
    out[small] = t * (1 - zt[small] / 2)
    out[~small] = -np.expm1(-zt[~small]) / z[~small]
    return out


class ActiveBlockPropagator:
    """Exact propagation of the driven and excited states for a detuning scan.

    Nothing returns from the sinks, so the non-sink block stays a pure,
    unnormalized amplitude evolving under the non-Hermitian effective
    Hamiltonian ``K(delta) = K(0) - delta * P_excited``.
    """

    def __init__(self, L: Liouvillian):
        if not _closed_active_block(L):
            raise ValueError("sink states feed back into the driven/excited block")
        scheme = L.scheme
        self.liouvillian = L
        self.active = list(scheme.active_indices)
        self.start = self.active.index(scheme.driven_index)
        self.excited = [self.active.index(i) for i in scheme.excited_indices]
        detuning = L.drive.detuning if L.drive is not None else 0.0
        k_eff = L.effective_hamiltonian[np.ix_(self.active, self.active)]
        proj = np.zeros(len(self.active))
        proj[self.excited] = 1.0
        self.k0 = k_eff + detuning * np.diag(proj)
        self.proj = proj
        self.gamma_tot = scheme.gamma_tot

    def effective_hamiltonian(self, detuning: float) -> np.ndarray:
        return self.k0 - detuning * np.diag(self.proj)

    def _modes(self, detuning: float):
        lam, vecs = np.linalg.eig(self.effective_hamiltonian(detuning))
        start = np.zeros(len(self.active), dtype=complex)
        start[self.start] = 1.0
        return lam, vecs, np.linalg.solve(vecs, start)

    def amplitude(self, detuning: float, t: float) -> np.ndarray:
        lam, vecs, coeffs = self._modes(detuning)
        return vecs @ (coeffs * np.exp(-1j * lam * t))

    def block(self, detuning: float, t: float) -> np.ndarray:
        psi = self.amplitude(detuning, t)
        return np.outer(psi, psi.conj())

    def integrated_block(self, detuning: float, t: float) -> np.ndarray:
        """int_0^t of the active block."""
        lam, vecs, coeffs = self._modes(detuning)
        weighted = coeffs[:, None] * coeffs.conj()[None, :] * _integral_weights(lam, t)
        return vecs @ weighted @ vecs.conj().T

    def restricted_generator(self, detuning: float) -> np.ndarray:
        """Dense generator on the active block: rho -> -i (K rho - rho K^dagger)."""
        k = self.effective_hamiltonian(detuning)
        eye = np.eye(k.shape[0])
        return -1j * (np.kron(k, eye) - np.kron(eye, k.conj()))

    def slow_mode(self, detuning: float, t: float):
        """Active block from the slowest eigenmode of the restricted generator alone.

        With the driven-state population component of the right and left
        eigenvectors fixed to 1, the remaining components solve
        ``(M_rest - mu) r = -M_rest,driven``; the eigenvalue ``mu`` is
        iterated to self-consistency.  Small excited-state components keep
        full relative precision this way.
        """
        m = self.restricted_generator(detuning)
        size = len(self.active)
        pivot = self.start * size + self.start
        rest = np.array([k for k in range(size * size) if k != pivot])
        m_rr = m[np.ix_(rest, rest)]
        col = m[rest, pivot]
        row = m[pivot, rest]
        mu = m[pivot, pivot]
        eye = np.eye(rest.size)
        for _ in range(20):
            lu = sla.lu_factor(m_rr - mu * eye)
            right = -sla.lu_solve(lu, col)
            mu_new = m[pivot, pivot] + row @ right
            done = abs(mu_new - mu) <= 1e-15 * self.gamma_tot
            mu = mu_new
            if done:
                break
        lu = sla.lu_factor(m_rr - mu * eye)
        right = -sla.lu_solve(lu, col)
        left = -sla.lu_solve(lu, row, trans=1)       # row vector: l^T (M_rr - mu) = -row
        norm = 1.0 + left @ right
        vec = np.empty(size * size, dtype=complex)
        vec[pivot] = 1.0
        vec[rest] = right
        return (np.exp(mu * t) / norm * vec).reshape(size, size), mu

    def mismatch(self, detuning: float, t: float, block: Optional[np.ndarray] = None):
        """Relative excited-block difference between exact propagation and the slow mode."""
        block = self.block(detuning, t) if block is None else block
        slow, mu = self.slow_mode(detuning, t)
        ex = np.ix_(self.excited, self.excited)
        ref = block[ex]
        diff = np.linalg.norm(slow[ex] - ref)
        scale = np.linalg.norm(ref)
        return (float(diff / scale) if scale > 0 else float(diff)), mu

    def excited_block(self, detuning: float, t: float, verify: bool = False, tolerance: float = 1e-6) -> np.ndarray:
        block = self.block(detuning, t)
        if verify:
            err, _ = self.mismatch(detuning, t, block)
            if err > tolerance:
                raise EvolutionError(f"time evolution and slow-mode solve disagree by {err:.3g} "
                                     f"at detuning {detuning:.6g} rad/s", mismatch=err, detuning=detuning)
        return block[np.ix_(self.excited, self.excited)]


def quasi_steady_state(L: Liouvillian, drive: Optional[DriveConfig] = None, t: Optional[float] = None,
                       verify: bool = True, tolerance: float = 1e-6) -> DensityMatrix:
    """Density matrix after the observation window, starting in the driven state.

    When nothing feeds back into the driven and excited states their block is
    propagated exactly (see :class:`ActiveBlockPropagator`) and the sink
    block follows from its time integral.  With ``verify`` the excited block
    is compared with the slowest mode of the restricted generator; a
    mismatch beyond ``tolerance`` raises :class:`EvolutionError`.  Other
    generators fall back to Runge-Kutta.
    """
    return quasi_steady(L, drive, t, verify, tolerance).rho


def quasi_steady(L: Liouvillian, drive: Optional[DriveConfig] = None, t: Optional[float] = None,
                 verify: bool = True, tolerance: float = 1e-6) -> QuasiSteadyResult:
    """Same as :func:`quasi_steady_state` with the diagnostics attached."""
    if drive is not None:
        L = L.with_drive(drive)
    scheme = L.scheme
    t = OBSERVATION_TIME / scheme.gamma_tot if t is None else t
    n = scheme.dim
    if not _closed_active_block(L):
        rho = evolve(L, DensityMatrix.pure(scheme.driven_index, n), t)
        active = scheme.active_indices
        return QuasiSteadyResult(rho, rho.data[np.ix_(active, active)], complex("nan"), 0.0)

    prop = ActiveBlockPropagator(L)
    detuning = L.drive.detuning if L.drive is not None else 0.0
    active = prop.active
    block = prop.block(detuning, t)
    full = np.zeros((n, n), dtype=complex)
    full[np.ix_(active, active)] = prop.integrated_block(detuning, t)
    fed = L.apply(full)
    rho = np.zeros((n, n), dtype=complex)
    rho[np.ix_(active, active)] = block
    sinks = scheme.sink_indices
    rho[np.ix_(sinks, sinks)] = fed[np.ix_(sinks, sinks)]
    rho = 0.5 * (rho + rho.conj().T)

    mismatch, mu = 0.0, complex("nan")
    if verify:
        mismatch, mu = prop.mismatch(detuning, t, block)
        if mismatch > tolerance:
            raise EvolutionError(f"time evolution and slow-mode solve disagree by {mismatch:.3g}",
                                 mismatch=mismatch, detuning=detuning)
    return QuasiSteadyResult(DensityMatrix(rho), block, mu, mismatch)
