import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from crossdamp.coefficients import CoarseGrainConfig
from crossdamp.hydrogen import restrict
from crossdamp.liouvillian import (
    ActiveBlockPropagator,
    DensityMatrix,
    DriveConfig,
    EvolutionError,
    build_hamiltonian,
    build_liouvillian,
    drive_couplings,
    evolve,
    quasi_steady,
    quasi_steady_state,
    steady_state,
)
from crossdamp.spectra import fine_structure_offset
from oracles import three_level_bloch

T_OBS = 500


@pytest.fixture(scope="module")
def generator(scheme, cg_cfg):
    return build_liouvillian(scheme, cg_cfg, DriveConfig())


def random_density(n, rng):
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    rho = a @ a.conj().T
    return rho / np.trace(rho)


def test_hamiltonian_structure(scheme):
    h = build_hamiltonian(scheme, DriveConfig(detuning=0.0))
    assert np.allclose(h, h.conj().T, atol=0)
    assert h[scheme.reference_index, scheme.reference_index] == 0.0
    g = scheme.driven_index
    driven = [e for e in scheme.excited_indices if h[e, g] != 0]
    assert all(scheme.states[e].M_F.twice_value == 0 for e in driven)     # z polarization: dM = 0
    assert max(abs(h[e, g]) for e in driven) == pytest.approx(0.5e-3 * scheme.gamma_tot, rel=1e-14)


def test_hamiltonian_fine_structure_crossing(scheme):
    e = scheme.index("4P3/2 F=1 M=0")
    offset = fine_structure_offset(scheme)
    h = build_hamiltonian(scheme, DriveConfig(detuning=offset))
    assert abs(h[e, e]) <= 1e-6 * offset
    assert offset / (2 * math.pi) == pytest.approx(1364.26e6, rel=1e-4)


def test_circular_polarization_drives_delta_m():
    drive = DriveConfig(polarization=(1 / math.sqrt(2), 1j / math.sqrt(2), 0), propagation=(0, 0, 1))
    from crossdamp.hydrogen import build_level_scheme
    sch = build_level_scheme()
    couplings = drive_couplings(sch, drive)
    assert {sch.states[e].M_F.twice_value for e in couplings} == {2}


def test_drive_config_rejects_parallel_polarization():
    with pytest.raises(ValueError):
        DriveConfig(polarization=(1, 0, 0), propagation=(1, 0, 0))
    with pytest.warns(UserWarning):
        DriveConfig(rabi_scale=0.1)


def test_trace_annihilating_and_hermiticity_preserving(generator):
    rng = np.random.default_rng(1)
    n = generator.dim
    for _ in range(5):
        x = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        out = generator.apply(x)
        scale = np.abs(out).max()
        assert abs(np.trace(out)) <= 1e-12 * scale
        assert np.abs(generator.apply(x.conj().T) - out.conj().T).max() <= 1e-12 * scale
    mixed = DensityMatrix.maximally_mixed(n)
    assert abs(np.trace(generator.apply(mixed.data))) <= 1e-12 * np.abs(generator.apply(mixed.data)).max()


def test_no_nonsecular_terms(scheme, cg_cfg):
    # the drive-free generator commutes with a phase rotation of the excited states;
    # any sigma sigma or sigma^dagger sigma^dagger term would pick up twice the phase
    L = build_liouvillian(scheme, cg_cfg, DriveConfig(rabi_scale=0.0))
    phase = np.ones(scheme.dim, dtype=complex)
    phase[scheme.excited_indices] = np.exp(0.7j)
    u = np.diag(phase)
    rng = np.random.default_rng(2)
    x = rng.normal(size=(scheme.dim,) * 2) + 1j * rng.normal(size=(scheme.dim,) * 2)
    lhs = L.apply(u @ x @ u.conj().T)
    rhs = u @ L.apply(x) @ u.conj().T
    assert np.abs(lhs - rhs).max() <= 1e-12 * np.abs(rhs).max()


@pytest.mark.parametrize("cross", [True, False])
def test_free_decay_is_exponential(scheme, cg_cfg, cross):
    L = build_liouvillian(scheme, cg_cfg, DriveConfig(rabi_scale=0.0), cross_damping=cross)
    e = scheme.index("4P3/2 F=2 M=1")
    times = np.array([0.5, 1.0, 2.0, 4.0]) / scheme.gamma_tot
    states = evolve(L, DensityMatrix.pure(e, scheme.dim), times[-1], t_eval=times)
    rate = scheme.total_decay_rates()[e]
    for t, rho in zip(times, states):
        assert rho.data[e, e].real == pytest.approx(math.exp(-rate * t), rel=1e-6)


def test_evolve_identity_at_zero(generator, scheme):
    rho0 = DensityMatrix.pure(scheme.driven_index, scheme.dim)
    assert np.array_equal(evolve(generator, rho0, 0.0).data, rho0.data)
    with pytest.raises(ValueError):
        evolve(generator, rho0, -1.0)


def test_evolution_keeps_trace_and_positivity(generator, scheme):
    rng = np.random.default_rng(3)
    rho0 = DensityMatrix(random_density(scheme.dim, rng))
    times = np.linspace(0, 10 / scheme.gamma_tot, 11)
    for rho in evolve(generator, rho0, times[-1], t_eval=times):
        assert abs(rho.trace() - 1) < 1e-9
        assert rho.min_eigenvalue() >= -1e-9


def test_drive_off_leaves_driven_state(scheme, cg_cfg):
    L = build_liouvillian(scheme, cg_cfg, DriveConfig(rabi_scale=0.0))
    rho = quasi_steady_state(L)
    assert rho.data[scheme.driven_index, scheme.driven_index] == pytest.approx(1.0, abs=1e-15)


def test_quasi_steady_matches_runge_kutta_at_short_time(scheme, cg_cfg):
    cfg = CoarseGrainConfig(temperature=0.0)
    L = build_liouvillian(scheme, cfg, DriveConfig(detuning=0.3 * scheme.gamma_tot))
    t = 20 / scheme.gamma_tot
    fast = quasi_steady(L, t=t, verify=False).rho.data
    slow = evolve(L, DensityMatrix.pure(scheme.driven_index, scheme.dim), t, rtol=1e-12, atol=1e-16).data
    ex = np.ix_(scheme.excited_indices, scheme.excited_indices)
    assert np.linalg.norm(fast[ex] - slow[ex]) <= 1e-6 * np.linalg.norm(slow[ex])
    assert np.abs(fast - slow).max() <= 1e-9


@pytest.mark.parametrize("detuning", [0.0, 3.0, -10.0, 30.0])
def test_exact_path_agrees_with_slow_mode(generator, scheme, detuning):
    result = quasi_steady(generator, DriveConfig(detuning=detuning * scheme.gamma_tot))
    assert result.mismatch <= 1e-6
    assert abs(result.rho.trace() - 1) < 1e-9
    assert result.rho.min_eigenvalue() >= -1e-9


def test_populations_settled_at_observation_time(generator, scheme):
    prop = ActiveBlockPropagator(generator)
    t = T_OBS / scheme.gamma_tot
    block = prop.block(0.0, t)
    deriv = (prop.restricted_generator(0.0) @ block.ravel()).reshape(block.shape)
    pops = np.diag(block)[prop.excited].real
    rates = np.diag(deriv)[prop.excited].real
    big = pops > 1e-3 * pops.max()
    assert np.all(np.abs(rates[big]) < 1e-6 * scheme.gamma_tot * pops[big])


def test_reference_population_peaks_on_resonance(generator, scheme):
    prop = ActiveBlockPropagator(generator)
    t = T_OBS / scheme.gamma_tot
    k = prop.active.index(scheme.reference_index)
    scan = [prop.block(d * scheme.gamma_tot, t)[k, k].real for d in np.linspace(-3, 3, 61)]
    assert int(np.argmax(scan)) == 30


def test_weak_drive_scaling(scheme, cg_cfg):
    pops = []
    for scale in (1e-4, 1e-3):
        L = build_liouvillian(scheme, cg_cfg, DriveConfig(rabi_scale=scale))
        rho = quasi_steady_state(L)
        pops.append(sum(rho.data[e, e].real for e in scheme.excited_indices))
    assert math.log(pops[1] / pops[0]) / math.log(10) == pytest.approx(2.0, abs=0.01)


def test_three_level_matches_bloch_equations(scheme):
    sub = restrict(scheme, ["2S1/2 F=0 M=0", "4P1/2 F=1 M=0", "1S1/2 F=0 M=0"])
    cfg = CoarseGrainConfig(temperature=0.0)
    detuning = 0.4 * scheme.gamma_tot
    L = build_liouvillian(sub, cfg, DriveConfig(detuning=detuning), cross_damping=False)
    t = T_OBS / scheme.gamma_tot
    rho = quasi_steady_state(L, t=t).data
    coupling = drive_couplings(sub, DriveConfig())[1]
    assert coupling.imag == 0
    gamma = sub.total_decay_rates()[1]
    ref = three_level_bloch(coupling.real, detuning, gamma, t)
    assert np.linalg.norm(rho - ref) <= 1e-8 * np.linalg.norm(ref)
    assert rho[1, 1].real == pytest.approx(ref[1, 1].real, rel=1e-8)


def test_steady_state_is_the_sink(scheme):
    sub = restrict(scheme, ["2S1/2 F=0 M=0", "4P1/2 F=1 M=0", "1S1/2 F=0 M=0"])
    L = build_liouvillian(sub, CoarseGrainConfig(temperature=0.0), DriveConfig(rabi_scale=1e-2))
    rho = steady_state(L)
    assert rho.populations == pytest.approx([0.0, 0.0, 1.0], abs=1e-10)


def test_scheme_without_decays(scheme):
    sub = restrict(scheme, ["2S1/2 F=0 M=0", "4P1/2 F=1 M=0"])
    L = build_liouvillian(sub, CoarseGrainConfig(temperature=0.0), DriveConfig())
    rho = evolve(L, DensityMatrix.pure(0, 2), 1e-6)
    assert abs(rho.trace() - 1) < 1e-12


def test_leaking_generator_rejected_by_propagator(scheme):
    cfg = CoarseGrainConfig(temperature=3e4)
    L = build_liouvillian(scheme, cfg, DriveConfig())
    with pytest.raises(ValueError):
        ActiveBlockPropagator(L)


@settings(max_examples=10, deadline=None)
@given(st.floats(-30, 30))
def test_quasi_steady_state_is_valid(detuning):
    sch = _scheme()
    L = build_liouvillian(sch, CoarseGrainConfig(), DriveConfig(detuning=detuning * sch.gamma_tot))
    rho = quasi_steady_state(L)
    rho.validate(trace_tol=1e-9, positivity_tol=1e-9)


_CACHE = []


def _scheme():
    if not _CACHE:
        from crossdamp.hydrogen import build_level_scheme
        _CACHE.append(build_level_scheme())
    return _CACHE[0]


def test_evolution_error_carries_details():
    err = EvolutionError("bad", mismatch=2e-6)
    assert err.details == {"mismatch": 2e-6}
