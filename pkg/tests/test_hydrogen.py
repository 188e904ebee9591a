import math

import numpy as np
import pytest
import scipy.constants as sc
from hypothesis import given, settings, strategies as st

from crossdamp.angular import HalfInt
from crossdamp.hydrogen import (
    AtomicState,
    ConfigError,
    ModelConfig,
    build_level_scheme,
    dfrak,
    dipole_matrix_element,
    dirac_energy_hz,
    einstein_a,
    parse_manifold,
    radial_integral,
    restrict,
)
from oracles import radial_quad

H = HalfInt.of


def state(n, L, J, F, M, role="sink"):
    return AtomicState(n, L, H(J), H(F), H(M), 0.0, role)


@pytest.mark.parametrize("pair", [(1, 0, 2, 1), (1, 0, 4, 1), (2, 0, 4, 1), (3, 0, 4, 1), (3, 2, 4, 1),
                                  (2, 1, 3, 2), (4, 3, 5, 2)])
def test_radial_integrals_match_quadrature(pair):
    assert radial_integral(*pair) == pytest.approx(radial_quad(*pair), rel=1e-10)


def test_radial_integral_is_symmetric():
    assert radial_integral(4, 1, 2, 0) == pytest.approx(radial_integral(2, 0, 4, 1), rel=1e-15)


def test_radial_integral_rejects_forbidden():
    with pytest.raises(ValueError):
        radial_integral(1, 0, 3, 0)
    with pytest.raises(ValueError):
        radial_integral(3, 0, 3, 2)


def test_scheme_size(scheme):
    assert scheme.dim == 45
    assert len(scheme.excited_indices) == 12
    assert len(scheme.decays) == 180
    assert len(scheme.probes) == 6
    assert scheme.states[scheme.driven_index].label == "2S1/2 F=0 M=0"
    assert scheme.states[scheme.reference_index].label == "4P1/2 F=1 M=0"


def test_linewidth_of_4p(scheme):
    # 4P lifetime 12.3 ns
    assert scheme.gamma_tot / (2 * math.pi) == pytest.approx(12.94e6, rel=5e-3)
    rates = scheme.total_decay_rates()[scheme.excited_indices]
    assert np.ptp(rates) / rates.mean() < 1e-5


def test_einstein_a_equals_direct_formula(scheme):
    for t in scheme.decays[:20]:
        d2 = float(np.sum(np.abs(t.dipole) ** 2)) * (sc.e * sc.physical_constants["Bohr radius"][0]) ** 2
        want = t.omega**3 * d2 / (3 * math.pi * sc.epsilon_0 * sc.hbar * sc.c**3)
        assert einstein_a(t) == pytest.approx(want, rel=1e-12)


def test_2p_1s_rate():
    up = AtomicState(2, 1, H(0.5), H(1), H(0), 2 * math.pi * 2.466e15, "excited")
    total = 0.0
    for F in (0, 1):
        for M in range(-F, F + 1):
            low = state(1, 0, 0.5, F, M)
            d = dipole_matrix_element(low, up)
            total += float(np.sum(np.abs(d) ** 2))
    # |<1s|r|2p>|^2 / 3 summed over the lower multiplet
    assert total == pytest.approx(radial_quad(1, 0, 2, 1) ** 2 / 3, rel=1e-12)


def test_fine_structure_energy():
    # leading-order Dirac splitting alpha^2 Ry / n^3 * (1/(j1+1/2) - 1/(j2+1/2)) with reduced mass
    m_red = sc.m_e * sc.m_p / (sc.m_e + sc.m_p)
    lead = sc.alpha**2 * sc.Rydberg * sc.c * (m_red / sc.m_e) / 64 * (1 - 0.5)
    assert dirac_energy_hz(4, 1.5) - dirac_energy_hz(4, 0.5) == pytest.approx(lead, rel=1e-4)


def test_energy_to_order_alpha_squared():
    m_red = sc.m_e * sc.m_p / (sc.m_e + sc.m_p)
    ry = sc.Rydberg * sc.c * (m_red / sc.m_e)

    def level(n, j):
        return -ry / n**2 * (1 + sc.alpha**2 / n**2 * (n / (j + 0.5) - 0.75))

    assert dirac_energy_hz(4, 0.5) - dirac_energy_hz(2, 0.5) == pytest.approx(level(4, 0.5) - level(2, 0.5), rel=1e-8)


def test_dipole_selection_rules():
    s = state(2, 0, 0.5, 0, 0)
    assert not np.any(dipole_matrix_element(s, state(3, 0, 0.5, 1, 0, "excited")))    # same parity
    assert not np.any(dipole_matrix_element(state(3, 2, 2.5, 3, 0), state(4, 1, 0.5, 1, 0, "excited")))  # dJ = 2
    d = dipole_matrix_element(s, state(4, 1, 0.5, 1, 1, "excited"))
    assert d[0] != 0 and d[1] == 0 and d[2] == 0    # M_lower = M_upper + q


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(["1S1/2", "2S1/2", "3S1/2", "3D3/2"]), st.sampled_from([(0.5, 0), (0.5, 1), (1.5, 1), (1.5, 2)]),
       st.data())
def test_decay_rate_independent_of_upper_projection(lower, jf, data):
    J, F = jf
    M1 = data.draw(st.integers(-F, F))
    M2 = data.draw(st.integers(-F, F))
    e1, e2 = state(4, 1, J, F, M1, "excited"), state(4, 1, J, F, M2, "excited")
    assert dfrak(e1, e1, lower) == pytest.approx(dfrak(e2, e2, lower), rel=1e-12)


def test_same_n_cross_terms_vanish(scheme):
    excited = [scheme.states[i] for i in scheme.excited_indices]
    diag = max(dfrak(e, e, "1S1/2") for e in excited)
    for lower in ("1S1/2", "2S1/2", "3S1/2", "3D3/2", "3D5/2"):
        for e in excited:
            for e2 in excited:
                if e2 is not e:
                    assert abs(dfrak(e, e2, lower)) <= 1e-12 * diag


def test_sink_copy_labels(scheme):
    assert scheme.index("2S1/2* F=1 M=0") != scheme.index("2S1/2 F=0 M=0")
    assert all(t.lower.role == "sink" for t in scheme.decays)


def test_parse_manifold():
    assert parse_manifold("3D5/2") == (3, 2, HalfInt(5))
    assert parse_manifold("2S1/2*") == (2, 0, HalfInt(1))


@pytest.mark.parametrize("field, value", [("fine_structure_4p_hz", -1.0), ("hyperfine_2s_hz", None),
                                          ("gamma_scale", 0.0), ("sink_manifolds", ("5F",))])
def test_invalid_model_config_names_field(field, value):
    cfg = ModelConfig(**{field: value})
    with pytest.raises(ConfigError) as err:
        cfg.validate()
    assert err.value.field == f"model.{field}"


def test_restricted_scheme(scheme):
    sub = restrict(scheme, ["2S1/2 F=0 M=0", "4P1/2 F=1 M=0", "1S1/2 F=0 M=0"])
    assert sub.dim == 3 and len(sub.decays) == 1 and len(sub.probes) == 1
    assert sub.decays[0].upper_index == 1 and sub.decays[0].lower_index == 2
    with pytest.raises(ValueError):
        restrict(scheme, ["4P1/2 F=1 M=0", "1S1/2 F=0 M=0"])


def test_fewer_sinks_change_linewidth():
    partial = build_level_scheme(ModelConfig(sink_manifolds=("1S",)))
    full = build_level_scheme()
    assert partial.gamma_tot < full.gamma_tot
    assert len(partial.decays) < len(full.decays)
