import math

import numpy as np
import pytest
from scipy.optimize import brentq, minimize_scalar

from crossdamp.detection import Full4Pi, StripeTheta, emission_tensor
from crossdamp.liouvillian import DriveConfig
from crossdamp.spectra import (
    FitError,
    LinePullingResult,
    Spectrum,
    SweepRow,
    compute_blocks,
    default_grid,
    fine_structure_offset,
    fit_double_lorentzian,
    fit_jentschura,
    geometry_sweep,
    jentschura_shift,
    line_pulling,
    sweep_spectrum,
    write_spectrum_csv,
    write_svg,
    write_sweep_csv,
)

TWO_PI = 2 * math.pi
SPLIT = 1364.26e6          # Hz


def lorentz(x, center, fwhm, area):
    return area / math.pi * (fwhm / 2) / ((x - center) ** 2 + fwhm**2 / 4)


def synthetic(x1, x2, b1=12.9e6, b2=12.9e6, a1=1.0e13, a2=2.0e13, omega0=SPLIT, noise=0.0, seed=0):
    x = np.concatenate([np.linspace(-300e6, 300e6, 1201), omega0 + np.linspace(-300e6, 300e6, 1201)])
    y = lorentz(x, x1, b1, a1) + lorentz(x, omega0 + x2, b2, a2)
    if noise:
        y *= 1 + noise * np.random.default_rng(seed).normal(size=y.size)
    return Spectrum(TWO_PI * x, y, {"omega0_hz": omega0, "resonances_hz": (0.0, omega0), "gamma_tot_hz": 12.9e6})


def test_default_grid_layout(scheme):
    grid = default_grid(scheme)
    assert grid.size == 2 * 4001
    assert np.all(np.diff(grid) > 0)
    offset = fine_structure_offset(scheme)
    assert np.any(grid == 0.0)
    assert np.min(np.abs(grid - offset)) == 0.0
    assert grid[0] == pytest.approx(-30 * scheme.gamma_tot)
    with pytest.raises(ValueError):
        default_grid(scheme, points=2)


def test_spectrum_validation():
    with pytest.raises(ValueError):
        Spectrum(np.array([0.0, 1.0]), np.array([1.0]))
    with pytest.raises(ValueError):
        Spectrum(np.array([1.0, 0.0]), np.array([1.0, 1.0]))
    with pytest.raises(ValueError):
        Spectrum(np.array([0.0, 1.0]), np.array([1.0, -1.0]))
    s = synthetic(0.0, 0.0)
    w = s.window(0.0, TWO_PI * 50e6)
    assert np.all(np.abs(w.detunings_hz) <= 50e6)


@pytest.mark.parametrize("x1, x2", [(0.0, 0.0), (25e3, -40e3), (-1.2e6, 0.8e6)])
def test_double_lorentzian_recovers_centers(x1, x2):
    fit = fit_double_lorentzian(synthetic(x1, x2))
    assert fit.x1 == pytest.approx(x1, abs=1e-3)
    assert fit.x2 == pytest.approx(x2, abs=1e-3)
    assert fit.b1 == pytest.approx(12.9e6, rel=1e-9)
    assert fit.a2 == pytest.approx(2.0e13, rel=1e-9)
    assert fit.residual < 1e-10
    x = np.array([0.0, SPLIT])
    assert np.allclose(fit(x), lorentz(x, x1, 12.9e6, 1e13) + lorentz(x, SPLIT + x2, 12.9e6, 2e13), rtol=1e-8)


def test_double_lorentzian_tolerates_noise():
    fit = fit_double_lorentzian(synthetic(5e3, -5e3, noise=1e-4, seed=4))
    assert abs(fit.x1 - 5e3) < 2e3 and abs(fit.x2 + 5e3) < 2e3


def test_double_lorentzian_rejects_degenerate_input():
    x = np.linspace(-300e6, 1700e6, 4001)
    single = Spectrum(TWO_PI * x, lorentz(x, 0.0, 12.9e6, 1e13), {"omega0_hz": SPLIT})
    with pytest.raises(FitError):
        fit_double_lorentzian(single)
    with pytest.raises(FitError):
        fit_double_lorentzian(Spectrum(TWO_PI * x, np.zeros_like(x), {"omega0_hz": SPLIT}))
    with pytest.raises(ValueError):
        fit_double_lorentzian(Spectrum(TWO_PI * x, lorentz(x, 0.0, 12.9e6, 1e13)))


def test_line_pulling_is_difference_of_fits():
    res = line_pulling(synthetic(30e3, -12e3), synthetic(0.0, 0.0))
    assert res.definition == "fit-difference"
    assert res.pulling_P12 == pytest.approx(30e3, abs=1e-3)
    assert res.pulling_P32 == pytest.approx(-12e3, abs=1e-3)
    other = synthetic(0.0, 0.0)
    shifted = Spectrum(other.detunings * 1.0001, other.rates, other.metadata)
    with pytest.raises(ValueError):
        line_pulling(synthetic(0.0, 0.0), shifted)


def test_line_pulling_result_validation():
    with pytest.raises(ValueError):
        LinePullingResult(float("nan"), 0.0, "fit-difference")
    with pytest.raises(ValueError):
        LinePullingResult(0.0, 0.0, "centroid")


def model_curve(C, g, a, b):
    def f(x):
        den = x * x + g * g / 4
        return C / den + a * x + b * x / den
    return f


G = 12.9e6
ASYM = [(1e-4 / G, 0.0), (0.0, 1e-3 * G), (-1e-4 / G, 1e-3 * G)]


@pytest.mark.parametrize("a, b", ASYM)
def test_resonance_fit_recovers_parameters(a, b):
    C = G * G / 4
    x = np.linspace(-10 * G, 10 * G, 2001)
    f = model_curve(C, G, a, b)
    fit = fit_jentschura(Spectrum(TWO_PI * x, f(x)), 0.0, half_width_hz=10 * G)
    assert fit.C == pytest.approx(C, rel=1e-8)
    assert fit.width == pytest.approx(G, rel=1e-8)
    assert fit.a == pytest.approx(a, rel=1e-6, abs=1e-12 / G)
    assert fit.b == pytest.approx(b, rel=1e-6, abs=1e-9 * G)


@pytest.mark.parametrize("a, b", ASYM)
def test_resonance_fit_shift_formulas_match_curve(a, b):
    # the closed-form shifts are first order in the asymmetry; compare with the curve itself
    f = model_curve(G * G / 4, G, a, b)
    x = np.linspace(-10 * G, 10 * G, 2001)
    fit = fit_jentschura(Spectrum(TWO_PI * x, f(x)), 0.0, half_width_hz=10 * G)
    peak = minimize_scalar(lambda v: -f(v), bracket=(-G, 0.0, G), tol=1e-14).x
    assert fit.shift_max == pytest.approx(peak, rel=1e-3)
    top = f(peak)
    lo = brentq(lambda v: f(v) - top / 2, -2 * G, peak, xtol=1e-6)
    hi = brentq(lambda v: f(v) - top / 2, peak, 2 * G, xtol=1e-6)
    assert fit.shift_halfmax == pytest.approx(0.5 * (lo + hi), rel=1e-3)


def test_resonance_fit_errors():
    x = np.linspace(-1e8, 1e8, 5)
    with pytest.raises(FitError):
        fit_jentschura(Spectrum(TWO_PI * x, np.ones(5)), 0.0, half_width_hz=1e8)
    with pytest.raises(ValueError):
        fit_jentschura(Spectrum(TWO_PI * x, np.ones(5)), 0.0)
    with pytest.raises(ValueError):
        jentschura_shift(synthetic(0.0, 0.0), 3)


def test_symmetric_line_has_no_resonance_shift():
    x = np.linspace(-300e6, 300e6, 1201)
    spec = Spectrum(TWO_PI * x, lorentz(x, 0.0, G, 1e13), {"resonances_hz": (0.0, SPLIT), "gamma_tot_hz": G})
    half, top = jentschura_shift(spec, 1)
    assert abs(half) < 1e-6 and abs(top) < 1e-6


def test_neighbouring_line_tail_gives_small_shift():
    # the far line adds a slope under each peak; the shift it causes is tiny but not zero
    half, _ = jentschura_shift(synthetic(0.0, 0.0), 1)
    assert 0 < abs(half) < 1e-6 * SPLIT


@pytest.fixture(scope="module")
def small_grid(scheme):
    return default_grid(scheme, points=121, half_width=6.0)


def test_blocks_independent_of_thread_count(scheme, cg_cfg, small_grid):
    one = compute_blocks(scheme, cg_cfg, DriveConfig(), small_grid, threads=1)
    two = compute_blocks(scheme, cg_cfg, DriveConfig(), small_grid, threads=3)
    assert np.array_equal(one.blocks, two.blocks)
    assert one.max_mismatch <= 1e-6
    with pytest.raises(ValueError):
        compute_blocks(scheme, cg_cfg, DriveConfig(), [])


def test_spectrum_peaks_on_both_resonances(scheme, cg_cfg, small_grid):
    spec = sweep_spectrum(scheme, DriveConfig(), StripeTheta(math.pi / 2), cg_cfg, small_grid, threads=1)
    offset = fine_structure_offset(scheme)
    lower = spec.detunings < offset / 2
    assert abs(spec.detunings[lower][np.argmax(spec.rates[lower])]) < 0.11 * scheme.gamma_tot
    assert abs(spec.detunings[~lower][np.argmax(spec.rates[~lower])] - offset) < 0.11 * scheme.gamma_tot
    assert spec.metadata["region"] == {"kind": "stripe", "theta_rad": math.pi / 2, "width_rad": 0.01}


def test_full_sphere_spectrum_ignores_toggle(scheme, cg_cfg, small_grid):
    on = compute_blocks(scheme, cg_cfg, DriveConfig(), small_grid, True, threads=1)
    off = compute_blocks(scheme, cg_cfg, DriveConfig(), small_grid, False, threads=1)
    s_on = on.spectrum(emission_tensor(scheme, cg_cfg, True), Full4Pi())
    s_off = off.spectrum(emission_tensor(scheme, cg_cfg, False), Full4Pi())
    # cross terms still reshape the populations, so only the emission step is toggle free
    s_mixed = on.spectrum(emission_tensor(scheme, cg_cfg, False), Full4Pi())
    assert np.allclose(s_on.rates, s_mixed.rates, rtol=1e-10, atol=0)
    assert s_off.rates.max() > 0


def test_geometry_sweep_rows(scheme, cg_cfg, small_grid):
    rows = geometry_sweep(scheme, cg_cfg, "stripe", [0.3, math.pi / 2], grid=small_grid, threads=1)
    assert [r.value for r in rows] == [0.3, math.pi / 2]
    assert all(isinstance(r, SweepRow) for r in rows)
    # on the equator the two lines are pulled in opposite directions
    eq = rows[1].result
    assert eq.pulling_P12 * eq.pulling_P32 < 0
    with pytest.raises(ValueError):
        geometry_sweep(scheme, cg_cfg, "sphere", [1.0], grid=small_grid)


def test_csv_and_svg_writers(tmp_path):
    spec = synthetic(0.0, 0.0)
    path = tmp_path / "s.csv"
    write_spectrum_csv(path, spec)
    raw = path.read_bytes()
    assert raw.startswith(b"detuning_hz,rate_per_s\r\n")
    lines = raw.decode().split("\r\n")
    assert float(lines[1].split(",")[0]) == spec.detunings_hz[0]
    assert float(lines[1].split(",")[1]) == spec.rates[0]        # repr floats round-trip exactly
    rows = [SweepRow(0.5, LinePullingResult(1.5, -2.5, "fit-difference"))]
    write_sweep_csv(tmp_path / "w.csv", "theta_rad", rows)
    assert (tmp_path / "w.csv").read_text().splitlines()[1] == "0.5,1.5,-2.5,fit-difference,0.0"
    write_svg(tmp_path / "p.svg", [0, 1, 2], {"a<b": [1, 2, 3]}, "x", "y", "t&t")
    text = (tmp_path / "p.svg").read_text()
    assert text.startswith("<svg") and "a&lt;b" in text and "t&amp;t" in text
