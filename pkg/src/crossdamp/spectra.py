"""Detuning scans, line-shape fits and line-pulling extraction."""
from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy.integrate import trapezoid
from scipy.optimize import least_squares

from .coefficients import CoarseGrainConfig
from .detection import (
    DetectionRegion,
    EmissionTensor,
    InvertedDoubleConeZ,
    StripeTheta,
    ConeAboutY,
    DoubleConeZ,
    emission_tensor,
    region_to_dict,
)
from .hydrogen import LevelScheme
from .liouvillian import (
    OBSERVATION_TIME,
    ActiveBlockPropagator,
    DriveConfig,
    EvolutionError,
    build_liouvillian,
    quasi_steady,
)

__all__ = [
    "Spectrum",
    "DoubleLorentzianFit",
    "JentschuraFit",
    "LinePullingResult",
    "FitError",
    "ExcitedBlocks",
    "default_grid",
    "fine_structure_offset",
    "compute_blocks",
    "sweep_spectrum",
    "fit_double_lorentzian",
    "line_pulling",
    "fit_jentschura",
    "jentschura_shift",
    "jentschura_pulling",
    "geometry_sweep",
    "tau_c_sweep",
    "write_spectrum_csv",
    "write_sweep_csv",
    "write_svg",
    "GEOMETRY_FAMILIES",
]

TWO_PI = 2 * math.pi


class FitError(RuntimeError):
    """Line-shape fit failed; ``last`` holds the last parameter vector when available."""

    def __init__(self, message: str, last=None):
        super().__init__(message)
        self.last = last


# --- grids and data containers ------------------------------------------------

def fine_structure_offset(scheme: LevelScheme) -> float:
    """Detuning (rad/s) of the 4P3/2 F=1 M=0 resonance relative to the reference one."""
    upper = next(i for i, s in enumerate(scheme.states)
                 if s.role == "excited" and s.J.twice_value == 3 and s.F.twice_value == 2 and s.M_F.twice_value == 0)
    return scheme.states[upper].energy - scheme.states[scheme.reference_index].energy


def default_grid(scheme: LevelScheme, points: int = 4001, half_width: float = 30.0) -> np.ndarray:
    """Two windows of ``+-half_width`` natural linewidths around both resonances (rad/s)."""
    if points < 3:
        raise ValueError("need at least 3 points per window")
    g = scheme.gamma_tot
    window = np.linspace(-half_width * g, half_width * g, points)
    offset = fine_structure_offset(scheme)
    return np.unique(np.concatenate([window, window + offset]))


@dataclass(frozen=True, eq=False)
class Spectrum:
    detunings: np.ndarray          # rad/s
    rates: np.ndarray              # photons/s
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        d = np.asarray(self.detunings, dtype=float)
        r = np.asarray(self.rates, dtype=float)
        if d.ndim != 1 or d.shape != r.shape:
            raise ValueError("detunings and rates must be 1-D arrays of equal length")
        if d.size < 2 or np.any(np.diff(d) <= 0):
            raise ValueError("detunings must be strictly increasing")
        if np.any(r < -1e-12 * np.max(np.abs(r))):
            raise ValueError("rates must be non-negative")
        object.__setattr__(self, "detunings", d)
        object.__setattr__(self, "rates", r)

    @property
    def detunings_hz(self) -> np.ndarray:
        return self.detunings / TWO_PI

    def window(self, center: float, half_width: float) -> "Spectrum":
        """Sub-spectrum with |detuning - center| <= half_width (rad/s)."""
        keep = np.abs(self.detunings - center) <= half_width
        return Spectrum(self.detunings[keep], self.rates[keep], dict(self.metadata))


@dataclass(frozen=True, eq=False)
class ExcitedBlocks:
    """Excited-state density-matrix blocks over a detuning grid; geometry independent."""

    detunings: np.ndarray
    blocks: np.ndarray             # (len(detunings), k, k)
    cross_damping: bool
    tau_c: float
    max_mismatch: float

    def spectrum(self, tensor: EmissionTensor, region: DetectionRegion, metadata: Optional[dict] = None) -> Spectrum:
        rates = tensor.rates(region, self.blocks)
        meta = {"region": region_to_dict(region), "tau_c_s": self.tau_c, "cross_damping": tensor.cross_damping}
        meta.update(metadata or {})
        return Spectrum(self.detunings, rates, meta)


def _chunks(n: int, parts: int) -> list[range]:
    parts = max(1, min(parts, n))
    edges = np.linspace(0, n, parts + 1).astype(int)
    return [range(edges[k], edges[k + 1]) for k in range(parts)]


def default_threads() -> int:
    env = os.environ.get("CROSSDAMP_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def compute_blocks(scheme: LevelScheme, cfg: CoarseGrainConfig, drive: DriveConfig, grid: Sequence[float],
                   cross_damping: bool = True, cross_shift: bool = False, threads: Optional[int] = None,
                   verify_every: int = 10, t: Optional[float] = None) -> ExcitedBlocks:
    """Excited-state blocks of the quasi-steady state at every detuning in ``grid``.

    Every ``verify_every``-th point (and the last) is cross-checked against
    the slow-mode solve; ``verify_every=1`` checks all of them and ``0``
    none.  Points run concurrently in ``threads`` workers with results kept
    in grid order.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise ValueError("detuning grid is empty")
    L = build_liouvillian(scheme, cfg, drive, cross_damping=cross_damping, cross_shift=cross_shift)
    t = OBSERVATION_TIME / scheme.gamma_tot if t is None else t
    try:
        prop = ActiveBlockPropagator(L)
    except ValueError:
        prop = None
    threads = threads or default_threads()

    def work(indices: range):
        out, worst = [], 0.0
        for k in indices:
            delta = grid[k]
            check = verify_every > 0 and (k % verify_every == 0 or k == grid.size - 1)
            try:
                if prop is None:
                    res = quasi_steady(L, drive.with_detuning(delta), t, verify=False)
                    ex = [scheme.active_indices.index(i) for i in scheme.excited_indices]
                    out.append(res.active_block[np.ix_(ex, ex)])
                    continue
                block = prop.block(delta, t)
                if check:
                    err, _ = prop.mismatch(delta, t, block)
                    worst = max(worst, err)
                    if err > 1e-6:
                        raise EvolutionError(f"time evolution and slow-mode solve disagree by {err:.3g}",
                                             mismatch=err, detuning=delta)
                out.append(block[np.ix_(prop.excited, prop.excited)])
            except EvolutionError as exc:
                exc.details.setdefault("detuning", delta)
                raise
        return out, worst

    parts = _chunks(grid.size, threads)
    if len(parts) == 1:
        results = [work(parts[0])]
    else:
        with ThreadPoolExecutor(max_workers=len(parts)) as pool:
            results = list(pool.map(work, parts))
    blocks = np.array([b for chunk, _ in results for b in chunk])
    worst = max(w for _, w in results)
    return ExcitedBlocks(grid, blocks, cross_damping, cfg.tau_c, worst)


def sweep_spectrum(scheme: LevelScheme, drive: DriveConfig, region: DetectionRegion, cfg: CoarseGrainConfig,
                   grid: Optional[Sequence[float]] = None, cross_damping: bool = True, cross_shift: bool = False,
                   threads: Optional[int] = None, verify_every: int = 10) -> Spectrum:
    """Count rate into ``region`` over a detuning grid (rad/s)."""
    grid = default_grid(scheme) if grid is None else np.asarray(grid, dtype=float)
    blocks = compute_blocks(scheme, cfg, drive, grid, cross_damping, cross_shift, threads, verify_every)
    tensor = emission_tensor(scheme, cfg, cross_damping)
    offset = fine_structure_offset(scheme) / TWO_PI
    return blocks.spectrum(tensor, region, {"tau_c_s": cfg.tau_c, "cross_shift": cross_shift,
                                            "resonances_hz": (0.0, offset), "omega0_hz": offset,
                                            "gamma_tot_hz": scheme.gamma_tot / TWO_PI})


# --- double Lorentzian -------------------------------------------------------------

@dataclass(frozen=True)
class DoubleLorentzianFit:
    x1: float          # Hz
    x2: float          # Hz, relative to omega0
    b1: float          # Hz (FWHM)
    b2: float
    a1: float          # photons/s * Hz
    a2: float
    omega0: float      # Hz
    residual: float    # relative rms residual
    converged: bool
    gradient_norm: float

    def __call__(self, x_hz):
        return _double_lorentzian(np.asarray(x_hz, float), self.x1, self.x2, self.b1, self.b2, self.a1, self.a2,
                                  self.omega0)

    @property
    def params(self) -> np.ndarray:
        return np.array([self.x1, self.x2, self.b1, self.b2, self.a1, self.a2])


def _lorentzian(x, center, width, area):
    half = 0.5 * width
    return area / math.pi * half / ((x - center) ** 2 + half * half)


def _double_lorentzian(x, x1, x2, b1, b2, a1, a2, omega0):
    return _lorentzian(x, x1, b1, a1) + _lorentzian(x, omega0 + x2, b2, a2)


def _peak_guess(x: np.ndarray, y: np.ndarray):
    """Center, FWHM and area of the dominant peak in (x, y) from the samples."""
    k = int(np.argmax(y))
    top = y[k]
    if not top > 0:
        raise FitError("window contains no peak")
    half = 0.5 * top
    lo = k
    while lo > 0 and y[lo] > half:
        lo -= 1
    hi = k
    while hi < y.size - 1 and y[hi] > half:
        hi += 1
    if y[lo] > half or y[hi] > half or hi - lo < 2:
        raise FitError("peak is not resolved inside its window")

    def crossing(i, j):
        return x[i] + (half - y[i]) * (x[j] - x[i]) / (y[j] - y[i])

    width = crossing(hi, hi - 1) - crossing(lo, lo + 1)
    area = float(trapezoid(y, x))
    return x[k], width, area


def fit_double_lorentzian(spec: Spectrum, omega0: Optional[float] = None, max_nfev: int = 20000) -> DoubleLorentzianFit:
    """Least-squares fit of two Lorentzians with their splitting ``omega0`` (Hz) held fixed.

    Peak 1 is searched below ``omega0 / 2`` and peak 2 above.  Raises
    :class:`FitError` for a degenerate input (a missing peak) or when the
    Levenberg-Marquardt iteration does not converge.
    """
    omega0 = spec.metadata.get("omega0_hz") if omega0 is None else omega0
    if omega0 is None:
        raise ValueError("omega0 must be given or stored in the spectrum metadata")
    x = spec.detunings_hz
    y = spec.rates
    ymax = float(np.max(y))
    if not ymax > 0:
        raise FitError("spectrum is identically zero")
    ys = y / ymax
    scale = 1e6                     # work in MHz
    xs = x / scale
    w0 = omega0 / scale
    lower = xs < 0.5 * w0
    if lower.sum() < 5 or (~lower).sum() < 5:
        raise FitError("spectrum does not cover both resonances")
    c1, f1, a1 = _peak_guess(xs[lower], ys[lower])
    c2, f2, a2 = _peak_guess(xs[~lower], ys[~lower])
    if min(a1, a2) < 1e-6 * max(a1, a2):
        raise FitError("one of the two resonances is missing (single-peak input)")
    p0 = np.array([c1, c2 - w0, f1, f2, a1, a2])

    def resid(p):
        return _double_lorentzian(xs, p[0], p[1], p[2], p[3], p[4], p[5], w0) - ys

    res = least_squares(resid, p0, method="lm", xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=max_nfev, x_scale="jac")
    p = res.x
    grad = float(np.linalg.norm(res.jac.T @ res.fun))
    converged = res.status > 0 and grad < 1e-8
    if res.status <= 0:
        raise FitError(f"double-Lorentzian fit did not converge: {res.message}", last=p)
    if p[2] <= 0 or p[3] <= 0 or p[4] <= 0 or p[5] <= 0:
        raise FitError("fit returned non-positive widths or areas (degenerate input)", last=p)
    rms = float(np.sqrt(np.mean(res.fun**2)))
    return DoubleLorentzianFit(p[0] * scale, p[1] * scale, p[2] * scale, p[3] * scale,
                               p[4] * scale * ymax, p[5] * scale * ymax, omega0, rms, converged, grad)


# --- line pulling ----------------------------------------------------------------------

@dataclass(frozen=True)
class LinePullingResult:
    pulling_P12: float        # Hz
    pulling_P32: float        # Hz
    definition: str           # "fit-difference", "jentschura-halfmax" or "jentschura-max"
    residual: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.pulling_P12) and math.isfinite(self.pulling_P32)):
            raise ValueError("line pulling must be finite")
        if self.definition not in ("fit-difference", "jentschura-halfmax", "jentschura-max"):
            raise ValueError(f"unknown definition {self.definition!r}")


def line_pulling(spec_cross_on: Spectrum, spec_cross_off: Spectrum, omega0: Optional[float] = None) -> LinePullingResult:
    """Shift of both fitted peak positions caused by the cross terms (Hz)."""
    if spec_cross_on.detunings.shape != spec_cross_off.detunings.shape or \
            not np.array_equal(spec_cross_on.detunings, spec_cross_off.detunings):
        raise ValueError("spectra must share one detuning grid")
    on = fit_double_lorentzian(spec_cross_on, omega0)
    off = fit_double_lorentzian(spec_cross_off, omega0)
    return LinePullingResult(on.x1 - off.x1, on.x2 - off.x2, "fit-difference", max(on.residual, off.residual))


@dataclass(frozen=True)
class JentschuraFit:
    C: float
    width: float        # Hz
    a: float
    b: float
    center: float       # Hz, the nominal resonance the fit is referenced to
    residual: float

    @property
    def shift_halfmax(self) -> float:
        """Shift of the curve at half maximum (Hz)."""
        g = self.width
        return self.a * g**4 / (8 * self.C) + self.b * g**2 / (4 * self.C)

    @property
    def shift_max(self) -> float:
        """Shift of the maximum (Hz)."""
        g = self.width
        return self.a * g**4 / (32 * self.C) + self.b * g**2 / (8 * self.C)


def fit_jentschura(spec: Spectrum, center_hz: float, half_width_hz: Optional[float] = None) -> JentschuraFit:
    """Fit ``C/(x^2+G^2/4) + a x + b x/(x^2+G^2/4)`` with x measured from ``center_hz``."""
    if half_width_hz is None:
        gamma_hz = spec.metadata.get("gamma_tot_hz")
        if gamma_hz is None:
            raise ValueError("half_width_hz must be given or gamma_tot_hz stored in the metadata")
        half_width_hz = 30 * gamma_hz
    x = spec.detunings_hz - center_hz
    keep = np.abs(x) <= half_width_hz * (1 + 1e-12)
    if keep.sum() < 8:
        raise FitError("window around the resonance holds too few points")
    scale = 1e6
    xs = x[keep] / scale
    y = spec.rates[keep]
    ymax = float(np.max(y))
    if not ymax > 0:
        raise FitError("window contains no signal")
    ys = y / ymax
    c0, f0, _ = _peak_guess(xs, ys)
    p0 = np.array([f0 * f0 / 4, f0, 0.0, 0.0])

    def resid(p):
        C, g, a, b = p
        den = xs * xs + g * g / 4
        return C / den + a * xs + b * xs / den - ys

    res = least_squares(resid, p0, method="lm", xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=20000, x_scale="jac")
    if res.status <= 0:
        raise FitError(f"resonance fit did not converge: {res.message}", last=res.x)
    C, g, a, b = res.x
    if C <= 0:
        raise FitError("resonance fit returned a non-positive amplitude", last=res.x)
    # back to Hz: C [Hz^2], a [1/Hz], b [Hz] in units of the peak rate
    rms = float(np.sqrt(np.mean(res.fun**2)))
    return JentschuraFit(C * scale**2 * ymax, abs(g) * scale, a / scale * ymax, b * scale * ymax,
                         center_hz, rms)


def jentschura_shift(spec: Spectrum, which_peak: int, half_width_hz: Optional[float] = None) -> tuple[float, float]:
    """``(shift at half maximum, shift of the maximum)`` in Hz for peak 1 or 2."""
    if which_peak not in (1, 2):
        raise ValueError("which_peak must be 1 or 2")
    centers = spec.metadata.get("resonances_hz")
    if centers is None:
        raise ValueError("spectrum metadata lacks resonances_hz")
    fit = fit_jentschura(spec, centers[which_peak - 1], half_width_hz)
    return fit.shift_halfmax, fit.shift_max


def jentschura_pulling(spec_cross_on: Spectrum, definition: str = "jentschura-halfmax") -> LinePullingResult:
    fits = [fit_jentschura(spec_cross_on, c) for c in spec_cross_on.metadata["resonances_hz"]]
    if definition == "jentschura-halfmax":
        vals = [f.shift_halfmax for f in fits]
    elif definition == "jentschura-max":
        vals = [f.shift_max for f in fits]
    else:
        raise ValueError(f"unknown definition {definition!r}")
    return LinePullingResult(vals[0], vals[1], definition, max(f.residual for f in fits))


# --- sweeps ------------------------------------------------------------------------

GEOMETRY_FAMILIES = {
    "cone_y": ConeAboutY.from_solid_angle,
    "double_cone_z": DoubleConeZ.from_solid_angle,
    "inverted_double_cone_z": InvertedDoubleConeZ.from_solid_angle,
    "stripe": StripeTheta,
}


@dataclass(frozen=True)
class SweepRow:
    value: float
    result: LinePullingResult


def geometry_sweep(scheme: LevelScheme, cfg: CoarseGrainConfig, family: str, values: Iterable[float],
                   drive: Optional[DriveConfig] = None, grid: Optional[Sequence[float]] = None,
                   threads: Optional[int] = None, definition: str = "fit-difference",
                   stripe_width: float = 0.01, blocks: Optional[tuple] = None, verify_every: int = 10) -> list[SweepRow]:
    """Line pulling across a family of detection regions.

    ``values`` are solid angles (sr) for the cone families and polar angles
    (rad) for ``"stripe"``.  The density matrices are computed once per
    toggle and reused for every region.
    """
    if family not in GEOMETRY_FAMILIES:
        raise ValueError(f"unknown geometry family {family!r}; expected one of {sorted(GEOMETRY_FAMILIES)}")
    drive = drive or DriveConfig()
    grid = default_grid(scheme) if grid is None else np.asarray(grid, dtype=float)
    if blocks is None:
        on = compute_blocks(scheme, cfg, drive, grid, True, threads=threads, verify_every=verify_every)
        off = compute_blocks(scheme, cfg, drive, grid, False, threads=threads, verify_every=verify_every)
    else:
        on, off = blocks
    t_on = emission_tensor(scheme, cfg, True)
    t_off = emission_tensor(scheme, cfg, False)
    offset = fine_structure_offset(scheme) / TWO_PI
    meta = {"resonances_hz": (0.0, offset), "omega0_hz": offset, "gamma_tot_hz": scheme.gamma_tot / TWO_PI}
    rows = []
    for v in values:
        if family == "stripe":
            region = StripeTheta(float(v), stripe_width)
        else:
            region = GEOMETRY_FAMILIES[family](float(v))
        s_on = on.spectrum(t_on, region, meta)
        if definition == "fit-difference":
            s_off = off.spectrum(t_off, region, meta)
            res = line_pulling(s_on, s_off)
        else:
            res = jentschura_pulling(s_on, definition)
        rows.append(SweepRow(float(v), res))
    return rows


def tau_c_sweep(scheme: LevelScheme, tau_grid: Iterable[float], region: Optional[DetectionRegion] = None,
                drive: Optional[DriveConfig] = None, grid: Optional[Sequence[float]] = None,
                threads: Optional[int] = None, reference_tau: float = 1e-12, temperature: float = 300.0,
                verify_every: int = 10) -> list[tuple[float, float, LinePullingResult]]:
    """Largest line pulling versus coarse-graining time, normalized to ``reference_tau``.

    The default region is a thin equatorial band (inverted double cone,
    solid angle -> 0).  Returns ``(tau_c, normalized, result)`` rows; the
    normalization uses the peak with the larger pulling at the reference.
    """
    drive = drive or DriveConfig()
    grid = default_grid(scheme) if grid is None else np.asarray(grid, dtype=float)
    region = region or InvertedDoubleConeZ(math.pi / 2 - 0.005)
    taus = [float(t) for t in tau_grid]
    if not taus:
        raise ValueError("tau_c grid is empty")

    def pulling(tau):
        cfg = CoarseGrainConfig(tau_c=tau, temperature=temperature)
        on = compute_blocks(scheme, cfg, drive, grid, True, threads=threads, verify_every=verify_every)
        off = compute_blocks(scheme, cfg, drive, grid, False, threads=threads, verify_every=verify_every)
        return _pulling_for_region(scheme, cfg, on, off, region)

    ref = pulling(reference_tau)
    use_p12 = abs(ref.pulling_P12) >= abs(ref.pulling_P32)
    ref_value = ref.pulling_P12 if use_p12 else ref.pulling_P32
    rows = []
    for tau in taus:
        res = ref if tau == reference_tau else pulling(tau)
        value = res.pulling_P12 if use_p12 else res.pulling_P32
        rows.append((tau, value / ref_value, res))
    return rows


def _pulling_for_region(scheme, cfg, on: ExcitedBlocks, off: ExcitedBlocks, region) -> LinePullingResult:
    offset = fine_structure_offset(scheme) / TWO_PI
    meta = {"resonances_hz": (0.0, offset), "omega0_hz": offset, "gamma_tot_hz": scheme.gamma_tot / TWO_PI}
    s_on = on.spectrum(emission_tensor(scheme, cfg, True), region, meta)
    s_off = off.spectrum(emission_tensor(scheme, cfg, False), region, meta)
    return line_pulling(s_on, s_off)


# --- output ---------------------------------------------------------------------------

def _fmt(v) -> str:
    return repr(float(v)) if isinstance(v, (float, np.floating, int)) and not isinstance(v, bool) else str(v)


def write_spectrum_csv(path, spec: Spectrum) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\r\n")
        w.writerow(["detuning_hz", "rate_per_s"])
        for d, r in zip(spec.detunings_hz, spec.rates):
            w.writerow([_fmt(d), _fmt(r)])


def write_sweep_csv(path, variable: str, rows: Sequence[SweepRow]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\r\n")
        w.writerow([variable, "pulling_P12_Hz", "pulling_P32_Hz", "definition", "residual"])
        for row in rows:
            r = row.result
            w.writerow([_fmt(row.value), _fmt(r.pulling_P12), _fmt(r.pulling_P32), r.definition, _fmt(r.residual)])


def write_svg(path, x: Sequence[float], series: dict, xlabel: str = "", ylabel: str = "", title: str = "",
              width: int = 640, height: int = 400) -> None:
    """Plain SVG line plot; ``series`` maps a legend label to y values."""
    x = np.asarray(x, dtype=float)
    colors = ["#1f4e9c", "#c0392b", "#2e8b57", "#8e44ad"]
    left, right, top, bottom = 70, 20, 40, 50
    ys = [np.asarray(v, dtype=float) for v in series.values()]
    ymin = min(float(np.min(v)) for v in ys)
    ymax = max(float(np.max(v)) for v in ys)
    if ymax == ymin:
        ymin, ymax = ymin - 1, ymax + 1
    xmin, xmax = float(np.min(x)), float(np.max(x))
    if xmax == xmin:
        xmin, xmax = xmin - 1, xmax + 1
    pw, ph = width - left - right, height - top - bottom

    def px(v):
        return left + (v - xmin) / (xmax - xmin) * pw

    def py(v):
        return top + (ymax - v) / (ymax - ymin) * ph

    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
             f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
             f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>']
    if ymin < 0 < ymax:
        parts.append(f'<line x1="{left}" x2="{left + pw}" y1="{py(0):.2f}" y2="{py(0):.2f}" '
                     f'stroke="#999" stroke-dasharray="4 3"/>')
    for k, (label, v) in enumerate(zip(series, ys)):
        pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(x, v))
        color = colors[k % len(colors)]
        parts.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')
        parts.append(f'<text x="{left + 10}" y="{top + 16 + 14 * k}" fill="{color}">{_esc(label)}</text>')
    for frac in (0.0, 0.5, 1.0):
        xv = xmin + frac * (xmax - xmin)
        yv = ymin + frac * (ymax - ymin)
        parts.append(f'<text x="{px(xv):.2f}" y="{top + ph + 16}" text-anchor="middle">{xv:.4g}</text>')
        parts.append(f'<text x="{left - 6}" y="{py(yv) + 4:.2f}" text-anchor="end">{yv:.4g}</text>')
    parts.append(f'<text x="{left + pw / 2}" y="{height - 10}" text-anchor="middle">{_esc(xlabel)}</text>')
    parts.append(f'<text x="16" y="{top + ph / 2}" text-anchor="middle" '
                 f'transform="rotate(-90 16 {top + ph / 2})">{_esc(ylabel)}</text>')
    parts.append(f'<text x="{left + pw / 2}" y="22" text-anchor="middle" font-size="14">{_esc(title)}</text>')
    parts.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(parts) + "\n")


def _esc(text: str) -> str:
    return str(text).replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
