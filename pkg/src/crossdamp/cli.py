"""Command-line interface.

    crossdamp coeffs        damping matrix, Ficek comparison and shift estimates
    crossdamp spectrum      count-rate spectrum for each configured region
    crossdamp pulling-sweep line pulling across a family of detection regions
    crossdamp tauc-sweep    line pulling versus coarse-graining time
    crossdamp validate      invariant suite
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .coefficients import cross_shift, fc, gamma_ficek, gamma_matrix
from .config import ConfigError, RunConfig, load_config
from .hydrogen import build_level_scheme
from .spectra import (
    compute_blocks,
    geometry_sweep,
    sweep_spectrum,
    tau_c_sweep,
    write_spectrum_csv,
    write_svg,
    write_sweep_csv,
)

def _fmt(v: float) -> str:
    return repr(float(v))


def cmd_coeffs(cfg: RunConfig, out: Path) -> list[Path]:
    scheme = build_level_scheme(cfg.model)
    cg = cfg.coarse_grain
    decays = scheme.decays
    gamma = gamma_matrix(decays, cg, cross_damping=cfg.cross_damping)
    gamma.check()
    paths = [out / "gamma.csv", out / "shifts.csv"]
    with open(paths[0], "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\r\n")
        w.writerow(["i", "j", "transition_i", "transition_j", "gamma_re_rad_s", "gamma_im_rad_s",
                    "fc_re", "fc_im", "ficek_re_rad_s", "ficek_im_rad_s"])
        for i, ti in enumerate(decays):
            for j, tj in enumerate(decays):
                if ti.lower_index != tj.lower_index or np.vdot(ti.dipole, tj.dipole) == 0:
                    continue
                k = fc(ti.omega - tj.omega, cg.tau_c)
                f = gamma_ficek(ti, tj)
                g = gamma.values[i, j]
                w.writerow([i, j, ti.label, tj.label, _fmt(g.real), _fmt(g.imag), _fmt(k.real), _fmt(k.imag),
                            _fmt(f.real), _fmt(f.imag)])
    with open(paths[1], "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\r\n")
        w.writerow(["transition", "omega_rad_s", "shift_minus_rad_s", "shift_plus_rad_s", "shift_thermal_rad_s"])
        seen = set()
        for t in decays:
            key = (t.upper.manifold, t.upper.F, t.lower.manifold, t.omega)
            if key in seen:
                continue
            seen.add(key)
            w.writerow([t.label, _fmt(t.omega), _fmt(cross_shift(t, t, cg, -1)), _fmt(cross_shift(t, t, cg, +1)),
                        _fmt(cross_shift(t, t, cg, -1, thermal=True))])
    return paths


def cmd_spectrum(cfg: RunConfig, out: Path) -> list[Path]:
    scheme = build_level_scheme(cfg.model)
    grid = cfg.grid(scheme)
    paths = []
    for k, region in enumerate(cfg.regions):
        spec = sweep_spectrum(scheme, cfg.drive, region, cfg.coarse_grain, grid, cfg.cross_damping, cfg.cross_shift,
                              cfg.threads, cfg.verify_every)
        csv_path, svg_path = out / f"spectrum_{k}.csv", out / f"spectrum_{k}.svg"
        write_spectrum_csv(csv_path, spec)
        write_svg(svg_path, spec.detunings_hz / 1e6, {"count rate (1/s)": spec.rates},
                  "detuning (MHz)", "photons / s", f"spectrum, region {k}")
        paths += [csv_path, svg_path]
    return paths


def cmd_pulling_sweep(cfg: RunConfig, out: Path) -> list[Path]:
    scheme = build_level_scheme(cfg.model)
    grid = cfg.grid(scheme)
    on = compute_blocks(scheme, cfg.coarse_grain, cfg.drive, grid, cfg.cross_damping, cfg.cross_shift,
                        cfg.threads, cfg.verify_every)
    off = compute_blocks(scheme, cfg.coarse_grain, cfg.drive, grid, False, cfg.cross_shift,
                         cfg.threads, cfg.verify_every)
    rows = geometry_sweep(scheme, cfg.coarse_grain, cfg.sweep_family, cfg.sweep_values, cfg.drive, grid,
                          definition=cfg.sweep_definition, blocks=(on, off))
    variable = "theta_rad" if cfg.sweep_family == "stripe" else "solid_angle_sr"
    csv_path, svg_path = out / "pulling_sweep.csv", out / "pulling_sweep.svg"
    write_sweep_csv(csv_path, variable, rows)
    write_svg(svg_path, [r.value for r in rows],
              {"4P1/2 (kHz)": [r.result.pulling_P12 / 1e3 for r in rows],
               "4P3/2 (kHz)": [r.result.pulling_P32 / 1e3 for r in rows]},
              variable, "line pulling (kHz)", f"line pulling, {cfg.sweep_family}")
    return [csv_path, svg_path]


def cmd_tauc_sweep(cfg: RunConfig, out: Path) -> list[Path]:
    scheme = build_level_scheme(cfg.model)
    grid = cfg.grid(scheme)
    rows = tau_c_sweep(scheme, cfg.tau_c_values_s, cfg.tau_c_region, cfg.drive, grid, cfg.threads,
                       temperature=cfg.coarse_grain.temperature, verify_every=cfg.verify_every)
    csv_path, svg_path = out / "tauc_sweep.csv", out / "tauc_sweep.svg"
    with open(csv_path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\r\n")
        w.writerow(["tau_c_s", "normalized", "pulling_P12_Hz", "pulling_P32_Hz", "definition", "residual"])
        for tau, norm, res in rows:
            w.writerow([_fmt(tau), _fmt(norm), _fmt(res.pulling_P12), _fmt(res.pulling_P32), res.definition,
                        _fmt(res.residual)])
    write_svg(svg_path, [math.log10(tau) for tau, _, _ in rows], {"normalized pulling": [n for _, n, _ in rows]},
              "log10(tau_c / s)", "normalized line pulling", "coarse-graining time dependence")
    return [csv_path, svg_path]


def cmd_validate(cfg: RunConfig, out: Optional[Path] = None) -> bool:
    from .validation import run_checks

    def show(check):
        print(f"{'PASS' if check.passed else 'FAIL'}  {check.name}: {check.detail}", flush=True)

    checks = run_checks(build_level_scheme(cfg.model), cfg.coarse_grain, cfg.threads, progress=show)
    failed = sum(not c.passed for c in checks)
    print(f"{len(checks) - failed}/{len(checks)} checks passed")
    return failed == 0


COMMANDS = {
    "coeffs": cmd_coeffs,
    "spectrum": cmd_spectrum,
    "pulling-sweep": cmd_pulling_sweep,
    "tauc-sweep": cmd_tauc_sweep,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="crossdamp", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in (*COMMANDS, "validate"):
        p = sub.add_parser(name)
        p.add_argument("--config", type=Path, help="YAML run configuration")
        p.add_argument("--out", type=Path, help="output directory (overrides output_dir)")
        p.add_argument("--threads", type=int, help="worker threads (default: $CROSSDAMP_THREADS or CPU count)")
        p.add_argument("--toggle-cross-damping", choices=("on", "off"), help="override toggles.cross_damping")
    return parser


def _error(kind: str, message: str, field: str = "") -> int:
    payload = {"error": kind, "message": message}
    if field:
        payload["field"] = field
    print(json.dumps(payload), file=sys.stderr)
    return 2 if kind == "ConfigError" else 1


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config) if args.config else RunConfig()
        if args.threads is not None:
            if args.threads < 1:
                raise ConfigError("--threads must be positive", "--threads")
            cfg.threads = args.threads
        if args.toggle_cross_damping:
            cfg.cross_damping = args.toggle_cross_damping == "on"
        if args.command == "validate":
            return 0 if cmd_validate(cfg) else 1
        out = Path(args.out if args.out is not None else cfg.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        paths = COMMANDS[args.command](cfg, out)
        for p in paths:
            print(p)
        return 0
    except ConfigError as exc:
        return _error("ConfigError", str(exc), exc.field)
    except Exception as exc:  # reported as JSON for callers that parse stderr
        details = getattr(exc, "details", None)
        msg = str(exc) if not details else f"{exc} {json.dumps({k: repr(v) for k, v in details.items()})}"
        return _error(type(exc).__name__, msg)


if __name__ == "__main__":
    sys.exit(main())
