"""Angle-resolved cross-damping line pulling in hydrogen 2S-4P spectroscopy."""
from .angular import HalfInt, clebsch_gordan, orthogonality_sum, wigner3j
from .coefficients import CoarseGrainConfig, GammaMatrix, cross_shift, fc, gamma_cg, gamma_ficek, gamma_matrix
from .config import RunConfig, load_config, parse_config
from .detection import (
    ConeAboutY,
    DoubleConeZ,
    Full4Pi,
    InvertedDoubleConeZ,
    StripeTheta,
    detection_matrix,
    emission_tensor,
    photon_count_rate,
)
from .hydrogen import AtomicState, ConfigError, LevelScheme, ModelConfig, Transition, build_level_scheme, dfrak
from .liouvillian import (
    DensityMatrix,
    DriveConfig,
    EvolutionError,
    Liouvillian,
    build_liouvillian,
    evolve,
    quasi_steady,
    steady_state,
)
from .spectra import (
    FitError,
    LinePullingResult,
    Spectrum,
    compute_blocks,
    fit_double_lorentzian,
    geometry_sweep,
    line_pulling,
    sweep_spectrum,
    tau_c_sweep,
)

__all__ = [
    "HalfInt",
    "clebsch_gordan",
    "orthogonality_sum",
    "wigner3j",
    "CoarseGrainConfig",
    "GammaMatrix",
    "cross_shift",
    "fc",
    "gamma_cg",
    "gamma_ficek",
    "gamma_matrix",
    "RunConfig",
    "load_config",
    "parse_config",
    "ConeAboutY",
    "DoubleConeZ",
    "Full4Pi",
    "InvertedDoubleConeZ",
    "StripeTheta",
    "detection_matrix",
    "emission_tensor",
    "photon_count_rate",
    "AtomicState",
    "ConfigError",
    "LevelScheme",
    "ModelConfig",
    "Transition",
    "build_level_scheme",
    "dfrak",
    "DensityMatrix",
    "DriveConfig",
    "EvolutionError",
    "Liouvillian",
    "build_liouvillian",
    "evolve",
    "quasi_steady",
    "steady_state",
    "FitError",
    "LinePullingResult",
    "Spectrum",
    "compute_blocks",
    "fit_double_lorentzian",
    "geometry_sweep",
    "line_pulling",
    "sweep_spectrum",
    "tau_c_sweep",
]

__version__ = "0.1.0"
