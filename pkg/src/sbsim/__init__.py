"""Simulation and analysis toolkit for two-photon sideband transitions in a
strongly driven two-mode Josephson circuit."""

from .analytics import (
    DetuningConvention,
    DriveConfig,
    DriveVariant,
    Interaction,
    SidebandModel,
    SidebandPrediction,
    TermCatalogEntry,
    analytic_rate_shift_slope,
    bracket,
    detunings,
    frequency_shift,
    nearest_interactions,
    self_consistent_matching,
    sideband_rate,
    term_catalog,
)
from .dynamics import (
    PulseEnvelope,
    RabiEstimate,
    SimTrajectory,
    System,
    drive_frequency_sweep,
    drive_term,
    extract_rabi,
    matched_drive_frequency,
    propagate,
    pulse_length_sweep,
    quasienergy_gap,
    rate_vs_shift_run,
)
from .eit import (
    EitParams,
    Spectrum,
    rotating_frame_hamiltonian,
    spectrum,
    steady_state,
    steady_state_by_integration,
    transmission,
    window_width_hz,
)
from .fitting import (
    FitParameter,
    FitProblem,
    FitResult,
    calibrate_cross_anharmonicity,
    fit_spectrum,
    rate_shift_line_fit,
)
from .model import (
    CircuitParams,
    FockOperator,
    LabelledSpectrum,
    Mode,
    NormalModeParams,
    ObservedParams,
    build_h_normal,
    build_h_uncoupled,
    labelled_eigensystem,
    ladder,
    normal_mode_transform,
    observed_from_circuit,
    observed_to_bare,
)

__version__ = "0.1.0"
