"""Floquet analysis of a driven qubit and pulse optimization by coherent
suppression of nonadiabatic transitions."""

from .branches import FloquetBranches, get_branches
from .dynamics import (
    FloquetAmplitudes,
    adiabatic_final_state,
    apt_transition_amplitude,
    decompose_state,
    derivative_coupling,
    dynamical_phase,
    rotation,
)
from .errors import (
    BracketError,
    ConfigError,
    ConvergenceWarning,
    FiestaError,
    IllConditionedWarning,
    InvalidInputError,
    NumericError,
    StepTooLargeError,
    WindowError,
)
from .floquet import (
    DriveConfig,
    FloquetSolution,
    apply_drive_phase,
    bessel_j,
    build_floquet_matrix,
    diagonalize_floquet,
    floquet_modes_analytic,
    fold_quasienergy,
    mode_fidelity,
    quasienergies_analytic,
    rabi_frequency,
    rwa_rabi,
    shift_copy,
    solve_floquet,
    track_branches,
)
from .optimize import (
    OptimizedGate,
    SweepResult,
    calibrate_amplitude,
    find_optimal_edge_time,
    optimize_gate,
    sweep_edge_transitions,
    sweep_gate_fidelity,
)
from .propagation import (
    NoiseModel,
    exact_transition_amplitude,
    monodromy,
    monodromy_quasienergies,
    propagate_lindblad,
    propagate_schrodinger,
    propagator,
    to_rotating_frame,
)
from .pulse import PulseEnvelope, drive_field, envelope, envelope_derivative, quantize
from .tomography import (
    ProcessMatrix,
    RotationTarget,
    chi_from_unitary,
    gate_fidelity,
    ideal_rotation,
    process_fidelity,
    pulse_gate_fidelity,
    run_qpt,
)

__version__ = "0.1.0"
