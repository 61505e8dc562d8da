"""Preconditioned adiabatic state preparation for spin-lattice Hamiltonians."""
from .estimators import AdiabaticPreparation, ExponentialDecayRegressor
from .evolution import (
    EvolutionPlan,
    Projector,
    epsilon_at,
    evolve,
    ground_band_projector,
    infidelity,
    phase_gate_layer,
)
from .exceptions import (
    ConfigError,
    ConvergenceError,
    GapClosureError,
    NoDecayError,
    NumericalError,
)
from .experiment import FitResult, SweepConfig, fit_exponential, sweep_coupling_ratio, sweep_tau
from .hamiltonians import (
    LatticeSpec,
    PauliString,
    PauliSum,
    Preconditioner,
    Schedule,
    build_h0,
    build_heisenberg_xz,
    diagonal_part,
    interpolated,
    preconditioner_diagonal,
    to_matrix,
)
from .optimize import OptimizeResult, OptimizeSpec, minimize_delta_norm, minimize_g_tilde
from .spectral import (
    BandSelector,
    GapProfile,
    g_of_s,
    g_tilde,
    g_tilde_linear,
    gap_profile,
    operator_norm,
    rho_radius,
    spectrum,
    w_factor,
)

__version__ = "0.1.0"
