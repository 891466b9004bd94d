"""Spectrum, gap certification and boundary null control for a hybrid
two-rod heat system coupled through an interior point mass."""

__version__ = "0.1.0"

from .coefficients import (
    BCVariant,
    Coefficient,
    CoefficientSet,
    ConfigError,
    ProblemConfig,
    Tolerances,
    TravelTimes,
    coefficients_from_expressions,
    constant_coefficients,
    load_config,
    save_config,
    travel_times,
)
from .shooting import (
    IntegrationError,
    ShootingTrace,
    Side,
    shoot_left,
    shoot_right,
    wkb_reference,
)
from .spectrum import (
    AuxiliarySpectra,
    BracketError,
    Eigenpair,
    EigenfunctionError,
    PoleProximityError,
    RootRefineError,
    SpectralReport,
    assemble_eigenfunction,
    assemble_eigenfunctions,
    auxiliary_spectra,
    characteristic_function,
    characteristic_derivative_quadrature,
    eigenvalues_main,
    eigenvalues_regular,
    spectral_report,
)
from .moments import (
    BiorthogonalFamily,
    ConditioningError,
    ControlSignal,
    GridMismatchError,
    MomentProblem,
    build_biorthogonal,
    exponential_gram,
    make_moment_problem,
    project_initial_data,
    sampled_control,
    synthesize_control,
)
from .simulator import (
    SimulationInputError,
    SimulationResult,
    StateSnapshot,
    VerificationReport,
    simulate_fd,
    simulate_galerkin,
    state_from_functions,
    state_from_mode,
    state_from_samples,
    verify_null_control,
    zero_state,
)

__all__ = [name for name in dir() if not name.startswith("_")]
