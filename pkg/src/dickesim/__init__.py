"""dickesim: desk-scale simulator for collective spontaneous emission.

Laser-driven two-level atoms coupled by resonant dipole-dipole interactions,
evolved under the Lindblad master equation, with the time-windowed
superradiant/subradiant decay analysis and orientation-averaged ensembles.
"""

__version__ = "0.1.0"

from .analysis import (
    DecayAnalysis,
    DecayWindows,
    ExponentialFit,
    ScatterPoint,
    SweepRow,
    analyze_decay,
    correlate_vs_ne,
    fit_exponential,
    integrate_window,
    pulse_sweep,
)
from .couplings import (
    AtomConfiguration,
    CouplingMatrices,
    MIN_SEPARATION,
    build_couplings,
    circular_dipole,
    pair_coupling,
)
from .ensemble import (
    ChainSampler,
    EnsembleResult,
    EnsembleSpec,
    FixedPairSampler,
    GaussianCloudSampler,
    ObservablesSpec,
    run_ensemble,
    sample_configuration,
    sample_drive,
)
from .errors import (
    AnalysisError,
    ConfigError,
    DickesimError,
    EnsembleError,
    GeometryError,
    InvariantViolationError,
    SingularityError,
    ToleranceError,
)
from .observables import (
    EmissionTrajectory,
    axial_intensity,
    correlation_matrix,
    default_tags,
    excited_fraction,
    record_trajectory,
    state_population,
    total_emission_rate,
    two_atom_state,
)
from .propagator import (
    DrivePulse,
    EvolutionSchedule,
    N_ATOMS_CAP,
    build_hamiltonian,
    evolve,
    initial_ground_state,
    lindblad_rhs,
    min_eigenvalue,
    time_grid,
    validate_density_matrix,
)
from .units import (
    RB87_D2,
    TransitionSpec,
    gamma_units_to_si_time,
    saturation_to_rabi,
    si_time_to_gamma_units,
)
