"""Semiclassical moment dynamics for quantum wave packets in gravitational potentials.

A library and CLI for evolving the second-order quantum moments of a wave
packet alongside its classical trajectory, reconstructing wave-function data
(density and phase) from moments, and computing three observables where the
width sector matters: the Eotvos parameter of a delocalized particle, the
gravitational return time, and the interferometer propagation phase.
"""

__version__ = "0.1.0"

from .errors import (
    ConfigurationError,
    DegenerateStateError,
    DomainError,
    GravMomentsError,
    NoRepresentingDistributionError,
    NoReturnError,
    PhaseDomainError,
    QuadratureError,
    SingularityAbort,
    SingularityError,
    UncertaintyViolationError,
    UnsupportedOrderError,
)
from .moments import (
    CanonicalState,
    HbarContext,
    RawMomentSequence,
    SecondOrderState,
    casimir,
    central_from_raw,
    from_canonical,
    hankel_psd_check,
    hierarchy_check,
    mixed_sequence_for_state,
    poisson_bracket,
    poisson_tensor,
    raw_from_central,
    raw_sequence_for_state,
    second_order_central,
    symmetric_mixed_from_central,
    to_canonical,
)
from .dynamics import (
    G_SI,
    HBAR_SI,
    IntegratorConfig,
    MomentTrajectory,
    PotentialModel,
    ScaleSet,
    Trajectory,
    closed_form_free,
    closed_form_linear,
    effective_hamiltonian,
    effective_hamiltonian_canonical,
    eom_rhs_canonical,
    eom_rhs_moments,
    free_potential,
    gravity_gradient_potential,
    integrate_canonical,
    integrate_moments,
    linear_potential,
    newtonian_potential,
    nondimensionalize,
    power_law_potential,
    quadratic_potential,
    redimensionalize,
    u_parameter,
)
from .reconstruct import (
    GaussianWavePacket,
    HermiteBasis,
    PhaseDerivative,
    ReconstructedDensity,
    ReconstructedState,
    accelerated_frame_transform,
    free_gaussian_wavefunction,
    gaussian_from_moments,
    global_phase_free,
    quadrature_moments,
    quadrature_nodes,
    reconstruct_density,
    reconstruct_phase_derivative,
    reconstruct_state,
)
from .experiments import (
    EotvosInput,
    MachZehnderConfig,
    MachZehnderResult,
    PathSegment,
    PhasePath,
    ReturnTimeProblem,
    ReturnTimeRow,
    anomalous_acceleration,
    eotvos_estimate,
    mach_zehnder_phase,
    phase_line_integral,
    propagation_phase_plane_wave,
    propagation_phase_second_order,
    return_time,
    return_time_curve,
    width_bound_from_eta,
)
