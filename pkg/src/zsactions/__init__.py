"""Spectral gaps, action variables and frequencies of a periodic 2x2 system."""

from .gradients import (
    DegenerateCriticalPointError,
    GradientData,
    action_derivative_crosscheck,
    du_dA_and_frequencies,
    f_matrix,
    nu_alpha,
    omega_tilde,
)
from .monodromy import (
    DEFAULT_CONFIG,
    IntegrationError,
    IntegratorConfig,
    LyapunovValue,
    fundamental_matrix,
    lyapunov,
    lyapunov_batch,
    lyapunov_oracle_constant,
    transfer_batch,
)
from .potential import (
    FourierPotential,
    direct_H,
    direct_H0,
    direct_H1,
    fourier_coeff,
    preset,
)
from .quasimomentum import (
    ActionSet,
    GapFunction,
    Y_and_derivatives,
    action,
    build_nodes,
    comparison_S,
    compute_actions,
    functional_V,
    functionals_Q,
    maxima_Y,
    v_eval,
)
from .spectrum import (
    Gap,
    GapLocationError,
    SpectralTable,
    compute_table,
    locate_gap,
)
from .verify import (
    CheckResult,
    VerificationReport,
    check_estimates,
    check_identities,
    check_internal,
    run_verification,
)

__version__ = "0.1.0"
