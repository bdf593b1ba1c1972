"""Leakage bounds for a probed phase modulator in decoy-state BB84."""

from .bounds import (
    ChernoffQuery,
    NoSolution,
    OutOfDomain,
    bound_value,
    chernoff_delta_closed_form,
    chernoff_delta_numeric,
    lambert_w0,
)
from .config import ConfigError, RunConfig, parse_config, parse_config_text, render_config
from .keyrate import (
    ChannelModel,
    ChannelObservables,
    DecoyBounds,
    KeyRatePoint,
    ProtocolParams,
    binary_entropy,
    channel_observables,
    decoy_single_photon_bounds,
    secret_key_rate,
    sweep,
)
from .linalg import fidelity, hermitian_eig, kron, sqrt_psd, validate_density_matrix
from .states import (
    BadIndex,
    BlochAngles,
    GaussianPrepModel,
    IdealPrep,
    PHASE_OFFSETS,
    QuadratureUnderResolved,
    basis_average,
    bloch_state,
    calibrated_model,
    gaussian_state_analytic,
    gaussian_state_quadrature,
    ideal_state,
    prepared_states,
)
from .trojan import (
    CoinAnalysis,
    FiniteSupport,
    GeometricPhotons,
    MixedPhotons,
    MuOutOfRange,
    NoSolutionBelowOne,
    PhotonNumberDistribution,
    PoissonPhotons,
    TrojanBudget,
    analyze_coin,
    coin_imbalance,
    effective_mu_out,
    joint_basis_density,
    phase_error_bound,
    side_channel_density,
    simulate_trojan_fill,
    two_point,
    validation_battery,
)

__version__ = "0.1.0"
