//! Work costs of preparing and erasing quantum systems in the presence of
//! quantum side information: entropic quantities, free-operation predicates,
//! achievability protocol synthesis, and the SDP machinery behind the
//! smoothed quantities. All logarithms are base 2 and work is reported in
//! bits (multiples of kT ln 2).

pub mod channels;
pub mod conditional;
pub mod divergences;
pub mod error;
pub mod io;
pub mod linalg;
pub mod protocols;
pub mod smoothing;
pub mod states;
pub mod workcost;

pub use workcost::{
    aep_experiment, entropy_sandwich_sweep, rate_asymptotic, w_asymptotic, w_eras_oneshot,
    w_oneshot_protocol, w_oneshot_uniform, w_prep_oneshot, AepPoint, Direction, SweepConfig,
    SweepReport, WorkMethod, WorkReport,
};

pub use protocols::{
    build_erasure_protocol, build_preparation_protocol, compose_protocols, default_pure_input,
    identity_protocol, verify_protocol, Protocol, ProtocolParams, VerificationReport,
};

pub use channels::{
    apply_channel, apply_channel_op, compose_channels, identity_channel,
    is_cond_gibbs_preserving, is_cond_thermal_covariant, is_nonsignaling_a_to_b,
    permutation_channel, random_channel, random_free_operation, random_unitary,
    tensor_channels, thermalization_channel, ChoiOperator, ThermoOperation,
};

pub use conditional::{
    h_max_cond, h_min_cond, h_petz_up, h_sandwiched_down, h_vn_cond, helmholtz, helmholtz_cond,
    i_max_down, i_max_up, i_min_down, i_petz_down, i_umegaki, von_neumann_entropy,
    CondEntropyValue, CondEntropyVariant, MutualInfoValue, MutualInfoVariant,
};
pub use divergences::{
    d_max, d_min, d_min_smoothed, d_petz, d_sandwiched, d_umegaki, DivergenceValue,
};
pub use error::{Error, Result, SdpError};
pub use smoothing::{
    classical_oracle, h_max_cond_smoothed, h_min_cond_smoothed, i_max_down_smoothed,
    i_max_up_smoothed, i_min_down_smoothed, sdp_solve, witness_violation, OracleKind, SdpParams,
    SdpProblem, SdpSolution, SmoothParams, SmoothedValue, SmoothedWitness,
};
pub use linalg::{CMatrix, HermitianOperator, SubsystemDims, C64};
pub use states::{
    gen_trace_distance, gibbs_state, in_epsilon_ball, is_conditionally_gibbs, purify,
    random_state, random_thermo_state, special_state, trace_distance, DensityOperator,
    Hamiltonian, SpecialState, SubnormalizedState, ThermoState,
};
