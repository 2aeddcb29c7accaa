//! Physical-layer simulator: scenario drops, correlated Rayleigh channels,
//! MMSE estimation, LP-MMSE precoding and the hardened effective-channel
//! statistics (b, C) consumed by the optimizers.

pub mod channel;
pub mod config;
pub mod correlation;
pub mod pilots;
pub mod scenario;
pub mod serialize;
pub mod stats;

pub use channel::{
    build_context, lp_mmse_raw_precoders, mmse_estimate, pilot_observations, sample_channels,
    ChannelError, EstimationContext,
};
pub use config::{ConfigError, SystemConfig};
pub use correlation::{spatial_correlation, CorrelationError, CorrelationModel};
pub use pilots::{assign_pilots, pilot_matrix, PilotAssignment};
pub use scenario::{generate_scenario, path_loss, Scenario, ScenarioOptions};
pub use serialize::{from_json, to_json, SerializeError, StatsRecord, STATS_SCHEMA};
pub use stats::{
    estimate_effective_statistics, estimate_with_trace, sinr_and_se, EffectiveStatistics,
    StatsError, StatsOptions,
};
