//! Joint radio / optical-fronthaul / cloud resource orchestration: the exact
//! mixed-binary SOCP via branch and bound, the CCP relaxations for power
//! minimization and the joint sum-SE objective, the small-cell restriction,
//! and the per-wavelength accounting schemes.

mod ccp;
mod checker;
pub(crate) mod exact;
mod instance;
mod schemes;
mod socp;
mod sumse;

#[cfg(test)]
pub(crate) mod test_support;

pub use ccp::{ccp_power_min, finalize_allocation, grad_f, surrogate_f};
pub use checker::{check_allocation, ConstraintCheck, ConstraintReport};
pub use exact::{enumerate_exact, solve_exact};
pub use instance::{
    CcpConfig, OrchestrateError, OrchestrationResult, ProblemInstance, ResultStatus,
};
pub use schemes::{account_local_coordination, account_radio_only, round_robin_map};
pub use socp::sinr_soc_rows;
pub use sumse::{ccp_sum_se, ccp_sum_se_detailed, lift_tightness, SumSeVariables};
