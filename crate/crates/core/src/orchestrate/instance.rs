use thiserror::Error;

use crate::powermodel::{
    gops_coefficients, wavelength_capacity, FronthaulParams, GopsCoefficients, GopsParams,
    PowerBreakdown, PowerError, PowerParams, SplitOption,
};
use crate::sysmodel::{EffectiveStatistics, SystemConfig};

/// Everything needed to pose the joint radio/fronthaul/cloud allocation
/// problem for one channel-statistics draw.
#[derive(Debug, Clone)]
pub struct ProblemInstance {
    pub stats: EffectiveStatistics,
    pub cfg: SystemConfig,
    pub pp: PowerParams,
    pub gp: GopsParams,
    pub fh: FronthaulParams,
    pub split: SplitOption,
    /// Per-UE minimum SINR targets (linear scale).
    pub gamma: Vec<f64>,
}

#[derive(Debug, Error)]
pub enum OrchestrateError {
    #[error("problem infeasible: {0}")]
    Infeasible(String),
    #[error("solver failed to converge: {0}")]
    SolverStalled(String),
    #[error("covariance block for UE pair ({k},{i}) is not PSD (min eig {min_eig:.3e})")]
    NotPsd { k: usize, i: usize, min_eig: f64 },
    #[error(transparent)]
    Power(#[from] PowerError),
    #[error("invalid input: {0}")]
    Invalid(String),
}

impl ProblemInstance {
    pub fn new(
        stats: EffectiveStatistics,
        cfg: SystemConfig,
        pp: PowerParams,
        gp: GopsParams,
        fh: FronthaulParams,
        split: SplitOption,
        gamma: Vec<f64>,
    ) -> Result<Self, OrchestrateError> {
        if gamma.len() != stats.n_ues() {
            return Err(OrchestrateError::Invalid(format!(
                "{} SINR targets for {} UEs",
                gamma.len(),
                stats.n_ues()
            )));
        }
        if gamma.iter().any(|&g| !(g >= 0.0) || !g.is_finite()) {
            return Err(OrchestrateError::Invalid("SINR targets must be finite and >= 0".into()));
        }
        Ok(ProblemInstance { stats, cfg, pp, gp, fh, split, gamma })
    }

    /// Converts a common SE target (bit/s/Hz) into the per-UE SINR targets
    /// by inverting SE = (tau_d/tau_c) log2(1 + gamma).
    pub fn gamma_from_se(cfg: &SystemConfig, se: f64, k: usize) -> Vec<f64> {
        let exponent = se * cfg.tau_c() as f64 / cfg.tau_d() as f64;
        vec![2f64.powf(exponent) - 1.0; k]
    }

    pub fn k(&self) -> usize {
        self.stats.n_ues()
    }

    pub fn l(&self) -> usize {
        self.stats.n_orus()
    }

    /// O-RUs per TWDM-PON wavelength under the configured split.
    pub fn w_max(&self) -> usize {
        wavelength_capacity(self.split, &self.cfg, &self.fh)
    }

    pub fn coeffs(&self) -> GopsCoefficients {
        gops_coefficients(&self.cfg, self.split, &self.gp)
    }
}

/// Tuning knobs for the concave-convex procedure.
#[derive(Debug, Clone, Copy)]
pub struct CcpConfig {
    /// Surrogate sharpness applied to the activation variables z.
    pub alpha_z: f64,
    /// Surrogate sharpness applied to the power square roots rho.
    pub alpha_rho: f64,
    /// Absolute objective-improvement stopping threshold (W).
    pub epsilon: f64,
    pub max_iter: usize,
    /// Association threshold on rho entries (sqrt W).
    pub zeta: f64,
    /// Initial value for every rho entry; `None` uses sqrt(p_max / K).
    pub init_rho: Option<f64>,
    pub init_z: f64,
}

impl CcpConfig {
    pub fn defaults(p_max: f64) -> Self {
        CcpConfig {
            alpha_z: 20.0,
            alpha_rho: 20.0,
            epsilon: 1e-3,
            max_iter: 50,
            zeta: 1e-3 * p_max.sqrt(),
            init_rho: None,
            init_z: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResultStatus {
    /// Proven global optimum (branch and bound within gap tolerance).
    Optimal,
    /// Feasible point without an optimality proof.
    Feasible,
    Infeasible,
    /// CCP stopped on its improvement criterion.
    ConvergedStationary,
    /// Iteration budget exhausted; best iterate returned.
    MaxIterations,
}

/// Outcome of an orchestration solve: a full allocation plus the quantities
/// needed to audit it.
#[derive(Debug, Clone)]
pub struct OrchestrationResult {
    pub alloc: crate::powermodel::Allocation,
    pub total_power: f64,
    pub power_breakdown: PowerBreakdown,
    pub sinr: Vec<f64>,
    pub se: Vec<f64>,
    pub status: ResultStatus,
    pub iterations: usize,
    /// Proven relative optimality gap (exact solves; 0 when not applicable).
    pub gap: f64,
    /// Objective value after each CCP iteration (empty for exact solves).
    pub objective_trace: Vec<f64>,
}
