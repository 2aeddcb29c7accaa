use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::powermodel::{FronthaulParams, GopsParams, PowerParams, SplitOption};
use crate::sysmodel::{ScenarioOptions, SystemConfig};

/// How cloud and fronthaul resources are dimensioned for a solved allocation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Accounting {
    /// Globally pooled line cards and processors.
    EndToEnd,
    /// Pooling only within each wavelength group.
    LocalCoordination,
    /// Fixed provisioning; only radio-side sleep modes.
    RadioOnly,
}

impl Accounting {
    pub fn label(self) -> &'static str {
        match self {
            Accounting::EndToEnd => "end_to_end",
            Accounting::LocalCoordination => "local",
            Accounting::RadioOnly => "radio_only",
        }
    }
}

/// Which O-RU/UE association structure the solver enforces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Topology {
    /// Any UE may be served by any set of O-RUs.
    CellFree,
    /// Every UE is served by exactly one O-RU.
    SmallCell,
}

impl Topology {
    pub fn label(self) -> &'static str {
        match self {
            Topology::CellFree => "cell_free",
            Topology::SmallCell => "small_cell",
        }
    }
}

/// One benchmark variant: an association topology plus an accounting regime.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scheme {
    pub topology: Topology,
    pub accounting: Accounting,
}

impl Scheme {
    pub fn label(self) -> String {
        format!("{}/{}", self.topology.label(), self.accounting.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    /// Branch and bound; proven optima, limited to small association grids.
    Exact,
    /// Concave-convex procedure; scales to the full desk-size scenarios.
    Ccp,
}

/// Largest association-binary count (K·L) the exact solver accepts from the
/// harness; beyond this the branch-and-bound runtime is not dependable.
pub const EXACT_BINARY_BUDGET: usize = 64;

/// A full experiment description: scenario sizes, sweep axes, solver choice
/// and every module's parameter record. Unknown keys in a config file are
/// rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    /// Number of O-RUs.
    pub l: usize,
    /// Number of UEs.
    pub k: usize,
    /// Number of TWDM-PON wavelengths / GPP stacks.
    pub w: usize,
    pub seeds: Vec<u64>,
    /// Common per-UE SE targets (bit/s/Hz); each is one power-minimization
    /// sweep point.
    pub se_targets: Vec<f64>,
    /// Sum-SE/power trade-off weights; each is one joint-objective sweep
    /// point (cell-free only).
    pub lambdas: Vec<f64>,
    pub splits: Vec<SplitOption>,
    pub schemes: Vec<Scheme>,
    pub solver: SolverKind,
    /// Monte Carlo realizations for the channel-statistics estimate.
    pub n_mc: usize,
    /// Zero out wall-time fields so reruns are byte-identical.
    pub deterministic: bool,
    pub out_dir: Option<String>,
    pub system: SystemConfig,
    pub scenario: ScenarioOptions,
    pub power: PowerParams,
    pub gops: GopsParams,
    pub fronthaul: FronthaulParams,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig::preset_ccp()
    }
}

#[derive(Debug, Error)]
pub enum ConfigValidationError {
    #[error("config: {0}")]
    Invalid(String),
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error(transparent)]
    System(#[from] crate::sysmodel::ConfigError),
    #[error(transparent)]
    Power(#[from] crate::powermodel::PowerError),
}

fn all_schemes() -> Vec<Scheme> {
    let mut v = Vec::new();
    for topology in [Topology::CellFree, Topology::SmallCell] {
        for accounting in [
            Accounting::EndToEnd,
            Accounting::LocalCoordination,
            Accounting::RadioOnly,
        ] {
            v.push(Scheme { topology, accounting });
        }
    }
    v
}

impl ExperimentConfig {
    fn base(name: &str, l: usize, k: usize, w: usize, solver: SolverKind) -> Self {
        let system = SystemConfig::default();
        let power = PowerParams::table_default(system.n_antennas, w);
        ExperimentConfig {
            name: name.to_string(),
            l,
            k,
            w,
            seeds: (0..5).collect(),
            se_targets: vec![0.75, 1.25],
            lambdas: Vec::new(),
            splits: vec![SplitOption::Option7_2],
            schemes: all_schemes(),
            solver,
            n_mc: 200,
            deterministic: false,
            out_dir: None,
            system,
            scenario: ScenarioOptions::default(),
            power,
            gops: GopsParams::default(),
            fronthaul: FronthaulParams::default(),
        }
    }

    /// Small grid where branch and bound proves global optima.
    pub fn preset_exact() -> Self {
        Self::base("exact", 8, 4, 2, SolverKind::Exact)
    }

    /// Desk-scale CCP scenario.
    pub fn preset_ccp() -> Self {
        Self::base("ccp", 16, 8, 6, SolverKind::Ccp)
    }

    /// Larger deployment; CCP only.
    pub fn preset_large() -> Self {
        Self::base("large", 36, 8, 8, SolverKind::Ccp)
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "exact" => Some(Self::preset_exact()),
            "ccp" => Some(Self::preset_ccp()),
            "large" => Some(Self::preset_large()),
            _ => None,
        }
    }

    pub fn from_toml_str(s: &str) -> Result<Self, ConfigValidationError> {
        let cfg: ExperimentConfig = toml::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigValidationError> {
        let err = |m: String| Err(ConfigValidationError::Invalid(m));
        if self.l == 0 || self.k == 0 || self.w == 0 {
            return err("l, k and w must be positive".into());
        }
        if self.seeds.is_empty() {
            return err("at least one seed is required".into());
        }
        if self.schemes.is_empty() {
            return err("at least one scheme is required".into());
        }
        if self.se_targets.is_empty() && self.lambdas.is_empty() {
            return err("at least one SE target or lambda is required".into());
        }
        if self.se_targets.iter().any(|&t| !(t > 0.0)) {
            return err("SE targets must be positive".into());
        }
        if self.lambdas.iter().any(|&t| !(t > 0.0)) {
            return err("lambda values must be positive".into());
        }
        if self.splits.is_empty() {
            return err("at least one functional split is required".into());
        }
        if self.solver == SolverKind::Exact && self.k * self.l > EXACT_BINARY_BUDGET {
            return err(format!(
                "exact solver limited to K*L <= {EXACT_BINARY_BUDGET} association binaries, got {}",
                self.k * self.l
            ));
        }
        if self.n_mc < 2 {
            return err("n_mc must be at least 2".into());
        }
        if self.power.w != self.w {
            return err(format!(
                "power.w = {} must equal the wavelength count w = {}",
                self.power.w, self.w
            ));
        }
        self.system.validate()?;
        self.power.validate()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate() {
        for name in ["exact", "ccp", "large"] {
            ExperimentConfig::preset(name).unwrap().validate().unwrap();
        }
        assert!(ExperimentConfig::preset("nope").is_none());
    }

    #[test]
    fn toml_roundtrip() {
        let cfg = ExperimentConfig::preset_exact();
        let s = cfg.to_toml_string();
        let back = ExperimentConfig::from_toml_str(&s).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn unknown_keys_rejected() {
        let mut s = ExperimentConfig::preset_exact().to_toml_string();
        s.push_str("\nnot_a_key = 3\n");
        assert!(matches!(
            ExperimentConfig::from_toml_str(&s),
            Err(ConfigValidationError::Parse(_))
        ));
    }

    #[test]
    fn invalid_configs_rejected() {
        let mut cfg = ExperimentConfig::preset_exact();
        cfg.seeds.clear();
        assert!(cfg.validate().is_err());

        let mut cfg = ExperimentConfig::preset_ccp();
        cfg.solver = SolverKind::Exact;
        assert!(cfg.validate().is_err(), "128 binaries exceed the exact budget");

        let mut cfg = ExperimentConfig::preset_exact();
        cfg.se_targets.clear();
        cfg.lambdas.clear();
        assert!(cfg.validate().is_err());
    }
}
