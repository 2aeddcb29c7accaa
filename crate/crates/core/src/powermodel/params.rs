use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Functional split: where the low-PHY (filtering + DFT) runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SplitOption {
    /// RF-only radio; all baseband in the cloud.
    Option8,
    /// Low-PHY at the radio, high-PHY in the cloud.
    Option7_2,
}

impl SplitOption {
    /// The binary split indicator: 1 for Option 7.2, 0 for Option 8.
    pub fn indicator(self) -> f64 {
        match self {
            SplitOption::Option8 => 0.0,
            SplitOption::Option7_2 => 1.0,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            SplitOption::Option8 => "FS-8",
            SplitOption::Option7_2 => "FS-7.2",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FronthaulParams {
    /// TWDM-PON wavelength capacity (bit/s).
    pub r_max: f64,
    /// Quantizer resolution (bits).
    pub n_bits: usize,
}

impl Default for FronthaulParams {
    fn default() -> Self {
        Self { r_max: 10e9, n_bits: 12 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PowerParams {
    /// Static O-RU power at zero transmit (W).
    pub p_ru0: f64,
    /// Transmit-power slope (unitless).
    pub delta_tr: f64,
    /// Idle O-RU processing power, Option 7.2 only (W).
    pub p_ru0_proc: f64,
    /// O-RU processing power slope (W at full utilization).
    pub delta_ru_proc: f64,
    /// O-RU processing capacity (GOPS).
    pub c_ru_max: f64,
    /// ONU power per active O-RU (W).
    pub p_onu: f64,
    /// Load-independent cloud power (W).
    pub p_fixed: f64,
    /// Cooling efficiency in (0, 1].
    pub sigma_cool: f64,
    /// OLT line-card power per active LC (W).
    pub p_olt: f64,
    /// Idle GPP processing power (W).
    pub p_gpp0_proc: f64,
    /// GPP processing power slope (W at full utilization).
    pub delta_gpp_proc: f64,
    /// Per-GPP processing capacity (GOPS).
    pub c_gpp_max: f64,
    /// Number of GPP stacks in the cloud.
    pub w: usize,
}

impl PowerParams {
    /// Table-default parameters; the O-RU static power scales with the
    /// antenna count as 6.8 W per antenna.
    pub fn table_default(n_antennas: usize, w: usize) -> Self {
        Self {
            p_ru0: 6.8 * n_antennas as f64,
            delta_tr: 4.0,
            p_ru0_proc: 20.8,
            delta_ru_proc: 74.0,
            c_ru_max: 180.0,
            p_onu: 7.7,
            p_fixed: 120.0,
            sigma_cool: 0.9,
            p_olt: 20.0,
            p_gpp0_proc: 20.8,
            delta_gpp_proc: 74.0,
            c_gpp_max: 180.0,
            w,
        }
    }

    pub fn validate(&self) -> Result<(), PowerError> {
        if !(self.sigma_cool > 0.0 && self.sigma_cool <= 1.0) {
            return Err(PowerError::BadParameter("sigma_cool must lie in (0, 1]".into()));
        }
        for (name, v) in [
            ("p_ru0", self.p_ru0),
            ("delta_tr", self.delta_tr),
            ("p_ru0_proc", self.p_ru0_proc),
            ("delta_ru_proc", self.delta_ru_proc),
            ("p_onu", self.p_onu),
            ("p_fixed", self.p_fixed),
            ("p_olt", self.p_olt),
            ("p_gpp0_proc", self.p_gpp0_proc),
            ("delta_gpp_proc", self.delta_gpp_proc),
        ] {
            if v < 0.0 {
                return Err(PowerError::BadParameter(format!("{name} must be nonnegative")));
            }
        }
        if !(self.c_ru_max > 0.0 && self.c_gpp_max > 0.0) {
            return Err(PowerError::BadParameter("processing capacities must be positive".into()));
        }
        if self.w == 0 {
            return Err(PowerError::BadParameter("w (GPP stack count) must be at least 1".into()));
        }
        Ok(())
    }
}

impl Default for PowerParams {
    fn default() -> Self {
        Self::table_default(4, 4)
    }
}

/// GOPS contributions the cited external model leaves unnumbered; all default
/// to zero and are config-exposed.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GopsParams {
    /// Per-active-O-RU GOPS of the non-precoding operations.
    pub c_other_oru: f64,
    /// Per-served-UE GOPS of the non-precoding operations.
    pub c_other_ue: f64,
    /// Fixed GOPS independent of the allocation.
    pub f_fixed: f64,
}

#[derive(Debug, Error, PartialEq)]
pub enum PowerError {
    #[error("invalid parameter: {0}")]
    BadParameter(String),
    #[error("O-RU processing overload: {load:.3} GOPS exceeds capacity {cap:.3} GOPS")]
    RuOverload { load: f64, cap: f64 },
    #[error("GPP overload: {load:.3} GOPS exceeds {n_gpp} x {cap:.3} GOPS")]
    GppOverload { load: f64, n_gpp: usize, cap: f64 },
    #[error("cloud capacity exceeded: {needed} GPPs required, {available} available")]
    CloudCapacity { needed: usize, available: usize },
    #[error("split infeasible: fronthaul rate exceeds wavelength capacity (W_max = 0)")]
    SplitInfeasible,
    #[error("activation cap violated: {active} active O-RUs exceed W_max*W = {cap}")]
    ActivationCap { active: usize, cap: usize },
}

/// The full decision-variable bundle: association, activation, square-root
/// powers, and cloud dimensioning counts.
#[derive(Debug, Clone, PartialEq)]
pub struct Allocation {
    /// K x L association bits.
    pub x: DMatrix<bool>,
    /// Per-O-RU activation bits.
    pub z: Vec<bool>,
    /// K x L square-root powers (sqrt W); nonzero only where x is set.
    pub rho: DMatrix<f64>,
    /// Active optical line cards.
    pub n_lc: usize,
    /// Active GPPs.
    pub n_gpp: usize,
}

impl Allocation {
    pub fn empty(k: usize, l: usize) -> Self {
        Self {
            x: DMatrix::from_element(k, l, false),
            z: vec![false; l],
            rho: DMatrix::zeros(k, l),
            n_lc: 1,
            n_gpp: 1,
        }
    }

    pub fn num_ues(&self) -> usize {
        self.x.nrows()
    }

    pub fn num_orus(&self) -> usize {
        self.x.ncols()
    }

    pub fn sum_z(&self) -> usize {
        self.z.iter().filter(|&&b| b).count()
    }

    pub fn sum_x(&self) -> usize {
        self.x.iter().filter(|&&b| b).count()
    }

    /// Transmit power of O-RU l (W).
    pub fn transmit_power(&self, l: usize) -> f64 {
        self.rho.column(l).iter().map(|r| r * r).sum()
    }

    /// Checks the structural invariants that tie x, z, and rho together.
    pub fn check_structure(&self, p_max: f64) -> Result<(), String> {
        let (k, l) = self.x.shape();
        if self.rho.shape() != (k, l) || self.z.len() != l {
            return Err("dimension mismatch between x, z, rho".into());
        }
        for li in 0..l {
            let served = (0..k).any(|ki| self.x[(ki, li)]);
            if served != self.z[li] {
                return Err(format!("z[{li}] inconsistent with column of x"));
            }
            for ki in 0..k {
                if self.rho[(ki, li)] > 0.0 && !self.x[(ki, li)] {
                    return Err(format!("rho[{ki},{li}] > 0 with x = 0"));
                }
                if self.rho[(ki, li)] < 0.0 {
                    return Err(format!("rho[{ki},{li}] negative"));
                }
            }
            let norm: f64 = self.transmit_power(li);
            if norm > p_max * (1.0 + 1e-9) {
                return Err(format!("per-O-RU budget violated at {li}: {norm} > {p_max}"));
            }
        }
        if self.n_gpp < self.n_lc || self.n_lc < 1 {
            return Err("count invariants n_gpp >= n_lc >= 1 violated".into());
        }
        Ok(())
    }
}
