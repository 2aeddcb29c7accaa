use serde::{Deserialize, Serialize};

use crate::sysmodel::SystemConfig;

use super::params::{Allocation, GopsParams, SplitOption};

/// Processing-load coefficients derived from the system numerology. `z_coeff`
/// multiplies the number of active O-RUs in the cloud load, `x_coeff` the
/// number of UE-O-RU associations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GopsCoefficients {
    /// Polyphase baseband filtering load per O-RU (GOPS).
    pub c_filter: f64,
    /// FFT/IFFT load per O-RU (GOPS).
    pub c_dft: f64,
    /// Low-PHY total: filter + DFT (GOPS).
    pub s_low_phy: f64,
    /// Cloud GOPS per active O-RU.
    pub z_coeff: f64,
    /// Cloud GOPS per served UE association.
    pub x_coeff: f64,
    /// Fixed cloud GOPS.
    pub f_fixed: f64,
}

/// Derives all GOPS coefficients for a split, decomposing the precoding load
/// into a per-active-O-RU constant and a per-association slope.
pub fn gops_coefficients(cfg: &SystemConfig, split: SplitOption, gp: &GopsParams) -> GopsCoefficients {
    let n = cfg.n_antennas as f64;
    let tau_p = cfg.tau_p as f64;
    let tau_c = cfg.tau_c() as f64;
    let tau_d = cfg.tau_d() as f64;

    let c_filter = 40.0 * n * cfg.f_s / 1e9;
    let c_dft = 8.0 * n * cfg.n_dft as f64 * (cfg.n_dft as f64).log2() / (cfg.t_s * 1e9);
    let s_low_phy = c_filter + c_dft;

    // Sample-rate scale shared by every estimation/precoding term.
    let scale = cfg.n_used as f64 / (cfg.t_s * tau_c * 1e9);
    let prec_const =
        scale * (8.0 * n * tau_p * tau_p + 8.0 * n * n * tau_p + (4.0 * n * n + 4.0 * n) * tau_p
            + 8.0 * (n * n * n - n) / 3.0);
    let prec_per_ue = scale * (16.0 * n * n + 8.0 * n * (tau_d + 1.0));

    GopsCoefficients {
        c_filter,
        c_dft,
        s_low_phy,
        z_coeff: (1.0 - split.indicator()) * s_low_phy + prec_const + gp.c_other_oru,
        x_coeff: prec_per_ue + gp.c_other_ue,
        f_fixed: gp.f_fixed,
    }
}

/// GOPS running on each active O-RU: the low-PHY under Option 7.2, nothing
/// under Option 8.
pub fn gops_ru(split: SplitOption, coeffs: &GopsCoefficients) -> f64 {
    split.indicator() * coeffs.s_low_phy
}

/// Total cloud GOPS of an allocation.
pub fn gops_gpp(alloc: &Allocation, coeffs: &GopsCoefficients) -> f64 {
    gops_gpp_counts(alloc.sum_z(), alloc.sum_x(), coeffs)
}

/// Cloud GOPS from activation/association counts.
pub fn gops_gpp_counts(sum_z: usize, sum_x: usize, coeffs: &GopsCoefficients) -> f64 {
    coeffs.z_coeff * sum_z as f64 + coeffs.x_coeff * sum_x as f64 + coeffs.f_fixed
}
