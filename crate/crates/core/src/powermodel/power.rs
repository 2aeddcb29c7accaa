use serde::{Deserialize, Serialize};

use super::gops::{gops_gpp_counts, gops_ru, GopsCoefficients};
use super::params::{Allocation, PowerError, PowerParams, SplitOption};

/// Ceiling of a ratio of nonnegative floats, robust to values sitting exactly
/// on a multiple of the denominator.
fn ceil_div(load: f64, cap: f64) -> usize {
    ((load / cap) - 1e-9).ceil().max(0.0) as usize
}

/// Power drawn by O-RU `l`: activation-gated static and processing terms plus
/// the transmit-slope term.
pub fn power_ru(
    alloc: &Allocation,
    l: usize,
    pp: &PowerParams,
    coeffs: &GopsCoefficients,
    split: SplitOption,
) -> Result<f64, PowerError> {
    let c_ru = gops_ru(split, coeffs);
    if c_ru > pp.c_ru_max {
        return Err(PowerError::RuOverload { load: c_ru, cap: pp.c_ru_max });
    }
    let z = if alloc.z[l] { 1.0 } else { 0.0 };
    let statics = pp.p_ru0 + split.indicator() * (pp.p_ru0_proc + pp.delta_ru_proc * c_ru / pp.c_ru_max);
    Ok(z * statics + pp.delta_tr * alloc.transmit_power(l))
}

/// Cloud power for given dimensioning counts and processing load.
pub fn power_cloud(alloc: &Allocation, pp: &PowerParams, coeffs: &GopsCoefficients) -> Result<f64, PowerError> {
    let c_gpp = gops_gpp_counts(alloc.sum_z(), alloc.sum_x(), coeffs);
    power_cloud_from_counts(alloc.n_lc, alloc.n_gpp, c_gpp, pp)
}

pub fn power_cloud_from_counts(
    n_lc: usize,
    n_gpp: usize,
    c_gpp: f64,
    pp: &PowerParams,
) -> Result<f64, PowerError> {
    if c_gpp > n_gpp as f64 * pp.c_gpp_max * (1.0 + 1e-12) {
        return Err(PowerError::GppOverload { load: c_gpp, n_gpp, cap: pp.c_gpp_max });
    }
    Ok(pp.p_fixed
        + (pp.p_olt * n_lc as f64
            + pp.p_gpp0_proc * n_gpp as f64
            + pp.delta_gpp_proc * c_gpp / pp.c_gpp_max)
            / pp.sigma_cool)
}

/// End-to-end total: radio sites, ONUs, and cloud.
pub fn power_total(
    alloc: &Allocation,
    pp: &PowerParams,
    coeffs: &GopsCoefficients,
    split: SplitOption,
) -> Result<f64, PowerError> {
    Ok(breakdown(alloc, pp, coeffs, split)?.total())
}

/// Minimal feasible (n_LC, n_GPP) for an activation/association pattern. The
/// objective is increasing in both counts, so the smallest pair satisfying
/// the LC-per-wavelength and GOPS-capacity couplings is optimal.
pub fn cloud_dimensioning(
    sum_z: usize,
    sum_x: usize,
    coeffs: &GopsCoefficients,
    w_max: usize,
    pp: &PowerParams,
) -> Result<(usize, usize), PowerError> {
    if w_max == 0 {
        return Err(PowerError::SplitInfeasible);
    }
    if sum_z > w_max * pp.w {
        return Err(PowerError::ActivationCap { active: sum_z, cap: w_max * pp.w });
    }
    let n_lc = sum_z.div_ceil(w_max).max(1);
    let load = gops_gpp_counts(sum_z, sum_x, coeffs);
    let n_gpp = n_lc.max(ceil_div(load, pp.c_gpp_max)).max(1);
    if n_gpp > pp.w {
        return Err(PowerError::CloudCapacity { needed: n_gpp, available: pp.w });
    }
    Ok((n_lc, n_gpp))
}

/// Per-component power report; the components sum to the total by
/// construction.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PowerBreakdown {
    pub ru_static: f64,
    pub transmit: f64,
    pub ru_processing: f64,
    pub onu: f64,
    pub olt: f64,
    pub gpp_idle: f64,
    pub gpp_load: f64,
    pub fixed: f64,
}

impl PowerBreakdown {
    pub fn total(&self) -> f64 {
        self.ru_static
            + self.transmit
            + self.ru_processing
            + self.onu
            + self.olt
            + self.gpp_idle
            + self.gpp_load
            + self.fixed
    }
}

pub fn breakdown(
    alloc: &Allocation,
    pp: &PowerParams,
    coeffs: &GopsCoefficients,
    split: SplitOption,
) -> Result<PowerBreakdown, PowerError> {
    let c_ru = gops_ru(split, coeffs);
    if c_ru > pp.c_ru_max {
        return Err(PowerError::RuOverload { load: c_ru, cap: pp.c_ru_max });
    }
    let active = alloc.sum_z() as f64;
    let c_gpp = gops_gpp_counts(alloc.sum_z(), alloc.sum_x(), coeffs);
    if c_gpp > alloc.n_gpp as f64 * pp.c_gpp_max * (1.0 + 1e-12) {
        return Err(PowerError::GppOverload { load: c_gpp, n_gpp: alloc.n_gpp, cap: pp.c_gpp_max });
    }
    let transmit: f64 = (0..alloc.num_orus()).map(|l| alloc.transmit_power(l)).sum();
    Ok(PowerBreakdown {
        ru_static: active * pp.p_ru0,
        transmit: pp.delta_tr * transmit,
        ru_processing: active * split.indicator() * (pp.p_ru0_proc + pp.delta_ru_proc * c_ru / pp.c_ru_max),
        onu: active * pp.p_onu,
        olt: pp.p_olt * alloc.n_lc as f64 / pp.sigma_cool,
        gpp_idle: pp.p_gpp0_proc * alloc.n_gpp as f64 / pp.sigma_cool,
        gpp_load: pp.delta_gpp_proc * c_gpp / (pp.c_gpp_max * pp.sigma_cool),
        fixed: pp.p_fixed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::powermodel::gops::gops_coefficients;
    use crate::powermodel::params::GopsParams;
    use crate::sysmodel::SystemConfig;
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};

    fn setup(split: SplitOption) -> (PowerParams, GopsCoefficients) {
        let pp = PowerParams::table_default(4, 4);
        let coeffs = gops_coefficients(&SystemConfig::default(), split, &GopsParams::default());
        (pp, coeffs)
    }

    fn single_ru_alloc(tx_power: f64) -> Allocation {
        let mut alloc = Allocation::empty(1, 1);
        alloc.x[(0, 0)] = true;
        alloc.z[0] = true;
        alloc.rho[(0, 0)] = tx_power.sqrt();
        alloc
    }

    #[test]
    fn inactive_ru_draws_nothing() {
        let (pp, coeffs) = setup(SplitOption::Option8);
        let alloc = Allocation::empty(2, 3);
        for l in 0..3 {
            assert_eq!(power_ru(&alloc, l, &pp, &coeffs, SplitOption::Option8).unwrap(), 0.0);
        }
    }

    #[test]
    fn active_ru_option8_half_watt() {
        let (pp, coeffs) = setup(SplitOption::Option8);
        let p = power_ru(&single_ru_alloc(0.5), 0, &pp, &coeffs, SplitOption::Option8).unwrap();
        assert!((p - 29.2).abs() < 1e-9, "{p}");
    }

    #[test]
    fn active_ru_option72_idle() {
        let (pp, coeffs) = setup(SplitOption::Option7_2);
        let p = power_ru(&single_ru_alloc(0.0), 0, &pp, &coeffs, SplitOption::Option7_2).unwrap();
        // 27.2 + 20.8 + 74 * 15.0118 / 180
        assert!((p - 54.1715).abs() < 1e-3, "{p}");
    }

    #[test]
    fn ru_overload_flagged() {
        let (mut pp, coeffs) = setup(SplitOption::Option7_2);
        pp.c_ru_max = 10.0; // below the 15.01 GOPS low-PHY load
        let err = power_ru(&single_ru_alloc(0.0), 0, &pp, &coeffs, SplitOption::Option7_2).unwrap_err();
        assert!(matches!(err, PowerError::RuOverload { .. }));
    }

    #[test]
    fn cloud_power_table_example() {
        let pp = PowerParams::table_default(4, 4);
        let p = power_cloud_from_counts(1, 2, 180.0, &pp).unwrap();
        assert!((p - (120.0 + (20.0 + 41.6 + 74.0) / 0.9)).abs() < 1e-9, "{p}");
    }

    #[test]
    fn cloud_floor_is_fixed_power() {
        let pp = PowerParams::table_default(4, 4);
        let p = power_cloud_from_counts(0, 0, 0.0, &pp).unwrap();
        assert_eq!(p, 120.0);
    }

    #[test]
    fn cooling_divisor_identity_at_one() {
        let mut pp = PowerParams::table_default(4, 4);
        pp.sigma_cool = 1.0;
        let p = power_cloud_from_counts(1, 1, 90.0, &pp).unwrap();
        assert!((p - (120.0 + 20.0 + 20.8 + 37.0)).abs() < 1e-9);
    }

    #[test]
    fn gpp_overload_flagged() {
        let pp = PowerParams::table_default(4, 4);
        assert!(matches!(
            power_cloud_from_counts(1, 1, 181.0, &pp),
            Err(PowerError::GppOverload { .. })
        ));
    }

    #[test]
    fn dimensioning_examples() {
        let pp = PowerParams::table_default(4, 4);
        let coeffs = GopsCoefficients {
            c_filter: 0.0,
            c_dft: 0.0,
            s_low_phy: 0.0,
            z_coeff: 40.0,
            x_coeff: 0.0,
            f_fixed: 0.0,
        };
        // 5 active O-RUs at W_max = 3 need 2 LCs; the 200 GOPS load needs 2 GPPs.
        assert_eq!(cloud_dimensioning(5, 0, &coeffs, 3, &pp).unwrap(), (2, 2));
        // Empty network still keeps one LC and one GPP selected.
        assert_eq!(cloud_dimensioning(0, 0, &coeffs, 3, &pp).unwrap(), (1, 1));
        // Boundary: all wavelengths full.
        let light = GopsCoefficients { z_coeff: 1.0, ..coeffs };
        assert_eq!(cloud_dimensioning(12, 0, &light, 3, &pp).unwrap(), (4, 4));
    }

    #[test]
    fn dimensioning_is_componentwise_minimal() {
        let pp = PowerParams::table_default(4, 8);
        let coeffs = GopsCoefficients {
            c_filter: 0.0,
            c_dft: 0.0,
            s_low_phy: 0.0,
            z_coeff: 31.0,
            x_coeff: 4.0,
            f_fixed: 7.0,
        };
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let sum_z = rng.gen_range(0..=12usize);
            let sum_x = rng.gen_range(sum_z..=sum_z * 4 + 1);
            let w_max = rng.gen_range(1..=4usize);
            let Ok((n_lc, n_gpp)) = cloud_dimensioning(sum_z, sum_x, &coeffs, w_max, &pp) else {
                continue;
            };
            let load = gops_gpp_counts(sum_z, sum_x, &coeffs);
            // Feasible as returned.
            assert!(n_lc * w_max >= sum_z || n_lc >= 1);
            assert!(n_gpp as f64 * pp.c_gpp_max >= load - 1e-9);
            assert!(n_gpp >= n_lc);
            // Decrementing either count breaks some coupling.
            if n_lc > 1 {
                assert!((n_lc - 1) * w_max < sum_z, "n_lc not minimal");
            }
            if n_gpp > 1 {
                let dec = n_gpp - 1;
                assert!(
                    dec < n_lc || (dec as f64) * pp.c_gpp_max < load - 1e-9,
                    "n_gpp not minimal"
                );
            }
        }
    }

    #[test]
    fn split_infeasible_surfaces() {
        let pp = PowerParams::table_default(4, 4);
        let coeffs = gops_coefficients(&SystemConfig::default(), SplitOption::Option8, &GopsParams::default());
        assert_eq!(cloud_dimensioning(1, 1, &coeffs, 0, &pp), Err(PowerError::SplitInfeasible));
    }

    #[test]
    fn total_is_additive_over_parts() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let (pp, coeffs) = setup(SplitOption::Option7_2);
        for _ in 0..100 {
            let (k, l) = (4, 6);
            let x = DMatrix::from_fn(k, l, |_, _| rng.gen_bool(0.5));
            let z: Vec<bool> = (0..l).map(|li| (0..k).any(|ki| x[(ki, li)])).collect();
            let rho = DMatrix::from_fn(k, l, |ki, li| if x[(ki, li)] { rng.gen::<f64>() * 0.4 } else { 0.0 });
            let sum_z = z.iter().filter(|&&b| b).count();
            let sum_x = x.iter().filter(|&&b| b).count();
            let (n_lc, n_gpp) = cloud_dimensioning(sum_z, sum_x, &coeffs, 6, &pp).unwrap();
            let alloc = Allocation { x, z, rho, n_lc, n_gpp };
            let parts: f64 = (0..l)
                .map(|li| power_ru(&alloc, li, &pp, &coeffs, SplitOption::Option7_2).unwrap())
                .sum::<f64>()
                + sum_z as f64 * pp.p_onu
                + power_cloud(&alloc, &pp, &coeffs).unwrap();
            let total = power_total(&alloc, &pp, &coeffs, SplitOption::Option7_2).unwrap();
            assert!((parts - total).abs() < 1e-9 * total, "{parts} vs {total}");
            let bd = breakdown(&alloc, &pp, &coeffs, SplitOption::Option7_2).unwrap();
            assert!((bd.total() - total).abs() < 1e-9 * total);
        }
    }

    #[test]
    fn activating_idle_ru_never_cheaper() {
        let (pp, coeffs) = setup(SplitOption::Option8);
        let mut alloc = Allocation::empty(1, 2);
        alloc.x[(0, 0)] = true;
        alloc.z[0] = true;
        alloc.rho[(0, 0)] = 0.3;
        let base = power_total(&alloc, &pp, &coeffs, SplitOption::Option8).unwrap();
        alloc.x[(0, 1)] = true;
        alloc.z[1] = true;
        let more = power_total(&alloc, &pp, &coeffs, SplitOption::Option8).unwrap();
        assert!(more >= base);
    }

    #[test]
    fn total_is_affine_in_squared_powers() {
        // Three-point collinearity in t where rho^2 scales with t.
        let (pp, coeffs) = setup(SplitOption::Option8);
        let make = |t: f64| {
            let mut alloc = Allocation::empty(2, 2);
            for (k, l) in [(0usize, 0usize), (1, 1)] {
                alloc.x[(k, l)] = true;
                alloc.z[l] = true;
                alloc.rho[(k, l)] = (0.2 * t).sqrt();
            }
            alloc.n_lc = 1;
            alloc.n_gpp = 1;
            power_total(&alloc, &pp, &coeffs, SplitOption::Option8).unwrap()
        };
        let (p0, p1, p2) = (make(0.0), make(1.0), make(2.0));
        assert!((p2 - 2.0 * p1 + p0).abs() < 1e-9);
    }
}
