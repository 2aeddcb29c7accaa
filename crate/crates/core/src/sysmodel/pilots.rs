use num_complex::Complex64;

use super::scenario::Scenario;
use crate::linalg::CMat;

/// Pilot bookkeeping: `t[k]` is the pilot index of UE k and `copilot[t]`
/// lists the UEs sharing pilot t.
#[derive(Debug, Clone, PartialEq)]
pub struct PilotAssignment {
    pub t: Vec<usize>,
    pub copilot: Vec<Vec<usize>>,
    pub tau_p: usize,
}

impl PilotAssignment {
    /// UEs sharing UE k's pilot, including k itself.
    pub fn peers(&self, k: usize) -> &[usize] {
        &self.copilot[self.t[k]]
    }
}

/// tau_p x tau_p codebook with exactly orthogonal columns, phi_t^H phi_t = tau_p.
///
/// Walsh-Hadamard (entries +-1, orthogonal in floating point with no rounding)
/// when tau_p is a power of two, DFT columns otherwise.
pub fn pilot_matrix(tau_p: usize) -> CMat {
    assert!(tau_p > 0);
    if tau_p.is_power_of_two() {
        CMat::from_fn(tau_p, tau_p, |r, c| {
            let sign = if (r & c).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
            Complex64::new(sign, 0.0)
        })
    } else {
        CMat::from_fn(tau_p, tau_p, |r, c| {
            Complex64::from_polar(
                1.0,
                -2.0 * std::f64::consts::PI * (r * c) as f64 / tau_p as f64,
            )
        })
    }
}

/// Greedy pilot assignment: the first min(K, tau_p) UEs receive distinct
/// pilots; each remaining UE takes the pilot with the least received pilot
/// power at its strongest O-RU. Transmit powers are uniform, so comparing
/// summed gains is equivalent.
pub fn assign_pilots(scenario: &Scenario, tau_p: usize) -> PilotAssignment {
    let k_total = scenario.n_ues();
    let l_total = scenario.n_orus();
    let mut t = vec![0usize; k_total];
    let mut copilot: Vec<Vec<usize>> = vec![Vec::new(); tau_p];

    for k in 0..k_total {
        let pilot = if k < tau_p {
            k
        } else {
            let row = scenario.beta.row(k);
            let l_star = (0..l_total)
                .max_by(|&a, &b| row[a].total_cmp(&row[b]))
                .expect("scenario with no O-RUs");
            (0..tau_p)
                .min_by(|&a, &b| {
                    let load = |p: usize| -> f64 {
                        copilot[p].iter().map(|&i| scenario.beta[(i, l_star)]).sum()
                    };
                    load(a).total_cmp(&load(b))
                })
                .unwrap()
        };
        t[k] = pilot;
        copilot[pilot].push(k);
    }

    PilotAssignment { t, copilot, tau_p }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sysmodel::config::SystemConfig;
    use crate::sysmodel::scenario::{generate_scenario, ScenarioOptions};

    #[test]
    fn hadamard_columns_exactly_orthogonal() {
        for &tau in &[1usize, 2, 4, 8, 16] {
            let phi = pilot_matrix(tau);
            let gram = phi.adjoint() * &phi;
            for r in 0..tau {
                for c in 0..tau {
                    let expect = if r == c { tau as f64 } else { 0.0 };
                    assert_eq!(gram[(r, c)], Complex64::new(expect, 0.0));
                }
            }
        }
    }

    #[test]
    fn dft_columns_orthogonal_to_rounding() {
        let tau = 6;
        let phi = pilot_matrix(tau);
        let gram = phi.adjoint() * &phi;
        for r in 0..tau {
            for c in 0..tau {
                let expect = if r == c { tau as f64 } else { 0.0 };
                assert!((gram[(r, c)] - Complex64::new(expect, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn few_ues_get_distinct_pilots() {
        let cfg = SystemConfig::default();
        let s = generate_scenario(&cfg, 6, 5, 3, &ScenarioOptions::default()).unwrap();
        let pa = assign_pilots(&s, 8);
        assert_eq!(pa.t, vec![0, 1, 2, 3, 4]);
        assert!(pa.copilot[5].is_empty());
    }

    #[test]
    fn reuse_balances_and_partitions() {
        let cfg = SystemConfig::default();
        let s = generate_scenario(&cfg, 8, 10, 9, &ScenarioOptions::default()).unwrap();
        let pa = assign_pilots(&s, 4);
        // copilot sets partition the UE set
        let mut seen = vec![false; 10];
        for (p, set) in pa.copilot.iter().enumerate() {
            for &k in set {
                assert_eq!(pa.t[k], p);
                assert!(!seen[k]);
                seen[k] = true;
            }
        }
        assert!(seen.iter().all(|&s| s));
        assert!(pa.peers(0).contains(&0));
    }
}
