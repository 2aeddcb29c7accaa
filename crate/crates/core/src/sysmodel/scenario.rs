use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::SystemConfig;
use super::correlation::{spatial_correlation, CorrelationError, CorrelationModel};
use crate::linalg::CMat;

/// Knobs for scenario generation that are not part of the system config.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioOptions {
    pub model: CorrelationModel,
    /// Log-normal shadow fading standard deviation in dB (0 disables it).
    pub shadowing_std_db: f64,
    /// Vertical O-RU/UE separation folded into every link distance.
    pub height_m: f64,
}

impl Default for ScenarioOptions {
    fn default() -> Self {
        ScenarioOptions {
            model: CorrelationModel::default(),
            shadowing_std_db: 4.0,
            height_m: 10.0,
        }
    }
}

/// One dropped network realization: positions, large-scale gains and the
/// per-link spatial correlation matrices.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub oru_positions: Vec<[f64; 2]>,
    pub ue_positions: Vec<[f64; 2]>,
    /// K x L average channel gains.
    pub beta: DMatrix<f64>,
    /// r[k][l] is the N x N correlation matrix of UE k seen from O-RU l.
    pub r: Vec<Vec<CMat>>,
    pub n_antennas: usize,
}

impl Scenario {
    pub fn n_orus(&self) -> usize {
        self.oru_positions.len()
    }

    pub fn n_ues(&self) -> usize {
        self.ue_positions.len()
    }
}

/// Average gain of the 3GPP-style pathloss curve at 3D distance `d` in meters.
pub fn path_loss(d: f64) -> f64 {
    let beta_db = -30.5 - 36.7 * d.log10();
    10f64.powf(beta_db / 10.0)
}

/// Drops `l` O-RUs and `k` UEs uniformly on the square deployment area and
/// builds the large-scale model. Deterministic in `seed`.
pub fn generate_scenario(
    cfg: &SystemConfig,
    l: usize,
    k: usize,
    seed: u64,
    opts: &ScenarioOptions,
) -> Result<Scenario, CorrelationError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let side = cfg.area;
    let oru_positions: Vec<[f64; 2]> = (0..l)
        .map(|_| [rng.gen::<f64>() * side, rng.gen::<f64>() * side])
        .collect();
    let ue_positions: Vec<[f64; 2]> = (0..k)
        .map(|_| [rng.gen::<f64>() * side, rng.gen::<f64>() * side])
        .collect();

    let mut beta = DMatrix::zeros(k, l);
    let mut r = Vec::with_capacity(k);
    for ki in 0..k {
        let mut row = Vec::with_capacity(l);
        for li in 0..l {
            let dx = ue_positions[ki][0] - oru_positions[li][0];
            let dy = ue_positions[ki][1] - oru_positions[li][1];
            let d = (dx * dx + dy * dy + opts.height_m * opts.height_m).sqrt();
            let shadow_db = if opts.shadowing_std_db > 0.0 {
                opts.shadowing_std_db * sample_standard_normal(&mut rng)
            } else {
                0.0
            };
            let b = path_loss(d) * 10f64.powf(shadow_db / 10.0);
            let angle = dy.atan2(dx);
            beta[(ki, li)] = b;
            row.push(spatial_correlation(opts.model, angle, b, cfg.n_antennas)?);
        }
        r.push(row);
    }

    Ok(Scenario {
        oru_positions,
        ue_positions,
        beta,
        r,
        n_antennas: cfg.n_antennas,
    })
}

/// Box-Muller; avoids pulling in a distributions crate for one sampler.
pub(crate) fn sample_standard_normal<R: Rng>(rng: &mut R) -> f64 {
    let u1: f64 = loop {
        let u = rng.gen::<f64>();
        if u > 0.0 {
            break u;
        }
    };
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn path_loss_example() {
        // 140 m horizontal + 10 m height
        let d = (140.0f64 * 140.0 + 100.0).sqrt();
        let beta_db = 10.0 * path_loss(d).log10();
        assert!((beta_db - (-30.5 - 36.7 * d.log10())).abs() < 1e-12);
        assert!((beta_db + 109.375).abs() < 0.1, "got {beta_db}");
    }

    #[test]
    fn deterministic_in_seed() {
        let cfg = SystemConfig::default();
        let opts = ScenarioOptions::default();
        let a = generate_scenario(&cfg, 4, 3, 7, &opts).unwrap();
        let b = generate_scenario(&cfg, 4, 3, 7, &opts).unwrap();
        let c = generate_scenario(&cfg, 4, 3, 8, &opts).unwrap();
        assert_eq!(a.beta, b.beta);
        assert_eq!(a.oru_positions, b.oru_positions);
        assert_ne!(a.beta, c.beta);
    }

    #[test]
    fn positions_in_area_and_gains_monotone_without_shadowing() {
        let cfg = SystemConfig::default();
        let opts = ScenarioOptions {
            shadowing_std_db: 0.0,
            ..ScenarioOptions::default()
        };
        let s = generate_scenario(&cfg, 6, 5, 11, &opts).unwrap();
        for p in s.oru_positions.iter().chain(s.ue_positions.iter()) {
            assert!(p[0] >= 0.0 && p[0] <= cfg.area && p[1] >= 0.0 && p[1] <= cfg.area);
        }
        // without shadowing the closest O-RU has the largest gain
        for k in 0..5 {
            let mut best_l = 0;
            let mut best_d = f64::INFINITY;
            for l in 0..6 {
                let dx = s.ue_positions[k][0] - s.oru_positions[l][0];
                let dy = s.ue_positions[k][1] - s.oru_positions[l][1];
                let d = dx.hypot(dy);
                if d < best_d {
                    best_d = d;
                    best_l = l;
                }
            }
            let row = s.beta.row(k);
            let argmax = (0..6).max_by(|&a, &b| row[a].total_cmp(&row[b])).unwrap();
            assert_eq!(argmax, best_l);
        }
    }

    #[test]
    fn normal_sampler_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(12345);
        let n = 200_000;
        let samples: Vec<f64> = (0..n).map(|_| sample_standard_normal(&mut rng)).collect();
        let mean = samples.iter().sum::<f64>() / n as f64;
        let var = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64;
        assert!(mean.abs() < 0.01, "mean {mean}");
        assert!((var - 1.0).abs() < 0.02, "var {var}");
    }
}
