use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::channel::{
    build_context, lp_mmse_raw_precoders, mmse_estimate, pilot_observations, sample_channels,
    ChannelError,
};
use super::config::SystemConfig;
use super::pilots::PilotAssignment;
use super::scenario::Scenario;
use crate::linalg::{hermitize, min_eigenvalue, psd_project, CMat, CVec};

#[derive(Debug, Error)]
pub enum StatsError {
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error("estimated self-covariance for UE {ue} is far from PSD (min eig {min_eig:.3e}, trace {trace:.3e})")]
    CovarianceNotPsd { ue: usize, min_eig: f64, trace: f64 },
    #[error("n_mc must be at least 2, got {0}")]
    TooFewSamples(usize),
}

#[derive(Debug, Clone, Copy)]
pub struct StatsOptions {
    pub n_mc: usize,
    /// Project the estimated covariance blocks onto the PSD cone.
    pub psd_project: bool,
}

impl Default for StatsOptions {
    fn default() -> Self {
        StatsOptions {
            n_mc: 500,
            psd_project: true,
        }
    }
}

/// Hardened statistics of the effective downlink channels after LP-MMSE
/// precoding: b[k] collects the average effective gains (length L) and
/// c[k][i] the L x L interference covariance of UE i's signal at UE k.
#[derive(Debug, Clone)]
pub struct EffectiveStatistics {
    /// K x L average effective gains.
    pub b: DMatrix<f64>,
    /// Standard error of each entry of `b`.
    pub b_stderr: DMatrix<f64>,
    /// c[k][i] is Hermitian PSD, L x L.
    pub c: Vec<Vec<CMat>>,
    pub n_mc: usize,
    /// Pre-projection minimum eigenvalue of c[k][k], relative to its trace.
    pub self_cov_min_eig_ratio: Vec<f64>,
    /// Largest |imag mean| / stderr observed on the diagonal gains.
    pub max_imag_t_stat: f64,
}

impl EffectiveStatistics {
    pub fn n_ues(&self) -> usize {
        self.b.nrows()
    }

    pub fn n_orus(&self) -> usize {
        self.b.ncols()
    }
}

/// Per-realization effective gains v[k][i] (length-L complex vectors),
/// exposed so tests can rebuild the covariance blocks independently.
pub type RealizationTrace = Vec<Vec<Vec<CVec>>>;

pub fn estimate_effective_statistics(
    scenario: &Scenario,
    pilots: &PilotAssignment,
    cfg: &SystemConfig,
    seed: u64,
    opts: &StatsOptions,
) -> Result<EffectiveStatistics, StatsError> {
    estimate_with_trace(scenario, pilots, cfg, seed, opts, false).map(|(s, _)| s)
}

/// Same as [`estimate_effective_statistics`] but optionally keeps the raw
/// per-realization effective gains.
pub fn estimate_with_trace(
    scenario: &Scenario,
    pilots: &PilotAssignment,
    cfg: &SystemConfig,
    seed: u64,
    opts: &StatsOptions,
    keep_trace: bool,
) -> Result<(EffectiveStatistics, Option<RealizationTrace>), StatsError> {
    if opts.n_mc < 2 {
        return Err(StatsError::TooFewSamples(opts.n_mc));
    }
    let (k_total, l_total) = (scenario.n_ues(), scenario.n_orus());
    let n_mc = opts.n_mc;
    let ctx = build_context(scenario, pilots, cfg)?;

    // pass 1: draw everything; each realization gets its own counter-mode
    // substream so results are independent of batching
    let mut channels = Vec::with_capacity(n_mc);
    let mut precoders = Vec::with_capacity(n_mc);
    let mut norm2_sum = DMatrix::<f64>::zeros(k_total, l_total);
    for j in 0..n_mc {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(j as u64 + 1);
        let h = sample_channels(&ctx, &mut rng);
        let y = pilot_observations(&ctx, &h, pilots, cfg, &mut rng);
        let hhat = mmse_estimate(&ctx, &y, pilots);
        let w = lp_mmse_raw_precoders(&ctx, &hhat, cfg)?;
        for k in 0..k_total {
            for l in 0..l_total {
                norm2_sum[(k, l)] += w[k][l].norm_squared();
            }
        }
        channels.push(h);
        precoders.push(w);
    }
    let scale = DMatrix::from_fn(k_total, l_total, |k, l| {
        let mean = norm2_sum[(k, l)] / n_mc as f64;
        if mean > 0.0 {
            1.0 / mean.sqrt()
        } else {
            0.0
        }
    });

    // pass 2: effective gains v[k][i][l] = h_kl^H w_il and their moments
    let mut sum_diag = vec![vec![Complex64::default(); l_total]; k_total];
    let mut sum_re2 = DMatrix::<f64>::zeros(k_total, l_total);
    let mut sum_im2 = DMatrix::<f64>::zeros(k_total, l_total);
    let mut c_acc: Vec<Vec<CMat>> = (0..k_total)
        .map(|_| (0..k_total).map(|_| CMat::zeros(l_total, l_total)).collect())
        .collect();
    let mut trace: RealizationTrace = Vec::new();
    for j in 0..n_mc {
        let h = &channels[j];
        let w = &precoders[j];
        let mut v_all: Vec<Vec<CVec>> = Vec::with_capacity(k_total);
        for k in 0..k_total {
            let mut per_source = Vec::with_capacity(k_total);
            for i in 0..k_total {
                let v = CVec::from_fn(l_total, |l, _| {
                    h[k][l].dotc(&w[i][l]) * scale[(i, l)]
                });
                c_acc[k][i] += &v * v.adjoint();
                if i == k {
                    for l in 0..l_total {
                        sum_diag[k][l] += v[l];
                        sum_re2[(k, l)] += v[l].re * v[l].re;
                        sum_im2[(k, l)] += v[l].im * v[l].im;
                    }
                }
                per_source.push(v);
            }
            v_all.push(per_source);
        }
        if keep_trace {
            trace.push(v_all);
        }
    }

    let nf = n_mc as f64;
    let mut b = DMatrix::<f64>::zeros(k_total, l_total);
    let mut b_stderr = DMatrix::<f64>::zeros(k_total, l_total);
    let mut max_imag_t = 0.0f64;
    for k in 0..k_total {
        for l in 0..l_total {
            let mean = sum_diag[k][l] / nf;
            let var_re = (sum_re2[(k, l)] / nf - mean.re * mean.re).max(0.0);
            let var_im = (sum_im2[(k, l)] / nf - mean.im * mean.im).max(0.0);
            let se_re = (var_re / nf).sqrt();
            let se_im = (var_im / nf).sqrt();
            if se_im > 0.0 {
                max_imag_t = max_imag_t.max(mean.im.abs() / se_im);
            }
            b[(k, l)] = mean.re.max(0.0);
            b_stderr[(k, l)] = se_re;
        }
    }

    let mut c = Vec::with_capacity(k_total);
    let mut min_eig_ratio = Vec::with_capacity(k_total);
    for k in 0..k_total {
        let mut row = Vec::with_capacity(k_total);
        for i in 0..k_total {
            let mut m = &c_acc[k][i] / Complex64::new(nf, 0.0);
            if i == k {
                let mean = CVec::from_fn(l_total, |l, _| sum_diag[k][l] / nf);
                m -= &mean * mean.adjoint();
            }
            let m = hermitize(&m);
            if i == k {
                let tr: f64 = (0..l_total).map(|l| m[(l, l)].re).sum();
                let min_eig = min_eigenvalue(&m);
                let ratio = if tr > 0.0 { min_eig / tr } else { 0.0 };
                min_eig_ratio.push(ratio);
                if ratio < -1e-3 {
                    return Err(StatsError::CovarianceNotPsd {
                        ue: k,
                        min_eig,
                        trace: tr,
                    });
                }
            }
            row.push(if opts.psd_project { psd_project(&m) } else { m });
        }
        c.push(row);
    }

    let stats = EffectiveStatistics {
        b,
        b_stderr,
        c,
        n_mc,
        self_cov_min_eig_ratio: min_eig_ratio,
        max_imag_t_stat: max_imag_t,
    };
    Ok((stats, keep_trace.then_some(trace)))
}

/// SINR and spectral efficiency of every UE under the power allocation
/// `rho` (K x L, entries are square roots of per-link transmit powers).
pub fn sinr_and_se(
    stats: &EffectiveStatistics,
    rho: &DMatrix<f64>,
    cfg: &SystemConfig,
) -> (Vec<f64>, Vec<f64>) {
    let (k_total, l_total) = (stats.n_ues(), stats.n_orus());
    assert_eq!(rho.nrows(), k_total);
    assert_eq!(rho.ncols(), l_total);
    let prelog = cfg.tau_d() as f64 / cfg.tau_c() as f64;
    let mut sinr = Vec::with_capacity(k_total);
    let mut se = Vec::with_capacity(k_total);
    for k in 0..k_total {
        let signal: f64 = (0..l_total).map(|l| stats.b[(k, l)] * rho[(k, l)]).sum();
        let mut denom = cfg.sigma2;
        for i in 0..k_total {
            let c = &stats.c[k][i];
            let mut quad = 0.0;
            for l in 0..l_total {
                for r in 0..l_total {
                    quad += rho[(i, l)] * c[(l, r)].re * rho[(i, r)];
                }
            }
            denom += quad;
        }
        let s = signal * signal / denom;
        sinr.push(s);
        se.push(prelog * (1.0 + s).log2());
    }
    (sinr, se)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::min_eigenvalue;
    use crate::sysmodel::pilots::assign_pilots;
    use crate::sysmodel::scenario::{generate_scenario, ScenarioOptions};

    fn setup(l: usize, k: usize, seed: u64) -> (SystemConfig, Scenario, PilotAssignment) {
        let cfg = SystemConfig::default();
        let s = generate_scenario(&cfg, l, k, seed, &ScenarioOptions::default()).unwrap();
        let pa = assign_pilots(&s, cfg.tau_p.min(k));
        (cfg, s, pa)
    }

    #[test]
    fn deterministic_and_prefix_stable() {
        let (cfg, s, pa) = setup(3, 2, 42);
        let opts = StatsOptions { n_mc: 60, psd_project: true };
        let a = estimate_effective_statistics(&s, &pa, &cfg, 7, &opts).unwrap();
        let b = estimate_effective_statistics(&s, &pa, &cfg, 7, &opts).unwrap();
        assert_eq!(a.b, b.b);
        assert_eq!(a.c[0][1], b.c[0][1]);
        // realizations are substreams: a different count reuses the same draws,
        // so gains move only by the extra averaging, not wholesale
        let big = estimate_effective_statistics(
            &s,
            &pa,
            &cfg,
            7,
            &StatsOptions { n_mc: 120, psd_project: true },
        )
        .unwrap();
        for k in 0..2 {
            for l in 0..3 {
                let d = (a.b[(k, l)] - big.b[(k, l)]).abs();
                assert!(d <= 6.0 * a.b_stderr[(k, l)] + 1e-18);
            }
        }
    }

    #[test]
    fn stderr_shrinks_with_sample_count() {
        let (cfg, s, pa) = setup(3, 2, 8);
        let small = estimate_effective_statistics(
            &s, &pa, &cfg, 3, &StatsOptions { n_mc: 200, psd_project: true },
        )
        .unwrap();
        let large = estimate_effective_statistics(
            &s, &pa, &cfg, 3, &StatsOptions { n_mc: 800, psd_project: true },
        )
        .unwrap();
        let mean_small: f64 = small.b_stderr.iter().sum::<f64>() / small.b_stderr.len() as f64;
        let mean_large: f64 = large.b_stderr.iter().sum::<f64>() / large.b_stderr.len() as f64;
        let ratio = mean_large / mean_small;
        assert!(ratio > 0.35 && ratio < 0.65, "ratio {ratio}");
    }

    #[test]
    fn covariances_hermitian_psd_and_gains_sane() {
        let (cfg, s, pa) = setup(4, 3, 13);
        let stats = estimate_effective_statistics(
            &s, &pa, &cfg, 5, &StatsOptions { n_mc: 150, psd_project: true },
        )
        .unwrap();
        for k in 0..3 {
            for i in 0..3 {
                let c = &stats.c[k][i];
                assert!((c - c.adjoint()).norm() < 1e-12 * c.norm().max(1e-30));
                assert!(min_eigenvalue(c) >= -1e-10 * c.norm().max(1e-30));
            }
            // a UE's own average gain should be dominated by its strongest link
            assert!(stats.b.row(k).iter().all(|v| v.is_finite() && *v >= 0.0));
            assert!(stats.b.row(k).iter().any(|&v| v > 0.0));
        }
        assert!(stats.max_imag_t_stat < 5.0, "imag part t-stat {}", stats.max_imag_t_stat);
        assert!(stats.self_cov_min_eig_ratio.iter().all(|&r| r > -1e-3));
    }

    #[test]
    fn trace_rebuilds_covariance_blocks() {
        let (cfg, s, pa) = setup(3, 2, 77);
        let opts = StatsOptions { n_mc: 50, psd_project: false };
        let (stats, trace) = estimate_with_trace(&s, &pa, &cfg, 11, &opts, true).unwrap();
        let trace = trace.unwrap();
        assert_eq!(trace.len(), 50);
        let nf = 50.0;
        for k in 0..2 {
            for i in 0..2 {
                let mut acc = CMat::zeros(3, 3);
                let mut mean = CVec::zeros(3);
                for v_all in &trace {
                    acc += &v_all[k][i] * v_all[k][i].adjoint();
                    if i == k {
                        mean += &v_all[k][i];
                    }
                }
                acc /= Complex64::new(nf, 0.0);
                if i == k {
                    mean /= Complex64::new(nf, 0.0);
                    acc -= &mean * mean.adjoint();
                }
                let acc = hermitize(&acc);
                assert!((&acc - &stats.c[k][i]).norm() <= 1e-12 * acc.norm().max(1e-30));
            }
        }
    }

    #[test]
    fn sinr_matches_hand_computation() {
        // K=1, L=2 with made-up statistics
        let b = DMatrix::from_row_slice(1, 2, &[2.0, 1.0]);
        let c00 = CMat::from_diagonal_element(2, 2, Complex64::new(0.5, 0.0));
        let stats = EffectiveStatistics {
            b,
            b_stderr: DMatrix::zeros(1, 2),
            c: vec![vec![c00]],
            n_mc: 1,
            self_cov_min_eig_ratio: vec![0.0],
            max_imag_t_stat: 0.0,
        };
        let mut cfg = SystemConfig::default();
        cfg.sigma2 = 1.0;
        let rho = DMatrix::from_row_slice(1, 2, &[1.0, 2.0]);
        let (sinr, se) = sinr_and_se(&stats, &rho, &cfg);
        // signal (2*1 + 1*2)^2 = 16; denom 0.5*(1+4) + 1 = 3.5
        assert!((sinr[0] - 16.0 / 3.5).abs() < 1e-12);
        let prelog = cfg.tau_d() as f64 / cfg.tau_c() as f64;
        assert!((se[0] - prelog * (1.0f64 + 16.0 / 3.5).log2()).abs() < 1e-12);
    }

    #[test]
    fn rho_zero_gives_zero_se() {
        let (cfg, s, pa) = setup(3, 2, 5);
        let stats = estimate_effective_statistics(
            &s, &pa, &cfg, 2, &StatsOptions { n_mc: 40, psd_project: true },
        )
        .unwrap();
        let rho = DMatrix::zeros(2, 3);
        let (sinr, se) = sinr_and_se(&stats, &rho, &cfg);
        assert!(sinr.iter().all(|&x| x == 0.0));
        assert!(se.iter().all(|&x| x == 0.0));
    }
}
