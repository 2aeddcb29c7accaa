use num_complex::Complex64;
use rand::Rng;
use thiserror::Error;

use super::config::SystemConfig;
use super::pilots::{pilot_matrix, PilotAssignment};
use super::scenario::{sample_standard_normal, Scenario};
use crate::linalg::{hermitian_sqrt, CMat, CVec};

#[derive(Debug, Error, PartialEq)]
pub enum ChannelError {
    #[error("noise power must be positive, got {0}")]
    NonPositiveNoise(f64),
    #[error("pilot covariance is singular at pilot {pilot}, O-RU {oru}")]
    SingularPilotCovariance { pilot: usize, oru: usize },
    #[error("precoding matrix is singular at O-RU {0}")]
    SingularPrecodingMatrix(usize),
}

/// Realization-independent quantities shared by every Monte Carlo draw.
pub struct EstimationContext {
    /// K x L square roots of the correlation matrices.
    pub sqrt_r: Vec<Vec<CMat>>,
    /// K x L MMSE filters sqrt(eta) R_kl Psi_{t_k,l}^{-1}.
    pub mmse_filter: Vec<Vec<CMat>>,
    /// K x L estimation-error covariances R - eta tau_p R Psi^{-1} R.
    pub c_err: Vec<Vec<CMat>>,
    /// Per O-RU: the strongest UE on each in-use pilot.
    pub s_sets: Vec<Vec<usize>>,
    /// Per O-RU: sum_{i in S_l} eta C_err_il + sigma2 I.
    pub prec_const: Vec<CMat>,
    /// tau_p x tau_p pilot codebook.
    pub phi: CMat,
}

/// Precomputes the deterministic part of estimation and precoding.
pub fn build_context(
    scenario: &Scenario,
    pilots: &PilotAssignment,
    cfg: &SystemConfig,
) -> Result<EstimationContext, ChannelError> {
    if !(cfg.sigma2 > 0.0) {
        return Err(ChannelError::NonPositiveNoise(cfg.sigma2));
    }
    let (k_total, l_total, n) = (scenario.n_ues(), scenario.n_orus(), scenario.n_antennas);
    let eta = cfg.eta;
    let tau_p = pilots.tau_p as f64;
    let eye = CMat::identity(n, n);

    let sqrt_r: Vec<Vec<CMat>> = (0..k_total)
        .map(|k| (0..l_total).map(|l| hermitian_sqrt(&scenario.r[k][l])).collect())
        .collect();

    // Psi inverse per (pilot, O-RU), only for pilots actually assigned
    let mut psi_inv: Vec<Vec<Option<CMat>>> = vec![vec![None; l_total]; pilots.tau_p];
    for (t, set) in pilots.copilot.iter().enumerate() {
        if set.is_empty() {
            continue;
        }
        for l in 0..l_total {
            let mut psi = &eye * Complex64::new(cfg.sigma2, 0.0);
            for &i in set {
                psi += &scenario.r[i][l] * Complex64::new(eta * tau_p, 0.0);
            }
            let inv = psi
                .try_inverse()
                .ok_or(ChannelError::SingularPilotCovariance { pilot: t, oru: l })?;
            psi_inv[t][l] = Some(inv);
        }
    }

    let mut mmse_filter = Vec::with_capacity(k_total);
    let mut c_err = Vec::with_capacity(k_total);
    for k in 0..k_total {
        let t = pilots.t[k];
        let mut filter_row = Vec::with_capacity(l_total);
        let mut err_row = Vec::with_capacity(l_total);
        for l in 0..l_total {
            let inv = psi_inv[t][l].as_ref().unwrap();
            let r = &scenario.r[k][l];
            filter_row.push(r * inv * Complex64::new(eta.sqrt(), 0.0));
            err_row.push(r - r * inv * r * Complex64::new(eta * tau_p, 0.0));
        }
        mmse_filter.push(filter_row);
        c_err.push(err_row);
    }

    // S_l: strongest UE per in-use pilot at O-RU l
    let mut s_sets = Vec::with_capacity(l_total);
    let mut prec_const = Vec::with_capacity(l_total);
    for l in 0..l_total {
        let mut set = Vec::new();
        for copilots in pilots.copilot.iter().filter(|s| !s.is_empty()) {
            let strongest = *copilots
                .iter()
                .max_by(|&&a, &&b| scenario.beta[(a, l)].total_cmp(&scenario.beta[(b, l)]))
                .unwrap();
            set.push(strongest);
        }
        let mut m = &eye * Complex64::new(cfg.sigma2, 0.0);
        for &i in &set {
            m += &c_err[i][l] * Complex64::new(eta, 0.0);
        }
        s_sets.push(set);
        prec_const.push(m);
    }

    Ok(EstimationContext {
        sqrt_r,
        mmse_filter,
        c_err,
        s_sets,
        prec_const,
        phi: pilot_matrix(pilots.tau_p),
    })
}

/// Draws a circularly symmetric standard complex Gaussian vector.
fn sample_cn<R: Rng>(n: usize, rng: &mut R) -> CVec {
    CVec::from_fn(n, |_, _| {
        Complex64::new(
            sample_standard_normal(rng) / 2f64.sqrt(),
            sample_standard_normal(rng) / 2f64.sqrt(),
        )
    })
}

/// One correlated Rayleigh draw of all K x L channels.
pub fn sample_channels<R: Rng>(ctx: &EstimationContext, rng: &mut R) -> Vec<Vec<CVec>> {
    ctx.sqrt_r
        .iter()
        .map(|row| {
            row.iter()
                .map(|sq| sq * sample_cn(sq.nrows(), rng))
                .collect()
        })
        .collect()
}

/// Noisy pilot block Y_l (N x tau_p) received at every O-RU.
pub fn pilot_observations<R: Rng>(
    ctx: &EstimationContext,
    h: &[Vec<CVec>],
    pilots: &PilotAssignment,
    cfg: &SystemConfig,
    rng: &mut R,
) -> Vec<CMat> {
    let l_total = h[0].len();
    let n = h[0][0].len();
    let noise_scale = Complex64::new(cfg.sigma2.sqrt(), 0.0);
    (0..l_total)
        .map(|l| {
            let mut y = CMat::from_fn(n, pilots.tau_p, |_, _| {
                noise_scale
                    * Complex64::new(
                        sample_standard_normal(rng) / 2f64.sqrt(),
                        sample_standard_normal(rng) / 2f64.sqrt(),
                    )
            });
            for (k, hk) in h.iter().enumerate() {
                let phi_t = ctx.phi.column(pilots.t[k]);
                let scaled = &hk[l] * Complex64::new(cfg.eta.sqrt(), 0.0);
                // rank-one update h phi^T
                for c in 0..pilots.tau_p {
                    for r in 0..n {
                        y[(r, c)] += scaled[r] * phi_t[c];
                    }
                }
            }
            y
        })
        .collect()
}

/// Linear MMSE channel estimates from the pilot blocks.
pub fn mmse_estimate(
    ctx: &EstimationContext,
    y: &[CMat],
    pilots: &PilotAssignment,
) -> Vec<Vec<CVec>> {
    let k_total = ctx.mmse_filter.len();
    let l_total = y.len();
    // despread once per in-use pilot and O-RU
    (0..k_total)
        .map(|k| {
            let phi_conj = ctx.phi.column(pilots.t[k]).map(|z| z.conj());
            (0..l_total)
                .map(|l| {
                    let yp = &y[l] * &phi_conj;
                    &ctx.mmse_filter[k][l] * yp
                })
                .collect()
        })
        .collect()
}

/// Unnormalized local partial-MMSE precoders; the statistical normalization
/// over the Monte Carlo batch happens in the caller.
pub fn lp_mmse_raw_precoders(
    ctx: &EstimationContext,
    hhat: &[Vec<CVec>],
    cfg: &SystemConfig,
) -> Result<Vec<Vec<CVec>>, ChannelError> {
    let k_total = hhat.len();
    let l_total = hhat[0].len();
    let eta = Complex64::new(cfg.eta, 0.0);
    let mut out: Vec<Vec<CVec>> = vec![Vec::with_capacity(l_total); k_total];
    for l in 0..l_total {
        let mut b = ctx.prec_const[l].clone();
        for &i in &ctx.s_sets[l] {
            b += (&hhat[i][l] * hhat[i][l].adjoint()) * eta;
        }
        let lu = b.lu();
        for (k, row) in out.iter_mut().enumerate() {
            let w = lu
                .solve(&hhat[k][l])
                .ok_or(ChannelError::SingularPrecodingMatrix(l))?;
            row.push(w);
        }
    }
    Ok(out)
}
