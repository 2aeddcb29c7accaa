//! Cone-block builders shared by the exact solver and the CCP variants.
//!
//! All builders agree on one variable convention: the power square roots
//! occupy a contiguous slice of the decision vector with rho_{k,l} at
//! `rho_offset + k * L + l`.

use crate::conic::ConeBlock;
use crate::linalg::{hermitian_sqrt, min_eigenvalue, real_stack, RMat, RVec};
use crate::sysmodel::EffectiveStatistics;

use super::instance::OrchestrateError;

pub(crate) fn rho_index(k: usize, l: usize, l_total: usize) -> usize {
    k * l_total + l
}

/// Per-UE SINR constraints in second-order cone form over a rho-only
/// variable vector of length K*L:
///
///   || [ sqrt(g_k) C_k1^{1/2} rho_1; ...; sqrt(g_k) C_kK^{1/2} rho_K;
///        sqrt(g_k) sigma ] ||  <=  b_k' rho_k.
///
/// Complex square roots are realized as real-stacked 2L x L maps, which
/// preserve the quadratic forms exactly for real rho.
pub fn sinr_soc_rows(
    stats: &EffectiveStatistics,
    gamma: &[f64],
    sigma2: f64,
) -> Result<Vec<ConeBlock>, OrchestrateError> {
    let (k_total, l_total) = (stats.n_ues(), stats.n_orus());
    assert_eq!(gamma.len(), k_total, "one SINR target per UE");
    let n = k_total * l_total;
    let sigma = sigma2.sqrt();
    // Square roots are shared across the K blocks of UE k only, so compute
    // them per (k, i) pair on demand.
    let mut blocks = Vec::with_capacity(k_total);
    for k in 0..k_total {
        let g = gamma[k];
        let sg = g.sqrt();
        let mut au = RMat::zeros(2 * l_total * k_total + 1, n);
        let mut bu = RVec::zeros(2 * l_total * k_total + 1);
        for i in 0..k_total {
            let c = &stats.c[k][i];
            let min_eig = min_eigenvalue(c);
            if min_eig < -1e-9 * c.trace().re.max(1.0) {
                return Err(OrchestrateError::NotPsd { k, i, min_eig });
            }
            let stacked = real_stack(&hermitian_sqrt(c));
            for r in 0..2 * l_total {
                for l in 0..l_total {
                    au[(2 * l_total * i + r, rho_index(i, l, l_total))] = sg * stacked[(r, l)];
                }
            }
        }
        bu[2 * l_total * k_total] = sg * sigma;
        let mut a_s = RVec::zeros(n);
        for l in 0..l_total {
            a_s[rho_index(k, l, l_total)] = stats.b[(k, l)];
        }
        blocks.push(ConeBlock::Soc { au, bu, a_s, b_s: 0.0 });
    }
    Ok(blocks)
}

/// Embeds a block over `inner` variables into a wider vector where those
/// variables start at `offset`.
pub(crate) fn widen(block: &ConeBlock, n_total: usize, offset: usize) -> ConeBlock {
    let embed = |a: &RMat| {
        let mut out = RMat::zeros(a.nrows(), n_total);
        out.view_mut((0, offset), (a.nrows(), a.ncols())).copy_from(a);
        out
    };
    let embed_v = |v: &RVec| {
        let mut out = RVec::zeros(n_total);
        out.rows_mut(offset, v.len()).copy_from(v);
        out
    };
    match block {
        ConeBlock::Nonneg { a, b } => ConeBlock::Nonneg { a: embed(a), b: b.clone() },
        ConeBlock::Soc { au, bu, a_s, b_s } => ConeBlock::Soc {
            au: embed(au),
            bu: bu.clone(),
            a_s: embed_v(a_s),
            b_s: *b_s,
        },
    }
}

/// || rho'_l || <= sqrt(p_max) z_l for every O-RU l. `z_offset(l)` names the
/// column that carries the activation variable; `None` pins the right-hand
/// side at sqrt(p_max) instead (the unconditional per-O-RU budget).
pub(crate) fn per_oru_budget(
    k_total: usize,
    l_total: usize,
    n_total: usize,
    rho_offset: usize,
    p_max: f64,
    z_offset: Option<usize>,
) -> Vec<ConeBlock> {
    let sp = p_max.sqrt();
    (0..l_total)
        .map(|l| {
            let mut au = RMat::zeros(k_total, n_total);
            for k in 0..k_total {
                au[(k, rho_offset + rho_index(k, l, l_total))] = 1.0;
            }
            let mut a_s = RVec::zeros(n_total);
            let b_s = match z_offset {
                Some(z0) => {
                    a_s[z0 + l] = sp;
                    0.0
                }
                None => sp,
            };
            ConeBlock::Soc { au, bu: RVec::zeros(k_total), a_s, b_s }
        })
        .collect()
}

/// rows enforcing lo <= y_i <= hi for the index range [offset, offset + len).
pub(crate) fn box_rows(
    n_total: usize,
    offset: usize,
    len: usize,
    lo: Option<f64>,
    hi: Option<f64>,
) -> ConeBlock {
    let n_rows = len * (lo.is_some() as usize + hi.is_some() as usize);
    let mut a = RMat::zeros(n_rows, n_total);
    let mut b = RVec::zeros(n_rows);
    let mut r = 0;
    for i in 0..len {
        if let Some(lo) = lo {
            a[(r, offset + i)] = 1.0;
            b[r] = -lo;
            r += 1;
        }
        if let Some(hi) = hi {
            a[(r, offset + i)] = -1.0;
            b[r] = hi;
            r += 1;
        }
    }
    ConeBlock::Nonneg { a, b }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{hermitize, CMat};
    use crate::sysmodel::{sinr_and_se, SystemConfig};
    use nalgebra::DMatrix;
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_stats(k: usize, l: usize, seed: u64) -> EffectiveStatistics {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b = DMatrix::from_fn(k, l, |_, _| rng.gen::<f64>() + 0.1);
        let mut c = Vec::new();
        for _ in 0..k {
            let mut row = Vec::new();
            for _ in 0..k {
                let m = CMat::from_fn(l, l, |_, _| {
                    Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
                });
                row.push(hermitize(&(&m * m.adjoint())));
            }
            c.push(row);
        }
        EffectiveStatistics {
            b_stderr: DMatrix::zeros(k, l),
            b,
            c,
            n_mc: 1,
            self_cov_min_eig_ratio: vec![0.0; k],
            max_imag_t_stat: 0.0,
        }
    }

    #[test]
    fn zero_target_block_is_vacuous_on_nonneg_rho() {
        let stats = random_stats(2, 3, 5);
        let blocks = sinr_soc_rows(&stats, &[0.0, 0.0], 1e-3).unwrap();
        // b has positive entries, so any nonnegative rho satisfies the block.
        let rho = RVec::from_element(6, 0.25);
        for blk in &blocks {
            assert_eq!(blk.violation(&rho), 0.0);
        }
    }

    #[test]
    fn scalar_block_matches_closed_form_threshold() {
        // K = L = 1: the block is sqrt(g (C rho^2 + s^2)) <= b rho, i.e.
        // rho >= sqrt(g s^2 / (b^2 - g C)) when b^2 > g C.
        let mut stats = random_stats(1, 1, 9);
        stats.b[(0, 0)] = 2.0;
        stats.c[0][0] = CMat::from_element(1, 1, Complex64::new(0.7, 0.0));
        let (g, s2) = (3.0, 0.4);
        let blocks = sinr_soc_rows(&stats, &[g], s2).unwrap();
        let threshold = (g * s2 / (4.0 - g * 0.7)).sqrt();
        for scale in [0.999, 1.001] {
            let rho = RVec::from_element(1, scale * threshold);
            let violated = blocks[0].violation(&rho) > 0.0;
            assert_eq!(violated, scale < 1.0, "scale {scale}");
        }
    }

    #[test]
    fn block_boundary_matches_sinr_definition() {
        // Points on or inside the cone must achieve SINR >= gamma when the
        // SINR is evaluated straight from the definition.
        let cfg = SystemConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for seed in 0..20u64 {
            let (k, l) = (3, 2);
            let stats = random_stats(k, l, 100 + seed);
            let rho = DMatrix::from_fn(k, l, |_, _| rng.gen::<f64>());
            let (sinr, _) = sinr_and_se(&stats, &rho, &cfg);
            // Target exactly the achieved SINR: the block must hold with
            // equality up to rounding.
            let blocks = sinr_soc_rows(&stats, &sinr, cfg.sigma2).unwrap();
            let flat = RVec::from_fn(k * l, |i, _| rho[(i / l, i % l)]);
            for blk in &blocks {
                assert!(blk.violation(&flat) < 1e-9, "seed {seed}");
            }
            // Inflate the targets slightly: every block must now be violated.
            let above: Vec<f64> = sinr.iter().map(|s| s * 1.01).collect();
            let blocks = sinr_soc_rows(&stats, &above, cfg.sigma2).unwrap();
            for blk in &blocks {
                assert!(blk.violation(&flat) > 0.0, "seed {seed}");
            }
        }
    }

    #[test]
    fn non_psd_covariance_rejected() {
        let mut stats = random_stats(1, 2, 3);
        stats.c[0][0][(0, 0)] = Complex64::new(-1.0, 0.0);
        assert!(matches!(
            sinr_soc_rows(&stats, &[1.0], 1.0),
            Err(OrchestrateError::NotPsd { .. })
        ));
    }

    #[test]
    fn widen_preserves_violation() {
        let stats = random_stats(2, 2, 7);
        let blocks = sinr_soc_rows(&stats, &[1.5, 0.5], 1e-2).unwrap();
        let rho = RVec::from_fn(4, |i, _| 0.1 * (i + 1) as f64);
        let mut wide = RVec::zeros(9);
        wide.rows_mut(3, 4).copy_from(&rho);
        for blk in &blocks {
            let w = widen(blk, 9, 3);
            assert!((blk.violation(&rho) - w.violation(&wide)).abs() < 1e-14);
        }
    }

    #[test]
    fn per_oru_budget_flags_overdraw() {
        let blocks = per_oru_budget(2, 2, 4, 0, 1.0, None);
        let mut y = RVec::zeros(4);
        y[rho_index(0, 1, 2)] = 0.9;
        y[rho_index(1, 1, 2)] = 0.9; // norm ~1.27 > 1 on O-RU 1
        assert_eq!(blocks[0].violation(&y), 0.0);
        assert!(blocks[1].violation(&y) > 0.2);
    }
}
