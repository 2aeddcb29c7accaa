//! Synthetic problem instances with physically plausible scales, shared by
//! the orchestrate unit tests.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::linalg::{hermitize, CMat};
use crate::powermodel::{FronthaulParams, GopsParams, PowerParams, SplitOption};
use crate::sysmodel::{EffectiveStatistics, SystemConfig};

use super::instance::ProblemInstance;

/// Random instance with effective gains around 2e-5 and interference
/// covariances around 1e-11, matching the magnitudes the channel pipeline
/// produces; all UEs share the SINR target `gamma`.
pub(crate) fn random_instance(l: usize, k: usize, seed: u64, gamma: f64) -> ProblemInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let b = DMatrix::from_fn(k, l, |_, _| 2e-5 * (0.5 + rng.gen::<f64>()));
    let mut c = Vec::with_capacity(k);
    for _ in 0..k {
        let mut row = Vec::with_capacity(k);
        for _ in 0..k {
            let g = CMat::from_fn(l, l, |_, _| {
                Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
            });
            row.push(hermitize(&(&g * g.adjoint())) * Complex64::new(1e-11 / l as f64, 0.0));
        }
        c.push(row);
    }
    let stats = EffectiveStatistics {
        b_stderr: DMatrix::zeros(k, l),
        b,
        c,
        n_mc: 1,
        self_cov_min_eig_ratio: vec![0.0; k],
        max_imag_t_stat: 0.0,
    };
    let cfg = SystemConfig::default();
    ProblemInstance::new(
        stats,
        cfg,
        PowerParams::table_default(4, 3),
        GopsParams::default(),
        FronthaulParams::default(),
        SplitOption::Option8,
        vec![gamma; k],
    )
    .unwrap()
}

/// Single UE, single O-RU instance with a closed-form optimal power; returns
/// (instance, b, C, gamma).
pub(crate) fn scalar_instance(seed: u64) -> (ProblemInstance, f64, f64, f64) {
    let mut inst = random_instance(1, 1, seed, 100.0);
    let (b, c) = (1e-5, 2e-13);
    inst.stats.b[(0, 0)] = b;
    inst.stats.c[0][0] = CMat::from_element(1, 1, Complex64::new(c, 0.0));
    (inst, b, c, 100.0)
}

pub(crate) fn uniform_targets(mut inst: ProblemInstance, gamma: f64) -> ProblemInstance {
    inst.gamma = vec![gamma; inst.k()];
    inst
}
