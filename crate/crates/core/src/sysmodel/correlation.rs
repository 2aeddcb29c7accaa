use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::CMat;

/// Spatial correlation model for the per-O-RU antenna array.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum CorrelationModel {
    /// R = beta * I; enables closed-form oracles.
    Uncorrelated,
    /// Gaussian local scattering over a half-wavelength ULA.
    LocalScattering {
        /// Angular standard deviation (degrees).
        asd_deg: f64,
    },
}

impl Default for CorrelationModel {
    fn default() -> Self {
        CorrelationModel::LocalScattering { asd_deg: 15.0 }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum CorrelationError {
    #[error("average gain must be positive, got {0}")]
    NonPositiveGain(f64),
}

/// N x N Hermitian PSD correlation matrix with trace N * beta.
///
/// The local-scattering entries are the Schur product of a rank-one steering
/// outer product and a Gaussian kernel, so positive semidefiniteness holds
/// exactly up to rounding.
pub fn spatial_correlation(
    model: CorrelationModel,
    angle_rad: f64,
    beta: f64,
    n: usize,
) -> Result<CMat, CorrelationError> {
    if !(beta > 0.0) {
        return Err(CorrelationError::NonPositiveGain(beta));
    }
    match model {
        CorrelationModel::Uncorrelated => Ok(CMat::from_diagonal_element(n, n, Complex64::new(beta, 0.0))),
        CorrelationModel::LocalScattering { asd_deg } => {
            let sigma = asd_deg.to_radians();
            let (sin_phi, cos_phi) = (angle_rad.sin(), angle_rad.cos());
            Ok(CMat::from_fn(n, n, |r, c| {
                let d = r as f64 - c as f64;
                let phase = std::f64::consts::PI * d * sin_phi;
                let spread = std::f64::consts::PI * d * cos_phi * sigma;
                Complex64::from_polar(beta * (-0.5 * spread * spread).exp(), phase)
            }))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{min_eigenvalue, CVec};

    #[test]
    fn uncorrelated_is_scaled_identity() {
        let r = spatial_correlation(CorrelationModel::Uncorrelated, 0.3, 2.0, 4).unwrap();
        assert_eq!(r, CMat::from_diagonal_element(4, 4, Complex64::new(2.0, 0.0)));
    }

    #[test]
    fn trace_and_psd() {
        for &angle in &[-1.2, 0.0, 0.7, 1.5] {
            let r = spatial_correlation(CorrelationModel::LocalScattering { asd_deg: 15.0 }, angle, 0.8, 6).unwrap();
            let trace: f64 = (0..6).map(|i| r[(i, i)].re).sum();
            assert!((trace - 6.0 * 0.8).abs() < 1e-12);
            assert!(min_eigenvalue(&r) >= -1e-12 * trace);
            assert!((&r - r.adjoint()).norm() < 1e-14);
        }
    }

    #[test]
    fn zero_spread_limit_is_rank_one_steering() {
        let (beta, n, angle) = (1.3, 5, 0.4);
        let r = spatial_correlation(
            CorrelationModel::LocalScattering { asd_deg: 1e-9 },
            angle,
            beta,
            n,
        )
        .unwrap();
        let steering = CVec::from_fn(n, |m, _| {
            Complex64::from_polar(1.0, std::f64::consts::PI * m as f64 * angle.sin())
        });
        // beta * N * a a^H / ||a||^2 with ||a||^2 = N
        let rank1 = &steering * steering.adjoint() * Complex64::new(beta, 0.0);
        assert!((&r - &rank1).norm() < 1e-6 * rank1.norm());
    }

    #[test]
    fn rejects_nonpositive_gain() {
        assert!(spatial_correlation(CorrelationModel::Uncorrelated, 0.0, 0.0, 2).is_err());
        assert!(spatial_correlation(CorrelationModel::Uncorrelated, 0.0, -1.0, 2).is_err());
    }
}
