use serde::{Deserialize, Serialize};
use thiserror::Error;

/// OFDM numerology, coherence-block geometry, and radio constants shared by
/// every stage of the pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemConfig {
    /// Sampling frequency (Hz).
    pub f_s: f64,
    /// Bandwidth (Hz).
    pub bandwidth: f64,
    /// DFT size.
    pub n_dft: usize,
    /// Used subcarriers.
    pub n_used: usize,
    /// OFDM symbol duration (s).
    pub t_s: f64,
    /// Consecutive subcarriers per coherence block.
    pub n_smooth: usize,
    /// OFDM symbols per coherence block.
    pub n_slot: usize,
    /// Pilot samples per coherence block.
    pub tau_p: usize,
    /// Antennas per O-RU.
    pub n_antennas: usize,
    /// Per-UE uplink pilot power (W).
    pub eta: f64,
    /// Noise power (W).
    pub sigma2: f64,
    /// Per-O-RU downlink transmit budget (W).
    pub p_max: f64,
    /// Square coverage-area side length (m).
    pub area: f64,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            f_s: 30.72e6,
            bandwidth: 20e6,
            n_dft: 2048,
            n_used: 1200,
            t_s: 71.4e-6,
            n_smooth: 12,
            n_slot: 16,
            tau_p: 8,
            n_antennas: 4,
            eta: 0.1,
            // -94 dBm: thermal noise over 20 MHz with a 7 dB noise figure.
            sigma2: 3.9810717055349695e-13,
            p_max: 1.0,
            area: 1000.0,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("{0} must be positive")]
    NonPositive(&'static str),
    #[error("tau_p = {tau_p} must satisfy 1 <= tau_p < tau_c = {tau_c}")]
    PilotLength { tau_p: usize, tau_c: usize },
    #[error("n_used = {n_used} exceeds n_dft = {n_dft}")]
    UsedSubcarriers { n_used: usize, n_dft: usize },
}

impl SystemConfig {
    /// Channel uses per coherence block: tau_c = N_smooth * N_slot.
    pub fn tau_c(&self) -> usize {
        self.n_smooth * self.n_slot
    }

    /// Downlink data samples per coherence block: tau_d = tau_c - tau_p.
    pub fn tau_d(&self) -> usize {
        self.tau_c() - self.tau_p
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        for (name, v) in [
            ("f_s", self.f_s),
            ("bandwidth", self.bandwidth),
            ("t_s", self.t_s),
            ("eta", self.eta),
            ("sigma2", self.sigma2),
            ("p_max", self.p_max),
            ("area", self.area),
        ] {
            if !(v > 0.0) {
                return Err(ConfigError::NonPositive(name));
            }
        }
        if self.n_dft == 0 || self.n_smooth == 0 || self.n_slot == 0 || self.n_antennas == 0 {
            return Err(ConfigError::NonPositive("n_dft/n_smooth/n_slot/n_antennas"));
        }
        let tau_c = self.tau_c();
        if self.tau_p < 1 || self.tau_p >= tau_c {
            return Err(ConfigError::PilotLength { tau_p: self.tau_p, tau_c });
        }
        if self.n_used > self.n_dft {
            return Err(ConfigError::UsedSubcarriers { n_used: self.n_used, n_dft: self.n_dft });
        }
        Ok(())
    }
}
