use crate::sysmodel::SystemConfig;

use super::params::{FronthaulParams, SplitOption};

/// Required fronthaul rate per O-RU (bit/s) for the given split.
///
/// Option 8 carries quantized time-domain samples; Option 7.2 carries
/// frequency-domain samples of the used subcarriers only.
pub fn fronthaul_rate(split: SplitOption, cfg: &SystemConfig, fh: &FronthaulParams) -> f64 {
    let n = cfg.n_antennas as f64;
    let bits = fh.n_bits as f64;
    match split {
        SplitOption::Option8 => 2.0 * cfg.f_s * bits * n,
        SplitOption::Option7_2 => 2.0 * bits * cfg.n_used as f64 * n / cfg.t_s,
    }
}

/// Largest number of O-RUs one wavelength (and hence one LC/GPP) can carry.
/// Zero signals that the split cannot be fronthauled at this antenna count.
pub fn wavelength_capacity(split: SplitOption, cfg: &SystemConfig, fh: &FronthaulParams) -> usize {
    let rate = fronthaul_rate(split, cfg, fh);
    if rate <= 0.0 {
        return 0;
    }
    (fh.r_max / rate).floor() as usize
}
