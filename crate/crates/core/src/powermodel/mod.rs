//! Fronthaul rates, GOPS loads, and end-to-end power accounting for both
//! functional splits.

mod fronthaul;
mod gops;
mod params;
mod power;

pub use fronthaul::{fronthaul_rate, wavelength_capacity};
pub use gops::{gops_coefficients, gops_gpp, gops_gpp_counts, gops_ru, GopsCoefficients};
pub use params::{Allocation, FronthaulParams, GopsParams, PowerError, PowerParams, SplitOption};
pub use power::{
    breakdown, cloud_dimensioning, power_cloud, power_cloud_from_counts, power_ru, power_total,
    PowerBreakdown,
};
