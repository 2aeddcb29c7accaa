//! Alternative cloud/fronthaul accounting regimes applied to a fixed radio
//! solution: local coordination (per-wavelength dimensioning) and radio-only
//! (fixed all-active provisioning).

use crate::powermodel::{gops_ru, Allocation, PowerBreakdown};

use super::instance::{OrchestrateError, ProblemInstance};

/// Default wavelength plan: O-RU l on wavelength l mod ceil(L / W_max).
pub fn round_robin_map(l_total: usize, w_max: usize) -> Vec<usize> {
    assert!(w_max > 0);
    let groups = l_total.div_ceil(w_max);
    (0..l_total).map(|l| l % groups).collect()
}

fn group_members(map: &[usize]) -> Vec<Vec<usize>> {
    let n_groups = map.iter().copied().max().map_or(0, |m| m + 1);
    let mut groups = vec![Vec::new(); n_groups];
    for (l, &g) in map.iter().enumerate() {
        groups[g].push(l);
    }
    groups
}

fn validate_map(inst: &ProblemInstance, map: &[usize]) -> Result<Vec<Vec<usize>>, OrchestrateError> {
    if map.len() != inst.l() {
        return Err(OrchestrateError::Invalid(format!(
            "wavelength map covers {} O-RUs, instance has {}",
            map.len(),
            inst.l()
        )));
    }
    let groups = group_members(map);
    let w_max = inst.w_max();
    for (g, members) in groups.iter().enumerate() {
        if members.len() > w_max {
            return Err(OrchestrateError::Invalid(format!(
                "wavelength {g} carries {} O-RUs, limit {w_max}",
                members.len()
            )));
        }
    }
    Ok(groups)
}

fn ceil_gpps(load: f64, cap: f64) -> usize {
    ((load / cap) - 1e-9).ceil().max(0.0) as usize
}

/// Radio-site power of a fixed allocation (O-RUs, their processing, ONUs,
/// transmit slope) — everything except the cloud.
fn radio_side(inst: &ProblemInstance, alloc: &Allocation) -> (f64, f64, f64, f64) {
    let pp = &inst.pp;
    let coeffs = inst.coeffs();
    let active = alloc.sum_z() as f64;
    let c_ru = gops_ru(inst.split, &coeffs);
    let transmit: f64 = (0..alloc.num_orus()).map(|l| alloc.transmit_power(l)).sum();
    (
        active * pp.p_ru0,
        pp.delta_tr * transmit,
        active * inst.split.indicator() * (pp.p_ru0_proc + pp.delta_ru_proc * c_ru / pp.c_ru_max),
        active * pp.p_onu,
    )
}

fn assemble_breakdown(
    inst: &ProblemInstance,
    alloc: &Allocation,
    n_lc: usize,
    n_gpp: usize,
) -> Result<PowerBreakdown, OrchestrateError> {
    let pp = &inst.pp;
    let coeffs = inst.coeffs();
    let c_gpp = crate::powermodel::gops_gpp_counts(alloc.sum_z(), alloc.sum_x(), &coeffs);
    let (ru_static, transmit, ru_processing, onu) = radio_side(inst, alloc);
    Ok(PowerBreakdown {
        ru_static,
        transmit,
        ru_processing,
        onu,
        olt: pp.p_olt * n_lc as f64 / pp.sigma_cool,
        gpp_idle: pp.p_gpp0_proc * n_gpp as f64 / pp.sigma_cool,
        gpp_load: pp.delta_gpp_proc * c_gpp / (pp.c_gpp_max * pp.sigma_cool),
        fixed: pp.p_fixed,
    })
}

/// Per-group actual loads: (active members, associations on members), plus
/// the index of the first group containing an active O-RU.
fn group_loads(alloc: &Allocation, groups: &[Vec<usize>]) -> (Vec<usize>, Vec<usize>, Option<usize>) {
    let k = alloc.num_ues();
    let mut act = Vec::with_capacity(groups.len());
    let mut assoc = Vec::with_capacity(groups.len());
    let mut first_active = None;
    for (g, members) in groups.iter().enumerate() {
        let a = members.iter().filter(|&&l| alloc.z[l]).count();
        let x = members
            .iter()
            .map(|&l| (0..k).filter(|&ki| alloc.x[(ki, l)]).count())
            .sum();
        if a > 0 && first_active.is_none() {
            first_active = Some(g);
        }
        act.push(a);
        assoc.push(x);
    }
    (act, assoc, first_active)
}

/// Local-coordination accounting: processing can only be pooled among the
/// GPPs serving the same wavelength, so every active wavelength dimensions
/// its own line card and processors from its actual load. The fixed cloud
/// GOPS lands on the first active wavelength.
pub fn account_local_coordination(
    inst: &ProblemInstance,
    alloc: &Allocation,
    wavelength_map: &[usize],
) -> Result<PowerBreakdown, OrchestrateError> {
    let groups = validate_map(inst, wavelength_map)?;
    let coeffs = inst.coeffs();
    let (act, assoc, first_active) = group_loads(alloc, &groups);
    let mut n_lc = 0;
    let mut n_gpp = 0;
    for g in 0..groups.len() {
        if act[g] == 0 {
            continue;
        }
        n_lc += 1;
        let mut load = coeffs.z_coeff * act[g] as f64 + coeffs.x_coeff * assoc[g] as f64;
        if first_active == Some(g) {
            load += coeffs.f_fixed;
        }
        n_gpp += ceil_gpps(load, inst.pp.c_gpp_max).max(1);
    }
    if alloc.sum_z() == 0 {
        // Keep the idle floor comparable with global dimensioning.
        n_lc = 1;
        n_gpp = 1;
    }
    assemble_breakdown(inst, alloc, n_lc, n_gpp)
}

/// Radio-only accounting: cloud and fronthaul stay provisioned for the
/// all-active case; only unused O-RUs and line cards of fully idle
/// wavelengths can switch off. `per_oru_assoc` is the number of UE
/// associations each O-RU is provisioned for; `None` uses ceil(K / L).
pub fn account_radio_only(
    inst: &ProblemInstance,
    alloc: &Allocation,
    wavelength_map: &[usize],
    per_oru_assoc: Option<usize>,
) -> Result<PowerBreakdown, OrchestrateError> {
    let groups = validate_map(inst, wavelength_map)?;
    let coeffs = inst.coeffs();
    let provision_assoc = per_oru_assoc.unwrap_or_else(|| inst.k().div_ceil(inst.l()));
    let (act, assoc, first_active) = group_loads(alloc, &groups);
    let mut n_lc = 0;
    let mut n_gpp = 0;
    for (g, members) in groups.iter().enumerate() {
        if members.is_empty() {
            continue;
        }
        // Provisioned load: every member active, each with the proxy
        // association count; fixed GOPS charged to the first group.
        let mut provision = members.len() as f64 * (coeffs.z_coeff + coeffs.x_coeff * provision_assoc as f64);
        if g == 0 {
            provision += coeffs.f_fixed;
        }
        // Actual load can exceed the proxy; never under-provision it.
        let mut actual = coeffs.z_coeff * act[g] as f64 + coeffs.x_coeff * assoc[g] as f64;
        if first_active == Some(g) {
            actual += coeffs.f_fixed;
        }
        n_gpp += ceil_gpps(provision.max(actual), inst.pp.c_gpp_max).max(1);
        if act[g] > 0 {
            n_lc += 1;
        }
    }
    if n_lc == 0 {
        n_lc = 1;
    }
    if n_gpp == 0 {
        n_gpp = 1;
    }
    assemble_breakdown(inst, alloc, n_lc, n_gpp)
}
