//! Structured audit of a finished allocation against every constraint of
//! the mixed-binary formulation.

use std::fmt;

use crate::powermodel::{gops_gpp_counts, Allocation};
use crate::sysmodel::sinr_and_se;

use super::instance::ProblemInstance;

#[derive(Debug, Clone)]
pub struct ConstraintCheck {
    /// Constraint tag, e.g. "qos-sinr".
    pub name: &'static str,
    pub description: &'static str,
    /// Violation magnitude; 0 when satisfied.
    pub violation: f64,
    pub pass: bool,
}

#[derive(Debug, Clone)]
pub struct ConstraintReport {
    pub checks: Vec<ConstraintCheck>,
}

impl ConstraintReport {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn worst(&self) -> f64 {
        self.checks.iter().map(|c| c.violation).fold(0.0, f64::max)
    }
}

impl fmt::Display for ConstraintReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(
                f,
                "{:8} {:32} violation {:>12.3e}  [{}]",
                c.name,
                c.description,
                c.violation,
                if c.pass { "pass" } else { "FAIL" }
            )?;
        }
        Ok(())
    }
}

/// Relative tolerance applied to every check.
const TOL: f64 = 1e-6;

/// Audits an allocation against the full constraint set of the exact
/// problem: QoS, activation cap, association/activation coupling, line-card
/// and processor dimensioning, per-link and per-O-RU power budgets, and
/// integrality of the counts.
pub fn check_allocation(inst: &ProblemInstance, alloc: &Allocation) -> ConstraintReport {
    let (k, l) = (inst.k(), inst.l());
    let pp = &inst.pp;
    let coeffs = inst.coeffs();
    let w_max = inst.w_max();
    let mut checks = Vec::new();
    let mut push = |name: &'static str, description: &'static str, violation: f64, scale: f64| {
        let v = violation.max(0.0);
        checks.push(ConstraintCheck { name, description, violation: v, pass: v <= TOL * scale.max(1.0) });
    };

    // QoS: SINR_k >= gamma_k.
    let (sinr, _) = sinr_and_se(&inst.stats, &alloc.rho, &inst.cfg);
    let qos = (0..k)
        .map(|ki| (inst.gamma[ki] - sinr[ki]) / inst.gamma[ki].max(1e-12))
        .fold(0.0f64, f64::max);
    push("qos-sinr", "per-UE SINR meets its target", qos, 1.0);

    // Activation cap: sum z <= W_max * W.
    let sum_z = alloc.sum_z() as f64;
    push("act-cap", "active O-RUs within W_max * W", sum_z - (w_max * pp.w) as f64, 1.0);

    // Coupling: sum_k x_kl / K <= z_l <= sum_k x_kl.
    let mut lower = 0.0f64;
    let mut upper = 0.0f64;
    for li in 0..l {
        let sum_x: usize = (0..k).filter(|&ki| alloc.x[(ki, li)]).count();
        let z = alloc.z[li] as usize as f64;
        lower = lower.max(sum_x as f64 / k as f64 - z);
        upper = upper.max(z - sum_x as f64);
    }
    push("zx-lower", "z covers every association", lower, 1.0);
    push("zx-upper", "no O-RU active without a UE", upper, 1.0);

    // Line-card coupling: n_lc - 1 <= sum z / W_max <= n_lc.
    let ratio = sum_z / w_max.max(1) as f64;
    push("lc-count", "line cards cover active O-RUs", ratio - alloc.n_lc as f64, 1.0);
    push(
        "lc-tight",
        "no needlessly active line card",
        alloc.n_lc as f64 - 1.0 - ratio.max(0.0),
        1.0,
    );

    // GOPS capacity.
    let load = gops_gpp_counts(alloc.sum_z(), alloc.sum_x(), &coeffs);
    push(
        "gops-cap",
        "cloud load within processor capacity",
        (load - alloc.n_gpp as f64 * pp.c_gpp_max) / pp.c_gpp_max,
        1.0,
    );

    // Count selection ranges (the one-hot selectors of the formulation).
    push("lc-range", "1 <= n_lc <= W", (1.0 - alloc.n_lc as f64).max(alloc.n_lc as f64 - pp.w as f64), 1.0);
    push(
        "gpp-range",
        "1 <= n_gpp <= W",
        (1.0 - alloc.n_gpp as f64).max(alloc.n_gpp as f64 - pp.w as f64),
        1.0,
    );
    push("lc-gpp", "processors cover line cards", alloc.n_lc as f64 - alloc.n_gpp as f64, 1.0);

    // Per-link power gating: 0 <= rho <= sqrt(p_max) x.
    let sp = inst.cfg.p_max.sqrt();
    let mut gate = 0.0f64;
    let mut nonneg = 0.0f64;
    for ki in 0..k {
        for li in 0..l {
            let r = alloc.rho[(ki, li)];
            nonneg = nonneg.max(-r);
            gate = gate.max(r - sp * alloc.x[(ki, li)] as usize as f64);
        }
    }
    push("rho-gate", "power only on associated links", gate / sp, 1.0);
    push("rho-nonneg", "power square roots nonnegative", nonneg / sp, 1.0);

    // Per-O-RU budget: ||rho'_l|| <= sqrt(p_max) z_l.
    let mut budget = 0.0f64;
    for li in 0..l {
        let norm: f64 = (0..k).map(|ki| alloc.rho[(ki, li)].powi(2)).sum::<f64>().sqrt();
        budget = budget.max(norm - sp * alloc.z[li] as usize as f64);
    }
    push("oru-power", "per-O-RU transmit budget", budget / sp, 1.0);

    // Integrality is structural for x and z (bool) and the counts (usize);
    // recorded for completeness.
    push("binary", "x, z binary; counts integer", 0.0, 1.0);

    ConstraintReport { checks }
}
