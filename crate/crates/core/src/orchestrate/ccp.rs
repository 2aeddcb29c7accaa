//! Concave-convex procedure for the l0-relaxed power-minimization problem.
//!
//! The binary bookkeeping of the exact formulation is folded into the
//! objective through the coefficients A_z and A_rho; the exponential
//! surrogate f(v) = sum(1 - exp(-alpha v)) stands in for the counting norm
//! and is linearized at the previous iterate each round.

use nalgebra::DMatrix;

use crate::conic::{assemble, solve, ConeBlock, Objective, SolveStatus, DEFAULT_MAX_ITER, DEFAULT_TOL};
use crate::linalg::RVec;
use crate::powermodel::{breakdown, cloud_dimensioning, Allocation};
use crate::sysmodel::sinr_and_se;

use super::instance::{CcpConfig, OrchestrateError, OrchestrationResult, ProblemInstance, ResultStatus};
use super::socp::{box_rows, per_oru_budget, rho_index, sinr_soc_rows, widen};

/// Smooth surrogate of the counting norm: sum_i (1 - exp(-alpha v_i)).
pub fn surrogate_f(v: &[f64], alpha: f64) -> f64 {
    v.iter().map(|&x| 1.0 - (-alpha * x).exp()).sum()
}

/// Componentwise gradient of [`surrogate_f`]: alpha exp(-alpha v_i).
pub fn grad_f(v: &[f64], alpha: f64) -> Vec<f64> {
    v.iter().map(|&x| alpha * (-alpha * x).exp()).collect()
}

/// The activation-count and association-count prices, collected from every
/// objective term that multiplies ||z||_0 respectively sum_k ||rho_k||_0 in
/// the reduced problem.
pub(crate) fn a_coefficients(inst: &ProblemInstance) -> (f64, f64) {
    let pp = &inst.pp;
    let coeffs = inst.coeffs();
    let i_s = inst.split.indicator();
    let w_max = inst.w_max() as f64;
    let a_z = pp.p_ru0
        + pp.p_onu
        + i_s * (pp.p_ru0_proc + pp.delta_ru_proc * coeffs.s_low_phy / pp.c_ru_max)
        + pp.delta_gpp_proc * coeffs.z_coeff / (pp.sigma_cool * pp.c_gpp_max)
        + (pp.p_olt + pp.p_gpp0_proc) / (pp.sigma_cool * w_max)
        + pp.p_gpp0_proc * coeffs.z_coeff / (pp.sigma_cool * pp.c_gpp_max);
    let a_rho = (pp.p_gpp0_proc + pp.delta_gpp_proc) * coeffs.x_coeff / (pp.sigma_cool * pp.c_gpp_max);
    (a_z, a_rho)
}

/// Shared constraint set of the reduced problem over [rho (K*L), z (L)]:
/// SINR cones, conditional and unconditional per-O-RU budgets, rho >= 0,
/// z >= 0.
fn reduced_blocks(inst: &ProblemInstance) -> Result<Vec<ConeBlock>, OrchestrateError> {
    let (k, l) = (inst.k(), inst.l());
    let kl = k * l;
    let n = kl + l;
    let mut blocks: Vec<ConeBlock> = sinr_soc_rows(&inst.stats, &inst.gamma, inst.cfg.sigma2)?
        .iter()
        .map(|b| widen(b, n, 0))
        .collect();
    blocks.extend(per_oru_budget(k, l, n, 0, inst.cfg.p_max, Some(kl)));
    blocks.extend(per_oru_budget(k, l, n, 0, inst.cfg.p_max, None));
    blocks.push(box_rows(n, 0, kl, Some(0.0), None));
    blocks.push(box_rows(n, kl, l, Some(0.0), None));
    Ok(blocks)
}

/// True objective of the reduced problem at an iterate.
fn reduced_objective(inst: &ProblemInstance, ccp: &CcpConfig, rho: &[f64], z: &[f64]) -> f64 {
    let (a_z, a_rho) = a_coefficients(inst);
    let quad: f64 = rho.iter().map(|&r| r * r).sum();
    inst.pp.delta_tr * quad + a_z * surrogate_f(z, ccp.alpha_z) + a_rho * surrogate_f(rho, ccp.alpha_rho)
}

/// One feasibility probe: is there any power allocation meeting the SINR
/// targets within the per-O-RU budgets?
fn phase_one(inst: &ProblemInstance) -> Result<DMatrix<f64>, OrchestrateError> {
    super::exact::min_power_given_x(inst, &DMatrix::from_element(inst.k(), inst.l(), true))
}

/// Power minimization by CCP on the reduced problem, followed by
/// thresholding and a final exact power re-balance.
pub fn ccp_power_min(
    inst: &ProblemInstance,
    ccp: &CcpConfig,
) -> Result<OrchestrationResult, OrchestrateError> {
    let (k, l) = (inst.k(), inst.l());
    let kl = k * l;
    let n = kl + l;
    phase_one(inst)?;
    let blocks = reduced_blocks(inst)?;
    let (a_z, a_rho) = a_coefficients(inst);

    let init_rho = ccp.init_rho.unwrap_or((inst.cfg.p_max / k as f64).sqrt());
    let mut rho: Vec<f64> = vec![init_rho; kl];
    let mut z: Vec<f64> = vec![ccp.init_z; l];
    let mut trace = vec![reduced_objective(inst, ccp, &rho, &z)];
    let mut iterations = 0;
    let mut converged = false;

    while iterations < ccp.max_iter {
        iterations += 1;
        let gz = grad_f(&z, ccp.alpha_z);
        let gr = grad_f(&rho, ccp.alpha_rho);
        let mut q = RVec::zeros(n);
        let mut c = RVec::zeros(n);
        for i in 0..kl {
            q[i] = inst.pp.delta_tr;
            c[i] = a_rho * gr[i];
        }
        for li in 0..l {
            c[kl + li] = a_z * gz[li];
        }
        let prog = assemble(
            Objective { q, c },
            blocks.clone(),
            (0..n).map(|i| format!("v{i}")).collect(),
        )
        .map_err(|e| OrchestrateError::SolverStalled(format!("assemble: {e}")))?;
        let sol = solve(&prog, DEFAULT_TOL, DEFAULT_MAX_ITER);
        match sol.status {
            SolveStatus::Optimal => {}
            SolveStatus::MaxIterations if sol.primal_residual < 1e-6 => {}
            SolveStatus::PrimalInfeasible => {
                return Err(OrchestrateError::Infeasible(
                    "CCP subproblem infeasible despite phase-1 success".into(),
                ))
            }
            other => return Err(OrchestrateError::SolverStalled(format!("CCP subproblem: {other:?}"))),
        }
        let new_rho: Vec<f64> = (0..kl).map(|i| sol.x[i].max(0.0)).collect();
        let new_z: Vec<f64> = (0..l).map(|li| sol.x[kl + li].max(0.0)).collect();
        let obj = reduced_objective(inst, ccp, &new_rho, &new_z);
        let prev = *trace.last().unwrap();
        // Majorization guarantees descent; only accept improving steps so a
        // solver hiccup cannot corrupt the trace.
        if obj <= prev {
            rho = new_rho;
            z = new_z;
            trace.push(obj);
        } else {
            trace.push(prev);
        }
        if prev - *trace.last().unwrap() < ccp.epsilon {
            converged = true;
            break;
        }
    }

    let rho_mat = DMatrix::from_fn(k, l, |ki, li| rho[rho_index(ki, li, l)]);
    let mut out = finalize_allocation(&rho_mat, inst, ccp.zeta)?;
    out.iterations = iterations;
    out.objective_trace = trace;
    out.status = if converged { ResultStatus::ConvergedStationary } else { ResultStatus::MaxIterations };
    Ok(out)
}

/// Thresholds a CCP iterate into a binary association pattern, re-balances
/// the surviving powers exactly, and prices the result with true integer
/// line-card and processor counts. Retries with progressively smaller
/// thresholds (down to keeping every link that carries power, a pattern the
/// iterate itself proves feasible) if the thresholding destroyed
/// feasibility.
pub fn finalize_allocation(
    rho_last: &DMatrix<f64>,
    inst: &ProblemInstance,
    zeta: f64,
) -> Result<OrchestrationResult, OrchestrateError> {
    let attempt = |threshold: f64| -> Result<OrchestrationResult, OrchestrateError> {
        let (k, l) = (inst.k(), inst.l());
        let x = DMatrix::from_fn(k, l, |ki, li| rho_last[(ki, li)] > threshold);
        let z: Vec<bool> = (0..l).map(|li| (0..k).any(|ki| x[(ki, li)])).collect();
        let rho = super::exact::min_power_given_x(inst, &x)?;
        let coeffs = inst.coeffs();
        let (n_lc, n_gpp) = cloud_dimensioning(
            z.iter().filter(|&&v| v).count(),
            x.iter().filter(|&&v| v).count(),
            &coeffs,
            inst.w_max(),
            &inst.pp,
        )?;
        let alloc = Allocation { x, z, rho, n_lc, n_gpp };
        let bd = breakdown(&alloc, &inst.pp, &coeffs, inst.split)?;
        let (sinr, se) = sinr_and_se(&inst.stats, &alloc.rho, &inst.cfg);
        Ok(OrchestrationResult {
            total_power: bd.total(),
            power_breakdown: bd,
            alloc,
            sinr,
            se,
            status: ResultStatus::Feasible,
            iterations: 0,
            gap: 0.0,
            objective_trace: Vec::new(),
        })
    };
    let mut result = attempt(zeta);
    let mut shrink = zeta / 10.0;
    while result.is_err() && shrink > zeta * 1e-4 {
        result = result.or_else(|first| attempt(shrink).map_err(|_| first));
        shrink /= 10.0;
    }
    result.or_else(|first| attempt(0.0).map_err(|_| first))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::orchestrate::test_support::{random_instance, scalar_instance, uniform_targets};

    #[test]
    fn surrogate_limits() {
        assert_eq!(surrogate_f(&[0.0, 0.0], 20.0), 0.0);
        assert_eq!(grad_f(&[0.0], 20.0)[0], 20.0);
        let v = [0.6, 1.3, 0.5];
        assert!((surrogate_f(&v, 20.0) - 3.0).abs() < 1e-4);
    }

    #[test]
    fn gradient_matches_central_differences() {
        let alpha = 7.0;
        let v = [0.13, 0.02, 0.77, 0.4];
        let g = grad_f(&v, alpha);
        let h = 1e-6;
        for i in 0..v.len() {
            let mut up = v;
            let mut dn = v;
            up[i] += h;
            dn[i] -= h;
            let fd = (surrogate_f(&up, alpha) - surrogate_f(&dn, alpha)) / (2.0 * h);
            assert!((g[i] - fd).abs() < 1e-6, "component {i}: {} vs {fd}", g[i]);
        }
    }

    #[test]
    fn single_link_analytic_power() {
        let (inst, b, c, g) = scalar_instance(21);
        let target = (g * inst.cfg.sigma2 / (b * b - g * c)).sqrt();
        let res = ccp_power_min(&inst, &CcpConfig::defaults(inst.cfg.p_max)).unwrap();
        let got = res.alloc.rho[(0, 0)];
        assert!(
            (got - target).abs() < 1e-4 * target,
            "rho {got} vs analytic {target}"
        );
    }

    #[test]
    fn trace_is_nonincreasing() {
        for seed in [2u64, 8, 15] {
            let inst = random_instance(3, 2, seed, 0.9);
            let res = ccp_power_min(&inst, &CcpConfig::defaults(inst.cfg.p_max)).unwrap();
            for w in res.objective_trace.windows(2) {
                assert!(w[1] <= w[0] + 1e-7, "seed {seed}: {} -> {}", w[0], w[1]);
            }
            for ki in 0..inst.k() {
                assert!(res.sinr[ki] >= inst.gamma[ki] * (1.0 - 1e-6), "seed {seed} UE {ki}");
            }
        }
    }

    #[test]
    fn finalize_keeps_everything_above_threshold() {
        let inst = random_instance(2, 2, 5, 0.7);
        let rho = DMatrix::from_element(2, 2, 0.4);
        let res = finalize_allocation(&rho, &inst, 1e-3).unwrap();
        assert!(res.alloc.x.iter().all(|&v| v), "all entries exceed zeta");
        assert!(res.alloc.z.iter().all(|&v| v));
    }

    #[test]
    fn infeasible_targets_rejected_in_phase_one() {
        let inst = uniform_targets(random_instance(2, 2, 6, 1.0), 1e9);
        assert!(matches!(
            ccp_power_min(&inst, &CcpConfig::defaults(1.0)),
            Err(OrchestrateError::Infeasible(_))
        ));
    }

    #[test]
    fn ccp_upper_bounds_exact_optimum() {
        // CCP is a heuristic: it can never beat the proven global optimum.
        let inst = random_instance(3, 2, 12, 1.0);
        let exact = crate::orchestrate::solve_exact(&inst, false, 1e-6).unwrap();
        let ccp = ccp_power_min(&inst, &CcpConfig::defaults(inst.cfg.p_max)).unwrap();
        assert!(ccp.total_power >= exact.total_power - 1e-6);
    }
}

