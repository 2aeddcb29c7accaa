//! Joint sum-SE / total-power CCP via the fractional-programming lift.
//!
//! The log-SINR reward is rewritten with auxiliaries chi_k (SINR
//! surrogates), u_k >= 1/(1+chi_k), and r_k bounding the lifted denominator
//! (interference + signal + noise)/(1+chi_k), so each CCP subproblem is a
//! quadratic-objective SOCP.

use nalgebra::DMatrix;

use crate::conic::{assemble, solve, ConeBlock, Objective, SolveStatus, DEFAULT_MAX_ITER, DEFAULT_TOL};
use crate::linalg::{hermitian_sqrt, real_stack, RMat, RVec};
use crate::powermodel::{breakdown, cloud_dimensioning, Allocation};
use crate::sysmodel::sinr_and_se;

use super::ccp::{grad_f, surrogate_f};
use super::instance::{CcpConfig, OrchestrateError, OrchestrationResult, ProblemInstance, ResultStatus};
use super::socp::{box_rows, per_oru_budget, rho_index};

/// One CCP iterate of the lifted problem.
#[derive(Debug, Clone)]
pub struct SumSeVariables {
    pub rho: Vec<f64>,
    pub z: Vec<f64>,
    pub chi: Vec<f64>,
    pub u: Vec<f64>,
    pub r: Vec<f64>,
}

/// Variable layout: [rho (K*L), z (L), chi (K), u (K), r (K)].
struct Layout {
    k: usize,
    l: usize,
}

impl Layout {
    fn n(&self) -> usize {
        self.k * self.l + self.l + 3 * self.k
    }
    fn z(&self) -> usize {
        self.k * self.l
    }
    fn chi(&self, k: usize) -> usize {
        self.k * self.l + self.l + k
    }
    fn u(&self, k: usize) -> usize {
        self.chi(k) + self.k
    }
    fn r(&self, k: usize) -> usize {
        self.chi(k) + 2 * self.k
    }
}

/// Denominator of UE k's SINR after the lift: sum_i rho_i' C_ki rho_i +
/// (b_k' rho_k)^2 + sigma^2.
fn lifted_denominator(inst: &ProblemInstance, rho: &DMatrix<f64>, k: usize) -> f64 {
    let (k_total, l_total) = (inst.k(), inst.l());
    let mut d = inst.cfg.sigma2;
    for i in 0..k_total {
        let c = &inst.stats.c[k][i];
        for a in 0..l_total {
            for b in 0..l_total {
                d += rho[(i, a)] * c[(a, b)].re * rho[(i, b)];
            }
        }
    }
    let t: f64 = (0..l_total).map(|l| inst.stats.b[(k, l)] * rho[(k, l)]).sum();
    d + t * t
}

/// True objective of the lifted problem at an iterate.
fn lifted_objective(inst: &ProblemInstance, ccp: &CcpConfig, lambda: f64, v: &SumSeVariables) -> f64 {
    let (a_z, a_rho) = super::ccp::a_coefficients(inst);
    let l_total = inst.l();
    let quad: f64 = v.rho.iter().map(|&r| r * r).sum();
    let mut obj = inst.pp.delta_tr * quad
        + a_z * surrogate_f(&v.z, ccp.alpha_z)
        + a_rho * surrogate_f(&v.rho, ccp.alpha_rho);
    for k in 0..inst.k() {
        let t: f64 = (0..l_total)
            .map(|l| inst.stats.b[(k, l)] * v.rho[rho_index(k, l, l_total)])
            .sum();
        obj += lambda * (v.u[k].ln() + v.chi[k] - t * t / v.r[k]);
    }
    obj
}

/// Cone rows of the lift for every UE, with the denominator bound expressed
/// in noise units (r_hat = r / sigma^2) so all cone data stays well scaled:
///   || [ (2/sigma) C_k1^{1/2} rho_1; ...; (2/sigma) C_kK^{1/2} rho_K;
///        (2/sigma) b_k' rho_k; 2; (1+chi_k) - r_hat_k ] || <= (1+chi_k) + r_hat_k
///   || [ (1+chi_k) - u_k; 2 ] || <= (1+chi_k) + u_k
///
/// Squaring the first row gives exactly
///   sum_i rho_i' C_ki rho_i + (b_k' rho_k)^2 + sigma^2 <= (1+chi_k) sigma^2 r_hat_k,
/// the intended epigraph of the lifted denominator. Without the rescaling
/// r sits near sigma^2/(1+chi) ~ 1e-15 while chi is O(1e3), and the interior
/// point method stalls with a large duality gap.
fn lift_blocks(inst: &ProblemInstance, lay: &Layout) -> Result<Vec<ConeBlock>, OrchestrateError> {
    let (k_total, l_total) = (inst.k(), inst.l());
    let n = lay.n();
    let scale = 2.0 / inst.cfg.sigma2.sqrt();
    let mut blocks = Vec::with_capacity(2 * k_total);
    for k in 0..k_total {
        let rows = 2 * l_total * k_total + 3;
        let mut au = RMat::zeros(rows, n);
        let mut bu = RVec::zeros(rows);
        for i in 0..k_total {
            let c = &inst.stats.c[k][i];
            let min_eig = crate::linalg::min_eigenvalue(c);
            if min_eig < -1e-9 * c.trace().re.max(1.0) {
                return Err(OrchestrateError::NotPsd { k, i, min_eig });
            }
            let stacked = real_stack(&hermitian_sqrt(c));
            for r in 0..2 * l_total {
                for l in 0..l_total {
                    au[(2 * l_total * i + r, rho_index(i, l, l_total))] = scale * stacked[(r, l)];
                }
            }
        }
        let base = 2 * l_total * k_total;
        for l in 0..l_total {
            au[(base, rho_index(k, l, l_total))] = scale * inst.stats.b[(k, l)];
        }
        bu[base + 1] = 2.0;
        au[(base + 2, lay.chi(k))] = 1.0;
        au[(base + 2, lay.r(k))] = -1.0;
        bu[base + 2] = 1.0;
        let mut a_s = RVec::zeros(n);
        a_s[lay.chi(k)] = 1.0;
        a_s[lay.r(k)] = 1.0;
        blocks.push(ConeBlock::Soc { au, bu, a_s, b_s: 1.0 });

        let mut au2 = RMat::zeros(2, n);
        let mut bu2 = RVec::zeros(2);
        au2[(0, lay.chi(k))] = 1.0;
        au2[(0, lay.u(k))] = -1.0;
        bu2[0] = 1.0;
        bu2[1] = 2.0;
        let mut a_s2 = RVec::zeros(n);
        a_s2[lay.chi(k)] = 1.0;
        a_s2[lay.u(k)] = 1.0;
        blocks.push(ConeBlock::Soc { au: au2, bu: bu2, a_s: a_s2, b_s: 1.0 });
    }
    Ok(blocks)
}

/// Joint sum-SE maximization and power minimization with weight `lambda`.
/// No QoS targets apply; the finalize step thresholds and re-prices without
/// a repair solve.
pub fn ccp_sum_se(
    inst: &ProblemInstance,
    lambda: f64,
    ccp: &CcpConfig,
) -> Result<OrchestrationResult, OrchestrateError> {
    ccp_sum_se_detailed(inst, lambda, ccp).map(|(res, _)| res)
}

/// As [`ccp_sum_se`], additionally returning the final CCP iterate in the
/// lifted variable space so the cone activity can be audited.
pub fn ccp_sum_se_detailed(
    inst: &ProblemInstance,
    lambda: f64,
    ccp: &CcpConfig,
) -> Result<(OrchestrationResult, SumSeVariables), OrchestrateError> {
    if lambda <= 0.0 {
        return Err(OrchestrateError::Invalid("lambda must be positive".into()));
    }
    let (k_total, l_total) = (inst.k(), inst.l());
    let kl = k_total * l_total;
    let lay = Layout { k: k_total, l: l_total };
    let n = lay.n();
    let (a_z, a_rho) = super::ccp::a_coefficients(inst);

    let mut blocks = lift_blocks(inst, &lay)?;
    blocks.extend(per_oru_budget(k_total, l_total, n, 0, inst.cfg.p_max, Some(lay.z())));
    blocks.extend(per_oru_budget(k_total, l_total, n, 0, inst.cfg.p_max, None));
    blocks.push(box_rows(n, 0, kl, Some(0.0), None));
    blocks.push(box_rows(n, lay.z(), l_total, Some(0.0), None));
    blocks.push(box_rows(n, lay.chi(0), k_total, Some(0.0), None));

    // Feasible start: uniform powers, auxiliaries chosen to make both lift
    // cones active.
    let init_rho = ccp.init_rho.unwrap_or((inst.cfg.p_max / k_total as f64).sqrt());
    let rho_mat = DMatrix::from_element(k_total, l_total, init_rho);
    let mut v = SumSeVariables {
        rho: vec![init_rho; kl],
        z: vec![ccp.init_z; l_total],
        chi: Vec::new(),
        u: Vec::new(),
        r: Vec::new(),
    };
    let (sinr0, _) = sinr_and_se(&inst.stats, &rho_mat, &inst.cfg);
    for k in 0..k_total {
        let chi = sinr0[k];
        v.chi.push(chi);
        v.u.push(1.0 / (1.0 + chi));
        v.r.push(lifted_denominator(inst, &rho_mat, k) / (1.0 + chi));
    }

    let mut trace = vec![lifted_objective(inst, ccp, lambda, &v)];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < ccp.max_iter {
        iterations += 1;
        let gz = grad_f(&v.z, ccp.alpha_z);
        let gr = grad_f(&v.rho, ccp.alpha_rho);
        let mut q = RVec::zeros(n);
        let mut c = RVec::zeros(n);
        for i in 0..kl {
            q[i] = inst.pp.delta_tr;
            c[i] = a_rho * gr[i];
        }
        for li in 0..l_total {
            c[lay.z() + li] = a_z * gz[li];
        }
        for k in 0..k_total {
            // Linearize the concave terms lambda ln(u) and -lambda t^2/r at
            // the previous iterate (t = b_k' rho_k).
            let t_prev: f64 = (0..l_total)
                .map(|l| inst.stats.b[(k, l)] * v.rho[rho_index(k, l, l_total)])
                .sum();
            let ratio = t_prev / v.r[k];
            c[lay.chi(k)] += lambda;
            c[lay.u(k)] += lambda / v.u[k];
            // The solver's r variable is r / sigma^2, so the gradient of
            // -lambda t^2 / r picks up a sigma^2 factor.
            c[lay.r(k)] += lambda * ratio * ratio * inst.cfg.sigma2;
            for l in 0..l_total {
                c[rho_index(k, l, l_total)] -= lambda * 2.0 * ratio * inst.stats.b[(k, l)];
            }
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
            other => return Err(OrchestrateError::SolverStalled(format!("lift subproblem: {other:?}"))),
        }
        let cand = SumSeVariables {
            rho: (0..kl).map(|i| sol.x[i].max(0.0)).collect(),
            z: (0..l_total).map(|li| sol.x[lay.z() + li].max(0.0)).collect(),
            chi: (0..k_total).map(|k| sol.x[lay.chi(k)].max(0.0)).collect(),
            u: (0..k_total).map(|k| sol.x[lay.u(k)].max(1e-12)).collect(),
            r: (0..k_total)
                .map(|k| (inst.cfg.sigma2 * sol.x[lay.r(k)]).max(1e-30))
                .collect(),
        };
        let obj = lifted_objective(inst, ccp, lambda, &cand);
        let prev = *trace.last().unwrap();
        if obj <= prev {
            v = cand;
            trace.push(obj);
        } else {
            trace.push(prev);
        }
        if prev - *trace.last().unwrap() < ccp.epsilon {
            converged = true;
            break;
        }
    }

    // Finalize by thresholding only: SE is an objective here, not a target,
    // so there is nothing to repair.
    let x = DMatrix::from_fn(k_total, l_total, |ki, li| v.rho[rho_index(ki, li, l_total)] > ccp.zeta);
    let rho = DMatrix::from_fn(k_total, l_total, |ki, li| {
        if x[(ki, li)] {
            v.rho[rho_index(ki, li, l_total)]
        } else {
            0.0
        }
    });
    let z: Vec<bool> = (0..l_total).map(|li| (0..k_total).any(|ki| x[(ki, li)])).collect();
    let coeffs = inst.coeffs();
    let (n_lc, n_gpp) = cloud_dimensioning(
        z.iter().filter(|&&b| b).count(),
        x.iter().filter(|&&b| b).count(),
        &coeffs,
        inst.w_max(),
        &inst.pp,
    )?;
    let alloc = Allocation { x, z, rho, n_lc, n_gpp };
    let bd = breakdown(&alloc, &inst.pp, &coeffs, inst.split)?;
    let (sinr, se) = sinr_and_se(&inst.stats, &alloc.rho, &inst.cfg);
    let res = OrchestrationResult {
        total_power: bd.total(),
        power_breakdown: bd,
        alloc,
        sinr,
        se,
        status: if converged { ResultStatus::ConvergedStationary } else { ResultStatus::MaxIterations },
        iterations,
        gap: 0.0,
        objective_trace: trace,
    };
    Ok((res, v))
}

/// Residual slack of the two lift cones at an iterate, relative to the cone
/// right-hand sides; both vanish at a converged optimum (any slack could be
/// traded for a better objective).
pub fn lift_tightness(inst: &ProblemInstance, v: &SumSeVariables) -> (f64, f64) {
    let (k_total, l_total) = (inst.k(), inst.l());
    let rho = DMatrix::from_fn(k_total, l_total, |ki, li| v.rho[rho_index(ki, li, l_total)]);
    let mut worst_r = 0.0f64;
    let mut worst_u = 0.0f64;
    for k in 0..k_total {
        let denom = lifted_denominator(inst, &rho, k);
        let r_slack = (v.r[k] - denom / (1.0 + v.chi[k])).abs() / v.r[k].max(1e-12);
        let u_slack = (v.u[k] - 1.0 / (1.0 + v.chi[k])).abs() / v.u[k].max(1e-12);
        worst_r = worst_r.max(r_slack);
        worst_u = worst_u.max(u_slack);
    }
    (worst_r, worst_u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::orchestrate::test_support::random_instance;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn cone_row_identity_on_random_triples() {
        // || [2v, c - d] || <= c + d  <=>  v^2 <= c d  (given c + d >= 0):
        // (c + d)^2 - (c - d)^2 = 4 c d.
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..1000 {
            let v: f64 = rng.gen::<f64>() * 4.0 - 2.0;
            let c: f64 = rng.gen::<f64>() * 3.0;
            let d: f64 = rng.gen::<f64>() * 3.0;
            let lhs = (4.0 * v * v + (c - d) * (c - d)).sqrt();
            let cone_holds = lhs <= c + d + 1e-12;
            let algebra_holds = v * v <= c * d + 1e-12;
            assert_eq!(cone_holds, algebra_holds, "v={v} c={c} d={d}");
        }
    }

    #[test]
    fn inverse_cone_identity() {
        // || [(1+chi) - u, 2] || <= (1+chi) + u  <=>  u (1+chi) >= 1.
        let mut rng = ChaCha8Rng::seed_from_u64(78);
        for _ in 0..1000 {
            let chi: f64 = rng.gen::<f64>() * 5.0;
            let u: f64 = rng.gen::<f64>() * 2.0 + 1e-3;
            let lhs = (((1.0 + chi) - u).powi(2) + 4.0).sqrt();
            let cone_holds = lhs <= (1.0 + chi) + u + 1e-12;
            assert_eq!(cone_holds, u * (1.0 + chi) >= 1.0 - 1e-12, "chi={chi} u={u}");
        }
    }

    #[test]
    fn chi_first_order_condition_recovers_sinr() {
        // Maximizing ln(1+chi) - chi + (1+chi) t^2/(D + t^2) over chi >= 0
        // lands at chi = t^2/D, the SINR.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let t: f64 = rng.gen::<f64>() + 0.2;
            let d: f64 = rng.gen::<f64>() + 0.1;
            let theta = t * t / (d + t * t);
            let g = |chi: f64| (1.0 + chi).ln() - chi + (1.0 + chi) * theta;
            let sinr = t * t / d;
            // Stationarity and local maximality at chi = SINR.
            let h = 1e-5;
            let deriv = (g(sinr + h) - g(sinr - h)) / (2.0 * h);
            assert!(deriv.abs() < 1e-6, "derivative {deriv}");
            assert!(g(sinr) >= g(sinr * 0.9) && g(sinr) >= g(sinr * 1.1));
        }
    }

    #[test]
    fn trace_descends_and_tightness_holds() {
        let inst = random_instance(3, 2, 40, 1.0);
        let mut ccp = crate::orchestrate::CcpConfig::defaults(inst.cfg.p_max);
        ccp.epsilon = 1e-6;
        let (res, v) = ccp_sum_se_detailed(&inst, 10.0, &ccp).unwrap();
        for w in res.objective_trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-7, "{} -> {}", w[0], w[1]);
        }
        // At convergence the lift constraints bind (any slack is suboptimal).
        let (r_slack, u_slack) = lift_tightness(&inst, &v);
        assert!(r_slack < 1e-5 && u_slack < 1e-5, "slacks {r_slack} {u_slack}");
    }

    #[test]
    fn tiny_lambda_approaches_empty_network_floor() {
        let inst = random_instance(3, 2, 41, 1.0);
        let ccp = crate::orchestrate::CcpConfig::defaults(inst.cfg.p_max);
        let res = ccp_sum_se(&inst, 1e-4, &ccp).unwrap();
        let pp = &inst.pp;
        let coeffs = inst.coeffs();
        let floor = pp.p_fixed
            + (pp.p_olt + pp.p_gpp0_proc + pp.delta_gpp_proc * coeffs.f_fixed / pp.c_gpp_max)
                / pp.sigma_cool;
        assert!(
            res.total_power <= floor * 1.01,
            "power {} vs floor {floor}",
            res.total_power
        );
    }

    #[test]
    fn larger_lambda_buys_more_rate() {
        let inst = random_instance(3, 2, 42, 1.0);
        let ccp = crate::orchestrate::CcpConfig::defaults(inst.cfg.p_max);
        let low = ccp_sum_se(&inst, 5.0, &ccp).unwrap();
        let high = ccp_sum_se(&inst, 50.0, &ccp).unwrap();
        let sum = |r: &OrchestrationResult| r.se.iter().sum::<f64>();
        assert!(sum(&high) >= sum(&low) - 1e-9);
        assert!(high.total_power >= low.total_power - 1e-9);
    }
}
