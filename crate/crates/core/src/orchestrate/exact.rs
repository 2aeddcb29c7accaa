//! Branch-and-bound for the mixed-binary power-minimization SOCP.
//!
//! Branching happens over the association binaries x_{k,l} only: the
//! activation bits z and the line-card/processor counts are implied by x at
//! every integer point, and the continuous relaxation of a node keeps them
//! as bounded real variables so its optimum is a valid lower bound.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use nalgebra::DMatrix;

use crate::conic::{assemble, solve, ConeBlock, Objective, SolveStatus, DEFAULT_MAX_ITER, DEFAULT_TOL};
use crate::linalg::{RMat, RVec};
use crate::powermodel::{breakdown, cloud_dimensioning, Allocation, GopsCoefficients, PowerError};
use crate::sysmodel::sinr_and_se;

use super::instance::{OrchestrateError, OrchestrationResult, ProblemInstance, ResultStatus};
use super::socp::{box_rows, per_oru_budget, rho_index, sinr_soc_rows, widen};

/// Safety valve for pathological instances; well within reach of the
/// intended desk scales (K*L <= 64 binaries).
const MAX_NODES: usize = 200_000;
const INT_TOL: f64 = 1e-6;

/// Linear objective weights of the continuous relaxation, all in W.
pub(crate) struct PowerCoeffs {
    /// Cost of activating one O-RU (static + ONU + on-RU processing + cloud
    /// load slope per active O-RU).
    pub cz: f64,
    /// Cloud load slope per UE association.
    pub cx: f64,
    /// Cost per active line card.
    pub c_nlc: f64,
    /// Idle cost per active processor.
    pub c_ngpp: f64,
    /// Power that no allocation can avoid.
    pub constant: f64,
}

pub(crate) fn power_coeffs(inst: &ProblemInstance, coeffs: &GopsCoefficients) -> PowerCoeffs {
    let pp = &inst.pp;
    let i_s = inst.split.indicator();
    let cloud_slope = pp.delta_gpp_proc / (pp.sigma_cool * pp.c_gpp_max);
    PowerCoeffs {
        cz: pp.p_ru0
            + pp.p_onu
            + i_s * (pp.p_ru0_proc + pp.delta_ru_proc * coeffs.s_low_phy / pp.c_ru_max)
            + cloud_slope * coeffs.z_coeff,
        cx: cloud_slope * coeffs.x_coeff,
        c_nlc: pp.p_olt / pp.sigma_cool,
        c_ngpp: pp.p_gpp0_proc / pp.sigma_cool,
        constant: pp.p_fixed + cloud_slope * coeffs.f_fixed,
    }
}

/// Continuous relaxation of one branch-and-bound node. Variable layout:
/// [rho (K*L), x (K*L), z (L), n_lc, n_gpp].
struct Relaxation {
    k: usize,
    l: usize,
    n: usize,
    base_blocks: Vec<ConeBlock>,
    q: RVec,
    c: RVec,
    constant: f64,
}

impl Relaxation {
    const RHO: usize = 0;

    fn x_off(&self) -> usize {
        self.k * self.l
    }

    fn build(inst: &ProblemInstance, small_cell: bool) -> Result<Self, OrchestrateError> {
        let (k, l) = (inst.k(), inst.l());
        let kl = k * l;
        let n = 2 * kl + l + 2;
        let (nlc, ngpp) = (2 * kl + l, 2 * kl + l + 1);
        let coeffs = inst.coeffs();
        let pc = power_coeffs(inst, &coeffs);
        let w_max = inst.w_max();
        if w_max == 0 {
            return Err(OrchestrateError::Power(PowerError::SplitInfeasible));
        }
        let w = inst.pp.w as f64;
        let sp = inst.cfg.p_max.sqrt();

        let mut blocks: Vec<ConeBlock> = sinr_soc_rows(&inst.stats, &inst.gamma, inst.cfg.sigma2)?
            .iter()
            .map(|b| widen(b, n, Self::RHO))
            .collect();
        blocks.extend(per_oru_budget(k, l, n, Self::RHO, inst.cfg.p_max, Some(2 * kl)));

        // Linear rows gathered into one nonnegative block.
        let mut a = Vec::<RVec>::new();
        let mut b = Vec::<f64>::new();
        let mut row = |entries: &[(usize, f64)], offset: f64| {
            let mut r = RVec::zeros(n);
            for &(i, v) in entries {
                r[i] = v;
            }
            a.push(r);
            b.push(offset);
        };
        for ki in 0..k {
            for li in 0..l {
                let (ri, xi, zi) = (rho_index(ki, li, l), kl + rho_index(ki, li, l), 2 * kl + li);
                row(&[(ri, 1.0)], 0.0); // rho >= 0
                row(&[(xi, sp), (ri, -1.0)], 0.0); // rho <= sqrt(p) x
                row(&[(zi, 1.0), (xi, -1.0)], 0.0); // x <= z
            }
        }
        for li in 0..l {
            // z_l <= sum_k x_kl: an O-RU only stays on to serve someone.
            let mut entries: Vec<(usize, f64)> = (0..k).map(|ki| (kl + rho_index(ki, li, l), 1.0)).collect();
            entries.push((2 * kl + li, -1.0));
            row(&entries, 0.0);
        }
        // Activation cap and line-card coupling.
        let z_cols: Vec<(usize, f64)> = (0..l).map(|li| (2 * kl + li, -1.0)).collect();
        row(&z_cols, (w_max * inst.pp.w) as f64);
        let mut lc = z_cols.clone();
        lc.push((nlc, w_max as f64));
        row(&lc, 0.0); // W_max n_lc >= sum z
        row(&[(nlc, 1.0)], -1.0); // n_lc >= 1
        row(&[(nlc, -1.0)], w); // n_lc <= W
        row(&[(ngpp, 1.0), (nlc, -1.0)], 0.0); // n_gpp >= n_lc
        row(&[(ngpp, -1.0)], w); // n_gpp <= W
        // GOPS capacity: C_max n_gpp >= Z sum z + X sum x + F.
        let mut cap: Vec<(usize, f64)> = (0..l).map(|li| (2 * kl + li, -coeffs.z_coeff)).collect();
        cap.extend((0..kl).map(|i| (kl + i, -coeffs.x_coeff)));
        cap.push((ngpp, inst.pp.c_gpp_max));
        row(&cap, -coeffs.f_fixed);
        if small_cell {
            // sum_l x_kl = 1 per UE, written as a pair of inequalities.
            for ki in 0..k {
                let cols: Vec<(usize, f64)> = (0..l).map(|li| (kl + rho_index(ki, li, l), 1.0)).collect();
                row(&cols, -1.0);
                let neg: Vec<(usize, f64)> = cols.iter().map(|&(i, v)| (i, -v)).collect();
                row(&neg, 1.0);
            }
        }
        let a_mat = RMat::from_fn(a.len(), n, |r, c| a[r][c]);
        blocks.push(ConeBlock::Nonneg { a: a_mat, b: RVec::from_vec(b) });
        blocks.push(box_rows(n, 2 * kl, l, Some(0.0), Some(1.0))); // z in [0,1]

        let mut q = RVec::zeros(n);
        let mut c = RVec::zeros(n);
        for i in 0..kl {
            q[i] = inst.pp.delta_tr;
            c[kl + i] = pc.cx;
        }
        for li in 0..l {
            c[2 * kl + li] = pc.cz;
        }
        c[nlc] = pc.c_nlc;
        c[ngpp] = pc.c_ngpp;
        Ok(Relaxation { k, l, n, base_blocks: blocks, q, c, constant: pc.constant })
    }

    /// Solves the node with the given bounds on the branched variables:
    /// `lo`/`hi` cover the K*L association binaries followed by the L
    /// activation variables.
    fn solve_node(&self, lo: &[f64], hi: &[f64]) -> NodeOutcome {
        let kl = self.k * self.l;
        let m = kl + self.l;
        let mut blocks = self.base_blocks.clone();
        let mut a = RMat::zeros(2 * m, self.n);
        let mut b = RVec::zeros(2 * m);
        for i in 0..m {
            a[(2 * i, self.x_off() + i)] = 1.0;
            b[2 * i] = -lo[i];
            a[(2 * i + 1, self.x_off() + i)] = -1.0;
            b[2 * i + 1] = hi[i];
        }
        blocks.push(ConeBlock::Nonneg { a, b });
        let prog = match assemble(
            Objective { q: self.q.clone(), c: self.c.clone() },
            blocks,
            (0..self.n).map(|i| format!("v{i}")).collect(),
        ) {
            Ok(p) => p,
            Err(e) => return NodeOutcome::Error(format!("assemble: {e}")),
        };
        let sol = solve(&prog, DEFAULT_TOL, DEFAULT_MAX_ITER);
        match sol.status {
            SolveStatus::Optimal => NodeOutcome::Solved {
                objective: sol.objective + self.constant,
                xz: sol.x.rows(self.x_off(), m).iter().copied().collect(),
            },
            SolveStatus::PrimalInfeasible => NodeOutcome::Infeasible,
            SolveStatus::Unbounded => NodeOutcome::Error("relaxation unbounded".into()),
            SolveStatus::MaxIterations => {
                if sol.primal_residual < 1e-6 && sol.gap < 1e-5 {
                    NodeOutcome::Solved {
                        objective: sol.objective + self.constant - 1e-4,
                        xz: sol.x.rows(self.x_off(), m).iter().copied().collect(),
                    }
                } else {
                    NodeOutcome::Stalled
                }
            }
        }
    }
}

enum NodeOutcome {
    Solved { objective: f64, xz: Vec<f64> },
    Infeasible,
    Stalled,
    Error(String),
}

struct Node {
    bound: f64,
    seq: usize,
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.seq == other.seq
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    // Max-heap: best (smallest) bound first, oldest node on ties.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .partial_cmp(&self.bound)
            .unwrap_or(Ordering::Equal)
            .then(other.seq.cmp(&self.seq))
    }
}

/// Minimum transmit objective for a fixed binary association pattern:
/// solves min sum rho^2 over the surviving entries subject to the SINR
/// cones and per-O-RU budgets. Returns the full K x L rho matrix.
pub(crate) fn min_power_given_x(
    inst: &ProblemInstance,
    x: &DMatrix<bool>,
) -> Result<DMatrix<f64>, OrchestrateError> {
    let (k, l) = (inst.k(), inst.l());
    let survivors: Vec<usize> = (0..k * l).filter(|&i| x[(i / l, i % l)]).collect();
    for ki in 0..k {
        if inst.gamma[ki] > 0.0 && !(0..l).any(|li| x[(ki, li)]) {
            return Err(OrchestrateError::Infeasible(format!(
                "UE {ki} has a positive SINR target but no serving O-RU"
            )));
        }
    }
    if survivors.is_empty() {
        return Ok(DMatrix::zeros(k, l));
    }
    let select = |m: &RMat| {
        let mut out = RMat::zeros(m.nrows(), survivors.len());
        for (j, &col) in survivors.iter().enumerate() {
            out.column_mut(j).copy_from(&m.column(col));
        }
        out
    };
    let select_v = |v: &RVec| RVec::from_fn(survivors.len(), |j, _| v[survivors[j]]);
    let mut blocks: Vec<ConeBlock> = sinr_soc_rows(&inst.stats, &inst.gamma, inst.cfg.sigma2)?
        .iter()
        .map(|blk| match blk {
            ConeBlock::Soc { au, bu, a_s, b_s } => ConeBlock::Soc {
                au: select(au),
                bu: bu.clone(),
                a_s: select_v(a_s),
                b_s: *b_s,
            },
            ConeBlock::Nonneg { a, b } => ConeBlock::Nonneg { a: select(a), b: b.clone() },
        })
        .collect();
    for blk in per_oru_budget(k, l, k * l, 0, inst.cfg.p_max, None) {
        if let ConeBlock::Soc { au, bu, a_s, b_s } = blk {
            blocks.push(ConeBlock::Soc { au: select(&au), bu, a_s: select_v(&a_s), b_s });
        }
    }
    blocks.push(box_rows(survivors.len(), 0, survivors.len(), Some(0.0), None));
    let q = RVec::from_element(survivors.len(), 1.0);
    let prog = assemble(
        Objective { q, c: RVec::zeros(survivors.len()) },
        blocks,
        survivors.iter().map(|i| format!("rho{i}")).collect(),
    )
    .map_err(|e| OrchestrateError::SolverStalled(format!("assemble: {e}")))?;
    let sol = solve(&prog, DEFAULT_TOL, DEFAULT_MAX_ITER);
    match sol.status {
        SolveStatus::Optimal => {}
        SolveStatus::PrimalInfeasible => {
            return Err(OrchestrateError::Infeasible(
                "SINR targets unreachable under the fixed association pattern".into(),
            ))
        }
        SolveStatus::MaxIterations if sol.primal_residual < 1e-7 => {}
        other => {
            return Err(OrchestrateError::SolverStalled(format!(
                "power re-balancing ended with {other:?}"
            )))
        }
    }
    let mut rho = DMatrix::zeros(k, l);
    for (j, &i) in survivors.iter().enumerate() {
        rho[(i / l, i % l)] = sol.x[j].max(0.0);
    }
    Ok(rho)
}

/// Full power evaluation of a binary association pattern; errors if the
/// pattern violates the activation cap or the SINR targets are unreachable.
pub(crate) fn evaluate_pattern(
    inst: &ProblemInstance,
    x: &DMatrix<bool>,
) -> Result<(Allocation, f64), OrchestrateError> {
    let (k, l) = (inst.k(), inst.l());
    let z: Vec<bool> = (0..l).map(|li| (0..k).any(|ki| x[(ki, li)])).collect();
    let sum_z = z.iter().filter(|&&v| v).count();
    if sum_z > inst.w_max() * inst.pp.w {
        return Err(OrchestrateError::Infeasible("activation cap exceeded".into()));
    }
    let coeffs = inst.coeffs();
    let sum_x = x.iter().filter(|&&v| v).count();
    let (n_lc, n_gpp) = cloud_dimensioning(sum_z, sum_x, &coeffs, inst.w_max(), &inst.pp)?;
    let rho = min_power_given_x(inst, x)?;
    let alloc = Allocation { x: x.clone(), z, rho, n_lc, n_gpp };
    let total = breakdown(&alloc, &inst.pp, &coeffs, inst.split)?.total();
    Ok((alloc, total))
}

/// Global solve of the power-minimization problem by branch and bound over
/// the association binaries. `small_cell` restricts every UE to exactly one
/// serving O-RU.
pub fn solve_exact(
    inst: &ProblemInstance,
    small_cell: bool,
    gap_tol: f64,
) -> Result<OrchestrationResult, OrchestrateError> {
    let (k, l) = (inst.k(), inst.l());
    let kl = k * l;
    let relax = Relaxation::build(inst, small_cell)?;

    let mut incumbent: Option<(Allocation, f64)> = None;
    let consider = |cand: Result<(Allocation, f64), OrchestrateError>,
                        best: &mut Option<(Allocation, f64)>| {
        if let Ok((alloc, total)) = cand {
            if best.as_ref().is_none_or(|(_, t)| total < *t) {
                *best = Some((alloc, total));
            }
        }
    };

    // Seed the incumbent with the all-on pattern (always QoS-maximal).
    let all_on = if small_cell {
        // Each UE served by its strongest O-RU.
        DMatrix::from_fn(k, l, |ki, li| {
            let best = (0..l)
                .max_by(|&a, &b| inst.stats.b[(ki, a)].partial_cmp(&inst.stats.b[(ki, b)]).unwrap())
                .unwrap();
            li == best
        })
    } else {
        DMatrix::from_element(k, l, true)
    };
    consider(evaluate_pattern(inst, &all_on), &mut incumbent);

    // Branch variables: the K*L association binaries plus the L activation
    // variables (integral at any integer association; fixing them early is
    // what makes the node bounds bite, since they carry the per-O-RU cost).
    let m = kl + l;
    let mut heap = BinaryHeap::new();
    heap.push(Node { bound: f64::NEG_INFINITY, seq: 0, lo: vec![0.0; m], hi: vec![1.0; m] });
    let mut seq = 1usize;
    let mut nodes = 0usize;
    let mut rounded_once = false;
    let mut exhausted = true;

    while let Some(node) = heap.pop() {
        nodes += 1;
        if nodes > MAX_NODES {
            exhausted = false;
            break;
        }
        if let Some((_, best)) = &incumbent {
            if node.bound >= best - gap_tol * best.abs().max(1.0) {
                continue; // proven: nothing below the incumbent remains
            }
        }
        let (objective, xr) = match relax.solve_node(&node.lo, &node.hi) {
            NodeOutcome::Solved { objective, xz } => (objective, xz),
            NodeOutcome::Infeasible => continue,
            NodeOutcome::Stalled => {
                // Bound unusable; branch blindly on the first free variable.
                match (0..m).find(|&i| node.hi[i] - node.lo[i] > 0.5) {
                    Some(i) => {
                        for fix in [0.0, 1.0] {
                            let mut lo = node.lo.clone();
                            let mut hi = node.hi.clone();
                            lo[i] = fix;
                            hi[i] = fix;
                            heap.push(Node { bound: node.bound, seq, lo, hi });
                            seq += 1;
                        }
                        continue;
                    }
                    None => continue,
                }
            }
            NodeOutcome::Error(msg) => return Err(OrchestrateError::SolverStalled(msg)),
        };
        if let Some((_, best)) = &incumbent {
            if objective >= best - gap_tol * best.abs().max(1.0) {
                continue;
            }
        }
        // Rounding heuristic once, at the first solved node.
        if !rounded_once {
            rounded_once = true;
            let guess = DMatrix::from_fn(k, l, |ki, li| xr[rho_index(ki, li, l)] > 0.5);
            if !small_cell || (0..k).all(|ki| (0..l).filter(|&li| guess[(ki, li)]).count() == 1) {
                consider(evaluate_pattern(inst, &guess), &mut incumbent);
            }
        }
        // Branch on the most fractional activation first; fall back to the
        // most fractional association binary.
        let most_fractional = |range: std::ops::Range<usize>| {
            range
                .map(|i| (i, (xr[i] - 0.5).abs()))
                .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
                .unwrap()
        };
        let (z_idx, z_frac) = most_fractional(kl..m);
        let (x_idx, x_frac) = most_fractional(0..kl);
        let (idx, frac) = if z_frac <= 0.5 - INT_TOL { (z_idx, z_frac) } else { (x_idx, x_frac) };
        if frac > 0.5 - INT_TOL {
            // Integer point: evaluate it exactly (true ceil counts).
            let pattern = DMatrix::from_fn(k, l, |ki, li| xr[rho_index(ki, li, l)] > 0.5);
            consider(evaluate_pattern(inst, &pattern), &mut incumbent);
            continue;
        }
        for fix in [0.0, 1.0] {
            let mut lo = node.lo.clone();
            let mut hi = node.hi.clone();
            lo[idx] = fix;
            hi[idx] = fix;
            heap.push(Node { bound: objective, seq, lo, hi });
            seq += 1;
        }
    }

    let Some((alloc, total)) = incumbent else {
        return Err(OrchestrateError::Infeasible(
            "no binary pattern satisfies the SINR targets within the power budgets".into(),
        ));
    };
    let remaining_bound = heap.iter().map(|n| n.bound).fold(f64::INFINITY, f64::min);
    let gap = if exhausted || remaining_bound >= total {
        0.0
    } else {
        (total - remaining_bound) / total.abs().max(1.0)
    };
    let (sinr, se) = sinr_and_se(&inst.stats, &alloc.rho, &inst.cfg);
    let coeffs = inst.coeffs();
    let bd = breakdown(&alloc, &inst.pp, &coeffs, inst.split)?;
    Ok(OrchestrationResult {
        alloc,
        total_power: total,
        power_breakdown: bd,
        sinr,
        se,
        status: if gap <= gap_tol { ResultStatus::Optimal } else { ResultStatus::Feasible },
        iterations: nodes,
        gap,
        objective_trace: Vec::new(),
    })
}

/// Exhaustive enumeration over all 2^(K*L) association patterns; the test
/// oracle for `solve_exact` at tiny scales.
pub fn enumerate_exact(
    inst: &ProblemInstance,
    small_cell: bool,
) -> Result<(Allocation, f64), OrchestrateError> {
    let (k, l) = (inst.k(), inst.l());
    let kl = k * l;
    assert!(kl <= 20, "enumeration oracle limited to tiny instances");
    let mut best: Option<(Allocation, f64)> = None;
    for mask in 0u64..(1 << kl) {
        let x = DMatrix::from_fn(k, l, |ki, li| mask >> rho_index(ki, li, l) & 1 == 1);
        if small_cell && !(0..k).all(|ki| (0..l).filter(|&li| x[(ki, li)]).count() == 1) {
            continue;
        }
        if let Ok((alloc, total)) = evaluate_pattern(inst, &x) {
            if best.as_ref().is_none_or(|(_, t)| total < *t) {
                best = Some((alloc, total));
            }
        }
    }
    best.ok_or_else(|| OrchestrateError::Infeasible("every pattern infeasible".into()))
}
