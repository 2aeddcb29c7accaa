use std::collections::hash_map::DefaultHasher;
use std::collections::HashMap;
use std::hash::{Hash, Hasher};
use std::time::Instant;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::orchestrate::{
    account_local_coordination, account_radio_only, ccp_power_min, ccp_sum_se, check_allocation,
    round_robin_map, solve_exact, CcpConfig, OrchestrateError, OrchestrationResult,
    ProblemInstance,
};
use crate::powermodel::{PowerBreakdown, SplitOption};
use crate::sysmodel::{
    assign_pilots, estimate_effective_statistics, generate_scenario, EffectiveStatistics,
    StatsError, StatsOptions,
};

use super::config::{Accounting, ExperimentConfig, Scheme, SolverKind, Topology};

/// The swept quantity a record belongs to: a QoS target (power minimization)
/// or a trade-off weight (joint sum-SE/power).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "axis", content = "value", rename_all = "snake_case")]
pub enum AxisPoint {
    SeTarget(f64),
    Lambda(f64),
}

impl AxisPoint {
    pub fn axis_label(self) -> &'static str {
        match self {
            AxisPoint::SeTarget(_) => "se_target",
            AxisPoint::Lambda(_) => "lambda",
        }
    }

    pub fn value(self) -> f64 {
        match self {
            AxisPoint::SeTarget(v) => v,
            AxisPoint::Lambda(v) => v,
        }
    }
}

/// One solved (or failed) sweep point. Power fields are `None` whenever the
/// point is infeasible.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub seed: u64,
    pub scheme: Scheme,
    pub split: SplitOption,
    pub point: AxisPoint,
    pub feasible: bool,
    pub total_power: Option<f64>,
    pub breakdown: Option<PowerBreakdown>,
    pub sum_se: Option<f64>,
    pub per_ue_se: Vec<f64>,
    /// 10th percentile of the per-UE SEs (the SE 90% of UEs exceed).
    pub se_90_likely: Option<f64>,
    pub iterations: usize,
    /// Reason a point is infeasible or failed; empty otherwise.
    pub note: String,
    pub wall_time_ms: f64,
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] super::config::ConfigValidationError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("scenario generation failed: {0}")]
    Scenario(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("no records to emit")]
    NoRecords,
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] * (1.0 - frac) + sorted[hi] * frac
}

fn stats_cache_key(cfg: &ExperimentConfig, seed: u64) -> u64 {
    // The estimate depends only on the scenario draw and the radio config.
    let blob = serde_json::json!({
        "l": cfg.l,
        "k": cfg.k,
        "n_mc": cfg.n_mc,
        "system": cfg.system,
        "scenario": cfg.scenario,
        "seed": seed,
    });
    let mut h = DefaultHasher::new();
    blob.to_string().hash(&mut h);
    h.finish()
}

/// Strongest-gain single-association benchmark: each UE is pinned to the
/// O-RU with the largest effective gain, then powers are re-balanced
/// exactly. Used for small-cell points at scales where branch and bound is
/// out of budget.
fn small_cell_greedy(inst: &ProblemInstance) -> Result<OrchestrationResult, OrchestrateError> {
    let (k, l) = (inst.k(), inst.l());
    let mut x = DMatrix::from_element(k, l, false);
    for ki in 0..k {
        let best = (0..l)
            .max_by(|&a, &b| inst.stats.b[(ki, a)].total_cmp(&inst.stats.b[(ki, b)]))
            .expect("at least one O-RU");
        x[(ki, best)] = true;
    }
    let (alloc, total) = crate::orchestrate::exact::evaluate_pattern(inst, &x)?;
    let bd = crate::powermodel::breakdown(&alloc, &inst.pp, &inst.coeffs(), inst.split)?;
    let (sinr, se) = crate::sysmodel::sinr_and_se(&inst.stats, &alloc.rho, &inst.cfg);
    debug_assert!((bd.total() - total).abs() < 1e-9);
    Ok(OrchestrationResult {
        alloc,
        total_power: total,
        power_breakdown: bd,
        sinr,
        se,
        status: crate::orchestrate::ResultStatus::Feasible,
        iterations: 1,
        gap: 0.0,
        objective_trace: Vec::new(),
    })
}

fn solve_point(
    inst: &ProblemInstance,
    solver: SolverKind,
    topology: Topology,
    point: AxisPoint,
) -> Result<OrchestrationResult, OrchestrateError> {
    match point {
        AxisPoint::Lambda(lambda) => {
            let ccp = CcpConfig::defaults(inst.cfg.p_max);
            ccp_sum_se(inst, lambda, &ccp)
        }
        AxisPoint::SeTarget(_) => match (solver, topology) {
            (SolverKind::Exact, t) => solve_exact(inst, t == Topology::SmallCell, 1e-6),
            (SolverKind::Ccp, Topology::CellFree) => {
                ccp_power_min(inst, &CcpConfig::defaults(inst.cfg.p_max))
            }
            (SolverKind::Ccp, Topology::SmallCell) => small_cell_greedy(inst),
        },
    }
}

fn account(
    inst: &ProblemInstance,
    res: &OrchestrationResult,
    accounting: Accounting,
) -> Result<PowerBreakdown, OrchestrateError> {
    match accounting {
        Accounting::EndToEnd => Ok(res.power_breakdown),
        Accounting::LocalCoordination => {
            let map = round_robin_map(inst.l(), inst.w_max());
            account_local_coordination(inst, &res.alloc, &map)
        }
        Accounting::RadioOnly => {
            let map = round_robin_map(inst.l(), inst.w_max());
            account_radio_only(inst, &res.alloc, &map, None)
        }
    }
}

fn record_from_result(
    inst: &ProblemInstance,
    res: &OrchestrationResult,
    seed: u64,
    scheme: Scheme,
    split: SplitOption,
    point: AxisPoint,
) -> ResultRecord {
    let (breakdown, note) = match account(inst, res, scheme.accounting) {
        Ok(bd) => (Some(bd), String::new()),
        Err(e) => (None, format!("accounting failed: {e}")),
    };
    // QoS points must also survive the full constraint audit.
    let checked = if matches!(point, AxisPoint::SeTarget(_)) {
        let report = check_allocation(inst, &res.alloc);
        if report.pass() {
            Ok(())
        } else {
            Err(format!("constraint audit failed (worst violation {:.3e})", report.worst()))
        }
    } else {
        Ok(())
    };
    match (breakdown, checked) {
        (Some(bd), Ok(())) => {
            let mut sorted = res.se.clone();
            sorted.sort_by(f64::total_cmp);
            ResultRecord {
                seed,
                scheme,
                split,
                point,
                feasible: true,
                total_power: Some(bd.total()),
                breakdown: Some(bd),
                sum_se: Some(res.se.iter().sum()),
                per_ue_se: res.se.clone(),
                se_90_likely: Some(quantile(&sorted, 0.1)),
                iterations: res.iterations,
                note: String::new(),
                wall_time_ms: 0.0,
            }
        }
        (_, checked) => infeasible_record(
            seed,
            scheme,
            split,
            point,
            &checked.err().unwrap_or_else(|| note.clone()),
        ),
    }
}

fn infeasible_record(
    seed: u64,
    scheme: Scheme,
    split: SplitOption,
    point: AxisPoint,
    note: &str,
) -> ResultRecord {
    ResultRecord {
        seed,
        scheme,
        split,
        point,
        feasible: false,
        total_power: None,
        breakdown: None,
        sum_se: None,
        per_ue_se: Vec::new(),
        se_90_likely: None,
        iterations: 0,
        note: note.to_string(),
        wall_time_ms: 0.0,
    }
}

/// Runs the full sweep: per seed, build the scenario and channel statistics
/// once, then solve every (split, axis point, scheme) combination. Solve
/// failures become infeasible records; they never abort the sweep.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<ResultRecord>, HarnessError> {
    cfg.validate()?;
    let mut stats_cache: HashMap<u64, EffectiveStatistics> = HashMap::new();
    let mut records = Vec::new();

    for &seed in &cfg.seeds {
        let key = stats_cache_key(cfg, seed);
        if !stats_cache.contains_key(&key) {
            let scenario = generate_scenario(&cfg.system, cfg.l, cfg.k, seed, &cfg.scenario)
                .map_err(|e| HarnessError::Scenario(e.to_string()))?;
            let pilots = assign_pilots(&scenario, cfg.system.tau_p);
            let opts = StatsOptions { n_mc: cfg.n_mc, ..StatsOptions::default() };
            let stats =
                estimate_effective_statistics(&scenario, &pilots, &cfg.system, seed, &opts)?;
            stats_cache.insert(key, stats);
        }
        let stats = &stats_cache[&key];

        for &split in &cfg.splits {
            let mut points: Vec<AxisPoint> =
                cfg.se_targets.iter().map(|&t| AxisPoint::SeTarget(t)).collect();
            points.extend(cfg.lambdas.iter().map(|&l| AxisPoint::Lambda(l)));

            for point in points {
                // Joint sum-SE/power points have no small-cell variant.
                let schemes: Vec<Scheme> = cfg
                    .schemes
                    .iter()
                    .copied()
                    .filter(|s| {
                        matches!(point, AxisPoint::SeTarget(_))
                            || s.topology == Topology::CellFree
                    })
                    .collect();
                if schemes.is_empty() {
                    continue;
                }
                let gamma = match point {
                    AxisPoint::SeTarget(t) => {
                        ProblemInstance::gamma_from_se(&cfg.system, t, cfg.k)
                    }
                    AxisPoint::Lambda(_) => vec![0.0; cfg.k],
                };
                let inst = match ProblemInstance::new(
                    stats.clone(),
                    cfg.system.clone(),
                    cfg.power.clone(),
                    cfg.gops,
                    cfg.fronthaul.clone(),
                    split,
                    gamma,
                ) {
                    Ok(i) => i,
                    Err(e) => {
                        for s in schemes {
                            records.push(infeasible_record(seed, s, split, point, &e.to_string()));
                        }
                        continue;
                    }
                };

                // One solve per topology; accounting reuses the allocation.
                let mut by_topology: HashMap<Topology, Result<OrchestrationResult, String>> =
                    HashMap::new();
                let mut timings: HashMap<Topology, f64> = HashMap::new();
                for topology in [Topology::CellFree, Topology::SmallCell] {
                    if !schemes.iter().any(|s| s.topology == topology) {
                        continue;
                    }
                    let start = Instant::now();
                    let solved = solve_point(&inst, cfg.solver, topology, point)
                        .map_err(|e| e.to_string());
                    by_topology.insert(topology, solved);
                    timings.insert(topology, start.elapsed().as_secs_f64() * 1e3);
                }
                // A single-association allocation is also cell-free feasible:
                // if the restricted solve beats the heuristic cell-free one,
                // adopt it there too.
                if let (Some(Ok(sc)), Some(Ok(cf))) = (
                    by_topology.get(&Topology::SmallCell),
                    by_topology.get(&Topology::CellFree),
                ) {
                    if sc.total_power < cf.total_power {
                        let better = sc.clone();
                        by_topology.insert(Topology::CellFree, Ok(better));
                    }
                }

                for scheme in schemes {
                    let mut rec = match &by_topology[&scheme.topology] {
                        Ok(res) => record_from_result(&inst, res, seed, scheme, split, point),
                        Err(msg) => infeasible_record(seed, scheme, split, point, msg),
                    };
                    if !cfg.deterministic {
                        rec.wall_time_ms = timings.get(&scheme.topology).copied().unwrap_or(0.0);
                    }
                    records.push(rec);
                }
            }
        }
    }

    // Order-independent collection; fix a deterministic emission order.
    records.sort_by(|a, b| {
        (a.seed, a.split.label(), a.point.axis_label(), a.point.value())
            .partial_cmp(&(b.seed, b.split.label(), b.point.axis_label(), b.point.value()))
            .unwrap()
            .then_with(|| a.scheme.label().cmp(&b.scheme.label()))
    });
    Ok(records)
}
