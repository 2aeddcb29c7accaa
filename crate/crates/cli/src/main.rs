//! `oransim`: run an orchestration experiment sweep and write result
//! artifacts. Exit codes: 0 success, 2 config error, 3 every sweep point
//! failed.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use oransim_core::harness::{
    emit, run_experiment, Accounting, EmitFormat, ExperimentConfig, Scheme, SolverKind, Topology,
};
use oransim_core::powermodel::SplitOption;

#[derive(Parser, Debug)]
#[command(name = "oransim", version, about = "Energy-aware radio/fronthaul/cloud orchestration sweeps")]
struct Args {
    /// Experiment config file (TOML). Defaults come from --preset.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,

    /// Built-in starting point: exact | ccp | large.
    #[arg(long, default_value = "ccp")]
    preset: String,

    /// Seed range `a..b` (half-open) or a single seed.
    #[arg(long)]
    seeds: Option<String>,

    /// Scheme filter, repeatable: topology/accounting, e.g.
    /// cell_free/end_to_end, small_cell/radio_only.
    #[arg(long = "scheme")]
    schemes: Vec<String>,

    /// Functional split, repeatable: 8 | 7.2.
    #[arg(long = "split")]
    splits: Vec<String>,

    /// SE targets in bit/s/Hz (comma-separated list).
    #[arg(long = "se-target", value_delimiter = ',')]
    se_targets: Vec<f64>,

    /// Sum-SE/power trade-off weights (comma-separated list).
    #[arg(long = "lambda", value_delimiter = ',')]
    lambdas: Vec<f64>,

    /// Solver: exact | ccp.
    #[arg(long)]
    solver: Option<String>,

    /// Monte Carlo realizations for channel statistics.
    #[arg(long)]
    mc: Option<usize>,

    /// Output directory for results.csv / results.json / plotdata.csv.
    #[arg(long, default_value = "results")]
    out: PathBuf,

    /// Zero wall-time fields so reruns are byte-identical.
    #[arg(long)]
    deterministic: bool,
}

fn parse_seeds(s: &str) -> Result<Vec<u64>, String> {
    if let Some((a, b)) = s.split_once("..") {
        let a: u64 = a.trim().parse().map_err(|_| format!("bad seed range start {a:?}"))?;
        let b: u64 = b.trim().parse().map_err(|_| format!("bad seed range end {b:?}"))?;
        if a >= b {
            return Err(format!("empty seed range {s:?}"));
        }
        Ok((a..b).collect())
    } else {
        s.trim()
            .parse()
            .map(|v| vec![v])
            .map_err(|_| format!("bad seed {s:?}"))
    }
}

fn parse_scheme(s: &str) -> Result<Scheme, String> {
    let (topo, acct) = s
        .split_once('/')
        .ok_or_else(|| format!("scheme {s:?} must be topology/accounting"))?;
    let topology = match topo {
        "cell_free" => Topology::CellFree,
        "small_cell" => Topology::SmallCell,
        other => return Err(format!("unknown topology {other:?}")),
    };
    let accounting = match acct {
        "end_to_end" => Accounting::EndToEnd,
        "local" => Accounting::LocalCoordination,
        "radio_only" => Accounting::RadioOnly,
        other => return Err(format!("unknown accounting {other:?}")),
    };
    Ok(Scheme { topology, accounting })
}

fn parse_split(s: &str) -> Result<SplitOption, String> {
    match s {
        "8" => Ok(SplitOption::Option8),
        "7.2" => Ok(SplitOption::Option7_2),
        other => Err(format!("unknown split {other:?}, expected 8 or 7.2")),
    }
}

fn build_config(args: &Args) -> Result<ExperimentConfig, String> {
    let mut cfg = match &args.config {
        Some(path) => {
            let body = std::fs::read_to_string(path)
                .map_err(|e| format!("{}: {e}", path.display()))?;
            ExperimentConfig::from_toml_str(&body).map_err(|e| e.to_string())?
        }
        None => ExperimentConfig::preset(&args.preset)
            .ok_or_else(|| format!("unknown preset {:?}", args.preset))?,
    };
    if let Some(seeds) = &args.seeds {
        cfg.seeds = parse_seeds(seeds)?;
    }
    if !args.schemes.is_empty() {
        cfg.schemes = args
            .schemes
            .iter()
            .map(|s| parse_scheme(s))
            .collect::<Result<_, _>>()?;
    }
    if !args.splits.is_empty() {
        cfg.splits = args
            .splits
            .iter()
            .map(|s| parse_split(s))
            .collect::<Result<_, _>>()?;
    }
    if !args.se_targets.is_empty() {
        cfg.se_targets = args.se_targets.clone();
    }
    if !args.lambdas.is_empty() {
        cfg.lambdas = args.lambdas.clone();
        if args.se_targets.is_empty() {
            cfg.se_targets.clear();
        }
    }
    if let Some(solver) = &args.solver {
        cfg.solver = match solver.as_str() {
            "exact" => SolverKind::Exact,
            "ccp" => SolverKind::Ccp,
            other => return Err(format!("unknown solver {other:?}")),
        };
    }
    if let Some(mc) = args.mc {
        cfg.n_mc = mc;
    }
    cfg.deterministic = cfg.deterministic || args.deterministic;
    cfg.validate().map_err(|e| e.to_string())?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let args = Args::parse();
    let cfg = match build_config(&args) {
        Ok(cfg) => cfg,
        Err(msg) => {
            eprintln!("config error: {msg}");
            return ExitCode::from(2);
        }
    };
    let records = match run_experiment(&cfg) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("experiment failed: {e}");
            return ExitCode::from(3);
        }
    };
    let feasible = records.iter().filter(|r| r.feasible).count();
    let out_dir = cfg.out_dir.as_ref().map(PathBuf::from).unwrap_or_else(|| args.out.clone());
    match emit(
        &records,
        &[EmitFormat::Csv, EmitFormat::Json, EmitFormat::Plotdata],
        &out_dir,
    ) {
        Ok(paths) => {
            for p in &paths {
                println!("{}", p.display());
            }
        }
        Err(e) => {
            eprintln!("emit failed: {e}");
            return ExitCode::from(3);
        }
    }
    println!("{feasible}/{} points feasible", records.len());
    if feasible == 0 {
        eprintln!("all sweep points failed");
        return ExitCode::from(3);
    }
    ExitCode::SUCCESS
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_ranges_parse() {
        assert_eq!(parse_seeds("0..3").unwrap(), vec![0, 1, 2]);
        assert_eq!(parse_seeds("7").unwrap(), vec![7]);
        assert!(parse_seeds("5..5").is_err());
        assert!(parse_seeds("x").is_err());
    }

    #[test]
    fn schemes_and_splits_parse() {
        let s = parse_scheme("small_cell/radio_only").unwrap();
        assert_eq!(s.topology, Topology::SmallCell);
        assert_eq!(s.accounting, Accounting::RadioOnly);
        assert!(parse_scheme("mesh/end_to_end").is_err());
        assert_eq!(parse_split("7.2").unwrap(), SplitOption::Option7_2);
        assert!(parse_split("6").is_err());
    }
}
