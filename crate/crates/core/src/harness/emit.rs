use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::runner::{HarnessError, ResultRecord};

/// CSV column order; `wall_time_ms` is deliberately last so determinism
/// checks can strip it.
pub const CSV_COLUMNS: [&str; 19] = [
    "seed",
    "scheme",
    "split",
    "axis",
    "axis_value",
    "feasible",
    "total_power_w",
    "ru_static_w",
    "transmit_w",
    "ru_processing_w",
    "onu_w",
    "olt_w",
    "gpp_idle_w",
    "gpp_load_w",
    "fixed_w",
    "sum_se",
    "se_90_likely",
    "per_ue_se",
    "iterations",
];

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.9}")).unwrap_or_default()
}

/// Renders records as CSV in the documented column order (plus the trailing
/// wall-time column).
pub fn to_csv_string(records: &[ResultRecord]) -> Result<String, HarnessError> {
    if records.is_empty() {
        return Err(HarnessError::NoRecords);
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    let io_err = |e: csv::Error| HarnessError::Io {
        path: "<csv buffer>".into(),
        source: std::io::Error::other(e),
    };
    let mut header: Vec<&str> = CSV_COLUMNS.to_vec();
    header.push("wall_time_ms");
    w.write_record(&header).map_err(io_err)?;
    for r in records {
        let bd = r.breakdown;
        let row = [
            r.seed.to_string(),
            r.scheme.label(),
            r.split.label().to_string(),
            r.point.axis_label().to_string(),
            format!("{:.9}", r.point.value()),
            r.feasible.to_string(),
            fmt_opt(r.total_power),
            fmt_opt(bd.map(|b| b.ru_static)),
            fmt_opt(bd.map(|b| b.transmit)),
            fmt_opt(bd.map(|b| b.ru_processing)),
            fmt_opt(bd.map(|b| b.onu)),
            fmt_opt(bd.map(|b| b.olt)),
            fmt_opt(bd.map(|b| b.gpp_idle)),
            fmt_opt(bd.map(|b| b.gpp_load)),
            fmt_opt(bd.map(|b| b.fixed)),
            fmt_opt(r.sum_se),
            fmt_opt(r.se_90_likely),
            r.per_ue_se.iter().map(|s| format!("{s:.9}")).collect::<Vec<_>>().join(";"),
            r.iterations.to_string(),
            format!("{:.3}", r.wall_time_ms),
        ];
        w.write_record(&row).map_err(io_err)?;
    }
    let bytes = w.into_inner().map_err(|e| HarnessError::Io {
        path: "<csv buffer>".into(),
        source: std::io::Error::other(e),
    })?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn to_json_string(records: &[ResultRecord]) -> Result<String, HarnessError> {
    if records.is_empty() {
        return Err(HarnessError::NoRecords);
    }
    Ok(serde_json::to_string_pretty(records).expect("records serialize"))
}

/// Aggregate of one (axis point, scheme, split) cell of the sweep, following
/// the averaging protocol: means are over feasible seeds only, and points
/// with feasibility ratio <= 50% are flagged as suppressed for plotting
/// while staying in the raw output.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlotPoint {
    pub axis: String,
    pub axis_value: f64,
    pub scheme: String,
    pub split: String,
    pub count: usize,
    pub feasible_count: usize,
    pub feasibility_ratio: f64,
    pub mean_total_power: Option<f64>,
    pub mean_sum_se: Option<f64>,
    pub suppressed: bool,
}

pub fn plot_points(records: &[ResultRecord]) -> Vec<PlotPoint> {
    let mut cells: BTreeMap<(String, String, String, String), Vec<&ResultRecord>> =
        BTreeMap::new();
    for r in records {
        let key = (
            r.point.axis_label().to_string(),
            // Fixed-width float key keeps ordering deterministic.
            format!("{:018.9}", r.point.value()),
            r.scheme.label(),
            r.split.label().to_string(),
        );
        cells.entry(key).or_default().push(r);
    }
    cells
        .into_iter()
        .map(|((axis, _, scheme, split), rs)| {
            let count = rs.len();
            let feasible: Vec<&&ResultRecord> = rs.iter().filter(|r| r.feasible).collect();
            let ratio = feasible.len() as f64 / count as f64;
            let mean = |f: &dyn Fn(&ResultRecord) -> Option<f64>| {
                if feasible.is_empty() {
                    None
                } else {
                    Some(feasible.iter().filter_map(|r| f(r)).sum::<f64>() / feasible.len() as f64)
                }
            };
            PlotPoint {
                axis,
                axis_value: rs[0].point.value(),
                scheme,
                split,
                count,
                feasible_count: feasible.len(),
                feasibility_ratio: ratio,
                mean_total_power: mean(&|r| r.total_power),
                mean_sum_se: mean(&|r| r.sum_se),
                suppressed: ratio <= 0.5,
            }
        })
        .collect()
}

pub fn to_plotdata_string(records: &[ResultRecord]) -> Result<String, HarnessError> {
    if records.is_empty() {
        return Err(HarnessError::NoRecords);
    }
    let points = plot_points(records);
    let mut out = String::from(
        "axis,axis_value,scheme,split,count,feasible_count,feasibility_ratio,mean_total_power,mean_sum_se,suppressed\n",
    );
    for p in points {
        out.push_str(&format!(
            "{},{:.9},{},{},{},{},{:.6},{},{},{}\n",
            p.axis,
            p.axis_value,
            p.scheme,
            p.split,
            p.count,
            p.feasible_count,
            p.feasibility_ratio,
            fmt_opt(p.mean_total_power),
            fmt_opt(p.mean_sum_se),
            p.suppressed
        ));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmitFormat {
    Csv,
    Json,
    Plotdata,
}

impl EmitFormat {
    pub fn file_name(self) -> &'static str {
        match self {
            EmitFormat::Csv => "results.csv",
            EmitFormat::Json => "results.json",
            EmitFormat::Plotdata => "plotdata.csv",
        }
    }
}

/// Writes the requested artifacts into `out_dir`, returning the created
/// paths.
pub fn emit(
    records: &[ResultRecord],
    formats: &[EmitFormat],
    out_dir: &Path,
) -> Result<Vec<PathBuf>, HarnessError> {
    std::fs::create_dir_all(out_dir).map_err(|e| HarnessError::Io {
        path: out_dir.display().to_string(),
        source: e,
    })?;
    let mut paths = Vec::new();
    for &fmt in formats {
        let body = match fmt {
            EmitFormat::Csv => to_csv_string(records)?,
            EmitFormat::Json => to_json_string(records)?,
            EmitFormat::Plotdata => to_plotdata_string(records)?,
        };
        let path = out_dir.join(fmt.file_name());
        std::fs::write(&path, body).map_err(|e| HarnessError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        paths.push(path);
    }
    Ok(paths)
}
