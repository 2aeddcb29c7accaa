use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::scenario::Scenario;
use super::stats::EffectiveStatistics;
use crate::linalg::CMat;

pub const STATS_SCHEMA: &str = "stats_v1";

#[derive(Debug, Error)]
pub enum SerializeError {
    #[error("unsupported schema version {0:?}, expected {STATS_SCHEMA:?}")]
    BadSchema(String),
    #[error("inconsistent dimensions in serialized data")]
    BadDimensions,
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Row-major complex matrix with interleaved re/im entries.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ComplexMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl ComplexMatrix {
    pub fn from_cmat(m: &CMat) -> Self {
        let mut data = Vec::with_capacity(2 * m.len());
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                data.push(m[(r, c)].re);
                data.push(m[(r, c)].im);
            }
        }
        ComplexMatrix {
            rows: m.nrows(),
            cols: m.ncols(),
            data,
        }
    }

    pub fn to_cmat(&self) -> Result<CMat, SerializeError> {
        if self.data.len() != 2 * self.rows * self.cols {
            return Err(SerializeError::BadDimensions);
        }
        Ok(CMat::from_fn(self.rows, self.cols, |r, c| {
            let i = 2 * (r * self.cols + c);
            Complex64::new(self.data[i], self.data[i + 1])
        }))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RealMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl RealMatrix {
    pub fn from_dmatrix(m: &DMatrix<f64>) -> Self {
        let mut data = Vec::with_capacity(m.len());
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                data.push(m[(r, c)]);
            }
        }
        RealMatrix {
            rows: m.nrows(),
            cols: m.ncols(),
            data,
        }
    }

    pub fn to_dmatrix(&self) -> Result<DMatrix<f64>, SerializeError> {
        if self.data.len() != self.rows * self.cols {
            return Err(SerializeError::BadDimensions);
        }
        Ok(DMatrix::from_fn(self.rows, self.cols, |r, c| {
            self.data[r * self.cols + c]
        }))
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ScenarioRecord {
    pub oru_positions: Vec<[f64; 2]>,
    pub ue_positions: Vec<[f64; 2]>,
    pub beta: RealMatrix,
    pub r: Vec<Vec<ComplexMatrix>>,
    pub n_antennas: usize,
}

/// On-disk form of a scenario plus its hardened statistics; lets optimizer
/// runs skip the Monte Carlo stage when inputs are unchanged.
#[derive(Debug, Serialize, Deserialize)]
pub struct StatsRecord {
    pub schema: String,
    pub scenario: ScenarioRecord,
    pub b: RealMatrix,
    pub b_stderr: RealMatrix,
    pub c: Vec<Vec<ComplexMatrix>>,
    pub n_mc: usize,
    pub self_cov_min_eig_ratio: Vec<f64>,
    pub max_imag_t_stat: f64,
}

pub fn to_record(scenario: &Scenario, stats: &EffectiveStatistics) -> StatsRecord {
    StatsRecord {
        schema: STATS_SCHEMA.to_string(),
        scenario: ScenarioRecord {
            oru_positions: scenario.oru_positions.clone(),
            ue_positions: scenario.ue_positions.clone(),
            beta: RealMatrix::from_dmatrix(&scenario.beta),
            r: scenario
                .r
                .iter()
                .map(|row| row.iter().map(ComplexMatrix::from_cmat).collect())
                .collect(),
            n_antennas: scenario.n_antennas,
        },
        b: RealMatrix::from_dmatrix(&stats.b),
        b_stderr: RealMatrix::from_dmatrix(&stats.b_stderr),
        c: stats
            .c
            .iter()
            .map(|row| row.iter().map(ComplexMatrix::from_cmat).collect())
            .collect(),
        n_mc: stats.n_mc,
        self_cov_min_eig_ratio: stats.self_cov_min_eig_ratio.clone(),
        max_imag_t_stat: stats.max_imag_t_stat,
    }
}

pub fn from_record(record: &StatsRecord) -> Result<(Scenario, EffectiveStatistics), SerializeError> {
    if record.schema != STATS_SCHEMA {
        return Err(SerializeError::BadSchema(record.schema.clone()));
    }
    let scenario = Scenario {
        oru_positions: record.scenario.oru_positions.clone(),
        ue_positions: record.scenario.ue_positions.clone(),
        beta: record.scenario.beta.to_dmatrix()?,
        r: record
            .scenario
            .r
            .iter()
            .map(|row| row.iter().map(|m| m.to_cmat()).collect())
            .collect::<Result<_, _>>()?,
        n_antennas: record.scenario.n_antennas,
    };
    let stats = EffectiveStatistics {
        b: record.b.to_dmatrix()?,
        b_stderr: record.b_stderr.to_dmatrix()?,
        c: record
            .c
            .iter()
            .map(|row| row.iter().map(|m| m.to_cmat()).collect())
            .collect::<Result<_, _>>()?,
        n_mc: record.n_mc,
        self_cov_min_eig_ratio: record.self_cov_min_eig_ratio.clone(),
        max_imag_t_stat: record.max_imag_t_stat,
    };
    if stats.b.shape() != stats.b_stderr.shape()
        || stats.c.len() != stats.b.nrows()
        || scenario.beta.shape() != stats.b.shape()
    {
        return Err(SerializeError::BadDimensions);
    }
    Ok((scenario, stats))
}

pub fn to_json(scenario: &Scenario, stats: &EffectiveStatistics) -> Result<String, SerializeError> {
    Ok(serde_json::to_string(&to_record(scenario, stats))?)
}

pub fn from_json(json: &str) -> Result<(Scenario, EffectiveStatistics), SerializeError> {
    let record: StatsRecord = serde_json::from_str(json)?;
    from_record(&record)
}
