// SPDX-License-Identifier: Apache-2.0

//! Pass@K, PPA deltas against reference designs, DSE improvement and Pareto
//! frontiers.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::reports::PpaRecord;

/// Improvement (percent) on at least one metric that counts as a DSE win.
pub const DSE_IMPROVEMENT_THRESHOLD_PCT: f64 = 20.0;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("k = {k} outside 1..={max}")]
    KOutOfRange { k: usize, max: usize },
    #[error("pass matrix must be rectangular with K >= 1")]
    NotRectangular,
    #[error("metric {0:?} absent from one of the records")]
    MetricAbsent(DeltaMetric),
    #[error("records share no comparable metric")]
    NoComparableMetric,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PassStage {
    Compilation,
    Simulation,
    Synthesis,
}

impl PassStage {
    pub const ALL: [PassStage; 3] = [PassStage::Compilation, PassStage::Simulation, PassStage::Synthesis];

    pub fn as_str(self) -> &'static str {
        match self {
            PassStage::Compilation => "compilation",
            PassStage::Simulation => "simulation",
            PassStage::Synthesis => "synthesis",
        }
    }
}

/// Per-task pass flags for the K samples of one stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PassMatrix {
    pub stage: PassStage,
    k: usize,
    rows: Vec<Vec<bool>>,
}

impl PassMatrix {
    pub fn new(stage: PassStage, k: usize, rows: Vec<Vec<bool>>) -> Result<Self, MetricsError> {
        if k == 0 || rows.iter().any(|r| r.len() != k) {
            return Err(MetricsError::NotRectangular);
        }
        Ok(PassMatrix { stage, k, rows })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[Vec<bool>] {
        &self.rows
    }

    /// Number of rows with at least one pass among the first `k` samples.
    pub fn pass_count(&self, k: usize) -> Result<usize, MetricsError> {
        if k == 0 || k > self.k {
            return Err(MetricsError::KOutOfRange { k, max: self.k });
        }
        Ok(self.rows.iter().filter(|r| r[..k].iter().any(|&p| p)).count())
    }
}

/// Fraction of tasks where at least one of the first `k` candidates passed.
/// An empty matrix scores 0.
pub fn pass_at_k(m: &PassMatrix, k: usize) -> Result<f64, MetricsError> {
    let count = m.pass_count(k)?;
    if m.n() == 0 {
        return Ok(0.0);
    }
    Ok(count as f64 / m.n() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeltaMetric {
    Lut,
    Ff,
    Power,
    Latency,
}

impl DeltaMetric {
    pub const ALL: [DeltaMetric; 4] = [DeltaMetric::Lut, DeltaMetric::Ff, DeltaMetric::Power, DeltaMetric::Latency];

    pub fn as_str(self) -> &'static str {
        match self {
            DeltaMetric::Lut => "lut",
            DeltaMetric::Ff => "ff",
            DeltaMetric::Power => "power",
            DeltaMetric::Latency => "latency",
        }
    }

    pub fn value(self, rec: &PpaRecord) -> Option<f64> {
        match self {
            DeltaMetric::Lut => Some(rec.lut as f64),
            DeltaMetric::Ff => Some(rec.ff as f64),
            DeltaMetric::Power => rec.power_mw,
            DeltaMetric::Latency => rec.latency_ns,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaRecord {
    pub task_id: String,
    pub metric: DeltaMetric,
    /// `None` when the reference is zero and the generated value is not.
    pub delta_pct: Option<f64>,
}

/// Relative difference `100 * (generated - reference) / reference`.
pub fn relative_delta_pct(generated: f64, reference: f64) -> Option<f64> {
    if reference == 0.0 {
        return (generated == 0.0).then_some(0.0);
    }
    Some(100.0 * (generated - reference) / reference)
}

pub fn ppa_delta(
    task_id: &str,
    generated: &PpaRecord,
    reference: &PpaRecord,
    metric: DeltaMetric,
) -> Result<DeltaRecord, MetricsError> {
    let g = metric.value(generated).ok_or(MetricsError::MetricAbsent(metric))?;
    let r = metric.value(reference).ok_or(MetricsError::MetricAbsent(metric))?;
    Ok(DeltaRecord {
        task_id: task_id.to_string(),
        metric,
        delta_pct: relative_delta_pct(g, r),
    })
}

/// True iff `best` improves on `baseline` by at least `threshold_pct` percent
/// on latency, LUT, FF or power. Metrics missing from either record, or zero
/// in the baseline, are not comparable.
pub fn dse_improved(baseline: &PpaRecord, best: &PpaRecord, threshold_pct: f64) -> Result<bool, MetricsError> {
    let mut compared = false;
    for metric in [DeltaMetric::Latency, DeltaMetric::Lut, DeltaMetric::Ff, DeltaMetric::Power] {
        let (Some(b), Some(x)) = (metric.value(baseline), metric.value(best)) else {
            continue;
        };
        if b <= 0.0 {
            continue;
        }
        compared = true;
        if 100.0 * (b - x) / b >= threshold_pct {
            return Ok(true);
        }
    }
    if compared {
        Ok(false)
    } else {
        Err(MetricsError::NoComparableMetric)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParetoPoint {
    pub point_id: String,
    pub latency_ns: f64,
    /// LUT + FF.
    pub area: f64,
    pub power_mw: f64,
}

impl ParetoPoint {
    fn objectives(&self) -> [f64; 3] {
        [self.latency_ns, self.area, self.power_mw]
    }
}

/// `a` dominates `b`: no worse everywhere, strictly better somewhere.
pub fn dominates(a: &[f64; 3], b: &[f64; 3]) -> bool {
    a.iter().zip(b).all(|(x, y)| x <= y) && a.iter().zip(b).any(|(x, y)| x < y)
}

fn lex_cmp(a: &[f64; 3], b: &[f64; 3]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

/// Non-dominated subset (all objectives minimized), sorted by latency then
/// point id. Identical objective vectors never dominate each other, so
/// duplicates all survive.
pub fn pareto_frontier(points: &[ParetoPoint]) -> Vec<String> {
    // After a lexicographic sort a point can only be dominated by an earlier
    // one, and anything dominated by a dropped point is also dominated by a
    // frontier member, so checking against the running frontier suffices.
    let mut order: Vec<&ParetoPoint> = points.iter().collect();
    order.sort_by(|a, b| lex_cmp(&a.objectives(), &b.objectives()));

    let mut front: Vec<&ParetoPoint> = Vec::new();
    for p in order {
        let obj = p.objectives();
        if !front.iter().any(|f| dominates(&f.objectives(), &obj)) {
            front.push(p);
        }
    }
    front.sort_by(|a, b| {
        a.latency_ns
            .total_cmp(&b.latency_ns)
            .then_with(|| a.point_id.cmp(&b.point_id))
    });
    front.into_iter().map(|p| p.point_id.clone()).collect()
}
