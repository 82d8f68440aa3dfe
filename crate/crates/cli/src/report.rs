// SPDX-License-Identifier: Apache-2.0

//! Metric tables and plot data derived from finished runs.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

use hlsbench::dse::DsePoint;
use hlsbench::engine::{RunReport, RunSummary};

fn pct(rate: f64) -> String {
    format!("{:.2}", rate * 100.0)
}

fn num(v: f64) -> String {
    format!("{v:.4}")
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn write_csv(path: &Path, header: &[&str], rows: Vec<Vec<String>>) -> Result<PathBuf> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(path.to_path_buf())
}

fn pass_at_k_rows(reports: &[RunReport]) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    for r in reports {
        let s = &r.summary;
        for row in &s.pass_at_k {
            for cell in &row.cells {
                rows.push(vec![
                    s.run_id.clone(),
                    s.model_id.clone(),
                    row.stage.as_str().to_string(),
                    cell.k.to_string(),
                    cell.passed.to_string(),
                    cell.total.to_string(),
                    pct(cell.rate),
                ]);
            }
        }
    }
    rows
}

const PASS_HEADER: &[&str] = &["run_id", "model_id", "stage", "k", "passed", "total", "pass_rate_pct"];

/// Metric tables: Pass@K, per-task PPA deltas and per-design bests.
pub fn write_tables(reports: &[RunReport], out: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let mut written = vec![write_csv(&out.join("pass_at_k.csv"), PASS_HEADER, pass_at_k_rows(reports))?];

    let mut deltas = Vec::new();
    let mut best = Vec::new();
    for r in reports {
        let s = &r.summary;
        for d in &s.deltas {
            deltas.push(vec![
                s.run_id.clone(),
                d.k.to_string(),
                d.task_id.clone(),
                d.sample_index.to_string(),
                d.metric.as_str().to_string(),
                num(d.generated),
                num(d.reference),
                opt(d.delta_pct),
            ]);
        }
        for (task, b) in &s.per_design_best {
            best.push(vec![
                s.run_id.clone(),
                task.clone(),
                b.sample_index.to_string(),
                b.point_id.clone(),
                opt(b.latency_ns),
                b.area.to_string(),
                opt(b.power_mw),
                b.dse_improved.map(|v| v.to_string()).unwrap_or_default(),
            ]);
        }
    }
    written.push(write_csv(
        &out.join("deltas.csv"),
        &["run_id", "k", "task_id", "sample_index", "metric", "generated", "reference", "delta_pct"],
        deltas,
    )?);
    written.push(write_csv(
        &out.join("per_design_best.csv"),
        &["run_id", "task_id", "sample_index", "point_id", "latency_ns", "area", "power_mw", "dse_improved"],
        best,
    )?);
    Ok(written)
}

/// Plot-ready series: pass rates, deltas by K, DSE improvement fraction,
/// power per design and Pareto sets.
pub fn write_plots(reports: &[RunReport], out: &Path) -> Result<Vec<PathBuf>> {
    let dir = out.join("plots");
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut written = vec![write_csv(&dir.join("pass_at_k.csv"), PASS_HEADER, pass_at_k_rows(reports))?];

    let baseline = DsePoint::baseline().point_id;
    let (mut delta, mut improvement, mut power, mut pareto) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for r in reports {
        let s = &r.summary;
        for d in &s.deltas {
            delta.push(vec![
                s.run_id.clone(),
                d.task_id.clone(),
                d.metric.as_str().to_string(),
                d.k.to_string(),
                opt(d.delta_pct),
            ]);
        }

        let judged: Vec<bool> = s.per_design_best.values().filter_map(|b| b.dse_improved).collect();
        improvement.push(vec![
            s.run_id.clone(),
            s.model_id.clone(),
            judged.len().to_string(),
            judged.iter().filter(|v| **v).count().to_string(),
            opt(s.dse_improved_fraction),
        ]);

        for task in &r.manifest.task_ids {
            let reference = r
                .references
                .iter()
                .find(|x| &x.task_id == task && x.point_id == baseline)
                .and_then(|x| x.ppa.as_ref())
                .and_then(|p| p.power_mw);
            let best = s.per_design_best.get(task);
            if reference.is_none() && best.is_none() {
                continue;
            }
            power.push(vec![
                s.run_id.clone(),
                task.clone(),
                opt(reference),
                opt(best.and_then(|b| b.power_mw)),
            ]);
        }

        for (task, members) in &s.pareto {
            for m in members {
                pareto.push(vec![
                    s.run_id.clone(),
                    task.clone(),
                    m.sample_index.to_string(),
                    m.point_id.clone(),
                    num(m.latency_ns),
                    m.area.to_string(),
                    num(m.power_mw),
                ]);
            }
        }
    }
    written.push(write_csv(
        &dir.join("delta_by_k.csv"),
        &["run_id", "task_id", "metric", "k", "delta_pct"],
        delta,
    )?);
    written.push(write_csv(
        &dir.join("dse_improvement.csv"),
        &["run_id", "model_id", "designs", "improved", "fraction"],
        improvement,
    )?);
    written.push(write_csv(
        &dir.join("power_per_design.csv"),
        &["run_id", "task_id", "reference_power_mw", "best_power_mw"],
        power,
    )?);
    written.push(write_csv(
        &dir.join("pareto.csv"),
        &["run_id", "task_id", "sample_index", "point_id", "latency_ns", "area", "power_mw"],
        pareto,
    )?);
    Ok(written)
}

#[derive(Serialize)]
struct JsonReport<'a> {
    runs: Vec<&'a RunSummary>,
}

pub fn write_json(reports: &[RunReport], out: &Path) -> Result<PathBuf> {
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let path = out.join("report.json");
    let doc = JsonReport {
        runs: reports.iter().map(|r| &r.summary).collect(),
    };
    let mut body = serde_json::to_string_pretty(&doc)?;
    body.push('\n');
    fs::write(&path, body).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

/// Pass@K table with one column per run.
pub fn pass_table(reports: &[RunReport]) -> String {
    let mut out = String::new();
    let _ = write!(out, "{:<14}{:>6}", "stage", "k");
    for r in reports {
        let _ = write!(out, "  {:>18}", r.summary.run_id);
    }
    out.push('\n');
    let Some(first) = reports.first() else {
        return out;
    };
    for (i, row) in first.summary.pass_at_k.iter().enumerate() {
        for (j, cell) in row.cells.iter().enumerate() {
            let _ = write!(out, "{:<14}{:>6}", row.stage.as_str(), format!("@{}", cell.k));
            for r in reports {
                let value = r
                    .summary
                    .pass_at_k
                    .get(i)
                    .and_then(|row| row.cells.get(j))
                    .filter(|c| c.k == cell.k)
                    .map(|c| format!("{}% ({}/{})", pct(c.rate), c.passed, c.total))
                    .unwrap_or_else(|| "-".into());
                let _ = write!(out, "  {value:>18}");
            }
            out.push('\n');
        }
    }
    out
}
