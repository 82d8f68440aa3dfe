// SPDX-License-Identifier: Apache-2.0

#![allow(dead_code)]

use std::path::PathBuf;

use hlsbench::corpus::load_corpus;
use hlsbench::dse::{DseSpec, ExplorationPolicy};
use hlsbench::engine::{run_benchmark, RunReport, RunSpec};
use hlsbench::gateway::{Gateway, ModelConfig};
use hlsbench::metrics::{dominates, ParetoPoint};
use hlsbench::reports::{AreaSource, PpaRecord};
use hlsbench::toolchain::{AdapterConfig, MockAdapter, ToolchainSettings};

pub const MODEL_ID: &str = "fixture-model";

pub fn fixture(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(rel)
}

pub fn fixture_model() -> ModelConfig {
    ModelConfig {
        temperature: Some(0.8),
        ..ModelConfig::replay(MODEL_ID, fixture("cache"))
    }
}

pub fn fixture_spec(run_id: &str, k: usize) -> RunSpec {
    RunSpec {
        run_id: run_id.into(),
        corpus_path: fixture("corpus"),
        model: fixture_model(),
        k,
        policy: ExplorationPolicy::default(),
        dse_defaults: DseSpec::default(),
        adapter: AdapterConfig::named("mock"),
        toolchain: ToolchainSettings::default(),
    }
}

/// Fixture corpus, replayed responses and the mock adapter, run as
/// `golden` in a fresh directory.
pub fn golden_run(k: usize, jobs: usize) -> (tempfile::TempDir, RunReport) {
    let dir = tempfile::tempdir().unwrap();
    let corpus = load_corpus(&fixture("corpus")).unwrap();
    let gateway = Gateway::replay_only(fixture_model());
    let report = run_benchmark(
        &corpus,
        &gateway,
        &MockAdapter::default(),
        &fixture_spec("golden", k),
        dir.path(),
        jobs,
    )
    .unwrap();
    (dir, report)
}

pub fn ppa(latency_ns: f64, lut: u64, ff: u64, power_mw: f64) -> PpaRecord {
    PpaRecord {
        latency_cycles: (latency_ns / 10.0) as u64,
        clock_ns: Some(10.0),
        latency_ns: Some(latency_ns),
        lut,
        ff,
        dsp: Some(0),
        bram: Some(0),
        area_source: AreaSource::HlsEstimate,
        wns_ns: None,
        fmax_mhz: None,
        power_mw: Some(power_mw),
        power_source: Some("impl_power_report".into()),
        hls_lut: None,
        hls_ff: None,
    }
}

/// O(n^2) dominance filter, sorted by latency then id.
pub fn brute_force_frontier(points: &[ParetoPoint]) -> Vec<String> {
    let obj = |p: &ParetoPoint| [p.latency_ns, p.area, p.power_mw];
    let mut keep: Vec<&ParetoPoint> = points
        .iter()
        .filter(|q| !points.iter().any(|p| dominates(&obj(p), &obj(q))))
        .collect();
    keep.sort_by(|a, b| a.latency_ns.total_cmp(&b.latency_ns).then(a.point_id.cmp(&b.point_id)));
    keep.into_iter().map(|p| p.point_id.clone()).collect()
}
