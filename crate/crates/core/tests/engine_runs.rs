// SPDX-License-Identifier: Apache-2.0

mod common;

use std::fs;

use hlsbench::corpus::{load_corpus, Corpus};
use hlsbench::dse::DsePoint;
use hlsbench::engine::{
    load_report, resume_run, run_benchmark, EngineError, SkipReason, RECORDS_FILE, RUN_FILE, SUMMARY_FILE,
};
use hlsbench::gateway::{ExtractionStatus, Gateway, ModelConfig};
use hlsbench::metrics::PassStage;
use hlsbench::toolchain::{MockAdapter, StageId, StageStatus};

use common::{fixture, fixture_model, fixture_spec, golden_run};

fn single_task_corpus() -> Corpus {
    let mut corpus = load_corpus(&fixture("corpus")).unwrap();
    corpus.tasks.truncate(1);
    corpus.tasks[0].dse_spec = None;
    corpus
}

#[test]
fn minimal_run_has_one_record() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = single_task_corpus();
    let mut spec = fixture_spec("minimal", 1);
    spec.corpus_path = dir.path().join("unused");
    let report = run_benchmark(
        &corpus,
        &Gateway::replay_only(fixture_model()),
        &MockAdapter::default(),
        &spec,
        dir.path(),
        1,
    )
    .unwrap();
    assert_eq!(report.records.len(), 1);
    assert!(report.records[0].point_id == DsePoint::baseline().point_id);
    assert_eq!(report.references.len(), 1);
}

#[test]
fn golden_run_contents() {
    let (_dir, report) = golden_run(2, 4);
    let s = &report.summary;

    // no record loss: extracted candidates x points, plus explicit skips
    assert_eq!(s.records, 19 * 4);
    assert_eq!(s.skips, 1);
    assert_eq!(s.extraction_failures, 1);
    assert_eq!(report.skips[0].task_id, "design_004");
    assert_eq!(
        report.skips[0].reason,
        SkipReason::Extraction {
            status: ExtractionStatus::SignatureMissing
        }
    );

    // hand-counted from the fixture responses
    let counts = |stage: PassStage| -> Vec<usize> {
        let row = s.pass_at_k.iter().find(|r| r.stage == stage).unwrap();
        row.cells.iter().map(|c| c.passed).collect()
    };
    assert_eq!(counts(PassStage::Compilation), vec![7, 9]);
    assert_eq!(counts(PassStage::Simulation), vec![6, 8]);
    assert_eq!(counts(PassStage::Synthesis), vec![5, 8]);

    // gating holds record by record
    for r in &report.records {
        let statuses: Vec<StageStatus> = StageId::ALL.iter().map(|st| r.status(*st)).collect();
        if let Some(first) = statuses.iter().position(|st| *st != StageStatus::Pass) {
            assert!(statuses[first + 1..].iter().all(|st| *st == StageStatus::NotRun), "{r:?}");
        }
        assert_eq!(r.ppa.is_some(), r.passed(StageId::Synth));
    }

    // bests exist in the records and passed synthesis
    for (task, best) in &s.per_design_best {
        let rec = report
            .records
            .iter()
            .find(|r| &r.task_id == task && r.sample_index == best.sample_index && r.point_id == best.point_id)
            .unwrap();
        assert!(rec.passed(StageId::Synth));
    }

    // design_001 sample 1: 64 cycles, unroll 2 and II=1 gives 32 cycles at
    // 10 ns; lut 380 * 2, ff 240 * 2
    let best = &s.per_design_best["design_001"];
    assert_eq!(best.sample_index, 1);
    assert_eq!(best.latency_ns, Some(320.0));
    assert_eq!(best.area, 760 + 480);
    assert_eq!(best.dse_improved, Some(true));

    // design_009 only sweeps a 10% clock change and partitioning
    assert_eq!(s.per_design_best["design_009"].dse_improved, Some(false));
    assert_eq!(s.dse_improved_fraction, Some(7.0 / 8.0));

    // design_001 pass@1 uses sample 0: lut 500 against the reference's 400
    let lut_k1 = s
        .deltas
        .iter()
        .find(|d| d.task_id == "design_001" && d.k == 1 && d.metric.as_str() == "lut")
        .unwrap();
    assert_eq!(lut_k1.delta_pct, Some(25.0));

    // design_006 sample 0 misses timing at 10 ns (min period 11 ns)
    let r = report
        .records
        .iter()
        .find(|r| r.task_id == "design_006" && r.sample_index == 0)
        .unwrap();
    assert_eq!(r.status(StageId::Impl), StageStatus::Fail);
    assert!(r.ppa.is_some());
}

#[test]
fn resume_of_finished_run_is_a_noop() {
    let (dir, report) = golden_run(2, 2);
    let before = fs::read(dir.path().join("golden").join(SUMMARY_FILE)).unwrap();
    let records = fs::read(dir.path().join("golden").join(RECORDS_FILE)).unwrap();
    let again = resume_run(dir.path(), "golden", 2).unwrap();
    assert_eq!(again.summary, report.summary);
    assert_eq!(fs::read(dir.path().join("golden").join(SUMMARY_FILE)).unwrap(), before);
    assert_eq!(fs::read(dir.path().join("golden").join(RECORDS_FILE)).unwrap(), records);
}

#[test]
fn resume_errors() {
    let (dir, _) = golden_run(1, 2);
    assert!(matches!(
        resume_run(dir.path(), "nope", 1),
        Err(EngineError::UnknownRun(_))
    ));
    fs::remove_file(dir.path().join("golden").join(RUN_FILE)).unwrap();
    assert!(matches!(
        resume_run(dir.path(), "golden", 1),
        Err(EngineError::CorruptState(_))
    ));
}

#[test]
fn fresh_run_refuses_existing_id() {
    let (dir, _) = golden_run(1, 2);
    let corpus = load_corpus(&fixture("corpus")).unwrap();
    let err = run_benchmark(
        &corpus,
        &Gateway::replay_only(fixture_model()),
        &MockAdapter::default(),
        &fixture_spec("golden", 1),
        dir.path(),
        1,
    )
    .unwrap_err();
    assert!(matches!(err, EngineError::Config(_)));
}

#[test]
fn cache_miss_becomes_generation_skip() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = single_task_corpus();
    let model = ModelConfig {
        temperature: Some(0.8),
        ..ModelConfig::replay("unrecorded-model", fixture("cache"))
    };
    let mut spec = fixture_spec("miss", 2);
    spec.model = model.clone();
    let report = run_benchmark(
        &corpus,
        &Gateway::replay_only(model),
        &MockAdapter::default(),
        &spec,
        dir.path(),
        1,
    )
    .unwrap();
    assert!(report.records.is_empty());
    assert_eq!(report.skips.len(), 2);
    assert!(matches!(report.skips[0].reason, SkipReason::Generation { .. }));
    assert_eq!(report.summary.generation_failures, vec!["design_001".to_string()]);
    // the reference design is still evaluated
    assert_eq!(report.references.len(), 1);
}

#[test]
fn load_report_recomputes_summary() {
    let (dir, report) = golden_run(2, 3);
    let loaded = load_report(dir.path(), "golden").unwrap();
    assert_eq!(loaded.summary, report.summary);
    assert_eq!(loaded.records, report.records);
    assert!(matches!(load_report(dir.path(), "missing"), Err(EngineError::UnknownRun(_))));
}

#[test]
fn empty_corpus_gives_empty_report() {
    let dir = tempfile::tempdir().unwrap();
    let corpus_dir = dir.path().join("corpus");
    fs::create_dir_all(&corpus_dir).unwrap();
    let corpus = load_corpus(&corpus_dir).unwrap();
    let mut spec = fixture_spec("empty", 2);
    spec.corpus_path = corpus_dir;
    let report = run_benchmark(
        &corpus,
        &Gateway::replay_only(fixture_model()),
        &MockAdapter::default(),
        &spec,
        &dir.path().join("runs"),
        2,
    )
    .unwrap();
    assert_eq!(report.summary.records, 0);
    assert!(report.summary.pass_at_k.iter().all(|r| r.cells.iter().all(|c| c.rate == 0.0)));
}
