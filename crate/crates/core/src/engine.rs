// SPDX-License-Identifier: Apache-2.0

//! Benchmark orchestration.
//!
//! A run lives in `runs/<run_id>/`:
//!
//! * `run.json` holds the configuration and timestamps,
//! * `records.jsonl` is an append-only journal, rewritten in canonical
//!   order once the run finishes,
//! * `summary.json` holds the aggregate metrics and never contains
//!   timestamps or wall times,
//! * `work/<task>/sample_<k>/<point_id>/` are the tool workspaces.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fs::{self, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::mpsc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{load_corpus, validate_task, BenchmarkTask, Corpus, CorpusError, Severity};
use crate::dse::{expand, parse_dse_file, DseError, DsePoint, DseSpec, ExplorationPolicy};
use crate::gateway::{Candidate, ExtractionStatus, Gateway, GatewayError, ModelConfig};
use crate::metrics::{
    dse_improved, pareto_frontier, pass_at_k, ppa_delta, DeltaMetric, MetricsError, ParetoPoint, PassMatrix,
    PassStage, DSE_IMPROVEMENT_THRESHOLD_PCT,
};
use crate::reports::{merge_ppa, parse_hls_synth_report, parse_impl_report, ImplReportTexts, PpaRecord};
use crate::toolchain::{
    build_adapter, prepare_workspace, run_stage, Adapter, AdapterConfig, StageId, StageRecord, StageStatus,
    ToolchainError, ToolchainSettings,
};

pub const RECORD_SCHEMA_VERSION: u32 = 1;
pub const RUN_FILE: &str = "run.json";
pub const RECORDS_FILE: &str = "records.jsonl";
pub const SUMMARY_FILE: &str = "summary.json";
pub const WORK_DIR: &str = "work";

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error("task {task}: {source}")]
    Dse {
        task: String,
        #[source]
        source: DseError,
    },
    #[error(transparent)]
    Toolchain(#[from] ToolchainError),
    #[error("unknown run `{0}`")]
    UnknownRun(String),
    #[error("corrupt run state: {0}")]
    CorruptState(String),
    #[error("io error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> EngineError + '_ {
    move |source| EngineError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Outcome of one candidate (or the reference design) at one DSE point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationRecord {
    pub task_id: String,
    /// Always `0` for reference records.
    pub sample_index: usize,
    pub point_id: String,
    pub point: DsePoint,
    pub stage_records: BTreeMap<StageId, StageRecord>,
    /// Present only when synthesis passed and its report parsed.
    pub ppa: Option<PpaRecord>,
    /// Workspace directory relative to the run's `work/` directory.
    pub workspace: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl EvaluationRecord {
    pub fn status(&self, stage: StageId) -> StageStatus {
        self.stage_records
            .get(&stage)
            .map_or(StageStatus::NotRun, |r| r.status)
    }

    pub fn passed(&self, stage: StageId) -> bool {
        self.status(stage) == StageStatus::Pass
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SkipReason {
    Extraction { status: ExtractionStatus },
    Generation { message: String },
}

/// A candidate that never reached the toolchain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkipEntry {
    pub task_id: String,
    pub sample_index: usize,
    pub reason: SkipReason,
}

/// One line of `records.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum JournalEntry {
    Record(EvaluationRecord),
    /// The task's reference design at the baseline point.
    Reference(EvaluationRecord),
    Skip(SkipEntry),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
struct EntryKey(String, u8, usize, String);

impl JournalEntry {
    fn key(&self) -> EntryKey {
        match self {
            JournalEntry::Reference(r) => EntryKey(r.task_id.clone(), 0, 0, r.point_id.clone()),
            JournalEntry::Record(r) => EntryKey(r.task_id.clone(), 1, r.sample_index, r.point_id.clone()),
            JournalEntry::Skip(s) => EntryKey(s.task_id.clone(), 1, s.sample_index, String::new()),
        }
    }
}

/// Everything needed to start a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSpec {
    pub run_id: String,
    pub corpus_path: PathBuf,
    pub model: ModelConfig,
    pub k: usize,
    pub policy: ExplorationPolicy,
    /// Used for tasks without their own `dse.yaml`.
    pub dse_defaults: DseSpec,
    pub adapter: AdapterConfig,
    pub toolchain: ToolchainSettings,
}

/// Contents of `run.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub record_schema: u32,
    #[serde(flatten)]
    pub spec: RunSpec,
    pub task_ids: Vec<String>,
    pub started_at: String,
    pub finished_at: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PassAtKCell {
    pub k: usize,
    pub passed: usize,
    pub total: usize,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PassAtKRow {
    pub stage: PassStage,
    pub cells: Vec<PassAtKCell>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignBest {
    pub sample_index: usize,
    pub point_id: String,
    pub latency_ns: Option<f64>,
    pub area: u64,
    pub power_mw: Option<f64>,
    /// Whether the best point beats the same candidate's baseline point by
    /// the improvement threshold; `None` when the baseline has no PPA.
    pub dse_improved: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaRow {
    pub k: usize,
    pub task_id: String,
    pub sample_index: usize,
    pub metric: DeltaMetric,
    pub generated: f64,
    pub reference: f64,
    pub delta_pct: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParetoMember {
    pub sample_index: usize,
    pub point_id: String,
    pub latency_ns: f64,
    pub area: u64,
    pub power_mw: f64,
}

/// Contents of `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub record_schema: u32,
    pub run_id: String,
    pub model_id: String,
    pub adapter: String,
    pub k: usize,
    pub tasks: usize,
    pub candidates: usize,
    pub extraction_failures: usize,
    pub generation_failures: Vec<String>,
    pub records: usize,
    pub skips: usize,
    /// Records whose stage passed, per stage.
    pub stage_pass_records: BTreeMap<StageId, usize>,
    pub pass_at_k: Vec<PassAtKRow>,
    pub per_design_best: BTreeMap<String, DesignBest>,
    pub dse_improved_threshold_pct: f64,
    pub dse_improved_fraction: Option<f64>,
    /// How `deltas` are computed: `100 * (generated - reference) / reference`.
    pub delta_semantics: String,
    pub deltas: Vec<DeltaRow>,
    pub pareto: BTreeMap<String, Vec<ParetoMember>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub manifest: RunManifest,
    pub records: Vec<EvaluationRecord>,
    pub references: Vec<EvaluationRecord>,
    pub skips: Vec<SkipEntry>,
    pub summary: RunSummary,
}

/// Pass@K columns reported for a run with `k` samples per task.
pub fn pass_k_values(k: usize) -> Vec<usize> {
    let mut ks: Vec<usize> = [1, 5, 10].into_iter().filter(|v| *v <= k).collect();
    if k > 0 && !ks.contains(&k) {
        ks.push(k);
    }
    ks
}

/// The DSE points a task is evaluated at: its own `dse.yaml` (with an
/// optional policy block) or the run defaults, plus the baseline point.
pub fn task_points(
    task: &BenchmarkTask,
    defaults: &DseSpec,
    policy: &ExplorationPolicy,
) -> Result<Vec<DsePoint>, EngineError> {
    let (spec, local_policy) = match &task.dse_spec {
        Some(text) => parse_dse_file(text).map_err(|source| EngineError::Dse {
            task: task.id.clone(),
            source,
        })?,
        None => (defaults.clone(), None),
    };
    let mut points = expand(&spec, local_policy.as_ref().unwrap_or(policy));
    let baseline = DsePoint::baseline();
    if !points.iter().any(|p| p.point_id == baseline.point_id) {
        points.push(baseline);
    }
    Ok(points)
}

fn read_reports(adapter: &dyn Adapter, ws_dir: &Path, impl_passed: bool, clock: f64) -> Result<PpaRecord, String> {
    let format = adapter
        .report_format()
        .ok_or_else(|| format!("adapter {} reports are not parsed", adapter.descriptor().name))?;
    let layout = adapter.report_layout();
    let read = |rel: &Path| fs::read_to_string(ws_dir.join(rel));
    let synth_text = read(&layout.synth).map_err(|e| format!("{}: {e}", layout.synth.display()))?;
    let synth = parse_hls_synth_report(&synth_text, format).map_err(|e| format!("synthesis report: {e}"))?;
    let imp = if impl_passed {
        let texts = ImplReportTexts {
            timing: read(&layout.timing).unwrap_or_default(),
            power: read(&layout.power).unwrap_or_default(),
            util: read(&layout.util).unwrap_or_default(),
        };
        Some(parse_impl_report(&texts, format, clock).map_err(|e| format!("implementation reports: {e}"))?)
    } else {
        None
    };
    merge_ppa(&synth, imp.as_ref()).map_err(|e| e.to_string())
}

/// Stage records, parsed PPA and an optional note for one point.
pub type PointOutcome = (BTreeMap<StageId, StageRecord>, Option<PpaRecord>, Option<String>);

/// Drive one candidate at one point through the stage ladder in `ws_dir`.
pub fn evaluate_point(
    task: &BenchmarkTask,
    candidate: &Candidate,
    point: &DsePoint,
    adapter: &dyn Adapter,
    settings: &ToolchainSettings,
    ws_dir: &Path,
) -> Result<PointOutcome, EngineError> {
    let ws = prepare_workspace(ws_dir, task, candidate, point, settings, adapter)?;
    let mut stages = BTreeMap::new();
    let mut blocked = false;
    for stage in StageId::ALL {
        let record = if blocked {
            StageRecord::not_run(stage)
        } else {
            run_stage(adapter, &ws, stage, settings.timeouts.for_stage(stage))?
        };
        blocked |= record.status != StageStatus::Pass;
        stages.insert(stage, record);
    }

    let synth_ok = stages[&StageId::Synth].status == StageStatus::Pass;
    let impl_ok = stages[&StageId::Impl].status == StageStatus::Pass;
    let (ppa, note) = if synth_ok {
        match read_reports(adapter, ws_dir, impl_ok, point.clock_period_ns) {
            Ok(ppa) => (Some(ppa), None),
            Err(msg) => (None, Some(msg)),
        }
    } else {
        (None, None)
    };
    Ok((stages, ppa, note))
}

fn sample_dir(sample_index: Option<usize>) -> String {
    match sample_index {
        Some(s) => format!("sample_{s}"),
        None => "reference".into(),
    }
}

fn evaluate_unit(
    task: &BenchmarkTask,
    candidate: &Candidate,
    sample: Option<usize>,
    point: &DsePoint,
    adapter: &dyn Adapter,
    settings: &ToolchainSettings,
    work_root: &Path,
) -> Result<EvaluationRecord, EngineError> {
    let rel = format!("{}/{}/{}", task.id, sample_dir(sample), point.point_id);
    let (stage_records, ppa, note) = evaluate_point(task, candidate, point, adapter, settings, &work_root.join(&rel))?;
    Ok(EvaluationRecord {
        task_id: task.id.clone(),
        sample_index: sample.unwrap_or(0),
        point_id: point.point_id.clone(),
        point: point.clone(),
        stage_records,
        ppa,
        workspace: rel,
        note,
    })
}

/// Evaluate `candidate` at every point. Candidates whose extraction failed
/// produce no records.
pub fn evaluate_candidate(
    task: &BenchmarkTask,
    candidate: &Candidate,
    points: &[DsePoint],
    adapter: &dyn Adapter,
    settings: &ToolchainSettings,
    work_root: &Path,
) -> Result<Vec<EvaluationRecord>, EngineError> {
    if candidate.extraction_status != ExtractionStatus::Ok {
        return Ok(Vec::new());
    }
    if points.is_empty() {
        return Err(EngineError::Config(format!("task {}: no DSE points", task.id)));
    }
    points
        .iter()
        .map(|p| evaluate_unit(task, candidate, Some(candidate.sample_index), p, adapter, settings, work_root))
        .collect()
}

fn reference_candidate(task: &BenchmarkTask) -> Candidate {
    Candidate {
        task_id: task.id.clone(),
        sample_index: 0,
        raw_response: String::new(),
        source: Some(task.reference_source.clone()),
        extraction_status: ExtractionStatus::Ok,
    }
}

/// Read the journal. A torn final line (a crash mid-write) is dropped and,
/// with `repair`, truncated away; any other unparsable line is corruption.
fn load_journal(path: &Path, repair: bool) -> Result<Vec<JournalEntry>, EngineError> {
    let bytes = match fs::read(path) {
        Ok(b) => b,
        Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(io_err(path)(e)),
    };
    let complete_len = bytes.iter().rposition(|b| *b == b'\n').map_or(0, |i| i + 1);
    let mut entries = Vec::new();
    for (n, line) in bytes[..complete_len].split(|b| *b == b'\n').enumerate() {
        if line.iter().all(u8::is_ascii_whitespace) {
            continue;
        }
        let entry = serde_json::from_slice(line)
            .map_err(|e| EngineError::CorruptState(format!("{} line {}: {e}", path.display(), n + 1)))?;
        entries.push(entry);
    }
    let tail = &bytes[complete_len..];
    if !tail.iter().all(u8::is_ascii_whitespace) {
        if let Ok(entry) = serde_json::from_slice::<JournalEntry>(tail) {
            entries.push(entry);
            if repair {
                let mut f = OpenOptions::new().append(true).open(path).map_err(io_err(path))?;
                f.write_all(b"\n").map_err(io_err(path))?;
            }
        } else if repair {
            log::warn!("dropping torn trailing line in {}", path.display());
            let f = OpenOptions::new().write(true).open(path).map_err(io_err(path))?;
            f.set_len(complete_len as u64).map_err(io_err(path))?;
        }
    }
    Ok(entries)
}

fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), EngineError> {
    let dir = path.parent().unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err(dir))?;
    tmp.write_all(contents).map_err(io_err(path))?;
    tmp.persist(path).map_err(|e| io_err(path)(e.error))?;
    Ok(())
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

enum UnitKind {
    Reference,
    Sample(usize),
}

struct Unit<'a> {
    task: &'a BenchmarkTask,
    candidate: Candidate,
    kind: UnitKind,
    point: DsePoint,
}

/// Start a fresh run in `runs_dir/<run_id>`.
pub fn run_benchmark(
    corpus: &Corpus,
    gateway: &Gateway,
    adapter: &dyn Adapter,
    spec: &RunSpec,
    runs_dir: &Path,
    jobs: usize,
) -> Result<RunReport, EngineError> {
    if spec.run_id.is_empty() || spec.run_id.contains(['/', '\\']) || spec.run_id.starts_with('.') {
        return Err(EngineError::Config(format!("bad run id `{}`", spec.run_id)));
    }
    let run_dir = runs_dir.join(&spec.run_id);
    if run_dir.join(RUN_FILE).exists() {
        return Err(EngineError::Config(format!(
            "run `{}` already exists in {}; resume it instead",
            spec.run_id,
            runs_dir.display()
        )));
    }
    fs::create_dir_all(&run_dir).map_err(io_err(&run_dir))?;
    let manifest = RunManifest {
        record_schema: RECORD_SCHEMA_VERSION,
        spec: spec.clone(),
        task_ids: corpus.tasks.iter().map(|t| t.id.clone()).collect(),
        started_at: now(),
        finished_at: None,
    };
    execute(&run_dir, manifest, corpus, gateway, adapter, jobs)
}

/// Continue an interrupted run (or re-finalize a finished one), skipping
/// every unit already in the journal.
pub fn resume_run(runs_dir: &Path, run_id: &str, jobs: usize) -> Result<RunReport, EngineError> {
    let run_dir = runs_dir.join(run_id);
    let manifest = read_manifest(&run_dir, run_id)?;
    let corpus = load_corpus(&manifest.spec.corpus_path)?;
    let gateway = Gateway::from_config(manifest.spec.model.clone()).map_err(|e| EngineError::Config(e.to_string()))?;
    let adapter = build_adapter(&manifest.spec.adapter)?;
    execute(&run_dir, manifest, &corpus, &gateway, adapter.as_ref(), jobs)
}

fn read_manifest(run_dir: &Path, run_id: &str) -> Result<RunManifest, EngineError> {
    if !run_dir.is_dir() {
        return Err(EngineError::UnknownRun(run_id.to_string()));
    }
    let path = run_dir.join(RUN_FILE);
    let text = fs::read_to_string(&path).map_err(|e| EngineError::CorruptState(format!("{}: {e}", path.display())))?;
    let manifest: RunManifest =
        serde_json::from_str(&text).map_err(|e| EngineError::CorruptState(format!("{}: {e}", path.display())))?;
    if manifest.record_schema != RECORD_SCHEMA_VERSION {
        return Err(EngineError::CorruptState(format!(
            "record schema {} is not supported",
            manifest.record_schema
        )));
    }
    Ok(manifest)
}

fn execute(
    run_dir: &Path,
    mut manifest: RunManifest,
    corpus: &Corpus,
    gateway: &Gateway,
    adapter: &dyn Adapter,
    jobs: usize,
) -> Result<RunReport, EngineError> {
    let spec = manifest.spec.clone();
    if jobs == 0 {
        return Err(EngineError::Config("jobs must be at least 1".into()));
    }
    if spec.k == 0 {
        return Err(EngineError::Config("k must be at least 1".into()));
    }
    let corpus_ids: Vec<String> = corpus.tasks.iter().map(|t| t.id.clone()).collect();
    if corpus_ids != manifest.task_ids {
        return Err(EngineError::CorruptState("corpus tasks differ from the recorded run".into()));
    }
    let broken: Vec<String> = corpus
        .tasks
        .iter()
        .filter(|t| validate_task(t).iter().any(|f| f.severity == Severity::Error))
        .map(|t| t.id.clone())
        .collect();
    if !broken.is_empty() {
        return Err(EngineError::Config(format!("corpus has invalid tasks: {}", broken.join(", "))));
    }
    let points: Vec<Vec<DsePoint>> = corpus
        .tasks
        .iter()
        .map(|t| task_points(t, &spec.dse_defaults, &spec.policy))
        .collect::<Result<_, _>>()?;

    let manifest_path = run_dir.join(RUN_FILE);
    let manifest_json = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
    write_atomic(&manifest_path, &manifest_json)?;

    let journal_path = run_dir.join(RECORDS_FILE);
    let done: BTreeSet<EntryKey> = load_journal(&journal_path, true)?.iter().map(JournalEntry::key).collect();

    let mut skips = Vec::new();
    let mut units = Vec::new();
    let baseline = DsePoint::baseline();
    for (task, task_points) in corpus.tasks.iter().zip(&points) {
        let reference = JournalEntry::Reference(placeholder_record(task, 0, &baseline));
        if !done.contains(&reference.key()) {
            units.push(Unit {
                task,
                candidate: reference_candidate(task),
                kind: UnitKind::Reference,
                point: baseline.clone(),
            });
        }

        let candidates = match gateway.sample_candidates(task, spec.k) {
            Ok(c) => c,
            Err(GatewayError::InvalidConfig(msg)) => return Err(EngineError::Config(msg)),
            Err(e) => {
                let message = e.to_string();
                log::warn!("task {}: generation failed: {message}", task.id);
                for sample_index in 0..spec.k {
                    skips.push(JournalEntry::Skip(SkipEntry {
                        task_id: task.id.clone(),
                        sample_index,
                        reason: SkipReason::Generation {
                            message: message.clone(),
                        },
                    }));
                }
                continue;
            }
        };
        for candidate in candidates {
            if candidate.extraction_status != ExtractionStatus::Ok {
                skips.push(JournalEntry::Skip(SkipEntry {
                    task_id: task.id.clone(),
                    sample_index: candidate.sample_index,
                    reason: SkipReason::Extraction {
                        status: candidate.extraction_status,
                    },
                }));
                continue;
            }
            for point in task_points {
                let key = EntryKey(task.id.clone(), 1, candidate.sample_index, point.point_id.clone());
                if !done.contains(&key) {
                    units.push(Unit {
                        task,
                        candidate: candidate.clone(),
                        kind: UnitKind::Sample(candidate.sample_index),
                        point: point.clone(),
                    });
                }
            }
        }
    }
    skips.retain(|s| !done.contains(&s.key()));

    let work_root = run_dir.join(WORK_DIR);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| EngineError::Config(e.to_string()))?;

    let (tx, rx) = mpsc::channel::<Result<JournalEntry, EngineError>>();
    let write_result = std::thread::scope(|scope| {
        let writer = scope.spawn(|| -> Result<(), EngineError> {
            let mut file = OpenOptions::new()
                .create(true)
                .append(true)
                .open(&journal_path)
                .map_err(io_err(&journal_path))?;
            let mut first_error = None;
            for msg in rx {
                match msg {
                    Ok(entry) => {
                        let mut line = serde_json::to_string(&entry).expect("entry serializes");
                        line.push('\n');
                        file.write_all(line.as_bytes()).map_err(io_err(&journal_path))?;
                        file.flush().map_err(io_err(&journal_path))?;
                    }
                    Err(e) => {
                        first_error.get_or_insert(e);
                    }
                }
            }
            first_error.map_or(Ok(()), Err)
        });

        for s in skips {
            tx.send(Ok(s)).expect("writer alive");
        }
        pool.install(|| {
            units.par_iter().for_each_with(tx.clone(), |tx, unit| {
                let sample = match unit.kind {
                    UnitKind::Reference => None,
                    UnitKind::Sample(s) => Some(s),
                };
                let result = evaluate_unit(
                    unit.task,
                    &unit.candidate,
                    sample,
                    &unit.point,
                    adapter,
                    &spec.toolchain,
                    &work_root,
                )
                .map(|rec| match unit.kind {
                    UnitKind::Reference => JournalEntry::Reference(rec),
                    UnitKind::Sample(_) => JournalEntry::Record(rec),
                });
                let _ = tx.send(result);
            });
        });
        drop(tx);
        writer.join().expect("writer thread panicked")
    });
    write_result?;

    let mut entries = load_journal(&journal_path, false)?;
    entries.sort_by_key(JournalEntry::key);
    entries.dedup_by(|a, b| a.key() == b.key());
    let mut canonical = Vec::new();
    for e in &entries {
        serde_json::to_writer(&mut canonical, e).expect("entry serializes");
        canonical.push(b'\n');
    }
    write_atomic(&journal_path, &canonical)?;

    let summary = compute_summary(&manifest, &entries);
    let mut summary_json = serde_json::to_vec_pretty(&summary).expect("summary serializes");
    summary_json.push(b'\n');
    write_atomic(&run_dir.join(SUMMARY_FILE), &summary_json)?;

    manifest.finished_at = Some(now());
    write_atomic(
        &manifest_path,
        &serde_json::to_vec_pretty(&manifest).expect("manifest serializes"),
    )?;

    Ok(assemble(manifest, entries, summary))
}

fn placeholder_record(task: &BenchmarkTask, sample_index: usize, point: &DsePoint) -> EvaluationRecord {
    EvaluationRecord {
        task_id: task.id.clone(),
        sample_index,
        point_id: point.point_id.clone(),
        point: point.clone(),
        stage_records: BTreeMap::new(),
        ppa: None,
        workspace: String::new(),
        note: None,
    }
}

fn assemble(manifest: RunManifest, entries: Vec<JournalEntry>, summary: RunSummary) -> RunReport {
    let mut records = Vec::new();
    let mut references = Vec::new();
    let mut skips = Vec::new();
    for e in entries {
        match e {
            JournalEntry::Record(r) => records.push(r),
            JournalEntry::Reference(r) => references.push(r),
            JournalEntry::Skip(s) => skips.push(s),
        }
    }
    RunReport {
        manifest,
        records,
        references,
        skips,
        summary,
    }
}

/// Load a finished run. The summary is recomputed from the records, so
/// reports depend only on what is on disk.
pub fn load_report(runs_dir: &Path, run_id: &str) -> Result<RunReport, EngineError> {
    let run_dir = runs_dir.join(run_id);
    let manifest = read_manifest(&run_dir, run_id)?;
    if manifest.finished_at.is_none() || !run_dir.join(SUMMARY_FILE).exists() {
        return Err(EngineError::CorruptState(format!("run `{run_id}` did not finish; resume it first")));
    }
    let mut entries = load_journal(&run_dir.join(RECORDS_FILE), false)?;
    entries.sort_by_key(JournalEntry::key);
    let summary = compute_summary(&manifest, &entries);
    Ok(assemble(manifest, entries, summary))
}

fn best_key(r: &EvaluationRecord) -> (f64, u64, f64) {
    let ppa = r.ppa.as_ref().expect("only records with PPA are ranked");
    (
        ppa.latency_ns.unwrap_or(f64::INFINITY),
        ppa.area(),
        ppa.power_mw.unwrap_or(f64::INFINITY),
    )
}

fn cmp_best(a: &EvaluationRecord, b: &EvaluationRecord) -> Ordering {
    let (ka, kb) = (best_key(a), best_key(b));
    ka.0.total_cmp(&kb.0)
        .then(ka.1.cmp(&kb.1))
        .then(ka.2.total_cmp(&kb.2))
        .then(a.sample_index.cmp(&b.sample_index))
        .then(a.point_id.cmp(&b.point_id))
}

fn pass_stage_id(stage: PassStage) -> StageId {
    match stage {
        PassStage::Compilation => StageId::Compile,
        PassStage::Simulation => StageId::CSim,
        PassStage::Synthesis => StageId::Synth,
    }
}

/// Aggregate metrics for a run. Pure function of the manifest and journal.
pub fn compute_summary(manifest: &RunManifest, entries: &[JournalEntry]) -> RunSummary {
    let spec = &manifest.spec;
    let k = spec.k;
    let baseline_id = DsePoint::baseline().point_id;

    let mut by_task: BTreeMap<&str, Vec<&EvaluationRecord>> = BTreeMap::new();
    let mut references: BTreeMap<&str, &EvaluationRecord> = BTreeMap::new();
    let mut extraction_failures = 0;
    let mut generation_failures = BTreeSet::new();
    let mut records = 0;
    let mut skips = 0;
    let mut stage_pass_records: BTreeMap<StageId, usize> = StageId::ALL.iter().map(|s| (*s, 0)).collect();
    for e in entries {
        match e {
            JournalEntry::Record(r) => {
                records += 1;
                for s in StageId::ALL {
                    if r.passed(s) {
                        *stage_pass_records.get_mut(&s).expect("all stages present") += 1;
                    }
                }
                by_task.entry(&r.task_id).or_default().push(r);
            }
            JournalEntry::Reference(r) if r.point_id == baseline_id => {
                references.insert(&r.task_id, r);
            }
            JournalEntry::Reference(_) => {}
            JournalEntry::Skip(s) => {
                skips += 1;
                match s.reason {
                    SkipReason::Extraction { .. } => extraction_failures += 1,
                    SkipReason::Generation { .. } => {
                        generation_failures.insert(s.task_id.clone());
                    }
                }
            }
        }
    }
    let empty = Vec::new();
    let task_records = |id: &str| by_task.get(id).unwrap_or(&empty);

    let ks = pass_k_values(k);
    let pass_at_k_rows = PassStage::ALL
        .iter()
        .map(|&stage| {
            let sid = pass_stage_id(stage);
            let rows: Vec<Vec<bool>> = manifest
                .task_ids
                .iter()
                .map(|id| {
                    let recs = task_records(id);
                    (0..k)
                        .map(|s| recs.iter().any(|r| r.sample_index == s && r.passed(sid)))
                        .collect()
                })
                .collect();
            let matrix = PassMatrix::new(stage, k, rows).expect("rows have k columns");
            let cells = ks
                .iter()
                .map(|&kk| PassAtKCell {
                    k: kk,
                    passed: matrix.pass_count(kk).expect("k in range"),
                    total: matrix.n(),
                    rate: pass_at_k(&matrix, kk).expect("k in range"),
                })
                .collect();
            PassAtKRow { stage, cells }
        })
        .collect();

    let mut per_design_best = BTreeMap::new();
    let mut pareto = BTreeMap::new();
    let mut deltas = Vec::new();
    for id in &manifest.task_ids {
        let recs = task_records(id);
        let with_ppa: Vec<&EvaluationRecord> = recs.iter().copied().filter(|r| r.ppa.is_some()).collect();

        if let Some(best) = with_ppa.iter().copied().min_by(|a, b| cmp_best(a, b)) {
            let ppa = best.ppa.as_ref().expect("filtered");
            let improved = recs
                .iter()
                .find(|r| r.sample_index == best.sample_index && r.point_id == baseline_id)
                .and_then(|r| r.ppa.as_ref())
                .and_then(|base| dse_improved(base, ppa, DSE_IMPROVEMENT_THRESHOLD_PCT).ok());
            per_design_best.insert(
                id.clone(),
                DesignBest {
                    sample_index: best.sample_index,
                    point_id: best.point_id.clone(),
                    latency_ns: ppa.latency_ns,
                    area: ppa.area(),
                    power_mw: ppa.power_mw,
                    dse_improved: improved,
                },
            );
        }

        let candidates: Vec<(ParetoPoint, &EvaluationRecord)> = with_ppa
            .iter()
            .filter_map(|r| {
                let ppa = r.ppa.as_ref()?;
                Some((
                    ParetoPoint {
                        point_id: format!("{:06}/{}", r.sample_index, r.point_id),
                        latency_ns: ppa.latency_ns?,
                        area: ppa.area() as f64,
                        power_mw: ppa.power_mw?,
                    },
                    *r,
                ))
            })
            .collect();
        if !candidates.is_empty() {
            let pts: Vec<ParetoPoint> = candidates.iter().map(|(p, _)| p.clone()).collect();
            let lookup: BTreeMap<&str, (&ParetoPoint, &EvaluationRecord)> =
                candidates.iter().map(|(p, r)| (p.point_id.as_str(), (p, *r))).collect();
            let members = pareto_frontier(&pts)
                .iter()
                .map(|pid| {
                    let (p, r) = lookup[pid.as_str()];
                    ParetoMember {
                        sample_index: r.sample_index,
                        point_id: r.point_id.clone(),
                        latency_ns: p.latency_ns,
                        area: p.area as u64,
                        power_mw: p.power_mw,
                    }
                })
                .collect();
            pareto.insert(id.clone(), members);
        }

        let Some(reference) = references.get(id.as_str()).and_then(|r| r.ppa.as_ref()) else {
            continue;
        };
        for &kk in &ks {
            let chosen = (0..kk).find_map(|s| {
                recs.iter()
                    .find(|r| r.sample_index == s && r.point_id == baseline_id)
                    .and_then(|r| r.ppa.as_ref().map(|p| (s, p)))
            });
            let Some((sample_index, generated)) = chosen else {
                continue;
            };
            for metric in DeltaMetric::ALL {
                match ppa_delta(id, generated, reference, metric) {
                    Ok(d) => deltas.push(DeltaRow {
                        k: kk,
                        task_id: id.clone(),
                        sample_index,
                        metric,
                        generated: metric.value(generated).expect("present"),
                        reference: metric.value(reference).expect("present"),
                        delta_pct: d.delta_pct,
                    }),
                    Err(MetricsError::MetricAbsent(_)) => {}
                    Err(e) => log::warn!("task {id}: {e}"),
                }
            }
        }
    }

    let judged: Vec<bool> = per_design_best.values().filter_map(|b: &DesignBest| b.dse_improved).collect();
    let dse_improved_fraction =
        (!judged.is_empty()).then(|| judged.iter().filter(|b| **b).count() as f64 / judged.len() as f64);

    RunSummary {
        record_schema: RECORD_SCHEMA_VERSION,
        run_id: spec.run_id.clone(),
        model_id: spec.model.model_id.clone(),
        adapter: spec.adapter.name.clone(),
        k,
        tasks: manifest.task_ids.len(),
        candidates: manifest.task_ids.len() * k,
        extraction_failures,
        generation_failures: generation_failures.into_iter().collect(),
        records,
        skips,
        stage_pass_records,
        pass_at_k: pass_at_k_rows,
        per_design_best,
        dse_improved_threshold_pct: DSE_IMPROVEMENT_THRESHOLD_PCT,
        dse_improved_fraction,
        delta_semantics: "relative_percent".into(),
        deltas,
        pareto,
    }
}

/// `records.jsonl` with stage wall times zeroed, for comparing runs.
pub fn canonical_records_without_timing(path: &Path) -> Result<String, EngineError> {
    let mut out = String::new();
    for mut entry in load_journal(path, false)? {
        if let JournalEntry::Record(r) | JournalEntry::Reference(r) = &mut entry {
            for s in r.stage_records.values_mut() {
                s.wall_time_s = 0.0;
            }
        }
        out.push_str(&serde_json::to_string(&entry).expect("entry serializes"));
        out.push('\n');
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::ScaleTag;
    use crate::dse::PointValues;
    use crate::toolchain::MockAdapter;

    fn task(mock: &str) -> BenchmarkTask {
        BenchmarkTask {
            id: "design_001".into(),
            instruction: "add".into(),
            reference_source: "int add(int a, int b) { return a + b; }".into(),
            testbench_source: "int add(int, int);\nint main() { return add(1, 2) == 3 ? 0 : 1; }\n".into(),
            top_function: "int add(int a, int b)".into(),
            scale_tag: ScaleTag::Small,
            dse_spec: Some(format!("unroll_factor: [1, 2]\n{mock}")),
        }
    }

    fn candidate(source: &str) -> Candidate {
        Candidate {
            task_id: "design_001".into(),
            sample_index: 0,
            raw_response: source.into(),
            source: Some(source.into()),
            extraction_status: ExtractionStatus::Ok,
        }
    }

    fn two_points() -> Vec<DsePoint> {
        vec![
            DsePoint::baseline(),
            DsePoint::new(PointValues {
                unroll_factor: 2,
                ..PointValues::default()
            }),
        ]
    }

    #[test]
    fn all_stages_pass_with_ppa() {
        let dir = tempfile::tempdir().unwrap();
        let recs = evaluate_candidate(
            &task(""),
            &candidate("int add(int a, int b) { return a + b; }"),
            &two_points(),
            &MockAdapter::default(),
            &ToolchainSettings::default(),
            dir.path(),
        )
        .unwrap();
        assert_eq!(recs.len(), 2);
        for r in &recs {
            assert!(StageId::ALL.iter().all(|s| r.passed(*s)));
            let ppa = r.ppa.as_ref().unwrap();
            assert_eq!(ppa.power_source.as_deref(), Some("impl_power_report"));
        }
        assert_eq!(recs[0].ppa.as_ref().unwrap().latency_cycles, 200);
        assert_eq!(recs[1].ppa.as_ref().unwrap().latency_cycles, 100);
    }

    #[test]
    fn csim_failure_gates_later_stages() {
        let dir = tempfile::tempdir().unwrap();
        let mut points = two_points();
        points.push(DsePoint::new(PointValues {
            unroll_factor: 4,
            ..PointValues::default()
        }));
        let recs = evaluate_candidate(
            &task(""),
            &candidate("// @mock fail_at=csim\nint add(int a, int b) { return 0; }"),
            &points,
            &MockAdapter::default(),
            &ToolchainSettings::default(),
            dir.path(),
        )
        .unwrap();
        assert_eq!(recs.len(), 3);
        for r in recs {
            assert_eq!(r.status(StageId::Compile), StageStatus::Pass);
            assert_eq!(r.status(StageId::CSim), StageStatus::Fail);
            assert_eq!(r.status(StageId::Synth), StageStatus::NotRun);
            assert_eq!(r.status(StageId::Impl), StageStatus::NotRun);
            assert!(r.ppa.is_none());
        }
    }

    #[test]
    fn failed_extraction_yields_no_records() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = candidate("nothing");
        c.source = None;
        c.extraction_status = ExtractionStatus::SignatureMissing;
        let recs = evaluate_candidate(
            &task(""),
            &c,
            &two_points(),
            &MockAdapter::default(),
            &ToolchainSettings::default(),
            dir.path(),
        )
        .unwrap();
        assert!(recs.is_empty());
    }

    #[test]
    fn baseline_is_always_included() {
        let t = task("");
        let pts = task_points(&t, &DseSpec::default(), &ExplorationPolicy::default()).unwrap();
        assert_eq!(pts.len(), 2);
        let t2 = BenchmarkTask {
            dse_spec: Some("unroll_factor: [2, 4]\n".into()),
            ..t
        };
        let pts = task_points(&t2, &DseSpec::default(), &ExplorationPolicy::default()).unwrap();
        assert_eq!(pts.len(), 3);
        assert!(pts.last().unwrap().is_baseline());
    }

    #[test]
    fn pass_k_columns() {
        assert_eq!(pass_k_values(1), vec![1]);
        assert_eq!(pass_k_values(2), vec![1, 2]);
        assert_eq!(pass_k_values(5), vec![1, 5]);
        assert_eq!(pass_k_values(10), vec![1, 5, 10]);
        assert_eq!(pass_k_values(12), vec![1, 5, 10, 12]);
    }

    #[test]
    fn torn_tail_is_dropped_and_repaired() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join(RECORDS_FILE);
        let skip = JournalEntry::Skip(SkipEntry {
            task_id: "design_001".into(),
            sample_index: 1,
            reason: SkipReason::Extraction {
                status: ExtractionStatus::NoCodeBlock,
            },
        });
        let line = serde_json::to_string(&skip).unwrap();
        fs::write(&path, format!("{line}\n{}", &line[..line.len() / 2])).unwrap();
        assert_eq!(load_journal(&path, true).unwrap(), vec![skip.clone()]);
        assert_eq!(fs::read_to_string(&path).unwrap(), format!("{line}\n"));

        fs::write(&path, format!("{{broken\n{line}\n")).unwrap();
        assert!(matches!(load_journal(&path, false), Err(EngineError::CorruptState(_))));
    }
}
