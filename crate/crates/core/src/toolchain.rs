// SPDX-License-Identifier: Apache-2.0

//! HLS / implementation tool adapters.
//!
//! An adapter renders batch scripts into a per-run workspace and drives one
//! stage at a time. Real adapters shell out to the vendor binary with a TCL
//! script per stage; the mock adapter evaluates a fixed cost model so the
//! rest of the harness can run without licensed tools.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::{self, File};
use std::io;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::str::FromStr;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{fill_template, top_function_name, BenchmarkTask};
use crate::dse::{render_directives, BackendStrategy, Directive, DirectiveSet, DsePoint};
use crate::gateway::{Candidate, ExtractionStatus};
use crate::reports::{
    derive_fmax, write_impl_kv, write_synth_kv, AreaSource, ImplPart, PpaRecord, ReportFormat, SynthPart,
};

/// Default FPGA part.
pub const DEFAULT_TARGET_PART: &str = "xc7a200tffv1156-1";

pub const DESIGN_FILE: &str = "design.cpp";
pub const TESTBENCH_FILE: &str = "testbench.cpp";
pub const POINT_FILE: &str = "point.json";
pub const DIRECTIVES_FILE: &str = "directives.json";
const MARKER_DIR: &str = ".stages";

#[derive(Debug, Error)]
pub enum ToolchainError {
    #[error("candidate {task_id}#{sample_index} is not usable ({status:?})")]
    InvalidCandidate {
        task_id: String,
        sample_index: usize,
        status: ExtractionStatus,
    },
    #[error("stage {stage} requested before {missing} passed")]
    GateViolation { stage: StageId, missing: StageId },
    #[error("unknown adapter `{0}`")]
    UnknownAdapter(String),
    #[error("bad workspace: {0}")]
    BadWorkspace(String),
    #[error("io error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> ToolchainError + '_ {
    move |source| ToolchainError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum StageId {
    Compile,
    CSim,
    Synth,
    Impl,
}

impl StageId {
    pub const ALL: [StageId; 4] = [StageId::Compile, StageId::CSim, StageId::Synth, StageId::Impl];

    pub fn as_str(self) -> &'static str {
        match self {
            StageId::Compile => "compile",
            StageId::CSim => "csim",
            StageId::Synth => "synth",
            StageId::Impl => "impl",
        }
    }

    pub fn predecessors(self) -> impl Iterator<Item = StageId> {
        StageId::ALL.into_iter().filter(move |s| *s < self)
    }
}

impl fmt::Display for StageId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StageId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "compile" => Ok(StageId::Compile),
            "csim" => Ok(StageId::CSim),
            "synth" => Ok(StageId::Synth),
            "impl" => Ok(StageId::Impl),
            other => Err(format!("unknown stage `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StageStatus {
    Pass,
    Fail,
    Timeout,
    ToolError,
    NotRun,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: StageId,
    pub status: StageStatus,
    pub wall_time_s: f64,
    /// Relative to the workspace directory.
    pub log_path: Option<PathBuf>,
    /// Relative to the workspace directory.
    pub report_paths: Vec<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

impl StageRecord {
    pub fn not_run(stage: StageId) -> Self {
        StageRecord {
            stage,
            status: StageStatus::NotRun,
            wall_time_s: 0.0,
            log_path: None,
            report_paths: Vec::new(),
            message: None,
        }
    }
}

/// Per-stage wall-clock limits in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StageTimeouts {
    pub compile: f64,
    pub csim: f64,
    pub synth: f64,
    #[serde(rename = "impl")]
    pub implementation: f64,
}

impl Default for StageTimeouts {
    fn default() -> Self {
        StageTimeouts {
            compile: 120.0,
            csim: 600.0,
            synth: 3600.0,
            implementation: 3600.0,
        }
    }
}

impl StageTimeouts {
    pub fn for_stage(&self, stage: StageId) -> Duration {
        let secs = match stage {
            StageId::Compile => self.compile,
            StageId::CSim => self.csim,
            StageId::Synth => self.synth,
            StageId::Impl => self.implementation,
        };
        Duration::from_secs_f64(secs.max(0.0))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Workspace {
    pub dir: PathBuf,
    pub top_function: String,
    pub sources: Vec<PathBuf>,
    pub scripts: Vec<PathBuf>,
    pub target_part: String,
    pub clock_period_ns: f64,
}

impl Workspace {
    pub fn design_path(&self) -> PathBuf {
        self.dir.join(DESIGN_FILE)
    }

    pub fn read_point(&self) -> Result<DsePoint, ToolchainError> {
        let path = self.dir.join(POINT_FILE);
        let text = fs::read_to_string(&path).map_err(io_err(&path))?;
        serde_json::from_str(&text).map_err(|e| ToolchainError::BadWorkspace(format!("{}: {e}", path.display())))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdapterDescriptor {
    pub name: String,
    pub supports: Vec<StageId>,
    pub tool_binary: Option<PathBuf>,
}

/// Values a script template can reference as `{name}`.
#[derive(Debug, Clone)]
pub struct ScriptContext {
    pub top_function: String,
    pub sources: Vec<String>,
    pub testbenches: Vec<String>,
    pub part: String,
    pub clock_period_ns: f64,
    pub directives: DirectiveSet,
    pub strategy: BackendStrategy,
}

/// Paths (relative to the workspace) of the reports an adapter leaves behind.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportLayout {
    pub synth: PathBuf,
    pub timing: PathBuf,
    pub power: PathBuf,
    pub util: PathBuf,
}

pub trait Adapter: Send + Sync {
    fn descriptor(&self) -> &AdapterDescriptor;

    /// Report dialect, or `None` when the adapter's reports are not parsed.
    fn report_format(&self) -> Option<ReportFormat>;

    fn report_layout(&self) -> ReportLayout;

    /// Script files (name, contents) to drop into a fresh workspace.
    fn render_scripts(&self, ctx: &ScriptContext) -> Vec<(String, String)>;

    /// Run one stage. Tool failures are statuses, not errors.
    fn execute(&self, ws: &Workspace, stage: StageId, timeout: Duration) -> Result<StageRecord, ToolchainError>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolchainSettings {
    pub target_part: String,
    #[serde(default)]
    pub timeouts: StageTimeouts,
}

impl Default for ToolchainSettings {
    fn default() -> Self {
        ToolchainSettings {
            target_part: DEFAULT_TARGET_PART.into(),
            timeouts: StageTimeouts::default(),
        }
    }
}

/// Create (or recreate) the workspace for one (task, candidate, point).
pub fn prepare_workspace(
    dir: &Path,
    task: &BenchmarkTask,
    candidate: &Candidate,
    point: &DsePoint,
    settings: &ToolchainSettings,
    adapter: &dyn Adapter,
) -> Result<Workspace, ToolchainError> {
    let source = match (&candidate.source, candidate.extraction_status) {
        (Some(src), ExtractionStatus::Ok) => src,
        _ => {
            return Err(ToolchainError::InvalidCandidate {
                task_id: candidate.task_id.clone(),
                sample_index: candidate.sample_index,
                status: candidate.extraction_status,
            })
        }
    };
    if settings.target_part.trim().is_empty() {
        return Err(ToolchainError::BadWorkspace("target part is empty".into()));
    }
    let top = top_function_name(&task.top_function)
        .ok_or_else(|| ToolchainError::BadWorkspace(format!("no function name in `{}`", task.top_function)))?
        .to_string();

    if dir.exists() {
        fs::remove_dir_all(dir).map_err(io_err(dir))?;
    }
    fs::create_dir_all(dir).map_err(io_err(dir))?;

    let directives = render_directives(point);
    let ctx = ScriptContext {
        top_function: top.clone(),
        sources: vec![DESIGN_FILE.into()],
        testbenches: vec![TESTBENCH_FILE.into()],
        part: settings.target_part.clone(),
        clock_period_ns: point.clock_period_ns,
        directives: directives.clone(),
        strategy: point.backend_strategy,
    };

    let mut files: Vec<(String, String)> = vec![
        (DESIGN_FILE.into(), ensure_newline(source)),
        (TESTBENCH_FILE.into(), ensure_newline(&task.testbench_source)),
        (POINT_FILE.into(), serde_json::to_string_pretty(point).expect("point serializes") + "\n"),
        (
            DIRECTIVES_FILE.into(),
            serde_json::to_string_pretty(&directives).expect("directives serialize") + "\n",
        ),
    ];
    let scripts = adapter.render_scripts(&ctx);
    let script_names: Vec<PathBuf> = scripts.iter().map(|(n, _)| PathBuf::from(n)).collect();
    files.extend(scripts);

    for (name, body) in &files {
        let path = dir.join(name);
        fs::write(&path, body).map_err(io_err(&path))?;
    }

    Ok(Workspace {
        dir: dir.to_path_buf(),
        top_function: top,
        sources: vec![PathBuf::from(DESIGN_FILE), PathBuf::from(TESTBENCH_FILE)],
        scripts: script_names,
        target_part: settings.target_part.clone(),
        clock_period_ns: point.clock_period_ns,
    })
}

fn ensure_newline(s: &str) -> String {
    if s.ends_with('\n') {
        s.to_string()
    } else {
        format!("{s}\n")
    }
}

fn marker(ws: &Workspace, stage: StageId) -> PathBuf {
    ws.dir.join(MARKER_DIR).join(format!("{}.pass", stage.as_str()))
}

/// Drive one stage through `adapter`, enforcing the stage ladder: every
/// earlier stage must already have passed in this workspace.
pub fn run_stage(
    adapter: &dyn Adapter,
    ws: &Workspace,
    stage: StageId,
    timeout: Duration,
) -> Result<StageRecord, ToolchainError> {
    if let Some(missing) = stage.predecessors().find(|s| !marker(ws, *s).exists()) {
        return Err(ToolchainError::GateViolation { stage, missing });
    }
    let stale = marker(ws, stage);
    if stale.exists() {
        fs::remove_file(&stale).map_err(io_err(&stale))?;
    }
    if !adapter.descriptor().supports.contains(&stage) {
        return Ok(StageRecord {
            stage,
            status: StageStatus::ToolError,
            wall_time_s: 0.0,
            log_path: None,
            report_paths: Vec::new(),
            message: Some(format!("adapter {} does not support {stage}", adapter.descriptor().name)),
        });
    }
    let record = adapter.execute(ws, stage, timeout)?;
    if record.status == StageStatus::Pass {
        let dir = ws.dir.join(MARKER_DIR);
        fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        fs::write(&stale, b"").map_err(io_err(&stale))?;
    }
    Ok(record)
}

#[derive(Debug)]
pub enum ProcessOutcome {
    Exited { success: bool, code: Option<i32> },
    TimedOut,
    SpawnFailed(io::Error),
}

/// Run `program` in `cwd` with stdout and stderr appended to `log`. On
/// timeout the whole process group is killed.
pub fn run_process(
    program: &Path,
    args: &[String],
    cwd: &Path,
    log: &Path,
    timeout: Duration,
) -> Result<ProcessOutcome, io::Error> {
    use std::os::unix::process::CommandExt;

    if let Some(parent) = log.parent() {
        fs::create_dir_all(parent)?;
    }
    let out = File::create(log)?;
    let err = out.try_clone()?;
    let spawned = Command::new(program)
        .args(args)
        .current_dir(cwd)
        .stdin(Stdio::null())
        .stdout(out)
        .stderr(err)
        .process_group(0)
        .spawn();
    let mut child = match spawned {
        Ok(c) => c,
        Err(e) => return Ok(ProcessOutcome::SpawnFailed(e)),
    };

    let deadline = Instant::now() + timeout;
    let mut poll = Duration::from_millis(5);
    loop {
        if let Some(status) = child.try_wait()? {
            return Ok(ProcessOutcome::Exited {
                success: status.success(),
                code: status.code(),
            });
        }
        let now = Instant::now();
        if now >= deadline {
            let pgid = child.id() as libc::pid_t;
            // SAFETY: signalling a process group we created; no memory is touched.
            unsafe {
                libc::kill(-pgid, libc::SIGKILL);
            }
            let _ = child.kill();
            let _ = child.wait();
            return Ok(ProcessOutcome::TimedOut);
        }
        std::thread::sleep(poll.min(deadline - now));
        poll = (poll * 2).min(Duration::from_millis(100));
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScriptDialect {
    Vitis,
    Catapult,
}

const VITIS_PROJECT: &str = "\
# generated by hlsbench
open_project proj
set_top {top_function}
add_files {sources}
add_files -tb {testbenches}
open_solution sol -flow_target vivado
set_part {part}
create_clock -period {clock_period_ns} -name default
{directives}
";

const CATAPULT_PROJECT: &str = "\
# generated by hlsbench
if {[file exists proj.ccs]} { project load proj.ccs } else { project new -name proj }
solution options set /Input/CppStandard c++11
foreach f {{sources}} { solution file add $f -type C++ }
foreach f {{testbenches}} { solution file add $f -type C++ -exclude true }
directive set -DESIGN_HIERARCHY {top_function}
go compile
solution library add mgc_Xilinx-ARTIX-7-1_beh -- -rtlsyntool Vivado -manufacturer Xilinx -family ARTIX-7 -speed -1 -part {part}
go libraries
directive set -CLOCKS {clk {-CLOCK_PERIOD {clock_period_ns}}}
go assembly
{directives}
";

fn vitis_directive(top: &str, d: &Directive) -> Option<String> {
    Some(match d {
        Directive::Clock { .. } | Directive::BackendStrategy { .. } => return None,
        Directive::Pipeline { ii } => format!("set_directive_pipeline -II {ii} \"{top}\""),
        Directive::Dataflow => format!("set_directive_dataflow \"{top}\""),
        Directive::Unroll { factor } => format!("set_directive_unroll -factor {factor} \"{top}\""),
        Directive::ArrayPartition { factor } => {
            format!("set_directive_array_partition -type cyclic -factor {factor} -dim 0 \"{top}\"")
        }
        Directive::AllocationLimit { add } => {
            format!("set_directive_allocation -limit {add} -type operation \"{top}\" add")
        }
        // fully registered DSP48 multiplier
        Directive::DspReg => "config_op mul -impl dsp -latency 3".to_string(),
    })
}

fn catapult_directive(top: &str, d: &Directive) -> Option<String> {
    Some(match d {
        Directive::Clock { .. } | Directive::BackendStrategy { .. } => return None,
        Directive::Pipeline { ii } => format!("directive set /{top}/core/main -PIPELINE_INIT_INTERVAL {ii}"),
        Directive::Dataflow => format!("directive set /{top} -DATAFLOW true"),
        Directive::Unroll { factor } => format!("directive set /{top}/core/main -UNROLL {factor}"),
        Directive::ArrayPartition { factor } => format!("directive set /{top}/core -MEMORY_BANKS {factor}"),
        Directive::AllocationLimit { add } => format!("directive set /{top}/core -MAX_ADDERS {add}"),
        Directive::DspReg => format!("directive set /{top}/core -DSP_EXTRACTION yes"),
    })
}

fn stage_body(dialect: ScriptDialect, stage: StageId) -> &'static str {
    match (dialect, stage) {
        (ScriptDialect::Vitis, StageId::Compile) => "csim_design -setup",
        (ScriptDialect::Vitis, StageId::CSim) => "csim_design",
        (ScriptDialect::Vitis, StageId::Synth) => "csynth_design\ncosim_design",
        (ScriptDialect::Vitis, StageId::Impl) => {
            "config_export -vivado_impl_strategy {strategy}\nexport_design -flow impl -format ip_catalog"
        }
        (ScriptDialect::Catapult, StageId::Compile) => "go compile",
        (ScriptDialect::Catapult, StageId::CSim) => "flow run /SCVerify/launch_make ./scverify/Verify_orig_cxx_osci.mk {} SIMTOOL=osci sim",
        (ScriptDialect::Catapult, StageId::Synth) => {
            "go extract\nflow run /SCVerify/launch_make ./scverify/Verify_concat_sim_rtl_v_msim.mk {} SIMTOOL=msim sim"
        }
        (ScriptDialect::Catapult, StageId::Impl) => {
            "flow run /Vivado/synthesize -shell vivado_concat_v/concat_rtl.v.xv"
        }
    }
}

type DirectiveFn = fn(&str, &Directive) -> Option<String>;

/// Render the project script plus one script per stage.
pub fn render_tool_scripts(
    dialect: ScriptDialect,
    ctx: &ScriptContext,
    extra_template: Option<&str>,
) -> Vec<(String, String)> {
    let (project, translate): (&str, DirectiveFn) = match dialect {
        ScriptDialect::Vitis => (VITIS_PROJECT, vitis_directive),
        ScriptDialect::Catapult => (CATAPULT_PROJECT, catapult_directive),
    };
    let directives = ctx
        .directives
        .iter()
        .filter_map(|d| translate(&ctx.top_function, d))
        .collect::<Vec<_>>()
        .join("\n");
    let clock = format!("{}", ctx.clock_period_ns);
    let sources = ctx.sources.join(" ");
    let testbenches = ctx.testbenches.join(" ");
    let values = [
        ("top_function", ctx.top_function.as_str()),
        ("sources", sources.as_str()),
        ("testbenches", testbenches.as_str()),
        ("part", ctx.part.as_str()),
        ("clock_period_ns", clock.as_str()),
        ("directives", directives.as_str()),
        ("strategy", ctx.strategy.as_str()),
    ];

    let mut project_text = fill_template(project, &values);
    let mut files = Vec::new();
    if let Some(extra) = extra_template {
        files.push(("extra.tcl".to_string(), fill_template(extra, &values)));
        project_text.push_str("source extra.tcl\n");
    }
    files.insert(0, ("project.tcl".to_string(), project_text));
    for stage in StageId::ALL {
        let body = fill_template(stage_body(dialect, stage), &values);
        files.push((
            format!("stage_{}.tcl", stage.as_str()),
            format!("source project.tcl\n{body}\nexit\n"),
        ));
    }
    files
}

/// Adapter for a vendor tool driven by batch TCL scripts.
pub struct ScriptAdapter {
    descriptor: AdapterDescriptor,
    dialect: ScriptDialect,
    binary: PathBuf,
    extra_template: Option<String>,
}

impl ScriptAdapter {
    pub fn vitis(binary: impl Into<PathBuf>) -> Self {
        Self::new("vitis", ScriptDialect::Vitis, binary.into())
    }

    pub fn catapult(binary: impl Into<PathBuf>) -> Self {
        Self::new("catapult", ScriptDialect::Catapult, binary.into())
    }

    fn new(name: &str, dialect: ScriptDialect, binary: PathBuf) -> Self {
        ScriptAdapter {
            descriptor: AdapterDescriptor {
                name: name.into(),
                supports: StageId::ALL.to_vec(),
                tool_binary: Some(binary.clone()),
            },
            dialect,
            binary,
            extra_template: None,
        }
    }

    pub fn with_extra_template(mut self, template: String) -> Self {
        self.extra_template = Some(template);
        self
    }

    fn args(&self, script: &str) -> Vec<String> {
        match self.dialect {
            ScriptDialect::Vitis => vec!["-f".into(), script.into()],
            ScriptDialect::Catapult => vec!["-shell".into(), "-file".into(), script.into()],
        }
    }
}

fn log_has_error(path: &Path) -> bool {
    fs::read_to_string(path)
        .map(|text| text.lines().any(|l| l.trim_start().starts_with("ERROR:") || l.trim_start().starts_with("# Error")))
        .unwrap_or(false)
}

impl Adapter for ScriptAdapter {
    fn descriptor(&self) -> &AdapterDescriptor {
        &self.descriptor
    }

    fn report_format(&self) -> Option<ReportFormat> {
        match self.dialect {
            ScriptDialect::Vitis => Some(ReportFormat::VitisXml),
            ScriptDialect::Catapult => None,
        }
    }

    fn report_layout(&self) -> ReportLayout {
        let base = PathBuf::from("proj/sol");
        ReportLayout {
            synth: base.join("syn/report/csynth.xml"),
            timing: base.join("impl/report/verilog/timing_routed.rpt"),
            power: base.join("impl/report/verilog/power_routed.rpt"),
            util: base.join("impl/report/verilog/utilization_placed.rpt"),
        }
    }

    fn render_scripts(&self, ctx: &ScriptContext) -> Vec<(String, String)> {
        render_tool_scripts(self.dialect, ctx, self.extra_template.as_deref())
    }

    fn execute(&self, ws: &Workspace, stage: StageId, timeout: Duration) -> Result<StageRecord, ToolchainError> {
        let log_rel = PathBuf::from("logs").join(format!("{stage}.log"));
        let log = ws.dir.join(&log_rel);
        let script = format!("stage_{stage}.tcl");
        let started = Instant::now();
        let outcome = run_process(&self.binary, &self.args(&script), &ws.dir, &log, timeout).map_err(io_err(&log))?;
        let wall_time_s = started.elapsed().as_secs_f64();

        let (status, message) = match outcome {
            ProcessOutcome::SpawnFailed(e) => (
                StageStatus::ToolError,
                Some(format!("cannot run {}: {e}", self.binary.display())),
            ),
            ProcessOutcome::TimedOut => (StageStatus::Timeout, Some(format!("killed after {timeout:?}"))),
            ProcessOutcome::Exited { success: true, .. } if !log_has_error(&log) => (StageStatus::Pass, None),
            ProcessOutcome::Exited { success: true, .. } => (StageStatus::Fail, Some("errors in log".into())),
            ProcessOutcome::Exited { code: Some(c), .. } => (StageStatus::Fail, Some(format!("exit code {c}"))),
            ProcessOutcome::Exited { code: None, .. } => {
                (StageStatus::ToolError, Some("terminated by signal".into()))
            }
        };
        let layout = self.report_layout();
        let report_paths = match (status, stage) {
            (StageStatus::Pass, StageId::Synth) => vec![layout.synth],
            (StageStatus::Pass, StageId::Impl) => vec![layout.timing, layout.power, layout.util],
            _ => Vec::new(),
        }
        .into_iter()
        .filter(|p| ws.dir.join(p).exists())
        .collect();

        Ok(StageRecord {
            stage,
            status,
            wall_time_s,
            log_path: log.exists().then_some(log_rel),
            report_paths,
            message,
        })
    }
}

/// Inputs to the mock cost model. Read from `@mock key=value ...` comment
/// annotations in the design source; unspecified keys keep their defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MockProfile {
    pub base_cycles: u64,
    pub base_lut: u64,
    pub base_ff: u64,
    pub base_dsp: u64,
    pub base_bram: u64,
    pub base_power_mw: f64,
    pub min_period_ns: f64,
    pub fail_at: Option<StageId>,
}

impl Default for MockProfile {
    fn default() -> Self {
        MockProfile {
            base_cycles: 100,
            base_lut: 500,
            base_ff: 300,
            base_dsp: 0,
            base_bram: 0,
            base_power_mw: 50.0,
            min_period_ns: 3.0,
            fail_at: None,
        }
    }
}

impl MockProfile {
    pub fn from_source(source: &str) -> Result<Self, String> {
        let mut p = MockProfile::default();
        for line in source.lines() {
            let Some((_, rest)) = line.split_once("@mock") else {
                continue;
            };
            for token in rest.split_whitespace() {
                let Some((key, value)) = token.split_once('=') else {
                    continue;
                };
                let bad = |_| format!("@mock {key}: bad value `{value}`");
                match key {
                    "base_cycles" => p.base_cycles = value.parse().map_err(bad)?,
                    "base_lut" => p.base_lut = value.parse().map_err(bad)?,
                    "base_ff" => p.base_ff = value.parse().map_err(bad)?,
                    "base_dsp" => p.base_dsp = value.parse().map_err(bad)?,
                    "base_bram" => p.base_bram = value.parse().map_err(bad)?,
                    "base_power_mw" => p.base_power_mw = value.parse().map_err(|_| format!("@mock {key}: bad value `{value}`"))?,
                    "min_period_ns" => p.min_period_ns = value.parse().map_err(|_| format!("@mock {key}: bad value `{value}`"))?,
                    "fail_at" => p.fail_at = Some(value.parse()?),
                    other => return Err(format!("@mock: unknown key `{other}`")),
                }
            }
        }
        if p.min_period_ns.is_nan() || p.min_period_ns <= 0.0 {
            return Err("@mock min_period_ns must be positive".into());
        }
        Ok(p)
    }
}

/// Deterministic stand-in for the HLS and implementation tools.
pub fn mock_evaluate(profile: &MockProfile, point: &DsePoint) -> (BTreeMap<StageId, StageStatus>, PpaRecord) {
    let unroll = u64::from(point.unroll_factor.max(1));
    let issue = if point.enable_pipeline {
        u64::from(point.pipeline_ii.max(1))
    } else {
        2
    };
    let latency_cycles = profile.base_cycles.div_ceil(unroll) * issue;
    let clock = point.clock_period_ns;
    let wns_ns = clock - profile.min_period_ns;

    let ppa = PpaRecord {
        latency_cycles,
        clock_ns: Some(clock),
        latency_ns: Some(latency_cycles as f64 * clock),
        lut: profile.base_lut * unroll * u64::from(point.array_partition_factor.max(1)),
        ff: profile.base_ff * unroll,
        dsp: Some(profile.base_dsp),
        bram: Some(profile.base_bram),
        area_source: AreaSource::HlsEstimate,
        wns_ns: Some(wns_ns),
        fmax_mhz: Some(1000.0 / profile.min_period_ns),
        power_mw: Some(profile.base_power_mw * (1.0 + 0.1 * (unroll as f64 - 1.0))),
        power_source: Some("mock".into()),
        hls_lut: None,
        hls_ff: None,
    };

    let mut stages = BTreeMap::new();
    let mut failed = false;
    for stage in StageId::ALL {
        let status = if failed {
            StageStatus::NotRun
        } else if profile.fail_at == Some(stage) || (stage == StageId::Impl && wns_ns < 0.0) {
            failed = true;
            StageStatus::Fail
        } else {
            StageStatus::Pass
        };
        stages.insert(stage, status);
    }
    (stages, ppa)
}

/// Adapter backed by [`mock_evaluate`]. Writes the same generic reports a
/// real flow would leave, so the parsing path is exercised too.
pub struct MockAdapter {
    descriptor: AdapterDescriptor,
}

impl Default for MockAdapter {
    fn default() -> Self {
        MockAdapter {
            descriptor: AdapterDescriptor {
                name: "mock".into(),
                supports: StageId::ALL.to_vec(),
                tool_binary: None,
            },
        }
    }
}

impl Adapter for MockAdapter {
    fn descriptor(&self) -> &AdapterDescriptor {
        &self.descriptor
    }

    fn report_format(&self) -> Option<ReportFormat> {
        Some(ReportFormat::GenericKv)
    }

    fn report_layout(&self) -> ReportLayout {
        ReportLayout {
            synth: "reports/csynth.rpt".into(),
            timing: "reports/timing.rpt".into(),
            power: "reports/power.rpt".into(),
            util: "reports/utilization.rpt".into(),
        }
    }

    fn render_scripts(&self, ctx: &ScriptContext) -> Vec<(String, String)> {
        render_tool_scripts(ScriptDialect::Vitis, ctx, None)
    }

    fn execute(&self, ws: &Workspace, stage: StageId, _timeout: Duration) -> Result<StageRecord, ToolchainError> {
        let started = Instant::now();
        let design = ws.design_path();
        let source = fs::read_to_string(&design).map_err(io_err(&design))?;
        let point = ws.read_point()?;
        let log_rel = PathBuf::from("logs").join(format!("{stage}.log"));
        let log = ws.dir.join(&log_rel);
        fs::create_dir_all(log.parent().expect("log has parent")).map_err(io_err(&log))?;

        let profile = match MockProfile::from_source(&source) {
            Ok(p) => p,
            Err(msg) => {
                fs::write(&log, format!("ERROR: {msg}\n")).map_err(io_err(&log))?;
                return Ok(StageRecord {
                    stage,
                    status: StageStatus::ToolError,
                    wall_time_s: started.elapsed().as_secs_f64(),
                    log_path: Some(log_rel),
                    report_paths: Vec::new(),
                    message: Some(msg),
                });
            }
        };
        let (stages, ppa) = mock_evaluate(&profile, &point);
        let status = stages[&stage];

        let mut report_paths = Vec::new();
        let layout = self.report_layout();
        if status == StageStatus::Pass {
            let mut write = |rel: &PathBuf, body: String| -> Result<(), ToolchainError> {
                let path = ws.dir.join(rel);
                fs::create_dir_all(path.parent().expect("report has parent")).map_err(io_err(&path))?;
                fs::write(&path, body).map_err(io_err(&path))?;
                report_paths.push(rel.clone());
                Ok(())
            };
            match stage {
                StageId::Synth => write(
                    &layout.synth,
                    write_synth_kv(&SynthPart {
                        latency_cycles: ppa.latency_cycles,
                        clock_ns: ppa.clock_ns,
                        estimated_clock_ns: Some(profile.min_period_ns),
                        latency_ns: None,
                        lut: ppa.lut,
                        ff: ppa.ff,
                        dsp: ppa.dsp,
                        bram: ppa.bram,
                    }),
                )?,
                StageId::Impl => {
                    let texts = write_impl_kv(&ImplPart {
                        clock_ns: point.clock_period_ns,
                        wns_ns: ppa.wns_ns.expect("mock sets wns"),
                        fmax_mhz: derive_fmax(point.clock_period_ns, ppa.wns_ns.expect("mock sets wns"))
                            .unwrap_or(f64::NAN),
                        power_mw: ppa.power_mw.expect("mock sets power"),
                        lut: None,
                        ff: None,
                    });
                    write(&layout.timing, texts.timing)?;
                    write(&layout.power, texts.power)?;
                    write(&layout.util, texts.util)?;
                }
                StageId::Compile | StageId::CSim => {}
            }
        }

        let summary = match status {
            StageStatus::Pass => format!("INFO: [mock] {stage} finished for point {}\n", point.point_id),
            _ => format!("ERROR: [mock] {stage} failed for point {}\n", point.point_id),
        };
        fs::write(&log, summary).map_err(io_err(&log))?;

        Ok(StageRecord {
            stage,
            status,
            wall_time_s: started.elapsed().as_secs_f64(),
            log_path: Some(log_rel),
            report_paths,
            message: None,
        })
    }
}

/// Adapter selection, usually read from a YAML file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdapterConfig {
    pub name: String,
    #[serde(default)]
    pub tool_binary: Option<PathBuf>,
    /// Extra TCL template sourced at the end of the project script.
    #[serde(default)]
    pub extra_template: Option<PathBuf>,
    #[serde(default)]
    pub default_target_part: Option<String>,
}

impl AdapterConfig {
    pub fn named(name: &str) -> Self {
        AdapterConfig {
            name: name.into(),
            tool_binary: None,
            extra_template: None,
            default_target_part: None,
        }
    }
}

pub fn build_adapter(cfg: &AdapterConfig) -> Result<Box<dyn Adapter>, ToolchainError> {
    let extra = cfg
        .extra_template
        .as_ref()
        .map(|p| fs::read_to_string(p).map_err(io_err(p)))
        .transpose()?;
    let adapter: Box<dyn Adapter> = match cfg.name.as_str() {
        "mock" => Box::new(MockAdapter::default()),
        "vitis" | "catapult" => {
            let default_bin = if cfg.name == "vitis" { "vitis_hls" } else { "catapult" };
            let bin = cfg.tool_binary.clone().unwrap_or_else(|| PathBuf::from(default_bin));
            let mut a = if cfg.name == "vitis" {
                ScriptAdapter::vitis(bin)
            } else {
                ScriptAdapter::catapult(bin)
            };
            if let Some(t) = extra {
                a = a.with_extra_template(t);
            }
            Box::new(a)
        }
        other => return Err(ToolchainError::UnknownAdapter(other.into())),
    };
    Ok(adapter)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::ScaleTag;
    use crate::dse::PointValues;
    use proptest::prelude::*;
    use std::os::unix::fs::PermissionsExt;

    fn task() -> BenchmarkTask {
        BenchmarkTask {
            id: "design_001".into(),
            instruction: "add".into(),
            reference_source: "int add(int a, int b) { return a + b; }".into(),
            testbench_source: "int add(int, int);\nint main() { return add(1, 2) == 3 ? 0 : 1; }\n".into(),
            top_function: "int add(int a, int b)".into(),
            scale_tag: ScaleTag::Small,
            dse_spec: None,
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

    fn profile() -> MockProfile {
        MockProfile {
            base_cycles: 100,
            base_lut: 500,
            min_period_ns: 3.0,
            ..MockProfile::default()
        }
    }

    #[test]
    fn mock_defaults_point() {
        let (stages, ppa) = mock_evaluate(&profile(), &DsePoint::baseline());
        assert_eq!(ppa.latency_cycles, 200);
        assert_eq!(ppa.latency_ns, Some(2000.0));
        assert_eq!(ppa.lut, 500);
        assert_eq!(ppa.wns_ns, Some(7.0));
        assert!(stages.values().all(|s| *s == StageStatus::Pass));
    }

    #[test]
    fn mock_unrolled_pipelined_point() {
        let point = DsePoint::new(PointValues {
            clock_period_ns: 5.0,
            enable_pipeline: true,
            pipeline_ii: 1,
            unroll_factor: 4,
            ..PointValues::default()
        });
        let (_, ppa) = mock_evaluate(&profile(), &point);
        assert_eq!(ppa.latency_cycles, 25);
        assert_eq!(ppa.latency_ns, Some(125.0));
        assert_eq!(ppa.lut, 2000);
        assert_eq!(ppa.ff, 1200);
        assert!((ppa.power_mw.unwrap() - 65.0).abs() < 1e-9);
    }

    #[test]
    fn mock_scripted_failure() {
        let p = MockProfile {
            fail_at: Some(StageId::Synth),
            ..profile()
        };
        let (stages, _) = mock_evaluate(&p, &DsePoint::baseline());
        assert_eq!(
            stages.into_values().collect::<Vec<_>>(),
            vec![StageStatus::Pass, StageStatus::Pass, StageStatus::Fail, StageStatus::NotRun]
        );
    }

    #[test]
    fn mock_negative_slack_fails_impl() {
        let point = DsePoint::new(PointValues {
            clock_period_ns: 2.5,
            ..PointValues::default()
        });
        let (stages, ppa) = mock_evaluate(&profile(), &point);
        assert_eq!(stages[&StageId::Synth], StageStatus::Pass);
        assert_eq!(stages[&StageId::Impl], StageStatus::Fail);
        assert_eq!(ppa.wns_ns, Some(-0.5));
    }

    #[test]
    fn profile_annotations() {
        let src = "// @mock base_cycles=64 base_lut=120 fail_at=csim\nint add(int a, int b) {}";
        let p = MockProfile::from_source(src).unwrap();
        assert_eq!(p.base_cycles, 64);
        assert_eq!(p.base_lut, 120);
        assert_eq!(p.fail_at, Some(StageId::CSim));
        assert!(MockProfile::from_source("// @mock bogus=1").is_err());
        assert_eq!(MockProfile::from_source("int x;").unwrap(), MockProfile::default());
    }

    #[test]
    fn workspace_contents_and_idempotence() {
        let dir = tempfile::tempdir().unwrap();
        let ws_dir = dir.path().join("ws");
        let adapter = MockAdapter::default();
        let point = DsePoint::new(PointValues {
            enable_pipeline: true,
            pipeline_ii: 2,
            unroll_factor: 4,
            ..PointValues::default()
        });
        let cand = candidate("int add(int a, int b) { return a + b; }");
        let settings = ToolchainSettings::default();
        let ws = prepare_workspace(&ws_dir, &task(), &cand, &point, &settings, &adapter).unwrap();
        for f in [DESIGN_FILE, TESTBENCH_FILE, "project.tcl", "stage_csim.tcl"] {
            assert!(ws_dir.join(f).is_file(), "{f}");
        }
        let project = fs::read_to_string(ws_dir.join("project.tcl")).unwrap();
        assert!(project.contains("set_part xc7a200tffv1156-1"));
        assert!(project.contains("create_clock -period 10 -name default"));
        assert!(project.contains("set_directive_pipeline -II 2 \"add\""));
        assert!(project.contains("set_directive_unroll -factor 4 \"add\""));
        assert_eq!(ws.top_function, "add");

        let snapshot: Vec<_> = ws.scripts.iter().map(|s| fs::read(ws_dir.join(s)).unwrap()).collect();
        fs::write(ws_dir.join("junk.txt"), "x").unwrap();
        let ws2 = prepare_workspace(&ws_dir, &task(), &cand, &point, &settings, &adapter).unwrap();
        let again: Vec<_> = ws2.scripts.iter().map(|s| fs::read(ws_dir.join(s)).unwrap()).collect();
        assert_eq!(snapshot, again);
        assert!(!ws_dir.join("junk.txt").exists());
    }

    #[test]
    fn invalid_candidate_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let mut cand = candidate("int other() {}");
        cand.source = None;
        cand.extraction_status = ExtractionStatus::SignatureMissing;
        let err = prepare_workspace(
            dir.path(),
            &task(),
            &cand,
            &DsePoint::baseline(),
            &ToolchainSettings::default(),
            &MockAdapter::default(),
        )
        .unwrap_err();
        assert!(matches!(err, ToolchainError::InvalidCandidate { .. }));
    }

    fn mock_ws(dir: &Path, source: &str) -> Workspace {
        prepare_workspace(
            dir,
            &task(),
            &candidate(source),
            &DsePoint::baseline(),
            &ToolchainSettings::default(),
            &MockAdapter::default(),
        )
        .unwrap()
    }

    #[test]
    fn mock_stage_runs_and_gating() {
        let dir = tempfile::tempdir().unwrap();
        let ws = mock_ws(&dir.path().join("ws"), "int add(int a, int b) { return a + b; }");
        let adapter = MockAdapter::default();
        let t = Duration::from_secs(5);

        assert!(matches!(
            run_stage(&adapter, &ws, StageId::Synth, t),
            Err(ToolchainError::GateViolation { missing: StageId::Compile, .. })
        ));
        let rec = run_stage(&adapter, &ws, StageId::Compile, t).unwrap();
        assert_eq!(rec.status, StageStatus::Pass);
        assert!(ws.dir.join(rec.log_path.unwrap()).is_file());
        run_stage(&adapter, &ws, StageId::CSim, t).unwrap();
        let synth = run_stage(&adapter, &ws, StageId::Synth, t).unwrap();
        assert_eq!(synth.report_paths, vec![PathBuf::from("reports/csynth.rpt")]);
        let imp = run_stage(&adapter, &ws, StageId::Impl, t).unwrap();
        assert_eq!(imp.report_paths.len(), 3);
    }

    #[test]
    fn mock_csim_failure() {
        let dir = tempfile::tempdir().unwrap();
        let ws = mock_ws(&dir.path().join("ws"), "// @mock fail_at=csim\nint add(int a, int b) { return 0; }");
        let adapter = MockAdapter::default();
        let t = Duration::from_secs(5);
        assert_eq!(run_stage(&adapter, &ws, StageId::Compile, t).unwrap().status, StageStatus::Pass);
        assert_eq!(run_stage(&adapter, &ws, StageId::CSim, t).unwrap().status, StageStatus::Fail);
        assert!(matches!(
            run_stage(&adapter, &ws, StageId::Synth, t),
            Err(ToolchainError::GateViolation { .. })
        ));
    }

    fn fake_tool(dir: &Path, body: &str) -> PathBuf {
        let path = dir.join("fake_tool.sh");
        fs::write(&path, format!("#!/bin/sh\n{body}\n")).unwrap();
        fs::set_permissions(&path, fs::Permissions::from_mode(0o755)).unwrap();
        path
    }

    fn vitis_ws(root: &Path, adapter: &ScriptAdapter) -> Workspace {
        prepare_workspace(
            &root.join("ws"),
            &task(),
            &candidate("int add(int a, int b) { return a + b; }"),
            &DsePoint::baseline(),
            &ToolchainSettings::default(),
            adapter,
        )
        .unwrap()
    }

    #[test]
    fn missing_binary_is_tool_error() {
        let dir = tempfile::tempdir().unwrap();
        let adapter = ScriptAdapter::vitis("/nonexistent/bin/vitis_hls");
        let ws = vitis_ws(dir.path(), &adapter);
        let rec = run_stage(&adapter, &ws, StageId::Compile, Duration::from_secs(5)).unwrap();
        assert_eq!(rec.status, StageStatus::ToolError);
        assert!(rec.message.unwrap().contains("/nonexistent/bin/vitis_hls"));
    }

    #[test]
    fn script_adapter_runs_fake_tool() {
        let dir = tempfile::tempdir().unwrap();
        // passes everything except csim, which prints an error
        let tool = fake_tool(
            dir.path(),
            "echo \"running $2\"; case \"$2\" in stage_csim.tcl) echo 'ERROR: [SIM 211-100] CSim failed'; exit 0;; esac; exit 0",
        );
        let adapter = ScriptAdapter::vitis(&tool);
        let ws = vitis_ws(dir.path(), &adapter);
        let t = Duration::from_secs(10);
        let compile = run_stage(&adapter, &ws, StageId::Compile, t).unwrap();
        assert_eq!(compile.status, StageStatus::Pass);
        let log = fs::read_to_string(ws.dir.join(compile.log_path.unwrap())).unwrap();
        assert!(log.contains("running stage_compile.tcl"));
        assert_eq!(run_stage(&adapter, &ws, StageId::CSim, t).unwrap().status, StageStatus::Fail);
    }

    #[test]
    fn nonzero_exit_is_fail() {
        let dir = tempfile::tempdir().unwrap();
        let adapter = ScriptAdapter::catapult(fake_tool(dir.path(), "exit 3"));
        let ws = vitis_ws(dir.path(), &adapter);
        let rec = run_stage(&adapter, &ws, StageId::Compile, Duration::from_secs(10)).unwrap();
        assert_eq!(rec.status, StageStatus::Fail);
        assert_eq!(rec.message.as_deref(), Some("exit code 3"));
    }

    #[test]
    fn timeout_kills_process_tree() {
        let dir = tempfile::tempdir().unwrap();
        let adapter = ScriptAdapter::vitis(fake_tool(dir.path(), "sleep 30 & sleep 30; wait"));
        let ws = vitis_ws(dir.path(), &adapter);
        let started = Instant::now();
        let rec = run_stage(&adapter, &ws, StageId::Compile, Duration::from_millis(500)).unwrap();
        assert_eq!(rec.status, StageStatus::Timeout);
        assert!(started.elapsed() < Duration::from_millis(2500));
    }

    #[test]
    fn extra_template_is_rendered() {
        let ctx = ScriptContext {
            top_function: "fir".into(),
            sources: vec!["design.cpp".into()],
            testbenches: vec!["testbench.cpp".into()],
            part: "xc7a100t".into(),
            clock_period_ns: 3.3,
            directives: vec![
                Directive::Clock { period_ns: 3.3 },
                Directive::Dataflow,
                Directive::BackendStrategy {
                    strategy: BackendStrategy::AreaExplore,
                },
            ],
            strategy: BackendStrategy::AreaExplore,
        };
        let files = render_tool_scripts(ScriptDialect::Vitis, &ctx, Some("puts {part}-{strategy} {x}"));
        let map: BTreeMap<_, _> = files.into_iter().collect();
        assert_eq!(map["extra.tcl"], "puts xc7a100t-Area_Explore {x}");
        assert!(map["project.tcl"].ends_with("source extra.tcl\n"));
        assert!(map["project.tcl"].contains("set_directive_dataflow \"fir\""));
        assert!(map["stage_impl.tcl"].contains("-vivado_impl_strategy Area_Explore"));

        let cat: BTreeMap<_, _> = render_tool_scripts(ScriptDialect::Catapult, &ctx, None).into_iter().collect();
        assert!(cat["project.tcl"].contains("-CLOCK_PERIOD 3.3"));
        assert!(cat["project.tcl"].contains("directive set /fir -DATAFLOW true"));
    }

    #[test]
    fn adapter_registry() {
        assert_eq!(build_adapter(&AdapterConfig::named("mock")).unwrap().descriptor().tool_binary, None);
        let v = build_adapter(&AdapterConfig::named("vitis")).unwrap();
        assert_eq!(v.descriptor().supports, StageId::ALL.to_vec());
        assert!(matches!(
            build_adapter(&AdapterConfig::named("quartus")),
            Err(ToolchainError::UnknownAdapter(_))
        ));
    }

    #[test]
    fn stage_order() {
        assert!(StageId::Compile < StageId::CSim && StageId::CSim < StageId::Synth && StageId::Synth < StageId::Impl);
        assert_eq!(StageId::Synth.predecessors().collect::<Vec<_>>(), vec![StageId::Compile, StageId::CSim]);
    }

    fn arb_profile() -> impl Strategy<Value = MockProfile> {
        (1u64..100_000, 1u64..10_000, 1u64..10_000, 0.5f64..9.0, 1.0f64..500.0).prop_map(
            |(base_cycles, base_lut, base_ff, min_period_ns, base_power_mw)| MockProfile {
                base_cycles,
                base_lut,
                base_ff,
                min_period_ns,
                base_power_mw,
                ..MockProfile::default()
            },
        )
    }

    proptest! {
        #[test]
        fn gating_is_monotone(p in arb_profile(), fail in proptest::option::of(0usize..4), clock in 1.0f64..12.0) {
            let p = MockProfile { fail_at: fail.map(|i| StageId::ALL[i]), ..p };
            let point = DsePoint::new(PointValues { clock_period_ns: clock, ..PointValues::default() });
            let (stages, _) = mock_evaluate(&p, &point);
            let statuses: Vec<_> = stages.into_values().collect();
            if let Some(first_bad) = statuses.iter().position(|s| *s != StageStatus::Pass) {
                prop_assert!(statuses[first_bad + 1..].iter().all(|s| *s == StageStatus::NotRun));
            }
        }
    }
}
