// SPDX-License-Identifier: Apache-2.0

mod config;
mod report;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use hlsbench::corpus::{load_corpus, validate_task, CorpusError, Finding, Severity};
use hlsbench::dse::{expand, parse_dse_file};
use hlsbench::engine::{self, EngineError, RunReport};
use hlsbench::gateway::{ExtractionStatus, Gateway, GatewayError};
use hlsbench::reports::{merge_ppa, parse_hls_synth_report, parse_impl_report, ImplReportTexts, ReportFormat};
use hlsbench::toolchain::build_adapter;

use config::{FileConfig, PolicyFlags, RunConfig, RunFlags};

#[derive(Parser)]
#[command(name = "hlsbench", version, about = "Evaluate LLM-generated HLS designs")]
struct Cli {
    /// Configuration file (default: ./hlsbench.yaml when present).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Corpus maintenance.
    Corpus {
        #[command(subcommand)]
        command: CorpusCommand,
    },
    /// Sample candidates for every task and store them.
    Generate {
        #[command(flatten)]
        run: RunFlags,
    },
    /// Run the evaluation pipeline and write a run report.
    Evaluate {
        #[command(flatten)]
        run: RunFlags,
        /// Query the model backend for responses missing from the cache.
        #[arg(long)]
        generate: bool,
        /// Continue the run named by --run-id.
        #[arg(long)]
        resume: bool,
    },
    /// Design-space utilities.
    Dse {
        #[command(subcommand)]
        command: DseCommand,
    },
    /// Metric tables and plot data for finished runs.
    Report {
        #[arg(required = true)]
        run_ids: Vec<String>,
        /// Directory holding the runs.
        #[arg(long, default_value = "runs")]
        runs_dir: PathBuf,
        #[arg(long, value_enum, default_value = "csv")]
        format: TableFormat,
        /// Also write plot-ready CSV series.
        #[arg(long)]
        plots: bool,
        /// Output directory (default: <runs-dir>/reports/<run ids>).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Parse tool reports into a PPA record.
    ParseReport {
        #[arg(long, default_value = "generic_kv")]
        format: ReportFormat,
        #[arg(long)]
        synth: PathBuf,
        #[arg(long, requires_all = ["power", "clock"])]
        timing: Option<PathBuf>,
        #[arg(long, requires = "timing")]
        power: Option<PathBuf>,
        #[arg(long, requires = "timing")]
        util: Option<PathBuf>,
        /// Clock constraint used for implementation, in ns.
        #[arg(long)]
        clock: Option<f64>,
    },
}

#[derive(Subcommand)]
enum CorpusCommand {
    /// Check every task; exit 1 when any error-severity finding exists.
    Validate {
        #[arg(long)]
        corpus: Option<PathBuf>,
        /// Also write the findings as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum DseCommand {
    /// Print the points a DSE spec expands to.
    Expand {
        spec: PathBuf,
        #[command(flatten)]
        policy: PolicyFlags,
        #[arg(long, value_enum, default_value = "json")]
        format: ExpandFormat,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum TableFormat {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum ExpandFormat {
    Json,
    Count,
}

/// An error carrying its exit status.
#[derive(Debug)]
struct Exit(u8);

impl std::fmt::Display for Exit {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "exit {}", self.0)
    }
}

impl std::error::Error for Exit {}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<EngineError>() {
            return match e {
                EngineError::UnknownRun(_) | EngineError::Config(_) | EngineError::Io { .. } => 2,
                EngineError::CorruptState(_) => 3,
                EngineError::Corpus(CorpusError::MissingRoot(_) | CorpusError::Io { .. }) => 2,
                _ => 1,
            };
        }
        if let Some(CorpusError::MissingRoot(_) | CorpusError::Io { .. }) = cause.downcast_ref::<CorpusError>() {
            return 2;
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return 2;
        }
    }
    1
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            if let Some(Exit(code)) = err.downcast_ref::<Exit>() {
                return ExitCode::from(*code);
            }
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Corpus {
            command: CorpusCommand::Validate { corpus, json },
        } => {
            let file = FileConfig::discover(cli.config.as_deref())?;
            let root = corpus.or(file.corpus).unwrap_or_else(|| PathBuf::from("corpus"));
            cmd_corpus_validate(&root, json.as_deref())
        }
        Command::Generate { run } => {
            let cfg = RunConfig::resolve(FileConfig::discover(cli.config.as_deref())?, &run)?;
            cmd_generate(&cfg)
        }
        Command::Evaluate { run, generate, resume } => {
            let cfg = RunConfig::resolve(FileConfig::discover(cli.config.as_deref())?, &run)?;
            cmd_evaluate(&cfg, generate, resume)
        }
        Command::Dse {
            command: DseCommand::Expand { spec, policy, format },
        } => cmd_dse_expand(&spec, &policy, format),
        Command::Report {
            run_ids,
            runs_dir,
            format,
            plots,
            out,
        } => cmd_report(&run_ids, &runs_dir, format, plots, out),
        Command::ParseReport {
            format,
            synth,
            timing,
            power,
            util,
            clock,
        } => cmd_parse_report(format, &synth, timing, power, util, clock),
    }
}

#[derive(Serialize)]
struct TaskFinding<'a> {
    task_id: &'a str,
    #[serde(flatten)]
    finding: &'a Finding,
}

fn severity_str(s: Severity) -> &'static str {
    match s {
        Severity::Error => "error",
        Severity::Warning => "warning",
    }
}

fn cmd_corpus_validate(root: &Path, json: Option<&Path>) -> Result<u8> {
    let findings: Vec<(String, Finding)> = match load_corpus(root) {
        Ok(corpus) => corpus
            .tasks
            .iter()
            .flat_map(|t| validate_task(t).into_iter().map(|f| (t.id.clone(), f)))
            .collect(),
        Err(e @ (CorpusError::MissingRoot(_) | CorpusError::Io { .. })) => return Err(e.into()),
        Err(e) => {
            let task = match &e {
                CorpusError::MissingFile { task, .. }
                | CorpusError::SignatureMismatch { task, .. }
                | CorpusError::BadMeta { task, .. } => task.clone(),
                CorpusError::InvalidTaskId(name) | CorpusError::DuplicateId(name) => name.clone(),
                _ => String::new(),
            };
            let code = match &e {
                CorpusError::MissingFile { .. } => "MISSING_FILE",
                CorpusError::SignatureMismatch { .. } => "SIGNATURE_MISSING",
                CorpusError::BadMeta { .. } => "BAD_META",
                CorpusError::InvalidTaskId(_) => "BAD_ID",
                CorpusError::DuplicateId(_) => "DUPLICATE_ID",
                _ => "UNSUPPORTED_VERSION",
            };
            vec![(
                task,
                Finding {
                    severity: Severity::Error,
                    code: code.into(),
                    message: e.to_string(),
                },
            )]
        }
    };

    for (task, f) in &findings {
        println!("{} {} {}: {}", severity_str(f.severity), task, f.code, f.message);
    }
    if let Some(path) = json {
        let doc: Vec<TaskFinding> = findings
            .iter()
            .map(|(t, f)| TaskFinding { task_id: t, finding: f })
            .collect();
        fs::write(path, serde_json::to_string_pretty(&doc)? + "\n")
            .with_context(|| format!("writing {}", path.display()))?;
    }
    let errors = findings.iter().filter(|(_, f)| f.severity == Severity::Error).count();
    eprintln!("{} finding(s), {errors} error(s)", findings.len());
    Ok(u8::from(errors > 0))
}

fn cmd_generate(cfg: &RunConfig) -> Result<u8> {
    let corpus = load_corpus(&cfg.corpus_path)?;
    let gateway = Gateway::from_config(cfg.model.clone())?;
    let out = cfg.output_dir.join("candidates").join(&cfg.model.model_id);
    let mut failed = 0;
    let (mut ok, mut no_code, mut no_sig) = (0, 0, 0);
    for task in &corpus.tasks {
        let candidates = match gateway.sample_candidates(task, cfg.k) {
            Ok(c) => c,
            Err(e @ GatewayError::InvalidConfig(_)) => return Err(e.into()),
            Err(e) => {
                eprintln!("{}: {e}", task.id);
                failed += 1;
                continue;
            }
        };
        let dir = out.join(&task.id);
        fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        for c in &candidates {
            match c.extraction_status {
                ExtractionStatus::Ok => ok += 1,
                ExtractionStatus::NoCodeBlock => no_code += 1,
                ExtractionStatus::SignatureMissing => no_sig += 1,
            }
            let path = dir.join(format!("sample_{}.json", c.sample_index));
            fs::write(&path, serde_json::to_string_pretty(c)? + "\n")
                .with_context(|| format!("writing {}", path.display()))?;
            if let Some(src) = &c.source {
                fs::write(dir.join(format!("sample_{}.cpp", c.sample_index)), src)?;
            }
        }
    }
    println!(
        "{} task(s), k={}: {ok} extracted, {no_code} without code, {no_sig} missing the signature, {failed} task(s) failed",
        corpus.tasks.len(),
        cfg.k
    );
    Ok(u8::from(failed > 0))
}

fn default_run_id() -> String {
    let now = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map_or(0, |d| d.as_secs());
    format!("run-{now}")
}

fn cmd_evaluate(cfg: &RunConfig, generate: bool, resume: bool) -> Result<u8> {
    let report = if resume {
        let Some(run_id) = &cfg.run_id else {
            bail!("--resume needs --run-id");
        };
        engine::resume_run(&cfg.output_dir, run_id, cfg.jobs)?
    } else {
        let run_id = cfg.run_id.clone().unwrap_or_else(default_run_id);
        let corpus = load_corpus(&cfg.corpus_path).map_err(EngineError::from)?;
        let gateway = if generate {
            Gateway::from_config(cfg.model.clone()).map_err(|e| EngineError::Config(e.to_string()))?
        } else {
            Gateway::replay_only(cfg.model.clone())
        };
        let adapter = build_adapter(&cfg.adapter).map_err(EngineError::from)?;
        let spec = cfg.run_spec(run_id)?;
        engine::run_benchmark(&corpus, &gateway, adapter.as_ref(), &spec, &cfg.output_dir, cfg.jobs)?
    };
    print_run(&report);
    Ok(u8::from(!report.summary.generation_failures.is_empty()))
}

fn print_run(report: &RunReport) {
    let s = &report.summary;
    println!(
        "run {} ({}, k={}): {} task(s), {} record(s), {} skip(s)",
        s.run_id, s.model_id, s.k, s.tasks, s.records, s.skips
    );
    print!("{}", report::pass_table(std::slice::from_ref(report)));
    if let Some(f) = s.dse_improved_fraction {
        println!("dse improved (>= {}%): {:.2}%", s.dse_improved_threshold_pct, f * 100.0);
    }
    if !s.generation_failures.is_empty() {
        println!("generation failed for: {}", s.generation_failures.join(", "));
    }
}

fn cmd_dse_expand(path: &Path, flags: &PolicyFlags, format: ExpandFormat) -> Result<u8> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let (spec, file_policy) = parse_dse_file(&text)?;
    let policy = flags.apply(file_policy)?;
    let points = expand(&spec, &policy);
    match format {
        ExpandFormat::Json => println!("{}", serde_json::to_string_pretty(&points)?),
        ExpandFormat::Count => println!("{}", points.len()),
    }
    Ok(0)
}

fn cmd_report(run_ids: &[String], runs_dir: &Path, format: TableFormat, plots: bool, out: Option<PathBuf>) -> Result<u8> {
    let reports = run_ids
        .iter()
        .map(|id| engine::load_report(runs_dir, id))
        .collect::<Result<Vec<_>, _>>()?;
    let out = out.unwrap_or_else(|| runs_dir.join("reports").join(run_ids.join("+")));
    let mut written = match format {
        TableFormat::Csv => report::write_tables(&reports, &out)?,
        TableFormat::Json => vec![report::write_json(&reports, &out)?],
    };
    if plots {
        written.extend(report::write_plots(&reports, &out)?);
    }
    print!("{}", report::pass_table(&reports));
    for p in written {
        eprintln!("wrote {}", p.display());
    }
    Ok(0)
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn cmd_parse_report(
    format: ReportFormat,
    synth: &Path,
    timing: Option<PathBuf>,
    power: Option<PathBuf>,
    util: Option<PathBuf>,
    clock: Option<f64>,
) -> Result<u8> {
    let synth_part = parse_hls_synth_report(&read(synth)?, format)?;
    let imp = match timing {
        None => None,
        Some(t) => {
            let texts = ImplReportTexts {
                timing: read(&t)?,
                power: power.as_deref().map(read).transpose()?.unwrap_or_default(),
                util: util.as_deref().map(read).transpose()?.unwrap_or_default(),
            };
            Some(parse_impl_report(&texts, format, clock.expect("clap requires --clock"))?)
        }
    };
    let ppa = merge_ppa(&synth_part, imp.as_ref())?;
    println!("{}", serde_json::to_string_pretty(&ppa)?);
    Ok(0)
}
