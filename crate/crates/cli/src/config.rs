// SPDX-License-Identifier: Apache-2.0

//! `hlsbench.yaml` loading and flag overrides.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use hlsbench::dse::{parse_dse_spec, DseSpec, ExplorationPolicy};
use hlsbench::engine::RunSpec;
use hlsbench::gateway::ModelConfig;
use hlsbench::toolchain::{AdapterConfig, StageTimeouts, ToolchainSettings, DEFAULT_TARGET_PART};

pub const DEFAULT_CONFIG: &str = "hlsbench.yaml";

/// The `adapter:` key accepts either a bare name or a full block.
#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(untagged)]
pub enum AdapterEntry {
    Name(String),
    Full(AdapterConfig),
}

/// On-disk configuration. Relative paths are resolved against the file's
/// directory.
#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub corpus: Option<PathBuf>,
    pub adapter: Option<AdapterEntry>,
    pub model: Option<ModelConfig>,
    pub k: Option<usize>,
    pub jobs: Option<usize>,
    pub policy: Option<ExplorationPolicy>,
    pub target_part: Option<String>,
    pub timeouts: Option<StageTimeouts>,
    pub output_dir: Option<PathBuf>,
    pub dse_defaults: Option<PathBuf>,
    pub run_id: Option<String>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut cfg: FileConfig =
            serde_yaml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new(""));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        cfg.corpus.as_mut().map(resolve);
        cfg.output_dir.as_mut().map(resolve);
        cfg.dse_defaults.as_mut().map(resolve);
        if let Some(m) = cfg.model.as_mut() {
            resolve(&mut m.cache_dir);
        }
        if let Some(AdapterEntry::Full(a)) = cfg.adapter.as_mut() {
            a.extra_template.as_mut().map(resolve);
        }
        Ok(cfg)
    }

    /// Explicit `--config`, else `./hlsbench.yaml` when present.
    pub fn discover(explicit: Option<&Path>) -> Result<Self> {
        match explicit {
            Some(p) => Self::load(p),
            None if Path::new(DEFAULT_CONFIG).is_file() => Self::load(Path::new(DEFAULT_CONFIG)),
            None => Ok(FileConfig::default()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AdapterName {
    Mock,
    Vitis,
    Catapult,
}

impl AdapterName {
    fn as_str(self) -> &'static str {
        match self {
            AdapterName::Mock => "mock",
            AdapterName::Vitis => "vitis",
            AdapterName::Catapult => "catapult",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PolicyMode {
    Exhaustive,
    Capped,
    Random,
}

/// Exploration policy flags shared by `evaluate` and `dse expand`.
#[derive(Debug, Clone, Default, Args)]
pub struct PolicyFlags {
    #[arg(long, value_enum)]
    pub policy: Option<PolicyMode>,
    #[arg(long)]
    pub max_points: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Keep points that differ only in knobs with no effect.
    #[arg(long)]
    pub no_prune: bool,
}

impl PolicyFlags {
    pub fn apply(&self, base: Option<ExplorationPolicy>) -> Result<ExplorationPolicy> {
        let mut policy = match self.policy {
            None => base.unwrap_or_default(),
            Some(PolicyMode::Exhaustive) => ExplorationPolicy::exhaustive(true),
            Some(PolicyMode::Capped) => {
                let Some(n) = self.max_points else {
                    bail!("--policy capped needs --max-points");
                };
                ExplorationPolicy::capped(n)
            }
            Some(PolicyMode::Random) => {
                let (Some(n), Some(seed)) = (self.max_points, self.seed) else {
                    bail!("--policy random needs --max-points and --seed");
                };
                ExplorationPolicy::random(n, seed)
            }
        };
        if self.policy.is_none() && (self.max_points.is_some() || self.seed.is_some()) {
            bail!("--max-points/--seed need --policy");
        }
        if matches!(self.max_points, Some(0)) {
            bail!("--max-points must be positive");
        }
        if self.no_prune {
            policy.prune_dependent = false;
        }
        Ok(policy)
    }
}

/// Flags that override `hlsbench.yaml` for generation and evaluation.
#[derive(Debug, Clone, Default, Args)]
pub struct RunFlags {
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub adapter: Option<AdapterName>,
    /// Tool executable for the vitis/catapult adapters.
    #[arg(long)]
    pub tool_binary: Option<PathBuf>,
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub cache_dir: Option<PathBuf>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub jobs: Option<usize>,
    #[arg(long)]
    pub part: Option<String>,
    #[command(flatten)]
    pub policy: PolicyFlags,
    /// Directory holding runs and generated candidates.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub run_id: Option<String>,
    #[arg(long)]
    pub dse_defaults: Option<PathBuf>,
    #[arg(long)]
    pub timeout_compile: Option<f64>,
    #[arg(long)]
    pub timeout_csim: Option<f64>,
    #[arg(long)]
    pub timeout_synth: Option<f64>,
    #[arg(long)]
    pub timeout_impl: Option<f64>,
}

/// Fully resolved settings for one invocation.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub corpus_path: PathBuf,
    pub adapter: AdapterConfig,
    pub model: ModelConfig,
    pub k: usize,
    pub jobs: usize,
    pub policy: ExplorationPolicy,
    pub target_part: String,
    pub timeouts: StageTimeouts,
    pub output_dir: PathBuf,
    pub dse_defaults_path: Option<PathBuf>,
    pub run_id: Option<String>,
}

impl RunConfig {
    /// Flags win over the file, the file over built-in defaults.
    pub fn resolve(file: FileConfig, flags: &RunFlags) -> Result<Self> {
        let mut adapter = match file.adapter {
            Some(AdapterEntry::Name(n)) => AdapterConfig::named(&n),
            Some(AdapterEntry::Full(a)) => a,
            None => AdapterConfig::named("mock"),
        };
        if let Some(name) = flags.adapter {
            if adapter.name != name.as_str() {
                adapter = AdapterConfig::named(name.as_str());
            }
        }
        if let Some(bin) = &flags.tool_binary {
            adapter.tool_binary = Some(bin.clone());
        }

        let mut model = file
            .model
            .unwrap_or_else(|| ModelConfig::replay("replay", ".hlsbench-cache"));
        if let Some(id) = &flags.model {
            model.model_id = id.clone();
        }
        if let Some(dir) = &flags.cache_dir {
            model.cache_dir = dir.clone();
        }

        let mut timeouts = file.timeouts.unwrap_or_default();
        for (flag, slot) in [
            (flags.timeout_compile, &mut timeouts.compile),
            (flags.timeout_csim, &mut timeouts.csim),
            (flags.timeout_synth, &mut timeouts.synth),
            (flags.timeout_impl, &mut timeouts.implementation),
        ] {
            if let Some(v) = flag {
                if v.is_nan() || v <= 0.0 {
                    bail!("timeouts must be positive");
                }
                *slot = v;
            }
        }

        let target_part = flags
            .part
            .clone()
            .or(file.target_part)
            .or_else(|| adapter.default_target_part.clone())
            .unwrap_or_else(|| DEFAULT_TARGET_PART.to_string());

        let k = flags.k.or(file.k).unwrap_or(1);
        let jobs = flags.jobs.or(file.jobs).unwrap_or(1);
        if k == 0 || jobs == 0 {
            bail!("--k and --jobs must be at least 1");
        }

        Ok(RunConfig {
            corpus_path: flags
                .corpus
                .clone()
                .or(file.corpus)
                .unwrap_or_else(|| PathBuf::from("corpus")),
            adapter,
            model,
            k,
            jobs,
            policy: flags.policy.apply(file.policy)?,
            target_part,
            timeouts,
            output_dir: flags.out.clone().or(file.output_dir).unwrap_or_else(|| PathBuf::from("runs")),
            dse_defaults_path: flags.dse_defaults.clone().or(file.dse_defaults),
            run_id: flags.run_id.clone().or(file.run_id),
        })
    }

    pub fn dse_defaults(&self) -> Result<DseSpec> {
        match &self.dse_defaults_path {
            None => Ok(DseSpec::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                parse_dse_spec(&text).with_context(|| format!("parsing {}", p.display()))
            }
        }
    }

    pub fn run_spec(&self, run_id: String) -> Result<RunSpec> {
        Ok(RunSpec {
            run_id,
            corpus_path: self.corpus_path.clone(),
            model: self.model.clone(),
            k: self.k,
            policy: self.policy,
            dse_defaults: self.dse_defaults()?,
            adapter: self.adapter.clone(),
            toolchain: ToolchainSettings {
                target_part: self.target_part.clone(),
                timeouts: self.timeouts,
            },
        })
    }
}
