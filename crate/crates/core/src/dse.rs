// SPDX-License-Identifier: Apache-2.0

//! Declarative design-space specs, their expansion into concrete points, and
//! a tool-agnostic directive IR for each point.

use std::collections::HashSet;
use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub const DEFAULT_CLOCK_NS: f64 = 10.0;

#[derive(Debug, Error)]
pub enum DseError {
    #[error("yaml syntax: {0}")]
    YamlSyntax(String),
    #[error("{key}: {message}")]
    DomainViolation { key: &'static str, message: String },
    #[error("invalid exploration policy: {0}")]
    InvalidPolicy(String),
}

fn violation(key: &'static str, message: impl Into<String>) -> DseError {
    DseError::DomainViolation {
        key,
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub enum BackendStrategy {
    #[default]
    Default,
    #[serde(rename = "Performance_Explore")]
    PerformanceExplore,
    #[serde(rename = "Area_Explore")]
    AreaExplore,
}

impl BackendStrategy {
    pub fn as_str(self) -> &'static str {
        match self {
            BackendStrategy::Default => "Default",
            BackendStrategy::PerformanceExplore => "Performance_Explore",
            BackendStrategy::AreaExplore => "Area_Explore",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "Default" => Some(BackendStrategy::Default),
            "Performance_Explore" => Some(BackendStrategy::PerformanceExplore),
            "Area_Explore" => Some(BackendStrategy::AreaExplore),
            _ => None,
        }
    }
}

impl fmt::Display for BackendStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Value lists for each tunable knob. Every list is non-empty and duplicate
/// free once it has passed [`parse_dse_spec`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DseSpec {
    pub clock_period_ns: Vec<f64>,
    pub enable_pipeline: Vec<bool>,
    pub pipeline_ii: Vec<u32>,
    pub enable_dataflow: Vec<bool>,
    pub unroll_factor: Vec<u32>,
    pub array_partition_factor: Vec<u32>,
    /// `0` disables the allocation limit.
    pub allocation_limit_add: Vec<u32>,
    pub dsp_full_reg: Vec<bool>,
    pub backend_strategy: Vec<BackendStrategy>,
}

impl Default for DseSpec {
    fn default() -> Self {
        DseSpec {
            clock_period_ns: vec![DEFAULT_CLOCK_NS],
            enable_pipeline: vec![false],
            pipeline_ii: vec![1],
            enable_dataflow: vec![false],
            unroll_factor: vec![1],
            array_partition_factor: vec![1],
            allocation_limit_add: vec![0],
            dsp_full_reg: vec![false],
            backend_strategy: vec![BackendStrategy::Default],
        }
    }
}

impl DseSpec {
    /// List lengths in key order.
    pub fn dimensions(&self) -> [usize; 9] {
        [
            self.clock_period_ns.len(),
            self.enable_pipeline.len(),
            self.pipeline_ii.len(),
            self.enable_dataflow.len(),
            self.unroll_factor.len(),
            self.array_partition_factor.len(),
            self.allocation_limit_add.len(),
            self.dsp_full_reg.len(),
            self.backend_strategy.len(),
        ]
    }

    pub fn cartesian_size(&self) -> usize {
        self.dimensions().iter().product()
    }

    /// Check list domains. [`parse_dse_spec`] calls this; specs built in code
    /// should too.
    pub fn validate(&self) -> Result<(), DseError> {
        fn non_empty_unique<T: PartialEq>(key: &'static str, values: &[T]) -> Result<(), DseError> {
            if values.is_empty() {
                return Err(violation(key, "list must not be empty"));
            }
            for (i, v) in values.iter().enumerate() {
                if values[..i].contains(v) {
                    return Err(violation(key, "duplicate value"));
                }
            }
            Ok(())
        }
        non_empty_unique("clock_period_ns", &self.clock_period_ns)?;
        non_empty_unique("enable_pipeline", &self.enable_pipeline)?;
        non_empty_unique("pipeline_ii", &self.pipeline_ii)?;
        non_empty_unique("enable_dataflow", &self.enable_dataflow)?;
        non_empty_unique("unroll_factor", &self.unroll_factor)?;
        non_empty_unique("array_partition_factor", &self.array_partition_factor)?;
        non_empty_unique("allocation_limit_add", &self.allocation_limit_add)?;
        non_empty_unique("dsp_full_reg", &self.dsp_full_reg)?;
        non_empty_unique("backend_strategy", &self.backend_strategy)?;

        if let Some(c) = self.clock_period_ns.iter().find(|c| !(c.is_finite() && **c > 0.0)) {
            return Err(violation("clock_period_ns", format!("{c} is not a positive period")));
        }
        for (key, values) in [
            ("pipeline_ii", &self.pipeline_ii),
            ("unroll_factor", &self.unroll_factor),
            ("array_partition_factor", &self.array_partition_factor),
        ] {
            if values.contains(&0) {
                return Err(violation(key, "values must be >= 1"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    clock_period_ns: Option<Vec<f64>>,
    enable_pipeline: Option<Vec<bool>>,
    pipeline_ii: Option<Vec<i64>>,
    enable_dataflow: Option<Vec<bool>>,
    unroll_factor: Option<Vec<i64>>,
    array_partition_factor: Option<Vec<i64>>,
    allocation_limit_add: Option<Vec<i64>>,
    dsp_full_reg: Option<Vec<bool>>,
    #[serde(alias = "backend_strategy")]
    vivado_strategy: Option<Vec<String>>,
    policy: Option<RawPolicy>,
}

fn ints(key: &'static str, values: Vec<i64>, min: i64) -> Result<Vec<u32>, DseError> {
    values
        .into_iter()
        .map(|v| {
            if v < min {
                Err(violation(key, format!("{v} is below the minimum {min}")))
            } else {
                u32::try_from(v).map_err(|_| violation(key, format!("{v} is out of range")))
            }
        })
        .collect()
}

fn parse_raw(yaml_text: &str) -> Result<RawSpec, DseError> {
    let value: serde_yaml::Value =
        serde_yaml::from_str(yaml_text).map_err(|e| DseError::YamlSyntax(e.to_string()))?;
    let value = match value {
        serde_yaml::Value::Null => serde_yaml::Value::Mapping(Default::default()),
        v => v,
    };
    serde_yaml::from_value(value).map_err(|e| DseError::YamlSyntax(e.to_string()))
}

fn spec_from_raw(raw: RawSpec) -> Result<DseSpec, DseError> {
    let defaults = DseSpec::default();
    let strategies = match raw.vivado_strategy {
        None => defaults.backend_strategy,
        Some(names) => names
            .iter()
            .map(|n| {
                BackendStrategy::parse(n)
                    .ok_or_else(|| violation("vivado_strategy", format!("unknown strategy `{n}`")))
            })
            .collect::<Result<_, _>>()?,
    };
    let spec = DseSpec {
        clock_period_ns: raw.clock_period_ns.unwrap_or(defaults.clock_period_ns),
        enable_pipeline: raw.enable_pipeline.unwrap_or(defaults.enable_pipeline),
        pipeline_ii: match raw.pipeline_ii {
            Some(v) => ints("pipeline_ii", v, 1)?,
            None => defaults.pipeline_ii,
        },
        enable_dataflow: raw.enable_dataflow.unwrap_or(defaults.enable_dataflow),
        unroll_factor: match raw.unroll_factor {
            Some(v) => ints("unroll_factor", v, 1)?,
            None => defaults.unroll_factor,
        },
        array_partition_factor: match raw.array_partition_factor {
            Some(v) => ints("array_partition_factor", v, 1)?,
            None => defaults.array_partition_factor,
        },
        allocation_limit_add: match raw.allocation_limit_add {
            Some(v) => ints("allocation_limit_add", v, 0)?,
            None => defaults.allocation_limit_add,
        },
        dsp_full_reg: raw.dsp_full_reg.unwrap_or(defaults.dsp_full_reg),
        backend_strategy: strategies,
    };
    spec.validate()?;
    Ok(spec)
}

/// Parse a DSE YAML document. Missing keys fall back to the tool default as
/// a singleton list. An optional `policy:` block is accepted and ignored
/// here; see [`parse_dse_file`].
pub fn parse_dse_spec(yaml_text: &str) -> Result<DseSpec, DseError> {
    spec_from_raw(parse_raw(yaml_text)?)
}

/// Parse a DSE YAML document together with its optional `policy:` block.
pub fn parse_dse_file(yaml_text: &str) -> Result<(DseSpec, Option<ExplorationPolicy>), DseError> {
    let mut raw = parse_raw(yaml_text)?;
    let policy = raw.policy.take().map(ExplorationPolicy::try_from).transpose()?;
    Ok((spec_from_raw(raw)?, policy))
}

/// One concrete assignment of every knob.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DsePoint {
    pub point_id: String,
    pub clock_period_ns: f64,
    pub enable_pipeline: bool,
    pub pipeline_ii: u32,
    pub enable_dataflow: bool,
    pub unroll_factor: u32,
    pub array_partition_factor: u32,
    pub allocation_limit_add: u32,
    pub dsp_full_reg: bool,
    pub backend_strategy: BackendStrategy,
}

/// Knob values without an id; turned into a [`DsePoint`] by [`DsePoint::new`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointValues {
    pub clock_period_ns: f64,
    pub enable_pipeline: bool,
    pub pipeline_ii: u32,
    pub enable_dataflow: bool,
    pub unroll_factor: u32,
    pub array_partition_factor: u32,
    pub allocation_limit_add: u32,
    pub dsp_full_reg: bool,
    pub backend_strategy: BackendStrategy,
}

impl Default for PointValues {
    fn default() -> Self {
        PointValues {
            clock_period_ns: DEFAULT_CLOCK_NS,
            enable_pipeline: false,
            pipeline_ii: 1,
            enable_dataflow: false,
            unroll_factor: 1,
            array_partition_factor: 1,
            allocation_limit_add: 0,
            dsp_full_reg: false,
            backend_strategy: BackendStrategy::Default,
        }
    }
}

impl DsePoint {
    pub fn new(v: PointValues) -> Self {
        let canonical = format!(
            "clock={}|pipeline={}|ii={}|dataflow={}|unroll={}|partition={}|alloc_add={}|dsp_full_reg={}|strategy={}",
            v.clock_period_ns,
            v.enable_pipeline,
            v.pipeline_ii,
            v.enable_dataflow,
            v.unroll_factor,
            v.array_partition_factor,
            v.allocation_limit_add,
            v.dsp_full_reg,
            v.backend_strategy,
        );
        let digest = Sha256::digest(canonical.as_bytes());
        DsePoint {
            point_id: hex::encode(&digest[..8]),
            clock_period_ns: v.clock_period_ns,
            enable_pipeline: v.enable_pipeline,
            pipeline_ii: v.pipeline_ii,
            enable_dataflow: v.enable_dataflow,
            unroll_factor: v.unroll_factor,
            array_partition_factor: v.array_partition_factor,
            allocation_limit_add: v.allocation_limit_add,
            dsp_full_reg: v.dsp_full_reg,
            backend_strategy: v.backend_strategy,
        }
    }

    /// The all-defaults point (no directives beyond a 10 ns clock).
    pub fn baseline() -> Self {
        DsePoint::new(PointValues::default())
    }

    pub fn values(&self) -> PointValues {
        PointValues {
            clock_period_ns: self.clock_period_ns,
            enable_pipeline: self.enable_pipeline,
            pipeline_ii: self.pipeline_ii,
            enable_dataflow: self.enable_dataflow,
            unroll_factor: self.unroll_factor,
            array_partition_factor: self.array_partition_factor,
            allocation_limit_add: self.allocation_limit_add,
            dsp_full_reg: self.dsp_full_reg,
            backend_strategy: self.backend_strategy,
        }
    }

    /// Same point with `pipeline_ii` forced to 1 when pipelining is off.
    pub fn normalized(&self) -> Self {
        if self.enable_pipeline || self.pipeline_ii == 1 {
            return self.clone();
        }
        DsePoint::new(PointValues {
            pipeline_ii: 1,
            ..self.values()
        })
    }

    pub fn is_baseline(&self) -> bool {
        self.normalized().point_id == DsePoint::baseline().point_id
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum ExplorationMode {
    Exhaustive,
    /// First `max_points` points in enumeration order.
    Capped { max_points: usize },
    /// Seeded uniform sample of `max_points` points, kept in enumeration order.
    Random { max_points: usize, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawPolicy", into = "RawPolicy")]
pub struct ExplorationPolicy {
    pub mode: ExplorationMode,
    /// Collapse `pipeline_ii` when pipelining is disabled.
    pub prune_dependent: bool,
}

impl Default for ExplorationPolicy {
    fn default() -> Self {
        ExplorationPolicy {
            mode: ExplorationMode::Exhaustive,
            prune_dependent: true,
        }
    }
}

impl ExplorationPolicy {
    pub fn exhaustive(prune_dependent: bool) -> Self {
        ExplorationPolicy {
            mode: ExplorationMode::Exhaustive,
            prune_dependent,
        }
    }

    pub fn capped(max_points: usize) -> Self {
        ExplorationPolicy {
            mode: ExplorationMode::Capped { max_points },
            prune_dependent: true,
        }
    }

    pub fn random(max_points: usize, seed: u64) -> Self {
        ExplorationPolicy {
            mode: ExplorationMode::Random { max_points, seed },
            prune_dependent: true,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawPolicy {
    #[serde(default = "default_mode")]
    pub mode: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_points: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default = "default_true")]
    pub prune_dependent: bool,
}

fn default_mode() -> String {
    "exhaustive".into()
}

fn default_true() -> bool {
    true
}

impl TryFrom<RawPolicy> for ExplorationPolicy {
    type Error = DseError;

    fn try_from(raw: RawPolicy) -> Result<Self, Self::Error> {
        let positive = |max: Option<usize>| match max {
            Some(0) => Err(DseError::InvalidPolicy("max_points must be positive".into())),
            Some(n) => Ok(n),
            None => Err(DseError::InvalidPolicy(format!("{} mode requires max_points", raw.mode))),
        };
        let mode = match raw.mode.as_str() {
            "exhaustive" => ExplorationMode::Exhaustive,
            "capped" => ExplorationMode::Capped {
                max_points: positive(raw.max_points)?,
            },
            "random" => ExplorationMode::Random {
                max_points: positive(raw.max_points)?,
                seed: raw
                    .seed
                    .ok_or_else(|| DseError::InvalidPolicy("random mode requires a seed".into()))?,
            },
            other => return Err(DseError::InvalidPolicy(format!("unknown mode `{other}`"))),
        };
        Ok(ExplorationPolicy {
            mode,
            prune_dependent: raw.prune_dependent,
        })
    }
}

impl From<ExplorationPolicy> for RawPolicy {
    fn from(p: ExplorationPolicy) -> Self {
        let (mode, max_points, seed) = match p.mode {
            ExplorationMode::Exhaustive => ("exhaustive", None, None),
            ExplorationMode::Capped { max_points } => ("capped", Some(max_points), None),
            ExplorationMode::Random { max_points, seed } => ("random", Some(max_points), Some(seed)),
        };
        RawPolicy {
            mode: mode.into(),
            max_points,
            seed,
            prune_dependent: p.prune_dependent,
        }
    }
}

fn point_at(spec: &DseSpec, mut index: usize) -> DsePoint {
    // mixed radix, last key varies fastest
    let dims = spec.dimensions();
    let mut digits = [0usize; 9];
    for (slot, radix) in digits.iter_mut().zip(dims.iter()).rev() {
        *slot = index % radix;
        index /= radix;
    }
    DsePoint::new(PointValues {
        clock_period_ns: spec.clock_period_ns[digits[0]],
        enable_pipeline: spec.enable_pipeline[digits[1]],
        pipeline_ii: spec.pipeline_ii[digits[2]],
        enable_dataflow: spec.enable_dataflow[digits[3]],
        unroll_factor: spec.unroll_factor[digits[4]],
        array_partition_factor: spec.array_partition_factor[digits[5]],
        allocation_limit_add: spec.allocation_limit_add[digits[6]],
        dsp_full_reg: spec.dsp_full_reg[digits[7]],
        backend_strategy: spec.backend_strategy[digits[8]],
    })
}

/// Expand a spec into its solution set under `policy`. Output order is the
/// enumeration order of the key list (first key outermost).
pub fn expand(spec: &DseSpec, policy: &ExplorationPolicy) -> Vec<DsePoint> {
    let total = spec.cartesian_size();
    let mut points = Vec::with_capacity(total);
    let mut seen = HashSet::with_capacity(total);
    for index in 0..total {
        let mut point = point_at(spec, index);
        if policy.prune_dependent {
            point = point.normalized();
        }
        if seen.insert(point.point_id.clone()) {
            points.push(point);
        }
    }

    match policy.mode {
        ExplorationMode::Exhaustive => points,
        ExplorationMode::Capped { max_points } => {
            points.truncate(max_points);
            points
        }
        ExplorationMode::Random { max_points, seed } => {
            if max_points >= points.len() {
                return points;
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut picked = rand::seq::index::sample(&mut rng, points.len(), max_points).into_vec();
            picked.sort_unstable();
            picked.into_iter().map(|i| points[i].clone()).collect()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "args", rename_all = "snake_case")]
pub enum Directive {
    Clock { period_ns: f64 },
    Pipeline { ii: u32 },
    Dataflow,
    Unroll { factor: u32 },
    ArrayPartition { factor: u32 },
    AllocationLimit { add: u32 },
    DspReg,
    BackendStrategy { strategy: BackendStrategy },
}

pub type DirectiveSet = Vec<Directive>;

/// Directives for a point: the clock always, then one entry per knob that
/// differs from its default, in a fixed order.
pub fn render_directives(point: &DsePoint) -> DirectiveSet {
    let mut out = vec![Directive::Clock {
        period_ns: point.clock_period_ns,
    }];
    if point.enable_pipeline {
        out.push(Directive::Pipeline {
            ii: point.pipeline_ii,
        });
    }
    if point.enable_dataflow {
        out.push(Directive::Dataflow);
    }
    if point.unroll_factor > 1 {
        out.push(Directive::Unroll {
            factor: point.unroll_factor,
        });
    }
    if point.array_partition_factor > 1 {
        out.push(Directive::ArrayPartition {
            factor: point.array_partition_factor,
        });
    }
    if point.allocation_limit_add > 0 {
        out.push(Directive::AllocationLimit {
            add: point.allocation_limit_add,
        });
    }
    if point.dsp_full_reg {
        out.push(Directive::DspReg);
    }
    if point.backend_strategy != BackendStrategy::Default {
        out.push(Directive::BackendStrategy {
            strategy: point.backend_strategy,
        });
    }
    out
}
