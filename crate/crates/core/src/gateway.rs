// SPDX-License-Identifier: Apache-2.0

//! Code-generation model gateway.
//!
//! Every response is written to a content-addressed cache, one file per
//! `(model_id, prompt, sample_index, temperature)` key, so any run can be
//! replayed offline. The `replay_cache` endpoint never talks to a model.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::corpus::{contains_signature, fill_template, BenchmarkTask};

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("backend unavailable: {0}")]
    BackendUnavailable(String),
    #[error("replay cache has no response for task {task_id} sample {sample_index}")]
    CacheMiss { task_id: String, sample_index: usize },
    #[error("invalid model config: {0}")]
    InvalidConfig(String),
    #[error("cache io at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EndpointKind {
    #[default]
    ReplayCache,
    HttpApi,
    LocalCommand,
}

/// OpenAI-compatible chat-completions endpoint. The key itself is only ever
/// read from the named environment variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HttpEndpoint {
    pub url: String,
    pub api_key_env: String,
    #[serde(default = "default_http_timeout")]
    pub timeout_s: u64,
}

fn default_http_timeout() -> u64 {
    300
}

fn default_max_tokens() -> u32 {
    4096
}

fn default_cache_dir() -> PathBuf {
    PathBuf::from(".hlsbench-cache")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub model_id: String,
    #[serde(default)]
    pub endpoint_kind: EndpointKind,
    /// Sampling temperature; when unset, 0 for k = 1 and 0.8 otherwise.
    #[serde(default)]
    pub temperature: Option<f64>,
    #[serde(default = "default_max_tokens")]
    pub max_tokens: u32,
    #[serde(default)]
    pub api_params: BTreeMap<String, String>,
    #[serde(default = "default_cache_dir")]
    pub cache_dir: PathBuf,
    #[serde(default)]
    pub http: Option<HttpEndpoint>,
    /// argv for `local_command`; the prompt arrives on stdin.
    #[serde(default)]
    pub command: Option<Vec<String>>,
}

impl ModelConfig {
    pub fn replay(model_id: impl Into<String>, cache_dir: impl Into<PathBuf>) -> Self {
        ModelConfig {
            model_id: model_id.into(),
            endpoint_kind: EndpointKind::ReplayCache,
            temperature: None,
            max_tokens: default_max_tokens(),
            api_params: BTreeMap::new(),
            cache_dir: cache_dir.into(),
            http: None,
            command: None,
        }
    }

    pub fn temperature_for(&self, k: usize) -> f64 {
        self.temperature.unwrap_or(if k > 1 { 0.8 } else { 0.0 })
    }

    pub fn validate(&self) -> Result<(), GatewayError> {
        if self.model_id.is_empty() {
            return Err(GatewayError::InvalidConfig("model_id is empty".into()));
        }
        if let Some(t) = self.temperature {
            if !(t.is_finite() && t >= 0.0) {
                return Err(GatewayError::InvalidConfig(format!("temperature {t}")));
            }
        }
        if self.max_tokens == 0 {
            return Err(GatewayError::InvalidConfig("max_tokens must be positive".into()));
        }
        match self.endpoint_kind {
            EndpointKind::HttpApi if self.http.is_none() => {
                Err(GatewayError::InvalidConfig("http_api needs an `http` block".into()))
            }
            EndpointKind::LocalCommand if self.command.as_ref().is_none_or(|c| c.is_empty()) => {
                Err(GatewayError::InvalidConfig("local_command needs a `command`".into()))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtractionStatus {
    Ok,
    NoCodeBlock,
    SignatureMissing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub task_id: String,
    pub sample_index: usize,
    pub raw_response: String,
    /// Present iff `extraction_status` is `Ok`.
    pub source: Option<String>,
    pub extraction_status: ExtractionStatus,
}

impl Candidate {
    pub fn from_response(task: &BenchmarkTask, sample_index: usize, raw_response: String) -> Self {
        let (code, status) = extract_code(&raw_response, &task.top_function);
        Candidate {
            task_id: task.id.clone(),
            sample_index,
            raw_response,
            source: (status == ExtractionStatus::Ok).then_some(code),
            extraction_status: status,
        }
    }
}

const CODEGEN_TEMPLATE: &str = "\
Your role is to act as an expert in HLS C++ code development. You must thoroughly explore each question through a systematic and deliberate thinking process\u{2014}engaging in cycles of analysis, summarization, exploration, reassessment, reflection, backtracing, and iteration to develop well-considered solutions.

Based on the provided instructions, you are expected to generate precise, optimized, and accurate synthesizable HLS C++ code that meets the following requirements.

        1. Output only synthesizable C++ code (no extra text or explanation).
        2. Include necessary headers (e.g. ap_int.h).
        3. The top-level function signature must be exactly as given in the instruction.
        4. Insert suitable HLS pragmas.
        5. Self-contained: do not rely on external libraries or files beyond standard headers.

    ### Instruction:{instruction}
    ### Input:{input}
    ### Response:
";

/// Evaluation prompt for a task: its instruction goes in the Instruction
/// slot and the required top-function signature in the Input slot.
pub fn render_codegen_prompt(task: &BenchmarkTask) -> String {
    fill_template(
        CODEGEN_TEMPLATE,
        &[
            ("instruction", task.instruction.trim()),
            ("input", task.top_function.trim()),
        ],
    )
}

const CODE_TAGS: &[&str] = &["", "c", "cpp", "c++", "cc", "cxx", "h", "hpp", "hh", "hxx", "hls"];

/// Pull HLS source out of a model response.
///
/// Fenced blocks tagged as C/C++ (or untagged) are concatenated in order;
/// without any fence the whole response is taken as code.
pub fn extract_code(raw: &str, expected_signature: &str) -> (String, ExtractionStatus) {
    let mut blocks: Vec<String> = Vec::new();
    let mut saw_fence = false;
    let mut current: Option<(bool, Vec<&str>)> = None;

    for line in raw.lines() {
        let trimmed = line.trim_start();
        if let Some(rest) = trimmed.strip_prefix("```") {
            saw_fence = true;
            match current.take() {
                Some((keep, body)) => {
                    if keep {
                        blocks.push(body.join("\n"));
                    }
                }
                None => {
                    let tag = rest.split_whitespace().next().unwrap_or("").to_ascii_lowercase();
                    current = Some((CODE_TAGS.contains(&tag.as_str()), Vec::new()));
                }
            }
            continue;
        }
        if let Some((_, body)) = current.as_mut() {
            body.push(line);
        }
    }
    // unterminated fence: keep what we have
    if let Some((true, body)) = current {
        blocks.push(body.join("\n"));
    }

    let code = if saw_fence {
        blocks
            .iter()
            .map(|b| b.trim())
            .filter(|b| !b.is_empty())
            .collect::<Vec<_>>()
            .join("\n\n")
    } else {
        raw.trim().to_string()
    };

    let status = if code.is_empty() {
        ExtractionStatus::NoCodeBlock
    } else if !contains_signature(&code, expected_signature) {
        ExtractionStatus::SignatureMissing
    } else {
        ExtractionStatus::Ok
    };
    (code, status)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CachedResponse {
    pub model_id: String,
    pub sample_index: usize,
    pub temperature: f64,
    pub prompt_sha256: String,
    pub response: String,
}

/// On-disk response store. Reads are lock-free; writes go through a temp
/// file and an atomic rename.
#[derive(Debug, Clone)]
pub struct ResponseCache {
    dir: PathBuf,
}

impl ResponseCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        ResponseCache { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn key(model_id: &str, prompt: &str, sample_index: usize, temperature: f64) -> String {
        let mut h = Sha256::new();
        for part in [
            model_id.as_bytes(),
            prompt.as_bytes(),
            sample_index.to_string().as_bytes(),
            format!("{temperature}").as_bytes(),
        ] {
            h.update((part.len() as u64).to_le_bytes());
            h.update(part);
        }
        hex::encode(h.finalize())
    }

    fn path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.json"))
    }

    pub fn get(&self, key: &str) -> Result<Option<CachedResponse>, GatewayError> {
        let path = self.path(key);
        let text = match fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(None),
            Err(source) => return Err(GatewayError::Io { path, source }),
        };
        serde_json::from_str(&text).map(Some).map_err(|e| GatewayError::Io {
            path,
            source: io::Error::new(io::ErrorKind::InvalidData, e),
        })
    }

    pub fn put(&self, key: &str, entry: &CachedResponse) -> Result<(), GatewayError> {
        let io_err = |path: &Path| {
            let path = path.to_path_buf();
            move |source| GatewayError::Io { path, source }
        };
        fs::create_dir_all(&self.dir).map_err(io_err(&self.dir))?;
        let body = serde_json::to_string_pretty(entry).expect("cache entry serializes");
        let mut tmp = tempfile::NamedTempFile::new_in(&self.dir).map_err(io_err(&self.dir))?;
        tmp.write_all(body.as_bytes()).map_err(io_err(tmp.path()))?;
        let dest = self.path(key);
        tmp.persist(&dest).map_err(|e| GatewayError::Io {
            path: dest,
            source: e.error,
        })?;
        Ok(())
    }
}

/// One completion request as seen by a backend.
#[derive(Debug, Clone)]
pub struct CompletionRequest<'a> {
    pub model_id: &'a str,
    pub task_id: &'a str,
    pub prompt: &'a str,
    pub sample_index: usize,
    pub temperature: f64,
    pub max_tokens: u32,
    pub api_params: &'a BTreeMap<String, String>,
}

pub trait Backend: Send + Sync {
    fn complete(&self, req: &CompletionRequest<'_>) -> Result<String, GatewayError>;
}

/// OpenAI-style `/chat/completions` client.
pub struct HttpBackend {
    endpoint: HttpEndpoint,
    client: reqwest::blocking::Client,
}

impl HttpBackend {
    pub fn new(endpoint: HttpEndpoint) -> Result<Self, GatewayError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(endpoint.timeout_s))
            .build()
            .map_err(|e| GatewayError::BackendUnavailable(e.to_string()))?;
        Ok(HttpBackend { endpoint, client })
    }
}

impl Backend for HttpBackend {
    fn complete(&self, req: &CompletionRequest<'_>) -> Result<String, GatewayError> {
        let key = std::env::var(&self.endpoint.api_key_env).map_err(|_| {
            GatewayError::BackendUnavailable(format!("environment variable {} is not set", self.endpoint.api_key_env))
        })?;
        let mut body = serde_json::json!({
            "model": req.model_id,
            "messages": [{"role": "user", "content": req.prompt}],
            "temperature": req.temperature,
            "max_tokens": req.max_tokens,
        });
        for (k, v) in req.api_params {
            let value = serde_json::from_str(v).unwrap_or_else(|_| serde_json::Value::String(v.clone()));
            body[k] = value;
        }
        let resp = self
            .client
            .post(&self.endpoint.url)
            .bearer_auth(key)
            .json(&body)
            .send()
            .map_err(|e| GatewayError::BackendUnavailable(e.to_string()))?;
        let status = resp.status();
        if !status.is_success() {
            return Err(GatewayError::BackendUnavailable(format!("HTTP {status}")));
        }
        let json: serde_json::Value = resp
            .json()
            .map_err(|e| GatewayError::BackendUnavailable(format!("bad response body: {e}")))?;
        json["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| GatewayError::BackendUnavailable("response has no choices[0].message.content".into()))
    }
}

/// Runs a local program per request: prompt on stdin, response on stdout.
/// The task id, sample index, temperature and model id are exported as
/// `HLSBENCH_TASK_ID`, `HLSBENCH_SAMPLE_INDEX`, `HLSBENCH_TEMPERATURE` and
/// `HLSBENCH_MODEL`.
pub struct CommandBackend {
    argv: Vec<String>,
}

impl CommandBackend {
    pub fn new(argv: Vec<String>) -> Result<Self, GatewayError> {
        if argv.is_empty() {
            return Err(GatewayError::InvalidConfig("empty command".into()));
        }
        Ok(CommandBackend { argv })
    }
}

impl Backend for CommandBackend {
    fn complete(&self, req: &CompletionRequest<'_>) -> Result<String, GatewayError> {
        let mut child = Command::new(&self.argv[0])
            .args(&self.argv[1..])
            .env("HLSBENCH_TASK_ID", req.task_id)
            .env("HLSBENCH_SAMPLE_INDEX", req.sample_index.to_string())
            .env("HLSBENCH_TEMPERATURE", format!("{}", req.temperature))
            .env("HLSBENCH_MODEL", req.model_id)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| GatewayError::BackendUnavailable(format!("{}: {e}", self.argv[0])))?;

        let mut stdin = child.stdin.take().expect("piped stdin");
        let prompt = req.prompt.to_string();
        let writer = std::thread::spawn(move || {
            // the command may ignore stdin entirely
            let _ = stdin.write_all(prompt.as_bytes());
        });
        let mut stdout = String::new();
        child
            .stdout
            .take()
            .expect("piped stdout")
            .read_to_string(&mut stdout)
            .map_err(|e| GatewayError::BackendUnavailable(e.to_string()))?;
        let mut stderr = String::new();
        let _ = child.stderr.take().expect("piped stderr").read_to_string(&mut stderr);
        let _ = writer.join();
        let status = child
            .wait()
            .map_err(|e| GatewayError::BackendUnavailable(e.to_string()))?;
        if !status.success() {
            return Err(GatewayError::BackendUnavailable(format!(
                "{} exited with {status}: {}",
                self.argv[0],
                stderr.trim()
            )));
        }
        Ok(stdout)
    }
}

pub struct Gateway {
    cfg: ModelConfig,
    cache: ResponseCache,
    backend: Option<Box<dyn Backend>>,
}

impl Gateway {
    /// Build the backend described by `cfg`.
    pub fn from_config(cfg: ModelConfig) -> Result<Self, GatewayError> {
        cfg.validate()?;
        let backend: Option<Box<dyn Backend>> = match cfg.endpoint_kind {
            EndpointKind::ReplayCache => None,
            EndpointKind::HttpApi => Some(Box::new(HttpBackend::new(cfg.http.clone().expect("validated"))?)),
            EndpointKind::LocalCommand => Some(Box::new(CommandBackend::new(cfg.command.clone().expect("validated"))?)),
        };
        let cache = ResponseCache::new(cfg.cache_dir.clone());
        Ok(Gateway { cfg, cache, backend })
    }

    /// Record-through gateway around an arbitrary backend.
    pub fn with_backend(cfg: ModelConfig, backend: Box<dyn Backend>) -> Self {
        let cache = ResponseCache::new(cfg.cache_dir.clone());
        Gateway {
            cfg,
            cache,
            backend: Some(backend),
        }
    }

    /// Same configuration, but answering only from the cache.
    pub fn replay_only(cfg: ModelConfig) -> Self {
        let cache = ResponseCache::new(cfg.cache_dir.clone());
        Gateway {
            cfg: ModelConfig {
                endpoint_kind: EndpointKind::ReplayCache,
                ..cfg
            },
            cache,
            backend: None,
        }
    }

    pub fn config(&self) -> &ModelConfig {
        &self.cfg
    }

    pub fn cache(&self) -> &ResponseCache {
        &self.cache
    }

    /// Draw `k` candidates for `task`, serving cached responses first.
    pub fn sample_candidates(&self, task: &BenchmarkTask, k: usize) -> Result<Vec<Candidate>, GatewayError> {
        let prompt = render_codegen_prompt(task);
        let prompt_sha256 = hex::encode(Sha256::digest(prompt.as_bytes()));
        let temperature = self.cfg.temperature_for(k);
        let mut out = Vec::with_capacity(k);
        for sample_index in 0..k {
            let key = ResponseCache::key(&self.cfg.model_id, &prompt, sample_index, temperature);
            let response = match self.cache.get(&key)? {
                Some(hit) => hit.response,
                None => {
                    let backend = self.backend.as_ref().ok_or_else(|| GatewayError::CacheMiss {
                        task_id: task.id.clone(),
                        sample_index,
                    })?;
                    let response = backend.complete(&CompletionRequest {
                        model_id: &self.cfg.model_id,
                        task_id: &task.id,
                        prompt: &prompt,
                        sample_index,
                        temperature,
                        max_tokens: self.cfg.max_tokens,
                        api_params: &self.cfg.api_params,
                    })?;
                    self.cache.put(
                        &key,
                        &CachedResponse {
                            model_id: self.cfg.model_id.clone(),
                            sample_index,
                            temperature,
                            prompt_sha256: prompt_sha256.clone(),
                            response: response.clone(),
                        },
                    )?;
                    response
                }
            };
            out.push(Candidate::from_response(task, sample_index, response));
        }
        Ok(out)
    }
}
