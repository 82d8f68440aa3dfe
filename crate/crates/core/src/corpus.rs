// SPDX-License-Identifier: Apache-2.0

//! Benchmark corpus: instruction / reference design / testbench triplets.
//!
//! On-disk layout, one directory per task:
//!
//! ```text
//! <root>/
//!   corpus.yaml            # optional, `manifest_version: "1.0.0"`
//!   design_001/
//!     instruction.md
//!     reference.cpp
//!     testbench.cpp
//!     meta.yaml            # top_function (required), scale (small|medium|large)
//!     dse.yaml             # optional design-space spec
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dse;

pub const MANIFEST_VERSION: &str = "1.0.0";

const INSTRUCTION_FILE: &str = "instruction.md";
const REFERENCE_FILE: &str = "reference.cpp";
const TESTBENCH_FILE: &str = "testbench.cpp";
const META_FILE: &str = "meta.yaml";
const DSE_FILE: &str = "dse.yaml";
const MANIFEST_FILE: &str = "corpus.yaml";

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("task {task}: missing {file}")]
    MissingFile { task: String, file: String },
    #[error("duplicate task id {0}")]
    DuplicateId(String),
    #[error("task {task}: top function `{signature}` not found in reference source")]
    SignatureMismatch { task: String, signature: String },
    #[error("`{0}` is not a task directory name (expected design_NNN)")]
    InvalidTaskId(String),
    #[error("task {task}: bad meta.yaml: {message}")]
    BadMeta { task: String, message: String },
    #[error("unsupported corpus manifest version {0}")]
    UnsupportedVersion(String),
    #[error("corpus root {0} does not exist")]
    MissingRoot(PathBuf),
    #[error("io error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CorpusError + '_ {
    move |source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScaleTag {
    #[default]
    Small,
    Medium,
    Large,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkTask {
    pub id: String,
    pub instruction: String,
    pub reference_source: String,
    pub testbench_source: String,
    pub top_function: String,
    pub scale_tag: ScaleTag,
    /// Raw text of the task-local `dse.yaml`, when present.
    pub dse_spec: Option<String>,
}

impl BenchmarkTask {
    /// Bare identifier of the top function, e.g. `vadd` for `void vadd(int *a)`.
    pub fn top_name(&self) -> Option<&str> {
        top_function_name(&self.top_function)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Corpus {
    pub root: PathBuf,
    pub tasks: Vec<BenchmarkTask>,
    pub manifest_version: String,
}

impl Corpus {
    pub fn task(&self, id: &str) -> Option<&BenchmarkTask> {
        self.tasks.iter().find(|t| t.id == id)
    }
}

#[derive(Debug, Deserialize, Serialize)]
struct Meta {
    top_function: String,
    #[serde(default)]
    scale: ScaleTag,
}

#[derive(Debug, Deserialize, Serialize)]
struct Manifest {
    manifest_version: String,
}

/// Numeric part of a `design_NNN` id, or `None` if the name does not match.
pub fn parse_task_id(name: &str) -> Option<u64> {
    let digits = name.strip_prefix("design_")?;
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    digits.parse().ok()
}

/// Collapse whitespace runs and drop whitespace next to punctuation so that
/// `int  top( int a )` and `int top(int a)` compare equal.
pub fn normalize_signature(text: &str) -> String {
    const PUNCT: &[char] = &['(', ')', '[', ']', ',', '*', '&', '<', '>', '{', '}', ';', '='];
    let mut out = String::with_capacity(text.len());
    let mut pending_space = false;
    for c in text.chars() {
        if c.is_whitespace() {
            pending_space = true;
            continue;
        }
        if pending_space {
            let prev_punct = out.chars().last().is_none_or(|p| PUNCT.contains(&p));
            if !prev_punct && !PUNCT.contains(&c) {
                out.push(' ');
            }
            pending_space = false;
        }
        out.push(c);
    }
    out
}

pub fn contains_signature(source: &str, signature: &str) -> bool {
    let sig = normalize_signature(signature);
    !sig.is_empty() && normalize_signature(source).contains(&sig)
}

/// Identifier immediately preceding the first `(` of a signature.
pub fn top_function_name(signature: &str) -> Option<&str> {
    let head = signature.split('(').next()?.trim_end();
    let start = head
        .rfind(|c: char| !(c.is_alphanumeric() || c == '_'))
        .map_or(0, |i| i + 1);
    let name = &head[start..];
    (!name.is_empty() && !name.starts_with(|c: char| c.is_ascii_digit())).then_some(name)
}

fn check_manifest_version(version: &str) -> Result<(), CorpusError> {
    let parsed = semver::Version::parse(version)
        .map_err(|_| CorpusError::UnsupportedVersion(version.to_string()))?;
    let supported = semver::Version::parse(MANIFEST_VERSION).expect("valid constant");
    if parsed.major != supported.major {
        return Err(CorpusError::UnsupportedVersion(version.to_string()));
    }
    Ok(())
}

fn read_required(dir: &Path, task: &str, file: &str, label: &str) -> Result<String, CorpusError> {
    let path = dir.join(file);
    match fs::read_to_string(&path) {
        Ok(text) => Ok(text),
        Err(e) if e.kind() == io::ErrorKind::NotFound => Err(CorpusError::MissingFile {
            task: task.to_string(),
            file: label.to_string(),
        }),
        Err(e) => Err(io_err(&path)(e)),
    }
}

fn load_task(dir: &Path, id: &str) -> Result<BenchmarkTask, CorpusError> {
    let instruction = read_required(dir, id, INSTRUCTION_FILE, "instruction")?;
    let reference_source = read_required(dir, id, REFERENCE_FILE, "reference")?;
    let testbench_source = read_required(dir, id, TESTBENCH_FILE, "testbench")?;
    let meta_text = read_required(dir, id, META_FILE, "meta")?;
    let meta: Meta = serde_yaml::from_str(&meta_text).map_err(|e| CorpusError::BadMeta {
        task: id.to_string(),
        message: e.to_string(),
    })?;

    let dse_path = dir.join(DSE_FILE);
    let dse_spec = match fs::read_to_string(&dse_path) {
        Ok(text) => Some(text),
        Err(e) if e.kind() == io::ErrorKind::NotFound => None,
        Err(e) => return Err(io_err(&dse_path)(e)),
    };

    if !contains_signature(&reference_source, &meta.top_function) {
        return Err(CorpusError::SignatureMismatch {
            task: id.to_string(),
            signature: meta.top_function,
        });
    }

    Ok(BenchmarkTask {
        id: id.to_string(),
        instruction,
        reference_source,
        testbench_source,
        top_function: meta.top_function,
        scale_tag: meta.scale,
        dse_spec,
    })
}

/// Load every task directory under `root`, ordered by id.
///
/// Plain files at the root (manifest, README) are ignored, as are hidden
/// directories. Any other directory must be a well-formed task.
pub fn load_corpus(root: &Path) -> Result<Corpus, CorpusError> {
    if !root.is_dir() {
        return Err(CorpusError::MissingRoot(root.to_path_buf()));
    }

    let manifest_path = root.join(MANIFEST_FILE);
    let manifest_version = match fs::read_to_string(&manifest_path) {
        Ok(text) => {
            let manifest: Manifest =
                serde_yaml::from_str(&text).map_err(|e| CorpusError::BadMeta {
                    task: MANIFEST_FILE.to_string(),
                    message: e.to_string(),
                })?;
            manifest.manifest_version
        }
        Err(e) if e.kind() == io::ErrorKind::NotFound => MANIFEST_VERSION.to_string(),
        Err(e) => return Err(io_err(&manifest_path)(e)),
    };
    check_manifest_version(&manifest_version)?;

    let mut dirs = Vec::new();
    for entry in fs::read_dir(root).map_err(io_err(root))? {
        let entry = entry.map_err(io_err(root))?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if !entry.path().is_dir() || name.starts_with('.') {
            continue;
        }
        dirs.push(name);
    }
    dirs.sort();

    let mut seen: BTreeMap<u64, String> = BTreeMap::new();
    let mut tasks = Vec::with_capacity(dirs.len());
    for name in dirs {
        let number = parse_task_id(&name).ok_or_else(|| CorpusError::InvalidTaskId(name.clone()))?;
        if let Some(prev) = seen.insert(number, name.clone()) {
            return Err(CorpusError::DuplicateId(format!("{prev} / {name}")));
        }
        tasks.push(load_task(&root.join(&name), &name)?);
    }

    Ok(Corpus {
        root: root.to_path_buf(),
        tasks,
        manifest_version,
    })
}

/// Write `corpus` to `root` in the layout understood by [`load_corpus`].
pub fn write_corpus(corpus: &Corpus, root: &Path) -> Result<(), CorpusError> {
    fs::create_dir_all(root).map_err(io_err(root))?;
    let manifest = serde_yaml::to_string(&Manifest {
        manifest_version: corpus.manifest_version.clone(),
    })
    .expect("manifest serializes");
    let manifest_path = root.join(MANIFEST_FILE);
    fs::write(&manifest_path, manifest).map_err(io_err(&manifest_path))?;

    for task in &corpus.tasks {
        let dir = root.join(&task.id);
        fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        let meta = serde_yaml::to_string(&Meta {
            top_function: task.top_function.clone(),
            scale: task.scale_tag,
        })
        .expect("meta serializes");
        let files = [
            (INSTRUCTION_FILE, task.instruction.as_str()),
            (REFERENCE_FILE, task.reference_source.as_str()),
            (TESTBENCH_FILE, task.testbench_source.as_str()),
            (META_FILE, meta.as_str()),
        ];
        for (name, body) in files {
            let path = dir.join(name);
            fs::write(&path, body).map_err(io_err(&path))?;
        }
        let dse_path = dir.join(DSE_FILE);
        match &task.dse_spec {
            Some(text) => fs::write(&dse_path, text).map_err(io_err(&dse_path))?,
            None if dse_path.exists() => fs::remove_file(&dse_path).map_err(io_err(&dse_path))?,
            None => {}
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Finding {
    pub severity: Severity,
    pub code: String,
    pub message: String,
}

impl Finding {
    fn error(code: &str, message: impl Into<String>) -> Self {
        Finding {
            severity: Severity::Error,
            code: code.to_string(),
            message: message.into(),
        }
    }

    fn warning(code: &str, message: impl Into<String>) -> Self {
        Finding {
            severity: Severity::Warning,
            code: code.to_string(),
            message: message.into(),
        }
    }
}

pub type ValidationReport = Vec<Finding>;

fn mentions_identifier(text: &str, ident: &str) -> bool {
    text.match_indices(ident).any(|(i, _)| {
        let before = text[..i].chars().next_back();
        let after = text[i + ident.len()..].chars().next();
        let is_ident = |c: char| c.is_alphanumeric() || c == '_';
        !before.is_some_and(is_ident) && !after.is_some_and(is_ident)
    })
}

/// Mechanical checks on a task. Findings are data; an empty report means the
/// task is clean.
pub fn validate_task(task: &BenchmarkTask) -> ValidationReport {
    let mut findings = Vec::new();

    if parse_task_id(&task.id).is_none() {
        findings.push(Finding::error("BAD_ID", format!("`{}` does not match design_NNN", task.id)));
    }
    if task.instruction.trim().is_empty() {
        findings.push(Finding::error("EMPTY_INSTRUCTION", "instruction is empty"));
    }
    if task.reference_source.trim().is_empty() {
        findings.push(Finding::error("EMPTY_REFERENCE", "reference source is empty"));
    }
    if task.testbench_source.trim().is_empty() {
        findings.push(Finding::error("EMPTY_TESTBENCH", "testbench source is empty"));
    }
    if !task.reference_source.trim().is_empty()
        && !contains_signature(&task.reference_source, &task.top_function)
    {
        findings.push(Finding::error(
            "SIGNATURE_MISSING",
            format!("reference source lacks `{}`", task.top_function),
        ));
    }

    match task.top_name() {
        None => findings.push(Finding::error(
            "BAD_SIGNATURE",
            format!("cannot find a function name in `{}`", task.top_function),
        )),
        Some(name) if !task.testbench_source.trim().is_empty() => {
            if !mentions_identifier(&task.testbench_source, name) {
                findings.push(Finding::error(
                    "TB_NO_CALL",
                    format!("testbench never references top function `{name}`"),
                ));
            }
        }
        Some(_) => {}
    }

    if !task.testbench_source.trim().is_empty() {
        let tb = normalize_signature(&task.testbench_source);
        if !tb.contains("main(") {
            findings.push(Finding::warning("TB_NO_MAIN", "testbench has no main()"));
        } else if !tb.contains("return 0;") {
            findings.push(Finding::warning("TB_NO_RETURN_ZERO", "testbench never returns 0"));
        }
    }

    if let Some(text) = &task.dse_spec {
        if let Err(e) = dse::parse_dse_spec(text) {
            findings.push(Finding::error("DSE_INVALID", e.to_string()));
        }
    }

    findings
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AuthoringPrompt {
    /// Port a Verilog design and its testbench to HLS C++.
    PortVerilog,
    /// Derive a natural-language instruction from a reference HLS design.
    DescribeDesign,
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("missing placeholder `{0}`")]
pub struct MissingPlaceholder(pub String);

const PORT_VERILOG_TEMPLATE: &str = "\
You are an expert in HLS-C++ and Verilog code generation. I will give you a prompt for a hardware design written for verilog, the reference code in verilog and it's testbench.

Your task is to generate the reference design and the testbench for HLS-C++. Your generated testbench must reflect the same logic of the reference code.

All your generated codes will be run in HLS tools. While writing the testbenches consider all possible scenario. Your testbench has to be self checking. Write the codes without the 'RefModule'.

The testbench will detect errors of design file but it must not show compilation and simulation error. It should also always return 0. Use all necessary and applicable pragmas for better optimization in your design code.

The three items for verilog are below:
{prompt}
{reference_code}
{testbench}
";

const DESCRIBE_DESIGN_TEMPLATE: &str = "\
You are an expert in writing and explaining HLS-C++ hardware deisgn. Describe the functionality of the HLS design from a high-level, system-design perspective.

Focus on what the module computes, how data flows through it, and how control logic operates across different stages of execution. Explain its functional behavior considering pipelining, memory access, and synthesis constraints.

Avoid unnecessary low-level details like variable names or line-by-line mappings. Instead, communicate the purpose, the algorithmic steps, the I/O behavior, and any state or timing dependencies using precise, practical language that would guide someone implementing or verifying the design.

Include timing models, pipeline stages, and basic handshaking logic if relevant, but keep the explanation focused and hardware-aware.

{code}
";

impl AuthoringPrompt {
    pub fn placeholders(self) -> &'static [&'static str] {
        match self {
            AuthoringPrompt::PortVerilog => &["prompt", "reference_code", "testbench"],
            AuthoringPrompt::DescribeDesign => &["code"],
        }
    }

    fn template(self) -> &'static str {
        match self {
            AuthoringPrompt::PortVerilog => PORT_VERILOG_TEMPLATE,
            AuthoringPrompt::DescribeDesign => DESCRIBE_DESIGN_TEMPLATE,
        }
    }
}

/// Fill `{name}` placeholders in a template. Only the listed names are
/// substituted; other braces are left alone.
pub(crate) fn fill_template(template: &str, values: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    'outer: while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let tail = &rest[open..];
        for (name, value) in values {
            let token_len = name.len() + 2;
            if tail.len() >= token_len
                && tail.as_bytes()[token_len - 1] == b'}'
                && &tail[1..token_len - 1] == *name
            {
                out.push_str(value);
                rest = &tail[token_len..];
                continue 'outer;
            }
        }
        out.push('{');
        rest = &tail[1..];
    }
    out.push_str(rest);
    out
}

/// Render one of the dataset-authoring prompts with its inputs substituted
/// verbatim.
pub fn render_authoring_prompt(
    kind: AuthoringPrompt,
    inputs: &BTreeMap<String, String>,
) -> Result<String, MissingPlaceholder> {
    let mut values = Vec::new();
    for name in kind.placeholders() {
        let value = inputs
            .get(*name)
            .ok_or_else(|| MissingPlaceholder(name.to_string()))?;
        values.push((*name, value.as_str()));
    }
    Ok(fill_template(kind.template(), &values))
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn sample_task(id: &str) -> BenchmarkTask {
        BenchmarkTask {
            id: id.to_string(),
            instruction: "Add two ints and return the sum.".into(),
            reference_source: "int add(int a, int b) {\n#pragma HLS INLINE\n  return a + b;\n}\n".into(),
            testbench_source: "#include <cstdio>\nint add(int a, int b);\nint main() {\n  if (add(2, 3) != 5) return 1;\n  return 0;\n}\n".into(),
            top_function: "int add(int a, int b)".into(),
            scale_tag: ScaleTag::Small,
            dse_spec: None,
        }
    }

    fn sample_corpus(n: usize) -> Corpus {
        Corpus {
            root: PathBuf::new(),
            tasks: (1..=n).map(|i| sample_task(&format!("design_{i:03}"))).collect(),
            manifest_version: MANIFEST_VERSION.into(),
        }
    }

    #[test]
    fn empty_directory_loads_empty_corpus() {
        let dir = tempfile::tempdir().unwrap();
        let corpus = load_corpus(dir.path()).unwrap();
        assert!(corpus.tasks.is_empty());
        assert_eq!(corpus.manifest_version, MANIFEST_VERSION);
    }

    #[test]
    fn ten_tasks_load_in_order() {
        let dir = tempfile::tempdir().unwrap();
        let mut corpus = sample_corpus(10);
        // write in reverse to make sure ordering comes from the loader
        corpus.tasks.reverse();
        write_corpus(&corpus, dir.path()).unwrap();
        let loaded = load_corpus(dir.path()).unwrap();
        let ids: Vec<_> = loaded.tasks.iter().map(|t| t.id.as_str()).collect();
        let expected: Vec<_> = (1..=10).map(|i| format!("design_{i:03}")).collect();
        assert_eq!(ids, expected);
    }

    #[test]
    fn missing_testbench_is_named() {
        let dir = tempfile::tempdir().unwrap();
        write_corpus(&sample_corpus(5), dir.path()).unwrap();
        fs::remove_file(dir.path().join("design_003").join(TESTBENCH_FILE)).unwrap();
        match load_corpus(dir.path()) {
            Err(CorpusError::MissingFile { task, file }) => {
                assert_eq!(task, "design_003");
                assert_eq!(file, "testbench");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn numerically_equal_ids_are_duplicates() {
        let dir = tempfile::tempdir().unwrap();
        let mut corpus = sample_corpus(1);
        corpus.tasks.push(sample_task("design_1"));
        write_corpus(&corpus, dir.path()).unwrap();
        assert!(matches!(load_corpus(dir.path()), Err(CorpusError::DuplicateId(_))));
    }

    #[test]
    fn signature_mismatch_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let mut corpus = sample_corpus(1);
        corpus.tasks[0].top_function = "int sub(int a, int b)".into();
        write_corpus(&corpus, dir.path()).unwrap();
        assert!(matches!(
            load_corpus(dir.path()),
            Err(CorpusError::SignatureMismatch { .. })
        ));
    }

    #[test]
    fn stray_directory_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        write_corpus(&sample_corpus(1), dir.path()).unwrap();
        fs::create_dir(dir.path().join("scratch")).unwrap();
        assert!(matches!(load_corpus(dir.path()), Err(CorpusError::InvalidTaskId(_))));
    }

    #[test]
    fn unknown_major_version_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let mut corpus = sample_corpus(1);
        corpus.manifest_version = "2.0.0".into();
        write_corpus(&corpus, dir.path()).unwrap();
        assert!(matches!(load_corpus(dir.path()), Err(CorpusError::UnsupportedVersion(_))));
        corpus.manifest_version = "1.4.2".into();
        write_corpus(&corpus, dir.path()).unwrap();
        assert!(load_corpus(dir.path()).is_ok());
    }

    #[test]
    fn signature_match_ignores_whitespace() {
        assert!(contains_signature("int  add( int a,\n int b ) {", "int add(int a, int b)"));
        assert!(!contains_signature("int add(int a) {", "int add(int a, int b)"));
        assert!(!contains_signature("anything", "   "));
    }

    #[test]
    fn top_name_extraction() {
        assert_eq!(top_function_name("void vadd(int *a, int n)"), Some("vadd"));
        assert_eq!(top_function_name("ap_uint<8> *mix_ (int)"), Some("mix_"));
        assert_eq!(top_function_name("(int)"), None);
    }

    #[test]
    fn clean_task_has_no_findings() {
        assert!(validate_task(&sample_task("design_001")).is_empty());
    }

    #[test]
    fn testbench_without_call_is_flagged() {
        let mut task = sample_task("design_001");
        task.testbench_source = "int main() { return 0; }".into();
        let findings = validate_task(&task);
        assert_eq!(findings.len(), 1);
        assert_eq!(findings[0].code, "TB_NO_CALL");
        assert_eq!(findings[0].severity, Severity::Error);
    }

    #[test]
    fn empty_instruction_is_flagged() {
        let mut task = sample_task("design_001");
        task.instruction = "  \n".into();
        let codes: Vec<_> = validate_task(&task).into_iter().map(|f| f.code).collect();
        assert_eq!(codes, vec!["EMPTY_INSTRUCTION"]);
    }

    #[test]
    fn identifier_prefix_is_not_a_call() {
        let mut task = sample_task("design_001");
        task.testbench_source = "int main() { return adder(1); return 0; }".into();
        assert!(validate_task(&task).iter().any(|f| f.code == "TB_NO_CALL"));
    }

    #[test]
    fn testbench_return_convention_is_a_warning() {
        let mut task = sample_task("design_001");
        task.testbench_source = "int main() { return add(1, 2) == 3 ? 1 : 2; }".into();
        let findings = validate_task(&task);
        assert_eq!(findings.len(), 1);
        assert_eq!(findings[0].code, "TB_NO_RETURN_ZERO");
        assert_eq!(findings[0].severity, Severity::Warning);
    }

    #[test]
    fn invalid_task_dse_is_flagged() {
        let mut task = sample_task("design_001");
        task.dse_spec = Some("unroll_factor: [0]\n".into());
        assert!(validate_task(&task).iter().any(|f| f.code == "DSE_INVALID"));
    }

    #[test]
    fn validate_is_pure() {
        let mut task = sample_task("design_001");
        task.instruction.clear();
        assert_eq!(validate_task(&task), validate_task(&task));
    }

    #[test]
    fn describe_prompt_embeds_code() {
        let inputs = BTreeMap::from([("code".to_string(), "int f(){return 0;}".to_string())]);
        let text = render_authoring_prompt(AuthoringPrompt::DescribeDesign, &inputs).unwrap();
        assert!(text.contains("Describe the functionality of the HLS design"));
        assert!(text.contains("int f(){return 0;}"));
    }

    #[test]
    fn port_prompt_requires_inputs() {
        let err = render_authoring_prompt(AuthoringPrompt::PortVerilog, &BTreeMap::new()).unwrap_err();
        assert_eq!(err, MissingPlaceholder("prompt".into()));
    }

    #[test]
    fn port_prompt_embeds_triplet() {
        let inputs = BTreeMap::from([
            ("prompt".to_string(), "Build a 4-bit counter.".to_string()),
            ("reference_code".to_string(), "module counter(input clk); endmodule".to_string()),
            ("testbench".to_string(), "module tb; counter dut(.clk(clk)); endmodule".to_string()),
        ]);
        let text = render_authoring_prompt(AuthoringPrompt::PortVerilog, &inputs).unwrap();
        assert!(text.contains("generate the reference design and the testbench"));
        assert!(text.contains("It should also always return 0."));
        for value in inputs.values() {
            assert!(text.contains(value.as_str()));
        }
    }

    #[test]
    fn fill_template_leaves_foreign_braces() {
        let out = fill_template("set a {x} {part} {", &[("part", "xc7")]);
        assert_eq!(out, "set a {x} xc7 {");
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn ident() -> impl Strategy<Value = String> {
            "[a-z][a-z0-9_]{0,8}"
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(24))]
            #[test]
            fn write_then_load_round_trips(
                names in proptest::collection::vec(ident(), 0..6),
                instr in "[A-Za-z ,.]{1,40}",
                scale in prop_oneof![Just(ScaleTag::Small), Just(ScaleTag::Medium), Just(ScaleTag::Large)],
                with_dse in any::<bool>(),
            ) {
                let dir = tempfile::tempdir().unwrap();
                let tasks: Vec<_> = names.iter().enumerate().map(|(i, name)| {
                    let sig = format!("int {name}(int x)");
                    BenchmarkTask {
                        id: format!("design_{:03}", i + 1),
                        instruction: instr.clone(),
                        reference_source: format!("{sig} {{ return x; }}\n"),
                        testbench_source: format!("int main() {{ return {name}(0); }}\n"),
                        top_function: sig,
                        scale_tag: scale,
                        dse_spec: with_dse.then(|| "unroll_factor: [1, 2]\n".to_string()),
                    }
                }).collect();
                let corpus = Corpus {
                    root: dir.path().to_path_buf(),
                    tasks,
                    manifest_version: MANIFEST_VERSION.into(),
                };
                write_corpus(&corpus, dir.path()).unwrap();
                prop_assert_eq!(&load_corpus(dir.path()).unwrap(), &corpus);
                prop_assert_eq!(load_corpus(dir.path()).unwrap(), load_corpus(dir.path()).unwrap());
            }
        }
    }
}
