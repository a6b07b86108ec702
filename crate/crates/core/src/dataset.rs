//! Corpus records and their line-delimited JSON storage.
//!
//! A corpus `name` is stored as `name.jsonl` (one [`SampleRecord`] per line)
//! next to a `name.manifest` JSON sidecar.

use crate::clex::normalize_for_dedup;
use crate::cmetrics::{analyze_c, DynamicMetrics, StaticMetrics};
use crate::irparse::{self, IrParseError, Unmatched};
use crate::toolchain::{ToolchainConfig, ToolchainError};
use base64::Engine;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};
use std::collections::{BTreeMap, HashSet};
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use thiserror::Error;

pub const SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_TEST_TIMEOUT_S: f64 = 15.0;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("source rejected by {side}: {diagnostics}")]
    BuildRejected { side: RejectedSide, diagnostics: String },
    #[error(transparent)]
    Toolchain(#[from] ToolchainError),
    #[error(transparent)]
    Parse(#[from] IrParseError),
    #[error("corpus schema version {found} is not supported (expected {expected})")]
    SchemaMismatch { found: u32, expected: u32 },
    #[error("line {line}: {message}")]
    MalformedLine { line: usize, message: String },
    #[error("manifest lists {manifest} records but the data file has {lines}")]
    CountMismatch { manifest: usize, lines: usize },
    #[error("record is not a translation unit")]
    NotTranslationUnit,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RejectedSide {
    Gimple,
    Llvm,
    Both,
}

impl std::fmt::Display for RejectedSide {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            RejectedSide::Gimple => "gcc",
            RejectedSide::Llvm => "clang",
            RejectedSide::Both => "gcc and clang",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Origin {
    Thestack,
    Gnu,
    Codeforces,
    Exebench,
    Local,
}

impl Origin {
    pub fn as_str(self) -> &'static str {
        match self {
            Origin::Thestack => "thestack",
            Origin::Gnu => "gnu",
            Origin::Codeforces => "codeforces",
            Origin::Exebench => "exebench",
            Origin::Local => "local",
        }
    }
}

impl std::str::FromStr for Origin {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|_| format!("unknown origin `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Granularity {
    TranslationUnit,
    Function,
}

/// Raw bytes stored as a JSON string when valid UTF-8 and as
/// `{"b64": "..."}` otherwise.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Bytes(pub Vec<u8>);

impl From<&str> for Bytes {
    fn from(s: &str) -> Self {
        Bytes(s.as_bytes().to_vec())
    }
}

impl From<Vec<u8>> for Bytes {
    fn from(v: Vec<u8>) -> Self {
        Bytes(v)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum BytesRepr {
    Text(String),
    Binary { b64: String },
}

impl Serialize for Bytes {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match std::str::from_utf8(&self.0) {
            Ok(t) => BytesRepr::Text(t.to_string()),
            Err(_) => BytesRepr::Binary { b64: base64::engine::general_purpose::STANDARD.encode(&self.0) },
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Bytes {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        match BytesRepr::deserialize(d)? {
            BytesRepr::Text(t) => Ok(Bytes(t.into_bytes())),
            BytesRepr::Binary { b64 } => {
                base64::engine::general_purpose::STANDARD.decode(b64).map(Bytes).map_err(serde::de::Error::custom)
            }
        }
    }
}

fn default_timeout() -> f64 {
    DEFAULT_TEST_TIMEOUT_S
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IoTest {
    pub stdin: Bytes,
    pub expected_stdout: Bytes,
    #[serde(default = "default_timeout")]
    pub timeout_s: f64,
}

impl IoTest {
    pub fn new(stdin: impl Into<Bytes>, expected_stdout: impl Into<Bytes>) -> Self {
        Self { stdin: stdin.into(), expected_stdout: expected_stdout.into(), timeout_s: DEFAULT_TEST_TIMEOUT_S }
    }
}

fn is_true(b: &bool) -> bool {
    *b
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub id: String,
    pub origin: Origin,
    pub c_source: String,
    pub gimple: String,
    pub llvm_ir: String,
    pub granularity: Granularity,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub static_metrics: Option<StaticMetrics>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dynamic_metrics: Option<DynamicMetrics>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub io_tests: Option<Vec<IoTest>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wrapper_cpp: Option<String>,
    /// Problem the submission belongs to, for per-problem selection.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group: Option<String>,
    /// For function records: the translation unit they came from.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub function_name: Option<String>,
    /// False for function records, whose IR lacks the rest of the module.
    #[serde(default = "yes", skip_serializing_if = "is_true")]
    pub compiles_standalone: bool,
}

/// `origin-` followed by 12 hex digits of SHA-256 over `parts`.
pub fn content_id(origin: Origin, parts: &[&str]) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update(p.as_bytes());
        h.update([0u8]);
    }
    let digest = h.finalize();
    let hex: String = digest.iter().take(6).map(|b| format!("{b:02x}")).collect();
    format!("{}-{hex}", origin.as_str())
}

impl SampleRecord {
    /// A translation-unit record with computed static metrics.
    pub fn translation_unit(origin: Origin, c_source: String, gimple: String, llvm_ir: String) -> Self {
        Self {
            id: content_id(origin, &[&c_source]),
            origin,
            static_metrics: analyze_c(&c_source).ok(),
            c_source,
            gimple,
            llvm_ir,
            granularity: Granularity::TranslationUnit,
            dynamic_metrics: None,
            io_tests: None,
            wrapper_cpp: None,
            group: None,
            parent_id: None,
            function_name: None,
            compiles_standalone: true,
        }
    }
}

/// Dumps both IRs of `source`.
pub fn build_pair(source: &str, origin: Origin, cfg: &ToolchainConfig) -> Result<SampleRecord, DatasetError> {
    let g = cfg.dump_gimple(source);
    let l = cfg.dump_llvm_ir(source);
    let verdict = |r: &Result<String, ToolchainError>| -> Result<Option<String>, DatasetError> {
        match r {
            Ok(_) => Ok(None),
            Err(ToolchainError::ToolFailure { stderr, .. }) => Ok(Some(stderr.clone())),
            Err(e @ ToolchainError::DumpMissing { .. }) => Ok(Some(e.to_string())),
            Err(ToolchainError::ToolMissing { tool, path }) => {
                Err(ToolchainError::ToolMissing { tool: tool.clone(), path: path.clone() }.into())
            }
            Err(ToolchainError::Timeout { tool, seconds }) => {
                Err(ToolchainError::Timeout { tool: tool.clone(), seconds: *seconds }.into())
            }
            Err(e) => Ok(Some(e.to_string())),
        }
    };
    match (verdict(&g)?, verdict(&l)?) {
        (None, None) => Ok(SampleRecord::translation_unit(origin, source.to_string(), g.unwrap(), l.unwrap())),
        (Some(d), None) => Err(DatasetError::BuildRejected { side: RejectedSide::Gimple, diagnostics: d }),
        (None, Some(d)) => Err(DatasetError::BuildRejected { side: RejectedSide::Llvm, diagnostics: d }),
        (Some(a), Some(b)) => Err(DatasetError::BuildRejected { side: RejectedSide::Both, diagnostics: format!("{a}\n{b}") }),
    }
}

#[derive(Debug, Clone, Default)]
pub struct Explosion {
    pub records: Vec<SampleRecord>,
    pub unmatched: Vec<Unmatched>,
    pub clones_excluded: Vec<String>,
}

/// Splits a translation-unit record into one record per aligned function.
pub fn explode_functions(record: &SampleRecord) -> Result<Explosion, DatasetError> {
    if record.granularity != Granularity::TranslationUnit {
        return Err(DatasetError::NotTranslationUnit);
    }
    let gimple = irparse::parse_gimple_dump(&record.gimple)?;
    let module = irparse::parse_llvm_module(&record.llvm_ir)?;
    let c = irparse::extract_c_functions(&record.c_source)?;
    let alignment = irparse::align_functions(&gimple, &module.functions, &c.pairs(), record.origin.as_str())?;
    let records = alignment
        .triplets
        .iter()
        .map(|t| {
            let gimple_text = t.gimple_function.text(&record.gimple).to_string();
            let llvm_text = t.llvm_function.text();
            let name = irparse::normalize_symbol(&t.gimple_function.name).to_string();
            SampleRecord {
                id: content_id(record.origin, &[&record.id, &name, &gimple_text]),
                origin: record.origin,
                static_metrics: analyze_c(&t.c_function).ok(),
                c_source: t.c_function.clone(),
                gimple: gimple_text,
                llvm_ir: llvm_text,
                granularity: Granularity::Function,
                dynamic_metrics: None,
                io_tests: None,
                wrapper_cpp: None,
                group: record.group.clone(),
                parent_id: Some(record.id.clone()),
                function_name: Some(name),
                compiles_standalone: false,
            }
        })
        .collect();
    Ok(Explosion { records, unmatched: alignment.unmatched, clones_excluded: alignment.clones_excluded })
}

/// Keeps the first record of every normalized-source key.
pub fn dedup(records: Vec<SampleRecord>) -> Vec<SampleRecord> {
    let mut seen = HashSet::new();
    records.into_iter().filter(|r| seen.insert(normalize_for_dedup(&r.c_source))).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContextBudget {
    pub max_tokens: u64,
    pub chars_per_token: f64,
    /// Expected output tokens per input token.
    pub output_factor: f64,
}

impl Default for ContextBudget {
    fn default() -> Self {
        Self { max_tokens: 32768, chars_per_token: 4.0, output_factor: 3.0 }
    }
}

impl ContextBudget {
    pub fn estimate_tokens(&self, text: &str) -> u64 {
        (text.chars().count() as f64 / self.chars_per_token).ceil() as u64
    }

    /// Input plus expected output tokens.
    pub fn total_tokens(&self, gimple: &str) -> f64 {
        self.estimate_tokens(gimple) as f64 * (1.0 + self.output_factor)
    }

    pub fn fits(&self, gimple: &str) -> bool {
        self.total_tokens(gimple) <= self.max_tokens as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContextRejection {
    pub id: String,
    pub input_tokens: u64,
    pub total_tokens: f64,
}

pub fn filter_context(records: Vec<SampleRecord>, budget: &ContextBudget) -> (Vec<SampleRecord>, Vec<ContextRejection>) {
    let mut rejected = Vec::new();
    let kept = records
        .into_iter()
        .filter(|r| {
            if budget.fits(&r.gimple) {
                return true;
            }
            let rej = ContextRejection {
                id: r.id.clone(),
                input_tokens: budget.estimate_tokens(&r.gimple),
                total_tokens: budget.total_tokens(&r.gimple),
            };
            log::info!("context filter drops {} ({} input tokens, {} total)", rej.id, rej.input_tokens, rej.total_tokens);
            rejected.push(rej);
            false
        })
        .collect();
    (kept, rejected)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub name: String,
    pub record_count: usize,
    pub toolchain_versions: BTreeMap<String, String>,
    pub schema_version: u32,
    pub created_at: String,
}

/// The sidecar path for a data file.
pub fn manifest_path(data: &Path) -> PathBuf {
    data.with_extension("manifest")
}

/// RFC 3339 time of now, or of `SOURCE_DATE_EPOCH` when set.
pub fn timestamp_now() -> String {
    let t = std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|s| s.trim().parse::<u64>().ok())
        .map(|s| std::time::UNIX_EPOCH + std::time::Duration::from_secs(s))
        .unwrap_or_else(std::time::SystemTime::now);
    humantime::format_rfc3339_seconds(t).to_string()
}

/// Default corpus root: `$IRIS_CORPUS_DIR`, else `./corpora`.
pub fn default_corpus_dir() -> PathBuf {
    std::env::var_os("IRIS_CORPUS_DIR").map(PathBuf::from).unwrap_or_else(|| PathBuf::from("corpora"))
}

pub fn to_line(record: &SampleRecord) -> String {
    serde_json::to_string(record).expect("records serialize")
}

/// Appends records one line at a time; [`CorpusWriter::finish`] writes the
/// manifest.
pub struct CorpusWriter {
    path: PathBuf,
    out: BufWriter<File>,
    count: usize,
}

impl CorpusWriter {
    pub fn create(path: &Path) -> Result<Self, DatasetError> {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        Ok(Self { path: path.to_path_buf(), out: BufWriter::new(File::create(path)?), count: 0 })
    }

    /// Continues an existing data file.
    pub fn append(path: &Path) -> Result<Self, DatasetError> {
        let count = if path.exists() { read_corpus_lines(path)?.len() } else { 0 };
        let f = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(Self { path: path.to_path_buf(), out: BufWriter::new(f), count })
    }

    pub fn write(&mut self, record: &SampleRecord) -> Result<(), DatasetError> {
        writeln!(self.out, "{}", to_line(record))?;
        self.count += 1;
        Ok(())
    }

    pub fn flush(&mut self) -> Result<(), DatasetError> {
        self.out.flush()?;
        Ok(())
    }

    pub fn finish(mut self, toolchain_versions: BTreeMap<String, String>) -> Result<CorpusManifest, DatasetError> {
        self.out.flush()?;
        let manifest = CorpusManifest {
            name: self.path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default(),
            record_count: self.count,
            toolchain_versions,
            schema_version: SCHEMA_VERSION,
            created_at: timestamp_now(),
        };
        write_manifest(&self.path, &manifest)?;
        Ok(manifest)
    }
}

fn write_manifest(data: &Path, m: &CorpusManifest) -> Result<(), DatasetError> {
    let mut text = serde_json::to_string_pretty(m).expect("manifest serializes");
    text.push('\n');
    std::fs::write(manifest_path(data), text)?;
    Ok(())
}

pub fn write_corpus(
    records: &[SampleRecord],
    path: &Path,
    toolchain_versions: BTreeMap<String, String>,
) -> Result<CorpusManifest, DatasetError> {
    let mut w = CorpusWriter::create(path)?;
    for r in records {
        w.write(r)?;
    }
    w.finish(toolchain_versions)
}

pub fn read_manifest(data: &Path) -> Result<Option<CorpusManifest>, DatasetError> {
    let p = manifest_path(data);
    if !p.exists() {
        return Ok(None);
    }
    let text = std::fs::read_to_string(&p)?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| DatasetError::MalformedLine { line: e.line(), message: e.to_string() })?;
    let found = value.get("schema_version").and_then(|v| v.as_u64()).unwrap_or(0) as u32;
    if found != SCHEMA_VERSION {
        return Err(DatasetError::SchemaMismatch { found, expected: SCHEMA_VERSION });
    }
    serde_json::from_value(value)
        .map(Some)
        .map_err(|e| DatasetError::MalformedLine { line: 0, message: format!("manifest: {e}") })
}

fn read_corpus_lines(path: &Path) -> Result<Vec<SampleRecord>, DatasetError> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let r = serde_json::from_str(&line).map_err(|e| DatasetError::MalformedLine { line: i + 1, message: e.to_string() })?;
        out.push(r);
    }
    Ok(out)
}

/// Reads a data file, checking it against its manifest when one exists.
pub fn read_corpus(path: &Path) -> Result<Vec<SampleRecord>, DatasetError> {
    let manifest = read_manifest(path)?;
    let records = read_corpus_lines(path)?;
    if let Some(m) = manifest {
        if m.record_count != records.len() {
            return Err(DatasetError::CountMismatch { manifest: m.record_count, lines: records.len() });
        }
    }
    Ok(records)
}

/// Seeded shuffle, then the first `round(n * test_fraction)` go to test.
pub fn split(records: Vec<SampleRecord>, test_fraction: f64, seed: u64) -> (Vec<SampleRecord>, Vec<SampleRecord>) {
    let f = test_fraction.clamp(0.0, 1.0);
    let n_test = (records.len() as f64 * f).round() as usize;
    let mut idx: Vec<usize> = (0..records.len()).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let test_set: HashSet<usize> = idx[..n_test].iter().copied().collect();
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for (i, r) in records.into_iter().enumerate() {
        if test_set.contains(&i) {
            test.push(r);
        } else {
            train.push(r);
        }
    }
    (train, test)
}
