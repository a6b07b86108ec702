//! GIMPLE to LLVM IR translation backends and the source-to-executable
//! pipeline.
//!
//! Three backends are available: `remote` posts prompts to a
//! completions-style HTTP endpoint, `oracle` answers with a corpus's
//! ground-truth IR, and `replay` returns previously recorded outputs.

use crate::dataset::{self, SampleRecord};
use crate::toolchain::{ToolchainConfig, ToolchainError};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};
use thiserror::Error;

pub const DEFAULT_TEMPLATE: &str = "Input: Unoptimized GIMPLE, as emitted by the -fdump-tree-gimple flag of GCC.\n\n{gimple}\n\nInstruction: Translate the input into its LLVM IR counterpart.\n\nGoal: The .ll file containing the generated LLVM IR enables LLVM compilation to produce the corresponding executable.\n";

const PLACEHOLDER: &str = "{gimple}";

#[derive(Debug, Error)]
pub enum TranslateError {
    #[error("backend unavailable: {0}")]
    BackendUnavailable(String),
    #[error("sample {0} is unknown to the backend")]
    SampleUnknown(String),
    #[error("invalid backend configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Fills the default template.
pub fn render_prompt(gimple: &str) -> String {
    render_prompt_with(DEFAULT_TEMPLATE, gimple)
}

/// Substitutes the first `{gimple}` of `template`. Text inside `gimple` is
/// never reinterpreted.
pub fn render_prompt_with(template: &str, gimple: &str) -> String {
    match template.split_once(PLACEHOLDER) {
        Some((pre, post)) => format!("{pre}{gimple}{post}"),
        None => format!("{template}\n{gimple}\n"),
    }
}

const MODULE_STARTS: &[&str] = &[";", "define", "declare", "@", "target", "source_filename", "%"];
const MODULE_LINES: &[&str] =
    &[";", "define", "declare", "@", "target", "source_filename", "%", "attributes", "!", "$", "module asm", "uselistorder"];

fn starts_with_any(line: &str, prefixes: &[&str]) -> bool {
    let t = line.trim_start();
    prefixes.iter().any(|p| t.starts_with(p))
}

/// Pulls LLVM IR out of raw model output. The first fenced block wins;
/// otherwise the text from the first module-level line is kept. Prose after
/// the module ends is dropped. Text with no recognizable IR comes back
/// unchanged.
pub fn extract_ir(raw: &str) -> String {
    let body = first_fenced_block(raw).unwrap_or(raw);
    module_text(body).unwrap_or_else(|| body.to_string())
}

fn first_fenced_block(raw: &str) -> Option<&str> {
    let mut offset = 0;
    let mut start = None;
    for line in raw.split_inclusive('\n') {
        if line.trim_start().starts_with("```") {
            match start {
                None => start = Some(offset + line.len()),
                Some(s) => return Some(&raw[s..offset]),
            }
        }
        offset += line.len();
    }
    start.map(|s| &raw[s.min(raw.len())..])
}

fn module_text(text: &str) -> Option<String> {
    let mut lines = text.lines();
    let mut kept: Vec<&str> = Vec::new();
    // find the start line, possibly mid-line at an inline `define`
    loop {
        let line = lines.next()?;
        if starts_with_any(line, MODULE_STARTS) {
            kept.push(line);
            break;
        }
        if let Some(pos) = line.find("define ") {
            let before = line[..pos].chars().last();
            if before.is_none_or(|c| c.is_whitespace() || c == ':') {
                kept.push(&line[pos..]);
                break;
            }
        }
    }
    let mut in_function = opens_function(kept[0]);
    for line in lines {
        if in_function {
            kept.push(line);
            if line.trim_end() == "}" {
                in_function = false;
            }
            continue;
        }
        if line.trim().is_empty() || starts_with_any(line, MODULE_LINES) {
            kept.push(line);
            in_function = opens_function(line);
        } else {
            break;
        }
    }
    while kept.last().is_some_and(|l| l.trim().is_empty()) {
        kept.pop();
    }
    let mut out = kept.join("\n");
    out.push('\n');
    Some(out)
}

fn opens_function(line: &str) -> bool {
    let t = line.trim();
    t.starts_with("define") && t.ends_with('{')
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranslationRequest {
    pub sample_id: String,
    pub gimple: String,
    pub n_candidates: usize,
    pub max_output_tokens: u32,
    pub temperature: f64,
}

impl TranslationRequest {
    pub fn new(sample_id: &str, gimple: &str) -> Self {
        Self {
            sample_id: sample_id.to_string(),
            gimple: gimple.to_string(),
            n_candidates: 3,
            max_output_tokens: 8192,
            temperature: 0.2,
        }
    }

    pub fn for_record(r: &SampleRecord) -> Self {
        Self::new(&r.id, &r.gimple)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranslationResult {
    pub sample_id: String,
    pub candidates: Vec<String>,
    pub extracted: Vec<String>,
    pub backend_name: String,
    pub latency_s: Vec<f64>,
    /// Candidates cut off at `max_output_tokens`.
    pub budget_exceeded: Vec<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    #[default]
    Remote,
    Oracle,
    Replay,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ApiStyle {
    /// `{"prompt": ...}` requests, `choices[].text` responses.
    #[default]
    Completions,
    /// `{"messages": [...]}` requests, `choices[].message.content` responses.
    Chat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BackendConfig {
    pub kind: BackendKind,
    /// Remote endpoint; `IRIS_ENDPOINT` when unset.
    pub endpoint_url: Option<String>,
    pub model_name: String,
    /// Oracle corpus or replay file.
    pub corpus_path: Option<PathBuf>,
    pub request_timeout_s: f64,
    pub max_retries: u32,
    pub backoff_base_s: f64,
    pub api_style: ApiStyle,
    /// Prompt template with a `{gimple}` placeholder.
    pub prompt_template: String,
    /// Upper bound on concurrent requests.
    pub max_in_flight: usize,
}

impl Default for BackendConfig {
    fn default() -> Self {
        Self {
            kind: BackendKind::Remote,
            endpoint_url: None,
            model_name: String::new(),
            corpus_path: None,
            request_timeout_s: 300.0,
            max_retries: 4,
            backoff_base_s: 1.0,
            api_style: ApiStyle::Completions,
            prompt_template: DEFAULT_TEMPLATE.to_string(),
            max_in_flight: 4,
        }
    }
}

impl BackendConfig {
    pub fn oracle(corpus: &Path) -> Self {
        Self { kind: BackendKind::Oracle, model_name: "oracle".into(), corpus_path: Some(corpus.into()), ..Default::default() }
    }

    pub fn replay(file: &Path) -> Self {
        Self { kind: BackendKind::Replay, corpus_path: Some(file.into()), ..Default::default() }
    }

    pub fn remote(endpoint: &str, model: &str) -> Self {
        Self { endpoint_url: Some(endpoint.into()), model_name: model.into(), ..Default::default() }
    }

    fn endpoint(&self) -> Option<String> {
        self.endpoint_url.clone().or_else(|| std::env::var("IRIS_ENDPOINT").ok()).filter(|s| !s.is_empty())
    }

    pub fn validate(&self) -> Result<(), TranslateError> {
        match self.kind {
            BackendKind::Remote if self.endpoint().is_none() => {
                Err(TranslateError::Config("remote backend needs endpoint_url or IRIS_ENDPOINT".into()))
            }
            BackendKind::Oracle | BackendKind::Replay if self.corpus_path.is_none() => {
                Err(TranslateError::Config("oracle and replay backends need corpus_path".into()))
            }
            _ if !self.prompt_template.contains(PLACEHOLDER) => {
                Err(TranslateError::Config("prompt_template lacks the {gimple} placeholder".into()))
            }
            _ => Ok(()),
        }
    }
}

/// One recorded backend output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayEntry {
    pub sample_id: String,
    pub candidate_index: usize,
    pub raw_output: String,
}

/// Decoding settings saved next to a replay file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct ReplayMeta {
    pub backend_name: String,
    pub model_name: String,
    pub temperature: f64,
    pub max_output_tokens: u32,
    pub n_candidates: usize,
}

pub fn replay_meta_path(replay: &Path) -> PathBuf {
    let mut name = replay.file_name().unwrap_or_default().to_os_string();
    name.push(".meta.json");
    replay.with_file_name(name)
}

enum Backend {
    Remote { client: reqwest::blocking::Client, endpoint: String, api_key: Option<String> },
    Oracle { by_id: HashMap<String, String>, by_gimple: HashMap<String, String> },
    Replay { entries: HashMap<String, Vec<(usize, String)>>, meta: Option<ReplayMeta> },
}

/// Raw outputs with per-candidate latency and budget flags.
type Batch = (Vec<String>, Vec<f64>, Vec<bool>);

/// A configured backend; cheap to share between worker threads.
pub struct Translator {
    cfg: BackendConfig,
    backend: Backend,
}

impl Translator {
    pub fn new(cfg: BackendConfig) -> Result<Self, TranslateError> {
        cfg.validate()?;
        let backend = match cfg.kind {
            BackendKind::Remote => Backend::Remote {
                client: reqwest::blocking::Client::builder()
                    .timeout(Duration::from_secs_f64(cfg.request_timeout_s))
                    .build()
                    .map_err(|e| TranslateError::BackendUnavailable(e.to_string()))?,
                endpoint: cfg.endpoint().unwrap_or_default(),
                api_key: std::env::var("IRIS_API_KEY").ok().filter(|k| !k.is_empty()),
            },
            BackendKind::Oracle => {
                let path = cfg.corpus_path.as_ref().expect("validated");
                let records = dataset::read_corpus(path)
                    .map_err(|e| TranslateError::BackendUnavailable(format!("{}: {e}", path.display())))?;
                let mut by_id = HashMap::new();
                let mut by_gimple = HashMap::new();
                for r in records {
                    by_gimple.entry(r.gimple.clone()).or_insert_with(|| r.llvm_ir.clone());
                    by_id.insert(r.id, r.llvm_ir);
                }
                Backend::Oracle { by_id, by_gimple }
            }
            BackendKind::Replay => {
                let path = cfg.corpus_path.as_ref().expect("validated");
                let (entries, meta) = load_replay(path)?;
                Backend::Replay { entries, meta }
            }
        };
        Ok(Self { cfg, backend })
    }

    pub fn config(&self) -> &BackendConfig {
        &self.cfg
    }

    pub fn backend_name(&self) -> String {
        match &self.backend {
            Backend::Remote { .. } => format!("remote:{}", self.cfg.model_name),
            Backend::Oracle { .. } => "oracle".into(),
            Backend::Replay { meta: Some(m), .. } if !m.model_name.is_empty() => format!("replay:{}", m.model_name),
            Backend::Replay { .. } => "replay".into(),
        }
    }

    /// Decoding settings as recorded with results.
    pub fn meta(&self, req: &TranslationRequest) -> ReplayMeta {
        match &self.backend {
            Backend::Replay { meta: Some(m), .. } => m.clone(),
            _ => ReplayMeta {
                backend_name: self.backend_name(),
                model_name: self.cfg.model_name.clone(),
                temperature: req.temperature,
                max_output_tokens: req.max_output_tokens,
                n_candidates: req.n_candidates,
            },
        }
    }

    pub fn translate(&self, req: &TranslationRequest) -> Result<TranslationResult, TranslateError> {
        if req.n_candidates == 0 {
            return Err(TranslateError::Config("n_candidates must be at least 1".into()));
        }
        let (candidates, latency_s, budget_exceeded) = match &self.backend {
            Backend::Oracle { by_id, by_gimple } => {
                let start = Instant::now();
                let ir = by_id
                    .get(&req.sample_id)
                    .or_else(|| by_gimple.get(&req.gimple))
                    .ok_or_else(|| TranslateError::SampleUnknown(req.sample_id.clone()))?;
                let t = start.elapsed().as_secs_f64();
                (vec![ir.clone(); req.n_candidates], vec![t; req.n_candidates], vec![false; req.n_candidates])
            }
            Backend::Replay { entries, .. } => {
                let stored = entries.get(&req.sample_id).ok_or_else(|| TranslateError::SampleUnknown(req.sample_id.clone()))?;
                let picked: Vec<String> = stored.iter().take(req.n_candidates).map(|(_, s)| s.clone()).collect();
                if picked.len() < req.n_candidates {
                    log::warn!("replay has {} of {} candidates for {}", picked.len(), req.n_candidates, req.sample_id);
                }
                let n = picked.len();
                (picked, vec![0.0; n], vec![false; n])
            }
            Backend::Remote { client, endpoint, api_key } => self.remote(client, endpoint, api_key.as_deref(), req)?,
        };
        let extracted = candidates.iter().map(|c| extract_ir(c)).collect();
        Ok(TranslationResult {
            sample_id: req.sample_id.clone(),
            candidates,
            extracted,
            backend_name: self.backend_name(),
            latency_s,
            budget_exceeded,
        })
    }

    /// Requests the missing candidates until all `n` arrived, backing off
    /// exponentially between failed attempts.
    fn remote(
        &self,
        client: &reqwest::blocking::Client,
        endpoint: &str,
        api_key: Option<&str>,
        req: &TranslationRequest,
    ) -> Result<Batch, TranslateError> {
        let prompt = render_prompt_with(&self.cfg.prompt_template, &req.gimple);
        let n = req.n_candidates;
        let mut got: Vec<Option<(String, f64, bool)>> = vec![None; n];
        let mut attempt = 0u32;
        let mut last_error = String::new();
        while got.iter().any(Option::is_none) {
            let missing: Vec<usize> = (0..n).filter(|&i| got[i].is_none()).collect();
            let mut body = serde_json::json!({
                "model": self.cfg.model_name,
                "max_tokens": req.max_output_tokens,
                "temperature": req.temperature,
                "n": missing.len(),
            });
            match self.cfg.api_style {
                ApiStyle::Completions => body["prompt"] = prompt.clone().into(),
                ApiStyle::Chat => body["messages"] = serde_json::json!([{"role": "user", "content": prompt}]),
            }
            let mut rb = client.post(endpoint).header("Idempotency-Key", format!("{}-{}", req.sample_id, missing[0])).json(&body);
            if let Some(k) = api_key {
                rb = rb.bearer_auth(k);
            }
            let start = Instant::now();
            let outcome = rb.send().map_err(|e| (true, e.to_string())).and_then(|resp| {
                let status = resp.status();
                let text = resp.text().map_err(|e| (true, e.to_string()))?;
                if status.is_success() {
                    Ok(text)
                } else {
                    let retryable = status.is_server_error() || status.as_u16() == 429 || status.as_u16() == 408;
                    Err((retryable, format!("HTTP {status}: {}", text.chars().take(300).collect::<String>())))
                }
            });
            let elapsed = start.elapsed().as_secs_f64();
            match outcome.and_then(|text| parse_choices(&text).map_err(|e| (true, e))) {
                Ok(choices) => {
                    if choices.is_empty() {
                        last_error = "response carried no choices".into();
                    }
                    for ((text, truncated), slot) in choices.into_iter().zip(missing.iter()) {
                        got[*slot] = Some((text, elapsed, truncated));
                    }
                    if got.iter().all(Option::is_some) {
                        break;
                    }
                }
                Err((false, msg)) => return Err(TranslateError::BackendUnavailable(msg)),
                Err((true, msg)) => last_error = msg,
            }
            attempt += 1;
            if attempt > self.cfg.max_retries {
                return Err(TranslateError::BackendUnavailable(format!(
                    "{} after {attempt} attempts: {last_error}",
                    req.sample_id
                )));
            }
            let wait = self.cfg.backoff_base_s * 2f64.powi(attempt as i32 - 1);
            log::debug!("retrying {} in {wait:.2}s: {last_error}", req.sample_id);
            std::thread::sleep(Duration::from_secs_f64(wait));
        }
        let mut texts = Vec::with_capacity(n);
        let mut lat = Vec::with_capacity(n);
        let mut trunc = Vec::with_capacity(n);
        for (t, l, b) in got.into_iter().flatten() {
            if b {
                log::warn!("{}: candidate truncated at {} tokens", req.sample_id, req.max_output_tokens);
            }
            texts.push(t);
            lat.push(l);
            trunc.push(b);
        }
        Ok((texts, lat, trunc))
    }
}

/// Generated texts with their truncation flag, ordered by choice index.
fn parse_choices(body: &str) -> Result<Vec<(String, bool)>, String> {
    #[derive(Deserialize)]
    struct Message {
        content: Option<String>,
    }
    #[derive(Deserialize)]
    struct Choice {
        index: Option<usize>,
        text: Option<String>,
        message: Option<Message>,
        finish_reason: Option<String>,
    }
    #[derive(Deserialize)]
    struct Response {
        choices: Vec<Choice>,
    }
    let mut r: Response = serde_json::from_str(body).map_err(|e| format!("unreadable response: {e}"))?;
    r.choices.sort_by_key(|c| c.index.unwrap_or(usize::MAX));
    Ok(r.choices
        .into_iter()
        .map(|c| {
            let text = c.text.or_else(|| c.message.and_then(|m| m.content)).unwrap_or_default();
            (text, c.finish_reason.as_deref() == Some("length"))
        })
        .collect())
}

type ReplayIndex = HashMap<String, Vec<(usize, String)>>;

fn load_replay(path: &Path) -> Result<(ReplayIndex, Option<ReplayMeta>), TranslateError> {
    let file = std::fs::File::open(path).map_err(|e| TranslateError::BackendUnavailable(format!("{}: {e}", path.display())))?;
    let mut entries: ReplayIndex = HashMap::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let e: ReplayEntry = serde_json::from_str(&line)
            .map_err(|err| TranslateError::BackendUnavailable(format!("{} line {}: {err}", path.display(), i + 1)))?;
        entries.entry(e.sample_id).or_default().push((e.candidate_index, e.raw_output));
    }
    for v in entries.values_mut() {
        v.sort_by_key(|(i, _)| *i);
    }
    let meta = std::fs::read_to_string(replay_meta_path(path)).ok().and_then(|t| serde_json::from_str(&t).ok());
    Ok((entries, meta))
}

/// Writes translation results as replay lines plus the meta sidecar.
pub fn write_replay(path: &Path, results: &[TranslationResult], meta: &ReplayMeta) -> std::io::Result<()> {
    let mut out = String::new();
    for r in results {
        for (i, raw) in r.candidates.iter().enumerate() {
            let e = ReplayEntry { sample_id: r.sample_id.clone(), candidate_index: i, raw_output: raw.clone() };
            out.push_str(&serde_json::to_string(&e).expect("replay entries serialize"));
            out.push('\n');
        }
    }
    std::fs::write(path, out)?;
    std::fs::write(replay_meta_path(path), serde_json::to_string_pretty(meta).expect("meta serializes") + "\n")
}

/// Translates `req` with a one-off backend.
pub fn translate(req: &TranslationRequest, backend: &BackendConfig) -> Result<TranslationResult, TranslateError> {
    Translator::new(backend.clone())?.translate(req)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageTrace {
    pub stage: String,
    pub ok: bool,
    pub artifacts: Vec<PathBuf>,
    pub diagnostics: String,
}

#[derive(Debug, Error)]
#[error("pipeline failed at stage {stage}: {diagnostics}")]
pub struct PipelineError {
    pub stage: String,
    pub diagnostics: String,
    pub trace: Vec<StageTrace>,
}

#[derive(Debug, Clone)]
pub struct EndToEnd {
    pub executable: PathBuf,
    pub trace: Vec<StageTrace>,
}

fn defines_main(ir: &str) -> bool {
    ir.lines().any(|l| l.starts_with("define") && l.contains("@main("))
}

/// Source to executable: GIMPLE dump, translation, the first candidate that
/// compiles, then linking (with an empty driver when the IR has no `main`).
/// All artifacts are written under `workdir`.
pub fn run_end_to_end(
    source: &str,
    translator: &Translator,
    cfg: &ToolchainConfig,
    workdir: &Path,
) -> Result<EndToEnd, PipelineError> {
    let mut trace = Vec::new();
    let fail = |stage: &str, diagnostics: String, mut trace: Vec<StageTrace>| {
        trace.push(StageTrace { stage: stage.into(), ok: false, artifacts: vec![], diagnostics: diagnostics.clone() });
        PipelineError { stage: stage.into(), diagnostics, trace }
    };
    if let Err(e) = std::fs::create_dir_all(workdir) {
        return Err(fail("setup", e.to_string(), trace));
    }
    let src_path = workdir.join("input.c");
    let _ = std::fs::write(&src_path, source);

    let gimple = match cfg.dump_gimple(source) {
        Ok(g) => g,
        Err(e) => return Err(fail("gimple", e.to_string(), trace)),
    };
    let gimple_path = workdir.join("input.gimple");
    let _ = std::fs::write(&gimple_path, &gimple);
    trace.push(StageTrace { stage: "gimple".into(), ok: true, artifacts: vec![gimple_path], diagnostics: String::new() });

    let id = dataset::content_id(dataset::Origin::Local, &[source]);
    let result = match translator.translate(&TranslationRequest::new(&id, &gimple)) {
        Ok(r) => r,
        Err(e) => return Err(fail("translate", e.to_string(), trace)),
    };
    let mut cand_paths = Vec::new();
    for (i, ir) in result.extracted.iter().enumerate() {
        let p = workdir.join(format!("candidate{i}.ll"));
        let _ = std::fs::write(&p, ir);
        cand_paths.push(p);
    }
    trace.push(StageTrace {
        stage: "translate".into(),
        ok: true,
        artifacts: cand_paths,
        diagnostics: result.backend_name.clone(),
    });

    let mut diagnostics = Vec::new();
    let mut chosen = None;
    for (i, ir) in result.extracted.iter().enumerate() {
        let dir = workdir.join(format!("build{i}"));
        if let Err(e) = std::fs::create_dir_all(&dir) {
            return Err(fail("llc", e.to_string(), trace));
        }
        match cfg.compile_ir_to_object(ir, &dir) {
            Ok(obj) => {
                chosen = Some((i, obj, dir));
                break;
            }
            Err(ToolchainError::IrRejected { diagnostics: d }) => diagnostics.push(format!("candidate {i}: {d}")),
            Err(e) => diagnostics.push(format!("candidate {i}: {e}")),
        }
    }
    let Some((i, obj, dir)) = chosen else {
        return Err(fail("llc", diagnostics.join("\n"), trace));
    };
    trace.push(StageTrace { stage: "llc".into(), ok: true, artifacts: vec![obj.clone()], diagnostics: diagnostics.join("\n") });

    let linked =
        if defines_main(&result.extracted[i]) { cfg.link_program(&obj, &dir) } else { cfg.link_with_trivial_driver(&obj, &dir) };
    match linked {
        Ok(exe) => {
            trace.push(StageTrace { stage: "link".into(), ok: true, artifacts: vec![exe.clone()], diagnostics: String::new() });
            Ok(EndToEnd { executable: exe, trace })
        }
        Err(e) => Err(fail("link", e.to_string(), trace)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prompt_sections_and_verbatim_input() {
        let p = render_prompt("int f ()\n{\n}\n");
        assert!(p.starts_with("Input: Unoptimized GIMPLE"));
        assert!(p.contains("Instruction: Translate the input into its LLVM IR counterpart."));
        assert!(p.contains("Goal: The .ll file"));
        assert_eq!(p.matches("int f ()\n{\n}\n").count(), 1);
        assert_eq!(render_prompt(""), render_prompt(""));
        assert_eq!(render_prompt("{gimple}").matches("{gimple}").count(), 1);
    }

    #[test]
    fn fenced_output() {
        assert_eq!(
            extract_ir("```llvm\ndefine i32 @f() {\n  ret i32 0\n}\n```\nThat's it."),
            "define i32 @f() {\n  ret i32 0\n}\n"
        );
        assert_eq!(
            extract_ir("Sure:\n```\n; m\ndefine void @g() {\n  ret void\n}\n"),
            "; m\ndefine void @g() {\n  ret void\n}\n"
        );
    }

    #[test]
    fn pure_ir_unchanged() {
        let ir = "; ModuleID = 'x'\nsource_filename = \"x\"\n\ndefine i32 @main() #0 {\n  ret i32 0\n}\n\nattributes #0 = { noinline }\n\n!llvm.ident = !{!0}\n!0 = !{!\"clang\"}\n";
        assert_eq!(extract_ir(ir), ir);
    }

    #[test]
    fn prose_around_ir() {
        let raw = "Here is the IR: define i32 @f() {\n  ret i32 1\n}\nThis returns one.\n";
        assert_eq!(extract_ir(raw), "define i32 @f() {\n  ret i32 1\n}\n");
        assert_eq!(extract_ir("no ir here"), "no ir here");
        let raw =
            "Explanation first.\n\ndefine i32 @f() {\nentry:\n  ret i32 1\n}\n\nattributes #0 = { nounwind }\nHope this helps!\n";
        assert_eq!(extract_ir(raw), "define i32 @f() {\nentry:\n  ret i32 1\n}\n\nattributes #0 = { nounwind }\n");
    }

    #[test]
    fn choices_parsing() {
        let c = parse_choices(
            r#"{"choices":[{"index":1,"text":"b","finish_reason":"length"},{"index":0,"text":"a","finish_reason":"stop"}]}"#,
        )
        .unwrap();
        assert_eq!(c, vec![("a".to_string(), false), ("b".to_string(), true)]);
        let c = parse_choices(r#"{"choices":[{"message":{"role":"assistant","content":"x"}}]}"#).unwrap();
        assert_eq!(c, vec![("x".to_string(), false)]);
        assert!(parse_choices("nope").is_err());
    }

    #[test]
    fn config_validation() {
        assert!(BackendConfig { kind: BackendKind::Oracle, ..Default::default() }.validate().is_err());
        assert!(BackendConfig::remote("http://localhost:1", "m").validate().is_ok());
        let mut c = BackendConfig::remote("http://localhost:1", "m");
        c.prompt_template = "no placeholder".into();
        assert!(c.validate().is_err());
    }
}
