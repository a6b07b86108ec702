use crate::config::RunConfig;
use crate::runner::{Runner, Staged};
use crate::{Failure, Global};
use anyhow::Context;
use clap::Args;
use iris_core::analysis::{self, LeaderboardEntry, OutcomeCriterion};
use iris_core::cmetrics::{analyze_c, measure_dynamic, DynamicError, DynamicMetrics};
use iris_core::dataset::{self, build_pair, IoTest, Origin, SampleRecord, DEFAULT_TEST_TIMEOUT_S};
use iris_core::evalharness::{
    aggregate, build_wrapper, evaluate_candidate, validate_ground_truth, CandidateResult, EvalReport, EvalTask,
};
use iris_core::toolchain::ToolchainConfig;
use iris_core::translate::{
    write_replay, BackendConfig, BackendKind, TranslateError, TranslationRequest, TranslationResult, Translator,
};
use iris_core::Execution;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use std::time::Duration;
use walkdir::WalkDir;

/// Bare file names that do not exist locally are looked up under
/// `IRIS_CORPUS_DIR`.
fn corpus_input(p: &Path) -> PathBuf {
    if p.exists() || p.components().count() > 1 {
        return p.to_path_buf();
    }
    let alt = dataset::default_corpus_dir().join(p);
    if alt.exists() {
        alt
    } else {
        p.to_path_buf()
    }
}

fn read_input(p: &Path) -> Result<Vec<SampleRecord>, Failure> {
    let p = corpus_input(p);
    if !p.exists() {
        return Err(Failure::Config(format!("input corpus {} does not exist", p.display())));
    }
    dataset::read_corpus(&p).with_context(|| format!("reading {}", p.display())).map_err(Failure::Runtime)
}

fn require_toolchain(tc: &ToolchainConfig) -> Result<(), Failure> {
    tc.validate().map_err(|e| Failure::ToolchainMissing(e.to_string()))
}

fn check_partial(stage: &'static str, failed: usize, total: usize, cfg: &RunConfig) -> Result<(), Failure> {
    if total > 0 && failed as f64 / total as f64 > cfg.failure_threshold {
        return Err(Failure::Partial { stage, failed, total, threshold: cfg.failure_threshold });
    }
    Ok(())
}

fn runner(out: &Path, g: &Global, cfg: &RunConfig) -> Runner {
    Runner::for_output(out, g.resume, cfg.parallelism, g.quiet)
}

/// First line at warn level, the full diagnostic at debug.
fn warn_item(id: &str, e: &dyn std::fmt::Display) {
    let full = format!("{e:#}");
    let first = full.lines().next().unwrap_or_default();
    log::warn!("{id}: {first}");
    if full.contains('\n') {
        log::debug!("{id}: {full}");
    }
}

fn create_parent(p: &Path) -> std::io::Result<()> {
    match p.parent() {
        Some(d) if !d.as_os_str().is_empty() => std::fs::create_dir_all(d),
        _ => Ok(()),
    }
}

// ---------------------------------------------------------------- ingest

#[derive(Args)]
pub struct IngestArgs {
    /// Directory of `.c` files. `<stem>.tests/NN.in` + `NN.out` hold I/O
    /// tests and `<stem>.wrapper.cpp` an optional test wrapper.
    pub sources: PathBuf,
    #[arg(short, long)]
    pub out: Option<PathBuf>,
    /// Origin tag for ids and manifests.
    #[arg(long)]
    pub origin: Option<Origin>,
}

struct SourceItem {
    rel: String,
    source: String,
    tests: Option<Vec<IoTest>>,
    wrapper: Option<String>,
    group: Option<String>,
}

fn load_tests(dir: &Path) -> anyhow::Result<Option<Vec<IoTest>>> {
    if !dir.is_dir() {
        return Ok(None);
    }
    let mut tests = Vec::new();
    for e in WalkDir::new(dir).min_depth(1).max_depth(1).sort_by_file_name() {
        let p = e?.into_path();
        if p.extension().is_some_and(|x| x == "in") {
            let out = p.with_extension("out");
            let stdin = std::fs::read(&p)?;
            let expected = std::fs::read(&out).with_context(|| format!("{} has no matching .out", p.display()))?;
            tests.push(IoTest::new(stdin, expected));
        }
    }
    Ok(Some(tests))
}

fn scan_sources(root: &Path) -> anyhow::Result<Vec<SourceItem>> {
    let mut items = Vec::new();
    for e in WalkDir::new(root).sort_by_file_name() {
        let e = e?;
        let p = e.path();
        if !e.file_type().is_file() || p.extension().is_none_or(|x| x != "c") {
            continue;
        }
        let rel = p.strip_prefix(root).unwrap_or(p);
        let group = rel.parent().map(|g| g.to_string_lossy().replace('\\', "/")).filter(|g| !g.is_empty());
        let wrapper_path = p.with_extension("wrapper.cpp");
        items.push(SourceItem {
            rel: rel.to_string_lossy().replace('\\', "/"),
            source: std::fs::read_to_string(p).with_context(|| p.display().to_string())?,
            tests: load_tests(&p.with_extension("tests"))?,
            wrapper: wrapper_path.exists().then(|| std::fs::read_to_string(&wrapper_path)).transpose()?,
            group,
        });
    }
    Ok(items)
}

#[derive(Serialize, Deserialize)]
struct Built {
    record: Option<SampleRecord>,
    error: Option<String>,
}

impl Staged for Built {
    fn ok(&self) -> bool {
        self.record.is_some()
    }
}

pub fn ingest(a: &IngestArgs, cfg: &mut RunConfig, g: &Global) -> Result<(), Failure> {
    if !a.sources.is_dir() {
        return Err(Failure::Config(format!("{} is not a directory", a.sources.display())));
    }
    let origin = a.origin.unwrap_or(cfg.ingest.origin);
    let out = a.out.clone().unwrap_or_else(|| cfg.workdir.join("corpus.jsonl"));
    let items = scan_sources(&a.sources).map_err(Failure::Runtime)?;
    if g.dry_run {
        println!(
            "ingest: {} sources under {} -> {} (origin {}, parallelism {})",
            items.len(),
            a.sources.display(),
            out.display(),
            origin.as_str(),
            cfg.parallelism
        );
        for it in &items {
            let tests = it.tests.as_ref().map_or(0, Vec::len);
            println!("  build {} ({} tests{})", it.rel, tests, if it.wrapper.is_some() { ", wrapper" } else { "" });
        }
        return Ok(());
    }
    require_toolchain(&cfg.toolchain)?;
    let tc = &cfg.toolchain;
    let run = runner(&out, g, cfg);
    let done = run.run(
        &items,
        |it| it.rel.clone(),
        |it| match build_pair(&it.source, origin, tc) {
            Ok(mut r) => {
                r.io_tests = it.tests.clone();
                r.wrapper_cpp = it.wrapper.clone();
                r.group = it.group.clone();
                Built { record: Some(r), error: None }
            }
            Err(e) => {
                warn_item(&it.rel, &e);
                Built { record: None, error: Some(format!("{}: {e}", it.rel)) }
            }
        },
    )?;
    let built: Vec<SampleRecord> = done.staged.into_iter().filter_map(|b| b.record).collect();
    let n_built = built.len();
    let unique = dataset::dedup(built);
    let duplicates = n_built - unique.len();
    let (kept, context) =
        if cfg.ingest.context_filter { dataset::filter_context(unique, &cfg.ingest.budget()) } else { (unique, Vec::new()) };
    dataset::write_corpus(&kept, &out, tc.versions())?;
    run.finish()?;
    let rejected = done.failed + duplicates + context.len();
    println!(
        "kept={} rejected={} build_rejected={} duplicates={} context_rejected={}",
        kept.len(),
        rejected,
        done.failed,
        duplicates,
        context.len()
    );
    check_partial("ingest", done.failed, items.len(), cfg)
}

// ---------------------------------------------------------------- pairs

#[derive(Args)]
pub struct PairsArgs {
    pub corpus: PathBuf,
    #[arg(short, long)]
    pub out: Option<PathBuf>,
}

pub fn pairs(a: &PairsArgs, cfg: &RunConfig, g: &Global) -> Result<(), Failure> {
    let records = read_input(&a.corpus)?;
    let out = a.out.clone().unwrap_or_else(|| cfg.workdir.join("functions.jsonl"));
    if g.dry_run {
        println!("pairs: explode {} records from {} -> {}", records.len(), a.corpus.display(), out.display());
        return Ok(());
    }
    let exec = Execution::default();
    let exploded = exec.install(cfg.parallelism, || exec.map(&records, dataset::explode_functions));
    let (mut functions, mut unmatched, mut clones, mut failed) = (Vec::new(), 0, 0, 0);
    for (r, e) in records.iter().zip(exploded) {
        match e {
            Ok(x) => {
                unmatched += x.unmatched.len();
                clones += x.clones_excluded.len();
                functions.extend(x.records);
            }
            Err(e) => {
                failed += 1;
                if !g.quiet {
                    eprintln!("{}: {e}", r.id);
                }
            }
        }
    }
    dataset::write_corpus(&functions, &out, cfg.toolchain.versions())?;
    println!(
        "records={} functions={} unmatched={} clones_excluded={} failed={}",
        records.len(),
        functions.len(),
        unmatched,
        clones,
        failed
    );
    check_partial("pairs", failed, records.len(), cfg)
}

// ---------------------------------------------------------------- metrics

#[derive(Args)]
pub struct MetricsArgs {
    pub corpus: PathBuf,
    #[arg(short, long)]
    pub out: Option<PathBuf>,
    /// Also build and run every sample to measure dynamic metrics.
    #[arg(long)]
    pub dynamic: bool,
}

#[derive(Serialize, Deserialize)]
struct Measured {
    record: SampleRecord,
    error: Option<String>,
}

impl Staged for Measured {
    fn ok(&self) -> bool {
        self.error.is_none()
    }
}

fn defines_main(ir: &str) -> bool {
    ir.lines().any(|l| l.starts_with("define") && l.contains("@main("))
}

fn measure(r: &SampleRecord, tc: &ToolchainConfig) -> anyhow::Result<DynamicMetrics> {
    let dir = tempfile::tempdir()?;
    let obj = tc.compile_ir_to_object(&r.llvm_ir, dir.path())?;
    let exe = if r.wrapper_cpp.is_some() {
        let full = build_wrapper(&EvalTask::for_sample(r.clone()), tc)?;
        tc.link_with_wrapper(&obj, &full, dir.path())?
    } else if defines_main(&r.llvm_ir) {
        tc.link_program(&obj, dir.path())?
    } else {
        tc.link_with_trivial_driver(&obj, dir.path())?
    };
    let first = r.io_tests.as_ref().and_then(|t| t.first());
    let stdin = first.map_or(&[][..], |t| &t.stdin.0[..]);
    let timeout = first.map_or(DEFAULT_TEST_TIMEOUT_S, |t| t.timeout_s);
    match measure_dynamic(&exe, stdin, Duration::from_secs_f64(timeout)) {
        Ok(d) | Err(DynamicError::NonzeroExit { partial: d, .. }) => Ok(d),
        Err(e) => Err(e.into()),
    }
}

pub fn metrics(a: &MetricsArgs, cfg: &RunConfig, g: &Global) -> Result<(), Failure> {
    let records = read_input(&a.corpus)?;
    let out = a.out.clone().unwrap_or_else(|| cfg.workdir.join("metrics.jsonl"));
    if g.dry_run {
        let what = if a.dynamic { "static and dynamic" } else { "static" };
        println!("metrics: {what} metrics for {} records from {} -> {}", records.len(), a.corpus.display(), out.display());
        return Ok(());
    }
    if a.dynamic {
        require_toolchain(&cfg.toolchain)?;
    }
    let tc = &cfg.toolchain;
    let run = runner(&out, g, cfg);
    let done = run.run(
        &records,
        |r| r.id.clone(),
        |r| {
            let mut rec = r.clone();
            let mut error = None;
            match analyze_c(&rec.c_source) {
                Ok(m) => rec.static_metrics = Some(m),
                Err(e) => error = Some(format!("static: {e}")),
            }
            if a.dynamic && error.is_none() {
                match measure(&rec, tc) {
                    Ok(d) => rec.dynamic_metrics = Some(d),
                    Err(e) => error = Some(format!("dynamic: {e:#}")),
                }
            }
            if let Some(e) = &error {
                warn_item(&rec.id, e);
            }
            Measured { record: rec, error }
        },
    )?;
    let failed = done.failed;
    let recs: Vec<SampleRecord> = done.staged.into_iter().map(|m| m.record).collect();
    dataset::write_corpus(&recs, &out, tc.versions())?;
    run.finish()?;
    println!("records={} failed={}", recs.len(), failed);
    check_partial("metrics", failed, recs.len(), cfg)
}

// ---------------------------------------------------------------- select

#[derive(Args)]
pub struct SelectArgs {
    pub corpus: PathBuf,
    #[arg(short, long)]
    pub out: Option<PathBuf>,
    /// Representatives per group.
    #[arg(long)]
    pub k: Option<usize>,
}

pub fn select(a: &SelectArgs, cfg: &mut RunConfig, g: &Global) -> Result<(), Failure> {
    if let Some(k) = a.k {
        cfg.select.k = k;
    }
    cfg.check().map_err(Failure::Config)?;
    let mut records = read_input(&a.corpus)?;
    let out = a.out.clone().unwrap_or_else(|| cfg.workdir.join("selected.jsonl"));
    let mut groups: Vec<(String, Vec<SampleRecord>)> = Vec::new();
    for r in records.drain(..) {
        let key = r.group.clone().unwrap_or_default();
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, v)) => v.push(r),
            None => groups.push((key, vec![r])),
        }
    }
    if g.dry_run {
        println!(
            "select: k={} seed={} over {} groups from {} -> {}",
            cfg.select.k,
            cfg.seed,
            groups.len(),
            a.corpus.display(),
            out.display()
        );
        for (k, v) in &groups {
            println!("  group {:?}: {} records", k, v.len());
        }
        return Ok(());
    }
    for (_, v) in groups.iter_mut() {
        for r in v.iter_mut().filter(|r| r.static_metrics.is_none()) {
            r.static_metrics = analyze_c(&r.c_source).ok();
        }
    }
    let exec = Execution::default();
    let (k, seed) = (cfg.select.k, cfg.seed);
    let picked = exec.install(cfg.parallelism, || exec.map(&groups, |(_, v)| iris_core::select::select_submissions(v, k, seed)));
    let mut selected = Vec::new();
    let mut failed = 0;
    for ((key, _), p) in groups.iter().zip(picked) {
        match p {
            Ok(p) => selected.extend(p),
            Err(e) => {
                failed += 1;
                eprintln!("group {key:?}: {e}");
            }
        }
    }
    dataset::write_corpus(&selected, &out, cfg.toolchain.versions())?;
    println!("groups={} selected={} failed={}", groups.len(), selected.len(), failed);
    check_partial("select", failed, groups.len(), cfg)
}

// ---------------------------------------------------------------- translate

#[derive(Args)]
pub struct TranslateArgs {
    pub corpus: PathBuf,
    /// Replay file to write.
    #[arg(short, long)]
    pub out: Option<PathBuf>,
    /// remote, oracle or replay.
    #[arg(long, value_parser = parse_backend)]
    pub backend: Option<BackendKind>,
    /// Completions endpoint for the remote backend.
    #[arg(long, env = "IRIS_ENDPOINT")]
    pub endpoint: Option<String>,
    #[arg(long)]
    pub model: Option<String>,
    /// Oracle corpus or replay file used by the backend.
    #[arg(long)]
    pub backend_corpus: Option<PathBuf>,
    /// Candidates per sample.
    #[arg(short = 'n', long)]
    pub candidates: Option<usize>,
}

fn parse_backend(s: &str) -> Result<BackendKind, String> {
    serde_json::from_value(serde_json::Value::String(s.into()))
        .map_err(|_| format!("unknown backend `{s}` (remote, oracle, replay)"))
}

#[derive(Serialize, Deserialize)]
struct Translated {
    sample_id: String,
    candidates: Vec<String>,
    error: Option<String>,
}

impl Staged for Translated {
    fn ok(&self) -> bool {
        self.error.is_none()
    }
}

fn translator_error(e: TranslateError) -> Failure {
    match e {
        TranslateError::Config(m) => Failure::Config(m),
        e => Failure::Runtime(e.into()),
    }
}

pub fn translate(a: &TranslateArgs, cfg: &mut RunConfig, g: &Global) -> Result<(), Failure> {
    let input = corpus_input(&a.corpus);
    let b = &mut cfg.backend;
    if let Some(k) = a.backend {
        b.kind = k;
    }
    if a.endpoint.is_some() {
        b.endpoint_url = a.endpoint.clone();
    }
    if let Some(m) = &a.model {
        b.model_name = m.clone();
    }
    if let Some(p) = &a.backend_corpus {
        b.corpus_path = Some(p.clone());
    }
    if b.kind == BackendKind::Oracle && b.corpus_path.is_none() {
        b.corpus_path = Some(input.clone());
    }
    if let Some(n) = a.candidates {
        cfg.translate.n_candidates = n;
    }
    cfg.check().map_err(Failure::Config)?;
    cfg.backend.validate().map_err(translator_error)?;
    let records = read_input(&input)?;
    let out = a.out.clone().unwrap_or_else(|| cfg.workdir.join("replay.jsonl"));
    if g.dry_run {
        println!(
            "translate: {} samples from {} with the {:?} backend, {} candidates each -> {}",
            records.len(),
            input.display(),
            cfg.backend.kind,
            cfg.translate.n_candidates,
            out.display()
        );
        return Ok(());
    }
    let translator = Translator::new(cfg.backend.clone()).map_err(translator_error)?;
    let t = &cfg.translate;
    let request = |r: &SampleRecord| {
        let mut req = TranslationRequest::new(&r.id, &r.gimple);
        req.n_candidates = t.n_candidates;
        req.max_output_tokens = t.max_output_tokens;
        req.temperature = t.temperature;
        req
    };
    let mut run = runner(&out, g, cfg);
    if cfg.backend.kind == BackendKind::Remote {
        run.parallelism = run.parallelism.min(cfg.backend.max_in_flight.max(1));
    }
    let done = run.run(
        &records,
        |r| r.id.clone(),
        |r| match translator.translate(&request(r)) {
            Ok(res) => Translated { sample_id: r.id.clone(), candidates: res.candidates, error: None },
            Err(e) => {
                warn_item(&r.id, &e);
                Translated { sample_id: r.id.clone(), candidates: Vec::new(), error: Some(e.to_string()) }
            }
        },
    )?;
    let results: Vec<TranslationResult> = done
        .staged
        .iter()
        .filter(|s| s.ok())
        .map(|s| TranslationResult {
            sample_id: s.sample_id.clone(),
            candidates: s.candidates.clone(),
            extracted: Vec::new(),
            backend_name: translator.backend_name(),
            latency_s: Vec::new(),
            budget_exceeded: Vec::new(),
        })
        .collect();
    let mut probe = TranslationRequest::new("", "");
    probe.n_candidates = t.n_candidates;
    probe.max_output_tokens = t.max_output_tokens;
    probe.temperature = t.temperature;
    let meta = translator.meta(&probe);
    create_parent(&out)?;
    write_replay(&out, &results, &meta)?;
    run.finish()?;
    println!("translated={} failed={} backend={}", results.len(), done.failed, translator.backend_name());
    check_partial("translate", done.failed, records.len(), cfg)
}

// ---------------------------------------------------------------- eval

#[derive(Args)]
pub struct EvalArgs {
    pub corpus: PathBuf,
    /// Replay file with the candidates to score.
    #[arg(long)]
    pub replay: Option<PathBuf>,
    /// Output directory.
    #[arg(short, long)]
    pub out: Option<PathBuf>,
    /// Score every sample, even those whose own IR fails its tests.
    #[arg(long)]
    pub no_validate: bool,
}

#[derive(Serialize, Deserialize)]
struct Scored {
    sample_id: String,
    excluded: bool,
    results: Vec<CandidateResult>,
}

impl Staged for Scored {
    fn ok(&self) -> bool {
        !self.excluded
    }
}

/// Results without timings, so reruns are byte-identical.
fn result_line(r: &CandidateResult) -> String {
    let mut v = serde_json::to_value(r).expect("results serialize");
    if let Some(tests) = v["per_test"].as_array_mut() {
        for t in tests {
            if let Some(o) = t.as_object_mut() {
                o.remove("wall_s");
            }
        }
    }
    v.to_string()
}

pub fn eval(a: &EvalArgs, cfg: &RunConfig, g: &Global) -> Result<(), Failure> {
    let records = read_input(&a.corpus)?;
    let replay = a.replay.clone().unwrap_or_else(|| cfg.workdir.join("replay.jsonl"));
    let out_dir = a.out.clone().unwrap_or_else(|| cfg.workdir.join("eval"));
    if !replay.exists() {
        return Err(Failure::Config(format!("replay file {} does not exist", replay.display())));
    }
    let validate = cfg.eval.validate_ground_truth && !a.no_validate;
    if g.dry_run {
        println!(
            "eval: {} samples from {} against {}{} -> {}",
            records.len(),
            a.corpus.display(),
            replay.display(),
            if validate { " after ground-truth validation" } else { "" },
            out_dir.display()
        );
        return Ok(());
    }
    require_toolchain(&cfg.toolchain)?;
    let translator = Translator::new(BackendConfig::replay(&replay)).map_err(translator_error)?;
    let probe = TranslationRequest::new("", "");
    let n = std::fs::read_to_string(iris_core::translate::replay_meta_path(&replay))
        .ok()
        .map(|_| translator.meta(&probe).n_candidates)
        .unwrap_or(cfg.translate.n_candidates)
        .max(1);
    let tc = &cfg.toolchain;
    let results_path = out_dir.join("results.jsonl");
    let run = runner(&results_path, g, cfg);
    let done = run.run(
        &records,
        |r| r.id.clone(),
        |r| {
            let task = EvalTask::for_sample(r.clone());
            if validate && !validate_ground_truth(&task, tc) {
                log::warn!("{}: ground truth fails its own tests; excluded", r.id);
                return Scored { sample_id: r.id.clone(), excluded: true, results: Vec::new() };
            }
            let mut req = TranslationRequest::for_record(r);
            req.n_candidates = n;
            let mut cands = match translator.translate(&req) {
                Ok(t) => t.extracted,
                Err(e) => {
                    warn_item(&r.id, &e);
                    Vec::new()
                }
            };
            cands.resize(n, String::new());
            let results = cands.iter().enumerate().map(|(i, ir)| evaluate_candidate(ir, i, &task, tc)).collect();
            Scored { sample_id: r.id.clone(), excluded: false, results }
        },
    )?;

    std::fs::create_dir_all(&out_dir)?;
    let mut lines = String::new();
    let mut timings = String::new();
    let mut excluded = String::new();
    let mut all = Vec::new();
    for s in &done.staged {
        if s.excluded {
            excluded.push_str(&s.sample_id);
            excluded.push('\n');
        }
        for r in &s.results {
            lines.push_str(&result_line(r));
            lines.push('\n');
            let walls: Vec<f64> = r.per_test.iter().map(|t| t.wall_s).collect();
            timings.push_str(
                &serde_json::json!({"sample_id": r.sample_id, "candidate_index": r.candidate_index, "wall_s": walls}).to_string(),
            );
            timings.push('\n');
        }
        all.extend(s.results.iter().cloned());
    }
    run.finish()?;
    std::fs::write(&results_path, lines)?;
    std::fs::write(out_dir.join("timings.jsonl"), timings)?;
    std::fs::write(out_dir.join("excluded.txt"), excluded)?;
    let ks: Vec<u64> = cfg.eval.k_values.iter().copied().filter(|&k| k >= 1 && k <= n as u64).collect();
    match aggregate(&all, &ks) {
        Ok(report) => {
            std::fs::write(out_dir.join("report.json"), serde_json::to_string_pretty(&report)? + "\n")?;
            let table = report.render_table();
            std::fs::write(out_dir.join("report.txt"), &table)?;
            print!("{table}");
        }
        Err(e) => eprintln!("eval: {e}"),
    }
    if done.failed > 0 {
        eprintln!("eval: {} of {} samples excluded by ground-truth validation", done.failed, records.len());
    }
    check_partial("eval", done.failed, records.len(), cfg)
}

// ---------------------------------------------------------------- report

#[derive(Args)]
pub struct ReportArgs {
    /// Corpus the results were scored on (enables failure analysis).
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// `results.jsonl` written by `eval`.
    #[arg(long)]
    pub results: Option<PathBuf>,
    /// Output directory.
    #[arg(short, long)]
    pub out: Option<PathBuf>,
    /// compile or io.
    #[arg(long, value_parser = parse_criterion)]
    pub criterion: Option<OutcomeCriterion>,
    /// CSV of leaderboard entries (model,params_billions,dataset,compile_rate_pct,io_rate_pct).
    #[arg(long)]
    pub leaderboard: Option<PathBuf>,
    /// Adds this run's `report.json` to the leaderboard under this model name.
    #[arg(long, requires_all = ["params", "dataset"])]
    pub model: Option<String>,
    /// Parameter count of `--model`, in billions.
    #[arg(long)]
    pub params: Option<f64>,
    /// Dataset name for `--model`.
    #[arg(long)]
    pub dataset: Option<String>,
    /// `report.json` written by `eval`.
    #[arg(long)]
    pub eval_report: Option<PathBuf>,
}

fn parse_criterion(s: &str) -> Result<OutcomeCriterion, String> {
    serde_json::from_value(serde_json::Value::String(s.into())).map_err(|_| format!("unknown criterion `{s}` (compile, io)"))
}

fn read_results(p: &Path) -> anyhow::Result<Vec<CandidateResult>> {
    let text = std::fs::read_to_string(p).with_context(|| p.display().to_string())?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, l)| serde_json::from_str(l).with_context(|| format!("{}:{}", p.display(), i + 1)))
        .collect()
}

pub fn report(a: &ReportArgs, cfg: &mut RunConfig, g: &Global) -> Result<(), Failure> {
    if let Some(c) = a.criterion {
        cfg.report.criterion = c;
    }
    let out_dir = a.out.clone().unwrap_or_else(|| cfg.workdir.join("report"));
    let results = a.results.clone().unwrap_or_else(|| cfg.workdir.join("eval/results.jsonl"));
    let eval_report = a.eval_report.clone().unwrap_or_else(|| cfg.workdir.join("eval/report.json"));
    if a.corpus.is_none() && a.leaderboard.is_none() && a.model.is_none() {
        return Err(Failure::Config("report needs --corpus (failure analysis) or --leaderboard/--model".into()));
    }
    if g.dry_run {
        if let Some(c) = &a.corpus {
            println!(
                "report: failure analysis of {} on {} ({:?} criterion) -> {}/rates.csv, dist_<metric>.csv for {}",
                results.display(),
                c.display(),
                cfg.report.criterion,
                out_dir.display(),
                cfg.report.metrics.join(", ")
            );
        }
        if a.leaderboard.is_some() || a.model.is_some() {
            println!("report: leaderboard -> {}/leaderboard.csv", out_dir.display());
        }
        return Ok(());
    }
    std::fs::create_dir_all(&out_dir)?;
    if let Some(c) = &a.corpus {
        let samples = read_input(c)?;
        let res = read_results(&results).map_err(Failure::Runtime)?;
        let recs = analysis::failure_records(&samples, &res, cfg.report.criterion);
        let rates = analysis::conditional_failure_rates(&recs)?;
        analysis::write_rates_csv(&out_dir.join("rates.csv"), &rates)?;
        let mut summary = rates.render_table();
        for m in &cfg.report.metrics {
            let d = analysis::metric_distributions(&recs, m, cfg.report.bins)?;
            analysis::write_distribution_csv(&out_dir, &d)?;
        }
        let t = analysis::threshold_summary(&recs, &cfg.report.threshold_metric, cfg.report.threshold)?;
        let pct = |v: Option<f64>| v.map_or("undefined".to_string(), |v| format!("{v:.2}%"));
        summary.push_str(&format!(
            "success below {} {}: {} of {} ({})\nsuccess at or above: {} of {} ({})\n",
            t.metric,
            t.threshold,
            t.below.successes,
            t.below.n,
            pct(t.below.success_rate_pct),
            t.at_or_above.successes,
            t.at_or_above.n,
            pct(t.at_or_above.success_rate_pct)
        ));
        std::fs::write(out_dir.join("summary.txt"), &summary)?;
        print!("{summary}");
    }
    let mut entries = match &a.leaderboard {
        Some(p) => analysis::read_leaderboard_csv(p)?,
        None => Vec::new(),
    };
    if let (Some(model), Some(params), Some(ds)) = (&a.model, a.params, &a.dataset) {
        let text =
            std::fs::read_to_string(&eval_report).with_context(|| eval_report.display().to_string()).map_err(Failure::Runtime)?;
        let rep: EvalReport = serde_json::from_str(&text)?;
        entries.push(LeaderboardEntry::from_report(model.clone(), params, ds.clone(), &rep));
    }
    if !entries.is_empty() {
        let board = analysis::leaderboard(&entries)?;
        analysis::write_leaderboard_csv(&out_dir.join("leaderboard.csv"), &board)?;
        let table = board.render_table();
        std::fs::write(out_dir.join("leaderboard.txt"), &table)?;
        print!("{table}");
    }
    Ok(())
}
