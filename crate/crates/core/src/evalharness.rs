//! Scoring of candidate LLVM IR: compilation, linking, I/O tests, pass@k.

use crate::dataset::SampleRecord;
use crate::process;
use crate::toolchain::{ToolchainConfig, ToolchainError};
use crate::Execution;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::process::Command;
use std::time::Duration;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("pass@k needs 0 <= c <= n and 1 <= k <= n (got n={n}, c={c}, k={k})")]
    DomainError { n: u64, c: u64, k: u64 },
    #[error("no candidate results to aggregate")]
    EmptyInput,
    #[error("wrapper mode needs a wrapper_cpp")]
    MissingWrapper,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalMode {
    /// The candidate is linked against a C++ test wrapper.
    Wrapper,
    /// The candidate defines `main` and runs on its own.
    WholeProgram,
}

#[derive(Debug, Clone)]
pub struct EvalTask {
    pub sample: SampleRecord,
    pub mode: EvalMode,
}

impl EvalTask {
    /// Wrapper mode when the sample carries a wrapper, whole-program otherwise.
    pub fn for_sample(sample: SampleRecord) -> Self {
        let mode = if sample.wrapper_cpp.is_some() { EvalMode::Wrapper } else { EvalMode::WholeProgram };
        Self { sample, mode }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestOutcome {
    pub passed: bool,
    #[serde(default)]
    pub wall_s: f64,
    pub exit_code: i32,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub timed_out: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateResult {
    pub sample_id: String,
    pub candidate_index: usize,
    pub compiled: bool,
    pub linked: bool,
    pub io_passed: bool,
    pub per_test: Vec<TestOutcome>,
    pub diagnostics: String,
}

impl CandidateResult {
    pub fn failing_tests(&self) -> Vec<usize> {
        self.per_test.iter().enumerate().filter(|(_, t)| !t.passed).map(|(i, _)| i).collect()
    }
}

/// `wrapper_cpp` with an `extern "C"` block declaring every function and
/// global of the sample's C source.
pub fn build_wrapper(task: &EvalTask, cfg: &ToolchainConfig) -> Result<String, ToolchainError> {
    let decls = cfg.extract_declarations(&task.sample.c_source)?;
    let mut s = String::from("extern \"C\" {\n");
    for d in decls {
        s.push_str(&d);
        s.push('\n');
    }
    s.push_str("}\n\n");
    s.push_str(task.sample.wrapper_cpp.as_deref().unwrap_or_default());
    Ok(s)
}

/// CRLF to LF, trailing whitespace of every line and trailing blank lines
/// removed.
pub fn normalize_stdout(bytes: &[u8]) -> Vec<u8> {
    let text: Vec<u8> = bytes.iter().copied().filter(|&b| b != b'\r').collect();
    let mut lines: Vec<&[u8]> = text
        .split(|&b| b == b'\n')
        .map(|l| {
            let end = l.iter().rposition(|b| !b.is_ascii_whitespace()).map_or(0, |p| p + 1);
            &l[..end]
        })
        .collect();
    while lines.last().is_some_and(|l| l.is_empty()) {
        lines.pop();
    }
    lines.join(&b'\n')
}

fn defines_main(ir: &str) -> bool {
    ir.lines().any(|l| l.starts_with("define") && l.contains("@main("))
}

/// Compiles, links and tests one candidate. Every failure is reported in
/// the result.
pub fn evaluate_candidate(ir: &str, candidate_index: usize, task: &EvalTask, cfg: &ToolchainConfig) -> CandidateResult {
    let mut r = CandidateResult {
        sample_id: task.sample.id.clone(),
        candidate_index,
        compiled: false,
        linked: false,
        io_passed: false,
        per_test: Vec::new(),
        diagnostics: String::new(),
    };
    // an empty module is valid IR but never a translation
    if ir.trim().is_empty() {
        r.diagnostics = "llc: empty candidate".into();
        return r;
    }
    let dir = match tempfile::tempdir() {
        Ok(d) => d,
        Err(e) => {
            r.diagnostics = format!("setup: {e}");
            return r;
        }
    };
    let obj = match cfg.compile_ir_to_object(ir, dir.path()) {
        Ok(o) => o,
        Err(ToolchainError::IrRejected { diagnostics }) => {
            r.diagnostics = format!("llc: {diagnostics}");
            return r;
        }
        Err(e) => {
            r.diagnostics = format!("llc: {e}");
            return r;
        }
    };
    r.compiled = true;

    let exe = match task.mode {
        EvalMode::Wrapper => match task.sample.wrapper_cpp.as_ref() {
            None => Err(format!("link: {}", EvalError::MissingWrapper)),
            Some(_) => build_wrapper(task, cfg)
                .map_err(|e| format!("declarations: {e}"))
                .and_then(|w| cfg.link_with_wrapper(&obj, &w, dir.path()).map_err(|e| format!("link: {e}"))),
        },
        EvalMode::WholeProgram if !defines_main(ir) => Err("link: candidate defines no main".to_string()),
        EvalMode::WholeProgram => cfg.link_program(&obj, dir.path()).map_err(|e| format!("link: {e}")),
    };
    let exe = match exe {
        Ok(e) => e,
        Err(d) => {
            r.diagnostics = d;
            return r;
        }
    };
    r.linked = true;

    let tests = task.sample.io_tests.as_deref().unwrap_or_default();
    let mut notes = Vec::new();
    for (i, t) in tests.iter().enumerate() {
        let timeout =
            Duration::from_secs_f64(if t.timeout_s > 0.0 { t.timeout_s } else { crate::dataset::DEFAULT_TEST_TIMEOUT_S });
        match process::run(Command::new(&exe), &t.stdin.0, timeout) {
            Ok(out) => {
                let normal_exit = !out.timed_out && out.signal.is_none();
                let same = normalize_stdout(&out.stdout) == normalize_stdout(&t.expected_stdout.0);
                let passed = normal_exit && same;
                if !passed {
                    notes.push(if out.timed_out {
                        format!("test {i}: timed out after {:.1}s", t.timeout_s)
                    } else if !normal_exit {
                        format!("test {i}: killed by signal {}", out.signal.unwrap_or(0))
                    } else {
                        format!("test {i}: wrong output")
                    });
                }
                r.per_test.push(TestOutcome {
                    passed,
                    wall_s: out.wall.as_secs_f64(),
                    exit_code: out.code_or_signal(),
                    timed_out: out.timed_out,
                });
            }
            Err(e) => {
                notes.push(format!("test {i}: {e}"));
                r.per_test.push(TestOutcome { passed: false, wall_s: 0.0, exit_code: -1, timed_out: false });
            }
        }
    }
    r.io_passed = r.per_test.iter().all(|t| t.passed);
    r.diagnostics = notes.join("\n");
    r
}

/// True when the sample's own IR passes its tests.
pub fn validate_ground_truth(task: &EvalTask, cfg: &ToolchainConfig) -> bool {
    evaluate_candidate(&task.sample.llvm_ir, 0, task, cfg).io_passed
}

/// Scores every candidate of every task.
pub fn evaluate_all(jobs: &[(EvalTask, Vec<String>)], cfg: &ToolchainConfig, exec: Execution) -> Vec<CandidateResult> {
    let flat: Vec<(usize, usize)> =
        jobs.iter().enumerate().flat_map(|(t, (_, cands))| (0..cands.len()).map(move |c| (t, c))).collect();
    exec.map(&flat, |&(t, c)| evaluate_candidate(&jobs[t].1[c], c, &jobs[t].0, cfg))
}

/// Unbiased pass@k: 1 - C(n-c, k) / C(n, k), as a product of ratios.
pub fn pass_at_k(n: u64, c: u64, k: u64) -> Result<f64, EvalError> {
    if c > n || k < 1 || k > n {
        return Err(EvalError::DomainError { n, c, k });
    }
    if n - c < k {
        return Ok(1.0);
    }
    let mut miss = 1.0;
    for i in (n - c + 1)..=n {
        miss *= 1.0 - k as f64 / i as f64;
    }
    Ok(1.0 - miss)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleCounts {
    pub sample_id: String,
    pub n: u64,
    pub c_compile: u64,
    pub c_link: u64,
    pub c_io: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub n_samples: usize,
    /// Candidates per sample, when every sample has the same count.
    pub n_per_sample: Option<u64>,
    pub compile_rate_pct: f64,
    pub link_rate_pct: f64,
    pub io_rate_pct: f64,
    pub pass_at: BTreeMap<u64, f64>,
    pub per_sample: Vec<SampleCounts>,
}

impl EvalReport {
    /// Plain-text summary table.
    pub fn render_table(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("samples      {}\n", self.n_samples));
        match self.n_per_sample {
            Some(n) => s.push_str(&format!("candidates   {n} per sample\n")),
            None => s.push_str("candidates   varies per sample\n"),
        }
        s.push_str(&format!("compile      {:6.2} %\n", self.compile_rate_pct));
        s.push_str(&format!("link         {:6.2} %\n", self.link_rate_pct));
        s.push_str(&format!("io tests     {:6.2} %\n", self.io_rate_pct));
        for (k, p) in &self.pass_at {
            s.push_str(&format!("pass@{k:<7} {:6.2} %\n", p * 100.0));
        }
        s
    }
}

/// Compile, link and I/O rates (pass@1 in percent) plus pass@k for each
/// requested `k` that every sample supports.
pub fn aggregate(results: &[CandidateResult], k_values: &[u64]) -> Result<EvalReport, EvalError> {
    if results.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let mut per: BTreeMap<&str, SampleCounts> = BTreeMap::new();
    for r in results {
        let e = per.entry(&r.sample_id).or_insert_with(|| SampleCounts {
            sample_id: r.sample_id.clone(),
            n: 0,
            c_compile: 0,
            c_link: 0,
            c_io: 0,
        });
        e.n += 1;
        e.c_compile += u64::from(r.compiled);
        e.c_link += u64::from(r.linked);
        e.c_io += u64::from(r.io_passed);
    }
    let per_sample: Vec<SampleCounts> = per.into_values().collect();
    let m = per_sample.len() as f64;
    let mean_rate = |f: &dyn Fn(&SampleCounts) -> u64| -> Result<f64, EvalError> {
        let mut sum = 0.0;
        for s in &per_sample {
            sum += pass_at_k(s.n, f(s), 1)?;
        }
        Ok(100.0 * sum / m)
    };
    let compile_rate_pct = mean_rate(&|s| s.c_compile)?;
    let link_rate_pct = mean_rate(&|s| s.c_link)?;
    let io_rate_pct = mean_rate(&|s| s.c_io)?;
    let min_n = per_sample.iter().map(|s| s.n).min().unwrap_or(0);
    let mut pass_at = BTreeMap::new();
    for &k in k_values {
        if k == 0 || k > min_n {
            log::warn!("pass@{k} skipped: some sample has only {min_n} candidates");
            continue;
        }
        let mut sum = 0.0;
        for s in &per_sample {
            sum += pass_at_k(s.n, s.c_io, k)?;
        }
        pass_at.insert(k, sum / m);
    }
    let first_n = per_sample[0].n;
    Ok(EvalReport {
        n_samples: per_sample.len(),
        n_per_sample: per_sample.iter().all(|s| s.n == first_n).then_some(first_n),
        compile_rate_pct,
        link_rate_pct,
        io_rate_pct,
        pass_at,
        per_sample,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn res(id: &str, compiled: bool, linked: bool, io: bool) -> CandidateResult {
        CandidateResult {
            sample_id: id.into(),
            candidate_index: 0,
            compiled,
            linked,
            io_passed: io,
            per_test: vec![],
            diagnostics: String::new(),
        }
    }

    #[test]
    fn pass_at_k_examples() {
        assert_eq!(pass_at_k(3, 3, 1).unwrap(), 1.0);
        assert!((pass_at_k(3, 1, 1).unwrap() - 1.0 / 3.0).abs() < 1e-12);
        assert!((pass_at_k(4, 2, 2).unwrap() - 5.0 / 6.0).abs() < 1e-12);
        assert_eq!(pass_at_k(3, 0, 2).unwrap(), 0.0);
        assert!(pass_at_k(3, 4, 1).is_err());
        assert!(pass_at_k(3, 1, 0).is_err());
        assert!(pass_at_k(3, 1, 4).is_err());
        let big = pass_at_k(100_000, 3, 50).unwrap();
        assert!(big > 0.0 && big < 0.01);
    }

    #[test]
    fn two_samples_half_io() {
        let mut rs = Vec::new();
        for _ in 0..3 {
            rs.push(res("a", true, true, true));
            rs.push(res("b", true, true, false));
        }
        let r = aggregate(&rs, &[1, 3]).unwrap();
        assert_eq!(r.io_rate_pct, 50.0);
        assert_eq!(r.compile_rate_pct, 100.0);
        assert_eq!(r.n_per_sample, Some(3));
        assert_eq!(r.pass_at[&3], 0.5);
        assert_eq!(aggregate(&[], &[1]), Err(EvalError::EmptyInput));
    }

    #[test]
    fn stdout_normalization() {
        assert_eq!(normalize_stdout(b"1 2 \r\n3\t\n\n\n"), b"1 2\n3");
        assert_eq!(normalize_stdout(b""), b"");
        assert_ne!(normalize_stdout(b"1\n\n2"), normalize_stdout(b"1\n2"));
    }
}
