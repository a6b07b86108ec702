use iris_core::dataset::{build_pair, IoTest, Origin, SampleRecord};
use iris_core::evalharness::*;
use iris_core::toolchain::ToolchainConfig;
use proptest::prelude::*;

/// Fraction of k-subsets of n candidates (c passing) holding a pass.
fn subset_oracle(n: u32, c: u32, k: u32) -> f64 {
    let (mut hit, mut total) = (0u32, 0u32);
    for mask in 0u32..(1 << n) {
        if mask.count_ones() != k {
            continue;
        }
        total += 1;
        // candidates 0..c pass
        if mask & ((1 << c) - 1) != 0 {
            hit += 1;
        }
    }
    hit as f64 / total as f64
}

#[test]
fn estimator_matches_enumeration() {
    for n in 1..=6u32 {
        for c in 0..=n {
            for k in 1..=n {
                let got = pass_at_k(n as u64, c as u64, k as u64).unwrap();
                let want = subset_oracle(n, c, k);
                assert!((got - want).abs() < 1e-12, "n={n} c={c} k={k}: {got} vs {want}");
            }
        }
    }
}

proptest! {
    #[test]
    fn monotone_in_k_and_c(n in 1u64..60, c in 0u64..60, k in 1u64..60) {
        prop_assume!(c <= n && k <= n);
        let p = pass_at_k(n, c, k).unwrap();
        prop_assert!((0.0..=1.0).contains(&p));
        if k < n {
            prop_assert!(pass_at_k(n, c, k + 1).unwrap() >= p - 1e-12);
        }
        if c < n {
            prop_assert!(pass_at_k(n, c + 1, k).unwrap() >= p - 1e-12);
        }
    }
}

fn result(id: &str, i: usize, compiled: bool, io: bool) -> CandidateResult {
    CandidateResult {
        sample_id: id.into(),
        candidate_index: i,
        compiled,
        linked: compiled,
        io_passed: io,
        per_test: vec![],
        diagnostics: String::new(),
    }
}

#[test]
fn five_sample_fixture() {
    let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/eval/five_samples.json")).unwrap();
    let fx: serde_json::Value = serde_json::from_str(&text).unwrap();
    let n = fx["n"].as_u64().unwrap() as usize;
    let mut rs = Vec::new();
    for s in fx["samples"].as_array().unwrap() {
        let cc = s["c_compile"].as_u64().unwrap() as usize;
        let ci = s["c_io"].as_u64().unwrap() as usize;
        for i in 0..n {
            rs.push(result(s["id"].as_str().unwrap(), i, i < cc, i < ci));
        }
    }
    let r = aggregate(&rs, &[1, 2, 3]).unwrap();
    let e = &fx["expected"];
    assert!((r.compile_rate_pct - e["compile_rate_pct"].as_f64().unwrap()).abs() < 1e-9);
    assert!((r.io_rate_pct - e["io_rate_pct"].as_f64().unwrap()).abs() < 1e-9);
    assert!((r.pass_at[&2] - e["pass_at_2"].as_f64().unwrap()).abs() < 1e-9);
    assert!((r.pass_at[&3] - e["pass_at_3"].as_f64().unwrap()).abs() < 1e-9);
    assert!((r.pass_at[&1] * 100.0 - r.io_rate_pct).abs() < 1e-9);
    assert!(r.io_rate_pct <= r.compile_rate_pct);
}

const SUM_PROGRAM: &str = "#include <stdio.h>\n\nint add(int a, int b) { return a + b; }\n\nint main(void) {\n  int a, b;\n  if (scanf(\"%d %d\", &a, &b) != 2) return 1;\n  printf(\"%d\\n\", add(a, b));\n  return 0;\n}\n";

fn sum_sample(cfg: &ToolchainConfig) -> SampleRecord {
    let mut r = build_pair(SUM_PROGRAM, Origin::Codeforces, cfg).unwrap();
    r.io_tests = Some(vec![IoTest::new("2 3\n", "5\n"), IoTest::new("10 -4", "6"), IoTest::new("0 0\n", "0\r\n\n")]);
    r
}

#[test]
fn ground_truth_passes_and_mutation_fails() {
    let cfg = ToolchainConfig::discover();
    let task = EvalTask::for_sample(sum_sample(&cfg));
    assert_eq!(task.mode, EvalMode::WholeProgram);
    let ok = evaluate_candidate(&task.sample.llvm_ir, 0, &task, &cfg);
    assert!(ok.compiled && ok.linked && ok.io_passed, "{}", ok.diagnostics);
    assert!(validate_ground_truth(&task, &cfg));

    let re = regex::Regex::new(r"add nsw i32 (%\d+), (%\d+)").unwrap();
    let mutated = re.replace(&task.sample.llvm_ir, "add nsw i32 $1, 1").into_owned();
    assert_ne!(mutated, task.sample.llvm_ir);
    let bad = evaluate_candidate(&mutated, 1, &task, &cfg);
    assert!(bad.compiled && bad.linked && !bad.io_passed);
    assert_eq!(bad.failing_tests(), [0, 1, 2]);

    let empty = evaluate_candidate("", 2, &task, &cfg);
    assert!(!empty.compiled && !empty.linked && !empty.io_passed);
    let garbage = evaluate_candidate("garbage", 2, &task, &cfg);
    assert!(!garbage.compiled);
    assert!(!garbage.diagnostics.is_empty());
}

const LIB: &str = "int counter = 0;\n\nint square(int x) { return x * x; }\n\nlong cube(long x) { return x * x * x; }\n\nstatic int twice(int x) { return 2 * x; }\n\nint use_twice(int x) { counter++; return twice(x); }\n\ndouble half(double v) { return v / 2; }\n";

const LIB_WRAPPER: &str = "#include <cstdio>\nint main() {\n  int n;\n  if (std::scanf(\"%d\", &n) != 1) return 1;\n  std::printf(\"%d %ld %d %.1f\\n\", square(n), cube(n), use_twice(n), half(n));\n  std::printf(\"%d\\n\", counter);\n  return 0;\n}\n";

fn lib_sample(cfg: &ToolchainConfig) -> SampleRecord {
    let mut r = build_pair(LIB, Origin::Exebench, cfg).unwrap();
    r.wrapper_cpp = Some(LIB_WRAPPER.into());
    r.io_tests = Some(vec![IoTest::new("3\n", "9 27 6 1.5\n1\n"), IoTest::new("-2\n", "4 -8 -4 -1.0\n1\n")]);
    r
}

#[test]
fn wrapper_declarations_match_fixture_symbols() {
    let cfg = ToolchainConfig::discover();
    let task = EvalTask::for_sample(lib_sample(&cfg));
    assert_eq!(task.mode, EvalMode::Wrapper);
    let w = build_wrapper(&task, &cfg).unwrap();
    assert!(w.starts_with("extern \"C\" {\n"));
    assert!(w.ends_with(LIB_WRAPPER));
    let block = &w[..w.find("}\n\n").unwrap()];
    for name in ["counter", "square", "cube", "twice", "use_twice", "half"] {
        assert_eq!(
            block.matches(&format!(" {name}")).count() + block.matches(&format!("*{name}")).count(),
            1,
            "{name} in {block}"
        );
    }
    assert_eq!(block.lines().count() - 1, 6);

    let mut empty = task.sample.clone();
    empty.c_source = String::new();
    let w = build_wrapper(&EvalTask::for_sample(empty), &cfg).unwrap();
    assert!(w.starts_with("extern \"C\" {\n}\n\n"));
}

#[test]
fn wrapper_mode_runs_tests() {
    let cfg = ToolchainConfig::discover();
    let task = EvalTask::for_sample(lib_sample(&cfg));
    let r = evaluate_candidate(&task.sample.llvm_ir, 0, &task, &cfg);
    assert!(r.io_passed, "{}", r.diagnostics);
}

#[test]
fn broken_samples_fail_validation() {
    let cfg = ToolchainConfig::discover();
    let mut s = lib_sample(&cfg);
    s.wrapper_cpp =
        Some(format!("extern \"C\" int missing_symbol(int);\n{}", LIB_WRAPPER.replace("square(n)", "missing_symbol(n)")));
    let task = EvalTask::for_sample(s);
    let r = evaluate_candidate(&task.sample.llvm_ir, 0, &task, &cfg);
    assert!(r.compiled && !r.linked);
    assert!(r.diagnostics.contains("missing_symbol"), "{}", r.diagnostics);
    assert!(!validate_ground_truth(&task, &cfg));

    let mut slow =
        build_pair("int main(void) { volatile unsigned long i = 0; for (;;) i++; return 0; }\n", Origin::Local, &cfg).unwrap();
    let mut t = IoTest::new("", "");
    t.timeout_s = 0.5;
    slow.io_tests = Some(vec![t]);
    let task = EvalTask::for_sample(slow);
    let r = evaluate_candidate(&task.sample.llvm_ir, 0, &task, &cfg);
    assert!(r.linked && !r.io_passed && r.per_test[0].timed_out);
}

#[test]
fn parallel_and_sequential_agree() {
    let cfg = ToolchainConfig::discover();
    let task = EvalTask::for_sample(sum_sample(&cfg));
    let cands = vec![task.sample.llvm_ir.clone(), "junk".to_string(), task.sample.llvm_ir.clone()];
    let jobs = vec![(task, cands)];
    let a = evaluate_all(&jobs, &cfg, iris_core::Execution::Sequential);
    let b = evaluate_all(&jobs, &cfg, iris_core::Execution::Parallel);
    let key = |rs: &[CandidateResult]| rs.iter().map(|r| (r.candidate_index, r.compiled, r.io_passed)).collect::<Vec<_>>();
    assert_eq!(key(&a), key(&b));
    assert_eq!(key(&a), [(0, true, true), (1, false, false), (2, true, true)]);
}
