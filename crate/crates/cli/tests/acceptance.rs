//! Acceptance checks. Prints one `[PASS]` or `[FAIL]` line per criterion and
//! exits nonzero if any of them fails.

use iris_core::analysis::{conditional_failure_rates, leaderboard, read_leaderboard_csv, FailureRecord, Outcome};
use iris_core::cmetrics::{analyze_c, Feature, FeatureFlags, StaticMetrics};
use iris_core::dataset::{self, ContextBudget, Origin, SampleRecord};
use iris_core::evalharness::{aggregate, pass_at_k, CandidateResult};
use iris_core::irparse;
use iris_core::select::kmeans;
use iris_core::toolchain::ToolchainConfig;
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeMap, HashSet};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

type Check = Result<String, String>;
type Criterion = (&'static str, &'static str, fn() -> Check);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn manifest_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

fn core_fixture(rel: &str) -> PathBuf {
    manifest_dir().join("../core/tests/fixtures").join(rel)
}

fn iris(work: &Path, args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_iris"))
        .args(["-q", "--workdir"])
        .arg(work)
        .args(args)
        .output()
        .map_err(|e| format!("spawn iris: {e}"))?;
    ensure(out.status.success(), || {
        format!("iris {} exited {:?}: {}", args[0], out.status.code(), String::from_utf8_lossy(&out.stderr).trim())
    })
}

fn ac1_oracle_self_consistency() -> Check {
    let fixtures = manifest_dir().join("tests/fixtures/corpus");
    let programs = walkdir::WalkDir::new(&fixtures)
        .into_iter()
        .filter_map(Result::ok)
        .filter(|e| e.path().extension().is_some_and(|x| x == "c"))
        .count();
    ensure(programs >= 20, || format!("only {programs} fixture programs"))?;

    let work = tempfile::tempdir().map_err(|e| e.to_string())?;
    let corpus = work.path().join("corpus.jsonl");
    let start = Instant::now();
    iris(work.path(), &["ingest", fixtures.to_str().unwrap()])?;
    iris(work.path(), &["translate", corpus.to_str().unwrap(), "--backend", "oracle"])?;
    iris(work.path(), &["eval", corpus.to_str().unwrap()])?;
    let elapsed = start.elapsed();

    let records = dataset::read_corpus(&corpus).map_err(|e| e.to_string())?;
    ensure(records.len() == programs, || format!("{} of {programs} programs made it into the corpus", records.len()))?;
    let mut covered = HashSet::new();
    for r in &records {
        let m = analyze_c(&r.c_source).map_err(|e| e.to_string())?;
        for f in [
            Feature::Loops,
            Feature::Conditionals,
            Feature::ArrayReads,
            Feature::TypedPointers,
            Feature::StructUsages,
            Feature::MemoryOps,
        ] {
            if m.counter(f) > 0 {
                covered.insert(f);
            }
        }
    }
    ensure(covered.len() == 6, || format!("fixture corpus covers only {covered:?}"))?;

    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(work.path().join("eval/report.json")).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
    let n = report["n_samples"].as_u64().unwrap_or(0) as usize;
    ensure(n == programs, || format!("{} samples failed ground-truth validation", programs - n))?;
    let (compile, io) = (report["compile_rate_pct"].as_f64(), report["io_rate_pct"].as_f64());
    ensure(compile == Some(100.0) && io == Some(100.0), || format!("compile {compile:?}, io {io:?}"))?;
    ensure(elapsed < Duration::from_secs(120), || format!("took {:.1}s", elapsed.as_secs_f64()))?;
    Ok(format!("{n} programs, compile 100.0%, io 100.0% in {:.1}s", elapsed.as_secs_f64()))
}

/// Fraction of k-subsets of n candidates (the first c passing) holding a pass.
fn subset_fraction(n: u32, c: u32, k: u32) -> f64 {
    let subsets: Vec<u32> = (0u32..1 << n).filter(|m| m.count_ones() == k).collect();
    let hits = subsets.iter().filter(|&&m| m & ((1 << c) - 1) != 0).count();
    hits as f64 / subsets.len() as f64
}

fn ac2_pass_at_k() -> Check {
    let mut cases = 0;
    for n in 1..=6u32 {
        for c in 0..=n {
            for k in 1..=n {
                let got = pass_at_k(n as u64, c as u64, k as u64).map_err(|e| e.to_string())?;
                let want = subset_fraction(n, c, k);
                ensure((got - want).abs() <= 1e-12, || format!("n={n} c={c} k={k}: {got} vs {want}"))?;
                cases += 1;
            }
        }
    }
    for c in 0..=3u64 {
        let p = pass_at_k(3, c, 1).map_err(|e| e.to_string())?;
        ensure((p - c as f64 / 3.0).abs() <= 1e-12, || format!("pass@1 at n=3 c={c} is {p}"))?;
    }
    Ok(format!("{cases} (n, c, k) triples match enumeration"))
}

fn ac3_metric_fixtures() -> Check {
    let dir = core_fixture("metrics");
    let text = std::fs::read_to_string(dir.join("expected.json")).map_err(|e| e.to_string())?;
    let expected: BTreeMap<String, StaticMetrics> = serde_json::from_str(&text).map_err(|e| e.to_string())?;
    ensure(expected.len() == 10, || format!("{} fixtures", expected.len()))?;
    for (file, want) in &expected {
        let src = std::fs::read_to_string(dir.join(file)).map_err(|e| e.to_string())?;
        let got = analyze_c(&src).map_err(|e| format!("{file}: {e}"))?;
        ensure(&got == want, || format!("{file}: got {got:?}"))?;
    }
    Ok("10 fixtures match hand counts".into())
}

fn brute_force_inertia(points: &[Vec<f64>], k: usize) -> f64 {
    let n = points.len();
    let mut best = f64::INFINITY;
    for code in 0..k.pow(n as u32) {
        let labels: Vec<usize> = (0..n).map(|i| code / k.pow(i as u32) % k).collect();
        let mut cost = 0.0;
        for c in 0..k {
            let members: Vec<&Vec<f64>> = points.iter().zip(&labels).filter(|(_, &l)| l == c).map(|(p, _)| p).collect();
            for j in 0..points[0].len() {
                let mean = members.iter().map(|p| p[j]).sum::<f64>() / members.len().max(1) as f64;
                cost += members.iter().map(|p| (p[j] - mean).powi(2)).sum::<f64>();
            }
        }
        best = best.min(cost);
    }
    best
}

fn ac4_kmeans() -> Check {
    let mut gen = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 1.0;
    for case in 0..20 {
        let n = gen.gen_range(2..=8);
        let d = gen.gen_range(1..=2);
        let k = gen.gen_range(1..=3.min(n));
        let pts: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| gen.gen_range(-10.0..10.0)).collect()).collect();
        let opt = brute_force_inertia(&pts, k);
        let seed = gen.gen();
        let m = kmeans(&pts, k, seed, 100).map_err(|e| e.to_string())?;
        ensure(m.inertia <= 1.05 * opt + 1e-12, || format!("case {case}: inertia {} vs optimum {opt}", m.inertia))?;
        if opt > 0.0 {
            worst = worst.max(m.inertia / opt);
        }
        let again = kmeans(&pts, k, seed, 100).map_err(|e| e.to_string())?;
        ensure(again.assignments == m.assignments && again.inertia.to_bits() == m.inertia.to_bits(), || {
            format!("case {case}: rerun with seed {seed} differs")
        })?;
    }
    let pts: Vec<Vec<f64>> = [0.0, 0.1, 10.0, 10.1, 20.0, 20.1].iter().map(|&x| vec![x]).collect();
    let m = kmeans(&pts, 3, 0, 100).map_err(|e| e.to_string())?;
    let mut cents: Vec<f64> = m.centroids.iter().map(|c| c[0]).collect();
    cents.sort_by(f64::total_cmp);
    for (c, want) in cents.iter().zip([0.05, 10.05, 20.05]) {
        ensure((c - want).abs() <= 1e-9, || format!("three-pair centroid {c} vs {want}"))?;
    }
    Ok(format!("20 instances, worst ratio {worst:.4}; three-pair centroids recovered"))
}

fn ac5_rate_identities() -> Check {
    let strategy =
        proptest::collection::vec((proptest::collection::vec(any::<bool>(), Feature::ALL.len()), any::<bool>()), 1..60);
    let mut runner = TestRunner::new(Config { cases: 1000, failure_persistence: None, ..Config::default() });
    runner
        .run(&strategy, |recs| {
            let records: Vec<FailureRecord> = recs
                .iter()
                .enumerate()
                .map(|(i, (flags, failed))| FailureRecord {
                    sample_id: i.to_string(),
                    flags: FeatureFlags(Feature::ALL.iter().copied().zip(flags.iter().copied()).collect()),
                    metrics: StaticMetrics::default(),
                    outcome: if *failed { Outcome::Failure } else { Outcome::Success },
                })
                .collect();
            let rates = conditional_failure_rates(&records).unwrap();
            let total_fail = records.iter().filter(|r| r.failed()).count();
            prop_assert_eq!(rates.total_failures, total_fail);
            let overall = rates.overall_failure_pct();
            for r in &rates.features {
                let np = records.iter().filter(|x| x.flags.get(r.feature)).count();
                let fp = records.iter().filter(|x| x.flags.get(r.feature) && x.failed()).count();
                prop_assert_eq!((r.n_present, r.failures_present), (np, fp));
                prop_assert_eq!(r.n_present + r.n_absent, records.len());
                prop_assert_eq!(r.failures_present + r.failures_absent, total_fail);
                let p = r.fail_present_pct.unwrap_or(0.0);
                let a = r.fail_absent_pct.unwrap_or(0.0);
                let mixed = (p * r.n_present as f64 + a * r.n_absent as f64) / records.len() as f64;
                prop_assert!((mixed - overall).abs() <= 1e-9);
            }
            let deltas: Vec<f64> = rates.ranked().map(|r| r.delta_pp.unwrap()).collect();
            prop_assert!(deltas.windows(2).all(|w| w[0] >= w[1]));
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    Ok("1000 random record sets".into())
}

fn ac6_corpus_round_trip() -> Check {
    let adversarial = [
        "int main(void) {\n  return 0;\n}\n",
        "{\"}}\\\n\t\u{1F600} \u{0} \r\n",
        "line one\nline two\n\n\n",
        "caf\u{e9} \u{4e2d}\u{6587} {{{}}}",
        "",
    ];
    let mut records = Vec::new();
    for (i, a) in adversarial.iter().enumerate() {
        for (j, b) in adversarial.iter().enumerate() {
            let mut r = SampleRecord::translation_unit(Origin::Exebench, format!("/*{i}.{j}*/{a}"), b.to_string(), a.repeat(2));
            r.group = Some(b.to_string());
            r.wrapper_cpp = (i % 2 == 0).then(|| b.to_string());
            records.push(r);
        }
    }
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = dir.path().join("c.jsonl");
    dataset::write_corpus(&records, &path, BTreeMap::new()).map_err(|e| e.to_string())?;
    let back = dataset::read_corpus(&path).map_err(|e| e.to_string())?;
    ensure(back == records, || "read_corpus(write_corpus(x)) != x".into())?;

    let once = dataset::dedup(records.clone());
    ensure(dataset::dedup(once.clone()) == once, || "dedup is not idempotent".into())?;

    let ids: HashSet<String> = records.iter().map(|r| r.id.clone()).collect();
    for f in [0.0, 0.2, 0.5, 1.0] {
        let (train, test) = dataset::split(records.clone(), f, 11);
        let a: HashSet<String> = train.iter().map(|r| r.id.clone()).collect();
        let b: HashSet<String> = test.iter().map(|r| r.id.clone()).collect();
        ensure(a.is_disjoint(&b) && a.union(&b).cloned().collect::<HashSet<_>>() == ids, || {
            format!("split at {f} does not partition")
        })?;
    }
    Ok(format!("{} adversarial records round-trip; dedup idempotent; splits partition", records.len()))
}

fn ac7_context_filter() -> Check {
    let mut r =
        SampleRecord::translation_unit(Origin::Local, "int main(void){return 0;}".into(), "x".repeat(33_000), String::new());
    r.id = "long".into();
    let budget = |factor| ContextBudget { max_tokens: 32768, chars_per_token: 4.0, output_factor: factor };
    let (kept3, rejected3) = dataset::filter_context(vec![r.clone()], &budget(3.0));
    let (kept0, _) = dataset::filter_context(vec![r], &budget(0.0));
    ensure(kept3.is_empty() && rejected3.len() == 1, || "accepted at factor 3.0".into())?;
    ensure(kept0.len() == 1, || "rejected at factor 0.0".into())?;
    Ok(format!("8250 input tokens: {} total at factor 3.0 rejected, 8250 at 0.0 accepted", rejected3[0].total_tokens))
}

const ADD_MAIN: &str = "int add(int a, int b) {\n  return a + b;\n}\n\nint main() {\n  int x = add(2, 3);\n  return x;\n}\n";

fn ac8_add_main_shape() -> Check {
    let tc = ToolchainConfig::discover();
    tc.validate().map_err(|e| e.to_string())?;
    let gimple = tc.dump_gimple(ADD_MAIN).map_err(|e| e.to_string())?;
    let llvm = tc.dump_llvm_ir(ADD_MAIN).map_err(|e| e.to_string())?;
    let temp = regex::Regex::new(r"(?m)^\s*(_\d+|D\.\d+) = a \+ b;").unwrap();
    ensure(temp.is_match(&gimple), || format!("no temporary for a + b in:\n{gimple}"))?;
    let defines = regex::Regex::new(r"(?m)^define .*@(\w+)\(").unwrap();
    let names: Vec<&str> = defines.captures_iter(&llvm).map(|c| c.get(1).unwrap().as_str()).collect();
    ensure(names == ["add", "main"], || format!("define headers for {names:?}"))?;

    let g = irparse::parse_gimple_dump(&gimple).map_err(|e| e.to_string())?;
    let m = irparse::parse_llvm_module(&llvm).map_err(|e| e.to_string())?;
    let c = irparse::extract_c_functions(ADD_MAIN).map_err(|e| e.to_string())?;
    let aligned = irparse::align_functions(&g, &m.functions, &c.pairs(), "local").map_err(|e| e.to_string())?;
    ensure(aligned.triplets.len() == 2, || format!("{} triplets", aligned.triplets.len()))?;
    Ok("gimple temporary for a + b, define @add/@main, 2 triplets".into())
}

fn ac9_report_cross_check() -> Check {
    let text = std::fs::read_to_string(core_fixture("eval/five_samples.json")).map_err(|e| e.to_string())?;
    let fx: serde_json::Value = serde_json::from_str(&text).map_err(|e| e.to_string())?;
    let n = fx["n"].as_u64().unwrap();
    let mut results = Vec::new();
    let (mut sum_compile, mut sum_io, mut count) = (0u64, 0u64, 0u64);
    for s in fx["samples"].as_array().unwrap() {
        let (cc, ci) = (s["c_compile"].as_u64().unwrap(), s["c_io"].as_u64().unwrap());
        sum_compile += cc;
        sum_io += ci;
        count += n;
        for i in 0..n {
            results.push(CandidateResult {
                sample_id: s["id"].as_str().unwrap().into(),
                candidate_index: i as usize,
                compiled: i < cc,
                linked: i < cc,
                io_passed: i < ci,
                per_test: Vec::new(),
                diagnostics: String::new(),
            });
        }
    }
    let r = aggregate(&results, &[1, 2, 3]).map_err(|e| e.to_string())?;
    let e = &fx["expected"];
    // hand recomputation straight from the (n, c) table
    ensure(r.compile_rate_pct == 100.0 * sum_compile as f64 / count as f64, || format!("compile {}", r.compile_rate_pct))?;
    ensure(r.io_rate_pct == 100.0 * sum_io as f64 / count as f64, || format!("io {}", r.io_rate_pct))?;
    ensure(r.compile_rate_pct == e["compile_rate_pct"].as_f64().unwrap(), || "compile differs from the sheet".into())?;
    ensure(r.io_rate_pct == e["io_rate_pct"].as_f64().unwrap(), || "io differs from the sheet".into())?;
    for k in [2u64, 3] {
        let want = e[format!("pass_at_{k}")].as_f64().unwrap();
        ensure((r.pass_at[&k] - want).abs() <= 1e-12, || format!("pass@{k} {} vs {want}", r.pass_at[&k]))?;
    }
    ensure(r.io_rate_pct <= r.compile_rate_pct, || "io above compile".into())?;
    Ok(format!(
        "5-sample sheet matches exactly (compile {}%, io {}%); published model accuracies are not reproduced",
        r.compile_rate_pct, r.io_rate_pct
    ))
}

fn ac10_leaderboard() -> Check {
    let entries = read_leaderboard_csv(&core_fixture("analysis/published_models.csv")).map_err(|e| e.to_string())?;
    let board = leaderboard(&entries).map_err(|e| e.to_string())?;
    let params: Vec<f64> = board.rows.iter().map(|r| r.params_billions).collect();
    ensure(params.windows(2).all(|w| w[0] >= w[1]), || format!("params not descending: {params:?}"))?;
    ensure(params == [1000.0, 480.0, 120.0, 20.0, 14.0, 14.0, 13.0], || format!("params {params:?}"))?;
    ensure(board.scatter.len() == entries.len(), || format!("{} scatter rows", board.scatter.len()))?;
    for e in &entries {
        let p = board
            .scatter
            .iter()
            .find(|p| p.model == e.model && p.dataset == e.dataset)
            .ok_or_else(|| format!("no scatter row for {} / {}", e.model, e.dataset))?;
        let want = e.params_billions.ln() / std::f64::consts::LN_10;
        ensure((p.log10_params - want).abs() <= 1e-12, || format!("{}: log10 {} vs {want}", e.model, p.log10_params))?;
        ensure(p.io_rate_pct == e.io_rate_pct, || format!("{}: io {}", e.model, p.io_rate_pct))?;
    }
    Ok(format!("{} models ordered by params, {} scatter rows", board.rows.len(), board.scatter.len()))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("AC-1", "oracle self-consistency", ac1_oracle_self_consistency),
        ("AC-2", "pass@k matches enumeration", ac2_pass_at_k),
        ("AC-3", "metric ground truth", ac3_metric_fixtures),
        ("AC-4", "k-means quality and determinism", ac4_kmeans),
        ("AC-5", "conditional-rate identities", ac5_rate_identities),
        ("AC-6", "corpus round trip", ac6_corpus_round_trip),
        ("AC-7", "context filter arithmetic", ac7_context_filter),
        ("AC-8", "add/main dump shape", ac8_add_main_shape),
        ("AC-9", "report cross-check", ac9_report_cross_check),
        ("AC-10", "leaderboard fidelity", ac10_leaderboard),
    ];
    let mut failed = 0;
    for (id, name, check) in criteria {
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("[PASS] {id} {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("[FAIL] {id} {name}: {why}");
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
