//! Error analysis over evaluated samples and model leaderboards.
//!
//! Everything here is single-threaded and deterministic. CSV files use these
//! headers:
//!
//! - `rates.csv`: `feature,n_present,n_absent,fail_present_pct,fail_absent_pct,delta_pp`
//! - `dist_<metric>.csv`: `bin_lo,bin_hi,count_success,count_failure,density_success,density_failure`
//! - `leaderboard.csv`: `model,params_billions,log10_params,dataset,compile_rate_pct,io_rate_pct`
//!
//! Undefined values are written as empty cells.

use crate::cmetrics::{analyze_c, feature_flags, Feature, FeatureFlags, StaticMetrics};
use crate::dataset::SampleRecord;
use crate::evalharness::{CandidateResult, EvalReport};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("no records to analyze")]
    EmptyInput,
    #[error("unknown metric `{0}`")]
    UnknownMetric(String),
    #[error("model `{0}` has a non-positive parameter count")]
    InvalidParams(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Success,
    Failure,
}

/// Which candidate property counts as success.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutcomeCriterion {
    #[default]
    Compile,
    Io,
}

impl OutcomeCriterion {
    pub fn outcome(self, r: &CandidateResult) -> Outcome {
        let ok = match self {
            OutcomeCriterion::Compile => r.compiled,
            OutcomeCriterion::Io => r.io_passed,
        };
        if ok {
            Outcome::Success
        } else {
            Outcome::Failure
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureRecord {
    pub sample_id: String,
    pub flags: FeatureFlags,
    pub metrics: StaticMetrics,
    pub outcome: Outcome,
}

impl FailureRecord {
    pub fn new(sample_id: impl Into<String>, metrics: StaticMetrics, outcome: Outcome) -> Self {
        FailureRecord { sample_id: sample_id.into(), flags: feature_flags(&metrics), metrics, outcome }
    }

    pub fn failed(&self) -> bool {
        self.outcome == Outcome::Failure
    }
}

/// One record per candidate result. Samples without stored metrics are
/// analyzed on the fly; results whose sample is unknown or unparsable are
/// skipped.
pub fn failure_records(samples: &[SampleRecord], results: &[CandidateResult], criterion: OutcomeCriterion) -> Vec<FailureRecord> {
    let mut metrics: HashMap<&str, Option<StaticMetrics>> = HashMap::new();
    for s in samples {
        let m = s.static_metrics.or_else(|| analyze_c(&s.c_source).ok());
        metrics.entry(s.id.as_str()).or_insert(m);
    }
    results
        .iter()
        .filter_map(|r| {
            let m = (*metrics.get(r.sample_id.as_str())?)?;
            Some(FailureRecord::new(r.sample_id.clone(), m, criterion.outcome(r)))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRate {
    pub feature: Feature,
    pub n_present: usize,
    pub n_absent: usize,
    pub failures_present: usize,
    pub failures_absent: usize,
    /// `None` when no record has the feature.
    pub fail_present_pct: Option<f64>,
    /// `None` when every record has the feature.
    pub fail_absent_pct: Option<f64>,
    pub delta_pp: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionalRates {
    pub total: usize,
    pub total_failures: usize,
    /// Features with a delta, by delta descending, then the undefined ones.
    pub features: Vec<FeatureRate>,
}

impl ConditionalRates {
    pub fn overall_failure_pct(&self) -> f64 {
        100.0 * self.total_failures as f64 / self.total as f64
    }

    pub fn get(&self, f: Feature) -> Option<&FeatureRate> {
        self.features.iter().find(|r| r.feature == f)
    }

    /// Features that take part in the ranking.
    pub fn ranked(&self) -> impl Iterator<Item = &FeatureRate> {
        self.features.iter().filter(|r| r.delta_pp.is_some())
    }

    pub fn render_table(&self) -> String {
        let mut s =
            format!("{:<22} {:>6} {:>6} {:>9} {:>9} {:>8}\n", "feature", "n_pres", "n_abs", "fail|f=1", "fail|f=0", "delta");
        for r in &self.features {
            let _ = writeln!(
                s,
                "{:<22} {:>6} {:>6} {:>9} {:>9} {:>8}",
                r.feature.name(),
                r.n_present,
                r.n_absent,
                fmt_pct(r.fail_present_pct),
                fmt_pct(r.fail_absent_pct),
                r.delta_pp.map_or("-".into(), |d| format!("{d:+.2}"))
            );
        }
        let _ = writeln!(s, "overall failure rate: {:.2}% of {}", self.overall_failure_pct(), self.total);
        s
    }
}

fn fmt_pct(v: Option<f64>) -> String {
    v.map_or("-".into(), |v| format!("{v:.2}"))
}

fn pct(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| 100.0 * num as f64 / den as f64)
}

pub fn conditional_failure_rates(records: &[FailureRecord]) -> Result<ConditionalRates, AnalysisError> {
    if records.is_empty() {
        return Err(AnalysisError::EmptyInput);
    }
    let total_failures = records.iter().filter(|r| r.failed()).count();
    let mut features: Vec<FeatureRate> = Feature::ALL
        .iter()
        .map(|&f| {
            let (mut np, mut fp, mut fa) = (0, 0, 0);
            for r in records {
                match (r.flags.get(f), r.failed()) {
                    (true, failed) => {
                        np += 1;
                        fp += failed as usize;
                    }
                    (false, failed) => fa += failed as usize,
                }
            }
            let na = records.len() - np;
            let (p, a) = (pct(fp, np), pct(fa, na));
            FeatureRate {
                feature: f,
                n_present: np,
                n_absent: na,
                failures_present: fp,
                failures_absent: fa,
                fail_present_pct: p,
                fail_absent_pct: a,
                delta_pp: p.zip(a).map(|(p, a)| p - a),
            }
        })
        .collect();
    // stable: ties keep the fixed feature order
    features.sort_by(|x, y| match (x.delta_pp, y.delta_pp) {
        (Some(a), Some(b)) => b.total_cmp(&a),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => std::cmp::Ordering::Equal,
    });
    Ok(ConditionalRates { total: records.len(), total_failures, features })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionBins {
    pub metric: String,
    /// `bins + 1` ascending edges shared by both populations.
    pub edges: Vec<f64>,
    pub count_success: Vec<usize>,
    pub count_failure: Vec<usize>,
    /// `None` when the population is empty.
    pub density_success: Option<Vec<f64>>,
    pub density_failure: Option<Vec<f64>>,
}

impl DistributionBins {
    pub fn bins(&self) -> usize {
        self.edges.len() - 1
    }

    pub fn width(&self, i: usize) -> f64 {
        self.edges[i + 1] - self.edges[i]
    }

    /// Integral of a density over the bins.
    pub fn integral(&self, density: &[f64]) -> f64 {
        density.iter().enumerate().map(|(i, d)| d * self.width(i)).sum()
    }
}

pub const MIN_BINS: usize = 5;
const MAX_BINS: usize = 1000;

fn metric_value(r: &FailureRecord, metric: &str) -> Result<f64, AnalysisError> {
    r.metrics.by_name(metric).map(|v| v as f64).ok_or_else(|| AnalysisError::UnknownMetric(metric.into()))
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Freedman-Diaconis bin count on the pooled values, at least [`MIN_BINS`].
pub fn fd_bins(sorted: &[f64]) -> usize {
    let n = sorted.len();
    let range = sorted[n - 1] - sorted[0];
    let iqr = quantile(sorted, 0.75) - quantile(sorted, 0.25);
    let width = 2.0 * iqr / (n as f64).cbrt();
    if range <= 0.0 || width <= 0.0 {
        return MIN_BINS;
    }
    ((range / width).ceil() as usize).clamp(MIN_BINS, MAX_BINS)
}

/// Histograms of `metric` over the success and failure populations. `bins`
/// overrides the Freedman-Diaconis choice.
pub fn metric_distributions(
    records: &[FailureRecord],
    metric: &str,
    bins: Option<usize>,
) -> Result<DistributionBins, AnalysisError> {
    if records.is_empty() {
        return Err(AnalysisError::EmptyInput);
    }
    let values = records.iter().map(|r| metric_value(r, metric)).collect::<Result<Vec<_>, _>>()?;
    let mut sorted = values.clone();
    sorted.sort_by(f64::total_cmp);
    let n_bins = bins.unwrap_or_else(|| fd_bins(&sorted)).max(1);
    let (mut lo, mut hi) = (sorted[0], sorted[sorted.len() - 1]);
    if hi <= lo {
        // one value: unit-width bins with the value centered in the middle one
        let half = n_bins as f64 / 2.0;
        (lo, hi) = (lo - half, lo + half);
    }
    let step = (hi - lo) / n_bins as f64;
    let mut edges: Vec<f64> = (0..n_bins).map(|i| lo + i as f64 * step).collect();
    edges.push(hi);

    let mut counts = [vec![0usize; n_bins], vec![0usize; n_bins]];
    for (r, v) in records.iter().zip(&values) {
        let i = edges.partition_point(|e| e <= v).saturating_sub(1).min(n_bins - 1);
        counts[r.failed() as usize][i] += 1;
    }
    let density = |c: &[usize]| {
        let n: usize = c.iter().sum();
        (n > 0).then(|| c.iter().enumerate().map(|(i, &k)| k as f64 / (n as f64 * (edges[i + 1] - edges[i]))).collect())
    };
    let [count_success, count_failure] = counts;
    Ok(DistributionBins {
        metric: metric.into(),
        density_success: density(&count_success),
        density_failure: density(&count_failure),
        edges,
        count_success,
        count_failure,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SideRate {
    pub n: usize,
    pub successes: usize,
    /// `None` when the side is empty.
    pub success_rate_pct: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSummary {
    pub metric: String,
    pub threshold: f64,
    pub below: SideRate,
    pub at_or_above: SideRate,
}

pub fn threshold_summary(records: &[FailureRecord], metric: &str, threshold: f64) -> Result<ThresholdSummary, AnalysisError> {
    if records.is_empty() {
        return Err(AnalysisError::EmptyInput);
    }
    let mut sides = [(0, 0), (0, 0)];
    for r in records {
        let side = &mut sides[(metric_value(r, metric)? >= threshold) as usize];
        side.0 += 1;
        side.1 += !r.failed() as usize;
    }
    let rate = |(n, s): (usize, usize)| SideRate { n, successes: s, success_rate_pct: pct(s, n) };
    Ok(ThresholdSummary { metric: metric.into(), threshold, below: rate(sides[0]), at_or_above: rate(sides[1]) })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeaderboardEntry {
    pub model: String,
    pub params_billions: f64,
    pub dataset: String,
    pub compile_rate_pct: f64,
    pub io_rate_pct: f64,
}

impl LeaderboardEntry {
    pub fn from_report(model: impl Into<String>, params_billions: f64, dataset: impl Into<String>, report: &EvalReport) -> Self {
        LeaderboardEntry {
            model: model.into(),
            params_billions,
            dataset: dataset.into(),
            compile_rate_pct: report.compile_rate_pct,
            io_rate_pct: report.io_rate_pct,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub compile_rate_pct: f64,
    pub io_rate_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeaderboardRow {
    pub model: String,
    pub params_billions: f64,
    /// One cell per dataset, in [`Leaderboard::datasets`] order.
    pub cells: Vec<Option<Cell>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterPoint {
    pub model: String,
    pub dataset: String,
    pub log10_params: f64,
    pub io_rate_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Leaderboard {
    pub datasets: Vec<String>,
    pub rows: Vec<LeaderboardRow>,
    pub scatter: Vec<ScatterPoint>,
}

/// Pivots entries into one row per model (first-seen parameter count wins),
/// ordered by parameters descending with input order breaking ties.
pub fn leaderboard(entries: &[LeaderboardEntry]) -> Result<Leaderboard, AnalysisError> {
    if entries.is_empty() {
        return Err(AnalysisError::EmptyInput);
    }
    let mut datasets: Vec<String> = Vec::new();
    for e in entries {
        if e.params_billions.is_nan() || e.params_billions <= 0.0 {
            return Err(AnalysisError::InvalidParams(e.model.clone()));
        }
        if !datasets.contains(&e.dataset) {
            datasets.push(e.dataset.clone());
        }
    }
    let mut rows: Vec<LeaderboardRow> = Vec::new();
    for e in entries {
        let d = datasets.iter().position(|d| *d == e.dataset).unwrap_or_default();
        let i = match rows.iter().position(|r| r.model == e.model) {
            Some(i) => i,
            None => {
                rows.push(LeaderboardRow {
                    model: e.model.clone(),
                    params_billions: e.params_billions,
                    cells: vec![None; datasets.len()],
                });
                rows.len() - 1
            }
        };
        rows[i].cells[d] = Some(Cell { compile_rate_pct: e.compile_rate_pct, io_rate_pct: e.io_rate_pct });
    }
    rows.sort_by(|a, b| b.params_billions.total_cmp(&a.params_billions));
    let scatter = rows
        .iter()
        .flat_map(|r| {
            r.cells.iter().zip(&datasets).filter_map(|(c, d)| {
                c.map(|c| ScatterPoint {
                    model: r.model.clone(),
                    dataset: d.clone(),
                    log10_params: r.params_billions.log10(),
                    io_rate_pct: c.io_rate_pct,
                })
            })
        })
        .collect();
    Ok(Leaderboard { datasets, rows, scatter })
}

impl Leaderboard {
    pub fn render_table(&self) -> String {
        let mut s = format!("{:<24} {:>9}", "model", "params(B)");
        for d in &self.datasets {
            let _ = write!(s, " {:>9} {:>9}", format!("{}:comp", abbrev(d)), format!("{}:io", abbrev(d)));
        }
        s.push('\n');
        for r in &self.rows {
            let _ = write!(s, "{:<24} {:>9}", r.model, r.params_billions);
            for c in &r.cells {
                match c {
                    Some(c) => {
                        let _ = write!(s, " {:>9.2} {:>9.2}", c.compile_rate_pct, c.io_rate_pct);
                    }
                    None => {
                        let _ = write!(s, " {:>9} {:>9}", "-", "-");
                    }
                }
            }
            s.push('\n');
        }
        s
    }
}

fn abbrev(d: &str) -> String {
    d.chars().take(4).collect()
}

fn opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

pub fn write_rates_csv(path: &Path, rates: &ConditionalRates) -> Result<(), AnalysisError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["feature", "n_present", "n_absent", "fail_present_pct", "fail_absent_pct", "delta_pp"])?;
    for r in &rates.features {
        w.write_record([
            r.feature.name().to_string(),
            r.n_present.to_string(),
            r.n_absent.to_string(),
            opt(r.fail_present_pct),
            opt(r.fail_absent_pct),
            opt(r.delta_pp),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `dist_<metric>.csv` into `dir` and returns its path.
pub fn write_distribution_csv(dir: &Path, dist: &DistributionBins) -> Result<std::path::PathBuf, AnalysisError> {
    let path = dir.join(format!("dist_{}.csv", dist.metric));
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record(["bin_lo", "bin_hi", "count_success", "count_failure", "density_success", "density_failure"])?;
    for i in 0..dist.bins() {
        let d = |v: &Option<Vec<f64>>| opt(v.as_ref().map(|v| v[i]));
        w.write_record([
            dist.edges[i].to_string(),
            dist.edges[i + 1].to_string(),
            dist.count_success[i].to_string(),
            dist.count_failure[i].to_string(),
            d(&dist.density_success),
            d(&dist.density_failure),
        ])?;
    }
    w.flush()?;
    Ok(path)
}

pub fn write_leaderboard_csv(path: &Path, board: &Leaderboard) -> Result<(), AnalysisError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["model", "params_billions", "log10_params", "dataset", "compile_rate_pct", "io_rate_pct"])?;
    for r in &board.rows {
        for (c, d) in r.cells.iter().zip(&board.datasets) {
            if let Some(c) = c {
                w.write_record([
                    r.model.clone(),
                    r.params_billions.to_string(),
                    r.params_billions.log10().to_string(),
                    d.clone(),
                    c.compile_rate_pct.to_string(),
                    c.io_rate_pct.to_string(),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads leaderboard entries back from a `leaderboard.csv`-shaped file
/// (the `log10_params` column is optional and ignored).
pub fn read_leaderboard_csv(path: &Path) -> Result<Vec<LeaderboardEntry>, AnalysisError> {
    let mut r = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for row in r.deserialize() {
        out.push(row?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantiles_interpolate() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&v, 0.0), 1.0);
        assert_eq!(quantile(&v, 0.5), 2.5);
        assert_eq!(quantile(&v, 1.0), 4.0);
    }

    #[test]
    fn fd_has_a_floor() {
        assert_eq!(fd_bins(&[3.0; 10]), MIN_BINS);
        assert_eq!(fd_bins(&[0.0, 1.0]), MIN_BINS);
        let wide: Vec<f64> = (0..1000).map(f64::from).collect();
        // iqr 499.5, width ~99.9, range 999
        assert_eq!(fd_bins(&wide), 10);
    }
}
