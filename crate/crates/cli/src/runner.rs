//! Chunked worker pool with a single writer and a resumable checkpoint.
//!
//! Items are processed in input order, `parallelism` at a time. After each
//! chunk the writer appends one staged line per item and then the item ids
//! to the checkpoint, so the checkpoint always names a prefix of the input.
//! An interrupt stops between chunks.

use crate::Failure;
use iris_core::Execution;
use serde::de::DeserializeOwned;
use serde::Serialize;
use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};

pub static INTERRUPTED: AtomicBool = AtomicBool::new(false);

/// Staged per-item output.
pub trait Staged: Serialize + DeserializeOwned + Send {
    fn ok(&self) -> bool;
}

pub struct Runner {
    pub staging: PathBuf,
    pub checkpoint: PathBuf,
    pub resume: bool,
    pub parallelism: usize,
    pub quiet: bool,
}

pub struct Outcome<S> {
    pub staged: Vec<S>,
    pub failed: usize,
}

fn read_lines(path: &Path) -> std::io::Result<Vec<String>> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    BufReader::new(File::open(path)?).lines().collect()
}

impl Runner {
    /// Side files for an output path: `<out>.staging.jsonl` and `<out>.checkpoint`.
    pub fn for_output(out: &Path, resume: bool, parallelism: usize, quiet: bool) -> Self {
        let side = |ext: &str| {
            let mut s = out.as_os_str().to_owned();
            s.push(ext);
            PathBuf::from(s)
        };
        Self { staging: side(".staging.jsonl"), checkpoint: side(".checkpoint"), resume, parallelism, quiet }
    }

    pub fn run<T, S, F>(&self, items: &[T], id: impl Fn(&T) -> String, work: F) -> Result<Outcome<S>, Failure>
    where
        T: Sync,
        S: Staged,
        F: Fn(&T) -> S + Sync + Send,
    {
        let (done_ids, mut staged) = if self.resume { self.load()? } else { (Vec::new(), Vec::new()) };
        let done: HashSet<&str> = done_ids.iter().map(String::as_str).collect();
        if let Some(dir) = self.staging.parent() {
            std::fs::create_dir_all(dir)?;
        }
        // rewrite both files so they hold exactly the resumed prefix
        let mut stage_out = File::create(&self.staging)?;
        let mut ckpt_out = File::create(&self.checkpoint)?;
        for (s, id) in staged.iter().zip(&done_ids) {
            writeln!(stage_out, "{}", serde_json::to_string(s)?)?;
            writeln!(ckpt_out, "{id}")?;
        }
        let pending: Vec<&T> = items.iter().filter(|t| !done.contains(id(t).as_str())).collect();
        if self.resume && !done.is_empty() {
            self.progress(format_args!("resuming: {} done, {} to go", done.len(), pending.len()));
        }
        let total = items.len();
        let mut finished = total - pending.len();
        let exec = Execution::default();
        for chunk in pending.chunks(self.parallelism.max(1) * 2) {
            if INTERRUPTED.load(Ordering::SeqCst) {
                stage_out.flush()?;
                ckpt_out.flush()?;
                return Err(Failure::Interrupted { checkpoint: self.checkpoint.clone() });
            }
            let results = exec.install(self.parallelism, || exec.map(chunk, |t| work(t)));
            for (t, s) in chunk.iter().zip(&results) {
                writeln!(stage_out, "{}", serde_json::to_string(s)?)?;
                finished += 1;
                self.progress(format_args!("[{finished}/{total}] {}: {}", id(t), if s.ok() { "ok" } else { "failed" }));
            }
            stage_out.flush()?;
            for t in chunk {
                writeln!(ckpt_out, "{}", id(t))?;
            }
            ckpt_out.flush()?;
            staged.extend(results);
        }
        let failed = staged.iter().filter(|s| !s.ok()).count();
        Ok(Outcome { staged, failed })
    }

    fn load<S: Staged>(&self) -> Result<(Vec<String>, Vec<S>), Failure> {
        let ids = read_lines(&self.checkpoint)?;
        let lines = read_lines(&self.staging)?;
        if lines.len() < ids.len() {
            return Err(Failure::Runtime(anyhow::anyhow!(
                "checkpoint {} lists {} items but staging holds {}",
                self.checkpoint.display(),
                ids.len(),
                lines.len()
            )));
        }
        let staged = lines[..ids.len()].iter().map(|l| serde_json::from_str(l)).collect::<Result<Vec<S>, _>>()?;
        Ok((ids, staged))
    }

    /// Removes the side files after the final artifacts are written.
    pub fn finish(&self) -> std::io::Result<()> {
        for p in [&self.staging, &self.checkpoint] {
            if p.exists() {
                std::fs::remove_file(p)?;
            }
        }
        Ok(())
    }

    fn progress(&self, msg: std::fmt::Arguments) {
        if !self.quiet {
            eprintln!("{msg}");
        }
    }
}
