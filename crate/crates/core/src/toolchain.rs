//! Driving gcc, clang, llc, clang++ and ctags in throwaway working
//! directories.
//!
//! Every operation runs its tools with explicit argument vectors (never via
//! a shell) inside a fresh temp dir, so concurrent calls never share files.

use crate::clex;
use crate::csource::{render_tokens, TopItem, TranslationUnit};
use crate::process::{self, RunOutcome};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::env;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Duration;
use thiserror::Error;

/// Replaces the per-invocation temp dir in dump text.
pub const TU_TOKEN: &str = "<TU>";

#[derive(Debug, Error)]
pub enum ToolchainError {
    #[error("{tool} exited with status {exit_code}: {stderr}")]
    ToolFailure { tool: String, exit_code: i32, stderr: String },
    #[error("{tool} succeeded but produced no {what}")]
    DumpMissing { tool: String, what: String },
    #[error("{tool} timed out after {seconds:.1}s")]
    Timeout { tool: String, seconds: f64 },
    #[error("IR rejected by the backend compiler: {diagnostics}")]
    IrRejected { diagnostics: String },
    #[error("link failed: {diagnostics}")]
    LinkFailure { diagnostics: String },
    #[error("tool {tool} not usable at {path}")]
    ToolMissing { tool: String, path: PathBuf },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, ToolchainError>;

/// Source language handed to the GCC driver for GIMPLE dumps.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum FrontendLanguage {
    #[default]
    C,
    /// Any other GCC frontend, e.g. `gnat` with extension `adb` or `gm2`
    /// with extension `mod`.
    OtherGccFrontend { driver: PathBuf, extension: String },
}

fn default_timeout() -> f64 {
    60.0
}

/// Fields missing from a serialized config take their [`discover`](Self::discover) values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ToolchainConfig {
    pub gcc_path: PathBuf,
    pub clang_path: PathBuf,
    /// `llc`, or a clang driver, in which case IR is compiled with
    /// `clang -c -x ir`.
    pub llc_path: PathBuf,
    pub clangxx_path: PathBuf,
    /// `None` selects the built-in declaration scanner.
    #[serde(default)]
    pub ctags_path: Option<PathBuf>,
    #[serde(default)]
    pub extra_gcc_flags: Vec<String>,
    #[serde(default)]
    pub extra_clang_flags: Vec<String>,
    #[serde(default)]
    pub frontend_language: FrontendLanguage,
    #[serde(default = "default_timeout")]
    pub timeout_s: f64,
}

impl Default for ToolchainConfig {
    fn default() -> Self {
        Self::discover()
    }
}

const LLC_NAMES: &[&str] = &[
    "llc", "llc-22", "llc-21", "llc-20", "llc-19", "llc-18", "llc-17", "llc-16", "llc-15", "llc-14", "llc-13", "llc-12", "llc-11",
];
const CTAGS_NAMES: &[&str] = &["ctags", "universal-ctags", "ctags-universal", "exuberant-ctags"];

impl ToolchainConfig {
    /// Locates tools under `IRIS_TOOLCHAIN_DIR` when set, otherwise on `PATH`.
    /// Falls back to clang for IR compilation when no `llc` is installed and
    /// to the built-in scanner when no ctags is installed.
    pub fn discover() -> Self {
        let dir = env::var_os("IRIS_TOOLCHAIN_DIR").map(PathBuf::from);
        let find = |names: &[&str]| -> Option<PathBuf> {
            names.iter().find_map(|n| match &dir {
                Some(d) => Some(d.join(n)).filter(|p| is_executable(p)),
                None => which(n),
            })
        };
        let named = |n: &str| find(&[n]).unwrap_or_else(|| dir.as_ref().map_or_else(|| n.into(), |d| d.join(n)));
        let clang_path = named("clang");
        Self {
            gcc_path: named("gcc"),
            llc_path: find(LLC_NAMES).unwrap_or_else(|| clang_path.clone()),
            clang_path,
            clangxx_path: named("clang++"),
            ctags_path: find(CTAGS_NAMES),
            extra_gcc_flags: Vec::new(),
            extra_clang_flags: Vec::new(),
            frontend_language: FrontendLanguage::C,
            timeout_s: default_timeout(),
        }
    }

    /// Checks that every configured tool resolves to an executable file.
    pub fn validate(&self) -> Result<()> {
        let mut tools =
            vec![("gcc", &self.gcc_path), ("clang", &self.clang_path), ("llc", &self.llc_path), ("clang++", &self.clangxx_path)];
        if let Some(c) = &self.ctags_path {
            tools.push(("ctags", c));
        }
        if let FrontendLanguage::OtherGccFrontend { driver, .. } = &self.frontend_language {
            tools.push(("frontend", driver));
        }
        for (tool, path) in tools {
            if resolve(path).is_none() {
                return Err(ToolchainError::ToolMissing { tool: tool.into(), path: path.clone() });
            }
        }
        Ok(())
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_secs_f64(self.timeout_s.max(0.001))
    }

    fn llc_is_clang(&self) -> bool {
        self.llc_path.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.starts_with("clang"))
    }

    /// First line of `--version` for each tool, for corpus manifests.
    pub fn versions(&self) -> BTreeMap<String, String> {
        let mut out = BTreeMap::new();
        let mut tools = vec![("gcc", &self.gcc_path), ("clang", &self.clang_path), ("llc", &self.llc_path)];
        if let Some(c) = &self.ctags_path {
            tools.push(("ctags", c));
        }
        for (name, path) in tools {
            let mut cmd = Command::new(path);
            cmd.arg("--version");
            let line = process::run(cmd, b"", Duration::from_secs(10))
                .ok()
                .map(|o| o.stdout_lossy())
                .and_then(|s| s.lines().map(str::trim).find(|l| !l.is_empty()).map(str::to_string))
                .unwrap_or_else(|| "unavailable".into());
            out.insert(name.to_string(), line);
        }
        out
    }

    fn run_tool(&self, tool: &str, path: &Path, args: &[&str], cwd: &Path) -> Result<RunOutcome> {
        let mut cmd = Command::new(path);
        cmd.args(args).current_dir(cwd);
        let outcome = process::run(cmd, b"", self.timeout()).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound | std::io::ErrorKind::PermissionDenied => {
                ToolchainError::ToolMissing { tool: tool.into(), path: path.to_path_buf() }
            }
            _ => ToolchainError::Io(e),
        })?;
        if outcome.timed_out {
            return Err(ToolchainError::Timeout { tool: tool.into(), seconds: self.timeout_s });
        }
        Ok(outcome)
    }

    /// Unoptimized GIMPLE for `source`, as written by `-fdump-tree-gimple`.
    pub fn dump_gimple(&self, source: &str) -> Result<String> {
        let dir = tempfile::tempdir()?;
        let (driver, ext) = match &self.frontend_language {
            FrontendLanguage::C => (self.gcc_path.clone(), "c".to_string()),
            FrontendLanguage::OtherGccFrontend { driver, extension } => (driver.clone(), extension.clone()),
        };
        let input = format!("input.{ext}");
        std::fs::write(dir.path().join(&input), source)?;
        let mut args = vec!["-O0", "-fdump-tree-gimple", "-c", input.as_str(), "-o", "input.o"];
        args.extend(self.extra_gcc_flags.iter().map(String::as_str));
        let out = self.run_tool("gcc", &driver, &args, dir.path())?;
        if !out.success() {
            return Err(failure("gcc", &out));
        }
        // the pass number in `<input>.<NNN>t.gimple` varies across GCC releases
        let mut dumps: Vec<PathBuf> = std::fs::read_dir(dir.path())?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|e| e == "gimple"))
            .collect();
        dumps.sort();
        let Some(dump) = dumps.first() else {
            return Err(ToolchainError::DumpMissing { tool: "gcc".into(), what: "*.gimple dump".into() });
        };
        let text = String::from_utf8_lossy(&std::fs::read(dump)?).into_owned();
        Ok(scrub_paths(&text, dir.path()))
    }

    /// Unoptimized LLVM IR for `source` from `clang -O0 -S -emit-llvm`.
    pub fn dump_llvm_ir(&self, source: &str) -> Result<String> {
        let dir = tempfile::tempdir()?;
        std::fs::write(dir.path().join("input.c"), source)?;
        let mut args = vec!["-O0", "-S", "-emit-llvm", "input.c", "-o", "input.ll"];
        args.extend(self.extra_clang_flags.iter().map(String::as_str));
        let out = self.run_tool("clang", &self.clang_path, &args, dir.path())?;
        if !out.success() {
            return Err(failure("clang", &out));
        }
        let path = dir.path().join("input.ll");
        if !path.exists() {
            return Err(ToolchainError::DumpMissing { tool: "clang".into(), what: "input.ll".into() });
        }
        let text = String::from_utf8_lossy(&std::fs::read(path)?).into_owned();
        Ok(scrub_paths(&text, dir.path()))
    }

    /// Compiles LLVM IR text to `<dir>/candidate.o`. A rejection here is the
    /// "does not compile" verdict for a candidate translation.
    pub fn compile_ir_to_object(&self, llvm_ir: &str, dir: &Path) -> Result<PathBuf> {
        std::fs::write(dir.join("candidate.ll"), llvm_ir)?;
        let obj = dir.join("candidate.o");
        let _ = std::fs::remove_file(&obj);
        let args: Vec<&str> = if self.llc_is_clang() {
            vec!["-c", "-x", "ir", "-Wno-override-module", "candidate.ll", "-o", "candidate.o"]
        } else {
            vec!["-filetype=obj", "-relocation-model=pic", "candidate.ll", "-o", "candidate.o"]
        };
        let out = self.run_tool("llc", &self.llc_path, &args, dir)?;
        if !out.success() || !obj.exists() {
            return Err(ToolchainError::IrRejected { diagnostics: scrub_paths(&out.stderr_lossy(), dir) });
        }
        Ok(obj)
    }

    /// Builds `wrapper_cpp` with clang++ and links it against `object`.
    pub fn link_with_wrapper(&self, object: &Path, wrapper_cpp: &str, dir: &Path) -> Result<PathBuf> {
        std::fs::write(dir.join("wrapper.cpp"), wrapper_cpp)?;
        let exe = dir.join("wrapper.exe");
        let obj = object.to_string_lossy();
        let args = ["wrapper.cpp", obj.as_ref(), "-o", "wrapper.exe", "-lm"];
        self.link(&self.clangxx_path.clone(), "clang++", &args, dir, exe)
    }

    /// Links a whole program (the object defines `main`) with the C driver.
    pub fn link_program(&self, object: &Path, dir: &Path) -> Result<PathBuf> {
        let exe = dir.join("program.exe");
        let obj = object.to_string_lossy();
        let args = [obj.as_ref(), "-o", "program.exe", "-lm"];
        self.link(&self.clang_path.clone(), "clang", &args, dir, exe)
    }

    /// Links `object` with a driver whose `main` only returns 0, for units
    /// that define no `main` of their own.
    pub fn link_with_trivial_driver(&self, object: &Path, dir: &Path) -> Result<PathBuf> {
        std::fs::write(dir.join("driver.c"), "int main(void) { return 0; }\n")?;
        let exe = dir.join("program.exe");
        let obj = object.to_string_lossy();
        let args = ["driver.c", obj.as_ref(), "-o", "program.exe", "-lm"];
        self.link(&self.clang_path.clone(), "clang", &args, dir, exe)
    }

    fn link(&self, tool_path: &Path, tool: &str, args: &[&str], dir: &Path, exe: PathBuf) -> Result<PathBuf> {
        let _ = std::fs::remove_file(&exe);
        let out = self.run_tool(tool, tool_path, args, dir)?;
        if !out.success() || !exe.exists() {
            return Err(ToolchainError::LinkFailure { diagnostics: scrub_paths(&out.stderr_lossy(), dir) });
        }
        Ok(exe)
    }

    /// One C declaration per function or object defined in `c_source`, in
    /// source order, suitable for an `extern "C" { }` block. `main` is
    /// never declared.
    pub fn extract_declarations(&self, c_source: &str) -> Result<Vec<String>> {
        let builtin = builtin_declarations(c_source);
        let Some(ctags) = &self.ctags_path else {
            return Ok(builtin.into_iter().map(|(_, d)| d).collect());
        };
        let dir = tempfile::tempdir()?;
        std::fs::write(dir.path().join("input.c"), c_source)?;
        let args = ["--output-format=json", "--sort=no", "--kinds-C=fv", "--fields=+nStZ", "-f", "-", "input.c"];
        let out = self.run_tool("ctags", ctags, &args, dir.path())?;
        if !out.success() {
            return Err(failure("ctags", &out));
        }
        let mut decls = Vec::new();
        for line in out.stdout_lossy().lines() {
            let Ok(tag) = serde_json::from_str::<CtagsEntry>(line) else { continue };
            if tag.kind_type.as_deref() != Some("tag") && tag.kind_type.is_some() {
                continue;
            }
            if tag.name == "main" || tag.scope.is_some() {
                continue;
            }
            // ctags gives the symbol list; the declaration text is rebuilt
            // from the source whenever the scanner saw the same symbol
            if let Some((_, d)) = builtin.iter().find(|(n, _)| *n == tag.name) {
                decls.push(d.clone());
                continue;
            }
            let ty = tag.typeref.as_deref().and_then(|t| t.strip_prefix("typename:")).unwrap_or("int");
            match (tag.kind.as_str(), tag.signature.as_deref()) {
                ("function" | "f", Some(sig)) => decls.push(format!("{ty} {}{sig};", tag.name)),
                ("variable" | "v", _) => decls.push(format!("extern {ty} {};", tag.name)),
                _ => {}
            }
        }
        Ok(decls)
    }

    /// True iff both gcc and clang accept `source`. Only a missing tool is
    /// an error; every compiler rejection maps to `false`.
    pub fn check_compiles_both(&self, source: &str) -> Result<bool> {
        let gimple = self.dump_gimple(source);
        let llvm = self.dump_llvm_ir(source);
        for r in [&gimple.as_ref().err(), &llvm.as_ref().err()] {
            if let Some(ToolchainError::ToolMissing { tool, path }) = r {
                return Err(ToolchainError::ToolMissing { tool: tool.clone(), path: path.clone() });
            }
        }
        Ok(gimple.is_ok() && llvm.is_ok())
    }
}

#[derive(Deserialize)]
struct CtagsEntry {
    #[serde(rename = "_type")]
    kind_type: Option<String>,
    name: String,
    #[serde(default)]
    kind: String,
    signature: Option<String>,
    typeref: Option<String>,
    scope: Option<String>,
}

fn failure(tool: &str, out: &RunOutcome) -> ToolchainError {
    ToolchainError::ToolFailure { tool: tool.into(), exit_code: out.code_or_signal(), stderr: out.stderr_lossy() }
}

fn scrub_paths(text: &str, dir: &Path) -> String {
    let mut s = text.to_string();
    let raw = dir.to_string_lossy();
    if let Ok(canon) = dir.canonicalize() {
        let c = canon.to_string_lossy();
        if c != raw {
            s = s.replace(c.as_ref(), TU_TOKEN);
        }
    }
    s.replace(raw.as_ref(), TU_TOKEN)
}

fn is_executable(p: &Path) -> bool {
    use std::os::unix::fs::PermissionsExt;
    p.metadata().is_ok_and(|m| m.is_file() && m.permissions().mode() & 0o111 != 0)
}

fn which(name: &str) -> Option<PathBuf> {
    env::var_os("PATH").and_then(|paths| env::split_paths(&paths).map(|d| d.join(name)).find(|p| is_executable(p)))
}

fn resolve(p: &Path) -> Option<PathBuf> {
    if p.components().count() > 1 {
        is_executable(p).then(|| p.to_path_buf())
    } else {
        which(&p.to_string_lossy())
    }
}

/// Declarations reconstructed from the source text: function definitions
/// become prototypes and file-scope object definitions become `extern`
/// declarations without initializers. Storage-class `static` and `inline`
/// are dropped.
pub fn builtin_declarations(c_source: &str) -> Vec<(String, String)> {
    let Ok(tu) = TranslationUnit::scan(c_source) else { return Vec::new() };
    let toks = &tu.tokens;
    let mut out = Vec::new();
    for item in &tu.items {
        match item {
            TopItem::Function { name, tokens, body, .. } => {
                if name == "main" {
                    continue;
                }
                let head: Vec<_> = toks[tokens.start..body.start]
                    .iter()
                    .filter(|t| !matches!(t.text, "static" | "inline" | "__inline" | "__inline__" | "extern"))
                    .cloned()
                    .collect();
                let head = strip_attributes(&head);
                out.push((name.clone(), format!("{};", render_tokens(&head))));
            }
            TopItem::Declaration { tokens } => {
                out.extend(object_declarations(&toks[tokens.clone()]));
            }
            TopItem::KnrFunction { .. } => {}
        }
    }
    out
}

fn strip_attributes<'a>(toks: &[clex::Token<'a>]) -> Vec<clex::Token<'a>> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < toks.len() {
        if matches!(toks[i].text, "__attribute__" | "__asm__" | "asm") && toks.get(i + 1).is_some_and(|t| t.is("(")) {
            i = clex::matching_close(toks, i + 1).map_or(toks.len(), |c| c + 1);
            continue;
        }
        out.push(toks[i].clone());
        i += 1;
    }
    out
}

/// `int a = 1, *b;` at file scope → `extern int a;`, `extern int *b;`.
fn object_declarations(decl: &[clex::Token<'_>]) -> Vec<(String, String)> {
    let decl = strip_attributes(decl);
    if decl.iter().any(|t| matches!(t.text, "typedef" | "extern" | "_Static_assert")) {
        return Vec::new();
    }
    let body: Vec<_> = decl.iter().filter(|t| !t.is(";")).cloned().collect();
    let (spec_end, _) = crate::csource::split_specifiers(&body);
    if spec_end >= body.len() {
        return Vec::new();
    }
    let specs: Vec<_> = body[..spec_end].iter().filter(|t| !matches!(t.text, "static" | "inline")).cloned().collect();
    let mut out = Vec::new();
    for declarator in crate::csource::split_declarators(&body[spec_end..]) {
        let Some(name) = crate::csource::declarator_name(declarator) else { continue };
        if crate::csource::declarator_is_function(declarator) {
            continue;
        }
        let end = declarator.iter().position(|t| t.is("=")).unwrap_or(declarator.len());
        let mut all = specs.clone();
        all.extend_from_slice(&declarator[..end]);
        out.push((name.to_string(), format!("extern {};", render_tokens(&all))));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_declarations_for_functions_and_globals() {
        let src = "int add(int a,int b){return a+b;}\nstatic int g = 3, *gp;\nconst char msg[] = \"x\";\nstruct P { int x; };\ntypedef int T;\nint proto(int);\nint main(){return add(1,2);}\n";
        let d: Vec<String> = builtin_declarations(src).into_iter().map(|(_, d)| d).collect();
        assert_eq!(d, ["int add(int a, int b);", "extern int g;", "extern int *gp;", "extern const char msg[];"]);
    }

    #[test]
    fn scrub_replaces_temp_dir() {
        let d = tempfile::tempdir().unwrap();
        let text = format!("; ModuleID = '{}/input.c'", d.path().display());
        assert_eq!(scrub_paths(&text, d.path()), "; ModuleID = '<TU>/input.c'");
    }

    #[test]
    fn validate_reports_missing_tool() {
        let mut cfg = ToolchainConfig::discover();
        cfg.gcc_path = "/nonexistent/gcc".into();
        assert!(matches!(cfg.validate(), Err(ToolchainError::ToolMissing { tool, .. }) if tool == "gcc"));
    }
}
