//! Static code metrics of C sources and dynamic metrics of executions.
//!
//! Static counters are lexical. They are computed on the token stream
//! (comments and preprocessor lines removed) with these rules:
//!
//! * `global_mutable_vars` / `global_const_vars`: object, array and pointer
//!   declarators at file scope, excluding `typedef` and `extern`. A pointer
//!   is const when `const` follows its last `*`; anything else is const when
//!   its specifiers say `const`.
//! * `conditionals`: `if` and `switch` keywords. The ternary operator is not
//!   counted.
//! * `loops`: `for`, `while` and `do` statements; the `while` closing a
//!   do-while is part of its `do`.
//! * `memory_ops`: calls to `malloc`, `calloc`, `realloc`, `free`, `memset`,
//!   `memcpy`, `memmove`.
//! * `lines_of_code`: physical lines of the original text, blanks included.
//! * `nesting_depth`: deepest control statement, counting enclosing control
//!   statements; `else if` chains stay at the level of their first `if`.
//! * `arrays_instantiated`, `typed_pointers_instantiated`,
//!   `void_pointers_instantiated`: declarators of variables at file or block
//!   scope (parameters excluded). `*a[4]` is an array. A pointer is a void
//!   pointer when its base type is exactly `void`.
//! * `array_reads` / `array_writes`: subscript chains `x[i][j].f` in
//!   expressions; a chain is a write when an assignment operator follows it.
//! * `pointer_calls`: calls through a pointer (`fp(..)`, `(*fp)(..)`,
//!   `t[i](..)`) or with an argument that is a pointer/array variable or an
//!   address-of expression.
//! * `pointer_arith_ops`: `+ - += -= ++ --` with a declared pointer variable
//!   as the adjacent operand (not dereferenced, not a member).
//! * `struct_usages`: occurrences of the `struct` keyword.

use crate::clex::{self, is_keyword, Token, TokenKind};
use crate::csource::{
    classify_declarator, split_declarators, split_specifiers_with, DeclaratorKind, ScanError, TopItem, TranslationUnit,
    STANDARD_TYPEDEFS,
};
use crate::process;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashSet};
use std::path::Path;
use std::process::Command;
use std::time::Duration;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("unbalanced braces at byte offset {offset}")]
    UnbalancedBraces { offset: usize },
    #[error("unknown feature schema `{0}`")]
    UnknownSchema(String),
}

impl From<ScanError> for MetricsError {
    fn from(e: ScanError) -> Self {
        match e {
            ScanError::UnbalancedBraces { offset } => MetricsError::UnbalancedBraces { offset },
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StaticMetrics {
    pub global_mutable_vars: u64,
    pub global_const_vars: u64,
    pub conditionals: u64,
    pub loops: u64,
    pub memory_ops: u64,
    pub lines_of_code: u64,
    pub nesting_depth: u64,
    pub arrays_instantiated: u64,
    pub array_reads: u64,
    pub array_writes: u64,
    pub typed_pointers_instantiated: u64,
    pub void_pointers_instantiated: u64,
    pub pointer_calls: u64,
    pub pointer_arith_ops: u64,
    pub struct_usages: u64,
}

impl StaticMetrics {
    /// The thirteen grouped metrics, in schema order.
    pub fn static13(&self) -> [f64; 13] {
        [
            self.global_mutable_vars,
            self.global_const_vars,
            self.conditionals,
            self.loops,
            self.memory_ops,
            self.lines_of_code,
            self.nesting_depth,
            self.arrays_instantiated,
            self.array_reads,
            self.array_writes,
            self.typed_pointers_instantiated + self.void_pointers_instantiated,
            self.pointer_calls + self.pointer_arith_ops,
            self.struct_usages,
        ]
        .map(|v| v as f64)
    }

    /// Every fine-grained counter, in field order.
    pub fn fine(&self) -> [f64; 15] {
        [
            self.global_mutable_vars,
            self.global_const_vars,
            self.conditionals,
            self.loops,
            self.memory_ops,
            self.lines_of_code,
            self.nesting_depth,
            self.arrays_instantiated,
            self.array_reads,
            self.array_writes,
            self.typed_pointers_instantiated,
            self.void_pointers_instantiated,
            self.pointer_calls,
            self.pointer_arith_ops,
            self.struct_usages,
        ]
        .map(|v| v as f64)
    }

    pub fn counter(&self, f: Feature) -> u64 {
        match f {
            Feature::StructUsages => self.struct_usages,
            Feature::MemoryOps => self.memory_ops,
            Feature::ArrayWrites => self.array_writes,
            Feature::TypedPointers => self.typed_pointers_instantiated,
            Feature::PointerArith => self.pointer_arith_ops,
            Feature::PointerCalls => self.pointer_calls,
            Feature::ArrayReads => self.array_reads,
            Feature::GlobalMutableVars => self.global_mutable_vars,
            Feature::VoidPointers => self.void_pointers_instantiated,
            Feature::GlobalConstVars => self.global_const_vars,
            Feature::ArraysInstantiated => self.arrays_instantiated,
            Feature::Conditionals => self.conditionals,
            Feature::Loops => self.loops,
        }
    }

    /// Value of a metric by field name, for distribution analyses.
    /// Counter by field name; also accepts the grouped `pointers_instantiated`
    /// and `pointer_ops`.
    pub fn by_name(&self, name: &str) -> Option<u64> {
        match name {
            "pointers_instantiated" => return Some(self.typed_pointers_instantiated + self.void_pointers_instantiated),
            "pointer_ops" => return Some(self.pointer_calls + self.pointer_arith_ops),
            _ => {}
        }
        let v = serde_json::to_value(self).ok()?;
        v.get(name)?.as_u64()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct DynamicMetrics {
    pub wall_clock_s: f64,
    pub peak_mem_bytes: u64,
    pub cpu_util_pct: f64,
    pub exec_size_bytes: u64,
    /// Set when the host did not report peak memory.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub degraded: bool,
}

impl DynamicMetrics {
    pub fn as_array(&self) -> [f64; 4] {
        [self.wall_clock_s, self.peak_mem_bytes as f64, self.cpu_util_pct, self.exec_size_bytes as f64]
    }
}

/// Per-dimension normalization statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimStats {
    pub mean: f64,
    pub stddev: f64,
    /// Zero-variance dimension; normalized value is always 0.
    pub dropped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub schema_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normalization: Option<Vec<DimStats>>,
}

impl FeatureVector {
    pub fn raw(values: Vec<f64>, schema_id: &str) -> Self {
        Self { values, schema_id: schema_id.to_string(), normalization: None }
    }

    /// Inverse of z-scoring with the stored statistics. Dropped dimensions
    /// come back as their mean. Raw vectors are returned unchanged.
    pub fn denormalize(&self) -> Vec<f64> {
        match &self.normalization {
            None => self.values.clone(),
            Some(stats) => {
                self.values.iter().zip(stats).map(|(z, s)| if s.dropped { s.mean } else { z * s.stddev + s.mean }).collect()
            }
        }
    }
}

pub const SCHEMA_STATIC13: &str = "static13";
pub const SCHEMA_STATIC13_DYN4: &str = "static13+dyn4";
pub const SCHEMA_FINE15_DYN4: &str = "fine15+dyn4";

pub fn schema_dimension(schema_id: &str) -> Result<usize, MetricsError> {
    match schema_id {
        SCHEMA_STATIC13 => Ok(13),
        SCHEMA_STATIC13_DYN4 => Ok(17),
        SCHEMA_FINE15_DYN4 => Ok(19),
        other => Err(MetricsError::UnknownSchema(other.to_string())),
    }
}

pub fn feature_vector(s: &StaticMetrics, d: &DynamicMetrics, schema_id: &str) -> Result<FeatureVector, MetricsError> {
    let values: Vec<f64> = match schema_id {
        SCHEMA_STATIC13 => s.static13().to_vec(),
        SCHEMA_STATIC13_DYN4 => s.static13().iter().chain(d.as_array().iter()).copied().collect(),
        SCHEMA_FINE15_DYN4 => s.fine().iter().chain(d.as_array().iter()).copied().collect(),
        other => return Err(MetricsError::UnknownSchema(other.to_string())),
    };
    Ok(FeatureVector::raw(values, schema_id))
}

/// Presence features used in failure analyses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Feature {
    StructUsages,
    MemoryOps,
    ArrayWrites,
    TypedPointers,
    PointerArith,
    PointerCalls,
    ArrayReads,
    GlobalMutableVars,
    VoidPointers,
    GlobalConstVars,
    ArraysInstantiated,
    Conditionals,
    Loops,
}

impl Feature {
    pub const ALL: [Feature; 13] = [
        Feature::StructUsages,
        Feature::MemoryOps,
        Feature::ArrayWrites,
        Feature::TypedPointers,
        Feature::PointerArith,
        Feature::PointerCalls,
        Feature::ArrayReads,
        Feature::GlobalMutableVars,
        Feature::VoidPointers,
        Feature::GlobalConstVars,
        Feature::ArraysInstantiated,
        Feature::Conditionals,
        Feature::Loops,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Feature::StructUsages => "struct_usages",
            Feature::MemoryOps => "memory_ops",
            Feature::ArrayWrites => "array_writes",
            Feature::TypedPointers => "typed_pointers",
            Feature::PointerArith => "pointer_arith",
            Feature::PointerCalls => "pointer_calls",
            Feature::ArrayReads => "array_reads",
            Feature::GlobalMutableVars => "global_mutable_vars",
            Feature::VoidPointers => "void_pointers",
            Feature::GlobalConstVars => "global_const_vars",
            Feature::ArraysInstantiated => "arrays_instantiated",
            Feature::Conditionals => "conditionals",
            Feature::Loops => "loops",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureFlags(pub BTreeMap<Feature, bool>);

impl FeatureFlags {
    pub fn get(&self, f: Feature) -> bool {
        self.0.get(&f).copied().unwrap_or(false)
    }
}

pub fn feature_flags(s: &StaticMetrics) -> FeatureFlags {
    FeatureFlags(Feature::ALL.iter().map(|&f| (f, s.counter(f) > 0)).collect())
}

const MEMORY_FUNCTIONS: &[&str] = &["malloc", "calloc", "realloc", "free", "memset", "memcpy", "memmove"];
const ASSIGN_OPS: &[&str] = &["=", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<<=", ">>="];

pub fn count_lines(source: &str) -> u64 {
    let n = source.bytes().filter(|&b| b == b'\n').count() as u64;
    n + u64::from(!source.is_empty() && !source.ends_with('\n'))
}

/// Computes the static counters of a C translation unit.
pub fn analyze_c(source: &str) -> Result<StaticMetrics, MetricsError> {
    let tu = TranslationUnit::scan(source)?;
    let toks = &tu.tokens;
    let mut m = StaticMetrics {
        lines_of_code: count_lines(source),
        struct_usages: toks.iter().filter(|t| t.is_ident() && t.text == "struct").count() as u64,
        ..Default::default()
    };

    let mut typedefs: HashSet<&str> = STANDARD_TYPEDEFS.iter().copied().collect();
    let mut globals = Scope::default();
    let mut global_exprs = Vec::new();
    for item in &tu.items {
        if let TopItem::Declaration { tokens } = item {
            let mut end = tokens.end;
            while end > tokens.start && toks[end - 1].is(";") {
                end -= 1;
            }
            let decl = &toks[tokens.start..end];
            declaration(decl, tokens.start, &mut typedefs, &mut globals, &mut m, true, &mut global_exprs);
        }
    }
    let no_locals = Scope::default();
    scan_expressions(toks, &global_exprs, &no_locals, &globals, &mut m);

    for (_, _, params, body) in tu.functions() {
        let mut locals = Scope::default();
        // parameters are visible names but not instantiations
        for p in split_declarators(&toks[params.start + 1..params.end - 1]) {
            let (se, sp) = split_specifiers_with(p, &|w| typedefs.contains(w));
            if let Some(d) = classify_declarator(&p[se..], &sp) {
                match d.kind {
                    DeclaratorKind::Pointer | DeclaratorKind::Array => {
                        locals.pointers.insert(d.name.to_string());
                    }
                    _ => {}
                }
            }
        }
        let mut walker = Walker { toks, typedefs: &mut typedefs, scope: &mut locals, m: &mut m, exprs: Vec::new() };
        walker.block(body.start + 1, body.end - 1, 0);
        let fn_exprs = std::mem::take(&mut walker.exprs);
        scan_expressions(toks, &fn_exprs, &locals, &globals, &mut m);
    }
    Ok(m)
}

/// Names visible while scanning expressions.
#[derive(Default)]
struct Scope {
    /// Declared with `*` (variables and parameters).
    pointers: HashSet<String>,
    /// Declared as arrays.
    arrays: HashSet<String>,
}

/// Records one declaration. `base` is the index of `decl[0]` in the full
/// token list, so initializer ranges can be reported in global indices.
fn declaration<'a>(
    decl: &[Token<'a>],
    base: usize,
    typedefs: &mut HashSet<&'a str>,
    scope: &mut Scope,
    m: &mut StaticMetrics,
    global: bool,
    exprs: &mut Vec<std::ops::Range<usize>>,
) {
    if decl.is_empty() {
        return;
    }
    let (spec_end, sp) = split_specifiers_with(decl, &|w| typedefs.contains(w));
    if sp.is_typedef {
        for d in split_declarators(&decl[spec_end..]) {
            if let Some(c) = classify_declarator(d, &sp) {
                typedefs.insert(c.name);
            }
        }
        return;
    }
    let mut offset = spec_end;
    for d in split_declarators(&decl[spec_end..]) {
        let d_start = base + offset;
        offset += d.len() + 1;
        let Some(c) = classify_declarator(d, &sp) else { continue };
        if let Some(init) = c.init_start {
            exprs.push(d_start + init..d_start + d.len());
        }
        if sp.is_extern {
            continue;
        }
        match c.kind {
            DeclaratorKind::Function => continue,
            DeclaratorKind::Array => {
                m.arrays_instantiated += 1;
                scope.arrays.insert(c.name.to_string());
            }
            DeclaratorKind::Pointer => {
                if sp.is_void {
                    m.void_pointers_instantiated += 1;
                } else {
                    m.typed_pointers_instantiated += 1;
                }
                scope.pointers.insert(c.name.to_string());
            }
            DeclaratorKind::Object => {}
        }
        if global {
            if c.is_const {
                m.global_const_vars += 1;
            } else {
                m.global_mutable_vars += 1;
            }
        }
    }
}

struct Walker<'w, 'a> {
    toks: &'w [Token<'a>],
    typedefs: &'w mut HashSet<&'a str>,
    scope: &'w mut Scope,
    m: &'w mut StaticMetrics,
    /// Token ranges holding expressions.
    exprs: Vec<std::ops::Range<usize>>,
}

impl Walker<'_, '_> {
    fn at(&self, i: usize, s: &str) -> bool {
        self.toks.get(i).is_some_and(|t| t.is(s))
    }

    fn close_of(&self, open: usize, limit: usize) -> usize {
        clex::matching_close(self.toks, open).unwrap_or(limit.saturating_sub(1)).min(limit.saturating_sub(1))
    }

    fn block(&mut self, mut i: usize, end: usize, level: u64) {
        while i < end {
            let next = self.statement(i, end, level);
            i = next.max(i + 1);
        }
    }

    fn enter(&mut self, level: u64) -> u64 {
        let l = level + 1;
        self.m.nesting_depth = self.m.nesting_depth.max(l);
        l
    }

    /// Parses `( expr )` at `i`, recording the expression; returns the index
    /// after the closing paren.
    fn condition(&mut self, i: usize, end: usize) -> usize {
        if !self.at(i, "(") {
            return i;
        }
        let c = self.close_of(i, end);
        self.exprs.push(i + 1..c);
        c + 1
    }

    fn statement(&mut self, i: usize, end: usize, level: u64) -> usize {
        if i >= end {
            return end;
        }
        let t = &self.toks[i];
        if t.kind == TokenKind::Punct {
            return match t.text {
                "{" => {
                    let c = self.close_of(i, end);
                    self.block(i + 1, c, level);
                    c + 1
                }
                ";" => i + 1,
                _ => self.expression_statement(i, end),
            };
        }
        if t.kind != TokenKind::Ident {
            return self.expression_statement(i, end);
        }
        match t.text {
            "if" => {
                self.m.conditionals += 1;
                let l = self.enter(level);
                let j = self.condition(i + 1, end);
                let j = self.statement(j, end, l);
                if self.at(j, "else") {
                    if self.at(j + 1, "if") {
                        return self.statement(j + 1, end, level);
                    }
                    return self.statement(j + 1, end, l);
                }
                j
            }
            "switch" | "while" | "for" => {
                if t.text == "switch" {
                    self.m.conditionals += 1;
                } else {
                    self.m.loops += 1;
                }
                let l = self.enter(level);
                let j = if t.text == "for" { self.for_header(i + 1, end) } else { self.condition(i + 1, end) };
                self.statement(j, end, l)
            }
            "do" => {
                self.m.loops += 1;
                let l = self.enter(level);
                let j = self.statement(i + 1, end, l);
                if self.at(j, "while") {
                    let k = self.condition(j + 1, end);
                    return if self.at(k, ";") { k + 1 } else { k };
                }
                j
            }
            "case" => {
                let mut j = i + 1;
                while j < end && !self.at(j, ":") {
                    j += 1;
                }
                self.exprs.push(i + 1..j);
                j + 1
            }
            "default" if self.at(i + 1, ":") => i + 2,
            "else" => self.statement(i + 1, end, level),
            _ if !is_keyword(t.text) && self.at(i + 1, ":") => i + 2,
            _ if self.is_declaration_start(i) => {
                let semi = self.find_semicolon(i, end);
                let mut exprs = std::mem::take(&mut self.exprs);
                declaration(&self.toks[i..semi], i, self.typedefs, self.scope, self.m, false, &mut exprs);
                self.exprs = exprs;
                semi + 1
            }
            _ => self.expression_statement(i, end),
        }
    }

    fn for_header(&mut self, i: usize, end: usize) -> usize {
        if !self.at(i, "(") {
            return i;
        }
        let c = self.close_of(i, end);
        let mut clause_start = i + 1;
        let mut clause = 0;
        let mut j = i + 1;
        let mut depth = 0i32;
        while j <= c {
            let tk = &self.toks[j];
            let boundary = j == c || (depth == 0 && tk.is(";"));
            if tk.kind == TokenKind::Punct && !boundary {
                match tk.text {
                    "(" | "[" | "{" => depth += 1,
                    ")" | "]" | "}" => depth -= 1,
                    _ => {}
                }
            }
            if boundary {
                if clause == 0 && clause_start < j && self.is_declaration_start(clause_start) {
                    let mut exprs = std::mem::take(&mut self.exprs);
                    declaration(&self.toks[clause_start..j], clause_start, self.typedefs, self.scope, self.m, false, &mut exprs);
                    self.exprs = exprs;
                } else {
                    self.exprs.push(clause_start..j);
                }
                clause += 1;
                clause_start = j + 1;
            }
            j += 1;
        }
        c + 1
    }

    fn find_semicolon(&self, i: usize, end: usize) -> usize {
        let mut depth = 0i32;
        for j in i..end {
            let t = &self.toks[j];
            if t.kind != TokenKind::Punct {
                continue;
            }
            match t.text {
                "(" | "[" | "{" => depth += 1,
                ")" | "]" | "}" => depth -= 1,
                ";" if depth <= 0 => return j,
                _ => {}
            }
        }
        end
    }

    fn expression_statement(&mut self, i: usize, end: usize) -> usize {
        let semi = self.find_semicolon(i, end);
        self.exprs.push(i..semi);
        semi + 1
    }

    fn is_declaration_start(&self, i: usize) -> bool {
        let t = &self.toks[i];
        if !t.is_ident() {
            return false;
        }
        let next = self.toks.get(i + 1);
        match t.text {
            "struct" | "union" | "enum" | "typedef" | "static" | "extern" | "const" | "volatile" | "register" | "auto"
            | "signed" | "unsigned" | "short" | "long" | "int" | "char" | "float" | "double" | "void" | "_Bool" | "inline"
            | "_Thread_local" | "_Atomic" | "__extension__" | "restrict" | "_Complex" => true,
            w if is_keyword(w) => false,
            w => {
                if next.is_some_and(|n| n.is("(") || n.is("=") || n.is(":")) {
                    return false;
                }
                self.typedefs.contains(w) || next.is_some_and(|n| n.is_ident() && !is_keyword(n.text))
            }
        }
    }
}

fn is_operand_end(t: &Token<'_>) -> bool {
    match t.kind {
        TokenKind::Ident => !is_keyword(t.text) || t.text == "sizeof",
        TokenKind::Number | TokenKind::Str | TokenKind::Char => true,
        TokenKind::Punct => matches!(t.text, ")" | "]"),
    }
}

fn scan_expressions(toks: &[Token<'_>], ranges: &[std::ops::Range<usize>], local: &Scope, global: &Scope, m: &mut StaticMetrics) {
    let is_ptr = |name: &str| local.pointers.contains(name) || global.pointers.contains(name);
    let is_ptr_or_array = |name: &str| is_ptr(name) || local.arrays.contains(name) || global.arrays.contains(name);
    let ptr_ident = |k: usize| toks.get(k).is_some_and(|t| t.is_ident() && !is_keyword(t.text) && is_ptr(t.text));
    let tok = |k: usize| toks.get(k).map_or("", |t| t.text);
    let mut chained: HashSet<usize> = HashSet::new();

    for r in ranges {
        let end = r.end.min(toks.len());
        for k in r.start..end {
            let t = &toks[k];
            let prev = if k > r.start { Some(&toks[k - 1]) } else { None };

            // calls
            if t.is("(") {
                let Some(close) = clex::matching_close(toks, k) else { continue };
                let (is_call, through_pointer) = match prev {
                    Some(p) if p.is_ident() && !is_keyword(p.text) => {
                        if MEMORY_FUNCTIONS.contains(&p.text) && !matches!(tok(k.wrapping_sub(2)), "." | "->") {
                            m.memory_ops += 1;
                        }
                        let member = k >= 2 && matches!(tok(k - 2), "." | "->");
                        (true, !member && is_ptr(p.text))
                    }
                    Some(p) if p.is("]") => (true, true),
                    Some(p) if p.is(")") => {
                        let open = crate::csource::matching_open(toks, k - 1);
                        let deref = open.is_some_and(|o| tok(o + 1) == "*");
                        (deref, deref)
                    }
                    _ => (false, false),
                };
                if is_call {
                    let args = split_declarators(&toks[k + 1..close]);
                    let pointer_arg = args.iter().any(|a| match a {
                        [one] => one.is_ident() && is_ptr_or_array(one.text),
                        [first, ..] => first.is("&"),
                        [] => false,
                    });
                    if through_pointer || pointer_arg {
                        m.pointer_calls += 1;
                    }
                }
                continue;
            }

            // subscript chains
            if t.is("[") && !chained.contains(&k) {
                let starts_chain = prev.is_some_and(|p| (p.is_ident() && !is_keyword(p.text)) || p.is(")"));
                if !starts_chain {
                    continue;
                }
                let mut pos = k;
                loop {
                    if tok(pos) == "[" {
                        chained.insert(pos);
                        match clex::matching_close(toks, pos) {
                            Some(c) => pos = c + 1,
                            None => break,
                        }
                    } else if matches!(tok(pos), "." | "->") && toks.get(pos + 1).is_some_and(Token::is_ident) {
                        pos += 2;
                    } else {
                        break;
                    }
                }
                if ASSIGN_OPS.contains(&tok(pos)) {
                    m.array_writes += 1;
                } else {
                    m.array_reads += 1;
                }
                continue;
            }

            // pointer arithmetic
            if t.kind != TokenKind::Punct {
                continue;
            }
            let not_member_or_deref = |j: usize| j == 0 || !matches!(tok(j - 1), "." | "->" | "*" | "&");
            let not_member = |j: usize| j == 0 || !matches!(tok(j - 1), "." | "->");
            let plain_after = |j: usize| !matches!(tok(j + 1), "[" | "(" | "." | "->");
            match t.text {
                "+" | "-" if prev.is_some_and(is_operand_end) => {
                    let left = ptr_ident(k - 1) && not_member_or_deref(k - 1);
                    let right = ptr_ident(k + 1) && plain_after(k + 1);
                    if left || right {
                        m.pointer_arith_ops += 1;
                    }
                }
                "+=" | "-=" => {
                    if k > 0 && ptr_ident(k - 1) && not_member_or_deref(k - 1) {
                        m.pointer_arith_ops += 1;
                    }
                }
                "++" | "--" => {
                    let postfix = prev.is_some_and(is_operand_end);
                    let hit =
                        if postfix { ptr_ident(k - 1) && not_member(k - 1) } else { ptr_ident(k + 1) && plain_after(k + 1) };
                    if hit {
                        m.pointer_arith_ops += 1;
                    }
                }
                _ => {}
            }
        }
    }
}

#[derive(Debug, Error)]
pub enum DynamicError {
    #[error("execution exceeded {timeout_s:.1}s")]
    Timeout { timeout_s: f64, partial: DynamicMetrics },
    #[error("execution exited with status {exit_code}")]
    NonzeroExit { exit_code: i32, partial: DynamicMetrics },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Runs `executable` three times on `stdin`: median wall clock, mean peak
/// memory and mean CPU utilization.
pub fn measure_dynamic(executable: &Path, stdin: &[u8], timeout: Duration) -> Result<DynamicMetrics, DynamicError> {
    measure_dynamic_runs(executable, stdin, timeout, 3)
}

pub fn measure_dynamic_runs(
    executable: &Path,
    stdin: &[u8],
    timeout: Duration,
    runs: usize,
) -> Result<DynamicMetrics, DynamicError> {
    let exec_size_bytes = std::fs::metadata(executable)?.len();
    let mut walls = Vec::new();
    let mut mems = Vec::new();
    let mut utils = Vec::new();
    let mut degraded = false;
    for _ in 0..runs.max(1) {
        let out = process::run(Command::new(executable), stdin, timeout)?;
        let wall = out.wall.as_secs_f64();
        let cpu = (out.user + out.sys).as_secs_f64();
        let metrics = DynamicMetrics {
            wall_clock_s: wall,
            peak_mem_bytes: out.max_rss_bytes.unwrap_or(0),
            cpu_util_pct: if wall > 0.0 { 100.0 * cpu / wall } else { 0.0 },
            exec_size_bytes,
            degraded: out.max_rss_bytes.is_none(),
        };
        if out.timed_out {
            return Err(DynamicError::Timeout { timeout_s: timeout.as_secs_f64(), partial: metrics });
        }
        if out.exit_code != Some(0) {
            return Err(DynamicError::NonzeroExit { exit_code: out.code_or_signal(), partial: metrics });
        }
        walls.push(wall);
        mems.push(metrics.peak_mem_bytes as f64);
        utils.push(metrics.cpu_util_pct);
        degraded |= metrics.degraded;
    }
    walls.sort_by(f64::total_cmp);
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    Ok(DynamicMetrics {
        wall_clock_s: walls[walls.len() / 2],
        peak_mem_bytes: mean(&mems).round() as u64,
        cpu_util_pct: mean(&utils),
        exec_size_bytes,
        degraded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_unit_counts_only_lines() {
        let m = analyze_c("/* nothing */\n\n").unwrap();
        assert_eq!(m, StaticMetrics { lines_of_code: 2, ..Default::default() });
        assert_eq!(analyze_c("").unwrap(), StaticMetrics::default());
    }

    #[test]
    fn memory_ops_fixture() {
        let src = "#include <stdlib.h>\n#include <string.h>\nint main(void){ char *p = malloc(8); memset(p, 0, 8); free(p); return 0; }\n";
        assert_eq!(analyze_c(src).unwrap().memory_ops, 3);
    }

    #[test]
    fn do_while_counts_once() {
        let m = analyze_c("int main(void){ int i = 0; do { i++; } while (i < 3); while (i) i--; return 0; }").unwrap();
        assert_eq!(m.loops, 2);
        assert_eq!(m.nesting_depth, 1);
    }

    #[test]
    fn else_if_chain_is_flat() {
        let m =
            analyze_c("int f(int x){ if (x) return 1; else if (x > 2) return 2; else if (x > 3) return 3; return 0; }").unwrap();
        assert_eq!((m.conditionals, m.nesting_depth), (3, 1));
        let m = analyze_c("int f(int x){ if (x) { if (x > 2) return 2; } return 0; }").unwrap();
        assert_eq!((m.conditionals, m.nesting_depth), (2, 2));
    }

    #[test]
    fn reads_writes_and_compound_assignment() {
        let m = analyze_c("int a[4]; int b[4]; void f(void){ a[b[0]] = 1; a[1] += a[2]; b[3]++; }").unwrap();
        assert_eq!((m.array_writes, m.array_reads), (2, 3));
    }

    #[test]
    fn unbalanced_is_error() {
        assert!(matches!(analyze_c("int f(){"), Err(MetricsError::UnbalancedBraces { .. })));
    }

    #[test]
    fn comments_and_strings_do_not_count() {
        let m =
            analyze_c("// for while if struct\nint main(void){ const char *s = \"for(;;){ struct }\"; return s[0]; }").unwrap();
        assert_eq!((m.loops, m.conditionals, m.struct_usages), (0, 0, 0));
        assert_eq!(m.array_reads, 1);
    }

    #[test]
    fn flags_follow_counters() {
        let m = StaticMetrics { struct_usages: 2, ..Default::default() };
        let f = feature_flags(&m);
        assert!(f.get(Feature::StructUsages));
        assert!(!f.get(Feature::MemoryOps));
        assert!(feature_flags(&StaticMetrics::default()).0.values().all(|v| !v));
    }

    #[test]
    fn vectors_by_schema() {
        let z = StaticMetrics::default();
        let d = DynamicMetrics::default();
        let v = feature_vector(&z, &d, SCHEMA_STATIC13_DYN4).unwrap();
        assert_eq!(v.values, vec![0.0; 17]);
        assert_eq!(feature_vector(&z, &d, SCHEMA_STATIC13).unwrap().values.len(), 13);
        assert_eq!(feature_vector(&z, &d, SCHEMA_FINE15_DYN4).unwrap().values.len(), 19);
        assert_eq!(feature_vector(&z, &d, "nope"), Err(MetricsError::UnknownSchema("nope".into())));
        let m = StaticMetrics {
            typed_pointers_instantiated: 2,
            void_pointers_instantiated: 1,
            pointer_calls: 4,
            pointer_arith_ops: 5,
            ..z
        };
        let v = feature_vector(&m, &d, SCHEMA_STATIC13).unwrap();
        assert_eq!((v.values[10], v.values[11]), (3.0, 9.0));
    }

    #[test]
    fn by_name_lookup() {
        let m = StaticMetrics { loops: 4, ..Default::default() };
        assert_eq!(m.by_name("loops"), Some(4));
        assert_eq!(m.by_name("nope"), None);
    }
}
