//! Function-level splitting of GIMPLE dumps, LLVM IR modules and C sources,
//! and alignment of the three into `{C, GIMPLE, LLVM}` triplets.
//!
//! Parsing is line- and brace-level only. String literals and `;` comments
//! (LLVM) are skipped while balancing braces; no IR grammar is involved.

use crate::csource::{ScanError, TopItem, TranslationUnit};
use regex::Regex;
use serde::{Deserialize, Serialize};
use std::collections::{HashMap, HashSet};
use std::sync::OnceLock;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IrParseError {
    #[error("unbalanced braces at byte offset {offset}")]
    UnbalancedBraces { offset: usize },
    #[error("empty GIMPLE dump")]
    EmptyDump,
    #[error("empty LLVM module")]
    EmptyModule,
    #[error("symbol `{name}` appears twice in the {side} functions")]
    DuplicateSymbol { name: String, side: Side },
}

impl From<ScanError> for IrParseError {
    fn from(e: ScanError) -> Self {
        match e {
            ScanError::UnbalancedBraces { offset } => IrParseError::UnbalancedBraces { offset },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    C,
    Gimple,
    Llvm,
}

impl std::fmt::Display for Side {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Side::C => "C",
            Side::Gimple => "GIMPLE",
            Side::Llvm => "LLVM",
        })
    }
}

/// One function body from a GIMPLE dump.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GimpleFunction {
    pub name: String,
    pub header: String,
    /// `{ ... }`, verbatim.
    pub body: String,
    /// Span of `body` in the dump.
    pub byte_span: (usize, usize),
    /// Offset of the header line; the function text is `header_start..byte_span.1`.
    pub header_start: usize,
}

impl GimpleFunction {
    pub fn text<'a>(&self, dump: &'a str) -> &'a str {
        &dump[self.header_start..self.byte_span.1]
    }
}

/// One `define` from an LLVM module.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LlvmFunction {
    /// Without the leading `@`.
    pub symbol: String,
    /// From `define` up to (not including) the opening brace of the body.
    pub define_header: String,
    /// `{ ... }`, verbatim.
    pub body: String,
    pub byte_span: (usize, usize),
    /// Offset of `define`; the function text is `define_start..byte_span.1`.
    pub define_start: usize,
    /// Module text between the previous function (or the prelude) and this
    /// one: attribute comments, globals, declarations.
    pub leading: String,
}

impl LlvmFunction {
    /// `define ... { ... }` as it appears in the module.
    pub fn text(&self) -> String {
        let sep = if self.define_header.ends_with(char::is_whitespace) { "" } else { " " };
        format!("{}{}{}", self.define_header, sep, self.body)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LlvmModulePrelude {
    /// Everything before the first `define` (the whole module when there is none).
    pub header_text: String,
    /// Everything after the closing brace of the last function.
    pub trailer_text: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LlvmModule {
    pub prelude: LlvmModulePrelude,
    pub functions: Vec<LlvmFunction>,
    source: String,
}

impl LlvmModule {
    /// Prelude, each function's leading text and body, then the trailer.
    /// Reproduces the parsed module exactly.
    pub fn reassemble(&self) -> String {
        let mut s = self.prelude.header_text.clone();
        for f in &self.functions {
            s.push_str(&f.leading);
            s.push_str(&self.source[f.define_start..f.byte_span.1]);
        }
        s.push_str(&self.prelude.trailer_text);
        s
    }

    /// A standalone module holding only `symbol`'s definition plus the
    /// prelude, inter-function text and trailer (declarations, globals,
    /// attributes, metadata).
    pub fn module_for(&self, symbol: &str) -> Option<String> {
        if !self.functions.iter().any(|f| f.symbol == symbol) {
            return None;
        }
        let mut s = self.prelude.header_text.clone();
        for f in &self.functions {
            s.push_str(&f.leading);
            if f.symbol == symbol {
                s.push_str(&self.source[f.define_start..f.byte_span.1]);
            }
        }
        s.push_str(&self.prelude.trailer_text);
        Some(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CFunction {
    pub name: String,
    pub text: String,
    pub byte_span: (usize, usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnparsedDefinition {
    pub name: String,
    pub byte_span: (usize, usize),
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CFunctionScan {
    pub functions: Vec<CFunction>,
    /// Definitions the scanner recognized but does not extract (K&R style).
    pub unparsed: Vec<UnparsedDefinition>,
}

impl CFunctionScan {
    pub fn pairs(&self) -> Vec<(String, String)> {
        self.functions.iter().map(|f| (f.name.clone(), f.text.clone())).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FunctionTriplet {
    pub c_function: String,
    pub gimple_function: GimpleFunction,
    pub llvm_function: LlvmFunction,
    pub origin: String,
}

/// A symbol that did not make it into a triplet.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Unmatched {
    pub name: String,
    pub missing_from: Vec<Side>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Alignment {
    pub triplets: Vec<FunctionTriplet>,
    pub unmatched: Vec<Unmatched>,
    /// Compiler-generated clones (`foo.constprop.0`) left out of alignment.
    pub clones_excluded: Vec<String>,
}

fn is_ident_byte(b: u8) -> bool {
    b.is_ascii_alphanumeric() || b == b'_' || b == b'.' || b == b'$'
}

/// Splits a GIMPLE dump into its top-level function bodies.
pub fn parse_gimple_dump(dump: &str) -> Result<Vec<GimpleFunction>, IrParseError> {
    if dump.trim().is_empty() {
        return Err(IrParseError::EmptyDump);
    }
    let bytes = dump.as_bytes();
    let mut out = Vec::new();
    let mut pos = 0;
    let mut prev_line: Option<(usize, usize)> = None;
    while pos < bytes.len() {
        let line_end = dump[pos..].find('\n').map_or(bytes.len(), |o| pos + o);
        let line = dump[pos..line_end].trim_end();
        if line == "{" {
            let Some((hs, he)) = prev_line else {
                return Err(IrParseError::UnbalancedBraces { offset: pos });
            };
            let close = balance(bytes, pos, BraceSyntax::Gimple).ok_or(IrParseError::UnbalancedBraces { offset: pos })?;
            let header = dump[hs..he].trim_end().to_string();
            out.push(GimpleFunction {
                name: gimple_name(&header),
                header,
                body: dump[pos..close + 1].to_string(),
                byte_span: (pos, close + 1),
                header_start: hs,
            });
            pos = dump[close..].find('\n').map_or(bytes.len(), |o| close + o + 1);
            prev_line = None;
            continue;
        }
        if line.starts_with('}') {
            return Err(IrParseError::UnbalancedBraces { offset: pos });
        }
        if !line.is_empty() && !line.starts_with(";;") && !line.starts_with(char::is_whitespace) {
            prev_line = Some((pos, line_end));
        } else if !line.is_empty() {
            prev_line = None;
        }
        pos = line_end + 1;
    }
    Ok(out)
}

fn gimple_name(header: &str) -> String {
    let b = header.as_bytes();
    // the name precedes the parameter list that closes the header
    if let Some(close) = header.rfind(')') {
        let mut depth = 0i32;
        let mut open = None;
        for j in (0..=close).rev() {
            match b[j] {
                b')' => depth += 1,
                b'(' => {
                    depth -= 1;
                    if depth == 0 {
                        open = Some(j);
                        break;
                    }
                }
                _ => {}
            }
        }
        if let Some(o) = open {
            let end = header[..o].trim_end().len();
            let start = header[..end].bytes().rposition(|c| !is_ident_byte(c)).map_or(0, |p| p + 1);
            if start < end {
                return header[start..end].to_string();
            }
        }
    }
    // `int (*f (int)) (int)` and other unusual headers: first `name (`
    let re = ident_call_re();
    re.captures(header).map_or_else(|| header.to_string(), |c| c[1].to_string())
}

fn ident_call_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"([A-Za-z_][\w.$]*)\s*\(").expect("valid regex"))
}

#[derive(Clone, Copy)]
enum BraceSyntax {
    Gimple,
    Llvm,
}

/// Index of the brace closing the one at `open`, skipping string literals
/// (and `;` line comments in LLVM IR).
fn balance(bytes: &[u8], open: usize, syntax: BraceSyntax) -> Option<usize> {
    let mut depth = 0usize;
    let mut i = open;
    while i < bytes.len() {
        match bytes[i] {
            b'"' => {
                i += 1;
                while i < bytes.len() && bytes[i] != b'"' {
                    if bytes[i] == b'\\' && matches!(syntax, BraceSyntax::Gimple) {
                        i += 1;
                    }
                    i += 1;
                }
            }
            b'\'' if matches!(syntax, BraceSyntax::Gimple) => {
                // character constants: 'x', '\n', '{'
                let mut j = i + 1;
                if bytes.get(j) == Some(&b'\\') {
                    j += 1;
                }
                if bytes.get(j + 1) == Some(&b'\'') {
                    i = j + 1;
                }
            }
            b';' if matches!(syntax, BraceSyntax::Llvm) => {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
            }
            b'{' => depth += 1,
            b'}' => {
                depth = depth.checked_sub(1)?;
                if depth == 0 {
                    return Some(i);
                }
            }
            _ => {}
        }
        i += 1;
    }
    None
}

/// Splits a textual LLVM module into prelude, functions and trailer.
pub fn parse_llvm_module(module: &str) -> Result<LlvmModule, IrParseError> {
    if module.trim().is_empty() {
        return Err(IrParseError::EmptyModule);
    }
    let bytes = module.as_bytes();
    let mut functions = Vec::new();
    let mut pos = 0;
    let mut last_end = None;
    while pos < bytes.len() {
        let line_end = module[pos..].find('\n').map_or(bytes.len(), |o| pos + o);
        if is_define_line(&module[pos..line_end]) {
            let open = find_body_open(bytes, pos).ok_or(IrParseError::UnbalancedBraces { offset: pos })?;
            let close = balance(bytes, open, BraceSyntax::Llvm).ok_or(IrParseError::UnbalancedBraces { offset: open })?;
            let define_header = module[pos..open].to_string();
            let leading = match last_end {
                Some(e) => module[e..pos].to_string(),
                None => String::new(),
            };
            functions.push(LlvmFunction {
                symbol: llvm_symbol(&define_header),
                define_header: define_header.trim_end().to_string(),
                body: module[open..close + 1].to_string(),
                byte_span: (open, close + 1),
                define_start: pos,
                leading,
            });
            last_end = Some(close + 1);
            pos = module[close..].find('\n').map_or(bytes.len(), |o| close + o + 1);
            continue;
        }
        pos = line_end + 1;
    }
    let first = functions.first().map_or(module.len(), |f| f.define_start);
    let prelude = LlvmModulePrelude {
        header_text: module[..first].to_string(),
        trailer_text: last_end.map_or_else(String::new, |e| module[e..].to_string()),
    };
    Ok(LlvmModule { prelude, functions, source: module.to_string() })
}

fn is_define_line(line: &str) -> bool {
    line.strip_prefix("define").is_some_and(|r| r.starts_with(char::is_whitespace))
}

fn find_body_open(bytes: &[u8], from: usize) -> Option<usize> {
    let mut i = from;
    while i < bytes.len() {
        match bytes[i] {
            b'"' => {
                i += 1;
                while i < bytes.len() && bytes[i] != b'"' {
                    i += 1;
                }
            }
            b';' => {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
            }
            b'{' => return Some(i),
            _ => {}
        }
        i += 1;
    }
    None
}

fn llvm_symbol(header: &str) -> String {
    let Some(at) = header.find('@') else { return String::new() };
    let rest = &header[at + 1..];
    if let Some(q) = rest.strip_prefix('"') {
        return q.split('"').next().unwrap_or_default().to_string();
    }
    rest.split(|c: char| c == '(' || c.is_whitespace()).next().unwrap_or_default().to_string()
}

/// Top-level ANSI function definitions of a C source, in source order.
pub fn extract_c_functions(c_source: &str) -> Result<CFunctionScan, IrParseError> {
    let tu = TranslationUnit::scan(c_source)?;
    let mut scan = CFunctionScan::default();
    for item in &tu.items {
        match item {
            TopItem::Function { name, tokens, .. } => {
                let span = (tu.tokens[tokens.start].span.start, tu.tokens[tokens.end - 1].span.end);
                scan.functions.push(CFunction { name: name.clone(), text: tu.text(tokens).to_string(), byte_span: span });
            }
            TopItem::KnrFunction { name, tokens } => {
                let span = (tu.tokens[tokens.start].span.start, tu.tokens[tokens.end - 1].span.end);
                scan.unparsed.push(UnparsedDefinition {
                    name: name.clone(),
                    byte_span: span,
                    reason: "K&R-style definition".into(),
                });
            }
            TopItem::Declaration { .. } => {}
        }
    }
    Ok(scan)
}

/// Strips one leading underscore (platform symbol prefix).
pub fn normalize_symbol(name: &str) -> &str {
    name.strip_prefix('_').unwrap_or(name)
}

fn clone_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^[A-Za-z_]\w*\.\w+(\.\d+)?$").expect("valid regex"))
}

/// True for compiler-generated clone names such as `foo.constprop.0` or
/// `bar.part.1`.
pub fn is_clone_name(name: &str) -> bool {
    clone_re().is_match(name)
}

/// Builds triplets for symbols present (after underscore normalization) in
/// all three lists. Order follows `c_fns`.
pub fn align_functions(
    gimple_fns: &[GimpleFunction],
    llvm_fns: &[LlvmFunction],
    c_fns: &[(String, String)],
    origin: &str,
) -> Result<Alignment, IrParseError> {
    let mut clones = Vec::new();
    let index = |names: Vec<&str>, side: Side, clones: &mut Vec<String>| -> Result<HashMap<String, usize>, IrParseError> {
        let mut m = HashMap::new();
        for (i, n) in names.into_iter().enumerate() {
            if side != Side::C && is_clone_name(n) {
                log::debug!("excluding compiler clone {n} from alignment");
                clones.push(n.to_string());
                continue;
            }
            let key = normalize_symbol(n).to_string();
            if m.insert(key.clone(), i).is_some() {
                return Err(IrParseError::DuplicateSymbol { name: key, side });
            }
        }
        Ok(m)
    };
    let g = index(gimple_fns.iter().map(|f| f.name.as_str()).collect(), Side::Gimple, &mut clones)?;
    let l = index(llvm_fns.iter().map(|f| f.symbol.as_str()).collect(), Side::Llvm, &mut clones)?;
    let c = index(c_fns.iter().map(|(n, _)| n.as_str()).collect(), Side::C, &mut clones)?;

    let mut out = Alignment { clones_excluded: clones, ..Default::default() };
    let mut seen = HashSet::new();
    let mut order: Vec<&str> = c_fns.iter().map(|(n, _)| normalize_symbol(n)).collect();
    order.extend(gimple_fns.iter().map(|f| normalize_symbol(&f.name)).filter(|n| !is_clone_name(n)));
    order.extend(llvm_fns.iter().map(|f| normalize_symbol(&f.symbol)).filter(|n| !is_clone_name(n)));
    for name in order {
        if !seen.insert(name) {
            continue;
        }
        match (c.get(name), g.get(name), l.get(name)) {
            (Some(&ci), Some(&gi), Some(&li)) => out.triplets.push(FunctionTriplet {
                c_function: c_fns[ci].1.clone(),
                gimple_function: gimple_fns[gi].clone(),
                llvm_function: llvm_fns[li].clone(),
                origin: origin.to_string(),
            }),
            (ci, gi, li) => {
                let missing_from = [(Side::C, ci.is_some()), (Side::Gimple, gi.is_some()), (Side::Llvm, li.is_some())]
                    .into_iter()
                    .filter(|(_, present)| !present)
                    .map(|(s, _)| s)
                    .collect();
                out.unmatched.push(Unmatched { name: name.to_string(), missing_from });
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const ADD_MAIN_GIMPLE: &str = "int add (int a, int b)\n{\n  int D.1950;\n\n  D.1950 = a + b;\n  return D.1950;\n}\n\n\nint main ()\n{\n  int D.1952;\n\n  {\n    int x;\n\n    x = add (2, 3);\n    D.1952 = x;\n    return D.1952;\n  }\n  D.1952 = 0;\n  return D.1952;\n}\n\n\n";

    const ADD_MAIN_LL: &str = "; ModuleID = 'input.c'\nsource_filename = \"input.c\"\n\n; Function Attrs: noinline\ndefine dso_local i32 @add(i32 noundef %0, i32 noundef %1) #0 {\n  %3 = add nsw i32 %0, %1\n  ret i32 %3\n}\n\n; Function Attrs: noinline\ndefine dso_local i32 @main() #0 {\n  %1 = call i32 @add(i32 noundef 2, i32 noundef 3)\n  ret i32 %1\n}\n\nattributes #0 = { noinline }\n";

    #[test]
    fn gimple_two_functions_with_nested_block() {
        let fns = parse_gimple_dump(ADD_MAIN_GIMPLE).unwrap();
        let names: Vec<_> = fns.iter().map(|f| f.name.as_str()).collect();
        assert_eq!(names, ["add", "main"]);
        assert!(fns[1].body.contains("{\n    int x;"));
        for f in &fns {
            assert_eq!(&ADD_MAIN_GIMPLE[f.byte_span.0..f.byte_span.1], f.body);
        }
        assert_eq!(
            fns[0].text(ADD_MAIN_GIMPLE),
            "int add (int a, int b)\n{\n  int D.1950;\n\n  D.1950 = a + b;\n  return D.1950;\n}"
        );
    }

    #[test]
    fn gimple_edge_cases() {
        assert_eq!(parse_gimple_dump(""), Err(IrParseError::EmptyDump));
        assert_eq!(parse_gimple_dump("int g = 3;\n").unwrap(), vec![]);
        let braces_in_strings = "void f ()\n{\n  s = \"}}\";\n  c = '}';\n}\n";
        assert_eq!(parse_gimple_dump(braces_in_strings).unwrap().len(), 1);
        let unclosed = "int f ()\n{\n  {\n}\n";
        assert_eq!(parse_gimple_dump(unclosed), Err(IrParseError::UnbalancedBraces { offset: 9 }));
        assert_eq!(parse_gimple_dump("}\n"), Err(IrParseError::UnbalancedBraces { offset: 0 }));
    }

    #[test]
    fn gimple_names_from_headers() {
        assert_eq!(gimple_name("int add (int a, int b)"), "add");
        assert_eq!(gimple_name("struct node * mk (int v)"), "mk");
        assert_eq!(gimple_name("int foo.constprop.0 (int x)"), "foo.constprop.0");
        assert_eq!(gimple_name("void f ()"), "f");
    }

    #[test]
    fn llvm_module_split_and_reassembly() {
        let m = parse_llvm_module(ADD_MAIN_LL).unwrap();
        let syms: Vec<_> = m.functions.iter().map(|f| f.symbol.as_str()).collect();
        assert_eq!(syms, ["add", "main"]);
        assert!(m.functions[0].define_header.starts_with("define dso_local i32 @add("));
        assert!(m.prelude.header_text.ends_with("; Function Attrs: noinline\n"));
        assert_eq!(m.prelude.trailer_text, "\n\nattributes #0 = { noinline }\n");
        assert_eq!(m.reassemble(), ADD_MAIN_LL);
        let only_add = m.module_for("add").unwrap();
        assert!(!only_add.contains("@main()"));
        assert!(only_add.contains("attributes #0"));
    }

    #[test]
    fn llvm_declares_only() {
        let m = parse_llvm_module("declare i32 @puts(ptr)\n").unwrap();
        assert!(m.functions.is_empty());
        assert_eq!(m.prelude.header_text, "declare i32 @puts(ptr)\n");
        assert_eq!(parse_llvm_module("  \n"), Err(IrParseError::EmptyModule));
    }

    #[test]
    fn llvm_quoted_symbols_and_string_braces() {
        let ll = "@.str = private constant [2 x i8] c\"}\\00\"\ndefine void @\"odd name\"() {\n  ; } comment\n  ret void\n}\n";
        let m = parse_llvm_module(ll).unwrap();
        assert_eq!(m.functions[0].symbol, "odd name");
        assert_eq!(m.reassemble(), ll);
        assert!(matches!(parse_llvm_module("define void @f() {\n  ret void\n"), Err(IrParseError::UnbalancedBraces { .. })));
    }

    #[test]
    fn c_functions_skip_literals() {
        let src = "int add(int a, int b) {\n  return a + b;\n}\n\nint main() {\n  const char *s = \"{\";\n  int x = add(2, 3);\n  return x;\n}\n";
        let scan = extract_c_functions(src).unwrap();
        assert_eq!(scan.pairs()[0], ("add".into(), "int add(int a, int b) {\n  return a + b;\n}".into()));
        assert_eq!(scan.functions[1].name, "main");
        assert!(scan.functions[1].text.ends_with("return x;\n}"));
        let f = &scan.functions[1];
        assert_eq!(&src[f.byte_span.0..f.byte_span.1], f.text);
    }

    #[test]
    fn c_knr_is_reported() {
        let scan = extract_c_functions("int old(a, b)\nint a; int b;\n{ return a + b; }\nint new(void) { return 0; }\n").unwrap();
        assert_eq!(scan.functions.len(), 1);
        assert_eq!(scan.unparsed[0].name, "old");
        assert_eq!(scan.unparsed[0].reason, "K&R-style definition");
    }

    #[test]
    fn align_all_present() {
        let g = parse_gimple_dump(ADD_MAIN_GIMPLE).unwrap();
        let m = parse_llvm_module(ADD_MAIN_LL).unwrap();
        let c = vec![("add".to_string(), "int add...".to_string()), ("main".to_string(), "int main...".to_string())];
        let a = align_functions(&g, &m.functions, &c, "local-x").unwrap();
        assert_eq!(a.triplets.len(), 2);
        assert!(a.unmatched.is_empty());
        assert_eq!(a.triplets[1].llvm_function.symbol, "main");
        assert!(align_functions(&[], &[], &[], "o").unwrap().triplets.is_empty());
    }

    #[test]
    fn align_excludes_clones() {
        let gimple = "int foo.constprop.0 (int x)\n{\n  return x;\n}\n";
        let g = parse_gimple_dump(gimple).unwrap();
        let m = parse_llvm_module("define i32 @foo(i32 %0) {\n  ret i32 %0\n}\n").unwrap();
        let c = vec![("foo".to_string(), "int foo(int x){return x;}".to_string())];
        let a = align_functions(&g, &m.functions, &c, "o").unwrap();
        assert!(a.triplets.is_empty());
        assert_eq!(a.clones_excluded, ["foo.constprop.0"]);
        assert_eq!(a.unmatched, [Unmatched { name: "foo".into(), missing_from: vec![Side::Gimple] }]);
    }

    #[test]
    fn align_underscore_and_duplicates() {
        let m = parse_llvm_module("define i32 @_f() {\n  ret i32 0\n}\n").unwrap();
        let g = parse_gimple_dump("int f ()\n{\n  return 0;\n}\n").unwrap();
        let c = vec![("f".to_string(), "int f(){return 0;}".to_string())];
        assert_eq!(align_functions(&g, &m.functions, &c, "o").unwrap().triplets.len(), 1);
        let dup = vec![c[0].clone(), c[0].clone()];
        assert_eq!(
            align_functions(&g, &m.functions, &dup, "o"),
            Err(IrParseError::DuplicateSymbol { name: "f".into(), side: Side::C })
        );
    }
}
