//! Top-level structure of a C translation unit: function definitions and
//! file-scope declarations, located by brace/paren balancing over the token
//! stream from [`crate::clex`].

use crate::clex::{self, is_keyword, Token, TokenKind};
use std::ops::Range;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScanError {
    #[error("unbalanced braces at byte offset {offset}")]
    UnbalancedBraces { offset: usize },
}

/// A file-scope item, as token index ranges into the scanned token list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TopItem {
    /// ANSI function definition. `params` spans the parenthesized parameter
    /// list (inclusive); `body` spans the braces (inclusive).
    Function { name: String, tokens: Range<usize>, params: Range<usize>, body: Range<usize> },
    /// Old-style definition with a parameter declaration list.
    KnrFunction { name: String, tokens: Range<usize> },
    /// Anything terminated by `;` at file scope.
    Declaration { tokens: Range<usize> },
}

pub struct TranslationUnit<'a> {
    pub src: &'a str,
    pub tokens: Vec<Token<'a>>,
    pub items: Vec<TopItem>,
}

impl<'a> TranslationUnit<'a> {
    pub fn scan(src: &'a str) -> Result<Self, ScanError> {
        let tokens = clex::tokenize(src);
        let items = scan_items(&tokens)?;
        Ok(Self { src, tokens, items })
    }

    /// Source text covered by a token range.
    pub fn text(&self, r: &Range<usize>) -> &'a str {
        if r.is_empty() {
            return "";
        }
        &self.src[self.tokens[r.start].span.start..self.tokens[r.end - 1].span.end]
    }

    pub fn functions(&self) -> impl Iterator<Item = (&str, &Range<usize>, &Range<usize>, &Range<usize>)> {
        self.items.iter().filter_map(|it| match it {
            TopItem::Function { name, tokens, params, body } => Some((name.as_str(), tokens, params, body)),
            _ => None,
        })
    }
}

fn scan_items(tokens: &[Token<'_>]) -> Result<Vec<TopItem>, ScanError> {
    let mut items = Vec::new();
    let mut start = 0;
    let mut i = 0;
    while i < tokens.len() {
        let t = &tokens[i];
        if t.kind != TokenKind::Punct {
            i += 1;
            continue;
        }
        match t.text {
            ";" if is_knr_head(&tokens[start..i]) => i += 1,
            ";" => {
                if i > start {
                    items.push(TopItem::Declaration { tokens: start..i + 1 });
                }
                start = i + 1;
                i += 1;
            }
            "(" | "[" => {
                i = clex::matching_close(tokens, i).map_or(i + 1, |c| c + 1);
            }
            "{" => {
                let close = clex::matching_close(tokens, i).ok_or(ScanError::UnbalancedBraces { offset: t.span.start })?;
                match classify_brace(tokens, start, i) {
                    Brace::Function { name, params } => {
                        items.push(TopItem::Function { name, tokens: start..close + 1, params, body: i..close + 1 });
                        start = close + 1;
                    }
                    Brace::Knr { name } => {
                        items.push(TopItem::KnrFunction { name, tokens: start..close + 1 });
                        start = close + 1;
                    }
                    Brace::Other => {}
                }
                i = close + 1;
            }
            "}" => return Err(ScanError::UnbalancedBraces { offset: t.span.start }),
            _ => i += 1,
        }
    }
    if start < tokens.len() {
        // trailing tokens without a terminator; keep them visible as a declaration
        items.push(TopItem::Declaration { tokens: start..tokens.len() });
    }
    Ok(items)
}

/// `int f(a, b) int a` so far: an identifier list followed by parameter
/// declarations, so the coming `;` does not end the item.
fn is_knr_head(item: &[Token<'_>]) -> bool {
    let Some(open) =
        item.iter().enumerate().position(|(j, t)| t.is("(") && j > 0 && item[j - 1].is_ident() && !is_keyword(item[j - 1].text))
    else {
        return false;
    };
    let Some(close) = clex::matching_close(item, open) else { return false };
    let inner = &item[open + 1..close];
    !inner.is_empty() && inner.iter().all(|t| (t.is_ident() && !is_keyword(t.text)) || t.is(",")) && close + 1 < item.len()
}

enum Brace {
    Function { name: String, params: Range<usize> },
    Knr { name: String },
    Other,
}

fn classify_brace(tokens: &[Token<'_>], start: usize, open: usize) -> Brace {
    if open == start {
        return Brace::Other;
    }
    let mut prev = open - 1;
    // skip trailing attributes and asm labels: `__attribute__((..))`, `__asm__("..")`
    loop {
        if !tokens[prev].is(")") || prev <= start {
            break;
        }
        let Some(o) = matching_open(tokens, prev) else { return Brace::Other };
        if o > start && matches!(tokens[o - 1].text, "__attribute__" | "__asm__" | "asm" | "__asm") {
            if o - 1 == start {
                return Brace::Other;
            }
            prev = o - 2;
        } else {
            break;
        }
    }
    let t = &tokens[prev];
    if t.is(")") {
        let Some(o) = matching_open(tokens, prev) else { return Brace::Other };
        if o <= start {
            return Brace::Other;
        }
        let before = &tokens[o - 1];
        if before.is_ident() && !is_keyword(before.text) {
            return Brace::Function { name: before.text.to_string(), params: o..prev + 1 };
        }
        if before.is(")") {
            // function returning a function pointer: `int (*f(int x))(int) {`
            if let Some(oo) = matching_open(tokens, o - 1) {
                for j in (oo + 1..o - 1).rev() {
                    if tokens[j].is_ident() && !is_keyword(tokens[j].text) && tokens[j + 1].is("(") {
                        let close = clex::matching_close(tokens, j + 1).unwrap_or(o - 2);
                        return Brace::Function { name: tokens[j].text.to_string(), params: j + 1..close + 1 };
                    }
                }
            }
        }
        return Brace::Other;
    }
    if t.is(";") {
        // `int f(a, b) int a; int b; {`: the first `(` group follows the name
        let mut j = start;
        while j < open {
            if tokens[j].is("(") && j > start && tokens[j - 1].is_ident() && !is_keyword(tokens[j - 1].text) {
                return Brace::Knr { name: tokens[j - 1].text.to_string() };
            }
            j += 1;
        }
    }
    Brace::Other
}

pub fn matching_open(tokens: &[Token<'_>], close: usize) -> Option<usize> {
    let (o, c) = match tokens[close].text {
        ")" => ("(", ")"),
        "]" => ("[", "]"),
        "}" => ("{", "}"),
        _ => return None,
    };
    let mut depth = 0usize;
    for j in (0..=close).rev() {
        let t = &tokens[j];
        if t.kind != TokenKind::Punct {
            continue;
        }
        if t.text == c {
            depth += 1;
        } else if t.text == o {
            depth -= 1;
            if depth == 0 {
                return Some(j);
            }
        }
    }
    None
}

/// Joins tokens with canonical spacing: `int add(int a, int b)`,
/// `char *s`, `int (*fp)(int)`.
pub fn render_tokens(tokens: &[Token<'_>]) -> String {
    let mut out = String::new();
    for (k, t) in tokens.iter().enumerate() {
        if k > 0 {
            let p = &tokens[k - 1];
            let no_space = matches!(t.text, "," | ")" | "]" | ";" | "[")
                || matches!(p.text, "(" | "[")
                || (p.is("*") && !matches!(t.text, "("))
                || (t.is("(") && (p.is_ident() && !is_keyword(p.text) || p.is(")")));
            let no_space = no_space && !(t.is("[") && p.is(","));
            if !no_space {
                out.push(' ');
            }
        }
        out.push_str(t.text);
    }
    out
}

const SPECIFIER_KEYWORDS: &[&str] = &[
    "auto",
    "char",
    "const",
    "double",
    "extern",
    "float",
    "inline",
    "int",
    "long",
    "register",
    "restrict",
    "short",
    "signed",
    "static",
    "typedef",
    "unsigned",
    "void",
    "volatile",
    "_Bool",
    "_Complex",
    "_Atomic",
    "_Thread_local",
    "_Noreturn",
    "__inline",
    "__inline__",
    "__restrict",
    "__restrict__",
    "__extension__",
    "__const",
    "__volatile__",
    "__signed__",
];

const BASE_TYPE_KEYWORDS: &[&str] =
    &["char", "double", "float", "int", "long", "short", "signed", "unsigned", "void", "_Bool", "_Complex", "__signed__"];

/// Typedef names every hosted C program may use without declaring them.
pub const STANDARD_TYPEDEFS: &[&str] = &[
    "size_t",
    "ssize_t",
    "ptrdiff_t",
    "intptr_t",
    "uintptr_t",
    "wchar_t",
    "FILE",
    "bool",
    "int8_t",
    "int16_t",
    "int32_t",
    "int64_t",
    "uint8_t",
    "uint16_t",
    "uint32_t",
    "uint64_t",
    "intmax_t",
    "uintmax_t",
    "off_t",
    "time_t",
    "clock_t",
    "va_list",
    "jmp_buf",
    "fpos_t",
    "div_t",
    "ldiv_t",
    "lldiv_t",
    "pid_t",
    "__int128",
    "int_fast32_t",
    "uint_fast32_t",
    "int_least32_t",
    "uint_least32_t",
    "int_fast64_t",
    "uint_fast64_t",
];

/// What the declaration specifiers of a declaration said.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Specifiers {
    pub is_typedef: bool,
    pub is_extern: bool,
    pub is_static: bool,
    pub is_const: bool,
    /// The base type is exactly `void` (qualifiers aside).
    pub is_void: bool,
    pub has_type: bool,
}

/// Splits a declaration into specifiers and the declarator list. Returns the
/// index of the first declarator token. An identifier is taken as a type
/// name when no type has been seen yet and it is followed by another
/// identifier, a `*`, or the end of the specifiers.
pub fn split_specifiers(toks: &[Token<'_>]) -> (usize, Specifiers) {
    split_specifiers_with(toks, &|_| false)
}

pub fn split_specifiers_with(toks: &[Token<'_>], is_typedef_name: &dyn Fn(&str) -> bool) -> (usize, Specifiers) {
    let mut sp = Specifiers::default();
    let mut base_words = Vec::new();
    let mut i = 0;
    while i < toks.len() {
        let t = &toks[i];
        if !t.is_ident() {
            break;
        }
        match t.text {
            "typedef" => sp.is_typedef = true,
            "extern" => sp.is_extern = true,
            "static" => sp.is_static = true,
            "const" | "__const" => sp.is_const = true,
            "struct" | "union" | "enum" => {
                sp.has_type = true;
                base_words.push(t.text);
                i += 1;
                if toks.get(i).is_some_and(|t| t.is_ident() && !is_keyword(t.text)) {
                    i += 1;
                }
                if toks.get(i).is_some_and(|t| t.is("{")) {
                    i = clex::matching_close(toks, i).map_or(toks.len(), |c| c + 1);
                }
                continue;
            }
            "__attribute__" | "_Alignas" | "__typeof__" | "typeof" => {
                if toks.get(i + 1).is_some_and(|t| t.is("(")) {
                    i = clex::matching_close(toks, i + 1).map_or(toks.len(), |c| c + 1);
                    if t.text != "__attribute__" && t.text != "_Alignas" {
                        sp.has_type = true;
                        base_words.push("typeof");
                    }
                    continue;
                }
            }
            w if BASE_TYPE_KEYWORDS.contains(&w) => {
                sp.has_type = true;
                base_words.push(w);
            }
            w if SPECIFIER_KEYWORDS.contains(&w) => {}
            w if !is_keyword(w) && !sp.has_type => {
                let next = toks.get(i + 1);
                let looks_like_type = is_typedef_name(w)
                    || STANDARD_TYPEDEFS.contains(&w)
                    || next.is_some_and(|n| (n.is_ident() && !matches!(n.text, "__attribute__")) || n.is("*"));
                if !looks_like_type {
                    break;
                }
                sp.has_type = true;
                base_words.push("typedef-name");
            }
            _ => break,
        }
        i += 1;
    }
    sp.is_void = base_words == ["void"];
    (i, sp)
}

/// Splits a declarator list at top-level commas.
pub fn split_declarators<'t, 'a>(toks: &'t [Token<'a>]) -> Vec<&'t [Token<'a>]> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, t) in toks.iter().enumerate() {
        if t.kind != TokenKind::Punct {
            continue;
        }
        match t.text {
            "(" | "[" | "{" => depth += 1,
            ")" | "]" | "}" => depth -= 1,
            "," if depth == 0 => {
                out.push(&toks[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    if start < toks.len() {
        out.push(&toks[start..]);
    }
    out
}

fn declarator_name_index(d: &[Token<'_>]) -> Option<usize> {
    d.iter().take_while(|t| !t.is("=") && !t.is("[")).position(|t| t.is_ident() && !is_keyword(t.text))
}

pub fn declarator_name<'a>(d: &[Token<'a>]) -> Option<&'a str> {
    declarator_name_index(d).map(|i| d[i].text)
}

/// `f(int)` or `*f(void)`: the name is directly followed by a parameter list.
pub fn declarator_is_function(d: &[Token<'_>]) -> bool {
    declarator_name_index(d).is_some_and(|i| d.get(i + 1).is_some_and(|t| t.is("(")))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeclaratorKind {
    Object,
    Array,
    Pointer,
    Function,
}

/// One declared name with its shape.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Declared<'a> {
    pub name: &'a str,
    pub kind: DeclaratorKind,
    pub is_const: bool,
    /// Token offset of the initializer (after `=`) within the declarator.
    pub init_start: Option<usize>,
}

/// Classifies a declarator. An array declarator wins over a pointer one
/// (`*a[4]` is an array); a function-pointer declarator is a pointer.
pub fn classify_declarator<'a>(d: &[Token<'a>], specs: &Specifiers) -> Option<Declared<'a>> {
    let ni = declarator_name_index(d)?;
    let init_start = d.iter().position(|t| t.is("=")).map(|p| p + 1);
    let after = d.get(ni + 1);
    let stars: Vec<usize> = (0..ni).filter(|&j| d[j].is("*")).collect();
    let kind = if after.is_some_and(|t| t.is("[")) {
        DeclaratorKind::Array
    } else if after.is_some_and(|t| t.is("(")) {
        DeclaratorKind::Function
    } else if !stars.is_empty() {
        DeclaratorKind::Pointer
    } else {
        DeclaratorKind::Object
    };
    let is_const = match stars.last() {
        Some(&s) if kind != DeclaratorKind::Function => d[s + 1..ni].iter().any(|t| t.text == "const"),
        _ => specs.is_const,
    };
    Some(Declared { name: d[ni].text, kind, is_const, init_start })
}
