//! A small C tokenizer.
//!
//! Comments and preprocessor lines are dropped; string and character
//! literals become single tokens so that braces inside them never reach
//! the brace scanners built on top of this module.

use std::ops::Range;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenKind {
    Ident,
    Number,
    Str,
    Char,
    Punct,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token<'a> {
    pub kind: TokenKind,
    pub text: &'a str,
    pub span: Range<usize>,
}

impl Token<'_> {
    pub fn is(&self, s: &str) -> bool {
        self.text == s && matches!(self.kind, TokenKind::Punct | TokenKind::Ident)
    }

    pub fn is_ident(&self) -> bool {
        self.kind == TokenKind::Ident
    }
}

const PUNCTS: &[&str] = &[
    ">>=", "<<=", "...", "->", "++", "--", "<<", ">>", "<=", ">=", "==", "!=", "&&", "||", "*=", "/=", "%=", "+=", "-=", "&=",
    "^=", "|=", "##",
];

pub const KEYWORDS: &[&str] = &[
    "auto",
    "break",
    "case",
    "char",
    "const",
    "continue",
    "default",
    "do",
    "double",
    "else",
    "enum",
    "extern",
    "float",
    "for",
    "goto",
    "if",
    "inline",
    "int",
    "long",
    "register",
    "restrict",
    "return",
    "short",
    "signed",
    "sizeof",
    "static",
    "struct",
    "switch",
    "typedef",
    "union",
    "unsigned",
    "void",
    "volatile",
    "while",
    "_Bool",
    "_Complex",
    "_Atomic",
    "_Thread_local",
    "_Noreturn",
    "_Alignas",
    "_Alignof",
    "_Static_assert",
    "__inline",
    "__inline__",
    "__restrict",
    "__restrict__",
    "__attribute__",
    "__extension__",
    "asm",
    "__asm__",
];

pub fn is_keyword(s: &str) -> bool {
    KEYWORDS.contains(&s)
}

/// Tokenizes `src`. Never fails: unterminated literals and comments run to
/// the end of their line (literals) or of the input (block comments).
pub fn tokenize(src: &str) -> Vec<Token<'_>> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    // true while only whitespace has been seen since the last newline
    let mut line_start = true;
    while i < bytes.len() {
        let c = bytes[i];
        if c == b'\n' {
            line_start = true;
            i += 1;
            continue;
        }
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        if c == b'#' && line_start {
            i = skip_preprocessor_line(bytes, i);
            continue;
        }
        line_start = false;
        if c == b'/' && bytes.get(i + 1) == Some(&b'/') {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        if c == b'/' && bytes.get(i + 1) == Some(&b'*') {
            i = match src[i + 2..].find("*/") {
                Some(off) => i + 2 + off + 2,
                None => bytes.len(),
            };
            continue;
        }
        if c == b'"' || c == b'\'' {
            let end = skip_literal(bytes, i);
            let kind = if c == b'"' { TokenKind::Str } else { TokenKind::Char };
            out.push(Token { kind, text: &src[i..end], span: i..end });
            i = end;
            continue;
        }
        if c.is_ascii_alphabetic() || c == b'_' || c >= 0x80 {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_' || bytes[i] >= 0x80) {
                i += 1;
            }
            let word = &src[start..i];
            if matches!(word, "L" | "u" | "U" | "u8") && i < bytes.len() && (bytes[i] == b'"' || bytes[i] == b'\'') {
                let end = skip_literal(bytes, i);
                let kind = if bytes[i] == b'"' { TokenKind::Str } else { TokenKind::Char };
                out.push(Token { kind, text: &src[start..end], span: start..end });
                i = end;
                continue;
            }
            out.push(Token { kind: TokenKind::Ident, text: word, span: start..i });
            continue;
        }
        if c.is_ascii_digit() || (c == b'.' && bytes.get(i + 1).is_some_and(u8::is_ascii_digit)) {
            let start = i;
            i += 1;
            while i < bytes.len() {
                let d = bytes[i];
                let exponent_sign = (d == b'+' || d == b'-') && matches!(bytes[i - 1], b'e' | b'E' | b'p' | b'P');
                if d.is_ascii_alphanumeric() || d == b'_' || d == b'.' || exponent_sign {
                    i += 1;
                } else {
                    break;
                }
            }
            out.push(Token { kind: TokenKind::Number, text: &src[start..i], span: start..i });
            continue;
        }
        let rest = &src[i..];
        let len = PUNCTS
            .iter()
            .find(|p| rest.starts_with(**p))
            .map_or_else(|| rest.chars().next().map_or(1, char::len_utf8), |p| p.len());
        out.push(Token { kind: TokenKind::Punct, text: &src[i..i + len], span: i..i + len });
        i += len;
    }
    out
}

fn skip_preprocessor_line(bytes: &[u8], mut i: usize) -> usize {
    while i < bytes.len() {
        match bytes[i] {
            b'\\' if bytes.get(i + 1) == Some(&b'\n') => i += 2,
            b'\\' if bytes.get(i + 1) == Some(&b'\r') && bytes.get(i + 2) == Some(&b'\n') => i += 3,
            b'\n' => return i,
            b'/' if bytes.get(i + 1) == Some(&b'*') => {
                // a block comment may carry the directive across lines
                let mut j = i + 2;
                while j + 1 < bytes.len() && !(bytes[j] == b'*' && bytes[j + 1] == b'/') {
                    j += 1;
                }
                i = (j + 2).min(bytes.len());
            }
            _ => i += 1,
        }
    }
    i
}

fn skip_literal(bytes: &[u8], start: usize) -> usize {
    let quote = bytes[start];
    let mut i = start + 1;
    while i < bytes.len() {
        match bytes[i] {
            b'\\' => i += 2,
            b'\n' => return i,
            b if b == quote => return i + 1,
            _ => i += 1,
        }
    }
    bytes.len()
}

/// Index of the token closing the bracket opened at `open`, if balanced.
pub fn matching_close(tokens: &[Token<'_>], open: usize) -> Option<usize> {
    let (o, c) = match tokens[open].text {
        "(" => ("(", ")"),
        "[" => ("[", "]"),
        "{" => ("{", "}"),
        _ => return None,
    };
    let mut depth = 0usize;
    for (j, t) in tokens.iter().enumerate().skip(open) {
        if t.kind != TokenKind::Punct {
            continue;
        }
        if t.text == o {
            depth += 1;
        } else if t.text == c {
            depth -= 1;
            if depth == 0 {
                return Some(j);
            }
        }
    }
    None
}

/// Source text with comments removed and every whitespace run collapsed to a
/// single space. String literals are kept verbatim. Preprocessor lines are
/// retained (unlike [`tokenize`]) because they change program meaning.
pub fn normalize_for_dedup(src: &str) -> String {
    let bytes = src.as_bytes();
    let mut out = String::with_capacity(src.len());
    let mut i = 0;
    let mut pending_space = false;
    let push = |out: &mut String, pending: &mut bool, s: &str| {
        if *pending && !out.is_empty() {
            out.push(' ');
        }
        *pending = false;
        out.push_str(s);
    };
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            pending_space = true;
            i += 1;
        } else if c == b'/' && bytes.get(i + 1) == Some(&b'/') {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            pending_space = true;
        } else if c == b'/' && bytes.get(i + 1) == Some(&b'*') {
            i = match src[i + 2..].find("*/") {
                Some(off) => i + 2 + off + 2,
                None => bytes.len(),
            };
            pending_space = true;
        } else if c == b'"' || c == b'\'' {
            let end = skip_literal(bytes, i);
            push(&mut out, &mut pending_space, &src[i..end]);
            i = end;
        } else {
            let ch_len = src[i..].chars().next().map_or(1, char::len_utf8);
            push(&mut out, &mut pending_space, &src[i..i + ch_len]);
            i += ch_len;
        }
    }
    out
}
