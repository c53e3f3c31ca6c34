//! Heuristic extraction of function-definition names from C and C++ files.
//!
//! The scanner blanks out comments, string and character literals and
//! preprocessor lines, then reports every identifier that is directly
//! followed by a parenthesised list at nesting depth zero whose closing `)`
//! is followed by `{`. Control-flow keywords are excluded. This is not a
//! parser: K&R-style definitions and definitions produced by macros are
//! missed.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct HarvestedName {
    pub name: String,
    pub file: PathBuf,
    pub line: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct HarvestReport {
    pub names: Vec<HarvestedName>,
    /// Files that could not be read, with the reason.
    pub skipped: Vec<(PathBuf, String)>,
}

impl HarvestReport {
    /// Writes `name,file,line` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["name", "file", "line"])?;
        for n in &self.names {
            w.write_record([n.name.as_str(), &n.file.display().to_string(), &n.line.to_string()])?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}

const NOT_FUNCTIONS: &[&str] = &[
    "if",
    "while",
    "for",
    "switch",
    "catch",
    "return",
    "sizeof",
    "alignof",
    "typeof",
    "decltype",
    "do",
    "else",
    "case",
    "defined",
    "__attribute__",
    "__declspec",
    "static_assert",
    "_Static_assert",
    "noexcept",
    "throw",
    "new",
    "delete",
    "operator",
    "asm",
    "__asm__",
];

/// Qualifiers allowed between `)` and `{` in C++ member functions.
const TRAILING_QUALIFIERS: &[&str] = &["const", "noexcept", "override", "final", "volatile"];

pub const SOURCE_EXTENSIONS: &[&str] = &["c", "h", "cc", "cpp", "cxx", "hpp", "hh", "hxx", "c++", "h++"];

/// Scans the given files in sorted order. Unreadable files are skipped and
/// listed in the report.
pub fn harvest(paths: &[PathBuf]) -> HarvestReport {
    let mut files: Vec<&PathBuf> = paths.iter().collect();
    files.sort();
    files.dedup();

    let mut report = HarvestReport::default();
    for path in files {
        match read_source(path) {
            Ok(text) => report.names.extend(harvest_source(&text, path)),
            Err(e) => {
                log::warn!("skipping {}: {e}", path.display());
                report.skipped.push((path.clone(), e.to_string()));
            }
        }
    }
    report
        .names
        .sort_by(|a, b| (&a.file, a.line, &a.name).cmp(&(&b.file, b.line, &b.name)));
    report
}

fn read_source(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    // Source files are not always valid UTF-8; identifiers are ASCII so a
    // lossy decode is enough.
    Ok(String::from_utf8_lossy(&bytes).into_owned())
}

/// Extracts definition names from one file's text.
pub fn harvest_source(text: &str, file: &Path) -> Vec<HarvestedName> {
    let code = strip(text);
    let tokens = tokenize(&code);
    let mut names = Vec::new();

    let mut depth = 0usize;
    for (i, token) in tokens.iter().enumerate() {
        match &token.tok {
            Tok::Punct('(') => depth += 1,
            Tok::Punct(')') => depth = depth.saturating_sub(1),
            Tok::Punct('{') | Tok::Punct('}') => depth = 0,
            Tok::Ident(name) if depth == 0 => {
                if NOT_FUNCTIONS.contains(&name.as_str())
                    || !matches!(tokens.get(i + 1).map(|t| &t.tok), Some(Tok::Punct('(')))
                {
                    continue;
                }
                let Some(close) = matching_paren(&tokens, i + 1) else {
                    continue;
                };
                let mut j = close + 1;
                while let Some(Tok::Ident(q)) = tokens.get(j).map(|t| &t.tok) {
                    if !TRAILING_QUALIFIERS.contains(&q.as_str()) {
                        break;
                    }
                    j += 1;
                }
                if matches!(tokens.get(j).map(|t| &t.tok), Some(Tok::Punct('{'))) {
                    names.push(HarvestedName {
                        name: name.clone(),
                        file: file.to_path_buf(),
                        line: token.line,
                    });
                }
            }
            _ => {}
        }
    }
    names
}

fn matching_paren(tokens: &[Token], open: usize) -> Option<usize> {
    let mut depth = 0usize;
    for (k, t) in tokens.iter().enumerate().skip(open) {
        match t.tok {
            Tok::Punct('(') => depth += 1,
            Tok::Punct(')') => {
                depth -= 1;
                if depth == 0 {
                    return Some(k);
                }
            }
            // a brace before the closing paren means unbalanced input
            Tok::Punct('{') | Tok::Punct('}') => return None,
            _ => {}
        }
    }
    None
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Punct(char),
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
}

fn tokenize(code: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    let mut line = 1;
    let mut chars = code.char_indices().peekable();
    while let Some((start, c)) = chars.next() {
        if c == '\n' {
            line += 1;
        } else if c.is_ascii_alphabetic() || c == '_' {
            let mut end = start + c.len_utf8();
            while let Some(&(k, n)) = chars.peek() {
                if n.is_ascii_alphanumeric() || n == '_' {
                    end = k + n.len_utf8();
                    chars.next();
                } else {
                    break;
                }
            }
            tokens.push(Token {
                tok: Tok::Ident(code[start..end].to_string()),
                line,
            });
        } else if c.is_ascii_digit() {
            // numbers, including suffixes like 10UL or 0x1F
            while let Some(&(_, n)) = chars.peek() {
                if n.is_ascii_alphanumeric() || n == '.' || n == '_' {
                    chars.next();
                } else {
                    break;
                }
            }
        } else if !c.is_whitespace() {
            tokens.push(Token {
                tok: Tok::Punct(c),
                line,
            });
        }
    }
    tokens
}

/// Replaces comments, literals and preprocessor directives with spaces,
/// keeping newlines so line numbers survive.
fn strip(text: &str) -> String {
    #[derive(PartialEq)]
    enum State {
        Code,
        LineComment,
        BlockComment,
        Str,
        Char,
        Preproc,
    }
    let mut out = String::with_capacity(text.len());
    let mut state = State::Code;
    let mut at_line_start = true;
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        match state {
            State::Code => match c {
                '/' if chars.peek() == Some(&'/') => {
                    chars.next();
                    out.push_str("  ");
                    state = State::LineComment;
                }
                '/' if chars.peek() == Some(&'*') => {
                    chars.next();
                    out.push_str("  ");
                    state = State::BlockComment;
                }
                '"' => {
                    out.push(' ');
                    state = State::Str;
                }
                '\'' => {
                    out.push(' ');
                    state = State::Char;
                }
                '#' if at_line_start => {
                    out.push(' ');
                    state = State::Preproc;
                }
                _ => out.push(c),
            },
            State::LineComment => {
                if c == '\n' {
                    out.push('\n');
                    state = State::Code;
                } else {
                    out.push(' ');
                }
            }
            State::BlockComment => {
                if c == '*' && chars.peek() == Some(&'/') {
                    chars.next();
                    out.push_str("  ");
                    state = State::Code;
                } else {
                    out.push(if c == '\n' { '\n' } else { ' ' });
                }
            }
            State::Str | State::Char => {
                let quote = if state == State::Str { '"' } else { '\'' };
                if c == '\\' {
                    if let Some(n) = chars.next() {
                        out.push(' ');
                        out.push(if n == '\n' { '\n' } else { ' ' });
                        continue;
                    }
                } else if c == quote || c == '\n' {
                    state = State::Code;
                }
                out.push(if c == '\n' { '\n' } else { ' ' });
            }
            State::Preproc => {
                if c == '\\' && chars.peek() == Some(&'\n') {
                    chars.next();
                    out.push_str(" \n");
                } else if c == '\n' {
                    out.push('\n');
                    state = State::Code;
                } else if c == '/' && chars.peek() == Some(&'*') {
                    chars.next();
                    out.push_str("  ");
                    state = State::BlockComment;
                } else {
                    out.push(' ');
                }
            }
        }
        if c == '\n' {
            at_line_start = true;
        } else if !c.is_whitespace() {
            at_line_start = false;
        }
    }
    out
}

/// Expands directories into the C/C++ files beneath them (by extension);
/// plain file paths are kept as given.
pub fn collect_sources(paths: &[PathBuf]) -> Vec<PathBuf> {
    let mut out = Vec::new();
    for p in paths {
        if p.is_dir() {
            visit_dir(p, &mut out);
        } else {
            out.push(p.clone());
        }
    }
    out.sort();
    out.dedup();
    out
}

fn visit_dir(dir: &Path, out: &mut Vec<PathBuf>) {
    let Ok(entries) = fs::read_dir(dir) else {
        log::warn!("cannot read directory {}", dir.display());
        return;
    };
    for entry in entries.flatten() {
        let path = entry.path();
        if path.is_dir() {
            visit_dir(&path, out);
        } else if path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| SOURCE_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()))
        {
            out.push(path);
        }
    }
}
