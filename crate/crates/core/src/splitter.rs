//! Conservative identifier splitting.
//!
//! A name is cut only at explicit boundaries:
//!
//! * every underscore (the underscore itself is dropped),
//! * a lowercase ASCII letter followed by an uppercase ASCII letter,
//! * an ASCII letter next to an ASCII digit, in either order.
//!
//! Nothing else is a boundary, so compound lowercase words (`readwrite`,
//! `maxstrlen`) and uppercase runs followed by a capitalised word
//! (`LZWDecode`, `LOADSparse`) stay whole. Case is preserved unless
//! [`SplitOptions::fold_case`] is set. Characters outside ASCII letters and
//! digits never start or end a term on their own.

use std::collections::BTreeSet;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SplitOptions {
    /// Lowercase every term after splitting.
    pub fold_case: bool,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Class {
    Lower,
    Upper,
    Digit,
    Other,
}

fn class_of(c: char) -> Class {
    if c.is_ascii_lowercase() {
        Class::Lower
    } else if c.is_ascii_uppercase() {
        Class::Upper
    } else if c.is_ascii_digit() {
        Class::Digit
    } else {
        Class::Other
    }
}

fn is_boundary(prev: Class, next: Class) -> bool {
    use Class::*;
    matches!(
        (prev, next),
        (Lower, Upper) | (Lower | Upper, Digit) | (Digit, Lower | Upper)
    )
}

/// Splits `identifier` into its terms, in order.
///
/// ```
/// assert_eq!(favd::split("png_push_read_chunk"), ["png", "push", "read", "chunk"]);
/// assert_eq!(favd::split("LZWDecode"), ["LZWDecode"]);
/// assert_eq!(favd::split("h264"), ["h", "264"]);
/// ```
pub fn split(identifier: &str) -> Vec<String> {
    split_with(identifier, SplitOptions::default())
}

pub fn split_with(identifier: &str, options: SplitOptions) -> Vec<String> {
    let mut terms = Vec::new();
    let mut current = String::new();
    let mut prev: Option<Class> = None;

    for c in identifier.chars() {
        if c == '_' {
            flush(&mut current, &mut terms, options);
            prev = None;
            continue;
        }
        let class = class_of(c);
        if let Some(p) = prev {
            if is_boundary(p, class) {
                flush(&mut current, &mut terms, options);
            }
        }
        current.push(c);
        prev = Some(class);
    }
    flush(&mut current, &mut terms, options);
    terms
}

fn flush(current: &mut String, terms: &mut Vec<String>, options: SplitOptions) {
    if current.is_empty() {
        return;
    }
    let term = std::mem::take(current);
    terms.push(if options.fold_case { term.to_lowercase() } else { term });
}

/// The distinct terms of one identifier.
pub fn identifier_terms(identifier: &str, options: SplitOptions) -> BTreeSet<String> {
    split_with(identifier, options).into_iter().collect()
}

/// Union of the terms of every identifier.
pub fn unique_terms<'a, I>(identifiers: I, options: SplitOptions) -> BTreeSet<String>
where
    I: IntoIterator<Item = &'a String>,
{
    identifiers.into_iter().flat_map(|id| split_with(id, options)).collect()
}
