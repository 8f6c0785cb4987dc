//! The structure text format.
//!
//! ```text
//! # a 3-point path
//! signature
//! direct r 2
//! dual P 2
//! reserved r
//! domain 3
//! relation r
//! 0 1
//! 1 0
//! 1 2
//! 2 1
//! relation P
//! 0 0 1
//! ```
//!
//! `#` starts a comment. Direct tuples list their entries; dual tuples list
//! the label of every point in domain order. Tuple order inside a section is
//! free on input; output sorts it.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::sync::Arc;

use crate::error::{FormatError, ParseError};
use crate::model::{
    DirectTuple, DualTuple, FiniteStructure, Interpretation, Signature, SurjectiveMap, SymbolDecl, SymbolKind,
};

/// A whitespace-separated token with its 1-based column.
pub(crate) struct Token<'a> {
    pub text: &'a str,
    pub column: usize,
}

/// Splits `text` into lines of tokens, dropping comments and blank lines.
/// Yields `(line_number, tokens)`.
pub(crate) fn tokenize(text: &str) -> impl Iterator<Item = (usize, Vec<Token<'_>>)> {
    text.lines().enumerate().filter_map(|(i, raw)| {
        let line = raw.split('#').next().unwrap_or("");
        let mut tokens = Vec::new();
        let mut start = None;
        for (pos, c) in line.char_indices().chain(std::iter::once((line.len(), ' '))) {
            match (c.is_whitespace(), start) {
                (true, Some(s)) => {
                    tokens.push(Token { text: &line[s..pos], column: s + 1 });
                    start = None;
                }
                (false, None) => start = Some(pos),
                _ => {}
            }
        }
        if tokens.is_empty() {
            None
        } else {
            Some((i + 1, tokens))
        }
    })
}

pub(crate) fn parse_usize(tok: &Token<'_>, line: usize, what: &str) -> Result<usize, ParseError> {
    tok.text
        .parse::<usize>()
        .map_err(|_| ParseError::new(line, tok.column, format!("expected {what}, found `{}`", tok.text)))
}

enum Section {
    Signature,
    Domain,
    Relation(usize),
}

/// Parses and validates a structure.
pub fn parse_structure(text: &str) -> Result<FiniteStructure, FormatError> {
    let mut decls: Vec<SymbolDecl> = Vec::new();
    let mut reserved: Option<(usize, usize)> = None;
    let mut size: Option<usize> = None;
    let mut sig: Option<Arc<Signature>> = None;
    let mut interps: Vec<Interpretation> = Vec::new();
    let mut seen_sections: BTreeSet<usize> = BTreeSet::new();
    let mut section: Option<Section> = None;

    for (ln, toks) in tokenize(text) {
        let head = &toks[0];
        match head.text {
            "signature" => {
                if section.is_some() {
                    return Err(ParseError::new(ln, head.column, "`signature` must come first").into());
                }
                expect_len(&toks, 1, ln)?;
                section = Some(Section::Signature);
            }
            "direct" | "dual" => {
                if !matches!(section, Some(Section::Signature)) {
                    return Err(ParseError::new(ln, head.column, "symbol declaration outside `signature`").into());
                }
                expect_len(&toks, 3, ln)?;
                let name = toks[1].text.to_string();
                if decls.iter().any(|d| d.name == name) {
                    return Err(ParseError::new(ln, toks[1].column, format!("duplicate symbol `{name}`")).into());
                }
                let arity = parse_usize(&toks[2], ln, "arity")?;
                if arity == 0 {
                    return Err(ParseError::new(ln, toks[2].column, "arity must be at least 1").into());
                }
                let kind = if head.text == "direct" { SymbolKind::Direct } else { SymbolKind::Dual };
                decls.push(SymbolDecl { name, arity, kind });
            }
            "reserved" => {
                if !matches!(section, Some(Section::Signature)) {
                    return Err(ParseError::new(ln, head.column, "`reserved` outside `signature`").into());
                }
                expect_len(&toks, 2, ln)?;
                if toks[1].text != crate::model::RESERVED_R {
                    return Err(ParseError::new(ln, toks[1].column, "only `r` can be reserved").into());
                }
                reserved = Some((ln, toks[1].column));
            }
            "domain" => {
                if !matches!(section, Some(Section::Signature)) {
                    return Err(ParseError::new(ln, head.column, "`domain` must follow `signature`").into());
                }
                expect_len(&toks, 2, ln)?;
                let n = parse_usize(&toks[1], ln, "domain size")?;
                if n == 0 {
                    return Err(ParseError::new(ln, toks[1].column, "domain size must be positive").into());
                }
                let s = Signature::new(std::mem::take(&mut decls), reserved.is_some()).map_err(|e| {
                    let (l, c) = reserved.unwrap_or((ln, head.column));
                    ParseError::new(l, c, e.to_string())
                })?;
                interps = s.symbols().iter().map(|d| Interpretation::empty(d.kind)).collect();
                sig = Some(Arc::new(s));
                size = Some(n);
                section = Some(Section::Domain);
            }
            "relation" => {
                let Some(s) = sig.as_ref() else {
                    return Err(ParseError::new(ln, head.column, "`relation` before `domain`").into());
                };
                expect_len(&toks, 2, ln)?;
                let idx = s.index_of(toks[1].text).ok_or_else(|| {
                    ParseError::new(ln, toks[1].column, format!("undeclared symbol `{}`", toks[1].text))
                })?;
                if !seen_sections.insert(idx) {
                    return Err(
                        ParseError::new(ln, toks[1].column, format!("second section for `{}`", toks[1].text)).into()
                    );
                }
                section = Some(Section::Relation(idx));
            }
            _ => {
                let (Some(Section::Relation(idx)), Some(s), Some(n)) = (&section, &sig, size) else {
                    return Err(ParseError::new(ln, head.column, format!("unexpected `{}`", head.text)).into());
                };
                let decl = &s.symbols()[*idx];
                let values = toks.iter().map(|t| parse_usize(t, ln, "index")).collect::<Result<Vec<_>, _>>()?;
                match &mut interps[*idx] {
                    Interpretation::Direct(set) => {
                        if values.len() != decl.arity {
                            return Err(ParseError::new(
                                ln,
                                head.column,
                                format!("`{}` has arity {}, tuple has {} entries", decl.name, decl.arity, values.len()),
                            )
                            .into());
                        }
                        if let Some(p) = values.iter().position(|&v| v >= n) {
                            return Err(ParseError::new(
                                ln,
                                toks[p].column,
                                format!("index {} outside domain", values[p]),
                            )
                            .into());
                        }
                        set.insert(DirectTuple(values));
                    }
                    Interpretation::Dual(set) => {
                        if values.len() != n {
                            return Err(ParseError::new(
                                ln,
                                head.column,
                                format!("labeling for `{}` needs {} entries, found {}", decl.name, n, values.len()),
                            )
                            .into());
                        }
                        if let Some(p) = values.iter().position(|&v| v >= decl.arity) {
                            return Err(ParseError::new(
                                ln,
                                toks[p].column,
                                format!("label {} outside arity {}", values[p], decl.arity),
                            )
                            .into());
                        }
                        set.insert(DualTuple(values));
                    }
                }
            }
        }
    }

    let (Some(sig), Some(size)) = (sig, size) else {
        let last = text.lines().count().max(1);
        return Err(ParseError::new(last, 1, "missing `domain` line").into());
    };
    let s = FiniteStructure::from_parts(sig, size, interps);
    let violations = s.validate();
    if violations.is_empty() {
        Ok(s)
    } else {
        Err(FormatError::Invalid(violations))
    }
}

fn expect_len(toks: &[Token<'_>], n: usize, ln: usize) -> Result<(), ParseError> {
    if toks.len() != n {
        let col = toks.get(n).map_or(toks[0].column, |t| t.column);
        return Err(ParseError::new(ln, col, format!("`{}` takes {} argument(s)", toks[0].text, n - 1)));
    }
    Ok(())
}

pub fn serialize_structure(s: &FiniteStructure) -> String {
    let mut out = String::from("signature\n");
    for d in s.signature().symbols() {
        let _ = writeln!(out, "{} {} {}", d.kind, d.name, d.arity);
    }
    if s.signature().r_reserved() {
        out.push_str("reserved r\n");
    }
    let _ = writeln!(out, "domain {}", s.size());
    for (d, interp) in s.signature().symbols().iter().zip(s.interpretations()) {
        let _ = writeln!(out, "relation {}", d.name);
        let rows: Vec<&Vec<usize>> = match interp {
            Interpretation::Direct(set) => set.iter().map(|t| &t.0).collect(),
            Interpretation::Dual(set) => set.iter().map(|t| &t.0).collect(),
        };
        for row in rows {
            out.push_str(&join(row));
            out.push('\n');
        }
    }
    out
}

pub(crate) fn join(values: &[usize]) -> String {
    let parts: Vec<String> = values.iter().map(|v| v.to_string()).collect();
    parts.join(" ")
}

/// Parses one map table, e.g. `0 0 1`. The target is `0..=max`, unless
/// `target_size` is given.
pub fn parse_map(text: &str, target_size: Option<usize>) -> Result<SurjectiveMap, ParseError> {
    let mut lines = tokenize(text);
    let Some((ln, toks)) = lines.next() else {
        return Err(ParseError::new(1, 1, "empty map"));
    };
    if let Some((ln2, t2)) = lines.next() {
        return Err(ParseError::new(ln2, t2[0].column, "map must be a single line"));
    }
    parse_map_tokens(&toks, ln, target_size)
}

pub(crate) fn parse_map_tokens(
    toks: &[Token<'_>],
    ln: usize,
    target_size: Option<usize>,
) -> Result<SurjectiveMap, ParseError> {
    let table = toks.iter().map(|t| parse_usize(t, ln, "map value")).collect::<Result<Vec<_>, _>>()?;
    let target = target_size.unwrap_or_else(|| table.iter().max().map_or(0, |m| m + 1));
    SurjectiveMap::new(table, target).map_err(|e| ParseError::new(ln, 1, e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;

    #[test]
    fn path_round_trip() {
        let p = catalog::r_path(3);
        let text = serialize_structure(&p);
        assert_eq!(text, "signature\ndirect r 2\nreserved r\ndomain 3\nrelation r\n0 1\n1 0\n1 2\n2 1\n");
        assert_eq!(parse_structure(&text).unwrap(), p);
    }

    #[test]
    fn arity_mismatch_is_a_parse_error() {
        let text = "signature\ndirect r 2\nreserved r\ndomain 3\nrelation r\n0 1 2\n";
        match parse_structure(text) {
            Err(FormatError::Parse(e)) => {
                assert_eq!(e.line, 6);
                assert!(e.message.contains("arity"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn duplicate_symbol_is_a_parse_error() {
        let text = "signature\ndirect s 2\ndual s 2\ndomain 3\n";
        match parse_structure(text) {
            Err(FormatError::Parse(e)) => {
                assert_eq!((e.line, e.column), (3, 6));
                assert!(e.message.contains("duplicate"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn invariant_violations_are_reported_after_parsing() {
        let text = "signature\ndirect r 2\nreserved r\ndomain 3\nrelation r\n0 1\n";
        assert!(matches!(parse_structure(text), Err(FormatError::Invalid(v)) if v.len() == 1));
        let text = "signature\ndual R 3\ndomain 3\nrelation R\n0 0 1 # missing label 2\n";
        assert!(matches!(parse_structure(text), Err(FormatError::Invalid(_))));
    }

    #[test]
    fn comments_and_positions() {
        let text = "# header\nsignature  # start\ndirect s 1\ndomain 2\nrelation s\n0\nx\n";
        match parse_structure(text) {
            Err(FormatError::Parse(e)) => assert_eq!((e.line, e.column), (7, 1)),
            other => panic!("unexpected {other:?}"),
        }
        assert!(parse_structure("signature\n").is_err());
        let s = parse_structure("signature\ndomain 5\n").unwrap();
        assert_eq!(s.size(), 5);
        assert!(s.validate().is_empty());
    }

    #[test]
    fn maps() {
        assert_eq!(parse_map("0 0 1\n", None).unwrap().table(), &[0, 0, 1]);
        assert!(parse_map("0 2", None).is_err());
        assert!(parse_map("0 1", Some(3)).is_err());
    }
}
