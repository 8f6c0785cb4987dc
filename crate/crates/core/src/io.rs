//! Files on disk: structures, class manifests, group files and system
//! bundles.
//!
//! A class manifest lists its members by path, relative to the manifest:
//!
//! ```text
//! max_size 8
//! member p1.struct
//! member p2.struct
//! ```
//!
//! A bundle is a directory holding `level_<i>.struct` for `i = 1..=depth`,
//! `bonds.txt` (line `i` is the bond from level `i+1` onto level `i`) and
//! `provenance.log`.

use std::fs;
use std::path::{Path, PathBuf};

use crate::class::StructureClass;
use crate::error::{IoError, ParseError};
use crate::format::{join, parse_map_tokens, parse_structure, parse_usize, serialize_structure, tokenize};
use crate::group::{parse_group, PermutationGroup};
use crate::limit::{InverseSystem, Provenance};
use crate::model::{FiniteStructure, SurjectiveMap};

pub fn read_text(path: &Path) -> Result<String, IoError> {
    fs::read_to_string(path).map_err(|source| IoError::Io { path: path.to_path_buf(), source })
}

pub fn write_text(path: &Path, text: &str) -> Result<(), IoError> {
    fs::write(path, text).map_err(|source| IoError::Io { path: path.to_path_buf(), source })
}

pub fn load_structure(path: &Path) -> Result<FiniteStructure, IoError> {
    parse_structure(&read_text(path)?).map_err(|source| IoError::Format { path: path.to_path_buf(), source })
}

pub fn load_map(path: &Path, target_size: Option<usize>) -> Result<SurjectiveMap, IoError> {
    crate::format::parse_map(&read_text(path)?, target_size)
        .map_err(|source| IoError::Parse { path: path.to_path_buf(), source })
}

pub fn load_group(path: &Path) -> Result<PermutationGroup, IoError> {
    parse_group(&read_text(path)?).map_err(|source| IoError::Parse { path: path.to_path_buf(), source })
}

/// `max_size` and the member paths, resolved against the manifest's directory.
pub fn parse_manifest(text: &str, base: &Path) -> Result<(usize, Vec<PathBuf>), ParseError> {
    let mut max_size = None;
    let mut members = Vec::new();
    let mut last = 1;
    for (ln, toks) in tokenize(text) {
        last = ln;
        match (toks[0].text, toks.len()) {
            ("max_size", 2) if max_size.is_none() => max_size = Some(parse_usize(&toks[1], ln, "max_size")?),
            ("member", 2) => members.push(base.join(toks[1].text)),
            _ => return Err(ParseError::new(ln, toks[0].column, "expected `max_size <n>` once or `member <path>`")),
        }
    }
    let max_size = max_size.ok_or_else(|| ParseError::new(last, 1, "missing `max_size` line"))?;
    if members.is_empty() {
        return Err(ParseError::new(last, 1, "no `member` lines"));
    }
    Ok((max_size, members))
}

pub fn load_class(path: &Path, canon_bound: usize) -> Result<StructureClass, IoError> {
    let base = path.parent().unwrap_or(Path::new("."));
    let (max_size, paths) = parse_manifest(&read_text(path)?, base)
        .map_err(|source| IoError::Parse { path: path.to_path_buf(), source })?;
    let members = paths.iter().map(|p| load_structure(p)).collect::<Result<Vec<_>, _>>()?;
    StructureClass::with_canon_bound(members, max_size, canon_bound)
        .map_err(|source| IoError::Class { path: path.to_path_buf(), source })
}

fn level_path(dir: &Path, i: usize) -> PathBuf {
    dir.join(format!("level_{i}.struct"))
}

pub fn write_bundle(dir: &Path, sys: &InverseSystem) -> Result<(), IoError> {
    fs::create_dir_all(dir).map_err(|source| IoError::Io { path: dir.to_path_buf(), source })?;
    for i in 1..=sys.depth() {
        write_text(&level_path(dir, i), &serialize_structure(sys.level(i)))?;
    }
    let bonds: String = sys.bonds().iter().map(|b| join(b.table()) + "\n").collect();
    write_text(&dir.join("bonds.txt"), &bonds)?;
    let log: String = sys.provenance().iter().map(|p| p.to_string() + "\n").collect();
    write_text(&dir.join("provenance.log"), &log)
}

/// Loads and validates a bundle. A missing provenance log is read as empty.
pub fn read_bundle(dir: &Path) -> Result<InverseSystem, IoError> {
    let mut levels = Vec::new();
    while level_path(dir, levels.len() + 1).exists() {
        levels.push(load_structure(&level_path(dir, levels.len() + 1))?);
    }
    let bonds_path = dir.join("bonds.txt");
    let text = read_text(&bonds_path)?;
    let mut bonds = Vec::new();
    for (ln, toks) in tokenize(&text) {
        let i = bonds.len() + 1;
        if i >= levels.len() {
            let err = ParseError::new(ln, 1, format!("more bonds than the {} levels allow", levels.len()));
            return Err(IoError::Parse { path: bonds_path, source: err });
        }
        let target = levels[i - 1].size();
        bonds.push(
            parse_map_tokens(&toks, ln, Some(target))
                .map_err(|source| IoError::Parse { path: bonds_path.clone(), source })?,
        );
    }
    let log_path = dir.join("provenance.log");
    let mut provenance = Vec::new();
    if log_path.exists() {
        for (i, line) in read_text(&log_path)?.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let entry = line.parse::<Provenance>().map_err(|message| IoError::Parse {
                path: log_path.clone(),
                source: ParseError::new(i + 1, 1, message),
            })?;
            provenance.push(entry);
        }
    }
    InverseSystem::new(levels, bonds, provenance).map_err(|source| IoError::System { path: dir.to_path_buf(), source })
}
