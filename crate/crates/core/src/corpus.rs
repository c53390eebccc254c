//! Line-oriented sequent corpora.
//!
//! Each non-blank, non-`#` line reads `id | system | sequent | expected | source`.
//! Two macros are expanded before parsing:
//!
//! * `pow≤(f, n)` (also `powle(f, n)`): for `f = (X @ Y) \ Z` the chain
//!   `(X @ Y \ Z) & (X^2 @ Y^2 \ Z^2) & ... & (X^n @ Y^n \ Z^n)` with `@`-powers;
//!   for `f = (X * Y) -o Z` the same with `*`-powers. `n` is at most 5.
//! * `AND[x]{body}`: `body` with `E[x]` renamed to each agent of the
//!   system alphabet in turn, joined by `&`. `AND[x:i,j]{body}` names the
//!   agents explicitly.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::context::{parse_sequent, Sequent};
use crate::par::{self, Mode};
use crate::search::{prove_with_stats, SearchBudget, SearchStats, Verdict};
use crate::syntax::{Formula, SystemId};

pub const MAX_WARRANTY: usize = 5;

#[derive(Clone, Debug)]
pub struct CorpusEntry {
    pub id: String,
    pub system: SystemId,
    /// Sequent text after macro expansion.
    pub text: String,
    pub sequent: Sequent,
    pub expected: Verdict,
    pub source: String,
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{file}:{line}: {reason}")]
    Line { file: String, line: usize, reason: String },
    #[error("cannot read {0}: {1}")]
    Io(PathBuf, std::io::Error),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MacroError {
    #[error("unbalanced macro `{0}`")]
    Unbalanced(String),
    #[error("bad warranty macro: {0}")]
    Warranty(String),
    #[error("bad AND macro: {0}")]
    And(String),
}

/// Expands `pow≤` and `AND` macros in `text`.
pub fn expand_macros(text: &str, system: &SystemId) -> Result<String, MacroError> {
    let text = expand_and(text, system)?;
    expand_pow(&text)
}

fn matching(text: &str, open_at: usize, open: char, close: char) -> Option<usize> {
    let mut depth = 0usize;
    for (i, c) in text[open_at..].char_indices() {
        if c == open {
            depth += 1;
        } else if c == close {
            depth -= 1;
            if depth == 0 {
                return Some(open_at + i);
            }
        }
    }
    None
}

fn expand_and(text: &str, system: &SystemId) -> Result<String, MacroError> {
    let Some(start) = text.find("AND[") else { return Ok(text.to_string()) };
    let head_end = text[start..].find(']').map(|i| start + i).ok_or_else(|| MacroError::Unbalanced("AND".into()))?;
    let head = &text[start + 4..head_end];
    let (var, agents): (&str, Vec<String>) = match head.split_once(':') {
        Some((v, list)) => (v.trim(), list.split(',').map(|a| a.trim().to_string()).collect()),
        None => (head.trim(), system.agents.iter().cloned().collect()),
    };
    if var.is_empty() || agents.is_empty() || agents.iter().any(String::is_empty) {
        return Err(MacroError::And(head.to_string()));
    }
    let open = head_end + 1;
    if !text[open..].starts_with('{') {
        return Err(MacroError::And("missing body".into()));
    }
    let close = matching(text, open, '{', '}').ok_or_else(|| MacroError::Unbalanced("AND".into()))?;
    let body = &text[open + 1..close];
    let needle = format!("E[{var}]");
    let parts: Vec<String> = agents.iter().map(|a| format!("({})", body.replace(&needle, &format!("E[{a}]")))).collect();
    let expanded = format!("{}({}){}", &text[..start], parts.join(" & "), &text[close + 1..]);
    expand_and(&expanded, system)
}

fn expand_pow(text: &str) -> Result<String, MacroError> {
    let found = ["pow≤(", "powle("].iter().filter_map(|m| text.find(m).map(|i| (i, m.len()))).min();
    let Some((start, len)) = found else { return Ok(text.to_string()) };
    let open = start + len - 1;
    let close = matching(text, open, '(', ')').ok_or_else(|| MacroError::Unbalanced("pow≤".into()))?;
    let inner = &text[open + 1..close];
    let comma = inner.rfind(',').ok_or_else(|| MacroError::Warranty("expected `f, n`".into()))?;
    let f: Formula = inner[..comma].trim().parse().map_err(|e| MacroError::Warranty(format!("{e}")))?;
    let n: usize = inner[comma + 1..].trim().parse().map_err(|_| MacroError::Warranty("bad count".into()))?;
    if n == 0 || n > MAX_WARRANTY {
        return Err(MacroError::Warranty(format!("count must be 1..={MAX_WARRANTY}")));
    }
    let chain = warranty(&f, n).ok_or_else(|| MacroError::Warranty(format!("{f} is not (X @ Y) \\ Z or (X * Y) -o Z")))?;
    let expanded = format!("{}{}{}", &text[..start], chain, &text[close + 1..]);
    expand_pow(&expanded)
}

/// `f^{≤n}` as a formula.
pub fn warranty(f: &Formula, n: usize) -> Option<Formula> {
    let (x, y, z, serial) = match f {
        Formula::Lres(l, z) => match &**l {
            Formula::Odot(x, y) => (x, y, z, true),
            _ => return None,
        },
        Formula::Limp(l, z) => match &**l {
            Formula::Tensor(x, y) => (x, y, z, false),
            _ => return None,
        },
        _ => return None,
    };
    let join = |a: Formula, b: Formula| if serial { Formula::odot(a, b) } else { Formula::tensor(a, b) };
    let power = |g: &Formula, k: usize| (1..k).fold(g.clone(), |acc, _| join(acc, g.clone()));
    let term = |k: usize| {
        let lhs = join(power(x, k), power(y, k));
        if serial {
            Formula::lres(lhs, power(z, k))
        } else {
            Formula::limp(lhs, power(z, k))
        }
    };
    (2..=n).fold(Some(term(1)), |acc, k| acc.map(|a| Formula::with(a, term(k))))
}

pub fn parse_line(line: &str) -> Result<Option<CorpusEntry>, String> {
    let trimmed = line.trim();
    if trimmed.is_empty() || trimmed.starts_with('#') {
        return Ok(None);
    }
    let fields: Vec<&str> = trimmed.split(" | ").map(str::trim).collect();
    if fields.len() != 5 {
        return Err(format!("expected 5 fields separated by ` | `, found {}", fields.len()));
    }
    let system: SystemId = fields[1].parse().map_err(|e| format!("{e}"))?;
    let text = expand_macros(fields[2], &system).map_err(|e| e.to_string())?;
    let sequent = parse_sequent(&text, &system).map_err(|e| e.to_string())?;
    let expected = fields[3].parse()?;
    Ok(Some(CorpusEntry {
        id: fields[0].to_string(),
        system,
        text,
        sequent,
        expected,
        source: fields[4].to_string(),
    }))
}

pub fn load_file(path: &Path) -> Result<Vec<CorpusEntry>, CorpusError> {
    let text = fs::read_to_string(path).map_err(|e| CorpusError::Io(path.to_path_buf(), e))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        match parse_line(line) {
            Ok(Some(e)) => out.push(e),
            Ok(None) => {}
            Err(reason) => {
                return Err(CorpusError::Line { file: path.display().to_string(), line: i + 1, reason })
            }
        }
    }
    Ok(out)
}

/// Every `*.txt` file under `dir` (recursively, in path order); `dir` may also be a file.
pub fn load_dir(dir: &Path) -> Result<Vec<CorpusEntry>, CorpusError> {
    let mut files = Vec::new();
    collect_files(dir, &mut files)?;
    files.sort();
    let mut out = Vec::new();
    for f in files {
        out.extend(load_file(&f)?);
    }
    Ok(out)
}

fn collect_files(path: &Path, out: &mut Vec<PathBuf>) -> Result<(), CorpusError> {
    if path.is_file() {
        out.push(path.to_path_buf());
        return Ok(());
    }
    for entry in fs::read_dir(path).map_err(|e| CorpusError::Io(path.to_path_buf(), e))? {
        let p = entry.map_err(|e| CorpusError::Io(path.to_path_buf(), e))?.path();
        if p.is_dir() {
            collect_files(&p, out)?;
        } else if p.extension().is_some_and(|x| x == "txt") {
            out.push(p);
        }
    }
    Ok(())
}

#[derive(Clone, Debug)]
pub struct EntryReport {
    pub id: String,
    pub expected: Verdict,
    pub got: Verdict,
    pub stats: SearchStats,
    pub elapsed: Duration,
}

impl EntryReport {
    pub fn pass(&self) -> bool {
        self.expected == self.got
    }
}

pub fn run_entry(entry: &CorpusEntry, budget: &SearchBudget) -> EntryReport {
    let start = Instant::now();
    let (result, stats) = prove_with_stats(&entry.sequent, budget);
    EntryReport {
        id: entry.id.clone(),
        expected: entry.expected,
        got: result.verdict(entry.system.kind.has_serial()),
        stats,
        elapsed: start.elapsed(),
    }
}

/// Runs every entry; reports come back in entry order.
pub fn run_corpus(entries: &[CorpusEntry], budget: &SearchBudget, mode: Mode) -> Vec<EntryReport> {
    par::map(mode, entries, |e| run_entry(e, budget))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn warranty_expansion() {
        let s: SystemId = "SRSBIAT[s]".parse().unwrap();
        let out = expand_macros("E[s](pow≤(S@F\\T, 2))", &s).unwrap();
        let f: Formula = out.trim_start_matches("E[s]").parse().unwrap();
        let expected: Formula = "(S@F\\T) & ((S@S)@(F@F) \\ (T@T))".parse().unwrap();
        assert_eq!(f, expected);
        assert_eq!(expand_macros("powle(S@F\\T, 2)", &s).unwrap(), expand_macros("pow≤(S@F\\T, 2)", &s).unwrap());
        assert!(expand_macros("pow≤(S@F\\T, 6)", &s).is_err());
        assert!(expand_macros("pow≤(S -o T, 2)", &s).is_err());
    }

    #[test]
    fn and_expansion() {
        let s: SystemId = "RSBIAT[i,t]".parse().unwrap();
        let out = expand_macros("E[t](AND[x]{E[x](R1*R2) -o M})", &s).unwrap();
        let f: Formula = out.parse().unwrap();
        let g: Formula = "E[t]((E[i](R1*R2) -o M) & (E[t](R1*R2) -o M))".parse().unwrap();
        assert_eq!(f, g);
        let out = expand_macros("AND[y:i]{E[y]p}", &s).unwrap();
        assert_eq!(out.parse::<Formula>().unwrap(), "E[i]p".parse().unwrap());
    }

    #[test]
    fn line_format() {
        let e = parse_line("sd | RSBIAT[i,s] | S, E[i]F, E[s]((S*F) -o T) |- T | provable | example").unwrap().unwrap();
        assert_eq!(e.id, "sd");
        assert_eq!(e.expected, Verdict::Provable);
        assert!(parse_line("# comment").unwrap().is_none());
        assert!(parse_line("x | MILL | p |- p | maybe | y").is_err());
        assert!(parse_line("x | MILL | p |- p").is_err());
        assert!(run_entry(&e, &SearchBudget::default()).pass());
    }
}
