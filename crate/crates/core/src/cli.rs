//! The `rlogic` command line.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::calculus::{check_proof, Proof};
use crate::context::{infer_system, parse_sequent, Sequent};
use crate::corpus::{load_dir, run_corpus};
use crate::cutelim::eliminate_cuts;
use crate::hilbert::{check_deduction, hilbert_to_sequent, Deduction};
use crate::par::Mode;
use crate::search::{prove_with_stats, SearchBudget, SearchResult, Verdict};
use crate::semantics::{find_countermodel, sequent_valid, validate_model, Model};
use crate::syntax::{SystemId, SystemKind};

#[derive(Parser, Debug)]
#[command(name = "rlogic", version, about = "Proof search, proof checking and model checking for resource logics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Search for a cut-free proof.
    Prove {
        /// MILL, PCMILL, RSBIAT or SRSBIAT, optionally with agents: RSBIAT[i,s]
        system: String,
        sequent: String,
        /// Depth bound (default: 4 x sequent complexity).
        #[arg(long)]
        depth: Option<usize>,
        /// Write the proof as JSON.
        #[arg(long)]
        emit_proof: Option<PathBuf>,
        /// Expected verdict; the exit code reports whether it matched.
        #[arg(long)]
        expect: Option<Verdict>,
    },
    /// Check every node of a proof file.
    CheckProof { path: PathBuf },
    /// Remove all cuts from a proof file and print the result.
    CutEliminate {
        path: PathBuf,
        /// Print the rewrite steps along with the final proof.
        #[arg(long)]
        trace: bool,
    },
    /// Check a Hilbert deduction file.
    HilbertCheck { path: PathBuf },
    /// Translate a Hilbert deduction into a sequent proof.
    HilbertToSequent {
        path: PathBuf,
        /// Also eliminate the cuts of the translation.
        #[arg(long)]
        cut_free: bool,
    },
    /// Check a model file against the frame conditions of a system.
    ModelCheck { model: PathBuf, system: String },
    /// Evaluate a sequent in every world of a model.
    ModelEval {
        model: PathBuf,
        sequent: String,
        /// System used to parse the sequent (default: inferred from the model).
        #[arg(long)]
        system: Option<String>,
    },
    /// Search small models for one falsifying a sequent.
    Countermodel {
        system: String,
        sequent: String,
        #[arg(long, default_value_t = 4)]
        max_size: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run every entry of a corpus directory or file.
    Corpus {
        dir: PathBuf,
        #[arg(long)]
        sequential: bool,
    },
}

/// Runs the command line with process streams and returns the exit code.
pub fn run<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(argv, &mut stdout.lock(), &mut stderr.lock())
}

struct Failure(i32, String);

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Failure {
        Failure(2, e.to_string())
    }
}

pub fn run_with<I, S>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { write!(out, "{text}") } else { write!(err, "{text}") };
            return code;
        }
    };
    match execute(cli.command, out) {
        Ok(code) => code,
        Err(Failure(code, msg)) => {
            let _ = writeln!(err, "error: {msg}");
            code
        }
    }
}

fn system_for(system: &str, sequent: &str) -> Result<SystemId, Failure> {
    if system.contains('[') {
        return Ok(system.parse()?);
    }
    let kind: SystemKind = system.parse::<SystemId>()?.kind;
    Ok(infer_system(kind, sequent)?)
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure(2, format!("cannot read {}: {e}", path.display())))
}

/// Indented rendering, conclusion first.
pub fn render_proof(p: &Proof) -> String {
    fn go(p: &Proof, depth: usize, out: &mut String) {
        out.push_str(&format!("{}{}   [{}]\n", "  ".repeat(depth), p.conclusion, p.rule));
        for q in &p.premises {
            go(q, depth + 1, out);
        }
    }
    let mut s = String::new();
    go(p, 0, &mut s);
    s
}

fn execute(cmd: Command, out: &mut dyn Write) -> Result<i32, Failure> {
    match cmd {
        Command::Prove { system, sequent, depth, emit_proof, expect } => {
            let sys = system_for(&system, &sequent)?;
            let goal = parse_sequent(&sequent, &sys)?;
            let budget = SearchBudget { max_depth: depth, ..SearchBudget::default() };
            let (result, stats) = prove_with_stats(&goal, &budget);
            let serial = sys.kind.has_serial();
            writeln!(out, "{}", result.label(serial))?;
            writeln!(
                out,
                "explored {} sequents, peak depth {} of {}",
                stats.explored, stats.peak_depth, stats.max_depth
            )?;
            match &result {
                SearchResult::Proved(p) => {
                    write!(out, "{}", render_proof(p))?;
                    if let Some(path) = emit_proof {
                        fs::write(&path, p.to_json())?;
                    }
                }
                _ => {
                    if let Some(cm) = find_countermodel(&goal, 3, 0) {
                        writeln!(
                            out,
                            "countermodel: {} worlds, falsified at world {}",
                            cm.model.len(),
                            cm.model.worlds()[cm.witness]
                        )?;
                    }
                }
            }
            let verdict = result.verdict(serial);
            let ok = match expect {
                Some(v) => v == verdict,
                None => verdict == Verdict::Provable,
            };
            Ok(if ok { 0 } else { 1 })
        }
        Command::CheckProof { path } => {
            let p = Proof::from_json(&read(&path)?)?;
            let violations = check_proof(&p);
            if violations.is_empty() {
                writeln!(out, "ok: {} ({} nodes, {} cuts)", p.conclusion, p.size(), p.cut_count())?;
                Ok(0)
            } else {
                for v in &violations {
                    writeln!(out, "{v}")?;
                }
                Ok(1)
            }
        }
        Command::CutEliminate { path, trace } => {
            let p = Proof::from_json(&read(&path)?)?;
            match eliminate_cuts(&p) {
                Ok(t) if trace => {
                    writeln!(out, "{}", t.to_json())?;
                    Ok(0)
                }
                Ok(t) => {
                    writeln!(out, "{}", t.final_proof.to_json())?;
                    Ok(0)
                }
                Err(e) => Err(Failure(1, e.to_string())),
            }
        }
        Command::HilbertCheck { path } => {
            let d = Deduction::from_json(&read(&path)?)?;
            let violations = check_deduction(&d, d.system());
            if violations.is_empty() {
                writeln!(out, "ok: {}", d.conclusion)?;
                Ok(0)
            } else {
                for v in &violations {
                    writeln!(out, "{v}")?;
                }
                Ok(1)
            }
        }
        Command::HilbertToSequent { path, cut_free } => {
            let d = Deduction::from_json(&read(&path)?)?;
            let violations = check_deduction(&d, d.system());
            if let Some(v) = violations.first() {
                return Err(Failure(1, format!("deduction does not check: {v}")));
            }
            let mut p = hilbert_to_sequent(&d)?;
            if cut_free {
                p = eliminate_cuts(&p).map_err(|e| Failure(1, e.to_string()))?.final_proof;
            }
            writeln!(out, "{}", p.to_json())?;
            Ok(0)
        }
        Command::ModelCheck { model, system } => {
            let m = Model::from_json(&read(&model)?)?;
            let sys: SystemId = system.parse()?;
            let report = validate_model(&m, &sys);
            if report.is_pass() {
                writeln!(out, "valid {} model ({} worlds)", sys, m.len())?;
                Ok(0)
            } else {
                for f in &report.failures {
                    writeln!(out, "condition {} fails: {}", f.condition, f.detail)?;
                }
                Ok(1)
            }
        }
        Command::ModelEval { model, sequent, system } => {
            let m = Model::from_json(&read(&model)?)?;
            let sys = match system {
                Some(s) => system_for(&s, &sequent)?,
                None => {
                    let agents = m.modalities().any(|k| k != crate::semantics::BOX_KEY);
                    let kind = match (m.has_serial(), agents) {
                        (false, false) => SystemKind::Mill,
                        (true, false) => SystemKind::Pcmill,
                        (false, true) => SystemKind::Rsbiat,
                        (true, true) => SystemKind::Srsbiat,
                    };
                    infer_system(kind, &sequent)?
                }
            };
            let s: Sequent = parse_sequent(&sequent, &sys)?;
            let f = crate::semantics::sequent_formula(&s);
            let mut failing = Vec::new();
            for (w, name) in m.worlds().iter().enumerate() {
                if !m.eval(w, &f)? {
                    failing.push(name.clone());
                }
            }
            let valid = sequent_valid(&m, &s)?;
            if valid {
                writeln!(out, "valid: {s}")?;
            } else {
                writeln!(out, "not valid: {s}")?;
                writeln!(out, "fails at worlds: {}", failing.join(", "))?;
            }
            Ok(0)
        }
        Command::Countermodel { system, sequent, max_size, seed } => {
            let sys = system_for(&system, &sequent)?;
            let s = parse_sequent(&sequent, &sys)?;
            match find_countermodel(&s, max_size, seed) {
                Some(cm) => {
                    writeln!(out, "{}", cm.model.to_json())?;
                    writeln!(out, "falsified at world {}", cm.model.worlds()[cm.witness])?;
                    Ok(0)
                }
                None => {
                    writeln!(out, "no countermodel with at most {max_size} worlds")?;
                    Ok(1)
                }
            }
        }
        Command::Corpus { dir, sequential } => {
            let entries = load_dir(&dir)?;
            let mode = if sequential { Mode::Sequential } else { Mode::Parallel };
            let reports = run_corpus(&entries, &SearchBudget::default(), mode);
            let width = entries.iter().map(|e| e.id.len()).max().unwrap_or(2).max(2);
            writeln!(out, "{:<width$}  {:<15}  {:<15}  {:>9}  result", "id", "expected", "got", "ms")?;
            let mut failed = 0;
            for r in &reports {
                if !r.pass() {
                    failed += 1;
                }
                writeln!(
                    out,
                    "{:<width$}  {:<15}  {:<15}  {:>9.1}  {}",
                    r.id,
                    r.expected.as_str(),
                    r.got.as_str(),
                    r.elapsed.as_secs_f64() * 1000.0,
                    if r.pass() { "pass" } else { "FAIL" }
                )?;
            }
            writeln!(out, "{} entries, {} passed, {} failed", reports.len(), reports.len() - failed, failed)?;
            Ok(if failed == 0 { 0 } else { 1 })
        }
    }
}
