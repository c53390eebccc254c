//! Formulas, logic systems and the concrete ASCII grammar.
//!
//! Grammar, loosest to tightest:
//!
//! ```text
//! impl   := and (('-o' | '\' | '/') and)*      -o and \ right-assoc, / left-assoc, never mixed
//! and    := tensor ('&' tensor)*
//! tensor := odot ('*' odot)*
//! odot   := unary ('@' unary)*
//! unary  := '~' unary | '[]' unary | 'E[' agent ']' unary | atomic
//! atomic := '1' | ident | '(' impl ')'
//! ```

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use thiserror::Error;

/// Name of the designated contradiction atom.
pub const BOT: &str = "bot";

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Formula {
    Unit,
    Atom(Arc<str>),
    Tensor(Arc<Formula>, Arc<Formula>),
    With(Arc<Formula>, Arc<Formula>),
    /// Linear implication `l -o r`.
    Limp(Arc<Formula>, Arc<Formula>),
    /// Non-commutative tensor `l @ r`.
    Odot(Arc<Formula>, Arc<Formula>),
    /// `l \ r`: consumes `l` on its left, yields `r`.
    Lres(Arc<Formula>, Arc<Formula>),
    /// `l / r`: consumes `r` on its right, yields `l`.
    Rres(Arc<Formula>, Arc<Formula>),
    Box(Arc<Formula>),
    Brings(Arc<str>, Arc<Formula>),
}

impl Formula {
    pub fn atom(name: &str) -> Formula {
        Formula::Atom(Arc::from(name))
    }

    pub fn bot() -> Formula {
        Formula::atom(BOT)
    }

    pub fn tensor(l: Formula, r: Formula) -> Formula {
        Formula::Tensor(Arc::new(l), Arc::new(r))
    }

    pub fn with(l: Formula, r: Formula) -> Formula {
        Formula::With(Arc::new(l), Arc::new(r))
    }

    pub fn limp(l: Formula, r: Formula) -> Formula {
        Formula::Limp(Arc::new(l), Arc::new(r))
    }

    pub fn odot(l: Formula, r: Formula) -> Formula {
        Formula::Odot(Arc::new(l), Arc::new(r))
    }

    pub fn lres(l: Formula, r: Formula) -> Formula {
        Formula::Lres(Arc::new(l), Arc::new(r))
    }

    pub fn rres(l: Formula, r: Formula) -> Formula {
        Formula::Rres(Arc::new(l), Arc::new(r))
    }

    pub fn boxed(body: Formula) -> Formula {
        Formula::Box(Arc::new(body))
    }

    pub fn brings(agent: &str, body: Formula) -> Formula {
        Formula::Brings(Arc::from(agent), Arc::new(body))
    }

    /// `~A`, i.e. `A -o bot`.
    pub fn neg(body: Formula) -> Formula {
        Formula::limp(body, Formula::bot())
    }

    pub fn is_bot(&self) -> bool {
        matches!(self, Formula::Atom(n) if &**n == BOT)
    }

    /// Connective count; atoms and `1` count 1.
    pub fn complexity(&self) -> usize {
        match self {
            Formula::Unit | Formula::Atom(_) => 1,
            Formula::Box(b) | Formula::Brings(_, b) => 1 + b.complexity(),
            Formula::Tensor(l, r)
            | Formula::With(l, r)
            | Formula::Limp(l, r)
            | Formula::Odot(l, r)
            | Formula::Lres(l, r)
            | Formula::Rres(l, r) => 1 + l.complexity() + r.complexity(),
        }
    }

    pub fn children(&self) -> Vec<&Formula> {
        match self {
            Formula::Unit | Formula::Atom(_) => vec![],
            Formula::Box(b) | Formula::Brings(_, b) => vec![b],
            Formula::Tensor(l, r)
            | Formula::With(l, r)
            | Formula::Limp(l, r)
            | Formula::Odot(l, r)
            | Formula::Lres(l, r)
            | Formula::Rres(l, r) => vec![l, r],
        }
    }

    /// Every node of the syntax tree, the formula itself included.
    pub fn subformulas(&self) -> BTreeSet<Formula> {
        let mut out = BTreeSet::new();
        self.collect_subformulas(&mut out);
        out
    }

    pub(crate) fn collect_subformulas(&self, out: &mut BTreeSet<Formula>) {
        if out.insert(self.clone()) {
            for c in self.children() {
                c.collect_subformulas(out);
            }
        }
    }

    pub fn atoms(&self) -> BTreeSet<String> {
        self.subformulas()
            .into_iter()
            .filter_map(|f| match f {
                Formula::Atom(n) => Some(n.to_string()),
                _ => None,
            })
            .collect()
    }

    pub fn agents(&self) -> BTreeSet<String> {
        self.subformulas()
            .into_iter()
            .filter_map(|f| match f {
                Formula::Brings(a, _) => Some(a.to_string()),
                _ => None,
            })
            .collect()
    }

    /// Checks the connectives of the formula against the language of `system`.
    pub fn validate(&self, system: &SystemId) -> Result<(), ValidationError> {
        match self {
            Formula::Unit | Formula::Atom(_) => Ok(()),
            Formula::Odot(..) | Formula::Lres(..) | Formula::Rres(..)
                if !system.kind.has_serial() =>
            {
                Err(ValidationError::Connective {
                    connective: self.connective_name(),
                    system: system.kind,
                })
            }
            Formula::Box(_) if system.kind.has_agents() => Err(ValidationError::Connective {
                connective: self.connective_name(),
                system: system.kind,
            }),
            Formula::Brings(..) if !system.kind.has_agents() => Err(ValidationError::Connective {
                connective: self.connective_name(),
                system: system.kind,
            }),
            Formula::Brings(a, b) => {
                if !system.agents.contains(&**a) {
                    return Err(ValidationError::UnknownAgent(a.to_string()));
                }
                b.validate(system)
            }
            Formula::Box(b) => b.validate(system),
            Formula::Tensor(l, r)
            | Formula::With(l, r)
            | Formula::Limp(l, r)
            | Formula::Odot(l, r)
            | Formula::Lres(l, r)
            | Formula::Rres(l, r) => {
                l.validate(system)?;
                r.validate(system)
            }
        }
    }

    fn connective_name(&self) -> &'static str {
        match self {
            Formula::Unit => "1",
            Formula::Atom(_) => "atom",
            Formula::Tensor(..) => "*",
            Formula::With(..) => "&",
            Formula::Limp(..) => "-o",
            Formula::Odot(..) => "@",
            Formula::Lres(..) => "\\",
            Formula::Rres(..) => "/",
            Formula::Box(..) => "[]",
            Formula::Brings(..) => "E[_]",
        }
    }
}

impl Formula {
    fn is_binary(&self) -> bool {
        !matches!(self, Formula::Unit | Formula::Atom(_) | Formula::Box(_) | Formula::Brings(..))
    }
}

/// Operand of a connective: binary formulas are bracketed.
struct Operand<'a>(&'a Formula);

impl fmt::Display for Operand<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_binary() {
            write!(f, "({})", self.0)
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let bin = |f: &mut fmt::Formatter<'_>, l: &Formula, op: &str, r: &Formula| {
            write!(f, "{} {op} {}", Operand(l), Operand(r))
        };
        match self {
            Formula::Unit => write!(f, "1"),
            Formula::Atom(n) => write!(f, "{n}"),
            Formula::Tensor(l, r) => bin(f, l, "*", r),
            Formula::With(l, r) => bin(f, l, "&", r),
            Formula::Limp(l, r) => bin(f, l, "-o", r),
            Formula::Odot(l, r) => bin(f, l, "@", r),
            Formula::Lres(l, r) => bin(f, l, "\\", r),
            Formula::Rres(l, r) => bin(f, l, "/", r),
            Formula::Box(b) => write!(f, "[]{}", Operand(b)),
            Formula::Brings(a, b) => write!(f, "E[{a}]{}", Operand(b)),
        }
    }
}

impl FromStr for Formula {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_formula(s)
    }
}

pub fn print_formula(f: &Formula) -> String {
    f.to_string()
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum SystemKind {
    Mill,
    Pcmill,
    Rsbiat,
    Srsbiat,
}

impl SystemKind {
    pub const ALL: [SystemKind; 4] = [
        SystemKind::Mill,
        SystemKind::Pcmill,
        SystemKind::Rsbiat,
        SystemKind::Srsbiat,
    ];

    /// Partially commutative systems: tree contexts, `@`, `\`, `/`.
    pub fn has_serial(self) -> bool {
        matches!(self, SystemKind::Pcmill | SystemKind::Srsbiat)
    }

    /// Systems with the agent modalities `E[a]` instead of `[]`.
    pub fn has_agents(self) -> bool {
        matches!(self, SystemKind::Rsbiat | SystemKind::Srsbiat)
    }

    pub fn name(self) -> &'static str {
        match self {
            SystemKind::Mill => "MILL",
            SystemKind::Pcmill => "PCMILL",
            SystemKind::Rsbiat => "RSBIAT",
            SystemKind::Srsbiat => "SRSBIAT",
        }
    }
}

impl fmt::Display for SystemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SystemKind {
    type Err = ValidationError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "MILL" => Ok(SystemKind::Mill),
            "PCMILL" => Ok(SystemKind::Pcmill),
            "RSBIAT" => Ok(SystemKind::Rsbiat),
            "SRSBIAT" => Ok(SystemKind::Srsbiat),
            _ => Err(ValidationError::UnknownSystem(s.to_string())),
        }
    }
}

/// A logic together with its agent alphabet.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct SystemId {
    pub kind: SystemKind,
    pub agents: BTreeSet<String>,
}

/// Agent used when an agent system is requested without any agents.
pub const DEFAULT_AGENT: &str = "a";

impl SystemId {
    pub fn new(kind: SystemKind) -> SystemId {
        let mut agents = BTreeSet::new();
        if kind.has_agents() {
            agents.insert(DEFAULT_AGENT.to_string());
        }
        SystemId { kind, agents }
    }

    pub fn with_agents<I, S>(kind: SystemKind, agents: I) -> Result<SystemId, ValidationError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let agents: BTreeSet<String> = agents.into_iter().map(Into::into).collect();
        if !kind.has_agents() {
            return Ok(SystemId { kind, agents: BTreeSet::new() });
        }
        if agents.is_empty() {
            return Err(ValidationError::NoAgents(kind));
        }
        for a in &agents {
            if !is_ident(a) {
                return Err(ValidationError::UnknownAgent(a.clone()));
            }
        }
        Ok(SystemId { kind, agents })
    }

    /// Adds every agent mentioned in `formulas` to the alphabet.
    pub fn covering<'a, I>(kind: SystemKind, formulas: I) -> SystemId
    where
        I: IntoIterator<Item = &'a Formula>,
    {
        let mut sys = SystemId::new(kind);
        if kind.has_agents() {
            let found: BTreeSet<String> = formulas.into_iter().flat_map(|f| f.agents()).collect();
            if !found.is_empty() {
                sys.agents = found;
            }
        }
        sys
    }

    pub fn mill() -> SystemId {
        SystemId::new(SystemKind::Mill)
    }

    pub fn pcmill() -> SystemId {
        SystemId::new(SystemKind::Pcmill)
    }
}

impl fmt::Display for SystemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.kind)?;
        if self.kind.has_agents() {
            let list: Vec<&str> = self.agents.iter().map(String::as_str).collect();
            write!(f, "[{}]", list.join(","))?;
        }
        Ok(())
    }
}

impl FromStr for SystemId {
    type Err = ValidationError;

    /// `RSBIAT`, or `RSBIAT[i,j,s]` with an explicit alphabet.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        match s.find('[') {
            None => Ok(SystemId::new(s.parse()?)),
            Some(open) => {
                let kind: SystemKind = s[..open].parse()?;
                let rest = s[open + 1..]
                    .strip_suffix(']')
                    .ok_or_else(|| ValidationError::UnknownSystem(s.to_string()))?;
                let agents: Vec<&str> =
                    rest.split(',').map(str::trim).filter(|a| !a.is_empty()).collect();
                SystemId::with_agents(kind, agents)
            }
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ValidationError {
    #[error("connective `{connective}` is not part of {system}")]
    Connective { connective: &'static str, system: SystemKind },
    #[error("agent `{0}` is not in the agent alphabet")]
    UnknownAgent(String),
    #[error("{0} needs a nonempty agent alphabet")]
    NoAgents(SystemKind),
    #[error("unknown system `{0}`")]
    UnknownSystem(String),
    #[error("{0}")]
    Context(String),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("lexical error at {pos}: unexpected character {found:?}")]
    Lexical { pos: usize, found: char },
    #[error("syntax error at {pos}: expected one of {expected:?}, found {found}")]
    Syntax { pos: usize, expected: Vec<String>, found: String },
    #[error("ambiguous mix of `-o`, `\\` and `/` at {pos}; add parentheses")]
    MixedImplication { pos: usize },
    #[error(transparent)]
    Invalid(#[from] ValidationError),
}

pub(crate) fn is_ident(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub(crate) enum Tok {
    Ident(String),
    One,
    Star,
    Amp,
    At,
    Lolli,
    Backslash,
    Slash,
    Tilde,
    LBrack,
    RBrack,
    LParen,
    RParen,
    Comma,
    Semi,
    Turnstile,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::One => "`1`".into(),
            Tok::Star => "`*`".into(),
            Tok::Amp => "`&`".into(),
            Tok::At => "`@`".into(),
            Tok::Lolli => "`-o`".into(),
            Tok::Backslash => "`\\`".into(),
            Tok::Slash => "`/`".into(),
            Tok::Tilde => "`~`".into(),
            Tok::LBrack => "`[`".into(),
            Tok::RBrack => "`]`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Semi => "`;`".into(),
            Tok::Turnstile => "`|-`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

pub(crate) fn lex(src: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let tok = match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'*' => Tok::Star,
            b'&' => Tok::Amp,
            b'@' => Tok::At,
            b'\\' => Tok::Backslash,
            b'/' => Tok::Slash,
            b'~' => Tok::Tilde,
            b'[' => Tok::LBrack,
            b']' => Tok::RBrack,
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b',' => Tok::Comma,
            b';' => Tok::Semi,
            b'-' if bytes.get(i + 1) == Some(&b'o') => {
                i += 1;
                Tok::Lolli
            }
            b'|' if bytes.get(i + 1) == Some(&b'-') => {
                i += 1;
                Tok::Turnstile
            }
            c if c.is_ascii_alphanumeric() || c == b'_' => {
                let mut j = i;
                while j < bytes.len() && (bytes[j].is_ascii_alphanumeric() || bytes[j] == b'_') {
                    j += 1;
                }
                let word = &src[i..j];
                i = j;
                out.push((if word == "1" { Tok::One } else { Tok::Ident(word.to_string()) }, start));
                continue;
            }
            _ => {
                let found = src[i..].chars().next().unwrap_or('?');
                return Err(ParseError::Lexical { pos: i, found });
            }
        };
        i += 1;
        out.push((tok, start));
    }
    out.push((Tok::Eof, src.len()));
    Ok(out)
}

/// Recursive-descent parser over a token stream; shared with the sequent parser.
pub(crate) struct Parser {
    toks: Vec<(Tok, usize)>,
    at: usize,
}

impl Parser {
    pub(crate) fn new(src: &str) -> Result<Parser, ParseError> {
        Ok(Parser { toks: lex(src)?, at: 0 })
    }

    pub(crate) fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    pub(crate) fn peek2(&self) -> &Tok {
        &self.toks[(self.at + 1).min(self.toks.len() - 1)].0
    }

    pub(crate) fn pos(&self) -> usize {
        self.toks[self.at].1
    }

    pub(crate) fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].0.clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    pub(crate) fn expect(&mut self, want: Tok) -> Result<(), ParseError> {
        if *self.peek() == want {
            self.bump();
            Ok(())
        } else {
            Err(self.error(&[&want.describe()]))
        }
    }

    pub(crate) fn error(&self, expected: &[&str]) -> ParseError {
        ParseError::Syntax {
            pos: self.pos(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: self.peek().describe(),
        }
    }

    pub(crate) fn formula(&mut self) -> Result<Formula, ParseError> {
        let first = self.and_level()?;
        let mut operands = vec![first];
        let mut op: Option<Tok> = None;
        loop {
            let t = self.peek().clone();
            if !matches!(t, Tok::Lolli | Tok::Backslash | Tok::Slash) {
                break;
            }
            match &op {
                Some(prev) if *prev != t => {
                    return Err(ParseError::MixedImplication { pos: self.pos() });
                }
                _ => op = Some(t.clone()),
            }
            self.bump();
            operands.push(self.and_level()?);
        }
        Ok(match op {
            None => operands.pop().expect("one operand"),
            Some(Tok::Slash) => {
                let mut it = operands.into_iter();
                let mut acc = it.next().expect("operand");
                for r in it {
                    acc = Formula::rres(acc, r);
                }
                acc
            }
            Some(t) => {
                let mut acc = operands.pop().expect("operand");
                while let Some(l) = operands.pop() {
                    acc = if t == Tok::Lolli { Formula::limp(l, acc) } else { Formula::lres(l, acc) };
                }
                acc
            }
        })
    }

    fn and_level(&mut self) -> Result<Formula, ParseError> {
        let mut acc = self.tensor_level()?;
        while *self.peek() == Tok::Amp {
            self.bump();
            acc = Formula::with(acc, self.tensor_level()?);
        }
        Ok(acc)
    }

    fn tensor_level(&mut self) -> Result<Formula, ParseError> {
        let mut acc = self.odot_level()?;
        while *self.peek() == Tok::Star {
            self.bump();
            acc = Formula::tensor(acc, self.odot_level()?);
        }
        Ok(acc)
    }

    fn odot_level(&mut self) -> Result<Formula, ParseError> {
        let mut acc = self.unary()?;
        while *self.peek() == Tok::At {
            self.bump();
            acc = Formula::odot(acc, self.unary()?);
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<Formula, ParseError> {
        match self.peek().clone() {
            Tok::Tilde => {
                self.bump();
                Ok(Formula::neg(self.unary()?))
            }
            Tok::LBrack => {
                self.bump();
                self.expect(Tok::RBrack)?;
                Ok(Formula::boxed(self.unary()?))
            }
            Tok::Ident(ref e) if e == "E" && *self.peek2() == Tok::LBrack => {
                self.bump();
                self.bump();
                let agent = match self.bump() {
                    Tok::Ident(a) => a,
                    _ => {
                        self.at -= 1;
                        return Err(self.error(&["agent identifier"]));
                    }
                };
                self.expect(Tok::RBrack)?;
                Ok(Formula::brings(&agent, self.unary()?))
            }
            Tok::One => {
                self.bump();
                Ok(Formula::Unit)
            }
            Tok::Ident(name) => {
                self.bump();
                Ok(Formula::atom(&name))
            }
            Tok::LParen => {
                self.bump();
                let f = self.formula()?;
                self.expect(Tok::RParen)?;
                Ok(f)
            }
            _ => Err(self.error(&["`1`", "identifier", "`(`", "`~`", "`[]`", "`E[`"])),
        }
    }
}

pub fn parse_formula(text: &str) -> Result<Formula, ParseError> {
    let mut p = Parser::new(text)?;
    let f = p.formula()?;
    if *p.peek() != Tok::Eof {
        return Err(p.error(&["end of input"]));
    }
    Ok(f)
}

/// Complexity of a formula; free-function form of [`Formula::complexity`].
pub fn complexity(f: &Formula) -> usize {
    f.complexity()
}

pub fn subformulas(f: &Formula) -> BTreeSet<Formula> {
    f.subformulas()
}
