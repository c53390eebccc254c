//! Sequent proofs and the rule-by-rule checker.
//!
//! A proof node records its conclusion, the rule name and its premises.
//! Rule instances (principal position, split) are not stored: the checker
//! accepts a node when its premise sequents are among the instances that
//! [`apply_rule`] enumerates for the conclusion, so the checker accepts
//! exactly the proofs that backward rule application can build. Cut is the
//! one rule that cannot be enumerated backwards and is matched directly.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::context::{parse_sequent_arc, Context, Multiset, Position, Sequent, Tree, DEFAULT_STRUCTURAL_BOUND};
use crate::syntax::{is_ident, Formula, ParseError, SystemId, SystemKind};

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum RuleId {
    Ax,
    Cut,
    TensorL,
    TensorR,
    LimpL,
    LimpR,
    WithL1,
    WithL2,
    WithR,
    OneL,
    OneR,
    BoxRe,
    OdotL,
    OdotR,
    LresL,
    LresR,
    RresL,
    RresR,
    Ent,
    BringsRe(String),
    BringsRefl(String),
    BringsTensor(String),
    BringsWith(String),
    BringsOdot(String),
    NotNec(String),
}

impl RuleId {
    pub fn name(&self) -> &'static str {
        match self {
            RuleId::Ax => "Ax",
            RuleId::Cut => "Cut",
            RuleId::TensorL => "TensorL",
            RuleId::TensorR => "TensorR",
            RuleId::LimpL => "LimpL",
            RuleId::LimpR => "LimpR",
            RuleId::WithL1 => "WithL1",
            RuleId::WithL2 => "WithL2",
            RuleId::WithR => "WithR",
            RuleId::OneL => "OneL",
            RuleId::OneR => "OneR",
            RuleId::BoxRe => "BoxRe",
            RuleId::OdotL => "OdotL",
            RuleId::OdotR => "OdotR",
            RuleId::LresL => "LresL",
            RuleId::LresR => "LresR",
            RuleId::RresL => "RresL",
            RuleId::RresR => "RresR",
            RuleId::Ent => "Ent",
            RuleId::BringsRe(_) => "BringsRe",
            RuleId::BringsRefl(_) => "BringsRefl",
            RuleId::BringsTensor(_) => "BringsTensor",
            RuleId::BringsWith(_) => "BringsWith",
            RuleId::BringsOdot(_) => "BringsOdot",
            RuleId::NotNec(_) => "NotNec",
        }
    }

    pub fn agent(&self) -> Option<&str> {
        match self {
            RuleId::BringsRe(a)
            | RuleId::BringsRefl(a)
            | RuleId::BringsTensor(a)
            | RuleId::BringsWith(a)
            | RuleId::BringsOdot(a)
            | RuleId::NotNec(a) => Some(a),
            _ => None,
        }
    }

    /// Whether the rule belongs to the calculus of `kind`.
    pub fn admissible_in(&self, kind: SystemKind) -> bool {
        use RuleId::*;
        match self {
            Ax | Cut | TensorL | TensorR | LimpL | LimpR | WithL1 | WithL2 | WithR | OneL | OneR => true,
            BoxRe => !kind.has_agents(),
            OdotL | OdotR | LresL | LresR | RresL | RresR | Ent => kind.has_serial(),
            BringsRe(_) | BringsRefl(_) | BringsTensor(_) | BringsWith(_) | NotNec(_) => kind.has_agents(),
            BringsOdot(_) => kind == SystemKind::Srsbiat,
        }
    }

    /// Rules with no choice in their backward reading.
    pub fn is_invertible(&self) -> bool {
        matches!(
            self,
            RuleId::TensorL
                | RuleId::OdotL
                | RuleId::OneL
                | RuleId::LimpR
                | RuleId::LresR
                | RuleId::RresR
                | RuleId::WithR
        )
    }

    /// Every rule of `system`, agent rules instantiated for each agent.
    pub fn all_for(system: &SystemId) -> Vec<RuleId> {
        use RuleId::*;
        let mut out = vec![
            Ax, Cut, TensorL, TensorR, LimpL, LimpR, WithL1, WithL2, WithR, OneL, OneR, BoxRe, OdotL,
            OdotR, LresL, LresR, RresL, RresR, Ent,
        ];
        for a in &system.agents {
            out.extend([
                BringsRe(a.clone()),
                BringsRefl(a.clone()),
                BringsTensor(a.clone()),
                BringsWith(a.clone()),
                BringsOdot(a.clone()),
                NotNec(a.clone()),
            ]);
        }
        out.retain(|r| r.admissible_in(system.kind));
        out
    }
}

impl fmt::Display for RuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.agent() {
            Some(a) => write!(f, "{}({a})", self.name()),
            None => f.write_str(self.name()),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("unknown rule `{0}`")]
pub struct UnknownRule(pub String);

impl FromStr for RuleId {
    type Err = UnknownRule;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || UnknownRule(s.to_string());
        let s = s.trim();
        if let Some(open) = s.find('(') {
            let name = &s[..open];
            let agent = s[open + 1..].strip_suffix(')').ok_or_else(bad)?.trim().to_string();
            if !is_ident(&agent) {
                return Err(bad());
            }
            return Ok(match name {
                "BringsRe" => RuleId::BringsRe(agent),
                "BringsRefl" => RuleId::BringsRefl(agent),
                "BringsTensor" => RuleId::BringsTensor(agent),
                "BringsWith" => RuleId::BringsWith(agent),
                "BringsOdot" => RuleId::BringsOdot(agent),
                "NotNec" => RuleId::NotNec(agent),
                _ => return Err(bad()),
            });
        }
        Ok(match s {
            "Ax" => RuleId::Ax,
            "Cut" => RuleId::Cut,
            "TensorL" => RuleId::TensorL,
            "TensorR" => RuleId::TensorR,
            "LimpL" => RuleId::LimpL,
            "LimpR" => RuleId::LimpR,
            "WithL1" => RuleId::WithL1,
            "WithL2" => RuleId::WithL2,
            "WithR" => RuleId::WithR,
            "OneL" => RuleId::OneL,
            "OneR" => RuleId::OneR,
            "BoxRe" => RuleId::BoxRe,
            "OdotL" => RuleId::OdotL,
            "OdotR" => RuleId::OdotR,
            "LresL" => RuleId::LresL,
            "LresR" => RuleId::LresR,
            "RresL" => RuleId::RresL,
            "RresR" => RuleId::RresR,
            "Ent" => RuleId::Ent,
            _ => return Err(bad()),
        })
    }
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Proof {
    pub conclusion: Sequent,
    pub rule: RuleId,
    pub premises: Vec<Proof>,
}

impl Proof {
    pub fn new(conclusion: Sequent, rule: RuleId, premises: Vec<Proof>) -> Proof {
        Proof { conclusion, rule, premises }
    }

    pub fn leaf(conclusion: Sequent, rule: RuleId) -> Proof {
        Proof { conclusion, rule, premises: Vec::new() }
    }

    pub fn system(&self) -> &Arc<SystemId> {
        &self.conclusion.system
    }

    pub fn is_cut_free(&self) -> bool {
        self.cut_count() == 0
    }

    pub fn cut_count(&self) -> usize {
        usize::from(self.rule == RuleId::Cut) + self.premises.iter().map(Proof::cut_count).sum::<usize>()
    }

    /// Largest complexity of a cut formula, 0 for cut-free proofs.
    pub fn cutrank(&self) -> usize {
        let here = if self.rule == RuleId::Cut { self.cut_formula().map_or(0, Formula::complexity) } else { 0 };
        self.premises.iter().map(Proof::cutrank).fold(here, usize::max)
    }

    /// Cut formula of a Cut node (the succedent of its first premise).
    pub fn cut_formula(&self) -> Option<&Formula> {
        match (&self.rule, self.premises.first()) {
            (RuleId::Cut, Some(p)) => Some(&p.conclusion.succedent),
            _ => None,
        }
    }

    /// Number of nodes on the longest branch.
    pub fn height(&self) -> usize {
        1 + self.premises.iter().map(Proof::height).max().unwrap_or(0)
    }

    pub fn size(&self) -> usize {
        1 + self.premises.iter().map(Proof::size).sum::<usize>()
    }

    pub fn get(&self, path: &[usize]) -> Option<&Proof> {
        let mut node = self;
        for &i in path {
            node = node.premises.get(i)?;
        }
        Some(node)
    }

    /// Copy of `self` with the subproof at `path` replaced.
    pub fn replace(&self, path: &[usize], with: Proof) -> Option<Proof> {
        match path.split_first() {
            None => Some(with),
            Some((&i, rest)) => {
                let child = self.premises.get(i)?.replace(rest, with)?;
                let mut out = self.clone();
                out.premises[i] = child;
                Some(out)
            }
        }
    }

    /// Visits every node with its path, parents first.
    pub fn walk<'a>(&'a self, f: &mut dyn FnMut(&[usize], &'a Proof)) {
        fn go<'a>(p: &'a Proof, path: &mut Vec<usize>, f: &mut dyn FnMut(&[usize], &'a Proof)) {
            f(path, p);
            for (i, q) in p.premises.iter().enumerate() {
                path.push(i);
                go(q, path, f);
                path.pop();
            }
        }
        go(self, &mut Vec::new(), f)
    }

    pub fn to_json(&self) -> String {
        let file = ProofFile { system: self.system().to_string(), proof: ProofJson::from(self) };
        serde_json::to_string_pretty(&file).expect("proof serializes")
    }

    pub fn from_json(text: &str) -> Result<Proof, ProofFormatError> {
        let file: ProofFile = serde_json::from_str(text)?;
        let system: SystemId = file.system.parse().map_err(ParseError::from)?;
        file.proof.into_proof(&Arc::new(system))
    }
}

#[derive(Serialize, Deserialize)]
struct ProofFile {
    system: String,
    proof: ProofJson,
}

#[derive(Serialize, Deserialize)]
struct ProofJson {
    rule: String,
    conclusion: String,
    premises: Vec<ProofJson>,
}

impl From<&Proof> for ProofJson {
    fn from(p: &Proof) -> ProofJson {
        ProofJson {
            rule: p.rule.to_string(),
            conclusion: p.conclusion.to_string(),
            premises: p.premises.iter().map(ProofJson::from).collect(),
        }
    }
}

impl ProofJson {
    fn into_proof(self, system: &Arc<SystemId>) -> Result<Proof, ProofFormatError> {
        let conclusion = parse_sequent_arc(&self.conclusion, system.clone())?;
        let rule: RuleId = self.rule.parse()?;
        let premises = self.premises.into_iter().map(|p| p.into_proof(system)).collect::<Result<_, _>>()?;
        Ok(Proof { conclusion, rule, premises })
    }
}

#[derive(Debug, Error)]
pub enum ProofFormatError {
    #[error("malformed proof file: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Rule(#[from] UnknownRule),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CalculusError {
    #[error("rule {rule} is not part of {system}")]
    Inadmissible { rule: RuleId, system: SystemKind },
    #[error("cut cannot be applied backwards without a cut formula")]
    CutNotEnumerable,
}

/// A failed check at one proof node.
#[derive(Clone, PartialEq, Eq, Debug, Serialize)]
pub struct Violation {
    pub path: Vec<usize>,
    pub rule: String,
    pub reason: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "at {:?} ({}): {}", self.path, self.rule, self.reason)
    }
}

/// Every way `rule` can conclude `goal`, each as an ordered premise list.
///
/// In the tree systems the goal is first widened to its entropy preimages.
pub fn apply_rule(goal: &Sequent, rule: &RuleId) -> Result<Vec<Vec<Sequent>>, CalculusError> {
    if !rule.admissible_in(goal.system.kind) {
        return Err(CalculusError::Inadmissible { rule: rule.clone(), system: goal.system.kind });
    }
    if *rule == RuleId::Cut {
        return Err(CalculusError::CutNotEnumerable);
    }
    match &goal.antecedent {
        Context::Tree(t) if *rule != RuleId::Ent => {
            let (pre, _) = t.structural_preimages(DEFAULT_STRUCTURAL_BOUND);
            let mut seen = BTreeSet::new();
            let mut out = Vec::new();
            for p in pre {
                let g = goal.with_context(Context::Tree(p), goal.succedent.clone());
                for inst in apply_direct(&g, rule) {
                    if seen.insert(inst.clone()) {
                        out.push(inst);
                    }
                }
            }
            Ok(out)
        }
        _ => Ok(apply_direct(goal, rule)),
    }
}

/// Instances of `rule` whose conclusion is literally `goal` (no entropy).
///
/// Inadmissible rules and Cut yield no instances.
pub fn apply_direct(goal: &Sequent, rule: &RuleId) -> Vec<Vec<Sequent>> {
    if !rule.admissible_in(goal.system.kind) {
        return Vec::new();
    }
    match &goal.antecedent {
        Context::MSet(m) => mset_instances(goal, m, rule),
        Context::Tree(t) => tree_instances(goal, t, rule),
    }
}

fn seq(goal: &Sequent, ctx: Context, succ: Formula) -> Sequent {
    goal.with_context(ctx, succ)
}

fn single(goal: &Sequent, f: &Formula) -> Context {
    Context::singleton_for(&goal.system, f.clone())
}

fn agent_is(a: &str, b: &str) -> bool {
    a == b
}

/// Shared shape of the rules that look only at the whole sequent.
fn whole_sequent_instances(goal: &Sequent, rule: &RuleId) -> Option<Vec<Vec<Sequent>>> {
    let ant = &goal.antecedent;
    let succ = &goal.succedent;
    let empty = Context::empty_for(&goal.system);
    let out = match (rule, succ) {
        (RuleId::Ax, _) => match ant.as_single() {
            Some(f) if f == succ => vec![vec![]],
            _ => vec![],
        },
        (RuleId::OneR, Formula::Unit) if ant.is_empty() => vec![vec![]],
        (RuleId::WithR, Formula::With(a, b)) => {
            vec![vec![seq(goal, ant.clone(), (**a).clone()), seq(goal, ant.clone(), (**b).clone())]]
        }
        (RuleId::BringsWith(x), Formula::Brings(y, body)) if agent_is(x, y) => match &**body {
            Formula::With(a, b) => vec![vec![
                seq(goal, ant.clone(), Formula::brings(y, (**a).clone())),
                seq(goal, ant.clone(), Formula::brings(y, (**b).clone())),
            ]],
            _ => vec![],
        },
        (RuleId::BoxRe, Formula::Box(b)) => match ant.as_single() {
            Some(Formula::Box(a)) => vec![vec![
                seq(goal, single(goal, a), (**b).clone()),
                seq(goal, single(goal, b), (**a).clone()),
            ]],
            _ => vec![],
        },
        (RuleId::BringsRe(x), Formula::Brings(y, b)) if agent_is(x, y) => match ant.as_single() {
            Some(Formula::Brings(z, a)) if agent_is(x, z) => vec![vec![
                seq(goal, single(goal, a), (**b).clone()),
                seq(goal, single(goal, b), (**a).clone()),
            ]],
            _ => vec![],
        },
        (RuleId::NotNec(x), f) if f.is_bot() => match ant.as_single() {
            Some(Formula::Brings(z, a)) if agent_is(x, z) => vec![vec![seq(goal, empty, (**a).clone())]],
            _ => vec![],
        },
        (RuleId::OneR | RuleId::WithR | RuleId::BringsWith(_) | RuleId::BoxRe, _)
        | (RuleId::BringsRe(_) | RuleId::NotNec(_), _) => vec![],
        _ => return None,
    };
    Some(out)
}

/// Premise produced by a left rule that rewrites one formula occurrence.
fn left_rewrite(rule: &RuleId, f: &Formula) -> Option<LeftRewrite> {
    match (rule, f) {
        (RuleId::TensorL, Formula::Tensor(a, b)) => Some(LeftRewrite::Par((**a).clone(), (**b).clone())),
        (RuleId::OdotL, Formula::Odot(a, b)) => Some(LeftRewrite::Ser((**a).clone(), (**b).clone())),
        (RuleId::OneL, Formula::Unit) => Some(LeftRewrite::Nothing),
        (RuleId::WithL1, Formula::With(a, _)) => Some(LeftRewrite::One((**a).clone())),
        (RuleId::WithL2, Formula::With(_, b)) => Some(LeftRewrite::One((**b).clone())),
        (RuleId::BringsRefl(x), Formula::Brings(y, a)) if agent_is(x, y) => Some(LeftRewrite::One((**a).clone())),
        _ => None,
    }
}

enum LeftRewrite {
    Nothing,
    One(Formula),
    Par(Formula, Formula),
    Ser(Formula, Formula),
}

fn is_left_rewrite(rule: &RuleId) -> bool {
    matches!(
        rule,
        RuleId::TensorL | RuleId::OdotL | RuleId::OneL | RuleId::WithL1 | RuleId::WithL2 | RuleId::BringsRefl(_)
    )
}

fn mset_instances(goal: &Sequent, m: &Multiset, rule: &RuleId) -> Vec<Vec<Sequent>> {
    if let Some(out) = whole_sequent_instances(goal, rule) {
        return out;
    }
    let succ = &goal.succedent;
    let ctx = |ms: Multiset| Context::MSet(ms);
    if is_left_rewrite(rule) {
        let mut out = Vec::new();
        for f in m.distinct() {
            let Some(rw) = left_rewrite(rule, f) else { continue };
            let mut rest = m.clone();
            rest.remove(f);
            match rw {
                LeftRewrite::Nothing => {}
                LeftRewrite::One(a) => rest.insert(a),
                LeftRewrite::Par(a, b) | LeftRewrite::Ser(a, b) => {
                    rest.insert(a);
                    rest.insert(b);
                }
            }
            out.push(vec![seq(goal, ctx(rest), succ.clone())]);
        }
        return out;
    }
    match (rule, succ) {
        (RuleId::TensorR, Formula::Tensor(a, b)) => m
            .splits()
            .into_iter()
            .map(|(l, r)| vec![seq(goal, ctx(l), (**a).clone()), seq(goal, ctx(r), (**b).clone())])
            .collect(),
        (RuleId::BringsTensor(x), Formula::Brings(y, body)) if agent_is(x, y) => match &**body {
            Formula::Tensor(a, b) => m
                .splits()
                .into_iter()
                .map(|(l, r)| {
                    vec![
                        seq(goal, ctx(l), Formula::brings(y, (**a).clone())),
                        seq(goal, ctx(r), Formula::brings(y, (**b).clone())),
                    ]
                })
                .collect(),
            _ => vec![],
        },
        (RuleId::LimpR, Formula::Limp(a, b)) => {
            let mut ext = m.clone();
            ext.insert((**a).clone());
            vec![vec![seq(goal, ctx(ext), (**b).clone())]]
        }
        (RuleId::LimpL, _) => {
            let mut out = Vec::new();
            for f in m.distinct() {
                let Formula::Limp(a, b) = f else { continue };
                let mut rest = m.clone();
                rest.remove(f);
                for (g, d) in rest.splits() {
                    let mut d = d;
                    d.insert((**b).clone());
                    out.push(vec![seq(goal, ctx(g), (**a).clone()), seq(goal, ctx(d), succ.clone())]);
                }
            }
            out
        }
        _ => vec![],
    }
}

fn tree_instances(goal: &Sequent, t: &Tree, rule: &RuleId) -> Vec<Vec<Sequent>> {
    if let Some(out) = whole_sequent_instances(goal, rule) {
        return out;
    }
    let succ = &goal.succedent;
    let ctx = |t: Tree| Context::Tree(t);
    if is_left_rewrite(rule) {
        let mut out = Vec::new();
        for (pos, f) in t.leaves() {
            let Some(rw) = left_rewrite(rule, f) else { continue };
            let with = match rw {
                LeftRewrite::Nothing => Tree::Empty,
                LeftRewrite::One(a) => Tree::Leaf(a),
                LeftRewrite::Par(a, b) => Tree::Par(vec![Tree::Leaf(a), Tree::Leaf(b)]),
                LeftRewrite::Ser(a, b) => Tree::Ser(vec![Tree::Leaf(a), Tree::Leaf(b)]),
            };
            let filled = t.fill(&pos, &with).expect("leaf position");
            push_unique(&mut out, vec![seq(goal, ctx(filled), succ.clone())]);
        }
        return out;
    }
    match (rule, succ) {
        (RuleId::TensorR, Formula::Tensor(a, b)) => split_instances(goal, t.split_parallel(), a, b),
        (RuleId::OdotR, Formula::Odot(a, b)) => split_instances(goal, t.split_serial(), a, b),
        (RuleId::BringsTensor(x), Formula::Brings(y, body)) if agent_is(x, y) => match &**body {
            Formula::Tensor(a, b) => brings_split_instances(goal, t.split_parallel(), y, a, b),
            _ => vec![],
        },
        (RuleId::BringsOdot(x), Formula::Brings(y, body)) if agent_is(x, y) => match &**body {
            Formula::Odot(a, b) => brings_split_instances(goal, t.split_serial(), y, a, b),
            _ => vec![],
        },
        (RuleId::LimpR, Formula::Limp(a, b)) => {
            vec![vec![seq(goal, ctx(Tree::par(vec![t.clone(), Tree::Leaf((**a).clone())])), (**b).clone())]]
        }
        (RuleId::LresR, Formula::Lres(a, b)) => {
            vec![vec![seq(goal, ctx(Tree::ser(vec![Tree::Leaf((**a).clone()), t.clone()])), (**b).clone())]]
        }
        (RuleId::RresR, Formula::Rres(b, a)) => {
            vec![vec![seq(goal, ctx(Tree::ser(vec![t.clone(), Tree::Leaf((**a).clone())])), (**b).clone())]]
        }
        (RuleId::LimpL, _) => tree_limp_left(goal, t),
        (RuleId::LresL, _) => tree_residual_left(goal, t, true),
        (RuleId::RresL, _) => tree_residual_left(goal, t, false),
        (RuleId::Ent, _) => {
            let (pre, _) = t.structural_preimages(DEFAULT_STRUCTURAL_BOUND);
            pre.into_iter()
                .filter(|p| p != t)
                .map(|p| vec![seq(goal, ctx(p), succ.clone())])
                .collect()
        }
        _ => vec![],
    }
}

fn push_unique(out: &mut Vec<Vec<Sequent>>, inst: Vec<Sequent>) {
    if !out.contains(&inst) {
        out.push(inst);
    }
}

fn split_instances(goal: &Sequent, splits: Vec<(Tree, Tree)>, a: &Formula, b: &Formula) -> Vec<Vec<Sequent>> {
    splits
        .into_iter()
        .map(|(l, r)| vec![seq(goal, Context::Tree(l), a.clone()), seq(goal, Context::Tree(r), b.clone())])
        .collect()
}

fn brings_split_instances(
    goal: &Sequent,
    splits: Vec<(Tree, Tree)>,
    agent: &str,
    a: &Formula,
    b: &Formula,
) -> Vec<Vec<Sequent>> {
    splits
        .into_iter()
        .map(|(l, r)| {
            vec![
                seq(goal, Context::Tree(l), Formula::brings(agent, a.clone())),
                seq(goal, Context::Tree(r), Formula::brings(agent, b.clone())),
            ]
        })
        .collect()
}

fn parent_of(pos: &Position) -> Option<(Position, usize)> {
    let mut p = pos.0.clone();
    let i = p.pop()?;
    Some((Position(p), i))
}

/// `Δ[Γ, A -o B]`: `Γ` is any group of the implication's `,` siblings.
fn tree_limp_left(goal: &Sequent, t: &Tree) -> Vec<Vec<Sequent>> {
    let mut out = Vec::new();
    for (pos, f) in t.leaves() {
        let Formula::Limp(a, b) = f else { continue };
        let b_leaf = Tree::Leaf((**b).clone());
        let parent = parent_of(&pos);
        let siblings = match &parent {
            Some((pp, i)) => match t.get(pp) {
                Some(Tree::Par(cs)) => Some((pp.clone(), *i, cs.clone())),
                _ => None,
            },
            None => None,
        };
        match siblings {
            Some((pp, i, cs)) => {
                let others: Vec<Tree> = cs.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, c)| c.clone()).collect();
                let n = others.len();
                for mask in 0u64..(1u64 << n) {
                    let (mut g, mut keep) = (Vec::new(), vec![b_leaf.clone()]);
                    for (j, c) in others.iter().enumerate() {
                        if mask & (1 << j) != 0 {
                            g.push(c.clone());
                        } else {
                            keep.push(c.clone());
                        }
                    }
                    let delta = t.fill(&pp, &Tree::Par(keep)).expect("parent position");
                    push_unique(
                        &mut out,
                        vec![
                            seq(goal, Context::Tree(Tree::par(g)), (**a).clone()),
                            seq(goal, Context::Tree(delta), goal.succedent.clone()),
                        ],
                    );
                }
            }
            None => {
                let delta = t.fill(&pos, &b_leaf).expect("leaf position");
                push_unique(
                    &mut out,
                    vec![
                        seq(goal, Context::Tree(Tree::Empty), (**a).clone()),
                        seq(goal, Context::Tree(delta), goal.succedent.clone()),
                    ],
                );
            }
        }
    }
    out
}

/// `Δ[Γ; A \ B]` (left) or `Δ[B / A; Γ]` (right): `Γ` is a run of `;` siblings.
fn tree_residual_left(goal: &Sequent, t: &Tree, left: bool) -> Vec<Vec<Sequent>> {
    let mut out = Vec::new();
    for (pos, f) in t.leaves() {
        let (a, b) = match (left, f) {
            (true, Formula::Lres(a, b)) => (a, b),
            (false, Formula::Rres(b, a)) => (a, b),
            _ => continue,
        };
        let b_leaf = Tree::Leaf((**b).clone());
        let serial = parent_of(&pos).and_then(|(pp, i)| match t.get(&pp) {
            Some(Tree::Ser(cs)) => Some((pp, i, cs.clone())),
            _ => None,
        });
        let runs: Vec<(Tree, Tree)> = match serial {
            Some((pp, i, cs)) => {
                let range: Vec<usize> = if left { (0..=i).collect() } else { (i + 1..=cs.len()).collect() };
                range
                    .into_iter()
                    .map(|j| {
                        let (gamma, mut rebuilt) = if left {
                            (cs[j..i].to_vec(), cs[..j].to_vec())
                        } else {
                            (cs[i + 1..j].to_vec(), cs[..i].to_vec())
                        };
                        rebuilt.push(b_leaf.clone());
                        if left {
                            rebuilt.extend(cs[i + 1..].iter().cloned());
                        } else {
                            rebuilt.extend(cs[j..].iter().cloned());
                        }
                        let delta = t.fill(&pp, &Tree::Ser(rebuilt)).expect("parent position");
                        (Tree::ser(gamma), delta)
                    })
                    .collect()
            }
            None => vec![(Tree::Empty, t.fill(&pos, &b_leaf).expect("leaf position"))],
        };
        for (gamma, delta) in runs {
            push_unique(
                &mut out,
                vec![
                    seq(goal, Context::Tree(gamma), (**a).clone()),
                    seq(goal, Context::Tree(delta), goal.succedent.clone()),
                ],
            );
        }
    }
    out
}

/// Antecedents obtained by plugging `prover` into one occurrence of `formula` in `user`.
pub fn cut_antecedents(user: &Context, formula: &Formula, prover: &Context) -> Vec<Context> {
    match (user, prover) {
        (Context::MSet(u), Context::MSet(p)) => {
            let mut rest = u.clone();
            if rest.remove(formula) {
                vec![Context::MSet(rest.union(p))]
            } else {
                vec![]
            }
        }
        (Context::Tree(u), Context::Tree(p)) => {
            let mut out: Vec<Context> = Vec::new();
            for (pos, f) in u.leaves() {
                if f == formula {
                    let c = Context::Tree(u.fill(&pos, p).expect("leaf position"));
                    if !out.contains(&c) {
                        out.push(c);
                    }
                }
            }
            out
        }
        _ => vec![],
    }
}

/// Checks one node against its premises; `None` when it is a correct instance.
pub fn check_node(p: &Proof) -> Option<String> {
    let goal = &p.conclusion;
    let sys = &goal.system;
    if let Err(e) = goal.validate() {
        return Some(format!("ill-formed conclusion: {e}"));
    }
    if !p.rule.admissible_in(sys.kind) {
        return Some(format!("rule {} is not part of {}", p.rule, sys.kind));
    }
    if let Some(a) = p.rule.agent() {
        if !sys.agents.contains(a) {
            return Some(format!("agent `{a}` is not in the alphabet"));
        }
    }
    if p.premises.iter().any(|q| q.conclusion.system != *sys) {
        return Some("premise belongs to a different system".into());
    }
    let arity = match &p.rule {
        RuleId::Ax | RuleId::OneR => 0,
        RuleId::Cut
        | RuleId::TensorR
        | RuleId::LimpL
        | RuleId::WithR
        | RuleId::BoxRe
        | RuleId::OdotR
        | RuleId::LresL
        | RuleId::RresL
        | RuleId::BringsRe(_)
        | RuleId::BringsTensor(_)
        | RuleId::BringsWith(_)
        | RuleId::BringsOdot(_) => 2,
        _ => 1,
    };
    if p.premises.len() != arity {
        if matches!(p.rule, RuleId::BoxRe | RuleId::BringsRe(_)) && p.premises.len() == 1 {
            return Some("missing converse premise".into());
        }
        return Some(format!("expected {arity} premises, found {}", p.premises.len()));
    }
    let premises: Vec<Sequent> = p.premises.iter().map(|q| q.conclusion.clone()).collect();
    if p.rule == RuleId::Cut {
        return check_cut(goal, &premises[0], &premises[1]);
    }
    if apply_direct(goal, &p.rule).contains(&premises) {
        return None;
    }
    if let Context::Tree(t) = &goal.antecedent {
        if p.rule != RuleId::Ent {
            let (pre, _) = t.structural_preimages(DEFAULT_STRUCTURAL_BOUND);
            for c in pre.into_iter().skip(1) {
                let g = goal.with_context(Context::Tree(c), goal.succedent.clone());
                if apply_direct(&g, &p.rule).contains(&premises) {
                    return None;
                }
            }
        }
    }
    Some(mismatch_reason(&p.rule))
}

fn mismatch_reason(rule: &RuleId) -> String {
    match rule {
        RuleId::NotNec(_) => "premise must be `|- A` and the conclusion `E[a]A |- bot`".into(),
        RuleId::BoxRe | RuleId::BringsRe(_) => "premises must be the singleton sequents A |- B and B |- A".into(),
        RuleId::Ent => "premise antecedent is not an entropy preimage of the conclusion".into(),
        r => format!("premises are not an instance of {r} for this conclusion"),
    }
}

fn check_cut(goal: &Sequent, prover: &Sequent, user: &Sequent) -> Option<String> {
    if user.succedent != goal.succedent {
        return Some("cut conclusion succedent differs from the second premise".into());
    }
    let candidates = cut_antecedents(&user.antecedent, &prover.succedent, &prover.antecedent);
    if candidates.is_empty() {
        return Some(format!("cut formula {} does not occur in the second premise", prover.succedent));
    }
    if candidates.contains(&goal.antecedent) {
        return None;
    }
    if let Context::Tree(t) = &goal.antecedent {
        let (pre, _) = t.structural_preimages(DEFAULT_STRUCTURAL_BOUND);
        if pre.into_iter().any(|c| candidates.contains(&Context::Tree(c))) {
            return None;
        }
    }
    Some("conclusion antecedent is not the cut composition of the premises".into())
}

/// Checks every node; an empty list means the proof is correct.
pub fn check_proof(p: &Proof) -> Vec<Violation> {
    let mut out = Vec::new();
    p.walk(&mut |path, node| {
        if let Some(reason) = check_node(node) {
            out.push(Violation { path: path.to_vec(), rule: node.rule.to_string(), reason });
        }
    });
    out
}

pub fn cut_count(p: &Proof) -> usize {
    p.cut_count()
}

pub fn cutrank(p: &Proof) -> usize {
    p.cutrank()
}

/// Formulas occurring anywhere in the proof that are not subformulas of its end sequent.
pub fn foreign_formulas(p: &Proof) -> Vec<(Vec<usize>, Formula)> {
    let allowed = p.conclusion.subformulas();
    let mut out = Vec::new();
    p.walk(&mut |path, node| {
        for f in node.conclusion.formulas() {
            if !allowed.contains(f) {
                out.push((path.to_vec(), f.clone()));
            }
        }
    });
    out
}
