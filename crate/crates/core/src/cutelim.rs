//! Cut elimination by local rewriting.
//!
//! Each step picks a topmost cut (both premises cut-free) of maximal rank,
//! leftmost among equals, and rewrites it by the first applicable case:
//!
//! 1. axiom: one premise is an axiom, the cut disappears;
//! 2. principal: the cut formula is introduced on both sides, the cut is
//!    replaced by cuts on proper subformulas;
//! 3. the cut is pushed into the premises of the second (user) premise's rule;
//! 4. the cut is pushed into the first (prover) premise's rule.
//!
//! Rewritten nodes are rebuilt without rule-instance data and re-checked
//! locally, so every step yields a correct proof. See `docs/cut-elimination.md`
//! for the case table. Termination is measured by the multiset of
//! `(rank, level)` pairs of all cuts, where `level` is the sum of the premise
//! heights of a topmost cut and infinite for the others.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::calculus::{check_node, cut_antecedents, Proof, ProofFormatError, RuleId};
use crate::context::{Context, Sequent};
use crate::syntax::{Formula, SystemId};

/// Default cap on rewrite steps.
pub const DEFAULT_STEP_CAP: usize = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StepKind {
    Axiom,
    Principal,
    PermuteUser,
    PermuteProver,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReductionStep {
    pub kind: StepKind,
    pub formula: Formula,
    /// Path of the reduced cut in the proof before the step.
    pub path: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReductionTrace {
    pub steps: Vec<ReductionStep>,
    pub final_proof: Proof,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CutElimError {
    #[error("input proof does not check: {0}")]
    Invalid(String),
    /// No rewrite case applies to this cut.
    #[error("cut on {formula} at {path:?} between {prover} and {user} has no reduction")]
    Irreducible { path: Vec<usize>, formula: Formula, prover: RuleId, user: RuleId },
    #[error("no cut-free proof after {0} steps")]
    StepLimit(usize),
}

/// `(rank, level)` of every cut, sorted in decreasing order.
///
/// Comparing these vectors lexicographically is the multiset ordering.
pub fn measure(p: &Proof) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    p.walk(&mut |_, node| {
        if node.rule == RuleId::Cut {
            let rank = node.cut_formula().map_or(0, Formula::complexity);
            let level = if node.premises.iter().all(Proof::is_cut_free) {
                node.premises.iter().map(Proof::height).sum()
            } else {
                usize::MAX
            };
            out.push((rank, level));
        }
    });
    out.sort_unstable_by(|a, b| b.cmp(a));
    out
}

/// Path of the cut reduced next: topmost, maximal rank, leftmost.
pub fn next_cut(p: &Proof) -> Option<Vec<usize>> {
    let mut best: Option<(usize, Vec<usize>)> = None;
    p.walk(&mut |path, node| {
        if node.rule == RuleId::Cut && node.premises.iter().all(Proof::is_cut_free) {
            let rank = node.cut_formula().map_or(0, Formula::complexity);
            if best.as_ref().map_or(true, |(r, _)| rank > *r) {
                best = Some((rank, path.to_vec()));
            }
        }
    });
    best.map(|(_, path)| path)
}

/// Performs one rewrite step; `Ok(None)` when `p` is cut-free.
pub fn reduce_once(p: &Proof) -> Result<Option<(Proof, ReductionStep)>, CutElimError> {
    let Some(path) = next_cut(p) else { return Ok(None) };
    let node = p.get(&path).expect("path from walk");
    let formula = node.cut_formula().expect("cut node").clone();
    match reduce_cut(node) {
        Some((q, kind)) => {
            let out = p.replace(&path, q).expect("path from walk");
            Ok(Some((out, ReductionStep { kind, formula, path })))
        }
        None => Err(CutElimError::Irreducible {
            path,
            formula,
            prover: node.premises[0].rule.clone(),
            user: node.premises[1].rule.clone(),
        }),
    }
}

pub fn eliminate_cuts(p: &Proof) -> Result<ReductionTrace, CutElimError> {
    eliminate_cuts_with_cap(p, DEFAULT_STEP_CAP)
}

pub fn eliminate_cuts_with_cap(p: &Proof, cap: usize) -> Result<ReductionTrace, CutElimError> {
    let violations = crate::calculus::check_proof(p);
    if let Some(v) = violations.first() {
        return Err(CutElimError::Invalid(v.to_string()));
    }
    let mut cur = p.clone();
    let mut steps = Vec::new();
    while let Some((next, step)) = reduce_once(&cur)? {
        debug_assert!(measure(&next) < measure(&cur), "measure must drop at {:?}", step);
        steps.push(step);
        cur = next;
        if steps.len() >= cap && !cur.is_cut_free() {
            return Err(CutElimError::StepLimit(cap));
        }
    }
    Ok(ReductionTrace { steps, final_proof: cur })
}

fn reduce_cut(node: &Proof) -> Option<(Proof, StepKind)> {
    let s = &node.conclusion;
    let (prover, user) = (&node.premises[0], &node.premises[1]);
    if prover.rule == RuleId::Ax {
        if let Some(q) = retarget(user, s) {
            return Some((q, StepKind::Axiom));
        }
    }
    if user.rule == RuleId::Ax {
        if let Some(q) = retarget(prover, s) {
            return Some((q, StepKind::Axiom));
        }
    }
    if let Some(q) = principal(s, prover, user) {
        return Some((q, StepKind::Principal));
    }
    if let Some(q) = permute_user(s, prover, user) {
        return Some((q, StepKind::PermuteUser));
    }
    if let Some(q) = permute_prover(s, prover, user) {
        return Some((q, StepKind::PermuteProver));
    }
    None
}

/// `p` with conclusion `s`, relying on entropy when the two differ.
fn retarget(p: &Proof, s: &Sequent) -> Option<Proof> {
    if p.conclusion == *s {
        return Some(p.clone());
    }
    let mut q = p.clone();
    q.conclusion = s.clone();
    if check_node(&q).is_none() {
        return Some(q);
    }
    node(s, RuleId::Ent, vec![p.clone()])
}

fn node(s: &Sequent, rule: RuleId, premises: Vec<Proof>) -> Option<Proof> {
    let q = Proof::new(s.clone(), rule, premises);
    check_node(&q).is_none().then_some(q)
}

/// Cut nodes of `prover` into each occurrence of its succedent in `user`.
fn cuts(prover: &Proof, user: &Proof) -> Vec<Proof> {
    cut_antecedents(&user.conclusion.antecedent, &prover.conclusion.succedent, &prover.conclusion.antecedent)
        .into_iter()
        .map(|ant| {
            let concl = user.conclusion.with_context(ant, user.conclusion.succedent.clone());
            Proof::new(concl, RuleId::Cut, vec![prover.clone(), user.clone()])
        })
        .collect()
}

fn first_retarget(candidates: Vec<Proof>, s: &Sequent) -> Option<Proof> {
    candidates.iter().find_map(|c| retarget(c, s))
}

/// `E[a]X |- X` by reflexivity over an axiom.
fn refl_axiom(system: &Arc<SystemId>, agent: &str, x: &Formula) -> Proof {
    let single = |f: Formula| Context::singleton_for(system, f);
    let ax = Proof::leaf(Sequent::new(single(x.clone()), x.clone(), system.clone()), RuleId::Ax);
    Proof::new(
        Sequent::new(single(Formula::brings(agent, x.clone())), x.clone(), system.clone()),
        RuleId::BringsRefl(agent.to_string()),
        vec![ax],
    )
}

fn principal(s: &Sequent, p: &Proof, u: &Proof) -> Option<Proof> {
    use RuleId::*;
    let pp = &p.premises;
    let up = &u.premises;
    match (&p.rule, &u.rule) {
        (TensorR, TensorL) | (OdotR, OdotL) => {
            let mut out = Vec::new();
            for inner in cuts(&pp[1], &up[0]) {
                out.extend(cuts(&pp[0], &inner));
            }
            first_retarget(out, s)
        }
        (LimpR, LimpL) | (LresR, LresL) | (RresR, RresL) => {
            let mut out = Vec::new();
            for inner in cuts(&up[0], &pp[0]) {
                out.extend(cuts(&inner, &up[1]));
            }
            first_retarget(out, s)
        }
        (WithR, WithL1) => first_retarget(cuts(&pp[0], &up[0]), s),
        (WithR, WithL2) => first_retarget(cuts(&pp[1], &up[0]), s),
        (OneR, OneL) => retarget(&up[0], s),
        (BoxRe, BoxRe) => {
            let forward = cuts(&pp[0], &up[0]).into_iter().next()?;
            let backward = cuts(&up[1], &pp[1]).into_iter().next()?;
            node(s, BoxRe, vec![forward, backward])
        }
        (BringsRe(a), BringsRe(b)) if a == b => {
            let forward = cuts(&pp[0], &up[0]).into_iter().next()?;
            let backward = cuts(&up[1], &pp[1]).into_iter().next()?;
            node(s, BringsRe(a.clone()), vec![forward, backward])
        }
        (BringsRe(a), BringsRefl(b)) if a == b => {
            cuts(&pp[0], &up[0]).into_iter().find_map(|c| node(s, BringsRefl(a.clone()), vec![c]))
        }
        (BringsRe(a), NotNec(b)) if a == b => {
            let c = cuts(&up[0], &pp[1]).into_iter().next()?;
            node(s, NotNec(a.clone()), vec![c])
        }
        (BringsTensor(a), BringsRefl(b)) | (BringsOdot(a), BringsRefl(b)) | (BringsWith(a), BringsRefl(b))
            if a == b =>
        {
            let Formula::Brings(_, body) = &p.conclusion.succedent else { return None };
            let (x, y, combine) = match (&p.rule, &**body) {
                (BringsTensor(_), Formula::Tensor(x, y)) => (x, y, TensorR),
                (BringsOdot(_), Formula::Odot(x, y)) => (x, y, OdotR),
                (BringsWith(_), Formula::With(x, y)) => (x, y, WithR),
                _ => return None,
            };
            let sys = p.system();
            let q1 = cuts(&pp[0], &refl_axiom(sys, a, x)).into_iter().next()?;
            let q2 = cuts(&pp[1], &refl_axiom(sys, a, y)).into_iter().next()?;
            let joined = node(
                &p.conclusion.with_context(p.conclusion.antecedent.clone(), (**body).clone()),
                combine,
                vec![q1, q2],
            )?;
            first_retarget(cuts(&joined, &up[0]), s)
        }
        (BringsWith(a), NotNec(b)) if a == b => {
            let w = &up[0];
            if w.rule != WithR {
                return None;
            }
            (0..2).find_map(|i| {
                let nn = node(
                    &Sequent::new(
                        Context::singleton_for(p.system(), pp[i].conclusion.succedent.clone()),
                        Formula::bot(),
                        p.system().clone(),
                    ),
                    NotNec(a.clone()),
                    vec![w.premises[i].clone()],
                )?;
                first_retarget(cuts(&pp[i], &nn), s)
            })
        }
        _ => None,
    }
}

fn is_axiom_like(rule: &RuleId) -> bool {
    matches!(rule, RuleId::Ax | RuleId::OneR | RuleId::BoxRe | RuleId::BringsRe(_) | RuleId::NotNec(_))
}

fn permute_user(s: &Sequent, p: &Proof, u: &Proof) -> Option<Proof> {
    if is_axiom_like(&u.rule) {
        return None;
    }
    let shared = matches!(u.rule, RuleId::WithR | RuleId::BringsWith(_));
    if shared {
        let left = cuts(p, &u.premises[0]);
        let right = cuts(p, &u.premises[1]);
        for l in &left {
            for r in &right {
                if let Some(q) = node(s, u.rule.clone(), vec![l.clone(), r.clone()]) {
                    return Some(q);
                }
            }
        }
        return None;
    }
    for (i, ui) in u.premises.iter().enumerate() {
        for c in cuts(p, ui) {
            let mut premises = u.premises.clone();
            premises[i] = c.clone();
            if let Some(q) = node(s, u.rule.clone(), premises) {
                return Some(q);
            }
            if u.rule == RuleId::Ent {
                if let Some(q) = retarget(&c, s) {
                    return Some(q);
                }
            }
        }
    }
    None
}

fn is_right_rule(rule: &RuleId) -> bool {
    use RuleId::*;
    matches!(
        rule,
        TensorR
            | LimpR
            | WithR
            | OneR
            | OdotR
            | LresR
            | RresR
            | BoxRe
            | BringsRe(_)
            | BringsTensor(_)
            | BringsWith(_)
            | BringsOdot(_)
    )
}

fn permute_prover(s: &Sequent, p: &Proof, u: &Proof) -> Option<Proof> {
    if is_right_rule(&p.rule) || p.rule == RuleId::Ax {
        return None;
    }
    let a = &p.conclusion.succedent;
    for (i, pi) in p.premises.iter().enumerate() {
        if pi.conclusion.succedent != *a {
            continue;
        }
        for c in cuts(pi, u) {
            let mut premises = p.premises.clone();
            premises[i] = c.clone();
            if let Some(q) = node(s, p.rule.clone(), premises) {
                return Some(q);
            }
            if p.rule == RuleId::Ent {
                if let Some(q) = retarget(&c, s) {
                    return Some(q);
                }
            }
        }
    }
    None
}

#[derive(Serialize, Deserialize)]
struct TraceFile {
    steps: Vec<StepJson>,
    #[serde(rename = "final")]
    final_proof: serde_json::Value,
}

#[derive(Serialize, Deserialize)]
struct StepJson {
    kind: StepKind,
    formula: String,
    path: Vec<usize>,
}

impl ReductionTrace {
    /// The final proof in proof-file form plus the step log.
    pub fn to_json(&self) -> String {
        let file = TraceFile {
            steps: self
                .steps
                .iter()
                .map(|s| StepJson { kind: s.kind, formula: s.formula.to_string(), path: s.path.clone() })
                .collect(),
            final_proof: serde_json::from_str(&self.final_proof.to_json()).expect("proof json"),
        };
        serde_json::to_string_pretty(&file).expect("trace serializes")
    }

    pub fn from_json(text: &str) -> Result<ReductionTrace, ProofFormatError> {
        let file: TraceFile = serde_json::from_str(text)?;
        let final_proof = Proof::from_json(&file.final_proof.to_string())?;
        let steps = file
            .steps
            .into_iter()
            .map(|s| {
                Ok(ReductionStep { kind: s.kind, formula: s.formula.parse()?, path: s.path })
            })
            .collect::<Result<_, ProofFormatError>>()?;
        Ok(ReductionTrace { steps, final_proof })
    }
}

/// Rebuilds every sequent of `p` over `system` (a superset alphabet).
pub fn rehome(p: &Proof, system: &Arc<SystemId>) -> Proof {
    Proof {
        conclusion: Sequent::new(p.conclusion.antecedent.clone(), p.conclusion.succedent.clone(), system.clone()),
        rule: p.rule.clone(),
        premises: p.premises.iter().map(|q| rehome(q, system)).collect(),
    }
}

/// Every subproof of every proof in `proofs`, each once.
pub fn subproof_pool(proofs: &[Proof]) -> Vec<Proof> {
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::new();
    for p in proofs {
        p.walk(&mut |_, q| {
            if seen.insert(q.conclusion.clone()) {
                out.push(q.clone());
            }
        });
    }
    out
}

/// Random proof with cuts built from `pool` (cut-free proofs over one system).
///
/// A user proof is drawn from the pool and one formula of its antecedent is
/// cut against a pool proof of that formula; the result is reused as prover
/// or user for up to `rounds` further cuts. `None` when nothing matches.
pub fn compose_random<R: Rng>(rng: &mut R, pool: &[Proof], rounds: usize) -> Option<Proof> {
    let mut users: Vec<&Proof> = pool.iter().filter(|p| !p.conclusion.antecedent.is_empty()).collect();
    users.shuffle(rng);
    let mut current = None;
    for user in users {
        if let Some(c) = cut_with_pool(rng, pool, user) {
            current = Some(c);
            break;
        }
    }
    let mut current = current?;
    for _ in 0..rounds {
        let next = if rng.gen_bool(0.5) {
            cut_with_pool(rng, pool, &current)
        } else {
            let mut users: Vec<&Proof> = pool.iter().collect();
            users.shuffle(rng);
            users.into_iter().find_map(|u| {
                let c = cuts(&current, u);
                c.choose(rng).cloned()
            })
        };
        match next {
            Some(n) => current = n,
            None => break,
        }
    }
    Some(current)
}

fn cut_with_pool<R: Rng>(rng: &mut R, pool: &[Proof], user: &Proof) -> Option<Proof> {
    let mut formulas: Vec<&Formula> = user.conclusion.antecedent.formulas();
    formulas.shuffle(rng);
    for f in formulas {
        let provers: Vec<&Proof> = pool.iter().filter(|p| p.conclusion.succedent == *f).collect();
        if let Some(prover) = provers.choose(rng) {
            let options = cuts(prover, user);
            if let Some(c) = options.choose(rng) {
                return Some(c.clone());
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::check_proof;
    use crate::context::parse_sequent;
    use crate::search::{prove, subformula_audit, SearchBudget};

    fn sq(t: &str, s: &SystemId) -> Sequent {
        parse_sequent(t, s).unwrap()
    }

    fn ax(t: &str, s: &SystemId) -> Proof {
        Proof::leaf(sq(t, s), RuleId::Ax)
    }

    fn proved(t: &str, s: &SystemId) -> Proof {
        prove(&sq(t, s), &SearchBudget::default()).proof().expect("provable").clone()
    }

    fn assert_eliminates(p: &Proof) -> ReductionTrace {
        assert!(check_proof(p).is_empty(), "{:?}", check_proof(p));
        let t = eliminate_cuts(p).unwrap();
        assert!(t.final_proof.is_cut_free());
        assert_eq!(t.final_proof.conclusion, p.conclusion);
        assert!(check_proof(&t.final_proof).is_empty());
        assert!(subformula_audit(&t.final_proof).is_empty());
        t
    }

    #[test]
    fn axiom_cut_vanishes() {
        let mill = SystemId::mill();
        let user = proved("p * q |- q * p", &mill);
        let p = Proof::new(user.conclusion.clone(), RuleId::Cut, vec![ax("p * q |- p * q", &mill), user.clone()]);
        let t = assert_eliminates(&p);
        assert_eq!(t.steps.len(), 1);
        assert_eq!(t.steps[0].kind, StepKind::Axiom);
        assert_eq!(t.final_proof, user);
    }

    #[test]
    fn tensor_principal_drops_measure() {
        let mill = SystemId::mill();
        let prover = proved("p, q |- p * q", &mill);
        let user = proved("p * q |- q * p", &mill);
        let p = Proof::new(sq("p, q |- q * p", &mill), RuleId::Cut, vec![prover, user]);
        let (q, step) = reduce_once(&p).unwrap().unwrap();
        assert_eq!(step.kind, StepKind::Principal);
        assert!(measure(&q) < measure(&p));
        assert!(check_proof(&q).is_empty());
        assert_eq!(q.cutrank(), 1);
        assert_eliminates(&p);
    }

    #[test]
    fn idempotent_on_cut_free() {
        let mill = SystemId::mill();
        let p = proved("p * q |- q * p", &mill);
        let t = eliminate_cuts(&p).unwrap();
        assert!(t.steps.is_empty());
        assert_eq!(t.final_proof, p);
    }

    #[test]
    fn brings_tensor_against_refl() {
        let r: SystemId = "RSBIAT[a]".parse().unwrap();
        let prover = proved("E[a]p, E[a]q |- E[a](p * q)", &r);
        let user = proved("E[a](p * q) |- q * p", &r);
        let p = Proof::new(sq("E[a]p, E[a]q |- q * p", &r), RuleId::Cut, vec![prover, user]);
        assert_eliminates(&p);
    }

    #[test]
    fn permutation_with_duplication() {
        let mill = SystemId::mill();
        let prover = proved("p * q |- q * p", &mill);
        let user = proved("q * p, r |- (r * q * p) & (r * (q * p))", &mill);
        let p = Proof::new(sq("p * q, r |- (r * q * p) & (r * (q * p))", &mill), RuleId::Cut, vec![prover, user]);
        assert_eliminates(&p);
    }

    #[test]
    fn tree_system_cut() {
        let s: SystemId = "SRSBIAT[i,s]".parse().unwrap();
        let prover = proved("S; E[i]F |- S @ F", &s);
        let user = proved("S @ F; E[s]((S@F)\\T) |- T", &s);
        let p = Proof::new(sq("S; E[i]F; E[s]((S@F)\\T) |- T", &s), RuleId::Cut, vec![prover, user]);
        assert_eliminates(&p);
    }

    #[test]
    fn brings_tensor_against_not_nec_is_irreducible() {
        let r: SystemId = "RSBIAT[a]".parse().unwrap();
        let prover = proved("E[a](p -o p), E[a](p -o p) |- E[a]((p -o p) * (p -o p))", &r);
        let user = proved("E[a]((p -o p) * (p -o p)) |- bot", &r);
        let goal = sq("E[a](p -o p), E[a](p -o p) |- bot", &r);
        let p = Proof::new(goal.clone(), RuleId::Cut, vec![prover, user]);
        assert!(check_proof(&p).is_empty());
        assert!(matches!(eliminate_cuts(&p), Err(CutElimError::Irreducible { .. })));
        assert!(!prove(&goal, &SearchBudget::default()).is_proved());
    }

    #[test]
    fn brings_tensor_against_brings_re_is_irreducible() {
        let r: SystemId = "RSBIAT[a]".parse().unwrap();
        let prover = proved("E[a]p, E[a]q |- E[a](p * q)", &r);
        let user = proved("E[a](p * q) |- E[a](1 * (p * q))", &r);
        let goal = sq("E[a]p, E[a]q |- E[a](1 * (p * q))", &r);
        let p = Proof::new(goal.clone(), RuleId::Cut, vec![prover, user]);
        assert!(check_proof(&p).is_empty());
        assert!(matches!(eliminate_cuts(&p), Err(CutElimError::Irreducible { .. })));
        assert!(!prove(&goal, &SearchBudget::default()).is_proved());
    }

    #[test]
    fn trace_json_round_trip() {
        let mill = SystemId::mill();
        let prover = proved("p, q |- p * q", &mill);
        let user = proved("p * q |- q * p", &mill);
        let p = Proof::new(sq("p, q |- q * p", &mill), RuleId::Cut, vec![prover, user]);
        let t = eliminate_cuts(&p).unwrap();
        let text = t.to_json();
        assert_eq!(ReductionTrace::from_json(&text).unwrap(), t);
    }
}
