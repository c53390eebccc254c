//! Hilbert-style deductions for H-MILL and H-RSBIAT.
//!
//! A deduction node records its conclusion `Γ |- A` (Γ a multiset of
//! assumption occurrences) next to its rule, so a loaded file can be checked
//! node by node.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, OnceLock};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::calculus::{Proof, RuleId};
use crate::context::{parse_sequent_arc, Context, Multiset, Sequent};
use crate::search::{prove, SearchBudget};
use crate::syntax::{Formula, ParseError, SystemId, SystemKind};

pub struct AxiomSchema {
    pub name: &'static str,
    /// Metavariables are the atoms `A`, `B`, `C`; the agent `a` is a metavariable too.
    pub template: Formula,
    pub needs_agents: bool,
}

const SCHEMATA: [(&str, &str, bool); 13] = [
    ("identity", "A -o A", false),
    ("composition", "(A -o B) -o ((B -o C) -o (A -o C))", false),
    ("permutation", "(A -o (B -o C)) -o (B -o (A -o C))", false),
    ("tensor-intro", "A -o (B -o A * B)", false),
    ("tensor-elim", "(A -o (B -o C)) -o (A * B -o C)", false),
    ("one", "1", false),
    ("one-elim", "1 -o (A -o A)", false),
    ("with-left", "A & B -o A", false),
    ("with-right", "A & B -o B", false),
    ("with-intro", "(A -o B) & (A -o C) -o (A -o B & C)", false),
    ("brings-refl", "E[a]A -o A", true),
    ("brings-tensor", "E[a]A * E[a]B -o E[a](A * B)", true),
    ("brings-with", "E[a]A & E[a]B -o E[a](A & B)", true),
];

const METAVARS: [&str; 3] = ["A", "B", "C"];
const AGENT_VAR: &str = "a";

pub fn schemata() -> &'static [AxiomSchema] {
    static LIST: OnceLock<Vec<AxiomSchema>> = OnceLock::new();
    LIST.get_or_init(|| {
        SCHEMATA
            .iter()
            .map(|&(name, text, needs_agents)| AxiomSchema {
                name,
                template: text.parse().expect("schema parses"),
                needs_agents,
            })
            .collect()
    })
}

pub fn schema(name: &str) -> Option<&'static AxiomSchema> {
    schemata().iter().find(|s| s.name == name)
}

/// Whether `system` has a Hilbert presentation here.
pub fn has_hilbert(system: &SystemId) -> bool {
    matches!(system.kind, SystemKind::Mill | SystemKind::Rsbiat)
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Substitution {
    pub formulas: BTreeMap<String, Formula>,
    pub agent: Option<String>,
}

impl Substitution {
    pub fn apply(&self, f: &Formula) -> Formula {
        match f {
            Formula::Unit => Formula::Unit,
            Formula::Atom(n) => self.formulas.get(&**n).cloned().unwrap_or_else(|| f.clone()),
            Formula::Tensor(l, r) => Formula::tensor(self.apply(l), self.apply(r)),
            Formula::With(l, r) => Formula::with(self.apply(l), self.apply(r)),
            Formula::Limp(l, r) => Formula::limp(self.apply(l), self.apply(r)),
            Formula::Odot(l, r) => Formula::odot(self.apply(l), self.apply(r)),
            Formula::Lres(l, r) => Formula::lres(self.apply(l), self.apply(r)),
            Formula::Rres(l, r) => Formula::rres(self.apply(l), self.apply(r)),
            Formula::Box(b) => Formula::boxed(self.apply(b)),
            Formula::Brings(a, b) => {
                let agent = match (&self.agent, &**a) {
                    (Some(x), AGENT_VAR) => x.as_str(),
                    _ => a,
                };
                Formula::brings(agent, self.apply(b))
            }
        }
    }
}

fn unify(pattern: &Formula, f: &Formula, sub: &mut Substitution) -> bool {
    match (pattern, f) {
        (Formula::Atom(n), _) if METAVARS.contains(&&**n) => match sub.formulas.get(&**n) {
            Some(bound) => bound == f,
            None => {
                sub.formulas.insert(n.to_string(), f.clone());
                true
            }
        },
        (Formula::Unit, Formula::Unit) => true,
        (Formula::Tensor(a, b), Formula::Tensor(c, d))
        | (Formula::With(a, b), Formula::With(c, d))
        | (Formula::Limp(a, b), Formula::Limp(c, d)) => unify(a, c, sub) && unify(b, d, sub),
        (Formula::Box(a), Formula::Box(b)) => unify(a, b, sub),
        (Formula::Brings(x, a), Formula::Brings(y, b)) => {
            let ok = match &sub.agent {
                Some(bound) => bound == &**y,
                None => {
                    sub.agent = Some(y.to_string());
                    true
                }
            };
            debug_assert_eq!(&**x, AGENT_VAR);
            ok && unify(a, b, sub)
        }
        _ => false,
    }
}

/// First schema (in table order) of which `f` is an instance in `system`.
pub fn match_axiom(f: &Formula, system: &SystemId) -> Option<(&'static str, Substitution)> {
    if !has_hilbert(system) || f.validate(system).is_err() {
        return None;
    }
    schemata().iter().filter(|s| !s.needs_agents || system.kind.has_agents()).find_map(|s| {
        let mut sub = Substitution::default();
        unify(&s.template, f, &mut sub).then_some((s.name, sub))
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum HRule {
    Assumption,
    Axiom,
    /// Premises: minor `Γ |- A`, major `Γ' |- A -o B`.
    Mp,
    With,
    BoxRe,
    BringsRe(String),
    NotNec(String),
}

impl fmt::Display for HRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HRule::Assumption => write!(f, "assumption"),
            HRule::Axiom => write!(f, "axiom"),
            HRule::Mp => write!(f, "mp"),
            HRule::With => write!(f, "with"),
            HRule::BoxRe => write!(f, "box-re"),
            HRule::BringsRe(a) => write!(f, "brings-re({a})"),
            HRule::NotNec(a) => write!(f, "not-nec({a})"),
        }
    }
}

impl FromStr for HRule {
    type Err = HilbertError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let agent = |prefix: &str| {
            s.strip_prefix(prefix).and_then(|r| r.strip_prefix('(')).and_then(|r| r.strip_suffix(')')).map(str::to_string)
        };
        Ok(match s {
            "assumption" => HRule::Assumption,
            "axiom" => HRule::Axiom,
            "mp" => HRule::Mp,
            "with" => HRule::With,
            "box-re" => HRule::BoxRe,
            _ => {
                if let Some(a) = agent("brings-re") {
                    HRule::BringsRe(a)
                } else if let Some(a) = agent("not-nec") {
                    HRule::NotNec(a)
                } else {
                    return Err(HilbertError::UnknownRule(s.to_string()));
                }
            }
        })
    }
}

#[derive(Debug, Error)]
pub enum HilbertError {
    #[error("unknown deduction rule '{0}'")]
    UnknownRule(String),
    #[error("ill-formed {rule} step: {reason}")]
    Shape { rule: HRule, reason: String },
    #[error("no assumption occurrence at {0:?}")]
    OccurrenceNotFound(Vec<usize>),
    #[error("malformed deduction file: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Parse(#[from] ParseError),
}

/// A failed check at one deduction node.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct HilbertViolation {
    pub path: Vec<usize>,
    pub rule: String,
    pub reason: String,
}

impl fmt::Display for HilbertViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "at {:?} ({}): {}", self.path, self.rule, self.reason)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Deduction {
    pub conclusion: Sequent,
    pub rule: HRule,
    pub premises: Vec<Deduction>,
}

fn assumptions(s: &Sequent) -> Multiset {
    match &s.antecedent {
        Context::MSet(m) => m.clone(),
        Context::Tree(t) => Multiset::new(t.formulas().into_iter().cloned().collect()),
    }
}

fn shape(rule: HRule, reason: impl Into<String>) -> HilbertError {
    HilbertError::Shape { rule, reason: reason.into() }
}

impl Deduction {
    fn make(system: &Arc<SystemId>, gamma: Multiset, a: Formula, rule: HRule, premises: Vec<Deduction>) -> Deduction {
        Deduction { conclusion: Sequent::new(Context::MSet(gamma), a, system.clone()), rule, premises }
    }

    pub fn system(&self) -> &Arc<SystemId> {
        &self.conclusion.system
    }

    pub fn assumptions(&self) -> Multiset {
        assumptions(&self.conclusion)
    }

    pub fn formula(&self) -> &Formula {
        &self.conclusion.succedent
    }

    pub fn assumption(system: &Arc<SystemId>, a: Formula) -> Deduction {
        Deduction::make(system, Multiset::singleton(a.clone()), a, HRule::Assumption, vec![])
    }

    pub fn axiom(system: &Arc<SystemId>, b: Formula) -> Result<Deduction, HilbertError> {
        if match_axiom(&b, system).is_none() {
            return Err(shape(HRule::Axiom, format!("{b} is not an axiom of H-{}", system.kind.name())));
        }
        Ok(Deduction::make(system, Multiset::empty(), b, HRule::Axiom, vec![]))
    }

    /// Axiom leaf for schema `name` under `sub`.
    pub fn axiom_instance(system: &Arc<SystemId>, name: &str, sub: &Substitution) -> Result<Deduction, HilbertError> {
        let s = schema(name).ok_or_else(|| shape(HRule::Axiom, format!("no schema {name}")))?;
        Deduction::axiom(system, sub.apply(&s.template))
    }

    pub fn mp(minor: Deduction, major: Deduction) -> Result<Deduction, HilbertError> {
        let Formula::Limp(x, b) = major.formula() else {
            return Err(shape(HRule::Mp, format!("major premise {} is not an implication", major.formula())));
        };
        if **x != *minor.formula() {
            return Err(shape(HRule::Mp, format!("minor premise proves {} not {x}", minor.formula())));
        }
        let gamma = minor.assumptions().union(&major.assumptions());
        let b = (**b).clone();
        Ok(Deduction::make(&minor.system().clone(), gamma, b, HRule::Mp, vec![minor, major]))
    }

    pub fn with(left: Deduction, right: Deduction) -> Result<Deduction, HilbertError> {
        if left.assumptions() != right.assumptions() {
            return Err(shape(HRule::With, "premises have different assumptions"));
        }
        let f = Formula::with(left.formula().clone(), right.formula().clone());
        Ok(Deduction::make(&left.system().clone(), left.assumptions(), f, HRule::With, vec![left, right]))
    }

    pub fn box_re(forward: Deduction, backward: Deduction) -> Result<Deduction, HilbertError> {
        let (a, b) = equivalence(HRule::BoxRe, &forward, &backward)?;
        let f = Formula::limp(Formula::boxed(a), Formula::boxed(b));
        Ok(Deduction::make(&forward.system().clone(), Multiset::empty(), f, HRule::BoxRe, vec![forward, backward]))
    }

    pub fn brings_re(agent: &str, forward: Deduction, backward: Deduction) -> Result<Deduction, HilbertError> {
        let rule = HRule::BringsRe(agent.to_string());
        let (a, b) = equivalence(rule.clone(), &forward, &backward)?;
        let f = Formula::limp(Formula::brings(agent, a), Formula::brings(agent, b));
        Ok(Deduction::make(&forward.system().clone(), Multiset::empty(), f, rule, vec![forward, backward]))
    }

    pub fn not_nec(agent: &str, premise: Deduction) -> Result<Deduction, HilbertError> {
        let rule = HRule::NotNec(agent.to_string());
        if !premise.assumptions().is_empty() {
            return Err(shape(rule, "premise has assumptions"));
        }
        let f = Formula::limp(Formula::brings(agent, premise.formula().clone()), Formula::bot());
        Ok(Deduction::make(&premise.system().clone(), Multiset::empty(), f, rule, vec![premise]))
    }

    pub fn height(&self) -> usize {
        1 + self.premises.iter().map(Deduction::height).max().unwrap_or(0)
    }

    pub fn size(&self) -> usize {
        1 + self.premises.iter().map(Deduction::size).sum::<usize>()
    }

    pub fn get(&self, path: &[usize]) -> Option<&Deduction> {
        match path.split_first() {
            None => Some(self),
            Some((&i, rest)) => self.premises.get(i)?.get(rest),
        }
    }

    pub fn to_json(&self) -> String {
        let file = DeductionFile { system: self.system().to_string(), deduction: DeductionJson::from(self) };
        serde_json::to_string_pretty(&file).expect("deduction serializes")
    }

    pub fn from_json(text: &str) -> Result<Deduction, HilbertError> {
        let file: DeductionFile = serde_json::from_str(text)?;
        let system: SystemId = file.system.parse().map_err(ParseError::from)?;
        file.deduction.into_deduction(&Arc::new(system))
    }
}

fn equivalence(rule: HRule, forward: &Deduction, backward: &Deduction) -> Result<(Formula, Formula), HilbertError> {
    if !forward.assumptions().is_empty() || !backward.assumptions().is_empty() {
        return Err(shape(rule, "premises must have no assumptions"));
    }
    match (forward.formula(), backward.formula()) {
        (Formula::Limp(a, b), Formula::Limp(c, d)) if a == d && b == c => Ok(((**a).clone(), (**b).clone())),
        _ => Err(shape(rule, "premises are not A -o B and B -o A")),
    }
}

#[derive(Serialize, Deserialize)]
struct DeductionFile {
    system: String,
    deduction: DeductionJson,
}

#[derive(Serialize, Deserialize)]
struct DeductionJson {
    rule: String,
    conclusion: String,
    premises: Vec<DeductionJson>,
}

impl From<&Deduction> for DeductionJson {
    fn from(d: &Deduction) -> DeductionJson {
        DeductionJson {
            rule: d.rule.to_string(),
            conclusion: d.conclusion.to_string(),
            premises: d.premises.iter().map(DeductionJson::from).collect(),
        }
    }
}

impl DeductionJson {
    fn into_deduction(self, system: &Arc<SystemId>) -> Result<Deduction, HilbertError> {
        let conclusion = parse_sequent_arc(&self.conclusion, system.clone())?;
        let rule = self.rule.parse()?;
        let premises = self.premises.into_iter().map(|p| p.into_deduction(system)).collect::<Result<_, _>>()?;
        Ok(Deduction { conclusion, rule, premises })
    }
}

/// Re-derives every node from its premises and compares with the recorded conclusion.
pub fn check_deduction(d: &Deduction, system: &SystemId) -> Vec<HilbertViolation> {
    let mut out = Vec::new();
    if !has_hilbert(system) {
        out.push(HilbertViolation {
            path: vec![],
            rule: d.rule.to_string(),
            reason: format!("no Hilbert system for {}", system.kind.name()),
        });
        return out;
    }
    check_at(d, system, &mut Vec::new(), &mut out);
    out
}

fn check_at(d: &Deduction, system: &SystemId, path: &mut Vec<usize>, out: &mut Vec<HilbertViolation>) {
    for (i, p) in d.premises.iter().enumerate() {
        path.push(i);
        check_at(p, system, path, out);
        path.pop();
    }
    if let Some(reason) = check_step(d, system) {
        out.push(HilbertViolation { path: path.clone(), rule: d.rule.to_string(), reason });
    }
}

fn check_step(d: &Deduction, system: &SystemId) -> Option<String> {
    if let Err(e) = d.conclusion.validate() {
        return Some(e.to_string());
    }
    if let Err(e) = d.formula().validate(system) {
        return Some(e.to_string());
    }
    let arity = match d.rule {
        HRule::Assumption | HRule::Axiom => 0,
        HRule::NotNec(_) => 1,
        _ => 2,
    };
    if d.premises.len() != arity {
        return Some(format!("expected {arity} premises, found {}", d.premises.len()));
    }
    let sys = d.system();
    let agent_ok = |a: &str| system.kind.has_agents() && system.agents.contains(a);
    let rebuilt = match &d.rule {
        HRule::Assumption => {
            let gamma = d.assumptions();
            if gamma.len() != 1 || gamma.items()[0] != *d.formula() {
                return Some("assumption leaf must be A |- A".into());
            }
            return None;
        }
        HRule::Axiom => {
            if !d.assumptions().is_empty() {
                return Some("axiom leaf has assumptions".into());
            }
            return match match_axiom(d.formula(), system) {
                Some(_) => None,
                None => Some(format!("{} is not an axiom instance", d.formula())),
            };
        }
        HRule::Mp => Deduction::mp(d.premises[0].clone(), d.premises[1].clone()),
        HRule::With => Deduction::with(d.premises[0].clone(), d.premises[1].clone()),
        HRule::BoxRe => {
            if system.kind.has_agents() {
                return Some("box rule outside H-MILL".into());
            }
            Deduction::box_re(d.premises[0].clone(), d.premises[1].clone())
        }
        HRule::BringsRe(a) => {
            if !agent_ok(a) {
                return Some(format!("agent {a} not available"));
            }
            Deduction::brings_re(a, d.premises[0].clone(), d.premises[1].clone())
        }
        HRule::NotNec(a) => {
            if !agent_ok(a) {
                return Some(format!("agent {a} not available"));
            }
            Deduction::not_nec(a, d.premises[0].clone())
        }
    };
    match rebuilt {
        Err(e) => Some(e.to_string()),
        Ok(r) if r.assumptions() != d.assumptions() || r.formula() != d.formula() => Some(format!(
            "conclusion should be {}",
            Sequent::new(r.conclusion.antecedent, r.conclusion.succedent, sys.clone())
        )),
        Ok(_) => None,
    }
}

/// Path of the first live assumption leaf for `a` (left branch of `with` nodes).
pub fn find_assumption(d: &Deduction, a: &Formula) -> Option<Vec<usize>> {
    match d.rule {
        HRule::Assumption if d.formula() == a => Some(vec![]),
        HRule::Mp => (0..2).find_map(|i| {
            let mut p = find_assumption(&d.premises[i], a)?;
            p.insert(0, i);
            Some(p)
        }),
        HRule::With => {
            let mut p = find_assumption(&d.premises[0], a)?;
            p.insert(0, 0);
            Some(p)
        }
        _ => None,
    }
}

/// Discharges the assumption leaf at `pick`: from `Γ, A |- B` builds `Γ |- A -o B`.
///
/// Below a `with` node the twin branch discharges its first occurrence of `A`.
pub fn deduction_theorem(d: &Deduction, pick: &[usize]) -> Result<Deduction, HilbertError> {
    let leaf = d.get(pick).filter(|n| n.rule == HRule::Assumption);
    let Some(leaf) = leaf else { return Err(HilbertError::OccurrenceNotFound(pick.to_vec())) };
    discharge(d, pick, leaf.formula())
}

/// Discharges the first occurrence of `a`.
pub fn discharge_formula(d: &Deduction, a: &Formula) -> Result<Deduction, HilbertError> {
    let pick = find_assumption(d, a).ok_or_else(|| HilbertError::OccurrenceNotFound(vec![]))?;
    discharge(d, &pick, a)
}

fn discharge(d: &Deduction, pick: &[usize], a: &Formula) -> Result<Deduction, HilbertError> {
    let sys = d.system().clone();
    let not_found = || HilbertError::OccurrenceNotFound(pick.to_vec());
    let sub = |pairs: &[(&str, &Formula)]| Substitution {
        formulas: pairs.iter().map(|(k, v)| (k.to_string(), (*v).clone())).collect(),
        agent: None,
    };
    match &d.rule {
        HRule::Assumption if pick.is_empty() && d.formula() == a => {
            Deduction::axiom_instance(&sys, "identity", &sub(&[("A", a)]))
        }
        HRule::Mp => {
            let (&i, rest) = pick.split_first().ok_or_else(not_found)?;
            let (minor, major) = (&d.premises[0], &d.premises[1]);
            let x = minor.formula();
            let b = d.formula();
            if i == 0 {
                let minor2 = discharge(minor, rest, a)?;
                let ax = Deduction::axiom_instance(&sys, "composition", &sub(&[("A", a), ("B", x), ("C", b)]))?;
                let step = Deduction::mp(minor2, ax)?;
                Deduction::mp(major.clone(), step)
            } else if i == 1 {
                let major2 = discharge(major, rest, a)?;
                let ax = Deduction::axiom_instance(&sys, "permutation", &sub(&[("A", a), ("B", x), ("C", b)]))?;
                let step = Deduction::mp(major2, ax)?;
                Deduction::mp(minor.clone(), step)
            } else {
                Err(not_found())
            }
        }
        HRule::With => {
            let (&i, rest) = pick.split_first().ok_or_else(not_found)?;
            if i > 1 {
                return Err(not_found());
            }
            let twin = find_assumption(&d.premises[1 - i], a).ok_or_else(not_found)?;
            let mut sides = [None, None];
            sides[i] = Some(discharge(&d.premises[i], rest, a)?);
            sides[1 - i] = Some(discharge(&d.premises[1 - i], &twin, a)?);
            let [l, r] = sides.map(Option::unwrap);
            let (x, y) = (d.premises[0].formula(), d.premises[1].formula());
            let both = Deduction::with(l, r)?;
            let ax = Deduction::axiom_instance(&sys, "with-intro", &sub(&[("A", a), ("B", x), ("C", y)]))?;
            Deduction::mp(both, ax)
        }
        _ => Err(not_found()),
    }
}

fn single(sys: &Arc<SystemId>, f: Formula) -> Context {
    Context::singleton_for(sys, f)
}

fn ax(sys: &Arc<SystemId>, f: &Formula) -> Proof {
    Proof::leaf(Sequent::new(single(sys, f.clone()), f.clone(), sys.clone()), RuleId::Ax)
}

/// `A, A -o B |- B`.
fn modus_ponens_proof(sys: &Arc<SystemId>, a: &Formula, b: &Formula) -> Proof {
    let imp = Formula::limp(a.clone(), b.clone());
    let ant = Context::MSet(Multiset::new(vec![a.clone(), imp]));
    Proof::new(Sequent::new(ant, b.clone(), sys.clone()), RuleId::LimpL, vec![ax(sys, a), ax(sys, b)])
}

fn cut(prover: Proof, user: Proof) -> Proof {
    let a = prover.conclusion.succedent.clone();
    let ant = crate::calculus::cut_antecedents(&user.conclusion.antecedent, &a, &prover.conclusion.antecedent)
        .into_iter()
        .next()
        .expect("cut formula occurs in user");
    let concl = user.conclusion.with_context(ant, user.conclusion.succedent.clone());
    Proof::new(concl, RuleId::Cut, vec![prover, user])
}

/// `A |- B` from a proof of `|- A -o B`.
fn sequent_of_implication(p: Proof) -> Proof {
    let Formula::Limp(a, b) = p.conclusion.succedent.clone() else { panic!("implication expected") };
    let sys = p.system().clone();
    cut(p, modus_ponens_proof(&sys, &a, &b))
}

fn rename_atoms(p: &Proof, sub: &Substitution, sys: &Arc<SystemId>) -> Proof {
    let ant = match &p.conclusion.antecedent {
        Context::MSet(m) => Context::MSet(Multiset::new(m.items().iter().map(|f| sub.apply(f)).collect())),
        Context::Tree(_) => unreachable!("Hilbert systems are commutative"),
    };
    Proof {
        conclusion: Sequent::new(ant, sub.apply(&p.conclusion.succedent), sys.clone()),
        rule: p.rule.clone(),
        premises: p.premises.iter().map(|q| rename_atoms(q, sub, sys)).collect(),
    }
}

/// Cut-free proof of `|- B` for an axiom instance `B`, instantiated from
/// the searched proof of the schema over atoms.
pub fn axiom_proof(b: &Formula, system: &Arc<SystemId>) -> Option<Proof> {
    let (name, mut sub) = match_axiom(b, system)?;
    let s = schema(name)?;
    let agent = sub.agent.clone().unwrap_or_else(|| AGENT_VAR.to_string());
    let template = Substitution { formulas: BTreeMap::new(), agent: Some(agent.clone()) }.apply(&s.template);
    let tsys = if system.kind.has_agents() {
        SystemId::with_agents(system.kind, [agent.as_str()]).ok()?
    } else {
        SystemId::new(system.kind)
    };
    let tsys = Arc::new(tsys);
    let goal = Sequent::new(Context::empty_for(&tsys), template, tsys.clone());
    let template_proof = prove(&goal, &SearchBudget::default()).proof()?.clone();
    for v in METAVARS {
        sub.formulas.entry(v.to_string()).or_insert_with(|| Formula::atom(v));
    }
    sub.agent = None;
    Some(rename_atoms(&template_proof, &sub, system))
}

/// Sequent proof of the deduction's conclusion; may contain cuts.
pub fn hilbert_to_sequent(d: &Deduction) -> Result<Proof, HilbertError> {
    let sys = d.system().clone();
    let limp_right = |inner: Proof, f: &Formula| {
        Proof::new(Sequent::new(Context::empty_for(&sys), f.clone(), sys.clone()), RuleId::LimpR, vec![inner])
    };
    Ok(match &d.rule {
        HRule::Assumption => ax(&sys, d.formula()),
        HRule::Axiom => axiom_proof(d.formula(), &sys)
            .ok_or_else(|| shape(HRule::Axiom, format!("{} is not an axiom instance", d.formula())))?,
        HRule::Mp => {
            let minor = hilbert_to_sequent(&d.premises[0])?;
            let major = hilbert_to_sequent(&d.premises[1])?;
            let mp = modus_ponens_proof(&sys, d.premises[0].formula(), d.formula());
            cut(minor, cut(major, mp))
        }
        HRule::With => {
            let l = hilbert_to_sequent(&d.premises[0])?;
            let r = hilbert_to_sequent(&d.premises[1])?;
            Proof::new(d.conclusion.clone(), RuleId::WithR, vec![l, r])
        }
        HRule::BoxRe | HRule::BringsRe(_) => {
            let rule = match &d.rule {
                HRule::BringsRe(a) => RuleId::BringsRe(a.clone()),
                _ => RuleId::BoxRe,
            };
            let Formula::Limp(ma, mb) = d.formula() else { unreachable!("checked shape") };
            let fwd = sequent_of_implication(hilbert_to_sequent(&d.premises[0])?);
            let bwd = sequent_of_implication(hilbert_to_sequent(&d.premises[1])?);
            let inner = Proof::new(
                Sequent::new(single(&sys, (**ma).clone()), (**mb).clone(), sys.clone()),
                rule,
                vec![fwd, bwd],
            );
            limp_right(inner, d.formula())
        }
        HRule::NotNec(a) => {
            let premise = hilbert_to_sequent(&d.premises[0])?;
            let ea = Formula::brings(a, d.premises[0].formula().clone());
            let inner = Proof::new(
                Sequent::new(single(&sys, ea), Formula::bot(), sys.clone()),
                RuleId::NotNec(a.clone()),
                vec![premise],
            );
            limp_right(inner, d.formula())
        }
    })
}

/// Checked deduction of the schema `name` instantiated with distinct atoms.
pub fn schema_deduction(name: &str, system: &Arc<SystemId>) -> Result<Deduction, HilbertError> {
    let agent = system.agents.iter().next().cloned();
    let sub = Substitution {
        formulas: [("A", "p"), ("B", "q"), ("C", "r")]
            .into_iter()
            .map(|(k, v)| (k.to_string(), Formula::atom(v)))
            .collect(),
        agent,
    };
    Deduction::axiom_instance(system, name, &sub)
}

/// A seeded random deduction with at least one assumption, built from
/// axiom instances, assumptions, modus ponens and `with` steps.
pub fn random_deduction(seed: u64, system: &Arc<SystemId>, steps: usize) -> Deduction {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let atoms: Vec<Formula> = ["p", "q", "r", "s"].iter().map(|a| Formula::atom(a)).collect();
    let small = |rng: &mut ChaCha8Rng| -> Formula {
        let a = atoms.choose(rng).unwrap().clone();
        match rng.gen_range(0..4) {
            0 => Formula::tensor(a, atoms.choose(rng).unwrap().clone()),
            1 => Formula::limp(a, atoms.choose(rng).unwrap().clone()),
            _ => a,
        }
    };
    let names: Vec<&str> = schemata()
        .iter()
        .filter(|s| !s.needs_agents || system.kind.has_agents())
        .map(|s| s.name)
        .collect();
    let mut pool: Vec<Deduction> = Vec::new();
    for _ in 0..steps.max(1) * 4 {
        if pool.len() > steps * 8 {
            break;
        }
        let choice = rng.gen_range(0..10);
        let next = if choice < 3 || pool.is_empty() {
            let name = names.choose(&mut rng).unwrap();
            let sub = Substitution {
                formulas: METAVARS.iter().map(|v| (v.to_string(), small(&mut rng))).collect(),
                agent: system.agents.iter().next().cloned(),
            };
            Deduction::axiom_instance(system, name, &sub).ok()
        } else if choice < 9 {
            let majors: Vec<&Deduction> = pool.iter().filter(|d| matches!(d.formula(), Formula::Limp(..))).collect();
            majors.choose(&mut rng).and_then(|major| {
                let Formula::Limp(x, _) = major.formula() else { return None };
                let minors: Vec<&Deduction> = pool.iter().filter(|d| d.formula() == &**x).collect();
                let minor = match minors.choose(&mut rng) {
                    Some(m) if rng.gen_bool(0.4) => (*m).clone(),
                    _ => Deduction::assumption(system, (**x).clone()),
                };
                Deduction::mp(minor, (*major).clone()).ok()
            })
        } else {
            let with_ctx: Vec<&Deduction> = pool.iter().filter(|d| !d.assumptions().is_empty()).collect();
            with_ctx.choose(&mut rng).and_then(|l| {
                let partners: Vec<&Deduction> =
                    pool.iter().filter(|d| d.assumptions() == l.assumptions()).collect();
                let r = partners.choose(&mut rng)?;
                Deduction::with((*l).clone(), (*r).clone()).ok()
            })
        };
        if let Some(d) = next {
            if d.size() <= 60 {
                pool.push(d);
            }
        }
    }
    let with_assumptions: Vec<&Deduction> = pool.iter().filter(|d| !d.assumptions().is_empty()).collect();
    match with_assumptions.iter().max_by_key(|d| (d.size(), d.assumptions().len())) {
        Some(d) => (*d).clone(),
        None => {
            let a = small(&mut rng);
            let major = Deduction::axiom_instance(
                system,
                "identity",
                &Substitution { formulas: [("A".to_string(), a.clone())].into(), agent: None },
            )
            .expect("identity instance");
            Deduction::mp(Deduction::assumption(system, a), major).expect("well-typed")
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::check_proof;

    fn f(t: &str) -> Formula {
        t.parse().unwrap()
    }

    fn mill() -> Arc<SystemId> {
        Arc::new(SystemId::mill())
    }

    #[test]
    fn matches_table_examples() {
        let m = SystemId::mill();
        let (name, sub) = match_axiom(&f("p -o p"), &m).unwrap();
        assert_eq!(name, "identity");
        assert_eq!(sub.formulas["A"], f("p"));
        let (name, sub) = match_axiom(&f("(p & q) -o p"), &m).unwrap();
        assert_eq!(name, "with-left");
        assert_eq!((sub.formulas["A"].clone(), sub.formulas["B"].clone()), (f("p"), f("q")));
        assert!(match_axiom(&f("p -o q"), &m).is_none());
        assert!(match_axiom(&f("E[a]p -o p"), &m).is_none());
        let r: SystemId = "RSBIAT[a]".parse().unwrap();
        assert_eq!(match_axiom(&f("E[a]p -o p"), &r).unwrap().0, "brings-refl");
        assert!(match_axiom(&f("E[a]p * E[b]q -o E[a](p * q)"), &"RSBIAT[a,b]".parse().unwrap()).is_none());
    }

    #[test]
    fn modus_ponens_checks() {
        let s = mill();
        let d = Deduction::mp(Deduction::assumption(&s, f("p")), Deduction::axiom(&s, f("p -o p")).unwrap()).unwrap();
        assert_eq!(d.conclusion.to_string(), "p |- p");
        assert!(check_deduction(&d, &s).is_empty());
    }

    #[test]
    fn box_re_needs_empty_assumptions() {
        let s = mill();
        let bad = Deduction {
            conclusion: crate::context::parse_sequent("|- []p -o []p", &s).unwrap(),
            rule: HRule::BoxRe,
            premises: vec![Deduction::assumption(&s, f("p -o p")), Deduction::axiom(&s, f("p -o p")).unwrap()],
        };
        assert!(!check_deduction(&bad, &s).is_empty());
        assert!(Deduction::box_re(Deduction::assumption(&s, f("p -o p")), Deduction::axiom(&s, f("p -o p")).unwrap()).is_err());
    }

    #[test]
    fn discharge_identity_and_tensor() {
        let s = mill();
        let d = deduction_theorem(&Deduction::assumption(&s, f("p")), &[]).unwrap();
        assert_eq!(d.conclusion.to_string(), "|- p -o p");
        assert_eq!(d.rule, HRule::Axiom);

        let intro = Deduction::axiom(&s, f("p -o (q -o p * q)")).unwrap();
        let step = Deduction::mp(Deduction::assumption(&s, f("p")), intro).unwrap();
        let pq = Deduction::mp(Deduction::assumption(&s, f("q")), step).unwrap();
        assert_eq!(pq.conclusion.to_string(), "p, q |- p * q");
        let out = discharge_formula(&pq, &f("q")).unwrap();
        assert!(check_deduction(&out, &s).is_empty(), "{:?}", check_deduction(&out, &s));
        assert_eq!(out.assumptions(), Multiset::singleton(f("p")));
        assert_eq!(out.formula(), &f("q -o p * q"));
    }

    #[test]
    fn discharge_through_with() {
        let s = mill();
        let l = Deduction::mp(Deduction::assumption(&s, f("p")), Deduction::axiom(&s, f("p -o p")).unwrap()).unwrap();
        let d = Deduction::with(Deduction::assumption(&s, f("p")), l).unwrap();
        let out = deduction_theorem(&d, &[1, 0]).unwrap();
        assert!(check_deduction(&out, &s).is_empty());
        assert!(out.assumptions().is_empty());
        assert_eq!(out.formula(), &f("p -o p & p"));
    }

    #[test]
    fn every_schema_translates() {
        for sys in [mill(), Arc::new("RSBIAT[a]".parse().unwrap())] {
            for sc in schemata().iter().filter(|x| !x.needs_agents || sys.kind.has_agents()) {
                let d = schema_deduction(sc.name, &sys).unwrap();
                assert!(check_deduction(&d, &sys).is_empty());
                let p = hilbert_to_sequent(&d).unwrap();
                assert!(check_proof(&p).is_empty(), "{}: {:?}", sc.name, check_proof(&p));
                assert!(p.is_cut_free());
            }
        }
        let id = schema_deduction("identity", &mill()).unwrap();
        let p = hilbert_to_sequent(&id).unwrap();
        assert_eq!((p.rule.clone(), p.size()), (RuleId::LimpR, 2));
    }

    #[test]
    fn box_re_translates() {
        let s = mill();
        let a = Deduction::axiom(&s, f("p -o p")).unwrap();
        let d = Deduction::box_re(a.clone(), a).unwrap();
        assert!(check_deduction(&d, &s).is_empty());
        let p = hilbert_to_sequent(&d).unwrap();
        assert_eq!(p.rule, RuleId::LimpR);
        assert_eq!(p.premises[0].rule, RuleId::BoxRe);
        assert!(check_proof(&p).is_empty());
    }

    #[test]
    fn random_deductions_discharge() {
        let systems = [mill(), Arc::new("RSBIAT[a]".parse().unwrap())];
        for seed in 0..20 {
            let sys = &systems[seed as usize % 2];
            let d = random_deduction(seed, sys, 6);
            assert!(check_deduction(&d, sys).is_empty());
            let pick = find_assumption(&d, &d.assumptions().items()[0]).unwrap();
            let out = deduction_theorem(&d, &pick).unwrap();
            assert!(check_deduction(&out, sys).is_empty());
            let p = hilbert_to_sequent(&out).unwrap();
            assert!(check_proof(&p).is_empty());
        }
    }

    #[test]
    fn json_round_trip() {
        let s: Arc<SystemId> = Arc::new("RSBIAT[a]".parse().unwrap());
        let d = Deduction::not_nec("a", Deduction::axiom(&s, f("p -o p")).unwrap()).unwrap();
        let back = Deduction::from_json(&d.to_json()).unwrap();
        assert_eq!(back, d);
        assert!(check_deduction(&back, &s).is_empty());
    }
}
