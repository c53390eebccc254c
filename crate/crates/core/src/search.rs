//! Bounded backward search for cut-free proofs.
//!
//! Every backward rule step (rules applied to entropy preimages included)
//! yields premises of strictly smaller total complexity, so a branch is never
//! longer than the complexity of the goal. The depth budget is therefore only
//! a guard; running out of it, or of the entropy closure bound, makes a
//! failure inconclusive.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::calculus::{apply_direct, foreign_formulas, Proof, RuleId, Violation};
use crate::context::{Context, Sequent, DEFAULT_STRUCTURAL_BOUND};

/// Multiplier for the default depth budget.
pub const DEFAULT_DEPTH_FACTOR: usize = 4;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SearchBudget {
    /// Longest branch in proof nodes; `None` means 4 × the goal's complexity.
    pub max_depth: Option<usize>,
    /// Cap on the entropy preimages considered per goal.
    pub max_structural: usize,
    /// Cap on the number of goals visited; `None` is unbounded.
    pub max_explored: Option<usize>,
}

impl Default for SearchBudget {
    fn default() -> Self {
        SearchBudget { max_depth: None, max_structural: DEFAULT_STRUCTURAL_BOUND, max_explored: None }
    }
}

impl SearchBudget {
    pub fn with_depth(depth: usize) -> SearchBudget {
        SearchBudget { max_depth: Some(depth.max(1)), ..SearchBudget::default() }
    }

    pub fn depth_for(&self, goal: &Sequent) -> usize {
        self.max_depth.unwrap_or(DEFAULT_DEPTH_FACTOR * goal.complexity()).max(1)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SearchResult {
    Proved(Proof),
    /// Every alternative was explored within the budget and failed.
    Exhausted { explored: usize },
    /// Some branch was cut off by the budget.
    BudgetExceeded { explored: usize },
}

/// Verdict for a goal, reading tree-system exhaustion as inconclusive.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Verdict {
    Provable,
    Unprovable,
    BoundedUnknown,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Provable => "provable",
            Verdict::Unprovable => "unprovable",
            Verdict::BoundedUnknown => "bounded-unknown",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Verdict {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "provable" => Ok(Verdict::Provable),
            "unprovable" => Ok(Verdict::Unprovable),
            "bounded-unknown" => Ok(Verdict::BoundedUnknown),
            other => Err(format!("unknown verdict `{other}`")),
        }
    }
}

impl SearchResult {
    pub fn is_proved(&self) -> bool {
        matches!(self, SearchResult::Proved(_))
    }

    pub fn proof(&self) -> Option<&Proof> {
        match self {
            SearchResult::Proved(p) => Some(p),
            _ => None,
        }
    }

    /// Exhaustion only means unprovable in the commutative systems.
    pub fn verdict(&self, has_serial: bool) -> Verdict {
        match self {
            SearchResult::Proved(_) => Verdict::Provable,
            SearchResult::Exhausted { .. } if !has_serial => Verdict::Unprovable,
            _ => Verdict::BoundedUnknown,
        }
    }

    pub fn label(&self, has_serial: bool) -> &'static str {
        match (self, has_serial) {
            (SearchResult::Proved(_), _) => "Proved",
            (SearchResult::Exhausted { .. }, false) => "Exhausted (unprovable)",
            (SearchResult::Exhausted { .. }, true) => "Exhausted (not proved, bounded)",
            (SearchResult::BudgetExceeded { .. }, _) => "BudgetExceeded (not proved, bounded)",
        }
    }
}

/// Instrumentation from one search.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct SearchStats {
    pub explored: usize,
    /// Deepest live branch reached, in proof nodes (root = 1).
    pub peak_depth: usize,
    pub max_depth: usize,
    /// Largest number of sequents on the branch-local visited set.
    pub peak_visited: usize,
    pub truncated: bool,
}

enum Outcome {
    Proved(Arc<Proof>),
    /// `complete` is false when a budget cut off part of the failed subtree.
    Failed { complete: bool },
}

const INVERTIBLE: [RuleId; 7] = [
    RuleId::TensorL,
    RuleId::OdotL,
    RuleId::OneL,
    RuleId::LimpR,
    RuleId::LresR,
    RuleId::RresR,
    RuleId::WithR,
];

fn choice_rules(goal: &Sequent) -> Vec<RuleId> {
    let mut rules = vec![
        RuleId::WithL1,
        RuleId::WithL2,
        RuleId::LimpL,
        RuleId::LresL,
        RuleId::RresL,
        RuleId::TensorR,
        RuleId::OdotR,
        RuleId::BoxRe,
    ];
    let agents: std::collections::BTreeSet<String> =
        goal.formulas().iter().flat_map(|f| f.agents()).collect();
    for a in agents {
        rules.extend([
            RuleId::BringsRefl(a.clone()),
            RuleId::BringsRe(a.clone()),
            RuleId::BringsTensor(a.clone()),
            RuleId::BringsWith(a.clone()),
            RuleId::BringsOdot(a.clone()),
            RuleId::NotNec(a),
        ]);
    }
    rules.retain(|r| r.admissible_in(goal.system.kind));
    rules
}

struct Searcher {
    max_depth: usize,
    max_structural: usize,
    max_explored: Option<usize>,
    proved: HashMap<Sequent, Arc<Proof>>,
    failed: HashSet<Sequent>,
    branch: HashSet<Sequent>,
    stats: SearchStats,
}

impl Searcher {
    fn go(&mut self, goal: &Sequent, depth: usize) -> Outcome {
        self.stats.explored += 1;
        self.stats.peak_depth = self.stats.peak_depth.max(depth);
        if let Some(p) = self.proved.get(goal) {
            return Outcome::Proved(p.clone());
        }
        if self.failed.contains(goal) {
            return Outcome::Failed { complete: true };
        }
        let over_nodes = self.max_explored.is_some_and(|cap| self.stats.explored > cap);
        if depth > self.max_depth || over_nodes || self.branch.contains(goal) {
            self.stats.truncated = true;
            return Outcome::Failed { complete: false };
        }
        self.branch.insert(goal.clone());
        self.stats.peak_visited = self.stats.peak_visited.max(self.branch.len());
        let out = self.expand(goal, depth);
        self.branch.remove(goal);
        match &out {
            Outcome::Proved(p) => {
                self.proved.insert(goal.clone(), p.clone());
            }
            Outcome::Failed { complete: true } => {
                self.failed.insert(goal.clone());
            }
            Outcome::Failed { complete: false } => {}
        }
        out
    }

    fn expand(&mut self, goal: &Sequent, depth: usize) -> Outcome {
        for rule in [RuleId::Ax, RuleId::OneR] {
            if !apply_direct(goal, &rule).is_empty() {
                return Outcome::Proved(Arc::new(Proof::leaf(goal.clone(), rule)));
            }
        }
        for rule in INVERTIBLE.iter().filter(|r| r.admissible_in(goal.system.kind)) {
            if let Some(inst) = apply_direct(goal, rule).into_iter().next() {
                return self.try_instance(goal, rule, &inst, depth);
            }
        }
        let mut complete = true;
        let contexts = match &goal.antecedent {
            Context::Tree(t) => {
                let (pre, overflow) = t.structural_preimages(self.max_structural);
                if overflow {
                    self.stats.truncated = true;
                    complete = false;
                }
                pre.into_iter().map(Context::Tree).collect()
            }
            ctx => vec![ctx.clone()],
        };
        let rules = choice_rules(goal);
        let mut tried: HashSet<Vec<Sequent>> = HashSet::new();
        for ctx in contexts {
            let g = goal.with_context(ctx, goal.succedent.clone());
            for rule in &rules {
                for inst in apply_direct(&g, rule) {
                    if !tried.insert(inst.clone()) {
                        continue;
                    }
                    match self.try_instance(goal, rule, &inst, depth) {
                        Outcome::Proved(p) => return Outcome::Proved(p),
                        Outcome::Failed { complete: c } => complete &= c,
                    }
                }
            }
        }
        Outcome::Failed { complete }
    }

    fn try_instance(&mut self, goal: &Sequent, rule: &RuleId, premises: &[Sequent], depth: usize) -> Outcome {
        // a premise already known to fail settles the instance cheaply
        if premises.iter().any(|p| self.failed.contains(p)) {
            return Outcome::Failed { complete: true };
        }
        let mut subproofs = Vec::with_capacity(premises.len());
        for p in premises {
            match self.go(p, depth + 1) {
                Outcome::Proved(q) => subproofs.push(q),
                failed => return failed,
            }
        }
        let premises = subproofs.iter().map(|q| (**q).clone()).collect();
        Outcome::Proved(Arc::new(Proof::new(goal.clone(), rule.clone(), premises)))
    }
}

/// Searches for a cut-free proof of `goal`.
pub fn prove(goal: &Sequent, budget: &SearchBudget) -> SearchResult {
    prove_with_stats(goal, budget).0
}

pub fn prove_with_stats(goal: &Sequent, budget: &SearchBudget) -> (SearchResult, SearchStats) {
    let max_depth = budget.depth_for(goal);
    let mut s = Searcher {
        max_depth,
        max_structural: budget.max_structural,
        max_explored: budget.max_explored,
        proved: HashMap::new(),
        failed: HashSet::new(),
        branch: HashSet::new(),
        stats: SearchStats { max_depth, ..SearchStats::default() },
    };
    let out = s.go(goal, 1);
    let explored = s.stats.explored;
    let result = match out {
        Outcome::Proved(p) => SearchResult::Proved(Arc::try_unwrap(p).unwrap_or_else(|p| (*p).clone())),
        Outcome::Failed { complete: true } => SearchResult::Exhausted { explored },
        Outcome::Failed { complete: false } => SearchResult::BudgetExceeded { explored },
    };
    (result, s.stats)
}

/// Reports every formula in `p` that is not a subformula of its end sequent.
pub fn subformula_audit(p: &Proof) -> Vec<Violation> {
    foreign_formulas(p)
        .into_iter()
        .map(|(path, f)| Violation {
            rule: p.get(&path).map(|n| n.rule.to_string()).unwrap_or_default(),
            path,
            reason: format!("{f} is not a subformula of the end sequent"),
        })
        .collect()
}
