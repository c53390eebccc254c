//! Antecedent structures and sequents.
//!
//! Commutative systems use multisets. The partially commutative systems use
//! trees built from parallel (`,`) and serial (`;`) composition. Trees are
//! kept in a normal form: n-ary nodes, no nested node of the same kind, no
//! empty children, and parallel children sorted by their printed form. The
//! associativity, `,`-commutativity and unit laws are therefore representational;
//! entropy is the only structural rule that has to be searched
//! ([`Tree::structural_preimages`]).

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::sync::Arc;

use crate::syntax::{Formula, ParseError, Parser, SystemId, Tok, ValidationError};

/// Default cap on the entropy closure.
pub const DEFAULT_STRUCTURAL_BOUND: usize = 4096;

/// Sorted multiset of formulas.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Default)]
pub struct Multiset(Vec<Formula>);

impl Multiset {
    pub fn new(mut items: Vec<Formula>) -> Multiset {
        items.sort();
        Multiset(items)
    }

    pub fn empty() -> Multiset {
        Multiset(Vec::new())
    }

    pub fn singleton(f: Formula) -> Multiset {
        Multiset(vec![f])
    }

    pub fn items(&self) -> &[Formula] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, f: &Formula) -> bool {
        self.0.binary_search(f).is_ok()
    }

    pub fn insert(&mut self, f: Formula) {
        let at = self.0.binary_search(&f).unwrap_or_else(|e| e);
        self.0.insert(at, f);
    }

    /// Removes one occurrence; false when absent.
    pub fn remove(&mut self, f: &Formula) -> bool {
        match self.0.binary_search(f) {
            Ok(at) => {
                self.0.remove(at);
                true
            }
            Err(_) => false,
        }
    }

    pub fn union(&self, other: &Multiset) -> Multiset {
        let mut v = self.0.clone();
        v.extend(other.0.iter().cloned());
        Multiset::new(v)
    }

    /// `self - other`, or `None` when `other` is not a sub-multiset.
    pub fn difference(&self, other: &Multiset) -> Option<Multiset> {
        let mut out = self.clone();
        for f in &other.0 {
            if !out.remove(f) {
                return None;
            }
        }
        Some(out)
    }

    /// Distinct formulas in order.
    pub fn distinct(&self) -> Vec<&Formula> {
        let mut out: Vec<&Formula> = Vec::new();
        for f in &self.0 {
            if out.last() != Some(&f) {
                out.push(f);
            }
        }
        out
    }

    /// Every (sub-multiset, complement) pair, without duplicates.
    pub fn splits(&self) -> Vec<(Multiset, Multiset)> {
        let mut groups: Vec<(&Formula, usize)> = Vec::new();
        for f in &self.0 {
            match groups.last_mut() {
                Some((g, n)) if *g == f => *n += 1,
                _ => groups.push((f, 1)),
            }
        }
        let mut out = vec![(Vec::new(), Vec::new())];
        for (f, n) in groups {
            let mut next = Vec::with_capacity(out.len() * (n + 1));
            for (l, r) in &out {
                for k in 0..=n {
                    let mut l2: Vec<Formula> = l.clone();
                    let mut r2: Vec<Formula> = r.clone();
                    l2.extend(std::iter::repeat(f.clone()).take(k));
                    r2.extend(std::iter::repeat(f.clone()).take(n - k));
                    next.push((l2, r2));
                }
            }
            out = next;
        }
        out.into_iter().map(|(l, r)| (Multiset(l), Multiset(r))).collect()
    }

    pub fn to_formula(&self) -> Formula {
        fold(self.0.iter().cloned(), Formula::tensor)
    }
}

impl fmt::Display for Multiset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|x| x.to_string()).collect();
        f.write_str(&parts.join(", "))
    }
}

fn fold(items: impl Iterator<Item = Formula>, join: fn(Formula, Formula) -> Formula) -> Formula {
    items.reduce(join).unwrap_or(Formula::Unit)
}

/// Partially commutative context.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Tree {
    Empty,
    Leaf(Formula),
    Par(Vec<Tree>),
    Ser(Vec<Tree>),
}

/// Path of child indices from the root of a tree.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Default)]
pub struct Position(pub Vec<usize>);

impl Position {
    pub fn root() -> Position {
        Position(Vec::new())
    }

    pub fn child(&self, i: usize) -> Position {
        let mut p = self.0.clone();
        p.push(i);
        Position(p)
    }
}

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
#[error("position {0:?} does not address a node")]
pub struct InvalidPosition(pub Vec<usize>);

impl Tree {
    pub fn leaf(f: Formula) -> Tree {
        Tree::Leaf(f)
    }

    pub fn par(children: Vec<Tree>) -> Tree {
        Tree::Par(children).normalize()
    }

    pub fn ser(children: Vec<Tree>) -> Tree {
        Tree::Ser(children).normalize()
    }

    pub fn is_normal(&self) -> bool {
        *self == self.normalize()
    }

    /// Canonical representative modulo associativity, `,`-commutativity and units.
    pub fn normalize(&self) -> Tree {
        match self {
            Tree::Empty | Tree::Leaf(_) => self.clone(),
            Tree::Par(cs) => {
                let mut flat = Vec::with_capacity(cs.len());
                for c in cs {
                    match c.normalize() {
                        Tree::Empty => {}
                        Tree::Par(inner) => flat.extend(inner),
                        other => flat.push(other),
                    }
                }
                match flat.len() {
                    0 => Tree::Empty,
                    1 => flat.pop().expect("one child"),
                    _ => {
                        flat.sort_by_cached_key(|t| t.to_string());
                        Tree::Par(flat)
                    }
                }
            }
            Tree::Ser(cs) => {
                let mut flat = Vec::with_capacity(cs.len());
                for c in cs {
                    match c.normalize() {
                        Tree::Empty => {}
                        Tree::Ser(inner) => flat.extend(inner),
                        other => flat.push(other),
                    }
                }
                match flat.len() {
                    0 => Tree::Empty,
                    1 => flat.pop().expect("one child"),
                    _ => Tree::Ser(flat),
                }
            }
        }
    }

    pub fn children(&self) -> &[Tree] {
        match self {
            Tree::Par(cs) | Tree::Ser(cs) => cs,
            _ => &[],
        }
    }

    /// Every node address in preorder, root first.
    pub fn positions(&self) -> Vec<Position> {
        let mut out = Vec::new();
        self.collect_positions(Position::root(), &mut out);
        out
    }

    fn collect_positions(&self, here: Position, out: &mut Vec<Position>) {
        out.push(here.clone());
        for (i, c) in self.children().iter().enumerate() {
            c.collect_positions(here.child(i), out);
        }
    }

    pub fn get(&self, at: &Position) -> Option<&Tree> {
        let mut node = self;
        for &i in &at.0 {
            node = node.children().get(i)?;
        }
        Some(node)
    }

    /// Replaces the node at `at` without normalizing.
    pub fn replace_raw(&self, at: &[usize], with: Tree) -> Result<Tree, InvalidPosition> {
        match at.split_first() {
            None => Ok(with),
            Some((&i, rest)) => {
                let (cs, rebuild): (&Vec<Tree>, fn(Vec<Tree>) -> Tree) = match self {
                    Tree::Par(cs) => (cs, Tree::Par),
                    Tree::Ser(cs) => (cs, Tree::Ser),
                    _ => return Err(InvalidPosition(at.to_vec())),
                };
                let child = cs.get(i).ok_or_else(|| InvalidPosition(at.to_vec()))?;
                let mut cs2 = cs.clone();
                cs2[i] = child.replace_raw(rest, with)?;
                Ok(rebuild(cs2))
            }
        }
    }

    /// `self` with the hole at `at` filled by `with`, normalized.
    pub fn fill(&self, at: &Position, with: &Tree) -> Result<Tree, InvalidPosition> {
        Ok(self.replace_raw(&at.0, with.clone())?.normalize())
    }

    /// Positions of leaves, paired with their formulas, in preorder.
    pub fn leaves(&self) -> Vec<(Position, &Formula)> {
        let mut out = Vec::new();
        self.collect_leaves(Position::root(), &mut out);
        out
    }

    fn collect_leaves<'a>(&'a self, here: Position, out: &mut Vec<(Position, &'a Formula)>) {
        match self {
            Tree::Leaf(f) => out.push((here, f)),
            Tree::Empty => {}
            Tree::Par(cs) | Tree::Ser(cs) => {
                for (i, c) in cs.iter().enumerate() {
                    c.collect_leaves(here.child(i), out);
                }
            }
        }
    }

    pub fn formulas(&self) -> Vec<&Formula> {
        self.leaves().into_iter().map(|(_, f)| f).collect()
    }

    pub fn to_formula(&self) -> Formula {
        match self {
            Tree::Empty => Formula::Unit,
            Tree::Leaf(f) => f.clone(),
            Tree::Par(cs) => fold(cs.iter().map(Tree::to_formula), Formula::tensor),
            Tree::Ser(cs) => fold(cs.iter().map(Tree::to_formula), Formula::odot),
        }
    }

    /// Splits for a parallel right rule: partitions of the top-level `,` children.
    pub fn split_parallel(&self) -> Vec<(Tree, Tree)> {
        match self {
            Tree::Par(cs) => {
                let n = cs.len();
                let mut seen = BTreeSet::new();
                let mut out = Vec::new();
                for mask in 0u64..(1u64 << n) {
                    let mut l = Vec::new();
                    let mut r = Vec::new();
                    for (i, c) in cs.iter().enumerate() {
                        if mask & (1 << i) != 0 {
                            l.push(c.clone());
                        } else {
                            r.push(c.clone());
                        }
                    }
                    let pair = (Tree::par(l), Tree::par(r));
                    if seen.insert(pair.clone()) {
                        out.push(pair);
                    }
                }
                out
            }
            _ => trivial_splits(self),
        }
    }

    /// Order-preserving cuts of the top-level `;` children.
    pub fn split_serial(&self) -> Vec<(Tree, Tree)> {
        match self {
            Tree::Ser(cs) => (0..=cs.len())
                .map(|k| (Tree::ser(cs[..k].to_vec()), Tree::ser(cs[k..].to_vec())))
                .collect(),
            _ => trivial_splits(self),
        }
    }

    /// Contexts from which `self` follows by entropy steps, `self` included.
    ///
    /// The closure replaces, anywhere in the tree, two disjoint groups of the
    /// children of a `,` node by their serial composition (in both orders).
    /// The boolean is set when the closure was cut off at `bound`.
    pub fn structural_preimages(&self, bound: usize) -> (Vec<Tree>, bool) {
        let mut seen: BTreeSet<Tree> = BTreeSet::new();
        let mut order = Vec::new();
        let mut queue = VecDeque::new();
        seen.insert(self.clone());
        order.push(self.clone());
        queue.push_back(self.clone());
        while let Some(t) = queue.pop_front() {
            for pre in t.entropy_steps() {
                if seen.contains(&pre) {
                    continue;
                }
                if seen.len() >= bound {
                    return (order, true);
                }
                seen.insert(pre.clone());
                order.push(pre.clone());
                queue.push_back(pre);
            }
        }
        (order, false)
    }

    /// One backward entropy step at every `,` node.
    fn entropy_steps(&self) -> Vec<Tree> {
        let mut out = Vec::new();
        for pos in self.positions() {
            let Some(Tree::Par(cs)) = self.get(&pos) else { continue };
            let n = cs.len();
            // assign each child to rest (0), first group (1) or second group (2)
            let total = 3usize.pow(n as u32);
            for code in 0..total {
                let mut c = code;
                let (mut rest, mut g1, mut g2) = (Vec::new(), Vec::new(), Vec::new());
                for child in cs {
                    match c % 3 {
                        0 => rest.push(child.clone()),
                        1 => g1.push(child.clone()),
                        _ => g2.push(child.clone()),
                    }
                    c /= 3;
                }
                if g1.is_empty() || g2.is_empty() {
                    continue;
                }
                rest.push(Tree::Ser(vec![Tree::Par(g1), Tree::Par(g2)]));
                if let Ok(t) = self.fill(&pos, &Tree::Par(rest)) {
                    out.push(t);
                }
            }
        }
        out
    }

    fn fmt_in(&self, f: &mut fmt::Formatter<'_>, parent: Option<bool>) -> fmt::Result {
        // parent: Some(true) inside `,`, Some(false) inside `;`
        match self {
            Tree::Empty => f.write_str("()"),
            Tree::Leaf(x) => write!(f, "{x}"),
            Tree::Par(cs) | Tree::Ser(cs) => {
                let is_par = matches!(self, Tree::Par(_));
                let bracket = match parent {
                    None => false,
                    Some(p_par) => is_par || p_par == is_par,
                };
                if bracket {
                    f.write_str("[")?;
                }
                for (i, c) in cs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(if is_par { ", " } else { "; " })?;
                    }
                    c.fmt_in(f, Some(is_par))?;
                }
                if bracket {
                    f.write_str("]")?;
                }
                Ok(())
            }
        }
    }
}

fn trivial_splits(t: &Tree) -> Vec<(Tree, Tree)> {
    if *t == Tree::Empty {
        vec![(Tree::Empty, Tree::Empty)]
    } else {
        vec![(Tree::Empty, t.clone()), (t.clone(), Tree::Empty)]
    }
}

impl fmt::Display for Tree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_in(f, None)
    }
}

/// Antecedent of a sequent.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Context {
    MSet(Multiset),
    Tree(Tree),
}

impl Context {
    pub fn empty_for(system: &SystemId) -> Context {
        if system.kind.has_serial() {
            Context::Tree(Tree::Empty)
        } else {
            Context::MSet(Multiset::empty())
        }
    }

    pub fn singleton_for(system: &SystemId, f: Formula) -> Context {
        if system.kind.has_serial() {
            Context::Tree(Tree::Leaf(f))
        } else {
            Context::MSet(Multiset::singleton(f))
        }
    }

    pub fn is_empty(&self) -> bool {
        match self {
            Context::MSet(m) => m.is_empty(),
            Context::Tree(t) => *t == Tree::Empty,
        }
    }

    /// The single formula, when the context is exactly one formula.
    pub fn as_single(&self) -> Option<&Formula> {
        match self {
            Context::MSet(m) if m.len() == 1 => m.items().first(),
            Context::Tree(Tree::Leaf(f)) => Some(f),
            _ => None,
        }
    }

    pub fn formulas(&self) -> Vec<&Formula> {
        match self {
            Context::MSet(m) => m.items().iter().collect(),
            Context::Tree(t) => t.formulas(),
        }
    }

    pub fn normalize(&self) -> Context {
        match self {
            Context::MSet(m) => Context::MSet(Multiset::new(m.items().to_vec())),
            Context::Tree(t) => Context::Tree(t.normalize()),
        }
    }

    /// `Γ*` (multisets) or `Γ⁺` (trees).
    pub fn to_formula(&self) -> Formula {
        match self {
            Context::MSet(m) => m.to_formula(),
            Context::Tree(t) => t.to_formula(),
        }
    }

    pub fn split_parallel(&self) -> Vec<(Context, Context)> {
        match self {
            Context::MSet(m) => {
                m.splits().into_iter().map(|(l, r)| (Context::MSet(l), Context::MSet(r))).collect()
            }
            Context::Tree(t) => {
                t.split_parallel().into_iter().map(|(l, r)| (Context::Tree(l), Context::Tree(r))).collect()
            }
        }
    }

    /// Parallel composition of two contexts of the same kind.
    pub fn par(&self, other: &Context) -> Context {
        match (self, other) {
            (Context::MSet(a), Context::MSet(b)) => Context::MSet(a.union(b)),
            (Context::Tree(a), Context::Tree(b)) => Context::Tree(Tree::par(vec![a.clone(), b.clone()])),
            _ => panic!("mixed context kinds"),
        }
    }

    pub fn total_complexity(&self) -> usize {
        self.formulas().iter().map(|f| f.complexity()).sum()
    }
}

impl fmt::Display for Context {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Context::MSet(m) => write!(f, "{m}"),
            Context::Tree(Tree::Empty) => Ok(()),
            Context::Tree(t) => write!(f, "{t}"),
        }
    }
}

/// `Γ ⊢ A` in a given system.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Sequent {
    pub antecedent: Context,
    pub succedent: Formula,
    pub system: Arc<SystemId>,
}

impl Sequent {
    pub fn new(antecedent: Context, succedent: Formula, system: Arc<SystemId>) -> Sequent {
        Sequent { antecedent, succedent, system }
    }

    pub fn with_context(&self, antecedent: Context, succedent: Formula) -> Sequent {
        Sequent { antecedent, succedent, system: self.system.clone() }
    }

    pub fn complexity(&self) -> usize {
        self.antecedent.total_complexity() + self.succedent.complexity()
    }

    /// Every subformula of every formula in the sequent.
    pub fn subformulas(&self) -> BTreeSet<Formula> {
        let mut out = BTreeSet::new();
        for f in self.antecedent.formulas() {
            f.collect_subformulas(&mut out);
        }
        self.succedent.collect_subformulas(&mut out);
        out
    }

    pub fn formulas(&self) -> Vec<&Formula> {
        let mut v = self.antecedent.formulas();
        v.push(&self.succedent);
        v
    }

    /// Checks context kind and the language of every formula.
    pub fn validate(&self) -> Result<(), ValidationError> {
        let tree_kind = matches!(self.antecedent, Context::Tree(_));
        if tree_kind != self.system.kind.has_serial() {
            return Err(ValidationError::Context(format!(
                "{} sequents need {} contexts",
                self.system.kind,
                if self.system.kind.has_serial() { "tree" } else { "multiset" }
            )));
        }
        for f in self.formulas() {
            f.validate(&self.system)?;
        }
        Ok(())
    }
}

impl fmt::Display for Sequent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.antecedent.is_empty() {
            write!(f, "|- {}", self.succedent)
        } else {
            write!(f, "{} |- {}", self.antecedent, self.succedent)
        }
    }
}

/// Parses `CTX |- FORMULA` for `system`.
pub fn parse_sequent(text: &str, system: &SystemId) -> Result<Sequent, ParseError> {
    parse_sequent_arc(text, Arc::new(system.clone()))
}

pub fn parse_sequent_arc(text: &str, system: Arc<SystemId>) -> Result<Sequent, ParseError> {
    let mut p = Parser::new(text)?;
    let tree = if *p.peek() == Tok::Turnstile { Tree::Empty } else { parse_par(&mut p)? };
    p.expect(Tok::Turnstile)?;
    let succedent = p.formula()?;
    if *p.peek() != Tok::Eof {
        return Err(p.error(&["end of input"]));
    }
    let antecedent = if system.kind.has_serial() {
        Context::Tree(tree.normalize())
    } else {
        Context::MSet(flatten_multiset(&tree)?)
    };
    let s = Sequent { antecedent, succedent, system };
    s.validate()?;
    Ok(s)
}

/// Parses a bare context (no turnstile).
pub fn parse_context(text: &str, system: &SystemId) -> Result<Context, ParseError> {
    let mut p = Parser::new(text)?;
    let tree = if *p.peek() == Tok::Eof { Tree::Empty } else { parse_par(&mut p)? };
    if *p.peek() != Tok::Eof {
        return Err(p.error(&["end of input"]));
    }
    let ctx = if system.kind.has_serial() {
        Context::Tree(tree.normalize())
    } else {
        Context::MSet(flatten_multiset(&tree)?)
    };
    for f in ctx.formulas() {
        f.validate(system)?;
    }
    Ok(ctx)
}

fn flatten_multiset(t: &Tree) -> Result<Multiset, ParseError> {
    match t {
        Tree::Empty => Ok(Multiset::empty()),
        Tree::Leaf(f) => Ok(Multiset::singleton(f.clone())),
        Tree::Par(cs) if cs.iter().all(|c| matches!(c, Tree::Leaf(_))) => {
            Ok(Multiset::new(cs.iter().flat_map(|c| c.formulas()).cloned().collect()))
        }
        _ => Err(ValidationError::Context(
            "commutative systems take comma-separated formulas only".into(),
        )
        .into()),
    }
}

fn parse_par(p: &mut Parser) -> Result<Tree, ParseError> {
    let mut items = vec![parse_ser(p)?];
    while *p.peek() == Tok::Comma {
        p.bump();
        items.push(parse_ser(p)?);
    }
    Ok(if items.len() == 1 { items.pop().expect("item") } else { Tree::Par(items) })
}

fn parse_ser(p: &mut Parser) -> Result<Tree, ParseError> {
    let mut items = vec![parse_item(p)?];
    while *p.peek() == Tok::Semi {
        p.bump();
        items.push(parse_item(p)?);
    }
    Ok(if items.len() == 1 { items.pop().expect("item") } else { Tree::Ser(items) })
}

fn parse_item(p: &mut Parser) -> Result<Tree, ParseError> {
    match (p.peek(), p.peek2()) {
        (Tok::LBrack, Tok::RBrack) => Ok(Tree::Leaf(p.formula()?)),
        (Tok::LBrack, _) => {
            p.bump();
            let t = parse_par(p)?;
            p.expect(Tok::RBrack)?;
            Ok(t)
        }
        (Tok::LParen, Tok::RParen) => {
            p.bump();
            p.bump();
            Ok(Tree::Empty)
        }
        _ => Ok(Tree::Leaf(p.formula()?)),
    }
}

/// Agents mentioned anywhere in a sequent text, for building a covering alphabet.
pub fn infer_system(kind: crate::syntax::SystemKind, text: &str) -> Result<SystemId, ParseError> {
    let mut p = Parser::new(text)?;
    let tree = if *p.peek() == Tok::Turnstile { Tree::Empty } else { parse_par(&mut p)? };
    p.expect(Tok::Turnstile)?;
    let succ = p.formula()?;
    let mut all: Vec<Formula> = tree.formulas().into_iter().cloned().collect();
    all.push(succ);
    Ok(SystemId::covering(kind, all.iter()))
}

/// Occurrence counts of the formulas in a context.
pub fn occurrences(ctx: &Context) -> BTreeMap<Formula, usize> {
    let mut m = BTreeMap::new();
    for f in ctx.formulas() {
        *m.entry(f.clone()).or_insert(0) += 1;
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_formula;

    fn l(s: &str) -> Tree {
        Tree::Leaf(parse_formula(s).unwrap())
    }

    #[test]
    fn normalize_examples() {
        assert_eq!(Tree::Par(vec![l("q"), l("p")]).normalize(), Tree::Par(vec![l("p"), l("q")]));
        assert_eq!(
            Tree::Ser(vec![l("p"), Tree::Ser(vec![l("q"), l("r")])]).normalize(),
            Tree::Ser(vec![l("p"), l("q"), l("r")])
        );
        assert_eq!(Tree::Par(vec![Tree::Empty, l("p")]).normalize(), l("p"));
        assert_eq!(Tree::Ser(vec![Tree::Empty, Tree::Empty]).normalize(), Tree::Empty);
    }

    #[test]
    fn to_formula_examples() {
        let sys = SystemId::mill();
        let m = parse_context("A, B", &sys).unwrap();
        assert_eq!(m.to_formula(), parse_formula("A * B").unwrap());
        assert_eq!(Tree::Empty.to_formula(), Formula::Unit);
        assert_eq!(Tree::Ser(vec![l("S"), l("F")]).to_formula(), parse_formula("S @ F").unwrap());
        assert_eq!(Context::MSet(Multiset::empty()).to_formula(), Formula::Unit);
    }

    #[test]
    fn positions_examples() {
        assert_eq!(l("p").positions(), vec![Position::root()]);
        assert_eq!(
            Tree::ser(vec![l("p"), l("q")]).positions(),
            vec![Position::root(), Position(vec![0]), Position(vec![1])]
        );
        let t = Tree::par(vec![l("p"), Tree::ser(vec![l("q"), l("r")])]);
        assert_eq!(t.positions().len(), 5);
    }

    #[test]
    fn fill_examples() {
        assert_eq!(l("p").fill(&Position::root(), &l("q")).unwrap(), l("q"));
        let s = Tree::ser(vec![l("p"), l("q")]);
        assert_eq!(s.fill(&Position(vec![1]), &Tree::Empty).unwrap(), l("p"));
        let par = Tree::par(vec![l("p"), l("q")]);
        let filled = par.fill(&Position(vec![0]), &Tree::ser(vec![l("r"), l("s")])).unwrap();
        assert_eq!(filled, Tree::par(vec![Tree::ser(vec![l("r"), l("s")]), l("q")]));
        assert!(par.fill(&Position(vec![7]), &Tree::Empty).is_err());
    }

    #[test]
    fn split_examples() {
        let sys = SystemId::mill();
        assert_eq!(parse_context("A", &sys).unwrap().split_parallel().len(), 2);
        assert_eq!(parse_context("A, B", &sys).unwrap().split_parallel().len(), 4);
        assert_eq!(parse_context("A, A", &sys).unwrap().split_parallel().len(), 3);
        assert_eq!(Tree::par(vec![l("p"), l("q"), l("r")]).split_parallel().len(), 8);
        assert_eq!(Tree::ser(vec![l("p"), l("q")]).split_serial().len(), 3);
        assert_eq!(l("p").split_serial().len(), 2);
        assert_eq!(Tree::ser(vec![l("a"), l("b"), l("c")]).split_serial().len(), 4);
    }

    #[test]
    fn preimage_examples() {
        assert_eq!(l("p").structural_preimages(16).0, vec![l("p")]);
        let (pre, over) = Tree::par(vec![l("p"), l("q")]).structural_preimages(16);
        assert!(!over);
        let set: BTreeSet<Tree> = pre.into_iter().collect();
        let want: BTreeSet<Tree> = [
            Tree::par(vec![l("p"), l("q")]),
            Tree::ser(vec![l("p"), l("q")]),
            Tree::ser(vec![l("q"), l("p")]),
        ]
        .into_iter()
        .collect();
        assert_eq!(set, want);
        assert_eq!(Tree::ser(vec![l("p"), l("q")]).structural_preimages(16).0.len(), 1);
        let (_, over) = Tree::par(vec![l("a"), l("b"), l("c"), l("d"), l("e")]).structural_preimages(10);
        assert!(over);
    }

    #[test]
    fn preimages_group_whole_subcontexts() {
        // [a, b]; [c, d] is reachable from a, b, c, d
        let t = Tree::par(vec![l("a"), l("b"), l("c"), l("d")]);
        let target = Tree::ser(vec![Tree::par(vec![l("a"), l("b")]), Tree::par(vec![l("c"), l("d")])]);
        assert!(t.structural_preimages(DEFAULT_STRUCTURAL_BOUND).0.contains(&target));
    }

    #[test]
    fn sequent_parsing_and_printing() {
        let sys: SystemId = "SRSBIAT[i,s]".parse().unwrap();
        let s = parse_sequent("S ; E[i]F ; E[s](S @ F \\ T) |- T", &sys).unwrap();
        match &s.antecedent {
            Context::Tree(Tree::Ser(cs)) => assert_eq!(cs.len(), 3),
            other => panic!("{other:?}"),
        }
        let again = parse_sequent(&s.to_string(), &sys).unwrap();
        assert_eq!(again, s);

        let nested = parse_sequent("[S; E[i]F], [S; E[s]F] |- T * T", &sys).unwrap();
        assert_eq!(parse_sequent(&nested.to_string(), &sys).unwrap(), nested);
        let mixed = parse_sequent("[a, b]; c |- c", &SystemId::pcmill()).unwrap();
        assert_eq!(mixed.to_string(), "[a, b]; c |- c");
        assert_eq!(parse_sequent(&mixed.to_string(), &SystemId::pcmill()).unwrap(), mixed);

        let mill = SystemId::mill();
        let e = parse_sequent("|- 1", &mill).unwrap();
        assert!(e.antecedent.is_empty());
        assert_eq!(e.to_string(), "|- 1");
        assert!(parse_sequent("a; b |- a", &mill).is_err());
        assert!(parse_sequent("[]p, [](q) |- []p", &mill).is_ok());
        assert!(parse_sequent("() |- 1", &SystemId::pcmill()).is_ok());
    }
}
