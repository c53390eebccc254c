//! Independent provability oracle for MILL over two atoms.
//!
//! Every sequent (any number of antecedent formulas) of total complexity up
//! to the bound is enumerated, layer by layer in increasing total complexity.
//! A sequent is derivable when some cut-free rule instance concludes it from
//! derivable premises; premises always sit in lower layers, so one pass per
//! layer reaches the fixpoint. Nothing here uses the library's calculus.

use std::collections::HashMap;
use std::sync::Arc;

use resource_logic::context::{Context, Multiset, Sequent};
use resource_logic::syntax::{Formula, SystemId};

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
enum Node {
    P,
    Q,
    One,
    Tensor(u32, u32),
    With(u32, u32),
    Limp(u32, u32),
    Box(u32),
}

pub struct Oracle {
    nodes: Vec<Node>,
    weight: Vec<usize>,
    by_weight: Vec<Vec<u32>>,
    /// Antecedent (sorted ids) and succedent, mapped to derivability.
    table: HashMap<(Vec<u32>, u32), bool>,
    pub bound: usize,
}

impl Oracle {
    pub fn build(bound: usize) -> Oracle {
        let mut o = Oracle { nodes: vec![], weight: vec![], by_weight: vec![vec![]; bound + 1], table: HashMap::new(), bound };
        for n in [Node::P, Node::Q, Node::One] {
            o.push(n, 1);
        }
        for w in 2..=bound {
            for &b in &o.by_weight[w - 1].clone() {
                o.push(Node::Box(b), w);
            }
            for lw in 1..w - 1 {
                let rw = w - 1 - lw;
                for &l in &o.by_weight[lw].clone() {
                    for &r in &o.by_weight[rw].clone() {
                        o.push(Node::Tensor(l, r), w);
                        o.push(Node::With(l, r), w);
                        o.push(Node::Limp(l, r), w);
                    }
                }
            }
        }
        for total in 1..=bound {
            for sw in 1..=total {
                let ants = o.multisets(total - sw);
                for &s in &o.by_weight[sw].clone() {
                    for a in &ants {
                        let d = o.derivable(a, s);
                        o.table.insert((a.clone(), s), d);
                    }
                }
            }
        }
        o
    }

    fn push(&mut self, n: Node, w: usize) {
        let id = self.nodes.len() as u32;
        self.nodes.push(n);
        self.weight.push(w);
        self.by_weight[w].push(id);
    }

    /// Sorted id multisets of total weight `w`.
    fn multisets(&self, w: usize) -> Vec<Vec<u32>> {
        fn go(o: &Oracle, left: usize, min: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
            if left == 0 {
                out.push(cur.clone());
                return;
            }
            for id in min..o.nodes.len() as u32 {
                let w = o.weight[id as usize];
                if w <= left {
                    cur.push(id);
                    go(o, left - w, id, cur, out);
                    cur.pop();
                }
            }
        }
        let mut out = Vec::new();
        go(self, w, 0, &mut Vec::new(), &mut out);
        out
    }

    fn get(&self, ant: &[u32], s: u32) -> bool {
        let mut key = ant.to_vec();
        key.sort_unstable();
        *self.table.get(&(key, s)).expect("premise in a lower layer")
    }

    fn splits(ant: &[u32]) -> impl Iterator<Item = (Vec<u32>, Vec<u32>)> + '_ {
        (0u32..(1 << ant.len())).map(move |mask| {
            let mut l = Vec::new();
            let mut r = Vec::new();
            for (i, &x) in ant.iter().enumerate() {
                if mask & (1 << i) != 0 {
                    l.push(x);
                } else {
                    r.push(x);
                }
            }
            (l, r)
        })
    }

    fn derivable(&self, ant: &[u32], s: u32) -> bool {
        if ant.len() == 1 && ant[0] == s {
            return true;
        }
        let right = match self.nodes[s as usize] {
            Node::One => ant.is_empty(),
            Node::Tensor(a, b) => Self::splits(ant).any(|(l, r)| self.get(&l, a) && self.get(&r, b)),
            Node::With(a, b) => self.get(ant, a) && self.get(ant, b),
            Node::Limp(a, b) => {
                let mut g = ant.to_vec();
                g.push(a);
                self.get(&g, b)
            }
            Node::Box(b) => match ant {
                [x] => match self.nodes[*x as usize] {
                    Node::Box(a) => self.get(&[a], b) && self.get(&[b], a),
                    _ => false,
                },
                _ => false,
            },
            Node::P | Node::Q => false,
        };
        if right {
            return true;
        }
        for (i, &f) in ant.iter().enumerate() {
            if i > 0 && ant[i - 1] == f {
                continue;
            }
            let mut rest = ant.to_vec();
            rest.remove(i);
            let ok = match self.nodes[f as usize] {
                Node::Tensor(a, b) => {
                    let mut g = rest.clone();
                    g.extend([a, b]);
                    self.get(&g, s)
                }
                Node::With(a, b) => [a, b].iter().any(|&x| {
                    let mut g = rest.clone();
                    g.push(x);
                    self.get(&g, s)
                }),
                Node::One => self.get(&rest, s),
                Node::Limp(a, b) => Self::splits(&rest).any(|(l, mut r)| {
                    r.push(b);
                    self.get(&l, a) && self.get(&r, s)
                }),
                Node::Box(_) | Node::P | Node::Q => false,
            };
            if ok {
                return true;
            }
        }
        false
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn formula(&self, id: u32) -> Formula {
        match self.nodes[id as usize] {
            Node::P => Formula::atom("p"),
            Node::Q => Formula::atom("q"),
            Node::One => Formula::Unit,
            Node::Tensor(a, b) => Formula::tensor(self.formula(a), self.formula(b)),
            Node::With(a, b) => Formula::with(self.formula(a), self.formula(b)),
            Node::Limp(a, b) => Formula::limp(self.formula(a), self.formula(b)),
            Node::Box(a) => Formula::boxed(self.formula(a)),
        }
    }

    /// Every tabled sequent with at most `max_ant` antecedent formulas, with its verdict.
    pub fn sequents(&self, max_ant: usize) -> Vec<(Vec<u32>, u32, bool)> {
        let mut v: Vec<_> = self
            .table
            .iter()
            .filter(|((a, _), _)| a.len() <= max_ant)
            .map(|((a, s), &d)| (a.clone(), *s, d))
            .collect();
        v.sort_unstable();
        v
    }

    pub fn to_sequent(&self, formulas: &[Formula], ant: &[u32], s: u32, system: &Arc<SystemId>) -> Sequent {
        let items = ant.iter().map(|&i| formulas[i as usize].clone()).collect();
        Sequent::new(Context::MSet(Multiset::new(items)), formulas[s as usize].clone(), system.clone())
    }

    pub fn all_formulas(&self) -> Vec<Formula> {
        let mut out: Vec<Formula> = Vec::with_capacity(self.nodes.len());
        for n in &self.nodes {
            let f = match *n {
                Node::P => Formula::atom("p"),
                Node::Q => Formula::atom("q"),
                Node::One => Formula::Unit,
                Node::Tensor(a, b) => Formula::tensor(out[a as usize].clone(), out[b as usize].clone()),
                Node::With(a, b) => Formula::with(out[a as usize].clone(), out[b as usize].clone()),
                Node::Limp(a, b) => Formula::limp(out[a as usize].clone(), out[b as usize].clone()),
                Node::Box(a) => Formula::boxed(out[a as usize].clone()),
            };
            out.push(f);
        }
        out
    }
}
