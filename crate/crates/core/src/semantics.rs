//! Finite modal Kripke resource models.
//!
//! Worlds are indexed `0..n` (at most 64) and sets of worlds are `u64`
//! bitmasks. The order is stored as generator pairs `(w, v)` meaning
//! `w >= v`; its reflexive-transitive closure is computed on construction.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::context::Sequent;
use crate::syntax::{Formula, SystemId, SystemKind, BOT};

pub type WorldSet = u64;

/// Neighbourhood key of the `[]` modality.
pub const BOX_KEY: &str = "box";

pub const MAX_WORLDS: usize = 64;

fn bit(w: usize) -> WorldSet {
    1u64 << w
}

fn members(s: WorldSet) -> impl Iterator<Item = usize> {
    (0..64).filter(move |&i| s & (1u64 << i) != 0)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Model {
    worlds: Vec<String>,
    unit: usize,
    op: Vec<Vec<usize>>,
    serial: Option<Vec<Vec<usize>>>,
    order: Vec<(usize, usize)>,
    valuation: BTreeMap<String, WorldSet>,
    neighbourhoods: BTreeMap<String, Vec<BTreeSet<WorldSet>>>,
    /// `above[x]` = worlds `y` with `y >= x`.
    above: Vec<WorldSet>,
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("a model needs between 1 and {MAX_WORLDS} worlds")]
    WorldCount,
    #[error("duplicate world `{0}`")]
    DuplicateWorld(String),
    #[error("unknown world `{0}`")]
    UnknownWorld(String),
    #[error("operation table has no entry for {0}")]
    MissingEntry(String),
    #[error("malformed table key `{0}`; expected \"w,v\"")]
    BadKey(String),
    #[error("malformed model file: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EvalError {
    #[error("the model has no serial operation")]
    MissingSerial,
    #[error("the model has no neighbourhoods for `{0}`")]
    MissingModality(String),
}

impl Model {
    /// A model with the given monoid and a discrete order.
    pub fn new(worlds: Vec<String>, unit: usize, op: Vec<Vec<usize>>) -> Result<Model, ModelError> {
        let n = worlds.len();
        if n == 0 || n > MAX_WORLDS {
            return Err(ModelError::WorldCount);
        }
        let mut seen = BTreeSet::new();
        for w in &worlds {
            if !seen.insert(w) {
                return Err(ModelError::DuplicateWorld(w.clone()));
            }
        }
        check_table(&op, n)?;
        if unit >= n {
            return Err(ModelError::UnknownWorld(unit.to_string()));
        }
        let mut m = Model {
            worlds,
            unit,
            op,
            serial: None,
            order: Vec::new(),
            valuation: BTreeMap::new(),
            neighbourhoods: BTreeMap::new(),
            above: Vec::new(),
        };
        m.recompute_order();
        Ok(m)
    }

    /// The one-world model: `w`, `w.w = w`, no neighbourhoods.
    pub fn one_world() -> Model {
        Model::new(vec!["w".into()], 0, vec![vec![0]]).expect("valid")
    }

    pub fn with_serial_op(mut self, serial: Vec<Vec<usize>>) -> Result<Model, ModelError> {
        check_table(&serial, self.len())?;
        self.serial = Some(serial);
        Ok(self)
    }

    /// Adds the generator `w >= v`.
    pub fn add_order(&mut self, w: usize, v: usize) {
        if !self.order.contains(&(w, v)) {
            self.order.push((w, v));
            self.recompute_order();
        }
    }

    pub fn set_valuation(&mut self, atom: &str, set: WorldSet) {
        self.valuation.insert(atom.to_string(), set & self.all());
    }

    /// Declares the modality `key` (with empty families if new).
    pub fn declare_modality(&mut self, key: &str) {
        let n = self.len();
        self.neighbourhoods.entry(key.to_string()).or_insert_with(|| vec![BTreeSet::new(); n]);
    }

    pub fn add_neighbourhood(&mut self, key: &str, world: usize, set: WorldSet) {
        self.declare_modality(key);
        let all = self.all();
        self.neighbourhoods.get_mut(key).expect("declared")[world].insert(set & all);
    }

    pub fn len(&self) -> usize {
        self.worlds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.worlds.is_empty()
    }

    pub fn worlds(&self) -> &[String] {
        &self.worlds
    }

    pub fn world_index(&self, name: &str) -> Option<usize> {
        self.worlds.iter().position(|w| w == name)
    }

    pub fn unit(&self) -> usize {
        self.unit
    }

    pub fn op(&self, x: usize, y: usize) -> usize {
        self.op[x][y]
    }

    pub fn serial_op(&self, x: usize, y: usize) -> Option<usize> {
        self.serial.as_ref().map(|t| t[x][y])
    }

    pub fn has_serial(&self) -> bool {
        self.serial.is_some()
    }

    pub fn valuation(&self, atom: &str) -> WorldSet {
        self.valuation.get(atom).copied().unwrap_or(0)
    }

    pub fn neighbourhood(&self, key: &str, world: usize) -> Option<&BTreeSet<WorldSet>> {
        self.neighbourhoods.get(key).map(|n| &n[world])
    }

    pub fn modalities(&self) -> impl Iterator<Item = &str> {
        self.neighbourhoods.keys().map(String::as_str)
    }

    pub fn all(&self) -> WorldSet {
        if self.len() == 64 {
            u64::MAX
        } else {
            bit(self.len()) - 1
        }
    }

    /// `w >= v` in the closed order.
    pub fn geq(&self, w: usize, v: usize) -> bool {
        self.above[v] & bit(w) != 0
    }

    /// `X↑ = {y | y >= x, x in X}`.
    pub fn up(&self, x: WorldSet) -> WorldSet {
        members(x).fold(0, |acc, w| acc | self.above[w])
    }

    pub fn is_up_closed(&self, x: WorldSet) -> bool {
        self.up(x) == x
    }

    fn recompute_order(&mut self) {
        let n = self.len();
        // below[w] = worlds v with w >= v; start reflexive
        let mut below: Vec<WorldSet> = (0..n).map(bit).collect();
        for &(w, v) in &self.order {
            below[w] |= bit(v);
        }
        loop {
            let mut changed = false;
            for w in 0..n {
                let reach = members(below[w]).fold(below[w], |acc, v| acc | below[v]);
                if reach != below[w] {
                    below[w] = reach;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        self.above = (0..n)
            .map(|v| (0..n).filter(|&w| below[w] & bit(v) != 0).fold(0, |acc, w| acc | bit(w)))
            .collect();
    }

    fn compose(&self, table: &[Vec<usize>], x: WorldSet, y: WorldSet) -> WorldSet {
        let mut out = 0;
        for a in members(x) {
            for b in members(y) {
                out |= bit(table[a][b]);
            }
        }
        out
    }

    /// `X ∘ Y` (without upward closure).
    pub fn op_set(&self, x: WorldSet, y: WorldSet) -> WorldSet {
        self.compose(&self.op, x, y)
    }

    pub fn serial_set(&self, x: WorldSet, y: WorldSet) -> Option<WorldSet> {
        self.serial.as_ref().map(|t| self.compose(t, x, y))
    }

    fn serial_table(&self) -> Result<&Vec<Vec<usize>>, EvalError> {
        self.serial.as_ref().ok_or(EvalError::MissingSerial)
    }

    fn modal(&self, key: &str, body: WorldSet) -> Result<WorldSet, EvalError> {
        let fam = self.neighbourhoods.get(key).ok_or_else(|| EvalError::MissingModality(key.to_string()))?;
        Ok((0..self.len()).filter(|&m| fam[m].contains(&body)).fold(0, |acc, m| acc | bit(m)))
    }

    /// `||f||`, the set of worlds forcing `f`.
    pub fn extension(&self, f: &Formula) -> Result<WorldSet, EvalError> {
        let n = self.len();
        Ok(match f {
            Formula::Unit => self.above[self.unit],
            Formula::Atom(p) => self.valuation(p),
            Formula::With(a, b) => self.extension(a)? & self.extension(b)?,
            Formula::Tensor(a, b) => {
                let (a, b) = (self.extension(a)?, self.extension(b)?);
                self.up(self.op_set(a, b))
            }
            Formula::Odot(a, b) => {
                let t = self.serial_table()?;
                let (a, b) = (self.extension(a)?, self.extension(b)?);
                self.up(self.compose(t, a, b))
            }
            Formula::Limp(a, b) => {
                let (a, b) = (self.extension(a)?, self.extension(b)?);
                (0..n).filter(|&m| members(a).all(|x| b & bit(self.op[x][m]) != 0)).fold(0, |acc, m| acc | bit(m))
            }
            Formula::Lres(a, b) => {
                let t = self.serial_table()?;
                let (a, b) = (self.extension(a)?, self.extension(b)?);
                (0..n).filter(|&m| members(a).all(|x| b & bit(t[x][m]) != 0)).fold(0, |acc, m| acc | bit(m))
            }
            Formula::Rres(b, a) => {
                let t = self.serial_table()?;
                let (a, b) = (self.extension(a)?, self.extension(b)?);
                (0..n).filter(|&m| members(a).all(|x| b & bit(t[m][x]) != 0)).fold(0, |acc, m| acc | bit(m))
            }
            Formula::Box(a) => self.modal(BOX_KEY, self.extension(a)?)?,
            Formula::Brings(k, a) => self.modal(k, self.extension(a)?)?,
        })
    }

    pub fn eval(&self, w: usize, f: &Formula) -> Result<bool, EvalError> {
        Ok(self.extension(f)? & bit(w) != 0)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Model, ModelError> {
        let file: ModelFile = serde_json::from_str(text)?;
        Model::from_file(file)
    }

    fn name_set(&self, s: WorldSet) -> Vec<String> {
        members(s).map(|w| self.worlds[w].clone()).collect()
    }

    fn table_map(&self, t: &[Vec<usize>]) -> BTreeMap<String, String> {
        let mut out = BTreeMap::new();
        for (x, row) in t.iter().enumerate() {
            for (y, &z) in row.iter().enumerate() {
                out.insert(format!("{},{}", self.worlds[x], self.worlds[y]), self.worlds[z].clone());
            }
        }
        out
    }

    fn to_file(&self) -> ModelFile {
        ModelFile {
            worlds: self.worlds.clone(),
            unit: self.worlds[self.unit].clone(),
            op: self.table_map(&self.op),
            serial_op: self.serial.as_ref().map(|t| self.table_map(t)),
            order: self.order.iter().map(|&(w, v)| [self.worlds[w].clone(), self.worlds[v].clone()]).collect(),
            valuation: self.valuation.iter().map(|(p, &s)| (p.clone(), self.name_set(s))).collect(),
            neighbourhoods: self
                .neighbourhoods
                .iter()
                .map(|(k, fam)| {
                    let per_world = fam
                        .iter()
                        .enumerate()
                        .filter(|(_, sets)| !sets.is_empty())
                        .map(|(w, sets)| (self.worlds[w].clone(), sets.iter().map(|&s| self.name_set(s)).collect()))
                        .collect();
                    (k.clone(), per_world)
                })
                .collect(),
        }
    }

    fn from_file(f: ModelFile) -> Result<Model, ModelError> {
        let n = f.worlds.len();
        let index = |name: &str| -> Result<usize, ModelError> {
            f.worlds.iter().position(|w| w == name).ok_or_else(|| ModelError::UnknownWorld(name.to_string()))
        };
        let set = |names: &[String]| -> Result<WorldSet, ModelError> {
            names.iter().try_fold(0, |acc, w| Ok(acc | bit(index(w)?)))
        };
        let table = |map: &BTreeMap<String, String>| -> Result<Vec<Vec<usize>>, ModelError> {
            let mut t = vec![vec![usize::MAX; n]; n];
            for (k, v) in map {
                let (x, y) = k.split_once(',').ok_or_else(|| ModelError::BadKey(k.clone()))?;
                t[index(x.trim())?][index(y.trim())?] = index(v)?;
            }
            for (x, row) in t.iter().enumerate() {
                for (y, &z) in row.iter().enumerate() {
                    if z == usize::MAX {
                        return Err(ModelError::MissingEntry(format!("{},{}", f.worlds[x], f.worlds[y])));
                    }
                }
            }
            Ok(t)
        };
        if n == 0 || n > MAX_WORLDS {
            return Err(ModelError::WorldCount);
        }
        let mut m = Model::new(f.worlds.clone(), index(&f.unit)?, table(&f.op)?)?;
        if let Some(s) = &f.serial_op {
            m.serial = Some(table(s)?);
        }
        for [w, v] in &f.order {
            m.order.push((index(w)?, index(v)?));
        }
        m.recompute_order();
        for (p, ws) in &f.valuation {
            m.valuation.insert(p.clone(), set(ws)?);
        }
        for (k, per_world) in &f.neighbourhoods {
            m.declare_modality(k);
            for (w, sets) in per_world {
                let wi = index(w)?;
                for s in sets {
                    let s = set(s)?;
                    m.neighbourhoods.get_mut(k).expect("declared")[wi].insert(s);
                }
            }
        }
        Ok(m)
    }
}

fn check_table(t: &[Vec<usize>], n: usize) -> Result<(), ModelError> {
    if t.len() != n || t.iter().any(|row| row.len() != n) {
        return Err(ModelError::MissingEntry("table shape".into()));
    }
    if let Some(z) = t.iter().flatten().find(|&&z| z >= n) {
        return Err(ModelError::UnknownWorld(z.to_string()));
    }
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    worlds: Vec<String>,
    unit: String,
    op: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    serial_op: Option<BTreeMap<String, String>>,
    order: Vec<[String; 2]>,
    valuation: BTreeMap<String, Vec<String>>,
    neighbourhoods: BTreeMap<String, BTreeMap<String, Vec<Vec<String>>>>,
}

/// One failed frame condition.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FrameFailure {
    pub condition: &'static str,
    pub detail: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub failures: Vec<FrameFailure>,
}

impl ValidationReport {
    pub fn is_pass(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn failed(&self, condition: &str) -> bool {
        self.failures.iter().any(|f| f.condition == condition)
    }

    fn push(&mut self, condition: &'static str, detail: String) {
        // one witness per condition keeps reports readable
        if !self.failed(condition) {
            self.failures.push(FrameFailure { condition, detail });
        }
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_pass() {
            return f.write_str("pass");
        }
        for x in &self.failures {
            writeln!(f, "{}: {}", x.condition, x.detail)?;
        }
        Ok(())
    }
}

/// Frame conditions on agent neighbourhoods for a system.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct FrameConditionSet {
    pub not_nec: bool,
    pub refl: bool,
    pub tensor: bool,
    pub with: bool,
    pub odot: bool,
}

impl FrameConditionSet {
    pub fn for_system(kind: SystemKind) -> FrameConditionSet {
        match kind {
            SystemKind::Mill | SystemKind::Pcmill => FrameConditionSet::default(),
            SystemKind::Rsbiat => FrameConditionSet { not_nec: true, refl: true, tensor: true, with: true, odot: false },
            SystemKind::Srsbiat => FrameConditionSet { not_nec: true, refl: true, tensor: true, with: true, odot: true },
        }
    }
}

/// Modality keys a model must provide for `system`.
pub fn modality_keys(system: &SystemId) -> Vec<String> {
    if system.kind.has_agents() {
        system.agents.iter().cloned().collect()
    } else {
        vec![BOX_KEY.to_string()]
    }
}

fn check_monoid(m: &Model, r: &mut ValidationReport, t: &[Vec<usize>], commutative: bool, name: &'static str) {
    let n = m.len();
    let w = |i: usize| &m.worlds[i];
    for x in 0..n {
        if t[m.unit][x] != x || t[x][m.unit] != x {
            r.push(name, format!("{} is not neutral for {}", w(m.unit), w(x)));
        }
        for y in 0..n {
            if commutative && t[x][y] != t[y][x] {
                r.push(name, format!("{}.{} != {}.{}", w(x), w(y), w(y), w(x)));
            }
            for z in 0..n {
                if t[t[x][y]][z] != t[x][t[y][z]] {
                    r.push(name, format!("not associative on {}, {}, {}", w(x), w(y), w(z)));
                }
            }
        }
    }
}

fn check_bifunctorial(m: &Model, r: &mut ValidationReport, t: &[Vec<usize>], name: &'static str) {
    let n = m.len();
    for a in 0..n {
        for b in members(m.below(a)) {
            for c in 0..n {
                for d in members(m.below(c)) {
                    if !m.geq(t[a][c], t[b][d]) {
                        r.push(
                            name,
                            format!(
                                "{} >= {} and {} >= {} but not {} >= {}",
                                m.worlds[a], m.worlds[b], m.worlds[c], m.worlds[d], m.worlds[t[a][c]], m.worlds[t[b][d]]
                            ),
                        );
                    }
                }
            }
        }
    }
}

impl Model {
    /// Worlds `v` with `w >= v`.
    pub fn below(&self, w: usize) -> WorldSet {
        (0..self.len()).filter(|&v| self.geq(w, v)).fold(0, |acc, v| acc | bit(v))
    }

    fn set_names(&self, s: WorldSet) -> String {
        format!("{{{}}}", self.name_set(s).join(","))
    }
}

/// Checks every structural invariant and the frame conditions of `system`.
pub fn validate_model(m: &Model, system: &SystemId) -> ValidationReport {
    let mut r = ValidationReport::default();
    let n = m.len();
    check_monoid(m, &mut r, &m.op, true, "monoid");
    check_bifunctorial(m, &mut r, &m.op, "bifunctoriality");
    for (p, &v) in &m.valuation {
        if !m.is_up_closed(v) {
            r.push("valuation-heredity", format!("V({p}) is not upward closed"));
        }
    }
    for (k, fam) in &m.neighbourhoods {
        for x in 0..n {
            for &s in &fam[x] {
                for y in members(m.above[x]) {
                    if !fam[y].contains(&s) {
                        r.push(
                            "condition-1",
                            format!("{} in N_{k}({}) but not in N_{k}({})", m.set_names(s), m.worlds[x], m.worlds[y]),
                        );
                    }
                }
            }
        }
    }
    if system.kind.has_serial() {
        match &m.serial {
            None => r.push("serial-op", "partially commutative systems need a serial operation".into()),
            Some(t) => {
                check_monoid(m, &mut r, t, false, "serial-monoid");
                check_bifunctorial(m, &mut r, t, "serial-bifunctoriality");
                for x in 0..n {
                    for y in 0..n {
                        if !m.geq(m.op[x][y], t[x][y]) {
                            r.push("entropy", format!("not {0}.{1} >= {0};{1}", m.worlds[x], m.worlds[y]));
                        }
                    }
                }
            }
        }
    }
    for key in modality_keys(system) {
        if !m.neighbourhoods.contains_key(&key) {
            r.push("modality", format!("no neighbourhoods for `{key}`"));
        }
    }
    let conds = FrameConditionSet::for_system(system.kind);
    let bot = m.valuation(BOT);
    for key in system.agents.iter().filter(|_| system.kind.has_agents()) {
        let Some(fam) = m.neighbourhoods.get(key) else { continue };
        for x in 0..n {
            for &s in &fam[x] {
                if conds.not_nec && s & bit(m.unit) != 0 && bot & bit(x) == 0 {
                    r.push("condition-2", format!("e in {} in N_{key}({}) but {} not in V(bot)", m.set_names(s), m.worlds[x], m.worlds[x]));
                }
                if conds.refl && s & bit(x) == 0 {
                    r.push("condition-3", format!("{} in N_{key}({}) does not contain it", m.set_names(s), m.worlds[x]));
                }
                if conds.with {
                    for &s2 in &fam[x] {
                        if !fam[x].contains(&(s & s2)) {
                            r.push("condition-5", format!("N_{key}({}) not closed under intersection", m.worlds[x]));
                        }
                    }
                }
                for y in 0..n {
                    for &s2 in &fam[y] {
                        if conds.tensor {
                            let z = m.up(m.op_set(s, s2));
                            if !fam[m.op[x][y]].contains(&z) {
                                r.push("condition-4", format!("(X.Y)up missing from N_{key}({})", m.worlds[m.op[x][y]]));
                            }
                        }
                        if conds.odot {
                            if let Some(t) = &m.serial {
                                let z = m.up(m.compose(t, s, s2));
                                if !fam[t[x][y]].contains(&z) {
                                    r.push("condition-6", format!("(X;Y)up missing from N_{key}({})", m.worlds[t[x][y]]));
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    r
}

/// `e` forces `Γ* -o A` (or `Γ⁺ -o A` for trees).
pub fn sequent_valid(m: &Model, s: &Sequent) -> Result<bool, EvalError> {
    m.eval(m.unit, &sequent_formula(s))
}

pub fn sequent_formula(s: &Sequent) -> Formula {
    Formula::limp(s.antecedent.to_formula(), s.succedent.clone())
}

/// Default atoms given a valuation by [`random_model`].
pub const DEFAULT_ATOMS: [&str; 3] = ["p", "q", "r"];

/// Deterministic random model of `size` worlds passing [`validate_model`] for `system`.
pub fn random_model(seed: u64, size: usize, system: &SystemId) -> Model {
    let atoms: Vec<String> = DEFAULT_ATOMS.iter().map(|s| s.to_string()).collect();
    random_model_for(seed, size, system, &atoms)
}

/// As [`random_model`], with valuations for the given atoms (and `bot`).
pub fn random_model_for(seed: u64, size: usize, system: &SystemId, atoms: &[String]) -> Model {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let frame = random_frame(&mut rng, size.clamp(1, 8), system.kind.has_serial());
    let mut m = frame;
    let ups = up_sets(&m);
    for p in atoms {
        if p != BOT {
            let v = *ups.choose(&mut rng).expect("nonempty");
            m.set_valuation(p, v);
        }
    }
    decorate(&mut rng, &mut m, system, &ups);
    m
}

#[derive(Clone, Copy, Debug)]
enum Family {
    Cyclic,
    Capped,
    Join,
    Nil,
    Meet,
    LeftZero,
    RightZero,
}

const COMMUTATIVE: [Family; 5] = [Family::Cyclic, Family::Capped, Family::Join, Family::Nil, Family::Meet];
const SERIAL: [Family; 7] =
    [Family::LeftZero, Family::RightZero, Family::Cyclic, Family::Capped, Family::Join, Family::Nil, Family::Meet];

/// Table on `0..n` with unit 0.
fn family_table(f: Family, n: usize) -> Vec<Vec<usize>> {
    let top = n - 1;
    let mut t = vec![vec![0; n]; n];
    for x in 0..n {
        for y in 0..n {
            t[x][y] = if x == 0 {
                y
            } else if y == 0 {
                x
            } else {
                match f {
                    Family::Cyclic => (x + y) % n,
                    Family::Capped => (x + y).min(top),
                    Family::Join => x.max(y),
                    Family::Nil => top,
                    Family::Meet => x.min(y),
                    Family::LeftZero => x,
                    Family::RightZero => y,
                }
            };
        }
    }
    t
}

fn relabel(t: &[Vec<usize>], perm: &[usize]) -> Vec<Vec<usize>> {
    let n = t.len();
    let mut out = vec![vec![0; n]; n];
    for x in 0..n {
        for y in 0..n {
            out[perm[x]][perm[y]] = perm[t[x][y]];
        }
    }
    out
}

fn random_frame(rng: &mut ChaCha8Rng, n: usize, serial: bool) -> Model {
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(rng);
    let op = relabel(&family_table(*COMMUTATIVE.choose(rng).expect("nonempty"), n), &perm);
    let ser = serial.then(|| relabel(&family_table(*SERIAL.choose(rng).expect("nonempty"), n), &perm));
    let worlds = (0..n).map(|i| format!("w{i}")).collect();
    let mut m = Model::new(worlds, perm[0], op).expect("valid table");
    m.serial = ser;
    let extra = rng.gen_range(0..=n);
    let mut pairs = Vec::new();
    for _ in 0..extra {
        pairs.push((rng.gen_range(0..n), rng.gen_range(0..n)));
    }
    if let Some(t) = &m.serial {
        for x in 0..n {
            for y in 0..n {
                pairs.push((m.op[x][y], t[x][y]));
            }
        }
    }
    close_order(&mut m, pairs);
    m
}

/// Closes `pairs` under reflexivity, transitivity and compatibility with both operations.
fn close_order(m: &mut Model, pairs: Vec<(usize, usize)>) {
    let n = m.len();
    let mut below: Vec<WorldSet> = (0..n).map(bit).collect();
    for (w, v) in pairs {
        below[w] |= bit(v);
    }
    loop {
        let mut changed = false;
        for w in 0..n {
            let reach = members(below[w]).fold(below[w], |acc, v| acc | below[v]);
            if reach != below[w] {
                below[w] = reach;
                changed = true;
            }
        }
        // w >= v gives w.c >= v.c, and c;w >= c;v for the serial operation
        for w in 0..n {
            for v in members(below[w]) {
                for c in 0..n {
                    let mut add = vec![(m.op[w][c], m.op[v][c])];
                    if let Some(t) = &m.serial {
                        add.push((t[w][c], t[v][c]));
                        add.push((t[c][w], t[c][v]));
                    }
                    for (a, b) in add {
                        if below[a] & bit(b) == 0 {
                            below[a] |= bit(b);
                            changed = true;
                        }
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }
    m.order = (0..n).flat_map(|w| members(below[w]).filter(move |&v| v != w).map(move |v| (w, v))).collect();
    m.recompute_order();
}

/// All upward-closed sets of a model.
pub fn up_sets(m: &Model) -> Vec<WorldSet> {
    let n = m.len();
    if n <= 16 {
        (0..(1u64 << n)).filter(|&s| m.is_up_closed(s)).collect()
    } else {
        // too many subsets to list; principal up-sets and their unions with the empty set
        let mut v: Vec<WorldSet> = (0..n).map(|w| m.above[w]).collect();
        v.push(0);
        v.push(m.all());
        v.sort_unstable();
        v.dedup();
        v
    }
}

/// Random neighbourhoods and `V(bot)` repaired until every condition of `system` holds.
fn decorate(rng: &mut ChaCha8Rng, m: &mut Model, system: &SystemId, ups: &[WorldSet]) {
    let n = m.len();
    let conds = FrameConditionSet::for_system(system.kind);
    let mut candidates: Vec<WorldSet> = ups.to_vec();
    candidates.extend(m.valuation.values().copied());
    for key in modality_keys(system) {
        m.declare_modality(&key);
        let agent = system.kind.has_agents();
        for w in 0..n {
            for _ in 0..rng.gen_range(0..=2) {
                let mut s = *candidates.choose(rng).expect("nonempty");
                if agent {
                    s = m.up(s | bit(w));
                }
                m.neighbourhoods.get_mut(&key).expect("declared")[w].insert(s);
            }
        }
        repair(m, &key, conds, agent);
    }
    if conds.not_nec {
        let mut bot = m.valuation(BOT);
        for key in modality_keys(system) {
            let fam = &m.neighbourhoods[&key];
            for (w, sets) in fam.iter().enumerate() {
                if sets.iter().any(|&s| s & bit(m.unit) != 0) {
                    bot |= bit(w);
                }
            }
        }
        let bot = m.up(bot);
        m.set_valuation(BOT, bot);
    }
}

fn repair(m: &mut Model, key: &str, conds: FrameConditionSet, agent: bool) {
    let n = m.len();
    loop {
        let mut fam = m.neighbourhoods[key].clone();
        let before: usize = fam.iter().map(BTreeSet::len).sum();
        // heredity
        for x in 0..n {
            let sets: Vec<WorldSet> = fam[x].iter().copied().collect();
            for y in members(m.above[x]) {
                fam[y].extend(sets.iter().copied());
            }
        }
        if agent {
            let snapshot = fam.clone();
            for x in 0..n {
                for &s in &snapshot[x] {
                    if conds.with {
                        for &s2 in &snapshot[x] {
                            fam[x].insert(s & s2);
                        }
                    }
                    for y in 0..n {
                        for &s2 in &snapshot[y] {
                            if conds.tensor {
                                fam[m.op[x][y]].insert(m.up(m.op_set(s, s2)));
                            }
                            if conds.odot {
                                if let Some(t) = &m.serial {
                                    fam[t[x][y]].insert(m.up(m.compose(t, s, s2)));
                                }
                            }
                        }
                    }
                }
            }
        }
        let after: usize = fam.iter().map(BTreeSet::len).sum();
        m.neighbourhoods.insert(key.to_string(), fam);
        if after == before {
            break;
        }
    }
}

/// A model falsifying a sequent together with the witness world.
#[derive(Clone, Debug)]
pub struct Countermodel {
    pub model: Model,
    /// A world forcing the antecedent but not the succedent.
    pub witness: usize,
}

/// Searches validated models of up to `max_size` worlds for one falsifying `s`.
///
/// `None` says nothing about provability.
pub fn find_countermodel(s: &Sequent, max_size: usize, seed: u64) -> Option<Countermodel> {
    let system = &*s.system;
    let atoms: BTreeSet<String> = s.formulas().iter().flat_map(|f| f.atoms()).collect();
    let atoms: Vec<String> = atoms.into_iter().filter(|a| a != BOT).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for size in 1..=max_size.min(8) {
        let frames = if size == 1 { 1 } else { 40 * size };
        for _ in 0..frames {
            let frame = random_frame(&mut rng, size, system.kind.has_serial());
            let ups = up_sets(&frame);
            let total = (ups.len() as u128).checked_pow(atoms.len() as u32).unwrap_or(u128::MAX);
            let valuations: Vec<Vec<WorldSet>> = if total <= 512 {
                (0..total as usize)
                    .map(|mut code| {
                        atoms
                            .iter()
                            .map(|_| {
                                let v = ups[code % ups.len()];
                                code /= ups.len();
                                v
                            })
                            .collect()
                    })
                    .collect()
            } else {
                (0..64).map(|_| atoms.iter().map(|_| *ups.choose(&mut rng).expect("nonempty")).collect()).collect()
            };
            for val in valuations {
                for _ in 0..2 {
                    let mut m = frame.clone();
                    for (p, &v) in atoms.iter().zip(&val) {
                        m.set_valuation(p, v);
                    }
                    decorate(&mut rng, &mut m, system, &ups);
                    if let Some(c) = falsify(&m, s) {
                        return Some(c);
                    }
                }
            }
        }
    }
    None
}

fn falsify(m: &Model, s: &Sequent) -> Option<Countermodel> {
    let ant = m.extension(&s.antecedent.to_formula()).ok()?;
    let succ = m.extension(&s.succedent).ok()?;
    let bad = ant & !succ;
    (bad != 0).then(|| Countermodel { model: m.clone(), witness: bad.trailing_zeros() as usize })
}

/// Extensions realised by formulas over `atoms`, grouped by complexity `1..=max`.
///
/// Extensions are compositional, so the layers are computed on sets of worlds
/// rather than on formulas.
pub fn extension_layers(m: &Model, atoms: &[&str], max: usize, system: &SystemId) -> Vec<BTreeSet<WorldSet>> {
    let mut layers: Vec<BTreeSet<WorldSet>> = vec![BTreeSet::new(); max + 1];
    if max == 0 {
        return layers;
    }
    layers[1].insert(m.above[m.unit]);
    for a in atoms {
        layers[1].insert(m.valuation(a));
    }
    let keys = modality_keys(system);
    let n = m.len();
    let residual = |x: WorldSet, y: WorldSet, f: &dyn Fn(usize, usize) -> usize| {
        (0..n).filter(|&w| members(x).all(|v| y & bit(f(v, w)) != 0)).fold(0, |acc, w| acc | bit(w))
    };
    for k in 2..=max {
        let mut out = BTreeSet::new();
        for key in &keys {
            if let Some(fam) = m.neighbourhoods.get(key) {
                for &x in &layers[k - 1] {
                    out.insert((0..n).filter(|&w| fam[w].contains(&x)).fold(0, |acc, w| acc | bit(w)));
                }
            }
        }
        for i in 1..k - 1 {
            let j = k - 1 - i;
            for &x in &layers[i] {
                for &y in &layers[j] {
                    out.insert(x & y);
                    out.insert(m.up(m.op_set(x, y)));
                    out.insert(residual(x, y, &|v, w| m.op[v][w]));
                    if let Some(t) = &m.serial {
                        out.insert(m.up(m.compose(t, x, y)));
                        out.insert(residual(x, y, &|v, w| t[v][w]));
                        out.insert(residual(x, y, &|v, w| t[w][v]));
                    }
                }
            }
        }
        layers[k] = out;
    }
    layers
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::context::parse_sequent;
    use crate::syntax::parse_formula;

    fn f(s: &str) -> Formula {
        parse_formula(s).unwrap()
    }

    #[test]
    fn one_world_passes() {
        let m = Model::one_world();
        assert!(validate_model(&m, &SystemId::mill()).failures.iter().all(|x| x.condition == "modality"));
        let mut m = m;
        m.declare_modality(BOX_KEY);
        assert!(validate_model(&m, &SystemId::mill()).is_pass());
        assert!(m.eval(0, &Formula::Unit).unwrap());
    }

    fn two_worlds() -> Model {
        // e = u, w >= u is not assumed; u.u = u, u.w = w, w.w = w
        Model::new(vec!["u".into(), "w".into()], 0, vec![vec![0, 1], vec![1, 1]]).unwrap()
    }

    #[test]
    fn condition_one_violation() {
        let mut m = two_worlds();
        m.add_order(1, 0);
        m.add_neighbourhood(BOX_KEY, 0, 0b10);
        let r = validate_model(&m, &SystemId::mill());
        assert!(r.failed("condition-1"), "{r}");
    }

    #[test]
    fn condition_three_violation() {
        let mut m = two_worlds();
        m.add_neighbourhood("a", 0, 0b10);
        let r = validate_model(&m, &"RSBIAT[a]".parse().unwrap());
        assert!(r.failed("condition-3"), "{r}");
    }

    #[test]
    fn simple_countermodel() {
        let mut m = two_worlds();
        m.declare_modality(BOX_KEY);
        m.set_valuation("p", 0b10);
        let mill = SystemId::mill();
        assert!(validate_model(&m, &mill).is_pass());
        assert!(!sequent_valid(&m, &parse_sequent("p |- q", &mill).unwrap()).unwrap());
        assert!(sequent_valid(&m, &parse_sequent("p |- p", &mill).unwrap()).unwrap());
        assert!(m.eval(1, &f("p")).unwrap());
    }

    #[test]
    fn random_models_validate() {
        for sys in ["MILL", "PCMILL", "RSBIAT[a,b]", "SRSBIAT[a]"] {
            let sys: SystemId = sys.parse().unwrap();
            for seed in 0..60 {
                let size = 1 + (seed as usize % 5);
                let m = random_model(seed, size, &sys);
                let r = validate_model(&m, &sys);
                assert!(r.is_pass(), "{sys} seed {seed}: {r}");
            }
        }
        assert_eq!(random_model(7, 4, &SystemId::mill()), random_model(7, 4, &SystemId::mill()));
        assert_eq!(random_model(1, 1, &SystemId::mill()).len(), 1);
    }

    #[test]
    fn json_round_trip() {
        let sys: SystemId = "SRSBIAT[a]".parse().unwrap();
        let m = random_model(3, 4, &sys);
        let text = m.to_json();
        let back = Model::from_json(&text).unwrap();
        assert_eq!(back.to_json(), text);
        assert_eq!(validate_model(&back, &sys), validate_model(&m, &sys));
    }

    #[test]
    fn countermodels() {
        let mill = SystemId::mill();
        let s = parse_sequent("p |- q", &mill).unwrap();
        let c = find_countermodel(&s, 2, 0).unwrap();
        assert!(c.model.len() <= 2);
        assert!(find_countermodel(&parse_sequent("A |- A", &mill).unwrap(), 3, 0).is_none());
        let sr: SystemId = "SRSBIAT".parse().unwrap();
        let c = find_countermodel(&parse_sequent("p @ q |- q @ p", &sr).unwrap(), 4, 0).unwrap();
        assert!(validate_model(&c.model, &sr).is_pass());
    }

    #[test]
    fn upward_closure_laws() {
        let sys: SystemId = "PCMILL".parse().unwrap();
        for seed in 0..20 {
            let m = random_model(seed, 4, &sys);
            for x in 0..16u64 {
                assert_eq!(m.up(m.up(x)), m.up(x));
                assert_eq!(m.up(x) & x, x);
            }
            let (a, b) = (f("p"), f("q"));
            assert_eq!(
                m.extension(&Formula::with(a.clone(), b.clone())).unwrap(),
                m.extension(&a).unwrap() & m.extension(&b).unwrap()
            );
        }
    }
}
