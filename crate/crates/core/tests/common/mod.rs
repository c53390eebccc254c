//! Helpers shared by the integration tests.
#![allow(dead_code)]

pub mod mill_oracle;

use std::path::PathBuf;
use std::sync::Arc;

use resource_logic::calculus::Proof;
use resource_logic::corpus::{load_dir, CorpusEntry};
use resource_logic::cutelim::rehome;
use resource_logic::search::{prove, SearchBudget};
use resource_logic::syntax::{SystemId, SystemKind};

pub fn corpus_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

pub fn example_corpus() -> Vec<CorpusEntry> {
    load_dir(&corpus_root().join("examples")).expect("example corpus loads")
}

pub fn full_corpus() -> Vec<CorpusEntry> {
    load_dir(&corpus_root()).expect("corpus loads")
}

/// One system per kind whose alphabet covers every corpus entry of that kind.
pub fn covering_system(entries: &[CorpusEntry], kind: SystemKind) -> Arc<SystemId> {
    let mut agents: Vec<String> = entries
        .iter()
        .filter(|e| e.system.kind == kind)
        .flat_map(|e| e.system.agents.iter().cloned())
        .collect();
    if kind.has_agents() {
        agents.push(resource_logic::syntax::DEFAULT_AGENT.to_string());
        Arc::new(SystemId::with_agents(kind, agents).expect("agents"))
    } else {
        Arc::new(SystemId::new(kind))
    }
}

/// Cut-free proofs of every provable corpus entry of `kind`, over `system`.
pub fn corpus_proofs(entries: &[CorpusEntry], kind: SystemKind, system: &Arc<SystemId>) -> Vec<Proof> {
    entries
        .iter()
        .filter(|e| e.system.kind == kind)
        .filter_map(|e| prove(&e.sequent, &SearchBudget::default()).proof().cloned())
        .map(|p| rehome(&p, system))
        .collect()
}
