mod common;

use std::sync::Arc;

use common::mill_oracle::Oracle;
use resource_logic::search::{prove, SearchBudget};
use resource_logic::syntax::SystemId;

#[test]
fn search_matches_enumeration_oracle_up_to_six() {
    let oracle = Oracle::build(6);
    let formulas = oracle.all_formulas();
    let mill = Arc::new(SystemId::mill());
    let mut checked = 0;
    for (ant, s, expected) in oracle.sequents(2) {
        let goal = oracle.to_sequent(&formulas, &ant, s, &mill);
        let got = prove(&goal, &SearchBudget::default()).is_proved();
        assert_eq!(got, expected, "{goal}");
        checked += 1;
    }
    assert!(checked > 1000);
}

#[test]
fn oracle_agrees_on_known_cases() {
    let oracle = Oracle::build(6);
    let formulas = oracle.all_formulas();
    let mill = Arc::new(SystemId::mill());
    let verdicts: std::collections::HashMap<String, bool> = oracle
        .sequents(2)
        .into_iter()
        .map(|(a, s, d)| (oracle.to_sequent(&formulas, &a, s, &mill).to_string(), d))
        .collect();
    assert_eq!(verdicts["p * q |- q * p"], true);
    assert_eq!(verdicts["p |- p * p"], false);
    assert_eq!(verdicts["p, q |- p"], false);
    assert_eq!(verdicts["|- 1"], true);
    assert_eq!(verdicts["[]p |- p"], false);
}
