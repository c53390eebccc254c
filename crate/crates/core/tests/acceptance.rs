//! Acceptance run: one PASS/FAIL line per criterion. Exits non-zero on failure.

mod common;

use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::mill_oracle::Oracle;
use resource_logic::calculus::{check_proof, Proof, RuleId};
use resource_logic::context::{parse_sequent, Sequent};
use resource_logic::corpus::CorpusEntry;
use resource_logic::cutelim::{compose_random, eliminate_cuts, reduce_once, subproof_pool, CutElimError};
use resource_logic::hilbert::{
    check_deduction, deduction_theorem, find_assumption, hilbert_to_sequent, random_deduction, schema_deduction,
    schemata,
};
use resource_logic::par::{self, Mode};
use resource_logic::search::{prove, prove_with_stats, subformula_audit, SearchBudget, Verdict};
use resource_logic::semantics::{
    extension_layers, find_countermodel, random_model_for, sequent_valid, validate_model,
};
use resource_logic::syntax::{Formula, SystemId, SystemKind};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn budget() -> SearchBudget {
    SearchBudget::default()
}

fn entry<'a>(entries: &'a [CorpusEntry], id: &str) -> Option<&'a CorpusEntry> {
    entries.iter().find(|e| e.id == id)
}

fn criterion_1() -> Outcome {
    let entries = common::example_corpus();
    let required = [
        "screwdriver",
        "screwdriver-serial",
        "two-screwdrivers",
        "electric-screwdriver",
        "rowboat",
        "ladder",
        "monkey-wrench",
        "warranty-3",
    ];
    let mut failures = Vec::new();
    let mut slowest = Duration::ZERO;
    for id in required {
        let Some(e) = entry(&entries, id) else {
            failures.push(format!("{id}: missing"));
            continue;
        };
        let start = Instant::now();
        let result = prove(&e.sequent, &budget());
        let took = start.elapsed();
        slowest = slowest.max(took);
        match result.proof() {
            Some(p) if check_proof(p).is_empty() && took < Duration::from_secs(60) => {}
            Some(_) => failures.push(format!("{id}: proof does not check or took {took:?}")),
            None => failures.push(format!("{id}: not proved")),
        }
    }
    outcome(
        failures.is_empty(),
        format!("{} provable example sequents, slowest {:.1} ms {}", required.len(), slowest.as_secs_f64() * 1e3, failures.join("; ")),
    )
}

fn criterion_2() -> Outcome {
    let entries = common::example_corpus();
    let required = [
        ("no-reuse", Verdict::Unprovable),
        ("force-after-tool", Verdict::BoundedUnknown),
        ("screw-last", Verdict::BoundedUnknown),
        ("force-first", Verdict::BoundedUnknown),
        ("warranty-3-parallel-goal", Verdict::BoundedUnknown),
    ];
    let mut failures = Vec::new();
    let mut countermodels = Vec::new();
    for (id, want) in required {
        let Some(e) = entry(&entries, id) else {
            failures.push(format!("{id}: missing"));
            continue;
        };
        let got = prove(&e.sequent, &budget()).verdict(e.system.kind.has_serial());
        if got != want {
            failures.push(format!("{id}: {got}, expected {want}"));
        }
        let found = find_countermodel(&e.sequent, 4, 7).map(|c| c.model.len());
        countermodels.push(format!("{id}={}", found.map_or("none".to_string(), |n| format!("{n}w"))));
    }
    outcome(
        failures.is_empty(),
        format!("verdicts ok for {} sequents; countermodels (<=4 worlds): {} {}", required.len(), countermodels.join(" "), failures.join("; ")),
    )
}

fn criterion_3() -> Outcome {
    let mut failures = Vec::new();
    let mut proved = 0;
    for sys in [Arc::new(SystemId::mill()), Arc::new("RSBIAT[a]".parse::<SystemId>().unwrap())] {
        for s in schemata().iter().filter(|s| !s.needs_agents || sys.kind.has_agents()) {
            let d = schema_deduction(s.name, &sys).expect("instance");
            let goal = Sequent::new(resource_logic::context::Context::empty_for(&sys), d.formula().clone(), sys.clone());
            if prove(&goal, &budget()).is_proved() {
                proved += 1;
            } else {
                failures.push(format!("{} in {}", s.name, sys));
            }
        }
    }
    let non_theorems = [
        ("MILL", "p |- p * p"),
        ("MILL", "p * q |- p"),
        ("PCMILL", "p @ q |- q @ p"),
        ("PCMILL", "p @ q |- p * q"),
    ];
    let mut sizes = Vec::new();
    for (sys, text) in non_theorems {
        let system: SystemId = sys.parse().unwrap();
        let s = parse_sequent(text, &system).unwrap();
        let v = prove(&s, &budget()).verdict(system.kind.has_serial());
        if v == Verdict::Provable {
            failures.push(format!("{text} proved"));
        }
        match find_countermodel(&s, 4, 0) {
            Some(c) => {
                assert!(!sequent_valid(&c.model, &s).unwrap());
                sizes.push(format!("{text} [{v}, {}w]", c.model.len()));
            }
            None => failures.push(format!("{text}: no countermodel")),
        }
    }
    outcome(
        failures.is_empty(),
        format!("{proved}/23 schema instances proved; {} {}", sizes.join(", "), failures.join("; ")),
    )
}

fn golden_box() -> Result<(), String> {
    let mill = SystemId::mill();
    let sq = |t: &str| parse_sequent(t, &mill).unwrap();
    let pr = |t: &str| prove(&sq(t), &budget()).proof().cloned().ok_or(format!("{t} unprovable"));
    let (b, c, d) = ("p * q", "q * p", "(p * q) & (q * p)");
    let bc = pr(&format!("{b} |- {c}"))?;
    let cb = pr(&format!("{c} |- {b}"))?;
    let cd = pr(&format!("{c} |- {d}"))?;
    let dc = pr(&format!("{d} |- {c}"))?;
    let left = Proof::new(sq(&format!("[]({b}) |- []({c})")), RuleId::BoxRe, vec![bc.clone(), cb.clone()]);
    let right = Proof::new(sq(&format!("[]({c}) |- []({d})")), RuleId::BoxRe, vec![cd.clone(), dc.clone()]);
    let before = Proof::new(sq(&format!("[]({b}) |- []({d})")), RuleId::Cut, vec![left, right]);
    let expected = Proof::new(
        sq(&format!("[]({b}) |- []({d})")),
        RuleId::BoxRe,
        vec![
            Proof::new(sq(&format!("{b} |- {d}")), RuleId::Cut, vec![bc, cd]),
            Proof::new(sq(&format!("{d} |- {b}")), RuleId::Cut, vec![dc, cb]),
        ],
    );
    let (after, _) = reduce_once(&before).map_err(|e| e.to_string())?.ok_or("no step")?;
    if after != expected {
        return Err("box reduction differs from the expected tree".into());
    }
    Ok(())
}

fn golden_not_nec() -> Result<(), String> {
    let r: SystemId = "RSBIAT[a]".parse().unwrap();
    let sq = |t: &str| parse_sequent(t, &r).unwrap();
    let pr = |t: &str| prove(&sq(t), &budget()).proof().cloned().ok_or(format!("{t} unprovable"));
    let (a, b) = ("p -o p", "(p -o p) & (p -o p)");
    let ab = pr(&format!("{a} |- {b}"))?;
    let ba = pr(&format!("{b} |- {a}"))?;
    let tb = pr(&format!("|- {b}"))?;
    let re = Proof::new(sq(&format!("E[a]({a}) |- E[a]({b})")), RuleId::BringsRe("a".into()), vec![ab, ba.clone()]);
    let nn = Proof::new(sq(&format!("E[a]({b}) |- bot")), RuleId::NotNec("a".into()), vec![tb.clone()]);
    let before = Proof::new(sq(&format!("E[a]({a}) |- bot")), RuleId::Cut, vec![re, nn]);
    let expected = Proof::new(
        sq(&format!("E[a]({a}) |- bot")),
        RuleId::NotNec("a".into()),
        vec![Proof::new(sq(&format!("|- {a}")), RuleId::Cut, vec![tb, ba])],
    );
    let (after, _) = reduce_once(&before).map_err(|e| e.to_string())?.ok_or("no step")?;
    if after != expected {
        return Err("not-nec reduction differs from the expected tree".into());
    }
    Ok(())
}

fn criterion_4() -> Outcome {
    let entries = common::full_corpus();
    let mut pools = Vec::new();
    for kind in SystemKind::ALL {
        let sys = common::covering_system(&entries, kind);
        pools.push(subproof_pool(&common::corpus_proofs(&entries, kind, &sys)));
    }
    let seeds: Vec<u64> = (0..200).collect();
    let results = par::map(Mode::Parallel, &seeds, |&seed| -> Result<usize, String> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pool = &pools[seed as usize % pools.len()];
        let p = compose_random(&mut rng, pool, 3).ok_or(format!("seed {seed}: nothing to compose"))?;
        if !check_proof(&p).is_empty() || p.is_cut_free() {
            return Err(format!("seed {seed}: generator produced a bad proof"));
        }
        let t = eliminate_cuts(&p).map_err(|e| match e {
            CutElimError::Irreducible { prover, user, .. } => format!("seed {seed}: irreducible {prover}/{user}"),
            _ => format!("seed {seed}: {e}"),
        })?;
        let q = &t.final_proof;
        let ok = t.steps.len() < 100_000
            && q.is_cut_free()
            && q.conclusion == p.conclusion
            && check_proof(q).is_empty()
            && subformula_audit(q).is_empty()
            && prove(&p.conclusion, &budget()).is_proved();
        if ok {
            Ok(t.steps.len())
        } else {
            Err(format!("seed {seed}: output fails a check"))
        }
    });
    let mut failures: Vec<String> = results.iter().filter_map(|r| r.as_ref().err().cloned()).collect();
    let max_steps = results.iter().filter_map(|r| r.as_ref().ok()).max().copied().unwrap_or(0);
    for (name, g) in [("box golden", golden_box()), ("not-nec golden", golden_not_nec())] {
        if let Err(e) = g {
            failures.push(format!("{name}: {e}"));
        }
    }
    let passed = results.iter().filter(|r| r.is_ok()).count();
    let irreducible = failures.iter().filter(|f| f.contains("irreducible")).count();
    outcome(
        failures.is_empty(),
        format!(
            "{passed}/200 composed proofs normalised (max {max_steps} steps), {irreducible} stuck on a cut with no cut-free reduct; {}",
            if failures.is_empty() { "golden box and not-nec cases match".to_string() } else { failures.join("; ") }
        ),
    )
}

fn criterion_5() -> Outcome {
    let entries = common::full_corpus();
    let mut failures = Vec::new();
    let mut checks = 0usize;
    let mut probes = 0usize;
    for kind in SystemKind::ALL {
        let sys = common::covering_system(&entries, kind);
        let proved: Vec<&CorpusEntry> = entries
            .iter()
            .filter(|e| e.system.kind == kind && prove(&e.sequent, &budget()).is_proved())
            .collect();
        let mut atoms: Vec<String> = proved.iter().flat_map(|e| e.sequent.formulas()).flat_map(|f| f.atoms()).collect();
        atoms.extend(["p", "q"].map(String::from));
        atoms.sort();
        atoms.dedup();
        atoms.retain(|a| a != "bot");
        for seed in 0..100u64 {
            let size = 1 + (seed as usize % 5);
            let m = random_model_for(seed, size, &sys, &atoms);
            if !validate_model(&m, &sys).is_pass() {
                failures.push(format!("{kind:?} seed {seed}: model fails validation"));
                continue;
            }
            for e in &proved {
                checks += 1;
                if sequent_valid(&m, &e.sequent) != Ok(true) {
                    failures.push(format!("{kind:?} seed {seed}: {} not valid", e.id));
                }
            }
            let layers = extension_layers(&m, &["p", "q"], 7, &sys);
            for (k, layer) in layers.iter().enumerate() {
                for &x in layer {
                    probes += 1;
                    if !m.is_up_closed(x) {
                        failures.push(format!("{kind:?} seed {seed}: extension {x:#b} not up-closed"));
                    }
                    if !m.has_serial() {
                        continue;
                    }
                    for (j, other) in layers.iter().enumerate() {
                        if k + j + 1 > 7 || k == 0 || j == 0 {
                            continue;
                        }
                        for &y in other {
                            let tensor = m.up(m.op_set(x, y));
                            let odot = m.up(m.serial_set(x, y).unwrap());
                            if tensor & !odot != 0 {
                                failures.push(format!("{kind:?} seed {seed}: entropy inclusion fails"));
                            }
                        }
                    }
                }
            }
        }
    }
    failures.dedup();
    outcome(
        failures.is_empty(),
        format!("{checks} sequent/model checks, {probes} extension probes, {} violations {}", failures.len(), failures.iter().take(3).cloned().collect::<Vec<_>>().join("; ")),
    )
}

fn criterion_6() -> Outcome {
    let oracle = Oracle::build(8);
    let formulas = oracle.all_formulas();
    let mill = Arc::new(SystemId::mill());
    let sequents = oracle.sequents(2);
    let results = par::map(Mode::Parallel, &sequents, |(ant, s, expected)| {
        let goal = oracle.to_sequent(&formulas, ant, *s, &mill);
        (prove(&goal, &budget()).is_proved() == *expected, *expected)
    });
    let disagreements = results.iter().filter(|r| !r.0).count();
    let provable = results.iter().filter(|r| r.1).count();
    outcome(
        disagreements == 0,
        format!("{} MILL sequents ({} provable), {} disagreements", sequents.len(), provable, disagreements),
    )
}

fn criterion_7() -> Outcome {
    let mut failures = Vec::new();
    let mill = Arc::new(SystemId::mill());
    let rsbiat: Arc<SystemId> = Arc::new("RSBIAT[a]".parse().unwrap());
    let mut schema_count = 0;
    for sys in [&mill, &rsbiat] {
        for s in schemata().iter().filter(|s| !s.needs_agents || sys.kind.has_agents()) {
            schema_count += 1;
            let d = schema_deduction(s.name, sys).expect("instance");
            if !check_deduction(&d, sys).is_empty() {
                failures.push(format!("{} deduction fails", s.name));
            }
            match hilbert_to_sequent(&d) {
                Ok(p) if check_proof(&p).is_empty() => {}
                _ => failures.push(format!("{} translation fails", s.name)),
            }
        }
    }
    for seed in 0..50u64 {
        let sys = if seed % 2 == 0 { &mill } else { &rsbiat };
        let d = random_deduction(seed, sys, 8);
        let a = d.assumptions().items()[0].clone();
        let pick = find_assumption(&d, &a).expect("live occurrence");
        let out = match deduction_theorem(&d, &pick) {
            Ok(o) => o,
            Err(e) => {
                failures.push(format!("seed {seed}: {e}"));
                continue;
            }
        };
        let mut expected = d.assumptions();
        expected.remove(&a);
        let exact = out.assumptions() == expected && *out.formula() == Formula::limp(a, d.formula().clone());
        let translated = hilbert_to_sequent(&out).map(|p| check_proof(&p).is_empty()).unwrap_or(false);
        if !check_deduction(&out, sys).is_empty() || !exact || !translated {
            failures.push(format!("seed {seed}: discharged tree fails"));
        }
    }
    outcome(
        failures.is_empty(),
        format!("{schema_count} schema deductions checked and translated, 50 discharged trees {}", if failures.is_empty() { "exact".to_string() } else { failures.join("; ") }),
    )
}

fn criterion_8() -> Outcome {
    let entries = common::full_corpus();
    let mut failures = Vec::new();
    let mut worst = 0.0f64;
    for e in &entries {
        let (_, stats) = prove_with_stats(&e.sequent, &budget());
        let bound = 4 * e.sequent.complexity();
        worst = worst.max(stats.peak_depth as f64 / e.sequent.complexity() as f64);
        if stats.peak_depth > bound || stats.peak_visited > stats.peak_depth {
            failures.push(format!("{}: depth {} visited {} bound {}", e.id, stats.peak_depth, stats.peak_visited, bound));
        }
    }
    outcome(
        failures.is_empty(),
        format!("{} corpus sequents, peak branch depth at most {:.2} x complexity {}", entries.len(), worst, failures.join("; ")),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("example corpus, provable set", criterion_1),
        ("example corpus, unprovable set", criterion_2),
        ("axiom schemata and non-theorems", criterion_3),
        ("cut elimination", criterion_4),
        ("soundness on random models", criterion_5),
        ("oracle equivalence", criterion_6),
        ("Hilbert bridge", criterion_7),
        ("search memory bound", criterion_8),
    ];
    let mut all = true;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = run();
        all &= o.pass;
        println!(
            "criterion {}: {} | {} | {} ({:.1} s)",
            i + 1,
            if o.pass { "PASS" } else { "FAIL" },
            name,
            o.detail.trim(),
            start.elapsed().as_secs_f64()
        );
    }
    if !all {
        std::process::exit(1);
    }
}
