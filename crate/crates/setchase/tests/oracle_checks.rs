//! Differential checks: the engine against the naive definition-level
//! oracle, plus corpus-based validation of certain answers.

mod common;

use std::collections::BTreeSet;

use common::*;
use setchase::builtins::BuiltinRegistry;
use setchase::chase::{run_chase, ChaseStatus, Strategy};
use setchase::instance::TupleCell;
use setchase::matching::enumerate_assignments;
use setchase::model::EntityRef;
use setchase::oracle::{
    check_certain_against_corpus, check_differential_case, engine_fingerprint,
    generate_differential_case, generate_kb, naive_assignments, naive_is_solution,
    never_failing_check, solution_corpus, Fingerprint, KbGeneratorConfig,
};
use setchase::query::{certain_answers, AnswerSet, AnswerStage};

#[test]
fn naive_agrees_with_engine_on_every_reference_instance() {
    let (kb, _) = load_kb("running_example.kb");
    let registry = BuiltinRegistry::default();
    let script = load_script("running_example.script");
    for steps in 0..=7usize {
        let seq = run_chase(&kb, &registry, &Strategy::Scripted(script.clone()), steps).unwrap();
        for rule in &kb.rules {
            let engine: BTreeSet<Fingerprint> =
                enumerate_assignments(&seq.result, &seq.table, &rule.vars, rule.body())
                    .iter()
                    .map(|mu| engine_fingerprint(&seq.result, mu))
                    .collect();
            let naive: BTreeSet<Fingerprint> =
                naive_assignments(&seq.result, &seq.table, &rule.vars, rule.body(), 64)
                    .unwrap()
                    .into_iter()
                    .map(|a| a.fingerprint)
                    .collect();
            assert_eq!(engine, naive, "rule {} differs at I{}", rule.id, steps);
        }
    }
}

#[test]
fn naive_assignment_of_empty_conjunction_is_the_empty_assignment() {
    let (kb, _) = load_kb("running_example.kb");
    let inst = setchase::Instance::new();
    let vars = setchase::model::VarTable::default();
    let naive = naive_assignments(&inst, &kb.table, &vars, &[], 8).unwrap();
    assert_eq!(naive.len(), 1);
    assert!(naive[0].fingerprint.0.is_empty());
    let engine = enumerate_assignments(&inst, &kb.table, &vars, &[]);
    assert_eq!(engine.len(), 1);
}

#[test]
fn naive_solution_check_on_the_worked_instances() {
    let (mut kb, _) = load_kb("running_example.kb");
    let registry = BuiltinRegistry::default();
    // The base instance is not a solution (r1 is violated).
    let base = setchase::chase::base_instance(&kb, &registry).unwrap();
    assert!(!naive_is_solution(&kb, &registry, &base, 64).unwrap());
    // I' as printed lacks the two reflexive SameHouse facts, so it fails
    // the definition-level check; the closed variant passes.
    let iprime = load_instance(&mut kb.table, "instance_iprime.json");
    assert!(!naive_is_solution(&kb, &registry, &iprime, 64).unwrap());
    let closed = load_instance(&mut kb.table, "instance_iprime_closed.json");
    assert!(naive_is_solution(&kb, &registry, &closed, 64).unwrap());
    let closed_variant = load_instance(&mut kb.table, "instance_iprime_closed_no_null1.json");
    assert!(naive_is_solution(&kb, &registry, &closed_variant, 64).unwrap());
}

#[test]
fn empty_tbox_base_instance_is_a_solution() {
    let (kb, _) = setchase::parse::parse("pred P(e, v).\nfact P(A, 1).").unwrap();
    let registry = BuiltinRegistry::default();
    let base = setchase::chase::base_instance(&kb, &registry).unwrap();
    assert!(naive_is_solution(&kb, &registry, &base, 8).unwrap());
}

#[test]
fn naive_bound_is_enforced() {
    let (kb, _) = load_kb("running_example.kb");
    let registry = BuiltinRegistry::default();
    let base = setchase::chase::base_instance(&kb, &registry).unwrap();
    let err = naive_is_solution(&kb, &registry, &base, 3).unwrap_err();
    assert!(err.to_string().contains("naive bound"), "{err}");
}

#[test]
fn solution_corpus_accepts_closed_extras_and_rejects_non_solutions() {
    let (kb, _) = load_kb("running_example.kb");
    let registry = BuiltinRegistry::default();
    let mut table = kb.table.clone();
    let closed = load_instance(&mut table, "instance_iprime_closed.json");
    let corpus =
        solution_corpus(&kb, &registry, 5, vec![(table.clone(), closed)], 500, 128).unwrap();
    assert_eq!(corpus.len(), 6);
    // Every chase result maps homomorphically into every corpus member.
    for (t2, inst) in &corpus[1..] {
        let hom = setchase::matching::find_homomorphism(&corpus[0].1, inst, t2);
        assert!(hom.is_some());
    }
    // I' without its reflexive facts is not accepted as an extra.
    let mut table2 = kb.table.clone();
    let iprime = load_instance(&mut table2, "instance_iprime.json");
    let err = solution_corpus(&kb, &registry, 0, vec![(table2, iprime)], 500, 128).unwrap_err();
    assert!(
        err.to_string().contains("fails the naive solution check"),
        "{err}"
    );
}

#[test]
fn singleton_corpus_from_one_order() {
    let (kb, _) = load_kb("kbprime.kb");
    let registry = BuiltinRegistry::default();
    let corpus = solution_corpus(&kb, &registry, 1, vec![], 100, 64).unwrap();
    assert_eq!(corpus.len(), 1);
}

#[test]
fn certain_answers_pass_the_corpus_check_and_injected_tuples_fail_it() {
    let (kb, queries) = load_kb("running_example.kb");
    let registry = BuiltinRegistry::default();
    let q1 = query_by_name(&queries, "q1");
    let (answers, _) =
        certain_answers(&kb, &registry, q1, &Strategy::Fair { seed: 0 }, 500).unwrap();
    let corpus = solution_corpus(&kb, &registry, 5, vec![], 500, 128).unwrap();
    let report = check_certain_against_corpus(q1, &answers, &corpus, 128).unwrap();
    assert!(report.passed(), "{report:?}");

    // Injecting the strictly smaller tuple <{Doe1}> violates maximality:
    // it satisfies condition (1) but is dominated by a tuple that also
    // satisfies it.
    let doe1 = EntityRef::Entity(kb.table.lookup_entity("Doe1").unwrap());
    let mut tuples = answers.tuples.clone();
    tuples.insert(vec![TupleCell::Entities([doe1].into())]);
    let injected = AnswerSet {
        stage: AnswerStage::Reduced,
        tuples,
    };
    let report = check_certain_against_corpus(q1, &injected, &corpus, 128).unwrap();
    assert!(!report.passed());
    assert!(!report.maximality_failures.is_empty());
}

#[test]
fn empty_answers_empty_corpus_is_a_vacuous_pass() {
    let (_, queries) = load_kb("running_example.kb");
    let q1 = query_by_name(&queries, "q1");
    let empty = AnswerSet {
        stage: AnswerStage::Reduced,
        tuples: BTreeSet::new(),
    };
    let report = check_certain_against_corpus(q1, &empty, &[], 8).unwrap();
    assert!(report.passed());
}

#[test]
fn generator_is_deterministic_per_seed() {
    for seed in [0u64, 1, 17, 999] {
        let (kb1, q1) = generate_kb(&KbGeneratorConfig::with_seed(seed));
        let (kb2, q2) = generate_kb(&KbGeneratorConfig::with_seed(seed));
        assert_eq!(
            setchase::parse::serialize(&kb1, &q1),
            setchase::parse::serialize(&kb2, &q2)
        );
    }
}

#[test]
fn egd_only_kbs_always_terminate_over_1000_seeds() {
    let registry = BuiltinRegistry::default();
    for seed in 0..1000u64 {
        let cfg = KbGeneratorConfig {
            seed,
            tgd_weight: 0,
            ..KbGeneratorConfig::default()
        };
        let (kb, _) = generate_kb(&cfg);
        assert!(setchase::chase::full_tgd_guarantee(&kb), "seed {seed}");
        let seq = run_chase(&kb, &registry, &Strategy::Fair { seed: 0 }, 2000).unwrap();
        assert_eq!(seq.status, ChaseStatus::Terminated, "seed {seed}");
    }
}

#[test]
fn generated_kbs_round_trip_through_the_parser_over_1000_seeds() {
    for seed in 0..1000u64 {
        let (kb, queries) = generate_kb(&KbGeneratorConfig::with_seed(seed));
        let text = setchase::parse::serialize(&kb, &queries);
        let (kb2, queries2) = setchase::parse::parse(&text)
            .unwrap_or_else(|e| panic!("seed {seed}: serialized KB fails to parse: {e}\n{text}"));
        let text2 = setchase::parse::serialize(&kb2, &queries2);
        assert_eq!(text, text2, "seed {seed}");
    }
}

#[test]
fn matching_differential_passes_on_many_seeds() {
    let cfg = KbGeneratorConfig::default();
    for seed in 0..60u64 {
        let case = generate_differential_case(&KbGeneratorConfig {
            seed,
            ..cfg.clone()
        })
        .unwrap_or_else(|e| panic!("seed {seed}: {e}"));
        check_differential_case(&case, cfg.naive_fact_bound)
            .unwrap_or_else(|e| panic!("seed {seed}: {e}"));
    }
}

#[test]
fn certain_answers_of_generated_kbs_pass_the_corpus_check() {
    // For terminating random KBs, the engine's certain answers satisfy
    // condition (1) against a five-order solution corpus and are maximal
    // relative to it.
    let registry = BuiltinRegistry::default();
    let mut checked = 0;
    let mut seed = 0u64;
    while checked < 10 && seed < 300 {
        let cfg = KbGeneratorConfig::with_seed(seed);
        seed += 1;
        let (kb, queries) = generate_kb(&cfg);
        if kb.rules.is_empty() || queries.is_empty() {
            continue;
        }
        let Ok(corpus) = solution_corpus(&kb, &registry, 5, vec![], 80, 128) else {
            continue; // some fair order did not terminate within the budget
        };
        for q in &queries {
            let (answers, _) = setchase::query::certain_answers(
                &kb,
                &registry,
                q,
                &Strategy::Fair { seed: 0 },
                80,
            )
            .unwrap();
            let report = check_certain_against_corpus(q, &answers, &corpus, 128).unwrap();
            assert!(
                report.passed(),
                "seed {}: corpus check failed for {}: {report:?}",
                seed - 1,
                q.name
            );
        }
        checked += 1;
    }
    assert!(checked >= 10, "only {checked} KBs checked");
}

#[test]
fn query_preservation_holds_across_random_chase_pairs() {
    // For homomorphic chase results of the same KB, every query answer over
    // the source maps under some answer over the target.
    let registry = BuiltinRegistry::default();
    let mut checked = 0;
    let mut seed = 0u64;
    while checked < 25 && seed < 400 {
        let cfg = KbGeneratorConfig::with_seed(seed);
        seed += 1;
        let (kb, queries) = generate_kb(&cfg);
        if kb.rules.is_empty() || queries.is_empty() {
            continue;
        }
        let a = run_chase(&kb, &registry, &Strategy::Fair { seed: 1 }, 80).unwrap();
        let b = run_chase(&kb, &registry, &Strategy::Fair { seed: 2 }, 80).unwrap();
        if a.status != ChaseStatus::Terminated || b.status != ChaseStatus::Terminated {
            continue;
        }
        let Some(hom) = setchase::matching::find_homomorphism(&a.result, &b.result, &a.table)
        else {
            panic!(
                "seed {}: no homomorphism between terminated results",
                seed - 1
            );
        };
        for q in &queries {
            assert!(
                setchase::matching::query_preservation_check(
                    &a.result, &b.result, &a.table, &hom, q
                ),
                "seed {}: query {} not preserved",
                seed - 1,
                q.name
            );
        }
        checked += 1;
    }
    assert!(checked >= 25, "only {checked} KB pairs checked");
}

#[test]
fn chase_never_fails_and_terminated_results_are_solutions() {
    let cfg = KbGeneratorConfig::default();
    let mut terminated = 0;
    for seed in 0..80u64 {
        if never_failing_check(seed, &cfg, 150).unwrap().is_some() {
            terminated += 1;
        }
    }
    assert!(terminated > 20, "only {terminated} of 80 chases terminated");
}
