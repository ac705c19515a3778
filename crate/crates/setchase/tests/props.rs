//! Property tests: dominance is a partial order, the answer reduction is
//! an idempotent antichain operator, the parser never panics on arbitrary
//! bytes, and instance JSON round-trips.

mod common;

use std::collections::BTreeSet;

use common::*;
use proptest::prelude::*;
use setchase::builtins::BuiltinRegistry;
use setchase::chase::{run_chase, Strategy as ChaseStrategy};
use setchase::instance::{compare_tuples, Dominance, TupleCell};
use setchase::model::ValueRef;
use setchase::query::{reduce, AnswerSet, AnswerStage};

fn arb_cell() -> impl Strategy<Value = TupleCell> {
    prop::collection::btree_set(0u32..6, 1..4)
        .prop_map(|s| TupleCell::Values(s.into_iter().map(ValueRef::Null).collect()))
}

fn arb_tuple(width: usize) -> impl Strategy<Value = Vec<TupleCell>> {
    prop::collection::vec(arb_cell(), width)
}

proptest! {
    #[test]
    fn dominance_is_reflexive(t in arb_tuple(2)) {
        prop_assert_eq!(compare_tuples(&t, &t).unwrap(), Dominance::Equal);
    }

    #[test]
    fn dominance_is_antisymmetric(a in arb_tuple(2), b in arb_tuple(2)) {
        let ab = compare_tuples(&a, &b).unwrap();
        let ba = compare_tuples(&b, &a).unwrap();
        match ab {
            Dominance::Equal => prop_assert_eq!(ba, Dominance::Equal),
            Dominance::StrictlyDominatedBy => {
                prop_assert_eq!(ba, Dominance::StrictlyDominates)
            }
            Dominance::StrictlyDominates => {
                prop_assert_eq!(ba, Dominance::StrictlyDominatedBy)
            }
            Dominance::Incomparable => prop_assert_eq!(ba, Dominance::Incomparable),
        }
    }

    #[test]
    fn dominance_is_transitive(a in arb_tuple(2), b in arb_tuple(2), c in arb_tuple(2)) {
        use Dominance::*;
        let le = |x: &Vec<TupleCell>, y: &Vec<TupleCell>| {
            matches!(compare_tuples(x, y).unwrap(), Equal | StrictlyDominatedBy)
        };
        if le(&a, &b) && le(&b, &c) {
            prop_assert!(le(&a, &c));
        }
    }

    #[test]
    fn reduce_yields_an_idempotent_antichain(
        tuples in prop::collection::btree_set(arb_tuple(2), 0..12)
    ) {
        let raw = AnswerSet { stage: AnswerStage::NullFree, tuples };
        let reduced = reduce(&raw);
        // Antichain: no strict domination between surviving tuples.
        for a in &reduced.tuples {
            for b in &reduced.tuples {
                prop_assert_ne!(
                    compare_tuples(a, b).unwrap(),
                    Dominance::StrictlyDominatedBy
                );
            }
        }
        // Idempotent.
        prop_assert_eq!(&reduce(&reduced).tuples, &reduced.tuples);
        // Every dropped tuple is dominated by a survivor.
        for t in raw.tuples.difference(&reduced.tuples) {
            prop_assert!(reduced.tuples.iter().any(|u| matches!(
                compare_tuples(t, u).unwrap(),
                Dominance::StrictlyDominatedBy
            )));
        }
    }

    #[test]
    fn parser_never_panics_on_arbitrary_input(input in "\\PC*") {
        let _ = setchase::parse::parse(&input);
    }

    #[test]
    fn parser_never_panics_on_arbitrary_bytes(bytes in prop::collection::vec(any::<u8>(), 0..200)) {
        if let Ok(text) = std::str::from_utf8(&bytes) {
            let _ = setchase::parse::parse(text);
        }
    }
}

#[test]
fn instances_and_tables_are_shareable_across_threads() {
    fn assert_send_sync<T: Send + Sync>() {}
    assert_send_sync::<setchase::Instance>();
    assert_send_sync::<setchase::SymbolTable>();
    assert_send_sync::<setchase::KnowledgeBase>();
}

#[test]
fn instance_json_round_trips() {
    // The chase result of the running example, dumped and re-loaded, is the
    // same instance (same canonical fact keys, same classes).
    let (kb, _) = load_kb("running_example.kb");
    let registry = BuiltinRegistry::default();
    let seq = run_chase(&kb, &registry, &ChaseStrategy::Fair { seed: 0 }, 500).unwrap();
    let json = seq.result.to_json(&seq.table);
    let mut table = seq.table.clone();
    let reloaded = setchase::Instance::from_json(&mut table, &json).unwrap();
    assert_eq!(reloaded.fact_keys(), seq.result.fact_keys());
    assert_eq!(reloaded.to_json(&table), json);
    let golden_fixtures = [
        "instance_iprime.json",
        "instance_iprime_closed.json",
        "instance_iprime_no_null1.json",
        "kbprime_i1.json",
        "kbprime_i2.json",
    ];
    for name in golden_fixtures {
        let (mut kb, _) = load_kb("running_example.kb");
        let (mut kbp, _) = load_kb("kbprime.kb");
        let table = if name.starts_with("kbprime") {
            &mut kbp.table
        } else {
            &mut kb.table
        };
        let inst = load_instance(table, name);
        let json = inst.to_json(table);
        let reloaded = setchase::Instance::from_json(table, &json).unwrap();
        assert_eq!(reloaded.fact_keys(), inst.fact_keys(), "{name}");
    }
}

#[test]
fn chase_keeps_instances_coherent_and_monotone() {
    // Containment along a chase: every fact of an earlier instance is
    // dominated by some fact of every later instance, and the equivalence
    // relation only grows.
    let (kb, _) = load_kb("running_example.kb");
    let seq = run_scripted(&kb, "running_example_closure.script", 100);
    seq.result.check_invariants(&seq.table).unwrap();

    let registry = BuiltinRegistry::default();
    let script = load_script("running_example_closure.script");
    let mut previous: Option<setchase::Instance> = None;
    for steps in 0..=9usize {
        let prefix = run_chase(
            &kb,
            &registry,
            &ChaseStrategy::Scripted(script.clone()),
            steps,
        )
        .unwrap()
        .result;
        prefix.check_invariants(&seq.table).unwrap();
        if let Some(prev) = &previous {
            for (_, fact) in prev.facts() {
                let dominated = prefix.facts().any(|(_, g)| {
                    g.pred == fact.pred
                        && fact.cells.iter().zip(&g.cells).all(|(a, b)| match (a, b) {
                            (setchase::Cell::Class(ca), setchase::Cell::Class(cb)) => {
                                prev.class_members(*ca).is_subset(prefix.class_members(*cb))
                            }
                            (setchase::Cell::Values(va), setchase::Cell::Values(vb)) => {
                                va.is_subset(vb)
                            }
                            _ => false,
                        })
                });
                assert!(
                    dominated,
                    "a fact of I{} is not dominated at I{steps}",
                    steps - 1
                );
            }
            // under(I) grows.
            let (pe, pv) = prev.underlying_domain();
            let (ce, cv) = prefix.underlying_domain();
            assert!(pe.is_subset(&ce) && pv.is_subset(&cv));
            // The equivalence relation grows: each earlier class sits
            // inside a later one.
            let (prev_classes, _) = prev.active_domain();
            for c in prev_classes {
                let members = prev.class_members(c);
                let covered = prefix
                    .class_of(*members.iter().next().unwrap())
                    .map(|c2| members.is_subset(prefix.class_members(c2)))
                    .unwrap_or(false);
                assert!(covered, "class lost during the chase");
            }
        }
        previous = Some(prefix);
    }
}

#[test]
fn builtin_facts_survive_every_golden_trace_untouched() {
    let (kb, _) = load_kb("running_example.kb");
    let registry = BuiltinRegistry::default();
    for script_name in ["running_example.script", "running_example_closure.script"] {
        let script = load_script(script_name);
        let seq = run_chase(&kb, &registry, &ChaseStrategy::Scripted(script), 100).unwrap();
        let base_builtins: BTreeSet<String> = seq
            .base
            .fact_keys()
            .iter()
            .filter(|k| k.pred == "jacc_sim")
            .map(|k| k.display())
            .collect();
        for keyset in seq.instance_keysets() {
            let builtins: BTreeSet<String> = keyset
                .iter()
                .filter(|k| k.pred == "jacc_sim")
                .map(|k| k.display())
                .collect();
            assert_eq!(builtins, base_builtins);
            // All built-in facts keep singleton cells.
            assert!(builtins.iter().all(|d| !d.contains(',')
                || d.split(&['{', '}'][..]).all(|part| !part.contains("\",\""))));
        }
    }
}
