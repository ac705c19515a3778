//! Acceptance suite: one test per criterion, each printing a single
//! `ACCEPTANCE <n>: PASS|FAIL` line (run with `--nocapture` to see the
//! lines for passing criteria; failing ones surface in the panic message).
//!
//! Criterion 1 asserts the bundled seven-step reference trace exactly as
//! stated, including that the chase has terminated at its end. Under the
//! assignment semantics, two reflexive matches of r6 are still applicable
//! there, so that clause fails; see `golden_chase.rs` for the verified
//! behavior and the closure script that does terminate.

mod common;

use std::collections::BTreeSet;
use std::time::Instant;

use common::*;
use setchase::builtins::{jacc_ratio, jacc_sim, BuiltinRegistry};
use setchase::chase::{run_chase, ChaseStatus, Strategy};
use setchase::instance::TupleCell;
use setchase::matching::{find_homomorphism, verify_homomorphism};
use setchase::model::{KnowledgeBase, Query};
use setchase::oracle::{
    differential_matching, generate_kb, never_failing_check, KbGeneratorConfig,
};
use setchase::query::{certain_answers, drop_nulls, evaluate, reduce, tuple_text};

fn pass(n: usize, what: &str) {
    println!("ACCEPTANCE {n}: PASS -- {what}");
}

fn fail(n: usize, what: &str, why: &str) -> ! {
    println!("ACCEPTANCE {n}: FAIL -- {what}: {why}");
    panic!("ACCEPTANCE {n}: FAIL -- {what}: {why}");
}

#[test]
fn criterion_1_golden_chase_trace() {
    let what = "scripted chase reproduces reference steps 1-7 and terminates at I7";
    let started = Instant::now();
    let (kb, _) = load_kb("running_example.kb");
    let seq = run_scripted(&kb, "running_example.script", 100);
    if seq.steps() != 7 {
        fail(1, what, &format!("expected 7 steps, ran {}", seq.steps()));
    }
    // Every intermediate instance must match the listed d-facts.
    let expected_final: BTreeSet<String> = [
        "CI([Doe3],{\"Mary Doe\"},{\"358\"})",
        "Emp([Doe3],[IBM,e⊥1])",
        "CEO([IBM,e⊥1],[e⊥2])",
        "CI([Doe1,Doe2],{\"J. Doe\",\"John Doe\"},{\"358\",\"635\"})",
        "Emp([Doe1,Doe2],[Yahoo])",
        "CEO([Yahoo],[Doe1,Doe2])",
        "SameHouse([Doe1,Doe2],[Doe3],{\"358\"})",
        "SameHouse([Doe3],[Doe1,Doe2],{\"358\"})",
    ]
    .into_iter()
    .map(String::from)
    .collect();
    let final_facts = kb_fact_displays(&seq.result.fact_keys());
    if final_facts != expected_final {
        fail(1, what, &format!("final instance differs: {final_facts:?}"));
    }
    if started.elapsed().as_secs_f64() >= 1.0 {
        fail(1, what, "run took one second or longer");
    }
    // "Terminating at I7": no rule of the TBox may be applicable.
    if seq.status != ChaseStatus::Terminated {
        fail(
            1,
            what,
            &format!(
                "chase has not terminated at I7 (status: {:?}); the reflexive matches of r6 \
                 (both body atoms on the merged CI fact, and both on Doe3's) still lack \
                 SameHouse witnesses, as rule satisfaction quantifies over all assignments \
                 including those mapping both body atoms to one fact",
                seq.status
            ),
        );
    }
    pass(1, what);
}

#[test]
fn criterion_2_certain_answers() {
    let what = "cert(q1) = {<{Doe1,Doe2}>} and eval of the common-phone query on I' = {<{358}>}";
    let (mut kb, queries) = load_kb("running_example.kb");
    let registry = BuiltinRegistry::default();
    let q1 = query_by_name(&queries, "q1");
    let (answers, seq) =
        certain_answers(&kb, &registry, q1, &Strategy::Fair { seed: 0 }, 1000).unwrap();
    let rendered: BTreeSet<String> = answers
        .tuples
        .iter()
        .map(|t| tuple_text(t, &seq.table))
        .collect();
    if rendered != string_set(&["<[Doe1,Doe2]>"]) {
        fail(2, what, &format!("cert(q1) = {rendered:?}"));
    }
    let iprime = load_instance(&mut kb.table, "instance_iprime.json");
    let q_phone = query_by_name(&queries, "q_phone");
    let evaluated = evaluate(q_phone, &iprime, &kb.table);
    let rendered: BTreeSet<String> = evaluated
        .tuples
        .iter()
        .map(|t| tuple_text(t, &kb.table))
        .collect();
    if rendered != string_set(&["<{\"358\"}>"]) {
        fail(2, what, &format!("eval(q_phone, I') = {rendered:?}"));
    }
    pass(2, what);
}

#[test]
fn criterion_3_reduction_reconciles_universal_solutions() {
    let what = "evaluate+drop-nulls differ on I1/I2 of the copy KB, and the reduction equalizes";
    let (mut kb, queries) = load_kb("kbprime.kb");
    let q = query_by_name(&queries, "q");
    let i1 = load_instance(&mut kb.table, "kbprime_i1.json");
    let i2 = load_instance(&mut kb.table, "kbprime_i2.json");
    let a1 = drop_nulls(&evaluate(q, &i1, &kb.table));
    let a2 = drop_nulls(&evaluate(q, &i2, &kb.table));
    let t1: BTreeSet<String> = a1.tuples.iter().map(|t| tuple_text(t, &kb.table)).collect();
    let t2: BTreeSet<String> = a2.tuples.iter().map(|t| tuple_text(t, &kb.table)).collect();
    if t1 != string_set(&["<[E],{1,2}>"]) {
        fail(3, what, &format!("I1 answers = {t1:?}"));
    }
    if t2 != string_set(&["<[E],{1,2}>", "<[E],{1}>"]) {
        fail(3, what, &format!("I2 answers = {t2:?}"));
    }
    let r1 = reduce(&a1);
    let r2 = reduce(&a2);
    if r1.tuples != r2.tuples {
        fail(3, what, "reduced answer sets differ");
    }
    let reduced: BTreeSet<String> = r1.tuples.iter().map(|t| tuple_text(t, &kb.table)).collect();
    if reduced != string_set(&["<[E],{1,2}>"]) {
        fail(3, what, &format!("reduced = {reduced:?}"));
    }
    pass(3, what);
}

#[test]
fn criterion_4_non_termination_demo() {
    let what = "chain KB: scripted trace matches I0-I3 and I7 verbatim, exhausts budgets, \
                terminates in 2 steps under r1-then-r2, and has no persistent facts";
    let (kb, _) = load_kb("chain.kb");
    let registry = BuiltinRegistry::default();
    let script = load_script("chain_infinite.script");
    for budget in [1usize, 7, 30, 50] {
        let seq = run_chase(&kb, &registry, &Strategy::Scripted(script.clone()), budget).unwrap();
        if seq.status != (ChaseStatus::BudgetExhausted { budget }) {
            fail(
                4,
                what,
                &format!("budget {budget} not exhausted: {:?}", seq.status),
            );
        }
    }
    let seq = run_chase(&kb, &registry, &Strategy::Scripted(script), 7).unwrap();
    let displays: Vec<BTreeSet<String>> = seq
        .instance_keysets()
        .iter()
        .map(|ks| ks.iter().map(|k| k.display()).collect())
        .collect();
    let expect: Vec<BTreeSet<String>> = vec![
        string_set(&["P({1},{2})"]),
        string_set(&["P({1},{2})", "P({2},{v⊥1})"]),
        string_set(&["P({1},{2})", "P({2},{v⊥1})", "P({v⊥1},{v⊥2})"]),
        string_set(&["P({1},{2,v⊥1})", "P({2,v⊥1},{2,v⊥1})", "P({v⊥1},{v⊥2})"]),
    ];
    for (k, want) in expect.iter().enumerate() {
        if &displays[k] != want {
            fail(4, what, &format!("I{k} is {:?}", displays[k]));
        }
    }
    let i7 = string_set(&[
        "P({1},{2,v⊥1,v⊥2})",
        "P({2,v⊥1},{2,v⊥1,v⊥2})",
        "P({2,v⊥1,v⊥2},{2,v⊥1,v⊥2})",
        "P({v⊥2},{v⊥3})",
        "P({v⊥3},{v⊥4})",
    ]);
    if displays[7] != i7 {
        fail(4, what, &format!("I7 is {:?}", displays[7]));
    }
    if !seq.persistent_facts(0).unwrap().is_empty() {
        fail(4, what, "prefix has persistent facts");
    }
    let term = run_scripted(&kb, "chain_terminating.script", 10);
    if term.status != ChaseStatus::Terminated || term.steps() != 2 {
        fail(
            4,
            what,
            &format!("r1-then-r2: {:?} after {} steps", term.status, term.steps()),
        );
    }
    let final_facts: BTreeSet<String> = term
        .result
        .fact_keys()
        .iter()
        .map(|k| k.display())
        .collect();
    if final_facts != string_set(&["P({1},{2,v⊥1})", "P({2,v⊥1},{2,v⊥1})"]) {
        fail(4, what, &format!("I'2 is {final_facts:?}"));
    }
    pass(4, what);
}

#[test]
fn criterion_5_builtin_fidelity() {
    let what = "jacc_sim(John Doe, J. Doe, t): true at 0.6, false at 0.625, similarity 5/8 exact";
    let six: setchase::Decimal = "0.6".parse().unwrap();
    let t625: setchase::Decimal = "0.625".parse().unwrap();
    if !jacc_sim("John Doe", "J. Doe", &six) {
        fail(5, what, "not above 0.6");
    }
    if jacc_sim("John Doe", "J. Doe", &t625) {
        fail(5, what, "strictly-above comparison admitted 0.625");
    }
    if jacc_ratio("John Doe", "J. Doe") != (5, 8) {
        fail(
            5,
            what,
            &format!("similarity = {:?}", jacc_ratio("John Doe", "J. Doe")),
        );
    }
    pass(5, what);
}

#[test]
fn criterion_6_never_failing_chase_over_1000_kbs() {
    let what = "1000 seeded KBs: no chase step aborts, terminated results pass the naive check";
    let started = Instant::now();
    let cfg = KbGeneratorConfig::default();
    let mut terminated = 0usize;
    for seed in 0..1000u64 {
        match never_failing_check(seed, &cfg, 60) {
            Ok(Some(_)) => terminated += 1,
            Ok(None) => {}
            Err(e) => fail(6, what, &format!("seed {seed}: {e}")),
        }
    }
    let elapsed = started.elapsed();
    if elapsed.as_secs() >= 120 {
        fail(
            6,
            what,
            &format!("took {elapsed:?}, expected under two minutes"),
        );
    }
    if terminated < 200 {
        fail(
            6,
            what,
            &format!("only {terminated}/1000 chases terminated within the budget"),
        );
    }
    pass(
        6,
        &format!("{what} ({terminated}/1000 terminated, {elapsed:?})"),
    );
}

/// Terminating seeds with their 5 fair-order chase results; shared by
/// criteria 7 and 8. Order 0 serves as a cheap triage before the other
/// four orders run.
type TerminatingRun = (KnowledgeBase, Vec<Query>, Vec<setchase::chase::ChaseSequence>);

fn terminating_runs(count: usize) -> &'static Vec<TerminatingRun> {
    use std::sync::OnceLock;
    static RUNS: OnceLock<Vec<TerminatingRun>> = OnceLock::new();
    let runs = RUNS.get_or_init(|| {
        let registry = BuiltinRegistry::default();
        let mut out = Vec::new();
        let mut seed = 0u64;
        while out.len() < 50 && seed < 5000 {
            let cfg = KbGeneratorConfig::with_seed(seed);
            let (kb, queries) = generate_kb(&cfg);
            seed += 1;
            if kb.rules.is_empty() {
                continue;
            }
            let mut runs = Vec::new();
            let mut all_terminated = true;
            for order in 0..5u64 {
                match run_chase(&kb, &registry, &Strategy::Fair { seed: order }, 80) {
                    Ok(seq) if seq.status == ChaseStatus::Terminated => runs.push(seq),
                    _ => {
                        all_terminated = false;
                        break;
                    }
                }
            }
            if all_terminated {
                out.push((kb, queries, runs));
            }
        }
        out
    });
    assert!(
        runs.len() >= count,
        "only {} terminating KBs found",
        runs.len()
    );
    runs
}

#[test]
fn criterion_7_universality_across_fair_orders() {
    let what = "50 terminating KBs x 5 fair orders: pairwise homomorphic equivalence and \
                identical certain answers";
    let runs = terminating_runs(50);
    if runs.len() < 50 {
        fail(
            7,
            what,
            &format!("only {} terminating KBs found", runs.len()),
        );
    }
    for (ki, (kb, queries, seqs)) in runs.iter().enumerate() {
        for i in 0..seqs.len() {
            for j in 0..seqs.len() {
                if i == j {
                    continue;
                }
                let hom = find_homomorphism(&seqs[i].result, &seqs[j].result, &seqs[i].table);
                match hom {
                    Some(h) => {
                        if !verify_homomorphism(&seqs[i].result, &seqs[j].result, &h) {
                            fail(7, what, &format!("KB {ki}: found map fails verification"));
                        }
                    }
                    None => fail(
                        7,
                        what,
                        &format!("KB {ki}: no homomorphism from order {i} to order {j}"),
                    ),
                }
            }
        }
        for q in queries {
            let mut per_order: Vec<BTreeSet<Vec<TupleCell>>> = Vec::new();
            for seq in seqs {
                let reduced = reduce(&drop_nulls(&evaluate(q, &seq.result, &seq.table)));
                per_order.push(reduced.tuples);
            }
            if per_order.windows(2).any(|w| w[0] != w[1]) {
                fail(
                    7,
                    what,
                    &format!("KB {ki}: certain answers to {} differ", q.name),
                );
            }
        }
        let _ = kb;
    }
    pass(7, what);
}

#[test]
fn criterion_8_partition_invariant() {
    let what = "entity components of each KB's certain answers are equal or disjoint";
    // The components collected per knowledge base: the certain-answer sets
    // of one KB partition its entities; classes of unrelated KBs may of
    // course overlap.
    fn check_components(
        n: usize,
        what: &str,
        kb_label: &str,
        components: &[BTreeSet<setchase::model::EntityRef>],
    ) {
        for (i, a) in components.iter().enumerate() {
            for b in &components[i + 1..] {
                if a != b && a.intersection(b).next().is_some() {
                    fail(
                        n,
                        what,
                        &format!("{kb_label}: components {a:?} and {b:?} overlap without being                                   equal"),
                    );
                }
            }
        }
    }
    // The running example's answers (criterion 2)...
    let (kb, queries) = load_kb("running_example.kb");
    let registry = BuiltinRegistry::default();
    let mut components: Vec<BTreeSet<setchase::model::EntityRef>> = Vec::new();
    for q in &queries {
        if let Ok((answers, _)) =
            certain_answers(&kb, &registry, q, &Strategy::Fair { seed: 0 }, 1000)
        {
            for tuple in &answers.tuples {
                for cell in tuple {
                    if let TupleCell::Entities(s) = cell {
                        components.push(s.clone());
                    }
                }
            }
        }
    }
    check_components(8, what, "running example", &components);
    let mut total = components.len();
    // ...plus the answers of every criterion-7 KB, per KB.
    for (ki, (_, queries, seqs)) in terminating_runs(50).iter().enumerate() {
        let mut components: Vec<BTreeSet<setchase::model::EntityRef>> = Vec::new();
        for q in queries {
            for seq in seqs {
                let reduced = reduce(&drop_nulls(&evaluate(q, &seq.result, &seq.table)));
                for tuple in &reduced.tuples {
                    for cell in tuple {
                        if let TupleCell::Entities(s) = cell {
                            components.push(s.clone());
                        }
                    }
                }
            }
        }
        check_components(8, what, &format!("generated KB {ki}"), &components);
        total += components.len();
    }
    pass(8, &format!("{what} ({total} components)"));
}

#[test]
fn criterion_9_matching_oracle_equivalence() {
    let what = "200 seeded instances: engine assignment enumeration equals naive enumeration";
    let cfg = KbGeneratorConfig::default();
    for seed in 0..200u64 {
        if let Err(e) = differential_matching(seed, &cfg) {
            fail(9, what, &format!("seed {seed}: {e}"));
        }
    }
    pass(9, what);
}
