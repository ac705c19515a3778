//! Certain answers end to end: chase to a universal solution, evaluate the
//! query there, drop nulls, and discard dominated tuples.
//!
//! ```bash
//! cargo run --example certain_answers
//! ```

use setchase::builtins::BuiltinRegistry;
use setchase::chase::Strategy;
use setchase::query::{answers_to_json, certain_answers, drop_nulls, evaluate, tuple_text};

const KB: &str = r#"
pred CI(e, v, v).
pred Emp(e, e).
pred CEO(e, e).
pred SameHouse(e, e, v).
builtin jacc_sim(v, v, v).

eegd r1: CI(p1, n1, f1), CI(p2, n2, f2), jacc_sim(n1, n2, 0.6) -> p1 = p2.
vegd r2: CI(p, n1, f1), CI(p, n2, f2) -> n1 = n2.
vegd r3: CI(p, n1, f1), CI(p, n2, f2) -> f1 = f2.
tgd  r4: CI(p, n, f) -> exists c, d: Emp(p, c), CEO(c, d).
eegd r5: Emp(p, c1), Emp(p, c2) -> c1 = c2.
tgd  r6: CI(p1, n1, f), CI(p2, n2, f) -> SameHouse(p1, p2, f).

fact CI(Doe1, "J. Doe", "358").
fact CI(Doe2, "John Doe", "635").
fact CI(Doe3, "Mary Doe", "358").
fact Emp(Doe2, Yahoo).
fact Emp(Doe3, IBM).
fact CEO(Yahoo, Doe1).

query q1(x): exists z: CEO(z, x).
"#;

fn main() -> setchase::Result<()> {
    let (kb, queries) = setchase::parse::parse(KB)?;
    let registry = BuiltinRegistry::default();
    let q1 = &queries[0];

    // The raw answers over the universal solution still mention nulls: the
    // invented company's CEO is an entity-null class.
    let (reduced, seq) = certain_answers(&kb, &registry, q1, &Strategy::Fair { seed: 0 }, 1000)?;
    let raw = evaluate(q1, &seq.result, &seq.table);
    println!("raw answers over the universal solution:");
    for t in &raw.tuples {
        println!("  {}", tuple_text(t, &seq.table));
    }
    println!("after dropping nulls:");
    for t in drop_nulls(&raw).tuples.iter() {
        println!("  {}", tuple_text(t, &seq.table));
    }
    println!("certain answers (dominated tuples removed):");
    for t in &reduced.tuples {
        println!("  {}", tuple_text(t, &seq.table));
    }

    println!(
        "\nas JSON: {}",
        serde_json::to_string(&answers_to_json(&q1.name, &reduced, &seq.table)).unwrap()
    );
    Ok(())
}
