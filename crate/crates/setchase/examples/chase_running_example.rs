//! Chase a small entity-resolution knowledge base step by step.
//!
//! Two people whose names are similar get merged into one equivalence
//! class, their conflicting names and phone numbers union into value sets,
//! and a tgd invents a company (a fresh entity-null) for the person without
//! one. Run with:
//!
//! ```bash
//! cargo run --example chase_running_example
//! ```

use setchase::builtins::BuiltinRegistry;
use setchase::chase::{run_chase, trace_pretty, Strategy};

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
"#;

fn main() -> setchase::Result<()> {
    let (kb, _) = setchase::parse::parse(KB)?;
    let registry = BuiltinRegistry::default();

    let seq = run_chase(&kb, &registry, &Strategy::Fair { seed: 0 }, 1000)?;
    print!("{}", trace_pretty(&seq));

    println!("\nfinal instance as JSON:");
    println!(
        "{}",
        serde_json::to_string_pretty(&seq.result.to_json(&seq.table)).unwrap()
    );
    Ok(())
}
