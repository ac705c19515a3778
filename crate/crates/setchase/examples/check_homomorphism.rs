//! Homomorphisms between instances: the chase result of two different fair
//! orders maps into each other, and into a hand-written solution with the
//! redundant entity-null eliminated.
//!
//! ```bash
//! cargo run --example check_homomorphism
//! ```

use setchase::builtins::BuiltinRegistry;
use setchase::chase::{run_chase, Strategy};
use setchase::matching::{find_homomorphism, verify_homomorphism};

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

    // Two fair orders produce different instances (different nulls,
    // possibly different dominated facts) that map into each other.
    let a = run_chase(&kb, &registry, &Strategy::Fair { seed: 0 }, 1000)?;
    let b = run_chase(&kb, &registry, &Strategy::Fair { seed: 3 }, 1000)?;
    println!(
        "order 0: {} facts; order 3: {} facts",
        a.result.len(),
        b.result.len()
    );

    for (name, from, to, table) in [
        ("order 0 -> order 3", &a, &b, &a.table),
        ("order 3 -> order 0", &b, &a, &b.table),
    ] {
        match find_homomorphism(&from.result, &to.result, table) {
            Some(hom) => {
                assert!(verify_homomorphism(&from.result, &to.result, &hom));
                println!("{name}: homomorphism found");
                for (k, e) in &hom.entity_nulls {
                    println!("   e⊥{k} -> {}", table.entity_ref_text(*e));
                }
                for (k, v) in &hom.value_nulls {
                    println!("   v⊥{k} -> {}", table.value_ref_text(*v));
                }
            }
            None => println!("{name}: none (unexpected for universal solutions)"),
        }
    }
    Ok(())
}
