//! The character-set Jaccard built-in and how its ground facts are
//! materialized from a knowledge base.
//!
//! ```bash
//! cargo run --example builtin_similarity
//! ```

use setchase::builtins::{jacc_ratio, jacc_sim, materialize_builtin_facts, BuiltinRegistry};

fn main() -> setchase::Result<()> {
    let pairs = [
        ("John Doe", "J. Doe"),
        ("Mary Doe", "J. Doe"),
        ("John Doe", "Mary Doe"),
        ("abc", "xyz"),
        ("abc", "abc"),
    ];
    let threshold: setchase::Decimal = "0.6".parse().unwrap();
    println!("character-set Jaccard, threshold {threshold} (strictly above):");
    for (a, b) in pairs {
        let (num, den) = jacc_ratio(a, b);
        println!(
            "  jacc({a:?}, {b:?}) = {num}/{den} -> {}",
            jacc_sim(a, b, &threshold)
        );
    }

    // Materialization enumerates database values at the string positions
    // and TBox constants at the threshold position.
    let (kb, _) = setchase::parse::parse(
        r#"
pred Name(e, v).
builtin jacc_sim(v, v, v).
eegd s1: Name(p1, n1), Name(p2, n2), jacc_sim(n1, n2, 0.6) -> p1 = p2.
fact Name(Doe1, "J. Doe").
fact Name(Doe2, "John Doe").
fact Name(Doe3, "Mary Doe").
"#,
    )?;
    let registry = BuiltinRegistry::default();
    println!("\nmaterialized built-in facts:");
    for (pred, args) in materialize_builtin_facts(&kb, &registry)? {
        let rendered: Vec<String> = args
            .iter()
            .map(|v| kb.table.value(*v).to_string())
            .collect();
        println!("  {}({})", kb.table.pred(pred).name, rendered.join(", "));
    }
    Ok(())
}
