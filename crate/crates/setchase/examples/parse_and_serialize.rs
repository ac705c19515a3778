//! A tour of the rule language: declarations, the three rule kinds,
//! queries, the round-tripping serializer, and the kinds of errors the
//! type checker reports.
//!
//! ```bash
//! cargo run --example parse_and_serialize
//! ```

const KB: &str = r#"
# Predicates declare per-argument kinds: e(ntity) or v(alue).
pred CI(e, v, v).
pred Emp(e, e).
builtin jacc_sim(v, v, v).

# Entity-egds merge classes, value-egds union sets, tgds add facts.
eegd r1: CI(p1, n1, f1), CI(p2, n2, f2), jacc_sim(n1, n2, 0.6) -> p1 = p2.
vegd r2: CI(p, n1, f1), CI(p, n2, f2) -> n1 = n2.
tgd  r3: CI(p, n, f) -> exists c: Emp(p, c).

# Facts are ground; identifiers are entities, quoted strings and numbers
# are values.
fact CI(Doe1, "J. Doe", "358").
fact Emp(Doe1, Yahoo).

# Queries are built-in free conjunctions with declared free variables.
query q(x): exists n, f: CI(x, n, f).
"#;

fn main() -> setchase::Result<()> {
    let (kb, queries) = setchase::parse::parse(KB)?;
    println!(
        "parsed {} rules, {} ground atoms, {} queries",
        kb.rules.len(),
        kb.database.len(),
        queries.len()
    );

    let text = setchase::parse::serialize(&kb, &queries);
    println!("\nserialized back:\n{text}");
    let (kb2, queries2) = setchase::parse::parse(&text)?;
    assert_eq!(text, setchase::parse::serialize(&kb2, &queries2));
    println!("round-trip: serialize(parse(serialize(kb))) is a fixed point");

    println!("\nrejected inputs:");
    let bad = [
        "pred P(e, v).\ntgd t: P(x, u) -> P(x, \"oops\").",
        "pred P(e, v).\neegd t: P(x, u), P(y, u) -> x = u.",
        "pred P(e, v).\nbuiltin b(v).\neegd t: P(x, u), P(y, u), b(w) -> x = y.",
        "pred P(e, v).\nfact P(\"notanentity\", 1).",
    ];
    for text in bad {
        let err = setchase::parse::parse(text).unwrap_err();
        println!("  {err}");
    }
    Ok(())
}
