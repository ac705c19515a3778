//! Why dropping nulls is not enough: two universal solutions of the same
//! KB can disagree on dominated tuples, and only the dominance reduction
//! makes query answers agree.
//!
//! ```bash
//! cargo run --example evaluate_instance
//! ```

use setchase::query::{drop_nulls, evaluate, reduce, tuple_text};
use setchase::Instance;

const KB: &str = r#"
pred P1(e, v).
pred P2(e, v).

tgd  t1: P1(x, y) -> P2(x, y).
vegd t2: P1(x, y), P1(x, z) -> y = z.

fact P1(E, 1).
fact P1(E, 2).

query q(x, y): P2(x, y).
"#;

// A minimal universal solution…
const I1: &str = r#"{
  "classes": [["E"]],
  "facts": [
    {"pred": "P1", "cells": [{"class": ["E"]}, {"values": [{"num": "1"}, {"num": "2"}]}]},
    {"pred": "P2", "cells": [{"class": ["E"]}, {"values": [{"num": "1"}, {"num": "2"}]}]}
  ]
}"#;

// …and one carrying an extra dominated fact.
const I2: &str = r#"{
  "classes": [["E"]],
  "facts": [
    {"pred": "P1", "cells": [{"class": ["E"]}, {"values": [{"num": "1"}, {"num": "2"}]}]},
    {"pred": "P2", "cells": [{"class": ["E"]}, {"values": [{"num": "1"}]}]},
    {"pred": "P2", "cells": [{"class": ["E"]}, {"values": [{"num": "1"}, {"num": "2"}]}]}
  ]
}"#;

fn main() -> setchase::Result<()> {
    let (mut kb, queries) = setchase::parse::parse(KB)?;
    let q = &queries[0];

    for (name, text) in [("I1", I1), ("I2", I2)] {
        let json: serde_json::Value = serde_json::from_str(text)?;
        let inst = Instance::from_json(&mut kb.table, &json)?;
        let null_free = drop_nulls(&evaluate(q, &inst, &kb.table));
        println!("answers over {name} after dropping nulls:");
        for t in &null_free.tuples {
            println!("  {}", tuple_text(t, &kb.table));
        }
        let reduced = reduce(&null_free);
        println!("after the dominance reduction:");
        for t in &reduced.tuples {
            println!("  {}", tuple_text(t, &kb.table));
        }
        println!();
    }
    Ok(())
}
