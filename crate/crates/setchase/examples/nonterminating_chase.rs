//! A KB where the order of rule application decides termination: one
//! scripted order runs forever, another finishes in two steps. The
//! finite-prefix persistence diagnostic shows that nothing survives the
//! infinite order.
//!
//! ```bash
//! cargo run --example nonterminating_chase
//! ```

use setchase::builtins::BuiltinRegistry;
use setchase::chase::{run_chase, ChaseStatus, Script, Strategy};

const KB: &str = r#"
pred P(v, v).

tgd  r1: P(x, y) -> exists z: P(y, z).
vegd r2: P(x, y), P(y, z) -> y = z.

fact P(1, 2).
"#;

// r1, r1, r2, then (r1, r2) forever: every fact keeps being rewritten.
const INFINITE: &str = r#"
step r1 image P({1},{2})
step r1 image P({2},{v⊥1})
step r2 image P({1},{2}), P({2},{v⊥1})
repeat
step r1
step r2
"#;

// r1 then r2: the chase closes immediately.
const FINITE: &str = r#"
step r1 image P({1},{2})
step r2 image P({1},{2}), P({2},{v⊥1})
"#;

fn main() -> setchase::Result<()> {
    let (kb, _) = setchase::parse::parse(KB)?;
    let registry = BuiltinRegistry::default();

    let script = Script::parse(INFINITE)?;
    for budget in [10usize, 25, 50] {
        let seq = run_chase(&kb, &registry, &Strategy::Scripted(script.clone()), budget)?;
        println!(
            "infinite order, budget {budget:>2}: {} after {} steps, {} facts",
            seq.status.as_str(),
            seq.steps(),
            seq.result.len()
        );
        assert_eq!(seq.status, ChaseStatus::BudgetExhausted { budget });
    }

    let seq = run_chase(&kb, &registry, &Strategy::Scripted(script), 12)?;
    println!(
        "\npersistent facts of the 12-step prefix: {:?}",
        seq.persistent_facts(0)?
            .iter()
            .map(|k| k.display())
            .collect::<Vec<_>>()
    );

    let finite = Script::parse(FINITE)?;
    let seq = run_chase(&kb, &registry, &Strategy::Scripted(finite), 10)?;
    println!(
        "\nalternative order: {} after {} steps; final instance:",
        seq.status.as_str(),
        seq.steps()
    );
    for key in seq.result.fact_keys() {
        println!("  {}", key.display());
    }
    Ok(())
}
