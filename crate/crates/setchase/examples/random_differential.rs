//! The oracle at work: generate random knowledge bases, chase them, check
//! terminated results with the definition-level naive checker, and compare
//! the engine's assignment enumeration against exhaustive search.
//!
//! ```bash
//! cargo run --example random_differential
//! ```

use setchase::builtins::BuiltinRegistry;
use setchase::chase::{run_chase, ChaseStatus, Strategy};
use setchase::oracle::{differential_matching, generate_kb, naive_is_solution, KbGeneratorConfig};

fn main() -> setchase::Result<()> {
    let cfg = KbGeneratorConfig::default();
    let registry = BuiltinRegistry::default();

    let mut terminated = 0;
    let mut exhausted = 0;
    for seed in 0..100u64 {
        let (kb, _) = generate_kb(&KbGeneratorConfig {
            seed,
            ..cfg.clone()
        });
        let seq = run_chase(&kb, &registry, &Strategy::Fair { seed: 0 }, 80)?;
        match seq.status {
            ChaseStatus::Terminated => {
                let kb_view = setchase::model::KnowledgeBase {
                    table: seq.table.clone(),
                    rules: kb.rules.clone(),
                    database: kb.database.clone(),
                };
                assert!(
                    naive_is_solution(&kb_view, &registry, &seq.result, 256)?,
                    "seed {seed}: terminated result must be a solution"
                );
                terminated += 1;
            }
            _ => exhausted += 1,
        }
    }
    println!(
        "chased 100 random KBs: {terminated} terminated (all verified as solutions), \
         {exhausted} ran out of budget"
    );

    for seed in 0..100u64 {
        differential_matching(seed, &cfg)?;
    }
    println!("assignment enumeration matches exhaustive search on 100 random instances");

    let sample = generate_kb(&KbGeneratorConfig::with_seed(7));
    println!(
        "\na generated KB (seed 7):\n{}",
        setchase::parse::serialize(&sample.0, &sample.1)
    );
    Ok(())
}
