//! Shared helpers for the integration tests.

// Each test target uses its own subset of these helpers.
#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::PathBuf;

use setchase::builtins::BuiltinRegistry;
use setchase::chase::{run_chase, ChaseSequence, Script, Strategy};
use setchase::model::{KnowledgeBase, Query, SymbolTable};
use setchase::Instance;

pub fn golden_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(name)
}

pub fn load_kb(name: &str) -> (KnowledgeBase, Vec<Query>) {
    let text = std::fs::read_to_string(golden_path(name)).expect("golden KB file");
    let (kb, queries) = setchase::parse::parse(&text).expect("golden KB parses");
    kb.check_database().expect("golden KB type-checks");
    (kb, queries)
}

pub fn load_script(name: &str) -> Script {
    let text = std::fs::read_to_string(golden_path(name)).expect("golden script file");
    Script::parse(&text).expect("golden script parses")
}

pub fn load_instance(table: &mut SymbolTable, name: &str) -> Instance {
    let text = std::fs::read_to_string(golden_path(name)).expect("golden instance file");
    let json: serde_json::Value = serde_json::from_str(&text).expect("valid JSON");
    Instance::from_json(table, &json).expect("golden instance loads")
}

pub fn run_scripted(kb: &KnowledgeBase, script_name: &str, max_steps: usize) -> ChaseSequence {
    let registry = BuiltinRegistry::default();
    let script = load_script(script_name);
    run_chase(kb, &registry, &Strategy::Scripted(script), max_steps).expect("chase runs")
}

/// Fact displays of one instance keyset, KB predicates only (built-in facts
/// carried by every instance are filtered out by name).
pub fn kb_fact_displays(keys: &BTreeSet<setchase::FactKey>) -> BTreeSet<String> {
    keys.iter()
        .filter(|k| k.pred != "jacc_sim" && k.pred != "eq" && k.pred != "leq")
        .map(|k| k.display())
        .collect()
}

pub fn string_set(items: &[&str]) -> BTreeSet<String> {
    items.iter().map(|s| s.to_string()).collect()
}

pub fn query_by_name<'q>(queries: &'q [Query], name: &str) -> &'q Query {
    queries
        .iter()
        .find(|q| q.name == name)
        .expect("query exists")
}
