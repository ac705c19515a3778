//! Conjunctive-query evaluation over instances, the null-dropping and
//! dominance-reduction operators, and certain answers via a universal
//! solution.
//!
//! Evaluating a query yields one tuple per assignment: entity components
//! are the matched classes, value components the intersection of all sets
//! matched by the occurrences of the free variable. Certain answers are
//! obtained from a terminating chase by dropping nulls from the raw answers
//! and then discarding every tuple strictly dominated by another.

use std::collections::BTreeSet;

use serde_json::{json, Value as Json};

use crate::builtins::BuiltinRegistry;
use crate::chase::{run_chase, ChaseSequence, ChaseStatus, Strategy};
use crate::instance::{
    compare_tuples, sorted_entity_members, sorted_value_members, value_ref_json, Dominance,
    Instance, TupleCell,
};
use crate::matching::enumerate_assignments;
use crate::model::{EntityRef, KnowledgeBase, Query, SymbolTable, ValueRef, VarKind};
use crate::{Error, Result};

/// How far an answer set has been processed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AnswerStage {
    /// Tuples as produced by assignments; may contain nulls.
    Raw,
    /// Nulls removed componentwise; emptied tuples dropped.
    NullFree,
    /// Additionally, no tuple is strictly dominated by another.
    Reduced,
}

/// A set of answer tuples, one component per free variable.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AnswerSet {
    pub stage: AnswerStage,
    pub tuples: BTreeSet<Vec<TupleCell>>,
}

impl AnswerSet {
    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }
}

/// Evaluates the query over an instance, returning the raw answer set.
pub fn evaluate(q: &Query, inst: &Instance, table: &SymbolTable) -> AnswerSet {
    let t = crate::matching::tau(&q.vars, &q.body);
    let mut tuples = BTreeSet::new();
    for mu in enumerate_assignments(inst, table, &q.vars, &q.body) {
        let mut tuple = Vec::with_capacity(q.free.len());
        for v in &q.free {
            match q.vars.kind(*v) {
                VarKind::Entity => {
                    let class = mu.entity_vars[v];
                    tuple.push(TupleCell::Entities(inst.class_members(class).clone()));
                }
                VarKind::Value => {
                    // Intersection over all set-variables of this free
                    // variable; equals `mu.intersections` by construction.
                    let mut inter: Option<BTreeSet<ValueRef>> = None;
                    for occ in t.set_vars.get(v).into_iter().flatten() {
                        let set = &mu.set_vars[occ];
                        inter = Some(match inter {
                            None => set.clone(),
                            Some(acc) => acc.intersection(set).copied().collect(),
                        });
                    }
                    tuple.push(TupleCell::Values(inter.unwrap_or_default()));
                }
            }
        }
        tuples.insert(tuple);
    }
    AnswerSet {
        stage: AnswerStage::Raw,
        tuples,
    }
}

/// The `↓` operator: removes nulls componentwise and drops tuples with an
/// emptied component.
pub fn drop_nulls(answers: &AnswerSet) -> AnswerSet {
    let mut tuples = BTreeSet::new();
    'tuples: for tuple in &answers.tuples {
        let mut out = Vec::with_capacity(tuple.len());
        for cell in tuple {
            let cleaned = match cell {
                TupleCell::Entities(s) => TupleCell::Entities(
                    s.iter()
                        .copied()
                        .filter(|e| matches!(e, EntityRef::Entity(_)))
                        .collect(),
                ),
                TupleCell::Values(s) => TupleCell::Values(
                    s.iter()
                        .copied()
                        .filter(|v| matches!(v, ValueRef::Value(_)))
                        .collect(),
                ),
            };
            if cleaned.is_empty() {
                continue 'tuples;
            }
            out.push(cleaned);
        }
        tuples.insert(out);
    }
    AnswerSet {
        stage: AnswerStage::NullFree,
        tuples,
    }
}

/// The reduction step of `↓ρ`: removes every tuple strictly dominated by
/// another tuple of the set. Idempotent; the result is an antichain.
pub fn reduce(answers: &AnswerSet) -> AnswerSet {
    let tuples: BTreeSet<Vec<TupleCell>> = answers
        .tuples
        .iter()
        .filter(|t| {
            !answers
                .tuples
                .iter()
                .any(|other| matches!(compare_tuples(t, other), Ok(Dominance::StrictlyDominatedBy)))
        })
        .cloned()
        .collect();
    AnswerSet {
        stage: AnswerStage::Reduced,
        tuples,
    }
}

/// Certain answers to `q`: runs the chase and, when it terminates, applies
/// `↓` and the dominance reduction to the answers over the universal
/// solution. A chase that exhausts its budget yields no certain answers.
pub fn certain_answers(
    kb: &KnowledgeBase,
    registry: &BuiltinRegistry,
    q: &Query,
    strategy: &Strategy,
    max_steps: usize,
) -> Result<(AnswerSet, ChaseSequence)> {
    let seq = run_chase(kb, registry, strategy, max_steps)?;
    match seq.status {
        ChaseStatus::Terminated => {
            let raw = evaluate(q, &seq.result, &seq.table);
            let reduced = reduce(&drop_nulls(&raw));
            Ok((reduced, seq))
        }
        ChaseStatus::BudgetExhausted { budget } => Err(Error::BudgetExhausted { budget }),
        ChaseStatus::ScriptEnded { .. } => Err(Error::Chase(
            "script ended before the chase terminated; certain answers unavailable".into(),
        )),
    }
}

/// Canonical JSON rendering of an answer set:
/// `{ "query": name, "tuples": [[cell…]…] }` with classes as
/// `{"class":[…]}` and value sets as `{"values":[…]}`, all lists sorted.
pub fn answers_to_json(name: &str, answers: &AnswerSet, table: &SymbolTable) -> Json {
    let mut rendered: Vec<(Vec<String>, Json)> = answers
        .tuples
        .iter()
        .map(|tuple| {
            let cells: Vec<Json> = tuple
                .iter()
                .map(|cell| match cell {
                    TupleCell::Entities(s) => json!({
                        "class": sorted_entity_members(table, s)
                            .into_iter()
                            .map(|e| Json::String(table.entity_ref_text(e)))
                            .collect::<Vec<_>>()
                    }),
                    TupleCell::Values(s) => json!({
                        "values": sorted_value_members(table, s)
                            .into_iter()
                            .map(|v| value_ref_json(table, v))
                            .collect::<Vec<_>>()
                    }),
                })
                .collect();
            let sort_key: Vec<String> = cells.iter().map(|c| c.to_string()).collect();
            (sort_key, Json::Array(cells))
        })
        .collect();
    rendered.sort_by(|a, b| a.0.cmp(&b.0));
    json!({
        "query": name,
        "tuples": rendered.into_iter().map(|(_, t)| t).collect::<Vec<_>>(),
    })
}

/// Renders one tuple like `<[Doe1,Doe2], {"358"}>` for diagnostics.
pub fn tuple_text(tuple: &[TupleCell], table: &SymbolTable) -> String {
    let cells: Vec<String> = tuple
        .iter()
        .map(|cell| match cell {
            TupleCell::Entities(s) => format!(
                "[{}]",
                sorted_entity_members(table, s)
                    .into_iter()
                    .map(|e| table.entity_ref_text(e))
                    .collect::<Vec<_>>()
                    .join(",")
            ),
            TupleCell::Values(s) => format!(
                "{{{}}}",
                sorted_value_members(table, s)
                    .into_iter()
                    .map(|v| table.value_ref_text(v))
                    .collect::<Vec<_>>()
                    .join(",")
            ),
        })
        .collect();
    format!("<{}>", cells.join(","))
}
