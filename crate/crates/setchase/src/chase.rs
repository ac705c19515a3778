//! Chase steps, scheduling (fair and scripted), termination detection,
//! tracing, and finite-prefix persistence diagnostics.
//!
//! A trigger is a body assignment that makes its rule applicable: a tgd
//! assignment with no head-compatible extension, an entity-egd assignment
//! binding two distinct classes, or a value-egd assignment whose occurrence
//! images are not all equal. Applying a trigger adds the head facts with
//! fresh nulls for the existentials (tgd), merges two classes globally
//! (entity-egd), or unions value sets locally inside the image (value-egd).
//! Egd triggers that would perform the same action (e.g. the two
//! orientations of a symmetric body) are deduplicated; tgd triggers are not,
//! since swapped roles produce different head facts.
//!
//! The fair strategy runs in rounds: it snapshots every rule's triggers in
//! declaration order, then applies each after re-validating it against the
//! evolving instance; triggers whose image facts were rewritten or that
//! became satisfied are silently skipped. A run with no applicable trigger
//! left has terminated, and its result satisfies every rule.

use std::collections::{BTreeMap, BTreeSet};

use serde_json::{json, Value as Json};

use crate::builtins::{materialize_builtin_facts, BuiltinRegistry};
use crate::instance::{CellSpec, ClassId, FactKey, Instance};
use crate::matching::{self, check_tgd_extension, Assignment};
use crate::model::{
    EntityRef, KnowledgeBase, Rule, RuleForm, SymbolTable, Term, ValueRef, VarId, VarKind,
};
use crate::{Error, Result};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Default step budget used by the command-line driver.
pub const DEFAULT_MAX_STEPS: usize = 10_000;

/// The base instance of a KB: the database facts with singleton cells plus
/// the materialized built-in facts.
pub fn base_instance(kb: &KnowledgeBase, registry: &BuiltinRegistry) -> Result<Instance> {
    let builtin_facts = materialize_builtin_facts(kb, registry)?;
    Instance::base_instance(kb, builtin_facts)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepKind {
    Tgd,
    EntityEgd,
    ValueEgd,
}

impl StepKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            StepKind::Tgd => "tgd",
            StepKind::EntityEgd => "entity-egd",
            StepKind::ValueEgd => "value-egd",
        }
    }
}

/// What applying a trigger will do to the instance.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum TriggerAction {
    /// Fire the tgd head for the assignment.
    FireTgd,
    /// Merge two distinct entity classes (global replacement).
    MergeClasses(ClassId, ClassId),
    /// Union the value sets at the given image positions (local
    /// replacement).
    UnionValues {
        rewrites: Vec<(FactKey, BTreeSet<usize>)>,
        union: BTreeSet<ValueRef>,
    },
}

/// An applicable (rule, assignment) pair.
#[derive(Clone, Debug)]
pub struct Trigger {
    pub rule_idx: usize,
    pub assignment: Assignment,
    pub action: TriggerAction,
}

/// All triggers of one rule on an instance, in deterministic order. Egd
/// triggers are deduplicated by action, keeping the first witnessing
/// assignment.
pub fn applicable_triggers(
    inst: &Instance,
    table: &SymbolTable,
    rule: &Rule,
    rule_idx: usize,
) -> Vec<Trigger> {
    triggers_limited(inst, table, rule, rule_idx, usize::MAX)
}

/// Like [`applicable_triggers`] but stops after collecting `limit` triggers;
/// matches the prefix of the full list.
pub fn triggers_limited(
    inst: &Instance,
    table: &SymbolTable,
    rule: &Rule,
    rule_idx: usize,
    limit: usize,
) -> Vec<Trigger> {
    let mut out: Vec<Trigger> = Vec::new();
    if limit == 0 {
        return out;
    }
    let mut seen_actions: BTreeSet<TriggerAction> = BTreeSet::new();
    let body = rule.body();
    let t = matching::tau(&rule.vars, body);
    matching::visit_assignments(
        inst,
        table,
        &rule.vars,
        body,
        &matching::MatchConstraints::default(),
        |view| {
            match &rule.form {
                RuleForm::Tgd { .. } => {
                    if !matching::has_head_extension(
                        inst,
                        table,
                        rule,
                        view.entity_vars,
                        view.intersections,
                    ) {
                        out.push(Trigger {
                            rule_idx,
                            assignment: view.materialize(),
                            action: TriggerAction::FireTgd,
                        });
                    }
                }
                RuleForm::EntityEgd { y, z, .. } => {
                    let cy = view.entity_vars[y];
                    let cz = view.entity_vars[z];
                    if cy != cz {
                        let action = TriggerAction::MergeClasses(cy.min(cz), cy.max(cz));
                        if seen_actions.insert(action.clone()) {
                            out.push(Trigger {
                                rule_idx,
                                assignment: view.materialize(),
                                action,
                            });
                        }
                    }
                }
                RuleForm::ValueEgd { y, z, .. } => {
                    let mut sets: Vec<&BTreeSet<ValueRef>> = Vec::new();
                    for v in [y, z] {
                        for occ in t.set_vars.get(v).into_iter().flatten() {
                            sets.push(&view.set_vars[occ]);
                        }
                    }
                    if !sets.windows(2).all(|w| w[0] == w[1]) {
                        let mu = view.materialize();
                        let rewrites =
                            matching::occurrence_rewrites(&rule.vars, body, &mu, &[*y, *z]);
                        let union = matching::occurrence_union(&rule.vars, body, &mu, &[*y, *z]);
                        let action = TriggerAction::UnionValues { rewrites, union };
                        if seen_actions.insert(action.clone()) {
                            out.push(Trigger {
                                rule_idx,
                                assignment: mu,
                                action,
                            });
                        }
                    }
                }
            }
            if out.len() >= limit {
                matching::VisitOutcome::Stop
            } else {
                matching::VisitOutcome::Continue
            }
        },
    );
    out
}

/// Whether any rule of the KB has an applicable trigger.
pub fn any_trigger(inst: &Instance, table: &SymbolTable, kb: &KnowledgeBase) -> bool {
    kb.rules
        .iter()
        .enumerate()
        .any(|(ri, rule)| !triggers_limited(inst, table, rule, ri, 1).is_empty())
}

/// One chase step: rule, the assignment's image, and the delta it caused.
/// Replaying the deltas from the base instance reproduces every instance of
/// the sequence.
#[derive(Clone, Debug)]
pub struct ChaseStepRecord {
    pub index: usize,
    pub rule_id: String,
    pub kind: StepKind,
    /// Canonical forms of the per-atom image facts.
    pub image: Vec<FactKey>,
    pub added: Vec<FactKey>,
    pub removed: Vec<FactKey>,
    pub fresh_entity_nulls: Vec<u32>,
    pub fresh_value_nulls: Vec<u32>,
}

/// Applies a trigger to the instance after re-validating it. A stale
/// trigger (image facts rewritten, or a tgd whose head became satisfied) is
/// rejected and the caller must recompute.
pub fn apply_step(
    inst: &mut Instance,
    table: &mut SymbolTable,
    kb: &KnowledgeBase,
    trigger: &Trigger,
) -> Result<ChaseStepRecord> {
    let rule = &kb.rules[trigger.rule_idx];
    // Image facts must still be present; their canonical forms encode their
    // cells, so presence means the assignment's bindings are still real.
    for key in &trigger.assignment.image {
        if !inst.contains(key) {
            return Err(Error::Chase(format!(
                "stale trigger for rule `{}`: image fact {} is gone",
                rule.id,
                key.display()
            )));
        }
    }
    let kind;
    let mut added;
    let removed;
    let mut fresh_entity_nulls = Vec::new();
    let mut fresh_value_nulls = Vec::new();
    match (&rule.form, &trigger.action) {
        (
            RuleForm::Tgd {
                head, existentials, ..
            },
            TriggerAction::FireTgd,
        ) => {
            // A prior step may have satisfied this assignment.
            if check_tgd_extension(inst, table, rule, &trigger.assignment).is_some() {
                return Err(Error::Chase(format!(
                    "stale trigger for rule `{}`: a head-compatible extension now exists",
                    rule.id
                )));
            }
            kind = StepKind::Tgd;
            // One fresh null per existential variable, in first-occurrence
            // order over the head.
            let mut nulls: BTreeMap<VarId, NullBinding> = BTreeMap::new();
            for v in crate::model::vars_of(head) {
                if existentials.contains(&v) && !nulls.contains_key(&v) {
                    match rule.vars.kind(v) {
                        VarKind::Entity => {
                            let n = table.mint_entity_null();
                            if let EntityRef::Null(k) = n {
                                fresh_entity_nulls.push(k);
                            }
                            nulls.insert(v, NullBinding::Entity(n));
                        }
                        VarKind::Value => {
                            let n = table.mint_value_null();
                            if let ValueRef::Null(k) = n {
                                fresh_value_nulls.push(k);
                            }
                            nulls.insert(v, NullBinding::Value(n));
                        }
                    }
                }
            }
            added = Vec::new();
            for atom in head {
                let mut cells = Vec::new();
                for term in &atom.terms {
                    let Term::Var(v) = term else {
                        return Err(Error::Chase("constant in tgd head".into()));
                    };
                    match nulls.get(v) {
                        Some(NullBinding::Entity(n)) => {
                            cells.push(CellSpec::Entities([*n].into_iter().collect()));
                        }
                        Some(NullBinding::Value(n)) => {
                            cells.push(CellSpec::Values([*n].into_iter().collect()));
                        }
                        None => match rule.vars.kind(*v) {
                            VarKind::Entity => {
                                let class = trigger.assignment.entity_vars[v];
                                cells.push(CellSpec::Entities(inst.class_members(class).clone()));
                            }
                            VarKind::Value => {
                                cells.push(CellSpec::Values(
                                    trigger.assignment.intersections[v].clone(),
                                ));
                            }
                        },
                    }
                }
                let before = inst.contains_cells(table, atom.pred, &cells);
                let key = inst.insert_fact(table, atom.pred, cells)?;
                if !before && !added.contains(&key) {
                    added.push(key);
                }
            }
            removed = Vec::new();
        }
        (RuleForm::EntityEgd { .. }, TriggerAction::MergeClasses(c1, c2)) => {
            kind = StepKind::EntityEgd;
            let outcome = inst.merge_entity_classes(table, *c1, *c2)?;
            added = outcome.added;
            removed = outcome.removed;
        }
        (RuleForm::ValueEgd { .. }, TriggerAction::UnionValues { rewrites, union }) => {
            kind = StepKind::ValueEgd;
            let outcome = inst.replace_value_cells(table, rewrites, union)?;
            added = outcome.added;
            removed = outcome.removed;
        }
        _ => {
            return Err(Error::Chase(
                "trigger action does not match rule form".into(),
            ))
        }
    }
    Ok(ChaseStepRecord {
        index: 0,
        rule_id: rule.id.clone(),
        kind,
        image: trigger.assignment.image.clone(),
        added,
        removed,
        fresh_entity_nulls,
        fresh_value_nulls,
    })
}

enum NullBinding {
    Entity(EntityRef),
    Value(ValueRef),
}

/// How the chase picks its next trigger.
#[derive(Clone, Debug)]
pub enum Strategy {
    /// Round-based fair scheduling: each round snapshots all triggers (rules
    /// in declaration order permuted by `seed`, triggers in canonical order,
    /// tie-break shuffled by `seed`) and applies them after re-validation.
    /// Seed 0 keeps declaration and canonical order.
    Fair { seed: u64 },
    /// Follow an explicit script of steps.
    Scripted(Script),
}

impl Default for Strategy {
    fn default() -> Self {
        Strategy::Fair { seed: 0 }
    }
}

/// A chase script: a list of steps, optionally with a trailing cyclic part
/// (after `repeat`) that is followed forever.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Script {
    pub steps: Vec<ScriptStep>,
    /// Index into `steps` where the cyclic part begins.
    pub repeat_from: Option<usize>,
}

/// One scripted step: the rule to apply and, optionally, the ordered
/// canonical forms of the per-atom image facts selecting the trigger. A
/// step without a selector takes the rule's first trigger in canonical
/// order.
#[derive(Clone, Debug, PartialEq)]
pub struct ScriptStep {
    pub rule_id: String,
    pub image: Option<Vec<String>>,
}

impl Script {
    /// Parses the script format: one `step <rule-id> [image <fact>, …]` per
    /// line, `#` comments, and an optional `repeat` line after which the
    /// remaining steps loop forever.
    pub fn parse(text: &str) -> Result<Script> {
        let mut script = Script::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if line == "repeat" {
                if script.repeat_from.is_some() {
                    return Err(Error::Script {
                        step: lineno + 1,
                        msg: "second `repeat` directive".into(),
                    });
                }
                script.repeat_from = Some(script.steps.len());
                continue;
            }
            let rest = line.strip_prefix("step").ok_or_else(|| Error::Script {
                step: lineno + 1,
                msg: format!("expected `step` or `repeat`, found `{line}`"),
            })?;
            let rest = rest.trim_start();
            let (rule_id, rest) = match rest.find(char::is_whitespace) {
                Some(i) => (&rest[..i], rest[i..].trim_start()),
                None => (rest, ""),
            };
            if rule_id.is_empty() {
                return Err(Error::Script {
                    step: lineno + 1,
                    msg: "missing rule id".into(),
                });
            }
            let image = if rest.is_empty() {
                None
            } else {
                let body = rest.strip_prefix("image").ok_or_else(|| Error::Script {
                    step: lineno + 1,
                    msg: format!("expected `image`, found `{rest}`"),
                })?;
                Some(split_fact_list(body).map_err(|msg| Error::Script {
                    step: lineno + 1,
                    msg,
                })?)
            };
            script.steps.push(ScriptStep {
                rule_id: rule_id.to_string(),
                image,
            });
        }
        if script.repeat_from == Some(script.steps.len()) {
            return Err(Error::Script {
                step: 0,
                msg: "empty `repeat` section".into(),
            });
        }
        Ok(script)
    }
}

/// Splits `F1(...), F2(...)` at top-level commas, normalizing whitespace
/// outside string literals so selectors compare against canonical forms.
fn split_fact_list(text: &str) -> std::result::Result<Vec<String>, String> {
    let mut parts = Vec::new();
    let mut depth = 0i32;
    let mut in_str = false;
    let mut escaped = false;
    let mut cur = String::new();
    for c in text.chars() {
        if in_str {
            cur.push(c);
            if escaped {
                escaped = false;
            } else if c == '\\' {
                escaped = true;
            } else if c == '"' {
                in_str = false;
            }
            continue;
        }
        match c {
            '"' => {
                in_str = true;
                cur.push(c);
            }
            '(' | '[' | '{' => {
                depth += 1;
                cur.push(c);
            }
            ')' | ']' | '}' => {
                depth -= 1;
                if depth < 0 {
                    return Err("unbalanced brackets in image list".into());
                }
                cur.push(c);
            }
            ',' if depth == 0 => {
                parts.push(std::mem::take(&mut cur));
                continue;
            }
            c if c.is_whitespace() => continue,
            c => cur.push(c),
        }
    }
    if in_str || depth != 0 {
        return Err("unbalanced brackets or string in image list".into());
    }
    if !cur.is_empty() {
        parts.push(cur);
    }
    if parts.is_empty() {
        return Err("empty image list".into());
    }
    Ok(parts)
}

/// Outcome of a chase run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ChaseStatus {
    /// No rule is applicable to the final instance: it is a solution (and a
    /// universal one).
    Terminated,
    /// The step budget ran out with triggers still applicable.
    BudgetExhausted { budget: usize },
    /// A finite script was exhausted while rules were still applicable, so
    /// the final instance is not a solution.
    ScriptEnded { remaining_triggers: usize },
}

impl ChaseStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            ChaseStatus::Terminated => "terminated",
            ChaseStatus::BudgetExhausted { .. } => "budget-exhausted",
            ChaseStatus::ScriptEnded { .. } => "script-ended",
        }
    }
}

/// A finished chase run: the base instance, every step record, the final
/// instance, and the symbol table as extended by null minting.
#[derive(Clone, Debug)]
pub struct ChaseSequence {
    pub table: SymbolTable,
    pub base: Instance,
    pub records: Vec<ChaseStepRecord>,
    pub result: Instance,
    pub status: ChaseStatus,
}

impl ChaseSequence {
    pub fn steps(&self) -> usize {
        self.records.len()
    }

    /// Fact-key sets of the instances I0..Im, replayed from the deltas.
    pub fn instance_keysets(&self) -> Vec<BTreeSet<FactKey>> {
        let mut cur = self.base.fact_keys();
        let mut out = vec![cur.clone()];
        for rec in &self.records {
            for k in &rec.removed {
                cur.remove(k);
            }
            for k in &rec.added {
                cur.insert(k.clone());
            }
            out.push(cur.clone());
        }
        out
    }

    /// Facts present in every instance from index `from` to the end of the
    /// recorded prefix. This is a finite-prefix diagnostic: it says nothing
    /// about the continuation of a non-terminated run.
    pub fn persistent_facts(&self, from: usize) -> Result<BTreeSet<FactKey>> {
        let keysets = self.instance_keysets();
        if from >= keysets.len() {
            return Err(Error::Chase(format!(
                "index {from} out of range (sequence has instances 0..={})",
                keysets.len() - 1
            )));
        }
        let mut iter = keysets[from..].iter();
        let mut acc = iter.next().cloned().unwrap_or_default();
        for ks in iter {
            acc = acc.intersection(ks).cloned().collect();
        }
        Ok(acc)
    }
}

/// Runs the chase from the base instance under the given strategy and step
/// budget.
pub fn run_chase(
    kb: &KnowledgeBase,
    registry: &BuiltinRegistry,
    strategy: &Strategy,
    max_steps: usize,
) -> Result<ChaseSequence> {
    let mut table = kb.table.clone();
    let base = base_instance(kb, registry)?;
    let mut inst = base.clone();
    let mut records: Vec<ChaseStepRecord> = Vec::new();

    let status = match strategy {
        Strategy::Fair { seed } => {
            run_fair(kb, &mut table, &mut inst, &mut records, *seed, max_steps)?
        }
        Strategy::Scripted(script) => {
            run_scripted(kb, &mut table, &mut inst, &mut records, script, max_steps)?
        }
    };
    Ok(ChaseSequence {
        table,
        base,
        records,
        result: inst,
        status,
    })
}

fn rule_order(kb: &KnowledgeBase, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..kb.rules.len()).collect();
    if seed != 0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        order.shuffle(&mut rng);
    }
    order
}

fn run_fair(
    kb: &KnowledgeBase,
    table: &mut SymbolTable,
    inst: &mut Instance,
    records: &mut Vec<ChaseStepRecord>,
    seed: u64,
    max_steps: usize,
) -> Result<ChaseStatus> {
    let order = rule_order(kb, seed);
    let mut round = 0u64;
    loop {
        round += 1;
        // Snapshot all triggers across rules before applying any.
        let mut snapshot: Vec<Trigger> = Vec::new();
        let room = max_steps.saturating_sub(records.len()).saturating_add(1);
        for &ri in &order {
            // No point materializing more triggers than the budget allows;
            // one extra detects exhaustion.
            let limit = room.saturating_sub(snapshot.len());
            let mut triggers = triggers_limited(inst, table, &kb.rules[ri], ri, limit);
            if seed != 0 {
                let mut rng = ChaCha8Rng::seed_from_u64(seed ^ round ^ ((ri as u64) << 32));
                triggers.shuffle(&mut rng);
            }
            snapshot.extend(triggers);
        }
        if snapshot.is_empty() {
            return Ok(ChaseStatus::Terminated);
        }
        let mut applied_any = false;
        for trigger in snapshot {
            if records.len() >= max_steps {
                // Out of budget: only report exhaustion if work remains.
                return Ok(if any_trigger(inst, table, kb) {
                    ChaseStatus::BudgetExhausted { budget: max_steps }
                } else {
                    ChaseStatus::Terminated
                });
            }
            match apply_step(inst, table, kb, &trigger) {
                Ok(mut rec) => {
                    rec.index = records.len() + 1;
                    records.push(rec);
                    applied_any = true;
                }
                // Stale triggers are skipped: a prior step in this round
                // satisfied or rewrote them.
                Err(Error::Chase(_)) => continue,
                Err(e) => return Err(e),
            }
        }
        if !applied_any {
            return Ok(ChaseStatus::Terminated);
        }
    }
}

fn run_scripted(
    kb: &KnowledgeBase,
    table: &mut SymbolTable,
    inst: &mut Instance,
    records: &mut Vec<ChaseStepRecord>,
    script: &Script,
    max_steps: usize,
) -> Result<ChaseStatus> {
    let mut idx = 0usize;
    let mut applied_in_cycle = false;
    loop {
        if idx >= script.steps.len() {
            match script.repeat_from {
                Some(start) => {
                    // A full cycle that applies nothing would loop forever.
                    if !applied_in_cycle {
                        if !any_trigger(inst, table, kb) {
                            return Ok(ChaseStatus::Terminated);
                        }
                        return Err(Error::Script {
                            step: start,
                            msg: "repeat section applied nothing but triggers remain".into(),
                        });
                    }
                    idx = start;
                    applied_in_cycle = false;
                }
                None => {
                    let remaining = count_triggers(inst, table, kb);
                    return Ok(if remaining == 0 {
                        ChaseStatus::Terminated
                    } else {
                        ChaseStatus::ScriptEnded {
                            remaining_triggers: remaining,
                        }
                    });
                }
            }
        }
        let step = &script.steps[idx];
        let in_repeat = script.repeat_from.is_some_and(|s| idx >= s);
        let step_no = idx + 1;
        idx += 1;
        let (rule_idx, rule) = kb.rule_by_id(&step.rule_id).ok_or_else(|| Error::Script {
            step: step_no,
            msg: format!("unknown rule `{}`", step.rule_id),
        })?;
        let triggers = applicable_triggers(inst, table, rule, rule_idx);
        let chosen = match &step.image {
            None => triggers.into_iter().next(),
            Some(selector) => triggers.into_iter().find(|t| {
                t.assignment.image.len() == selector.len()
                    && t.assignment
                        .image
                        .iter()
                        .zip(selector)
                        .all(|(key, want)| key.display() == *want)
            }),
        };
        let Some(trigger) = chosen else {
            if in_repeat && step.image.is_none() {
                // No trigger for this rule right now; move on.
                continue;
            }
            return Err(Error::Script {
                step: step_no,
                msg: match &step.image {
                    Some(sel) => format!(
                        "no trigger of rule `{}` matches image [{}]",
                        step.rule_id,
                        sel.join(", ")
                    ),
                    None => format!("rule `{}` has no applicable trigger", step.rule_id),
                },
            });
        };
        if records.len() >= max_steps {
            return Ok(ChaseStatus::BudgetExhausted { budget: max_steps });
        }
        let mut rec = apply_step(inst, table, kb, &trigger)?;
        rec.index = records.len() + 1;
        records.push(rec);
        applied_in_cycle = true;
    }
}

fn count_triggers(inst: &Instance, table: &SymbolTable, kb: &KnowledgeBase) -> usize {
    kb.rules
        .iter()
        .enumerate()
        .map(|(ri, rule)| applicable_triggers(inst, table, rule, ri).len())
        .sum()
}

/// True when no tgd of the KB has existential variables; then every chase
/// sequence is finite. The CLI warns when this does not hold.
pub fn full_tgd_guarantee(kb: &KnowledgeBase) -> bool {
    matching::all_tgds_full(kb)
}

/// Renders a run as JSON lines: a base-facts header, one record per step,
/// and a final line with the instance dump and status.
pub fn trace_json_lines(seq: &ChaseSequence) -> Vec<Json> {
    let mut lines = Vec::new();
    lines.push(json!({
        "base_facts": seq.base.fact_keys().iter().map(|k| k.display()).collect::<Vec<_>>(),
    }));
    for rec in &seq.records {
        lines.push(json!({
            "step": rec.index,
            "rule": rec.rule_id,
            "kind": rec.kind.as_str(),
            "image": rec.image.iter().map(|k| k.display()).collect::<Vec<_>>(),
            "added": rec.added.iter().map(|k| k.display()).collect::<Vec<_>>(),
            "removed": rec.removed.iter().map(|k| k.display()).collect::<Vec<_>>(),
            "fresh_entity_nulls": rec.fresh_entity_nulls.iter().map(|k| format!("e⊥{k}")).collect::<Vec<_>>(),
            "fresh_value_nulls": rec.fresh_value_nulls.iter().map(|k| format!("v⊥{k}")).collect::<Vec<_>>(),
        }));
    }
    lines.push(json!({
        "status": seq.status.as_str(),
        "steps": seq.steps(),
        "final": seq.result.to_json(&seq.table),
        "final_facts": seq.result.fact_keys().iter().map(|k| k.display()).collect::<Vec<_>>(),
    }));
    lines
}

/// Human-oriented rendering of a run: one line per step plus the final
/// instance listing.
pub fn trace_pretty(seq: &ChaseSequence) -> String {
    use std::fmt::Write as _;
    let mut out = String::new();
    let _ = writeln!(out, "I0 (base instance):");
    for key in seq.base.fact_keys() {
        let _ = writeln!(out, "  {}", key.display());
    }
    for rec in &seq.records {
        let _ = writeln!(
            out,
            "step {}: {} ({}) image {{{}}}",
            rec.index,
            rec.rule_id,
            rec.kind.as_str(),
            rec.image
                .iter()
                .map(|k| k.display())
                .collect::<Vec<_>>()
                .join(", ")
        );
        for k in &rec.removed {
            let _ = writeln!(out, "  - {}", k.display());
        }
        for k in &rec.added {
            let _ = writeln!(out, "  + {}", k.display());
        }
    }
    let _ = writeln!(
        out,
        "status: {} after {} steps",
        seq.status.as_str(),
        seq.steps()
    );
    let _ = writeln!(out, "final instance:");
    for key in seq.result.fact_keys() {
        let _ = writeln!(out, "  {}", key.display());
    }
    out
}

/// Replays persistence from a JSON-lines trace (as written by
/// [`trace_json_lines`]): the facts present in every instance from `from`
/// on. Works on canonical fact strings, so it needs no knowledge base.
pub fn persistent_facts_from_trace(lines: &[Json], from: usize) -> Result<BTreeSet<String>> {
    let mut keysets: Vec<BTreeSet<String>> = Vec::new();
    let mut cur: BTreeSet<String> = BTreeSet::new();
    let mut saw_base = false;
    for line in lines {
        if let Some(base) = line.get("base_facts") {
            cur = json_string_set(base)?;
            keysets.push(cur.clone());
            saw_base = true;
        } else if line.get("step").is_some() {
            for k in json_string_set(line.get("removed").unwrap_or(&Json::Null))? {
                cur.remove(&k);
            }
            for k in json_string_set(line.get("added").unwrap_or(&Json::Null))? {
                cur.insert(k);
            }
            keysets.push(cur.clone());
        }
    }
    if !saw_base {
        return Err(Error::Chase("trace has no base_facts line".into()));
    }
    if from >= keysets.len() {
        return Err(Error::Chase(format!(
            "index {from} out of range (trace has instances 0..={})",
            keysets.len() - 1
        )));
    }
    let mut iter = keysets[from..].iter();
    let mut acc = iter.next().cloned().unwrap_or_default();
    for ks in iter {
        acc = acc.intersection(ks).cloned().collect();
    }
    Ok(acc)
}

fn json_string_set(v: &Json) -> Result<BTreeSet<String>> {
    match v {
        Json::Null => Ok(BTreeSet::new()),
        Json::Array(items) => items
            .iter()
            .map(|x| {
                x.as_str()
                    .map(str::to_string)
                    .ok_or_else(|| Error::Chase("trace fact list must contain strings".into()))
            })
            .collect(),
        _ => Err(Error::Chase("trace fact list must be an array".into())),
    }
}

/// Rewrites null names in canonical fact strings with an order-preserving
/// renumbering (`e⊥7, e⊥9` become `e⊥1, e⊥2`), so traces from different
/// runs compare up to null renaming.
pub fn normalize_null_names<S: AsRef<str>>(lines: &[S]) -> Vec<String> {
    let mut entity_ids: BTreeSet<u64> = BTreeSet::new();
    let mut value_ids: BTreeSet<u64> = BTreeSet::new();
    for line in lines {
        collect_null_ids(line.as_ref(), &mut entity_ids, &mut value_ids);
    }
    let entity_map: BTreeMap<u64, u64> = entity_ids
        .iter()
        .enumerate()
        .map(|(i, k)| (*k, i as u64 + 1))
        .collect();
    let value_map: BTreeMap<u64, u64> = value_ids
        .iter()
        .enumerate()
        .map(|(i, k)| (*k, i as u64 + 1))
        .collect();
    lines
        .iter()
        .map(|line| rewrite_null_ids(line.as_ref(), &entity_map, &value_map))
        .collect()
}

fn collect_null_ids(s: &str, entities: &mut BTreeSet<u64>, values: &mut BTreeSet<u64>) {
    let chars: Vec<char> = s.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        if chars[i] == '⊥' && i > 0 && (chars[i - 1] == 'e' || chars[i - 1] == 'v') {
            let mut j = i + 1;
            let mut n = 0u64;
            let mut any = false;
            while j < chars.len() && chars[j].is_ascii_digit() {
                n = n * 10 + (chars[j] as u64 - '0' as u64);
                j += 1;
                any = true;
            }
            if any {
                if chars[i - 1] == 'e' {
                    entities.insert(n);
                } else {
                    values.insert(n);
                }
            }
            i = j;
        } else {
            i += 1;
        }
    }
}

fn rewrite_null_ids(
    s: &str,
    entity_map: &BTreeMap<u64, u64>,
    value_map: &BTreeMap<u64, u64>,
) -> String {
    let chars: Vec<char> = s.chars().collect();
    let mut out = String::new();
    let mut i = 0;
    while i < chars.len() {
        if chars[i] == '⊥' && i > 0 && (chars[i - 1] == 'e' || chars[i - 1] == 'v') {
            let mut j = i + 1;
            let mut n = 0u64;
            let mut any = false;
            while j < chars.len() && chars[j].is_ascii_digit() {
                n = n * 10 + (chars[j] as u64 - '0' as u64);
                j += 1;
                any = true;
            }
            if any {
                let map = if chars[i - 1] == 'e' {
                    entity_map
                } else {
                    value_map
                };
                out.push('⊥');
                out.push_str(&map.get(&n).copied().unwrap_or(n).to_string());
                i = j;
                continue;
            }
            out.push(chars[i]);
            i += 1;
        } else {
            out.push(chars[i]);
            i += 1;
        }
    }
    out
}
