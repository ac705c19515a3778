//! Set-valued instances: facts whose entity cells are equivalence classes
//! and whose value cells are non-empty sets of values and value-nulls.
//!
//! An instance keeps its facts deduplicated under a canonical form (predicate
//! name, then per-cell sorted member lists) and maintains the equivalence
//! relation over exactly the entities and entity-nulls that occur in facts.
//! Class merges rewrite only the facts that reference the merged classes,
//! found through a class-to-facts reverse index.

use std::collections::{BTreeMap, BTreeSet};

use serde_json::{json, Map as JsonMap, Value as Json};

use crate::decimal::Decimal;
use crate::model::{
    ArgType, EntityRef, GroundArg, KnowledgeBase, PredId, SymbolTable, Value, ValueId, ValueRef,
};
use crate::Error;

/// Index of an equivalence class inside one instance.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ClassId(pub u32);

/// One cell of a fact.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Cell {
    Class(ClassId),
    Values(BTreeSet<ValueRef>),
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Fact {
    pub pred: PredId,
    pub cells: Vec<Cell>,
}

/// Canonical form of a fact: predicate name plus per-cell sorted members.
/// Orders facts, deduplicates them, and is the unit of golden-trace
/// comparison.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FactKey {
    pub pred: String,
    pub cells: Vec<CellKey>,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CellKey {
    Entities(Vec<(u8, String, u32)>),
    Values(Vec<(u8, Option<Decimal>, String, u32)>),
}

impl FactKey {
    /// Renders the key in the same concrete syntax the rule language uses
    /// for constants, e.g. `CI([Doe1,Doe2],{"J. Doe"},{0.6})`.
    pub fn display(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.pred);
        out.push('(');
        for (i, cell) in self.cells.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            match cell {
                CellKey::Entities(members) => {
                    out.push('[');
                    for (j, (tag, name, k)) in members.iter().enumerate() {
                        if j > 0 {
                            out.push(',');
                        }
                        if *tag == 0 {
                            out.push_str(name);
                        } else {
                            out.push_str(&format!("e⊥{k}"));
                        }
                    }
                    out.push(']');
                }
                CellKey::Values(members) => {
                    out.push('{');
                    for (j, (tag, num, s, k)) in members.iter().enumerate() {
                        if j > 0 {
                            out.push(',');
                        }
                        match tag {
                            0 => out.push_str(&num.unwrap().to_string()),
                            1 => out.push_str(&format!("{s:?}")),
                            _ => out.push_str(&format!("v⊥{k}")),
                        }
                    }
                    out.push('}');
                }
            }
        }
        out.push(')');
        out
    }
}

/// Result of comparing two equal-length, componentwise equal-kind tuples
/// under componentwise set inclusion.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Dominance {
    Equal,
    /// The left tuple is strictly dominated by the right one (left < right).
    StrictlyDominatedBy,
    /// The left tuple strictly dominates the right one (right < left).
    StrictlyDominates,
    Incomparable,
}

/// A deduplicated set of facts plus the equivalence relation over the
/// entities and entity-nulls occurring in them.
///
/// Instances are value-like: cloning takes a snapshot that can be mutated
/// independently or shared read-only across threads.
#[derive(Clone, Debug, Default)]
pub struct Instance {
    /// Live classes; merged-away classes become empty tombstones.
    classes: Vec<BTreeSet<EntityRef>>,
    member_class: BTreeMap<EntityRef, ClassId>,
    facts: BTreeMap<FactKey, Fact>,
    /// Reverse index: class id -> keys of facts referencing it.
    class_facts: BTreeMap<ClassId, BTreeSet<FactKey>>,
}

impl Instance {
    pub fn new() -> Self {
        Self::default()
    }

    /// The base instance: one all-singleton fact per ground atom of the
    /// database plus the supplied built-in facts; the equivalence relation is
    /// the identity over the mentioned entities.
    pub fn base_instance(
        kb: &KnowledgeBase,
        builtin_facts: impl IntoIterator<Item = (PredId, Vec<ValueId>)>,
    ) -> Result<Instance, Error> {
        kb.check_database()?;
        let mut inst = Instance::new();
        for atom in &kb.database {
            let cells = atom
                .args
                .iter()
                .map(|arg| match arg {
                    GroundArg::Entity(e) => {
                        CellSpec::Entities([EntityRef::Entity(*e)].into_iter().collect())
                    }
                    GroundArg::Value(v) => {
                        CellSpec::Values([ValueRef::Value(*v)].into_iter().collect())
                    }
                })
                .collect();
            inst.insert_fact(&kb.table, atom.pred, cells)?;
        }
        for (pred, args) in builtin_facts {
            let cells = args
                .into_iter()
                .map(|v| CellSpec::Values([ValueRef::Value(v)].into_iter().collect()))
                .collect();
            inst.insert_fact(&kb.table, pred, cells)?;
        }
        Ok(inst)
    }

    pub fn is_empty(&self) -> bool {
        self.facts.is_empty()
    }

    pub fn len(&self) -> usize {
        self.facts.len()
    }

    /// Facts in canonical order.
    pub fn facts(&self) -> impl Iterator<Item = (&FactKey, &Fact)> {
        self.facts.iter()
    }

    pub fn fact_keys(&self) -> BTreeSet<FactKey> {
        self.facts.keys().cloned().collect()
    }

    pub fn get(&self, key: &FactKey) -> Option<&Fact> {
        self.facts.get(key)
    }

    pub fn contains(&self, key: &FactKey) -> bool {
        self.facts.contains_key(key)
    }

    /// Whether a fact with exactly these cell member sets is present,
    /// without touching the partition.
    pub fn contains_cells(&self, table: &SymbolTable, pred: PredId, cells: &[CellSpec]) -> bool {
        let key = FactKey {
            pred: table.pred(pred).name.clone(),
            cells: cells
                .iter()
                .map(|spec| match spec {
                    CellSpec::Entities(set) => CellKey::Entities(
                        set.iter()
                            .map(|e| table.entity_key(*e))
                            .collect::<BTreeSet<_>>()
                            .into_iter()
                            .collect(),
                    ),
                    CellSpec::Values(set) => CellKey::Values(
                        set.iter()
                            .map(|v| table.value_key(*v))
                            .collect::<BTreeSet<_>>()
                            .into_iter()
                            .collect(),
                    ),
                })
                .collect(),
        };
        self.facts.contains_key(&key)
    }

    pub fn class_members(&self, c: ClassId) -> &BTreeSet<EntityRef> {
        &self.classes[c.0 as usize]
    }

    pub fn class_of(&self, e: EntityRef) -> Option<ClassId> {
        self.member_class.get(&e).copied()
    }

    /// Live classes in canonical order (by member key list).
    pub fn live_classes(&self, table: &SymbolTable) -> Vec<ClassId> {
        let mut live: Vec<ClassId> = (0..self.classes.len() as u32)
            .map(ClassId)
            .filter(|c| !self.classes[c.0 as usize].is_empty())
            .collect();
        live.sort_by_key(|c| self.class_key(table, *c));
        live
    }

    fn class_key(&self, table: &SymbolTable, c: ClassId) -> Vec<(u8, String, u32)> {
        self.classes[c.0 as usize]
            .iter()
            .map(|e| table.entity_key(*e))
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }

    pub fn cell_key(&self, table: &SymbolTable, cell: &Cell) -> CellKey {
        match cell {
            Cell::Class(c) => CellKey::Entities(self.class_key(table, *c)),
            Cell::Values(vs) => CellKey::Values(
                vs.iter()
                    .map(|v| table.value_key(*v))
                    .collect::<BTreeSet<_>>()
                    .into_iter()
                    .collect(),
            ),
        }
    }

    pub fn fact_key(&self, table: &SymbolTable, fact: &Fact) -> FactKey {
        FactKey {
            pred: table.pred(fact.pred).name.clone(),
            cells: fact.cells.iter().map(|c| self.cell_key(table, c)).collect(),
        }
    }

    /// Finds the class whose member set equals `members`, or creates one.
    /// A partial overlap with an existing class violates the partition and
    /// is rejected.
    pub fn class_for_set(
        &mut self,
        table: &SymbolTable,
        members: &BTreeSet<EntityRef>,
    ) -> Result<ClassId, Error> {
        if members.is_empty() {
            return Err(Error::Schema("empty entity class".into()));
        }
        let first = *members.iter().next().unwrap();
        if let Some(c) = self.class_of(first) {
            if self.class_members(c) == members {
                return Ok(c);
            }
            return Err(Error::Schema(format!(
                "entity cell {{{}}} overlaps existing class {{{}}}",
                members
                    .iter()
                    .map(|e| table.entity_ref_text(*e))
                    .collect::<Vec<_>>()
                    .join(","),
                self.class_members(c)
                    .iter()
                    .map(|e| table.entity_ref_text(*e))
                    .collect::<Vec<_>>()
                    .join(","),
            )));
        }
        for m in members {
            if self.class_of(*m).is_some() {
                return Err(Error::Schema(format!(
                    "entity `{}` already belongs to another class",
                    table.entity_ref_text(*m)
                )));
            }
        }
        let id = ClassId(self.classes.len() as u32);
        self.classes.push(members.clone());
        for m in members {
            self.member_class.insert(*m, id);
        }
        Ok(id)
    }

    /// Inserts a fact given per-cell member sets, aligning entity cells with
    /// the partition. Duplicate facts collapse silently.
    pub fn insert_fact(
        &mut self,
        table: &SymbolTable,
        pred: PredId,
        cells: Vec<CellSpec>,
    ) -> Result<FactKey, Error> {
        let sig = table.pred(pred);
        if cells.len() != sig.arity() {
            return Err(Error::Schema(format!(
                "fact for `{}` has {} cells, expected {}",
                sig.name,
                cells.len(),
                sig.arity()
            )));
        }
        let mut resolved = Vec::with_capacity(cells.len());
        for (i, spec) in cells.into_iter().enumerate() {
            match (spec, sig.types[i]) {
                (CellSpec::Entities(set), ArgType::Entity) => {
                    let class = self.class_for_set(table, &set)?;
                    resolved.push(Cell::Class(class));
                }
                (CellSpec::Values(set), ArgType::Value) => {
                    if set.is_empty() {
                        return Err(Error::Schema(format!(
                            "empty value set in fact for `{}`",
                            sig.name
                        )));
                    }
                    resolved.push(Cell::Values(set));
                }
                _ => {
                    return Err(Error::Schema(format!(
                        "cell {} of `{}` has the wrong kind",
                        i + 1,
                        sig.name
                    )));
                }
            }
        }
        Ok(self.insert_resolved(
            table,
            Fact {
                pred,
                cells: resolved,
            },
        ))
    }

    pub(crate) fn insert_resolved(&mut self, table: &SymbolTable, fact: Fact) -> FactKey {
        let key = self.fact_key(table, &fact);
        if self.facts.contains_key(&key) {
            return key;
        }
        for cell in &fact.cells {
            if let Cell::Class(c) = cell {
                self.class_facts.entry(*c).or_default().insert(key.clone());
            }
        }
        self.facts.insert(key.clone(), fact);
        key
    }

    pub(crate) fn remove(&mut self, key: &FactKey) -> Option<Fact> {
        let fact = self.facts.remove(key)?;
        for cell in &fact.cells {
            if let Cell::Class(c) = cell {
                if let Some(set) = self.class_facts.get_mut(c) {
                    set.remove(key);
                }
            }
        }
        Some(fact)
    }

    /// Merges two distinct classes and rewrites every referencing fact;
    /// facts whose canonical forms collide afterwards collapse to one.
    ///
    /// Returns the surviving class plus the removed and added fact keys.
    pub fn merge_entity_classes(
        &mut self,
        table: &SymbolTable,
        c1: ClassId,
        c2: ClassId,
    ) -> Result<MergeOutcome, Error> {
        if c1 == c2 {
            return Err(Error::Chase("cannot merge a class with itself".into()));
        }
        for c in [c1, c2] {
            if self
                .classes
                .get(c.0 as usize)
                .is_none_or(|m| m.is_empty())
            {
                return Err(Error::Chase(format!("unknown class id {}", c.0)));
            }
        }
        // Union by size: fold the smaller class into the larger one.
        let (winner, loser) =
            if self.classes[c1.0 as usize].len() >= self.classes[c2.0 as usize].len() {
                (c1, c2)
            } else {
                (c2, c1)
            };
        let moved: Vec<EntityRef> = self.classes[loser.0 as usize].iter().copied().collect();
        for m in &moved {
            self.member_class.insert(*m, winner);
        }
        let moved_set: BTreeSet<EntityRef> = moved.into_iter().collect();
        self.classes[winner.0 as usize].extend(moved_set);
        self.classes[loser.0 as usize].clear();

        // Only facts referencing either class need rewriting. Remove the old
        // versions first, then insert the rewritten batch, so collapses of
        // several old facts into one new one come out right.
        let mut touched: BTreeSet<FactKey> = BTreeSet::new();
        for c in [winner, loser] {
            if let Some(keys) = self.class_facts.get(&c) {
                touched.extend(keys.iter().cloned());
            }
        }
        self.class_facts.remove(&loser);
        let mut rewritten = Vec::new();
        let mut removed = Vec::new();
        for key in touched {
            let mut fact = match self.remove(&key) {
                Some(f) => f,
                None => continue,
            };
            for cell in &mut fact.cells {
                if let Cell::Class(c) = cell {
                    if *c == loser {
                        *cell = Cell::Class(winner);
                    }
                }
            }
            removed.push(key);
            rewritten.push(fact);
        }
        let mut added = Vec::new();
        for fact in rewritten {
            let existed = self.facts.contains_key(&self.fact_key(table, &fact));
            let new_key = self.insert_resolved(table, fact);
            if !existed && !added.contains(&new_key) {
                added.push(new_key);
            }
        }
        Ok(MergeOutcome {
            merged: winner,
            removed,
            added,
        })
    }

    /// Rewrites the value cells at the given positions of the given facts to
    /// `union`, leaving every other position and fact untouched. This is the
    /// local replacement a value-egd chase step performs on its image.
    pub fn replace_value_cells(
        &mut self,
        table: &SymbolTable,
        rewrites: &[(FactKey, BTreeSet<usize>)],
        union: &BTreeSet<ValueRef>,
    ) -> Result<MergeOutcome, Error> {
        if union.is_empty() {
            return Err(Error::Chase("empty value union".into()));
        }
        // Coalesce positions per fact; the same fact can be the image of
        // several atoms.
        let mut per_fact: BTreeMap<FactKey, BTreeSet<usize>> = BTreeMap::new();
        for (key, positions) in rewrites {
            if !self.facts.contains_key(key) {
                return Err(Error::Chase(format!(
                    "image fact {} not present in the instance",
                    key.display()
                )));
            }
            per_fact.entry(key.clone()).or_default().extend(positions);
        }
        // All image facts are rewritten simultaneously: remove the originals,
        // then insert the batch of rewritten facts.
        let originals: BTreeSet<FactKey> = per_fact.keys().cloned().collect();
        let mut rewritten = Vec::new();
        for (key, positions) in &per_fact {
            let mut fact = self.remove(key).unwrap();
            for &p in positions {
                match fact.cells.get_mut(p) {
                    Some(Cell::Values(vs)) => *vs = union.clone(),
                    _ => {
                        return Err(Error::Chase(format!(
                            "position {} of {} is not a value cell",
                            p + 1,
                            key.display()
                        )));
                    }
                }
            }
            rewritten.push(fact);
        }
        let mut added = Vec::new();
        for fact in rewritten {
            let existed = self.facts.contains_key(&self.fact_key(table, &fact));
            let new_key = self.insert_resolved(table, fact);
            if !existed && !added.contains(&new_key) {
                added.push(new_key);
            }
        }
        let mut removed: Vec<FactKey> = originals
            .iter()
            .filter(|k| !self.facts.contains_key(k))
            .cloned()
            .collect();
        removed.sort();
        added.retain(|k| !originals.contains(k));
        Ok(MergeOutcome {
            merged: ClassId(0),
            removed,
            added,
        })
    }

    /// The cells occurring in facts, split into entity classes and value
    /// sets.
    pub fn active_domain(&self) -> (BTreeSet<ClassId>, BTreeSet<BTreeSet<ValueRef>>) {
        let mut classes = BTreeSet::new();
        let mut value_sets = BTreeSet::new();
        for fact in self.facts.values() {
            for cell in &fact.cells {
                match cell {
                    Cell::Class(c) => {
                        classes.insert(*c);
                    }
                    Cell::Values(vs) => {
                        value_sets.insert(vs.clone());
                    }
                }
            }
        }
        (classes, value_sets)
    }

    /// Union of the members of the active-domain cells.
    pub fn underlying_domain(&self) -> (BTreeSet<EntityRef>, BTreeSet<ValueRef>) {
        let (classes, value_sets) = self.active_domain();
        let mut entities = BTreeSet::new();
        for c in classes {
            entities.extend(self.class_members(c).iter().copied());
        }
        let mut values = BTreeSet::new();
        for vs in value_sets {
            values.extend(vs);
        }
        (entities, values)
    }

    /// Checks internal coherence: classes partition exactly the entities in
    /// facts, entity cells are whole live classes, and no value cell is
    /// empty. Used by tests and the fuzz harness.
    pub fn check_invariants(&self, table: &SymbolTable) -> Result<(), Error> {
        let (active_e, _) = self.underlying_domain();
        let mut in_classes = BTreeSet::new();
        for (i, members) in self.classes.iter().enumerate() {
            for m in members {
                if !in_classes.insert(*m) {
                    return Err(Error::Schema(format!(
                        "entity `{}` appears in two classes",
                        table.entity_ref_text(*m)
                    )));
                }
                if self.member_class.get(m) != Some(&ClassId(i as u32)) {
                    return Err(Error::Schema("member/class map out of sync".into()));
                }
            }
        }
        // Every live class must be referenced by some fact, so the classes
        // partition exactly the entities occurring in facts.
        let referenced: BTreeSet<ClassId> = self
            .facts
            .values()
            .flat_map(|f| {
                f.cells.iter().filter_map(|c| match c {
                    Cell::Class(cc) => Some(*cc),
                    _ => None,
                })
            })
            .collect();
        for (i, members) in self.classes.iter().enumerate() {
            if !members.is_empty() && !referenced.contains(&ClassId(i as u32)) {
                return Err(Error::Schema(format!(
                    "class [{}] occurs in no fact",
                    members
                        .iter()
                        .map(|e| table.entity_ref_text(*e))
                        .collect::<Vec<_>>()
                        .join(",")
                )));
            }
        }
        if in_classes != active_e {
            return Err(Error::Schema(
                "classes do not partition the entities occurring in facts".into(),
            ));
        }
        for fact in self.facts.values() {
            for cell in &fact.cells {
                match cell {
                    Cell::Values(vs) if vs.is_empty() => {
                        return Err(Error::Schema("empty value cell".into()));
                    }
                    Cell::Class(c) if self.classes[c.0 as usize].is_empty() => {
                        return Err(Error::Schema("fact references a dead class".into()));
                    }
                    _ => {}
                }
            }
        }
        Ok(())
    }

    /// Canonical JSON rendering: sorted classes and facts.
    pub fn to_json(&self, table: &SymbolTable) -> Json {
        let classes: Vec<Json> = self
            .live_classes(table)
            .into_iter()
            .map(|c| {
                Json::Array(
                    sorted_entity_members(table, self.class_members(c))
                        .into_iter()
                        .map(|e| Json::String(table.entity_ref_text(e)))
                        .collect(),
                )
            })
            .collect();
        let facts: Vec<Json> = self
            .facts.values().map(|fact| {
                let cells: Vec<Json> = fact
                    .cells
                    .iter()
                    .map(|cell| match cell {
                        Cell::Class(c) => json!({
                            "class": sorted_entity_members(table, self.class_members(*c))
                                .into_iter()
                                .map(|e| Json::String(table.entity_ref_text(e)))
                                .collect::<Vec<_>>()
                        }),
                        Cell::Values(vs) => json!({
                            "values": sorted_value_members(table, vs)
                                .into_iter()
                                .map(|v| value_ref_json(table, v))
                                .collect::<Vec<_>>()
                        }),
                    })
                    .collect();
                json!({ "pred": table.pred(fact.pred).name, "cells": cells })
            })
            .collect();
        json!({ "classes": classes, "facts": facts })
    }

    /// Loads an instance from its canonical JSON form. Interns unknown
    /// values, reserves null indices, and validates fact cells against the
    /// declared classes.
    pub fn from_json(table: &mut SymbolTable, json: &Json) -> Result<Instance, Error> {
        let obj = json
            .as_object()
            .ok_or_else(|| shape("instance JSON must be an object"))?;
        let mut inst = Instance::new();
        let classes = obj
            .get("classes")
            .and_then(Json::as_array)
            .ok_or_else(|| shape("missing `classes` array"))?;
        for class in classes {
            let arr = class
                .as_array()
                .ok_or_else(|| shape("class must be an array"))?;
            let mut members = BTreeSet::new();
            for m in arr {
                let s = m
                    .as_str()
                    .ok_or_else(|| shape("class member must be a string"))?;
                members.insert(parse_entity_ref(table, s)?);
            }
            inst.class_for_set(table, &members)?;
        }
        let facts = obj
            .get("facts")
            .and_then(Json::as_array)
            .ok_or_else(|| shape("missing `facts` array"))?;
        for fact in facts {
            let fobj = fact
                .as_object()
                .ok_or_else(|| shape("fact must be an object"))?;
            let name = fobj
                .get("pred")
                .and_then(Json::as_str)
                .ok_or_else(|| shape("fact missing `pred`"))?;
            let pred = table
                .lookup_pred(name)
                .ok_or_else(|| Error::Schema(format!("unknown predicate `{name}`")))?;
            let cells = fobj
                .get("cells")
                .and_then(Json::as_array)
                .ok_or_else(|| shape("fact missing `cells`"))?;
            let mut specs = Vec::new();
            for cell in cells {
                let cobj = cell
                    .as_object()
                    .ok_or_else(|| shape("cell must be an object"))?;
                if let Some(class) = cobj.get("class") {
                    let arr = class
                        .as_array()
                        .ok_or_else(|| shape("`class` must be an array"))?;
                    let mut members = BTreeSet::new();
                    for m in arr {
                        let s = m
                            .as_str()
                            .ok_or_else(|| shape("class member must be a string"))?;
                        members.insert(parse_entity_ref(table, s)?);
                    }
                    // Entity cells must be declared classes, exactly.
                    let first = *members
                        .iter()
                        .next()
                        .ok_or_else(|| shape("empty entity cell"))?;
                    match inst.class_of(first) {
                        Some(c) if inst.class_members(c) == &members => {}
                        _ => {
                            return Err(Error::Schema(
                                "fact entity cell does not match any declared class".into(),
                            ))
                        }
                    }
                    specs.push(CellSpec::Entities(members));
                } else if let Some(values) = cobj.get("values") {
                    let arr = values
                        .as_array()
                        .ok_or_else(|| shape("`values` must be an array"))?;
                    let mut members = BTreeSet::new();
                    for v in arr {
                        members.insert(parse_value_ref(table, v)?);
                    }
                    specs.push(CellSpec::Values(members));
                } else {
                    return Err(shape("cell must have `class` or `values`"));
                }
            }
            inst.insert_fact(table, pred, specs)?;
        }
        inst.check_invariants(table)?;
        Ok(inst)
    }
}

fn shape(msg: &str) -> Error {
    Error::Schema(msg.to_string())
}

/// Member set of a fact cell in per-cell form, as used when constructing
/// facts from outside the instance.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CellSpec {
    Entities(BTreeSet<EntityRef>),
    Values(BTreeSet<ValueRef>),
}

/// Fact keys removed and added by a mutation, for chase step records.
#[derive(Clone, Debug, Default)]
pub struct MergeOutcome {
    pub merged: ClassId,
    pub removed: Vec<FactKey>,
    pub added: Vec<FactKey>,
}

pub fn sorted_entity_members(table: &SymbolTable, members: &BTreeSet<EntityRef>) -> Vec<EntityRef> {
    let mut v: Vec<EntityRef> = members.iter().copied().collect();
    v.sort_by_key(|e| table.entity_key(*e));
    v
}

pub fn sorted_value_members(table: &SymbolTable, members: &BTreeSet<ValueRef>) -> Vec<ValueRef> {
    let mut v: Vec<ValueRef> = members.iter().copied().collect();
    v.sort_by_key(|x| table.value_key(*x));
    v
}

pub fn value_ref_json(table: &SymbolTable, v: ValueRef) -> Json {
    match v {
        ValueRef::Value(id) => match table.value(id) {
            Value::Str(s) => Json::String(s.clone()),
            Value::Num(d) => {
                let mut m = JsonMap::new();
                m.insert("num".into(), Json::String(d.to_string()));
                Json::Object(m)
            }
        },
        ValueRef::Null(k) => {
            let mut m = JsonMap::new();
            m.insert("null".into(), Json::String(format!("v⊥{k}")));
            Json::Object(m)
        }
    }
}

pub fn parse_entity_ref(table: &mut SymbolTable, s: &str) -> Result<EntityRef, Error> {
    if let Some(k) = s.strip_prefix("e⊥") {
        let k: u32 = k
            .parse()
            .map_err(|_| Error::Schema(format!("bad entity-null `{s}`")))?;
        table.reserve_entity_null(k);
        return Ok(EntityRef::Null(k));
    }
    Ok(EntityRef::Entity(table.intern_entity(s)))
}

pub fn parse_value_ref(table: &mut SymbolTable, v: &Json) -> Result<ValueRef, Error> {
    match v {
        Json::String(s) => Ok(ValueRef::Value(table.intern_value(Value::Str(s.clone())))),
        Json::Object(obj) => {
            if let Some(Json::String(n)) = obj.get("num") {
                let d: Decimal = n
                    .parse()
                    .map_err(|e| Error::Schema(format!("bad number `{n}`: {e}")))?;
                Ok(ValueRef::Value(table.intern_value(Value::Num(d))))
            } else if let Some(Json::String(s)) = obj.get("null") {
                let k = s
                    .strip_prefix("v⊥")
                    .and_then(|k| k.parse::<u32>().ok())
                    .ok_or_else(|| Error::Schema(format!("bad value-null `{s}`")))?;
                table.reserve_value_null(k);
                Ok(ValueRef::Null(k))
            } else {
                Err(shape(
                    "value must be a string, {\"num\":…}, or {\"null\":…}",
                ))
            }
        }
        _ => Err(shape(
            "value must be a string, {\"num\":…}, or {\"null\":…}",
        )),
    }
}

/// Componentwise comparison of two cell tuples under set inclusion.
///
/// Tuples must have equal length and componentwise equal kinds.
pub fn compare_tuples(left: &[TupleCell], right: &[TupleCell]) -> Result<Dominance, Error> {
    if left.len() != right.len() {
        return Err(Error::Schema("tuple length mismatch".into()));
    }
    let mut le = true; // left <= right
    let mut ge = true; // right <= left
    for (a, b) in left.iter().zip(right) {
        match (a, b) {
            (TupleCell::Entities(x), TupleCell::Entities(y)) => {
                le &= x.is_subset(y);
                ge &= y.is_subset(x);
            }
            (TupleCell::Values(x), TupleCell::Values(y)) => {
                le &= x.is_subset(y);
                ge &= y.is_subset(x);
            }
            _ => return Err(Error::Schema("tuple cell kind mismatch".into())),
        }
    }
    Ok(match (le, ge) {
        (true, true) => Dominance::Equal,
        (true, false) => Dominance::StrictlyDominatedBy,
        (false, true) => Dominance::StrictlyDominates,
        (false, false) => Dominance::Incomparable,
    })
}

/// A tuple component outside any particular instance: a plain set of
/// entities/entity-nulls or of values/value-nulls.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum TupleCell {
    Entities(BTreeSet<EntityRef>),
    Values(BTreeSet<ValueRef>),
}

impl TupleCell {
    pub fn is_empty(&self) -> bool {
        match self {
            TupleCell::Entities(s) => s.is_empty(),
            TupleCell::Values(s) => s.is_empty(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ArgType, PredKind, PredicateSignature};

    fn table_with_pred() -> (SymbolTable, PredId) {
        let mut table = SymbolTable::new();
        let pred = table
            .declare_pred(PredicateSignature {
                name: "P".into(),
                types: vec![ArgType::Entity, ArgType::Value],
                kind: PredKind::Kb,
            })
            .unwrap();
        (table, pred)
    }

    #[test]
    fn overlapping_entity_cells_are_rejected() {
        let (mut table, pred) = table_with_pred();
        let a = EntityRef::Entity(table.intern_entity("A"));
        let b = EntityRef::Entity(table.intern_entity("B"));
        let one = ValueRef::Value(table.intern_value(Value::Num(Decimal::from_int(1))));
        let mut inst = Instance::new();
        inst.insert_fact(
            &table,
            pred,
            vec![
                CellSpec::Entities([a, b].into_iter().collect()),
                CellSpec::Values([one].into_iter().collect()),
            ],
        )
        .unwrap();
        // {A} intersects the existing class {A,B} without being equal.
        let err = inst.insert_fact(
            &table,
            pred,
            vec![
                CellSpec::Entities([a].into_iter().collect()),
                CellSpec::Values([one].into_iter().collect()),
            ],
        );
        assert!(err.is_err());
    }

    #[test]
    fn cell_kind_mismatch_is_rejected() {
        let (mut table, pred) = table_with_pred();
        let a = EntityRef::Entity(table.intern_entity("A"));
        let mut inst = Instance::new();
        let err = inst.insert_fact(
            &table,
            pred,
            vec![
                CellSpec::Entities([a].into_iter().collect()),
                CellSpec::Entities([a].into_iter().collect()),
            ],
        );
        assert!(err.is_err());
    }

    #[test]
    fn fact_display_uses_the_concrete_syntax() {
        let (mut table, pred) = table_with_pred();
        let a = EntityRef::Entity(table.intern_entity("A"));
        let s = ValueRef::Value(table.intern_value(Value::Str("x y".into())));
        let n = ValueRef::Value(table.intern_value(Value::Num("0.50".parse().unwrap())));
        let mut inst = Instance::new();
        let key = inst
            .insert_fact(
                &table,
                pred,
                vec![
                    CellSpec::Entities([a, EntityRef::Null(2)].into_iter().collect()),
                    CellSpec::Values([s, n, ValueRef::Null(1)].into_iter().collect()),
                ],
            )
            .unwrap();
        assert_eq!(key.display(), "P([A,e⊥2],{0.5,\"x y\",v⊥1})");
    }
}
