//! Core vocabulary: symbols, predicate signatures, rules, and knowledge bases.
//!
//! Symbols live in four disjoint spaces: entities, values, entity-nulls, and
//! value-nulls. Entities and values are interned in a [`SymbolTable`]; nulls
//! are never parsed from input and are only minted by the chase through the
//! table's monotone counters.

use std::collections::HashMap;
use std::fmt;

use crate::decimal::Decimal;
use crate::Error;

/// Interned entity constant.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EntityId(pub u32);

/// Interned value literal.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ValueId(pub u32);

/// Predicate symbol.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PredId(pub u32);

/// Rule- or query-local variable.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId(pub u32);

/// An element of the entity side of an instance: a named entity or an
/// entity-null `e⊥k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EntityRef {
    Entity(EntityId),
    Null(u32),
}

/// An element of the value side of an instance: a value literal or a
/// value-null `v⊥k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ValueRef {
    Value(ValueId),
    Null(u32),
}

/// A value literal: an exact decimal number or a string.
///
/// Numbers order before strings; this fixes the canonical ordering of value
/// sets wherever they are serialized or compared.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Value {
    Num(Decimal),
    Str(String),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Num(d) => write!(f, "{d}"),
            Value::Str(s) => write!(f, "{s:?}"),
        }
    }
}

/// Whether a predicate argument ranges over entities or values.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ArgType {
    Entity,
    Value,
}

/// KB predicates are interpreted by instances; built-ins carry fixed global
/// semantics and range over values only.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PredKind {
    Kb,
    BuiltIn,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PredicateSignature {
    pub name: String,
    pub types: Vec<ArgType>,
    pub kind: PredKind,
}

impl PredicateSignature {
    pub fn arity(&self) -> usize {
        self.types.len()
    }
}

/// Interner for entities, values, and predicate signatures, plus the two
/// null counters. Identifier spaces are pairwise disjoint by construction.
#[derive(Clone, Debug, Default)]
pub struct SymbolTable {
    entities: Vec<String>,
    entity_index: HashMap<String, EntityId>,
    values: Vec<Value>,
    value_index: HashMap<Value, ValueId>,
    preds: Vec<PredicateSignature>,
    pred_index: HashMap<String, PredId>,
    entity_null_counter: u32,
    value_null_counter: u32,
}

impl SymbolTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn intern_entity(&mut self, name: &str) -> EntityId {
        if let Some(&id) = self.entity_index.get(name) {
            return id;
        }
        let id = EntityId(self.entities.len() as u32);
        self.entities.push(name.to_string());
        self.entity_index.insert(name.to_string(), id);
        id
    }

    pub fn intern_value(&mut self, value: Value) -> ValueId {
        if let Some(&id) = self.value_index.get(&value) {
            return id;
        }
        let id = ValueId(self.values.len() as u32);
        self.values.push(value.clone());
        self.value_index.insert(value, id);
        id
    }

    pub fn declare_pred(&mut self, sig: PredicateSignature) -> Result<PredId, Error> {
        if self.pred_index.contains_key(&sig.name) {
            return Err(Error::Schema(format!(
                "predicate `{}` declared twice",
                sig.name
            )));
        }
        if sig.kind == PredKind::BuiltIn && sig.types.contains(&ArgType::Entity) {
            return Err(Error::Schema(format!(
                "built-in `{}` must have value-typed arguments only",
                sig.name
            )));
        }
        let id = PredId(self.preds.len() as u32);
        self.pred_index.insert(sig.name.clone(), id);
        self.preds.push(sig);
        Ok(id)
    }

    pub fn entity_name(&self, id: EntityId) -> &str {
        &self.entities[id.0 as usize]
    }

    pub fn lookup_entity(&self, name: &str) -> Option<EntityId> {
        self.entity_index.get(name).copied()
    }

    pub fn value(&self, id: ValueId) -> &Value {
        &self.values[id.0 as usize]
    }

    pub fn lookup_value(&self, value: &Value) -> Option<ValueId> {
        self.value_index.get(value).copied()
    }

    pub fn pred(&self, id: PredId) -> &PredicateSignature {
        &self.preds[id.0 as usize]
    }

    pub fn lookup_pred(&self, name: &str) -> Option<PredId> {
        self.pred_index.get(name).copied()
    }

    pub fn preds(&self) -> impl Iterator<Item = (PredId, &PredicateSignature)> {
        self.preds
            .iter()
            .enumerate()
            .map(|(i, sig)| (PredId(i as u32), sig))
    }

    /// Mints a fresh entity-null `e⊥k`; counters only move forward.
    pub fn mint_entity_null(&mut self) -> EntityRef {
        self.entity_null_counter += 1;
        EntityRef::Null(self.entity_null_counter)
    }

    /// Mints a fresh value-null `v⊥k`.
    pub fn mint_value_null(&mut self) -> ValueRef {
        self.value_null_counter += 1;
        ValueRef::Null(self.value_null_counter)
    }

    /// Advances the entity-null counter past `k`, so later minting cannot
    /// collide with nulls read back from a serialized instance.
    pub fn reserve_entity_null(&mut self, k: u32) {
        self.entity_null_counter = self.entity_null_counter.max(k);
    }

    pub fn reserve_value_null(&mut self, k: u32) {
        self.value_null_counter = self.value_null_counter.max(k);
    }

    /// Canonical sort key of an entity-side element: named entities first
    /// (by name), entity-nulls after (by index).
    pub fn entity_key(&self, e: EntityRef) -> (u8, String, u32) {
        match e {
            EntityRef::Entity(id) => (0, self.entity_name(id).to_string(), 0),
            EntityRef::Null(k) => (1, String::new(), k),
        }
    }

    /// Canonical sort key of a value-side element: numbers, then strings,
    /// then value-nulls.
    pub fn value_key(&self, v: ValueRef) -> (u8, Option<Decimal>, String, u32) {
        match v {
            ValueRef::Value(id) => match self.value(id) {
                Value::Num(d) => (0, Some(*d), String::new(), 0),
                Value::Str(s) => (1, None, s.clone(), 0),
            },
            ValueRef::Null(k) => (2, None, String::new(), k),
        }
    }

    pub fn entity_ref_text(&self, e: EntityRef) -> String {
        match e {
            EntityRef::Entity(id) => self.entity_name(id).to_string(),
            EntityRef::Null(k) => format!("e⊥{k}"),
        }
    }

    pub fn value_ref_text(&self, v: ValueRef) -> String {
        match v {
            ValueRef::Value(id) => self.value(id).to_string(),
            ValueRef::Null(k) => format!("v⊥{k}"),
        }
    }
}

/// A term of an atom in a rule or query body/head.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Term {
    Var(VarId),
    Entity(EntityId),
    Value(ValueId),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Atom {
    pub pred: PredId,
    pub terms: Vec<Term>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VarKind {
    Entity,
    Value,
}

/// Variable names and kinds local to one rule or query.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct VarTable {
    pub names: Vec<String>,
    pub kinds: Vec<VarKind>,
}

impl VarTable {
    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, v: VarId) -> &str {
        &self.names[v.0 as usize]
    }

    pub fn kind(&self, v: VarId) -> VarKind {
        self.kinds[v.0 as usize]
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RuleForm {
    Tgd {
        body: Vec<Atom>,
        head: Vec<Atom>,
        existentials: Vec<VarId>,
    },
    EntityEgd {
        body: Vec<Atom>,
        y: VarId,
        z: VarId,
    },
    ValueEgd {
        body: Vec<Atom>,
        y: VarId,
        z: VarId,
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rule {
    pub id: String,
    pub vars: VarTable,
    pub form: RuleForm,
}

impl Rule {
    pub fn body(&self) -> &[Atom] {
        match &self.form {
            RuleForm::Tgd { body, .. }
            | RuleForm::EntityEgd { body, .. }
            | RuleForm::ValueEgd { body, .. } => body,
        }
    }

    /// Variables shared between body and head of a tgd.
    pub fn frontier(&self) -> Vec<VarId> {
        match &self.form {
            RuleForm::Tgd { body, head, .. } => {
                let body_vars = vars_of(body);
                let head_vars = vars_of(head);
                body_vars
                    .into_iter()
                    .filter(|v| head_vars.contains(v))
                    .collect()
            }
            _ => Vec::new(),
        }
    }
}

/// Variables of a conjunction in first-occurrence order.
pub fn vars_of(atoms: &[Atom]) -> Vec<VarId> {
    let mut out = Vec::new();
    for atom in atoms {
        for term in &atom.terms {
            if let Term::Var(v) = term {
                if !out.contains(v) {
                    out.push(*v);
                }
            }
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GroundArg {
    Entity(EntityId),
    Value(ValueId),
}

/// A ground atom of the database (KB predicates only; built-in facts are
/// derived, not stored).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroundAtom {
    pub pred: PredId,
    pub args: Vec<GroundArg>,
}

/// A named conjunctive query: free variables (order significant),
/// existentials, and a built-in free body.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Query {
    pub name: String,
    pub vars: VarTable,
    pub free: Vec<VarId>,
    pub existentials: Vec<VarId>,
    pub body: Vec<Atom>,
}

/// A knowledge base: TBox rules plus the extensional database.
#[derive(Clone, Debug, Default)]
pub struct KnowledgeBase {
    pub table: SymbolTable,
    pub rules: Vec<Rule>,
    pub database: Vec<GroundAtom>,
}

impl KnowledgeBase {
    pub fn rule_by_id(&self, id: &str) -> Option<(usize, &Rule)> {
        self.rules.iter().enumerate().find(|(_, r)| r.id == id)
    }

    /// Every ground atom must match its predicate signature.
    pub fn check_database(&self) -> Result<(), Error> {
        for atom in &self.database {
            let sig = self.table.pred(atom.pred);
            if sig.kind != PredKind::Kb {
                return Err(Error::Schema(format!(
                    "database atom uses built-in predicate `{}`",
                    sig.name
                )));
            }
            if atom.args.len() != sig.arity() {
                return Err(Error::Schema(format!(
                    "atom for `{}` has {} arguments, expected {}",
                    sig.name,
                    atom.args.len(),
                    sig.arity()
                )));
            }
            for (i, arg) in atom.args.iter().enumerate() {
                let ok = match arg {
                    GroundArg::Entity(_) => sig.types[i] == ArgType::Entity,
                    GroundArg::Value(_) => sig.types[i] == ArgType::Value,
                };
                if !ok {
                    return Err(Error::Schema(format!(
                        "argument {} of `{}` has the wrong kind",
                        i + 1,
                        sig.name
                    )));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn null_counters_are_monotone_and_disjoint_from_entities() {
        let mut table = SymbolTable::new();
        let e = table.intern_entity("A");
        let n1 = table.mint_entity_null();
        let n2 = table.mint_entity_null();
        assert_eq!(n1, EntityRef::Null(1));
        assert_eq!(n2, EntityRef::Null(2));
        assert_ne!(EntityRef::Entity(e), n1);
        table.reserve_entity_null(10);
        assert_eq!(table.mint_entity_null(), EntityRef::Null(11));
        // Reserving below the counter never rewinds it.
        table.reserve_entity_null(3);
        assert_eq!(table.mint_entity_null(), EntityRef::Null(12));
    }

    #[test]
    fn value_keys_order_numbers_before_strings_before_nulls() {
        let mut table = SymbolTable::new();
        let s = table.intern_value(Value::Str("0".into()));
        let n = table.intern_value(Value::Num(crate::decimal::Decimal::from_int(7)));
        let mut refs = vec![ValueRef::Null(1), ValueRef::Value(s), ValueRef::Value(n)];
        refs.sort_by_key(|v| table.value_key(*v));
        assert_eq!(
            refs,
            vec![ValueRef::Value(n), ValueRef::Value(s), ValueRef::Null(1)]
        );
    }

    #[test]
    fn interning_is_idempotent() {
        let mut table = SymbolTable::new();
        assert_eq!(table.intern_entity("A"), table.intern_entity("A"));
        let v = Value::Num("0.60".parse().unwrap());
        let w = Value::Num("0.6".parse().unwrap());
        // Equal decimals intern to one identifier.
        assert_eq!(table.intern_value(v), table.intern_value(w));
    }

    #[test]
    fn builtin_signatures_must_be_value_typed() {
        let mut table = SymbolTable::new();
        let err = table.declare_pred(PredicateSignature {
            name: "b".into(),
            types: vec![ArgType::Entity],
            kind: PredKind::BuiltIn,
        });
        assert!(err.is_err());
    }
}
