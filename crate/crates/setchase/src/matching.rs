//! The τ transform, assignment enumeration, rule-satisfaction checks, and
//! homomorphism search.
//!
//! An assignment maps every entity-variable of a conjunction to an
//! equivalence class, every value constant to a set containing it, and every
//! *occurrence* of a value-variable (a set-variable of the τ transform) to a
//! set of values, such that the occurrences of one value-variable intersect
//! and every atom is realized by a fact. Different atoms may map to the same
//! fact; assignments are enumerated by backtracking left to right over the
//! canonical fact order, maintaining the running per-variable intersection
//! and pruning as soon as it empties.

use std::collections::{BTreeMap, BTreeSet};

use crate::instance::{Cell, ClassId, FactKey, Instance, TupleCell};
use crate::model::{
    Atom, EntityRef, GroundArg, GroundAtom, KnowledgeBase, Rule, RuleForm, SymbolTable, Term,
    ValueId, ValueRef, VarId, VarKind, VarTable,
};

/// An occurrence of a value-variable: (atom index, argument position).
/// Occurrences are the set-variables introduced by the τ transform.
pub type Occurrence = (usize, usize);

/// The τ transform of a conjunction: each value-variable occurrence becomes
/// its own set-variable; `set_vars` maps each value-variable to its
/// occurrences in atom order.
#[derive(Clone, Debug)]
pub struct TauConjunction<'a> {
    pub atoms: &'a [Atom],
    pub set_vars: BTreeMap<VarId, Vec<Occurrence>>,
}

pub fn tau<'a>(vars: &VarTable, atoms: &'a [Atom]) -> TauConjunction<'a> {
    let mut set_vars: BTreeMap<VarId, Vec<Occurrence>> = BTreeMap::new();
    for (ai, atom) in atoms.iter().enumerate() {
        for (pi, term) in atom.terms.iter().enumerate() {
            if let Term::Var(v) = term {
                if vars.kind(*v) == VarKind::Value {
                    set_vars.entry(*v).or_default().push((ai, pi));
                }
            }
        }
    }
    TauConjunction { atoms, set_vars }
}

impl<'a> TauConjunction<'a> {
    /// Names the set-variables like `S1^x`, `S2^x` in occurrence order, for
    /// display and tests.
    pub fn set_var_names(&self, vars: &VarTable) -> BTreeMap<Occurrence, String> {
        let mut out = BTreeMap::new();
        for (var, occurrences) in &self.set_vars {
            for (i, occ) in occurrences.iter().enumerate() {
                out.insert(*occ, format!("S{}^{}", i + 1, vars.name(*var)));
            }
        }
        out
    }
}

/// A match of a conjunction into an instance.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Assignment {
    /// Image fact of each atom, in atom order.
    pub image: Vec<FactKey>,
    pub entity_vars: BTreeMap<VarId, ClassId>,
    /// Set-variable images, keyed by occurrence.
    pub set_vars: BTreeMap<Occurrence, BTreeSet<ValueRef>>,
    /// Images of value constants: each constant maps to one set containing
    /// it, shared by all of its occurrences.
    pub value_consts: BTreeMap<ValueId, BTreeSet<ValueRef>>,
    /// Per value-variable intersection of its set-variable images; non-empty
    /// by construction.
    pub intersections: BTreeMap<VarId, BTreeSet<ValueRef>>,
}

/// Extra conditions a conjunction match must satisfy, used when searching
/// head-compatible extensions of a body assignment.
#[derive(Clone, Debug, Default)]
pub struct MatchConstraints {
    /// Frontier entity-variables pinned to the body's classes.
    pub pinned_entities: BTreeMap<VarId, ClassId>,
    /// Frontier value-variables: every occurrence image must contain this
    /// set (so the head intersection contains the body intersection).
    pub required_supersets: BTreeMap<VarId, BTreeSet<ValueRef>>,
}

/// Enumerates every assignment from the conjunction to the instance, in
/// deterministic order (canonical fact order, atoms left to right).
pub fn enumerate_assignments(
    inst: &Instance,
    table: &SymbolTable,
    vars: &VarTable,
    atoms: &[Atom],
) -> Vec<Assignment> {
    match_conjunction(
        inst,
        table,
        vars,
        atoms,
        &MatchConstraints::default(),
        false,
    )
}

/// Like [`enumerate_assignments`] but honoring `constraints`; with
/// `first_only`, returns at most one match.
pub fn match_conjunction(
    inst: &Instance,
    table: &SymbolTable,
    vars: &VarTable,
    atoms: &[Atom],
    constraints: &MatchConstraints,
    first_only: bool,
) -> Vec<Assignment> {
    let mut out = Vec::new();
    visit_assignments(inst, table, vars, atoms, constraints, |view| {
        out.push(view.materialize());
        if first_only {
            VisitOutcome::Stop
        } else {
            VisitOutcome::Continue
        }
    });
    out
}

pub(crate) enum VisitOutcome {
    Continue,
    Stop,
}

/// A complete match exposed to the visitor without materializing an
/// [`Assignment`]; `materialize` clones only when the caller keeps it.
pub(crate) struct AssignmentView<'a, 'b> {
    pub image: &'b [&'a FactKey],
    pub entity_vars: &'b BTreeMap<VarId, ClassId>,
    pub set_vars: &'b BTreeMap<Occurrence, BTreeSet<ValueRef>>,
    pub value_consts: &'b BTreeMap<ValueId, BTreeSet<ValueRef>>,
    pub intersections: &'b BTreeMap<VarId, BTreeSet<ValueRef>>,
}

impl<'a, 'b> AssignmentView<'a, 'b> {
    pub fn materialize(&self) -> Assignment {
        Assignment {
            image: self.image.iter().map(|k| (*k).clone()).collect(),
            entity_vars: self.entity_vars.clone(),
            set_vars: self.set_vars.clone(),
            value_consts: self.value_consts.clone(),
            intersections: self.intersections.clone(),
        }
    }
}

/// Backtracking enumeration with a visitor, so callers that discard most
/// matches (satisfaction checks, trigger search on large instances) pay no
/// allocation for them.
pub(crate) fn visit_assignments<'a, F>(
    inst: &'a Instance,
    _table: &SymbolTable,
    _vars: &VarTable,
    atoms: &'a [Atom],
    constraints: &'a MatchConstraints,
    visit: F,
) where
    F: FnMut(&AssignmentView<'a, '_>) -> VisitOutcome,
{
    // Candidate facts per atom, in canonical order.
    let candidates: Vec<Vec<(&FactKey, &crate::instance::Fact)>> = atoms
        .iter()
        .map(|atom| inst.facts().filter(|(_, f)| f.pred == atom.pred).collect())
        .collect();
    let mut state = Search {
        inst,
        atoms,
        candidates,
        constraints,
        image: Vec::new(),
        entity_vars: BTreeMap::new(),
        set_vars: BTreeMap::new(),
        value_consts: BTreeMap::new(),
        intersections: BTreeMap::new(),
        visit,
    };
    state.descend(0);
}

struct Search<'a, F> {
    inst: &'a Instance,
    atoms: &'a [Atom],
    candidates: Vec<Vec<(&'a FactKey, &'a crate::instance::Fact)>>,
    constraints: &'a MatchConstraints,
    image: Vec<&'a FactKey>,
    entity_vars: BTreeMap<VarId, ClassId>,
    set_vars: BTreeMap<Occurrence, BTreeSet<ValueRef>>,
    value_consts: BTreeMap<ValueId, BTreeSet<ValueRef>>,
    intersections: BTreeMap<VarId, BTreeSet<ValueRef>>,
    visit: F,
}

impl<'a, F> Search<'a, F>
where
    F: FnMut(&AssignmentView<'a, '_>) -> VisitOutcome,
{
    /// Returns true when the search should stop.
    fn descend(&mut self, atom_idx: usize) -> bool {
        if atom_idx == self.atoms.len() {
            let view = AssignmentView {
                image: &self.image,
                entity_vars: &self.entity_vars,
                set_vars: &self.set_vars,
                value_consts: &self.value_consts,
                intersections: &self.intersections,
            };
            return matches!((self.visit)(&view), VisitOutcome::Stop);
        }
        let atom = &self.atoms[atom_idx];
        for ci in 0..self.candidates[atom_idx].len() {
            let (key, fact) = self.candidates[atom_idx][ci];
            // Tentative bindings for this atom; undone on backtrack.
            let mut bound_entities: Vec<VarId> = Vec::new();
            let mut bound_consts: Vec<ValueId> = Vec::new();
            let mut bound_occurrences: Vec<Occurrence> = Vec::new();
            let mut saved_intersections: Vec<(VarId, Option<BTreeSet<ValueRef>>)> = Vec::new();
            let mut ok = true;
            for (pi, term) in atom.terms.iter().enumerate() {
                let cell = &fact.cells[pi];
                match (term, cell) {
                    (Term::Var(v), Cell::Class(c)) => {
                        if let Some(pinned) = self.constraints.pinned_entities.get(v) {
                            if pinned != c {
                                ok = false;
                                break;
                            }
                        }
                        match self.entity_vars.get(v) {
                            Some(prev) if prev != c => {
                                ok = false;
                                break;
                            }
                            Some(_) => {}
                            None => {
                                self.entity_vars.insert(*v, *c);
                                bound_entities.push(*v);
                            }
                        }
                    }
                    (Term::Var(v), Cell::Values(set)) => {
                        if let Some(required) = self.constraints.required_supersets.get(v) {
                            if !required.is_subset(set) {
                                ok = false;
                                break;
                            }
                        }
                        let occ = (atom_idx, pi);
                        self.set_vars.insert(occ, set.clone());
                        bound_occurrences.push(occ);
                        let prev = self.intersections.get(v).cloned();
                        let inter: BTreeSet<ValueRef> = match &prev {
                            Some(p) => p.intersection(set).copied().collect(),
                            None => set.clone(),
                        };
                        saved_intersections.push((*v, prev));
                        if inter.is_empty() {
                            ok = false;
                            break;
                        }
                        self.intersections.insert(*v, inter);
                    }
                    (Term::Entity(e), Cell::Class(c)) => {
                        if !self.inst.class_members(*c).contains(&EntityRef::Entity(*e)) {
                            ok = false;
                            break;
                        }
                    }
                    (Term::Value(v), Cell::Values(set)) => {
                        if !set.contains(&ValueRef::Value(*v)) {
                            ok = false;
                            break;
                        }
                        match self.value_consts.get(v) {
                            Some(prev) if prev != set => {
                                ok = false;
                                break;
                            }
                            Some(_) => {}
                            None => {
                                self.value_consts.insert(*v, set.clone());
                                bound_consts.push(*v);
                            }
                        }
                    }
                    _ => {
                        ok = false;
                        break;
                    }
                }
            }
            if ok {
                self.image.push(key);
                let stop = self.descend(atom_idx + 1);
                self.image.pop();
                if stop {
                    self.undo(
                        bound_entities,
                        bound_consts,
                        bound_occurrences,
                        saved_intersections,
                    );
                    return true;
                }
            }
            self.undo(
                bound_entities,
                bound_consts,
                bound_occurrences,
                saved_intersections,
            );
        }
        false
    }

    fn undo(
        &mut self,
        bound_entities: Vec<VarId>,
        bound_consts: Vec<ValueId>,
        bound_occurrences: Vec<Occurrence>,
        saved_intersections: Vec<(VarId, Option<BTreeSet<ValueRef>>)>,
    ) {
        for v in bound_entities {
            self.entity_vars.remove(&v);
        }
        for v in bound_consts {
            self.value_consts.remove(&v);
        }
        for occ in bound_occurrences {
            self.set_vars.remove(&occ);
        }
        // Restore intersections in reverse binding order.
        for (v, prev) in saved_intersections.into_iter().rev() {
            match prev {
                Some(p) => {
                    self.intersections.insert(v, p);
                }
                None => {
                    self.intersections.remove(&v);
                }
            }
        }
    }
}

/// Searches a head-compatible tgd-extension of the body assignment `mu`:
/// an assignment of the head whose frontier entity-variables keep their
/// classes and whose frontier value intersections contain the body's.
pub fn check_tgd_extension(
    inst: &Instance,
    table: &SymbolTable,
    rule: &Rule,
    mu: &Assignment,
) -> Option<Assignment> {
    let RuleForm::Tgd { head, .. } = &rule.form else {
        return None;
    };
    let constraints = extension_constraints(rule, mu);
    match_conjunction(inst, table, &rule.vars, head, &constraints, true)
        .into_iter()
        .next()
}

fn extension_constraints(rule: &Rule, mu: &Assignment) -> MatchConstraints {
    extension_constraints_from(rule, &mu.entity_vars, &mu.intersections)
}

/// Head-matching constraints from a body assignment's bindings: frontier
/// entity-variables keep their classes, frontier value intersections must
/// be contained in the head's.
pub(crate) fn extension_constraints_from(
    rule: &Rule,
    entity_vars: &BTreeMap<VarId, ClassId>,
    intersections: &BTreeMap<VarId, BTreeSet<ValueRef>>,
) -> MatchConstraints {
    let mut constraints = MatchConstraints::default();
    for v in rule.frontier() {
        match rule.vars.kind(v) {
            VarKind::Entity => {
                if let Some(c) = entity_vars.get(&v) {
                    constraints.pinned_entities.insert(v, *c);
                }
            }
            VarKind::Value => {
                if let Some(inter) = intersections.get(&v) {
                    constraints.required_supersets.insert(v, inter.clone());
                }
            }
        }
    }
    constraints
}

pub(crate) fn has_head_extension(
    inst: &Instance,
    table: &SymbolTable,
    rule: &Rule,
    entity_vars: &BTreeMap<VarId, ClassId>,
    intersections: &BTreeMap<VarId, BTreeSet<ValueRef>>,
) -> bool {
    let RuleForm::Tgd { head, .. } = &rule.form else {
        return false;
    };
    let constraints = extension_constraints_from(rule, entity_vars, intersections);
    let mut found = false;
    visit_assignments(inst, table, &rule.vars, head, &constraints, |_| {
        found = true;
        VisitOutcome::Stop
    });
    found
}

/// Whether the instance satisfies the rule; on failure also returns a
/// violating body assignment.
pub fn satisfies_rule(
    inst: &Instance,
    table: &SymbolTable,
    rule: &Rule,
) -> (bool, Option<Assignment>) {
    let mut witness = None;
    let body = rule.body();
    let t = tau(&rule.vars, body);
    visit_assignments(
        inst,
        table,
        &rule.vars,
        body,
        &MatchConstraints::default(),
        |view| {
            let ok = match &rule.form {
                RuleForm::Tgd { .. } => {
                    has_head_extension(inst, table, rule, view.entity_vars, view.intersections)
                }
                RuleForm::EntityEgd { y, z, .. } => {
                    view.entity_vars.get(y) == view.entity_vars.get(z)
                }
                RuleForm::ValueEgd { y, z, .. } => occurrence_sets_equal(&t, view.set_vars, *y, *z),
            };
            if ok {
                VisitOutcome::Continue
            } else {
                witness = Some(view.materialize());
                VisitOutcome::Stop
            }
        },
    );
    match witness {
        Some(mu) => (false, Some(mu)),
        None => (true, None),
    }
}

/// A value-egd is satisfied by an assignment when the images of all
/// occurrences of `y` and `z` are one and the same set.
fn occurrence_sets_equal(
    t: &TauConjunction<'_>,
    set_vars: &BTreeMap<Occurrence, BTreeSet<ValueRef>>,
    y: VarId,
    z: VarId,
) -> bool {
    let mut sets = Vec::new();
    for v in [y, z] {
        for occ in t.set_vars.get(&v).into_iter().flatten() {
            sets.push(&set_vars[occ]);
        }
    }
    sets.windows(2).all(|w| w[0] == w[1])
}

/// Whether the instance satisfies every ground atom of the database: each
/// atom must have a fact whose cells contain the constants componentwise.
/// On failure reports the first missing atom.
pub fn satisfies_database<'a>(
    inst: &Instance,
    _table: &SymbolTable,
    database: &'a [GroundAtom],
) -> (bool, Option<&'a GroundAtom>) {
    for atom in database {
        let covered = inst.facts().any(|(_, fact)| {
            fact.pred == atom.pred
                && atom
                    .args
                    .iter()
                    .zip(&fact.cells)
                    .all(|(arg, cell)| match (arg, cell) {
                        (GroundArg::Entity(e), Cell::Class(c)) => {
                            inst.class_members(*c).contains(&EntityRef::Entity(*e))
                        }
                        (GroundArg::Value(v), Cell::Values(set)) => {
                            set.contains(&ValueRef::Value(*v))
                        }
                        _ => false,
                    })
        });
        if !covered {
            return (false, Some(atom));
        }
    }
    (true, None)
}

/// A homomorphism between instances: identity on entities and values, a
/// mapping on nulls such that every fact of the source maps under some fact
/// of the target.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Homomorphism {
    pub entity_nulls: BTreeMap<u32, EntityRef>,
    pub value_nulls: BTreeMap<u32, ValueRef>,
}

impl Homomorphism {
    pub fn apply_entity(&self, e: EntityRef) -> EntityRef {
        match e {
            EntityRef::Null(k) => *self.entity_nulls.get(&k).unwrap_or(&e),
            _ => e,
        }
    }

    pub fn apply_value(&self, v: ValueRef) -> ValueRef {
        match v {
            ValueRef::Null(k) => *self.value_nulls.get(&k).unwrap_or(&v),
            _ => v,
        }
    }

    /// Composition `other ∘ self` (apply `self` first).
    pub fn then(&self, other: &Homomorphism) -> Homomorphism {
        let mut out = Homomorphism::default();
        for (k, e) in &self.entity_nulls {
            out.entity_nulls.insert(*k, other.apply_entity(*e));
        }
        for (k, v) in &self.value_nulls {
            out.value_nulls.insert(*k, other.apply_value(*v));
        }
        out
    }

    pub fn apply_tuple(&self, tuple: &[TupleCell]) -> Vec<TupleCell> {
        tuple
            .iter()
            .map(|cell| match cell {
                TupleCell::Entities(s) => {
                    TupleCell::Entities(s.iter().map(|e| self.apply_entity(*e)).collect())
                }
                TupleCell::Values(s) => {
                    TupleCell::Values(s.iter().map(|v| self.apply_value(*v)).collect())
                }
            })
            .collect()
    }
}

/// Searches a homomorphism from `i1` into `i2` by backtracking over the
/// images of `i1`'s nulls; deterministic search order, null candidates
/// ordered by the size of the class or value set they come from, largest
/// first.
pub fn find_homomorphism(
    i1: &Instance,
    i2: &Instance,
    table: &SymbolTable,
) -> Option<Homomorphism> {
    let (under_e1, under_v1) = i1.underlying_domain();
    let (under_e2, under_v2) = i2.underlying_domain();
    // Entities and values are fixed pointwise, so they must already occur in
    // the target.
    for e in &under_e1 {
        if matches!(e, EntityRef::Entity(_)) && !under_e2.contains(e) {
            return None;
        }
    }
    for v in &under_v1 {
        if matches!(v, ValueRef::Value(_)) && !under_v2.contains(v) {
            return None;
        }
    }
    let entity_null_vars: Vec<u32> = under_e1
        .iter()
        .filter_map(|e| match e {
            EntityRef::Null(k) => Some(*k),
            _ => None,
        })
        .collect();
    let value_null_vars: Vec<u32> = under_v1
        .iter()
        .filter_map(|v| match v {
            ValueRef::Null(k) => Some(*k),
            _ => None,
        })
        .collect();

    // Candidates ordered by the size of the containing class / the number of
    // active sets containing the value, descending; ties broken canonically.
    let mut entity_candidates: Vec<EntityRef> = under_e2.iter().copied().collect();
    entity_candidates.sort_by_key(|e| {
        let size = i2.class_of(*e).map_or(0, |c| i2.class_members(c).len());
        (usize::MAX - size, table.entity_key(*e))
    });
    let (_, value_sets2) = i2.active_domain();
    let mut value_candidates: Vec<ValueRef> = under_v2.iter().copied().collect();
    value_candidates.sort_by_key(|v| {
        let freq = value_sets2.iter().filter(|s| s.contains(v)).count();
        (usize::MAX - freq, table.value_key(*v))
    });

    let facts1: Vec<&crate::instance::Fact> = i1.facts().map(|(_, f)| f).collect();
    let mut search = HomSearch {
        i1,
        i2,
        entity_null_vars,
        value_null_vars,
        entity_candidates,
        value_candidates,
        facts1,
        hom: Homomorphism::default(),
    };
    if search.descend(0) {
        Some(search.hom)
    } else {
        None
    }
}

struct HomSearch<'a> {
    i1: &'a Instance,
    i2: &'a Instance,
    entity_null_vars: Vec<u32>,
    value_null_vars: Vec<u32>,
    entity_candidates: Vec<EntityRef>,
    value_candidates: Vec<ValueRef>,
    facts1: Vec<&'a crate::instance::Fact>,
    hom: Homomorphism,
}

impl<'a> HomSearch<'a> {
    fn descend(&mut self, depth: usize) -> bool {
        let ne = self.entity_null_vars.len();
        if depth == ne + self.value_null_vars.len() {
            return self.all_facts_covered();
        }
        if depth < ne {
            let k = self.entity_null_vars[depth];
            for i in 0..self.entity_candidates.len() {
                let cand = self.entity_candidates[i];
                self.hom.entity_nulls.insert(k, cand);
                if self.partial_facts_ok() && self.descend(depth + 1) {
                    return true;
                }
                self.hom.entity_nulls.remove(&k);
            }
        } else {
            let k = self.value_null_vars[depth - ne];
            for i in 0..self.value_candidates.len() {
                let cand = self.value_candidates[i];
                self.hom.value_nulls.insert(k, cand);
                if self.partial_facts_ok() && self.descend(depth + 1) {
                    return true;
                }
                self.hom.value_nulls.remove(&k);
            }
        }
        false
    }

    fn fact_fully_mapped(&self, fact: &crate::instance::Fact) -> bool {
        fact.cells.iter().all(|cell| match cell {
            Cell::Class(c) => self.i1.class_members(*c).iter().all(|e| match e {
                EntityRef::Null(k) => self.hom.entity_nulls.contains_key(k),
                _ => true,
            }),
            Cell::Values(set) => set.iter().all(|v| match v {
                ValueRef::Null(k) => self.hom.value_nulls.contains_key(k),
                _ => true,
            }),
        })
    }

    /// Prunes: every source fact whose nulls are all assigned must already
    /// be covered.
    fn partial_facts_ok(&self) -> bool {
        self.facts1
            .iter()
            .filter(|f| self.fact_fully_mapped(f))
            .all(|f| self.fact_covered(f))
    }

    fn all_facts_covered(&self) -> bool {
        self.facts1.iter().all(|f| self.fact_covered(f))
    }

    fn fact_covered(&self, fact: &crate::instance::Fact) -> bool {
        let mapped: Vec<TupleCell> = fact
            .cells
            .iter()
            .map(|cell| match cell {
                Cell::Class(c) => TupleCell::Entities(
                    self.i1
                        .class_members(*c)
                        .iter()
                        .map(|e| self.hom.apply_entity(*e))
                        .collect(),
                ),
                Cell::Values(set) => {
                    TupleCell::Values(set.iter().map(|v| self.hom.apply_value(*v)).collect())
                }
            })
            .collect();
        self.i2.facts().any(|(_, g)| {
            g.pred == fact.pred
                && mapped
                    .iter()
                    .zip(&g.cells)
                    .all(|(m, cell)| match (m, cell) {
                        (TupleCell::Entities(s), Cell::Class(c)) => {
                            s.is_subset(self.i2.class_members(*c))
                        }
                        (TupleCell::Values(s), Cell::Values(t)) => s.is_subset(t),
                        _ => false,
                    })
        })
    }
}

/// Verifies that `hom` really is a homomorphism from `i1` to `i2`.
pub fn verify_homomorphism(i1: &Instance, i2: &Instance, hom: &Homomorphism) -> bool {
    let (under_e1, under_v1) = i1.underlying_domain();
    let (under_e2, under_v2) = i2.underlying_domain();
    for e in &under_e1 {
        match e {
            EntityRef::Entity(_) => {
                if !under_e2.contains(e) {
                    return false;
                }
            }
            EntityRef::Null(k) => match hom.entity_nulls.get(k) {
                Some(img) if under_e2.contains(img) => {}
                _ => return false,
            },
        }
    }
    for v in &under_v1 {
        match v {
            ValueRef::Value(_) => {
                if !under_v2.contains(v) {
                    return false;
                }
            }
            ValueRef::Null(k) => match hom.value_nulls.get(k) {
                Some(img) if under_v2.contains(img) => {}
                _ => return false,
            },
        }
    }
    let search = HomSearch {
        i1,
        i2,
        entity_null_vars: Vec::new(),
        value_null_vars: Vec::new(),
        entity_candidates: Vec::new(),
        value_candidates: Vec::new(),
        facts1: i1.facts().map(|(_, f)| f).collect(),
        hom: hom.clone(),
    };
    search.all_facts_covered()
}

/// Property check behind query preservation under homomorphism: for a
/// verified homomorphism `h : i1 → i2`, every answer tuple over `i1` maps
/// under some answer tuple over `i2`.
pub fn query_preservation_check(
    i1: &Instance,
    i2: &Instance,
    table: &SymbolTable,
    hom: &Homomorphism,
    q: &crate::model::Query,
) -> bool {
    let a1 = crate::query::evaluate(q, i1, table);
    let a2 = crate::query::evaluate(q, i2, table);
    a1.tuples.iter().all(|t| {
        let ht = hom.apply_tuple(t);
        a2.tuples.iter().any(|u| {
            matches!(
                crate::instance::compare_tuples(&ht, u),
                Ok(crate::instance::Dominance::Equal)
                    | Ok(crate::instance::Dominance::StrictlyDominatedBy)
            )
        })
    })
}

/// Image facts of an assignment grouped per distinct fact, with the
/// positions at which the given variables occur; this is what a value-egd
/// step rewrites.
pub fn occurrence_rewrites(
    vars: &VarTable,
    body: &[Atom],
    mu: &Assignment,
    targets: &[VarId],
) -> Vec<(FactKey, BTreeSet<usize>)> {
    let t = tau(vars, body);
    let mut per_fact: BTreeMap<FactKey, BTreeSet<usize>> = BTreeMap::new();
    for v in targets {
        for (ai, pi) in t.set_vars.get(v).into_iter().flatten() {
            per_fact
                .entry(mu.image[*ai].clone())
                .or_default()
                .insert(*pi);
        }
    }
    per_fact.into_iter().collect()
}

/// The union of the images of all occurrences of the given variables.
pub fn occurrence_union(
    vars: &VarTable,
    body: &[Atom],
    mu: &Assignment,
    targets: &[VarId],
) -> BTreeSet<ValueRef> {
    let t = tau(vars, body);
    let mut union = BTreeSet::new();
    for v in targets {
        for occ in t.set_vars.get(v).into_iter().flatten() {
            union.extend(mu.set_vars[occ].iter().copied());
        }
    }
    union
}

/// True when no tgd of the KB has existential variables, which guarantees
/// every chase sequence is finite.
pub fn all_tgds_full(kb: &KnowledgeBase) -> bool {
    kb.rules.iter().all(|r| match &r.form {
        RuleForm::Tgd { existentials, .. } => existentials.is_empty(),
        _ => true,
    })
}
