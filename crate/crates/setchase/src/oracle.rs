//! Independent brute-force checkers and random-KB generation.
//!
//! The oracle validates the engine against the definitions rather than
//! against its own code paths: assignments are re-enumerated by exhaustive
//! search over all atom-to-fact image maps, and solution checks recompute
//! rule satisfaction from those naive assignments only. Oracle code shares
//! the data model with the engine but none of the matching or chase
//! implementations.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::builtins::{materialize_builtin_facts, BuiltinRegistry};
use crate::chase::{run_chase, ChaseSequence, ChaseStatus, Strategy};
use crate::instance::{FactKey, Instance, TupleCell};
use crate::model::{
    ArgType, Atom, EntityRef, GroundArg, GroundAtom, KnowledgeBase, PredId, PredKind,
    PredicateSignature, Query, Rule, RuleForm, SymbolTable, Term, Value, ValueId, ValueRef, VarId,
    VarKind, VarTable,
};
use crate::query::{AnswerSet, AnswerStage};
use crate::{Error, Result};

/// Bounds for random KBs, small enough that the naive checks stay feasible.
#[derive(Clone, Debug)]
pub struct KbGeneratorConfig {
    pub max_predicates: usize,
    pub max_arity: usize,
    pub max_rules: usize,
    pub max_facts: usize,
    pub max_values: usize,
    pub max_entities: usize,
    pub max_body_atoms: usize,
    pub max_queries: usize,
    pub seed: u64,
    /// Relative weights of the generated rule kinds.
    pub tgd_weight: u32,
    pub eegd_weight: u32,
    pub vegd_weight: u32,
    /// Chance (percent) that a generated tgd has existential head variables.
    pub existential_percent: u32,
    /// Hard cap on instances fed to the naive checkers.
    pub naive_fact_bound: usize,
}

impl Default for KbGeneratorConfig {
    fn default() -> Self {
        KbGeneratorConfig {
            max_predicates: 3,
            max_arity: 3,
            max_rules: 4,
            max_facts: 8,
            max_values: 4,
            max_entities: 4,
            max_body_atoms: 3,
            max_queries: 2,
            seed: 0,
            tgd_weight: 1,
            eegd_weight: 1,
            vegd_weight: 1,
            existential_percent: 50,
            naive_fact_bound: 64,
        }
    }
}

impl KbGeneratorConfig {
    pub fn with_seed(seed: u64) -> Self {
        KbGeneratorConfig {
            seed,
            ..Default::default()
        }
    }
}

/// A comparable projection of an assignment, common to the engine and the
/// naive enumerator: per-atom image, entity-variable classes as member
/// sets, set-variable images by occurrence, and value-constant images.
pub type Fingerprint = (
    Vec<FactKey>,
    BTreeMap<VarId, BTreeSet<EntityRef>>,
    BTreeMap<(usize, usize), BTreeSet<ValueRef>>,
    BTreeMap<ValueId, BTreeSet<ValueRef>>,
);

/// Projects an engine assignment to a [`Fingerprint`].
pub fn engine_fingerprint(inst: &Instance, mu: &crate::matching::Assignment) -> Fingerprint {
    (
        mu.image.clone(),
        mu.entity_vars
            .iter()
            .map(|(v, c)| (*v, inst.class_members(*c).clone()))
            .collect(),
        mu.set_vars.clone(),
        mu.value_consts.clone(),
    )
}

/// A fact flattened to plain member sets, the form the naive checks work
/// on.
#[derive(Clone, Debug)]
struct ResolvedFact {
    key: FactKey,
    pred: PredId,
    cells: Vec<TupleCell>,
}

fn resolve_facts(inst: &Instance) -> Vec<ResolvedFact> {
    inst.facts()
        .map(|(key, fact)| ResolvedFact {
            key: key.clone(),
            pred: fact.pred,
            cells: fact
                .cells
                .iter()
                .map(|cell| match cell {
                    crate::instance::Cell::Class(c) => {
                        TupleCell::Entities(inst.class_members(*c).clone())
                    }
                    crate::instance::Cell::Values(s) => TupleCell::Values(s.clone()),
                })
                .collect(),
        })
        .collect()
}

/// A naive assignment: the image map plus the bindings read directly off
/// the image facts.
#[derive(Clone, Debug)]
pub struct NaiveAssignment {
    pub fingerprint: Fingerprint,
    image_indices: Vec<usize>,
}

/// Exhaustively enumerates all assignments of the conjunction by trying
/// every atom-to-fact image map and filtering by the assignment conditions.
/// Errors when the instance exceeds `fact_bound`.
pub fn naive_assignments(
    inst: &Instance,
    table: &SymbolTable,
    vars: &VarTable,
    atoms: &[Atom],
    fact_bound: usize,
) -> Result<Vec<NaiveAssignment>> {
    if inst.len() > fact_bound {
        return Err(Error::Oracle(format!(
            "instance has {} facts, naive bound is {fact_bound}",
            inst.len()
        )));
    }
    let facts = resolve_facts(inst);
    let _ = table;
    let mut out = Vec::new();
    let mut image = vec![0usize; atoms.len()];
    enumerate_images(&facts, vars, atoms, &mut image, 0, &mut out);
    Ok(out)
}

fn enumerate_images(
    facts: &[ResolvedFact],
    vars: &VarTable,
    atoms: &[Atom],
    image: &mut Vec<usize>,
    pos: usize,
    out: &mut Vec<NaiveAssignment>,
) {
    if pos == atoms.len() {
        if let Some(a) = check_image(facts, vars, atoms, image) {
            out.push(a);
        }
        return;
    }
    for (fi, fact) in facts.iter().enumerate() {
        if fact.pred == atoms[pos].pred {
            image[pos] = fi;
            enumerate_images(facts, vars, atoms, image, pos + 1, out);
        }
    }
}

/// Checks the five assignment conditions against a complete image map.
fn check_image(
    facts: &[ResolvedFact],
    vars: &VarTable,
    atoms: &[Atom],
    image: &[usize],
) -> Option<NaiveAssignment> {
    let mut entity_vars: BTreeMap<VarId, BTreeSet<EntityRef>> = BTreeMap::new();
    let mut set_vars: BTreeMap<(usize, usize), BTreeSet<ValueRef>> = BTreeMap::new();
    let mut value_consts: BTreeMap<ValueId, BTreeSet<ValueRef>> = BTreeMap::new();
    let mut per_var_sets: BTreeMap<VarId, Vec<BTreeSet<ValueRef>>> = BTreeMap::new();
    for (ai, atom) in atoms.iter().enumerate() {
        let fact = &facts[image[ai]];
        if fact.cells.len() != atom.terms.len() {
            return None;
        }
        for (pi, term) in atom.terms.iter().enumerate() {
            match (term, &fact.cells[pi]) {
                (Term::Var(v), TupleCell::Entities(members)) => {
                    if vars.kind(*v) != VarKind::Entity {
                        return None;
                    }
                    // Every occurrence of an entity-variable must be the same
                    // class; classes are equal iff their member sets are.
                    match entity_vars.get(v) {
                        Some(prev) if prev != members => return None,
                        Some(_) => {}
                        None => {
                            entity_vars.insert(*v, members.clone());
                        }
                    }
                }
                (Term::Var(v), TupleCell::Values(set)) => {
                    if vars.kind(*v) != VarKind::Value {
                        return None;
                    }
                    set_vars.insert((ai, pi), set.clone());
                    per_var_sets.entry(*v).or_default().push(set.clone());
                }
                (Term::Entity(e), TupleCell::Entities(members)) => {
                    if !members.contains(&EntityRef::Entity(*e)) {
                        return None;
                    }
                }
                (Term::Value(v), TupleCell::Values(set)) => {
                    if !set.contains(&ValueRef::Value(*v)) {
                        return None;
                    }
                    // One image set per constant, shared by all occurrences.
                    match value_consts.get(v) {
                        Some(prev) if prev != set => return None,
                        Some(_) => {}
                        None => {
                            value_consts.insert(*v, set.clone());
                        }
                    }
                }
                _ => return None,
            }
        }
    }
    // Non-empty intersection across the occurrences of each value-variable.
    for sets in per_var_sets.values() {
        let mut iter = sets.iter();
        let mut inter = iter.next().cloned().unwrap_or_default();
        for s in iter {
            inter = inter.intersection(s).copied().collect();
        }
        if inter.is_empty() {
            return None;
        }
    }
    let keys: Vec<FactKey> = image.iter().map(|fi| facts[*fi].key.clone()).collect();
    Some(NaiveAssignment {
        fingerprint: (keys, entity_vars, set_vars, value_consts),
        image_indices: image.to_vec(),
    })
}

fn naive_intersection(
    vars: &VarTable,
    atoms: &[Atom],
    a: &NaiveAssignment,
    v: VarId,
) -> BTreeSet<ValueRef> {
    let mut inter: Option<BTreeSet<ValueRef>> = None;
    for (ai, atom) in atoms.iter().enumerate() {
        for (pi, term) in atom.terms.iter().enumerate() {
            if *term == Term::Var(v) && vars.kind(v) == VarKind::Value {
                let set = &a.fingerprint.2[&(ai, pi)];
                inter = Some(match inter {
                    None => set.clone(),
                    Some(acc) => acc.intersection(set).copied().collect(),
                });
            }
        }
    }
    inter.unwrap_or_default()
}

/// Recomputes whether `inst` is a solution for the KB, from the definitions
/// and naive enumeration only.
pub fn naive_is_solution(
    kb: &KnowledgeBase,
    registry: &BuiltinRegistry,
    inst: &Instance,
    fact_bound: usize,
) -> Result<bool> {
    let facts = resolve_facts(inst);
    if facts.len() > fact_bound {
        return Err(Error::Oracle(format!(
            "instance has {} facts, naive bound is {fact_bound}",
            facts.len()
        )));
    }
    // Database satisfaction, including the derived built-in atoms.
    let mut database: Vec<GroundAtom> = kb.database.clone();
    for (pred, args) in materialize_builtin_facts(kb, registry)? {
        database.push(GroundAtom {
            pred,
            args: args.into_iter().map(GroundArg::Value).collect(),
        });
    }
    for atom in &database {
        let covered = facts.iter().any(|fact| {
            fact.pred == atom.pred
                && atom
                    .args
                    .iter()
                    .zip(&fact.cells)
                    .all(|(arg, cell)| match (arg, cell) {
                        (GroundArg::Entity(e), TupleCell::Entities(m)) => {
                            m.contains(&EntityRef::Entity(*e))
                        }
                        (GroundArg::Value(v), TupleCell::Values(s)) => {
                            s.contains(&ValueRef::Value(*v))
                        }
                        _ => false,
                    })
        });
        if !covered {
            return Ok(false);
        }
    }
    // Rule satisfaction.
    for rule in &kb.rules {
        let body_assignments =
            naive_assignments(inst, &kb.table, &rule.vars, rule.body(), fact_bound)?;
        // Head assignments do not depend on the body assignment, so for a
        // tgd they are enumerated once and filtered per body assignment.
        let head_assignments = match &rule.form {
            RuleForm::Tgd { head, .. } => Some(naive_assignments(
                inst, &kb.table, &rule.vars, head, fact_bound,
            )?),
            _ => None,
        };
        for mu in &body_assignments {
            let ok = match &rule.form {
                RuleForm::Tgd { head, body, .. } => naive_has_extension(
                    rule,
                    body,
                    head,
                    mu,
                    head_assignments.as_deref().unwrap_or(&[]),
                ),
                RuleForm::EntityEgd { y, z, .. } => {
                    mu.fingerprint.1.get(y) == mu.fingerprint.1.get(z)
                }
                RuleForm::ValueEgd { y, z, body } => {
                    let mut sets: Vec<&BTreeSet<ValueRef>> = Vec::new();
                    for v in [y, z] {
                        for (ai, atom) in body.iter().enumerate() {
                            for (pi, term) in atom.terms.iter().enumerate() {
                                if *term == Term::Var(*v) {
                                    sets.push(&mu.fingerprint.2[&(ai, pi)]);
                                }
                            }
                        }
                    }
                    sets.windows(2).all(|w| w[0] == w[1])
                }
            };
            if !ok {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

fn naive_has_extension(
    rule: &Rule,
    body: &[Atom],
    head: &[Atom],
    mu: &NaiveAssignment,
    head_assignments: &[NaiveAssignment],
) -> bool {
    let frontier = rule.frontier();
    'candidates: for nu in head_assignments {
        for v in &frontier {
            match rule.vars.kind(*v) {
                VarKind::Entity => {
                    if mu.fingerprint.1.get(v) != nu.fingerprint.1.get(v) {
                        continue 'candidates;
                    }
                }
                VarKind::Value => {
                    let body_inter = naive_intersection(&rule.vars, body, mu, *v);
                    let head_inter = naive_intersection(&rule.vars, head, nu, *v);
                    if !body_inter.is_subset(&head_inter) {
                        continue 'candidates;
                    }
                }
            }
        }
        return true;
    }
    false
}

/// Evaluates a query with the naive enumerator; used by the corpus checks
/// so certain answers are validated by an independent path.
pub fn naive_evaluate(
    q: &Query,
    inst: &Instance,
    table: &SymbolTable,
    fact_bound: usize,
) -> Result<AnswerSet> {
    let assignments = naive_assignments(inst, table, &q.vars, &q.body, fact_bound)?;
    let mut tuples = BTreeSet::new();
    for mu in &assignments {
        let mut tuple = Vec::with_capacity(q.free.len());
        for v in &q.free {
            match q.vars.kind(*v) {
                VarKind::Entity => {
                    tuple.push(TupleCell::Entities(mu.fingerprint.1[v].clone()));
                }
                VarKind::Value => {
                    tuple.push(TupleCell::Values(naive_intersection(
                        &q.vars, &q.body, mu, *v,
                    )));
                }
            }
        }
        tuples.insert(tuple);
        let _ = &mu.image_indices;
    }
    Ok(AnswerSet {
        stage: AnswerStage::Raw,
        tuples,
    })
}

/// Chase results under `n_orders` distinct fair orders plus hand-written
/// extra solutions, all validated by [`naive_is_solution`]. The oracle's
/// stand-in for "every solution" at desk scale.
pub fn solution_corpus(
    kb: &KnowledgeBase,
    registry: &BuiltinRegistry,
    n_orders: usize,
    extras: Vec<(SymbolTable, Instance)>,
    max_steps: usize,
    fact_bound: usize,
) -> Result<Vec<(SymbolTable, Instance)>> {
    let mut corpus = Vec::new();
    for seed in 0..n_orders as u64 {
        let seq = run_chase(kb, registry, &Strategy::Fair { seed }, max_steps)?;
        if seq.status != ChaseStatus::Terminated {
            return Err(Error::Oracle(format!(
                "fair order {seed} did not terminate within {max_steps} steps"
            )));
        }
        let kb_view = KnowledgeBase {
            table: seq.table.clone(),
            rules: kb.rules.clone(),
            database: kb.database.clone(),
        };
        if !naive_is_solution(&kb_view, registry, &seq.result, fact_bound)? {
            return Err(Error::Oracle(format!(
                "chase result under fair order {seed} fails the naive solution check"
            )));
        }
        corpus.push((seq.table, seq.result));
    }
    for (i, (table, inst)) in extras.into_iter().enumerate() {
        let kb_view = KnowledgeBase {
            table: table.clone(),
            rules: kb.rules.clone(),
            database: kb.database.clone(),
        };
        if !naive_is_solution(&kb_view, registry, &inst, fact_bound)? {
            return Err(Error::Oracle(format!(
                "extra solution {i} fails the naive solution check"
            )));
        }
        corpus.push((table, inst));
    }
    Ok(corpus)
}

/// Outcome of checking a certain-answer set against a solution corpus.
#[derive(Clone, Debug, Default)]
pub struct CorpusReport {
    /// (tuple, corpus index): the tuple is not dominated by any answer of
    /// that solution, so condition (1) fails.
    pub condition1_failures: Vec<(Vec<TupleCell>, usize)>,
    /// Null-free tuples that strictly dominate an answer yet satisfy
    /// condition (1) over the whole corpus, so maximality fails.
    pub maximality_failures: Vec<Vec<TupleCell>>,
}

impl CorpusReport {
    pub fn passed(&self) -> bool {
        self.condition1_failures.is_empty() && self.maximality_failures.is_empty()
    }
}

/// Verifies a reduced answer set against a corpus of solutions: condition
/// (1) of certain answers for every corpus solution, and maximality
/// relative to the corpus (a necessary check, since all solutions can never
/// be enumerated).
pub fn check_certain_against_corpus(
    q: &Query,
    answers: &AnswerSet,
    corpus: &[(SymbolTable, Instance)],
    fact_bound: usize,
) -> Result<CorpusReport> {
    let mut report = CorpusReport::default();
    let mut corpus_answers: Vec<BTreeSet<Vec<TupleCell>>> = Vec::new();
    for (table, inst) in corpus {
        corpus_answers.push(naive_evaluate(q, inst, table, fact_bound)?.tuples);
    }
    for tuple in &answers.tuples {
        for (ci, tuples) in corpus_answers.iter().enumerate() {
            let dominated = tuples.iter().any(|u| {
                matches!(
                    crate::instance::compare_tuples(tuple, u),
                    Ok(crate::instance::Dominance::Equal)
                        | Ok(crate::instance::Dominance::StrictlyDominatedBy)
                )
            });
            if !dominated {
                report.condition1_failures.push((tuple.clone(), ci));
            }
        }
    }
    // Candidate larger tuples: null-free projections of corpus answers.
    let mut candidates: BTreeSet<Vec<TupleCell>> = BTreeSet::new();
    for tuples in &corpus_answers {
        let raw = AnswerSet {
            stage: AnswerStage::Raw,
            tuples: tuples.clone(),
        };
        candidates.extend(crate::query::drop_nulls(&raw).tuples);
    }
    for cand in &candidates {
        let strictly_dominates_an_answer = answers.tuples.iter().any(|t| {
            matches!(
                crate::instance::compare_tuples(t, cand),
                Ok(crate::instance::Dominance::StrictlyDominatedBy)
            )
        });
        if !strictly_dominates_an_answer {
            continue;
        }
        let satisfies_cond1 = corpus_answers.iter().all(|tuples| {
            tuples.iter().any(|u| {
                matches!(
                    crate::instance::compare_tuples(cand, u),
                    Ok(crate::instance::Dominance::Equal)
                        | Ok(crate::instance::Dominance::StrictlyDominatedBy)
                )
            })
        });
        if satisfies_cond1 {
            report.maximality_failures.push(cand.clone());
        }
    }
    Ok(report)
}

/// Deterministically generates a well-typed random KB (and queries)
/// honoring all rule invariants.
pub fn generate_kb(cfg: &KbGeneratorConfig) -> (KnowledgeBase, Vec<Query>) {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut kb = KnowledgeBase::default();

    // Signature.
    let n_preds = rng.gen_range(1..=cfg.max_predicates.max(1));
    for i in 0..n_preds {
        let arity = rng.gen_range(1..=cfg.max_arity.max(1));
        let types: Vec<ArgType> = (0..arity)
            .map(|_| {
                if rng.gen_bool(0.5) {
                    ArgType::Entity
                } else {
                    ArgType::Value
                }
            })
            .collect();
        kb.table
            .declare_pred(PredicateSignature {
                name: format!("P{}", i + 1),
                types,
                kind: PredKind::Kb,
            })
            .expect("generated predicate names are unique");
    }
    let preds: Vec<PredId> = kb.table.preds().map(|(id, _)| id).collect();

    // Constant pools.
    let entities: Vec<_> = (0..cfg.max_entities.max(1))
        .map(|i| kb.table.intern_entity(&format!("E{}", i + 1)))
        .collect();
    let values: Vec<ValueId> = (0..cfg.max_values.max(1))
        .map(|i| {
            if i % 2 == 0 {
                kb.table
                    .intern_value(Value::Num(crate::decimal::Decimal::from_int(i as i64)))
            } else {
                let name = (b'a' + (i % 26) as u8) as char;
                kb.table.intern_value(Value::Str(format!("v{name}")))
            }
        })
        .collect();

    // Database.
    let n_facts = rng.gen_range(1..=cfg.max_facts.max(1));
    for _ in 0..n_facts {
        let pred = *preds.choose(&mut rng).unwrap();
        let sig = kb.table.pred(pred).clone();
        let args = sig
            .types
            .iter()
            .map(|t| match t {
                ArgType::Entity => GroundArg::Entity(*entities.choose(&mut rng).unwrap()),
                ArgType::Value => GroundArg::Value(*values.choose(&mut rng).unwrap()),
            })
            .collect();
        kb.database.push(GroundAtom { pred, args });
    }

    // Rules.
    let n_rules = rng.gen_range(0..=cfg.max_rules);
    let total_weight = cfg.tgd_weight + cfg.eegd_weight + cfg.vegd_weight;
    let mut rule_no = 0;
    for _ in 0..n_rules {
        let pick = if total_weight == 0 {
            0
        } else {
            rng.gen_range(0..total_weight)
        };
        let kind = if pick < cfg.tgd_weight {
            GenKind::Tgd
        } else if pick < cfg.tgd_weight + cfg.eegd_weight {
            GenKind::Eegd
        } else {
            GenKind::Vegd
        };
        if let Some(rule) = generate_rule(
            &mut rng, cfg, &kb, &preds, &entities, &values, kind, rule_no,
        ) {
            kb.rules.push(rule);
            rule_no += 1;
        }
    }

    // Queries.
    let queries = (0..cfg.max_queries)
        .filter_map(|qi| generate_query(&mut rng, cfg, &kb, &preds, qi))
        .collect();
    (kb, queries)
}

#[derive(Clone, Copy, PartialEq)]
enum GenKind {
    Tgd,
    Eegd,
    Vegd,
}

struct GenVars {
    vars: VarTable,
    by_name: BTreeMap<String, VarId>,
}

impl GenVars {
    fn new() -> Self {
        GenVars {
            vars: VarTable::default(),
            by_name: BTreeMap::new(),
        }
    }

    fn var(&mut self, name: &str, kind: VarKind) -> VarId {
        if let Some(v) = self.by_name.get(name) {
            return *v;
        }
        let v = VarId(self.vars.len() as u32);
        self.vars.names.push(name.to_string());
        self.vars.kinds.push(kind);
        self.by_name.insert(name.to_string(), v);
        v
    }
}

/// Variable name pools are disjoint per kind, so a generated variable can
/// never be used at both an entity and a value position.
fn gen_atom(
    rng: &mut ChaCha8Rng,
    kb: &KnowledgeBase,
    preds: &[PredId],
    entities: &[crate::model::EntityId],
    values: &[ValueId],
    gv: &mut GenVars,
    allow_constants: bool,
) -> Atom {
    let pred = *preds.choose(rng).unwrap();
    let sig = kb.table.pred(pred).clone();
    let terms = sig
        .types
        .iter()
        .map(|t| match t {
            ArgType::Entity => {
                if allow_constants && rng.gen_bool(0.1) {
                    Term::Entity(*entities.choose(rng).unwrap())
                } else {
                    let name = format!("x{}", rng.gen_range(0..4));
                    Term::Var(gv.var(&name, VarKind::Entity))
                }
            }
            ArgType::Value => {
                if allow_constants && rng.gen_bool(0.1) {
                    Term::Value(*values.choose(rng).unwrap())
                } else {
                    let name = format!("u{}", rng.gen_range(0..4));
                    Term::Var(gv.var(&name, VarKind::Value))
                }
            }
        })
        .collect();
    Atom { pred, terms }
}

#[allow(clippy::too_many_arguments)]
fn generate_rule(
    rng: &mut ChaCha8Rng,
    cfg: &KbGeneratorConfig,
    kb: &KnowledgeBase,
    preds: &[PredId],
    entities: &[crate::model::EntityId],
    values: &[ValueId],
    kind: GenKind,
    rule_no: usize,
) -> Option<Rule> {
    for _attempt in 0..8 {
        let mut gv = GenVars::new();
        let n_atoms = rng.gen_range(1..=cfg.max_body_atoms.max(1));
        let body: Vec<Atom> = (0..n_atoms)
            .map(|_| gen_atom(rng, kb, preds, entities, values, &mut gv, true))
            .collect();
        let body_vars = crate::model::vars_of(&body);
        match kind {
            GenKind::Eegd | GenKind::Vegd => {
                let want = if kind == GenKind::Eegd {
                    VarKind::Entity
                } else {
                    VarKind::Value
                };
                let candidates: Vec<VarId> = body_vars
                    .iter()
                    .copied()
                    .filter(|v| gv.vars.kind(*v) == want)
                    .collect();
                if candidates.len() < 2 {
                    continue;
                }
                let y = candidates[rng.gen_range(0..candidates.len())];
                let z = loop {
                    let z = candidates[rng.gen_range(0..candidates.len())];
                    if z != y {
                        break z;
                    }
                };
                let form = if kind == GenKind::Eegd {
                    RuleForm::EntityEgd { body, y, z }
                } else {
                    RuleForm::ValueEgd { body, y, z }
                };
                return Some(Rule {
                    id: format!("r{}", rule_no + 1),
                    vars: gv.vars,
                    form,
                });
            }
            GenKind::Tgd => {
                let with_existentials = rng.gen_range(0..100) < cfg.existential_percent;
                let n_head = rng.gen_range(1..=2usize);
                let mut existentials: Vec<VarId> = Vec::new();
                let mut head = Vec::new();
                for _ in 0..n_head {
                    let pred = *preds.choose(rng).unwrap();
                    let sig = kb.table.pred(pred).clone();
                    let mut terms = Vec::new();
                    for t in &sig.types {
                        let want = match t {
                            ArgType::Entity => VarKind::Entity,
                            ArgType::Value => VarKind::Value,
                        };
                        let frontier_candidates: Vec<VarId> = body_vars
                            .iter()
                            .copied()
                            .filter(|v| gv.vars.kind(*v) == want)
                            .collect();
                        let use_existential = with_existentials
                            && (frontier_candidates.is_empty() || rng.gen_bool(0.4));
                        if use_existential {
                            let name = format!(
                                "{}{}",
                                if want == VarKind::Entity { "ye" } else { "yv" },
                                existentials.len()
                            );
                            let v = gv.var(&name, want);
                            if !existentials.contains(&v) {
                                existentials.push(v);
                            }
                            terms.push(Term::Var(v));
                        } else if let Some(v) = frontier_candidates.as_slice().choose(rng) {
                            terms.push(Term::Var(*v));
                        } else {
                            // No frontier variable of this kind and
                            // existentials disabled: force one existential.
                            let name = format!(
                                "{}{}",
                                if want == VarKind::Entity { "ye" } else { "yv" },
                                existentials.len()
                            );
                            let v = gv.var(&name, want);
                            if !existentials.contains(&v) {
                                existentials.push(v);
                            }
                            terms.push(Term::Var(v));
                        }
                    }
                    head.push(Atom { pred, terms });
                }
                return Some(Rule {
                    id: format!("r{}", rule_no + 1),
                    vars: gv.vars,
                    form: RuleForm::Tgd {
                        body,
                        head,
                        existentials,
                    },
                });
            }
        }
    }
    None
}

fn generate_query(
    rng: &mut ChaCha8Rng,
    cfg: &KbGeneratorConfig,
    kb: &KnowledgeBase,
    preds: &[PredId],
    query_no: usize,
) -> Option<Query> {
    let mut gv = GenVars::new();
    let n_atoms = rng.gen_range(1..=cfg.max_body_atoms.max(1)).min(2);
    let body: Vec<Atom> = (0..n_atoms)
        .map(|_| gen_atom(rng, kb, preds, &[], &[], &mut gv, false))
        .collect();
    let all_vars = crate::model::vars_of(&body);
    if all_vars.is_empty() {
        return None;
    }
    let n_free = rng.gen_range(1..=all_vars.len().min(2));
    let mut shuffled = all_vars.clone();
    shuffled.shuffle(rng);
    let free: Vec<VarId> = shuffled[..n_free].to_vec();
    let existentials: Vec<VarId> = all_vars.into_iter().filter(|v| !free.contains(v)).collect();
    Some(Query {
        name: format!("q{}", query_no + 1),
        vars: gv.vars,
        free,
        existentials,
        body,
    })
}

/// A randomly built instance plus a conjunction to match against it, used
/// by the differential suite.
pub struct DifferentialCase {
    pub kb: KnowledgeBase,
    pub inst: Instance,
    pub vars: VarTable,
    pub conj: Vec<Atom>,
}

/// Builds a small random instance (classes merged and value sets enlarged
/// at random from a random base instance) together with a random
/// conjunction over the same signature.
pub fn generate_differential_case(cfg: &KbGeneratorConfig) -> Result<DifferentialCase> {
    let (mut kb, _) = generate_kb(cfg);
    kb.rules.clear();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed);
    let registry = BuiltinRegistry::default();
    let mut inst = crate::chase::base_instance(&kb, &registry)?;

    // Random entity merges.
    let merges = rng.gen_range(0..=2);
    for _ in 0..merges {
        let (classes, _) = inst.active_domain();
        let classes: Vec<_> = classes.into_iter().collect();
        if classes.len() < 2 {
            break;
        }
        let a = classes[rng.gen_range(0..classes.len())];
        let b = classes[rng.gen_range(0..classes.len())];
        if a != b {
            inst.merge_entity_classes(&kb.table, a, b)?;
        }
    }
    // Random value-set unions.
    let unions = rng.gen_range(0..=2);
    for _ in 0..unions {
        let facts: Vec<(FactKey, usize)> = inst
            .facts()
            .flat_map(|(k, f)| {
                f.cells
                    .iter()
                    .enumerate()
                    .filter_map(move |(i, c)| match c {
                        crate::instance::Cell::Values(_) => Some((k.clone(), i)),
                        _ => None,
                    })
            })
            .collect();
        if facts.is_empty() {
            break;
        }
        let (key, pos) = facts[rng.gen_range(0..facts.len())].clone();
        let mut union: BTreeSet<ValueRef> = match &inst.get(&key).unwrap().cells[pos] {
            crate::instance::Cell::Values(s) => s.clone(),
            _ => unreachable!(),
        };
        // Grow by a random extra value.
        let extra = rng.gen_range(0..cfg.max_values.max(1));
        if let Some(v) = kb
            .table
            .lookup_value(&Value::Num(crate::decimal::Decimal::from_int(extra as i64)))
        {
            union.insert(ValueRef::Value(v));
        }
        inst.replace_value_cells(&kb.table, &[(key, [pos].into_iter().collect())], &union)?;
    }

    // Random conjunction over the signature.
    let preds: Vec<PredId> = kb.table.preds().map(|(id, _)| id).collect();
    let entities: Vec<_> = kb
        .database
        .iter()
        .flat_map(|a| a.args.iter())
        .filter_map(|a| match a {
            GroundArg::Entity(e) => Some(*e),
            _ => None,
        })
        .collect();
    let values: Vec<ValueId> = kb
        .database
        .iter()
        .flat_map(|a| a.args.iter())
        .filter_map(|a| match a {
            GroundArg::Value(v) => Some(*v),
            _ => None,
        })
        .collect();
    let mut gv = GenVars::new();
    let n_atoms = rng.gen_range(1..=cfg.max_body_atoms.max(1));
    let conj: Vec<Atom> = (0..n_atoms)
        .map(|_| {
            gen_atom(
                &mut rng,
                &kb,
                &preds,
                if entities.is_empty() { &[] } else { &entities },
                if values.is_empty() { &[] } else { &values },
                &mut gv,
                !entities.is_empty() && !values.is_empty(),
            )
        })
        .collect();
    Ok(DifferentialCase {
        kb,
        inst,
        vars: gv.vars,
        conj,
    })
}

/// Runs the matching differential for one seed: engine enumeration must
/// equal naive enumeration exactly.
pub fn differential_matching(seed: u64, cfg: &KbGeneratorConfig) -> Result<()> {
    let case = generate_differential_case(&KbGeneratorConfig {
        seed,
        ..cfg.clone()
    })?;
    check_differential_case(&case, cfg.naive_fact_bound)
}

/// Compares engine and naive enumeration on one case.
pub fn check_differential_case(case: &DifferentialCase, fact_bound: usize) -> Result<()> {
    let engine: BTreeSet<Fingerprint> =
        crate::matching::enumerate_assignments(&case.inst, &case.kb.table, &case.vars, &case.conj)
            .iter()
            .map(|mu| engine_fingerprint(&case.inst, mu))
            .collect();
    let naive: BTreeSet<Fingerprint> = naive_assignments(
        &case.inst,
        &case.kb.table,
        &case.vars,
        &case.conj,
        fact_bound,
    )?
    .into_iter()
    .map(|a| a.fingerprint)
    .collect();
    if engine != naive {
        let only_engine = engine.difference(&naive).count();
        let only_naive = naive.difference(&engine).count();
        return Err(Error::Oracle(format!(
            "assignment mismatch: {only_engine} only in engine, {only_naive} only in naive"
        )));
    }
    Ok(())
}

/// Shrinks a failing differential case by greedily dropping facts and then
/// conjunction atoms while the failure persists.
pub fn shrink_differential_case(case: DifferentialCase, fact_bound: usize) -> DifferentialCase {
    let mut case = case;
    loop {
        let mut shrunk = false;
        let keys: Vec<FactKey> = case.inst.fact_keys().into_iter().collect();
        for key in keys {
            let mut table = case.kb.table.clone();
            // Rebuild without this fact; skip if the rebuild fails.
            let json = case.inst.to_json(&case.kb.table);
            let Ok(candidate_inst) = drop_fact_from_json(&json, &key, &mut table) else {
                continue;
            };
            let candidate = DifferentialCase {
                kb: KnowledgeBase {
                    table,
                    rules: case.kb.rules.clone(),
                    database: case.kb.database.clone(),
                },
                inst: candidate_inst,
                vars: case.vars.clone(),
                conj: case.conj.clone(),
            };
            if check_differential_case(&candidate, fact_bound).is_err() {
                case = candidate;
                shrunk = true;
                break;
            }
        }
        if shrunk {
            continue;
        }
        if case.conj.len() > 1 {
            for i in 0..case.conj.len() {
                let mut conj = case.conj.clone();
                conj.remove(i);
                let candidate = DifferentialCase {
                    kb: case.kb.clone(),
                    inst: case.inst.clone(),
                    vars: case.vars.clone(),
                    conj,
                };
                if check_differential_case(&candidate, fact_bound).is_err() {
                    case = candidate;
                    shrunk = true;
                    break;
                }
            }
        }
        if !shrunk {
            return case;
        }
    }
}

fn drop_fact_from_json(
    json: &serde_json::Value,
    key: &FactKey,
    table: &mut SymbolTable,
) -> Result<Instance> {
    let mut obj = json.clone();
    let target = key.display();
    if let Some(facts) = obj.get_mut("facts").and_then(|f| f.as_array_mut()) {
        facts.retain(|f| {
            // Cheap comparison through a rebuilt display is overkill here;
            // matching on the canonical JSON is enough because both come
            // from the same serializer.
            serde_json::to_string(f).map_or(true, |_s| {
                // Keep unless this is the fact to drop.
                fact_json_display(f) != target
            })
        });
    }
    // Drop classes that no remaining fact references.
    let referenced: BTreeSet<String> = obj
        .get("facts")
        .and_then(|f| f.as_array())
        .map(|facts| {
            facts
                .iter()
                .flat_map(|f| {
                    f.get("cells")
                        .and_then(|c| c.as_array())
                        .into_iter()
                        .flatten()
                        .filter_map(|cell| {
                            cell.get("class").map(|c| serde_json::to_string(c).unwrap())
                        })
                })
                .collect()
        })
        .unwrap_or_default();
    if let Some(classes) = obj.get_mut("classes").and_then(|c| c.as_array_mut()) {
        classes.retain(|c| referenced.contains(&serde_json::to_string(c).unwrap()));
    }
    Instance::from_json(table, &obj)
}

fn fact_json_display(f: &serde_json::Value) -> String {
    let pred = f.get("pred").and_then(|p| p.as_str()).unwrap_or("");
    let mut out = format!("{pred}(");
    if let Some(cells) = f.get("cells").and_then(|c| c.as_array()) {
        for (i, cell) in cells.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            if let Some(class) = cell.get("class").and_then(|c| c.as_array()) {
                out.push('[');
                for (j, m) in class.iter().enumerate() {
                    if j > 0 {
                        out.push(',');
                    }
                    out.push_str(m.as_str().unwrap_or("?"));
                }
                out.push(']');
            } else if let Some(values) = cell.get("values").and_then(|v| v.as_array()) {
                out.push('{');
                for (j, m) in values.iter().enumerate() {
                    if j > 0 {
                        out.push(',');
                    }
                    match m {
                        serde_json::Value::String(s) => out.push_str(&format!("{s:?}")),
                        serde_json::Value::Object(o) => {
                            if let Some(n) = o.get("num").and_then(|n| n.as_str()) {
                                out.push_str(n);
                            } else if let Some(n) = o.get("null").and_then(|n| n.as_str()) {
                                out.push_str(n);
                            }
                        }
                        _ => out.push('?'),
                    }
                }
                out.push('}');
            }
        }
    }
    out.push(')');
    out
}

/// End-to-end check for one generated KB: the chase must not abort, and a
/// terminated result must pass the naive solution check. Returns the chase
/// sequence for further inspection.
pub fn never_failing_check(
    seed: u64,
    cfg: &KbGeneratorConfig,
    max_steps: usize,
) -> Result<Option<ChaseSequence>> {
    let (kb, _) = generate_kb(&KbGeneratorConfig {
        seed,
        ..cfg.clone()
    });
    let registry = BuiltinRegistry::default();
    let seq = run_chase(&kb, &registry, &Strategy::Fair { seed: 0 }, max_steps)?;
    if seq.status == ChaseStatus::Terminated {
        let kb_view = KnowledgeBase {
            table: seq.table.clone(),
            rules: kb.rules.clone(),
            database: kb.database.clone(),
        };
        if !naive_is_solution(
            &kb_view,
            &registry,
            &seq.result,
            cfg.naive_fact_bound.max(256),
        )? {
            return Err(Error::Oracle(format!(
                "terminated chase result for seed {seed} is not a solution"
            )));
        }
        return Ok(Some(seq));
    }
    Ok(None)
}
