//! Fixed semantics for built-in predicates and materialization of their
//! ground facts.
//!
//! Built-ins are pre-interpreted and range over values only. A knowledge
//! base never stores built-in atoms; instead, for every built-in mentioned
//! in the TBox the engine materializes the finite set of holding ground
//! facts over the values of the database and the value constants of the
//! TBox, and adds them to the base instance as singleton-cell facts. The
//! chase never touches them afterwards.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use crate::model::{KnowledgeBase, PredId, PredKind, Term, Value, ValueId};
use crate::Error;

/// Pure, total evaluator over a well-typed value tuple.
pub type Evaluator = fn(&[&Value]) -> Result<bool, Error>;

struct Builtin {
    name: &'static str,
    arity: usize,
    /// Argument positions that act as thresholds: during materialization
    /// their candidates are only the value constants of the TBox, not all
    /// database values.
    threshold_positions: &'static [usize],
    eval: Evaluator,
}

/// Name-indexed registry of built-in evaluators.
///
/// The default registry ships `jacc_sim` only; `eq` and `leq` exist but are
/// disabled unless requested, since every enabled built-in enlarges the
/// materialized fact set.
pub struct BuiltinRegistry {
    builtins: Vec<Builtin>,
}

impl Default for BuiltinRegistry {
    fn default() -> Self {
        BuiltinRegistry {
            builtins: vec![Builtin {
                name: "jacc_sim",
                arity: 3,
                threshold_positions: &[2],
                eval: eval_jacc_sim,
            }],
        }
    }
}

impl BuiltinRegistry {
    /// Registry with the numeric comparisons `eq(v, v)` and `leq(v, v)`
    /// enabled in addition to `jacc_sim`.
    pub fn with_comparisons() -> Self {
        let mut reg = BuiltinRegistry::default();
        reg.builtins.push(Builtin {
            name: "eq",
            arity: 2,
            threshold_positions: &[],
            eval: eval_eq,
        });
        reg.builtins.push(Builtin {
            name: "leq",
            arity: 2,
            threshold_positions: &[],
            eval: eval_leq,
        });
        reg
    }

    fn get(&self, name: &str) -> Option<&Builtin> {
        self.builtins.iter().find(|b| b.name == name)
    }

    /// Evaluates the named built-in on a value tuple.
    pub fn eval(&self, name: &str, args: &[&Value]) -> Result<bool, Error> {
        let b = self
            .get(name)
            .ok_or_else(|| Error::Builtin(format!("unknown built-in `{name}`")))?;
        if args.len() != b.arity {
            return Err(Error::Builtin(format!(
                "`{name}` expects {} arguments, got {}",
                b.arity,
                args.len()
            )));
        }
        (b.eval)(args)
    }
}

/// Jaccard similarity over the character sets of two strings, strictly
/// above a numeric threshold.
///
/// `chars` is the set of Unicode scalar values of the string, so
/// `jacc_sim("John Doe", "J. Doe", t)` holds exactly when `5/8 > t`.
pub fn jacc_sim(a: &str, b: &str, threshold: &crate::decimal::Decimal) -> bool {
    let (num, den) = jacc_ratio(a, b);
    threshold.cmp_ratio(num, den) == Ordering::Less
}

/// The similarity itself as an exact rational `(intersection, union)`;
/// `(0, 1)` for two empty strings.
pub fn jacc_ratio(a: &str, b: &str) -> (i64, i64) {
    let sa: BTreeSet<char> = a.chars().collect();
    let sb: BTreeSet<char> = b.chars().collect();
    let inter = sa.intersection(&sb).count() as i64;
    let union = sa.union(&sb).count() as i64;
    if union == 0 {
        (0, 1)
    } else {
        (inter, union)
    }
}

fn eval_jacc_sim(args: &[&Value]) -> Result<bool, Error> {
    let (a, b) = match (args[0], args[1]) {
        (Value::Str(a), Value::Str(b)) => (a, b),
        _ => {
            return Err(Error::Builtin(
                "jacc_sim expects two string arguments".into(),
            ))
        }
    };
    let t = match args[2] {
        Value::Num(d) => d,
        _ => return Err(Error::Builtin("jacc_sim threshold must be numeric".into())),
    };
    Ok(jacc_sim(a, b, t))
}

fn eval_eq(args: &[&Value]) -> Result<bool, Error> {
    Ok(args[0] == args[1])
}

fn eval_leq(args: &[&Value]) -> Result<bool, Error> {
    match (args[0], args[1]) {
        (Value::Num(a), Value::Num(b)) => Ok(a <= b),
        _ => Err(Error::Builtin("leq expects numeric arguments".into())),
    }
}

/// Materializes the built-in facts of a KB: for every built-in predicate
/// mentioned in the TBox, all holding ground tuples with arguments drawn
/// from the database values plus the TBox value constants (threshold
/// positions draw from the TBox constants only). Ill-typed candidate tuples
/// simply do not hold.
pub fn materialize_builtin_facts(
    kb: &KnowledgeBase,
    registry: &BuiltinRegistry,
) -> Result<Vec<(PredId, Vec<ValueId>)>, Error> {
    let mut mentioned: BTreeSet<PredId> = BTreeSet::new();
    let mut tbox_consts: BTreeSet<ValueId> = BTreeSet::new();
    for rule in &kb.rules {
        let mut atoms: Vec<&crate::model::Atom> = rule.body().iter().collect();
        if let crate::model::RuleForm::Tgd { head, .. } = &rule.form {
            atoms.extend(head.iter());
        }
        for atom in atoms {
            if kb.table.pred(atom.pred).kind == PredKind::BuiltIn {
                mentioned.insert(atom.pred);
            }
            for term in &atom.terms {
                if let Term::Value(v) = term {
                    tbox_consts.insert(*v);
                }
            }
        }
    }
    let mut db_values: BTreeSet<ValueId> = BTreeSet::new();
    for atom in &kb.database {
        for arg in &atom.args {
            if let crate::model::GroundArg::Value(v) = arg {
                db_values.insert(*v);
            }
        }
    }
    let broad: Vec<ValueId> = db_values.union(&tbox_consts).copied().collect();
    let narrow: Vec<ValueId> = tbox_consts.iter().copied().collect();

    let mut out = Vec::new();
    for pred in mentioned {
        let sig = kb.table.pred(pred);
        let b = registry
            .get(&sig.name)
            .ok_or_else(|| Error::Builtin(format!("unknown built-in `{}`", sig.name)))?;
        if b.arity != sig.arity() {
            return Err(Error::Builtin(format!(
                "`{}` is declared with arity {}, registry has {}",
                sig.name,
                sig.arity(),
                b.arity
            )));
        }
        let candidates: Vec<&Vec<ValueId>> = (0..sig.arity())
            .map(|i| {
                if b.threshold_positions.contains(&i) {
                    &narrow
                } else {
                    &broad
                }
            })
            .collect();
        let mut tuple = vec![None::<ValueId>; sig.arity()];
        enumerate(kb, b, &candidates, &mut tuple, 0, &mut out, pred);
    }
    Ok(out)
}

fn enumerate(
    kb: &KnowledgeBase,
    b: &Builtin,
    candidates: &[&Vec<ValueId>],
    tuple: &mut Vec<Option<ValueId>>,
    pos: usize,
    out: &mut Vec<(PredId, Vec<ValueId>)>,
    pred: PredId,
) {
    if pos == tuple.len() {
        let ids: Vec<ValueId> = tuple.iter().map(|v| v.unwrap()).collect();
        let args: Vec<&Value> = ids.iter().map(|v| kb.table.value(*v)).collect();
        // Type errors on enumerated tuples mean "does not hold".
        if (b.eval)(&args).unwrap_or(false) {
            out.push((pred, ids));
        }
        return;
    }
    for &v in candidates[pos] {
        tuple[pos] = Some(v);
        enumerate(kb, b, candidates, tuple, pos + 1, out, pred);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decimal::Decimal;

    fn dec(s: &str) -> Decimal {
        s.parse().unwrap()
    }

    #[test]
    fn doe_similarity_is_five_eighths() {
        assert_eq!(jacc_ratio("John Doe", "J. Doe"), (5, 8));
        assert!(jacc_sim("John Doe", "J. Doe", &dec("0.6")));
        // Strict comparison: 0.625 is not above itself.
        assert!(!jacc_sim("John Doe", "J. Doe", &dec("0.625")));
    }

    #[test]
    fn identity_is_similarity_one() {
        assert!(jacc_sim("abc", "abc", &dec("0.99")));
    }

    #[test]
    fn disjoint_strings_fail_zero_threshold() {
        assert_eq!(jacc_ratio("abc", "xyz"), (0, 6));
        assert!(!jacc_sim("abc", "xyz", &dec("0")));
    }

    #[test]
    fn mary_doe_vs_j_doe_is_below_threshold() {
        // Shared characters: space, 'D', 'o', 'e'.
        assert_eq!(jacc_ratio("Mary Doe", "J. Doe"), (4, 10));
        assert!(!jacc_sim("Mary Doe", "J. Doe", &dec("0.6")));
    }

    #[test]
    fn type_errors_are_reported() {
        let reg = BuiltinRegistry::default();
        let num = Value::Num(dec("1"));
        let s = Value::Str("a".into());
        assert!(reg.eval("jacc_sim", &[&num, &s, &num]).is_err());
        assert!(reg.eval("jacc_sim", &[&s, &s, &s]).is_err());
        assert!(reg.eval("nope", &[&s]).is_err());
    }

    #[test]
    fn comparisons_ship_disabled() {
        let reg = BuiltinRegistry::default();
        let one = Value::Num(dec("1"));
        assert!(reg.eval("eq", &[&one, &one]).is_err());
        let reg = BuiltinRegistry::with_comparisons();
        assert!(reg.eval("eq", &[&one, &one]).unwrap());
        assert!(reg.eval("leq", &[&one, &one]).unwrap());
    }
}
