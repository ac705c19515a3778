//! setchase: a knowledge-base reasoning engine where entity resolution is
//! part of the semantics.
//!
//! A knowledge base pairs a TBox of tuple-generating dependencies (tgds) and
//! equality-generating dependencies (egds) with a database of ground atoms.
//! Instead of failing when an egd equates two different constants, the engine
//! works over *set-valued instances*: entity cells are equivalence classes of
//! entities (and entity-nulls), value cells are non-empty sets of values (and
//! value-nulls). An entity-egd merges two classes everywhere; a value-egd
//! unions two sets locally, inside the facts that matched the rule body.
//! The resulting chase never fails, and when it terminates its result is a
//! universal solution: it maps homomorphically into every solution of the KB.
//!
//! Certain answers to a conjunctive query are computed by evaluating the
//! query over a universal solution, dropping nulls, and then discarding
//! answer tuples strictly dominated by others (the `↓ρ` reduction).
//!
//! The crate is organized around the pipeline:
//!
//! - [`parse`]: text front-end for schemas, rules, facts, and queries;
//! - [`model`] / [`instance`]: the vocabulary and the set-valued instance
//!   model with its equivalence machinery;
//! - [`builtins`]: fixed semantics for built-in predicates such as
//!   character-set Jaccard similarity;
//! - [`matching`]: assignment enumeration, rule satisfaction, and
//!   homomorphism search;
//! - [`chase`]: chase steps, fair and scripted scheduling, tracing, and
//!   finite-prefix persistence diagnostics;
//! - [`query`]: conjunctive-query evaluation and certain answers;
//! - [`oracle`]: independent brute-force checkers and a random-KB generator
//!   used to validate the engine against the definitions.
//!
//! Each major capability has a runnable example under `examples/`; start
//! with `chase_running_example`. The `setchase` binary exposes the same
//! operations for batch use.

pub mod builtins;
pub mod chase;
pub mod decimal;
pub mod instance;
pub mod matching;
pub mod model;
pub mod oracle;
pub mod parse;
pub mod query;

pub use decimal::Decimal;
pub use instance::{Cell, CellSpec, Dominance, Fact, FactKey, Instance, TupleCell};
pub use model::{KnowledgeBase, Query, Rule, SymbolTable, Value};

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Lexical, syntactic, or typing error in the rule language.
    #[error("{0}")]
    Parse(#[from] parse::ParseError),
    /// Ill-typed data: schema violations, malformed instances.
    #[error("schema error: {0}")]
    Schema(String),
    /// Chase-level failures: stale triggers, bad scripts, exhausted budgets.
    #[error("chase error: {0}")]
    Chase(String),
    /// A chase script referenced a step that matches no current trigger.
    #[error("script error at step {step}: {msg}")]
    Script { step: usize, msg: String },
    /// Built-in evaluation on ill-typed arguments.
    #[error("built-in error: {0}")]
    Builtin(String),
    /// The chase did not terminate within the step budget, so certain
    /// answers are unavailable.
    #[error("chase did not terminate within {budget} steps; certain answers unavailable")]
    BudgetExhausted { budget: usize },
    #[error("oracle error: {0}")]
    Oracle(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
