//! Thin command-line front end over the setchase library.
//!
//! Exit codes: 0 on success, 1 on a domain failure (budget exhausted,
//! no homomorphism, not a solution, differential failure), 2 on usage or
//! parse errors. Structured output goes to stdout as JSON; diagnostics to
//! stderr.

use std::collections::BTreeSet;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use setchase::builtins::BuiltinRegistry;
use setchase::chase::{
    self, persistent_facts_from_trace, run_chase, ChaseStatus, Script, Strategy,
};
use setchase::matching::{find_homomorphism, satisfies_database, satisfies_rule};
use setchase::model::{KnowledgeBase, Query, SymbolTable};
use setchase::oracle::{
    check_differential_case, generate_differential_case, naive_is_solution,
    shrink_differential_case, KbGeneratorConfig,
};
use setchase::query::{answers_to_json, certain_answers, evaluate};
use setchase::Instance;

#[derive(Parser)]
#[command(name = "setchase", version, about = "entity-resolving chase engine")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the chase on a KB file and print the final instance.
    Chase {
        file: PathBuf,
        /// `fair[:SEED]` or `scripted=SCRIPT_FILE`.
        #[arg(long, default_value = "fair")]
        strategy: String,
        #[arg(long, default_value_t = chase::DEFAULT_MAX_STEPS)]
        max_steps: usize,
        /// Write a JSON-lines trace to this path.
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long, value_parser = ["json", "pretty"], default_value = "json")]
        trace_format: String,
        /// Write the final instance JSON to this path instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compute certain answers to a named query of the KB file.
    Certain {
        file: PathBuf,
        #[arg(long)]
        query: String,
        #[arg(long, default_value = "fair")]
        strategy: String,
        #[arg(long, default_value_t = chase::DEFAULT_MAX_STEPS)]
        max_steps: usize,
    },
    /// Evaluate a named query over an instance loaded from JSON.
    Eval {
        file: PathBuf,
        #[arg(long)]
        query: String,
        #[arg(long)]
        instance: PathBuf,
    },
    /// Search a homomorphism from instance A into instance B (JSON files);
    /// the KB file supplies the signature.
    CheckHom {
        file: PathBuf,
        a: PathBuf,
        b: PathBuf,
    },
    /// Check whether an instance is a solution for the KB, by the naive
    /// definition-level checker.
    Validate {
        file: PathBuf,
        #[arg(long)]
        instance: PathBuf,
    },
    /// Facts persisting from instance H to the end of a recorded trace.
    Persistent {
        trace: PathBuf,
        #[arg(long, default_value_t = 0)]
        from: usize,
    },
    /// Run the seeded matching differential suite; on failure, write a
    /// shrunken reproduction file.
    Fuzz {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        cases: u64,
        /// Where to write the reproduction file on failure.
        #[arg(long, default_value = "fuzz-repro.json")]
        repro: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                setchase::Error::Parse(_) | setchase::Error::Schema(_) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}

fn load_kb(path: &PathBuf) -> setchase::Result<(KnowledgeBase, Vec<Query>)> {
    let text = fs::read_to_string(path)?;
    let (kb, queries) = setchase::parse::parse(&text)?;
    kb.check_database()?;
    Ok((kb, queries))
}

fn parse_strategy(s: &str) -> setchase::Result<Strategy> {
    if s == "fair" {
        return Ok(Strategy::Fair { seed: 0 });
    }
    if let Some(seed) = s.strip_prefix("fair:") {
        let seed = seed
            .parse()
            .map_err(|_| setchase::Error::Schema(format!("bad fair seed `{seed}`")))?;
        return Ok(Strategy::Fair { seed });
    }
    if let Some(path) = s.strip_prefix("scripted=") {
        let text = fs::read_to_string(path)?;
        return Ok(Strategy::Scripted(Script::parse(&text)?));
    }
    Err(setchase::Error::Schema(format!(
        "unknown strategy `{s}` (use `fair`, `fair:SEED`, or `scripted=FILE`)"
    )))
}

fn load_instance(table: &mut SymbolTable, path: &PathBuf) -> setchase::Result<Instance> {
    let text = fs::read_to_string(path)?;
    let json: serde_json::Value = serde_json::from_str(&text)?;
    Instance::from_json(table, &json)
}

fn find_query(queries: &[Query], name: &str) -> setchase::Result<Query> {
    queries
        .iter()
        .find(|q| q.name == name)
        .cloned()
        .ok_or_else(|| setchase::Error::Schema(format!("unknown query `{name}`")))
}

fn dispatch(cmd: Command) -> setchase::Result<ExitCode> {
    match cmd {
        Command::Chase {
            file,
            strategy,
            max_steps,
            trace,
            trace_format,
            out,
        } => {
            let (kb, _) = load_kb(&file)?;
            let strategy = parse_strategy(&strategy)?;
            if !chase::full_tgd_guarantee(&kb) {
                eprintln!(
                    "warning: some tgds have existential variables; termination is not guaranteed"
                );
            }
            let registry = BuiltinRegistry::default();
            let seq = run_chase(&kb, &registry, &strategy, max_steps)?;
            if let Some(path) = trace {
                let rendered = match trace_format.as_str() {
                    "pretty" => chase::trace_pretty(&seq),
                    _ => {
                        let mut s = String::new();
                        for line in chase::trace_json_lines(&seq) {
                            s.push_str(&line.to_string());
                            s.push('\n');
                        }
                        s
                    }
                };
                fs::write(path, rendered)?;
            }
            let final_json = seq.result.to_json(&seq.table);
            let rendered = serde_json::to_string_pretty(&final_json)?;
            match out {
                Some(path) => fs::write(path, rendered)?,
                None => println!("{rendered}"),
            }
            match seq.status {
                ChaseStatus::Terminated => {
                    eprintln!("terminated after {} steps", seq.steps());
                    Ok(ExitCode::SUCCESS)
                }
                ChaseStatus::BudgetExhausted { budget } => {
                    eprintln!("budget exhausted at {budget} steps");
                    Ok(ExitCode::from(1))
                }
                ChaseStatus::ScriptEnded { remaining_triggers } => {
                    eprintln!(
                        "script ended after {} steps with {remaining_triggers} triggers still \
                         applicable",
                        seq.steps()
                    );
                    Ok(ExitCode::from(1))
                }
            }
        }
        Command::Certain {
            file,
            query,
            strategy,
            max_steps,
        } => {
            let (kb, queries) = load_kb(&file)?;
            let q = find_query(&queries, &query)?;
            let strategy = parse_strategy(&strategy)?;
            let registry = BuiltinRegistry::default();
            let (answers, seq) = certain_answers(&kb, &registry, &q, &strategy, max_steps)?;
            println!(
                "{}",
                serde_json::to_string_pretty(&answers_to_json(&q.name, &answers, &seq.table))?
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Eval {
            file,
            query,
            instance,
        } => {
            let (mut kb, queries) = load_kb(&file)?;
            let q = find_query(&queries, &query)?;
            let inst = load_instance(&mut kb.table, &instance)?;
            let answers = evaluate(&q, &inst, &kb.table);
            println!(
                "{}",
                serde_json::to_string_pretty(&answers_to_json(&q.name, &answers, &kb.table))?
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::CheckHom { file, a, b } => {
            let (mut kb, _) = load_kb(&file)?;
            let ia = load_instance(&mut kb.table, &a)?;
            let ib = load_instance(&mut kb.table, &b)?;
            match find_homomorphism(&ia, &ib, &kb.table) {
                Some(hom) => {
                    println!("homomorphism found");
                    for (k, e) in &hom.entity_nulls {
                        println!("  e⊥{k} -> {}", kb.table.entity_ref_text(*e));
                    }
                    for (k, v) in &hom.value_nulls {
                        println!("  v⊥{k} -> {}", kb.table.value_ref_text(*v));
                    }
                    Ok(ExitCode::SUCCESS)
                }
                None => {
                    println!("no homomorphism");
                    Ok(ExitCode::from(1))
                }
            }
        }
        Command::Validate { file, instance } => {
            let (mut kb, _) = load_kb(&file)?;
            let inst = load_instance(&mut kb.table, &instance)?;
            let registry = BuiltinRegistry::default();
            if naive_is_solution(&kb, &registry, &inst, 4096)? {
                println!("solution");
                Ok(ExitCode::SUCCESS)
            } else {
                // Report a witness for diagnosis.
                let mut reason = String::new();
                let (db_ok, missing) = satisfies_database(&inst, &kb.table, &kb.database);
                if !db_ok {
                    if let Some(atom) = missing {
                        reason = format!(
                            "database atom over `{}` is not satisfied",
                            kb.table.pred(atom.pred).name
                        );
                    }
                }
                for rule in &kb.rules {
                    let (ok, _) = satisfies_rule(&inst, &kb.table, rule);
                    if !ok {
                        reason = format!("rule `{}` is violated", rule.id);
                        break;
                    }
                }
                println!(
                    "not a solution{}",
                    if reason.is_empty() {
                        String::new()
                    } else {
                        format!(": {reason}")
                    }
                );
                Ok(ExitCode::from(1))
            }
        }
        Command::Persistent { trace, from } => {
            let text = fs::read_to_string(&trace)?;
            let lines: Vec<serde_json::Value> = text
                .lines()
                .filter(|l| !l.trim().is_empty())
                .map(serde_json::from_str)
                .collect::<Result<_, _>>()?;
            let facts = persistent_facts_from_trace(&lines, from)?;
            let listed: Vec<&str> = facts.iter().map(String::as_str).collect();
            println!(
                "{}",
                serde_json::to_string_pretty(&serde_json::json!({
                    "from": from,
                    "persistent_facts": listed,
                }))?
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Fuzz { seed, cases, repro } => {
            let cfg = KbGeneratorConfig::default();
            for s in seed..seed + cases {
                let case = generate_differential_case(&KbGeneratorConfig {
                    seed: s,
                    ..cfg.clone()
                })?;
                if let Err(e) = check_differential_case(&case, cfg.naive_fact_bound) {
                    eprintln!("seed {s} failed: {e}");
                    let shrunk = shrink_differential_case(case, cfg.naive_fact_bound);
                    let conj_text: Vec<String> = shrunk
                        .conj
                        .iter()
                        .map(|atom| {
                            let sig = shrunk.kb.table.pred(atom.pred);
                            let terms: Vec<String> = atom
                                .terms
                                .iter()
                                .map(|t| match t {
                                    setchase::model::Term::Var(v) => {
                                        shrunk.vars.name(*v).to_string()
                                    }
                                    setchase::model::Term::Entity(e) => {
                                        shrunk.kb.table.entity_name(*e).to_string()
                                    }
                                    setchase::model::Term::Value(v) => {
                                        shrunk.kb.table.value(*v).to_string()
                                    }
                                })
                                .collect();
                            format!("{}({})", sig.name, terms.join(", "))
                        })
                        .collect();
                    let repro_json = serde_json::json!({
                        "seed": s,
                        "conjunction": conj_text.join(", "),
                        "instance": shrunk.inst.to_json(&shrunk.kb.table),
                    });
                    fs::write(&repro, serde_json::to_string_pretty(&repro_json)?)?;
                    eprintln!("shrunken reproduction written to {}", repro.display());
                    return Ok(ExitCode::from(1));
                }
            }
            let keys: BTreeSet<u64> = (seed..seed + cases).collect();
            println!(
                "{} cases passed (seeds {:?}..={:?})",
                cases,
                keys.first(),
                keys.last()
            );
            Ok(ExitCode::SUCCESS)
        }
    }
}
