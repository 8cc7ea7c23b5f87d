//! Command-line front end.
//!
//! Exit codes: 0 provable / check passed, 1 unprovable / check failed,
//! 2 usage or I/O error, 3 resource budget exceeded.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use hyperprove::calculus::{compute_fm_acn, validate_schema, CalculusConfig, Mode, RuleSchema};
use hyperprove::hyperseq::{parse_hypersequent, Hypersequent, OmegaSequent};
use hyperprove::proofs::{
    check_proof, read_proof_json, stage_one, stage_two, write_proof_json, ProofTree,
};
use hyperprove::prover_c::{build_tree_c, evaluate, prove_first, Budget, ProverCError};
use hyperprove::prover_w::{eager_to_proof_tree, wkn, wkn_first, ProverWError};
use hyperprove::syntax::{parse, Formula, SubformulaTable};
use hyperprove::trace;

#[derive(Parser)]
#[command(
    name = "hyperprove",
    about = "Proof search for analytic hypersequent-calculus extensions of FL_ec and FL_ew"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decide provability of a formula or hypersequent.
    Prove(ProveArgs),
    /// Verify a proof JSON file.
    Check {
        /// Proof file produced by `prove --emit-proof`.
        file: PathBuf,
    },
    /// Rule-schema tools.
    Schema {
        #[command(subcommand)]
        command: SchemaCommand,
    },
    /// Run the shipped corpus and print a verdict/size/time table.
    Bench(BenchArgs),
}

#[derive(Subcommand)]
enum SchemaCommand {
    /// Validate a structural-rule schema file.
    Validate {
        /// Schema JSON file.
        file: PathBuf,
    },
}

#[derive(Args)]
struct ProveArgs {
    /// Goal: a formula (proved as the sequent `=> φ`) or hypersequent text.
    #[arg(long, conflicts_with = "goal")]
    formula: Option<String>,
    /// Goal as a positional argument.
    goal: Option<String>,
    /// Calculus mode: c (contraction, FL_ec-style) or w (weakening,
    /// FL_ew-style with ω-acceleration).
    #[arg(long, default_value = "c")]
    mode: String,
    /// Structural-rule schema files (repeatable).
    #[arg(long = "rules")]
    rules: Vec<PathBuf>,
    /// Reconstruct an ω-free checkable proof (mode w only).
    #[arg(long)]
    reconstruct: bool,
    /// Write the proof as JSON to this path.
    #[arg(long = "emit-proof")]
    emit_proof: Option<PathBuf>,
    /// Write the full search tree as JSON to this path.
    #[arg(long = "emit-tree")]
    emit_tree: Option<PathBuf>,
    /// Write the full search tree as Graphviz DOT to this path.
    #[arg(long = "emit-dot")]
    emit_dot: Option<PathBuf>,
    /// Stop at the first proof found (mode c; skips the full tree).
    #[arg(long = "first-proof")]
    first_proof: bool,
    /// Node budget.
    #[arg(long = "max-nodes", default_value_t = 2_000_000)]
    max_nodes: u64,
    /// Time budget in seconds.
    #[arg(long = "max-seconds", default_value_t = 120)]
    max_seconds: u64,
    /// Worker threads for parallel branch expansion (0 = automatic).
    #[arg(long, default_value_t = 0)]
    workers: usize,
}

#[derive(Args)]
struct BenchArgs {
    /// Node budget per corpus entry.
    #[arg(long = "max-nodes", default_value_t = 2_000_000)]
    max_nodes: u64,
    /// Time budget in seconds per corpus entry.
    #[arg(long = "max-seconds", default_value_t = 60)]
    max_seconds: u64,
}

const EXIT_UNPROVABLE: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_BUDGET: u8 = 3;

fn fail(msg: impl std::fmt::Display, code: u8) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(code)
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Prove(args) => cmd_prove(args),
        Command::Check { file } => cmd_check(&file),
        Command::Schema {
            command: SchemaCommand::Validate { file },
        } => cmd_schema_validate(&file),
        Command::Bench(args) => cmd_bench(args),
    }
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    match s {
        "c" => Ok(Mode::Contraction),
        "w" => Ok(Mode::Weakening),
        other => Err(format!("unknown mode {other:?} (expected c or w)")),
    }
}

fn load_schemas(paths: &[PathBuf]) -> Result<Vec<RuleSchema>, String> {
    let mut out = Vec::new();
    for p in paths {
        let text = std::fs::read_to_string(p)
            .map_err(|e| format!("cannot read {}: {e}", p.display()))?;
        let schema = validate_schema(&text).map_err(|errs| {
            let msgs: Vec<String> = errs.iter().map(|e| e.to_string()).collect();
            format!("{}: {}", p.display(), msgs.join("; "))
        })?;
        out.push(schema);
    }
    Ok(out)
}

/// Parses goal text into a hypersequent plus its subformula table.
fn parse_goal(text: &str) -> Result<(SubformulaTable, Hypersequent), String> {
    let comps = if text.contains("=>") || text.contains('|') || text.contains('{') {
        parse_hypersequent(text).map_err(|e| e.to_string())?
    } else {
        let f = parse(text).map_err(|e| e.to_string())?;
        vec![hyperprove::hyperseq::RawComponent {
            omega: Vec::new(),
            antecedent: Vec::new(),
            stoup: Some(f),
        }]
    };
    let formulas: Vec<Formula> = comps.iter().flat_map(|c| c.formulas().cloned()).collect();
    let tbl = SubformulaTable::for_all(&formulas);
    let seqs: Vec<OmegaSequent> = comps.iter().map(|c| c.resolve(&tbl)).collect();
    Ok((tbl, Hypersequent::new(seqs)))
}

struct ProveOutcome {
    provable: bool,
    nodes: u64,
    proof: Option<ProofTree>,
    tree_json: Option<String>,
    tree_dot: Option<String>,
}

fn run_prove(
    mode: Mode,
    schemas: Vec<RuleSchema>,
    tbl: &SubformulaTable,
    goal: &Hypersequent,
    budget: Budget,
    first_proof: bool,
    reconstruct: bool,
    want_tree: bool,
) -> Result<ProveOutcome, (String, u8)> {
    let cfg = CalculusConfig::new(mode, schemas);
    match mode {
        Mode::Contraction => {
            if reconstruct {
                return Err((
                    "--reconstruct requires --mode w".to_string(),
                    EXIT_USAGE,
                ));
            }
            if !want_tree {
                // Default decision path: first-proof depth-first search.
                // Exhaustive on failure, short-circuits on success; the full
                // tree is only materialized when tree output is requested.
                let (proof, nodes) = prove_first(&cfg, tbl, goal, budget).map_err(map_c_err)?;
                return Ok(ProveOutcome {
                    provable: proof.is_some(),
                    nodes,
                    proof,
                    tree_json: None,
                    tree_dot: None,
                });
            }
            let _ = first_proof;
            let tree = build_tree_c(&cfg, tbl, goal, budget).map_err(map_c_err)?;
            let (provable, proof) = evaluate(&tree);
            Ok(ProveOutcome {
                provable,
                nodes: tree.nodes,
                tree_json: want_tree.then(|| trace::tree_c_json(tbl, &tree)),
                tree_dot: want_tree.then(|| trace::tree_c_dot(tbl, &tree)),
                proof,
            })
        }
        Mode::Weakening => {
            if !want_tree {
                let (eager, nodes) = wkn_first(&cfg, tbl, goal, budget).map_err(map_w_err)?;
                let proof = match (&eager, reconstruct) {
                    (Some(eager), true) => {
                        let ann = stage_one(&cfg, tbl, eager)
                            .map_err(|e| (format!("reconstruction failed: {e}"), EXIT_USAGE))?;
                        let p = stage_two(&cfg, tbl, &ann)
                            .map_err(|e| (format!("reconstruction failed: {e}"), EXIT_USAGE))?;
                        check_proof(&cfg, tbl, &p).map_err(|e| {
                            (format!("reconstructed proof rejected: {e}"), EXIT_USAGE)
                        })?;
                        Some(p)
                    }
                    (Some(eager), false) => Some(eager_to_proof_tree(eager)),
                    (None, _) => None,
                };
                return Ok(ProveOutcome {
                    provable: proof.is_some(),
                    nodes,
                    proof,
                    tree_json: None,
                    tree_dot: None,
                });
            }
            let outcome = wkn(&cfg, tbl, goal, budget).map_err(map_w_err)?;
            let proof = match (&outcome.eager, reconstruct) {
                (Some(eager), true) => {
                    let ann = stage_one(&cfg, tbl, eager)
                        .map_err(|e| (format!("reconstruction failed: {e}"), EXIT_USAGE))?;
                    let p = stage_two(&cfg, tbl, &ann)
                        .map_err(|e| (format!("reconstruction failed: {e}"), EXIT_USAGE))?;
                    check_proof(&cfg, tbl, &p)
                        .map_err(|e| (format!("reconstructed proof rejected: {e}"), EXIT_USAGE))?;
                    Some(p)
                }
                (Some(eager), false) => Some(eager_to_proof_tree(eager)),
                (None, _) => None,
            };
            Ok(ProveOutcome {
                provable: outcome.provable,
                nodes: outcome.tree.nodes,
                tree_json: want_tree.then(|| trace::tree_w_json(tbl, &outcome.tree)),
                tree_dot: want_tree.then(|| trace::tree_w_dot(tbl, &outcome.tree)),
                proof,
            })
        }
    }
}

fn map_c_err(e: ProverCError) -> (String, u8) {
    let code = match e {
        ProverCError::Budget(_) => EXIT_BUDGET,
        _ => EXIT_USAGE,
    };
    (e.to_string(), code)
}

fn map_w_err(e: ProverWError) -> (String, u8) {
    let code = match e {
        ProverWError::Budget(_) => EXIT_BUDGET,
        _ => EXIT_USAGE,
    };
    (e.to_string(), code)
}

fn cmd_prove(args: ProveArgs) -> ExitCode {
    let mode = match parse_mode(&args.mode) {
        Ok(m) => m,
        Err(e) => return fail(e, EXIT_USAGE),
    };
    if args.workers > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(args.workers)
            .build_global()
        {
            return fail(format!("cannot configure worker pool: {e}"), EXIT_USAGE);
        }
    }
    let goal_text = match args.formula.as_deref().or(args.goal.as_deref()) {
        Some(t) => t,
        None => return fail("missing goal (positional or --formula)", EXIT_USAGE),
    };
    let schemas = match load_schemas(&args.rules) {
        Ok(s) => s,
        Err(e) => return fail(e, EXIT_USAGE),
    };
    let (tbl, goal) = match parse_goal(goal_text) {
        Ok(g) => g,
        Err(e) => return fail(e, EXIT_USAGE),
    };
    let budget = Budget {
        max_nodes: args.max_nodes,
        max_millis: args.max_seconds.saturating_mul(1000),
    };
    let want_tree = args.emit_tree.is_some() || args.emit_dot.is_some();
    let cfg = CalculusConfig::new(mode, schemas.clone());
    let outcome = match run_prove(
        mode,
        schemas,
        &tbl,
        &goal,
        budget,
        args.first_proof,
        args.reconstruct,
        want_tree,
    ) {
        Ok(o) => o,
        Err((msg, code)) => return fail(msg, code),
    };
    if let (Some(path), Some(json)) = (&args.emit_tree, &outcome.tree_json) {
        if let Err(e) = std::fs::write(path, json) {
            return fail(format!("cannot write {}: {e}", path.display()), EXIT_USAGE);
        }
    }
    if let (Some(path), Some(dot)) = (&args.emit_dot, &outcome.tree_dot) {
        if let Err(e) = std::fs::write(path, dot) {
            return fail(format!("cannot write {}: {e}", path.display()), EXIT_USAGE);
        }
    }
    if let Some(path) = &args.emit_proof {
        match &outcome.proof {
            Some(p) => {
                let json = write_proof_json(&cfg, &tbl, p);
                if let Err(e) = std::fs::write(path, json) {
                    return fail(format!("cannot write {}: {e}", path.display()), EXIT_USAGE);
                }
            }
            None => eprintln!("note: no proof to emit (goal unprovable)"),
        }
    }
    if outcome.provable {
        println!("provable");
        ExitCode::SUCCESS
    } else {
        println!("unprovable");
        ExitCode::from(EXIT_UNPROVABLE)
    }
}

fn cmd_check(file: &PathBuf) -> ExitCode {
    let text = match std::fs::read_to_string(file) {
        Ok(t) => t,
        Err(e) => return fail(format!("cannot read {}: {e}", file.display()), EXIT_USAGE),
    };
    let (cfg, tbl, proof) = match read_proof_json(&text) {
        Ok(p) => p,
        Err(e) => return fail(format!("malformed proof file: {e}"), EXIT_USAGE),
    };
    match check_proof(&cfg, &tbl, &proof) {
        Ok(()) => {
            println!("ok: {}", proof.conclusion.display(&tbl));
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("invalid proof: {e}");
            ExitCode::from(EXIT_UNPROVABLE)
        }
    }
}

fn cmd_schema_validate(file: &PathBuf) -> ExitCode {
    let text = match std::fs::read_to_string(file) {
        Ok(t) => t,
        Err(e) => return fail(format!("cannot read {}: {e}", file.display()), EXIT_USAGE),
    };
    match validate_schema(&text) {
        Ok(schema) => {
            let (fm, acn) = compute_fm_acn(std::slice::from_ref(&schema)).unwrap();
            println!("ok: {} fm={} acn={}", schema.name, fm, acn);
            ExitCode::SUCCESS
        }
        Err(errs) => {
            for e in errs {
                eprintln!("invalid schema: {e}");
            }
            ExitCode::from(EXIT_UNPROVABLE)
        }
    }
}

const COM_JSON: &str = include_str!("../../../rules/com.json");
const PUMP_JSON: &str = include_str!("../../../rules/pump.json");

fn cmd_bench(args: BenchArgs) -> ExitCode {
    let corpus: &[(&str, Mode, Option<&str>, &str)] = &[
        ("prelinearity-com", Mode::Weakening, Some(COM_JSON), "(p->q) \\/ (q->p)"),
        ("prelinearity-empty", Mode::Weakening, None, "(p->q) \\/ (q->p)"),
        ("atom", Mode::Contraction, None, "p"),
        ("atom-w", Mode::Weakening, None, "p"),
        ("non-theorem-seq", Mode::Contraction, None, "p => q"),
        ("contraction-curry", Mode::Contraction, None, "(p->(p->q))->(p->q)"),
        ("fusion-dup", Mode::Contraction, None, "p -> (p*p)"),
        ("pump-accel", Mode::Weakening, Some(PUMP_JSON), "p, p => q"),
    ];
    let budget = Budget {
        max_nodes: args.max_nodes,
        max_millis: args.max_seconds.saturating_mul(1000),
    };
    println!(
        "{:<22} {:>4} {:>12} {:>10} {:>9}",
        "case", "mode", "verdict", "nodes", "ms"
    );
    let mut failures = 0usize;
    for (name, mode, schema_text, goal_text) in corpus {
        let schemas = match schema_text {
            Some(t) => vec![validate_schema(t).expect("shipped schema is valid")],
            None => Vec::new(),
        };
        let (tbl, goal) = match parse_goal(goal_text) {
            Ok(g) => g,
            Err(e) => return fail(e, EXIT_USAGE),
        };
        let start = Instant::now();
        let result = run_prove(*mode, schemas, &tbl, &goal, budget, false, false, false);
        let ms = start.elapsed().as_millis();
        let mode_s = match mode {
            Mode::Contraction => "c",
            Mode::Weakening => "w",
        };
        match result {
            Ok(o) => {
                let verdict = if o.provable { "provable" } else { "unprovable" };
                println!(
                    "{:<22} {:>4} {:>12} {:>10} {:>9}",
                    name, mode_s, verdict, o.nodes, ms
                );
            }
            Err((msg, _)) => {
                failures += 1;
                println!("{:<22} {:>4} {:>12} {:>10} {:>9}", name, mode_s, "error", "-", ms);
                eprintln!("  {name}: {msg}");
            }
        }
    }
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_USAGE)
    }
}
