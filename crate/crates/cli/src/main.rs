use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use nucheck_core::certificates::{verify_certificate, Certificate};
use nucheck_core::decider::{bound, decide, decide_exhaustive, Budgets, Verdict};
use nucheck_core::certificates::equation::{equation_holds, EquationCheck};
use nucheck_core::essential::{decompose, find_essential_tuple, is_essential};
use nucheck_core::indicator::census;
use nucheck_core::nuf::{nuf_exists_with, NufOutcome};
use nucheck_core::{Budget, Relation, Structure};

/// Decide whether a finite relational structure has a near-unanimity
/// polymorphism.
#[derive(Parser)]
#[command(name = "nucheck", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full decision procedure.
    Decide {
        structure: PathBuf,
        #[arg(long)]
        budget_nodes: Option<u64>,
        #[arg(long)]
        max_arity: Option<usize>,
        #[arg(long)]
        max_chain_len: Option<usize>,
        #[arg(long)]
        pool_atoms: Option<usize>,
        #[arg(long)]
        pool_vars: Option<usize>,
        /// Stop between steps once this many milliseconds have passed.
        #[arg(long)]
        time_limit_ms: Option<u64>,
        /// Search only at the theoretical bound arity.
        #[arg(long, requires = "i_know")]
        exhaustive: bool,
        /// Confirms that the exhaustive search is infeasible in practice.
        #[arg(long)]
        i_know: bool,
    },
    /// Search for a near-unanimity polymorphism of one arity.
    Check {
        structure: PathBuf,
        #[arg(long)]
        arity: usize,
        #[arg(long)]
        budget_nodes: Option<u64>,
    },
    /// Print the arity bound for domain size `k` and maximum arity `q`.
    Bound {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        q: usize,
        /// Include all decimal digits, however many.
        #[arg(long)]
        digits: bool,
    },
    /// Essentiality, an essential tuple and the decomposition of a relation.
    Essential { relation: PathBuf },
    /// All members of the co-clone of a structure of one arity.
    Census {
        structure: PathBuf,
        #[arg(long)]
        arity: usize,
        #[arg(long)]
        budget_nodes: Option<u64>,
    },
    /// Check the loop equation for a relation of arity at least 2.
    Equation { relation: PathBuf },
    /// Verify a negative certificate against a structure.
    VerifyCert { structure: PathBuf, certificate: PathBuf },
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_structure(path: &Path) -> Result<Structure> {
    Structure::from_json(&read(path)?).with_context(|| format!("parsing structure {}", path.display()))
}

fn load_relation(path: &Path) -> Result<Relation> {
    serde_json::from_str(&read(path)?).with_context(|| format!("parsing relation {}", path.display()))
}

fn threads() -> usize {
    std::env::var("NUCHECK_THREADS")
        .ok()
        .and_then(|v| v.parse().ok())
        .filter(|&n: &usize| n > 0)
        .unwrap_or(1)
}

/// JSON result and exit code: 0 decided, 2 unknown.
fn run(cli: Cli) -> Result<(Value, u8)> {
    match cli.command {
        Command::Decide {
            structure,
            budget_nodes,
            max_arity,
            max_chain_len,
            pool_atoms,
            pool_vars,
            time_limit_ms,
            exhaustive,
            i_know,
        } => {
            let g = load_structure(&structure)?;
            let mut b = Budgets::for_domain(g.k());
            b.threads = threads();
            if let Some(n) = budget_nodes {
                b.nodes = n;
            }
            if let Some(n) = max_arity {
                b.max_arity = n;
            }
            if let Some(n) = max_chain_len {
                b.max_chain_len = n;
            }
            if let Some(n) = pool_atoms {
                b.pool.max_atoms = n;
            }
            if let Some(n) = pool_vars {
                b.pool.max_vars = n;
            }
            b.wall_clock = time_limit_ms.map(Duration::from_millis);
            let verdict = if exhaustive {
                decide_exhaustive(&g, &Budget::new(b.nodes), i_know)?
            } else {
                decide(&g, &b)?
            };
            match &verdict {
                Verdict::Yes { arity, .. } => eprintln!("yes: near-unanimity polymorphism of arity {arity}"),
                Verdict::No { certificate } => {
                    eprintln!("no: {} certificate", certificate.variant_name())
                }
                Verdict::Unknown { max_arity_tried, .. } => {
                    eprintln!("unknown: nothing found up to arity {max_arity_tried}")
                }
            }
            let code = if verdict.is_decided() { 0 } else { 2 };
            Ok((serde_json::to_value(&verdict)?, code))
        }
        Command::Check { structure, arity, budget_nodes } => {
            let g = load_structure(&structure)?;
            let budget = Budget::new(budget_nodes.unwrap_or(10_000_000));
            let outcome = nuf_exists_with(&g, arity, &budget, threads())?;
            let (value, code) = match outcome {
                NufOutcome::Found(table) => (json!({"result": "found", "table": table}), 0),
                NufOutcome::NotExists => (json!({"result": "none"}), 0),
                NufOutcome::Unknown => (json!({"result": "unknown", "nodes": budget.used()}), 2),
            };
            eprintln!("arity {arity}: {}", value["result"].as_str().unwrap_or_default());
            Ok((value, code))
        }
        Command::Bound { k, q, digits } => {
            let b = bound(k, q)?;
            let mut report = serde_json::to_value(b.report())?;
            if digits {
                match b.value() {
                    Some(v) => report["value"] = json!(v.to_string()),
                    None => bail!("the exact value has about 2^{:.1} bits; too large to print", b.log2().log2()),
                }
            }
            eprintln!("({})^{} ≈ 2^{:.1}", b.base, b.exponent, b.log2());
            Ok((report, 0))
        }
        Command::Essential { relation } => {
            let rel = load_relation(&relation)?;
            let essential = is_essential(&rel);
            let tuple = if rel.arity() > 0 { find_essential_tuple(&rel) } else { None };
            let parts = decompose(&rel);
            eprintln!("essential: {essential}, {} part(s)", parts.parts.len());
            Ok((json!({"essential": essential, "tuple": tuple, "decomposition": parts}), 0))
        }
        Command::Census { structure, arity, budget_nodes } => {
            let g = load_structure(&structure)?;
            let budget = Budget::new(budget_nodes.unwrap_or(10_000_000));
            let c = census(&g, arity, &budget)?;
            eprintln!("{} member(s) of arity {arity}{}", c.relations.len(), if c.partial { " (partial)" } else { "" });
            let code = if c.partial { 2 } else { 0 };
            Ok((json!({"arity": arity, "partial": c.partial, "relations": c.relations}), code))
        }
        Command::Equation { relation } => {
            let rel = load_relation(&relation)?;
            let value = match equation_holds(&rel)? {
                EquationCheck::Holds => json!({"holds": true}),
                EquationCheck::Fails(x) => json!({"holds": false, "witness": x}),
            };
            eprintln!("equation holds: {}", value["holds"]);
            Ok((value, 0))
        }
        Command::VerifyCert { structure, certificate } => {
            let g = load_structure(&structure)?;
            let cert: Certificate = serde_json::from_str(&read(&certificate)?)
                .with_context(|| format!("parsing certificate {}", certificate.display()))?;
            let valid = verify_certificate(&g, &cert);
            eprintln!("{} certificate: {}", cert.variant_name(), if valid { "valid" } else { "invalid" });
            Ok((json!({"valid": valid, "variant": cert.variant_name()}), if valid { 0 } else { 1 }))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok((value, code)) => {
            println!("{}", serde_json::to_string_pretty(&value).expect("JSON values serialize"));
            ExitCode::from(code)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
