use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use fuzzloc::workbench::{self as wb, CliError, MergeOutputs, WorkspaceConfig};

/// Fuzzy-logic workbench for subscriber data.
#[derive(Parser)]
#[command(name = "fuzzloc", version)]
struct Cli {
    /// Workspace config JSON; defaults to $FUZZLOC_WORKSPACE.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Read a subscriber CSV and report its schema.
    Load {
        #[arg(long)]
        store: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Attach a linguistic variable to a numeric column in the catalog.
    Fuzzify {
        #[arg(long)]
        column: String,
        /// Linguistic variable JSON.
        #[arg(long)]
        variable: PathBuf,
        /// Also store per-row degrees.
        #[arg(long)]
        materialize: bool,
        #[arg(long)]
        store: Option<PathBuf>,
        #[arg(long)]
        catalog: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Run a fuzzy SQL query.
    Query {
        sql: String,
        /// Minimum degree, default 0.5 or the workspace value.
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        store: Option<PathBuf>,
        #[arg(long)]
        catalog: Option<PathBuf>,
        #[arg(long)]
        json: bool,
        /// Print the evaluation plan instead of running the query.
        #[arg(long)]
        explain: bool,
    },
    /// Evaluate a knowledge base on crisp inputs.
    Infer {
        #[arg(long)]
        kb: Option<PathBuf>,
        /// name=value, repeatable.
        #[arg(long = "input", short = 'i')]
        inputs: Vec<String>,
        #[arg(long)]
        json: bool,
    },
    /// Find and optionally merge duplicate subscriber records.
    Dedup {
        #[arg(long)]
        store: Option<PathBuf>,
        /// Default 0.85 or the workspace value.
        #[arg(long)]
        threshold: Option<f64>,
        #[arg(long, default_value = "groups.json")]
        out: PathBuf,
        #[arg(long)]
        merge: bool,
        #[arg(long, default_value = "merged.csv")]
        merged_store: PathBuf,
        #[arg(long, default_value = "merge_history.json")]
        history: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Run the location-management simulator and assess network risk.
    Simulate {
        #[arg(long)]
        network: Option<PathBuf>,
        #[arg(long)]
        scenario: Option<PathBuf>,
        /// Overrides the random walk seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Network-risk kb manifest.
        #[arg(long)]
        kb: Option<PathBuf>,
        #[arg(long, default_value = "metrics.csv")]
        metrics: PathBuf,
        #[arg(long)]
        json: bool,
    },
}

fn need(path: Option<PathBuf>, from_config: &Option<PathBuf>, what: &str) -> Result<PathBuf, CliError> {
    path.or_else(|| from_config.clone())
        .ok_or_else(|| CliError::Semantic(format!("no {what} given (flag or workspace config)")))
}

fn emit<T: Serialize>(json: bool, value: &T, text: impl FnOnce(&T) -> String) {
    if json {
        println!("{}", serde_json::to_string_pretty(value).expect("reports serialize"));
    } else {
        print!("{}", text(value));
    }
}

fn execute(cli: Cli) -> Result<(), CliError> {
    let cfg = WorkspaceConfig::resolve(cli.config.as_deref())?;
    match cli.command {
        Command::Load { store, json } => {
            let store = need(store, &cfg.store, "store")?;
            emit(json, &wb::cmd_load(&store, &cfg.table)?, |r| r.to_string());
        }
        Command::Fuzzify {
            column,
            variable,
            materialize,
            store,
            catalog,
            json,
        } => {
            let store = need(store, &cfg.store, "store")?;
            let catalog = need(catalog, &cfg.catalog, "catalog")?;
            let r = wb::cmd_fuzzify(&store, &cfg.table, &catalog, &column, &variable, materialize)?;
            emit(json, &r, |r| {
                format!(
                    "{}.{} fuzzified with terms {}{} -> {}\n",
                    r.table,
                    r.column,
                    r.terms.join(", "),
                    r.materialized_rows
                        .map_or(String::new(), |n| format!(" ({n} rows materialized)")),
                    r.catalog.display()
                )
            });
        }
        Command::Query {
            sql,
            alpha,
            store,
            catalog,
            json,
            explain,
        } => {
            let catalog = catalog.or(cfg.catalog.clone());
            if explain {
                let plan = wb::cmd_explain(catalog.as_deref(), &sql)?;
                emit(json, &plan, |p| format!("{p}\n"));
            } else {
                let store = need(store, &cfg.store, "store")?;
                let alpha = alpha.unwrap_or(cfg.alpha);
                let r = wb::cmd_query(&store, &cfg.table, catalog.as_deref(), &sql, alpha)?;
                emit(json, &r, wb::render_query);
            }
        }
        Command::Infer { kb, inputs, json } => {
            let kb = need(kb, &cfg.kb, "kb manifest")?;
            let inputs = wb::parse_inputs(&inputs)?;
            let a = wb::cmd_infer(&kb, &inputs, cfg.risk_thresholds)?;
            emit(json, &a, wb::render_assessment);
        }
        Command::Dedup {
            store,
            threshold,
            out,
            merge,
            merged_store,
            history,
            json,
        } => {
            let store = need(store, &cfg.store, "store")?;
            let merge = merge.then_some(MergeOutputs {
                store: &merged_store,
                history: &history,
            });
            let r = wb::cmd_dedup(
                &store,
                &cfg.table,
                threshold.unwrap_or(cfg.dedup_threshold),
                &out,
                merge,
            )?;
            emit(json, &r, wb::render_dedup);
        }
        Command::Simulate {
            network,
            scenario,
            seed,
            kb,
            metrics,
            json,
        } => {
            let network = need(network, &cfg.network, "network config")?;
            let scenario = need(scenario, &cfg.scenario, "scenario")?;
            let kb = kb.or(cfg.network_kb.clone());
            let r = wb::cmd_simulate(&network, &scenario, seed, kb.as_deref().map(Path::new), &metrics)?;
            emit(json, &r, wb::render_sim);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("fuzzloc: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
