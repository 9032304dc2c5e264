use std::process::ExitCode;

use clap::{Parser, Subcommand};

use vnfplace::costmodel::CostFunctionSet;
use vnfplace::exact::ExactError;
use vnfplace::ga::GaError;
use vnfplace::harness::{
    self, load_config, prepare_seed, run_cell, run_experiment, ExperimentConfig, HarnessError,
    SolverKind,
};
use vnfplace::rfpa::RfpaError;
use vnfplace::solution::{validate, SolutionDocument, ValidateOptions};

#[derive(Parser)]
#[command(
    name = "vnfplace",
    about = "Place service-chain VNFs and replicas to balance network load",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Route the background traffic of a config's first (or given) seed
    SolveTe {
        /// Experiment config JSON
        #[arg(long)]
        config: String,
        /// Override the config's topology file
        #[arg(long)]
        topology: Option<String>,
        /// Seed to generate traffic for (default: first config seed)
        #[arg(long)]
        seed: Option<u64>,
        /// Write the solution JSON here
        #[arg(long)]
        out: Option<String>,
    },
    /// Run the full pipeline for one solver cell and print its cost
    SolveRa {
        #[arg(long)]
        config: String,
        #[arg(long)]
        topology: Option<String>,
        /// exact, ga, or rfpa (default: first config solver)
        #[arg(long)]
        solver: Option<String>,
        /// Replica budget (default: first entry of the config sweep)
        #[arg(long)]
        rmax: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<String>,
    },
    /// Run the whole experiment grid and emit CSV reports
    Experiment {
        #[arg(long)]
        config: String,
        /// Override the config's outputDir
        #[arg(long)]
        out: Option<String>,
    },
    /// Check a stored solution against the constraint system
    Validate {
        #[arg(long)]
        config: String,
        /// Solution JSON produced by solve-te/solve-ra/experiment
        #[arg(long)]
        solution: String,
        #[arg(long)]
        topology: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            if is_infeasibility(&err) {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

fn is_infeasibility(err: &HarnessError) -> bool {
    matches!(
        err,
        HarnessError::Exact(
            ExactError::InfeasibleChain(_)
                | ExactError::NoCandidatePath(_)
                | ExactError::BudgetExhausted
        ) | HarnessError::Ga(GaError::NoAdmissiblePath(_) | GaError::NoCandidatePath(_))
            | HarnessError::Rfpa(RfpaError::PlacementExhausted { .. })
    )
}

fn load(config: &str, topology: Option<String>) -> Result<(ExperimentConfig, String), HarnessError> {
    let (mut cfg, raw) = load_config(config)?;
    if let Some(t) = topology {
        cfg.topology_path = t;
    }
    Ok((cfg, raw))
}

fn run(cli: Cli) -> Result<ExitCode, HarnessError> {
    match cli.command {
        Command::SolveTe {
            config,
            topology,
            seed,
            out,
        } => {
            let (cfg, _) = load(&config, topology)?;
            let seed = seed.unwrap_or(cfg.seeds[0]);
            let topology_text =
                std::fs::read_to_string(&cfg.topology_path).map_err(|source| HarnessError::Io {
                    path: cfg.topology_path.clone(),
                    source,
                })?;
            let ctx = prepare_seed(&cfg, &topology_text, seed)?;
            println!(
                "te cost {} ({})",
                ctx.te_cost,
                if ctx.te_proven {
                    "proven optimal"
                } else {
                    "genetic fallback"
                }
            );
            if let Some(path) = out {
                let doc = SolutionDocument::from_solutions(
                    &ctx.net,
                    &ctx.te,
                    &ctx.bg_demands,
                    None,
                    &[],
                    ctx.te_cost,
                )?;
                write_json(&path, &doc)?;
                println!("wrote {path}");
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::SolveRa {
            config,
            topology,
            solver,
            rmax,
            seed,
            out,
        } => {
            let (cfg, _) = load(&config, topology)?;
            let solver = match solver.as_deref() {
                None => *cfg.solvers.first().ok_or_else(|| {
                    HarnessError::Config("config declares no solvers".into())
                })?,
                Some("exact") => SolverKind::Exact,
                Some("ga") => SolverKind::Ga,
                Some("rfpa") => SolverKind::Rfpa,
                Some(other) => {
                    return Err(HarnessError::Config(format!(
                        "unknown solver `{other}` (expected exact, ga, or rfpa)"
                    )))
                }
            };
            let r_max = rmax.unwrap_or(cfg.r_max_sweep[0]);
            let seed = seed.unwrap_or(cfg.seeds[0]);
            let topology_text =
                std::fs::read_to_string(&cfg.topology_path).map_err(|source| HarnessError::Io {
                    path: cfg.topology_path.clone(),
                    source,
                })?;
            let ctx = prepare_seed(&cfg, &topology_text, seed)?;
            let name = std::path::Path::new(&cfg.topology_path)
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            let (record, ra) = run_cell(&cfg, &ctx, &name, solver, r_max)?;
            println!(
                "{} rMax {} seed {}: cost {}{}",
                solver,
                r_max,
                seed,
                record.cost,
                if record.proven_optimal {
                    " (proven optimal)"
                } else {
                    ""
                }
            );
            if let Some(path) = out {
                let chains: Vec<_> = ctx
                    .chains
                    .iter()
                    .map(|c| c.clone().with_r_max(r_max))
                    .collect();
                let doc = SolutionDocument::from_solutions(
                    &ctx.net,
                    &ctx.te,
                    &ctx.bg_demands,
                    Some(&ra),
                    &chains,
                    record.cost,
                )?;
                write_json(&path, &doc)?;
                println!("wrote {path}");
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Experiment { config, out } => {
            let (mut cfg, raw) = load_config(&config)?;
            if let Some(dir) = out {
                cfg.output_dir = Some(dir);
            }
            let records = run_experiment(&cfg, Some(&raw))?;
            println!("{} records", records.len());
            if cfg.output_dir.is_none() {
                print!("{}", harness::emit_cost_table(&records));
            } else {
                println!("outputs in {}", cfg.output_dir.unwrap());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Validate {
            config,
            solution,
            topology,
            seed,
        } => {
            let (cfg, _) = load(&config, topology)?;
            let seed = seed.unwrap_or(cfg.seeds[0]);
            let topology_text =
                std::fs::read_to_string(&cfg.topology_path).map_err(|source| HarnessError::Io {
                    path: cfg.topology_path.clone(),
                    source,
                })?;
            let ctx = prepare_seed(&cfg, &topology_text, seed)?;
            let raw = std::fs::read_to_string(&solution).map_err(|source| HarnessError::Io {
                path: solution.clone(),
                source,
            })?;
            let doc: SolutionDocument = serde_json::from_str(&raw)?;
            let (te, ra) = doc.resolve(&ctx.net)?;
            // the stored document's replica budget is whatever the run used;
            // infer it from the widest selection so the check is self-consistent
            let max_selected = ra
                .as_ref()
                .map(|r| {
                    r.chain_paths
                        .values()
                        .map(|p| p.len())
                        .max()
                        .unwrap_or(1)
                })
                .unwrap_or(1);
            let chains: Vec<_> = ctx
                .chains
                .iter()
                .map(|c| c.clone().with_r_max(max_selected.saturating_sub(1)))
                .collect();
            let report = validate(
                &ctx.net,
                &te,
                &ctx.bg_demands,
                ra.as_ref(),
                &chains,
                ValidateOptions::default(),
            );
            // cross-check the recorded cost when chain routing is present
            if let Some(ra) = &ra {
                let recomputed = vnfplace::solution::objective(
                    &ctx.net,
                    &CostFunctionSet::default_set(),
                    &te,
                    &ctx.bg_demands,
                    Some(ra),
                    &chains,
                )?;
                if (recomputed - doc.cost).abs() > 1e-6 {
                    println!(
                        "note: stored cost {} differs from recomputed {recomputed}",
                        doc.cost
                    );
                }
            }
            if report.is_ok() {
                println!("solution is feasible");
                Ok(ExitCode::SUCCESS)
            } else {
                for violation in &report.violations {
                    println!("violation: {violation}");
                }
                Ok(ExitCode::from(2))
            }
        }
    }
}

fn write_json<T: serde::Serialize>(path: &str, value: &T) -> Result<(), HarnessError> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text).map_err(|source| HarnessError::Io {
        path: path.into(),
        source,
    })
}
