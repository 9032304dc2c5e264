//! Experiment runner: per-topology pipelines over seeds, replica budgets, and
//! solvers, with CSV reports for utilization distributions, costs, and
//! runtimes.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::Path as FsPath;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::costmodel::CostFunctionSet;
use crate::exact::{solve_ra_exact, solve_te_exact, ExactError, SearchBudget};
use crate::ga::{run_ra_ga, run_rr_ga, run_te_ga, GaError, GaParams};
use crate::rfpa::{run_rfpa, RfpaError};
use crate::solution::{
    accumulate_loads, validate, LoadLedger, RaSolution, SolutionDocument, SolutionError,
    TeSolution, ValidateOptions,
};
use crate::topology::{Network, NodeId, TopologyError};
use crate::traffic::{
    build_service_chains, generate_background_traffic, Demand, ServiceChain, TrafficError,
    TrafficProfile,
};

/// Node budget for the in-pipeline background-routing solve; exceeding it
/// falls back to the genetic stage. Node-based so re-runs are reproducible.
const TE_EXACT_NODE_BUDGET: u64 = 5_000_000;
/// Effectively unlimited wall clock: budgets are enforced via node counts so
/// that identical runs explore identical trees.
const DETERMINISTIC_TIME_LIMIT: Duration = Duration::from_secs(365 * 24 * 3600);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Exact,
    Ga,
    Rfpa,
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SolverKind::Exact => f.write_str("exact"),
            SolverKind::Ga => f.write_str("ga"),
            SolverKind::Rfpa => f.write_str("rfpa"),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ExperimentConfig {
    pub topology_path: String,
    #[serde(default)]
    pub capacity_override: Option<f64>,
    pub traffic_profile: TrafficProfile,
    pub chain_count: usize,
    pub vnfs_per_chain: usize,
    pub r_max_sweep: Vec<usize>,
    pub solvers: Vec<SolverKind>,
    #[serde(default)]
    pub ga_params: GaParams,
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub output_dir: Option<String>,
    #[serde(default = "default_paths_per_pair")]
    pub paths_per_pair: usize,
    #[serde(default)]
    pub max_hops: Option<usize>,
    #[serde(default = "default_exact_nodes")]
    pub exact_node_budget: u64,
}

fn default_paths_per_pair() -> usize {
    5
}

fn default_exact_nodes() -> u64 {
    200_000_000
}

impl ExperimentConfig {
    pub fn check(&self) -> Result<(), HarnessError> {
        if self.r_max_sweep.is_empty() {
            return Err(HarnessError::Config("rMaxSweep must be non-empty".into()));
        }
        if self.seeds.is_empty() {
            return Err(HarnessError::Config("seeds must be non-empty".into()));
        }
        if self.solvers.is_empty() {
            return Err(HarnessError::Config("solvers must be non-empty".into()));
        }
        Ok(())
    }
}

/// One solver run on one seed and replica budget.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RunRecord {
    pub topology: String,
    pub node_count: usize,
    pub solver: SolverKind,
    pub r_max: usize,
    pub seed: u64,
    pub cost: f64,
    pub replica_counts: Vec<usize>,
    pub per_link_utilization: Vec<f64>,
    pub elapsed_seconds: f64,
    pub proven_optimal: bool,
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error("io error on `{path}`: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error(transparent)]
    Traffic(#[from] TrafficError),
    #[error(transparent)]
    Exact(#[from] ExactError),
    #[error(transparent)]
    Ga(#[from] GaError),
    #[error(transparent)]
    Rfpa(#[from] RfpaError),
    #[error(transparent)]
    Solution(#[from] SolutionError),
    #[error("solver {solver} produced an invalid solution (seed {seed}, rMax {r_max}): {detail}")]
    InvalidSolverOutput {
        solver: SolverKind,
        seed: u64,
        r_max: usize,
        detail: String,
    },
    #[error("invalid config JSON: {0}")]
    Json(#[from] serde_json::Error),
}

fn read_file(path: &str) -> Result<String, HarnessError> {
    fs::read_to_string(path).map_err(|source| HarnessError::Io {
        path: path.into(),
        source,
    })
}

pub fn load_config(path: &str) -> Result<(ExperimentConfig, String), HarnessError> {
    let raw = read_file(path)?;
    let cfg: ExperimentConfig = serde_json::from_str(&raw)?;
    cfg.check()?;
    Ok((cfg, raw))
}

/// Distinct deterministic RNG streams per (seed, purpose).
pub fn subseed(seed: u64, tag: u64) -> u64 {
    let mut x = seed
        .wrapping_mul(0x9e3779b97f4a7c15)
        .wrapping_add(tag.wrapping_mul(0xbf58476d1ce4e5b9));
    x ^= x >> 30;
    x = x.wrapping_mul(0xbf58476d1ce4e5b9);
    x ^= x >> 27;
    x
}

/// Everything one seed's pipeline shares across its solver cells.
pub struct SeedContext {
    pub seed: u64,
    pub net: Network,
    pub bg_demands: Vec<Demand>,
    pub chains: Vec<ServiceChain>,
    pub te: TeSolution,
    pub te_cost: f64,
    pub te_proven: bool,
    pub background: LoadLedger,
}

/// Load a topology and prepare the traffic, catalog, and background-routing
/// stage for one seed. The background stage solves exactly when the instance
/// fits the node budget and falls back to the genetic router otherwise.
pub fn prepare_seed(
    cfg: &ExperimentConfig,
    topology_text: &str,
    seed: u64,
) -> Result<SeedContext, HarnessError> {
    let net = Network::parse_sndlib(topology_text, cfg.capacity_override)?;
    let mut profile = cfg.traffic_profile.clone();
    profile.seed = subseed(seed, 1);
    let bg_demands = generate_background_traffic(&net, &profile)?;
    let chains = build_service_chains(
        &net,
        cfg.chain_count,
        cfg.vnfs_per_chain,
        &profile,
        subseed(seed, 2),
    )?;

    let mut pairs: Vec<(NodeId, NodeId)> = bg_demands
        .iter()
        .map(|d| (d.source, d.destination))
        .collect();
    for chain in &chains {
        for origin in 0..net.node_count() {
            if NodeId(origin) != chain.egress {
                pairs.push((NodeId(origin), chain.egress));
            }
        }
    }
    let max_hops = cfg.max_hops.unwrap_or_else(|| net.default_max_hops());
    let (net, _warnings) = net.build_path_catalog(&pairs, cfg.paths_per_pair, max_hops);

    let te_budget = SearchBudget {
        max_nodes: TE_EXACT_NODE_BUDGET,
        time_limit: DETERMINISTIC_TIME_LIMIT,
        optimality_required: false,
    };
    let (te, te_cost, te_proven) = match solve_te_exact(&net, &CostFunctionSet::default_set(), &bg_demands, te_budget) {
        Ok(res) if res.proven_optimal => (res.solution, res.cost, true),
        Ok(_) | Err(ExactError::BudgetExhausted) => {
            let params = cfg.ga_params.clone().with_seed(subseed(seed, 3));
            let (te, cost, _) =
                run_te_ga(&net, &CostFunctionSet::default_set(), &bg_demands, &params)?;
            (te, cost, false)
        }
        Err(other) => return Err(other.into()),
    };
    let background = accumulate_loads(&net, &te, &bg_demands, None, &[])?;
    Ok(SeedContext {
        seed,
        net,
        bg_demands,
        chains,
        te,
        te_cost,
        te_proven,
        background,
    })
}

/// Run one solver cell on a prepared seed. Returns the record and the full
/// solution for serialization.
pub fn run_cell(
    cfg: &ExperimentConfig,
    ctx: &SeedContext,
    topology_name: &str,
    solver: SolverKind,
    r_max: usize,
) -> Result<(RunRecord, RaSolution), HarnessError> {
    let set = CostFunctionSet::default_set();
    let chains: Vec<ServiceChain> = ctx
        .chains
        .iter()
        .map(|c| c.clone().with_r_max(r_max))
        .collect();
    let started = Instant::now();
    let (ra, cost, replica_counts, proven) = match solver {
        SolverKind::Exact => {
            let budget = SearchBudget {
                max_nodes: cfg.exact_node_budget,
                time_limit: DETERMINISTIC_TIME_LIMIT,
                optimality_required: false,
            };
            let res = solve_ra_exact(&ctx.net, &set, &chains, &ctx.background, budget)?;
            let replicas = res.solution.replica_counts(&chains);
            (res.solution, res.cost, replicas, res.proven_optimal)
        }
        SolverKind::Ga => {
            let params = cfg
                .ga_params
                .clone()
                .with_seed(subseed(ctx.seed, 16 + r_max as u64));
            let (base, _, _) = run_ra_ga(&ctx.net, &set, &chains, &ctx.background, &params)?;
            let (ra, cost, replicas, _) =
                run_rr_ga(&ctx.net, &set, &chains, &ctx.background, &base, &params)?;
            (ra, cost, replicas, false)
        }
        SolverKind::Rfpa => {
            let (ra, cost) = run_rfpa(
                &ctx.net,
                &set,
                &chains,
                &ctx.background,
                r_max,
                subseed(ctx.seed, 32 + r_max as u64),
            )?;
            let replicas = ra.replica_counts(&chains);
            (ra, cost, replicas, false)
        }
    };
    let elapsed = started.elapsed().as_secs_f64();

    // a violation here is a solver bug, not an experimental outcome
    let report = validate(
        &ctx.net,
        &ctx.te,
        &ctx.bg_demands,
        Some(&ra),
        &chains,
        ValidateOptions::default(),
    );
    if !report.is_ok() {
        return Err(HarnessError::InvalidSolverOutput {
            solver,
            seed: ctx.seed,
            r_max,
            detail: report
                .violations
                .iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join("; "),
        });
    }

    let ledger = accumulate_loads(&ctx.net, &ctx.te, &ctx.bg_demands, Some(&ra), &chains)?;
    let record = RunRecord {
        topology: topology_name.to_string(),
        node_count: ctx.net.node_count(),
        solver,
        r_max,
        seed: ctx.seed,
        cost,
        replica_counts,
        per_link_utilization: ledger.utilizations(&ctx.net),
        elapsed_seconds: elapsed,
        proven_optimal: proven,
    };
    Ok((record, ra))
}

fn topology_name(path: &str) -> String {
    FsPath::new(path)
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.to_string())
}

/// Run the full experiment grid. Seeds run in parallel; cell results are
/// order-normalized before emission. When `output_dir` is set, emits the
/// three CSV reports, per-cell solution JSON files, and the config echoed
/// verbatim.
pub fn run_experiment(
    cfg: &ExperimentConfig,
    raw_config: Option<&str>,
) -> Result<Vec<RunRecord>, HarnessError> {
    cfg.check()?;
    let topology_text = read_file(&cfg.topology_path)?;
    let name = topology_name(&cfg.topology_path);

    let per_seed: Vec<Result<Vec<(RunRecord, SolutionDocument)>, HarnessError>> = cfg
        .seeds
        .par_iter()
        .map(|&seed| {
            let ctx = prepare_seed(cfg, &topology_text, seed)?;
            let mut out = Vec::new();
            for &r_max in &cfg.r_max_sweep {
                for &solver in &cfg.solvers {
                    match run_cell(cfg, &ctx, &name, solver, r_max) {
                        Ok((record, ra)) => {
                            let chains: Vec<ServiceChain> = ctx
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
                            out.push((record, doc));
                        }
                        Err(HarnessError::Exact(ExactError::BudgetExhausted)) => {
                            eprintln!(
                                "warning: exact solver budget exhausted on {name} \
                                 (seed {seed}, rMax {r_max}); cell skipped"
                            );
                        }
                        Err(err) => return Err(err),
                    }
                }
            }
            Ok(out)
        })
        .collect();

    let mut records = Vec::new();
    let mut documents = Vec::new();
    for result in per_seed {
        for (record, doc) in result? {
            records.push(record);
            documents.push(doc);
        }
    }
    let mut order: Vec<usize> = (0..records.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = &records[a];
        let rb = &records[b];
        (ra.solver, ra.r_max, ra.seed).cmp(&(rb.solver, rb.r_max, rb.seed))
    });
    let records: Vec<RunRecord> = order.iter().map(|&i| records[i].clone()).collect();
    let documents: Vec<SolutionDocument> = order.into_iter().map(|i| documents[i].clone()).collect();

    if let Some(dir) = &cfg.output_dir {
        write_outputs(dir, cfg, raw_config, &records, &documents)?;
    }
    Ok(records)
}

fn write_outputs(
    dir: &str,
    cfg: &ExperimentConfig,
    raw_config: Option<&str>,
    records: &[RunRecord],
    documents: &[SolutionDocument],
) -> Result<(), HarnessError> {
    let io_err = |path: &FsPath, source: std::io::Error| HarnessError::Io {
        path: path.to_string_lossy().into_owned(),
        source,
    };
    let root = FsPath::new(dir);
    let solutions = root.join("solutions");
    fs::create_dir_all(&solutions).map_err(|e| io_err(&solutions, e))?;

    let echo = match raw_config {
        Some(raw) => raw.to_string(),
        None => serde_json::to_string_pretty(cfg)?,
    };
    let write = |path: std::path::PathBuf, content: &str| -> Result<(), HarnessError> {
        fs::write(&path, content).map_err(|e| io_err(&path, e))
    };
    write(root.join("config.json"), &echo)?;
    write(root.join("utilization_cdf.csv"), &emit_utilization_cdf(records))?;
    write(root.join("cost_table.csv"), &emit_cost_table(records))?;
    write(root.join("runtime_table.csv"), &emit_runtime_table(records))?;
    for (record, doc) in records.iter().zip(documents) {
        let file = solutions.join(format!(
            "{}-r{}-s{}.json",
            record.solver, record.r_max, record.seed
        ));
        write(file, &serde_json::to_string_pretty(doc)?)?;
    }
    Ok(())
}

const CDF_BIN_WIDTH: f64 = 0.05;
const CDF_BIN_COUNT: usize = 24; // covers [0, 1.2); higher loads clamp into the last bin

/// Link-utilization histogram per (solver, rMax): bins of width 0.05 over
/// [0, 1.2], fraction of link observations per bin, aggregated over seeds.
pub fn emit_utilization_cdf(records: &[RunRecord]) -> String {
    let mut out = String::from("solver,rMax,utilizationBin,linkFraction\n");
    let mut groups: BTreeMap<(SolverKind, usize), Vec<&RunRecord>> = BTreeMap::new();
    for r in records {
        groups.entry((r.solver, r.r_max)).or_default().push(r);
    }
    for ((solver, r_max), group) in groups {
        let mut counts = [0usize; CDF_BIN_COUNT];
        let mut total = 0usize;
        for record in group {
            for &u in &record.per_link_utilization {
                let bin = ((u / CDF_BIN_WIDTH).floor() as usize).min(CDF_BIN_COUNT - 1);
                counts[bin] += 1;
                total += 1;
            }
        }
        for (bin, &count) in counts.iter().enumerate() {
            let fraction = if total == 0 {
                0.0
            } else {
                count as f64 / total as f64
            };
            out.push_str(&format!(
                "{solver},{r_max},{:.2},{:.6}\n",
                bin as f64 * CDF_BIN_WIDTH,
                fraction
            ));
        }
    }
    out
}

/// Mean/σ cost and mean replica count per (topology, solver, rMax),
/// aggregated over seeds.
pub fn emit_cost_table(records: &[RunRecord]) -> String {
    let mut out = String::from("topology,solver,rMax,meanCost,stdCost,meanReplicas\n");
    let mut groups: BTreeMap<(String, SolverKind, usize), Vec<&RunRecord>> = BTreeMap::new();
    for r in records {
        groups
            .entry((r.topology.clone(), r.solver, r.r_max))
            .or_default()
            .push(r);
    }
    for ((topology, solver, r_max), group) in groups {
        let costs: Vec<f64> = group.iter().map(|r| r.cost).collect();
        let mean = costs.iter().sum::<f64>() / costs.len() as f64;
        let var = costs.iter().map(|c| (c - mean) * (c - mean)).sum::<f64>() / costs.len() as f64;
        let replicas: f64 = group
            .iter()
            .map(|r| r.replica_counts.iter().sum::<usize>() as f64)
            .sum::<f64>()
            / group.len() as f64;
        out.push_str(&format!(
            "{topology},{solver},{r_max},{mean:.6},{:.6},{replicas:.6}\n",
            var.sqrt()
        ));
    }
    out
}

/// Mean wall time per (topology, solver, rMax), sorted by topology size.
pub fn emit_runtime_table(records: &[RunRecord]) -> String {
    let mut out = String::from("topology,nodeCount,solver,rMax,meanElapsed\n");
    let mut groups: BTreeMap<(usize, String, SolverKind, usize), Vec<&RunRecord>> = BTreeMap::new();
    for r in records {
        groups
            .entry((r.node_count, r.topology.clone(), r.solver, r.r_max))
            .or_default()
            .push(r);
    }
    for ((node_count, topology, solver, r_max), group) in groups {
        let mean = group.iter().map(|r| r.elapsed_seconds).sum::<f64>() / group.len() as f64;
        out.push_str(&format!(
            "{topology},{node_count},{solver},{r_max},{mean:.6}\n"
        ));
    }
    out
}
