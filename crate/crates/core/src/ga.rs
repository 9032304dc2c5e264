//! Three-stage genetic algorithm: background routing, placement, and
//! incremental replication.
//!
//! All stages share one integer-vector engine with tournament selection,
//! one-point crossover, per-gene mutation, and elitism. Decoding repairs
//! genes onto the nearest legal choice instead of penalizing, so fitness
//! always reflects a valid network state; an individual only becomes
//! infeasible when a chain has no legal decoding at all under the nodes
//! already claimed, and such individuals never win.

use std::collections::BTreeSet;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::costmodel::CostFunctionSet;
use crate::solution::{
    objective, objective_with_background, LoadLedger, RaSolution, SolutionError, TeSolution,
};
use crate::topology::{Network, NodeId, Path};
use crate::traffic::{Demand, ServiceChain};

/// Cost plateaus are treated as non-improvements in the replication loop.
const IMPROVEMENT_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct GaParams {
    pub population_size: usize,
    pub generations: usize,
    pub tournament_size: usize,
    pub crossover_rate: f64,
    /// Per-gene mutation probability; `None` uses 1 / chromosome length.
    pub mutation_rate: Option<f64>,
    pub elite_count: usize,
    pub seed: u64,
}

impl Default for GaParams {
    fn default() -> Self {
        GaParams {
            population_size: 100,
            generations: 200,
            tournament_size: 3,
            crossover_rate: 0.9,
            mutation_rate: None,
            elite_count: 2,
            seed: 0,
        }
    }
}

impl GaParams {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    fn check(&self) -> Result<(), GaError> {
        if self.population_size < 2 {
            return Err(GaError::InvalidParams("populationSize must be at least 2".into()));
        }
        if self.elite_count >= self.population_size {
            return Err(GaError::InvalidParams(
                "eliteCount must be smaller than populationSize".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.crossover_rate) {
            return Err(GaError::InvalidParams("crossoverRate must be in [0, 1]".into()));
        }
        if let Some(m) = self.mutation_rate {
            if !(0.0..=1.0).contains(&m) {
                return Err(GaError::InvalidParams("mutationRate must be in [0, 1]".into()));
            }
        }
        if self.tournament_size == 0 {
            return Err(GaError::InvalidParams("tournamentSize must be at least 1".into()));
        }
        Ok(())
    }
}

/// Per-generation convergence trace: (generation, best-ever cost, population
/// mean cost).
#[derive(Debug, Clone, Default)]
pub struct GaTrace {
    pub rows: Vec<(usize, f64, f64)>,
}

impl GaTrace {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("generation,bestCost,meanCost\n");
        for (gen, best, mean) in &self.rows {
            out.push_str(&format!("{gen},{best},{mean}\n"));
        }
        out
    }
}

#[derive(Debug, Error)]
pub enum GaError {
    #[error("demand `{0}` has no candidate path in the catalog")]
    NoCandidatePath(String),
    #[error("chain `{0}` has no admissible path")]
    NoAdmissiblePath(String),
    #[error("no feasible decoding found for any individual")]
    NoFeasibleIndividual,
    #[error("invalid GA parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Solution(#[from] SolutionError),
}

// ---------------------------------------------------------------------------
// Engine
// ---------------------------------------------------------------------------

struct EngineOutcome {
    best_genes: Vec<usize>,
    trace: GaTrace,
}

/// Evolve integer chromosomes where gene i ranges over 0..ranges[i]. Fitness
/// evaluation is parallel but merged in individual order, so results depend
/// only on (ranges, params, fitness).
fn evolve<F>(ranges: &[usize], params: &GaParams, fitness: F) -> EngineOutcome
where
    F: Fn(&[usize]) -> f64 + Sync,
{
    debug_assert!(ranges.iter().all(|&r| r >= 1));
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mutation = params
        .mutation_rate
        .unwrap_or_else(|| 1.0 / ranges.len().max(1) as f64);

    let mut population: Vec<Vec<usize>> = (0..params.population_size)
        .map(|_| {
            ranges
                .iter()
                .map(|&r| rng.random_range(0..r))
                .collect::<Vec<usize>>()
        })
        .collect();

    let mut best_genes = population[0].clone();
    let mut best_fitness = f64::INFINITY;
    let mut trace = GaTrace::default();

    for gen in 0..params.generations {
        let scores: Vec<f64> = population.par_iter().map(|ind| fitness(ind)).collect();
        for (i, &s) in scores.iter().enumerate() {
            if s < best_fitness {
                best_fitness = s;
                best_genes = population[i].clone();
            }
        }
        let finite: Vec<f64> = scores.iter().copied().filter(|s| s.is_finite()).collect();
        let mean = if finite.is_empty() {
            f64::INFINITY
        } else {
            finite.iter().sum::<f64>() / finite.len() as f64
        };
        trace.rows.push((gen, best_fitness, mean));

        if gen + 1 == params.generations {
            break;
        }

        let mut order: Vec<usize> = (0..population.len()).collect();
        order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]).then(a.cmp(&b)));

        let mut next: Vec<Vec<usize>> = order
            .iter()
            .take(params.elite_count)
            .map(|&i| population[i].clone())
            .collect();

        let tournament = |rng: &mut ChaCha8Rng| -> usize {
            let mut best = rng.random_range(0..population.len());
            for _ in 1..params.tournament_size {
                let challenger = rng.random_range(0..population.len());
                if scores[challenger]
                    .total_cmp(&scores[best])
                    .then(challenger.cmp(&best))
                    .is_lt()
                {
                    best = challenger;
                }
            }
            best
        };

        while next.len() < params.population_size {
            let p1 = tournament(&mut rng);
            let p2 = tournament(&mut rng);
            let mut child = if ranges.len() >= 2 && rng.random::<f64>() < params.crossover_rate {
                let point = rng.random_range(1..ranges.len());
                let mut c = population[p1][..point].to_vec();
                c.extend_from_slice(&population[p2][point..]);
                c
            } else {
                population[p1].clone()
            };
            for (g, &r) in child.iter_mut().zip(ranges) {
                if rng.random::<f64>() < mutation {
                    *g = rng.random_range(0..r);
                }
            }
            next.push(child);
        }
        population = next;
    }

    EngineOutcome { best_genes, trace }
}

// ---------------------------------------------------------------------------
// Background-routing stage
// ---------------------------------------------------------------------------

/// Evolve per-demand path choices against the total network cost. Any gene
/// vector decodes to a feasible assignment, so the result is always valid.
pub fn run_te_ga(
    net: &Network,
    set: &CostFunctionSet,
    demands: &[Demand],
    params: &GaParams,
) -> Result<(TeSolution, f64, GaTrace), GaError> {
    params.check()?;
    let candidates: Vec<&[Arc<Path>]> = demands
        .iter()
        .map(|d| {
            let paths = net.paths_between(d.source, d.destination);
            if paths.is_empty() {
                Err(GaError::NoCandidatePath(d.id.clone()))
            } else {
                Ok(paths)
            }
        })
        .collect::<Result<_, _>>()?;
    let ranges: Vec<usize> = candidates.iter().map(|c| c.len()).collect();
    let caps: Vec<f64> = net.links().iter().map(|l| l.capacity).collect();

    let fitness = |genes: &[usize]| -> f64 {
        let mut loads = vec![0.0; caps.len()];
        for (d, &g) in genes.iter().enumerate() {
            for &l in &candidates[d][g].links {
                loads[l.0] += demands[d].bandwidth;
            }
        }
        crate::costmodel::total_network_cost(net, set, &loads)
    };

    let outcome = evolve(&ranges, params, fitness);
    let mut te = TeSolution::default();
    for (d, demand) in demands.iter().enumerate() {
        te.assignment
            .insert(demand.id.clone(), candidates[d][outcome.best_genes[d]].clone());
    }
    let cost = objective(net, set, &te, demands, None, &[])?;
    Ok((te, cost, outcome.trace))
}

// ---------------------------------------------------------------------------
// Placement stage
// ---------------------------------------------------------------------------

/// Fixed background link costs, for incremental fitness evaluation: links
/// untouched by chain traffic keep their background cost.
struct BgContext<'a> {
    set: &'a CostFunctionSet,
    caps: Vec<f64>,
    bg: &'a [f64],
    bg_k: Vec<f64>,
    bg_cost: f64,
}

impl<'a> BgContext<'a> {
    fn new(net: &'a Network, set: &'a CostFunctionSet, bg: &'a [f64]) -> Self {
        let caps: Vec<f64> = net.links().iter().map(|l| l.capacity).collect();
        let bg_k: Vec<f64> = bg
            .iter()
            .enumerate()
            .map(|(i, &l)| set.link_cost(l / caps[i]))
            .collect();
        let mut sorted = bg_k.clone();
        sorted.retain(|&k| k != 0.0);
        sorted.sort_by(f64::total_cmp);
        let bg_cost = sorted.iter().sum();
        BgContext {
            set,
            caps,
            bg,
            bg_k,
            bg_cost,
        }
    }

    /// Total cost with per-link additions (unmerged) on top of the background.
    fn cost_with(&self, adds: &mut Vec<(usize, f64)>) -> f64 {
        adds.sort_by_key(|&(l, _)| l);
        adds.dedup_by(|b, a| {
            if a.0 == b.0 {
                a.1 += b.1;
                true
            } else {
                false
            }
        });
        let mut cost = self.bg_cost;
        for &(l, add) in adds.iter() {
            cost += self.set.link_cost((self.bg[l] + add) / self.caps[l]) - self.bg_k[l];
        }
        cost
    }
}

/// Candidate paths for a chain: catalog paths reaching its egress with room
/// for every VNF.
fn chain_candidates(net: &Network, chain: &ServiceChain) -> Result<Vec<Arc<Path>>, GaError> {
    let paths: Vec<Arc<Path>> = net
        .paths_to(chain.egress)
        .into_iter()
        .filter(|p| p.links.len() + 1 >= chain.vnf_count())
        .collect();
    if paths.is_empty() {
        return Err(GaError::NoAdmissiblePath(chain.id.clone()));
    }
    Ok(paths)
}

/// One chain's decoded placement: the chosen path and one host position per
/// VNF, in sequence order.
#[derive(Clone)]
struct ChainPick {
    path_idx: usize,
    positions: Vec<usize>,
}

/// Place every VNF of a chain on `path`, steering by the position genes and
/// repairing collisions to the nearest legal later slot. The anchor sits at
/// the path origin (the chain's demands start where its first VNF lives).
/// Returns the chosen positions and marks their nodes used.
fn place_on_path(
    path: &Path,
    vnf_count: usize,
    pos_genes: &[usize],
    used: &mut u128,
    // nodes additionally barred for replicable hosts (other selected paths)
    barred_for_replicas: u128,
    replicable: &[bool],
) -> Option<Vec<usize>> {
    let len = path.links.len();
    let mut cursor: i64 = -1;
    let mut positions = Vec::with_capacity(vnf_count);
    let mut claimed = 0u128;
    for v in 0..vnf_count {
        let low = (cursor + 1) as usize;
        let high = if v == 0 {
            0 // anchor at the origin
        } else {
            len - (vnf_count - 1 - v)
        };
        if low > high {
            return None;
        }
        let span = high - low + 1;
        let desired = low + pos_genes[v].min(span - 1);
        let mut found = None;
        for step in 0..span {
            let pos = low + (desired - low + step) % span;
            let node = path.nodes[pos].0;
            let bit = 1u128 << node;
            if *used & bit != 0 || claimed & bit != 0 {
                continue;
            }
            if replicable[v] && barred_for_replicas & bit != 0 {
                continue;
            }
            found = Some(pos);
            break;
        }
        let pos = found?;
        claimed |= 1u128 << path.nodes[pos].0;
        positions.push(pos);
        cursor = pos as i64;
    }
    *used |= claimed;
    Some(positions)
}

fn picks_to_solution(
    chains: &[ServiceChain],
    candidates: &[Vec<Arc<Path>>],
    picks: &[ChainPick],
) -> RaSolution {
    let mut ra = RaSolution::default();
    for (ci, chain) in chains.iter().enumerate() {
        let path = candidates[ci][picks[ci].path_idx].clone();
        ra.chain_paths.insert(chain.id.clone(), vec![path.clone()]);
        for demand in &chain.demands {
            ra.demand_path
                .insert((chain.id.clone(), demand.id.clone()), path.clone());
        }
        for (v, &pos) in picks[ci].positions.iter().enumerate() {
            ra.placements
                .insert((chain.id.clone(), v), BTreeSet::from([path.nodes[pos]]));
        }
    }
    ra
}

/// Select one admissible path per chain and in-order placements on it,
/// minimizing total cost over the fixed background. Gene layout per chain:
/// [path index, position index per VNF].
pub fn run_ra_ga(
    net: &Network,
    set: &CostFunctionSet,
    chains: &[ServiceChain],
    background: &LoadLedger,
    params: &GaParams,
) -> Result<(RaSolution, f64, GaTrace), GaError> {
    params.check()?;
    let candidates: Vec<Vec<Arc<Path>>> = chains
        .iter()
        .map(|c| chain_candidates(net, c))
        .collect::<Result<_, _>>()?;
    let ctx = BgContext::new(net, set, &background.background);

    // ranges: per chain [paths, max position span per VNF]
    let mut ranges = Vec::new();
    let mut offsets = Vec::new();
    for (ci, chain) in chains.iter().enumerate() {
        offsets.push(ranges.len());
        ranges.push(candidates[ci].len());
        let max_span = candidates[ci]
            .iter()
            .map(|p| p.links.len() + 1)
            .max()
            .unwrap_or(1);
        for _ in 0..chain.vnf_count() {
            ranges.push(max_span);
        }
    }

    let decode = |genes: &[usize]| -> Option<Vec<ChainPick>> {
        let mut used = 0u128;
        let mut picks = Vec::with_capacity(chains.len());
        for (ci, chain) in chains.iter().enumerate() {
            let base = offsets[ci];
            let path_gene = genes[base];
            let pos_genes = &genes[base + 1..base + 1 + chain.vnf_count()];
            let replicable: Vec<bool> = chain.vnfs.iter().map(|v| v.replicable).collect();
            let n = candidates[ci].len();
            let mut picked = None;
            for offset in 0..n {
                let path_idx = (path_gene + offset) % n;
                let path = &candidates[ci][path_idx];
                let mut trial_used = used;
                if let Some(positions) = place_on_path(
                    path,
                    chain.vnf_count(),
                    pos_genes,
                    &mut trial_used,
                    0,
                    &replicable,
                ) {
                    used = trial_used;
                    picked = Some(ChainPick {
                        path_idx,
                        positions,
                    });
                    break;
                }
            }
            picks.push(picked?);
        }
        Some(picks)
    };

    let fitness = |genes: &[usize]| -> f64 {
        match decode(genes) {
            None => f64::INFINITY,
            Some(picks) => {
                let mut adds: Vec<(usize, f64)> = Vec::new();
                for (ci, chain) in chains.iter().enumerate() {
                    let total: f64 = chain.demands.iter().map(|d| d.bandwidth).sum();
                    if total == 0.0 {
                        continue;
                    }
                    for &l in &candidates[ci][picks[ci].path_idx].links {
                        adds.push((l.0, total));
                    }
                }
                ctx.cost_with(&mut adds)
            }
        }
    };

    let outcome = evolve(&ranges, params, fitness);
    let picks = decode(&outcome.best_genes).ok_or(GaError::NoFeasibleIndividual)?;
    let ra = picks_to_solution(chains, &candidates, &picks);
    let cost = objective_with_background(net, set, background, &ra, chains)?;
    Ok((ra, cost, outcome.trace))
}


// ---------------------------------------------------------------------------
// Replication stage
// ---------------------------------------------------------------------------

/// Replication state for one chain: selected paths, hosts per VNF, and the
/// demand-to-path assignment (indices into `paths`).
#[derive(Clone)]
struct ChainState {
    paths: Vec<Arc<Path>>,
    hosts: Vec<BTreeSet<NodeId>>,
    assignment: Vec<usize>,
    replicas: usize,
}

/// One chain's decoded round: the accepted alternative path (index into the
/// round's candidate list), fresh hosts per (selected path, replicable VNF),
/// and per-demand path indices.
#[derive(Clone)]
struct RoundPick {
    alt: Option<usize>,
    /// hosts[path][slot] in replicable-VNF order; empty when falling back to
    /// the previous placement
    replica_hosts: Vec<Vec<NodeId>>,
    assignment: Vec<usize>,
}

/// Incrementally add replica sets while each round strictly improves the
/// cost. Per round, every chain with remaining budget evolves an alternative
/// path (with an explicit skip choice), fresh hosts for its replicable VNFs
/// across all its selected paths, and new path assignments for its demands;
/// anchors and other non-replicable hosts stay where the placement stage put
/// them. Stops at the first non-improving round or when every budget is
/// spent. Returns the final solution, its cost, per-chain replica counts, and
/// one trace per round.
pub fn run_rr_ga(
    net: &Network,
    set: &CostFunctionSet,
    chains: &[ServiceChain],
    background: &LoadLedger,
    base: &RaSolution,
    params: &GaParams,
) -> Result<(RaSolution, f64, Vec<usize>, Vec<GaTrace>), GaError> {
    params.check()?;
    let ctx = BgContext::new(net, set, &background.background);
    let mut incumbent = objective_with_background(net, set, background, base, chains)?;
    let mut traces = Vec::new();

    let mut states: Vec<ChainState> = chains
        .iter()
        .map(|chain| {
            let paths: Vec<Arc<Path>> =
                base.chain_paths.get(&chain.id).cloned().unwrap_or_default();
            let hosts = (0..chain.vnf_count())
                .map(|v| {
                    base.placements
                        .get(&(chain.id.clone(), v))
                        .cloned()
                        .unwrap_or_default()
                })
                .collect();
            let assignment = chain
                .demands
                .iter()
                .map(|d| {
                    base.demand_path
                        .get(&(chain.id.clone(), d.id.clone()))
                        .and_then(|p| paths.iter().position(|q| q.nodes == p.nodes))
                        .unwrap_or(0)
                })
                .collect();
            ChainState {
                paths,
                hosts,
                assignment,
                replicas: 0,
            }
        })
        .collect();

    let mut round = 0usize;
    loop {
        round += 1;
        // nodes pinned for the round: every host except the replicable hosts
        // of chains that take part (those are re-placed by the round)
        let mut eligible: Vec<usize> = Vec::new();
        let mut alt_candidates: Vec<Vec<Arc<Path>>> = vec![Vec::new(); chains.len()];
        for (ci, chain) in chains.iter().enumerate() {
            if states[ci].replicas >= chain.r_max
                || !chain.vnfs.iter().any(|v| v.replicable)
                || states[ci].paths.is_empty()
            {
                continue;
            }
            let shared_hosts: Vec<NodeId> = chain
                .vnfs
                .iter()
                .filter(|v| !v.replicable)
                .filter_map(|v| states[ci].hosts[v.index].iter().next().copied())
                .collect();
            // alternative paths must carry every non-replicable host and
            // differ from the already-selected paths
            let cands: Vec<Arc<Path>> = net
                .paths_to(chain.egress)
                .into_iter()
                .filter(|p| {
                    p.links.len() + 1 >= chain.vnf_count()
                        && shared_hosts.iter().all(|n| p.nodes.contains(n))
                        && !states[ci].paths.iter().any(|q| q.nodes == p.nodes)
                })
                .collect();
            if !cands.is_empty() {
                eligible.push(ci);
                alt_candidates[ci] = cands;
            }
        }
        if eligible.is_empty() {
            break;
        }

        let mut pinned: u128 = 0;
        for (ci, chain) in chains.iter().enumerate() {
            for vnf in &chain.vnfs {
                if !vnf.replicable || !eligible.contains(&ci) {
                    for &n in &states[ci].hosts[vnf.index] {
                        pinned |= 1u128 << n.0;
                    }
                }
            }
        }

        // gene layout per eligible chain: [alt path (last value = skip),
        // position per (selected path incl. alt, replicable VNF), path per demand]
        let mut ranges = Vec::new();
        let mut offsets = vec![0usize; chains.len()];
        for &ci in &eligible {
            let chain = &chains[ci];
            offsets[ci] = ranges.len();
            ranges.push(alt_candidates[ci].len() + 1);
            let max_span = states[ci]
                .paths
                .iter()
                .chain(alt_candidates[ci].iter())
                .map(|p| p.links.len() + 1)
                .max()
                .unwrap_or(1);
            let replicable_count = chain.vnfs.iter().filter(|v| v.replicable).count();
            for _ in 0..(states[ci].paths.len() + 1) * replicable_count {
                ranges.push(max_span);
            }
            for _ in 0..chain.demands.len() {
                ranges.push(states[ci].paths.len() + 1);
            }
        }

        let states_ref = &states;
        let eligible_ref = &eligible;
        let alt_ref = &alt_candidates;
        let offsets_ref = &offsets;

        let decode = |genes: &[usize]| -> Vec<RoundPick> {
            let mut used = pinned;
            let mut picks: Vec<RoundPick> = states_ref
                .iter()
                .map(|s| RoundPick {
                    alt: None,
                    replica_hosts: Vec::new(),
                    assignment: s.assignment.clone(),
                })
                .collect();
            for &ci in eligible_ref {
                let chain = &chains[ci];
                let state = &states_ref[ci];
                let base_off = offsets_ref[ci];
                let replicable_count = chain.vnfs.iter().filter(|v| v.replicable).count();
                let n_paths = state.paths.len();
                let alt_gene = genes[base_off];
                let pos_genes =
                    &genes[base_off + 1..base_off + 1 + (n_paths + 1) * replicable_count];
                let assign_genes = &genes[base_off + 1 + (n_paths + 1) * replicable_count
                    ..base_off + 1 + (n_paths + 1) * replicable_count + chain.demands.len()];
                let n_alt = alt_ref[ci].len();

                // try the gene's alternative first, then the rest, then no
                // alternative at all; fall back to the previous hosts if no
                // re-placement works
                let mut outcome: Option<(Option<usize>, Vec<Vec<NodeId>>)> = None;
                let mut options: Vec<Option<usize>> = Vec::with_capacity(n_alt + 1);
                if alt_gene < n_alt {
                    for offset in 0..n_alt {
                        options.push(Some((alt_gene + offset) % n_alt));
                    }
                }
                options.push(None);
                for alt in options {
                    let mut trial_used = used;
                    if let Some(hosts) = replace_chain_hosts(
                        chain,
                        state,
                        alt.map(|i| &alt_ref[ci][i]),
                        pos_genes,
                        &mut trial_used,
                    ) {
                        used = trial_used;
                        outcome = Some((alt, hosts));
                        break;
                    }
                }
                let (alt, replica_hosts) = match outcome {
                    Some(v) => v,
                    None => {
                        // keep the previous placement verbatim
                        for vnf in chain.vnfs.iter().filter(|v| v.replicable) {
                            for &n in &state.hosts[vnf.index] {
                                used |= 1u128 << n.0;
                            }
                        }
                        (None, Vec::new())
                    }
                };
                let path_count = n_paths + usize::from(alt.is_some());
                picks[ci].alt = alt;
                picks[ci].replica_hosts = replica_hosts;
                picks[ci].assignment = assign_genes.iter().map(|&g| g % path_count).collect();
            }
            picks
        };

        let fitness = |genes: &[usize]| -> f64 {
            let picks = decode(genes);
            let mut adds: Vec<(usize, f64)> = Vec::new();
            for (ci, chain) in chains.iter().enumerate() {
                let state = &states_ref[ci];
                let alt_path = picks[ci].alt.map(|i| &alt_ref[ci][i]);
                let path_count = state.paths.len() + usize::from(alt_path.is_some());
                let mut per_path_bw = vec![0.0; path_count];
                for (d, demand) in chain.demands.iter().enumerate() {
                    let idx = picks[ci].assignment[d].min(path_count - 1);
                    per_path_bw[idx] += demand.bandwidth;
                }
                for (pi, &bw) in per_path_bw.iter().enumerate() {
                    if bw == 0.0 {
                        continue;
                    }
                    let path = if pi < state.paths.len() {
                        &state.paths[pi]
                    } else {
                        alt_path.unwrap()
                    };
                    for &l in &path.links {
                        adds.push((l.0, bw));
                    }
                }
            }
            ctx.cost_with(&mut adds)
        };

        let round_params = GaParams {
            seed: params
                .seed
                .wrapping_add(0x9e3779b97f4a7c15u64.wrapping_mul(round as u64)),
            ..params.clone()
        };
        let outcome = evolve(&ranges, &round_params, fitness);
        let picks = decode(&outcome.best_genes);

        let mut next_states = states.clone();
        for &ci in &eligible {
            let chain = &chains[ci];
            if !picks[ci].replica_hosts.is_empty() {
                let all_paths: Vec<Arc<Path>> = states[ci]
                    .paths
                    .iter()
                    .cloned()
                    .chain(picks[ci].alt.map(|i| alt_ref[ci][i].clone()))
                    .collect();
                for vnf in chain.vnfs.iter().filter(|v| v.replicable) {
                    next_states[ci].hosts[vnf.index].clear();
                }
                for hosts_on_path in picks[ci].replica_hosts.iter() {
                    let mut r = 0usize;
                    for vnf in chain.vnfs.iter().filter(|v| v.replicable) {
                        next_states[ci].hosts[vnf.index].insert(hosts_on_path[r]);
                        r += 1;
                    }
                }
                next_states[ci].paths = all_paths;
            }
            if picks[ci].alt.is_some() {
                next_states[ci].replicas += 1;
            }
            let path_count = next_states[ci].paths.len();
            next_states[ci].assignment = picks[ci]
                .assignment
                .iter()
                .map(|&a| a.min(path_count - 1))
                .collect();
        }
        let candidate = states_to_solution(chains, &next_states);
        let cost = objective_with_background(net, set, background, &candidate, chains)?;
        traces.push(outcome.trace);
        if cost < incumbent - IMPROVEMENT_EPS {
            incumbent = cost;
            states = next_states;
        } else {
            break;
        }
    }

    let final_solution = states_to_solution(chains, &states);
    let cost = objective_with_background(net, set, background, &final_solution, chains)?;
    let replicas = states.iter().map(|s| s.replicas).collect();
    Ok((final_solution, cost, replicas, traces))
}

/// Re-place every replicable VNF of `chain` across its selected paths plus an
/// optional alternative, steered by one position gene per (path, VNF) slot.
/// Non-replicable hosts stay fixed and impose their positions on each path's
/// traversal order. Returns hosts per path in replicable-VNF order and marks
/// them used.
fn replace_chain_hosts(
    chain: &ServiceChain,
    state: &ChainState,
    alt: Option<&Arc<Path>>,
    pos_genes: &[usize],
    used: &mut u128,
) -> Option<Vec<Vec<NodeId>>> {
    let paths: Vec<&Arc<Path>> = state.paths.iter().chain(alt).collect();
    let replicable_count = chain.vnfs.iter().filter(|v| v.replicable).count();
    let mut claimed = 0u128;
    let mut per_path_hosts: Vec<Vec<NodeId>> = Vec::with_capacity(paths.len());

    for (pi, path) in paths.iter().enumerate() {
        // nodes of every other selected path are off limits for this path's
        // replicable hosts
        let mut barred = 0u128;
        for (pj, other) in paths.iter().enumerate() {
            if pj != pi {
                for n in &other.nodes {
                    barred |= 1u128 << n.0;
                }
            }
        }
        let len = path.links.len();
        let mut cursor: i64 = -1;
        let mut hosts = Vec::with_capacity(replicable_count);
        let mut slot = 0usize;
        for vnf in &chain.vnfs {
            if !vnf.replicable {
                let node = *state.hosts[vnf.index].iter().next()?;
                let pos = path.position_of(node)? as i64;
                if pos <= cursor {
                    return None;
                }
                cursor = pos;
                continue;
            }
            let remaining_after = chain.vnf_count() - 1 - vnf.index;
            let low = (cursor + 1) as usize;
            let high = len.checked_sub(remaining_after)?;
            if low > high {
                return None;
            }
            let span = high - low + 1;
            let gene = pos_genes[pi * replicable_count + slot];
            slot += 1;
            let desired = low + gene.min(span - 1);
            let mut found = None;
            for step in 0..span {
                let pos = low + (desired - low + step) % span;
                let bit = 1u128 << path.nodes[pos].0;
                if *used & bit != 0 || claimed & bit != 0 || barred & bit != 0 {
                    continue;
                }
                found = Some(pos);
                break;
            }
            let pos = found?;
            claimed |= 1u128 << path.nodes[pos].0;
            hosts.push(path.nodes[pos]);
            cursor = pos as i64;
        }
        per_path_hosts.push(hosts);
    }
    *used |= claimed;
    Some(per_path_hosts)
}

fn states_to_solution(chains: &[ServiceChain], states: &[ChainState]) -> RaSolution {
    let mut ra = RaSolution::default();
    for (ci, chain) in chains.iter().enumerate() {
        ra.chain_paths
            .insert(chain.id.clone(), states[ci].paths.clone());
        for (v, hosts) in states[ci].hosts.iter().enumerate() {
            ra.placements.insert((chain.id.clone(), v), hosts.clone());
        }
        for (d, demand) in chain.demands.iter().enumerate() {
            let idx = states[ci].assignment[d].min(states[ci].paths.len() - 1);
            ra.demand_path.insert(
                (chain.id.clone(), demand.id.clone()),
                states[ci].paths[idx].clone(),
            );
        }
    }
    ra
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{solve_ra_exact, solve_te_exact, SearchBudget};
    use crate::solution::{validate, ValidateOptions};
    use crate::topology::NodeId;
    use crate::traffic::{ChainDemand, VnfSpec};

    fn catalog(net: Network, k: usize) -> Network {
        let hops = net.default_max_hops();
        net.build_full_catalog(k, hops).0
    }

    fn demand(id: &str, s: usize, d: usize, bw: f64) -> Demand {
        Demand {
            id: id.into(),
            source: NodeId(s),
            destination: NodeId(d),
            bandwidth: bw,
        }
    }

    fn quick_params(seed: u64) -> GaParams {
        GaParams {
            population_size: 30,
            generations: 40,
            seed,
            ..GaParams::default()
        }
    }

    #[test]
    fn te_ga_single_path_is_immediately_optimal() {
        let net = catalog(
            Network::from_parts(
                vec!["A".into(), "B".into()],
                vec![("ab".into(), "A".into(), "B".into(), 100.0)],
            )
            .unwrap(),
            1,
        );
        let set = CostFunctionSet::default_set();
        let demands = vec![demand("d0", 0, 1, 10.0)];
        let (te, cost, trace) = run_te_ga(&net, &set, &demands, &quick_params(1)).unwrap();
        assert_eq!(cost, 0.0);
        assert_eq!(te.assignment["d0"].hop_count(), 1);
        assert!(!trace.rows.is_empty());
    }

    #[test]
    fn te_ga_matches_exact_on_bottleneck() {
        let net = catalog(
            Network::from_parts(
                vec!["A".into(), "B".into(), "C".into()],
                vec![
                    ("ab".into(), "A".into(), "B".into(), 100.0),
                    ("ac".into(), "A".into(), "C".into(), 100.0),
                    ("cb".into(), "C".into(), "B".into(), 100.0),
                ],
            )
            .unwrap(),
            3,
        );
        let set = CostFunctionSet::default_set();
        let demands = vec![demand("d0", 0, 1, 40.0), demand("d1", 0, 1, 40.0)];
        let exact = solve_te_exact(&net, &set, &demands, SearchBudget::default()).unwrap();
        let (_, ga_cost, _) = run_te_ga(&net, &set, &demands, &quick_params(3)).unwrap();
        assert_eq!(ga_cost, exact.cost);
    }

    #[test]
    fn te_ga_is_seed_deterministic() {
        let net = catalog(
            Network::from_parts(
                vec!["A".into(), "B".into(), "C".into(), "D".into()],
                vec![
                    ("ab".into(), "A".into(), "B".into(), 100.0),
                    ("bc".into(), "B".into(), "C".into(), 100.0),
                    ("cd".into(), "C".into(), "D".into(), 100.0),
                    ("da".into(), "D".into(), "A".into(), 100.0),
                ],
            )
            .unwrap(),
            3,
        );
        let set = CostFunctionSet::default_set();
        let demands = vec![
            demand("d0", 0, 2, 70.0),
            demand("d1", 1, 3, 50.0),
            demand("d2", 2, 0, 30.0),
        ];
        let (a_te, a_cost, _) = run_te_ga(&net, &set, &demands, &quick_params(9)).unwrap();
        let (b_te, b_cost, _) = run_te_ga(&net, &set, &demands, &quick_params(9)).unwrap();
        assert_eq!(a_cost, b_cost);
        assert_eq!(a_te, b_te);
    }

    fn diamond() -> Network {
        catalog(
            Network::from_parts(
                vec!["S".into(), "M1".into(), "M2".into(), "G".into()],
                vec![
                    ("sm1".into(), "S".into(), "M1".into(), 100.0),
                    ("m1g".into(), "M1".into(), "G".into(), 100.0),
                    ("sm2".into(), "S".into(), "M2".into(), 100.0),
                    ("m2g".into(), "M2".into(), "G".into(), 100.0),
                ],
            )
            .unwrap(),
            4,
        )
    }

    fn diamond_chain(r_max: usize) -> ServiceChain {
        ServiceChain {
            id: "s0".into(),
            vnfs: vec![
                VnfSpec {
                    index: 0,
                    replicable: false,
                },
                VnfSpec {
                    index: 1,
                    replicable: true,
                },
            ],
            egress: NodeId(3),
            demands: vec![
                ChainDemand {
                    id: "s0-d0".into(),
                    bandwidth: 60.0,
                },
                ChainDemand {
                    id: "s0-d1".into(),
                    bandwidth: 60.0,
                },
            ],
            r_max,
        }
    }

    #[test]
    fn ra_ga_matches_exact_without_replicas() {
        let net = diamond();
        let set = CostFunctionSet::default_set();
        let bg = LoadLedger::zeros(&net);
        let chains = vec![diamond_chain(0)];
        let exact = solve_ra_exact(&net, &set, &chains, &bg, SearchBudget::default()).unwrap();
        let (ra, cost, _) = run_ra_ga(&net, &set, &chains, &bg, &quick_params(5)).unwrap();
        assert_eq!(cost, exact.cost);
        let report = validate(
            &net,
            &TeSolution::default(),
            &[],
            Some(&ra),
            &chains,
            ValidateOptions::default(),
        );
        assert!(report.is_ok(), "{:?}", report.violations);
    }

    #[test]
    fn rr_ga_accepts_one_replica_on_overload() {
        let net = diamond();
        let set = CostFunctionSet::default_set();
        let bg = LoadLedger::zeros(&net);
        let chains = vec![diamond_chain(1)];
        let (base, base_cost, _) = run_ra_ga(&net, &set, &chains, &bg, &quick_params(7)).unwrap();
        assert!(base_cost > 0.0);
        let (ra, cost, replicas, _) =
            run_rr_ga(&net, &set, &chains, &bg, &base, &quick_params(7)).unwrap();
        assert_eq!(cost, 0.0, "splitting the two demands reaches zero cost");
        assert_eq!(replicas, vec![1]);
        let report = validate(
            &net,
            &TeSolution::default(),
            &[],
            Some(&ra),
            &chains,
            ValidateOptions {
                enforce_capacity: true,
            },
        );
        assert!(report.is_ok(), "{:?}", report.violations);
    }

    #[test]
    fn rr_ga_declines_replicas_when_cost_is_zero() {
        let net = diamond();
        let set = CostFunctionSet::default_set();
        let bg = LoadLedger::zeros(&net);
        // one small demand: a single path stays below 60%
        let mut chain = diamond_chain(2);
        chain.demands = vec![ChainDemand {
            id: "s0-d0".into(),
            bandwidth: 40.0,
        }];
        let chains = vec![chain];
        let (base, base_cost, _) = run_ra_ga(&net, &set, &chains, &bg, &quick_params(8)).unwrap();
        assert_eq!(base_cost, 0.0);
        let (_, cost, replicas, _) =
            run_rr_ga(&net, &set, &chains, &bg, &base, &quick_params(8)).unwrap();
        assert_eq!(cost, 0.0);
        assert_eq!(replicas, vec![0], "no strict improvement, no replicas");
    }

    #[test]
    fn two_chains_respect_node_exclusivity() {
        // 6-node net with two chains competing for hosts
        let net = catalog(
            Network::from_parts(
                vec![
                    "A".into(),
                    "B".into(),
                    "C".into(),
                    "D".into(),
                    "E".into(),
                    "F".into(),
                ],
                vec![
                    ("ab".into(), "A".into(), "B".into(), 100.0),
                    ("bc".into(), "B".into(), "C".into(), 100.0),
                    ("cd".into(), "C".into(), "D".into(), 100.0),
                    ("de".into(), "D".into(), "E".into(), 100.0),
                    ("ef".into(), "E".into(), "F".into(), 100.0),
                    ("fa".into(), "F".into(), "A".into(), 100.0),
                    ("be".into(), "B".into(), "E".into(), 100.0),
                ],
            )
            .unwrap(),
            4,
        );
        let set = CostFunctionSet::default_set();
        let bg = LoadLedger::zeros(&net);
        let mk = |id: &str, egress: usize| ServiceChain {
            id: id.into(),
            vnfs: vec![
                VnfSpec {
                    index: 0,
                    replicable: false,
                },
                VnfSpec {
                    index: 1,
                    replicable: true,
                },
            ],
            egress: NodeId(egress),
            demands: vec![ChainDemand {
                id: format!("{id}-d0"),
                bandwidth: 20.0,
            }],
            r_max: 0,
        };
        let chains = vec![mk("s0", 3), mk("s1", 3 /* same egress is fine */)];
        let (ra, _, _) = run_ra_ga(&net, &set, &chains, &bg, &quick_params(11)).unwrap();
        let report = validate(
            &net,
            &TeSolution::default(),
            &[],
            Some(&ra),
            &chains,
            ValidateOptions::default(),
        );
        assert!(report.is_ok(), "{:?}", report.violations);
    }
}
