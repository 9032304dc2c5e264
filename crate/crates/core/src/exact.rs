//! Optimal solvers for background routing and for placement/replication, via
//! systematic search with cost-bound pruning.
//!
//! Both searches exploit that the objective is a sum of convex non-decreasing
//! per-link costs: the cost of already-fixed loads never exceeds the cost of
//! any completion, and increments measured against a smaller base never exceed
//! increments against a larger one. Complete candidates are always re-scored
//! through the public objective so reported costs are comparable bit-for-bit
//! with any other evaluation of the same solution.

use std::collections::{BTreeSet, HashMap};
use std::sync::Arc;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::costmodel::CostFunctionSet;
use crate::solution::{
    objective, objective_with_background, LoadLedger, RaSolution, SolutionError, TeSolution,
};
use crate::topology::{Network, NodeId, Path};
use crate::traffic::{Demand, ServiceChain};

/// Candidates whose bound lands within this slack of the incumbent are still
/// explored, so float noise in incremental bounds can never hide an optimum.
const PRUNE_SLACK: f64 = 1e-10;

#[derive(Debug, Clone, Copy)]
pub struct SearchBudget {
    pub max_nodes: u64,
    pub time_limit: Duration,
    /// When set, exhausting the budget is an error instead of a best-effort
    /// result with `proven_optimal = false`.
    pub optimality_required: bool,
}

impl Default for SearchBudget {
    fn default() -> Self {
        SearchBudget {
            max_nodes: 200_000_000,
            time_limit: Duration::from_secs(1800),
            optimality_required: false,
        }
    }
}

impl SearchBudget {
    pub fn with_limits(max_nodes: u64, time_limit: Duration) -> Self {
        SearchBudget {
            max_nodes,
            time_limit,
            optimality_required: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExactResult<S> {
    pub solution: S,
    pub cost: f64,
    pub proven_optimal: bool,
    pub explored: u64,
    pub elapsed: Duration,
}

#[derive(Debug, Error)]
pub enum ExactError {
    #[error("demand `{0}` has no candidate path in the catalog")]
    NoCandidatePath(String),
    #[error("no feasible placement exists for chain `{0}`")]
    InfeasibleChain(String),
    #[error("search budget exhausted before any feasible solution was found")]
    BudgetExhausted,
    #[error(transparent)]
    Solution(#[from] SolutionError),
}

struct Ticker {
    started: Instant,
    nodes: u64,
    budget: SearchBudget,
    exhausted: bool,
}

impl Ticker {
    fn new(budget: SearchBudget) -> Self {
        Ticker {
            started: Instant::now(),
            nodes: 0,
            budget,
            exhausted: false,
        }
    }

    /// Counts one search node; returns false once the budget is gone.
    fn tick(&mut self) -> bool {
        if self.exhausted {
            return false;
        }
        self.nodes += 1;
        if self.nodes > self.budget.max_nodes
            || (self.nodes % 1024 == 0 && self.started.elapsed() > self.budget.time_limit)
        {
            self.exhausted = true;
        }
        !self.exhausted
    }
}

// ---------------------------------------------------------------------------
// Background routing
// ---------------------------------------------------------------------------

/// Assign every background demand one catalog path minimizing the total
/// network cost. Branch-and-bound over demand-ordered path choices; the lower
/// bound is the cost of already-fixed loads plus each remaining demand's best
/// standalone increment.
pub fn solve_te_exact(
    net: &Network,
    set: &CostFunctionSet,
    demands: &[Demand],
    budget: SearchBudget,
) -> Result<ExactResult<TeSolution>, ExactError> {
    let mut ticker = Ticker::new(budget);
    let candidates: Vec<&[Arc<Path>]> = demands
        .iter()
        .map(|d| {
            let paths = net.paths_between(d.source, d.destination);
            if paths.is_empty() {
                Err(ExactError::NoCandidatePath(d.id.clone()))
            } else {
                Ok(paths)
            }
        })
        .collect::<Result<_, _>>()?;

    // big demands first: they constrain the packing the most
    let mut order: Vec<usize> = (0..demands.len()).collect();
    order.sort_by(|&a, &b| {
        demands[b]
            .bandwidth
            .total_cmp(&demands[a].bandwidth)
            .then_with(|| demands[a].id.cmp(&demands[b].id))
    });

    let caps: Vec<f64> = net.links().iter().map(|l| l.capacity).collect();
    let link_count = net.link_count();

    // each demand's best standalone increment over the empty network
    let standalone_min: Vec<f64> = demands
        .iter()
        .enumerate()
        .map(|(d, demand)| {
            candidates[d]
                .iter()
                .map(|p| {
                    p.links
                        .iter()
                        .map(|&l| set.link_cost(demand.bandwidth / caps[l.0]))
                        .sum::<f64>()
                })
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    let mut suffix_min = vec![0.0; order.len() + 1];
    for i in (0..order.len()).rev() {
        suffix_min[i] = suffix_min[i + 1] + standalone_min[order[i]];
    }

    let delta_for = |loads: &[f64], link_k: &[f64], path: &Path, bw: f64| -> f64 {
        let mut delta = 0.0;
        for &l in &path.links {
            delta += set.link_cost((loads[l.0] + bw) / caps[l.0]) - link_k[l.0];
        }
        delta
    };
    let apply = |loads: &mut [f64], link_k: &mut [f64], path: &Path, bw: f64, sign: f64| -> f64 {
        let mut delta = 0.0;
        for &l in &path.links {
            loads[l.0] += sign * bw;
            let new_k = set.link_cost(loads[l.0] / caps[l.0]);
            delta += new_k - link_k[l.0];
            link_k[l.0] = new_k;
        }
        delta
    };

    // greedy incumbent: cheapest increment per demand in search order
    let mut loads = vec![0.0; link_count];
    let mut link_k = vec![0.0; link_count];
    let mut greedy_choice = vec![0usize; demands.len()];
    for &d in &order {
        let mut best = (f64::INFINITY, 0usize);
        for (pi, p) in candidates[d].iter().enumerate() {
            let delta = delta_for(&loads, &link_k, p, demands[d].bandwidth);
            if delta < best.0 {
                best = (delta, pi);
            }
        }
        greedy_choice[d] = best.1;
        apply(&mut loads, &mut link_k, &candidates[d][best.1], demands[d].bandwidth, 1.0);
    }
    let build_te = |choice: &[usize]| -> TeSolution {
        let mut te = TeSolution::default();
        for (d, demand) in demands.iter().enumerate() {
            te.assignment
                .insert(demand.id.clone(), candidates[d][choice[d]].clone());
        }
        te
    };
    let mut best_choice = greedy_choice.clone();
    let mut incumbent = objective(net, set, &build_te(&greedy_choice), demands, None, &[])?;

    // DFS unless the greedy solution is already at the global lower bound
    if incumbent > 0.0 {
        struct Dfs<'a> {
            demands: &'a [Demand],
            candidates: &'a [&'a [Arc<Path>]],
            order: &'a [usize],
            suffix_min: &'a [f64],
            net: &'a Network,
            set: &'a CostFunctionSet,
            caps: &'a [f64],
            incumbent: f64,
            best_choice: Vec<usize>,
            choice: Vec<usize>,
            ticker: Ticker,
        }
        impl Dfs<'_> {
            fn run(
                &mut self,
                depth: usize,
                loads: &mut [f64],
                link_k: &mut [f64],
                cost: f64,
            ) -> Result<(), ExactError> {
                if self.incumbent == 0.0 {
                    return Ok(());
                }
                if depth == self.order.len() {
                    let te = {
                        let mut te = TeSolution::default();
                        for (d, demand) in self.demands.iter().enumerate() {
                            te.assignment.insert(
                                demand.id.clone(),
                                self.candidates[d][self.choice[d]].clone(),
                            );
                        }
                        te
                    };
                    let canonical =
                        objective(self.net, self.set, &te, self.demands, None, &[])?;
                    if canonical < self.incumbent {
                        self.incumbent = canonical;
                        self.best_choice = self.choice.clone();
                    }
                    return Ok(());
                }
                let d = self.order[depth];
                let bw = self.demands[d].bandwidth;
                let mut children: Vec<(f64, usize)> = self.candidates[d]
                    .iter()
                    .enumerate()
                    .map(|(pi, p)| {
                        let mut delta = 0.0;
                        for &l in &p.links {
                            delta += self.set.link_cost((loads[l.0] + bw) / self.caps[l.0])
                                - self.set.link_cost(loads[l.0] / self.caps[l.0]);
                        }
                        (delta, pi)
                    })
                    .collect();
                children.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                for (delta, pi) in children {
                    if !self.ticker.tick() {
                        return Ok(());
                    }
                    if cost + delta + self.suffix_min[depth + 1] >= self.incumbent + PRUNE_SLACK {
                        break; // children are delta-sorted
                    }
                    let p = &self.candidates[d][pi];
                    let mut applied = 0.0;
                    for &l in &p.links {
                        loads[l.0] += bw;
                        let new_k = self.set.link_cost(loads[l.0] / self.caps[l.0]);
                        applied += new_k - link_k[l.0];
                        link_k[l.0] = new_k;
                    }
                    self.choice[d] = pi;
                    self.run(depth + 1, loads, link_k, cost + applied)?;
                    for &l in &p.links {
                        loads[l.0] -= bw;
                        link_k[l.0] = self.set.link_cost(loads[l.0] / self.caps[l.0]);
                    }
                    if self.incumbent == 0.0 {
                        return Ok(());
                    }
                }
                Ok(())
            }
        }
        let mut dfs = Dfs {
            demands,
            candidates: &candidates,
            order: &order,
            suffix_min: &suffix_min,
            net,
            set,
            caps: &caps,
            incumbent,
            best_choice,
            choice: greedy_choice,
            ticker,
        };
        let mut loads = vec![0.0; link_count];
        let mut link_k = vec![0.0; link_count];
        dfs.run(0, &mut loads, &mut link_k, 0.0)?;
        incumbent = dfs.incumbent;
        best_choice = dfs.best_choice;
        ticker = dfs.ticker;
    }

    if ticker.exhausted && budget.optimality_required {
        return Err(ExactError::BudgetExhausted);
    }
    Ok(ExactResult {
        solution: build_te(&best_choice),
        cost: incumbent,
        proven_optimal: !ticker.exhausted,
        explored: ticker.nodes,
        elapsed: ticker.started.elapsed(),
    })
}

// ---------------------------------------------------------------------------
// Placement and replication
// ---------------------------------------------------------------------------

struct PathInfo {
    path: Arc<Path>,
    mask: u128,
    /// node index -> position on the path, u8::MAX when absent
    pos: Vec<u8>,
}

impl PathInfo {
    fn new(path: Arc<Path>, node_count: usize) -> Self {
        let mut mask = 0u128;
        let mut pos = vec![u8::MAX; node_count];
        for (i, &n) in path.nodes.iter().enumerate() {
            mask |= 1u128 << n.0;
            pos[n.0] = i as u8;
        }
        PathInfo { path, mask, pos }
    }

    fn len(&self) -> usize {
        self.path.links.len()
    }
}

struct SubsetCand {
    paths: Vec<u16>,
    min_delta: f64,
}

struct ChainCtx<'a> {
    chain: &'a ServiceChain,
    paths: Vec<PathInfo>,
    subsets: Vec<SubsetCand>,
    /// (bandwidth, demand indices), largest bandwidth first
    groups: Vec<(f64, Vec<usize>)>,
    min_delta: f64,
}

/// Jointly choose, per chain: the selected paths (at most r_max + 1), the VNF
/// placements on them, and the demand-to-path assignments, minimizing the
/// total network cost on top of fixed background loads. Every returned
/// solution passes the validator.
pub fn solve_ra_exact(
    net: &Network,
    set: &CostFunctionSet,
    chains: &[ServiceChain],
    background: &LoadLedger,
    budget: SearchBudget,
) -> Result<ExactResult<RaSolution>, ExactError> {
    assert!(net.node_count() <= 128, "placement search supports up to 128 nodes");
    let mut ticker = Ticker::new(budget);
    let caps: Vec<f64> = net.links().iter().map(|l| l.capacity).collect();
    let bg: Vec<f64> = background.background.clone();
    let bg_k: Vec<f64> = bg
        .iter()
        .enumerate()
        .map(|(i, &l)| set.link_cost(l / caps[i]))
        .collect();

    // global lower bound: chain loads only add on top of the background
    let bg_cost = objective_with_background(net, set, background, &RaSolution::default(), &[])?;

    let mut ctxs: Vec<ChainCtx> = Vec::with_capacity(chains.len());
    for chain in chains {
        let ctx = build_chain_ctx(net, set, chain, &bg, &bg_k, &caps)?;
        ctxs.push(ctx);
    }

    // greedy incumbent: per chain take the cheapest candidate with a joint
    // placement, chains in id order
    let mut greedy: Option<(Vec<(usize, Vec<Vec<usize>>)>, Vec<Vec<BTreeSet<NodeId>>>)> = None;
    {
        let mut chosen: Vec<(usize, Vec<Vec<usize>>)> = Vec::new();
        let mut feasible = true;
        for (ci, ctx) in ctxs.iter().enumerate() {
            let mut picked = None;
            'subsets: for (si, sub) in ctx.subsets.iter().enumerate() {
                let mut key: Vec<(usize, &[u16])> = chosen
                    .iter()
                    .enumerate()
                    .map(|(cj, (sj, _))| (cj, ctxs[cj].subsets[*sj].paths.as_slice()))
                    .collect();
                key.push((ci, sub.paths.as_slice()));
                if joint_placement(net, chains, &ctxs, &key).is_none() {
                    continue 'subsets;
                }
                // cheapest assignment for this subset under current loads
                let mut best: Option<(f64, Vec<Vec<usize>>)> = None;
                for_each_assignment(&ctx.groups, sub.paths.len(), &mut |counts| {
                    let delta = assignment_delta(ctx, sub, counts, &bg, &bg_k, &caps, set);
                    if best.as_ref().map_or(true, |(b, _)| delta < *b) {
                        best = Some((delta, counts.to_vec()));
                    }
                });
                if let Some((_, counts)) = best {
                    picked = Some((si, counts));
                    break 'subsets;
                }
            }
            match picked {
                Some(p) => chosen.push(p),
                None => {
                    feasible = false;
                    break;
                }
            }
        }
        if feasible {
            let key: Vec<(usize, &[u16])> = chosen
                .iter()
                .enumerate()
                .map(|(cj, (sj, _))| (cj, ctxs[cj].subsets[*sj].paths.as_slice()))
                .collect();
            if let Some(placements) = joint_placement(net, chains, &ctxs, &key) {
                greedy = Some((chosen, placements));
            }
        }
    }

    let mut incumbent_cost = f64::INFINITY;
    let mut incumbent: Option<RaSolution> = None;
    if let Some((chosen, placements)) = greedy {
        let ra = assemble_solution(&ctxs, &chosen, &placements);
        let cost = objective_with_background(net, set, background, &ra, chains)?;
        incumbent_cost = cost;
        incumbent = Some(ra);
    }

    let min_delta_suffix: Vec<f64> = {
        let mut suffix = vec![0.0; ctxs.len() + 1];
        for i in (0..ctxs.len()).rev() {
            suffix[i] = suffix[i + 1] + ctxs[i].min_delta;
        }
        suffix
    };

    let mut deepest = 0usize;
    if incumbent_cost > bg_cost + PRUNE_SLACK || incumbent.is_none() {
        // depth-first over chains; candidates ordered by background-relative
        // increments, which lower-bound increments over any larger base
        struct RaDfs<'a> {
            net: &'a Network,
            set: &'a CostFunctionSet,
            chains: &'a [ServiceChain],
            ctxs: &'a [ChainCtx<'a>],
            caps: &'a [f64],
            background: &'a LoadLedger,
            suffix: &'a [f64],
            incumbent_cost: f64,
            incumbent: Option<RaSolution>,
            chosen: Vec<(usize, Vec<Vec<usize>>)>,
            placement_memo: HashMap<Vec<u32>, bool>,
            ticker: Ticker,
            deepest: usize,
            bg_cost: f64,
        }
        impl RaDfs<'_> {
            fn done(&self) -> bool {
                self.ticker.exhausted || self.incumbent_cost <= self.bg_cost + PRUNE_SLACK
            }

            fn run(
                &mut self,
                depth: usize,
                loads: &mut [f64],
                link_k: &mut [f64],
                cost: f64,
            ) -> Result<(), ExactError> {
                if self.done() {
                    return Ok(());
                }
                self.deepest = self.deepest.max(depth);
                if depth == self.ctxs.len() {
                    let key: Vec<(usize, &[u16])> = self
                        .chosen
                        .iter()
                        .enumerate()
                        .map(|(cj, (sj, _))| (cj, self.ctxs[cj].subsets[*sj].paths.as_slice()))
                        .collect();
                    if let Some(placements) = joint_placement(self.net, self.chains, self.ctxs, &key)
                    {
                        let ra = assemble_solution(self.ctxs, &self.chosen, &placements);
                        let canonical = objective_with_background(
                            self.net,
                            self.set,
                            self.background,
                            &ra,
                            self.chains,
                        )?;
                        if canonical < self.incumbent_cost {
                            self.incumbent_cost = canonical;
                            self.incumbent = Some(ra);
                        }
                    }
                    return Ok(());
                }
                let ctx = &self.ctxs[depth];
                for (si, sub) in ctx.subsets.iter().enumerate() {
                    if self.done() {
                        return Ok(());
                    }
                    if cost + sub.min_delta + self.suffix[depth + 1]
                        >= self.incumbent_cost + PRUNE_SLACK
                    {
                        break; // subsets sorted by min_delta
                    }
                    // placements depend on subsets only; prune dead prefixes early
                    let memo_key: Vec<u32> = self
                        .chosen
                        .iter()
                        .map(|(sj, _)| *sj as u32)
                        .chain(std::iter::once(si as u32))
                        .collect();
                    let feasible = match self.placement_memo.get(&memo_key) {
                        Some(&f) => f,
                        None => {
                            let key: Vec<(usize, &[u16])> = self
                                .chosen
                                .iter()
                                .enumerate()
                                .map(|(cj, (sj, _))| {
                                    (cj, self.ctxs[cj].subsets[*sj].paths.as_slice())
                                })
                                .chain(std::iter::once((depth, sub.paths.as_slice())))
                                .collect();
                            let f =
                                joint_placement(self.net, self.chains, self.ctxs, &key).is_some();
                            self.placement_memo.insert(memo_key, f);
                            f
                        }
                    };
                    if !feasible {
                        continue;
                    }

                    let mut assignments: Vec<(f64, Vec<Vec<usize>>)> = Vec::new();
                    for_each_assignment(&ctx.groups, sub.paths.len(), &mut |counts| {
                        let delta = assignment_delta(
                            ctx,
                            sub,
                            counts,
                            loads,
                            link_k,
                            self.caps,
                            self.set,
                        );
                        assignments.push((delta, counts.to_vec()));
                    });
                    assignments.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                    for (delta, counts) in assignments {
                        if !self.ticker.tick() {
                            return Ok(());
                        }
                        if cost + delta + self.suffix[depth + 1]
                            >= self.incumbent_cost + PRUNE_SLACK
                        {
                            break; // assignment deltas sorted under the current base
                        }
                        let adds = merged_adds(ctx, sub, &counts);
                        let mut applied = 0.0;
                        for &(l, add) in &adds {
                            loads[l] += add;
                            let new_k = self.set.link_cost(loads[l] / self.caps[l]);
                            applied += new_k - link_k[l];
                            link_k[l] = new_k;
                        }
                        self.chosen.push((si, counts));
                        self.run(depth + 1, loads, link_k, cost + applied)?;
                        self.chosen.pop();
                        for &(l, add) in &adds {
                            loads[l] -= add;
                            link_k[l] = self.set.link_cost(loads[l] / self.caps[l]);
                        }
                        if self.done() {
                            return Ok(());
                        }
                    }
                }
                Ok(())
            }
        }

        let mut dfs = RaDfs {
            net,
            set,
            chains,
            ctxs: &ctxs,
            caps: &caps,
            background,
            suffix: &min_delta_suffix,
            incumbent_cost,
            incumbent: incumbent.take(),
            chosen: Vec::new(),
            placement_memo: HashMap::new(),
            ticker,
            deepest: 0,
            bg_cost,
        };
        let mut loads = bg.clone();
        let mut link_k = bg_k.clone();
        let base_cost = bg_cost;
        dfs.run(0, &mut loads, &mut link_k, base_cost)?;
        incumbent_cost = dfs.incumbent_cost;
        incumbent = dfs.incumbent;
        ticker = dfs.ticker;
        deepest = dfs.deepest;
    }

    match incumbent {
        Some(solution) => {
            if ticker.exhausted && budget.optimality_required {
                return Err(ExactError::BudgetExhausted);
            }
            Ok(ExactResult {
                solution,
                cost: incumbent_cost,
                proven_optimal: !ticker.exhausted,
                explored: ticker.nodes,
                elapsed: ticker.started.elapsed(),
            })
        }
        None => {
            if ticker.exhausted {
                Err(ExactError::BudgetExhausted)
            } else {
                let blocked = deepest.min(chains.len().saturating_sub(1));
                Err(ExactError::InfeasibleChain(chains[blocked].id.clone()))
            }
        }
    }
}

fn build_chain_ctx<'a>(
    net: &Network,
    set: &CostFunctionSet,
    chain: &'a ServiceChain,
    bg: &[f64],
    bg_k: &[f64],
    caps: &[f64],
) -> Result<ChainCtx<'a>, ExactError> {
    let vnf_count = chain.vnf_count();
    let paths: Vec<PathInfo> = net
        .paths_to(chain.egress)
        .into_iter()
        .filter(|p| p.links.len() + 1 >= vnf_count)
        .map(|p| PathInfo::new(p, net.node_count()))
        .collect();
    if paths.is_empty() {
        return Err(ExactError::InfeasibleChain(chain.id.clone()));
    }

    // group demands by bandwidth so equal demands enumerate as compositions
    let mut groups: Vec<(f64, Vec<usize>)> = Vec::new();
    for (i, d) in chain.demands.iter().enumerate() {
        match groups.iter_mut().find(|(bw, _)| *bw == d.bandwidth) {
            Some((_, idxs)) => idxs.push(i),
            None => groups.push((d.bandwidth, vec![i])),
        }
    }
    groups.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1[0].cmp(&b.1[0])));

    // a selected path with no demand on it never lowers the cost
    let max_size = (chain.r_max + 1).min(chain.demands.len().max(1));
    let mut subsets: Vec<SubsetCand> = Vec::new();
    let n_paths = paths.len();
    for size in 1..=max_size.min(n_paths) {
        let mut idx: Vec<usize> = (0..size).collect();
        loop {
            let sel: Vec<u16> = idx.iter().map(|&i| i as u16).collect();
            if subset_has_anchor_room(&paths, &sel, vnf_count)
                && solo_placement(net, chain, &paths, &sel).is_some()
            {
                subsets.push(SubsetCand {
                    paths: sel,
                    min_delta: f64::INFINITY,
                });
            }
            if !next_combination(&mut idx, n_paths) {
                break;
            }
        }
    }
    if subsets.is_empty() {
        return Err(ExactError::InfeasibleChain(chain.id.clone()));
    }

    let mut ctx = ChainCtx {
        chain,
        paths,
        subsets,
        groups,
        min_delta: f64::INFINITY,
    };
    for si in 0..ctx.subsets.len() {
        let mut min_delta = f64::INFINITY;
        let sub_paths = ctx.subsets[si].paths.clone();
        let k = sub_paths.len();
        for_each_assignment(&ctx.groups, k, &mut |counts| {
            let sub = SubsetCand {
                paths: sub_paths.clone(),
                min_delta: 0.0,
            };
            let delta = assignment_delta(&ctx, &sub, counts, bg, bg_k, caps, set);
            if delta < min_delta {
                min_delta = delta;
            }
        });
        ctx.subsets[si].min_delta = min_delta;
        if min_delta < ctx.min_delta {
            ctx.min_delta = min_delta;
        }
    }
    ctx.subsets.sort_by(|a, b| {
        a.min_delta
            .total_cmp(&b.min_delta)
            .then_with(|| a.paths.cmp(&b.paths))
    });
    Ok(ctx)
}

/// Advance `idx` to the next lexicographic k-combination of 0..n.
fn next_combination(idx: &mut [usize], n: usize) -> bool {
    let k = idx.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if idx[i] != i + n - k {
            idx[i] += 1;
            for j in i + 1..k {
                idx[j] = idx[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Necessary condition for a subset: some node lies on every path with enough
/// strictly-later positions on each of them to fit the remaining VNFs.
fn subset_has_anchor_room(paths: &[PathInfo], sel: &[u16], vnf_count: usize) -> bool {
    let mut common = !0u128;
    for &pi in sel {
        common &= paths[pi as usize].mask;
    }
    if common == 0 {
        return false;
    }
    let mut m = common;
    while m != 0 {
        let node = m.trailing_zeros() as usize;
        m &= m - 1;
        if sel.iter().all(|&pi| {
            let p = &paths[pi as usize];
            (p.pos[node] as usize) + (vnf_count - 1) <= p.len()
        }) {
            return true;
        }
    }
    false
}

/// Merged per-link additions for one (subset, assignment) candidate.
fn merged_adds(ctx: &ChainCtx, sub: &SubsetCand, counts: &[Vec<usize>]) -> Vec<(usize, f64)> {
    let mut adds: Vec<(usize, f64)> = Vec::new();
    for (pi, &path_idx) in sub.paths.iter().enumerate() {
        let mut bw = 0.0;
        for (g, per_path) in counts.iter().enumerate() {
            bw += per_path[pi] as f64 * ctx.groups[g].0;
        }
        if bw == 0.0 {
            continue;
        }
        for &l in &ctx.paths[path_idx as usize].path.links {
            adds.push((l.0, bw));
        }
    }
    adds.sort_by_key(|&(l, _)| l);
    adds.dedup_by(|b, a| {
        if a.0 == b.0 {
            a.1 += b.1;
            true
        } else {
            false
        }
    });
    adds
}

fn assignment_delta(
    ctx: &ChainCtx,
    sub: &SubsetCand,
    counts: &[Vec<usize>],
    base_loads: &[f64],
    base_k: &[f64],
    caps: &[f64],
    set: &CostFunctionSet,
) -> f64 {
    let adds = merged_adds(ctx, sub, counts);
    let mut delta = 0.0;
    for (l, add) in adds {
        delta += set.link_cost((base_loads[l] + add) / caps[l]) - base_k[l];
    }
    delta
}

/// Visit every way of splitting each bandwidth group's demands over `k` paths.
/// `counts[g][p]` is how many demands of group g ride path p.
fn for_each_assignment(
    groups: &[(f64, Vec<usize>)],
    k: usize,
    f: &mut impl FnMut(&[Vec<usize>]),
) {
    fn compositions(total: usize, k: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if k == 1 {
            current.push(total);
            out.push(current.clone());
            current.pop();
            return;
        }
        for first in 0..=total {
            current.push(first);
            compositions(total - first, k - 1, current, out);
            current.pop();
        }
    }
    let per_group: Vec<Vec<Vec<usize>>> = groups
        .iter()
        .map(|(_, idxs)| {
            let mut out = Vec::new();
            compositions(idxs.len(), k, &mut Vec::new(), &mut out);
            out
        })
        .collect();
    fn cross(
        per_group: &[Vec<Vec<usize>>],
        g: usize,
        picked: &mut Vec<Vec<usize>>,
        f: &mut impl FnMut(&[Vec<usize>]),
    ) {
        if g == per_group.len() {
            f(picked);
            return;
        }
        for comp in &per_group[g] {
            picked.push(comp.clone());
            cross(per_group, g + 1, picked, f);
            picked.pop();
        }
    }
    cross(&per_group, 0, &mut Vec::new(), f);
}

/// Placement search for one chain's subset in isolation.
fn solo_placement(
    net: &Network,
    chain: &ServiceChain,
    paths: &[PathInfo],
    sel: &[u16],
) -> Option<Vec<BTreeSet<NodeId>>> {
    joint_placement_over(net, &[(chain, paths, sel)]).map(|mut v| v.pop().unwrap())
}

/// Placements for several chains simultaneously (node exclusivity couples
/// them). `key` holds (chain index, selected path indices) pairs.
fn joint_placement(
    net: &Network,
    chains: &[ServiceChain],
    ctxs: &[ChainCtx],
    key: &[(usize, &[u16])],
) -> Option<Vec<Vec<BTreeSet<NodeId>>>> {
    let entries: Vec<(&ServiceChain, &[PathInfo], &[u16])> = key
        .iter()
        .map(|&(ci, sel)| (&chains[ci], ctxs[ci].paths.as_slice(), sel))
        .collect();
    joint_placement_over(net, &entries)
}

/// Complete backtracking search for placements across chains. One decision
/// slot per non-replicable VNF (a single host shared by all of that chain's
/// selected paths) and one per (replicable VNF, selected path) pair (a host
/// private to that path). Hosts must land strictly after each path's cursor,
/// on an unused node; replicable hosts must avoid the chain's other selected
/// paths.
fn joint_placement_over(
    net: &Network,
    entries: &[(&ServiceChain, &[PathInfo], &[u16])],
) -> Option<Vec<Vec<BTreeSet<NodeId>>>> {
    #[derive(Clone, Copy)]
    struct Slot {
        entry: usize,
        vnf: usize,
        /// None: shared host; Some(i): private host on selected path i
        path_slot: Option<usize>,
    }
    let mut slots: Vec<Slot> = Vec::new();
    for (e, (chain, _, sel)) in entries.iter().enumerate() {
        for vnf in &chain.vnfs {
            if vnf.replicable {
                for ps in 0..sel.len() {
                    slots.push(Slot {
                        entry: e,
                        vnf: vnf.index,
                        path_slot: Some(ps),
                    });
                }
            } else {
                slots.push(Slot {
                    entry: e,
                    vnf: vnf.index,
                    path_slot: None,
                });
            }
        }
    }

    struct Search<'a> {
        entries: &'a [(&'a ServiceChain, &'a [PathInfo], &'a [u16])],
        slots: &'a [Slot],
        node_count: usize,
    }
    impl Search<'_> {
        fn go(
            &self,
            si: usize,
            cursors: &mut [Vec<i32>],
            used: &mut u128,
            picked: &mut [Vec<BTreeSet<NodeId>>],
        ) -> bool {
            let Some(&slot) = self.slots.get(si) else {
                return true;
            };
            let (_, paths, sel) = self.entries[slot.entry];
            let info_of = |i: usize| &paths[sel[i] as usize];
            match slot.path_slot {
                None => {
                    for node in 0..self.node_count {
                        if *used & (1u128 << node) != 0 {
                            continue;
                        }
                        let ok = (0..sel.len()).all(|i| {
                            let pos = info_of(i).pos[node];
                            pos != u8::MAX && (pos as i32) > cursors[slot.entry][i]
                        });
                        if !ok {
                            continue;
                        }
                        let saved = cursors[slot.entry].clone();
                        for i in 0..sel.len() {
                            cursors[slot.entry][i] = info_of(i).pos[node] as i32;
                        }
                        *used |= 1u128 << node;
                        picked[slot.entry][slot.vnf].insert(NodeId(node));
                        if self.go(si + 1, cursors, used, picked) {
                            return true;
                        }
                        picked[slot.entry][slot.vnf].remove(&NodeId(node));
                        *used &= !(1u128 << node);
                        cursors[slot.entry] = saved;
                    }
                    false
                }
                Some(ps) => {
                    let info = info_of(ps);
                    let from = (cursors[slot.entry][ps] + 1).max(0);
                    for offset in from..=(info.len() as i32) {
                        let node = info.path.nodes[offset as usize].0;
                        if *used & (1u128 << node) != 0 {
                            continue;
                        }
                        let on_other_path = (0..sel.len())
                            .any(|j| j != ps && info_of(j).mask & (1u128 << node) != 0);
                        if on_other_path {
                            continue;
                        }
                        let saved = cursors[slot.entry][ps];
                        cursors[slot.entry][ps] = offset;
                        *used |= 1u128 << node;
                        picked[slot.entry][slot.vnf].insert(NodeId(node));
                        if self.go(si + 1, cursors, used, picked) {
                            return true;
                        }
                        picked[slot.entry][slot.vnf].remove(&NodeId(node));
                        *used &= !(1u128 << node);
                        cursors[slot.entry][ps] = saved;
                    }
                    false
                }
            }
        }
    }

    let search = Search {
        entries,
        slots: &slots,
        node_count: net.node_count(),
    };
    let mut cursors: Vec<Vec<i32>> = entries.iter().map(|(_, _, sel)| vec![-1; sel.len()]).collect();
    let mut picked: Vec<Vec<BTreeSet<NodeId>>> = entries
        .iter()
        .map(|(chain, _, _)| vec![BTreeSet::new(); chain.vnfs.len()])
        .collect();
    let mut used = 0u128;
    if search.go(0, &mut cursors, &mut used, &mut picked) {
        Some(picked)
    } else {
        None
    }
}

fn assemble_solution(
    ctxs: &[ChainCtx],
    chosen: &[(usize, Vec<Vec<usize>>)],
    placements: &[Vec<BTreeSet<NodeId>>],
) -> RaSolution {
    let mut ra = RaSolution::default();
    for (ci, ctx) in ctxs.iter().enumerate() {
        let (si, counts) = &chosen[ci];
        let sub = &ctx.subsets[*si];
        let selected: Vec<Arc<Path>> = sub
            .paths
            .iter()
            .map(|&pi| ctx.paths[pi as usize].path.clone())
            .collect();
        ra.chain_paths.insert(ctx.chain.id.clone(), selected.clone());
        for (g, (_, demand_idxs)) in ctx.groups.iter().enumerate() {
            let mut cursor = 0usize;
            for (pi, &count) in counts[g].iter().enumerate() {
                for _ in 0..count {
                    let demand = &ctx.chain.demands[demand_idxs[cursor]];
                    ra.demand_path.insert(
                        (ctx.chain.id.clone(), demand.id.clone()),
                        selected[pi].clone(),
                    );
                    cursor += 1;
                }
            }
        }
        for (vnf, hosts) in placements[ci].iter().enumerate() {
            ra.placements
                .insert((ctx.chain.id.clone(), vnf), hosts.clone());
        }
    }
    ra
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::costmodel::CostFunctionSet;
    use crate::solution::{validate, ValidateOptions};
    use crate::traffic::{ChainDemand, VnfSpec};

    fn catalog(net: Network, k: usize) -> Network {
        let hops = net.default_max_hops();
        net.build_full_catalog(k, hops).0
    }

    fn bottleneck_net() -> Network {
        // A-B direct plus A-C-B detour
        catalog(
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
        )
    }

    fn demand(id: &str, s: usize, d: usize, bw: f64) -> Demand {
        Demand {
            id: id.into(),
            source: NodeId(s),
            destination: NodeId(d),
            bandwidth: bw,
        }
    }

    #[test]
    fn te_single_demand_single_path() {
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
        let res = solve_te_exact(&net, &set, &demands, SearchBudget::default()).unwrap();
        assert!(res.proven_optimal);
        assert_eq!(res.cost, 0.0);
        assert_eq!(res.solution.assignment["d0"].hop_count(), 1);
    }

    #[test]
    fn te_splits_bottleneck() {
        let net = bottleneck_net();
        let set = CostFunctionSet::default_set();
        // jointly on A-B the direct link hits 80% (cost > 0); split routing is free
        let demands = vec![demand("d0", 0, 1, 40.0), demand("d1", 0, 1, 40.0)];
        let res = solve_te_exact(&net, &set, &demands, SearchBudget::default()).unwrap();
        assert!(res.proven_optimal);
        assert_eq!(res.cost, 0.0);
        // exhaustive check over all k*k assignments agrees
        let paths0 = net.paths_between(NodeId(0), NodeId(1)).to_vec();
        let mut best = f64::INFINITY;
        for p0 in &paths0 {
            for p1 in &paths0 {
                let mut te = TeSolution::default();
                te.assignment.insert("d0".into(), p0.clone());
                te.assignment.insert("d1".into(), p1.clone());
                let cost = objective(&net, &set, &te, &demands, None, &[]).unwrap();
                if cost < best {
                    best = cost;
                }
            }
        }
        assert_eq!(res.cost, best);
    }

    #[test]
    fn te_missing_candidates_is_infeasible() {
        let net = Network::from_parts(
            vec!["A".into(), "B".into()],
            vec![("ab".into(), "A".into(), "B".into(), 100.0)],
        )
        .unwrap(); // no catalog built
        let set = CostFunctionSet::default_set();
        let demands = vec![demand("d0", 0, 1, 10.0)];
        assert!(matches!(
            solve_te_exact(&net, &set, &demands, SearchBudget::default()),
            Err(ExactError::NoCandidatePath(_))
        ));
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
    fn ra_replication_relieves_overload() {
        let net = diamond();
        let set = CostFunctionSet::default_set();
        let bg = LoadLedger::zeros(&net);

        let r0 = solve_ra_exact(&net, &set, &[diamond_chain(0)], &bg, SearchBudget::default())
            .unwrap();
        assert!(r0.proven_optimal);
        assert!(r0.cost > 0.0, "one path must carry 120% load");

        let r1 = solve_ra_exact(&net, &set, &[diamond_chain(1)], &bg, SearchBudget::default())
            .unwrap();
        assert!(r1.proven_optimal);
        assert_eq!(r1.cost, 0.0, "a replica splits the demands at 60% each");

        for (chains, res) in [(vec![diamond_chain(0)], &r0), (vec![diamond_chain(1)], &r1)] {
            let te = TeSolution::default();
            let report = validate(
                &net,
                &te,
                &[],
                Some(&res.solution),
                &chains,
                ValidateOptions::default(),
            );
            assert!(report.is_ok(), "{:?}", report.violations);
        }
    }

    #[test]
    fn ra_more_replicas_never_cost_more() {
        let net = diamond();
        let set = CostFunctionSet::default_set();
        let bg = LoadLedger::zeros(&net);
        let mut prev = f64::INFINITY;
        for r_max in 0..=2 {
            let res = solve_ra_exact(
                &net,
                &set,
                &[diamond_chain(r_max)],
                &bg,
                SearchBudget::default(),
            )
            .unwrap();
            assert!(res.cost <= prev, "r_max={r_max}: {} > {prev}", res.cost);
            prev = res.cost;
        }
    }

    #[test]
    fn ra_single_candidate_is_forced() {
        // line S - A - G, one chain of two VNFs, single path
        let net = catalog(
            Network::from_parts(
                vec!["S".into(), "A".into(), "G".into()],
                vec![
                    ("sa".into(), "S".into(), "A".into(), 100.0),
                    ("ag".into(), "A".into(), "G".into(), 100.0),
                ],
            )
            .unwrap(),
            1,
        );
        let set = CostFunctionSet::default_set();
        let bg = LoadLedger::zeros(&net);
        let chain = ServiceChain {
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
            egress: NodeId(2),
            demands: vec![ChainDemand {
                id: "s0-d0".into(),
                bandwidth: 50.0,
            }],
            r_max: 0,
        };
        let res = solve_ra_exact(&net, &set, &[chain.clone()], &bg, SearchBudget::default())
            .unwrap();
        // 50 Mbps over two 100 Mbps links stays at 50%: zero cost by hand
        assert_eq!(res.cost, 0.0);
        let paths = &res.solution.chain_paths["s0"];
        assert_eq!(paths.len(), 1);
        let report = validate(
            &net,
            &TeSolution::default(),
            &[],
            Some(&res.solution),
            &[chain],
            ValidateOptions {
                enforce_capacity: true,
            },
        );
        assert!(report.is_ok(), "{:?}", report.violations);
    }

    #[test]
    fn ra_infeasible_chain_is_reported() {
        // no path reaches the egress: catalog built for the wrong pair only
        let net = Network::from_parts(
            vec!["S".into(), "A".into(), "G".into()],
            vec![
                ("sa".into(), "S".into(), "A".into(), 100.0),
                ("ag".into(), "A".into(), "G".into(), 100.0),
            ],
        )
        .unwrap();
        let (net, _) = net.build_path_catalog(&[(NodeId(0), NodeId(1))], 2, 4);
        let set = CostFunctionSet::default_set();
        let bg = LoadLedger::zeros(&net);
        let chain = ServiceChain {
            id: "s0".into(),
            vnfs: vec![VnfSpec {
                index: 0,
                replicable: false,
            }],
            egress: NodeId(2),
            demands: vec![],
            r_max: 0,
        };
        assert!(matches!(
            solve_ra_exact(&net, &set, &[chain], &bg, SearchBudget::default()),
            Err(ExactError::InfeasibleChain(id)) if id == "s0"
        ));
    }
}
