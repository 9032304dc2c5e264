//! Random-fit placement baseline: place VNFs uniformly at random among
//! feasible options, then route demands over randomly chosen admissible
//! paths.

use std::collections::BTreeSet;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::costmodel::CostFunctionSet;
use crate::solution::{objective_with_background, LoadLedger, RaSolution, SolutionError};
use crate::topology::{Network, NodeId, Path};
use crate::traffic::ServiceChain;

/// Placement attempts per chain before giving up.
const RETRY_BUDGET: usize = 10_000;

#[derive(Debug, Error)]
pub enum RfpaError {
    #[error(
        "no feasible random placement for chain `{chain}` after {attempts} attempts \
         ({admissible_failures} samples produced no admissible path)"
    )]
    PlacementExhausted {
        chain: String,
        attempts: usize,
        admissible_failures: usize,
    },
    #[error(transparent)]
    Solution(#[from] SolutionError),
}

/// In-order traversal positions of a placed chain on a path: the shared
/// (non-replicable) hosts at fixed positions, one sampled host per replicable
/// VNF. Greedy earliest selection; succeeds iff any in-order selection exists.
fn admissible_selection(
    chain: &ServiceChain,
    path: &Path,
    hosts: &[BTreeSet<NodeId>],
) -> Option<Vec<NodeId>> {
    let mut cursor: i64 = -1;
    let mut picked = Vec::with_capacity(chain.vnf_count());
    for vnf in &chain.vnfs {
        let mut best: Option<(usize, NodeId)> = None;
        for &host in &hosts[vnf.index] {
            if let Some(pos) = path.position_of(host) {
                if pos as i64 > cursor && best.map_or(true, |(b, _)| pos < b) {
                    best = Some((pos, host));
                }
            }
        }
        let (pos, host) = best?;
        cursor = pos as i64;
        picked.push(host);
    }
    Some(picked)
}

/// Place each chain's VNFs uniformly at random over unused nodes, find the
/// admissible paths traversing them in order, select up to r_max + 1 of them
/// at random, and route each demand over a random selected path. Rejection
/// sampling retries until the sampled placement admits at least one path.
/// Deterministic for a fixed seed; the returned solution validates cleanly.
pub fn run_rfpa(
    net: &Network,
    set: &CostFunctionSet,
    chains: &[ServiceChain],
    background: &LoadLedger,
    r_max: usize,
    seed: u64,
) -> Result<(RaSolution, f64), RfpaError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ra = RaSolution::default();
    let mut used: BTreeSet<NodeId> = BTreeSet::new();

    for chain in chains {
        let effective_r_max = r_max.min(chain.r_max);
        let candidates: Vec<Arc<Path>> = net
            .paths_to(chain.egress)
            .into_iter()
            .filter(|p| p.links.len() + 1 >= chain.vnf_count())
            .collect();
        let mut admissible_failures = 0usize;
        let mut done = false;

        'attempts: for attempt in 0..RETRY_BUDGET {
            let _ = attempt;
            // sample hosts: one node per non-replicable VNF, 1 + r_max per
            // replicable VNF, all distinct and off the used set
            let mut free: Vec<NodeId> = (0..net.node_count())
                .map(NodeId)
                .filter(|n| !used.contains(n))
                .collect();
            free.shuffle(&mut rng);
            let mut cursor = 0usize;
            let mut hosts: Vec<BTreeSet<NodeId>> = Vec::with_capacity(chain.vnf_count());
            for vnf in &chain.vnfs {
                let need = if vnf.replicable {
                    1 + effective_r_max
                } else {
                    1
                };
                if cursor + need > free.len() {
                    admissible_failures += 1;
                    continue 'attempts;
                }
                hosts.push(free[cursor..cursor + need].iter().copied().collect());
                cursor += need;
            }

            // admissible paths traverse the placed hosts in sequence order
            let admissible: Vec<(&Arc<Path>, Vec<NodeId>)> = candidates
                .iter()
                .filter_map(|p| admissible_selection(chain, p, &hosts).map(|sel| (p, sel)))
                .collect();
            if admissible.is_empty() {
                admissible_failures += 1;
                continue 'attempts;
            }

            // choose up to r_max + 1 mutually compatible paths at random:
            // a path is compatible when no replicable host it claims (or any
            // sampled replicable host it merely crosses) appears on another
            // chosen path
            let mut order: Vec<usize> = (0..admissible.len()).collect();
            order.shuffle(&mut rng);
            let mut chosen: Vec<(&Arc<Path>, &Vec<NodeId>)> = Vec::new();
            for &i in &order {
                if chosen.len() == effective_r_max + 1 {
                    break;
                }
                let (path, selection) = &admissible[i];
                let compatible = chosen.iter().all(|(other_path, other_sel)| {
                    let replicable = |v: usize| chain.vnfs[v].replicable;
                    let cross = selection
                        .iter()
                        .enumerate()
                        .any(|(v, n)| replicable(v) && other_path.nodes.contains(n));
                    let crossed = other_sel
                        .iter()
                        .enumerate()
                        .any(|(v, n)| replicable(v) && path.nodes.contains(n));
                    !cross && !crossed
                });
                if compatible {
                    chosen.push((path, selection));
                }
            }
            if chosen.is_empty() {
                admissible_failures += 1;
                continue 'attempts;
            }

            // prune placements to the hosts the chosen paths actually claim
            let mut final_hosts: Vec<BTreeSet<NodeId>> =
                vec![BTreeSet::new(); chain.vnf_count()];
            for (_, selection) in &chosen {
                for (v, &n) in selection.iter().enumerate() {
                    final_hosts[v].insert(n);
                }
            }

            let selected: Vec<Arc<Path>> = chosen.iter().map(|(p, _)| (*p).clone()).collect();
            ra.chain_paths.insert(chain.id.clone(), selected.clone());
            for demand in &chain.demands {
                let pick = rng.random_range(0..selected.len());
                ra.demand_path.insert(
                    (chain.id.clone(), demand.id.clone()),
                    selected[pick].clone(),
                );
            }
            for (v, nodes) in final_hosts.iter().enumerate() {
                used.extend(nodes.iter().copied());
                ra.placements.insert((chain.id.clone(), v), nodes.clone());
            }
            done = true;
            break;
        }

        if !done {
            return Err(RfpaError::PlacementExhausted {
                chain: chain.id.clone(),
                attempts: RETRY_BUDGET,
                admissible_failures,
            });
        }
    }

    let cost = objective_with_background(net, set, background, &ra, chains)?;
    Ok((ra, cost))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solution::{validate, TeSolution, ValidateOptions};
    use crate::topology::Network;
    use crate::traffic::{ChainDemand, VnfSpec};

    fn diamond() -> Network {
        let net = Network::from_parts(
            vec!["S".into(), "M1".into(), "M2".into(), "G".into()],
            vec![
                ("sm1".into(), "S".into(), "M1".into(), 100.0),
                ("m1g".into(), "M1".into(), "G".into(), 100.0),
                ("sm2".into(), "S".into(), "M2".into(), 100.0),
                ("m2g".into(), "M2".into(), "G".into(), 100.0),
            ],
        )
        .unwrap();
        // catalog restricted to S -> G so the admissible structure is pinned
        net.build_path_catalog(&[(NodeId(0), NodeId(3))], 4, 4).0
    }

    /// anchor, one middle VNF, one at the egress: exactly two symmetric
    /// feasible placements on the diamond (middle host M1 or M2)
    fn pinned_chain() -> ServiceChain {
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
                VnfSpec {
                    index: 2,
                    replicable: true,
                },
            ],
            egress: NodeId(3),
            demands: vec![ChainDemand {
                id: "s0-d0".into(),
                bandwidth: 30.0,
            }],
            r_max: 0,
        }
    }

    #[test]
    fn forced_instance_is_deterministic_and_valid() {
        let net = diamond();
        let set = CostFunctionSet::default_set();
        let bg = LoadLedger::zeros(&net);
        let chains = vec![pinned_chain()];
        let (a, cost_a) = run_rfpa(&net, &set, &chains, &bg, 0, 123).unwrap();
        let (b, cost_b) = run_rfpa(&net, &set, &chains, &bg, 0, 123).unwrap();
        assert_eq!(a, b);
        assert_eq!(cost_a, cost_b);
        let report = validate(
            &net,
            &TeSolution::default(),
            &[],
            Some(&a),
            &chains,
            ValidateOptions::default(),
        );
        assert!(report.is_ok(), "{:?}", report.violations);
    }

    #[test]
    fn symmetric_placements_are_sampled_evenly() {
        let net = diamond();
        let set = CostFunctionSet::default_set();
        let bg = LoadLedger::zeros(&net);
        let chains = vec![pinned_chain()];
        let mut m1 = 0usize;
        for seed in 0..1000u64 {
            let (ra, _) = run_rfpa(&net, &set, &chains, &bg, 0, seed).unwrap();
            let hosts = &ra.placements[&("s0".into(), 1)];
            assert_eq!(hosts.len(), 1);
            if hosts.contains(&NodeId(1)) {
                m1 += 1;
            } else {
                assert!(hosts.contains(&NodeId(2)));
            }
        }
        assert!((350..=650).contains(&m1), "middle host M1 picked {m1}/1000");
    }

    #[test]
    fn impossible_placement_reports_diagnostics() {
        let net = diamond();
        let set = CostFunctionSet::default_set();
        let bg = LoadLedger::zeros(&net);
        // two chains cannot both claim three hosts on four nodes
        let mut c0 = pinned_chain();
        c0.id = "s0".into();
        let mut c1 = pinned_chain();
        c1.id = "s1".into();
        let err = run_rfpa(&net, &set, &[c0, c1], &bg, 0, 1).unwrap_err();
        assert!(matches!(err, RfpaError::PlacementExhausted { .. }));
    }
}
