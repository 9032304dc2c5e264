//! Background and data-center demand generation.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::topology::{Network, NodeId};

/// A point-to-point traffic demand in Mbps.
#[derive(Debug, Clone, PartialEq)]
pub struct Demand {
    pub id: String,
    pub source: NodeId,
    pub destination: NodeId,
    pub bandwidth: f64,
}

/// A chain demand carries bandwidth only; its origin is wherever the chain's
/// first VNF ends up and its destination is the chain's egress node.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainDemand {
    pub id: String,
    pub bandwidth: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VnfSpec {
    pub index: usize,
    pub replicable: bool,
}

/// An ordered VNF chain with a fixed egress node and a replica budget. The
/// first VNF is the non-replicable anchor; its host sources the chain's
/// demands.
#[derive(Debug, Clone, PartialEq)]
pub struct ServiceChain {
    pub id: String,
    pub vnfs: Vec<VnfSpec>,
    pub egress: NodeId,
    pub demands: Vec<ChainDemand>,
    pub r_max: usize,
}

impl ServiceChain {
    pub fn vnf_count(&self) -> usize {
        self.vnfs.len()
    }

    pub fn with_r_max(mut self, r_max: usize) -> Self {
        self.r_max = r_max;
        self
    }
}

/// Experiment traffic parameters: background connection count and bandwidth
/// interval `(0, bg_bandwidth_max]`, per-chain-demand bandwidth, and how many
/// demands each chain carries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TrafficProfile {
    pub connection_count: usize,
    pub bg_bandwidth_max: f64,
    pub dc_bandwidth: f64,
    #[serde(default = "default_demands_per_chain")]
    pub demands_per_chain: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_demands_per_chain() -> usize {
    5
}

#[derive(Debug, Error)]
pub enum TrafficError {
    #[error("requested {requested} connections but only {available} ordered node pairs exist")]
    TooManyConnections { requested: usize, available: usize },
    #[error("requested {requested} chains but the network has only {nodes} nodes")]
    TooManyChains { requested: usize, nodes: usize },
    #[error("invalid traffic profile: {0}")]
    InvalidProfile(String),
    #[error("network needs at least 2 nodes")]
    TooFewNodes,
}

fn check_profile(profile: &TrafficProfile) -> Result<(), TrafficError> {
    if !(profile.bg_bandwidth_max > 0.0) {
        return Err(TrafficError::InvalidProfile(
            "bgBandwidthMax must be positive".into(),
        ));
    }
    if !(profile.dc_bandwidth > 0.0) {
        return Err(TrafficError::InvalidProfile(
            "dcBandwidth must be positive".into(),
        ));
    }
    Ok(())
}

/// Draw `connection_count` background demands: source/destination pairs
/// uniformly without replacement over ordered node pairs, bandwidths uniform
/// over `(0, bg_bandwidth_max]`. Deterministic for a fixed profile seed.
pub fn generate_background_traffic(
    net: &Network,
    profile: &TrafficProfile,
) -> Result<Vec<Demand>, TrafficError> {
    check_profile(profile)?;
    if net.node_count() < 2 {
        return Err(TrafficError::TooFewNodes);
    }
    let n = net.node_count();
    let available = n * (n - 1);
    if profile.connection_count > available {
        return Err(TrafficError::TooManyConnections {
            requested: profile.connection_count,
            available,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(profile.seed);
    let picks = sample(&mut rng, available, profile.connection_count);
    let mut demands = Vec::with_capacity(profile.connection_count);
    for (i, pick) in picks.iter().enumerate() {
        let src = pick / (n - 1);
        let mut dst = pick % (n - 1);
        if dst >= src {
            dst += 1;
        }
        // 1 - u maps [0,1) onto (0,1], keeping the interval half-open as specified
        let bandwidth = (1.0 - rng.random::<f64>()) * profile.bg_bandwidth_max;
        demands.push(Demand {
            id: format!("bg-{i}"),
            source: NodeId(src),
            destination: NodeId(dst),
            bandwidth,
        });
    }
    Ok(demands)
}

/// Build `chain_count` service chains: each gets a distinct random egress
/// node, a non-replicable first VNF followed by replicable ones, and
/// `demands_per_chain` demands of `dc_bandwidth` each. `r_max` starts at 0;
/// callers set it per experiment cell.
pub fn build_service_chains(
    net: &Network,
    chain_count: usize,
    vnfs_per_chain: usize,
    profile: &TrafficProfile,
    seed: u64,
) -> Result<Vec<ServiceChain>, TrafficError> {
    check_profile(profile)?;
    if chain_count == 0 || vnfs_per_chain == 0 {
        return Err(TrafficError::InvalidProfile(
            "chainCount and vnfsPerChain must be at least 1".into(),
        ));
    }
    if chain_count > net.node_count() {
        return Err(TrafficError::TooManyChains {
            requested: chain_count,
            nodes: net.node_count(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let egresses = sample(&mut rng, net.node_count(), chain_count);
    let mut chains = Vec::with_capacity(chain_count);
    for (c, egress) in egresses.iter().enumerate() {
        let vnfs = (0..vnfs_per_chain)
            .map(|v| VnfSpec {
                index: v,
                replicable: v != 0,
            })
            .collect();
        let demands = (0..profile.demands_per_chain)
            .map(|d| ChainDemand {
                id: format!("s{c}-d{d}"),
                bandwidth: profile.dc_bandwidth,
            })
            .collect();
        chains.push(ServiceChain {
            id: format!("s{c}"),
            vnfs,
            egress: NodeId(egress),
            demands,
            r_max: 0,
        });
    }
    Ok(chains)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_net(n: usize) -> Network {
        let nodes: Vec<String> = (0..n).map(|i| format!("N{i}")).collect();
        let links = (0..n)
            .map(|i| {
                (
                    format!("l{i}"),
                    format!("N{i}"),
                    format!("N{}", (i + 1) % n),
                    100.0,
                )
            })
            .collect();
        Network::from_parts(nodes, links).unwrap()
    }

    fn profile(count: usize, seed: u64) -> TrafficProfile {
        TrafficProfile {
            connection_count: count,
            bg_bandwidth_max: 160.0,
            dc_bandwidth: 35.0,
            demands_per_chain: 5,
            seed,
        }
    }

    #[test]
    fn zero_connections_yield_empty_list() {
        let net = small_net(5);
        let demands = generate_background_traffic(&net, &profile(0, 7)).unwrap();
        assert!(demands.is_empty());
    }

    #[test]
    fn demands_respect_bounds_and_distinct_pairs() {
        let net = small_net(6);
        let demands = generate_background_traffic(&net, &profile(30, 3)).unwrap();
        assert_eq!(demands.len(), 30);
        let mut pairs = std::collections::HashSet::new();
        for d in &demands {
            assert_ne!(d.source, d.destination);
            assert!(d.bandwidth > 0.0 && d.bandwidth <= 160.0);
            assert!(pairs.insert((d.source, d.destination)), "pair repeated");
        }
    }

    #[test]
    fn same_seed_same_demands() {
        let net = small_net(8);
        let a = generate_background_traffic(&net, &profile(10, 42)).unwrap();
        let b = generate_background_traffic(&net, &profile(10, 42)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn too_many_connections_errors() {
        let net = small_net(3);
        let err = generate_background_traffic(&net, &profile(7, 0)).unwrap_err();
        assert!(matches!(err, TrafficError::TooManyConnections { .. }));
    }

    #[test]
    fn chains_have_anchor_and_distinct_egresses() {
        let net = small_net(6);
        let chains = build_service_chains(&net, 2, 2, &profile(0, 5), 11).unwrap();
        assert_eq!(chains.len(), 2);
        assert_ne!(chains[0].egress, chains[1].egress);
        for chain in &chains {
            assert!(!chain.vnfs[0].replicable);
            assert!(chain.vnfs[1..].iter().all(|v| v.replicable));
            assert_eq!(chain.demands.len(), 5);
            assert!(chain.demands.iter().all(|d| d.bandwidth == 35.0));
        }
    }

    #[test]
    fn degenerate_single_vnf_chain() {
        let net = small_net(4);
        let chains = build_service_chains(&net, 1, 1, &profile(0, 5), 1).unwrap();
        assert_eq!(chains[0].vnfs.len(), 1);
        assert!(!chains[0].vnfs[0].replicable);
    }

    #[test]
    fn chain_count_bounded_by_nodes() {
        let net = small_net(3);
        assert!(matches!(
            build_service_chains(&net, 4, 2, &profile(0, 5), 1),
            Err(TrafficError::TooManyChains { .. })
        ));
    }
}
