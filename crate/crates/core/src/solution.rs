//! Canonical representation of routing and placement decisions, load
//! accounting, the constraint validator, and the solution JSON schema.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::costmodel::{total_network_cost, CostFunctionSet};
use crate::topology::{Network, NodeId, Path};
use crate::traffic::{Demand, ServiceChain};

/// Background-routing decisions: one path per background demand.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TeSolution {
    pub assignment: BTreeMap<String, Arc<Path>>,
}

/// Placement and chain-routing decisions: the selected paths per chain, the
/// path carrying each chain demand, and the hosting nodes per (chain, VNF).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RaSolution {
    pub chain_paths: BTreeMap<String, Vec<Arc<Path>>>,
    pub demand_path: BTreeMap<(String, String), Arc<Path>>,
    pub placements: BTreeMap<(String, usize), BTreeSet<NodeId>>,
}

impl RaSolution {
    /// Replicas in use per chain: selected paths beyond the first.
    pub fn replica_counts(&self, chains: &[ServiceChain]) -> Vec<usize> {
        chains
            .iter()
            .map(|c| {
                self.chain_paths
                    .get(&c.id)
                    .map(|p| p.len().saturating_sub(1))
                    .unwrap_or(0)
            })
            .collect()
    }
}

/// Per-link loads in Mbps, background and chain contributions tracked apart.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadLedger {
    pub background: Vec<f64>,
    pub chain: Vec<f64>,
}

impl LoadLedger {
    pub fn zeros(net: &Network) -> Self {
        LoadLedger {
            background: vec![0.0; net.link_count()],
            chain: vec![0.0; net.link_count()],
        }
    }

    pub fn totals(&self) -> Vec<f64> {
        self.background
            .iter()
            .zip(&self.chain)
            .map(|(b, c)| b + c)
            .collect()
    }

    pub fn utilizations(&self, net: &Network) -> Vec<f64> {
        self.totals()
            .iter()
            .enumerate()
            .map(|(i, t)| t / net.links()[i].capacity)
            .collect()
    }
}

#[derive(Debug, Error)]
pub enum SolutionError {
    #[error("demand `{0}` has no path assignment")]
    MissingAssignment(String),
    #[error("chain `{0}` referenced by the solution is unknown")]
    UnknownChain(String),
    #[error("node `{0}` referenced by the solution is unknown")]
    UnknownNode(String),
    #[error("consecutive nodes `{0}` and `{1}` are not linked")]
    NotLinked(String, String),
    #[error("invalid solution JSON: {0}")]
    Json(#[from] serde_json::Error),
}

/// Which model constraint a violation refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConstraintKind {
    /// Every demand rides exactly one path whose endpoints match it.
    RouteUniqueness,
    /// A demand may only use a path its chain has selected.
    UnselectedPath,
    /// A chain selects between 1 and r_max + 1 paths.
    PathCountRange,
    /// Every selected path must contain a host of every chain VNF.
    VnfNotOnPath,
    /// Two selected paths must not share the hosting node of a replicable VNF.
    SharedReplicaLocation,
    /// Along a selected path, a VNF host requires an earlier host of the
    /// previous VNF.
    SequenceOrder,
    /// A node hosts at most one VNF instance across all chains.
    NodeExclusive,
    /// A VNF has at most 1 + r_max * replicable hosting nodes.
    ReplicaBudget,
    /// A link carries more load than its capacity (optional check).
    CapacityExceeded,
    /// The solution references entities that do not exist.
    Malformed,
}

impl fmt::Display for ConstraintKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ConstraintKind::RouteUniqueness => "route-uniqueness",
            ConstraintKind::UnselectedPath => "unselected-path",
            ConstraintKind::PathCountRange => "path-count-range",
            ConstraintKind::VnfNotOnPath => "vnf-not-on-path",
            ConstraintKind::SharedReplicaLocation => "shared-replica-location",
            ConstraintKind::SequenceOrder => "sequence-order",
            ConstraintKind::NodeExclusive => "node-exclusive",
            ConstraintKind::ReplicaBudget => "replica-budget",
            ConstraintKind::CapacityExceeded => "capacity-exceeded",
            ConstraintKind::Malformed => "malformed",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub kind: ConstraintKind,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.kind, self.detail)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has(&self, kind: ConstraintKind) -> bool {
        self.violations.iter().any(|v| v.kind == kind)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ValidateOptions {
    pub enforce_capacity: bool,
}

/// Add every demand's bandwidth to the links of its assigned path. Background
/// and chain contributions are tracked separately. Errors when a demand lacks
/// an assignment.
pub fn accumulate_loads(
    net: &Network,
    te: &TeSolution,
    bg_demands: &[Demand],
    ra: Option<&RaSolution>,
    chains: &[ServiceChain],
) -> Result<LoadLedger, SolutionError> {
    let mut ledger = LoadLedger::zeros(net);
    for demand in bg_demands {
        let path = te
            .assignment
            .get(&demand.id)
            .ok_or_else(|| SolutionError::MissingAssignment(demand.id.clone()))?;
        for &link in &path.links {
            ledger.background[link.0] += demand.bandwidth;
        }
    }
    if let Some(ra) = ra {
        add_chain_loads(&mut ledger.chain, ra, chains)?;
    }
    Ok(ledger)
}

pub(crate) fn add_chain_loads(
    chain_loads: &mut [f64],
    ra: &RaSolution,
    chains: &[ServiceChain],
) -> Result<(), SolutionError> {
    for chain in chains {
        for demand in &chain.demands {
            let path = ra
                .demand_path
                .get(&(chain.id.clone(), demand.id.clone()))
                .ok_or_else(|| SolutionError::MissingAssignment(demand.id.clone()))?;
            for &link in &path.links {
                chain_loads[link.0] += demand.bandwidth;
            }
        }
    }
    Ok(())
}

/// Total network cost of a complete solution. The caller is responsible for
/// validating first; this only needs every demand to have an assignment.
pub fn objective(
    net: &Network,
    set: &CostFunctionSet,
    te: &TeSolution,
    bg_demands: &[Demand],
    ra: Option<&RaSolution>,
    chains: &[ServiceChain],
) -> Result<f64, SolutionError> {
    let ledger = accumulate_loads(net, te, bg_demands, ra, chains)?;
    Ok(total_network_cost(net, set, &ledger.totals()))
}

/// Total network cost of a placement solution on top of fixed background
/// loads. Every solver reports its final cost through this path so values are
/// comparable bit-for-bit.
pub fn objective_with_background(
    net: &Network,
    set: &CostFunctionSet,
    background: &LoadLedger,
    ra: &RaSolution,
    chains: &[ServiceChain],
) -> Result<f64, SolutionError> {
    let mut chain_loads = vec![0.0; net.link_count()];
    add_chain_loads(&mut chain_loads, ra, chains)?;
    let totals: Vec<f64> = background
        .background
        .iter()
        .zip(&chain_loads)
        .map(|(b, c)| b + c)
        .collect();
    Ok(total_network_cost(net, set, &totals))
}

/// Check a solution against the full constraint system. Violations are data,
/// not errors: the report is empty exactly when the solution is feasible.
pub fn validate(
    net: &Network,
    te: &TeSolution,
    bg_demands: &[Demand],
    ra: Option<&RaSolution>,
    chains: &[ServiceChain],
    options: ValidateOptions,
) -> ValidationReport {
    let mut v: Vec<Violation> = Vec::new();

    // background routing: exactly one endpoint-matching path per demand
    for demand in bg_demands {
        match te.assignment.get(&demand.id) {
            None => v.push(Violation {
                kind: ConstraintKind::RouteUniqueness,
                detail: format!("background demand `{}` has no path", demand.id),
            }),
            Some(path) => {
                if path.source() != demand.source || path.target() != demand.destination {
                    v.push(Violation {
                        kind: ConstraintKind::RouteUniqueness,
                        detail: format!(
                            "background demand `{}` rides a path from {} to {} instead of {} to {}",
                            demand.id,
                            net.node_name(path.source()),
                            net.node_name(path.target()),
                            net.node_name(demand.source),
                            net.node_name(demand.destination),
                        ),
                    });
                }
            }
        }
    }
    for id in te.assignment.keys() {
        if !bg_demands.iter().any(|d| &d.id == id) {
            v.push(Violation {
                kind: ConstraintKind::Malformed,
                detail: format!("assignment for unknown background demand `{id}`"),
            });
        }
    }

    if let Some(ra) = ra {
        validate_ra(net, ra, chains, &mut v);
    }

    if options.enforce_capacity {
        if let Ok(ledger) = accumulate_loads(net, te, bg_demands, ra, chains) {
            for (idx, total) in ledger.totals().iter().enumerate() {
                let link = &net.links()[idx];
                if *total > link.capacity {
                    v.push(Violation {
                        kind: ConstraintKind::CapacityExceeded,
                        detail: format!(
                            "link `{}` carries {:.1} Mbps over capacity {:.1}",
                            link.id, total, link.capacity
                        ),
                    });
                }
            }
        }
    }

    ValidationReport { violations: v }
}

fn validate_ra(net: &Network, ra: &RaSolution, chains: &[ServiceChain], v: &mut Vec<Violation>) {
    let chain_by_id: HashMap<&str, &ServiceChain> =
        chains.iter().map(|c| (c.id.as_str(), c)).collect();

    for id in ra.chain_paths.keys() {
        if !chain_by_id.contains_key(id.as_str()) {
            v.push(Violation {
                kind: ConstraintKind::Malformed,
                detail: format!("selected paths for unknown chain `{id}`"),
            });
        }
    }
    for (chain_id, vnf) in ra.placements.keys() {
        match chain_by_id.get(chain_id.as_str()) {
            None => v.push(Violation {
                kind: ConstraintKind::Malformed,
                detail: format!("placement for unknown chain `{chain_id}`"),
            }),
            Some(chain) if *vnf >= chain.vnfs.len() => v.push(Violation {
                kind: ConstraintKind::Malformed,
                detail: format!("placement for unknown VNF {vnf} of chain `{chain_id}`"),
            }),
            _ => {}
        }
    }

    for chain in chains {
        let selected: Vec<&Arc<Path>> = {
            // duplicates would be one selection variable; count distinct paths
            let mut seen: Vec<&Arc<Path>> = Vec::new();
            for p in ra.chain_paths.get(&chain.id).into_iter().flatten() {
                if !seen.iter().any(|q| q.nodes == p.nodes) {
                    seen.push(p);
                }
            }
            seen
        };

        // selected-path count within [1, r_max + 1]
        if selected.is_empty() || selected.len() > chain.r_max + 1 {
            v.push(Violation {
                kind: ConstraintKind::PathCountRange,
                detail: format!(
                    "chain `{}` selects {} paths, allowed range is [1, {}]",
                    chain.id,
                    selected.len(),
                    chain.r_max + 1
                ),
            });
        }

        // each chain demand rides exactly one selected path ending at the egress
        for demand in &chain.demands {
            match ra.demand_path.get(&(chain.id.clone(), demand.id.clone())) {
                None => v.push(Violation {
                    kind: ConstraintKind::RouteUniqueness,
                    detail: format!(
                        "chain `{}` demand `{}` has no path",
                        chain.id, demand.id
                    ),
                }),
                Some(path) => {
                    if path.target() != chain.egress {
                        v.push(Violation {
                            kind: ConstraintKind::RouteUniqueness,
                            detail: format!(
                                "chain `{}` demand `{}` ends at {} instead of the egress {}",
                                chain.id,
                                demand.id,
                                net.node_name(path.target()),
                                net.node_name(chain.egress),
                            ),
                        });
                    }
                    if !selected.iter().any(|p| p.nodes == path.nodes) {
                        v.push(Violation {
                            kind: ConstraintKind::UnselectedPath,
                            detail: format!(
                                "chain `{}` demand `{}` rides a path the chain did not select",
                                chain.id, demand.id
                            ),
                        });
                    }
                }
            }
        }

        // every selected path hosts every VNF, in sequence order
        for (pi, path) in selected.iter().enumerate() {
            for vnf in &chain.vnfs {
                let hosts = ra.placements.get(&(chain.id.clone(), vnf.index));
                let on_path: Vec<usize> = hosts
                    .map(|set| {
                        path.nodes
                            .iter()
                            .enumerate()
                            .filter(|(_, n)| set.contains(n))
                            .map(|(i, _)| i)
                            .collect()
                    })
                    .unwrap_or_default();
                if on_path.is_empty() {
                    v.push(Violation {
                        kind: ConstraintKind::VnfNotOnPath,
                        detail: format!(
                            "chain `{}` path #{pi} contains no host of VNF {}",
                            chain.id, vnf.index
                        ),
                    });
                }
                if vnf.index > 0 {
                    let prev = ra.placements.get(&(chain.id.clone(), vnf.index - 1));
                    for pos in on_path {
                        let preceded = prev
                            .map(|set| path.nodes[..pos].iter().any(|n| set.contains(n)))
                            .unwrap_or(false);
                        if !preceded {
                            v.push(Violation {
                                kind: ConstraintKind::SequenceOrder,
                                detail: format!(
                                    "chain `{}` path #{pi}: VNF {} hosted at {} with no earlier host of VNF {}",
                                    chain.id,
                                    vnf.index,
                                    net.node_name(path.nodes[pos]),
                                    vnf.index - 1
                                ),
                            });
                        }
                    }
                }
            }
        }

        // replicable hosts are private to one selected path
        for vnf in chain.vnfs.iter().filter(|v| v.replicable) {
            if let Some(hosts) = ra.placements.get(&(chain.id.clone(), vnf.index)) {
                for &host in hosts {
                    let sharing = selected
                        .iter()
                        .filter(|p| p.nodes.contains(&host))
                        .count();
                    if sharing > 1 {
                        v.push(Violation {
                            kind: ConstraintKind::SharedReplicaLocation,
                            detail: format!(
                                "chain `{}` VNF {} host {} lies on {} selected paths",
                                chain.id,
                                vnf.index,
                                net.node_name(host),
                                sharing
                            ),
                        });
                    }
                }
            }
        }

        // replica budget per VNF
        for vnf in &chain.vnfs {
            let count = ra
                .placements
                .get(&(chain.id.clone(), vnf.index))
                .map(|s| s.len())
                .unwrap_or(0);
            let budget = 1 + chain.r_max * usize::from(vnf.replicable);
            if count > budget {
                v.push(Violation {
                    kind: ConstraintKind::ReplicaBudget,
                    detail: format!(
                        "chain `{}` VNF {} has {count} hosts, budget {budget}",
                        chain.id, vnf.index
                    ),
                });
            }
        }
    }

    // node exclusivity across all chains and VNFs
    let mut usage: BTreeMap<NodeId, Vec<(String, usize)>> = BTreeMap::new();
    for ((chain_id, vnf), hosts) in &ra.placements {
        for &host in hosts {
            usage.entry(host).or_default().push((chain_id.clone(), *vnf));
        }
    }
    for (node, users) in usage {
        if users.len() > 1 {
            v.push(Violation {
                kind: ConstraintKind::NodeExclusive,
                detail: format!(
                    "node {} hosts {} VNF instances: {}",
                    net.node_name(node),
                    users.len(),
                    users
                        .iter()
                        .map(|(c, f)| format!("{c}/VNF{f}"))
                        .collect::<Vec<_>>()
                        .join(", ")
                ),
            });
        }
    }
}

// ---------------------------------------------------------------------------
// Solution JSON schema
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SolutionDocument {
    pub te_assignment: Vec<DemandPathEntry>,
    pub chains: Vec<ChainEntry>,
    pub cost: f64,
    pub per_link_utilization: Vec<LinkUtilizationEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DemandPathEntry {
    pub demand_id: String,
    pub path_nodes: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ChainEntry {
    pub chain_id: String,
    pub selected_paths: Vec<Vec<String>>,
    pub placements: Vec<PlacementEntry>,
    pub demand_paths: Vec<DemandPathEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PlacementEntry {
    pub vnf: usize,
    pub nodes: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LinkUtilizationEntry {
    pub link_id: String,
    pub utilization: f64,
}

impl SolutionDocument {
    pub fn from_solutions(
        net: &Network,
        te: &TeSolution,
        bg_demands: &[Demand],
        ra: Option<&RaSolution>,
        chains: &[ServiceChain],
        cost: f64,
    ) -> Result<Self, SolutionError> {
        let names = |p: &Path| -> Vec<String> {
            p.nodes.iter().map(|&n| net.node_name(n).to_string()).collect()
        };
        let te_assignment = te
            .assignment
            .iter()
            .map(|(id, p)| DemandPathEntry {
                demand_id: id.clone(),
                path_nodes: names(p),
            })
            .collect();
        let mut chain_entries = Vec::new();
        if let Some(ra) = ra {
            for chain in chains {
                let selected_paths = ra
                    .chain_paths
                    .get(&chain.id)
                    .into_iter()
                    .flatten()
                    .map(|p| names(p))
                    .collect();
                let placements = ra
                    .placements
                    .iter()
                    .filter(|((c, _), _)| c == &chain.id)
                    .map(|((_, vnf), nodes)| PlacementEntry {
                        vnf: *vnf,
                        nodes: nodes.iter().map(|&n| net.node_name(n).to_string()).collect(),
                    })
                    .collect();
                let demand_paths = ra
                    .demand_path
                    .iter()
                    .filter(|((c, _), _)| c == &chain.id)
                    .map(|((_, d), p)| DemandPathEntry {
                        demand_id: d.clone(),
                        path_nodes: names(p),
                    })
                    .collect();
                chain_entries.push(ChainEntry {
                    chain_id: chain.id.clone(),
                    selected_paths,
                    placements,
                    demand_paths,
                });
            }
        }
        let ledger = accumulate_loads(net, te, bg_demands, ra, chains)?;
        let per_link_utilization = ledger
            .utilizations(net)
            .iter()
            .enumerate()
            .map(|(i, &u)| LinkUtilizationEntry {
                link_id: net.links()[i].id.clone(),
                utilization: u,
            })
            .collect();
        Ok(SolutionDocument {
            te_assignment,
            chains: chain_entries,
            cost,
            per_link_utilization,
        })
    }

    /// Rebuild solver-facing solutions against a network; node sequences must
    /// resolve to existing nodes joined by existing links.
    pub fn resolve(
        &self,
        net: &Network,
    ) -> Result<(TeSolution, Option<RaSolution>), SolutionError> {
        let resolve_path = |names: &[String]| -> Result<Arc<Path>, SolutionError> {
            let mut nodes = Vec::with_capacity(names.len());
            for name in names {
                nodes.push(
                    net.node_id(name)
                        .ok_or_else(|| SolutionError::UnknownNode(name.clone()))?,
                );
            }
            let mut links = Vec::with_capacity(nodes.len().saturating_sub(1));
            for w in nodes.windows(2) {
                links.push(net.link_between(w[0], w[1]).ok_or_else(|| {
                    SolutionError::NotLinked(
                        net.node_name(w[0]).to_string(),
                        net.node_name(w[1]).to_string(),
                    )
                })?);
            }
            Ok(Arc::new(Path { nodes, links }))
        };

        let mut te = TeSolution::default();
        for entry in &self.te_assignment {
            te.assignment
                .insert(entry.demand_id.clone(), resolve_path(&entry.path_nodes)?);
        }
        if self.chains.is_empty() {
            return Ok((te, None));
        }
        let mut ra = RaSolution::default();
        for chain in &self.chains {
            let mut selected = Vec::new();
            for path in &chain.selected_paths {
                selected.push(resolve_path(path)?);
            }
            ra.chain_paths.insert(chain.chain_id.clone(), selected);
            for placement in &chain.placements {
                let mut nodes = BTreeSet::new();
                for name in &placement.nodes {
                    nodes.insert(
                        net.node_id(name)
                            .ok_or_else(|| SolutionError::UnknownNode(name.clone()))?,
                    );
                }
                ra.placements
                    .insert((chain.chain_id.clone(), placement.vnf), nodes);
            }
            for dp in &chain.demand_paths {
                ra.demand_path.insert(
                    (chain.chain_id.clone(), dp.demand_id.clone()),
                    resolve_path(&dp.path_nodes)?,
                );
            }
        }
        Ok((te, Some(ra)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::costmodel::CostFunctionSet;
    use crate::traffic::{ChainDemand, VnfSpec};

    fn line_net() -> Network {
        Network::from_parts(
            vec!["A".into(), "B".into(), "C".into()],
            vec![
                ("ab".into(), "A".into(), "B".into(), 100.0),
                ("bc".into(), "B".into(), "C".into(), 100.0),
            ],
        )
        .unwrap()
    }

    fn path(net: &Network, names: &[&str]) -> Arc<Path> {
        let nodes: Vec<NodeId> = names.iter().map(|n| net.node_id(n).unwrap()).collect();
        let links = nodes
            .windows(2)
            .map(|w| net.link_between(w[0], w[1]).unwrap())
            .collect();
        Arc::new(Path { nodes, links })
    }

    fn chain(net: &Network, id: &str, vnfs: usize, r_max: usize, demands: &[f64]) -> ServiceChain {
        ServiceChain {
            id: id.into(),
            vnfs: (0..vnfs)
                .map(|i| VnfSpec {
                    index: i,
                    replicable: i != 0,
                })
                .collect(),
            egress: net.node_id("C").unwrap(),
            demands: demands
                .iter()
                .enumerate()
                .map(|(i, &bw)| ChainDemand {
                    id: format!("{id}-d{i}"),
                    bandwidth: bw,
                })
                .collect(),
            r_max,
        }
    }

    fn feasible_fixture(net: &Network) -> (TeSolution, RaSolution, Vec<ServiceChain>) {
        let chains = vec![chain(net, "s0", 2, 0, &[10.0])];
        let p = path(net, &["A", "B", "C"]);
        let mut ra = RaSolution::default();
        ra.chain_paths.insert("s0".into(), vec![p.clone()]);
        ra.demand_path.insert(("s0".into(), "s0-d0".into()), p);
        ra.placements
            .insert(("s0".into(), 0), BTreeSet::from([net.node_id("A").unwrap()]));
        ra.placements
            .insert(("s0".into(), 1), BTreeSet::from([net.node_id("B").unwrap()]));
        (TeSolution::default(), ra, chains)
    }

    #[test]
    fn loads_add_up() {
        let net = line_net();
        let mut te = TeSolution::default();
        te.assignment.insert("bg-0".into(), path(&net, &["A", "B", "C"]));
        let demands = vec![Demand {
            id: "bg-0".into(),
            source: net.node_id("A").unwrap(),
            destination: net.node_id("C").unwrap(),
            bandwidth: 100.0,
        }];
        let ledger = accumulate_loads(&net, &te, &demands, None, &[]).unwrap();
        assert_eq!(ledger.background, vec![100.0, 100.0]);

        // two demands sharing a link
        let mut te2 = te.clone();
        te2.assignment.insert("bg-1".into(), path(&net, &["A", "B"]));
        let mut demands2 = demands.clone();
        demands2[0].bandwidth = 60.0;
        demands2.push(Demand {
            id: "bg-1".into(),
            source: net.node_id("A").unwrap(),
            destination: net.node_id("B").unwrap(),
            bandwidth: 80.0,
        });
        let ledger2 = accumulate_loads(&net, &te2, &demands2, None, &[]).unwrap();
        assert_eq!(ledger2.background[0], 140.0);
    }

    #[test]
    fn empty_inputs_zero_ledger_and_cost() {
        let net = line_net();
        let te = TeSolution::default();
        let ledger = accumulate_loads(&net, &te, &[], None, &[]).unwrap();
        assert!(ledger.totals().iter().all(|&t| t == 0.0));
        let set = CostFunctionSet::default_set();
        assert_eq!(objective(&net, &set, &te, &[], None, &[]).unwrap(), 0.0);
    }

    #[test]
    fn missing_assignment_is_an_error() {
        let net = line_net();
        let te = TeSolution::default();
        let demands = vec![Demand {
            id: "bg-0".into(),
            source: NodeId(0),
            destination: NodeId(2),
            bandwidth: 5.0,
        }];
        assert!(matches!(
            accumulate_loads(&net, &te, &demands, None, &[]),
            Err(SolutionError::MissingAssignment(_))
        ));
    }

    #[test]
    fn feasible_fixture_passes() {
        let net = line_net();
        let (te, ra, chains) = feasible_fixture(&net);
        let report = validate(&net, &te, &[], Some(&ra), &chains, ValidateOptions::default());
        assert!(report.is_ok(), "{:?}", report.violations);
    }

    #[test]
    fn demand_on_unselected_path_flagged() {
        let net = line_net();
        let (te, mut ra, chains) = feasible_fixture(&net);
        ra.demand_path
            .insert(("s0".into(), "s0-d0".into()), path(&net, &["B", "C"]));
        let report = validate(&net, &te, &[], Some(&ra), &chains, ValidateOptions::default());
        assert!(report.has(ConstraintKind::UnselectedPath));
    }

    #[test]
    fn too_many_selected_paths_flagged() {
        let net = line_net();
        let (te, mut ra, mut chains) = feasible_fixture(&net);
        chains[0].r_max = 1;
        // three distinct "paths" exceed r_max + 1 = 2
        ra.chain_paths.insert(
            "s0".into(),
            vec![
                path(&net, &["A", "B", "C"]),
                path(&net, &["B", "C"]),
                path(&net, &["A", "B"]),
            ],
        );
        let report = validate(&net, &te, &[], Some(&ra), &chains, ValidateOptions::default());
        assert!(report.has(ConstraintKind::PathCountRange));
    }

    #[test]
    fn reversed_vnf_order_flagged() {
        let net = line_net();
        let (te, mut ra, chains) = feasible_fixture(&net);
        ra.placements
            .insert(("s0".into(), 0), BTreeSet::from([net.node_id("B").unwrap()]));
        ra.placements
            .insert(("s0".into(), 1), BTreeSet::from([net.node_id("A").unwrap()]));
        let report = validate(&net, &te, &[], Some(&ra), &chains, ValidateOptions::default());
        assert!(report.has(ConstraintKind::SequenceOrder));
    }

    #[test]
    fn capacity_option_flags_overload() {
        let net = line_net();
        let (te, ra, mut chains) = feasible_fixture(&net);
        chains[0].demands[0].bandwidth = 150.0;
        let report = validate(
            &net,
            &te,
            &[],
            Some(&ra),
            &chains,
            ValidateOptions {
                enforce_capacity: true,
            },
        );
        assert!(report.has(ConstraintKind::CapacityExceeded));
        let relaxed = validate(&net, &te, &[], Some(&ra), &chains, ValidateOptions::default());
        assert!(relaxed.is_ok());
    }

    #[test]
    fn document_roundtrip_revalidates() {
        let net = line_net();
        let (te, ra, chains) = feasible_fixture(&net);
        let set = CostFunctionSet::default_set();
        let cost = objective(&net, &set, &te, &[], Some(&ra), &chains).unwrap();
        let doc =
            SolutionDocument::from_solutions(&net, &te, &[], Some(&ra), &chains, cost).unwrap();
        let text = serde_json::to_string_pretty(&doc).unwrap();
        let parsed: SolutionDocument = serde_json::from_str(&text).unwrap();
        let (te2, ra2) = parsed.resolve(&net).unwrap();
        assert_eq!(te, te2);
        assert_eq!(ra, ra2.unwrap());
    }
}
