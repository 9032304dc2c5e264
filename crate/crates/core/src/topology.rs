//! Network representation, SNDLib-native-format ingestion, and enumeration of
//! the candidate path sets used by every solver.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap, HashMap, VecDeque};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

/// Index of a node inside a [`Network`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub usize);

/// Index of a link inside a [`Network`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LinkId(pub usize);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// An undirected link with a capacity in Mbps.
#[derive(Debug, Clone, PartialEq)]
pub struct Link {
    pub id: String,
    pub a: NodeId,
    pub b: NodeId,
    pub capacity: f64,
}

impl Link {
    pub fn endpoints(&self) -> (NodeId, NodeId) {
        (self.a, self.b)
    }

    pub fn other(&self, n: NodeId) -> NodeId {
        if n == self.a {
            self.b
        } else {
            self.a
        }
    }
}

/// A simple path: an ordered node list plus the links joining consecutive nodes.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Path {
    pub nodes: Vec<NodeId>,
    pub links: Vec<LinkId>,
}

impl Path {
    pub fn source(&self) -> NodeId {
        *self.nodes.first().expect("path has at least two nodes")
    }

    pub fn target(&self) -> NodeId {
        *self.nodes.last().expect("path has at least two nodes")
    }

    pub fn hop_count(&self) -> usize {
        self.links.len()
    }

    /// Whether the path traverses the given link.
    pub fn traverses(&self, link: LinkId) -> bool {
        self.links.contains(&link)
    }

    /// Position of `n` along the path, if present.
    pub fn position_of(&self, n: NodeId) -> Option<usize> {
        self.nodes.iter().position(|&m| m == n)
    }
}

#[derive(Debug, Error)]
pub enum TopologyError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("invalid link: {0}")]
    InvalidLink(String),
}

/// Immutable network: nodes, undirected links, and a catalog of candidate
/// paths per (source, destination) pair. Construct via [`Network::parse_sndlib`]
/// or [`Network::from_parts`], then populate the catalog with
/// [`Network::build_path_catalog`].
#[derive(Debug, Clone)]
pub struct Network {
    node_names: Vec<String>,
    node_index: HashMap<String, NodeId>,
    links: Vec<Link>,
    /// adjacency[n] = (neighbor, link), sorted by neighbor name for determinism
    adjacency: Vec<Vec<(NodeId, LinkId)>>,
    /// lexicographic rank of each node's name among all names
    lex_rank: Vec<usize>,
    path_catalog: BTreeMap<(NodeId, NodeId), Vec<Arc<Path>>>,
}

impl Network {
    pub fn from_parts(
        nodes: Vec<String>,
        links: Vec<(String, String, String, f64)>,
    ) -> Result<Self, TopologyError> {
        let mut net = Network {
            node_names: Vec::new(),
            node_index: HashMap::new(),
            links: Vec::new(),
            adjacency: Vec::new(),
            lex_rank: Vec::new(),
            path_catalog: BTreeMap::new(),
        };
        for name in nodes {
            if net.node_index.contains_key(&name) {
                return Err(TopologyError::InvalidLink(format!(
                    "duplicate node id `{name}`"
                )));
            }
            let id = NodeId(net.node_names.len());
            net.node_index.insert(name.clone(), id);
            net.node_names.push(name);
        }
        net.adjacency = vec![Vec::new(); net.node_names.len()];
        for (id, a, b, capacity) in links {
            net.push_link(id, &a, &b, capacity, None)?;
        }
        net.finish();
        Ok(net)
    }

    fn push_link(
        &mut self,
        id: String,
        a: &str,
        b: &str,
        capacity: f64,
        line: Option<usize>,
    ) -> Result<(), TopologyError> {
        let fail = |message: String| match line {
            Some(line) => TopologyError::Parse { line, message },
            None => TopologyError::InvalidLink(message),
        };
        let &na = self
            .node_index
            .get(a)
            .ok_or_else(|| fail(format!("link `{id}` references unknown node `{a}`")))?;
        let &nb = self
            .node_index
            .get(b)
            .ok_or_else(|| fail(format!("link `{id}` references unknown node `{b}`")))?;
        if na == nb {
            return Err(fail(format!("link `{id}` is a self-loop on `{a}`")));
        }
        if !(capacity > 0.0) {
            return Err(fail(format!("link `{id}` has non-positive capacity")));
        }
        let key = (na.min(nb), na.max(nb));
        if self
            .links
            .iter()
            .any(|l| (l.a.min(l.b), l.a.max(l.b)) == key)
        {
            return Err(fail(format!("duplicate link between `{a}` and `{b}`")));
        }
        if self.links.iter().any(|l| l.id == id) {
            return Err(fail(format!("duplicate link id `{id}`")));
        }
        let lid = LinkId(self.links.len());
        self.links.push(Link {
            id,
            a: na,
            b: nb,
            capacity,
        });
        self.adjacency[na.0].push((nb, lid));
        self.adjacency[nb.0].push((na, lid));
        Ok(())
    }

    fn finish(&mut self) {
        let mut order: Vec<usize> = (0..self.node_names.len()).collect();
        order.sort_by(|&i, &j| self.node_names[i].cmp(&self.node_names[j]));
        self.lex_rank = vec![0; self.node_names.len()];
        for (rank, &i) in order.iter().enumerate() {
            self.lex_rank[i] = rank;
        }
        let ranks = self.lex_rank.clone();
        for adj in &mut self.adjacency {
            adj.sort_by_key(|(n, _)| ranks[n.0]);
        }
    }

    /// Parse the SNDLib native plain-text format. Only the `NODES ( ... )` and
    /// `LINKS ( ... )` sections are consumed: node ids, link ids, endpoints,
    /// and the capacity field. A link's capacity is the first module capacity
    /// when a module list is present, otherwise the pre-installed capacity.
    /// `capacity_override`, when given, replaces every parsed capacity.
    pub fn parse_sndlib(
        text: &str,
        capacity_override: Option<f64>,
    ) -> Result<Self, TopologyError> {
        #[derive(PartialEq)]
        enum Section {
            None,
            Nodes,
            Links,
            Other,
        }
        let mut net = Network {
            node_names: Vec::new(),
            node_index: HashMap::new(),
            links: Vec::new(),
            adjacency: Vec::new(),
            lex_rank: Vec::new(),
            path_catalog: BTreeMap::new(),
        };
        let mut section = Section::None;
        let mut saw_nodes = false;
        let mut saw_links = false;
        let mut pending_links: Vec<(usize, String)> = Vec::new();

        for (idx, raw) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with('?') {
                continue;
            }
            match section {
                Section::None => {
                    if let Some(rest) = line.strip_prefix("NODES") {
                        if rest.trim() != "(" {
                            return Err(TopologyError::Parse {
                                line: lineno,
                                message: "expected `NODES (`".into(),
                            });
                        }
                        section = Section::Nodes;
                        saw_nodes = true;
                    } else if let Some(rest) = line.strip_prefix("LINKS") {
                        if rest.trim() != "(" {
                            return Err(TopologyError::Parse {
                                line: lineno,
                                message: "expected `LINKS (`".into(),
                            });
                        }
                        section = Section::Links;
                        saw_links = true;
                    } else if line.ends_with('(') {
                        // DEMANDS, ADMISSIBLE_PATHS, META sections are skipped
                        section = Section::Other;
                    }
                    // anything else outside a section is ignored
                }
                Section::Nodes => {
                    if line == ")" {
                        section = Section::None;
                        continue;
                    }
                    let name = line
                        .split_whitespace()
                        .next()
                        .ok_or(TopologyError::Parse {
                            line: lineno,
                            message: "empty node entry".into(),
                        })?
                        .to_string();
                    if net.node_index.contains_key(&name) {
                        return Err(TopologyError::Parse {
                            line: lineno,
                            message: format!("duplicate node id `{name}`"),
                        });
                    }
                    let id = NodeId(net.node_names.len());
                    net.node_index.insert(name.clone(), id);
                    net.node_names.push(name);
                }
                Section::Links => {
                    if line == ")" {
                        section = Section::None;
                        continue;
                    }
                    pending_links.push((lineno, line.to_string()));
                }
                Section::Other => {
                    if line == ")" {
                        section = Section::None;
                    }
                }
            }
        }
        if section != Section::None {
            return Err(TopologyError::Parse {
                line: text.lines().count(),
                message: "unterminated section".into(),
            });
        }
        if !saw_nodes || !saw_links {
            return Err(TopologyError::Parse {
                line: text.lines().count(),
                message: "missing NODES or LINKS section".into(),
            });
        }

        net.adjacency = vec![Vec::new(); net.node_names.len()];
        for (lineno, entry) in pending_links {
            let (id, a, b, capacity) = parse_link_entry(&entry, lineno)?;
            let capacity = capacity_override.unwrap_or(capacity);
            net.push_link(id, &a, &b, capacity, Some(lineno))?;
        }
        net.finish();
        Ok(net)
    }

    /// Serialize to the SNDLib native format. Re-parsing the output yields a
    /// network equal to `self` (up to the empty path catalog).
    pub fn to_sndlib(&self) -> String {
        let mut out = String::new();
        out.push_str("?SNDlib native format; type: network; version: 1.0\n\n");
        out.push_str("NODES (\n");
        for name in &self.node_names {
            out.push_str(&format!("  {name} ( 0.00 0.00 )\n"));
        }
        out.push_str(")\n\nLINKS (\n");
        for link in &self.links {
            out.push_str(&format!(
                "  {} ( {} {} ) 0.00 0.00 0.00 0.00 ( {} 1.00 )\n",
                link.id,
                self.node_names[link.a.0],
                self.node_names[link.b.0],
                link.capacity,
            ));
        }
        out.push_str(")\n");
        out
    }

    pub fn node_count(&self) -> usize {
        self.node_names.len()
    }

    pub fn link_count(&self) -> usize {
        self.links.len()
    }

    pub fn node_name(&self, n: NodeId) -> &str {
        &self.node_names[n.0]
    }

    pub fn node_names(&self) -> &[String] {
        &self.node_names
    }

    pub fn node_id(&self, name: &str) -> Option<NodeId> {
        self.node_index.get(name).copied()
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn link(&self, l: LinkId) -> &Link {
        &self.links[l.0]
    }

    pub fn neighbors(&self, n: NodeId) -> &[(NodeId, LinkId)] {
        &self.adjacency[n.0]
    }

    /// The link joining two nodes, if any.
    pub fn link_between(&self, a: NodeId, b: NodeId) -> Option<LinkId> {
        self.adjacency[a.0]
            .iter()
            .find(|(n, _)| *n == b)
            .map(|&(_, l)| l)
    }

    /// Replace every link capacity with a uniform value.
    pub fn with_uniform_capacity(mut self, capacity: f64) -> Self {
        for link in &mut self.links {
            link.capacity = capacity;
        }
        self
    }

    pub fn path_catalog(&self) -> &BTreeMap<(NodeId, NodeId), Vec<Arc<Path>>> {
        &self.path_catalog
    }

    pub fn paths_between(&self, src: NodeId, dst: NodeId) -> &[Arc<Path>] {
        self.path_catalog
            .get(&(src, dst))
            .map(|v| v.as_slice())
            .unwrap_or(&[])
    }

    /// All catalog paths that terminate at `dst`, in catalog order.
    pub fn paths_to(&self, dst: NodeId) -> Vec<Arc<Path>> {
        self.path_catalog
            .iter()
            .filter(|((_, d), _)| *d == dst)
            .flat_map(|(_, v)| v.iter().cloned())
            .collect()
    }

    /// Hop distances from `src` to every node (usize::MAX when unreachable).
    pub fn bfs_distances(&self, src: NodeId) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.node_count()];
        dist[src.0] = 0;
        let mut queue = VecDeque::from([src]);
        while let Some(u) = queue.pop_front() {
            for &(v, _) in &self.adjacency[u.0] {
                if dist[v.0] == usize::MAX {
                    dist[v.0] = dist[u.0] + 1;
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    /// Largest finite hop distance between any node pair.
    pub fn diameter(&self) -> usize {
        let mut diam = 0;
        for n in 0..self.node_count() {
            for &d in &self.bfs_distances(NodeId(n)) {
                if d != usize::MAX {
                    diam = diam.max(d);
                }
            }
        }
        diam
    }

    /// Default hop bound for path enumeration: diameter + 2.
    pub fn default_max_hops(&self) -> usize {
        self.diameter() + 2
    }

    /// Up to `k` loop-free paths from `src` to `dst`, each within `max_hops`
    /// links, ordered by hop count and then lexicographically by the node-name
    /// sequence. Deterministic for fixed inputs; empty when no path exists.
    pub fn enumerate_paths(
        &self,
        src: NodeId,
        dst: NodeId,
        k: usize,
        max_hops: usize,
    ) -> Vec<Path> {
        assert!(src != dst, "enumerate_paths requires distinct endpoints");
        if k == 0 {
            return Vec::new();
        }
        let dist_to_dst = self.bfs_distances(dst);
        if dist_to_dst[src.0] == usize::MAX || dist_to_dst[src.0] > max_hops {
            return Vec::new();
        }

        // Best-first over (hop count, lex rank sequence); popping in key order
        // makes the first k completed paths exactly the k smallest.
        struct Partial {
            key: (usize, Vec<usize>),
            nodes: Vec<NodeId>,
            links: Vec<LinkId>,
            visited: u128,
        }
        impl PartialEq for Partial {
            fn eq(&self, other: &Self) -> bool {
                self.key == other.key
            }
        }
        impl Eq for Partial {}
        impl PartialOrd for Partial {
            fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
                Some(self.cmp(other))
            }
        }
        impl Ord for Partial {
            fn cmp(&self, other: &Self) -> std::cmp::Ordering {
                self.key.cmp(&other.key)
            }
        }
        assert!(
            self.node_count() <= 128,
            "path enumeration supports up to 128 nodes"
        );

        let mut heap = BinaryHeap::new();
        heap.push(Reverse(Partial {
            key: (0, vec![self.lex_rank[src.0]]),
            nodes: vec![src],
            links: Vec::new(),
            visited: 1u128 << src.0,
        }));
        let mut found = Vec::new();
        while let Some(Reverse(p)) = heap.pop() {
            let last = *p.nodes.last().unwrap();
            if last == dst {
                found.push(Path {
                    nodes: p.nodes,
                    links: p.links,
                });
                if found.len() >= k {
                    break;
                }
                continue;
            }
            for &(next, link) in &self.adjacency[last.0] {
                if p.visited & (1u128 << next.0) != 0 {
                    continue;
                }
                let hops = p.links.len() + 1;
                if dist_to_dst[next.0] == usize::MAX || hops + dist_to_dst[next.0] > max_hops {
                    continue;
                }
                let mut key_seq = p.key.1.clone();
                key_seq.push(self.lex_rank[next.0]);
                let mut nodes = p.nodes.clone();
                nodes.push(next);
                let mut links = p.links.clone();
                links.push(link);
                heap.push(Reverse(Partial {
                    key: (hops, key_seq),
                    nodes,
                    links,
                    visited: p.visited | (1u128 << next.0),
                }));
            }
        }
        found
    }

    /// Populate the path catalog for exactly the given pairs. Pairs with no
    /// connecting path get an empty entry and a warning. Returns the network
    /// with the catalog installed plus the warnings.
    pub fn build_path_catalog(
        mut self,
        pairs: &[(NodeId, NodeId)],
        k: usize,
        max_hops: usize,
    ) -> (Self, Vec<String>) {
        let mut warnings = Vec::new();
        for &(src, dst) in pairs {
            if self.path_catalog.contains_key(&(src, dst)) {
                continue;
            }
            let paths = self.enumerate_paths(src, dst, k, max_hops);
            if paths.is_empty() {
                warnings.push(format!(
                    "no path from {} to {} within {} hops",
                    self.node_names[src.0], self.node_names[dst.0], max_hops
                ));
            }
            self.path_catalog
                .insert((src, dst), paths.into_iter().map(Arc::new).collect());
        }
        (self, warnings)
    }

    /// Catalog over all ordered node pairs.
    pub fn build_full_catalog(self, k: usize, max_hops: usize) -> (Self, Vec<String>) {
        let n = self.node_count();
        let mut pairs = Vec::with_capacity(n * (n - 1));
        for s in 0..n {
            for d in 0..n {
                if s != d {
                    pairs.push((NodeId(s), NodeId(d)));
                }
            }
        }
        self.build_path_catalog(&pairs, k, max_hops)
    }
}

impl PartialEq for Network {
    fn eq(&self, other: &Self) -> bool {
        self.node_names == other.node_names && self.links == other.links
    }
}

/// `id ( a b ) pre preCost routingCost setupCost ( modCap modCost ... )`,
/// with everything after the endpoints optional.
fn parse_link_entry(entry: &str, line: usize) -> Result<(String, String, String, f64), TopologyError> {
    let fail = |message: String| TopologyError::Parse { line, message };
    let spaced = entry.replace('(', " ( ").replace(')', " ) ");
    let tokens: Vec<&str> = spaced.split_whitespace().collect();
    let mut it = tokens.iter();
    let id = it
        .next()
        .ok_or_else(|| fail("empty link entry".into()))?
        .to_string();
    if it.next() != Some(&"(") {
        return Err(fail(format!("link `{id}`: expected `(` before endpoints")));
    }
    let a = it
        .next()
        .ok_or_else(|| fail(format!("link `{id}`: missing source node")))?
        .to_string();
    let b = it
        .next()
        .ok_or_else(|| fail(format!("link `{id}`: missing target node")))?
        .to_string();
    if it.next() != Some(&")") {
        return Err(fail(format!("link `{id}`: expected `)` after endpoints")));
    }
    let rest: Vec<&str> = it.copied().collect();
    let mut pre_installed = None;
    let mut module_capacity = None;
    if !rest.is_empty() {
        if let Some(tok) = rest.first() {
            if *tok != "(" {
                pre_installed = Some(tok.parse::<f64>().map_err(|_| {
                    fail(format!("link `{id}`: bad pre-installed capacity `{tok}`"))
                })?);
            }
        }
        if let Some(open) = rest.iter().position(|t| *t == "(") {
            if let Some(tok) = rest.get(open + 1) {
                if *tok != ")" {
                    module_capacity = Some(tok.parse::<f64>().map_err(|_| {
                        fail(format!("link `{id}`: bad module capacity `{tok}`"))
                    })?);
                }
            }
        }
    }
    let capacity = match (module_capacity, pre_installed) {
        (Some(m), _) if m > 0.0 => m,
        (_, Some(p)) if p > 0.0 => p,
        _ => {
            return Err(fail(format!(
                "link `{id}`: no positive capacity field (supply an override)"
            )))
        }
    };
    Ok((id, a, b, capacity))
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "\
NODES (
  A ( 0 0 )
  B ( 1 0 )
)
LINKS (
  L1 ( A B ) 0.0 0.0 0.0 0.0 ( 100.0 1.0 )
)
";

    pub(crate) fn triangle() -> Network {
        Network::from_parts(
            vec!["A".into(), "B".into(), "C".into()],
            vec![
                ("ab".into(), "A".into(), "B".into(), 100.0),
                ("bc".into(), "B".into(), "C".into(), 100.0),
                ("ac".into(), "A".into(), "C".into(), 100.0),
            ],
        )
        .unwrap()
    }

    #[test]
    fn parses_minimal_document() {
        let net = Network::parse_sndlib(MINIMAL, None).unwrap();
        assert_eq!(net.node_count(), 2);
        assert_eq!(net.link_count(), 1);
        assert_eq!(net.links()[0].capacity, 100.0);
    }

    #[test]
    fn capacity_override_wins() {
        let net = Network::parse_sndlib(MINIMAL, Some(2500.0)).unwrap();
        assert_eq!(net.links()[0].capacity, 2500.0);
    }

    #[test]
    fn unknown_node_names_line() {
        let text = "NODES (\n A ( 0 0 )\n)\nLINKS (\n L1 ( A Z ) ( 10 1 )\n)\n";
        let err = Network::parse_sndlib(text, None).unwrap_err();
        match err {
            TopologyError::Parse { line, message } => {
                assert_eq!(line, 5);
                assert!(message.contains("unknown node"), "{message}");
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn duplicate_link_rejected() {
        let text = "NODES (\n A ( 0 0 )\n B ( 0 0 )\n)\nLINKS (\n L1 ( A B ) ( 10 1 )\n L2 ( B A ) ( 10 1 )\n)\n";
        let err = Network::parse_sndlib(text, None).unwrap_err();
        assert!(err.to_string().contains("duplicate link"), "{err}");
    }

    #[test]
    fn self_loop_rejected() {
        let text = "NODES (\n A ( 0 0 )\n)\nLINKS (\n L1 ( A A ) ( 10 1 )\n)\n";
        assert!(Network::parse_sndlib(text, None).is_err());
    }

    #[test]
    fn roundtrip_preserves_network() {
        let net = Network::parse_sndlib(MINIMAL, None).unwrap();
        let text = net.to_sndlib();
        let reparsed = Network::parse_sndlib(&text, None).unwrap();
        assert_eq!(net, reparsed);
    }

    #[test]
    fn triangle_enumeration_is_exhaustive_and_ordered() {
        let net = triangle();
        let (a, c) = (net.node_id("A").unwrap(), net.node_id("C").unwrap());
        let paths = net.enumerate_paths(a, c, 5, 10);
        let seqs: Vec<Vec<&str>> = paths
            .iter()
            .map(|p| p.nodes.iter().map(|&n| net.node_name(n)).collect())
            .collect();
        assert_eq!(seqs, vec![vec!["A", "C"], vec!["A", "B", "C"]]);
    }

    #[test]
    fn line_graph_has_unique_path() {
        let net = Network::from_parts(
            vec!["A".into(), "B".into(), "C".into()],
            vec![
                ("ab".into(), "A".into(), "B".into(), 100.0),
                ("bc".into(), "B".into(), "C".into(), 100.0),
            ],
        )
        .unwrap();
        let paths = net.enumerate_paths(NodeId(0), NodeId(2), 5, 10);
        assert_eq!(paths.len(), 1);
        assert_eq!(paths[0].nodes, vec![NodeId(0), NodeId(1), NodeId(2)]);
    }

    #[test]
    fn ring_opposite_pair_k1() {
        // 4-node ring: exactly one path of 2 hops wins under k=1
        let net = Network::from_parts(
            vec!["A".into(), "B".into(), "C".into(), "D".into()],
            vec![
                ("ab".into(), "A".into(), "B".into(), 1.0),
                ("bc".into(), "B".into(), "C".into(), 1.0),
                ("cd".into(), "C".into(), "D".into(), 1.0),
                ("da".into(), "D".into(), "A".into(), 1.0),
            ],
        )
        .unwrap();
        let paths = net.enumerate_paths(NodeId(0), NodeId(2), 1, 10);
        assert_eq!(paths.len(), 1);
        assert_eq!(paths[0].hop_count(), 2);
        // brute-force check: every simple A->C path has >= 2 hops
        assert_eq!(paths[0].nodes, vec![NodeId(0), NodeId(1), NodeId(2)]);
    }

    #[test]
    fn catalog_covers_requested_pairs_only() {
        let net = triangle();
        let (net, warnings) = net.build_path_catalog(&[], 2, 5);
        assert!(net.path_catalog().is_empty());
        assert!(warnings.is_empty());

        let net = triangle();
        let mut pairs = Vec::new();
        for s in 0..3 {
            for d in 0..3 {
                if s != d {
                    pairs.push((NodeId(s), NodeId(d)));
                }
            }
        }
        let (net, warnings) = net.build_path_catalog(&pairs, 2, 5);
        assert!(warnings.is_empty());
        assert_eq!(net.path_catalog().len(), 6);
        for paths in net.path_catalog().values() {
            assert_eq!(paths.len(), 2);
        }
    }

    #[test]
    fn disconnected_pair_warns() {
        let net = Network::from_parts(
            vec!["A".into(), "B".into(), "C".into(), "D".into()],
            vec![
                ("ab".into(), "A".into(), "B".into(), 1.0),
                ("cd".into(), "C".into(), "D".into(), 1.0),
            ],
        )
        .unwrap();
        let (net, warnings) = net.build_path_catalog(&[(NodeId(0), NodeId(2))], 3, 10);
        assert_eq!(warnings.len(), 1);
        assert!(net.paths_between(NodeId(0), NodeId(2)).is_empty());
    }
}
