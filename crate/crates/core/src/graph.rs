//! Network topologies for graph-based interactions.

use std::fmt::Write as _;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::graph_rng;

/// Index of an individual, in [0, M).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub usize);

impl NodeId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum GraphKind {
    Complete,
    DRegular { d: usize },
    ErdosRenyi { edge_prob: f64 },
    BarabasiAlbert { m_attach: usize },
    HubSpoke,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphSpec {
    pub kind: GraphKind,
    pub node_count: usize,
    /// Consumed only by the random kinds; Complete and HubSpoke ignore it.
    pub seed: u64,
}

/// Immutable undirected graph: per-node sorted neighbor lists, no
/// self-loops, no duplicate edges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphTopology {
    adjacency: Vec<Vec<usize>>,
}

impl GraphTopology {
    /// Builds from undirected edges, validating every structural invariant.
    pub fn from_edges(node_count: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if node_count < 2 {
            return Err(Error::InvalidGraphSpec {
                reason: format!("need at least 2 nodes, got {node_count}"),
            });
        }
        let mut adjacency = vec![Vec::new(); node_count];
        for &(i, j) in edges {
            if i >= node_count || j >= node_count {
                return Err(Error::InvalidGraphSpec {
                    reason: format!("edge ({i}, {j}) out of range for {node_count} nodes"),
                });
            }
            if i == j {
                return Err(Error::InvalidGraphSpec {
                    reason: format!("self-loop at node {i}"),
                });
            }
            adjacency[i].push(j);
            adjacency[j].push(i);
        }
        for (i, list) in adjacency.iter_mut().enumerate() {
            list.sort_unstable();
            if list.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::InvalidGraphSpec {
                    reason: format!("duplicate edge at node {i}"),
                });
            }
        }
        Ok(GraphTopology { adjacency })
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn neighbors(&self, i: NodeId) -> &[usize] {
        &self.adjacency[i.0]
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.adjacency.iter().map(|n| n.len()).collect()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(|n| n.len()).sum::<usize>() / 2
    }

    /// The hub, if this is a hub-and-spoke graph: one node adjacent to all
    /// others, every other node of degree 1.
    pub fn hub(&self) -> Option<NodeId> {
        let m = self.node_count();
        let mut hub = None;
        for (i, list) in self.adjacency.iter().enumerate() {
            match list.len() {
                1 => {}
                d if d == m - 1 => {
                    if hub.replace(i).is_some() {
                        return None;
                    }
                }
                _ => return None,
            }
        }
        // m == 2 gives two degree-1 nodes and no unique hub; treat node 0 as
        // the hub only when degrees single it out.
        hub.map(NodeId)
    }

    /// Edge-list text: first line "M E", then one "i j" line per edge with
    /// i < j, in lexicographic order.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{} {}", self.node_count(), self.edge_count());
        for (i, list) in self.adjacency.iter().enumerate() {
            for &j in list.iter().filter(|&&j| j > i) {
                let _ = writeln!(out, "{i} {j}");
            }
        }
        out
    }

    pub fn from_edge_list(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty());
        let (line_no, header) = lines.next().ok_or(Error::EdgeListParse {
            line: 1,
            reason: "empty input".into(),
        })?;
        let parse_pair = |line_no: usize, s: &str| -> Result<(usize, usize)> {
            let mut it = s.split_whitespace();
            let mut next = || {
                it.next()
                    .ok_or(Error::EdgeListParse {
                        line: line_no + 1,
                        reason: "expected two integers".into(),
                    })?
                    .parse::<usize>()
                    .map_err(|e| Error::EdgeListParse {
                        line: line_no + 1,
                        reason: e.to_string(),
                    })
            };
            let a = next()?;
            let b = next()?;
            if it.next().is_some() {
                return Err(Error::EdgeListParse {
                    line: line_no + 1,
                    reason: "trailing tokens".into(),
                });
            }
            Ok((a, b))
        };
        let (m, e) = parse_pair(line_no, header)?;
        let mut edges = Vec::with_capacity(e);
        for (line_no, line) in lines {
            let (i, j) = parse_pair(line_no, line)?;
            if i >= j {
                return Err(Error::EdgeListParse {
                    line: line_no + 1,
                    reason: format!("edge endpoints must satisfy i < j, got {i} {j}"),
                });
            }
            edges.push((i, j));
        }
        if edges.len() != e {
            return Err(Error::EdgeListParse {
                line: 1,
                reason: format!("header promises {e} edges, found {}", edges.len()),
            });
        }
        Self::from_edges(m, &edges)
    }
}

/// Builds the topology described by `spec`. Random kinds are deterministic
/// given `spec.seed`.
pub fn generate(spec: &GraphSpec) -> Result<GraphTopology> {
    let m = spec.node_count;
    if m < 2 {
        return Err(Error::InvalidGraphSpec {
            reason: format!("need at least 2 nodes, got {m}"),
        });
    }
    match spec.kind {
        GraphKind::Complete => {
            let edges: Vec<_> = (0..m)
                .flat_map(|i| (i + 1..m).map(move |j| (i, j)))
                .collect();
            GraphTopology::from_edges(m, &edges)
        }
        GraphKind::HubSpoke => {
            let edges: Vec<_> = (1..m).map(|j| (0, j)).collect();
            GraphTopology::from_edges(m, &edges)
        }
        GraphKind::DRegular { d } => generate_d_regular(m, d, spec.seed),
        GraphKind::ErdosRenyi { edge_prob } => {
            if !(0.0..=1.0).contains(&edge_prob) {
                return Err(Error::InvalidGraphSpec {
                    reason: format!("edge_prob must lie in [0, 1], got {edge_prob}"),
                });
            }
            let mut rng = graph_rng(spec.seed);
            let edges: Vec<_> = (0..m)
                .flat_map(|i| (i + 1..m).map(move |j| (i, j)))
                .filter(|_| rng.random::<f64>() < edge_prob)
                .collect();
            GraphTopology::from_edges(m, &edges)
        }
        GraphKind::BarabasiAlbert { m_attach } => generate_barabasi_albert(m, m_attach, spec.seed),
    }
}

/// Configuration-model pairing: d stubs per node, random perfect matching,
/// full restart whenever the matching creates a self-loop or repeated edge.
fn generate_d_regular(m: usize, d: usize, seed: u64) -> Result<GraphTopology> {
    if d == 0 || d >= m {
        return Err(Error::InvalidGraphSpec {
            reason: format!("d-regular requires 1 <= d < M, got d={d}, M={m}"),
        });
    }
    if !(d * m).is_multiple_of(2) {
        return Err(Error::InvalidGraphSpec {
            reason: format!("d*M must be even, got d={d}, M={m}"),
        });
    }
    let mut rng = graph_rng(seed);
    let max_restarts = 10 * m;
    let mut stubs: Vec<usize> = (0..m).flat_map(|i| std::iter::repeat_n(i, d)).collect();
    'restart: for _ in 0..max_restarts {
        for i in (1..stubs.len()).rev() {
            let j = rng.random_range(0..=i);
            stubs.swap(i, j);
        }
        let mut seen = std::collections::HashSet::with_capacity(stubs.len() / 2);
        let mut edges = Vec::with_capacity(stubs.len() / 2);
        for pair in stubs.chunks_exact(2) {
            let (a, b) = (pair[0].min(pair[1]), pair[0].max(pair[1]));
            if a == b || !seen.insert((a, b)) {
                continue 'restart;
            }
            edges.push((a, b));
        }
        return GraphTopology::from_edges(m, &edges);
    }
    Err(Error::RegularConstructionFailed {
        attempts: max_restarts,
    })
}

/// Preferential attachment from a complete seed graph on m_attach + 1
/// nodes. Each later node picks m_attach distinct targets with probability
/// proportional to degree at the moment the node arrives (degrees are not
/// updated between that node's own picks).
fn generate_barabasi_albert(m: usize, m_attach: usize, seed: u64) -> Result<GraphTopology> {
    if m_attach == 0 || m_attach >= m {
        return Err(Error::InvalidGraphSpec {
            reason: format!(
                "Barabasi-Albert requires 1 <= m_attach < M, got m_attach={m_attach}, M={m}"
            ),
        });
    }
    let mut rng = graph_rng(seed);
    let seed_nodes = m_attach + 1;
    let mut edges: Vec<(usize, usize)> = (0..seed_nodes)
        .flat_map(|i| (i + 1..seed_nodes).map(move |j| (i, j)))
        .collect();
    // One entry per degree unit; uniform draws from this urn are
    // degree-proportional draws over nodes.
    let mut urn: Vec<usize> = edges.iter().flat_map(|&(i, j)| [i, j]).collect();
    let mut targets = Vec::with_capacity(m_attach);
    for v in seed_nodes..m {
        targets.clear();
        while targets.len() < m_attach {
            let t = urn[rng.random_range(0..urn.len())];
            if !targets.contains(&t) {
                targets.push(t);
            }
        }
        for &t in &targets {
            edges.push((t, v));
            urn.push(t);
            urn.push(v);
        }
    }
    GraphTopology::from_edges(m, &edges)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(kind: GraphKind, m: usize, seed: u64) -> GraphSpec {
        GraphSpec {
            kind,
            node_count: m,
            seed,
        }
    }

    #[test]
    fn hub_spoke_degree_sequence() {
        let g = generate(&spec(GraphKind::HubSpoke, 5, 0)).unwrap();
        assert_eq!(g.degrees(), vec![4, 1, 1, 1, 1]);
        assert_eq!(g.hub(), Some(NodeId(0)));
        let g3 = generate(&spec(GraphKind::HubSpoke, 3, 0)).unwrap();
        assert_eq!(g3.degrees(), vec![2, 1, 1]);
    }

    #[test]
    fn complete_graph_counts() {
        let g = generate(&spec(GraphKind::Complete, 4, 0)).unwrap();
        assert_eq!(g.edge_count(), 6);
        assert!(g.degrees().iter().all(|&d| d == 3));
    }

    #[test]
    fn d_regular_has_exact_degrees() {
        let g = generate(&spec(GraphKind::DRegular { d: 4 }, 10, 7)).unwrap();
        assert!(g.degrees().iter().all(|&d| d == 4));
        assert!(generate(&spec(GraphKind::DRegular { d: 3 }, 5, 7)).is_err());
        assert!(generate(&spec(GraphKind::DRegular { d: 5 }, 5, 7)).is_err());
    }

    #[test]
    fn barabasi_albert_edge_count_is_forced() {
        // Seed clique C(m+1, 2) edges plus m_attach per added node.
        let g = generate(&spec(GraphKind::BarabasiAlbert { m_attach: 2 }, 100, 3)).unwrap();
        assert_eq!(g.edge_count(), 3 + 2 * 97);
        let g = generate(&spec(GraphKind::BarabasiAlbert { m_attach: 1 }, 5, 3)).unwrap();
        assert_eq!(g.edge_count(), 4);
    }

    #[test]
    fn generation_is_seed_deterministic() {
        for kind in [
            GraphKind::DRegular { d: 3 },
            GraphKind::ErdosRenyi { edge_prob: 0.2 },
            GraphKind::BarabasiAlbert { m_attach: 2 },
        ] {
            let a = generate(&spec(kind.clone(), 30, 11)).unwrap();
            let b = generate(&spec(kind.clone(), 30, 11)).unwrap();
            let c = generate(&spec(kind, 30, 12)).unwrap();
            assert_eq!(a, b);
            assert_ne!(a, c);
        }
    }

    #[test]
    fn erdos_renyi_mean_edge_count() {
        // 1000 seeds, M=20, p=0.3: mean edge count should sit within
        // 3 sigma of C(20,2) * p, sigma of the mean = sqrt(N p (1-p) / 1000).
        let pairs = 190.0;
        let p = 0.3;
        let n = 1000;
        let total: usize = (0..n)
            .map(|s| {
                generate(&spec(GraphKind::ErdosRenyi { edge_prob: p }, 20, s as u64))
                    .unwrap()
                    .edge_count()
            })
            .sum();
        let mean = total as f64 / n as f64;
        let sigma = (pairs * p * (1.0 - p) / n as f64).sqrt();
        assert!(
            (mean - pairs * p).abs() < 3.0 * sigma,
            "mean {mean} vs expected {} +- {}",
            pairs * p,
            3.0 * sigma
        );
    }

    #[test]
    fn edge_list_roundtrip() {
        let g = generate(&spec(GraphKind::BarabasiAlbert { m_attach: 2 }, 20, 5)).unwrap();
        let text = g.to_edge_list();
        let back = GraphTopology::from_edge_list(&text).unwrap();
        assert_eq!(g, back);
        let first = text.lines().next().unwrap();
        assert_eq!(first, format!("20 {}", g.edge_count()));
    }

    #[test]
    fn edge_list_rejects_malformed_input() {
        assert!(GraphTopology::from_edge_list("").is_err());
        assert!(GraphTopology::from_edge_list("2 1\n1 0\n").is_err()); // i >= j
        assert!(GraphTopology::from_edge_list("2 2\n0 1\n").is_err()); // count mismatch
        assert!(GraphTopology::from_edge_list("2 1\n0 x\n").is_err());
        assert!(GraphTopology::from_edge_list("3 1\n0 0\n").is_err()); // self-loop
    }

    #[test]
    fn from_edges_rejects_invalid() {
        assert!(GraphTopology::from_edges(1, &[]).is_err());
        assert!(GraphTopology::from_edges(3, &[(0, 0)]).is_err());
        assert!(GraphTopology::from_edges(3, &[(0, 1), (1, 0)]).is_err());
        assert!(GraphTopology::from_edges(3, &[(0, 5)]).is_err());
    }

    #[test]
    fn hub_detection_rejects_non_hub_graphs() {
        let complete = generate(&spec(GraphKind::Complete, 4, 0)).unwrap();
        assert_eq!(complete.hub(), None);
        let path = GraphTopology::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        assert_eq!(path.hub(), Some(NodeId(1))); // a 3-path is a 3-star
        let pair = GraphTopology::from_edges(2, &[(0, 1)]).unwrap();
        assert_eq!(pair.hub(), None);
    }
}
