//! Undirected connected communication graphs.
//!
//! A [`Topology`] is immutable once built: adjacency is stored as sorted
//! neighbor lists and the diameter is computed eagerly with one BFS per node.

use std::collections::{BTreeSet, VecDeque};
use std::fmt::Write as _;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub type NodeId = usize;

/// Default probability for adding a non-tree edge in random connected graphs.
pub const DEFAULT_EXTRA_EDGE_PROB: f64 = 0.2;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Topology {
    adjacency: Vec<Vec<NodeId>>,
    diameter: usize,
}

impl Topology {
    /// Builds a topology from an unordered edge list.
    ///
    /// Duplicate edges are merged. Self-loops, out-of-range ids and
    /// disconnected graphs are rejected.
    pub fn build(edges: &[(NodeId, NodeId)], node_count: usize) -> Result<Self> {
        if node_count == 0 {
            return Err(Error::Topology("at least one node is required".into()));
        }
        let mut sets = vec![BTreeSet::new(); node_count];
        for &(u, v) in edges {
            if u >= node_count || v >= node_count {
                return Err(Error::Topology(format!(
                    "edge ({u}, {v}) references a node outside 0..{node_count}"
                )));
            }
            if u == v {
                return Err(Error::Topology(format!("self-loop at node {u}")));
            }
            sets[u].insert(v);
            sets[v].insert(u);
        }
        let adjacency: Vec<Vec<NodeId>> =
            sets.into_iter().map(|s| s.into_iter().collect()).collect();

        let from_zero = bfs_distances(&adjacency, 0);
        if let Some(lost) = from_zero.iter().position(Option::is_none) {
            return Err(Error::Topology(format!(
                "graph is disconnected: node {lost} unreachable from node 0"
            )));
        }
        let diameter = (0..node_count)
            .map(|s| {
                bfs_distances(&adjacency, s)
                    .into_iter()
                    .map(|d| d.expect("connected"))
                    .max()
                    .unwrap_or(0)
            })
            .max()
            .unwrap_or(0);
        Ok(Self {
            adjacency,
            diameter,
        })
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn diameter(&self) -> usize {
        self.diameter
    }

    /// Sorted neighbor ids of `v`.
    pub fn neighbors(&self, v: NodeId) -> &[NodeId] {
        &self.adjacency[v]
    }

    pub fn are_adjacent(&self, u: NodeId, v: NodeId) -> bool {
        self.adjacency[u].binary_search(&v).is_ok()
    }

    /// Each undirected edge once, as `(smaller, larger)`, in sorted order.
    pub fn edges(&self) -> Vec<(NodeId, NodeId)> {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(u, ns)| ns.iter().filter(move |&&v| v > u).map(move |&v| (u, v)))
            .collect()
    }

    /// Hop distances from `source`; every entry is finite since the graph is connected.
    pub fn distances_from(&self, source: NodeId) -> Vec<usize> {
        bfs_distances(&self.adjacency, source)
            .into_iter()
            .map(|d| d.expect("connected"))
            .collect()
    }

    pub fn line(n: usize) -> Result<Self> {
        let edges: Vec<_> = (1..n).map(|v| (v - 1, v)).collect();
        Self::build(&edges, n)
    }

    /// Hub `0` joined to leaves `1..n`.
    pub fn star(n: usize) -> Result<Self> {
        let edges: Vec<_> = (1..n).map(|v| (0, v)).collect();
        Self::build(&edges, n)
    }

    pub fn clique(n: usize) -> Result<Self> {
        let edges: Vec<_> = (0..n)
            .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
            .collect();
        Self::build(&edges, n)
    }

    /// Cycle on `n` nodes; degenerates to a line for `n < 3`.
    pub fn ring(n: usize) -> Result<Self> {
        let mut edges: Vec<_> = (1..n).map(|v| (v - 1, v)).collect();
        if n >= 3 {
            edges.push((n - 1, 0));
        }
        Self::build(&edges, n)
    }

    /// Uniform random spanning tree (Aldous-Broder walk on the complete
    /// graph) plus each remaining pair added independently with
    /// probability `extra_edge_prob`.
    pub fn random_connected(n: usize, extra_edge_prob: f64, seed: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&extra_edge_prob) {
            return Err(Error::Topology(format!(
                "extra edge probability {extra_edge_prob} outside [0, 1]"
            )));
        }
        if n == 0 {
            return Err(Error::Topology("at least one node is required".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut in_tree = vec![false; n];
        let mut tree = BTreeSet::new();
        let mut current = rng.gen_range(0..n);
        in_tree[current] = true;
        let mut remaining = n - 1;
        while remaining > 0 {
            // uniform neighbor in K_n
            let mut next = rng.gen_range(0..n - 1);
            if next >= current {
                next += 1;
            }
            if !in_tree[next] {
                in_tree[next] = true;
                remaining -= 1;
                tree.insert((current.min(next), current.max(next)));
            }
            current = next;
        }
        let mut edges: Vec<_> = tree.iter().copied().collect();
        for u in 0..n {
            for v in u + 1..n {
                if !tree.contains(&(u, v)) && rng.gen_bool(extra_edge_prob) {
                    edges.push((u, v));
                }
            }
        }
        Self::build(&edges, n)
    }

    /// Parses the edge-list text format: a header line `n <count>` followed
    /// by one `u v` pair per line. Blank lines and `#` comments are ignored.
    pub fn parse_edge_list(text: &str) -> Result<Self> {
        let mut node_count = None;
        let mut edges = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let parse = |s: &str| {
                s.parse::<usize>().map_err(|e| Error::Parse {
                    line: line_no,
                    msg: format!("{s:?}: {e}"),
                })
            };
            match (node_count, fields.as_slice()) {
                (None, ["n", count]) => node_count = Some(parse(count)?),
                (None, _) => {
                    return Err(Error::Parse {
                        line: line_no,
                        msg: "expected header `n <count>`".into(),
                    })
                }
                (Some(_), [u, v]) => edges.push((parse(u)?, parse(v)?)),
                (Some(_), _) => {
                    return Err(Error::Parse {
                        line: line_no,
                        msg: "expected `u v`".into(),
                    })
                }
            }
        }
        let n = node_count.ok_or(Error::Parse {
            line: 0,
            msg: "missing header `n <count>`".into(),
        })?;
        Self::build(&edges, n)
    }

    pub fn to_edge_list(&self) -> String {
        let mut out = format!("n {}\n", self.node_count());
        for (u, v) in self.edges() {
            let _ = writeln!(out, "{u} {v}");
        }
        out
    }
}

fn bfs_distances(adjacency: &[Vec<NodeId>], source: NodeId) -> Vec<Option<usize>> {
    let mut dist = vec![None; adjacency.len()];
    let mut queue = VecDeque::from([source]);
    dist[source] = Some(0);
    while let Some(u) = queue.pop_front() {
        let du = dist[u].expect("queued nodes have a distance");
        for &w in &adjacency[u] {
            if dist[w].is_none() {
                dist[w] = Some(du + 1);
                queue.push_back(w);
            }
        }
    }
    dist
}

/// The standard generator families.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TopologyKind {
    Line,
    Star,
    Clique,
    Ring,
    RandomConnected { extra_edge_prob: f64 },
}

impl FromStr for TopologyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "line" => Ok(Self::Line),
            "star" => Ok(Self::Star),
            "clique" => Ok(Self::Clique),
            "ring" => Ok(Self::Ring),
            "random" | "random_connected" => Ok(Self::RandomConnected {
                extra_edge_prob: DEFAULT_EXTRA_EDGE_PROB,
            }),
            other => Err(Error::Argument(format!("unknown topology kind {other:?}"))),
        }
    }
}

/// Deterministic generator: the same `(kind, size, seed)` always yields the
/// same adjacency. The seed only matters for random graphs.
pub fn generate(kind: TopologyKind, size: usize, seed: u64) -> Result<Topology> {
    match kind {
        TopologyKind::Line => Topology::line(size),
        TopologyKind::Star => Topology::star(size),
        TopologyKind::Clique => Topology::clique(size),
        TopologyKind::Ring => Topology::ring(size),
        TopologyKind::RandomConnected { extra_edge_prob } => {
            Topology::random_connected(size, extra_edge_prob, seed)
        }
    }
}
