//! Undirected, unweighted graphs in compressed sparse row form.
//!
//! Every node has at least one neighbor. Ingestion from raw edge lists drops
//! self-loops, duplicate edges and isolated ids, and keeps a remap table from
//! compact indices back to the ids found in the input.

use std::collections::{HashMap, HashSet};
use std::io::BufRead;

use crate::error::{Error, Result};

/// Read-only neighborhood access.
///
/// The objective and solver are generic over this trait so tests can wrap a
/// [`Graph`] and record which adjacency rows get read.
pub trait Adjacency {
    fn node_count(&self) -> usize;
    fn degree(&self, node: usize) -> usize;
    fn neighbors(&self, node: usize) -> &[u32];

    fn sqrt_degree(&self, node: usize) -> f64 {
        (self.degree(node) as f64).sqrt()
    }
}

/// Sorted set of distinct node indices.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct NodeSet(Vec<usize>);

impl NodeSet {
    pub fn new() -> Self {
        NodeSet(Vec::new())
    }

    /// Accepts a strictly increasing vector; anything else is rejected.
    pub fn from_sorted(nodes: Vec<usize>) -> Result<Self> {
        if nodes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("node set must be strictly increasing"));
        }
        Ok(NodeSet(nodes))
    }

    pub fn range(start: usize, end: usize) -> Self {
        NodeSet((start..end).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn contains(&self, node: usize) -> bool {
        self.0.binary_search(&node).is_ok()
    }

    pub fn is_subset(&self, other: &NodeSet) -> bool {
        let mut it = other.0.iter().peekable();
        'outer: for &a in &self.0 {
            while let Some(&&b) = it.peek() {
                if b < a {
                    it.next();
                } else if b == a {
                    it.next();
                    continue 'outer;
                } else {
                    return false;
                }
            }
            return false;
        }
        true
    }

    pub fn union(&self, other: &NodeSet) -> NodeSet {
        let mut out = Vec::with_capacity(self.len() + other.len());
        let (a, b) = (&self.0, &other.0);
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                std::cmp::Ordering::Less => {
                    out.push(a[i]);
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    out.push(b[j]);
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    out.push(a[i]);
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        NodeSet(out)
    }

    /// Elements of `self` that are not in `other`.
    pub fn difference(&self, other: &NodeSet) -> NodeSet {
        NodeSet(self.0.iter().copied().filter(|&x| !other.contains(x)).collect())
    }

    pub fn intersection(&self, other: &NodeSet) -> NodeSet {
        NodeSet(self.0.iter().copied().filter(|&x| other.contains(x)).collect())
    }

    pub fn into_vec(self) -> Vec<usize> {
        self.0
    }

    pub(crate) fn check_range(&self, n: usize) -> Result<()> {
        match self.0.last() {
            Some(&node) if node >= n => Err(Error::NodeOutOfRange { node, n }),
            _ => Ok(()),
        }
    }
}

impl FromIterator<usize> for NodeSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        let mut v: Vec<usize> = iter.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        NodeSet(v)
    }
}

/// Immutable undirected graph. Neighbor lists are sorted ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    row_offsets: Vec<usize>,
    neighbors: Vec<u32>,
    sqrt_degrees: Vec<f64>,
}

/// Compact index -> original id table produced by ingestion.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IndexRemap {
    original: Vec<u64>,
    compact: HashMap<u64, usize>,
}

impl IndexRemap {
    fn from_sorted_ids(original: Vec<u64>) -> Self {
        let compact = original.iter().enumerate().map(|(i, &id)| (id, i)).collect();
        IndexRemap { original, compact }
    }

    pub fn original_id(&self, node: usize) -> u64 {
        self.original[node]
    }

    pub fn compact_index(&self, original: u64) -> Option<usize> {
        self.compact.get(&original).copied()
    }

    pub fn len(&self) -> usize {
        self.original.len()
    }

    pub fn is_empty(&self) -> bool {
        self.original.is_empty()
    }
}

/// A graph built from raw input together with its id remap.
#[derive(Debug, Clone)]
pub struct IngestedGraph {
    pub graph: Graph,
    pub remap: IndexRemap,
}

impl Graph {
    /// Builds a graph on exactly `n` nodes `0..n`. Every node must end up with
    /// at least one neighbor; self-loops and repeats in `edges` are ignored.
    pub fn from_edges_exact(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut half = Vec::with_capacity(edges.len() * 2);
        for &(u, v) in edges {
            for node in [u, v] {
                if node >= n {
                    return Err(Error::NodeOutOfRange { node, n });
                }
            }
            if u != v {
                half.push((u as u32, v as u32));
                half.push((v as u32, u as u32));
            }
        }
        if half.is_empty() {
            return Err(Error::EmptyGraph);
        }
        half.sort_unstable();
        half.dedup();

        let mut row_offsets = vec![0usize; n + 1];
        for &(u, _) in &half {
            row_offsets[u as usize + 1] += 1;
        }
        for i in 0..n {
            if row_offsets[i + 1] == 0 {
                return Err(Error::IsolatedNode(i));
            }
            row_offsets[i + 1] += row_offsets[i];
        }
        let neighbors: Vec<u32> = half.into_iter().map(|(_, v)| v).collect();
        let sqrt_degrees = row_offsets
            .windows(2)
            .map(|w| ((w[1] - w[0]) as f64).sqrt())
            .collect();
        Ok(Graph {
            row_offsets,
            neighbors,
            sqrt_degrees,
        })
    }

    pub fn n(&self) -> usize {
        self.row_offsets.len() - 1
    }

    pub fn edge_count(&self) -> usize {
        self.neighbors.len() / 2
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn neighbor_array(&self) -> &[u32] {
        &self.neighbors
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.row_offsets.windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.n() && v < self.n() && self.neighbors(u).binary_search(&(v as u32)).is_ok()
    }

    /// Each undirected edge once, as `(u, v)` with `u < v`, in row order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n()).flat_map(move |u| {
            self.neighbors(u)
                .iter()
                .map(|&v| v as usize)
                .filter(move |&v| u < v)
                .map(move |v| (u, v))
        })
    }

    /// `vol(S)`: sum of degrees over `s`.
    pub fn volume(&self, s: &NodeSet) -> Result<u64> {
        s.check_range(self.n())?;
        Ok(self.volume_unchecked(s.iter()))
    }

    pub(crate) fn volume_unchecked(&self, nodes: impl Iterator<Item = usize>) -> u64 {
        nodes.map(|i| self.degree(i) as u64).sum()
    }

    /// Nodes outside `s` with at least one neighbor in `s`.
    pub fn vertex_boundary(&self, s: &NodeSet) -> Result<NodeSet> {
        s.check_range(self.n())?;
        Ok(s
            .iter()
            .flat_map(|i| self.neighbors(i).iter().map(|&j| j as usize))
            .filter(|&j| !s.contains(j))
            .collect())
    }

    /// `V \ (S ∪ ∂S)`.
    pub fn exterior(&self, s: &NodeSet) -> Result<NodeSet> {
        let closed = s.union(&self.vertex_boundary(s)?);
        let mut out = Vec::with_capacity(self.n() - closed.len());
        let mut taken = closed.iter().peekable();
        for i in 0..self.n() {
            if taken.peek() == Some(&i) {
                taken.next();
            } else {
                out.push(i);
            }
        }
        Ok(NodeSet(out))
    }
}

impl Adjacency for Graph {
    fn node_count(&self) -> usize {
        self.n()
    }

    fn degree(&self, node: usize) -> usize {
        self.row_offsets[node + 1] - self.row_offsets[node]
    }

    fn neighbors(&self, node: usize) -> &[u32] {
        &self.neighbors[self.row_offsets[node]..self.row_offsets[node + 1]]
    }

    fn sqrt_degree(&self, node: usize) -> f64 {
        self.sqrt_degrees[node]
    }
}

/// Builds a graph from raw pairs. Self-loops and duplicates are dropped, the
/// pairs are symmetrized, and ids that end up without neighbors are removed.
/// Surviving ids are renumbered densely in ascending order.
///
/// With `n_hint`, ids must be below it.
pub fn build_from_edges(edges: &[(u64, u64)], n_hint: Option<usize>) -> Result<IngestedGraph> {
    if let Some(n) = n_hint {
        if let Some(&(u, v)) = edges.iter().find(|&&(u, v)| u.max(v) >= n as u64) {
            return Err(Error::NodeOutOfRange {
                node: u.max(v) as usize,
                n,
            });
        }
    }
    let mut ids: Vec<u64> = edges
        .iter()
        .filter(|(u, v)| u != v)
        .flat_map(|&(u, v)| [u, v])
        .collect();
    if ids.is_empty() {
        return Err(Error::EmptyGraph);
    }
    ids.sort_unstable();
    ids.dedup();
    let remap = IndexRemap::from_sorted_ids(ids);
    let compact: Vec<(usize, usize)> = edges
        .iter()
        .filter(|(u, v)| u != v)
        .map(|&(u, v)| (remap.compact[&u], remap.compact[&v]))
        .collect();
    let graph = Graph::from_edges_exact(remap.len(), &compact)?;
    Ok(IngestedGraph { graph, remap })
}

/// Parses a SNAP edge list: one whitespace-separated integer pair per line,
/// `#` starts a comment line, blank lines are skipped.
pub fn parse_snap_edgelist<R: BufRead>(reader: R) -> Result<IngestedGraph> {
    parse_snap_edgelist_capped(reader, None)
}

/// Like [`parse_snap_edgelist`], but once `max_nodes` distinct ids have been
/// seen, edges touching any further id are skipped.
pub fn parse_snap_edgelist_capped<R: BufRead>(
    reader: R,
    max_nodes: Option<usize>,
) -> Result<IngestedGraph> {
    let mut edges = Vec::new();
    let mut seen: HashSet<u64> = HashSet::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut tokens = trimmed.split_whitespace();
        let mut next_id = || -> Result<u64> {
            let tok = tokens.next().ok_or_else(|| Error::Parse {
                line: line_no,
                message: "expected two node ids".into(),
            })?;
            tok.parse::<u64>().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("invalid node id {tok:?}"),
            })
        };
        let u = next_id()?;
        let v = next_id()?;
        if let Some(tok) = tokens.next() {
            return Err(Error::Parse {
                line: line_no,
                message: format!("unexpected token {tok:?}"),
            });
        }
        if let Some(cap) = max_nodes {
            let fresh = usize::from(!seen.contains(&u)) + usize::from(u != v && !seen.contains(&v));
            if seen.len() + fresh > cap {
                continue;
            }
            seen.insert(u);
            seen.insert(v);
        }
        edges.push((u, v));
    }
    build_from_edges(&edges, None)
}
