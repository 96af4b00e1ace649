//! Overlay graphs: LPS Ramanujan graphs, their powers, and the processor
//! overlay built from them.

mod io;
mod lps;
mod params;
mod power;
mod random_regular;
mod spectral;

pub use io::{read_edge_list, write_edge_list, OverlayMetadata};
pub use lps::{build_lps, is_prime, legendre, lps_node_count, lps_with_field, LpsGraph};
pub use params::{select_power_params, PowerParams, RHO, RHO1};
pub use power::graph_power;
pub use random_regular::random_regular;
pub use spectral::{
    spectral_check, tanner_lower_bound, tanner_sample, SpectralReport, TannerReport,
    EIGEN_TOLERANCE,
};

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Default base degree of the LPS graph.
pub const DEFAULT_DELTA0: u32 = 74;

/// A simple undirected graph on nodes `0..node_count`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExpanderGraph {
    node_count: usize,
    degree_bound: usize,
    adj: Adjacency,
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Adjacency {
    Lists(Vec<Vec<u32>>),
    /// Complete graph; stored implicitly.
    Complete,
}

impl ExpanderGraph {
    /// Builds a graph from arbitrary edges; symmetrizes and drops self-loops
    /// and duplicates.
    pub fn from_edges(
        node_count: usize,
        edges: impl IntoIterator<Item = (u32, u32)>,
    ) -> Result<Self> {
        let mut adj = vec![Vec::new(); node_count];
        for (u, v) in edges {
            if u as usize >= node_count || v as usize >= node_count {
                return Err(Error::Shape(format!(
                    "edge ({u}, {v}) outside 0..{node_count}"
                )));
            }
            if u != v {
                adj[u as usize].push(v);
                adj[v as usize].push(u);
            }
        }
        Ok(Self::from_lists(adj))
    }

    pub(crate) fn from_lists(mut adj: Vec<Vec<u32>>) -> Self {
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
        }
        let node_count = adj.len();
        let degree_bound = adj.iter().map(Vec::len).max().unwrap_or(0);
        if node_count > 1 && adj.iter().all(|l| l.len() == node_count - 1) {
            return Self::complete(node_count);
        }
        ExpanderGraph {
            node_count,
            degree_bound,
            adj: Adjacency::Lists(adj),
        }
    }

    pub fn complete(node_count: usize) -> Self {
        ExpanderGraph {
            node_count,
            degree_bound: node_count.saturating_sub(1),
            adj: Adjacency::Complete,
        }
    }

    pub fn cycle(n: usize) -> Self {
        let edges = (0..n as u32).map(|i| (i, (i + 1) % n as u32));
        Self::from_edges(n, edges).expect("cycle edges in range")
    }

    pub fn path(n: usize) -> Self {
        let edges = (1..n as u32).map(|i| (i - 1, i));
        Self::from_edges(n, edges).expect("path edges in range")
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    /// Maximum degree.
    pub fn degree_bound(&self) -> usize {
        self.degree_bound
    }

    pub fn is_complete(&self) -> bool {
        matches!(self.adj, Adjacency::Complete) || (self.node_count <= 1)
    }

    pub fn degree(&self, v: u32) -> usize {
        match &self.adj {
            Adjacency::Lists(l) => l[v as usize].len(),
            Adjacency::Complete => self.node_count - 1,
        }
    }

    /// Neighbors of `v` in increasing order.
    pub fn neighbors(&self, v: u32) -> Neighbors<'_> {
        match &self.adj {
            Adjacency::Lists(l) => Neighbors::List(l[v as usize].iter()),
            Adjacency::Complete => Neighbors::Range {
                next: 0,
                end: self.node_count as u32,
                skip: v,
            },
        }
    }

    pub fn has_edge(&self, u: u32, v: u32) -> bool {
        match &self.adj {
            Adjacency::Lists(l) => l[u as usize].binary_search(&v).is_ok(),
            Adjacency::Complete => {
                u != v && (u as usize) < self.node_count && (v as usize) < self.node_count
            }
        }
    }

    pub fn edge_count(&self) -> usize {
        (0..self.node_count as u32)
            .map(|v| self.degree(v))
            .sum::<usize>()
            / 2
    }

    pub fn edges(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        (0..self.node_count as u32).flat_map(move |u| {
            self.neighbors(u)
                .filter(move |&v| v > u)
                .map(move |v| (u, v))
        })
    }

    pub fn is_regular(&self) -> bool {
        let d = self.degree(0);
        (0..self.node_count as u32).all(|v| self.degree(v) == d)
    }

    pub fn is_connected(&self) -> bool {
        if self.node_count == 0 {
            return true;
        }
        self.bfs_distances(0).iter().all(|d| d.is_some())
    }

    /// Hop distances from `source`; `None` for unreachable nodes.
    pub fn bfs_distances(&self, source: u32) -> Vec<Option<u32>> {
        let mut dist = vec![None; self.node_count];
        let mut queue = std::collections::VecDeque::new();
        dist[source as usize] = Some(0);
        queue.push_back(source);
        while let Some(u) = queue.pop_front() {
            let d = dist[u as usize].unwrap();
            for w in self.neighbors(u) {
                if dist[w as usize].is_none() {
                    dist[w as usize] = Some(d + 1);
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    /// Two-coloring check (only meaningful for connected graphs).
    pub fn is_bipartite(&self) -> bool {
        let mut color: Vec<Option<bool>> = vec![None; self.node_count];
        for s in 0..self.node_count {
            if color[s].is_some() {
                continue;
            }
            color[s] = Some(false);
            let mut stack = vec![s as u32];
            while let Some(u) = stack.pop() {
                let c = color[u as usize].unwrap();
                for w in self.neighbors(u) {
                    match color[w as usize] {
                        None => {
                            color[w as usize] = Some(!c);
                            stack.push(w);
                        }
                        Some(cw) if cw == c => return false,
                        _ => {}
                    }
                }
            }
        }
        true
    }

    /// `N(subset)`: nodes with at least one neighbor in `subset`.
    pub fn neighborhood(&self, subset: &[u32]) -> Vec<u32> {
        let mut mark = vec![false; self.node_count];
        for &v in subset {
            for w in self.neighbors(v) {
                mark[w as usize] = true;
            }
        }
        (0..self.node_count as u32)
            .filter(|&v| mark[v as usize])
            .collect()
    }
}

pub enum Neighbors<'a> {
    List(std::slice::Iter<'a, u32>),
    Range { next: u32, end: u32, skip: u32 },
}

impl Iterator for Neighbors<'_> {
    type Item = u32;

    fn next(&mut self) -> Option<u32> {
        match self {
            Neighbors::List(it) => it.next().copied(),
            Neighbors::Range { next, end, skip } => {
                if *next == *skip {
                    *next += 1;
                }
                if *next >= *end {
                    return None;
                }
                let v = *next;
                *next += 1;
                Some(v)
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GraphMode {
    Lps,
    RandomRegular,
}

/// The communication graph among processors `1..=p` (stored 0-based).
#[derive(Clone, Debug)]
pub struct OverlayGraph {
    /// Processor-level graph; node `i` is processor `i + 1`.
    pub graph: ExpanderGraph,
    pub mode: GraphMode,
    pub delta0: u32,
    /// Exponent applied to the base graph.
    pub ell: u32,
    pub params: Option<PowerParams>,
    /// Number of nodes of the base graph.
    pub base_nodes: usize,
    /// Host processor (0-based) of each base node, when the base graph has
    /// more nodes than there are processors.
    pub host: Option<Vec<u32>>,
    /// Spectral data of the base graph, when it was computed.
    pub spectral: Option<SpectralReport>,
}

impl OverlayGraph {
    /// Neighbors of processor `id` (1-based) as 1-based ids.
    pub fn neighbors_of(&self, id: u32) -> impl Iterator<Item = u32> + '_ {
        self.graph.neighbors(id - 1).map(|v| v + 1)
    }

    pub fn max_degree(&self) -> usize {
        self.graph.degree_bound()
    }

    pub fn metadata(&self) -> OverlayMetadata {
        OverlayMetadata {
            processors: self.graph.node_count(),
            degree: self.graph.degree_bound(),
            delta0: self.delta0,
            ell: self.ell,
            mode: self.mode,
            constructive: self.mode == GraphMode::Lps,
            base_nodes: self.base_nodes,
            spectral: self.spectral.clone(),
        }
    }
}

/// Options for [`build_overlay_with`].
#[derive(Clone, Debug, Default)]
pub struct OverlayOptions {
    pub seed: u64,
    /// Compute the spectral report of the base graph.
    pub spectral: bool,
}

/// Exponent used for the overlay: 1 when `72 f <= p`, else `2k + 1`.
pub fn overlay_exponent(p: u32, f: u32) -> (u32, Option<PowerParams>) {
    if f == 0 || 72 * f as u64 <= p as u64 {
        (1, None)
    } else {
        let params = select_power_params(p, f).expect("f < p");
        (params.ell, Some(params))
    }
}

pub fn build_overlay(p: u32, f: u32, delta0: u32, mode: GraphMode) -> Result<OverlayGraph> {
    build_overlay_with(p, f, delta0, mode, &OverlayOptions::default())
}

pub fn build_overlay_with(
    p: u32,
    f: u32,
    delta0: u32,
    mode: GraphMode,
    opts: &OverlayOptions,
) -> Result<OverlayGraph> {
    if p == 0 {
        return Err(Error::Parameter("p must be positive".into()));
    }
    if f >= p {
        return Err(Error::Parameter(format!("f = {f} must be below p = {p}")));
    }
    if delta0 < 2 {
        return Err(Error::Parameter("delta0 must be at least 2".into()));
    }
    let (ell, params) = overlay_exponent(p, f);
    let base = match mode {
        GraphMode::Lps => build_lps(delta0 - 1, p as usize)?.graph,
        GraphMode::RandomRegular => random_regular(p as usize, delta0 as usize, opts.seed)?,
    };
    let spectral = if opts.spectral && base.node_count() > 1 {
        Some(spectral_check(&base, delta0)?)
    } else {
        None
    };
    let base_nodes = base.node_count();
    let powered = graph_power(&base, ell);
    let (graph, host) = if base_nodes > p as usize {
        let host: Vec<u32> = (0..base_nodes)
            .map(|j| (j as u64 * p as u64 / base_nodes as u64) as u32)
            .collect();
        (quotient(&powered, &host, p as usize), Some(host))
    } else {
        (powered, None)
    };
    Ok(OverlayGraph {
        graph,
        mode,
        delta0,
        ell,
        params,
        base_nodes,
        host,
        spectral,
    })
}

/// Graph on hosts where two hosts are adjacent when any of their nodes are.
fn quotient(g: &ExpanderGraph, host: &[u32], hosts: usize) -> ExpanderGraph {
    if g.is_complete() {
        return ExpanderGraph::complete(hosts);
    }
    let mut adj = vec![Vec::new(); hosts];
    for (u, v) in g.edges() {
        let (a, b) = (host[u as usize], host[v as usize]);
        if a != b {
            adj[a as usize].push(b);
            adj[b as usize].push(a);
        }
    }
    ExpanderGraph::from_lists(adj)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complete_neighbors_skip_self() {
        let k = ExpanderGraph::complete(4);
        assert_eq!(k.neighbors(2).collect::<Vec<_>>(), vec![0, 1, 3]);
        assert_eq!(k.edge_count(), 6);
    }

    #[test]
    fn from_edges_collapses() {
        let g = ExpanderGraph::from_edges(3, [(0, 1), (1, 0), (1, 1), (1, 2)]).unwrap();
        assert_eq!(g.neighbors(1).collect::<Vec<_>>(), vec![0, 2]);
        assert_eq!(g.edge_count(), 2);
    }

    #[test]
    fn small_f_uses_base_graph() {
        assert_eq!(overlay_exponent(3420, 40).0, 1);
        assert_eq!(overlay_exponent(3420, 3000).0, 5);
    }

    #[test]
    fn random_regular_saturates() {
        let o = build_overlay(10, 9, 6, GraphMode::RandomRegular).unwrap();
        assert!(o.graph.is_complete());
        assert_eq!(o.max_degree(), 9);
    }

    #[test]
    fn lps_overlay_with_hosts() {
        let o = build_overlay(64, 1, 6, GraphMode::Lps).unwrap();
        assert_eq!(o.base_nodes, 336);
        assert_eq!(o.graph.node_count(), 64);
        assert!(o.graph.is_connected());
        let host = o.host.as_ref().unwrap();
        assert_eq!(host[0], 0);
        assert_eq!(host[335], 63);
    }
}
