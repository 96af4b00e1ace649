//! Compact-witness search: balls in the survivor-induced overlay.

use crate::overlay::OverlayGraph;
use crate::protocol::{compactness_threshold, epoch_phases};
use crate::sim::ProcId;
use std::collections::VecDeque;

/// Distances from `source` inside the subgraph induced by `member`
/// (indexed by id − 1), up to `radius`.
fn induced_bfs(
    overlay: &OverlayGraph,
    member: &[bool],
    source: ProcId,
    radius: u64,
) -> Vec<Option<u64>> {
    let mut dist = vec![None; member.len()];
    dist[source as usize - 1] = Some(0);
    let mut queue = VecDeque::from([source]);
    while let Some(v) = queue.pop_front() {
        let d = dist[v as usize - 1].unwrap();
        if d == radius {
            continue;
        }
        for w in overlay.neighbors_of(v) {
            let i = w as usize - 1;
            if member[i] && dist[i].is_none() {
                dist[i] = Some(d + 1);
                queue.push_back(w);
            }
        }
    }
    dist
}

/// Diameter of the subgraph induced by `nodes`, or `None` when it is
/// disconnected or wider than `cap`.
pub fn induced_diameter(overlay: &OverlayGraph, nodes: &[ProcId], cap: u64) -> Option<u64> {
    let p = overlay.graph.node_count();
    let mut member = vec![false; p];
    for &v in nodes {
        member[v as usize - 1] = true;
    }
    let mut diameter = 0;
    for &v in nodes {
        let dist = induced_bfs(overlay, &member, v, cap);
        for &w in nodes {
            diameter = diameter.max(dist[w as usize - 1]?);
        }
    }
    Some(diameter)
}

/// Largest radius-`g(p)` ball among `survivors` whose induced diameter is at
/// most `g(p)` and whose size reaches `⌈(p − f)/7⌉`. Ties go to the
/// smallest center.
pub fn find_compact_witness(
    overlay: &OverlayGraph,
    survivors: &[ProcId],
    p: u32,
    f: u32,
) -> Option<Vec<ProcId>> {
    let g = epoch_phases(p);
    let threshold = compactness_threshold(p, f).max(1);
    let mut member = vec![false; overlay.graph.node_count()];
    for &v in survivors {
        member[v as usize - 1] = true;
    }
    let mut centers: Vec<ProcId> = survivors.to_vec();
    centers.sort_unstable();
    centers.dedup();
    let mut best: Option<Vec<ProcId>> = None;
    let mut rejected: Vec<Vec<ProcId>> = Vec::new();
    for v in centers {
        let dist = induced_bfs(overlay, &member, v, g);
        let ball: Vec<ProcId> = (1..=member.len() as u32)
            .filter(|&w| dist[w as usize - 1].is_some())
            .collect();
        if ball.len() < threshold || best.as_ref().is_some_and(|b| b.len() >= ball.len()) {
            continue;
        }
        // balls in well-connected graphs repeat; don't re-measure them
        if rejected.contains(&ball) {
            continue;
        }
        if induced_diameter(overlay, &ball, g).is_some() {
            best = Some(ball);
        } else {
            rejected.push(ball);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::overlay::{ExpanderGraph, GraphMode};

    fn overlay(graph: ExpanderGraph) -> OverlayGraph {
        OverlayGraph {
            base_nodes: graph.node_count(),
            graph,
            mode: GraphMode::RandomRegular,
            delta0: 2,
            ell: 1,
            params: None,
            host: None,
            spectral: None,
        }
    }

    #[test]
    fn connected_survivors_form_the_witness() {
        let o = overlay(ExpanderGraph::cycle(10));
        let all: Vec<u32> = (1..=10).collect();
        assert_eq!(find_compact_witness(&o, &all, 10, 0), Some(all));
    }

    #[test]
    fn two_islands_below_threshold() {
        // path 1..=40 with the middle crashed leaves two islands of 5;
        // threshold ⌈(40 − 0)/7⌉ = 6
        let o = overlay(ExpanderGraph::path(40));
        let survivors: Vec<u32> = (1..=5).chain(36..=40).collect();
        assert_eq!(find_compact_witness(&o, &survivors, 40, 0), None);
        // with f = 30 the threshold drops to 2 and the first island wins
        assert_eq!(
            find_compact_witness(&o, &survivors, 40, 30),
            Some(vec![1, 2, 3, 4, 5])
        );
    }

    #[test]
    fn degenerate_threshold() {
        let o = overlay(ExpanderGraph::path(10));
        assert_eq!(find_compact_witness(&o, &[7], 10, 3), Some(vec![7]));
    }
}
