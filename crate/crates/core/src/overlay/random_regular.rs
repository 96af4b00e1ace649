use super::ExpanderGraph;
use crate::error::{Error, Result};
use crate::rng::{tags, SimRng};
use std::collections::HashSet;

const RETRY_CAP: u64 = 64;

/// A random connected `d`-regular graph on `n` nodes.
///
/// Uses the Steger–Wormald pairing process, which is asymptotically uniform.
/// Disconnected or stuck draws are retried with a derived seed; `K_n` is
/// returned when `n <= d`.
pub fn random_regular(n: usize, d: usize, seed: u64) -> Result<ExpanderGraph> {
    if n <= d {
        return Ok(ExpanderGraph::complete(n));
    }
    if (n * d) % 2 != 0 {
        return Err(Error::Parameter(format!(
            "n * d must be even (n = {n}, d = {d})"
        )));
    }
    for attempt in 0..RETRY_CAP {
        let mut rng = SimRng::stream(seed, tags::GRAPH, attempt);
        if let Some(g) = pairing(n, d, &mut rng) {
            if g.is_connected() {
                return Ok(g);
            }
        }
    }
    Err(Error::Graph(format!(
        "no connected {d}-regular graph on {n} nodes after {RETRY_CAP} attempts"
    )))
}

fn pairing(n: usize, d: usize, rng: &mut SimRng) -> Option<ExpanderGraph> {
    let mut points: Vec<u32> = (0..n as u32)
        .flat_map(|v| std::iter::repeat_n(v, d))
        .collect();
    let mut edges: HashSet<(u32, u32)> = HashSet::with_capacity(n * d / 2);
    while !points.is_empty() {
        let m = points.len();
        let mut placed = false;
        for _ in 0..(50 * m) {
            let i = rng.below(m as u64) as usize;
            let j = rng.below(m as u64) as usize;
            let (u, v) = (points[i], points[j]);
            if u == v || edges.contains(&(u.min(v), u.max(v))) {
                continue;
            }
            edges.insert((u.min(v), u.max(v)));
            let (hi, lo) = (i.max(j), i.min(j));
            points.swap_remove(hi);
            points.swap_remove(lo);
            placed = true;
            break;
        }
        if !placed {
            return None;
        }
    }
    let mut edges: Vec<_> = edges.into_iter().collect();
    edges.sort_unstable();
    ExpanderGraph::from_edges(n, edges).ok()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn regular_and_connected() {
        for (n, d) in [(10, 6), (64, 6), (100, 4), (18, 3)] {
            let g = random_regular(n, d, 5).unwrap();
            assert!(g.is_regular(), "n={n} d={d}");
            assert_eq!(g.degree(0), d);
            assert!(g.is_connected());
        }
    }

    #[test]
    fn deterministic() {
        assert_eq!(
            random_regular(50, 6, 9).unwrap(),
            random_regular(50, 6, 9).unwrap()
        );
    }

    #[test]
    fn small_n_is_complete() {
        assert!(random_regular(5, 6, 0).unwrap().is_complete());
    }
}
