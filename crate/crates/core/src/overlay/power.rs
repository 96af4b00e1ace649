use super::ExpanderGraph;

/// The `ell`-th power: `u ~ v` iff `0 < dist(u, v) <= ell`.
///
/// Reachability rows are bitsets; row `v` after step `i` is the ball of
/// radius `i` around `v`. Iteration stops early once the rows stop changing.
pub fn graph_power(g: &ExpanderGraph, ell: u32) -> ExpanderGraph {
    assert!(ell >= 1, "exponent must be positive");
    let n = g.node_count();
    if ell == 1 || g.is_complete() {
        return g.clone();
    }
    let words = n.div_ceil(64);
    let mut rows = vec![0u64; n * words];
    for v in 0..n {
        let row = &mut rows[v * words..(v + 1) * words];
        row[v / 64] |= 1 << (v % 64);
        for w in g.neighbors(v as u32) {
            row[w as usize / 64] |= 1 << (w % 64);
        }
    }
    let mut next = rows.clone();
    for _ in 1..ell {
        let mut changed = false;
        for v in 0..n {
            let (dst_start, dst_end) = (v * words, (v + 1) * words);
            let dst = &mut next[dst_start..dst_end];
            dst.copy_from_slice(&rows[dst_start..dst_end]);
            for w in g.neighbors(v as u32) {
                let src = &rows[w as usize * words..(w as usize + 1) * words];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d |= *s;
                }
            }
            changed |= dst != &rows[dst_start..dst_end];
        }
        std::mem::swap(&mut rows, &mut next);
        if !changed {
            break;
        }
    }
    let adj: Vec<Vec<u32>> = (0..n)
        .map(|v| {
            let row = &rows[v * words..(v + 1) * words];
            let mut list = Vec::new();
            for (i, &w) in row.iter().enumerate() {
                let mut w = w;
                while w != 0 {
                    let u = i * 64 + w.trailing_zeros() as usize;
                    if u != v {
                        list.push(u as u32);
                    }
                    w &= w - 1;
                }
            }
            list
        })
        .collect();
    ExpanderGraph::from_lists(adj)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn path_squared_is_triangle() {
        let g = graph_power(&ExpanderGraph::path(3), 2);
        assert!(g.is_complete());
        assert_eq!(g.node_count(), 3);
    }

    #[test]
    fn identity_exponent() {
        let c = ExpanderGraph::cycle(7);
        assert_eq!(graph_power(&c, 1), c);
    }

    #[test]
    fn six_cycle_cubed_is_complete() {
        assert!(graph_power(&ExpanderGraph::cycle(6), 3).is_complete());
        assert!(!graph_power(&ExpanderGraph::cycle(6), 2).is_complete());
    }
}
