use super::ExpanderGraph;
use crate::error::{Error, Result};
use crate::rng::{tags, SimRng};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// Absolute tolerance on eigenvalues.
pub const EIGEN_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralReport {
    /// Largest adjacency eigenvalue.
    pub lambda0: f64,
    /// Largest absolute nontrivial eigenvalue; `-lambda0` is trivial for
    /// bipartite graphs and excluded.
    pub lambda: f64,
    /// Second-largest absolute eigenvalue counting `-lambda0`; this is the
    /// value the neighborhood bound uses.
    pub lambda_abs: f64,
    pub ramanujan_bound: f64,
    pub satisfied: bool,
    pub bipartite: bool,
    pub node_count: usize,
}

/// Dense symmetric eigensolve of the adjacency matrix.
pub fn spectral_check(g: &ExpanderGraph, delta0: u32) -> Result<SpectralReport> {
    let n = g.node_count();
    if n < 2 {
        return Err(Error::Shape(
            "spectral check needs at least two nodes".into(),
        ));
    }
    if !g.is_regular() {
        return Err(Error::Shape("spectral check needs a regular graph".into()));
    }
    if !g.is_connected() {
        return Err(Error::Graph(
            "spectral check needs a connected graph".into(),
        ));
    }
    let mut a = DMatrix::<f64>::zeros(n, n);
    for (u, v) in g.edges() {
        a[(u as usize, v as usize)] = 1.0;
        a[(v as usize, u as usize)] = 1.0;
    }
    let mut eig: Vec<f64> = a.symmetric_eigenvalues().iter().copied().collect();
    eig.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let lambda0 = *eig.last().unwrap();
    let bipartite = g.is_bipartite();
    let rest = if bipartite {
        &eig[1..n - 1]
    } else {
        &eig[..n - 1]
    };
    let lambda = rest.iter().map(|x| x.abs()).fold(0.0, f64::max);
    let lambda_abs = eig[..n - 1].iter().map(|x| x.abs()).fold(0.0, f64::max);
    let ramanujan_bound = 2.0 * ((delta0 as f64) - 1.0).sqrt();
    Ok(SpectralReport {
        lambda0,
        lambda,
        lambda_abs,
        ramanujan_bound,
        satisfied: lambda <= ramanujan_bound + EIGEN_TOLERANCE,
        bipartite,
        node_count: n,
    })
}

/// Lower bound on `|N(subset)|` from the two largest absolute eigenvalues.
pub fn tanner_lower_bound(report: &SpectralReport, subset_len: usize) -> Result<f64> {
    if subset_len == 0 {
        return Err(Error::Parameter("subset must be nonempty".into()));
    }
    let l0 = report.lambda0 * report.lambda0;
    let l = report.lambda_abs * report.lambda_abs;
    let v = subset_len as f64;
    Ok(l0 * v / (l + (l0 - l) * v / report.node_count as f64))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TannerReport {
    pub samples: usize,
    pub violations: usize,
    /// Smallest `|N(R)| − bound` seen.
    pub min_slack: f64,
}

/// Checks the neighborhood bound on `samples` random subsets: a uniform
/// size in `1..=n`, then a uniform subset of that size.
pub fn tanner_sample(
    g: &ExpanderGraph,
    report: &SpectralReport,
    samples: usize,
    seed: u64,
) -> Result<TannerReport> {
    let mut rng = SimRng::stream(seed, tags::GRAPH, 1);
    let n = g.node_count();
    let mut nodes: Vec<u32> = (0..n as u32).collect();
    let mut out = TannerReport {
        samples,
        violations: 0,
        min_slack: f64::INFINITY,
    };
    for _ in 0..samples {
        let k = 1 + rng.below(n as u64) as usize;
        // partial Fisher-Yates: the first k slots become a uniform k-subset
        for i in 0..k {
            let j = i + rng.below((n - i) as u64) as usize;
            nodes.swap(i, j);
        }
        let bound = tanner_lower_bound(report, k)?;
        let slack = g.neighborhood(&nodes[..k]).len() as f64 - bound;
        if slack < -EIGEN_TOLERANCE * n as f64 {
            out.violations += 1;
        }
        out.min_slack = out.min_slack.min(slack);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn k4_spectrum() {
        let r = spectral_check(&ExpanderGraph::complete(4), 3).unwrap();
        assert!((r.lambda0 - 3.0).abs() < 1e-9);
        assert!((r.lambda - 1.0).abs() < 1e-9);
        assert!(r.satisfied);
        assert!((tanner_lower_bound(&r, 1).unwrap() - 3.0).abs() < 1e-9);
    }

    #[test]
    fn six_cycle() {
        // 2cos(2 pi j / 6): {2, 1, -1, -2, -1, 1}; bipartite, so -2 is trivial.
        let r = spectral_check(&ExpanderGraph::cycle(6), 2).unwrap();
        assert!((r.lambda - 1.0).abs() < 1e-9);
        assert!((r.lambda_abs - 2.0).abs() < 1e-9);
        assert!(r.satisfied);
    }

    #[test]
    fn whole_set_bound_is_n() {
        let g = ExpanderGraph::cycle(7);
        let r = spectral_check(&g, 2).unwrap();
        assert!((tanner_lower_bound(&r, 7).unwrap() - 7.0).abs() < 1e-9);
    }

    #[test]
    fn empty_subset_rejected() {
        let r = spectral_check(&ExpanderGraph::complete(3), 2).unwrap();
        assert!(tanner_lower_bound(&r, 0).is_err());
    }

    #[test]
    fn petersen_sampling() {
        let edges = [
            (0, 1),
            (1, 2),
            (2, 3),
            (3, 4),
            (4, 0),
            (0, 5),
            (1, 6),
            (2, 7),
            (3, 8),
            (4, 9),
            (5, 7),
            (7, 9),
            (9, 6),
            (6, 8),
            (8, 5),
        ];
        let g = ExpanderGraph::from_edges(10, edges).unwrap();
        let r = spectral_check(&g, 3).unwrap();
        assert!((r.lambda - 2.0).abs() < 1e-9);
        let t = tanner_sample(&g, &r, 200, 7).unwrap();
        assert_eq!(t.violations, 0);
    }

    #[test]
    fn non_regular_rejected() {
        assert!(spectral_check(&ExpanderGraph::path(3), 2).is_err());
    }
}
