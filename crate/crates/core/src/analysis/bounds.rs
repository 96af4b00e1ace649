use crate::config::Algorithm;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Metrics of one finished run, as fed to [`bound_report`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRow {
    pub algorithm: Algorithm,
    pub p: u32,
    pub t: u32,
    pub f: u32,
    pub seed: u64,
    pub work: u64,
    pub messages: u64,
    pub effort: u64,
    /// Maximum overlay degree.
    pub degree: u32,
}

/// Worst ratios of one algorithm at one `p`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundRow {
    pub algorithm: Algorithm,
    pub p: u32,
    /// Largest `W / bound` (or `E / bound` for Effort-Priority) over `t`
    /// and seeds at this `p`.
    pub ratio: f64,
    /// Largest `M / (Δ·W)`.
    pub message_ratio: f64,
    /// The ratio went up at every step of `p` so far.
    pub growing: bool,
}

/// Relative rise per step of `p` below which a ratio counts as flat.
pub const GROWTH_TOLERANCE: f64 = 0.01;

fn lg(x: f64) -> f64 {
    x.max(1.0).log2()
}

/// The complexity formula an algorithm's measured cost is compared with.
pub fn bound(algorithm: Algorithm, p: u32, t: u32) -> f64 {
    let (p, t) = (p as f64, t as f64);
    match algorithm {
        Algorithm::BalanceLoad => t + p * lg(p) * ((p * lg(p)).sqrt() + (t * lg(t)).sqrt()),
        Algorithm::RandomizedPermutations | Algorithm::DeterministicPermutations => {
            t + p * lg(p) * lg(p)
        }
        Algorithm::EffortPriority => t + p.powf(1.77),
    }
}

/// Measured cost matching [`bound`]: effort for Effort-Priority, work
/// otherwise.
pub fn measured(row: &RunRow) -> u64 {
    match row.algorithm {
        Algorithm::EffortPriority => row.effort,
        _ => row.work,
    }
}

/// Per algorithm and `p`, the worst cost-to-bound ratio and the worst
/// message-to-work ratio. `growing` marks rows where the ratio has risen
/// by more than [`GROWTH_TOLERANCE`] at every `p` of the grid so far (from
/// the third point on).
pub fn bound_report(rows: &[RunRow]) -> Vec<BoundRow> {
    let mut worst: BTreeMap<(Algorithm, u32), (f64, f64)> = BTreeMap::new();
    for r in rows {
        let ratio = measured(r) as f64 / bound(r.algorithm, r.p, r.t);
        let msg = if r.work == 0 {
            0.0
        } else {
            r.messages as f64 / (r.degree as f64 * r.work as f64)
        };
        let e = worst.entry((r.algorithm, r.p)).or_insert((0.0, 0.0));
        e.0 = e.0.max(ratio);
        e.1 = e.1.max(msg);
    }
    let mut out: Vec<BoundRow> = Vec::new();
    let mut run = 0usize;
    for ((algorithm, p), (ratio, message_ratio)) in worst {
        match out.last() {
            Some(prev)
                if prev.algorithm == algorithm && ratio > prev.ratio * (1.0 + GROWTH_TOLERANCE) =>
            {
                run += 1
            }
            Some(prev) if prev.algorithm == algorithm => run = 0,
            _ => run = 0,
        }
        let seen = out.iter().filter(|r| r.algorithm == algorithm).count();
        out.push(BoundRow {
            algorithm,
            p,
            ratio,
            message_ratio,
            growing: seen >= 2 && run == seen,
        });
    }
    out
}
