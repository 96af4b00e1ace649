use super::EpochReport;
use serde::Serialize;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExtendedEpochReport {
    pub index: u64,
    /// First and last regular epoch, `m(j)` and `l(j)`.
    pub first: u64,
    pub last: u64,
    /// `(l − m + 1) · |witness_l| · g(p)`.
    pub core_number: u64,
    /// `u` at the end of the previous extended epoch (`t` before the first).
    pub u_before: u64,
    pub s_after: Option<u64>,
    /// `c_j ≥ u_before`.
    pub task_poor: bool,
    /// `u_before − s_after ≥ min(u_before, c_j)/4`.
    pub productive: bool,
}

/// Groups regular epochs into extended epochs, with witness sizes standing
/// in for core sizes.
///
/// The first extended epoch is the first regular epoch. Each later one
/// starts at the next regular epoch `k`: a stormy `k` stands alone,
/// otherwise it runs through the largest `l` such that every epoch from `k`
/// to `l` keeps at least `|K_k|/2` survivors and has a witness, and
/// `(l − k + 1)·|witness_l|·g < u_{k−1}`. When even `l = k` fails, `k`
/// stands alone.
pub fn partition_extended(epochs: &[EpochReport], units: u64, g: u64) -> Vec<ExtendedEpochReport> {
    let mut out = Vec::new();
    let mut k = 0usize;
    let mut u_before = units;
    while k < epochs.len() {
        let start = &epochs[k];
        let mut l = k;
        if k > 0 && start.calm {
            let k_size = start.start_survivors.len();
            let mut x = k;
            while x < epochs.len() {
                let e = &epochs[x];
                let Some(w) = &e.witness else { break };
                let rich = (x - k + 1) as u64 * w.len() as u64 * g < u_before;
                if 2 * e.end_survivors.len() < k_size || !rich {
                    break;
                }
                l = x;
                x += 1;
            }
        }
        let end = &epochs[l];
        let core = (l - k + 1) as u64 * end.witness.as_ref().map_or(0, |w| w.len() as u64) * g;
        let productive = match end.s {
            Some(s) => 4 * u_before.saturating_sub(s) >= u_before.min(core),
            None => false,
        };
        out.push(ExtendedEpochReport {
            index: out.len() as u64,
            first: k as u64,
            last: l as u64,
            core_number: core,
            u_before,
            s_after: end.s,
            task_poor: core >= u_before,
            productive,
        });
        u_before = end.u.unwrap_or(u_before);
        k = l + 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn epoch(i: u64, k: usize, g: usize, w: usize, u: u64, s: u64) -> EpochReport {
        EpochReport {
            index: i,
            first_round: 0,
            last_round: 0,
            start_survivors: (1..=k as u32).collect(),
            end_survivors: (1..=g as u32).collect(),
            calm: 2 * g >= k,
            witness: Some((1..=w as u32).collect()),
            nested: true,
            u: Some(u),
            s: Some(s),
        }
    }

    #[test]
    fn first_epoch_stands_alone() {
        let x = partition_extended(&[epoch(0, 8, 8, 8, 100, 90)], 1000, 10);
        assert_eq!(x.len(), 1);
        assert_eq!((x[0].first, x[0].last), (0, 0));
        assert!(x[0].productive);
    }

    #[test]
    fn calm_epochs_merge_while_task_rich() {
        // g·|w| = 10·8 = 80 per epoch against u = 1000
        let es: Vec<_> = (0..5).map(|i| epoch(i, 8, 8, 8, 1000, 900)).collect();
        let x = partition_extended(&es, 1000, 10);
        assert_eq!(
            x.iter().map(|e| (e.first, e.last)).collect::<Vec<_>>(),
            vec![(0, 0), (1, 4)]
        );
        assert!(!x[1].task_poor);
    }

    #[test]
    fn stormy_and_task_poor_are_single() {
        let es = vec![
            epoch(0, 8, 8, 8, 50, 40),
            epoch(1, 8, 3, 3, 20, 15),
            epoch(2, 3, 3, 3, 10, 5),
        ];
        let x = partition_extended(&es, 1000, 10);
        assert_eq!(x.len(), 3);
        assert!(x.iter().all(|e| e.first == e.last));
        assert!(x[2].task_poor);
    }
}
