//! Selection rules: which task (or busy processor) a processor picks next.

mod perm;

pub use perm::{
    fisher_yates_prefix, make_random_permutations, pi2_domain, PermutationPair, PermutationTable,
    Pi2,
};

use crate::idset::IdSet;

/// `⌈k·v/p⌉`, the Balance-Load position of processor `v` in a list of `k`.
pub fn balance_rank(k: u64, v: u32, p: u32) -> u64 {
    debug_assert!(k >= 1 && v >= 1 && v <= p);
    (k * v as u64).div_ceil(p as u64)
}

/// Item at the Balance-Load position of `v` in `list`.
pub fn balance_select(list: &IdSet, v: u32, p: u32) -> u32 {
    assert!(!list.is_empty(), "selection from an empty list");
    list.select(balance_rank(list.len() as u64, v, p) as usize)
        .expect("rank within list")
}

/// Pads `items` (in list order) to the π₂ domain, moves the item at
/// position `i` to position `π₂(i)`, then drops the padding.
///
/// Only the images of the first `items.len()` positions matter.
pub fn permuted_order(items: &[u32], pi2: &Pi2) -> Vec<u32> {
    assert!(
        items.len() as u64 <= pi2.domain(),
        "list longer than the permutation domain"
    );
    let keys = pi2.first_images(items.len());
    let mut keyed: Vec<(u64, u32)> = keys.into_iter().zip(items.iter().copied()).collect();
    keyed.sort_unstable_by_key(|&(k, _)| k);
    keyed.into_iter().map(|(_, x)| x).collect()
}

/// Items of `list` ordered by their π₁ images.
pub fn pi1_order(list: &IdSet, pi1: &[u32]) -> Vec<u32> {
    let mut v: Vec<u32> = list.iter().collect();
    v.sort_unstable_by_key(|&x| pi1[x as usize - 1]);
    v
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RuleKind {
    BalanceLoad,
    Permutations,
}

/// Per-processor selection state.
#[derive(Clone, Debug)]
pub struct Selector {
    kind: RuleKind,
    pair: Option<PermutationPair>,
    threshold: u64,
    task_order: Option<Vec<u32>>,
    task_cursor: usize,
    busy_order: Option<Vec<u32>>,
    busy_cursor: usize,
}

impl Selector {
    pub fn balance_load() -> Self {
        Selector {
            kind: RuleKind::BalanceLoad,
            pair: None,
            threshold: 0,
            task_order: None,
            task_cursor: 0,
            busy_order: None,
            busy_cursor: 0,
        }
    }

    /// Permutation rule with the switch at `|tasks| <= 11 p² g(p)`.
    pub fn permutations(pair: PermutationPair) -> Self {
        let threshold = pi2_domain(pair.p());
        Self::permutations_with_threshold(pair, threshold)
    }

    pub fn permutations_with_threshold(pair: PermutationPair, threshold: u64) -> Self {
        Selector {
            kind: RuleKind::Permutations,
            pair: Some(pair),
            threshold,
            task_order: None,
            task_cursor: 0,
            busy_order: None,
            busy_cursor: 0,
        }
    }

    pub fn kind(&self) -> &RuleKind {
        &self.kind
    }

    /// `true` once the permuted order has been installed.
    pub fn permuted(&self) -> bool {
        self.task_order.is_some()
    }

    /// Picks a task from the nonempty `tasks` of processor `v`.
    pub fn select_task(&mut self, tasks: &IdSet, v: u32, p: u32) -> u32 {
        assert!(!tasks.is_empty(), "selection from an empty task list");
        if self.kind == RuleKind::BalanceLoad {
            return balance_select(tasks, v, p);
        }
        if self.task_order.is_none() {
            if tasks.len() as u64 > self.threshold {
                return balance_select(tasks, v, p);
            }
            let items: Vec<u32> = tasks.iter().collect();
            let pair = self.pair.as_ref().expect("permutation rule has a pair");
            self.task_order = Some(permuted_order(&items, &pair.pi2));
            self.task_cursor = 0;
        }
        let order = self.task_order.as_ref().unwrap();
        while !tasks.contains(order[self.task_cursor]) {
            self.task_cursor += 1;
        }
        order[self.task_cursor]
    }

    /// Installs the π₁ order of the busy list (permutation rule only).
    pub fn enter_closing(&mut self, busy: &IdSet) {
        self.task_order = None;
        if let Some(pair) = &self.pair {
            self.busy_order = Some(pi1_order(busy, &pair.pi1));
            self.busy_cursor = 0;
        }
    }

    /// Picks a processor from the nonempty `busy` list of processor `v`.
    pub fn select_busy(&mut self, busy: &IdSet, v: u32, p: u32) -> u32 {
        assert!(!busy.is_empty(), "selection from an empty busy list");
        match &self.busy_order {
            None => balance_select(busy, v, p),
            Some(order) => {
                while !busy.contains(order[self.busy_cursor]) {
                    self.busy_cursor += 1;
                }
                order[self.busy_cursor]
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    #[test]
    fn rank_examples() {
        assert_eq!(balance_rank(100, 3, 10), 30);
        assert_eq!(balance_rank(7, 10, 10), 7);
        assert_eq!(balance_rank(1, 4, 9), 1);
    }

    #[test]
    fn balance_select_examples() {
        let l = IdSet::from_ids(40, [10, 20, 30, 40]);
        assert_eq!(balance_select(&l, 2, 4), 20);
        assert_eq!(balance_select(&IdSet::from_ids(5, [5]), 3, 7), 5);
        let full = IdSet::full(100);
        assert_eq!(balance_select(&full, 1, 2), 50);
        assert_eq!(balance_select(&full, 2, 2), 100);
    }

    #[test]
    fn pad_permute_compact() {
        // positions 1..4 move to 3, 8, 1, 5 in a domain of 8: order [3, 1, 4, 2]
        let pi2 = Pi2::Explicit(Arc::new(vec![3, 8, 1, 5, 2, 4, 6, 7]));
        assert_eq!(permuted_order(&[1, 2, 3, 4], &pi2), vec![3, 1, 4, 2]);
    }

    #[test]
    fn identity_keeps_sorted_order() {
        let pair = PermutationPair::identity(2);
        let mut s = Selector::permutations(pair);
        let mut tasks = IdSet::full(10);
        let mut picked = Vec::new();
        while !tasks.is_empty() {
            let x = s.select_task(&tasks, 1, 2);
            tasks.remove(x);
            picked.push(x);
        }
        assert_eq!(picked, (1..=10).collect::<Vec<_>>());
    }

    #[test]
    fn busy_head_follows_pi1() {
        let pair = PermutationPair {
            pi1: Arc::new(vec![3, 1, 2]),
            pi2: Pi2::Seeded {
                seed: 0,
                domain: pi2_domain(3),
            },
        };
        let mut s = Selector::permutations(pair);
        let mut busy = IdSet::full(3);
        s.enter_closing(&busy);
        assert_eq!(s.select_busy(&busy, 1, 3), 2);
        busy.remove(2);
        assert_eq!(s.select_busy(&busy, 1, 3), 3);
        busy.remove(3);
        assert_eq!(s.select_busy(&busy, 1, 3), 1);
    }

    #[test]
    fn switch_happens_at_threshold() {
        let pair = make_random_permutations(1, 2);
        let mut s = Selector::permutations_with_threshold(pair, 5);
        let mut tasks = IdSet::full(8);
        // above the threshold: Balance-Load position ⌈8·1/2⌉ = 4
        assert_eq!(s.select_task(&tasks, 1, 2), 4);
        assert!(!s.permuted());
        for x in [1, 2, 3] {
            tasks.remove(x);
        }
        let head = s.select_task(&tasks, 1, 2);
        assert!(s.permuted());
        assert!(tasks.contains(head));
    }
}
