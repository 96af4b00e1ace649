//! Synchronous stand-alone driver for Part-Two, used to check the
//! checkpointing invariants against seeded and exhaustive crash patterns.

use super::{stage_at, CheckpointNode, CpMsg, Stage, StepNote};
use crate::idset::IdSet;
use crate::rng::SimRng;
use crate::sim::{CrashDecision, ProcId};
use std::collections::HashSet;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    /// The least id seen in Round 1 survived Round 4 somewhere.
    NotShrinking { phase: u64, least: ProcId },
    /// More than one node acted as coordinator in Round 3.
    SeveralCoordinators { phase: u64, ids: Vec<ProcId> },
    /// Processors lists of active nodes never settled, or changed after
    /// settling.
    NotSettled { phase: Option<u64> },
}

#[derive(Clone, Debug, Hash, PartialEq, Eq)]
pub struct CheckpointModel {
    pub nodes: Vec<CheckpointNode>,
    pub crashed: Vec<bool>,
    pub phases: u64,
    round: u64,
    inboxes: Vec<Vec<(ProcId, CpMsg)>>,
    outboxes: Vec<Vec<(ProcId, CpMsg)>>,
    notes: Vec<StepNote>,
    least: Option<ProcId>,
    /// Nodes that never entered Part-Two (crashed or halted earlier).
    absent: Vec<bool>,
}

/// Messages and findings of one model run.
#[derive(Clone, Debug, Default)]
pub struct ModelReport {
    pub messages: u64,
    pub violations: Vec<Violation>,
    /// Lists of the nodes active at the end of each phase.
    pub snapshots: Vec<Vec<(ProcId, IdSet)>>,
}

impl CheckpointModel {
    /// `lists[i]` is the Processors list that node `i + 1` brings into
    /// Part-Two; the lists share one universe.
    pub fn new(lists: Vec<IdSet>, phases: u64) -> Self {
        Self::with_absent(lists, phases, &[])
    }

    /// Like [`CheckpointModel::new`], but the `absent` ids take no part:
    /// they still appear in lists, as processors that crashed or halted
    /// before Part-Two do.
    pub fn with_absent(lists: Vec<IdSet>, phases: u64, absent: &[ProcId]) -> Self {
        let n = lists.len();
        let absent: Vec<bool> = (1..=n as ProcId).map(|v| absent.contains(&v)).collect();
        CheckpointModel {
            crashed: absent.clone(),
            absent,
            nodes: lists
                .into_iter()
                .enumerate()
                .map(|(i, l)| CheckpointNode::new(i as ProcId + 1, l))
                .collect(),
            phases,
            round: 0,
            inboxes: vec![Vec::new(); n],
            outboxes: vec![Vec::new(); n],
            notes: vec![StepNote::default(); n],
            least: None,
        }
    }

    pub fn total_rounds(&self) -> u64 {
        1 + 4 * self.phases
    }

    pub fn finished(&self) -> bool {
        self.round >= self.total_rounds()
    }

    fn entered(&self) -> impl Iterator<Item = &CheckpointNode> {
        self.nodes
            .iter()
            .zip(&self.absent)
            .filter(|(_, &a)| !a)
            .map(|(n, _)| n)
    }

    pub fn alive_count(&self) -> usize {
        self.crashed.iter().filter(|&&c| !c).count()
    }

    /// Steps every live node for the current round and returns the
    /// envelopes they want to send.
    pub fn compute(&mut self) -> &[Vec<(ProcId, CpMsg)>] {
        let (stage, _) = stage_at(self.round);
        for i in 0..self.nodes.len() {
            self.notes[i] = StepNote::default();
            if self.crashed[i] {
                self.outboxes[i].clear();
                continue;
            }
            let inbox = std::mem::take(&mut self.inboxes[i]);
            self.outboxes[i] = self.nodes[i].step(stage, &inbox, &mut self.notes[i]);
        }
        if let Stage::R1 { .. } = stage {
            self.least = self
                .entered()
                .filter_map(|n| n.coordinators.first().copied())
                .min();
        }
        &self.outboxes
    }

    /// Applies this round's crashes, delivers surviving envelopes and runs
    /// the per-phase checks.
    pub fn commit(&mut self, crashes: &[CrashDecision], report: &mut ModelReport) {
        let (stage, phase) = stage_at(self.round);
        let n = self.nodes.len();
        let mut delivered_to: Vec<Option<&[ProcId]>> = vec![None; n];
        for d in crashes {
            delivered_to[d.victim as usize - 1] = Some(&d.delivered);
        }
        for i in 0..n {
            let from = i as ProcId + 1;
            for (to, msg) in std::mem::take(&mut self.outboxes[i]) {
                if let Some(allowed) = delivered_to[i] {
                    if to != from && !allowed.contains(&to) {
                        continue;
                    }
                }
                if to != from {
                    report.messages += 1;
                }
                let j = to as usize - 1;
                let receiver_crashes = self.crashed[j] || delivered_to[j].is_some();
                if !receiver_crashes {
                    self.inboxes[j].push((from, msg));
                }
            }
        }
        if stage == Stage::R3 {
            let ids: Vec<ProcId> = (0..n)
                .filter(|&i| self.notes[i].coordinated)
                .map(|i| i as ProcId + 1)
                .collect();
            if ids.len() > 1 {
                report
                    .violations
                    .push(Violation::SeveralCoordinators { phase, ids });
            }
        }
        if stage == Stage::R4 {
            for i in 0..n {
                if self.crashed[i] && !self.absent[i] {
                    self.nodes[i].ghost_round4();
                }
            }
        }
        for d in crashes {
            self.crashed[d.victim as usize - 1] = true;
        }
        if stage == Stage::R4 {
            if let Some(least) = self.least {
                if self.entered().any(|x| x.coordinators.contains(&least)) {
                    report
                        .violations
                        .push(Violation::NotShrinking { phase, least });
                }
            }
            report.snapshots.push(
                (0..n)
                    .filter(|&i| !self.crashed[i])
                    .map(|i| (i as ProcId + 1, self.nodes[i].processors.clone()))
                    .collect(),
            );
        }
        self.round += 1;
        let entered = self.absent.iter().filter(|&&a| !a).count();
        if self.finished() && entered < self.phases as usize {
            if let Some(v) = settle_check(&report.snapshots) {
                report.violations.push(v);
            }
        }
    }
}

/// Lists of active nodes must become identical at some phase and stay
/// unchanged afterwards.
fn settle_check(snapshots: &[Vec<(ProcId, IdSet)>]) -> Option<Violation> {
    let identical = |s: &[(ProcId, IdSet)]| s.windows(2).all(|w| w[0].1 == w[1].1);
    let Some(start) = snapshots.iter().position(|s| identical(s)) else {
        return Some(Violation::NotSettled { phase: None });
    };
    let reference = snapshots[start].first().map(|(_, l)| l.clone());
    for (q, s) in snapshots.iter().enumerate().skip(start) {
        if s.iter().any(|(_, l)| Some(l) != reference.as_ref()) {
            return Some(Violation::NotSettled {
                phase: Some(q as u64),
            });
        }
    }
    None
}

/// Runs the model to completion with crashes drawn by `rng`: each round,
/// each live node crashes with probability `rate` (never the last one) and
/// reaches a uniformly random subset of its receivers.
pub fn run_random(
    mut model: CheckpointModel,
    rate: f64,
    budget: usize,
    rng: &mut SimRng,
) -> ModelReport {
    let mut report = ModelReport::default();
    let mut left = budget;
    while !model.finished() {
        let outboxes = model.compute().to_vec();
        let mut crashes = Vec::new();
        for (i, out) in outboxes.iter().enumerate() {
            let alive_after = model.alive_count() - crashes.len();
            if model.crashed[i] || left == 0 || alive_after <= 1 || !rng.chance(rate) {
                continue;
            }
            let mut delivered: Vec<ProcId> = out
                .iter()
                .map(|(to, _)| *to)
                .filter(|&to| to != i as ProcId + 1 && rng.chance(0.5))
                .collect();
            delivered.sort_unstable();
            delivered.dedup();
            crashes.push(CrashDecision {
                victim: i as ProcId + 1,
                delivered,
            });
            left -= 1;
        }
        model.commit(&crashes, &mut report);
    }
    report
}

/// Outcome of [`exhaustive`].
#[derive(Clone, Debug, Default)]
pub struct ExhaustiveReport {
    /// Distinct model states expanded.
    pub states: u64,
    /// Complete executions reached (after merging identical states).
    pub leaves: u64,
    pub violations: Vec<Violation>,
}

/// Explores every crash pattern for `p2` nodes that all start with the full
/// list: in each round any set of live nodes may crash (at least one node
/// never crashes), each reaching any subset of its receivers. Identical
/// intermediate states are merged.
pub fn exhaustive(p2: u32, phases: u64) -> ExhaustiveReport {
    let lists = vec![IdSet::full(p2); p2 as usize];
    let model = CheckpointModel::new(lists, phases);
    let mut out = ExhaustiveReport::default();
    let mut seen: HashSet<(CheckpointModel, Vec<Vec<(ProcId, IdSet)>>)> = HashSet::new();
    let mut stack = vec![(model, ModelReport::default())];
    while let Some((mut model, report)) = stack.pop() {
        if model.finished() {
            out.leaves += 1;
            for v in report.violations {
                if !out.violations.contains(&v) {
                    out.violations.push(v);
                }
            }
            continue;
        }
        if !seen.insert((model.clone(), report.snapshots.clone())) {
            continue;
        }
        out.states += 1;
        let outboxes = model.compute().to_vec();
        for crashes in crash_choices(&model, &outboxes) {
            let mut m = model.clone();
            let mut r = report.clone();
            m.commit(&crashes, &mut r);
            stack.push((m, r));
        }
    }
    out
}

/// All crash decision sets for one round; crashes of nodes with nothing to
/// send are included, since they change which nodes count as active.
fn crash_choices(
    model: &CheckpointModel,
    outboxes: &[Vec<(ProcId, CpMsg)>],
) -> Vec<Vec<CrashDecision>> {
    let live: Vec<usize> = (0..model.nodes.len())
        .filter(|&i| !model.crashed[i])
        .collect();
    let mut all = vec![Vec::new()];
    for &i in &live {
        let id = i as ProcId + 1;
        let mut receivers: Vec<ProcId> = outboxes[i]
            .iter()
            .map(|(to, _)| *to)
            .filter(|&to| to != id)
            .collect();
        receivers.sort_unstable();
        receivers.dedup();
        let mut next = Vec::new();
        for choice in &all {
            next.push(choice.clone());
            if live.len() - choice.len() <= 1 {
                continue;
            }
            for mask in 0u32..(1 << receivers.len()) {
                let delivered = receivers
                    .iter()
                    .enumerate()
                    .filter(|(b, _)| mask >> b & 1 == 1)
                    .map(|(_, &r)| r)
                    .collect();
                let mut c = choice.clone();
                c.push(CrashDecision {
                    victim: id,
                    delivered,
                });
                next.push(c);
            }
        }
        all = next;
    }
    all
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::effort::checkpoint::CheckpointNode;

    #[test]
    fn single_candidate_settles() {
        let mut model = CheckpointModel::new(vec![IdSet::full(3); 3], 4);
        let mut report = ModelReport::default();
        while !model.finished() {
            model.compute();
            model.commit(&[], &mut report);
        }
        assert!(report.violations.is_empty());
        assert!(report
            .snapshots
            .iter()
            .all(|s| s.iter().all(|(_, l)| l.len() == 3)));
        // prep 3·2, then 1, 2 and 3 coordinate in turn (proposal 2,
        // responses 2, list 2); the fourth phase finds every list empty
        assert_eq!(report.messages, 6 + 3 * 6);
    }

    #[test]
    fn abdication_restores_ids() {
        let both = IdSet::from_ids(5, [3, 5]);
        let mut a = CheckpointNode::new(3, both.clone());
        let mut b = CheckpointNode::new(5, both);
        a.coordinators = [3].into();
        b.coordinators = [5].into();
        assert!(a.round1() && b.round1());
        let (mut na, mut nb) = (StepNote::default(), StepNote::default());
        assert_eq!(a.round2(&[3, 5], &mut na), Some(3));
        assert_eq!(b.round2(&[3, 5], &mut nb), Some(3));
        assert!(!na.abdicated && nb.abdicated);
        assert_eq!(
            a.coordinators.iter().copied().collect::<Vec<_>>(),
            vec![3, 5]
        );
        assert_eq!(
            b.coordinators.iter().copied().collect::<Vec<_>>(),
            vec![3, 5]
        );
    }

    #[test]
    fn stage_layout() {
        assert_eq!(stage_at(0), (Stage::Prep, 0));
        assert_eq!(stage_at(1), (Stage::R1 { first: true }, 0));
        assert_eq!(stage_at(4), (Stage::R4, 0));
        assert_eq!(stage_at(5), (Stage::R1 { first: false }, 1));
    }
}
