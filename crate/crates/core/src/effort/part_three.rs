//! Coordinator-based completion among the checkpointed survivors.
//!
//! Members start on equal slices of the renamed task range. A member that
//! finishes its slice reports the tasks it knows to be done to the least
//! member it believes alive. Whoever receives reports acts as coordinator:
//! it returns overdue slices to the pool, deals out fresh slices of
//! `⌈pool / believed-alive⌉` tasks, asks the rest to wait for slices still
//! in flight, or, once every task is known done, tells everyone to stop. A
//! coordinator that does not answer within two rounds is presumed crashed.

use crate::idset::IdSet;
use crate::sim::ProcId;
use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

#[derive(Clone, Debug)]
pub enum ThreeMsg {
    Report(Arc<IdSet>),
    /// `due` is the round in which the last task of the slice runs.
    Assign {
        tasks: Arc<[u32]>,
        due: u64,
    },
    Wait {
        until: u64,
    },
    Done,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Mode {
    Working,
    Awaiting {
        coord: ProcId,
        since: u64,
    },
    Sleeping {
        until: u64,
    },
    /// Finished and its own coordinator.
    Idle,
}

/// Effects of one round.
#[derive(Clone, Debug, Default)]
pub struct ThreeStep {
    pub sends: Vec<(ProcId, ThreeMsg)>,
    pub execute: Option<u32>,
    pub halt: bool,
    pub coordinated: bool,
}

#[derive(Clone, Debug)]
pub struct Worker {
    id: ProcId,
    t: u32,
    alive: BTreeSet<ProcId>,
    done: IdSet,
    slice: Vec<u32>,
    next: usize,
    mode: Mode,
    inflight: BTreeMap<ProcId, (Vec<u32>, u64)>,
}

/// Tasks of the member with 1-based `rank` among `n`, all starting at once.
pub fn initial_slice(rank: u32, n: u32, t: u32) -> std::ops::RangeInclusive<u32> {
    let s = t.div_ceil(n.max(1));
    let lo = (rank - 1).saturating_mul(s) + 1;
    let hi = rank.saturating_mul(s).min(t);
    lo..=hi
}

impl Worker {
    /// `members` is the agreed survivor list; `start` is the first round of
    /// the stage.
    pub fn new(id: ProcId, t: u32, members: &IdSet, start: u64) -> Self {
        let mut alive: BTreeSet<ProcId> = members.iter().collect();
        alive.insert(id);
        let n = alive.len() as u32;
        let rank = |v: ProcId| alive.range(..v).count() as u32 + 1;
        let mut inflight = BTreeMap::new();
        if alive.first() == Some(&id) {
            for &v in &alive {
                let tasks: Vec<u32> = initial_slice(rank(v), n, t).collect();
                if !tasks.is_empty() {
                    let due = start + tasks.len() as u64 - 1;
                    inflight.insert(v, (tasks, due));
                }
            }
        }
        Worker {
            id,
            t,
            slice: initial_slice(rank(id), n, t).collect(),
            next: 0,
            mode: Mode::Working,
            done: IdSet::empty(t),
            alive,
            inflight,
        }
    }

    /// New id: rank among the agreed survivors.
    pub fn rank(&self) -> u32 {
        self.alive.range(..self.id).count() as u32 + 1
    }

    pub fn is_coordinator(&self) -> bool {
        self.alive.first() == Some(&self.id)
    }

    pub fn step(&mut self, round: u64, inbox: Vec<(ProcId, ThreeMsg)>) -> ThreeStep {
        let mut out = ThreeStep::default();
        let mut reporters = Vec::new();
        for (from, msg) in inbox {
            match msg {
                ThreeMsg::Done => {
                    out.halt = true;
                    return out;
                }
                ThreeMsg::Report(d) => {
                    self.done.union_with(&d);
                    self.inflight.remove(&from);
                    self.alive.insert(from);
                    reporters.push(from);
                }
                ThreeMsg::Assign { tasks, .. } => {
                    if self.next >= self.slice.len() {
                        self.slice.clear();
                        self.next = 0;
                    }
                    self.slice.extend(tasks.iter().copied());
                    self.mode = Mode::Working;
                }
                ThreeMsg::Wait { until } => {
                    if let Mode::Awaiting { .. } = self.mode {
                        self.mode = Mode::Sleeping { until };
                    }
                }
            }
        }
        match self.mode {
            Mode::Awaiting { coord, since } if round >= since + 2 => {
                self.alive.remove(&coord);
                self.request(round, &mut out);
            }
            Mode::Sleeping { until } if round >= until => self.request(round, &mut out),
            _ => {}
        }
        let self_idle = self.mode == Mode::Idle;
        if !reporters.is_empty() || self_idle {
            reporters.sort_unstable();
            self.coordinate(round, &reporters, self_idle, &mut out);
            if out.halt {
                return out;
            }
        }
        if self.mode == Mode::Working {
            if let Some(&x) = self.slice.get(self.next) {
                out.execute = Some(x);
                self.done.insert(x);
                self.next += 1;
            }
            if self.next >= self.slice.len() {
                self.slice.clear();
                self.next = 0;
                self.inflight.remove(&self.id);
                self.request(round, &mut out);
            }
        }
        out
    }

    fn request(&mut self, round: u64, out: &mut ThreeStep) {
        let coord = *self
            .alive
            .first()
            .expect("a member always believes itself alive");
        if coord == self.id {
            self.mode = Mode::Idle;
        } else {
            out.sends
                .push((coord, ThreeMsg::Report(Arc::new(self.done.clone()))));
            self.mode = Mode::Awaiting {
                coord,
                since: round,
            };
        }
    }

    fn coordinate(
        &mut self,
        round: u64,
        reporters: &[ProcId],
        self_idle: bool,
        out: &mut ThreeStep,
    ) {
        out.coordinated = true;
        let id = self.id;
        let mut dropped = Vec::new();
        self.inflight.retain(|&w, (_, due)| {
            let overdue = w != id && round >= *due + 2;
            if overdue {
                dropped.push(w);
            }
            !overdue
        });
        for w in dropped {
            if !reporters.contains(&w) {
                self.alive.remove(&w);
            }
        }
        if self.done.len() == self.t as usize {
            for &w in &self.alive {
                if w != id {
                    out.sends.push((w, ThreeMsg::Done));
                }
            }
            out.halt = true;
            return;
        }
        let mut busy = IdSet::empty(self.t);
        for (tasks, _) in self.inflight.values() {
            for &x in tasks {
                busy.insert(x);
            }
        }
        let mut pool = (1..=self.t).filter(|&x| !self.done.contains(x) && !busy.contains(x));
        let pool_len = self.t as usize - self.done.union_len(&busy);
        let share = pool_len.div_ceil(self.alive.len().max(1)).max(1);
        let mut requesters: Vec<ProcId> = reporters.to_vec();
        if self_idle {
            requesters.push(id);
        }
        let mut waiting = Vec::new();
        for w in requesters {
            let tasks: Vec<u32> = pool.by_ref().take(share).collect();
            if tasks.is_empty() {
                waiting.push(w);
                continue;
            }
            if w == id {
                let due = round + tasks.len() as u64 - 1;
                self.inflight.insert(id, (tasks.clone(), due));
                self.slice = tasks;
                self.next = 0;
                self.mode = Mode::Working;
            } else {
                let due = round + tasks.len() as u64;
                self.inflight.insert(w, (tasks.clone(), due));
                out.sends.push((
                    w,
                    ThreeMsg::Assign {
                        tasks: tasks.into(),
                        due,
                    },
                ));
            }
        }
        let until = self
            .inflight
            .values()
            .map(|(_, due)| due + 2)
            .max()
            .unwrap_or(round + 1);
        for w in waiting {
            if w == id {
                self.mode = Mode::Sleeping { until };
            } else {
                out.sends.push((w, ThreeMsg::Wait { until }));
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Drives a set of workers without crashes; returns (rounds, messages,
    /// executions).
    fn drive(n: u32, t: u32) -> (u64, u64, u64) {
        let members = IdSet::full(n);
        let mut ws: Vec<Option<Worker>> = (1..=n)
            .map(|v| Some(Worker::new(v, t, &members, 1)))
            .collect();
        let mut inboxes: Vec<Vec<(ProcId, ThreeMsg)>> = vec![Vec::new(); n as usize];
        let mut done = IdSet::empty(t);
        let (mut messages, mut execs) = (0, 0);
        for round in 1..10_000 {
            let mut next = vec![Vec::new(); n as usize];
            for v in 1..=n {
                let Some(w) = ws[v as usize - 1].as_mut() else {
                    continue;
                };
                let s = w.step(round, std::mem::take(&mut inboxes[v as usize - 1]));
                if let Some(x) = s.execute {
                    done.insert(x);
                    execs += 1;
                }
                for (to, m) in s.sends {
                    messages += u64::from(to != v);
                    next[to as usize - 1].push((v, m));
                }
                if s.halt {
                    assert_eq!(done.len(), t as usize, "halted early");
                    ws[v as usize - 1] = None;
                }
            }
            inboxes = next;
            if ws.iter().all(Option::is_none) {
                return (round, messages, execs);
            }
        }
        panic!("did not finish");
    }

    #[test]
    fn slices_partition_tasks() {
        assert_eq!(initial_slice(1, 3, 10), 1..=4);
        assert_eq!(initial_slice(3, 3, 10), 9..=10);
        assert!(initial_slice(3, 4, 2).is_empty());
    }

    #[test]
    fn lone_member_works_alone() {
        let (_, m, e) = drive(1, 7);
        assert_eq!(m, 0);
        assert_eq!(e, 7);
    }

    #[test]
    fn four_members_split_evenly() {
        let (rounds, m, e) = drive(4, 40);
        assert_eq!(e, 40);
        // one report each plus one stop each
        assert_eq!(m, 6);
        assert!(rounds <= 40 / 4 + 3);
    }
}
