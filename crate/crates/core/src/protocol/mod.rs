//! The generic algorithm: gossip of task, processor and busy lists over the
//! overlay, with a pluggable selection rule.
//!
//! A phase is one receive round, `chunk` compute rounds and one send round.
//! With `chunk = 1` this is the three-round phase of the plain algorithm;
//! larger chunks give the chunked variant used as the first part of
//! Effort-Priority, where a list entry stands for `chunk` consecutive tasks.

mod message;

pub use message::{GenericMsg, Lists, TaskWire, WireMode};

use crate::idset::IdSet;
use crate::overlay::OverlayGraph;
use crate::rules::{PermutationTable, Selector};
use crate::sim::{Envelope, ProcId, Protocol, ProtocolView, StepCtx};
use std::collections::VecDeque;
use std::sync::Arc;

/// `g(p) = ⌈30 lg p⌉ + 2`, the number of phases in an epoch.
pub fn epoch_phases(p: u32) -> u64 {
    if p <= 1 {
        return 2;
    }
    (30.0 * (p as f64).log2()).ceil() as u64 + 2
}

/// `⌈(p − f)/7⌉`.
pub fn compactness_threshold(p: u32, f: u32) -> usize {
    ((p - f) as usize).div_ceil(7)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Phase {
    Main,
    Closing,
}

#[derive(Clone, Debug)]
pub struct ProcessorState {
    pub id: ProcId,
    pub tasks: IdSet,
    pub processors: IdSet,
    pub busy: IdSet,
    pub phase: Phase,
    pub done: bool,
    pub selected: Option<ProcId>,
    pub selector: Selector,
    halt_after: bool,
    removed: Vec<u32>,
    seq: u32,
    chunk_next: u32,
    chunk_end: u32,
    inbox: Vec<(ProcId, GenericMsg)>,
    heard: Vec<u32>,
    last_seq: Vec<u32>,
    compact_cache: Option<(usize, bool)>,
}

/// Initial state: all `units` list entries, all `p` processors busy.
pub fn init_state(id: ProcId, p: u32, units: u32, selector: Selector) -> ProcessorState {
    assert!(id >= 1 && id <= p);
    ProcessorState {
        id,
        tasks: IdSet::full(units),
        processors: IdSet::full(p),
        busy: IdSet::full(p),
        phase: Phase::Main,
        done: false,
        selected: None,
        selector,
        halt_after: false,
        removed: Vec::new(),
        seq: 0,
        chunk_next: 0,
        chunk_end: 0,
        inbox: Vec::new(),
        heard: vec![0; p as usize + 1],
        last_seq: Vec::new(),
        compact_cache: None,
    }
}

/// List update of the compute round.
///
/// Drops every processor missing from a received Processors list and every
/// silent neighbor; drops busy entries missing from a received Busy list or
/// no longer in Processors; with `merge_tasks`, drops task entries missing
/// from a received Tasks list. Removed task entries are appended to
/// `removed`.
pub fn merge_update(
    state: &mut ProcessorState,
    received: &[&Lists],
    silent_neighbors: &[ProcId],
    merge_tasks: bool,
    removed: &mut Vec<u32>,
) {
    for m in received {
        state.processors.intersect_plain(&m.processors);
    }
    for &x in silent_neighbors {
        state.processors.remove(x);
    }
    for m in received {
        state.busy.intersect_plain(&m.busy);
    }
    let processors = &state.processors;
    state.busy.intersect_with(processors, |_| {});
    if !merge_tasks {
        return;
    }
    for m in received {
        if state.tasks.is_empty() {
            break;
        }
        match &m.tasks {
            TaskWire::Delta(d) => {
                for &x in d.iter() {
                    if state.tasks.remove(x) {
                        removed.push(x);
                    }
                }
            }
            TaskWire::Full(full) => state.tasks.intersect_with(full, |x| removed.push(x)),
            TaskWire::Cleared => {
                state.tasks = IdSet::empty(state.tasks.universe());
                removed.clear();
            }
        }
    }
}

/// Whether at least `threshold` members of `processors` (counting `id`)
/// lie within `radius` hops of `id` in the overlay restricted to
/// `processors`.
pub fn considers_self_compact(
    id: ProcId,
    processors: &IdSet,
    overlay: &OverlayGraph,
    radius: u64,
    threshold: usize,
) -> bool {
    if processors.len() < threshold {
        return false;
    }
    if overlay.graph.is_complete() {
        return true;
    }
    let p = overlay.graph.node_count();
    let mut dist = vec![u64::MAX; p + 1];
    let mut queue = VecDeque::new();
    dist[id as usize] = 0;
    queue.push_back(id);
    let mut count = 1;
    while let Some(u) = queue.pop_front() {
        if count >= threshold {
            return true;
        }
        let d = dist[u as usize];
        if d == radius {
            continue;
        }
        for w in overlay.neighbors_of(u) {
            if processors.contains(w) && dist[w as usize] == u64::MAX {
                dist[w as usize] = d + 1;
                count += 1;
                queue.push_back(w);
            }
        }
    }
    count >= threshold
}

/// Construction parameters of a [`GenericProtocol`].
#[derive(Clone, Debug)]
pub struct GenericParams {
    pub p: u32,
    pub t: u32,
    /// Tasks per list entry.
    pub chunk: u32,
    /// Crash bound used for the compactness threshold.
    pub f: u32,
    pub wire: WireMode,
}

pub enum RuleSpec<'a> {
    BalanceLoad,
    Permutations(&'a PermutationTable),
}

pub struct GenericProtocol {
    pub params: GenericParams,
    units: u32,
    radius: u64,
    threshold: usize,
    overlay: Arc<OverlayGraph>,
    pub states: Vec<ProcessorState>,
}

impl GenericProtocol {
    pub fn new(params: GenericParams, overlay: Arc<OverlayGraph>, rule: RuleSpec<'_>) -> Self {
        assert!(params.chunk >= 1);
        assert!(params.f < params.p);
        assert_eq!(overlay.graph.node_count(), params.p as usize);
        let units = params.t.div_ceil(params.chunk);
        let p = params.p;
        let states = (1..=p)
            .map(|id| {
                let selector = match &rule {
                    RuleSpec::BalanceLoad => Selector::balance_load(),
                    RuleSpec::Permutations(table) => Selector::permutations(table.pair(id).clone()),
                };
                let mut s = init_state(id, p, units, selector);
                if params.wire == WireMode::Delta && cfg!(debug_assertions) {
                    s.last_seq = vec![0; p as usize + 1];
                }
                s
            })
            .collect();
        GenericProtocol {
            units,
            radius: epoch_phases(p),
            threshold: compactness_threshold(p, params.f),
            overlay,
            params,
            states,
        }
    }

    pub fn units(&self) -> u32 {
        self.units
    }

    pub fn overlay(&self) -> &OverlayGraph {
        &self.overlay
    }

    pub fn state(&self, id: ProcId) -> &ProcessorState {
        &self.states[id as usize - 1]
    }

    /// One round of processor `id`; `wrap` lifts messages into the caller's
    /// message type.
    pub fn step_with<M>(
        &mut self,
        id: ProcId,
        inbox: Vec<(ProcId, GenericMsg)>,
        ctx: &mut StepCtx<M>,
        wrap: impl Fn(GenericMsg) -> M,
    ) {
        let len = self.phase_len();
        let round = ctx.round();
        let offset = (round - 1) % len;
        let phase_no = ((round - 1) / len + 1) as u32;
        let state = &mut self.states[id as usize - 1];
        state.inbox.extend(inbox);
        if offset == 0 {
            return;
        }
        if offset == 1 {
            self.compute(id, phase_no, ctx);
        } else if offset < len - 1 {
            let state = &mut self.states[id as usize - 1];
            if state.chunk_next != 0 && state.chunk_next <= state.chunk_end {
                ctx.execute(state.chunk_next);
                state.chunk_next += 1;
            }
        }
        if offset == len - 1 {
            self.send(id, ctx, wrap);
        }
    }

    fn compute<M>(&mut self, id: ProcId, phase_no: u32, ctx: &mut StepCtx<M>) {
        let p = self.params.p;
        let chunk = self.params.chunk;
        let t = self.params.t;
        let overlay = Arc::clone(&self.overlay);
        let (radius, threshold) = (self.radius, self.threshold);
        let state = &mut self.states[id as usize - 1];
        let inbox = std::mem::take(&mut state.inbox);
        let mut stop = false;
        let mut lists: Vec<Arc<Lists>> = Vec::with_capacity(inbox.len());
        for (from, msg) in inbox {
            state.heard[from as usize] = phase_no;
            stop |= msg.stop;
            if let Some(l) = msg.lists {
                if !state.last_seq.is_empty() {
                    let last = &mut state.last_seq[from as usize];
                    debug_assert_eq!(*last + 1, l.seq, "gap in the stream from {from} to {id}");
                    *last = l.seq;
                }
                lists.push(l);
            }
        }
        let silent: Vec<ProcId> = if phase_no > 1 {
            overlay
                .neighbors_of(id)
                .filter(|&x| state.processors.contains(x) && state.heard[x as usize] != phase_no)
                .collect()
        } else {
            Vec::new()
        };
        let refs: Vec<&Lists> = lists.iter().map(|l| l.as_ref()).collect();
        let mut removed = std::mem::take(&mut state.removed);
        let main = state.phase == Phase::Main;
        merge_update(state, &refs, &silent, main, &mut removed);
        state.removed = removed;

        match state.phase {
            Phase::Main => {
                if !state.tasks.is_empty() {
                    let x = state.selector.select_task(&state.tasks, id, p);
                    state.chunk_next = (x - 1) * chunk + 1;
                    state.chunk_end = (x * chunk).min(t);
                    ctx.execute(state.chunk_next);
                    state.chunk_next += 1;
                    state.tasks.remove(x);
                    state.removed.push(x);
                } else {
                    state.done = true;
                }
                if state.busy != state.processors {
                    state.done = true;
                }
                if stop {
                    state.done = true;
                }
                if state.done {
                    state.busy.remove(id);
                    state.tasks = IdSet::empty(state.tasks.universe());
                    state.removed.clear();
                    state.phase = Phase::Closing;
                    state.selector.enter_closing(&state.busy);
                }
            }
            Phase::Closing => {
                state.chunk_next = 0;
                state.halt_after = false;
                let compact = match state.compact_cache {
                    Some((len, c)) if len == state.processors.len() => c,
                    _ => {
                        let c = considers_self_compact(
                            id,
                            &state.processors,
                            &overlay,
                            radius,
                            threshold,
                        );
                        state.compact_cache = Some((state.processors.len(), c));
                        c
                    }
                };
                if !compact {
                    state.halt_after = true;
                }
                if !state.busy.is_empty() {
                    let s = state.selector.select_busy(&state.busy, id, p);
                    state.selected = Some(s);
                    state.busy.remove(s);
                } else {
                    state.selected = Some(id);
                    state.halt_after = true;
                }
            }
        }
    }

    fn send<M>(&mut self, id: ProcId, ctx: &mut StepCtx<M>, wrap: impl Fn(GenericMsg) -> M) {
        let wire = self.params.wire;
        let overlay = Arc::clone(&self.overlay);
        let state = &mut self.states[id as usize - 1];
        state.seq += 1;
        let tasks = if state.tasks.is_empty() {
            state.removed.clear();
            TaskWire::Cleared
        } else {
            match wire {
                WireMode::Delta => TaskWire::Delta(std::mem::take(&mut state.removed).into()),
                WireMode::Full => {
                    state.removed.clear();
                    TaskWire::Full(Arc::new(state.tasks.clone()))
                }
            }
        };
        let lists = Arc::new(Lists {
            seq: state.seq,
            tasks,
            processors: Arc::new(state.processors.clone()),
            busy: Arc::new(state.busy.clone()),
        });
        let closing = state.phase == Phase::Closing;
        let selected = if closing { state.selected } else { None };
        let mut stop_sent = false;
        for x in overlay.neighbors_of(id) {
            if !state.processors.contains(x) {
                continue;
            }
            let stop = selected == Some(x);
            stop_sent |= stop;
            ctx.send(
                x,
                wrap(GenericMsg {
                    lists: Some(Arc::clone(&lists)),
                    stop,
                }),
            );
        }
        if let (Some(s), false) = (selected, stop_sent) {
            ctx.send(
                s,
                wrap(GenericMsg {
                    lists: None,
                    stop: true,
                }),
            );
        }
        if closing {
            state.selected = None;
            if state.halt_after {
                ctx.halt();
            }
        }
    }
}

impl ProtocolView for GenericProtocol {
    fn epoch_rounds(&self) -> Option<u64> {
        Some(self.radius * self.phase_len())
    }

    fn nominal_rounds(&self) -> u64 {
        let p = self.params.p as u64;
        self.phase_len() * ((self.units as u64).div_ceil(p) + self.radius + 2)
    }
}

impl Protocol for GenericProtocol {
    type Msg = GenericMsg;

    fn processors(&self) -> u32 {
        self.params.p
    }

    fn tasks(&self) -> u32 {
        self.params.t
    }

    fn step(
        &mut self,
        id: ProcId,
        inbox: Vec<Envelope<GenericMsg>>,
        ctx: &mut StepCtx<GenericMsg>,
    ) {
        let inbox = inbox.into_iter().map(|e| (e.from, e.msg)).collect();
        self.step_with(id, inbox, ctx, |m| m);
    }

    fn phase_len(&self) -> u64 {
        self.params.chunk as u64 + 2
    }

    fn task_snapshot(&self, id: ProcId) -> Option<IdSet> {
        Some(self.states[id as usize - 1].tasks.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn epoch_length() {
        assert_eq!(epoch_phases(8), 92);
        assert_eq!(epoch_phases(2), 32);
        assert_eq!(epoch_phases(1), 2);
    }

    #[test]
    fn thresholds() {
        assert_eq!(compactness_threshold(10, 3), 1);
        assert_eq!(compactness_threshold(64, 0), 10);
    }

    #[test]
    fn init_example() {
        let s = init_state(1, 3, 2, Selector::balance_load());
        assert_eq!(s.tasks.iter().collect::<Vec<_>>(), vec![1, 2]);
        assert_eq!(s.processors.iter().collect::<Vec<_>>(), vec![1, 2, 3]);
        assert_eq!(s.busy, s.processors);
        assert_eq!(s.phase, Phase::Main);
    }

    fn lists(tasks: &[u32], t: u32, procs: &[u32], busy: &[u32], p: u32) -> Lists {
        Lists {
            seq: 1,
            tasks: TaskWire::Full(Arc::new(IdSet::from_ids(t, tasks.iter().copied()))),
            processors: Arc::new(IdSet::from_ids(p, procs.iter().copied())),
            busy: Arc::new(IdSet::from_ids(p, busy.iter().copied())),
        }
    }

    #[test]
    fn merge_examples() {
        let mut s = init_state(1, 2, 3, Selector::balance_load());
        let mut removed = Vec::new();
        let m = lists(&[2, 3], 3, &[1, 2], &[1, 2], 2);
        merge_update(&mut s, &[&m], &[], true, &mut removed);
        assert_eq!(s.tasks.iter().collect::<Vec<_>>(), vec![2, 3]);
        assert_eq!(removed, vec![1]);

        let before = s.clone();
        merge_update(&mut s, &[], &[], true, &mut removed);
        assert_eq!(s.tasks, before.tasks);
        assert_eq!(s.processors, before.processors);

        merge_update(&mut s, &[], &[2], true, &mut removed);
        assert!(!s.processors.contains(2));
        assert!(!s.busy.contains(2));
    }
}
