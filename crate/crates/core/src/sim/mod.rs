//! Synchronous round engine.
//!
//! Each round every active processor steps once (ascending id) with the
//! messages sent to it in the previous round. The adversary then inspects
//! the global state and this round's outgoing envelopes and chooses crashes;
//! a crashing processor's envelopes reach only the receivers it picks.

mod metrics;
mod trace;

pub use metrics::{account, RunMetrics};
pub use trace::{Event, RunTrace, TagKind, TraceLevel};

use crate::error::{Error, Result};
use crate::idset::IdSet;
use std::collections::BTreeMap;

/// 1-based processor identifier.
pub type ProcId = u32;

#[derive(Clone, Debug)]
pub struct Envelope<M> {
    pub from: ProcId,
    pub to: ProcId,
    pub msg: M,
}

/// Per-step output buffer handed to [`Protocol::step`].
pub struct StepCtx<M> {
    round: u64,
    outbox: Vec<Envelope<M>>,
    executed: Vec<u32>,
    tags: Vec<(TagKind, Vec<u32>)>,
    halt: bool,
    id: ProcId,
}

impl<M> StepCtx<M> {
    pub fn round(&self) -> u64 {
        self.round
    }

    pub fn send(&mut self, to: ProcId, msg: M) {
        self.outbox.push(Envelope {
            from: self.id,
            to,
            msg,
        });
    }

    /// Records that `task` was performed in this round.
    pub fn execute(&mut self, task: u32) {
        self.executed.push(task);
    }

    /// Halts at the end of this round, after this round's sends.
    pub fn halt(&mut self) {
        self.halt = true;
    }

    /// Attaches a protocol-specific marker to the trace.
    pub fn tag(&mut self, kind: TagKind, data: Vec<u32>) {
        self.tags.push((kind, data));
    }
}

/// Read-only protocol state exposed to adversaries.
pub trait ProtocolView {
    /// Processors acting as coordinators in the current round (the adaptive
    /// adversary's natural targets). Empty for protocols without a leader.
    fn coordinators(&self, _round: u64) -> Vec<ProcId> {
        Vec::new()
    }

    /// Rounds per regular epoch, when the protocol has epochs.
    fn epoch_rounds(&self) -> Option<u64> {
        None
    }

    /// A round count by which a failure-free run is expected to finish.
    fn nominal_rounds(&self) -> u64;
}

pub trait Protocol: ProtocolView {
    type Msg: Clone;

    fn processors(&self) -> u32;
    fn tasks(&self) -> u32;

    /// One round of processor `id`.
    fn step(&mut self, id: ProcId, inbox: Vec<Envelope<Self::Msg>>, ctx: &mut StepCtx<Self::Msg>);

    /// Rounds per phase (used to schedule snapshots).
    fn phase_len(&self) -> u64;

    /// Whether the end of `round` closes a phase whose snapshots should be
    /// considered (snapshot cadence is applied on top).
    fn phase_index_at_end(&self, round: u64) -> Option<u64> {
        let l = self.phase_len();
        (round % l == 0).then_some(round / l)
    }

    /// Last round governed by the phase structure, when it ends early.
    fn phased_rounds(&self) -> Option<u64> {
        None
    }

    /// Current task list of `id`, for snapshots.
    fn task_snapshot(&self, id: ProcId) -> Option<IdSet>;

    /// Accounting segment of a round (e.g. the parts of a multi-stage
    /// protocol); messages are tallied per segment.
    fn segment(&self, _round: u64) -> &'static str {
        "main"
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Active,
    Halted(u64),
    Crashed(u64),
}

impl Status {
    pub fn is_active(self) -> bool {
        self == Status::Active
    }
}

/// A crash chosen by the adversary for the current round.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CrashDecision {
    pub victim: ProcId,
    /// Receivers (other than the victim) whose envelopes still arrive.
    pub delivered: Vec<ProcId>,
}

/// What an adversary sees before choosing crashes.
pub struct RoundView<'a> {
    pub round: u64,
    pub p: u32,
    pub status: &'a [Status],
    /// Receivers of each processor's envelopes this round (index `id - 1`).
    pub outboxes: &'a [Vec<ProcId>],
    pub protocol: &'a dyn ProtocolView,
}

impl RoundView<'_> {
    pub fn active(&self) -> impl Iterator<Item = ProcId> + '_ {
        (1..=self.p).filter(|&v| self.status[v as usize - 1].is_active())
    }

    pub fn crashed_count(&self) -> usize {
        self.status
            .iter()
            .filter(|s| matches!(s, Status::Crashed(_)))
            .count()
    }
}

pub trait Adversary {
    fn decide(&mut self, view: &RoundView<'_>) -> Result<Vec<CrashDecision>>;
}

/// Filters a victim's outbox down to the delivered receivers.
pub fn crash_apply<M>(
    decision: &CrashDecision,
    outbox: Vec<Envelope<M>>,
) -> Result<Vec<Envelope<M>>> {
    if outbox.iter().any(|e| e.from != decision.victim) {
        return Err(Error::Schedule(format!(
            "outbox does not belong to processor {}",
            decision.victim
        )));
    }
    for &r in &decision.delivered {
        if !outbox.iter().any(|e| e.to == r) {
            return Err(Error::Schedule(format!(
                "processor {} sent nothing to {r}; it cannot be in the delivered set",
                decision.victim
            )));
        }
    }
    Ok(outbox
        .into_iter()
        .filter(|e| decision.delivered.contains(&e.to))
        .collect())
}

#[derive(Clone, Debug)]
pub struct SimOptions {
    pub round_cap: u64,
    pub trace: TraceLevel,
    /// Snapshot every this many phases; 0 disables snapshots.
    pub snapshot_every_phases: u64,
}

impl SimOptions {
    pub fn default_round_cap(p: u32, t: u32) -> u64 {
        10 * (t as u64 + p as u64) * 3
    }
}

pub struct SimResult {
    pub trace: RunTrace,
    pub metrics: RunMetrics,
}

/// Runs `protocol` against `adversary` until every processor has halted or
/// crashed, or until the round cap.
pub fn run_simulation<P: Protocol>(
    protocol: &mut P,
    adversary: &mut dyn Adversary,
    opts: &SimOptions,
) -> Result<SimResult> {
    let p = protocol.processors();
    let t = protocol.tasks();
    if opts.round_cap == 0 {
        return Err(Error::Parameter("round_cap must be positive".into()));
    }
    let pu = p as usize;
    let mut status = vec![Status::Active; pu];
    let mut inboxes: Vec<Vec<Envelope<P::Msg>>> = (0..pu).map(|_| Vec::new()).collect();
    let mut trace = RunTrace::new(opts.trace, p, t);
    let mut executed = IdSet::empty(t);
    let mut messages = 0u64;
    let mut segments: BTreeMap<String, u64> = BTreeMap::new();
    let mut first_halt: Option<(u64, bool)> = None;
    let mut termination = None;
    let mut round = 0u64;

    while round < opts.round_cap {
        round += 1;
        let mut outboxes: Vec<Vec<Envelope<P::Msg>>> = (0..pu).map(|_| Vec::new()).collect();
        let mut halting = vec![false; pu];
        let mut executed_this_round = 0u64;
        for v in 1..=p {
            let i = v as usize - 1;
            if !status[i].is_active() {
                continue;
            }
            let inbox = std::mem::take(&mut inboxes[i]);
            let mut ctx = StepCtx {
                round,
                outbox: Vec::new(),
                executed: Vec::new(),
                tags: Vec::new(),
                halt: false,
                id: v,
            };
            protocol.step(v, inbox, &mut ctx);
            for &task in &ctx.executed {
                executed.insert(task);
                trace.exec(round, v, task);
            }
            executed_this_round += ctx.executed.len() as u64;
            for (kind, data) in ctx.tags {
                trace.tag(round, v, kind, data);
            }
            halting[i] = ctx.halt;
            outboxes[i] = ctx.outbox;
        }
        trace.exec_count(round, executed_this_round);

        let receivers: Vec<Vec<ProcId>> = outboxes
            .iter()
            .map(|o| o.iter().map(|e| e.to).collect())
            .collect();
        let decisions = {
            let view = RoundView {
                round,
                p,
                status: &status,
                outboxes: &receivers,
                protocol: &*protocol,
            };
            adversary.decide(&view)?
        };
        for d in &decisions {
            if d.victim == 0 || d.victim > p {
                return Err(Error::Schedule(format!(
                    "victim {} outside 1..={p}",
                    d.victim
                )));
            }
            let i = d.victim as usize - 1;
            if !status[i].is_active() {
                return Err(Error::Schedule(format!(
                    "processor {} is not active in round {round}",
                    d.victim
                )));
            }
            let mut delivered = d.delivered.clone();
            delivered.sort_unstable();
            delivered.dedup();
            let kept = crash_apply(
                &CrashDecision {
                    victim: d.victim,
                    delivered: delivered.clone(),
                },
                std::mem::take(&mut outboxes[i]),
            )?;
            outboxes[i] = kept;
            status[i] = Status::Crashed(round);
            halting[i] = false;
            trace.crash(round, d.victim, delivered);
        }

        let segment = protocol.segment(round);
        let mut round_messages = 0u64;
        for (i, outbox) in outboxes.into_iter().enumerate() {
            if outbox.is_empty() {
                continue;
            }
            let from = i as u32 + 1;
            let mut to_list = Vec::new();
            let mut counted = 0u64;
            for env in outbox {
                if env.to != from {
                    counted += 1;
                    if trace.level() == TraceLevel::Full {
                        to_list.push(env.to);
                    }
                }
                let r = env.to as usize - 1;
                let receiver_alive = status[r].is_active() && !halting[r];
                if receiver_alive {
                    inboxes[r].push(env);
                }
            }
            trace.send(round, from, to_list, counted);
            round_messages += counted;
        }
        messages += round_messages;
        if round_messages > 0 {
            *segments.entry(segment.to_string()).or_default() += round_messages;
        }
        trace.msgs(round, round_messages, segment);

        for v in 1..=p {
            let i = v as usize - 1;
            if halting[i] && status[i].is_active() {
                status[i] = Status::Halted(round);
                trace.halt(round, v);
                if first_halt.is_none() {
                    first_halt = Some((round, executed.len() == t as usize));
                }
            }
        }

        let finished = status.iter().all(|s| !s.is_active());
        if opts.snapshot_every_phases > 0 {
            // cadence snapshots, plus one where the phased part of the run
            // ends so that a trailing partial epoch has lists too
            let cadence = protocol
                .phase_index_at_end(round)
                .filter(|ph| ph % opts.snapshot_every_phases == 0);
            let phased_end = protocol.phased_rounds();
            let closing =
                phased_end == Some(round) || (finished && phased_end.is_none_or(|e| round <= e));
            let phase = cadence.or(closing.then(|| round.div_ceil(protocol.phase_len())));
            if let Some(phase) = phase {
                for v in 1..=p {
                    if matches!(status[v as usize - 1], Status::Crashed(_)) {
                        continue;
                    }
                    if let Some(tasks) = protocol.task_snapshot(v) {
                        trace.snapshot(round, phase, v, &tasks);
                    }
                }
            }
        }

        if finished {
            termination = Some(round);
            break;
        }
    }

    let terminated = termination.is_some();
    let end_round = termination.unwrap_or(round);
    let work: u64 = status
        .iter()
        .map(|s| match s {
            Status::Crashed(c) => (*c).min(end_round),
            _ => end_round,
        })
        .sum();
    let metrics = RunMetrics {
        work,
        messages,
        effort: work + messages,
        termination_round: end_round,
        terminated,
        tasks_completed: executed.len() == t as usize,
        crashes: status
            .iter()
            .filter(|s| matches!(s, Status::Crashed(_)))
            .count() as u32,
        first_halt_round: first_halt.map(|(r, _)| r),
        all_tasks_done_at_first_halt: first_halt.map(|(_, ok)| ok),
        segment_messages: segments,
    };
    trace.end(&metrics);
    Ok(SimResult { trace, metrics })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Each processor sends one message to every other processor in round 1,
    /// performs task `id` in round 2 and halts in round `id + 1`.
    struct Toy {
        p: u32,
    }

    impl ProtocolView for Toy {
        fn nominal_rounds(&self) -> u64 {
            self.p as u64 + 1
        }
    }

    impl Protocol for Toy {
        type Msg = ();
        fn processors(&self) -> u32 {
            self.p
        }
        fn tasks(&self) -> u32 {
            self.p
        }
        fn step(&mut self, id: ProcId, _inbox: Vec<Envelope<()>>, ctx: &mut StepCtx<()>) {
            if ctx.round() == 1 {
                for w in 1..=self.p {
                    ctx.send(w, ());
                }
            }
            if ctx.round() == 2 {
                ctx.execute(id);
            }
            if ctx.round() == id as u64 + 1 {
                ctx.halt();
            }
        }
        fn phase_len(&self) -> u64 {
            1
        }
        fn task_snapshot(&self, _id: ProcId) -> Option<IdSet> {
            None
        }
    }

    struct Script(Vec<(u64, CrashDecision)>);

    impl Adversary for Script {
        fn decide(&mut self, view: &RoundView<'_>) -> Result<Vec<CrashDecision>> {
            Ok(self
                .0
                .iter()
                .filter(|(r, _)| *r == view.round)
                .map(|(_, d)| d.clone())
                .collect())
        }
    }

    fn opts() -> SimOptions {
        SimOptions {
            round_cap: 100,
            trace: TraceLevel::Full,
            snapshot_every_phases: 0,
        }
    }

    #[test]
    fn self_messages_are_free() {
        let r = run_simulation(&mut Toy { p: 3 }, &mut Script(vec![]), &opts()).unwrap();
        assert_eq!(r.metrics.messages, 6);
        // halts at rounds 2, 3, 4
        assert_eq!(r.metrics.termination_round, 4);
        assert_eq!(r.metrics.work, 12);
        assert!(r.metrics.tasks_completed);
        assert_eq!(account(&r.trace).unwrap(), r.metrics);
    }

    #[test]
    fn partial_delivery_counts_delivered_only() {
        let d = CrashDecision {
            victim: 1,
            delivered: vec![3],
        };
        let r = run_simulation(&mut Toy { p: 3 }, &mut Script(vec![(1, d)]), &opts()).unwrap();
        assert_eq!(r.metrics.messages, 5);
        assert!(!r.metrics.tasks_completed);
        // crashed at 1; others run to round 4
        assert_eq!(r.metrics.work, 1 + 4 + 4);
        assert_eq!(account(&r.trace).unwrap(), r.metrics);
    }

    #[test]
    fn foreign_receiver_rejected() {
        let env = vec![Envelope {
            from: 2,
            to: 1,
            msg: (),
        }];
        let bad = CrashDecision {
            victim: 2,
            delivered: vec![3],
        };
        assert!(crash_apply(&bad, env.clone()).is_err());
        let none = CrashDecision {
            victim: 2,
            delivered: vec![],
        };
        assert!(crash_apply(&none, env.clone()).unwrap().is_empty());
        let all = CrashDecision {
            victim: 2,
            delivered: vec![1],
        };
        assert_eq!(crash_apply(&all, env).unwrap().len(), 1);
    }

    #[test]
    fn work_matches_definition() {
        // p = 2: processor 1 crashes at round 2; processor 2 halts at round 3.
        let d = CrashDecision {
            victim: 1,
            delivered: vec![],
        };
        let r = run_simulation(&mut Toy { p: 2 }, &mut Script(vec![(2, d)]), &opts()).unwrap();
        assert_eq!(r.metrics.termination_round, 3);
        assert_eq!(r.metrics.work, 2 + 3);
    }
}
