//! Effort-Priority: a chunked deterministic-permutations run for a fixed
//! round budget, then checkpointing, then coordinator-based completion
//! among the agreed survivors.

pub mod checkpoint;
pub mod part_three;

use crate::error::{Error, Result};
use crate::idset::IdSet;
use crate::overlay::{build_overlay_with, GraphMode, OverlayGraph, OverlayOptions, RHO};
use crate::protocol::{GenericMsg, GenericParams, GenericProtocol, RuleSpec, WireMode};
use crate::rules::PermutationTable;
use crate::sim::{Envelope, ProcId, Protocol, ProtocolView, StepCtx, TagKind};
use checkpoint::{stage_at, CheckpointNode, CpMsg, Stage, StepNote};
use part_three::{ThreeMsg, Worker};
use serde::{Deserialize, Serialize};
use std::cell::RefCell;
use std::sync::Arc;

pub const DEFAULT_A: f64 = 0.23;

/// Default for the round-budget constant: the output of
/// [`crate::runner::calibrate_ct`] over [`crate::runner::calibration_grid`]
/// with 50 seeds (1.3393), rounded up.
pub const DEFAULT_CT: f64 = 1.34;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EffortParams {
    pub a: f64,
    pub f1: u32,
    /// Maximum degree of the overlay built for `f1` crashes.
    pub delta1: u32,
    pub chunk_size: u32,
    /// Rounds given to the first part.
    pub t1: u64,
    pub ct: f64,
}

/// Largest admissible `a` for base degree `delta0`: `1/(1 + 2 log_ρ Δ₀)`.
pub fn a_bound(delta0: u32) -> f64 {
    1.0 / (1.0 + 2.0 * (delta0 as f64).ln() / RHO.ln())
}

/// `p − ⌈p^{1−a}⌉`.
pub fn f1_for(p: u32, a: f64) -> u32 {
    let keep = (p as f64).powf(1.0 - a).ceil() as u32;
    p - keep.clamp(1, p)
}

/// `⌈ct · ((t + p)/(p − f1) + Δ₁ lg² p)⌉`.
pub fn t1_for(p: u32, t: u32, f1: u32, delta1: u32, ct: f64) -> u64 {
    let lg = (p as f64).log2();
    let base = (t as f64 + p as f64) / (p - f1) as f64 + delta1 as f64 * lg * lg;
    (ct * base).ceil() as u64
}

/// Checks `a` and builds the overlay for `f1` crashes; `Δ₁` is its measured
/// maximum degree.
pub fn derive_params(
    p: u32,
    t: u32,
    a: f64,
    ct: f64,
    delta0: u32,
    mode: GraphMode,
    seed: u64,
) -> Result<(EffortParams, OverlayGraph)> {
    check_a(a, ct, delta0)?;
    let f1 = f1_for(p, a);
    let overlay = build_overlay_with(
        p,
        f1,
        delta0,
        mode,
        &OverlayOptions {
            seed,
            spectral: false,
        },
    )?;
    let params = params_with_overlay(p, t, a, ct, &overlay);
    Ok((params, overlay))
}

pub fn check_a(a: f64, ct: f64, delta0: u32) -> Result<()> {
    if !(a > 0.0 && a < 1.0) || a >= a_bound(delta0) {
        return Err(Error::Parameter(format!(
            "a = {a} must lie in (0, {:.4}) for delta0 = {delta0}",
            a_bound(delta0)
        )));
    }
    if !(ct > 0.0) {
        return Err(Error::Parameter(format!("ct = {ct} must be positive")));
    }
    Ok(())
}

/// Parameters for an already built overlay `G(p, f1)`.
pub fn params_with_overlay(
    p: u32,
    t: u32,
    a: f64,
    ct: f64,
    overlay: &OverlayGraph,
) -> EffortParams {
    let f1 = f1_for(p, a);
    let delta1 = overlay.max_degree() as u32;
    EffortParams {
        a,
        f1,
        delta1,
        chunk_size: delta1.max(1),
        t1: t1_for(p, t, f1, delta1, ct),
        ct,
    }
}

#[derive(Clone, Debug)]
pub enum EpMsg {
    Generic(GenericMsg),
    Checkpoint(CpMsg),
    Three(ThreeMsg),
}

pub struct EpProtocol {
    pub params: EffortParams,
    p: u32,
    t: u32,
    part_one: GenericProtocol,
    nodes: Vec<Option<CheckpointNode>>,
    workers: Vec<Option<Worker>>,
    acting: RefCell<(u64, Vec<ProcId>)>,
}

impl EpProtocol {
    pub fn new(
        p: u32,
        t: u32,
        params: EffortParams,
        overlay: Arc<OverlayGraph>,
        table: &PermutationTable,
        wire: WireMode,
    ) -> Self {
        let generic = GenericParams {
            p,
            t,
            chunk: params.chunk_size,
            f: params.f1,
            wire,
        };
        EpProtocol {
            part_one: GenericProtocol::new(generic, overlay, RuleSpec::Permutations(table)),
            params,
            p,
            t,
            nodes: vec![None; p as usize],
            workers: vec![None; p as usize],
            acting: RefCell::new((0, Vec::new())),
        }
    }

    pub fn part_one(&self) -> &GenericProtocol {
        &self.part_one
    }

    /// Number of checkpointing phases, `p − f1`.
    pub fn checkpoint_phases(&self) -> u64 {
        (self.p - self.params.f1) as u64
    }

    pub fn part_two_start(&self) -> u64 {
        self.params.t1 + 1
    }

    pub fn part_three_start(&self) -> u64 {
        self.part_two_start() + 1 + 4 * self.checkpoint_phases()
    }

    fn act(&self, round: u64, id: ProcId) {
        let mut a = self.acting.borrow_mut();
        if a.0 != round {
            *a = (round, Vec::new());
        }
        a.1.push(id);
    }

    fn step_two(
        &mut self,
        id: ProcId,
        round: u64,
        inbox: Vec<(ProcId, CpMsg)>,
        ctx: &mut StepCtx<EpMsg>,
    ) {
        let (stage, phase) = stage_at(round - self.part_two_start());
        let i = id as usize - 1;
        if stage == Stage::Prep {
            let processors = self.part_one.state(id).processors.clone();
            self.nodes[i] = Some(CheckpointNode::new(id, processors));
        }
        let node = self.nodes[i].as_mut().expect("prepared");
        let mut note = StepNote::default();
        let sends = node.step(stage, &inbox, &mut note);
        if let Stage::R1 { first: true } = stage {
            ctx.tag(TagKind::Prepared, node.processors.iter().collect());
        }
        let phase = phase as u32;
        if note.proposed {
            ctx.tag(TagKind::Proposal, vec![phase]);
            self.act(round, id);
        }
        if note.abdicated {
            ctx.tag(TagKind::Abdication, vec![phase]);
        }
        if note.coordinated {
            ctx.tag(TagKind::Coordinate, vec![phase]);
        }
        if let Some(w) = note.adopted {
            ctx.tag(TagKind::Adoption, vec![phase, w]);
        }
        for (to, m) in sends {
            ctx.send(to, EpMsg::Checkpoint(m));
        }
    }

    fn step_three(
        &mut self,
        id: ProcId,
        round: u64,
        inbox: Vec<(ProcId, ThreeMsg)>,
        ctx: &mut StepCtx<EpMsg>,
    ) {
        let i = id as usize - 1;
        if self.workers[i].is_none() {
            let members = match &self.nodes[i] {
                Some(n) => n.processors.clone(),
                None => IdSet::from_ids(self.p, [id]),
            };
            let w = Worker::new(id, self.t, &members, round);
            ctx.tag(TagKind::Rename, vec![w.rank()]);
            self.workers[i] = Some(w);
        }
        let out = self.workers[i].as_mut().expect("worker").step(round, inbox);
        if out.coordinated {
            self.act(round, id);
            ctx.tag(TagKind::PartThree, vec![]);
        }
        if let Some(x) = out.execute {
            ctx.execute(x);
        }
        for (to, m) in out.sends {
            ctx.send(to, EpMsg::Three(m));
        }
        if out.halt {
            ctx.halt();
        }
    }
}

impl ProtocolView for EpProtocol {
    fn coordinators(&self, round: u64) -> Vec<ProcId> {
        let a = self.acting.borrow();
        if a.0 == round {
            a.1.clone()
        } else {
            Vec::new()
        }
    }

    fn epoch_rounds(&self) -> Option<u64> {
        self.part_one.epoch_rounds()
    }

    fn nominal_rounds(&self) -> u64 {
        let survivors = (self.p - self.params.f1) as u64;
        self.part_three_start() + (self.t as u64).div_ceil(survivors) + 2
    }
}

impl Protocol for EpProtocol {
    type Msg = EpMsg;

    fn processors(&self) -> u32 {
        self.p
    }

    fn tasks(&self) -> u32 {
        self.t
    }

    fn step(&mut self, id: ProcId, inbox: Vec<Envelope<EpMsg>>, ctx: &mut StepCtx<EpMsg>) {
        let round = ctx.round();
        if round <= self.params.t1 {
            let inbox = inbox
                .into_iter()
                .filter_map(|e| match e.msg {
                    EpMsg::Generic(m) => Some((e.from, m)),
                    _ => None,
                })
                .collect();
            self.part_one.step_with(id, inbox, ctx, EpMsg::Generic);
        } else if round < self.part_three_start() {
            let inbox = inbox
                .into_iter()
                .filter_map(|e| match e.msg {
                    EpMsg::Checkpoint(m) => Some((e.from, m)),
                    _ => None,
                })
                .collect();
            self.step_two(id, round, inbox, ctx);
        } else {
            let inbox = inbox
                .into_iter()
                .filter_map(|e| match e.msg {
                    EpMsg::Three(m) => Some((e.from, m)),
                    _ => None,
                })
                .collect();
            self.step_three(id, round, inbox, ctx);
        }
    }

    fn phase_len(&self) -> u64 {
        self.part_one.phase_len()
    }

    fn phase_index_at_end(&self, round: u64) -> Option<u64> {
        if round > self.params.t1 {
            return None;
        }
        let l = self.phase_len();
        (round % l == 0).then_some(round / l)
    }

    fn phased_rounds(&self) -> Option<u64> {
        Some(self.params.t1)
    }

    fn task_snapshot(&self, id: ProcId) -> Option<IdSet> {
        self.part_one.task_snapshot(id)
    }

    fn segment(&self, round: u64) -> &'static str {
        if round <= self.params.t1 {
            "part_one"
        } else if round < self.part_three_start() {
            "part_two"
        } else {
            "part_three"
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn admissible_a() {
        let b = a_bound(74);
        assert!((b - 0.2322).abs() < 5e-4, "{b}");
        assert!(DEFAULT_A < b);
        assert!(matches!(
            derive_params(8, 8, 0.5, 1.0, 74, GraphMode::Lps, 0),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn f1_examples() {
        assert_eq!(f1_for(4096, 0.23), 3491);
        assert_eq!(f1_for(1, 0.23), 0);
        assert_eq!(f1_for(8, 0.23), 3);
    }

    #[test]
    fn chunk_partition() {
        // t = 10 with chunks of 4: three chunk ids, the last one short
        let units = 10u32.div_ceil(4);
        assert_eq!(units, 3);
        let last: Vec<u32> = ((units - 1) * 4 + 1..=(units * 4).min(10)).collect();
        assert_eq!(last, vec![9, 10]);
    }
}
