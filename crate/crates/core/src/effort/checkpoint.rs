//! Checkpointing: the preparatory round and the four-round phases that
//! agree on a common survivor list.

use crate::idset::IdSet;
use crate::sim::ProcId;
use std::collections::BTreeSet;
use std::sync::Arc;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum CpMsg {
    Prep,
    Propose,
    Response(Arc<IdSet>),
    Coord(Arc<IdSet>),
}

/// Round of a checkpointing phase.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Stage {
    Prep,
    R1 { first: bool },
    R2,
    R3,
    R4,
}

/// Stage of the `i`-th round (0-based) of Part-Two.
pub fn stage_at(i: u64) -> (Stage, u64) {
    if i == 0 {
        return (Stage::Prep, 0);
    }
    let phase = (i - 1) / 4;
    let stage = match (i - 1) % 4 {
        0 => Stage::R1 { first: phase == 0 },
        1 => Stage::R2,
        2 => Stage::R3,
        _ => Stage::R4,
    };
    (stage, phase)
}

/// What a node did in one round, for invariant checks and trace tags.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct StepNote {
    pub proposed: bool,
    pub abdicated: bool,
    pub coordinated: bool,
    /// Coordinator whose list was adopted.
    pub adopted: Option<ProcId>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CheckpointNode {
    pub id: ProcId,
    pub processors: IdSet,
    /// Sorted ascending.
    pub coordinators: BTreeSet<ProcId>,
    proposing: bool,
    coordinating: bool,
}

impl CheckpointNode {
    pub fn new(id: ProcId, processors: IdSet) -> Self {
        CheckpointNode {
            id,
            coordinators: processors.iter().collect(),
            processors,
            proposing: false,
            coordinating: false,
        }
    }

    pub fn is_coordinator_candidate(&self) -> bool {
        self.coordinators.first() == Some(&self.id)
    }

    /// Keeps only the processors whose preparatory message arrived.
    pub fn on_prep(&mut self, senders: &[ProcId]) {
        let heard = IdSet::from_ids(self.processors.universe(), senders.iter().copied());
        self.processors.intersect_plain(&heard);
        self.coordinators = self.processors.iter().collect();
    }

    /// Round 1: whether to propose to every member of `processors`.
    pub fn round1(&mut self) -> bool {
        self.proposing = self.is_coordinator_candidate();
        self.coordinating = self.proposing;
        self.proposing
    }

    /// Round 2: the smallest proposer heard, to be answered with
    /// `processors`; `None` when no proposal arrived.
    pub fn round2(&mut self, proposers: &[ProcId], note: &mut StepNote) -> Option<ProcId> {
        let v1 = proposers.iter().copied().min()?;
        self.coordinators.extend(proposers.iter().copied());
        if self.coordinating && self.coordinators.first() != Some(&self.id) {
            self.coordinating = false;
            note.abdicated = true;
        }
        Some(v1)
    }

    /// Round 3: a successful coordinator drops every id missing from some
    /// response and returns the list to broadcast.
    pub fn round3(&mut self, responses: &[&IdSet], note: &mut StepNote) -> Option<Arc<IdSet>> {
        if !self.coordinating {
            return None;
        }
        for r in responses {
            self.processors.intersect_plain(r);
        }
        note.coordinated = true;
        Some(Arc::new(self.processors.clone()))
    }

    /// Round 4. With several coordinator lists the smallest sender wins.
    pub fn round4(&mut self, lists: &[(ProcId, &IdSet)], note: &mut StepNote) {
        let coord = lists.iter().min_by_key(|(w, _)| *w);
        if let Some((w, list)) = coord {
            self.processors = (*list).clone();
            note.adopted = Some(*w);
        }
        self.coordinators.pop_first();
        if let Some((w, _)) = coord {
            let bound = self.id.min(*w);
            self.coordinators.retain(|&x| x >= bound);
        }
        self.proposing = false;
        self.coordinating = false;
    }

    /// One round of Part-Two: consume `inbox`, return the envelopes to send.
    pub fn step(
        &mut self,
        stage: Stage,
        inbox: &[(ProcId, CpMsg)],
        note: &mut StepNote,
    ) -> Vec<(ProcId, CpMsg)> {
        match stage {
            Stage::Prep => self.processors.iter().map(|x| (x, CpMsg::Prep)).collect(),
            Stage::R1 { first } => {
                if first {
                    let senders: Vec<ProcId> = inbox
                        .iter()
                        .filter(|(_, m)| *m == CpMsg::Prep)
                        .map(|(f, _)| *f)
                        .collect();
                    self.on_prep(&senders);
                }
                if self.round1() {
                    note.proposed = true;
                    self.processors
                        .iter()
                        .map(|x| (x, CpMsg::Propose))
                        .collect()
                } else {
                    Vec::new()
                }
            }
            Stage::R2 => {
                let proposers: Vec<ProcId> = inbox
                    .iter()
                    .filter(|(_, m)| *m == CpMsg::Propose)
                    .map(|(f, _)| *f)
                    .collect();
                match self.round2(&proposers, note) {
                    Some(v1) => vec![(v1, CpMsg::Response(Arc::new(self.processors.clone())))],
                    None => Vec::new(),
                }
            }
            Stage::R3 => {
                let responses: Vec<&IdSet> = inbox
                    .iter()
                    .filter_map(|(_, m)| match m {
                        CpMsg::Response(l) => Some(l.as_ref()),
                        _ => None,
                    })
                    .collect();
                match self.round3(&responses, note) {
                    Some(list) => self
                        .processors
                        .iter()
                        .map(|x| (x, CpMsg::Coord(Arc::clone(&list))))
                        .collect(),
                    None => Vec::new(),
                }
            }
            Stage::R4 => {
                let lists: Vec<(ProcId, &IdSet)> = inbox
                    .iter()
                    .filter_map(|(f, m)| match m {
                        CpMsg::Coord(l) => Some((*f, l.as_ref())),
                        _ => None,
                    })
                    .collect();
                self.round4(&lists, note);
                Vec::new()
            }
        }
    }

    /// Round 4 of a crashed node under the convention that lists of crashed
    /// processors keep being updated; no messages reach it.
    pub fn ghost_round4(&mut self) {
        self.coordinators.pop_first();
    }
}

pub mod model;
