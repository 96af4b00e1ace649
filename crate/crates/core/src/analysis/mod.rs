//! Offline trace analysis: epochs, compact witnesses, progress accounting,
//! extended epochs and bound-scaling tables.
//!
//! Core sets of the proofs are not computable, so every quantity that
//! depends on them is computed over compact witnesses instead and should be
//! read as a proxy.

mod bounds;
mod extended;
mod witness;

pub use bounds::{bound, bound_report, measured, BoundRow, RunRow, GROWTH_TOLERANCE};
pub use extended::{partition_extended, ExtendedEpochReport};
pub use witness::{find_compact_witness, induced_diameter};

use crate::error::{Error, Result};
use crate::idset::IdSet;
use crate::overlay::OverlayGraph;
use crate::protocol::epoch_phases;
use crate::sim::{Event, ProcId, RunTrace};
use serde::Serialize;
use std::collections::BTreeMap;

/// Phase layout of a run, read from the trace header.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Schedule {
    pub phase_len: u64,
    /// Last round of the phased part (the first part of Effort-Priority).
    pub phased_rounds: Option<u64>,
    /// Crash bound the overlay was built for.
    pub f: u32,
}

impl Schedule {
    pub fn from_trace(trace: &RunTrace) -> Result<Self> {
        let (p, _, meta) = trace.header();
        let s = &meta["schedule"];
        let phase_len = s["phase_len"]
            .as_u64()
            .ok_or_else(|| Error::format(1, "header lacks schedule.phase_len"))?;
        Ok(Schedule {
            phase_len,
            phased_rounds: s["phased_rounds"].as_u64(),
            f: s["f"].as_u64().map_or(p.saturating_sub(1), |f| f as u32),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EpochReport {
    pub index: u64,
    pub first_round: u64,
    pub last_round: u64,
    /// Survivors at the start (`K_i`) and end (`G_i`).
    pub start_survivors: Vec<ProcId>,
    pub end_survivors: Vec<ProcId>,
    pub calm: bool,
    pub witness: Option<Vec<ProcId>>,
    /// The witness lies inside the previous epoch's witness.
    pub nested: bool,
    /// Size of the union / intersection of witness task lists at the end.
    pub u: Option<u64>,
    pub s: Option<u64>,
}

/// Fact recorded while checking; hard ones are invariant violations.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Finding {
    TooManyStormy {
        stormy: u64,
        bound: u64,
    },
    IntersectionAboveUnion {
        epoch: u64,
        round: u64,
    },
    UnionGrew {
        epoch: u64,
        round: u64,
        before: u64,
        after: u64,
    },
    IntersectionGrew {
        epoch: u64,
        round: u64,
        before: u64,
        after: u64,
    },
    /// `u_i > s_{i−1}` with nested witnesses.
    ProgressGap {
        epoch: u64,
        round: u64,
        u: u64,
        s_prev: u64,
    },
    /// A witness list at the end of the epoch holds a task some witness
    /// member had already dropped when the epoch began.
    FloodingGap {
        epoch: u64,
        round: u64,
        task: u32,
        holder: ProcId,
        dropped_by: ProcId,
    },
    TaskPoorSpansEpochs {
        extended: u64,
        first: u64,
        last: u64,
    },
    /// Soft: the witness is not inside the previous one, so the progress
    /// inequalities were not checked.
    NotNested {
        epoch: u64,
    },
    /// Soft: no compact witness exists for the epoch.
    NoWitness {
        epoch: u64,
    },
}

impl Finding {
    pub fn is_hard(&self) -> bool {
        !matches!(self, Finding::NotNested { .. } | Finding::NoWitness { .. })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Analysis {
    pub p: u32,
    /// Size of the task-list universe (tasks, or chunks for the chunked run).
    pub units: u32,
    pub schedule: Schedule,
    pub epochs: Vec<EpochReport>,
    pub extended: Vec<ExtendedEpochReport>,
    pub stormy: u64,
    pub findings: Vec<Finding>,
}

impl Analysis {
    pub fn hard_violations(&self) -> impl Iterator<Item = &Finding> {
        self.findings.iter().filter(|f| f.is_hard())
    }

    /// Share of task-rich extended epochs that were not productive.
    pub fn unproductive_fraction(&self) -> Option<f64> {
        let rich: Vec<_> = self.extended.iter().filter(|e| !e.task_poor).collect();
        (!rich.is_empty())
            .then(|| rich.iter().filter(|e| !e.productive).count() as f64 / rich.len() as f64)
    }

    /// One CSV row per epoch.
    pub fn write_epochs_csv(&self, out: impl std::io::Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "epoch",
            "first_round",
            "last_round",
            "k",
            "g",
            "calm",
            "witness",
            "nested",
            "u",
            "s",
        ])
        .map_err(csv_err)?;
        for e in &self.epochs {
            let opt = |x: Option<u64>| x.map_or(String::new(), |v| v.to_string());
            w.write_record([
                e.index.to_string(),
                e.first_round.to_string(),
                e.last_round.to_string(),
                e.start_survivors.len().to_string(),
                e.end_survivors.len().to_string(),
                e.calm.to_string(),
                e.witness
                    .as_ref()
                    .map_or(String::new(), |w| w.len().to_string()),
                e.nested.to_string(),
                opt(e.u),
                opt(e.s),
            ])
            .map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    /// One CSV row per extended epoch.
    pub fn write_extended_csv(&self, out: impl std::io::Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for e in &self.extended {
            w.serialize(e).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

/// Facts pulled out of a trace once.
struct Facts {
    p: u32,
    units: u32,
    crash: Vec<Option<u64>>,
    last_round: u64,
    /// Task lists by snapshot phase.
    lists: BTreeMap<u64, BTreeMap<ProcId, IdSet>>,
}

fn facts(trace: &RunTrace) -> Result<Facts> {
    let (p, _, _) = trace.header();
    let units = units_of(trace);
    let mut f = Facts {
        p,
        units,
        crash: vec![None; p as usize],
        last_round: 0,
        lists: BTreeMap::new(),
    };
    let mut saw_lists = false;
    for e in &trace.events {
        match e {
            Event::Crash { r, v, .. } => f.crash[*v as usize - 1] = Some(*r),
            Event::Snapshot {
                phase, v, tasks, ..
            } => {
                saw_lists = true;
                f.lists
                    .entry(*phase)
                    .or_default()
                    .insert(*v, IdSet::from_ranges(units, tasks));
            }
            Event::End { metrics } => f.last_round = metrics.termination_round,
            _ => {}
        }
    }
    if !saw_lists {
        return Err(Error::Parameter(
            "trace has no task-list snapshots; record it with snapshots enabled".into(),
        ));
    }
    Ok(f)
}

/// Universe of the snapshot lists: tasks, or chunk ids for a chunked run.
fn units_of(trace: &RunTrace) -> u32 {
    let (_, t, meta) = trace.header();
    match meta["effort"]["chunk_size"].as_u64() {
        Some(c) if c > 0 => t.div_ceil(c as u32),
        _ => t,
    }
}

fn survivors_at(crash: &[Option<u64>], round: u64) -> Vec<ProcId> {
    (1..=crash.len() as u32)
        .filter(|&v| crash[v as usize - 1].is_none_or(|c| c > round))
        .collect()
}

/// Splits the phased part of the run into epochs of `g(p)` phases and
/// classifies each as calm or stormy. Witness and progress fields are left
/// empty; see [`analyze`].
pub fn partition_epochs(trace: &RunTrace, schedule: &Schedule) -> Result<Vec<EpochReport>> {
    let (p, _, _) = trace.header();
    let mut crash = vec![None; p as usize];
    let mut last = 0;
    for e in &trace.events {
        match e {
            Event::Crash { r, v, .. } => crash[*v as usize - 1] = Some(*r),
            Event::End { metrics } => last = metrics.termination_round,
            _ => {}
        }
    }
    Ok(epochs_from(&crash, last, p, schedule))
}

fn epochs_from(
    crash: &[Option<u64>],
    last_round: u64,
    p: u32,
    schedule: &Schedule,
) -> Vec<EpochReport> {
    let span = epoch_phases(p) * schedule.phase_len;
    let end = schedule
        .phased_rounds
        .map_or(last_round, |e| e.min(last_round));
    (0..end.div_ceil(span))
        .map(|i| {
            let first = i * span + 1;
            let last = ((i + 1) * span).min(end);
            let k = survivors_at(crash, first - 1);
            let g = survivors_at(crash, last);
            EpochReport {
                index: i,
                first_round: first,
                last_round: last,
                calm: 2 * g.len() >= k.len(),
                start_survivors: k,
                end_survivors: g,
                witness: None,
                nested: false,
                u: None,
                s: None,
            }
        })
        .collect()
}

/// Full analysis of one trace over its overlay.
pub fn analyze(trace: &RunTrace, overlay: &OverlayGraph) -> Result<Analysis> {
    let schedule = Schedule::from_trace(trace)?;
    let fx = facts(trace)?;
    let p = fx.p;
    let g = epoch_phases(p);
    let mut epochs = epochs_from(&fx.crash, fx.last_round, p, &schedule);
    let mut findings = Vec::new();

    let stormy = epochs.iter().filter(|e| !e.calm).count() as u64;
    let bound = (p as f64).log2().ceil() as u64;
    if stormy > bound {
        findings.push(Finding::TooManyStormy { stormy, bound });
    }

    // lists at the end of each epoch: the cadence snapshot at its last
    // phase, or the closing snapshot of a trailing partial epoch
    let lists_at = |e: &EpochReport| fx.lists.get(&e.last_round.div_ceil(schedule.phase_len));

    let full = IdSet::full(fx.units);
    let (mut u_prev, mut s_prev) = (fx.units as u64, fx.units as u64);
    let mut prev_witness: Option<Vec<ProcId>> = Some((1..=p).collect());
    let mut prev_lists: Option<BTreeMap<ProcId, IdSet>> =
        Some((1..=p).map(|v| (v, full.clone())).collect());
    for e in epochs.iter_mut() {
        let nested_try = prev_witness.as_ref().and_then(|w| {
            let inside: Vec<ProcId> = w
                .iter()
                .copied()
                .filter(|v| e.end_survivors.contains(v))
                .collect();
            find_compact_witness(overlay, &inside, p, schedule.f)
        });
        e.nested = nested_try.is_some();
        e.witness =
            nested_try.or_else(|| find_compact_witness(overlay, &e.end_survivors, p, schedule.f));
        let Some(witness) = e.witness.clone() else {
            findings.push(Finding::NoWitness { epoch: e.index });
            prev_witness = None;
            prev_lists = None;
            continue;
        };
        let Some(lists) = lists_at(e) else {
            prev_witness = Some(witness);
            prev_lists = None;
            continue;
        };
        let mine: Vec<&IdSet> = witness.iter().filter_map(|v| lists.get(v)).collect();
        if mine.len() < witness.len() {
            prev_witness = Some(witness);
            prev_lists = None;
            continue;
        }
        let mut union = IdSet::empty(fx.units);
        let mut inter = full.clone();
        for l in &mine {
            union.union_with(l);
            inter.intersect_plain(l);
        }
        let (u, s) = (union.len() as u64, inter.len() as u64);
        e.u = Some(u);
        e.s = Some(s);
        let (epoch, round) = (e.index, e.last_round);
        if s > u {
            findings.push(Finding::IntersectionAboveUnion { epoch, round });
        }
        if e.nested {
            if u > u_prev {
                findings.push(Finding::UnionGrew {
                    epoch,
                    round,
                    before: u_prev,
                    after: u,
                });
            }
            if s > s_prev {
                findings.push(Finding::IntersectionGrew {
                    epoch,
                    round,
                    before: s_prev,
                    after: s,
                });
            }
            if u > s_prev {
                findings.push(Finding::ProgressGap {
                    epoch,
                    round,
                    u,
                    s_prev,
                });
            }
            if let Some(before) = &prev_lists {
                if let Some(gap) = flooding_gap(&witness, lists, before) {
                    let (task, holder, dropped_by) = gap;
                    findings.push(Finding::FloodingGap {
                        epoch,
                        round,
                        task,
                        holder,
                        dropped_by,
                    });
                }
            }
        } else {
            findings.push(Finding::NotNested { epoch });
        }
        u_prev = u;
        s_prev = s;
        prev_witness = Some(witness);
        prev_lists = Some(lists.clone());
    }

    let extended = partition_extended(&epochs, fx.units as u64, g);
    for x in &extended {
        if x.task_poor && x.last != x.first {
            findings.push(Finding::TaskPoorSpansEpochs {
                extended: x.index,
                first: x.first,
                last: x.last,
            });
        }
    }
    Ok(Analysis {
        p,
        units: fx.units,
        schedule,
        epochs,
        extended,
        stormy,
        findings,
    })
}

/// First task held at the end of an epoch by a witness member although
/// another witness member had dropped it before the epoch began.
fn flooding_gap(
    witness: &[ProcId],
    now: &BTreeMap<ProcId, IdSet>,
    before: &BTreeMap<ProcId, IdSet>,
) -> Option<(u32, ProcId, ProcId)> {
    for &v in witness {
        let held = now.get(&v)?;
        for &w in witness {
            let Some(old) = before.get(&w) else { continue };
            if let Some(x) = held.iter().find(|&x| !old.contains(x)) {
                return Some((x, v, w));
            }
        }
    }
    None
}

/// Tasks executed more than once within each of the first `epochs` epochs
/// of a full trace, as `(epoch, task, count)`.
pub fn repeated_executions(
    trace: &RunTrace,
    schedule: &Schedule,
    epochs: u64,
) -> Result<Vec<(u64, u32, u32)>> {
    let (p, _, _) = trace.header();
    if trace.level() != crate::sim::TraceLevel::Full {
        return Err(Error::Parameter(
            "execution records need a full trace".into(),
        ));
    }
    let span = epoch_phases(p) * schedule.phase_len;
    let mut counts: BTreeMap<(u64, u32), u32> = BTreeMap::new();
    for e in &trace.events {
        if let Event::Exec { r, task, .. } = e {
            let epoch = (r - 1) / span;
            if epoch < epochs {
                *counts.entry((epoch, *task)).or_default() += 1;
            }
        }
    }
    Ok(counts
        .into_iter()
        .filter(|&(_, c)| c > 1)
        .map(|((e, x), c)| (e, x, c))
        .collect())
}
