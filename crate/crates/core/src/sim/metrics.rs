use super::trace::{Event, RunTrace, TraceLevel};
use crate::error::{Error, Result};
use crate::idset::IdSet;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunMetrics {
    /// Available processor steps: each processor accrues rounds until it
    /// crashes or the run terminates.
    pub work: u64,
    /// Point-to-point envelopes delivered to another processor.
    pub messages: u64,
    pub effort: u64,
    pub termination_round: u64,
    /// `false` when the round cap stopped the run.
    pub terminated: bool,
    pub tasks_completed: bool,
    pub crashes: u32,
    pub first_halt_round: Option<u64>,
    pub all_tasks_done_at_first_halt: Option<bool>,
    pub segment_messages: BTreeMap<String, u64>,
}

/// Recomputes metrics from a trace.
///
/// Work, messages, termination, crashes and halting data come from the
/// event log. Task completion is recomputed from execution events in full
/// traces; summary traces carry it over from the end record.
pub fn account(trace: &RunTrace) -> Result<RunMetrics> {
    let (p, t, _) = trace.header();
    if trace.level() == TraceLevel::Off {
        return Err(Error::Parameter(
            "metrics cannot be recomputed from a trace recorded with level off".into(),
        ));
    }
    let end = trace.end_metrics();
    let mut crash_round: Vec<Option<u64>> = vec![None; p as usize];
    let mut messages = 0u64;
    let mut segments: BTreeMap<String, u64> = BTreeMap::new();
    let mut executed = IdSet::empty(t);
    let mut last_round = 0u64;
    let mut first_halt: Option<(u64, bool)> = None;
    let mut finished = vec![false; p as usize];
    for e in &trace.events {
        match e {
            Event::Exec { r, task, .. } => {
                executed.insert(*task);
                last_round = last_round.max(*r);
            }
            Event::Execs { r, .. }
            | Event::Send { r, .. }
            | Event::Snapshot { r, .. }
            | Event::Tag { r, .. } => last_round = last_round.max(*r),
            Event::Msgs { r, n, seg } => {
                messages += n;
                *segments.entry(seg.clone()).or_default() += n;
                last_round = last_round.max(*r);
            }
            Event::Crash { r, v, .. } => {
                crash_round[*v as usize - 1] = Some(*r);
                finished[*v as usize - 1] = true;
                last_round = last_round.max(*r);
            }
            Event::Halt { r, v } => {
                finished[*v as usize - 1] = true;
                if first_halt.is_none() {
                    first_halt = Some((*r, executed.len() == t as usize));
                }
                last_round = last_round.max(*r);
            }
            Event::Header { .. } | Event::End { .. } => {}
        }
    }
    let Some(end) = end else {
        // An unterminated log: count up to the last round seen.
        let work = crash_round
            .iter()
            .map(|c| c.map_or(last_round, |c| c.min(last_round)))
            .sum();
        return Ok(RunMetrics {
            work,
            messages,
            effort: work + messages,
            termination_round: last_round,
            terminated: false,
            tasks_completed: trace.level() == TraceLevel::Full && executed.len() == t as usize,
            crashes: crash_round.iter().filter(|c| c.is_some()).count() as u32,
            first_halt_round: first_halt.map(|f| f.0),
            all_tasks_done_at_first_halt: first_halt
                .map(|f| f.1)
                .filter(|_| trace.level() == TraceLevel::Full),
            segment_messages: segments,
        });
    };
    let terminated = finished.iter().all(|&f| f);
    let termination_round = if terminated {
        last_round
    } else {
        end.termination_round
    };
    let work = crash_round
        .iter()
        .map(|c| c.map_or(termination_round, |c| c.min(termination_round)))
        .sum();
    let full = trace.level() == TraceLevel::Full;
    Ok(RunMetrics {
        work,
        messages,
        effort: work + messages,
        termination_round,
        terminated,
        tasks_completed: if full {
            executed.len() == t as usize
        } else {
            end.tasks_completed
        },
        crashes: crash_round.iter().filter(|c| c.is_some()).count() as u32,
        first_halt_round: first_halt.map(|f| f.0),
        all_tasks_done_at_first_halt: if full {
            first_halt.map(|f| f.1)
        } else {
            end.all_tasks_done_at_first_halt
        },
        segment_messages: segments,
    })
}
