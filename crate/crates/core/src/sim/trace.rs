use super::metrics::RunMetrics;
use super::ProcId;
use crate::error::Result;
use crate::idset::IdSet;
use serde::{Deserialize, Serialize};
use std::io::{BufRead, Write};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceLevel {
    /// Every execution and every send with its receivers.
    Full,
    /// Per-round counts plus crashes, halts, tags and snapshots.
    #[default]
    Summary,
    /// Header and end record only.
    Off,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TagKind {
    /// Coordinator proposal broadcast; data is `[phase]` here and below.
    Proposal,
    /// Proposer that saw a smaller proposer.
    Abdication,
    /// Coordinator broadcasting its intersected list.
    Coordinate,
    /// Adoption of a coordinator's list; data is `[phase, coordinator]`.
    Adoption,
    /// Processors list after the preparatory round.
    Prepared,
    /// New identifier after renaming; data is `[new]`.
    Rename,
    /// Round in which this processor acted as a final-part coordinator.
    PartThree,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "ev", rename_all = "snake_case")]
pub enum Event {
    Header {
        p: u32,
        t: u32,
        level: TraceLevel,
        #[serde(default, skip_serializing_if = "serde_json::Value::is_null")]
        meta: serde_json::Value,
    },
    Exec {
        r: u64,
        v: ProcId,
        task: u32,
    },
    Execs {
        r: u64,
        n: u64,
    },
    Send {
        r: u64,
        v: ProcId,
        to: Vec<ProcId>,
    },
    Msgs {
        r: u64,
        n: u64,
        seg: String,
    },
    Crash {
        r: u64,
        v: ProcId,
        delivered: Vec<ProcId>,
    },
    Halt {
        r: u64,
        v: ProcId,
    },
    Snapshot {
        r: u64,
        phase: u64,
        v: ProcId,
        len: u32,
        tasks: Vec<(u32, u32)>,
    },
    Tag {
        r: u64,
        v: ProcId,
        kind: TagKind,
        data: Vec<u32>,
    },
    End {
        metrics: RunMetrics,
    },
}

/// Append-only event log of one run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunTrace {
    level: TraceLevel,
    pub events: Vec<Event>,
}

impl RunTrace {
    pub fn new(level: TraceLevel, p: u32, t: u32) -> Self {
        RunTrace {
            level,
            events: vec![Event::Header {
                p,
                t,
                level,
                meta: serde_json::Value::Null,
            }],
        }
    }

    pub fn level(&self) -> TraceLevel {
        self.level
    }

    /// Replaces the header's metadata (configuration echo, code version).
    pub fn set_meta(&mut self, value: serde_json::Value) {
        if let Some(Event::Header { meta, .. }) = self.events.first_mut() {
            *meta = value;
        }
    }

    pub fn header(&self) -> (u32, u32, &serde_json::Value) {
        match &self.events[0] {
            Event::Header { p, t, meta, .. } => (*p, *t, meta),
            _ => unreachable!("trace starts with a header"),
        }
    }

    pub fn end_metrics(&self) -> Option<&RunMetrics> {
        match self.events.last() {
            Some(Event::End { metrics }) => Some(metrics),
            _ => None,
        }
    }

    pub(super) fn exec(&mut self, r: u64, v: ProcId, task: u32) {
        if self.level == TraceLevel::Full {
            self.events.push(Event::Exec { r, v, task });
        }
    }

    pub(super) fn exec_count(&mut self, r: u64, n: u64) {
        if self.level == TraceLevel::Summary && n > 0 {
            self.events.push(Event::Execs { r, n });
        }
    }

    pub(super) fn send(&mut self, r: u64, v: ProcId, to: Vec<ProcId>, counted: u64) {
        if self.level == TraceLevel::Full && counted > 0 {
            self.events.push(Event::Send { r, v, to });
        }
    }

    pub(super) fn msgs(&mut self, r: u64, n: u64, seg: &str) {
        if self.level != TraceLevel::Off && n > 0 {
            self.events.push(Event::Msgs {
                r,
                n,
                seg: seg.to_string(),
            });
        }
    }

    pub(super) fn crash(&mut self, r: u64, v: ProcId, delivered: Vec<ProcId>) {
        if self.level != TraceLevel::Off {
            self.events.push(Event::Crash { r, v, delivered });
        }
    }

    pub(super) fn halt(&mut self, r: u64, v: ProcId) {
        if self.level != TraceLevel::Off {
            self.events.push(Event::Halt { r, v });
        }
    }

    pub(super) fn snapshot(&mut self, r: u64, phase: u64, v: ProcId, tasks: &IdSet) {
        if self.level != TraceLevel::Off {
            self.events.push(Event::Snapshot {
                r,
                phase,
                v,
                len: tasks.len() as u32,
                tasks: tasks.ranges(),
            });
        }
    }

    pub(super) fn tag(&mut self, r: u64, v: ProcId, kind: TagKind, data: Vec<u32>) {
        if self.level != TraceLevel::Off {
            self.events.push(Event::Tag { r, v, kind, data });
        }
    }

    pub(super) fn end(&mut self, metrics: &RunMetrics) {
        self.events.push(Event::End {
            metrics: metrics.clone(),
        });
    }

    pub fn write_ndjson(&self, mut out: impl Write) -> Result<()> {
        for e in &self.events {
            serde_json::to_writer(&mut out, e)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn to_ndjson(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.write_ndjson(&mut buf).expect("writing to memory");
        buf
    }

    pub fn read_ndjson(input: impl BufRead) -> Result<Self> {
        let mut events = Vec::new();
        for (i, line) in input.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let e: Event = serde_json::from_str(&line)
                .map_err(|e| crate::Error::format(i + 1, e.to_string()))?;
            events.push(e);
        }
        let level = match events.first() {
            Some(Event::Header { level, .. }) => *level,
            _ => {
                return Err(crate::Error::format(
                    1,
                    "trace must start with a header event",
                ))
            }
        };
        Ok(RunTrace { level, events })
    }
}
