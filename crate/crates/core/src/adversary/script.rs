use crate::error::{Error, Result};
use crate::sim::{Adversary, CrashDecision, ProcId, RoundView};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptEntry {
    pub round: u64,
    pub victim: ProcId,
    #[serde(default)]
    pub delivered: Vec<ProcId>,
}

/// Reads a JSON array of `{round, victim, delivered}` records.
pub fn load_script(path: &Path) -> Result<Vec<ScriptEntry>> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::format(e.line(), e.to_string()))
}

/// Replays a fixed schedule. Entries naming a processor that has already
/// halted or crashed are skipped, and a delivered set is cut down to the
/// receivers the victim actually addresses that round, since a script is
/// written without knowing the traffic.
pub struct Scripted {
    entries: Vec<ScriptEntry>,
}

impl Scripted {
    pub fn new(mut entries: Vec<ScriptEntry>) -> Self {
        entries.sort_by_key(|e| (e.round, e.victim));
        Scripted { entries }
    }
}

impl Adversary for Scripted {
    fn decide(&mut self, view: &RoundView<'_>) -> Result<Vec<CrashDecision>> {
        Ok(self
            .entries
            .iter()
            .filter(|e| e.round == view.round)
            .filter(|e| {
                e.victim >= 1
                    && e.victim <= view.p
                    && view.status[e.victim as usize - 1].is_active()
            })
            .map(|e| CrashDecision {
                victim: e.victim,
                delivered: e
                    .delivered
                    .iter()
                    .copied()
                    .filter(|r| view.outboxes[e.victim as usize - 1].contains(r))
                    .collect(),
            })
            .collect())
    }
}
