//! Run configuration, read from and echoed as JSON.

use crate::adversary::AdversarySpec;
use crate::effort::{a_bound, DEFAULT_A, DEFAULT_CT};
use crate::error::{Error, Result};
use crate::overlay::{GraphMode, DEFAULT_DELTA0};
use crate::protocol::WireMode;
use crate::sim::TraceLevel;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::path::{Path, PathBuf};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    BalanceLoad,
    RandomizedPermutations,
    DeterministicPermutations,
    EffortPriority,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [
        Algorithm::BalanceLoad,
        Algorithm::RandomizedPermutations,
        Algorithm::DeterministicPermutations,
        Algorithm::EffortPriority,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::BalanceLoad => "balance_load",
            Algorithm::RandomizedPermutations => "randomized_permutations",
            Algorithm::DeterministicPermutations => "deterministic_permutations",
            Algorithm::EffortPriority => "effort_priority",
        }
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown algorithm `{s}`")))
    }
}

/// Crash bound: a number or `"unbounded"` (`p − 1`).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum FaultBound {
    #[default]
    Unbounded,
    Count(u32),
}

impl FaultBound {
    pub fn resolve(self, p: u32) -> u32 {
        match self {
            FaultBound::Unbounded => p.saturating_sub(1),
            FaultBound::Count(f) => f,
        }
    }
}

impl Serialize for FaultBound {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            FaultBound::Unbounded => s.serialize_str("unbounded"),
            FaultBound::Count(f) => s.serialize_u32(*f),
        }
    }
}

impl<'de> Deserialize<'de> for FaultBound {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Count(u32),
            Word(String),
        }
        match Raw::deserialize(d)? {
            Raw::Count(f) => Ok(FaultBound::Count(f)),
            Raw::Word(w) if w == "unbounded" => Ok(FaultBound::Unbounded),
            Raw::Word(w) => Err(serde::de::Error::custom(format!(
                "f must be a number or \"unbounded\", got `{w}`"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EffortConfig {
    #[serde(default = "default_a")]
    pub a: f64,
    #[serde(default = "default_ct")]
    pub ct: f64,
}

impl Default for EffortConfig {
    fn default() -> Self {
        EffortConfig {
            a: DEFAULT_A,
            ct: DEFAULT_CT,
        }
    }
}

fn default_a() -> f64 {
    DEFAULT_A
}

fn default_ct() -> f64 {
    DEFAULT_CT
}

fn default_delta0() -> u32 {
    DEFAULT_DELTA0
}

fn default_mode() -> GraphMode {
    GraphMode::Lps
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub p: u32,
    pub t: u32,
    pub algorithm: Algorithm,
    #[serde(default)]
    pub f: FaultBound,
    #[serde(default = "default_delta0")]
    pub delta0: u32,
    #[serde(default = "default_mode")]
    pub graph_mode: GraphMode,
    /// Seed of the random regular base graph.
    #[serde(default)]
    pub graph_seed: u64,
    #[serde(default)]
    pub adversary: AdversarySpec,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub effort: Option<EffortConfig>,
    /// Permutation table file for the deterministic rule.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub permutations: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub round_cap: Option<u64>,
    #[serde(default)]
    pub trace: TraceLevel,
    /// Phases between task-list snapshots; defaults to one epoch, 0 turns
    /// snapshots off.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snapshot_every: Option<u64>,
    #[serde(default)]
    pub wire: WireMode,
}

/// One problem found by [`RunConfig::validate`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Issue {
    pub field: &'static str,
    pub message: String,
}

impl RunConfig {
    pub fn new(p: u32, t: u32, algorithm: Algorithm) -> Self {
        RunConfig {
            p,
            t,
            algorithm,
            f: FaultBound::default(),
            delta0: DEFAULT_DELTA0,
            graph_mode: GraphMode::Lps,
            graph_seed: 0,
            adversary: AdversarySpec::None,
            seed: 0,
            output_dir: None,
            effort: None,
            permutations: None,
            round_cap: None,
            trace: TraceLevel::default(),
            snapshot_every: None,
            wire: WireMode::default(),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn f(&self) -> u32 {
        self.f.resolve(self.p)
    }

    pub fn effort_or_default(&self) -> EffortConfig {
        self.effort.clone().unwrap_or_default()
    }

    /// All problems with this configuration; empty when it can run.
    pub fn validate(&self) -> Vec<Issue> {
        let mut out = Vec::new();
        let mut issue = |field, message: String| out.push(Issue { field, message });
        if self.p == 0 {
            issue("p", "p must be at least 1".into());
        }
        if self.t == 0 {
            issue("t", "t must be at least 1".into());
        }
        if let FaultBound::Count(f) = self.f {
            if f >= self.p {
                issue("f", format!("f = {f} must be below p = {}", self.p));
            }
        }
        if self.delta0 < 3 {
            issue("delta0", "delta0 must be at least 3".into());
        }
        if self.graph_mode == GraphMode::Lps {
            let q = self.delta0.saturating_sub(1);
            if !crate::overlay::is_prime(q as u64) || q % 4 != 1 {
                issue(
                    "delta0",
                    format!("lps mode needs delta0 - 1 prime and 1 mod 4, got {q}"),
                );
            }
        }
        if let Some(e) = &self.effort {
            if self.algorithm != Algorithm::EffortPriority {
                issue(
                    "effort",
                    "effort parameters apply only to effort_priority".into(),
                );
            }
            if !(e.a > 0.0 && e.a < a_bound(self.delta0)) {
                issue(
                    "effort.a",
                    format!("a must lie in (0, {:.4})", a_bound(self.delta0)),
                );
            }
            if !(e.ct > 0.0) {
                issue("effort.ct", "ct must be positive".into());
            }
        }
        if self.permutations.is_some() && self.algorithm != Algorithm::DeterministicPermutations {
            issue(
                "permutations",
                "a permutation table applies only to deterministic_permutations".into(),
            );
        }
        if self.round_cap == Some(0) {
            issue("round_cap", "round_cap must be positive".into());
        }
        match &self.adversary {
            AdversarySpec::Random { deliver, .. }
            | AdversarySpec::CrashCoordinators { deliver }
                if !(0.0..=1.0).contains(deliver) =>
            {
                issue(
                    "adversary.deliver",
                    "delivery probability must lie in [0, 1]".into(),
                );
            }
            AdversarySpec::AllButOne { .. } if self.p > 1 && self.f() < self.p - 1 => {
                issue("adversary", "all_but_one needs f = p - 1".into());
            }
            AdversarySpec::Fchain { sizes } if self.p > 0 && self.f() < self.p => {
                if let Err(e) = crate::adversary::FChainSpec::new(self.p, self.f(), sizes.clone()) {
                    issue("adversary.sizes", e.to_string());
                }
            }
            _ => {}
        }
        out
    }

    pub fn validated(&self) -> Result<()> {
        let issues = self.validate();
        if issues.is_empty() {
            Ok(())
        } else {
            let text = issues
                .iter()
                .map(|i| format!("{}: {}", i.field, i.message))
                .collect::<Vec<_>>()
                .join("; ");
            Err(Error::Config(text))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_json() {
        let c = RunConfig::from_json(r#"{"p": 4, "t": 8, "algorithm": "balance_load", "f": 0}"#)
            .unwrap();
        assert_eq!(c.f(), 0);
        assert_eq!(c.delta0, 74);
        assert!(c.validate().is_empty());
    }

    #[test]
    fn unbounded_and_errors() {
        let c = RunConfig::from_json(
            r#"{"p": 4, "t": 8, "algorithm": "effort_priority", "f": "unbounded"}"#,
        )
        .unwrap();
        assert_eq!(c.f(), 3);
        let bad = RunConfig::from_json(r#"{"p": 4, "t": 8, "algorithm": "balance_load", "f": 4}"#)
            .unwrap();
        assert_eq!(bad.validate()[0].field, "f");
        assert!(RunConfig::from_json(r#"{"p": 4, "t": 8, "algorithm": "nope"}"#).is_err());
        assert!(RunConfig::from_json(
            r#"{"p": 4, "t": 8, "algorithm": "balance_load", "extra": 1}"#
        )
        .is_err());
    }

    #[test]
    fn round_trip() {
        let mut c = RunConfig::new(8, 16, Algorithm::EffortPriority);
        c.effort = Some(EffortConfig::default());
        c.adversary = AdversarySpec::Random {
            horizon: None,
            deliver: 0.5,
        };
        let back = RunConfig::from_json(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
    }
}
