//! Crash adversaries.

mod fchain;
mod script;

pub use fchain::{FChain, FChainSpec};
pub use script::{load_script, ScriptEntry, Scripted};

use crate::error::{Error, Result};
use crate::rng::{tags, SimRng};
use crate::sim::{Adversary, CrashDecision, ProcId, RoundView};
use serde::{Deserialize, Serialize};

/// Adversary selection as written in run configurations.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AdversarySpec {
    #[default]
    None,
    /// Up to `f` crashes at uniformly random rounds in `1..=horizon`.
    Random {
        #[serde(default)]
        horizon: Option<u64>,
        /// Probability that each envelope of a crashing processor arrives.
        #[serde(default = "half")]
        deliver: f64,
    },
    Scripted {
        #[serde(default)]
        path: Option<String>,
        #[serde(default)]
        entries: Vec<ScriptEntry>,
    },
    /// Everyone but one processor crashes in round 1.
    AllButOne {
        #[serde(default)]
        survivor: Option<ProcId>,
    },
    Fchain {
        sizes: Vec<u32>,
    },
    /// Crashes the smallest acting coordinator whenever there is one.
    CrashCoordinators {
        #[serde(default = "half")]
        deliver: f64,
    },
}

fn half() -> f64 {
    0.5
}

/// Enforces the crash budget `f` and that victims are distinct and active.
pub struct Budgeted {
    inner: Box<dyn Adversary + Send>,
    f: u32,
}

impl Budgeted {
    pub fn new(inner: Box<dyn Adversary + Send>, f: u32) -> Self {
        Budgeted { inner, f }
    }
}

impl Adversary for Budgeted {
    fn decide(&mut self, view: &RoundView<'_>) -> Result<Vec<CrashDecision>> {
        if view.f_exhausted(self.f) {
            return Ok(Vec::new());
        }
        let mut out = self.inner.decide(view)?;
        out.sort_by_key(|d| d.victim);
        if out.windows(2).any(|w| w[0].victim == w[1].victim) {
            return Err(Error::Schedule(format!(
                "duplicate victim in round {}",
                view.round
            )));
        }
        if let Some(d) = out.iter().find(|d| {
            d.victim == 0 || d.victim > view.p || !view.status[d.victim as usize - 1].is_active()
        }) {
            return Err(Error::Schedule(format!(
                "processor {} is not active in round {}",
                d.victim, view.round
            )));
        }
        if view.crashed_count() + out.len() > self.f as usize {
            return Err(Error::Schedule(format!(
                "round {}: {} more crashes exceed the budget f = {}",
                view.round,
                out.len(),
                self.f
            )));
        }
        Ok(out)
    }
}

impl RoundView<'_> {
    fn f_exhausted(&self, f: u32) -> bool {
        self.crashed_count() >= f as usize
    }
}

pub struct NoCrashes;

impl Adversary for NoCrashes {
    fn decide(&mut self, _view: &RoundView<'_>) -> Result<Vec<CrashDecision>> {
        Ok(Vec::new())
    }
}

fn random_subset(
    rng: &mut SimRng,
    receivers: &[ProcId],
    victim: ProcId,
    deliver: f64,
) -> Vec<ProcId> {
    let mut out: Vec<ProcId> = receivers
        .iter()
        .copied()
        .filter(|&r| r != victim && rng.chance(deliver))
        .collect();
    out.sort_unstable();
    out.dedup();
    out
}

/// `f` victims chosen up front, each with a uniform crash round.
pub struct RandomCrashes {
    schedule: Vec<(u64, ProcId)>,
    rng: SimRng,
    deliver: f64,
}

impl RandomCrashes {
    pub fn new(p: u32, f: u32, horizon: u64, deliver: f64, seed: u64) -> Self {
        let mut rng = SimRng::stream(seed, tags::ADVERSARY, 0);
        let mut ids: Vec<ProcId> = (1..=p).collect();
        rng.shuffle(&mut ids);
        let mut schedule: Vec<(u64, ProcId)> = ids
            .into_iter()
            .take(f.min(p.saturating_sub(1)) as usize)
            .map(|v| (1 + rng.below(horizon.max(1)), v))
            .collect();
        schedule.sort_unstable();
        RandomCrashes {
            schedule,
            rng: SimRng::stream(seed, tags::ADVERSARY, 1),
            deliver,
        }
    }
}

impl Adversary for RandomCrashes {
    fn decide(&mut self, view: &RoundView<'_>) -> Result<Vec<CrashDecision>> {
        let mut out = Vec::new();
        for &(r, v) in &self.schedule {
            if r == view.round && view.status[v as usize - 1].is_active() {
                let delivered = random_subset(
                    &mut self.rng,
                    &view.outboxes[v as usize - 1],
                    v,
                    self.deliver,
                );
                out.push(CrashDecision {
                    victim: v,
                    delivered,
                });
            }
        }
        Ok(out)
    }
}

pub struct AllButOne {
    survivor: ProcId,
}

impl AllButOne {
    pub fn new(p: u32, survivor: Option<ProcId>, seed: u64) -> Self {
        let survivor = survivor
            .unwrap_or_else(|| 1 + SimRng::stream(seed, tags::ADVERSARY, 2).below(p as u64) as u32);
        AllButOne { survivor }
    }
}

impl Adversary for AllButOne {
    fn decide(&mut self, view: &RoundView<'_>) -> Result<Vec<CrashDecision>> {
        if view.round != 1 {
            return Ok(Vec::new());
        }
        Ok(view
            .active()
            .filter(|&v| v != self.survivor)
            .map(|v| CrashDecision {
                victim: v,
                delivered: Vec::new(),
            })
            .collect())
    }
}

pub struct CrashCoordinators {
    rng: SimRng,
    deliver: f64,
}

impl CrashCoordinators {
    pub fn new(deliver: f64, seed: u64) -> Self {
        CrashCoordinators {
            rng: SimRng::stream(seed, tags::ADVERSARY, 3),
            deliver,
        }
    }
}

impl Adversary for CrashCoordinators {
    fn decide(&mut self, view: &RoundView<'_>) -> Result<Vec<CrashDecision>> {
        let target = view
            .protocol
            .coordinators(view.round)
            .into_iter()
            .filter(|&v| view.status[v as usize - 1].is_active())
            .min();
        // Never crash the last active processor.
        if view.active().count() <= 1 {
            return Ok(Vec::new());
        }
        Ok(target
            .map(|v| {
                let delivered = random_subset(
                    &mut self.rng,
                    &view.outboxes[v as usize - 1],
                    v,
                    self.deliver,
                );
                vec![CrashDecision {
                    victim: v,
                    delivered,
                }]
            })
            .unwrap_or_default())
    }
}

/// Builds the adversary described by `spec` for a run with `p`
/// processors, crash budget `f` and the given seed.
pub fn build_adversary(
    spec: &AdversarySpec,
    p: u32,
    f: u32,
    nominal_rounds: u64,
    seed: u64,
) -> Result<Box<dyn Adversary + Send>> {
    if f >= p {
        return Err(Error::Parameter(format!(
            "crash budget f = {f} must be below p = {p}"
        )));
    }
    let inner: Box<dyn Adversary + Send> = match spec {
        AdversarySpec::None => Box::new(NoCrashes),
        AdversarySpec::Random { horizon, deliver } => Box::new(RandomCrashes::new(
            p,
            f,
            horizon.unwrap_or(nominal_rounds),
            *deliver,
            seed,
        )),
        AdversarySpec::Scripted { path, entries } => {
            let mut all = entries.clone();
            if let Some(path) = path {
                all.extend(load_script(std::path::Path::new(path))?);
            }
            Box::new(Scripted::new(all))
        }
        AdversarySpec::AllButOne { survivor } => {
            if let Some(s) = survivor {
                if *s == 0 || *s > p {
                    return Err(Error::Parameter(format!("survivor {s} outside 1..={p}")));
                }
            }
            Box::new(AllButOne::new(p, *survivor, seed))
        }
        AdversarySpec::Fchain { sizes } => {
            Box::new(FChain::new(FChainSpec::new(p, f, sizes.clone())?))
        }
        AdversarySpec::CrashCoordinators { deliver } => {
            Box::new(CrashCoordinators::new(*deliver, seed))
        }
    };
    Ok(Box::new(Budgeted::new(inner, f)))
}
