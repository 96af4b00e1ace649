//! Assembles overlay, protocol and adversary from a [`RunConfig`] and runs
//! the simulation.

use crate::adversary::build_adversary;
use crate::config::{Algorithm, RunConfig};
use crate::effort::{check_a, f1_for, params_with_overlay, EffortParams, EpProtocol};
use crate::error::Result;
use crate::overlay::{build_overlay_with, GraphMode, OverlayGraph, OverlayOptions};
use crate::protocol::{epoch_phases, GenericParams, GenericProtocol, RuleSpec};
use crate::rng::{derive_seed, tags};
use crate::rules::PermutationTable;
use crate::sim::{run_simulation, ProtocolView, RunMetrics, RunTrace, SimOptions};
use serde_json::json;
use std::collections::HashMap;
use std::io::BufReader;
use std::sync::{Arc, Mutex, OnceLock};

pub struct RunOutput {
    pub trace: RunTrace,
    pub metrics: RunMetrics,
    pub overlay: Arc<OverlayGraph>,
    pub effort: Option<EffortParams>,
}

type OverlayKey = (u32, u32, u32, GraphMode, u64);

/// Overlays are pure functions of their key; runs in one process share them.
pub fn overlay_for(
    p: u32,
    f: u32,
    delta0: u32,
    mode: GraphMode,
    graph_seed: u64,
) -> Result<Arc<OverlayGraph>> {
    static CACHE: OnceLock<Mutex<HashMap<OverlayKey, Arc<OverlayGraph>>>> = OnceLock::new();
    let key = (p, f, delta0, mode, graph_seed);
    let cache = CACHE.get_or_init(Default::default);
    if let Some(g) = cache.lock().expect("overlay cache").get(&key) {
        return Ok(Arc::clone(g));
    }
    let opts = OverlayOptions {
        seed: graph_seed,
        spectral: false,
    };
    let g = Arc::new(build_overlay_with(p, f, delta0, mode, &opts)?);
    cache
        .lock()
        .expect("overlay cache")
        .insert(key, Arc::clone(&g));
    Ok(g)
}

/// Runs `config`; `extra` is merged into the trace header metadata.
pub fn run(config: &RunConfig, extra: serde_json::Value) -> Result<RunOutput> {
    config.validated()?;
    let (p, t, f) = (config.p, config.t, config.f());
    let adversary_seed = derive_seed(config.seed, tags::ADVERSARY, 0);
    let snapshot_every = config.snapshot_every.unwrap_or_else(|| epoch_phases(p));
    let sim = |proto: &mut dyn FnMut(&SimOptions) -> Result<crate::sim::SimResult>,
               nominal: u64| {
        let opts = SimOptions {
            round_cap: config
                .round_cap
                .unwrap_or(SimOptions::default_round_cap(p, t) + 2 * nominal),
            trace: config.trace,
            snapshot_every_phases: snapshot_every,
        };
        proto(&opts)
    };
    let (result, overlay, effort, schedule) = match config.algorithm {
        Algorithm::EffortPriority => {
            let e = config.effort_or_default();
            check_a(e.a, e.ct, config.delta0)?;
            let overlay = overlay_for(
                p,
                f1_for(p, e.a),
                config.delta0,
                config.graph_mode,
                config.graph_seed,
            )?;
            let params = params_with_overlay(p, t, e.a, e.ct, &overlay);
            let table = PermutationTable::fixed_default(p);
            let mut proto = EpProtocol::new(
                p,
                t,
                params.clone(),
                Arc::clone(&overlay),
                &table,
                config.wire,
            );
            let mut adversary = build_adversary(
                &config.adversary,
                p,
                f,
                proto.nominal_rounds(),
                adversary_seed,
            )?;
            let nominal = proto.nominal_rounds();
            let r = sim(
                &mut |o| run_simulation(&mut proto, adversary.as_mut(), o),
                nominal,
            )?;
            let schedule = json!({"phase_len": params.chunk_size as u64 + 2, "phased_rounds": params.t1, "f": params.f1});
            (r, overlay, Some(params), schedule)
        }
        alg => {
            let overlay = overlay_for(p, f, config.delta0, config.graph_mode, config.graph_seed)?;
            let table = match alg {
                Algorithm::RandomizedPermutations => Some(PermutationTable::random(config.seed, p)),
                Algorithm::DeterministicPermutations => Some(match &config.permutations {
                    Some(path) => {
                        PermutationTable::parse(BufReader::new(std::fs::File::open(path)?), p)?
                    }
                    None => PermutationTable::fixed_default(p),
                }),
                _ => None,
            };
            let rule = match &table {
                Some(t) => RuleSpec::Permutations(t),
                None => RuleSpec::BalanceLoad,
            };
            let params = GenericParams {
                p,
                t,
                chunk: 1,
                f,
                wire: config.wire,
            };
            let mut proto = GenericProtocol::new(params, Arc::clone(&overlay), rule);
            let mut adversary = build_adversary(
                &config.adversary,
                p,
                f,
                proto.nominal_rounds(),
                adversary_seed,
            )?;
            let nominal = proto.nominal_rounds();
            let r = sim(
                &mut |o| run_simulation(&mut proto, adversary.as_mut(), o),
                nominal,
            )?;
            (
                r,
                overlay,
                None,
                json!({"phase_len": 3, "phased_rounds": null, "f": f}),
            )
        }
    };
    let mut trace = result.trace;
    let mut meta = json!({
        "config": config,
        "overlay": overlay.metadata(),
        "effort": effort,
        "schedule": schedule,
    });
    if let (Some(m), serde_json::Value::Object(x)) = (meta.as_object_mut(), extra) {
        m.extend(x);
    }
    trace.set_meta(meta);
    Ok(RunOutput {
        trace,
        metrics: result.metrics,
        overlay,
        effort,
    })
}

/// Grid used to fix the default `ct`: `p` in {4, .., 64}, `t` in {1, p, 5p, p²}.
pub fn calibration_grid() -> Vec<(u32, u32)> {
    [4u32, 8, 16, 32, 64]
        .iter()
        .flat_map(|&p| [(p, 1), (p, p), (p, 5 * p), (p, p * p)])
        .collect()
}

/// Result of [`calibrate_ct`].
#[derive(Clone, Debug, serde::Serialize)]
pub struct Calibration {
    /// Smallest `ct` under which every sampled run halts within `t1`.
    pub ct: f64,
    pub runs: usize,
    /// `(p, t, seed, last halt round)` of the run that fixed `ct`.
    pub worst: (u32, u32, u64, u64),
}

/// Runs the first part alone (with an unbounded round budget) under `f1`
/// crashes at random rounds and returns the smallest `ct` that would have
/// let every run halt within `t1`.
///
/// Each run halts by some round `R`, and the run is unaffected by `t1` as
/// long as `R <= t1`, so the answer is the largest `R / base` over the runs,
/// where `t1 = ⌈ct · base⌉`.
pub fn calibrate_ct(
    grid: &[(u32, u32)],
    seeds: u64,
    delta0: u32,
    mode: GraphMode,
) -> Result<Calibration> {
    let a = crate::effort::DEFAULT_A;
    let mut best = Calibration {
        ct: 0.0,
        runs: 0,
        worst: (0, 0, 0, 0),
    };
    for &(p, t) in grid {
        let f1 = f1_for(p, a);
        let overlay = overlay_for(p, f1, delta0, mode, 0)?;
        let probe = params_with_overlay(p, t, a, 1.0, &overlay);
        let lg = (p as f64).log2();
        let base = (t as f64 + p as f64) / (p - f1) as f64 + probe.delta1 as f64 * lg * lg;
        let phase = probe.chunk_size as u64 + 2;
        let horizon = phase
            * ((t as u64)
                .div_ceil(probe.chunk_size as u64)
                .div_ceil(p as u64)
                + epoch_phases(p));
        for seed in 0..seeds {
            let mut c = RunConfig::new(p, t, Algorithm::EffortPriority);
            c.f = crate::config::FaultBound::Count(f1);
            c.delta0 = delta0;
            c.graph_mode = mode;
            c.seed = seed;
            c.trace = crate::sim::TraceLevel::Off;
            c.adversary = crate::adversary::AdversarySpec::Random {
                horizon: Some(horizon),
                deliver: 0.5,
            };
            c.effort = Some(crate::config::EffortConfig { a, ct: 1e6 });
            c.round_cap = Some(SimOptions::default_round_cap(p, t) + 50 * base as u64);
            let out = run(&c, serde_json::Value::Null)?;
            best.runs += 1;
            let m = &out.metrics;
            if !m.terminated || !m.tasks_completed {
                return Err(crate::Error::Spec(format!(
                    "first part did not finish for p = {p}, t = {t}, seed = {seed}"
                )));
            }
            let need = m.termination_round as f64 / base;
            if need > best.ct {
                best.ct = need;
                best.worst = (p, t, seed, m.termination_round);
            }
        }
    }
    Ok(best)
}
