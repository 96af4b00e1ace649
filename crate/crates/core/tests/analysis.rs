use doall::adversary::AdversarySpec;
use doall::analysis::{analyze, Finding};
use doall::config::{Algorithm, FaultBound, RunConfig};
use doall::runner::run;
use serde_json::Value;
use std::collections::BTreeMap;

#[test]
fn battery_findings() {
    let mut hard = Vec::new();
    let mut soft: BTreeMap<&str, usize> = BTreeMap::new();
    let mut epochs = 0;
    for alg in Algorithm::ALL {
        for adv in 0..4 {
            for p in [4u32, 8, 16] {
                for t in [1, p, 5 * p] {
                    for seed in 0..5u64 {
                        let mut c = RunConfig::new(p, t, alg);
                        c.f = FaultBound::Unbounded;
                        c.seed = seed;
                        c.adversary = match adv {
                            0 => AdversarySpec::None,
                            1 => AdversarySpec::CrashCoordinators { deliver: 0.5 },
                            2 => AdversarySpec::Random {
                                horizon: None,
                                deliver: 0.5,
                            },
                            _ => AdversarySpec::AllButOne { survivor: None },
                        };
                        let out = run(&c, Value::Null).unwrap();
                        let a = analyze(&out.trace, &out.overlay).unwrap();
                        epochs += a.epochs.len();
                        for f in &a.findings {
                            if f.is_hard() {
                                hard.push((alg, adv, p, t, seed, f.clone()));
                            } else {
                                *soft
                                    .entry(match f {
                                        Finding::NotNested { .. } => "not_nested",
                                        _ => "no_witness",
                                    })
                                    .or_default() += 1;
                            }
                        }
                    }
                }
            }
        }
    }
    eprintln!("epochs {epochs}, soft {soft:?}, hard {}", hard.len());
    for h in hard.iter().take(20) {
        eprintln!("{h:?}");
    }
    assert!(hard.is_empty());
}

#[test]
fn long_runs() {
    let mut total = 0;
    let mut soft = 0;
    for alg in Algorithm::ALL {
        for (p, t) in [(8u32, 6000u32), (16, 12000)] {
            for seed in 0..3u64 {
                for adv in [
                    AdversarySpec::None,
                    AdversarySpec::Random {
                        horizon: None,
                        deliver: 0.5,
                    },
                    AdversarySpec::CrashCoordinators { deliver: 0.3 },
                ] {
                    let mut c = RunConfig::new(p, t, alg);
                    c.f = FaultBound::Unbounded;
                    c.seed = seed;
                    c.adversary = adv;
                    let out = run(&c, Value::Null).unwrap();
                    let a = analyze(&out.trace, &out.overlay).unwrap();
                    total += a.epochs.len();
                    soft += a.findings.iter().filter(|f| !f.is_hard()).count();
                    let hard: Vec<_> = a.hard_violations().collect();
                    assert!(hard.is_empty(), "{alg:?} p{p} s{seed}: {hard:?}");
                }
            }
        }
    }
    eprintln!("long: epochs {total}, soft {soft}");
}

#[test]
fn first_epochs_execute_each_task_once() {
    let p = 8;
    let t = 11 * p * p * doall::protocol::epoch_phases(p) as u32;
    assert_eq!(t, 64768);
    let mut c = RunConfig::new(p, t, Algorithm::BalanceLoad);
    c.f = FaultBound::Count(0);
    c.delta0 = 6;
    c.trace = doall::sim::TraceLevel::Full;
    c.snapshot_every = Some(0);
    let t0 = std::time::Instant::now();
    let out = run(&c, Value::Null).unwrap();
    assert!(out.metrics.tasks_completed);
    let schedule = doall::analysis::Schedule::from_trace(&out.trace).unwrap();
    let repeats = doall::analysis::repeated_executions(&out.trace, &schedule, 3).unwrap();
    eprintln!(
        "{:?}, {} repeats, metrics {:?}",
        t0.elapsed(),
        repeats.len(),
        out.metrics
    );
    assert!(
        repeats.is_empty(),
        "{:?}",
        &repeats[..repeats.len().min(10)]
    );
}
