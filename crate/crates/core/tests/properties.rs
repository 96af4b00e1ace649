use doall::adversary::AdversarySpec;
use doall::config::{Algorithm, FaultBound, RunConfig};
use doall::idset::IdSet;
use doall::overlay::{select_power_params, PowerParams};
use doall::protocol::WireMode;
use doall::rules::balance_rank;
use doall::runner::run;
use proptest::prelude::*;
use serde_json::Value;
use std::collections::BTreeSet;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn power_params_are_minimal((p, f) in (2u32..5000).prop_flat_map(|p| (Just(p), 1..p))) {
        let a = select_power_params(p, f).unwrap();
        prop_assert!(a.r >= 1 && a.k > a.r && a.ell == 2 * a.k + 1);
        prop_assert!(PowerParams::r_condition(p, f, a.r));
        prop_assert!(a.r == 1 || !PowerParams::r_condition(p, f, a.r - 1));
        prop_assert!(PowerParams::k_condition(p, f, a.r, a.k));
        prop_assert!(a.k == a.r + 1 || !PowerParams::k_condition(p, f, a.r, a.k - 1));
    }
}

#[test]
fn balance_rank_sandwich() {
    for p in 1..=64u32 {
        for k in 1..=1000u64 {
            for v in 1..=p {
                let r = balance_rank(k, v, p);
                // k·v/p − 1 < r < k·v/p + 1, scaled by p
                let (kv, rp) = (k * v as u64, r * p as u64);
                assert!(rp + p as u64 > kv && rp < kv + p as u64, "k{k} v{v} p{p}");
                assert!((1..=k).contains(&r));
            }
        }
    }
}

proptest! {
    #[test]
    fn idset_matches_btreeset(universe in 1u32..300, ops in prop::collection::vec((any::<bool>(), 1u32..300), 0..200)) {
        let mut s = IdSet::full(universe);
        let mut o: BTreeSet<u32> = (1..=universe).collect();
        for (insert, x) in ops {
            let x = (x - 1) % universe + 1;
            if insert {
                prop_assert_eq!(s.insert(x), o.insert(x));
            } else {
                prop_assert_eq!(s.remove(x), o.remove(&x));
            }
        }
        prop_assert_eq!(s.len(), o.len());
        prop_assert_eq!(s.iter().collect::<Vec<_>>(), o.iter().copied().collect::<Vec<_>>());
        for (i, &x) in o.iter().enumerate() {
            prop_assert_eq!(s.select(i + 1), Some(x));
            prop_assert_eq!(s.rank(x), i + 1);
        }
        prop_assert_eq!(s.select(o.len() + 1), None);
    }
}

fn alg() -> impl Strategy<Value = Algorithm> {
    prop::sample::select(Algorithm::ALL.to_vec())
}

fn adversary() -> impl Strategy<Value = AdversarySpec> {
    prop_oneof![
        Just(AdversarySpec::None),
        (0.0..=1.0f64).prop_map(|deliver| AdversarySpec::Random {
            horizon: None,
            deliver
        }),
        Just(AdversarySpec::AllButOne { survivor: None }),
        (0.0..=1.0f64).prop_map(|deliver| AdversarySpec::CrashCoordinators { deliver }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn runs_are_safe(alg in alg(), adv in adversary(), p in 1u32..20, t in 1u32..60, seed in any::<u64>()) {
        let mut c = RunConfig::new(p, t, alg);
        c.f = FaultBound::Unbounded;
        c.seed = seed;
        c.adversary = if p == 1 { AdversarySpec::None } else { adv };
        let out = run(&c, Value::Null).unwrap();
        let m = &out.metrics;
        prop_assert!(m.terminated && m.tasks_completed, "{:?}", m);
        prop_assert_eq!(m.all_tasks_done_at_first_halt, Some(true));
        prop_assert!(m.messages <= out.overlay.max_degree() as u64 * m.work);
        prop_assert_eq!(m.effort, m.work + m.messages);
        prop_assert_eq!(&doall::sim::account(&out.trace).unwrap(), m);
    }

    #[test]
    fn wire_encodings_agree(alg in alg(), p in 2u32..16, t in 1u32..50, seed in any::<u64>()) {
        let mut c = RunConfig::new(p, t, alg);
        c.f = FaultBound::Unbounded;
        c.seed = seed;
        c.adversary = AdversarySpec::Random { horizon: None, deliver: 0.5 };
        let delta = run(&c, Value::Null).unwrap();
        c.wire = WireMode::Full;
        let full = run(&c, Value::Null).unwrap();
        prop_assert_eq!(delta.metrics, full.metrics);
    }
}
