use doall::effort::checkpoint::model::{exhaustive, run_random, CheckpointModel};
use doall::idset::IdSet;
use doall::rng::SimRng;

#[test]
fn exhaustive_small() {
    for p2 in 1..=4u32 {
        let phases = (p2 as u64 + 1).min(4);
        let t = std::time::Instant::now();
        let r = exhaustive(p2, phases);
        eprintln!(
            "p2={p2} phases={phases} states={} leaves={} {:?} in {:?}",
            r.states,
            r.leaves,
            r.violations,
            t.elapsed()
        );
        assert!(r.violations.is_empty());
    }
}

/// `p2` entering nodes plus up to three absent ones, placed at random ids;
/// every entering node lists all entering nodes and a random subset of the
/// absent ones.
fn random_model(rng: &mut SimRng, p2: u32, phases: u64) -> CheckpointModel {
    let ghosts = rng.below(4) as u32;
    let n = p2 + ghosts;
    let mut ids: Vec<u32> = (1..=n).collect();
    rng.shuffle(&mut ids);
    let absent: Vec<u32> = ids[..ghosts as usize].to_vec();
    let lists = (1..=n)
        .map(|_| {
            IdSet::from_ids(
                n,
                (1..=n).filter(|w| !absent.contains(w) || rng.chance(0.5)),
            )
        })
        .collect();
    CheckpointModel::with_absent(lists, phases, &absent)
}

#[test]
fn seeded_battery() {
    let mut found = Vec::new();
    for seed in 0..200u64 {
        let mut rng = SimRng::new(seed);
        let p2 = 2 + (seed % 5) as u32;
        let phases = p2 as u64 + 1 + seed % 2;
        let model = random_model(&mut rng, p2, phases);
        let r = run_random(model, 0.08, p2 as usize - 1, &mut rng);
        found.extend(r.violations.into_iter().map(|v| (seed, v)));
    }
    assert!(found.is_empty(), "{found:?}");
}
