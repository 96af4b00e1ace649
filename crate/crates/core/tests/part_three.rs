//! The final part must finish every task among `n` members despite further
//! crashes, with work `O(t + n(f + 1))` and messages `O(n(f + 1))`.

use doall::effort::part_three::Worker;
use doall::idset::IdSet;
use doall::rng::SimRng;
use doall::sim::ProcId;

/// Constant for both bounds; the random battery peaks near 2.7 for each.
const C: u64 = 4;

struct Outcome {
    work: u64,
    messages: u64,
    crashes: u64,
    done: bool,
}

/// Synchronous driver. `crash(round, coordinators, alive)` names the
/// members to crash after the round; at least one member always survives.
fn drive(
    n: u32,
    t: u32,
    mut crash: impl FnMut(u64, &[ProcId], &[ProcId]) -> Vec<ProcId>,
) -> Outcome {
    let members = IdSet::full(n);
    let mut ws: Vec<Option<Worker>> = (1..=n)
        .map(|v| Some(Worker::new(v, t, &members, 1)))
        .collect();
    let mut crashed = vec![false; n as usize];
    let mut inboxes: Vec<Vec<(ProcId, doall::effort::part_three::ThreeMsg)>> =
        vec![Vec::new(); n as usize];
    let mut executed = IdSet::empty(t);
    let mut out = Outcome {
        work: 0,
        messages: 0,
        crashes: 0,
        done: false,
    };
    for round in 1..=20 * (t as u64 + n as u64) {
        let mut next = vec![Vec::new(); n as usize];
        let mut coordinators = Vec::new();
        for v in 1..=n {
            let i = v as usize - 1;
            if crashed[i] {
                continue;
            }
            out.work += 1;
            let Some(w) = ws[i].as_mut() else { continue };
            let s = w.step(round, std::mem::take(&mut inboxes[i]));
            if s.coordinated {
                coordinators.push(v);
            }
            if let Some(x) = s.execute {
                executed.insert(x);
            }
            for (to, m) in s.sends {
                if to != v && !crashed[to as usize - 1] {
                    out.messages += 1;
                }
                next[to as usize - 1].push((v, m));
            }
            if s.halt {
                assert_eq!(executed.len(), t as usize, "halted with tasks left");
                ws[i] = None;
            }
        }
        let alive: Vec<ProcId> = (1..=n)
            .filter(|&v| !crashed[v as usize - 1] && ws[v as usize - 1].is_some())
            .collect();
        for v in crash(round, &coordinators, &alive) {
            let i = v as usize - 1;
            if !crashed[i] && (1..=n).filter(|&u| !crashed[u as usize - 1]).count() > 1 {
                // a crashing member's messages of this round are lost
                next.iter_mut()
                    .for_each(|inbox| inbox.retain(|(from, _)| *from != v));
                crashed[i] = true;
                out.crashes += 1;
            }
        }
        inboxes = next;
        if (1..=n).all(|v| crashed[v as usize - 1] || ws[v as usize - 1].is_none()) {
            out.done = executed.len() == t as usize;
            return out;
        }
    }
    out
}

fn within_contract(n: u32, t: u32, o: &Outcome) -> bool {
    let f = o.crashes + 1;
    o.done && o.work <= C * (t as u64 + n as u64 * f) && o.messages <= C * n as u64 * f
}

#[test]
fn lone_member() {
    let o = drive(1, 50, |_, _, _| vec![]);
    assert!(o.done);
    assert_eq!(o.messages, 0);
    assert!(o.work <= 51);
}

#[test]
fn contract_holds_under_random_crashes() {
    let mut worst = (0.0f64, 0.0f64);
    for seed in 0..300u64 {
        let mut rng = SimRng::new(seed);
        let n = 2 + rng.below(15) as u32;
        let t = 1 + rng.below(400) as u32;
        let rate = [0.0, 0.01, 0.05][seed as usize % 3];
        let o = drive(n, t, |_, _, alive| {
            alive.iter().copied().filter(|_| rng.chance(rate)).collect()
        });
        let f = (o.crashes + 1) as f64;
        worst.0 = worst.0.max(o.work as f64 / (t as f64 + n as f64 * f));
        worst.1 = worst.1.max(o.messages as f64 / (n as f64 * f));
        assert!(
            within_contract(n, t, &o),
            "seed {seed}: n {n} t {t} crashes {} work {} messages {}",
            o.crashes,
            o.work,
            o.messages
        );
    }
    eprintln!(
        "worst work ratio {:.2}, message ratio {:.2}",
        worst.0, worst.1
    );
}

#[test]
fn contract_holds_when_coordinators_keep_crashing() {
    for n in [2u32, 4, 8, 16] {
        for t in [1u32, n, 10 * n, 100] {
            let o = drive(n, t, |_, coordinators, _| {
                coordinators.iter().copied().min().into_iter().collect()
            });
            assert!(
                within_contract(n, t, &o),
                "n {n} t {t}: crashes {} work {} messages {}",
                o.crashes,
                o.work,
                o.messages
            );
        }
    }
}
