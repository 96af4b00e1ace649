//! Permutation pairs and the fixed-table file format.
//!
//! Table lines read `id | pi1 images | pi2 images`, where the π₂ column may
//! be `seed:<u64>` to stand for the permutation drawn from that seed.
//! Blank lines and lines starting with `#` are ignored.

use crate::error::{Error, Result};
use crate::rng::{derive_seed, tags, SimRng};
use std::collections::HashMap;
use std::io::{BufRead, Write};
use std::sync::Arc;

/// Size of the π₂ domain, `11 p² g(p)`.
pub fn pi2_domain(p: u32) -> u64 {
    11 * (p as u64) * (p as u64) * crate::protocol::epoch_phases(p)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Pi2 {
    /// Drawn by forward Fisher–Yates from `seed` over `1..=domain`.
    Seeded { seed: u64, domain: u64 },
    /// Explicit images `pi2[i - 1] = π₂(i)`.
    Explicit(Arc<Vec<u64>>),
}

impl Pi2 {
    pub fn domain(&self) -> u64 {
        match self {
            Pi2::Seeded { domain, .. } => *domain,
            Pi2::Explicit(v) => v.len() as u64,
        }
    }

    /// `π₂(1), …, π₂(k)`.
    pub fn first_images(&self, k: usize) -> Vec<u64> {
        match self {
            Pi2::Explicit(v) => v[..k].to_vec(),
            Pi2::Seeded { seed, domain } => fisher_yates_prefix(*seed, *domain, k),
        }
    }
}

/// First `k` entries of a forward Fisher–Yates shuffle of `1..=n`.
///
/// Positions below `k` live in a dense array; displaced positions at or
/// beyond `k` live in a map, so memory is `O(k)` regardless of `n`.
pub fn fisher_yates_prefix(seed: u64, n: u64, k: usize) -> Vec<u64> {
    assert!(k as u64 <= n);
    let mut rng = SimRng::new(seed);
    let mut dense: Vec<u64> = (0..k as u64).collect();
    let mut sparse: HashMap<u64, u64> = HashMap::new();
    for i in 0..k {
        let j = i as u64 + rng.below(n - i as u64);
        if (j as usize) < k {
            dense.swap(i, j as usize);
        } else {
            let at_j = *sparse.get(&j).unwrap_or(&j);
            sparse.insert(j, dense[i]);
            dense[i] = at_j;
        }
    }
    dense.into_iter().map(|x| x + 1).collect()
}

/// Pair of private permutations of one processor.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PermutationPair {
    /// `pi1[x - 1] = π₁(x)` over `1..=p`.
    pub pi1: Arc<Vec<u32>>,
    pub pi2: Pi2,
}

impl PermutationPair {
    pub fn identity(p: u32) -> Self {
        PermutationPair {
            pi1: Arc::new((1..=p).collect()),
            pi2: Pi2::Explicit(Arc::new((1..=pi2_domain(p)).collect())),
        }
    }

    pub fn p(&self) -> u32 {
        self.pi1.len() as u32
    }
}

/// A pair drawn uniformly at random from `seed`.
pub fn make_random_permutations(seed: u64, p: u32) -> PermutationPair {
    let mut rng = SimRng::stream(seed, tags::PI1, 0);
    let mut pi1: Vec<u32> = (1..=p).collect();
    rng.shuffle(&mut pi1);
    PermutationPair {
        pi1: Arc::new(pi1),
        pi2: Pi2::Seeded {
            seed: derive_seed(seed, tags::PI2, 0),
            domain: pi2_domain(p),
        },
    }
}

/// One pair per processor, indexed by `id - 1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PermutationTable {
    pub pairs: Vec<PermutationPair>,
}

impl PermutationTable {
    /// Independent random pairs; processor `id` uses sub-seed `(seed, id)`.
    pub fn random(seed: u64, p: u32) -> Self {
        PermutationTable {
            pairs: (1..=p)
                .map(|id| {
                    make_random_permutations(derive_seed(seed, tags::PERMUTATION, id as u64), p)
                })
                .collect(),
        }
    }

    /// The table used by the deterministic algorithm when no file is given.
    pub fn fixed_default(p: u32) -> Self {
        Self::random(tags::FIXED_TABLE, p)
    }

    pub fn pair(&self, id: u32) -> &PermutationPair {
        &self.pairs[id as usize - 1]
    }

    pub fn write(&self, mut out: impl Write) -> Result<()> {
        for (i, pair) in self.pairs.iter().enumerate() {
            write!(out, "{} |", i + 1)?;
            for x in pair.pi1.iter() {
                write!(out, " {x}")?;
            }
            write!(out, " |")?;
            match &pair.pi2 {
                Pi2::Seeded { seed, .. } => write!(out, " seed:{seed}")?,
                Pi2::Explicit(v) => {
                    for x in v.iter() {
                        write!(out, " {x}")?;
                    }
                }
            }
            writeln!(out)?;
        }
        Ok(())
    }

    pub fn parse(input: impl BufRead, p: u32) -> Result<Self> {
        let domain = pi2_domain(p);
        let mut slots: Vec<Option<PermutationPair>> = vec![None; p as usize];
        let mut last_line = 0;
        for (i, line) in input.lines().enumerate() {
            let line_no = i + 1;
            last_line = line_no;
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = trimmed.split('|').map(str::trim).collect();
            if cols.len() != 3 {
                return Err(Error::format(line_no, "expected `id | pi1 | pi2`"));
            }
            let id: u32 = cols[0]
                .parse()
                .map_err(|_| Error::format(line_no, format!("bad processor id `{}`", cols[0])))?;
            if id == 0 || id > p {
                return Err(Error::format(
                    line_no,
                    format!("processor id {id} outside 1..={p}"),
                ));
            }
            if slots[id as usize - 1].is_some() {
                return Err(Error::format(
                    line_no,
                    format!("duplicate entry for processor {id}"),
                ));
            }
            let pi1: Vec<u32> = parse_images(cols[1], p as u64, line_no)?
                .into_iter()
                .map(|x| x as u32)
                .collect();
            let pi2 = match cols[2].strip_prefix("seed:") {
                Some(s) => Pi2::Seeded {
                    seed: s
                        .trim()
                        .parse()
                        .map_err(|_| Error::format(line_no, format!("bad seed `{s}`")))?,
                    domain,
                },
                None => Pi2::Explicit(Arc::new(parse_images(cols[2], domain, line_no)?)),
            };
            slots[id as usize - 1] = Some(PermutationPair {
                pi1: Arc::new(pi1),
                pi2,
            });
        }
        let mut pairs = Vec::with_capacity(p as usize);
        for (i, slot) in slots.into_iter().enumerate() {
            match slot {
                Some(pair) => pairs.push(pair),
                None => {
                    return Err(Error::format(
                        last_line + 1,
                        format!("missing entry for processor {}", i + 1),
                    ))
                }
            }
        }
        Ok(PermutationTable { pairs })
    }
}

fn parse_images(col: &str, n: u64, line_no: usize) -> Result<Vec<u64>> {
    let mut seen = vec![false; n as usize];
    let mut out = Vec::with_capacity(n as usize);
    for tok in col.split_whitespace() {
        let x: u64 = tok
            .parse()
            .map_err(|_| Error::format(line_no, format!("bad image `{tok}`")))?;
        if x == 0 || x > n || seen[x as usize - 1] {
            return Err(Error::format(
                line_no,
                format!("not a permutation of 1..={n}: `{tok}`"),
            ));
        }
        seen[x as usize - 1] = true;
        out.push(x);
    }
    if out.len() as u64 != n {
        return Err(Error::format(
            line_no,
            format!("expected {n} images, found {}", out.len()),
        ));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prefix_matches_full_shuffle() {
        let full = fisher_yates_prefix(11, 500, 500);
        let mut sorted = full.clone();
        sorted.sort();
        assert_eq!(sorted, (1..=500).collect::<Vec<_>>());
        for k in [0, 1, 7, 100, 499] {
            assert_eq!(fisher_yates_prefix(11, 500, k), full[..k]);
        }
    }

    #[test]
    fn seeded_pairs_reproduce() {
        assert_eq!(
            make_random_permutations(5, 6),
            make_random_permutations(5, 6)
        );
        assert_ne!(
            PermutationTable::random(5, 4).pairs[0],
            PermutationTable::random(5, 4).pairs[1]
        );
    }

    #[test]
    fn table_round_trip() {
        let t = PermutationTable::random(99, 3);
        let mut buf = Vec::new();
        t.write(&mut buf).unwrap();
        assert_eq!(PermutationTable::parse(&buf[..], 3).unwrap(), t);
    }

    #[test]
    fn explicit_identity_round_trip() {
        let t = PermutationTable {
            pairs: (0..2).map(|_| PermutationPair::identity(2)).collect(),
        };
        let mut buf = Vec::new();
        t.write(&mut buf).unwrap();
        assert_eq!(PermutationTable::parse(&buf[..], 2).unwrap(), t);
    }

    #[test]
    fn missing_and_duplicate_entries() {
        let e = PermutationTable::parse(&b"1 | 1 2 | seed:3\n"[..], 2).unwrap_err();
        assert!(matches!(e, Error::Format { line: 2, .. }));
        let e =
            PermutationTable::parse(&b"1 | 1 2 | seed:3\n1 | 2 1 | seed:4\n"[..], 2).unwrap_err();
        assert!(matches!(e, Error::Format { line: 2, .. }));
        let e = PermutationTable::parse(&b"# c\n2 | 1 1 | seed:3\n"[..], 2).unwrap_err();
        assert!(matches!(e, Error::Format { line: 2, .. }));
    }

    #[test]
    fn pi1_head_is_uniform() {
        let draws = 100_000u64;
        let mut counts = [0u64; 4];
        for s in 0..draws {
            let pair = make_random_permutations(s, 4);
            let head = (1..=4u32)
                .min_by_key(|&x| pair.pi1[x as usize - 1])
                .unwrap();
            counts[head as usize - 1] += 1;
        }
        let mean = draws as f64 / 4.0;
        let sigma = (draws as f64 * 0.25 * 0.75).sqrt();
        for c in counts {
            assert!((c as f64 - mean).abs() < 4.0 * sigma, "{counts:?}");
        }
    }
}
