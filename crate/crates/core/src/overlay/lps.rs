//! Lubotzky–Phillips–Sarnak Cayley graphs over PSL(2, Z_r) and PGL(2, Z_r).

use super::ExpanderGraph;
use crate::error::{Error, Result};
use std::collections::HashMap;

#[derive(Clone, Debug)]
pub struct LpsGraph {
    pub graph: ExpanderGraph,
    /// Generator prime; the degree is `q + 1`.
    pub q: u32,
    /// Field prime.
    pub r: u32,
    /// `true` when `q` is a square mod `r` (PSL case).
    pub psl: bool,
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

fn pow_mod(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * b % m;
        }
        b = b * b % m;
        e >>= 1;
    }
    acc
}

/// Legendre symbol `(a | r)` for an odd prime `r`: 1, -1, or 0.
pub fn legendre(a: u64, r: u64) -> i32 {
    match pow_mod(a, (r - 1) / 2, r) {
        0 => 0,
        1 => 1,
        _ => -1,
    }
}

/// Node count of the LPS graph for generator prime `q` over field prime `r`.
pub fn lps_node_count(q: u32, r: u32) -> usize {
    let r = r as usize;
    let pgl = r * (r * r - 1);
    if legendre(q as u64, r as u64) == 1 {
        pgl / 2
    } else {
        pgl
    }
}

/// Integer solutions of `a^2 + b^2 + c^2 + d^2 = q` with `a > 0` odd and
/// `b, c, d` even.
fn quaternion_generators(q: i64) -> Vec<[i64; 4]> {
    let bound = (q as f64).sqrt() as i64 + 1;
    let mut out = Vec::new();
    for a in (1..=bound).step_by(2) {
        for b in (-bound..=bound).filter(|x| x % 2 == 0) {
            for c in (-bound..=bound).filter(|x| x % 2 == 0) {
                let rest = q - a * a - b * b - c * c;
                if rest < 0 {
                    continue;
                }
                let d = (rest as f64).sqrt().round() as i64;
                if d * d != rest || d % 2 != 0 {
                    continue;
                }
                out.push([a, b, c, d]);
                if d != 0 {
                    out.push([a, b, c, -d]);
                }
            }
        }
    }
    out
}

type Mat = [u32; 4];

fn mat_mul(x: &Mat, y: &Mat, r: u64) -> Mat {
    let m = |i: usize, j: usize| {
        let s = x[2 * i] as u64 * y[j] as u64 + x[2 * i + 1] as u64 * y[2 + j] as u64;
        (s % r) as u32
    };
    [m(0, 0), m(0, 1), m(1, 0), m(1, 1)]
}

/// Scales so that the first nonzero entry is 1 (projective representative).
fn canonical(m: Mat, r: u64) -> Mat {
    let lead = *m.iter().find(|&&v| v != 0).expect("invertible matrix");
    let inv = pow_mod(lead as u64, r - 2, r);
    m.map(|v| (v as u64 * inv % r) as u32)
}

/// Builds the LPS graph of degree `q + 1` with at least `target_nodes`
/// nodes, using the smallest admissible odd prime `r > 2 sqrt(q)`.
pub fn build_lps(q: u32, target_nodes: usize) -> Result<LpsGraph> {
    if !is_prime(q as u64) || q % 4 != 1 {
        return Err(Error::Parameter(format!(
            "q = {q} must be a prime congruent to 1 mod 4"
        )));
    }
    let min_r = 2.0 * (q as f64).sqrt();
    let mut r = 3u32;
    loop {
        if is_prime(r as u64) && r != q && r as f64 > min_r && lps_node_count(q, r) >= target_nodes
        {
            break;
        }
        r += 2;
        if r > 1 << 12 {
            return Err(Error::Parameter(format!(
                "no admissible field prime for target {target_nodes}"
            )));
        }
    }
    lps_with_field(q, r)
}

/// LPS graph for explicit primes `q` and `r`.
pub fn lps_with_field(q: u32, r: u32) -> Result<LpsGraph> {
    if !is_prime(q as u64) || q % 4 != 1 {
        return Err(Error::Parameter(format!(
            "q = {q} must be a prime congruent to 1 mod 4"
        )));
    }
    if !is_prime(r as u64) || r == 2 || r == q {
        return Err(Error::Parameter(format!(
            "r = {r} must be an odd prime distinct from q"
        )));
    }
    let rr = r as u64;
    // x^2 + y^2 = -1 mod r
    let (x, y) = (0..rr)
        .flat_map(|x| (0..rr).map(move |y| (x, y)))
        .find(|&(x, y)| (x * x + y * y + 1) % rr == 0)
        .expect("sum of two squares covers -1 for odd primes");
    let modr = |v: i64| v.rem_euclid(r as i64) as u32;
    let (xi, yi) = (x as i64, y as i64);
    let gens: Vec<Mat> = quaternion_generators(q as i64)
        .into_iter()
        .map(|[a, b, c, d]| {
            canonical(
                [
                    modr(a + b * xi + d * yi),
                    modr(-b * yi + c + d * xi),
                    modr(-b * yi - c + d * xi),
                    modr(a - b * xi - d * yi),
                ],
                rr,
            )
        })
        .collect();
    debug_assert_eq!(gens.len(), q as usize + 1);

    let identity = canonical([1, 0, 0, 1], rr);
    let mut index: HashMap<Mat, u32> = HashMap::new();
    let mut nodes = vec![identity];
    index.insert(identity, 0);
    let mut adj: Vec<Vec<u32>> = Vec::new();
    let mut head = 0;
    while head < nodes.len() {
        let g = nodes[head];
        let mut list = Vec::with_capacity(gens.len());
        for s in &gens {
            let h = canonical(mat_mul(&g, s, rr), rr);
            let id = *index.entry(h).or_insert_with(|| {
                nodes.push(h);
                (nodes.len() - 1) as u32
            });
            list.push(id);
        }
        adj.push(list);
        head += 1;
    }
    // Symmetrize defensively; the generator set is closed under inverses.
    let mut sym = adj.clone();
    for (u, list) in adj.iter().enumerate() {
        for &v in list {
            sym[v as usize].push(u as u32);
        }
    }
    for (u, list) in sym.iter_mut().enumerate() {
        list.retain(|&v| v as usize != u);
    }
    let graph = ExpanderGraph::from_lists(sym);
    let psl = legendre(q as u64, rr) == 1;
    Ok(LpsGraph { graph, q, r, psl })
}
