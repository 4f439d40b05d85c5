#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rieszlab::energy::{ConfigPoint, Configuration, Host, Intrinsic};
use rieszlab::geometry::{example_union, FractalAddress, SetSpec};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Ordered-pair energy by direct double summation with `powf`.
pub fn naive_energy(points: &[Vec<f64>], s: f64) -> f64 {
    let mut e = 0.0;
    for (i, x) in points.iter().enumerate() {
        for (j, y) in points.iter().enumerate() {
            if i != j {
                let r: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                e += r.powf(-s);
            }
        }
    }
    e
}

/// Random union configuration on the example union: `n1` distinct
/// depth-`depth` addresses on the fractal and `n2` parameters on the segment.
pub fn random_union_config<R: Rng>(rng: &mut R, n1: usize, n2: usize, depth: usize, s: f64) -> (SetSpec, Configuration) {
    let union = example_union();
    let SetSpec::Ifs(f) = union.a1().clone() else { unreachable!() };
    let SetSpec::Segment(seg) = union.a2().clone() else { unreachable!() };
    let mut points = Vec::new();
    let mut used = std::collections::HashSet::new();
    while used.len() < n1 {
        let i = rng.random_range(0..4u64.pow(depth as u32));
        if used.insert(i) {
            let a = FractalAddress::from_index(i, depth, 4);
            points.push(ConfigPoint {
                coords: f.realize(&a),
                host: Host::A1,
                intrinsic: Intrinsic::Address(a),
            });
        }
    }
    for _ in 0..n2 {
        let t: f64 = rng.random();
        points.push(ConfigPoint {
            coords: seg.point(t),
            host: Host::A2,
            intrinsic: Intrinsic::Param(t),
        });
    }
    (SetSpec::Union(union), Configuration { s, points })
}

/// All `k`-subsets of `0..n` in lexicographic order.
pub fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            go(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Minimum energy over all `k`-subsets of `pool`, by brute force.
pub fn brute_force_min(pool: &[Vec<f64>], k: usize, s: f64) -> f64 {
    subsets(pool.len(), k)
        .into_iter()
        .map(|sub| naive_energy(&sub.iter().map(|&i| pool[i].clone()).collect::<Vec<_>>(), s))
        .fold(f64::INFINITY, f64::min)
}
