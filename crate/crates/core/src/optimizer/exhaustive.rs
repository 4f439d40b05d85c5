//! Exact minimization over a finite candidate pool.

use super::domain::{Domain, Site};
use super::{Depth, SearchParams, SolveError, SolveResult, Status};
use crate::energy::{Configuration, Kernel};
use crate::geometry::SetSpec;

/// Largest number of subsets [`minimize_exhaustive`] will enumerate.
pub const EXHAUSTIVE_LIMIT: u128 = 10_000_000;

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return acc;
        }
    }
    acc
}

struct Enumeration<'k> {
    pair: &'k [Vec<f64>],
    in_a1: &'k [bool],
    n: usize,
    chosen: Vec<usize>,
    /// Best energy and subset for every A₁ count.
    best: Vec<Option<(f64, Vec<usize>)>>,
    visited: u64,
}

impl Enumeration<'_> {
    fn descend(&mut self, start: usize, energy: f64, a1: usize) {
        if self.chosen.len() == self.n {
            self.visited += 1;
            let slot = &mut self.best[a1];
            if slot.as_ref().is_none_or(|b| energy < b.0) {
                *slot = Some((energy, self.chosen.clone()));
            }
            return;
        }
        let remaining = self.n - self.chosen.len();
        for next in start..=self.pair.len() - remaining {
            let added: f64 = self.chosen.iter().map(|&c| self.pair[c][next]).sum();
            self.chosen.push(next);
            self.descend(next + 1, energy + added, a1 + self.in_a1[next] as usize);
            self.chosen.pop();
        }
    }
}

/// Exact minimum of the `s`-energy over all `n`-subsets of the candidate pool:
/// every depth-`depth` address of each fractal piece and, for segment pieces,
/// `grid_nodes` equally spaced parameters.
///
/// Among subsets whose energy is within `tie_tol` (relative) of the minimum,
/// the one with the fewest points on `A₁` is reported.
pub fn minimize_exhaustive(
    set: &SetSpec,
    n: usize,
    s: f64,
    depth: usize,
    grid_nodes: usize,
    tie_tol: f64,
) -> Result<SolveResult, SolveError> {
    let params = SearchParams {
        depth: Depth::Fixed(depth),
        segment_grid: Some(grid_nodes),
        tie_tol,
        ..SearchParams::default()
    };
    params.validate()?;
    if n < 2 {
        return super::search::trivial_result(set, n, s, &params);
    }
    let domain = Domain::new(set, n, &params, 0)?;
    let mut sites: Vec<(usize, Site)> = Vec::new();
    for (p, piece) in domain.pieces.iter().enumerate() {
        let cap = piece.capacity().expect("exhaustive pools are discrete");
        if cap > u32::MAX as u64 {
            return Err(SolveError::PoolTooLarge {
                pool: usize::MAX,
                n,
                count: u128::MAX,
                limit: EXHAUSTIVE_LIMIT,
            });
        }
        sites.extend((0..cap).map(|i| (p, Site::Index(i))));
    }
    let pool = sites.len();
    let count = binomial(pool, n);
    if count > EXHAUSTIVE_LIMIT {
        return Err(SolveError::PoolTooLarge {
            pool,
            n,
            count,
            limit: EXHAUSTIVE_LIMIT,
        });
    }

    let coords: Vec<_> = sites.iter().map(|&(p, st)| domain.pieces[p].realize(st)).collect();
    let kernel = Kernel::new(s);
    let mut pair = vec![vec![0.0; pool]; pool];
    for i in 0..pool {
        for j in i + 1..pool {
            let e = 2.0 * kernel.eval(&coords[i], &coords[j]);
            pair[i][j] = e;
            pair[j][i] = e;
        }
    }
    let in_a1: Vec<bool> = sites
        .iter()
        .map(|&(p, _)| domain.pieces[p].host != crate::energy::Host::A2)
        .collect();

    let mut search = Enumeration {
        pair: &pair,
        in_a1: &in_a1,
        n,
        chosen: Vec::with_capacity(n),
        best: vec![None; n + 1],
        visited: 0,
    };
    search.descend(0, 0.0, 0);
    let visited = search.visited;

    let mut results = Vec::new();
    for (subset_energy, subset) in search.best.into_iter().flatten() {
        let config = Configuration {
            s,
            points: subset
                .iter()
                .map(|&i| domain.config_point(sites[i].0, sites[i].1, coords[i].clone()))
                .collect(),
        };
        let result = SolveResult::from_config(config, Status::OracleExact, visited)?;
        debug_assert!((result.energy.total - subset_energy).abs() <= 1e-9 * subset_energy.abs());
        results.push(result);
    }
    super::select_tied(results, tie_tol).ok_or(SolveError::Infeasible {
        needed: n,
        available: pool as u64,
    })
}
