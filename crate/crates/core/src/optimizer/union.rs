//! Joint minimization on a separated union `A₁ ∪ A₂`.

use std::ops::RangeInclusive;

use super::search::{run_search, trivial_result};
use super::{select_tied, Cache, SearchParams, SolveError, SolveResult, Status};
use crate::energy::{Configuration, Host};
use crate::geometry::{SetSpec, UnionSet};

/// Splits up to this `N` are all tried when no split prediction is given.
const ALL_SPLITS_UP_TO: usize = 24;
/// Assembled candidates used as warm starts for the joint refinement.
const REFINE_SEEDS: usize = 3;

/// Optional guidance for [`minimize_union_with`].
#[derive(Debug, Clone, Default)]
pub struct UnionHints {
    /// Predicted fraction of points on `A₁`.
    pub alpha: Option<f64>,
    /// `N₁/N` of the previous solve in a sweep; centers the split window when
    /// no prediction is available.
    pub previous_frac: Option<f64>,
    /// Extra warm starts for the joint refinement.
    pub warm: Vec<Configuration>,
}

/// Candidate `A₁` counts: a window of half-width `max(3, ⌈0.15 N⌉)` around
/// `round(α N)` when a prediction is given, every split for `N ≤ 24`, and
/// otherwise a window around the previous fraction (1/2 by default).
pub fn split_window(n: usize, hints: &UnionHints) -> RangeInclusive<usize> {
    let center = match (hints.alpha, hints.previous_frac) {
        (Some(a), _) => a,
        (None, _) if n <= ALL_SPLITS_UP_TO => return 0..=n,
        (None, Some(f)) => f,
        (None, None) => 0.5,
    };
    let center = (center.clamp(0.0, 1.0) * n as f64).round() as usize;
    let half = 3usize.max((0.15 * n as f64).ceil() as usize);
    center.saturating_sub(half)..=(center + half).min(n)
}

/// Tags every point of a piece configuration with `host`.
pub(crate) fn retag(config: &Configuration, host: Host) -> Configuration {
    let mut out = config.clone();
    for p in &mut out.points {
        p.host = host;
    }
    out
}

/// Union configuration from a configuration on each piece.
pub(crate) fn assemble(part1: &Configuration, part2: &Configuration) -> Configuration {
    let mut config = retag(part1, Host::A1);
    config.points.extend(retag(part2, Host::A2).points);
    config
}

fn as_union(set: &SetSpec) -> Result<&UnionSet, SolveError> {
    match set {
        SetSpec::Union(u) => Ok(u),
        _ => Err(SolveError::WrongSetKind { expected: "union" }),
    }
}

/// Best known `m`-point configuration on `piece`: the cached one, or a fresh
/// search whose result is cached.
pub(crate) fn part_solution(
    piece: &SetSpec,
    m: usize,
    s: f64,
    params: &SearchParams,
    cache: &mut Cache,
) -> Result<SolveResult, SolveError> {
    if m < 2 {
        return trivial_result(piece, m, s, params);
    }
    if let Some(hit) = cache.result(piece, s, m) {
        return Ok(hit);
    }
    let result = run_search(piece, m, s, params, &[], params.restarts)?;
    cache.offer(piece, s, &result);
    Ok(result)
}

/// Feeds the pieces of a union configuration back into the part cache.
pub(crate) fn offer_parts(union: &UnionSet, config: &Configuration, cache: &mut Cache) -> Result<(), SolveError> {
    for (host, piece) in [(Host::A1, union.a1()), (Host::A2, union.a2())] {
        let part = retag(&config.part(host), Host::Whole);
        if part.len() >= 2 {
            let result = SolveResult::from_config(part, Status::Heuristic, 0)?;
            cache.offer(piece, config.s, &result);
        }
    }
    Ok(())
}

/// Every union configuration assembled from cached part pairs with
/// `M₁ + M₂ = n`.
pub(crate) fn cached_assemblies(
    union: &UnionSet,
    n: usize,
    s: f64,
    params: &SearchParams,
    cache: &Cache,
) -> Result<Vec<SolveResult>, SolveError> {
    let mut out = Vec::new();
    for m1 in 0..=n {
        let part = |piece: &SetSpec, m: usize| -> Result<Option<SolveResult>, SolveError> {
            if m < 2 {
                trivial_result(piece, m, s, params).map(Some)
            } else {
                Ok(cache.result(piece, s, m))
            }
        };
        if let (Some(p1), Some(p2)) = (part(union.a1(), m1)?, part(union.a2(), n - m1)?) {
            out.push(SolveResult::from_config(assemble(&p1.config, &p2.config), Status::Heuristic, 0)?);
        }
    }
    Ok(out)
}

/// [`minimize_union_with`] using a private in-memory cache and no hints.
pub fn minimize_union(set: &SetSpec, n: usize, s: f64, params: &SearchParams) -> Result<SolveResult, SolveError> {
    minimize_union_with(set, n, s, params, &UnionHints::default(), &mut Cache::in_memory())
}

/// Minimizes over `n`-point configurations on a union: each split in
/// [`split_window`] is solved piecewise (reusing cached part solutions),
/// assembled with exact cross terms, and the best assemblies are refined
/// jointly with moves that may cross between the pieces. The reported result
/// follows the tie convention over all assembled and refined candidates.
pub fn minimize_union_with(
    set: &SetSpec,
    n: usize,
    s: f64,
    params: &SearchParams,
    hints: &UnionHints,
    cache: &mut Cache,
) -> Result<SolveResult, SolveError> {
    params.validate()?;
    let union = as_union(set)?;
    if n < 2 {
        return trivial_result(set, n, s, params);
    }
    let mut candidates = Vec::new();
    for m1 in split_window(n, hints) {
        let p1 = part_solution(union.a1(), m1, s, params, cache)?;
        let p2 = part_solution(union.a2(), n - m1, s, params, cache)?;
        candidates.push(SolveResult::from_config(
            assemble(&p1.config, &p2.config),
            Status::Heuristic,
            p1.evaluations + p2.evaluations,
        )?);
    }
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.sort_by(|&a, &b| candidates[a].energy.total.total_cmp(&candidates[b].energy.total));
    let mut warm: Vec<Configuration> = order
        .iter()
        .take(REFINE_SEEDS)
        .map(|&i| candidates[i].config.clone())
        .collect();
    warm.extend(hints.warm.iter().filter(|c| c.len() == n).cloned());
    let refined = run_search(set, n, s, params, &warm, 0)?;
    offer_parts(union, &refined.config, cache)?;

    let evaluations = candidates.iter().map(|c| c.evaluations).sum::<u64>() + refined.evaluations;
    candidates.push(refined);
    let mut best = select_tied(candidates, params.tie_tol).expect("at least one candidate");
    best.evaluations = evaluations;
    Ok(best)
}
