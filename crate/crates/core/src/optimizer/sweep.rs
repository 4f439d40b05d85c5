//! Solving a range of `N` against a persistent [`Cache`].
//!
//! The first pass walks `N` upwards. Each `N` without a cached entry (or
//! every `N` with `force`) is solved with warm starts from the previous
//! configuration plus one greedily inserted point and from the `N+1`
//! configuration minus its highest-energy point. The second pass walks
//! downwards and replaces the cached `N` entry whenever the `N+1`
//! configuration minus its worst point, polished, is strictly better; on
//! unions it also tries every assembly of cached part solutions. After that
//! pass the cached energies satisfy the removal inequality
//! `E(N) ≤ E(N+1)·(N-1)/(N+1)` and no cached split assembly beats the cached
//! joint energy.

use std::ops::RangeInclusive;

use log::{info, warn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::domain::{max_address_depth, Domain};
use super::search::{polish_config, run_search, trivial_result};
use super::union::{cached_assemblies, minimize_union_with, UnionHints};
use super::{Cache, SearchParams, SolveError, SolveResult};
use crate::asymptotics::{AsymptoticTrace, TraceRecord};
use crate::energy::{riesz_energy, Configuration, EnergyError, Kernel, COINCIDENCE_RATIO};
use crate::geometry::{dist2, SetSpec};

/// Random candidate sites tried by [`greedy_insert`].
const INSERT_DRAWS: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOptions {
    /// Re-solve `N` values that already have a cache entry.
    pub force: bool,
    /// Run the descending stabilization pass.
    pub stabilize: bool,
    /// Predicted `A₁` fraction for union split windows.
    pub alpha: Option<f64>,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            force: false,
            stabilize: true,
            alpha: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepFailure {
    pub n: usize,
    pub error: String,
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    /// Cached best result for every `N` that did not fail.
    pub trace: AsymptoticTrace,
    /// `N` values solved in the first pass.
    pub solved: Vec<usize>,
    /// `N` values taken from the cache without solving.
    pub reused: Vec<usize>,
    /// `N` values improved by the stabilization pass.
    pub stabilized: Vec<usize>,
    pub failures: Vec<SweepFailure>,
}

/// `config` with one more point, placed at the best of 64 random candidate
/// sites by its energy against the existing points. `None` when no candidate
/// is feasible.
pub fn greedy_insert(
    set: &SetSpec,
    config: &Configuration,
    params: &SearchParams,
) -> Result<Option<Configuration>, SolveError> {
    let n = config.len();
    let domain = match Domain::new(set, n + 1, params, max_address_depth(std::slice::from_ref(config))) {
        Ok(d) => d,
        Err(SolveError::Infeasible { .. }) => return Ok(None),
        Err(e) => return Err(e),
    };
    let kernel = Kernel::new(config.s);
    let min_d2 = (COINCIDENCE_RATIO * set.diam_upper()).powi(2);
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed ^ (n as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    let mut best: Option<(f64, usize, super::domain::Site, Vec<f64>)> = None;
    for _ in 0..INSERT_DRAWS {
        let piece = rng.random_range(0..domain.pieces.len());
        let site = domain.pieces[piece].random_site(&mut rng);
        let y = domain.pieces[piece].realize(site);
        let mut u = 0.0;
        let mut clash = false;
        for p in &config.points {
            let d2 = dist2(&y, &p.coords);
            if d2 <= min_d2 {
                clash = true;
                break;
            }
            u += kernel.eval_sq(d2);
        }
        if !clash && best.as_ref().is_none_or(|b| u < b.0) {
            best = Some((u, piece, site, y));
        }
    }
    Ok(best.map(|(_, piece, site, y)| {
        let mut out = config.clone();
        out.points.push(domain.config_point(piece, site, y));
        out
    }))
}

/// `config` without its highest-energy point (the first one on ties).
pub fn remove_worst_point(config: &Configuration) -> Result<Configuration, EnergyError> {
    let mut out = config.clone();
    if out.len() < 2 {
        out.points.clear();
        return Ok(out);
    }
    let report = riesz_energy(&config.points, config.s)?;
    let worst = report
        .per_point
        .iter()
        .enumerate()
        .fold(0, |w, (i, &u)| if u > report.per_point[w] { i } else { w });
    out.points.remove(worst);
    Ok(out)
}

fn solve_one(
    set: &SetSpec,
    n: usize,
    s: f64,
    params: &SearchParams,
    cache: &mut Cache,
    options: &SweepOptions,
    previous: Option<&SolveResult>,
) -> Result<SolveResult, SolveError> {
    if n < 2 {
        return trivial_result(set, n, s, params);
    }
    let mut warm = Vec::new();
    if let Some(cached) = cache.result(set, s, n) {
        warm.push(cached.config);
    }
    if let Some(prev) = previous.filter(|p| p.config.len() + 1 == n) {
        warm.push(prev.config.clone());
        if let Some(grown) = greedy_insert(set, &prev.config, params)? {
            warm.push(grown);
        }
    }
    if let Some(next) = cache.result(set, s, n + 1) {
        warm.push(remove_worst_point(&next.config)?);
    }
    match set {
        SetSpec::Union(_) => {
            let hints = UnionHints {
                alpha: options.alpha,
                previous_frac: previous.map(|p| p.n1 as f64 / p.config.len().max(1) as f64),
                warm,
            };
            minimize_union_with(set, n, s, params, &hints, cache)
        }
        _ => run_search(set, n, s, params, &warm, params.restarts),
    }
}

/// Candidates for `N` derived from other cached entries.
fn stabilization_candidates(
    set: &SetSpec,
    n: usize,
    s: f64,
    params: &SearchParams,
    cache: &Cache,
) -> Result<Vec<SolveResult>, SolveError> {
    let mut out = Vec::new();
    if let Some(next) = cache.result(set, s, n + 1) {
        let reduced = remove_worst_point(&next.config)?;
        out.push(SolveResult::from_config(reduced.clone(), next.status, 0)?);
        if let Some(polished) = polish_config(set, &reduced, params)? {
            out.push(polished);
        }
    }
    if let SetSpec::Union(u) = set {
        out.extend(cached_assemblies(u, n, s, params, cache)?);
    }
    Ok(out)
}

/// Solves every `N` in `n_range` on `set`, consulting and updating `cache`
/// (saved after every `N`), and returns the trace of cached best results.
/// A failing `N` is recorded and skipped.
pub fn sweep(
    set: &SetSpec,
    s: f64,
    n_range: RangeInclusive<usize>,
    params: &SearchParams,
    cache: &mut Cache,
    options: &SweepOptions,
) -> Result<SweepOutcome, SolveError> {
    params.validate()?;
    if n_range.is_empty() || *n_range.start() < 1 {
        return Err(SolveError::InvalidParams(
            "N range must be nonempty and start at 1 or more".into(),
        ));
    }
    let mut outcome = SweepOutcome {
        trace: AsymptoticTrace::new(set, s),
        solved: Vec::new(),
        reused: Vec::new(),
        stabilized: Vec::new(),
        failures: Vec::new(),
    };

    let mut previous: Option<SolveResult> = None;
    for n in n_range.clone() {
        if !options.force {
            if let Some(hit) = cache.result(set, s, n) {
                outcome.reused.push(n);
                previous = Some(hit);
                continue;
            }
        }
        match solve_one(set, n, s, params, cache, options, previous.as_ref()) {
            Ok(result) => {
                info!("N={n}: E={} N1={} ({})", result.energy.total, result.n1, result.status.as_str());
                cache.offer(set, s, &result);
                cache.save()?;
                outcome.solved.push(n);
                previous = cache.result(set, s, n).or(Some(result));
            }
            Err(e) => {
                warn!("N={n}: {e}");
                outcome.failures.push(SweepFailure { n, error: e.to_string() });
                previous = None;
            }
        }
    }

    if options.stabilize {
        for n in n_range.clone().rev() {
            if n < 2 || outcome.failures.iter().any(|f| f.n == n) {
                continue;
            }
            let mut improved = false;
            for candidate in stabilization_candidates(set, n, s, params, cache)? {
                improved |= cache.offer(set, s, &candidate);
            }
            if improved {
                outcome.stabilized.push(n);
            }
        }
        cache.save()?;
    }

    let d = set.dimension();
    for n in n_range {
        if let Some(result) = cache.result(set, s, n) {
            outcome.trace.records.push(TraceRecord::from_result(&result, s, d));
        }
    }
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::asymptotics::lemma3_check;
    use crate::geometry::{example_fractal, unit_segment};

    fn quick() -> SearchParams {
        SearchParams {
            restarts: 2,
            deterministic: true,
            ..SearchParams::default()
        }
    }

    #[test]
    fn segment_sweep_starts_at_endpoints() {
        let set = SetSpec::Segment(unit_segment());
        let mut cache = Cache::in_memory();
        let out = sweep(&set, 2.0, 2..=8, &quick(), &mut cache, &SweepOptions::default()).unwrap();
        assert_eq!(out.trace.records.len(), 7);
        assert_eq!(out.trace.records[0].g, 0.25);
        out.trace.check().unwrap();
        assert!(lemma3_check(&out.trace.records, 2.0, 1.0, 0.0).is_empty());

        // A warm cache needs no new solves.
        let again = sweep(&set, 2.0, 2..=8, &quick(), &mut cache, &SweepOptions::default()).unwrap();
        assert!(again.solved.is_empty());
        assert_eq!(again.reused.len(), 7);
        assert_eq!(again.trace.records, out.trace.records);
    }

    #[test]
    fn deterministic_reruns() {
        let set = SetSpec::Ifs(example_fractal());
        let run = || {
            let mut cache = Cache::in_memory();
            sweep(&set, 3.0, 2..=7, &quick(), &mut cache, &SweepOptions::default())
                .unwrap()
                .trace
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn greedy_and_removal() {
        let set = SetSpec::Segment(unit_segment());
        let r = run_search(&set, 3, 1.0, &quick(), &[], 1).unwrap();
        let grown = greedy_insert(&set, &r.config, &quick()).unwrap().unwrap();
        assert_eq!(grown.len(), 4);
        grown.validate(&set).unwrap();
        let back = remove_worst_point(&grown).unwrap();
        assert_eq!(back.len(), 3);
        let e = riesz_energy(&back.points, 1.0).unwrap().total;
        let eg = riesz_energy(&grown.points, 1.0).unwrap().total;
        // Removing the point with the largest potential U_max ≥ E/N.
        assert!(e <= eg * (4.0 - 2.0) / 4.0 + 1e-12);
    }

    #[test]
    fn rejects_empty_range() {
        let set = SetSpec::Segment(unit_segment());
        let mut cache = Cache::in_memory();
        #[allow(clippy::reversed_empty_ranges)]
        let r = sweep(&set, 2.0, 5..=4, &quick(), &mut cache, &SweepOptions::default());
        assert!(r.is_err());
    }
}
