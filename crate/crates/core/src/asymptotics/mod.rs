//! Finite-`N` proxies for the asymptotic quantities of a sweep: lower and
//! upper normalized-energy constants, the predicted split fractions on a
//! union, a discrete rate-of-change check on `G(N)`, and the fraction of
//! points on `A₁` as a weak-star probe.
//!
//! Every computed energy is an upper bound on the true minimal energy, so
//! these are estimates and quality checks, not certified values.

mod trace;

pub use trace::{AsymptoticTrace, TraceError, TraceRecord, TRACE_SCHEMA_VERSION};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Fraction of the largest `N` values used as the tail window by default.
pub const DEFAULT_TAIL_FRACTION: f64 = 0.5;

/// Traces shorter than this are too short for tail statistics.
pub const MIN_RECORDS: usize = 4;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AsymptoticsError {
    #[error("need at least {needed} records, trace has {got}")]
    TooFewRecords { needed: usize, got: usize },
    #[error("tail window contains no records")]
    EmptyTail,
    #[error("tail fraction must lie in (0, 1], got {0}")]
    InvalidTailFraction(f64),
    #[error("{name} must be positive and finite, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("need s > d > 0, got s = {s}, d = {d}")]
    Regime { s: f64, d: f64 },
    #[error("operation needs a trace of a union")]
    NotUnion,
}

/// Tail-window min and max of `G`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaEstimates {
    pub g_low_hat: f64,
    pub g_up_hat: f64,
    /// Smallest and largest `N` in the tail window.
    pub window: (usize, usize),
    pub spread: f64,
    pub tail_records: usize,
}

/// Estimates the lower and upper constants as the min and max of `G` over
/// records with `N ≥ (1 - tail_fraction)·N_max`.
pub fn estimate_gamma(trace: &AsymptoticTrace, tail_fraction: f64) -> Result<GammaEstimates, AsymptoticsError> {
    if trace.records.len() < MIN_RECORDS {
        return Err(AsymptoticsError::TooFewRecords {
            needed: MIN_RECORDS,
            got: trace.records.len(),
        });
    }
    let tail = tail(&trace.records, tail_fraction)?;
    let g_low_hat = tail.iter().map(|r| r.g).fold(f64::INFINITY, f64::min);
    let g_up_hat = tail.iter().map(|r| r.g).fold(f64::NEG_INFINITY, f64::max);
    let window = (
        tail.iter().map(|r| r.n).min().unwrap(),
        tail.iter().map(|r| r.n).max().unwrap(),
    );
    Ok(GammaEstimates {
        g_low_hat,
        g_up_hat,
        window,
        spread: g_up_hat - g_low_hat,
        tail_records: tail.len(),
    })
}

fn tail(records: &[TraceRecord], tail_fraction: f64) -> Result<Vec<&TraceRecord>, AsymptoticsError> {
    if !(tail_fraction > 0.0 && tail_fraction <= 1.0) {
        return Err(AsymptoticsError::InvalidTailFraction(tail_fraction));
    }
    let n_max = records.iter().map(|r| r.n).max().ok_or(AsymptoticsError::EmptyTail)?;
    let cutoff = (1.0 - tail_fraction) * n_max as f64;
    let tail: Vec<&TraceRecord> = records.iter().filter(|r| r.n as f64 >= cutoff).collect();
    if tail.is_empty() {
        return Err(AsymptoticsError::EmptyTail);
    }
    Ok(tail)
}

fn check_inputs(g1: f64, g2: f64, s: f64, d: f64) -> Result<(), AsymptoticsError> {
    for (name, value) in [("g1", g1), ("g2", g2)] {
        if !(value > 0.0 && value.is_finite()) {
            return Err(AsymptoticsError::NonPositive { name, value });
        }
    }
    if !(d > 0.0 && s > d && s.is_finite()) {
        return Err(AsymptoticsError::Regime { s, d });
    }
    Ok(())
}

fn split_fraction(g1: f64, g2: f64, s: f64, d: f64) -> Result<f64, AsymptoticsError> {
    check_inputs(g1, g2, s, d)?;
    let p = d / s;
    let (a, b) = (g1.powf(p), g2.powf(p));
    Ok(b / (a + b))
}

/// `g₂^{d/s} / (g₁^{d/s} + g₂^{d/s})` with `g₁` the lower constant of `A₁`:
/// the minimizer of [`split_objective`] and the predicted limiting fraction
/// of points on `A₁` along a subsequence realizing that constant.
pub fn predict_alpha_star(g_low_a1: f64, g_a2: f64, s: f64, d: f64) -> Result<f64, AsymptoticsError> {
    split_fraction(g_low_a1, g_a2, s, d)
}

/// As [`predict_alpha_star`] with the upper constant of `A₁`.
pub fn predict_beta_star(g_up_a1: f64, g_a2: f64, s: f64, d: f64) -> Result<f64, AsymptoticsError> {
    split_fraction(g_up_a1, g_a2, s, d)
}

/// `β^{1+s/d} g₁ + (1-β)^{1+s/d} g₂`: leading-order normalized energy when a
/// fraction `β` of the points sits on `A₁`.
pub fn split_objective(beta: f64, g1: f64, g2: f64, s: f64, d: f64) -> f64 {
    let p = 1.0 + s / d;
    beta.powf(p) * g1 + (1.0 - beta).powf(p) * g2
}

/// Both predicted fractions together with their inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitPrediction {
    pub alpha_star: f64,
    pub beta_star: f64,
    pub g_low_a1: f64,
    pub g_up_a1: f64,
    pub g_a2: f64,
    pub s: f64,
    pub d: f64,
    /// Where the constants came from, e.g. "estimate" or "user".
    pub provenance: String,
}

impl SplitPrediction {
    pub fn new(
        g_low_a1: f64,
        g_up_a1: f64,
        g_a2: f64,
        s: f64,
        d: f64,
        provenance: impl Into<String>,
    ) -> Result<Self, AsymptoticsError> {
        Ok(SplitPrediction {
            alpha_star: predict_alpha_star(g_low_a1, g_a2, s, d)?,
            beta_star: predict_beta_star(g_up_a1, g_a2, s, d)?,
            g_low_a1,
            g_up_a1,
            g_a2,
            s,
            d,
            provenance: provenance.into(),
        })
    }
}

/// Consecutive pair whose drop in `G` is larger than the rate-of-change
/// bound allows. Since computed energies are upper bounds, a flag points to
/// a suboptimal solve at `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFlag {
    pub n: usize,
    pub n_next: usize,
    pub g: f64,
    pub g_next: f64,
    pub bound: f64,
}

/// Flags consecutive records `(N, N')` with
/// `G(N') < (1 - (1+s/d)κ) G(N) - tol`, `κ = (N' - N)/N`.
pub fn lemma3_check(records: &[TraceRecord], s: f64, d: f64, tol: f64) -> Vec<RateFlag> {
    records
        .windows(2)
        .filter(|w| w[0].n > 0)
        .filter_map(|w| {
            let (a, b) = (&w[0], &w[1]);
            let kappa = (b.n as f64 - a.n as f64) / a.n as f64;
            let bound = (1.0 - (1.0 + s / d) * kappa) * a.g;
            (b.g < bound - tol).then_some(RateFlag {
                n: a.n,
                n_next: b.n,
                g: a.g,
                g_next: b.g,
                bound,
            })
        })
        .collect()
}

/// `N₁/N` along a union trace with tail oscillation statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeakStarReport {
    /// `(N, N₁/N)` for every record.
    pub frac1: Vec<(usize, f64)>,
    pub tail_min: f64,
    pub tail_max: f64,
    pub gap: f64,
    /// Median over consecutive tail pairs of `|ΔG|/G · d/(s+d)`: the change
    /// in the fraction that the relative energy noise alone could explain.
    pub noise: Option<f64>,
    /// Three times `noise`.
    pub threshold: Option<f64>,
    /// `gap > threshold` with enough data.
    pub signature: bool,
    pub insufficient_data: bool,
}

/// Fraction of points on `A₁` and its tail spread over the default tail
/// window.
pub fn weak_star_trace(trace: &AsymptoticTrace) -> Result<WeakStarReport, AsymptoticsError> {
    if !trace.is_union() {
        return Err(AsymptoticsError::NotUnion);
    }
    let frac1: Vec<(usize, f64)> = trace.records.iter().map(|r| (r.n, r.frac1)).collect();
    let insufficient_data = trace.records.len() < MIN_RECORDS;
    let tail = match tail(&trace.records, DEFAULT_TAIL_FRACTION) {
        Ok(t) => t,
        Err(AsymptoticsError::EmptyTail) => {
            return Ok(WeakStarReport {
                frac1,
                tail_min: 0.0,
                tail_max: 0.0,
                gap: 0.0,
                noise: None,
                threshold: None,
                signature: false,
                insufficient_data: true,
            })
        }
        Err(e) => return Err(e),
    };
    let tail_min = tail.iter().map(|r| r.frac1).fold(f64::INFINITY, f64::min);
    let tail_max = tail.iter().map(|r| r.frac1).fold(f64::NEG_INFINITY, f64::max);
    let gap = tail_max - tail_min;

    let mut rel: Vec<f64> = tail
        .windows(2)
        .filter(|w| w[0].g > 0.0)
        .map(|w| (w[1].g - w[0].g).abs() / w[0].g * trace.d / (trace.s + trace.d))
        .collect();
    rel.sort_by(f64::total_cmp);
    let noise = (!rel.is_empty()).then(|| {
        let m = rel.len() / 2;
        if rel.len() % 2 == 1 {
            rel[m]
        } else {
            0.5 * (rel[m - 1] + rel[m])
        }
    });
    let threshold = noise.map(|n| 3.0 * n);
    Ok(WeakStarReport {
        frac1,
        tail_min,
        tail_max,
        gap,
        noise,
        threshold,
        signature: !insufficient_data && threshold.is_some_and(|t| gap > t),
        insufficient_data,
    })
}

/// `E₁ + E₂ + 2 M₁ M₂ sep^{-s}`: energy of any union configuration assembled
/// from an `M₁`-point configuration of energy `E₁` on `A₁` and an `M₂`-point
/// one on `A₂`, bounded using the separation lower bound for each of the
/// `2 M₁ M₂` ordered cross pairs.
pub fn split_upper_bound(e1: f64, e2: f64, m1: usize, m2: usize, sep_lower: f64, s: f64) -> f64 {
    e1 + e2 + 2.0 * m1 as f64 * m2 as f64 * sep_lower.powf(-s)
}

/// Coarser form with the cross contribution bounded by `N² sep^{-s}`,
/// `N = M₁ + M₂`. Never below [`split_upper_bound`] since `N² ≥ 2 M₁ M₂`.
pub fn split_upper_bound_coarse(e1: f64, e2: f64, m1: usize, m2: usize, sep_lower: f64, s: f64) -> f64 {
    let n = (m1 + m2) as f64;
    e1 + e2 + n * n * sep_lower.powf(-s)
}

/// Everything the report derives from one trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceSummary {
    pub set_id: String,
    pub s: f64,
    pub d: f64,
    pub records: usize,
    pub n_range: Option<(usize, usize)>,
    pub gamma: Option<GammaEstimates>,
    pub lemma3_flags: Vec<RateFlag>,
    pub weak_star: Option<WeakStarReport>,
}

/// Gamma estimates (if the trace is long enough), rate-of-change flags with
/// tolerance `tol`, and weak-star statistics for union traces.
pub fn summarize(trace: &AsymptoticTrace, tail_fraction: f64, tol: f64) -> Result<TraceSummary, AsymptoticsError> {
    let gamma = match estimate_gamma(trace, tail_fraction) {
        Ok(g) => Some(g),
        Err(AsymptoticsError::TooFewRecords { .. }) => None,
        Err(e) => return Err(e),
    };
    let weak_star = if trace.is_union() {
        Some(weak_star_trace(trace)?)
    } else {
        None
    };
    Ok(TraceSummary {
        set_id: trace.set_id.clone(),
        s: trace.s,
        d: trace.d,
        records: trace.records.len(),
        n_range: trace.records.first().map(|f| (f.n, trace.records.last().unwrap().n)),
        gamma,
        lemma3_flags: lemma3_check(&trace.records, trace.s, trace.d, tol),
        weak_star,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{example_union, unit_segment, SetSpec};
    use crate::optimizer::Status;
    use proptest::prelude::*;

    fn record(n: usize, g: f64, n1: usize) -> TraceRecord {
        TraceRecord {
            n,
            e_best: g * (n as f64).powf(4.0),
            g,
            n1,
            n2: n - n1,
            frac1: n1 as f64 / n as f64,
            min_dist: None,
            status: Status::Heuristic,
        }
    }

    fn synthetic(set: SetSpec, recs: Vec<TraceRecord>) -> AsymptoticTrace {
        let mut t = AsymptoticTrace::new(&set, 3.0);
        t.d = 1.0;
        t.records = recs;
        t
    }

    fn segment_trace(gs: &[(usize, f64)]) -> AsymptoticTrace {
        synthetic(
            SetSpec::Segment(unit_segment()),
            gs.iter().map(|&(n, g)| record(n, g, n)).collect(),
        )
    }

    #[test]
    fn gamma_examples() {
        let t = segment_trace(&[(2, 1.0), (3, 1.0), (4, 1.0), (5, 1.0)]);
        let e = estimate_gamma(&t, 0.5).unwrap();
        assert_eq!((e.g_low_hat, e.g_up_hat, e.spread), (1.0, 1.0, 0.0));

        let t = segment_trace(&[(10, 1.0), (11, 1.2), (12, 1.0), (13, 1.2)]);
        let e = estimate_gamma(&t, 0.5).unwrap();
        assert_eq!((e.g_low_hat, e.g_up_hat), (1.0, 1.2));
        assert!((e.spread - 0.2).abs() < 1e-15);
        assert_eq!(e.window, (10, 13));

        // Only N_max survives a tiny tail fraction.
        let t = segment_trace(&[(10, 1.0), (11, 1.2), (12, 1.0), (13, 1.7)]);
        let e = estimate_gamma(&t, 0.01).unwrap();
        assert_eq!((e.g_low_hat, e.g_up_hat, e.tail_records), (1.7, 1.7, 1));

        assert!(matches!(
            estimate_gamma(&segment_trace(&[(2, 1.0)]), 0.5),
            Err(AsymptoticsError::TooFewRecords { .. })
        ));
        assert!(estimate_gamma(&t, 0.0).is_err());
    }

    #[test]
    fn prediction_examples() {
        assert_eq!(predict_alpha_star(2.5, 2.5, 3.0, 1.0).unwrap(), 0.5);
        let a = predict_alpha_star(1.0, 8.0, 3.0, 1.0).unwrap();
        assert!((a - 2.0 / 3.0).abs() < 1e-15);
        assert!(predict_alpha_star(1.0, 1e-300, 3.0, 1.0).unwrap() < 1e-90);
        assert_eq!(predict_beta_star(8.0, 8.0, 5.0, 1.3).unwrap(), 0.5);
        assert!(predict_beta_star(2.0, 1.0, 3.0, 1.0).unwrap() < predict_alpha_star(1.0, 1.0, 3.0, 1.0).unwrap());
        assert!(predict_alpha_star(0.0, 1.0, 3.0, 1.0).is_err());
        assert!(predict_alpha_star(1.0, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn objective_examples() {
        assert_eq!(split_objective(0.0, 3.0, 5.0, 2.0, 1.0), 5.0);
        assert_eq!(split_objective(1.0, 3.0, 5.0, 2.0, 1.0), 3.0);
        assert_eq!(split_objective(0.5, 4.0, 4.0, 1.0, 1.0), 2.0);
    }

    #[test]
    fn lemma3_examples() {
        // s/d = 3 with d = 1.
        let ok = [record(10, 1.0, 10), record(11, 0.9, 11)];
        assert!(lemma3_check(&ok, 3.0, 1.0, 0.0).is_empty());
        let bad = [record(10, 1.0, 10), record(11, 0.5, 11)];
        let flags = lemma3_check(&bad, 3.0, 1.0, 0.0);
        assert_eq!(flags.len(), 1);
        assert!((flags[0].bound - 0.6).abs() < 1e-12);
        let flat = [record(10, 1.0, 10), record(11, 1.0, 11), record(15, 1.0, 15)];
        assert!(lemma3_check(&flat, 3.0, 1.0, 0.0).is_empty());
    }

    #[test]
    fn weak_star_examples() {
        let union = || SetSpec::Union(example_union());
        let t = synthetic(union(), (10..14).map(|n| record(n * 2, 1.0, n)).collect());
        let w = weak_star_trace(&t).unwrap();
        assert_eq!(w.gap, 0.0);
        assert!(!w.signature);

        let t = synthetic(union(), vec![record(10, 1.0, 4), record(20, 1.0, 12), record(30, 1.0, 12), record(40, 1.0, 24)]);
        let w = weak_star_trace(&t).unwrap();
        assert!((w.gap - 0.2).abs() < 1e-12, "{}", w.gap);
        assert_eq!(w.noise, Some(0.0));
        assert!(w.signature);

        let t = synthetic(union(), vec![record(10, 1.0, 5)]);
        let w = weak_star_trace(&t).unwrap();
        assert_eq!(w.gap, 0.0);
        assert!(w.insufficient_data);

        assert_eq!(
            weak_star_trace(&segment_trace(&[(2, 1.0)])),
            Err(AsymptoticsError::NotUnion)
        );
    }

    #[test]
    fn bound_examples() {
        assert_eq!(split_upper_bound(3.0, 7.0, 0, 9, 2.0, 3.0), 10.0);
        assert_eq!(split_upper_bound(0.0, 0.0, 1, 1, 2.0, 1.0), 1.0);
        assert_eq!(split_upper_bound_coarse(0.0, 0.0, 1, 1, 2.0, 1.0), 2.0);
    }

    proptest! {
        #[test]
        fn alpha_symmetry(g1 in 1e-3f64..1e3, g2 in 1e-3f64..1e3, d in 0.1f64..3.0, extra in 0.01f64..5.0) {
            let s = d + extra;
            let a = predict_alpha_star(g1, g2, s, d).unwrap();
            let b = predict_alpha_star(g2, g1, s, d).unwrap();
            prop_assert!((a + b - 1.0).abs() <= 1e-12);
            prop_assert!(a > 0.0 && a < 1.0);
        }

        #[test]
        fn beta_decreases_in_a1_constant(g in 0.1f64..10.0, bump in 0.01f64..10.0, g2 in 0.1f64..10.0) {
            let a = predict_alpha_star(g, g2, 3.0, 1.0).unwrap();
            let b = predict_beta_star(g + bump, g2, 3.0, 1.0).unwrap();
            prop_assert!(b < a);
        }

        #[test]
        fn coarse_form_dominates(e1 in 0.0f64..10.0, e2 in 0.0f64..10.0, m1 in 0usize..100, m2 in 0usize..100, sep in 0.1f64..5.0, s in 1.0f64..6.0) {
            prop_assert!(split_upper_bound_coarse(e1, e2, m1, m2, sep, s) >= split_upper_bound(e1, e2, m1, m2, sep, s));
        }

        #[test]
        fn gamma_ignores_tail_order(gs in proptest::collection::vec(0.1f64..10.0, 4..20), seed in any::<u64>()) {
            let recs: Vec<(usize, f64)> = gs.iter().enumerate().map(|(i, &g)| (i + 2, g)).collect();
            let t = segment_trace(&recs);
            let e = estimate_gamma(&t, 0.5).unwrap();
            // Permute G values within the tail; N stays ascending.
            let cutoff = 0.5 * (recs.len() + 1) as f64;
            let (head, tail): (Vec<(usize, f64)>, Vec<(usize, f64)>) = recs.iter().partition(|r| (r.0 as f64) < cutoff);
            let mut tg: Vec<f64> = tail.iter().map(|r| r.1).collect();
            let k = (seed as usize) % tg.len();
            tg.rotate_left(k);
            let mut permuted: Vec<(usize, f64)> = head;
            permuted.extend(tail.iter().zip(tg).map(|(r, g)| (r.0, g)));
            let p = estimate_gamma(&segment_trace(&permuted), 0.5).unwrap();
            prop_assert_eq!(e, p);
        }
    }
}
