//! Riesz `s`-energies.
//!
//! All totals use the ordered-pair convention
//! `E_s(ω) = Σ_i Σ_{j≠i} |x_i - x_j|^{-s}`, so every unordered pair is
//! counted twice and `Σ_j U_j = E_s` where `U_j` is the potential at `x_j`
//! due to the other points.
//!
//! Row sums are evaluated in index order and combined sequentially, so the
//! result is bit-identical whether or not the rows are computed in parallel.

mod config;

pub use config::{host_piece, realize_intrinsic, ConfigPoint, Configuration, Host, Intrinsic};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{dist2, SetSpec};

/// Pairwise distances below this fraction of the configuration diameter are
/// treated as coincident points.
pub const COINCIDENCE_RATIO: f64 = 1e-15;

/// Configurations at least this large evaluate rows in parallel.
const PARALLEL_ROWS: usize = 512;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnergyError {
    #[error("points {0} and {1} coincide: the energy is infinite")]
    Coincident(usize, usize),
    #[error("point index {index} out of range for {len} points")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("covering radius needs nonempty candidate and reference sets")]
    EmptyInput,
    #[error("point {0} does not lie on its host piece")]
    BadPoint(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    /// Ordered-pair energy `E_s`.
    pub total: f64,
    /// `U_j` for every point.
    pub per_point: Vec<f64>,
    /// Smallest pairwise distance; `None` for fewer than two points.
    pub min_dist: Option<f64>,
}

/// `r ↦ r^{-s}` evaluated from `r²`, with fast paths for integer `s`.
#[derive(Debug, Clone, Copy)]
pub struct Kernel {
    s: f64,
    mode: Mode,
}

#[derive(Debug, Clone, Copy)]
enum Mode {
    Even(i32),
    Odd(i32),
    General(f64),
}

impl Kernel {
    pub fn new(s: f64) -> Self {
        let mode = if s.fract() == 0.0 && s > 0.0 && s <= 64.0 {
            let k = s as i32;
            if k % 2 == 0 {
                Mode::Even(k / 2)
            } else {
                Mode::Odd(k / 2)
            }
        } else {
            Mode::General(-0.5 * s)
        };
        Kernel { s, mode }
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    /// `|x - y|^{-s}` given `|x - y|²`.
    #[inline]
    pub fn eval_sq(&self, r2: f64) -> f64 {
        match self.mode {
            Mode::Even(k) => r2.powi(-k),
            Mode::Odd(k) => r2.powi(-k) / r2.sqrt(),
            Mode::General(e) => r2.powf(e),
        }
    }

    #[inline]
    pub fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        self.eval_sq(dist2(x, y))
    }
}

struct Row {
    sum: f64,
    min2: f64,
    argmin: usize,
    max2: f64,
}

fn row<P: AsRef<[f64]>>(points: &[P], j: usize, kernel: &Kernel) -> Row {
    let xj = points[j].as_ref();
    let mut r = Row {
        sum: 0.0,
        min2: f64::INFINITY,
        argmin: j,
        max2: 0.0,
    };
    for (i, p) in points.iter().enumerate() {
        if i == j {
            continue;
        }
        let d2 = dist2(xj, p.as_ref());
        if d2 < r.min2 {
            r.min2 = d2;
            r.argmin = i;
        }
        r.max2 = r.max2.max(d2);
        r.sum += kernel.eval_sq(d2);
    }
    r
}

fn coincidence_check(rows: &[Row]) -> Result<Option<f64>, EnergyError> {
    let Some((j, worst)) = rows
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.min2.total_cmp(&b.1.min2))
    else {
        return Ok(None);
    };
    let max2 = rows.iter().map(|r| r.max2).fold(0.0, f64::max);
    let min = worst.min2.sqrt();
    if !(min > 0.0) || min < COINCIDENCE_RATIO * max2.sqrt() {
        let (a, b) = (j.min(worst.argmin), j.max(worst.argmin));
        return Err(EnergyError::Coincident(a, b));
    }
    Ok(Some(min))
}

/// Total energy, per-point energies and minimum distance.
///
/// Fewer than two points have energy zero.
pub fn riesz_energy<P: AsRef<[f64]> + Sync>(points: &[P], s: f64) -> Result<EnergyReport, EnergyError> {
    let n = points.len();
    if n < 2 {
        return Ok(EnergyReport {
            total: 0.0,
            per_point: vec![0.0; n],
            min_dist: None,
        });
    }
    let kernel = Kernel::new(s);
    let rows: Vec<Row> = if n >= PARALLEL_ROWS {
        (0..n).into_par_iter().map(|j| row(points, j, &kernel)).collect()
    } else {
        (0..n).map(|j| row(points, j, &kernel)).collect()
    };
    let min_dist = coincidence_check(&rows)?;
    let per_point: Vec<f64> = rows.iter().map(|r| r.sum).collect();
    Ok(EnergyReport {
        total: per_point.iter().sum(),
        per_point,
        min_dist,
    })
}

/// `U_j = Σ_{i≠j} |x_j - x_i|^{-s}`.
pub fn point_energy<P: AsRef<[f64]>>(points: &[P], j: usize, s: f64) -> Result<f64, EnergyError> {
    if j >= points.len() {
        return Err(EnergyError::IndexOutOfRange {
            index: j,
            len: points.len(),
        });
    }
    if points.len() < 2 {
        return Ok(0.0);
    }
    let r = row(points, j, &Kernel::new(s));
    if !(r.min2 > 0.0) || r.min2.sqrt() < COINCIDENCE_RATIO * r.max2.sqrt() {
        return Err(EnergyError::Coincident(j.min(r.argmin), j.max(r.argmin)));
    }
    Ok(r.sum)
}

/// `G = E / N^{1 + s/d}`.
pub fn normalized_energy(energy: f64, n: usize, s: f64, d: f64) -> f64 {
    energy / (n as f64).powf(1.0 + s / d)
}

/// Largest distance from a reference point to its nearest candidate point.
pub fn covering_radius<P: AsRef<[f64]>, Q: AsRef<[f64]>>(
    candidate: &[P],
    reference: &[Q],
) -> Result<f64, EnergyError> {
    if candidate.is_empty() || reference.is_empty() {
        return Err(EnergyError::EmptyInput);
    }
    let r2 = reference
        .iter()
        .map(|y| {
            candidate
                .iter()
                .map(|x| dist2(x.as_ref(), y.as_ref()))
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max);
    Ok(r2.sqrt())
}

/// Derivative of `E_s` with respect to the segment parameter of every
/// segment-hosted point; `None` for points on fractal pieces.
///
/// For a point `x_j = a + t_j (b - a)` this is `∇_{x_j} E · (b - a)` with
/// `∇_{x_j} E = -2s Σ_{i≠j} (x_j - x_i) |x_j - x_i|^{-s-2}`.
pub fn energy_gradient(config: &Configuration, set: &SetSpec, s: f64) -> Result<Vec<Option<f64>>, EnergyError> {
    let points = &config.points;
    if points.len() >= 2 {
        let rows: Vec<Row> = (0..points.len()).map(|j| row(points, j, &Kernel::new(s))).collect();
        coincidence_check(&rows)?;
    }
    let kernel = Kernel::new(s);
    points
        .iter()
        .enumerate()
        .map(|(j, p)| {
            let Intrinsic::Param(_) = p.intrinsic else {
                return Ok(None);
            };
            let Some(SetSpec::Segment(seg)) = host_piece(set, p.host) else {
                return Err(EnergyError::BadPoint(j));
            };
            Ok(Some(param_derivative(points, j, &seg.direction(), &kernel)))
        })
        .collect()
}

/// `∇_{x_j} E · dir` for the ordered-pair energy.
pub(crate) fn param_derivative<P: AsRef<[f64]>>(points: &[P], j: usize, dir: &[f64], kernel: &Kernel) -> f64 {
    let xj = points[j].as_ref();
    let mut acc = 0.0;
    for (i, p) in points.iter().enumerate() {
        if i == j {
            continue;
        }
        let xi = p.as_ref();
        let r2 = dist2(xj, xi);
        let proj: f64 = xj.iter().zip(xi).zip(dir).map(|((a, b), d)| (a - b) * d).sum();
        acc += proj * kernel.eval_sq(r2) / r2;
    }
    -2.0 * kernel.s() * acc
}
