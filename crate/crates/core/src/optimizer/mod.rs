//! Searches for low-energy `N`-point configurations.
//!
//! * [`minimize_exhaustive`] enumerates every `N`-subset of a finite candidate
//!   pool (fractal addresses at a fixed depth, segment grids) and is exact on
//!   that pool.
//! * [`minimize_local_search`] runs multi-start simulated annealing over
//!   fractal addresses, with curvature-scaled projected descent on segments,
//!   followed by a zero-temperature polish.
//! * [`minimize_union`] solves both pieces of a separated union for a window
//!   of split counts, assembles them and refines jointly.
//! * [`sweep`] walks an ascending range of `N`, reusing and updating a
//!   [`Cache`].

mod cache;
mod domain;
mod exhaustive;
mod params;
mod search;
mod sweep;
mod union;

pub use cache::{Cache, CacheEntry, CacheError};
pub use exhaustive::{minimize_exhaustive, EXHAUSTIVE_LIMIT};
pub use params::{auto_depth, AnnealSchedule, Depth, SearchParams};
pub use search::{minimize_local_search, minimize_local_search_from};
pub use sweep::{greedy_insert, remove_worst_point, sweep, SweepFailure, SweepOptions, SweepOutcome};
pub use union::{minimize_union, minimize_union_with, split_window, UnionHints};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::energy::{Configuration, EnergyError, EnergyReport};
use crate::geometry::GeometryError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    /// Exact minimum over a finite candidate pool.
    OracleExact,
    /// Best configuration found by a heuristic search.
    Heuristic,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::OracleExact => "oracle-exact",
            Status::Heuristic => "heuristic",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub config: Configuration,
    pub energy: EnergyReport,
    /// Points on `A₁` (every point, for a single set).
    pub n1: usize,
    pub n2: usize,
    pub status: Status,
    /// Candidate moves or subsets whose energy was evaluated.
    pub evaluations: u64,
}

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("{needed} points do not fit in a pool of {available} distinct sites; increase the address depth or grid size")]
    Infeasible { needed: usize, available: u64 },
    #[error("exhaustive search over C({pool}, {n}) = {count} subsets exceeds the limit of {limit}")]
    PoolTooLarge {
        pool: usize,
        n: usize,
        count: u128,
        limit: u128,
    },
    #[error("invalid search parameters: {0}")]
    InvalidParams(String),
    #[error("operation needs a {expected} set")]
    WrongSetKind { expected: &'static str },
    #[error(transparent)]
    Energy(#[from] EnergyError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Cache(#[from] CacheError),
}

impl SolveResult {
    pub(crate) fn from_config(config: Configuration, status: Status, evaluations: u64) -> Result<Self, SolveError> {
        let energy = crate::energy::riesz_energy(&config.points, config.s)?;
        let n1 = config.count_a1();
        let n2 = config.len() - n1;
        Ok(SolveResult {
            config,
            energy,
            n1,
            n2,
            status,
            evaluations,
        })
    }
}

/// Picks the reported result among retained near-minimizers: every candidate
/// within `tie_tol` (relative) of the lowest energy is a tie, and among ties
/// the smallest `A₁` count wins, then the lower energy, then the earlier index.
pub(crate) fn select_tied(candidates: Vec<SolveResult>, tie_tol: f64) -> Option<SolveResult> {
    let best = candidates
        .iter()
        .map(|c| c.energy.total)
        .fold(f64::INFINITY, f64::min);
    let limit = best + tie_tol * best.abs();
    candidates
        .into_iter()
        .filter(|c| c.energy.total <= limit)
        .min_by(|a, b| a.n1.cmp(&b.n1).then(a.energy.total.total_cmp(&b.energy.total)))
}
