use serde::{Deserialize, Serialize};

use super::SolveError;
use crate::geometry::SelfSimilarSet;

/// Fractal address depth: fixed, or chosen from `N` by [`auto_depth`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Depth {
    #[default]
    Auto,
    #[serde(untagged)]
    Fixed(usize),
}

impl std::str::FromStr for Depth {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "auto" {
            return Ok(Depth::Auto);
        }
        s.parse::<usize>()
            .map(Depth::Fixed)
            .map_err(|_| format!("depth must be a positive integer or 'auto', got '{s}'"))
    }
}

/// Geometric cooling schedule. The initial temperature is
/// `initial_temp_factor` times the mean per-point energy of the starting
/// configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnnealSchedule {
    pub initial_temp_factor: f64,
    pub cooling: f64,
    pub steps_per_point: usize,
    pub levels: usize,
}

impl Default for AnnealSchedule {
    fn default() -> Self {
        AnnealSchedule {
            initial_temp_factor: 0.1,
            cooling: 0.95,
            steps_per_point: 200,
            levels: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchParams {
    pub depth: Depth,
    pub restarts: usize,
    pub anneal: AnnealSchedule,
    pub seed: u64,
    /// Relative energy tolerance under which two configurations tie.
    pub tie_tol: f64,
    /// Restrict segment points to this many equally spaced nodes instead of
    /// searching the continuum.
    pub segment_grid: Option<usize>,
    /// Run restarts sequentially. Results are identical either way; this only
    /// pins the execution order.
    pub deterministic: bool,
}

impl Default for SearchParams {
    fn default() -> Self {
        SearchParams {
            depth: Depth::Auto,
            restarts: 8,
            anneal: AnnealSchedule::default(),
            seed: 0,
            tie_tol: 1e-9,
            segment_grid: None,
            deterministic: false,
        }
    }
}

impl SearchParams {
    pub fn validate(&self) -> Result<(), SolveError> {
        let bad = |m: &str| Err(SolveError::InvalidParams(m.to_string()));
        if self.restarts < 1 {
            return bad("restarts must be at least 1");
        }
        if !(self.anneal.cooling > 0.0 && self.anneal.cooling < 1.0) {
            return bad("cooling factor must lie in (0, 1)");
        }
        if !(self.anneal.initial_temp_factor >= 0.0) {
            return bad("initial temperature factor must be nonnegative");
        }
        if self.depth == Depth::Fixed(0) {
            return bad("explicit depth must be at least 1");
        }
        if matches!(self.segment_grid, Some(g) if g < 2) {
            return bad("segment grid needs at least 2 nodes");
        }
        if !(self.tie_tol >= 0.0) {
            return bad("tie tolerance must be nonnegative");
        }
        Ok(())
    }

    pub(crate) fn depth_for(&self, set: &SelfSimilarSet, n: usize) -> usize {
        match self.depth {
            Depth::Fixed(m) => m,
            Depth::Auto => auto_depth(set, n),
        }
    }
}

/// `max(2, ⌈log_{1/L}(4 N^{1/d})⌉)`: address resolution `Lᵐ·diam` at most a
/// quarter of the typical spacing `N^{-1/d}·diam`.
pub fn auto_depth(set: &SelfSimilarSet, n: usize) -> usize {
    let n = n.max(1) as f64;
    let target = 4.0 * n.powf(1.0 / set.dimension());
    let m = (target.ln() / (1.0 / set.ratio()).ln() - 1e-9).ceil();
    (m.max(2.0)) as usize
}
