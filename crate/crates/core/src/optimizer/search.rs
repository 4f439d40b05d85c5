//! Multi-start annealed local search.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::domain::{max_address_depth, Domain, PieceKind, Site};
use super::{select_tied, AnnealSchedule, SearchParams, SolveError, SolveResult, Status};
use crate::energy::{Configuration, Host, Kernel, COINCIDENCE_RATIO};
use crate::geometry::{dist2, FractalAddress, Point, SetSpec};

/// Probability of redrawing a point uniformly instead of a local move.
const ESCAPE_PROB: f64 = 0.1;
/// Probability of moving a point to the other piece of a union.
const CROSS_PROB: f64 = 0.1;
/// Warm starts are annealed at this fraction of the usual temperature.
const WARM_TEMP_SCALE: f64 = 0.1;
/// Random probes when the polish step cannot scan a whole piece.
const PROBES: usize = 64;
/// Parameter probes when relocating onto a continuous segment.
const SEGMENT_PROBES: usize = 33;
const MAX_POLISH_SWEEPS: usize = 500;

/// Incrementally maintained configuration with per-point energies.
pub(crate) struct State<'d, 'a> {
    domain: &'d Domain<'a>,
    kernel: Kernel,
    pieces: Vec<usize>,
    sites: Vec<Site>,
    coords: Vec<Point>,
    u: Vec<f64>,
    total: f64,
    occupied: HashSet<(usize, u64)>,
    min_d2: f64,
    row: Vec<f64>,
    pub evals: u64,
}

#[derive(Clone)]
struct Snapshot {
    pieces: Vec<usize>,
    sites: Vec<Site>,
    total: f64,
}

impl<'d, 'a> State<'d, 'a> {
    pub fn new(domain: &'d Domain<'a>, kernel: Kernel, diam: f64, placements: &[(usize, Site)]) -> Option<Self> {
        let mut occupied = HashSet::new();
        for &(p, site) in placements {
            if let Site::Index(i) = site {
                if !occupied.insert((p, i)) {
                    return None;
                }
            }
        }
        let coords: Vec<Point> = placements.iter().map(|&(p, s)| domain.pieces[p].realize(s)).collect();
        let min_d2 = (COINCIDENCE_RATIO * diam).powi(2);
        let mut state = State {
            domain,
            kernel,
            pieces: placements.iter().map(|p| p.0).collect(),
            sites: placements.iter().map(|p| p.1).collect(),
            coords,
            u: Vec::new(),
            total: 0.0,
            occupied,
            min_d2,
            row: vec![0.0; placements.len()],
            evals: 0,
        };
        for i in 0..state.coords.len() {
            for j in 0..i {
                if dist2(&state.coords[i], &state.coords[j]) <= min_d2 {
                    return None;
                }
            }
        }
        state.refresh();
        Some(state)
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    /// Recomputes per-point energies from scratch, discarding drift.
    fn refresh(&mut self) {
        let n = self.len();
        self.u = (0..n)
            .map(|j| {
                (0..n)
                    .filter(|&i| i != j)
                    .map(|i| self.kernel.eval(&self.coords[j], &self.coords[i]))
                    .sum()
            })
            .collect();
        self.total = self.u.iter().sum();
    }

    fn snapshot(&self) -> Snapshot {
        Snapshot {
            pieces: self.pieces.clone(),
            sites: self.sites.clone(),
            total: self.total,
        }
    }

    fn restore(&mut self, snap: &Snapshot) {
        let placements: Vec<(usize, Site)> = snap.pieces.iter().copied().zip(snap.sites.iter().copied()).collect();
        self.occupied.clear();
        for &(p, site) in &placements {
            if let Site::Index(i) = site {
                self.occupied.insert((p, i));
            }
        }
        self.coords = placements.iter().map(|&(p, s)| self.domain.pieces[p].realize(s)).collect();
        self.pieces = snap.pieces.clone();
        self.sites = snap.sites.clone();
        self.refresh();
    }

    fn is_free(&self, j: usize, piece: usize, site: Site) -> bool {
        match site {
            Site::Index(i) => {
                !self.occupied.contains(&(piece, i)) || (self.pieces[j] == piece && self.sites[j] == site)
            }
            Site::Param(_) => true,
        }
    }

    /// Energy change from moving point `j` to `y`; fills the row buffer used
    /// by [`State::commit`]. `None` if the move would create a coincidence.
    fn delta(&mut self, j: usize, y: &[f64]) -> Option<f64> {
        self.evals += 1;
        let mut new_u = 0.0;
        for (i, x) in self.coords.iter().enumerate() {
            if i == j {
                self.row[i] = 0.0;
                continue;
            }
            let d2 = dist2(y, x);
            if d2 <= self.min_d2 {
                return None;
            }
            let k = self.kernel.eval_sq(d2);
            self.row[i] = k;
            new_u += k;
        }
        Some(2.0 * (new_u - self.u[j]))
    }

    /// Applies the move whose energy change was computed by the last call to
    /// [`State::delta`].
    fn commit(&mut self, j: usize, piece: usize, site: Site, y: Point, delta: f64) {
        let mut new_u = 0.0;
        for i in 0..self.len() {
            if i == j {
                continue;
            }
            let old = self.kernel.eval(&self.coords[j], &self.coords[i]);
            self.u[i] += self.row[i] - old;
            new_u += self.row[i];
        }
        self.u[j] = new_u;
        self.total += delta;
        if let Site::Index(i) = self.sites[j] {
            self.occupied.remove(&(self.pieces[j], i));
        }
        if let Site::Index(i) = site {
            self.occupied.insert((piece, i));
        }
        self.pieces[j] = piece;
        self.sites[j] = site;
        self.coords[j] = y;
    }

    /// Evaluates a candidate move and returns its energy change.
    fn try_site(&mut self, j: usize, piece: usize, site: Site) -> Option<(f64, Point)> {
        if !self.is_free(j, piece, site) {
            return None;
        }
        let y = self.domain.pieces[piece].realize(site);
        let d = self.delta(j, &y)?;
        Some((d, y))
    }

    /// First and second derivative of the energy with respect to the
    /// parameter of point `j` placed at `y` on a segment with direction `dir`.
    fn param_derivs(&self, j: usize, y: &[f64], dir: &[f64]) -> (f64, f64) {
        let s = self.kernel.s();
        let dd: f64 = dir.iter().map(|d| d * d).sum();
        let (mut g, mut h) = (0.0, 0.0);
        for (i, x) in self.coords.iter().enumerate() {
            if i == j {
                continue;
            }
            let r2 = dist2(y, x);
            let k = self.kernel.eval_sq(r2);
            let rd: f64 = y.iter().zip(x).zip(dir).map(|((a, b), d)| (a - b) * d).sum();
            g += rd * k / r2;
            h += (s + 2.0) * rd * rd * k / (r2 * r2) - dd * k / r2;
        }
        (-2.0 * s * g, 2.0 * s * h)
    }

    /// Projected descent step for a segment-hosted point: a Newton step when
    /// the curvature is positive, a plain gradient step otherwise, shortened
    /// by backtracking until the energy decreases. Leaves the row buffer set
    /// for [`State::commit`].
    fn descent_step(&mut self, j: usize) -> Option<(Site, Point, f64)> {
        let piece = self.pieces[j];
        let (seg, Site::Param(t)) = (self.domain.pieces[piece].segment()?, self.sites[j]) else {
            return None;
        };
        let dir = seg.direction();
        let (g, h) = self.param_derivs(j, &self.coords[j], &dir);
        if g == 0.0 || !g.is_finite() {
            return None;
        }
        let step = if h > 0.0 { -g / h } else { -g.signum() * 0.25 };
        let mut alpha = 1.0;
        for _ in 0..40 {
            let t_new = (t + alpha * step).clamp(0.0, 1.0);
            if t_new != t {
                let y = seg.point(t_new);
                if let Some(d) = self.delta(j, &y) {
                    // Armijo condition on the projected step.
                    if d < 0.0 && d <= 1e-4 * g * (t_new - t) {
                        return Some((Site::Param(t_new), y, d));
                    }
                }
            }
            alpha *= 0.5;
        }
        None
    }

    fn random_free_site<R: Rng>(&self, j: usize, piece: usize, rng: &mut R) -> Option<Site> {
        let pc = &self.domain.pieces[piece];
        for _ in 0..64 {
            let site = pc.random_site(rng);
            if self.is_free(j, piece, site) {
                return Some(site);
            }
        }
        None
    }

    /// One Metropolis step at temperature `temp`.
    fn anneal_step<R: Rng>(&mut self, rng: &mut R, temp: f64) {
        let n = self.len();
        let j = rng.random_range(0..n);
        let own = self.pieces[j];
        let pieces = self.domain.pieces.len();

        let proposal = if pieces > 1 && rng.random::<f64>() < CROSS_PROB {
            let other = (own + rng.random_range(1..pieces)) % pieces;
            self.random_free_site(j, other, rng)
                .and_then(|site| self.try_site(j, other, site).map(|(d, y)| (other, site, y, d)))
        } else if rng.random::<f64>() < ESCAPE_PROB {
            self.random_free_site(j, own, rng)
                .and_then(|site| self.try_site(j, own, site).map(|(d, y)| (own, site, y, d)))
        } else {
            match (&self.domain.pieces[own].kind, self.sites[j]) {
                (PieceKind::Fractal { set, depth, .. }, Site::Index(i)) => {
                    let k = set.map_count();
                    let mut word = FractalAddress::from_index(i, *depth, k);
                    let pos = rng.random_range(0..*depth);
                    let cur = word.0[pos] as usize;
                    word.0[pos] = ((cur + rng.random_range(1..k)) % k) as u16;
                    let site = Site::Index(word.index(k));
                    self.try_site(j, own, site).map(|(d, y)| (own, site, y, d))
                }
                (PieceKind::Grid { nodes, .. }, Site::Index(i)) => {
                    let next = if i == 0 {
                        1
                    } else if i + 1 == *nodes as u64 || rng.random::<bool>() {
                        i - 1
                    } else {
                        i + 1
                    };
                    let site = Site::Index(next);
                    self.try_site(j, own, site).map(|(d, y)| (own, site, y, d))
                }
                _ => self.descent_step(j).map(|(site, y, d)| (own, site, y, d)),
            }
        };
        let Some((piece, site, y, d)) = proposal else {
            return;
        };
        let accept = d <= 0.0 || (temp > 0.0 && rng.random::<f64>() < (-d / temp).exp());
        if accept {
            self.commit(j, piece, site, y, d);
        }
    }

    /// Simulated annealing; returns the best configuration seen.
    fn anneal<R: Rng>(&mut self, rng: &mut R, schedule: &AnnealSchedule, t0: f64) -> Snapshot {
        let mut best = self.snapshot();
        let mut temp = t0;
        let steps = schedule.steps_per_point * self.len();
        for _ in 0..schedule.levels {
            for _ in 0..steps {
                self.anneal_step(rng, temp);
                if self.total < best.total {
                    best = self.snapshot();
                }
            }
            self.refresh();
            if self.total < best.total {
                best = self.snapshot();
            }
            temp *= schedule.cooling;
        }
        best
    }

    /// Best relocation of point `j` within `piece`, excluding continuous
    /// descent on its own segment.
    fn best_in_piece<R: Rng>(&mut self, j: usize, piece: usize, rng: &mut R) -> Option<(f64, Site, Point)> {
        let own = self.pieces[j] == piece;
        let candidates: Vec<Site> = match (&self.domain.pieces[piece].kind, self.sites[j]) {
            (PieceKind::Fractal { pool: Some(pool), .. }, _) => (0..pool.len() as u64).map(Site::Index).collect(),
            (PieceKind::Grid { nodes, .. }, _) if *nodes as u64 <= super::domain::FULL_SCAN_LIMIT => {
                (0..*nodes as u64).map(Site::Index).collect()
            }
            (PieceKind::Fractal { set, depth, .. }, Site::Index(i)) if own => {
                let k = set.map_count();
                let word = FractalAddress::from_index(i, *depth, k);
                let mut out = Vec::with_capacity(depth * (k - 1));
                for pos in 0..*depth {
                    for sym in 0..k {
                        if sym != word.0[pos] as usize {
                            let mut w = word.clone();
                            w.0[pos] = sym as u16;
                            out.push(Site::Index(w.index(k)));
                        }
                    }
                }
                out
            }
            (PieceKind::Grid { nodes, .. }, Site::Index(i)) if own => {
                let lo = i.saturating_sub(32);
                let hi = (i + 32).min(*nodes as u64 - 1);
                (lo..=hi).map(Site::Index).collect()
            }
            (PieceKind::Segment { .. }, _) if own => return None,
            (PieceKind::Segment { .. }, _) => (0..SEGMENT_PROBES)
                .map(|k| Site::Param(k as f64 / (SEGMENT_PROBES - 1) as f64))
                .collect(),
            _ => (0..PROBES).map(|_| self.domain.pieces[piece].random_site(rng)).collect(),
        };
        let mut best: Option<(f64, Site, Point)> = None;
        for site in candidates {
            if own && site == self.sites[j] {
                continue;
            }
            if let Some((d, y)) = self.try_site(j, piece, site) {
                if best.as_ref().is_none_or(|b| d < b.0) {
                    best = Some((d, site, y));
                }
            }
        }
        best
    }

    /// Greedy zero-temperature improvement until no single-point move helps.
    fn polish<R: Rng>(&mut self, rng: &mut R) {
        for _ in 0..MAX_POLISH_SWEEPS {
            let before = self.total;
            for j in 0..self.len() {
                // Continuous descent on the point's own segment.
                for _ in 0..100 {
                    match self.descent_step(j) {
                        Some((site, y, d)) => {
                            let own = self.pieces[j];
                            self.commit(j, own, site, y, d);
                            if -d <= 1e-15 * self.total.abs() {
                                break;
                            }
                        }
                        None => break,
                    }
                }
                let mut best: Option<(f64, usize, Site, Point)> = None;
                for piece in 0..self.domain.pieces.len() {
                    if let Some((d, site, y)) = self.best_in_piece(j, piece, rng) {
                        if best.as_ref().is_none_or(|b| d < b.0) {
                            best = Some((d, piece, site, y));
                        }
                    }
                }
                if let Some((d, piece, site, y)) = best {
                    if d < -1e-15 * self.total.abs() {
                        // Refill the row buffer for the chosen move.
                        let d = self.delta(j, &y).expect("candidate was feasible");
                        self.commit(j, piece, site, y, d);
                    }
                }
            }
            self.refresh();
            if !(self.total < before - 1e-14 * before.abs()) {
                break;
            }
        }
    }

    fn to_config(&self, s: f64) -> Configuration {
        // Canonical order: by piece, then site.
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by(|&a, &b| {
            self.pieces[a].cmp(&self.pieces[b]).then(match (self.sites[a], self.sites[b]) {
                (Site::Index(x), Site::Index(y)) => x.cmp(&y),
                (Site::Param(x), Site::Param(y)) => x.total_cmp(&y),
                _ => std::cmp::Ordering::Equal,
            })
        });
        Configuration {
            s,
            points: order
                .into_iter()
                .map(|i| self.domain.config_point(self.pieces[i], self.sites[i], self.coords[i].clone()))
                .collect(),
        }
    }
}

/// Random placement of `n` distinct points.
fn random_placements<R: Rng>(domain: &Domain, n: usize, rng: &mut R) -> Vec<(usize, Site)> {
    let mut used: HashSet<(usize, u64)> = HashSet::new();
    let mut counts = vec![0u64; domain.pieces.len()];
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let open: Vec<usize> = (0..domain.pieces.len())
            .filter(|&p| domain.pieces[p].capacity().is_none_or(|c| counts[p] < c))
            .collect();
        let piece = open[rng.random_range(0..open.len())];
        let pc = &domain.pieces[piece];
        let site = match pc.capacity() {
            // Dense pools: pick among the free sites directly.
            Some(cap) if cap <= 4 * n as u64 => {
                let free: Vec<u64> = (0..cap).filter(|i| !used.contains(&(piece, *i))).collect();
                Site::Index(free[rng.random_range(0..free.len())])
            }
            _ => pc.random_site(rng),
        };
        if let Site::Index(i) = site {
            if !used.insert((piece, i)) {
                continue;
            }
        }
        counts[piece] += 1;
        out.push((piece, site));
    }
    out
}

/// Result for `N < 2`, where the energy is zero by convention. A single point
/// goes on `A₂` when the set is a union.
pub(crate) fn trivial_result(set: &SetSpec, n: usize, s: f64, params: &SearchParams) -> Result<SolveResult, SolveError> {
    let domain = Domain::new(set, n, params, 0)?;
    let mut config = Configuration::empty(s);
    if n == 1 {
        let piece = domain.piece_of_host(Host::A2).unwrap_or(0);
        let site = match domain.pieces[piece].kind {
            PieceKind::Segment { .. } => Site::Param(0.0),
            _ => Site::Index(0),
        };
        let coords = domain.pieces[piece].realize(site);
        config.points.push(domain.config_point(piece, site, coords));
    }
    SolveResult::from_config(config, Status::OracleExact, 0)
}

/// Best-of-restarts annealed search for `n` points on `set`.
pub fn minimize_local_search(set: &SetSpec, n: usize, s: f64, params: &SearchParams) -> Result<SolveResult, SolveError> {
    minimize_local_search_from(set, n, s, params, &[])
}

/// As [`minimize_local_search`], with extra runs started from each of the
/// `warm` configurations (annealed at a reduced temperature).
pub fn minimize_local_search_from(
    set: &SetSpec,
    n: usize,
    s: f64,
    params: &SearchParams,
    warm: &[Configuration],
) -> Result<SolveResult, SolveError> {
    run_search(set, n, s, params, warm, params.restarts)
}

pub(crate) fn run_search(
    set: &SetSpec,
    n: usize,
    s: f64,
    params: &SearchParams,
    warm: &[Configuration],
    fresh: usize,
) -> Result<SolveResult, SolveError> {
    params.validate()?;
    if n < 2 {
        return trivial_result(set, n, s, params);
    }
    let domain = Domain::new(set, n, params, max_address_depth(warm))?;
    let kernel = Kernel::new(s);
    let diam = set.diam_upper();
    let warm: Vec<Vec<(usize, Site)>> = warm
        .iter()
        .filter(|c| c.len() == n)
        .filter_map(|c| domain.placements(c))
        .collect();
    let runs = warm.len() + fresh;

    let run = |r: usize| -> Option<(Configuration, u64)> {
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed.wrapping_add(r as u64));
        let (mut state, temp_scale) = match warm.get(r).and_then(|p| State::new(&domain, kernel, diam, p)) {
            Some(state) => (state, WARM_TEMP_SCALE),
            None => {
                let mut attempt = 0;
                loop {
                    let placements = random_placements(&domain, n, &mut rng);
                    if let Some(state) = State::new(&domain, kernel, diam, &placements) {
                        break (state, 1.0);
                    }
                    attempt += 1;
                    if attempt > 100 {
                        return None;
                    }
                }
            }
        };
        state.polish(&mut rng);
        let t0 = temp_scale * params.anneal.initial_temp_factor * state.total() / n as f64;
        let best = state.anneal(&mut rng, &params.anneal, t0);
        if best.total < state.total() {
            state.restore(&best);
        }
        state.polish(&mut rng);
        Some((state.to_config(s), state.evals))
    };

    let outcomes: Vec<Option<(Configuration, u64)>> = if params.deterministic {
        (0..runs).map(run).collect()
    } else {
        (0..runs).into_par_iter().map(run).collect()
    };
    let evaluations: u64 = outcomes.iter().flatten().map(|o| o.1).sum();
    let mut results = Vec::with_capacity(runs);
    for (config, _) in outcomes.into_iter().flatten() {
        results.push(SolveResult::from_config(config, Status::Heuristic, evaluations)?);
    }
    select_tied(results, params.tie_tol).ok_or(SolveError::Infeasible {
        needed: n,
        available: domain.capacity().unwrap_or(0),
    })
}

/// Zero-temperature polish of a configuration on `set`; used to clean up
/// warm-start candidates without annealing.
pub(crate) fn polish_config(
    set: &SetSpec,
    config: &Configuration,
    params: &SearchParams,
) -> Result<Option<SolveResult>, SolveError> {
    let n = config.len();
    if n < 2 {
        return Ok(None);
    }
    let domain = Domain::new(set, n, params, max_address_depth(std::slice::from_ref(config)))?;
    let Some(placements) = domain.placements(config) else {
        return Ok(None);
    };
    let Some(mut state) = State::new(&domain, Kernel::new(config.s), set.diam_upper(), &placements) else {
        return Ok(None);
    };
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    state.polish(&mut rng);
    Ok(Some(SolveResult::from_config(state.to_config(config.s), Status::Heuristic, state.evals)?))
}
