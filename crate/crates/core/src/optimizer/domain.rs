//! Search spaces: the pieces a configuration may occupy and the sites on
//! each piece.

use rand::Rng;

use super::{SearchParams, SolveError};
use crate::energy::{ConfigPoint, Configuration, Host, Intrinsic};
use crate::geometry::{FractalAddress, Point, Segment, SelfSimilarSet, SetSpec};

/// Pools up to this size are precomputed and scanned exhaustively by the
/// polish step.
pub(crate) const FULL_SCAN_LIMIT: u64 = 4096;

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Site {
    /// Address index (fractal) or node index (segment grid).
    Index(u64),
    /// Segment parameter in `[0, 1]`.
    Param(f64),
}

#[derive(Debug)]
pub(crate) enum PieceKind<'a> {
    Fractal {
        set: &'a SelfSimilarSet,
        depth: usize,
        pool: Option<Vec<Point>>,
    },
    Grid {
        seg: &'a Segment,
        nodes: usize,
    },
    Segment {
        seg: &'a Segment,
    },
}

#[derive(Debug)]
pub(crate) struct Piece<'a> {
    pub host: Host,
    pub kind: PieceKind<'a>,
}

impl Piece<'_> {
    /// Number of distinct sites, `None` for a continuum.
    pub fn capacity(&self) -> Option<u64> {
        match &self.kind {
            PieceKind::Fractal { set, depth, .. } => {
                Some((set.map_count() as u64).saturating_pow(*depth as u32))
            }
            PieceKind::Grid { nodes, .. } => Some(*nodes as u64),
            PieceKind::Segment { .. } => None,
        }
    }

    pub fn segment(&self) -> Option<&Segment> {
        match &self.kind {
            PieceKind::Grid { seg, .. } | PieceKind::Segment { seg } => Some(seg),
            PieceKind::Fractal { .. } => None,
        }
    }

    pub fn realize(&self, site: Site) -> Point {
        match (&self.kind, site) {
            (PieceKind::Fractal { pool: Some(pool), .. }, Site::Index(i)) => pool[i as usize].clone(),
            (PieceKind::Fractal { set, depth, .. }, Site::Index(i)) => {
                set.realize(&FractalAddress::from_index(i, *depth, set.map_count()))
            }
            (PieceKind::Grid { seg, nodes }, Site::Index(i)) => seg.point(grid_param(i, *nodes)),
            (PieceKind::Segment { seg }, Site::Param(t)) => seg.point(t),
            _ => unreachable!("site kind does not match piece kind"),
        }
    }

    pub fn intrinsic(&self, site: Site) -> Intrinsic {
        match (&self.kind, site) {
            (PieceKind::Fractal { set, depth, .. }, Site::Index(i)) => {
                Intrinsic::Address(FractalAddress::from_index(i, *depth, set.map_count()))
            }
            (PieceKind::Grid { nodes, .. }, Site::Index(i)) => Intrinsic::Param(grid_param(i, *nodes)),
            (PieceKind::Segment { .. }, Site::Param(t)) => Intrinsic::Param(t),
            _ => unreachable!("site kind does not match piece kind"),
        }
    }

    pub fn random_site<R: Rng>(&self, rng: &mut R) -> Site {
        match &self.kind {
            PieceKind::Segment { .. } => Site::Param(rng.random::<f64>()),
            _ => Site::Index(rng.random_range(0..self.capacity().unwrap())),
        }
    }

    /// Site representing `intrinsic`, if it lies in this piece's search space.
    /// Shallower fractal addresses are padded with the first map's symbol,
    /// which leaves the realized point unchanged because the anchor is that
    /// map's fixed point.
    pub fn site_of(&self, intrinsic: &Intrinsic) -> Option<Site> {
        match (&self.kind, intrinsic) {
            (PieceKind::Fractal { set, depth, .. }, Intrinsic::Address(a)) => {
                if a.depth() > *depth || a.0.iter().any(|&s| s as usize >= set.map_count()) {
                    return None;
                }
                let mut word = a.0.clone();
                word.resize(*depth, 0);
                Some(Site::Index(FractalAddress(word).index(set.map_count())))
            }
            (PieceKind::Grid { nodes, .. }, Intrinsic::Param(t)) => {
                let k = (t * (*nodes - 1) as f64).round();
                ((grid_param(k as u64, *nodes) - t).abs() < 1e-12).then_some(Site::Index(k as u64))
            }
            (PieceKind::Segment { .. }, Intrinsic::Param(t)) if (0.0..=1.0).contains(t) => Some(Site::Param(*t)),
            _ => None,
        }
    }
}

pub(crate) fn grid_param(i: u64, nodes: usize) -> f64 {
    i as f64 / (nodes - 1) as f64
}

#[derive(Debug)]
pub(crate) struct Domain<'a> {
    pub pieces: Vec<Piece<'a>>,
}

impl<'a> Domain<'a> {
    /// Search space for `n` points on `set`. `min_depth` raises the fractal
    /// depth so that warm-start addresses remain representable.
    pub fn new(set: &'a SetSpec, n: usize, params: &SearchParams, min_depth: usize) -> Result<Self, SolveError> {
        let piece = |spec: &'a SetSpec, host: Host| -> Piece<'a> {
            let kind = match spec {
                SetSpec::Ifs(f) => {
                    let depth = params.depth_for(f, n).max(min_depth);
                    let cap = (f.map_count() as u64).saturating_pow(depth as u32);
                    let pool = (cap <= FULL_SCAN_LIMIT).then(|| {
                        (0..cap)
                            .map(|i| f.realize(&FractalAddress::from_index(i, depth, f.map_count())))
                            .collect()
                    });
                    PieceKind::Fractal { set: f, depth, pool }
                }
                SetSpec::Segment(seg) => match params.segment_grid {
                    Some(nodes) => PieceKind::Grid { seg, nodes },
                    None => PieceKind::Segment { seg },
                },
                SetSpec::Union(_) => unreachable!("unions are split into pieces"),
            };
            Piece { host, kind }
        };
        let pieces = match set {
            SetSpec::Union(u) => vec![piece(u.a1(), Host::A1), piece(u.a2(), Host::A2)],
            other => vec![piece(other, Host::Whole)],
        };
        let domain = Domain { pieces };
        if let Some(available) = domain.capacity() {
            if (n as u64) > available {
                return Err(SolveError::Infeasible { needed: n, available });
            }
        }
        Ok(domain)
    }

    /// Total number of sites; `None` if any piece is a continuum.
    pub fn capacity(&self) -> Option<u64> {
        self.pieces
            .iter()
            .map(Piece::capacity)
            .try_fold(0u64, |acc, c| c.map(|c| acc.saturating_add(c)))
    }

    pub fn piece_of_host(&self, host: Host) -> Option<usize> {
        self.pieces.iter().position(|p| p.host == host)
    }

    /// Converts a configuration to `(piece, site)` placements.
    pub fn placements(&self, config: &Configuration) -> Option<Vec<(usize, Site)>> {
        config
            .points
            .iter()
            .map(|p| {
                let piece = self.piece_of_host(p.host)?;
                Some((piece, self.pieces[piece].site_of(&p.intrinsic)?))
            })
            .collect()
    }

    pub fn config_point(&self, piece: usize, site: Site, coords: Point) -> ConfigPoint {
        let pc = &self.pieces[piece];
        ConfigPoint {
            coords,
            host: pc.host,
            intrinsic: pc.intrinsic(site),
        }
    }
}

/// Deepest fractal address in the configurations, for [`Domain::new`].
pub(crate) fn max_address_depth(configs: &[Configuration]) -> usize {
    configs
        .iter()
        .flat_map(|c| c.points.iter())
        .filter_map(|p| match &p.intrinsic {
            Intrinsic::Address(a) => Some(a.depth()),
            Intrinsic::Param(_) => None,
        })
        .max()
        .unwrap_or(0)
}
