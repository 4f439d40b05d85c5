//! Compact sets the solver works on: self-similar fractals generated by an
//! iterated function system, straight segments, and separated unions of two
//! such pieces.
//!
//! Every set is immutable once built and carries rigorous (ball-cover based)
//! bounds on its diameter, so that separation hypotheses are certified rather
//! than estimated from samples.

mod ifs;
mod presets;
mod schema;
mod segment;
mod similitude;
mod union;

pub use ifs::{Ball, FractalAddress, SelfSimilarSet};
pub use presets::{example_fractal, example_segment, example_union, preset, unit_segment, PRESETS};
pub use schema::{BallDef, MapDef, SetDef};
pub use segment::Segment;
pub use similitude::Similitude;
pub use union::{validate_union, UnionSet};

use thiserror::Error;

/// A point of ℝᵖ.
pub type Point = Vec<f64>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("similitude scale must lie in (0, 1), got {0}")]
    InvalidScale(f64),
    #[error("rotation is not orthogonal (max |QᵀQ - I| = {0:e})")]
    NotOrthogonal(f64),
    #[error("dimension mismatch: expected ambient dimension {expected}, got {got}")]
    AmbientMismatch { expected: usize, got: usize },
    #[error("an iterated function system needs at least two maps, got {0}")]
    TooFewMaps(usize),
    #[error("all maps must share one scale ratio (found {0} and {1})")]
    UnequalScales(f64, f64),
    #[error("outer ball is not mapped into itself by map {0}")]
    OuterBallNotInvariant(usize),
    #[error("first-level images of maps {0} and {1} overlap; strong separation fails")]
    NotSeparated(usize, usize),
    #[error("segment endpoints coincide")]
    DegenerateSegment,
    #[error("address symbol {symbol} out of range for {maps} maps")]
    AddressOutOfRange { symbol: usize, maps: usize },
    #[error("union pieces must be fractals or segments, not nested unions")]
    NestedUnion,
    #[error("union pieces have different dimensions ({0} and {1})")]
    DimensionMismatch(f64, f64),
    #[error(
        "separation condition fails: {which} diameter bound {diam:.6} is not below the separation bound {sep:.6} \
         (each piece must have diameter smaller than the distance between the pieces)"
    )]
    SeparationViolated {
        which: &'static str,
        diam: f64,
        sep: f64,
    },
    #[error("unknown preset '{0}'")]
    UnknownPreset(String),
}

/// Any of the supported compact sets.
#[derive(Debug, Clone)]
pub enum SetSpec {
    Ifs(SelfSimilarSet),
    Segment(Segment),
    Union(UnionSet),
}

impl SetSpec {
    pub fn from_def(def: &SetDef) -> Result<Self, GeometryError> {
        match def {
            SetDef::Ifs { maps, outer_ball } => {
                let maps = maps
                    .iter()
                    .map(MapDef::to_similitude)
                    .collect::<Result<Vec<_>, _>>()?;
                let set = match outer_ball {
                    Some(b) => SelfSimilarSet::with_outer_ball(
                        maps,
                        Ball {
                            center: b.center.clone(),
                            radius: b.radius,
                        },
                    )?,
                    None => SelfSimilarSet::new(maps)?,
                };
                Ok(SetSpec::Ifs(set))
            }
            SetDef::Segment { a, b } => Ok(SetSpec::Segment(Segment::new(a.clone(), b.clone())?)),
            SetDef::Union { a1, a2 } => {
                let a1 = SetSpec::from_def(a1)?;
                let a2 = SetSpec::from_def(a2)?;
                Ok(SetSpec::Union(validate_union(a1, a2)?))
            }
        }
    }

    /// Serializable definition this set was built from.
    pub fn definition(&self) -> SetDef {
        match self {
            SetSpec::Ifs(f) => f.definition(),
            SetSpec::Segment(s) => SetDef::Segment {
                a: s.a().to_vec(),
                b: s.b().to_vec(),
            },
            SetSpec::Union(u) => SetDef::Union {
                a1: Box::new(u.a1().definition()),
                a2: Box::new(u.a2().definition()),
            },
        }
    }

    /// Hex SHA-256 of the canonical JSON definition.
    pub fn content_hash(&self) -> String {
        self.definition().content_hash()
    }

    /// Hausdorff dimension `d`.
    pub fn dimension(&self) -> f64 {
        match self {
            SetSpec::Ifs(f) => f.dimension(),
            SetSpec::Segment(_) => 1.0,
            SetSpec::Union(u) => u.dimension(),
        }
    }

    pub fn ambient_dim(&self) -> usize {
        match self {
            SetSpec::Ifs(f) => f.ambient_dim(),
            SetSpec::Segment(s) => s.ambient_dim(),
            SetSpec::Union(u) => u.a1().ambient_dim(),
        }
    }

    /// Rigorous upper bound on the diameter.
    pub fn diam_upper(&self) -> f64 {
        match self {
            SetSpec::Ifs(f) => f.diam_upper(),
            SetSpec::Segment(s) => s.length(),
            SetSpec::Union(u) => {
                let (b1, b2) = (u.a1().cover(), u.a2().cover());
                let mut d = u.diam_upper_1().max(u.diam_upper_2());
                for x in &b1 {
                    for y in &b2 {
                        d = d.max(dist(&x.center, &y.center) + x.radius + y.radius);
                    }
                }
                d
            }
        }
    }

    pub fn is_union(&self) -> bool {
        matches!(self, SetSpec::Union(_))
    }

    /// Balls whose union contains the set; used for rigorous distance bounds.
    pub(crate) fn cover(&self) -> Vec<Ball> {
        match self {
            SetSpec::Ifs(f) => f.cover(),
            SetSpec::Segment(s) => vec![Ball {
                center: s.point(0.5),
                radius: 0.5 * s.length(),
            }],
            SetSpec::Union(u) => {
                let mut c = u.a1().cover();
                c.extend(u.a2().cover());
                c
            }
        }
    }
}

pub(crate) fn dist2(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum()
}

pub(crate) fn dist(x: &[f64], y: &[f64]) -> f64 {
    dist2(x, y).sqrt()
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

fn sub(x: &[f64], y: &[f64]) -> Point {
    x.iter().zip(y).map(|(a, b)| a - b).collect()
}
