use super::ifs::BOUND_SLACK;
use super::{dist, GeometryError, SetSpec};

/// Disjoint union `A₁ ∪ A₂` of two pieces of equal dimension, each with
/// diameter strictly below the distance between them.
#[derive(Debug, Clone)]
pub struct UnionSet {
    a1: Box<SetSpec>,
    a2: Box<SetSpec>,
    dimension: f64,
    sep_lower: f64,
    diam_upper_1: f64,
    diam_upper_2: f64,
}

impl UnionSet {
    pub fn a1(&self) -> &SetSpec {
        &self.a1
    }

    pub fn a2(&self) -> &SetSpec {
        &self.a2
    }

    /// Piece `0` is `A₁`, piece `1` is `A₂`.
    pub fn piece(&self, i: usize) -> &SetSpec {
        if i == 0 {
            &self.a1
        } else {
            &self.a2
        }
    }

    pub fn dimension(&self) -> f64 {
        self.dimension
    }

    /// Rigorous lower bound on `dist(A₁, A₂)`.
    pub fn sep_lower(&self) -> f64 {
        self.sep_lower
    }

    pub fn diam_upper_1(&self) -> f64 {
        self.diam_upper_1
    }

    pub fn diam_upper_2(&self) -> f64 {
        self.diam_upper_2
    }
}

/// Lower bound on the distance between two (non-union) pieces.
fn separation_lower(a: &SetSpec, b: &SetSpec) -> f64 {
    let raw = match (a, b) {
        (SetSpec::Segment(s), SetSpec::Segment(t)) => s.distance_to_segment(t),
        (SetSpec::Segment(s), other) | (other, SetSpec::Segment(s)) => other
            .cover()
            .iter()
            .map(|ball| s.distance_to_point(&ball.center) - ball.radius)
            .fold(f64::INFINITY, f64::min),
        _ => {
            let (ca, cb) = (a.cover(), b.cover());
            let mut best = f64::INFINITY;
            for x in &ca {
                for y in &cb {
                    best = best.min(dist(&x.center, &y.center) - x.radius - y.radius);
                }
            }
            best
        }
    };
    (raw * (1.0 - BOUND_SLACK)).max(0.0)
}

/// Certifies that `a1` and `a2` form a separated union: equal dimension and
/// both diameter bounds strictly below the separation bound.
pub fn validate_union(a1: SetSpec, a2: SetSpec) -> Result<UnionSet, GeometryError> {
    if a1.is_union() || a2.is_union() {
        return Err(GeometryError::NestedUnion);
    }
    if a1.ambient_dim() != a2.ambient_dim() {
        return Err(GeometryError::AmbientMismatch {
            expected: a1.ambient_dim(),
            got: a2.ambient_dim(),
        });
    }
    let (d1, d2) = (a1.dimension(), a2.dimension());
    if (d1 - d2).abs() > 1e-12 {
        return Err(GeometryError::DimensionMismatch(d1, d2));
    }
    let sep_lower = separation_lower(&a1, &a2);
    let diam_upper_1 = a1.diam_upper();
    let diam_upper_2 = a2.diam_upper();
    for (which, diam) in [("A1", diam_upper_1), ("A2", diam_upper_2)] {
        if !(diam < sep_lower) {
            return Err(GeometryError::SeparationViolated {
                which,
                diam,
                sep: sep_lower,
            });
        }
    }
    Ok(UnionSet {
        a1: Box::new(a1),
        a2: Box::new(a2),
        dimension: d1,
        sep_lower,
        diam_upper_1,
        diam_upper_2,
    })
}
