use super::{dist, dot, sub, GeometryError, Point};

/// Straight segment `{a + t (b - a) : t ∈ [0, 1]}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    a: Point,
    b: Point,
}

impl Segment {
    pub fn new(a: Point, b: Point) -> Result<Self, GeometryError> {
        if a.len() != b.len() {
            return Err(GeometryError::AmbientMismatch {
                expected: a.len(),
                got: b.len(),
            });
        }
        if !(dist(&a, &b) > 0.0) {
            return Err(GeometryError::DegenerateSegment);
        }
        Ok(Segment { a, b })
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn ambient_dim(&self) -> usize {
        self.a.len()
    }

    pub fn length(&self) -> f64 {
        dist(&self.a, &self.b)
    }

    /// `b - a`: the derivative of the parametrization.
    pub fn direction(&self) -> Point {
        sub(&self.b, &self.a)
    }

    pub fn point(&self, t: f64) -> Point {
        self.a
            .iter()
            .zip(&self.b)
            .map(|(a, b)| a + t * (b - a))
            .collect()
    }

    /// Parameter of the closest point to `x`.
    pub fn project(&self, x: &[f64]) -> f64 {
        let d = self.direction();
        (dot(&sub(x, &self.a), &d) / dot(&d, &d)).clamp(0.0, 1.0)
    }

    pub fn distance_to_point(&self, x: &[f64]) -> f64 {
        dist(&self.point(self.project(x)), x)
    }

    /// Distance between two segments in ℝᵖ.
    pub fn distance_to_segment(&self, other: &Segment) -> f64 {
        let d1 = self.direction();
        let d2 = other.direction();
        let r = sub(&self.a, &other.a);
        let a = dot(&d1, &d1);
        let e = dot(&d2, &d2);
        let f = dot(&d2, &r);
        let c = dot(&d1, &r);
        let b = dot(&d1, &d2);
        let denom = a * e - b * b;
        let mut s = if denom > 1e-14 * a * e {
            ((b * f - c * e) / denom).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let mut t = (b * s + f) / e;
        if t < 0.0 {
            t = 0.0;
            s = (-c / a).clamp(0.0, 1.0);
        } else if t > 1.0 {
            t = 1.0;
            s = ((b - c) / a).clamp(0.0, 1.0);
        }
        let direct = dist(&self.point(s), &other.point(t));
        // Endpoint distances guard the parallel case.
        [
            direct,
            other.distance_to_point(&self.a),
            other.distance_to_point(&self.b),
            self.distance_to_point(&other.a),
            self.distance_to_point(&other.b),
        ]
        .into_iter()
        .fold(f64::INFINITY, f64::min)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parametrization() {
        let s = Segment::new(vec![3.0, 0.0], vec![4.0, 0.0]).unwrap();
        assert_eq!(s.point(0.5), vec![3.5, 0.0]);
        assert_eq!(s.length(), 1.0);
        assert!(Segment::new(vec![1.0, 1.0], vec![1.0, 1.0]).is_err());
    }

    #[test]
    fn segment_distances() {
        let s = Segment::new(vec![0.0, 0.0], vec![1.0, 0.0]).unwrap();
        let parallel = Segment::new(vec![0.5, 2.0], vec![3.0, 2.0]).unwrap();
        assert!((s.distance_to_segment(&parallel) - 2.0).abs() < 1e-15);
        let collinear = Segment::new(vec![1.5, 0.0], vec![2.5, 0.0]).unwrap();
        assert!((s.distance_to_segment(&collinear) - 0.5).abs() < 1e-15);
        let crossing = Segment::new(vec![0.5, -1.0], vec![0.5, 1.0]).unwrap();
        assert!(s.distance_to_segment(&crossing) < 1e-15);
        let skew = Segment::new(vec![0.5, 1.0, 1.0], vec![0.5, -1.0, 1.0]).unwrap();
        let s3 = Segment::new(vec![0.0, 0.0, 0.0], vec![1.0, 0.0, 0.0]).unwrap();
        assert!((s3.distance_to_segment(&skew) - 1.0).abs() < 1e-15);
    }
}
