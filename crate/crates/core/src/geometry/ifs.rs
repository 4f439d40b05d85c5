use serde::{Deserialize, Serialize};

use super::{dist, GeometryError, MapDef, Point, SetDef, Similitude};

/// Largest number of balls used when covering an attractor for diameter and
/// separation bounds.
const COVER_LIMIT: usize = 1024;

/// Outward rounding applied to bounds computed in floating point.
pub(crate) const BOUND_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: Point,
    pub radius: f64,
}

/// Finite word over the map indices of an IFS. Symbols are zero-based map
/// indices; `[1, 1]` denotes `φ₂ ∘ φ₂` in one-based notation.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FractalAddress(pub Vec<u16>);

impl FractalAddress {
    pub fn new(word: Vec<u16>, maps: usize) -> Result<Self, GeometryError> {
        if let Some(&s) = word.iter().find(|&&s| s as usize >= maps) {
            return Err(GeometryError::AddressOutOfRange {
                symbol: s as usize,
                maps,
            });
        }
        Ok(FractalAddress(word))
    }

    pub fn depth(&self) -> usize {
        self.0.len()
    }

    /// Address of depth `depth` whose base-`maps` digits (most significant
    /// first) spell `index`.
    pub fn from_index(mut index: u64, depth: usize, maps: usize) -> Self {
        let mut word = vec![0u16; depth];
        for slot in word.iter_mut().rev() {
            *slot = (index % maps as u64) as u16;
            index /= maps as u64;
        }
        FractalAddress(word)
    }

    pub fn index(&self, maps: usize) -> u64 {
        self.0
            .iter()
            .fold(0u64, |acc, &s| acc * maps as u64 + s as u64)
    }
}

/// Attractor of `K ≥ 2` similitudes sharing one ratio `L`, with pairwise
/// disjoint first-level images.
#[derive(Debug, Clone)]
pub struct SelfSimilarSet {
    maps: Vec<Similitude>,
    ratio: f64,
    dimension: f64,
    outer_ball: Ball,
    user_ball: bool,
    anchor: Point,
    cover: Vec<Ball>,
    diam_upper: f64,
}

impl SelfSimilarSet {
    /// Builds the set, deriving an invariant outer ball from the maps' fixed
    /// points.
    pub fn new(maps: Vec<Similitude>) -> Result<Self, GeometryError> {
        Self::check_maps(&maps)?;
        let p = maps[0].ambient_dim();
        let ratio = maps[0].scale();
        let fixed: Vec<Point> = maps.iter().map(|m| m.fixed_point(&vec![0.0; p])).collect();
        let mut center = vec![0.0; p];
        for f in &fixed {
            for (c, x) in center.iter_mut().zip(f) {
                *c += x / fixed.len() as f64;
            }
        }
        // |φ(c) - c| + L r ≤ r  ⇔  r ≥ |φ(c) - c| / (1 - L)
        let radius = maps
            .iter()
            .map(|m| dist(&m.apply(&center), &center))
            .fold(0.0, f64::max)
            / (1.0 - ratio)
            * (1.0 + BOUND_SLACK);
        Self::build(maps, Ball { center, radius }, false)
    }

    /// Builds the set around a caller-supplied ball, which must satisfy
    /// `φᵢ(B) ⊆ B` for every map.
    pub fn with_outer_ball(maps: Vec<Similitude>, ball: Ball) -> Result<Self, GeometryError> {
        Self::check_maps(&maps)?;
        let p = maps[0].ambient_dim();
        if ball.center.len() != p {
            return Err(GeometryError::AmbientMismatch {
                expected: p,
                got: ball.center.len(),
            });
        }
        for (i, m) in maps.iter().enumerate() {
            let reach = dist(&m.apply(&ball.center), &ball.center) + m.scale() * ball.radius;
            if !(ball.radius > 0.0) || reach > ball.radius * (1.0 + BOUND_SLACK) {
                return Err(GeometryError::OuterBallNotInvariant(i));
            }
        }
        Self::build(maps, ball, true)
    }

    fn check_maps(maps: &[Similitude]) -> Result<(), GeometryError> {
        if maps.len() < 2 {
            return Err(GeometryError::TooFewMaps(maps.len()));
        }
        let p = maps[0].ambient_dim();
        let l = maps[0].scale();
        for m in &maps[1..] {
            if m.ambient_dim() != p {
                return Err(GeometryError::AmbientMismatch {
                    expected: p,
                    got: m.ambient_dim(),
                });
            }
            if (m.scale() - l).abs() > 1e-14 * l {
                return Err(GeometryError::UnequalScales(l, m.scale()));
            }
        }
        Ok(())
    }

    fn build(maps: Vec<Similitude>, outer_ball: Ball, user_ball: bool) -> Result<Self, GeometryError> {
        let ratio = maps[0].scale();
        let k = maps.len() as f64;
        let dimension = k.ln() / (1.0 / ratio).ln();

        // Strong separation at level one via the images of the outer ball.
        let images: Vec<Point> = maps.iter().map(|m| m.apply(&outer_ball.center)).collect();
        for i in 0..maps.len() {
            for j in i + 1..maps.len() {
                if dist(&images[i], &images[j]) <= 2.0 * ratio * outer_ball.radius {
                    return Err(GeometryError::NotSeparated(i, j));
                }
            }
        }

        let anchor = maps[0].fixed_point(&outer_ball.center);
        let mut set = SelfSimilarSet {
            maps,
            ratio,
            dimension,
            outer_ball,
            user_ball,
            anchor,
            cover: Vec::new(),
            diam_upper: 0.0,
        };
        let mut depth = 1;
        while set.maps.len().pow(depth as u32 + 1) <= COVER_LIMIT {
            depth += 1;
        }
        set.cover = set.level_balls(depth);
        let mut diam: f64 = 0.0;
        for (i, a) in set.cover.iter().enumerate() {
            for b in &set.cover[i + 1..] {
                diam = diam.max(dist(&a.center, &b.center) + a.radius + b.radius);
            }
        }
        set.diam_upper = (diam * (1.0 + BOUND_SLACK)).min(2.0 * set.outer_ball.radius);
        Ok(set)
    }

    pub fn maps(&self) -> &[Similitude] {
        &self.maps
    }

    pub fn map_count(&self) -> usize {
        self.maps.len()
    }

    /// Common contraction ratio `L`.
    pub fn ratio(&self) -> f64 {
        self.ratio
    }

    /// Solution of `K Lᵈ = 1`.
    pub fn dimension(&self) -> f64 {
        self.dimension
    }

    pub fn ambient_dim(&self) -> usize {
        self.maps[0].ambient_dim()
    }

    pub fn outer_ball(&self) -> &Ball {
        &self.outer_ball
    }

    /// Fixed point of the first map; the representative of every address.
    pub fn anchor(&self) -> &[f64] {
        &self.anchor
    }

    pub fn diam_upper(&self) -> f64 {
        self.diam_upper
    }

    pub(crate) fn cover(&self) -> Vec<Ball> {
        self.cover.clone()
    }

    /// `φ_{w₁} ∘ … ∘ φ_{w_m}(anchor)`.
    pub fn realize_from(&self, addr: &FractalAddress, anchor: &[f64]) -> Point {
        let mut x = anchor.to_vec();
        for &s in addr.0.iter().rev() {
            x = self.maps[s as usize].apply(&x);
        }
        x
    }

    /// Realizes `addr` from the default anchor.
    pub fn realize(&self, addr: &FractalAddress) -> Point {
        self.realize_from(addr, &self.anchor)
    }

    /// Images of the outer ball under every word of length `depth`, in
    /// address-index order.
    pub fn level_balls(&self, depth: usize) -> Vec<Ball> {
        let mut balls = vec![self.outer_ball.clone()];
        for _ in 0..depth {
            balls = balls
                .iter()
                .flat_map(|b| {
                    self.maps.iter().map(move |m| Ball {
                        center: m.apply(&b.center),
                        radius: b.radius * self.ratio,
                    })
                })
                .collect();
        }
        // The recursion above applies the new map innermost; reorder so that
        // index i corresponds to FractalAddress::from_index(i).
        let k = self.maps.len();
        let mut ordered = balls.clone();
        for (i, ball) in balls.into_iter().enumerate() {
            let mut word = FractalAddress::from_index(i as u64, depth, k);
            word.0.reverse();
            ordered[word.index(k) as usize] = ball;
        }
        ordered
    }

    /// Smallest gap between distinct first-level images of the outer ball.
    /// Distinct depth-`m` addresses realize points at least
    /// `gap · L^(m-1)` apart.
    pub fn level1_gap(&self) -> f64 {
        let c = &self.outer_ball.center;
        let images: Vec<Point> = self.maps.iter().map(|m| m.apply(c)).collect();
        let mut gap = f64::INFINITY;
        for i in 0..images.len() {
            for j in i + 1..images.len() {
                gap = gap.min(dist(&images[i], &images[j]) - 2.0 * self.ratio * self.outer_ball.radius);
            }
        }
        gap
    }

    pub(crate) fn definition(&self) -> SetDef {
        SetDef::Ifs {
            maps: self.maps.iter().map(MapDef::from_similitude).collect(),
            outer_ball: self.user_ball.then(|| super::BallDef {
                center: self.outer_ball.center.clone(),
                radius: self.outer_ball.radius,
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::example_fractal;

    fn cantor() -> SelfSimilarSet {
        SelfSimilarSet::new(vec![
            Similitude::new(1.0 / 3.0, vec![0.0]).unwrap(),
            Similitude::new(1.0 / 3.0, vec![2.0 / 3.0]).unwrap(),
        ])
        .unwrap()
    }

    #[test]
    fn dimension_solves_moran_equation() {
        let f = example_fractal();
        assert!((f.dimension() - 1.0).abs() < 1e-12);
        let c = cantor();
        assert!((c.dimension() - 2f64.ln() / 3f64.ln()).abs() < 1e-12);
        assert!((c.dimension() - 0.630930).abs() < 1e-6);
        for set in [&f, &c] {
            let k = set.map_count() as f64;
            assert!((k * set.ratio().powf(set.dimension()) - 1.0).abs() < 1e-12);
        }
        let third = SelfSimilarSet::new(
            (0..3)
                .map(|i| Similitude::new(1.0 / 3.0, vec![i as f64 / 3.0]).unwrap())
                .collect(),
        );
        // Three thirds of [0, 1] touch: not strongly separated.
        assert!(matches!(third, Err(GeometryError::NotSeparated(..))));
    }

    #[test]
    fn dimension_ignores_rotation() {
        let q = |th: f64| vec![vec![th.cos(), -th.sin()], vec![th.sin(), th.cos()]];
        let t = [[0.0, 0.0], [0.75, 0.0], [0.0, 0.75], [0.75, 0.75]];
        let rotated: Vec<_> = t
            .iter()
            .enumerate()
            .map(|(i, t)| Similitude::with_rotation(0.25, q(0.3 * i as f64), t.to_vec()).unwrap())
            .collect();
        let set = SelfSimilarSet::new(rotated).unwrap();
        assert!((set.dimension() - example_fractal().dimension()).abs() < 1e-15);
    }

    #[test]
    fn construction_errors() {
        assert!(matches!(
            SelfSimilarSet::new(vec![Similitude::new(0.5, vec![0.0]).unwrap()]),
            Err(GeometryError::TooFewMaps(1))
        ));
        assert!(matches!(
            SelfSimilarSet::new(vec![
                Similitude::new(0.25, vec![0.0]).unwrap(),
                Similitude::new(0.3, vec![0.7]).unwrap()
            ]),
            Err(GeometryError::UnequalScales(..))
        ));
        let bad_ball = Ball {
            center: vec![0.5],
            radius: 0.1,
        };
        assert!(matches!(
            SelfSimilarSet::with_outer_ball(cantor().maps().to_vec(), bad_ball),
            Err(GeometryError::OuterBallNotInvariant(_))
        ));
    }

    #[test]
    fn realizes_example_addresses() {
        let f = example_fractal();
        assert_eq!(f.anchor(), &[0.0, 0.0]);
        let p = f.realize(&FractalAddress(vec![1]));
        assert_eq!(p, vec![0.75, 0.0]);
        let p = f.realize(&FractalAddress(vec![1, 1]));
        assert_eq!(p, vec![15.0 / 16.0, 0.0]);
        assert_eq!(f.realize(&FractalAddress(vec![])), vec![0.0, 0.0]);
    }

    #[test]
    fn address_index_roundtrip() {
        for i in 0..64u64 {
            let a = FractalAddress::from_index(i, 3, 4);
            assert_eq!(a.index(4), i);
        }
        assert!(FractalAddress::new(vec![0, 4], 4).is_err());
    }

    #[test]
    fn distinct_addresses_are_separated() {
        for set in [example_fractal(), cantor()] {
            let k = set.map_count();
            let gap = set.level1_gap();
            assert!(gap > 0.0);
            for m in 1..=3 {
                let n = k.pow(m as u32) as u64;
                let pts: Vec<Point> = (0..n)
                    .map(|i| set.realize(&FractalAddress::from_index(i, m, k)))
                    .collect();
                let floor = gap * set.ratio().powi(m as i32 - 1);
                for i in 0..pts.len() {
                    for j in i + 1..pts.len() {
                        assert!(dist(&pts[i], &pts[j]) >= floor * (1.0 - 1e-12));
                    }
                }
            }
        }
    }

    #[test]
    fn composition_is_associative() {
        let f = example_fractal();
        let w = FractalAddress(vec![2, 3]);
        let v = FractalAddress(vec![1, 0, 3]);
        let mut wv = w.0.clone();
        wv.extend(&v.0);
        let direct = f.realize(&FractalAddress(wv));
        let nested = f.realize_from(&w, &f.realize(&v));
        assert!(dist(&direct, &nested) < 1e-12);
    }

    #[test]
    fn realized_points_lie_in_level_balls() {
        let f = example_fractal();
        for m in 1..=4 {
            let balls = f.level_balls(m);
            for i in 0..balls.len() as u64 {
                let addr = FractalAddress::from_index(i, m, 4);
                let p = f.realize(&addr);
                let b = &balls[i as usize];
                assert!(dist(&p, &b.center) <= b.radius * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn example_outer_ball_and_diameter() {
        let f = example_fractal();
        let b = f.outer_ball();
        assert!((b.center[0] - 0.5).abs() < 1e-12 && (b.center[1] - 0.5).abs() < 1e-12);
        assert!((b.radius - 0.5f64.sqrt()).abs() < 1e-9);
        // The true diameter is √2 (corners (0,0) and (1,1)).
        assert!(f.diam_upper() >= 2f64.sqrt());
        assert!(f.diam_upper() <= 2f64.sqrt() * (1.0 + 1e-9));
    }
}
