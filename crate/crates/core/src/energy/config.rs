use serde::{Deserialize, Serialize};

use super::EnergyError;
use crate::geometry::{dist, FractalAddress, Point, SetSpec};

/// Which piece of a set a point lives on. Points on a single (non-union) set
/// use [`Host::Whole`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Host {
    A1,
    A2,
    #[serde(rename = "whole")]
    Whole,
}

impl Host {
    /// Index of the piece within a union (`A₁ = 0`, `A₂ = 1`); `Whole` maps to 0.
    pub fn piece_index(self) -> usize {
        match self {
            Host::A2 => 1,
            _ => 0,
        }
    }
}

/// Coordinate of a point intrinsic to its host piece.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Intrinsic {
    Address(FractalAddress),
    Param(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigPoint {
    pub coords: Point,
    pub host: Host,
    pub intrinsic: Intrinsic,
}

impl AsRef<[f64]> for ConfigPoint {
    fn as_ref(&self) -> &[f64] {
        &self.coords
    }
}

/// `N` points of a set together with the Riesz exponent they were computed for.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Configuration {
    pub s: f64,
    pub points: Vec<ConfigPoint>,
}

/// Piece of `set` that hosts points tagged `host`, if the tag is meaningful.
pub fn host_piece(set: &SetSpec, host: Host) -> Option<&SetSpec> {
    match (set, host) {
        (SetSpec::Union(u), Host::A1) => Some(u.a1()),
        (SetSpec::Union(u), Host::A2) => Some(u.a2()),
        (SetSpec::Union(_), Host::Whole) => None,
        (_, Host::Whole) => Some(set),
        _ => None,
    }
}

/// Coordinates of an intrinsic coordinate on a (non-union) piece.
pub fn realize_intrinsic(piece: &SetSpec, intrinsic: &Intrinsic) -> Option<Point> {
    match (piece, intrinsic) {
        (SetSpec::Ifs(f), Intrinsic::Address(a)) => {
            FractalAddress::new(a.0.clone(), f.map_count()).ok()?;
            Some(f.realize(a))
        }
        (SetSpec::Segment(s), Intrinsic::Param(t)) if (0.0..=1.0).contains(t) => Some(s.point(*t)),
        _ => None,
    }
}

impl Configuration {
    pub fn empty(s: f64) -> Self {
        Configuration { s, points: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Number of points hosted on `A₁`. For single sets every point counts.
    pub fn count_a1(&self) -> usize {
        self.points.iter().filter(|p| p.host != Host::A2).count()
    }

    pub fn coords(&self) -> Vec<&[f64]> {
        self.points.iter().map(|p| p.coords.as_slice()).collect()
    }

    /// Points hosted on `host`, in order.
    pub fn part(&self, host: Host) -> Configuration {
        Configuration {
            s: self.s,
            points: self.points.iter().filter(|p| p.host == host).cloned().collect(),
        }
    }

    /// Checks host tags against `set`, re-realizes every intrinsic coordinate
    /// (to 1e-12, scaled by the set diameter) and checks distinctness.
    pub fn validate(&self, set: &SetSpec) -> Result<(), EnergyError> {
        let scale = set.diam_upper().max(1.0);
        for (i, p) in self.points.iter().enumerate() {
            let piece = host_piece(set, p.host).ok_or(EnergyError::BadPoint(i))?;
            let at = realize_intrinsic(piece, &p.intrinsic).ok_or(EnergyError::BadPoint(i))?;
            if at.len() != p.coords.len() || dist(&at, &p.coords) > 1e-12 * scale {
                return Err(EnergyError::BadPoint(i));
            }
        }
        if self.len() >= 2 {
            super::riesz_energy(&self.points, self.s)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::example_union;

    #[test]
    fn json_shape() {
        let c = Configuration {
            s: 3.0,
            points: vec![
                ConfigPoint {
                    coords: vec![0.75, 0.0],
                    host: Host::A1,
                    intrinsic: Intrinsic::Address(FractalAddress(vec![1])),
                },
                ConfigPoint {
                    coords: vec![3.5, 0.0],
                    host: Host::A2,
                    intrinsic: Intrinsic::Param(0.5),
                },
            ],
        };
        let json = serde_json::to_value(&c).unwrap();
        assert_eq!(json["points"][0]["intrinsic"]["address"][0], 1);
        assert_eq!(json["points"][1]["host"], "A2");
        assert_eq!(json["points"][1]["intrinsic"]["param"], 0.5);
        let set = SetSpec::Union(example_union());
        c.validate(&set).unwrap();

        let mut moved = c.clone();
        moved.points[1].coords[0] += 1e-6;
        assert!(matches!(moved.validate(&set), Err(EnergyError::BadPoint(1))));
        let mut wrong_host = c.clone();
        wrong_host.points[0].host = Host::Whole;
        assert!(wrong_host.validate(&set).is_err());
        assert_eq!(c.count_a1(), 1);
    }
}
