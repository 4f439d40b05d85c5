use super::{dist2, GeometryError, Point};

const ORTHOGONALITY_TOL: f64 = 1e-12;

/// `x ↦ scale · Q x + translation` with `Q` orthogonal.
#[derive(Debug, Clone, PartialEq)]
pub struct Similitude {
    scale: f64,
    rotation: Option<Vec<Vec<f64>>>,
    translation: Point,
}

impl Similitude {
    pub fn new(scale: f64, translation: Point) -> Result<Self, GeometryError> {
        if !(scale > 0.0 && scale < 1.0) {
            return Err(GeometryError::InvalidScale(scale));
        }
        Ok(Similitude {
            scale,
            rotation: None,
            translation,
        })
    }

    pub fn with_rotation(
        scale: f64,
        rotation: Vec<Vec<f64>>,
        translation: Point,
    ) -> Result<Self, GeometryError> {
        let mut map = Similitude::new(scale, translation)?;
        let p = map.translation.len();
        if rotation.len() != p {
            return Err(GeometryError::AmbientMismatch {
                expected: p,
                got: rotation.len(),
            });
        }
        if let Some(row) = rotation.iter().find(|r| r.len() != p) {
            return Err(GeometryError::AmbientMismatch {
                expected: p,
                got: row.len(),
            });
        }
        let mut worst: f64 = 0.0;
        for i in 0..p {
            for j in 0..p {
                let qtq: f64 = (0..p).map(|k| rotation[k][i] * rotation[k][j]).sum();
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((qtq - target).abs());
            }
        }
        if !(worst < ORTHOGONALITY_TOL) {
            return Err(GeometryError::NotOrthogonal(worst));
        }
        map.rotation = Some(rotation);
        Ok(map)
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn rotation(&self) -> Option<&[Vec<f64>]> {
        self.rotation.as_deref()
    }

    pub fn translation(&self) -> &[f64] {
        &self.translation
    }

    pub fn ambient_dim(&self) -> usize {
        self.translation.len()
    }

    pub fn apply(&self, x: &[f64]) -> Point {
        match &self.rotation {
            None => x
                .iter()
                .zip(&self.translation)
                .map(|(xi, ti)| self.scale * xi + ti)
                .collect(),
            Some(q) => q
                .iter()
                .zip(&self.translation)
                .map(|(row, ti)| {
                    self.scale * row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + ti
                })
                .collect(),
        }
    }

    /// Unique fixed point: the solution of `(I - scale·Q) x = translation`,
    /// polished by iterating the map until the displacement drops below 1e-14.
    pub fn fixed_point(&self, start: &[f64]) -> Point {
        let p = self.ambient_dim();
        let mut x = match self.solve_fixed(p) {
            Some(x) => x,
            None => start.to_vec(),
        };
        for _ in 0..10_000 {
            let next = self.apply(&x);
            let step = dist2(&next, &x).sqrt();
            if step < 1e-14 {
                break;
            }
            x = next;
        }
        x
    }

    fn solve_fixed(&self, p: usize) -> Option<Point> {
        let mut m: Vec<Vec<f64>> = (0..p)
            .map(|i| {
                let mut row: Vec<f64> = (0..p)
                    .map(|j| {
                        let q = match &self.rotation {
                            Some(q) => q[i][j],
                            None if i == j => 1.0,
                            None => 0.0,
                        };
                        let id = if i == j { 1.0 } else { 0.0 };
                        id - self.scale * q
                    })
                    .collect();
                row.push(self.translation[i]);
                row
            })
            .collect();
        // Gaussian elimination with partial pivoting.
        for col in 0..p {
            let pivot = (col..p).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))?;
            if m[pivot][col].abs() < 1e-300 {
                return None;
            }
            m.swap(col, pivot);
            for r in 0..p {
                if r != col {
                    let f = m[r][col] / m[col][col];
                    if f != 0.0 {
                        for c in col..=p {
                            m[r][c] -= f * m[col][c];
                        }
                    }
                }
            }
        }
        Some((0..p).map(|i| m[i][p] / m[i][i]).collect())
    }
}
