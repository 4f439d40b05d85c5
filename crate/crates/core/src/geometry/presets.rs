use super::{validate_union, GeometryError, Segment, SelfSimilarSet, SetSpec, Similitude, UnionSet};

/// Names accepted by [`preset`].
pub const PRESETS: &[&str] = &["example-union", "example-fractal", "example-segment", "unit-segment"];

/// Four quarter-scale copies of the unit square's corners: the attractor of
/// `x/4 + t` for `t ∈ {(0,0), (3/4,0), (0,3/4), (3/4,3/4)}`. Dimension 1.
pub fn example_fractal() -> SelfSimilarSet {
    let maps = [[0.0, 0.0], [0.75, 0.0], [0.0, 0.75], [0.75, 0.75]]
        .iter()
        .map(|t| Similitude::new(0.25, t.to_vec()).expect("valid preset map"))
        .collect();
    SelfSimilarSet::new(maps).expect("valid preset fractal")
}

/// `[3, 4] × {0}`.
pub fn example_segment() -> Segment {
    Segment::new(vec![3.0, 0.0], vec![4.0, 0.0]).expect("valid preset segment")
}

/// [`example_fractal`] ∪ [`example_segment`].
pub fn example_union() -> UnionSet {
    validate_union(SetSpec::Ifs(example_fractal()), SetSpec::Segment(example_segment()))
        .expect("preset union is separated")
}

/// `[0, 1] ⊂ ℝ`.
pub fn unit_segment() -> Segment {
    Segment::new(vec![0.0], vec![1.0]).expect("valid preset segment")
}

pub fn preset(name: &str) -> Result<SetSpec, GeometryError> {
    Ok(match name {
        "example-union" => SetSpec::Union(example_union()),
        "example-fractal" => SetSpec::Ifs(example_fractal()),
        "example-segment" => SetSpec::Segment(example_segment()),
        "unit-segment" => SetSpec::Segment(unit_segment()),
        other => return Err(GeometryError::UnknownPreset(other.to_string())),
    })
}
