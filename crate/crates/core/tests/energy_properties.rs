mod common;

use common::{naive_energy, random_union_config, rng};
use proptest::prelude::*;
use rieszlab::energy::{energy_gradient, riesz_energy, Intrinsic};
use rieszlab::geometry::SetSpec;

fn cloud() -> impl Strategy<Value = (Vec<Vec<f64>>, f64)> {
    (1usize..=3, 2usize..=24, 0.5f64..6.0).prop_flat_map(|(dim, n, s)| {
        (
            proptest::collection::vec(proptest::collection::vec(-2.0f64..2.0, dim), n),
            Just(s),
        )
    })
}

fn separated(points: &[Vec<f64>]) -> bool {
    points.iter().enumerate().all(|(i, x)| {
        points[..i]
            .iter()
            .all(|y| x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() > 1e-6)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn matches_direct_summation((points, s) in cloud()) {
        prop_assume!(separated(&points));
        let e = riesz_energy(&points, s).unwrap().total;
        let oracle = naive_energy(&points, s);
        prop_assert!((e - oracle).abs() <= 1e-12 * oracle);
    }

    #[test]
    fn translation_invariance((points, s) in cloud(), shift in -5.0f64..5.0) {
        prop_assume!(separated(&points));
        let moved: Vec<Vec<f64>> = points.iter().map(|p| p.iter().map(|x| x + shift).collect()).collect();
        let a = riesz_energy(&points, s).unwrap().total;
        let b = riesz_energy(&moved, s).unwrap().total;
        prop_assert!((a - b).abs() <= 1e-9 * a, "{a} vs {b}");
    }

    #[test]
    fn scaling_covariance((points, s) in cloud(), lambda in 0.1f64..10.0) {
        prop_assume!(separated(&points));
        let scaled: Vec<Vec<f64>> = points.iter().map(|p| p.iter().map(|x| x * lambda).collect()).collect();
        let a = riesz_energy(&points, s).unwrap().total;
        let b = riesz_energy(&scaled, s).unwrap().total;
        let expected = lambda.powf(-s) * a;
        prop_assert!((b - expected).abs() <= 1e-11 * expected);
    }

    #[test]
    fn point_energies_sum_to_total((points, s) in cloud()) {
        prop_assume!(separated(&points));
        let r = riesz_energy(&points, s).unwrap();
        let sum: f64 = r.per_point.iter().sum();
        prop_assert!((sum - r.total).abs() <= 1e-12 * r.total);
    }
}

#[test]
fn gradient_matches_central_differences() {
    let mut rng = rng(11);
    let mut checked = 0;
    for case in 0..150 {
        let s = [1.5, 2.0, 2.5, 3.0, 4.0][case % 5];
        let (set, config) = random_union_config(&mut rng, 3 + case % 5, 2 + case % 7, 3, s);
        let SetSpec::Union(u) = &set else { unreachable!() };
        let SetSpec::Segment(seg) = u.a2() else { unreachable!() };
        let grad = energy_gradient(&config, &set, s).unwrap();
        for (j, g) in grad.iter().enumerate() {
            let Some(g) = g else { continue };
            let Intrinsic::Param(t) = config.points[j].intrinsic else { unreachable!() };
            // Step scaled to the nearest neighbour keeps truncation error small.
            let rmin = config
                .points
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != j)
                .map(|(_, p)| {
                    let x = &config.points[j].coords;
                    x.iter().zip(&p.coords).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
                })
                .fold(f64::INFINITY, f64::min);
            let h = 1e-3 * rmin / seg.length();
            let at = |t: f64| {
                let mut pts: Vec<Vec<f64>> = config.points.iter().map(|p| p.coords.clone()).collect();
                pts[j] = seg.point(t);
                naive_energy(&pts, s)
            };
            // Fourth-order central difference.
            let fd = (8.0 * (at(t + h) - at(t - h)) - (at(t + 2.0 * h) - at(t - 2.0 * h))) / (12.0 * h);
            let scale = g.abs().max(1e-6 * naive_energy(&config.coords().iter().map(|c| c.to_vec()).collect::<Vec<_>>(), s));
            assert!((fd - g).abs() <= 1e-5 * scale, "case {case}, point {j}: {g} vs {fd}");
            checked += 1;
        }
    }
    assert!(checked >= 100);
}
