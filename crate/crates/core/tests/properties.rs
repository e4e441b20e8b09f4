//! Randomized invariants.

use proptest::prelude::*;

use starpinch::identities::{gauss_algebraic_surface, hsiung_minkowski_residual};
use starpinch::quadrature::{PairedSampling, SampledSurface, SphericalRule};
use starpinch::spaceform::{geodesic_distance, AmbientPoint};
use starpinch::surface::{BasisFunction, PerturbationTerm, RadialSurface};
use starpinch::symfun::{newton_gap, CurvatureProfile};
use starpinch::SpaceFormModel;

fn delta() -> impl Strategy<Value = f64> {
    prop_oneof![Just(-1.0), Just(0.0), Just(1.0), -2.0..2.0f64]
}

/// A point well inside the chart of the model.
fn point(model: &SpaceFormModel, raw: &[f64]) -> AmbientPoint {
    let limit = (0.9 * model.model_radius()).min(2.0);
    let n = raw.iter().map(|c| c * c).sum::<f64>().sqrt().max(1e-12);
    let s = limit.min(n) / n;
    AmbientPoint::new(raw.iter().map(|c| c * s).collect())
}

fn coords() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.5..1.5f64, 3)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn distance_is_a_metric(d in delta(), a in coords(), b in coords(), c in coords()) {
        let m = SpaceFormModel::new(d, 3).unwrap();
        let (a, b, c) = (point(&m, &a), point(&m, &b), point(&m, &c));
        let ab = geodesic_distance(&a, &b, &m).unwrap();
        let ba = geodesic_distance(&b, &a, &m).unwrap();
        let ac = geodesic_distance(&a, &c, &m).unwrap();
        let cb = geodesic_distance(&c, &b, &m).unwrap();
        prop_assert!(ab >= 0.0);
        prop_assert!((ab - ba).abs() <= 1e-12 * (1.0 + ab));
        prop_assert!(ab <= ac + cb + 1e-10);
        prop_assert!(geodesic_distance(&a, &a, &m).unwrap() <= 1e-7);
    }

    #[test]
    fn translation_is_an_isometry(d in delta(), a in coords(), b in coords(), c in prop::collection::vec(-0.3..0.3f64, 3)) {
        let m = SpaceFormModel::new(d, 3).unwrap();
        let (a, b, c) = (point(&m, &a), point(&m, &b), point(&m, &c));
        let ta = AmbientPoint::new(m.translate(&c.coords, &a.coords));
        let tb = AmbientPoint::new(m.translate(&c.coords, &b.coords));
        prop_assume!(m.contains(&ta.coords) && m.contains(&tb.coords));
        let before = geodesic_distance(&a, &b, &m).unwrap();
        let after = geodesic_distance(&ta, &tb, &m).unwrap();
        prop_assert!((before - after).abs() <= 1e-8 * (1.0 + before), "{before} vs {after}");
    }

    #[test]
    fn chart_radius_inverts(d in delta(), t in 0.0..1.0f64) {
        let m = SpaceFormModel::new(d, 3).unwrap();
        let rho = t * m.max_geodesic_radius().min(3.0) * 0.99;
        let s = m.chart_radius(rho);
        prop_assert!((m.radius_from_chart(s) - rho).abs() <= 1e-12 * (1.0 + rho));
    }

    #[test]
    fn newton_gap_nonnegative(k in prop::collection::vec(-3.0..3.0f64, 2..7)) {
        let n = k.len();
        let prof = CurvatureProfile::from_values(k.clone()).unwrap();
        let scale: f64 = k.iter().map(|v| v * v).sum::<f64>().max(1e-300);
        for j in 1..n {
            prop_assert!(newton_gap(&prof, j).unwrap() >= -1e-12 * scale);
        }
    }

    #[test]
    fn mean_curvatures_are_symmetric(k in prop::collection::vec(-3.0..3.0f64, 2..7), shift in 0usize..6) {
        let mut rotated = k.clone();
        rotated.rotate_left(shift % k.len());
        let a = CurvatureProfile::from_values(k.clone()).unwrap();
        let b = CurvatureProfile::from_values(rotated).unwrap();
        for j in 0..=k.len() {
            prop_assert!((a.h(j) - b.h(j)).abs() <= 1e-12 * (1.0 + a.h(j).abs()));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn minkowski_and_gauss_hold_on_random_surfaces(
        d in prop_oneof![Just(-1.0), Just(0.0), Just(1.0)],
        rho0 in 0.3..0.9f64,
        l in 1usize..5,
        m in -2i64..3,
        a in -0.1..0.1f64,
        b in -0.05..0.05f64,
    ) {
        let m = m.clamp(-(l as i64), l as i64);
        let terms = vec![
            PerturbationTerm { basis: BasisFunction::Harmonic { l, m }, amplitude: a },
            PerturbationTerm { basis: BasisFunction::Harmonic { l: 2, m: 0 }, amplitude: b },
        ];
        let model = SpaceFormModel::new(d, 3).unwrap();
        let s = RadialSurface::new(2, model, rho0, terms).unwrap();
        let pair = PairedSampling::new(&s, 24, 48).unwrap();
        for k in 0..2 {
            let rep = hsiung_minkowski_residual(&pair, k, d).unwrap();
            prop_assert!(rep.pass, "{rep:?}");
        }
        prop_assert!(gauss_algebraic_surface(&pair.primary).pass);
    }

    #[test]
    fn rotation_preserves_area(
        d in prop_oneof![Just(-1.0), Just(0.0), Just(1.0)],
        angle in 0.0..6.3f64,
        a in -0.1..0.1f64,
    ) {
        let model = SpaceFormModel::new(d, 3).unwrap();
        let terms = vec![PerturbationTerm { basis: BasisFunction::Harmonic { l: 3, m: 1 }, amplitude: a }];
        let s = RadialSurface::new(2, model, 0.6, terms).unwrap();
        let (c, sn) = (angle.cos(), angle.sin());
        let q = vec![vec![c, 0.0, -sn], vec![0.0, 1.0, 0.0], vec![sn, 0.0, c]];
        let rotated = s.clone().with_rotation(q).unwrap();
        let rule = SphericalRule::new(2, 32).unwrap();
        let v0 = SampledSurface::new(&s, &rule).unwrap().volume;
        let v1 = SampledSurface::new(&rotated, &rule).unwrap().volume;
        prop_assert!((v0 - v1).abs() <= 1e-10 * v0, "{v0} vs {v1}");
    }
}
