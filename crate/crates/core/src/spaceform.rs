//! Simply connected space forms of constant curvature `delta`, realized in a
//! single conformally flat chart.
//!
//! The ambient metric on the chart is `h = (1 + (delta/4)|x|^2)^{-2} h_flat`.
//! For `delta < 0` this is the Poincaré ball of Euclidean radius `2/sqrt(-delta)`,
//! for `delta > 0` the chart `|x| < 2/sqrt(delta)` is the stereographic image of
//! the open upper half-sphere, and for `delta = 0` it is flat space. The base
//! point of every radial construction is the chart origin.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Below this value of `|delta| t^2` the trigonometric kernels switch to a
/// four-term Taylor expansion.
const SERIES_THRESHOLD: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpaceFormModel {
    delta: f64,
    ambient_dim: usize,
}

impl SpaceFormModel {
    pub fn new(delta: f64, ambient_dim: usize) -> Result<Self> {
        if !delta.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "curvature must be finite, got {delta}"
            )));
        }
        if ambient_dim < 2 {
            return Err(Error::InvalidArgument(format!(
                "ambient dimension must be at least 2, got {ambient_dim}"
            )));
        }
        Ok(Self { delta, ambient_dim })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    /// Euclidean radius of the chart; infinite in the flat case.
    pub fn model_radius(&self) -> f64 {
        if self.delta == 0.0 {
            f64::INFINITY
        } else {
            2.0 / self.delta.abs().sqrt()
        }
    }

    /// `e^{phi(x)} = 1 / (1 + (delta/4)|x|^2)`.
    pub fn conformal_factor(&self, x: &[f64]) -> f64 {
        1.0 / (1.0 + 0.25 * self.delta * norm_sq(x))
    }

    /// The conformal exponent `phi(x)`.
    pub fn phi(&self, x: &[f64]) -> f64 {
        -(0.25 * self.delta * norm_sq(x)).ln_1p()
    }

    /// Flat gradient of `phi` at `x`.
    pub fn grad_phi(&self, x: &[f64]) -> Vec<f64> {
        let lambda = self.conformal_factor(x);
        x.iter().map(|&xi| -0.5 * self.delta * lambda * xi).collect()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        norm(x) < self.model_radius()
    }

    pub(crate) fn check_inside(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.ambient_dim {
            return Err(Error::InvalidArgument(format!(
                "point has {} coordinates, model has ambient dimension {}",
                x.len(),
                self.ambient_dim
            )));
        }
        let r = norm(x);
        if !(r < self.model_radius()) {
            return Err(Error::OutsideModel {
                norm: r,
                limit: self.model_radius(),
            });
        }
        Ok(())
    }

    /// Geodesic distance from the origin of a point at chart radius `s`.
    pub fn radius_from_chart(&self, s: f64) -> f64 {
        let d = self.delta;
        let z2 = 0.25 * d * s * s;
        if d == 0.0 {
            s
        } else if z2.abs() < SERIES_THRESHOLD {
            // atan(z)/z and atanh(w)/w share this series with z^2 = delta s^2 / 4.
            s * (1.0 - z2 / 3.0 + z2 * z2 / 5.0 - z2 * z2 * z2 / 7.0)
        } else if d > 0.0 {
            let k = d.sqrt();
            2.0 / k * (0.5 * k * s).atan()
        } else {
            let k = (-d).sqrt();
            2.0 / k * (0.5 * k * s).atanh()
        }
    }

    /// Chart radius of the point at geodesic distance `r` from the origin.
    /// Inverse of [`radius_from_chart`](Self::radius_from_chart).
    pub fn chart_radius(&self, r: f64) -> f64 {
        let d = self.delta;
        let z2 = 0.25 * d * r * r;
        if d == 0.0 {
            r
        } else if z2.abs() < SERIES_THRESHOLD {
            r * (1.0 + z2 / 3.0 + 2.0 * z2 * z2 / 15.0 + 17.0 * z2 * z2 * z2 / 315.0)
        } else if d > 0.0 {
            let k = d.sqrt();
            2.0 / k * (0.5 * k * r).tan()
        } else {
            let k = (-d).sqrt();
            2.0 / k * (0.5 * k * r).tanh()
        }
    }

    /// Largest geodesic radius representable in the chart.
    pub fn max_geodesic_radius(&self) -> f64 {
        if self.delta > 0.0 {
            std::f64::consts::FRAC_PI_2 / self.delta.sqrt()
        } else {
            f64::INFINITY
        }
    }

    /// Isometry of the model taking the origin to `center`, applied to `y`.
    ///
    /// This is gyrovector addition `center (+) y` in the curvature-`delta`
    /// stereographic model, written in chart coordinates.
    pub fn translate(&self, center: &[f64], y: &[f64]) -> Vec<f64> {
        let kappa = self.delta;
        // The chart metric equals 4|dw|^2 / (1 + kappa |w|^2)^2 in w = x / 2.
        let a: Vec<f64> = center.iter().map(|c| 0.5 * c).collect();
        let w: Vec<f64> = y.iter().map(|c| 0.5 * c).collect();
        let ay = dot(&a, &w);
        let aa = norm_sq(&a);
        let ww = norm_sq(&w);
        let ca = 1.0 - 2.0 * kappa * ay - kappa * ww;
        let cw = 1.0 + kappa * aa;
        let den = 1.0 - 2.0 * kappa * ay + kappa * kappa * aa * ww;
        a.iter()
            .zip(&w)
            .map(|(ai, wi)| 2.0 * (ca * ai + cw * wi) / den)
            .collect()
    }
}

/// A point of the ambient space in chart coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmbientPoint {
    pub coords: Vec<f64>,
}

impl AmbientPoint {
    pub fn new(coords: Vec<f64>) -> Self {
        Self { coords }
    }

    pub fn origin(dim: usize) -> Self {
        Self {
            coords: vec![0.0; dim],
        }
    }

    pub fn norm(&self) -> f64 {
        norm(&self.coords)
    }
}

impl From<Vec<f64>> for AmbientPoint {
    fn from(coords: Vec<f64>) -> Self {
        Self { coords }
    }
}

/// Cosine-like kernel: `cos(sqrt(delta) t)`, `1`, or `cosh(sqrt(-delta) t)`.
pub fn c_delta(t: f64, delta: f64) -> f64 {
    let x = delta * t * t;
    if delta == 0.0 {
        1.0
    } else if x.abs() < SERIES_THRESHOLD {
        1.0 - x / 2.0 + x * x / 24.0 - x * x * x / 720.0
    } else if delta > 0.0 {
        (delta.sqrt() * t).cos()
    } else {
        ((-delta).sqrt() * t).cosh()
    }
}

/// Sine-like kernel with `s(0) = 0`, `s'(0) = 1`.
pub fn s_delta(t: f64, delta: f64) -> f64 {
    let x = delta * t * t;
    if delta == 0.0 {
        t
    } else if x.abs() < SERIES_THRESHOLD {
        t * (1.0 - x / 6.0 + x * x / 120.0 - x * x * x / 5040.0)
    } else if delta > 0.0 {
        let k = delta.sqrt();
        (k * t).sin() / k
    } else {
        let k = (-delta).sqrt();
        (k * t).sinh() / k
    }
}

/// Geodesic distance from the chart origin (the base point).
pub fn geodesic_radius(x: &AmbientPoint, model: &SpaceFormModel) -> Result<f64> {
    model.check_inside(&x.coords)?;
    Ok(model.radius_from_chart(x.norm()))
}

/// Geodesic distance between two points, from the closed form in the
/// conformal ball model.
pub fn geodesic_distance(x: &AmbientPoint, y: &AmbientPoint, model: &SpaceFormModel) -> Result<f64> {
    model.check_inside(&x.coords)?;
    model.check_inside(&y.coords)?;
    Ok(distance_unchecked(&x.coords, &y.coords, model.delta()))
}

/// Closed-form distance without domain checks. Both points must lie in the chart.
pub(crate) fn distance_unchecked(x: &[f64], y: &[f64], delta: f64) -> f64 {
    let diff_sq: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
    if delta == 0.0 {
        return diff_sq.sqrt();
    }
    // In w = x/2 and u = sqrt|delta| w the model is the unit Poincaré ball or
    // the unit stereographic sphere, scaled by 1/sqrt|delta|.
    let k = delta.abs().sqrt();
    let q = 0.25 * delta.abs();
    let a = (q * diff_sq).sqrt();
    let xx = q * norm_sq(x);
    let yy = q * norm_sq(y);
    if delta < 0.0 {
        let t = a / (a * a + (1.0 - xx) * (1.0 - yy)).sqrt();
        2.0 / k * t.atanh()
    } else {
        let den = ((1.0 + xx) * (1.0 + yy) - a * a).max(0.0).sqrt();
        2.0 / k * a.atan2(den)
    }
}

/// A monotone surrogate of the geodesic distance, cheaper to evaluate than the
/// distance itself. Used for nearest-point searches.
pub(crate) fn distance_key(x: &[f64], y: &[f64], delta: f64) -> f64 {
    let diff_sq: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
    if delta == 0.0 {
        return diff_sq;
    }
    let q = 0.25 * delta;
    let xx = q * norm_sq(x);
    let yy = q * norm_sq(y);
    // tanh^2(d/2) resp. sin^2(d/2) up to a positive constant.
    diff_sq / ((1.0 + xx) * (1.0 + yy))
}

/// Chart components of the position field `Z = s_delta(r) grad r`.
pub fn position_vector(x: &AmbientPoint, model: &SpaceFormModel) -> Result<Vec<f64>> {
    model.check_inside(&x.coords)?;
    let s = x.norm();
    if s == 0.0 {
        return Ok(vec![0.0; x.coords.len()]);
    }
    let r = model.radius_from_chart(s);
    let lambda = model.conformal_factor(&x.coords);
    // grad r is the radial unit direction divided by the conformal factor.
    let scale = s_delta(r, model.delta()) / (lambda * s);
    Ok(x.coords.iter().map(|c| scale * c).collect())
}

/// Length of a chart vector `v` at `x` measured in the ambient metric.
pub fn metric_norm(x: &[f64], v: &[f64], model: &SpaceFormModel) -> f64 {
    model.conformal_factor(x) * norm(v)
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    norm_sq(a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Composite Simpson integration of the conformal line element along a ray.
    fn ray_length(s: f64, delta: f64) -> f64 {
        let m = 2000;
        let h = s / m as f64;
        let f = |t: f64| 1.0 / (1.0 + 0.25 * delta * t * t);
        let mut acc = f(0.0) + f(s);
        for i in 1..m {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * f(i as f64 * h);
        }
        acc * h / 3.0
    }

    fn model(delta: f64) -> SpaceFormModel {
        SpaceFormModel::new(delta, 3).unwrap()
    }

    fn random_point(rng: &mut ChaCha8Rng, m: &SpaceFormModel) -> Vec<f64> {
        let limit = m.model_radius().min(3.0) * 0.95;
        loop {
            let p: Vec<f64> = (0..3).map(|_| rng.gen_range(-limit..limit)).collect();
            if norm(&p) < limit {
                return p;
            }
        }
    }

    #[test]
    fn kernel_values() {
        assert_eq!(c_delta(5.0, 0.0), 1.0);
        assert!(c_delta(std::f64::consts::FRAC_PI_2, 1.0).abs() < 1e-15);
        assert!((c_delta(1.0, -1.0) - 1.0f64.cosh()).abs() < 1e-15);
        assert!((c_delta(1.0, -1.0) - 1.5430806348152437).abs() < 1e-12);
        assert_eq!(s_delta(2.0, 0.0), 2.0);
        assert_eq!(s_delta(0.0, -3.0), 0.0);
        assert!((s_delta(std::f64::consts::FRAC_PI_2, 1.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn pythagorean_identity_for_kernels() {
        for &d in &[-2.0, -1.0, 0.0, 0.5, 1.0] {
            for i in 0..=1000 {
                let t = 10.0 * i as f64 / 1000.0;
                let c = c_delta(t, d);
                let s = s_delta(t, d);
                let lhs = c * c + d * s * s;
                let scale = (c * c).max(d.abs() * s * s).max(1.0);
                assert!((lhs - 1.0).abs() <= 1e-12 * scale, "d={d} t={t} lhs={lhs}");
            }
        }
    }

    #[test]
    fn kernel_derivatives_match_central_differences() {
        let h = 1e-5;
        for &d in &[-2.0, -1.0, 0.0, 0.5, 1.0] {
            for i in 1..50 {
                let t = 0.2 * i as f64;
                let ds = (s_delta(t + h, d) - s_delta(t - h, d)) / (2.0 * h);
                let dc = (c_delta(t + h, d) - c_delta(t - h, d)) / (2.0 * h);
                let tol = 1e-8 * c_delta(t, d).abs().max(1.0);
                assert!((ds - c_delta(t, d)).abs() < tol, "s' d={d} t={t}");
                assert!((dc + d * s_delta(t, d)).abs() < tol, "c' d={d} t={t}");
            }
        }
    }

    #[test]
    fn kernels_continuous_across_zero_curvature() {
        for i in 0..100 {
            let t = 0.05 * i as f64;
            for &d in &[1e-12, -1e-12, 1e-10, -1e-10] {
                assert!((c_delta(t, d) - 1.0).abs() < 1e-8);
                assert!((s_delta(t, d) - t).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn geodesic_radius_matches_ray_integration() {
        let x = AmbientPoint::new(vec![0.7, 0.0, 0.0]);
        assert_eq!(geodesic_radius(&x, &model(0.0)).unwrap(), 0.7);

        let unit = AmbientPoint::new(vec![0.0, 0.6, 0.8]);
        let rh = geodesic_radius(&unit, &model(-1.0)).unwrap();
        assert!((rh - ray_length(1.0, -1.0)).abs() < 1e-12);
        assert!((rh - 1.0986123).abs() < 1e-7);

        let rs = geodesic_radius(&unit, &model(1.0)).unwrap();
        assert!((rs - ray_length(1.0, 1.0)).abs() < 1e-12);
        assert!((rs - 0.9272952).abs() < 1e-7);

        for &d in &[-1.0, -0.3, 0.2, 1.0] {
            for i in 1..10 {
                let s = 0.19 * i as f64;
                let m = model(d);
                if s < m.model_radius() {
                    assert!((m.radius_from_chart(s) - ray_length(s, d)).abs() < 1e-11);
                }
            }
        }
    }

    #[test]
    fn chart_radius_inverts_radius() {
        for &d in &[-1.0, -1e-9, 0.0, 1e-9, 1.0, 4.0] {
            let m = model(d);
            for i in 1..40 {
                let r = 0.03 * i as f64;
                if r < m.max_geodesic_radius() {
                    let back = m.radius_from_chart(m.chart_radius(r));
                    assert!((back - r).abs() < 1e-13, "d={d} r={r}");
                }
            }
        }
    }

    #[test]
    fn near_zero_curvature_is_continuous() {
        let m = model(1e-9);
        for i in 0..=100 {
            let s = i as f64 / 100.0;
            let x = AmbientPoint::new(vec![s, 0.0, 0.0]);
            assert!((geodesic_radius(&x, &m).unwrap() - s).abs() <= 1e-8);
        }
    }

    #[test]
    fn outside_points_are_rejected() {
        let m = model(-1.0);
        let x = AmbientPoint::new(vec![2.5, 0.0, 0.0]);
        assert!(matches!(geodesic_radius(&x, &m), Err(Error::OutsideModel { .. })));
        let y = AmbientPoint::new(vec![2.0, 0.0, 0.0]);
        assert!(geodesic_distance(&y, &AmbientPoint::origin(3), &m).is_err());
    }

    #[test]
    fn distance_examples() {
        let m = model(-1.0);
        let x = AmbientPoint::new(vec![0.3, -0.2, 0.5]);
        assert_eq!(geodesic_distance(&x, &x, &m).unwrap(), 0.0);
        let y = AmbientPoint::new(vec![1.0, 0.0, 0.0]);
        let d = geodesic_distance(&AmbientPoint::origin(3), &y, &m).unwrap();
        assert!((d - 1.0986122886681098).abs() < 1e-12);

        let f = model(0.0);
        let a = AmbientPoint::new(vec![0.4, 0.0, 0.0]);
        let b = AmbientPoint::new(vec![-1.1, 0.0, 0.0]);
        assert!((geodesic_distance(&a, &b, &f).unwrap() - 1.5).abs() < 1e-15);
    }

    #[test]
    fn distance_agrees_with_radius_from_origin() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for &d in &[-1.0, 0.0, 1.0] {
            let m = model(d);
            for _ in 0..200 {
                let p = random_point(&mut rng, &m);
                let o = AmbientPoint::origin(3);
                let x = AmbientPoint::new(p);
                let a = geodesic_distance(&o, &x, &m).unwrap();
                let b = geodesic_radius(&x, &m).unwrap();
                assert!((a - b).abs() < 1e-13 * b.max(1.0));
            }
        }
    }

    #[test]
    fn distance_is_a_metric() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for &d in &[-1.0, 0.0, 1.0] {
            let m = model(d);
            for _ in 0..10_000 {
                let x = random_point(&mut rng, &m);
                let y = random_point(&mut rng, &m);
                let z = random_point(&mut rng, &m);
                let dxy = distance_unchecked(&x, &y, d);
                let dyx = distance_unchecked(&y, &x, d);
                assert!((dxy - dyx).abs() <= 1e-14 * dxy.max(1.0));
                let dxz = distance_unchecked(&x, &z, d);
                let dzy = distance_unchecked(&z, &y, d);
                assert!(dxy <= dxz + dzy + 1e-10);
                assert!(dxy >= 0.0);
            }
        }
    }

    #[test]
    fn distance_matches_integrated_geodesic_through_origin() {
        // Points on opposite rays: the geodesic runs through the origin.
        for &d in &[-1.0, 1.0] {
            let m = model(d);
            let a = [0.5, 0.0, 0.0];
            let b = [-0.9, 0.0, 0.0];
            let expect = ray_length(0.5, d) + ray_length(0.9, d);
            assert!((distance_unchecked(&a, &b, m.delta()) - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn translation_is_an_isometry_moving_origin_to_center() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for &d in &[-1.0, 0.0, 1.0] {
            let m = model(d);
            for _ in 0..500 {
                let c: Vec<f64> = random_point(&mut rng, &m).iter().map(|v| 0.4 * v).collect();
                let x: Vec<f64> = random_point(&mut rng, &m).iter().map(|v| 0.5 * v).collect();
                let y: Vec<f64> = random_point(&mut rng, &m).iter().map(|v| 0.5 * v).collect();
                let o = m.translate(&c, &[0.0; 3]);
                assert!(distance_unchecked(&o, &c, d) < 1e-13);
                let tx = m.translate(&c, &x);
                let ty = m.translate(&c, &y);
                let before = distance_unchecked(&x, &y, d);
                let after = distance_unchecked(&tx, &ty, d);
                assert!((before - after).abs() < 1e-10 * before.max(1.0), "d={d}");
            }
        }
    }

    #[test]
    fn position_vector_examples() {
        let f = model(0.0);
        let x = AmbientPoint::new(vec![0.3, -1.2, 2.0]);
        assert_eq!(position_vector(&x, &f).unwrap(), x.coords);
        assert_eq!(position_vector(&AmbientPoint::origin(3), &model(-1.0)).unwrap(), vec![0.0; 3]);

        let m = model(-1.0);
        let p = AmbientPoint::new(vec![0.0, 1.0, 0.0]);
        let z = position_vector(&p, &m).unwrap();
        let hn = metric_norm(&p.coords, &z, &m);
        let r = geodesic_radius(&p, &m).unwrap();
        assert!((hn - s_delta(r, -1.0)).abs() < 1e-14);
        assert!((hn - 4.0 / 3.0).abs() < 1e-14);
        // Radial.
        assert!(z[0] == 0.0 && z[2] == 0.0 && z[1] > 0.0);
    }
}
