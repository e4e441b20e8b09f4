//! Tensor-product quadrature on the parameter spheres `S^2` and `S^3`, surface
//! integrals in the ambient metric, and volume-normalized `L^p` norms.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::surface::{RadialSurface, SurfacePointData};

/// One node of a spherical rule.
#[derive(Debug, Clone, PartialEq)]
pub struct RuleNode {
    /// Hyperspherical angles: `(theta, phi)` on `S^2`, `(psi, theta, phi)` on `S^3`.
    pub angles: Vec<f64>,
    /// The unit vector these angles parametrize.
    pub direction: Vec<f64>,
    pub weight: f64,
}

#[derive(Debug, Clone)]
pub struct SphericalRule {
    n: usize,
    order: usize,
    nodes: Vec<RuleNode>,
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`, ascending.
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; m];
    let mut w = vec![0.0; m];
    for i in 0..m.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(m, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(m, z);
        if d != 0.0 {
            dp = d;
        }
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[m - 1 - i] = z;
        w[i] = wi;
        w[m - 1 - i] = wi;
    }
    if m % 2 == 1 {
        x[m / 2] = 0.0;
    }
    (x, w)
}

fn legendre_with_derivative(m: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if m == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=m {
        let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = m as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Surface area of the unit `n`-sphere.
pub fn unit_sphere_area(n: usize) -> f64 {
    match n {
        1 => 2.0 * PI,
        2 => 4.0 * PI,
        3 => 2.0 * PI * PI,
        _ => {
            // |S^n| = 2 pi / (n - 1) |S^{n-2}|
            2.0 * PI / (n as f64 - 1.0) * unit_sphere_area(n - 2)
        }
    }
}

/// Unit vector with hyperspherical angles; see [`RuleNode::angles`].
pub fn direction_from_angles(angles: &[f64]) -> Vec<f64> {
    match angles.len() {
        2 => {
            let (t, p) = (angles[0], angles[1]);
            vec![t.sin() * p.cos(), t.sin() * p.sin(), t.cos()]
        }
        3 => {
            let (s, t, p) = (angles[0], angles[1], angles[2]);
            vec![
                s.sin() * t.sin() * p.cos(),
                s.sin() * t.sin() * p.sin(),
                s.sin() * t.cos(),
                s.cos(),
            ]
        }
        k => panic!("no angular parametrization for S^{k}"),
    }
}

/// Inverse of [`direction_from_angles`] for unit vectors in `R^3` and `R^4`.
pub fn angles_from_direction(u: &[f64]) -> Vec<f64> {
    match u.len() {
        3 => vec![u[2].clamp(-1.0, 1.0).acos(), u[1].atan2(u[0])],
        4 => {
            let psi = u[3].clamp(-1.0, 1.0).acos();
            let rest = (u[0] * u[0] + u[1] * u[1] + u[2] * u[2]).sqrt();
            let theta = u[2].atan2((u[0] * u[0] + u[1] * u[1]).sqrt());
            let theta = if rest > 0.0 { std::f64::consts::FRAC_PI_2 - theta } else { 0.0 };
            vec![psi, theta, u[1].atan2(u[0])]
        }
        k => panic!("no angular parametrization for S^{}", k - 1),
    }
}

impl SphericalRule {
    /// Tensor rule with `order` polar nodes and `2 * order` azimuthal nodes;
    /// on `S^3` the extra angle uses `order` Gauss–Chebyshev (second kind) nodes.
    /// Spherical polynomials of degree up to `2 * order - 1` are integrated exactly.
    pub fn new(n: usize, order: usize) -> Result<Self> {
        if order < 4 {
            return Err(Error::InvalidArgument(format!("quadrature order must be at least 4, got {order}")));
        }
        let (ct, wt) = gauss_legendre(order);
        let m = 2 * order;
        let dphi = 2.0 * PI / m as f64;
        let mut s2 = Vec::with_capacity(order * m);
        for (t, w) in ct.iter().zip(&wt) {
            let theta = t.acos();
            for j in 0..m {
                let phi = j as f64 * dphi;
                s2.push((theta, phi, w * dphi));
            }
        }
        let nodes = match n {
            2 => s2
                .into_iter()
                .map(|(theta, phi, weight)| {
                    let angles = vec![theta, phi];
                    RuleNode {
                        direction: direction_from_angles(&angles),
                        angles,
                        weight,
                    }
                })
                .collect(),
            3 => {
                let mut nodes = Vec::with_capacity(order * s2.len());
                for k in 1..=order {
                    let a = k as f64 * PI / (order as f64 + 1.0);
                    let wk = PI / (order as f64 + 1.0) * a.sin() * a.sin();
                    for &(theta, phi, w) in &s2 {
                        let angles = vec![a, theta, phi];
                        nodes.push(RuleNode {
                            direction: direction_from_angles(&angles),
                            angles,
                            weight: wk * w,
                        });
                    }
                }
                nodes
            }
            other => return Err(Error::UnsupportedDimension(other)),
        };
        Ok(Self { n, order, nodes })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn nodes(&self) -> &[RuleNode] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Integral over the unit parameter sphere of a function of the direction.
    pub fn integrate_directions<F: Fn(&[f64]) -> f64>(&self, f: F) -> f64 {
        compensated_sum(self.nodes.iter().map(|nd| nd.weight * f(&nd.direction)))
    }
}

pub fn build_rule(n: usize, order: usize) -> Result<SphericalRule> {
    SphericalRule::new(n, order)
}

/// Neumaier-compensated sum in iteration order.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// An integral together with the change observed under rule refinement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegralEstimate {
    pub value: f64,
    pub refinement_error: f64,
}

impl IntegralEstimate {
    fn from_pair(value: f64, check: f64) -> Self {
        Self {
            value,
            refinement_error: (value - check).abs(),
        }
    }
}

/// A surface evaluated at every node of a rule.
#[derive(Debug, Clone)]
pub struct SampledSurface {
    pub points: Vec<SurfacePointData>,
    /// Rule weight times ambient area density.
    pub weights: Vec<f64>,
    pub volume: f64,
    pub order: usize,
}

impl SampledSurface {
    pub fn new(surface: &RadialSurface, rule: &SphericalRule) -> Result<Self> {
        if rule.n() != surface.n() {
            return Err(Error::InvalidArgument(format!(
                "rule on S^{} used with a surface of dimension {}",
                rule.n(),
                surface.n()
            )));
        }
        let points = rule
            .nodes()
            .par_iter()
            .map(|nd| surface.evaluate_node(nd))
            .collect::<Result<Vec<_>>>()?;
        let weights: Vec<f64> = points
            .iter()
            .zip(rule.nodes())
            .map(|(p, nd)| p.area_element * nd.weight)
            .collect();
        let volume = compensated_sum(weights.iter().copied());
        Ok(Self {
            points,
            weights,
            volume,
            order: rule.order(),
        })
    }

    pub fn integrate<F>(&self, f: F) -> f64
    where
        F: Fn(&SurfacePointData) -> f64 + Sync,
    {
        let values: Vec<f64> = self.points.par_iter().map(&f).collect();
        compensated_sum(values.iter().zip(&self.weights).map(|(v, w)| v * w))
    }

    /// Integral of a field already tabulated at the nodes.
    pub fn integrate_values(&self, values: &[f64]) -> f64 {
        compensated_sum(values.iter().zip(&self.weights).map(|(v, w)| v * w))
    }

    pub fn mean<F>(&self, f: F) -> f64
    where
        F: Fn(&SurfacePointData) -> f64 + Sync,
    {
        self.integrate(f) / self.volume
    }

    /// `((1/V) int |f|^p)^{1/p}`.
    pub fn lp_norm<F>(&self, f: F, p: f64) -> f64
    where
        F: Fn(&SurfacePointData) -> f64 + Sync,
    {
        let values: Vec<f64> = self.points.par_iter().map(&f).collect();
        self.lp_norm_values(&values, p)
    }

    pub fn lp_norm_values(&self, values: &[f64], p: f64) -> f64 {
        if p.is_infinite() {
            return values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        }
        let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if scale == 0.0 {
            return 0.0;
        }
        // Scaled to avoid overflow for large p.
        let s = compensated_sum(
            values
                .iter()
                .zip(&self.weights)
                .map(|(v, w)| (v.abs() / scale).powf(p) * w),
        );
        scale * (s / self.volume).powf(1.0 / p)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// A surface sampled at a working rule and at a finer check rule.
#[derive(Debug, Clone)]
pub struct PairedSampling {
    pub primary: SampledSurface,
    pub check: SampledSurface,
}

impl PairedSampling {
    pub fn new(surface: &RadialSurface, order: usize, check_order: usize) -> Result<Self> {
        if check_order < order {
            return Err(Error::InvalidArgument(format!(
                "check order {check_order} is below the working order {order}"
            )));
        }
        let primary = SampledSurface::new(surface, &SphericalRule::new(surface.n(), order)?)?;
        let check = SampledSurface::new(surface, &SphericalRule::new(surface.n(), check_order)?)?;
        Ok(Self { primary, check })
    }

    pub fn integral<F>(&self, f: F) -> IntegralEstimate
    where
        F: Fn(&SurfacePointData) -> f64 + Sync,
    {
        IntegralEstimate::from_pair(self.primary.integrate(&f), self.check.integrate(&f))
    }

    /// Integral divided by the surface volume of the same rule.
    pub fn normalized_integral<F>(&self, f: F) -> IntegralEstimate
    where
        F: Fn(&SurfacePointData) -> f64 + Sync,
    {
        IntegralEstimate::from_pair(self.primary.mean(&f), self.check.mean(&f))
    }

    pub fn volume(&self) -> IntegralEstimate {
        IntegralEstimate::from_pair(self.primary.volume, self.check.volume)
    }

    pub fn lp_norm<F>(&self, f: F, p: f64) -> IntegralEstimate
    where
        F: Fn(&SurfacePointData) -> f64 + Sync,
    {
        IntegralEstimate::from_pair(self.primary.lp_norm(&f, p), self.check.lp_norm(&f, p))
    }
}

/// `int_M f dv_g` with the refinement error against a rule of twice the order.
pub fn surface_integral<F>(surface: &RadialSurface, f: F, rule: &SphericalRule) -> Result<IntegralEstimate>
where
    F: Fn(&SurfacePointData) -> f64 + Sync,
{
    let paired = PairedSampling::new(surface, rule.order(), 2 * rule.order())?;
    Ok(paired.integral(f))
}

/// Volume-normalized `L^p` norm on the given rule.
pub fn lp_norm<F>(surface: &RadialSurface, f: F, p: f64, rule: &SphericalRule) -> Result<f64>
where
    F: Fn(&SurfacePointData) -> f64 + Sync,
{
    if !(p >= 1.0) {
        return Err(Error::InvalidArgument(format!("L^p norm needs p >= 1, got {p}")));
    }
    Ok(SampledSurface::new(surface, rule)?.lp_norm(f, p))
}
