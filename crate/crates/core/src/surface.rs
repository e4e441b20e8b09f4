//! Starshaped hypersurfaces given as radial graphs over the base point.
//!
//! A [`RadialSurface`] is described by its geodesic radial function
//! `rho(u) = rho0 (1 + sum_i a_i Y_i(Q u))` on the parameter sphere `S^n`. The
//! immersion in the chart is `X(u) = s(rho(u)) u`, where `s` converts geodesic
//! radius to chart radius. Derivatives of the immersion come from second-order
//! jets in hyperspherical angles; the flat fundamental forms are then pushed
//! through the conformal change `h = e^{2 phi} h_flat`:
//!
//! ```text
//! nu = e^{-phi} n_flat,   g = e^{2 phi} g_flat,   B = e^{phi} (B_flat - (d phi / d n_flat) g_flat)
//! ```
//!
//! The normal points towards the base point, so geodesic spheres have positive
//! principal curvatures and negative support `<Z, nu>`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jet::{Jet, Scalar};
use crate::quadrature::{RuleNode, SphericalRule};
use crate::spaceform::{dot, norm, s_delta, AmbientPoint, SpaceFormModel};
use crate::symfun::{CurvatureProfile, PrincipalCurvatures};

/// A perturbation mode of the radial function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "basis", rename_all = "snake_case")]
pub enum BasisFunction {
    /// Schmidt semi-normalized real spherical harmonic on `S^2` (`|Y| <= 1`);
    /// `m > 0` selects `cos(m phi)`, `m < 0` selects `sin(|m| phi)`.
    Harmonic { l: usize, m: i64 },
    /// Coordinate monomial `prod_i u_i^{p_i}` of total degree at most 2.
    Monomial { powers: Vec<u32> },
}

impl BasisFunction {
    fn validate(&self, n: usize) -> Result<()> {
        match self {
            BasisFunction::Harmonic { l, m } => {
                if n != 2 {
                    return Err(Error::InvalidArgument(format!(
                        "spherical harmonics are only available for n = 2 (got n = {n}); use monomials"
                    )));
                }
                if m.unsigned_abs() as usize > *l {
                    return Err(Error::InvalidArgument(format!("harmonic order |m| = {} exceeds degree {l}", m.abs())));
                }
            }
            BasisFunction::Monomial { powers } => {
                if powers.len() != n + 1 {
                    return Err(Error::InvalidArgument(format!(
                        "monomial needs {} exponents, got {}",
                        n + 1,
                        powers.len()
                    )));
                }
                if powers.iter().sum::<u32>() > 2 {
                    return Err(Error::InvalidArgument(format!("monomial {powers:?} has degree above 2")));
                }
            }
        }
        Ok(())
    }

    pub fn eval<T: Scalar>(&self, v: &[T]) -> T {
        match self {
            BasisFunction::Monomial { powers } => v
                .iter()
                .zip(powers)
                .fold(T::constant(1.0), |acc, (x, p)| acc * x.powi(*p)),
            BasisFunction::Harmonic { l, m } => harmonic(*l, *m, v),
        }
    }
}

/// Schmidt semi-normalized real spherical harmonic as a polynomial in `(x, y, z)`.
fn harmonic<T: Scalar>(l: usize, m: i64, v: &[T]) -> T {
    let (x, y, z) = (v[0], v[1], v[2]);
    let am = m.unsigned_abs() as usize;
    // Q_l^m(z) = d^m P_l / dz^m by the three-term recurrence in l.
    let mut double_fact = 1.0;
    for k in 0..am {
        double_fact *= (2 * k + 1) as f64;
    }
    let mut q_prev = T::constant(0.0);
    let mut q = T::constant(double_fact);
    for ll in am..l {
        let next = (z * q).scale((2 * ll + 1) as f64) - q_prev.scale((ll + am) as f64);
        q_prev = q;
        q = next.scale(1.0 / (ll - am + 1) as f64);
    }
    // (x + i y)^m = sin^m(theta) e^{i m phi}
    let mut re = T::constant(1.0);
    let mut im = T::constant(0.0);
    for _ in 0..am {
        let r2 = re * x - im * y;
        let i2 = re * y + im * x;
        re = r2;
        im = i2;
    }
    let angular = if m >= 0 { re } else { im };
    let norm = if am == 0 {
        1.0
    } else {
        let mut ratio = 1.0;
        for k in (l - am + 1)..=(l + am) {
            ratio /= k as f64;
        }
        (2.0 * ratio).sqrt()
    };
    (q * angular).scale(norm)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationTerm {
    #[serde(flatten)]
    pub basis: BasisFunction,
    pub amplitude: f64,
}

/// Orientation convention for the second fundamental form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignConvention {
    /// `B(X, Y) = -g(D_X nu, Y)`.
    #[default]
    Standard,
    /// Negates `B` while keeping the normal. Only useful to demonstrate that the
    /// integral identities detect a wrong convention.
    Flipped,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadialSurface {
    n: usize,
    model: SpaceFormModel,
    rho0: f64,
    terms: Vec<PerturbationTerm>,
    rotation: Option<Vec<Vec<f64>>>,
    sign: SignConvention,
}

/// Pointwise extrinsic data at one parameter node.
#[derive(Debug, Clone)]
pub struct SurfacePointData {
    /// Parameter direction on the unit sphere.
    pub direction: Vec<f64>,
    pub x: AmbientPoint,
    /// Unit normal in the ambient metric, chart components.
    pub nu: Vec<f64>,
    pub g_mat: DMatrix<f64>,
    pub b_mat: DMatrix<f64>,
    pub profile: CurvatureProfile,
    /// `<Z, nu>` in the ambient metric.
    pub support: f64,
    /// Geodesic distance to the base point.
    pub r: f64,
    /// Ambient area density relative to the round unit-sphere measure.
    pub area_element: f64,
    /// Mean curvature of the same chart surface in the flat metric.
    pub flat_mean_curvature: f64,
    /// Flat area density relative to the round unit-sphere measure.
    pub flat_area_element: f64,
}

impl SurfacePointData {
    pub fn kappa(&self) -> &[f64] {
        self.profile.kappa.as_slice()
    }

    /// `H_k` at this point.
    pub fn h(&self, k: usize) -> f64 {
        self.profile.h(k)
    }

    pub fn tau_norm(&self) -> f64 {
        self.profile.tau_sq.sqrt()
    }
}

/// Sign and bounds of the support function over a node set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StarshapeReport {
    pub sign: i8,
    /// `min |<Z, nu>|`.
    pub r0: f64,
    /// Largest geodesic distance to the base point.
    pub r_max: f64,
}

impl RadialSurface {
    pub fn new(n: usize, model: SpaceFormModel, rho0: f64, terms: Vec<PerturbationTerm>) -> Result<Self> {
        if !(2..=3).contains(&n) {
            return Err(Error::UnsupportedDimension(n));
        }
        if model.ambient_dim() != n + 1 {
            return Err(Error::InvalidArgument(format!(
                "model has ambient dimension {}, surface needs {}",
                model.ambient_dim(),
                n + 1
            )));
        }
        if !(rho0 > 0.0) || !(rho0 < model.max_geodesic_radius()) {
            return Err(Error::InvalidArgument(format!(
                "base radius {rho0} must lie in (0, {})",
                model.max_geodesic_radius()
            )));
        }
        for t in &terms {
            t.basis.validate(n)?;
            if !t.amplitude.is_finite() {
                return Err(Error::InvalidArgument(format!("non-finite amplitude {}", t.amplitude)));
            }
        }
        Ok(Self {
            n,
            model,
            rho0,
            terms,
            rotation: None,
            sign: SignConvention::Standard,
        })
    }

    /// The geodesic sphere of radius `rho` about the base point.
    pub fn geodesic_sphere(n: usize, model: SpaceFormModel, rho: f64) -> Result<Self> {
        Self::new(n, model, rho, Vec::new())
    }

    /// Rotates the surface by the orthogonal matrix `q` (rows of length `n + 1`).
    pub fn with_rotation(mut self, q: Vec<Vec<f64>>) -> Result<Self> {
        let d = self.n + 1;
        if q.len() != d || q.iter().any(|row| row.len() != d) {
            return Err(Error::InvalidArgument(format!("rotation must be {d}x{d}")));
        }
        for i in 0..d {
            for j in 0..d {
                let e: f64 = (0..d).map(|k| q[i][k] * q[j][k]).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                if (e - want).abs() > 1e-12 {
                    return Err(Error::InvalidArgument("rotation matrix is not orthogonal".into()));
                }
            }
        }
        self.rotation = Some(q);
        Ok(self)
    }

    pub fn with_sign_convention(mut self, sign: SignConvention) -> Self {
        self.sign = sign;
        self
    }

    /// Same shape with every perturbation amplitude multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        for t in &mut out.terms {
            t.amplitude *= factor;
        }
        out
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn model(&self) -> &SpaceFormModel {
        &self.model
    }

    pub fn rho0(&self) -> f64 {
        self.rho0
    }

    pub fn terms(&self) -> &[PerturbationTerm] {
        &self.terms
    }

    pub fn rotation(&self) -> Option<&Vec<Vec<f64>>> {
        self.rotation.as_ref()
    }

    /// Geodesic radial function at a direction, generic over the scalar type.
    pub fn radius<T: Scalar>(&self, u: &[T]) -> T {
        // A rotated surface is rho(Q^T u): the point Q u carries the value of u.
        let rotated: Vec<T>;
        let v: &[T] = match &self.rotation {
            Some(q) => {
                rotated = (0..u.len())
                    .map(|i| {
                        (0..u.len()).fold(T::constant(0.0), |acc, k| acc + u[k].scale(q[k][i]))
                    })
                    .collect();
                &rotated
            }
            None => u,
        };
        let mut acc = T::constant(1.0);
        for t in &self.terms {
            acc = acc + t.basis.eval(v).scale(t.amplitude);
        }
        acc.scale(self.rho0)
    }

    pub fn radius_at(&self, u: &[f64]) -> f64 {
        self.radius(u)
    }

    /// Chart position of the surface point over direction `u`.
    pub fn chart_position(&self, u: &[f64]) -> Result<Vec<f64>> {
        let rho = self.radius_at(u);
        self.check_radius(rho, u, false)?;
        let s = self.model.chart_radius(rho);
        Ok(u.iter().map(|c| s * c).collect())
    }

    fn check_radius(&self, rho: f64, u: &[f64], allow_nonpositive: bool) -> Result<()> {
        if !allow_nonpositive && !(rho > 0.0) {
            return Err(Error::NonPositiveRadius {
                direction: u.to_vec(),
                rho,
            });
        }
        let max = self.model.max_geodesic_radius();
        if !(rho.abs() < max) {
            return Err(Error::OutsideModel {
                norm: self.model.chart_radius(rho.abs().min(max)),
                limit: self.model.model_radius(),
            });
        }
        Ok(())
    }

    /// Pointwise data at the direction `u` on the parameter sphere.
    pub fn evaluate_point(&self, u: &[f64]) -> Result<SurfacePointData> {
        if u.len() != self.n + 1 || (norm(u) - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!("{u:?} is not a unit vector in R^{}", self.n + 1)));
        }
        let frame = householder_to(u);
        let angles = equator_angles(self.n);
        self.evaluate_dispatch(&angles, Some(&frame), false)
    }

    /// Pointwise data at a quadrature node.
    pub fn evaluate_node(&self, node: &RuleNode) -> Result<SurfacePointData> {
        self.evaluate_dispatch(&node.angles, None, false)
    }

    fn evaluate_dispatch(&self, angles: &[f64], frame: Option<&[Vec<f64>]>, raw: bool) -> Result<SurfacePointData> {
        match self.n {
            2 => self.evaluate_jets::<2>(angles, frame, raw),
            3 => self.evaluate_jets::<3>(angles, frame, raw),
            other => Err(Error::UnsupportedDimension(other)),
        }
    }

    fn evaluate_jets<const N: usize>(&self, angles: &[f64], frame: Option<&[Vec<f64>]>, raw: bool) -> Result<SurfacePointData> {
        let d = N + 1;
        let vars: Vec<Jet<N>> = (0..N).map(|i| Jet::variable(i, angles[i])).collect();
        let base = direction_generic(&vars);
        let u: Vec<Jet<N>> = match frame {
            Some(p) => (0..d)
                .map(|i| (0..d).fold(Jet::constant(0.0), |acc, k| acc + base[k].scale(p[i][k])))
                .collect(),
            None => base,
        };
        let u0: Vec<f64> = u.iter().map(|j| j.v).collect();
        let rho = self.radius(&u);
        self.check_radius(rho.v, &u0, raw)?;
        let delta = self.model.delta();
        let s_val = self.model.chart_radius(rho.v);
        let ds = 1.0 + 0.25 * delta * s_val * s_val;
        let s = rho.chain(s_val, ds, 0.5 * delta * s_val * ds);
        let xj: Vec<Jet<N>> = u.iter().map(|ui| s * *ui).collect();

        let x: Vec<f64> = xj.iter().map(|j| j.v).collect();
        let xa: Vec<Vec<f64>> = (0..N).map(|a| xj.iter().map(|j| j.g[a]).collect()).collect();
        let ua: Vec<Vec<f64>> = (0..N).map(|a| u.iter().map(|j| j.g[a]).collect()).collect();

        let g_flat = DMatrix::from_fn(N, N, |a, b| dot(&xa[a], &xa[b]));
        let g_unit = DMatrix::from_fn(N, N, |a, b| dot(&ua[a], &ua[b]));

        // Inward normal: minus the component of u orthogonal to the tangent space.
        let rhs = DVector::from_fn(N, |a, _| dot(&xa[a], &u0));
        let chol = g_flat
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Numerical(format!("degenerate immersion at direction {u0:?}")))?;
        let coeff = chol.solve(&rhs);
        let mut nflat: Vec<f64> = (0..d)
            .map(|i| -(u0[i] - (0..N).map(|a| coeff[a] * xa[a][i]).sum::<f64>()))
            .collect();
        let nn = norm(&nflat);
        if !(nn > 0.0) {
            return Err(Error::Numerical(format!("radial direction is tangent at {u0:?}")));
        }
        nflat.iter_mut().for_each(|c| *c /= nn);

        let b_flat = DMatrix::from_fn(N, N, |a, b| {
            let xab: Vec<f64> = xj.iter().map(|j| j.h[a][b]).collect();
            dot(&xab, &nflat)
        });

        let lambda = self.model.conformal_factor(&x);
        let dphi_n = -0.5 * delta * lambda * dot(&x, &nflat);
        let g_mat = &g_flat * (lambda * lambda);
        let mut b_mat = (&b_flat - &g_flat * dphi_n) * lambda;
        if self.sign == SignConvention::Flipped {
            b_mat = -b_mat;
        }

        let kappa = pencil_eigenvalues(&b_mat, &g_mat)?;
        let profile = CurvatureProfile::new(PrincipalCurvatures::new(kappa)?);

        let det_unit = g_unit.determinant();
        let area_element = (g_mat.determinant() / det_unit).sqrt();
        let flat_area_element = (g_flat.determinant() / det_unit).sqrt();
        let shape_flat = chol.solve(&b_flat);
        let mut flat_mean_curvature = shape_flat.trace() / N as f64;
        if self.sign == SignConvention::Flipped {
            flat_mean_curvature = -flat_mean_curvature;
        }

        let r = rho.v.abs();
        let xs = norm(&x);
        // <Z, nu>_h = e^{2 phi} Z . (n_flat e^{-phi}) with Z = s_delta(r) x / (e^phi |x|).
        let support = if xs > 0.0 {
            s_delta(r, delta) * dot(&x, &nflat) / xs
        } else {
            0.0
        };
        let nu: Vec<f64> = nflat.iter().map(|c| c / lambda).collect();

        Ok(SurfacePointData {
            direction: u0,
            x: AmbientPoint::new(x),
            nu,
            g_mat,
            b_mat,
            profile,
            support,
            r,
            area_element,
            flat_mean_curvature,
            flat_area_element,
        })
    }

    /// Sign of `<Z, nu>` over the rule nodes, `R0 = min |<Z, nu>|` and the
    /// radius of the smallest geodesic ball about the base point containing the nodes.
    pub fn starshape_report(&self, rule: &SphericalRule) -> Result<StarshapeReport> {
        use rayon::prelude::*;
        let supports: Vec<(f64, f64)> = rule
            .nodes()
            .par_iter()
            .map(|nd| {
                self.evaluate_dispatch(&nd.angles, None, true)
                    .map(|p| (p.support, p.r))
            })
            .collect::<Result<Vec<_>>>()?;
        let positive = supports.iter().filter(|(s, _)| *s > 0.0).count();
        let sign: i8 = if 2 * positive > supports.len() { 1 } else { -1 };
        for (node, (s, _)) in supports.iter().enumerate() {
            let ok = if sign > 0 { *s > 0.0 } else { *s < 0.0 };
            if !ok {
                return Err(Error::NotStarshaped {
                    node,
                    direction: rule.nodes()[node].direction.clone(),
                    support: *s,
                });
            }
        }
        let r0 = supports.iter().fold(f64::INFINITY, |m, (s, _)| m.min(s.abs()));
        let r_max = supports.iter().fold(0.0f64, |m, (_, r)| m.max(*r));
        Ok(StarshapeReport { sign, r0, r_max })
    }

    /// `||B||_inf`: the largest `|kappa_i|` over the rule nodes.
    pub fn b_sup_norm(&self, rule: &SphericalRule) -> Result<f64> {
        use rayon::prelude::*;
        let norms = rule
            .nodes()
            .par_iter()
            .map(|nd| self.evaluate_node(nd).map(|p| p.profile.kappa.spectral_norm()))
            .collect::<Result<Vec<_>>>()?;
        Ok(norms.into_iter().fold(0.0, f64::max))
    }
}

/// Generalized eigenvalues of the symmetric pencil `(b, g)` with `g` positive
/// definite, ascending.
pub fn pencil_eigenvalues(b: &DMatrix<f64>, g: &DMatrix<f64>) -> Result<Vec<f64>> {
    let chol = g
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Numerical("first fundamental form is not positive definite".into()))?;
    let l = chol.l();
    let linv = l
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Numerical("singular Cholesky factor".into()))?;
    let m = &linv * b * linv.transpose();
    let sym = (&m + m.transpose()) * 0.5;
    let mut eig: Vec<f64> = sym.symmetric_eigen().eigenvalues.iter().copied().collect();
    eig.sort_by(f64::total_cmp);
    Ok(eig)
}

/// Hyperspherical parametrization with generic scalars.
fn direction_generic<T: Scalar>(a: &[T]) -> Vec<T> {
    match a.len() {
        2 => {
            let (st, ct) = (a[0].sin(), a[0].cos());
            vec![st * a[1].cos(), st * a[1].sin(), ct]
        }
        3 => {
            let (ss, cs) = (a[0].sin(), a[0].cos());
            let (st, ct) = (a[1].sin(), a[1].cos());
            vec![ss * st * a[2].cos(), ss * st * a[2].sin(), ss * ct, cs]
        }
        k => panic!("no angular parametrization for S^{k}"),
    }
}

/// Angles of the first basis vector, away from the coordinate singularities.
fn equator_angles(n: usize) -> Vec<f64> {
    let h = std::f64::consts::FRAC_PI_2;
    match n {
        2 => vec![h, 0.0],
        _ => vec![h, h, 0.0],
    }
}

/// Householder reflection exchanging `e_1` and `u`.
fn householder_to(u: &[f64]) -> Vec<Vec<f64>> {
    let d = u.len();
    let mut v: Vec<f64> = u.iter().map(|c| -c).collect();
    v[0] += 1.0;
    let vv = dot(&v, &v);
    (0..d)
        .map(|i| {
            (0..d)
                .map(|j| {
                    let id = if i == j { 1.0 } else { 0.0 };
                    if vv < 1e-30 {
                        id
                    } else {
                        id - 2.0 * v[i] * v[j] / vv
                    }
                })
                .collect()
        })
        .collect()
}
