//! Identities and inequalities of the estimate, evaluated as residuals or gaps
//! on concrete surfaces.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{compensated_sum, PairedSampling, SampledSurface};
use crate::spaceform::c_delta;
use crate::surface::SurfacePointData;

/// Whether a report checks an equation (`|value|` small) or a one-sided inequality (`value >= 0`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    Identity,
    Inequality,
    /// Reported but never gating.
    Diagnostic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub refinement_error: f64,
    pub pass: bool,
    pub kind: CheckKind,
}

impl ResidualReport {
    pub fn identity(name: impl Into<String>, value: f64, tolerance: f64, refinement_error: f64) -> Self {
        Self {
            name: name.into(),
            value,
            tolerance,
            refinement_error,
            pass: value.abs() <= tolerance + refinement_error,
            kind: CheckKind::Identity,
        }
    }

    pub fn inequality(name: impl Into<String>, value: f64, tolerance: f64, refinement_error: f64) -> Self {
        Self {
            name: name.into(),
            value,
            tolerance,
            refinement_error,
            pass: value >= -(tolerance + refinement_error),
            kind: CheckKind::Inequality,
        }
    }

    pub fn csv_header() -> &'static str {
        "name,value,tolerance,refinement_error,pass"
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{:e},{:e},{:e},{}",
            self.name, self.value, self.tolerance, self.refinement_error, self.pass
        )
    }
}

pub const HSIUNG_MINKOWSKI_TOL: f64 = 1e-8;
pub const GAUSS_REL_TOL: f64 = 1e-12;
pub const CHAIN_TOL: f64 = 1e-8;
pub const LEMMA_TOL: f64 = 1e-10;

fn hm_integrand(p: &SurfacePointData, k: usize, delta: f64) -> f64 {
    p.h(k + 1) * p.support + c_delta(p.r, delta) * p.h(k)
}

/// Volume-normalized `int (H_{k+1} <Z,nu> + c_delta(r) H_k)`.
pub fn hsiung_minkowski_residual(sampling: &PairedSampling, k: usize, delta: f64) -> Result<ResidualReport> {
    let n = sampling.primary.points.first().map(|p| p.profile.n()).unwrap_or(0);
    if k >= n {
        return Err(Error::InvalidArgument(format!("Minkowski index k = {k} outside 0..{n}")));
    }
    let est = sampling.normalized_integral(|p| hm_integrand(p, k, delta));
    Ok(ResidualReport::identity(
        format!("hsiung_minkowski_k{k}"),
        est.value,
        HSIUNG_MINKOWSKI_TOL,
        est.refinement_error,
    ))
}

/// `| |tau|^2 - n(n-1)(H^2 - H_2) |` at one point, relative to `|S|^2`.
pub fn gauss_algebraic_check(point: &SurfacePointData) -> ResidualReport {
    let prof = &point.profile;
    let n = prof.n() as f64;
    let value = (prof.tau_sq - n * (n - 1.0) * (prof.h(1) * prof.h(1) - prof.h(2))).abs();
    let scale: f64 = prof.kappa.as_slice().iter().map(|k| k * k).sum();
    ResidualReport::identity("gauss_algebraic", value, GAUSS_REL_TOL * scale.max(f64::MIN_POSITIVE), 0.0)
}

/// Worst Gauss residual over all nodes, relative to `|S|^2`.
pub fn gauss_algebraic_surface(sampled: &SampledSurface) -> ResidualReport {
    let worst = sampled
        .points
        .iter()
        .map(|p| {
            let r = gauss_algebraic_check(p);
            r.value / (r.tolerance / GAUSS_REL_TOL)
        })
        .fold(0.0, f64::max);
    ResidualReport::identity("gauss_algebraic_max_rel", worst, GAUSS_REL_TOL, 0.0)
}

fn chain_gap(s: &SampledSurface) -> (f64, f64) {
    let n = s.points[0].profile.n() as i32;
    let b_sup = s.points.iter().map(|p| p.profile.kappa.spectral_norm()).fold(0.0, f64::max);
    let tau: Vec<f64> = s.points.iter().map(|p| p.tau_norm()).collect();
    let l2 = s.lp_norm_values(&tau, 2.0);
    let lnp1 = s.lp_norm_values(&tau, (n + 1) as f64);
    let value = b_sup.powi(2 * n) * l2 * l2 - lnp1.powi(2 * (n + 1));
    (value, b_sup.powi(2 * (n + 1)))
}

/// `||B||_inf^{2n} ||tau||_2^2 - ||tau||_{n+1}^{2(n+1)}` in normalized norms,
/// divided by `||B||_inf^{2(n+1)}` so that it is scale free.
pub fn cauchy_schwarz_chain_check(sampling: &PairedSampling) -> ResidualReport {
    let (v, scale) = chain_gap(&sampling.primary);
    let (vc, scale_c) = chain_gap(&sampling.check);
    let value = v / scale;
    let check = vc / scale_c;
    ResidualReport::inequality("cauchy_schwarz_chain", value, CHAIN_TOL, (value - check).abs())
}

/// `K1 (H H_r - H_{r+1}) - |tau|^2` at a point.
pub fn lemma1_gap(point: &SurfacePointData, r: usize, k1: f64) -> Result<ResidualReport> {
    let prof = &point.profile;
    if r == 0 || r >= prof.n() {
        return Err(Error::InvalidArgument(format!("r = {r} outside 1..{}", prof.n())));
    }
    if !(prof.h(r + 1) > 0.0) {
        return Err(Error::Hypothesis(format!(
            "H_{} = {} is not positive at {:?}",
            r + 1,
            prof.h(r + 1),
            point.direction
        )));
    }
    let value = k1 * (prof.h(1) * prof.h(r) - prof.h(r + 1)) - prof.tau_sq;
    let scale: f64 = prof.kappa.as_slice().iter().map(|k| k * k).sum();
    Ok(ResidualReport::inequality(
        format!("lemma_tau_r{r}"),
        value,
        LEMMA_TOL * scale.max(1.0),
        0.0,
    ))
}

/// Smallest pointwise umbilicity-lemma gap over all nodes.
pub fn lemma1_surface(sampled: &SampledSurface, r: usize, k1: f64) -> Result<ResidualReport> {
    let mut worst: Option<ResidualReport> = None;
    for p in &sampled.points {
        let rep = lemma1_gap(p, r, k1)?;
        let slack = rep.value + rep.tolerance;
        if worst.as_ref().map_or(true, |w| slack < w.value + w.tolerance) {
            worst = Some(rep);
        }
    }
    worst.ok_or_else(|| Error::InvalidArgument("empty node set".into()))
}

/// `K2 ||eps||_1 - ||tau||_2^2` (normalized norms), divided by `||B||_inf^2`.
pub fn tau_l2_epsilon_bound(sampled: &SampledSurface, eps: &[f64], k2: f64) -> ResidualReport {
    let (value, scale) = tau_eps_gap(sampled, eps, k2);
    ResidualReport::inequality("tau_l2_vs_eps_l1", value / scale, CHAIN_TOL, 0.0)
}

/// Same as [`tau_l2_epsilon_bound`] with the field recomputed on the check rule.
pub fn tau_l2_epsilon_bound_paired(
    sampling: &PairedSampling,
    eps: &[f64],
    eps_check: &[f64],
    k2: f64,
) -> ResidualReport {
    let (v, s) = tau_eps_gap(&sampling.primary, eps, k2);
    let (vc, sc) = tau_eps_gap(&sampling.check, eps_check, k2);
    ResidualReport::inequality("tau_l2_vs_eps_l1", v / s, CHAIN_TOL, (v / s - vc / sc).abs())
}

fn tau_eps_gap(sampled: &SampledSurface, eps: &[f64], k2: f64) -> (f64, f64) {
    let tau: Vec<f64> = sampled.points.iter().map(|p| p.profile.tau_sq).collect();
    let l1 = sampled.lp_norm_values(eps, 1.0);
    let tau_int = compensated_sum(tau.iter().zip(&sampled.weights).map(|(t, w)| t * w)) / sampled.volume;
    let b_sup = sampled.points.iter().map(|p| p.profile.kappa.spectral_norm()).fold(0.0, f64::max);
    (k2 * l1 - tau_int, (b_sup * b_sup).max(f64::MIN_POSITIVE))
}

/// Flat area and `int |H~| dv_{g~}` of the chart immersion.
pub fn flat_totals(sampled: &SampledSurface) -> (f64, f64) {
    let rule_w: Vec<f64> = sampled
        .points
        .iter()
        .zip(&sampled.weights)
        .map(|(p, w)| w / p.area_element * p.flat_area_element)
        .collect();
    let area = compensated_sum(rule_w.iter().copied());
    let total_h = compensated_sum(sampled.points.iter().zip(&rule_w).map(|(p, w)| p.flat_mean_curvature.abs() * w));
    (area, total_h)
}

/// `Kn int |H~| - V~^{(n-1)/n}` on the flat chart immersion (diagnostic).
pub fn michael_simon_ratio(sampled: &SampledSurface, kn: f64) -> ResidualReport {
    let n = sampled.points[0].profile.n() as f64;
    let (area, total_h) = flat_totals(sampled);
    let value = kn * total_h - area.powf((n - 1.0) / n);
    ResidualReport {
        name: "michael_simon".into(),
        value,
        tolerance: 0.0,
        refinement_error: 0.0,
        pass: value >= 0.0,
        kind: CheckKind::Diagnostic,
    }
}

/// `V~^{(n-1)/n} / int |H~|`: the smallest admissible Michael–Simon constant for this surface.
pub fn michael_simon_lower_bound(sampled: &SampledSurface) -> f64 {
    let n = sampled.points[0].profile.n() as f64;
    let (area, total_h) = flat_totals(sampled);
    area.powf((n - 1.0) / n) / total_h
}
