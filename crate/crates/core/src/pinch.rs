//! The stability experiment: almost constant `H_r` against Hausdorff
//! distance to a geodesic sphere.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constants::{default_kn_ms, final_bound, ChainInputs, ConstantSettings, ProofConstants, SymmetricConstants};
use crate::error::{Error, Result};
use crate::identities::{
    cauchy_schwarz_chain_check, gauss_algebraic_surface, hsiung_minkowski_residual, lemma1_surface, michael_simon_ratio,
    tau_l2_epsilon_bound_paired, CheckKind, ResidualReport,
};
use crate::optimize::{linear_regression, nelder_mead, LinearFit, NelderMeadOptions};
use crate::quadrature::{angles_from_direction, direction_from_angles, PairedSampling, SampledSurface, SphericalRule};
use crate::spaceform::{distance_key, distance_unchecked, AmbientPoint, SpaceFormModel};
use crate::surface::RadialSurface;
use crate::symfun::{calibrate, extreme_partial_h, Calibration};

/// `eps = H_r - h` at the nodes. Without `h`, `h` is the volume-normalized
/// mean of `H_r`.
pub fn epsilon_field(sampled: &SampledSurface, r: usize, h: Option<f64>) -> Result<(f64, Vec<f64>)> {
    let n = sampled.points.first().map(|p| p.profile.n()).unwrap_or(0);
    if r == 0 || r >= n.max(1) {
        return Err(Error::InvalidArgument(format!("r = {r} outside 1..{n}")));
    }
    if r > 1 {
        if let Some((i, p)) = sampled.points.iter().enumerate().find(|(_, p)| !(p.h(r + 1) > 0.0)) {
            return Err(Error::Hypothesis(format!(
                "H_{} = {} is not positive at node {i} (direction {:?})",
                r + 1,
                p.h(r + 1),
                p.direction
            )));
        }
    }
    let hr: Vec<f64> = sampled.points.iter().map(|p| p.h(r)).collect();
    let h = match h {
        Some(v) => v,
        None => sampled.integrate_values(&hr) / sampled.volume,
    };
    // Deviations at the rounding level of H_r are zeroed; otherwise the small
    // exponent of the final bound would magnify them.
    let floor = EPS_NOISE_FLOOR * h.abs();
    Ok((h, hr.iter().map(|v| if (v - h).abs() <= floor { 0.0 } else { v - h }).collect()))
}

/// Relative size below which `H_r - h` is treated as rounding noise.
pub const EPS_NOISE_FLOOR: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateCheck {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisGate {
    pub checks: Vec<GateCheck>,
    /// Conjunction of all checks.
    pub pass: bool,
    /// Conjunction of all checks except the smallness `||eps||_1 <= eps1`.
    pub structural_pass: bool,
}

/// Quantities the gate looks at.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GateInputs {
    pub starshaped: bool,
    pub r0: f64,
    pub h: f64,
    pub eps_linf: f64,
    pub eps_l1: f64,
    /// `None` when the constant chain could not be evaluated.
    pub eps1: Option<f64>,
    pub min_h_next: f64,
    pub big_r: f64,
    pub max_radius: f64,
}

pub const EPS1_GATE: &str = "eps_l1_below_eps1";

pub fn hypothesis_gate(g: &GateInputs) -> HypothesisGate {
    let mut checks = vec![
        GateCheck {
            name: "starshaped".into(),
            pass: g.starshaped,
            detail: "support <Z,nu> has constant sign".into(),
        },
        GateCheck {
            name: "R0_positive".into(),
            pass: g.r0 > 0.0,
            detail: format!("R0 = {:e}", g.r0),
        },
        GateCheck {
            name: "eps_linf_below_half_h".into(),
            pass: g.h > 0.0 && g.eps_linf <= 0.5 * g.h,
            detail: format!("||eps||_inf = {:e}, h/2 = {:e}", g.eps_linf, 0.5 * g.h),
        },
        GateCheck {
            name: EPS1_GATE.into(),
            pass: g.eps1.is_some_and(|e| g.eps_l1 <= e),
            detail: match g.eps1 {
                Some(e) => format!("||eps||_1 = {:e}, eps1 = {:e}", g.eps_l1, e),
                None => "eps1 unavailable".into(),
            },
        },
        GateCheck {
            name: "H_r_plus_1_positive".into(),
            pass: g.min_h_next > 0.0,
            detail: format!("min H_(r+1) = {:e}", g.min_h_next),
        },
        GateCheck {
            name: "contained_in_ball".into(),
            pass: g.big_r.is_finite() && g.big_r < g.max_radius,
            detail: format!("R = {:e}, model limit = {:e}", g.big_r, g.max_radius),
        },
    ];
    checks.shrink_to_fit();
    let pass = checks.iter().all(|c| c.pass);
    let structural_pass = checks.iter().filter(|c| c.name != EPS1_GATE).all(|c| c.pass);
    HypothesisGate {
        checks,
        pass,
        structural_pass,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SphereFit {
    pub center: AmbientPoint,
    pub rho0: f64,
    /// Root-mean-square deviation of the sample distances from `rho0`.
    pub rms: f64,
    pub iterations: usize,
}

fn fit_objective(c: &[f64], samples: &[AmbientPoint], weights: &[f64], model: &SpaceFormModel) -> (f64, f64) {
    if !model.contains(c) {
        return (f64::INFINITY, f64::NAN);
    }
    let d: Vec<f64> = samples
        .iter()
        .map(|p| distance_unchecked(c, &p.coords, model.delta()))
        .collect();
    let total: f64 = weights.iter().sum();
    let m = d.iter().zip(weights).map(|(x, w)| x * w).sum::<f64>() / total;
    let v = d.iter().zip(weights).map(|(x, w)| w * (x - m) * (x - m)).sum::<f64>() / total;
    (v, m)
}

/// Least-squares geodesic sphere through `samples`: minimizes the variance of
/// the distances to the center. Five seeded starts around the chart centroid,
/// then a restart from the best simplex vertex.
pub fn fit_geodesic_sphere(samples: &[AmbientPoint], model: &SpaceFormModel, seed: u64) -> Result<SphereFit> {
    fit_geodesic_sphere_weighted(samples, &vec![1.0; samples.len()], model, seed)
}

/// [`fit_geodesic_sphere`] with the mean and variance taken against positive
/// sample weights, e.g. quadrature weights of the surface measure.
pub fn fit_geodesic_sphere_weighted(
    samples: &[AmbientPoint],
    weights: &[f64],
    model: &SpaceFormModel,
    seed: u64,
) -> Result<SphereFit> {
    if weights.len() != samples.len() || weights.iter().any(|w| !(*w > 0.0)) {
        return Err(Error::InvalidArgument("sphere fit weights must be positive, one per sample".into()));
    }
    let dim = model.ambient_dim();
    if samples.len() < dim + 1 {
        return Err(Error::InvalidArgument(format!(
            "sphere fit needs at least {} samples, got {}",
            dim + 1,
            samples.len()
        )));
    }
    if let Some(p) = samples.iter().find(|p| p.coords.len() != dim || !model.contains(&p.coords)) {
        return Err(Error::InvalidArgument(format!("sample {:?} is not a point of the model", p.coords)));
    }
    let total: f64 = weights.iter().sum();
    let centroid: Vec<f64> = (0..dim)
        .map(|i| samples.iter().zip(weights).map(|(p, w)| w * p.coords[i]).sum::<f64>() / total)
        .collect();
    let spread = (samples
        .iter()
        .map(|p| p.coords.iter().zip(&centroid).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
        .sum::<f64>()
        / samples.len() as f64)
        .sqrt();
    let step = 0.1 * spread.max(1e-6);
    let f = |c: &[f64]| fit_objective(c, samples, weights, model).0;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut starts = vec![centroid.clone()];
    for _ in 0..4 {
        starts.push(centroid.iter().map(|c| c + step * rng.gen_range(-1.0..1.0)).collect());
    }
    let opts = NelderMeadOptions {
        max_iter: 4000,
        f_tol: 1e-26,
        x_tol: 1e-12 * spread.max(1e-6),
        initial_step: step,
    };
    let mut best = None::<crate::optimize::Minimum>;
    let mut iterations = 0;
    for s in &starts {
        let m = nelder_mead(f, s, &opts);
        iterations += m.iterations;
        if best.as_ref().map_or(true, |b| m.value < b.value) {
            best = Some(m);
        }
    }
    let best = best.expect("at least one start");
    let polish = nelder_mead(
        f,
        &best.x,
        &NelderMeadOptions {
            initial_step: 1e-3 * step,
            ..opts
        },
    );
    iterations += polish.iterations;
    let fin = if polish.value <= best.value { polish.clone() } else { best };
    if !polish.converged || !fin.value.is_finite() {
        return Err(Error::Numerical(format!(
            "sphere fit did not converge within the iteration budget (objective {})",
            fin.value
        )));
    }
    let (var, rho0) = fit_objective(&fin.x, samples, weights, model);
    Ok(SphereFit {
        center: AmbientPoint::new(fin.x),
        rho0,
        rms: var.max(0.0).sqrt(),
        iterations,
    })
}

/// Points of the geodesic sphere of radius `rho` about `center`, one per rule node.
pub fn geodesic_sphere_points(model: &SpaceFormModel, center: &[f64], rho: f64, rule: &SphericalRule) -> Vec<AmbientPoint> {
    let s = model.chart_radius(rho);
    rule.nodes()
        .iter()
        .map(|nd| {
            let y: Vec<f64> = nd.direction.iter().map(|c| s * c).collect();
            AmbientPoint::new(model.translate(center, &y))
        })
        .collect()
}

fn directed(a: &[AmbientPoint], b: &[AmbientPoint], delta: f64) -> f64 {
    a.par_iter()
        .map(|p| {
            let q = b
                .iter()
                .min_by(|x, y| {
                    distance_key(&p.coords, &x.coords, delta).total_cmp(&distance_key(&p.coords, &y.coords, delta))
                })
                .expect("nonempty");
            distance_unchecked(&p.coords, &q.coords, delta)
        })
        .reduce(|| 0.0, f64::max)
}

/// Hausdorff distance between two finite point sets in the ambient metric.
pub fn hausdorff_distance(a: &[AmbientPoint], b: &[AmbientPoint], model: &SpaceFormModel) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidArgument("Hausdorff distance of an empty set".into()));
    }
    for p in a.iter().chain(b) {
        model.check_inside(&p.coords)?;
    }
    let d = model.delta();
    Ok(directed(a, b, d).max(directed(b, a, d)))
}

/// Hausdorff distance between a surface and a geodesic sphere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HausdorffEstimate {
    pub value: f64,
    pub surface_to_sphere: f64,
    pub sphere_to_surface: f64,
    /// Change of `value` when both samplings are refined.
    pub refinement_error: f64,
}

/// Number of largest node values polished by continuous maximization.
const POLISH_NODES: usize = 4;

fn top_nodes(values: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    idx.truncate(POLISH_NODES);
    idx
}

fn surface_sphere_once(surface: &RadialSurface, center: &[f64], rho0: f64, order: usize) -> Result<(f64, f64)> {
    let model = *surface.model();
    let delta = model.delta();
    let n = surface.n();
    let rule = SphericalRule::new(n, order)?;
    let opts = NelderMeadOptions {
        max_iter: 400,
        f_tol: 1e-30,
        x_tol: 1e-10,
        initial_step: 0.05,
    };

    // Surface to sphere: the distance from p to the sphere is |d(c, p) - rho0|.
    let to_sphere = |angles: &[f64]| -> f64 {
        match surface.chart_position(&direction_from_angles(angles)) {
            Ok(x) => (distance_unchecked(center, &x, delta) - rho0).abs(),
            Err(_) => 0.0,
        }
    };
    let s2s_nodes = rule
        .nodes()
        .par_iter()
        .map(|nd| surface.chart_position(&nd.direction).map(|p| (distance_unchecked(center, &p, delta) - rho0).abs()))
        .collect::<Result<Vec<_>>>()?;
    let s2s = top_nodes(&s2s_nodes)
        .par_iter()
        .map(|&i| -nelder_mead(|a: &[f64]| -to_sphere(a), &rule.nodes()[i].angles, &opts).value)
        .chain(s2s_nodes.par_iter().copied())
        .reduce(|| 0.0, f64::max);

    // Sphere to surface: coarse nearest search, then continuous refinement in the angles.
    let coarse_rule = SphericalRule::new(n, 6)?;
    let coarse = coarse_rule
        .nodes()
        .iter()
        .map(|nd| Ok((nd.angles.clone(), surface.chart_position(&nd.direction)?)))
        .collect::<Result<Vec<_>>>()?;
    let dist_at = |q: &[f64], angles: &[f64]| -> f64 {
        match surface.chart_position(&direction_from_angles(angles)) {
            Ok(x) => distance_unchecked(q, &x, delta),
            Err(_) => f64::INFINITY,
        }
    };
    let sphere_chart = model.chart_radius(rho0);
    let sphere_point = |angles: &[f64]| -> Vec<f64> {
        let y: Vec<f64> = direction_from_angles(angles).iter().map(|c| sphere_chart * c).collect();
        model.translate(center, &y)
    };
    // Starting angles for the nearest-point search from q, with their distance.
    let start_for = |q: &[f64]| -> (Vec<f64>, f64) {
        let mut start = coarse
            .iter()
            .min_by(|a, b| distance_key(q, &a.1, delta).total_cmp(&distance_key(q, &b.1, delta)))
            .map(|(a, _)| a.clone())
            .expect("nonempty coarse rule");
        let mut best = dist_at(q, &start);
        let qn = q.iter().map(|c| c * c).sum::<f64>().sqrt();
        if qn > 0.0 {
            let radial = angles_from_direction(&q.iter().map(|c| c / qn).collect::<Vec<_>>());
            let d = dist_at(q, &radial);
            if d < best {
                start = radial;
                best = d;
            }
        }
        (start, best)
    };
    let nearest = |q: &[f64]| -> f64 {
        let (start, _) = start_for(q);
        nelder_mead(|a: &[f64]| dist_at(q, a), &start, &opts).value
    };
    // The start distance bounds the nearest distance from above, so nodes are
    // refined by decreasing bound until no remaining bound beats the maximum.
    let starts: Vec<(Vec<f64>, Vec<f64>, f64)> = rule
        .nodes()
        .par_iter()
        .map(|nd| {
            let q = sphere_point(&nd.angles);
            let (a, ub) = start_for(&q);
            (q, a, ub)
        })
        .collect();
    let mut by_bound: Vec<usize> = (0..starts.len()).collect();
    by_bound.sort_by(|&a, &b| starts[b].2.total_cmp(&starts[a].2).then(a.cmp(&b)));
    let mut s2f_nodes = vec![0.0; starts.len()];
    let mut best = 0.0f64;
    for chunk in by_bound.chunks(16) {
        if starts[chunk[0]].2 <= best {
            break;
        }
        let vals: Vec<f64> = chunk
            .par_iter()
            .map(|&i| {
                let (q, a, _) = &starts[i];
                nelder_mead(|x: &[f64]| dist_at(q, x), a, &opts).value
            })
            .collect();
        for (&i, v) in chunk.iter().zip(vals) {
            s2f_nodes[i] = v;
            best = best.max(v);
        }
    }
    let s2f = top_nodes(&s2f_nodes)
        .par_iter()
        .map(|&i| {
            let outer = NelderMeadOptions {
                max_iter: 150,
                x_tol: 1e-8,
                ..opts
            };
            -nelder_mead(|v: &[f64]| -nearest(&sphere_point(v)), &rule.nodes()[i].angles, &outer).value
        })
        .chain(s2f_nodes.par_iter().copied())
        .reduce(|| 0.0, f64::max);
    Ok((s2s, s2f))
}

/// Hausdorff distance between `surface` and the sphere `S(center, rho0)`,
/// sampled on a rule of the given order and checked at twice the order.
pub fn surface_sphere_hausdorff(surface: &RadialSurface, center: &[f64], rho0: f64, order: usize) -> Result<HausdorffEstimate> {
    surface.model().check_inside(center)?;
    let (a, b) = surface_sphere_once(surface, center, rho0, order)?;
    let (ac, bc) = surface_sphere_once(surface, center, rho0, 2 * order)?;
    let value = a.max(b);
    Ok(HausdorffEstimate {
        value,
        surface_to_sphere: a,
        sphere_to_surface: b,
        refinement_error: (ac.max(bc) - value).abs(),
    })
}

/// Experiment parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct PinchSettings {
    pub quad_order: usize,
    pub quad_order_check: usize,
    /// Fixed `h`; the volume-normalized mean of `H_r` when absent.
    pub h: Option<f64>,
    pub constants: ConstantSettings,
    /// Calibration used when `c_n` / `b_consts` are not configured directly.
    pub calibration: Option<Calibration>,
    pub calibration_samples: usize,
    pub calibration_margin: f64,
    pub seed: u64,
    /// Order of the node set the sphere is fitted to.
    pub fit_order: usize,
    /// Order of the Hausdorff sampling.
    pub hausdorff_order: usize,
}

impl Default for PinchSettings {
    fn default() -> Self {
        Self {
            quad_order: 32,
            quad_order_check: 64,
            h: None,
            constants: ConstantSettings::default(),
            calibration: None,
            calibration_samples: 100_000,
            calibration_margin: 0.1,
            seed: 0,
            fit_order: 12,
            hausdorff_order: 16,
        }
    }
}

impl PinchSettings {
    /// `c_n` and Maclaurin constants: configured values first, then a supplied
    /// calibration, otherwise a fresh seeded calibration.
    pub fn symmetric_constants(&self, n: usize, r: usize) -> Result<SymmetricConstants> {
        let cal = match (&self.constants.c_n, &self.constants.b_consts, &self.calibration) {
            (Some(_), Some(_), _) => None,
            (_, _, Some(c)) if c.n == n && c.r == r => Some(c.clone()),
            (_, _, Some(c)) => {
                return Err(Error::InvalidArgument(format!(
                    "calibration is for n = {}, r = {} but the experiment has n = {n}, r = {r}",
                    c.n, c.r
                )))
            }
            _ => Some(calibrate(n, r, self.calibration_samples, self.seed, self.calibration_margin)?),
        };
        let label = |c: &Calibration| {
            format!(
                "calibrated (seed {}, samples {}, margin {})",
                c.seed, c.samples, c.margin
            )
        };
        let (c_n, c_n_source) = match (self.constants.c_n, &cal) {
            (Some(v), _) => (v, "configured".to_string()),
            (None, Some(c)) => (c.c_n, label(c)),
            (None, None) => unreachable!("calibration exists when c_n is absent"),
        };
        let (b_consts, b_source) = match (&self.constants.b_consts, &cal) {
            (Some(v), _) => (v.clone(), "configured".to_string()),
            (None, Some(c)) => (c.b_consts.clone(), label(c)),
            (None, None) => unreachable!("calibration exists when b_consts is absent"),
        };
        if b_consts.len() < r {
            return Err(Error::InvalidArgument(format!(
                "need {r} Maclaurin constants, got {}",
                b_consts.len()
            )));
        }
        Ok(SymmetricConstants {
            c_n,
            b_consts,
            c_n_source,
            b_source,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PinchReport {
    pub n: usize,
    pub r: usize,
    pub delta: f64,
    pub quad_order: usize,
    pub quad_order_check: usize,
    pub h: f64,
    pub eps_l1: f64,
    pub eps_l1_refinement: f64,
    pub eps_linf: f64,
    pub eps_mean: f64,
    pub tau_l2: f64,
    pub tau_lnp1: f64,
    #[serde(rename = "R0")]
    pub r0: f64,
    #[serde(rename = "R")]
    pub big_r: f64,
    #[serde(rename = "B_sup")]
    pub b_sup: f64,
    #[serde(rename = "minH_rplus1")]
    pub min_h_next: f64,
    #[serde(rename = "minH_partial")]
    pub min_partial: f64,
    pub volume: f64,
    pub sphere_center: AmbientPoint,
    pub rho0: f64,
    pub fit_rms: f64,
    #[serde(rename = "dH")]
    pub dh: f64,
    #[serde(rename = "dH_refinement")]
    pub dh_refinement: f64,
    pub bound: f64,
    pub bound_prefactor: f64,
    pub applicable: bool,
    /// `dH <= bound`; `None` when the estimate does not apply.
    pub bound_holds: Option<bool>,
    pub gate: HypothesisGate,
    pub constants: Option<ProofConstants>,
    /// Why the constant chain could not be evaluated, if it could not.
    pub constants_error: Option<String>,
    /// The fitted sphere stands in for the sphere of the stability theorem.
    pub sphere_note: String,
}

/// Sampling, curvature fields, constant chain and hypothesis gate of one
/// surface, shared by the pinching experiment and the identity suite.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub n: usize,
    pub r: usize,
    pub model: SpaceFormModel,
    pub sampling: PairedSampling,
    pub r0: f64,
    pub big_r: f64,
    pub h: f64,
    pub eps: Vec<f64>,
    pub eps_check: Vec<f64>,
    pub eps_l1: f64,
    pub eps_l1_check: f64,
    pub eps_linf: f64,
    pub eps_mean: f64,
    pub tau_l2: f64,
    pub tau_lnp1: f64,
    pub inputs: ChainInputs,
    pub constants: Option<ProofConstants>,
    pub constants_error: Option<String>,
    pub gate: HypothesisGate,
}

pub fn prepare(surface: &RadialSurface, r: usize, settings: &PinchSettings) -> Result<Prepared> {
    let n = surface.n();
    if r == 0 || r >= n {
        return Err(Error::InvalidArgument(format!("r = {r} outside 1..{n}")));
    }
    if settings.quad_order_check < 2 * settings.quad_order {
        return Err(Error::InvalidArgument(format!(
            "quad_order_check = {} must be at least twice quad_order = {}",
            settings.quad_order_check, settings.quad_order
        )));
    }
    let model = *surface.model();
    let rule = SphericalRule::new(n, settings.quad_order)?;
    let star = surface.starshape_report(&rule)?;
    let sampling = PairedSampling::new(surface, settings.quad_order, settings.quad_order_check)?;
    let prim = &sampling.primary;

    let (h, eps) = epsilon_field(prim, r, settings.h)?;
    let (_, eps_check) = epsilon_field(&sampling.check, r, settings.h)?;
    let eps_l1 = prim.lp_norm_values(&eps, 1.0);
    let eps_l1_check = sampling.check.lp_norm_values(&eps_check, 1.0);
    let eps_linf = prim.lp_norm_values(&eps, f64::INFINITY);
    let eps_mean = prim.integrate_values(&eps) / prim.volume;
    let tau: Vec<f64> = prim.points.iter().map(|p| p.tau_norm()).collect();
    let tau_l2 = prim.lp_norm_values(&tau, 2.0);
    let tau_lnp1 = prim.lp_norm_values(&tau, (n + 1) as f64);
    let b_sup = prim
        .points
        .iter()
        .chain(&sampling.check.points)
        .map(|p| p.profile.kappa.spectral_norm())
        .fold(0.0, f64::max);
    let min_h_next = prim.points.iter().map(|p| p.h(r + 1)).fold(f64::INFINITY, f64::min);
    let min_partial = prim
        .points
        .iter()
        .map(|p| extreme_partial_h(r + 1, &p.profile.kappa))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(f64::INFINITY, f64::min);

    let inputs = ChainInputs {
        n,
        r,
        delta: model.delta(),
        h,
        min_partial,
        min_h_next,
        b_sup,
        volume: prim.volume,
        r0: star.r0,
        big_r: star.r_max,
    };
    let sym = settings.symmetric_constants(n, r)?;
    settings.constants.validate()?;
    // Past validation, a failure of the chain comes from the surface data.
    let (constants, constants_error) = match ProofConstants::evaluate(&inputs, &settings.constants, &sym, &model) {
        Ok(c) => (Some(c), None),
        Err(e) => (None, Some(e.to_string())),
    };

    let gate = hypothesis_gate(&GateInputs {
        starshaped: true,
        r0: star.r0,
        h,
        eps_linf,
        eps_l1,
        eps1: constants.as_ref().map(|c| c.eps1),
        min_h_next,
        big_r: star.r_max,
        max_radius: model.max_geodesic_radius(),
    });


    Ok(Prepared {
        n,
        r,
        model,
        r0: star.r0,
        big_r: star.r_max,
        h,
        eps,
        eps_check,
        eps_l1,
        eps_l1_check,
        eps_linf,
        eps_mean,
        tau_l2,
        tau_lnp1,
        inputs,
        constants,
        constants_error,
        gate,
        sampling,
    })
}

/// End-to-end experiment on one surface.
pub fn run_pinch(surface: &RadialSurface, r: usize, settings: &PinchSettings) -> Result<PinchReport> {
    let Prepared {
        n,
        model,
        sampling,
        r0,
        big_r,
        h,
        eps_l1,
        eps_l1_check,
        eps_linf,
        eps_mean,
        tau_l2,
        tau_lnp1,
        inputs,
        constants,
        constants_error,
        gate,
        ..
    } = prepare(surface, r, settings)?;
    let fit_rule = SphericalRule::new(n, settings.fit_order)?;
    let fit_sampled = SampledSurface::new(surface, &fit_rule)?;
    let fit_samples: Vec<AmbientPoint> = fit_sampled.points.iter().map(|p| p.x.clone()).collect();
    let fit = fit_geodesic_sphere_weighted(&fit_samples, &fit_sampled.weights, &model, settings.seed)?;
    let haus = surface_sphere_hausdorff(surface, &fit.center.coords, fit.rho0, settings.hausdorff_order)?;

    let (bound, prefactor) = match &constants {
        Some(c) => {
            let b = final_bound(eps_l1, fit.rho0, c)?;
            (b.value, b.prefactor)
        }
        None => (f64::NAN, f64::NAN),
    };
    let applicable = gate.pass && constants.is_some();
    let bound_holds = applicable.then_some(haus.value <= bound);

    Ok(PinchReport {
        n,
        r,
        delta: model.delta(),
        quad_order: settings.quad_order,
        quad_order_check: settings.quad_order_check,
        h,
        eps_l1,
        eps_l1_refinement: (eps_l1 - eps_l1_check).abs(),
        eps_linf,
        eps_mean,
        tau_l2,
        tau_lnp1,
        r0,
        big_r,
        b_sup: inputs.b_sup,
        min_h_next: inputs.min_h_next,
        min_partial: inputs.min_partial,
        volume: sampling.primary.volume,
        sphere_center: fit.center,
        rho0: fit.rho0,
        fit_rms: fit.rms,
        dh: haus.value,
        dh_refinement: haus.refinement_error,
        bound,
        bound_prefactor: prefactor,
        applicable,
        bound_holds,
        gate,
        constants,
        constants_error,
        sphere_note: "S_rho0 is the least-squares geodesic sphere of the surface samples".into(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentitySuite {
    pub checks: Vec<ResidualReport>,
    pub constants: Option<ProofConstants>,
}

/// Every residual and gap check on one surface. Checks that need the constant
/// chain are reported as failing when it could not be evaluated.
pub fn identity_suite(surface: &RadialSurface, r: usize, settings: &PinchSettings) -> Result<IdentitySuite> {
    let prep = prepare(surface, r, settings)?;
    let delta = prep.model.delta();
    let mut out = Vec::new();
    for k in 0..prep.n {
        out.push(hsiung_minkowski_residual(&prep.sampling, k, delta)?);
    }
    out.push(gauss_algebraic_surface(&prep.sampling.primary));
    out.push(cauchy_schwarz_chain_check(&prep.sampling));
    let missing = |name: String| ResidualReport {
        name,
        value: f64::NAN,
        tolerance: 0.0,
        refinement_error: 0.0,
        pass: false,
        kind: CheckKind::Inequality,
    };
    match &prep.constants {
        Some(c) => {
            match lemma1_surface(&prep.sampling.primary, r, c.k1) {
                Ok(rep) => out.push(rep),
                Err(Error::Hypothesis(_)) => out.push(missing(format!("lemma_tau_r{r}"))),
                Err(e) => return Err(e),
            }
            out.push(tau_l2_epsilon_bound_paired(&prep.sampling, &prep.eps, &prep.eps_check, c.k2));
        }
        None => {
            out.push(missing(format!("lemma_tau_r{r}")));
            out.push(missing("tau_l2_vs_eps_l1".into()));
        }
    }
    let kn = prep
        .constants
        .as_ref()
        .map_or_else(|| settings.constants.kn_ms.unwrap_or_else(|| default_kn_ms(prep.n)), |c| c.kn_ms);
    out.push(michael_simon_ratio(&prep.sampling.primary, kn));
    Ok(IdentitySuite {
        checks: out,
        constants: prep.constants,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub amplitude: f64,
    pub eps_l1: f64,
    pub eps_linf: f64,
    pub tau_l2: f64,
    pub tau_lnp1: f64,
    #[serde(rename = "R0")]
    pub r0: f64,
    #[serde(rename = "B_sup")]
    pub b_sup: f64,
    pub rho0: f64,
    #[serde(rename = "dH")]
    pub dh: f64,
    pub bound: f64,
    pub applicable: bool,
    /// All hypothesis checks except `||eps||_1 <= eps1` passed.
    pub gates_pass: bool,
    #[serde(rename = "dH_refinement")]
    pub dh_refinement: f64,
}

impl ScalingRow {
    pub fn from_report(amplitude: f64, rep: &PinchReport) -> Self {
        Self {
            amplitude,
            eps_l1: rep.eps_l1,
            eps_linf: rep.eps_linf,
            tau_l2: rep.tau_l2,
            tau_lnp1: rep.tau_lnp1,
            r0: rep.r0,
            b_sup: rep.b_sup,
            rho0: rep.rho0,
            dh: rep.dh,
            bound: rep.bound,
            applicable: rep.applicable,
            gates_pass: rep.gate.structural_pass,
            dh_refinement: rep.dh_refinement,
        }
    }

    pub const CSV_HEADER: &'static str = "amplitude,eps_l1,eps_linf,tau_l2,tau_lnp1,R0,B_sup,rho0,dH,bound,applicable";

    pub fn csv_row(&self) -> String {
        format!(
            "{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{}",
            self.amplitude,
            self.eps_l1,
            self.eps_linf,
            self.tau_l2,
            self.tau_lnp1,
            self.r0,
            self.b_sup,
            self.rho0,
            self.dh,
            self.bound,
            self.applicable
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingStudy {
    pub rows: Vec<ScalingRow>,
    /// Fit of `ln dH` against `ln ||eps||_1` over rows whose gates pass.
    pub regression: Option<LinearFit>,
    /// `dH` nonincreasing as the amplitude decreases, within the refinement estimates.
    pub monotone: bool,
    pub reports: Vec<PinchReport>,
}

/// Runs the family `rho_a = rho0 (1 + a sum_i w_i Y_i)` where the `w_i` are the
/// amplitudes of `base`.
pub fn scaling_study(base: &RadialSurface, amplitudes: &[f64], r: usize, settings: &PinchSettings) -> Result<ScalingStudy> {
    if amplitudes.is_empty() {
        return Err(Error::InvalidArgument("scaling study needs at least one amplitude".into()));
    }
    if amplitudes.windows(2).any(|w| !(w[0] > w[1])) || amplitudes.iter().any(|a| !(*a > 0.0)) {
        return Err(Error::InvalidArgument(format!(
            "amplitudes must be positive and strictly decreasing, got {amplitudes:?}"
        )));
    }
    let reports = amplitudes
        .par_iter()
        .map(|&a| run_pinch(&base.scaled(a), r, settings))
        .collect::<Result<Vec<_>>>()?;
    let rows: Vec<ScalingRow> = amplitudes
        .iter()
        .zip(&reports)
        .map(|(a, rep)| ScalingRow::from_report(*a, rep))
        .collect();
    let monotone = rows
        .windows(2)
        .all(|w| w[1].dh <= w[0].dh + w[0].dh_refinement + w[1].dh_refinement + 1e-12);
    let (x, y): (Vec<f64>, Vec<f64>) = rows
        .iter()
        .filter(|row| row.gates_pass && row.dh > 0.0 && row.eps_l1 > 0.0)
        .map(|row| (row.eps_l1.ln(), row.dh.ln()))
        .unzip();
    Ok(ScalingStudy {
        regression: linear_regression(&x, &y),
        rows,
        monotone,
        reports,
    })
}
