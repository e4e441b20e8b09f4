//! The constant chain of the stability estimate.
//!
//! `K1` bounds the umbilicity tensor pointwise, `K2` integrates that bound
//! through the Minkowski formulas, `K3` converts it into a bound relative to the
//! Euclidean mean curvature, and `eps1`, `C`, `gamma` come out of the
//! nearly-umbilical stability theorem whose constants `eps0`, `c_RS`, `alpha` are
//! not known explicitly and are configuration values.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spaceform::{c_delta, s_delta, SpaceFormModel};
use crate::symfun::{k1, k1_prime, K1Inputs};

/// Which lower bound of `H_r` enters `K1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum K1Mode {
    /// `min H_r >= h/2`.
    #[default]
    #[serde(rename = "h")]
    H,
    /// `min H_r >= (min H_{r+1})^{r/(r+1)}`.
    #[serde(rename = "hr+1")]
    HNext,
}

/// Externally sourced constants and overrides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantSettings {
    #[serde(default = "default_eps0")]
    pub eps0: f64,
    #[serde(default = "default_one", rename = "c_RS")]
    pub c_rs: f64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// Michael–Simon constant for the normalized mean curvature.
    #[serde(default, rename = "Kn_MS")]
    pub kn_ms: Option<f64>,
    #[serde(default)]
    pub c_n_phi: Option<f64>,
    #[serde(default)]
    pub c_n: Option<f64>,
    #[serde(default)]
    pub b_consts: Option<Vec<f64>>,
    #[serde(default, rename = "K1_mode")]
    pub k1_mode: K1Mode,
}

fn default_eps0() -> f64 {
    0.1
}
fn default_one() -> f64 {
    1.0
}
fn default_alpha() -> f64 {
    0.5
}

impl Default for ConstantSettings {
    fn default() -> Self {
        Self {
            eps0: default_eps0(),
            c_rs: 1.0,
            alpha: default_alpha(),
            kn_ms: None,
            c_n_phi: None,
            c_n: None,
            b_consts: None,
            k1_mode: K1Mode::H,
        }
    }
}

impl ConstantSettings {
    pub fn validate(&self) -> Result<()> {
        let pos = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidArgument(format!("{name} must be positive and finite, got {v}")))
            }
        };
        pos("eps0", self.eps0)?;
        if self.eps0 > 1.0 {
            return Err(Error::InvalidArgument(format!("eps0 must lie in (0, 1], got {}", self.eps0)));
        }
        pos("c_RS", self.c_rs)?;
        pos("alpha", self.alpha)?;
        for (name, v) in [("Kn_MS", self.kn_ms), ("c_n_phi", self.c_n_phi), ("c_n", self.c_n)] {
            if let Some(v) = v {
                pos(name, v)?;
            }
        }
        if let Some(b) = &self.b_consts {
            for v in b {
                pos("b_consts entry", *v)?;
            }
        }
        Ok(())
    }
}

/// Volume of the unit ball in `R^n`.
pub fn unit_ball_volume(n: usize) -> f64 {
    match n {
        0 => 1.0,
        1 => 2.0,
        _ => 2.0 * std::f64::consts::PI / n as f64 * unit_ball_volume(n - 2),
    }
}

/// Default Michael–Simon constant `n 4^{n+1} / omega_n^{1/n}`; the factor `n`
/// converts from the unnormalized to the normalized mean curvature.
pub fn default_kn_ms(n: usize) -> f64 {
    n as f64 * 4f64.powi(n as i32 + 1) / unit_ball_volume(n).powf(1.0 / n as f64)
}

/// `sup |phi|` over the geodesic ball of radius `big_r` about the base point.
pub fn phi_sup(model: &SpaceFormModel, big_r: f64) -> f64 {
    if model.delta() == 0.0 {
        return 0.0;
    }
    let s = model.chart_radius(big_r.min(model.max_geodesic_radius()));
    (1.0 + 0.25 * model.delta() * s * s).ln().abs()
}

/// Default `c_{n,phi} = Kn_MS exp(n sup|phi|)`.
pub fn default_c_n_phi(n: usize, kn_ms: f64, phi_sup: f64) -> f64 {
    kn_ms * (n as f64 * phi_sup).exp()
}

/// `K2` from `K1`, `R0 = min|<Z,nu>|`, `||B||_inf` and the containing radius `R`.
pub fn k2(delta: f64, k1: f64, r0: f64, b_sup: f64, big_r: f64) -> Result<f64> {
    if !(r0 > 0.0) {
        return Err(Error::Hypothesis(format!("R0 = {r0} is not positive; the surface is not starshaped")));
    }
    if !(b_sup >= 0.0) || !(big_r >= 0.0) || !(k1 > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "K2 needs K1 > 0, ||B|| >= 0, R >= 0; got K1 = {k1}, ||B|| = {b_sup}, R = {big_r}"
        )));
    }
    let factor = if delta > 0.0 {
        1.0 + b_sup / delta.sqrt()
    } else if delta == 0.0 {
        1.0 + b_sup * big_r
    } else {
        c_delta(big_r, delta) + b_sup * s_delta(big_r, delta)
    };
    Ok(k1 / r0 * factor)
}

/// `K3 = K2 c_{n,phi}^2 V^{(2n+2)/n}`.
pub fn k3(k2: f64, c_n_phi: f64, volume: f64, n: usize) -> Result<f64> {
    if !(k2 > 0.0 && c_n_phi > 0.0 && volume > 0.0) || n == 0 {
        return Err(Error::InvalidArgument(format!(
            "K3 needs positive inputs; got K2 = {k2}, c = {c_n_phi}, V = {volume}, n = {n}"
        )));
    }
    let nn = n as f64;
    Ok(k2 * c_n_phi * c_n_phi * volume.powf((2.0 * nn + 2.0) / nn))
}

/// `eps1 = eps0^{2(n+1)} / K3`.
pub fn eps1(eps0: f64, k3: f64, n: usize) -> Result<f64> {
    if !(eps0 > 0.0 && eps0 <= 1.0) || !(k3 > 0.0) {
        return Err(Error::InvalidArgument(format!("eps1 needs eps0 in (0, 1] and K3 > 0; got {eps0}, {k3}")));
    }
    Ok(eps0.powi(2 * (n as i32 + 1)) / k3)
}

/// `gamma = alpha / (2(n+1))`.
pub fn gamma(alpha: f64, n: usize) -> f64 {
    alpha / (2.0 * (n as f64 + 1.0))
}

/// Surface quantities the constant chain depends on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainInputs {
    pub n: usize,
    pub r: usize,
    pub delta: f64,
    pub h: f64,
    /// `min H_{r+1;n,1}`.
    pub min_partial: f64,
    /// `min H_{r+1}`.
    pub min_h_next: f64,
    pub b_sup: f64,
    /// Ambient volume of the surface.
    pub volume: f64,
    pub r0: f64,
    /// Radius of a geodesic ball about the base point containing the surface.
    pub big_r: f64,
}

/// Where a constant came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub c_n: String,
    pub b_consts: String,
    pub kn_ms: String,
    pub c_n_phi: String,
    /// The stability-theorem constants `eps0`, `c_RS`, `alpha` are always configured.
    pub theorem_constants: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProofConstants {
    #[serde(rename = "K1")]
    pub k1: f64,
    #[serde(rename = "K2")]
    pub k2: f64,
    #[serde(rename = "K3")]
    pub k3: f64,
    pub eps1: f64,
    pub eps0: f64,
    #[serde(rename = "c_RS")]
    pub c_rs: f64,
    pub alpha: f64,
    pub gamma: f64,
    pub c_n_phi: f64,
    #[serde(rename = "Kn_MS")]
    pub kn_ms: f64,
    pub c_n: f64,
    pub b_consts: Vec<f64>,
    #[serde(rename = "K1_mode")]
    pub k1_mode: K1Mode,
    /// Inputs consumed by `K3` (and therefore by `eps1` and `C`).
    pub depends_on: ChainInputs,
    pub provenance: Provenance,
}

/// `c_n` and Maclaurin constants together with a description of their source.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricConstants {
    pub c_n: f64,
    pub b_consts: Vec<f64>,
    pub c_n_source: String,
    pub b_source: String,
}

impl ProofConstants {
    /// Evaluates the full chain.
    pub fn evaluate(
        inputs: &ChainInputs,
        settings: &ConstantSettings,
        sym: &SymmetricConstants,
        model: &SpaceFormModel,
    ) -> Result<Self> {
        settings.validate()?;
        let k1_inputs = K1Inputs {
            n: inputs.n,
            r: inputs.r,
            min_partial: inputs.min_partial,
            b_sup: inputs.b_sup,
            c_n: sym.c_n,
            b_consts: &sym.b_consts,
        };
        let k1v = match settings.k1_mode {
            K1Mode::H => k1(&k1_inputs, inputs.h)?,
            K1Mode::HNext => k1_prime(&k1_inputs, inputs.min_h_next)?,
        };
        let k2v = k2(inputs.delta, k1v, inputs.r0, inputs.b_sup, inputs.big_r)?;
        let (kn_ms, kn_src) = match settings.kn_ms {
            Some(v) => (v, "configured".to_string()),
            None => (default_kn_ms(inputs.n), "default n 4^(n+1) / omega_n^(1/n)".to_string()),
        };
        let (c_n_phi, c_src) = match settings.c_n_phi {
            Some(v) => (v, "configured".to_string()),
            None => {
                let ps = phi_sup(model, inputs.big_r);
                (
                    default_c_n_phi(inputs.n, kn_ms, ps),
                    format!("default Kn_MS exp(n sup|phi|), sup|phi| = {ps:e} on the ball of radius R"),
                )
            }
        };
        let k3v = k3(k2v, c_n_phi, inputs.volume, inputs.n)?;
        let eps1v = eps1(settings.eps0, k3v, inputs.n)?;
        Ok(Self {
            k1: k1v,
            k2: k2v,
            k3: k3v,
            eps1: eps1v,
            eps0: settings.eps0,
            c_rs: settings.c_rs,
            alpha: settings.alpha,
            gamma: gamma(settings.alpha, inputs.n),
            c_n_phi,
            kn_ms,
            c_n: sym.c_n,
            b_consts: sym.b_consts.clone(),
            k1_mode: settings.k1_mode,
            depends_on: *inputs,
            provenance: Provenance {
                c_n: sym.c_n_source.clone(),
                b_consts: sym.b_source.clone(),
                kn_ms: kn_src,
                c_n_phi: c_src,
                theorem_constants: "configured placeholders (eps0, c_RS, alpha); not derived".to_string(),
            },
        })
    }

    /// `C = c_RS rho0 K3^gamma`.
    pub fn prefactor(&self, rho0: f64) -> f64 {
        self.c_rs * rho0 * self.k3.powf(self.gamma)
    }
}

/// Value of `C ||eps||_1^gamma` and whether the estimate applies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FinalBound {
    pub value: f64,
    pub prefactor: f64,
    pub applicable: bool,
}

pub fn final_bound(eps_l1: f64, rho0: f64, consts: &ProofConstants) -> Result<FinalBound> {
    if !(eps_l1 >= 0.0) || !(rho0 > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "final bound needs ||eps||_1 >= 0 and rho0 > 0; got {eps_l1}, {rho0}"
        )));
    }
    let c = consts.prefactor(rho0);
    Ok(FinalBound {
        value: c * eps_l1.powf(consts.gamma),
        prefactor: c,
        applicable: eps_l1 <= consts.eps1,
    })
}
