//! Experiment configuration files (TOML).
//!
//! ```toml
//! [surface]
//! n = 2
//! delta = -1.0
//! rho0 = 0.8
//! perturbation = [{ basis = "harmonic", l = 3, m = 0, amplitude = 0.05 }]
//!
//! [experiment]
//! r = 1
//! seed = 7
//!
//! [quadrature]
//! quad_order = 32
//! quad_order_check = 64
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::constants::ConstantSettings;
use crate::error::{Error, Result};
use crate::pinch::PinchSettings;
use crate::spaceform::SpaceFormModel;
use crate::surface::{PerturbationTerm, RadialSurface, SignConvention};
use crate::symfun::Calibration;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurfaceSection {
    pub n: usize,
    pub delta: f64,
    pub rho0: f64,
    #[serde(default)]
    pub perturbation: Vec<PerturbationTerm>,
    /// Orthogonal matrix applied to the surface, rows of length `n + 1`.
    #[serde(default)]
    pub rotation: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub sign: SignConvention,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    #[serde(default = "one")]
    pub r: usize,
    #[serde(default)]
    pub seed: u64,
    /// Fixed `h`; the volume-normalized mean of `H_r` when absent.
    #[serde(default)]
    pub h: Option<f64>,
    /// Amplitude schedule of the scaling study.
    #[serde(default)]
    pub amplitudes: Option<Vec<f64>>,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        Self {
            r: 1,
            seed: 0,
            h: None,
            amplitudes: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureSection {
    #[serde(default = "d_quad")]
    pub quad_order: usize,
    #[serde(default = "d_quad_check")]
    pub quad_order_check: usize,
    #[serde(default = "d_fit")]
    pub fit_order: usize,
    #[serde(default = "d_haus")]
    pub hausdorff_order: usize,
}

impl Default for QuadratureSection {
    fn default() -> Self {
        Self {
            quad_order: d_quad(),
            quad_order_check: d_quad_check(),
            fit_order: d_fit(),
            hausdorff_order: d_haus(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationSection {
    /// Calibration file written by `starpinch calibrate`; relative paths are
    /// taken from the directory of the config file.
    #[serde(default)]
    pub file: Option<PathBuf>,
    #[serde(default = "d_samples")]
    pub samples: usize,
    #[serde(default = "d_margin")]
    pub margin: f64,
}

impl Default for CalibrationSection {
    fn default() -> Self {
        Self {
            file: None,
            samples: d_samples(),
            margin: d_margin(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "d_out")]
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: d_out() }
    }
}

fn one() -> usize {
    1
}
fn d_quad() -> usize {
    32
}
fn d_quad_check() -> usize {
    64
}
fn d_fit() -> usize {
    12
}
fn d_haus() -> usize {
    16
}
fn d_samples() -> usize {
    100_000
}
fn d_margin() -> f64 {
    0.1
}
fn d_out() -> PathBuf {
    PathBuf::from("out")
}

/// Smallest sample count accepted for a calibration.
pub const MIN_CALIBRATION_SAMPLES: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub surface: SurfaceSection,
    #[serde(default)]
    pub experiment: ExperimentSection,
    #[serde(default)]
    pub quadrature: QuadratureSection,
    #[serde(default)]
    pub constants: ConstantSettings,
    #[serde(default)]
    pub calibration: CalibrationSection,
    #[serde(default)]
    pub output: OutputSection,
}

/// Line of `key` inside `[section]`, 1-based.
fn locate(text: &str, section: &str, key: &str) -> Option<usize> {
    let mut current = String::new();
    for (i, line) in text.lines().enumerate() {
        let t = line.trim();
        if let Some(name) = t.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            current = name.trim().to_string();
            continue;
        }
        if current == section && t.split('=').next().map(str::trim) == Some(key) {
            return Some(i + 1);
        }
    }
    None
}

fn detail(e: &Error) -> String {
    match e {
        Error::InvalidArgument(m) => m.clone(),
        other => other.to_string(),
    }
}

fn positive(v: f64) -> bool {
    v > 0.0 && v.is_finite()
}

impl ExperimentConfig {
    /// Parses and validates; diagnostics name the offending key and, when
    /// known, its line.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::InvalidArgument(format!("config: {e}")))?;
        cfg.validate().map_err(|(section, key, msg)| {
            let at = locate(text, section, key).map_or(String::new(), |l| format!(" (line {l})"));
            Error::InvalidArgument(format!("config key {section}.{key}{at}: {msg}"))
        })?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidArgument(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml_str(&text)?;
        if let Some(f) = &cfg.calibration.file {
            if f.is_relative() {
                let base = path.parent().unwrap_or(Path::new("."));
                cfg.calibration.file = Some(base.join(f));
            }
        }
        Ok(cfg)
    }

    /// Checks every value; on failure returns `(section, key, message)`.
    pub fn validate(&self) -> std::result::Result<(), (&'static str, &'static str, String)> {
        let s = &self.surface;
        if !(2..=3).contains(&s.n) {
            return Err(("surface", "n", format!("dimension {} is not supported (use 2 or 3)", s.n)));
        }
        if !s.delta.is_finite() {
            return Err(("surface", "delta", format!("must be finite, got {}", s.delta)));
        }
        if !positive(s.rho0) {
            return Err(("surface", "rho0", format!("must be positive, got {}", s.rho0)));
        }
        if s.delta > 0.0 {
            let reach = s.rho0 * (1.0 + s.perturbation.iter().map(|t| t.amplitude.abs()).sum::<f64>());
            let limit = std::f64::consts::FRAC_PI_2 / s.delta.sqrt();
            if reach >= limit {
                return Err((
                    "surface",
                    "rho0",
                    format!("radius up to {reach} does not fit in the hemisphere of radius {limit}"),
                ));
            }
        }
        if let Err(e) = self.surface() {
            let key = if s.rotation.is_some() && matches!(&e, Error::InvalidArgument(m) if m.contains("rotation")) {
                "rotation"
            } else {
                "perturbation"
            };
            return Err(("surface", key, detail(&e)));
        }
        let e = &self.experiment;
        if e.r == 0 || e.r >= s.n {
            return Err(("experiment", "r", format!("must lie in 1..={}, got {}", s.n - 1, e.r)));
        }
        if let Some(h) = e.h {
            if !positive(h) {
                return Err(("experiment", "h", format!("must be positive, got {h}")));
            }
        }
        if let Some(a) = &e.amplitudes {
            if a.is_empty() || a.iter().any(|v| !positive(*v)) || a.windows(2).any(|w| !(w[0] > w[1])) {
                return Err((
                    "experiment",
                    "amplitudes",
                    format!("must be positive and strictly decreasing, got {a:?}"),
                ));
            }
        }
        let q = &self.quadrature;
        for (key, v) in [
            ("quad_order", q.quad_order),
            ("fit_order", q.fit_order),
            ("hausdorff_order", q.hausdorff_order),
        ] {
            if v < 4 {
                return Err(("quadrature", key, format!("must be at least 4, got {v}")));
            }
        }
        if q.quad_order_check < 2 * q.quad_order {
            return Err((
                "quadrature",
                "quad_order_check",
                format!("must be at least 2 * quad_order = {}, got {}", 2 * q.quad_order, q.quad_order_check),
            ));
        }
        if let Err(err) = self.constants.validate() {
            let msg = detail(&err);
            let key = ["eps0", "c_RS", "alpha", "Kn_MS", "c_n_phi", "c_n", "b_consts"]
                .into_iter()
                .find(|k| msg.contains(k))
                .unwrap_or("constants");
            return Err(("constants", key, msg));
        }
        let c = &self.calibration;
        if c.samples < MIN_CALIBRATION_SAMPLES {
            return Err((
                "calibration",
                "samples",
                format!("must be at least {MIN_CALIBRATION_SAMPLES}, got {}", c.samples),
            ));
        }
        if !(0.0..1.0).contains(&c.margin) {
            return Err(("calibration", "margin", format!("must lie in [0, 1), got {}", c.margin)));
        }
        Ok(())
    }

    pub fn model(&self) -> Result<SpaceFormModel> {
        SpaceFormModel::new(self.surface.delta, self.surface.n + 1)
    }

    pub fn surface(&self) -> Result<RadialSurface> {
        let s = &self.surface;
        let mut surf = RadialSurface::new(s.n, self.model()?, s.rho0, s.perturbation.clone())?;
        if let Some(q) = &s.rotation {
            surf = surf.with_rotation(q.clone())?;
        }
        Ok(surf.with_sign_convention(s.sign))
    }

    /// Reads the configured calibration file, if any, and checks it matches `(n, r)`.
    pub fn load_calibration(&self) -> Result<Option<Calibration>> {
        let Some(path) = &self.calibration.file else {
            return Ok(None);
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidArgument(format!("cannot read calibration {}: {e}", path.display())))?;
        let cal = Calibration::from_toml(&text)
            .map_err(|e| Error::InvalidArgument(format!("calibration {}: {e}", path.display())))?;
        if cal.n != self.surface.n || cal.r != self.experiment.r {
            return Err(Error::InvalidArgument(format!(
                "calibration {} is for n = {}, r = {}; config has n = {}, r = {}",
                path.display(),
                cal.n,
                cal.r,
                self.surface.n,
                self.experiment.r
            )));
        }
        Ok(Some(cal))
    }

    pub fn pinch_settings(&self, calibration: Option<Calibration>) -> PinchSettings {
        PinchSettings {
            quad_order: self.quadrature.quad_order,
            quad_order_check: self.quadrature.quad_order_check,
            h: self.experiment.h,
            constants: self.constants.clone(),
            calibration,
            calibration_samples: self.calibration.samples,
            calibration_margin: self.calibration.margin,
            seed: self.experiment.seed,
            fit_order: self.quadrature.fit_order,
            hausdorff_order: self.quadrature.hausdorff_order,
        }
    }

    /// Applies a quadrature order from the command line, raising the check
    /// order when needed.
    pub fn set_quad_order(&mut self, order: usize) {
        self.quadrature.quad_order = order;
        self.quadrature.quad_order_check = self.quadrature.quad_order_check.max(2 * order);
    }
}
