//! Symmetric functions of principal curvatures.
//!
//! Everything here is pointwise algebra on a curvature vector: the elementary
//! symmetric polynomials, the normalized mean curvatures `H_k`, the partial
//! curvatures `H_{l;i,j}`, the Newton and Maclaurin gaps, and the constant of
//! the pointwise umbilicity estimate `|tau|^2 <= K1 (H H_r - H_{r+1})`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack allowed on the sign of quantities that are nonnegative in exact arithmetic.
pub const GAP_SLACK: f64 = 1e-12;

/// `binom(n, k)` as a float; zero when `k > n`.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc.round()
}

/// Principal curvatures, sorted ascending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrincipalCurvatures {
    kappa: Vec<f64>,
}

impl PrincipalCurvatures {
    pub fn new(mut kappa: Vec<f64>) -> Result<Self> {
        if kappa.is_empty() {
            return Err(Error::InvalidArgument("empty curvature vector".into()));
        }
        if kappa.iter().any(|k| !k.is_finite()) {
            return Err(Error::Numerical(format!("non-finite principal curvature in {kappa:?}")));
        }
        kappa.sort_by(f64::total_cmp);
        Ok(Self { kappa })
    }

    pub fn n(&self) -> usize {
        self.kappa.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.kappa
    }

    /// Largest absolute principal curvature (spectral norm of the shape operator).
    pub fn spectral_norm(&self) -> f64 {
        self.kappa.iter().fold(0.0f64, |m, k| m.max(k.abs()))
    }
}

/// Elementary symmetric polynomials `sigma_0..sigma_m` of `values`, built one
/// root at a time from `prod (t + x_i)`.
pub fn elementary_symmetric_of(values: &[f64]) -> Vec<f64> {
    let mut e = vec![0.0; values.len() + 1];
    e[0] = 1.0;
    for (i, &x) in values.iter().enumerate() {
        for k in (1..=i + 1).rev() {
            e[k] += x * e[k - 1];
        }
    }
    e
}

pub fn elementary_symmetric(kappa: &PrincipalCurvatures) -> Vec<f64> {
    elementary_symmetric_of(kappa.as_slice())
}

/// `H_k = sigma_k / binom(n, k)`.
pub fn normalized_mean_curvatures(sigma: &[f64], n: usize) -> Result<Vec<f64>> {
    if sigma.len() != n + 1 {
        return Err(Error::InvalidArgument(format!(
            "expected {} symmetric polynomials, got {}",
            n + 1,
            sigma.len()
        )));
    }
    Ok(sigma
        .iter()
        .enumerate()
        .map(|(k, s)| s / binomial(n, k))
        .collect())
}

/// Pointwise curvature data derived from the principal curvatures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvatureProfile {
    pub kappa: PrincipalCurvatures,
    pub sigma: Vec<f64>,
    /// `H_0 = 1, H_1 = H, ..., H_n`.
    pub mean: Vec<f64>,
    /// Squared norm of the umbilicity tensor `S - H Id`.
    pub tau_sq: f64,
}

impl CurvatureProfile {
    pub fn new(kappa: PrincipalCurvatures) -> Self {
        let n = kappa.n();
        let sigma = elementary_symmetric(&kappa);
        let mean = normalized_mean_curvatures(&sigma, n).expect("length matches by construction");
        let h = mean[1];
        let tau_sq = kappa.as_slice().iter().map(|k| (k - h) * (k - h)).sum();
        Self {
            kappa,
            sigma,
            mean,
            tau_sq,
        }
    }

    pub fn from_values(kappa: Vec<f64>) -> Result<Self> {
        Ok(Self::new(PrincipalCurvatures::new(kappa)?))
    }

    pub fn n(&self) -> usize {
        self.kappa.n()
    }

    /// `H_k`.
    pub fn h(&self, k: usize) -> f64 {
        self.mean[k]
    }

    /// Scalar curvature from the traced Gauss equation, `n(n-1)(H_2 + delta)`.
    pub fn scalar_curvature(&self, delta: f64) -> f64 {
        let n = self.n() as f64;
        n * (n - 1.0) * (self.h(2) + delta)
    }
}

/// Value of a partial curvature `H_{l;i,j}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PartialMeanCurvature {
    pub value: f64,
    pub l: usize,
    pub i: usize,
    pub j: usize,
}

/// `H_{l;i,j} = sigma_{l-2}(kappa without entries i, j) / binom(n, l)`.
///
/// Indices are zero-based positions in the ascending curvature vector, so the
/// `H_{l;n,1}` of the estimate is `partial_h(l, n - 1, 0, kappa)`.
pub fn partial_h(l: usize, i: usize, j: usize, kappa: &PrincipalCurvatures) -> Result<PartialMeanCurvature> {
    let n = kappa.n();
    if l < 2 || l > n + 1 {
        return Err(Error::InvalidArgument(format!(
            "partial curvature order l = {l} outside 2..={}",
            n + 1
        )));
    }
    if i == j || i >= n || j >= n {
        return Err(Error::InvalidArgument(format!(
            "partial curvature indices must be distinct and below {n}, got ({i}, {j})"
        )));
    }
    let rest: Vec<f64> = kappa
        .as_slice()
        .iter()
        .enumerate()
        .filter(|(idx, _)| *idx != i && *idx != j)
        .map(|(_, k)| *k)
        .collect();
    let sigma = elementary_symmetric_of(&rest);
    let value = if l > n {
        0.0
    } else {
        sigma.get(l - 2).copied().unwrap_or(0.0) / binomial(n, l)
    };
    Ok(PartialMeanCurvature { value, l, i, j })
}

/// `H_{l;n,1}`: the partial curvature omitting the largest and smallest entries.
pub fn extreme_partial_h(l: usize, kappa: &PrincipalCurvatures) -> Result<f64> {
    let n = kappa.n();
    Ok(partial_h(l, n - 1, 0, kappa)?.value)
}

fn check_positive_cone(profile: &CurvatureProfile, top: usize) -> Result<()> {
    if profile.h(top) <= 0.0 {
        return Err(Error::Hypothesis(format!(
            "H_{top} = {} is not positive",
            profile.h(top)
        )));
    }
    for s in 1..top {
        if profile.h(s) <= 0.0 {
            return Err(Error::Hypothesis(format!(
                "H_{top} > 0 but H_{s} = {} is not positive; curvature vector {:?} lies outside the positive cone",
                profile.h(s),
                profile.kappa.as_slice()
            )));
        }
    }
    Ok(())
}

/// Gaps `H_k^{1/k} - H_{k+1}^{1/(k+1)}` of the Maclaurin chain for `k = 1..=r`.
pub fn maclaurin_gaps(profile: &CurvatureProfile, r: usize) -> Result<Vec<f64>> {
    let n = profile.n();
    if r == 0 || r >= n {
        return Err(Error::InvalidArgument(format!("r = {r} outside 1..{n}")));
    }
    check_positive_cone(profile, r + 1)?;
    Ok((1..=r)
        .map(|k| {
            profile.h(k).powf(1.0 / k as f64) - profile.h(k + 1).powf(1.0 / (k + 1) as f64)
        })
        .collect())
}

/// Newton gap `H_k^2 - H_{k+1} H_{k-1}`, nonnegative for every real curvature vector.
pub fn newton_gap(profile: &CurvatureProfile, k: usize) -> Result<f64> {
    let n = profile.n();
    if k == 0 || k >= n {
        return Err(Error::InvalidArgument(format!("Newton index k = {k} outside 1..{n}")));
    }
    Ok(profile.h(k) * profile.h(k) - profile.h(k + 1) * profile.h(k - 1))
}

/// Newton gap minus `c_n |tau|^2 H_{k+1;n,1}^2`.
pub fn sharpened_newton_gap(profile: &CurvatureProfile, k: usize, c_n: f64) -> Result<f64> {
    let gap = newton_gap(profile, k)?;
    let p = extreme_partial_h(k + 1, &profile.kappa)?;
    Ok(gap - c_n * profile.tau_sq * p * p)
}

/// Inputs shared by the umbilicity-estimate constants.
#[derive(Debug, Clone, Copy)]
pub struct K1Inputs<'a> {
    pub n: usize,
    pub r: usize,
    /// `min_M H_{r+1;n,1}`.
    pub min_partial: f64,
    /// `||B||_inf`.
    pub b_sup: f64,
    pub c_n: f64,
    /// `b_{n,k+1,r}` for `k = 1..=r`.
    pub b_consts: &'a [f64],
}

impl K1Inputs<'_> {
    fn validate(&self) -> Result<()> {
        if self.n < 2 || self.r == 0 || self.r >= self.n {
            return Err(Error::InvalidArgument(format!(
                "need n >= 2 and 1 <= r <= n-1, got n = {}, r = {}",
                self.n, self.r
            )));
        }
        if !(self.b_sup > 0.0) {
            return Err(Error::InvalidArgument(format!("||B||_inf must be positive, got {}", self.b_sup)));
        }
        if self.r >= 2 && !(self.min_partial > 0.0) {
            return Err(Error::Hypothesis(format!(
                "min H_{{{};n,1}} must be positive, got {}",
                self.r + 1,
                self.min_partial
            )));
        }
        if !(self.c_n > 0.0) {
            return Err(Error::InvalidArgument(format!("c_n must be positive, got {}", self.c_n)));
        }
        if self.b_consts.len() < self.r {
            return Err(Error::InvalidArgument(format!(
                "need {} Maclaurin constants, got {}",
                self.r,
                self.b_consts.len()
            )));
        }
        Ok(())
    }

    /// `c_n min_k b^{2(k-1)} (1/||B||) sum_k (m^{1/(r-1)}/||B||)^{2(k-1)}`, the part
    /// of the coercivity constant that does not depend on the lower bound of `H_r`.
    fn structural_factor(&self) -> f64 {
        let r = self.r;
        let min_b = (1..=r)
            .map(|k| self.b_consts[k - 1].powi(2 * (k as i32 - 1)))
            .fold(f64::INFINITY, f64::min);
        let base = if r >= 2 {
            self.min_partial.powf(1.0 / (r as f64 - 1.0)) / self.b_sup
        } else {
            0.0
        };
        let sum: f64 = (1..=r).map(|k| base.powi(2 * (k as i32 - 1))).sum();
        self.c_n * min_b / self.b_sup * sum
    }
}

/// Coercivity constant `c` in `H H_r - H_{r+1} >= c |tau|^2`, with the lower
/// bound `min H_r >= h/2`.
pub fn k1_coercivity(inputs: &K1Inputs<'_>, h: f64) -> Result<f64> {
    inputs.validate()?;
    if !(h > 0.0) {
        return Err(Error::InvalidArgument(format!("h must be positive, got {h}")));
    }
    Ok(inputs.structural_factor() * h / 2.0)
}

/// Coercivity constant with `min H_r` bounded below through
/// `H_r >= H_{r+1}^{r/(r+1)}` instead of through `h`.
pub fn k1_prime_coercivity(inputs: &K1Inputs<'_>, min_h_next: f64) -> Result<f64> {
    inputs.validate()?;
    if !(min_h_next > 0.0) {
        return Err(Error::Hypothesis(format!(
            "min H_{} must be positive, got {min_h_next}",
            inputs.r + 1
        )));
    }
    let r = inputs.r as f64;
    Ok(inputs.structural_factor() * min_h_next.powf(r / (r + 1.0)))
}

/// Multiplier `K1` in `|tau|^2 <= K1 (H H_r - H_{r+1})`.
///
/// For `r = 1` this is the exact identity `|tau|^2 = n(n-1)(H^2 - H_2)`.
pub fn k1(inputs: &K1Inputs<'_>, h: f64) -> Result<f64> {
    if inputs.r == 1 {
        inputs.validate()?;
        if !(h > 0.0) {
            return Err(Error::InvalidArgument(format!("h must be positive, got {h}")));
        }
        let n = inputs.n as f64;
        return Ok(n * (n - 1.0));
    }
    Ok(1.0 / k1_coercivity(inputs, h)?)
}

/// Multiplier `K1'` (lower bound of `H_r` taken from `min H_{r+1}`).
pub fn k1_prime(inputs: &K1Inputs<'_>, min_h_next: f64) -> Result<f64> {
    if inputs.r == 1 {
        inputs.validate()?;
        if !(min_h_next > 0.0) {
            return Err(Error::Hypothesis(format!("min H_2 must be positive, got {min_h_next}")));
        }
        let n = inputs.n as f64;
        return Ok(n * (n - 1.0));
    }
    Ok(1.0 / k1_prime_coercivity(inputs, min_h_next)?)
}

/// Calibrated constants of the sharpened Newton inequality and of the
/// Maclaurin chain for the partial curvatures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub n: usize,
    pub r: usize,
    pub c_n: f64,
    /// `b_{n,k+1,r}` for `k = 1..=r`; the first entry is never raised to a
    /// nonzero power and is fixed to 1.
    pub b_consts: Vec<f64>,
    pub seed: u64,
    pub samples: usize,
    pub margin: f64,
}

impl Calibration {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("calibration serializes")
    }

    pub fn from_toml(text: &str) -> std::result::Result<Self, toml::de::Error> {
        toml::from_str(text)
    }
}

/// Draws a positive curvature vector. Even draws are uniform on `(0, 1]^n`,
/// odd draws cluster around the umbilic vector `(1, ..., 1)` at log-uniform
/// distances so that the near-umbilic limit of every ratio is sampled.
pub fn sample_positive_curvatures(rng: &mut ChaCha8Rng, n: usize, index: usize) -> Vec<f64> {
    if index % 2 == 0 {
        (0..n).map(|_| 1.0 - rng.gen::<f64>()).collect()
    } else {
        let t = 10f64.powf(rng.gen_range(-4.0..-0.3));
        (0..n).map(|_| 1.0 + t * rng.gen_range(-1.0..1.0)).collect()
    }
}

/// Brute-force infimum calibration of `c_n` and `b_{n,k,r}` over random
/// positive curvature vectors, shrunk by `margin` (e.g. `0.1` for 10%).
pub fn calibrate(n: usize, r: usize, samples: usize, seed: u64, margin: f64) -> Result<Calibration> {
    if n < 2 || r == 0 || r >= n {
        return Err(Error::InvalidArgument(format!("need n >= 2, 1 <= r <= n-1; got n = {n}, r = {r}")));
    }
    if !(0.0..1.0).contains(&margin) {
        return Err(Error::InvalidArgument(format!("margin must lie in [0, 1), got {margin}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut c_inf = f64::INFINITY;
    let mut b_inf = vec![f64::INFINITY; r + 1];
    let mut used = 0usize;
    for index in 0..samples {
        let kappa = sample_positive_curvatures(&mut rng, n, index);
        let profile = CurvatureProfile::from_values(kappa)?;
        let scale = profile.h(1) * profile.h(1);
        // Closer to umbilic the Newton gap is dominated by cancellation error.
        if profile.tau_sq <= 1e-8 * scale {
            continue;
        }
        used += 1;
        for k in 1..n {
            let p = extreme_partial_h(k + 1, &profile.kappa)?;
            let den = profile.tau_sq * p * p;
            if den > 0.0 {
                c_inf = c_inf.min(newton_gap(&profile, k)? / den);
            }
        }
        if r >= 2 {
            let top = extreme_partial_h(r + 1, &profile.kappa)?.powf(1.0 / (r as f64 - 1.0));
            for m in 3..=r + 1 {
                let lower = extreme_partial_h(m, &profile.kappa)?.powf(1.0 / (m as f64 - 2.0));
                b_inf[m - 2] = b_inf[m - 2].min(lower / top);
            }
        }
    }
    if used == 0 || !c_inf.is_finite() || c_inf <= 0.0 {
        return Err(Error::Numerical(format!(
            "degenerate calibration sampling: {used} usable samples, infimum {c_inf}"
        )));
    }
    let shrink = 1.0 - margin;
    let mut b_consts = vec![1.0; r];
    for k in 2..=r {
        let b = b_inf[k - 1];
        if !(b.is_finite() && b > 0.0) {
            return Err(Error::Numerical(format!("degenerate Maclaurin calibration for m = {}", k + 1)));
        }
        b_consts[k - 1] = shrink * b;
    }
    Ok(Calibration {
        n,
        r,
        c_n: shrink * c_inf,
        b_consts,
        seed,
        samples,
        margin,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn profile(k: &[f64]) -> CurvatureProfile {
        CurvatureProfile::from_values(k.to_vec()).unwrap()
    }

    /// Elementary symmetric polynomials by enumerating all subsets.
    fn subset_sigma(values: &[f64]) -> Vec<f64> {
        let n = values.len();
        let mut out = vec![0.0; n + 1];
        for mask in 0u32..(1 << n) {
            let prod: f64 = (0..n).filter(|i| mask & (1 << i) != 0).map(|i| values[i]).product();
            out[mask.count_ones() as usize] += prod;
        }
        out
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(4, 2), 6.0);
        assert_eq!(binomial(6, 0), 1.0);
        assert_eq!(binomial(3, 5), 0.0);
        assert_eq!(binomial(10, 3), 120.0);
    }

    #[test]
    fn sigma_examples() {
        let k = PrincipalCurvatures::new(vec![3.0, 1.0, 2.0]).unwrap();
        assert_eq!(k.as_slice(), &[1.0, 2.0, 3.0]);
        assert_eq!(elementary_symmetric(&k), vec![1.0, 6.0, 11.0, 6.0]);
        let c = 1.5;
        let s = elementary_symmetric_of(&[c; 5]);
        for (k, v) in s.iter().enumerate() {
            assert!((v - binomial(5, k) * c.powi(k as i32)).abs() < 1e-12);
        }
        assert_eq!(elementary_symmetric_of(&[0.0; 4]), vec![1.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn sigma_matches_subset_enumeration_on_integers() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for n in 1..=8 {
            for _ in 0..50 {
                let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-5i32..=5) as f64).collect();
                assert_eq!(elementary_symmetric_of(&v), subset_sigma(&v));
            }
        }
    }

    #[test]
    fn mean_curvature_examples() {
        let h = normalized_mean_curvatures(&[1.0, 6.0, 11.0, 6.0], 3).unwrap();
        assert_eq!(h[0], 1.0);
        assert_eq!(h[1], 2.0);
        assert!((h[2] - 11.0 / 3.0).abs() < 1e-15);
        assert_eq!(h[3], 6.0);
        let p = profile(&[0.0, 2.0]);
        assert_eq!(p.h(1), 1.0);
        assert_eq!(p.h(2), 0.0);
        let u = profile(&[0.7; 4]);
        for k in 0..=4 {
            assert!((u.h(k) - 0.7f64.powi(k as i32)).abs() < 1e-15);
        }
        assert!(normalized_mean_curvatures(&[1.0, 2.0], 3).is_err());
    }

    #[test]
    fn partial_curvature_examples() {
        let k3 = PrincipalCurvatures::new(vec![1.0, 2.0, 3.0]).unwrap();
        assert_eq!(partial_h(3, 2, 0, &k3).unwrap().value, 2.0);
        let k4 = PrincipalCurvatures::new(vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(partial_h(3, 3, 0, &k4).unwrap().value, 5.0 / 4.0);
        for n in 2..7 {
            let k = PrincipalCurvatures::new((0..n).map(|i| i as f64 * 0.37 - 1.0).collect()).unwrap();
            assert_eq!(partial_h(2, n - 1, 0, &k).unwrap().value, 1.0 / binomial(n, 2));
        }
        assert!(partial_h(1, 1, 0, &k3).is_err());
        assert!(partial_h(5, 1, 0, &k3).is_err());
        assert!(partial_h(2, 1, 1, &k3).is_err());
        // l = n + 1 uses sigma_{n-1} of n - 2 values, which vanishes.
        assert_eq!(partial_h(4, 2, 0, &k3).unwrap().value, 0.0);
    }

    #[test]
    fn partial_curvature_is_second_derivative_of_h_l() {
        // H_{l;i,j} = d^2 H_l / (d kappa_i d kappa_j), checked by central differences.
        let base = vec![0.4, 0.9, 1.3, 1.7, 2.2];
        let n = base.len();
        let h_l = |v: &[f64], l: usize| elementary_symmetric_of(v)[l] / binomial(n, l);
        let eps = 1e-4;
        for l in 2..=n {
            let (i, j) = (n - 1, 0);
            let f = |di: f64, dj: f64| {
                let mut v = base.clone();
                v[i] += di;
                v[j] += dj;
                h_l(&v, l)
            };
            let fd = (f(eps, eps) - f(eps, -eps) - f(-eps, eps) + f(-eps, -eps)) / (4.0 * eps * eps);
            let k = PrincipalCurvatures::new(base.clone()).unwrap();
            let exact = partial_h(l, i, j, &k).unwrap().value;
            assert!((fd - exact).abs() < 1e-6, "l={l}: {fd} vs {exact}");
        }
    }

    #[test]
    fn positive_curvature_gives_positive_partials() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..1000 {
            let n = rng.gen_range(2..7);
            let k = PrincipalCurvatures::new((0..n).map(|_| rng.gen_range(0.01..3.0)).collect()).unwrap();
            for l in 2..=n {
                assert!(partial_h(l, n - 1, 0, &k).unwrap().value > 0.0);
            }
        }
    }

    #[test]
    fn maclaurin_examples() {
        let g = maclaurin_gaps(&profile(&[1.3; 4]), 3).unwrap();
        assert!(g.iter().all(|v| v.abs() < 1e-15));
        let g = maclaurin_gaps(&profile(&[1.0, 2.0, 3.0]), 2).unwrap();
        let e0 = 2.0 - (11.0f64 / 3.0).sqrt();
        let e1 = (11.0f64 / 3.0).sqrt() - 6f64.cbrt();
        assert!((g[0] - e0).abs() < 1e-15 && (g[1] - e1).abs() < 1e-15);
        assert!((g[0] - 0.0851).abs() < 1e-4 && (g[1] - 0.0978).abs() < 1e-4);
        assert!(matches!(maclaurin_gaps(&profile(&[-1.0, -2.0, -3.0]), 1), Err(Error::Hypothesis(_))));
        // H_2 > 0 with H_1 < 0: outside the positive cone.
        assert!(matches!(maclaurin_gaps(&profile(&[-1.0, -1.0, -1.0]), 1), Err(Error::Hypothesis(_))));
    }

    #[test]
    fn maclaurin_gap_is_second_order_near_umbilic() {
        let n = 4;
        let gap_at = |t: f64| {
            let mut k = vec![1.0; n];
            k[n - 1] += t;
            maclaurin_gaps(&profile(&k), 3).unwrap()
        };
        let a = gap_at(1e-2);
        let b = gap_at(5e-3);
        for (x, y) in a.iter().zip(&b) {
            assert!(*x > 0.0 && *y > 0.0);
            let ratio = x / y;
            assert!((ratio - 4.0).abs() < 0.1, "ratio {ratio}");
        }
    }

    #[test]
    fn newton_examples() {
        assert!(newton_gap(&profile(&[0.8; 3]), 1).unwrap().abs() < 1e-15);
        assert!((newton_gap(&profile(&[1.0, 2.0, 3.0]), 1).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(newton_gap(&profile(&[0.0, 2.0]), 1).unwrap(), 1.0);
        assert!(newton_gap(&profile(&[0.0, 2.0]), 2).is_err());
        assert!(newton_gap(&profile(&[0.0, 2.0]), 0).is_err());
    }

    #[test]
    fn sharpened_newton_examples() {
        let u = profile(&[1.1; 3]);
        for c in [0.0, 0.5, 3.0] {
            assert!(sharpened_newton_gap(&u, 1, c).unwrap().abs() < 1e-15);
        }
        let p = profile(&[0.2, 0.9, 1.4, 2.0]);
        for k in 1..4 {
            assert_eq!(sharpened_newton_gap(&p, k, 0.0).unwrap(), newton_gap(&p, k).unwrap());
        }
        // n = 2: |tau|^2 = 2 (H^2 - H_2) and H_{2;2,1} = 1, so c_2 = 1/2 is sharp.
        let q = profile(&[0.0, 2.0]);
        assert!(sharpened_newton_gap(&q, 1, 0.5).unwrap().abs() < 1e-15);
        assert!(sharpened_newton_gap(&q, 1, 0.6).unwrap() < 0.0);
    }

    #[test]
    fn umbilicity_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..2000 {
            let n = rng.gen_range(2..=6);
            let p = profile(&(0..n).map(|_| rng.gen_range(-2.0..2.0)).collect::<Vec<_>>());
            let nn = n as f64;
            let rhs = nn * (nn - 1.0) * (p.h(1) * p.h(1) - p.h(2));
            let scale: f64 = p.kappa.as_slice().iter().map(|k| k * k).sum();
            assert!((p.tau_sq - rhs).abs() <= 1e-12 * scale.max(1e-300));
        }
    }

    fn unit_inputs(n: usize, r: usize, b: &[f64]) -> K1Inputs<'_> {
        K1Inputs {
            n,
            r,
            min_partial: 1.0,
            b_sup: 1.0,
            c_n: 1.0,
            b_consts: b,
        }
    }

    #[test]
    fn k1_examples() {
        let b = [1.0, 1.0];
        assert_eq!(k1(&unit_inputs(2, 1, &b), 0.7).unwrap(), 2.0);
        assert_eq!(k1(&unit_inputs(5, 1, &b), 0.7).unwrap(), 20.0);
        // All inputs 1, r = 2: c_n * 1 * (1/2) * (1 + 1) = 1.
        assert_eq!(k1_coercivity(&unit_inputs(3, 2, &b), 1.0).unwrap(), 1.0);
        assert_eq!(k1(&unit_inputs(3, 2, &b), 1.0).unwrap(), 1.0);
        let mut inp = unit_inputs(3, 2, &b);
        inp.min_partial = 4.0;
        inp.b_sup = 2.0;
        inp.c_n = 0.3;
        // 0.3 * min(1, 1) * (1.5 / 4) * (1 + (4/2)^2) = 0.5625
        assert!((k1_coercivity(&inp, 1.5).unwrap() - 0.5625).abs() < 1e-15);
        // Linear in h.
        let a = k1_coercivity(&inp, 1e-3).unwrap();
        let c = k1_coercivity(&inp, 2e-3).unwrap();
        assert!((c / a - 2.0).abs() < 1e-12);
        assert!(k1_coercivity(&inp, 0.0).is_err());
        inp.b_sup = 0.0;
        assert!(k1(&inp, 1.0).is_err());
    }

    #[test]
    fn k1_prime_examples() {
        let b = [1.0, 0.8, 0.6];
        let inp = K1Inputs {
            n: 4,
            r: 3,
            min_partial: 0.4,
            b_sup: 1.7,
            c_n: 0.9,
            b_consts: &b,
        };
        let h: f64 = 1.3;
        let m = (h / 2.0).powf(4.0 / 3.0);
        let a = k1(&inp, h).unwrap();
        let p = k1_prime(&inp, m).unwrap();
        assert!((a - p).abs() < 1e-12 * a);
        let tiny = k1_prime_coercivity(&inp, 1e-12).unwrap();
        assert!(tiny < 1e-8);
        assert!(k1_prime(&inp, 0.0).is_err());
        // r = 1: exponent r/(r+1) = 1/2 on min H_2.
        let b1 = [1.0];
        let one = K1Inputs { n: 3, r: 1, min_partial: 0.0, b_sup: 2.0, c_n: 1.5, b_consts: &b1 };
        let v = k1_prime_coercivity(&one, 0.25).unwrap();
        assert!((v - 1.5 / 2.0 * 0.5).abs() < 1e-15);
    }

    #[test]
    fn calibration_is_deterministic_and_respects_margin() {
        let a = calibrate(3, 2, 20_000, 42, 0.1).unwrap();
        let b = calibrate(3, 2, 20_000, 42, 0.1).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.to_toml(), b.to_toml());
        let raw = calibrate(3, 2, 20_000, 42, 0.0).unwrap();
        assert!((a.c_n - 0.9 * raw.c_n).abs() < 1e-15 * raw.c_n);
        let back = Calibration::from_toml(&a.to_toml()).unwrap();
        assert_eq!(back, a);
    }

    #[test]
    fn calibration_n2_recovers_the_exact_constant() {
        // For n = 2 the ratio is identically 1/2.
        let c = calibrate(2, 1, 10_000, 1, 0.0).unwrap();
        assert!((c.c_n - 0.5).abs() < 1e-7, "{}", c.c_n);
    }

    #[test]
    fn calibrated_b_constants_dominate_the_maclaurin_value() {
        // Maclaurin on n-2 variables gives the exact infimum A_m / A_{r+1},
        // with A_m = (binom(n-2, m-2) / binom(n, m))^{1/(m-2)}.
        for (n, r) in [(4, 3), (5, 3), (5, 4), (6, 4)] {
            let cal = calibrate(n, r, 20_000, 8, 0.0).unwrap();
            let a = |m: usize| (binomial(n - 2, m - 2) / binomial(n, m)).powf(1.0 / (m as f64 - 2.0));
            for k in 2..=r {
                let exact = a(k + 1) / a(r + 1);
                assert!(cal.b_consts[k - 1] >= exact * (1.0 - 1e-9), "n={n} r={r} k={k}");
                assert!(cal.b_consts[k - 1] <= exact * 1.05, "n={n} r={r} k={k}");
            }
        }
    }

    #[test]
    fn degenerate_calibration_inputs() {
        assert!(calibrate(2, 2, 100, 0, 0.1).is_err());
        assert!(calibrate(3, 1, 100, 0, 1.5).is_err());
        assert!(matches!(calibrate(3, 1, 0, 0, 0.1), Err(Error::Numerical(_))));
    }
}
