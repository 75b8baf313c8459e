//! Pearson correlation, distance correlation and the lagged-covariance
//! measurement model that splits covariance into linear and nonlinear parts.
//!
//! All moments use `1/n` normalization.

use crate::error::{Error, Result};
use crate::series::{PairedSeries, MIN_SAMPLES};

fn check_lengths(x: &[f64], y: &[f64], needed: usize) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::Format(format!(
            "paired sequences differ in length: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    if x.len() < needed {
        return Err(Error::InsufficientData { needed, got: x.len() });
    }
    Ok(())
}

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Two-pass covariance with `1/n` normalization.
pub fn covariance(x: &[f64], y: &[f64]) -> f64 {
    let (mx, my) = (mean(x), mean(y));
    x.iter().zip(y).map(|(&a, &b)| (a - mx) * (b - my)).sum::<f64>() / x.len() as f64
}

pub fn variance(x: &[f64]) -> f64 {
    covariance(x, x)
}

pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    check_lengths(x, y, 2)?;
    let (vx, vy) = (variance(x), variance(y));
    if !(vx > 0.0) || !(vy > 0.0) {
        return Err(Error::UndefinedCorrelation("zero variance"));
    }
    Ok((covariance(x, y) / (vx * vy).sqrt()).clamp(-1.0, 1.0))
}

fn row_means(x: &[f64]) -> (Vec<f64>, f64) {
    let n = x.len();
    let mut rows = vec![0.0; n];
    for i in 0..n {
        for j in i + 1..n {
            let d = (x[i] - x[j]).abs();
            rows[i] += d;
            rows[j] += d;
        }
    }
    let nf = n as f64;
    rows.iter_mut().for_each(|r| *r /= nf);
    let grand = rows.iter().sum::<f64>() / nf;
    (rows, grand)
}

/// Squared sample distance covariance and the two squared distance
/// variances, from double-centered distance matrices.
///
/// Uses O(n) memory: centered entries are recomputed from row means.
pub fn dcov_terms(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len();
    let (ra, ga) = row_means(x);
    let (rb, gb) = row_means(y);
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for i in 0..n {
        // diagonal term: the distance itself is zero
        let a = -2.0 * ra[i] + ga;
        let b = -2.0 * rb[i] + gb;
        sab += a * b;
        saa += a * a;
        sbb += b * b;
        let mut off_ab = 0.0;
        let mut off_aa = 0.0;
        let mut off_bb = 0.0;
        for j in i + 1..n {
            let a = (x[i] - x[j]).abs() - ra[i] - ra[j] + ga;
            let b = (y[i] - y[j]).abs() - rb[i] - rb[j] + gb;
            off_ab += a * b;
            off_aa += a * a;
            off_bb += b * b;
        }
        sab += 2.0 * off_ab;
        saa += 2.0 * off_aa;
        sbb += 2.0 * off_bb;
    }
    let n2 = (n * n) as f64;
    (sab / n2, saa / n2, sbb / n2)
}

/// Sample distance correlation in `[0, 1]`; 0 when either distance
/// variance vanishes.
pub fn dcor(x: &[f64], y: &[f64]) -> Result<f64> {
    check_lengths(x, y, 4)?;
    let (vxy, vxx, vyy) = dcov_terms(x, y);
    let denom = (vxx * vyy).sqrt();
    if !(denom > 0.0) {
        return Ok(0.0);
    }
    Ok((vxy.max(0.0) / denom).sqrt().clamp(0.0, 1.0))
}

/// Moment solution of the signal-plus-noise model for one sampling interval.
///
/// Fields other than `available` are only meaningful when it is true.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelSolution {
    pub beta_u: f64,
    pub alpha_u: f64,
    pub sigma_t2: f64,
    pub sigma_eps2: f64,
    pub sigma_c2: f64,
    pub sigma_u2: f64,
    /// Signal frequency, radians per hour.
    pub omega: f64,
    pub cov_cu: f64,
    pub var_c: f64,
    pub var_u: f64,
    pub available: bool,
}

impl ModelSolution {
    /// The linear covariance component `β_U σ_t²`.
    pub fn linear_cov(&self) -> f64 {
        self.beta_u * self.sigma_t2
    }
}

/// Relative tolerance separating rounding noise from negative variances.
pub const NEGATIVE_VARIANCE_RTOL: f64 = 1e-9;

/// Solves the model from the overpass covariance and the symmetric lag
/// covariances at Δ and 2Δ.
///
/// The lag covariances follow `Cov(C, U_k) = B cos(kωΔ)` for `k != 0`, which
/// gives `B² + c₂B − 2c₁² = 0`. Its two roots have opposite signs; the one
/// sharing the sign of `Cov(C, U₀)` is taken.
pub fn solve_measurement_model(s: &PairedSeries, delta_h: u32) -> Result<ModelSolution> {
    s.validate()?;
    let n = s.len();
    if n < MIN_SAMPLES {
        return Err(Error::InsufficientData {
            needed: MIN_SAMPLES,
            got: n,
        });
    }
    let lags = s
        .lags
        .get(&delta_h)
        .ok_or_else(|| Error::IncompleteSeries(format!("no lagged wind for Δ = {delta_h} h")))?;

    let var_c = variance(&s.c);
    let var_u = variance(&s.u);
    let cov0 = covariance(&s.c, &s.u);
    let c1 = 0.5 * (covariance(&s.c, &lags.m1) + covariance(&s.c, &lags.p1));
    let c2 = 0.5 * (covariance(&s.c, &lags.m2) + covariance(&s.c, &lags.p2));

    let mut sol = ModelSolution {
        beta_u: f64::NAN,
        alpha_u: f64::NAN,
        sigma_t2: f64::NAN,
        sigma_eps2: f64::NAN,
        sigma_c2: f64::NAN,
        sigma_u2: f64::NAN,
        omega: f64::NAN,
        cov_cu: cov0,
        var_c,
        var_u,
        available: false,
    };
    if !(var_c > 0.0 && var_u > 0.0) || cov0 == 0.0 {
        return Ok(sol);
    }
    let sigma_t2 = cov0 * cov0 / var_u;
    let sign = cov0.signum();
    let disc = (c2 * c2 + 8.0 * c1 * c1).sqrt();
    let mut b = 0.5 * (-c2 + sign * disc);
    if !(b * sign > 0.0) {
        return Ok(sol);
    }
    let scale = (var_c * var_u).sqrt();
    let mut sigma_eps2 = cov0 - b;
    if sigma_eps2 < -NEGATIVE_VARIANCE_RTOL * scale {
        return Ok(sol);
    }
    if sigma_eps2 < 0.0 {
        // absorb rounding-level negatives so B + σ_ε² stays equal to Cov
        sigma_eps2 = 0.0;
        b = cov0;
    }
    let beta_u = b / sigma_t2;
    let mut sigma_c2 = var_c - sigma_t2 - sigma_eps2;
    let mut sigma_u2 = var_u - beta_u * beta_u * sigma_t2 - sigma_eps2;
    if sigma_c2 < -NEGATIVE_VARIANCE_RTOL * var_c || sigma_u2 < -NEGATIVE_VARIANCE_RTOL * var_u {
        return Ok(sol);
    }
    sigma_c2 = sigma_c2.max(0.0);
    sigma_u2 = sigma_u2.max(0.0);
    let omega = (c1 / b).clamp(-1.0, 1.0).acos() / f64::from(delta_h);

    sol.beta_u = beta_u;
    sol.alpha_u = mean(&s.u) - beta_u * mean(&s.c);
    sol.sigma_t2 = sigma_t2;
    sol.sigma_eps2 = sigma_eps2;
    sol.sigma_c2 = sigma_c2;
    sol.sigma_u2 = sigma_u2;
    sol.omega = omega;
    sol.available = true;
    Ok(sol)
}

/// Linear and nonlinear parts of a Pearson correlation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Components {
    pub linear: f64,
    pub nonlinear: f64,
}

/// Splits Pearson correlation into `β_U σ_t²` and `σ_ε²` shares; their sum
/// is the Pearson correlation of the solved series.
pub fn decompose_pearson(sol: &ModelSolution, var_c: f64, var_u: f64) -> Option<Components> {
    if !sol.available {
        return None;
    }
    let scale = (var_c * var_u).sqrt();
    Some(Components {
        linear: sol.linear_cov() / scale,
        nonlinear: sol.sigma_eps2 / scale,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    #[test]
    fn pearson_exact_cases() {
        assert!((pearson(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]).unwrap() - 1.0).abs() < 1e-15);
        assert!((pearson(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap() + 1.0).abs() < 1e-15);
    }

    #[test]
    fn pearson_errors() {
        assert!(matches!(
            pearson(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]),
            Err(Error::UndefinedCorrelation(_))
        ));
        assert!(pearson(&[1.0], &[1.0]).is_err());
        assert!(pearson(&[1.0, 2.0], &[1.0]).is_err());
    }

    #[test]
    fn dcor_identities() {
        let x = [0.3, -1.2, 2.5, 0.9, 4.4, -0.1];
        assert!((dcor(&x, &x).unwrap() - 1.0).abs() < 1e-12);
        let y: Vec<f64> = x.iter().map(|v| 3.0 * v + 7.0).collect();
        assert!((dcor(&x, &y).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(dcor(&x, &[2.0; 6]).unwrap(), 0.0);
        assert!(dcor(&x[..3], &x[..3]).is_err());
    }

    #[test]
    fn dcor_three_points_by_hand() {
        // x = [1,2,3], y = [1,4,2]
        // a = [[0,1,2],[1,0,1],[2,1,0]], row means 1, 2/3, 1, grand 8/9
        // b = [[0,3,1],[3,0,2],[1,2,0]], row means 4/3, 5/3, 1, grand 4/3
        // Σ A∘B = 4, Σ A² = 40/9, Σ B² = 32/3, so dCor² = (3/4)·sqrt(3/5)
        let v = dcor_unchecked(&[1.0, 2.0, 3.0], &[1.0, 4.0, 2.0]);
        assert!((v * v - 0.75 * 0.6f64.sqrt()).abs() < 1e-12, "{v}");
    }

    fn dcor_unchecked(x: &[f64], y: &[f64]) -> f64 {
        let (a, b, c) = dcov_terms(x, y);
        (a / (b * c).sqrt()).sqrt()
    }

    fn series_with(c: Vec<f64>, u: Vec<f64>, lag: impl Fn(usize, i32) -> f64) -> PairedSeries {
        let mut s = PairedSeries::default();
        for i in 0..c.len() {
            let mut lags = BTreeMap::new();
            lags.insert(2, [lag(i, -2), lag(i, -1), lag(i, 1), lag(i, 2)]);
            s.push(i as i64 * 24, c[i], u[i], &lags);
        }
        s
    }

    #[test]
    fn no_lag_decay_is_pure_linear() {
        let c: Vec<f64> = (0..20).map(|i| ((i * 7) % 11) as f64).collect();
        let u: Vec<f64> = c.iter().map(|v| 2.0 * v + 1.0).collect();
        let s = series_with(c.clone(), u.clone(), |i, _| u[i]);
        let sol = solve_measurement_model(&s, 2).unwrap();
        assert!(sol.available);
        assert!((sol.linear_cov() - covariance(&c, &u)).abs() < 1e-12 * sol.cov_cu.abs());
        assert!(sol.sigma_eps2.abs() < 1e-12);
        let comp = decompose_pearson(&sol, sol.var_c, sol.var_u).unwrap();
        assert!((comp.linear - 1.0).abs() < 1e-12);
        assert!(comp.nonlinear.abs() < 1e-12);
    }

    #[test]
    fn negative_dependence_keeps_sign() {
        let c: Vec<f64> = (0..20).map(|i| ((i * 7) % 11) as f64).collect();
        let u: Vec<f64> = c.iter().map(|v| 10.0 - 0.5 * v).collect();
        let s = series_with(c, u.clone(), |i, _| u[i]);
        let sol = solve_measurement_model(&s, 2).unwrap();
        assert!(sol.available);
        assert!(sol.beta_u < 0.0);
        let comp = decompose_pearson(&sol, sol.var_c, sol.var_u).unwrap();
        assert!((comp.linear + 1.0).abs() < 1e-12);
    }

    #[test]
    fn missing_interval_is_incomplete() {
        let c: Vec<f64> = (0..10).map(f64::from).collect();
        let s = series_with(c.clone(), c, |i, _| i as f64);
        assert!(matches!(
            solve_measurement_model(&s, 5),
            Err(Error::IncompleteSeries(_))
        ));
    }

    #[test]
    fn short_series_rejected() {
        let c: Vec<f64> = (0..5).map(f64::from).collect();
        let s = series_with(c.clone(), c, |i, _| i as f64);
        assert!(matches!(
            solve_measurement_model(&s, 2),
            Err(Error::InsufficientData { .. })
        ));
    }

    #[test]
    fn unavailable_decomposes_to_none() {
        let c: Vec<f64> = (0..10).map(f64::from).collect();
        let u: Vec<f64> = c.iter().map(|v| v + 1.0).collect();
        // lag covariance with the opposite sign at both lags: no root of the right sign
        let s = series_with(c.clone(), u, |i, _| -c[i]);
        let sol = solve_measurement_model(&s, 2).unwrap();
        assert!(!sol.available);
        assert!(decompose_pearson(&sol, sol.var_c, sol.var_u).is_none());
    }
}
