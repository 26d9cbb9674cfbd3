//! Scaling fits over checkpoint traces.
//!
//! Two regressions cover the analyses: cumulative regret against ln^2 t, and log
//! infidelity against log(ln t / t). Fits run over the second half of the checkpoint
//! grid by index, which spans the top half of the decades and skips the burn-in.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitModel {
    /// y = slope ln^2 t + intercept
    Log2,
    /// ln y = slope ln(ln t / t) + intercept
    Power,
    /// ln y = slope ln x + intercept
    LogLog,
}

impl FitModel {
    /// Tag spelling out the fitted equation, including which way the power-law
    /// regressor points (positive slope means decay like (ln t / t)^m).
    pub fn tag(&self) -> &'static str {
        match self {
            FitModel::Log2 => "regret ~ m ln(t)^2 + b",
            FitModel::Power => "infidelity ~ exp(b) (ln(t)/t)^m",
            FitModel::LogLog => "ln y ~ m ln(x) + b",
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct FitResult {
    pub model: FitModel,
    pub slope: f64,
    pub intercept: f64,
    pub se_slope: f64,
    pub se_intercept: f64,
    pub r2: f64,
    pub points: usize,
}

/// Ordinary least squares y = slope x + intercept with standard errors.
pub fn ols(x: &[f64], y: &[f64], model: FitModel) -> Result<FitResult> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            what: "fit inputs",
            expected: x.len(),
            got: y.len(),
        });
    }
    let n = x.len();
    if n < 3 {
        return Err(Error::InsufficientData {
            what: "fit points",
            need: 3,
            have: n,
        });
    }
    let nf = n as f64;
    let xm = x.iter().sum::<f64>() / nf;
    let ym = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|v| (v - xm) * (v - xm)).sum();
    if sxx <= 0.0 {
        return Err(Error::Invariant("fit abscissae are all equal".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - xm) * (b - ym)).sum();
    let slope = sxy / sxx;
    let intercept = ym - slope * xm;
    let ss_res: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| {
            let e = b - (slope * a + intercept);
            e * e
        })
        .sum();
    let ss_tot: f64 = y.iter().map(|v| (v - ym) * (v - ym)).sum();
    let r2 = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    let s2 = ss_res / (nf - 2.0);
    Ok(FitResult {
        model,
        slope,
        intercept,
        se_slope: (s2 / sxx).sqrt(),
        se_intercept: (s2 * (1.0 / nf + xm * xm / sxx)).sqrt(),
        r2,
        points: n,
    })
}

/// Regret growth: regret ~ slope ln^2 t. Checkpoints must be >= 1.
pub fn fit_regret_log2(ts: &[usize], regret: &[f64]) -> Result<FitResult> {
    let x: Vec<f64> = ts
        .iter()
        .map(|&t| {
            let l = (t as f64).ln();
            l * l
        })
        .collect();
    ols(&x, regret, FitModel::Log2)
}

/// Infidelity decay: infidelity ~ (ln t / t)^slope. Points with nonpositive
/// infidelity or t < 2 carry no information on a log scale and are dropped.
pub fn fit_infidelity_power(ts: &[usize], infidelity: &[f64]) -> Result<FitResult> {
    let mut x = Vec::with_capacity(ts.len());
    let mut y = Vec::with_capacity(ts.len());
    for (&t, &f) in ts.iter().zip(infidelity) {
        if t >= 2 && f > 0.0 {
            x.push(((t as f64).ln() / t as f64).ln());
            y.push(f.ln());
        }
    }
    ols(&x, &y, FitModel::Power)
}

/// Power-law exponent between positive series: ln y = slope ln x + intercept.
/// Pairs with a nonpositive coordinate are dropped.
pub fn fit_loglog(x: &[f64], y: &[f64]) -> Result<FitResult> {
    let mut lx = Vec::with_capacity(x.len());
    let mut ly = Vec::with_capacity(y.len());
    for (&a, &b) in x.iter().zip(y) {
        if a > 0.0 && b > 0.0 {
            lx.push(a.ln());
            ly.push(b.ln());
        }
    }
    ols(&lx, &ly, FitModel::LogLog)
}

/// Fit window: the later half of the rows by index.
pub fn second_half<T>(rows: &[T]) -> &[T] {
    &rows[rows.len() / 2..]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line_is_recovered() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| 3.0 * v + 1.0).collect();
        let f = ols(&x, &y, FitModel::Log2).unwrap();
        assert!((f.slope - 3.0).abs() < 1e-12);
        assert!((f.intercept - 1.0).abs() < 1e-12);
        assert!((f.r2 - 1.0).abs() < 1e-12);
        assert!(f.se_slope < 1e-7);
    }

    #[test]
    fn hand_computed_noisy_fit() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y = [0.0, 1.0, 1.0, 2.0];
        let f = ols(&x, &y, FitModel::Log2).unwrap();
        assert!((f.slope - 0.6).abs() < 1e-12);
        assert!((f.intercept - 0.1).abs() < 1e-12);
        assert!((f.r2 - 0.9).abs() < 1e-12);
        assert!((f.se_slope - 0.02f64.sqrt()).abs() < 1e-12);
        assert!((f.se_intercept - 0.07f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn log2_fit_recovers_planted_curve() {
        let ts: Vec<usize> = (1..=40).map(|i| 10 * i * i).collect();
        let reg: Vec<f64> = ts
            .iter()
            .map(|&t| {
                let l = (t as f64).ln();
                2.5 * l * l + 4.0
            })
            .collect();
        let f = fit_regret_log2(&ts, &reg).unwrap();
        assert!((f.slope - 2.5).abs() < 1e-9);
        assert!((f.intercept - 4.0).abs() < 1e-7);
        assert!(f.r2 > 1.0 - 1e-12);
    }

    #[test]
    fn power_fit_recovers_planted_curve_and_drops_zeros() {
        let ts: Vec<usize> = (2..=60).map(|i| 7 * i).collect();
        let mut infid: Vec<f64> = ts
            .iter()
            .map(|&t| 3.0 * ((t as f64).ln() / t as f64).powf(1.2))
            .collect();
        infid[5] = 0.0;
        let f = fit_infidelity_power(&ts, &infid).unwrap();
        assert_eq!(f.points, ts.len() - 1);
        assert!((f.slope - 1.2).abs() < 1e-6);
        assert!((f.intercept - 3.0_f64.ln()).abs() < 1e-6);
    }

    #[test]
    fn too_few_points_is_an_error() {
        assert!(ols(&[1.0, 2.0], &[1.0, 2.0], FitModel::Log2).is_err());
        let err = fit_infidelity_power(&[10, 20, 30], &[0.0, 0.0, 0.1]).unwrap_err();
        assert!(matches!(
            err,
            Error::InsufficientData { need: 3, have: 1, .. }
        ));
    }

    #[test]
    fn loglog_fit_recovers_exponent() {
        let x: Vec<f64> = (1..=30).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v.powf(1.7)).collect();
        let f = fit_loglog(&x, &y).unwrap();
        assert!((f.slope - 1.7).abs() < 1e-12);
        assert!((f.intercept - 2.0_f64.ln()).abs() < 1e-12);
        assert!((f.r2 - 1.0).abs() < 1e-12);
        // nonpositive pairs are dropped, not propagated
        let f2 = fit_loglog(&[1.0, 2.0, 0.0, 3.0, 4.0], &[1.0, 2.0, 9.0, 3.0, 4.0]).unwrap();
        assert_eq!(f2.points, 4);
        assert!((f2.slope - 1.0).abs() < 1e-12);
    }

    #[test]
    fn second_half_window() {
        let v = [1, 2, 3, 4, 5];
        assert_eq!(second_half(&v), &[3, 4, 5]);
        let w = [1, 2, 3, 4];
        assert_eq!(second_half(&w), &[3, 4]);
    }
}
