//! Pre-tests run on the return series before any GARCH modelling: Engle's
//! ARCH-LM test for conditional heteroskedasticity and the augmented
//! Dickey-Fuller unit-root test.

use super::dist::{chi2_sf, norm_cdf};
use super::ols::{design_with_intercept, ols_fit};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
    /// A second form of the same test as `(statistic, p_value)`.
    pub aux: Option<(f64, f64)>,
}

/// ARCH-LM test with `q` lags. The primary statistic is the F form of the
/// auxiliary regression; `aux` carries the `n·R²` chi-square(q) form.
pub fn arch_lm_test(residuals: &[f64], q: usize) -> Result<TestResult> {
    if q == 0 {
        return Err(Error::invalid("ARCH-LM needs at least one lag"));
    }
    if residuals.len() <= q + 1 {
        return Err(Error::insufficient(format!(
            "{} residuals for an ARCH-LM test with {q} lags",
            residuals.len()
        )));
    }
    let sq: Vec<f64> = residuals.iter().map(|e| e * e).collect();
    let first = sq[0];
    if sq.iter().all(|&v| v == first) {
        return Err(Error::Degenerate(
            "squared residuals are constant".into(),
        ));
    }

    let response = &sq[q..];
    let lagged: Vec<&[f64]> = (1..=q).map(|l| &sq[q - l..sq.len() - l]).collect();
    let fit = ols_fit(&design_with_intercept(&lagged)?, response)?;
    let lm = fit.n_obs as f64 * fit.r_squared;
    Ok(TestResult {
        statistic: fit.f_stat,
        p_value: fit.f_p_value,
        aux: Some((lm, chi2_sf(lm, q as f64)?)),
    })
}

/// Deterministic terms of the ADF regression. Only a constant is supported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AdfSpec {
    #[default]
    Constant,
}

/// ADF test: regress `Δy_t` on a constant, `y_{t-1}` and `lags` lagged
/// differences; the statistic is the t-ratio on `y_{t-1}`.
pub fn adf_test(series: &[f64], lags: usize, spec: AdfSpec) -> Result<TestResult> {
    let AdfSpec::Constant = spec;
    if series.len() <= lags + 2 {
        return Err(Error::insufficient(format!(
            "{} observations for an ADF test with {lags} lags",
            series.len()
        )));
    }
    let diff: Vec<f64> = series.windows(2).map(|w| w[1] - w[0]).collect();
    // diff[j] = y[j+1] - y[j]; rows run over j = lags .. diff.len()
    let response = &diff[lags..];
    let level = &series[lags..series.len() - 1];
    let mut columns: Vec<&[f64]> = vec![level];
    for l in 1..=lags {
        columns.push(&diff[lags - l..diff.len() - l]);
    }
    let fit = ols_fit(&design_with_intercept(&columns)?, response)?;
    let stat = fit.t_stats[1];
    Ok(TestResult {
        statistic: stat,
        p_value: mackinnon_p_constant(stat),
        aux: None,
    })
}

/// MacKinnon (1994) response-surface p-value for the constant-only,
/// single-series Dickey-Fuller statistic.
pub fn mackinnon_p_constant(stat: f64) -> f64 {
    const MAX_STAT: f64 = 2.74;
    const MIN_STAT: f64 = -18.83;
    const STAR_STAT: f64 = -1.61;
    const SMALL_P: [f64; 3] = [2.1659, 1.4412, 0.038269];
    const LARGE_P: [f64; 4] = [1.7339, 0.93202, -0.12745, -0.010368];

    if stat.is_nan() {
        return f64::NAN;
    }
    if stat > MAX_STAT {
        return 1.0;
    }
    if stat < MIN_STAT {
        return 0.0;
    }
    let coef: &[f64] = if stat <= STAR_STAT { &SMALL_P } else { &LARGE_P };
    let z = coef.iter().rev().fold(0.0, |acc, c| acc * stat + c);
    norm_cdf(z)
}
