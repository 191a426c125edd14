//! Ordinary least squares with the usual diagnostics.
//!
//! Solved through a Householder QR of the design, so the normal equations are
//! never formed explicitly.

use nalgebra::{DMatrix, DVector};

use super::dist::{f_sf, t_two_sided_p};
use crate::error::{Error, Result};

/// Relative size of a diagonal entry of `R` below which the design is
/// treated as rank deficient.
const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct OlsResult {
    /// Intercept first, then one entry per remaining design column.
    pub coefficients: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub t_stats: Vec<f64>,
    /// Two-sided.
    pub p_values: Vec<f64>,
    /// Overall F for "every non-intercept coefficient is zero".
    pub f_stat: f64,
    pub f_p_value: f64,
    pub r_squared: f64,
    pub adj_r_squared: f64,
    pub durbin_watson: f64,
    pub residuals: Vec<f64>,
    pub ssr: f64,
    pub n_obs: usize,
    /// Residual degrees of freedom.
    pub df_resid: usize,
    /// The fit is exact. Standard errors are zero and F is `+inf` with
    /// p = 0, or 0 with p = 1 when every slope is zero.
    pub degenerate: bool,
}

/// Builds a design matrix with a leading column of ones.
pub fn design_with_intercept(columns: &[&[f64]]) -> Result<DMatrix<f64>> {
    let n = columns.first().map_or(0, |c| c.len());
    if columns.iter().any(|c| c.len() != n) {
        return Err(Error::invalid("regressor columns differ in length"));
    }
    Ok(DMatrix::from_fn(n, columns.len() + 1, |i, j| {
        if j == 0 {
            1.0
        } else {
            columns[j - 1][i]
        }
    }))
}

/// Least-squares solution of `design · β ≈ response` and its residuals.
pub(crate) struct LeastSquares {
    pub beta: DVector<f64>,
    pub residuals: DVector<f64>,
    /// `(XᵀX)⁻¹`
    pub xtx_inv: DMatrix<f64>,
}

pub(crate) fn least_squares(design: &DMatrix<f64>, response: &[f64]) -> Result<LeastSquares> {
    let (n, k) = design.shape();
    if response.len() != n {
        return Err(Error::invalid(format!(
            "design has {n} rows but response has {} values",
            response.len()
        )));
    }
    if n <= k {
        return Err(Error::insufficient(format!(
            "{n} observations for {k} parameters"
        )));
    }
    if design.iter().any(|v| !v.is_finite()) || response.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("non-finite value in regression data"));
    }

    let qr = design.clone().qr();
    let r = qr.r();
    let scale = (0..k).map(|j| r[(j, j)].abs()).fold(0.0, f64::max);
    if let Some(j) = (0..k).find(|&j| r[(j, j)].abs() <= RANK_TOL * scale.max(f64::MIN_POSITIVE)) {
        return Err(Error::RankDeficient(format!(
            "design column {j} is linearly dependent on earlier columns"
        )));
    }

    let y = DVector::from_column_slice(response);
    let qty = qr.q().transpose() * &y;
    let beta = r
        .solve_upper_triangular(&qty)
        .ok_or_else(|| Error::RankDeficient("singular triangular factor".into()))?;
    let residuals = &y - design * &beta;
    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(k, k))
        .ok_or_else(|| Error::RankDeficient("singular triangular factor".into()))?;
    let xtx_inv = &r_inv * r_inv.transpose();
    Ok(LeastSquares {
        beta,
        residuals,
        xtx_inv,
    })
}

/// Fits `response` on `design`, whose first column must be the intercept.
pub fn ols_fit(design: &DMatrix<f64>, response: &[f64]) -> Result<OlsResult> {
    let (n, k) = design.shape();
    if k == 0 || design.column(0).iter().any(|&v| v != 1.0) {
        return Err(Error::invalid("first design column must be the intercept"));
    }
    let ls = least_squares(design, response)?;
    let df = n - k;

    let mean = response.iter().sum::<f64>() / n as f64;
    let tss: f64 = response.iter().map(|y| (y - mean).powi(2)).sum();
    let ssr: f64 = ls.residuals.iter().map(|e| e * e).sum();
    let y_energy: f64 = response.iter().map(|y| y * y).sum();
    let degenerate = ssr <= 1e-24 * y_energy;

    let coefficients: Vec<f64> = ls.beta.iter().copied().collect();
    let (std_errors, t_stats, p_values, f_stat, f_p_value, r_squared);
    if degenerate {
        let scale = coefficients.iter().fold(1.0f64, |m, b| m.max(b.abs()));
        std_errors = vec![0.0; k];
        t_stats = coefficients
            .iter()
            .map(|b| {
                if b.abs() <= 1e-12 * scale {
                    0.0
                } else {
                    f64::INFINITY.copysign(*b)
                }
            })
            .collect::<Vec<_>>();
        p_values = t_stats
            .iter()
            .map(|t: &f64| if *t == 0.0 { 1.0 } else { 0.0 })
            .collect();
        // an exact fit with every slope zero explains nothing
        if t_stats[1..].iter().all(|t| *t == 0.0) {
            f_stat = 0.0;
            f_p_value = 1.0;
        } else {
            f_stat = f64::INFINITY;
            f_p_value = 0.0;
        }
        r_squared = 1.0;
    } else {
        let s2 = ssr / df as f64;
        std_errors = (0..k)
            .map(|j| (s2 * ls.xtx_inv[(j, j)]).sqrt())
            .collect::<Vec<_>>();
        t_stats = coefficients
            .iter()
            .zip(&std_errors)
            .map(|(b, se)| b / se)
            .collect::<Vec<_>>();
        p_values = t_stats
            .iter()
            .map(|&t| t_two_sided_p(t, df as f64))
            .collect::<Result<Vec<_>>>()?;
        r_squared = if tss > 0.0 { 1.0 - ssr / tss } else { 0.0 };
        if k > 1 {
            let explained = (tss - ssr).max(0.0);
            f_stat = (explained / (k - 1) as f64) / s2;
            f_p_value = f_sf(f_stat, (k - 1) as f64, df as f64)?;
        } else {
            f_stat = 0.0;
            f_p_value = 1.0;
        }
    }
    let adj_r_squared = 1.0 - (1.0 - r_squared) * (n - 1) as f64 / df as f64;
    let residuals: Vec<f64> = ls.residuals.iter().copied().collect();

    Ok(OlsResult {
        coefficients,
        std_errors,
        t_stats,
        p_values,
        f_stat,
        f_p_value,
        r_squared,
        adj_r_squared,
        durbin_watson: durbin_watson(&residuals),
        residuals,
        ssr,
        n_obs: n,
        df_resid: df,
        degenerate,
    })
}

/// `Σ(e_t − e_{t−1})² / Σ e_t²`; an all-zero residual vector gives 2.
pub fn durbin_watson(residuals: &[f64]) -> f64 {
    let den: f64 = residuals.iter().map(|e| e * e).sum();
    if den == 0.0 {
        return 2.0;
    }
    let num: f64 = residuals.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum();
    num / den
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line_is_degenerate() {
        let x = [0.0, 1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| 1.0 + 2.0 * v).collect();
        let fit = ols_fit(&design_with_intercept(&[&x]).unwrap(), &y).unwrap();
        assert!((fit.coefficients[0] - 1.0).abs() < 1e-12);
        assert!((fit.coefficients[1] - 2.0).abs() < 1e-12);
        assert!(fit.residuals.iter().all(|e| e.abs() < 1e-12));
        assert!(fit.degenerate);
        assert_eq!(fit.r_squared, 1.0);
        assert!(fit.f_stat.is_infinite());
        assert_eq!(fit.f_p_value, 0.0);
        assert!(fit.p_values.iter().all(|p| (0.0..=1.0).contains(p)));
    }

    #[test]
    fn constant_response() {
        let x = [0.3, -1.0, 2.0, 5.0, 0.0, 1.1];
        let y = [4.2; 6];
        let fit = ols_fit(&design_with_intercept(&[&x]).unwrap(), &y).unwrap();
        assert!((fit.coefficients[0] - 4.2).abs() < 1e-12);
        assert!(fit.coefficients[1].abs() < 1e-12);
    }

    #[test]
    fn collinear_design_is_rejected() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        let z: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
        let y = [1.0, 3.0, 2.0, 5.0, 4.0];
        let err = ols_fit(&design_with_intercept(&[&x, &z]).unwrap(), &y).unwrap_err();
        assert!(matches!(err, Error::RankDeficient(_)));
    }

    #[test]
    fn too_few_observations() {
        let x = [1.0, 2.0];
        let y = [1.0, 3.0];
        assert!(matches!(
            ols_fit(&design_with_intercept(&[&x]).unwrap(), &y),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn missing_intercept_column() {
        let d = DMatrix::from_row_slice(3, 1, &[1.0, 2.0, 3.0]);
        assert!(ols_fit(&d, &[1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn durbin_watson_bounds() {
        assert_eq!(durbin_watson(&[1.0, -1.0, 1.0, -1.0]), 3.0);
        assert_eq!(durbin_watson(&[1.0, 1.0, 1.0]), 0.0);
        assert_eq!(durbin_watson(&[0.0, 0.0]), 2.0);
    }
}
