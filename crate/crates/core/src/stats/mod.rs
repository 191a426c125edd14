//! Statistics kernel: special functions, distribution tails, least squares
//! and the return-series pre-tests.

pub mod dist;
pub mod ols;
pub mod pretest;
pub mod special;

pub use dist::{
    chi2_sf, f_sf, norm_cdf, norm_pdf, norm_quantile, student_t_logpdf, t_two_sided_p,
};
pub use ols::{design_with_intercept, durbin_watson, ols_fit, OlsResult};
pub use pretest::{adf_test, arch_lm_test, mackinnon_p_constant, AdfSpec, TestResult};

/// Sample variance with divisor `n - 1`, or `None` below two points.
///
/// Deviations are taken from the first element before centring, so a
/// constant series gives exactly zero.
pub fn sample_variance(x: &[f64]) -> Option<f64> {
    let n = x.len();
    if n < 2 {
        return None;
    }
    let shift = x[0];
    let mean = x.iter().map(|v| v - shift).sum::<f64>() / n as f64;
    let ss: f64 = x.iter().map(|v| (v - shift - mean).powi(2)).sum();
    Some(ss / (n - 1) as f64)
}
