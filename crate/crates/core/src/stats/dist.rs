//! Distribution functions built on [`super::special`].

use std::f64::consts::{PI, SQRT_2};

use super::special::{beta_reg, erfc, gamma_q, ln_gamma};
use crate::error::{Error, Result};

/// `1 / sqrt(2π)`
pub const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;
/// `ln sqrt(2π)`
pub const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_7;

pub fn norm_pdf(x: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Standard normal CDF.
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / SQRT_2)
}

/// Standard normal quantile: Acklam's rational approximation polished with
/// one Halley step against [`norm_cdf`].
pub fn norm_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::invalid(format!("quantile level {p} outside (0, 1)")));
    }
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    const P_LOW: f64 = 0.02425;

    let tail = |q: f64| {
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    let x = if p < P_LOW {
        tail((-2.0 * p.ln()).sqrt())
    } else if p > 1.0 - P_LOW {
        -tail((-2.0 * (1.0 - p).ln()).sqrt())
    } else {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    };
    let e = norm_cdf(x) - p;
    let u = e * (2.0 * PI).sqrt() * (0.5 * x * x).exp();
    Ok(x - u / (1.0 + 0.5 * x * u))
}

/// Upper tail `P(χ²_k > x)`.
pub fn chi2_sf(x: f64, k: f64) -> Result<f64> {
    if !(x >= 0.0) || !(k > 0.0) {
        return Err(Error::invalid(format!(
            "chi-square tail needs x >= 0 and k > 0, got x = {x}, k = {k}"
        )));
    }
    if x.is_infinite() {
        return Ok(0.0);
    }
    Ok(gamma_q(0.5 * k, 0.5 * x))
}

/// Upper tail `P(F_{d1,d2} > x)`.
pub fn f_sf(x: f64, d1: f64, d2: f64) -> Result<f64> {
    if !(x >= 0.0) || !(d1 > 0.0) || !(d2 > 0.0) {
        return Err(Error::invalid(format!(
            "F tail needs x >= 0 and positive dof, got x = {x}, d1 = {d1}, d2 = {d2}"
        )));
    }
    if x.is_infinite() {
        return Ok(0.0);
    }
    Ok(beta_reg(0.5 * d2, 0.5 * d1, d2 / (d2 + d1 * x)))
}

/// Two-sided Student-t p-value `P(|T_dof| > |t|)`.
pub fn t_two_sided_p(t: f64, dof: f64) -> Result<f64> {
    if !(dof > 0.0) || t.is_nan() {
        return Err(Error::invalid(format!("bad t-test input t = {t}, dof = {dof}")));
    }
    if t.is_infinite() {
        return Ok(0.0);
    }
    Ok(beta_reg(0.5 * dof, 0.5, dof / (dof + t * t)))
}

/// Log density of the Student-t distribution rescaled to unit variance.
pub fn student_t_logpdf(x: f64, nu: f64) -> Result<f64> {
    if !(nu > 2.0) {
        return Err(Error::invalid(format!(
            "standardized Student-t needs nu > 2, got {nu}"
        )));
    }
    Ok(StandardizedT::new(nu).logpdf(x))
}

/// Standardized Student-t with its normalizing constant precomputed, for
/// likelihood loops.
#[derive(Debug, Clone, Copy)]
pub(crate) struct StandardizedT {
    log_norm: f64,
    half_nu_plus_one: f64,
    inv_scale: f64,
}

impl StandardizedT {
    pub(crate) fn new(nu: f64) -> Self {
        let log_norm =
            ln_gamma(0.5 * (nu + 1.0)) - ln_gamma(0.5 * nu) - 0.5 * (PI * (nu - 2.0)).ln();
        Self {
            log_norm,
            half_nu_plus_one: 0.5 * (nu + 1.0),
            inv_scale: 1.0 / (nu - 2.0),
        }
    }

    #[inline]
    pub(crate) fn logpdf(&self, x: f64) -> f64 {
        self.logpdf_sq(x * x)
    }

    /// Log density evaluated from the squared argument.
    #[inline]
    pub(crate) fn logpdf_sq(&self, x2: f64) -> f64 {
        self.log_norm - self.half_nu_plus_one * (x2 * self.inv_scale).ln_1p()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn norm_cdf_symmetry() {
        assert_eq!(norm_cdf(0.0), 0.5);
        for &x in &[0.1, 0.5, 1.3, 2.7, 5.0, 8.0] {
            assert!((norm_cdf(x) + norm_cdf(-x) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn quantile_inverts_cdf() {
        for &p in &[1e-10, 0.001, 0.02, 0.25, 0.5, 0.8, 0.975, 0.999_999] {
            let x = norm_quantile(p).unwrap();
            assert!((norm_cdf(x) - p).abs() < 1e-14 * p.max(1e-3), "p = {p}");
        }
        assert!(norm_quantile(0.0).is_err());
        assert!(norm_quantile(1.0).is_err());
    }

    #[test]
    fn chi2_closed_forms() {
        for &k in &[1.0, 2.0, 10.0, 180.0] {
            assert_eq!(chi2_sf(0.0, k).unwrap(), 1.0);
        }
        assert!((chi2_sf(2.0, 2.0).unwrap() - (-1.0f64).exp()).abs() < 1e-15);
        assert!(chi2_sf(-1.0, 2.0).is_err());
        assert!(chi2_sf(1.0, 0.0).is_err());
    }

    #[test]
    fn f_matches_two_sided_t() {
        for &d in &[1.0, 5.0, 30.0, 178.0] {
            for &t in &[0.0, 0.3, 1.0, 2.124, 4.0] {
                let a = f_sf(t * t, 1.0, d).unwrap();
                let b = t_two_sided_p(t, d).unwrap();
                assert!((a - b).abs() < 1e-10);
            }
        }
        assert_eq!(f_sf(0.0, 3.0, 7.0).unwrap(), 1.0);
        assert!(f_sf(1.0, 0.0, 7.0).is_err());
    }

    #[test]
    fn t_logpdf_limits() {
        let v = student_t_logpdf(0.0, 1e6).unwrap();
        assert!((v + LN_SQRT_2PI).abs() < 1e-6);
        assert_eq!(
            student_t_logpdf(1.3, 5.0).unwrap(),
            student_t_logpdf(-1.3, 5.0).unwrap()
        );
        assert!(student_t_logpdf(0.0, 2.0).is_err());
    }
}
