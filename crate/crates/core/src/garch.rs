//! GARCH(2,1) with Student-t innovations.
//!
//! ```text
//! r_t   = mu + eps_t
//! s²_t  = omega + alpha1·eps²_{t-1} + alpha2·eps²_{t-2} + beta1·s²_{t-1}
//! eps_t = s_t·z_t,   z_t ~ standardized Student-t(nu)
//! ```
//!
//! The filter starts from the unconditional variance, and the squared
//! innovation before the first observation is seeded with the sample
//! variance. Fitting maximizes the likelihood with a Nelder-Mead search over
//! an unconstrained reparameterization that keeps every iterate admissible.
//! Forecasts are one step ahead, annualized, and may be capped at twice the
//! previous realized volatility.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::historical::{estimation_slice, realized_vol};
use crate::optim::{nelder_mead, NelderMeadOptions};
use crate::schedule::{SchedulePoint, WindowMode};
use crate::stats::dist::{StandardizedT, LN_SQRT_2PI};
use crate::types::{Annualization, ReturnSeries};

/// Model coefficients. Variance quantities are in daily units.
///
/// `nu = f64::INFINITY` denotes Gaussian innovations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GarchParams {
    pub mu: f64,
    pub omega: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    pub beta1: f64,
    pub nu: f64,
}

impl GarchParams {
    pub fn validate(&self) -> Result<()> {
        let finite = [self.mu, self.omega, self.alpha1, self.alpha2, self.beta1]
            .iter()
            .all(|v| v.is_finite());
        if !finite || self.nu.is_nan() {
            return Err(Error::invalid(format!("non-finite GARCH parameter in {self:?}")));
        }
        if self.omega <= 0.0 {
            return Err(Error::invalid(format!("omega must be positive, got {}", self.omega)));
        }
        if self.alpha1 < 0.0 || self.alpha2 < 0.0 || self.beta1 < 0.0 {
            return Err(Error::invalid("ARCH and GARCH coefficients must be non-negative"));
        }
        if self.persistence() >= 1.0 {
            return Err(Error::invalid(format!(
                "alpha1 + alpha2 + beta1 = {} is not below 1",
                self.persistence()
            )));
        }
        if self.nu <= 2.0 {
            return Err(Error::invalid(format!("nu must exceed 2, got {}", self.nu)));
        }
        Ok(())
    }

    pub fn persistence(&self) -> f64 {
        self.alpha1 + self.alpha2 + self.beta1
    }

    pub fn unconditional_variance(&self) -> f64 {
        self.omega / (1.0 - self.persistence())
    }

    fn is_gaussian(&self) -> bool {
        self.nu.is_infinite()
    }
}

/// Everything a one-step forecast needs from the end of the sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GarchState {
    /// `s²_T`
    pub last_variance: f64,
    /// `eps²_T`
    pub last_sq_innovation: f64,
    /// `eps²_{T-1}`
    pub prev_sq_innovation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GarchFilter {
    pub variances: Vec<f64>,
    pub state: GarchState,
}

fn sample_variance(x: &[f64]) -> f64 {
    crate::stats::sample_variance(x).unwrap_or(f64::NAN)
}

/// Conditional variance path. `presample` is the squared innovation assumed
/// before the first observation.
fn filter_into(p: &GarchParams, returns: &[f64], presample: f64, out: &mut Vec<f64>) -> GarchState {
    out.clear();
    let mut var = p.unconditional_variance();
    let mut sq_prev = presample; // eps²_{t-2}
    let mut sq_last = presample; // eps²_{t-1}
    for (t, r) in returns.iter().enumerate() {
        if t > 0 {
            var = p.omega + p.alpha1 * sq_last + p.alpha2 * sq_prev + p.beta1 * var;
        }
        out.push(var);
        let e = r - p.mu;
        sq_prev = sq_last;
        sq_last = e * e;
    }
    GarchState {
        last_variance: var,
        last_sq_innovation: sq_last,
        prev_sq_innovation: sq_prev,
    }
}

fn check_len(returns: &[f64]) -> Result<()> {
    if returns.len() < 3 {
        return Err(Error::insufficient(format!(
            "GARCH filtering needs at least 3 returns, got {}",
            returns.len()
        )));
    }
    if returns.iter().any(|r| !r.is_finite()) {
        return Err(Error::invalid("non-finite return"));
    }
    Ok(())
}

pub fn garch_filter(params: &GarchParams, returns: &[f64]) -> Result<GarchFilter> {
    params.validate()?;
    check_len(returns)?;
    let mut variances = Vec::with_capacity(returns.len());
    let state = filter_into(params, returns, sample_variance(returns), &mut variances);
    Ok(GarchFilter { variances, state })
}

/// Log-likelihood without validation; non-positive variances give `-inf`.
fn loglik_raw(p: &GarchParams, returns: &[f64], presample: f64) -> f64 {
    let t_dist = (!p.is_gaussian()).then(|| StandardizedT::new(p.nu));
    let mut var = p.omega / (1.0 - p.persistence());
    let mut sq_prev = presample;
    let mut sq_last = presample;
    let mut total = 0.0;
    for (t, r) in returns.iter().enumerate() {
        if t > 0 {
            var = p.omega + p.alpha1 * sq_last + p.alpha2 * sq_prev + p.beta1 * var;
        }
        if !(var > 0.0) {
            return f64::NEG_INFINITY;
        }
        let e = r - p.mu;
        let z2 = e * e / var;
        total += match &t_dist {
            Some(t) => t.logpdf_sq(z2),
            None => -LN_SQRT_2PI - 0.5 * z2,
        } - 0.5 * var.ln();
        sq_prev = sq_last;
        sq_last = e * e;
    }
    total
}

/// `Σ_t [log f(eps_t / s_t) − ln s_t]` with `f` the standardized innovation
/// density.
pub fn garch_loglik(params: &GarchParams, returns: &[f64]) -> Result<f64> {
    params.validate()?;
    check_len(returns)?;
    Ok(loglik_raw(params, returns, sample_variance(returns)))
}

/// Innovation family used when fitting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Innovation {
    Gaussian,
    #[default]
    StudentT,
}

impl std::fmt::Display for Innovation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Innovation::Gaussian => "normal",
            Innovation::StudentT => "t",
        })
    }
}

impl std::str::FromStr for Innovation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "normal" => Ok(Innovation::Gaussian),
            "t" => Ok(Innovation::StudentT),
            other => Err(Error::invalid(format!("unknown innovation distribution `{other}` (normal or t)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GarchFitConfig {
    pub innovation: Innovation,
    /// Extra simplex searches restarted from the incumbent with a jittered
    /// initial simplex.
    pub restarts: usize,
    pub min_obs: usize,
    /// Iteration cap for each simplex search.
    pub max_iter: usize,
    /// Absolute tolerance on the negative log-likelihood.
    pub tol: f64,
    pub seed: u64,
    /// Starting point; a generic persistent model when `None`.
    pub start: Option<GarchParams>,
}

impl Default for GarchFitConfig {
    fn default() -> Self {
        Self {
            innovation: Innovation::StudentT,
            restarts: 3,
            min_obs: 50,
            max_iter: 20_000,
            tol: 1e-8,
            seed: 0,
            start: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GarchFit {
    pub params: GarchParams,
    pub loglik: f64,
    pub converged: bool,
    pub iterations: usize,
    pub evaluations: usize,
}

/// Map between admissible parameters and the unconstrained search space.
///
/// `mu = m + sd·θ0`, `omega = s²·exp(θ1)`, `(alpha1, alpha2, beta1, slack)`
/// is the softmax of `(θ2, θ3, θ4, 0)` and `nu = 2 + exp(θ5)`.
struct Transform {
    mean: f64,
    sd: f64,
    var: f64,
    student: bool,
}

impl Transform {
    fn dim(&self) -> usize {
        if self.student {
            6
        } else {
            5
        }
    }

    fn to_params(&self, th: &[f64]) -> GarchParams {
        let m = th[2].max(th[3]).max(th[4]).max(0.0);
        let w = [
            (th[2] - m).exp(),
            (th[3] - m).exp(),
            (th[4] - m).exp(),
            (-m).exp(),
        ];
        let total: f64 = w.iter().sum();
        GarchParams {
            mu: self.mean + self.sd * th[0],
            omega: self.var * th[1].exp(),
            alpha1: w[0] / total,
            alpha2: w[1] / total,
            beta1: w[2] / total,
            nu: if self.student { 2.0 + th[5].exp() } else { f64::INFINITY },
        }
    }

    fn from_params(&self, p: &GarchParams) -> Vec<f64> {
        const FLOOR: f64 = 1e-8;
        let slack = (1.0 - p.persistence()).max(FLOOR);
        let mut th = vec![
            (p.mu - self.mean) / self.sd,
            (p.omega / self.var).ln(),
            (p.alpha1.max(FLOOR) / slack).ln(),
            (p.alpha2.max(FLOOR) / slack).ln(),
            (p.beta1.max(FLOOR) / slack).ln(),
        ];
        if self.student {
            let nu = if p.nu.is_finite() { p.nu } else { 200.0 };
            th.push((nu - 2.0).max(FLOOR).ln());
        }
        th
    }
}

/// Maximum-likelihood GARCH(2,1) fit.
pub fn garch_fit(returns: &[f64], config: &GarchFitConfig) -> Result<GarchFit> {
    if returns.len() < config.min_obs.max(3) {
        return Err(Error::insufficient(format!(
            "GARCH fit needs at least {} returns, got {}",
            config.min_obs.max(3),
            returns.len()
        )));
    }
    check_len(returns)?;
    let var = sample_variance(returns);
    if !(var > 0.0) {
        return Err(Error::Degenerate("returns are constant".into()));
    }
    let mean = returns.iter().sum::<f64>() / returns.len() as f64;
    let tf = Transform {
        mean,
        sd: var.sqrt(),
        var,
        student: config.innovation == Innovation::StudentT,
    };
    let start = config.start.unwrap_or(GarchParams {
        mu: mean,
        omega: 0.05 * var,
        alpha1: 0.05,
        alpha2: 0.03,
        beta1: 0.87,
        nu: 8.0,
    });
    let objective = |th: &[f64]| -loglik_raw(&tf.to_params(th), returns, var);
    let opts = NelderMeadOptions {
        max_iter: config.max_iter,
        f_tol: config.tol,
        x_tol: 1e-10,
    };

    let mut x = tf.from_params(&start);
    let base_steps: Vec<f64> = (0..tf.dim()).map(|i| if i == 0 { 0.05 } else { 0.5 }).collect();
    let first = nelder_mead(objective, &x, &base_steps, opts);
    let mut fx = first.fx;
    x = first.x;
    let mut iterations = first.iterations;
    let mut evaluations = first.evaluations;
    let mut converged = first.converged;

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    for _ in 0..config.restarts {
        let steps: Vec<f64> = base_steps
            .iter()
            .map(|s| {
                let jitter: f64 = rng.random_range(0.5..1.5);
                if rng.random::<bool>() {
                    s * jitter
                } else {
                    -s * jitter
                }
            })
            .collect();
        let run = nelder_mead(objective, &x, &steps, opts);
        iterations += run.iterations;
        evaluations += run.evaluations;
        converged = run.converged;
        if run.fx < fx {
            fx = run.fx;
            x = run.x;
        }
    }

    let params = tf.to_params(&x);
    if !fx.is_finite() {
        return Err(Error::NotConverged {
            what: "GARCH likelihood search",
            iterations,
        });
    }
    if !converged {
        return Err(Error::GarchNotConverged {
            best: Box::new(params),
            loglik: -fx,
            iterations,
        });
    }
    Ok(GarchFit {
        params,
        loglik: -fx,
        converged,
        iterations,
        evaluations,
    })
}

/// Asymptotic standard errors of `(mu, omega, alpha1, alpha2, beta1, nu)`
/// from the inverse of the numerically differentiated observed information.
/// The `nu` entry is omitted for Gaussian parameters.
pub fn garch_std_errors(params: &GarchParams, returns: &[f64]) -> Result<Vec<f64>> {
    params.validate()?;
    check_len(returns)?;
    let presample = sample_variance(returns);
    let sd = presample.sqrt();
    let mut x = vec![
        params.mu,
        params.omega,
        params.alpha1,
        params.alpha2,
        params.beta1,
    ];
    let mut typical = vec![sd, presample, 0.1, 0.1, 0.1];
    if !params.is_gaussian() {
        x.push(params.nu);
        typical.push(params.nu);
    }
    let k = x.len();
    let h: Vec<f64> = (0..k).map(|i| 1e-4 * x[i].abs().max(0.1 * typical[i])).collect();
    let ll = |v: &[f64]| {
        let p = GarchParams {
            mu: v[0],
            omega: v[1],
            alpha1: v[2],
            alpha2: v[3],
            beta1: v[4],
            nu: if k == 6 { v[5] } else { f64::INFINITY },
        };
        loglik_raw(&p, returns, presample)
    };
    let shifted = |i: usize, si: f64, j: usize, sj: f64| {
        let mut v = x.clone();
        v[i] += si * h[i];
        v[j] += sj * h[j];
        ll(&v)
    };

    let f0 = ll(&x);
    let mut info = DMatrix::zeros(k, k);
    for i in 0..k {
        let d2 = (shifted(i, 1.0, i, 1.0) - 2.0 * f0 + shifted(i, -1.0, i, -1.0))
            / (4.0 * h[i] * h[i]);
        info[(i, i)] = -d2;
        for j in 0..i {
            let d2 = (shifted(i, 1.0, j, 1.0) - shifted(i, 1.0, j, -1.0)
                - shifted(i, -1.0, j, 1.0)
                + shifted(i, -1.0, j, -1.0))
                / (4.0 * h[i] * h[j]);
            info[(i, j)] = -d2;
            info[(j, i)] = -d2;
        }
    }
    if info.iter().any(|v| !v.is_finite()) {
        return Err(Error::Degenerate(
            "likelihood curvature is not finite at these parameters".into(),
        ));
    }
    let cov = info
        .try_inverse()
        .ok_or_else(|| Error::Degenerate("observed information is singular".into()))?;
    (0..k)
        .map(|i| {
            let v = cov[(i, i)];
            if v > 0.0 {
                Ok(v.sqrt())
            } else {
                Err(Error::Degenerate(
                    "observed information is not positive definite".into(),
                ))
            }
        })
        .collect()
}

/// Variance used as the basis of the one-step forecast.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ForecastBasis {
    /// Recursion applied to the end-of-sample state.
    #[default]
    Filtered,
    /// `omega / (1 − persistence)`, i.e. a forecast made without presample
    /// conditioning.
    Unconditional,
}

impl std::fmt::Display for ForecastBasis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ForecastBasis::Filtered => "filtered",
            ForecastBasis::Unconditional => "unconditional",
        })
    }
}

impl std::str::FromStr for ForecastBasis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "filtered" => Ok(ForecastBasis::Filtered),
            "unconditional" => Ok(ForecastBasis::Unconditional),
            other => Err(Error::invalid(format!(
                "unknown forecast basis `{other}` (filtered or unconditional)"
            ))),
        }
    }
}

/// One-step-ahead daily variance.
pub fn one_step_variance(params: &GarchParams, state: &GarchState) -> f64 {
    params.omega
        + params.alpha1 * state.last_sq_innovation
        + params.alpha2 * state.prev_sq_innovation
        + params.beta1 * state.last_variance
}

/// `sqrt(252 · s²_{T+1})`
pub fn garch_forecast_annualized(
    params: &GarchParams,
    state: &GarchState,
    annualization: Annualization,
) -> Result<f64> {
    params.validate()?;
    let st = [
        state.last_variance,
        state.last_sq_innovation,
        state.prev_sq_innovation,
    ];
    if st.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::invalid(format!("invalid GARCH state {state:?}")));
    }
    Ok((annualization.factor() * one_step_variance(params, state)).sqrt())
}

/// Clamps a forecast at twice the previous realized volatility.
pub fn cap_forecast(forecast: f64, prev_realized: f64) -> f64 {
    forecast.min(2.0 * prev_realized)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GarchRunConfig {
    pub fit: GarchFitConfig,
    pub annualization: Annualization,
    pub basis: ForecastBasis,
    pub apply_cap: bool,
}

impl Default for GarchRunConfig {
    fn default() -> Self {
        Self {
            fit: GarchFitConfig::default(),
            annualization: Annualization::default(),
            basis: ForecastBasis::Filtered,
            apply_cap: true,
        }
    }
}

/// Outcome at one schedule point. A failed fit leaves the forecast empty and
/// records why.
#[derive(Debug, Clone, PartialEq)]
pub struct GarchPoint {
    pub index: usize,
    /// Annualized forecast before the cap.
    pub raw_forecast: Option<f64>,
    /// Final forecast after the cap.
    pub forecast: Option<f64>,
    pub capped: bool,
    /// The cap reference was this point's own realized volatility (first
    /// point only), which is not known at the anchor.
    pub cap_uses_current_realized: bool,
    pub fit: Option<GarchFit>,
    pub failure: Option<String>,
}

/// Fits on each estimation window, forecasts one step ahead and caps at twice
/// the previous point's realized volatility (the first point caps against
/// its own). Points are fitted in parallel; each gets its own RNG stream.
pub fn run_garch(
    returns: &ReturnSeries,
    schedule: &[SchedulePoint],
    mode: WindowMode,
    config: &GarchRunConfig,
) -> Result<Vec<GarchPoint>> {
    let realized: Vec<f64> = schedule
        .iter()
        .map(|p| realized_vol(p, returns, config.annualization))
        .collect::<Result<_>>()?;
    let windows: Vec<&[f64]> = schedule
        .iter()
        .map(|p| estimation_slice(returns, p, mode))
        .collect::<Result<_>>()?;
    let mode_tag = match mode {
        WindowMode::Rolling(_) => 0,
        WindowMode::Increasing => 1,
    };

    Ok(schedule
        .par_iter()
        .enumerate()
        .map(|(k, point)| {
            let mut fit_cfg = config.fit.clone();
            fit_cfg.seed = point_seed(config.fit.seed, point.index, mode_tag);
            let cap_ref = realized[k.saturating_sub(1)];
            let mut out = GarchPoint {
                index: point.index,
                raw_forecast: None,
                forecast: None,
                capped: false,
                cap_uses_current_realized: k == 0,
                fit: None,
                failure: None,
            };
            let attempt = garch_fit(windows[k], &fit_cfg).and_then(|fit| {
                let state = garch_filter(&fit.params, windows[k])?.state;
                let raw = match config.basis {
                    ForecastBasis::Filtered => {
                        garch_forecast_annualized(&fit.params, &state, config.annualization)?
                    }
                    ForecastBasis::Unconditional => {
                        (config.annualization.factor() * fit.params.unconditional_variance()).sqrt()
                    }
                };
                Ok((fit, raw))
            });
            match attempt {
                Ok((fit, raw)) => {
                    let vol = if config.apply_cap { cap_forecast(raw, cap_ref) } else { raw };
                    out.capped = vol < raw;
                    out.raw_forecast = Some(raw);
                    out.forecast = Some(vol);
                    out.fit = Some(fit);
                }
                Err(e) => {
                    log::warn!("GARCH fit failed at point {}: {e}", point.index);
                    out.failure = Some(e.to_string());
                }
            }
            out
        })
        .collect())
}

fn point_seed(seed: u64, index: usize, mode_tag: u64) -> u64 {
    // splitmix64 finalizer over (seed, index, mode)
    let mut z = seed
        .wrapping_add((index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(mode_tag.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
