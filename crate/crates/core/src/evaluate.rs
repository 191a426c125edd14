//! Scoring estimators against realized volatility.

use crate::error::{Error, Result};
use crate::stats::ols::least_squares;
use crate::stats::{design_with_intercept, f_sf, ols_fit, sample_variance, chi2_sf, OlsResult};

#[derive(Debug, Clone, PartialEq)]
pub struct UnbiasednessResult {
    pub a: f64,
    pub b: f64,
    pub p_a: f64,
    pub p_b: f64,
    /// Overall F of `σ − σ̂ = a + b·σ̂`, on (1, n − 2) degrees of freedom.
    pub f_stat: f64,
    pub p_f: f64,
    /// F for `a = 0, b = 0` together, on (2, n − 2) degrees of freedom.
    pub joint_f: f64,
    pub p_joint: f64,
    pub n: usize,
    pub degenerate: bool,
    pub ols: OlsResult,
}

fn check_pair(estimate: &[f64], realized: &[f64], min: usize) -> Result<()> {
    if estimate.len() != realized.len() {
        return Err(Error::invalid(format!(
            "estimate has {} values but realized has {}",
            estimate.len(),
            realized.len()
        )));
    }
    if estimate.len() < min {
        return Err(Error::insufficient(format!(
            "need at least {min} observations, got {}",
            estimate.len()
        )));
    }
    Ok(())
}

fn is_constant(x: &[f64]) -> bool {
    x.iter().all(|v| *v == x[0])
}

/// Regresses `σ − σ̂` on `σ̂`. An unbiased estimator has `a = b = 0`.
pub fn unbiasedness_test(realized: &[f64], estimate: &[f64]) -> Result<UnbiasednessResult> {
    check_pair(estimate, realized, 3)?;
    if is_constant(estimate) {
        return Err(Error::Degenerate("estimate series is constant".into()));
    }
    let gap: Vec<f64> = realized.iter().zip(estimate).map(|(s, e)| s - e).collect();
    let ols = ols_fit(&design_with_intercept(&[estimate])?, &gap)?;
    let restricted: f64 = gap.iter().map(|g| g * g).sum();
    let energy = realized.iter().map(|y| y * y).sum();
    let (joint_f, p_joint) = restriction_f(restricted, ols.ssr, 2, ols.df_resid, ols.degenerate, energy)?;
    Ok(UnbiasednessResult {
        a: ols.coefficients[0],
        b: ols.coefficients[1],
        p_a: ols.p_values[0],
        p_b: ols.p_values[1],
        f_stat: ols.f_stat,
        p_f: ols.f_p_value,
        joint_f,
        p_joint,
        n: ols.n_obs,
        degenerate: ols.degenerate,
        ols,
    })
}

/// `((RSS_r − RSS_u)/q) / (RSS_u/df)` and its upper-tail probability. With
/// an exact unrestricted fit the null either holds exactly (F = 0) or is
/// rejected outright; `energy` is `Σy²`, the scale for "exactly".
fn restriction_f(rss_r: f64, rss_u: f64, q: usize, df: usize, exact: bool, energy: f64) -> Result<(f64, f64)> {
    if exact {
        return Ok(if rss_r <= 1e-24 * energy {
            (0.0, 1.0)
        } else {
            (f64::INFINITY, 0.0)
        });
    }
    let f = ((rss_r - rss_u).max(0.0) / q as f64) / (rss_u / df as f64);
    Ok((f, f_sf(f, q as f64, df as f64)?))
}

/// A coefficient of the encompassing regression.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Term {
    Intercept,
    /// Index into the estimator list.
    Slope(usize),
}

/// Joint null fixing some coefficients to given values.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Hypothesis {
    pub pins: Vec<(Term, f64)>,
}

impl Hypothesis {
    /// `a = 0`, slope `encompassing` = 1, every other slope 0.
    pub fn encompassing(n_estimators: usize, encompassing: usize) -> Self {
        let mut pins = vec![(Term::Intercept, 0.0)];
        pins.extend((0..n_estimators).map(|j| (Term::Slope(j), if j == encompassing { 1.0 } else { 0.0 })));
        Self { pins }
    }

    /// The same null with the intercept left free.
    pub fn without_intercept(&self) -> Self {
        Self {
            pins: self.pins.iter().filter(|(t, _)| *t != Term::Intercept).copied().collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct JointTest {
    pub f_stat: f64,
    pub p_value: f64,
    /// Number of pinned coefficients.
    pub q: usize,
    pub df_resid: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncompassingResult {
    pub names: Vec<String>,
    /// Intercept first, then one coefficient per estimator.
    pub ols: OlsResult,
    pub test: JointTest,
}

/// Multivariate regression of realized volatility on several estimators,
/// with the restricted-versus-unrestricted F test of `hypothesis`.
pub fn encompassing_regression(
    realized: &[f64],
    estimates: &[(&str, &[f64])],
    hypothesis: &Hypothesis,
) -> Result<EncompassingResult> {
    if estimates.len() < 2 {
        return Err(Error::invalid(format!(
            "encompassing regression needs at least 2 estimators, got {}",
            estimates.len()
        )));
    }
    for (name, e) in estimates {
        if e.len() != realized.len() {
            return Err(Error::invalid(format!(
                "estimator `{name}` has {} values but realized has {}",
                e.len(),
                realized.len()
            )));
        }
    }
    let k = estimates.len() + 1;
    let mut seen = vec![false; k];
    for (t, v) in &hypothesis.pins {
        let j = match *t {
            Term::Intercept => 0,
            Term::Slope(i) if i < estimates.len() => i + 1,
            Term::Slope(i) => {
                return Err(Error::invalid(format!("hypothesis names estimator {i}, which does not exist")))
            }
        };
        if std::mem::replace(&mut seen[j], true) {
            return Err(Error::invalid("hypothesis pins the same coefficient twice"));
        }
        if !v.is_finite() {
            return Err(Error::invalid("hypothesis value must be finite"));
        }
    }
    if hypothesis.pins.is_empty() {
        return Err(Error::invalid("hypothesis must pin at least one coefficient"));
    }

    let columns: Vec<&[f64]> = estimates.iter().map(|(_, e)| *e).collect();
    let design = design_with_intercept(&columns)?;
    let ols = match ols_fit(&design, realized) {
        Err(Error::RankDeficient(msg)) => return Err(collinear_pair(estimates).unwrap_or(Error::RankDeficient(msg))),
        other => other?,
    };

    // restricted model: move pinned terms to the left-hand side
    let mut pinned = vec![None; k];
    for (t, v) in &hypothesis.pins {
        let j = match *t {
            Term::Intercept => 0,
            Term::Slope(i) => i + 1,
        };
        pinned[j] = Some(*v);
    }
    let n = realized.len();
    let adjusted: Vec<f64> = (0..n)
        .map(|i| {
            realized[i]
                - (0..k)
                    .filter_map(|j| pinned[j].map(|v| v * design[(i, j)]))
                    .sum::<f64>()
        })
        .collect();
    let free: Vec<usize> = (0..k).filter(|&j| pinned[j].is_none()).collect();
    let rss_r = if free.is_empty() {
        adjusted.iter().map(|v| v * v).sum()
    } else {
        let sub = design.select_columns(&free);
        let ls = least_squares(&sub, &adjusted)?;
        ls.residuals.iter().map(|e| e * e).sum()
    };
    let q = hypothesis.pins.len();
    let (f_stat, p_value) = restriction_f(
        rss_r,
        ols.ssr,
        q,
        ols.df_resid,
        ols.degenerate,
        realized.iter().map(|y| y * y).sum(),
    )?;
    Ok(EncompassingResult {
        names: estimates.iter().map(|(n, _)| n.to_string()).collect(),
        test: JointTest {
            f_stat,
            p_value,
            q,
            df_resid: ols.df_resid,
        },
        ols,
    })
}

fn collinear_pair(estimates: &[(&str, &[f64])]) -> Option<Error> {
    for (i, (a, x)) in estimates.iter().enumerate() {
        if is_constant(x) {
            return Some(Error::RankDeficient(format!(
                "estimator `{a}` is constant and collinear with the intercept"
            )));
        }
        for (b, y) in &estimates[i + 1..] {
            if correlation(x, y).abs() >= 1.0 - 1e-10 {
                return Some(Error::RankDeficient(format!("estimators `{a}` and `{b}` are collinear")));
            }
        }
    }
    None
}

fn correlation(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    sxy / (sxx * syy).sqrt()
}

/// `(1/N)·Σ (σ̂_t − σ_t)²`
pub fn mse(estimate: &[f64], realized: &[f64]) -> Result<f64> {
    check_pair(estimate, realized, 1)?;
    Ok(estimate
        .iter()
        .zip(realized)
        .map(|(e, r)| (e - r).powi(2))
        .sum::<f64>()
        / estimate.len() as f64)
}

/// Variance used to normalize `N·MSE`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DeltaHat {
    /// Sample variance of the estimator series about its own mean, divisor
    /// `N − 1`.
    #[default]
    EstimatorVariance,
    /// `(1/N)·Σ (σ̂_t − σ_t)²`, which equals the MSE itself.
    AroundRealized,
}

impl std::fmt::Display for DeltaHat {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            DeltaHat::EstimatorVariance => "estimator",
            DeltaHat::AroundRealized => "realized",
        })
    }
}

impl std::str::FromStr for DeltaHat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "estimator" => Ok(DeltaHat::EstimatorVariance),
            "realized" => Ok(DeltaHat::AroundRealized),
            other => Err(Error::invalid(format!("unknown delta-hat variant `{other}` (estimator or realized)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GofConfig {
    pub delta_hat: DeltaHat,
    pub min_obs: usize,
}

impl Default for GofConfig {
    fn default() -> Self {
        Self {
            delta_hat: DeltaHat::default(),
            min_obs: 30,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GofResult {
    pub mse: f64,
    pub delta_hat_sq: f64,
    /// `N·MSE/δ̂²`
    pub statistic: f64,
    /// Upper tail of χ²(N).
    pub p_value: f64,
    pub n: usize,
}

/// Goodness-of-fit test with the default configuration.
pub fn gof_test(estimate: &[f64], realized: &[f64]) -> Result<GofResult> {
    gof_test_with(estimate, realized, &GofConfig::default())
}

pub fn gof_test_with(estimate: &[f64], realized: &[f64], config: &GofConfig) -> Result<GofResult> {
    check_pair(estimate, realized, config.min_obs.max(2))?;
    let m = mse(estimate, realized)?;
    let delta_hat_sq = match config.delta_hat {
        DeltaHat::EstimatorVariance => sample_variance(estimate).expect("length checked above"),
        DeltaHat::AroundRealized => m,
    };
    if is_constant(estimate) || !(delta_hat_sq > 0.0) {
        return Err(Error::Degenerate(
            "estimate series has zero dispersion; the goodness-of-fit statistic is undefined".into(),
        ));
    }
    let n = estimate.len();
    let statistic = n as f64 * m / delta_hat_sq;
    Ok(GofResult {
        mse: m,
        delta_hat_sq,
        statistic,
        p_value: chi2_sf(statistic, n as f64)?,
        n,
    })
}
