//! Realized volatility and the historical sample-variance estimators.

use crate::error::{Error, Result};
use crate::schedule::{SchedulePoint, WindowMode};
use crate::stats::sample_variance;
use crate::types::{Annualization, ReturnSeries};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HistEstimatorConfig {
    pub mode: WindowMode,
    pub annualization: Annualization,
}

impl Default for HistEstimatorConfig {
    fn default() -> Self {
        Self {
            mode: WindowMode::Rolling(252),
            annualization: Annualization::default(),
        }
    }
}

/// Annualized sample standard deviation (divisor `n - 1`).
pub fn annualized_sample_vol(window: &[f64], annualization: Annualization) -> Result<f64> {
    let n = window.len();
    if n < 2 {
        return Err(Error::insufficient(format!(
            "sample volatility needs at least 2 returns, got {n}"
        )));
    }
    if window.iter().any(|r| !r.is_finite()) {
        return Err(Error::invalid("non-finite return in window"));
    }
    let var = sample_variance(window).expect("length checked above");
    Ok((annualization.factor() * var).sqrt())
}

/// Realized volatility over the point's forward window.
pub fn realized_vol(
    point: &SchedulePoint,
    returns: &ReturnSeries,
    annualization: Annualization,
) -> Result<f64> {
    let window = returns
        .values()
        .get(point.realized_window.clone())
        .ok_or_else(|| {
            Error::insufficient(format!(
                "realized window of point {} runs past the series",
                point.index
            ))
        })?;
    annualized_sample_vol(window, annualization)
}

/// Historical sample-variance forecast at every schedule point. The window
/// is taken from `config.mode` at each point's anchor, so one schedule can
/// drive both the rolling and the increasing estimator.
pub fn run_historical(
    returns: &ReturnSeries,
    schedule: &[SchedulePoint],
    config: &HistEstimatorConfig,
) -> Result<Vec<(usize, f64)>> {
    schedule
        .iter()
        .map(|p| {
            let window = estimation_slice(returns, p, config.mode)?;
            Ok((p.index, annualized_sample_vol(window, config.annualization)?))
        })
        .collect()
}

pub(crate) fn estimation_slice<'a>(
    returns: &'a ReturnSeries,
    point: &SchedulePoint,
    mode: WindowMode,
) -> Result<&'a [f64]> {
    point
        .window_for(mode)
        .and_then(|w| returns.values().get(w))
        .ok_or_else(|| {
            Error::insufficient(format!(
                "{mode} estimation window of point {} falls outside the series",
                point.index
            ))
        })
}
