//! Shared domain types: dated series, returns, annualization and the
//! per-period volatility record.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use chrono::NaiveDate;

use crate::error::{Error, Result};

/// How a return is computed from two consecutive prices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReturnKind {
    /// `ln(P_t / P_{t-1})`
    #[default]
    Log,
    /// `P_t / P_{t-1} - 1`
    Simple,
}

impl fmt::Display for ReturnKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ReturnKind::Log => "log",
            ReturnKind::Simple => "simple",
        })
    }
}

impl FromStr for ReturnKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "log" => Ok(ReturnKind::Log),
            "simple" => Ok(ReturnKind::Simple),
            other => Err(Error::invalid(format!("unknown return kind `{other}`"))),
        }
    }
}

/// A date-labelled series of finite values with strictly increasing dates.
#[derive(Debug, Clone, PartialEq)]
pub struct DatedSeries {
    dates: Vec<NaiveDate>,
    values: Vec<f64>,
}

impl DatedSeries {
    pub fn new(dates: Vec<NaiveDate>, values: Vec<f64>) -> Result<Self> {
        check_dated(&dates, &values)?;
        Ok(Self { dates, values })
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Value recorded on `date`, if any.
    pub fn get(&self, date: NaiveDate) -> Option<f64> {
        self.dates
            .binary_search(&date)
            .ok()
            .map(|i| self.values[i])
    }
}

/// Daily returns, the input to every estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnSeries {
    dates: Vec<NaiveDate>,
    values: Vec<f64>,
    kind: ReturnKind,
}

impl ReturnSeries {
    pub fn new(dates: Vec<NaiveDate>, values: Vec<f64>, kind: ReturnKind) -> Result<Self> {
        check_dated(&dates, &values)?;
        Ok(Self {
            dates,
            values,
            kind,
        })
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn kind(&self) -> ReturnKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

fn check_dated(dates: &[NaiveDate], values: &[f64]) -> Result<()> {
    if dates.len() != values.len() {
        return Err(Error::invalid(format!(
            "{} dates but {} values",
            dates.len(),
            values.len()
        )));
    }
    if let Some(w) = dates.windows(2).find(|w| w[1] <= w[0]) {
        return Err(Error::invalid(format!(
            "dates must be strictly increasing ({} followed by {})",
            w[0], w[1]
        )));
    }
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::invalid(format!(
            "non-finite value at {}",
            dates[i]
        )));
    }
    Ok(())
}

/// Converts a price series into returns. The first price has no return, so
/// the output is one element shorter and carries the dates of prices `1..`.
pub fn compute_returns(prices: &DatedSeries, kind: ReturnKind) -> Result<ReturnSeries> {
    let p = prices.values();
    if p.len() < 2 {
        return Err(Error::insufficient("at least two prices are needed"));
    }
    if let Some(i) = p.iter().position(|&x| x <= 0.0) {
        return Err(Error::invalid(format!(
            "non-positive price {} on {}",
            p[i],
            prices.dates()[i]
        )));
    }
    let values = p
        .windows(2)
        .map(|w| match kind {
            ReturnKind::Log => (w[1] / w[0]).ln(),
            ReturnKind::Simple => w[1] / w[0] - 1.0,
        })
        .collect();
    ReturnSeries::new(prices.dates()[1..].to_vec(), values, kind)
}

/// Trading days per year used to annualize daily variances.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Annualization {
    pub trading_days_per_year: u32,
}

impl Annualization {
    pub fn new(trading_days_per_year: u32) -> Result<Self> {
        if trading_days_per_year == 0 {
            return Err(Error::invalid("trading days per year must be positive"));
        }
        Ok(Self {
            trading_days_per_year,
        })
    }

    pub fn factor(&self) -> f64 {
        f64::from(self.trading_days_per_year)
    }
}

impl Default for Annualization {
    fn default() -> Self {
        Self {
            trading_days_per_year: 252,
        }
    }
}

/// The five competing volatility estimators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EstimatorId {
    HsvRolling,
    HsvIncreasing,
    GarchRolling,
    GarchIncreasing,
    Vix,
}

impl EstimatorId {
    pub const ALL: [EstimatorId; 5] = [
        EstimatorId::HsvRolling,
        EstimatorId::HsvIncreasing,
        EstimatorId::GarchRolling,
        EstimatorId::GarchIncreasing,
        EstimatorId::Vix,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EstimatorId::HsvRolling => "hsv_rolling",
            EstimatorId::HsvIncreasing => "hsv_increasing",
            EstimatorId::GarchRolling => "garch_rolling",
            EstimatorId::GarchIncreasing => "garch_increasing",
            EstimatorId::Vix => "vix",
        }
    }
}

impl fmt::Display for EstimatorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EstimatorId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        EstimatorId::ALL
            .into_iter()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| Error::invalid(format!("unknown estimator `{s}`")))
    }
}

/// Realized volatility at one evaluation point together with every
/// estimator's forecast for it. All values are annualized fractions.
#[derive(Debug, Clone, PartialEq)]
pub struct VolPoint {
    pub index: usize,
    pub realized: f64,
    pub estimates: BTreeMap<EstimatorId, f64>,
}

impl VolPoint {
    pub fn new(index: usize, realized: f64) -> Result<Self> {
        check_vol(realized)?;
        Ok(Self {
            index,
            realized,
            estimates: BTreeMap::new(),
        })
    }

    pub fn insert(&mut self, id: EstimatorId, vol: f64) -> Result<()> {
        check_vol(vol)?;
        self.estimates.insert(id, vol);
        Ok(())
    }

    pub fn get(&self, id: EstimatorId) -> Option<f64> {
        self.estimates.get(&id).copied()
    }
}

fn check_vol(v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "volatility must be finite and non-negative, got {v}"
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(day: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(2020, 1, day).unwrap()
    }

    #[test]
    fn returns_examples() {
        let flat = DatedSeries::new(vec![d(1), d(2)], vec![100.0, 100.0]).unwrap();
        assert_eq!(compute_returns(&flat, ReturnKind::Log).unwrap().values(), &[0.0]);

        let up = DatedSeries::new(vec![d(1), d(2)], vec![100.0, 110.0]).unwrap();
        let simple = compute_returns(&up, ReturnKind::Simple).unwrap();
        assert!((simple.values()[0] - 0.10).abs() < 1e-15);
        let log = compute_returns(&up, ReturnKind::Log).unwrap();
        assert!((log.values()[0] - 0.0953102).abs() < 1e-7);
        assert_eq!(log.dates(), &[d(2)]);
    }

    #[test]
    fn returns_errors() {
        let one = DatedSeries::new(vec![d(1)], vec![100.0]).unwrap();
        assert!(matches!(
            compute_returns(&one, ReturnKind::Log),
            Err(Error::InsufficientData(_))
        ));
        let neg = DatedSeries::new(vec![d(1), d(2)], vec![100.0, 0.0]).unwrap();
        assert!(compute_returns(&neg, ReturnKind::Log).is_err());
    }

    #[test]
    fn series_invariants() {
        assert!(DatedSeries::new(vec![d(2), d(1)], vec![1.0, 2.0]).is_err());
        assert!(DatedSeries::new(vec![d(1), d(1)], vec![1.0, 2.0]).is_err());
        assert!(DatedSeries::new(vec![d(1)], vec![1.0, 2.0]).is_err());
        assert!(ReturnSeries::new(vec![d(1)], vec![f64::NAN], ReturnKind::Log).is_err());
    }

    #[test]
    fn vol_point_rejects_negative() {
        let mut p = VolPoint::new(1, 0.1).unwrap();
        assert!(p.insert(EstimatorId::Vix, -0.1).is_err());
        assert!(p.insert(EstimatorId::Vix, f64::INFINITY).is_err());
        p.insert(EstimatorId::Vix, 0.14).unwrap();
        assert_eq!(p.get(EstimatorId::Vix), Some(0.14));
        assert!(VolPoint::new(1, f64::NAN).is_err());
    }

    #[test]
    fn estimator_names_round_trip() {
        for id in EstimatorId::ALL {
            assert_eq!(id.as_str().parse::<EstimatorId>().unwrap(), id);
        }
    }
}
