//! End-to-end run: schedule, every estimator column, and their evaluation.

use std::collections::BTreeMap;

use chrono::NaiveDate;

use crate::error::{Error, Result};
use crate::evaluate::{
    encompassing_regression, gof_test_with, unbiasedness_test, EncompassingResult, GofConfig, GofResult,
    Hypothesis, JointTest, UnbiasednessResult,
};
use crate::garch::{run_garch, GarchRunConfig};
use crate::historical::{realized_vol, run_historical, HistEstimatorConfig};
use crate::ingest::{align_vix, anchor_dates, period_label};
use crate::schedule::{ScheduleSpec, WindowMode};
use crate::stats::{adf_test, arch_lm_test, AdfSpec, TestResult};
use crate::types::{Annualization, DatedSeries, EstimatorId, ReturnSeries};

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub schedule: ScheduleSpec,
    pub rolling_window: usize,
    pub annualization: Annualization,
    /// Estimators to compute. VIX is skipped when no VIX series is given.
    pub estimators: Vec<EstimatorId>,
    pub garch: GarchRunConfig,
    pub gof: GofConfig,
    pub arch_lags: usize,
    pub adf_lags: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            schedule: ScheduleSpec::default(),
            rolling_window: 252,
            annualization: Annualization::default(),
            estimators: EstimatorId::ALL.to_vec(),
            garch: GarchRunConfig::default(),
            gof: GofConfig::default(),
            arch_lags: 1,
            adf_lags: 1,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.rolling_window < 2 {
            return Err(Error::invalid("rolling window must hold at least 2 returns"));
        }
        if self.rolling_window + 1 > self.schedule.first_anchor {
            return Err(Error::invalid(format!(
                "rolling window {} does not fit before the first anchor {}",
                self.rolling_window, self.schedule.first_anchor
            )));
        }
        if self.arch_lags == 0 {
            return Err(Error::invalid("ARCH-LM needs at least one lag"));
        }
        Ok(())
    }

    fn wants(&self, id: EstimatorId) -> bool {
        self.estimators.contains(&id)
    }
}

/// One evaluation month. Missing estimates are absent from the map.
#[derive(Debug, Clone, PartialEq)]
pub struct PanelRow {
    pub label: String,
    pub realized: f64,
    pub estimates: BTreeMap<EstimatorId, f64>,
}

impl PanelRow {
    pub fn get(&self, id: EstimatorId) -> Option<f64> {
        self.estimates.get(&id).copied()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pretests {
    pub adf: TestResult,
    /// On demeaned returns; `aux` carries the n·R² form.
    pub arch_lm: TestResult,
}

/// One multivariate regression of realized volatility.
#[derive(Debug, Clone, PartialEq)]
pub struct EncompassingSpec {
    pub regressors: Vec<EstimatorId>,
    /// Estimator whose slope is 1 under the null.
    pub encompassing: EstimatorId,
    /// Null including `a = 0`.
    pub result: EncompassingResult,
    /// Same null with the intercept free.
    pub slopes_only: JointTest,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EvalReport {
    pub pretests: Option<Pretests>,
    pub unbiasedness: Vec<(EstimatorId, UnbiasednessResult)>,
    pub encompassing: Vec<EncompassingSpec>,
    pub gof: Vec<(EstimatorId, GofResult)>,
    pub warnings: Vec<String>,
}

impl EvalReport {
    pub fn is_empty(&self) -> bool {
        self.unbiasedness.is_empty() && self.encompassing.is_empty() && self.gof.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutput {
    pub rows: Vec<PanelRow>,
    pub anchor_dates: Vec<NaiveDate>,
    pub eval: EvalReport,
}

/// The four multivariate specifications, in display order: HSV rolling with
/// GARCH increasing, then each of HSV rolling, GARCH increasing and both
/// together against VIX.
pub const ENCOMPASSING_SPECS: [(&[EstimatorId], EstimatorId); 4] = {
    use EstimatorId::*;
    [
        (&[HsvRolling, GarchIncreasing], GarchIncreasing),
        (&[HsvRolling, Vix], Vix),
        (&[GarchIncreasing, Vix], Vix),
        (&[HsvRolling, GarchIncreasing, Vix], Vix),
    ]
};

pub fn run_pipeline(
    returns: &ReturnSeries,
    vix: Option<&DatedSeries>,
    config: &PipelineConfig,
) -> Result<PipelineOutput> {
    config.validate()?;
    let rolling = WindowMode::Rolling(config.rolling_window);
    let schedule = config.schedule.build(returns.len(), rolling)?;
    let dates = anchor_dates(returns, &schedule)?;
    let ann = config.annualization;
    log::info!("{} evaluation points from {} returns", schedule.len(), returns.len());

    let mut rows: Vec<PanelRow> = schedule
        .iter()
        .zip(&dates)
        .map(|(p, d)| {
            Ok(PanelRow {
                label: period_label(*d),
                realized: realized_vol(p, returns, ann)?,
                estimates: BTreeMap::new(),
            })
        })
        .collect::<Result<_>>()?;
    let mut warnings = Vec::new();

    for (id, mode) in [
        (EstimatorId::HsvRolling, rolling),
        (EstimatorId::HsvIncreasing, WindowMode::Increasing),
    ] {
        if config.wants(id) {
            let cfg = HistEstimatorConfig {
                mode,
                annualization: ann,
            };
            for (row, (_, v)) in rows.iter_mut().zip(run_historical(returns, &schedule, &cfg)?) {
                row.estimates.insert(id, v);
            }
        }
    }

    let garch_cfg = GarchRunConfig {
        annualization: ann,
        ..config.garch.clone()
    };
    let run_mode = |id: EstimatorId, mode: WindowMode| {
        if config.wants(id) {
            Some(run_garch(returns, &schedule, mode, &garch_cfg))
        } else {
            None
        }
    };
    let (g_roll, g_inc) = rayon::join(
        || run_mode(EstimatorId::GarchRolling, rolling),
        || run_mode(EstimatorId::GarchIncreasing, WindowMode::Increasing),
    );
    for (id, points) in [(EstimatorId::GarchRolling, g_roll), (EstimatorId::GarchIncreasing, g_inc)] {
        let Some(points) = points else { continue };
        for (row, gp) in rows.iter_mut().zip(points?) {
            match (gp.forecast, gp.failure) {
                (Some(v), _) => {
                    row.estimates.insert(id, v);
                }
                (None, why) => warnings.push(format!(
                    "{id} missing at {}: {}",
                    row.label,
                    why.unwrap_or_default()
                )),
            }
        }
    }

    if config.wants(EstimatorId::Vix) {
        match vix {
            Some(v) => {
                for (row, x) in rows.iter_mut().zip(align_vix(returns, v, &schedule)?) {
                    row.estimates.insert(EstimatorId::Vix, x);
                }
            }
            None => warnings.push("vix skipped: no VIX series supplied".into()),
        }
    }

    let pretests = match run_pretests(returns.values(), config) {
        Ok(p) => Some(p),
        Err(e) => {
            warnings.push(format!("pre-tests skipped: {e}"));
            None
        }
    };
    let mut eval = evaluate_panel(&rows, config)?;
    eval.pretests = pretests;
    warnings.append(&mut eval.warnings);
    eval.warnings = warnings;
    for w in &eval.warnings {
        log::warn!("{w}");
    }
    Ok(PipelineOutput {
        rows,
        anchor_dates: dates,
        eval,
    })
}

pub fn run_pretests(returns: &[f64], config: &PipelineConfig) -> Result<Pretests> {
    let adf = adf_test(returns, config.adf_lags, AdfSpec::Constant)?;
    let mean = returns.iter().sum::<f64>() / returns.len() as f64;
    let demeaned: Vec<f64> = returns.iter().map(|r| r - mean).collect();
    let arch_lm = arch_lm_test(&demeaned, config.arch_lags)?;
    Ok(Pretests { adf, arch_lm })
}

/// Paired columns over the rows where every requested estimator is present.
fn columns(rows: &[PanelRow], ids: &[EstimatorId]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let mut realized = Vec::new();
    let mut cols = vec![Vec::new(); ids.len()];
    for row in rows {
        let vals: Option<Vec<f64>> = ids.iter().map(|&id| row.get(id)).collect();
        if let Some(vals) = vals {
            realized.push(row.realized);
            for (c, v) in cols.iter_mut().zip(vals) {
                c.push(v);
            }
        }
    }
    (realized, cols)
}

/// Unbiasedness, encompassing and goodness-of-fit results for every
/// estimator column present in `rows`. Failures become warnings.
pub fn evaluate_panel(rows: &[PanelRow], config: &PipelineConfig) -> Result<EvalReport> {
    if rows.is_empty() {
        return Err(Error::insufficient("panel has no rows"));
    }
    let present: Vec<EstimatorId> = EstimatorId::ALL
        .into_iter()
        .filter(|id| rows.iter().any(|r| r.get(*id).is_some()))
        .collect();

    let per_estimator: Vec<(EstimatorId, Result<UnbiasednessResult>, Result<GofResult>)> = {
        use rayon::prelude::*;
        present
            .par_iter()
            .map(|&id| {
                let (realized, cols) = columns(rows, &[id]);
                (
                    id,
                    unbiasedness_test(&realized, &cols[0]),
                    gof_test_with(&cols[0], &realized, &config.gof),
                )
            })
            .collect()
    };

    let mut report = EvalReport::default();
    for (id, u, g) in per_estimator {
        match u {
            Ok(u) => report.unbiasedness.push((id, u)),
            Err(e) => report.warnings.push(format!("unbiasedness test for {id} skipped: {e}")),
        }
        match g {
            Ok(g) => report.gof.push((id, g)),
            Err(e) => report.warnings.push(format!("goodness-of-fit test for {id} skipped: {e}")),
        }
    }

    for (regressors, enc) in ENCOMPASSING_SPECS {
        if !regressors.iter().all(|id| present.contains(id)) {
            continue;
        }
        let (realized, cols) = columns(rows, regressors);
        let named: Vec<(&str, &[f64])> = regressors
            .iter()
            .zip(&cols)
            .map(|(id, c)| (id.as_str(), c.as_slice()))
            .collect();
        let pos = regressors.iter().position(|id| *id == enc).expect("listed");
        let h = Hypothesis::encompassing(regressors.len(), pos);
        let label = regressors.iter().map(|id| id.as_str()).collect::<Vec<_>>().join("+");
        let run = encompassing_regression(&realized, &named, &h).and_then(|full| {
            let slopes = encompassing_regression(&realized, &named, &h.without_intercept())?;
            Ok((full, slopes.test))
        });
        match run {
            Ok((result, slopes_only)) => report.encompassing.push(EncompassingSpec {
                regressors: regressors.to_vec(),
                encompassing: enc,
                result,
                slopes_only,
            }),
            Err(e) => report.warnings.push(format!("encompassing regression {label} skipped: {e}")),
        }
    }
    if report.encompassing.iter().any(|s| s.result.ols.durbin_watson < 1.6) {
        report.warnings.push(
            "Durbin-Watson below 1.6 in an encompassing regression: monthly errors are autocorrelated, \
             so the chi-square goodness-of-fit p-values overstate the evidence"
                .into(),
        );
    }
    Ok(report)
}
