//! `key = value` run configuration.
//!
//! Blank lines and lines starting with `#` are ignored. A config file only
//! sets defaults; command-line flags override it. Every run writes its fully
//! resolved configuration to `run_config.txt` in the output directory, and
//! feeding that file back with `--config` reproduces the run.

use std::collections::BTreeMap;
use std::fmt::{Display, Write as _};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use volest::evaluate::DeltaHat;
use volest::garch::{ForecastBasis, Innovation};
use volest::synthetic::{VolProcess, RNG_ALGORITHM};
use volest::types::{EstimatorId, ReturnKind};

use crate::Failure;

pub const RUN_CONFIG_FILE: &str = "run_config.txt";

/// Parsed `key = value` pairs, each remembered with its line number.
#[derive(Debug, Default)]
pub struct KeyValues {
    entries: BTreeMap<String, (String, usize)>,
    origin: String,
}

impl KeyValues {
    pub fn parse(text: &str, origin: &str) -> Result<Self, Failure> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Failure::Usage(format!("{origin}:{}: expected `key = value`", i + 1)))?;
            let k = k.trim().to_string();
            if entries.insert(k.clone(), (v.trim().to_string(), i + 1)).is_some() {
                return Err(Failure::Usage(format!("{origin}:{}: `{k}` given twice", i + 1)));
            }
        }
        Ok(Self {
            entries,
            origin: origin.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path).map_err(|source| {
            Failure::Core(volest::Error::Io {
                path: path.to_path_buf(),
                source,
            })
        })?;
        Self::parse(&text, &path.display().to_string())
    }

    /// Removes and parses `key`, if present.
    fn take<T: FromStr>(&mut self, key: &str) -> Result<Option<T>, Failure>
    where
        T::Err: Display,
    {
        match self.entries.remove(key) {
            None => Ok(None),
            Some((v, line)) => v
                .parse()
                .map(Some)
                .map_err(|e| Failure::Usage(format!("{}:{line}: bad `{key}`: {e}", self.origin))),
        }
    }

    fn finish(self) -> Result<(), Failure> {
        match self.entries.into_iter().next() {
            None => Ok(()),
            Some((k, (_, line))) => Err(Failure::Usage(format!("{}:{line}: unknown key `{k}`", self.origin))),
        }
    }
}

/// Comma-separated list wrapper so lists parse through [`FromStr`].
#[derive(Debug, Clone, PartialEq)]
pub struct List<T>(pub Vec<T>);

impl<T: FromStr> FromStr for List<T>
where
    T::Err: Display,
{
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        s.split(',')
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .map(|t| t.parse().map_err(|e: T::Err| e.to_string()))
            .collect::<Result<_, _>>()
            .map(List)
    }
}

impl<T: Display> Display for List<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

fn line(out: &mut String, key: &str, value: impl Display) {
    let _ = writeln!(out, "{key} = {value}");
}

/// Overrides `slot` with the flag value when one was given.
pub fn set<T>(slot: &mut T, flag: Option<T>) {
    if let Some(v) = flag {
        *slot = v;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateConfig {
    pub returns: Option<PathBuf>,
    pub vix: Option<PathBuf>,
    pub return_kind: ReturnKind,
    pub first_anchor: usize,
    pub step: usize,
    pub realized_len: usize,
    pub rolling_window: usize,
    pub trading_days: u32,
    pub estimators: List<EstimatorId>,
    pub garch_dist: Innovation,
    pub garch_restarts: usize,
    pub garch_min_obs: usize,
    pub garch_max_iter: usize,
    pub garch_forecast: ForecastBasis,
    pub garch_cap: bool,
    pub delta_hat: DeltaHat,
    pub gof_min_obs: usize,
    pub arch_lags: usize,
    pub adf_lags: usize,
    pub seed: u64,
}

impl Default for EstimateConfig {
    fn default() -> Self {
        Self {
            returns: None,
            vix: None,
            return_kind: ReturnKind::Log,
            first_anchor: 253,
            step: 20,
            realized_len: 21,
            rolling_window: 252,
            trading_days: 252,
            estimators: List(EstimatorId::ALL.to_vec()),
            garch_dist: Innovation::StudentT,
            garch_restarts: 3,
            garch_min_obs: 50,
            garch_max_iter: 20_000,
            garch_forecast: ForecastBasis::Filtered,
            garch_cap: true,
            delta_hat: DeltaHat::EstimatorVariance,
            gof_min_obs: 30,
            arch_lags: 1,
            adf_lags: 1,
            seed: 0,
        }
    }
}

impl EstimateConfig {
    pub fn from_kv(mut kv: KeyValues) -> Result<Self, Failure> {
        let mut c = Self::default();
        c.returns = kv.take("returns")?.or(c.returns);
        c.vix = kv.take("vix")?.or(c.vix);
        set(&mut c.return_kind, kv.take("return_kind")?);
        set(&mut c.first_anchor, kv.take("first_anchor")?);
        set(&mut c.step, kv.take("step")?);
        set(&mut c.realized_len, kv.take("realized_len")?);
        set(&mut c.rolling_window, kv.take("rolling_window")?);
        set(&mut c.trading_days, kv.take("trading_days")?);
        set(&mut c.estimators, kv.take("estimators")?);
        set(&mut c.garch_dist, kv.take("garch_dist")?);
        set(&mut c.garch_restarts, kv.take("garch_restarts")?);
        set(&mut c.garch_min_obs, kv.take("garch_min_obs")?);
        set(&mut c.garch_max_iter, kv.take("garch_max_iter")?);
        set(&mut c.garch_forecast, kv.take("garch_forecast")?);
        set(&mut c.garch_cap, kv.take("garch_cap")?);
        set(&mut c.delta_hat, kv.take("delta_hat")?);
        set(&mut c.gof_min_obs, kv.take("gof_min_obs")?);
        set(&mut c.arch_lags, kv.take("arch_lags")?);
        set(&mut c.adf_lags, kv.take("adf_lags")?);
        set(&mut c.seed, kv.take("seed")?);
        kv.finish()?;
        Ok(c)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::from("# volest estimate\n");
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string());
        if let Some(p) = path(&self.returns) {
            line(&mut s, "returns", p);
        }
        if let Some(p) = path(&self.vix) {
            line(&mut s, "vix", p);
        }
        line(&mut s, "return_kind", self.return_kind);
        line(&mut s, "first_anchor", self.first_anchor);
        line(&mut s, "step", self.step);
        line(&mut s, "realized_len", self.realized_len);
        line(&mut s, "rolling_window", self.rolling_window);
        line(&mut s, "trading_days", self.trading_days);
        line(&mut s, "estimators", &self.estimators);
        line(&mut s, "garch_dist", self.garch_dist);
        line(&mut s, "garch_restarts", self.garch_restarts);
        line(&mut s, "garch_min_obs", self.garch_min_obs);
        line(&mut s, "garch_max_iter", self.garch_max_iter);
        line(&mut s, "garch_forecast", self.garch_forecast);
        line(&mut s, "garch_cap", self.garch_cap);
        line(&mut s, "delta_hat", self.delta_hat);
        line(&mut s, "gof_min_obs", self.gof_min_obs);
        line(&mut s, "arch_lags", self.arch_lags);
        line(&mut s, "adf_lags", self.adf_lags);
        line(&mut s, "seed", self.seed);
        s
    }

    pub fn pipeline(&self) -> Result<volest::pipeline::PipelineConfig, Failure> {
        use volest::evaluate::GofConfig;
        use volest::garch::{GarchFitConfig, GarchRunConfig};
        use volest::schedule::ScheduleSpec;
        use volest::types::Annualization;

        let annualization = Annualization::new(self.trading_days).map_err(Failure::Core)?;
        let cfg = volest::pipeline::PipelineConfig {
            schedule: ScheduleSpec {
                first_anchor: self.first_anchor,
                step: self.step,
                realized_len: self.realized_len,
            },
            rolling_window: self.rolling_window,
            annualization,
            estimators: self.estimators.0.clone(),
            garch: GarchRunConfig {
                fit: GarchFitConfig {
                    innovation: self.garch_dist,
                    restarts: self.garch_restarts,
                    min_obs: self.garch_min_obs,
                    max_iter: self.garch_max_iter,
                    seed: self.seed,
                    ..GarchFitConfig::default()
                },
                annualization,
                basis: self.garch_forecast,
                apply_cap: self.garch_cap,
            },
            gof: GofConfig {
                delta_hat: self.delta_hat,
                min_obs: self.gof_min_obs,
            },
            arch_lags: self.arch_lags,
            adf_lags: self.adf_lags,
        };
        cfg.validate().map_err(Failure::Core)?;
        Ok(cfg)
    }
}

/// `lo:hi:n` strike grid with `n` evenly spaced strikes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrikeGrid {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl StrikeGrid {
    pub fn strikes(&self) -> Vec<f64> {
        let h = (self.hi - self.lo) / (self.n - 1) as f64;
        (0..self.n).map(|i| self.lo + h * i as f64).collect()
    }
}

impl FromStr for StrikeGrid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || format!("strike grid `{s}` is not lo:hi:n with 0 < lo < hi and n >= 2");
        if parts.len() != 3 {
            return Err(bad());
        }
        let lo: f64 = parts[0].trim().parse().map_err(|_| bad())?;
        let hi: f64 = parts[1].trim().parse().map_err(|_| bad())?;
        let n: usize = parts[2].trim().parse().map_err(|_| bad())?;
        if !(lo > 0.0 && hi > lo && hi.is_finite() && n >= 2) {
            return Err(bad());
        }
        Ok(Self { lo, hi, n })
    }
}

impl Display for StrikeGrid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}:{}", self.lo, self.hi, self.n)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulateConfig {
    pub vol: Option<VolProcess>,
    pub steps: usize,
    pub seed: u64,
    pub horizon: f64,
    pub s0: f64,
    pub rate: f64,
    pub chain_strikes: Option<StrikeGrid>,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            vol: None,
            steps: 252,
            seed: 0,
            horizon: 1.0,
            s0: 100.0,
            rate: 0.0,
            chain_strikes: None,
        }
    }
}

impl SimulateConfig {
    pub fn from_kv(mut kv: KeyValues) -> Result<Self, Failure> {
        let mut c = Self::default();
        c.vol = kv.take("vol")?.or(c.vol);
        set(&mut c.steps, kv.take("steps")?);
        set(&mut c.seed, kv.take("seed")?);
        set(&mut c.horizon, kv.take("horizon")?);
        set(&mut c.s0, kv.take("s0")?);
        set(&mut c.rate, kv.take("rate")?);
        c.chain_strikes = kv.take("chain_strikes")?.or(c.chain_strikes);
        // provenance only
        let _: Option<String> = kv.take("rng")?;
        kv.finish()?;
        Ok(c)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::from("# volest simulate\n");
        if let Some(v) = &self.vol {
            line(&mut s, "vol", v);
        }
        line(&mut s, "steps", self.steps);
        line(&mut s, "seed", self.seed);
        line(&mut s, "horizon", self.horizon);
        line(&mut s, "s0", self.s0);
        line(&mut s, "rate", self.rate);
        if let Some(g) = &self.chain_strikes {
            line(&mut s, "chain_strikes", g);
        }
        line(&mut s, "rng", RNG_ALGORITHM);
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluateConfig {
    pub panel: Option<PathBuf>,
    pub delta_hat: DeltaHat,
    pub gof_min_obs: usize,
}

impl Default for EvaluateConfig {
    fn default() -> Self {
        Self {
            panel: None,
            delta_hat: DeltaHat::EstimatorVariance,
            gof_min_obs: 30,
        }
    }
}

impl EvaluateConfig {
    pub fn from_kv(mut kv: KeyValues) -> Result<Self, Failure> {
        let mut c = Self::default();
        c.panel = kv.take("panel")?.or(c.panel);
        set(&mut c.delta_hat, kv.take("delta_hat")?);
        set(&mut c.gof_min_obs, kv.take("gof_min_obs")?);
        kv.finish()?;
        Ok(c)
    }

    pub fn to_text(&self, command: &str) -> String {
        let mut s = format!("# volest {command}\n");
        if let Some(p) = &self.panel {
            line(&mut s, "panel", p.display());
        }
        line(&mut s, "delta_hat", self.delta_hat);
        line(&mut s, "gof_min_obs", self.gof_min_obs);
        s
    }
}
