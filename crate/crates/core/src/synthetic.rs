//! Simulated markets with known volatility.
//!
//! Prices follow `dS/S = r dt + σ_t dW` and are stepped in logs, which is
//! exact in distribution when σ is constant over a step. Every random draw
//! comes from a ChaCha20 generator seeded with the master seed and switched
//! to stream `path index`, so a path is a pure function of
//! `(config, volatility process, seed, path index)`.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal, StudentT};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::garch::GarchParams;
use crate::implied::{bs_price, OptionChain, OptionKind, OptionQuote};

/// Name of the random stream algorithm, recorded with every simulation.
pub const RNG_ALGORITHM: &str = "chacha20/rand_chacha-0.9/stream=path";

#[derive(Debug, Clone, PartialEq)]
pub enum VolProcess {
    Constant(f64),
    /// `(σ, end time in years)` pieces in increasing end-time order; the last
    /// σ continues past the final end time.
    Piecewise(Vec<(f64, f64)>),
    /// Daily GARCH(2,1) variance driving one simulation step per day.
    Garch(GarchParams),
}

impl VolProcess {
    pub fn validate(&self) -> Result<()> {
        match self {
            VolProcess::Constant(s) => check_sigma(*s),
            VolProcess::Piecewise(pieces) => {
                if pieces.is_empty() {
                    return Err(Error::invalid("piecewise volatility needs at least one piece"));
                }
                let mut prev = 0.0;
                for &(s, end) in pieces {
                    check_sigma(s)?;
                    if !(end > prev && end.is_finite()) {
                        return Err(Error::invalid(format!(
                            "piecewise end times must be positive and increasing, got {end} after {prev}"
                        )));
                    }
                    prev = end;
                }
                Ok(())
            }
            VolProcess::Garch(p) => p.validate(),
        }
    }

    fn sigma_at(pieces: &[(f64, f64)], t: f64) -> f64 {
        pieces
            .iter()
            .find(|&&(_, end)| t < end)
            .unwrap_or(pieces.last().expect("validated non-empty"))
            .0
    }
}

fn check_sigma(s: f64) -> Result<()> {
    if s >= 0.0 && s.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("volatility must be non-negative, got {s}")))
    }
}

impl fmt::Display for VolProcess {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VolProcess::Constant(s) => write!(f, "constant:{s}"),
            VolProcess::Piecewise(pieces) => {
                f.write_str("piecewise:")?;
                for (i, (s, end)) in pieces.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{s}@{end}")?;
                }
                Ok(())
            }
            VolProcess::Garch(p) => write!(
                f,
                "garch:{},{},{},{},{},{}",
                p.mu, p.omega, p.alpha1, p.alpha2, p.beta1, p.nu
            ),
        }
    }
}

/// Parses `constant:0.2`, `piecewise:0.1@0.5,0.3@1.0` or
/// `garch:mu,omega,alpha1,alpha2,beta1,nu`.
impl FromStr for VolProcess {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |what: &str| Error::invalid(format!("bad volatility spec `{s}`: {what}"));
        let num = |t: &str| t.trim().parse::<f64>().map_err(|_| bad(&format!("`{t}` is not a number")));
        let (kind, body) = s.split_once(':').ok_or_else(|| bad("expected kind:parameters"))?;
        let vol = match kind {
            "constant" => VolProcess::Constant(num(body)?),
            "piecewise" => VolProcess::Piecewise(
                body.split(',')
                    .map(|piece| {
                        let (sigma, end) = piece.split_once('@').ok_or_else(|| bad("expected sigma@end"))?;
                        Ok((num(sigma)?, num(end)?))
                    })
                    .collect::<Result<_>>()?,
            ),
            "garch" => {
                let v: Vec<f64> = body.split(',').map(num).collect::<Result<_>>()?;
                if v.len() != 6 {
                    return Err(bad("garch needs mu,omega,alpha1,alpha2,beta1,nu"));
                }
                VolProcess::Garch(GarchParams {
                    mu: v[0],
                    omega: v[1],
                    alpha1: v[2],
                    alpha2: v[3],
                    beta1: v[4],
                    nu: v[5],
                })
            }
            other => return Err(bad(&format!("unknown kind `{other}`"))),
        };
        vol.validate()?;
        Ok(vol)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub s0: f64,
    pub rate: f64,
    /// Years.
    pub horizon: f64,
    pub n_steps: usize,
    pub seed: u64,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.s0 > 0.0 && self.s0.is_finite()) {
            return Err(Error::invalid(format!("initial price must be positive, got {}", self.s0)));
        }
        if !self.rate.is_finite() {
            return Err(Error::invalid("rate must be finite"));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::invalid(format!("horizon must be positive, got {}", self.horizon)));
        }
        if self.n_steps == 0 {
            return Err(Error::invalid("number of steps must be at least 1"));
        }
        Ok(())
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.n_steps as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimPath {
    /// `n_steps + 1` prices starting at `s0`.
    pub prices: Vec<f64>,
    /// Annualized volatility in force over each step.
    pub sigmas: Vec<f64>,
    pub dt: f64,
}

impl SimPath {
    pub fn horizon(&self) -> f64 {
        self.dt * self.sigmas.len() as f64
    }
}

fn path_rng(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Standardized Student-t draws, or standard normal when `nu` is infinite.
enum Shock {
    Normal,
    T { dist: StudentT<f64>, scale: f64 },
}

impl Shock {
    fn new(nu: f64) -> Result<Self> {
        if nu.is_infinite() {
            return Ok(Shock::Normal);
        }
        let dist = StudentT::new(nu)
            .map_err(|e| Error::invalid(format!("Student-t with nu = {nu}: {e}")))?;
        Ok(Shock::T {
            dist,
            scale: ((nu - 2.0) / nu).sqrt(),
        })
    }

    fn draw<R: Rng>(&self, rng: &mut R) -> f64 {
        match self {
            Shock::Normal => StandardNormal.sample(rng),
            Shock::T { dist, scale } => scale * dist.sample(rng),
        }
    }
}

/// One simulated path on stream 0 of `config.seed`.
pub fn simulate_path(config: &SimConfig, vol: &VolProcess) -> Result<SimPath> {
    simulate_path_on_stream(config, vol, 0)
}

pub fn simulate_path_on_stream(config: &SimConfig, vol: &VolProcess, stream: u64) -> Result<SimPath> {
    config.validate()?;
    vol.validate()?;
    let mut rng = path_rng(config.seed, stream);
    let n = config.n_steps;
    let dt = config.dt();
    let sqrt_dt = dt.sqrt();
    let mut prices = Vec::with_capacity(n + 1);
    let mut sigmas = Vec::with_capacity(n);
    let mut log_s = config.s0.ln();
    prices.push(config.s0);

    match vol {
        VolProcess::Constant(_) | VolProcess::Piecewise(_) => {
            for k in 0..n {
                let sigma = match vol {
                    VolProcess::Constant(s) => *s,
                    VolProcess::Piecewise(pieces) => VolProcess::sigma_at(pieces, k as f64 * dt),
                    VolProcess::Garch(_) => unreachable!(),
                };
                let z: f64 = StandardNormal.sample(&mut rng);
                log_s += (config.rate - 0.5 * sigma * sigma) * dt + sigma * sqrt_dt * z;
                prices.push(log_s.exp());
                sigmas.push(sigma);
            }
        }
        VolProcess::Garch(p) => {
            // h is the per-step conditional variance; the mean offset of the
            // return equation is replaced by the risk-free drift
            let shock = Shock::new(p.nu)?;
            let mut h = p.unconditional_variance();
            let (mut e1, mut e2) = (h, h);
            for k in 0..n {
                if k > 0 {
                    h = p.omega + p.alpha1 * e1 + p.alpha2 * e2 + p.beta1 * h;
                }
                let eps = h.sqrt() * shock.draw(&mut rng);
                log_s += config.rate * dt - 0.5 * h + eps;
                prices.push(log_s.exp());
                sigmas.push((h / dt).sqrt());
                e2 = e1;
                e1 = eps * eps;
            }
        }
    }
    Ok(SimPath { prices, sigmas, dt })
}

/// Simulates `n_paths` paths in parallel, path `i` on stream `i`, and maps
/// each through `f` without keeping the paths.
pub fn map_paths<T, F>(config: &SimConfig, vol: &VolProcess, n_paths: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&SimPath) -> T + Sync,
{
    (0..n_paths as u64)
        .into_par_iter()
        .map(|i| simulate_path_on_stream(config, vol, i).map(|p| f(&p)))
        .collect()
}

/// `n` returns `r_t = mu + ε_t` from a GARCH(2,1) model, started at the
/// unconditional variance after a burn-in of 500 draws.
pub fn simulate_garch_returns(params: &GarchParams, n: usize, seed: u64) -> Result<Vec<f64>> {
    const BURN_IN: usize = 500;
    params.validate()?;
    if params.persistence() >= 1.0 {
        return Err(Error::invalid("GARCH simulation needs a stationary model"));
    }
    let shock = Shock::new(params.nu)?;
    let mut rng = path_rng(seed, 0);
    let mut h = params.unconditional_variance();
    let (mut e1, mut e2) = (h, h);
    let mut out = Vec::with_capacity(n);
    for k in 0..BURN_IN + n {
        h = params.omega + params.alpha1 * e1 + params.alpha2 * e2 + params.beta1 * h;
        let eps = h.sqrt() * shock.draw(&mut rng);
        e2 = e1;
        e1 = eps * eps;
        if k >= BURN_IN {
            out.push(params.mu + eps);
        }
    }
    Ok(out)
}

fn check_prices(prices: &[f64]) -> Result<()> {
    if prices.len() < 2 {
        return Err(Error::insufficient(format!(
            "price path needs at least 2 points, got {}",
            prices.len()
        )));
    }
    if let Some(p) = prices.iter().find(|p| !(**p > 0.0 && p.is_finite())) {
        return Err(Error::invalid(format!("price path contains non-positive value {p}")));
    }
    Ok(())
}

/// Realized leg of a variance swap: `(1/T)·Σ (ΔS/S)²`.
pub fn discrete_variance_payoff(prices: &[f64], horizon: f64) -> Result<f64> {
    check_prices(prices)?;
    if !(horizon > 0.0) {
        return Err(Error::invalid(format!("horizon must be positive, got {horizon}")));
    }
    let ss: f64 = prices.windows(2).map(|w| (w[1] / w[0] - 1.0).powi(2)).sum();
    Ok(ss / horizon)
}

/// `(1/T)·∫σ_t² dt`. The GARCH kind has no closed form and is summed over
/// the volatilities of a simulated path, which must then be supplied.
pub fn integrated_variance(vol: &VolProcess, horizon: f64, path: Option<&SimPath>) -> Result<f64> {
    vol.validate()?;
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::invalid(format!("horizon must be positive, got {horizon}")));
    }
    match vol {
        VolProcess::Constant(s) => Ok(s * s),
        VolProcess::Piecewise(pieces) => {
            let mut start = 0.0;
            let mut acc = 0.0;
            for (i, &(s, end)) in pieces.iter().enumerate() {
                let stop = if i + 1 == pieces.len() { horizon } else { end.min(horizon) };
                if stop > start {
                    acc += s * s * (stop - start);
                }
                start = end;
                if start >= horizon {
                    break;
                }
            }
            Ok(acc / horizon)
        }
        VolProcess::Garch(_) => {
            let path = path.ok_or_else(|| {
                Error::invalid("integrated variance of a GARCH process needs its simulated path")
            })?;
            let sum: f64 = path.sigmas.iter().map(|s| s * s).sum();
            Ok(path.dt * sum / horizon)
        }
    }
}

/// `|ln S_T − ln S_0 − Σ ΔS/S + ½ Σ (ΔS/S)²|`, the remainder of the
/// second-order expansion of the log contract.
pub fn log_contract_identity_check(prices: &[f64]) -> Result<f64> {
    check_prices(prices)?;
    let mut first = 0.0;
    let mut second = 0.0;
    for w in prices.windows(2) {
        let r = w[1] / w[0] - 1.0;
        first += r;
        second += r * r;
    }
    let log_change = (prices[prices.len() - 1] / prices[0]).ln();
    Ok((log_change - first + 0.5 * second).abs())
}

/// Chain of Black-Scholes call and put prices on the given strikes.
pub fn generate_bs_chain(
    spot: f64,
    rate: f64,
    maturity: f64,
    sigma: f64,
    strikes: &[f64],
) -> Result<OptionChain> {
    let quotes = strikes
        .iter()
        .map(|&k| {
            let c = bs_price(spot, k, rate, maturity, sigma, OptionKind::Call)?;
            let p = bs_price(spot, k, rate, maturity, sigma, OptionKind::Put)?;
            OptionQuote::new(k, Some(c), Some(p))
        })
        .collect::<Result<Vec<_>>>()?;
    OptionChain::new(spot, rate, maturity, quotes)
}
