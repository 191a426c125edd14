//! Black-Scholes pricing and inversion, and strike-integral implied variance.
//!
//! The model-free variance of a chain is
//!
//! ```text
//! (2 / T) · e^{rT} · ∫ min{C(K), P(K)} / K² dK
//! ```
//!
//! where the minimum picks the out-of-the-money side. The integral is taken
//! by the trapezoid rule on the quoted strikes with no extrapolation. A
//! corridor variance restricts the same sum to strikes in `[L, U]`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::stats::{norm_cdf, norm_pdf, norm_quantile};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptionKind {
    Call,
    Put,
}

impl fmt::Display for OptionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OptionKind::Call => "call",
            OptionKind::Put => "put",
        })
    }
}

impl FromStr for OptionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "call" => Ok(OptionKind::Call),
            "put" => Ok(OptionKind::Put),
            other => Err(Error::invalid(format!("unknown option kind `{other}`"))),
        }
    }
}

fn check_market(spot: f64, strike: f64, rate: f64, maturity: f64) -> Result<()> {
    if !(spot > 0.0 && spot.is_finite()) {
        return Err(Error::invalid(format!("spot must be positive, got {spot}")));
    }
    if !(strike > 0.0 && strike.is_finite()) {
        return Err(Error::invalid(format!("strike must be positive, got {strike}")));
    }
    if !(maturity > 0.0 && maturity.is_finite()) {
        return Err(Error::invalid(format!("maturity must be positive, got {maturity}")));
    }
    if !rate.is_finite() {
        return Err(Error::invalid("rate must be finite"));
    }
    Ok(())
}

fn d1_d2(spot: f64, strike: f64, rate: f64, maturity: f64, sigma: f64) -> (f64, f64) {
    let sd = sigma * maturity.sqrt();
    let d1 = ((spot / strike).ln() + (rate + 0.5 * sigma * sigma) * maturity) / sd;
    (d1, d1 - sd)
}

/// European option price. At `sigma = 0` this is the discounted intrinsic
/// value on the forward.
pub fn bs_price(
    spot: f64,
    strike: f64,
    rate: f64,
    maturity: f64,
    sigma: f64,
    kind: OptionKind,
) -> Result<f64> {
    check_market(spot, strike, rate, maturity)?;
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::invalid(format!("volatility must be non-negative, got {sigma}")));
    }
    let df_strike = strike * (-rate * maturity).exp();
    if sigma == 0.0 {
        return Ok(match kind {
            OptionKind::Call => (spot - df_strike).max(0.0),
            OptionKind::Put => (df_strike - spot).max(0.0),
        });
    }
    let (d1, d2) = d1_d2(spot, strike, rate, maturity, sigma);
    // the put is the parity image of the call, written out so that
    // out-of-the-money puts keep full relative precision
    let price = match kind {
        OptionKind::Call => spot * norm_cdf(d1) - df_strike * norm_cdf(d2),
        OptionKind::Put => df_strike * norm_cdf(-d2) - spot * norm_cdf(-d1),
    };
    Ok(price.max(0.0))
}

/// `∂C/∂σ = S·sqrt(T)·φ(d1)`, the same for calls and puts.
pub fn vega(spot: f64, strike: f64, rate: f64, maturity: f64, sigma: f64) -> Result<f64> {
    check_market(spot, strike, rate, maturity)?;
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::invalid(format!("vega needs positive volatility, got {sigma}")));
    }
    let (d1, _) = d1_d2(spot, strike, rate, maturity, sigma);
    Ok(spot * maturity.sqrt() * norm_pdf(d1))
}

/// Strike with `d1 = 0`, where vega peaks: `S·exp((r + σ²/2)·T)`.
pub fn max_vega_strike(spot: f64, rate: f64, sigma: f64, maturity: f64) -> Result<f64> {
    check_market(spot, spot, rate, maturity)?;
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::invalid(format!("volatility must be non-negative, got {sigma}")));
    }
    Ok(spot * ((rate + 0.5 * sigma * sigma) * maturity).exp())
}

const VOL_LO: f64 = 1e-6;
const VOL_HI: f64 = 10.0;

/// Black-Scholes implied volatility.
///
/// The price is first mapped to the out-of-the-money side by parity, then
/// Newton's method runs on the log of that price, which stays well scaled
/// far into the wings. The bracket `[1e-6, 10]` is tightened on every
/// evaluation and a bisection step replaces any Newton step that leaves it.
pub fn implied_vol(
    price: f64,
    spot: f64,
    strike: f64,
    rate: f64,
    maturity: f64,
    kind: OptionKind,
) -> Result<f64> {
    check_market(spot, strike, rate, maturity)?;
    let df_strike = strike * (-rate * maturity).exp();
    let (lower, upper) = match kind {
        OptionKind::Call => ((spot - df_strike).max(0.0), spot),
        OptionKind::Put => ((df_strike - spot).max(0.0), df_strike),
    };
    if !(price > lower && price < upper) {
        return Err(Error::NoArbitrage(format!(
            "{kind} price {price} outside ({lower}, {upper}) at strike {strike}"
        )));
    }
    let otm = if df_strike >= spot { OptionKind::Call } else { OptionKind::Put };
    let target = match (kind, otm) {
        (OptionKind::Call, OptionKind::Put) => price - spot + df_strike,
        (OptionKind::Put, OptionKind::Call) => price + spot - df_strike,
        _ => price,
    };
    if !(target > 0.0) {
        return Err(Error::NoArbitrage(format!(
            "{kind} price {price} carries no time value at strike {strike}"
        )));
    }
    let ln_target = target.ln();
    let price_at = |s: f64| bs_price(spot, strike, rate, maturity, s, otm);

    let mut lo = VOL_LO;
    let mut hi = VOL_HI;
    if price_at(hi)? < target {
        return Err(Error::NotConverged {
            what: "implied volatility (above the search ceiling)",
            iterations: 0,
        });
    }
    if price_at(lo)? > target {
        return Err(Error::NotConverged {
            what: "implied volatility (below the search floor)",
            iterations: 0,
        });
    }

    let m = (spot / strike).ln() + rate * maturity;
    let mut sigma = (2.0 * m.abs() / maturity).sqrt();
    if !(sigma > lo && sigma < hi) {
        sigma = 0.2;
    }

    const MAX_ITER: usize = 200;
    let mut best = (f64::INFINITY, sigma);
    for _ in 0..MAX_ITER {
        let p = price_at(sigma)?;
        let g = if p > 0.0 { p.ln() - ln_target } else { f64::NEG_INFINITY };
        if g.abs() < best.0 {
            best = (g.abs(), sigma);
        }
        if g == 0.0 {
            break;
        }
        if g > 0.0 {
            hi = sigma;
        } else {
            lo = sigma;
        }
        let v = vega(spot, strike, rate, maturity, sigma)?;
        let newton = sigma - g * p / v;
        let next = if g.is_finite() && v > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (next - sigma).abs() <= 2.0 * f64::EPSILON * sigma || hi - lo <= 2.0 * f64::EPSILON * hi {
            break;
        }
        sigma = next;
    }
    let (rel_err, sigma) = best;
    let abs_err = target * rel_err.exp_m1().abs();
    if rel_err < 1e-8 || abs_err < 1e-10 * spot {
        Ok(sigma)
    } else {
        Err(Error::NotConverged {
            what: "implied volatility",
            iterations: MAX_ITER,
        })
    }
}

/// Mid quotes at one strike. A missing side is recovered from put-call
/// parity when the out-of-the-money value is needed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptionQuote {
    pub strike: f64,
    pub call_mid: Option<f64>,
    pub put_mid: Option<f64>,
}

impl OptionQuote {
    pub fn new(strike: f64, call_mid: Option<f64>, put_mid: Option<f64>) -> Result<Self> {
        if !(strike > 0.0 && strike.is_finite()) {
            return Err(Error::invalid(format!("strike must be positive, got {strike}")));
        }
        if call_mid.is_none() && put_mid.is_none() {
            return Err(Error::invalid(format!("no quote at strike {strike}")));
        }
        for v in [call_mid, put_mid].into_iter().flatten() {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!(
                    "negative or non-finite quote {v} at strike {strike}"
                )));
            }
        }
        Ok(Self {
            strike,
            call_mid,
            put_mid,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptionChain {
    spot: f64,
    rate: f64,
    maturity: f64,
    forward: f64,
    quotes: Vec<OptionQuote>,
}

impl OptionChain {
    /// Quotes must already be sorted by strictly increasing strike.
    pub fn new(spot: f64, rate: f64, maturity: f64, quotes: Vec<OptionQuote>) -> Result<Self> {
        check_market(spot, spot, rate, maturity)?;
        if let Some(w) = quotes.windows(2).find(|w| w[1].strike <= w[0].strike) {
            return Err(Error::invalid(format!(
                "strikes must be strictly increasing ({} then {})",
                w[0].strike, w[1].strike
            )));
        }
        Ok(Self {
            spot,
            rate,
            maturity,
            forward: spot * (rate * maturity).exp(),
            quotes,
        })
    }

    pub fn spot(&self) -> f64 {
        self.spot
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn maturity(&self) -> f64 {
        self.maturity
    }

    pub fn forward(&self) -> f64 {
        self.forward
    }

    pub fn quotes(&self) -> &[OptionQuote] {
        &self.quotes
    }

    fn discount(&self) -> f64 {
        (-self.rate * self.maturity).exp()
    }

    /// Cheaper of call and put at the quote's strike.
    pub fn otm_value(&self, q: &OptionQuote) -> Result<f64> {
        let parity = self.spot - q.strike * self.discount(); // C - P
        let call = q.call_mid.unwrap_or_else(|| q.put_mid.unwrap_or(0.0) + parity);
        let put = q.put_mid.unwrap_or_else(|| q.call_mid.unwrap_or(0.0) - parity);
        let v = call.min(put);
        if v < 0.0 {
            return Err(Error::NoArbitrage(format!(
                "quote at strike {} implies a negative option value",
                q.strike
            )));
        }
        Ok(v)
    }

    /// Trapezoid rule for `∫ otm(K)/K² dK` over the given quotes, scaled to
    /// an annualized variance.
    fn strike_integral(&self, quotes: &[OptionQuote]) -> Result<f64> {
        let f: Vec<f64> = quotes
            .iter()
            .map(|q| Ok(self.otm_value(q)? / (q.strike * q.strike)))
            .collect::<Result<_>>()?;
        let area: f64 = quotes
            .windows(2)
            .zip(f.windows(2))
            .map(|(k, v)| 0.5 * (k[1].strike - k[0].strike) * (v[0] + v[1]))
            .sum();
        Ok(2.0 / self.maturity * (self.rate * self.maturity).exp() * area)
    }

    /// Quotes with strikes in `[lower, upper]`.
    pub fn within(&self, lower: f64, upper: f64) -> &[OptionQuote] {
        let start = self.quotes.partition_point(|q| q.strike < lower);
        let end = self.quotes.partition_point(|q| q.strike <= upper);
        &self.quotes[start..end.max(start)]
    }

    /// Implied volatility of the out-of-the-money side at every strike; a
    /// strike whose quote cannot be inverted gives `None`.
    pub fn implied_vols(&self) -> Vec<(f64, Option<f64>)> {
        self.quotes
            .iter()
            .map(|q| (q.strike, self.otm_implied_vol(q).ok()))
            .collect()
    }

    fn otm_implied_vol(&self, q: &OptionQuote) -> Result<f64> {
        let kind = if q.strike < self.forward {
            OptionKind::Put
        } else {
            OptionKind::Call
        };
        let price = self.otm_value(q)?;
        implied_vol(price, self.spot, q.strike, self.rate, self.maturity, kind)
    }
}

/// Annualized model-free implied variance of the whole chain.
pub fn model_free_variance(chain: &OptionChain) -> Result<f64> {
    let quotes = chain.quotes();
    if quotes.len() < 3 {
        return Err(Error::insufficient(format!(
            "model-free variance needs at least 3 strikes, got {}",
            quotes.len()
        )));
    }
    let f = chain.forward();
    if !(quotes[0].strike < f && quotes[quotes.len() - 1].strike > f) {
        return Err(Error::insufficient(format!(
            "strikes [{}, {}] do not straddle the forward {f}",
            quotes[0].strike,
            quotes[quotes.len() - 1].strike
        )));
    }
    chain.strike_integral(quotes)
}

/// Annualized implied variance from strikes inside `[lower, upper]` only.
pub fn corridor_variance(chain: &OptionChain, lower: f64, upper: f64) -> Result<f64> {
    if !(lower < upper) {
        return Err(Error::invalid(format!(
            "corridor bounds must satisfy lower < upper, got [{lower}, {upper}]"
        )));
    }
    let inside = chain.within(lower, upper);
    if inside.len() < 2 {
        return Err(Error::insufficient(format!(
            "corridor [{lower}, {upper}] holds {} quoted strikes, need 2",
            inside.len()
        )));
    }
    chain.strike_integral(inside)
}

/// Strikes at the `q` and `1 − q` quantiles of the lognormal terminal
/// distribution implied by the at-the-forward volatility, clamped to the
/// quoted range.
pub fn corridor_bounds_from_quantiles(chain: &OptionChain, q: f64) -> Result<(f64, f64)> {
    if !(q > 0.0 && q < 0.5) {
        return Err(Error::invalid(format!("corridor tail probability {q} outside (0, 0.5)")));
    }
    let sigma = atf_vol(chain)?;
    let t = chain.maturity();
    let sd = sigma * t.sqrt();
    let drift = -0.5 * sigma * sigma * t;
    let f = chain.forward();
    let quotes = chain.quotes();
    let lower = f * (drift + sd * norm_quantile(q)?).exp();
    let upper = f * (drift + sd * norm_quantile(1.0 - q)?).exp();
    Ok((
        lower.max(quotes[0].strike),
        upper.min(quotes[quotes.len() - 1].strike),
    ))
}

/// At-the-forward implied volatility, linearly interpolated in strike
/// between the quotes that bracket the forward.
pub fn atf_vol(chain: &OptionChain) -> Result<f64> {
    let quotes = chain.quotes();
    let f = chain.forward();
    let i = quotes.partition_point(|q| q.strike < f);
    if quotes.is_empty() || i == quotes.len() || (i == 0 && quotes[0].strike > f) {
        return Err(Error::insufficient(format!(
            "no quotes bracket the forward {f}"
        )));
    }
    let hi = &quotes[i];
    if hi.strike == f || i == 0 {
        return chain.otm_implied_vol(hi);
    }
    let lo = &quotes[i - 1];
    let (v_lo, v_hi) = (chain.otm_implied_vol(lo)?, chain.otm_implied_vol(hi)?);
    let w = (f - lo.strike) / (hi.strike - lo.strike);
    Ok(v_lo + w * (v_hi - v_lo))
}

/// `100 · sqrt(variance)`
pub fn vix_scale(variance: f64) -> Result<f64> {
    if !(variance >= 0.0) {
        return Err(Error::invalid(format!("variance must be non-negative, got {variance}")));
    }
    Ok(100.0 * variance.sqrt())
}
