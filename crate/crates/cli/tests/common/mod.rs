#![allow(dead_code)]

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use chrono::{Datelike, Duration, NaiveDate, Weekday};
use volest::garch::GarchParams;
use volest::synthetic::simulate_garch_returns;

pub const MARKET: GarchParams = GarchParams {
    mu: 0.0003,
    omega: 2e-6,
    alpha1: 0.05,
    alpha2: 0.04,
    beta1: 0.89,
    nu: 7.0,
};

/// Weekdays from 2004-01-02.
pub fn business_days(n: usize) -> Vec<NaiveDate> {
    let mut d = NaiveDate::from_ymd_opt(2004, 1, 2).unwrap();
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        if !matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
            out.push(d);
        }
        d += Duration::days(1);
    }
    out
}

/// Writes `returns.csv` and `vix.csv` for a synthetic GARCH market of `n`
/// daily returns. The VIX column is the model's conditional volatility
/// scaled to percent with a premium.
pub fn write_market(dir: &Path, n: usize, seed: u64) -> (PathBuf, PathBuf) {
    let r = simulate_garch_returns(&MARKET, n, seed).unwrap();
    let dates = business_days(n);
    let mut rs = String::from("date,return\n");
    let mut vs = String::from("date,close\n");
    let mut h = MARKET.unconditional_variance();
    for (i, (d, x)) in dates.iter().zip(&r).enumerate() {
        writeln!(rs, "{d},{x}").unwrap();
        writeln!(vs, "{d},{:.2}", 100.0 * 1.15 * (252.0 * h).sqrt()).unwrap();
        let prev = if i > 0 { r[i - 1] - MARKET.mu } else { 0.0 };
        let e = x - MARKET.mu;
        h = MARKET.omega + MARKET.alpha1 * e * e + MARKET.alpha2 * prev * prev + MARKET.beta1 * h;
    }
    let rp = dir.join("returns.csv");
    let vp = dir.join("vix.csv");
    std::fs::write(&rp, rs).unwrap();
    std::fs::write(&vp, vs).unwrap();
    (rp, vp)
}

/// Runs the CLI in-process; returns (exit code, stdout, stderr).
pub fn cli(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = volest_cli::run(std::iter::once("volest").chain(args.iter().copied()), &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

/// Every file under `dir` as (relative path, bytes), sorted.
pub fn tree(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(dir).unwrap().to_path_buf(), std::fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}
