use proptest::prelude::*;

use volest::implied::{
    atf_vol, bs_price, corridor_bounds_from_quantiles, corridor_variance, implied_vol, max_vega_strike,
    model_free_variance, vega, vix_scale, OptionChain, OptionKind, OptionQuote,
};
use volest::stats::norm_pdf;
use volest::synthetic::generate_bs_chain;
use volest::{Error, ErrorClass};

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

/// Discounted expected payoff under the lognormal law, Simpson's rule in the
/// standard normal variable on [-12, 12].
fn price_by_quadrature(s: f64, k: f64, r: f64, t: f64, sigma: f64, kind: OptionKind) -> f64 {
    let n = 40_000;
    let (lo, hi) = (-12.0, 12.0);
    let h = (hi - lo) / n as f64;
    let payoff = |z: f64| {
        let st = s * ((r - 0.5 * sigma * sigma) * t + sigma * t.sqrt() * z).exp();
        let v = match kind {
            OptionKind::Call => (st - k).max(0.0),
            OptionKind::Put => (k - st).max(0.0),
        };
        v * norm_pdf(z)
    };
    let mut acc = payoff(lo) + payoff(hi);
    for i in 1..n {
        acc += if i % 2 == 1 { 4.0 } else { 2.0 } * payoff(lo + i as f64 * h);
    }
    (-r * t).exp() * acc * h / 3.0
}

#[test]
fn prices_match_quadrature() {
    for &(k, t, sigma) in &[(80.0, 0.25, 0.2), (100.0, 1.0, 0.3), (130.0, 2.0, 0.5), (95.0, 0.1, 0.15)] {
        for kind in [OptionKind::Call, OptionKind::Put] {
            let a = bs_price(100.0, k, 0.03, t, sigma, kind).unwrap();
            let b = price_by_quadrature(100.0, k, 0.03, t, sigma, kind);
            // the kink in the payoff limits Simpson's rule to about 1e-7
            assert!((a - b).abs() < 1e-6, "{kind} K={k}: {a} vs {b}");
        }
    }
}

#[test]
fn vega_matches_finite_difference() {
    for &(k, t, sigma) in &[(90.0, 0.5, 0.2), (100.0, 1.0, 0.4), (120.0, 0.1, 0.25)] {
        let h = 1e-5;
        let up = bs_price(100.0, k, 0.01, t, sigma + h, OptionKind::Call).unwrap();
        let dn = bs_price(100.0, k, 0.01, t, sigma - h, OptionKind::Call).unwrap();
        let fd = (up - dn) / (2.0 * h);
        let v = vega(100.0, k, 0.01, t, sigma).unwrap();
        assert!((fd - v).abs() < 1e-6 * v.max(1.0), "{fd} {v}");
    }
    let k = max_vega_strike(100.0, 0.01, 0.3, 0.5).unwrap();
    let v = vega(100.0, k, 0.01, 0.5, 0.3).unwrap();
    for dk in [-0.5, 0.5] {
        assert!(vega(100.0, k + dk, 0.01, 0.5, 0.3).unwrap() < v);
    }
}

#[test]
fn implied_vol_rejects_arbitrage_and_bad_input() {
    // below intrinsic
    let e = implied_vol(19.0, 120.0, 100.0, 0.0, 1.0, OptionKind::Call).unwrap_err();
    assert!(matches!(e, Error::NoArbitrage(_)));
    // above the spot
    assert!(implied_vol(101.0, 100.0, 100.0, 0.0, 1.0, OptionKind::Call).is_err());
    let e = implied_vol(1.0, 100.0, 100.0, 0.0, -1.0, OptionKind::Call).unwrap_err();
    assert_eq!(e.class(), ErrorClass::Usage);
}

#[test]
fn model_free_recovers_sigma_squared() {
    for &(r, t) in &[(0.0, 30.0 / 365.0), (0.05, 0.5)] {
        let strikes = linspace(1.0, 1000.0, 2000);
        let chain = generate_bs_chain(100.0, r, t, 0.2, &strikes).unwrap();
        let v = model_free_variance(&chain).unwrap();
        assert!((v.sqrt() - 0.2).abs() < 1e-3, "r={r}: {}", v.sqrt());
        assert!((vix_scale(v).unwrap() - 100.0 * v.sqrt()).abs() < 1e-12);
        assert!((atf_vol(&chain).unwrap() - 0.2).abs() < 1e-8);
    }
}

#[test]
fn one_sided_quotes_are_filled_by_parity() {
    let strikes = linspace(40.0, 250.0, 85);
    let full = generate_bs_chain(100.0, 0.02, 0.5, 0.25, &strikes).unwrap();
    let f = full.forward();
    // keep only the out-of-the-money side at each strike
    let quotes = full
        .quotes()
        .iter()
        .map(|q| {
            if q.strike < f {
                OptionQuote::new(q.strike, None, q.put_mid).unwrap()
            } else {
                OptionQuote::new(q.strike, q.call_mid, None).unwrap()
            }
        })
        .collect();
    let partial = OptionChain::new(100.0, 0.02, 0.5, quotes).unwrap();
    let (a, b) = (model_free_variance(&full).unwrap(), model_free_variance(&partial).unwrap());
    assert!((a - b).abs() < 1e-12, "{a} {b}");
}

#[test]
fn corridor_properties() {
    let strikes = linspace(30.0, 300.0, 271);
    let chain = generate_bs_chain(100.0, 0.01, 0.25, 0.3, &strikes).unwrap();
    let full = model_free_variance(&chain).unwrap();
    assert_eq!(corridor_variance(&chain, 30.0, 300.0).unwrap(), full);
    assert_eq!(corridor_variance(&chain, 0.0, 1e9).unwrap(), full);

    let (l, u) = corridor_bounds_from_quantiles(&chain, 0.05).unwrap();
    let f = chain.forward();
    assert!(l < f && f < u && l >= 30.0 && u <= 300.0);
    let c = corridor_variance(&chain, l, u).unwrap();
    assert!(c < full);
    // a 90% lognormal corridor holds most of the variance
    assert!(c > 0.5 * full, "{c} {full}");

    let e = corridor_variance(&chain, 120.0, 110.0).unwrap_err();
    assert_eq!(e.class(), ErrorClass::Usage);
    let e = corridor_variance(&chain, 100.2, 100.4).unwrap_err();
    assert_eq!(e.class(), ErrorClass::Data);
}

#[test]
fn chains_must_straddle_the_forward() {
    let chain = generate_bs_chain(100.0, 0.0, 0.25, 0.2, &[105.0, 110.0, 120.0]).unwrap();
    assert!(matches!(model_free_variance(&chain), Err(Error::InsufficientData(_))));
    let chain = generate_bs_chain(100.0, 0.0, 0.25, 0.2, &[90.0, 110.0]).unwrap();
    assert!(model_free_variance(&chain).is_err());
}

#[test]
fn generated_chains_satisfy_parity_and_invert() {
    let strikes = linspace(60.0, 160.0, 21);
    let chain = generate_bs_chain(100.0, 0.04, 1.5, 0.35, &strikes).unwrap();
    let df = (-0.04f64 * 1.5).exp();
    for q in chain.quotes() {
        let gap = q.call_mid.unwrap() - q.put_mid.unwrap() - (100.0 - q.strike * df);
        assert!(gap.abs() < 1e-12, "{gap}");
    }
    for (_, iv) in chain.implied_vols() {
        assert!((iv.unwrap() - 0.35).abs() < 1e-10);
    }
}

proptest! {
    #[test]
    fn put_call_parity(k in 20.0f64..300.0, t in 0.01f64..3.0, sigma in 0.01f64..1.5, r in -0.02f64..0.1) {
        let c = bs_price(100.0, k, r, t, sigma, OptionKind::Call).unwrap();
        let p = bs_price(100.0, k, r, t, sigma, OptionKind::Put).unwrap();
        prop_assert!((c - p - (100.0 - k * (-r * t).exp())).abs() < 1e-11 * (100.0f64).max(k));
    }

    #[test]
    fn round_trip(m in 0.7f64..1.5, t in 0.1f64..2.0, sigma in 0.1f64..1.0, call in any::<bool>()) {
        let kind = if call { OptionKind::Call } else { OptionKind::Put };
        let p = bs_price(100.0, 100.0 * m, 0.01, t, sigma, kind).unwrap();
        let iv = implied_vol(p, 100.0, 100.0 * m, 0.01, t, kind).unwrap();
        prop_assert!((iv - sigma).abs() < 1e-7, "{iv} vs {sigma}");
    }

    #[test]
    fn price_is_monotone_in_sigma(k in 50.0f64..200.0, t in 0.05f64..2.0, s1 in 0.05f64..1.0, ds in 0.001f64..0.5) {
        let a = bs_price(100.0, k, 0.0, t, s1, OptionKind::Call).unwrap();
        let b = bs_price(100.0, k, 0.0, t, s1 + ds, OptionKind::Call).unwrap();
        prop_assert!(b >= a);
    }
}
