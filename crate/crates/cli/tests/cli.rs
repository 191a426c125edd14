mod common;

use std::fs;

use common::{cli, tree, write_market};

fn value(csv: &str, key: &str) -> f64 {
    csv.lines()
        .find_map(|l| l.strip_prefix(&format!("{key},")))
        .unwrap_or_else(|| panic!("no {key} in\n{csv}"))
        .parse()
        .unwrap()
}

#[test]
fn exit_codes() {
    assert_eq!(cli(&[]).0, 1);
    assert_eq!(cli(&["--help"]).0, 0);
    assert_eq!(cli(&["estimate", "--bogus"]).0, 1);
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let o = out.to_str().unwrap();

    let (code, _, err) = cli(&["estimate", "--out", o]);
    assert_eq!(code, 1);
    assert!(err.contains("--returns"), "{err}");

    let (code, _, err) = cli(&["estimate", "--returns", "/nonexistent/r.csv", "--out", o]);
    assert_eq!(code, 2, "{err}");

    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "date,return\n2005-01-03,0.01\n2005-01-04,oops\n").unwrap();
    let (code, _, err) = cli(&["estimate", "--returns", bad.to_str().unwrap(), "--out", o]);
    assert_eq!(code, 2);
    assert!(err.contains("line 3"), "{err}");

    let (code, _, _) = cli(&["simulate", "--vol", "garch:0,1e-6,0.5,0.4,0.3,7", "--out", o]);
    assert_eq!(code, 1);

    let chain = dir.path().join("chain.csv");
    fs::write(&chain, "strike,call_mid,put_mid\n95,6,1\n105,1,6\n").unwrap();
    let (code, _, err) =
        cli(&["implied", "--chain", chain.to_str().unwrap(), "--spot", "100", "--rate", "0", "--maturity", "0.1"]);
    assert_eq!(code, 2);
    assert!(err.contains("insufficient strikes"), "{err}");
}

#[test]
fn simulated_chain_recovers_its_volatility() {
    let dir = tempfile::tempdir().unwrap();
    let sim = dir.path().join("sim");
    let (code, stdout, err) = cli(&[
        "simulate",
        "--vol",
        "constant:0.2",
        "--steps",
        "21",
        "--horizon",
        "0.0821917808219178",
        "--chain-strikes",
        "1:1000:2000",
        "--out",
        sim.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    assert_eq!(value(&stdout, "integrated_variance"), 0.04);

    let (code, out, err) = cli(&[
        "implied",
        "--chain",
        sim.join("chain.csv").to_str().unwrap(),
        "--spot",
        "100",
        "--rate",
        "0",
        "--maturity",
        "0.0821917808219178",
    ]);
    assert_eq!(code, 0, "{err}");
    assert!((value(&out, "model_free_vol") - 0.2).abs() < 1e-3, "{out}");
    assert!((value(&out, "model_free_index") - 20.0).abs() < 0.1);
    let corridor = value(&out, "corridor_variance");
    assert!(corridor < value(&out, "model_free_variance"));
    assert!(out.contains("strike,implied_vol"));

    let (code, _, err) = cli(&[
        "implied",
        "--chain",
        sim.join("chain.csv").to_str().unwrap(),
        "--spot",
        "100",
        "--rate",
        "0",
        "--maturity",
        "0.08",
        "--bounds",
        "120",
        "80",
    ]);
    assert_eq!(code, 1, "{err}");
}

#[test]
fn piecewise_integrated_variance() {
    let dir = tempfile::tempdir().unwrap();
    let (code, stdout, err) = cli(&[
        "simulate",
        "--vol",
        "piecewise:0.1@0.5,0.3@1",
        "--steps",
        "1000",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    assert!((value(&stdout, "integrated_variance") - 0.05).abs() < 1e-15);
    let path = fs::read_to_string(dir.path().join("path.csv")).unwrap();
    assert_eq!(path.lines().count(), 1002);
}

#[test]
fn config_file_reproduces_a_run() {
    let dir = tempfile::tempdir().unwrap();
    let (rp, vp) = write_market(dir.path(), 253 + 20 * 12 + 21, 3);
    let a = dir.path().join("a");
    let (code, _, err) = cli(&[
        "estimate",
        "--returns",
        rp.to_str().unwrap(),
        "--vix",
        vp.to_str().unwrap(),
        "--garch-restarts",
        "1",
        "--seed",
        "4",
        "--out",
        a.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    let cfg = a.join("run_config.txt");
    let text = fs::read_to_string(&cfg).unwrap();
    assert!(text.contains("garch_restarts = 1"), "{text}");

    let b = dir.path().join("b");
    let (code, _, err) = cli(&["estimate", "--config", cfg.to_str().unwrap(), "--out", b.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    assert_eq!(tree(&a), tree(&b));

    // a flag overrides the file
    let c = dir.path().join("c");
    let (code, _, _) = cli(&[
        "estimate",
        "--config",
        cfg.to_str().unwrap(),
        "--garch-restarts",
        "0",
        "--out",
        c.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    assert!(fs::read_to_string(c.join("run_config.txt")).unwrap().contains("garch_restarts = 0"));

    let bad = dir.path().join("bad.txt");
    fs::write(&bad, "garch_restarts = 1\nfrobnicate = 2\n").unwrap();
    let (code, _, err) = cli(&["estimate", "--config", bad.to_str().unwrap(), "--out", c.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(err.contains("frobnicate") && err.contains("bad.txt:2:"), "{err}");
}

#[test]
fn stored_panel_rescores_identically() {
    let dir = tempfile::tempdir().unwrap();
    let (rp, vp) = write_market(dir.path(), 253 + 20 * 40 + 21, 8);
    let est = dir.path().join("est");
    let (code, _, err) = cli(&[
        "estimate",
        "--returns",
        rp.to_str().unwrap(),
        "--vix",
        vp.to_str().unwrap(),
        "--out",
        est.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    let panel = est.join("panel.csv");
    assert_eq!(fs::read_to_string(&panel).unwrap().lines().count(), 42);

    let ev = dir.path().join("ev");
    let (code, stdout, err) =
        cli(&["evaluate", "--panel", panel.to_str().unwrap(), "--out", ev.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    assert!(stdout.contains("vix"));
    let rep = dir.path().join("rep");
    let (code, _, err) = cli(&["report", "--panel", panel.to_str().unwrap(), "--out", rep.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    for f in ["unbiasedness.csv", "encompassing.csv", "gof.csv"] {
        let a = fs::read(est.join(f)).unwrap();
        assert_eq!(a, fs::read(ev.join(f)).unwrap(), "{f}");
        assert_eq!(a, fs::read(rep.join(f)).unwrap(), "{f}");
    }
    assert_eq!(fs::read(est.join("panel.csv")).unwrap(), fs::read(rep.join("panel.csv")).unwrap());

    let (code, _, err) = cli(&[
        "evaluate",
        "--panel",
        panel.to_str().unwrap(),
        "--delta-hat",
        "realized",
        "--out",
        ev.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    let gof = fs::read_to_string(ev.join("gof.csv")).unwrap();
    assert_ne!(gof, fs::read_to_string(est.join("gof.csv")).unwrap());
}

#[test]
fn estimate_without_vix_warns() {
    let dir = tempfile::tempdir().unwrap();
    let (rp, _) = write_market(dir.path(), 253 + 20 * 3 + 21, 9);
    let out = dir.path().join("o");
    let (code, _, err) = cli(&[
        "estimate",
        "--returns",
        rp.to_str().unwrap(),
        "--estimators",
        "hsv_rolling,hsv_increasing,vix",
        "--gof-min-obs",
        "3",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    let summary = fs::read_to_string(out.join("summary.txt")).unwrap();
    assert!(summary.contains("vix skipped"), "{summary}");
    let header = fs::read_to_string(out.join("panel.csv")).unwrap();
    assert!(header.starts_with("period,realized,hsv_rolling"));
}
