//! Report tables and figure data.
//!
//! Floats are written with 6 significant digits so reruns are byte-stable.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::pipeline::{EvalReport, PanelRow};
use crate::types::EstimatorId;

pub const PANEL_FILE: &str = "panel.csv";
pub const UNBIASEDNESS_FILE: &str = "unbiasedness.csv";
pub const ENCOMPASSING_FILE: &str = "encompassing.csv";
pub const GOF_FILE: &str = "gof.csv";
pub const FIGURE_FILE: &str = "figure_volatility.csv";
pub const SUMMARY_FILE: &str = "summary.txt";

/// Like C's `%.6g`: 6 significant digits, trailing zeros dropped.
pub fn fmt_sig(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..6).contains(&exp) {
        let decimals = (5 - exp) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        format!("{}e{}{:02}", trim_zeros(mantissa.to_string()), if exp < 0 { '-' } else { '+' }, exp.abs())
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// Values are written at full round-trip precision so that a stored panel
/// re-evaluates to the same tables.
pub fn panel_csv(rows: &[PanelRow]) -> String {
    let mut s = String::from("period,realized");
    for id in EstimatorId::ALL {
        s.push(',');
        s.push_str(id.as_str());
    }
    s.push('\n');
    for r in rows {
        s.push_str(&r.label);
        s.push(',');
        s.push_str(&r.realized.to_string());
        for id in EstimatorId::ALL {
            s.push(',');
            if let Some(v) = r.get(id) {
                s.push_str(&v.to_string());
            }
        }
        s.push('\n');
    }
    s
}

pub fn unbiasedness_csv(eval: &EvalReport) -> String {
    let mut s = String::from("estimator,n,a,p_a,b,p_b,f,p_f,joint_f,p_joint,degenerate\n");
    for (id, u) in &eval.unbiasedness {
        let _ = writeln!(
            s,
            "{id},{},{},{},{},{},{},{},{},{},{}",
            u.n,
            fmt_sig(u.a),
            fmt_sig(u.p_a),
            fmt_sig(u.b),
            fmt_sig(u.p_b),
            fmt_sig(u.f_stat),
            fmt_sig(u.p_f),
            fmt_sig(u.joint_f),
            fmt_sig(u.p_joint),
            u.degenerate
        );
    }
    s
}

pub fn encompassing_csv(eval: &EvalReport) -> String {
    let mut s = String::from("model,regressors,encompassing,n,a,p_a");
    for id in EstimatorId::ALL {
        let _ = write!(s, ",b_{id},p_{id}");
    }
    s.push_str(",adj_r2,durbin_watson,f,p_f,q,f_slopes,p_f_slopes\n");
    for (m, spec) in eval.encompassing.iter().enumerate() {
        let ols = &spec.result.ols;
        let names: Vec<&str> = spec.regressors.iter().map(|id| id.as_str()).collect();
        let _ = write!(
            s,
            "{},{},{},{},{},{}",
            m + 1,
            names.join("+"),
            spec.encompassing,
            ols.n_obs,
            fmt_sig(ols.coefficients[0]),
            fmt_sig(ols.p_values[0])
        );
        for id in EstimatorId::ALL {
            match spec.regressors.iter().position(|r| *r == id) {
                Some(j) => {
                    let _ = write!(s, ",{},{}", fmt_sig(ols.coefficients[j + 1]), fmt_sig(ols.p_values[j + 1]));
                }
                None => s.push_str(",,"),
            }
        }
        let t = &spec.result.test;
        let _ = writeln!(
            s,
            ",{},{},{},{},{},{},{}",
            fmt_sig(ols.adj_r_squared),
            fmt_sig(ols.durbin_watson),
            fmt_sig(t.f_stat),
            fmt_sig(t.p_value),
            t.q,
            fmt_sig(spec.slopes_only.f_stat),
            fmt_sig(spec.slopes_only.p_value)
        );
    }
    s
}

pub fn gof_csv(eval: &EvalReport) -> String {
    let mut s = String::from("estimator,n,mse,delta_hat_sq,statistic,p_value\n");
    for (id, g) in &eval.gof {
        let _ = writeln!(
            s,
            "{id},{},{},{},{},{}",
            g.n,
            fmt_sig(g.mse),
            fmt_sig(g.delta_hat_sq),
            fmt_sig(g.statistic),
            fmt_sig(g.p_value)
        );
    }
    s
}

pub fn figure_csv(rows: &[PanelRow]) -> String {
    let mut s = String::from("period,series,value\n");
    for r in rows {
        let _ = writeln!(s, "{},realized,{}", r.label, fmt_sig(r.realized));
        for id in EstimatorId::ALL {
            if let Some(v) = r.get(id) {
                let _ = writeln!(s, "{},{id},{}", r.label, fmt_sig(v));
            }
        }
    }
    s
}

fn table(s: &mut String, header: &[&str], rows: &[Vec<String>]) {
    let widths: Vec<usize> = (0..header.len())
        .map(|j| rows.iter().map(|r| r[j].len()).chain([header[j].len()]).max().unwrap_or(0))
        .collect();
    let line = |s: &mut String, cells: &[&str]| {
        for (j, c) in cells.iter().enumerate() {
            if j == 0 {
                let _ = write!(s, "{c:<w$}", w = widths[j]);
            } else {
                let _ = write!(s, "  {c:>w$}", w = widths[j]);
            }
        }
        s.push('\n');
    };
    line(s, header);
    for r in rows {
        line(s, &r.iter().map(String::as_str).collect::<Vec<_>>());
    }
    s.push('\n');
}

/// Aligned-column text version of the evaluation tables.
pub fn summary_text(rows: &[PanelRow], eval: &EvalReport) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "volatility panel: {} periods, {} to {}\n",
        rows.len(),
        rows[0].label,
        rows[rows.len() - 1].label
    );
    if let Some(p) = &eval.pretests {
        s.push_str("pre-tests\n");
        let mut t = vec![
            vec!["ADF (constant)".into(), fmt_sig(p.adf.statistic), fmt_sig(p.adf.p_value)],
            vec!["ARCH-LM F".into(), fmt_sig(p.arch_lm.statistic), fmt_sig(p.arch_lm.p_value)],
        ];
        if let Some((stat, pv)) = p.arch_lm.aux {
            t.push(vec!["ARCH-LM n*R^2".into(), fmt_sig(stat), fmt_sig(pv)]);
        }
        table(&mut s, &["test", "statistic", "p"], &t);
    }
    if !eval.unbiasedness.is_empty() {
        s.push_str("unbiasedness: realized - estimate = a + b * estimate\n");
        let t: Vec<Vec<String>> = eval
            .unbiasedness
            .iter()
            .map(|(id, u)| {
                vec![
                    id.to_string(),
                    fmt_sig(u.a),
                    fmt_sig(u.p_a),
                    fmt_sig(u.b),
                    fmt_sig(u.p_b),
                    fmt_sig(u.f_stat),
                    fmt_sig(u.p_f),
                ]
            })
            .collect();
        table(&mut s, &["estimator", "a", "p(a)", "b", "p(b)", "F", "p(F)"], &t);
    }
    if !eval.encompassing.is_empty() {
        s.push_str("encompassing: realized = a + sum b_i * estimate_i\n");
        let t: Vec<Vec<String>> = eval
            .encompassing
            .iter()
            .map(|spec| {
                let ols = &spec.result.ols;
                let coefs: Vec<String> = spec
                    .regressors
                    .iter()
                    .enumerate()
                    .map(|(j, id)| format!("{id}={}", fmt_sig(ols.coefficients[j + 1])))
                    .collect();
                vec![
                    coefs.join(" "),
                    fmt_sig(ols.coefficients[0]),
                    fmt_sig(ols.adj_r_squared),
                    fmt_sig(ols.durbin_watson),
                    fmt_sig(spec.result.test.f_stat),
                    fmt_sig(spec.result.test.p_value),
                    fmt_sig(spec.slopes_only.p_value),
                ]
            })
            .collect();
        table(&mut s, &["slopes", "a", "adj R^2", "D-W", "F", "p(F)", "p(slopes)"], &t);
    }
    if !eval.gof.is_empty() {
        s.push_str("goodness of fit: N*MSE/delta^2 ~ chi2(N)\n");
        let t: Vec<Vec<String>> = eval
            .gof
            .iter()
            .map(|(id, g)| {
                vec![
                    id.to_string(),
                    fmt_sig(g.mse),
                    fmt_sig(g.delta_hat_sq),
                    fmt_sig(g.statistic),
                    fmt_sig(g.p_value),
                ]
            })
            .collect();
        table(&mut s, &["estimator", "MSE", "delta^2", "statistic", "p"], &t);
    }
    if !eval.warnings.is_empty() {
        s.push_str("warnings\n");
        for w in &eval.warnings {
            let _ = writeln!(s, "- {w}");
        }
    }
    s
}

fn write(dir: &Path, name: &str, body: &str) -> Result<PathBuf> {
    let path = dir.join(name);
    fs::write(&path, body).map_err(|source| Error::Io {
        path: path.clone(),
        source,
    })?;
    Ok(path)
}

/// Writes the panel, the three evaluation tables, the figure data and a
/// plain-text summary into `out_dir`, creating it if needed.
pub fn emit_report(rows: &[PanelRow], eval: &EvalReport, out_dir: &Path) -> Result<Vec<PathBuf>> {
    if rows.is_empty() {
        return Err(Error::insufficient("cannot report an empty panel"));
    }
    if eval.is_empty() {
        return Err(Error::insufficient("evaluation produced no results to report"));
    }
    fs::create_dir_all(out_dir).map_err(|source| Error::Io {
        path: out_dir.to_path_buf(),
        source,
    })?;
    Ok(vec![
        write(out_dir, PANEL_FILE, &panel_csv(rows))?,
        write(out_dir, UNBIASEDNESS_FILE, &unbiasedness_csv(eval))?,
        write(out_dir, ENCOMPASSING_FILE, &encompassing_csv(eval))?,
        write(out_dir, GOF_FILE, &gof_csv(eval))?,
        write(out_dir, FIGURE_FILE, &figure_csv(rows))?,
        write(out_dir, SUMMARY_FILE, &summary_text(rows, eval))?,
    ])
}

/// Writes only the evaluation tables and the summary.
pub fn emit_eval_tables(rows: &[PanelRow], eval: &EvalReport, out_dir: &Path) -> Result<Vec<PathBuf>> {
    if rows.is_empty() {
        return Err(Error::insufficient("cannot report an empty panel"));
    }
    if eval.is_empty() {
        return Err(Error::insufficient("evaluation produced no results to report"));
    }
    fs::create_dir_all(out_dir).map_err(|source| Error::Io {
        path: out_dir.to_path_buf(),
        source,
    })?;
    Ok(vec![
        write(out_dir, UNBIASEDNESS_FILE, &unbiasedness_csv(eval))?,
        write(out_dir, ENCOMPASSING_FILE, &encompassing_csv(eval))?,
        write(out_dir, GOF_FILE, &gof_csv(eval))?,
        write(out_dir, SUMMARY_FILE, &summary_text(rows, eval))?,
    ])
}

/// Reads a `panel.csv` written by [`emit_report`].
pub fn read_panel_csv(path: &Path) -> Result<Vec<PanelRow>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Csv {
            path: path.to_path_buf(),
            source: e,
        })?;
    let headers = rdr
        .headers()
        .map_err(|e| Error::Csv {
            path: path.to_path_buf(),
            source: e,
        })?
        .clone();
    let parse_err = |line: u64, msg: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    };
    let find = |name: &str| headers.iter().position(|h| h == name);
    let period = find("period").ok_or_else(|| parse_err(1, "no `period` column".into()))?;
    let realized = find("realized").ok_or_else(|| parse_err(1, "no `realized` column".into()))?;
    let cols: Vec<(EstimatorId, usize)> = EstimatorId::ALL
        .into_iter()
        .filter_map(|id| find(id.as_str()).map(|j| (id, j)))
        .collect();

    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Csv {
            path: path.to_path_buf(),
            source: e,
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        let num = |j: usize| -> Result<Option<f64>> {
            match rec.get(j).unwrap_or("") {
                "" => Ok(None),
                s => s
                    .parse::<f64>()
                    .map(Some)
                    .map_err(|_| parse_err(line, format!("bad number `{s}`"))),
            }
        };
        let realized = num(realized)?.ok_or_else(|| parse_err(line, "missing realized value".into()))?;
        let mut estimates = std::collections::BTreeMap::new();
        for &(id, j) in &cols {
            if let Some(v) = num(j)? {
                estimates.insert(id, v);
            }
        }
        rows.push(PanelRow {
            label: rec.get(period).unwrap_or("").to_string(),
            realized,
            estimates,
        });
    }
    if rows.is_empty() {
        return Err(Error::insufficient(format!("{} has no rows", path.display())));
    }
    Ok(rows)
}
