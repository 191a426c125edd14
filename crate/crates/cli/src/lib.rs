//! `volest` command-line front end.
//!
//! Exit status: 0 on success, 1 for usage errors, 2 for data errors and 3
//! for numerical failures. Logs go to standard error; data goes to files
//! under `--out` or to standard output.

pub mod config;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, CommandFactory, Parser, Subcommand};
use volest::evaluate::DeltaHat;
use volest::garch::{ForecastBasis, Innovation};
use volest::implied::{corridor_bounds_from_quantiles, corridor_variance, model_free_variance, vix_scale};
use volest::ingest::{load_chain_csv, load_close_csv, load_returns_csv};
use volest::pipeline::{evaluate_panel, run_pipeline, PipelineConfig};
use volest::report::{emit_eval_tables, emit_report, fmt_sig, read_panel_csv, summary_text};
use volest::synthetic::{
    discrete_variance_payoff, generate_bs_chain, integrated_variance, simulate_path, SimConfig, VolProcess,
};
use volest::types::{EstimatorId, ReturnKind};
use volest::ErrorClass;

use config::{set, EstimateConfig, EvaluateConfig, KeyValues, List, SimulateConfig, StrikeGrid, RUN_CONFIG_FILE};

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Core(volest::Error),
}

impl From<volest::Error> for Failure {
    fn from(e: volest::Error) -> Self {
        Failure::Core(e)
    }
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Core(e) => match e.class() {
                ErrorClass::Usage => 1,
                ErrorClass::Data => 2,
                ErrorClass::Numerical => 3,
            },
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Usage(m) => f.write_str(m),
            Failure::Core(e) => write!(f, "{e}"),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "volest", version, about = "Volatility estimation and evaluation")]
pub struct Cli {
    /// More log output on standard error (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run every estimator on a return series and write the evaluation report.
    Estimate(EstimateArgs),
    /// Model-free and corridor implied variance of an option chain.
    Implied(ImpliedArgs),
    /// Simulate a price path and compare realized with integrated variance.
    Simulate(SimulateArgs),
    /// Re-score an existing panel.csv.
    Evaluate(PanelArgs),
    /// Re-emit every report file from a stored panel.csv.
    Report(PanelArgs),
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    /// Returns CSV with `date,return` columns.
    #[arg(long)]
    pub returns: Option<PathBuf>,
    /// VIX CSV with `date,close` columns.
    #[arg(long)]
    pub vix: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// `key = value` file supplying defaults for the flags below.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_name = "log|simple")]
    pub return_kind: Option<ReturnKind>,
    #[arg(long)]
    pub first_anchor: Option<usize>,
    #[arg(long)]
    pub step: Option<usize>,
    #[arg(long)]
    pub realized_len: Option<usize>,
    #[arg(long)]
    pub rolling_window: Option<usize>,
    #[arg(long)]
    pub trading_days: Option<u32>,
    /// Comma-separated subset of hsv_rolling, hsv_increasing, garch_rolling,
    /// garch_increasing, vix.
    #[arg(long)]
    pub estimators: Option<List<EstimatorId>>,
    #[arg(long, value_name = "t|normal")]
    pub garch_dist: Option<Innovation>,
    #[arg(long)]
    pub garch_restarts: Option<usize>,
    #[arg(long)]
    pub garch_min_obs: Option<usize>,
    #[arg(long)]
    pub garch_max_iter: Option<usize>,
    #[arg(long, value_name = "filtered|unconditional")]
    pub garch_forecast: Option<ForecastBasis>,
    /// Clamp GARCH forecasts at twice the previous realized volatility.
    #[arg(long, value_name = "true|false")]
    pub garch_cap: Option<bool>,
    #[arg(long, value_name = "estimator|realized")]
    pub delta_hat: Option<DeltaHat>,
    #[arg(long)]
    pub gof_min_obs: Option<usize>,
    #[arg(long)]
    pub arch_lags: Option<usize>,
    #[arg(long)]
    pub adf_lags: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct ImpliedArgs {
    /// Chain CSV with `strike,call_mid,put_mid` columns.
    #[arg(long)]
    pub chain: PathBuf,
    #[arg(long)]
    pub spot: f64,
    #[arg(long)]
    pub rate: f64,
    /// Years.
    #[arg(long)]
    pub maturity: f64,
    /// Corridor from the q and 1 − q lognormal quantiles at the
    /// at-the-forward volatility.
    #[arg(long, conflicts_with = "bounds")]
    pub corridor_q: Option<f64>,
    /// Absolute corridor bounds.
    #[arg(long, num_args = 2, value_names = ["L", "U"], allow_negative_numbers = true)]
    pub bounds: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// `constant:σ`, `piecewise:σ1@t1,σ2@t2,...` or
    /// `garch:mu,omega,alpha1,alpha2,beta1,nu`.
    #[arg(long)]
    pub vol: Option<VolProcess>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Years.
    #[arg(long)]
    pub horizon: Option<f64>,
    #[arg(long)]
    pub s0: Option<f64>,
    #[arg(long)]
    pub rate: Option<f64>,
    /// Also write a Black-Scholes chain on `lo:hi:n` strikes, priced at the
    /// path's integrated volatility.
    #[arg(long)]
    pub chain_strikes: Option<StrikeGrid>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PanelArgs {
    #[arg(long)]
    pub panel: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_name = "estimator|realized")]
    pub delta_hat: Option<DeltaHat>,
    #[arg(long)]
    pub gof_min_obs: Option<usize>,
}

/// Parses `args` (including the program name) and runs the command. Returns
/// the process exit status.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match parse(args, stderr) {
        Ok(cli) => execute(cli, stdout, stderr),
        Err(code) => code,
    }
}

/// Parses the command line. Help and version requests are printed and
/// returned as exit status 0; bad arguments as 1.
pub fn parse<I, T>(args: I, stderr: &mut dyn Write) -> Result<Cli, i32>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    Cli::try_parse_from(args).map_err(|e| {
        use clap::error::ErrorKind;
        let _ = write!(stderr, "{}", e.render());
        match e.kind() {
            ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
            _ => 1,
        }
    })
}

pub fn execute(cli: Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    let name = match &cli.command {
        Command::Estimate(_) => "estimate",
        Command::Implied(_) => "implied",
        Command::Simulate(_) => "simulate",
        Command::Evaluate(_) => "evaluate",
        Command::Report(_) => "report",
    };
    match dispatch(cli.command, stdout) {
        Ok(()) => 0,
        Err(f) => {
            let _ = writeln!(stderr, "error: {f}");
            if let Failure::Usage(_) = f {
                let mut cmd = Cli::command();
                cmd.build();
                if let Some(sub) = cmd.find_subcommand_mut(name) {
                    let _ = writeln!(stderr, "\n{}", sub.render_usage());
                }
            }
            f.exit_code()
        }
    }
}

fn dispatch(cmd: Command, stdout: &mut dyn Write) -> Result<(), Failure> {
    match cmd {
        Command::Estimate(a) => cmd_estimate(a),
        Command::Implied(a) => cmd_implied(a, stdout),
        Command::Simulate(a) => cmd_simulate(a, stdout),
        Command::Evaluate(a) => cmd_evaluate(a, stdout),
        Command::Report(a) => cmd_report(a),
    }
}

fn base_kv(path: &Option<PathBuf>) -> Result<KeyValues, Failure> {
    match path {
        Some(p) => KeyValues::load(p),
        None => Ok(KeyValues::default()),
    }
}

fn write_out(dir: &Path, name: &str, body: &str) -> Result<(), Failure> {
    std::fs::create_dir_all(dir).map_err(|source| volest::Error::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let path = dir.join(name);
    std::fs::write(&path, body).map_err(|source| volest::Error::Io { path, source })?;
    Ok(())
}

pub fn cmd_estimate(a: EstimateArgs) -> Result<(), Failure> {
    let mut c = EstimateConfig::from_kv(base_kv(&a.config)?)?;
    c.returns = a.returns.or(c.returns);
    c.vix = a.vix.or(c.vix);
    set(&mut c.return_kind, a.return_kind);
    set(&mut c.first_anchor, a.first_anchor);
    set(&mut c.step, a.step);
    set(&mut c.realized_len, a.realized_len);
    set(&mut c.rolling_window, a.rolling_window);
    set(&mut c.trading_days, a.trading_days);
    set(&mut c.estimators, a.estimators);
    set(&mut c.garch_dist, a.garch_dist);
    set(&mut c.garch_restarts, a.garch_restarts);
    set(&mut c.garch_min_obs, a.garch_min_obs);
    set(&mut c.garch_max_iter, a.garch_max_iter);
    set(&mut c.garch_forecast, a.garch_forecast);
    set(&mut c.garch_cap, a.garch_cap);
    set(&mut c.delta_hat, a.delta_hat);
    set(&mut c.gof_min_obs, a.gof_min_obs);
    set(&mut c.arch_lags, a.arch_lags);
    set(&mut c.adf_lags, a.adf_lags);
    set(&mut c.seed, a.seed);

    let returns_path = c
        .returns
        .clone()
        .ok_or_else(|| Failure::Usage("--returns is required (flag or `returns` config key)".into()))?;
    let pipeline: PipelineConfig = c.pipeline()?;
    let returns = load_returns_csv(&returns_path, c.return_kind)?;
    let vix = c.vix.as_deref().map(load_close_csv).transpose()?;
    let out = run_pipeline(&returns, vix.as_ref(), &pipeline)?;
    emit_report(&out.rows, &out.eval, &a.out)?;
    write_out(&a.out, RUN_CONFIG_FILE, &c.to_text())?;
    log::info!("wrote {} panel rows to {}", out.rows.len(), a.out.display());
    Ok(())
}

pub fn cmd_implied(a: ImpliedArgs, stdout: &mut dyn Write) -> Result<(), Failure> {
    let chain = load_chain_csv(&a.chain, a.spot, a.rate, a.maturity)?;
    if chain.quotes().len() < 3 {
        return Err(volest::Error::InsufficientData(format!(
            "insufficient strikes: {} quoted, at least 3 needed",
            chain.quotes().len()
        ))
        .into());
    }
    let (lower, upper) = match (&a.bounds, a.corridor_q) {
        (Some(b), _) => {
            if !(b[0] < b[1]) {
                return Err(Failure::Usage(format!("--bounds must satisfy L < U, got {} {}", b[0], b[1])));
            }
            (b[0], b[1])
        }
        (None, q) => corridor_bounds_from_quantiles(&chain, q.unwrap_or(0.05))?,
    };
    let mfiv = model_free_variance(&chain)?;
    let corridor = corridor_variance(&chain, lower, upper)?;

    let mut s = String::from("quantity,value\n");
    let mut row = |k: &str, v: f64| {
        let _ = writeln!(s, "{k},{}", fmt_sig(v));
    };
    row("forward", chain.forward());
    row("model_free_variance", mfiv);
    row("model_free_vol", mfiv.sqrt());
    row("model_free_index", vix_scale(mfiv)?);
    row("corridor_lower", lower);
    row("corridor_upper", upper);
    row("corridor_variance", corridor);
    row("corridor_index", vix_scale(corridor)?);
    s.push_str("\nstrike,implied_vol\n");
    for (k, iv) in chain.implied_vols() {
        let _ = writeln!(s, "{},{}", fmt_sig(k), iv.map(fmt_sig).unwrap_or_default());
    }
    stdout
        .write_all(s.as_bytes())
        .map_err(|e| Failure::Usage(format!("cannot write to standard output: {e}")))?;
    Ok(())
}

pub fn cmd_simulate(a: SimulateArgs, stdout: &mut dyn Write) -> Result<(), Failure> {
    let mut c = SimulateConfig::from_kv(base_kv(&a.config)?)?;
    c.vol = a.vol.or(c.vol);
    set(&mut c.steps, a.steps);
    set(&mut c.seed, a.seed);
    set(&mut c.horizon, a.horizon);
    set(&mut c.s0, a.s0);
    set(&mut c.rate, a.rate);
    c.chain_strikes = a.chain_strikes.or(c.chain_strikes);

    let vol = c
        .vol
        .clone()
        .ok_or_else(|| Failure::Usage("--vol is required (flag or `vol` config key)".into()))?;
    let sim = SimConfig {
        s0: c.s0,
        rate: c.rate,
        horizon: c.horizon,
        n_steps: c.steps,
        seed: c.seed,
    };
    sim.validate()?;
    let path = simulate_path(&sim, &vol)?;
    let payoff = discrete_variance_payoff(&path.prices, c.horizon)?;
    let integrated = integrated_variance(&vol, c.horizon, Some(&path))?;

    let mut csv = String::from("step,time,price,sigma\n");
    for (k, p) in path.prices.iter().enumerate() {
        let sigma = if k == 0 { String::new() } else { path.sigmas[k - 1].to_string() };
        let _ = writeln!(csv, "{k},{},{p},{sigma}", k as f64 * path.dt);
    }
    write_out(&a.out, "path.csv", &csv)?;

    let summary = format!(
        "quantity,value\ndiscrete_variance_payoff,{}\nintegrated_variance,{}\n",
        fmt_sig(payoff),
        fmt_sig(integrated)
    );
    write_out(&a.out, "variance.csv", &summary)?;

    if let Some(grid) = c.chain_strikes {
        let chain = generate_bs_chain(c.s0, c.rate, c.horizon, integrated.sqrt(), &grid.strikes())?;
        let mut s = String::from("strike,call_mid,put_mid\n");
        for q in chain.quotes() {
            let _ = writeln!(
                s,
                "{},{},{}",
                q.strike,
                q.call_mid.expect("generated"),
                q.put_mid.expect("generated")
            );
        }
        write_out(&a.out, "chain.csv", &s)?;
    }
    write_out(&a.out, RUN_CONFIG_FILE, &c.to_text())?;
    stdout
        .write_all(summary.as_bytes())
        .map_err(|e| Failure::Usage(format!("cannot write to standard output: {e}")))?;
    Ok(())
}

fn panel_config(a: &PanelArgs) -> Result<(EvaluateConfig, PipelineConfig), Failure> {
    let mut c = EvaluateConfig::from_kv(base_kv(&a.config)?)?;
    c.panel = a.panel.clone().or(c.panel);
    set(&mut c.delta_hat, a.delta_hat);
    set(&mut c.gof_min_obs, a.gof_min_obs);
    let mut p = PipelineConfig::default();
    p.gof.delta_hat = c.delta_hat;
    p.gof.min_obs = c.gof_min_obs;
    Ok((c, p))
}

pub fn cmd_evaluate(a: PanelArgs, stdout: &mut dyn Write) -> Result<(), Failure> {
    let (c, p) = panel_config(&a)?;
    let path = c.panel.clone().ok_or_else(|| Failure::Usage("--panel is required".into()))?;
    let rows = read_panel_csv(&path)?;
    let eval = evaluate_panel(&rows, &p)?;
    emit_eval_tables(&rows, &eval, &a.out)?;
    write_out(&a.out, RUN_CONFIG_FILE, &c.to_text("evaluate"))?;
    stdout
        .write_all(summary_text(&rows, &eval).as_bytes())
        .map_err(|e| Failure::Usage(format!("cannot write to standard output: {e}")))?;
    Ok(())
}

pub fn cmd_report(a: PanelArgs) -> Result<(), Failure> {
    let (c, p) = panel_config(&a)?;
    let path = c.panel.clone().ok_or_else(|| Failure::Usage("--panel is required".into()))?;
    let rows = read_panel_csv(&path)?;
    let eval = evaluate_panel(&rows, &p)?;
    emit_report(&rows, &eval, &a.out)?;
    write_out(&a.out, RUN_CONFIG_FILE, &c.to_text("report"))?;
    Ok(())
}
