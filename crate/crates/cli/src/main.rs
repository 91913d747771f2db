use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use emc::analysis::{build_predictor_error_system, ModeExposure, response_rows, small_gain_check, write_response_csv};
use emc::control::case_study_control_law;
use emc::harness::export::{ensure_dir, provenance_line, write_json};
use emc::harness::{export_run, monte_carlo, run_closed_loop, sweep_gamma, ExperimentConfig, SweepAxis, Window};
use emc::noise_estimator::{tune_by_eigenvalues, EstimatorKind};
use emc::plant::DesignModelParams;
use emc::Result;

#[derive(Parser)]
#[command(name = "emc", version, about = "Embedded-model attitude control experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// JSON experiment configuration; omitted fields take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    estimator: Option<EstimatorKind>,
    /// Attitude-channel complementary eigenvalue.
    #[arg(long = "gamma-a")]
    gamma_a: Option<f64>,
    /// Rate-channel complementary eigenvalue.
    #[arg(long = "gamma-r")]
    gamma_r: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Corners {
    /// The single worst corner.
    Worst,
    /// All 16 corners of the uncertainty box.
    All,
}

#[derive(Subcommand)]
enum Command {
    /// Single closed-loop run; writes run.csv and run.json.
    Run(Common),
    /// Complementary-eigenvalue sweep; writes sweep.json.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Comma-separated sweep values.
        #[arg(long, value_delimiter = ',', default_values_t = [0.005, 0.01, 0.02, 0.03, 0.05, 0.1])]
        gammas: Vec<f64>,
        /// Comma-separated estimator kinds.
        #[arg(long, value_delimiter = ',', default_values_t = [EstimatorKind::Dynamic, EstimatorKind::Static])]
        kinds: Vec<EstimatorKind>,
        /// joint, attitude or rate.
        #[arg(long, default_value = "joint")]
        axis: SweepAxis,
    },
    /// Monte Carlo campaign over the configured parameter ranges; writes montecarlo.json.
    Montecarlo {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 100)]
        runs: u64,
    },
    /// Frequency-domain robustness report; writes analysis.json and responses.csv.
    Analyze {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "all")]
        corners: Corners,
        /// Grid density, points per decade.
        #[arg(long, default_value_t = 200)]
        per_decade: usize,
    },
    /// Print estimator and feedback gains for the configured γ values.
    Tune(Common),
    /// Print the effective configuration as JSON.
    Config(Common),
}

fn load(common: &Common) -> Result<ExperimentConfig> {
    let mut cfg = match &common.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(o) = &common.out {
        cfg.output_dir = o.clone();
    }
    if let Some(k) = common.estimator {
        cfg.estimator = k;
    }
    if let Some(g) = common.gamma_a {
        cfg.gamma_attitude = g;
    }
    if let Some(g) = common.gamma_r {
        cfg.gamma_rate = g;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn print_json(v: &serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("JSON values serialize"));
}

fn run(common: &Common) -> Result<()> {
    let cfg = load(common)?;
    let r = run_closed_loop(&cfg, cfg.seed)?;
    let (csv, js) = export_run(&r, &cfg, &cfg.output_dir, "run")?;
    let stat = |ch: &str, w: Window| r.stat(ch, w);
    print_json(&json!({
        "seed": r.seed,
        "config_sha256": r.config_hash,
        "unstable": r.unstable,
        "attitude_error_rad": stat("attitude_error", Window::Full),
        "rate_error_rad_s": stat("rate_error", Window::Full),
        "command_zero_reference_rad_s2": stat("command", Window::ZeroReference),
        "disturbance_correlation": r.summary.disturbance_correlation,
        "saturation_count": r.summary.saturation_count,
        "files": [csv, js],
    }));
    Ok(())
}

fn sweep(common: &Common, gammas: &[f64], kinds: &[EstimatorKind], axis: SweepAxis) -> Result<()> {
    let cfg = load(common)?;
    let s = sweep_gamma(&cfg, gammas, kinds, axis)?;
    ensure_dir(&cfg.output_dir)?;
    let path = cfg.output_dir.join("sweep.json");
    write_json(&path, &s)?;
    for p in &s.points {
        println!(
            "{:<8} gamma={:<6} unstable={:<5} attitude_rms={:.4e} rate_rms={:.4e} command_rms={:.4e}",
            p.kind.to_string(),
            p.gamma,
            p.unstable,
            p.attitude_rms.unwrap_or(f64::NAN),
            p.rate_rms.unwrap_or(f64::NAN),
            p.command_rms.unwrap_or(f64::NAN)
        );
    }
    println!("wrote {}", path.display());
    Ok(())
}

fn montecarlo(common: &Common, runs: u64) -> Result<()> {
    let cfg = load(common)?;
    let mc = monte_carlo(&cfg, runs)?;
    ensure_dir(&cfg.output_dir)?;
    let path = cfg.output_dir.join("montecarlo.json");
    write_json(&path, &mc)?;
    print_json(&json!({
        "runs": mc.n,
        "unstable": mc.unstable_count,
        "saturated_runs": mc.saturated_runs,
        "quantiles": mc.quantiles,
        "file": path,
    }));
    Ok(())
}

fn analyze(common: &Common, corners: Corners, per_decade: usize) -> Result<()> {
    let cfg = load(common)?;
    let est = tune_by_eigenvalues(cfg.estimator, cfg.gamma_attitude, cfg.gamma_rate, cfg.n_q()?)?;
    let channels = build_predictor_error_system(&est, cfg.step_s)?;
    let corner_set: Vec<DesignModelParams> = match corners {
        Corners::Worst => vec![DesignModelParams::worst_corner()],
        Corners::All => cfg.param_ranges.corners(),
    };
    let attitude = small_gain_check(&channels.attitude, "attitude", ModeExposure::Flexible, &corner_set, per_decade)?;
    let rate = small_gain_check(&channels.rate, "rate", ModeExposure::Rigid, &corner_set, per_decade)?;
    ensure_dir(&cfg.output_dir)?;
    let hash = cfg.hash()?;
    let json_path = cfg.output_dir.join("analysis.json");
    write_json(
        &json_path,
        &json!({
            "config_sha256": hash,
            "seed": cfg.seed,
            "estimator": cfg.estimator,
            "gamma_attitude": cfg.gamma_attitude,
            "gamma_rate": cfg.gamma_rate,
            "reports": [&attitude, &rate],
        }),
    )?;
    let mut rows = response_rows(&channels.attitude, "attitude", ModeExposure::Flexible, &corner_set, (per_decade / 4).max(1))?;
    rows.extend(response_rows(&channels.rate, "rate", ModeExposure::Rigid, &corner_set, (per_decade / 4).max(1))?);
    let csv_path = cfg.output_dir.join("responses.csv");
    let header = provenance_line(cfg.seed, &hash);
    write_response_csv(&csv_path, header.trim_start_matches("# "), &rows)?;
    for r in [&attitude, &rate] {
        println!(
            "{:<8} eta={:.3} (coarse grid {:.3}) small_gain={} strict={} no_encirclement={} predictor_radius={:.6}",
            r.channel,
            r.eta,
            r.eta_coarse,
            if r.small_gain_pass { "PASS" } else { "FAIL" },
            if r.strict_pass { "PASS" } else { "FAIL" },
            r.no_encirclement,
            r.predictor_spectral_radius
        );
    }
    println!("wrote {} and {}", json_path.display(), csv_path.display());
    Ok(())
}

fn tune(common: &Common) -> Result<()> {
    let cfg = load(common)?;
    let est = tune_by_eigenvalues(cfg.estimator, cfg.gamma_attitude, cfg.gamma_rate, cfg.n_q()?)?;
    let law = case_study_control_law(&est.model(), cfg.gamma_feedback, cfg.step_s)?;
    let gains = est.to_document(cfg.gamma_attitude, cfg.gamma_rate);
    let rows = |m: &emc::statespace::Mat| -> Vec<Vec<f64>> {
        (0..m.nrows()).map(|r| m.row(r).iter().copied().collect()).collect()
    };
    print_json(&json!({
        "estimator": serde_json::from_str::<serde_json::Value>(&gains.to_json()?)?,
        "feedback": {
            "gamma": cfg.gamma_feedback,
            "K": rows(&law.k),
            "Q": rows(&law.sylvester.q),
            "M_c": rows(&law.sylvester.m_c),
            "u_max_rad_per_step2": law.u_max,
        },
    }));
    if common.out.is_some() {
        ensure_dir(&cfg.output_dir)?;
        gains.write(&cfg.output_dir.join("gains.json"))?;
    }
    Ok(())
}

fn show_config(common: &Common) -> Result<()> {
    let cfg = load(common)?;
    println!("{}", cfg.to_json_pretty()?);
    Ok(())
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run(c) => run(&c),
        Command::Sweep { common, gammas, kinds, axis } => sweep(&common, &gammas, &kinds, axis),
        Command::Montecarlo { common, runs } => montecarlo(&common, runs),
        Command::Analyze { common, corners, per_decade } => analyze(&common, corners, per_decade),
        Command::Tune(c) => tune(&c),
        Command::Config(c) => show_config(&c),
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
