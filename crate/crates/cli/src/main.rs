//! `recallsurv`: estimate time-to-event distributions from partially
//! recalled cross-sectional data.
//!
//! Subcommands: `simulate` (synthetic datasets), `fit` (parametric MLE),
//! `npfit` (nonparametric AMLE), `gof` (chi-square goodness of fit),
//! `recallcheck` (recall-shape diagnostic), `mc` (Monte Carlo comparison)
//! and `report` (reduced-scale reproduction of the experiment tables).
//! Every output is accompanied by a `.manifest.json` recording the
//! resolved configuration and input digests.

mod manifest;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use recallsurv_core::diagnostics::{
    conditional_piecewise_recall, cumulative_recall_curves, gof_chisq, model_recall_curves,
};
use recallsurv_core::mc::{
    run_mc_nonparametric, run_mc_parametric, EstimatorKind, McConfig, ScenarioSpec,
};
use recallsurv_core::model::{read_csv_path, write_csv_path, EventTimeModel};
use recallsurv_core::nonparametric::{fit_amle, fit_binary_amle, AmleKind, AmleOptions};
use recallsurv_core::parametric::{fit_mle, LikelihoodKind, ParametricFit};
use recallsurv_core::simulate::{generate, Scenario};
use recallsurv_core::LogisticRecall;

use manifest::RunManifest;

#[derive(Parser)]
#[command(
    name = "recallsurv",
    version,
    about = "Time-to-event estimation from partially recalled data"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset under a named or file-defined scenario.
    Simulate {
        /// Preset name (case_i..case_iv, case_a..case_c, mixture_g02,
        /// mixture_g05) or path to a scenario JSON file.
        #[arg(long)]
        scenario: String,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Maximum-likelihood fit of the Weibull event-age model.
    Fit {
        #[arg(long)]
        data: PathBuf,
        /// Likelihood: current | binary | partial.
        #[arg(long)]
        kind: String,
        /// Optional JSON file with an initial natural-scale parameter
        /// vector [theta1, theta2, eta..].
        #[arg(long)]
        init: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Nonparametric AMLE over the exactly recalled ages.
    Npfit {
        #[arg(long)]
        data: PathBuf,
        /// Comma-separated elapsed-time knots, e.g. 0,3,6,9.
        #[arg(long, default_value = "0,3,6,9")]
        knots: String,
        /// Recall resolution: partial | binary.
        #[arg(long, default_value = "partial")]
        kind: String,
        #[arg(long)]
        out: PathBuf,
        /// Optional CSV export of the fitted step function.
        #[arg(long)]
        steps: Option<PathBuf>,
    },
    /// Chi-square goodness of fit of a partial-recall parametric fit.
    Gof {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        fit: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare fitted logistic recall curves with conditional piecewise
    /// estimates.
    Recallcheck {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        fit: PathBuf,
        #[arg(long, default_value = "0,3,6,9")]
        knots: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Monte Carlo estimator comparison from a JSON configuration.
    Mc {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Optional per-replication raw values.
        #[arg(long)]
        raw: Option<PathBuf>,
    },
    /// Reduced-scale reproduction of the experiment tables and figure data.
    Report {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Scale factor applied to the replication counts (use < 1 for a
        /// quick smoke run).
        #[arg(long, default_value_t = 1.0)]
        reps_scale: f64,
    },
}

fn init_threads() {
    if let Ok(v) = std::env::var("RECALLSURV_THREADS") {
        if let Ok(k) = v.parse::<usize>() {
            if k >= 1 {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(k).build_global();
            }
        }
    }
}

fn parse_knots(text: &str) -> Result<Vec<f64>> {
    let knots: Vec<f64> = text
        .split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| anyhow::anyhow!("bad knot value `{t}`"))
        })
        .collect::<Result<_>>()?;
    if knots.is_empty() {
        bail!("--knots must list at least one value");
    }
    Ok(knots)
}

fn load_fit(path: &Path) -> Result<ParametricFit> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read fit file {}", path.display()))?;
    Ok(serde_json::from_str(&text)?)
}

fn cmd_simulate(scenario: &str, n: usize, seed: u64, out: &Path) -> Result<()> {
    let mut man_inputs: Vec<PathBuf> = Vec::new();
    let mut sc = if Path::new(scenario).exists() {
        man_inputs.push(PathBuf::from(scenario));
        let text = std::fs::read_to_string(scenario)?;
        let sc: Scenario = serde_json::from_str(&text)?;
        sc
    } else {
        Scenario::preset(scenario, n, seed)?
    };
    sc.n = n;
    sc.seed = seed;
    let data = generate(&sc)?;
    write_csv_path(out, &data)?;
    let mut man = RunManifest::new("simulate", serde_json::to_value(&sc)?, Some(seed));
    for p in &man_inputs {
        man.add_input(p)?;
    }
    man.write_for(out)?;
    println!("wrote {} records to {}", data.len(), out.display());
    Ok(())
}

fn cmd_fit(data_path: &Path, kind: &str, init: Option<&Path>, out: &Path) -> Result<()> {
    let kind = LikelihoodKind::parse(kind)?;
    let data = read_csv_path(data_path)?;
    let init_vec: Option<Vec<f64>> = match init {
        Some(p) => {
            let text = std::fs::read_to_string(p)?;
            Some(serde_json::from_str(&text)?)
        }
        None => None,
    };
    let fit = fit_mle(&data, kind, init_vec.as_deref())?;
    output::write_json(out, &fit)?;
    let mut man = RunManifest::new(
        "fit",
        serde_json::json!({ "data": data_path, "kind": kind.name(), "init": init_vec }),
        None,
    );
    man.add_input(data_path)?;
    if let Some(p) = init {
        man.add_input(p)?;
    }
    man.write_for(out)?;
    println!(
        "fit {}: theta = ({:.4}, {:.4}), loglik = {:.4}, converged = {}",
        kind.name(),
        fit.theta[0],
        fit.theta[1],
        fit.loglik,
        fit.converged
    );
    Ok(())
}

fn cmd_npfit(
    data_path: &Path,
    knots_text: &str,
    kind: &str,
    out: &Path,
    steps: Option<&Path>,
) -> Result<()> {
    let knots = parse_knots(knots_text)?;
    let data = read_csv_path(data_path)?;
    let kind = match kind {
        "partial" => AmleKind::Partial,
        "binary" => AmleKind::Binary,
        other => bail!("--kind must be partial or binary, got `{other}`"),
    };
    let fit = match kind {
        AmleKind::Partial => fit_amle(&data, &knots, &AmleOptions::default())?,
        AmleKind::Binary => fit_binary_amle(&data, &knots)?,
    };
    output::write_json(out, &fit)?;
    if let Some(p) = steps {
        output::write_step_csv(p, &fit)?;
    }
    let mut man = RunManifest::new(
        "npfit",
        serde_json::json!({ "data": data_path, "knots": knots, "kind": kind }),
        None,
    );
    man.add_input(data_path)?;
    man.write_for(out)?;
    println!(
        "AMLE with {} support points, loglik = {:.6}, dropped = {}",
        fit.support.len(),
        fit.final_loglik(),
        fit.dropped_subjects
    );
    Ok(())
}

fn cmd_gof(data_path: &Path, fit_path: &Path, out: &Path) -> Result<()> {
    let data = read_csv_path(data_path)?;
    let fit = load_fit(fit_path)?;
    let result = gof_chisq(&data, &fit)?;
    output::write_json(out, &result)?;
    let mut man = RunManifest::new(
        "gof",
        serde_json::json!({ "data": data_path, "fit": fit_path }),
        None,
    );
    man.add_input(data_path)?;
    man.add_input(fit_path)?;
    man.write_for(out)?;
    println!(
        "chi-square = {:.4}, df = {}, p = {:.4} ({} bins from {})",
        result.statistic,
        result.df,
        result.p_value,
        result.bins.len(),
        result.merged_from
    );
    Ok(())
}

fn cmd_recallcheck(
    data_path: &Path,
    fit_path: &Path,
    knots_text: &str,
    out: &Path,
) -> Result<()> {
    let knots = parse_knots(knots_text)?;
    let data = read_csv_path(data_path)?;
    let fit = load_fit(fit_path)?;
    if fit.kind != LikelihoodKind::PartialRecall {
        bail!("recallcheck needs a partial-recall fit");
    }
    let event = EventTimeModel::weibull(fit.theta[0], fit.theta[1])?;
    let piecewise = conditional_piecewise_recall(&data, &event, &knots)?;
    let logistic = LogisticRecall::new([
        fit.eta[0], fit.eta[1], fit.eta[2], fit.eta[3], fit.eta[4], fit.eta[5],
    ])?;
    output::write_recall_check(out, &knots, &piecewise, &logistic)?;
    let mut man = RunManifest::new(
        "recallcheck",
        serde_json::json!({ "data": data_path, "fit": fit_path, "knots": knots }),
        None,
    );
    man.add_input(data_path)?;
    man.add_input(fit_path)?;
    man.write_for(out)?;
    println!(
        "wrote recall comparison for {} segments to {}",
        knots.len(),
        out.display()
    );
    Ok(())
}

fn run_mc_config(cfg: &McConfig) -> Result<recallsurv_core::mc::McSummary> {
    let parametric = cfg.estimators.iter().any(|e| e.is_parametric());
    let nonparametric = cfg.estimators.iter().any(|e| !e.is_parametric());
    let mut rows = Vec::new();
    let mut raw = Vec::new();
    if parametric {
        let s = run_mc_parametric(cfg)?;
        rows.extend(s.rows);
        raw.extend(s.raw);
    }
    if nonparametric {
        let grid = cfg
            .age_grid
            .clone()
            .ok_or_else(|| anyhow::anyhow!("nonparametric estimators need an age_grid"))?;
        let s = run_mc_nonparametric(cfg, &grid)?;
        rows.extend(s.rows);
        raw.extend(s.raw);
    }
    Ok(recallsurv_core::mc::McSummary { rows, raw })
}

fn cmd_mc(config_path: &Path, out: &Path, raw_out: Option<&Path>) -> Result<()> {
    let text = std::fs::read_to_string(config_path)
        .with_context(|| format!("cannot read config {}", config_path.display()))?;
    let cfg: McConfig = serde_json::from_str(&text)?;
    if let Some(k) = cfg.threads {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(k).build_global();
    }
    let summary = run_mc_config(&cfg)?;
    output::write_mc_summary(out, &summary.rows)?;
    if let Some(p) = raw_out {
        output::write_mc_raw(p, &summary.raw)?;
    }
    let mut man = RunManifest::new("mc", serde_json::to_value(&cfg)?, Some(cfg.seed));
    man.add_input(config_path)?;
    man.write_for(out)?;
    println!("wrote {} summary rows to {}", summary.rows.len(), out.display());
    Ok(())
}

fn scaled(reps: usize, scale: f64) -> usize {
    ((reps as f64 * scale).round() as usize).max(2)
}

fn cmd_report(out_dir: &Path, seed: u64, reps_scale: f64) -> Result<()> {
    std::fs::create_dir_all(out_dir)?;
    let man = RunManifest::new(
        "report",
        serde_json::json!({ "seed": seed, "reps_scale": reps_scale }),
        Some(seed),
    );

    // Estimator comparison table, symmetric-recall case.
    let cfg = McConfig {
        scenario: ScenarioSpec::Preset("case_i".into()),
        n: 100,
        reps: scaled(300, reps_scale),
        estimators: vec![
            EstimatorKind::Current,
            EstimatorKind::Binary,
            EstimatorKind::Partial,
        ],
        seed,
        age_grid: None,
        knots: None,
        threads: None,
    };
    let summary = run_mc_parametric(&cfg)?;
    output::write_mc_summary(&out_dir.join("table1_case_i.csv"), &summary.rows)?;

    // Large-sample spot check, month-recall-heavy case.
    let cfg = McConfig {
        scenario: ScenarioSpec::Preset("case_ii".into()),
        n: 1000,
        reps: scaled(100, reps_scale),
        estimators: vec![EstimatorKind::Partial],
        seed: seed ^ 0x5eed_0002,
        age_grid: None,
        knots: None,
        threads: None,
    };
    let summary = run_mc_parametric(&cfg)?;
    output::write_mc_summary(&out_dir.join("table2_spot_case_ii.csv"), &summary.rows)?;

    // Misspecification sensitivity under the gamma = 0.5 mixture.
    let cfg = McConfig {
        scenario: ScenarioSpec::Preset("mixture_g05".into()),
        n: 300,
        reps: scaled(100, reps_scale),
        estimators: vec![
            EstimatorKind::Current,
            EstimatorKind::Binary,
            EstimatorKind::Partial,
        ],
        seed: seed ^ 0x5eed_0003,
        age_grid: None,
        knots: None,
        threads: None,
    };
    let summary = run_mc_parametric(&cfg)?;
    output::write_mc_summary(&out_dir.join("table4_sensitivity_g05.csv"), &summary.rows)?;

    // Nonparametric comparison curves.
    let grid: Vec<f64> = (0..=16).map(|i| 8.0 + 0.5 * i as f64).collect();
    let cfg = McConfig {
        scenario: ScenarioSpec::Preset("case_a".into()),
        n: 100,
        reps: scaled(200, reps_scale),
        estimators: vec![
            EstimatorKind::AmlePartial,
            EstimatorKind::AmleBinary,
            EstimatorKind::Edf,
        ],
        seed: seed ^ 0x5eed_0004,
        age_grid: Some(grid.clone()),
        knots: None,
        threads: None,
    };
    let summary = run_mc_nonparametric(&cfg, &grid)?;
    output::write_fig2(&out_dir.join("fig2_case_a.csv"), &summary.rows)?;

    // Recall-proportion curves and the recall-shape check on one
    // simulated dataset.
    let sc = Scenario::preset("case_ii", 2000, seed ^ 0x5eed_0005)?;
    let data = generate(&sc)?;
    let observed = cumulative_recall_curves(&data, &[8.0, 12.5, 15.5, 18.5, 21.0]);
    output::write_recall_curves(&out_dir.join("fig1_curves.csv"), &observed, &[])?;

    let fit = fit_mle(&data, LikelihoodKind::PartialRecall, None)?;
    if fit.converged {
        let model = model_recall_curves(&fit, &[11.0, 14.0, 17.0, 20.0])?;
        output::write_recall_curves(&out_dir.join("fig5_curves.csv"), &observed, &model)?;
        let knots = [0.0, 3.0, 6.0, 9.0];
        let event = EventTimeModel::weibull(fit.theta[0], fit.theta[1])?;
        let piecewise = conditional_piecewise_recall(&data, &event, &knots)?;
        let logistic = LogisticRecall::new([
            fit.eta[0], fit.eta[1], fit.eta[2], fit.eta[3], fit.eta[4], fit.eta[5],
        ])?;
        output::write_recall_check(
            &out_dir.join("fig4_recallcheck.csv"),
            &knots,
            &piecewise,
            &logistic,
        )?;
    }

    man.write_to(&out_dir.join("manifest.json"))?;
    println!("report written to {}", out_dir.display());
    Ok(())
}

fn run() -> Result<()> {
    let cli = Cli::parse();
    init_threads();
    match &cli.command {
        Command::Simulate { scenario, n, seed, out } => cmd_simulate(scenario, *n, *seed, out),
        Command::Fit { data, kind, init, out } => cmd_fit(data, kind, init.as_deref(), out),
        Command::Npfit { data, knots, kind, out, steps } => {
            cmd_npfit(data, knots, kind, out, steps.as_deref())
        }
        Command::Gof { data, fit, out } => cmd_gof(data, fit, out),
        Command::Recallcheck { data, fit, knots, out } => cmd_recallcheck(data, fit, knots, out),
        Command::Mc { config, out, raw } => cmd_mc(config, out, raw.as_deref()),
        Command::Report { out, seed, reps_scale } => cmd_report(out, *seed, *reps_scale),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
