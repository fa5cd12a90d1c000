//! `dynclust`: simulate, fit, summarize, diagnose and validate dynamic
//! clustering runs. Errors are printed to stdout as one JSON record and the
//! process exits nonzero.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use dynclust::analysis::{
    adjusted_rand_index, cocluster_error, mean_by_lag, num_clusters, pool_chains, psis_loo, summarize, waic,
    LogLikMatrix,
};
use dynclust::io::{
    config_to_toml, dataset_fingerprint, file_sha256, load_config, load_draws, load_panel_csv, load_schema,
    read_partition_csv, save_draws, save_panel_csv, write_atomic, write_cocluster_csv, write_criteria_csv,
    write_lagged_ari_csv, write_manifest, write_membership_csv, write_parameter_csv, write_partition_csv,
    AcceptanceRecord, ChainRecord, DataRecord, RunManifest, SchemaOptions, Timing,
};
use dynclust::model::validate_config;
use dynclust::sampler::{run_chains, Progress, RunOptions};
use dynclust::simulation::{generate, ScenarioMode, ScenarioSpec};
use dynclust::{ModelConfig, PanelDataset, PosteriorDraws};

const WORKERS_ENV: &str = "DYNCLUST_WORKERS";
const MANIFEST: &str = "manifest.json";

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Core(#[from] dynclust::Error),
    #[error("{0}")]
    Usage(String),
    #[error("validation failed: {0}")]
    Validation(String),
}

impl CliError {
    fn kind(&self) -> &'static str {
        match self {
            CliError::Core(e) => e.kind(),
            CliError::Usage(_) => "usage",
            CliError::Validation(_) => "validation",
        }
    }

    fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Validation(_) => 3,
            CliError::Core(_) => 1,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Core(e.into())
    }
}

type Result<T> = std::result::Result<T, CliError>;

#[derive(Parser)]
#[command(name = "dynclust", version, about = "Dynamic clustering of spatio-temporal panel data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic scenario with its ground truth.
    Simulate(SimulateArgs),
    /// Run one or more chains and write draws plus a manifest.
    Fit(FitArgs),
    /// Co-clustering, VI point estimates and lagged ARI from a fit.
    Summarize(SummarizeArgs),
    /// WAIC, PSIS-LOO, Pareto-k and acceptance report from a fit.
    Diagnose(RunDirArgs),
    /// Check a configuration against a dataset without sampling.
    Validate(ValidateArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Balanced,
    Imbalanced,
}

#[derive(Args)]
struct SimulateArgs {
    /// Scenario file (TOML, every ScenarioSpec field optional).
    #[arg(long)]
    scenario: Option<PathBuf>,
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    times: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "sim")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct DataArgs {
    /// Panel CSV: station_id, time, y, lat, lon, covariates...
    #[arg(long)]
    data: PathBuf,
    /// Covariate transforms (TOML with covariates, angles, squares, interactions).
    #[arg(long)]
    schema: Option<PathBuf>,
}

#[derive(Args)]
struct ConfigArgs {
    /// Model configuration (TOML); flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Named preset used when no config file is given: default or long.
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long)]
    burnin: Option<usize>,
    #[arg(long)]
    thin: Option<usize>,
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    config: ConfigArgs,
    #[arg(long, default_value_t = 1)]
    chains: usize,
    #[arg(long, default_value = "fit")]
    out_dir: PathBuf,
    /// Also store lambda, eps and xi in the draw files.
    #[arg(long)]
    store_latents: bool,
    /// Also export draws as CSV.
    #[arg(long)]
    export_csv: bool,
}

#[derive(Args)]
struct RunDirArgs {
    /// Directory written by `fit`.
    #[arg(long, default_value = "fit")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct SummarizeArgs {
    #[command(flatten)]
    run: RunDirArgs,
    /// Ground-truth partitions (as written by `simulate`) to score against.
    #[arg(long)]
    truth: Option<PathBuf>,
    #[arg(long, default_value_t = 5)]
    max_lag: usize,
}

#[derive(Args)]
struct ValidateArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    config: ConfigArgs,
}

fn resolve_config(args: &ConfigArgs) -> Result<ModelConfig> {
    let mut cfg = match (&args.config, &args.preset) {
        (Some(_), Some(_)) => return Err(CliError::Usage("use either --config or --preset".into())),
        (Some(path), None) => load_config(path)?,
        (None, Some(name)) => {
            ModelConfig::preset(name).ok_or_else(|| CliError::Usage(format!("unknown preset `{name}`")))?
        }
        (None, None) => ModelConfig::default(),
    };
    if let Some(v) = args.seed {
        cfg.seed = v;
    }
    if let Some(v) = args.iters {
        cfg.n_iter = v;
    }
    if let Some(v) = args.burnin {
        cfg.burn_in = v;
    }
    if let Some(v) = args.thin {
        cfg.thin = v;
    }
    Ok(cfg)
}

fn load_data(args: &DataArgs) -> Result<(PanelDataset, SchemaOptions)> {
    let schema = match &args.schema {
        Some(p) => load_schema(p)?,
        None => SchemaOptions::default(),
    };
    Ok((load_panel_csv(&args.data, &schema)?, schema))
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    Ok(())
}

fn write_file(path: &Path, write: impl FnOnce(&mut Vec<u8>) -> dynclust::Result<()>) -> Result<()> {
    let mut buf = Vec::new();
    write(&mut buf)?;
    fs::write(path, buf)?;
    Ok(())
}

fn cocluster_dir_files(dir: &Path, stack: &dynclust::analysis::CoclusterStack, station_ids: &[String]) -> Result<()> {
    create_dir(dir)?;
    for t in 0..stack.times {
        write_file(&dir.join(format!("cocluster_t{:03}.csv", t + 1)), |b| {
            write_cocluster_csv(stack, t, station_ids, b)
        })?;
    }
    Ok(())
}

fn simulate(args: SimulateArgs) -> Result<serde_json::Value> {
    let mut spec = match &args.scenario {
        Some(p) => {
            let text = fs::read_to_string(p)?;
            toml::from_str(&text).map_err(|e| CliError::Usage(format!("bad scenario file: {e}")))?
        }
        None => ScenarioSpec::default(),
    };
    if let Some(m) = args.mode {
        spec.mode = match m {
            Mode::Balanced => ScenarioMode::Balanced,
            Mode::Imbalanced => ScenarioMode::Imbalanced,
        };
    }
    if let Some(v) = args.n {
        spec.n = v;
    }
    if let Some(v) = args.times {
        spec.times = v;
    }
    if let Some(v) = args.seed {
        spec.seed = v;
    }
    let (data, truth) = generate(&spec)?;
    let dir = &args.out_dir;
    create_dir(dir)?;
    save_panel_csv(&data, dir.join("panel.csv"))?;
    write_file(&dir.join("truth_partitions.csv"), |b| {
        write_partition_csv(&truth.partitions, &data.station_ids, &data.time_labels, b)
    })?;
    cocluster_dir_files(&dir.join("truth_cocluster"), &truth.cocluster, &data.station_ids)?;
    let spec_text = toml::to_string(&spec).map_err(|e| CliError::Usage(e.to_string()))?;
    fs::write(dir.join("scenario.toml"), spec_text)?;
    Ok(json!({
        "command": "simulate",
        "out_dir": dir,
        "n": data.n(),
        "times": data.times(),
        "p": data.p(),
        "notes": truth.notes,
    }))
}

fn check_config(cfg: &ModelConfig, data: &PanelDataset) -> Result<()> {
    let report = validate_config(cfg, data);
    if report.passed() {
        Ok(())
    } else {
        Err(CliError::Validation(report.summary()))
    }
}

fn fit(args: FitArgs) -> Result<serde_json::Value> {
    let cfg = resolve_config(&args.config)?;
    let (data, schema) = load_data(&args.data)?;
    check_config(&cfg, &data)?;
    if args.chains == 0 {
        return Err(CliError::Usage("--chains must be at least 1".into()));
    }
    let dir = &args.out_dir;
    create_dir(dir)?;

    let progress = |p: &Progress| {
        log::info!("iteration {}/{}  lambda acceptance {:.3}", p.iteration, p.n_iter, p.acceptance.lambda_mean());
    };
    let opts = RunOptions {
        store_latents: args.store_latents,
        progress_every: (cfg.n_iter / 20).max(1),
        progress: Some(&progress),
        ..RunOptions::default()
    };
    let start = Instant::now();
    let chains = run_chains(&cfg, &data, args.chains, &opts)?;
    let sampling = start.elapsed().as_secs_f64();

    let post_start = Instant::now();
    let mut records = Vec::with_capacity(chains.len());
    for (c, draws) in chains.iter().enumerate() {
        let name = format!("draws_chain{c}.bin");
        let path = dir.join(&name);
        save_draws(draws, &path)?;
        if args.export_csv {
            write_file(&dir.join(format!("draws_chain{c}_params.csv")), |b| write_parameter_csv(draws, b))?;
            write_file(&dir.join(format!("draws_chain{c}_memberships.csv")), |b| {
                write_membership_csv(draws, &data.station_ids, b)
            })?;
        }
        records.push(ChainRecord {
            chain: c as u64,
            draw_file: name,
            draws_sha256: file_sha256(&path)?,
            retained_draws: draws.len(),
            acceptance: AcceptanceRecord::from(&draws.acceptance),
            sampling_minutes: draws.sampling_seconds / 60.0,
            warnings: draws.warnings.clone(),
        });
    }
    let config_text = config_to_toml(&cfg)?;
    write_atomic(dir.join("config.toml"), config_text.as_bytes())?;
    let data_path = fs::canonicalize(&args.data.data)?;
    let manifest = RunManifest {
        software_version: env!("CARGO_PKG_VERSION").to_string(),
        command: "fit".into(),
        seed: cfg.seed,
        chains: args.chains,
        store_latents: args.store_latents,
        config: cfg,
        data: DataRecord {
            path: Some(data_path.display().to_string()),
            sha256: dataset_fingerprint(&data),
            n: data.n(),
            times: data.times(),
            p: data.p(),
            observed_cells: data.observed_count(),
            schema,
        },
        chain_records: records,
        timing: Timing {
            sampling_minutes: sampling / 60.0,
            post_processing_minutes: post_start.elapsed().as_secs_f64() / 60.0,
        },
    };
    write_manifest(&manifest, dir.join(MANIFEST))?;
    Ok(json!({
        "command": "fit",
        "out_dir": dir,
        "chains": manifest.chains,
        "retained_draws": manifest.chain_records.iter().map(|r| r.retained_draws).collect::<Vec<_>>(),
        "sampling_minutes": manifest.timing.sampling_minutes,
        "warnings": manifest.chain_records.iter().flat_map(|r| r.warnings.clone()).collect::<Vec<_>>(),
    }))
}

/// Manifest, pooled draws and the dataset they were fitted to.
fn load_run(dir: &Path) -> Result<(RunManifest, PosteriorDraws, PanelDataset)> {
    let manifest = RunManifest::load(dir.join(MANIFEST))?;
    let mut chains = Vec::with_capacity(manifest.chain_records.len());
    for rec in &manifest.chain_records {
        let path = dir.join(&rec.draw_file);
        if file_sha256(&path)? != rec.draws_sha256 {
            return Err(CliError::Usage(format!("{} does not match its manifest hash", path.display())));
        }
        let mut d = load_draws(&path)?;
        d.acceptance = rec.acceptance.to_rates();
        d.warnings = rec.warnings.clone();
        chains.push(d);
    }
    let pooled = pool_chains(&chains)?;
    let data_path = manifest.data.path.clone().ok_or_else(|| CliError::Usage("manifest has no data path".into()))?;
    let data = load_panel_csv(&data_path, &manifest.data.schema)?;
    if dataset_fingerprint(&data) != manifest.data.sha256 {
        return Err(CliError::Usage(format!("{data_path} changed since the fit")));
    }
    Ok((manifest, pooled, data))
}

fn add_post_processing(dir: &Path, manifest: &mut RunManifest, seconds: f64) -> Result<()> {
    manifest.timing.post_processing_minutes += seconds / 60.0;
    write_manifest(manifest, dir.join(MANIFEST))?;
    Ok(())
}

fn summarize_cmd(args: SummarizeArgs) -> Result<serde_json::Value> {
    let start = Instant::now();
    let dir = &args.run.out_dir;
    let (mut manifest, draws, data) = load_run(dir)?;
    let summary = summarize(&draws, args.max_lag)?;
    cocluster_dir_files(&dir.join("cocluster"), &summary.cocluster, &data.station_ids)?;
    write_file(&dir.join("partitions.csv"), |b| {
        write_partition_csv(&summary.point, &data.station_ids, &data.time_labels, b)
    })?;
    write_file(&dir.join("lagged_ari.csv"), |b| write_lagged_ari_csv(&summary.lagged, &data.time_labels, b))?;
    let mean_lagged = mean_by_lag(&summary.lagged);
    let mut report = json!({
        "command": "summarize",
        "draws": draws.len(),
        "clusters_per_time": summary.point.partitions.iter().map(|p| num_clusters(p)).collect::<Vec<_>>(),
        "mean_lagged_ari": mean_lagged,
    });

    if let Some(truth_path) = &args.truth {
        let (truth, stations, times) = read_partition_csv(fs::File::open(truth_path)?)?;
        if stations != data.station_ids || times != data.time_labels {
            return Err(CliError::Usage("truth partitions do not match the fitted panel".into()));
        }
        let aris: Vec<f64> =
            (0..truth.times()).map(|t| adjusted_rand_index(truth.at(t), summary.point.at(t))).collect();
        let mut sorted = aris.clone();
        sorted.sort_by(f64::total_cmp);
        let mid = sorted.len() / 2;
        let median = if sorted.len() % 2 == 1 { sorted[mid] } else { 0.5 * (sorted[mid - 1] + sorted[mid]) };
        let truth_stack = dynclust::analysis::CoclusterStack::from_partitions(&truth);
        let coc_err = cocluster_error(&truth_stack, &summary.cocluster)?;
        write_file(&dir.join("recovery.csv"), |b| {
            let mut w = csv::Writer::from_writer(b);
            let err = |e: csv::Error| dynclust::Error::Format(e.to_string());
            w.write_record(["time", "ari"]).map_err(err)?;
            for (t, a) in aris.iter().enumerate() {
                w.write_record([data.time_labels[t].as_str(), &a.to_string()]).map_err(err)?;
            }
            w.flush()?;
            Ok(())
        })?;
        report["median_ari"] = json!(median);
        report["cocluster_error"] = json!(coc_err);
    }
    add_post_processing(dir, &mut manifest, start.elapsed().as_secs_f64())?;
    Ok(report)
}

fn diagnose(args: RunDirArgs) -> Result<serde_json::Value> {
    let start = Instant::now();
    let dir = &args.out_dir;
    let (mut manifest, draws, _) = load_run(dir)?;
    let ll = LogLikMatrix::new(&draws.loglik, draws.len(), draws.cells.len())?;
    let w = waic(ll)?;
    let loo = psis_loo(ll)?;
    write_file(&dir.join("criteria.csv"), |b| write_criteria_csv(&w, &loo, b))?;
    write_file(&dir.join("acceptance.csv"), |b| {
        let mut out = csv::Writer::from_writer(b);
        let err = |e: csv::Error| dynclust::Error::Format(e.to_string());
        out.write_record(["chain", "block", "rate"]).map_err(err)?;
        let fmt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for rec in &manifest.chain_records {
            let c = rec.chain.to_string();
            for (k, r) in rec.acceptance.lambda.iter().enumerate() {
                out.write_record([c.clone(), format!("lambda_{k}"), fmt(*r)]).map_err(err)?;
            }
            out.write_record([c.clone(), "psi".into(), fmt(rec.acceptance.psi)]).map_err(err)?;
            out.write_record([c.clone(), "phi".into(), fmt(rec.acceptance.phi)]).map_err(err)?;
        }
        out.flush()?;
        Ok(())
    })?;
    let hist = dynclust::analysis::pareto_k_histogram(&loo.pareto_k);
    add_post_processing(dir, &mut manifest, start.elapsed().as_secs_f64())?;
    Ok(json!({
        "command": "diagnose",
        "waic": w.waic,
        "p_waic": w.p_waic,
        "looic": loo.looic,
        "max_pareto_k": loo.max_k(),
        "pareto_k_histogram": {"le_0.5": hist[0], "0.5_0.7": hist[1], "0.7_1": hist[2], "gt_1": hist[3]},
        "warnings": loo.warnings,
        "lambda_acceptance": manifest.chain_records.iter().map(|r| r.acceptance.lambda_mean).collect::<Vec<_>>(),
    }))
}

fn validate(args: ValidateArgs) -> Result<serde_json::Value> {
    let cfg = resolve_config(&args.config)?;
    let (data, _) = load_data(&args.data)?;
    check_config(&cfg, &data)?;
    Ok(json!({
        "command": "validate",
        "ok": true,
        "n": data.n(),
        "times": data.times(),
        "p": data.p(),
        "observed_cells": data.observed_count(),
        "retained_draws": cfg.retained_draws(),
    }))
}

fn configure_workers() -> Result<()> {
    if let Ok(v) = std::env::var(WORKERS_ENV) {
        let n: usize = v.parse().map_err(|_| CliError::Usage(format!("{WORKERS_ENV} must be a positive integer")))?;
        if n == 0 {
            return Err(CliError::Usage(format!("{WORKERS_ENV} must be a positive integer")));
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| CliError::Usage(e.to_string()))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<serde_json::Value> {
    configure_workers()?;
    match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Fit(a) => fit(a),
        Command::Summarize(a) => summarize_cmd(a),
        Command::Diagnose(a) => diagnose(a),
        Command::Validate(a) => validate(a),
    }
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(report) => println!("{report}"),
        Err(e) => {
            println!("{}", json!({"error": {"kind": e.kind(), "message": e.to_string()}}));
            std::process::exit(e.exit_code());
        }
    }
}
