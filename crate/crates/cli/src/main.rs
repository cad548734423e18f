use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use obm_core::experiments::{run_consistency_study, run_coverage_study, run_likelihood_landscape};
use obm_core::inference::estimate_with_interval;
use obm_core::likelihood::likelihood_landscape;
use obm_core::limit_law::{limit_params, limit_quantiles, LimitQuantiles, LimitSamplerConfig};
use obm_core::mle::{argsup_mle, ArgsupConfig};
use obm_core::sampler::{export_path, import_path, simulate_path, PathMetadata};
use obm_core::{ExperimentConfig, LocalTimeScale, ModelParams, ObmError, PathSample, RngStream, Window};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "obm", version, about = "Threshold estimation for oscillating Brownian motion")]
struct Cli {
    #[command(flatten)]
    common: CommonArgs,
    #[command(subcommand)]
    command: Command,
}

/// Settings shared by every subcommand. Each flag overrides the matching
/// field of the `--config` file.
#[derive(Args)]
struct CommonArgs {
    /// JSON configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    alpha: Option<f64>,
    #[arg(long, global = true)]
    beta: Option<f64>,
    /// True or reference threshold.
    #[arg(long, global = true, allow_hyphen_values = true)]
    rho0: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    x0: Option<f64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Miscoverage level of the interval.
    #[arg(long, global = true)]
    level: Option<f64>,
    #[arg(long, global = true)]
    n_mc: Option<usize>,
    #[arg(long, global = true)]
    tail_tol: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    window_lo: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    window_hi: Option<f64>,
    #[arg(long, global = true, value_delimiter = ',')]
    n_values: Option<Vec<usize>>,
    #[arg(long, global = true)]
    replications: Option<usize>,
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    theta_lo: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    theta_hi: Option<f64>,
    #[arg(long, global = true)]
    theta_step: Option<f64>,
    #[arg(long, global = true)]
    max_path_files: Option<usize>,
    /// Run until this many replications pass the local-time threshold.
    #[arg(long, global = true)]
    conditioned_target: Option<usize>,
    #[arg(long, global = true, value_enum)]
    local_time_scale: Option<Scale>,
    /// Allow runs beyond the desk-scale limits.
    #[arg(long, global = true)]
    allow_large: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Scale {
    Raw,
    Calibrated,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a path exactly and write it as CSV with a JSON sidecar.
    Simulate {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        stream: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate the log-likelihood ratio over the theta grid.
    Loglik {
        #[arg(long)]
        path: PathBuf,
        /// CSV destination; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Argsup estimate of the threshold.
    Estimate {
        #[arg(long)]
        path: PathBuf,
    },
    /// Monte Carlo quantiles of the limit argsup.
    LimitQuantiles {
        /// Optional CSV of all sorted draws.
        #[arg(long)]
        draws_out: Option<PathBuf>,
    },
    /// Estimate with an asymptotic confidence interval.
    Ci {
        #[arg(long)]
        path: PathBuf,
    },
    /// Monte Carlo studies.
    Experiment {
        #[arg(value_enum)]
        kind: ExperimentKind,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ExperimentKind {
    Landscape,
    Consistency,
    Coverage,
}

impl CommonArgs {
    fn resolve(&self) -> obm_core::Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::from_json_file(p)?,
            None => ExperimentConfig::default(),
        };
        macro_rules! set {
            ($($field:ident),*) => { $(if let Some(v) = self.$field.clone() { cfg.$field = v; })* };
        }
        set!(alpha, beta, rho0, x0, seed, level, n_mc, tail_tol, n_values, replications, output_dir, max_path_files);
        if let Some(v) = self.conditioned_target {
            cfg.conditioned_target = Some(v);
        }
        if let Some(v) = self.window_lo {
            cfg.window.lo = v;
        }
        if let Some(v) = self.window_hi {
            cfg.window.hi = v;
        }
        if let Some(v) = self.theta_lo {
            cfg.theta_grid.lo = v;
        }
        if let Some(v) = self.theta_hi {
            cfg.theta_grid.hi = v;
        }
        if let Some(v) = self.theta_step {
            cfg.theta_grid.step = v;
        }
        if let Some(s) = self.local_time_scale {
            cfg.local_time_scale = match s {
                Scale::Raw => LocalTimeScale::Raw,
                Scale::Calibrated => LocalTimeScale::Calibrated,
            };
        }
        cfg.allow_large |= self.allow_large;
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Serialize)]
struct EstimateOutput {
    rho_hat: f64,
    value: f64,
    attained_as_left_limit: bool,
    n: usize,
    params: ModelParams,
    theta_hat: f64,
    ties: Vec<f64>,
    edge_margin: f64,
    edge_warning: bool,
}

#[derive(Serialize)]
struct CiOutput<'a> {
    #[serde(flatten)]
    report: obm_core::EstimationReport,
    argsup_value: f64,
    attained_as_left_limit: bool,
    params: ModelParams,
    quantiles: &'a LimitQuantiles,
}

fn print_json<T: Serialize>(value: &T) -> obm_core::Result<()> {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn load_path(file: &Path) -> obm_core::Result<PathSample> {
    Ok(import_path(file)?.0)
}

fn quantiles_for(cfg: &ExperimentConfig) -> obm_core::Result<LimitQuantiles> {
    let lp = limit_params(cfg.alpha, cfg.beta)?;
    let sampler = LimitSamplerConfig { tail_tol: cfg.tail_tol, ..Default::default() };
    limit_quantiles(&lp, cfg.level, cfg.n_mc, cfg.seed, sampler)
}

fn argsup_config(window: Window) -> ArgsupConfig {
    ArgsupConfig { window, ..Default::default() }
}

fn run(cli: Cli) -> obm_core::Result<()> {
    let cfg = cli.common.resolve()?;
    let params = cfg.params()?;
    match cli.command {
        Command::Simulate { n, stream, out } => {
            let path = simulate_path(&params, n, cfg.x0, &mut RngStream::new(cfg.seed, stream))?;
            let meta = PathMetadata {
                n,
                x0: cfg.x0,
                alpha: cfg.alpha,
                beta: cfg.beta,
                rho: cfg.rho0,
                seed: cfg.seed,
                stream_id: stream,
            };
            export_path(&path, &meta, &out)?;
            log::info!("wrote {} increments to {}", n, out.display());
        }
        Command::Loglik { path, out } => {
            let path = load_path(&path)?;
            let land = likelihood_landscape(&path, &params, &cfg.theta_grid.points())?;
            match out {
                Some(file) => land.write_csv(BufWriter::new(File::create(file)?))?,
                None => land.write_csv(io::stdout().lock())?,
            }
        }
        Command::Estimate { path } => {
            let path = load_path(&path)?;
            let est = argsup_mle(&path, &params, &argsup_config(cfg.window))?;
            print_json(&EstimateOutput {
                rho_hat: est.rho_hat,
                value: est.value,
                attained_as_left_limit: est.attained_as_left_limit,
                n: path.n(),
                params,
                theta_hat: est.theta_hat,
                ties: est.ties,
                edge_margin: est.edge_margin,
                edge_warning: est.edge_warning,
            })?;
        }
        Command::LimitQuantiles { draws_out } => {
            let q = quantiles_for(&cfg)?;
            if let Some(file) = draws_out {
                let mut w = BufWriter::new(File::create(file)?);
                writeln!(w, "z_star")?;
                for z in &q.draws {
                    writeln!(w, "{z}")?;
                }
                w.flush()?;
            }
            print_json(&q)?;
        }
        Command::Ci { path } => {
            let path = load_path(&path)?;
            let q = quantiles_for(&cfg)?;
            let (est, report) =
                estimate_with_interval(&path, &params, &argsup_config(cfg.window), &q, cfg.local_time_scale)?;
            print_json(&CiOutput {
                report,
                argsup_value: est.value,
                attained_as_left_limit: est.attained_as_left_limit,
                params,
                quantiles: &q,
            })?;
        }
        Command::Experiment { kind } => match kind {
            ExperimentKind::Landscape => print_json(&run_likelihood_landscape(&cfg)?)?,
            ExperimentKind::Consistency => print_json(&run_consistency_study(&cfg)?)?,
            ExperimentKind::Coverage => print_json(&run_coverage_study(&cfg)?)?,
        },
    }
    Ok(())
}

fn exit_code(err: &ObmError) -> u8 {
    match err {
        ObmError::Numerical(_) | ObmError::Horizon(_) | ObmError::InternalFault(_) => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
