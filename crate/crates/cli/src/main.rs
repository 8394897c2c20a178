//! `robustfl` command-line front end.

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use robustfl::experiments::{self, ExperimentConfig};
use robustfl::io;
use robustfl::{
    certify, design_input, error_bound, estimate_rho0, gaussian_input, ls_estimate, pe_check, receding_horizon,
    simulate, DpcConfig, Error, NoiseModel, PredictorModel, Result, Vector,
};

#[derive(Parser)]
#[command(name = "robustfl", version, about = "Robust fundamental lemma toolkit")]
struct Cli {
    /// Experiment configuration (JSON); flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw an input signal, optionally rescaled to a target excitation level.
    Design(DesignArgs),
    /// Simulate the configured system on an input and write a dataset directory.
    Simulate(SimulateArgs),
    /// Least-squares predictor from a dataset directory.
    Identify(IdentifyArgs),
    /// Print the robustness certificate for input/state CSV files.
    Certify(CertifyArgs),
    /// Estimate ρ₀ for the configured system.
    Rho0(Rho0Args),
    /// Receding-horizon tracking run on the configured plant.
    Dpc(DpcArgs),
    /// Full study: three excitation levels, certificates, predictors, closed loop.
    #[command(name = "reproduce-sec4")]
    Reproduce(ReproduceArgs),
}

#[derive(Args)]
struct DesignArgs {
    /// Output CSV; the sidecar is written next to it with a `.json` extension.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long = "T")]
    t: Option<usize>,
    /// Excitation order; defaults to n + 1.
    #[arg(long)]
    order: Option<usize>,
    #[arg(long)]
    target_alpha: Option<f64>,
    /// Standard deviation when no target level is given.
    #[arg(long)]
    std: Option<f64>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Input CSV; defaults to the configured base input.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    noise_std: Option<f64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    x0: Option<Vec<f64>>,
}

#[derive(Args)]
struct IdentifyArgs {
    /// Dataset directory (u.csv, x.csv, w.csv, dataset.json).
    #[arg(long)]
    data: PathBuf,
    /// Also write the predictor JSON here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CertifyArgs {
    #[arg(long)]
    u: PathBuf,
    #[arg(long)]
    x: PathBuf,
    /// Lower bound on ρ₀; estimated for the configured system when absent.
    #[arg(long)]
    rho: Option<f64>,
    /// State dimension; defaults to the column count of the state file.
    #[arg(long)]
    n: Option<usize>,
}

#[derive(Args)]
struct Rho0Args {
    #[arg(long)]
    starts: Option<usize>,
}

#[derive(Args)]
struct DpcArgs {
    /// Predictor JSON from `identify`; defaults to the exact model.
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    horizon: Option<usize>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    noise_std: Option<f64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    x0: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    reference: Option<Vec<f64>>,
}

#[derive(Args)]
struct ReproduceArgs {
    #[arg(long)]
    out: Option<PathBuf>,
    /// Extra seeds for the tracking-cost batch (seed, seed+1, ...).
    #[arg(long, default_value_t = 0)]
    batch: usize,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    target_alpha: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct DesignSidecar {
    m: usize,
    #[serde(rename = "T")]
    t: usize,
    order: usize,
    alpha: f64,
    seed: u64,
    target_alpha: Option<f64>,
    std: Option<f64>,
}

#[derive(Serialize)]
struct IdentifyReport<'a> {
    predictor: &'a PredictorModel,
    error_bound: robustfl::ErrorBound,
    /// Against the configured system, when its dimensions match.
    id_error: Option<f64>,
}

#[derive(Serialize)]
struct DpcReport {
    steps: usize,
    tracking_cost: f64,
    final_state: Vec<f64>,
}

fn default_out_dir() -> PathBuf {
    std::env::var_os("ROBUSTFL_OUT_DIR").map(PathBuf::from).unwrap_or_else(|| PathBuf::from("out"))
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg: ExperimentConfig = match &cli.config {
        Some(path) => io::read_json(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match writeln!(std::io::stdout().lock(), "{text}") {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(Error::Io { path: "<stdout>".into(), source: e }),
        _ => Ok(()),
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        io::ensure_dir(parent)?;
    }
    std::fs::write(path, text).map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

fn run_design(cfg: &ExperimentConfig, args: &DesignArgs) -> Result<()> {
    let m = args.m.unwrap_or(cfg.system.m());
    let t = args.t.unwrap_or(cfg.t);
    let order = args.order.unwrap_or(cfg.system.n() + 1);
    let target = args.target_alpha.or(cfg.target_alpha);
    let std = args.std.unwrap_or(cfg.base_input_std);
    let u = match target {
        Some(a) => design_input(m, t, order, a, cfg.seed)?,
        None => gaussian_input(m, t, std, cfg.seed)?,
    };
    let alpha = pe_check(&u, order)?.alpha;
    let out = args.out.clone().unwrap_or_else(|| default_out_dir().join("u.csv"));
    write_text(&out, &io::signal_to_csv_string(&u, "u"))?;
    let sidecar = DesignSidecar {
        m,
        t,
        order,
        alpha,
        seed: cfg.seed,
        target_alpha: target,
        std: target.is_none().then_some(std),
    };
    io::write_json(out.with_extension("json"), &sidecar)?;
    print_json(&sidecar)
}

fn run_simulate(cfg: &ExperimentConfig, args: &SimulateArgs) -> Result<()> {
    let u = match &args.input {
        Some(path) => io::read_signal_csv(path)?,
        None => experiments::base_input(cfg, cfg.seed)?,
    };
    let x0 = Vector::from_vec(args.x0.clone().unwrap_or_else(|| cfg.data_x0.clone()));
    let noise = NoiseModel { std: args.noise_std.unwrap_or(cfg.noise_std), seed: cfg.seed };
    let data = simulate(&cfg.system, &x0, &u, &noise)?.with_tag("cli");
    let dir = args.out.clone().unwrap_or_else(|| default_out_dir().join("dataset"));
    io::write_dataset(&dir, &data)?;
    print_json(&io::DatasetSidecar {
        n: data.n(),
        m: data.m(),
        t: data.len(),
        noise_std: data.noise_std,
        seed: data.seed,
        sys_tag: data.sys_tag.clone(),
    })
}

fn run_identify(cfg: &ExperimentConfig, args: &IdentifyArgs) -> Result<()> {
    let data = io::read_dataset(&args.data)?;
    let predictor = ls_estimate(&data.u, &data.x)?;
    let bound = error_bound(&data.w, &data.u, &data.x)?;
    let id_error = if cfg.system.n() == predictor.n() && cfg.system.m() == predictor.m() {
        Some(predictor.spectral_error(&cfg.system)?)
    } else {
        None
    };
    if let Some(out) = &args.out {
        io::write_json(out, &predictor)?;
    }
    print_json(&IdentifyReport { predictor: &predictor, error_bound: bound, id_error })
}

fn run_certify(cfg: &ExperimentConfig, args: &CertifyArgs) -> Result<()> {
    let u = io::read_signal_csv(&args.u)?;
    let mut x = io::read_signal_csv(&args.x)?;
    // state files from `simulate` carry the extra final sample
    if x.len() == u.len() + 1 {
        x = x.shift(0, u.len())?;
    }
    let n = args.n.unwrap_or(x.dim());
    let rho = match args.rho {
        Some(r) => r,
        None => estimate_rho0(&cfg.system, &cfg.rho0)?.value,
    };
    print_json(&certify(&u, &x, rho, n)?)
}

fn run_rho0(cfg: &ExperimentConfig, args: &Rho0Args) -> Result<()> {
    let mut opts = cfg.rho0;
    if let Some(s) = args.starts {
        opts.starts = s;
    }
    print_json(&estimate_rho0(&cfg.system, &opts)?)
}

fn run_dpc(cfg: &ExperimentConfig, args: &DpcArgs) -> Result<()> {
    let predictor = match &args.model {
        Some(path) => io::read_json(path)?,
        None => PredictorModel::exact(&cfg.system),
    };
    let reference = Vector::from_vec(args.reference.clone().unwrap_or_else(|| cfg.reference.clone()));
    let x0 = Vector::from_vec(args.x0.clone().unwrap_or_else(|| cfg.x0.clone()));
    let dpc = DpcConfig::new(args.horizon.unwrap_or(cfg.horizon), reference, predictor);
    let steps = args.steps.unwrap_or(cfg.steps);
    let noise = NoiseModel { std: args.noise_std.unwrap_or(cfg.noise_std), seed: cfg.seed };
    let run = receding_horizon(&dpc, &cfg.system, &x0, steps, &noise)?;
    let out = args.out.clone().unwrap_or_else(|| default_out_dir().join("closed_loop.csv"));
    write_text(&out, &io::closed_loop_to_csv_string(&run))?;
    print_json(&DpcReport {
        steps,
        tracking_cost: run.tracking_cost,
        final_state: run.x.column(steps).iter().copied().collect(),
    })
}

fn run_reproduce(mut cfg: ExperimentConfig, args: &ReproduceArgs) -> Result<()> {
    if args.rho.is_some() {
        cfg.rho = args.rho;
    }
    if args.target_alpha.is_some() {
        cfg.target_alpha = args.target_alpha;
    }
    let out = args.out.clone().unwrap_or_else(default_out_dir);
    let report = experiments::reproduce(&cfg, &out, args.batch)?;
    print_json(&report)
}

fn exit_code(e: &Error) -> u8 {
    match e.root() {
        Error::Validation(_)
        | Error::Dimension(_)
        | Error::Structural(_)
        | Error::Parse { .. }
        | Error::Json(_) => 2,
        Error::NotControllable { .. } | Error::Numerical(_) => 3,
        Error::Io { .. } => 4,
        Error::Stage { .. } => unreachable!("root() looks through stage wrappers"),
    }
}

fn run(cli: Cli) -> Result<()> {
    let cfg = load_config(&cli)?;
    match &cli.command {
        Command::Design(a) => run_design(&cfg, a),
        Command::Simulate(a) => run_simulate(&cfg, a),
        Command::Identify(a) => run_identify(&cfg, a),
        Command::Certify(a) => run_certify(&cfg, a),
        Command::Rho0(a) => run_rho0(&cfg, a),
        Command::Dpc(a) => run_dpc(&cfg, a),
        Command::Reproduce(a) => run_reproduce(cfg, a),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
