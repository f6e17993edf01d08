use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use jscc_cli::experiments::{self, Preset};
use jscc_cli::ExperimentConfig;
use jscc_core::kv::KvMap;
use jscc_core::report::write_csv;

/// Analog joint source-channel coding and LQG control over AWGN channels.
#[derive(Debug, Parser)]
#[command(name = "jscc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    params: Params,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Measure codec SDR over an SNR grid.
    Sdr,
    /// Simulate the closed loop and write per-trial summaries.
    Loop,
    /// Evaluate closed-form cost bounds over an SNR grid.
    Bounds,
    /// Run one of the canned experiments.
    Preset {
        #[arg(value_enum)]
        which: PresetArg,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PresetArg {
    Fig3,
    Fig4,
    Fig5,
}

impl From<PresetArg> for Preset {
    fn from(p: PresetArg) -> Self {
        match p {
            PresetArg::Fig3 => Preset::Fig3,
            PresetArg::Fig4 => Preset::Fig4,
            PresetArg::Fig5 => Preset::Fig5,
        }
    }
}

#[derive(Debug, Args)]
struct Params {
    /// Flat `key = value` file; flags given on the command line win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Channel SNR in dB; comma-separated for a sweep.
    #[arg(long = "snr-db", global = true, allow_hyphen_values = true)]
    snr_db: Option<String>,
    #[arg(long, global = true)]
    alpha: Option<f64>,
    #[arg(long, global = true)]
    q: Option<f64>,
    #[arg(long, global = true)]
    r: Option<f64>,
    #[arg(long, global = true)]
    f: Option<f64>,
    /// Driving noise variance.
    #[arg(long, global = true)]
    w: Option<f64>,
    /// Observation noise variance.
    #[arg(long, global = true)]
    v: Option<f64>,
    /// Initial state variance.
    #[arg(long, global = true)]
    p0: Option<f64>,
    /// linear, repetition or spiral.
    #[arg(long, global = true)]
    codec: Option<String>,
    #[arg(long, global = true)]
    lambda: Option<f64>,
    #[arg(long, global = true)]
    delta: Option<f64>,
    #[arg(long, global = true)]
    beta: Option<f64>,
    /// ml or mmse.
    #[arg(long, global = true)]
    decoder: Option<String>,
    #[arg(long, global = true)]
    horizon: Option<usize>,
    #[arg(long, global = true)]
    trials: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Monte Carlo samples per SDR measurement.
    #[arg(long, global = true)]
    samples: Option<usize>,
    /// Rotation frequencies tried per stretch exponent when optimizing a spiral.
    #[arg(long = "delta-count", global = true)]
    delta_count: Option<usize>,
    /// Use the steady-state control gain and average after the burn-in.
    #[arg(long = "steady-state", global = true)]
    steady_state: bool,
    #[arg(long = "burn-in", global = true)]
    burn_in: Option<usize>,
    /// Also simulate the spiral loop in `bounds`.
    #[arg(long, global = true)]
    simulate: bool,
    /// Output CSV path; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Trace CSV for the first trial of `loop`.
    #[arg(long, global = true)]
    trace: Option<PathBuf>,
}

impl Params {
    fn to_kv(&self) -> Result<KvMap> {
        let mut kv = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                KvMap::parse(&text).with_context(|| format!("in {}", path.display()))?
            }
            None => KvMap::new(),
        };
        macro_rules! put {
            ($($key:literal => $field:expr),* $(,)?) => {
                $(if let Some(v) = &$field {
                    kv.set($key, v);
                })*
            };
        }
        put!(
            "snr-db" => self.snr_db,
            "alpha" => self.alpha,
            "q" => self.q,
            "r" => self.r,
            "f" => self.f,
            "w" => self.w,
            "v" => self.v,
            "p0" => self.p0,
            "codec" => self.codec,
            "lambda" => self.lambda,
            "delta" => self.delta,
            "beta" => self.beta,
            "decoder" => self.decoder,
            "horizon" => self.horizon,
            "trials" => self.trials,
            "seed" => self.seed,
            "samples" => self.samples,
            "delta-count" => self.delta_count,
            "burn-in" => self.burn_in,
        );
        if self.steady_state {
            kv.set("steady-state", true);
        }
        if self.simulate {
            kv.set("simulate", true);
        }
        if let Some(p) = &self.out {
            kv.set("out", p.display());
        }
        if let Some(p) = &self.trace {
            kv.set("trace", p.display());
        }
        Ok(kv)
    }
}

fn emit<R: serde::Serialize>(path: Option<&Path>, rows: &[R]) -> Result<()> {
    match path {
        Some(p) => {
            let file = File::create(p).with_context(|| format!("creating {}", p.display()))?;
            let mut w = BufWriter::new(file);
            write_csv(&mut w, rows)?;
            w.flush()?;
        }
        None => {
            let stdout = io::stdout();
            write_csv(stdout.lock(), rows)?;
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let kv = cli.params.to_kv()?;
    let base = match &cli.command {
        Command::Preset { which } => Preset::from(*which).defaults(),
        _ => ExperimentConfig::default(),
    };
    let cfg = base.apply(&kv)?;
    cfg.validate()?;
    let out = cfg.out.as_deref();
    match cli.command {
        Command::Sdr => emit(out, &experiments::run_sdr(&cfg)?),
        Command::Loop => {
            let (summary, trace) = experiments::run_loop(&cfg)?;
            if let (Some(path), Some(rows)) = (cfg.trace.as_deref(), trace) {
                emit(Some(path), &rows)?;
            }
            emit(out, &summary)
        }
        Command::Bounds => emit(out, &experiments::run_bounds(&cfg)?),
        Command::Preset { which } => match Preset::from(which) {
            Preset::Fig3 => emit(out, &experiments::preset_fig3(&cfg)?),
            Preset::Fig4 => emit(out, &experiments::preset_fig4(&cfg)?),
            Preset::Fig5 => emit(out, &experiments::run_bounds(&cfg)?),
        },
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
