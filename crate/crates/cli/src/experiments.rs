//! Subcommand and preset drivers. Each returns CSV rows; writing is left to the caller.

use anyhow::{bail, ensure, Context, Result};
use jscc_core::bounds::{achievable_cost, cost_lower_bound, Cost};
use jscc_core::codecs::MIN_CALIBRATION_SAMPLES;
use jscc_core::control_loop::{run_ensemble, EpisodeOptions, EpisodeResult, LoopSchedule, LqgWeights, PlantParams};
use jscc_core::report::{BoundsRow, LoopEcho, RunningCostRow, SdrRow, SummaryRow, TraceCsvRow};
use jscc_core::sdr_lab::{default_delta_grid, measure_sdr, opta_sdr, optimize_spiral, Objective, SpiralSearch, MIN_MEASURE_SAMPLES};
use jscc_core::stats::mean_ci;
use jscc_core::{calibrate, ChannelModel, Codec, CodecSpec, Family, SeedTree, StreamKind};

use crate::config::ExperimentConfig;

/// Spiral amplitude exponent used in the loop when none is given.
pub const BOUNDED_BETA: f64 = 1.2;

/// Which preset to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Fig3,
    Fig4,
    Fig5,
}

impl Preset {
    /// Defaults the preset starts from before the config file and flags apply.
    pub fn defaults(self) -> ExperimentConfig {
        let base = ExperimentConfig::default();
        match self {
            Preset::Fig3 => ExperimentConfig {
                snr_db: vec![0.0, 5.0, 10.0, 13.0, 15.0, 20.0, 25.0],
                samples: 200_000,
                ..base
            },
            Preset::Fig4 => ExperimentConfig {
                snr_db: vec![10.0 * 2f64.log10(), 10.0 * 4f64.log10()],
                horizon: 10_000,
                trials: 100,
                ..base
            },
            Preset::Fig5 => ExperimentConfig {
                snr_db: (0..=10).map(|i| 2.0 * i as f64).collect(),
                alpha: 3.0,
                q: 1.0,
                r: 0.0,
                f: 1.0,
                w: 1.0,
                v: 0.0,
                codec: Family::Spiral,
                beta: Some(BOUNDED_BETA),
                horizon: 20_000,
                trials: 4,
                samples: 100_000,
                simulate: true,
                ..base
            },
        }
    }
}

fn plant(cfg: &ExperimentConfig) -> Result<PlantParams<f64>> {
    Ok(PlantParams::new(cfg.alpha, cfg.w, cfg.v, cfg.p0)?)
}

fn weights(cfg: &ExperimentConfig) -> Result<LqgWeights<f64>> {
    Ok(LqgWeights::new(cfg.q, cfg.r, cfg.f, cfg.horizon)?)
}

fn channel(snr_db: f64) -> Result<ChannelModel<f64>> {
    ChannelModel::from_db(snr_db).with_context(|| format!("SNR {snr_db} dB"))
}

/// Calibrated codec of the configured family at `ch`'s SNR.
///
/// Spirals with both `lambda` and `delta` fixed are calibrated as given;
/// otherwise the missing parameters are searched.
pub fn design_codec(
    cfg: &ExperimentConfig,
    family: Family,
    beta: f64,
    objective: Objective,
    ch: &ChannelModel<f64>,
    seeds: &SeedTree,
) -> Result<CodecSpec<f64>> {
    let mut cal = seeds.stream(StreamKind::Calibration, 0);
    let spec = match family {
        Family::Linear => CodecSpec::linear(),
        Family::Repetition => CodecSpec::repetition(),
        Family::Spiral => match (cfg.lambda, cfg.delta) {
            (Some(l), Some(d)) => CodecSpec::spiral(l, d, beta)?,
            _ => {
                let search = SpiralSearch {
                    lambdas: cfg.lambda.map_or_else(|| vec![0.5, 1.0], |l| vec![l]),
                    deltas: cfg.delta.map_or_else(|| default_delta_grid(ch.snr(), cfg.delta_count), |d| vec![d]),
                    beta,
                    decoder: cfg.decoder,
                    calibration_samples: MIN_CALIBRATION_SAMPLES,
                    measure_samples: (cfg.samples / 10).max(MIN_MEASURE_SAMPLES),
                    objective,
                };
                return Ok(optimize_spiral(ch, &search, &seeds.child(0))?.0);
            }
        },
    };
    Ok(calibrate(&spec.with_decoder(cfg.decoder), ch, MIN_CALIBRATION_SAMPLES, &mut cal)?)
}

fn sdr_row(cfg: &ExperimentConfig, family: Family, beta: f64, snr_db: f64, seeds: &SeedTree) -> Result<SdrRow> {
    let ch = channel(snr_db)?;
    let spec = design_codec(cfg, family, beta, Objective::MeanSdr, &ch, &seeds.child(0))?;
    let report = measure_sdr(&Codec::new(spec)?, &ch, cfg.samples, &seeds.child(1))?;
    Ok(SdrRow::new(&spec, &report, cfg.seed))
}

/// Measured SDR of the configured codec at every SNR.
pub fn run_sdr(cfg: &ExperimentConfig) -> Result<Vec<SdrRow>> {
    cfg.validate()?;
    let root = SeedTree::new(cfg.seed);
    let beta = cfg.beta.unwrap_or(1.0);
    cfg.snr_db
        .iter()
        .enumerate()
        .map(|(i, &snr_db)| sdr_row(cfg, cfg.codec, beta, snr_db, &root.child(i as u64)))
        .collect()
}

/// Linear, repetition, best spiral and best bounded spiral at every SNR.
pub fn preset_fig3(cfg: &ExperimentConfig) -> Result<Vec<SdrRow>> {
    cfg.validate()?;
    let root = SeedTree::new(cfg.seed);
    let bounded = cfg.beta.unwrap_or(BOUNDED_BETA);
    ensure!(bounded > 1.0, "fig3 needs beta > 1 for the bounded spiral, got {bounded}");
    let variants = [(Family::Linear, 1.0), (Family::Repetition, 1.0), (Family::Spiral, 1.0), (Family::Spiral, bounded)];
    let spiral_cfg = ExperimentConfig { codec: Family::Spiral, ..cfg.clone() };
    let mut rows = Vec::new();
    for (i, &snr_db) in cfg.snr_db.iter().enumerate() {
        let point = root.child(i as u64);
        for (j, &(family, beta)) in variants.iter().enumerate() {
            let c = if family == Family::Spiral { &spiral_cfg } else { cfg };
            rows.push(sdr_row(c, family, beta, snr_db, &point.child(j as u64))?);
        }
    }
    Ok(rows)
}

/// Codec and schedule for a loop run at one SNR.
pub struct LoopSetup {
    pub plant: PlantParams<f64>,
    pub weights: LqgWeights<f64>,
    pub ch: ChannelModel<f64>,
    pub codec: Codec<f64>,
    pub schedule: LoopSchedule<f64>,
    pub echo: LoopEcho,
}

impl LoopSetup {
    pub fn new(cfg: &ExperimentConfig, snr_db: f64, steady: bool, seeds: &SeedTree) -> Result<Self> {
        let plant = plant(cfg)?;
        let weights = weights(cfg)?;
        let ch = channel(snr_db)?;
        let beta = cfg.beta.unwrap_or(BOUNDED_BETA);
        let spec = design_codec(cfg, cfg.codec, beta, Objective::WorstCaseSdr, &ch, seeds)?;
        let sdr0 = spec.loop_sdr0()?;
        let schedule = if steady {
            LoopSchedule::steady_state(&plant, &weights, sdr0, cfg.horizon)?
        } else {
            LoopSchedule::finite(&plant, &weights, sdr0)?
        };
        let echo = LoopEcho {
            snr_db,
            alpha: cfg.alpha,
            q: cfg.q,
            r: cfg.r,
            f: cfg.f,
            w: cfg.w,
            v: cfg.v,
            p0: cfg.p0,
            codec: spec.family.to_string(),
            decoder: spec.decoder.to_string(),
            sdr0,
            horizon: cfg.horizon,
            seed: cfg.seed,
        };
        Ok(Self { plant, weights, ch, codec: Codec::new(spec)?, schedule, echo })
    }

    pub fn run(&self, seeds: &SeedTree, trials: usize, opts: &EpisodeOptions) -> Result<Vec<EpisodeResult<f64>>> {
        Ok(run_ensemble(&self.plant, &self.weights, &self.codec, &self.ch, &self.schedule, seeds, trials, opts)?)
    }

    /// `(achievable, lower bound)` at this setup's SNR and sdr0.
    pub fn bounds(&self) -> (Cost<f64>, Cost<f64>) {
        let kc = self.codec.kc();
        (
            achievable_cost(&self.plant, &self.weights, self.echo.sdr0),
            cost_lower_bound(&self.plant, &self.weights, self.ch.snr(), kc, 1),
        )
    }
}

fn episode_cost(e: &EpisodeResult<f64>) -> Cost<f64> {
    if e.diverged {
        Cost::Diverges
    } else {
        Cost::Finite(e.avg_stage_cost)
    }
}

/// Summary rows for every SNR and trial, plus the first trial's trace when requested.
pub fn run_loop(cfg: &ExperimentConfig) -> Result<(Vec<SummaryRow>, Option<Vec<TraceCsvRow>>)> {
    cfg.validate()?;
    if cfg.trace.is_some() && cfg.snr_db.len() > 1 {
        bail!("trace output needs a single SNR, got {}", cfg.snr_db.len());
    }
    let root = SeedTree::new(cfg.seed);
    let opts = EpisodeOptions {
        burn_in: if cfg.steady_state { cfg.burn_in } else { 0 },
        record_trace: cfg.trace.is_some(),
    };
    let mut rows = Vec::new();
    let mut trace = None;
    for (i, &snr_db) in cfg.snr_db.iter().enumerate() {
        let point = root.child(i as u64);
        let setup = LoopSetup::new(cfg, snr_db, cfg.steady_state, &point.child(0))?;
        let results = setup.run(&point.child(1), cfg.trials, &opts)?;
        let bounds = setup.bounds();
        for (trial, e) in results.iter().enumerate() {
            rows.push(SummaryRow::new(trial, episode_cost(e), e.diverged, e.steps, bounds, &setup.echo));
        }
        if opts.record_trace {
            trace = Some(results[0].trace.iter().map(TraceCsvRow::from).collect());
        }
    }
    Ok((rows, trace))
}

/// Running average stage cost over time, for one sample path and the ensemble.
pub fn preset_fig4(cfg: &ExperimentConfig) -> Result<Vec<RunningCostRow>> {
    cfg.validate()?;
    let root = SeedTree::new(cfg.seed);
    let opts = EpisodeOptions::default();
    let mut rows = Vec::new();
    for (i, &snr_db) in cfg.snr_db.iter().enumerate() {
        let point = root.child(i as u64);
        let setup = LoopSetup::new(cfg, snr_db, true, &point.child(0))?;
        let results = setup.run(&point.child(1), cfg.trials, &opts)?;
        let averages: Vec<Vec<f64>> = results.iter().map(EpisodeResult::running_average).collect();
        let j_closed_form = setup.bounds().0;
        for t in 0..cfg.horizon {
            let live: Vec<f64> = averages.iter().filter_map(|a| a.get(t).copied()).collect();
            rows.push(RunningCostRow {
                snr_db,
                t: t + 1,
                single_path: averages[0].get(t).copied(),
                ensemble: (!live.is_empty()).then(|| live.iter().sum::<f64>() / live.len() as f64),
                live_trials: live.len(),
                j_closed_form,
            });
        }
    }
    Ok(rows)
}

/// Closed-form bounds at every SNR; spiral bound and simulated loop when the codec is a spiral.
pub fn run_bounds(cfg: &ExperimentConfig) -> Result<Vec<BoundsRow>> {
    cfg.validate()?;
    let plant = plant(cfg)?;
    let weights = weights(cfg)?;
    let kc = cfg.kc();
    let root = SeedTree::new(cfg.seed);
    let opts = EpisodeOptions { burn_in: cfg.burn_in, record_trace: false };
    if cfg.simulate {
        ensure!(cfg.burn_in < cfg.horizon, "burn-in ({}) must be shorter than horizon ({})", cfg.burn_in, cfg.horizon);
    }
    let mut rows = Vec::new();
    for (i, &snr_db) in cfg.snr_db.iter().enumerate() {
        let snr = channel(snr_db)?.snr();
        let linear = kc as f64 * snr;
        let mut row = BoundsRow {
            snr_db,
            j_lower: cost_lower_bound(&plant, &weights, snr, kc, 1),
            j_upper_linear: achievable_cost(&plant, &weights, linear),
            j_upper_spiral: None,
            alpha_max_opta: (1.0 + opta_sdr(snr, kc, 1)).sqrt(),
            alpha_max_linear: (1.0 + linear).sqrt(),
            alpha_max_spiral: None,
            sdr0_spiral: None,
            j_sim_spiral: None,
            j_sim_ci: None,
            alpha: cfg.alpha,
            q: cfg.q,
            r: cfg.r,
            w: cfg.w,
            v: cfg.v,
            kc,
        };
        if cfg.codec == Family::Spiral {
            let point = root.child(i as u64);
            let setup = LoopSetup::new(cfg, snr_db, true, &point.child(0))?;
            let sdr0 = setup.echo.sdr0;
            row.sdr0_spiral = Some(sdr0);
            row.j_upper_spiral = Some(setup.bounds().0);
            row.alpha_max_spiral = Some((1.0 + sdr0).sqrt());
            if cfg.simulate {
                let results = setup.run(&point.child(1), cfg.trials, &opts)?;
                if results.iter().any(|e| e.diverged) {
                    row.j_sim_spiral = Some(Cost::Diverges);
                } else {
                    let costs: Vec<f64> = results.iter().map(|e| e.avg_stage_cost).collect();
                    let mean = costs.iter().sum::<f64>() / costs.len() as f64;
                    row.j_sim_spiral = Some(Cost::Finite(mean));
                    row.j_sim_ci = mean_ci(&costs).map(|(_, h)| h);
                }
            }
        }
        rows.push(row);
    }
    Ok(rows)
}
