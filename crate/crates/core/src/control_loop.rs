//! Closed-loop simulation: plant, observer-side Kalman filter, analog codec
//! over the channel, receiver-side linear estimate and LQG control.
//!
//! All gains and variances are deterministic and precomputed in a
//! [`LoopSchedule`], which both ends of the link can build offline.

use rayon::prelude::*;

use crate::channel::ChannelModel;
use crate::codecs::Codec;
use crate::error::{Error, Result};
use crate::rng::{RandomStream, SeedTree, StreamKind};
use crate::scalar::Scalar;

/// Source powers below this are treated as zero: nothing is sent that step.
pub const MIN_SOURCE_POWER: f64 = 1e-12;
/// `|x_t|` above this marks the episode as diverged.
pub const DIVERGENCE_GUARD: f64 = 1e12;
pub const DEFAULT_BURN_IN: usize = 1000;
const FIXED_POINT_MAX_ITERS: usize = 10_000_000;

/// Scalar plant `x' = alpha x + w + u`, observed as `y = x + v`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantParams<T> {
    pub alpha: T,
    pub w_var: T,
    pub v_var: T,
    /// Variance of the initial state.
    pub p0: T,
}

impl<T: Scalar> PlantParams<T> {
    pub fn new(alpha: T, w_var: T, v_var: T, p0: T) -> Result<Self> {
        let plant = Self { alpha, w_var, v_var, p0 };
        plant.validate()?;
        Ok(plant)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > T::one() && self.alpha.is_finite()) {
            return Err(Error::InvalidParameter(format!("alpha must exceed 1, got {}", self.alpha)));
        }
        if !(self.w_var >= T::zero() && self.v_var >= T::zero() && self.w_var.is_finite()) {
            return Err(Error::InvalidParameter("noise variances must be non-negative".into()));
        }
        if !(self.p0 > T::zero() && self.p0.is_finite()) {
            return Err(Error::InvalidParameter(format!("p0 must be positive, got {}", self.p0)));
        }
        Ok(())
    }
}

/// Quadratic cost weights and horizon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LqgWeights<T> {
    pub q: T,
    pub r: T,
    pub f: T,
    pub horizon: usize,
}

impl<T: Scalar> LqgWeights<T> {
    pub fn new(q: T, r: T, f: T, horizon: usize) -> Result<Self> {
        let w = Self { q, r, f, horizon };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |x: T| x >= T::zero() && x.is_finite();
        if !(ok(self.q) && ok(self.r) && ok(self.f)) {
            return Err(Error::InvalidParameter("cost weights must be non-negative".into()));
        }
        if self.q == T::zero() && self.f == T::zero() {
            return Err(Error::InvalidParameter("q and f cannot both be zero".into()));
        }
        if self.horizon == 0 {
            return Err(Error::InvalidParameter("horizon must be positive".into()));
        }
        Ok(())
    }
}

/// Backward Riccati recursion for the control gains.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlGains<T> {
    /// `L_1..L_T`.
    pub gains: Vec<T>,
    /// `S_1..S_{T+1}`, with `S_{T+1} = F`.
    pub cost_to_go: Vec<T>,
    /// Fixed point of the recursion, found by iterating it.
    pub steady_cost_to_go: T,
    pub steady_gain: T,
}

#[inline]
fn riccati_step<T: Scalar>(alpha: T, q: T, r: T, next: T, step: usize) -> Result<(T, T)> {
    let denom = next + r;
    if denom == T::zero() {
        return Err(Error::DegenerateWeights(step));
    }
    let gain = alpha * next / denom;
    let s = alpha * alpha * r * next / denom + q;
    Ok((s, gain))
}

/// Iterates `x <- step(x)` until the relative change is at rounding level.
fn iterate_fixed_point<T: Scalar>(mut x: T, mut step: impl FnMut(T) -> Result<T>) -> Result<T> {
    let tol = T::epsilon() * T::of(4.0);
    for _ in 0..FIXED_POINT_MAX_ITERS {
        let next = step(x)?;
        if (next - x).abs() <= tol * next.abs().max(T::min_positive_value()) {
            return Ok(next);
        }
        x = next;
    }
    Ok(x)
}

pub fn riccati_control<T: Scalar>(weights: &LqgWeights<T>, alpha: T) -> Result<ControlGains<T>> {
    weights.validate()?;
    let t_len = weights.horizon;
    let mut cost_to_go = vec![T::zero(); t_len + 1];
    let mut gains = vec![T::zero(); t_len];
    cost_to_go[t_len] = weights.f;
    for t in (0..t_len).rev() {
        let (s, l) = riccati_step(alpha, weights.q, weights.r, cost_to_go[t + 1], t + 1)?;
        cost_to_go[t] = s;
        gains[t] = l;
    }
    let start = weights.q.max(weights.f);
    let steady = iterate_fixed_point(start, |s| riccati_step(alpha, weights.q, weights.r, s, 0).map(|x| x.0))?;
    let (_, steady_gain) = riccati_step(alpha, weights.q, weights.r, steady, 0)?;
    Ok(ControlGains { gains, cost_to_go, steady_cost_to_go: steady, steady_gain })
}

/// Observer-side Kalman filter gains and error variances.
#[derive(Debug, Clone, PartialEq)]
pub struct KalmanSchedule<T> {
    /// `K_1..K_T`.
    pub gains: Vec<T>,
    /// `P_{t|t-1}` for `t = 1..T`.
    pub p_pred: Vec<T>,
    /// `P_{t|t}` for `t = 1..T`.
    pub p_filt: Vec<T>,
    /// Fixed point of the prediction-variance recursion, found by iterating it.
    pub steady_p_pred: T,
}

#[inline]
fn kalman_step<T: Scalar>(plant: &PlantParams<T>, p_pred: T) -> (T, T, T) {
    let denom = p_pred + plant.v_var;
    // Noiseless and error-free: nothing to correct.
    let k = if denom > T::zero() { p_pred / denom } else { T::one() };
    let p_filt = k * plant.v_var;
    let next = plant.alpha * plant.alpha * p_pred * (T::one() - k) + plant.w_var;
    (k, p_filt, next)
}

pub fn kalman_observer<T: Scalar>(plant: &PlantParams<T>, horizon: usize) -> KalmanSchedule<T> {
    let mut gains = Vec::with_capacity(horizon);
    let mut p_pred = Vec::with_capacity(horizon);
    let mut p_filt = Vec::with_capacity(horizon);
    let mut p = plant.p0;
    for _ in 0..horizon {
        let (k, pf, next) = kalman_step(plant, p);
        gains.push(k);
        p_pred.push(p);
        p_filt.push(pf);
        p = next;
    }
    let steady_p_pred =
        iterate_fixed_point(plant.p0.max(plant.w_var), |p| Ok(kalman_step(plant, p).2)).unwrap_or(p);
    KalmanSchedule { gains, p_pred, p_filt, steady_p_pred }
}

/// Receiver-side error variances and the power of the transmitted innovation.
#[derive(Debug, Clone, PartialEq)]
pub struct ReceiverSchedule<T> {
    /// `P^r_{t|t-1}`.
    pub p_pred: Vec<T>,
    /// `P^r_{t|t}`.
    pub p_filt: Vec<T>,
    /// `P^r_{t|t-1} - P^t_{t|t}`, clamped at zero.
    pub source_power: Vec<T>,
}

pub fn receiver_schedule<T: Scalar>(plant: &PlantParams<T>, sdr0: T, p_enc_filt: &[T]) -> Result<ReceiverSchedule<T>> {
    if !(sdr0 > T::zero()) {
        return Err(Error::InvalidParameter(format!("sdr0 must be positive, got {sdr0}")));
    }
    let n = p_enc_filt.len();
    let mut p_pred = Vec::with_capacity(n);
    let mut p_filt = Vec::with_capacity(n);
    let mut source_power = Vec::with_capacity(n);
    let a2 = plant.alpha * plant.alpha;
    let tol = T::of(1e-9);
    let mut p = plant.p0;
    for (t, &pe) in p_enc_filt.iter().enumerate() {
        let mut sp = p - pe;
        if sp < T::zero() {
            if sp < -tol * p.max(T::one()) {
                return Err(Error::NegativeSourcePower { step: t + 1, power: sp.as_f64() });
            }
            sp = T::zero();
        }
        let pf = if sdr0.is_infinite() { pe } else { (p + sdr0 * pe) / (T::one() + sdr0) };
        p_pred.push(p);
        p_filt.push(pf);
        source_power.push(sp);
        p = a2 * pf + plant.w_var;
    }
    Ok(ReceiverSchedule { p_pred, p_filt, source_power })
}

/// Everything both ends need to run the loop for `horizon` steps.
#[derive(Debug, Clone, PartialEq)]
pub struct LoopSchedule<T> {
    pub horizon: usize,
    pub sdr0: T,
    /// Constant steady-state control gain instead of the finite-horizon recursion.
    pub steady: bool,
    pub control_gains: Vec<T>,
    pub kalman_gains: Vec<T>,
    pub p_enc_pred: Vec<T>,
    pub p_enc_filt: Vec<T>,
    pub p_dec_pred: Vec<T>,
    pub p_dec_filt: Vec<T>,
    pub source_power: Vec<T>,
}

impl<T: Scalar> LoopSchedule<T> {
    fn build(plant: &PlantParams<T>, sdr0: T, control_gains: Vec<T>, steady: bool) -> Result<Self> {
        plant.validate()?;
        let horizon = control_gains.len();
        // The transmitter inverts u_t = -L_t x^r_{t|t} for every step it must track.
        if let Some(t) = control_gains[..horizon.saturating_sub(1)].iter().position(|&l| l == T::zero()) {
            return Err(Error::ZeroControlGain(t + 1));
        }
        let kalman = kalman_observer(plant, horizon);
        let rx = receiver_schedule(plant, sdr0, &kalman.p_filt)?;
        Ok(Self {
            horizon,
            sdr0,
            steady,
            control_gains,
            kalman_gains: kalman.gains,
            p_enc_pred: kalman.p_pred,
            p_enc_filt: kalman.p_filt,
            p_dec_pred: rx.p_pred,
            p_dec_filt: rx.p_filt,
            source_power: rx.source_power,
        })
    }

    /// Finite-horizon schedule with time-varying gains ending in `S_{T+1} = F`.
    pub fn finite(plant: &PlantParams<T>, weights: &LqgWeights<T>, sdr0: T) -> Result<Self> {
        let gains = riccati_control(weights, plant.alpha)?;
        Self::build(plant, sdr0, gains.gains, false)
    }

    /// Infinite-horizon schedule over `steps` steps with the steady-state control gain.
    pub fn steady_state(plant: &PlantParams<T>, weights: &LqgWeights<T>, sdr0: T, steps: usize) -> Result<Self> {
        let w = LqgWeights { horizon: 1, ..*weights };
        let gains = riccati_control(&w, plant.alpha)?;
        Self::build(plant, sdr0, vec![gains.steady_gain; steps], true)
    }
}

/// Independent noise sources for one episode.
#[derive(Debug, Clone)]
pub struct EpisodeStreams {
    pub initial: RandomStream,
    pub plant: RandomStream,
    pub observation: RandomStream,
    pub channel: RandomStream,
}

impl EpisodeStreams {
    pub fn new(seeds: &SeedTree, episode: u64) -> Self {
        Self {
            initial: seeds.stream(StreamKind::InitialState, episode),
            plant: seeds.stream(StreamKind::PlantNoise, episode),
            observation: seeds.stream(StreamKind::ObservationNoise, episode),
            channel: seeds.stream(StreamKind::ChannelNoise, episode),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EpisodeOptions {
    /// Steps excluded from the average for steady-state schedules.
    pub burn_in: usize,
    pub record_trace: bool,
}


/// One simulated step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow<T> {
    pub t: usize,
    pub x: T,
    pub y: T,
    pub u: T,
    pub s: T,
    pub s_hat: T,
    pub x_hat_enc: T,
    pub x_hat_dec: T,
    pub stage_cost: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeResult<T> {
    /// Average stage cost: with terminal term for finite horizons, after burn-in for steady runs.
    pub avg_stage_cost: T,
    /// `Q x_t^2 + R u_t^2` for every simulated step.
    pub stage_costs: Vec<T>,
    pub terminal_cost: T,
    pub trace: Vec<TraceRow<T>>,
    pub diverged: bool,
    pub steps: usize,
    /// Largest gap between the receiver's prediction and the transmitter's copy of it.
    pub tracking_mismatch: T,
}

impl<T: Scalar> EpisodeResult<T> {
    /// `(1/t) * sum_{k<=t} stage cost` for every `t`.
    pub fn running_average(&self) -> Vec<T> {
        let mut acc = T::zero();
        self.stage_costs
            .iter()
            .enumerate()
            .map(|(i, &c)| {
                acc = acc + c;
                acc / T::of_usize(i + 1)
            })
            .collect()
    }
}

/// Simulates one episode of the scheme for `schedule.horizon` steps.
pub fn run_episode<T: Scalar>(
    plant: &PlantParams<T>,
    weights: &LqgWeights<T>,
    codec: &Codec<T>,
    ch: &ChannelModel<T>,
    schedule: &LoopSchedule<T>,
    streams: &mut EpisodeStreams,
    opts: &EpisodeOptions,
) -> Result<EpisodeResult<T>> {
    plant.validate()?;
    weights.validate()?;
    let codec_sdr0 = codec.spec().loop_sdr0()?;
    if codec_sdr0 != schedule.sdr0 {
        return Err(Error::ScheduleMismatch { schedule: schedule.sdr0.as_f64(), codec: codec_sdr0.as_f64() });
    }
    if schedule.steady && opts.burn_in >= schedule.horizon {
        return Err(Error::InvalidParameter("burn-in must be shorter than the run".into()));
    }

    let alpha = plant.alpha;
    let (w_std, v_std) = (plant.w_var.sqrt(), plant.v_var.sqrt());
    let rx_gain = if schedule.sdr0.is_infinite() { T::one() } else { schedule.sdr0 / (T::one() + schedule.sdr0) };
    let guard = T::of(DIVERGENCE_GUARD);
    let min_power = T::of(MIN_SOURCE_POWER);

    let mut x = plant.p0.sqrt() * T::standard_normal(&mut streams.initial);
    let (mut x_enc, mut u_prev, mut l_prev) = (T::zero(), T::zero(), T::one());
    let mut stage_costs = Vec::with_capacity(schedule.horizon);
    let mut trace = Vec::new();
    let mut mismatch = T::zero();
    let mut diverged = false;
    // Both ends rebuild the previous receiver estimate from the applied control,
    // so they run identical arithmetic on identical inputs.
    let recall = |u_prev: T, l_prev: T| -u_prev / l_prev;

    for t in 0..schedule.horizon {
        let y = x + v_std * T::standard_normal(&mut streams.observation);

        // transmitter
        let enc_pred = alpha * x_enc + u_prev;
        x_enc = enc_pred + schedule.kalman_gains[t] * (y - enc_pred);
        let dec_pred_tx = alpha * recall(u_prev, l_prev) + u_prev;
        let s = x_enc - dec_pred_tx;

        // receiver
        let dec_pred = alpha * recall(u_prev, l_prev) + u_prev;
        let power = schedule.source_power[t];
        let s_hat = if power > min_power {
            let scale = power.sqrt();
            let b = ch.transmit(&codec.encode(s / scale), &mut streams.channel);
            scale * codec.estimate(&b, ch)?.value
        } else {
            T::zero()
        };
        let x_dec = dec_pred + rx_gain * s_hat;
        let l = schedule.control_gains[t];
        let u = -l * x_dec;
        mismatch = mismatch.max((dec_pred_tx - dec_pred).abs());

        let stage = weights.q * x * x + weights.r * u * u;
        stage_costs.push(stage);
        if opts.record_trace {
            trace.push(TraceRow { t: t + 1, x, y, u, s, s_hat, x_hat_enc: x_enc, x_hat_dec: x_dec, stage_cost: stage });
        }

        x = alpha * x + w_std * T::standard_normal(&mut streams.plant) + u;
        u_prev = u;
        l_prev = l;
        if !(x.abs() <= guard) {
            diverged = true;
            break;
        }
    }

    let steps = stage_costs.len();
    let terminal_cost = if diverged || schedule.steady { T::zero() } else { weights.f * x * x };
    let avg_stage_cost = if schedule.steady {
        let kept = &stage_costs[opts.burn_in.min(steps)..];
        if kept.is_empty() {
            T::infinity()
        } else {
            kept.iter().fold(T::zero(), |a, &c| a + c) / T::of_usize(kept.len())
        }
    } else {
        (stage_costs.iter().fold(T::zero(), |a, &c| a + c) + terminal_cost) / T::of_usize(steps.max(1))
    };
    Ok(EpisodeResult {
        avg_stage_cost,
        stage_costs,
        terminal_cost,
        trace,
        diverged,
        steps,
        tracking_mismatch: mismatch,
    })
}

/// Runs `trials` independent episodes; episode `i` uses streams `i` of `seeds`.
#[allow(clippy::too_many_arguments)]
pub fn run_ensemble<T: Scalar>(
    plant: &PlantParams<T>,
    weights: &LqgWeights<T>,
    codec: &Codec<T>,
    ch: &ChannelModel<T>,
    schedule: &LoopSchedule<T>,
    seeds: &SeedTree,
    trials: usize,
    opts: &EpisodeOptions,
) -> Result<Vec<EpisodeResult<T>>> {
    (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut streams = EpisodeStreams::new(seeds, i as u64);
            run_episode(plant, weights, codec, ch, schedule, &mut streams, opts)
        })
        .collect()
}
