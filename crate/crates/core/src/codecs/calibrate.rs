//! Power normalization, CUBE factor and SDR estimation.

use rand::Rng;

use crate::channel::ChannelModel;
use crate::codecs::decode::Codec;
use crate::codecs::spec::{CodecSpec, Decoder, Family};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const MIN_CALIBRATION_SAMPLES: usize = 100_000;

/// Source magnitudes at which the worst-case conditional distortion is evaluated.
pub const WORST_CASE_MAGNITUDES: [f64; 8] = [0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0];

/// `E|s|^p` for a standard normal `s`: `2^(p/2) Gamma((p+1)/2) / sqrt(pi)`.
pub fn gaussian_abs_moment(p: f64) -> Result<f64> {
    if !(p > -1.0) {
        return Err(Error::NonFiniteMoment(p));
    }
    let m = 2f64.powf(p / 2.0) * libm::tgamma((p + 1.0) / 2.0) / std::f64::consts::PI.sqrt();
    if m.is_finite() {
        Ok(m)
    } else {
        Err(Error::NonFiniteMoment(p))
    }
}

/// Power scale giving unit average power per channel use for a unit-variance Gaussian source.
pub fn power_scale<T: Scalar>(spec: &CodecSpec<T>) -> Result<T> {
    let c = match spec.family {
        // E[(c s)^2] = c^2 per use
        Family::Linear | Family::Repetition => 1.0,
        Family::Spiral => {
            let moment = gaussian_abs_moment(2.0 * spec.norm_exponent().as_f64())?;
            (spec.kc as f64 / moment).sqrt()
        }
    };
    Ok(T::of(c))
}

/// Sums over a calibration sample.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    ss: f64,
    s_est: f64,
    est_est: f64,
}

impl Moments {
    fn push(&mut self, s: f64, est: f64) {
        self.ss += s * s;
        self.s_est += s * est;
        self.est_est += est * est;
    }

    fn cube_factor(&self) -> f64 {
        self.ss / self.s_est
    }

    /// `E[(s - k est)^2]` (unnormalized) for scale `k`.
    fn distortion_sum(&self, k: f64) -> f64 {
        self.ss - 2.0 * k * self.s_est + k * k * self.est_est
    }
}

/// Fills in power scale, CUBE factor and mean unbiased SDR at the channel's SNR.
///
/// Linear and repetition codes get their exact values (`sdr0 = kc * snr`) and
/// draw nothing from `rng`; spirals are measured.
///
/// `sdr0` is the in-sample `E[s^2] / E[(s - k s_B)^2]` with `k = E[s^2] / E[s s_B]`.
/// Distortion-bounded spirals (`beta > 1`) also get `sdr0_worst`, the smallest
/// conditional SDR over [`WORST_CASE_MAGNITUDES`] using `n / 8` draws per magnitude.
pub fn calibrate<T, R>(spec: &CodecSpec<T>, ch: &ChannelModel<T>, n: usize, rng: &mut R) -> Result<CodecSpec<T>>
where
    T: Scalar,
    R: Rng + ?Sized,
{
    if n < MIN_CALIBRATION_SAMPLES {
        return Err(Error::TooFewSamples { min: MIN_CALIBRATION_SAMPLES, got: n });
    }
    spec.validate()?;
    let mut out = *spec;
    out.power_scale = Some(power_scale(spec)?);
    out.cube_factor = None;
    out.sdr0 = None;
    out.sdr0_worst = None;
    out.design_snr = Some(ch.snr());
    if spec.family != Family::Spiral {
        let gamma = T::of_usize(spec.kc) * ch.snr();
        out.cube_factor = Some(match spec.decoder {
            Decoder::Ml => T::one(),
            Decoder::Mmse if gamma.is_infinite() => T::one(),
            Decoder::Mmse => (T::one() + gamma) / gamma,
        });
        out.sdr0 = Some(gamma);
        return Ok(out);
    }
    let codec = Codec::new(out)?;

    let mut m = Moments::default();
    for _ in 0..n {
        let s = T::standard_normal(rng);
        let b = ch.transmit(&codec.encode(s), rng);
        let est = codec.decode(&b, ch)?;
        m.push(s.as_f64(), est.value.as_f64());
    }
    let k = m.cube_factor();
    if !(k.is_finite() && k > 0.0) {
        return Err(Error::UncorrelatedDecoder(m.s_est / n as f64));
    }
    out.cube_factor = Some(T::of(k));
    out.sdr0 = Some(T::of(m.ss / m.distortion_sum(k)));

    if spec.family == Family::Spiral && spec.beta > T::one() {
        let codec = Codec::new(out)?;
        let per_point = n / WORST_CASE_MAGNITUDES.len();
        let worst = WORST_CASE_MAGNITUDES
            .iter()
            .map(|&mag| conditional_mse(&codec, ch, T::of(mag), per_point, rng))
            .try_fold(0.0f64, |acc, mse| mse.map(|v| acc.max(v.as_f64())))?;
        out.sdr0_worst = Some(T::of(1.0 / worst));
    }
    Ok(out)
}

/// `E[(s - s_hat)^2 | |s| = magnitude]` with a random sign, after CUBE correction.
pub fn conditional_mse<T, R>(codec: &Codec<T>, ch: &ChannelModel<T>, magnitude: T, n: usize, rng: &mut R) -> Result<T>
where
    T: Scalar,
    R: Rng + ?Sized,
{
    if n == 0 {
        return Err(Error::TooFewSamples { min: 1, got: 0 });
    }
    let mut sum = 0.0;
    for _ in 0..n {
        let s = if rng.random::<bool>() { magnitude } else { -magnitude };
        let b = ch.transmit(&codec.encode(s), rng);
        let est = codec.estimate(&b, ch)?;
        let e = (s - est.value).as_f64();
        sum += e * e;
    }
    Ok(T::of(sum / n as f64))
}
