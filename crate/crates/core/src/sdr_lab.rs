//! SDR measurement, OPTA and linear benchmarks, and spiral parameter search.

use rayon::prelude::*;

use crate::channel::ChannelModel;
use crate::codecs::{calibrate, Codec, CodecSpec, Decoder};
use crate::error::{Error, Result};
use crate::rng::{SeedTree, StreamKind};
use crate::scalar::Scalar;
use crate::stats::Z95;

pub const MIN_MEASURE_SAMPLES: usize = 10_000;
pub const CI_BATCHES: usize = 100;

/// Outcome of a Monte Carlo SDR measurement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdrReport<T> {
    pub snr: T,
    pub sdr_unbiased: T,
    /// Half-width of the 95% confidence interval (batch means, delta method).
    pub sdr_ci_halfwidth: T,
    pub threshold_event_rate: T,
    pub n_samples: usize,
}

/// Optimum performance theoretically achievable: `(1 + snr)^(kc/ks) - 1`.
pub fn opta_sdr<T: Scalar>(snr: T, kc: usize, ks: usize) -> T {
    (T::one() + snr).powf(T::of_usize(kc) / T::of_usize(ks)) - T::one()
}

/// Unbiased SDR of 1:2 repetition: `2 snr`.
pub fn linear_sdr<T: Scalar>(snr: T) -> T {
    T::of(2.0) * snr
}

/// Runs `n` unit-variance Gaussian samples through encode, channel, decode and CUBE correction.
///
/// Samples are split into [`CI_BATCHES`] equal batches for the confidence interval.
pub fn measure_sdr<T: Scalar>(
    codec: &Codec<T>,
    ch: &ChannelModel<T>,
    n: usize,
    seeds: &SeedTree,
) -> Result<SdrReport<T>> {
    if n < MIN_MEASURE_SAMPLES {
        return Err(Error::TooFewSamples { min: MIN_MEASURE_SAMPLES, got: n });
    }
    if codec.spec().cube_factor.is_none() {
        return Err(Error::Uncalibrated("cube_factor"));
    }
    let mut source = seeds.stream(StreamKind::Source, 0);
    let mut noise = seeds.stream(StreamKind::ChannelNoise, 0);

    let batch_len = n / CI_BATCHES;
    let mut batch_dist = Vec::with_capacity(CI_BATCHES);
    let (mut power, mut dist, mut thresholds) = (0.0f64, 0.0f64, 0usize);
    let mut acc = 0.0f64;
    let mut used = 0;
    for i in 0..n {
        let s = T::standard_normal(&mut source);
        let b = ch.transmit(&codec.encode(s), &mut noise);
        let est = codec.estimate(&b, ch)?.value;
        let e = (s - est).as_f64();
        power += s.as_f64() * s.as_f64();
        dist += e * e;
        acc += e * e;
        used += 1;
        if codec.is_threshold_event(s, est) {
            thresholds += 1;
        }
        if used == batch_len && batch_dist.len() < CI_BATCHES - 1 || i + 1 == n {
            batch_dist.push(acc / used as f64);
            acc = 0.0;
            used = 0;
        }
    }
    let p_s = power / n as f64;
    let d = dist / n as f64;
    let sdr = p_s / d;

    let k = batch_dist.len() as f64;
    let mean = batch_dist.iter().sum::<f64>() / k;
    let var = batch_dist.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1.0);
    let se_d = (var / k).sqrt();
    Ok(SdrReport {
        snr: ch.snr(),
        sdr_unbiased: T::of(sdr),
        sdr_ci_halfwidth: T::of(Z95 * se_d * p_s / (d * d)),
        threshold_event_rate: T::of(thresholds as f64 / n as f64),
        n_samples: n,
    })
}

/// What a spiral grid search maximizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Objective {
    /// Measured mean unbiased SDR.
    #[default]
    MeanSdr,
    /// Calibrated worst-case conditional SDR (falls back to the mean for `beta = 1`).
    WorstCaseSdr,
}

/// Grid and sample sizes for [`optimize_spiral`].
#[derive(Debug, Clone, PartialEq)]
pub struct SpiralSearch<T> {
    pub lambdas: Vec<T>,
    pub deltas: Vec<T>,
    pub beta: T,
    pub decoder: Decoder,
    pub calibration_samples: usize,
    pub measure_samples: usize,
    pub objective: Objective,
}

impl<T: Scalar> SpiralSearch<T> {
    /// `lambda` in {0.5, 1} and `count` log-spaced deltas in `[0.25, 4] * sqrt(snr)`.
    pub fn default_for(snr: T, beta: T, decoder: Decoder, count: usize) -> Self {
        Self {
            lambdas: vec![T::of(0.5), T::one()],
            deltas: default_delta_grid(snr, count),
            beta,
            decoder,
            calibration_samples: crate::codecs::MIN_CALIBRATION_SAMPLES,
            measure_samples: 100_000,
            objective: Objective::MeanSdr,
        }
    }
}

/// `count` log-spaced rotation frequencies spanning `[0.25, 4] * sqrt(snr)`.
///
/// The useful arm spacing scales with the noise standard deviation, so the
/// optimal `delta` tracks `sqrt(snr)`.
pub fn default_delta_grid<T: Scalar>(snr: T, count: usize) -> Vec<T> {
    let center = snr.sqrt().max(T::of(0.5));
    let (lo, hi) = (0.25f64.ln(), 4f64.ln());
    (0..count)
        .map(|i| {
            let t = if count > 1 { i as f64 / (count - 1) as f64 } else { 0.5 };
            center * T::of((lo + t * (hi - lo)).exp())
        })
        .collect()
}

/// One evaluated grid point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint<T> {
    pub spec: CodecSpec<T>,
    pub report: SdrReport<T>,
}

impl<T: Scalar> GridPoint<T> {
    fn score(&self, objective: Objective) -> T {
        match objective {
            Objective::MeanSdr => self.report.sdr_unbiased,
            Objective::WorstCaseSdr => self.spec.sdr0_worst.unwrap_or(self.report.sdr_unbiased),
        }
    }
}

/// Calibrates and measures every `(lambda, delta)` pair; returns the best and all points.
///
/// Pairs whose decoder output is not positively correlated with the source
/// (possible for very tight spirals at low SNR) are left out.
///
/// Grid points run in parallel with seeds derived from their grid index, so the
/// result does not depend on scheduling. Ties go to the smaller `delta`, then
/// the smaller `lambda`.
pub fn optimize_spiral_grid<T: Scalar>(
    ch: &ChannelModel<T>,
    search: &SpiralSearch<T>,
    seeds: &SeedTree,
) -> Result<(GridPoint<T>, Vec<GridPoint<T>>)> {
    if search.lambdas.is_empty() || search.deltas.is_empty() {
        return Err(Error::InvalidParameter("spiral search grids must be nonempty".into()));
    }
    let jobs: Vec<(usize, T, T)> = search
        .lambdas
        .iter()
        .flat_map(|&l| search.deltas.iter().map(move |&d| (l, d)))
        .enumerate()
        .map(|(i, (l, d))| (i, l, d))
        .collect();
    let points = jobs
        .par_iter()
        .map(|&(i, lambda, delta)| {
            let tree = seeds.child(i as u64);
            let spec = CodecSpec::spiral(lambda, delta, search.beta)?.with_decoder(search.decoder);
            let mut cal = tree.stream(StreamKind::Calibration, 0);
            let spec = match calibrate(&spec, ch, search.calibration_samples, &mut cal) {
                Err(Error::UncorrelatedDecoder(_)) => return Ok(None),
                other => other?,
            };
            let codec = Codec::new(spec)?;
            let report = measure_sdr(&codec, ch, search.measure_samples, &tree)?;
            Ok(Some(GridPoint { spec, report }))
        })
        .collect::<Result<Vec<_>>>()?;
    let points: Vec<GridPoint<T>> = points.into_iter().flatten().collect();
    if points.is_empty() {
        return Err(Error::InvalidParameter("no spiral on the grid decodes usefully at this SNR".into()));
    }

    let best = points
        .iter()
        .copied()
        .reduce(|best, p| {
            let (a, b) = (p.score(search.objective), best.score(search.objective));
            let better = a > b
                || (a == b
                    && (p.spec.delta < best.spec.delta
                        || (p.spec.delta == best.spec.delta && p.spec.lambda < best.spec.lambda)));
            if better {
                p
            } else {
                best
            }
        })
        .expect("nonempty grid");
    Ok((best, points))
}

/// Best spiral over the grid (see [`optimize_spiral_grid`]).
pub fn optimize_spiral<T: Scalar>(
    ch: &ChannelModel<T>,
    search: &SpiralSearch<T>,
    seeds: &SeedTree,
) -> Result<(CodecSpec<T>, SdrReport<T>)> {
    optimize_spiral_grid(ch, search, seeds).map(|(best, _)| (best.spec, best.report))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn opta_values() {
        assert_eq!(opta_sdr(15.0_f64, 2, 1), 255.0);
        assert_eq!(opta_sdr(3.0_f64, 2, 1), 15.0);
        assert!((opta_sdr(7.3_f64, 1, 1) - 7.3).abs() < 1e-12);
        assert!((opta_sdr(7.3_f64, 3, 3) - 7.3).abs() < 1e-12);
    }

    #[test]
    fn linear_values() {
        assert_eq!(linear_sdr(4.0_f64), 8.0);
        assert_eq!(linear_sdr(0.5_f64), 1.0);
    }

    #[test]
    fn delta_grid_is_log_spaced() {
        let g = default_delta_grid(16.0_f64, 5);
        assert!((g[0] - 1.0).abs() < 1e-12 && (g[4] - 16.0).abs() < 1e-9 && (g[2] - 4.0).abs() < 1e-12);
        let r1 = g[1] / g[0];
        assert!(g.windows(2).all(|w| (w[1] / w[0] - r1).abs() < 1e-9));
    }

    #[test]
    fn measure_rejects_small_n() {
        let mut spec = CodecSpec::<f64>::linear();
        spec.power_scale = Some(1.0);
        spec.cube_factor = Some(1.0);
        let codec = Codec::new(spec).unwrap();
        let ch = ChannelModel::new(1.0).unwrap();
        assert!(matches!(
            measure_sdr(&codec, &ch, 100, &SeedTree::new(0)),
            Err(Error::TooFewSamples { .. })
        ));
    }

    #[test]
    fn degenerate_grid_returns_its_point() {
        let ch = ChannelModel::new(20.0_f64).unwrap();
        let search = SpiralSearch {
            lambdas: vec![0.5],
            deltas: vec![4.0],
            beta: 1.0,
            decoder: Decoder::Ml,
            calibration_samples: 100_000,
            measure_samples: 10_000,
            objective: Objective::MeanSdr,
        };
        let (spec, report) = optimize_spiral(&ch, &search, &SeedTree::new(1)).unwrap();
        assert_eq!((spec.lambda, spec.delta, spec.beta), (0.5, 4.0, 1.0));
        assert_eq!(report.n_samples, 10_000);
        assert!(optimize_spiral(&ch, &SpiralSearch { deltas: vec![], ..search }, &SeedTree::new(1)).is_err());
    }
}
