//! Small Monte Carlo summary helpers.

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Mean and 95% CI half-width from non-overlapping batch means.
///
/// The last batch absorbs the remainder. Needs at least two batches.
pub fn batch_means_ci(samples: &[f64], batches: usize) -> Option<(f64, f64)> {
    if batches < 2 || samples.len() < batches {
        return None;
    }
    let len = samples.len() / batches;
    let means: Vec<f64> = (0..batches)
        .map(|b| {
            let end = if b + 1 == batches { samples.len() } else { (b + 1) * len };
            let chunk = &samples[b * len..end];
            chunk.iter().sum::<f64>() / chunk.len() as f64
        })
        .collect();
    let k = batches as f64;
    let grand = samples.iter().sum::<f64>() / samples.len() as f64;
    let mean_of_means = means.iter().sum::<f64>() / k;
    let var = means.iter().map(|m| (m - mean_of_means).powi(2)).sum::<f64>() / (k - 1.0);
    Some((grand, Z95 * (var / k).sqrt()))
}

/// Sample mean and 95% CI half-width treating `samples` as independent.
pub fn mean_ci(samples: &[f64]) -> Option<(f64, f64)> {
    let n = samples.len();
    if n < 2 {
        return None;
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
    Some((mean, Z95 * (var / n as f64).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_samples_have_zero_width() {
        let (m, h) = batch_means_ci(&[2.0; 100], 10).unwrap();
        assert_eq!((m, h), (2.0, 0.0));
        assert!(batch_means_ci(&[1.0; 5], 10).is_none());
        assert!(mean_ci(&[1.0]).is_none());
    }

    #[test]
    fn alternating_batches() {
        let samples: Vec<f64> = (0..40).map(|i| if (i / 10) % 2 == 0 { 1.0 } else { 3.0 }).collect();
        let (m, h) = batch_means_ci(&samples, 4).unwrap();
        assert_eq!(m, 2.0);
        // batch means 1,3,1,3: sd = 2/sqrt(3)
        assert!((h - Z95 * (4.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-12);
    }
}
