use jscc_core::{ChannelModel, Scalar, SeedTree, StreamKind, SymbolBlock};

const N: usize = 1_000_000;

fn noise_samples(snr: f64, seed: u64) -> (Vec<f64>, Vec<f64>) {
    let ch = ChannelModel::new(snr).unwrap();
    let mut rng = SeedTree::new(seed).stream(StreamKind::ChannelNoise, 0);
    let zero = SymbolBlock::two(0.0, 0.0);
    (0..N)
        .map(|_| {
            let b = ch.transmit(&zero, &mut rng);
            (b.as_slice()[0], b.as_slice()[1])
        })
        .unzip()
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

fn corr(x: &[f64], y: &[f64]) -> f64 {
    let (mx, my) = (mean(x), mean(y));
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    sxy / (sxx * syy).sqrt()
}

#[test]
fn noise_is_white_across_uses_and_time() {
    let (u1, u2) = noise_samples(4.0, 11);
    let bound = 3.0 / (N as f64).sqrt();
    let across = corr(&u1, &u2);
    assert!(across.abs() < bound, "cross-use correlation {across}");
    for lag in [1, 2, 7] {
        let r = corr(&u1[..N - lag], &u1[lag..]);
        assert!(r.abs() < bound, "lag {lag} autocorrelation {r}");
    }
    let r = corr(&u2[..N - 1], &u1[1..]);
    assert!(r.abs() < bound, "use 2 vs next use 1: {r}");
}

#[test]
fn output_variance_adds_noise_power() {
    let snr = 4.0;
    let ch = ChannelModel::new(snr).unwrap();
    let mut source = SeedTree::new(3).stream(StreamKind::Source, 0);
    let mut noise = SeedTree::new(3).stream(StreamKind::ChannelNoise, 0);
    let mut sum2 = 0.0;
    for _ in 0..N {
        let a = <f64 as Scalar>::standard_normal(&mut source);
        let b = ch.transmit(&SymbolBlock::one(a), &mut noise);
        sum2 += b.as_slice()[0].powi(2);
    }
    let var = sum2 / N as f64;
    let expected = 1.0 + 1.0 / snr;
    let se = expected * (2.0 / N as f64).sqrt();
    assert!((var - expected).abs() < 4.0 * se, "{var} vs {expected}");
}

#[test]
fn noise_variance_matches_snr() {
    for (snr, seed) in [(0.5, 1), (10.0, 2), (1000.0, 3)] {
        let (u1, u2) = noise_samples(snr, seed);
        for u in [&u1, &u2] {
            let var = u.iter().map(|x| x * x).sum::<f64>() / N as f64;
            let expected = 1.0 / snr;
            assert!((var / expected - 1.0).abs() < 4.0 * (2.0 / N as f64).sqrt(), "snr {snr}: {var}");
        }
    }
}

#[test]
fn noiseless_channel_is_identity() {
    let ch = ChannelModel::<f64>::noiseless();
    let mut rng = SeedTree::new(0).stream(StreamKind::ChannelNoise, 0);
    let a = SymbolBlock::two(0.3, -1.7);
    assert_eq!(ch.transmit(&a, &mut rng), a);
}
