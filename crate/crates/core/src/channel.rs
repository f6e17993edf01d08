//! Unit-power AWGN channel and the per-channel-use power audit.

use rand::Rng;

use crate::error::{Error, Result};
use crate::scalar::{db_to_linear, Scalar};

/// Channel inputs (or outputs) for one source sample: `kc` real amplitudes, `kc <= 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymbolBlock<T> {
    symbols: [T; 2],
    len: usize,
}

impl<T: Scalar> SymbolBlock<T> {
    pub fn one(a: T) -> Self {
        Self { symbols: [a, T::zero()], len: 1 }
    }

    pub fn two(a1: T, a2: T) -> Self {
        Self { symbols: [a1, a2], len: 2 }
    }

    pub fn zeros(kc: usize) -> Self {
        assert!((1..=2).contains(&kc), "kc must be 1 or 2");
        Self { symbols: [T::zero(); 2], len: kc }
    }

    pub fn from_slice(values: &[T]) -> Result<Self> {
        match *values {
            [a] => Ok(Self::one(a)),
            [a, b] => Ok(Self::two(a, b)),
            _ => Err(Error::InvalidParameter(format!(
                "symbol block must hold 1 or 2 values, got {}",
                values.len()
            ))),
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn as_slice(&self) -> &[T] {
        &self.symbols[..self.len]
    }

    pub fn energy(&self) -> T {
        self.as_slice().iter().fold(T::zero(), |acc, &a| acc + a * a)
    }

    pub fn norm(&self) -> T {
        self.energy().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.as_slice().iter().all(|a| a.is_finite())
    }
}

/// AWGN channel `b = a + n` with unit input power and noise variance `1/snr`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelModel<T> {
    snr: T,
    noise_variance: T,
}

impl<T: Scalar> ChannelModel<T> {
    /// `snr` is linear. `+inf` gives the noiseless channel.
    pub fn new(snr: T) -> Result<Self> {
        if !(snr > T::zero()) {
            return Err(Error::InvalidParameter(format!("snr must be positive, got {snr}")));
        }
        Ok(Self { snr, noise_variance: snr.recip() })
    }

    pub fn from_db(snr_db: T) -> Result<Self> {
        Self::new(db_to_linear(snr_db))
    }

    pub fn noiseless() -> Self {
        Self { snr: T::infinity(), noise_variance: T::zero() }
    }

    pub fn snr(&self) -> T {
        self.snr
    }

    pub fn noise_variance(&self) -> T {
        self.noise_variance
    }

    pub fn noise_std(&self) -> T {
        self.noise_variance.sqrt()
    }

    /// Adds independent noise to every channel use. Always draws exactly `block.len()` normals.
    pub fn transmit<R: Rng + ?Sized>(&self, block: &SymbolBlock<T>, rng: &mut R) -> SymbolBlock<T> {
        let sigma = self.noise_std();
        let mut out = *block;
        for a in out.symbols[..out.len].iter_mut() {
            *a = *a + sigma * T::standard_normal(rng);
        }
        out
    }
}

/// Running per-channel-use average of squared amplitudes.
#[derive(Debug, Clone, Default)]
pub struct PowerAudit {
    sum_sq: f64,
    uses: u64,
}

impl PowerAudit {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push<T: Scalar>(&mut self, block: &SymbolBlock<T>) {
        self.sum_sq += block.energy().as_f64();
        self.uses += block.len() as u64;
    }

    pub fn uses(&self) -> u64 {
        self.uses
    }

    pub fn mean_power(&self) -> Result<f64> {
        if self.uses == 0 {
            return Err(Error::EmptyStream);
        }
        Ok(self.sum_sq / self.uses as f64)
    }
}

/// Average squared amplitude per channel use over a stream of blocks.
pub fn audit_power<'a, T, I>(blocks: I) -> Result<f64>
where
    T: Scalar,
    I: IntoIterator<Item = &'a SymbolBlock<T>>,
{
    let mut audit = PowerAudit::new();
    for b in blocks {
        audit.push(b);
    }
    audit.mean_power()
}
