//! Experiment parameters: defaults, a flat `key = value` file, then flag overrides.

use std::path::PathBuf;

use anyhow::{bail, ensure, Context, Result};
use jscc_core::kv::KvMap;
use jscc_core::{Decoder, Family};

/// Every key accepted in a config file. Flags use the same spelling.
pub const KEYS: &[&str] = &[
    "snr-db", "alpha", "q", "r", "f", "w", "v", "p0", "codec", "lambda", "delta", "beta", "decoder",
    "horizon", "trials", "seed", "out", "samples", "delta-count", "steady-state", "burn-in", "trace",
    "simulate",
];

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub snr_db: Vec<f64>,
    pub alpha: f64,
    pub q: f64,
    pub r: f64,
    pub f: f64,
    pub w: f64,
    pub v: f64,
    pub p0: f64,
    pub codec: Family,
    /// Fixed spiral parameters; when absent the spiral is grid-optimized.
    pub lambda: Option<f64>,
    pub delta: Option<f64>,
    pub beta: Option<f64>,
    pub decoder: Decoder,
    pub horizon: usize,
    pub trials: usize,
    pub seed: u64,
    /// Monte Carlo samples per SDR measurement.
    pub samples: usize,
    /// Rotation frequencies tried per `lambda` when optimizing.
    pub delta_count: usize,
    pub steady_state: bool,
    pub burn_in: usize,
    pub simulate: bool,
    pub out: Option<PathBuf>,
    pub trace: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            snr_db: vec![10.0],
            alpha: 2.0,
            q: 1.0,
            r: 1.0,
            f: 1.0,
            w: 1.0,
            v: 1.0,
            p0: 1.0,
            codec: Family::Linear,
            lambda: None,
            delta: None,
            beta: None,
            decoder: Decoder::Ml,
            horizon: 10_000,
            trials: 1,
            seed: 1,
            samples: 1_000_000,
            delta_count: 9,
            steady_state: false,
            burn_in: 1000,
            simulate: false,
            out: None,
            trace: None,
        }
    }
}

fn parse_snr_list(raw: &str) -> Result<Vec<f64>> {
    let list = raw
        .split(',')
        .map(|s| s.trim().parse::<f64>().with_context(|| format!("bad SNR value `{s}`")))
        .collect::<Result<Vec<_>>>()?;
    ensure!(!list.is_empty(), "snr-db list is empty");
    ensure!(list.iter().all(|s| s.is_finite()), "snr-db values must be finite");
    Ok(list)
}

fn parse_bool(raw: &str) -> Result<bool> {
    match raw {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => bail!("expected true or false, got `{raw}`"),
    }
}

impl ExperimentConfig {
    /// Overlays `kv` on `self`. Unknown keys are rejected.
    pub fn apply(mut self, kv: &KvMap) -> Result<Self> {
        if let Some(bad) = kv.keys().find(|k| !KEYS.contains(k)) {
            bail!("unknown config key `{bad}`");
        }
        macro_rules! take {
            ($key:literal, $field:expr) => {
                if let Some(v) = kv.get($key)? {
                    $field = v;
                }
            };
        }
        if let Some(raw) = kv.get_str("snr-db") {
            self.snr_db = parse_snr_list(raw)?;
        }
        take!("alpha", self.alpha);
        take!("q", self.q);
        take!("r", self.r);
        take!("f", self.f);
        take!("w", self.w);
        take!("v", self.v);
        take!("p0", self.p0);
        take!("codec", self.codec);
        take!("decoder", self.decoder);
        take!("horizon", self.horizon);
        take!("trials", self.trials);
        take!("seed", self.seed);
        take!("samples", self.samples);
        take!("delta-count", self.delta_count);
        take!("burn-in", self.burn_in);
        if let Some(v) = kv.get("lambda")? {
            self.lambda = Some(v);
        }
        if let Some(v) = kv.get("delta")? {
            self.delta = Some(v);
        }
        if let Some(v) = kv.get("beta")? {
            self.beta = Some(v);
        }
        if let Some(raw) = kv.get_str("steady-state") {
            self.steady_state = parse_bool(raw)?;
        }
        if let Some(raw) = kv.get_str("simulate") {
            self.simulate = parse_bool(raw)?;
        }
        if let Some(p) = kv.get_str("out") {
            self.out = Some(PathBuf::from(p));
        }
        if let Some(p) = kv.get_str("trace") {
            self.trace = Some(PathBuf::from(p));
        }
        Ok(self)
    }

    /// Cheap sanity checks; the core types validate the rest when built.
    pub fn validate(&self) -> Result<()> {
        ensure!(self.trials > 0, "trials must be positive");
        ensure!(self.horizon > 0, "horizon must be positive");
        ensure!(self.delta_count > 0, "delta-count must be positive");
        if self.codec != Family::Spiral {
            ensure!(
                self.lambda.is_none() && self.delta.is_none() && self.beta.is_none(),
                "lambda, delta and beta only apply to the spiral codec"
            );
        }
        if self.steady_state {
            ensure!(self.burn_in < self.horizon, "burn-in ({}) must be shorter than horizon ({})", self.burn_in, self.horizon);
        }
        Ok(())
    }

    /// Channel uses per source sample for the selected codec.
    pub fn kc(&self) -> usize {
        match self.codec {
            Family::Linear => 1,
            Family::Repetition | Family::Spiral => 2,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overlay_and_lists() {
        let kv = KvMap::parse("snr-db = 0, 3.5 ,10\ncodec = spiral\nbeta = 1.2\nsteady-state = yes\n").unwrap();
        let cfg = ExperimentConfig::default().apply(&kv).unwrap();
        assert_eq!(cfg.snr_db, vec![0.0, 3.5, 10.0]);
        assert_eq!(cfg.codec, Family::Spiral);
        assert_eq!(cfg.beta, Some(1.2));
        assert!(cfg.steady_state);
        assert_eq!(cfg.kc(), 2);
        cfg.validate().unwrap();
    }

    #[test]
    fn rejects_bad_input() {
        let unknown = KvMap::parse("snr = 3").unwrap();
        assert!(ExperimentConfig::default().apply(&unknown).is_err());
        let bad_codec = KvMap::parse("codec = turbo").unwrap();
        assert!(ExperimentConfig::default().apply(&bad_codec).is_err());
        let bad_list = KvMap::parse("snr-db = 1,,2").unwrap();
        assert!(ExperimentConfig::default().apply(&bad_list).is_err());
        let stray = KvMap::parse("lambda = 0.5").unwrap();
        assert!(ExperimentConfig::default().apply(&stray).unwrap().validate().is_err());
    }
}
