use std::fmt;
use std::str::FromStr;

use crate::channel::SymbolBlock;
use crate::error::{Error, Result};
use crate::kv::KvMap;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    /// 1:1, `a = c s`.
    Linear,
    /// 1:2, `a = (c s, c s)`.
    Repetition,
    /// 1:2 Archimedean bi-spiral with stretch `lambda` and growth exponent `beta`.
    Spiral,
}

impl Family {
    pub fn as_str(&self) -> &'static str {
        match self {
            Family::Linear => "linear",
            Family::Repetition => "repetition",
            Family::Spiral => "spiral",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(Family::Linear),
            "repetition" => Ok(Family::Repetition),
            "spiral" => Ok(Family::Spiral),
            other => Err(Error::InvalidParameter(format!("unknown codec family `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Decoder {
    #[default]
    Ml,
    Mmse,
}

impl Decoder {
    pub fn as_str(&self) -> &'static str {
        match self {
            Decoder::Ml => "ml",
            Decoder::Mmse => "mmse",
        }
    }
}

impl fmt::Display for Decoder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Decoder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ml" => Ok(Decoder::Ml),
            "mmse" => Ok(Decoder::Mmse),
            other => Err(Error::InvalidParameter(format!("unknown decoder `{other}`"))),
        }
    }
}

/// Codec family, shape parameters and calibration results.
///
/// The shape parameters (`lambda`, `delta`, `beta`) are fixed at construction;
/// `power_scale`, `cube_factor`, `sdr0` and friends are filled in by
/// [`calibrate`](crate::codecs::calibrate). The source is always assumed to be
/// pre-normalized to unit variance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CodecSpec<T> {
    pub family: Family,
    pub ks: usize,
    pub kc: usize,
    pub lambda: T,
    /// Radians per unit of `|s|^lambda`. Unused (zero) for linear families.
    pub delta: T,
    pub beta: T,
    pub power_scale: Option<T>,
    pub cube_factor: Option<T>,
    /// Mean unbiased SDR at `design_snr`.
    pub sdr0: Option<T>,
    /// Worst conditional unbiased SDR over the magnitude grid (bounded spirals only).
    pub sdr0_worst: Option<T>,
    pub design_snr: Option<T>,
    pub decoder: Decoder,
}

impl<T: Scalar> CodecSpec<T> {
    fn uncalibrated(family: Family, kc: usize, lambda: T, delta: T, beta: T) -> Self {
        Self {
            family,
            ks: 1,
            kc,
            lambda,
            delta,
            beta,
            power_scale: None,
            cube_factor: None,
            sdr0: None,
            sdr0_worst: None,
            design_snr: None,
            decoder: Decoder::Ml,
        }
    }

    pub fn linear() -> Self {
        Self::uncalibrated(Family::Linear, 1, T::one(), T::zero(), T::one())
    }

    pub fn repetition() -> Self {
        Self::uncalibrated(Family::Repetition, 2, T::one(), T::zero(), T::one())
    }

    /// Bi-spiral; `beta = 1` is the regular/stretched spiral, `beta > 1` the distortion-bounded one.
    pub fn spiral(lambda: T, delta: T, beta: T) -> Result<Self> {
        let spec = Self::uncalibrated(Family::Spiral, 2, lambda, delta, beta);
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_decoder(mut self, decoder: Decoder) -> Self {
        self.decoder = decoder;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.ks != 1 {
            return bad(format!("only ks = 1 is supported, got {}", self.ks));
        }
        let expected_kc = match self.family {
            Family::Linear => 1,
            Family::Repetition | Family::Spiral => 2,
        };
        if self.kc != expected_kc {
            return bad(format!("{} codec needs kc = {expected_kc}, got {}", self.family, self.kc));
        }
        match self.family {
            Family::Linear | Family::Repetition => {
                if self.lambda != T::one() || self.beta != T::one() {
                    return bad("linear families require lambda = beta = 1".into());
                }
            }
            Family::Spiral => {
                if !(self.lambda > T::zero() && self.lambda.is_finite()) {
                    return bad(format!("lambda must be positive, got {}", self.lambda));
                }
                if !(self.delta > T::zero() && self.delta.is_finite()) {
                    return bad(format!("delta must be positive, got {}", self.delta));
                }
                if !(self.beta >= T::one() && self.beta.is_finite()) {
                    return bad(format!("beta must be >= 1, got {}", self.beta));
                }
            }
        }
        if let Some(c) = self.power_scale {
            if !(c > T::zero() && c.is_finite()) {
                return bad(format!("power_scale must be positive, got {c}"));
            }
        }
        if let Some(sdr0) = self.sdr0 {
            if !(sdr0 > T::zero()) {
                return bad(format!("sdr0 must be positive, got {sdr0}"));
            }
        }
        Ok(())
    }

    pub fn is_calibrated(&self) -> bool {
        self.power_scale.is_some() && self.cube_factor.is_some() && self.sdr0.is_some()
    }

    /// SDR the control loop should plan with: the worst-case value when recorded, else the mean.
    pub fn loop_sdr0(&self) -> Result<T> {
        self.sdr0_worst.or(self.sdr0).ok_or(Error::Uncalibrated("sdr0"))
    }

    pub fn power_scale(&self) -> Result<T> {
        self.power_scale.ok_or(Error::Uncalibrated("power_scale"))
    }

    /// Exponent of `|s|` in the curve norm: `lambda * beta` (1 for linear families).
    pub fn norm_exponent(&self) -> T {
        self.lambda * self.beta
    }

    /// Norm of the channel point for a source of magnitude `m >= 0`.
    pub fn curve_norm(&self, c: T, m: T) -> T {
        match self.family {
            Family::Linear => c * m,
            Family::Repetition => c * m * T::of(2.0).sqrt(),
            Family::Spiral => c * m.powf(self.norm_exponent()),
        }
    }

    /// Inverse of [`curve_norm`](Self::curve_norm) in `m`.
    pub fn magnitude_for_norm(&self, c: T, r: T) -> T {
        let r = r.max(T::zero());
        match self.family {
            Family::Linear => r / c,
            Family::Repetition => r / (c * T::of(2.0).sqrt()),
            Family::Spiral => (r / c).powf(self.norm_exponent().recip()),
        }
    }

    /// `sign(s) |s|^lambda`.
    pub fn stretch(&self, s: T) -> T {
        s.signum() * s.abs().powf(self.lambda)
    }

    #[inline]
    pub(crate) fn encode_with(&self, c: T, s: T) -> SymbolBlock<T> {
        match self.family {
            Family::Linear => SymbolBlock::one(c * s),
            Family::Repetition => SymbolBlock::two(c * s, c * s),
            Family::Spiral => {
                if s == T::zero() {
                    return SymbolBlock::two(T::zero(), T::zero());
                }
                let m = s.abs();
                let u = m.powf(self.lambda);
                let r = c * u.powf(self.beta);
                let (sin, cos) = (self.delta * u).sin_cos();
                let sg = s.signum();
                SymbolBlock::two(sg * r * cos, sg * r * sin)
            }
        }
    }

    /// Maps one unit-variance source sample to `kc` channel inputs.
    pub fn encode(&self, s: T) -> Result<SymbolBlock<T>> {
        if !s.is_finite() {
            return Err(Error::InvalidParameter(format!("source sample must be finite, got {s}")));
        }
        Ok(self.encode_with(self.power_scale()?, s))
    }

    pub fn to_kv(&self) -> KvMap {
        let mut kv = KvMap::new();
        kv.set("codec", self.family);
        kv.set("decoder", self.decoder);
        if self.family == Family::Spiral {
            kv.set("lambda", self.lambda);
            kv.set("delta", self.delta);
            kv.set("beta", self.beta);
        }
        let optional = [
            ("power-scale", self.power_scale),
            ("cube-factor", self.cube_factor),
            ("sdr0", self.sdr0),
            ("sdr0-worst", self.sdr0_worst),
            ("design-snr", self.design_snr),
        ];
        for (key, value) in optional {
            if let Some(v) = value {
                kv.set(key, v);
            }
        }
        kv
    }

    /// Reads a spec back from a flat config. Missing spiral shape keys are an error.
    pub fn from_kv(kv: &KvMap) -> Result<Self>
    where
        T: FromStr,
        T::Err: fmt::Display,
    {
        let family: Family = kv.get("codec")?.unwrap_or(Family::Linear);
        let mut spec = match family {
            Family::Linear => Self::linear(),
            Family::Repetition => Self::repetition(),
            Family::Spiral => {
                let need = |key: &str| -> Result<T> {
                    kv.get(key)?.ok_or_else(|| Error::Config(format!("spiral codec needs `{key}`")))
                };
                Self::spiral(need("lambda")?, need("delta")?, need("beta")?)?
            }
        };
        spec.decoder = kv.get("decoder")?.unwrap_or_default();
        spec.power_scale = kv.get("power-scale")?;
        spec.cube_factor = kv.get("cube-factor")?;
        spec.sdr0 = kv.get("sdr0")?;
        spec.sdr0_worst = kv.get("sdr0-worst")?;
        spec.design_snr = kv.get("design-snr")?;
        spec.validate()?;
        Ok(spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn calibrated(mut spec: CodecSpec<f64>, c: f64) -> CodecSpec<f64> {
        spec.power_scale = Some(c);
        spec
    }

    #[test]
    fn origin_maps_to_origin() {
        let spec = calibrated(CodecSpec::spiral(0.5, 7.0, 1.2).unwrap(), 1.3);
        assert_eq!(spec.encode(0.0).unwrap().as_slice(), &[0.0, 0.0]);
    }

    #[test]
    fn repetition_repeats() {
        let spec = calibrated(CodecSpec::repetition(), 1.0);
        assert_eq!(spec.encode(0.5).unwrap().as_slice(), &[0.5, 0.5]);
    }

    #[test]
    fn uncalibrated_encode_fails() {
        let spec = CodecSpec::<f64>::spiral(1.0, 3.0, 1.0).unwrap();
        assert_eq!(spec.encode(0.1), Err(Error::Uncalibrated("power_scale")));
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(CodecSpec::<f64>::spiral(1.0, 3.0, 0.9).is_err());
        assert!(CodecSpec::<f64>::spiral(0.0, 3.0, 1.0).is_err());
        assert!(CodecSpec::<f64>::spiral(1.0, -3.0, 1.0).is_err());
        let mut lin = CodecSpec::<f64>::linear();
        lin.kc = 2;
        assert!(lin.validate().is_err());
    }

    #[test]
    fn kv_round_trip() {
        let mut spec = calibrated(CodecSpec::spiral(0.5, 6.25, 1.2).unwrap(), 1.5);
        spec.cube_factor = Some(1.01);
        spec.sdr0 = Some(80.0);
        spec.decoder = Decoder::Mmse;
        let back = CodecSpec::<f64>::from_kv(&KvMap::parse(&spec.to_kv().render()).unwrap()).unwrap();
        assert_eq!(back, spec);
        assert!(CodecSpec::<f64>::from_kv(&KvMap::parse("codec = spiral\nlambda = 1").unwrap()).is_err());
    }

    #[test]
    fn f32_encode_matches_f64() {
        let s64 = calibrated(CodecSpec::spiral(0.5, 5.0, 1.2).unwrap(), 1.4);
        let mut s32 = CodecSpec::<f32>::spiral(0.5, 5.0, 1.2).unwrap();
        s32.power_scale = Some(1.4);
        let a = s64.encode(1.7).unwrap();
        let b = s32.encode(1.7).unwrap();
        for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
            assert!((x - *y as f64).abs() < 1e-5);
        }
    }

    proptest! {
        #[test]
        fn odd_symmetry(s in -8.0f64..8.0, lambda in 0.3f64..1.5, delta in 0.5f64..30.0, beta in 1.0f64..2.0, fam in 0usize..3) {
            let spec = match fam {
                0 => calibrated(CodecSpec::linear(), 1.0),
                1 => calibrated(CodecSpec::repetition(), 1.0),
                _ => calibrated(CodecSpec::spiral(lambda, delta, beta).unwrap(), 1.7),
            };
            let pos = spec.encode(s).unwrap();
            let neg = spec.encode(-s).unwrap();
            for (a, b) in pos.as_slice().iter().zip(neg.as_slice()) {
                prop_assert_eq!(*a, -*b);
            }
        }

        #[test]
        fn spiral_norm_law(s in -8.0f64..8.0, lambda in 0.3f64..1.5, delta in 0.5f64..30.0, beta in 1.0f64..2.0, c in 0.5f64..3.0) {
            let spec = calibrated(CodecSpec::spiral(lambda, delta, beta).unwrap(), c);
            let norm = spec.encode(s).unwrap().norm();
            let expected = c * s.abs().powf(lambda * beta);
            prop_assert!((norm - expected).abs() <= 1e-12 * (1.0 + expected));
            prop_assert!((spec.curve_norm(c, s.abs()) - expected).abs() <= 1e-12 * (1.0 + expected));
            let m = spec.magnitude_for_norm(c, expected);
            prop_assert!((m - s.abs()).abs() <= 1e-9 * (1.0 + s.abs()));
        }
    }
}
