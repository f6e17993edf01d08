use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("decoder output is not positively correlated with the source (E[s s_B] = {0})")]
    UncorrelatedDecoder(f64),
    #[error("power audit needs at least one block")]
    EmptyStream,
    #[error("codec is not calibrated: {0} unset")]
    Uncalibrated(&'static str),
    #[error("block length {got} does not match codec kc = {expected}")]
    BlockLength { expected: usize, got: usize },
    #[error("non-finite Gaussian moment of order {0}")]
    NonFiniteMoment(f64),
    #[error("need at least {min} samples, got {got}")]
    TooFewSamples { min: usize, got: usize },
    #[error("degenerate LQG weights: S + R = 0 at step {0}")]
    DegenerateWeights(usize),
    #[error("schedule inconsistency: negative source power {power} at step {step}")]
    NegativeSourcePower { step: usize, power: f64 },
    #[error("control gain vanishes at step {0}; transmitter cannot track the receiver")]
    ZeroControlGain(usize),
    #[error("schedule built for sdr0 = {schedule}, codec reports {codec}")]
    ScheduleMismatch { schedule: f64, codec: f64 },
    #[error("config: {0}")]
    Config(String),
    #[error("output: {0}")]
    Output(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
