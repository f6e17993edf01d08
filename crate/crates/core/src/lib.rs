//! Analog joint source-channel coding over AWGN channels and its use inside
//! a scalar LQG control loop.
//!
//! Everything numeric is generic over [`Scalar`] (`f32` or `f64`); the
//! `*64` / `*32` aliases below fix the precision for the common cases.

// `!(x > 0)` style checks are deliberate: NaN must fail them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod channel;
pub mod codecs;
pub mod control_loop;
pub mod error;
pub mod kv;
pub mod report;
pub mod rng;
pub mod scalar;
pub mod sdr_lab;
pub mod stats;

pub use channel::{audit_power, ChannelModel, PowerAudit, SymbolBlock};
pub use codecs::{calibrate, Codec, CodecSpec, Decoder, Estimate, Family};
pub use error::{Error, Result};
pub use rng::{RandomStream, SeedTree, StreamKind};
pub use scalar::{db_to_linear, linear_to_db, Scalar};

pub type ChannelModel64 = ChannelModel<f64>;
pub type ChannelModel32 = ChannelModel<f32>;
pub type CodecSpec64 = CodecSpec<f64>;
pub type CodecSpec32 = CodecSpec<f32>;
pub type Codec64 = Codec<f64>;
pub type Codec32 = Codec<f32>;







pub type PlantParams64 = control_loop::PlantParams<f64>;
pub type PlantParams32 = control_loop::PlantParams<f32>;
pub type LqgWeights64 = control_loop::LqgWeights<f64>;
pub type LqgWeights32 = control_loop::LqgWeights<f32>;
pub type LoopSchedule64 = control_loop::LoopSchedule<f64>;
pub type SdrReport64 = sdr_lab::SdrReport<f64>;
pub type SteadyStateQuantities64 = bounds::SteadyStateQuantities<f64>;
