//! Linear, repetition and Archimedean bi-spiral analog codecs.

mod calibrate;
mod decode;
mod search;
mod spec;

pub use calibrate::{
    calibrate, conditional_mse, gaussian_abs_moment, power_scale, MIN_CALIBRATION_SAMPLES,
    WORST_CASE_MAGNITUDES,
};
pub use decode::{Codec, Estimate, GRID_CELLS, REFINE_TOL, SEARCH_RANGE};
pub use search::golden_section_min;
pub use spec::{CodecSpec, Decoder, Family};
