//! Continuous F0: a gap-free baseline pitch track and its refinement by
//! iterative time warping with instantaneous-frequency measurement.

mod bandpass;
mod baseline;
mod inst_freq;
mod refine;
mod track;

pub use bandpass::{band_filter, bandpass_harmonic};
pub use baseline::{estimate_baseline_contf0, PitchConfig};
pub use inst_freq::{instantaneous_frequency, IF_POWER_FLOOR};
pub use refine::{
    build_warp_map, build_warp_map_with_reference, measure_harmonic, measure_harmonic_with_power,
    refine_contf0, refine_contf0_detailed, RefineConfig, RefineReport, HARMONIC_POWER_GATE,
};
pub(crate) use track::fill_gaps;
pub use track::{F0Track, F0_CEIL, F0_FLOOR};
