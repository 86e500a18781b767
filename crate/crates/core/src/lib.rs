//! Transmit beam design, scene synthesis and adaptive range-Doppler
//! processing for dual-function radar-communication (DFRC) systems that
//! embed communication symbols through complex beampattern modulation (CBM).
//!
//! The crate is organized bottom-up:
//!
//! - [`array_beam`]: ULA steering vectors, beampatterns and the minimax
//!   sidelobe design of the CBM weight dictionary.
//! - [`waveform`]: LFM pulses, shifted-waveform families, the Doppler grid
//!   and the per-cell range covariance builders.
//! - [`scene`]: targets, clutter and noise synthesized into a slow-time /
//!   fast-time data cube, including pulse-to-pulse clutter modulation.
//! - [`filters`]: sequential pulse compression + MTD, the joint range-Doppler
//!   matched filter, full-dimension adaptive multiple pulse compression (AMPC)
//!   and the rank-one joint range and Doppler adaptive processor (JRDAP).
//!
//! Range cells are 1-based (`1..=L`) at every public surface; Doppler cells
//! are 0-based (`0..Q`) with `psi_q = -0.5 + q / Q`.

pub mod array_beam;
pub mod error;
pub mod filters;
pub mod linalg;
pub mod scene;
pub mod waveform;

pub use array_beam::{
    beampattern, design_cbm_dictionary, select_pulse_weights, steering_vector, ArrayGeometry,
    BeamDesignSpec, BeamDictionary,
};
pub use error::{Error, Result};
pub use filters::{
    ampc_cell, ampc_map, estimate_prior, jrdap_cell, jrdap_map, jrdmf, spc_mtd, FilterModel,
    JrdapOptions, Method, RangeDopplerMap,
};
pub use linalg::{CMat, CVec};
pub use num_complex::Complex64;
pub use scene::{synthesize, ClutterField, CnrReference, DataCube, Scene, SceneRealization, Target};
pub use waveform::{lfm_waveform, DopplerGrid, PowerPrior, Waveform};
