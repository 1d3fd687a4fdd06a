//! Channel estimation and analog state optimization for multiuser MIMO-OFDM
//! base stations equipped with pixel-based fluid antennas.
//!
//! The crate is organised along the processing chain:
//!
//! * [`patterns`] - per-state dual-polarization radiation patterns.
//! * [`channel`] - array geometry, angular grid, scattering scenes and the
//!   grid-based separable channel model.
//! * [`sounding`] - uplink sounding observations, SVD pre-processing and the
//!   least-squares baseline.
//! * [`omp`] - shared-support orthogonal matching pursuit.
//! * [`vbi`] - mask-assisted turbo variational Bayesian estimator.
//! * [`precoding`] - zero-forcing precoder, rate metric and the relaxed
//!   discrete state optimizer with its baselines.
//! * [`harness`] - Monte-Carlo experiments, configuration and CSV output.

// `!(x >= 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod omp;
pub mod patterns;
pub mod precoding;
pub mod rng;
pub mod sounding;
pub mod vbi;

pub use channel::{AngleGrid, ArrayGeometry, GridModel, SceneParams, ScatterPath, ScatterScene, SparseCoeffs};
pub use error::{Error, Result};
pub use linalg::{CMat, CVec, C64};
pub use harness::{Estimator, Precoder, Profile, RunResult, ScenarioConfig};
pub use omp::{OmpConfig, OmpResult, OmpStop, SelectionRule};
pub use patterns::{Direction, PatternSet, Polarization};
pub use precoding::{DownlinkChannelSet, OptimizerConfig, PrecoderSolution};
pub use sounding::{ChannelSource, PilotKind, ReducedObservation, SoundingObservation, SoundingPlan};
pub use vbi::{InverseMoment, Mask, VbiConfig, VbiOutcome};
