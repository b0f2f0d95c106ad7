//! Multi-object tracking with calibrated detection uncertainty.
//!
//! Detections carry a mean and a standard deviation per box variable. The
//! toolkit rescales those deviations with split conformal calibration, feeds
//! them to the Kalman filter as measurement noise, and runs a second
//! association pass scored by Gaussian negative log-likelihood. SORT and
//! ByteTrack serve as base trackers; a seeded simulator and CLEAR, HOTA, NLL
//! and CRPS metrics close the loop.

pub mod association;
pub mod conformal;
pub mod domain;
pub mod error;
pub mod gaussian;
pub mod io;
pub mod metrics;
pub mod motion;
pub mod simgen;
pub mod tracker;

pub use conformal::{apply_quantiles, calibrate, QuantileSet};
pub use domain::{BoxState, Detection, GtObject, Scene, SceneMeta};
pub use error::{MotError, Result};
pub use metrics::{evaluate_detections, evaluate_tracks, EvalReport};
pub use simgen::{generate_scene, ScenarioConfig};
pub use tracker::{run_scene, track_scene, BaseKind, TrackRecord, TrackerConfig, TrackerState};
