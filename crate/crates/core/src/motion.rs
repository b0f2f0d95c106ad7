//! Constant-velocity Kalman filter over (cx, cy, w, h) whose measurement
//! noise comes from each detection's standard deviations.

use nalgebra::{SMatrix, SVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::domain::{BoxState, Detection, NUM_VARS};
use crate::error::{MotError, Result};

pub const STATE_DIM: usize = 8;

pub type StateVector = SVector<f64, STATE_DIM>;
pub type StateMatrix = SMatrix<f64, STATE_DIM, STATE_DIM>;
type Obs = SVector<f64, NUM_VARS>;
type ObsMatrix = SMatrix<f64, NUM_VARS, NUM_VARS>;
type ObsModel = SMatrix<f64, NUM_VARS, STATE_DIM>;

/// Innovation covariances worse conditioned than this are rejected.
pub const MAX_CONDITION: f64 = 1e12;

/// Filter tuning shared by every tracklet of a tracker.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MotionParams {
    /// Process noise variance on (cx, cy, w, h) per frame.
    pub q_position: f64,
    /// Process noise variance on the four velocities per frame.
    pub q_velocity: f64,
    /// Prior variance of the unobserved velocities at birth.
    pub velocity_prior: f64,
    /// Lower bound on box extents after an update, meters.
    pub min_extent: f64,
}

impl Default for MotionParams {
    fn default() -> Self {
        MotionParams {
            q_position: 1e-2,
            q_velocity: 1e-4,
            velocity_prior: 100.0,
            min_extent: 1e-3,
        }
    }
}

impl MotionParams {
    pub fn validate(&self) -> Result<()> {
        let ok = [self.q_position, self.q_velocity, self.velocity_prior, self.min_extent]
            .iter()
            .all(|v| v.is_finite() && *v >= 0.0)
            && self.velocity_prior > 0.0
            && self.min_extent > 0.0;
        if ok {
            Ok(())
        } else {
            Err(MotError::Config(format!("invalid motion parameters {self:?}")))
        }
    }
}

/// A track hypothesis: 8-dim state `[cx, cy, w, h, vcx, vcy, vw, vh]`
/// (meters, meters/frame) with covariance and lifecycle counters.
#[derive(Debug, Clone, PartialEq)]
pub struct Tracklet {
    pub track_id: u64,
    pub state: StateVector,
    pub covariance: StateMatrix,
    pub last_sigma: [f64; NUM_VARS],
    /// Consecutive frames with a matched detection.
    pub hits: u32,
    /// Frames since creation.
    pub age: u32,
    pub time_since_update: u32,
}

fn transition() -> StateMatrix {
    let mut f = StateMatrix::identity();
    for i in 0..NUM_VARS {
        f[(i, i + NUM_VARS)] = 1.0;
    }
    f
}

fn observation() -> ObsModel {
    let mut h = ObsModel::zeros();
    for i in 0..NUM_VARS {
        h[(i, i)] = 1.0;
    }
    h
}

/// Starts a tracklet at the detection mean with zero velocity.
pub fn init_tracklet(d: &Detection, id: u64, params: &MotionParams) -> Result<Tracklet> {
    d.validate()?;
    let mut state = StateVector::zeros();
    let mut covariance = StateMatrix::zeros();
    for i in 0..NUM_VARS {
        state[i] = d.mean[i];
        covariance[(i, i)] = d.sigma[i] * d.sigma[i];
        covariance[(i + NUM_VARS, i + NUM_VARS)] = params.velocity_prior;
    }
    Ok(Tracklet {
        track_id: id,
        state,
        covariance,
        last_sigma: d.sigma,
        hits: 1,
        age: 0,
        time_since_update: 0,
    })
}

/// Advances one frame under the constant-velocity model.
pub fn predict(t: &Tracklet, params: &MotionParams) -> Tracklet {
    let f = transition();
    let mut q = StateMatrix::zeros();
    for i in 0..NUM_VARS {
        q[(i, i)] = params.q_position;
        q[(i + NUM_VARS, i + NUM_VARS)] = params.q_velocity;
    }
    let covariance = f * t.covariance * f.transpose() + q;
    let mut out = t.clone();
    out.state = f * t.state;
    out.state[2] = out.state[2].max(params.min_extent);
    out.state[3] = out.state[3].max(params.min_extent);
    out.covariance = symmetrize(covariance);
    if t.time_since_update > 0 {
        out.hits = 0;
    }
    out.age += 1;
    out.time_since_update += 1;
    out
}

fn symmetrize(p: StateMatrix) -> StateMatrix {
    (p + p.transpose()) * 0.5
}

/// Kalman measurement update with measurement `z` over (cx, cy, w, h) and
/// diagonal measurement noise `r_diag` (variances).
pub fn kalman_update(
    t: &Tracklet,
    z: [f64; NUM_VARS],
    r_diag: [f64; NUM_VARS],
    params: &MotionParams,
) -> Result<Tracklet> {
    let h = observation();
    let r = ObsMatrix::from_diagonal(&Obs::from(r_diag));
    let p = t.covariance;
    let s = h * p * h.transpose() + r;
    let s = (s + s.transpose()) * 0.5;

    let eig = SymmetricEigen::new(s).eigenvalues;
    let (lo, hi) = eig
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), v| (lo.min(*v), hi.max(v.abs())));
    let cond = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    if !(cond <= MAX_CONDITION) {
        return Err(MotError::FilterDegenerate(cond));
    }
    let s_inv = s
        .try_inverse()
        .ok_or(MotError::FilterDegenerate(f64::INFINITY))?;
    let k = p * h.transpose() * s_inv;
    let innovation = Obs::from(z) - h * t.state;

    let i_kh = StateMatrix::identity() - k * h;
    let covariance = i_kh * p * i_kh.transpose() + k * r * k.transpose();

    let mut out = t.clone();
    out.state = t.state + k * innovation;
    out.covariance = symmetrize(covariance);
    out.state[2] = out.state[2].max(params.min_extent);
    out.state[3] = out.state[3].max(params.min_extent);
    out.hits += 1;
    out.time_since_update = 0;
    Ok(out)
}

/// Update using the detection's own standard deviations as measurement noise.
pub fn sdkf_update(t: &Tracklet, d: &Detection, params: &MotionParams) -> Result<Tracklet> {
    let r = d.sigma.map(|s| s * s);
    let mut out = kalman_update(t, d.mean, r, params)?;
    out.last_sigma = d.sigma;
    Ok(out)
}

/// Current box estimate.
pub fn tracklet_box(t: &Tracklet) -> Result<BoxState> {
    BoxState::new(t.state[0], t.state[1], t.state[2], t.state[3])
}

/// The predicted observation `H x` as a plain array.
pub fn observed_state(t: &Tracklet) -> [f64; NUM_VARS] {
    [t.state[0], t.state[1], t.state[2], t.state[3]]
}
