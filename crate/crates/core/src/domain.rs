//! Shared domain types: planar boxes, detections with per-variable
//! uncertainty, ground truth, and scenes.

use serde::{Deserialize, Serialize};

use crate::error::{MotError, Result};

/// Number of location variables carried by a detection: (cx, cy, w, h).
pub const NUM_VARS: usize = 4;

/// An axis-aligned box in the bird's-eye plane, parameterized by center and extent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxState {
    pub cx: f64,
    pub cy: f64,
    pub w: f64,
    pub h: f64,
}

impl BoxState {
    pub fn new(cx: f64, cy: f64, w: f64, h: f64) -> Result<Self> {
        let b = BoxState { cx, cy, w, h };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cx.is_finite() && self.cy.is_finite() && self.w.is_finite() && self.h.is_finite())
        {
            return Err(MotError::InvalidBox(format!("non-finite field in {self:?}")));
        }
        if self.w <= 0.0 || self.h <= 0.0 {
            return Err(MotError::InvalidBox(format!(
                "non-positive extent w={} h={}",
                self.w, self.h
            )));
        }
        Ok(())
    }

    pub fn from_array(v: [f64; NUM_VARS]) -> Result<Self> {
        Self::new(v[0], v[1], v[2], v[3])
    }

    pub fn to_array(self) -> [f64; NUM_VARS] {
        [self.cx, self.cy, self.w, self.h]
    }

    /// Inverse of [`box_corners`].
    pub fn from_corners(x_min: f64, y_min: f64, x_max: f64, y_max: f64) -> Result<Self> {
        Self::new(
            (x_min + x_max) / 2.0,
            (y_min + y_max) / 2.0,
            x_max - x_min,
            y_max - y_min,
        )
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    pub fn contains_point(&self, x: f64, y: f64) -> bool {
        let (x0, y0, x1, y1) = corners_unchecked(self);
        x >= x0 && x <= x1 && y >= y0 && y <= y1
    }
}

#[inline]
pub(crate) fn corners_unchecked(b: &BoxState) -> (f64, f64, f64, f64) {
    let hw = b.w / 2.0;
    let hh = b.h / 2.0;
    (b.cx - hw, b.cy - hh, b.cx + hw, b.cy + hh)
}

/// Converts a center/extent box to `(x_min, y_min, x_max, y_max)`.
pub fn box_corners(b: &BoxState) -> Result<(f64, f64, f64, f64)> {
    b.validate()?;
    Ok(corners_unchecked(b))
}

/// One detected object: class probability, per-variable Gaussian location
/// (mean and standard deviation over cx, cy, w, h), and association score.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub class_prob: f64,
    pub mean: [f64; NUM_VARS],
    pub sigma: [f64; NUM_VARS],
    pub score: f64,
}

impl Detection {
    pub fn new(
        class_prob: f64,
        mean: [f64; NUM_VARS],
        sigma: [f64; NUM_VARS],
        score: f64,
    ) -> Result<Self> {
        let d = Detection {
            class_prob,
            mean,
            sigma,
            score,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.class_prob) {
            return Err(MotError::InvalidDetection(format!(
                "class_prob {} outside [0, 1]",
                self.class_prob
            )));
        }
        if !(0.0..=1.0).contains(&self.score) {
            return Err(MotError::InvalidDetection(format!(
                "score {} outside [0, 1]",
                self.score
            )));
        }
        if let Some(s) = self.sigma.iter().find(|s| !(s.is_finite() && **s > 0.0)) {
            return Err(MotError::InvalidDetection(format!(
                "sigma must be positive and finite, got {s}"
            )));
        }
        BoxState::from_array(self.mean)
            .map(|_| ())
            .map_err(|e| MotError::InvalidDetection(e.to_string()))
    }

    pub fn bbox(&self) -> BoxState {
        BoxState {
            cx: self.mean[0],
            cy: self.mean[1],
            w: self.mean[2],
            h: self.mean[3],
        }
    }
}

/// A ground-truth object in one frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GtObject {
    pub frame: u64,
    pub object_id: i64,
    pub bbox: BoxState,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneMeta {
    /// Frames per second.
    pub frame_rate: f64,
    /// Side length of the square field, meters.
    pub field_extent: f64,
    pub seed: Option<u64>,
}

impl Default for SceneMeta {
    fn default() -> Self {
        SceneMeta {
            frame_rate: 10.0,
            field_extent: 100.0,
            seed: None,
        }
    }
}

/// Detector output over a sequence: frames in strictly increasing order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Scene {
    pub frames: Vec<(u64, Vec<Detection>)>,
    pub meta: SceneMeta,
}

impl Scene {
    pub fn new(frames: Vec<(u64, Vec<Detection>)>, meta: SceneMeta) -> Result<Self> {
        let scene = Scene { frames, meta };
        scene.validate()?;
        Ok(scene)
    }

    pub fn validate(&self) -> Result<()> {
        for pair in self.frames.windows(2) {
            if pair[1].0 <= pair[0].0 {
                return Err(MotError::Sequencing {
                    last: pair[0].0,
                    got: pair[1].0,
                });
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn detection_count(&self) -> usize {
        self.frames.iter().map(|(_, d)| d.len()).sum()
    }
}

/// Groups ground truth by frame, preserving input order within a frame.
pub fn gt_by_frame(gt: &[GtObject]) -> std::collections::BTreeMap<u64, Vec<GtObject>> {
    let mut map: std::collections::BTreeMap<u64, Vec<GtObject>> = Default::default();
    for g in gt {
        map.entry(g.frame).or_default().push(*g);
    }
    map
}
