use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::association::match_by_iou;
use crate::domain::{gt_by_frame, BoxState, Detection, GtObject, Scene, NUM_VARS};
use crate::error::{MotError, Result};
use crate::gaussian::{check_sigma, gaussian_logpdf, std_normal_cdf, std_normal_pdf};
use crate::tracker::TrackRecord;

/// Closed-form CRPS of the forecast `N(mu, sigma²)` against observation `y`.
pub fn crps_gaussian(mu: f64, sigma: f64, y: f64) -> Result<f64> {
    check_sigma(sigma)?;
    let z = (y - mu) / sigma;
    let v = sigma * (z * (2.0 * std_normal_cdf(z) - 1.0) + 2.0 * std_normal_pdf(z) - 1.0 / PI.sqrt());
    Ok(v.max(0.0))
}

/// A predicted Gaussian box for one frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxedOutput {
    pub frame: u64,
    pub mean: [f64; NUM_VARS],
    pub sigma: [f64; NUM_VARS],
}

impl BoxedOutput {
    pub fn from_record(r: &TrackRecord) -> Self {
        BoxedOutput {
            frame: r.frame,
            mean: r.bbox.to_array(),
            sigma: r.sigma,
        }
    }

    pub fn from_detection(frame: u64, d: &Detection) -> Self {
        BoxedOutput {
            frame,
            mean: d.mean,
            sigma: d.sigma,
        }
    }

    pub fn from_scene(scene: &Scene) -> Vec<Self> {
        scene
            .frames
            .iter()
            .flat_map(|(f, dets)| dets.iter().map(move |d| BoxedOutput::from_detection(*f, d)))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UncertaintyScores {
    pub nll: f64,
    pub crps: f64,
    pub matched_tp: usize,
}

/// Mean Gaussian NLL and CRPS over all four variables of every output
/// matched to ground truth at `iou_threshold`.
pub fn uncertainty_metrics(
    gt: &[GtObject],
    outputs: &[BoxedOutput],
    iou_threshold: f64,
) -> Result<UncertaintyScores> {
    let by_frame = gt_by_frame(gt);
    let mut out_by_frame: std::collections::BTreeMap<u64, Vec<&BoxedOutput>> = Default::default();
    for o in outputs {
        out_by_frame.entry(o.frame).or_default().push(o);
    }
    let (mut nll_sum, mut crps_sum, mut tp) = (0.0, 0.0, 0usize);
    for (frame, outs) in &out_by_frame {
        let Some(truth) = by_frame.get(frame) else {
            continue;
        };
        let mut boxes = Vec::with_capacity(outs.len());
        for o in outs {
            for s in o.sigma {
                check_sigma(s)?;
            }
            boxes.push(BoxState::from_array(o.mean)?);
        }
        let gboxes: Vec<BoxState> = truth.iter().map(|g| g.bbox).collect();
        for (oi, gi, _) in match_by_iou(&boxes, &gboxes, iou_threshold)? {
            let o = outs[oi];
            let y = truth[gi].bbox.to_array();
            for i in 0..NUM_VARS {
                nll_sum -= gaussian_logpdf(y[i], o.mean[i], o.sigma[i])?;
                crps_sum += crps_gaussian(o.mean[i], o.sigma[i], y[i])?;
            }
            tp += 1;
        }
    }
    if tp == 0 {
        return Err(MotError::NoTruePositives(iou_threshold));
    }
    let n = (tp * NUM_VARS) as f64;
    Ok(UncertaintyScores {
        nll: nll_sum / n,
        crps: crps_sum / n,
        matched_tp: tp,
    })
}

/// Frames per second from per-frame processing times.
pub fn throughput(timings: &[f64]) -> Result<f64> {
    if timings.is_empty() {
        return Err(MotError::EmptyInput("no frame timings".into()));
    }
    let total: f64 = timings.iter().sum();
    if !(total > 0.0) {
        return Err(MotError::Domain(format!("total processing time {total} is not positive")));
    }
    Ok(timings.len() as f64 / total)
}
