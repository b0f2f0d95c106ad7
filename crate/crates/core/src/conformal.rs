//! Split conformal calibration of per-variable standard deviations.
//!
//! A detector reports a mean and a standard deviation for each of the four
//! box variables. On a held-out calibration set we compute the standardized
//! residual `|y - ŷ| / σ̂` for every matched object and take the
//! `⌈(1-α)(M+1)⌉`-th smallest score as the multiplier `q̂_i`. Scaling `σ̂_i`
//! by `q̂_i` yields intervals `ŷ ± σ̂ q̂` with marginal coverage in
//! `[1-α, 1-α + 1/(M+1)]` under exchangeability.

use log::warn;
use serde::{Deserialize, Serialize};

use crate::association::match_by_iou;
use crate::domain::{gt_by_frame, Detection, GtObject, Scene, NUM_VARS};
use crate::error::{MotError, Result};
use crate::gaussian::check_sigma;

/// Floor applied to a quantile computed from an all-zero score set.
pub const QUANTILE_FLOOR: f64 = 1e-9;

/// The error rate at which the conformal multiplier of a correctly
/// specified Gaussian equals one: `α = 1 - (Φ(1) - Φ(-1))`.
pub const ONE_SIGMA_ALPHA: f64 = 0.317_310_507_862_914_1;

/// Ground truth paired with a predicted Gaussian for one variable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchedPair {
    pub gt_value: f64,
    pub pred_mean: f64,
    pub pred_sigma: f64,
    pub variable_index: usize,
}

/// Per-variable conformal multipliers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileSet {
    pub alpha: f64,
    pub calibration_count: usize,
    pub quantiles: Vec<f64>,
    pub clamped: Vec<bool>,
}

impl QuantileSet {
    pub fn validate(&self) -> Result<()> {
        check_alpha(self.alpha)?;
        if self.calibration_count == 0 {
            return Err(MotError::EmptyCalibration("calibration_count is zero".into()));
        }
        if self.quantiles.len() != NUM_VARS {
            return Err(MotError::Shape {
                expected: NUM_VARS,
                actual: self.quantiles.len(),
            });
        }
        if self.clamped.len() != NUM_VARS {
            return Err(MotError::Shape {
                expected: NUM_VARS,
                actual: self.clamped.len(),
            });
        }
        if let Some(q) = self.quantiles.iter().find(|q| !(q.is_finite() && **q > 0.0)) {
            return Err(MotError::Domain(format!("quantile must be positive, got {q}")));
        }
        Ok(())
    }

    /// All-ones multipliers; applying them is the identity.
    pub fn identity(alpha: f64) -> Self {
        QuantileSet {
            alpha,
            calibration_count: 1,
            quantiles: vec![1.0; NUM_VARS],
            clamped: vec![false; NUM_VARS],
        }
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(MotError::Domain(format!("alpha must lie in (0, 1), got {alpha}")))
    }
}

/// Standardized absolute residual `|y - ŷ| / σ̂`.
pub fn nonconformity_score(gt_value: f64, pred_mean: f64, pred_sigma: f64) -> Result<f64> {
    check_sigma(pred_sigma)?;
    Ok((gt_value - pred_mean).abs() / pred_sigma)
}

/// The `⌈(1-α)(M+1)⌉`-th smallest score (1-based, ties kept).
///
/// When that index exceeds `M` the maximum score is returned and the
/// second element is `true`.
pub fn conformal_quantile(scores: &[f64], alpha: f64) -> Result<(f64, bool)> {
    if scores.is_empty() {
        return Err(MotError::EmptyCalibration("no scores".into()));
    }
    check_alpha(alpha)?;
    if let Some(s) = scores.iter().find(|s| !(s.is_finite() && **s >= 0.0)) {
        return Err(MotError::Domain(format!("score must be finite and nonnegative, got {s}")));
    }
    let m = scores.len();
    let k = order_statistic_index(m, alpha);
    let mut sorted = scores.to_vec();
    sorted.sort_by(f64::total_cmp);
    if k > m {
        Ok((sorted[m - 1], true))
    } else {
        Ok((sorted[k - 1], false))
    }
}

/// `⌈(1-α)(M+1)⌉`, computed so that exact products such as `0.75 * 4`
/// do not round up past the integer.
fn order_statistic_index(m: usize, alpha: f64) -> usize {
    let raw = (1.0 - alpha) * (m as f64 + 1.0);
    let nearest = raw.round();
    let k = if (raw - nearest).abs() <= 1e-9 * raw.max(1.0) {
        nearest
    } else {
        raw.ceil()
    };
    (k as usize).max(1)
}

/// Pairs every variable of every IoU-matched detection with its ground truth.
pub fn collect_matched_pairs(
    scene: &Scene,
    gt: &[GtObject],
    match_iou: f64,
) -> Result<Vec<[MatchedPair; NUM_VARS]>> {
    let by_frame = gt_by_frame(gt);
    let mut out = Vec::new();
    for (frame, dets) in &scene.frames {
        let Some(truth) = by_frame.get(frame) else {
            continue;
        };
        let det_boxes: Vec<_> = dets.iter().map(Detection::bbox).collect();
        let gt_boxes: Vec<_> = truth.iter().map(|g| g.bbox).collect();
        for (di, gi, _) in match_by_iou(&det_boxes, &gt_boxes, match_iou)? {
            let d = &dets[di];
            let y = truth[gi].bbox.to_array();
            out.push(std::array::from_fn(|i| MatchedPair {
                gt_value: y[i],
                pred_mean: d.mean[i],
                pred_sigma: d.sigma[i],
                variable_index: i,
            }));
        }
    }
    Ok(out)
}

/// Builds a [`QuantileSet`] from per-variable matched pairs.
///
/// `calibration_count` is the number of pairs for the least populated
/// variable; for pairs produced by [`collect_matched_pairs`] all four are equal.
pub fn calibrate_pairs(pairs: &[MatchedPair], alpha: f64) -> Result<QuantileSet> {
    check_alpha(alpha)?;
    let mut scores: [Vec<f64>; NUM_VARS] = Default::default();
    for p in pairs {
        if p.variable_index >= NUM_VARS {
            return Err(MotError::Shape {
                expected: NUM_VARS,
                actual: p.variable_index + 1,
            });
        }
        scores[p.variable_index].push(nonconformity_score(p.gt_value, p.pred_mean, p.pred_sigma)?);
    }
    let mut quantiles = Vec::with_capacity(NUM_VARS);
    let mut clamped = Vec::with_capacity(NUM_VARS);
    for (i, s) in scores.iter().enumerate() {
        if s.is_empty() {
            return Err(MotError::EmptyCalibration(format!("no matched pairs for variable {i}")));
        }
        let (mut q, c) = conformal_quantile(s, alpha)?;
        if q <= 0.0 {
            warn!("variable {i}: degenerate conformal quantile 0, flooring at {QUANTILE_FLOOR:e}");
            q = QUANTILE_FLOOR;
        }
        quantiles.push(q);
        clamped.push(c);
    }
    let calibration_count = scores.iter().map(Vec::len).min().unwrap_or(0);
    Ok(QuantileSet {
        alpha,
        calibration_count,
        quantiles,
        clamped,
    })
}

/// Calibrates on a validation scene: per-frame Hungarian matching on
/// `1 - IoU` gated at `match_iou`, then one conformal quantile per variable.
pub fn calibrate(scene: &Scene, gt: &[GtObject], alpha: f64, match_iou: f64) -> Result<QuantileSet> {
    check_alpha(alpha)?;
    if scene.is_empty() {
        return Err(MotError::EmptyCalibration("calibration scene has no frames".into()));
    }
    let matched = collect_matched_pairs(scene, gt, match_iou)?;
    if matched.is_empty() {
        return Err(MotError::EmptyCalibration(format!(
            "no detection overlaps ground truth at IoU >= {match_iou}"
        )));
    }
    let flat: Vec<MatchedPair> = matched.into_iter().flatten().collect();
    calibrate_pairs(&flat, alpha)
}

/// Rectifies a detection's standard deviations: `σ_i ← σ_i · q̂_i`.
pub fn apply_quantiles(d: &Detection, q: &QuantileSet) -> Result<Detection> {
    if q.quantiles.len() != NUM_VARS {
        return Err(MotError::Shape {
            expected: NUM_VARS,
            actual: q.quantiles.len(),
        });
    }
    let mut out = *d;
    for (s, qi) in out.sigma.iter_mut().zip(&q.quantiles) {
        *s *= qi;
    }
    Ok(out)
}

/// The symmetric interval `ŷ ± σ̂ q`.
pub fn prediction_interval(pred_mean: f64, pred_sigma: f64, q: f64) -> Result<(f64, f64)> {
    check_sigma(pred_sigma)?;
    if !(q.is_finite() && q >= 0.0) {
        return Err(MotError::Domain(format!("quantile must be nonnegative, got {q}")));
    }
    let half = pred_sigma * q;
    Ok((pred_mean - half, pred_mean + half))
}

/// Per-variable fraction of test pairs covered by their conformal interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coverage {
    /// Coverage rate per variable; NaN where a variable had no pairs.
    pub rate: [f64; NUM_VARS],
    pub count: [usize; NUM_VARS],
}

pub fn empirical_coverage(test_pairs: &[MatchedPair], q: &QuantileSet) -> Result<Coverage> {
    if test_pairs.is_empty() {
        return Err(MotError::EmptyInput("no test pairs".into()));
    }
    if q.quantiles.len() != NUM_VARS {
        return Err(MotError::Shape {
            expected: NUM_VARS,
            actual: q.quantiles.len(),
        });
    }
    let mut hits = [0usize; NUM_VARS];
    let mut count = [0usize; NUM_VARS];
    for p in test_pairs {
        let i = p.variable_index;
        if i >= NUM_VARS {
            return Err(MotError::Shape {
                expected: NUM_VARS,
                actual: i + 1,
            });
        }
        let (lo, hi) = prediction_interval(p.pred_mean, p.pred_sigma, q.quantiles[i])?;
        count[i] += 1;
        if p.gt_value >= lo && p.gt_value <= hi {
            hits[i] += 1;
        }
    }
    let rate = std::array::from_fn(|i| {
        if count[i] == 0 {
            f64::NAN
        } else {
            hits[i] as f64 / count[i] as f64
        }
    });
    Ok(Coverage { rate, count })
}

/// Gaussian-to-Dirac KL regression loss `(y-ŷ)²/(2σ̂²) + ln σ̂`.
pub fn kl_regression_loss(gt_value: f64, pred_mean: f64, pred_sigma: f64) -> Result<f64> {
    check_sigma(pred_sigma)?;
    let e = gt_value - pred_mean;
    Ok(e * e / (2.0 * pred_sigma * pred_sigma) + pred_sigma.ln())
}
