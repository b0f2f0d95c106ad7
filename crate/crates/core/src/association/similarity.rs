use crate::domain::{corners_unchecked, BoxState, Detection, NUM_VARS};
use crate::error::Result;
use crate::gaussian::gaussian_logpdf;

/// Intersection over union of two axis-aligned boxes.
pub fn iou(a: &BoxState, b: &BoxState) -> f64 {
    let (ax0, ay0, ax1, ay1) = corners_unchecked(a);
    let (bx0, by0, bx1, by1) = corners_unchecked(b);
    let iw = (ax1.min(bx1) - ax0.max(bx0)).max(0.0);
    let ih = (ay1.min(by1) - ay0.max(by0)).max(0.0);
    let inter = iw * ih;
    if inter <= 0.0 {
        return 0.0;
    }
    // areas from the same corners keep iou(a, a) exactly 1
    let union = (ax1 - ax0) * (ay1 - ay0) + (bx1 - bx0) * (by1 - by0) - inter;
    (inter / union).clamp(0.0, 1.0)
}

/// `rows × cols` matrix of IoU values.
pub fn iou_matrix(rows: &[BoxState], cols: &[BoxState]) -> Vec<Vec<f64>> {
    rows.iter()
        .map(|r| cols.iter().map(|c| iou(r, c)).collect())
        .collect()
}

/// Mean per-variable Gaussian negative log density of a tracklet's
/// predicted observation under a detection's distribution.
pub fn snll(track_pred: &[f64; NUM_VARS], d: &Detection) -> Result<f64> {
    let mut total = 0.0;
    for i in 0..NUM_VARS {
        total += gaussian_logpdf(track_pred[i], d.mean[i], d.sigma[i])?;
    }
    Ok(-total / NUM_VARS as f64)
}
