//! Detection-to-tracklet association: IoU and NLL similarities, optimal
//! assignment, the SORT and ByteTrack base passes, and the NLL recovery pass
//! over whatever the base pass left unmatched.

mod hungarian;
mod nllai;
mod similarity;

pub use hungarian::{assignment_cost, hungarian};
pub use nllai::{nllai, snll_matrix};
pub use similarity::{iou, iou_matrix, snll};

use serde::{Deserialize, Serialize};

use crate::domain::{BoxState, Detection};
use crate::error::{MotError, Result};

/// Outcome of one association pass. Indices refer to the detection and
/// tracklet slices handed to the pass.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssociationResult {
    /// `(detection index, tracklet index)` pairs.
    pub matched: Vec<(usize, usize)>,
    pub unmatched_detections: Vec<usize>,
    pub unmatched_tracklets: Vec<usize>,
}

impl AssociationResult {
    /// Checks that every detection in `dets` and every tracklet below
    /// `n_tracks` appears exactly once (detections listed in `discarded`
    /// must appear nowhere).
    pub fn check_partition(&self, n_dets: usize, n_tracks: usize, discarded: &[usize]) -> bool {
        let mut seen_d = vec![0u8; n_dets];
        let mut seen_t = vec![0u8; n_tracks];
        for &(d, t) in &self.matched {
            if d >= n_dets || t >= n_tracks {
                return false;
            }
            seen_d[d] += 1;
            seen_t[t] += 1;
        }
        for &d in &self.unmatched_detections {
            if d >= n_dets {
                return false;
            }
            seen_d[d] += 1;
        }
        for &t in &self.unmatched_tracklets {
            if t >= n_tracks {
                return false;
            }
            seen_t[t] += 1;
        }
        let det_ok = seen_d
            .iter()
            .enumerate()
            .all(|(i, &c)| c == if discarded.contains(&i) { 0 } else { 1 });
        det_ok && seen_t.iter().all(|&c| c == 1)
    }
}

/// Default ByteTrack score thresholds.
pub const DEFAULT_SCORE_HIGH: f64 = 0.5;
pub const DEFAULT_SCORE_LOW: f64 = 0.1;

fn associate_subset(
    det_idx: &[usize],
    det_boxes: &[BoxState],
    track_idx: &[usize],
    preds: &[BoxState],
    iou_threshold: f64,
) -> Result<AssociationResult> {
    let rows: Vec<BoxState> = det_idx.iter().map(|&i| det_boxes[i]).collect();
    let cols: Vec<BoxState> = track_idx.iter().map(|&j| preds[j]).collect();
    let ious = iou_matrix(&rows, &cols);
    let cost: Vec<Vec<f64>> = ious
        .iter()
        .map(|r| r.iter().map(|v| 1.0 - v).collect())
        .collect();
    let mut det_used = vec![false; rows.len()];
    let mut trk_used = vec![false; cols.len()];
    let mut matched = Vec::new();
    for (r, c) in hungarian(&cost)? {
        if ious[r][c] >= iou_threshold {
            det_used[r] = true;
            trk_used[c] = true;
            matched.push((det_idx[r], track_idx[c]));
        }
    }
    Ok(AssociationResult {
        matched,
        unmatched_detections: det_idx
            .iter()
            .zip(&det_used)
            .filter(|(_, u)| !**u)
            .map(|(i, _)| *i)
            .collect(),
        unmatched_tracklets: track_idx
            .iter()
            .zip(&trk_used)
            .filter(|(_, u)| !**u)
            .map(|(j, _)| *j)
            .collect(),
    })
}

fn check_iou_threshold(t: f64) -> Result<()> {
    if (0.0..1.0).contains(&t) {
        Ok(())
    } else {
        Err(MotError::Config(format!("iou_threshold must lie in [0, 1), got {t}")))
    }
}

/// SORT association: Hungarian on `1 - IoU`, then pairs below the IoU
/// threshold are demoted to unmatched.
pub fn associate_base_sort(
    dets: &[Detection],
    preds: &[BoxState],
    iou_threshold: f64,
) -> Result<AssociationResult> {
    check_iou_threshold(iou_threshold)?;
    let boxes: Vec<BoxState> = dets.iter().map(Detection::bbox).collect();
    let det_idx: Vec<usize> = (0..dets.len()).collect();
    let trk_idx: Vec<usize> = (0..preds.len()).collect();
    associate_subset(&det_idx, &boxes, &trk_idx, preds, iou_threshold)
}

/// ByteTrack association. High-score detections are matched first against
/// every tracklet; low-score detections then compete for the tracklets left
/// over. Only high-score leftovers are reported as unmatched detections;
/// low-score leftovers and detections under `score_low` are dropped.
pub fn associate_base_byte(
    dets: &[Detection],
    preds: &[BoxState],
    score_high: f64,
    score_low: f64,
    iou_threshold: f64,
) -> Result<AssociationResult> {
    if !(0.0 <= score_low && score_low < score_high && score_high <= 1.0) {
        return Err(MotError::Config(format!(
            "need 0 <= score_low < score_high <= 1, got low={score_low} high={score_high}"
        )));
    }
    check_iou_threshold(iou_threshold)?;
    let boxes: Vec<BoxState> = dets.iter().map(Detection::bbox).collect();
    let high: Vec<usize> = (0..dets.len())
        .filter(|&i| dets[i].score >= score_high)
        .collect();
    let low: Vec<usize> = (0..dets.len())
        .filter(|&i| dets[i].score >= score_low && dets[i].score < score_high)
        .collect();
    let all_tracks: Vec<usize> = (0..preds.len()).collect();

    let first = associate_subset(&high, &boxes, &all_tracks, preds, iou_threshold)?;
    let second = associate_subset(
        &low,
        &boxes,
        &first.unmatched_tracklets,
        preds,
        iou_threshold,
    )?;

    let mut matched = first.matched;
    matched.extend(second.matched);
    Ok(AssociationResult {
        matched,
        unmatched_detections: first.unmatched_detections,
        unmatched_tracklets: second.unmatched_tracklets,
    })
}

/// Optimal matching on `1 - IoU` that prefers more pairs at or above
/// `threshold` over lower total cost. Returns `(row, col, iou)` for the
/// gated pairs only.
pub fn match_by_iou(
    rows: &[BoxState],
    cols: &[BoxState],
    threshold: f64,
) -> Result<Vec<(usize, usize, f64)>> {
    if rows.is_empty() || cols.is_empty() {
        return Ok(Vec::new());
    }
    let ious = iou_matrix(rows, cols);
    // each eligible pair costs < 1, so a penalty of min(R, C) + 1 per
    // ineligible pair makes the solver maximize the eligible count first
    let penalty = rows.len().min(cols.len()) as f64 + 1.0;
    let cost: Vec<Vec<f64>> = ious
        .iter()
        .map(|r| {
            r.iter()
                .map(|&v| if v >= threshold && v > 0.0 { 1.0 - v } else { penalty })
                .collect()
        })
        .collect();
    Ok(hungarian(&cost)?
        .into_iter()
        .filter(|&(r, c)| ious[r][c] >= threshold && ious[r][c] > 0.0)
        .map(|(r, c)| (r, c, ious[r][c]))
        .collect())
}
