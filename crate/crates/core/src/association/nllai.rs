use super::{hungarian, snll, AssociationResult};
use crate::domain::{Detection, NUM_VARS};
use crate::error::Result;

/// SNLL similarity between unmatched detections (rows) and unmatched
/// tracklets (columns), evaluated at each tracklet's predicted observation.
pub fn snll_matrix(
    det_idx: &[usize],
    track_idx: &[usize],
    dets: &[Detection],
    track_preds: &[[f64; NUM_VARS]],
) -> Result<Vec<Vec<f64>>> {
    det_idx
        .iter()
        .map(|&d| {
            track_idx
                .iter()
                .map(|&t| snll(&track_preds[t], &dets[d]))
                .collect()
        })
        .collect()
}

/// Second association pass over the leftovers of a base pass.
///
/// Builds the SNLL matrix between unmatched detections and unmatched
/// tracklets, solves it with the Hungarian method, and keeps the pairs whose
/// SNLL does not exceed `tau`. Pairs already in `base.matched` are passed
/// through untouched.
pub fn nllai(
    base: &AssociationResult,
    dets: &[Detection],
    track_preds: &[[f64; NUM_VARS]],
    tau: f64,
) -> Result<AssociationResult> {
    let ud = &base.unmatched_detections;
    let ut = &base.unmatched_tracklets;
    if ud.is_empty() || ut.is_empty() {
        return Ok(base.clone());
    }
    let sim = snll_matrix(ud, ut, dets, track_preds)?;
    let mut det_used = vec![false; ud.len()];
    let mut trk_used = vec![false; ut.len()];
    let mut matched = base.matched.clone();
    for (r, c) in hungarian(&sim)? {
        if sim[r][c] > tau {
            continue;
        }
        det_used[r] = true;
        trk_used[c] = true;
        matched.push((ud[r], ut[c]));
    }
    Ok(AssociationResult {
        matched,
        unmatched_detections: ud
            .iter()
            .zip(&det_used)
            .filter(|(_, u)| !**u)
            .map(|(i, _)| *i)
            .collect(),
        unmatched_tracklets: ut
            .iter()
            .zip(&trk_used)
            .filter(|(_, u)| !**u)
            .map(|(j, _)| *j)
            .collect(),
    })
}
