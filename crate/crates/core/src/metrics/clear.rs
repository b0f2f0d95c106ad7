use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::association::{iou, match_by_iou};
use crate::domain::{BoxState, GtObject};
use crate::error::{MotError, Result};
use crate::tracker::TrackRecord;

/// CLEAR MOT counts and scores. MOTP is the mean IoU over matches.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClearMetrics {
    pub mota: f64,
    pub motp: f64,
    pub false_positives: u64,
    pub false_negatives: u64,
    pub id_switches: u64,
    pub matches: u64,
    pub gt_count: u64,
}

pub(crate) struct FrameView<'a> {
    pub gt: Vec<&'a GtObject>,
    pub tracks: Vec<&'a TrackRecord>,
}

pub(crate) fn frames<'a>(gt: &'a [GtObject], records: &'a [TrackRecord]) -> BTreeMap<u64, FrameView<'a>> {
    let mut map: BTreeMap<u64, FrameView<'a>> = BTreeMap::new();
    for g in gt {
        map.entry(g.frame)
            .or_insert_with(|| FrameView { gt: vec![], tracks: vec![] })
            .gt
            .push(g);
    }
    for r in records {
        map.entry(r.frame)
            .or_insert_with(|| FrameView { gt: vec![], tracks: vec![] })
            .tracks
            .push(r);
    }
    map
}

/// CLEAR MOT evaluation. Correspondences from the previous frame are kept
/// while their IoU stays at or above `iou_threshold`; the remaining objects
/// are matched by Hungarian assignment on `1 - IoU` under the same gate. An
/// identity switch is counted whenever a ground-truth object is matched to a
/// different track than the one it was last matched to.
pub fn clear_metrics(gt: &[GtObject], records: &[TrackRecord], iou_threshold: f64) -> Result<ClearMetrics> {
    if !(iou_threshold > 0.0 && iou_threshold < 1.0) {
        return Err(MotError::Domain(format!(
            "iou_threshold must lie in (0, 1), got {iou_threshold}"
        )));
    }
    if gt.is_empty() {
        return Err(MotError::Undefined("MOTA needs at least one ground-truth object".into()));
    }
    let mut prev: HashMap<i64, u64> = HashMap::new();
    let mut last_match: HashMap<i64, u64> = HashMap::new();
    let (mut fp, mut fn_, mut idsw, mut matches) = (0u64, 0u64, 0u64, 0u64);
    let mut iou_sum = 0.0;

    for view in frames(gt, records).values() {
        let mut current: Vec<(usize, usize, f64)> = Vec::new();
        let mut gt_used = vec![false; view.gt.len()];
        let mut tr_used = vec![false; view.tracks.len()];
        for (gi, g) in view.gt.iter().enumerate() {
            let Some(&tid) = prev.get(&g.object_id) else {
                continue;
            };
            if let Some(ti) = view
                .tracks
                .iter()
                .position(|t| t.track_id == tid)
                .filter(|&ti| !tr_used[ti])
            {
                let v = iou(&g.bbox, &view.tracks[ti].bbox);
                if v >= iou_threshold {
                    gt_used[gi] = true;
                    tr_used[ti] = true;
                    current.push((gi, ti, v));
                }
            }
        }
        let free_gt: Vec<usize> = (0..view.gt.len()).filter(|&i| !gt_used[i]).collect();
        let free_tr: Vec<usize> = (0..view.tracks.len()).filter(|&i| !tr_used[i]).collect();
        let gboxes: Vec<BoxState> = free_gt.iter().map(|&i| view.gt[i].bbox).collect();
        let tboxes: Vec<BoxState> = free_tr.iter().map(|&i| view.tracks[i].bbox).collect();
        for (a, b, v) in match_by_iou(&gboxes, &tboxes, iou_threshold)? {
            current.push((free_gt[a], free_tr[b], v));
        }

        prev.clear();
        for &(gi, ti, v) in &current {
            let gid = view.gt[gi].object_id;
            let tid = view.tracks[ti].track_id;
            if let Some(&old) = last_match.get(&gid) {
                if old != tid {
                    idsw += 1;
                }
            }
            last_match.insert(gid, tid);
            prev.insert(gid, tid);
            iou_sum += v;
        }
        let m = current.len() as u64;
        matches += m;
        fp += view.tracks.len() as u64 - m;
        fn_ += view.gt.len() as u64 - m;
    }

    let gt_count = gt.len() as u64;
    Ok(ClearMetrics {
        mota: 1.0 - (fp + fn_ + idsw) as f64 / gt_count as f64,
        motp: if matches > 0 { iou_sum / matches as f64 } else { 0.0 },
        false_positives: fp,
        false_negatives: fn_,
        id_switches: idsw,
        matches,
        gt_count,
    })
}
