use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::clear::frames;
use crate::association::match_by_iou;
use crate::domain::{BoxState, GtObject};
use crate::error::{MotError, Result};
use crate::tracker::TrackRecord;

/// Number of localization thresholds: α = 0.05, 0.10, …, 0.95.
pub const HOTA_STEPS: usize = 19;

pub fn hota_alphas() -> [f64; HOTA_STEPS] {
    std::array::from_fn(|k| (k + 1) as f64 / 20.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HotaAtAlpha {
    pub alpha: f64,
    pub hota: f64,
    pub deta: f64,
    pub assa: f64,
    pub tp: u64,
    pub fn_: u64,
    pub fp: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HotaScores {
    pub hota: f64,
    pub deta: f64,
    pub assa: f64,
    pub per_alpha: Vec<HotaAtAlpha>,
}

/// HOTA with per-frame Hungarian matching on `1 - IoU` gated at each α.
pub fn hota(gt: &[GtObject], records: &[TrackRecord]) -> Result<HotaScores> {
    if gt.is_empty() {
        return Err(MotError::Undefined("HOTA needs at least one ground-truth object".into()));
    }
    let views = frames(gt, records);
    let mut gt_len: BTreeMap<i64, u64> = BTreeMap::new();
    for g in gt {
        *gt_len.entry(g.object_id).or_default() += 1;
    }
    let mut tr_len: BTreeMap<u64, u64> = BTreeMap::new();
    for r in records {
        *tr_len.entry(r.track_id).or_default() += 1;
    }
    let total_gt = gt.len() as u64;
    let total_tr = records.len() as u64;

    let mut per_alpha = Vec::with_capacity(HOTA_STEPS);
    for alpha in hota_alphas() {
        let mut pairs: BTreeMap<(i64, u64), u64> = BTreeMap::new();
        let mut tp = 0u64;
        for view in views.values() {
            let gb: Vec<BoxState> = view.gt.iter().map(|g| g.bbox).collect();
            let tb: Vec<BoxState> = view.tracks.iter().map(|t| t.bbox).collect();
            for (gi, ti, _) in match_by_iou(&gb, &tb, alpha)? {
                *pairs
                    .entry((view.gt[gi].object_id, view.tracks[ti].track_id))
                    .or_default() += 1;
                tp += 1;
            }
        }
        let fn_ = total_gt - tp;
        let fp = total_tr - tp;
        let deta = tp as f64 / (tp + fn_ + fp) as f64;
        let assa = if tp == 0 {
            0.0
        } else {
            pairs
                .iter()
                .map(|(&(g, t), &tpa)| {
                    let denom = gt_len[&g] + tr_len[&t] - tpa;
                    tpa as f64 * tpa as f64 / denom as f64
                })
                .sum::<f64>()
                / tp as f64
        };
        per_alpha.push(HotaAtAlpha {
            alpha,
            hota: (deta * assa).sqrt(),
            deta,
            assa,
            tp,
            fn_,
            fp,
        });
    }
    let mean = |f: fn(&HotaAtAlpha) -> f64| per_alpha.iter().map(f).sum::<f64>() / HOTA_STEPS as f64;
    Ok(HotaScores {
        hota: mean(|a| a.hota),
        deta: mean(|a| a.deta),
        assa: mean(|a| a.assa),
        per_alpha,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(frame: u64, id: i64, cx: f64, w: f64) -> GtObject {
        GtObject {
            frame,
            object_id: id,
            bbox: BoxState::new(cx, 0.0, w, 2.0).unwrap(),
        }
    }

    fn t(frame: u64, id: u64, cx: f64, w: f64) -> TrackRecord {
        TrackRecord {
            frame,
            track_id: id,
            bbox: BoxState::new(cx, 0.0, w, 2.0).unwrap(),
            sigma: [1.0; 4],
            score: 0.9,
        }
    }

    #[test]
    fn perfect_sequence_scores_one() {
        let gt: Vec<_> = (0..4).map(|f| g(f, 1, f as f64, 2.0)).collect();
        let tr: Vec<_> = (0..4).map(|f| t(f, 3, f as f64, 2.0)).collect();
        let s = hota(&gt, &tr).unwrap();
        assert_eq!((s.hota, s.deta, s.assa), (1.0, 1.0, 1.0));
    }

    #[test]
    fn threshold_sweep_single_pair() {
        // 1-D overlap of width-4 boxes offset by 1.02: IoU = 2.98 / 5.02 ≈ 0.5936
        let gt = vec![g(0, 1, 0.0, 4.0)];
        let tr = vec![t(0, 1, 1.02, 4.0)];
        let s = hota(&gt, &tr).unwrap();
        for a in &s.per_alpha {
            let matched = a.tp == 1;
            assert_eq!(matched, a.alpha <= 0.55 + 1e-12, "alpha {}", a.alpha);
        }
        // exactly 0.6 is matched at the 0.60 grid point
        let s = hota(&gt, &[t(0, 1, 1.0, 4.0)]).unwrap();
        assert_eq!(s.per_alpha.iter().filter(|a| a.tp == 1).count(), 12);
    }

    #[test]
    fn false_positive_track_only_hurts_detection() {
        let gt: Vec<_> = (0..3).flat_map(|f| [g(f, 1, 0.0, 2.0), g(f, 2, 10.0, 2.0)]).collect();
        let mut tr: Vec<_> = (0..3).flat_map(|f| [t(f, 1, 0.0, 2.0), t(f, 2, 10.0, 2.0)]).collect();
        tr.push(t(1, 99, 40.0, 2.0));
        let s = hota(&gt, &tr).unwrap();
        for a in &s.per_alpha {
            assert_eq!(a.assa, 1.0);
            assert!((a.deta - 6.0 / 7.0).abs() < 1e-15);
            assert!((a.hota - (6.0f64 / 7.0).sqrt()).abs() < 1e-15);
        }
    }

    #[test]
    fn missed_frame_reduces_association() {
        // two objects over three frames, object 2 missed in frame 1
        let gt: Vec<_> = (0..3).flat_map(|f| [g(f, 1, 0.0, 2.0), g(f, 2, 10.0, 2.0)]).collect();
        let mut tr: Vec<_> = (0..3).map(|f| t(f, 1, 0.0, 2.0)).collect();
        tr.extend([0, 2].map(|f| t(f, 2, 10.0, 2.0)));
        let s = hota(&gt, &tr).unwrap();
        for a in &s.per_alpha {
            assert!((a.deta - 5.0 / 6.0).abs() < 1e-12);
            // object 2: TPA = 2, FNA = 1, FPA = 0, weight 2 of 5 TPs
            let assa = (3.0 * 1.0 + 2.0 * (2.0 / 3.0)) / 5.0;
            assert!((a.assa - assa).abs() < 1e-12);
            assert!((a.hota - (a.deta * a.assa).sqrt()).abs() < 1e-15);
        }
    }

    #[test]
    fn empty_gt_is_undefined() {
        assert!(hota(&[], &[]).is_err());
    }
}
