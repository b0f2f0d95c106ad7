//! Plain SORT / ByteTrack trackers with fixed measurement noise and no
//! uncertainty handling. Kept separate from [`super::TrackerState`] so the
//! ablation path with every component off can be checked against it.

use super::{emit, record_score, BaseKind, TrackRecord, TrackerConfig};
use crate::association::{associate_base_byte, associate_base_sort};
use crate::domain::{BoxState, Detection, Scene, NUM_VARS};
use crate::error::{MotError, Result};
use crate::motion::{init_tracklet, kalman_update, predict, tracklet_box, Tracklet};

#[derive(Debug, Clone)]
pub struct BaselineTracker {
    cfg: TrackerConfig,
    tracks: Vec<(Tracklet, [f64; NUM_VARS], f64)>,
    next_id: u64,
    last_frame: Option<u64>,
}

impl BaselineTracker {
    /// Only the base, thresholds, lifecycle, `fixed_r`, and motion
    /// parameters of `cfg` are read.
    pub fn new(cfg: TrackerConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(BaselineTracker {
            cfg,
            tracks: Vec::new(),
            next_id: 1,
            last_frame: None,
        })
    }

    pub fn step(&mut self, frame: u64, dets: &[Detection]) -> Result<Vec<TrackRecord>> {
        if let Some(last) = self.last_frame {
            if frame <= last {
                return Err(MotError::Sequencing { last, got: frame });
            }
        }
        let cfg = &self.cfg;
        let r_sigma = cfg.fixed_r.map(f64::sqrt);

        for (f, _, _) in &mut self.tracks {
            *f = predict(f, &cfg.motion);
        }
        let preds: Vec<BoxState> = self
            .tracks
            .iter()
            .map(|(f, _, _)| tracklet_box(f))
            .collect::<Result<_>>()?;
        let assoc = match cfg.base {
            BaseKind::Sort => associate_base_sort(dets, &preds, cfg.iou_threshold)?,
            BaseKind::Bytetrack => associate_base_byte(
                dets,
                &preds,
                cfg.score_high,
                cfg.score_low,
                cfg.iou_threshold,
            )?,
        };
        for &(di, ti) in &assoc.matched {
            let d = &dets[di];
            let (f, sigma, score) = &mut self.tracks[ti];
            *f = kalman_update(f, d.mean, cfg.fixed_r, &cfg.motion)?;
            f.last_sigma = r_sigma;
            *sigma = d.sigma;
            *score = record_score(cfg.base, d);
        }
        let max_age = cfg.max_age;
        self.tracks.retain(|(f, _, _)| f.time_since_update <= max_age);
        for &di in &assoc.unmatched_detections {
            let d = &dets[di];
            let seed = Detection {
                sigma: r_sigma,
                ..*d
            };
            let f = init_tracklet(&seed, self.next_id, &cfg.motion)?;
            self.next_id += 1;
            self.tracks.push((f, d.sigma, record_score(cfg.base, d)));
        }
        self.last_frame = Some(frame);
        emit(
            frame,
            self.tracks.iter().map(|(f, s, sc)| (f, *s, *sc)),
            cfg.min_hits,
        )
    }
}

pub fn run_baseline(scene: &Scene, cfg: &TrackerConfig) -> Result<Vec<TrackRecord>> {
    scene.validate()?;
    let mut t = BaselineTracker::new(cfg.clone())?;
    let mut out = Vec::new();
    for (frame, dets) in &scene.frames {
        out.extend(t.step(*frame, dets)?);
    }
    Ok(out)
}
