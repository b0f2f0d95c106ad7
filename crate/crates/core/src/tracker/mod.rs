//! Per-frame tracking pipeline: optional conformal σ rectification, Kalman
//! prediction, base association (SORT or ByteTrack), optional NLL recovery
//! pass, measurement update, deletion, and birth.

mod baseline;

pub use baseline::{run_baseline, BaselineTracker};

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::association::{
    associate_base_byte, associate_base_sort, nllai, AssociationResult, DEFAULT_SCORE_HIGH,
    DEFAULT_SCORE_LOW,
};
use crate::conformal::{apply_quantiles, QuantileSet};
use crate::domain::{BoxState, Detection, Scene, NUM_VARS};
use crate::error::{MotError, Result};
use crate::motion::{
    init_tracklet, kalman_update, observed_state, predict, sdkf_update, tracklet_box,
    MotionParams, Tracklet,
};

/// NLL threshold used with the SORT base.
pub const DEFAULT_TAU_SORT: f64 = 1000.0;
/// NLL threshold used with the ByteTrack base.
pub const DEFAULT_TAU_BYTETRACK: f64 = 80.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaseKind {
    Sort,
    Bytetrack,
}

impl BaseKind {
    pub fn default_tau(self) -> f64 {
        match self {
            BaseKind::Sort => DEFAULT_TAU_SORT,
            BaseKind::Bytetrack => DEFAULT_TAU_BYTETRACK,
        }
    }
}

impl std::str::FromStr for BaseKind {
    type Err = MotError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sort" => Ok(BaseKind::Sort),
            "bytetrack" => Ok(BaseKind::Bytetrack),
            other => Err(MotError::Config(format!("unknown tracker base {other:?}"))),
        }
    }
}

impl std::fmt::Display for BaseKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            BaseKind::Sort => "sort",
            BaseKind::Bytetrack => "bytetrack",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrackerConfig {
    pub base: BaseKind,
    /// Rectify detection σ̂ with conformal quantiles.
    pub use_cp: bool,
    /// Use detection σ̂² as measurement noise instead of `fixed_r`.
    pub use_sdkf: bool,
    /// Run the NLL recovery pass after base association.
    pub use_nllai: bool,
    pub tau: f64,
    pub iou_threshold: f64,
    pub score_high: f64,
    pub score_low: f64,
    /// Tracklets unmatched for more than this many frames are deleted.
    pub max_age: u32,
    pub min_hits: u32,
    /// Measurement variances used when `use_sdkf` is off.
    pub fixed_r: [f64; NUM_VARS],
    pub motion: MotionParams,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        TrackerConfig::mot_cup(BaseKind::Sort)
    }
}

impl TrackerConfig {
    /// The base tracker with every uncertainty component switched off.
    pub fn baseline(base: BaseKind) -> Self {
        TrackerConfig {
            use_cp: false,
            use_sdkf: false,
            use_nllai: false,
            ..TrackerConfig::mot_cup(base)
        }
    }

    /// Full pipeline with every uncertainty component on.
    pub fn mot_cup(base: BaseKind) -> Self {
        TrackerConfig {
            base,
            use_cp: true,
            use_sdkf: true,
            use_nllai: true,
            tau: base.default_tau(),
            iou_threshold: 0.3,
            score_high: DEFAULT_SCORE_HIGH,
            score_low: DEFAULT_SCORE_LOW,
            max_age: 2,
            min_hits: 2,
            fixed_r: [1.0; NUM_VARS],
            motion: MotionParams::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_age < 1 || self.min_hits < 1 {
            return Err(MotError::Config("max_age and min_hits must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.iou_threshold) {
            return Err(MotError::Config(format!(
                "iou_threshold must lie in [0, 1), got {}",
                self.iou_threshold
            )));
        }
        if !(0.0 <= self.score_low && self.score_low < self.score_high && self.score_high <= 1.0) {
            return Err(MotError::Config(format!(
                "need 0 <= score_low < score_high <= 1, got {} / {}",
                self.score_low, self.score_high
            )));
        }
        if !self.tau.is_finite() {
            return Err(MotError::Config(format!("tau must be finite, got {}", self.tau)));
        }
        if self.fixed_r.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            return Err(MotError::Config(format!("fixed_r must be positive, got {:?}", self.fixed_r)));
        }
        self.motion.validate()
    }
}

/// One emitted track box for one frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackRecord {
    pub frame: u64,
    pub track_id: u64,
    pub bbox: BoxState,
    /// σ̂ of the last associated detection (after rectification when enabled).
    pub sigma: [f64; NUM_VARS],
    pub score: f64,
}

#[derive(Debug, Clone)]
struct Track {
    filter: Tracklet,
    sigma: [f64; NUM_VARS],
    score: f64,
}

/// Mutable tracker state; owned by one thread.
#[derive(Debug, Clone)]
pub struct TrackerState {
    cfg: TrackerConfig,
    quantiles: Option<QuantileSet>,
    tracks: Vec<Track>,
    next_id: u64,
    last_frame: Option<u64>,
}

impl TrackerState {
    pub fn new(cfg: TrackerConfig, quantiles: Option<QuantileSet>) -> Result<Self> {
        cfg.validate()?;
        if cfg.use_cp {
            match &quantiles {
                None => {
                    return Err(MotError::Config(
                        "conformal rectification enabled but no quantiles supplied".into(),
                    ))
                }
                Some(q) => q.validate()?,
            }
        }
        Ok(TrackerState {
            cfg,
            quantiles,
            tracks: Vec::new(),
            next_id: 1,
            last_frame: None,
        })
    }

    pub fn config(&self) -> &TrackerConfig {
        &self.cfg
    }

    pub fn tracklets(&self) -> impl Iterator<Item = &Tracklet> {
        self.tracks.iter().map(|t| &t.filter)
    }

    /// Processes one frame and returns the confirmed tracks updated in it.
    pub fn step(&mut self, frame: u64, dets: &[Detection]) -> Result<Vec<TrackRecord>> {
        if let Some(last) = self.last_frame {
            if frame <= last {
                return Err(MotError::Sequencing { last, got: frame });
            }
        }
        for d in dets {
            d.validate()?;
        }
        let cfg = &self.cfg;

        let dets: Vec<Detection> = match (&self.quantiles, cfg.use_cp) {
            (Some(q), true) => dets
                .iter()
                .map(|d| apply_quantiles(d, q))
                .collect::<Result<_>>()?,
            _ => dets.to_vec(),
        };

        for t in &mut self.tracks {
            t.filter = predict(&t.filter, &cfg.motion);
        }
        let preds: Vec<BoxState> = self
            .tracks
            .iter()
            .map(|t| tracklet_box(&t.filter))
            .collect::<Result<_>>()?;

        let mut assoc: AssociationResult = match cfg.base {
            BaseKind::Sort => associate_base_sort(&dets, &preds, cfg.iou_threshold)?,
            BaseKind::Bytetrack => associate_base_byte(
                &dets,
                &preds,
                cfg.score_high,
                cfg.score_low,
                cfg.iou_threshold,
            )?,
        };
        if cfg.use_nllai {
            let obs: Vec<[f64; NUM_VARS]> =
                self.tracks.iter().map(|t| observed_state(&t.filter)).collect();
            assoc = nllai(&assoc, &dets, &obs, cfg.tau)?;
        }

        let fixed_sigma = cfg.fixed_r.map(f64::sqrt);
        for &(di, ti) in &assoc.matched {
            let d = &dets[di];
            let track = &mut self.tracks[ti];
            track.filter = if cfg.use_sdkf {
                sdkf_update(&track.filter, d, &cfg.motion)?
            } else {
                let mut f = kalman_update(&track.filter, d.mean, cfg.fixed_r, &cfg.motion)?;
                f.last_sigma = fixed_sigma;
                f
            };
            track.sigma = d.sigma;
            track.score = record_score(cfg.base, d);
        }

        let max_age = cfg.max_age;
        self.tracks.retain(|t| t.filter.time_since_update <= max_age);

        for &di in &assoc.unmatched_detections {
            let d = &dets[di];
            let seed = if cfg.use_sdkf {
                *d
            } else {
                Detection {
                    sigma: fixed_sigma,
                    ..*d
                }
            };
            let filter = init_tracklet(&seed, self.next_id, &cfg.motion)?;
            self.next_id += 1;
            self.tracks.push(Track {
                filter,
                sigma: d.sigma,
                score: record_score(cfg.base, d),
            });
        }
        self.last_frame = Some(frame);

        emit(frame, self.tracks.iter().map(|t| (&t.filter, t.sigma, t.score)), cfg.min_hits)
    }
}

fn record_score(base: BaseKind, d: &Detection) -> f64 {
    match base {
        BaseKind::Sort => d.class_prob,
        BaseKind::Bytetrack => d.score,
    }
}

fn emit<'a>(
    frame: u64,
    tracks: impl Iterator<Item = (&'a Tracklet, [f64; NUM_VARS], f64)>,
    min_hits: u32,
) -> Result<Vec<TrackRecord>> {
    tracks
        .filter(|(f, _, _)| f.time_since_update == 0 && (f.hits >= min_hits || f.age < min_hits))
        .map(|(f, sigma, score)| {
            Ok(TrackRecord {
                frame,
                track_id: f.track_id,
                bbox: tracklet_box(f)?,
                sigma,
                score,
            })
        })
        .collect()
}

/// Runs a whole scene, returning records and per-frame wall-clock seconds.
pub fn run_scene(
    scene: &Scene,
    cfg: &TrackerConfig,
    quantiles: Option<&QuantileSet>,
) -> Result<(Vec<TrackRecord>, Vec<f64>)> {
    scene.validate()?;
    let mut state = TrackerState::new(cfg.clone(), quantiles.cloned())?;
    let mut records = Vec::new();
    let mut timings = Vec::with_capacity(scene.len());
    for (frame, dets) in &scene.frames {
        let start = Instant::now();
        let out = state.step(*frame, dets)?;
        timings.push(start.elapsed().as_secs_f64());
        records.extend(out);
    }
    Ok((records, timings))
}

/// Like [`run_scene`] without timing; usable where no clock is available.
pub fn track_scene(
    scene: &Scene,
    cfg: &TrackerConfig,
    quantiles: Option<&QuantileSet>,
) -> Result<Vec<TrackRecord>> {
    scene.validate()?;
    let mut state = TrackerState::new(cfg.clone(), quantiles.cloned())?;
    let mut records = Vec::new();
    for (frame, dets) in &scene.frames {
        records.extend(state.step(*frame, dets)?);
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::SceneMeta;

    fn det(cx: f64, cy: f64) -> Detection {
        Detection::new(0.9, [cx, cy, 2.0, 2.0], [0.5; 4], 0.9).unwrap()
    }

    #[test]
    fn construction_rules() {
        let s = TrackerState::new(TrackerConfig::baseline(BaseKind::Sort), None).unwrap();
        assert_eq!(s.tracklets().count(), 0);
        let err = TrackerState::new(TrackerConfig::mot_cup(BaseKind::Sort), None);
        assert!(matches!(err, Err(MotError::Config(_))));
        let mut a = TrackerState::new(TrackerConfig::baseline(BaseKind::Sort), None).unwrap();
        let mut b = a.clone();
        let ra = a.step(0, &[det(0.0, 0.0)]).unwrap();
        let rb = b.step(0, &[det(50.0, 0.0)]).unwrap();
        assert_eq!(ra[0].track_id, 1);
        assert_eq!(rb[0].track_id, 1);
    }

    #[test]
    fn rejects_bad_config() {
        let mut cfg = TrackerConfig::baseline(BaseKind::Sort);
        cfg.max_age = 0;
        assert!(TrackerState::new(cfg, None).is_err());
        let mut cfg = TrackerConfig::baseline(BaseKind::Bytetrack);
        cfg.score_low = 0.7;
        assert!(TrackerState::new(cfg, None).is_err());
    }

    #[test]
    fn stationary_objects_keep_ids() {
        let mut s = TrackerState::new(TrackerConfig::baseline(BaseKind::Sort), None).unwrap();
        let dets = [det(0.0, 0.0), det(10.0, 10.0)];
        let first = s.step(0, &dets).unwrap();
        assert_eq!(first.iter().map(|r| r.track_id).collect::<Vec<_>>(), vec![1, 2]);
        for f in 1..5 {
            let out = s.step(f, &dets).unwrap();
            assert_eq!(out.iter().map(|r| r.track_id).collect::<Vec<_>>(), vec![1, 2]);
        }
        assert_eq!(s.tracklets().count(), 2);
    }

    #[test]
    fn isolated_detection_spawns_track() {
        let mut s = TrackerState::new(TrackerConfig::baseline(BaseKind::Sort), None).unwrap();
        s.step(0, &[det(0.0, 0.0)]).unwrap();
        let out = s.step(1, &[det(0.0, 0.0), det(40.0, 40.0)]).unwrap();
        assert!(out.iter().any(|r| r.track_id == 2 && r.bbox.cx == 40.0));
    }

    #[test]
    fn stale_tracks_are_deleted() {
        let cfg = TrackerConfig::baseline(BaseKind::Sort);
        let max_age = cfg.max_age as u64;
        let mut s = TrackerState::new(cfg, None).unwrap();
        s.step(0, &[det(0.0, 0.0)]).unwrap();
        s.step(1, &[det(0.0, 0.0)]).unwrap();
        for f in 2..2 + max_age {
            assert!(s.step(f, &[]).unwrap().is_empty());
            assert_eq!(s.tracklets().count(), 1);
        }
        s.step(2 + max_age, &[]).unwrap();
        assert_eq!(s.tracklets().count(), 0);
        // a later detection at the same place gets a fresh id
        let out = s.step(3 + max_age, &[det(0.0, 0.0)]).unwrap();
        assert_eq!(out[0].track_id, 2);
    }

    #[test]
    fn out_of_order_frames_rejected() {
        let mut s = TrackerState::new(TrackerConfig::baseline(BaseKind::Sort), None).unwrap();
        s.step(5, &[]).unwrap();
        assert!(matches!(s.step(5, &[]), Err(MotError::Sequencing { .. })));
    }

    #[test]
    fn empty_scene_gives_no_records() {
        let scene = Scene::new(vec![], SceneMeta::default()).unwrap();
        let (r, t) = run_scene(&scene, &TrackerConfig::baseline(BaseKind::Sort), None).unwrap();
        assert!(r.is_empty() && t.is_empty());
    }
}
