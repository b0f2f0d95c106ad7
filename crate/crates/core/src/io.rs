//! Line-delimited JSON records for detections, ground truth and tracks,
//! plus TOML run configs. Floats are written with shortest round-trip
//! formatting so files reproduce bit-exactly.

use std::collections::BTreeMap;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::conformal::QuantileSet;
use crate::domain::{BoxState, Detection, GtObject, Scene, SceneMeta, NUM_VARS};
use crate::error::{MotError, Result};
use crate::simgen::ScenarioConfig;
use crate::tracker::{TrackRecord, TrackerConfig};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DetectionLine {
    frame: u64,
    class_prob: f64,
    mean: [f64; NUM_VARS],
    sigma: [f64; NUM_VARS],
    score: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GtLine {
    frame: u64,
    id: i64,
    #[serde(rename = "box")]
    bbox: [f64; NUM_VARS],
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TrackLine {
    frame: u64,
    track_id: u64,
    #[serde(rename = "box")]
    bbox: [f64; NUM_VARS],
    sigma: [f64; NUM_VARS],
    score: f64,
}

fn parse_lines<T: DeserializeOwned>(text: &str) -> Result<Vec<(usize, T)>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str(line).map_err(|e| MotError::Parse {
            line: i + 1,
            msg: e.to_string(),
        })?;
        out.push((i + 1, rec));
    }
    Ok(out)
}

fn at_line(line: usize) -> impl Fn(MotError) -> MotError {
    move |e| MotError::Parse {
        line,
        msg: e.to_string(),
    }
}

fn to_lines<T: Serialize>(items: impl IntoIterator<Item = T>) -> String {
    let mut s = String::new();
    for it in items {
        s.push_str(&serde_json::to_string(&it).expect("plain records always serialize"));
        s.push('\n');
    }
    s
}

pub fn write_detections(scene: &Scene) -> String {
    to_lines(scene.frames.iter().flat_map(|(f, dets)| {
        dets.iter().map(move |d| DetectionLine {
            frame: *f,
            class_prob: d.class_prob,
            mean: d.mean,
            sigma: d.sigma,
            score: d.score,
        })
    }))
}

/// Parses a detection file into a scene. Frames between the first and last
/// listed frame that have no detections are present as empty frames so the
/// tracker still ages its tracklets through them.
pub fn read_detections(text: &str, meta: SceneMeta) -> Result<Scene> {
    let mut by_frame: BTreeMap<u64, Vec<Detection>> = BTreeMap::new();
    for (line, r) in parse_lines::<DetectionLine>(text)? {
        let d = Detection::new(r.class_prob, r.mean, r.sigma, r.score).map_err(at_line(line))?;
        by_frame.entry(r.frame).or_default().push(d);
    }
    let (Some(&first), Some(&last)) = (by_frame.keys().next(), by_frame.keys().next_back()) else {
        return Ok(Scene {
            frames: Vec::new(),
            meta,
        });
    };
    let frames = (first..=last)
        .map(|f| (f, by_frame.remove(&f).unwrap_or_default()))
        .collect();
    Scene::new(frames, meta)
}

pub fn write_gt(gt: &[GtObject]) -> String {
    to_lines(gt.iter().map(|g| GtLine {
        frame: g.frame,
        id: g.object_id,
        bbox: g.bbox.to_array(),
    }))
}

pub fn read_gt(text: &str) -> Result<Vec<GtObject>> {
    parse_lines::<GtLine>(text)?
        .into_iter()
        .map(|(line, r)| {
            Ok(GtObject {
                frame: r.frame,
                object_id: r.id,
                bbox: BoxState::from_array(r.bbox).map_err(at_line(line))?,
            })
        })
        .collect()
}

pub fn write_tracks(records: &[TrackRecord]) -> String {
    to_lines(records.iter().map(|r| TrackLine {
        frame: r.frame,
        track_id: r.track_id,
        bbox: r.bbox.to_array(),
        sigma: r.sigma,
        score: r.score,
    }))
}

pub fn read_tracks(text: &str) -> Result<Vec<TrackRecord>> {
    parse_lines::<TrackLine>(text)?
        .into_iter()
        .map(|(line, r)| {
            if let Some(s) = r.sigma.iter().find(|s| !(s.is_finite() && **s > 0.0)) {
                return Err(MotError::Parse {
                    line,
                    msg: format!("sigma must be positive, got {s}"),
                });
            }
            Ok(TrackRecord {
                frame: r.frame,
                track_id: r.track_id,
                bbox: BoxState::from_array(r.bbox).map_err(at_line(line))?,
                sigma: r.sigma,
                score: r.score,
            })
        })
        .collect()
}

pub fn write_quantiles(q: &QuantileSet) -> String {
    let mut s = serde_json::to_string_pretty(q).expect("quantile set always serializes");
    s.push('\n');
    s
}

pub fn read_quantiles(text: &str) -> Result<QuantileSet> {
    let q: QuantileSet = serde_json::from_str(text).map_err(|e| MotError::Parse {
        line: e.line(),
        msg: e.to_string(),
    })?;
    q.validate()?;
    Ok(q)
}

/// A run config file: `[scenario]` and `[tracker]` sections whose keys
/// mirror the struct fields. Missing keys take their defaults.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: ScenarioConfig,
    pub tracker: TrackerConfig,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| MotError::Config(e.to_string()))?;
        cfg.scenario.validate()?;
        cfg.tracker.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config always serializes")
    }
}
