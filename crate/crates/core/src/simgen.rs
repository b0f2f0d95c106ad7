//! Seeded synthetic scenes: ground-truth trajectories and an emulated
//! detector with deliberately miscalibrated uncertainty.
//!
//! Randomness comes from `ChaCha8Rng::seed_from_u64(seed)`; Gaussian draws use
//! `rand_distr::StandardNormal`, clutter counts `rand_distr::Poisson`. Draws
//! happen in a fixed order (per frame: every object's motion and detection
//! draws in id order, then clutter), and every object consumes the same
//! number of draws whether or not its detection is dropped.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::conformal::MatchedPair;
use crate::domain::{gt_by_frame, BoxState, Detection, GtObject, Scene, SceneMeta, NUM_VARS};
use crate::error::{MotError, Result};

/// Reported standard deviations never drop below this value.
pub const MIN_REPORTED_SIGMA: f64 = 1e-6;
/// Detected extents never drop below this value, meters.
pub const MIN_DETECTED_EXTENT: f64 = 1e-2;
/// Heading random-walk step, radians per frame.
pub const HEADING_JITTER: f64 = 0.05;
/// Fraction of a frame's objects that must sit in a zone for the frame to
/// count as highly occluded.
pub const HIGH_OCCLUSION_FRACTION: f64 = 0.25;

const BASE_SCORE: f64 = 0.9;
const CLUTTER_SCORE: f64 = 0.3;

/// A region that degrades detections whose true center lies inside it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OcclusionZone {
    pub zone: BoxState,
    pub noise_multiplier: f64,
    pub drop_prob_in_zone: f64,
    pub score_penalty: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub n_objects: usize,
    pub n_frames: usize,
    pub field_size: f64,
    /// Meters per frame.
    pub speed_range: (f64, f64),
    pub box_size_range: (f64, f64),
    /// True detector noise standard deviation per variable.
    pub sigma_true_base: [f64; NUM_VARS],
    /// Ratio of reported to true standard deviation.
    pub miscalibration: f64,
    pub occlusion_zones: Vec<OcclusionZone>,
    pub base_drop_prob: f64,
    /// Expected false positives per frame.
    pub clutter_rate: f64,
    pub frame_rate: f64,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            n_objects: 20,
            n_frames: 100,
            field_size: 100.0,
            speed_range: (0.3, 1.5),
            box_size_range: (2.0, 5.0),
            sigma_true_base: [0.3, 0.3, 0.15, 0.15],
            miscalibration: 0.5,
            occlusion_zones: grid_zones(2, 100.0),
            base_drop_prob: 0.05,
            clutter_rate: 1.0,
            frame_rate: 10.0,
            seed: 0,
        }
    }
}

/// `n` square zones of side `field / 4` spread over the field on a fixed
/// pattern, each inflating noise 4×, dropping 30% of detections, and
/// cutting scores by 0.5.
pub fn grid_zones(n: usize, field: f64) -> Vec<OcclusionZone> {
    const CENTERS: [(f64, f64); 9] = [
        (0.25, 0.25),
        (0.75, 0.75),
        (0.75, 0.25),
        (0.25, 0.75),
        (0.5, 0.5),
        (0.5, 0.125),
        (0.5, 0.875),
        (0.125, 0.5),
        (0.875, 0.5),
    ];
    CENTERS
        .iter()
        .cycle()
        .take(n)
        .map(|&(x, y)| OcclusionZone {
            zone: BoxState {
                cx: x * field,
                cy: y * field,
                w: field / 4.0,
                h: field / 4.0,
            },
            noise_multiplier: 4.0,
            drop_prob_in_zone: 0.3,
            score_penalty: 0.5,
        })
        .collect()
}

fn prob(p: f64) -> bool {
    (0.0..=1.0).contains(&p)
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        let err = |m: &str| Err(MotError::Config(m.to_string()));
        if self.n_objects == 0 || self.n_frames == 0 {
            return err("n_objects and n_frames must be positive");
        }
        if !(self.field_size.is_finite() && self.field_size > 0.0) {
            return err("field_size must be positive");
        }
        let (s0, s1) = self.speed_range;
        if !(s0 >= 0.0 && s0 <= s1 && s1.is_finite()) {
            return err("speed_range must be ordered and nonnegative");
        }
        let (b0, b1) = self.box_size_range;
        if !(b0 > 0.0 && b0 <= b1 && b1 < self.field_size) {
            return err("box_size_range must be ordered, positive, and smaller than the field");
        }
        if self.sigma_true_base.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
            return err("sigma_true_base must be finite and nonnegative");
        }
        if !(self.miscalibration.is_finite() && self.miscalibration > 0.0) {
            return err("miscalibration must be positive");
        }
        if !prob(self.base_drop_prob) {
            return err("base_drop_prob must lie in [0, 1]");
        }
        if !(self.clutter_rate.is_finite() && self.clutter_rate >= 0.0) {
            return err("clutter_rate must be nonnegative");
        }
        if !(self.frame_rate.is_finite() && self.frame_rate > 0.0) {
            return err("frame_rate must be positive");
        }
        for z in &self.occlusion_zones {
            z.zone.validate()?;
            if !(z.noise_multiplier.is_finite() && z.noise_multiplier >= 1.0) {
                return err("zone noise_multiplier must be >= 1");
            }
            if !prob(z.drop_prob_in_zone) || !prob(z.score_penalty) {
                return err("zone probabilities must lie in [0, 1]");
            }
        }
        Ok(())
    }

    fn zone_of(&self, x: f64, y: f64) -> Option<&OcclusionZone> {
        self.occlusion_zones.iter().find(|z| z.zone.contains_point(x, y))
    }
}

struct Mover {
    id: i64,
    x: f64,
    y: f64,
    w: f64,
    h: f64,
    speed: f64,
    heading: f64,
}

impl Mover {
    fn step(&mut self, field: f64, jitter: f64) {
        self.heading += jitter;
        self.x += self.speed * self.heading.cos();
        self.y += self.speed * self.heading.sin();
        if self.x < 0.0 || self.x > field {
            self.x = reflect(self.x, field);
            self.heading = std::f64::consts::PI - self.heading;
        }
        if self.y < 0.0 || self.y > field {
            self.y = reflect(self.y, field);
            self.heading = -self.heading;
        }
    }
}

fn reflect(v: f64, field: f64) -> f64 {
    let v = if v < 0.0 { -v } else if v > field { 2.0 * field - v } else { v };
    v.clamp(0.0, field)
}

fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        rng.gen_range(lo..hi)
    } else {
        lo
    }
}

/// Generates ground truth and emulated detections for every frame.
pub fn generate_scene(cfg: &ScenarioConfig) -> Result<(Vec<GtObject>, Scene)> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let field = cfg.field_size;
    let c = cfg.miscalibration;

    let mut movers: Vec<Mover> = (0..cfg.n_objects)
        .map(|k| Mover {
            id: k as i64 + 1,
            x: uniform(&mut rng, 0.0, field),
            y: uniform(&mut rng, 0.0, field),
            w: uniform(&mut rng, cfg.box_size_range.0, cfg.box_size_range.1),
            h: uniform(&mut rng, cfg.box_size_range.0, cfg.box_size_range.1),
            speed: uniform(&mut rng, cfg.speed_range.0, cfg.speed_range.1),
            heading: uniform(&mut rng, 0.0, std::f64::consts::TAU),
        })
        .collect();

    let clutter = if cfg.clutter_rate > 0.0 {
        Some(Poisson::new(cfg.clutter_rate).map_err(|e| MotError::Config(e.to_string()))?)
    } else {
        None
    };
    let clutter_sigma = cfg.sigma_true_base.map(|s| (c * s).max(MIN_REPORTED_SIGMA));

    let mut gt = Vec::with_capacity(cfg.n_objects * cfg.n_frames);
    let mut frames = Vec::with_capacity(cfg.n_frames);
    for frame in 0..cfg.n_frames as u64 {
        let mut dets = Vec::new();
        for m in &mut movers {
            let jitter: f64 = rng.sample(StandardNormal);
            if frame > 0 {
                m.step(field, HEADING_JITTER * jitter);
            }
            let truth = BoxState {
                cx: m.x,
                cy: m.y,
                w: m.w,
                h: m.h,
            };
            gt.push(GtObject {
                frame,
                object_id: m.id,
                bbox: truth,
            });

            let drop_draw: f64 = rng.gen();
            let z: [f64; NUM_VARS] = std::array::from_fn(|_| rng.sample(StandardNormal));
            let zone = cfg.zone_of(m.x, m.y);
            let (mult, drop, penalty) = match zone {
                Some(z) => (z.noise_multiplier, z.drop_prob_in_zone, z.score_penalty),
                None => (1.0, cfg.base_drop_prob, 0.0),
            };
            if drop_draw < drop {
                continue;
            }
            let t = truth.to_array();
            let mut mean = [0.0; NUM_VARS];
            let mut sigma = [0.0; NUM_VARS];
            for i in 0..NUM_VARS {
                let s_eff = cfg.sigma_true_base[i] * mult;
                mean[i] = t[i] + s_eff * z[i];
                sigma[i] = (c * s_eff).max(MIN_REPORTED_SIGMA);
            }
            mean[2] = mean[2].max(MIN_DETECTED_EXTENT);
            mean[3] = mean[3].max(MIN_DETECTED_EXTENT);
            let score = (BASE_SCORE - penalty).clamp(0.05, 1.0);
            dets.push(Detection {
                class_prob: score,
                mean,
                sigma,
                score,
            });
        }
        if let Some(p) = &clutter {
            let n = p.sample(&mut rng) as usize;
            for _ in 0..n {
                let mean = [
                    uniform(&mut rng, 0.0, field),
                    uniform(&mut rng, 0.0, field),
                    uniform(&mut rng, cfg.box_size_range.0, cfg.box_size_range.1),
                    uniform(&mut rng, cfg.box_size_range.0, cfg.box_size_range.1),
                ];
                dets.push(Detection {
                    class_prob: CLUTTER_SCORE,
                    mean,
                    sigma: clutter_sigma,
                    score: CLUTTER_SCORE,
                });
            }
        }
        frames.push((frame, dets));
    }
    let meta = SceneMeta {
        frame_rate: cfg.frame_rate,
        field_extent: field,
        seed: Some(cfg.seed),
    };
    Ok((gt, Scene::new(frames, meta)?))
}

/// Draws `count` matched objects straight from the detector noise model,
/// bypassing geometry: per variable, a true std `σ = base_i · u` with
/// `u ~ U(0.5, 2)`, residual `σ z`, reported std `c σ`.
pub fn sample_matched_pairs(
    count: usize,
    sigma_true_base: [f64; NUM_VARS],
    miscalibration: f64,
    seed: u64,
) -> Result<Vec<[MatchedPair; NUM_VARS]>> {
    if !(miscalibration.is_finite() && miscalibration > 0.0) {
        return Err(MotError::Config("miscalibration must be positive".into()));
    }
    if sigma_true_base.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
        return Err(MotError::Config("sigma_true_base must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..count)
        .map(|_| {
            std::array::from_fn(|i| {
                let s = sigma_true_base[i] * uniform(&mut rng, 0.5, 2.0);
                let z: f64 = rng.sample(StandardNormal);
                let truth = uniform(&mut rng, 0.0, 100.0);
                MatchedPair {
                    gt_value: truth,
                    pred_mean: truth + s * z,
                    pred_sigma: miscalibration * s,
                    variable_index: i,
                }
            })
        })
        .collect())
}

/// A subset of a scene: ground truth plus detections for selected frames.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SubScene {
    pub gt: Vec<GtObject>,
    pub scene: Scene,
}

/// Fraction of a frame's ground-truth objects whose center lies in a zone.
pub fn zone_occupancy(objects: &[GtObject], zones: &[OcclusionZone]) -> f64 {
    if objects.is_empty() {
        return 0.0;
    }
    let inside = objects
        .iter()
        .filter(|g| zones.iter().any(|z| z.zone.contains_point(g.bbox.cx, g.bbox.cy)))
        .count();
    inside as f64 / objects.len() as f64
}

/// Splits frames into (high occlusion, low occlusion) by zone occupancy.
pub fn split_occlusion(
    gt: &[GtObject],
    scene: &Scene,
    zones: &[OcclusionZone],
) -> (SubScene, SubScene) {
    let by_frame = gt_by_frame(gt);
    let is_high = |frame: u64| {
        by_frame
            .get(&frame)
            .map(|objs| zone_occupancy(objs, zones) > HIGH_OCCLUSION_FRACTION)
            .unwrap_or(false)
    };
    let mut high = SubScene {
        scene: Scene {
            frames: vec![],
            meta: scene.meta.clone(),
        },
        ..Default::default()
    };
    let mut low = high.clone();
    for g in gt {
        if is_high(g.frame) {
            high.gt.push(*g);
        } else {
            low.gt.push(*g);
        }
    }
    for (frame, dets) in &scene.frames {
        let target = if is_high(*frame) { &mut high } else { &mut low };
        target.scene.frames.push((*frame, dets.clone()));
    }
    (high, low)
}
