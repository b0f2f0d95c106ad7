//! Browser demo bindings. Each export takes plain numbers and returns a JSON
//! string; the page in `www/` draws the result. The `*_json` functions are
//! the native entry points, the exported wrappers only convert errors.

use motcup::association::{iou, snll};
use motcup::conformal::{calibrate_pairs, empirical_coverage, MatchedPair, QuantileSet};
use motcup::simgen::{grid_zones, sample_matched_pairs};
use motcup::{
    calibrate, evaluate_detections, evaluate_tracks, generate_scene, track_scene, BaseKind, BoxState, Detection,
    EvalReport, GtObject, ScenarioConfig, TrackRecord, TrackerConfig,
};
use serde::Serialize;
use wasm_bindgen::prelude::*;

const SIGMA_BASE: [f64; 4] = [0.3, 0.3, 0.15, 0.15];

#[derive(Serialize)]
struct CoverageView {
    quantiles: Vec<f64>,
    raw_coverage: [f64; 4],
    cp_coverage: [f64; 4],
    target: f64,
    /// Normalized residuals `(y - mean) / σ̂` of the first test variable.
    residuals: Vec<f64>,
}

fn flatten(pairs: &[[MatchedPair; 4]]) -> Vec<MatchedPair> {
    pairs.iter().flatten().copied().collect()
}

/// Calibrates on `m` emulated pairs whose reported σ is `miscalibration`
/// times the truth, then measures coverage on 5000 fresh pairs before and
/// after rescaling.
pub fn coverage_json(miscalibration: f64, alpha: f64, m: usize, seed: u64) -> Result<String, String> {
    let cal = sample_matched_pairs(m, SIGMA_BASE, miscalibration, seed).map_err(|e| e.to_string())?;
    let test = sample_matched_pairs(5000, SIGMA_BASE, miscalibration, seed + 1).map_err(|e| e.to_string())?;
    let q = calibrate_pairs(&flatten(&cal), alpha).map_err(|e| e.to_string())?;
    let test = flatten(&test);
    // the uncalibrated interval uses the Gaussian multiplier for the same α
    let z = gaussian_quantile(1.0 - alpha / 2.0);
    let naive = QuantileSet {
        quantiles: vec![z; 4],
        clamped: vec![false; 4],
        ..q.clone()
    };
    let raw = empirical_coverage(&test, &naive).map_err(|e| e.to_string())?;
    let cp = empirical_coverage(&test, &q).map_err(|e| e.to_string())?;
    let residuals = test
        .iter()
        .filter(|p| p.variable_index == 0)
        .map(|p| (p.gt_value - p.pred_mean) / p.pred_sigma)
        .collect();
    serde_json::to_string(&CoverageView {
        quantiles: q.quantiles,
        raw_coverage: raw.rate,
        cp_coverage: cp.rate,
        target: 1.0 - alpha,
        residuals,
    })
    .map_err(|e| e.to_string())
}

/// Bisection on the standard normal CDF.
fn gaussian_quantile(p: f64) -> f64 {
    let (mut lo, mut hi) = (-10.0, 10.0);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if motcup::gaussian::std_normal_cdf(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[derive(Serialize)]
struct FrameView {
    gt: Vec<[f64; 5]>,
    baseline: Vec<[f64; 5]>,
    mot_cup: Vec<[f64; 5]>,
}

#[derive(Serialize)]
struct CompareView {
    field: f64,
    quantiles: Vec<f64>,
    baseline: EvalReport,
    mot_cup: EvalReport,
    detections_raw: EvalReport,
    detections_cp: EvalReport,
    zones: Vec<[f64; 4]>,
    frames: Vec<FrameView>,
}

fn gt_row(g: &GtObject) -> [f64; 5] {
    [g.object_id as f64, g.bbox.cx, g.bbox.cy, g.bbox.w, g.bbox.h]
}

fn track_row(r: &TrackRecord) -> [f64; 5] {
    [r.track_id as f64, r.bbox.cx, r.bbox.cy, r.bbox.w, r.bbox.h]
}

fn per_frame<T>(n: usize, items: &[T], frame: impl Fn(&T) -> u64, row: impl Fn(&T) -> [f64; 5]) -> Vec<Vec<[f64; 5]>> {
    let mut out = vec![Vec::new(); n];
    for it in items {
        if let Some(v) = out.get_mut(frame(it) as usize) {
            v.push(row(it));
        }
    }
    out
}

/// Simulates a calibration and a test scene, then tracks the test scene
/// with the chosen base alone and with the full pipeline at `tau`.
pub fn compare_json(
    seed: u64,
    n_objects: usize,
    zones: usize,
    clutter: f64,
    miscalibration: f64,
    bytetrack: bool,
    tau: f64,
) -> Result<String, String> {
    let err = |e: motcup::MotError| e.to_string();
    let scenario = ScenarioConfig {
        n_objects,
        n_frames: 80,
        occlusion_zones: grid_zones(zones, 100.0),
        clutter_rate: clutter,
        miscalibration,
        ..Default::default()
    };
    let (cal_gt, cal_scene) = generate_scene(&ScenarioConfig {
        seed: seed + 1000,
        ..scenario.clone()
    })
    .map_err(err)?;
    let (gt, scene) = generate_scene(&ScenarioConfig { seed, ..scenario.clone() }).map_err(err)?;
    let q = calibrate(&cal_scene, &cal_gt, motcup::conformal::ONE_SIGMA_ALPHA, 0.5).map_err(err)?;

    let base = if bytetrack { BaseKind::Bytetrack } else { BaseKind::Sort };
    let base_records = track_scene(&scene, &TrackerConfig::baseline(base), None).map_err(err)?;
    let full_cfg = TrackerConfig {
        tau,
        ..TrackerConfig::mot_cup(base)
    };
    let full_records = track_scene(&scene, &full_cfg, Some(&q)).map_err(err)?;

    let n = scenario.n_frames;
    let g = per_frame(n, &gt, |g| g.frame, gt_row);
    let b = per_frame(n, &base_records, |r| r.frame, track_row);
    let f = per_frame(n, &full_records, |r| r.frame, track_row);
    let frames = g
        .into_iter()
        .zip(b)
        .zip(f)
        .map(|((gt, baseline), mot_cup)| FrameView { gt, baseline, mot_cup })
        .collect();

    serde_json::to_string(&CompareView {
        field: scenario.field_size,
        quantiles: q.quantiles.clone(),
        baseline: evaluate_tracks(&gt, &base_records, 0.5, None).map_err(err)?,
        mot_cup: evaluate_tracks(&gt, &full_records, 0.5, None).map_err(err)?,
        detections_raw: evaluate_detections(&gt, &scene, None).map_err(err)?,
        detections_cp: evaluate_detections(&gt, &scene, Some(&q)).map_err(err)?,
        zones: scenario
            .occlusion_zones
            .iter()
            .map(|z| [z.zone.cx, z.zone.cy, z.zone.w, z.zone.h])
            .collect(),
        frames,
    })
    .map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct PairView {
    iou: f64,
    snll: f64,
    iou_match: bool,
    nll_match: bool,
}

/// IoU and SNLL between a detection and a predicted track box, and which
/// pass would accept the pair.
pub fn pair_json(
    det: [f64; 4],
    sigma: [f64; 4],
    pred: [f64; 4],
    iou_threshold: f64,
    tau: f64,
) -> Result<String, String> {
    let d = Detection::new(0.9, det, sigma, 0.9).map_err(|e| e.to_string())?;
    let p = BoxState::from_array(pred).map_err(|e| e.to_string())?;
    let v = iou(&d.bbox(), &p);
    let s = snll(&pred, &d).map_err(|e| e.to_string())?;
    serde_json::to_string(&PairView {
        iou: v,
        snll: s,
        iou_match: v >= iou_threshold,
        nll_match: v < iou_threshold && s <= tau,
    })
    .map_err(|e| e.to_string())
}

fn js(r: Result<String, String>) -> Result<String, JsValue> {
    r.map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn coverage(miscalibration: f64, alpha: f64, m: usize, seed: u32) -> Result<String, JsValue> {
    js(coverage_json(miscalibration, alpha, m, seed as u64))
}

#[wasm_bindgen]
pub fn compare(
    seed: u32,
    n_objects: usize,
    zones: usize,
    clutter: f64,
    miscalibration: f64,
    bytetrack: bool,
    tau: f64,
) -> Result<String, JsValue> {
    js(compare_json(seed as u64, n_objects, zones, clutter, miscalibration, bytetrack, tau))
}

#[wasm_bindgen]
pub fn pair(det: Vec<f64>, sigma: Vec<f64>, pred: Vec<f64>, iou_threshold: f64, tau: f64) -> Result<String, JsValue> {
    let four = |v: Vec<f64>| -> Result<[f64; 4], JsValue> {
        v.try_into().map_err(|_| JsValue::from_str("expected four numbers"))
    };
    js(pair_json(four(det)?, four(sigma)?, four(pred)?, iou_threshold, tau))
}
