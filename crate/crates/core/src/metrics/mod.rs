//! Tracking accuracy and uncertainty-quality metrics.

pub mod clear;
pub mod hota;
pub mod uncertainty;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use clear::{clear_metrics, ClearMetrics};
pub use hota::{hota, hota_alphas, HotaAtAlpha, HotaScores, HOTA_STEPS};
pub use uncertainty::{crps_gaussian, throughput, uncertainty_metrics, BoxedOutput, UncertaintyScores};

use crate::conformal::{apply_quantiles, QuantileSet};
use crate::domain::{GtObject, Scene};
use crate::error::{MotError, Result};
use crate::tracker::TrackRecord;

/// IoU thresholds at which NLL and CRPS are reported.
pub const UNCERTAINTY_IOUS: [f64; 2] = [0.5, 0.7];

fn iou_key(t: f64) -> String {
    format!("{t:.1}")
}

/// Combined evaluation output. Tracking fields are absent when only raw
/// detections were scored; uncertainty entries are `None` at a threshold
/// with no true positives.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EvalReport {
    pub hota: Option<f64>,
    pub deta: Option<f64>,
    pub assa: Option<f64>,
    pub mota: Option<f64>,
    /// Mean IoU over matches on a 0 to 100 scale.
    pub motp: Option<f64>,
    pub id_switches: Option<u64>,
    pub false_positives: Option<u64>,
    pub false_negatives: Option<u64>,
    pub nll_at: BTreeMap<String, Option<f64>>,
    pub crps_at: BTreeMap<String, Option<f64>>,
    pub matched_tp: BTreeMap<String, usize>,
    pub fps: Option<f64>,
    pub frames: usize,
    pub gt_count: usize,
}

impl EvalReport {
    fn fill_uncertainty(&mut self, gt: &[GtObject], outputs: &[BoxedOutput]) -> Result<()> {
        for t in UNCERTAINTY_IOUS {
            let key = iou_key(t);
            match uncertainty_metrics(gt, outputs, t) {
                Ok(s) => {
                    self.nll_at.insert(key.clone(), Some(s.nll));
                    self.crps_at.insert(key.clone(), Some(s.crps));
                    self.matched_tp.insert(key, s.matched_tp);
                }
                Err(MotError::NoTruePositives(_)) => {
                    log::warn!("no true positives at IoU {t}");
                    self.nll_at.insert(key.clone(), None);
                    self.crps_at.insert(key.clone(), None);
                    self.matched_tp.insert(key, 0);
                }
                Err(e) => return Err(e),
            }
        }
        Ok(())
    }

    /// The NLL at IoU 0.5, if defined.
    pub fn nll50(&self) -> Option<f64> {
        self.nll_at.get("0.5").copied().flatten()
    }

    pub fn crps50(&self) -> Option<f64> {
        self.crps_at.get("0.5").copied().flatten()
    }
}

fn frame_count(gt: &[GtObject]) -> usize {
    gt.iter().map(|g| g.frame).collect::<std::collections::BTreeSet<_>>().len()
}

/// Full report for tracker output. `timings` adds the FPS entry.
pub fn evaluate_tracks(
    gt: &[GtObject],
    records: &[TrackRecord],
    clear_iou: f64,
    timings: Option<&[f64]>,
) -> Result<EvalReport> {
    let c = clear_metrics(gt, records, clear_iou)?;
    let h = hota(gt, records)?;
    let mut report = EvalReport {
        hota: Some(h.hota),
        deta: Some(h.deta),
        assa: Some(h.assa),
        mota: Some(c.mota),
        motp: Some(c.motp * 100.0),
        id_switches: Some(c.id_switches),
        false_positives: Some(c.false_positives),
        false_negatives: Some(c.false_negatives),
        fps: timings.map(throughput).transpose()?,
        frames: frame_count(gt),
        gt_count: gt.len(),
        ..Default::default()
    };
    let outputs: Vec<BoxedOutput> = records.iter().map(BoxedOutput::from_record).collect();
    report.fill_uncertainty(gt, &outputs)?;
    Ok(report)
}

/// Uncertainty report for raw detections, optionally after CP rescaling.
pub fn evaluate_detections(gt: &[GtObject], scene: &Scene, quantiles: Option<&QuantileSet>) -> Result<EvalReport> {
    if gt.is_empty() {
        return Err(MotError::Undefined("evaluation needs ground truth".into()));
    }
    let outputs = match quantiles {
        None => BoxedOutput::from_scene(scene),
        Some(q) => {
            let mut v = Vec::with_capacity(scene.detection_count());
            for (f, dets) in &scene.frames {
                for d in dets {
                    v.push(BoxedOutput::from_detection(*f, &apply_quantiles(d, q)?));
                }
            }
            v
        }
    };
    let mut report = EvalReport {
        frames: frame_count(gt),
        gt_count: gt.len(),
        ..Default::default()
    };
    report.fill_uncertainty(gt, &outputs)?;
    Ok(report)
}
