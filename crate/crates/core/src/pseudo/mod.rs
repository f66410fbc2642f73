//! Pseudo-label refinement: per-class dynamic score thresholds from a
//! two-component score mixture, smoothed across iterations, followed by
//! class-wise greedy NMS.

mod gmm;
mod threshold;

use std::cmp::Ordering;
use std::collections::BTreeMap;

pub use gmm::{fit_gmm, fit_gmm_traced, posterior_crossover, EmConfig, GmmError, GmmFit, GmmModel, VARIANCE_FLOOR};
pub use threshold::{
    dynamic_threshold, smooth_threshold, trace_to_jsonl, ThresholdConfig, ThresholdError, ThresholdState,
    ThresholdTraceRecord, ThresholdUpdate,
};

use crate::model::{iou, ClassId, Detection, ImageId};

pub const DEFAULT_NMS_IOU: f64 = 0.5;

/// Detections promoted to supervision targets, with the thresholds that admitted them.
#[derive(Debug, Clone, PartialEq)]
pub struct PseudoLabelSet {
    pub labels: Vec<Detection>,
    pub iteration: u64,
    pub thresholds: Vec<f64>,
}

impl PseudoLabelSet {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn count_for(&self, class: ClassId) -> usize {
        self.labels.iter().filter(|d| d.class_id == class).count()
    }
}

/// Descending score, then ascending x, then ascending y.
pub(crate) fn nms_order(a: &Detection, b: &Detection) -> Ordering {
    b.score
        .total_cmp(&a.score)
        .then_with(|| a.bbox.x().total_cmp(&b.bbox.x()))
        .then_with(|| a.bbox.y().total_cmp(&b.bbox.y()))
}

/// Greedy NMS within each (image, class) group. Returns the indices of the kept
/// detections in ascending input order.
pub fn nms_indices(dets: &[Detection], candidates: &[usize], nms_iou: f64) -> Vec<usize> {
    let mut groups: BTreeMap<(ImageId, ClassId), Vec<usize>> = BTreeMap::new();
    for &i in candidates {
        groups.entry((dets[i].image_id, dets[i].class_id)).or_default().push(i);
    }
    let mut kept = Vec::new();
    for (_, mut idx) in groups {
        // stable sort keeps input order as the last tie-break
        idx.sort_by(|&a, &b| nms_order(&dets[a], &dets[b]));
        let mut group_kept: Vec<usize> = Vec::new();
        for i in idx {
            if group_kept.iter().all(|&k| iou(&dets[k].bbox, &dets[i].bbox) <= nms_iou) {
                group_kept.push(i);
            }
        }
        kept.extend(group_kept);
    }
    kept.sort_unstable();
    kept
}

/// Score filtering against explicit per-class thresholds, then class-wise NMS.
/// Detections of classes without a threshold entry are dropped.
pub fn filter_with_thresholds(dets: &[Detection], thresholds: &[f64], nms_iou: f64) -> Vec<Detection> {
    let candidates: Vec<usize> = (0..dets.len())
        .filter(|&i| thresholds.get(dets[i].class_id.0).is_some_and(|&t| dets[i].score >= t))
        .collect();
    nms_indices(dets, &candidates, nms_iou).into_iter().map(|i| dets[i].clone()).collect()
}

pub fn filter_pseudo_labels(dets: &[Detection], state: &ThresholdState, nms_iou: f64) -> PseudoLabelSet {
    PseudoLabelSet {
        labels: filter_with_thresholds(dets, state.thresholds(), nms_iou),
        iteration: state.iteration(),
        thresholds: state.thresholds().to_vec(),
    }
}
