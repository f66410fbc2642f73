//! AP@0.5 / mAP evaluation with all-point interpolation of the precision envelope.

use std::collections::BTreeMap;

use serde::{Serialize, Serializer};
use serde_json::{json, Map, Value};

use crate::model::{iou, ClassId, Dataset, DatasetError, Detection, GroundTruthBox, ImageId};

pub const DEFAULT_IOU_THRESHOLD: f64 = 0.5;

/// Greedy matching for one image and one class. Detections are visited in
/// descending score order (input order on ties); each takes the unmatched ground
/// truth it overlaps best and is a true positive iff that overlap reaches
/// `iou_thresh`. Returns one flag per detection in input order.
pub fn match_detections(dets: &[Detection], gts: &[GroundTruthBox], iou_thresh: f64) -> Vec<bool> {
    let mut order: Vec<usize> = (0..dets.len()).collect();
    order.sort_by(|&a, &b| dets[b].score.total_cmp(&dets[a].score));
    let mut taken = vec![false; gts.len()];
    let mut flags = vec![false; dets.len()];
    for i in order {
        let mut best: Option<(usize, f64)> = None;
        for (g, gt) in gts.iter().enumerate() {
            if taken[g] {
                continue;
            }
            let q = iou(&dets[i].bbox, &gt.bbox);
            if best.is_none_or(|(_, bq)| q > bq) {
                best = Some((g, q));
            }
        }
        if let Some((g, q)) = best {
            if q >= iou_thresh {
                taken[g] = true;
                flags[i] = true;
            }
        }
    }
    flags
}

/// All-point interpolated AP of a ranked TP/FP list: the sum over recall steps of
/// the maximum precision achieved at that recall or beyond. `None` when there is
/// no ground truth.
pub fn average_precision(flags: &[bool], n_gt: usize) -> Option<f64> {
    if n_gt == 0 {
        return None;
    }
    let mut precision = Vec::with_capacity(flags.len());
    let mut recall = Vec::with_capacity(flags.len());
    let mut tp = 0usize;
    for (rank, &f) in flags.iter().enumerate() {
        if f {
            tp += 1;
        }
        precision.push(tp as f64 / (rank + 1) as f64);
        recall.push(tp as f64 / n_gt as f64);
    }
    for i in (0..precision.len().saturating_sub(1)).rev() {
        precision[i] = precision[i].max(precision[i + 1]);
    }
    let mut ap = 0.0;
    let mut prev_recall = 0.0;
    for (p, r) in precision.iter().zip(&recall) {
        if *r > prev_recall {
            ap += (r - prev_recall) * p;
            prev_recall = *r;
        }
    }
    Some(ap.clamp(0.0, 1.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassReport {
    pub class: String,
    pub ap: Option<f64>,
    pub n_gt: usize,
    pub n_det: usize,
    pub n_tp: usize,
    pub n_fp: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub iou_threshold: f64,
    pub per_class: Vec<ClassReport>,
    pub map: f64,
}

impl EvalReport {
    pub fn ap(&self, class: &str) -> Option<f64> {
        self.per_class.iter().find(|c| c.class == class).and_then(|c| c.ap)
    }

    pub fn to_json(&self) -> Value {
        let mut per_class = Map::new();
        let mut counts = Map::new();
        for c in &self.per_class {
            per_class.insert(c.class.clone(), json!(c.ap));
            counts.insert(c.class.clone(), json!({"n_gt": c.n_gt, "n_det": c.n_det, "n_tp": c.n_tp, "n_fp": c.n_fp}));
        }
        json!({
            "per_class": per_class,
            "mAP": self.map,
            "counts": counts,
            "iou_threshold": self.iou_threshold,
        })
    }
}

impl Serialize for EvalReport {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_json().serialize(s)
    }
}

/// Per-class AP pooled over all images, and mAP over classes that have ground truth.
pub fn evaluate_dataset(gt: &Dataset, dets: &[Detection], iou_thresh: f64) -> Result<EvalReport, DatasetError> {
    gt.validate_detections(dets, "detections")?;
    let n_classes = gt.vocabulary.len();
    let mut gts_by: BTreeMap<(ClassId, ImageId), Vec<GroundTruthBox>> = BTreeMap::new();
    for g in &gt.ground_truth {
        gts_by.entry((g.class_id, g.image_id)).or_default().push(g.clone());
    }
    let mut dets_by: BTreeMap<(ClassId, ImageId), Vec<Detection>> = BTreeMap::new();
    for d in dets {
        dets_by.entry((d.class_id, d.image_id)).or_default().push(d.clone());
    }

    let mut per_class = Vec::with_capacity(n_classes);
    for class in gt.vocabulary.ids() {
        let n_gt: usize = gts_by.range((class, ImageId(0))..=(class, ImageId(u64::MAX))).map(|(_, v)| v.len()).sum();
        // (score, image, within-image index, flag)
        let mut ranked: Vec<(f64, ImageId, usize, bool)> = Vec::new();
        for ((_, image), ds) in dets_by.range((class, ImageId(0))..=(class, ImageId(u64::MAX))) {
            let empty = Vec::new();
            let gs = gts_by.get(&(class, *image)).unwrap_or(&empty);
            let flags = match_detections(ds, gs, iou_thresh);
            ranked.extend(ds.iter().zip(flags).enumerate().map(|(i, (d, f))| (d.score, *image, i, f)));
        }
        ranked.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        let flags: Vec<bool> = ranked.iter().map(|r| r.3).collect();
        let n_tp = flags.iter().filter(|f| **f).count();
        per_class.push(ClassReport {
            class: gt.vocabulary.name(class).expect("class id from vocabulary").to_string(),
            ap: average_precision(&flags, n_gt),
            n_gt,
            n_det: flags.len(),
            n_tp,
            n_fp: flags.len() - n_tp,
        });
    }
    let aps: Vec<f64> = per_class.iter().filter_map(|c| c.ap).collect();
    let map = if aps.is_empty() { 0.0 } else { aps.iter().sum::<f64>() / aps.len() as f64 };
    Ok(EvalReport { iou_threshold: iou_thresh, per_class, map })
}
