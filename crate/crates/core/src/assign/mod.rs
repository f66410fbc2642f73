//! Anchor-to-pseudo-label assignment.
//!
//! `cost_topk` ranks anchors per label by a matching cost that mixes
//! classification confidence and overlap, and gives each label its `k` cheapest
//! anchors. `static_iou` is the fixed-overlap baseline. Regression-head selection
//! picks, per anchor, the head whose box agrees best with the label.

mod hungarian;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use hungarian::{hungarian_assign, HungarianResult};

use crate::model::{iou, BBox, Detection};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AssignError {
    #[error("anchor has no regression heads")]
    NoHeads,
    #[error("cost matrix rows have different lengths")]
    Ragged,
    #[error("cost matrix contains a non-finite entry")]
    NonFinite,
    #[error("invalid anchor: {0}")]
    InvalidAnchor(String),
}

/// Candidate box with per-class confidence and optional per-head regressed boxes.
#[derive(Debug, Clone, PartialEq)]
pub struct Anchor {
    pub bbox: BBox,
    scores: Vec<f64>,
    heads: Option<Vec<BBox>>,
}

impl Anchor {
    pub fn new(bbox: BBox, scores: Vec<f64>, heads: Option<Vec<BBox>>) -> Result<Self, AssignError> {
        if let Some(s) = scores.iter().find(|s| !(0.0..=1.0).contains(*s)) {
            return Err(AssignError::InvalidAnchor(format!("score {s} outside [0,1]")));
        }
        if heads.as_ref().is_some_and(Vec::is_empty) {
            return Err(AssignError::InvalidAnchor("head list is present but empty".into()));
        }
        Ok(Self { bbox, scores, heads })
    }

    /// Confidence for `class`; classes beyond the score vector count as 0.
    pub fn score(&self, class: usize) -> f64 {
        self.scores.get(class).copied().unwrap_or(0.0)
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn heads(&self) -> Option<&[BBox]> {
        self.heads.as_deref()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CostWeights {
    pub cls: f64,
    pub reg: f64,
}

impl Default for CostWeights {
    fn default() -> Self {
        Self { cls: 1.0, reg: 2.0 }
    }
}

/// `w_cls * (1 - score) + w_reg * (1 - IoU)`.
pub fn matching_cost(anchor: &Anchor, label: &Detection, weights: CostWeights) -> f64 {
    let s = anchor.score(label.class_id.0);
    weights.cls * (1.0 - s) + weights.reg * (1.0 - iou(&anchor.bbox, &label.bbox))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AssignMode {
    CostTopk,
    StaticIou,
}

impl AssignMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            AssignMode::CostTopk => "cost_topk",
            AssignMode::StaticIou => "static_iou",
        }
    }
}

impl std::str::FromStr for AssignMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cost_topk" => Ok(AssignMode::CostTopk),
            "static_iou" => Ok(AssignMode::StaticIou),
            other => Err(format!("unknown assignment mode '{other}' (expected cost_topk or static_iou)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AssignConfig {
    pub k: usize,
    pub mode: AssignMode,
    pub weights: CostWeights,
    /// Overlap needed for a positive in `static_iou` mode.
    pub iou_threshold: f64,
}

impl Default for AssignConfig {
    fn default() -> Self {
        Self { k: 3, mode: AssignMode::CostTopk, weights: CostWeights::default(), iou_threshold: 0.5 }
    }
}

/// Per-anchor label (or background) and the matching cost of the assigned pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pub mode: AssignMode,
    pub labels: Vec<Option<usize>>,
    pub costs: Vec<Option<f64>>,
}

impl Assignment {
    pub fn positives(&self) -> usize {
        self.labels.iter().flatten().count()
    }

    pub fn positives_for(&self, label: usize) -> Vec<usize> {
        self.labels.iter().enumerate().filter(|(_, l)| **l == Some(label)).map(|(a, _)| a).collect()
    }

    pub fn records(&self) -> Vec<AssignmentRecord> {
        self.labels
            .iter()
            .zip(&self.costs)
            .enumerate()
            .map(|(i, (l, c))| AssignmentRecord {
                anchor_index: i,
                label_index: l.map_or(LabelRef::Background, LabelRef::Label),
                cost: *c,
                mode: self.mode,
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelRef {
    Label(usize),
    Background,
}

impl Serialize for LabelRef {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            LabelRef::Label(i) => s.serialize_u64(*i as u64),
            LabelRef::Background => s.serialize_str("bg"),
        }
    }
}

impl<'de> Deserialize<'de> for LabelRef {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Index(usize),
            Tag(String),
        }
        match Raw::deserialize(d)? {
            Raw::Index(i) => Ok(LabelRef::Label(i)),
            Raw::Tag(t) if t == "bg" => Ok(LabelRef::Background),
            Raw::Tag(t) => Err(serde::de::Error::custom(format!("expected label index or \"bg\", got \"{t}\""))),
        }
    }
}

/// One entry of the assignment dump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssignmentRecord {
    pub anchor_index: usize,
    pub label_index: LabelRef,
    pub cost: Option<f64>,
    pub mode: AssignMode,
}

/// Cost-ranked assignment on a precomputed `labels x anchors` cost matrix.
///
/// Labels propose to anchors in ascending cost (lower anchor index on ties); an
/// anchor claimed by several labels keeps its cheapest one (lower label index on
/// ties) and the losing label moves on to its next candidate. Every label ends
/// with `min(k, remaining anchors)` positives, and no background anchor is
/// cheaper for a label than one it was given.
pub fn assign_by_cost(costs: &[Vec<f64>], n_anchors: usize, k: usize) -> Vec<Option<usize>> {
    let n_labels = costs.len();
    let prefs: Vec<Vec<usize>> = costs
        .iter()
        .map(|row| {
            let mut order: Vec<usize> = (0..n_anchors).collect();
            order.sort_by(|&a, &b| row[a].total_cmp(&row[b]).then(a.cmp(&b)));
            order
        })
        .collect();
    let mut next = vec![0usize; n_labels];
    let mut count = vec![0usize; n_labels];
    let mut holder: Vec<Option<usize>> = vec![None; n_anchors];
    loop {
        let mut proposed = false;
        for l in 0..n_labels {
            while count[l] < k && next[l] < n_anchors {
                let a = prefs[l][next[l]];
                next[l] += 1;
                proposed = true;
                match holder[a] {
                    None => {
                        holder[a] = Some(l);
                        count[l] += 1;
                    }
                    Some(cur) => {
                        let better = costs[l][a] < costs[cur][a] || (costs[l][a] == costs[cur][a] && l < cur);
                        if better {
                            holder[a] = Some(l);
                            count[l] += 1;
                            count[cur] -= 1;
                        }
                    }
                }
            }
        }
        if !proposed {
            return holder;
        }
    }
}

/// Assigns anchors to pseudo-labels under `config.mode`.
pub fn assign_topk(anchors: &[Anchor], labels: &[Detection], config: &AssignConfig) -> Assignment {
    let cost = |a: usize, l: usize| matching_cost(&anchors[a], &labels[l], config.weights);
    let assigned: Vec<Option<usize>> = match config.mode {
        AssignMode::CostTopk => {
            let matrix: Vec<Vec<f64>> =
                (0..labels.len()).map(|l| (0..anchors.len()).map(|a| cost(a, l)).collect()).collect();
            assign_by_cost(&matrix, anchors.len(), config.k.max(1))
        }
        AssignMode::StaticIou => anchors
            .iter()
            .map(|anchor| {
                let mut best: Option<(usize, f64)> = None;
                for (l, label) in labels.iter().enumerate() {
                    let q = iou(&anchor.bbox, &label.bbox);
                    if best.is_none_or(|(_, bq)| q > bq) {
                        best = Some((l, q));
                    }
                }
                best.filter(|&(_, q)| q >= config.iou_threshold).map(|(l, _)| l)
            })
            .collect(),
    };
    let costs = assigned.iter().enumerate().map(|(a, l)| l.map(|l| cost(a, l))).collect();
    Assignment { mode: config.mode, labels: assigned, costs }
}

/// Head whose regressed box best overlaps the label (lowest index on ties).
pub fn select_regression_head(anchor: &Anchor, label: &Detection) -> Result<usize, AssignError> {
    let heads = anchor.heads().ok_or(AssignError::NoHeads)?;
    let mut best = 0;
    let mut best_iou = f64::NEG_INFINITY;
    for (i, h) in heads.iter().enumerate() {
        let q = iou(h, &label.bbox);
        if q > best_iou {
            best = i;
            best_iou = q;
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ClassId, ImageId};

    fn bx(x: f64, y: f64, w: f64, h: f64) -> BBox {
        BBox::new(x, y, w, h).unwrap()
    }

    fn label(b: BBox) -> Detection {
        Detection { image_id: ImageId(0), bbox: b, class_id: ClassId(0), score: 0.9 }
    }

    #[test]
    fn cost_examples() {
        let l = label(bx(0.0, 0.0, 10.0, 10.0));
        let w = CostWeights::default();
        let perfect = Anchor::new(bx(0.0, 0.0, 10.0, 10.0), vec![1.0], None).unwrap();
        assert_eq!(matching_cost(&perfect, &l, w), 0.0);
        let worst = Anchor::new(bx(50.0, 50.0, 10.0, 10.0), vec![0.0], None).unwrap();
        assert_eq!(matching_cost(&worst, &l, w), 3.0);
        // IoU 0.5: half-width overlap of two 10x10 boxes is 50/150, so use a contained box
        let half = Anchor::new(bx(0.0, 0.0, 10.0, 5.0), vec![0.8], None).unwrap();
        assert!((matching_cost(&half, &l, w) - 1.2).abs() < 1e-12);
    }

    #[test]
    fn topk_on_costs() {
        let a = assign_by_cost(&[vec![0.1, 0.5, 2.0]], 3, 2);
        assert_eq!(a, vec![Some(0), Some(0), None]);
        let all = assign_by_cost(&[vec![0.1, 0.5, 2.0]], 3, 10);
        assert_eq!(all, vec![Some(0); 3]);
    }

    #[test]
    fn contested_anchor_goes_to_cheaper_label_and_loser_refills() {
        // both labels want anchor 0; label 1 is cheaper there
        let costs = vec![vec![0.2, 0.3, 0.9], vec![0.1, 0.8, 0.4]];
        let a = assign_by_cost(&costs, 3, 1);
        assert_eq!(a, vec![Some(1), Some(0), None]);
        // equal cost: lower label index wins
        let costs = vec![vec![0.2, 0.3], vec![0.2, 0.9]];
        assert_eq!(assign_by_cost(&costs, 2, 1), vec![Some(0), Some(1)]);
    }

    #[test]
    fn static_iou_baseline() {
        let l = label(bx(0.0, 0.0, 10.0, 10.0));
        // IoU 0.6 and 0.4 with the label
        let a0 = Anchor::new(bx(0.0, 0.0, 10.0, 6.0), vec![0.5], None).unwrap();
        let a1 = Anchor::new(bx(0.0, 0.0, 10.0, 4.0), vec![0.5], None).unwrap();
        let cfg = AssignConfig { mode: AssignMode::StaticIou, ..Default::default() };
        let out = assign_topk(&[a0, a1], &[l], &cfg);
        assert_eq!(out.labels, vec![Some(0), None]);
        assert!(out.costs[0].is_some() && out.costs[1].is_none());
    }

    #[test]
    fn head_selection() {
        let l = label(bx(0.0, 0.0, 10.0, 10.0));
        let heads = vec![bx(0.0, 0.0, 10.0, 9.0), bx(0.0, 0.0, 10.0, 6.0)];
        let a = Anchor::new(bx(0.0, 0.0, 10.0, 10.0), vec![0.5], Some(heads)).unwrap();
        assert_eq!(select_regression_head(&a, &l), Ok(0));
        let single = Anchor::new(bx(1.0, 1.0, 5.0, 5.0), vec![0.5], Some(vec![bx(2.0, 2.0, 3.0, 3.0)])).unwrap();
        assert_eq!(select_regression_head(&single, &l), Ok(0));
        let tie = Anchor::new(bx(1.0, 1.0, 5.0, 5.0), vec![0.5], Some(vec![bx(0.0, 0.0, 10.0, 5.0); 3])).unwrap();
        assert_eq!(select_regression_head(&tie, &l), Ok(0));
        let none = Anchor::new(bx(1.0, 1.0, 5.0, 5.0), vec![0.5], None).unwrap();
        assert_eq!(select_regression_head(&none, &l), Err(AssignError::NoHeads));
        assert!(Anchor::new(bx(1.0, 1.0, 5.0, 5.0), vec![0.5], Some(vec![])).is_err());
    }

    #[test]
    fn dump_format() {
        let a = Assignment { mode: AssignMode::CostTopk, labels: vec![Some(0), None], costs: vec![Some(0.25), None] };
        let s = serde_json::to_string(&a.records()).unwrap();
        assert_eq!(
            s,
            r#"[{"anchor_index":0,"label_index":0,"cost":0.25,"mode":"cost_topk"},{"anchor_index":1,"label_index":"bg","cost":null,"mode":"cost_topk"}]"#
        );
    }
}
