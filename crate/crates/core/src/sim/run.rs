use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use super::config::{SimConfig, NOISE_PARAMS};
use super::detector::{fit_box, jitter_box, simulate_detector, LabelMap};
use super::rng::{stream_rng, Stream};
use super::scene::{generate_objects, generate_scene, image_info, sim_vocabulary, split_class_id};
use super::SimError;
use crate::align::{align_dataset, Lexicon};
use crate::assign::{assign_topk, select_regression_head, Anchor};
use crate::ema::{ema_update, ParamVector};
use crate::eval::{evaluate_dataset, EvalReport, DEFAULT_IOU_THRESHOLD};
use crate::model::{iou, BBox, ClassId, Dataset, Detection, GroundTruthBox, ImageId, ImageInfo, DEFAULT_CLASSES};
use crate::pseudo::{filter_with_thresholds, ThresholdState, ThresholdTraceRecord};

const BACKGROUND_SCORE: f64 = 0.02;
const CONSISTENT_IOU: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssignmentStats {
    pub positives: usize,
    /// Positives whose pseudo-label is the object the anchor was drawn around, with the right label.
    pub consistent: usize,
    pub consistency: f64,
    pub mean_cost: f64,
    /// How often each regression head was selected.
    pub head_usage: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub thresholds: Vec<f64>,
    pub raw_thresholds: Vec<Option<f64>>,
    pub window_sizes: Vec<usize>,
    pub detections: Vec<usize>,
    pub pseudo_labels: Vec<usize>,
    pub assignment: AssignmentStats,
    /// Teacher parameter values after this iteration's update.
    pub teacher: Vec<f64>,
    pub student: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LabeledSummary {
    pub images: usize,
    pub boxes: usize,
    pub aligned: bool,
    pub split_labels_before: usize,
    pub split_labels_after: usize,
    pub align_issues: usize,
    /// Per canonical class, the share of detections the teacher reports under the canonical label.
    pub canonical_share: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FinalEvaluation {
    pub eval_images: usize,
    pub teacher: EvalReport,
    pub student: EvalReport,
    /// Teacher detections after the final thresholds and NMS.
    pub pseudo_labels: EvalReport,
    pub thresholds: Vec<f64>,
    pub teacher_params: ParamVector,
    pub student_params: ParamVector,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimReport {
    pub config: SimConfig,
    pub classes: Vec<String>,
    pub param_names: Vec<String>,
    pub labeled: LabeledSummary,
    pub iterations: Vec<IterationRecord>,
    pub final_eval: FinalEvaluation,
}

/// One row of the long-format time series export.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeSeriesRow {
    pub iteration: usize,
    pub class: String,
    pub threshold: f64,
    pub raw_threshold: Option<f64>,
    pub window_size: usize,
    pub detections: usize,
    pub pseudo_labels: usize,
    pub positives: usize,
    pub consistency: f64,
    pub teacher_jitter_sigma: f64,
}

impl SimReport {
    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// Final teacher mAP on the held-out set.
    pub fn final_map(&self) -> f64 {
        self.final_eval.teacher.map
    }

    /// Rows for classes that produced at least one detection during the run.
    pub fn time_series(&self) -> Vec<TimeSeriesRow> {
        let active: Vec<usize> = (0..self.classes.len())
            .filter(|&c| self.iterations.iter().any(|it| it.detections[c] > 0))
            .collect();
        let mut rows = Vec::new();
        for it in &self.iterations {
            for &c in &active {
                rows.push(TimeSeriesRow {
                    iteration: it.iteration,
                    class: self.classes[c].clone(),
                    threshold: it.thresholds[c],
                    raw_threshold: it.raw_thresholds[c],
                    window_size: it.window_sizes[c],
                    detections: it.detections[c],
                    pseudo_labels: it.pseudo_labels[c],
                    positives: it.assignment.positives,
                    consistency: it.assignment.consistency,
                    teacher_jitter_sigma: it.teacher[0],
                });
            }
        }
        rows
    }

    /// Threshold trace records for every class refitted in each iteration.
    pub fn threshold_trace(&self) -> Vec<ThresholdTraceRecord> {
        let mut out = Vec::new();
        for it in &self.iterations {
            for (c, raw) in it.raw_thresholds.iter().enumerate() {
                if it.window_sizes[c] == 0 {
                    continue;
                }
                out.push(ThresholdTraceRecord {
                    iteration: it.iteration as u64,
                    class: self.classes[c].clone(),
                    raw_threshold: *raw,
                    smoothed_threshold: it.thresholds[c],
                    n_scores: it.window_sizes[c],
                    kept_count: it.pseudo_labels[c],
                });
            }
        }
        out
    }
}

fn labeled_set_size(cfg: &SimConfig) -> usize {
    let f = cfg.run.labeled_fraction;
    let unlabeled = (cfg.run.iterations * cfg.run.images_per_iteration) as f64;
    (f / (1.0 - f) * unlabeled).ceil() as usize
}

/// Builds the labeled set (optionally split-labeled and then aligned) and the
/// label distribution the teacher inherits from it.
fn build_label_map(cfg: &SimConfig) -> Result<(LabelMap, LabeledSummary), SimError> {
    let n_images = labeled_set_size(cfg);
    let vocab = sim_vocabulary();
    let n_canonical = DEFAULT_CLASSES.len();
    let per_image: Vec<(ImageInfo, Vec<(GroundTruthBox, ClassId)>)> = (1..=n_images as u64)
        .into_par_iter()
        .map(|id| {
            let image = image_info(&cfg.scene, ImageId(id));
            let mut rng = stream_rng(cfg.seed, Stream::Labeled, id);
            let objects = generate_objects(&cfg.scene, image.id, &mut rng)
                .into_iter()
                .map(|o| {
                    let truth = o.gt.class_id;
                    let mut gt = o.gt;
                    if rng.random::<f64>() < cfg.detector.synonym_split_rate {
                        gt.class_id = split_class_id(o.color, truth);
                    }
                    (gt, truth)
                })
                .collect();
            (image, objects)
        })
        .collect();
    let truths: Vec<ClassId> = per_image.iter().flat_map(|(_, objs)| objs.iter().map(|o| o.1)).collect();
    let images = per_image.iter().map(|(im, _)| *im).collect();
    let gts = per_image.into_iter().flat_map(|(_, objs)| objs.into_iter().map(|o| o.0)).collect();
    let dataset = Dataset::new(vocab, images, gts, None)?;
    let split_before = dataset.ground_truth.iter().filter(|g| g.class_id.0 >= n_canonical).count();
    let (dataset, issues) = if cfg.run.align {
        align_dataset(&dataset, &Lexicon::default_lexicon())
    } else {
        (dataset, Vec::new())
    };
    let split_after = dataset.ground_truth.iter().filter(|g| g.class_id.0 >= n_canonical).count();
    let mut counts = vec![BTreeMap::<ClassId, usize>::new(); n_canonical];
    for (gt, truth) in dataset.ground_truth.iter().zip(&truths) {
        *counts[truth.0].entry(gt.class_id).or_default() += 1;
    }
    let map = LabelMap::from_counts(&counts);
    let summary = LabeledSummary {
        images: n_images,
        boxes: dataset.ground_truth.len(),
        aligned: cfg.run.align,
        split_labels_before: split_before,
        split_labels_after: split_after,
        align_issues: issues.len(),
        canonical_share: (0..n_canonical).map(|c| map.canonical_share(ClassId(c))).collect(),
    };
    Ok((map, summary))
}

fn normal(rng: &mut impl Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// Regressed boxes of one anchor; later heads are noisier.
fn heads_around(b: &BBox, heads: usize, sigma: f64, image: &ImageInfo, rng: &mut impl Rng) -> Vec<BBox> {
    (0..heads)
        .map(|h| {
            let s = sigma * (1 + h) as f64;
            let d = [normal(rng), normal(rng), normal(rng), normal(rng)].map(|z| s * z);
            jitter_box(b, d, image)
        })
        .collect()
}

/// Student anchors for one image: jittered copies around every object plus
/// uniformly placed background anchors. Returns the source object of each anchor.
fn make_anchors(
    cfg: &SimConfig,
    image: &ImageInfo,
    gts: &[GroundTruthBox],
    head_sigma: f64,
    n_classes: usize,
    rng: &mut impl Rng,
) -> (Vec<Anchor>, Vec<Option<usize>>) {
    let r = &cfg.run;
    let mut anchors = Vec::new();
    let mut sources = Vec::new();
    for (gi, g) in gts.iter().enumerate() {
        for _ in 0..r.anchors_per_object {
            let (w, h) = (g.bbox.w(), g.bbox.h());
            let j = r.anchor_jitter;
            let d = [j * w * normal(rng), j * h * normal(rng), j * w * normal(rng), j * h * normal(rng)];
            let bbox = jitter_box(&g.bbox, d, image);
            let mut scores = vec![BACKGROUND_SCORE; n_classes];
            scores[g.class_id.0] = (0.75 + 0.15 * normal(rng)).clamp(0.0, 1.0);
            let heads = heads_around(&g.bbox, r.heads, head_sigma, image, rng);
            anchors.push(Anchor::new(bbox, scores, Some(heads)).expect("valid anchor"));
            sources.push(Some(gi));
        }
    }
    let s = &cfg.scene;
    for _ in 0..r.background_anchors {
        let w = rng.random_range(s.min_box_size..=s.max_box_size) as f64;
        let h = rng.random_range(s.min_box_size..=s.max_box_size) as f64;
        let x = rng.random::<f64>() * (image.width as f64 - w);
        let y = rng.random::<f64>() * (image.height as f64 - h);
        let bbox = fit_box(x, y, w, h, image);
        let heads = heads_around(&bbox, r.heads, head_sigma, image, rng);
        anchors.push(Anchor::new(bbox, vec![BACKGROUND_SCORE; n_classes], Some(heads)).expect("valid anchor"));
        sources.push(None);
    }
    (anchors, sources)
}

struct ImageAssignment {
    positives: usize,
    consistent: usize,
    cost_sum: f64,
    head_usage: Vec<usize>,
}

fn assign_image(
    cfg: &SimConfig,
    image: &ImageInfo,
    gts: &[GroundTruthBox],
    labels: &[Detection],
    head_sigma: f64,
    n_classes: usize,
) -> ImageAssignment {
    let mut rng = stream_rng(cfg.seed, Stream::Anchors, image.id.0);
    let (anchors, sources) = make_anchors(cfg, image, gts, head_sigma, n_classes, &mut rng);
    let assignment = assign_topk(&anchors, labels, &cfg.run.assign);
    let mut out = ImageAssignment { positives: 0, consistent: 0, cost_sum: 0.0, head_usage: vec![0; cfg.run.heads] };
    for (a, label) in assignment.labels.iter().enumerate() {
        let Some(l) = *label else { continue };
        out.positives += 1;
        out.cost_sum += assignment.costs[a].unwrap_or(0.0);
        let head = select_regression_head(&anchors[a], &labels[l]).expect("anchors carry heads");
        out.head_usage[head] += 1;
        if let Some(gi) = sources[a] {
            let g = &gts[gi];
            if labels[l].class_id == g.class_id && iou(&labels[l].bbox, &g.bbox) >= CONSISTENT_IOU {
                out.consistent += 1;
            }
        }
    }
    out
}

fn eval_set(cfg: &SimConfig) -> Result<Dataset, SimError> {
    let scenes: Vec<(ImageInfo, Vec<GroundTruthBox>)> = (1..=cfg.run.eval_images as u64)
        .into_par_iter()
        .map(|id| {
            let image = image_info(&cfg.scene, ImageId(id));
            let gts = generate_scene(&cfg.scene, image.id, &mut stream_rng(cfg.seed, Stream::EvalScene, id));
            (image, gts)
        })
        .collect();
    let images = scenes.iter().map(|s| s.0).collect();
    let gts = scenes.into_iter().flat_map(|s| s.1).collect();
    Ok(Dataset::new(sim_vocabulary(), images, gts, None)?)
}

fn detect_all(
    cfg: &SimConfig,
    data: &Dataset,
    params: &ParamVector,
    labels: &LabelMap,
    stream: Stream,
) -> Vec<Detection> {
    let noise = cfg.detector.with_params(params);
    let mut by_image: BTreeMap<ImageId, Vec<GroundTruthBox>> = BTreeMap::new();
    for g in &data.ground_truth {
        by_image.entry(g.image_id).or_default().push(g.clone());
    }
    data.images
        .par_iter()
        .map(|im| {
            let gts = by_image.get(&im.id).map(Vec::as_slice).unwrap_or(&[]);
            simulate_detector(im, gts, &noise, labels, &mut stream_rng(cfg.seed, stream, im.id.0))
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect()
}

/// Runs the teacher-student loop and evaluates the final teacher and student.
///
/// Per iteration: fresh scenes are detected by the teacher, per-class score
/// mixtures refresh the dynamic thresholds, the filtered pseudo-labels are
/// assigned to student anchors, the student's noise parameters decay in
/// proportion to the share of consistent assignments, and the teacher takes an
/// EMA step toward the student.
pub fn run_colearning_sim(cfg: &SimConfig) -> Result<SimReport, SimError> {
    cfg.validate()?;
    let vocab = sim_vocabulary();
    let n_classes = vocab.len();
    let (label_map, labeled) = build_label_map(cfg)?;
    let mut state = ThresholdState::new(n_classes, cfg.run.threshold).map_err(|e| SimError::Config(e.to_string()))?;
    let mut teacher = cfg.detector.to_params();
    let mut student = teacher.clone();
    let ipi = cfg.run.images_per_iteration as u64;
    let mut records = Vec::with_capacity(cfg.run.iterations);

    for it in 0..cfg.run.iterations {
        let noise = cfg.detector.with_params(&teacher);
        let frames: Vec<(ImageInfo, Vec<GroundTruthBox>, Vec<Detection>)> = (0..ipi)
            .into_par_iter()
            .map(|j| {
                let image = image_info(&cfg.scene, ImageId(it as u64 * ipi + j + 1));
                let gts = generate_scene(&cfg.scene, image.id, &mut stream_rng(cfg.seed, Stream::Scene, image.id.0));
                let mut rng = stream_rng(cfg.seed, Stream::TeacherDetections, image.id.0);
                let dets = simulate_detector(&image, &gts, &noise, &label_map, &mut rng);
                (image, gts, dets)
            })
            .collect();

        let mut detections = vec![0usize; n_classes];
        for (_, _, dets) in &frames {
            for d in dets {
                detections[d.class_id.0] += 1;
                state.observe(d.class_id, [d.score]);
            }
        }
        let mut raw_thresholds = vec![None; n_classes];
        for u in state.update() {
            raw_thresholds[u.class_id.0] = u.raw;
        }
        let thresholds = state.thresholds().to_vec();

        let head_sigma = cfg.detector.with_params(&student).jitter_sigma;
        let per_image: Vec<(Vec<Detection>, ImageAssignment)> = frames
            .par_iter()
            .map(|(image, gts, dets)| {
                let labels = filter_with_thresholds(dets, &thresholds, cfg.run.nms_iou);
                let a = assign_image(cfg, image, gts, &labels, head_sigma, n_classes);
                (labels, a)
            })
            .collect();

        let mut pseudo_labels = vec![0usize; n_classes];
        let mut stats =
            AssignmentStats { positives: 0, consistent: 0, consistency: 0.0, mean_cost: 0.0, head_usage: vec![0; cfg.run.heads] };
        let mut cost_sum = 0.0;
        for (labels, a) in &per_image {
            for l in labels {
                pseudo_labels[l.class_id.0] += 1;
            }
            stats.positives += a.positives;
            stats.consistent += a.consistent;
            cost_sum += a.cost_sum;
            for (h, n) in a.head_usage.iter().enumerate() {
                stats.head_usage[h] += n;
            }
        }
        if stats.positives > 0 {
            stats.consistency = stats.consistent as f64 / stats.positives as f64;
            stats.mean_cost = cost_sum / stats.positives as f64;
        }

        let decay = 1.0 - cfg.run.student_rate * stats.consistency;
        student = student.map(|_, v| v * decay)?.with_version(it as u64 + 1);
        teacher = ema_update(&teacher, &student, cfg.run.ema_momentum)?;

        records.push(IterationRecord {
            iteration: it,
            window_sizes: (0..n_classes).map(|c| state.window_len(ClassId(c))).collect(),
            thresholds,
            raw_thresholds,
            detections,
            pseudo_labels,
            assignment: stats,
            teacher: teacher.values().collect(),
            student: student.values().collect(),
        });
    }

    let eval_data = eval_set(cfg)?;
    let teacher_dets = detect_all(cfg, &eval_data, &teacher, &label_map, Stream::EvalDetections);
    let student_dets = detect_all(cfg, &eval_data, &student, &label_map, Stream::EvalDetections);
    let pseudo = filter_with_thresholds(&teacher_dets, state.thresholds(), cfg.run.nms_iou);
    let final_eval = FinalEvaluation {
        eval_images: cfg.run.eval_images,
        teacher: evaluate_dataset(&eval_data, &teacher_dets, DEFAULT_IOU_THRESHOLD)?,
        student: evaluate_dataset(&eval_data, &student_dets, DEFAULT_IOU_THRESHOLD)?,
        pseudo_labels: evaluate_dataset(&eval_data, &pseudo, DEFAULT_IOU_THRESHOLD)?,
        thresholds: state.thresholds().to_vec(),
        teacher_params: teacher,
        student_params: student,
    };

    Ok(SimReport {
        config: cfg.clone(),
        classes: vocab.names().to_vec(),
        param_names: NOISE_PARAMS.iter().map(|s| s.to_string()).collect(),
        labeled,
        iterations: records,
        final_eval,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::config::DetectorNoise;

    fn small(seed: u64) -> SimConfig {
        let mut cfg = SimConfig { seed, ..SimConfig::default() };
        cfg.run.iterations = 12;
        cfg.run.eval_images = 16;
        cfg
    }

    #[test]
    fn deterministic() {
        let a = run_colearning_sim(&small(5)).unwrap();
        let b = run_colearning_sim(&small(5)).unwrap();
        assert_eq!(a.to_json_string(), b.to_json_string());
        assert_eq!(a.iterations.len(), 12);
        let c = run_colearning_sim(&small(6)).unwrap();
        assert_ne!(a.to_json_string(), c.to_json_string());
    }

    #[test]
    fn frozen_teacher_with_unit_momentum() {
        let mut cfg = small(1);
        cfg.run.ema_momentum = 1.0;
        let r = run_colearning_sim(&cfg).unwrap();
        let start: Vec<f64> = cfg.detector.to_params().values().collect();
        assert!(r.iterations.iter().all(|it| it.teacher == start));
        assert!(r.iterations.last().unwrap().student[0] < start[0]);
    }

    #[test]
    fn zero_noise_is_perfect() {
        let mut cfg = small(2);
        cfg.detector = DetectorNoise::zero();
        cfg.run.threshold.initial = cfg.run.threshold.floor;
        let r = run_colearning_sim(&cfg).unwrap();
        assert!((r.final_eval.teacher.map - 1.0).abs() < 1e-9);
        assert!((r.final_eval.pseudo_labels.map - 1.0).abs() < 1e-9);
        assert!((r.final_eval.student.map - 1.0).abs() < 1e-9);
    }

    #[test]
    fn pseudo_labels_never_exceed_detections() {
        let r = run_colearning_sim(&small(3)).unwrap();
        for it in &r.iterations {
            assert!(it.pseudo_labels.iter().zip(&it.detections).all(|(p, d)| p <= d));
        }
    }

    #[test]
    fn alignment_removes_split_labels() {
        let mut cfg = small(4);
        cfg.detector.synonym_split_rate = 0.5;
        let aligned = run_colearning_sim(&cfg).unwrap();
        assert!(aligned.labeled.split_labels_before > 0);
        assert_eq!(aligned.labeled.split_labels_after, 0);
        assert_eq!(aligned.labeled.align_issues, 0);
        cfg.run.align = false;
        let raw = run_colearning_sim(&cfg).unwrap();
        assert_eq!(raw.labeled.split_labels_after, raw.labeled.split_labels_before);
        assert!(aligned.final_map() > raw.final_map());
    }
}
