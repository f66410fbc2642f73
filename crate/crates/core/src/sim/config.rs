use serde::{Deserialize, Serialize};

use super::SimError;
use crate::assign::AssignConfig;
use crate::ema::{ParamVector, DEFAULT_EMA_MOMENTUM};
use crate::model::DEFAULT_CLASSES;
use crate::pseudo::{ThresholdConfig, DEFAULT_NMS_IOU};

/// Names of the detector parameters carried by the teacher and student vectors.
pub const NOISE_PARAMS: [&str; 4] = ["jitter_sigma", "confusion_rate", "drop_rate", "spurious_rate"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SceneConfig {
    pub image_width: u32,
    pub image_height: u32,
    pub objects_min: usize,
    pub objects_max: usize,
    /// Relative frequency of each canonical class.
    pub class_weights: Vec<f64>,
    pub min_box_size: u32,
    pub max_box_size: u32,
    /// Placement retries aim to keep same-image boxes below this overlap.
    pub max_overlap_iou: f64,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            image_width: 640,
            image_height: 480,
            objects_min: 2,
            objects_max: 6,
            class_weights: vec![0.30, 0.06, 0.12, 0.20, 0.12, 0.12, 0.08],
            min_box_size: 24,
            max_box_size: 120,
            max_overlap_iou: 0.3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorNoise {
    /// Standard deviation (pixels) of the Gaussian jitter on each box coordinate.
    pub jitter_sigma: f64,
    pub confusion_rate: f64,
    pub drop_rate: f64,
    /// Chance that each ground-truth object also spawns a spurious box.
    pub spurious_rate: f64,
    /// Fraction of labeled-set boxes annotated with a color-qualified label such as "red-van".
    pub synonym_split_rate: f64,
    pub score_base: f64,
    /// Score lost per pixel of jitter magnitude.
    pub score_jitter_coef: f64,
    pub score_noise: f64,
    pub spurious_score_mean: f64,
    pub spurious_score_sd: f64,
}

impl Default for DetectorNoise {
    fn default() -> Self {
        Self {
            jitter_sigma: 3.0,
            confusion_rate: 0.05,
            drop_rate: 0.1,
            spurious_rate: 0.3,
            synonym_split_rate: 0.0,
            score_base: 0.9,
            score_jitter_coef: 0.02,
            score_noise: 0.05,
            spurious_score_mean: 0.3,
            spurious_score_sd: 0.1,
        }
    }
}

impl DetectorNoise {
    pub fn zero() -> Self {
        Self {
            jitter_sigma: 0.0,
            confusion_rate: 0.0,
            drop_rate: 0.0,
            spurious_rate: 0.0,
            synonym_split_rate: 0.0,
            score_noise: 0.0,
            ..Self::default()
        }
    }

    pub fn to_params(&self) -> ParamVector {
        ParamVector::new([
            (NOISE_PARAMS[0], self.jitter_sigma),
            (NOISE_PARAMS[1], self.confusion_rate),
            (NOISE_PARAMS[2], self.drop_rate),
            (NOISE_PARAMS[3], self.spurious_rate),
        ])
        .expect("validated noise parameters")
    }

    /// Copy with the four learnable parameters taken from `params`; rates are clamped to [0,1].
    pub fn with_params(&self, params: &ParamVector) -> Self {
        let get = |i: usize, fallback: f64| params.get(NOISE_PARAMS[i]).unwrap_or(fallback);
        Self {
            jitter_sigma: get(0, self.jitter_sigma).max(0.0),
            confusion_rate: get(1, self.confusion_rate).clamp(0.0, 1.0),
            drop_rate: get(2, self.drop_rate).clamp(0.0, 1.0),
            spurious_rate: get(3, self.spurious_rate).clamp(0.0, 1.0),
            ..*self
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let rates = [
            ("confusion_rate", self.confusion_rate),
            ("drop_rate", self.drop_rate),
            ("spurious_rate", self.spurious_rate),
            ("synonym_split_rate", self.synonym_split_rate),
            ("score_base", self.score_base),
            ("spurious_score_mean", self.spurious_score_mean),
        ];
        for (name, v) in rates {
            if !(0.0..=1.0).contains(&v) {
                return Err(SimError::Config(format!("detector.{name} = {v} outside [0,1]")));
            }
        }
        let nonneg = [
            ("jitter_sigma", self.jitter_sigma),
            ("score_jitter_coef", self.score_jitter_coef),
            ("score_noise", self.score_noise),
            ("spurious_score_sd", self.spurious_score_sd),
        ];
        for (name, v) in nonneg {
            if !(v.is_finite() && v >= 0.0) {
                return Err(SimError::Config(format!("detector.{name} = {v} must be finite and >= 0")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LoopConfig {
    pub iterations: usize,
    pub images_per_iteration: usize,
    /// Held-out images for the final evaluation.
    pub eval_images: usize,
    /// Share of labeled images relative to everything the loop sees.
    pub labeled_fraction: f64,
    /// Run annotation alignment on the labeled set before using its labels.
    pub align: bool,
    pub nms_iou: f64,
    pub threshold: ThresholdConfig,
    pub assign: AssignConfig,
    pub ema_momentum: f64,
    /// Noise decay per unit of assignment consistency.
    pub student_rate: f64,
    pub heads: usize,
    pub anchors_per_object: usize,
    pub background_anchors: usize,
    /// Anchor offset as a fraction of object size.
    pub anchor_jitter: f64,
}

impl Default for LoopConfig {
    fn default() -> Self {
        Self {
            iterations: 500,
            images_per_iteration: 8,
            eval_images: 64,
            labeled_fraction: 0.1,
            align: true,
            nms_iou: DEFAULT_NMS_IOU,
            threshold: ThresholdConfig::default(),
            assign: AssignConfig::default(),
            ema_momentum: DEFAULT_EMA_MOMENTUM,
            student_rate: 0.01,
            heads: 2,
            anchors_per_object: 4,
            background_anchors: 8,
            anchor_jitter: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub seed: u64,
    pub scene: SceneConfig,
    pub detector: DetectorNoise,
    #[serde(rename = "loop")]
    pub run: LoopConfig,
}

impl SimConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, SimError> {
        let cfg: SimConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::Config(m));
        let s = &self.scene;
        if s.image_width == 0 || s.image_height == 0 {
            return bad("scene image size must be positive".into());
        }
        if s.objects_min > s.objects_max {
            return bad(format!("scene.objects_min {} > objects_max {}", s.objects_min, s.objects_max));
        }
        if s.class_weights.len() != DEFAULT_CLASSES.len() {
            return bad(format!("scene.class_weights needs {} entries, got {}", DEFAULT_CLASSES.len(), s.class_weights.len()));
        }
        if s.class_weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) || s.class_weights.iter().sum::<f64>() <= 0.0 {
            return bad("scene.class_weights must be non-negative with a positive sum".into());
        }
        if s.min_box_size == 0 || s.min_box_size > s.max_box_size || s.max_box_size > s.image_width.min(s.image_height) {
            return bad(format!(
                "scene box sizes need 1 <= min_box_size <= max_box_size <= image side, got {}..{}",
                s.min_box_size, s.max_box_size
            ));
        }
        if !(0.0..=1.0).contains(&s.max_overlap_iou) {
            return bad(format!("scene.max_overlap_iou = {} outside [0,1]", s.max_overlap_iou));
        }
        self.detector.validate()?;
        let r = &self.run;
        if r.iterations == 0 {
            return bad("loop.iterations must be at least 1".into());
        }
        if r.images_per_iteration == 0 {
            return bad("loop.images_per_iteration must be at least 1".into());
        }
        if !(0.0..1.0).contains(&r.labeled_fraction) {
            return bad(format!("loop.labeled_fraction = {} outside [0,1)", r.labeled_fraction));
        }
        for (name, v) in [
            ("nms_iou", r.nms_iou),
            ("ema_momentum", r.ema_momentum),
            ("student_rate", r.student_rate),
            ("anchor_jitter", r.anchor_jitter),
            ("assign.iou_threshold", r.assign.iou_threshold),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return bad(format!("loop.{name} = {v} outside [0,1]"));
            }
        }
        if r.assign.k == 0 {
            return bad("loop.assign.k must be at least 1".into());
        }
        if !(r.assign.weights.cls >= 0.0 && r.assign.weights.reg >= 0.0) {
            return bad("loop.assign.weights must be non-negative".into());
        }
        if r.heads == 0 {
            return bad("loop.heads must be at least 1".into());
        }
        r.threshold.validate().map_err(|e| SimError::Config(format!("loop.threshold: {e}")))?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid_and_round_trip() {
        let cfg = SimConfig::default();
        cfg.validate().unwrap();
        let back = SimConfig::from_toml_str(&cfg.to_toml_string()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn partial_toml() {
        let cfg = SimConfig::from_toml_str("seed = 7\n[detector]\njitter_sigma = 1.5\n[loop]\niterations = 3\n").unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.detector.jitter_sigma, 1.5);
        assert_eq!(cfg.run.iterations, 3);
        assert_eq!(cfg.run.images_per_iteration, 8);
    }

    #[test]
    fn rejects_bad_values() {
        assert!(matches!(SimConfig::from_toml_str("[detector]\ndrop_rate = 1.5\n"), Err(SimError::Config(_))));
        assert!(matches!(SimConfig::from_toml_str("[loop]\niterations = 0\n"), Err(SimError::Config(_))));
        assert!(matches!(SimConfig::from_toml_str("[detector]\njitter_sigma = -1.0\n"), Err(SimError::Config(_))));
        assert!(matches!(SimConfig::from_toml_str("bogus = 1\n"), Err(SimError::Toml(_))));
    }

    #[test]
    fn params_round_trip() {
        let n = DetectorNoise::default();
        assert_eq!(n.with_params(&n.to_params()), n);
    }
}
