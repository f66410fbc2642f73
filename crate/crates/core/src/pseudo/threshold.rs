use std::collections::VecDeque;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::gmm::{fit_gmm, posterior_crossover, EmConfig, GmmModel};
use crate::model::ClassId;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ThresholdError {
    #[error("invalid threshold configuration: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThresholdConfig {
    pub floor: f64,
    pub cap: f64,
    /// Threshold used for every class before its first successful fit.
    pub initial: f64,
    /// Weight on the previous threshold when blending in a new estimate.
    pub smoothing: f64,
    /// Number of most recent scores per class kept for fitting.
    pub window: usize,
    pub em: EmConfig,
}

impl Default for ThresholdConfig {
    fn default() -> Self {
        Self { floor: 0.30, cap: 0.95, initial: 0.9, smoothing: 0.9, window: 4096, em: EmConfig::default() }
    }
}

impl ThresholdConfig {
    pub fn validate(&self) -> Result<(), ThresholdError> {
        let bad = |m: String| Err(ThresholdError::Config(m));
        if !(0.0..=1.0).contains(&self.floor) || !(0.0..=1.0).contains(&self.cap) || self.floor > self.cap {
            return bad(format!("need 0 <= floor <= cap <= 1, got floor={} cap={}", self.floor, self.cap));
        }
        if !(self.floor..=self.cap).contains(&self.initial) {
            return bad(format!("initial threshold {} outside [floor, cap]", self.initial));
        }
        if !(0.0..=1.0).contains(&self.smoothing) {
            return bad(format!("smoothing rate {} outside [0,1]", self.smoothing));
        }
        if self.window < 4 {
            return bad(format!("score window {} is smaller than the 4 scores a fit needs", self.window));
        }
        if self.em.max_iters == 0 || !(self.em.tol > 0.0) {
            return bad("EM needs max_iters >= 1 and tol > 0".into());
        }
        Ok(())
    }

    pub fn clamp(&self, t: f64) -> f64 {
        t.clamp(self.floor, self.cap)
    }
}

/// Posterior crossover of `gmm`, clamped to `[floor, cap]`.
pub fn dynamic_threshold(gmm: &GmmModel, config: &ThresholdConfig) -> f64 {
    config.clamp(posterior_crossover(gmm))
}

/// `m * prev + (1 - m) * new`, kept inside the interval spanned by `prev` and `new`.
pub fn smooth_threshold(prev: f64, new: f64, m: f64) -> f64 {
    let v = m * prev + (1.0 - m) * new;
    v.clamp(prev.min(new), prev.max(new))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdUpdate {
    pub class_id: ClassId,
    /// `None` when the window could not be fitted and the previous value was kept.
    pub raw: Option<f64>,
    pub smoothed: f64,
    pub n_scores: usize,
}

/// Per-class smoothed thresholds plus the score windows they are fitted on.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdState {
    config: ThresholdConfig,
    thresholds: Vec<f64>,
    windows: Vec<VecDeque<f64>>,
    iteration: u64,
}

impl ThresholdState {
    pub fn new(n_classes: usize, config: ThresholdConfig) -> Result<Self, ThresholdError> {
        config.validate()?;
        Ok(Self {
            config,
            thresholds: vec![config.initial; n_classes],
            windows: vec![VecDeque::new(); n_classes],
            iteration: 0,
        })
    }

    /// State with explicit, fixed per-class thresholds (clamped to the bounds).
    pub fn with_thresholds(thresholds: Vec<f64>, config: ThresholdConfig) -> Result<Self, ThresholdError> {
        let mut s = Self::new(thresholds.len(), config)?;
        s.thresholds = thresholds.into_iter().map(|t| config.clamp(t)).collect();
        Ok(s)
    }

    pub fn config(&self) -> &ThresholdConfig {
        &self.config
    }

    pub fn iteration(&self) -> u64 {
        self.iteration
    }

    pub fn n_classes(&self) -> usize {
        self.thresholds.len()
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    pub fn threshold(&self, class: ClassId) -> Option<f64> {
        self.thresholds.get(class.0).copied()
    }

    pub fn window_len(&self, class: ClassId) -> usize {
        self.windows.get(class.0).map_or(0, VecDeque::len)
    }

    /// Appends scores to a class window, evicting the oldest beyond the window size.
    pub fn observe(&mut self, class: ClassId, scores: impl IntoIterator<Item = f64>) {
        let Some(w) = self.windows.get_mut(class.0) else { return };
        w.extend(scores);
        while w.len() > self.config.window {
            w.pop_front();
        }
    }

    /// Refits every class with a non-empty window and blends the new estimate into
    /// the running threshold. Classes whose fit is degenerate keep their value.
    pub fn update(&mut self) -> Vec<ThresholdUpdate> {
        let config = self.config;
        let raws: Vec<Option<Option<f64>>> = self
            .windows
            .par_iter_mut()
            .map(|window| {
                if window.is_empty() {
                    return None;
                }
                let scores = window.make_contiguous();
                Some(fit_gmm(scores, &config.em).ok().map(|g| dynamic_threshold(&g, &config)))
            })
            .collect();
        let mut out = Vec::new();
        for (i, raw) in raws.into_iter().enumerate() {
            let Some(raw) = raw else { continue };
            if let Some(r) = raw {
                self.thresholds[i] = config.clamp(smooth_threshold(self.thresholds[i], r, config.smoothing));
            }
            out.push(ThresholdUpdate {
                class_id: ClassId(i),
                raw,
                smoothed: self.thresholds[i],
                n_scores: self.windows[i].len(),
            });
        }
        self.iteration += 1;
        out
    }
}

/// One line of the threshold trace (JSON lines).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdTraceRecord {
    pub iteration: u64,
    pub class: String,
    pub raw_threshold: Option<f64>,
    pub smoothed_threshold: f64,
    pub n_scores: usize,
    pub kept_count: usize,
}

pub fn trace_to_jsonl(records: &[ThresholdTraceRecord]) -> String {
    let mut s = String::new();
    for r in records {
        s.push_str(&serde_json::to_string(r).expect("trace record serializes"));
        s.push('\n');
    }
    s
}
