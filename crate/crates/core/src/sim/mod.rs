//! Deterministic synthetic scenes and a teacher-student loop over them.
//!
//! There is no network: the detector is a parametric noise model and the
//! student "learns" by a fixed decay rule on its noise parameters, driven by
//! how consistent its anchor assignments are. All randomness is keyed by the
//! config seed.

mod config;
mod detector;
pub mod rng;
mod run;
mod scene;

use thiserror::Error;

pub use config::{DetectorNoise, LoopConfig, SceneConfig, SimConfig, NOISE_PARAMS};
pub use detector::{jitter_box, simulate_detector, LabelMap};
pub use run::{
    run_colearning_sim, AssignmentStats, FinalEvaluation, IterationRecord, LabeledSummary, SimReport, TimeSeriesRow,
};
pub use scene::{
    canonical_of, generate_objects, generate_scene, image_info, sim_vocabulary, split_class_id, split_label,
    SceneObject, SCENE_COLORS,
};

use crate::ema::EmaError;
use crate::model::DatasetError;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid simulator config: {0}")]
    Config(String),
    #[error("cannot parse simulator config: {0}")]
    Toml(#[from] toml::de::Error),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Ema(#[from] EmaError),
}
