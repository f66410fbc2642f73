//! Co-learning pipeline for fine-grained vehicle detection: description alignment,
//! dynamic pseudo-label filtering, cost-based label assignment, an EMA teacher, and
//! an AP/mAP evaluator, with a synthetic simulator tying them together.

pub mod align;
pub mod assign;
pub mod ema;
pub mod eval;
pub mod model;
pub mod pseudo;
pub mod sim;
