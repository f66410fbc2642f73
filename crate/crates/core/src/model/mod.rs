//! Domain types shared by every stage: boxes, detections, ground truth and datasets.

mod bbox;
mod dataset;

pub use bbox::{iou, BBox, BBoxError};
pub use dataset::{
    detections_from_json_value, detections_to_json, load_dataset, load_detections, ClassId, ClassVocabulary, Dataset,
    DatasetError, Detection, GroundTruthBox, ImageId, ImageInfo, DEFAULT_CLASSES,
};
