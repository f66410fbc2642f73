use std::collections::{HashMap, HashSet};
use std::fmt;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use thiserror::Error;

use super::bbox::BBox;

/// The seven vehicle classes reported per column in the evaluation table.
pub const DEFAULT_CLASSES: [&str; 7] = ["sedan", "bus", "pickup-truck", "suv", "hatchback", "van", "truck"];

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("schema error at {location}: {message}")]
    Schema { location: String, message: String },
    #[error("validation error at {location}: {message}")]
    Validation { location: String, message: String },
}

impl DatasetError {
    fn schema(location: impl Into<String>, message: impl fmt::Display) -> Self {
        DatasetError::Schema { location: location.into(), message: message.to_string() }
    }

    fn validation(location: impl Into<String>, message: impl fmt::Display) -> Self {
        DatasetError::Validation { location: location.into(), message: message.to_string() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ImageId(pub u64);

impl fmt::Display for ImageId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Index into a [`ClassVocabulary`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ClassId(pub usize);

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct ClassVocabulary {
    names: Vec<String>,
}

impl ClassVocabulary {
    /// Names must be unique, lowercase and non-empty.
    pub fn new<S: Into<String>>(names: impl IntoIterator<Item = S>) -> Result<Self, DatasetError> {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        let mut seen = HashSet::new();
        for (i, name) in names.iter().enumerate() {
            let loc = format!("classes[{i}]");
            if name.trim().is_empty() {
                return Err(DatasetError::validation(loc, "class name is empty"));
            }
            if name.to_lowercase() != *name {
                return Err(DatasetError::validation(loc, format!("class name '{name}' is not lowercase")));
            }
            if !seen.insert(name.as_str()) {
                return Err(DatasetError::validation(loc, format!("duplicate class name '{name}'")));
            }
        }
        Ok(Self { names })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, id: ClassId) -> Option<&str> {
        self.names.get(id.0).map(String::as_str)
    }

    pub fn index_of(&self, name: &str) -> Option<ClassId> {
        self.names.iter().position(|n| n == name).map(ClassId)
    }

    pub fn contains(&self, id: ClassId) -> bool {
        id.0 < self.names.len()
    }

    pub fn ids(&self) -> impl Iterator<Item = ClassId> {
        (0..self.names.len()).map(ClassId)
    }
}

impl Default for ClassVocabulary {
    fn default() -> Self {
        Self { names: DEFAULT_CLASSES.iter().map(|s| s.to_string()).collect() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageInfo {
    pub id: ImageId,
    pub width: u32,
    pub height: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthBox {
    pub image_id: ImageId,
    pub bbox: BBox,
    pub class_id: ClassId,
    pub description: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub image_id: ImageId,
    pub bbox: BBox,
    pub class_id: ClassId,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub vocabulary: ClassVocabulary,
    pub images: Vec<ImageInfo>,
    pub ground_truth: Vec<GroundTruthBox>,
    pub detections: Option<Vec<Detection>>,
}

// On-disk record shapes. Unknown fields are ignored; missing required fields are errors.
#[derive(Deserialize)]
struct RawTop {
    classes: Vec<String>,
    images: Vec<Value>,
    ground_truth: Vec<Value>,
    #[serde(default)]
    detections: Option<Vec<Value>>,
}

#[derive(Deserialize)]
struct RawGroundTruth {
    image_id: u64,
    bbox: [f64; 4],
    class: String,
    #[serde(default)]
    description: Option<String>,
}

#[derive(Deserialize)]
struct RawDetection {
    image_id: u64,
    bbox: [f64; 4],
    class: String,
    score: f64,
}

fn parse_record<T: DeserializeOwned>(value: &Value, location: &str) -> Result<T, DatasetError> {
    T::deserialize(value).map_err(|e| DatasetError::schema(location, e))
}

fn parse_bbox(raw: [f64; 4], location: &str) -> Result<BBox, DatasetError> {
    BBox::new(raw[0], raw[1], raw[2], raw[3]).map_err(|e| DatasetError::validation(location, e))
}

fn resolve_class(vocab: &ClassVocabulary, name: &str, location: &str) -> Result<ClassId, DatasetError> {
    vocab
        .index_of(name)
        .ok_or_else(|| DatasetError::validation(location, format!("class '{name}' is not listed in \"classes\"")))
}

fn parse_detection_records(
    records: &[Value],
    vocab: &ClassVocabulary,
    section: &str,
) -> Result<Vec<Detection>, DatasetError> {
    records
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let loc = format!("{section}[{i}]");
            let raw: RawDetection = parse_record(v, &loc)?;
            Ok(Detection {
                image_id: ImageId(raw.image_id),
                bbox: parse_bbox(raw.bbox, &loc)?,
                class_id: resolve_class(vocab, &raw.class, &loc)?,
                score: raw.score,
            })
        })
        .collect()
}

impl Dataset {
    /// Builds a dataset and checks every invariant.
    pub fn new(
        vocabulary: ClassVocabulary,
        images: Vec<ImageInfo>,
        ground_truth: Vec<GroundTruthBox>,
        detections: Option<Vec<Detection>>,
    ) -> Result<Self, DatasetError> {
        let d = Self { vocabulary, images, ground_truth, detections };
        d.validate()?;
        Ok(d)
    }

    pub fn image_map(&self) -> HashMap<ImageId, ImageInfo> {
        self.images.iter().map(|im| (im.id, *im)).collect()
    }

    pub fn validate(&self) -> Result<(), DatasetError> {
        let mut images = HashMap::new();
        for (i, im) in self.images.iter().enumerate() {
            let loc = format!("images[{i}]");
            if im.width == 0 || im.height == 0 {
                return Err(DatasetError::validation(loc, "image width and height must be positive"));
            }
            if images.insert(im.id, *im).is_some() {
                return Err(DatasetError::validation(loc, format!("duplicate image id {}", im.id)));
            }
        }
        for (i, gt) in self.ground_truth.iter().enumerate() {
            let loc = format!("ground_truth[{i}]");
            self.check_box(&images, gt.image_id, &gt.bbox, gt.class_id, &loc)?;
            if let Some(desc) = &gt.description {
                if desc.trim().is_empty() {
                    return Err(DatasetError::validation(loc, "description is empty"));
                }
            }
        }
        if let Some(dets) = &self.detections {
            validate_detections(self, &images, dets, "detections")?;
        }
        Ok(())
    }

    fn check_box(
        &self,
        images: &HashMap<ImageId, ImageInfo>,
        image_id: ImageId,
        bbox: &BBox,
        class_id: ClassId,
        loc: &str,
    ) -> Result<(), DatasetError> {
        let im = images
            .get(&image_id)
            .ok_or_else(|| DatasetError::validation(loc, format!("unknown image_id {image_id}")))?;
        if !self.vocabulary.contains(class_id) {
            return Err(DatasetError::validation(loc, format!("class index {} out of range", class_id.0)));
        }
        if !bbox.within(im.width as f64, im.height as f64) {
            return Err(DatasetError::validation(
                loc,
                format!("bbox {:?} exceeds image {} bounds {}x{}", bbox.to_array(), im.id, im.width, im.height),
            ));
        }
        Ok(())
    }

    /// Parses the JSON dataset schema and validates all invariants.
    pub fn from_json_str(text: &str) -> Result<Self, DatasetError> {
        let value: Value = serde_json::from_str(text)?;
        Self::from_json_value(&value)
    }

    pub fn from_json_value(value: &Value) -> Result<Self, DatasetError> {
        let top: RawTop = parse_record(value, "<root>")?;
        let vocabulary = ClassVocabulary::new(top.classes)?;
        let images = top
            .images
            .iter()
            .enumerate()
            .map(|(i, v)| parse_record::<ImageInfo>(v, &format!("images[{i}]")))
            .collect::<Result<Vec<_>, _>>()?;
        let ground_truth = top
            .ground_truth
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let loc = format!("ground_truth[{i}]");
                let raw: RawGroundTruth = parse_record(v, &loc)?;
                Ok(GroundTruthBox {
                    image_id: ImageId(raw.image_id),
                    bbox: parse_bbox(raw.bbox, &loc)?,
                    class_id: resolve_class(&vocabulary, &raw.class, &loc)?,
                    description: raw.description,
                })
            })
            .collect::<Result<Vec<_>, DatasetError>>()?;
        let detections = top
            .detections
            .as_deref()
            .map(|recs| parse_detection_records(recs, &vocabulary, "detections"))
            .transpose()?;
        Self::new(vocabulary, images, ground_truth, detections)
    }

    pub fn to_json_value(&self) -> Value {
        let mut top = Map::new();
        top.insert("classes".into(), json!(self.vocabulary.names()));
        top.insert("images".into(), json!(self.images));
        let gts: Vec<Value> = self
            .ground_truth
            .iter()
            .map(|g| {
                let mut rec = Map::new();
                rec.insert("image_id".into(), json!(g.image_id));
                rec.insert("bbox".into(), json!(g.bbox));
                rec.insert("class".into(), json!(self.vocabulary.name(g.class_id)));
                if let Some(desc) = &g.description {
                    rec.insert("description".into(), json!(desc));
                }
                Value::Object(rec)
            })
            .collect();
        top.insert("ground_truth".into(), Value::Array(gts));
        if let Some(dets) = &self.detections {
            top.insert("detections".into(), detections_to_json(&self.vocabulary, dets));
        }
        Value::Object(top)
    }

    /// Checks detections against this dataset's images and classes.
    pub fn validate_detections(&self, dets: &[Detection], section: &str) -> Result<(), DatasetError> {
        validate_detections(self, &self.image_map(), dets, section)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.to_json_value()).expect("dataset serializes")
    }
}

fn validate_detections(
    d: &Dataset,
    images: &HashMap<ImageId, ImageInfo>,
    dets: &[Detection],
    section: &str,
) -> Result<(), DatasetError> {
    for (i, det) in dets.iter().enumerate() {
        let loc = format!("{section}[{i}]");
        if !(0.0..=1.0).contains(&det.score) {
            return Err(DatasetError::validation(loc, format!("score out of [0,1]: {}", det.score)));
        }
        d.check_box(images, det.image_id, &det.bbox, det.class_id, &loc)?;
    }
    Ok(())
}

/// Serializes detections in the file schema (`image_id`, `bbox`, `class`, `score`).
pub fn detections_to_json(vocab: &ClassVocabulary, dets: &[Detection]) -> Value {
    Value::Array(
        dets.iter()
            .map(|d| {
                json!({
                    "image_id": d.image_id,
                    "bbox": d.bbox,
                    "class": vocab.name(d.class_id),
                    "score": d.score,
                })
            })
            .collect(),
    )
}

/// Parses a detection list against `dataset`'s classes and images.
///
/// Accepts a bare array of detection records or an object with a `detections` array
/// (for instance a full dataset file or a pseudo-label dump).
pub fn detections_from_json_value(value: &Value, dataset: &Dataset) -> Result<Vec<Detection>, DatasetError> {
    let (records, section) = match value {
        Value::Array(a) => (a.as_slice(), "detections"),
        Value::Object(m) => match m.get("detections").or_else(|| m.get("labels")) {
            Some(Value::Array(a)) => (a.as_slice(), if m.contains_key("detections") { "detections" } else { "labels" }),
            _ => return Err(DatasetError::schema("<root>", "expected an array of detections or an object with a \"detections\" array")),
        },
        _ => return Err(DatasetError::schema("<root>", "expected an array of detections")),
    };
    let dets = parse_detection_records(records, &dataset.vocabulary, section)?;
    validate_detections(dataset, &dataset.image_map(), &dets, section)?;
    Ok(dets)
}

fn read_json(path: &Path) -> Result<Value, DatasetError> {
    let text = std::fs::read_to_string(path).map_err(|source| DatasetError::Io { path: path.to_path_buf(), source })?;
    Ok(serde_json::from_str(&text)?)
}

/// Reads and validates a dataset file.
pub fn load_dataset(path: impl AsRef<Path>) -> Result<Dataset, DatasetError> {
    Dataset::from_json_value(&read_json(path.as_ref())?)
}

pub fn load_detections(path: impl AsRef<Path>, dataset: &Dataset) -> Result<Vec<Detection>, DatasetError> {
    detections_from_json_value(&read_json(path.as_ref())?, dataset)
}
