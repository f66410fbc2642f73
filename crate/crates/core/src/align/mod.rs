//! Annotation alignment: free-text vehicle descriptions are normalized
//! (lowercasing, punctuation stripping, stopword removal, lemma exceptions and
//! Porter stemming), reduced to a (color, type, motion) triple by ordered
//! lexicon matching, and collapsed onto canonical box-level class labels.

mod lexicon;
pub mod porter;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use lexicon::{ClusterRule, Lexicon, LexiconError, LexiconFile};

use crate::model::{ClassId, Dataset};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AlignError {
    #[error("description names no vehicle type")]
    MissingType,
    #[error("no cluster covers vehicle type '{0}'")]
    UnknownType(String),
}

/// Extracted attribute triple; absent slots are `None`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Attributes {
    pub color: Option<String>,
    pub vehicle_type: Option<String>,
    pub motion: Option<String>,
}

impl Attributes {
    pub fn new(color: Option<&str>, vehicle_type: Option<&str>, motion: Option<&str>) -> Self {
        Self {
            color: color.map(str::to_string),
            vehicle_type: vehicle_type.map(str::to_string),
            motion: motion.map(str::to_string),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StandardizedDescription {
    pub attr_c: Option<String>,
    pub attr_t: String,
    pub attr_m: Option<String>,
    pub canonical_class: ClassId,
}

impl StandardizedDescription {
    pub fn text(&self) -> String {
        join_present([self.attr_c.as_deref(), Some(self.attr_t.as_str()), self.attr_m.as_deref()])
    }
}

fn join_present<'a>(parts: impl IntoIterator<Item = Option<&'a str>>) -> String {
    parts.into_iter().flatten().collect::<Vec<_>>().join(" ")
}

/// Lowercases, strips punctuation, drops stopwords and lemmatizes each remaining
/// token, preserving order. Apostrophes are deleted (so "driver's" stays one
/// token); every other non-alphanumeric character separates tokens.
pub fn normalize_tokens(text: &str, lexicon: &Lexicon) -> Vec<String> {
    let lowered: String = text.to_lowercase().chars().filter(|c| !matches!(c, '\'' | '\u{2019}')).collect();
    lowered
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty() && !lexicon.is_stopword(t))
        .map(|t| lexicon.lemma(t))
        .filter(|t| !lexicon.is_stopword(t))
        .collect()
}

/// Leftmost match per attribute table; at one position the longest phrase wins.
pub fn extract_attributes(tokens: &[String], lexicon: &Lexicon) -> Attributes {
    Attributes {
        color: lexicon.colors.first_match(tokens).map(str::to_string),
        vehicle_type: lexicon.types.first_match(tokens).map(str::to_string),
        motion: lexicon.motions.first_match(tokens).map(str::to_string),
    }
}

/// Single-space join of the present attributes in color, type, motion order.
pub fn standardize(attrs: &Attributes) -> Result<String, AlignError> {
    let t = attrs.vehicle_type.as_deref().ok_or(AlignError::MissingType)?;
    Ok(join_present([attrs.color.as_deref(), Some(t), attrs.motion.as_deref()]))
}

pub fn canonicalize_class(attrs: &Attributes, lexicon: &Lexicon) -> Result<ClassId, AlignError> {
    let t = attrs.vehicle_type.as_deref().ok_or(AlignError::MissingType)?;
    let label = lexicon.cluster_label(attrs.color.as_deref(), t).ok_or_else(|| AlignError::UnknownType(t.to_string()))?;
    // Lexicon construction guarantees cluster labels are vocabulary members.
    Ok(lexicon.class_index(label).expect("cluster label in vocabulary"))
}

/// Full pipeline for one description string.
pub fn describe(text: &str, lexicon: &Lexicon) -> Result<StandardizedDescription, AlignError> {
    let attrs = extract_attributes(&normalize_tokens(text, lexicon), lexicon);
    let canonical_class = canonicalize_class(&attrs, lexicon)?;
    Ok(StandardizedDescription {
        attr_c: attrs.color,
        attr_t: attrs.vehicle_type.expect("checked by canonicalize_class"),
        attr_m: attrs.motion,
        canonical_class,
    })
}

/// A ground-truth record whose description could not be aligned.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlignIssue {
    pub record_index: usize,
    pub reason: String,
}

/// Relabels every described ground-truth box with the canonical class of its
/// description. Records that fail keep their label and are reported; records
/// without a description are left alone. The vocabulary is never changed.
pub fn align_dataset(dataset: &Dataset, lexicon: &Lexicon) -> (Dataset, Vec<AlignIssue>) {
    let mut out = dataset.clone();
    let mut issues = Vec::new();
    for (i, gt) in out.ground_truth.iter_mut().enumerate() {
        let Some(desc) = gt.description.as_deref() else { continue };
        let label = describe(desc, lexicon)
            .map_err(|e| e.to_string())
            .and_then(|sd| {
                let name = lexicon.vocabulary().name(sd.canonical_class).expect("lexicon class");
                dataset
                    .vocabulary
                    .index_of(name)
                    .ok_or_else(|| format!("canonical label '{name}' is not in the dataset vocabulary"))
            });
        match label {
            Ok(class_id) => gt.class_id = class_id,
            Err(reason) => issues.push(AlignIssue { record_index: i, reason }),
        }
    }
    (out, issues)
}
