use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::porter::stem_to_fixpoint;
use crate::model::{ClassId, ClassVocabulary};

const DEFAULT_LEXICON: &str = include_str!("../../data/default_lexicon.json");

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed lexicon JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid lexicon: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterRule {
    pub color: Option<String>,
    #[serde(rename = "type")]
    pub vehicle_type: String,
    pub label: String,
}

/// The lexicon file as stored on disk. Missing sections are empty.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct LexiconFile {
    pub colors: BTreeMap<String, String>,
    pub types: BTreeMap<String, String>,
    pub motions: BTreeMap<String, String>,
    pub lemma_exceptions: BTreeMap<String, String>,
    pub stopwords: Vec<String>,
    pub clusters: Vec<ClusterRule>,
}

/// One attribute table with its keys pre-normalized into token phrases.
#[derive(Debug, Clone)]
pub(crate) struct TermTable {
    /// Sorted longest phrase first so a scan can take the first hit at a position.
    phrases: Vec<(Vec<String>, String)>,
}

impl TermTable {
    /// Longest phrase matching at `tokens[pos..]`.
    pub(crate) fn match_at(&self, tokens: &[String], pos: usize) -> Option<&str> {
        self.phrases
            .iter()
            .find(|(phrase, _)| tokens[pos..].starts_with(phrase))
            .map(|(_, canonical)| canonical.as_str())
    }

    /// First (leftmost) match in `tokens`.
    pub(crate) fn first_match(&self, tokens: &[String]) -> Option<&str> {
        (0..tokens.len()).find_map(|pos| self.match_at(tokens, pos))
    }

    pub(crate) fn canonical_values(&self) -> impl Iterator<Item = &str> {
        self.phrases.iter().map(|(_, c)| c.as_str())
    }
}

/// Validated, ready-to-use vocabulary for description parsing.
#[derive(Debug, Clone)]
pub struct Lexicon {
    vocabulary: ClassVocabulary,
    pub(crate) colors: TermTable,
    pub(crate) types: TermTable,
    pub(crate) motions: TermTable,
    lemma_exceptions: HashMap<String, String>,
    lemma_values: HashSet<String>,
    stopwords: HashSet<String>,
    clusters: HashMap<(Option<String>, String), String>,
    source: LexiconFile,
}

fn check_lowercase<'a>(what: &str, terms: impl IntoIterator<Item = &'a String>) -> Result<(), LexiconError> {
    for t in terms {
        if t.trim().is_empty() {
            return Err(LexiconError::Invalid(format!("{what}: empty term")));
        }
        if t.to_lowercase() != *t {
            return Err(LexiconError::Invalid(format!("{what}: term '{t}' is not lowercase")));
        }
    }
    Ok(())
}

impl Lexicon {
    /// The curated lexicon bundled with the crate, targeting the seven default classes.
    pub fn default_lexicon() -> Self {
        Self::from_json_str(DEFAULT_LEXICON, ClassVocabulary::default()).expect("bundled lexicon is valid")
    }

    pub fn load(path: impl AsRef<Path>, vocabulary: ClassVocabulary) -> Result<Self, LexiconError> {
        let path = path.as_ref();
        let text =
            std::fs::read_to_string(path).map_err(|source| LexiconError::Io { path: path.to_path_buf(), source })?;
        Self::from_json_str(&text, vocabulary)
    }

    pub fn from_json_str(text: &str, vocabulary: ClassVocabulary) -> Result<Self, LexiconError> {
        let file: LexiconFile = serde_json::from_str(text)?;
        Self::new(file, vocabulary)
    }

    pub fn new(file: LexiconFile, vocabulary: ClassVocabulary) -> Result<Self, LexiconError> {
        check_lowercase("colors", file.colors.keys())?;
        check_lowercase("types", file.types.keys())?;
        check_lowercase("motions", file.motions.keys())?;
        check_lowercase("lemma_exceptions", file.lemma_exceptions.keys().chain(file.lemma_exceptions.values()))?;
        check_lowercase("stopwords", file.stopwords.iter())?;

        for (form, lemma) in &file.lemma_exceptions {
            if let Some(next) = file.lemma_exceptions.get(lemma) {
                if next != lemma {
                    return Err(LexiconError::Invalid(format!(
                        "lemma_exceptions: '{form}' maps to '{lemma}', which itself maps to '{next}'"
                    )));
                }
            }
        }
        for (term, class) in &file.types {
            if vocabulary.index_of(class).is_none() {
                return Err(LexiconError::Invalid(format!("types: '{term}' maps to unknown class '{class}'")));
            }
        }

        let mut lex = Lexicon {
            vocabulary,
            colors: TermTable { phrases: Vec::new() },
            types: TermTable { phrases: Vec::new() },
            motions: TermTable { phrases: Vec::new() },
            lemma_values: file.lemma_exceptions.values().cloned().collect(),
            lemma_exceptions: file.lemma_exceptions.clone().into_iter().collect(),
            stopwords: file.stopwords.iter().cloned().collect(),
            clusters: HashMap::new(),
            source: file.clone(),
        };
        lex.colors = lex.build_table("colors", &file.colors)?;
        lex.types = lex.build_table("types", &file.types)?;
        lex.motions = lex.build_table("motions", &file.motions)?;

        let colors: HashSet<&str> = lex.colors.canonical_values().collect();
        for rule in &file.clusters {
            if let Some(c) = &rule.color {
                if !colors.contains(c.as_str()) {
                    return Err(LexiconError::Invalid(format!("clusters: unknown color '{c}'")));
                }
            }
            if lex.vocabulary.index_of(&rule.label).is_none() {
                return Err(LexiconError::Invalid(format!("clusters: label '{}' is not a class", rule.label)));
            }
            let key = (rule.color.clone(), rule.vehicle_type.clone());
            if let Some(prev) = lex.clusters.insert(key, rule.label.clone()) {
                if prev != rule.label {
                    return Err(LexiconError::Invalid(format!(
                        "clusters: ({:?}, {}) maps to both '{prev}' and '{}'",
                        rule.color, rule.vehicle_type, rule.label
                    )));
                }
            }
        }
        Ok(lex)
    }

    fn build_table(&self, what: &str, terms: &BTreeMap<String, String>) -> Result<TermTable, LexiconError> {
        let mut by_phrase: BTreeMap<Vec<String>, (&str, &str)> = BTreeMap::new();
        for (term, canonical) in terms {
            let phrase = self.normalize(term);
            if phrase.is_empty() {
                return Err(LexiconError::Invalid(format!("{what}: '{term}' normalizes to nothing")));
            }
            if let Some((other, prev)) = by_phrase.insert(phrase, (term, canonical)) {
                if prev != canonical {
                    return Err(LexiconError::Invalid(format!(
                        "{what}: '{other}' and '{term}' normalize alike but map to '{prev}' and '{canonical}'"
                    )));
                }
            }
        }
        let mut phrases: Vec<(Vec<String>, String)> =
            by_phrase.into_iter().map(|(p, (_, c))| (p, c.to_string())).collect();
        phrases.sort_by(|a, b| b.0.len().cmp(&a.0.len()).then_with(|| a.0.cmp(&b.0)));
        Ok(TermTable { phrases })
    }

    pub fn vocabulary(&self) -> &ClassVocabulary {
        &self.vocabulary
    }

    pub fn file(&self) -> &LexiconFile {
        &self.source
    }

    pub fn is_stopword(&self, token: &str) -> bool {
        self.stopwords.contains(token)
    }

    /// Lemma of a single lowercase token: the exception table first, otherwise the
    /// Porter stem (iterated to a fixed point so normalization is idempotent).
    pub fn lemma(&self, token: &str) -> String {
        if let Some(l) = self.lemma_exceptions.get(token) {
            return l.clone();
        }
        if self.lemma_values.contains(token) {
            return token.to_string();
        }
        let stemmed = stem_to_fixpoint(token);
        match self.lemma_exceptions.get(&stemmed) {
            Some(l) => l.clone(),
            None => stemmed,
        }
    }

    pub(crate) fn normalize(&self, text: &str) -> Vec<String> {
        super::normalize_tokens(text, self)
    }

    /// Cluster target for a (color, type) pair, falling back to the color-free cluster.
    pub fn cluster_label(&self, color: Option<&str>, vehicle_type: &str) -> Option<&str> {
        let key = (color.map(str::to_string), vehicle_type.to_string());
        self.clusters
            .get(&key)
            .or_else(|| self.clusters.get(&(None, vehicle_type.to_string())))
            .map(String::as_str)
    }

    pub fn class_index(&self, label: &str) -> Option<ClassId> {
        self.vocabulary.index_of(label)
    }

    /// Canonical color values, deduplicated, in sorted order.
    pub fn canonical_colors(&self) -> Vec<String> {
        let set: std::collections::BTreeSet<&str> = self.colors.canonical_values().collect();
        set.into_iter().map(str::to_string).collect()
    }

    /// Canonical vehicle types, deduplicated, in sorted order.
    pub fn canonical_types(&self) -> Vec<String> {
        let set: std::collections::BTreeSet<&str> = self.types.canonical_values().collect();
        set.into_iter().map(str::to_string).collect()
    }
}
