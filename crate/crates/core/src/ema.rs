//! Teacher/student parameter vectors and the exponential-moving-average update.

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

pub const DEFAULT_EMA_MOMENTUM: f64 = 0.999;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EmaError {
    #[error("parameter vectors are incompatible: {0}")]
    IncompatibleVectors(String),
    #[error("parameter '{0}' is not finite")]
    NonFinite(String),
    #[error("momentum {0} outside [0,1]")]
    Momentum(f64),
    #[error("malformed checkpoint: {0}")]
    Checkpoint(String),
}

/// Ordered named parameters plus a version counter.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamVector {
    entries: Vec<(String, f64)>,
    version: u64,
}

impl ParamVector {
    pub fn new<S: Into<String>>(entries: impl IntoIterator<Item = (S, f64)>) -> Result<Self, EmaError> {
        let entries: Vec<(String, f64)> = entries.into_iter().map(|(k, v)| (k.into(), v)).collect();
        if let Some((name, _)) = entries.iter().find(|(_, v)| !v.is_finite()) {
            return Err(EmaError::NonFinite(name.clone()));
        }
        for (i, (name, _)) in entries.iter().enumerate() {
            if entries[..i].iter().any(|(n, _)| n == name) {
                return Err(EmaError::IncompatibleVectors(format!("duplicate parameter '{name}'")));
            }
        }
        Ok(Self { entries, version: 0 })
    }

    pub fn with_version(mut self, version: u64) -> Self {
        self.version = version;
        self
    }

    pub fn version(&self) -> u64 {
        self.version
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.entries.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.entries.iter().map(|(_, v)| *v)
    }

    pub fn entries(&self) -> &[(String, f64)] {
        &self.entries
    }

    /// Same names in the same order.
    pub fn compatible_with(&self, other: &ParamVector) -> bool {
        self.entries.len() == other.entries.len() && self.entries.iter().zip(&other.entries).all(|(a, b)| a.0 == b.0)
    }

    /// Copy with every value transformed by `f(name, value)`; version unchanged.
    pub fn map(&self, mut f: impl FnMut(&str, f64) -> f64) -> Result<Self, EmaError> {
        let entries = self.entries.iter().map(|(n, v)| (n.clone(), f(n, *v))).collect::<Vec<_>>();
        Ok(Self::new(entries)?.with_version(self.version))
    }

    pub fn to_checkpoint(&self) -> Value {
        let params: Map<String, Value> = self.entries.iter().map(|(n, v)| (n.clone(), Value::from(*v))).collect();
        serde_json::json!({ "version": self.version, "params": params })
    }

    pub fn from_checkpoint(value: &Value) -> Result<Self, EmaError> {
        let bad = |m: &str| EmaError::Checkpoint(m.to_string());
        let version = value.get("version").and_then(Value::as_u64).ok_or_else(|| bad("missing integer \"version\""))?;
        let params = value.get("params").and_then(Value::as_object).ok_or_else(|| bad("missing object \"params\""))?;
        let entries = params
            .iter()
            .map(|(k, v)| v.as_f64().map(|x| (k.clone(), x)).ok_or_else(|| bad(&format!("parameter '{k}' is not a number"))))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self::new(entries)?.with_version(version))
    }
}

impl Serialize for ParamVector {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_checkpoint().serialize(s)
    }
}

impl<'de> Deserialize<'de> for ParamVector {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = Value::deserialize(d)?;
        ParamVector::from_checkpoint(&v).map_err(serde::de::Error::custom)
    }
}

/// Componentwise `m * teacher + (1 - m) * student`; version becomes `teacher.version + 1`.
pub fn ema_update(teacher: &ParamVector, student: &ParamVector, momentum: f64) -> Result<ParamVector, EmaError> {
    if !(0.0..=1.0).contains(&momentum) {
        return Err(EmaError::Momentum(momentum));
    }
    if !teacher.compatible_with(student) {
        let names = |p: &ParamVector| p.entries.iter().map(|(n, _)| n.as_str()).collect::<Vec<_>>().join(",");
        return Err(EmaError::IncompatibleVectors(format!("[{}] vs [{}]", names(teacher), names(student))));
    }
    let entries = teacher
        .entries
        .iter()
        .zip(&student.entries)
        .map(|((n, t), (_, s))| {
            let v = momentum * t + (1.0 - momentum) * s;
            (n.clone(), v.clamp(t.min(*s), t.max(*s)))
        })
        .collect();
    Ok(ParamVector { entries, version: teacher.version + 1 })
}
