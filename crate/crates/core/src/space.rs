//! Discrete hyperparameter search spaces.
//!
//! A [`SearchSpace`] is an ordered list of named axes, each holding a finite
//! list of candidate values. Every point of the Cartesian product is a
//! [`Configuration`], identified by its row-major rank (the last axis varies
//! fastest).

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::de::{self, Deserializer};
use serde::{Deserialize, Serialize, Serializer};
use serde_json::value::RawValue;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpaceError {
    #[error("search space has no axes")]
    NoAxes,
    #[error("axis `{0}` has no values")]
    EmptyAxis(String),
    #[error("axis `{axis}` lists value {value} more than once")]
    DuplicateValue { axis: String, value: ParamValue },
    #[error("axis name `{0}` is used more than once")]
    DuplicateAxis(String),
    #[error("missing value for axis `{0}`")]
    MissingAxis(String),
    #[error("unknown axis `{0}`")]
    UnknownAxis(String),
    #[error("value {value} is not listed for axis `{axis}`")]
    ValueNotListed { axis: String, value: ParamValue },
    #[error("requested {requested} configurations but the grid only has {available}")]
    SampleTooLarge { requested: usize, available: usize },
    #[error("index {index} out of range for grid of size {size}")]
    IndexOutOfRange { index: usize, size: usize },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("cannot read space file: {0}")]
    Io(String),
}

/// A scalar hyperparameter value, tagged integer or real.
#[derive(Debug, Clone, Copy)]
pub enum ParamValue {
    Int(i64),
    Real(f64),
}

impl ParamValue {
    pub fn as_f64(self) -> f64 {
        match self {
            ParamValue::Int(v) => v as f64,
            ParamValue::Real(v) => v,
        }
    }
}

// Integers and reals compare by numeric value so `1` and `1.0` are the same
// grid point.
impl PartialEq for ParamValue {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (ParamValue::Int(a), ParamValue::Int(b)) => a == b,
            _ => self.as_f64() == other.as_f64(),
        }
    }
}

impl fmt::Display for ParamValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamValue::Int(v) => write!(f, "{v}"),
            ParamValue::Real(v) => write!(f, "{v}"),
        }
    }
}

impl From<i64> for ParamValue {
    fn from(v: i64) -> Self {
        ParamValue::Int(v)
    }
}

impl From<f64> for ParamValue {
    fn from(v: f64) -> Self {
        ParamValue::Real(v)
    }
}

impl Serialize for ParamValue {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            ParamValue::Int(v) => serializer.serialize_i64(*v),
            ParamValue::Real(v) => serializer.serialize_f64(*v),
        }
    }
}

impl<'de> Deserialize<'de> for ParamValue {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let number = serde_json::Number::deserialize(deserializer)?;
        if let Some(v) = number.as_i64() {
            Ok(ParamValue::Int(v))
        } else if let Some(v) = number.as_f64() {
            Ok(ParamValue::Real(v))
        } else {
            Err(de::Error::custom(format!("unsupported number {number}")))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperparamAxis {
    name: String,
    values: Vec<ParamValue>,
}

impl HyperparamAxis {
    pub fn new(name: impl Into<String>, values: Vec<ParamValue>) -> Result<Self, SpaceError> {
        let name = name.into();
        if values.is_empty() {
            return Err(SpaceError::EmptyAxis(name));
        }
        for (i, v) in values.iter().enumerate() {
            if values[..i].contains(v) {
                return Err(SpaceError::DuplicateValue { axis: name, value: *v });
            }
        }
        Ok(Self { name, values })
    }

    /// Convenience constructor for real-valued axes.
    pub fn real(name: impl Into<String>, values: &[f64]) -> Result<Self, SpaceError> {
        Self::new(name, values.iter().map(|&v| ParamValue::Real(v)).collect())
    }

    /// Convenience constructor for integer-valued axes.
    pub fn int(name: impl Into<String>, values: &[i64]) -> Result<Self, SpaceError> {
        Self::new(name, values.iter().map(|&v| ParamValue::Int(v)).collect())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn values(&self) -> &[ParamValue] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn position(&self, value: ParamValue) -> Option<usize> {
        self.values.iter().position(|v| *v == value)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchSpace {
    axes: Vec<HyperparamAxis>,
}

impl SearchSpace {
    pub fn new(axes: Vec<HyperparamAxis>) -> Result<Self, SpaceError> {
        if axes.is_empty() {
            return Err(SpaceError::NoAxes);
        }
        let mut seen = HashSet::new();
        for axis in &axes {
            if axis.values.is_empty() {
                return Err(SpaceError::EmptyAxis(axis.name.clone()));
            }
            if !seen.insert(axis.name.as_str()) {
                return Err(SpaceError::DuplicateAxis(axis.name.clone()));
            }
        }
        Ok(Self { axes })
    }

    pub fn axes(&self) -> &[HyperparamAxis] {
        &self.axes
    }

    /// Number of grid points, the product of the axis lengths.
    pub fn grid_size(&self) -> usize {
        self.axes.iter().map(HyperparamAxis::len).product()
    }

    /// Configuration at row-major rank `index`.
    pub fn configuration(&self, index: usize) -> Result<Configuration, SpaceError> {
        let size = self.grid_size();
        if index >= size {
            return Err(SpaceError::IndexOutOfRange { index, size });
        }
        let mut rest = index;
        let mut positions = vec![0; self.axes.len()];
        for (slot, axis) in positions.iter_mut().zip(&self.axes).rev() {
            *slot = rest % axis.len();
            rest /= axis.len();
        }
        let assignments =
            self.axes.iter().zip(&positions).map(|(axis, &p)| (axis.name.clone(), axis.values[p])).collect();
        Ok(Configuration { assignments, index })
    }

    /// Every grid point in row-major order; `index` equals position.
    pub fn enumerate_grid(&self) -> Vec<Configuration> {
        (0..self.grid_size()).map(|i| self.configuration(i).expect("index below grid size")).collect()
    }

    /// Draws `count` distinct configurations uniformly at random.
    pub fn sample_without_replacement(&self, count: usize, seed: u64) -> Result<Vec<Configuration>, SpaceError> {
        let size = self.grid_size();
        if count > size {
            return Err(SpaceError::SampleTooLarge { requested: count, available: size });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rand::seq::index::sample(&mut rng, size, count).into_iter().map(|i| self.configuration(i)).collect()
    }

    /// Checks an assignment map against the space and returns the canonical
    /// configuration.
    pub fn validate_config(&self, assignments: &BTreeMap<String, ParamValue>) -> Result<Configuration, SpaceError> {
        if let Some(name) = assignments.keys().find(|k| !self.axes.iter().any(|a| &a.name == *k)) {
            return Err(SpaceError::UnknownAxis(name.clone()));
        }
        let mut index = 0;
        for axis in &self.axes {
            let value = *assignments.get(&axis.name).ok_or_else(|| SpaceError::MissingAxis(axis.name.clone()))?;
            let pos =
                axis.position(value).ok_or_else(|| SpaceError::ValueNotListed { axis: axis.name.clone(), value })?;
            index = index * axis.len() + pos;
        }
        self.configuration(index)
    }

    /// Parses the JSON space document: an array of `{"name", "values"}`
    /// objects. Semantic errors carry the line of the offending axis.
    pub fn from_json(text: &str) -> Result<Self, SpaceError> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct RawAxis {
            name: String,
            values: Vec<ParamValue>,
        }

        let parse_err = |e: serde_json::Error| SpaceError::Parse { line: e.line(), message: e.to_string() };
        let raw: Vec<&RawValue> = serde_json::from_str(text).map_err(parse_err)?;
        let mut axes = Vec::with_capacity(raw.len());
        let mut seen: Vec<String> = Vec::new();
        for item in raw {
            let line = line_of(text, item.get());
            let at = |message: String| SpaceError::Parse { line, message };
            let axis: RawAxis = serde_json::from_str(item.get())
                .map_err(|e| SpaceError::Parse { line: line + e.line() - 1, message: e.to_string() })?;
            if seen.contains(&axis.name) {
                return Err(at(format!("duplicate axis name `{}`", axis.name)));
            }
            seen.push(axis.name.clone());
            axes.push(HyperparamAxis::new(axis.name, axis.values).map_err(|e| at(e.to_string()))?);
        }
        if axes.is_empty() {
            return Err(SpaceError::Parse { line: 1, message: SpaceError::NoAxes.to_string() });
        }
        Self::new(axes)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, SpaceError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| SpaceError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.axes).expect("space serializes")
    }

    /// Default 540-point grid for the boosted-stumps learner (3×3×3×5×4).
    pub fn default_boosted() -> Self {
        Self::new(vec![
            HyperparamAxis::real("learning_rate", &[0.05, 0.1, 0.3]).unwrap(),
            HyperparamAxis::real("colsample", &[0.5, 0.75, 1.0]).unwrap(),
            HyperparamAxis::real("subsample", &[0.6, 0.8, 1.0]).unwrap(),
            HyperparamAxis::real("min_leaf_weight", &[0.0, 0.5, 1.0, 2.0, 5.0]).unwrap(),
            HyperparamAxis::real("rounds_fraction", &[0.25, 0.5, 0.75, 1.0]).unwrap(),
        ])
        .unwrap()
    }
}

fn line_of(text: &str, fragment: &str) -> usize {
    let offset = (fragment.as_ptr() as usize).saturating_sub(text.as_ptr() as usize);
    text.as_bytes()[..offset.min(text.len())].iter().filter(|&&b| b == b'\n').count() + 1
}

/// One point of the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Configuration {
    pub assignments: BTreeMap<String, ParamValue>,
    pub index: usize,
}

impl Configuration {
    pub fn get(&self, name: &str) -> Option<ParamValue> {
        self.assignments.get(name).copied()
    }

    pub fn get_f64(&self, name: &str) -> Option<f64> {
        self.get(name).map(ParamValue::as_f64)
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{} {{", self.index)?;
        for (i, (k, v)) in self.assignments.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{k}: {v}")?;
        }
        write!(f, "}}")
    }
}
