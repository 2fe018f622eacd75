//! Declarative feature extraction from entity snapshots.
//!
//! An estimator does not read simulation state directly; it declares a list
//! of [`FeatureSpec`]s, each naming a field of an entity snapshot and how to
//! encode it (scalar with optional min-max normalization, or one-hot over a
//! symbol alphabet).  The same specs drive input encoding, label extraction
//! and dataset CSV column naming, so the three can never drift apart.

use serde::{Deserialize, Serialize};

use super::EstimatorError;

/// Read access to one entity's observable state at one instant.
///
/// Scalar fields (battery level, counts) and symbolic fields (the drone
/// mode) are namespaced separately; a field name may appear in either.
pub trait Observable {
    fn scalar(&self, field: &str) -> Option<f64>;
    fn symbol(&self, field: &str) -> Option<&str>;
}

/// Ad-hoc snapshot assembled from named fields.
///
/// Field names and symbol values are `&'static str` because they always come
/// from a fixed vocabulary (simulation field names, mode names); this keeps
/// per-tick snapshot construction allocation-free apart from the two vectors.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Snapshot {
    scalars: Vec<(&'static str, f64)>,
    symbols: Vec<(&'static str, &'static str)>,
}

impl Snapshot {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_scalar(mut self, field: &'static str, value: f64) -> Self {
        self.scalars.push((field, value));
        self
    }

    pub fn with_symbol(mut self, field: &'static str, value: &'static str) -> Self {
        self.symbols.push((field, value));
        self
    }
}

impl Observable for Snapshot {
    fn scalar(&self, field: &str) -> Option<f64> {
        self.scalars
            .iter()
            .find(|(name, _)| *name == field)
            .map(|(_, v)| *v)
    }

    fn symbol(&self, field: &str) -> Option<&str> {
        self.symbols
            .iter()
            .find(|(name, _)| *name == field)
            .map(|(_, v)| *v)
    }
}

/// Scalar normalization applied after extraction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Normalization {
    /// Use the raw value.
    None,
    /// Map `[min, max]` affinely onto `[0, 1]`; values outside the declared
    /// range are clamped to the boundary.
    MinMax { min: f64, max: f64 },
}

impl Normalization {
    fn apply(&self, value: f64) -> f64 {
        match self {
            Normalization::None => value,
            Normalization::MinMax { min, max } => ((value - min) / (max - min)).clamp(0.0, 1.0),
        }
    }
}

/// How a feature turns into input-vector entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeatureEncoding {
    /// One vector entry: the (optionally normalized) scalar field.
    Scalar { normalization: Normalization },
    /// `alphabet.len()` vector entries, exactly one of which is 1.
    OneHot { alphabet: Vec<String> },
}

/// One named, encoded input or output of an estimator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSpec {
    /// Name used in dataset CSV headers and error messages.
    pub name: String,
    /// Snapshot field the value is read from.
    pub extractor: String,
    pub encoding: FeatureEncoding,
}

impl FeatureSpec {
    /// Raw scalar feature.
    pub fn scalar(name: impl Into<String>, extractor: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            extractor: extractor.into(),
            encoding: FeatureEncoding::Scalar {
                normalization: Normalization::None,
            },
        }
    }

    /// Scalar feature min-max normalized from `[min, max]` onto `[0, 1]`.
    pub fn scalar_min_max(
        name: impl Into<String>,
        extractor: impl Into<String>,
        min: f64,
        max: f64,
    ) -> Self {
        Self {
            name: name.into(),
            extractor: extractor.into(),
            encoding: FeatureEncoding::Scalar {
                normalization: Normalization::MinMax { min, max },
            },
        }
    }

    /// One-hot encoded symbolic feature over `alphabet`.
    pub fn one_hot<S: Into<String>>(
        name: impl Into<String>,
        extractor: impl Into<String>,
        alphabet: impl IntoIterator<Item = S>,
    ) -> Self {
        Self {
            name: name.into(),
            extractor: extractor.into(),
            encoding: FeatureEncoding::OneHot {
                alphabet: alphabet.into_iter().map(Into::into).collect(),
            },
        }
    }

    pub fn validate(&self) -> Result<(), EstimatorError> {
        match &self.encoding {
            FeatureEncoding::Scalar {
                normalization: Normalization::MinMax { min, max },
            } => {
                if !(min.is_finite() && max.is_finite() && min < max) {
                    return Err(EstimatorError::InvalidFeatureRange {
                        name: self.name.clone(),
                        min: *min,
                        max: *max,
                    });
                }
            }
            FeatureEncoding::Scalar { .. } => {}
            FeatureEncoding::OneHot { alphabet } => {
                if alphabet.is_empty() {
                    return Err(EstimatorError::EmptyAlphabet(self.name.clone()));
                }
                for (i, sym) in alphabet.iter().enumerate() {
                    if alphabet[..i].contains(sym) {
                        return Err(EstimatorError::DuplicateAlphabetSymbol {
                            name: self.name.clone(),
                            symbol: sym.clone(),
                        });
                    }
                }
            }
        }
        Ok(())
    }

    /// Number of input-vector entries this feature occupies.
    pub fn dims(&self) -> usize {
        match &self.encoding {
            FeatureEncoding::Scalar { .. } => 1,
            FeatureEncoding::OneHot { alphabet } => alphabet.len(),
        }
    }

    /// CSV column names, one per vector entry (`mode=IDLE` style for
    /// one-hot features).
    pub fn column_names(&self) -> Vec<String> {
        match &self.encoding {
            FeatureEncoding::Scalar { .. } => vec![self.name.clone()],
            FeatureEncoding::OneHot { alphabet } => alphabet
                .iter()
                .map(|sym| format!("{}={}", self.name, sym))
                .collect(),
        }
    }

    /// Append this feature's encoding of `snap` to `out`.
    pub fn encode(
        &self,
        snap: &dyn Observable,
        out: &mut Vec<f64>,
    ) -> Result<(), EstimatorError> {
        match &self.encoding {
            FeatureEncoding::Scalar { normalization } => {
                let raw = snap.scalar(&self.extractor).ok_or_else(|| {
                    EstimatorError::MissingScalarField(self.extractor.clone())
                })?;
                out.push(normalization.apply(raw));
            }
            FeatureEncoding::OneHot { alphabet } => {
                let sym = snap.symbol(&self.extractor).ok_or_else(|| {
                    EstimatorError::MissingSymbolField(self.extractor.clone())
                })?;
                let hit = alphabet.iter().position(|s| s == sym).ok_or_else(|| {
                    EstimatorError::UnknownSymbol {
                        field: self.extractor.clone(),
                        value: sym.to_string(),
                    }
                })?;
                out.extend((0..alphabet.len()).map(|i| if i == hit { 1.0 } else { 0.0 }));
            }
        }
        Ok(())
    }

    /// Read the feature as a scalar label (used for estimator outputs, which
    /// must be scalar-encoded).
    pub fn read_label(&self, snap: &dyn Observable) -> Result<f64, EstimatorError> {
        match &self.encoding {
            FeatureEncoding::Scalar { normalization } => {
                let raw = snap.scalar(&self.extractor).ok_or_else(|| {
                    EstimatorError::MissingScalarField(self.extractor.clone())
                })?;
                Ok(normalization.apply(raw))
            }
            FeatureEncoding::OneHot { .. } => {
                Err(EstimatorError::NonScalarOutput(self.name.clone()))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mode_alphabet() -> Vec<&'static str> {
        vec![
            "IDLE",
            "PROTECTING",
            "MOVING_TO_CHARGER",
            "CHARGING",
            "TERMINATED",
        ]
    }

    #[test]
    fn scalar_feature_is_one_dimension() {
        let f = FeatureSpec::scalar("battery", "battery");
        assert_eq!(f.dims(), 1);
        assert_eq!(f.column_names(), vec!["battery"]);
    }

    #[test]
    fn one_hot_feature_spans_alphabet() {
        let f = FeatureSpec::one_hot("mode", "mode", mode_alphabet());
        assert_eq!(f.dims(), 5);
        assert_eq!(
            f.column_names(),
            vec![
                "mode=IDLE",
                "mode=PROTECTING",
                "mode=MOVING_TO_CHARGER",
                "mode=CHARGING",
                "mode=TERMINATED"
            ]
        );
    }

    #[test]
    fn encodes_scalar_with_min_max_normalization() {
        let f = FeatureSpec::scalar_min_max("queue", "queue_length", 0.0, 12.0);
        let snap = Snapshot::new().with_scalar("queue_length", 6.0);
        let mut out = Vec::new();
        f.encode(&snap, &mut out).unwrap();
        assert_eq!(out, vec![0.5]);
    }

    #[test]
    fn min_max_clamps_out_of_range_values() {
        let f = FeatureSpec::scalar_min_max("q", "q", 0.0, 10.0);
        let mut out = Vec::new();
        f.encode(&Snapshot::new().with_scalar("q", 15.0), &mut out)
            .unwrap();
        f.encode(&Snapshot::new().with_scalar("q", -5.0), &mut out)
            .unwrap();
        assert_eq!(out, vec![1.0, 0.0]);
    }

    #[test]
    fn encodes_one_hot_mode() {
        let f = FeatureSpec::one_hot("mode", "mode", mode_alphabet());
        let snap = Snapshot::new().with_symbol("mode", "PROTECTING");
        let mut out = Vec::new();
        f.encode(&snap, &mut out).unwrap();
        assert_eq!(out, vec![0.0, 1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn unknown_symbol_is_an_error() {
        let f = FeatureSpec::one_hot("mode", "mode", mode_alphabet());
        let snap = Snapshot::new().with_symbol("mode", "SLEEPING");
        let mut out = Vec::new();
        assert!(matches!(
            f.encode(&snap, &mut out),
            Err(EstimatorError::UnknownSymbol { .. })
        ));
    }

    #[test]
    fn missing_fields_are_errors() {
        let mut out = Vec::new();
        let f = FeatureSpec::scalar("battery", "battery");
        assert!(matches!(
            f.encode(&Snapshot::new(), &mut out),
            Err(EstimatorError::MissingScalarField(_))
        ));
        let g = FeatureSpec::one_hot("mode", "mode", mode_alphabet());
        assert!(matches!(
            g.encode(&Snapshot::new(), &mut out),
            Err(EstimatorError::MissingSymbolField(_))
        ));
    }

    #[test]
    fn label_reading_applies_normalization_and_rejects_one_hot() {
        let f = FeatureSpec::scalar_min_max("battery", "battery", 0.0, 2.0);
        let snap = Snapshot::new().with_scalar("battery", 1.0);
        assert_eq!(f.read_label(&snap).unwrap(), 0.5);
        let g = FeatureSpec::one_hot("mode", "mode", mode_alphabet());
        assert!(matches!(
            g.read_label(&Snapshot::new().with_symbol("mode", "IDLE")),
            Err(EstimatorError::NonScalarOutput(_))
        ));
    }

    #[test]
    fn validation_rejects_degenerate_specs() {
        let bad_range = FeatureSpec::scalar_min_max("x", "x", 1.0, 1.0);
        assert!(bad_range.validate().is_err());
        let empty: Vec<&str> = vec![];
        let bad_alpha = FeatureSpec::one_hot("m", "m", empty);
        assert!(bad_alpha.validate().is_err());
        let dup = FeatureSpec::one_hot("m", "m", ["A", "A"]);
        assert!(dup.validate().is_err());
        assert!(FeatureSpec::scalar("x", "x").validate().is_ok());
    }

    #[test]
    fn snapshot_lookup_finds_first_match() {
        let snap = Snapshot::new()
            .with_scalar("a", 1.0)
            .with_symbol("m", "X");
        assert_eq!(snap.scalar("a"), Some(1.0));
        assert_eq!(snap.scalar("b"), None);
        assert_eq!(snap.symbol("m"), Some("X"));
        assert_eq!(snap.symbol("a"), None, "scalar and symbol namespaces are separate");
    }
}
