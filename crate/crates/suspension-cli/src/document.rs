//! JSON parameter documents: a self-contained, canonically serialized record
//! of a suspension (full derived length arrays, azimuth rule, sign pattern),
//! so that `verify` does not depend on the constructor that produced it.

use serde::{Deserialize, Serialize};
use suspension_core::constructors::VertexClass;
use suspension_core::{ConstructedSuspension, SignPattern, SuspensionParams, SuspensionTypeTag, Theta1Rule};

pub const SCHEMA_VERSION: &str = "1";

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct LengthArrays {
    pub l: Vec<f64>,
    pub m: Vec<f64>,
    #[serde(rename = "L")]
    pub big_l: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Theta1Doc {
    /// `"fixed"` or `"symmetric-half"`.
    pub rule: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SuspensionDocument {
    pub schema_version: String,
    /// One of `i-oee`, `ii-aee`, `ii-oee`, `iii-oae`, `iii-oas`.
    #[serde(rename = "type")]
    pub type_tag: String,
    pub n: usize,
    pub lengths: LengthArrays,
    pub theta1: Theta1Doc,
    /// One entry per `k = 1..N-1`, each `+1` or `-1`.
    pub signs: Vec<i8>,
    #[serde(default)]
    pub provenance: String,
    /// Per-vertex `"oae"`/`"oas"` classification, third family only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vertex_classes: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fold_l: Option<usize>,
}

#[derive(Debug, thiserror::Error)]
pub enum DocError {
    #[error("parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("unsupported schema_version {0:?} (expected {SCHEMA_VERSION:?})")]
    SchemaVersion(String),
    #[error("validation error: {0}")]
    Validation(String),
}

impl SuspensionDocument {
    pub fn from_suspension(s: &ConstructedSuspension) -> Self {
        let n = s.n();
        let p = &s.params;
        let theta1 = match s.theta1 {
            Theta1Rule::Fixed(v) => Theta1Doc {
                rule: "fixed".into(),
                value: Some(v),
            },
            Theta1Rule::SymmetricHalf => Theta1Doc {
                rule: "symmetric-half".into(),
                value: None,
            },
        };
        SuspensionDocument {
            schema_version: SCHEMA_VERSION.into(),
            type_tag: s.tag.as_str().into(),
            n,
            lengths: LengthArrays {
                l: (1..=n).map(|k| p.l(k)).collect(),
                m: (1..=n).map(|k| p.m(k)).collect(),
                big_l: (1..=n).map(|k| p.big_l(k)).collect(),
            },
            theta1,
            signs: s.signs.as_slice().to_vec(),
            provenance: s.provenance.clone(),
            vertex_classes: s.vertex_classes.as_ref().map(|cs| {
                cs.iter()
                    .map(|c| match c {
                        VertexClass::Oae => "oae".to_string(),
                        VertexClass::Oas => "oas".to_string(),
                    })
                    .collect()
            }),
            fold_l: s.fold_l,
        }
    }

    /// Structural validation beyond what the schema can express.
    pub fn validate(&self) -> Result<(), DocError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(DocError::SchemaVersion(self.schema_version.clone()));
        }
        if SuspensionTypeTag::parse(&self.type_tag).is_none() {
            return Err(DocError::Validation(format!(
                "unknown type {:?}",
                self.type_tag
            )));
        }
        if self.n < 6 || self.n % 2 != 0 {
            return Err(DocError::Validation(format!(
                "parity: n = {} is not an even integer >= 6",
                self.n
            )));
        }
        for (name, arr) in [
            ("l", &self.lengths.l),
            ("m", &self.lengths.m),
            ("L", &self.lengths.big_l),
        ] {
            if arr.len() != self.n {
                return Err(DocError::Validation(format!(
                    "lengths.{name} has {} entries, expected {}",
                    arr.len(),
                    self.n
                )));
            }
            if let Some(i) = arr.iter().position(|v| !(v.is_finite() && *v > 0.0)) {
                return Err(DocError::Validation(format!(
                    "lengths.{name}[{}] is not strictly positive and finite",
                    i + 1
                )));
            }
        }
        if self.signs.len() != self.n - 1 {
            return Err(DocError::Validation(format!(
                "signs has {} entries, expected n - 1 = {}",
                self.signs.len(),
                self.n - 1
            )));
        }
        if self.signs.iter().any(|&s| s != 1 && s != -1) {
            return Err(DocError::Validation("signs entries must be +1 or -1".into()));
        }
        match self.theta1.rule.as_str() {
            "fixed" => {
                if self.theta1.value.is_none() {
                    return Err(DocError::Validation(
                        "theta1.rule \"fixed\" requires theta1.value".into(),
                    ));
                }
            }
            "symmetric-half" => {}
            other => {
                return Err(DocError::Validation(format!(
                    "unknown theta1.rule {other:?}"
                )))
            }
        }
        if let Some(cs) = &self.vertex_classes {
            if cs.len() != self.n {
                return Err(DocError::Validation(format!(
                    "vertex_classes has {} entries, expected {}",
                    cs.len(),
                    self.n
                )));
            }
            if let Some(bad) = cs.iter().find(|c| c.as_str() != "oae" && c.as_str() != "oas") {
                return Err(DocError::Validation(format!(
                    "unknown vertex class {bad:?}"
                )));
            }
        }
        Ok(())
    }

    pub fn to_suspension(&self) -> Result<ConstructedSuspension, DocError> {
        self.validate()?;
        let tag = SuspensionTypeTag::parse(&self.type_tag).expect("validated");
        let params = SuspensionParams::new_unchecked(
            self.lengths.l.clone(),
            self.lengths.m.clone(),
            self.lengths.big_l.clone(),
        );
        let report = params.validate();
        if !report.is_valid() {
            return Err(DocError::Validation(report.summary()));
        }
        let theta1 = match self.theta1.rule.as_str() {
            "fixed" => Theta1Rule::Fixed(self.theta1.value.expect("validated")),
            _ => Theta1Rule::SymmetricHalf,
        };
        let signs = SignPattern::new(self.signs.clone())
            .ok_or_else(|| DocError::Validation("signs entries must be +1 or -1".into()))?;
        let vertex_classes = self.vertex_classes.as_ref().map(|cs| {
            cs.iter()
                .map(|c| {
                    if c == "oae" {
                        VertexClass::Oae
                    } else {
                        VertexClass::Oas
                    }
                })
                .collect()
        });
        Ok(ConstructedSuspension {
            params,
            tag,
            theta1,
            signs,
            provenance: self.provenance.clone(),
            vertex_classes,
            fold_l: self.fold_l,
        })
    }
}

/// Parses a document and checks schema version and structure.
pub fn load_suspension(text: &str) -> Result<SuspensionDocument, DocError> {
    let doc: SuspensionDocument = serde_json::from_str(text)?;
    doc.validate()?;
    Ok(doc)
}

/// Canonical serialization: fixed field order, two-space indentation, one
/// trailing newline. Numbers use the shortest decimal form that parses back
/// to the identical double (at most 17 significant digits), so
/// `save(load(x))` is a byte-level fixed point.
pub fn save_suspension(doc: &SuspensionDocument) -> String {
    let mut out = serde_json::to_string_pretty(doc).expect("document serializes");
    out.push('\n');
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use suspension_core::constructors::{build_i_oee, HalfParamsIOEE};

    fn sample() -> SuspensionDocument {
        let s = build_i_oee(&HalfParamsIOEE {
            l_half: vec![1.0, 1.1, 0.9],
            m_half: vec![1.05, 0.95, 1.0],
            big_l_half: vec![1.2, 1.0, 1.1],
        })
        .unwrap();
        SuspensionDocument::from_suspension(&s)
    }

    #[test]
    fn round_trip_is_canonical_fixed_point() {
        let text = save_suspension(&sample());
        let doc = load_suspension(&text).unwrap();
        assert_eq!(save_suspension(&doc), text);
        // A non-canonical but equivalent form canonicalizes to the same bytes.
        let sloppy = text.replace("\n", " ").replace("  ", " ");
        let doc2 = load_suspension(&sloppy).unwrap();
        assert_eq!(save_suspension(&doc2), text);
    }

    #[test]
    fn suspension_round_trip_preserves_lengths_exactly() {
        let doc = sample();
        let s = doc.to_suspension().unwrap();
        let doc2 = SuspensionDocument::from_suspension(&s);
        assert_eq!(doc, doc2);
    }

    #[test]
    fn rejects_unknown_schema_version() {
        let mut doc = sample();
        doc.schema_version = "2".into();
        let text = save_suspension(&doc);
        assert!(matches!(
            load_suspension(&text),
            Err(DocError::SchemaVersion(_))
        ));
    }

    #[test]
    fn rejects_odd_n() {
        let mut doc = sample();
        doc.n = 5;
        doc.lengths.l.truncate(5);
        doc.lengths.m.truncate(5);
        doc.lengths.big_l.truncate(5);
        doc.signs.truncate(4);
        let err = load_suspension(&save_suspension(&doc)).unwrap_err();
        assert!(format!("{err}").contains("parity"));
    }

    #[test]
    fn rejects_wrong_sign_count() {
        let mut doc = sample();
        doc.signs.pop();
        let err = load_suspension(&save_suspension(&doc)).unwrap_err();
        assert!(format!("{err}").contains("signs"));
    }

    #[test]
    fn bundled_documents_are_byte_canonical() {
        let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/documents");
        let mut seen = 0;
        for entry in std::fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.extension().map_or(true, |e| e != "json") {
                continue;
            }
            let text = std::fs::read_to_string(&path).unwrap();
            let doc = load_suspension(&text).unwrap();
            assert_eq!(save_suspension(&doc), text, "non-canonical: {path:?}");
            seen += 1;
        }
        assert!(seen >= 6, "expected the bundled corpus, found {seen} documents");
    }

    #[test]
    fn seventeen_digit_fidelity() {
        let mut doc = sample();
        doc.lengths.l[0] = 1.000_000_000_000_000_2;
        let text = save_suspension(&doc);
        let doc2 = load_suspension(&text).unwrap();
        assert_eq!(doc2.lengths.l[0].to_bits(), doc.lengths.l[0].to_bits());
    }
}
