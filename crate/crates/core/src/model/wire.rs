//! Versioned JSON weight format.
//!
//! Top-level keys: `version`, `alphabet`, `d`, `pos_enc`, `word_embedding`,
//! `layers`, `output_head`, `final_norm`, `meta`. Matrices are nested
//! row-major arrays of numbers. Float payloads round-trip bit-exactly
//! (shortest-round-trip decimal printing); −∞ never appears in stored
//! weights because serialization is gated on validation.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{validate_spec, TransformerSpec, Violation};
use crate::scalar::Scalar;

pub const SCHEMA_VERSION: &str = "v1";

#[derive(Debug, Error)]
pub enum WireError {
    #[error("unknown schema version {0:?} (expected {SCHEMA_VERSION:?})")]
    UnknownVersion(String),
    #[error("malformed payload: {0}")]
    Malformed(String),
    #[error("spec fails validation: {}", format_violations(.0))]
    Invalid(Vec<Violation>),
}

fn format_violations(v: &[Violation]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

#[derive(Serialize)]
struct Envelope<'a, S: Scalar> {
    version: &'a str,
    #[serde(flatten)]
    spec: &'a TransformerSpec<S>,
}

#[derive(Deserialize)]
struct VersionProbe {
    version: String,
}

#[derive(Deserialize)]
#[serde(bound = "S: Scalar")]
struct OwnedEnvelope<S: Scalar> {
    #[allow(dead_code)]
    version: String,
    #[serde(flatten)]
    spec: TransformerSpec<S>,
}

/// Serializes a validated spec to pretty JSON bytes.
pub fn serialize<S: Scalar>(spec: &TransformerSpec<S>) -> Result<Vec<u8>, WireError> {
    let violations = validate_spec(spec);
    if !violations.is_empty() {
        return Err(WireError::Invalid(violations));
    }
    let env = Envelope { version: SCHEMA_VERSION, spec };
    let mut bytes = serde_json::to_vec_pretty(&env).map_err(|e| WireError::Malformed(e.to_string()))?;
    bytes.push(b'\n');
    Ok(bytes)
}

/// Parses JSON bytes back into a spec, checking the schema version first.
pub fn deserialize<S: Scalar>(bytes: &[u8]) -> Result<TransformerSpec<S>, WireError> {
    let probe: VersionProbe =
        serde_json::from_slice(bytes).map_err(|e| WireError::Malformed(e.to_string()))?;
    if probe.version != SCHEMA_VERSION {
        return Err(WireError::UnknownVersion(probe.version));
    }
    let env: OwnedEnvelope<S> =
        serde_json::from_slice(bytes).map_err(|e| WireError::Malformed(e.to_string()))?;
    Ok(env.spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::la::Mat;
    use crate::model::{AttentionSpec, FfnSpec, LayerSpec, OutputHead, SpecMeta};

    fn spec() -> TransformerSpec<f64> {
        let d = 2;
        let mut attn = AttentionSpec::uniform(d);
        attn.wv = Mat::from_rows(&[vec![0.1, -0.25], vec![1.0 / 3.0, 2.0]]).unwrap();
        let ffn = FfnSpec::new(
            Mat::from_rows(&[vec![1.0, -1.0]]).unwrap(),
            vec![0.5],
            Mat::from_rows(&[vec![2.0], vec![-0.125]]).unwrap(),
            vec![0.0, 1e-30],
        );
        TransformerSpec {
            alphabet: vec!['a', 'b'],
            word_embedding: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            d,
            pos_enc: vec![],
            layers: vec![LayerSpec::plain(attn, ffn)],
            output_head: OutputHead::BinaryThreshold { weights: vec![1.0, 0.0] },
            final_norm: None,
            meta: SpecMeta::default(),
        }
    }

    #[test]
    fn round_trip_is_identity() {
        let s = spec();
        let bytes = serialize(&s).unwrap();
        let back: TransformerSpec<f64> = deserialize(&bytes).unwrap();
        assert_eq!(s, back);
    }

    #[test]
    fn top_level_keys_present() {
        let bytes = serialize(&spec()).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&bytes).unwrap();
        for key in ["version", "alphabet", "d", "pos_enc", "layers", "output_head"] {
            assert!(v.get(key).is_some(), "missing top-level key {key}");
        }
        assert_eq!(v["version"], "v1");
    }

    #[test]
    fn truncated_payload_errors() {
        let mut bytes = serialize(&spec()).unwrap();
        bytes.truncate(bytes.len() / 2);
        assert!(matches!(deserialize::<f64>(&bytes), Err(WireError::Malformed(_))));
    }

    #[test]
    fn unknown_version_errors() {
        let bytes = serialize(&spec()).unwrap();
        let text = String::from_utf8(bytes).unwrap().replace("\"v1\"", "\"v999\"");
        match deserialize::<f64>(text.as_bytes()) {
            Err(WireError::UnknownVersion(v)) => assert_eq!(v, "v999"),
            other => panic!("expected unknown version, got {other:?}"),
        }
    }

    #[test]
    fn invalid_spec_refused() {
        let mut s = spec();
        s.word_embedding.pop();
        assert!(matches!(serialize(&s), Err(WireError::Invalid(_))));
    }
}
