//! `refxplain-net/1` network files.
//!
//! A network file is a JSON document:
//!
//! ```json
//! {
//!   "format": "refxplain-net/1",
//!   "output_unit": "monetary units",
//!   "layers": [
//!     {"in": 2, "out": 3, "activation": "relu", "weights": [...], "biases": [...]},
//!     {"in": 3, "out": 1, "activation": "identity", "weights": [...], "biases": [...]}
//!   ],
//!   "metadata": {"reference_value": 1000.0, "anchor_input_hash": "…", "flood_t": 100.0, "mode": "symmetric"}
//! }
//! ```
//!
//! Weights are row-major (`out × in`). `metadata` is present only for
//! restructured networks.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Activation, DenseLayer, DenseNetwork};
use crate::{Error, Result};

pub const NET_FORMAT: &str = "refxplain-net/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LayerRecord {
    #[serde(rename = "in")]
    in_dim: usize,
    #[serde(rename = "out")]
    out_dim: usize,
    activation: Activation,
    weights: Vec<f64>,
    biases: Vec<f64>,
}

/// Provenance of a network produced by restructuring.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RestructureMetadata {
    pub reference_value: f64,
    pub anchor_input_hash: String,
    pub flood_t: f64,
    pub mode: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NetRecord {
    format: String,
    output_unit: String,
    layers: Vec<LayerRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    metadata: Option<RestructureMetadata>,
}

/// A network together with optional restructuring metadata, as stored on disk.
#[derive(Debug, Clone, PartialEq)]
pub struct NetFile {
    pub network: DenseNetwork,
    pub metadata: Option<RestructureMetadata>,
}

impl NetFile {
    pub fn new(network: DenseNetwork) -> Self {
        Self { network, metadata: None }
    }

    pub fn to_json(&self) -> String {
        let record = NetRecord {
            format: NET_FORMAT.to_string(),
            output_unit: self.network.output_unit.clone(),
            layers: self
                .network
                .layers
                .iter()
                .map(|l| LayerRecord {
                    in_dim: l.in_dim,
                    out_dim: l.out_dim,
                    activation: l.activation,
                    weights: l.weights.clone(),
                    biases: l.biases.clone(),
                })
                .collect(),
            metadata: self.metadata.clone(),
        };
        serde_json::to_string_pretty(&record).expect("network records always serialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let record: NetRecord = serde_json::from_str(text)?;
        if record.format != NET_FORMAT {
            return Err(Error::Format(format!("expected format `{NET_FORMAT}`, found `{}`", record.format)));
        }
        let layers = record
            .layers
            .into_iter()
            .map(|l| DenseLayer::new(l.in_dim, l.out_dim, l.weights, l.biases, l.activation))
            .collect::<Result<Vec<_>>>()?;
        let network = DenseNetwork::new(layers, record.output_unit)?;
        if let Some(m) = &record.metadata {
            if !m.reference_value.is_finite() || !m.flood_t.is_finite() {
                return Err(Error::Format("non-finite restructuring metadata".into()));
            }
        }
        Ok(Self { network, metadata: record.metadata })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::build_max_network;

    #[test]
    fn round_trip_preserves_bits() {
        let net = DenseNetwork::init_with_biases(&[3, 5, 4, 1], "eV", 9, 0.3).unwrap();
        let file = NetFile {
            network: net,
            metadata: Some(RestructureMetadata {
                reference_value: 0.1 + 0.2,
                anchor_input_hash: "abc".into(),
                flood_t: -1e-300,
                mode: "symmetric".into(),
            }),
        };
        let back = NetFile::from_json(&file.to_json()).unwrap();
        assert_eq!(back, file);
    }

    #[test]
    fn rejects_wrong_format_and_shapes() {
        let text = NetFile::new(build_max_network()).to_json();
        let bad = text.replace(NET_FORMAT, "refxplain-net/2");
        assert!(matches!(NetFile::from_json(&bad), Err(Error::Format(_))));
        let bad = text.replacen("\"out\": 3", "\"out\": 4", 1);
        assert!(matches!(NetFile::from_json(&bad), Err(Error::InvalidNetwork(_))));
        assert!(NetFile::from_json("{\"format\": \"refxplain-net/1\"}").is_err());
        assert!(NetFile::from_json("").is_err());
    }
}
