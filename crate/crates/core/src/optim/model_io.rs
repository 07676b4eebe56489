//! Versioned JSON model files. Weights are stored as decimal strings that
//! round-trip exactly.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optim::adam::ParamVector;
use crate::optim::classifier::ImageClassifierModel;
use crate::optim::features::{PixelFeatureConfig, IMAGE_FEATURES, PIXEL_FEATURES};
use crate::optim::segmenter::PixelSegmenterModel;

pub const MODEL_FORMAT: &str = "otbench-model";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    PixelSegmenter(PixelSegmenterModel),
    ImageClassifier(ImageClassifierModel),
}

#[derive(Serialize, Deserialize)]
struct Envelope {
    format: String,
    version: u32,
    #[serde(flatten)]
    body: Body,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum Body {
    PixelSegmenter {
        shape: Vec<usize>,
        weights: Vec<String>,
        features: PixelFeatureConfig,
        threshold: String,
    },
    ImageClassifier {
        shape: Vec<usize>,
        weights: Vec<String>,
        features: String,
        scaler_mean: Vec<String>,
        scaler_std: Vec<String>,
    },
}

const POOLED_FEATURES: &str = "pooled_mean_std_q10_q50_q90";

fn encode(values: &[f64]) -> Vec<String> {
    values.iter().map(|v| format!("{v:?}")).collect()
}

fn decode(values: &[String]) -> Result<Vec<f64>> {
    values
        .iter()
        .map(|s| {
            s.parse::<f64>()
                .map_err(|_| Error::ModelFormat(format!("bad number {s:?}")))
        })
        .collect()
}

fn decode_array(values: &[String]) -> Result<[f64; IMAGE_FEATURES]> {
    decode(values)?.try_into().map_err(|v: Vec<f64>| Error::LengthMismatch {
        expected: IMAGE_FEATURES,
        actual: v.len(),
    })
}

impl Model {
    pub fn to_json(&self) -> Result<String> {
        let body = match self {
            Model::PixelSegmenter(m) => Body::PixelSegmenter {
                shape: vec![PIXEL_FEATURES + 1],
                weights: encode(m.params.as_slice()),
                features: m.features,
                threshold: format!("{:?}", m.threshold),
            },
            Model::ImageClassifier(m) => Body::ImageClassifier {
                shape: vec![m.classes, IMAGE_FEATURES + 1],
                weights: encode(m.params.as_slice()),
                features: POOLED_FEATURES.into(),
                scaler_mean: encode(&m.scaler_mean),
                scaler_std: encode(&m.scaler_std),
            },
        };
        let env = Envelope {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            body,
        };
        Ok(serde_json::to_string_pretty(&env)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let env: Envelope = serde_json::from_str(text).map_err(|e| Error::ModelFormat(e.to_string()))?;
        if env.format != MODEL_FORMAT {
            return Err(Error::ModelFormat(format!("unexpected format {:?}", env.format)));
        }
        if env.version != MODEL_VERSION {
            return Err(Error::ModelFormat(format!("unsupported version {}", env.version)));
        }
        match env.body {
            Body::PixelSegmenter {
                shape,
                weights,
                features,
                threshold,
            } => {
                if shape != [PIXEL_FEATURES + 1] {
                    return Err(Error::ModelFormat(format!("bad segmenter shape {shape:?}")));
                }
                let threshold = decode(&[threshold])?[0];
                Ok(Model::PixelSegmenter(PixelSegmenterModel::new(
                    ParamVector::new(decode(&weights)?)?,
                    features,
                    threshold,
                )?))
            }
            Body::ImageClassifier {
                shape,
                weights,
                features,
                scaler_mean,
                scaler_std,
            } => {
                if shape.len() != 2 || shape[1] != IMAGE_FEATURES + 1 {
                    return Err(Error::ModelFormat(format!("bad classifier shape {shape:?}")));
                }
                if features != POOLED_FEATURES {
                    return Err(Error::ModelFormat(format!("unknown feature set {features:?}")));
                }
                Ok(Model::ImageClassifier(ImageClassifierModel::new(
                    shape[0],
                    ParamVector::new(decode(&weights)?)?,
                    decode_array(&scaler_mean)?,
                    decode_array(&scaler_std)?,
                )?))
            }
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        std::fs::write(path, self.to_json()? + "\n").map_err(|e| Error::io(path, e))
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

    #[test]
    fn segmenter_round_trip() {
        let m = Model::PixelSegmenter(
            PixelSegmenterModel::new(
                ParamVector::new(vec![0.1, -1.0 / 3.0, 2.5e-17, 7.0, -0.0]).unwrap(),
                PixelFeatureConfig::default(),
                0.5,
            )
            .unwrap(),
        );
        let json = m.to_json().unwrap();
        assert!(json.contains("\"version\": 1"));
        assert!(json.contains("\"kind\": \"pixel_segmenter\""));
        assert_eq!(Model::from_json(&json).unwrap(), m);
    }

    #[test]
    fn classifier_round_trip() {
        let params: Vec<f64> = (0..12).map(|i| i as f64 * 0.37 - 1.1).collect();
        let m = Model::ImageClassifier(
            ImageClassifierModel::new(
                2,
                ParamVector::new(params).unwrap(),
                [0.1, 0.2, 0.3, 0.4, 0.5],
                [1.0, 0.0, 0.3, 0.2, 0.1],
            )
            .unwrap(),
        );
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m/model.json");
        m.save(&path).unwrap();
        assert_eq!(Model::load(&path).unwrap(), m);
    }

    #[test]
    fn rejects_bad_files() {
        assert!(Model::from_json("{}").is_err());
        let bad = r#"{"format":"otbench-model","version":2,"kind":"pixel_segmenter","shape":[5],"weights":[],"features":{"window":5},"threshold":"0.5"}"#;
        assert!(matches!(Model::from_json(bad), Err(Error::ModelFormat(_))));
    }
}
